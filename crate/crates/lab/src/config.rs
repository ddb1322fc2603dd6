//! Experiment configuration files.
//!
//! A config is a JSON object with exactly the keys `experiment`, `seed`,
//! `params` and optionally `workers` and `output_dir`. The `params` block is
//! parsed against the schema of the named experiment, and every object
//! rejects unknown keys.

use std::fmt;
use std::path::{Path, PathBuf};

use anticoncentration::circuit::{Architecture, CircuitSpec, KimParams, SamplingMode, DEFAULT_AMPLITUDE_CAP};
use anticoncentration::closed_forms::RmpsSpec;
use anticoncentration::commutant::DEFAULT_MAX_K;
use anticoncentration::estimation::{FitMode, FitWindow};
use anticoncentration::replica::{ContractionMethod, DEFAULT_TT_MAX_BOND, DEFAULT_TT_TOLERANCE, EXACT_CAPACITY};
use anticoncentration::EnsembleKind;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    HaarIpr,
    Rmps,
    Rpm,
    Simulate,
    Rtn,
    Fit,
    Collapse,
    Xeb,
    Distribution,
}

impl ExperimentName {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::HaarIpr => "haar-ipr",
            ExperimentName::Rmps => "rmps",
            ExperimentName::Rpm => "rpm",
            ExperimentName::Simulate => "simulate",
            ExperimentName::Rtn => "rtn",
            ExperimentName::Fit => "fit",
            ExperimentName::Collapse => "collapse",
            ExperimentName::Xeb => "xeb",
            ExperimentName::Distribution => "distribution",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_k_max() -> usize {
    5
}

fn default_d() -> usize {
    2
}

fn default_ensemble() -> EnsembleKind {
    EnsembleKind::Unitary
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaarIprParams {
    pub ensemble: EnsembleKind,
    /// Hilbert-space dimensions `D`.
    pub dims: Vec<f64>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmpsParams {
    pub ensemble: EnsembleKind,
    pub d: u64,
    pub chi: Vec<u64>,
    pub n: Vec<usize>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Staircase statevector realizations per point; 0 skips the check.
    #[serde(default)]
    pub monte_carlo_realizations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RpmParams {
    pub epsilon: f64,
    pub t: Vec<usize>,
    pub n: Vec<usize>,
    pub k: Vec<usize>,
}

/// A circuit family without its seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParams {
    pub architecture: Architecture,
    pub n: usize,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default)]
    pub depth: usize,
    #[serde(default)]
    pub chi: Option<u64>,
    #[serde(default = "default_ensemble")]
    pub ensemble: EnsembleKind,
    #[serde(default)]
    pub kim: Option<KimParams>,
}

impl CircuitParams {
    pub fn spec(&self, seed: u64) -> CircuitSpec {
        let mut spec = CircuitSpec::brickwork(self.n, self.depth, self.ensemble, seed);
        spec.architecture = self.architecture;
        spec.d = self.d;
        spec.chi = self.chi;
        spec.kim = match self.architecture {
            Architecture::KickedIsing => Some(self.kim.unwrap_or_default()),
            _ => self.kim,
        };
        if self.architecture == Architecture::KickedIsing {
            spec.ensemble = EnsembleKind::Orthogonal;
        }
        spec
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub circuit: CircuitParams,
    pub realizations: usize,
    pub sampling: SamplingMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Exact,
    TensorTrain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionParams {
    pub method: MethodName,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub max_bond: Option<usize>,
}

impl ContractionParams {
    pub fn method(&self) -> ContractionMethod {
        match self.method {
            MethodName::Exact => ContractionMethod::Exact,
            MethodName::TensorTrain => ContractionMethod::TensorTrain {
                tol: self.tolerance.unwrap_or(DEFAULT_TT_TOLERANCE),
                max_bond: self.max_bond.unwrap_or(DEFAULT_TT_MAX_BOND),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtnParams {
    pub ensemble: EnsembleKind,
    pub n: Vec<usize>,
    pub t_max: usize,
    pub contraction: ContractionParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitParams {
    /// Overlap CSV written by `simulate`; relative paths are resolved
    /// against the config file's directory.
    pub input: PathBuf,
    pub ensemble: EnsembleKind,
    pub mode: FitMode,
    #[serde(default)]
    pub bootstrap_resamples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseParams {
    pub ensemble: EnsembleKind,
    pub n: Vec<usize>,
    pub t_max: usize,
    pub contraction: ContractionParams,
    #[serde(default)]
    pub window: Option<FitWindow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XebParams {
    pub n: usize,
    pub depths: Vec<usize>,
    #[serde(default = "default_ensemble")]
    pub ensemble: EnsembleKind,
    /// Total error rates `εN`.
    pub epsilon_n: Vec<f64>,
    pub realizations: usize,
    pub trajectories: usize,
    pub bitstrings_per_trajectory: usize,
}

fn default_bins() -> usize {
    60
}

fn default_omega_max() -> f64 {
    12.0
}

fn default_mode() -> FitMode {
    FitMode::AlphaBeta
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionParams {
    pub circuit: CircuitParams,
    pub realizations: usize,
    /// Uniformly drawn bitstrings per realization.
    pub samples_per_realization: usize,
    #[serde(default = "default_mode")]
    pub mode: FitMode,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Upper edge of the histogram.
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    HaarIpr(HaarIprParams),
    Rmps(RmpsParams),
    Rpm(RpmParams),
    Simulate(SimulateParams),
    Rtn(RtnParams),
    Fit(FitParams),
    Collapse(CollapseParams),
    Xeb(XebParams),
    Distribution(DistributionParams),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig<'a> {
    experiment: ExperimentName,
    seed: u64,
    #[serde(default)]
    workers: Option<usize>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(borrow)]
    params: &'a RawValue,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub params: Params,
    /// Directory relative inputs are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// One problem found in a config file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    /// Dotted path of the offending field, or `line:column` for parse errors.
    pub location: String,
    pub message: String,
    pub capacity: bool,
}

impl Diagnostic {
    fn field(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self { location: location.into(), message: message.into(), capacity: false }
    }

    fn capacity(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self { location: location.into(), message: message.into(), capacity: true }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.capacity { "capacity" } else { "error" };
        write!(f, "{tag}: {}: {}", self.location, self.message)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

fn parse_error(e: &serde_json::Error, line: usize, column: usize) -> Diagnostic {
    let msg = e.to_string();
    let msg = match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    };
    Diagnostic::field(format!("line {line}, column {column}"), msg)
}

fn parse_params<T: for<'de> Deserialize<'de>>(
    text: &str,
    raw: &RawValue,
    wrap: fn(T) -> Params,
) -> Result<Params, Diagnostic> {
    let block = raw.get();
    serde_json::from_str::<T>(block).map(wrap).map_err(|e| {
        // map the position inside the block back to the file
        let start = block.as_ptr() as usize - text.as_ptr() as usize;
        let (l0, c0) = line_col(text, start);
        let (line, column) = if e.line() <= 1 { (l0, c0 + e.column().saturating_sub(1)) } else { (l0 + e.line() - 1, e.column()) };
        let mut d = parse_error(&e, line, column);
        d.message = format!("params: {}", d.message);
        d
    })
}

impl ExperimentConfig {
    /// Parses a config document. Schema errors carry a line and column.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, Diagnostic> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| parse_error(&e, e.line(), e.column()))?;
        let params = match raw.experiment {
            ExperimentName::HaarIpr => parse_params(text, raw.params, Params::HaarIpr),
            ExperimentName::Rmps => parse_params(text, raw.params, Params::Rmps),
            ExperimentName::Rpm => parse_params(text, raw.params, Params::Rpm),
            ExperimentName::Simulate => parse_params(text, raw.params, Params::Simulate),
            ExperimentName::Rtn => parse_params(text, raw.params, Params::Rtn),
            ExperimentName::Fit => parse_params(text, raw.params, Params::Fit),
            ExperimentName::Collapse => parse_params(text, raw.params, Params::Collapse),
            ExperimentName::Xeb => parse_params(text, raw.params, Params::Xeb),
            ExperimentName::Distribution => parse_params(text, raw.params, Params::Distribution),
        }?;
        Ok(Self {
            experiment: raw.experiment,
            seed: raw.seed,
            workers: raw.workers,
            output_dir: raw.output_dir,
            params,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, Diagnostic> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Diagnostic::field(path.display().to_string(), format!("cannot read config: {e}")))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    /// SHA-256 of the canonical encoding of experiment, seed and params.
    /// Worker count and output directory do not enter.
    pub fn digest(&self) -> String {
        let canonical = serde_json::json!({
            "experiment": self.experiment,
            "seed": self.seed,
            "params": self.params,
        });
        anticoncentration::persist::sha256_hex(canonical.to_string().as_bytes())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Semantic checks that need no computation.
    pub fn check(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.workers == Some(0) {
            out.push(Diagnostic::field("workers", "worker count must be positive"));
        }
        match &self.params {
            Params::HaarIpr(p) => {
                if p.dims.is_empty() {
                    out.push(Diagnostic::field("params.dims", "need at least one dimension"));
                }
                for (i, d) in p.dims.iter().enumerate() {
                    if !(*d >= 1.0) || !d.is_finite() {
                        out.push(Diagnostic::field(format!("params.dims[{i}]"), format!("dimension {d} must be a finite number ≥ 1")));
                    }
                }
                check_k(&mut out, "params.k_max", p.k_max, usize::MAX);
            }
            Params::Rmps(p) => {
                check_k(&mut out, "params.k_max", p.k_max, usize::MAX);
                for (i, &chi) in p.chi.iter().enumerate() {
                    for (j, &n) in p.n.iter().enumerate() {
                        let spec = RmpsSpec { d: p.d, chi, n, ensemble: p.ensemble };
                        if let Err(e) = spec.validate() {
                            out.push(Diagnostic::field(format!("params.chi[{i}], params.n[{j}]"), e.to_string()));
                        } else if p.monte_carlo_realizations > 0 {
                            check_statevector(&mut out, &format!("params.n[{j}]"), n, p.d as usize);
                        }
                    }
                }
            }
            Params::Rpm(p) => {
                if !(p.epsilon > 0.0) {
                    out.push(Diagnostic::field("params.epsilon", "ε must be positive"));
                }
                for (i, &t) in p.t.iter().enumerate() {
                    if t % 2 != 0 {
                        out.push(Diagnostic::field(format!("params.t[{i}]"), format!("depth t = {t} must be even")));
                    }
                }
                for (i, &n) in p.n.iter().enumerate() {
                    if n < 2 {
                        out.push(Diagnostic::field(format!("params.n[{i}]"), format!("N = {n} must be at least 2")));
                    }
                }
                for (i, &k) in p.k.iter().enumerate() {
                    check_k(&mut out, &format!("params.k[{i}]"), k, DEFAULT_MAX_K);
                }
            }
            Params::Simulate(p) => {
                check_circuit(&mut out, "params.circuit", &p.circuit);
                if p.realizations == 0 {
                    out.push(Diagnostic::field("params.realizations", "need at least one realization"));
                }
                if p.sampling == SamplingMode::UniformBitstrings(0) {
                    out.push(Diagnostic::field("params.sampling", "requested zero bitstrings"));
                }
            }
            Params::Rtn(p) => check_replica(&mut out, p.ensemble, &p.n, p.t_max, &p.contraction),
            Params::Collapse(p) => {
                check_replica(&mut out, p.ensemble, &p.n, p.t_max, &p.contraction);
                if let Some(w) = p.window {
                    if !(w.t_min <= w.t_max) || w.t_max > p.t_max as f64 {
                        out.push(Diagnostic::field("params.window", format!("window [{}, {}] must lie inside [0, {}]", w.t_min, w.t_max, p.t_max)));
                    }
                }
            }
            Params::Fit(p) => {
                let path = self.resolve(&p.input);
                if !path.is_file() {
                    out.push(Diagnostic::field("params.input", format!("{} does not exist", path.display())));
                }
            }
            Params::Xeb(p) => {
                check_statevector(&mut out, "params.n", p.n, 2);
                if p.n < 2 {
                    out.push(Diagnostic::field("params.n", "need N ≥ 2"));
                }
                for (i, &e) in p.epsilon_n.iter().enumerate() {
                    if !(0.0..=p.n as f64).contains(&e) {
                        out.push(Diagnostic::field(format!("params.epsilon_n[{i}]"), format!("εN = {e} must lie in [0, N]")));
                    }
                }
                for (field, v) in [
                    ("realizations", p.realizations),
                    ("trajectories", p.trajectories),
                    ("bitstrings_per_trajectory", p.bitstrings_per_trajectory),
                ] {
                    if v == 0 {
                        out.push(Diagnostic::field(format!("params.{field}"), "must be positive"));
                    }
                }
                if p.depths.is_empty() || p.epsilon_n.is_empty() {
                    out.push(Diagnostic::field("params", "need at least one depth and one error rate"));
                }
            }
            Params::Distribution(p) => {
                check_circuit(&mut out, "params.circuit", &p.circuit);
                if p.realizations == 0 || p.samples_per_realization == 0 {
                    out.push(Diagnostic::field("params", "realizations and samples_per_realization must be positive"));
                }
                if p.bins == 0 || !(p.omega_max > 0.0) {
                    out.push(Diagnostic::field("params", "histogram needs bins ≥ 1 and omega_max > 0"));
                }
            }
        }
        out
    }
}

fn check_k(out: &mut Vec<Diagnostic>, field: &str, k: usize, max: usize) {
    if k == 0 {
        out.push(Diagnostic::field(field, "k must be at least 1"));
    } else if k > max {
        out.push(Diagnostic::capacity(field, format!("k = {k} exceeds the replica order cap {max}")));
    }
}

fn cap_message(n: usize, d: usize) -> String {
    format!(
        "a statevector of N = {n} sites with d = {d} needs {d}^{n} amplitudes, above the cap 2^26 = {DEFAULT_AMPLITUDE_CAP}"
    )
}

fn check_statevector(out: &mut Vec<Diagnostic>, field: &str, n: usize, d: usize) {
    let amplitudes = (d as u128).checked_pow(n as u32);
    if amplitudes.is_none_or(|a| a > DEFAULT_AMPLITUDE_CAP as u128) {
        out.push(Diagnostic::capacity(field, cap_message(n, d)));
    }
}

fn check_circuit(out: &mut Vec<Diagnostic>, field: &str, c: &CircuitParams) {
    let before = out.len();
    check_statevector(out, &format!("{field}.n"), c.n, c.d);
    if out.len() > before {
        return;
    }
    if let Err(e) = c.spec(0).validate(DEFAULT_AMPLITUDE_CAP) {
        out.push(Diagnostic::field(field, e.to_string()));
    }
}

fn check_replica(out: &mut Vec<Diagnostic>, ensemble: EnsembleKind, sizes: &[usize], t_max: usize, c: &ContractionParams) {
    if sizes.is_empty() {
        out.push(Diagnostic::field("params.n", "need at least one system size"));
    }
    if t_max == 0 {
        out.push(Diagnostic::field("params.t_max", "t_max must be at least 1"));
    }
    let local = ensemble.commutant_size(2);
    for (i, &n) in sizes.iter().enumerate() {
        if n < 2 || n % 2 != 0 {
            out.push(Diagnostic::field(
                format!("params.n[{i}]"),
                format!("N = {n} is not allowed: the replica network needs an even N ≥ 2"),
            ));
            continue;
        }
        if c.method == MethodName::Exact {
            let size = local.checked_pow((n / 2 + 1) as u32);
            if size.is_none_or(|s| s > EXACT_CAPACITY) {
                out.push(Diagnostic::capacity(
                    format!("params.n[{i}]"),
                    format!("exact contraction at N = {n} needs {local}^{} entries, above the cap {EXACT_CAPACITY}; use tensor_train", n / 2 + 1),
                ));
            }
        }
    }
    if let Some(tol) = c.tolerance {
        if !(tol > 0.0) {
            out.push(Diagnostic::field("params.contraction.tolerance", "tolerance must be positive"));
        }
    }
    if c.max_bond == Some(0) {
        out.push(Diagnostic::field("params.contraction.max_bond", "max_bond must be positive"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, Diagnostic> {
        ExperimentConfig::parse(text, Path::new("."))
    }

    #[test]
    fn parses_and_digests() {
        let text = r#"{"experiment": "rtn", "seed": 3, "workers": 2,
            "params": {"ensemble": "unitary", "n": [4, 6], "t_max": 5, "contraction": {"method": "exact"}}}"#;
        let c = parse(text).unwrap();
        assert!(c.check().is_empty());
        let mut other = c.clone();
        other.workers = Some(7);
        assert_eq!(c.digest(), other.digest());
        other.seed = 4;
        assert_ne!(c.digest(), other.digest());
    }

    #[test]
    fn unknown_fields_and_missing_seed() {
        let e = parse(r#"{"experiment": "rpm", "seed": 1, "colour": 2, "params": {}}"#).unwrap_err();
        assert!(e.message.contains("colour"), "{e}");
        let e = parse(r#"{"experiment": "rpm", "params": {"epsilon": 1, "t": [2], "n": [3], "k": [2]}}"#).unwrap_err();
        assert!(e.message.contains("seed"), "{e}");
    }

    #[test]
    fn params_errors_point_into_the_file() {
        let text = "{\n  \"experiment\": \"rpm\",\n  \"seed\": 1,\n  \"params\": {\n    \"epsilon\": 1,\n    \"bogus\": 2\n  }\n}";
        let e = parse(text).unwrap_err();
        assert!(e.location.starts_with("line 6"), "{e}");
        assert!(e.message.contains("bogus"));
    }
}
