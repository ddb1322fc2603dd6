//! Pipelines behind each experiment name.

use anticoncentration::circuit::{
    ensemble_averages, overlap_statistics, realization_seed, run_circuit, CircuitSpec, MeanEstimate, OverlapSampleSet,
    SampleMeta, SamplingMode, DEFAULT_AMPLITUDE_CAP,
};
use anticoncentration::closed_forms::{
    haar_ipr, haar_ipr_asymptotic, rmps_ipr_exact, rmps_scaling_params, rpm_ipr_asymptotic, rpm_ipr_exact,
    universal_ratio, RmpsSpec, RpmSpec,
};
use anticoncentration::estimation::{
    collapse_coordinate, fit_decay_pooled, fit_decay_timescale, mle_fit_with, run_xeb, DecayFit, FitOptions,
    FitResult, PooledDecayFit, XebConfig, XebReport,
};
use anticoncentration::persist::{load_overlaps, save_annealed, save_overlaps, OVERLAP_KIND};
use anticoncentration::replica::delta_s2_series;
use anticoncentration::rng::{derive_seed, stream, Domain};
use anticoncentration::universal::{UniversalDistribution, UniversalParams};
use anticoncentration::EnsembleKind;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{
    CollapseParams, DistributionParams, ExperimentConfig, FitParams, HaarIprParams, Params, RmpsParams, RpmParams,
    RtnParams, SimulateParams, XebParams,
};
use crate::error::LabError;
use crate::manifest::Outputs;

type Result<T> = std::result::Result<T, LabError>;

/// Points of the model pdf/cdf table.
const MODEL_GRID_POINTS: usize = 400;
const MODEL_GRID_TOP: f64 = 20.0;

pub fn run(config: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let seed = config.seed;
    match &config.params {
        Params::HaarIpr(p) => haar(p, out),
        Params::Rmps(p) => rmps(p, seed, out),
        Params::Rpm(p) => rpm(p, out),
        Params::Simulate(p) => simulate(p, seed, out),
        Params::Rtn(p) => rtn(p, out),
        Params::Fit(p) => fit(config, p, out),
        Params::Collapse(p) => collapse(p, out),
        Params::Xeb(p) => xeb(p, seed, out),
        Params::Distribution(p) => distribution(p, seed, out),
    }
}

#[derive(Serialize)]
struct HaarRow {
    ensemble: EnsembleKind,
    #[serde(rename = "D")]
    dim: f64,
    k: usize,
    ipr: f64,
    asymptotic: f64,
}

fn haar(p: &HaarIprParams, out: &mut Outputs) -> Result<()> {
    let mut rows = Vec::new();
    for &dim in &p.dims {
        for k in 1..=p.k_max {
            rows.push(HaarRow {
                ensemble: p.ensemble,
                dim,
                k,
                ipr: haar_ipr(p.ensemble, dim, k)?,
                asymptotic: haar_ipr_asymptotic(p.ensemble, dim, k),
            });
        }
    }
    out.table("haar_ipr.csv", "haar-ipr", &["ensemble", "D", "k", "ipr", "asymptotic"], &rows, json!({}))?;
    Ok(())
}

#[derive(Serialize)]
struct RmpsRow {
    ensemble: EnsembleKind,
    d: u64,
    chi: u64,
    #[serde(rename = "N")]
    n: usize,
    k: usize,
    x: f64,
    alpha: f64,
    beta: f64,
    exact: f64,
    haar: f64,
    ratio: f64,
    universal_ratio: f64,
    mc_mean: Option<f64>,
    mc_std_error: Option<f64>,
}

fn rmps(p: &RmpsParams, seed: u64, out: &mut Outputs) -> Result<()> {
    let mut rows = Vec::new();
    let mut point = 0u64;
    for &chi in &p.chi {
        for &n in &p.n {
            let spec = RmpsSpec { d: p.d, chi, n, ensemble: p.ensemble };
            let sv = rmps_scaling_params(&spec)?;
            let mc = if p.monte_carlo_realizations > 0 {
                let circuit = CircuitSpec::staircase(n, p.d as usize, chi, p.ensemble, derive_seed(seed, Domain::Realization, point));
                Some(ensemble_averages(&circuit, p.monte_carlo_realizations)?)
            } else {
                None
            };
            point += 1;
            let dim = (p.d as f64).powi(n as i32);
            for k in 1..=p.k_max {
                let exact = rmps_ipr_exact(&spec, k)?;
                let haar = haar_ipr(p.ensemble, dim, k)?;
                let est: Option<&MeanEstimate> = mc.as_ref().and_then(|m| m.ipr.get(k - 1));
                rows.push(RmpsRow {
                    ensemble: p.ensemble,
                    d: p.d,
                    chi,
                    n,
                    k,
                    x: sv.x,
                    alpha: sv.alpha,
                    beta: sv.beta,
                    exact,
                    haar,
                    ratio: exact / haar,
                    universal_ratio: universal_ratio(k, sv.alpha, sv.beta),
                    mc_mean: est.map(|e| e.mean),
                    mc_std_error: est.map(|e| e.std_error),
                });
            }
        }
    }
    let columns = [
        "ensemble", "d", "chi", "N", "k", "x", "alpha", "beta", "exact", "haar", "ratio", "universal_ratio", "mc_mean",
        "mc_std_error",
    ];
    out.table("rmps.csv", "rmps-ipr", &columns, &rows, json!({"realizations": p.monte_carlo_realizations}))?;
    Ok(())
}

#[derive(Serialize)]
struct RpmRow {
    epsilon: f64,
    t: usize,
    #[serde(rename = "N")]
    n: usize,
    k: usize,
    x: f64,
    raw: f64,
    ratio: f64,
    asymptotic: f64,
}

fn rpm(p: &RpmParams, out: &mut Outputs) -> Result<()> {
    let mut rows = Vec::new();
    for &t in &p.t {
        for &n in &p.n {
            for &k in &p.k {
                let spec = RpmSpec { epsilon: p.epsilon, t, n, k };
                let (raw, ratio) = rpm_ipr_exact(&spec)?;
                let x = spec.x();
                rows.push(RpmRow {
                    epsilon: p.epsilon,
                    t,
                    n,
                    k,
                    x,
                    raw,
                    ratio,
                    asymptotic: rpm_ipr_asymptotic(k, x, n as f64)?,
                });
            }
        }
    }
    out.table("rpm.csv", "rpm-ipr", &["epsilon", "t", "N", "k", "x", "raw", "ratio", "asymptotic"], &rows, json!({}))?;
    Ok(())
}

#[derive(Serialize)]
struct RealizationRow {
    realization: usize,
    seed: u64,
    #[serde(rename = "I1")]
    i1: f64,
    #[serde(rename = "I2")]
    i2: f64,
    #[serde(rename = "I3")]
    i3: f64,
    #[serde(rename = "I4")]
    i4: f64,
    #[serde(rename = "I5")]
    i5: f64,
    #[serde(rename = "S2")]
    s2: f64,
    half_chain_purity: f64,
}

#[derive(Serialize)]
struct SimulationSummary {
    spec: CircuitSpec,
    realizations: usize,
    sampling: String,
    ipr: Vec<MeanEstimate>,
    half_chain_purity: MeanEstimate,
}

/// Runs the realizations in parallel and returns the per-realization
/// overlap samples in index order.
fn sample_circuits(
    make: impl Fn(u64) -> CircuitSpec + Sync,
    realizations: usize,
    mode: SamplingMode,
    seed: u64,
) -> Result<Vec<(u64, anticoncentration::circuit::OverlapStatistics)>> {
    let per = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let spec = make(realization_seed(seed, r));
            let state = run_circuit(&spec, None)?;
            let meta = SampleMeta { spec_digest: spec.digest(), mode: String::new(), realizations: 1, seed: spec.seed };
            let st = overlap_statistics(&state, mode, &mut stream(seed, Domain::Sampling, r), meta)?;
            Ok((spec.seed, st))
        })
        .collect::<anticoncentration::Result<Vec<_>>>()?;
    Ok(per)
}

fn pooled_set(per: &[(u64, anticoncentration::circuit::OverlapStatistics)], family: &CircuitSpec, seed: u64) -> Result<OverlapSampleSet> {
    let sets: Vec<OverlapSampleSet> = per.iter().map(|(_, st)| st.samples.clone()).collect();
    let mut pooled = OverlapSampleSet::pooled(&sets)?;
    pooled.meta.spec_digest = family.digest();
    pooled.meta.seed = seed;
    Ok(pooled)
}

fn simulate(p: &SimulateParams, seed: u64, out: &mut Outputs) -> Result<()> {
    let family = p.circuit.spec(seed);
    family.validate(DEFAULT_AMPLITUDE_CAP)?;
    let per = sample_circuits(|s| p.circuit.spec(s), p.realizations, p.sampling, seed)?;
    let pooled = pooled_set(&per, &family, seed)?;
    save_overlaps(&pooled, &out.path("overlaps.csv"))?;
    out.record_table("overlaps.csv");
    let rows: Vec<RealizationRow> = per
        .iter()
        .enumerate()
        .map(|(i, (s, st))| RealizationRow {
            realization: i,
            seed: *s,
            i1: st.ipr[0],
            i2: st.ipr[1],
            i3: st.ipr[2],
            i4: st.ipr[3],
            i5: st.ipr[4],
            s2: st.s2,
            half_chain_purity: st.half_chain_purity,
        })
        .collect();
    let columns = ["realization", "seed", "I1", "I2", "I3", "I4", "I5", "S2", "half_chain_purity"];
    out.table("realizations.csv", "realization-statistics", &columns, &rows, json!({"spec_digest": family.digest()}))?;
    let column = |k: usize| per.iter().map(|(_, st)| st.ipr[k]).collect::<Vec<_>>();
    let summary = SimulationSummary {
        spec: family.clone(),
        realizations: p.realizations,
        sampling: p.sampling.label(),
        ipr: (0..5).map(|k| MeanEstimate::from_values(&column(k))).collect(),
        half_chain_purity: MeanEstimate::from_values(&per.iter().map(|(_, st)| st.half_chain_purity).collect::<Vec<_>>()),
    };
    out.json("summary.json", &summary)
}

fn rtn(p: &RtnParams, out: &mut Outputs) -> Result<()> {
    let method = p.contraction.method();
    let series = delta_s2_series(&p.n, p.t_max, p.ensemble, method)?;
    save_annealed(&series, &out.path("annealed.csv"), json!({"method": method.label(), "t_max": p.t_max}))?;
    out.record_table("annealed.csv");
    Ok(())
}

#[derive(Serialize)]
struct ModelRow {
    omega: f64,
    pdf: f64,
    cdf: f64,
}

/// `(ω, pdf, cdf)` of the fitted universal law on a midpoint grid.
fn model_table(params: UniversalParams, out: &mut Outputs) -> Result<UniversalDistribution> {
    let dist = UniversalDistribution::new(params)?;
    let h = MODEL_GRID_TOP / MODEL_GRID_POINTS as f64;
    let rows = (0..MODEL_GRID_POINTS)
        .map(|i| {
            let omega = (i as f64 + 0.5) * h;
            Ok(ModelRow { omega, pdf: dist.pdf(omega)?, cdf: dist.cdf(omega)? })
        })
        .collect::<anticoncentration::Result<Vec<_>>>()?;
    let meta = json!({"ensemble": params.ensemble, "alpha": params.alpha, "beta": params.beta});
    out.table("pdf.csv", "universal-pdf", &["omega", "pdf", "cdf"], &rows, meta)?;
    Ok(dist)
}

fn fit_options(seed: u64, resamples: Option<usize>) -> FitOptions {
    let mut opts = FitOptions { bootstrap_seed: seed, ..FitOptions::default() };
    if let Some(r) = resamples {
        opts.bootstrap_resamples = r;
    }
    opts
}

fn fit(config: &ExperimentConfig, p: &FitParams, out: &mut Outputs) -> Result<()> {
    let path = config.resolve(&p.input);
    let set = load_overlaps(&path)?;
    let result: FitResult = mle_fit_with(&set.samples, p.ensemble, p.mode, &fit_options(config.seed, p.bootstrap_resamples))?;
    out.json("fit.json", &json!({"input": set.meta, "input_kind": OVERLAP_KIND, "fit": result}))?;
    model_table(result.params(), out)?;
    Ok(())
}

#[derive(Serialize)]
struct CollapseRow {
    #[serde(rename = "N")]
    n: usize,
    t: f64,
    x: f64,
    #[serde(rename = "delta_S2_over_N")]
    scaled: f64,
}

#[derive(Serialize)]
struct CollapseReport {
    ensemble: EnsembleKind,
    method: &'static str,
    tau: f64,
    tau_std_error: f64,
    pooled: PooledDecayFit,
    per_size: Vec<DecayFit>,
}

fn collapse(p: &CollapseParams, out: &mut Outputs) -> Result<()> {
    let method = p.contraction.method();
    let series = delta_s2_series(&p.n, p.t_max, p.ensemble, method)?;
    save_annealed(&series, &out.path("delta_s2.csv"), json!({"method": method.label(), "t_max": p.t_max}))?;
    out.record_table("delta_s2.csv");
    let groups: Vec<(usize, Vec<(f64, f64)>)> = p.n.iter().map(|&n| (n, series.delta_s2_of(n))).collect();
    let per_size = groups
        .iter()
        .map(|(n, s)| fit_decay_timescale(s, *n, p.window))
        .collect::<anticoncentration::Result<Vec<_>>>()?;
    let pooled = fit_decay_pooled(&groups, p.window)?;
    let rows: Vec<CollapseRow> = groups
        .iter()
        .flat_map(|(n, s)| {
            s.iter().map(|&(t, v)| CollapseRow { n: *n, t, x: collapse_coordinate(*n, t, pooled.tau), scaled: v / *n as f64 })
        })
        .collect();
    out.table("collapse.csv", "decay-collapse", &["N", "t", "x", "delta_S2_over_N"], &rows, json!({"tau": pooled.tau}))?;
    out.json(
        "decay_fit.json",
        &CollapseReport {
            ensemble: p.ensemble,
            method: method.label(),
            tau: pooled.tau,
            tau_std_error: pooled.tau_std_error,
            pooled,
            per_size,
        },
    )
}

#[derive(Serialize)]
struct XebRow {
    #[serde(rename = "N")]
    n: usize,
    t: usize,
    epsilon_n: f64,
    xeb: f64,
    xeb_std_error: f64,
    alpha: f64,
    beta: f64,
    fidelity_estimate: f64,
    fidelity_std_error: f64,
    reference_fidelity: f64,
}

fn xeb(p: &XebParams, seed: u64, out: &mut Outputs) -> Result<()> {
    let mut reports: Vec<XebReport> = Vec::new();
    let mut rows = Vec::new();
    for (i, &eps_n) in p.epsilon_n.iter().enumerate() {
        for (j, &t) in p.depths.iter().enumerate() {
            let index = (i * p.depths.len() + j) as u64;
            let report = run_xeb(&XebConfig {
                n: p.n,
                t,
                ensemble: p.ensemble,
                epsilon: eps_n / p.n as f64,
                realizations: p.realizations,
                trajectories: p.trajectories,
                bitstrings_per_trajectory: p.bitstrings_per_trajectory,
                seed: derive_seed(seed, Domain::Realization, index),
            })?;
            rows.push(XebRow {
                n: p.n,
                t,
                epsilon_n: eps_n,
                xeb: report.xeb_value,
                xeb_std_error: report.xeb_std_error,
                alpha: report.alpha,
                beta: report.beta,
                fidelity_estimate: report.fidelity_estimate,
                fidelity_std_error: report.fidelity_std_error,
                reference_fidelity: report.reference_fidelity,
            });
            reports.push(report);
        }
    }
    let columns = [
        "N", "t", "epsilon_n", "xeb", "xeb_std_error", "alpha", "beta", "fidelity_estimate", "fidelity_std_error",
        "reference_fidelity",
    ];
    out.table("xeb.csv", "xeb-benchmark", &columns, &rows, json!({}))?;
    out.json("xeb.json", &reports)
}

#[derive(Serialize)]
struct HistogramRow {
    bin_low: f64,
    bin_high: f64,
    count: u64,
    density: f64,
    model_density: f64,
}

fn distribution(p: &DistributionParams, seed: u64, out: &mut Outputs) -> Result<()> {
    let family = p.circuit.spec(seed);
    family.validate(DEFAULT_AMPLITUDE_CAP)?;
    let mode = SamplingMode::UniformBitstrings(p.samples_per_realization);
    let per = sample_circuits(|s| p.circuit.spec(s), p.realizations, mode, seed)?;
    let pooled = pooled_set(&per, &family, seed)?;
    save_overlaps(&pooled, &out.path("overlaps.csv"))?;
    out.record_table("overlaps.csv");
    let result = mle_fit_with(&pooled.samples, family.ensemble, p.mode, &fit_options(seed, None))?;
    out.json("fit.json", &json!({"input": pooled.meta, "fit": result}))?;
    let dist = model_table(result.params(), out)?;
    let width = p.omega_max / p.bins as f64;
    let mut counts = vec![0u64; p.bins];
    for &w in &pooled.samples {
        let b = (w / width) as usize;
        if b < p.bins {
            counts[b] += 1;
        }
    }
    let total = pooled.len() as f64;
    let rows = counts
        .iter()
        .enumerate()
        .map(|(b, &count)| {
            let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
            Ok(HistogramRow {
                bin_low: lo,
                bin_high: hi,
                count,
                density: count as f64 / (total * width),
                model_density: (dist.positive_cdf(hi)? - dist.positive_cdf(lo)?) / width,
            })
        })
        .collect::<anticoncentration::Result<Vec<_>>>()?;
    let columns = ["bin_low", "bin_high", "count", "density", "model_density"];
    out.table("histogram.csv", "overlap-histogram", &columns, &rows, json!({"samples": pooled.len()}))?;
    Ok(())
}
