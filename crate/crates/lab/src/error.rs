use std::path::PathBuf;

use anticoncentration::Error as CoreError;
use thiserror::Error;

use crate::config::Diagnostic;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_CAPACITY: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config:\n{}", render(.0))]
    Config(Vec<Diagnostic>),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
}

fn render(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

impl LabError {
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(d) if !d.is_empty() && d.iter().all(|d| d.capacity) => EXIT_CAPACITY,
            LabError::Config(_) => EXIT_CONFIG,
            LabError::Core(CoreError::Capacity { .. }) => EXIT_CAPACITY,
            LabError::Core(CoreError::Argument(_) | CoreError::Domain(_) | CoreError::EmptySample(_)) => EXIT_CONFIG,
            LabError::Core(_) | LabError::Output { .. } => EXIT_NUMERICAL,
        }
    }
}
