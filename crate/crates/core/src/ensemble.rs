use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Isometry group the random gates are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Unitary,
    Orthogonal,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 2] = [EnsembleKind::Unitary, EnsembleKind::Orthogonal];

    /// Shift `f_E(m)` in the row-sum identities: `m` for unitary, `2m` for orthogonal.
    pub fn shift(self, m: u64) -> u64 {
        match self {
            EnsembleKind::Unitary => m,
            EnsembleKind::Orthogonal => 2 * m,
        }
    }

    /// `∏_{m<k} (q + f_E(m))`, the Gram row sum.
    pub fn rising_product(self, q: f64, k: usize) -> f64 {
        (0..k as u64).map(|m| q + self.shift(m) as f64).product()
    }

    /// Haar moment of the limiting Porter-Thomas law: `k!` or `(2k-1)!!`.
    pub fn haar_moment(self, k: usize) -> f64 {
        self.rising_product(1.0, k)
    }

    /// Number of commutant elements at replica order `k`.
    pub fn commutant_size(self, k: usize) -> u128 {
        (0..k as u128)
            .map(|m| 1 + self.shift(m as u64) as u128)
            .product()
    }

    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::Unitary => "unitary",
            EnsembleKind::Orthogonal => "orthogonal",
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "unitary" | "u" => Ok(EnsembleKind::Unitary),
            "orthogonal" | "o" => Ok(EnsembleKind::Orthogonal),
            other => Err(Error::Parse(format!("unknown ensemble `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutant_sizes() {
        assert_eq!(EnsembleKind::Unitary.commutant_size(3), 6);
        assert_eq!(EnsembleKind::Orthogonal.commutant_size(2), 3);
        assert_eq!(EnsembleKind::Orthogonal.commutant_size(6), 10395);
        assert_eq!(EnsembleKind::Unitary.haar_moment(4), 24.0);
        assert_eq!(EnsembleKind::Orthogonal.haar_moment(3), 15.0);
    }

    #[test]
    fn parse_round_trip() {
        for e in EnsembleKind::ALL {
            assert_eq!(e.name().parse::<EnsembleKind>().unwrap(), e);
        }
        assert!("symplectic".parse::<EnsembleKind>().is_err());
    }
}
