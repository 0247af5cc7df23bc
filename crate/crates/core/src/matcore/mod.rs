//! Dense complex linear algebra, standard gates, random ensembles and entropies.

pub mod gates;
pub mod io;
pub mod linalg;
pub mod random;
pub mod state;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gates::{gate, GateSpec};
pub use linalg::{kron, svd, ComplexMatrix, Svd};
pub use random::haar_unitary;
pub use state::{binary_entropy, partial_trace, shannon_entropy, von_neumann_entropy, DensityMatrix, PureState};

/// Split of a `d_a·d_b` dimensional space into systems 𝒜 and ℬ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    pub d_a: usize,
    pub d_b: usize,
}

impl Partition {
    pub const fn new(d_a: usize, d_b: usize) -> Self {
        Self { d_a, d_b }
    }

    pub const fn qubits() -> Self {
        Self::new(2, 2)
    }

    pub const fn total(&self) -> usize {
        self.d_a * self.d_b
    }

    /// Fails unless `m` is square with side `d_a·d_b`.
    pub fn check_square(&self, m: &ComplexMatrix) -> Result<()> {
        if self.d_a == 0 || self.d_b == 0 {
            return Err(Error::Dimension("partition dimensions must be positive".into()));
        }
        if m.nrows() != self.total() || m.ncols() != self.total() {
            return Err(Error::Dimension(format!(
                "{}×{} matrix does not match partition {self}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.d_a, self.d_b)
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("partition must look like dA:dB, got `{s}`"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let d_a: usize = a.trim().parse().map_err(|_| bad())?;
        let d_b: usize = b.trim().parse().map_err(|_| bad())?;
        if d_a == 0 || d_b == 0 {
            return Err(bad());
        }
        Ok(Self { d_a, d_b })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_parse() {
        assert_eq!("2:4".parse::<Partition>().unwrap(), Partition::new(2, 4));
        assert!("2x4".parse::<Partition>().is_err());
        assert!("0:4".parse::<Partition>().is_err());
        assert_eq!(Partition::new(3, 5).to_string(), "3:5");
    }
}
