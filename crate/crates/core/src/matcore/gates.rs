//! Registry of named gates and the gate-spec string grammar
//! (`name` or `name:param1,param2`, e.g. `up:0.3`, `qft:5`, `haar:4,12345`).

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;

use super::io::read_matrix;
use super::linalg::{c, identity, kron, ComplexMatrix, I, ONE, ZERO};
use super::random::haar_unitary;
use super::Partition;
use crate::error::{Error, Result};

pub fn pauli_i() -> ComplexMatrix {
    identity(2)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `[I, X, Y, Z]`.
pub fn paulis() -> [ComplexMatrix; 4] {
    [pauli_i(), pauli_x(), pauli_y(), pauli_z()]
}

pub fn hadamard() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
}

/// Controlled-NOT with control on the first qubit.
pub fn cnot() -> ComplexMatrix {
    permutation(&[0, 1, 3, 2])
}

pub fn swap() -> ComplexMatrix {
    permutation(&[0, 2, 1, 3])
}

/// Swap of two `d`-dimensional systems.
pub fn swap_qudits(d: usize) -> ComplexMatrix {
    let perm: Vec<usize> = (0..d * d).map(|idx| (idx % d) * d + idx / d).collect();
    permutation(&perm)
}

/// Permutation matrix sending basis state `j` to `perm[j]`.
pub fn permutation(perm: &[usize]) -> ComplexMatrix {
    let n = perm.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for (j, &t) in perm.iter().enumerate() {
        m[(t, j)] = ONE;
    }
    m
}

/// Doubly-controlled NOT on three qubits with the NOT on qubit `target` (0, 1 or 2).
pub fn toffoli(target: usize) -> Result<ComplexMatrix> {
    if target > 2 {
        return Err(Error::InvalidArgument(format!("toffoli target must be 0, 1 or 2, got {target}")));
    }
    let flip = 1usize << (2 - target);
    let perm: Vec<usize> = (0..8)
        .map(|s| {
            let controls_set = (0..3).filter(|&q| q != target).all(|q| s & (1 << (2 - q)) != 0);
            if controls_set {
                s ^ flip
            } else {
                s
            }
        })
        .collect();
    Ok(permutation(&perm))
}

/// `√(1−p)·I⊗I + i√p·X⊗X`, the normal form of every Schmidt-number-2 two-qubit unitary.
pub fn controlled_x_form(p: f64) -> Result<ComplexMatrix> {
    check_probability(p)?;
    let xx = kron(&pauli_x(), &pauli_x());
    Ok(identity(4).scale((1.0 - p).sqrt()) + xx * c(0.0, p.sqrt()))
}

/// `U_p = (√(1−p)·I⊗I + i√p·X⊗X)(√(1−p)·I⊗I + i√p·Z⊗Z)`.
pub fn up(p: f64) -> Result<ComplexMatrix> {
    check_probability(p)?;
    let zz = kron(&pauli_z(), &pauli_z());
    let zpart = identity(4).scale((1.0 - p).sqrt()) + zz * c(0.0, p.sqrt());
    Ok(controlled_x_form(p)? * zpart)
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("p must lie in [0,1], got {p}")))
    }
}

/// Quantum Fourier transform on `qubits` qubits, `|s⟩ ↦ 2^{-l/2} Σ_t e^{2πi st/2^l}|t⟩`,
/// first qubit most significant.
pub fn qft(qubits: usize) -> Result<ComplexMatrix> {
    if qubits == 0 {
        return Err(Error::InvalidArgument("qft needs at least one qubit".into()));
    }
    if qubits > 12 {
        return Err(Error::InvalidArgument(format!("qft on {qubits} qubits is too large")));
    }
    let n = 1usize << qubits;
    let norm = 1.0 / (n as f64).sqrt();
    Ok(ComplexMatrix::from_fn(n, n, |t, s| {
        let k = (s * t) % n;
        Complex64::from_polar(norm, 2.0 * PI * k as f64 / n as f64)
    }))
}

/// `exp[i(θx X⊗X + θy Y⊗Y + θz Z⊗Z)]`.
pub fn canonical_gate(theta: [f64; 3]) -> ComplexMatrix {
    crate::canonical::canonical_form(theta)
}

/// Parsed gate spec.
#[derive(Debug, Clone, PartialEq)]
pub enum GateSpec {
    Cnot,
    Swap,
    Toffoli {
        target: usize,
    },
    Up {
        p: f64,
    },
    /// `√(1−p)I⊗I + i√p X⊗X` (`cxp:p`).
    ControlledX {
        p: f64,
    },
    /// QFT on `a + b` qubits; the default cut puts `a` qubits on 𝒜.
    Qft {
        a: usize,
        b: usize,
    },
    Haar {
        dim: usize,
        seed: u64,
    },
    /// `canon:θx,θy,θz`.
    Canonical {
        theta: [f64; 3],
    },
    Identity {
        dim: usize,
    },
    File {
        path: PathBuf,
    },
}

impl GateSpec {
    pub fn matrix(&self) -> Result<ComplexMatrix> {
        match self {
            GateSpec::Cnot => Ok(cnot()),
            GateSpec::Swap => Ok(swap()),
            GateSpec::Toffoli { target } => toffoli(*target),
            GateSpec::Up { p } => up(*p),
            GateSpec::ControlledX { p } => controlled_x_form(*p),
            GateSpec::Qft { a, b } => qft(a + b),
            GateSpec::Haar { dim, seed } => {
                if *dim == 0 {
                    return Err(Error::InvalidArgument("haar dimension must be ≥ 1".into()));
                }
                Ok(haar_unitary(*dim, *seed))
            }
            GateSpec::Canonical { theta } => Ok(canonical_gate(*theta)),
            GateSpec::Identity { dim } => Ok(identity(*dim)),
            GateSpec::File { path } => read_matrix(path),
        }
    }

    /// The natural bipartition for the gate, when it has one.
    pub fn default_partition(&self) -> Option<Partition> {
        match self {
            GateSpec::Cnot
            | GateSpec::Swap
            | GateSpec::Up { .. }
            | GateSpec::ControlledX { .. }
            | GateSpec::Canonical { .. } => Some(Partition::new(2, 2)),
            // First qubit on 𝒜, the other two on ℬ𝒞.
            GateSpec::Toffoli { .. } => Some(Partition::new(2, 4)),
            GateSpec::Qft { a, b } => Some(Partition::new(1 << a, 1 << b)),
            GateSpec::Haar { dim, .. } | GateSpec::Identity { dim } => square_split(*dim),
            GateSpec::File { .. } => None,
        }
    }
}

fn square_split(dim: usize) -> Option<Partition> {
    let r = (dim as f64).sqrt().round() as usize;
    (r >= 1 && r * r == dim).then(|| Partition::new(r, r))
}

impl FromStr for GateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let nums = || -> Result<Vec<f64>> {
            args.map(|a| {
                a.split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad number `{t}` in gate spec `{s}`")))
                    })
                    .collect()
            })
            .unwrap_or_else(|| Ok(Vec::new()))
        };
        let bad = || Error::Parse(format!("bad parameters in gate spec `{s}`"));
        let as_count = |x: f64| -> Result<usize> {
            if x >= 0.0 && x.fract() == 0.0 && x < 1e9 {
                Ok(x as usize)
            } else {
                Err(bad())
            }
        };
        let spec = match name.to_ascii_lowercase().as_str() {
            "cnot" | "cx" => {
                expect_len(&nums()?, 0, s)?;
                GateSpec::Cnot
            }
            "swap" => {
                expect_len(&nums()?, 0, s)?;
                GateSpec::Swap
            }
            "toffoli" | "ccx" => {
                let v = nums()?;
                let target = match v.as_slice() {
                    [] => 2,
                    [t] => as_count(*t)?,
                    _ => return Err(bad()),
                };
                if target > 2 {
                    return Err(bad());
                }
                GateSpec::Toffoli { target }
            }
            "up" => {
                let v = nums()?;
                expect_len(&v, 1, s)?;
                check_probability(v[0])?;
                GateSpec::Up { p: v[0] }
            }
            "cxp" => {
                let v = nums()?;
                expect_len(&v, 1, s)?;
                check_probability(v[0])?;
                GateSpec::ControlledX { p: v[0] }
            }
            "qft" => {
                let v = nums()?;
                let (a, b) = match v.as_slice() {
                    [l] => {
                        let l = as_count(*l)?;
                        (l / 2, l - l / 2)
                    }
                    [a, b] => (as_count(*a)?, as_count(*b)?),
                    _ => return Err(bad()),
                };
                if a + b == 0 {
                    return Err(Error::InvalidArgument("qft needs at least one qubit".into()));
                }
                GateSpec::Qft { a, b }
            }
            "haar" => {
                let v = nums()?;
                let (dim, seed) = match v.as_slice() {
                    [d] => (as_count(*d)?, 0),
                    [d, seed] => (as_count(*d)?, as_count(*seed)? as u64),
                    _ => return Err(bad()),
                };
                if dim == 0 {
                    return Err(Error::InvalidArgument("haar dimension must be ≥ 1".into()));
                }
                GateSpec::Haar { dim, seed }
            }
            "canon" => {
                let v = nums()?;
                expect_len(&v, 3, s)?;
                GateSpec::Canonical { theta: [v[0], v[1], v[2]] }
            }
            "id" | "identity" => {
                let v = nums()?;
                let dim = match v.as_slice() {
                    [] => 4,
                    [d] => as_count(*d)?,
                    _ => return Err(bad()),
                };
                GateSpec::Identity { dim }
            }
            "file" => {
                let path = args.filter(|a| !a.is_empty()).ok_or_else(bad)?;
                GateSpec::File { path: PathBuf::from(path) }
            }
            _ => return Err(Error::UnknownGate(s.to_string())),
        };
        Ok(spec)
    }
}

fn expect_len(v: &[f64], n: usize, s: &str) -> Result<()> {
    if v.len() == n {
        Ok(())
    } else {
        Err(Error::Parse(format!("gate spec `{s}` expects {n} parameter(s)")))
    }
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateSpec::Cnot => write!(f, "cnot"),
            GateSpec::Swap => write!(f, "swap"),
            GateSpec::Toffoli { target } => write!(f, "toffoli:{target}"),
            GateSpec::Up { p } => write!(f, "up:{p}"),
            GateSpec::ControlledX { p } => write!(f, "cxp:{p}"),
            GateSpec::Qft { a, b } => write!(f, "qft:{a},{b}"),
            GateSpec::Haar { dim, seed } => write!(f, "haar:{dim},{seed}"),
            GateSpec::Canonical { theta } => write!(f, "canon:{},{},{}", theta[0], theta[1], theta[2]),
            GateSpec::Identity { dim } => write!(f, "id:{dim}"),
            GateSpec::File { path } => write!(f, "file:{}", path.display()),
        }
    }
}

/// Parse a gate spec and build its matrix.
pub fn gate(spec: &str) -> Result<ComplexMatrix> {
    spec.parse::<GateSpec>()?.matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::linalg::{max_abs_diff, unitarity_deviation};

    #[test]
    fn registry_is_unitary() {
        for s in ["cnot", "swap", "toffoli", "toffoli:2", "up:0.3", "cxp:0.2", "qft:3", "haar:3,7", "canon:0.1,0.2,0.3"]
        {
            let u = gate(s).unwrap();
            assert!(unitarity_deviation(&u) < 1e-12, "{s}");
        }
    }

    #[test]
    fn up_zero_is_identity() {
        assert!(max_abs_diff(&gate("up:0").unwrap(), &identity(4)) < 1e-15);
    }

    #[test]
    fn qft_one_qubit_is_hadamard() {
        assert!(max_abs_diff(&gate("qft:1").unwrap(), &hadamard()) < 1e-15);
    }

    #[test]
    fn cnot_permutes_upper_block() {
        let u = cnot();
        assert_eq!(u[(0, 0)], ONE);
        assert_eq!(u[(1, 1)], ONE);
        assert_eq!(u[(3, 2)], ONE);
        assert_eq!(u[(2, 3)], ONE);
        assert_eq!(u[(2, 2)], ZERO);
    }

    #[test]
    fn toffoli_target_position() {
        // target 0: flips the first qubit when qubits 1 and 2 are set: |011⟩ ↔ |111⟩.
        let t0 = toffoli(0).unwrap();
        assert_eq!(t0[(7, 3)], ONE);
        assert_eq!(t0[(3, 7)], ONE);
        let t2 = toffoli(2).unwrap();
        assert_eq!(t2[(7, 6)], ONE);
        assert!(toffoli(3).is_err());
    }

    #[test]
    fn swap_qudits_matches_qubit_swap() {
        assert_eq!(swap_qudits(2), swap());
    }

    #[test]
    fn spec_errors() {
        assert!(matches!("nope".parse::<GateSpec>(), Err(Error::UnknownGate(_))));
        assert!("up:1.5".parse::<GateSpec>().is_err());
        assert!("up".parse::<GateSpec>().is_err());
        assert!("qft:0".parse::<GateSpec>().is_err());
        assert!("haar:0".parse::<GateSpec>().is_err());
        assert!("cnot:1".parse::<GateSpec>().is_err());
    }

    #[test]
    fn spec_display_round_trips() {
        for s in ["cnot", "toffoli:1", "up:0.25", "qft:2,3", "haar:4,12345"] {
            let spec: GateSpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<GateSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn qft_default_cut() {
        let spec: GateSpec = "qft:5".parse().unwrap();
        assert_eq!(spec.default_partition(), Some(Partition::new(4, 8)));
    }
}
