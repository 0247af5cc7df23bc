//! Strengths induced by a distance to the local unitaries, `K_D(U) = min_{A,B} D(U, A⊗B)`,
//! with the exact two-qubit Hilbert-Schmidt case.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::canonical::canonical_decompose;
use crate::entangle::{BoundKind, Diagnostics, StrengthReport, Witness};
use crate::error::{Error, Result};
use crate::matcore::gates::paulis;
use crate::matcore::linalg::{ensure_unitary, hs_norm, kron, op_norm, unitary_from_params, ComplexMatrix};
use crate::matcore::random::normal_vec;
use crate::matcore::Partition;
use crate::optim::{minimize, OptimizerConfig};

/// `⟨φ_j|σ_k⊗σ_l|φ_j⟩ = δ_kl H_jk` for the Bell vectors `|φ_j⟩ = (I⊗σ_j)|φ₀⟩`.
pub const SIGN_MATRIX: [[f64; 4]; 4] =
    [[1.0, 1.0, -1.0, 1.0], [1.0, 1.0, 1.0, -1.0], [1.0, -1.0, -1.0, -1.0], [1.0, -1.0, 1.0, 1.0]];

/// Column sums `|Σ_j λ_j H_jk|` within this distance count as tied.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    HilbertSchmidt,
    OperatorNorm,
}

impl MetricKind {
    pub fn distance(&self, u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
        let d = u - v;
        match self {
            MetricKind::HilbertSchmidt => Ok(hs_norm(&d)),
            MetricKind::OperatorNorm => op_norm(&d),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::HilbertSchmidt => "hilbert_schmidt",
            MetricKind::OperatorNorm => "operator_norm",
        })
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "hs" | "hilbert_schmidt" => Ok(MetricKind::HilbertSchmidt),
            "op" | "operator_norm" => Ok(MetricKind::OperatorNorm),
            other => Err(Error::Parse(format!("unknown metric `{other}` (hs|op)"))),
        }
    }
}

/// `|φ_j⟩ = (I⊗σ_j)(|00⟩+|11⟩)/√2`.
pub fn bell_vector(j: usize) -> nalgebra::DVector<Complex64> {
    let phi0 = nalgebra::DVector::from_fn(4, |i, _| {
        Complex64::from(if i == 0 || i == 3 { std::f64::consts::FRAC_1_SQRT_2 } else { 0.0 })
    });
    kron(&paulis()[0], &paulis()[j]) * phi0
}

/// Eigenvalues of `e^{iφ}·exp[i(θx X⊗X + θy Y⊗Y + θz Z⊗Z)]` on the Bell vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalEigenSystem {
    /// `λ_j = e^{iφ}·exp(i Σ_k H_jk θ_k)`, `k = 1..3`.
    pub lambdas: [Complex64; 4],
    pub theta: [f64; 3],
    pub global_phase: f64,
}

impl CanonicalEigenSystem {
    pub fn new(theta: [f64; 3], global_phase: f64) -> Self {
        let lambdas = std::array::from_fn(|j| {
            let arg: f64 = (0..3).map(|k| SIGN_MATRIX[j][k + 1] * theta[k]).sum();
            Complex64::from_polar(1.0, arg + global_phase)
        });
        Self { lambdas, theta, global_phase }
    }

    /// `S_k = Σ_j λ_j H_jk` for `k = 0..3`.
    pub fn column_sums(&self) -> [Complex64; 4] {
        std::array::from_fn(|k| (0..4).map(|j| self.lambdas[j] * SIGN_MATRIX[j][k]).sum())
    }
}

/// Exact two-qubit Hilbert-Schmidt strength with its minimizing local unitary.
#[derive(Debug, Clone)]
pub struct HsStrength {
    pub value: f64,
    /// `σ_k⊗σ_k` index of the canonical-frame minimizer (smallest on ties).
    pub minimizer_k: usize,
    /// `θ` of the canonical-frame minimizer `e^{iθ}σ_k⊗σ_k`.
    pub minimizer_phase: f64,
    /// Minimizer mapped back through the local factors of the decomposition.
    pub minimizer: ComplexMatrix,
}

/// `K_HS(U) = √(8 − 2 max_k |Σ_j λ_j H_jk|)` from the canonical decomposition of `U`.
pub fn k_hs_two_qubit(u: &ComplexMatrix) -> Result<HsStrength> {
    let dec = canonical_decompose(u)?;
    let sums = CanonicalEigenSystem::new(dec.theta, dec.global_phase).column_sums();
    let mags = sums.map(|z| z.norm());
    let max = mags.iter().copied().fold(0.0, f64::max);
    let k = mags.iter().position(|&m| m >= max - TIE_TOL).expect("four column sums");
    let phase = sums[k].arg();
    let sigma = &paulis()[k];
    let local = kron(sigma, sigma) * Complex64::from_polar(1.0, phase);
    let post = kron(&dec.post_local.0, &dec.post_local.1);
    let pre = kron(&dec.pre_local.0, &dec.pre_local.1);
    Ok(HsStrength {
        value: (8.0 - 2.0 * max).max(0.0).sqrt(),
        minimizer_k: k,
        minimizer_phase: phase,
        minimizer: post * local * pre,
    })
}

/// CLI summary of a metric strength.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: MetricKind,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimizer_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimizer_phase: Option<f64>,
    pub bound_kind: BoundKind,
}

/// `min_{A,B} D(U, A⊗B)` by multi-start simplex search over `A = exp(iH_A)`,
/// `B = exp(iH_B)`. Reported as an upper bound.
///
/// For the operator norm, one start is the Hilbert-Schmidt optimum.
pub fn k_d_numeric(
    u: &ComplexMatrix,
    part: Partition,
    metric: MetricKind,
    cfg: &OptimizerConfig,
) -> Result<StrengthReport> {
    part.check_square(u)?;
    ensure_unitary(u, 1e-8)?;
    cfg.validate()?;
    let (na, nb) = (part.d_a * part.d_a, part.d_b * part.d_b);
    let local = |x: &[f64]| (unitary_from_params(part.d_a, &x[..na]), unitary_from_params(part.d_b, &x[na..]));
    let objective = |x: &[f64]| {
        let (a, b) = local(x);
        metric.distance(u, &kron(&a, &b)).unwrap_or(f64::NAN)
    };
    // The operator-norm landscape is nonsmooth; seed it with the Hilbert-Schmidt optimum.
    let starts = match metric {
        MetricKind::HilbertSchmidt => Vec::new(),
        MetricKind::OperatorNorm => {
            let hs = |x: &[f64]| {
                let (a, b) = local(x);
                hs_norm(&(u - kron(&a, &b)))
            };
            vec![minimize(hs, |rng| normal_vec(na + nb, rng), &[], 0.5, cfg).best_x]
        }
    };
    let run = minimize(objective, |rng| normal_vec(na + nb, rng), &starts, 0.5, cfg);
    let (a, b) = local(&run.best_x);
    let measure = match metric {
        MetricKind::HilbertSchmidt => "k_hs",
        MetricKind::OperatorNorm => "k_op",
    };
    Ok(StrengthReport {
        measure: measure.into(),
        value: run.best_value.max(0.0),
        bound_kind: BoundKind::Upper,
        diagnostics: Some(Diagnostics::from(&run)),
        witness: Some(Witness::Local { a, b }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::canonical_form;
    use crate::matcore::gates::{cnot, swap};
    use crate::matcore::linalg::identity;
    use crate::matcore::random::{haar_unitary, haar_unitary_with, rng};

    #[test]
    fn sign_matrix_from_bell_expectations() {
        let ps = paulis();
        for j in 0..4 {
            let phi = bell_vector(j);
            for k in 0..4 {
                for l in 0..4 {
                    let e = phi.dotc(&(kron(&ps[k], &ps[l]) * &phi));
                    let want = if k == l { SIGN_MATRIX[j][k] } else { 0.0 };
                    assert!((e - Complex64::from(want)).norm() < 1e-14, "j={j} k={k} l={l}");
                }
            }
        }
    }

    #[test]
    fn eigenvalues_match_bell_expectations() {
        let mut r = rng(4);
        for _ in 0..10 {
            let th: [f64; 3] = std::array::from_fn(|_| rand::Rng::random_range(&mut r, -1.0..1.0));
            let sys = CanonicalEigenSystem::new(th, 0.3);
            let u = canonical_form(th) * Complex64::from_polar(1.0, 0.3);
            for j in 0..4 {
                let phi = bell_vector(j);
                assert!((phi.dotc(&(&u * &phi)) - sys.lambdas[j]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        assert!(k_hs_two_qubit(&identity(4)).unwrap().value < 1e-7);
        let s = k_hs_two_qubit(&swap()).unwrap();
        assert!((s.value - 2.0).abs() < 1e-9);
        let c = k_hs_two_qubit(&cnot()).unwrap();
        assert!((c.value - (8.0 - 4.0 * 2f64.sqrt()).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn minimizer_attains_value() {
        let mut r = rng(7);
        for _ in 0..50 {
            let u = haar_unitary_with(4, &mut r);
            let h = k_hs_two_qubit(&u).unwrap();
            assert!((hs_norm(&(&u - &h.minimizer)) - h.value).abs() < 1e-8);
        }
    }

    #[test]
    fn numeric_matches_closed_form() {
        let cfg = OptimizerConfig { restarts: 4, max_evals: 8000, xtol: 1e-9, ftol: 1e-12, seed: 1 };
        for seed in 0..5 {
            let u = haar_unitary(4, seed);
            let exact = k_hs_two_qubit(&u).unwrap().value;
            let num = k_d_numeric(&u, Partition::qubits(), MetricKind::HilbertSchmidt, &cfg).unwrap();
            assert!((num.value - exact).abs() < 1e-6, "{} {}", num.value, exact);
        }
    }

    #[test]
    fn operator_norm_vanishes_on_locals() {
        let cfg = OptimizerConfig { restarts: 4, max_evals: 8000, xtol: 1e-9, ftol: 1e-12, seed: 2 };
        let l = kron(&haar_unitary(2, 1), &haar_unitary(2, 2));
        let r = k_d_numeric(&l, Partition::qubits(), MetricKind::OperatorNorm, &cfg).unwrap();
        assert!(r.value < 1e-4, "{}", r.value);
        assert_eq!("op".parse::<MetricKind>().unwrap(), MetricKind::OperatorNorm);
    }
}
