//! Operator-Schmidt decomposition `Q = Σ_l s_l A_l⊗B_l` and the strengths read off its
//! coefficients.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::linalg::{ensure_finite, ensure_unitary, numerical_rank, reshuffle, svd, ComplexMatrix, RANK_TOL};
use crate::matcore::state::entropy_of_weights;
use crate::matcore::Partition;

/// `s_l` descending, with HS-orthonormal `A_l` on 𝒜 and `B_l` on ℬ.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub partition: Partition,
    pub coefficients: Vec<f64>,
    pub left_ops: Vec<ComplexMatrix>,
    pub right_ops: Vec<ComplexMatrix>,
}

impl SchmidtDecomposition {
    /// `Σ_l s_l A_l⊗B_l` over all stored terms.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.partition.total();
        let mut q = ComplexMatrix::zeros(n, n);
        for ((s, a), b) in self.coefficients.iter().zip(&self.left_ops).zip(&self.right_ops) {
            q += a.kronecker(b).scale(*s);
        }
        q
    }

    pub fn schmidt_number(&self) -> usize {
        self.schmidt_number_with_tol(RANK_TOL)
    }

    /// Coefficients above `tol · s_max`.
    pub fn schmidt_number_with_tol(&self, tol: f64) -> usize {
        numerical_rank(&self.coefficients, tol)
    }

    /// Normalized weights `s_l²/Σ s²`.
    pub fn weights(&self) -> Vec<f64> {
        schmidt_weights(&self.coefficients)
    }
}

/// Decomposition via the SVD of the reshuffled matrix; keeps only the `min(dA², dB²)`
/// possibly nonzero terms.
pub fn operator_schmidt(q: &ComplexMatrix, part: Partition) -> Result<SchmidtDecomposition> {
    part.check_square(q)?;
    ensure_finite(q)?;
    let (d_a, d_b) = (part.d_a, part.d_b);
    let f = svd(&reshuffle(q, d_a, d_b))?;
    let terms = f.singular_values.len();
    let mut left_ops = Vec::with_capacity(terms);
    let mut right_ops = Vec::with_capacity(terms);
    for l in 0..terms {
        left_ops.push(ComplexMatrix::from_fn(d_a, d_a, |j, k| f.u[(j * d_a + k, l)]));
        right_ops.push(ComplexMatrix::from_fn(d_b, d_b, |j, k| f.v_adjoint[(l, j * d_b + k)]));
    }
    Ok(SchmidtDecomposition { partition: part, coefficients: f.singular_values, left_ops, right_ops })
}

/// Coefficients only; cheaper than the full decomposition.
pub fn schmidt_coefficients(q: &ComplexMatrix, part: Partition) -> Result<Vec<f64>> {
    part.check_square(q)?;
    ensure_finite(q)?;
    crate::matcore::linalg::singular_values(&reshuffle(q, part.d_a, part.d_b))
}

pub fn schmidt_number(q: &ComplexMatrix, part: Partition) -> Result<usize> {
    Ok(numerical_rank(&schmidt_coefficients(q, part)?, RANK_TOL))
}

pub fn schmidt_weights(coefficients: &[f64]) -> Vec<f64> {
    let total: f64 = coefficients.iter().map(|s| s * s).sum();
    coefficients.iter().map(|s| s * s / total).collect()
}

/// `log₂ Sch(Q)`.
pub fn k_har(q: &ComplexMatrix, part: Partition) -> Result<f64> {
    Ok((schmidt_number(q, part)? as f64).log2())
}

/// Shannon entropy of `s_l²/tr(Q†Q)`.
pub fn k_sch(q: &ComplexMatrix, part: Partition) -> Result<f64> {
    let s = schmidt_coefficients(q, part)?;
    k_sch_from_coefficients(&s)
}

pub fn k_sch_from_coefficients(s: &[f64]) -> Result<f64> {
    if s.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidArgument("K_Sch is undefined for the zero operator".into()));
    }
    Ok(entropy_of_weights(&s.iter().map(|x| x * x).collect::<Vec<_>>()))
}

/// `1 − Σ s_l⁴/(dA·dB)²`.
pub fn linear_entropy(u: &ComplexMatrix, part: Partition) -> Result<f64> {
    part.check_square(u)?;
    ensure_unitary(u, 1e-8)?;
    let s = schmidt_coefficients(u, part)?;
    let n2 = (part.total() as f64).powi(2);
    Ok(1.0 - s.iter().map(|x| x.powi(4)).sum::<f64>() / n2)
}

/// `2 s₁ s₂/(dA·dB)`; defined only for Schmidt number 2.
pub fn operator_concurrence(u: &ComplexMatrix, part: Partition) -> Result<f64> {
    part.check_square(u)?;
    ensure_unitary(u, 1e-8)?;
    let s = schmidt_coefficients(u, part)?;
    let sch = numerical_rank(&s, RANK_TOL);
    if sch != 2 {
        return Err(Error::SchmidtClass { found: sch, expected: "2" });
    }
    Ok(2.0 * s[0] * s[1] / part.total() as f64)
}

/// Predicted QFT spectrum across an `m:n` qubit cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QftSchmidtSummary {
    pub count: usize,
    pub coefficient: f64,
}

/// `2^{2m}` coefficients each equal to `√(2^{n−m})`; only claimed for `m ≤ n`.
pub fn qft_schmidt_reference(m: usize, n: usize) -> Result<QftSchmidtSummary> {
    if m > n {
        return Err(Error::InvalidArgument(format!("closed form is only established for m ≤ n, got m={m}, n={n}")));
    }
    if m + n > 12 {
        return Err(Error::InvalidArgument(format!("m+n = {} exceeds 12 qubits", m + n)));
    }
    Ok(QftSchmidtSummary { count: 1 << (2 * m), coefficient: ((1u64 << (n - m)) as f64).sqrt() })
}

/// JSON summary of a decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct SchmidtReport {
    pub gate: String,
    pub partition: String,
    pub coefficients: Vec<f64>,
    pub schmidt_number: usize,
    pub k_har: f64,
    pub k_sch: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_entropy: Option<f64>,
}

impl SchmidtReport {
    pub fn new(gate: &str, q: &ComplexMatrix, part: Partition) -> Result<Self> {
        let s = schmidt_coefficients(q, part)?;
        let sch = numerical_rank(&s, RANK_TOL);
        let linear_entropy =
            if crate::matcore::linalg::is_unitary(q, 1e-8) { Some(linear_entropy(q, part)?) } else { None };
        Ok(Self {
            gate: gate.to_string(),
            partition: part.to_string(),
            k_har: (sch as f64).log2(),
            k_sch: k_sch_from_coefficients(&s)?,
            coefficients: s.into_iter().take(sch).collect(),
            schmidt_number: sch,
            linear_entropy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::gates::{cnot, controlled_x_form, gate, pauli_x, pauli_z, qft, swap, up};
    use crate::matcore::linalg::{hs_norm, identity, kron, trace};
    use crate::matcore::random::haar_unitary;
    use crate::matcore::state::shannon_entropy;

    const Q: Partition = Partition::new(2, 2);
    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn cnot_decomposition() {
        let d = operator_schmidt(&cnot(), Q).unwrap();
        assert!((d.coefficients[0] - SQRT2).abs() < 1e-12);
        assert!((d.coefficients[1] - SQRT2).abs() < 1e-12);
        assert!(d.coefficients[2] < 1e-12);
        assert_eq!(d.schmidt_number(), 2);
        assert!(hs_norm(&(d.reconstruct() - cnot())) < 1e-12);
        // The leading A_l span the diagonal projectors: each is diagonal up to phase.
        for a in &d.left_ops[..2] {
            assert!(a[(0, 1)].norm() < 1e-12 && a[(1, 0)].norm() < 1e-12);
        }
    }

    #[test]
    fn swap_has_four_unit_coefficients() {
        let s = schmidt_coefficients(&swap(), Q).unwrap();
        for x in s {
            assert!((x - 1.0).abs() < 1e-12);
        }
        assert_eq!(k_har(&swap(), Q).unwrap(), 2.0);
        assert!((k_sch(&swap(), Q).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ops_are_orthonormal() {
        let u = haar_unitary(6, 3);
        let d = operator_schmidt(&u, Partition::new(2, 3)).unwrap();
        for (ops, _) in [(&d.left_ops, 2), (&d.right_ops, 3)] {
            for (j, a) in ops.iter().enumerate() {
                for (k, b) in ops.iter().enumerate() {
                    let ip = trace(&(a.adjoint() * b));
                    let want = if j == k { 1.0 } else { 0.0 };
                    assert!((ip.re - want).abs() < 1e-9 && ip.im.abs() < 1e-9);
                }
            }
        }
        assert!(hs_norm(&(d.reconstruct() - &u)) < 1e-9);
        let total: f64 = d.coefficients.iter().map(|s| s * s).sum();
        assert!((total - 6.0).abs() < 1e-8);
    }

    #[test]
    fn product_has_single_coefficient() {
        let u = kron(&haar_unitary(2, 1), &haar_unitary(3, 2));
        let s = schmidt_coefficients(&u, Partition::new(2, 3)).unwrap();
        assert!((s[0] - 6f64.sqrt()).abs() < 1e-12);
        assert_eq!(numerical_rank(&s, RANK_TOL), 1);
        assert!(k_sch(&u, Partition::new(2, 3)).unwrap() < 1e-12);
    }

    #[test]
    fn up_family() {
        for p in [0.0, 1.0] {
            assert_eq!(schmidt_number(&up(p).unwrap(), Q).unwrap(), 1);
        }
        for k in 1..100 {
            let p = k as f64 / 100.0;
            let u = up(p).unwrap();
            assert_eq!(schmidt_number(&u, Q).unwrap(), 4);
            let want = shannon_entropy(&[(1.0 - p).powi(2), p * p, p * (1.0 - p), p * (1.0 - p)]).unwrap();
            assert!((k_sch(&u, Q).unwrap() - want).abs() < 1e-9);
        }
        assert!((k_sch(&up(0.5).unwrap(), Q).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_operator_rejected() {
        assert!(k_sch(&ComplexMatrix::zeros(4, 4), Q).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(operator_schmidt(&identity(4), Partition::new(2, 3)).is_err());
    }

    #[test]
    fn qft_matches_closed_form_small() {
        for (m, n) in [(1, 1), (1, 2), (2, 2)] {
            let r = qft_schmidt_reference(m, n).unwrap();
            let s = schmidt_coefficients(&qft(m + n).unwrap(), Partition::new(1 << m, 1 << n)).unwrap();
            assert_eq!(numerical_rank(&s, RANK_TOL), r.count);
            for x in &s[..r.count] {
                assert!((x - r.coefficient).abs() < 1e-8);
            }
        }
        assert_eq!(qft_schmidt_reference(1, 1).unwrap(), QftSchmidtSummary { count: 4, coefficient: 1.0 });
        assert!(qft_schmidt_reference(2, 1).is_err());
    }

    #[test]
    fn linear_entropy_examples() {
        assert!(linear_entropy(&kron(&pauli_x(), &pauli_z()), Q).unwrap().abs() < 1e-12);
        assert!((linear_entropy(&swap(), Q).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn concurrence_examples() {
        assert!((operator_concurrence(&cnot(), Q).unwrap() - 1.0).abs() < 1e-12);
        for p in [0.1, 0.3, 0.7] {
            let u = controlled_x_form(p).unwrap();
            let c = operator_concurrence(&u, Q).unwrap();
            assert!((c - 2.0 * (p * (1.0 - p)).sqrt()).abs() < 1e-12);
            let l = linear_entropy(&u, Q).unwrap();
            assert!((c * c - 2.0 * l).abs() < 1e-12);
        }
        assert!(matches!(
            operator_concurrence(&controlled_x_form(0.0).unwrap(), Q),
            Err(Error::SchmidtClass { found: 1, .. })
        ));
    }

    #[test]
    fn report_for_toffoli() {
        let r = SchmidtReport::new("toffoli:0", &gate("toffoli:0").unwrap(), Partition::new(2, 4)).unwrap();
        assert_eq!(r.schmidt_number, 2);
        assert!((r.k_sch - shannon_entropy(&[0.25, 0.75]).unwrap()).abs() < 1e-9);
    }
}
