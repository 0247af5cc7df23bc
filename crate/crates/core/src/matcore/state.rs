//! Multipartite pure states, density matrices, partial traces and entropies.

use nalgebra::DVector;
use num_complex::Complex64;

use super::linalg::{eigvalsh, singular_values, ComplexMatrix, ZERO};
use crate::error::{Error, Result};

pub type ComplexVector = DVector<Complex64>;

/// Unit vector on a tensor product of subsystems with the given dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amplitudes: ComplexVector,
}

impl PureState {
    /// Normalizes `amplitudes`; fails on dimension mismatch or a zero vector.
    pub fn new(dims: Vec<usize>, amplitudes: ComplexVector) -> Result<Self> {
        check_dims(&dims, amplitudes.len())?;
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidArgument("state vector must be finite and nonzero".into()));
        }
        Ok(Self { dims, amplitudes: amplitudes / Complex64::from(norm) })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        let n = dims.iter().product::<usize>();
        if index >= n {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range {n}")));
        }
        let mut v = ComplexVector::zeros(n);
        v[index] = Complex64::from(1.0);
        Self::new(dims, v)
    }

    /// `(1/√d) Σ_j |j⟩|j⟩` on two `d`-dimensional systems.
    pub fn max_entangled(d: usize) -> Self {
        let mut v = ComplexVector::zeros(d * d);
        let a = Complex64::from(1.0 / (d as f64).sqrt());
        for j in 0..d {
            v[j * d + j] = a;
        }
        Self { dims: vec![d, d], amplitudes: v }
    }

    pub fn product(states: &[&PureState]) -> Self {
        let mut dims = Vec::new();
        let mut amp = ComplexVector::from_element(1, Complex64::from(1.0));
        for s in states {
            dims.extend_from_slice(&s.dims);
            amp = amp.kronecker(&s.amplitudes);
        }
        Self { dims, amplitudes: amp }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Applies `u` to the listed subsystems, in the order given.
    pub fn apply(&self, u: &ComplexMatrix, targets: &[usize]) -> Result<Self> {
        let order = front_order(&self.dims, targets)?;
        let d_t: usize = targets.iter().map(|&t| self.dims[t]).product();
        if u.nrows() != d_t || u.ncols() != d_t {
            return Err(Error::Dimension(format!(
                "operator is {}×{}, targets have dimension {d_t}",
                u.nrows(),
                u.ncols()
            )));
        }
        let (moved, moved_dims) = permute_vector(&self.amplitudes, &self.dims, &order);
        let rest = moved.len() / d_t;
        // Row-major (d_t × rest) view of the permuted vector.
        let m = ComplexMatrix::from_fn(d_t, rest, |i, j| moved[i * rest + j]);
        let out = u * m;
        let flat = ComplexVector::from_fn(moved.len(), |k, _| out[(k / rest, k % rest)]);
        let back = inverse_permutation(&order);
        let (amplitudes, _) = permute_vector(&flat, &moved_dims, &back);
        Ok(Self { dims: self.dims.clone(), amplitudes })
    }

    /// Applies `u` to the whole space.
    pub fn apply_full(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::Dimension(format!(
                "operator is {}×{}, state has dimension {}",
                u.nrows(),
                u.ncols(),
                self.dim()
            )));
        }
        Ok(Self { dims: self.dims.clone(), amplitudes: u * &self.amplitudes })
    }

    /// Schmidt coefficients (descending, unsquared) across `group` : rest.
    pub fn schmidt_coefficients(&self, group: &[usize]) -> Result<Vec<f64>> {
        let order = front_order(&self.dims, group)?;
        let d_g: usize = group.iter().map(|&t| self.dims[t]).product();
        let (moved, _) = permute_vector(&self.amplitudes, &self.dims, &order);
        let rest = moved.len() / d_g;
        let m = ComplexMatrix::from_fn(d_g, rest, |i, j| moved[i * rest + j]);
        singular_values(&m)
    }

    /// Entanglement entropy (bits) across `group` : rest.
    pub fn entanglement(&self, group: &[usize]) -> Result<f64> {
        let s = self.schmidt_coefficients(group)?;
        let p: Vec<f64> = s.iter().map(|x| x * x).collect();
        Ok(entropy_of_weights(&p))
    }

    /// Linear entropy `1 − tr ρ_g²` of the reduced state on `group`.
    pub fn linear_entropy(&self, group: &[usize]) -> Result<f64> {
        let s = self.schmidt_coefficients(group)?;
        Ok(1.0 - s.iter().map(|x| x.powi(4)).sum::<f64>())
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix { dims: self.dims.clone(), matrix: m }
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Positive semidefinite, unit-trace operator on a tensor product of subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: ComplexMatrix,
}

const DENSITY_TOL: f64 = 1e-10;

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity to 1e-10.
    pub fn new(dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        check_dims(&dims, matrix.nrows())?;
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        let herm = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(herm <= DENSITY_TOL) {
            return Err(Error::InvalidArgument(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidArgument(format!("trace is {tr}, expected 1")));
        }
        let min = eigvalsh(&matrix)?.into_iter().fold(f64::INFINITY, f64::min);
        if min < -DENSITY_TOL {
            return Err(Error::InvalidArgument(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { dims, matrix })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigvalsh(&self.matrix)
    }

    pub fn von_neumann_entropy(&self) -> Result<f64> {
        von_neumann_entropy(self)
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        partial_trace(self, keep)
    }
}

fn check_dims(dims: &[usize], n: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Dimension("subsystem dimensions must be positive".into()));
    }
    let prod: usize = dims.iter().product();
    if prod != n {
        return Err(Error::Dimension(format!("dims {dims:?} have product {prod}, data has {n}")));
    }
    Ok(())
}

/// Subsystem order with `front` first (in the given order), the remaining ones after.
fn front_order(dims: &[usize], front: &[usize]) -> Result<Vec<usize>> {
    let mut seen = vec![false; dims.len()];
    for &t in front {
        if t >= dims.len() || seen[t] {
            return Err(Error::InvalidArgument(format!(
                "invalid subsystem list {front:?} for {} subsystems",
                dims.len()
            )));
        }
        seen[t] = true;
    }
    let mut order = front.to_vec();
    order.extend((0..dims.len()).filter(|&k| !seen[k]));
    Ok(order)
}

fn inverse_permutation(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; order.len()];
    for (pos, &k) in order.iter().enumerate() {
        inv[k] = pos;
    }
    inv
}

/// Reorders tensor factors so that new factor `i` is old factor `order[i]`.
fn permute_vector(v: &ComplexVector, dims: &[usize], order: &[usize]) -> (ComplexVector, Vec<usize>) {
    let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    if order.iter().enumerate().all(|(i, &k)| i == k) {
        return (v.clone(), new_dims);
    }
    let old_strides = strides(dims);
    let mut out = ComplexVector::from_element(v.len(), ZERO);
    let mut idx = vec![0usize; dims.len()];
    for (flat, slot) in out.iter_mut().enumerate() {
        unravel(flat, &new_dims, &mut idx);
        let src: usize = idx.iter().zip(order).map(|(&i, &k)| i * old_strides[k]).sum();
        *slot = v[src];
    }
    (out, new_dims)
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn unravel(mut flat: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = flat % dims[k];
        flat /= dims[k];
    }
}

/// Reduced state on `keep` (kept subsystems stay in their original relative order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.dims.len();
    if keep.is_empty() || keep.len() >= n {
        return Err(Error::InvalidArgument("keep must be a nonempty strict subset of the subsystems".into()));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    let order = front_order(&rho.dims, &keep_sorted)?;
    let d_k: usize = keep_sorted.iter().map(|&k| rho.dims[k]).product();
    let d_total = rho.matrix.nrows();
    let d_r = d_total / d_k;
    let strides_old = strides(&rho.dims);
    let new_dims: Vec<usize> = order.iter().map(|&k| rho.dims[k]).collect();
    // Map (kept index, traced index) to the original flat index.
    let mut idx = vec![0usize; n];
    let mut map = vec![0usize; d_total];
    for (flat, slot) in map.iter_mut().enumerate() {
        unravel(flat, &new_dims, &mut idx);
        *slot = idx.iter().zip(&order).map(|(&i, &k)| i * strides_old[k]).sum();
    }
    let mut out = ComplexMatrix::zeros(d_k, d_k);
    for i in 0..d_k {
        for j in 0..d_k {
            let mut acc = ZERO;
            for r in 0..d_r {
                acc += rho.matrix[(map[i * d_r + r], map[j * d_r + r])];
            }
            out[(i, j)] = acc;
        }
    }
    let dims = keep_sorted.iter().map(|&k| rho.dims[k]).collect();
    Ok(DensityMatrix { dims, matrix: out })
}

/// `−Σ p log₂ p` with `0 log 0 = 0`. Entries above −1e-12 are clamped to zero and the
/// vector renormalized; the sum must lie within 1e-9 of 1.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    if let Some(bad) = p.iter().find(|&&x| !(x >= -1e-12)) {
        return Err(Error::InvalidArgument(format!("negative or non-finite probability {bad}")));
    }
    let sum: f64 = p.iter().map(|&x| x.max(0.0)).sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("probabilities sum to {sum}, expected 1")));
    }
    Ok(entropy_of_weights(p))
}

/// Entropy of nonnegative weights after normalizing them; negatives count as zero.
pub fn entropy_of_weights(w: &[f64]) -> f64 {
    let sum: f64 = w.iter().map(|&x| x.max(0.0)).sum();
    if sum <= 0.0 {
        return 0.0;
    }
    let h: f64 = w.iter().map(|&x| x.max(0.0) / sum).filter(|&q| q > 0.0).map(|q| -q * q.log2()).sum();
    h.max(0.0)
}

/// `H(p, 1−p)`.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of_weights(&[p, 1.0 - p])
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(entropy_of_weights(&eigvalsh(&rho.matrix)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::gates::{cnot, hadamard};
    use crate::matcore::linalg::{identity, kron, max_abs_diff};

    fn bell() -> PureState {
        PureState::max_entangled(2)
    }

    #[test]
    fn product_state_trace() {
        let rho = PureState::basis(vec![2, 2], 0).unwrap().density_matrix();
        let r = partial_trace(&rho, &[0]).unwrap();
        let mut e = ComplexMatrix::zeros(2, 2);
        e[(0, 0)] = Complex64::from(1.0);
        assert!(max_abs_diff(r.matrix(), &e) < 1e-15);
    }

    #[test]
    fn bell_reduces_to_maximally_mixed() {
        let rho = bell().density_matrix();
        for keep in [[0], [1]] {
            let r = partial_trace(&rho, &keep).unwrap();
            assert!(max_abs_diff(r.matrix(), &identity(2).scale(0.5)) < 1e-15);
            assert!((r.von_neumann_entropy().unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_keep() {
        let rho = bell().density_matrix();
        assert!(partial_trace(&rho, &[]).is_err());
        assert!(partial_trace(&rho, &[0, 1]).is_err());
        assert!(partial_trace(&rho, &[2]).is_err());
    }

    #[test]
    fn apply_on_targets_matches_full_operator() {
        let s = PureState::basis(vec![2, 2, 2], 5).unwrap();
        let h = hadamard();
        let a = s.apply(&h, &[1]).unwrap();
        let full = kron(&kron(&identity(2), &h), &identity(2));
        let b = s.apply_full(&full).unwrap();
        assert!((a.amplitudes() - b.amplitudes()).norm() < 1e-14);
        // CNOT with control qubit 2, target qubit 0.
        let c = s.apply(&cnot(), &[2, 0]).unwrap();
        // |101⟩ with control set flips qubit 0: |001⟩.
        assert!((c.amplitudes()[0b001].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cnot_creates_one_ebit() {
        let plus = PureState::basis(vec![2], 0).unwrap().apply(&hadamard(), &[0]).unwrap();
        let zero = PureState::basis(vec![2], 0).unwrap();
        let s = PureState::product(&[&plus, &zero]).apply_full(&cnot()).unwrap();
        assert!((s.entanglement(&[0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_entropy_matches_schmidt_entropy() {
        let mut rng = crate::matcore::random::rng(11);
        let s = crate::matcore::random::random_state(&[2, 3, 2], &mut rng);
        let via_svd = s.entanglement(&[0, 2]).unwrap();
        let r = partial_trace(&s.density_matrix(), &[0, 2]).unwrap();
        assert!((r.von_neumann_entropy().unwrap() - via_svd).abs() < 1e-10);
        let r1 = partial_trace(&s.density_matrix(), &[1]).unwrap();
        assert!((r1.von_neumann_entropy().unwrap() - via_svd).abs() < 1e-10);
    }

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon_entropy(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!((shannon_entropy(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        let h = shannon_entropy(&[0.25, 0.75]).unwrap();
        let direct = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((h - direct).abs() < 1e-15);
        assert!((h - 0.8113).abs() < 1e-4);
        assert!(shannon_entropy(&[-0.1, 1.1]).is_err());
        assert!(shannon_entropy(&[0.5, 0.4]).is_err());
    }

    #[test]
    fn maximally_mixed_entropy() {
        for d in 1..6 {
            let rho = DensityMatrix::new(vec![d], identity(d).scale(1.0 / d as f64)).unwrap();
            assert!((rho.von_neumann_entropy().unwrap() - (d as f64).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(vec![2], identity(2)).is_err());
        let mut m = identity(2).scale(0.5);
        m[(0, 1)] = Complex64::new(0.0, 0.1);
        assert!(DensityMatrix::new(vec![2], m).is_err());
    }
}
