//! Dense complex linear algebra. Matrices are `nalgebra` values; the SVD and Hermitian
//! eigensolvers run through `faer`.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, the carrier for operators, states and Kraus elements.
pub type ComplexMatrix = DMatrix<Complex64>;

/// A singular value counts as nonzero when it exceeds this fraction of the largest one.
pub const RANK_TOL: f64 = 1e-8;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product of a sequence of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors.into_iter().fold(identity(1), |acc, f| kron(&acc, f))
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn op_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(svd(m)?.singular_values.first().copied().unwrap_or(0.0))
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `‖U†U − I‖_HS`.
pub fn unitarity_deviation(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    hs_norm(&(u.adjoint() * u - identity(u.nrows())))
}

pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> bool {
    unitarity_deviation(u) <= tol
}

pub(crate) fn ensure_unitary(u: &ComplexMatrix, tol: f64) -> Result<()> {
    let deviation = unitarity_deviation(u);
    if deviation <= tol {
        Ok(())
    } else {
        Err(Error::NotUnitary { deviation })
    }
}

pub(crate) fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument("matrix has non-finite entries".into()))
    }
}

/// Thin singular value decomposition with singular values sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v_adjoint: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.singular_values.len();
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate().take(k) {
            us.column_mut(j).scale_mut(*s);
        }
        us * &self.v_adjoint
    }

    /// Number of singular values above `tol` times the largest.
    pub fn rank(&self, tol: f64) -> usize {
        numerical_rank(&self.singular_values, tol)
    }
}

pub fn numerical_rank(sorted_desc: &[f64], tol: f64) -> usize {
    match sorted_desc.first() {
        Some(&max) if max > 0.0 => sorted_desc.iter().filter(|&&s| s > tol * max).count(),
        _ => 0,
    }
}

fn to_faer(m: &ComplexMatrix) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin singular value decomposition `m = U·diag(s)·V†`.
///
/// Fails loudly when the iteration does not converge or the reconstruction is
/// off by more than `1e-10` relative.
pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    ensure_finite(m)?;
    let f = to_faer(m).thin_svd().map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let out = Svd {
        u: from_faer(f.U()),
        singular_values: f.S().column_vector().iter().map(|z| z.re).collect(),
        v_adjoint: from_faer(f.V()).adjoint(),
    };
    if !out.singular_values.windows(2).all(|w| w[0] >= w[1]) {
        return Err(Error::Numerical("singular values not sorted".into()));
    }
    let scale = hs_norm(m);
    let err = hs_norm(&(out.reconstruct() - m));
    if err > 1e-10 * scale && err > 1e-13 {
        return Err(Error::Numerical(format!("SVD reconstruction error {err:.3e} exceeds tolerance")));
    }
    Ok(out)
}

pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(svd(m)?.singular_values)
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascending, eigenvectors as columns.
pub fn eigh(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !h.is_square() {
        return Err(Error::Dimension("eigh needs a square matrix".into()));
    }
    ensure_finite(h)?;
    let sym = (h + h.adjoint()).scale(0.5);
    let e = to_faer(&sym)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
    let values = e.S().column_vector().iter().map(|z| z.re).collect();
    Ok((values, from_faer(e.U())))
}

/// Eigendecomposition of a real symmetric matrix. Eigenvalues ascending, eigenvectors as columns.
pub fn eigh_real(s: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !s.is_square() || s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("eigh_real needs a finite square matrix".into()));
    }
    let m = Mat::from_fn(s.nrows(), s.ncols(), |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigensolver failed: {e:?}")))?;
    let u = e.U();
    let values = e.S().column_vector().iter().copied().collect();
    Ok((values, DMatrix::from_fn(s.nrows(), s.ncols(), |i, j| u[(i, j)])))
}

pub fn eigvalsh(h: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(eigh(h)?.0)
}

/// Eigendecomposition of a unitary matrix.
#[derive(Debug, Clone)]
pub struct UnitaryEigen {
    /// Unit-modulus eigenvalues ordered by phase in `(−π, π]`.
    pub eigenvalues: Vec<Complex64>,
    /// Orthonormal eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

/// Diagonalizes a unitary by diagonalizing a generic Hermitian combination
/// `a·(U+U†)/2 + b·(U−U†)/2i`; the two parts commute, so eigenvectors of the
/// combination are eigenvectors of `U` whenever the combination separates the
/// eigenphases. Degenerate blocks come out orthonormal from the Hermitian solver.
pub fn eig_unitary(u: &ComplexMatrix) -> Result<UnitaryEigen> {
    ensure_unitary(u, 1e-8)?;
    let d = u.nrows();
    let re_part = (u + u.adjoint()).scale(0.5);
    let im_part = (u - u.adjoint()) * c(0.0, -0.5);
    // Fixed, irrational-looking mixing angles; deterministic across runs.
    const MIXES: [f64; 6] =
        [0.577_215_664_9, 1.324_717_957, 2.236_067_977, 0.414_213_562, 4.669_201_609, 1.618_033_988];
    let mut best: Option<(f64, UnitaryEigen)> = None;
    for mix in MIXES {
        let (a, b) = (mix.cos(), mix.sin());
        let h = re_part.scale(a) + im_part.scale(b);
        let (_, vecs) = eigh(&h)?;
        let uv = u * &vecs;
        let mut lambdas: Vec<Complex64> = (0..d).map(|j| vecs.column(j).dotc(&uv.column(j))).collect();
        for l in lambdas.iter_mut() {
            *l /= l.norm();
        }
        let mut residual: f64 = 0.0;
        for (j, &l) in lambdas.iter().enumerate() {
            residual = residual.max((uv.column(j) - vecs.column(j) * l).norm());
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&x, &y| phase(lambdas[x]).total_cmp(&phase(lambdas[y])));
        let eig = UnitaryEigen {
            eigenvalues: order.iter().map(|&j| lambdas[j]).collect(),
            eigenvectors: ComplexMatrix::from_fn(d, d, |r, k| vecs[(r, order[k])]),
        };
        if residual <= 1e-10 {
            return Ok(eig);
        }
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, eig));
        }
    }
    match best {
        Some((r, eig)) if r <= 1e-8 => Ok(eig),
        Some((r, _)) => Err(Error::Numerical(format!("unitary eigendecomposition residual {r:.3e} too large"))),
        None => unreachable!(),
    }
}

/// Phase in `(−π, π]`.
pub fn phase(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -std::f64::consts::PI {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// `exp(i·H)` for Hermitian `H`.
pub fn expm_i_hermitian(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (vals, vecs) = eigh(h)?;
    let mut scaled = vecs.clone();
    for (j, v) in vals.iter().enumerate() {
        let e = Complex64::from_polar(1.0, *v);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= e;
        }
    }
    Ok(scaled * vecs.adjoint())
}

/// Hermitian `d×d` matrix from `d²` real parameters (diagonal, then real and
/// imaginary parts of the strict upper triangle).
pub fn hermitian_from_params(d: usize, params: &[f64]) -> ComplexMatrix {
    assert_eq!(params.len(), d * d, "need d² parameters for a d×d Hermitian matrix");
    let mut h = ComplexMatrix::zeros(d, d);
    let mut it = params.iter().copied();
    for j in 0..d {
        h[(j, j)] = c(it.next().unwrap(), 0.0);
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let re = it.next().unwrap();
            let im = it.next().unwrap();
            h[(j, k)] = c(re, im);
            h[(k, j)] = c(re, -im);
        }
    }
    h
}

/// Unitary `exp(iH(params))`; surjective onto `U(d)`.
pub fn unitary_from_params(d: usize, params: &[f64]) -> ComplexMatrix {
    expm_i_hermitian(&hermitian_from_params(d, params)).expect("eigendecomposition of a finite Hermitian matrix")
}

/// Unit vector from `2·dim` unconstrained reals (real parts then imaginary parts).
pub fn unit_vector_from_params(params: &[f64]) -> DVector<Complex64> {
    let dim = params.len() / 2;
    let mut v = DVector::from_fn(dim, |j, _| c(params[j], params[dim + j]));
    let n = v.norm();
    if n > 0.0 && n.is_finite() {
        v.unscale_mut(n);
    } else {
        v = DVector::zeros(dim);
        v[0] = ONE;
    }
    v
}

/// Reshuffle `Q_{(j,j'),(k,k')} → Q̃_{(j,k),(j',k')}` for a `dA·dB` square operator,
/// with the 𝒜 index leading in both the row and column of `Q`.
///
/// Worked 4×4 example (dA = dB = 2): entry `Q[(1·2+0),(0·2+1)] = Q[2,1]` has
/// `j=1, j'=0, k=0, k'=1` and lands at `Q̃[(1·2+0),(0·2+1)] = Q̃[2,1]`; entry
/// `Q[0,3]` (`j=0,j'=0,k=1,k'=1`) lands at `Q̃[(0·2+1),(0·2+1)] = Q̃[1,1]`.
pub fn reshuffle(q: &ComplexMatrix, d_a: usize, d_b: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(d_a * d_a, d_b * d_b);
    for j in 0..d_a {
        for jp in 0..d_b {
            for k in 0..d_a {
                for kp in 0..d_b {
                    out[(j * d_a + k, jp * d_b + kp)] = q[(j * d_b + jp, k * d_b + kp)];
                }
            }
        }
    }
    out
}

/// Inverse of [`reshuffle`].
pub fn unreshuffle(qt: &ComplexMatrix, d_a: usize, d_b: usize) -> ComplexMatrix {
    let d = d_a * d_b;
    let mut out = ComplexMatrix::zeros(d, d);
    for j in 0..d_a {
        for jp in 0..d_b {
            for k in 0..d_a {
                for kp in 0..d_b {
                    out[(j * d_b + jp, k * d_b + kp)] = qt[(j * d_a + k, jp * d_b + kp)];
                }
            }
        }
    }
    out
}

/// Elementwise approximate equality in max-norm.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
