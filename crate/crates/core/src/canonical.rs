//! Two-qubit canonical decomposition
//! `U = e^{iφ}(A₁⊗B₁)·exp[i(θx X⊗X + θy Y⊗Y + θz Z⊗Z)]·(A₂⊗B₂)`
//! and the Schmidt-class results that follow from it.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::gates::{hadamard, pauli_x, pauli_y, pauli_z};
use crate::matcore::linalg::{
    c, eigh_real, ensure_unitary, hs_norm, identity, kron, numerical_rank, ComplexMatrix, I, ONE, RANK_TOL, ZERO,
};
use crate::matcore::Partition;
use crate::schmidt::operator_schmidt;

/// Reconstruction tolerance (HS norm) every decomposition must meet.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Angles within this distance of a chamber face are treated as lying on it.
const FACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct CanonicalDecomposition {
    /// `(θx, θy, θz)` with `π/4 ≥ θx ≥ θy ≥ |θz|`.
    pub theta: [f64; 3],
    /// `(A₂, B₂)`, applied first.
    pub pre_local: (ComplexMatrix, ComplexMatrix),
    /// `(A₁, B₁)`, applied last.
    pub post_local: (ComplexMatrix, ComplexMatrix),
    pub global_phase: f64,
}

impl CanonicalDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let post = kron(&self.post_local.0, &self.post_local.1);
        let pre = kron(&self.pre_local.0, &self.pre_local.1);
        (post * canonical_form(self.theta) * pre) * Complex64::from_polar(1.0, self.global_phase)
    }

    pub fn reconstruction_error(&self, u: &ComplexMatrix) -> f64 {
        hs_norm(&(self.reconstruct() - u))
    }
}

/// `exp[i(θx X⊗X + θy Y⊗Y + θz Z⊗Z)]` written in Schmidt form over `{I⊗I, X⊗X, Y⊗Y, Z⊗Z}`.
pub fn canonical_form(theta: [f64; 3]) -> ComplexMatrix {
    let coeffs = canonical_coefficients(theta);
    let paulis = [identity(2), pauli_x(), pauli_y(), pauli_z()];
    let mut u = ComplexMatrix::zeros(4, 4);
    for (k, p) in paulis.iter().enumerate() {
        u += kron(p, p) * coeffs[k];
    }
    u
}

/// Coefficients of `I⊗I, X⊗X, Y⊗Y, Z⊗Z` in the canonical form.
pub fn canonical_coefficients(theta: [f64; 3]) -> [Complex64; 4] {
    let [(sx, cx), (sy, cy), (sz, cz)] = theta.map(f64::sin_cos);
    [
        c(cx * cy * cz, sx * sy * sz),
        c(cx * sy * sz, sx * cy * cz),
        c(sx * cy * sz, cx * sy * cz),
        c(sx * sy * cz, cx * cy * sz),
    ]
}

/// Columns `(|00⟩+|11⟩)/√2, i(|00⟩−|11⟩)/√2, i(|01⟩+|10⟩)/√2, (|01⟩−|10⟩)/√2`.
/// Local `SU(2)⊗SU(2)` becomes `SO(4)` in this basis.
pub fn magic_basis() -> ComplexMatrix {
    let h = c(FRAC_1_SQRT_2, 0.0);
    let ih = c(0.0, FRAC_1_SQRT_2);
    ComplexMatrix::from_row_slice(
        4,
        4,
        &[
            h, ih, ZERO, ZERO, //
            ZERO, ZERO, ih, h, //
            ZERO, ZERO, ih, -h, //
            h, -ih, ZERO, ZERO,
        ],
    )
}

/// Signs of `(X⊗X, Y⊗Y, Z⊗Z)` on each magic-basis column.
const MAGIC_SIGNS: [[f64; 3]; 4] = [[1.0, -1.0, 1.0], [-1.0, 1.0, 1.0], [1.0, 1.0, -1.0], [-1.0, -1.0, -1.0]];

/// Makhlin local invariants `(G₁, G₂)`; equal for locally equivalent gates.
pub fn makhlin_invariants(u: &ComplexMatrix) -> Result<(Complex64, f64)> {
    check_two_qubit(u)?;
    let b = magic_basis();
    let m = b.adjoint() * u * &b;
    let mm = m.transpose() * &m;
    let det = u.determinant();
    let tr = mm.trace();
    let tr2 = (&mm * &mm).trace();
    let g1 = tr * tr / (det * 16.0);
    let g2 = (tr * tr - tr2) / (det * 4.0);
    Ok((g1, g2.re))
}

fn check_two_qubit(u: &ComplexMatrix) -> Result<()> {
    Partition::qubits().check_square(u)?;
    ensure_unitary(u, 1e-8)
}

/// Canonical decomposition of a two-qubit unitary, verified to reconstruct `u`.
pub fn canonical_decompose(u: &ComplexMatrix) -> Result<CanonicalDecomposition> {
    check_two_qubit(u)?;
    // Generic real mixing weights for simultaneously diagonalizing Re and Im of MᵀM.
    const MIXES: [(f64, f64); 5] = [
        (0.780_776_406, 0.624_810_572),
        (0.316_227_766, -0.948_683_298),
        (-0.535_826_795, 0.844_327_926),
        (0.923_879_533, 0.382_683_432),
        (0.125_029_326, 0.992_152_839),
    ];
    let mut best: Option<(f64, CanonicalDecomposition)> = None;
    let mut last_err = None;
    for (a, b) in MIXES {
        match decompose_with_mix(u, a, b) {
            Ok(d) => {
                let err = d.reconstruction_error(u);
                if err <= RECONSTRUCTION_TOL * 1e-2 {
                    return Ok(d);
                }
                if best.as_ref().is_none_or(|(e, _)| err < *e) {
                    best = Some((err, d));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match (best, last_err) {
        (Some((err, d)), _) if err <= RECONSTRUCTION_TOL => Ok(d),
        (Some((err, _)), _) => Err(Error::Numerical(format!(
            "canonical decomposition reconstruction error {err:.3e} exceeds {RECONSTRUCTION_TOL:e}"
        ))),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!(),
    }
}

fn decompose_with_mix(u: &ComplexMatrix, wa: f64, wb: f64) -> Result<CanonicalDecomposition> {
    let det = u.determinant();
    let phase0 = det.arg() / 4.0;
    let us = u * Complex64::from_polar(1.0, -phase0);
    let b = magic_basis();
    let m = b.adjoint() * &us * &b;
    let mm = m.transpose() * &m;

    let re = DMatrix::from_fn(4, 4, |i, j| 0.5 * (mm[(i, j)].re + mm[(j, i)].re));
    let im = DMatrix::from_fn(4, 4, |i, j| 0.5 * (mm[(i, j)].im + mm[(j, i)].im));
    let (_, mut p) = eigh_real(&(&re * wa + &im * wb))?;
    if p.determinant() < 0.0 {
        p.column_mut(0).neg_mut();
    }
    let pc: ComplexMatrix = p.map(|x| c(x, 0.0));
    let diag = pc.transpose() * &mm * &pc;
    let off = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| diag[(i, j)].norm())
        .fold(0.0, f64::max);
    if off > 1e-7 {
        return Err(Error::Numerical(format!("mixing did not diagonalize MᵀM (off-diagonal {off:.3e})")));
    }
    let mut d: Vec<Complex64> = (0..4).map(|j| diag[(j, j)].sqrt()).collect();
    let prod = d.iter().fold(ONE, |acc, z| acc * z);
    if prod.re < 0.0 {
        d[0] = -d[0];
    }
    // K = M·P·D⁻¹ is real orthogonal with det +1.
    let mut pd_inv = pc.clone();
    for j in 0..4 {
        let dj = d[j];
        for i in 0..4 {
            pd_inv[(i, j)] /= dj;
        }
    }
    let k = &m * pd_inv;
    let imag = k.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > 1e-6 {
        return Err(Error::Numerical(format!("left factor not real (imaginary part {imag:.3e})")));
    }
    let k_real: ComplexMatrix = k.map(|z| c(z.re, 0.0));

    // arg d_j = φ + Σ_k s_jk θ_k; the augmented sign matrix has orthogonal columns of norm 2.
    let args: Vec<f64> = d.iter().map(|z| z.arg()).collect();
    let phi = args.iter().sum::<f64>() / 4.0;
    let mut theta = [0.0; 3];
    for (k, t) in theta.iter_mut().enumerate() {
        *t = (0..4).map(|j| MAGIC_SIGNS[j][k] * args[j]).sum::<f64>() / 4.0;
    }

    let post = &b * k_real * b.adjoint();
    let pre = &b * pc.transpose() * b.adjoint();
    let (a1, b1) = split_local(&post)?;
    let (a2, b2) = split_local(&pre)?;
    let mut dec =
        CanonicalDecomposition { theta, pre_local: (a2, b2), post_local: (a1, b1), global_phase: phase0 + phi };
    canonicalize(&mut dec);
    Ok(dec)
}

/// Factor a product operator `L = A⊗B` into unitaries `A`, `B`.
pub fn split_local(l: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let d = operator_schmidt(l, Partition::qubits())?;
    let s = &d.coefficients;
    if s[1] > 1e-6 * s[0] {
        return Err(Error::Numerical(format!("operator is not a product (second Schmidt coefficient {:.3e})", s[1])));
    }
    let a = d.left_ops[0].scale(std::f64::consts::SQRT_2);
    let b = d.right_ops[0].scale(s[0] / std::f64::consts::SQRT_2);
    Ok((a, b))
}

fn pauli(k: usize) -> ComplexMatrix {
    match k {
        0 => pauli_x(),
        1 => pauli_y(),
        _ => pauli_z(),
    }
}

/// `exp(iθσσ) = exp(i(θ∓π/2)σσ)·(±i σ⊗σ)`; the Pauli pair is absorbed into the pre-locals.
fn shift(dec: &mut CanonicalDecomposition, k: usize, up: bool) {
    let s = pauli(k);
    dec.pre_local.0 = &s * &dec.pre_local.0;
    dec.pre_local.1 = &s * &dec.pre_local.1;
    if up {
        dec.theta[k] -= FRAC_PI_2;
        dec.global_phase += FRAC_PI_2;
    } else {
        dec.theta[k] += FRAC_PI_2;
        dec.global_phase -= FRAC_PI_2;
    }
}

/// Conjugation by `σ_j⊗I` negates the two angles other than `j`.
fn flip_pair(dec: &mut CanonicalDecomposition, j: usize) {
    let s = pauli(j);
    dec.post_local.0 = &dec.post_local.0 * &s;
    dec.pre_local.0 = &s * &dec.pre_local.0;
    for k in 0..3 {
        if k != j {
            dec.theta[k] = -dec.theta[k];
        }
    }
}

/// Conjugation by `L⊗L` exchanging two Pauli axes.
fn swap_axes(dec: &mut CanonicalDecomposition, a: usize, b: usize) {
    let l = match (a.min(b), a.max(b)) {
        (0, 1) => ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, I]),
        (0, 2) => hadamard(),
        (1, 2) => ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2), c(0.0, -FRAC_1_SQRT_2), c(FRAC_1_SQRT_2, 0.0)],
        ),
        _ => unreachable!("axes must differ"),
    };
    let ld = l.adjoint();
    dec.post_local.0 = &dec.post_local.0 * &ld;
    dec.post_local.1 = &dec.post_local.1 * &ld;
    dec.pre_local.0 = &l * &dec.pre_local.0;
    dec.pre_local.1 = &l * &dec.pre_local.1;
    dec.theta.swap(a, b);
}

fn fold(dec: &mut CanonicalDecomposition, k: usize) {
    while dec.theta[k] > FRAC_PI_4 + FACE_TOL {
        shift(dec, k, true);
    }
    while dec.theta[k] <= -FRAC_PI_4 + FACE_TOL {
        shift(dec, k, false);
    }
}

/// Moves θ into the chamber `π/4 ≥ θx ≥ θy ≥ |θz|`, updating locals and phase so the
/// represented unitary is unchanged.
fn canonicalize(dec: &mut CanonicalDecomposition) {
    for k in 0..3 {
        fold(dec, k);
    }
    for (a, b) in [(0, 1), (1, 2), (0, 1)] {
        if dec.theta[b].abs() > dec.theta[a].abs() {
            swap_axes(dec, a, b);
        }
    }
    match (dec.theta[0] < 0.0, dec.theta[1] < 0.0) {
        (true, true) => flip_pair(dec, 2),
        (true, false) => flip_pair(dec, 1),
        (false, true) => flip_pair(dec, 0),
        (false, false) => {}
    }
    fold(dec, 2);
    // On the face θx = π/4 the sign of θz is a gauge choice.
    if (dec.theta[0] - FRAC_PI_4).abs() <= FACE_TOL && dec.theta[2] < 0.0 {
        flip_pair(dec, 1);
        fold(dec, 0);
    }
    for t in dec.theta.iter_mut() {
        if t.abs() <= FACE_TOL * 1e-3 {
            *t = 0.0;
        }
    }
}

/// The chamber representative of an angle triple.
pub fn canonical_theta(theta: [f64; 3]) -> [f64; 3] {
    let mut dec = CanonicalDecomposition {
        theta,
        pre_local: (identity(2), identity(2)),
        post_local: (identity(2), identity(2)),
        global_phase: 0.0,
    };
    canonicalize(&mut dec);
    dec.theta
}

/// Schmidt number of a two-qubit unitary from its canonical coefficients; always 1, 2 or 4.
pub fn schmidt_class(u: &ComplexMatrix) -> Result<usize> {
    let dec = canonical_decompose(u)?;
    let mags = sorted_magnitudes(dec.theta);
    match numerical_rank(&mags, RANK_TOL) {
        n @ (1 | 2 | 4) => Ok(n),
        n => Err(Error::SchmidtClass { found: n, expected: "1, 2 or 4" }),
    }
}

fn sorted_magnitudes(theta: [f64; 3]) -> Vec<f64> {
    let mut mags: Vec<f64> = canonical_coefficients(theta).iter().map(|z| z.norm()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    mags
}

/// The `p ≤ ½` with `u` locally equivalent to `√(1−p)I⊗I + i√p X⊗X`.
pub fn schmidt2_normal_form(u: &ComplexMatrix) -> Result<f64> {
    let dec = canonical_decompose(u)?;
    let mags = sorted_magnitudes(dec.theta);
    let n = numerical_rank(&mags, RANK_TOL);
    if n != 2 {
        return Err(Error::SchmidtClass { found: n, expected: "2" });
    }
    let total = mags[0] * mags[0] + mags[1] * mags[1];
    Ok((mags[1] * mags[1] / total).min(0.5))
}

/// JSON summary of a canonical decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct CanonicalReport {
    pub theta: [f64; 3],
    pub class: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub global_phase: f64,
    pub reconstruction_error: f64,
}

impl CanonicalReport {
    pub fn new(u: &ComplexMatrix) -> Result<Self> {
        let dec = canonical_decompose(u)?;
        let class = schmidt_class(u)?;
        let p = if class == 2 { Some(schmidt2_normal_form(u)?) } else { None };
        Ok(Self {
            theta: dec.theta,
            class,
            p,
            global_phase: dec.global_phase,
            reconstruction_error: dec.reconstruction_error(u),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::gates::{cnot, controlled_x_form, swap};
    use crate::matcore::linalg::{expm_i_hermitian, is_unitary, max_abs_diff};
    use crate::matcore::random::{haar_unitary, haar_unitary_with, rng};
    use crate::schmidt::schmidt_coefficients;
    use rand::Rng;

    fn close3(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn magic_basis_is_unitary() {
        assert!(is_unitary(&magic_basis(), 1e-14));
    }

    #[test]
    fn form_matches_exponential() {
        let mut r = rng(1);
        for _ in 0..20 {
            let th: [f64; 3] = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
            let h = kron(&pauli_x(), &pauli_x()).scale(th[0])
                + kron(&pauli_y(), &pauli_y()).scale(th[1])
                + kron(&pauli_z(), &pauli_z()).scale(th[2]);
            assert!(max_abs_diff(&canonical_form(th), &expm_i_hermitian(&h).unwrap()) < 1e-12);
        }
        assert!(max_abs_diff(&canonical_form([0.0; 3]), &identity(4)) < 1e-15);
        let want = (identity(4) + kron(&pauli_x(), &pauli_x()) * I).scale(FRAC_1_SQRT_2);
        assert!(max_abs_diff(&canonical_form([FRAC_PI_4, 0.0, 0.0]), &want) < 1e-15);
    }

    #[test]
    fn coefficient_magnitudes_are_half_schmidt_coefficients() {
        let mut r = rng(2);
        for _ in 0..100 {
            let th: [f64; 3] = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
            let s = schmidt_coefficients(&canonical_form(th), Partition::qubits()).unwrap();
            let m = sorted_magnitudes(th);
            for (x, y) in s.iter().zip(&m) {
                assert!((x / 2.0 - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn identity_and_known_gates() {
        assert!(close3(canonical_decompose(&identity(4)).unwrap().theta, [0.0; 3], 1e-9));
        let t = canonical_decompose(&cnot()).unwrap().theta;
        assert!(close3(t, [FRAC_PI_4, 0.0, 0.0], 1e-9), "{t:?}");
        let t = canonical_decompose(&swap()).unwrap().theta;
        assert!(close3(t, [FRAC_PI_4; 3], 1e-9), "{t:?}");
    }

    #[test]
    fn cnot_makhlin_invariants_match_canonical_xx() {
        let (g1, g2) = makhlin_invariants(&cnot()).unwrap();
        assert!(g1.norm() < 1e-12);
        assert!((g2 - 1.0).abs() < 1e-12);
        let (h1, h2) = makhlin_invariants(&canonical_form([FRAC_PI_4, 0.0, 0.0])).unwrap();
        assert!((g1 - h1).norm() < 1e-12 && (g2 - h2).abs() < 1e-12);
    }

    #[test]
    fn haar_samples_reconstruct() {
        let mut r = rng(3);
        for _ in 0..300 {
            let u = haar_unitary_with(4, &mut r);
            let d = canonical_decompose(&u).unwrap();
            assert!(d.reconstruction_error(&u) < RECONSTRUCTION_TOL);
            let [x, y, z] = d.theta;
            assert!(x <= FRAC_PI_4 + 1e-12 && x >= y - 1e-12 && y >= z.abs() - 1e-12);
            for (a, b) in [&d.pre_local, &d.post_local] {
                assert!(is_unitary(a, 1e-9) && is_unitary(b, 1e-9));
            }
            let (g1, g2) = makhlin_invariants(&u).unwrap();
            let (h1, h2) = makhlin_invariants(&canonical_form(d.theta)).unwrap();
            assert!((g1 - h1).norm() < 1e-8 && (g2 - h2).abs() < 1e-8);
        }
    }

    #[test]
    fn degenerate_inputs_reconstruct() {
        let cases = [
            [FRAC_PI_4, FRAC_PI_4, FRAC_PI_4],
            [FRAC_PI_4, FRAC_PI_4, -FRAC_PI_4],
            [FRAC_PI_4, 0.3, -0.2],
            [0.3, 0.3, 0.3],
            [0.3, 0.3, -0.3],
            [0.2, 0.0, 0.0],
            [0.0, 0.0, 0.0],
            [-FRAC_PI_4, 0.1, 0.0],
            [1.3, -2.0, 0.7],
        ];
        for (n, th) in cases.into_iter().enumerate() {
            let dressed = kron(&haar_unitary(2, n as u64), &haar_unitary(2, 100 + n as u64))
                * canonical_form(th)
                * kron(&haar_unitary(2, 200 + n as u64), &haar_unitary(2, 300 + n as u64));
            let d = canonical_decompose(&dressed).unwrap();
            assert!(d.reconstruction_error(&dressed) < RECONSTRUCTION_TOL, "{th:?}");
            assert!(close3(d.theta, canonical_theta(th), 1e-7), "{th:?}: {:?} vs {:?}", d.theta, canonical_theta(th));
        }
    }

    #[test]
    fn chamber_representatives() {
        assert!(close3(canonical_theta([FRAC_PI_4, FRAC_PI_4, -FRAC_PI_4]), [FRAC_PI_4; 3], 1e-12));
        assert!(close3(canonical_theta([-0.1, 0.3, 0.2]), [0.3, 0.2, -0.1], 1e-12));
        assert!(close3(canonical_theta([0.1 + FRAC_PI_2, 0.0, 0.0]), [0.1, 0.0, 0.0], 1e-12));
    }

    #[test]
    fn classes() {
        assert_eq!(schmidt_class(&kron(&haar_unitary(2, 1), &haar_unitary(2, 2))).unwrap(), 1);
        assert_eq!(schmidt_class(&cnot()).unwrap(), 2);
        assert_eq!(schmidt_class(&crate::matcore::gates::up(0.3).unwrap()).unwrap(), 4);
        assert_eq!(schmidt_class(&swap()).unwrap(), 4);
    }

    #[test]
    fn normal_form_round_trip() {
        assert!((schmidt2_normal_form(&cnot()).unwrap() - 0.5).abs() < 1e-9);
        for (n, p) in [0.05, 0.2, 0.45, 0.8].into_iter().enumerate() {
            let a = kron(&haar_unitary(2, 10 + n as u64), &haar_unitary(2, 20 + n as u64));
            let b = kron(&haar_unitary(2, 30 + n as u64), &haar_unitary(2, 40 + n as u64));
            let u = a * controlled_x_form(p).unwrap() * b;
            assert!((schmidt2_normal_form(&u).unwrap() - p.min(1.0 - p)).abs() < 1e-9);
        }
        assert!(matches!(schmidt2_normal_form(&swap()), Err(Error::SchmidtClass { found: 4, .. })));
    }

    #[test]
    fn rejects_non_unitary() {
        assert!(canonical_decompose(&identity(4).scale(2.0)).is_err());
        assert!(canonical_decompose(&identity(3)).is_err());
    }
}
