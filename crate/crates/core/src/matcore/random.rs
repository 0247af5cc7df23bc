//! Seeded random ensembles. No global RNG: every sampler takes a seed or an RNG.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::linalg::ComplexMatrix;
use super::state::PureState;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` under `seed`; used to give parallel workers reproducible RNGs.
pub fn rng_stream(seed: u64, stream: u64) -> SeededRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix with unit-variance complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

/// Haar-distributed `d×d` unitary drawn from `rng`.
pub fn haar_unitary_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let qr = ginibre(d, d, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    // Q·diag(r_jj/|r_jj|) makes the decomposition unique and the law Haar.
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let ph = if n > 0.0 { rjj / n } else { Complex64::from(1.0) };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Deterministic Haar unitary for a given seed.
pub fn haar_unitary(d: usize, seed: u64) -> ComplexMatrix {
    haar_unitary_with(d, &mut rng(seed))
}

/// Haar-random pure state on subsystems `dims`.
pub fn random_state<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> PureState {
    let n = dims.iter().product();
    let v = DVector::from_fn(n, |_, _| gaussian_complex(rng));
    PureState::new(dims.to_vec(), v).expect("Gaussian vector is nonzero almost surely")
}

/// Standard normal reals, e.g. optimizer starting points.
pub fn normal_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}
