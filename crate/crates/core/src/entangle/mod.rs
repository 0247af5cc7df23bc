//! Entanglement-generation strengths: `K_E` and `K_ΔE` of unitaries by multi-start
//! optimization over input states, the maximally entangled probe, the two-copy
//! superadditivity construction, and their extensions to Kraus channels.

pub mod channel;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::gates::controlled_x_form;
use crate::matcore::linalg::{eigvalsh, ensure_unitary, unit_vector_from_params, ComplexMatrix};
use crate::matcore::random::normal_vec;
use crate::matcore::state::{binary_entropy, entropy_of_weights, ComplexVector, PureState};
use crate::matcore::Partition;
use crate::optim::{maximize, MultiStartResult, OptimizerConfig};

pub use channel::{eof_two_qubit, k_e_channel, k_sch_channel, wootters_concurrence, KrausChannel};

/// Initial simplex edge for unit-vector parameters drawn from a standard normal.
pub(crate) const PROBE_STEP: f64 = 0.5;

/// Entanglement entropy (bits) of `state` across `group` : rest.
pub fn entanglement(state: &PureState, group: &[usize]) -> Result<f64> {
    state.entanglement(group)
}

/// Entropy of the normalized squared singular values of `m`, computed from the Gram
/// matrix of the smaller side.
pub(crate) fn cut_entropy(m: &ComplexMatrix) -> f64 {
    let gram = if m.nrows() <= m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    match eigvalsh(&gram) {
        Ok(w) => entropy_of_weights(&w),
        Err(_) => f64::NAN,
    }
}

/// Input `|α⟩⊗|β⟩` with `α` on 𝒜ℛ_𝒜 and `β` on ℬℛ_ℬ, each stored system-major
/// (`α[a·rA + x]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductProbe {
    pub alpha: PureState,
    pub beta: PureState,
    pub ancilla_dims: (usize, usize),
}

impl ProductProbe {
    pub fn new(
        alpha: ComplexVector,
        beta: ComplexVector,
        part: Partition,
        ancilla_dims: (usize, usize),
    ) -> Result<Self> {
        let (ra, rb) = ancilla_dims;
        if ra == 0 || rb == 0 {
            return Err(Error::InvalidArgument("ancilla dimensions must be ≥ 1".into()));
        }
        Ok(Self {
            alpha: PureState::new(vec![part.d_a, ra], alpha)?,
            beta: PureState::new(vec![part.d_b, rb], beta)?,
            ancilla_dims,
        })
    }

    /// Maximally entangled probes with ancillas of the same dimension as the systems.
    pub fn maximally_entangled(part: Partition) -> Self {
        Self {
            alpha: PureState::max_entangled(part.d_a),
            beta: PureState::max_entangled(part.d_b),
            ancilla_dims: (part.d_a, part.d_b),
        }
    }

    /// Entanglement across 𝒜ℛ_𝒜 : ℬℛ_ℬ after applying `u` to 𝒜ℬ.
    pub fn output_entanglement(&self, u: &ComplexMatrix) -> Result<f64> {
        let part = Partition::new(self.alpha.dims()[0], self.beta.dims()[0]);
        part.check_square(u)?;
        Ok(cut_entropy(&probe_output(u, part, self.ancilla_dims, self.alpha.amplitudes(), self.beta.amplitudes())))
    }
}

/// `U(α⊗β)` reshaped to a `(dA·rA) × (dB·rB)` matrix across the 𝒜ℛ_𝒜 : ℬℛ_ℬ cut.
fn probe_output(
    u: &ComplexMatrix,
    part: Partition,
    (ra, rb): (usize, usize),
    alpha: &ComplexVector,
    beta: &ComplexVector,
) -> ComplexMatrix {
    let (da, db) = (part.d_a, part.d_b);
    let a = ComplexMatrix::from_fn(da, ra, |i, x| alpha[i * ra + x]);
    let b = ComplexMatrix::from_fn(db, rb, |j, y| beta[j * rb + y]);
    let phi = u * a.kronecker(&b);
    ComplexMatrix::from_fn(da * ra, db * rb, |r, s| {
        let (ap, x) = (r / ra, r % ra);
        let (bp, y) = (s / rb, s % rb);
        phi[(ap * db + bp, x * rb + y)]
    })
}

/// State on 𝒜ℛ_𝒜ℬℛ_ℬ as a `(dA·rA) × (dB·rB)` matrix, after applying `u` to 𝒜ℬ.
fn apply_on_systems(
    u: &ComplexMatrix,
    psi: &ComplexMatrix,
    part: Partition,
    (ra, rb): (usize, usize),
) -> ComplexMatrix {
    let (da, db) = (part.d_a, part.d_b);
    let sys = ComplexMatrix::from_fn(da * db, ra * rb, |r, s| {
        let (a, b) = (r / db, r % db);
        let (x, y) = (s / rb, s % rb);
        psi[(a * ra + x, b * rb + y)]
    });
    let out = u * sys;
    ComplexMatrix::from_fn(da * ra, db * rb, |r, s| {
        let (a, x) = (r / ra, r % ra);
        let (b, y) = (s / rb, s % rb);
        out[(a * db + b, x * rb + y)]
    })
}

/// `E(U|α⟩|β⟩)` for maximally entangled probes; equals `K_Sch(U)`.
pub fn k_sch_probe(u: &ComplexMatrix, part: Partition) -> Result<f64> {
    part.check_square(u)?;
    ensure_unitary(u, 1e-8)?;
    ProductProbe::maximally_entangled(part).output_entanglement(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Exact,
    Lower,
    Upper,
}

/// Serializable optimum: a product probe, a general state, a Kraus decomposition, or a
/// local unitary `a⊗b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Witness {
    Probe {
        #[serde(with = "complex_vec")]
        alpha: ComplexVector,
        #[serde(with = "complex_vec")]
        beta: ComplexVector,
        ancilla_dims: (usize, usize),
    },
    State {
        #[serde(with = "complex_vec")]
        psi: ComplexVector,
        dims: Vec<usize>,
    },
    Decomposition {
        #[serde(with = "crate::matcore::io::serde_matrix_vec")]
        elements: Vec<ComplexMatrix>,
    },
    Local {
        #[serde(with = "crate::matcore::io::serde_matrix")]
        a: ComplexMatrix,
        #[serde(with = "crate::matcore::io::serde_matrix")]
        b: ComplexMatrix,
    },
}

pub(crate) mod complex_vec {
    use super::ComplexVector;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &ComplexVector, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexVector, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(ComplexVector::from_iterator(raw.len(), raw.into_iter().map(|[re, im]| Complex64::new(re, im))))
    }
}

/// Optimizer bookkeeping attached to a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub restarts_used: usize,
    pub best_restart: usize,
    pub evals: usize,
    pub exhausted: usize,
}

impl From<&MultiStartResult> for Diagnostics {
    fn from(r: &MultiStartResult) -> Self {
        Self { restarts_used: r.restarts_used, best_restart: r.best_restart, evals: r.evals, exhausted: r.exhausted }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrengthReport {
    pub measure: String,
    pub value: f64,
    pub bound_kind: BoundKind,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

fn split_probe_params(x: &[f64], na: usize) -> (ComplexVector, ComplexVector) {
    (unit_vector_from_params(&x[..2 * na]), unit_vector_from_params(&x[2 * na..]))
}

/// Parameters reproducing a given probe in [`k_e_with`]'s chart.
pub fn probe_params(probe: &ProductProbe) -> Vec<f64> {
    let flat = |v: &ComplexVector| v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect::<Vec<_>>();
    let mut x = flat(probe.alpha.amplitudes());
    x.extend(flat(probe.beta.amplitudes()));
    x
}

/// `K_E(U)` with ancillas of the same dimensions as 𝒜 and ℬ. Optimization only finds
/// achievable values, so the report is a lower bound.
pub fn k_e(u: &ComplexMatrix, part: Partition, cfg: &OptimizerConfig) -> Result<StrengthReport> {
    k_e_with(u, part, (part.d_a, part.d_b), &[], cfg)
}

/// `K_E(U)` with explicit ancilla dimensions and optional extra starting points in the
/// [`probe_params`] chart.
pub fn k_e_with(
    u: &ComplexMatrix,
    part: Partition,
    ancilla_dims: (usize, usize),
    starts: &[Vec<f64>],
    cfg: &OptimizerConfig,
) -> Result<StrengthReport> {
    part.check_square(u)?;
    ensure_unitary(u, 1e-8)?;
    cfg.validate()?;
    let (ra, rb) = ancilla_dims;
    if ra == 0 || rb == 0 {
        return Err(Error::InvalidArgument("ancilla dimensions must be ≥ 1".into()));
    }
    let na = part.d_a * ra;
    let n = 2 * (na + part.d_b * rb);
    if let Some(bad) = starts.iter().find(|s| s.len() != n) {
        return Err(Error::Dimension(format!("start has {} parameters, expected {n}", bad.len())));
    }
    let objective = |x: &[f64]| {
        let (a, b) = split_probe_params(x, na);
        cut_entropy(&probe_output(u, part, ancilla_dims, &a, &b))
    };
    let run = maximize(objective, |rng| normal_vec(n, rng), starts, PROBE_STEP, cfg);
    let (alpha, beta) = split_probe_params(&run.best_x, na);
    Ok(StrengthReport {
        measure: "k_e".into(),
        value: run.best_value.max(0.0),
        bound_kind: BoundKind::Lower,
        diagnostics: Some(Diagnostics::from(&run)),
        witness: Some(Witness::Probe { alpha, beta, ancilla_dims }),
    })
}

/// `K_ΔE(U)` over pure states of 𝒜ℛ_𝒜ℬℛ_ℬ with the given ancilla truncation, a lower
/// bound on the untruncated quantity. The `K_E` optimum is included as a start so the
/// result never falls below it.
pub fn k_delta_e(
    u: &ComplexMatrix,
    part: Partition,
    ancilla_dims: (usize, usize),
    cfg: &OptimizerConfig,
) -> Result<StrengthReport> {
    k_delta_e_with(u, part, ancilla_dims, &[], cfg)
}

/// [`k_delta_e`] with extra starting states, each given as the real parts followed by the
/// imaginary parts of a vector on 𝒜ℛ_𝒜ℬℛ_ℬ.
pub fn k_delta_e_with(
    u: &ComplexMatrix,
    part: Partition,
    ancilla_dims: (usize, usize),
    extra_starts: &[Vec<f64>],
    cfg: &OptimizerConfig,
) -> Result<StrengthReport> {
    let ke = k_e_with(u, part, ancilla_dims, &[], cfg)?;
    let (ra, rb) = ancilla_dims;
    let (na, nb) = (part.d_a * ra, part.d_b * rb);
    let n = 2 * na * nb;
    if let Some(bad) = extra_starts.iter().find(|s| s.len() != n) {
        return Err(Error::Dimension(format!("start has {} parameters, expected {n}", bad.len())));
    }
    let mut starts = extra_starts.to_vec();
    if let Some(Witness::Probe { alpha, beta, .. }) = &ke.witness {
        let psi = alpha.kronecker(beta);
        starts.push(psi.iter().map(|z| z.re).chain(psi.iter().map(|z| z.im)).collect());
    }
    let objective = |x: &[f64]| {
        let v = unit_vector_from_params(x);
        let psi = ComplexMatrix::from_fn(na, nb, |r, s| v[r * nb + s]);
        (cut_entropy(&apply_on_systems(u, &psi, part, ancilla_dims)) - cut_entropy(&psi)).abs()
    };
    let run = maximize(objective, |rng| normal_vec(n, rng), &starts, PROBE_STEP, cfg);
    let psi = unit_vector_from_params(&run.best_x);
    Ok(StrengthReport {
        measure: "k_delta_e".into(),
        value: run.best_value.max(ke.value),
        bound_kind: BoundKind::Lower,
        diagnostics: Some(Diagnostics::from(&run)),
        witness: Some(Witness::State { psi, dims: vec![part.d_a, ra, part.d_b, rb] }),
    })
}

/// Entanglement change `|E(Uψ) − E(ψ)|` for a state on 𝒜ℛ_𝒜ℬℛ_ℬ (system-major order).
pub fn entanglement_change(
    u: &ComplexMatrix,
    part: Partition,
    ancilla_dims: (usize, usize),
    psi: &ComplexVector,
) -> Result<f64> {
    part.check_square(u)?;
    let (na, nb) = (part.d_a * ancilla_dims.0, part.d_b * ancilla_dims.1);
    if psi.len() != na * nb {
        return Err(Error::Dimension(format!("state has length {}, expected {}", psi.len(), na * nb)));
    }
    let m = ComplexMatrix::from_fn(na, nb, |r, s| psi[r * nb + s]);
    Ok((cut_entropy(&apply_on_systems(u, &m, part, ancilla_dims)) - cut_entropy(&m)).abs())
}

/// One point of the two-copy superadditivity comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperadditivityPoint {
    pub p: f64,
    /// `2H(p)`, the single-copy strength counted twice.
    pub two_h: f64,
    /// `H((1−2p)²)`.
    pub h_sq: f64,
    /// `H((1−2p)²) − 2H(p)`.
    pub gap: f64,
    /// Entanglement produced by `Ũ_p⊗Ũ_p` on the two-copy Bell probe, computed directly.
    pub direct: f64,
}

/// Entanglement across 𝒜₁𝒜₂ : ℬ₁ℬ₂ after `Ũ_p` acts on (𝒜₁,ℬ₁) and on (𝒜₂,ℬ₂), starting
/// from a Bell pair on 𝒜₁𝒜₂ and another on ℬ₁ℬ₂. Here `Ũ_p = √(1−p)I⊗I + i√p X⊗X`.
pub fn two_copy_probe_entanglement(p: f64) -> Result<f64> {
    let u = controlled_x_form(p)?;
    // Subsystem order 𝒜₁, 𝒜₂, ℬ₁, ℬ₂.
    let bell = PureState::max_entangled(2);
    let input = PureState::product(&[&bell, &bell]);
    input.apply(&u, &[0, 2])?.apply(&u, &[1, 3])?.entanglement(&[0, 1])
}

/// `H((1−2p)²) − 2H(p)` together with the directly computed two-copy value.
pub fn superadditivity_gap(p: f64) -> Result<SuperadditivityPoint> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must lie in [0,1], got {p}")));
    }
    let two_h = 2.0 * binary_entropy(p);
    let h_sq = binary_entropy((1.0 - 2.0 * p).powi(2));
    Ok(SuperadditivityPoint { p, two_h, h_sq, gap: h_sq - two_h, direct: two_copy_probe_entanglement(p)? })
}

/// Probe built from explicit vectors; handy for replaying witnesses.
pub fn probe_from_witness(w: &Witness, part: Partition) -> Result<ProductProbe> {
    match w {
        Witness::Probe { alpha, beta, ancilla_dims } => {
            ProductProbe::new(alpha.clone(), beta.clone(), part, *ancilla_dims)
        }
        _ => Err(Error::InvalidArgument("witness is not a product probe".into())),
    }
}
