//! Kraus channels, two-qubit entanglement of formation, and the channel versions of
//! `K_E` and `K_Sch`.

use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{cut_entropy, BoundKind, Diagnostics, StrengthReport, Witness, PROBE_STEP};
use crate::error::{Error, Result};
use crate::matcore::gates::{pauli_y, paulis, GateSpec};
use crate::matcore::linalg::{
    eigh, ensure_finite, identity, kron, max_abs_diff, unit_vector_from_params, unitary_from_params, ComplexMatrix,
    ZERO,
};
use crate::matcore::random::{haar_unitary_with, normal_vec, rng};
use crate::matcore::state::{binary_entropy, ComplexVector, DensityMatrix};
use crate::matcore::Partition;
use crate::optim::{maximize, minimize, nelder_mead, OptimizerConfig};
use crate::schmidt::{k_sch_from_coefficients, schmidt_coefficients};

/// Completeness `Σ G†G = I` must hold to this accuracy.
pub const COMPLETENESS_TOL: f64 = 1e-8;

/// Trace-preserving map `ρ ↦ Σ_k G_k ρ G_k†` on a bipartite system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausChannel {
    partition: Partition,
    #[serde(with = "crate::matcore::io::serde_matrix_vec")]
    elements: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(partition: Partition, elements: Vec<ComplexMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidArgument("a channel needs at least one operation element".into()));
        }
        let n = partition.total();
        let mut sum = ComplexMatrix::zeros(n, n);
        for g in &elements {
            partition.check_square(g)?;
            ensure_finite(g)?;
            sum += g.adjoint() * g;
        }
        let dev = max_abs_diff(&sum, &identity(n));
        if dev > COMPLETENESS_TOL {
            return Err(Error::InvalidArgument(format!(
                "operation elements are not trace preserving (ΣG†G deviates from I by {dev:.3e})"
            )));
        }
        Ok(Self { partition, elements })
    }

    pub fn unitary(u: ComplexMatrix, partition: Partition) -> Result<Self> {
        Self::new(partition, vec![u])
    }

    /// Two-qubit `ρ ↦ (1−p)ρ + p·I/4`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("p must lie in [0,1], got {p}")));
        }
        let ps = paulis();
        let mut elements = Vec::with_capacity(16);
        for (i, a) in ps.iter().enumerate() {
            for (j, b) in ps.iter().enumerate() {
                let w = if i == 0 && j == 0 { 1.0 - 15.0 * p / 16.0 } else { p / 16.0 };
                if w > 0.0 {
                    elements.push(kron(a, b).scale(w.sqrt()));
                }
            }
        }
        Self::new(Partition::qubits(), elements)
    }

    /// Classical mixture `Σ_k w_k (A_k⊗B_k)·(A_k⊗B_k)†` of local unitaries.
    pub fn local_mixture(terms: &[(f64, ComplexMatrix, ComplexMatrix)]) -> Result<Self> {
        let total: f64 = terms.iter().map(|t| t.0).sum();
        if terms.iter().any(|t| !(t.0 >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("mixture weights must be nonnegative and sum to 1".into()));
        }
        let part = match terms.first() {
            Some((_, a, b)) => Partition::new(a.nrows(), b.nrows()),
            None => return Err(Error::InvalidArgument("empty mixture".into())),
        };
        Self::new(part, terms.iter().map(|(w, a, b)| kron(a, b).scale(w.sqrt())).collect())
    }

    /// `k` random local unitaries with equal weights.
    pub fn random_local_mixture(part: Partition, k: usize, seed: u64) -> Result<Self> {
        let mut r = rng(seed);
        let terms: Vec<_> = (0..k)
            .map(|_| (1.0 / k as f64, haar_unitary_with(part.d_a, &mut r), haar_unitary_with(part.d_b, &mut r)))
            .collect();
        Self::local_mixture(&terms)
    }

    /// Random channel with `k` elements from a Haar isometry into a `k`-dimensional
    /// environment.
    pub fn random(part: Partition, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("need at least one operation element".into()));
        }
        let n = part.total();
        let v = haar_unitary_with(n * k, &mut rng(seed));
        let elements = (0..k).map(|j| v.view((j * n, 0), (n, n)).into_owned()).collect();
        Self::new(part, elements)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let raw: KrausChannel = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::new(raw.partition, raw.elements)
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.partition.check_square(rho)?;
        Ok(self
            .elements
            .iter()
            .fold(ComplexMatrix::zeros(rho.nrows(), rho.ncols()), |acc, g| acc + g * rho * g.adjoint()))
    }

    /// Output for the pure product input `|a⟩⊗|b⟩`.
    pub fn apply_product(&self, a: &ComplexVector, b: &ComplexVector) -> Result<ComplexMatrix> {
        let v = a.kronecker(b);
        self.apply(&(&v * v.adjoint()))
    }
}

/// Channel specs: `unitary:<gate>`, `depol:p`, `mixlocal:k[,seed]`, `random:k[,seed]`,
/// `file:path`.
impl FromStr for KrausChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("unrecognized channel spec `{s}`"));
        let (name, args) = s.split_once(':').ok_or_else(bad)?;
        let ints = |a: &str| -> Result<(usize, u64)> {
            let mut it = a.split(',');
            let k = it.next().and_then(|x| x.trim().parse().ok()).ok_or_else(bad)?;
            let seed = match it.next() {
                Some(x) => x.trim().parse().map_err(|_| bad())?,
                None => 0,
            };
            Ok((k, seed))
        };
        match name {
            "unitary" => {
                let spec: GateSpec = args.parse()?;
                let part = spec
                    .default_partition()
                    .ok_or_else(|| Error::InvalidArgument(format!("gate `{args}` has no default partition")))?;
                Self::unitary(spec.matrix()?, part)
            }
            "depol" => Self::depolarizing(args.trim().parse().map_err(|_| bad())?),
            "mixlocal" => {
                let (k, seed) = ints(args)?;
                Self::random_local_mixture(Partition::qubits(), k.max(1), seed)
            }
            "random" => {
                let (k, seed) = ints(args)?;
                Self::random(Partition::qubits(), k, seed)
            }
            "file" => Self::read(args),
            _ => Err(bad()),
        }
    }
}

fn check_two_qubit(rho: &ComplexMatrix) -> Result<()> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(Error::Dimension(format!("two-qubit state needed, got {}×{}", rho.nrows(), rho.ncols())));
    }
    Ok(())
}

/// Concurrence `max(0, λ₁−λ₂−λ₃−λ₄)`, with `λ` the square roots of the eigenvalues of
/// `√ρ·ρ̃·√ρ`, `ρ̃ = (Y⊗Y)ρ*(Y⊗Y)`, in decreasing order.
pub fn wootters_concurrence(rho: &DensityMatrix) -> Result<f64> {
    let m = rho.matrix();
    check_two_qubit(m)?;
    let yy = kron(&pauli_y(), &pauli_y());
    let flipped = &yy * m.conjugate() * &yy;
    let (w, v) = eigh(m)?;
    let sqrt_rho =
        &v * ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
            4,
            w.iter().map(|x| Complex64::from(x.max(0.0).sqrt())),
        )) * v.adjoint();
    let r = &sqrt_rho * flipped * &sqrt_rho;
    let (mut lam, _) = eigh(&r)?;
    lam.iter_mut().for_each(|x| *x = x.max(0.0).sqrt());
    lam.sort_by(|a, b| b.total_cmp(a));
    Ok((lam[0] - lam[1] - lam[2] - lam[3]).max(0.0))
}

fn eof_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    binary_entropy((1.0 + (1.0 - c * c).sqrt()) / 2.0)
}

/// Entanglement of formation of a two-qubit state, `h((1+√(1−C²))/2)`.
pub fn eof_two_qubit(rho: &DensityMatrix) -> Result<f64> {
    Ok(eof_from_concurrence(wootters_concurrence(rho)?))
}

fn eof_unchecked(rho: &ComplexMatrix) -> f64 {
    match DensityMatrix::new(vec![2, 2], (rho + rho.adjoint()).scale(0.5)) {
        Ok(d) => eof_two_qubit(&d).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    }
}

/// Entanglement of a (not necessarily normalized) two-qubit pure state.
fn pure_two_qubit_entanglement(v: &[Complex64]) -> f64 {
    let n2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if n2 <= 0.0 {
        return 0.0;
    }
    eof_from_concurrence(2.0 * (v[0] * v[3] - v[1] * v[2]).norm() / n2)
}

/// Average entanglement of the pure-state decomposition `√p_j|ψ_j⟩ = Σ_i W_ji √λ_i|v_i⟩`,
/// where `W` has orthonormal columns.
fn decomposition_average(weighted: &[ComplexVector], w: &ComplexMatrix) -> f64 {
    let mut total = 0.0;
    let mut buf = [ZERO; 4];
    for j in 0..w.nrows() {
        buf.iter_mut().for_each(|z| *z = ZERO);
        for (i, v) in weighted.iter().enumerate() {
            let c = w[(j, i)];
            for (b, x) in buf.iter_mut().zip(v.iter()) {
                *b += c * x;
            }
        }
        let p: f64 = buf.iter().map(|z| z.norm_sqr()).sum();
        total += p * pure_two_qubit_entanglement(&buf);
    }
    total
}

/// Upper estimate of the two-qubit entanglement of formation from explicit pure-state
/// decompositions: `samples` Haar mixings of the weighted eigenvectors into
/// `rank + extra` states, followed by a simplex polish of the best one. Every candidate
/// is a valid decomposition, so the result never undercuts the true value.
pub fn eof_decomposition_search(rho: &DensityMatrix, samples: usize, extra: usize, seed: u64) -> Result<f64> {
    check_two_qubit(rho.matrix())?;
    let (w, v) = eigh(rho.matrix())?;
    let weighted: Vec<ComplexVector> =
        w.iter().enumerate().filter(|(_, &x)| x > 1e-14).map(|(i, &x)| v.column(i).scale(x.sqrt())).collect();
    let m = weighted.len() + extra;
    let mut r = rng(seed);
    let mut best = f64::INFINITY;
    let mut best_u = identity(m);
    for _ in 0..samples {
        let u = haar_unitary_with(m, &mut r);
        let val = decomposition_average(&weighted, &u);
        if val < best {
            best = val;
            best_u = u;
        }
    }
    // Polish in the chart W = W_best·exp(iH).
    let polish = |x: &[f64]| decomposition_average(&weighted, &(&best_u * unitary_from_params(m, x)));
    let nm = nelder_mead(polish, &vec![0.0; m * m], 0.1, 40_000, 1e-10, 1e-12);
    Ok(best.min(nm.f))
}

/// `K_E(ℰ)`: maximal entanglement of formation of `ℰ(|a⟩⟨a|⊗|b⟩⟨b|)` over pure product
/// inputs of a two-qubit channel. Reported as a lower bound.
pub fn k_e_channel(ch: &KrausChannel, cfg: &OptimizerConfig) -> Result<StrengthReport> {
    if ch.partition() != Partition::qubits() {
        return Err(Error::Dimension(format!("channel K_E needs a 2:2 channel, got {}", ch.partition())));
    }
    cfg.validate()?;
    let objective = |x: &[f64]| {
        let a = unit_vector_from_params(&x[..4]);
        let b = unit_vector_from_params(&x[4..]);
        match ch.apply_product(&a, &b) {
            Ok(out) => eof_unchecked(&out),
            Err(_) => f64::NAN,
        }
    };
    let run = maximize(objective, |rng| normal_vec(8, rng), &[], PROBE_STEP, cfg);
    let (alpha, beta) = (unit_vector_from_params(&run.best_x[..4]), unit_vector_from_params(&run.best_x[4..]));
    Ok(StrengthReport {
        measure: "k_e_channel".into(),
        value: run.best_value.max(0.0),
        bound_kind: BoundKind::Lower,
        diagnostics: Some(Diagnostics::from(&run)),
        witness: Some(Witness::Probe { alpha, beta, ancilla_dims: (1, 1) }),
    })
}

/// Zero-padded elements mixed by `W`: `F_j = Σ_i W_ji G_i`.
pub fn mix_elements(elements: &[ComplexMatrix], w: &ComplexMatrix) -> Vec<ComplexMatrix> {
    let n = elements[0].nrows();
    (0..w.nrows())
        .map(|j| elements.iter().enumerate().fold(ComplexMatrix::zeros(n, n), |acc, (i, g)| acc + g * w[(j, i)]))
        .collect()
}

/// `Σ_j tr(F_j†F_j)/(dA·dB) · K_Sch(F_j)` over a set of operation elements.
pub fn decomposition_strength(elements: &[ComplexMatrix], part: Partition) -> Result<f64> {
    let norm = part.total() as f64;
    let mut total = 0.0;
    for f in elements {
        let weight = f.norm_squared() / norm;
        if weight > 1e-14 {
            total += weight * k_sch_from_coefficients(&schmidt_coefficients(f, part)?)?;
        }
    }
    Ok(total)
}

/// Average entanglement of the ensemble `{F_j|α⟩|β⟩}` across 𝒜ℛ_𝒜 : ℬℛ_ℬ, with `α`, `β`
/// maximally entangled with ancillas. Each term is computed from the output state itself.
pub fn induced_ensemble_entanglement(elements: &[ComplexMatrix], part: Partition) -> Result<f64> {
    let (da, db) = (part.d_a, part.d_b);
    let alpha = ComplexMatrix::identity(da, da).unscale((da as f64).sqrt());
    let beta = ComplexMatrix::identity(db, db).unscale((db as f64).sqrt());
    let probe = alpha.kronecker(&beta);
    let mut total = 0.0;
    for f in elements {
        part.check_square(f)?;
        let phi = f * &probe;
        let weight = phi.norm_squared();
        if weight <= 1e-14 {
            continue;
        }
        let m = ComplexMatrix::from_fn(da * da, db * db, |r, s| {
            let (ap, x) = (r / da, r % da);
            let (bp, y) = (s / db, s % db);
            phi[(ap * db + bp, x * db + y)]
        });
        total += weight * cut_entropy(&m);
    }
    Ok(total)
}

/// `K_Sch(ℰ)`: minimum of [`decomposition_strength`] over `F = W·G` with `W` unitary of
/// size `k + enlarge` acting on the zero-padded elements. Every candidate is an
/// admissible decomposition, so the report is an upper bound.
pub fn k_sch_channel(ch: &KrausChannel, enlarge: usize, cfg: &OptimizerConfig) -> Result<StrengthReport> {
    cfg.validate()?;
    let part = ch.partition();
    let mut padded = ch.elements().to_vec();
    let n = part.total();
    padded.extend(std::iter::repeat_n(ComplexMatrix::zeros(n, n), enlarge));
    let m = padded.len();
    let objective = |x: &[f64]| {
        decomposition_strength(&mix_elements(&padded, &unitary_from_params(m, x)), part).unwrap_or(f64::NAN)
    };
    let given = vec![0.0; m * m];
    let run = minimize(objective, |rng| normal_vec(m * m, rng), &[given], PROBE_STEP, cfg);
    let elements: Vec<ComplexMatrix> = mix_elements(&padded, &unitary_from_params(m, &run.best_x))
        .into_iter()
        .filter(|f| f.norm_squared() > 1e-14)
        .collect();
    Ok(StrengthReport {
        measure: "k_sch_channel".into(),
        value: run.best_value.max(0.0),
        bound_kind: BoundKind::Upper,
        diagnostics: Some(Diagnostics::from(&run)),
        witness: Some(Witness::Decomposition { elements }),
    })
}

/// Certified lower bound on `K_Sch(ℰ)` for two-qubit channels.
///
/// Measuring both ancillas of `(ℰ⊗I)(|α⟩⟨α|⊗|β⟩⟨β|)` in local bases leaves
/// `ℰ(|a_i⟩⟨a_i|⊗|b_j⟩⟨b_j|)` with probability 1/4 each, and entanglement of formation
/// cannot grow on average under local operations and classical communication. The
/// average is maximized over the computational basis and `trials` random local bases.
pub fn k_sch_channel_lower_bound(ch: &KrausChannel, trials: usize, seed: u64) -> Result<f64> {
    if ch.partition() != Partition::qubits() {
        return Err(Error::Dimension("lower bound needs a 2:2 channel".into()));
    }
    let mut r = rng(seed);
    let mut best: f64 = 0.0;
    for t in 0..=trials {
        let (ua, ub) = if t == 0 {
            (identity(2), identity(2))
        } else {
            (haar_unitary_with(2, &mut r), haar_unitary_with(2, &mut r))
        };
        let mut avg = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let a = ua.column(i).into_owned();
                let b = ub.column(j).into_owned();
                let rho = DensityMatrix::new(vec![2, 2], ch.apply_product(&a, &b)?)?;
                avg += 0.25 * eof_two_qubit(&rho)?;
            }
        }
        best = best.max(avg);
    }
    Ok(best)
}

/// Random pure product state on two qubits, as a density matrix.
pub fn random_product_input<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    let a = haar_unitary_with(2, rng).column(0).into_owned();
    let b = haar_unitary_with(2, rng).column(0).into_owned();
    let v = a.kronecker(&b);
    &v * v.adjoint()
}
