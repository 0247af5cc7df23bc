//! Operational lower bounds read off strength values: gate counts, the log-rank bound on
//! quantum communication, and the distributed QFT bound.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::gates::{qft, swap};
use crate::matcore::linalg::{numerical_rank, singular_values, ComplexMatrix, RANK_TOL};
use crate::matcore::Partition;
use crate::schmidt::{k_har, schmidt_number};

/// Guard against ratios like `2.0000000001` rounding up.
const CEIL_GUARD: f64 = 1e-9;

/// Named bound value together with the strength values it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub value: f64,
    pub inputs: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(name: &str, value: f64, inputs: &[(&str, f64)]) -> Self {
        Self { bound_name: name.into(), value, inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }
}

fn check_strengths(ku: f64, kmax: f64) -> Result<()> {
    if !(kmax > 0.0 && kmax.is_finite()) {
        return Err(Error::InvalidArgument(format!("kmax must be positive, got {kmax}")));
    }
    if !(ku >= 0.0 && ku.is_finite()) {
        return Err(Error::InvalidArgument(format!("kU must be nonnegative, got {ku}")));
    }
    Ok(())
}

/// Fewest gates of strength at most `kmax` that can build an operation of strength `ku`:
/// `⌈ku/kmax⌉`.
pub fn gate_count_bound(ku: f64, kmax: f64) -> Result<u64> {
    check_strengths(ku, kmax)?;
    Ok((ku / kmax - CEIL_GUARD).ceil().max(0.0) as u64)
}

/// Gate count for an `ε`-approximation, `max(0, ⌈(ku − f(ε))/kmax⌉)`.
pub fn approx_gate_count_bound(ku: f64, kmax: f64, f_eps: f64) -> Result<u64> {
    check_strengths(ku, kmax)?;
    if !(f_eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("f(ε) must be nonnegative, got {f_eps}")));
    }
    Ok(((ku - f_eps) / kmax - CEIL_GUARD).ceil().max(0.0) as u64)
}

/// Truth table of a two-party one-bit function `f(x, y)`, rows indexed by Alice's `x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanFunction {
    bits_a: usize,
    bits_b: usize,
    table: Vec<Vec<u8>>,
}

/// Largest input length accepted for either party.
pub const MAX_FUNCTION_BITS: usize = 6;

impl BooleanFunction {
    pub fn new(bits_a: usize, bits_b: usize, table: Vec<Vec<u8>>) -> Result<Self> {
        if bits_a > MAX_FUNCTION_BITS || bits_b > MAX_FUNCTION_BITS {
            return Err(Error::InvalidArgument(format!("at most {MAX_FUNCTION_BITS} input bits per party")));
        }
        let (rows, cols) = (1usize << bits_a, 1usize << bits_b);
        if table.len() != rows || table.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension(format!("truth table must be {rows}×{cols}")));
        }
        if table.iter().flatten().any(|&v| v > 1) {
            return Err(Error::InvalidArgument("truth table entries must be 0 or 1".into()));
        }
        Ok(Self { bits_a, bits_b, table })
    }

    pub fn from_fn(bits_a: usize, bits_b: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let table = (0..1usize << bits_a).map(|x| (0..1usize << bits_b).map(|y| f(x, y) as u8).collect()).collect();
        Self::new(bits_a, bits_b, table)
    }

    /// Table from a CSV file with one row per `x` and one 0/1 column per `y`.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
        let mut table = Vec::new();
        for record in reader.records() {
            let row = record?
                .iter()
                .map(|v| v.parse::<u8>().map_err(|_| Error::Parse(format!("truth table entry `{v}` is not 0/1"))))
                .collect::<Result<Vec<u8>>>()?;
            table.push(row);
        }
        let bits = |n: usize| -> Result<usize> {
            if n.is_power_of_two() {
                Ok(n.trailing_zeros() as usize)
            } else {
                Err(Error::Dimension(format!("truth table side {n} is not a power of two")))
            }
        };
        let bits_a = bits(table.len())?;
        let bits_b = bits(table.first().map_or(0, |r| r.len()))?;
        Self::new(bits_a, bits_b, table)
    }

    pub fn bits(&self) -> (usize, usize) {
        (self.bits_a, self.bits_b)
    }

    pub fn value(&self, x: usize, y: usize) -> bool {
        self.table[x][y] == 1
    }

    /// `M_xy = (−1)^{f(x,y)}`.
    pub fn communication_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.table.len(), self.table[0].len(), |x, y| if self.value(x, y) { -1.0 } else { 1.0 })
    }

    /// `U = Σ_xy (−1)^{f(x,y)} |x⟩⟨x|⊗|y⟩⟨y|` on `2^bits_a ⊗ 2^bits_b`.
    pub fn sign_unitary(&self) -> ComplexMatrix {
        let (rows, cols) = (self.table.len(), self.table[0].len());
        let diag = nalgebra::DVector::from_fn(rows * cols, |i, _| {
            (if self.value(i / cols, i % cols) { -1.0 } else { 1.0 }).into()
        });
        ComplexMatrix::from_diagonal(&diag)
    }

    pub fn partition(&self) -> Partition {
        Partition::new(1 << self.bits_a, 1 << self.bits_b)
    }
}

/// Named functions on `n`-bit inputs: `eq:n` (x = y), `ip:n` (parity of x AND y),
/// `and:n` (x AND y nonzero), `xor:n` (parity of x XOR y).
impl FromStr for BooleanFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("function spec must look like eq|ip|and|xor:n, got `{s}`"));
        let (name, n) = s.trim().split_once(':').ok_or_else(bad)?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        let f: fn(usize, usize) -> bool = match name {
            "eq" => |x, y| x == y,
            "ip" => |x, y| (x & y).count_ones() % 2 == 1,
            "and" => |x, y| x & y != 0,
            "xor" => |x, y| (x ^ y).count_ones() % 2 == 1,
            _ => return Err(bad()),
        };
        Self::from_fn(n, n, f)
    }
}

/// Log-rank bound with the rank and the Schmidt number it must equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRankReport {
    /// `¼·log₂ rank`, in qubits of communication.
    pub value: f64,
    pub rank: usize,
    /// Schmidt number of the sign unitary.
    pub schmidt_number: usize,
}

impl LogRankReport {
    pub fn identity_holds(&self) -> bool {
        self.rank == self.schmidt_number
    }

    pub fn to_bound_report(&self) -> BoundReport {
        BoundReport::new(
            "log_rank",
            self.value,
            &[("rank", self.rank as f64), ("schmidt_number", self.schmidt_number as f64)],
        )
    }
}

/// `¼·log₂ rank((−1)^{f(x,y)})`, with the rank cross-checked against `Sch` of the sign
/// unitary.
pub fn log_rank_bound(f: &BooleanFunction) -> Result<LogRankReport> {
    let m = f.communication_matrix().map(num_complex::Complex64::from);
    let rank = numerical_rank(&singular_values(&m)?, RANK_TOL);
    let sch = schmidt_number(&f.sign_unitary(), f.partition())?;
    Ok(LogRankReport { value: (rank as f64).log2() / 4.0, rank, schmidt_number: sch })
}

/// Communication lower bound `2m` for the QFT on `m + n` qubits split `m : n`.
///
/// The report carries the numeric `K_Har` of the QFT across the cut, `K_Har(SWAP)` and
/// their ratio.
pub fn qft_comm_bound(m: usize, n: usize) -> Result<BoundReport> {
    if m > n {
        return Err(Error::InvalidArgument(format!("need m ≤ n, got m={m}, n={n}")));
    }
    if m + n > 10 {
        return Err(Error::InvalidArgument("numeric check limited to m + n ≤ 10".into()));
    }
    let k_qft = k_har(&qft(m + n)?, Partition::new(1 << m, 1 << n))?;
    let k_swap = k_har(&swap(), Partition::qubits())?;
    Ok(BoundReport::new(
        "qft_communication",
        2.0 * m as f64,
        &[("k_har_qft", k_qft), ("k_har_swap", k_swap), ("chain_ratio", k_qft / k_swap)],
    ))
}
