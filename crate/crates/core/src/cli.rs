//! Command-line front end. Every run is determined by its flags; JSON reports carry the
//! seed, and numbers are printed with 12 significant digits.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::bounds::{approx_gate_count_bound, gate_count_bound, log_rank_bound, qft_comm_bound, BooleanFunction};
use crate::canonical::CanonicalReport;
use crate::entangle::channel::k_sch_channel_lower_bound;
use crate::entangle::{k_delta_e, k_e, k_e_channel, k_sch_channel, BoundKind, KrausChannel};
use crate::error::{Error, Result};
use crate::harness::{
    contradictions, parse_grid, run_axiom_suite_with, search_chaining_violation, sweep_superadditivity, sweep_up,
    Measure, PropertyCase, SuiteConfig,
};
use crate::matcore::io::format_number;
use crate::matcore::{GateSpec, Partition};
use crate::metric::{k_d_numeric, k_hs_two_qubit, MetricKind};
use crate::optim::OptimizerConfig;
use crate::schmidt::{k_har, k_sch, linear_entropy, operator_concurrence, SchmidtReport};

/// Successful run.
pub const EXIT_OK: i32 = 0;
/// Bad flags or inputs.
pub const EXIT_INVALID: i32 = 2;
/// A checked claim failed, such as a contradiction with the property table.
pub const EXIT_ASSERTION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dynstrength", version, about = "Strength measures for bipartite quantum operations")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every random choice.
    #[arg(long, global = true, env = "DYNSTRENGTH_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Optimizer restarts.
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    /// Objective evaluations per restart.
    #[arg(long, global = true)]
    pub max_evals: Option<usize>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

impl Common {
    fn optimizer(&self) -> OptimizerConfig {
        let mut cfg = OptimizerConfig::with_seed(self.seed);
        if let Some(r) = self.restarts {
            cfg.restarts = r;
        }
        if let Some(n) = self.max_evals {
            cfg.max_evals = n;
        }
        cfg
    }
}

#[derive(Debug, Args)]
pub struct GateArgs {
    /// Gate spec: cnot, swap, toffoli[:t], up:p, cxp:p, qft:m,n, haar:d[,seed],
    /// canon:θx,θy,θz, id[:d], file:path.
    #[arg(long)]
    pub gate: String,
    /// Cut as dA:dB; defaults to the gate's natural cut.
    #[arg(long)]
    pub partition: Option<String>,
}

impl GateArgs {
    fn load(&self) -> Result<(GateSpec, crate::matcore::ComplexMatrix, Partition)> {
        let spec: GateSpec = self.gate.parse()?;
        let m = spec.matrix()?;
        let part = match &self.partition {
            Some(p) => p.parse()?,
            None => spec
                .default_partition()
                .ok_or_else(|| Error::InvalidArgument(format!("gate `{}` needs an explicit --partition", self.gate)))?,
        };
        part.check_square(&m)?;
        Ok((spec, m, part))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Operator-Schmidt decomposition with K_Har, K_Sch and the linear entropy.
    Decompose(GateArgs),
    /// Two-qubit canonical decomposition and Schmidt class.
    Canonical(GateArgs),
    /// One strength measure of a gate.
    Strength {
        #[command(flatten)]
        gate: GateArgs,
        /// k_har, k_sch, k_e, k_delta_e, k_hs, k_d, linear_entropy, concurrence.
        #[arg(long)]
        measure: String,
        /// Distance for k_d: hs or op.
        #[arg(long, default_value = "hs")]
        metric: String,
        /// Ancilla dimensions rA:rB for k_delta_e (default: the system dimensions).
        #[arg(long)]
        ancillas: Option<String>,
    },
    /// Strength of a two-qubit channel.
    Channel {
        /// Channel spec: unitary:<gate>, depol:p, mixlocal:k[,seed], random:k[,seed], file:path.
        #[arg(long)]
        channel: String,
        /// k_e, k_sch, or k_sch_lower.
        #[arg(long)]
        measure: String,
        /// Zero elements appended before the k_sch search.
        #[arg(long, default_value_t = 0)]
        enlarge: usize,
        /// Random local bases tried by k_sch_lower.
        #[arg(long, default_value_t = 64)]
        trials: usize,
    },
    /// Lower bounds derived from strengths.
    #[command(subcommand)]
    Bound(BoundCommand),
    /// Sweep data as CSV.
    Sweep {
        /// 1: chaining search, 2: K_E versus K_Sch on U_p, 4: two-copy superadditivity.
        #[arg(long)]
        fig: u8,
        /// start:stop:step over p (sweeps 2 and 4).
        #[arg(long)]
        grid: Option<String>,
        /// Random pairs for sweep 1.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Audit the property table; exits 3 on any contradiction.
    Axioms {
        /// A measure name or `all`.
        #[arg(long, default_value = "all")]
        measure: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum BoundCommand {
    /// ¼·log₂ rank of the communication matrix of a function.
    LogRank {
        /// eq:n, ip:n, and:n or xor:n.
        #[arg(long = "fn", conflicts_with = "table")]
        function: Option<String>,
        /// CSV truth table, one row per x.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Gates of strength ≤ kmax needed for strength ku.
    Gates {
        #[arg(long)]
        ku: f64,
        #[arg(long)]
        kmax: f64,
        /// Continuity allowance f(ε) for approximate implementations.
        #[arg(long)]
        f_eps: Option<f64>,
    },
    /// Communication needed for the QFT split m:n.
    Qft {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
}

/// Result of a subcommand before writing.
enum Output {
    Json(Value),
    Csv(String),
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok((output, code)) => match write_output(&cli.common, output) {
            Ok(()) => code,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_INVALID
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn write_output(common: &Common, output: Output) -> Result<()> {
    let text = match output {
        Output::Json(v) => serde_json::to_string_pretty(&round_json(v))? + "\n",
        Output::Csv(s) => s,
    };
    match &common.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Rounds every float to 12 significant digits.
fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            format_number(x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Serializes `report` and adds the given metadata fields.
fn with_meta(report: impl Serialize, meta: &[(&str, Value)]) -> Result<Value> {
    let mut v = serde_json::to_value(report)?;
    if let Value::Object(map) = &mut v {
        for (k, val) in meta {
            map.insert(k.to_string(), val.clone());
        }
    }
    Ok(v)
}

fn execute(cli: &Cli) -> Result<(Output, i32)> {
    let common = &cli.common;
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::InvalidArgument("--threads must be ≥ 1".into()));
        }
        // Only the first configuration in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let seed = json!(common.seed);
    let json_ok = |v: Value| Ok((Output::Json(v), EXIT_OK));
    match &cli.command {
        Command::Decompose(g) => {
            let (spec, m, part) = g.load()?;
            json_ok(serde_json::to_value(SchmidtReport::new(&spec.to_string(), &m, part)?)?)
        }
        Command::Canonical(g) => {
            let (spec, m, part) = g.load()?;
            if part != Partition::qubits() {
                return Err(Error::Dimension("canonical decomposition needs a 2:2 gate".into()));
            }
            json_ok(with_meta(CanonicalReport::new(&m)?, &[("gate", json!(spec.to_string()))])?)
        }
        Command::Strength { gate, measure, metric, ancillas } => {
            let (spec, m, part) = gate.load()?;
            let cfg = common.optimizer();
            let exact =
                |name: &str, value: f64| json!({"measure": name, "value": value, "bound_kind": BoundKind::Exact});
            let report = match measure.as_str() {
                "k_har" => exact("k_har", k_har(&m, part)?),
                "k_sch" => exact("k_sch", k_sch(&m, part)?),
                "linear_entropy" => exact("linear_entropy", linear_entropy(&m, part)?),
                "concurrence" => exact("concurrence", operator_concurrence(&m, part)?),
                "k_e" => serde_json::to_value(k_e(&m, part, &cfg)?)?,
                "k_delta_e" => {
                    let anc = match ancillas {
                        Some(a) => {
                            let p: Partition = a.parse()?;
                            (p.d_a, p.d_b)
                        }
                        None => (part.d_a, part.d_b),
                    };
                    serde_json::to_value(k_delta_e(&m, part, anc, &cfg)?)?
                }
                "k_hs" if part == Partition::qubits() => {
                    let h = k_hs_two_qubit(&m)?;
                    json!({
                        "measure": "k_hs",
                        "value": h.value,
                        "bound_kind": BoundKind::Exact,
                        "minimizer_k": h.minimizer_k,
                        "minimizer_phase": h.minimizer_phase,
                    })
                }
                "k_hs" => serde_json::to_value(k_d_numeric(&m, part, MetricKind::HilbertSchmidt, &cfg)?)?,
                "k_d" => serde_json::to_value(k_d_numeric(&m, part, metric.parse()?, &cfg)?)?,
                other => return Err(Error::InvalidArgument(format!("unknown measure `{other}`"))),
            };
            json_ok(with_meta(
                report,
                &[("gate", json!(spec.to_string())), ("partition", json!(part.to_string())), ("seed", seed)],
            )?)
        }
        Command::Channel { channel, measure, enlarge, trials } => {
            let ch: KrausChannel = channel.parse()?;
            let cfg = common.optimizer();
            let report = match measure.as_str() {
                "k_e" => serde_json::to_value(k_e_channel(&ch, &cfg)?)?,
                "k_sch" => serde_json::to_value(k_sch_channel(&ch, *enlarge, &cfg)?)?,
                "k_sch_lower" => json!({
                    "measure": "k_sch_channel",
                    "value": k_sch_channel_lower_bound(&ch, *trials, common.seed)?,
                    "bound_kind": BoundKind::Lower,
                }),
                other => return Err(Error::InvalidArgument(format!("unknown channel measure `{other}`"))),
            };
            json_ok(with_meta(report, &[("channel", json!(channel)), ("seed", seed)])?)
        }
        Command::Bound(b) => json_ok(bound(b)?),
        Command::Sweep { fig, grid, samples } => {
            let grid = || -> Result<Vec<f64>> {
                parse_grid(grid.as_deref().ok_or_else(|| Error::InvalidArgument("--grid is required".into()))?)
            };
            let sweep = match fig {
                1 => search_chaining_violation(*samples, &common.optimizer())?.to_sweep(),
                2 => sweep_up(&grid()?, &common.optimizer())?,
                4 => sweep_superadditivity(&grid()?)?,
                other => return Err(Error::InvalidArgument(format!("--fig must be 1, 2 or 4, got {other}"))),
            };
            Ok((Output::Csv(sweep.to_csv_string()?), EXIT_OK))
        }
        Command::Axioms { measure, samples } => {
            let measures: Vec<Measure> = if measure == "all" { Measure::ALL.to_vec() } else { vec![measure.parse()?] };
            let mut cfg = SuiteConfig::new(*samples, common.seed);
            if let Some(r) = common.restarts {
                cfg.optimizer.restarts = r;
            }
            if let Some(n) = common.max_evals {
                cfg.optimizer.max_evals = n;
            }
            let mut cases: Vec<PropertyCase> = Vec::new();
            for m in measures {
                let found = run_axiom_suite_with(m, &cfg)?;
                for c in &found {
                    eprintln!("{c}");
                }
                cases.extend(found);
            }
            let bad = contradictions(&cases);
            for line in &bad {
                eprintln!("contradiction: {line}");
            }
            let report = json!({"seed": seed, "samples": samples, "cases": cases, "contradictions": bad});
            Ok((Output::Json(report), if bad.is_empty() { EXIT_OK } else { EXIT_ASSERTION }))
        }
    }
}

fn bound(b: &BoundCommand) -> Result<Value> {
    match b {
        BoundCommand::LogRank { function, table } => {
            let f = match (function, table) {
                (Some(spec), None) => spec.parse::<BooleanFunction>()?,
                (None, Some(path)) => BooleanFunction::from_csv(path)?,
                _ => return Err(Error::InvalidArgument("give exactly one of --fn and --table".into())),
            };
            let r = log_rank_bound(&f)?;
            if !r.identity_holds() {
                return Err(Error::Numerical(format!(
                    "rank {} differs from Schmidt number {}",
                    r.rank, r.schmidt_number
                )));
            }
            with_meta(r.to_bound_report(), &[])
        }
        BoundCommand::Gates { ku, kmax, f_eps } => {
            let (name, count) = match f_eps {
                Some(f) => ("approx_gate_count", approx_gate_count_bound(*ku, *kmax, *f)?),
                None => ("gate_count", gate_count_bound(*ku, *kmax)?),
            };
            let mut inputs = Map::new();
            inputs.insert("ku".into(), json!(ku));
            inputs.insert("kmax".into(), json!(kmax));
            if let Some(f) = f_eps {
                inputs.insert("f_eps".into(), json!(f));
            }
            Ok(json!({"bound_name": name, "value": count, "inputs": inputs}))
        }
        BoundCommand::Qft { m, n } => with_meta(qft_comm_bound(*m, *n)?, &[]),
    }
}
