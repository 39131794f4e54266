//! Command-line front end.
//!
//! Exit codes: 0 when an analysis completes (whatever the verdict), 2 for
//! input errors, 3 for capacity errors and 4 for internal invariant
//! violations.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::birkhoff::{birkhoff_decompose, decompose_chain, rotate_chain, PermComponent};
use crate::chain::{Chain, Flavor};
use crate::ergodicity::{
    ergodicity_verdict_with, infinite_flow_graph, lyapunov, lyapunov_decrease_identity_check,
    rate_certificate, simulate, ErgodicityVerdict, InfiniteFlowGraph, Status, VerdictOptions,
    VerdictWitness,
};
use crate::flow::{
    has_absolute_infinite_flow, has_infinite_flow, AbsoluteFlowVerdict, InfiniteFlowVerdict,
};
use crate::io::{ChainSpec, CollectionSpec};
use crate::switching::{build_zero_flow_graph, is_cycle_free, stability_verdict, Stability};
use crate::{random, Error, Result, Settings};

#[derive(Debug, Parser)]
#[command(name = "chainflow", version, about = "Flow and ergodicity analysis of stochastic matrix chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Flow properties, permutation component and ergodicity of a chain.
    Analyze(RunArgs),
    /// Trajectory of x(k+1) = A(k) x(k) from the input's `x0`, as CSV.
    Simulate(RunArgs),
    /// Convergence-rate certificate for a doubly stochastic chain.
    Rate(RunArgs),
    /// Absolute asymptotic stability of a matrix collection.
    Stability(RunArgs),
    /// Seeded randomized self-check of core identities.
    Check(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Chain or collection description (JSON).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Report destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    tol_zero: Option<f64>,
    #[arg(long)]
    tol_stoch: Option<f64>,
    /// Flow threshold for accumulation times.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    delta: f64,
    /// Steps for `simulate` (default 100); spread-trace exponent for
    /// `analyze` (default 20).
    #[arg(long)]
    horizon: Option<usize>,
    /// Accumulation times for `rate`; trials per check for `check`.
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination for the spread trace (`analyze`) or the
    /// certificate trace (`rate`).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Where `stability` writes the witness chain on a `no` verdict.
    #[arg(long)]
    witness_output: Option<PathBuf>,
}

impl RunArgs {
    fn settings(&self) -> Result<Settings> {
        let mut s = Settings::default();
        for (name, value) in [("--tol-zero", self.tol_zero), ("--tol-stoch", self.tol_stoch)] {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if let Some(v) = self.tol_zero {
            s = s.with_tol_zero(v);
        }
        if let Some(v) = self.tol_stoch {
            s = s.with_tol_stoch(v);
        }
        Ok(s)
    }

    fn input_text(&self) -> Result<String> {
        let path = self
            .input
            .as_ref()
            .ok_or_else(|| Error::Invalid("--input is required".into()))?;
        std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }

    fn chain_spec(&self) -> Result<ChainSpec> {
        ChainSpec::from_json(&self.input_text()?)
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Capacity { .. } => 3,
        Error::Internal(_) => 4,
        _ => 2,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Rate(a) => rate(a),
        Command::Stability(a) => stability(a),
        Command::Check(a) => check(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

#[derive(Serialize)]
struct AnalyzeReport {
    dim: usize,
    flavor: Flavor,
    decomposable: bool,
    gamma: Option<f64>,
    permutation_component: Option<PermComponent>,
    infinite_flow: InfiniteFlowVerdict,
    absolute_infinite_flow: AbsoluteFlowVerdict,
    ergodicity: ErgodicityVerdict,
    /// `null` when undecided.
    ergodic: Option<bool>,
    infinite_flow_graph: Option<InfiniteFlowGraph>,
}

fn analyze(args: &RunArgs) -> Result<()> {
    let settings = args.settings()?;
    let chain = args.chain_spec()?.to_chain(&settings)?;
    let pcomp = decompose_chain(&chain, &settings);
    let options = VerdictOptions {
        spread_exponent: args.horizon.unwrap_or(20).min(60) as u32,
        ..VerdictOptions::default()
    };
    let ergodicity = ergodicity_verdict_with(&chain, &settings, &options)?;
    let graph = match &pcomp {
        Some(p) => Some(infinite_flow_graph(&chain, p, &settings)?),
        None => None,
    };
    if let Some(path) = &args.trace {
        let mut csv = String::from("k,value\n");
        if let Some(VerdictWitness::Numerical { spread_trace, .. }) = &ergodicity.witness {
            for s in spread_trace {
                let _ = writeln!(csv, "{},{}", s.k, s.spread);
            }
        }
        write_text(Some(path), &csv)?;
    }
    let report = AnalyzeReport {
        dim: chain.dim(),
        flavor: chain.flavor(),
        decomposable: pcomp.is_some(),
        gamma: pcomp.as_ref().map(|p| p.gamma),
        infinite_flow: has_infinite_flow(&chain, &settings)?,
        absolute_infinite_flow: has_absolute_infinite_flow(&chain, &settings)?,
        ergodic: match ergodicity.status {
            Status::Ergodic => Some(true),
            Status::NotErgodic => Some(false),
            Status::Undecided => None,
        },
        ergodicity,
        permutation_component: pcomp,
        infinite_flow_graph: graph,
    };
    write_json(args.output.as_deref(), &report)
}

fn require_x0(spec: &ChainSpec) -> Result<&[f64]> {
    let x0 = spec
        .x0
        .as_deref()
        .ok_or_else(|| Error::Invalid("the input has no x0".into()))?;
    if x0.len() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            found: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("x0 has a non-finite entry".into()));
    }
    Ok(x0)
}

fn simulate_cmd(args: &RunArgs) -> Result<()> {
    let settings = args.settings()?;
    let spec = args.chain_spec()?;
    let chain = spec.to_chain(&settings)?;
    let x0 = require_x0(&spec)?;
    let xs = simulate(&chain, x0, args.horizon.unwrap_or(100))?;
    let mut csv = String::from("k");
    for i in 1..=chain.dim() {
        let _ = write!(csv, ",x_{i}");
    }
    csv.push_str(",V\n");
    for (k, x) in xs.iter().enumerate() {
        let _ = write!(csv, "{k}");
        for v in x {
            let _ = write!(csv, ",{v}");
        }
        let _ = writeln!(csv, ",{}", lyapunov(x));
    }
    write_text(args.output.as_deref(), &csv)
}

fn rate(args: &RunArgs) -> Result<()> {
    let settings = args.settings()?;
    let spec = args.chain_spec()?;
    let chain = spec.to_chain(&settings)?;
    let x0 = require_x0(&spec)?;
    if !(args.delta > 0.0 && args.delta < 1.0) {
        return Err(Error::Invalid(format!("--delta must lie in (0, 1), got {}", args.delta)));
    }
    let cert = rate_certificate(&chain, x0, args.delta, args.count, &settings)?;
    if let Some(path) = &args.trace {
        let mut csv = String::from("q,t_q,V,bound\n");
        for p in &cert.trace {
            let _ = writeln!(csv, "{},{},{},{}", p.q, p.t, p.v, p.bound);
        }
        write_text(Some(path), &csv)?;
    }
    write_json(args.output.as_deref(), &cert)
}

fn stability(args: &RunArgs) -> Result<()> {
    let settings = args.settings()?;
    let coll = CollectionSpec::from_json(&args.input_text()?)?.to_collection(&settings)?;
    let verdict = stability_verdict(&coll, &settings)?;
    if let (Stability::No, Some(path), Some(chain)) =
        (verdict.stable, &args.witness_output, &verdict.witness_chain)
    {
        write_json(Some(path), &ChainSpec::from_chain(chain))?;
    }
    write_json(args.output.as_deref(), &verdict)
}

#[derive(Serialize)]
struct CheckSummary {
    name: &'static str,
    trials: usize,
    failures: usize,
}

#[derive(Serialize)]
struct CheckReport {
    seed: u64,
    checks: Vec<CheckSummary>,
}

/// Runs `trial` `trials` times and counts failures.
fn tally(name: &'static str, trials: usize, mut trial: impl FnMut() -> Result<bool>) -> Result<CheckSummary> {
    let mut failures = 0;
    for _ in 0..trials {
        if !trial()? {
            failures += 1;
        }
    }
    Ok(CheckSummary {
        name,
        trials,
        failures,
    })
}

fn check(args: &RunArgs) -> Result<()> {
    let settings = args.settings()?;
    let trials = args.count;
    let mut rng = random::rng(args.seed);
    let mut checks = Vec::new();

    checks.push(tally("birkhoff_reconstruction", trials, || {
        let m = rand::Rng::gen_range(&mut rng, 2..=6);
        let a = random::doubly_stochastic(&mut rng, m);
        let d = birkhoff_decompose(&a, &settings)?;
        let err = d
            .reconstruct(m)
            .iter()
            .zip(a.as_slice())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        Ok(err <= 1e-10 && (d.weight_sum() - 1.0).abs() <= 1e-10)
    })?);

    checks.push(tally("rotated_product_identity", trials, || {
        let m = rand::Rng::gen_range(&mut rng, 2..=5);
        let chain = random::chain(&mut rng, m, 2, 3, Flavor::Stochastic);
        let pchain = random::perm_chain(&mut rng, m, 2, 3);
        let rotated = rotate_chain(&chain, &pchain, &settings)?;
        let (k, s) = (8, 3);
        let lhs = rotated.backward_product(k, s)?;
        let rhs = pchain
            .product(k)
            .inverse()
            .to_matrix()
            .mul(&chain.backward_product(k, s)?)
            .mul(&pchain.product(s).to_matrix());
        Ok(lhs.max_abs_diff(&rhs) <= 1e-10)
    })?);

    checks.push(tally("lyapunov_decrease_identity", trials, || {
        let m = rand::Rng::gen_range(&mut rng, 2..=6);
        let a = random::doubly_stochastic(&mut rng, m);
        let x = random::vector(&mut rng, m);
        Ok(lyapunov_decrease_identity_check(&a, &x))
    })?);

    checks.push(tally("zero_flow_bridge", trials, || {
        let m = rand::Rng::gen_range(&mut rng, 2..=5);
        let terms = rand::Rng::gen_range(&mut rng, 1..=m);
        let a = random::doubly_stochastic_with_terms(&mut rng, m, terms).into_inner();
        let chain = Chain::constant(a.clone(), Flavor::DoublyStochastic, &settings)?;
        let coll = crate::switching::Collection::new(
            vec![a],
            crate::switching::CollectionFlavor::DoublyStochastic,
            &settings,
        )?;
        let free = is_cycle_free(&build_zero_flow_graph(&coll, &settings)?).cycle_free;
        Ok(free == has_absolute_infinite_flow(&chain, &settings)?.holds)
    })?);

    let failed = checks.iter().any(|c| c.failures > 0);
    write_json(
        args.output.as_deref(),
        &CheckReport {
            seed: args.seed,
            checks,
        },
    )?;
    if failed {
        return Err(Error::Internal("self-check found failures".into()));
    }
    Ok(())
}
