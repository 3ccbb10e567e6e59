//! `innrange` — batch driver for interval network range analysis.
//!
//! The binary wires the library crates together behind a handful of
//! subcommands: structural validation, merging-based abstraction, MILP
//! export, output range computation (branch-and-bound or the enumeration
//! oracle), sampled soundness checks, partition benchmarks, and replay of
//! external solver solutions against an exported model.
//!
//! Networks are read from JSON, or from NNet text when the file name ends in
//! `.nnet`. Every randomized command takes `--seed` (default 0, never the
//! wall clock); given the same files, flags and seed, a command reproduces
//! its primary output byte for byte — wall-clock timings are kept in
//! separate fields so results can be compared while ignoring them.
//!
//! Exit codes: 0 success; 1 invalid input or usage; 2 for analysis outcomes
//! that need attention (infeasible model, solver limit reached before
//! optimality, sampled range violation, failed solution replay).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use innrange_core::io::json::{
    parse_box_json, parse_network_json, parse_partition_json, NetworkDocument,
};
use innrange_core::io::nnet::{parse_nnet, NnetMeta};
use innrange_core::io::results::{
    write_bench_csv, write_bench_json, write_range_json, write_soundness_json,
};
use innrange_core::{
    abstract_network, bench_partitions, encode, exact_range_oracle, output_range,
    soundness_check, AbstractionMode, BoundStatus, EncodeStyle, InputBox, IntervalNetwork,
    NodeRef, RangeConfig, RangeResult, SampleConfig,
};
use innrange_milp::{check_solution, parse_lp, parse_solution, write_lp, ObjSense, SolveConfig};

/// Interval network toolkit: sound node-merging abstraction and MILP output
/// range analysis.
#[derive(Parser)]
#[command(name = "innrange", version)]
struct Cli {
    /// Cap the worker thread count for parallel bound computations.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network file, and optionally a partition, and print a report.
    Validate {
        /// Network file: JSON, or NNet text when the name ends in `.nnet`.
        network: PathBuf,
        /// Partition JSON to check against the network.
        #[arg(long, value_name = "FILE")]
        partition: Option<PathBuf>,
    },
    /// Merge nodes per a partition and write the abstract network as JSON.
    Abstract {
        /// Network file: JSON, or NNet text when the name ends in `.nnet`.
        network: PathBuf,
        /// Partition JSON describing the node groups to merge.
        #[arg(long, value_name = "FILE")]
        partition: PathBuf,
        /// Drop the group-size weight factor. The result is NOT sound; it
        /// exists to demonstrate why the factor matters.
        #[arg(long)]
        unsound_unscaled: bool,
        /// Output file (stdout when absent).
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Export the mixed-integer encoding of a network over an input box.
    Encode {
        /// Network file: JSON, or NNet text when the name ends in `.nnet`.
        network: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        /// Merge nodes per this partition before encoding.
        #[arg(long, value_name = "FILE")]
        partition: Option<PathBuf>,
        /// With --partition: drop the group-size weight factor (NOT sound).
        #[arg(long)]
        unsound_unscaled: bool,
        /// Row style for the rectifier constraints.
        #[arg(long, value_enum, default_value_t = StyleArg::Tightened)]
        style: StyleArg,
        /// Output node the objective tracks.
        #[arg(long, value_name = "N", default_value_t = 0)]
        objective_node: usize,
        /// Optimization direction of the objective.
        #[arg(long, value_enum, default_value_t = SenseArg::Max)]
        objective_sense: SenseArg,
        /// Output syntax: LP text or a JSON dump of the model.
        #[arg(long, value_enum, default_value_t = FormatArg::Lp)]
        format: FormatArg,
        /// Output file (stdout when absent).
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Compute per-output bounds by branch-and-bound and write them as JSON.
    Range {
        /// Network file: JSON, or NNet text when the name ends in `.nnet`.
        network: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        /// Merge nodes per this partition before solving.
        #[arg(long, value_name = "FILE")]
        partition: Option<PathBuf>,
        /// With --partition: drop the group-size weight factor (NOT sound).
        #[arg(long)]
        unsound_unscaled: bool,
        #[command(flatten)]
        solver: SolverArgs,
        /// Output file (stdout when absent).
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Exact bounds for a small network by enumerating every rectifier
    /// on/off pattern.
    Oracle {
        /// Network file: JSON, or NNet text when the name ends in `.nnet`.
        network: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        /// Row style for the rectifier constraints.
        #[arg(long, value_enum, default_value_t = StyleArg::Tightened)]
        style: StyleArg,
        /// Output file (stdout when absent).
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Sample concrete executions and check them against the abstract range.
    CheckSoundness {
        /// Network file: JSON, or NNet text when the name ends in `.nnet`.
        network: PathBuf,
        /// Partition JSON describing the node groups to merge.
        #[arg(long, value_name = "FILE")]
        partition: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        /// Drop the group-size weight factor (NOT sound); expect violations.
        #[arg(long)]
        unsound_unscaled: bool,
        #[command(flatten)]
        solver: SolverArgs,
        /// Input points to sample from the box.
        #[arg(long, value_name = "N", default_value_t = 100)]
        samples: usize,
        /// Weight selections to sample per input point.
        #[arg(long, value_name = "N", default_value_t = 10)]
        selections: usize,
        /// Seed for all sampling.
        #[arg(long, value_name = "SEED", default_value_t = 0)]
        seed: u64,
        /// Absolute slack allowed outside the reported range.
        #[arg(long, value_name = "TOL", default_value_t = 1e-6)]
        tol: f64,
        /// Output file (stdout when absent).
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Time abstraction/encoding/solving over random balanced partitions of
    /// each hidden layer, for a list of group counts.
    Bench {
        /// Network file: JSON, or NNet text when the name ends in `.nnet`.
        network: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        /// Group counts to benchmark, comma separated (e.g. 2,4,8).
        #[arg(long, value_delimiter = ',', required = true, value_name = "N,..")]
        counts: Vec<usize>,
        /// Random partitions drawn per group count.
        #[arg(long, value_name = "N", default_value_t = 10)]
        runs: usize,
        /// Seed for partition drawing.
        #[arg(long, value_name = "SEED", default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the per-run table as CSV to this file.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        /// Write rows and per-count aggregates as JSON to this file.
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },
    /// Replay an external solver's solution file against an exported LP
    /// model and report violations.
    CheckSolution {
        /// Model in LP text form, as written by `encode`.
        model: PathBuf,
        /// Solution file: `name value` pairs, one per line.
        solution: PathBuf,
        /// Absolute tolerance for bounds, rows and integrality.
        #[arg(long, value_name = "TOL", default_value_t = 1e-6)]
        tol: f64,
    },
}

/// Where the input box comes from.
#[derive(Args)]
struct InputArgs {
    /// Input box JSON; optional for NNet networks, which declare one.
    #[arg(long = "box", value_name = "FILE")]
    input_box: Option<PathBuf>,
    /// Map the box through the NNet normalization constants before use.
    #[arg(long)]
    normalize: bool,
}

/// Encoding style and branch-and-bound limits.
#[derive(Args)]
struct SolverArgs {
    /// Row style for the rectifier constraints.
    #[arg(long, value_enum, default_value_t = StyleArg::Tightened)]
    style: StyleArg,
    /// Stop each bound after this many search nodes; the reported bound
    /// stays sound but may be loose.
    #[arg(long, value_name = "N")]
    node_limit: Option<u64>,
    /// Stop each bound after this many seconds.
    #[arg(long, value_name = "SECS")]
    time_limit_secs: Option<f64>,
}

impl SolverArgs {
    fn range_config(&self, mode: AbstractionMode) -> Result<RangeConfig> {
        let mut solver = SolveConfig::default();
        solver.node_limit = self.node_limit;
        if let Some(secs) = self.time_limit_secs {
            if !(secs > 0.0 && secs.is_finite()) {
                bail!("--time-limit-secs must be a positive number, got {secs}");
            }
            solver.time_limit = Some(Duration::from_secs_f64(secs));
        }
        Ok(RangeConfig {
            solver,
            style: self.style.into(),
            mode,
            ..RangeConfig::default()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StyleArg {
    /// Secant rows plus propagated variable bounds.
    Tightened,
    /// Literal endpoint rows and big-M bounds only.
    BigM,
}

impl From<StyleArg> for EncodeStyle {
    fn from(s: StyleArg) -> EncodeStyle {
        match s {
            StyleArg::Tightened => EncodeStyle::Tightened,
            StyleArg::BigM => EncodeStyle::BigMOnly,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SenseArg {
    Min,
    Max,
}

impl From<SenseArg> for ObjSense {
    fn from(s: SenseArg) -> ObjSense {
        match s {
            SenseArg::Min => ObjSense::Minimize,
            SenseArg::Max => ObjSense::Maximize,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    /// LP text, readable by common external solvers.
    Lp,
    /// JSON dump of variables, rows and the objective.
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too; they are not failures.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .context("configuring the --jobs worker pool")?;
    }
    match cli.command {
        Command::Validate { network, partition } => cmd_validate(&network, partition.as_deref()),
        Command::Abstract {
            network,
            partition,
            unsound_unscaled,
            output,
        } => cmd_abstract(&network, &partition, unsound_unscaled, output.as_deref()),
        Command::Encode {
            network,
            input,
            partition,
            unsound_unscaled,
            style,
            objective_node,
            objective_sense,
            format,
            output,
        } => cmd_encode(
            &network,
            &input,
            partition.as_deref(),
            unsound_unscaled,
            style,
            objective_node,
            objective_sense,
            format,
            output.as_deref(),
        ),
        Command::Range {
            network,
            input,
            partition,
            unsound_unscaled,
            solver,
            output,
        } => cmd_range(
            &network,
            &input,
            partition.as_deref(),
            unsound_unscaled,
            &solver,
            output.as_deref(),
        ),
        Command::Oracle {
            network,
            input,
            style,
            output,
        } => cmd_oracle(&network, &input, style, output.as_deref()),
        Command::CheckSoundness {
            network,
            partition,
            input,
            unsound_unscaled,
            solver,
            samples,
            selections,
            seed,
            tol,
            output,
        } => cmd_check_soundness(
            &network,
            &partition,
            &input,
            unsound_unscaled,
            &solver,
            SampleConfig {
                inputs: samples,
                selections,
                seed,
                tol,
            },
            output.as_deref(),
        ),
        Command::Bench {
            network,
            input,
            counts,
            runs,
            seed,
            solver,
            csv,
            json,
        } => cmd_bench(
            &network,
            &input,
            &counts,
            runs,
            seed,
            &solver,
            csv.as_deref(),
            json.as_deref(),
        ),
        Command::CheckSolution {
            model,
            solution,
            tol,
        } => cmd_check_solution(&model, &solution, tol),
    }
}

fn cmd_validate(network: &Path, partition: Option<&Path>) -> Result<u8> {
    let loaded = load_network(network)?;
    let net = &loaded.net;
    println!("network {}: ok", network.display());
    println!("  layers: {:?}", net.layer_sizes());
    println!(
        "  kind: {}",
        if net.is_concrete() { "concrete" } else { "interval" }
    );
    let Some(path) = partition else {
        return Ok(0);
    };
    let p = load_partition(path)?;
    let bad = p.validate(net, false);
    if !bad.is_empty() {
        println!("partition {}: {} problem(s)", path.display(), bad.len());
        for v in &bad {
            println!("  - {v}");
        }
        return Ok(1);
    }
    println!("partition {}: ok", path.display());
    println!("  groups per layer: {:?}", p.group_counts());
    if !(p.is_identity_on(0) && p.is_identity_on(net.depth())) {
        println!("  note: merges input or output nodes; range analysis rejects that, soundness needs those layers intact");
    }
    Ok(0)
}

fn cmd_abstract(
    network: &Path,
    partition: &Path,
    unsound_unscaled: bool,
    output: Option<&Path>,
) -> Result<u8> {
    let loaded = load_network(network)?;
    let p = load_partition(partition)?;
    let mode = abstraction_mode(unsound_unscaled);
    let merged = abstract_network(&loaded.net, &p, mode)?;
    let mut doc = NetworkDocument::from_network(&merged);
    doc.provenance = Some(format!(
        "merged from {} with group counts {:?}{}",
        network.display(),
        p.group_counts(),
        if mode.is_sound() {
            ""
        } else {
            " (UNSCALED HULL - NOT SOUND)"
        },
    ));
    let text = serde_json::to_string_pretty(&doc).expect("document serialization") + "\n";
    emit(output, &text)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_encode(
    network: &Path,
    input: &InputArgs,
    partition: Option<&Path>,
    unsound_unscaled: bool,
    style: StyleArg,
    objective_node: usize,
    objective_sense: SenseArg,
    format: FormatArg,
    output: Option<&Path>,
) -> Result<u8> {
    let loaded = load_network(network)?;
    let b = resolve_box(input, &loaded)?;
    let net = match partition {
        Some(path) => {
            let p = load_partition(path)?;
            abstract_network(&loaded.net, &p, abstraction_mode(unsound_unscaled))?
        }
        None => loaded.net,
    };
    let mut enc = encode(&net, &b, &[], style.into())?;
    enc.set_objective(
        NodeRef::new(net.depth(), objective_node),
        objective_sense.into(),
    )?;
    let text = match format {
        FormatArg::Lp => write_lp(&enc.model),
        FormatArg::Json => {
            let mut js = enc.model.to_debug_json();
            if !js.ends_with('\n') {
                js.push('\n');
            }
            js
        }
    };
    emit(output, &text)?;
    Ok(0)
}

fn cmd_range(
    network: &Path,
    input: &InputArgs,
    partition: Option<&Path>,
    unsound_unscaled: bool,
    solver: &SolverArgs,
    output: Option<&Path>,
) -> Result<u8> {
    let loaded = load_network(network)?;
    let b = resolve_box(input, &loaded)?;
    let p = partition.map(load_partition).transpose()?;
    let cfg = solver.range_config(abstraction_mode(unsound_unscaled))?;
    let res = output_range(&loaded.net, &b, p.as_ref(), &cfg)?;
    emit(output, &write_range_json(&res))?;
    Ok(range_exit(&res))
}

fn cmd_oracle(
    network: &Path,
    input: &InputArgs,
    style: StyleArg,
    output: Option<&Path>,
) -> Result<u8> {
    let loaded = load_network(network)?;
    let b = resolve_box(input, &loaded)?;
    let cfg = RangeConfig {
        style: style.into(),
        ..RangeConfig::default()
    };
    let res = exact_range_oracle(&loaded.net, &b, &cfg)?;
    emit(output, &write_range_json(&res))?;
    Ok(range_exit(&res))
}

fn cmd_check_soundness(
    network: &Path,
    partition: &Path,
    input: &InputArgs,
    unsound_unscaled: bool,
    solver: &SolverArgs,
    plan: SampleConfig,
    output: Option<&Path>,
) -> Result<u8> {
    let loaded = load_network(network)?;
    let b = resolve_box(input, &loaded)?;
    let p = load_partition(partition)?;
    let cfg = solver.range_config(abstraction_mode(unsound_unscaled))?;
    let report = soundness_check(&loaded.net, &p, &b, &cfg, &plan)?;
    emit(output, &write_soundness_json(&report))?;
    Ok(if report.violations.is_empty() { 0 } else { 2 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    network: &Path,
    input: &InputArgs,
    counts: &[usize],
    runs: usize,
    seed: u64,
    solver: &SolverArgs,
    csv: Option<&Path>,
    json: Option<&Path>,
) -> Result<u8> {
    let loaded = load_network(network)?;
    let b = resolve_box(input, &loaded)?;
    let cfg = solver.range_config(AbstractionMode::Scaled)?;
    let report = bench_partitions(&loaded.net, &b, counts, runs, seed, &cfg)?;
    if let Some(path) = csv {
        emit(Some(path), &write_bench_csv(&report))?;
    }
    if let Some(path) = json {
        emit(Some(path), &write_bench_json(&report))?;
    }
    if csv.is_none() && json.is_none() {
        print!("{}", write_bench_csv(&report));
    }
    Ok(0)
}

fn cmd_check_solution(model: &Path, solution: &Path, tol: f64) -> Result<u8> {
    let parsed = parse_lp(&read(model)?)
        .with_context(|| format!("parsing LP model {}", model.display()))?;
    let assignment = parse_solution(&read(solution)?)
        .with_context(|| format!("parsing solution file {}", solution.display()))?;
    let check = check_solution(&parsed, &assignment, tol);
    if let Some(obj) = check.objective {
        println!("objective: {obj}");
    }
    if check.ok {
        println!("solution satisfies every bound, row and integrality check at tolerance {tol}");
        Ok(0)
    } else {
        println!(
            "solution fails {} check(s), worst violation {:.3e}:",
            check.violations.len(),
            check.max_violation
        );
        for v in &check.violations {
            println!("  - {v}");
        }
        Ok(2)
    }
}

/// A parsed network plus, for NNet files, its normalization metadata.
struct LoadedNetwork {
    net: IntervalNetwork,
    meta: Option<NnetMeta>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_network(path: &Path) -> Result<LoadedNetwork> {
    let text = read(path)?;
    let is_nnet = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("nnet"));
    if is_nnet {
        let (net, meta) = parse_nnet(&text)
            .with_context(|| format!("parsing NNet file {}", path.display()))?;
        Ok(LoadedNetwork {
            net,
            meta: Some(meta),
        })
    } else {
        let net = parse_network_json(&text)
            .with_context(|| format!("parsing network {}", path.display()))?;
        Ok(LoadedNetwork { net, meta: None })
    }
}

fn load_partition(path: &Path) -> Result<innrange_core::Partition> {
    parse_partition_json(&read(path)?)
        .with_context(|| format!("parsing partition {}", path.display()))
}

/// The box named by `--box`, or the NNet-declared one; `--normalize` maps it
/// through the NNet normalization constants.
fn resolve_box(input: &InputArgs, loaded: &LoadedNetwork) -> Result<InputBox> {
    let raw = match &input.input_box {
        Some(path) => parse_box_json(&read(path)?)
            .with_context(|| format!("parsing input box {}", path.display()))?,
        None => loaded
            .meta
            .as_ref()
            .map(NnetMeta::input_box)
            .ok_or_else(|| {
                anyhow!("--box is required for JSON networks (only NNet files declare a default input box)")
            })?,
    };
    if !input.normalize {
        return Ok(raw);
    }
    let meta = loaded.meta.as_ref().ok_or_else(|| {
        anyhow!("--normalize only applies to NNet networks, which carry normalization constants")
    })?;
    Ok(meta.normalized_box(&raw)?)
}

fn abstraction_mode(unsound_unscaled: bool) -> AbstractionMode {
    if unsound_unscaled {
        eprintln!(
            "warning: --unsound-unscaled drops the group-size weight factor; \
             the abstraction is NOT sound and can miss real behaviours"
        );
        AbstractionMode::UnscaledUnsound
    } else {
        AbstractionMode::Scaled
    }
}

/// Exit 0 only when every bound was proved optimal; infeasible models and
/// limit-stopped (still sound, but loose) bounds exit 2.
fn range_exit(res: &RangeResult) -> u8 {
    let clean = res.outputs.iter().all(|o| {
        o.lower.status == BoundStatus::Optimal && o.upper.status == BoundStatus::Optimal
    });
    if clean {
        0
    } else {
        2
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
