//! End-to-end output range analysis.
//!
//! [`output_range`] optionally abstracts the network, encodes it, and runs
//! one minimization and one maximization per output node. The exact
//! enumeration oracle does the same job by brute force over all switch
//! settings and serves as ground truth for solver tests. [`soundness_check`]
//! samples concrete executions against an abstract range, and
//! [`bench_partitions`] measures how bounds and phase times move with the
//! abstraction's coarseness.

use std::time::Instant;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abstraction::{abstract_network, AbstractionMode};
use crate::encode::{encode, EncodeStyle, Encoding, ExtraRow};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::network::{eval, sample_selection, InputBox, IntervalNetwork};
use crate::partition::{mix, random_balanced, Partition};
use innrange_milp::{lp_solve, solve, LpStatus, ObjSense, SolveConfig, SolveStatus};

/// Hidden/output node count above which full switch enumeration is refused.
pub const ORACLE_NODE_LIMIT: usize = 16;

/// Knobs shared by the range drivers.
#[derive(Clone, Debug, Default)]
pub struct RangeConfig {
    pub solver: SolveConfig,
    pub style: EncodeStyle,
    pub mode: AbstractionMode,
    /// Permit partitions that merge input or output nodes. Off by default:
    /// the containment guarantee needs those layers intact.
    pub allow_merged_io: bool,
    /// Additional linear rows over the input variables.
    pub extra_rows: Vec<ExtraRow>,
}

/// Outcome of one bound computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    Optimal,
    Infeasible,
    NodeLimit,
    TimeLimit,
}

impl From<SolveStatus> for BoundStatus {
    fn from(s: SolveStatus) -> BoundStatus {
        match s {
            SolveStatus::Optimal => BoundStatus::Optimal,
            SolveStatus::Infeasible => BoundStatus::Infeasible,
            SolveStatus::NodeLimit => BoundStatus::NodeLimit,
            SolveStatus::TimeLimit => BoundStatus::TimeLimit,
        }
    }
}

/// One bound of one output node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Sound outer bound on the true optimum; `None` when the model is
    /// infeasible (or nothing was solved before a limit hit).
    pub value: Option<f64>,
    /// True when the solver proved the bound optimal; a `false` bound is
    /// still sound, just possibly loose.
    pub exact: bool,
    pub status: BoundStatus,
    /// Search nodes (or enumerated switch settings, for the oracle).
    pub nodes: u64,
    pub lp_iterations: u64,
}

/// Range of one output node: its lower and upper bound reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputRange {
    pub node: usize,
    pub lower: BoundReport,
    pub upper: BoundReport,
}

impl OutputRange {
    /// The `[lower, upper]` interval, when both bounds exist.
    pub fn interval(&self) -> Option<Interval> {
        match (self.lower.value, self.upper.value) {
            (Some(l), Some(u)) => Some(Interval::new(l, u)),
            _ => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lower.exact && self.upper.exact
    }
}

/// Wall-clock seconds per phase, kept apart from the result values so runs
/// can be compared exactly while ignoring timing noise.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub abstraction_secs: f64,
    pub encode_secs: f64,
    pub solve_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeMeta {
    /// Whether a partition was applied before encoding.
    pub abstracted: bool,
    pub mode: AbstractionMode,
    pub style: EncodeStyle,
    /// Groups per layer of the applied partition.
    pub group_counts: Option<Vec<usize>>,
    /// Seed used to generate the partition, when the caller recorded one.
    pub partition_seed: Option<u64>,
    pub warnings: Vec<String>,
    pub timings: Timings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeResult {
    pub outputs: Vec<OutputRange>,
    pub meta: RangeMeta,
}

/// Computes per-output bounds of `net` over `input`, abstracting by
/// `partition` first when one is given.
///
/// Every output node gets one minimization and one maximization. A solver
/// that stops on a node or time limit still yields a sound outer bound,
/// flagged non-exact. Lower bounds are clamped at 0 (outputs are
/// post-rectifier).
pub fn output_range(
    net: &IntervalNetwork,
    input: &InputBox,
    partition: Option<&Partition>,
    cfg: &RangeConfig,
) -> Result<RangeResult> {
    let mut warnings = Vec::new();
    let mut timings = Timings::default();
    let abstracted;
    let owned;
    let target = match partition {
        Some(p) => {
            let bad = p.validate(net, !cfg.allow_merged_io);
            if !bad.is_empty() {
                return Err(Error::from_violations("partition", &bad));
            }
            if !cfg.mode.is_sound() {
                warnings.push(
                    "unscaled abstraction mode is unsound: reported bounds may not cover \
                     every concrete execution"
                        .to_string(),
                );
            }
            let t = Instant::now();
            owned = abstract_network(net, p, cfg.mode)?;
            timings.abstraction_secs = t.elapsed().as_secs_f64();
            abstracted = true;
            &owned
        }
        None => {
            abstracted = false;
            net
        }
    };

    let t = Instant::now();
    let enc = encode(target, input, &cfg.extra_rows, cfg.style)?;
    timings.encode_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let outputs = (0..target.output_size())
        .into_par_iter()
        .map(|j| -> Result<OutputRange> {
            let lower = solve_bound(&enc, j, ObjSense::Minimize, &cfg.solver)?;
            let upper = solve_bound(&enc, j, ObjSense::Maximize, &cfg.solver)?;
            Ok(OutputRange {
                node: j,
                lower,
                upper,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    timings.solve_secs = t.elapsed().as_secs_f64();

    for out in &outputs {
        if !out.is_exact() && out.lower.status != BoundStatus::Infeasible {
            warnings.push(format!(
                "bounds for output {} are not proven optimal (solver hit a limit); \
                 reported values are outer bounds",
                out.node
            ));
        }
    }

    Ok(RangeResult {
        outputs,
        meta: RangeMeta {
            abstracted,
            mode: cfg.mode,
            style: cfg.style,
            group_counts: partition.map(|p| p.group_counts()),
            partition_seed: None,
            warnings,
            timings,
        },
    })
}

fn solve_bound(
    enc: &Encoding,
    node: usize,
    sense: ObjSense,
    cfg: &SolveConfig,
) -> Result<BoundReport> {
    let last = enc.x.len() - 1;
    let mut model = enc.model.clone();
    model.set_objective(sense, enc.x[last][node]);
    let res = solve(&model, cfg)?;
    let ia = enc.bounds.layers[last][node].post;
    let fallback = match sense {
        ObjSense::Minimize => ia.lo,
        ObjSense::Maximize => ia.hi,
    };
    let mut report = BoundReport {
        value: None,
        exact: false,
        status: res.status.into(),
        nodes: res.stats.nodes,
        lp_iterations: res.stats.lp_iterations,
    };
    match res.status {
        SolveStatus::Optimal => {
            report.value = res.objective;
            report.exact = true;
        }
        SolveStatus::Infeasible => {}
        SolveStatus::NodeLimit | SolveStatus::TimeLimit => {
            // The relaxation bound is a sound outer bound; fall back to the
            // propagated interval when the search stopped before any solve.
            report.value = Some(res.best_bound.unwrap_or(fallback));
        }
    }
    if sense == ObjSense::Minimize {
        // Outputs are post-rectifier, so 0 is always a valid floor.
        report.value = report.value.map(|v| v.max(0.0));
    }
    Ok(report)
}

/// Exact range by full enumeration: every 0/1 setting of the rectifier
/// switches becomes one linear program, and the envelope over settings is the
/// exact answer. Refused above [`ORACLE_NODE_LIMIT`] switches.
pub fn exact_range_oracle(
    net: &IntervalNetwork,
    input: &InputBox,
    cfg: &RangeConfig,
) -> Result<RangeResult> {
    let switches: usize = (1..=net.depth()).map(|i| net.size_of(i)).sum();
    if switches > ORACLE_NODE_LIMIT {
        return Err(Error::Unsupported(format!(
            "enumeration oracle handles at most {ORACLE_NODE_LIMIT} hidden/output nodes, \
             network has {switches}"
        )));
    }
    let t = Instant::now();
    let enc = encode(net, input, &cfg.extra_rows, cfg.style)?;
    let encode_secs = t.elapsed().as_secs_f64();
    let binaries: Vec<_> = enc.q.iter().flatten().copied().collect();
    debug_assert_eq!(binaries.len(), switches);

    let t = Instant::now();
    let outputs = (0..net.output_size())
        .into_par_iter()
        .map(|j| -> Result<OutputRange> {
            let lower = enumerate_bound(&enc, &binaries, j, ObjSense::Minimize, cfg)?;
            let upper = enumerate_bound(&enc, &binaries, j, ObjSense::Maximize, cfg)?;
            Ok(OutputRange {
                node: j,
                lower,
                upper,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let solve_secs = t.elapsed().as_secs_f64();

    Ok(RangeResult {
        outputs,
        meta: RangeMeta {
            abstracted: false,
            mode: cfg.mode,
            style: cfg.style,
            group_counts: None,
            partition_seed: None,
            warnings: Vec::new(),
            timings: Timings {
                abstraction_secs: 0.0,
                encode_secs,
                solve_secs,
            },
        },
    })
}

fn enumerate_bound(
    enc: &Encoding,
    binaries: &[innrange_milp::VarId],
    node: usize,
    sense: ObjSense,
    cfg: &RangeConfig,
) -> Result<BoundReport> {
    let last = enc.x.len() - 1;
    let mut model = enc.model.clone();
    model.set_objective(sense, enc.x[last][node]);
    let mut best: Option<f64> = None;
    let mut lp_iterations = 0u64;
    let masks = 1u64 << binaries.len();
    let mut fixings: Vec<(innrange_milp::VarId, f64)> =
        binaries.iter().map(|&b| (b, 0.0)).collect();
    for mask in 0..masks {
        for (k, f) in fixings.iter_mut().enumerate() {
            f.1 = ((mask >> k) & 1) as f64;
        }
        let sol = lp_solve(&model, &fixings, &cfg.solver.lp).map_err(|e| {
            Error::Solver(e.into())
        })?;
        lp_iterations += sol.iterations as u64;
        match sol.status {
            LpStatus::Optimal => {
                best = Some(match (best, sense) {
                    (None, _) => sol.objective,
                    (Some(b), ObjSense::Minimize) => b.min(sol.objective),
                    (Some(b), ObjSense::Maximize) => b.max(sol.objective),
                });
            }
            LpStatus::Infeasible => {}
            LpStatus::Unbounded => {
                return Err(Error::Solver(innrange_milp::SolveError::Unbounded))
            }
        }
    }
    let mut value = best;
    if sense == ObjSense::Minimize {
        value = value.map(|v| v.max(0.0));
    }
    Ok(BoundReport {
        value,
        exact: value.is_some(),
        status: if value.is_some() {
            BoundStatus::Optimal
        } else {
            BoundStatus::Infeasible
        },
        nodes: masks,
        lp_iterations,
    })
}

/// Sampling plan for [`soundness_check`].
#[derive(Clone, Debug)]
pub struct SampleConfig {
    /// Input points drawn from the box.
    pub inputs: usize,
    /// Weight selections drawn per input point.
    pub selections: usize,
    pub seed: u64,
    /// Absolute slack allowed outside the reported range.
    pub tol: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            inputs: 100,
            selections: 10,
            seed: 0,
            tol: 1e-6,
        }
    }
}

/// One sampled execution that escaped the reported range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub input: Vec<f64>,
    pub selection_seed: u64,
    pub node: usize,
    pub value: f64,
    /// The bound the value fell outside of.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundnessReport {
    /// Total (input, selection) pairs evaluated.
    pub samples: usize,
    pub violations: Vec<Violation>,
    /// Largest signed distance outside the range over all samples; negative
    /// when every sample stayed inside.
    pub max_slack: f64,
    /// The abstract range the samples were checked against.
    pub range: RangeResult,
}

/// Samples concrete executions of `net` and checks each output against the
/// range of the `partition`-abstracted network.
pub fn soundness_check(
    net: &IntervalNetwork,
    partition: &Partition,
    input: &InputBox,
    cfg: &RangeConfig,
    plan: &SampleConfig,
) -> Result<SoundnessReport> {
    let range = output_range(net, input, Some(partition), cfg)?;
    let bounds = range
        .outputs
        .iter()
        .map(|o| {
            o.interval().ok_or_else(|| {
                Error::Unsupported(format!(
                    "no range available for output {} (status {:?}/{:?})",
                    o.node, o.lower.status, o.upper.status
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(plan.seed);
    let mut violations = Vec::new();
    let mut max_slack = f64::NEG_INFINITY;
    let mut samples = 0usize;
    for i in 0..plan.inputs {
        let point = input.sample(&mut rng);
        for s in 0..plan.selections {
            let selection_seed = mix(plan.seed, (i * plan.selections + s) as u64);
            let sel = sample_selection(net, selection_seed);
            let out = eval(net, &point, &sel)?;
            samples += 1;
            for (node, (&value, iv)) in out.values.iter().zip(&bounds).enumerate() {
                let slack = (iv.lo - value).max(value - iv.hi);
                max_slack = max_slack.max(slack);
                if slack > plan.tol {
                    violations.push(Violation {
                        input: point.clone(),
                        selection_seed,
                        node,
                        value,
                        bound: if value < iv.lo { iv.lo } else { iv.hi },
                    });
                }
            }
        }
    }
    Ok(SoundnessReport {
        samples,
        violations,
        max_slack,
        range,
    })
}

/// Mean/min/max of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agg {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Agg {
    fn over(values: impl Iterator<Item = f64> + Clone) -> Agg {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        Agg {
            mean: sum / n as f64,
            min,
            max,
        }
    }
}

/// One benchmark measurement: one run's bounds for one output node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub count: usize,
    pub run: usize,
    pub node: usize,
    pub abs_time: f64,
    pub enc_time: f64,
    pub solve_time: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Per-node bound aggregates over the runs of one group count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchBoundAgg {
    pub node: usize,
    pub lower: Agg,
    pub upper: Agg,
}

/// Aggregates over the runs of one group count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub count: usize,
    pub abs_time: Agg,
    pub enc_time: Agg,
    pub solve_time: Agg,
    pub outputs: Vec<BenchBoundAgg>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summaries: Vec<BenchSummary>,
}

/// For each group count, draws `runs` random balanced hidden-layer
/// partitions, computes the abstract range, and tabulates phase times and
/// bounds. Rows are ordered by (count, run, node); partitions depend only on
/// `(seed, count, run)`, so results are reproducible under parallelism.
pub fn bench_partitions(
    net: &IntervalNetwork,
    input: &InputBox,
    counts: &[usize],
    runs: usize,
    seed: u64,
    cfg: &RangeConfig,
) -> Result<BenchReport> {
    if counts.is_empty() || runs == 0 {
        return Err(Error::Unsupported(
            "benchmark needs at least one group count and one run".to_string(),
        ));
    }
    let hidden_layers = net.depth().saturating_sub(1);
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &count in counts {
        let per_run = (0..runs)
            .into_par_iter()
            .map(|run| -> Result<Vec<BenchRow>> {
                let p = random_balanced(
                    net,
                    &vec![count; hidden_layers],
                    mix(mix(seed, count as u64), run as u64),
                )?;
                let res = output_range(net, input, Some(&p), cfg)?;
                res.outputs
                    .iter()
                    .map(|o| {
                        let iv = o.interval().ok_or_else(|| {
                            Error::Unsupported(format!(
                                "benchmark run {run} (count {count}) produced no bound \
                                 for output {}",
                                o.node
                            ))
                        })?;
                        Ok(BenchRow {
                            count,
                            run,
                            node: o.node,
                            abs_time: res.meta.timings.abstraction_secs,
                            enc_time: res.meta.timings.encode_secs,
                            solve_time: res.meta.timings.solve_secs,
                            lower: iv.lo,
                            upper: iv.hi,
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;

        let count_rows: Vec<BenchRow> = per_run.into_iter().flatten().collect();
        let times: Vec<&BenchRow> = count_rows.iter().filter(|r| r.node == 0).collect();
        let outputs = (0..net.output_size())
            .map(|node| {
                let node_rows = count_rows.iter().filter(|r| r.node == node);
                BenchBoundAgg {
                    node,
                    lower: Agg::over(node_rows.clone().map(|r| r.lower)),
                    upper: Agg::over(node_rows.map(|r| r.upper)),
                }
            })
            .collect();
        summaries.push(BenchSummary {
            count,
            abs_time: Agg::over(times.iter().map(|r| r.abs_time)),
            enc_time: Agg::over(times.iter().map(|r| r.enc_time)),
            solve_time: Agg::over(times.iter().map(|r| r.solve_time)),
            outputs,
        });
        rows.extend(count_rows);
    }
    Ok(BenchReport { rows, summaries })
}
