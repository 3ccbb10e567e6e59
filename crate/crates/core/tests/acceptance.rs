//! Acceptance gate for the toolkit: nine end-to-end checks, one printed
//! PASS/FAIL line each, run sequentially so the wall-clock budgets mean
//! something. The process exits non-zero when any check fails.

mod common;

use std::any::Any;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process;
use std::time::Instant;

use innrange_core::io::json::{
    parse_box_json, parse_network_json, parse_partition_json, write_box_json, write_network_json,
    write_partition_json,
};
use innrange_core::io::nnet::{parse_nnet, write_nnet};
use innrange_core::{
    abstract_network, bench_partitions, encode, exact_range_oracle, merge_sources, merge_targets,
    output_range, soundness_check, AbstractionMode, EncodeStyle, ExtraRow, InputBox, Interval,
    IntervalNetwork, Layer, Partition, RangeConfig, SampleConfig,
};
use innrange_milp::Sense;
use rand::Rng;

struct Check {
    label: &'static str,
    budget_secs: f64,
    run: fn(&mut Vec<String>),
}

const CHECKS: &[Check] = &[
    Check {
        label: "1/9 sampled concrete runs stay inside merged-network ranges",
        budget_secs: 180.0,
        run: c1_sampled_containment,
    },
    Check {
        label: "2/9 branch-and-bound bounds equal the enumeration oracle",
        budget_secs: 300.0,
        run: c2_solver_matches_oracle,
    },
    Check {
        label: "3/9 one-sided merges compose to the full abstraction layer",
        budget_secs: 30.0,
        run: c3_one_sided_composition,
    },
    Check {
        label: "4/9 worked two-node merge example",
        budget_secs: 60.0,
        run: c4_worked_merge_example,
    },
    Check {
        label: "5/9 unscaled hull is caught by sampling, scaled hull is not",
        budget_secs: 60.0,
        run: c5_unscaled_witness,
    },
    Check {
        label: "6/9 exact concrete range is contained in the exact merged range",
        budget_secs: 300.0,
        run: c6_exact_containment,
    },
    Check {
        label: "7/9 upper bounds tighten as hidden group counts grow",
        budget_secs: 600.0,
        run: c7_group_count_trend,
    },
    Check {
        label: "8/9 constraint and binary census match the closed forms",
        budget_secs: 60.0,
        run: c8_census,
    },
    Check {
        label: "9/9 JSON and NNet documents round-trip bit-exactly",
        budget_secs: 60.0,
        run: c9_round_trips,
    },
];

fn main() {
    // Panic messages are reported on the FAIL line instead of the default
    // hook's stderr dump.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0usize;
    for check in CHECKS {
        let start = Instant::now();
        let mut failures = Vec::new();
        let outcome = catch_unwind(AssertUnwindSafe(|| (check.run)(&mut failures)));
        let elapsed = start.elapsed().as_secs_f64();
        if let Err(payload) = outcome {
            failures.push(format!("panicked: {}", panic_text(payload.as_ref())));
        }
        if elapsed > check.budget_secs {
            failures.push(format!(
                "took {elapsed:.1}s, budget is {:.0}s",
                check.budget_secs
            ));
        }
        if failures.is_empty() {
            println!("check {} ({elapsed:.1}s): PASS", check.label);
        } else {
            failed += 1;
            println!("check {} ({elapsed:.1}s): FAIL", check.label);
            for f in failures.iter().take(5) {
                println!("    {f}");
            }
            if failures.len() > 5 {
                println!("    ... and {} more", failures.len() - 5);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} acceptance checks failed", CHECKS.len());
        process::exit(1);
    }
    println!("all {} acceptance checks passed", CHECKS.len());
}

fn panic_text(payload: &(dyn Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

/// Shared solver settings: gap pruning far below the acceptance tolerances,
/// so "optimal" bounds are comparable at 1e-6.
fn tight_cfg(mode: AbstractionMode) -> RangeConfig {
    let mut cfg = RangeConfig {
        mode,
        ..RangeConfig::default()
    };
    cfg.solver.abs_gap = 1e-9;
    cfg
}

/// 100 random concrete nets, each merged by a random hidden partition; 100
/// sampled inputs per net must land inside the merged network's range.
fn c1_sampled_containment(f: &mut Vec<String>) {
    for case in 0..100u64 {
        let mut r = common::rng(1_000 + case);
        let sizes = common::random_shape(&mut r, 2..=4, 2..=6);
        let net = common::random_concrete_net(&mut r, &sizes, 2.0);
        let input = common::random_box(&mut r, sizes[0]);
        let partition = common::random_hidden_partition(&net, &mut r);
        let plan = SampleConfig {
            inputs: 100,
            selections: 1,
            seed: r.gen(),
            tol: 1e-6,
        };
        match soundness_check(
            &net,
            &partition,
            &input,
            &tight_cfg(AbstractionMode::Scaled),
            &plan,
        ) {
            Ok(rep) if rep.violations.is_empty() => {}
            Ok(rep) => f.push(format!(
                "case {case}: {} of {} samples escaped, worst slack {:.3e}",
                rep.violations.len(),
                rep.samples,
                rep.max_slack
            )),
            Err(e) => f.push(format!("case {case}: {e}")),
        }
    }
}

/// 200 random nets and interval nets small enough for the oracle: every
/// branch-and-bound bound agrees with full on/off enumeration within 1e-6.
fn c2_solver_matches_oracle(f: &mut Vec<String>) {
    for case in 0..200u64 {
        let mut r = common::rng(2_000 + case);
        // Switch counts skew low; a few cases stress the upper end.
        let total = if case % 16 == 15 {
            r.gen_range(9..=12)
        } else {
            r.gen_range(2..=8)
        };
        let depth = r.gen_range(1..=3usize.min(total));
        let mut sizes = vec![r.gen_range(1..=3)];
        sizes.extend(common::random_composition(&mut r, total, depth));
        let net = if case % 2 == 0 {
            common::random_concrete_net(&mut r, &sizes, 1.5)
        } else {
            common::random_interval_net(&mut r, &sizes, 1.5, 0.6)
        };
        let input = common::random_box(&mut r, sizes[0]);
        let cfg = tight_cfg(AbstractionMode::Scaled);
        let bnb = match output_range(&net, &input, None, &cfg) {
            Ok(v) => v,
            Err(e) => {
                f.push(format!("case {case}: solver: {e}"));
                continue;
            }
        };
        let oracle = match exact_range_oracle(&net, &input, &cfg) {
            Ok(v) => v,
            Err(e) => {
                f.push(format!("case {case}: oracle: {e}"));
                continue;
            }
        };
        for (a, b) in bnb.outputs.iter().zip(&oracle.outputs) {
            let pairs = [
                ("lower", a.lower.value, b.lower.value),
                ("upper", a.upper.value, b.upper.value),
            ];
            for (which, x, y) in pairs {
                let agree = match (x, y) {
                    (Some(x), Some(y)) => (x - y).abs() <= 1e-6,
                    (None, None) => true,
                    _ => false,
                };
                if !agree {
                    f.push(format!(
                        "case {case} output {} {which}: solver {x:?} vs oracle {y:?}",
                        a.node
                    ));
                }
            }
        }
    }
}

/// 1000 random transitions: merging the source side then the target side
/// yields, endpoint for endpoint, the transition the full abstraction builds.
fn c3_one_sided_composition(f: &mut Vec<String>) {
    for case in 0..1_000u64 {
        let mut r = common::rng(3_000 + case);
        let sizes = common::random_shape(&mut r, 1..=3, 1..=5);
        let net = if case % 2 == 0 {
            common::random_concrete_net(&mut r, &sizes, 2.0)
        } else {
            common::random_interval_net(&mut r, &sizes, 2.0, 1.0)
        };
        let j = r.gen_range(0..net.depth());
        let source_groups = common::random_groups(&mut r, sizes[j]);
        let target_groups = common::random_groups(&mut r, sizes[j + 1]);

        let composed = merge_sources(&net, j, &source_groups)
            .and_then(|step| merge_targets(&step, &target_groups));
        let composed = match composed {
            Ok(n) => n,
            Err(e) => {
                f.push(format!("case {case}: one-sided merge: {e}"));
                continue;
            }
        };
        let mut p = Partition::identity(&sizes);
        p.groups[j] = source_groups.clone();
        p.groups[j + 1] = target_groups.clone();
        let full = match abstract_network(&net, &p, AbstractionMode::Scaled) {
            Ok(n) => n,
            Err(e) => {
                f.push(format!("case {case}: full abstraction: {e}"));
                continue;
            }
        };
        if composed.layers[0].weights != full.layers[j].weights
            || composed.layers[0].biases != full.layers[j].biases
        {
            f.push(format!(
                "case {case}: transition {j} differs between the composed and direct abstraction"
            ));
        }
    }
}

/// Merging the two sources of the weight pairs (7, 8) and (10, 11) must give
/// [14, 20] / [16, 22] after the scaled source step and [14, 22] after the
/// target step, matching the one-shot abstraction; biases hull to [-1, 3].
fn c4_worked_merge_example(f: &mut Vec<String>) {
    let net = IntervalNetwork {
        input_size: 2,
        layers: vec![Layer {
            weights: vec![
                vec![Interval::point(7.0), Interval::point(8.0)],
                vec![Interval::point(10.0), Interval::point(11.0)],
            ],
            biases: vec![Interval::point(-1.0), Interval::point(3.0)],
        }],
    };
    let both = vec![vec![0, 1]];

    let source_step = merge_sources(&net, 0, &both).expect("source merge");
    let want = vec![vec![Interval::new(14.0, 20.0), Interval::new(16.0, 22.0)]];
    if source_step.layers[0].weights != want {
        f.push(format!(
            "source merge gave {:?}, expected [[14,20], [16,22]]",
            source_step.layers[0].weights
        ));
    }

    let both_steps = merge_targets(&source_step, &both).expect("target merge");
    if both_steps.layers[0].weights != vec![vec![Interval::new(14.0, 22.0)]] {
        f.push(format!(
            "composed merge gave {:?}, expected [[14,22]]",
            both_steps.layers[0].weights
        ));
    }

    let p = Partition {
        groups: vec![vec![vec![0, 1]], vec![vec![0, 1]]],
    };
    let full = abstract_network(&net, &p, AbstractionMode::Scaled).expect("full abstraction");
    if full.layers[0].weights != vec![vec![Interval::new(14.0, 22.0)]] {
        f.push(format!(
            "direct abstraction gave weights {:?}, expected [[14,22]]",
            full.layers[0].weights
        ));
    }
    if full.layers[0].biases != vec![Interval::new(-1.0, 3.0)] {
        f.push(format!(
            "direct abstraction gave biases {:?}, expected [-1,3]",
            full.layers[0].biases
        ));
    }
}

/// The doubling witness y = relu(x + x): merging its two hidden nodes with
/// the group factor stays sound on shared samples; dropping the factor is
/// caught red-handed.
fn c5_unscaled_witness(f: &mut Vec<String>) {
    let net = IntervalNetwork {
        input_size: 1,
        layers: vec![
            Layer {
                weights: vec![vec![Interval::point(1.0), Interval::point(1.0)]],
                biases: vec![Interval::point(0.0), Interval::point(0.0)],
            },
            Layer {
                weights: vec![vec![Interval::point(1.0)], vec![Interval::point(1.0)]],
                biases: vec![Interval::point(0.0)],
            },
        ],
    };
    let input = InputBox::new(vec![Interval::new(0.0, 1.0)]);
    let p = Partition {
        groups: vec![vec![vec![0]], vec![vec![0, 1]], vec![vec![0]]],
    };
    let plan = SampleConfig {
        inputs: 100,
        selections: 1,
        seed: 55,
        tol: 1e-6,
    };
    let scaled = soundness_check(&net, &p, &input, &tight_cfg(AbstractionMode::Scaled), &plan)
        .expect("scaled check");
    let unscaled = soundness_check(
        &net,
        &p,
        &input,
        &tight_cfg(AbstractionMode::UnscaledUnsound),
        &plan,
    )
    .expect("unscaled check");
    if !scaled.violations.is_empty() {
        f.push(format!(
            "scaled merge produced {} violations (worst slack {:.3e})",
            scaled.violations.len(),
            scaled.max_slack
        ));
    }
    if unscaled.violations.is_empty() {
        f.push("dropping the group factor went undetected on the shared samples".to_string());
    }
}

/// 50 oracle-sized nets: the exact range of the original sits inside the
/// exact range of its merged abstraction, output by output.
fn c6_exact_containment(f: &mut Vec<String>) {
    for case in 0..50u64 {
        let mut r = common::rng(6_000 + case);
        let total = if case < 5 {
            r.gen_range(9..=10)
        } else {
            r.gen_range(4..=8)
        };
        let depth = r.gen_range(2..=3usize.min(total));
        let mut sizes = vec![r.gen_range(1..=3)];
        sizes.extend(common::random_composition(&mut r, total, depth));
        let net = if case % 3 == 2 {
            common::random_interval_net(&mut r, &sizes, 1.5, 0.5)
        } else {
            common::random_concrete_net(&mut r, &sizes, 1.5)
        };
        let input = common::random_box(&mut r, sizes[0]);
        let partition = common::random_hidden_partition(&net, &mut r);
        let merged = match abstract_network(&net, &partition, AbstractionMode::Scaled) {
            Ok(n) => n,
            Err(e) => {
                f.push(format!("case {case}: abstraction: {e}"));
                continue;
            }
        };
        let cfg = tight_cfg(AbstractionMode::Scaled);
        let concrete = exact_range_oracle(&net, &input, &cfg);
        let abstracted = exact_range_oracle(&merged, &input, &cfg);
        let (concrete, abstracted) = match (concrete, abstracted) {
            (Ok(c), Ok(a)) => (c, a),
            (c, a) => {
                f.push(format!("case {case}: oracle: {:?} / {:?}", c.err(), a.err()));
                continue;
            }
        };
        for (c, a) in concrete.outputs.iter().zip(&abstracted.outputs) {
            let (Some(cl), Some(ch), Some(al), Some(ah)) =
                (c.lower.value, c.upper.value, a.lower.value, a.upper.value)
            else {
                f.push(format!("case {case} output {}: missing a bound", c.node));
                continue;
            };
            if al > cl + 1e-6 || ch > ah + 1e-6 {
                f.push(format!(
                    "case {case} output {}: concrete [{cl}, {ch}] escapes merged [{al}, {ah}]",
                    c.node
                ));
            }
        }
    }
}

/// A 3x12-hidden synthetic net benchmarked at group counts 2, 4, 8, 12 with
/// 10 random partitions each: mean upper bounds only tighten with finer
/// groups, the identity count reproduces the exact range, and the coarsest
/// count actually spreads across runs.
fn c7_group_count_trend(f: &mut Vec<String>) {
    let mut r = common::rng(7_000);
    let sizes = [4usize, 12, 12, 12, 1];
    // Positive weights and biases over a positive box keep every rectifier
    // provably active, so the full 37-switch solves stay cheap while the
    // hull-and-scale over-approximation still varies with the grouping.
    let layers = sizes
        .windows(2)
        .map(|w| Layer {
            weights: (0..w[0])
                .map(|_| {
                    (0..w[1])
                        .map(|_| Interval::point(r.gen_range(0.02..=0.5)))
                        .collect()
                })
                .collect(),
            biases: (0..w[1])
                .map(|_| Interval::point(r.gen_range(0.0..=0.3)))
                .collect(),
        })
        .collect();
    let net = IntervalNetwork {
        input_size: 4,
        layers,
    };
    let input = InputBox::new(vec![Interval::new(0.25, 1.0); 4]);
    let cfg = tight_cfg(AbstractionMode::Scaled);

    let report = bench_partitions(&net, &input, &[2, 4, 8, 12], 10, 4242, &cfg).expect("benchmark");

    let means: Vec<f64> = report
        .summaries
        .iter()
        .map(|s| s.outputs[0].upper.mean)
        .collect();
    for pair in means.windows(2) {
        if pair[1] > pair[0] + 1e-9 {
            f.push(format!(
                "mean upper bound grew from {} to {} as groups got finer",
                pair[0], pair[1]
            ));
        }
    }

    let exact = output_range(&net, &input, None, &cfg).expect("exact range");
    let exact_lower = exact.outputs[0].lower.value.expect("exact lower");
    let exact_upper = exact.outputs[0].upper.value.expect("exact upper");
    for row in report.rows.iter().filter(|row| row.count == 12) {
        if (row.lower - exact_lower).abs() > 1e-6 || (row.upper - exact_upper).abs() > 1e-6 {
            f.push(format!(
                "identity run {} gave [{}, {}], the exact range is [{exact_lower}, {exact_upper}]",
                row.run, row.lower, row.upper
            ));
        }
    }

    let coarse = &report.summaries[0].outputs[0].upper;
    if !(coarse.min > 0.0 && coarse.max / coarse.min > 1.0 + 1e-9) {
        f.push(format!(
            "no spread across the coarsest runs: min {} max {}",
            coarse.min, coarse.max
        ));
    }
}

/// 100 random shapes: the encoding always has 4 rows per hidden/output node
/// plus the caller's input rows, and one binary per hidden/output node.
fn c8_census(f: &mut Vec<String>) {
    for case in 0..100u64 {
        let mut r = common::rng(8_000 + case);
        let sizes = common::random_shape(&mut r, 1..=4, 1..=6);
        let net = if case % 2 == 0 {
            common::random_concrete_net(&mut r, &sizes, 2.0)
        } else {
            common::random_interval_net(&mut r, &sizes, 2.0, 1.0)
        };
        let input = common::random_box(&mut r, sizes[0]);
        let extra: Vec<ExtraRow> = if case % 3 == 0 {
            (0..sizes[0].min(2))
                .map(|i| ExtraRow {
                    terms: vec![(i, 1.0)],
                    sense: Sense::Le,
                    rhs: 5.0,
                    tag: format!("input_cap_{i}"),
                })
                .collect()
        } else {
            Vec::new()
        };
        let style = if case % 4 < 2 {
            EncodeStyle::Tightened
        } else {
            EncodeStyle::BigMOnly
        };
        let enc = match encode(&net, &input, &extra, style) {
            Ok(e) => e,
            Err(e) => {
                f.push(format!("case {case}: {e}"));
                continue;
            }
        };
        let switches: usize = sizes[1..].iter().sum();
        let want_rows = 4 * switches + extra.len();
        if enc.model.num_constraints() != want_rows || enc.model.num_binaries() != switches {
            f.push(format!(
                "case {case} (shape {sizes:?}): got {} rows and {} binaries, expected {want_rows} and {switches}",
                enc.model.num_constraints(),
                enc.model.num_binaries()
            ));
        }
    }
}

/// 100 rounds of every document kind — JSON networks, partitions, boxes and
/// self-written NNet files — re-read and re-written without changing a byte.
fn c9_round_trips(f: &mut Vec<String>) {
    for case in 0..100u64 {
        let mut r = common::rng(9_000 + case);
        let sizes = common::random_shape(&mut r, 1..=3, 1..=4);

        let net = common::nasty_net(&mut r, &sizes, case % 2 == 1);
        let first = write_network_json(&net);
        match parse_network_json(&first) {
            Ok(back) => {
                if write_network_json(&back) != first {
                    f.push(format!("case {case}: network JSON bytes drifted"));
                }
                if back != net {
                    f.push(format!("case {case}: network JSON structure drifted"));
                }
            }
            Err(e) => f.push(format!("case {case}: rereading network JSON: {e}")),
        }

        let p = Partition {
            groups: sizes
                .iter()
                .map(|&s| common::random_groups(&mut r, s))
                .collect(),
        };
        let first = write_partition_json(&p);
        match parse_partition_json(&first) {
            Ok(back) => {
                if write_partition_json(&back) != first || back != p {
                    f.push(format!("case {case}: partition JSON drifted"));
                }
            }
            Err(e) => f.push(format!("case {case}: rereading partition JSON: {e}")),
        }

        let b = InputBox::new((0..sizes[0]).map(|_| common::nasty_interval(&mut r)).collect());
        let first = write_box_json(&b);
        match parse_box_json(&first) {
            Ok(back) => {
                if write_box_json(&back) != first || back.bounds != b.bounds {
                    f.push(format!("case {case}: box JSON drifted"));
                }
            }
            Err(e) => f.push(format!("case {case}: rereading box JSON: {e}")),
        }

        let concrete = common::nasty_net(&mut r, &sizes, false);
        let meta = common::random_nnet_meta(&mut r, sizes[0]);
        match write_nnet(&concrete, &meta) {
            Ok(first) => match parse_nnet(&first) {
                Ok((back_net, back_meta)) => {
                    let again = write_nnet(&back_net, &back_meta).expect("rewriting NNet");
                    if again != first {
                        f.push(format!("case {case}: NNet bytes drifted"));
                    }
                    if back_net != concrete || back_meta != meta {
                        f.push(format!("case {case}: NNet structure drifted"));
                    }
                }
                Err(e) => f.push(format!("case {case}: rereading NNet: {e}")),
            },
            Err(e) => f.push(format!("case {case}: writing NNet: {e}")),
        }
    }
}
