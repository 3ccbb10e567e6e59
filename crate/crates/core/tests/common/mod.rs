//! Seeded fixture generators shared by the integration suites.

#![allow(dead_code)] // not every suite uses every helper

use std::ops::RangeInclusive;

use innrange_core::io::nnet::NnetMeta;
use innrange_core::{random_balanced, InputBox, Interval, IntervalNetwork, Layer, Partition};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Layer sizes: a transition count drawn from `transitions`, then one node
/// count per layer (inputs included) drawn from `nodes`.
pub fn random_shape(
    r: &mut ChaCha8Rng,
    transitions: RangeInclusive<usize>,
    nodes: RangeInclusive<usize>,
) -> Vec<usize> {
    let depth = r.gen_range(transitions);
    (0..=depth).map(|_| r.gen_range(nodes.clone())).collect()
}

/// Splits `total` into `parts` positive summands, uniformly over the cut
/// points.
pub fn random_composition(r: &mut ChaCha8Rng, total: usize, parts: usize) -> Vec<usize> {
    assert!(1 <= parts && parts <= total, "cannot split {total} into {parts}");
    let mut cuts: Vec<usize> = (1..total).collect();
    cuts.shuffle(r);
    cuts.truncate(parts - 1);
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(total - prev);
    out
}

pub fn random_concrete_net(r: &mut ChaCha8Rng, sizes: &[usize], amp: f64) -> IntervalNetwork {
    build_net(sizes, |r| Interval::point(r.gen_range(-amp..=amp)), r)
}

/// Interval net: each weight and bias is a point with probability one half,
/// otherwise an interval of width up to `max_width`.
pub fn random_interval_net(
    r: &mut ChaCha8Rng,
    sizes: &[usize],
    amp: f64,
    max_width: f64,
) -> IntervalNetwork {
    build_net(
        sizes,
        |r| {
            let lo = r.gen_range(-amp..=amp);
            if r.gen_bool(0.5) {
                Interval::point(lo)
            } else {
                Interval::new(lo, lo + r.gen_range(0.0..=max_width))
            }
        },
        r,
    )
}

fn build_net(
    sizes: &[usize],
    mut entry: impl FnMut(&mut ChaCha8Rng) -> Interval,
    r: &mut ChaCha8Rng,
) -> IntervalNetwork {
    let layers = sizes
        .windows(2)
        .map(|w| Layer {
            weights: (0..w[0])
                .map(|_| (0..w[1]).map(|_| entry(r)).collect())
                .collect(),
            biases: (0..w[1]).map(|_| entry(r)).collect(),
        })
        .collect();
    IntervalNetwork {
        input_size: sizes[0],
        layers,
    }
}

/// A box inside `[-1, 1]` per dimension.
pub fn random_box(r: &mut ChaCha8Rng, n: usize) -> InputBox {
    InputBox::new(
        (0..n)
            .map(|_| {
                let a: f64 = r.gen_range(-1.0..=1.0);
                let b: f64 = r.gen_range(-1.0..=1.0);
                Interval::new(a.min(b), a.max(b))
            })
            .collect(),
    )
}

/// A random balanced grouping of every hidden layer; input and output layers
/// stay identity.
pub fn random_hidden_partition(net: &IntervalNetwork, r: &mut ChaCha8Rng) -> Partition {
    let sizes = net.layer_sizes();
    let counts: Vec<usize> = sizes[1..sizes.len() - 1]
        .iter()
        .map(|&s| r.gen_range(1..=s))
        .collect();
    random_balanced(net, &counts, r.gen()).expect("counts stay within each layer")
}

/// A random grouping of `size` nodes: non-empty groups, internally sorted,
/// covering every node exactly once.
pub fn random_groups(r: &mut ChaCha8Rng, size: usize) -> Vec<Vec<usize>> {
    let parts = r.gen_range(1..=size);
    let mut nodes: Vec<usize> = (0..size).collect();
    nodes.shuffle(r);
    let mut out = Vec::with_capacity(parts);
    let mut cursor = 0;
    for take in random_composition(r, size, parts) {
        let mut members = nodes[cursor..cursor + take].to_vec();
        members.sort_unstable();
        out.push(members);
        cursor += take;
    }
    out
}

/// Values that stress serialization: repeating binary fractions, signed
/// zero, huge and tiny magnitudes, exact integers and plain uniforms.
pub fn nasty_value(r: &mut ChaCha8Rng) -> f64 {
    match r.gen_range(0..8u32) {
        0 => r.gen_range(-1.0..=1.0) / 3.0,
        1 => -0.0,
        2 => r.gen_range(-2.0..=2.0) * 1e-300,
        3 => r.gen_range(-2.0..=2.0) * 1e300,
        4 => r.gen_range(-2i64..=2) as f64,
        _ => r.gen_range(-2.0..=2.0),
    }
}

/// An interval whose endpoints are [`nasty_value`] draws.
pub fn nasty_interval(r: &mut ChaCha8Rng) -> Interval {
    let a = nasty_value(r);
    if r.gen_bool(0.4) {
        return Interval::point(a);
    }
    let b = nasty_value(r);
    Interval::new(a.min(b), a.max(b))
}

/// A network whose entries are [`nasty_value`] draws; interval entries when
/// `intervals` is set, points otherwise.
pub fn nasty_net(r: &mut ChaCha8Rng, sizes: &[usize], intervals: bool) -> IntervalNetwork {
    build_net(
        sizes,
        |r| {
            if intervals {
                nasty_interval(r)
            } else {
                Interval::point(nasty_value(r))
            }
        },
        r,
    )
}

/// NNet metadata with random admitted ranges and normalization constants.
pub fn random_nnet_meta(r: &mut ChaCha8Rng, inputs: usize) -> NnetMeta {
    NnetMeta {
        input_min: (0..inputs).map(|_| r.gen_range(-2.0..=0.0)).collect(),
        input_max: (0..inputs).map(|_| r.gen_range(0.0..=2.0)).collect(),
        means: (0..=inputs).map(|_| r.gen_range(-1.0..=1.0)).collect(),
        ranges: (0..=inputs).map(|_| r.gen_range(0.5..=2.0)).collect(),
    }
}
