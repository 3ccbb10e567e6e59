//! Node-merging abstraction.
//!
//! Collapsing a group of nodes into a single abstract node widens the
//! network's weights and biases into intervals that admit every merged
//! member's behaviour. The sound construction takes, for each abstract edge,
//! the hull of the member weights *scaled by the source group size* (a merged
//! source feeds its whole group's mass through one edge); abstract biases are
//! the plain hull. The one-sided steps [`merge_sources`] and
//! [`merge_targets`] decompose the per-layer construction and compose back to
//! it exactly, endpoint for endpoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::network::{IntervalNetwork, Layer, Valuation};
use crate::partition::{group_violations, Partition};

/// How abstract weight intervals are built from the merged members.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbstractionMode {
    /// Hull of the member weights scaled by the source group size. Sound:
    /// abstract ranges cover every concrete execution.
    #[default]
    Scaled,
    /// Plain hull without the source-group factor. Unsound — kept only to
    /// demonstrate the containment failure it causes.
    UnscaledUnsound,
}

impl AbstractionMode {
    pub fn is_sound(self) -> bool {
        matches!(self, AbstractionMode::Scaled)
    }
}

/// Per-group value envelope of a concrete valuation: each merged group maps
/// to the interval spanned by its members' values.
#[derive(Clone, Debug, PartialEq)]
pub struct ValuationEnvelope {
    pub layer: usize,
    /// One interval per group, in group order.
    pub groups: Vec<Interval>,
}

/// Merges nodes per `partition`, producing the smaller interval network.
///
/// Abstract weight between source group `gs` (layer `i`) and target group
/// `gt` (layer `i+1`): `[scale · min, scale · max]` over all member edges,
/// where `scale = |gs|` in [`AbstractionMode::Scaled`] and `1` otherwise.
/// Abstract bias of `gt`: plain `[min, max]` over member biases — never
/// scaled. The scale factor is applied once, after the hull, so composing
/// [`merge_targets`] ∘ [`merge_sources`] reproduces each layer bitwise.
///
/// Input and output layers may be merged here; range analysis refuses such
/// partitions by default because its containment guarantee needs them intact.
pub fn abstract_network(
    net: &IntervalNetwork,
    partition: &Partition,
    mode: AbstractionMode,
) -> Result<IntervalNetwork> {
    let bad = partition.validate(net, false);
    if !bad.is_empty() {
        return Err(Error::from_violations("partition", &bad));
    }
    let layers = net
        .layers
        .iter()
        .enumerate()
        .map(|(i, layer)| {
            let sources = &partition.groups[i];
            let targets = &partition.groups[i + 1];
            let weights = sources
                .iter()
                .map(|gs| {
                    let scale = match mode {
                        AbstractionMode::Scaled => gs.len() as f64,
                        AbstractionMode::UnscaledUnsound => 1.0,
                    };
                    targets
                        .iter()
                        .map(|gt| {
                            let hull = pair_hull(layer, gs, gt);
                            Interval::new(scale * hull.lo, scale * hull.hi)
                        })
                        .collect()
                })
                .collect();
            let biases = targets.iter().map(|gt| bias_hull(layer, gt)).collect();
            Layer { weights, biases }
        })
        .collect();
    Ok(IntervalNetwork {
        input_size: partition.groups[0].len(),
        layers,
    })
}

/// One-sided abstraction step merging the *source* side of transition `j`.
///
/// Returns a single-transition network from the groups of layer `j` to the
/// unchanged layer `j+1`: weights are the per-source-group hull scaled by the
/// group size, biases are copied from layer `j+1`.
pub fn merge_sources(
    net: &IntervalNetwork,
    j: usize,
    groups: &[Vec<usize>],
) -> Result<IntervalNetwork> {
    if j >= net.depth() {
        return Err(Error::Shape(format!(
            "transition index {j} out of range (network has {} transitions)",
            net.depth()
        )));
    }
    let size = net.size_of(j);
    let mut bad = Vec::new();
    group_violations(&format!("layer {j}"), size, groups, &mut bad);
    if !bad.is_empty() {
        return Err(Error::from_violations("groups", &bad));
    }
    let layer = &net.layers[j];
    let n_targets = layer.biases.len();
    let weights = groups
        .iter()
        .map(|gs| {
            let scale = gs.len() as f64;
            (0..n_targets)
                .map(|t| {
                    let hull = pair_hull(layer, gs, &[t]);
                    Interval::new(scale * hull.lo, scale * hull.hi)
                })
                .collect()
        })
        .collect();
    Ok(IntervalNetwork {
        input_size: groups.len(),
        layers: vec![Layer {
            weights,
            biases: layer.biases.clone(),
        }],
    })
}

/// One-sided abstraction step merging the *target* side of a
/// single-transition network: plain hull of weights and biases, no scaling.
pub fn merge_targets(net: &IntervalNetwork, groups: &[Vec<usize>]) -> Result<IntervalNetwork> {
    if net.depth() != 1 {
        return Err(Error::Shape(format!(
            "target merge needs a single-transition network, got {} transitions",
            net.depth()
        )));
    }
    let size = net.size_of(1);
    let mut bad = Vec::new();
    group_violations("target layer", size, groups, &mut bad);
    if !bad.is_empty() {
        return Err(Error::from_violations("groups", &bad));
    }
    let layer = &net.layers[0];
    let weights = (0..net.input_size)
        .map(|s| groups.iter().map(|gt| pair_hull(layer, &[s], gt)).collect())
        .collect();
    let biases = groups.iter().map(|gt| bias_hull(layer, gt)).collect();
    Ok(IntervalNetwork {
        input_size: net.input_size,
        layers: vec![Layer { weights, biases }],
    })
}

/// Envelope of a concrete valuation under merging: per group, the interval
/// `[min, max]` of its members' values.
pub fn valuation_envelope(v: &Valuation, groups: &[Vec<usize>]) -> Result<ValuationEnvelope> {
    let mut bad = Vec::new();
    group_violations(
        &format!("layer {}", v.layer),
        v.values.len(),
        groups,
        &mut bad,
    );
    if !bad.is_empty() {
        return Err(Error::from_violations("groups", &bad));
    }
    let groups = groups
        .iter()
        .map(|g| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &s in g {
                lo = lo.min(v.values[s]);
                hi = hi.max(v.values[s]);
            }
            Interval::new(lo, hi)
        })
        .collect();
    Ok(ValuationEnvelope {
        layer: v.layer,
        groups,
    })
}

/// Hull of the weight intervals on all edges from `sources` to `targets`.
fn pair_hull(layer: &Layer, sources: &[usize], targets: &[usize]) -> Interval {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &s in sources {
        for &t in targets {
            let w = layer.weights[s][t];
            lo = lo.min(w.lo);
            hi = hi.max(w.hi);
        }
    }
    Interval::new(lo, hi)
}

/// Hull of the bias intervals of `targets`.
fn bias_hull(layer: &Layer, targets: &[usize]) -> Interval {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &t in targets {
        let b = layer.biases[t];
        lo = lo.min(b.lo);
        hi = hi.max(b.hi);
    }
    Interval::new(lo, hi)
}
