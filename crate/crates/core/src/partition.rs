//! Layer-wise node partitions, the interface between a network and its
//! merged abstraction.
//!
//! A [`Partition`] lists, for every layer of a network, the groups of node
//! indices that will be merged into one abstract node. Group order is
//! meaningful — group `g` of layer `l` becomes node `g` of layer `l` in the
//! abstract network — while order *within* a group is not.

use crate::error::{Error, Result};
use crate::network::IntervalNetwork;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// `groups[l]` partitions the nodes of layer `l`; one entry per network
    /// layer, input first.
    pub groups: Vec<Vec<Vec<usize>>>,
}

impl Partition {
    /// The partition that merges nothing: every node in its own group, in
    /// node order.
    pub fn identity(layer_sizes: &[usize]) -> Partition {
        Partition {
            groups: layer_sizes
                .iter()
                .map(|&n| (0..n).map(|i| vec![i]).collect())
                .collect(),
        }
    }

    /// Number of groups per layer (the abstract network's layer sizes).
    pub fn group_counts(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// True when layer `l` keeps every node separate and in order.
    pub fn is_identity_on(&self, l: usize) -> bool {
        self.groups[l]
            .iter()
            .enumerate()
            .all(|(g, members)| members.len() == 1 && members[0] == g)
    }

    /// Checks the partition against a network: one group list per layer, and
    /// per layer the groups must be non-empty, disjoint and cover exactly the
    /// node indices of that layer. With `require_io_identity` the input and
    /// output layers must additionally be untouched (identity), which is what
    /// the containment guarantee for merged abstractions assumes.
    pub fn validate(&self, net: &IntervalNetwork, require_io_identity: bool) -> Vec<String> {
        let sizes = net.layer_sizes();
        let mut bad = Vec::new();
        if self.groups.len() != sizes.len() {
            bad.push(format!(
                "partition covers {} layers, network has {}",
                self.groups.len(),
                sizes.len()
            ));
            return bad;
        }
        for (l, (layer_groups, &size)) in self.groups.iter().zip(&sizes).enumerate() {
            group_violations(&format!("layer {l}"), size, layer_groups, &mut bad);
        }
        if require_io_identity && bad.is_empty() {
            if !self.is_identity_on(0) {
                bad.push("input layer must be left unmerged (identity partition)".to_string());
            }
            let last = self.groups.len() - 1;
            if !self.is_identity_on(last) {
                bad.push("output layer must be left unmerged (identity partition)".to_string());
            }
        }
        bad
    }

    pub fn validated(self, net: &IntervalNetwork, require_io_identity: bool) -> Result<Partition> {
        let bad = self.validate(net, require_io_identity);
        if bad.is_empty() {
            Ok(self)
        } else {
            Err(Error::from_violations("partition", &bad))
        }
    }
}

/// Check a single layer's group list: every group non-empty, members in
/// range, no node in two groups, every node covered. Violations are appended
/// to `bad`, prefixed with `label`.
pub(crate) fn group_violations(label: &str, size: usize, groups: &[Vec<usize>], bad: &mut Vec<String>) {
    let mut seen = vec![false; size];
    for (g, members) in groups.iter().enumerate() {
        if members.is_empty() {
            bad.push(format!("{label} group {g} is empty"));
        }
        for &i in members {
            if i >= size {
                bad.push(format!(
                    "{label} group {g}: node index {i} out of range (layer size {size})"
                ));
            } else if seen[i] {
                bad.push(format!("{label}: node {i} appears in more than one group"));
            } else {
                seen[i] = true;
            }
        }
    }
    for (i, covered) in seen.iter().enumerate() {
        if !covered {
            bad.push(format!("{label}: node {i} is not covered by any group"));
        }
    }
}

/// Randomly groups each hidden layer into a requested number of
/// near-equal-sized groups (sizes differ by at most one); input and output
/// layers stay identity. `counts` has one entry per hidden layer, each in
/// `1..=layer size`. Deterministic in `seed`. Groups are sorted internally
/// and ordered by their smallest member, so equal seeds give equal
/// partitions and the output is easy to read.
pub fn random_balanced(
    net: &IntervalNetwork,
    counts: &[usize],
    seed: u64,
) -> Result<Partition> {
    let sizes = net.layer_sizes();
    let hidden = sizes.len().saturating_sub(2);
    if counts.len() != hidden {
        return Err(Error::invalid_partition(format!(
            "got {} group counts for {} hidden layers",
            counts.len(),
            hidden
        )));
    }
    let mut groups: Vec<Vec<Vec<usize>>> = Vec::with_capacity(sizes.len());
    groups.push((0..sizes[0]).map(|i| vec![i]).collect());
    for (h, (&count, &size)) in counts.iter().zip(&sizes[1..sizes.len() - 1]).enumerate() {
        let layer = h + 1;
        if count == 0 || count > size {
            return Err(Error::invalid_partition(format!(
                "layer {layer}: cannot split {size} nodes into {count} groups"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, layer as u64));
        let mut nodes: Vec<usize> = (0..size).collect();
        nodes.shuffle(&mut rng);
        // First (size % count) groups take the extra node.
        let base = size / count;
        let extra = size % count;
        let mut layer_groups = Vec::with_capacity(count);
        let mut cursor = 0;
        for g in 0..count {
            let take = base + usize::from(g < extra);
            let mut members: Vec<usize> = nodes[cursor..cursor + take].to_vec();
            members.sort_unstable();
            layer_groups.push(members);
            cursor += take;
        }
        layer_groups.sort_by_key(|m| m[0]);
        groups.push(layer_groups);
    }
    groups.push((0..sizes[sizes.len() - 1]).map(|i| vec![i]).collect());
    Ok(Partition { groups })
}

/// Deterministic partition assigning hidden node `i` to group `i mod count`
/// (clamped per layer to its size); input and output layers stay identity.
pub fn round_robin(net: &IntervalNetwork, count: usize) -> Result<Partition> {
    if count == 0 {
        return Err(Error::invalid_partition(
            "round-robin group count must be at least 1".to_string(),
        ));
    }
    let sizes = net.layer_sizes();
    let mut groups: Vec<Vec<Vec<usize>>> = Vec::with_capacity(sizes.len());
    groups.push((0..sizes[0]).map(|i| vec![i]).collect());
    for &size in &sizes[1..sizes.len() - 1] {
        let c = count.min(size);
        let mut layer_groups: Vec<Vec<usize>> = vec![Vec::new(); c];
        for i in 0..size {
            layer_groups[i % c].push(i);
        }
        groups.push(layer_groups);
    }
    groups.push((0..sizes[sizes.len() - 1]).map(|i| vec![i]).collect());
    Ok(Partition { groups })
}

/// Cheap deterministic seed mixing (splitmix64 step) so different layers and
/// runs draw from unrelated streams of the master seed.
pub(crate) fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;
    use crate::network::Layer;

    /// 2 -> 4 -> 3 -> 2 all-zero network; partitions only care about shapes.
    fn shape_net() -> IntervalNetwork {
        let layer = |s: usize, t: usize| Layer {
            weights: vec![vec![Interval::ZERO; t]; s],
            biases: vec![Interval::ZERO; t],
        };
        IntervalNetwork {
            input_size: 2,
            layers: vec![layer(2, 4), layer(4, 3), layer(3, 2)],
        }
    }

    #[test]
    fn identity_partition_validates_everywhere() {
        let net = shape_net();
        let p = Partition::identity(&net.layer_sizes());
        assert!(p.validate(&net, true).is_empty());
        assert!((0..4).all(|l| p.is_identity_on(l)));
    }

    #[test]
    fn validation_catches_gaps_overlaps_and_ranges() {
        let net = shape_net();
        let mut p = Partition::identity(&net.layer_sizes());
        p.groups[1] = vec![vec![0, 1], vec![1, 2]]; // overlap on 1, missing 3
        let bad = p.validate(&net, false);
        assert!(bad.iter().any(|m| m.contains("more than one group")), "{bad:?}");
        assert!(bad.iter().any(|m| m.contains("node 3 is not covered")), "{bad:?}");

        let mut p = Partition::identity(&net.layer_sizes());
        p.groups[2] = vec![vec![0, 1, 2, 7]];
        let bad = p.validate(&net, false);
        assert!(bad.iter().any(|m| m.contains("out of range")), "{bad:?}");

        let mut p = Partition::identity(&net.layer_sizes());
        p.groups.pop();
        let bad = p.validate(&net, false);
        assert!(bad.iter().any(|m| m.contains("covers 3 layers")), "{bad:?}");
    }

    #[test]
    fn io_identity_is_enforced_only_on_request() {
        let net = shape_net();
        let mut p = Partition::identity(&net.layer_sizes());
        p.groups[3] = vec![vec![0, 1]]; // merge the output layer
        assert!(p.validate(&net, false).is_empty());
        let bad = p.validate(&net, true);
        assert!(bad.iter().any(|m| m.contains("output layer")), "{bad:?}");
    }

    #[test]
    fn random_balanced_is_balanced_and_deterministic() {
        let net = shape_net();
        let p = random_balanced(&net, &[3, 2], 42).unwrap();
        assert_eq!(p.groups[1].len(), 3);
        assert_eq!(p.groups[2].len(), 2);
        assert!(p.validate(&net, true).is_empty());
        // 4 nodes in 3 groups: sizes 2,1,1 in some order.
        let mut sizes: Vec<usize> = p.groups[1].iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 2]);
        assert_eq!(p, random_balanced(&net, &[3, 2], 42).unwrap());
        assert_ne!(p, random_balanced(&net, &[3, 2], 43).unwrap());
    }

    #[test]
    fn random_balanced_rejects_bad_counts() {
        let net = shape_net();
        assert!(random_balanced(&net, &[5, 2], 0).is_err()); // 5 > layer size 4
        assert!(random_balanced(&net, &[0, 2], 0).is_err());
        assert!(random_balanced(&net, &[2], 0).is_err()); // wrong arity
    }

    #[test]
    fn round_robin_interleaves() {
        let net = shape_net();
        let p = round_robin(&net, 2).unwrap();
        assert_eq!(p.groups[1], vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(p.groups[2], vec![vec![0, 2], vec![1]]);
        assert!(p.validate(&net, true).is_empty());
        // count larger than the layer clamps to identity-sized groups
        let p = round_robin(&net, 10).unwrap();
        assert_eq!(p.groups[2].len(), 3);
    }
}
