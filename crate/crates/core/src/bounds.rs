//! Interval-arithmetic value bounds for every node of a network.
//!
//! One forward sweep propagates the input box through the interval weights:
//! each node's pre-activation bound is the interval dot product of the
//! previous layer's post-activation bounds with the edge intervals, plus the
//! bias interval. These bounds are sound for every weight selection and every
//! input in the box, which is exactly what the MILP encoding needs for its
//! big-M constants and variable caps. They are generally not tight — that is
//! the solver's job.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::network::{InputBox, IntervalNetwork};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeBounds {
    /// Bounds on the affine value before rectification.
    pub pre: Interval,
    /// Bounds on the node's value: `pre.relu()` for computation layers. For
    /// the input layer (which has no activation) both fields carry the box
    /// interval unchanged.
    pub post: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkBounds {
    /// `layers[l][j]` bounds node `j` of layer `l`; index 0 is the input
    /// layer.
    pub layers: Vec<Vec<NodeBounds>>,
}

impl NetworkBounds {
    pub fn node(&self, layer: usize, j: usize) -> NodeBounds {
        self.layers[layer][j]
    }
}

/// Propagates `input` through `net`, producing sound pre- and post-activation
/// bounds for every node.
pub fn interval_bounds(net: &IntervalNetwork, input: &InputBox) -> Result<NetworkBounds> {
    if input.len() != net.input_size {
        return Err(Error::Shape(format!(
            "input box has {} intervals, network expects {}",
            input.len(),
            net.input_size
        )));
    }
    let mut layers = Vec::with_capacity(net.depth() + 1);
    layers.push(
        input
            .bounds
            .iter()
            .map(|&b| NodeBounds { pre: b, post: b })
            .collect::<Vec<_>>(),
    );
    for layer in &net.layers {
        let prev: &Vec<NodeBounds> = layers.last().expect("at least the input layer");
        let mut next = Vec::with_capacity(layer.target_size());
        for t in 0..layer.target_size() {
            let mut pre = layer.biases[t];
            for (s, p) in prev.iter().enumerate() {
                pre = pre.add(layer.weights[s][t].mul(p.post));
            }
            next.push(NodeBounds {
                pre,
                post: pre.relu(),
            });
        }
        layers.push(next);
    }
    Ok(NetworkBounds { layers })
}
