//! Interval neural networks and their execution semantics.
//!
//! An [`IntervalNetwork`] is a fully connected feed-forward ReLU network
//! whose weights and biases are intervals. Running it is existential: every
//! edge weight and bias may be chosen anywhere inside its interval,
//! independently per edge, and a layer's output is the rectified affine image
//! under the chosen values. A network whose intervals are all singular
//! behaves exactly like an ordinary concrete network.
//!
//! Layer indexing: layer 0 is the input layer and carries no activation;
//! `layers[i]` holds the weights from layer `i` into layer `i + 1` and the
//! biases of layer `i + 1`. "Depth" below always means the number of such
//! transitions.

use crate::error::{Error, Result};
use crate::interval::Interval;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Absolute tolerance for membership and containment comparisons, unless a
/// caller passes its own.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// One transition between adjacent layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `weights[s][t]`: interval weight on the edge from source node `s` of
    /// the previous layer to target node `t`.
    pub weights: Vec<Vec<Interval>>,
    /// `biases[t]`: interval bias of target node `t`.
    pub biases: Vec<Interval>,
}

impl Layer {
    pub fn source_size(&self) -> usize {
        self.weights.len()
    }

    pub fn target_size(&self) -> usize {
        self.biases.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalNetwork {
    pub input_size: usize,
    pub layers: Vec<Layer>,
}

impl IntervalNetwork {
    /// Number of layer transitions.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Node counts of every layer, input first, output last.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.layers.len() + 1);
        sizes.push(self.input_size);
        for l in &self.layers {
            sizes.push(l.target_size());
        }
        sizes
    }

    pub fn size_of(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_size
        } else {
            self.layers[layer - 1].target_size()
        }
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map_or(self.input_size, Layer::target_size)
    }

    /// Structural checks: at least one transition, consistent matrix shapes,
    /// every interval ordered and finite. Each message names the offending
    /// layer and entry.
    pub fn validate(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.input_size == 0 {
            bad.push("input layer has no nodes".to_string());
        }
        if self.layers.is_empty() {
            bad.push("network has no layer transitions".to_string());
            return bad;
        }
        let mut source = self.input_size;
        for (i, layer) in self.layers.iter().enumerate() {
            let target = layer.target_size();
            if target == 0 {
                bad.push(format!("layer {}: no nodes", i + 1));
            }
            if layer.weights.len() != source {
                bad.push(format!(
                    "layer {}: weight matrix has {} rows, expected {} (one per source node)",
                    i + 1,
                    layer.weights.len(),
                    source
                ));
            }
            for (s, row) in layer.weights.iter().enumerate() {
                if row.len() != target {
                    bad.push(format!(
                        "layer {}: weight row {} has {} columns, expected {}",
                        i + 1,
                        s,
                        row.len(),
                        target
                    ));
                }
                for (t, w) in row.iter().enumerate() {
                    check_interval(&mut bad, *w, &format!("layer {} weight [{s}][{t}]", i + 1));
                }
            }
            for (t, b) in layer.biases.iter().enumerate() {
                check_interval(&mut bad, *b, &format!("layer {} bias [{t}]", i + 1));
            }
            source = target;
        }
        bad
    }

    pub fn validated(self) -> Result<IntervalNetwork> {
        let bad = self.validate();
        if bad.is_empty() {
            Ok(self)
        } else {
            Err(Error::from_violations("network", &bad))
        }
    }

    /// True when every weight and bias interval is singular, i.e. the network
    /// is an ordinary concrete network.
    pub fn is_concrete(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|row| row.iter().all(|w| w.is_point()))
                && l.biases.iter().all(|b| b.is_point())
        })
    }
}

fn check_interval(bad: &mut Vec<String>, iv: Interval, what: &str) {
    if iv.lo.is_nan() || iv.hi.is_nan() || iv.lo.is_infinite() || iv.hi.is_infinite() {
        bad.push(format!("{what}: non-finite endpoint [{}, {}]", iv.lo, iv.hi));
    } else if iv.lo > iv.hi {
        bad.push(format!("{what}: lower {} exceeds upper {}", iv.lo, iv.hi));
    }
}

/// Node values of one specific layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Valuation {
    pub layer: usize,
    pub values: Vec<f64>,
}

impl Valuation {
    pub fn new(layer: usize, values: Vec<f64>) -> Valuation {
        Valuation { layer, values }
    }
}

/// Axis-aligned box of admissible inputs, one interval per input node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputBox {
    pub bounds: Vec<Interval>,
}

impl InputBox {
    pub fn new(bounds: Vec<Interval>) -> InputBox {
        InputBox { bounds }
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn validate(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for (i, b) in self.bounds.iter().enumerate() {
            check_interval(&mut bad, *b, &format!("input bound [{i}]"));
        }
        bad
    }

    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        point.len() == self.bounds.len()
            && self
                .bounds
                .iter()
                .zip(point)
                .all(|(b, &x)| b.contains(x, tol))
    }

    /// Uniform sample from the box.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|b| {
                if b.is_point() {
                    b.lo
                } else {
                    rng.gen_range(b.lo..b.hi)
                }
            })
            .collect()
    }
}

/// One concrete choice of every edge weight and bias, shaped exactly like the
/// network's own parameter arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSelection {
    /// `weights[i][s][t]` chosen from `net.layers[i].weights[s][t]`.
    pub weights: Vec<Vec<Vec<f64>>>,
    /// `biases[i][t]` chosen from `net.layers[i].biases[t]`.
    pub biases: Vec<Vec<f64>>,
}

/// Draws every parameter uniformly from its interval, deterministically from
/// `seed`. Singular intervals contribute their point value without consuming
/// randomness, so a concrete network yields its unique selection for every
/// seed.
pub fn sample_selection(net: &IntervalNetwork, seed: u64) -> WeightSelection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |iv: Interval| -> f64 {
        if iv.is_point() {
            iv.lo
        } else {
            rng.gen_range(iv.lo..iv.hi)
        }
    };
    let mut weights = Vec::with_capacity(net.layers.len());
    let mut biases = Vec::with_capacity(net.layers.len());
    for layer in &net.layers {
        weights.push(
            layer
                .weights
                .iter()
                .map(|row| row.iter().map(|&w| draw(w)).collect())
                .collect(),
        );
        biases.push(layer.biases.iter().map(|&b| draw(b)).collect());
    }
    WeightSelection { weights, biases }
}

/// True when `sel` has the network's shape and every chosen value lies inside
/// its interval (tolerance [`MEMBERSHIP_TOL`]).
pub fn selection_within(net: &IntervalNetwork, sel: &WeightSelection) -> bool {
    if sel.weights.len() != net.layers.len() || sel.biases.len() != net.layers.len() {
        return false;
    }
    for (layer, (ws, bs)) in net.layers.iter().zip(sel.weights.iter().zip(&sel.biases)) {
        if ws.len() != layer.weights.len() || bs.len() != layer.biases.len() {
            return false;
        }
        for (row, srow) in layer.weights.iter().zip(ws) {
            if srow.len() != row.len()
                || !row
                    .iter()
                    .zip(srow)
                    .all(|(iv, &w)| iv.contains(w, MEMBERSHIP_TOL))
            {
                return false;
            }
        }
        if !layer
            .biases
            .iter()
            .zip(bs)
            .all(|(iv, &b)| iv.contains(b, MEMBERSHIP_TOL))
        {
            return false;
        }
    }
    true
}

/// Applies transition `i` under a fixed weight selection: the rectified
/// affine image of `v`, which must be a valuation of layer `i`.
pub fn post_layer(
    net: &IntervalNetwork,
    i: usize,
    v: &Valuation,
    sel: &WeightSelection,
) -> Result<Valuation> {
    if i >= net.depth() {
        return Err(Error::Shape(format!(
            "transition {i} out of range for a depth-{} network",
            net.depth()
        )));
    }
    if v.layer != i {
        return Err(Error::Shape(format!(
            "valuation is for layer {}, transition {i} needs layer {i}",
            v.layer
        )));
    }
    let layer = &net.layers[i];
    if v.values.len() != layer.source_size() {
        return Err(Error::Shape(format!(
            "valuation has {} values, layer {i} has {} nodes",
            v.values.len(),
            layer.source_size()
        )));
    }
    let ws = &sel.weights[i];
    let bs = &sel.biases[i];
    let target = layer.target_size();
    let mut out = vec![0.0; target];
    for (t, o) in out.iter_mut().enumerate() {
        let mut pre = bs[t];
        for (s, &x) in v.values.iter().enumerate() {
            pre += ws[s][t] * x;
        }
        *o = pre.max(0.0);
    }
    Ok(Valuation::new(i + 1, out))
}

/// Runs the whole network on an input point under a fixed selection,
/// returning the output-layer valuation.
pub fn eval(net: &IntervalNetwork, input: &[f64], sel: &WeightSelection) -> Result<Valuation> {
    if input.len() != net.input_size {
        return Err(Error::Shape(format!(
            "input has {} values, network expects {}",
            input.len(),
            net.input_size
        )));
    }
    let mut v = Valuation::new(0, input.to_vec());
    for i in 0..net.depth() {
        v = post_layer(net, i, &v, sel)?;
    }
    Ok(v)
}

/// Decides whether `v_next` can be the image of `v` under transition `i` for
/// *some* admissible weight choice, at absolute tolerance `tol`.
///
/// Because every edge picks its weight independently, the reachable
/// pre-activation of a target node is exactly the interval
/// `[bias.lo + sum_s min(w.lo*v_s, w.hi*v_s), bias.hi + sum_s max(...)]`
/// (edges with `v_s = 0` contribute nothing either way). A positive output
/// must lie in that interval; a zero output needs the interval to reach 0 or
/// below.
pub fn layer_membership(
    net: &IntervalNetwork,
    i: usize,
    v: &Valuation,
    v_next: &Valuation,
    tol: f64,
) -> Result<bool> {
    if i >= net.depth() {
        return Err(Error::Shape(format!(
            "transition {i} out of range for a depth-{} network",
            net.depth()
        )));
    }
    if v.layer != i || v_next.layer != i + 1 {
        return Err(Error::Shape(format!(
            "membership for transition {i} needs valuations of layers {i} and {}, got {} and {}",
            i + 1,
            v.layer,
            v_next.layer
        )));
    }
    let layer = &net.layers[i];
    if v.values.len() != layer.source_size() || v_next.values.len() != layer.target_size() {
        return Err(Error::Shape(format!(
            "membership for transition {i}: got sizes {} -> {}, layer has {} -> {}",
            v.values.len(),
            v_next.values.len(),
            layer.source_size(),
            layer.target_size()
        )));
    }
    for (t, &y) in v_next.values.iter().enumerate() {
        let mut pre = layer.biases[t];
        for (s, &x) in v.values.iter().enumerate() {
            pre = pre.add(layer.weights[s][t].mul_value(x));
        }
        let ok = if y > tol {
            pre.contains(y, tol)
        } else if y >= -tol {
            // y is (numerically) zero: some choice must drive the
            // pre-activation to zero or below.
            pre.lo <= tol
        } else {
            false // rectified outputs are never negative
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}
