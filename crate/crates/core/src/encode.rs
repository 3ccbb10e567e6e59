//! Mixed-integer encoding of an interval network over a box.
//!
//! Every node becomes a continuous variable `x_i_j`; every non-input node
//! additionally gets a binary `q_i_j` switching its rectifier off. Per node,
//! four rows tie the post-activation value to the affine pre-activation
//! envelope: a lower row, non-negativity, a big-M upper row, and the big-M
//! off-switch. The big-M constants come from interval bound propagation, so
//! they are per-node and as small as the box allows.
//!
//! Sources that can go negative need care: with an interval weight `[l, u]`,
//! the smallest attainable contribution `min(l·x, u·x)` is concave in `x`
//! (and the largest convex), so the lower and upper rows use the secant of
//! that envelope over the source's known range instead of the raw endpoint
//! coefficient. For non-negative sources the secant degenerates to the plain
//! endpoint coefficient, and for concrete weights to the weight itself.

use serde::{Deserialize, Serialize};

use crate::bounds::{interval_bounds, NetworkBounds};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::network::{InputBox, IntervalNetwork};
use innrange_milp::{Model, ObjSense, Sense, VarId};

/// Address of a node: layer index (0 = inputs) and position within the layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRef {
    pub layer: usize,
    pub node: usize,
}

impl NodeRef {
    pub fn new(layer: usize, node: usize) -> NodeRef {
        NodeRef { layer, node }
    }
}

/// Variable-bound policy for the encoded model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodeStyle {
    /// Box bounds on inputs, propagated rectifier-image bounds on the rest,
    /// secant coefficients where sources may be negative. Tightest model.
    #[default]
    Tightened,
    /// The textbook shape: box bounds on inputs, `[0, M]` on everything else,
    /// raw interval-endpoint coefficients. Kept for fidelity experiments with
    /// the classical formulation.
    BigMOnly,
}

/// An extra linear row over the *input* variables, for input sets richer
/// than a box. `terms` pairs input node indices with coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtraRow {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: String,
}

/// The encoded model plus the bookkeeping needed to interpret it.
#[derive(Clone, Debug)]
pub struct Encoding {
    pub model: Model,
    /// Continuous node variables, `x[layer][node]`.
    pub x: Vec<Vec<VarId>>,
    /// Binary off-switches, `q[layer][node]`; `q[0]` is empty.
    pub q: Vec<Vec<VarId>>,
    /// Per-node big-M constants; `big_m[0]` is empty.
    pub big_m: Vec<Vec<f64>>,
    /// The propagated interval bounds the encoding was built from.
    pub bounds: NetworkBounds,
    pub style: EncodeStyle,
}

impl Encoding {
    /// Points the model's objective at an output node. The model keeps at
    /// most one objective — setting it again replaces the previous one.
    pub fn set_objective(&mut self, node: NodeRef, sense: ObjSense) -> Result<()> {
        let last = self.x.len() - 1;
        if node.layer != last || node.node >= self.x[last].len() {
            return Err(Error::Shape(format!(
                "objective node ({}, {}) is not an output node (output layer {} has {} nodes)",
                node.layer,
                node.node,
                last,
                self.x[last].len()
            )));
        }
        self.model.set_objective(sense, self.x[node.layer][node.node]);
        Ok(())
    }

    /// The continuous variable of a node, if the address is in range.
    pub fn var(&self, node: NodeRef) -> Option<VarId> {
        self.x.get(node.layer)?.get(node.node).copied()
    }
}

/// Per-node big-M constants: 1.05 times the largest pre-activation magnitude
/// the box admits, floored at 1.0 so degenerate all-zero nodes still get a
/// usable constant. Entry `[0]` (the input layer) is empty.
pub fn compute_big_m(net: &IntervalNetwork, input: &InputBox) -> Result<Vec<Vec<f64>>> {
    Ok(big_m_from(&interval_bounds(net, input)?))
}

fn big_m_from(bounds: &NetworkBounds) -> Vec<Vec<f64>> {
    bounds
        .layers
        .iter()
        .enumerate()
        .map(|(i, layer)| {
            if i == 0 {
                return Vec::new();
            }
            layer
                .iter()
                .map(|nb| {
                    let mag = nb.pre.lo.abs().max(nb.pre.hi.abs());
                    if mag == 0.0 {
                        1.0
                    } else {
                        1.05 * mag
                    }
                })
                .collect()
        })
        .collect()
}

/// Secant coefficients `(slope, offset)` bounding the contribution of one
/// source from below: `slope·x + offset ≤ min(w.lo·x, w.hi·x)` on `[src.lo,
/// src.hi]`, with equality at both ends.
fn secant_lower(w: Interval, src: Interval) -> (f64, f64) {
    if w.lo == w.hi || src.lo >= 0.0 {
        (w.lo, 0.0)
    } else if src.hi <= 0.0 {
        (w.hi, 0.0)
    } else {
        let slope = (w.lo * src.hi - w.hi * src.lo) / (src.hi - src.lo);
        (slope, w.hi * src.lo - slope * src.lo)
    }
}

/// Mirror image of [`secant_lower`]: `slope·x + offset ≥ max(w.lo·x, w.hi·x)`
/// on the source range.
fn secant_upper(w: Interval, src: Interval) -> (f64, f64) {
    if w.lo == w.hi || src.lo >= 0.0 {
        (w.hi, 0.0)
    } else if src.hi <= 0.0 {
        (w.lo, 0.0)
    } else {
        let slope = (w.hi * src.hi - w.lo * src.lo) / (src.hi - src.lo);
        (slope, w.lo * src.lo - slope * src.lo)
    }
}

/// Builds the mixed-integer model for `net` over `input`, with optional
/// extra linear rows over the input variables. No objective is set.
///
/// Row tags are `C_<layer>_<node>_<1..4>` for the four rows of each
/// non-input node; extra rows keep their own tags and come first.
pub fn encode(
    net: &IntervalNetwork,
    input: &InputBox,
    extra_rows: &[ExtraRow],
    style: EncodeStyle,
) -> Result<Encoding> {
    let bad = net.validate();
    if !bad.is_empty() {
        return Err(Error::from_violations("network", &bad));
    }
    let bad = input.validate();
    if !bad.is_empty() {
        return Err(Error::from_violations("input box", &bad));
    }
    let bounds = interval_bounds(net, input)?;
    let big_m = big_m_from(&bounds);

    let mut model = Model::new(match style {
        EncodeStyle::Tightened => "inn-tightened",
        EncodeStyle::BigMOnly => "inn-bigm",
    });
    let mut x: Vec<Vec<VarId>> = Vec::with_capacity(net.depth() + 1);
    let mut q: Vec<Vec<VarId>> = Vec::with_capacity(net.depth() + 1);

    x.push(
        input
            .bounds
            .iter()
            .enumerate()
            .map(|(j, b)| model.add_var(format!("x_0_{j}"), b.lo, b.hi))
            .collect(),
    );
    q.push(Vec::new());
    for (i, layer) in net.layers.iter().enumerate() {
        let l = i + 1;
        let xs = (0..layer.target_size())
            .map(|j| {
                let upper = match style {
                    EncodeStyle::Tightened => bounds.layers[l][j].post.hi,
                    EncodeStyle::BigMOnly => big_m[l][j],
                };
                model.add_var(format!("x_{l}_{j}"), 0.0, upper)
            })
            .collect();
        let qs = (0..layer.target_size())
            .map(|j| model.add_binary(format!("q_{l}_{j}")))
            .collect();
        x.push(xs);
        q.push(qs);
    }

    for row in extra_rows {
        let mut seen = vec![false; net.input_size];
        let mut terms = Vec::with_capacity(row.terms.len());
        for &(j, coeff) in &row.terms {
            if j >= net.input_size {
                return Err(Error::Shape(format!(
                    "extra row {:?} references input {} (network has {} inputs)",
                    row.tag, j, net.input_size
                )));
            }
            if seen[j] {
                return Err(Error::Shape(format!(
                    "extra row {:?} references input {} twice",
                    row.tag, j
                )));
            }
            seen[j] = true;
            terms.push((x[0][j], coeff));
        }
        model.add_constraint(row.tag.clone(), terms, row.sense, row.rhs);
    }

    for (i, layer) in net.layers.iter().enumerate() {
        let l = i + 1;
        for j in 0..layer.target_size() {
            let b = layer.biases[j];
            let m = big_m[l][j];
            let x_out = x[l][j];
            let q_out = q[l][j];

            let mut lower_terms = Vec::with_capacity(layer.source_size() + 1);
            let mut upper_terms = Vec::with_capacity(layer.source_size() + 2);
            let mut lower_shift = 0.0;
            let mut upper_shift = 0.0;
            for s in 0..layer.source_size() {
                let w = layer.weights[s][j];
                let (lo_slope, lo_off, up_slope, up_off) = match style {
                    EncodeStyle::Tightened => {
                        let src = bounds.layers[i][s].post;
                        let (ls, lo) = secant_lower(w, src);
                        let (us, uo) = secant_upper(w, src);
                        (ls, lo, us, uo)
                    }
                    EncodeStyle::BigMOnly => (w.lo, 0.0, w.hi, 0.0),
                };
                lower_terms.push((x[i][s], lo_slope));
                upper_terms.push((x[i][s], up_slope));
                lower_shift += lo_off;
                upper_shift += up_off;
            }
            lower_terms.push((x_out, -1.0));
            upper_terms.push((q_out, m));
            upper_terms.push((x_out, -1.0));

            model.add_constraint(
                format!("C_{l}_{j}_1"),
                lower_terms,
                Sense::Le,
                -b.lo - lower_shift,
            );
            model.add_constraint(format!("C_{l}_{j}_2"), vec![(x_out, 1.0)], Sense::Ge, 0.0);
            model.add_constraint(
                format!("C_{l}_{j}_3"),
                upper_terms,
                Sense::Ge,
                -b.hi - upper_shift,
            );
            model.add_constraint(
                format!("C_{l}_{j}_4"),
                vec![(x_out, 1.0), (q_out, m)],
                Sense::Le,
                m,
            );
        }
    }

    debug_assert!(model.validate().is_empty(), "{:?}", model.validate());
    Ok(Encoding {
        model,
        x,
        q,
        big_m,
        bounds,
        style,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Layer;
    use innrange_milp::{lp_solve, LpConfig, LpStatus};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_edge_net(w: Interval, b: Interval) -> IntervalNetwork {
        IntervalNetwork {
            input_size: 1,
            layers: vec![Layer {
                weights: vec![vec![w]],
                biases: vec![b],
            }],
        }
    }

    #[test]
    fn big_m_follows_the_propagated_magnitudes() {
        let net = one_edge_net(Interval::new(1.0, 2.0), Interval::new(0.0, 1.0));
        let input = InputBox::new(vec![Interval::new(0.0, 3.0)]);
        let m = compute_big_m(&net, &input).unwrap();
        assert_eq!(m[0], Vec::<f64>::new());
        assert_eq!(m[1].len(), 1);
        assert!((m[1][0] - 7.35).abs() < 1e-12);

        let dead = one_edge_net(Interval::ZERO, Interval::ZERO);
        let m = compute_big_m(&dead, &input).unwrap();
        assert_eq!(m[1], vec![1.0]);
    }

    #[test]
    fn census_counts_rows_and_binaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sizes = [2usize, 3, 1];
        let layers = (0..2)
            .map(|i| Layer {
                weights: (0..sizes[i])
                    .map(|_| {
                        (0..sizes[i + 1])
                            .map(|_| Interval::point(rng.gen_range(-1.0..1.0)))
                            .collect()
                    })
                    .collect(),
                biases: (0..sizes[i + 1])
                    .map(|_| Interval::point(rng.gen_range(-1.0..1.0)))
                    .collect(),
            })
            .collect();
        let net = IntervalNetwork {
            input_size: 2,
            layers,
        };
        let input = InputBox::new(vec![Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0)]);
        let enc = encode(&net, &input, &[], EncodeStyle::Tightened).unwrap();
        // 2 inputs + 4 nodes, one binary per non-input node, 4 rows each.
        assert_eq!(enc.model.num_vars(), 6 + 4);
        assert_eq!(enc.model.num_binaries(), 4);
        assert_eq!(enc.model.num_constraints(), 16);

        let rows = [ExtraRow {
            terms: vec![(0, 1.0), (1, 1.0)],
            sense: Sense::Le,
            rhs: 1.0,
            tag: "budget".into(),
        }];
        let enc = encode(&net, &input, &rows, EncodeStyle::Tightened).unwrap();
        assert_eq!(enc.model.num_constraints(), 17);
        assert_eq!(enc.model.constraints()[0].tag, "budget");
    }

    #[test]
    fn concrete_rows_reuse_the_same_coefficients() {
        let net = one_edge_net(Interval::point(1.5), Interval::point(-0.25));
        let input = InputBox::new(vec![Interval::new(-1.0, 1.0)]);
        let enc = encode(&net, &input, &[], EncodeStyle::Tightened).unwrap();
        let lower = &enc.model.constraints()[0];
        let upper = &enc.model.constraints()[2];
        assert_eq!(lower.tag, "C_1_0_1");
        assert_eq!(upper.tag, "C_1_0_3");
        // Same source coefficient on both rows for a concrete weight.
        assert_eq!(lower.terms[0], upper.terms[0]);
        assert_eq!(lower.terms[0].1, 1.5);
    }

    #[test]
    fn interval_edge_admits_exactly_the_weight_range() {
        let net = one_edge_net(Interval::new(1.0, 2.0), Interval::ZERO);
        let input = InputBox::new(vec![Interval::new(1.0, 1.0)]);
        let mut enc = encode(&net, &input, &[], EncodeStyle::Tightened).unwrap();
        let fix = [(enc.q[1][0], 0.0)];
        enc.set_objective(NodeRef::new(1, 0), ObjSense::Maximize).unwrap();
        let hi = lp_solve(&enc.model, &fix, &LpConfig::default()).unwrap();
        assert_eq!(hi.status, LpStatus::Optimal);
        assert!((hi.objective - 2.0).abs() < 1e-9);
        enc.set_objective(NodeRef::new(1, 0), ObjSense::Minimize).unwrap();
        let lo = lp_solve(&enc.model, &fix, &LpConfig::default()).unwrap();
        assert!((lo.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn objective_must_name_an_output_node() {
        let net = IntervalNetwork {
            input_size: 1,
            layers: vec![
                Layer {
                    weights: vec![vec![Interval::point(1.0)]],
                    biases: vec![Interval::ZERO],
                },
                Layer {
                    weights: vec![vec![Interval::point(1.0)]],
                    biases: vec![Interval::ZERO],
                },
            ],
        };
        let input = InputBox::new(vec![Interval::new(0.0, 1.0)]);
        let mut enc = encode(&net, &input, &[], EncodeStyle::Tightened).unwrap();
        assert!(enc.set_objective(NodeRef::new(1, 0), ObjSense::Maximize).is_err());
        assert!(enc.set_objective(NodeRef::new(2, 1), ObjSense::Maximize).is_err());
        enc.set_objective(NodeRef::new(2, 0), ObjSense::Minimize).unwrap();
        enc.set_objective(NodeRef::new(2, 0), ObjSense::Maximize).unwrap();
        let (sense, var) = enc.model.objective().unwrap();
        assert_eq!(sense, ObjSense::Maximize);
        assert_eq!(var, enc.x[2][0]);
    }

    #[test]
    fn extra_rows_must_stay_on_the_inputs() {
        let net = one_edge_net(Interval::point(1.0), Interval::ZERO);
        let input = InputBox::new(vec![Interval::new(0.0, 1.0)]);
        let bad = [ExtraRow {
            terms: vec![(1, 1.0)],
            sense: Sense::Le,
            rhs: 0.5,
            tag: "r".into(),
        }];
        let err = encode(&net, &input, &bad, EncodeStyle::Tightened).unwrap_err();
        assert!(err.to_string().contains("references input 1"));
        let dup = [ExtraRow {
            terms: vec![(0, 1.0), (0, -1.0)],
            sense: Sense::Le,
            rhs: 0.5,
            tag: "r".into(),
        }];
        assert!(encode(&net, &input, &dup, EncodeStyle::Tightened).is_err());
    }

    #[test]
    fn bound_styles_differ_only_in_tightness() {
        let net = one_edge_net(Interval::new(1.0, 2.0), Interval::new(0.0, 1.0));
        let input = InputBox::new(vec![Interval::new(0.0, 3.0)]);
        let tight = encode(&net, &input, &[], EncodeStyle::Tightened).unwrap();
        let loose = encode(&net, &input, &[], EncodeStyle::BigMOnly).unwrap();
        let v = tight.x[1][0];
        assert_eq!(tight.model.var(v).upper, 7.0); // rectifier image
        assert!((loose.model.var(v).upper - 7.35).abs() < 1e-12); // big-M
        assert_eq!(
            tight.model.num_constraints(),
            loose.model.num_constraints()
        );
    }

    #[test]
    fn secants_envelop_the_weight_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let b: f64 = rng.gen_range(-2.0..2.0);
            let w = Interval::new(a.min(b), a.max(b));
            let l = rng.gen_range(-2.0..1.0);
            let u = l + rng.gen_range(0.0..2.0);
            let src = Interval::new(l, u);
            let (ls, lo) = secant_lower(w, src);
            let (us, uo) = secant_upper(w, src);
            for k in 0..=20 {
                let x = l + (u - l) * (k as f64) / 20.0;
                let min_wx = (w.lo * x).min(w.hi * x);
                let max_wx = (w.lo * x).max(w.hi * x);
                assert!(ls * x + lo <= min_wx + 1e-9, "lower secant above envelope");
                assert!(us * x + uo >= max_wx - 1e-9, "upper secant below envelope");
            }
        }
    }

    /// Pre-activation magnitudes stay under the big-M constants across
    /// sampled inputs and weight selections.
    #[test]
    fn sampled_preactivations_respect_big_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sizes = [3usize, 4, 3, 2];
        let layers = (0..3)
            .map(|i| Layer {
                weights: (0..sizes[i])
                    .map(|_| {
                        (0..sizes[i + 1])
                            .map(|_| {
                                let a: f64 = rng.gen_range(-1.5..1.5);
                                let b: f64 = rng.gen_range(-1.5..1.5);
                                Interval::new(a.min(b), a.max(b))
                            })
                            .collect()
                    })
                    .collect(),
                biases: (0..sizes[i + 1])
                    .map(|_| Interval::point(rng.gen_range(-1.0..1.0)))
                    .collect(),
            })
            .collect();
        let net = IntervalNetwork {
            input_size: 3,
            layers,
        };
        let input = InputBox::new(vec![Interval::new(-1.0, 1.0); 3]);
        let big_m = compute_big_m(&net, &input).unwrap();

        for trial in 0..1000u64 {
            let point = input.sample(&mut rng);
            let sel = crate::network::sample_selection(&net, trial);
            let mut values = point.clone();
            for (i, layer) in net.layers.iter().enumerate() {
                let mut next = Vec::with_capacity(layer.target_size());
                for j in 0..layer.target_size() {
                    let mut pre = sel.biases[i][j];
                    for (s, &v) in values.iter().enumerate() {
                        pre += sel.weights[i][s][j] * v;
                    }
                    assert!(
                        pre.abs() <= big_m[i + 1][j],
                        "pre-activation {pre} exceeds M {}",
                        big_m[i + 1][j]
                    );
                    next.push(pre.max(0.0));
                }
                values = next;
            }
        }
    }

    /// Membership in the one-step semantics coincides with feasibility of
    /// the encoded rows for some switch setting, on a non-negative box.
    #[test]
    fn rows_admit_exactly_the_member_images() {
        let net = one_edge_net(Interval::new(1.0, 2.0), Interval::ZERO);
        let input = InputBox::new(vec![Interval::new(0.0, 3.0)]);
        let enc = encode(&net, &input, &[], EncodeStyle::Tightened).unwrap();
        let feasible = |v: f64, out: f64| {
            [0.0, 1.0].iter().any(|&qv| {
                let fix = [(enc.x[0][0], v), (enc.x[1][0], out), (enc.q[1][0], qv)];
                let mut m = enc.model.clone();
                m.set_objective(ObjSense::Maximize, enc.x[1][0]);
                matches!(
                    lp_solve(&m, &fix, &LpConfig::default()),
                    Ok(s) if s.status == LpStatus::Optimal
                )
            })
        };
        assert!(feasible(2.0, 2.0)); // w = 1
        assert!(feasible(2.0, 4.0)); // w = 2
        assert!(feasible(2.0, 3.0)); // w = 1.5
        assert!(!feasible(2.0, 5.0)); // above the envelope
        assert!(!feasible(2.0, 1.0)); // below the envelope
    }
}
