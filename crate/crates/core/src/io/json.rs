//! JSON documents for networks, partitions, and input boxes.
//!
//! The document structs are the stable wire schema; converting to the core
//! types validates shapes and interval endpoints with a JSON-path message on
//! every failure. Writing always emits the canonical form — singular
//! intervals as bare numbers, two-element arrays otherwise — and numbers in
//! the shortest representation that parses back to the same 64-bit float, so
//! write ∘ parse is bit-exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::network::{InputBox, IntervalNetwork, Layer};
use crate::partition::Partition;

/// A weight, bias, or bound entry: a bare number is shorthand for the
/// singular interval `[x, x]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntervalRepr {
    Point(f64),
    Pair([f64; 2]),
}

impl IntervalRepr {
    fn to_interval(self, path: impl Fn() -> String) -> Result<Interval> {
        let (lo, hi) = match self {
            IntervalRepr::Point(x) => (x, x),
            IntervalRepr::Pair([lo, hi]) => (lo, hi),
        };
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Parse(format!(
                "{}: interval endpoints must be finite, got [{lo}, {hi}]",
                path()
            )));
        }
        if lo > hi {
            return Err(Error::Parse(format!(
                "{}: empty interval [{lo}, {hi}]",
                path()
            )));
        }
        Ok(Interval::new(lo, hi))
    }

    fn from_interval(iv: Interval) -> IntervalRepr {
        if iv.is_point() {
            IntervalRepr::Point(iv.lo)
        } else {
            IntervalRepr::Pair([iv.lo, iv.hi])
        }
    }
}

fn default_version() -> u32 {
    1
}

/// Wire form of an interval network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    #[serde(default = "default_version")]
    pub version: u32,
    /// Node count per layer, inputs first.
    pub layers: Vec<usize>,
    /// Per transition, source-major: `weights[i][s][t]`.
    pub weights: Vec<Vec<Vec<IntervalRepr>>>,
    /// Per transition: `biases[i][t]`.
    pub biases: Vec<Vec<IntervalRepr>>,
    /// Cosmetic node names, one list per layer; not used by analysis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<Vec<String>>>,
    /// Free-form note on where the document came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl NetworkDocument {
    pub fn from_network(net: &IntervalNetwork) -> NetworkDocument {
        NetworkDocument {
            version: 1,
            layers: net.layer_sizes(),
            weights: net
                .layers
                .iter()
                .map(|l| {
                    l.weights
                        .iter()
                        .map(|row| row.iter().map(|&w| IntervalRepr::from_interval(w)).collect())
                        .collect()
                })
                .collect(),
            biases: net
                .layers
                .iter()
                .map(|l| l.biases.iter().map(|&b| IntervalRepr::from_interval(b)).collect())
                .collect(),
            names: None,
            provenance: None,
        }
    }

    pub fn to_network(&self) -> Result<IntervalNetwork> {
        if self.version != 1 {
            return Err(Error::Parse(format!(
                ".version: unsupported document version {}",
                self.version
            )));
        }
        if self.layers.len() < 2 {
            return Err(Error::Parse(format!(
                ".layers: need at least an input and an output layer, got {}",
                self.layers.len()
            )));
        }
        let transitions = self.layers.len() - 1;
        if self.weights.len() != transitions {
            return Err(Error::Parse(format!(
                ".weights: expected {transitions} transitions, got {}",
                self.weights.len()
            )));
        }
        if self.biases.len() != transitions {
            return Err(Error::Parse(format!(
                ".biases: expected {transitions} transitions, got {}",
                self.biases.len()
            )));
        }
        if let Some(names) = &self.names {
            if names.len() != self.layers.len() {
                return Err(Error::Parse(format!(
                    ".names: expected {} layers, got {}",
                    self.layers.len(),
                    names.len()
                )));
            }
            for (l, (ns, &size)) in names.iter().zip(&self.layers).enumerate() {
                if ns.len() != size {
                    return Err(Error::Parse(format!(
                        ".names[{l}]: expected {size} names, got {}",
                        ns.len()
                    )));
                }
            }
        }
        let mut layers = Vec::with_capacity(transitions);
        for i in 0..transitions {
            let (n_src, n_tgt) = (self.layers[i], self.layers[i + 1]);
            let rows = &self.weights[i];
            if rows.len() != n_src {
                return Err(Error::Parse(format!(
                    ".weights[{i}]: expected {n_src} source rows, got {}",
                    rows.len()
                )));
            }
            let mut weights = Vec::with_capacity(n_src);
            for (s, row) in rows.iter().enumerate() {
                if row.len() != n_tgt {
                    return Err(Error::Parse(format!(
                        ".weights[{i}][{s}]: expected {n_tgt} entries, got {}",
                        row.len()
                    )));
                }
                weights.push(
                    row.iter()
                        .enumerate()
                        .map(|(t, &w)| w.to_interval(|| format!(".weights[{i}][{s}][{t}]")))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            let brow = &self.biases[i];
            if brow.len() != n_tgt {
                return Err(Error::Parse(format!(
                    ".biases[{i}]: expected {n_tgt} entries, got {}",
                    brow.len()
                )));
            }
            let biases = brow
                .iter()
                .enumerate()
                .map(|(t, &b)| b.to_interval(|| format!(".biases[{i}][{t}]")))
                .collect::<Result<Vec<_>>>()?;
            layers.push(Layer { weights, biases });
        }
        IntervalNetwork {
            input_size: self.layers[0],
            layers,
        }
        .validated()
    }
}

pub fn parse_network_json(text: &str) -> Result<IntervalNetwork> {
    let doc: NetworkDocument =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("network JSON: {e}")))?;
    doc.to_network()
}

pub fn write_network_json(net: &IntervalNetwork) -> String {
    pretty(&NetworkDocument::from_network(net))
}

/// Wire form of a partition: per layer, a list of groups of node indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionDocument {
    pub layers: Vec<Vec<Vec<usize>>>,
}

/// Parses the partition schema. Validation against a concrete network
/// (coverage, disjointness, identity input/output layers) happens where the
/// partition is used.
pub fn parse_partition_json(text: &str) -> Result<Partition> {
    let doc: PartitionDocument =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("partition JSON: {e}")))?;
    Ok(Partition { groups: doc.layers })
}

pub fn write_partition_json(p: &Partition) -> String {
    pretty(&PartitionDocument {
        layers: p.groups.clone(),
    })
}

/// Wire form of an input box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDocument {
    pub bounds: Vec<IntervalRepr>,
}

pub fn parse_box_json(text: &str) -> Result<InputBox> {
    let doc: BoxDocument =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("box JSON: {e}")))?;
    let bounds = doc
        .bounds
        .iter()
        .enumerate()
        .map(|(i, &b)| b.to_interval(|| format!(".bounds[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let input = InputBox::new(bounds);
    let bad = input.validate();
    if bad.is_empty() {
        Ok(input)
    } else {
        Err(Error::from_violations("input box", &bad))
    }
}

pub fn write_box_json(input: &InputBox) -> String {
    pretty(&BoxDocument {
        bounds: input
            .bounds
            .iter()
            .map(|&b| IntervalRepr::from_interval(b))
            .collect(),
    })
}

fn pretty<T: Serialize>(doc: &T) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("documents always serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_numbers_read_as_singular_intervals() {
        let text = r#"{
            "layers": [1, 1],
            "weights": [[[7]]],
            "biases": [[[-1.5, 2]]]
        }"#;
        let net = parse_network_json(text).unwrap();
        assert_eq!(net.layers[0].weights[0][0], Interval::point(7.0));
        assert_eq!(net.layers[0].biases[0], Interval::new(-1.5, 2.0));
    }

    #[test]
    fn network_documents_round_trip() {
        let net = IntervalNetwork {
            input_size: 2,
            layers: vec![Layer {
                weights: vec![
                    vec![Interval::new(0.1, 0.2), Interval::point(-3.0)],
                    vec![Interval::point(1.0 / 3.0), Interval::new(-1e-17, 2e300)],
                ],
                biases: vec![Interval::ZERO, Interval::new(-0.75, 0.5)],
            }],
        };
        let text = write_network_json(&net);
        let back = parse_network_json(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(write_network_json(&back), text);
    }

    #[test]
    fn shape_errors_carry_json_paths() {
        let text = r#"{
            "layers": [2, 1],
            "weights": [[[1], [2], [3]]],
            "biases": [[0]]
        }"#;
        let err = parse_network_json(text).unwrap_err();
        assert!(err.to_string().contains(".weights[0]"), "{err}");

        let text = r#"{
            "layers": [1, 1],
            "weights": [[[[5, 3]]]],
            "biases": [[0]]
        }"#;
        let err = parse_network_json(text).unwrap_err();
        assert!(err.to_string().contains(".weights[0][0][0]"), "{err}");
        assert!(err.to_string().contains("empty interval"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "layers": [1, 1],
            "weights": [[[1]]],
            "biases": [[0]],
            "activations": ["tanh"]
        }"#;
        let err = parse_network_json(text).unwrap_err();
        assert!(err.to_string().contains("activations"), "{err}");
    }

    #[test]
    fn partition_and_box_documents_round_trip() {
        let p = Partition {
            groups: vec![vec![vec![0], vec![1]], vec![vec![0, 2], vec![1]], vec![vec![0]]],
        };
        let text = write_partition_json(&p);
        assert_eq!(parse_partition_json(&text).unwrap(), p);

        let input = InputBox::new(vec![Interval::new(0.0, 1.0), Interval::point(0.25)]);
        let text = write_box_json(&input);
        let back = parse_box_json(&text).unwrap();
        assert_eq!(back, input);
        assert_eq!(write_box_json(&back), text);
    }

    #[test]
    fn box_schema_matches_the_documented_example() {
        let input = parse_box_json(r#"{"bounds": [[0, 1], [0, 1]]}"#).unwrap();
        assert_eq!(input.len(), 2);
        assert_eq!(input.bounds[0], Interval::new(0.0, 1.0));

        let err = parse_box_json(r#"{"bounds": [[1, 0]]}"#).unwrap_err();
        assert!(err.to_string().contains(".bounds[0]"), "{err}");
    }

    #[test]
    fn names_must_match_layer_sizes() {
        let text = r#"{
            "layers": [1, 2],
            "weights": [[[1, 2]]],
            "biases": [[0, 0]],
            "names": [["in"], ["a"]]
        }"#;
        let err = parse_network_json(text).unwrap_err();
        assert!(err.to_string().contains(".names[1]"), "{err}");
    }
}
