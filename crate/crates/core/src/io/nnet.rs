//! The NNet plain-text network format.
//!
//! Layout: `/`-prefixed comment lines, then a count-driven number stream —
//! header (transition count, input size, output size, widest layer), layer
//! sizes, a legacy flag, per-input minimums and maximums, then normalization
//! means and ranges (one extra entry each for the outputs), then per
//! transition the weight matrix in target-major rows followed by one bias
//! per target. Commas separate values and line breaks carry no meaning, so
//! wrapped rows parse fine. Errors carry line and column.
//!
//! Stored networks are concrete; the parser returns singular intervals. The
//! normalization block is returned as [`NnetMeta`] and never applied
//! silently — callers opt in via [`NnetMeta::normalized_box`].

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::network::{InputBox, IntervalNetwork, Layer};

/// Input ranges and normalization constants carried by an NNet file.
#[derive(Clone, Debug, PartialEq)]
pub struct NnetMeta {
    /// Smallest admitted raw value per input.
    pub input_min: Vec<f64>,
    /// Largest admitted raw value per input.
    pub input_max: Vec<f64>,
    /// Normalization means: one per input, then one for the outputs.
    pub means: Vec<f64>,
    /// Normalization ranges: one per input, then one for the outputs.
    pub ranges: Vec<f64>,
}

impl NnetMeta {
    /// Neutral metadata: raw range `[-1, 1]` per input and an identity
    /// normalization (mean 0, range 1).
    pub fn identity(input_size: usize) -> NnetMeta {
        NnetMeta {
            input_min: vec![-1.0; input_size],
            input_max: vec![1.0; input_size],
            means: vec![0.0; input_size + 1],
            ranges: vec![1.0; input_size + 1],
        }
    }

    /// The declared raw input ranges as a box.
    pub fn input_box(&self) -> InputBox {
        InputBox::new(
            self.input_min
                .iter()
                .zip(&self.input_max)
                .map(|(&lo, &hi)| Interval::new(lo, hi))
                .collect(),
        )
    }

    /// Clamps a raw box to the declared input ranges, then applies the
    /// stored normalization per input: `(v - mean) / range`.
    pub fn normalized_box(&self, raw: &InputBox) -> Result<InputBox> {
        if raw.len() != self.input_min.len() {
            return Err(Error::Shape(format!(
                "box has {} intervals, metadata declares {} inputs",
                raw.len(),
                self.input_min.len()
            )));
        }
        let mut bounds = Vec::with_capacity(raw.len());
        for (i, &b) in raw.bounds.iter().enumerate() {
            let lo = b.lo.max(self.input_min[i]);
            let hi = b.hi.min(self.input_max[i]);
            if lo > hi {
                return Err(Error::Shape(format!(
                    "input {i}: box [{}, {}] lies outside the declared range [{}, {}]",
                    b.lo, b.hi, self.input_min[i], self.input_max[i]
                )));
            }
            let range = self.ranges[i];
            if range == 0.0 || !range.is_finite() {
                return Err(Error::Unsupported(format!(
                    "input {i}: cannot normalize with range {range}"
                )));
            }
            bounds.push(Interval::new(
                (lo - self.means[i]) / range,
                (hi - self.means[i]) / range,
            ));
        }
        Ok(InputBox::new(bounds))
    }
}

struct Tok {
    text: String,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Vec<Tok> {
    let mut toks = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim_start().starts_with('/') {
            continue;
        }
        let mut offset = 0usize;
        for piece in line.split(',') {
            let trimmed = piece.trim();
            if !trimmed.is_empty() {
                toks.push(Tok {
                    text: trimmed.to_string(),
                    line: ln + 1,
                    col: offset + (piece.len() - piece.trim_start().len()) + 1,
                });
            }
            offset += piece.len() + 1;
        }
    }
    toks
}

struct Stream {
    toks: Vec<Tok>,
    pos: usize,
}

impl Stream {
    fn next_tok(&mut self, what: &str) -> Result<&Tok> {
        if self.pos >= self.toks.len() {
            return Err(Error::Parse(format!(
                "unexpected end of file while reading {what}"
            )));
        }
        self.pos += 1;
        Ok(&self.toks[self.pos - 1])
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let t = self.next_tok(what)?;
        t.text.parse().map_err(|_| {
            Error::Parse(format!(
                "line {}, column {}: expected an integer for {what}, got {:?}",
                t.line, t.col, t.text
            ))
        })
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let t = self.next_tok(what)?;
        t.text.parse().map_err(|_| {
            Error::Parse(format!(
                "line {}, column {}: expected a number for {what}, got {:?}",
                t.line, t.col, t.text
            ))
        })
    }

    /// Reads `n` numbers, reporting "expected N, found i" when the file ends
    /// early.
    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if self.pos >= self.toks.len() {
                return Err(Error::Parse(format!(
                    "{what}: expected {n} values, found {i} before the file ended"
                )));
            }
            out.push(self.f64(what)?);
        }
        Ok(out)
    }
}

/// Parses NNet text into a concrete network plus its normalization metadata.
pub fn parse_nnet(text: &str) -> Result<(IntervalNetwork, NnetMeta)> {
    let mut s = Stream {
        toks: tokenize(text),
        pos: 0,
    };
    let k = s.usize("the transition count")?;
    let input_size = s.usize("the input size")?;
    let output_size = s.usize("the output size")?;
    let max_size = s.usize("the maximum layer size")?;
    if k == 0 {
        return Err(Error::Parse(
            "header: transition count must be at least 1".to_string(),
        ));
    }
    let mut sizes = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let size = s.usize(&format!("the size of layer {i}"))?;
        if size == 0 {
            return Err(Error::Parse(format!("layer {i} has size 0")));
        }
        sizes.push(size);
    }
    if sizes[0] != input_size {
        return Err(Error::Parse(format!(
            "header input size {input_size} disagrees with first layer size {}",
            sizes[0]
        )));
    }
    if sizes[k] != output_size {
        return Err(Error::Parse(format!(
            "header output size {output_size} disagrees with last layer size {}",
            sizes[k]
        )));
    }
    let widest = *sizes.iter().max().expect("at least two layers");
    if widest != max_size {
        return Err(Error::Parse(format!(
            "header maximum layer size {max_size} disagrees with the actual maximum {widest}"
        )));
    }
    let _legacy_flag = s.f64("the legacy flag")?;
    let input_min = s.f64s(input_size, "input minimums")?;
    let input_max = s.f64s(input_size, "input maximums")?;
    let means = s.f64s(input_size + 1, "normalization means")?;
    let ranges = s.f64s(input_size + 1, "normalization ranges")?;

    let mut layers = Vec::with_capacity(k);
    for i in 0..k {
        let (n_src, n_tgt) = (sizes[i], sizes[i + 1]);
        let mut weights = vec![vec![Interval::ZERO; n_tgt]; n_src];
        for t in 0..n_tgt {
            let row = s.f64s(n_src, &format!("weights into node {t} of transition {i}"))?;
            for (src, v) in row.into_iter().enumerate() {
                weights[src][t] = Interval::point(v);
            }
        }
        let biases = s
            .f64s(n_tgt, &format!("biases of transition {i}"))?
            .into_iter()
            .map(Interval::point)
            .collect();
        layers.push(Layer { weights, biases });
    }
    if s.pos < s.toks.len() {
        let t = &s.toks[s.pos];
        return Err(Error::Parse(format!(
            "line {}, column {}: unexpected trailing value {:?}",
            t.line, t.col, t.text
        )));
    }
    let net = IntervalNetwork {
        input_size,
        layers,
    }
    .validated()?;
    Ok((
        net,
        NnetMeta {
            input_min,
            input_max,
            means,
            ranges,
        },
    ))
}

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_row(out: &mut String, values: impl Iterator<Item = f64>) {
    for v in values {
        out.push_str(&fmt_num(v));
        out.push(',');
    }
    out.push('\n');
}

/// Writes a concrete network in NNet text form. Numbers carry 17 significant
/// digits, so a parse of the output reproduces the network bit-exactly.
pub fn write_nnet(net: &IntervalNetwork, meta: &NnetMeta) -> Result<String> {
    if !net.is_concrete() {
        return Err(Error::Unsupported(
            "the NNet format stores concrete networks; interval weights cannot be written"
                .to_string(),
        ));
    }
    let n = net.input_size;
    if meta.input_min.len() != n
        || meta.input_max.len() != n
        || meta.means.len() != n + 1
        || meta.ranges.len() != n + 1
    {
        return Err(Error::Shape(format!(
            "metadata sized for {} inputs does not fit a network with {n}",
            meta.input_min.len()
        )));
    }
    let sizes = net.layer_sizes();
    let widest = *sizes.iter().max().expect("at least two layers");
    let mut out = String::new();
    out.push_str("// Interval network toolkit, NNet text form.\n");
    writeln!(
        out,
        "{},{},{},{},",
        net.depth(),
        n,
        net.output_size(),
        widest
    )
    .expect("writing to a string cannot fail");
    for &size in &sizes {
        write!(out, "{size},").expect("writing to a string cannot fail");
    }
    out.push('\n');
    out.push_str("0,\n");
    push_row(&mut out, meta.input_min.iter().copied());
    push_row(&mut out, meta.input_max.iter().copied());
    push_row(&mut out, meta.means.iter().copied());
    push_row(&mut out, meta.ranges.iter().copied());
    for layer in &net.layers {
        for t in 0..layer.target_size() {
            push_row(&mut out, (0..layer.source_size()).map(|s| layer.weights[s][t].lo));
        }
        for t in 0..layer.target_size() {
            push_row(&mut out, std::iter::once(layer.biases[t].lo));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = "\
// one hidden node
2,1,1,1,
1,1,1,
0,
-1.0,
1.0,
0.0,0.0,
1.0,1.0,
2.0,
0.5,
3.0,
-1.0,
";

    #[test]
    fn minimal_file_parses_to_the_written_weights() {
        let (net, meta) = parse_nnet(TINY).unwrap();
        assert_eq!(net.layer_sizes(), vec![1, 1, 1]);
        assert_eq!(net.layers[0].weights[0][0], Interval::point(2.0));
        assert_eq!(net.layers[0].biases[0], Interval::point(0.5));
        assert_eq!(net.layers[1].weights[0][0], Interval::point(3.0));
        assert_eq!(net.layers[1].biases[0], Interval::point(-1.0));
        assert_eq!(meta.input_min, vec![-1.0]);
        assert_eq!(meta.ranges, vec![1.0, 1.0]);
    }

    #[test]
    fn wide_header_shapes_come_back_as_declared() {
        let sizes = [5usize, 50, 50, 50, 50, 50, 50, 5];
        let layers = (0..7)
            .map(|i| Layer {
                weights: vec![vec![Interval::point(0.25); sizes[i + 1]]; sizes[i]],
                biases: vec![Interval::ZERO; sizes[i + 1]],
            })
            .collect();
        let net = IntervalNetwork {
            input_size: 5,
            layers,
        };
        let text = write_nnet(&net, &NnetMeta::identity(5)).unwrap();
        let (back, _) = parse_nnet(&text).unwrap();
        assert_eq!(back.layer_sizes(), sizes.to_vec());
        assert_eq!(back, net);
    }

    #[test]
    fn weights_survive_a_round_trip_bit_for_bit() {
        let net = IntervalNetwork {
            input_size: 2,
            layers: vec![Layer {
                weights: vec![
                    vec![Interval::point(1.0 / 3.0), Interval::point(-1e-17)],
                    vec![Interval::point(0.1 + 0.2), Interval::point(123456.789012345)],
                ],
                biases: vec![Interval::point(-0.0), Interval::point(2e-300)],
            }],
        };
        let meta = NnetMeta {
            input_min: vec![-0.3, 0.7],
            input_max: vec![0.30000000000000004, 1.7],
            means: vec![1.0 / 7.0, 0.0, -2.5],
            ranges: vec![3.0, 1.0, 0.5],
        };
        let text = write_nnet(&net, &meta).unwrap();
        let (back_net, back_meta) = parse_nnet(&text).unwrap();
        assert_eq!(back_net, net);
        assert_eq!(back_meta, meta);
        assert_eq!(write_nnet(&back_net, &back_meta).unwrap(), text);
    }

    #[test]
    fn truncation_reports_expected_versus_found() {
        let cut = TINY.rsplit_once("-1.0,").unwrap().0;
        let err = parse_nnet(cut).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("biases of transition 1"), "{msg}");
        assert!(msg.contains("expected 1 values, found 0"), "{msg}");
    }

    #[test]
    fn bad_tokens_carry_line_and_column() {
        let text = TINY.replace("3.0,", "wat,");
        let err = parse_nnet(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 11, column 1"), "{msg}");
        assert!(msg.contains("\"wat\""), "{msg}");
    }

    #[test]
    fn header_disagreements_are_rejected() {
        let wrong_input = TINY.replace("2,1,1,1,", "2,3,1,1,");
        let msg = parse_nnet(&wrong_input).unwrap_err().to_string();
        assert!(msg.contains("input size 3 disagrees"), "{msg}");

        let wrong_max = TINY.replace("2,1,1,1,", "2,1,1,9,");
        let msg = parse_nnet(&wrong_max).unwrap_err().to_string();
        assert!(msg.contains("maximum layer size 9"), "{msg}");
    }

    #[test]
    fn interval_networks_are_refused_by_the_writer() {
        let net = IntervalNetwork {
            input_size: 1,
            layers: vec![Layer {
                weights: vec![vec![Interval::new(1.0, 2.0)]],
                biases: vec![Interval::ZERO],
            }],
        };
        let err = write_nnet(&net, &NnetMeta::identity(1)).unwrap_err();
        assert!(err.to_string().contains("concrete"), "{err}");
    }

    #[test]
    fn normalization_clamps_then_scales() {
        let meta = NnetMeta {
            input_min: vec![-2.0],
            input_max: vec![2.0],
            means: vec![1.0, 0.0],
            ranges: vec![2.0, 1.0],
        };
        let raw = InputBox::new(vec![Interval::new(-5.0, 5.0)]);
        let norm = meta.normalized_box(&raw).unwrap();
        assert_eq!(norm.bounds[0], Interval::new(-1.5, 0.5));

        let outside = InputBox::new(vec![Interval::new(3.0, 4.0)]);
        assert!(meta.normalized_box(&outside).is_err());

        let degenerate = NnetMeta {
            ranges: vec![0.0, 1.0],
            ..meta
        };
        assert!(degenerate.normalized_box(&raw).is_err());
    }
}
