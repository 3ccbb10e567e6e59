//! A CPLEX-style LP file dialect: writer and matching reader.
//!
//! The writer emits the sections `Maximize`/`Minimize`, `Subject To`,
//! `Bounds`, `Binary` and `End`. Every number is printed with 17 significant
//! digits (`{:.16e}`), which survives a text round trip bit-exactly. Bounds
//! are written explicitly for every continuous variable — including free
//! variables and negative lower bounds — because the LP format's implicit
//! default of `x >= 0` is a classic source of silent errors. Binary variables
//! appear only in the `Binary` section (their [0, 1] bounds are implied).
//!
//! The reader accepts exactly this shape plus the obvious leniencies (blank
//! lines, `\` comments, case-insensitive keywords, terms wrapped across
//! lines, an omitted coefficient meaning 1). Parsing a written model yields a
//! structurally identical model in the sense of
//! [`Model::structurally_eq`].

use crate::model::{Model, ObjSense, Sense, VarId};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

/// Formats a float with 17 significant digits, enough to reproduce every
/// `f64` bit pattern after parsing.
fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders the model in the LP dialect described in the module docs.
pub fn write_lp(model: &Model) -> String {
    let mut out = String::new();
    if !model.name.is_empty() {
        let _ = writeln!(out, "\\ {}", model.name);
    }
    let (sense_word, obj_var) = match model.objective() {
        Some((ObjSense::Maximize, v)) => ("Maximize", Some(v)),
        Some((ObjSense::Minimize, v)) => ("Minimize", Some(v)),
        // An LP file needs an objective section; an empty expression is the
        // conventional way to say "feasibility only".
        None => ("Minimize", None),
    };
    let _ = writeln!(out, "{sense_word}");
    match obj_var {
        Some(v) => {
            let _ = writeln!(out, " obj: {}", model.var(v).name);
        }
        None => {
            let _ = writeln!(out, " obj:");
        }
    }
    let _ = writeln!(out, "Subject To");
    for c in model.constraints() {
        let mut line = format!(" {}:", c.tag);
        for (k, &(v, coeff)) in c.terms.iter().enumerate() {
            let name = &model.var(v).name;
            if k == 0 {
                if coeff < 0.0 || (coeff == 0.0 && coeff.is_sign_negative()) {
                    let _ = write!(line, " - {} {}", fmt_num(-coeff), name);
                } else {
                    let _ = write!(line, " {} {}", fmt_num(coeff), name);
                }
            } else if coeff < 0.0 || (coeff == 0.0 && coeff.is_sign_negative()) {
                let _ = write!(line, " - {} {}", fmt_num(-coeff), name);
            } else {
                let _ = write!(line, " + {} {}", fmt_num(coeff), name);
            }
        }
        let _ = write!(line, " {} {}", c.sense.symbol(), fmt_num(c.rhs));
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "Bounds");
    for v in model.vars() {
        if v.binary {
            continue;
        }
        let line = match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) => {
                if v.lower == v.upper {
                    format!(" {} = {}", v.name, fmt_num(v.lower))
                } else {
                    format!(" {} <= {} <= {}", fmt_num(v.lower), v.name, fmt_num(v.upper))
                }
            }
            (true, false) => format!(" {} >= {}", v.name, fmt_num(v.lower)),
            (false, true) => format!(" -infinity <= {} <= {}", v.name, fmt_num(v.upper)),
            (false, false) => format!(" {} free", v.name),
        };
        let _ = writeln!(out, "{line}");
    }
    let binaries = model.binaries();
    if !binaries.is_empty() {
        let _ = writeln!(out, "Binary");
        for q in binaries {
            let _ = writeln!(out, " {}", model.var(q).name);
        }
    }
    let _ = writeln!(out, "End");
    out
}

#[derive(Debug, Error)]
#[error("LP parse error at line {line}: {message}")]
pub struct LpParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> LpParseError {
    LpParseError {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    /// A word that ended with ':' (objective or constraint label).
    Label(String),
    Num(f64),
    Sense(Sense),
    Plus,
    Minus,
}

/// Splits the text into tokens, remembering the 1-based source line of each.
fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, LpParseError> {
    let mut toks = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = match raw.find('\\') {
            Some(p) => &raw[..p],
            None => raw,
        };
        for piece in line.split_whitespace() {
            let tok = match piece {
                "+" => Tok::Plus,
                "-" => Tok::Minus,
                "<=" | "<" | "=<" => Tok::Sense(Sense::Le),
                ">=" | ">" | "=>" => Tok::Sense(Sense::Ge),
                "=" => Tok::Sense(Sense::Eq),
                _ => {
                    if let Some(label) = piece.strip_suffix(':') {
                        if label.is_empty() {
                            return Err(err(line_no, "empty label before ':'"));
                        }
                        Tok::Label(label.to_string())
                    } else if let Ok(x) = piece.parse::<f64>() {
                        Tok::Num(x)
                    } else {
                        Tok::Word(piece.to_string())
                    }
                }
            };
            toks.push((line_no, tok));
        }
    }
    Ok(toks)
}

fn keyword(tok: &Tok) -> Option<String> {
    match tok {
        Tok::Word(w) => Some(w.to_ascii_lowercase()),
        _ => None,
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    model: Model,
    by_name: HashMap<String, VarId>,
    /// Variables whose bounds were set explicitly in the Bounds section.
    bounded: Vec<bool>,
}

impl Parser {
    fn peek(&self) -> Option<&(usize, Tok)> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|&(l, _)| l)
            .unwrap_or(0)
    }

    fn var(&mut self, name: &str) -> VarId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        // LP default bounds until the Bounds section says otherwise.
        let id = self.model.add_var(name.to_string(), 0.0, f64::INFINITY);
        self.by_name.insert(name.to_string(), id);
        self.bounded.push(false);
        id
    }

    /// True when the upcoming token opens a new section.
    fn at_section(&self) -> bool {
        match self.peek() {
            Some((_, t)) => matches!(
                keyword(t).as_deref(),
                Some(
                    "maximize" | "maximise" | "max" | "minimize" | "minimise" | "min"
                        | "subject" | "st" | "s.t." | "bounds" | "bound" | "binary"
                        | "binaries" | "bin" | "general" | "generals" | "end"
                )
            ),
            None => true,
        }
    }

    /// Parses a linear expression `[+|-] [num] name ...` up to a sense token
    /// or a new section/label. Returns the terms.
    fn expression(&mut self, what: &str) -> Result<Vec<(VarId, f64)>, LpParseError> {
        let mut terms = Vec::new();
        loop {
            if self.at_section() {
                break;
            }
            match self.peek() {
                Some((_, Tok::Sense(_))) | Some((_, Tok::Label(_))) | None => break,
                _ => {}
            }
            let mut sign = 1.0;
            loop {
                match self.peek() {
                    Some((_, Tok::Plus)) => {
                        self.next();
                    }
                    Some((_, Tok::Minus)) => {
                        sign = -sign;
                        self.next();
                    }
                    _ => break,
                }
            }
            let mut coeff = 1.0;
            if let Some((_, Tok::Num(x))) = self.peek() {
                coeff = *x;
                self.next();
            }
            match self.next() {
                Some((_, Tok::Word(name))) => {
                    let id = self.var(&name);
                    terms.push((id, sign * coeff));
                }
                Some((l, other)) => {
                    return Err(err(l, format!("expected a variable name in {what}, found {other:?}")))
                }
                None => return Err(err(self.line(), format!("{what} ends mid-expression"))),
            }
        }
        Ok(terms)
    }
}

/// Parses the LP dialect written by [`write_lp`].
pub fn parse_lp(text: &str) -> Result<Model, LpParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        model: Model::new("lp"),
        by_name: HashMap::new(),
        bounded: Vec::new(),
    };

    // Objective section.
    let obj_sense = match p.next() {
        Some((_, t)) => match keyword(&t).as_deref() {
            Some("maximize" | "maximise" | "max") => ObjSense::Maximize,
            Some("minimize" | "minimise" | "min") => ObjSense::Minimize,
            _ => return Err(err(1, "file must start with Maximize or Minimize")),
        },
        None => return Err(err(1, "empty LP file")),
    };
    if let Some((_, Tok::Label(_))) = p.peek() {
        p.next(); // the "obj:" label, name irrelevant
    }
    let obj_terms = p.expression("the objective")?;
    let objective = match obj_terms.as_slice() {
        [] => None,
        [(v, c)] if *c == 1.0 => Some(*v),
        _ => {
            return Err(err(
                1,
                "objective must be a single variable with coefficient 1 in this dialect",
            ))
        }
    };

    // Subject To.
    match p.next() {
        Some((l, t)) => match keyword(&t).as_deref() {
            Some("subject") => match p.next() {
                Some((_, t2)) if keyword(&t2).as_deref() == Some("to") => {}
                _ => return Err(err(l, "expected 'To' after 'Subject'")),
            },
            Some("st" | "s.t.") => {}
            _ => return Err(err(l, "expected 'Subject To' after the objective")),
        },
        None => return Err(err(p.line(), "missing 'Subject To' section")),
    }

    let mut auto_tag = 0usize;
    while !p.at_section() {
        let tag = match p.peek() {
            Some((_, Tok::Label(_))) => {
                let Some((_, Tok::Label(t))) = p.next() else { unreachable!() };
                t
            }
            _ => {
                auto_tag += 1;
                format!("R{auto_tag}")
            }
        };
        let start_line = p.line();
        let terms = p.expression(&format!("constraint {tag:?}"))?;
        let sense = match p.next() {
            Some((_, Tok::Sense(s))) => s,
            Some((l, t)) => return Err(err(l, format!("expected <=, >= or = in constraint {tag:?}, found {t:?}"))),
            None => return Err(err(start_line, format!("constraint {tag:?} has no sense"))),
        };
        let rhs = match p.next() {
            Some((_, Tok::Num(x))) => x,
            Some((l, Tok::Minus)) => match p.next() {
                Some((_, Tok::Num(x))) => -x,
                _ => return Err(err(l, format!("expected a number after '-' in constraint {tag:?}"))),
            },
            Some((l, t)) => return Err(err(l, format!("expected a right-hand side in constraint {tag:?}, found {t:?}"))),
            None => return Err(err(start_line, format!("constraint {tag:?} has no right-hand side"))),
        };
        if terms.is_empty() {
            return Err(err(start_line, format!("constraint {tag:?} has no terms")));
        }
        p.model.add_constraint(tag, terms, sense, rhs);
    }

    // Optional sections in any order: Bounds, Binary; then End.
    loop {
        let Some((l, t)) = p.next() else {
            return Err(err(p.line(), "missing 'End'"));
        };
        match keyword(&t).as_deref() {
            Some("end") => break,
            Some("bounds" | "bound") => parse_bounds(&mut p)?,
            Some("binary" | "binaries" | "bin") => {
                while !p.at_section() {
                    match p.next() {
                        Some((_, Tok::Word(name))) => {
                            let id = p.var(&name);
                            p.model.mark_binary(id);
                        }
                        Some((l2, t2)) => {
                            return Err(err(l2, format!("expected a variable name in Binary, found {t2:?}")))
                        }
                        None => return Err(err(l, "Binary section ends mid-file")),
                    }
                }
            }
            Some("general" | "generals") => {
                return Err(err(l, "general integer variables are not supported, only Binary"))
            }
            _ => return Err(err(l, format!("unexpected token {t:?}; expected Bounds, Binary or End"))),
        }
    }

    if let Some(v) = objective {
        p.model.set_objective(obj_sense, v);
    }
    Ok(p.model)
}

/// One bounds entry per line:
/// `a <= x <= b` | `-infinity <= x <= b` | `x <= b` | `x >= a` | `x = a` |
/// `x free`.
fn parse_bounds(p: &mut Parser) -> Result<(), LpParseError> {
    #[derive(Debug)]
    enum Lead {
        Num(f64),
        NegInf,
        Var(String),
    }
    while !p.at_section() {
        let (l, first) = p.next().expect("at_section ruled out EOF");
        let lead = match &first {
            Tok::Num(x) => Lead::Num(*x),
            Tok::Minus => match p.next() {
                Some((_, Tok::Num(x))) => Lead::Num(-x),
                Some((_, Tok::Word(w))) if is_inf_word(&w) => Lead::NegInf,
                _ => return Err(err(l, "expected a number or 'infinity' after '-' in Bounds")),
            },
            Tok::Word(w) if is_neg_inf_word(w) => Lead::NegInf,
            Tok::Word(w) => Lead::Var(w.clone()),
            other => return Err(err(l, format!("unexpected token {other:?} in Bounds"))),
        };
        match lead {
            Lead::Num(_) | Lead::NegInf => {
                let lower = match lead {
                    Lead::Num(x) => x,
                    _ => f64::NEG_INFINITY,
                };
                expect_sense(p, Sense::Le, l)?;
                let name = expect_word(p, l, "a variable name")?;
                expect_sense(p, Sense::Le, l)?;
                let upper = expect_num(p, l)?;
                let id = p.var(&name);
                p.model.set_var_bounds(id, lower, upper);
                p.bounded[id.index()] = true;
            }
            Lead::Var(name) => {
                let id = p.var(&name);
                match p.next() {
                    Some((_, Tok::Word(w))) if w.eq_ignore_ascii_case("free") => {
                        p.model.set_var_bounds(id, f64::NEG_INFINITY, f64::INFINITY);
                    }
                    Some((_, Tok::Sense(Sense::Le))) => {
                        let upper = expect_num(p, l)?;
                        let lower = if p.bounded[id.index()] {
                            p.model.var(id).lower
                        } else {
                            0.0
                        };
                        p.model.set_var_bounds(id, lower, upper);
                    }
                    Some((_, Tok::Sense(Sense::Ge))) => {
                        let lower = expect_num(p, l)?;
                        let upper = if p.bounded[id.index()] {
                            p.model.var(id).upper
                        } else {
                            f64::INFINITY
                        };
                        p.model.set_var_bounds(id, lower, upper);
                    }
                    Some((_, Tok::Sense(Sense::Eq))) => {
                        let x = expect_num(p, l)?;
                        p.model.set_var_bounds(id, x, x);
                    }
                    other => {
                        return Err(err(
                            l,
                            format!("malformed bounds line for {name:?}: found {other:?}"),
                        ))
                    }
                }
                p.bounded[id.index()] = true;
            }
        }
    }
    Ok(())
}

fn is_inf_word(w: &str) -> bool {
    matches!(w.to_ascii_lowercase().as_str(), "inf" | "infinity")
}

fn is_neg_inf_word(w: &str) -> bool {
    matches!(w.to_ascii_lowercase().as_str(), "-inf" | "-infinity")
}

fn expect_sense(p: &mut Parser, want: Sense, line: usize) -> Result<(), LpParseError> {
    match p.next() {
        Some((_, Tok::Sense(s))) if s == want => Ok(()),
        other => Err(err(line, format!("expected '{}' in Bounds, found {other:?}", want.symbol()))),
    }
}

fn expect_word(p: &mut Parser, line: usize, what: &str) -> Result<String, LpParseError> {
    match p.next() {
        Some((_, Tok::Word(w))) => Ok(w),
        other => Err(err(line, format!("expected {what} in Bounds, found {other:?}"))),
    }
}

fn expect_num(p: &mut Parser, line: usize) -> Result<f64, LpParseError> {
    match p.next() {
        Some((_, Tok::Num(x))) => Ok(x),
        Some((_, Tok::Minus)) => match p.next() {
            Some((_, Tok::Num(x))) => Ok(-x),
            other => Err(err(line, format!("expected a number after '-', found {other:?}"))),
        },
        other => Err(err(line, format!("expected a number in Bounds, found {other:?}"))),
    }
}
