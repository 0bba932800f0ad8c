//! CPLEX-style LP text.
//!
//! The writer lists every variable in `Bounds` in id order, so parsing its
//! output reproduces variable ids. The reader accepts the subset the writer
//! produces plus one-sided bounds and unlabelled rows; each row and the
//! objective must sit on a single line.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use super::{LpError, LpModel, Relation, Sense, VarId, VarKind};

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        // Debug keeps the shortest round-trip digits and uses exponents for extremes
        format!("{x:?}")
    }
}

fn expression(model: &LpModel, terms: &[(VarId, f64)]) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, &(v, c)) in terms.iter().enumerate() {
        let name = &model.var(v).name;
        let sign = if c.is_sign_negative() { "-" } else { "+" };
        if i == 0 {
            if sign == "-" {
                out.push_str("- ");
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        let _ = write!(out, "{} {name}", num(c.abs()));
    }
    out
}

/// Renders `model` as LP text.
pub fn export_lp_text(model: &LpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {}", model.name());
    out.push_str(match model.objective().sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    let _ = writeln!(out, " obj: {}", expression(model, &model.objective().terms));
    out.push_str("Subject To\n");
    for c in model.constraints() {
        let _ = writeln!(
            out,
            " {}: {} {} {}",
            c.name,
            expression(model, &c.terms),
            c.relation,
            num(c.rhs)
        );
    }
    out.push_str("Bounds\n");
    for v in model.variables() {
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", num(v.lower), v.name, num(v.upper));
        }
    }
    let binaries: Vec<&str> = model
        .variables()
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for name in binaries {
            let _ = writeln!(out, " {name}");
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn section_header(line: &str) -> Option<(Section, Option<Sense>)> {
    let lower = line.to_ascii_lowercase();
    let words: Vec<&str> = lower.split_whitespace().collect();
    Some(match words.as_slice() {
        ["minimize" | "minimise" | "minimum" | "min"] => {
            (Section::Objective, Some(Sense::Minimize))
        }
        ["maximize" | "maximise" | "maximum" | "max"] => {
            (Section::Objective, Some(Sense::Maximize))
        }
        ["subject", "to"] | ["such", "that"] | ["st"] | ["s.t."] => (Section::Constraints, None),
        ["bounds" | "bound"] => (Section::Bounds, None),
        ["binaries" | "binary" | "bin"] => (Section::Binaries, None),
        ["end"] => (Section::End, None),
        _ => return None,
    })
}

fn parse_num(tok: &str, line: usize) -> Result<f64, LpError> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok.parse().map_err(|_| LpError::Parse {
            line,
            message: format!("expected a number, found '{tok}'"),
        }),
    }
}

fn parse_relation(tok: &str) -> Option<Relation> {
    match tok {
        "<=" | "=<" | "<" => Some(Relation::Le),
        ">=" | "=>" | ">" => Some(Relation::Ge),
        "=" => Some(Relation::Eq),
        _ => None,
    }
}

fn is_number_like(tok: &str) -> bool {
    tok.trim_start_matches(['-', '+'])
        .starts_with(|c: char| c.is_ascii_digit() || c == '.')
        || parse_num(tok, 0).is_ok_and(f64::is_infinite)
}

/// Splits an optional `label:` prefix off a row.
fn split_label(text: &str) -> (Option<&str>, &str) {
    match text.find(':') {
        Some(i) => (Some(text[..i].trim()), &text[i + 1..]),
        None => (None, text),
    }
}

/// `[+|-] [coef] name ...`; a bare number is a zero-valued constant.
fn parse_expression(tokens: &[&str], line: usize) -> Result<Vec<(String, f64)>, LpError> {
    let err = |message: String| LpError::Parse { line, message };
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    let mut expect_operand = true;
    for &tok in tokens {
        match tok {
            "+" | "-" => {
                if coef.is_some() {
                    return Err(err(format!("dangling coefficient before '{tok}'")));
                }
                if tok == "-" {
                    sign = -sign;
                }
                expect_operand = true;
            }
            _ if is_number_like(tok) => {
                if coef.is_some() {
                    return Err(err(format!("two coefficients in a row at '{tok}'")));
                }
                coef = Some(parse_num(tok, line)?);
            }
            _ => {
                if !expect_operand {
                    return Err(err(format!("missing operator before '{tok}'")));
                }
                terms.push((tok.to_string(), sign * coef.take().unwrap_or(1.0)));
                sign = 1.0;
                expect_operand = false;
            }
        }
    }
    if let Some(c) = coef {
        if c != 0.0 {
            return Err(err("constant terms are not supported".into()));
        }
    }
    Ok(terms)
}

struct RawRow {
    name: String,
    terms: Vec<(String, f64)>,
    relation: Relation,
    rhs: f64,
}

/// Parses LP text into a model.
pub fn parse_lp_text(text: &str) -> Result<LpModel, LpError> {
    let mut name = String::from("model");
    let mut section = Section::Preamble;
    let mut sense = Sense::Minimize;
    let mut objective: Vec<(String, f64)> = Vec::new();
    let mut rows: Vec<RawRow> = Vec::new();
    let mut bounds: HashMap<String, (f64, f64)> = HashMap::new();
    let mut binaries: HashSet<String> = HashSet::new();
    // first mention in Bounds fixes the id, then everything else in order of appearance
    let mut bound_order: Vec<String> = Vec::new();
    let mut mention_order: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| LpError::Parse {
            line: line_no,
            message,
        };
        let trimmed = raw.trim();
        if let Some(comment) = trimmed.strip_prefix('\\') {
            if let Some(n) = comment.trim().strip_prefix("Problem:") {
                name = n.trim().to_string();
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        if let Some((s, new_sense)) = section_header(trimmed) {
            section = s;
            if let Some(x) = new_sense {
                sense = x;
            }
            continue;
        }
        match section {
            Section::Preamble => {
                return Err(err(format!("unexpected '{trimmed}' before the objective")))
            }
            Section::End => return Err(err("content after End".into())),
            Section::Objective => {
                let (_, body) = split_label(trimmed);
                let tokens: Vec<&str> = body.split_whitespace().collect();
                let terms = parse_expression(&tokens, line_no)?;
                mention_order.extend(terms.iter().map(|(n, _)| n.clone()));
                objective.extend(terms);
            }
            Section::Constraints => {
                let (label, body) = split_label(trimmed);
                let tokens: Vec<&str> = body.split_whitespace().collect();
                let pos = tokens
                    .iter()
                    .position(|t| parse_relation(t).is_some())
                    .ok_or_else(|| err("row without a relation".into()))?;
                let relation = parse_relation(tokens[pos]).unwrap();
                let rhs_tokens = &tokens[pos + 1..];
                let rhs = match rhs_tokens {
                    [v] => parse_num(v, line_no)?,
                    ["-", v] => -parse_num(v, line_no)?,
                    ["+", v] => parse_num(v, line_no)?,
                    _ => return Err(err("right-hand side must be a single number".into())),
                };
                let terms = parse_expression(&tokens[..pos], line_no)?;
                mention_order.extend(terms.iter().map(|(n, _)| n.clone()));
                rows.push(RawRow {
                    name: label.unwrap_or("").to_string(),
                    terms,
                    relation,
                    rhs,
                });
            }
            Section::Bounds => {
                let tokens: Vec<&str> = trimmed.split_whitespace().collect();
                let (var, lo, hi) = match tokens.as_slice() {
                    [v, free] if free.eq_ignore_ascii_case("free") => {
                        (*v, Some(f64::NEG_INFINITY), Some(f64::INFINITY))
                    }
                    [lo, r1, v, r2, hi] => {
                        let ok = parse_relation(r1) == Some(Relation::Le)
                            && parse_relation(r2) == Some(Relation::Le);
                        if !ok {
                            return Err(err("two-sided bounds must read 'lo <= x <= hi'".into()));
                        }
                        (
                            *v,
                            Some(parse_num(lo, line_no)?),
                            Some(parse_num(hi, line_no)?),
                        )
                    }
                    [a, r, b] => {
                        let rel = parse_relation(r)
                            .ok_or_else(|| err(format!("bad bound relation '{r}'")))?;
                        // normalise to "var rel value"
                        let (v, rel, val) = if is_number_like(a) {
                            let flipped = match rel {
                                Relation::Le => Relation::Ge,
                                Relation::Ge => Relation::Le,
                                Relation::Eq => Relation::Eq,
                            };
                            (*b, flipped, parse_num(a, line_no)?)
                        } else {
                            (*a, rel, parse_num(b, line_no)?)
                        };
                        match rel {
                            Relation::Le => (v, None, Some(val)),
                            Relation::Ge => (v, Some(val), None),
                            Relation::Eq => (v, Some(val), Some(val)),
                        }
                    }
                    _ => return Err(err(format!("cannot read bound '{trimmed}'"))),
                };
                let entry = bounds.entry(var.to_string()).or_insert_with(|| {
                    bound_order.push(var.to_string());
                    (0.0, f64::INFINITY)
                });
                if let Some(lo) = lo {
                    entry.0 = lo;
                }
                if let Some(hi) = hi {
                    entry.1 = hi;
                }
            }
            Section::Binaries => {
                for tok in trimmed.split_whitespace() {
                    binaries.insert(tok.to_string());
                    mention_order.push(tok.to_string());
                }
            }
        }
    }
    if section != Section::End {
        return Err(LpError::Parse {
            line: text.lines().count(),
            message: "missing End".into(),
        });
    }

    let mut model = LpModel::new(name);
    for var in bound_order.iter().chain(&mention_order) {
        if model.var_id(var).is_some() {
            continue;
        }
        let (lo, hi) = bounds.get(var).copied().unwrap_or((0.0, f64::INFINITY));
        let kind = if binaries.contains(var) {
            VarKind::Binary
        } else {
            VarKind::Continuous
        };
        model.add_var(var.clone(), lo, hi, kind)?;
    }
    let resolve = |terms: Vec<(String, f64)>, model: &LpModel| -> Vec<(VarId, f64)> {
        terms
            .into_iter()
            .map(|(n, c)| (model.var_id(&n).expect("every mentioned name was added"), c))
            .collect()
    };
    let objective = resolve(objective, &model);
    model.set_objective(sense, objective)?;
    for row in rows {
        let terms = resolve(row.terms, &model);
        model.add_constraint(row.name, terms, row.relation, row.rhs)?;
    }
    Ok(model)
}
