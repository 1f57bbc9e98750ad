//! Reader and writer for the discrete subset of the BIF text format.
//!
//! Supported blocks: `network`, `variable ... { type discrete [k] { ... }; }`
//! and `probability (child | parents) { ... }` with `table`, `default` and
//! explicit `(labels) p, q;` rows. `property` statements are skipped.
//! A `table` statement lists the full joint over `(child, parents...)` with
//! the last variable varying fastest, so the child varies slowest.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{BayesianNetwork, BnError, Cpt, Result, Variable};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |c: char, line: &mut usize, col: &mut usize| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(c, &mut line, &mut col);
            i += 1;
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            i += 2;
            col += 2;
            loop {
                if i + 1 >= chars.len() {
                    return Err(BnError::Syntax {
                        line: l0,
                        column: c0,
                        message: "unterminated comment".into(),
                    });
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    i += 2;
                    col += 2;
                    break;
                }
                advance(chars[i], &mut line, &mut col);
                i += 1;
            }
        } else if "{}()[]|,;".contains(c) {
            out.push(Token {
                tok: Tok::Punct(c),
                line,
                column: col,
            });
            i += 1;
            col += 1;
        } else if c == '"' {
            let (l0, c0) = (line, col);
            let mut s = String::new();
            i += 1;
            col += 1;
            while i < chars.len() && chars[i] != '"' {
                s.push(chars[i]);
                advance(chars[i], &mut line, &mut col);
                i += 1;
            }
            if i >= chars.len() {
                return Err(BnError::Syntax {
                    line: l0,
                    column: c0,
                    message: "unterminated string".into(),
                });
            }
            i += 1;
            col += 1;
            out.push(Token {
                tok: Tok::Word(s),
                line: l0,
                column: c0,
            });
        } else {
            let (l0, c0) = (line, col);
            let mut s = String::new();
            while i < chars.len() && !chars[i].is_whitespace() && !"{}()[]|,;\"".contains(chars[i]) {
                if chars[i] == '/' && matches!(chars.get(i + 1), Some('/') | Some('*')) {
                    break;
                }
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token {
                tok: Tok::Word(s),
                line: l0,
                column: c0,
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, column) = self
            .toks
            .get(self.pos)
            .map(|t| (t.line, t.column))
            .unwrap_or(self.eof);
        Err(BnError::Syntax {
            line,
            column,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn word(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            Some(Tok::Punct(c)) => {
                let c = *c;
                self.err(format!("expected {what}, found `{c}`"))
            }
            None => self.err(format!("expected {what}, found end of input")),
        }
    }

    fn punct(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(Tok::Punct(p)) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.err(format!("expected `{c}`, found `{w}`"))
            }
            Some(Tok::Punct(p)) => {
                let p = *p;
                self.err(format!("expected `{c}`, found `{p}`"))
            }
            None => self.err(format!("expected `{c}`, found end of input")),
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn skip_statement(&mut self) -> Result<()> {
        while let Some(t) = self.peek() {
            let end = *t == Tok::Punct(';');
            self.pos += 1;
            if end {
                return Ok(());
            }
        }
        self.err("expected `;`")
    }

    /// Numbers until `;`, commas optional.
    fn numbers(&mut self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Punct(';')) => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some(Tok::Punct(',')) => self.pos += 1,
                Some(Tok::Word(w)) => {
                    let v: f64 = match w.parse() {
                        Ok(v) => v,
                        Err(_) => return self.err(format!("expected a probability, found `{w}`")),
                    };
                    out.push(v);
                    self.pos += 1;
                }
                _ => return self.err("expected a probability or `;`"),
            }
        }
    }

    fn word_list(&mut self, close: char) -> Result<Vec<String>> {
        let mut out = Vec::new();
        loop {
            if self.eat_punct(close) {
                return Ok(out);
            }
            if !out.is_empty() {
                self.eat_punct(',');
            }
            out.push(self.word("a name")?);
        }
    }
}

struct RawCpt {
    child: String,
    parents: Vec<String>,
    at: (usize, usize),
    table: Option<Vec<f64>>,
    default: Option<Vec<f64>>,
    rows: Vec<(Vec<String>, Vec<f64>, (usize, usize))>,
}

/// Parses BIF text into a validated network.
pub fn parse_bif(text: &str) -> Result<BayesianNetwork> {
    let toks = tokenize(text)?;
    let eof = toks.last().map(|t| (t.line, t.column + 1)).unwrap_or((1, 1));
    let mut p = Parser { toks, pos: 0, eof };
    let mut name = String::from("network");
    let mut variables: Vec<Variable> = Vec::new();
    let mut raw: Vec<RawCpt> = Vec::new();
    while let Some(tok) = p.peek().cloned() {
        let Tok::Word(kw) = tok else {
            return p.err("expected `network`, `variable` or `probability`");
        };
        match kw.as_str() {
            "network" => {
                p.pos += 1;
                name = p.word("a network name")?;
                p.punct('{')?;
                while !p.eat_punct('}') {
                    if p.peek().is_none() {
                        return p.err("unterminated network block");
                    }
                    p.skip_statement()?;
                }
            }
            "variable" => {
                p.pos += 1;
                let vname = p.word("a variable name")?;
                p.punct('{')?;
                let mut values = None;
                while !p.eat_punct('}') {
                    match p.peek() {
                        Some(Tok::Word(w)) if w == "type" => {
                            p.pos += 1;
                            let kind = p.word("a variable type")?;
                            if kind != "discrete" {
                                return Err(BnError::Unsupported(format!(
                                    "variable `{vname}` has type `{kind}`; only discrete variables are supported"
                                )));
                            }
                            p.punct('[')?;
                            let k = p.word("a cardinality")?;
                            let k: usize = match k.parse() {
                                Ok(k) => k,
                                Err(_) => return p.err(format!("invalid cardinality `{k}`")),
                            };
                            p.punct(']')?;
                            p.punct('{')?;
                            let vals = p.word_list('}')?;
                            if vals.len() != k {
                                return p.err(format!(
                                    "variable `{vname}` declares {k} values but lists {}",
                                    vals.len()
                                ));
                            }
                            p.punct(';')?;
                            values = Some(vals);
                        }
                        Some(Tok::Word(w)) if w == "property" => p.skip_statement()?,
                        None => return p.err("unterminated variable block"),
                        _ => return p.err("expected `type` or `property`"),
                    }
                }
                let Some(values) = values else {
                    return p.err(format!("variable `{vname}` has no type declaration"));
                };
                variables.push(Variable { name: vname, values });
            }
            "probability" => {
                let at = {
                    let t = &p.toks[p.pos];
                    (t.line, t.column)
                };
                p.pos += 1;
                p.punct('(')?;
                let child = p.word("a variable name")?;
                let mut parents = Vec::new();
                if p.eat_punct('|') {
                    parents = p.word_list(')')?;
                } else {
                    p.punct(')')?;
                }
                p.punct('{')?;
                let mut cpt = RawCpt {
                    child,
                    parents,
                    at,
                    table: None,
                    default: None,
                    rows: Vec::new(),
                };
                while !p.eat_punct('}') {
                    match p.peek().cloned() {
                        Some(Tok::Word(w)) if w == "table" => {
                            p.pos += 1;
                            cpt.table = Some(p.numbers()?);
                        }
                        Some(Tok::Word(w)) if w == "default" => {
                            p.pos += 1;
                            cpt.default = Some(p.numbers()?);
                        }
                        Some(Tok::Word(w)) if w == "property" => p.skip_statement()?,
                        Some(Tok::Punct('(')) => {
                            let t = &p.toks[p.pos];
                            let row_at = (t.line, t.column);
                            p.pos += 1;
                            let labels = p.word_list(')')?;
                            let probs = p.numbers()?;
                            cpt.rows.push((labels, probs, row_at));
                        }
                        None => return p.err("unterminated probability block"),
                        _ => return p.err("expected `table`, `default`, `property` or a row"),
                    }
                }
                raw.push(cpt);
            }
            other => return p.err(format!("unexpected `{other}`")),
        }
    }
    build(name, variables, raw)
}

fn build(name: String, variables: Vec<Variable>, raw: Vec<RawCpt>) -> Result<BayesianNetwork> {
    let index: HashMap<&str, usize> = variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let lookup = |n: &str| {
        index
            .get(n)
            .copied()
            .ok_or_else(|| BnError::UnknownVariable(n.to_string()))
    };
    let mut cpts = Vec::with_capacity(raw.len());
    for rc in raw {
        let child = lookup(&rc.child)?;
        let parents = rc
            .parents
            .iter()
            .map(|p| lookup(p))
            .collect::<Result<Vec<_>>>()?;
        let card = variables[child].values.len();
        let nrows: usize = parents.iter().map(|&p| variables[p].values.len()).product();
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; nrows];
        if let Some(table) = &rc.table {
            if table.len() != card * nrows {
                return Err(BnError::RowLength {
                    variable: rc.child.clone(),
                    expected: card * nrows,
                    found: table.len(),
                });
            }
            for (r, slot) in rows.iter_mut().enumerate() {
                *slot = Some((0..card).map(|v| table[v * nrows + r]).collect());
            }
        }
        for (labels, probs, at) in &rc.rows {
            if labels.len() != parents.len() {
                return Err(BnError::Syntax {
                    line: at.0,
                    column: at.1,
                    message: format!(
                        "row of `{}` names {} parent values, expected {}",
                        rc.child,
                        labels.len(),
                        parents.len()
                    ),
                });
            }
            if probs.len() != card {
                return Err(BnError::RowLength {
                    variable: rc.child.clone(),
                    expected: card,
                    found: probs.len(),
                });
            }
            let mut r = 0;
            for (label, &par) in labels.iter().zip(&parents) {
                let v = variables[par]
                    .value_index(label)
                    .ok_or_else(|| BnError::UnknownValue {
                        variable: variables[par].name.clone(),
                        value: label.clone(),
                    })?;
                r = r * variables[par].values.len() + v;
            }
            rows[r] = Some(probs.clone());
        }
        if let Some(def) = &rc.default {
            if def.len() != card {
                return Err(BnError::RowLength {
                    variable: rc.child.clone(),
                    expected: card,
                    found: def.len(),
                });
            }
            for slot in rows.iter_mut().filter(|s| s.is_none()) {
                *slot = Some(def.clone());
            }
        }
        let mut dense = Vec::with_capacity(nrows);
        for (r, row) in rows.into_iter().enumerate() {
            match row {
                Some(row) => dense.push(row),
                None => {
                    return Err(BnError::Syntax {
                        line: rc.at.0,
                        column: rc.at.1,
                        message: format!("CPT of `{}` lacks row {r}", rc.child),
                    })
                }
            }
        }
        cpts.push(Cpt::dense(child, parents, dense));
    }
    BayesianNetwork::new(name, variables, cpts)
}

pub fn read_bif(path: impl AsRef<Path>) -> std::result::Result<BayesianNetwork, crate::Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    Ok(parse_bif(&text)?)
}

/// Writes a network as BIF. Probabilities use the shortest representation
/// that round-trips exactly. Deterministic CPTs are written as 0/1 rows.
pub fn to_bif(bn: &BayesianNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "network {} {{\n}}", bif_name(bn.name()));
    for var in bn.variables() {
        let _ = writeln!(
            out,
            "variable {} {{\n  type discrete [ {} ] {{ {} }};\n}}",
            bif_name(&var.name),
            var.values.len(),
            var.values.iter().map(|v| bif_name(v)).collect::<Vec<_>>().join(", ")
        );
    }
    for v in 0..bn.num_vars() {
        let parents = bn.parents(v);
        let name = bif_name(&bn.variable(v).name);
        let card = bn.cardinality(v);
        let fmt_row = |r: usize| {
            (0..card)
                .map(|x| format!("{}", bn.prob(v, x, r)))
                .collect::<Vec<_>>()
                .join(", ")
        };
        if parents.is_empty() {
            let _ = writeln!(out, "probability ( {name} ) {{\n  table {};\n}}", fmt_row(0));
            continue;
        }
        let plist: Vec<String> = parents.iter().map(|&p| bif_name(&bn.variable(p).name)).collect();
        let _ = writeln!(out, "probability ( {name} | {} ) {{", plist.join(", "));
        for r in 0..bn.num_rows(v) {
            let labels: Vec<String> = bn
                .row_values(v, r)
                .iter()
                .zip(parents)
                .map(|(&x, &p)| bif_name(&bn.variable(p).values[x]))
                .collect();
            let _ = writeln!(out, "  ({}) {};", labels.join(", "), fmt_row(r));
        }
        out.push_str("}\n");
    }
    out
}

fn bif_name(s: &str) -> String {
    if s.is_empty() || s.chars().any(|c| c.is_whitespace() || "{}()[]|,;\"".contains(c)) {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPRINKLER: &str = r#"
// a comment
network sprinkler {
  property "source" made up;
}
variable Rain {
  type discrete [ 2 ] { no, yes };
}
variable Sprinkler {
  type discrete [ 2 ] { off, on };
  property position = (1, 2);
}
variable Grass {
  type discrete [ 2 ] { dry, wet };
}
probability ( Rain ) {
  table 0.8, 0.2;
}
probability ( Sprinkler | Rain ) {
  (yes) 0.99, 0.01;
  (no) 0.6, 0.4;
}
probability ( Grass | Rain, Sprinkler ) {
  (no, off) 1.0, 0.0;
  default 0.1, 0.9;
}
"#;

    #[test]
    fn parses_rows_by_label() {
        let bn = parse_bif(SPRINKLER).unwrap();
        assert_eq!(bn.name(), "sprinkler");
        let s = bn.var_id("Sprinkler").unwrap();
        assert_eq!(bn.cpt(s).rows().unwrap(), &[vec![0.6, 0.4], vec![0.99, 0.01]]);
        let g = bn.var_id("Grass").unwrap();
        assert_eq!(bn.cpt(g).rows().unwrap()[0], vec![1.0, 0.0]);
        assert_eq!(bn.cpt(g).rows().unwrap()[3], vec![0.1, 0.9]);
    }

    #[test]
    fn table_lists_child_slowest() {
        let text = "variable A { type discrete [2] { a0, a1 }; }
variable B { type discrete [2] { b0, b1 }; }
probability (A) { table 0.5 0.5; }
probability (B | A) { table 0.1 0.7 0.9 0.3; }";
        let bn = parse_bif(text).unwrap();
        assert_eq!(bn.cpt(1).rows().unwrap(), &[vec![0.1, 0.9], vec![0.7, 0.3]]);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let text = "variable A {\n  type discrete [2] { a0, a1 }\n}";
        match parse_bif(text) {
            Err(BnError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_continuous_and_bad_rows() {
        let cont = "variable A { type continuous; }";
        assert!(matches!(parse_bif(cont), Err(BnError::Unsupported(_))));
        let short = "variable A { type discrete [3] { x, y, z }; }\nprobability (A) { table 0.5 0.5; }";
        assert!(matches!(parse_bif(short), Err(BnError::RowLength { expected: 3, found: 2, .. })));
        let unknown = "variable A { type discrete [2] { x, y }; }\nprobability (B) { table 0.5 0.5; }";
        assert!(matches!(parse_bif(unknown), Err(BnError::UnknownVariable(_))));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let bn = parse_bif(SPRINKLER).unwrap();
        let again = parse_bif(&to_bif(&bn)).unwrap();
        assert_eq!(again.variables(), bn.variables());
        assert_eq!(again.parameters(), bn.parameters());
        for v in 0..bn.num_vars() {
            assert_eq!(again.parents(v), bn.parents(v));
        }
    }
}
