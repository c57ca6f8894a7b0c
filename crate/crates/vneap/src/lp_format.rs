//! CPLEX LP text export and import, plus `name = value` solution files.
//!
//! Numbers are written in shortest round-trip form, so `write_lp` followed
//! by `parse_lp` reproduces names, coefficients, senses, bounds, binary
//! markers and the objective offset exactly. The objective lists every
//! variable (zero coefficients included) to pin the variable order; zero
//! objective terms are dropped again on import.

use std::fmt::Write as _;

use thiserror::Error;
use vneap_core::{LinearProgram, Sense};

#[derive(Debug, Error, PartialEq)]
pub enum LpFormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown variable {name}")]
    UnknownVariable { line: usize, name: String },
    #[error("line {line}: duplicate value for {name}")]
    DuplicateValue { line: usize, name: String },
}

fn parse_error(line: usize, message: impl Into<String>) -> LpFormatError {
    LpFormatError::Parse { line, message: message.into() }
}

fn number(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

/// Appends `+ c name` / `- c name` terms, wrapping long lines.
fn terms(out: &mut String, items: impl Iterator<Item = (f64, String)>) {
    let mut width = 0;
    for (c, name) in items {
        let sign = if c.is_sign_negative() { '-' } else { '+' };
        let term = format!(" {sign} {} {name}", number(c.abs()));
        if width + term.len() > 240 {
            out.push_str("\n ");
            width = 0;
        }
        width += term.len();
        out.push_str(&term);
    }
}

pub fn write_lp(lp: &LinearProgram) -> String {
    let names: Vec<&str> = lp.variables.iter().map(|v| v.name.as_str()).collect();
    let mut dense = vec![0.0; lp.variable_count()];
    for &(j, c) in &lp.objective {
        dense[j] += c;
    }
    let mut out = String::from("\\ written by vneap\nMinimize\n obj:");
    terms(&mut out, dense.iter().enumerate().map(|(j, &c)| (c, names[j].to_string())));
    if lp.objective_offset != 0.0 || lp.variables.is_empty() {
        let c = lp.objective_offset;
        let _ = write!(out, " {} {}", if c.is_sign_negative() { '-' } else { '+' }, number(c.abs()));
    }
    out.push_str("\nSubject To\n");
    for row in &lp.constraints {
        let _ = write!(out, " {}:", row.name);
        if row.coeffs.is_empty() {
            out.push_str(" 0.0");
        }
        terms(&mut out, row.coeffs.iter().map(|&(j, c)| (c, names[j].to_string())));
        let rel = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {}", number(row.rhs));
    }
    out.push_str("Bounds\n");
    for v in &lp.variables {
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", number(v.lower), v.name, number(v.upper));
        }
    }
    let binaries: Vec<&str> = lp.variables.iter().filter(|v| v.binary).map(|v| v.name.as_str()).collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(16) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Num(f64),
    Plus,
    Minus,
    Colon,
    Rel(Sense),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Section {
    Preamble,
    Objective { maximize: bool },
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn section_header(line: &str) -> Option<(Section, &str)> {
    let lower = line.to_ascii_lowercase();
    let table: [(&str, Section); 17] = [
        ("subject to", Section::Constraints),
        ("such that", Section::Constraints),
        ("s.t.", Section::Constraints),
        ("st", Section::Constraints),
        ("minimize", Section::Objective { maximize: false }),
        ("minimise", Section::Objective { maximize: false }),
        ("minimum", Section::Objective { maximize: false }),
        ("min", Section::Objective { maximize: false }),
        ("maximize", Section::Objective { maximize: true }),
        ("maximise", Section::Objective { maximize: true }),
        ("maximum", Section::Objective { maximize: true }),
        ("max", Section::Objective { maximize: true }),
        ("bounds", Section::Bounds),
        ("bound", Section::Bounds),
        ("binaries", Section::Binaries),
        ("binary", Section::Binaries),
        ("end", Section::End),
    ];
    for (key, section) in table {
        if let Some(rest) = lower.strip_prefix(key) {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                return Some((section, line[key.len()..].trim()));
            }
        }
    }
    None
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || "!\"#$%&()/,.;?@_`'{}|~[]^".contains(c)
}

fn lex(text: &str, line: usize, out: &mut Vec<(usize, Tok)>) -> Result<(), LpFormatError> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '+' => {
                i += 1;
                Tok::Plus
            }
            '-' => {
                i += 1;
                Tok::Minus
            }
            ':' => {
                i += 1;
                Tok::Colon
            }
            '<' | '>' | '=' => {
                let mut s = String::from(c);
                i += 1;
                if i < chars.len() && matches!(chars[i], '<' | '>' | '=') {
                    s.push(chars[i]);
                    i += 1;
                }
                match s.as_str() {
                    "<" | "<=" | "=<" => Tok::Rel(Sense::Le),
                    ">" | ">=" | "=>" => Tok::Rel(Sense::Ge),
                    "=" => Tok::Rel(Sense::Eq),
                    _ => return Err(parse_error(line, format!("bad relation {s:?}"))),
                }
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && matches!(chars[i], 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j], '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                Tok::Num(s.parse().map_err(|_| parse_error(line, format!("bad number {s:?}")))?)
            }
            c if is_name_char(c) => {
                let start = i;
                while i < chars.len() && is_name_char(chars[i]) {
                    i += 1;
                }
                Tok::Word(chars[start..i].iter().collect())
            }
            other => return Err(parse_error(line, format!("unexpected character {other:?}"))),
        };
        out.push((line, tok));
    }
    Ok(())
}

fn infinity_word(w: &str) -> Option<f64> {
    matches!(w.to_ascii_lowercase().as_str(), "inf" | "infinity").then_some(f64::INFINITY)
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    last_line: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn peek2(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.1)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).map_or(self.last_line, |t| t.0)
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.1);
        self.pos += 1;
        t
    }

    fn label(&mut self) -> Option<String> {
        if let (Some(Tok::Word(w)), Some(Tok::Colon)) = (self.peek(), self.peek2()) {
            self.pos += 2;
            return Some(w.clone());
        }
        None
    }

    /// Linear expression up to a relation or the end. Returns the variable
    /// terms and the summed constant.
    fn expression(&mut self) -> Result<(Vec<(String, f64)>, f64), LpFormatError> {
        let mut terms = Vec::new();
        let mut constant = 0.0;
        loop {
            let mut sign = 1.0;
            let mut any = false;
            while let Some(t @ (Tok::Plus | Tok::Minus)) = self.peek() {
                if *t == Tok::Minus {
                    sign = -sign;
                }
                any = true;
                self.pos += 1;
            }
            match (self.peek(), self.peek2()) {
                (Some(Tok::Num(c)), Some(Tok::Word(w)))
                    if !matches!(self.toks.get(self.pos + 2), Some((_, Tok::Colon))) =>
                {
                    let c = sign * c;
                    match infinity_word(w) {
                        Some(_) => return Err(parse_error(self.line(), "infinite coefficient")),
                        None => terms.push((w.clone(), c)),
                    }
                    self.pos += 2;
                }
                (Some(Tok::Num(c)), _) => {
                    constant += sign * c;
                    self.pos += 1;
                }
                (Some(Tok::Word(w)), next) if !matches!(next, Some(Tok::Colon)) => {
                    terms.push((w.clone(), sign));
                    self.pos += 1;
                }
                _ => {
                    if any {
                        return Err(parse_error(self.line(), "dangling sign"));
                    }
                    return Ok((terms, constant));
                }
            }
        }
    }

    fn signed_value(&mut self) -> Result<f64, LpFormatError> {
        let line = self.line();
        let mut sign = 1.0;
        while let Some(t @ (Tok::Plus | Tok::Minus)) = self.peek() {
            if *t == Tok::Minus {
                sign = -sign;
            }
            self.pos += 1;
        }
        match self.next() {
            Some(Tok::Num(x)) => Ok(sign * x),
            Some(Tok::Word(w)) => infinity_word(w)
                .map(|x| sign * x)
                .ok_or_else(|| parse_error(line, format!("expected a number, found {w:?}"))),
            _ => Err(parse_error(line, "expected a number")),
        }
    }
}

#[derive(Default)]
struct Builder {
    lp: LinearProgram,
    index: std::collections::HashMap<String, usize>,
}

impl Builder {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self.lp.add_variable(name, 0.0, f64::INFINITY, false);
        self.index.insert(name.to_string(), j);
        j
    }
}

pub fn parse_lp(text: &str) -> Result<LinearProgram, LpFormatError> {
    let mut section = Section::Preamble;
    let mut objective = Vec::new();
    let mut rows = Vec::new();
    let mut bounds: Vec<(usize, Vec<(usize, Tok)>)> = Vec::new();
    let mut binaries = Vec::new();
    let mut maximize = false;
    let mut last_line = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        last_line = line;
        let content = raw.split('\\').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let body = match section_header(content) {
            Some((s, rest)) => {
                if section == Section::End {
                    return Err(parse_error(line, "content after End"));
                }
                if let Section::Objective { maximize: m } = s {
                    maximize = m;
                }
                section = s;
                rest
            }
            None => content,
        };
        if body.is_empty() {
            continue;
        }
        match section {
            Section::Preamble => return Err(parse_error(line, "expected an objective section")),
            Section::End => return Err(parse_error(line, "content after End")),
            Section::Objective { .. } => lex(body, line, &mut objective)?,
            Section::Constraints => lex(body, line, &mut rows)?,
            Section::Bounds => {
                let mut toks = Vec::new();
                lex(body, line, &mut toks)?;
                bounds.push((line, toks));
            }
            Section::Binaries => {
                for name in body.split_whitespace() {
                    binaries.push((line, name.to_string()));
                }
            }
        }
    }
    if section != Section::End {
        return Err(parse_error(last_line, "missing End"));
    }

    let mut b = Builder::default();
    let mut p = Parser { toks: &objective, pos: 0, last_line };
    p.label();
    let (terms, constant) = p.expression()?;
    if p.pos < objective.len() {
        return Err(parse_error(p.line(), "unexpected token in objective"));
    }
    let flip = if maximize { -1.0 } else { 1.0 };
    for (name, c) in terms {
        let j = b.var(&name);
        if c != 0.0 {
            b.lp.objective.push((j, flip * c));
        }
    }
    b.lp.objective_offset = flip * constant;

    let mut p = Parser { toks: &rows, pos: 0, last_line };
    while p.pos < rows.len() {
        let line = p.line();
        let name = p.label().unwrap_or_else(|| format!("c{}", b.lp.constraint_count() + 1));
        let (terms, constant) = p.expression()?;
        let sense = match p.next() {
            Some(Tok::Rel(s)) => *s,
            _ => return Err(parse_error(line, format!("constraint {name} has no relation"))),
        };
        let rhs = p.signed_value()? - constant;
        let coeffs = terms.into_iter().map(|(n, c)| (b.var(&n), c)).collect();
        b.lp.add_constraint(name, coeffs, sense, rhs);
    }

    for (line, toks) in bounds {
        apply_bound(&mut b, line, &toks)?;
    }
    for (line, name) in binaries {
        let j = *b.index.get(&name).ok_or(LpFormatError::UnknownVariable { line, name: name.clone() })?;
        let v = &mut b.lp.variables[j];
        v.binary = true;
        v.lower = v.lower.max(0.0);
        v.upper = v.upper.min(1.0);
    }
    Ok(b.lp)
}

fn apply_bound(b: &mut Builder, line: usize, toks: &[(usize, Tok)]) -> Result<(), LpFormatError> {
    if let [(_, Tok::Word(name)), (_, Tok::Word(kw))] = toks {
        if kw.eq_ignore_ascii_case("free") {
            let j = b.var(name);
            b.lp.variables[j].lower = f64::NEG_INFINITY;
            b.lp.variables[j].upper = f64::INFINITY;
            return Ok(());
        }
    }
    // Split into operands around relations: value rel name [rel value].
    let mut parts: Vec<Vec<(usize, Tok)>> = vec![Vec::new()];
    let mut rels = Vec::new();
    for t in toks {
        if let Tok::Rel(s) = t.1 {
            rels.push(s);
            parts.push(Vec::new());
        } else {
            parts.last_mut().expect("nonempty").push(t.clone());
        }
    }
    let operand = |part: &[(usize, Tok)]| -> Result<Result<f64, String>, LpFormatError> {
        match part {
            [(_, Tok::Word(w))] if infinity_word(w).is_none() => Ok(Err(w.clone())),
            _ => {
                let mut p = Parser { toks: part, pos: 0, last_line: line };
                let x = p.signed_value()?;
                if p.pos != part.len() {
                    return Err(parse_error(line, "malformed bound"));
                }
                Ok(Ok(x))
            }
        }
    };
    let ops: Vec<Result<f64, String>> = parts.iter().map(|p| operand(p)).collect::<Result<_, _>>()?;
    let mut set = |name: &str, sense: Sense, value: f64| {
        let j = b.var(name);
        let v = &mut b.lp.variables[j];
        match sense {
            Sense::Le => v.upper = value,
            Sense::Ge => v.lower = value,
            Sense::Eq => {
                v.lower = value;
                v.upper = value;
            }
        }
    };
    let flip = |s: Sense| match s {
        Sense::Le => Sense::Ge,
        Sense::Ge => Sense::Le,
        Sense::Eq => Sense::Eq,
    };
    match (ops.as_slice(), rels.as_slice()) {
        ([Err(name), Ok(v)], [s]) => set(name, *s, *v),
        ([Ok(v), Err(name)], [s]) => set(name, flip(*s), *v),
        ([Ok(lo), Err(name), Ok(hi)], [s1, s2]) => {
            set(name, flip(*s1), *lo);
            set(name, *s2, *hi);
        }
        _ => return Err(parse_error(line, "malformed bound")),
    }
    Ok(())
}

pub fn write_solution(lp: &LinearProgram, values: &[f64]) -> String {
    let mut out = String::new();
    for (v, x) in lp.variables.iter().zip(values) {
        let _ = writeln!(out, "{} = {}", v.name, number(*x));
    }
    out
}

/// Reads `name = value` lines into a value vector in model order. `#`
/// starts a comment; variables without a line are zero.
pub fn parse_solution(text: &str, lp: &LinearProgram) -> Result<Vec<f64>, LpFormatError> {
    let index: std::collections::HashMap<&str, usize> =
        lp.variables.iter().enumerate().map(|(j, v)| (v.name.as_str(), j)).collect();
    let mut values = vec![0.0; lp.variable_count()];
    let mut seen = vec![false; lp.variable_count()];
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (name, value) = content.split_once('=').ok_or_else(|| parse_error(line, "expected `name = value`"))?;
        let name = name.trim();
        let value: f64 = match value.trim() {
            "+inf" | "inf" => f64::INFINITY,
            "-inf" => f64::NEG_INFINITY,
            s => s.parse().map_err(|_| parse_error(line, format!("bad number {s:?}")))?,
        };
        let &j = index.get(name).ok_or_else(|| LpFormatError::UnknownVariable { line, name: name.to_string() })?;
        if std::mem::replace(&mut seen[j], true) {
            return Err(LpFormatError::DuplicateValue { line, name: name.to_string() });
        }
        values[j] = value;
    }
    Ok(values)
}
