//! Problem files: a line-oriented key/value format with bracketed sections.
//!
//! ```text
//! # comment
//! name: string
//! k: 2
//! n: 1
//! params: sigma=1, tau=4
//! lagrangian: (sigma*v1_1^2 - tau*v1_2^2)/2
//!
//! [sopde free]
//! default: 0
//!
//! [field dq]
//! q1: 1
//!
//! [current dq]
//! f1: sigma*v1_1
//! f2: -tau*v1_2
//!
//! [solution wave]
//! q1: sin(t2 + 2*t1)
//! extent: 0:1
//! h: 0.02
//!
//! [checks]
//! noether --field dq --current dq
//! generate-field --current other => 1
//! ```
//!
//! The full grammar is in `docs/formats.md`.

use std::collections::BTreeMap;
use std::fmt;

use ksym_core::expr::{parse, Assignment, Expr, Symbol, SymbolTable};
use ksym_core::geometry::{complete_lift, Chart, VectorField};
use ksym_core::lagrangian::Lagrangian;
use ksym_core::sopde::Sopde;
use ksym_core::symmetry::CurrentTuple;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ProblemError {
    pub line: Option<usize>,
    pub message: String,
}

impl ProblemError {
    fn at(line: usize, message: impl Into<String>) -> ProblemError {
        ProblemError { line: Some(line), message: message.into() }
    }

    pub fn new(message: impl Into<String>) -> ProblemError {
        ProblemError { line: None, message: message.into() }
    }
}

/// A value together with the line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub text: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SopdeSpec {
    /// Keyed by zero-based `(i, alpha, beta)`.
    pub coefficients: BTreeMap<(usize, usize, usize), Spanned>,
    pub default: Option<Spanned>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    /// Coordinate name (`q1`, `v1_2`) to component.
    pub components: Vec<(String, Spanned)>,
    /// Take the complete lift of the base components.
    pub complete: bool,
    /// Potentials `g1..gk` for the Marmo–Mukunda check.
    pub potentials: BTreeMap<usize, Spanned>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSpec {
    pub phi: BTreeMap<usize, Spanned>,
    pub extent: Option<Spanned>,
    pub h: Option<Spanned>,
    pub params: Option<Spanned>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckSpec {
    pub args: Vec<String>,
    pub expect: i32,
    pub line: usize,
}

/// The raw contents of a problem file, before any expression is parsed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProblemFile {
    pub name: Option<String>,
    pub description: Option<String>,
    pub k: Option<Spanned>,
    pub n: Option<Spanned>,
    pub params: Option<Spanned>,
    pub lagrangian: Option<Spanned>,
    pub sopdes: Vec<(String, SopdeSpec)>,
    pub fields: Vec<(String, FieldSpec)>,
    pub currents: Vec<(String, BTreeMap<usize, Spanned>)>,
    pub solutions: Vec<(String, SolutionSpec)>,
    pub checks: Vec<CheckSpec>,
}

enum Section {
    Top,
    Sopde,
    Field,
    Current,
    Solution,
    Checks,
}

fn indexed(key: &str, prefix: &str) -> Option<usize> {
    key.strip_prefix(prefix)?.parse::<usize>().ok().filter(|&i| i >= 1).map(|i| i - 1)
}

fn triple(key: &str) -> Option<(usize, usize, usize)> {
    let parts: Vec<_> = key.split(',').map(|p| p.trim().parse::<usize>().ok().filter(|&x| x >= 1)).collect();
    match parts.as_slice() {
        [Some(i), Some(a), Some(b)] => Some((i - 1, a - 1, b - 1)),
        _ => None,
    }
}

fn set(slot: &mut Option<Spanned>, key: &str, value: Spanned) -> Result<(), ProblemError> {
    if slot.is_some() {
        return Err(ProblemError::at(value.line, format!("duplicate key `{key}`")));
    }
    *slot = Some(value);
    Ok(())
}

fn insert<K: Ord>(map: &mut BTreeMap<K, Spanned>, key: K, name: &str, value: Spanned) -> Result<(), ProblemError> {
    let line = value.line;
    if map.insert(key, value).is_some() {
        return Err(ProblemError::at(line, format!("duplicate key `{name}`")));
    }
    Ok(())
}

fn check_line(text: &str, line: usize) -> Result<CheckSpec, ProblemError> {
    let (cmd, expect) = match text.split_once("=>") {
        Some((c, e)) => {
            let code = e.trim().parse::<i32>().map_err(|_| ProblemError::at(line, format!("bad expected exit code `{}`", e.trim())))?;
            (c, code)
        }
        None => (text, 0),
    };
    let args: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
    if args.is_empty() {
        return Err(ProblemError::at(line, "empty check"));
    }
    Ok(CheckSpec { args, expect, line })
}

/// Splits a problem file into its sections. Expressions are kept as text.
pub fn parse_problem(text: &str) -> Result<ProblemFile, ProblemError> {
    let mut file = ProblemFile::default();
    let mut section = Section::Top;
    let mut names: Vec<(String, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| ProblemError::at(line, "section header must end with `]`"))?;
            let mut words = header.split_whitespace();
            let kind = words.next().unwrap_or("");
            let name = words.next();
            if words.next().is_some() {
                return Err(ProblemError::at(line, "section header takes a kind and at most one name"));
            }
            section = match (kind, name) {
                ("checks", None) => Section::Checks,
                ("sopde" | "field" | "current" | "solution", Some(name)) => {
                    if names.iter().any(|(k, n)| k == kind && n == name) {
                        return Err(ProblemError::at(line, format!("duplicate {kind} `{name}`")));
                    }
                    names.push((kind.to_string(), name.to_string()));
                    let name = name.to_string();
                    match kind {
                        "sopde" => {
                            file.sopdes.push((name, SopdeSpec { coefficients: BTreeMap::new(), default: None }));
                            Section::Sopde
                        }
                        "field" => {
                            file.fields.push((name, FieldSpec { components: Vec::new(), complete: false, potentials: BTreeMap::new() }));
                            Section::Field
                        }
                        "current" => {
                            file.currents.push((name, BTreeMap::new()));
                            Section::Current
                        }
                        _ => {
                            file.solutions.push((name, SolutionSpec { phi: BTreeMap::new(), extent: None, h: None, params: None }));
                            Section::Solution
                        }
                    }
                }
                ("sopde" | "field" | "current" | "solution", None) => {
                    return Err(ProblemError::at(line, format!("[{kind}] section needs a name")));
                }
                _ => return Err(ProblemError::at(line, format!("unknown section `{header}`"))),
            };
            continue;
        }
        if let Section::Checks = section {
            file.checks.push(check_line(content, line)?);
            continue;
        }
        let (key, value) = content
            .split_once(':')
            .ok_or_else(|| ProblemError::at(line, "expected `key: value`"))?;
        let key = key.trim();
        let value = Spanned { text: value.trim().to_string(), line };
        if value.text.is_empty() {
            return Err(ProblemError::at(line, format!("empty value for `{key}`")));
        }
        let unknown = || ProblemError::at(line, format!("unknown key `{key}`"));
        match section {
            Section::Top => match key {
                "name" => {
                    if file.name.replace(value.text).is_some() {
                        return Err(ProblemError::at(line, "duplicate key `name`"));
                    }
                }
                "description" => {
                    if file.description.replace(value.text).is_some() {
                        return Err(ProblemError::at(line, "duplicate key `description`"));
                    }
                }
                "k" => set(&mut file.k, key, value)?,
                "n" => set(&mut file.n, key, value)?,
                "params" => set(&mut file.params, key, value)?,
                "lagrangian" => set(&mut file.lagrangian, key, value)?,
                _ => return Err(unknown()),
            },
            Section::Sopde => {
                let spec = &mut file.sopdes.last_mut().expect("open section").1;
                if key == "default" {
                    set(&mut spec.default, key, value)?;
                } else {
                    let t = triple(key).ok_or_else(unknown)?;
                    insert(&mut spec.coefficients, t, key, value)?;
                }
            }
            Section::Field => {
                let spec = &mut file.fields.last_mut().expect("open section").1;
                if key == "lift" {
                    match value.text.as_str() {
                        "complete" => spec.complete = true,
                        "none" => spec.complete = false,
                        other => return Err(ProblemError::at(line, format!("unknown lift `{other}`"))),
                    }
                } else if let Some(a) = indexed(key, "g") {
                    insert(&mut spec.potentials, a, key, value)?;
                } else {
                    if spec.components.iter().any(|(k, _)| k == key) {
                        return Err(ProblemError::at(line, format!("duplicate key `{key}`")));
                    }
                    spec.components.push((key.to_string(), value));
                }
            }
            Section::Current => {
                let spec = &mut file.currents.last_mut().expect("open section").1;
                let a = indexed(key, "f").ok_or_else(unknown)?;
                insert(spec, a, key, value)?;
            }
            Section::Solution => {
                let spec = &mut file.solutions.last_mut().expect("open section").1;
                match key {
                    "extent" => set(&mut spec.extent, key, value)?,
                    "h" => set(&mut spec.h, key, value)?,
                    "params" => set(&mut spec.params, key, value)?,
                    _ => {
                        let i = indexed(key, "q").ok_or_else(unknown)?;
                        insert(&mut spec.phi, i, key, value)?;
                    }
                }
            }
            Section::Checks => unreachable!(),
        }
    }
    Ok(file)
}

/// `name` or `name=value`, comma separated.
pub fn parse_params(text: &str, line: usize) -> Result<Vec<(String, Option<f64>)>, ProblemError> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            match item.split_once('=') {
                Some((name, value)) => {
                    let v = value
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| ProblemError::at(line, format!("bad value for parameter `{}`", name.trim())))?;
                    Ok((name.trim().to_string(), Some(v)))
                }
                None if item.is_empty() => Err(ProblemError::at(line, "empty parameter name")),
                None => Ok((item.to_string(), None)),
            }
        })
        .collect()
}

/// `a:b` intervals, comma separated.
pub fn parse_extents(text: &str, line: usize) -> Result<Vec<(f64, f64)>, ProblemError> {
    text.split(',')
        .map(|item| {
            let bad = || ProblemError::at(line, format!("bad extent `{}`, expected `a:b`", item.trim()));
            let (a, b) = item.split_once(':').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

/// Repeats a single entry `k` times; otherwise requires exactly `k` entries.
pub fn per_direction<T: Clone>(items: Vec<T>, k: usize, what: &str) -> Result<Vec<T>, ProblemError> {
    match items.len() {
        1 => Ok(vec![items[0].clone(); k]),
        m if m == k => Ok(items),
        m => Err(ProblemError::new(format!("expected 1 or {k} {what} entries, found {m}"))),
    }
}

#[derive(Debug, Clone)]
pub struct Field {
    pub field: VectorField,
    pub potentials: Vec<Expr>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub phi: Vec<Expr>,
    pub extents: Vec<(f64, f64)>,
    pub h: Vec<f64>,
    pub params: Assignment,
}

/// A problem file with every expression parsed against its chart.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub description: Option<String>,
    pub source: String,
    pub lagrangian: Lagrangian,
    /// Parameter values given in the header.
    pub params: Vec<(String, Option<f64>)>,
    pub sopdes: Vec<(String, Sopde)>,
    pub fields: Vec<(String, Field)>,
    pub currents: Vec<(String, CurrentTuple)>,
    pub solutions: Vec<(String, Solution)>,
    pub checks: Vec<CheckSpec>,
}

fn required<'a>(slot: &'a Option<Spanned>, key: &str) -> Result<&'a Spanned, ProblemError> {
    slot.as_ref().ok_or_else(|| ProblemError::new(format!("missing required key `{key}`")))
}

fn dimension(s: &Spanned, key: &str) -> Result<usize, ProblemError> {
    s.text
        .parse::<usize>()
        .ok()
        .filter(|&d| d >= 1)
        .ok_or_else(|| ProblemError::at(s.line, format!("`{key}` must be a positive integer")))
}

fn expr_in(table: &SymbolTable, s: &Spanned) -> Result<Expr, ProblemError> {
    parse(&s.text, table).map(|e| e.canon()).map_err(|e| ProblemError::at(s.line, format!("{e}")))
}

/// Builds a vector field from `coordinate = component` pairs.
pub fn build_field(chart: &Chart, components: &[(String, Expr)], complete: bool) -> Result<VectorField, ProblemError> {
    let mut x = VectorField::zero(chart);
    let table = chart.table();
    for (name, value) in components {
        match table.resolve(name) {
            Some(Symbol::Base(i)) => x.base[i] = value.clone(),
            Some(Symbol::Velocity { i, alpha }) if !complete => x.fiber[i][alpha] = value.clone(),
            Some(Symbol::Velocity { .. }) => {
                return Err(ProblemError::new(format!("`{name}` cannot be given for a complete lift")));
            }
            _ => return Err(ProblemError::new(format!("`{name}` is not a coordinate"))),
        }
    }
    if complete {
        x = complete_lift(&x).map_err(|e| ProblemError::new(e.to_string()))?;
    }
    Ok(x)
}

fn build_solution(chart: &Chart, header: &[(String, Option<f64>)], name: &str, spec: &SolutionSpec) -> Result<Solution, ProblemError> {
    let table = SymbolTable::new(chart.k(), chart.n(), chart.params().to_vec()).with_time();
    let mut phi = Vec::with_capacity(chart.n());
    for i in 0..chart.n() {
        let s = spec
            .phi
            .get(&i)
            .ok_or_else(|| ProblemError::new(format!("solution `{name}` is missing q{}", i + 1)))?;
        phi.push(expr_in(&table, s)?);
    }
    if let Some((&i, s)) = spec.phi.range(chart.n()..).next() {
        return Err(ProblemError::at(s.line, format!("q{} out of range for n = {}", i + 1, chart.n())));
    }
    let extents = match &spec.extent {
        Some(s) => per_direction(parse_extents(&s.text, s.line)?, chart.k(), "extent").map_err(|e| ProblemError::at(s.line, e.message))?,
        None => return Err(ProblemError::new(format!("solution `{name}` is missing `extent`"))),
    };
    let h = match &spec.h {
        Some(s) => {
            let hs = s
                .text
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| ProblemError::at(s.line, format!("bad step `{}`", x.trim()))))
                .collect::<Result<Vec<_>, _>>()?;
            per_direction(hs, chart.k(), "h").map_err(|e| ProblemError::at(s.line, e.message))?
        }
        None => return Err(ProblemError::new(format!("solution `{name}` is missing `h`"))),
    };
    let mut values: BTreeMap<String, Option<f64>> = header.iter().cloned().collect();
    if let Some(s) = &spec.params {
        for (p, v) in parse_params(&s.text, s.line)? {
            if !values.contains_key(&p) {
                return Err(ProblemError::at(s.line, format!("unknown parameter `{p}`")));
            }
            values.insert(p, v);
        }
    }
    let mut params = Assignment::new();
    for (p, v) in values {
        if let Some(v) = v {
            params.set(Symbol::param(&p), v);
        }
    }
    Ok(Solution { phi, extents, h, params })
}

impl Problem {
    pub fn from_text(text: &str) -> Result<Problem, ProblemError> {
        let file = parse_problem(text)?;
        Problem::from_file(file, text)
    }

    pub fn from_file(file: ProblemFile, source: &str) -> Result<Problem, ProblemError> {
        let k = dimension(required(&file.k, "k")?, "k")?;
        let n = dimension(required(&file.n, "n")?, "n")?;
        let params = match &file.params {
            Some(s) => parse_params(&s.text, s.line)?,
            None => Vec::new(),
        };
        let names: Vec<&str> = params.iter().map(|(p, _)| p.as_str()).collect();
        let chart = Chart::new(k, n, &names).map_err(|e| ProblemError::new(e.to_string()))?;
        let table = chart.table();
        let ls = required(&file.lagrangian, "lagrangian")?;
        let lagrangian = Lagrangian::new(chart.clone(), expr_in(&table, ls)?).map_err(|e| ProblemError::at(ls.line, e.to_string()))?;

        let mut sopdes = Vec::new();
        for (name, spec) in &file.sopdes {
            let mut coeffs = BTreeMap::new();
            for (&(i, a, b), s) in &spec.coefficients {
                if i >= n || a >= k || b >= k {
                    return Err(ProblemError::at(s.line, format!("coefficient index ({}, {}, {}) out of range", i + 1, a + 1, b + 1)));
                }
                coeffs.insert((i, a, b), expr_in(&table, s)?);
            }
            let mirrored: Vec<_> = coeffs.iter().map(|(&(i, a, b), e)| ((i, b, a), e.clone())).collect();
            for (key, e) in mirrored {
                coeffs.entry(key).or_insert(e);
            }
            if let Some(d) = &spec.default {
                let d = expr_in(&table, d)?;
                for i in 0..n {
                    for a in 0..k {
                        for b in 0..k {
                            coeffs.entry((i, a, b)).or_insert_with(|| d.clone());
                        }
                    }
                }
            }
            let xi = Sopde::new(&chart, &coeffs).map_err(|e| ProblemError::new(format!("sopde `{name}`: {e}")))?;
            sopdes.push((name.clone(), xi));
        }

        let mut fields = Vec::new();
        for (name, spec) in &file.fields {
            let comps = spec
                .components
                .iter()
                .map(|(key, s)| Ok((key.clone(), expr_in(&table, s)?)))
                .collect::<Result<Vec<_>, ProblemError>>()?;
            let field = build_field(&chart, &comps, spec.complete).map_err(|e| ProblemError::new(format!("field `{name}`: {}", e.message)))?;
            let mut potentials = vec![Expr::zero(); k];
            for (&a, s) in &spec.potentials {
                if a >= k {
                    return Err(ProblemError::at(s.line, format!("g{} out of range for k = {k}", a + 1)));
                }
                potentials[a] = expr_in(&table, s)?;
            }
            fields.push((name.clone(), Field { field, potentials }));
        }

        let mut currents = Vec::new();
        for (name, spec) in &file.currents {
            let mut f = Vec::with_capacity(k);
            for a in 0..k {
                let s = spec
                    .get(&a)
                    .ok_or_else(|| ProblemError::new(format!("current `{name}` is missing f{}", a + 1)))?;
                f.push(expr_in(&table, s)?);
            }
            if let Some((&a, s)) = spec.range(k..).next() {
                return Err(ProblemError::at(s.line, format!("f{} out of range for k = {k}", a + 1)));
            }
            currents.push((name.clone(), CurrentTuple(f)));
        }

        let solutions = file
            .solutions
            .iter()
            .map(|(name, spec)| Ok((name.clone(), build_solution(&chart, &params, name, spec)?)))
            .collect::<Result<Vec<_>, ProblemError>>()?;

        Ok(Problem {
            name: file.name.clone().unwrap_or_else(|| "problem".to_string()),
            description: file.description.clone(),
            source: source.to_string(),
            lagrangian,
            params,
            sopdes,
            fields,
            currents,
            solutions,
            checks: file.checks,
        })
    }

    pub fn chart(&self) -> &Chart {
        self.lagrangian.chart()
    }

    pub fn sopde(&self, name: &str) -> Result<&Sopde, ProblemError> {
        lookup(&self.sopdes, name, "sopde")
    }

    pub fn current(&self, name: &str) -> Result<&CurrentTuple, ProblemError> {
        lookup(&self.currents, name, "current")
    }

    pub fn solution(&self, name: &str) -> Result<&Solution, ProblemError> {
        lookup(&self.solutions, name, "solution")
    }

    /// A named field, or an inline one such as `q1=1; q2=q1` or
    /// `complete; q1=q1`.
    pub fn field(&self, spec: &str) -> Result<Field, ProblemError> {
        if let Some((_, f)) = self.fields.iter().find(|(n, _)| n == spec) {
            return Ok(f.clone());
        }
        if !spec.contains('=') {
            let known: Vec<_> = self.fields.iter().map(|(n, _)| n.as_str()).collect();
            return Err(ProblemError::new(format!("no field `{spec}` (known: {})", known.join(", "))));
        }
        let chart = self.chart();
        let table = chart.table();
        let mut complete = false;
        let mut comps = Vec::new();
        for item in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            if item == "complete" {
                complete = true;
                continue;
            }
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| ProblemError::new(format!("bad field component `{item}`, expected `coordinate=expression`")))?;
            let e = parse(value.trim(), &table).map(|e| e.canon()).map_err(|e| ProblemError::new(format!("{e}")))?;
            comps.push((name.trim().to_string(), e));
        }
        let field = build_field(chart, &comps, complete)?;
        Ok(Field { field, potentials: vec![Expr::zero(); chart.k()] })
    }

    /// The only sopde of the problem, when there is exactly one.
    pub fn sole_sopde(&self) -> Result<&str, ProblemError> {
        sole(&self.sopdes, "sopde")
    }

    pub fn sole_solution(&self) -> Result<&str, ProblemError> {
        sole(&self.solutions, "solution")
    }

    /// Header parameter values as an assignment.
    pub fn param_values(&self) -> Assignment {
        let mut a = Assignment::new();
        for (p, v) in &self.params {
            if let Some(v) = v {
                a.set(Symbol::param(p), *v);
            }
        }
        a
    }
}

fn lookup<'a, T>(items: &'a [(String, T)], name: &str, what: &str) -> Result<&'a T, ProblemError> {
    items.iter().find(|(n, _)| n == name).map(|(_, t)| t).ok_or_else(|| {
        let known: Vec<_> = items.iter().map(|(n, _)| n.as_str()).collect();
        ProblemError::new(format!("no {what} `{name}` (known: {})", if known.is_empty() { "none".to_string() } else { known.join(", ") }))
    })
}

fn sole<'a, T>(items: &'a [(String, T)], what: &str) -> Result<&'a str, ProblemError> {
    match items {
        [(name, _)] => Ok(name),
        [] => Err(ProblemError::new(format!("the problem defines no {what}"))),
        _ => Err(ProblemError::new(format!("the problem defines several of {what}; choose one with --{what}"))),
    }
}

impl fmt::Display for Spanned {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}
