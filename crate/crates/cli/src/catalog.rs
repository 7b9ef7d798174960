//! Built-in example problems.

use crate::problem::{Problem, ProblemError};

pub const SOURCES: [(&str, &str); 5] = [
    ("string", include_str!("../../../problems/string.ksym")),
    ("wave3", include_str!("../../../problems/wave3.ksym")),
    ("laplace3", include_str!("../../../problems/laplace3.ksym")),
    ("navier", include_str!("../../../problems/navier.ksym")),
    ("minimal_surface", include_str!("../../../problems/minimal_surface.ksym")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn get(name: &str) -> Option<Problem> {
    source(name).map(|s| Problem::from_text(s).expect("built-in problems parse"))
}

/// Every built-in problem.
pub fn catalog() -> Vec<Problem> {
    names().filter_map(get).collect()
}

/// Loads a problem from a file, falling back to the catalog entry named by
/// the argument or by its file stem (`examples/string.ksym` -> `string`).
pub fn resolve(arg: &str) -> Result<Problem, ProblemError> {
    let path = std::path::Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| ProblemError::new(format!("cannot read {arg}: {e}")))?;
        return Problem::from_text(&text).map_err(|e| ProblemError { line: e.line, message: format!("{arg}: {}", e.message) });
    }
    let stem = match path.extension() {
        Some(ext) if ext == "ksym" => path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg),
        _ => arg,
    };
    get(stem).ok_or_else(|| {
        ProblemError::new(format!("no problem file `{arg}` and no built-in entry `{stem}` (built-in: {})", names().collect::<Vec<_>>().join(", ")))
    })
}
