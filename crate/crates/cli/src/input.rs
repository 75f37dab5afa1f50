use std::path::Path;

use exact_uncertainty::schema::{parse_state, AnyState, SchemaError};
use exact_uncertainty::signal::SignalRecord;
use exact_uncertainty::Complex64;
use serde::Deserialize;

use crate::Failure;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Loads a JSON state document. Syntax and shape problems are input errors;
/// a well-formed document describing an invalid state is a computation error.
pub fn load_state(path: &Path) -> Result<AnyState, Failure> {
    let text = read(path)?;
    parse_state(&text).map_err(|e| match e {
        SchemaError::State(inner) => Failure::Compute(inner),
        other => Failure::Input(format!("{}: {other}", path.display())),
    })
}

#[derive(Debug, Deserialize)]
struct Sample {
    t: f64,
    re: f64,
    im: f64,
}

/// Reads a `t,re,im` CSV with a header row.
pub fn load_signal(path: &Path) -> Result<SignalRecord, Failure> {
    let text = read(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "re", "im"] {
        return Err(Failure::Input(format!(
            "{}: line 1: expected header t,re,im, found {}",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut amps = Vec::new();
    for row in reader.deserialize::<Sample>() {
        let s = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Failure::Input(format!("{}: line {line}: {e}", path.display()))
        })?;
        times.push(s.t);
        amps.push(Complex64::new(s.re, s.im));
    }
    Ok(SignalRecord::new(&times, amps)?)
}
