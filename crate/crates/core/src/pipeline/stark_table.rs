//! Polarizability tables for lists of states.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::io::write_table_csv;
use super::PipelineError;
use crate::atomic::{effective_n, HalfInt, QuantumDefectTable, RydbergState};
use crate::stark::{level_scalar_tensor, polarizability, BasisWindow, ScalarTensor};

pub const STARK_HEADER: [&str; 10] = [
    "n",
    "l",
    "j",
    "mj",
    "n_star",
    "alpha_mhz_per_vcm2",
    "alpha0",
    "alpha2",
    "truncation_estimate",
    "level_shift_mhz_per_vcm2",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StarkRow {
    pub state: RydbergState,
    pub n_star: f64,
    pub alpha: f64,
    pub alpha0: f64,
    /// NaN for j = 1/2.
    pub alpha2: f64,
    pub truncation_estimate: f64,
}

/// Parses lines of `n l j mj`; `#` starts a comment, blank lines are skipped.
pub fn parse_state_list(text: &str) -> Result<Vec<RydbergState>, PipelineError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| PipelineError::Parse(format!("state list line {}: {what}: {raw:?}", i + 1));
        let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|c| !c.is_empty()).collect();
        if cols.len() != 4 {
            return Err(bad("expected `n l j mj`"));
        }
        let n: u32 = cols[0].parse().map_err(|_| bad("bad n"))?;
        let l: u32 = cols[1].parse().map_err(|_| bad("bad l"))?;
        let j = parse_half(cols[2]).ok_or_else(|| bad("bad j"))?;
        let mj = parse_half(cols[3]).ok_or_else(|| bad("bad mj"))?;
        out.push(RydbergState::new(n, l, j, mj).map_err(|e| bad(&e.to_string()))?);
    }
    if out.is_empty() {
        return Err(PipelineError::Parse("state list is empty".into()));
    }
    Ok(out)
}

/// Accepts `2.5` as well as `5/2`.
fn parse_half(s: &str) -> Option<HalfInt> {
    match s.split_once('/') {
        Some((num, "2")) => num.parse::<i32>().ok().map(HalfInt::from_twice),
        Some(_) => None,
        None => HalfInt::from_f64(s.parse().ok()?),
    }
}

pub fn stark_table(
    states: &[RydbergState],
    defects: &QuantumDefectTable,
    window: &BasisWindow,
) -> Result<Vec<StarkRow>, PipelineError> {
    let mut levels: Vec<(u32, u32, HalfInt)> = states.iter().map(|s| (s.n, s.l, s.j)).collect();
    levels.sort();
    levels.dedup();
    let decomposed = levels
        .par_iter()
        .map(|&(n, l, j)| Ok(((n, l, j), level_scalar_tensor(n, l, j, defects, window)?.1)))
        .collect::<Result<HashMap<_, ScalarTensor>, PipelineError>>()?;
    states
        .par_iter()
        .map(|s| {
            let p = polarizability(s, defects, window)?;
            let st = decomposed[&(s.n, s.l, s.j)];
            Ok(StarkRow {
                state: *s,
                n_star: effective_n(s, defects)?,
                alpha: p.value,
                alpha0: st.alpha0,
                alpha2: if st.tensor_defined { st.alpha2 } else { f64::NAN },
                truncation_estimate: p.truncation_estimate,
            })
        })
        .collect()
}

pub fn write_stark_csv(path: &Path, rows: &[StarkRow]) -> Result<(), PipelineError> {
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            vec![
                r.state.n as f64,
                r.state.l as f64,
                r.state.j.value(),
                r.state.mj.value(),
                r.n_star,
                r.alpha,
                r.alpha0,
                r.alpha2,
                r.truncation_estimate,
                -0.5 * r.alpha,
            ]
        })
        .collect();
    write_table_csv(path, &STARK_HEADER, &table)
}
