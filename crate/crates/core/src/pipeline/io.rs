//! CSV and JSON files, written atomically.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::PipelineError;
use crate::analysis::{FieldSample, ShiftCurve};
use crate::atomic::{HalfInt, RydbergState};
use crate::eit::Spectrum;

pub const SPECTRUM_HEADER: [&str; 4] = ["detuning_mhz", "od", "sigma", "z_um"];
pub const FIELD_HEADER: [&str; 7] = ["z_um", "field_v_per_cm", "error_v_per_cm", "n", "l", "j", "mj"];
pub const SHIFT_HEADER: [&str; 7] = ["z_um", "delta_c_mhz", "error_mhz", "n", "l", "j", "mj"];

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        }
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| PipelineError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| PipelineError::io(&tmp, e))?;
    f.sync_all().map_err(|e| PipelineError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Parse(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| PipelineError::Parse(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| PipelineError::Parse(e.to_string()))
}

pub fn write_spectrum_csv(path: &Path, s: &Spectrum) -> Result<(), PipelineError> {
    let rows = (0..s.len())
        .map(|k| vec![s.detunings[k].to_string(), s.od[k].to_string(), s.sigma[k].to_string(), s.z.to_string()]);
    write_atomic(path, &csv_bytes(&SPECTRUM_HEADER, rows)?)
}

fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<fs::File>, PipelineError> {
    let file = fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let found = r.headers().map_err(|e| PipelineError::Parse(format!("{}: {e}", path.display())))?;
    if found.iter().collect::<Vec<_>>() != header {
        return Err(PipelineError::Parse(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            header,
            found.iter().collect::<Vec<_>>()
        )));
    }
    Ok(r)
}

fn field(path: &Path, line: usize, rec: &csv::StringRecord, k: usize) -> Result<f64, PipelineError> {
    let raw = rec.get(k).unwrap_or("");
    raw.parse::<f64>().map_err(|_| {
        PipelineError::Parse(format!("{}:{line}: column {} is not a number: {raw:?}", path.display(), k + 1))
    })
}

fn records(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, PipelineError> {
    let mut r = open_csv(path, header)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| PipelineError::Parse(format!("{}:{line}: {e}", path.display())))?;
        if rec.len() != header.len() {
            return Err(PipelineError::Parse(format!("{}:{line}: expected {} columns", path.display(), header.len())));
        }
        out.push((0..header.len()).map(|k| field(path, line, &rec, k)).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(out)
}

/// Reads one scan; every row must carry the same `z_um`.
pub fn read_spectrum_csv(path: &Path) -> Result<Spectrum, PipelineError> {
    let rows = records(path, &SPECTRUM_HEADER)?;
    if rows.is_empty() {
        return Err(PipelineError::Parse(format!("{}: no data rows", path.display())));
    }
    let z = rows[0][3];
    if rows.iter().any(|r| r[3] != z) {
        return Err(PipelineError::Parse(format!("{}: z_um varies within one spectrum", path.display())));
    }
    let s = Spectrum {
        detunings: rows.iter().map(|r| r[0]).collect(),
        od: rows.iter().map(|r| r[1]).collect(),
        sigma: rows.iter().map(|r| r[2]).collect(),
        z,
    };
    s.validate().map_err(|e| PipelineError::Parse(format!("{}: {e}", path.display())))?;
    Ok(s)
}

fn state_cols(s: &RydbergState) -> [String; 4] {
    [s.n.to_string(), s.l.to_string(), s.j.value().to_string(), s.mj.value().to_string()]
}

fn state_from(path: &Path, line: usize, r: &[f64]) -> Result<RydbergState, PipelineError> {
    let bad = || PipelineError::Parse(format!("{}:{line}: invalid state columns", path.display()));
    let int = |v: f64| (v >= 0.0 && v.fract() == 0.0).then_some(v as u32);
    let (n, l) = (int(r[0]).ok_or_else(bad)?, int(r[1]).ok_or_else(bad)?);
    let j = HalfInt::from_f64(r[2]).ok_or_else(bad)?;
    let mj = HalfInt::from_f64(r[3]).ok_or_else(bad)?;
    RydbergState::new(n, l, j, mj).map_err(|e| PipelineError::Parse(format!("{}:{line}: {e}", path.display())))
}

pub fn write_field_csv(path: &Path, samples: &[FieldSample]) -> Result<(), PipelineError> {
    let rows = samples.iter().map(|s| {
        let mut v = vec![s.z.to_string(), s.field.to_string(), s.error.to_string()];
        v.extend(state_cols(&s.state));
        v
    });
    write_atomic(path, &csv_bytes(&FIELD_HEADER, rows)?)
}

pub fn read_field_csv(path: &Path) -> Result<Vec<FieldSample>, PipelineError> {
    records(path, &FIELD_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| Ok(FieldSample { z: r[0], field: r[1], error: r[2], state: state_from(path, i + 2, &r[3..])? }))
        .collect()
}

pub fn write_shift_csv(path: &Path, curves: &[ShiftCurve]) -> Result<(), PipelineError> {
    let rows = curves.iter().flat_map(|c| c.points.iter()).map(|p| {
        let mut v = vec![p.z.to_string(), p.delta_c.to_string(), p.error.to_string()];
        v.extend(state_cols(&p.state));
        v
    });
    write_atomic(path, &csv_bytes(&SHIFT_HEADER, rows)?)
}

/// Generic numeric table with a header row.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), PipelineError> {
    let rows = rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect());
    write_atomic(path, &csv_bytes(header, rows)?)
}
