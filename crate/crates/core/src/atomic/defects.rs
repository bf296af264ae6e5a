use std::collections::BTreeMap;
use std::path::Path;

use super::{AtomicError, HalfInt};
use crate::units;

const RB87_FILE: &str = include_str!("../../data/rb87_quantum_defects.txt");

/// Rydberg–Ritz coefficients of one (l, j) series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesDefect {
    pub delta0: f64,
    pub delta2: f64,
}

impl SeriesDefect {
    pub const ZERO: SeriesDefect = SeriesDefect { delta0: 0.0, delta2: 0.0 };

    /// δ(n) = δ0 + δ2/(n − δ0)²
    pub fn at(&self, n: u32) -> f64 {
        let m = n as f64 - self.delta0;
        self.delta0 + self.delta2 / (m * m)
    }
}

/// Quantum defects of one species, keyed by (l, j).
///
/// Immutable once loaded; lookups for l ≤ 3 fail explicitly when the series
/// is missing, while l ≥ 4 series fall back to zero defect.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumDefectTable {
    species: String,
    rydberg_mhz: f64,
    series: BTreeMap<(u32, HalfInt), SeriesDefect>,
}

impl QuantumDefectTable {
    /// Highest l that must be listed explicitly.
    pub const MAX_EXPLICIT_L: u32 = 3;

    /// The shipped ⁸⁷Rb table.
    pub fn rubidium87() -> Self {
        Self::parse(RB87_FILE).expect("shipped defect table parses")
    }

    /// Zero-defect table with the infinite-mass Rydberg constant, so that
    /// energies are exactly −1/(2n²) Hartree.
    pub fn hydrogenic() -> Self {
        let mut series = BTreeMap::new();
        for l in 0..=Self::MAX_EXPLICIT_L {
            for tj in [2 * l as i32 - 1, 2 * l as i32 + 1] {
                if tj > 0 {
                    series.insert((l, HalfInt::from_twice(tj)), SeriesDefect::ZERO);
                }
            }
        }
        QuantumDefectTable { species: "H".into(), rydberg_mhz: units::rydberg_infinity_mhz(), series }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, AtomicError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| AtomicError::DefectFile { line: 0, message: format!("{}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    /// Parses the plain-text defect format documented in the shipped file.
    pub fn parse(text: &str) -> Result<Self, AtomicError> {
        let mut species: Option<String> = None;
        let mut rydberg: Option<f64> = None;
        let mut series = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| AtomicError::DefectFile { line: line_no, message };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let mut claim_species = |name: &str| -> Result<(), AtomicError> {
                match &species {
                    Some(s) if s != name => Err(err(format!("species '{name}' differs from '{s}'"))),
                    Some(_) => Ok(()),
                    None => {
                        species = Some(name.to_string());
                        Ok(())
                    }
                }
            };
            if let Some(directive) = fields[0].strip_prefix('@') {
                match directive {
                    "rydberg_constant_mhz" => {
                        if fields.len() != 3 {
                            return Err(err("expected '@rydberg_constant_mhz <species> <value>'".into()));
                        }
                        claim_species(fields[1])?;
                        let value: f64 = fields[2].parse().map_err(|_| err(format!("bad number '{}'", fields[2])))?;
                        if !(value.is_finite() && value > 0.0) {
                            return Err(err("Rydberg constant must be positive".into()));
                        }
                        rydberg = Some(value);
                    }
                    other => return Err(err(format!("unknown directive '@{other}'"))),
                }
                continue;
            }
            if fields.len() < 5 {
                return Err(err(format!("expected at least 5 fields, found {}", fields.len())));
            }
            claim_species(fields[0])?;
            let l: u32 = fields[1].parse().map_err(|_| err(format!("bad l '{}'", fields[1])))?;
            let j: HalfInt = fields[2].parse().map_err(err)?;
            if j.twice() != 2 * l as i32 + 1 && j.twice() != 2 * l as i32 - 1 {
                return Err(err(format!("j = {j} is not l ± 1/2 for l = {l}")));
            }
            let delta0: f64 = fields[3].parse().map_err(|_| err(format!("bad delta0 '{}'", fields[3])))?;
            let delta2: f64 = fields[4].parse().map_err(|_| err(format!("bad delta2 '{}'", fields[4])))?;
            if !(delta0.is_finite() && delta2.is_finite()) || delta0 < 0.0 {
                return Err(err("delta0 must be finite and non-negative".into()));
            }
            if series.insert((l, j), SeriesDefect { delta0, delta2 }).is_some() {
                return Err(err(format!("duplicate series l = {l}, j = {j}")));
            }
        }
        let species = species.ok_or(AtomicError::DefectFile { line: 0, message: "no records".into() })?;
        let rydberg_mhz = rydberg
            .ok_or(AtomicError::DefectFile { line: 0, message: "missing @rydberg_constant_mhz directive".into() })?;
        Ok(QuantumDefectTable { species, rydberg_mhz, series })
    }

    pub fn species(&self) -> &str {
        &self.species
    }

    /// Species Rydberg constant in MHz.
    pub fn rydberg_mhz(&self) -> f64 {
        self.rydberg_mhz
    }

    pub fn series(&self, l: u32, j: HalfInt) -> Result<SeriesDefect, AtomicError> {
        match self.series.get(&(l, j)) {
            Some(d) => Ok(*d),
            None if l > Self::MAX_EXPLICIT_L => Ok(SeriesDefect::ZERO),
            None => Err(AtomicError::MissingSeries { l, j }),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, HalfInt, SeriesDefect)> + '_ {
        self.series.iter().map(|(&(l, j), &d)| (l, j, d))
    }
}
