//! File-based orchestration: configuration, synthetic data, the analysis
//! chain and its outputs.
//!
//! Errors map onto process exit codes: 2 for unreadable or malformed input,
//! 3 for physics/model failures, 4 for fits that do not converge.

mod analyze;
mod config;
mod constants;
mod io;
mod stark_table;
mod synth;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use analyze::{
    run_analysis, run_patch_fit, summary_text, AnalysisReport, PatchOutput, PeakRatio, SeriesScaling, StateSummary,
    FIELD_SAMPLES, MODEL_CURVE, PATCH_MODEL, REPORT, SHIFT_CURVES, SUMMARY,
};
pub use config::{AnalysisConfig, BudgetSpec, PatchSpec, Paths, RunConfig, ScanGrid, StateSpec, Truth};
pub use constants::{validate_constants, ConstantCheck, ConstantsReport, CONSTANTS_TOLERANCE};
pub use io::{
    read_field_csv, read_spectrum_csv, write_atomic, write_field_csv, write_json, write_shift_csv, write_spectrum_csv,
    write_table_csv, FIELD_HEADER, SHIFT_HEADER, SPECTRUM_HEADER,
};
pub use stark_table::{parse_state_list, stark_table, write_stark_csv, StarkRow, STARK_HEADER};
pub use synth::{read_manifest, state_label, synth_experiment, EntryTruth, Manifest, ManifestEntry, MANIFEST};

use crate::analysis::AnalysisError;
use crate::atomic::{AtomicError, QuantumDefectTable};
use crate::eit::EitError;
use crate::lsq::FitError;
use crate::patch::PatchError;
use crate::stark::StarkError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("fit failed: {0}")]
    FitFailed(String),
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io { .. } | PipelineError::Parse(_) | PipelineError::Config(_) => 2,
            PipelineError::Model(_) => 3,
            PipelineError::FitFailed(_) => 4,
        }
    }
}

impl From<AtomicError> for PipelineError {
    fn from(e: AtomicError) -> Self {
        match e {
            AtomicError::DefectFile { .. } => PipelineError::Parse(e.to_string()),
            _ => PipelineError::Model(e.to_string()),
        }
    }
}

impl From<StarkError> for PipelineError {
    fn from(e: StarkError) -> Self {
        PipelineError::Model(e.to_string())
    }
}

impl From<EitError> for PipelineError {
    fn from(e: EitError) -> Self {
        PipelineError::Model(e.to_string())
    }
}

impl From<FitError> for PipelineError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::NotConverged | FitError::NonFiniteModel => PipelineError::FitFailed(e.to_string()),
            _ => PipelineError::Model(e.to_string()),
        }
    }
}

impl From<PatchError> for PipelineError {
    fn from(e: PatchError) -> Self {
        match e {
            PatchError::Fit(f) => f.into(),
            other => PipelineError::Model(other.to_string()),
        }
    }
}

impl From<AnalysisError> for PipelineError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Fit(f) => f.into(),
            AnalysisError::ReferenceNotConverged => PipelineError::FitFailed(e.to_string()),
            AnalysisError::Spectrum(_) => PipelineError::Parse(e.to_string()),
            other => PipelineError::Model(other.to_string()),
        }
    }
}

/// The configured quantum-defect table, or the shipped ⁸⁷Rb one.
pub fn load_defects(config: &RunConfig) -> Result<QuantumDefectTable, PipelineError> {
    match &config.paths.defects {
        Some(p) => Ok(QuantumDefectTable::from_path(p)?),
        None => Ok(QuantumDefectTable::rubidium87()),
    }
}
