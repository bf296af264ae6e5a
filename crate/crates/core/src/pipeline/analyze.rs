//! Spectra on disk → shift curves → field samples → patch fit → report.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{PatchSpec, RunConfig};
use super::io::{read_spectrum_csv, write_field_csv, write_json, write_shift_csv, write_table_csv};
use super::synth::{read_manifest, Manifest};
use super::{load_defects, PipelineError};
use crate::analysis::{
    build_shift_curve, collapse_to_field, DistanceFit, DistanceScan, EitFitOptions, FieldSample, ShiftCurve,
};
use crate::atomic::{effective_n, HalfInt, QuantumDefectTable, RydbergState};
use crate::patch::{
    adsorbate_budget, cloud_averaged_field, fit_patch, log_spaced, model_power_law_exponent, onaxis_field,
    power_law_exponent, AdsorbateBudget, PatchFit,
};
use crate::stark::{polarizability, scaling_exponent, BasisWindow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSummary {
    pub state: RydbergState,
    pub alpha_mhz_per_vcm2: f64,
    pub offset_mhz: f64,
    pub offset_error_mhz: f64,
    pub points: usize,
    pub null_distances_um: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakRatio {
    pub z_um: f64,
    pub peak_v_per_cm: f64,
    pub cloud_v_per_cm: f64,
    /// peak/cloud − 1
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesScaling {
    pub l: u32,
    pub j: HalfInt,
    pub mj: HalfInt,
    pub n_min: u32,
    pub n_max: u32,
    /// Slope of log|Δc| against log n* at the reference distance.
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub states: Vec<StateSummary>,
    pub shift_range_mhz: Option<(f64, f64)>,
    pub field_exponent: Option<f64>,
    pub patch: Option<PatchFit>,
    pub model_exponent: Option<f64>,
    pub peak_vs_cloud: Vec<PeakRatio>,
    pub shift_scaling: Vec<SeriesScaling>,
    pub budget: Option<AdsorbateBudget>,
    pub distance_fits: Vec<(RydbergState, Vec<DistanceFit>)>,
}

impl AnalysisReport {
    fn empty() -> Self {
        AnalysisReport {
            status: "running".into(),
            failed_stage: None,
            error: None,
            states: vec![],
            shift_range_mhz: None,
            field_exponent: None,
            patch: None,
            model_exponent: None,
            peak_vs_cloud: vec![],
            shift_scaling: vec![],
            budget: None,
            distance_fits: vec![],
        }
    }
}

pub const SHIFT_CURVES: &str = "shift_curves.csv";
pub const FIELD_SAMPLES: &str = "field_samples.csv";
pub const PATCH_MODEL: &str = "patch_model.json";
pub const MODEL_CURVE: &str = "model_curve.csv";
pub const REPORT: &str = "report.json";
pub const SUMMARY: &str = "summary.txt";

/// Runs the full inversion on the spectra listed in `data_dir/manifest.json`
/// and writes all outputs into `out_dir`.
///
/// On failure the report is still written with `status = "failed"` and the
/// name of the stage that failed, next to whatever outputs were complete.
pub fn run_analysis(config: &RunConfig, data_dir: &Path, out_dir: &Path) -> Result<AnalysisReport, PipelineError> {
    let mut report = AnalysisReport::empty();
    let mut stage = "input";
    match analyze_into(config, data_dir, out_dir, &mut report, &mut stage) {
        Ok(()) => {
            report.status = "ok".into();
            write_json(&out_dir.join(REPORT), &report)?;
            super::io::write_atomic(&out_dir.join(SUMMARY), summary_text(&report).as_bytes())?;
            Ok(report)
        }
        Err(e) => {
            report.status = "failed".into();
            report.failed_stage = Some(stage.into());
            report.error = Some(e.to_string());
            // best effort; the original error wins
            let _ = write_json(&out_dir.join(REPORT), &report);
            Err(e)
        }
    }
}

fn analyze_into(
    config: &RunConfig,
    data_dir: &Path,
    out_dir: &Path,
    report: &mut AnalysisReport,
    stage: &mut &'static str,
) -> Result<(), PipelineError> {
    config.validate()?;
    let manifest = read_manifest(data_dir)?;
    let defects = load_defects(config)?;
    let window = config.window();

    // group scans by state, in config order
    let mut per_state: Vec<(RydbergState, Option<f64>, Vec<DistanceScan>)> = Vec::new();
    for spec in &config.states {
        per_state.push((spec.state()?, spec.alpha_mhz_per_vcm2, Vec::new()));
    }
    read_scans(&manifest, data_dir, &mut per_state)?;

    *stage = "polarizability";
    let alphas = per_state
        .par_iter()
        .map(|(state, fixed, _)| match fixed {
            Some(a) => Ok(*a),
            None => Ok(polarizability(state, &defects, &window)?.value),
        })
        .collect::<Result<Vec<f64>, PipelineError>>()?;

    *stage = "spectrum fits";
    let options = EitFitOptions { null_threshold: config.analysis.null_threshold, ..EitFitOptions::default() };
    let mut curves: Vec<(ShiftCurve, f64)> = Vec::new();
    for ((state, _, scans), &alpha) in per_state.iter().zip(&alphas) {
        let (curve, fits) = build_shift_curve(*state, scans, config.analysis.offset, &options)?;
        report.states.push(StateSummary {
            state: *state,
            alpha_mhz_per_vcm2: alpha,
            offset_mhz: curve.offset,
            offset_error_mhz: curve.offset_error,
            points: curve.points.len(),
            null_distances_um: curve.null_distances.clone(),
        });
        report.distance_fits.push((*state, fits));
        curves.push((curve, alpha));
    }
    let shifts: Vec<f64> = curves.iter().flat_map(|(c, _)| c.points.iter().map(|p| p.delta_c)).collect();
    if !shifts.is_empty() {
        let lo = shifts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = shifts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        report.shift_range_mhz = Some((lo, hi));
    }
    let only_curves: Vec<ShiftCurve> = curves.iter().map(|c| c.0.clone()).collect();
    write_shift_csv(&out_dir.join(SHIFT_CURVES), &only_curves)?;

    *stage = "field inference";
    let samples = collapse_to_field(&curves)?;
    write_field_csv(&out_dir.join(FIELD_SAMPLES), &samples)?;
    let positive: Vec<(f64, f64)> = samples.iter().filter(|s| s.field > 0.0).map(|s| (s.z, s.field)).collect();
    report.field_exponent = power_law_exponent(&positive).ok();

    *stage = "patch fit";
    let initial = config.analysis.initial_patch.model();
    let fit = fit_patch(&samples, &initial, config.analysis.cloud_average)?;
    report.patch = Some(fit);
    write_json(&out_dir.join(PATCH_MODEL), &PatchOutput::from(&fit))?;
    if !fit.converged {
        return Err(PipelineError::FitFailed("patch fit did not converge".into()));
    }

    *stage = "diagnostics";
    let model = fit.model;
    let (zmin, zmax) = samples.iter().fold((f64::INFINITY, 0.0f64), |(a, b), s| (a.min(s.z), b.max(s.z)));
    report.model_exponent = Some(model_power_law_exponent(&model, zmin, zmax, 10, config.analysis.cloud_average)?);
    let mut zs: Vec<f64> = samples.iter().map(|s| s.z).collect();
    zs.sort_by(f64::total_cmp);
    zs.dedup();
    for &z in &zs {
        let peak = onaxis_field(z, &model)?;
        let cloud = cloud_averaged_field(z, &model, config.analysis.cloud_average)?;
        report.peak_vs_cloud.push(PeakRatio {
            z_um: z,
            peak_v_per_cm: peak,
            cloud_v_per_cm: cloud,
            excess: peak / cloud - 1.0,
        });
    }
    write_model_curve(&out_dir.join(MODEL_CURVE), &model, zmin, zmax, config)?;
    report.shift_scaling = shift_scaling(&model, config.analysis.scaling_z_um, &defects, &window, config)?;
    let b = config.analysis.budget;
    report.budget = Some(adsorbate_budget(&model, b.dipole_per_adatom_debye, b.decay_rate_per_s, b.cycle_time_s)?);
    Ok(())
}

fn read_scans(
    manifest: &Manifest,
    data_dir: &Path,
    per_state: &mut [(RydbergState, Option<f64>, Vec<DistanceScan>)],
) -> Result<(), PipelineError> {
    let mut index: BTreeMap<(u32, u32, i32, i32), usize> = BTreeMap::new();
    for (k, (s, _, _)) in per_state.iter().enumerate() {
        index.insert((s.n, s.l, s.j.twice(), s.mj.abs().twice()), k);
    }
    let loaded = manifest
        .entries
        .par_iter()
        .map(|e| {
            let reference = read_spectrum_csv(&data_dir.join(&e.reference_csv))?;
            let eit = read_spectrum_csv(&data_dir.join(&e.eit_csv))?;
            Ok((e.state, DistanceScan { z: e.z_um, reference, eit }))
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    for (state, scan) in loaded {
        if let Some(&k) = index.get(&(state.n, state.l, state.j.twice(), state.mj.abs().twice())) {
            per_state[k].2.push(scan);
        }
    }
    for (s, _, scans) in per_state.iter() {
        if scans.is_empty() {
            return Err(PipelineError::Config(format!("no spectra for {s} in the manifest")));
        }
    }
    Ok(())
}

/// Exponent of the modelled shift α(n)·E(z)²/2 across n = 22..36 for the
/// s1/2, d3/2 |mj| = 3/2 and d5/2 |mj| = 1/2 series.
fn shift_scaling(
    model: &crate::patch::PatchModel,
    z: f64,
    defects: &QuantumDefectTable,
    window: &BasisWindow,
    config: &RunConfig,
) -> Result<Vec<SeriesScaling>, PipelineError> {
    let e = cloud_averaged_field(z, model, config.analysis.cloud_average)?;
    let series = [(0u32, 1, 1, 22u32, 36u32), (2, 3, 3, 22, 36), (2, 5, 1, 26, 36)];
    let mut out = Vec::new();
    for (l, tj, tm, lo, hi) in series {
        let (j, mj) = (HalfInt::from_twice(tj), HalfInt::from_twice(tm));
        let pts = (lo..=hi)
            .into_par_iter()
            .map(|n| {
                let s = RydbergState::new(n, l, j, mj)?;
                let a = polarizability(&s, defects, window)?.value;
                Ok((effective_n(&s, defects)?, 0.5 * a * e * e))
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        let exponent = scaling_exponent(&pts)?;
        out.push(SeriesScaling { l, j, mj, n_min: lo, n_max: hi, exponent });
    }
    Ok(out)
}

fn write_model_curve(
    path: &Path,
    model: &crate::patch::PatchModel,
    zmin: f64,
    zmax: f64,
    config: &RunConfig,
) -> Result<(), PipelineError> {
    let rows = log_spaced(0.5 * zmin, 2.0 * zmax, 60)
        .into_iter()
        .map(|z| Ok(vec![z, onaxis_field(z, model)?, cloud_averaged_field(z, model, config.analysis.cloud_average)?]))
        .collect::<Result<Vec<_>, PipelineError>>()?;
    write_table_csv(path, &["z_um", "peak_v_per_cm", "cloud_v_per_cm"], &rows)
}

/// Fitted patch model as written to `patch_model.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchOutput {
    pub model: PatchSpec,
    pub d0_error_debye_per_um2: f64,
    pub w_error_um: f64,
    pub correlation: f64,
    pub chi2: f64,
    pub reduced_chi2: f64,
    pub samples: usize,
    pub converged: bool,
    pub ill_conditioned: bool,
    pub poor_fit: bool,
}

impl From<&PatchFit> for PatchOutput {
    fn from(f: &PatchFit) -> Self {
        PatchOutput {
            model: f.model.into(),
            d0_error_debye_per_um2: f.d0_error,
            w_error_um: f.w_error,
            correlation: f.correlation,
            chi2: f.chi2,
            reduced_chi2: f.reduced_chi2,
            samples: f.samples,
            converged: f.converged,
            ill_conditioned: f.ill_conditioned,
            poor_fit: f.poor_fit,
        }
    }
}

/// Fits the patch model to a field-sample file and writes the JSON model
/// and a model curve next to it.
pub fn run_patch_fit(samples: &[FieldSample], config: &RunConfig, out_dir: &Path) -> Result<PatchFit, PipelineError> {
    let fit = fit_patch(samples, &config.analysis.initial_patch.model(), config.analysis.cloud_average)?;
    write_json(&out_dir.join(PATCH_MODEL), &PatchOutput::from(&fit))?;
    let (zmin, zmax) = samples.iter().fold((f64::INFINITY, 0.0f64), |(a, b), s| (a.min(s.z), b.max(s.z)));
    write_model_curve(&out_dir.join(MODEL_CURVE), &fit.model, zmin, zmax, config)?;
    if !fit.converged {
        return Err(PipelineError::FitFailed("patch fit did not converge".into()));
    }
    Ok(fit)
}

pub fn summary_text(r: &AnalysisReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("status: {}\n", r.status));
    for st in &r.states {
        s.push_str(&format!(
            "{}: alpha = {:.4} MHz/(V/cm)^2, offset = {:.3} +/- {:.3} MHz, {} points, {} null\n",
            st.state.term(),
            st.alpha_mhz_per_vcm2,
            st.offset_mhz,
            st.offset_error_mhz,
            st.points,
            st.null_distances_um.len()
        ));
    }
    if let Some((lo, hi)) = r.shift_range_mhz {
        s.push_str(&format!("shift range: {lo:.2} .. {hi:.2} MHz\n"));
    }
    if let Some(p) = &r.patch {
        s.push_str(&format!(
            "patch: d0 = {:.4e} +/- {:.2e} Debye/um^2, w = {:.2} +/- {:.2} um, reduced chi2 = {:.3}{}{}\n",
            p.model.d0,
            p.d0_error,
            p.model.w,
            p.w_error,
            p.reduced_chi2,
            if p.ill_conditioned { " [ill-conditioned]" } else { "" },
            if p.poor_fit { " [poor fit]" } else { "" }
        ));
    }
    if let Some(k) = r.field_exponent {
        s.push_str(&format!("field power law (samples): z^{k:.3}\n"));
    }
    if let Some(k) = r.model_exponent {
        s.push_str(&format!("field power law (model): z^{k:.3}\n"));
    }
    if !r.peak_vs_cloud.is_empty() {
        let mean = r.peak_vs_cloud.iter().map(|p| p.excess).sum::<f64>() / r.peak_vs_cloud.len() as f64;
        s.push_str(&format!("peak field exceeds cloud average by {:.1}% on average\n", 100.0 * mean));
    }
    for sc in &r.shift_scaling {
        s.push_str(&format!(
            "shift scaling l={} j={} |mj|={} n={}..{}: n*^{:.3}\n",
            sc.l, sc.j, sc.mj, sc.n_min, sc.n_max, sc.exponent
        ));
    }
    if let Some(b) = &r.budget {
        s.push_str(&format!("adsorbates: {:.3e} total, {:.3e} per shot\n", b.total, b.per_shot));
    }
    s
}
