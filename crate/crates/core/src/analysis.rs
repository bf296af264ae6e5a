//! From spectra to shifts to fields.
//!
//! Each distance is analysed in two stages: a Lorentzian fit of the
//! reference scan (no coupling light) fixes Γp, od0 and the frequency
//! offset, then the EIT scan is fitted for (Δc, Γc, Ωc) with those frozen.
//! Shift curves collect Δc against distance for one Rydberg state, and
//! fields follow from |E| = √(2Δc/α).

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atomic::RydbergState;
use crate::eit::{chi, EitError, Spectrum};
use crate::lsq::{finite_difference_jacobian, lm_fit, Bound, FitError, FitOptions, FitProblem, FitResult};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Spectrum(#[from] EitError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("no absorption line found in the reference spectrum")]
    NoLine,
    #[error("scan range {range:.3} MHz is narrower than 3 Γp = {needed:.3} MHz")]
    NarrowScan { range: f64, needed: f64 },
    #[error("reference fit did not converge")]
    ReferenceNotConverged,
    #[error(
        "shift {delta_c} MHz and polarizability {alpha} MHz/(V/cm)² have opposite signs; \
         the |mj| hypothesis for this state is inconsistent with the data"
    )]
    SignMismatch { delta_c: f64, alpha: f64 },
    #[error("polarizability must be finite and nonzero, got {0}")]
    ZeroPolarizability(f64),
    #[error("need at least {needed} distances, got {got}")]
    TooFewDistances { needed: usize, got: usize },
    #[error("{0}")]
    InvalidInput(String),
}

/// Physical range of the probe linewidth accepted by the reference fit (MHz).
pub const GAMMA_P_BOUNDS: (f64, f64) = (1.0, 20.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFit {
    pub gamma_p: f64,
    pub od0: f64,
    pub offset: f64,
    pub gamma_p_error: f64,
    pub od0_error: f64,
    pub offset_error: f64,
    /// Covariance of (Γp, od0, offset), scaled like the errors.
    #[serde(default)]
    pub covariance: [[f64; 3]; 3],
    pub chi2: f64,
    pub reduced_chi2: f64,
}

fn lorentzian(p: &[f64], x: f64) -> f64 {
    let d = x - p[2];
    p[1] * p[0] * p[0] / (p[0] * p[0] + 4.0 * d * d)
}

/// Fits od0·Γp²/(Γp² + 4(Δp − offset)²) to a scan taken without coupling light.
pub fn fit_reference(spec: &Spectrum) -> Result<ReferenceFit, AnalysisError> {
    spec.validate()?;
    let (k_max, &od_max) = spec.od.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).ok_or(AnalysisError::NoLine)?;
    let noise = spec.weights().map(|s| s.iter().sum::<f64>() / s.len() as f64).unwrap_or(0.0);
    if od_max <= 0.0 || od_max <= 3.0 * noise {
        return Err(AnalysisError::NoLine);
    }
    let x = &spec.detunings;
    let range = x[x.len() - 1] - x[0];

    // half-maximum crossings around the peak
    let half = 0.5 * od_max;
    let left = (0..k_max).rev().find(|&k| spec.od[k] < half).map(|k| x[k]).unwrap_or(x[0]);
    let right = (k_max..x.len()).find(|&k| spec.od[k] < half).map(|k| x[k]).unwrap_or(x[x.len() - 1]);
    let (lo, hi) = GAMMA_P_BOUNDS;
    let gamma0 = (right - left).clamp(lo, hi);
    let initial = vec![gamma0, od_max, x[k_max]];
    let bounds = vec![Bound::new(lo, hi), Bound::non_negative(), Bound::new(x[0], x[x.len() - 1])];

    let model = |p: &[f64], x: f64| lorentzian(p, x);
    let mut problem = FitProblem::new(&model, x, &spec.od, initial).with_bounds(bounds);
    if let Some(s) = spec.weights() {
        problem = problem.with_sigma(s);
    }
    let fit = lm_fit(&problem)?;
    if !fit.converged {
        return Err(AnalysisError::ReferenceNotConverged);
    }
    if range < 3.0 * fit.params[0] {
        return Err(AnalysisError::NarrowScan { range, needed: 3.0 * fit.params[0] });
    }
    let e = fit.errors();
    let scale = if fit.weighted { 1.0 } else { fit.reduced_chi2() };
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = fit.covariance[(i, j)] * scale;
        }
    }
    Ok(ReferenceFit {
        gamma_p: fit.params[0],
        od0: fit.params[1],
        offset: fit.params[2],
        gamma_p_error: e[0],
        od0_error: e[1],
        offset_error: e[2],
        covariance,
        chi2: fit.chi2,
        reduced_chi2: fit.reduced_chi2(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EitFitOptions {
    /// Minimum drop in χ² (in units of the reduced χ² of the best fit) over
    /// the no-coupling model before a dip is accepted.
    pub null_threshold: f64,
    pub max_iterations: usize,
}

impl Default for EitFitOptions {
    fn default() -> Self {
        EitFitOptions { null_threshold: 25.0, max_iterations: 400 }
    }
}

/// Fitted coupling parameters of one EIT scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EitFit {
    pub delta_c: f64,
    pub gamma_c: f64,
    pub omega_c: f64,
    pub delta_c_error: f64,
    pub gamma_c_error: f64,
    pub omega_c_error: f64,
    pub chi2: f64,
    pub reduced_chi2: f64,
    pub converged: bool,
}

/// Outcome of [`fit_eit`]. A scan without a significant dip yields `Null`
/// rather than a coupling detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EitFitResult {
    Resonance { fit: EitFit, chi2_null: f64 },
    Null { chi2_null: f64, chi2_best: f64 },
}

impl EitFitResult {
    pub fn resonance(&self) -> Option<&EitFit> {
        match self {
            EitFitResult::Resonance { fit, .. } => Some(fit),
            EitFitResult::Null { .. } => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, EitFitResult::Null { .. })
    }
}

/// Fits (Δc, Γc, Ωc) with Γp, od0 and the offset taken from `reference`.
/// The reported errors include the reference covariance carried through
/// the fit.
///
/// Several starting points are tried: Δc at the deepest residual dip and
/// at each of its neighbours in a coarse set, crossed with a few (Γc, Ωc).
pub fn fit_eit(
    spec: &Spectrum,
    reference: &ReferenceFit,
    options: &EitFitOptions,
) -> Result<EitFitResult, AnalysisError> {
    spec.validate()?;
    if !(reference.gamma_p > 0.0 && reference.od0 >= 0.0 && reference.offset.is_finite()) {
        return Err(AnalysisError::InvalidInput(format!("unusable reference parameters {reference:?}")));
    }
    let x = &spec.detunings;
    let y = &spec.od;
    let sigma = spec.weights();
    let (gp, od0, off) = (reference.gamma_p, reference.od0, reference.offset);

    let chi2_of = |pred: &dyn Fn(f64) -> f64| -> f64 {
        x.iter()
            .zip(y)
            .enumerate()
            .map(|(k, (&xi, &yi))| {
                let r = yi - pred(xi);
                match sigma {
                    Some(s) => (r / s[k]).powi(2),
                    None => r * r,
                }
            })
            .sum()
    };
    let chi2_null = chi2_of(&|xi| lorentzian(&[gp, od0, off], xi));

    let model = move |p: &[f64], xi: f64| od0 * chi(xi - off, gp, p[1], p[0], p[2]).im;

    // starting points
    let residual: Vec<f64> = x.iter().zip(y).map(|(&xi, &yi)| lorentzian(&[gp, od0, off], xi) - yi).collect();
    let k_dip = residual.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).unwrap_or(0);
    let depth = (residual[k_dip] / od0.max(1e-300)).clamp(0.01, 0.99);
    let dc0 = off - x[k_dip];
    let span = x[x.len() - 1] - x[0];
    let dc_bound = Bound::new(-span, span);
    let mut starts = Vec::new();
    for &gc in &[0.3, 1.0, 3.0] {
        // Im χ at the dip ≈ Γp Γc/(Γp Γc + Ωc²) = 1 − depth
        let oc = (gp * gc * depth / (1.0 - depth)).sqrt().max(0.1);
        for &dc in &[dc0, dc0 - 0.5, dc0 + 0.5] {
            starts.push(vec![dc.clamp(dc_bound.lower, dc_bound.upper), gc, oc]);
        }
        starts.push(vec![dc0.clamp(dc_bound.lower, dc_bound.upper), gc, 2.0 * oc]);
    }
    starts.extend(scan_starts(&|dc, gc, oc| chi2_of(&|xi| model(&[dc, gc, oc], xi)), x, off, &dc_bound));
    let bounds = vec![dc_bound, Bound::new(0.0, 100.0), Bound::new(0.0, 200.0)];
    let opts = FitOptions { max_iterations: options.max_iterations, ..FitOptions::default() };

    let fits: Vec<FitResult> = starts
        .into_par_iter()
        .filter_map(|start| {
            let mut problem = FitProblem::new(&model, x, y, start).with_bounds(bounds.clone()).with_options(opts);
            if let Some(s) = sigma {
                problem = problem.with_sigma(s);
            }
            lm_fit(&problem).ok()
        })
        .collect();
    let best = fits
        .into_iter()
        .filter(|f| f.chi2.is_finite())
        .min_by(|a, b| a.chi2.total_cmp(&b.chi2))
        .ok_or(AnalysisError::Fit(FitError::NotConverged))?;

    let scale = if sigma.is_some() { 1.0 } else { best.reduced_chi2() };
    let improvement = chi2_null - best.chi2;
    // gains at rounding level of the data are not a dip
    let floor = 1e-10 * chi2_of(&|_| 0.0);
    let significant = improvement > floor && improvement > options.null_threshold * scale;
    if !significant {
        return Ok(EitFitResult::Null { chi2_null, chi2_best: best.chi2 });
    }
    let e = propagated_errors(&best, reference, x, sigma);
    Ok(EitFitResult::Resonance {
        fit: EitFit {
            delta_c: best.params[0],
            gamma_c: best.params[1],
            omega_c: best.params[2],
            delta_c_error: e[0],
            gamma_c_error: e[1],
            omega_c_error: e[2],
            chi2: best.chi2,
            reduced_chi2: best.reduced_chi2(),
            converged: best.converged,
        },
        chi2_null,
    })
}

/// Best few local minima of χ² over Δc placed under each scan point, for
/// a small set of (Γc, Ωc).
fn scan_starts(chi2: &dyn Fn(f64, f64, f64) -> f64, x: &[f64], off: f64, dc_bound: &Bound) -> Vec<Vec<f64>> {
    const KEEP: usize = 3;
    let shapes = [(0.3, 1.5), (1.0, 3.0), (3.0, 6.0)];
    let mut grid: Vec<f64> = x.iter().map(|&xi| off - xi).filter(|dc| dc_bound.contains(*dc)).collect();
    grid.sort_by(f64::total_cmp);
    let mut found = Vec::new();
    for &(gc, oc) in &shapes {
        let profile: Vec<f64> = grid.iter().map(|&dc| chi2(dc, gc, oc)).collect();
        for k in 0..profile.len() {
            let left = k == 0 || profile[k] <= profile[k - 1];
            let right = k + 1 == profile.len() || profile[k] <= profile[k + 1];
            if left && right {
                found.push((profile[k], vec![grid[k], gc, oc]));
            }
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    found.into_iter().take(KEEP * shapes.len()).map(|f| f.1).collect()
}

/// Errors of (Δc, Γc, Ωc) with the reference covariance added through
/// ∂p/∂q = −(J_pᵀWJ_p)⁻¹ J_pᵀWJ_q.
fn propagated_errors(best: &FitResult, reference: &ReferenceFit, x: &[f64], sigma: Option<&[f64]>) -> Vec<f64> {
    let stat = best.errors();
    let full = |v: &[f64], xi: f64| v[4] * chi(xi - v[5], v[3], v[1], v[0], v[2]).im;
    let mut v = best.params.clone();
    v.extend([reference.gamma_p, reference.od0, reference.offset]);
    let mut jac = finite_difference_jacobian(&full, &v, x);
    if let Some(s) = sigma {
        for (i, si) in s.iter().enumerate() {
            jac.row_mut(i).scale_mut(1.0 / si);
        }
    }
    let jp = jac.columns(0, 3);
    let jq = jac.columns(3, 3);
    let Some(a_inv) = (jp.transpose() * jp).try_inverse() else {
        return stat;
    };
    let sens = -(a_inv * (jp.transpose() * jq));
    let cq = DMatrix::from_fn(3, 3, |i, j| reference.covariance[i][j]);
    let added = &sens * cq * sens.transpose();
    (0..3).map(|i| (stat[i] * stat[i] + added[(i, i)].max(0.0)).sqrt()).collect()
}

/// |E| = √(2Δc/α) in V/cm for Δc in MHz and α in MHz/(V/cm)².
pub fn infer_field(delta_c: f64, alpha: f64) -> Result<f64, AnalysisError> {
    if !(alpha.is_finite() && alpha != 0.0) {
        return Err(AnalysisError::ZeroPolarizability(alpha));
    }
    if !delta_c.is_finite() {
        return Err(AnalysisError::InvalidInput(format!("non-finite shift {delta_c}")));
    }
    if delta_c == 0.0 {
        return Ok(0.0);
    }
    if delta_c.signum() != alpha.signum() {
        return Err(AnalysisError::SignMismatch { delta_c, alpha });
    }
    Ok((2.0 * delta_c / alpha).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftPoint {
    /// μm
    pub z: f64,
    /// MHz, offset-subtracted
    pub delta_c: f64,
    pub error: f64,
    pub state: RydbergState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftCurve {
    pub state: RydbergState,
    pub points: Vec<ShiftPoint>,
    /// Constant subtracted from every fitted Δc (MHz).
    pub offset: f64,
    pub offset_error: f64,
    /// Distances whose EIT fit returned a null result.
    pub null_distances: Vec<f64>,
}

/// Estimator for the constant detuning offset removed from a shift curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OffsetMode {
    /// Weighted mean of Δc over the farthest quarter of the distances.
    #[default]
    TopQuartile,
    /// Weighted mean of Δc over points with z ≥ `z_min_um`.
    Above {
        z_min_um: f64,
    },
    /// Known constant (MHz).
    Fixed {
        mhz: f64,
    },
    None,
}

/// Reference and coupled scans taken at one distance.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceScan {
    pub z: f64,
    pub reference: Spectrum,
    pub eit: Spectrum,
}

/// Per-distance fits kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceFit {
    pub z: f64,
    pub reference: ReferenceFit,
    pub eit: EitFitResult,
}

/// Fits every distance and assembles the offset-subtracted shift curve.
pub fn build_shift_curve(
    state: RydbergState,
    scans: &[DistanceScan],
    offset_mode: OffsetMode,
    options: &EitFitOptions,
) -> Result<(ShiftCurve, Vec<DistanceFit>), AnalysisError> {
    if scans.len() < 3 {
        return Err(AnalysisError::TooFewDistances { needed: 3, got: scans.len() });
    }
    if scans.iter().any(|s| !(s.z > 0.0 && s.z.is_finite())) {
        return Err(AnalysisError::InvalidInput("distances must be positive".into()));
    }
    let fits = scans
        .par_iter()
        .map(|scan| {
            let reference = fit_reference(&scan.reference)?;
            let eit = fit_eit(&scan.eit, &reference, options)?;
            Ok(DistanceFit { z: scan.z, reference, eit })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let mut fits = fits;
    fits.sort_by(|a, b| a.z.total_cmp(&b.z));

    let mut raw = Vec::new();
    let mut null_distances = Vec::new();
    for f in &fits {
        match f.eit.resonance() {
            Some(r) => raw.push((f.z, r.delta_c, r.delta_c_error.max(1e-12))),
            None => null_distances.push(f.z),
        }
    }
    let (offset, offset_error) = estimate_offset(&raw, offset_mode)?;
    let points = raw
        .iter()
        .map(|&(z, dc, err)| ShiftPoint { z, delta_c: dc - offset, error: err.hypot(offset_error), state })
        .collect();
    Ok((ShiftCurve { state, points, offset, offset_error, null_distances }, fits))
}

fn estimate_offset(raw: &[(f64, f64, f64)], mode: OffsetMode) -> Result<(f64, f64), AnalysisError> {
    let selected: Vec<&(f64, f64, f64)> = match mode {
        OffsetMode::None => return Ok((0.0, 0.0)),
        OffsetMode::Fixed { mhz } => return Ok((mhz, 0.0)),
        OffsetMode::TopQuartile => {
            if raw.is_empty() {
                return Ok((0.0, 0.0));
            }
            let mut zs: Vec<f64> = raw.iter().map(|r| r.0).collect();
            zs.sort_by(f64::total_cmp);
            let count = raw.len().div_ceil(4);
            let z_min = zs[zs.len() - count];
            raw.iter().filter(|r| r.0 >= z_min).collect()
        }
        OffsetMode::Above { z_min_um } => raw.iter().filter(|r| r.0 >= z_min_um).collect(),
    };
    if selected.is_empty() {
        return Err(AnalysisError::InvalidInput("no resonances in the offset window".into()));
    }
    let (mut sw, mut swx) = (0.0, 0.0);
    for r in &selected {
        let w = 1.0 / (r.2 * r.2);
        sw += w;
        swx += w * r.1;
    }
    Ok((swx / sw, sw.sqrt().recip()))
}

/// Field magnitude at one distance inferred from one state's shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    /// μm
    pub z: f64,
    /// V/cm
    pub field: f64,
    pub error: f64,
    pub state: RydbergState,
}

pub const ZERO_CONSISTENT_SIGMAS: f64 = 3.0;

/// Converts shift curves into field samples sorted by distance.
///
/// A shift whose sign disagrees with α but lies within
/// [`ZERO_CONSISTENT_SIGMAS`] standard errors of zero is reported as zero
/// field; a larger disagreement is an error. The error of a zero-field
/// sample is √(2σ/|α|).
pub fn collapse_to_field(curves: &[(ShiftCurve, f64)]) -> Result<Vec<FieldSample>, AnalysisError> {
    let mut out = Vec::new();
    for (curve, alpha) in curves {
        for p in &curve.points {
            let consistent_zero =
                p.delta_c.signum() != alpha.signum() && p.delta_c.abs() <= ZERO_CONSISTENT_SIGMAS * p.error;
            let dc = if consistent_zero { 0.0 } else { p.delta_c };
            let field = infer_field(dc, *alpha)?;
            let error =
                if field > 0.0 { 0.5 * field * p.error / dc.abs() } else { (2.0 * p.error / alpha.abs()).sqrt() };
            out.push(FieldSample { z: p.z, field, error, state: p.state });
        }
    }
    out.sort_by(|a, b| a.z.total_cmp(&b.z));
    Ok(out)
}
