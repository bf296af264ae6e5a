//! Electric field of a Gaussian patch of surface dipoles.
//!
//! A dipole density D(ρ) = d0·exp(−ρ²/2w²), oriented along the surface
//! normal, produces above the surface (Z = z/w)
//!
//! ```text
//! E_z(ρ, z) = d0/(2wε0) ∫₀^∞ t² e^{−t²/2 − Zt} J0(tρ/w) dt
//! E_ρ(ρ, z) = d0/(2wε0) ∫₀^∞ t² e^{−t²/2 − Zt} J1(tρ/w) dt
//! ```
//!
//! On the axis the first integral has the closed form
//! −Z + (1 + Z²)·√(π/2)·erfcx(Z/√2).

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::FieldSample;
use crate::lsq::{lm_fit, log_log_slope, Bound, FitError, FitProblem};
use crate::quad::{integrate, QuadError, Tolerance};
use crate::special::erfcx;
use crate::units::dipole_sheet_field_vcm;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PatchError {
    #[error("invalid patch model: {0}")]
    InvalidModel(String),
    #[error("distance must be positive, got z = {0} μm")]
    InvalidDistance(f64),
    #[error("field quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("{0}")]
    InvalidInput(String),
}

/// Gaussian dipole patch and the probe-axis extent of the atom cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchModel {
    /// Peak dipole density (Debye/μm²).
    pub d0: f64,
    /// e^{−1/2} patch radius (μm).
    pub w: f64,
    /// e^{−1/2} cloud radius along the probe axis (μm).
    pub sigma_y: f64,
}

impl PatchModel {
    pub fn validate(&self) -> Result<(), PatchError> {
        if !(self.d0.is_finite() && self.d0 >= 0.0) {
            return Err(PatchError::InvalidModel(format!("d0 must be finite and non-negative, got {}", self.d0)));
        }
        if !(self.w.is_finite() && self.w > 0.0) {
            return Err(PatchError::InvalidModel(format!("w must be positive, got {}", self.w)));
        }
        if !(self.sigma_y.is_finite() && self.sigma_y >= 0.0) {
            return Err(PatchError::InvalidModel(format!("sigma_y must be non-negative, got {}", self.sigma_y)));
        }
        Ok(())
    }

    /// Field scale d0/(2wε0) in V/cm.
    pub fn prefactor(&self) -> f64 {
        dipole_sheet_field_vcm(self.d0, self.w)
    }

    /// Total dipole moment 2πw²d0 (Debye).
    pub fn total_moment(&self) -> f64 {
        2.0 * PI * self.w * self.w * self.d0
    }
}

/// Z at which `bracket` switches to its asymptotic series.
const SERIES_SWITCH: f64 = 12.0;

/// ∫₀^∞ t² e^{−t²/2 − Zt} dt for Z ≥ 0.
pub fn bracket(z: f64) -> f64 {
    if z >= SERIES_SWITCH {
        // Σ (−1)^k (2k+2)!/(2^k k!) Z^{−2k−3}
        let inv2 = 1.0 / (z * z);
        let mut term = 2.0 / (z * z * z);
        let mut sum = term;
        for k in 0..30u32 {
            let kf = k as f64;
            let next = -term * (2.0 * kf + 3.0) * (2.0 * kf + 4.0) / (2.0 * (kf + 1.0)) * inv2;
            if next.abs() >= term.abs() {
                break;
            }
            sum += next;
            term = next;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    -z + (1.0 + z * z) * (PI / 2.0).sqrt() * erfcx(z * FRAC_1_SQRT_2)
}

fn check_z(z: f64) -> Result<(), PatchError> {
    if !(z.is_finite() && z >= 0.0) {
        return Err(PatchError::InvalidDistance(z));
    }
    Ok(())
}

/// E_z on the patch axis at height `z` (μm), in V/cm.
pub fn onaxis_field(z: f64, model: &PatchModel) -> Result<f64, PatchError> {
    model.validate()?;
    check_z(z)?;
    Ok(model.prefactor() * bracket(z / model.w))
}

/// Cartesian field components in V/cm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FieldVector {
    pub fn magnitude(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

const HANKEL_TOLERANCE: f64 = 1e-10;
/// e^{−t²/2} < 1e-31 beyond this.
const HANKEL_CUTOFF: f64 = 12.0;

/// Dimensionless (E_z, E_ρ)/prefactor at reduced coordinates (Z, ρ/w).
fn hankel_components(zr: f64, rho: f64) -> Result<(f64, f64), PatchError> {
    if rho == 0.0 {
        return Ok((bracket(zr), 0.0));
    }
    let tol = Tolerance { abs: 1e-300, rel: HANKEL_TOLERANCE, max_intervals: 4000 };
    let weight = |t: f64| t * t * (-0.5 * t * t - zr * t).exp();
    let ez = integrate(|t| weight(t) * libm::j0(t * rho), 0.0, HANKEL_CUTOFF, tol)?;
    let er = integrate(|t| weight(t) * libm::j1(t * rho), 0.0, HANKEL_CUTOFF, tol)?;
    Ok((ez.value, er.value))
}

/// Field vector at (x, y, z) μm, with the patch centred at the origin.
pub fn offaxis_field(x: f64, y: f64, z: f64, model: &PatchModel) -> Result<FieldVector, PatchError> {
    model.validate()?;
    if !(z.is_finite() && z > 0.0) {
        return Err(PatchError::InvalidDistance(z));
    }
    if !(x.is_finite() && y.is_finite()) {
        return Err(PatchError::InvalidInput("non-finite lateral position".into()));
    }
    let rho = x.hypot(y);
    let (ez, er) = hankel_components(z / model.w, rho / model.w)?;
    let pf = model.prefactor();
    let (cx, cy) = if rho > 0.0 { (x / rho, y / rho) } else { (0.0, 0.0) };
    Ok(FieldVector { x: pf * er * cx, y: pf * er * cy, z: pf * ez })
}

/// How the field is weighted over the cloud along the probe axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CloudAverage {
    /// ⟨|E|⟩
    #[default]
    Magnitude,
    /// √⟨E²⟩, the field equivalent of the mean quadratic shift.
    Rms,
}

/// Gaussian-weighted average of the field along y at x = 0, in V/cm.
pub fn cloud_averaged_field(z: f64, model: &PatchModel, mode: CloudAverage) -> Result<f64, PatchError> {
    model.validate()?;
    if !(z.is_finite() && z > 0.0) {
        return Err(PatchError::InvalidDistance(z));
    }
    if model.sigma_y == 0.0 {
        return onaxis_field(z, model);
    }
    let s = model.sigma_y;
    let zr = z / model.w;
    let mut failure = None;
    // y = s·u, Gaussian weight e^{−u²/2}/√(2π), even in u
    let integrand = |u: f64| {
        let rho = s * u / model.w;
        match hankel_components(zr, rho) {
            Ok((ez, er)) => {
                let e2 = ez * ez + er * er;
                let g = (-0.5 * u * u).exp();
                match mode {
                    CloudAverage::Magnitude => g * e2.sqrt(),
                    CloudAverage::Rms => g * e2,
                }
            }
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        }
    };
    let result = integrate(integrand, 0.0, 9.0, Tolerance { abs: 1e-300, rel: 1e-9, max_intervals: 500 });
    if let Some(e) = failure {
        return Err(e);
    }
    let mean = 2.0 * result?.value / (2.0 * PI).sqrt();
    let pf = model.prefactor();
    Ok(match mode {
        CloudAverage::Magnitude => pf * mean,
        CloudAverage::Rms => pf * mean.sqrt(),
    })
}

/// Result of fitting (d0, w) to field samples with σy held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchFit {
    pub model: PatchModel,
    pub d0_error: f64,
    pub w_error: f64,
    pub correlation: f64,
    pub chi2: f64,
    pub reduced_chi2: f64,
    pub samples: usize,
    pub converged: bool,
    /// Distances span less than a factor 3, or (d0, w) are nearly degenerate.
    pub ill_conditioned: bool,
    /// χ² is improbably large for the model (reduced χ² beyond 1 + 3√(2/dof)).
    pub poor_fit: bool,
}

/// Least-squares fit of the cloud-averaged patch field to `samples`.
pub fn fit_patch(samples: &[FieldSample], initial: &PatchModel, mode: CloudAverage) -> Result<PatchFit, PatchError> {
    initial.validate()?;
    if samples.len() < 4 {
        return Err(PatchError::InvalidInput(format!("need at least 4 field samples, got {}", samples.len())));
    }
    if samples.iter().any(|s| !(s.z > 0.0 && s.field.is_finite() && s.error > 0.0)) {
        return Err(PatchError::InvalidInput("samples need z > 0, finite field and positive error".into()));
    }
    let z: Vec<f64> = samples.iter().map(|s| s.z).collect();
    let e: Vec<f64> = samples.iter().map(|s| s.field).collect();
    let sig: Vec<f64> = samples.iter().map(|s| s.error).collect();
    let (zmin, zmax) = z.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let narrow = zmax < 3.0 * zmin;

    let sigma_y = initial.sigma_y;
    // the field is linear in d0; cache the unit-density profile per (w, z)
    let cache: Mutex<HashMap<(u64, u64), f64>> = Mutex::new(HashMap::new());
    let model = |p: &[f64], zi: f64| {
        let key = (p[1].to_bits(), zi.to_bits());
        let hit = cache.lock().ok().and_then(|c| c.get(&key).copied());
        let unit = hit.unwrap_or_else(|| {
            let m = PatchModel { d0: 1.0, w: p[1], sigma_y };
            let v = cloud_averaged_field(zi, &m, mode).unwrap_or(f64::NAN);
            if let Ok(mut c) = cache.lock() {
                c.insert(key, v);
            }
            v
        });
        p[0] * unit
    };
    let d0_start = if initial.d0 > 0.0 { initial.d0 } else { 1.0 };
    let problem = FitProblem::new(&model, &z, &e, vec![d0_start, initial.w])
        .with_sigma(&sig)
        .with_bounds(vec![Bound::non_negative(), Bound::new(1e-3 * initial.w, 1e3 * initial.w)]);
    let fit = lm_fit(&problem)?;
    let err = fit.errors();
    let c = &fit.covariance;
    let correlation = c[(0, 1)] / (c[(0, 0)] * c[(1, 1)]).sqrt();
    let dof = fit.dof();
    let reduced = fit.reduced_chi2();
    let poor_fit = dof > 0 && reduced > 1.0 + 3.0 * (2.0 / dof as f64).sqrt();
    let degenerate = !correlation.is_finite() || correlation.abs() > 0.999 || err.iter().any(|v| !v.is_finite());
    Ok(PatchFit {
        model: PatchModel { d0: fit.params[0], w: fit.params[1], sigma_y },
        d0_error: err[0],
        w_error: err[1],
        correlation,
        chi2: fit.chi2,
        reduced_chi2: reduced,
        samples: samples.len(),
        converged: fit.converged,
        ill_conditioned: narrow || degenerate,
        poor_fit,
    })
}

/// Log-log slope of field against distance for (z, |E|) pairs.
pub fn power_law_exponent(points: &[(f64, f64)]) -> Result<f64, PatchError> {
    let (zs, es): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    Ok(log_log_slope(&zs, &es)?)
}

/// Slope of the cloud-averaged model field over `points` log-spaced
/// distances between `z_lo` and `z_hi`.
pub fn model_power_law_exponent(
    model: &PatchModel,
    z_lo: f64,
    z_hi: f64,
    points: usize,
    mode: CloudAverage,
) -> Result<f64, PatchError> {
    if !(z_lo > 0.0 && z_hi > z_lo && points >= 2) {
        return Err(PatchError::InvalidInput("need 0 < z_lo < z_hi and at least 2 points".into()));
    }
    let pts = log_spaced(z_lo, z_hi, points)
        .into_iter()
        .map(|z| cloud_averaged_field(z, model, mode).map(|e| (z, e)))
        .collect::<Result<Vec<_>, _>>()?;
    power_law_exponent(&pts)
}

pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points).map(|k| lo * (hi / lo).powf(k as f64 / (points - 1) as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdsorbateBudget {
    pub total: f64,
    pub per_shot: f64,
}

/// Number of adsorbates 2πw²d0/p, and the steady-state number deposited per
/// experimental cycle for a fractional decay rate (1/s) and cycle time (s).
pub fn adsorbate_budget(
    model: &PatchModel,
    dipole_per_adatom: f64,
    decay_rate_per_s: f64,
    cycle_time_s: f64,
) -> Result<AdsorbateBudget, PatchError> {
    model.validate()?;
    if !(dipole_per_adatom.is_finite() && dipole_per_adatom > 0.0) {
        return Err(PatchError::InvalidInput(format!("dipole per adatom must be positive, got {dipole_per_adatom}")));
    }
    if !(decay_rate_per_s >= 0.0 && cycle_time_s >= 0.0) {
        return Err(PatchError::InvalidInput("decay rate and cycle time must be non-negative".into()));
    }
    let total = model.total_moment() / dipole_per_adatom;
    Ok(AdsorbateBudget { total, per_shot: total * decay_rate_per_s * cycle_time_s })
}
