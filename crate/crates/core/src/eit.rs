//! Ladder-EIT probe susceptibility and the optical-density forward model.
//!
//! χ(Δp) = iΓp / (Γp + 2iΔp + Ωc² / (Γc + 2i(Δp + Δc)))
//!
//! is dimensionless here: at Ωc = 0 its imaginary part is a unit-height
//! Lorentzian of FWHM Γp. The optical density is od0·Im χ(Δp − offset).
//! With Γc → 0 the transparency dip sits at Δp = offset − Δc.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EitError {
    #[error("invalid EIT parameters: {0}")]
    InvalidParams(String),
    #[error("invalid detuning grid: {0}")]
    InvalidGrid(String),
    #[error("invalid shift distribution: {0}")]
    InvalidWeights(String),
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
}

/// Parameters of the three-level model; rates and frequencies in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EITParams {
    pub gamma_p: f64,
    pub gamma_c: f64,
    pub delta_c: f64,
    pub omega_c: f64,
    pub od0: f64,
    pub offset: f64,
}

impl EITParams {
    /// Two-level reference line (no coupling field).
    pub fn reference(gamma_p: f64, od0: f64, offset: f64) -> Self {
        EITParams { gamma_p, gamma_c: 0.0, delta_c: 0.0, omega_c: 0.0, od0, offset }
    }

    pub fn validate(&self) -> Result<(), EitError> {
        let all = [self.gamma_p, self.gamma_c, self.delta_c, self.omega_c, self.od0, self.offset];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(EitError::InvalidParams(format!("non-finite value in {self:?}")));
        }
        if self.gamma_p <= 0.0 {
            return Err(EitError::InvalidParams(format!("gamma_p must be positive, got {}", self.gamma_p)));
        }
        if self.gamma_c < 0.0 || self.omega_c < 0.0 || self.od0 < 0.0 {
            return Err(EitError::InvalidParams("gamma_c, omega_c and od0 must be non-negative".into()));
        }
        Ok(())
    }
}

/// χ without parameter validation; callers guarantee Γp > 0.
pub(crate) fn chi(delta_p: f64, gamma_p: f64, gamma_c: f64, delta_c: f64, omega_c: f64) -> Complex64 {
    let i = Complex64::i();
    let mut denom = Complex64::new(gamma_p, 2.0 * delta_p);
    if omega_c != 0.0 {
        let inner = Complex64::new(gamma_c, 2.0 * (delta_p + delta_c));
        if inner.norm_sqr() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        denom += omega_c * omega_c / inner;
    }
    i * gamma_p / denom
}

/// Normalized susceptibility at probe detuning `delta_p` (offset ignored).
pub fn susceptibility(delta_p: f64, p: &EITParams) -> Result<Complex64, EitError> {
    p.validate()?;
    Ok(chi(delta_p, p.gamma_p, p.gamma_c, p.delta_c, p.omega_c))
}

/// od0·Im χ(Δp − offset).
pub fn optical_density(delta_p: f64, p: &EITParams) -> Result<f64, EitError> {
    p.validate()?;
    Ok(od_unchecked(delta_p, p))
}

pub(crate) fn od_unchecked(delta_p: f64, p: &EITParams) -> f64 {
    p.od0 * chi(delta_p - p.offset, p.gamma_p, p.gamma_c, p.delta_c, p.omega_c).im
}

/// One probe scan at a fixed atom–surface distance.
///
/// A `sigma` entry of zero means the noise level of that point is unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub detunings: Vec<f64>,
    pub od: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Distance from the surface in μm.
    pub z: f64,
}

impl Spectrum {
    pub fn new(detunings: Vec<f64>, od: Vec<f64>, sigma: Vec<f64>, z: f64) -> Result<Self, EitError> {
        let s = Spectrum { detunings, od, sigma, z };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), EitError> {
        if self.detunings.len() != self.od.len() || self.od.len() != self.sigma.len() {
            return Err(EitError::InvalidSpectrum("detunings, od and sigma differ in length".into()));
        }
        check_grid(&self.detunings)?;
        if self.od.iter().any(|v| !v.is_finite()) {
            return Err(EitError::InvalidSpectrum("non-finite optical density".into()));
        }
        if self.sigma.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(EitError::InvalidSpectrum("sigma must be finite and non-negative".into()));
        }
        if !self.z.is_finite() {
            return Err(EitError::InvalidSpectrum("non-finite distance".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// Per-point σ if every point carries one.
    pub fn weights(&self) -> Option<&[f64]> {
        self.sigma.iter().all(|&s| s > 0.0).then_some(self.sigma.as_slice())
    }
}

fn check_grid(grid: &[f64]) -> Result<(), EitError> {
    if grid.is_empty() {
        return Err(EitError::InvalidGrid("empty".into()));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(EitError::InvalidGrid("non-finite detuning".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EitError::InvalidGrid("detunings must be strictly increasing".into()));
    }
    Ok(())
}

/// `points` equally spaced detunings from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect(),
    }
}

/// Additive Gaussian noise on the optical density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    /// RMS in optical-density units.
    pub rms: f64,
    pub seed: u64,
}

/// Forward-models a scan at distance `z`; noiseless unless `noise` is given.
pub fn spectrum(p: &EITParams, grid: &[f64], noise: Option<Noise>, z: f64) -> Result<Spectrum, EitError> {
    p.validate()?;
    check_grid(grid)?;
    let od: Vec<f64> = grid.iter().map(|&d| od_unchecked(d, p)).collect();
    finish(grid, od, noise, z)
}

fn finish(grid: &[f64], mut od: Vec<f64>, noise: Option<Noise>, z: f64) -> Result<Spectrum, EitError> {
    let sigma = match noise {
        Some(n) if n.rms > 0.0 => {
            if !n.rms.is_finite() {
                return Err(EitError::InvalidParams("noise rms must be finite".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(n.seed);
            let normal = Normal::new(0.0, n.rms).map_err(|e| EitError::InvalidParams(e.to_string()))?;
            for v in &mut od {
                *v += normal.sample(&mut rng);
            }
            vec![n.rms; grid.len()]
        }
        Some(n) if n.rms < 0.0 => return Err(EitError::InvalidParams("noise rms must be non-negative".into())),
        _ => vec![0.0; grid.len()],
    };
    Spectrum::new(grid.to_vec(), od, sigma, z)
}

/// OD averaged over a weighted set of coupling detunings.
///
/// `shifts` holds (Δc, weight) pairs; `p.delta_c` is ignored. Weights are
/// renormalized to unit sum.
pub fn averaged_spectrum(
    p: &EITParams,
    shifts: &[(f64, f64)],
    grid: &[f64],
    noise: Option<Noise>,
    z: f64,
) -> Result<Spectrum, EitError> {
    p.validate()?;
    check_grid(grid)?;
    if shifts.is_empty() {
        return Err(EitError::InvalidWeights("empty distribution".into()));
    }
    if shifts.iter().any(|(d, w)| !d.is_finite() || !w.is_finite() || *w < 0.0) {
        return Err(EitError::InvalidWeights("weights must be finite and non-negative".into()));
    }
    let total: f64 = shifts.iter().map(|s| s.1).sum();
    if total <= 0.0 {
        return Err(EitError::InvalidWeights("weights sum to zero".into()));
    }
    let od = grid
        .iter()
        .map(|&d| {
            shifts.iter().map(|&(dc, w)| w * od_unchecked(d, &EITParams { delta_c: dc, ..*p })).sum::<f64>() / total
        })
        .collect();
    finish(grid, od, noise, z)
}
