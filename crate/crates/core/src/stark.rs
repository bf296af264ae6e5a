//! Second-order dc Stark polarizabilities of fine-structure Rydberg levels.
//!
//! # Sign convention
//!
//! The stored value α is the textbook polarizability: a static field of
//! magnitude E moves the Rydberg level by ΔW = −αE²/2. In the ladder-EIT
//! model the transparency dip sits at probe detuning Δp = −Δc, so the
//! fitted coupling detuning is Δc = −ΔW = αE²/2. Δc and α therefore carry
//! the same sign and the field magnitude is √(2Δc/α).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atomic::{
    dipole_z_angular, energy_level, radial_wavefunction, AtomicError, HalfInt, QuantumDefectTable, RadialGrid,
    RadialWavefunction, RydbergState,
};
use crate::lsq::log_log_slope;
use crate::units::EA0_VCM_MHZ;

/// Intermediate levels closer than this (MHz) make perturbation theory fail.
pub const DEGENERACY_THRESHOLD_MHZ: f64 = 10.0;

/// Accepted results must have a tail estimate below this fraction of |α|.
pub const MAX_RELATIVE_TRUNCATION: f64 = 0.01;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StarkError {
    #[error(transparent)]
    Atomic(#[from] AtomicError),
    #[error("{state} is within {gap_mhz:.3} MHz of dipole-coupled level {other}")]
    Degenerate { state: String, other: String, gap_mhz: f64 },
    #[error("basis truncation estimate {estimate:.3e} exceeds 1% of |α| = {value:.3e} for {state}")]
    Truncation { state: String, value: f64, estimate: f64 },
    #[error("{0}")]
    InvalidInput(String),
}

/// Range of intermediate principal quantum numbers n' ∈ [n − Δn, n + Δn],
/// clipped below at `n_min`. All dipole-allowed (l', j') are always included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisWindow {
    pub delta_n: u32,
    pub n_min: u32,
}

impl Default for BasisWindow {
    fn default() -> Self {
        BasisWindow { delta_n: 20, n_min: 1 }
    }
}

impl BasisWindow {
    pub fn with_delta_n(delta_n: u32) -> Self {
        BasisWindow { delta_n, ..Self::default() }
    }

    fn range(&self, n: u32, l_prime: u32) -> (u32, u32, bool) {
        let floor = self.n_min.max(l_prime + 1);
        let lo = n.saturating_sub(self.delta_n).max(floor);
        let clipped = n < self.delta_n || n - self.delta_n < floor;
        (lo, n + self.delta_n, clipped)
    }
}

/// Polarizability of one Stark component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Polarizability {
    /// α in MHz/(V/cm)²; Δc = αE²/2.
    pub value: f64,
    pub state: RydbergState,
    pub basis: BasisWindow,
    /// Contribution of the outermost n' shells (same units as `value`).
    pub truncation_estimate: f64,
}

impl Polarizability {
    /// Energy shift ΔW/E² of the level itself, −α/2.
    pub fn level_shift_coefficient(&self) -> f64 {
        -0.5 * self.value
    }
}

/// All fine-structure levels (n', l', j') that can couple to `state` through
/// the z component of the dipole, with their angular factors.
pub(crate) fn coupled_series(state: &RydbergState) -> Vec<(u32, HalfInt, f64)> {
    let mj = state.abs_mj();
    let mut out = Vec::new();
    let candidates = [state.l.checked_sub(1), Some(state.l + 1)];
    for lp in candidates.into_iter().flatten() {
        for tjp in [2 * lp as i32 - 1, 2 * lp as i32 + 1] {
            if tjp < 1 {
                continue;
            }
            let jp = HalfInt::from_twice(tjp);
            let angular = dipole_z_angular(state.l, state.j, mj, lp, jp, mj);
            if angular != 0.0 {
                out.push((lp, jp, angular));
            }
        }
    }
    out
}

/// α for `state` with the default radial grid.
pub fn polarizability(
    state: &RydbergState,
    defects: &QuantumDefectTable,
    window: &BasisWindow,
) -> Result<Polarizability, StarkError> {
    polarizability_on_grid(state, defects, window, &RadialGrid::default())
}

/// α = 2 Σ' |⟨s|d_z|k⟩|² / (E_k − E_s), summed over the basis window.
pub fn polarizability_on_grid(
    state: &RydbergState,
    defects: &QuantumDefectTable,
    window: &BasisWindow,
    grid: &RadialGrid,
) -> Result<Polarizability, StarkError> {
    let e_state = energy_level(state, defects)?;
    let wf_state = radial_wavefunction(state, defects, grid)?;
    let mut total = 0.0;
    let mut edge = 0.0;
    for (lp, jp, angular) in coupled_series(state) {
        let (lo, hi, clipped) = window.range(state.n, lp);
        for np in lo..=hi {
            let nu = np as f64 - defects.series(lp, jp)?.at(np);
            if nu <= lp as f64 + 0.5 {
                // below the physical series; no Coulomb-approximation state
                continue;
            }
            let e_k = -defects.rydberg_mhz() / (nu * nu);
            let gap = e_k - e_state;
            if gap.abs() < DEGENERACY_THRESHOLD_MHZ {
                let other = RydbergState::new(np, lp, jp, state.abs_mj()).map(|s| s.term()).unwrap_or_default();
                return Err(StarkError::Degenerate { state: state.to_string(), other, gap_mhz: gap.abs() });
            }
            let wf_k = RadialWavefunction::coulomb(nu, lp, grid)?;
            let dipole = angular * wf_state.overlap_moment(&wf_k, 1)? * EA0_VCM_MHZ;
            let term = 2.0 * dipole * dipole / gap;
            total += term;
            if np == hi || (np == lo && !clipped) {
                edge += term.abs();
            }
        }
    }
    if !total.is_finite() {
        return Err(StarkError::InvalidInput(format!("non-finite polarizability for {state}")));
    }
    if edge > MAX_RELATIVE_TRUNCATION * total.abs() {
        return Err(StarkError::Truncation { state: state.to_string(), value: total, estimate: edge });
    }
    Ok(Polarizability { value: total, state: *state, basis: *window, truncation_estimate: edge })
}

/// Coupling-detuning shift Δc = αE²/2 in MHz for a field magnitude in V/cm.
pub fn stark_shift(alpha: &Polarizability, field_v_per_cm: f64) -> f64 {
    0.5 * alpha.value * field_v_per_cm * field_v_per_cm
}

/// Scalar and tensor parts of α for one (n, l, j) level:
/// α(mj) = α0 + α2·(3mj² − j(j+1))/(j(2j − 1)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarTensor {
    pub alpha0: f64,
    pub alpha2: f64,
    pub j: HalfInt,
    /// False for j = 1/2, where no tensor part exists and `alpha2` is 0.
    pub tensor_defined: bool,
}

impl ScalarTensor {
    pub fn tensor_factor(j: HalfInt, mj: HalfInt) -> f64 {
        let jv = j.value();
        let m = mj.value();
        (3.0 * m * m - jv * (jv + 1.0)) / (jv * (2.0 * jv - 1.0))
    }

    pub fn reconstruct(&self, mj: HalfInt) -> f64 {
        if self.tensor_defined {
            self.alpha0 + self.alpha2 * Self::tensor_factor(self.j, mj)
        } else {
            self.alpha0
        }
    }
}

/// Least-squares scalar/tensor decomposition from per-|mj| values.
///
/// `components` holds (mj, α) pairs; every |mj| from 1/2 to j must appear.
pub fn scalar_tensor(j: HalfInt, components: &[(HalfInt, f64)]) -> Result<ScalarTensor, StarkError> {
    let mut needed: Vec<i32> = (1..=j.twice()).step_by(2).collect();
    needed.retain(|m| !components.iter().any(|(mj, _)| mj.twice().abs() == *m));
    if !needed.is_empty() {
        return Err(StarkError::InvalidInput(format!("missing |mj| components {needed:?} (twice values) for j = {j}")));
    }
    if components.iter().any(|(mj, _)| mj.twice().abs() > j.twice()) {
        return Err(StarkError::InvalidInput(format!("|mj| exceeds j = {j}")));
    }
    if j.twice() == 1 {
        let mean = components.iter().map(|c| c.1).sum::<f64>() / components.len() as f64;
        return Ok(ScalarTensor { alpha0: mean, alpha2: 0.0, j, tensor_defined: false });
    }
    // normal equations for [1, g] · [a0, a2]
    let (mut s1, mut sg, mut sgg, mut sy, mut sgy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(mj, y) in components {
        let g = ScalarTensor::tensor_factor(j, mj);
        s1 += 1.0;
        sg += g;
        sgg += g * g;
        sy += y;
        sgy += g * y;
    }
    let det = s1 * sgg - sg * sg;
    let alpha2 = (s1 * sgy - sg * sy) / det;
    let alpha0 = (sy - alpha2 * sg) / s1;
    Ok(ScalarTensor { alpha0, alpha2, j, tensor_defined: true })
}

/// Computes α for every |mj| of the level and decomposes the set.
pub fn level_scalar_tensor(
    n: u32,
    l: u32,
    j: HalfInt,
    defects: &QuantumDefectTable,
    window: &BasisWindow,
) -> Result<(Vec<Polarizability>, ScalarTensor), StarkError> {
    let mut per_mj = Vec::new();
    for tm in (1..=j.twice()).step_by(2) {
        let state = RydbergState::new(n, l, j, HalfInt::from_twice(tm))?;
        per_mj.push(polarizability(&state, defects, window)?);
    }
    let components: Vec<_> = per_mj.iter().map(|p| (p.state.mj, p.value)).collect();
    let st = scalar_tensor(j, &components)?;
    Ok((per_mj, st))
}

/// Exponent of |α| ∝ (n*)^k by least squares on log|α| against log n*.
///
/// `points` are (n*, α) pairs; at least five, spanning roughly ten units of n*.
pub fn scaling_exponent(points: &[(f64, f64)]) -> Result<f64, StarkError> {
    if points.len() < 5 {
        return Err(StarkError::InvalidInput(format!("need at least 5 points, got {}", points.len())));
    }
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if hi - lo < 9.9 {
        return Err(StarkError::InvalidInput(format!("n range {lo}..{hi} spans less than about 10")));
    }
    if points.iter().any(|p| p.0 <= 0.0 || p.1 == 0.0 || !p.1.is_finite()) {
        return Err(StarkError::InvalidInput("n* must be positive and α finite and nonzero".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.abs()).collect();
    log_log_slope(&xs, &ys).map_err(|e| StarkError::InvalidInput(e.to_string()))
}
