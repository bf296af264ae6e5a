//! Single-valence-electron atomic structure in the Coulomb approximation:
//! quantum-defect energies, radial functions, and dipole matrix elements.
//!
//! Lengths are in Bohr radii and dipoles in e·a0. Energies are returned as
//! frequencies in MHz relative to the ionization threshold.

mod angular;
mod defects;
mod radial;
mod state;

use thiserror::Error;

pub use angular::{wigner3j, wigner6j};
pub use defects::{QuantumDefectTable, SeriesDefect};
pub use radial::{inner_turning_point, RadialGrid, RadialWavefunction};
pub use state::{orbital_letter, HalfInt, RydbergState};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AtomicError {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("no quantum defect for series l = {l}, j = {j}")]
    MissingSeries { l: u32, j: HalfInt },
    #[error("unsupported state: {0}")]
    UnsupportedState(String),
    #[error("dipole selection rule violated: {0}")]
    SelectionRule(String),
    #[error("invalid radial grid: {0}")]
    InvalidGrid(String),
    #[error("quantum defect file, line {line}: {message}")]
    DefectFile { line: usize, message: String },
}

/// Rydberg–Ritz effective quantum number ν = n − δ(n).
pub fn effective_n(state: &RydbergState, defects: &QuantumDefectTable) -> Result<f64, AtomicError> {
    series_effective_n(state.n, state.l, state.j, defects)
}

pub(crate) fn series_effective_n(n: u32, l: u32, j: HalfInt, defects: &QuantumDefectTable) -> Result<f64, AtomicError> {
    let nu = n as f64 - defects.series(l, j)?.at(n);
    if nu.is_nan() || nu <= 0.0 {
        return Err(AtomicError::UnsupportedState(format!("n = {n}, l = {l}: effective quantum number {nu} ≤ 0")));
    }
    Ok(nu)
}

/// Level energy −Ry/ν² in MHz.
pub fn energy_level(state: &RydbergState, defects: &QuantumDefectTable) -> Result<f64, AtomicError> {
    let nu = effective_n(state, defects)?;
    Ok(-defects.rydberg_mhz() / (nu * nu))
}

pub fn radial_wavefunction(
    state: &RydbergState,
    defects: &QuantumDefectTable,
    grid: &RadialGrid,
) -> Result<RadialWavefunction, AtomicError> {
    let nu = effective_n(state, defects)?;
    RadialWavefunction::coulomb(nu, state.l, grid)
}

/// Radial integral ⟨a| r |b⟩ (Bohr radii) for dipole-coupled series.
pub fn radial_matrix_element(
    a: &RydbergState,
    b: &RydbergState,
    defects: &QuantumDefectTable,
    grid: &RadialGrid,
) -> Result<f64, AtomicError> {
    if a.l.abs_diff(b.l) != 1 {
        return Err(AtomicError::SelectionRule(format!("|Δl| = {} between {a} and {b}", a.l.abs_diff(b.l))));
    }
    let wa = radial_wavefunction(a, defects, grid)?;
    let wb = radial_wavefunction(b, defects, grid)?;
    wa.overlap_moment(&wb, 1)
}

/// Angular factor of ⟨l j mj| z |l' j' mj'⟩ in units of the radial integral.
///
/// Zero outside Δl = ±1, |Δj| ≤ 1, Δmj = 0.
pub fn dipole_z_angular(l: u32, j: HalfInt, mj: HalfInt, lp: u32, jp: HalfInt, mjp: HalfInt) -> f64 {
    if mj != mjp || l.abs_diff(lp) != 1 {
        return 0.0;
    }
    let one = HalfInt::from_int(1);
    let half = HalfInt::HALF;
    let (hl, hlp) = (HalfInt::from_int(l as i32), HalfInt::from_int(lp as i32));
    let three_j = wigner3j(j, one, jp, -mj, HalfInt::ZERO, mjp);
    if three_j == 0.0 {
        return 0.0;
    }
    // ⟨l j || r || l' j'⟩ / R = (−1)^{l+s+j'+1} √((2j+1)(2j'+1)) {l j s; j' l' 1} ⟨l||C1||l'⟩
    let six_j = wigner6j(hl, j, half, jp, hlp, one);
    let c1 = parity(l as i32)
        * (((2 * l + 1) * (2 * lp + 1)) as f64).sqrt()
        * wigner3j(hl, one, hlp, HalfInt::ZERO, HalfInt::ZERO, HalfInt::ZERO);
    let reduced = parity((2 * l as i32 + 1 + jp.twice()) / 2 + 1)
        * (((j.twice() + 1) * (jp.twice() + 1)) as f64).sqrt()
        * six_j
        * c1;
    parity((j.twice() - mj.twice()) / 2) * three_j * reduced
}

fn parity(k: i32) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// ⟨a| z |b⟩ in e·a0 for a field along the quantization axis.
pub fn dipole_z_matrix_element(
    a: &RydbergState,
    b: &RydbergState,
    defects: &QuantumDefectTable,
    grid: &RadialGrid,
) -> Result<f64, AtomicError> {
    let angular = dipole_z_angular(a.l, a.j, a.mj, b.l, b.j, b.mj);
    if angular == 0.0 {
        return Ok(0.0);
    }
    Ok(angular * radial_matrix_element(a, b, defects, grid)?)
}
