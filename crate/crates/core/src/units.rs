//! Physical constants and unit conversions shared by every module.
//!
//! Atomic-structure code works in Hartree atomic units. Everything at the
//! public interface uses laboratory units: MHz for frequencies, V/cm for
//! fields, μm for distances and Debye for dipole moments.
//!
//! Values are CODATA 2018 (exact SI definitions where applicable).

/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Bohr radius (m).
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Hartree energy (J).
pub const HARTREE_ENERGY: f64 = 4.359_744_722_207_1e-18;
/// Rydberg frequency R∞·c (Hz).
pub const RYDBERG_FREQUENCY_HZ: f64 = 3.289_841_960_250_8e15;
/// Electron mass in unified atomic mass units.
pub const ELECTRON_MASS_U: f64 = 5.485_799_090_65e-4;
/// Atomic mass of ⁸⁷Rb (u).
pub const RB87_MASS_U: f64 = 86.909_180_531;
/// One Debye, 10⁻²¹/c C·m.
pub const DEBYE: f64 = 1.0e-21 / SPEED_OF_LIGHT;

/// Natural linewidth Γ/2π of the Rb D2 line (5s₁/₂ → 5p₃/₂), in MHz.
pub const RB_D2_LINEWIDTH_MHZ: f64 = 6.0666;

/// Hartree energy expressed as a frequency (MHz).
pub const HARTREE_MHZ: f64 = HARTREE_ENERGY / PLANCK * 1e-6;

/// Atomic unit of electric field, E_h/(e a0), in V/cm.
pub const ATOMIC_FIELD_V_PER_CM: f64 = HARTREE_ENERGY / (ELEMENTARY_CHARGE * BOHR_RADIUS) * 1e-2;

/// Interaction energy (MHz) of a 1 e·a0 dipole in a 1 V/cm field.
pub const EA0_VCM_MHZ: f64 = ELEMENTARY_CHARGE * BOHR_RADIUS * 1e2 / PLANCK * 1e-6;

/// Rydberg frequency of ⁸⁷Rb corrected for the finite nuclear mass (MHz).
pub fn rydberg_rb87_mhz() -> f64 {
    RYDBERG_FREQUENCY_HZ * 1e-6 / (1.0 + ELECTRON_MASS_U / RB87_MASS_U)
}

/// Infinite-mass Rydberg frequency (MHz); half a Hartree.
pub fn rydberg_infinity_mhz() -> f64 {
    RYDBERG_FREQUENCY_HZ * 1e-6
}

pub fn debye_to_si(debye: f64) -> f64 {
    debye * DEBYE
}

pub fn si_to_debye(coulomb_metre: f64) -> f64 {
    coulomb_metre / DEBYE
}

pub fn vcm_to_atomic(field_v_per_cm: f64) -> f64 {
    field_v_per_cm / ATOMIC_FIELD_V_PER_CM
}

pub fn atomic_to_vcm(field_au: f64) -> f64 {
    field_au * ATOMIC_FIELD_V_PER_CM
}

pub fn hartree_to_mhz(energy_au: f64) -> f64 {
    energy_au * HARTREE_MHZ
}

pub fn mhz_to_hartree(freq_mhz: f64) -> f64 {
    freq_mhz / HARTREE_MHZ
}

/// Converts an atomic-unit polarizability (e² a0² / E_h) into MHz/(V/cm)².
pub fn polarizability_au_to_mhz_vcm2(alpha_au: f64) -> f64 {
    alpha_au * EA0_VCM_MHZ * EA0_VCM_MHZ / HARTREE_MHZ
}

/// Field scale d0/(2 w ε0) of a dipole sheet, in V/cm, for a dipole
/// density in Debye/μm² and a length in μm.
pub fn dipole_sheet_field_vcm(d0_debye_per_um2: f64, w_um: f64) -> f64 {
    let density_si = debye_to_si(d0_debye_per_um2) / 1e-12; // C·m / m² = C/m
    let field_si = density_si / (2.0 * w_um * 1e-6 * EPSILON_0);
    field_si * 1e-2
}
