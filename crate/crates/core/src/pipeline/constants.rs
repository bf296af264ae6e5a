//! Self-check of the shipped constants and unit conversions.

use serde::Serialize;

use crate::atomic::QuantumDefectTable;
use crate::units::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantCheck {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub relative_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub checks: Vec<ConstantCheck>,
}

impl ConstantsReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Tolerance for every definition and round-trip check.
pub const CONSTANTS_TOLERANCE: f64 = 1e-10;

fn check(name: &str, value: f64, expected: f64) -> ConstantCheck {
    let relative_error = if expected == 0.0 { value.abs() } else { (value / expected - 1.0).abs() };
    ConstantCheck { name: name.into(), value, expected, relative_error, passed: relative_error <= CONSTANTS_TOLERANCE }
}

pub fn validate_constants() -> ConstantsReport {
    let mut checks = vec![
        check("debye round trip", si_to_debye(debye_to_si(7.25)), 7.25),
        check("V/cm to atomic field round trip", atomic_to_vcm(vcm_to_atomic(3.7)), 3.7),
        check("MHz to hartree round trip", hartree_to_mhz(mhz_to_hartree(1234.5)), 1234.5),
        check("hartree = 2 Ry", HARTREE_MHZ, 2.0 * rydberg_infinity_mhz()),
        check("debye = 1e-21/c", DEBYE * SPEED_OF_LIGHT, 1e-21),
        // ε0 = e²/(2 α h c) with α from a0 = ħ/(α m_e c) is circular; use
        // E_h = e²/(4π ε0 a0) instead
        check(
            "epsilon_0 from hartree and bohr radius",
            EPSILON_0,
            ELEMENTARY_CHARGE.powi(2) / (4.0 * std::f64::consts::PI * HARTREE_ENERGY * BOHR_RADIUS),
        ),
        check("atomic field unit", ATOMIC_FIELD_V_PER_CM, 5.142_206_747_63e9),
        check("e·a0·(1 V/cm) in MHz", EA0_VCM_MHZ, ELEMENTARY_CHARGE * BOHR_RADIUS * 100.0 / PLANCK / 1e6),
        check("Rb D2 linewidth (MHz)", RB_D2_LINEWIDTH_MHZ, 6.0666),
        check("shipped Rb87 Rydberg constant", QuantumDefectTable::rubidium87().rydberg_mhz(), rydberg_rb87_mhz()),
    ];
    // Debye/μm² over μm → V/cm: 1 D/μm² = 3.33564e-30 C·m / 1e-12 m²
    let sheet = 1e-21 / SPEED_OF_LIGHT / 1e-12 / (2.0 * 1e-6 * EPSILON_0) / 100.0;
    checks.push(check("dipole sheet field scale", dipole_sheet_field_vcm(1.0, 1.0), sheet));
    ConstantsReport { checks }
}
