use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::analysis::OffsetMode;
use crate::atomic::{HalfInt, RydbergState};
use crate::eit::linear_grid;
use crate::patch::{CloudAverage, PatchModel};
use crate::stark::BasisWindow;
use crate::units::RB_D2_LINEWIDTH_MHZ;

/// One Rydberg state with its |mj| hypothesis and an optional fixed α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub n: u32,
    pub l: u32,
    pub j: HalfInt,
    pub mj: HalfInt,
    /// Overrides the computed polarizability.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_mhz_per_vcm2: Option<f64>,
}

impl StateSpec {
    pub fn state(&self) -> Result<RydbergState, PipelineError> {
        RydbergState::new(self.n, self.l, self.j, self.mj).map_err(|e| PipelineError::Config(e.to_string()))
    }
}

impl From<RydbergState> for StateSpec {
    fn from(s: RydbergState) -> Self {
        StateSpec { n: s.n, l: s.l, j: s.j, mj: s.mj, alpha_mhz_per_vcm2: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGrid {
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub points: usize,
}

impl ScanGrid {
    pub fn detunings(&self) -> Vec<f64> {
        linear_grid(self.start_mhz, self.stop_mhz, self.points)
    }
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid { start_mhz: -20.0, stop_mhz: 20.0, points: 80 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    pub d0_debye_per_um2: f64,
    pub w_um: f64,
    pub sigma_y_um: f64,
}

impl PatchSpec {
    pub fn model(&self) -> PatchModel {
        PatchModel { d0: self.d0_debye_per_um2, w: self.w_um, sigma_y: self.sigma_y_um }
    }
}

impl From<PatchModel> for PatchSpec {
    fn from(m: PatchModel) -> Self {
        PatchSpec { d0_debye_per_um2: m.d0, w_um: m.w, sigma_y_um: m.sigma_y }
    }
}

/// Ground truth for synthetic spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    pub patch: PatchSpec,
    #[serde(default = "default_gamma_p")]
    pub gamma_p_mhz: f64,
    pub gamma_c_mhz: f64,
    pub omega_c_mhz: f64,
    pub od0: f64,
    /// Zero of the probe frequency axis.
    #[serde(default)]
    pub probe_offset_mhz: f64,
    /// Constant coupling-laser lock error added to every Δc.
    #[serde(default)]
    pub lock_offset_mhz: f64,
    /// Gaussian noise rms as a fraction of od0.
    #[serde(default)]
    pub noise_fraction_of_od0: f64,
    /// Average the spectrum over the field along the probe axis instead of
    /// using one cloud-averaged shift.
    #[serde(default)]
    pub inhomogeneous: bool,
    #[serde(default = "default_cloud_points")]
    pub cloud_points: usize,
}

fn default_gamma_p() -> f64 {
    RB_D2_LINEWIDTH_MHZ
}

fn default_cloud_points() -> usize {
    41
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    pub dipole_per_adatom_debye: f64,
    pub decay_rate_per_s: f64,
    pub cycle_time_s: f64,
}

impl Default for BudgetSpec {
    fn default() -> Self {
        BudgetSpec { dipole_per_adatom_debye: 10.0, decay_rate_per_s: 2e-6, cycle_time_s: 30.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub offset: OffsetMode,
    pub cloud_average: CloudAverage,
    pub initial_patch: PatchSpec,
    /// Required χ² gain (in reduced-χ² units) for an EIT dip to count.
    pub null_threshold: f64,
    pub budget: BudgetSpec,
    /// Distance at which the n scaling of the modelled shift is evaluated.
    pub scaling_z_um: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            offset: OffsetMode::TopQuartile,
            cloud_average: CloudAverage::Magnitude,
            initial_patch: PatchSpec { d0_debye_per_um2: 3e5, w_um: 70.0, sigma_y_um: 130.0 },
            null_threshold: 25.0,
            budget: BudgetSpec::default(),
            scaling_z_um: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Quantum-defect table; the shipped ⁸⁷Rb table when absent.
    pub defects: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths { data_dir: PathBuf::from("data"), out_dir: PathBuf::from("out"), defects: None }
    }
}

/// Complete description of one synthetic or analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub states: Vec<StateSpec>,
    pub z_um: Vec<f64>,
    #[serde(default)]
    pub scan: ScanGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Truth>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delta_n")]
    pub basis_delta_n: u32,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub paths: Paths,
}

fn default_delta_n() -> u32 {
    BasisWindow::default().delta_n
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| PipelineError::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.states.is_empty() {
            return Err(PipelineError::Config("no states given".into()));
        }
        for s in &self.states {
            s.state()?;
        }
        if self.z_um.is_empty() || self.z_um.iter().any(|z| !(z.is_finite() && *z > 0.0)) {
            return Err(PipelineError::Config("z_um must be a nonempty list of positive distances".into()));
        }
        let mut zs = self.z_um.clone();
        zs.sort_by(f64::total_cmp);
        if zs.windows(2).any(|w| w[0] == w[1]) {
            return Err(PipelineError::Config("duplicate distances in z_um".into()));
        }
        if self.scan.points < 2
            || self.scan.stop_mhz.is_nan()
            || self.scan.start_mhz.is_nan()
            || self.scan.stop_mhz <= self.scan.start_mhz
        {
            return Err(PipelineError::Config("scan needs stop_mhz > start_mhz and at least 2 points".into()));
        }
        if let Some(t) = &self.truth {
            t.patch.model().validate().map_err(|e| PipelineError::Config(e.to_string()))?;
            if t.cloud_points == 0 || t.noise_fraction_of_od0 < 0.0 {
                return Err(PipelineError::Config("cloud_points must be positive and noise non-negative".into()));
            }
        }
        self.analysis.initial_patch.model().validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn window(&self) -> BasisWindow {
        BasisWindow::with_delta_n(self.basis_delta_n)
    }

    /// Example configuration with the patch parameters and probe scan used
    /// for the reference data set.
    pub fn example() -> Self {
        let spec = |n, l, j: f64, mj: f64| StateSpec {
            n,
            l,
            j: HalfInt::from_f64(j).unwrap_or(HalfInt::from_twice(1)),
            mj: HalfInt::from_f64(mj).unwrap_or(HalfInt::from_twice(1)),
            alpha_mhz_per_vcm2: None,
        };
        RunConfig {
            states: vec![
                spec(23, 0, 0.5, 0.5),
                spec(26, 0, 0.5, 0.5),
                spec(22, 2, 1.5, 1.5),
                spec(27, 2, 2.5, 0.5),
                spec(30, 2, 2.5, 0.5),
            ],
            z_um: vec![20.0, 30.0, 45.0, 65.0, 90.0, 120.0, 160.0, 200.0],
            scan: ScanGrid::default(),
            truth: Some(Truth {
                patch: PatchSpec { d0_debye_per_um2: 7e5, w_um: 100.0, sigma_y_um: 130.0 },
                gamma_p_mhz: RB_D2_LINEWIDTH_MHZ,
                gamma_c_mhz: 0.61,
                omega_c_mhz: 3.0,
                od0: 1.2,
                probe_offset_mhz: 0.0,
                lock_offset_mhz: 0.0,
                noise_fraction_of_od0: 0.05,
                inhomogeneous: false,
                cloud_points: 41,
            }),
            seed: 1,
            basis_delta_n: 20,
            analysis: AnalysisConfig { offset: OffsetMode::None, ..AnalysisConfig::default() },
            paths: Paths::default(),
        }
    }
}
