//! Synthetic experiment: patch field → Δc(z) through α → EIT scans.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, Truth};
use super::io::{write_json, write_spectrum_csv};
use super::{load_defects, PipelineError};
use crate::atomic::RydbergState;
use crate::eit::{averaged_spectrum, spectrum, EITParams, Noise, Spectrum};
use crate::patch::{cloud_averaged_field, offaxis_field, CloudAverage, PatchModel};
use crate::stark::polarizability;

pub const MANIFEST: &str = "manifest.json";

/// Known values behind one synthetic scan pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryTruth {
    /// Cloud-averaged |E| (V/cm).
    pub field_v_per_cm: f64,
    /// Weighted mean Stark shift over the cloud, without the lock offset (MHz).
    pub delta_c_mhz: f64,
    /// Shift at the cloud centre (MHz).
    pub delta_c_peak_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub state: RydbergState,
    pub alpha_mhz_per_vcm2: f64,
    pub z_um: f64,
    /// Paths relative to the manifest directory.
    pub reference_csv: PathBuf,
    pub eit_csv: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<EntryTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Truth>,
    pub entries: Vec<ManifestEntry>,
}

/// SplitMix64 finalizer; decorrelates the per-scan seeds.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn scan_seed(seed: u64, state: usize, z: usize, kind: u64) -> u64 {
    mix(mix(mix(seed) ^ state as u64) ^ ((z as u64) << 8 | kind))
}

pub fn state_label(s: &RydbergState) -> String {
    format!("{}{}_j{}-2_mj{}-2", s.n, crate::atomic::orbital_letter(s.l), s.j.twice(), s.mj.abs().twice())
}

/// (|E|, weight) samples of the field along the probe axis at x = 0.
fn field_profile(z: f64, model: &PatchModel, points: usize) -> Result<Vec<(f64, f64)>, PipelineError> {
    if model.sigma_y == 0.0 || points == 1 {
        return Ok(vec![(cloud_averaged_field(z, model, CloudAverage::Magnitude)?, 1.0)]);
    }
    let half = 4.0;
    (0..points)
        .map(|k| {
            let u = -half + 2.0 * half * k as f64 / (points - 1) as f64;
            let e = offaxis_field(0.0, model.sigma_y * u, z, model)?.magnitude();
            Ok((e, (-0.5 * u * u).exp()))
        })
        .collect()
}

struct Job {
    si: usize,
    zi: usize,
    state: RydbergState,
    alpha: f64,
    z: f64,
}

/// Writes one reference and one EIT scan per (state, z) plus the manifest
/// into `out_dir`. Identical configs give byte-identical files.
pub fn synth_experiment(config: &RunConfig, out_dir: &Path) -> Result<Manifest, PipelineError> {
    config.validate()?;
    let truth = config.truth.ok_or_else(|| PipelineError::Config("synth needs a truth section".into()))?;
    let defects = load_defects(config)?;
    let model = truth.patch.model();
    let grid = config.scan.detunings();

    let mut jobs = Vec::new();
    for (si, spec) in config.states.iter().enumerate() {
        let state = spec.state()?;
        let alpha = match spec.alpha_mhz_per_vcm2 {
            Some(a) => a,
            None => polarizability(&state, &defects, &config.window())?.value,
        };
        for (zi, &z) in config.z_um.iter().enumerate() {
            jobs.push(Job { si, zi, state, alpha, z });
        }
    }

    let base = EITParams {
        gamma_p: truth.gamma_p_mhz,
        gamma_c: truth.gamma_c_mhz,
        delta_c: 0.0,
        omega_c: truth.omega_c_mhz,
        od0: truth.od0,
        offset: truth.probe_offset_mhz,
    };
    let rms = truth.noise_fraction_of_od0 * truth.od0;
    let noise = |seed| (rms > 0.0).then_some(Noise { rms, seed });

    let generated = jobs
        .par_iter()
        .map(|job| -> Result<(ManifestEntry, Spectrum, Spectrum), PipelineError> {
            let profile = field_profile(job.z, &model, if truth.inhomogeneous { truth.cloud_points } else { 1 })?;
            let wsum: f64 = profile.iter().map(|p| p.1).sum();
            let shifts: Vec<(f64, f64)> =
                profile.iter().map(|&(e, w)| (0.5 * job.alpha * e * e + truth.lock_offset_mhz, w)).collect();
            let mean_shift = shifts.iter().map(|s| s.0 * s.1).sum::<f64>() / wsum - truth.lock_offset_mhz;
            let peak = onaxis_shift(job.z, &model, job.alpha)?;
            let field = cloud_averaged_field(job.z, &model, CloudAverage::Magnitude)?;

            let reference = spectrum(
                &EITParams::reference(base.gamma_p, base.od0, base.offset),
                &grid,
                noise(scan_seed(config.seed, job.si, job.zi, 0)),
                job.z,
            )?;
            let eit = if truth.inhomogeneous {
                averaged_spectrum(&base, &shifts, &grid, noise(scan_seed(config.seed, job.si, job.zi, 1)), job.z)?
            } else {
                let p = EITParams { delta_c: shifts[0].0, ..base };
                spectrum(&p, &grid, noise(scan_seed(config.seed, job.si, job.zi, 1)), job.z)?
            };
            let label = format!("{}_z{}", state_label(&job.state), job.z);
            let entry = ManifestEntry {
                state: job.state,
                alpha_mhz_per_vcm2: job.alpha,
                z_um: job.z,
                reference_csv: PathBuf::from("spectra").join(format!("{label}_reference.csv")),
                eit_csv: PathBuf::from("spectra").join(format!("{label}_eit.csv")),
                truth: Some(EntryTruth { field_v_per_cm: field, delta_c_mhz: mean_shift, delta_c_peak_mhz: peak }),
            };
            Ok((entry, reference, eit))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut entries = Vec::with_capacity(generated.len());
    for (entry, reference, eit) in generated {
        write_spectrum_csv(&out_dir.join(&entry.reference_csv), &reference)?;
        write_spectrum_csv(&out_dir.join(&entry.eit_csv), &eit)?;
        entries.push(entry);
    }
    let manifest = Manifest { seed: config.seed, truth: Some(truth), entries };
    write_json(&out_dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

fn onaxis_shift(z: f64, model: &PatchModel, alpha: f64) -> Result<f64, PipelineError> {
    let e = crate::patch::onaxis_field(z, model)?;
    Ok(0.5 * alpha * e * e)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, PipelineError> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Parse(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_per_scan() {
        let a = scan_seed(1, 0, 0, 0);
        assert_ne!(a, scan_seed(1, 0, 0, 1));
        assert_ne!(a, scan_seed(1, 1, 0, 0));
        assert_ne!(a, scan_seed(1, 0, 1, 0));
        assert_ne!(a, scan_seed(2, 0, 0, 0));
    }

    #[test]
    fn labels_are_file_safe() {
        let s = RydbergState::from_f64(27, 2, 2.5, -0.5).unwrap();
        assert_eq!(state_label(&s), "27d_j5-2_mj1-2");
    }
}
