use proptest::prelude::*;
use rydchip::analysis::{fit_eit, fit_reference, EitFitOptions};
use rydchip::eit::{averaged_spectrum, linear_grid, optical_density, spectrum, susceptibility, EITParams, Noise};
use rydchip::patch::{offaxis_field, PatchModel};
use rydchip::stark::{polarizability, BasisWindow};
use rydchip::{QuantumDefectTable, RydbergState};

fn params() -> impl Strategy<Value = EITParams> {
    (0.5f64..20.0, 0.0f64..5.0, -15.0f64..15.0, 0.0f64..10.0, 0.0f64..3.0, -3.0f64..3.0).prop_map(
        |(gamma_p, gamma_c, delta_c, omega_c, od0, offset)| EITParams {
            gamma_p,
            gamma_c,
            delta_c,
            omega_c,
            od0,
            offset,
        },
    )
}

proptest! {
    #[test]
    fn im_chi_bounded(p in params(), dp in -50.0f64..50.0) {
        let im = susceptibility(dp, &p).unwrap().im;
        prop_assert!((-1e-15..=1.0 + 1e-15).contains(&im), "{im}");
    }

    #[test]
    fn lorentzian_without_coupling(p in params(), dp in -50.0f64..50.0) {
        let p = EITParams { omega_c: 0.0, ..p };
        let g = p.gamma_p;
        let im = susceptibility(dp, &p).unwrap().im;
        prop_assert!((im - g * g / (g * g + 4.0 * dp * dp)).abs() < 1e-12);
    }

    #[test]
    fn line_centre_value(p in params()) {
        let p = EITParams { delta_c: 0.0, ..p };
        let want = p.gamma_p * p.gamma_c / (p.gamma_p * p.gamma_c + p.omega_c * p.omega_c);
        let im = susceptibility(0.0, &p).unwrap().im;
        prop_assert!((im - want).abs() < 1e-12, "{im} vs {want}");
    }

    #[test]
    fn two_component_average_is_mean(p in params(), a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let grid = linear_grid(-20.0, 20.0, 41);
        let avg = averaged_spectrum(&p, &[(a, 1.0), (b, 1.0)], &grid, None, 1.0).unwrap();
        let sa = spectrum(&EITParams { delta_c: a, ..p }, &grid, None, 1.0).unwrap();
        let sb = spectrum(&EITParams { delta_c: b, ..p }, &grid, None, 1.0).unwrap();
        for k in 0..grid.len() {
            prop_assert!((avg.od[k] - 0.5 * (sa.od[k] + sb.od[k])).abs() < 1e-12);
        }
    }
}

#[test]
fn dip_tracks_minus_delta_c() {
    // the sloped absorption background pulls the minimum by ≈ (Γc/Γp)·Δc
    let gp = 6.07;
    for ratio in [1e-3, 1e-4] {
        for dc in [-8.0, -2.5, 0.0, 1.3, 6.0] {
            for offset in [0.0, 1.5] {
                let p = EITParams { gamma_p: gp, gamma_c: ratio * gp, delta_c: dc, omega_c: 3.0, od0: 1.0, offset };
                let centre = offset - dc;
                let grid = linear_grid(centre - 0.05, centre + 0.05, 20001);
                let (imin, _) = grid
                    .iter()
                    .map(|&d| optical_density(d, &p).unwrap())
                    .enumerate()
                    .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
                let allowed = 1.5 * ratio * dc.abs() + 1e-5;
                assert!((grid[imin] - centre).abs() <= allowed, "Δc = {dc}: dip at {}", grid[imin]);
            }
        }
    }
}

#[test]
fn seeded_noise_is_reproducible() {
    let p = EITParams { gamma_p: 6.07, gamma_c: 0.61, delta_c: 0.54, omega_c: 3.0, od0: 1.2, offset: 0.0 };
    let grid = linear_grid(-20.0, 20.0, 80);
    let a = spectrum(&p, &grid, Some(Noise { rms: 0.02, seed: 11 }), 5.0).unwrap();
    let b = spectrum(&p, &grid, Some(Noise { rms: 0.02, seed: 11 }), 5.0).unwrap();
    let c = spectrum(&p, &grid, Some(Noise { rms: 0.02, seed: 12 }), 5.0).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.od, c.od);
    let clean = spectrum(&p, &grid, None, 5.0).unwrap();
    for (k, &d) in grid.iter().enumerate() {
        assert_eq!(clean.od[k], optical_density(d, &p).unwrap());
    }
}

fn fit_dc(p: &EITParams, shifts: &[(f64, f64)]) -> (f64, f64) {
    let grid = linear_grid(-20.0, 20.0, 400);
    let reference = spectrum(&EITParams::reference(p.gamma_p, p.od0, p.offset), &grid, None, 50.0).unwrap();
    let data = averaged_spectrum(p, shifts, &grid, None, 50.0).unwrap();
    let r = fit_reference(&reference).unwrap();
    let f = *fit_eit(&data, &r, &EitFitOptions::default()).unwrap().resonance().unwrap();
    (f.delta_c, f.gamma_c)
}

#[test]
fn symmetric_distribution_keeps_dip_position() {
    let p = EITParams { gamma_p: 6.07, gamma_c: 0.61, delta_c: 0.0, omega_c: 3.0, od0: 1.2, offset: 0.0 };
    for centre in [2.0, 5.0, -4.0] {
        let shifts: Vec<(f64, f64)> =
            (-10..=10).map(|k| (centre + 0.08 * k as f64, (-0.5 * (k as f64 / 4.0).powi(2)).exp())).collect();
        let (dc, _) = fit_dc(&p, &shifts);
        assert!((dc / centre - 1.0).abs() < 0.01, "{dc} vs {centre}");
    }
}

#[test]
fn field_distribution_broadens_resonance() {
    let defects = QuantumDefectTable::rubidium87();
    let s = RydbergState::from_f64(26, 0, 0.5, 0.5).unwrap();
    let alpha = polarizability(&s, &defects, &BasisWindow::default()).unwrap().value;
    let m = PatchModel { d0: 7e5, w: 100.0, sigma_y: 130.0 };
    let z = 50.0;
    let shifts: Vec<(f64, f64)> = (-40..=40)
        .map(|k| {
            let u = k as f64 / 10.0;
            let e = offaxis_field(0.0, m.sigma_y * u, z, &m).unwrap().magnitude();
            (0.5 * alpha * e * e, (-0.5 * u * u).exp())
        })
        .collect();
    let wsum: f64 = shifts.iter().map(|s| s.1).sum();
    let mean = shifts.iter().map(|s| s.0 * s.1).sum::<f64>() / wsum;
    let gamma_c = 0.61;
    let p = EITParams { gamma_p: 6.07, gamma_c, delta_c: 0.0, omega_c: 3.0, od0: 1.2, offset: 0.0 };
    let (_, fitted) = fit_dc(&p, &shifts);
    let excess = (fitted - gamma_c) / mean;
    assert!(excess > 0.05 && excess < 1.0, "Γc excess {excess:.3}·⟨Δc⟩ (⟨Δc⟩ = {mean:.2} MHz)");
}
