mod common;

use common::patch_oracle;
use rydchip::patch::{bracket, cloud_averaged_field, offaxis_field, onaxis_field, CloudAverage, PatchModel};

fn paper() -> PatchModel {
    PatchModel { d0: 7e5, w: 100.0, sigma_y: 130.0 }
}

#[test]
fn onaxis_matches_plane_sum() {
    let mut z = 0.01;
    while z <= 50.0 {
        let oracle = patch_oracle::onaxis(z);
        let closed = bracket(z);
        assert!((closed / oracle - 1.0).abs() < 1e-6, "Z = {z}: {closed} vs {oracle}");
        z *= 1.37;
    }
}

#[test]
fn bracket_far_field() {
    assert!((bracket(30.0) * 27000.0 / 2.0 - 1.0).abs() < 0.01);
}

#[test]
fn offaxis_matches_plane_sum() {
    let m = paper();
    let pf = m.prefactor();
    for &(x, y, z) in
        &[(0.0, 50.0, 20.0), (30.0, -70.0, 50.0), (0.0, 130.0, 100.0), (150.0, 200.0, 30.0), (0.0, 300.0, 200.0)]
    {
        let e = offaxis_field(x, y, z, &m).unwrap();
        let (ox, oy, oz) = patch_oracle::offaxis(x / m.w, y / m.w, z / m.w);
        let scale = (ox * ox + oy * oy + oz * oz).sqrt();
        for (a, b) in [(e.x / pf, ox), (e.y / pf, oy), (e.z / pf, oz)] {
            assert!((a - b).abs() < 1e-6 * scale, "({x}, {y}, {z}): {a} vs {b}");
        }
    }
}

#[test]
fn cloud_average_monotone_and_below_peak() {
    let m = paper();
    let mut last = f64::INFINITY;
    for k in 0..30 {
        let z = 10.0 + 10.0 * k as f64;
        let avg = cloud_averaged_field(z, &m, CloudAverage::Magnitude).unwrap();
        assert!(avg < last);
        assert!(avg < onaxis_field(z, &m).unwrap());
        last = avg;
    }
}
