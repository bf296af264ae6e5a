//! Field of a Gaussian sheet of z-dipoles by direct summation of point
//! dipole fields over the plane. Lengths in units of w, fields in units of
//! d0/(2wε0).

use std::f64::consts::PI;

use rydchip::quad::{integrate, Tolerance};

fn tol() -> Tolerance {
    Tolerance { abs: 1e-14, rel: 1e-12, max_intervals: 20000 }
}

fn breaks(z: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    for s in [0.5 * z, z, 2.0 * z, 5.0 * z, 20.0 * z, 0.5, 1.0, 2.0, 4.0, 8.0] {
        if s > *b.last().unwrap() && s < 14.0 {
            b.push(s);
        }
    }
    b.push(14.0);
    b
}

fn piecewise(f: impl Fn(f64) -> f64, z: f64, extra: f64) -> f64 {
    let b = breaks(z);
    let mut total = 0.0;
    let hi = 14.0 + extra;
    let mut pts: Vec<f64> = b.into_iter().filter(|v| *v < hi).collect();
    pts.push(hi);
    for w in pts.windows(2) {
        total += integrate(&f, w[0], w[1], tol()).unwrap().value;
    }
    total
}

/// E_z on the axis from the plane integral reduced by azimuthal symmetry.
pub fn onaxis(z: f64) -> f64 {
    piecewise(|s| (-0.5 * s * s).exp() * (2.0 * z * z - s * s) * s / (s * s + z * z).powf(2.5), z, 0.0)
}

/// (E_x, E_y, E_z) at (x0, y0, z) from a polar integral centred under the
/// field point.
pub fn offaxis(x0: f64, y0: f64, z: f64) -> (f64, f64, f64) {
    let reach = x0.hypot(y0);
    let ring = |r: f64, k: usize| {
        let g = |phi: f64| {
            let (c, s) = (phi.cos(), phi.sin());
            let (x, y) = (x0 + r * c, y0 + r * s);
            let w = (-0.5 * (x * x + y * y)).exp();
            match k {
                0 => -w * c,
                1 => -w * s,
                _ => w,
            }
        };
        integrate(g, 0.0, 2.0 * PI, Tolerance { abs: 1e-15, rel: 1e-12, max_intervals: 2000 }).unwrap().value
    };
    let comp = |k: usize| {
        let radial = move |r: f64| {
            let d = (r * r + z * z).powf(2.5);
            let kernel = if k == 2 { r * (2.0 * z * z - r * r) / d } else { 3.0 * z * r * r / d };
            kernel * ring(r, k)
        };
        piecewise(radial, z, reach) / (2.0 * PI)
    };
    (comp(0), comp(1), comp(2))
}
