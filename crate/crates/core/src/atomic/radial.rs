//! Coulomb-approximation radial functions by inward Numerov integration.
//!
//! With r = x² and u(r) = r·R(r) = x^{1/2}·y(x) the radial equation at
//! energy −1/(2ν²) becomes first-derivative free,
//!
//! ```text
//! y''(x) = [ (2l + 1/2)(2l + 3/2)/x² − 8 + 4x²/ν² ] · y(x),
//! ```
//!
//! which is integrated on a uniform x grid from far outside the outer
//! turning point towards the core. Grid points sit at integer multiples of
//! the step so that any two functions built with the same step share nodes.

use super::AtomicError;

/// Radial integration domain in Bohr radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    pub r_min: f64,
    /// Outer bound; `None` selects 2ν(ν + 15), well past the outer turning point.
    pub r_max: Option<f64>,
    /// Step in x = √r.
    pub step: f64,
}

impl Default for RadialGrid {
    fn default() -> Self {
        RadialGrid { r_min: 1e-3, r_max: None, step: 0.01 }
    }
}

impl RadialGrid {
    fn validate(&self, r_max: f64) -> Result<(), AtomicError> {
        if !(self.r_min > 0.0 && self.r_min < r_max && self.step > 0.0 && self.step.is_finite()) {
            return Err(AtomicError::InvalidGrid(format!(
                "need 0 < r_min < r_max and step > 0; got r_min = {}, r_max = {r_max}, step = {}",
                self.r_min, self.step
            )));
        }
        Ok(())
    }

    pub fn outer_radius(&self, nu: f64) -> f64 {
        self.r_max.unwrap_or(2.0 * nu * (nu + 15.0))
    }
}

/// Normalized radial function sampled at x_i = (offset + i)·step.
#[derive(Debug, Clone)]
pub struct RadialWavefunction {
    pub nu: f64,
    pub l: u32,
    step: f64,
    offset: usize,
    y: Vec<f64>,
}

/// Inner classical turning point of the effective potential, if any.
pub fn inner_turning_point(nu: f64, l: u32) -> Option<f64> {
    if l == 0 {
        return None;
    }
    let ll = (l * (l + 1)) as f64;
    let disc = 1.0 - ll / (nu * nu);
    (disc > 0.0).then(|| nu * nu * (1.0 - disc.sqrt()))
}

impl RadialWavefunction {
    /// Integrates the Coulomb-approximation radial equation for effective
    /// principal quantum number `nu` and orbital momentum `l`.
    ///
    /// Below the inner turning point the integration continues only while
    /// |u| keeps decreasing; for non-integer ν the solution turns around and
    /// diverges there, and the function is truncated at that minimum.
    pub fn coulomb(nu: f64, l: u32, grid: &RadialGrid) -> Result<Self, AtomicError> {
        if nu.is_nan() || nu <= l as f64 + 0.5 {
            return Err(AtomicError::UnsupportedState(format!(
                "effective quantum number {nu:.4} does not exceed l + 1/2 = {}",
                l as f64 + 0.5
            )));
        }
        let r_max = grid.outer_radius(nu);
        grid.validate(r_max)?;
        let h = grid.step;
        let i_max = (r_max.sqrt() / h).ceil() as usize;
        let i_min = ((grid.r_min.sqrt() / h).ceil() as usize).max(1);
        if i_max < i_min + 4 {
            return Err(AtomicError::InvalidGrid("fewer than 5 grid points".into()));
        }
        let centrifugal = (2.0 * l as f64 + 0.5) * (2.0 * l as f64 + 1.5);
        let inv_nu2 = 1.0 / (nu * nu);
        let coef = |i: usize| {
            let x = i as f64 * h;
            let x2 = x * x;
            h * h / 12.0 * (centrifugal / x2 - 8.0 + 4.0 * x2 * inv_nu2)
        };
        let r_turn = inner_turning_point(nu, l).unwrap_or(0.0);

        let len = i_max - i_min + 1;
        let mut y = vec![0.0; len];
        y[len - 1] = 0.0;
        y[len - 2] = 1e-12;
        let mut first = 0usize;
        let mut c_next = coef(i_max);
        let mut c_here = coef(i_max - 1);
        let mut k = len - 2;
        while k > 0 {
            let i = i_min + k;
            let c_prev = coef(i - 1);
            let next = (2.0 * (1.0 + 5.0 * c_here) * y[k] - (1.0 - c_next) * y[k + 1]) / (1.0 - c_prev);
            let x_prev = (i - 1) as f64 * h;
            let r_prev = x_prev * x_prev;
            if r_prev < r_turn {
                let u_prev = next.abs() * x_prev.sqrt();
                let u_here = y[k].abs() * (i as f64 * h).sqrt();
                if u_prev > u_here || next.signum() != y[k].signum() {
                    first = k;
                    break;
                }
            }
            y[k - 1] = next;
            if next.abs() > 1e200 {
                for v in &mut y[k - 1..] {
                    *v *= 1e-200;
                }
            }
            c_next = c_here;
            c_here = c_prev;
            k -= 1;
        }
        let y = y.split_off(first);
        let mut wf = RadialWavefunction { nu, l, step: h, offset: i_min + first, y };
        let norm = wf.norm_squared().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(AtomicError::UnsupportedState(format!(
                "radial function for nu = {nu}, l = {l} not normalizable"
            )));
        }
        for v in &mut wf.y {
            *v /= norm;
        }
        Ok(wf)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn x(&self, k: usize) -> f64 {
        (self.offset + k) as f64 * self.step
    }

    /// Radii r_i (Bohr) of the samples.
    pub fn radii(&self) -> Vec<f64> {
        (0..self.y.len()).map(|k| self.x(k).powi(2)).collect()
    }

    /// Reduced radial function u(r) = r·R(r) at the sample radii.
    pub fn reduced(&self) -> Vec<f64> {
        self.y.iter().enumerate().map(|(k, &y)| self.x(k).sqrt() * y).collect()
    }

    /// Radial function R(r) at the sample radii.
    pub fn radial(&self) -> Vec<f64> {
        self.y.iter().enumerate().map(|(k, &y)| y * self.x(k).powf(-1.5)).collect()
    }

    pub fn inner_radius(&self) -> f64 {
        self.x(0).powi(2)
    }

    pub fn outer_radius(&self) -> f64 {
        self.x(self.y.len() - 1).powi(2)
    }

    /// ∫ u² dr = ∫ 2x² y² dx (trapezoidal on the native grid).
    pub fn norm_squared(&self) -> f64 {
        trapezoid(self.y.iter().enumerate().map(|(k, &y)| 2.0 * self.x(k).powi(2) * y * y), self.step)
    }

    /// Sign changes of u, ignoring samples below 1e-8 of the peak magnitude.
    pub fn node_count(&self) -> usize {
        let peak = self.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut last_sign = 0.0;
        let mut nodes = 0;
        for &v in &self.y {
            if v.abs() < 1e-8 * peak {
                continue;
            }
            let s = v.signum();
            if last_sign != 0.0 && s != last_sign {
                nodes += 1;
            }
            last_sign = s;
        }
        nodes
    }

    /// ⟨a| r^power |b⟩ = ∫ u_a u_b r^power dr over the shared domain.
    pub fn overlap_moment(&self, other: &RadialWavefunction, power: i32) -> Result<f64, AtomicError> {
        if (self.step - other.step).abs() > 1e-15 * self.step {
            return Err(AtomicError::InvalidGrid("radial functions use different steps".into()));
        }
        let start = self.offset.max(other.offset);
        let end = (self.offset + self.y.len()).min(other.offset + other.y.len());
        if end <= start + 1 {
            return Ok(0.0);
        }
        let h = self.step;
        let values = (start..end).map(|i| {
            let x = i as f64 * h;
            // u_a u_b r^p dr = x y_a y_b · x^{2p} · 2x dx
            2.0 * x.powi(2 + 2 * power) * (self.y[i - self.offset] * other.y[i - other.offset])
        });
        Ok(trapezoid(values, h))
    }
}

fn trapezoid(values: impl Iterator<Item = f64>, h: f64) -> f64 {
    let mut sum = 0.0;
    let mut first = None;
    let mut last = 0.0;
    for v in values {
        if first.is_none() {
            first = Some(v);
        }
        sum += v;
        last = v;
    }
    match first {
        Some(f) => h * (sum - 0.5 * (f + last)),
        None => 0.0,
    }
}
