//! Damped nonlinear least squares (Levenberg–Marquardt) with central
//! finite-difference Jacobians, box bounds, and covariance estimates.
//!
//! The engine minimizes χ² = Σ ((y_i − f(p, x_i))/σ_i)². When no σ are
//! supplied every point gets unit weight and reported uncertainties are
//! rescaled by the reduced χ².

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FitError {
    #[error("need at least as many data points ({points}) as parameters ({params})")]
    TooFewPoints { points: usize, params: usize },
    #[error("data arrays have mismatched lengths")]
    LengthMismatch,
    #[error("sigma must be positive and finite (index {0})")]
    InvalidSigma(usize),
    #[error("initial parameter {index} = {value} lies outside its bounds")]
    OutOfBounds { index: usize, value: f64 },
    #[error("model is not finite at the initial parameters")]
    NonFiniteModel,
    #[error("fit did not converge")]
    NotConverged,
    #[error("parameter index {0} out of range")]
    BadIndex(usize),
    #[error("{0}")]
    InvalidInput(String),
}

/// Closed interval for one parameter; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub const FREE: Bound = Bound { lower: f64::NEG_INFINITY, upper: f64::INFINITY };

    pub fn new(lower: f64, upper: f64) -> Self {
        Bound { lower, upper }
    }

    pub fn non_negative() -> Self {
        Bound { lower: 0.0, upper: f64::INFINITY }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }

    fn clamp(&self, v: f64) -> f64 {
        v.max(self.lower).min(self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative χ² decrease below which an accepted step ends the fit.
    pub ftol: f64,
    /// Relative step size below which an accepted step ends the fit.
    pub xtol: f64,
    /// Scaled gradient norm below which the fit ends.
    pub gtol: f64,
    pub lambda_initial: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub lambda_max: f64,
    /// Relative finite-difference step (times max(|p|, 1)).
    pub fd_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            ftol: 1e-15,
            xtol: 1e-13,
            gtol: 1e-13,
            lambda_initial: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.1,
            lambda_max: 1e16,
            fd_step: f64::EPSILON.cbrt(),
        }
    }
}

pub type Model<'a> = &'a (dyn Fn(&[f64], f64) -> f64 + Sync);

pub struct FitProblem<'a> {
    pub model: Model<'a>,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub sigma: Option<&'a [f64]>,
    pub initial: Vec<f64>,
    pub bounds: Option<Vec<Bound>>,
    pub options: FitOptions,
}

impl<'a> FitProblem<'a> {
    pub fn new(model: Model<'a>, x: &'a [f64], y: &'a [f64], initial: Vec<f64>) -> Self {
        FitProblem { model, x, y, sigma: None, initial, bounds: None, options: FitOptions::default() }
    }

    pub fn with_sigma(mut self, sigma: &'a [f64]) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<Bound>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn with_options(mut self, options: FitOptions) -> Self {
        self.options = options;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ChiSquaredTolerance,
    StepTolerance,
    GradientTolerance,
    ExactFit,
    /// No downhill step exists at the current point to working precision.
    Stagnated,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// (JᵀWJ)⁻¹ at the optimum, unscaled.
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub points: usize,
    pub converged: bool,
    pub iterations: usize,
    pub termination: Termination,
    /// True when per-point σ were supplied.
    pub weighted: bool,
}

impl FitResult {
    pub fn dof(&self) -> usize {
        self.points.saturating_sub(self.params.len())
    }

    pub fn reduced_chi2(&self) -> f64 {
        match self.dof() {
            0 => f64::NAN,
            d => self.chi2 / d as f64,
        }
    }

    /// Standard errors of all parameters (see [`profile_uncertainty`]).
    pub fn errors(&self) -> Vec<f64> {
        (0..self.params.len()).map(|i| standard_error(self, i)).collect()
    }
}

fn standard_error(result: &FitResult, index: usize) -> f64 {
    let var = result.covariance[(index, index)].max(0.0);
    let scale = if result.weighted {
        1.0
    } else {
        match result.dof() {
            0 => 0.0,
            d => result.chi2 / d as f64,
        }
    };
    (var * scale).sqrt()
}

/// Standard error of parameter `index`: √C_ii, times √(χ²/dof) when the fit
/// used unit weights.
pub fn profile_uncertainty(result: &FitResult, index: usize) -> Result<f64, FitError> {
    if index >= result.params.len() {
        return Err(FitError::BadIndex(index));
    }
    if !result.converged {
        return Err(FitError::NotConverged);
    }
    Ok(standard_error(result, index))
}

/// Central-difference Jacobian ∂f(p, x_i)/∂p_j with the default step.
pub fn finite_difference_jacobian(model: Model<'_>, params: &[f64], x: &[f64]) -> DMatrix<f64> {
    finite_difference_jacobian_with_step(model, params, x, FitOptions::default().fd_step, None)
}

/// Central differences with step `rel_step·max(|p_j|, 1)`, switching to a
/// one-sided second-order stencil when a bound is closer than the step.
pub fn finite_difference_jacobian_with_step(
    model: Model<'_>,
    params: &[f64],
    x: &[f64],
    rel_step: f64,
    bounds: Option<&[Bound]>,
) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(x.len(), params.len());
    let mut p = params.to_vec();
    for j in 0..params.len() {
        let h = rel_step * params[j].abs().max(1.0);
        let b = bounds.map(|b| b[j]).unwrap_or(Bound::FREE);
        let p0 = params[j];
        if p0 + h <= b.upper && p0 - h >= b.lower {
            for (i, &xi) in x.iter().enumerate() {
                p[j] = p0 + h;
                let fp = model(&p, xi);
                p[j] = p0 - h;
                let fm = model(&p, xi);
                jac[(i, j)] = (fp - fm) / (2.0 * h);
            }
        } else {
            // forward (or backward) three-point stencil inside the bounds
            let s = if p0 + 2.0 * h <= b.upper { h } else { -h };
            for (i, &xi) in x.iter().enumerate() {
                p[j] = p0;
                let f0 = model(&p, xi);
                p[j] = p0 + s;
                let f1 = model(&p, xi);
                p[j] = p0 + 2.0 * s;
                let f2 = model(&p, xi);
                jac[(i, j)] = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * s);
            }
        }
        p[j] = p0;
    }
    jac
}

struct Weighted<'p, 'a> {
    problem: &'p FitProblem<'a>,
    inv_sigma: Vec<f64>,
    bounds: Vec<Bound>,
}

impl Weighted<'_, '_> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        let pr = self.problem;
        DVector::from_iterator(
            pr.x.len(),
            pr.x.iter().zip(pr.y).zip(&self.inv_sigma).map(|((&x, &y), &w)| (y - (pr.model)(p, x)) * w),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let pr = self.problem;
        let mut jac = finite_difference_jacobian_with_step(pr.model, p, pr.x, pr.options.fd_step, Some(&self.bounds));
        for (i, w) in self.inv_sigma.iter().enumerate() {
            jac.row_mut(i).scale_mut(*w);
        }
        jac
    }
}

fn covariance(jac: &DMatrix<f64>) -> DMatrix<f64> {
    let normal = jac.transpose() * jac;
    let n = normal.nrows();
    if let Some(inv) = normal.clone().cholesky().map(|c| c.inverse()) {
        return inv;
    }
    normal
        .svd(true, true)
        .pseudo_inverse(1e-14 * jac.norm().powi(2).max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DMatrix::from_element(n, n, f64::NAN))
}

/// Runs Levenberg–Marquardt from `problem.initial`.
///
/// Accepted steps never increase χ². A run that exhausts the iteration
/// budget returns with `converged = false`.
pub fn lm_fit(problem: &FitProblem<'_>) -> Result<FitResult, FitError> {
    let m = problem.x.len();
    let n = problem.initial.len();
    if problem.y.len() != m {
        return Err(FitError::LengthMismatch);
    }
    if m < n || n == 0 {
        return Err(FitError::TooFewPoints { points: m, params: n });
    }
    let inv_sigma = match problem.sigma {
        Some(s) => {
            if s.len() != m {
                return Err(FitError::LengthMismatch);
            }
            s.iter()
                .enumerate()
                .map(|(i, &v)| if v > 0.0 && v.is_finite() { Ok(1.0 / v) } else { Err(FitError::InvalidSigma(i)) })
                .collect::<Result<Vec<_>, _>>()?
        }
        None => vec![1.0; m],
    };
    let bounds = problem.bounds.clone().unwrap_or_else(|| vec![Bound::FREE; n]);
    if bounds.len() != n {
        return Err(FitError::InvalidInput("one bound per parameter required".into()));
    }
    for (i, (&v, b)) in problem.initial.iter().zip(&bounds).enumerate() {
        if !b.contains(v) {
            return Err(FitError::OutOfBounds { index: i, value: v });
        }
    }
    let opts = problem.options;
    let w = Weighted { problem, inv_sigma, bounds };

    let mut p = problem.initial.clone();
    let mut r = w.residuals(&p);
    let mut chi2 = r.norm_squared();
    if !chi2.is_finite() {
        return Err(FitError::NonFiniteModel);
    }
    let mut lambda = opts.lambda_initial;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    'outer: while iterations < opts.max_iterations {
        if chi2 == 0.0 {
            termination = Termination::ExactFit;
            break;
        }
        iterations += 1;
        let jac = w.jacobian(&p);
        let grad = jac.transpose() * &r;
        let normal = jac.transpose() * &jac;
        let diag: Vec<f64> = (0..n).map(|j| normal[(j, j)].max(1e-300)).collect();
        let gnorm = (0..n).map(|j| grad[j].abs() / (diag[j] * chi2).sqrt()).fold(0.0, f64::max);
        if gnorm <= opts.gtol {
            termination = Termination::GradientTolerance;
            break;
        }
        loop {
            let mut damped = normal.clone();
            for j in 0..n {
                damped[(j, j)] += lambda * diag[j];
            }
            let step = match damped.cholesky() {
                Some(c) => c.solve(&grad),
                None => {
                    lambda *= opts.lambda_up;
                    if lambda > opts.lambda_max {
                        termination = Termination::Stagnated;
                        break 'outer;
                    }
                    continue;
                }
            };
            let trial: Vec<f64> =
                p.iter().zip(step.iter()).zip(&w.bounds).map(|((&pi, &d), b)| b.clamp(pi + d)).collect();
            let r_trial = w.residuals(&trial);
            let chi2_trial = r_trial.norm_squared();
            if chi2_trial.is_finite() && chi2_trial < chi2 {
                let decrease = chi2 - chi2_trial;
                let dp: f64 = trial.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let pn: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                p = trial;
                r = r_trial;
                chi2 = chi2_trial;
                lambda = (lambda * opts.lambda_down).max(1e-12);
                if decrease <= opts.ftol * (chi2 + decrease) {
                    termination = Termination::ChiSquaredTolerance;
                    break 'outer;
                }
                if dp <= opts.xtol * (pn + opts.xtol) {
                    termination = Termination::StepTolerance;
                    break 'outer;
                }
                break;
            }
            lambda *= opts.lambda_up;
            if lambda > opts.lambda_max {
                termination = Termination::Stagnated;
                break 'outer;
            }
        }
    }
    let converged = termination != Termination::MaxIterations;
    let cov = covariance(&w.jacobian(&p));
    Ok(FitResult {
        params: p,
        covariance: cov,
        chi2,
        points: m,
        converged,
        iterations,
        termination,
        weighted: problem.sigma.is_some(),
    })
}

/// Ordinary least-squares line y = a + b·x; returns (a, b).
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), FitError> {
    if xs.len() != ys.len() {
        return Err(FitError::LengthMismatch);
    }
    if xs.len() < 2 {
        return Err(FitError::TooFewPoints { points: xs.len(), params: 2 });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(FitError::InvalidInput("all abscissae equal".into()));
    }
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

/// Slope of ln y against ln x.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64, FitError> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(FitError::InvalidInput("log-log regression needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    Ok(linear_regression(&lx, &ly)?.1)
}
