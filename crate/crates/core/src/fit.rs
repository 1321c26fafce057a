//! Weighted Gaussian-plus-offset fits by bounded Levenberg-Marquardt.

use nalgebra::{DMatrix, Matrix4, Vector4};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("inputs differ in length or contain non-finite values / non-positive sigmas")]
    BadInput,
    #[error("no convergence after {iterations} iterations (chi2 {chi2:.4e})")]
    NonConvergence { iterations: usize, chi2: f64 },
    #[error("normal matrix is singular at the solution")]
    Singular,
}

/// `offset + height · exp(-(x - center)² / (2 width²))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gaussian {
    pub center: f64,
    pub width: f64,
    pub height: f64,
    pub offset: f64,
}

impl Gaussian {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.width;
        self.offset + self.height * (-0.5 * u * u).exp()
    }

    fn to_vec(self) -> Vector4<f64> {
        Vector4::new(self.center, self.width, self.height, self.offset)
    }

    fn from_vec(v: &Vector4<f64>) -> Self {
        Self { center: v[0], width: v[1], height: v[2], offset: v[3] }
    }

    /// d model / d (center, width, height, offset).
    fn gradient(&self, x: f64) -> Vector4<f64> {
        let d = x - self.center;
        let w2 = self.width * self.width;
        let e = (-0.5 * d * d / w2).exp();
        Vector4::new(self.height * e * d / w2, self.height * e * d * d / (w2 * self.width), e, 1.0)
    }
}

/// Box constraints in (center, width, height, offset) order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub lower: [f64; 4],
    pub upper: [f64; 4],
}

impl Bounds {
    pub fn unbounded() -> Self {
        Self { lower: [f64::NEG_INFINITY, 1e-300, f64::NEG_INFINITY, f64::NEG_INFINITY], upper: [f64::INFINITY; 4] }
    }

    fn clamp(&self, v: &mut Vector4<f64>) {
        for i in 0..4 {
            v[i] = v[i].clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub model: Gaussian,
    /// One-sigma errors in (center, width, height, offset) order, scaled by
    /// `sqrt(max(chi2_red, 1))`.
    pub errors: [f64; 4],
    /// Parameters that ended on a bound; their error is reported as 0.
    pub at_bound: [bool; 4],
    pub chi2: f64,
    pub chi2_red: f64,
    pub iterations: usize,
}

const MAX_ITER: usize = 500;
const FTOL: f64 = 1e-8;
const XTOL: f64 = 1e-8;

fn chi2(model: &Gaussian, x: &[f64], y: &[f64], s: &[f64]) -> f64 {
    x.iter().zip(y).zip(s).map(|((&xi, &yi), &si)| ((yi - model.eval(xi)) / si).powi(2)).sum()
}

fn normal_equations(model: &Gaussian, x: &[f64], y: &[f64], s: &[f64]) -> (Matrix4<f64>, Vector4<f64>) {
    let mut a = Matrix4::zeros();
    let mut g = Vector4::zeros();
    for ((&xi, &yi), &si) in x.iter().zip(y).zip(s) {
        let j = model.gradient(xi) / si;
        let r = (yi - model.eval(xi)) / si;
        a += j * j.transpose();
        g += j * r;
    }
    (a, g)
}

/// Minimises `Σ ((y - f(x)) / sigma)²` starting from `init`, keeping the
/// parameters inside `bounds`.
pub fn fit_gaussian(x: &[f64], y: &[f64], sigma: &[f64], init: Gaussian, bounds: Bounds) -> Result<FitResult, FitError> {
    let m = x.len();
    if y.len() != m || sigma.len() != m {
        return Err(FitError::BadInput);
    }
    if m < 5 {
        return Err(FitError::TooFewPoints { need: 5, got: m });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) || sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(FitError::BadInput);
    }
    let mut p = init.to_vec();
    bounds.clamp(&mut p);
    let mut model = Gaussian::from_vec(&p);
    let mut cost = chi2(&model, x, y, sigma);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        let (a, mut g) = normal_equations(&model, x, y, sigma);
        let mut damped = a;
        for i in 0..4 {
            damped[(i, i)] += lambda * a[(i, i)].max(1e-12);
        }
        // parameters pinned at a bound with the gradient pointing outward stay put
        for i in 0..4 {
            let pinned = (p[i] <= bounds.lower[i] && g[i] < 0.0) || (p[i] >= bounds.upper[i] && g[i] > 0.0);
            if pinned {
                for j in 0..4 {
                    damped[(i, j)] = 0.0;
                    damped[(j, i)] = 0.0;
                }
                damped[(i, i)] = 1.0;
                g[i] = 0.0;
            }
        }
        let Some(step) = damped.cholesky().map(|c| c.solve(&g)) else {
            lambda *= 10.0;
            if lambda > 1e16 {
                return Err(FitError::Singular);
            }
            continue;
        };
        let mut trial = p + step;
        bounds.clamp(&mut trial);
        let trial_model = Gaussian::from_vec(&trial);
        let trial_cost = chi2(&trial_model, x, y, sigma);
        if trial_cost <= cost {
            let moved = (0..4).map(|i| (trial[i] - p[i]).abs() / (p[i].abs() + 1e-12)).fold(0.0, f64::max);
            let gain = cost - trial_cost;
            p = trial;
            model = trial_model;
            cost = trial_cost;
            lambda = (lambda / 10.0).max(1e-12);
            if gain <= FTOL * cost.max(1e-300) || moved < XTOL {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e14 {
                // no downhill step exists inside the box
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(FitError::NonConvergence { iterations, chi2: cost });
    }
    let (a, _) = normal_equations(&model, x, y, sigma);
    let at_bound: [bool; 4] = std::array::from_fn(|i| p[i] <= bounds.lower[i] || p[i] >= bounds.upper[i]);
    let free: Vec<usize> = (0..4).filter(|&i| !at_bound[i]).collect();
    let sub = DMatrix::from_fn(free.len(), free.len(), |r, c| a[(free[r], free[c])]);
    let cov = sub.try_inverse().ok_or(FitError::Singular)?;
    let dof = m.saturating_sub(4).max(1) as f64;
    let chi2_red = cost / dof;
    let scale = chi2_red.max(1.0).sqrt();
    let mut errors = [0.0; 4];
    for (r, &i) in free.iter().enumerate() {
        errors[i] = cov[(r, r)].max(0.0).sqrt() * scale;
    }
    Ok(FitResult { model, errors, at_bound, chi2: cost, chi2_red, iterations })
}
