//! Weighted nonlinear least squares (Levenberg–Marquardt) for the closed-form
//! models used across the crate.

mod linalg;
mod models;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::spectroscopy::Dataset;

pub use linalg::{cholesky_solve, invert_spd};
pub use models::FitModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub rel_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            rel_tolerance: 1e-10,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub model: FitModel,
    pub params: Vec<T>,
    /// Row-major `n_params × n_params` covariance, `(JᵀWJ)⁻¹` at the optimum.
    pub covariance: Vec<T>,
    pub chi2: T,
    pub dof: usize,
    pub iterations: usize,
}

impl<T: Scalar> FitResult<T> {
    pub fn std_error(&self, i: usize) -> T {
        let n = self.params.len();
        self.covariance[i * n + i].sqrt()
    }

    pub fn std_errors(&self) -> Vec<T> {
        (0..self.params.len()).map(|i| self.std_error(i)).collect()
    }

    pub fn reduced_chi2(&self) -> T {
        self.chi2 / T::of_usize(self.dof.max(1))
    }

    /// Plain-text report: one `name estimate std_error` line per parameter.
    pub fn report(&self) -> String {
        let mut s = format!("model {}\n", self.model.name());
        for (i, name) in self.model.param_names().iter().enumerate() {
            s.push_str(&format!("{name} {} {}\n", self.params[i], self.std_error(i)));
        }
        s.push_str(&format!("reduced_chi2 {}\niterations {}\n", self.reduced_chi2(), self.iterations));
        s
    }
}

struct Linearized<T> {
    cost: T,
    /// Jᵀ W J, row-major.
    curvature: Vec<T>,
    /// Jᵀ W r
    gradient: Vec<T>,
}

fn linearize<T: Scalar>(model: FitModel, data: &Dataset<T>, p: &[T]) -> Linearized<T> {
    let n = p.len();
    let mut curvature = vec![T::zero(); n * n];
    let mut gradient = vec![T::zero(); n];
    let mut grad = vec![T::zero(); n];
    let mut cost = T::zero();
    for i in 0..data.len() {
        let w = T::one() / data.sigma[i];
        let r = (data.y[i] - model.eval(data.x[i], p)) * w;
        cost = cost + r * r;
        model.gradient(data.x[i], p, &mut grad);
        for a in 0..n {
            let ja = grad[a] * w;
            gradient[a] = gradient[a] + ja * r;
            for b in 0..=a {
                curvature[a * n + b] = curvature[a * n + b] + ja * grad[b] * w;
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            curvature[b * n + a] = curvature[a * n + b];
        }
    }
    Linearized {
        cost,
        curvature,
        gradient,
    }
}

fn cost<T: Scalar>(model: FitModel, data: &Dataset<T>, p: &[T]) -> T {
    (0..data.len())
        .map(|i| {
            let r = (data.y[i] - model.eval(data.x[i], p)) / data.sigma[i];
            r * r
        })
        .sum()
}

pub fn fit_nonlinear<T: Scalar>(model: FitModel, data: &Dataset<T>, initial: &[T]) -> Result<FitResult<T>> {
    fit_with_options(model, data, initial, FitOptions::default())
}

pub fn fit_with_options<T: Scalar>(
    model: FitModel,
    data: &Dataset<T>,
    initial: &[T],
    opts: FitOptions,
) -> Result<FitResult<T>> {
    let n = model.n_params();
    if initial.len() != n {
        return Err(invalid("initial", format!("{} needs {n} parameters", model.name())));
    }
    if data.len() < 2 * n || data.y.len() != data.len() || data.sigma.len() != data.len() {
        return Err(invalid("data", format!("need at least {} points with x, y, sigma", 2 * n)));
    }
    if data.sigma.iter().any(|&s| !(s > T::zero())) {
        return Err(invalid("sigma", "uncertainties must be positive"));
    }

    let mut p = initial.to_vec();
    let mut lin = linearize(model, data, &p);
    let mut lambda = T::of(opts.initial_damping);
    let tol = T::of(opts.rel_tolerance);
    let tiny = T::min_positive_value().sqrt();
    let mut last_change = f64::INFINITY;
    for iter in 1..=opts.max_iterations {
        if lin.cost <= tiny {
            return finish(model, data, p, iter);
        }
        // Marquardt scaling: damp each direction by its own curvature
        let mut damped = lin.curvature.clone();
        for a in 0..n {
            let d = lin.curvature[a * n + a].max(tiny);
            damped[a * n + a] = lin.curvature[a * n + a] + lambda * d;
        }
        let step = cholesky_solve(&damped, &lin.gradient, n);
        let trial: Option<Vec<T>> = step.map(|s| p.iter().zip(&s).map(|(&a, &b)| a + b).collect());
        let trial_cost = trial
            .as_ref()
            .map(|t| cost(model, data, t))
            .filter(|c| c.is_finite());
        match (trial, trial_cost) {
            (Some(t), Some(c)) if c <= lin.cost => {
                let change = (lin.cost - c) / lin.cost;
                last_change = change.to_f64_lossy();
                p = t;
                lin = linearize(model, data, &p);
                lambda = (lambda / T::of(10.0)).max(T::of(1e-12));
                if change < tol {
                    return finish(model, data, p, iter);
                }
            }
            _ => {
                lambda = lambda * T::of(10.0);
                if lambda > T::of(1e16) {
                    // no downhill step exists at machine precision
                    return finish(model, data, p, iter);
                }
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        last_change,
    })
}

fn finish<T: Scalar>(model: FitModel, data: &Dataset<T>, p: Vec<T>, iterations: usize) -> Result<FitResult<T>> {
    let n = p.len();
    let lin = linearize(model, data, &p);
    let covariance = invert_spd(&lin.curvature, n).ok_or(Error::SingularCurvature)?;
    Ok(FitResult {
        model,
        params: p,
        covariance,
        chi2: lin.cost,
        dof: data.len() - n,
        iterations,
    })
}
