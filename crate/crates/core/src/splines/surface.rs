use std::f64::consts::TAU;

use super::basis::span_basis;
use super::knots::KnotVector;
use super::lsq::GivensLsq;
use crate::error::{Result, VcsError};

/// Tensor-product cubic spline `rho(tau, theta)` over `[0, 1] x [0, 2pi]`,
/// clamped in `tau` and periodic in `theta`.
///
/// Coefficients are stored row-major: `coefficients[i * n_theta + j]` pairs
/// the `i`-th `tau` basis with the `j`-th `theta` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSpline {
    tau_knots: KnotVector,
    theta_knots: KnotVector,
    coefficients: Vec<f64>,
}

/// Partial derivatives of a bivariate spline at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceDerivatives {
    pub value: f64,
    pub d_tau: f64,
    pub d_theta: f64,
}

impl BivariateSpline {
    pub fn new(tau_count: usize, theta_count: usize, coefficients: Vec<f64>) -> Result<Self> {
        let tau_knots = KnotVector::clamped_unit(tau_count)?;
        let theta_knots = KnotVector::periodic_angle(theta_count)?;
        let expected = tau_knots.n_coefficients() * theta_knots.n_coefficients();
        if coefficients.len() != expected {
            return Err(VcsError::Layout(format!(
                "({tau_count}, {theta_count}) knots need {expected} coefficients, got {}",
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(VcsError::Model("non-finite wall coefficient".into()));
        }
        Ok(Self { tau_knots, theta_knots, coefficients })
    }

    pub fn tau_knots(&self) -> &KnotVector {
        &self.tau_knots
    }

    pub fn theta_knots(&self) -> &KnotVector {
        &self.theta_knots
    }

    /// `(rows, columns)` of the coefficient matrix: `tau` by `theta`.
    pub fn shape(&self) -> (usize, usize) {
        (self.tau_knots.n_coefficients(), self.theta_knots.n_coefficients())
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn with_coefficients(&self, coefficients: Vec<f64>) -> Result<Self> {
        Self::new(self.tau_knots.count(), self.theta_knots.count(), coefficients)
    }

    /// Value at `(tau, theta)`. `theta` may be any finite angle; it is wrapped
    /// into `[0, 2pi]` first.
    pub fn eval(&self, tau: f64, theta: f64) -> Result<f64> {
        self.eval_derivatives(tau, theta).map(|d| d.value)
    }

    pub fn eval_derivatives(&self, tau: f64, theta: f64) -> Result<SurfaceDerivatives> {
        let tau = self.tau_knots.check(tau)?;
        let theta = wrap_theta(theta)?;
        let bt = span_basis(&self.tau_knots, tau);
        let bh = span_basis(&self.theta_knots, theta);
        let cols = self.theta_knots.n_coefficients();
        let mut out = SurfaceDerivatives { value: 0.0, d_tau: 0.0, d_theta: 0.0 };
        for a in 0..4 {
            let row = (bt.first + a) * cols;
            for b in 0..4 {
                let c = self.coefficients[row + self.theta_knots.coefficient_index(bh.first + b)];
                out.value += c * bt.values[0][a] * bh.values[0][b];
                out.d_tau += c * bt.values[1][a] * bh.values[0][b];
                out.d_theta += c * bt.values[0][a] * bh.values[1][b];
            }
        }
        Ok(out)
    }

    /// Minimum over a regular `n_tau x n_theta` probe grid, with its location.
    pub fn min_on_grid(&self, n_tau: usize, n_theta: usize) -> (f64, f64, f64) {
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..n_tau {
            let tau = if n_tau > 1 { i as f64 / (n_tau - 1) as f64 } else { 0.5 };
            for j in 0..n_theta {
                let theta = TAU * j as f64 / n_theta as f64;
                let v = self.eval(tau, theta).unwrap_or(f64::NAN);
                if !(v >= best.0) {
                    best = (v, tau, theta);
                }
            }
        }
        best
    }
}

fn wrap_theta(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(VcsError::Domain { value: theta, lo: 0.0, hi: TAU });
    }
    if (0.0..=TAU).contains(&theta) {
        Ok(theta)
    } else {
        Ok(theta.rem_euclid(TAU))
    }
}

/// One wall sample in vessel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub tau: f64,
    pub theta: f64,
    pub rho: f64,
}

/// Least-squares fit of `rho(tau, theta)` with `tau_count` knots in `tau` and
/// `theta_count` knots in `theta`.
pub fn fit_surface(samples: &[SurfaceSample], tau_count: usize, theta_count: usize) -> Result<BivariateSpline> {
    let tk = KnotVector::clamped_unit(tau_count)?;
    let hk = KnotVector::periodic_angle(theta_count)?;
    let (rows, cols) = (tk.n_coefficients(), hk.n_coefficients());
    if samples.len() < rows * cols {
        return Err(VcsError::InsufficientSamples { needed: rows * cols, got: samples.len() });
    }

    let mut tau_hits = vec![0usize; tk.spans()];
    let mut theta_hits = vec![0usize; hk.spans()];
    let mut prepared = Vec::with_capacity(samples.len());
    for s in samples {
        if !s.rho.is_finite() {
            return Err(VcsError::Input(format!("non-finite radius sample at tau={}", s.tau)));
        }
        let tau = tk.check(s.tau)?;
        let theta = wrap_theta(s.theta)?;
        tau_hits[tk.span(tau)] += 1;
        theta_hits[hk.span(theta)] += 1;
        prepared.push((tau, theta, s.rho));
    }
    if let Some(i) = tau_hits.iter().position(|&c| c == 0) {
        let h = tk.spacing();
        return Err(VcsError::Coverage { band: format!("tau band [{:.4}, {:.4}]", i as f64 * h, (i + 1) as f64 * h) });
    }
    if let Some(j) = theta_hits.iter().position(|&c| c == 0) {
        let h = hk.spacing();
        return Err(VcsError::Coverage {
            band: format!("theta band [{:.4}, {:.4}]", j as f64 * h, (j + 1) as f64 * h),
        });
    }

    let mut lsq = GivensLsq::new(rows * cols, 1);
    let mut row = [(0usize, 0.0f64); 16];
    for &(tau, theta, rho) in &prepared {
        let bt = span_basis(&tk, tau);
        let bh = span_basis(&hk, theta);
        for a in 0..4 {
            for b in 0..4 {
                let col = (bt.first + a) * cols + hk.coefficient_index(bh.first + b);
                row[a * 4 + b] = (col, bt.values[0][a] * bh.values[0][b]);
            }
        }
        lsq.add_row(&row, &[rho]);
    }
    let sol = lsq.solve()?;
    BivariateSpline::new(tau_count, theta_count, sol.into_iter().next().unwrap_or_default())
}
