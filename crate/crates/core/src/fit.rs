//! Nonlinear least squares for resonance and oscillation curves.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

struct CurveProblem<'a, F> {
    xs: &'a [f64],
    ys: &'a [f64],
    model: F,
    params: DVector<f64>,
}

impl<F: Fn(&[f64], f64) -> f64> CurveProblem<'_, F> {
    fn eval(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.xs.len(), self.xs.iter().zip(self.ys).map(|(&x, &y)| (self.model)(p, x) - y))
    }
}

impl<F: Fn(&[f64], f64) -> f64> LeastSquaresProblem<f64, Dyn, Dyn> for CurveProblem<'_, F> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.params.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.params.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let r = self.eval(self.params.as_slice());
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let np = self.params.len();
        let mut jac = DMatrix::zeros(self.xs.len(), np);
        let mut p = self.params.as_slice().to_vec();
        for j in 0..np {
            let h = 1e-7 * p[j].abs().max(1e-6);
            let orig = p[j];
            p[j] = orig + h;
            let up = self.eval(&p);
            p[j] = orig - h;
            let down = self.eval(&p);
            p[j] = orig;
            jac.set_column(j, &((up - down) / (2.0 * h)));
        }
        Some(jac)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub r_squared: f64,
    pub rss: f64,
}

/// Fits `model(params, x)` to the samples starting from `initial`.
pub fn curve_fit(xs: &[f64], ys: &[f64], initial: &[f64], model: impl Fn(&[f64], f64) -> f64) -> Result<FitResult> {
    if xs.len() != ys.len() || xs.len() < initial.len() {
        return Err(Error::FitFailed(format!(
            "{} samples cannot determine {} parameters",
            xs.len().min(ys.len()),
            initial.len()
        )));
    }
    let problem = CurveProblem {
        xs,
        ys,
        model,
        params: DVector::from_column_slice(initial),
    };
    let (problem, report) = LevenbergMarquardt::new().with_patience(400).minimize(problem);
    if !report.termination.was_successful() {
        return Err(Error::FitFailed(format!("{:?}", report.termination)));
    }
    let params = problem.params.as_slice().to_vec();
    let rss: f64 = problem.eval(&params).iter().map(|r| r * r).sum();
    Ok(FitResult {
        r_squared: r_squared(ys, rss),
        params,
        rss,
    })
}

pub fn r_squared(ys: &[f64], rss: f64) -> f64 {
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let tss: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    if tss == 0.0 {
        return if rss == 0.0 { 1.0 } else { f64::NEG_INFINITY };
    }
    1.0 - rss / tss
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// A·sinc²(B(δ − δ₀)) + C with params [A, B, δ₀, C].
pub fn sinc2_model(p: &[f64], d: f64) -> f64 {
    p[0] * sinc(p[1] * (d - p[2])).powi(2) + p[3]
}

/// A·exp(−(δ − δ₀)²/(2σ²)) + C with params [A, σ, δ₀, C].
pub fn gaussian_model(p: &[f64], d: f64) -> f64 {
    p[0] * (-(d - p[2]).powi(2) / (2.0 * p[1] * p[1])).exp() + p[3]
}

/// A/(1 + ((δ − δ₀)/γ)²) + C with params [A, γ, δ₀, C].
pub fn lorentzian_model(p: &[f64], d: f64) -> f64 {
    p[0] / (1.0 + ((d - p[2]) / p[1]).powi(2)) + p[3]
}
