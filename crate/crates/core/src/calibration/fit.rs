use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singular-value floor below which a design matrix counts as
/// rank deficient.
const RANK_TOL: f64 = 1e-10;

/// `c0 + sum_k a_k cos(2 pi k phi) + b_k sin(2 pi k phi)`, `k = 1..=order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicFit {
    pub order: usize,
    pub c0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    pub rms_residual: f64,
}

impl HarmonicFit {
    pub fn constant(value: f64, order: usize) -> Self {
        Self { order, c0: value, cos: vec![0.0; order], sin: vec![0.0; order], rms_residual: 0.0 }
    }

    pub fn eval(&self, phi: f64) -> f64 {
        let mut acc = self.c0;
        for k in 1..=self.order {
            let (s, c) = (TAU * k as f64 * phi).sin_cos();
            acc += self.cos[k - 1] * c + self.sin[k - 1] * s;
        }
        acc
    }
}

fn harmonic_row(phi: f64, order: usize) -> impl Iterator<Item = f64> {
    std::iter::once(1.0).chain((1..=order).flat_map(move |k| {
        let (s, c) = (TAU * k as f64 * phi).sin_cos();
        [c, s]
    }))
}

fn rms(residuals: impl Iterator<Item = f64>, n: usize) -> f64 {
    (residuals.map(|r| r * r).sum::<f64>() / n as f64).sqrt()
}

/// Linear least-squares harmonic fit of `(phi, value)` samples.
pub fn fit_harmonic(samples: &[(f64, f64)], order: usize) -> Result<HarmonicFit> {
    let n = samples.len();
    let cols = 2 * order + 1;
    if n < cols {
        return Err(Error::InsufficientFluxCoverage(format!("{n} samples for {cols} coefficients")));
    }
    if samples.iter().any(|(p, v)| !p.is_finite() || !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite fit sample".into()));
    }
    let design = DMatrix::from_row_iterator(n, cols, samples.iter().flat_map(|&(phi, _)| harmonic_row(phi, order)));
    let target = DVector::from_iterator(n, samples.iter().map(|s| s.1));
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_TOL * smax) {
        return Err(Error::InsufficientFluxCoverage(format!("design matrix condition {:.3e}", smax / smin)));
    }
    let coef = svd.solve(&target, 0.0).map_err(|e| Error::InsufficientFluxCoverage(e.to_string()))?;
    let mut fit = HarmonicFit {
        order,
        c0: coef[0],
        cos: (0..order).map(|k| coef[1 + 2 * k]).collect(),
        sin: (0..order).map(|k| coef[2 + 2 * k]).collect(),
        rms_residual: 0.0,
    };
    fit.rms_residual = rms(samples.iter().map(|&(p, v)| fit.eval(p) - v), n);
    Ok(fit)
}

/// `offset + amplitude / sqrt(detuning(phi)^2 + epsilon^2)` with
/// `detuning(phi) = omega_fit(phi) - omega_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateFit {
    pub offset: f64,
    pub amplitude: f64,
    pub epsilon: f64,
    pub omega_c: f64,
    pub detuning_fit: HarmonicFit,
    pub rms_residual: f64,
}

impl SurrogateFit {
    pub fn detuning(&self, phi: f64) -> f64 {
        self.detuning_fit.eval(phi) - self.omega_c
    }

    pub fn eval(&self, phi: f64) -> f64 {
        surrogate_value(self.offset, self.amplitude, self.epsilon, self.detuning(phi))
    }
}

fn surrogate_value(offset: f64, amplitude: f64, epsilon: f64, detuning: f64) -> f64 {
    offset + amplitude / detuning.hypot(epsilon)
}

pub const EPSILON_BOUNDS: (f64, f64) = (1e-4, 5.0);
const EPSILON_START: f64 = 0.1;
const MIN_SURROGATE_SAMPLES: usize = 8;
const SCAN_POINTS: usize = 80;
const STARTS: usize = 4;

/// Offset and amplitude for fixed `epsilon` solve a linear problem, so the
/// search runs over `ln epsilon` only: a log-spaced scan seeds golden-section
/// refinements from the best few local minima and from `epsilon = 0.1`.
pub fn fit_surrogate(samples: &[(f64, f64)], omega_fit: &HarmonicFit, omega_c: f64) -> Result<SurrogateFit> {
    let n = samples.len();
    if n < MIN_SURROGATE_SAMPLES {
        return Err(Error::SurrogateFitFailed(format!("{n} samples, need {MIN_SURROGATE_SAMPLES}")));
    }
    let detuning: Vec<f64> = samples.iter().map(|&(p, _)| omega_fit.eval(p) - omega_c).collect();
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    if detuning.iter().chain(&values).any(|x| !x.is_finite()) {
        return Err(Error::SurrogateFitFailed("non-finite samples".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let baseline: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();

    let objective = |log_eps: f64| linear_part(&detuning, &values, log_eps.exp()).2;
    let (lo, hi) = (EPSILON_BOUNDS.0.ln(), EPSILON_BOUNDS.1.ln());
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64).collect();
    let scan: Vec<f64> = grid.iter().map(|&x| objective(x)).collect();
    let mut minima: Vec<usize> = (0..SCAN_POINTS)
        .filter(|&i| (i == 0 || scan[i] <= scan[i - 1]) && (i + 1 == SCAN_POINTS || scan[i] <= scan[i + 1]))
        .collect();
    minima.sort_by(|&a, &b| scan[a].total_cmp(&scan[b]));
    minima.truncate(STARTS);
    let step = grid[1] - grid[0];
    let mut brackets: Vec<(f64, f64)> =
        minima.iter().map(|&i| ((grid[i] - step).max(lo), (grid[i] + step).min(hi))).collect();
    let start = EPSILON_START.ln();
    brackets.push(((start - step).max(lo), (start + step).min(hi)));

    let mut best: Option<(f64, f64)> = None;
    for (a, b) in brackets {
        let x = golden_section(&objective, a, b);
        let f = objective(x);
        if f.is_finite() && best.is_none_or(|(_, bf)| f < bf) {
            best = Some((x, f));
        }
    }
    let (log_eps, sse) = best.ok_or_else(|| Error::SurrogateFitFailed("no finite objective".into()))?;
    if sse > baseline * (1.0 + 1e-9) + 1e-300 {
        return Err(Error::SurrogateFitFailed(format!("residual {sse:.3e} above constant baseline {baseline:.3e}")));
    }
    let epsilon = log_eps.exp();
    let (offset, amplitude, _) = linear_part(&detuning, &values, epsilon);
    Ok(SurrogateFit {
        offset,
        amplitude,
        epsilon,
        omega_c,
        detuning_fit: omega_fit.clone(),
        rms_residual: (sse / n as f64).sqrt(),
    })
}

/// Least-squares `(offset, amplitude, sse)` for fixed `epsilon`.
fn linear_part(detuning: &[f64], values: &[f64], epsilon: f64) -> (f64, f64, f64) {
    let n = values.len();
    let design = DMatrix::from_row_iterator(n, 2, detuning.iter().flat_map(|&d| [1.0, 1.0 / d.hypot(epsilon)]));
    let target = DVector::from_column_slice(values);
    let svd = design.svd(true, true);
    let tol = RANK_TOL * svd.singular_values.max();
    let Ok(coef) = svd.solve(&target, tol) else {
        return (f64::NAN, f64::NAN, f64::INFINITY);
    };
    let sse =
        detuning.iter().zip(values).map(|(&d, &v)| (surrogate_value(coef[0], coef[1], epsilon, d) - v).powi(2)).sum();
    (coef[0], coef[1], sse)
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-12 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Interaction curve: a surrogate where the surrogate fit succeeds, a
/// harmonic fit otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum InteractionFit {
    Surrogate(SurrogateFit),
    Harmonic(HarmonicFit),
}

impl InteractionFit {
    pub fn eval(&self, phi: f64) -> f64 {
        match self {
            InteractionFit::Surrogate(s) => s.eval(phi),
            InteractionFit::Harmonic(h) => h.eval(phi),
        }
    }

    pub fn rms_residual(&self) -> f64 {
        match self {
            InteractionFit::Surrogate(s) => s.rms_residual,
            InteractionFit::Harmonic(h) => h.rms_residual,
        }
    }

    /// Surrogate when possible; on "surrogate fit failed" falls back to a
    /// harmonic fit of `order`.
    pub fn fit(samples: &[(f64, f64)], omega_fit: &HarmonicFit, omega_c: f64, order: usize) -> Result<Self> {
        match fit_surrogate(samples, omega_fit, omega_c) {
            Ok(s) => Ok(InteractionFit::Surrogate(s)),
            Err(Error::SurrogateFitFailed(why)) => {
                log::warn!("surrogate fit failed ({why}); using harmonic fit");
                fit_harmonic(samples, order).map(InteractionFit::Harmonic)
            }
            Err(e) => Err(e),
        }
    }
}
