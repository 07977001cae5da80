//! Multivariate intensity of a CoRM with independent standard exponential
//! scores: `ρ̃_d(s) = (−1)^{d−1} f^{(d−1)}(s₁ + … + s_d)` where
//! `f(s) = ∫ z^{-1} e^{-s/z} ρ*(dz)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::directing::{DirectingFamily, DirectingMeasure};
use crate::error::{Error, Result};
use crate::model::CormSpec;
use crate::quad::{self, DerivativeConfig, Interval, QuadConfig};
use crate::report::{csv_line, fmt_f64};
use crate::special::bessel_k_scaled;

/// Refinement level of the fixed-node rule behind the finite-difference path.
const FIXED_LEVEL: u32 = 6;

/// `f(s) = ∫ z^{-1} e^{-s/z} ρ*(dz)`, integrated in `u = 1/z`.
pub fn f_exp(directing: &DirectingMeasure, s: f64, config: &QuadConfig) -> Result<f64> {
    intensity_at_sum(directing, 1, s, config)
}

/// `ρ̃_d(s) = ∫ z^{-d} e^{-(s₁+…+s_d)/z} ρ*(dz)` by direct quadrature.
pub fn intensity_direct(
    directing: &DirectingMeasure,
    s: &[f64],
    config: &QuadConfig,
) -> Result<f64> {
    let total = checked_sum(s)?;
    intensity_at_sum(directing, s.len(), total, config)
}

fn checked_sum(s: &[f64]) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    if let Some(bad) = s.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "intensity arguments must be positive, got {bad}"
        )));
    }
    Ok(s.iter().sum())
}

fn intensity_at_sum(
    directing: &DirectingMeasure,
    d: usize,
    total: f64,
    config: &QuadConfig,
) -> Result<f64> {
    let power = d as f64 - 2.0;
    // ∫ u^{d-2} e^{-S u} ρ(1/u) du
    let integrand = |u: f64| (power * u.ln() - total * u + directing.ln_density(1.0 / u)).exp();
    let r = quad::integrate(integrand, Interval::positive_half_line(), config)?;
    if !r.is_convergent() {
        return Err(Error::DivergentIntensity { at: total });
    }
    Ok(r.value)
}

// f(s) = ∫ v^{-1} e^{-v} ρ(s/v) dv on fixed nodes: smooth in s.
fn f_exp_fixed(directing: &DirectingMeasure, s: f64) -> f64 {
    let integrand = |v: f64| (-v.ln() - v + directing.ln_density(s / v)).exp();
    quad::integrate_fixed(integrand, 0.0, f64::INFINITY, FIXED_LEVEL).unwrap_or(f64::NAN)
}

/// Closed form of `(−1)^{d−1} f^{(d−1)}(S)` when the directing family has one.
pub fn analytic_intensity(directing: &DirectingMeasure, d: usize, total: f64) -> Option<f64> {
    let dd = d as f64;
    match directing.family() {
        DirectingFamily::SigmaStable { sigma } => {
            Some((sigma.ln() + ln_gamma(dd + sigma) - (dd + sigma) * total.ln()).exp())
        }
        DirectingFamily::SigmaStableNormalized { sigma } => Some(
            (sigma.ln() + ln_gamma(dd + sigma) - ln_gamma(1.0 - sigma) - (dd + sigma) * total.ln())
                .exp(),
        ),
        DirectingFamily::FiniteExponential => {
            // 2 S^{-m/2} K_m(2√S), m = d − 1
            let m = d as u32 - 1;
            let x = 2.0 * total.sqrt();
            Some(2.0 * total.powf(-0.5 * m as f64) * bessel_k_scaled(m, x) * (-x).exp())
        }
        DirectingFamily::GammaProcess => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeIntensity {
    pub value: f64,
    /// Extrapolation error estimate; zero on the analytic path.
    pub error: f64,
    pub method: DerivativeMethod,
}

/// `(−1)^{d−1} f^{(d−1)}(s₁+…+s_d)`: analytic when registered, otherwise
/// Richardson-extrapolated differences of `f` (orders up to 6).
pub fn intensity_via_derivative(
    directing: &DirectingMeasure,
    s: &[f64],
    config: &DerivativeConfig,
) -> Result<DerivativeIntensity> {
    let total = checked_sum(s)?;
    let d = s.len();
    if let Some(value) = analytic_intensity(directing, d, total) {
        return Ok(DerivativeIntensity {
            value,
            error: 0.0,
            method: DerivativeMethod::Analytic,
        });
    }
    let order = d as u32 - 1;
    let est = quad::derivative(|x| f_exp_fixed(directing, x), total, order, config)?;
    let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(DerivativeIntensity {
        value: sign * est.value,
        error: est.error,
        method: DerivativeMethod::FiniteDifference,
    })
}

/// Exponential-score intensity bound to a directing measure and dimension.
#[derive(Debug, Clone)]
pub struct ExpCormIntensity {
    pub directing: DirectingMeasure,
    pub d: usize,
    pub quad: QuadConfig,
    pub derivative: DerivativeConfig,
}

impl ExpCormIntensity {
    /// Requires every score to be a standard exponential.
    pub fn from_spec(spec: &CormSpec) -> Result<Self> {
        if !spec.score.all_standard_exponential() {
            return Err(Error::NonExponentialScores);
        }
        Ok(Self {
            directing: spec.directing.clone(),
            d: spec.dim(),
            quad: QuadConfig::default(),
            derivative: DerivativeConfig::default(),
        })
    }

    pub fn f(&self, s: f64) -> Result<f64> {
        f_exp(&self.directing, s, &self.quad)
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        analytic_intensity(&self.directing, 1, 1.0).is_some()
    }

    pub fn direct(&self, s: &[f64]) -> Result<f64> {
        self.check_dim(s)?;
        intensity_direct(&self.directing, s, &self.quad)
    }

    pub fn via_derivative(&self, s: &[f64]) -> Result<DerivativeIntensity> {
        self.check_dim(s)?;
        intensity_via_derivative(&self.directing, s, &self.derivative)
    }

    fn check_dim(&self, s: &[f64]) -> Result<()> {
        if s.len() == self.d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.d,
                got: s.len(),
            })
        }
    }
}

/// `n` points in `(0, ∞)^d` with log-uniform components on `[0.05, 5]`.
pub fn sample_points(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (0.05_f64.ln(), 5.0_f64.ln());
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(lo..hi).exp()).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpIntensityRow {
    pub d: usize,
    pub s: Vec<f64>,
    pub direct: f64,
    pub derivative: f64,
    pub method: DerivativeMethod,
    pub rel_dev: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpIntensityReport {
    pub directing: String,
    pub tol: f64,
    pub rows: Vec<ExpIntensityRow>,
    pub max_rel_dev: f64,
    pub all_pass: bool,
}

impl ExpIntensityReport {
    /// Turns the first failing row into an error.
    pub fn ensure(&self) -> Result<()> {
        match self.rows.iter().find(|r| !r.pass) {
            None => Ok(()),
            Some(r) => Err(Error::AssertionFailure {
                point: format!("d={} s={:?}", r.d, r.s),
                deviation: r.rel_dev,
                tolerance: self.tol,
            }),
        }
    }

    /// CSV with columns `d,s,sum,direct,derivative,method,rel_dev,pass`; the
    /// components of `s` are separated by `;`.
    pub fn to_csv(&self) -> String {
        let mut out = csv_line([
            "d",
            "s",
            "sum",
            "direct",
            "derivative",
            "method",
            "rel_dev",
            "pass",
        ]);
        for r in &self.rows {
            let s: Vec<String> = r.s.iter().map(|&x| fmt_f64(x)).collect();
            out.push_str(&csv_line([
                r.d.to_string(),
                s.join(";"),
                fmt_f64(r.s.iter().sum()),
                fmt_f64(r.direct),
                fmt_f64(r.derivative),
                match r.method {
                    DerivativeMethod::Analytic => "analytic",
                    DerivativeMethod::FiniteDifference => "finite_difference",
                }
                .to_owned(),
                fmt_f64(r.rel_dev),
                r.pass.to_string(),
            ]));
        }
        out
    }
}

/// Compares the direct and derivative forms at every point. A point passes
/// when the relative deviation is strictly below `tol`, so `tol = 0` fails
/// everywhere.
pub fn verify_exp_intensity(
    directing: &DirectingMeasure,
    points: &[Vec<f64>],
    tol: f64,
    quad_config: &QuadConfig,
    derivative_config: &DerivativeConfig,
) -> Result<ExpIntensityReport> {
    let rows = points
        .par_iter()
        .map(|s| {
            let direct = intensity_direct(directing, s, quad_config)?;
            let via = intensity_via_derivative(directing, s, derivative_config)?;
            let rel_dev = ((direct - via.value) / direct).abs();
            Ok(ExpIntensityRow {
                d: s.len(),
                s: s.clone(),
                direct,
                derivative: via.value,
                method: via.method,
                rel_dev,
                pass: rel_dev < tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_rel_dev = rows.iter().map(|r| r.rel_dev).fold(0.0, f64::max);
    Ok(ExpIntensityReport {
        directing: directing.name(),
        tol,
        all_pass: rows.iter().all(|r| r.pass),
        rows,
        max_rel_dev,
    })
}
