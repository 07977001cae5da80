//! Marginal intensities and tail integrals from the identity
//! `ν_j(A) = E[ν*(A / S_j)]`, and regular-variation diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directing::DirectingMeasure;
use crate::error::{Error, Result};
use crate::quad::{self, QuadConfig};
use crate::report::{csv_line, fmt_f64};
use crate::score::MarginalScore;

/// Density and tail of the j-th marginal intensity (per unit base mass).
#[derive(Debug, Clone)]
pub struct MarginalIntensity {
    pub j: usize,
    pub score: MarginalScore,
    pub directing: DirectingMeasure,
    pub config: QuadConfig,
}

impl MarginalIntensity {
    pub fn new(
        j: usize,
        score: MarginalScore,
        directing: DirectingMeasure,
        config: QuadConfig,
    ) -> Self {
        Self {
            j,
            score,
            directing,
            config,
        }
    }

    pub fn density(&self, s: f64) -> Result<f64> {
        marginal_density(&self.score, &self.directing, s, &self.config)
    }

    pub fn tail(&self, y: f64) -> Result<f64> {
        marginal_tail(&self.score, &self.directing, y, &self.config)
    }
}

/// `f_j(s) = ∫ z^{-1} h_j(s/z) ρ*(dz)`, integrated in `u = 1/z`.
pub fn marginal_density(
    score: &MarginalScore,
    directing: &DirectingMeasure,
    s: f64,
    config: &QuadConfig,
) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "density requested at s = {s}"
        )));
    }
    // ∫ h(s u) ρ(1/u) / u du
    let integrand = |u: f64| {
        let lh = score.ln_density(s * u);
        if lh == f64::NEG_INFINITY {
            return 0.0;
        }
        (lh + directing.ln_density(1.0 / u) - u.ln()).exp()
    };
    let (lo, hi) = score.support();
    let cuts: Vec<f64> = score.breakpoints().iter().map(|b| b / s).collect();
    let r = quad::integrate_partitioned(integrand, lo / s, hi / s, &cuts, config)?;
    if !r.is_convergent() {
        return Err(Error::DivergentIntensity { at: s });
    }
    Ok(r.value)
}

/// `U_j(y) = E[U*(y / S_j)]`.
pub fn marginal_tail(
    score: &MarginalScore,
    directing: &DirectingMeasure,
    y: f64,
    config: &QuadConfig,
) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::InvalidArgument(format!("tail requested at y = {y}")));
    }
    if y.is_infinite() {
        return Ok(0.0);
    }
    let r = score.expect(|s| directing.tail(y / s), config)?;
    if !r.is_convergent() {
        return Err(Error::DivergentIntensity { at: y });
    }
    Ok(r.value)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() || n < 2 {
        return Err(Error::DegenerateGrid(format!("{lo}:{hi}:{n}")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}

/// Settings for [`estimate_rv_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct RvConfig {
    /// Points of the grid (smallest first) used for the slope fit.
    pub fit_points: usize,
    /// Scale factors of the ratio test.
    pub ratio_scales: Vec<f64>,
    /// Ratio-test entries must lie in `1 ± ratio_tol`.
    pub ratio_tol: f64,
    /// Estimated indices below this are reported as not detected.
    pub min_index: f64,
    /// Smallest grid points at which the ratio test is run.
    pub ratio_points: usize,
}

impl Default for RvConfig {
    fn default() -> Self {
        Self {
            fit_points: 20,
            ratio_scales: vec![2.0, 5.0],
            ratio_tol: 0.05,
            min_index: 0.01,
            ratio_points: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEntry {
    pub a: f64,
    pub t: f64,
    /// `l(a t) / l(t)` with `l(t) = U(1/t) t^{-σ̂}`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RvVerdict {
    RegularlyVarying { index: f64 },
    NotDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvDiagnostic {
    pub index: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub ratios: Vec<RatioEntry>,
    pub verdict: RvVerdict,
}

/// Estimates the index of regular variation at the origin of a tail
/// function from its values on `grid`.
pub fn estimate_rv_index<F>(tail: F, grid: &[f64], config: &RvConfig) -> Result<RvDiagnostic>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let mut ys: Vec<f64> = grid.to_vec();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    if ys.len() < 3 || !(ys[0] > 0.0) || !ys[ys.len() - 1].is_finite() {
        return Err(Error::DegenerateGrid(format!(
            "need at least 3 distinct positive points, got {}",
            ys.len()
        )));
    }
    if ys[ys.len() - 1] / ys[0] < 1e3 {
        return Err(Error::DegenerateGrid(format!(
            "grid spans {:.2} decades; at least 3 are required",
            (ys[ys.len() - 1] / ys[0]).log10()
        )));
    }
    let positive = |y: f64| -> Result<f64> {
        let v = tail(y)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DegenerateGrid(format!("tail is {v} at y = {y}")))
        }
    };
    let fit = &ys[..config.fit_points.clamp(3, ys.len())];
    let pts = fit
        .par_iter()
        .map(|&y| Ok((y.ln(), positive(y)?.ln())))
        .collect::<Result<Vec<_>>>()?;
    let slope = quad::slope(&pts);
    let index = -slope;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();

    let l = |t: f64| -> Result<f64> { Ok(positive(1.0 / t)? * t.powf(-index)) };
    let mut ratios = Vec::new();
    for &y in ys.iter().take(config.ratio_points.max(1)) {
        let t = 1.0 / y;
        let base = l(t)?;
        for &a in &config.ratio_scales {
            ratios.push(RatioEntry {
                a,
                t,
                ratio: l(a * t)? / base,
            });
        }
    }
    let ratios_ok = ratios
        .iter()
        .all(|r| (r.ratio - 1.0).abs() <= config.ratio_tol);
    let verdict = if ratios_ok && index >= config.min_index && index < 1.0 {
        RvVerdict::RegularlyVarying { index }
    } else {
        RvVerdict::NotDetected
    };
    Ok(RvDiagnostic {
        index,
        residual,
        ratios,
        verdict,
    })
}

/// One row of a tail table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub y: f64,
    pub u_star: f64,
    pub u_j: f64,
    /// `U_j(y) / U*(y)`.
    pub ratio: f64,
}

/// Settings for [`verify_tail_factorization`].
#[derive(Debug, Clone, PartialEq)]
pub struct TailsConfig {
    pub grid: Vec<f64>,
    pub quad: QuadConfig,
    pub rv: RvConfig,
    /// Allowed gap between the estimated and the directing index.
    pub index_tol: f64,
}

impl Default for TailsConfig {
    fn default() -> Self {
        Self {
            grid: log_grid(1e-6, 1e-1, 50).expect("valid default grid"),
            quad: QuadConfig::default(),
            rv: RvConfig::default(),
            index_tol: 0.02,
        }
    }
}

/// Index preservation report for one marginal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailFactorizationReport {
    pub j: usize,
    pub directing_index: f64,
    pub diagnostic: RvDiagnostic,
    /// `E[S_j^σ]`, the predicted ratio `U_j / U*` near the origin.
    pub moment: f64,
    /// Largest `|U_j/U* − E[S_j^σ]| / E[S_j^σ]` over the grid.
    pub max_factor_deviation: f64,
    pub index_matches: bool,
    pub table: Vec<TailRow>,
}

/// Checks that the marginal tail inherits the directing index and reports
/// the factor `E[S_j^σ]`.
pub fn verify_tail_factorization(
    j: usize,
    score: &MarginalScore,
    directing: &DirectingMeasure,
    config: &TailsConfig,
) -> Result<TailFactorizationReport> {
    let sigma = directing.rv_index().ok_or_else(|| {
        Error::InvalidArgument(format!("{} is not regularly varying", directing.name()))
    })?;
    let moment = score.fractional_moment(sigma)?;
    let table = config
        .grid
        .par_iter()
        .map(|&y| {
            let u_star = directing.tail(y);
            let u_j = marginal_tail(score, directing, y, &config.quad)?;
            Ok(TailRow {
                y,
                u_star,
                u_j,
                ratio: u_j / u_star,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_factor_deviation = table
        .iter()
        .map(|r| (r.ratio - moment).abs() / moment)
        .fold(0.0, f64::max);
    let diagnostic = estimate_rv_index(
        |y| marginal_tail(score, directing, y, &config.quad),
        &config.grid,
        &config.rv,
    )?;
    let index_matches = match diagnostic.verdict {
        RvVerdict::RegularlyVarying { index } => (index - sigma).abs() <= config.index_tol,
        RvVerdict::NotDetected => sigma < config.rv.min_index,
    };
    Ok(TailFactorizationReport {
        j,
        directing_index: sigma,
        diagnostic,
        moment,
        max_factor_deviation,
        index_matches,
        table,
    })
}

/// CSV with columns `y,U_star,U_j,ratio`.
pub fn tail_table_csv(rows: &[TailRow]) -> String {
    let mut out = csv_line(["y", "U_star", "U_j", "ratio"]);
    for r in rows {
        out.push_str(&csv_line([r.y, r.u_star, r.u_j, r.ratio].map(fmt_f64)));
    }
    out
}
