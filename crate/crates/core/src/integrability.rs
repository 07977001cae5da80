//! Well-posedness of compound random measures: the per-marginal integral
//! conditions, the density shortcuts, the closed-form verdicts for Gamma and
//! Beta scores over stable directing measures, and the multivariate
//! reduction.

use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directing::{DirectingFamily, DirectingMeasure};
use crate::error::Result;
use crate::model::{BaseMeasure, CormSpec};
use crate::quad::{self, IntegralResult, Interval, QuadConfig, Verdict};
use crate::report::{csv_line, fmt_f64};
use crate::score::{MarginalScore, ScoreFamily};

/// Verdict lattice shared by marginal and multivariate checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Posedness {
    WellPosed,
    IllPosed,
    Inconclusive,
}

impl Posedness {
    /// Process exit code: 0, 1 or 2.
    pub fn exit_code(self) -> i32 {
        match self {
            Posedness::WellPosed => 0,
            Posedness::IllPosed => 1,
            Posedness::Inconclusive => 2,
        }
    }
}

/// Closed-form verdict for Gamma and Beta scores over a stable directing
/// measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticVerdict {
    WellPosed,
    IllPosed,
    /// `shape + σ = 1`: not adjudicated.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticFamily {
    Gamma,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortcutStatus {
    Holds,
    Fails,
    Inconclusive,
}

/// Numerical limit evaluation along a dyadic sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortcutCheck {
    pub status: ShortcutStatus,
    /// Estimated limit; `None` when the sequence diverges or does not settle.
    pub limit: Option<f64>,
    /// Fitted slope of the log-sequence per halving step.
    pub log_slope: f64,
}

/// Per-marginal well-posedness report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalVerdict {
    pub j: usize,
    pub score: String,
    pub directing: String,
    /// `α(X) ∫_0^1 P(S_j ≥ 1/z) ρ*(dz)`.
    pub small_jumps: IntegralResult,
    /// `α(X) ∫_1^∞ P(S_j ≤ 1/z) z ρ*(dz)`.
    pub large_jumps: IntegralResult,
    /// `lim_{z→0} h_j(1/z) / z² < 1`.
    pub tail_shortcut: ShortcutCheck,
    /// `lim_{ε→0} h_j(ε) < ∞`.
    pub origin_shortcut: ShortcutCheck,
    /// `α(X) E[∫ min{1, S_j z} ρ*(dz)]`, the Lévy integral of the marginal
    /// intensity evaluated directly; `None` when it could not be computed.
    pub levy_integral: Option<IntegralResult>,
    /// Closed-form verdict when the (score, directing) pair has one.
    pub analytic: Option<AnalyticVerdict>,
    pub overall: Posedness,
}

/// Multivariate reduction plus the optional direct check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CormVerdict {
    pub marginals: Vec<MarginalVerdict>,
    pub multivariate: Posedness,
    pub direct: Option<DirectCheck>,
}

/// Direct evaluation of `∫ min{1, ‖s‖} ν̃_d(ds, X)` against the bound
/// `√d Σ_j ∫ min{1, s} ν_j(ds, X)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectCheck {
    pub result: IntegralResult,
    #[serde(with = "crate::report::float")]
    pub bound: f64,
    pub within_bound: bool,
}

/// Options for [`check_corm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub quad: QuadConfig,
    /// Run the direct multivariate check (only for `d ≤ 3`).
    pub direct: bool,
    /// Slack factor on the multivariate bound.
    pub bound_slack: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            quad: QuadConfig::default(),
            direct: false,
            bound_slack: 1.01,
        }
    }
}

/// `α(X) ∫_0^1 (1 − H_j(1/z)) ρ*(dz)`, integrated in `u = 1/z`.
pub fn check_small_jumps(
    score: &MarginalScore,
    directing: &DirectingMeasure,
    base: &BaseMeasure,
    config: &QuadConfig,
) -> Result<IntegralResult> {
    let (_, hi) = score.support();
    if hi <= 1.0 {
        // S_j ≤ 1 < 1/z on (0, 1)
        return Ok(IntegralResult::exact_zero());
    }
    let r = quad::integrate_reciprocal(
        |z: f64| {
            let p = score.survival(1.0 / z);
            if p == 0.0 {
                0.0
            } else {
                p * directing.density(z)
            }
        },
        Interval::open_closed(0.0, 1.0),
        config,
    )?;
    Ok(r.scaled(base.total_mass))
}

/// `α(X) ∫_1^∞ H_j(1/z) z ρ*(dz)`, integrated in `u = 1/z`.
pub fn check_large_jumps(
    score: &MarginalScore,
    directing: &DirectingMeasure,
    base: &BaseMeasure,
    config: &QuadConfig,
) -> Result<IntegralResult> {
    let (lo, _) = score.support();
    if lo >= 1.0 {
        // S_j ≥ 1 > 1/z on (1, ∞)
        return Ok(IntegralResult::exact_zero());
    }
    let r = quad::integrate_reciprocal(
        |z: f64| {
            let p = score.cdf(1.0 / z);
            if p == 0.0 {
                0.0
            } else {
                p * z * directing.density(z)
            }
        },
        Interval::closed_open(1.0, f64::INFINITY),
        config,
    )?;
    Ok(r.scaled(base.total_mass))
}

const SHORTCUT_STEPS: std::ops::RangeInclusive<i32> = 20..=60;
const SLOPE_TOL: f64 = 0.01;
const LIMIT_BAND: f64 = 0.01;

// Classifies a log-sequence indexed by halving steps.
fn classify_sequence(logs: &[(f64, f64)], threshold: Option<f64>) -> ShortcutCheck {
    if logs.iter().all(|&(_, l)| l == f64::NEG_INFINITY) {
        return ShortcutCheck {
            status: ShortcutStatus::Holds,
            limit: Some(0.0),
            log_slope: f64::NEG_INFINITY,
        };
    }
    if logs.iter().any(|&(_, l)| l.is_nan() || l == f64::INFINITY) {
        return ShortcutCheck {
            status: ShortcutStatus::Inconclusive,
            limit: None,
            log_slope: f64::NAN,
        };
    }
    let finite: Vec<(f64, f64)> = logs.iter().copied().filter(|p| p.1.is_finite()).collect();
    if finite.len() < logs.len() {
        // vanishes identically from some step on
        let tail_vanishes = logs.last().is_some_and(|p| p.1 == f64::NEG_INFINITY);
        return ShortcutCheck {
            status: if tail_vanishes {
                ShortcutStatus::Holds
            } else {
                ShortcutStatus::Inconclusive
            },
            limit: tail_vanishes.then_some(0.0),
            log_slope: f64::NEG_INFINITY,
        };
    }
    let slope = quad::slope(&finite);
    if slope < -SLOPE_TOL {
        return ShortcutCheck {
            status: ShortcutStatus::Holds,
            limit: Some(0.0),
            log_slope: slope,
        };
    }
    if slope > SLOPE_TOL {
        return ShortcutCheck {
            status: ShortcutStatus::Fails,
            limit: None,
            log_slope: slope,
        };
    }
    let n = finite.len();
    let last = finite[n - 1].1;
    let settled = (last - finite[n - 2].1).abs() < 1e-6 && (last - finite[n - 6].1).abs() < 1e-5;
    if !settled {
        return ShortcutCheck {
            status: ShortcutStatus::Inconclusive,
            limit: None,
            log_slope: slope,
        };
    }
    let limit = last.exp();
    let status = match threshold {
        None => ShortcutStatus::Holds,
        Some(t) if limit < t * (1.0 - LIMIT_BAND) => ShortcutStatus::Holds,
        Some(t) if limit > t * (1.0 + LIMIT_BAND) => ShortcutStatus::Fails,
        Some(_) => ShortcutStatus::Inconclusive,
    };
    ShortcutCheck {
        status,
        limit: Some(limit),
        log_slope: slope,
    }
}

/// Evaluates `lim_{z→0} h_j(1/z)/z²` along `z = 2^-k` and compares it with 1.
pub fn check_tail_shortcut(score: &MarginalScore) -> ShortcutCheck {
    let logs: Vec<(f64, f64)> = SHORTCUT_STEPS
        .map(|k| {
            let k = k as f64;
            (
                k,
                score.ln_density(k.exp2()) + 2.0 * k * std::f64::consts::LN_2,
            )
        })
        .collect();
    classify_sequence(&logs, Some(1.0))
}

/// Evaluates `lim_{ε→0} h_j(ε)` along `ε = 2^-k`; holds when bounded.
pub fn check_origin_shortcut(score: &MarginalScore) -> ShortcutCheck {
    let logs: Vec<(f64, f64)> = SHORTCUT_STEPS
        .map(|k| (k as f64, score.ln_density((-k as f64).exp2())))
        .collect();
    classify_sequence(&logs, None)
}

/// Closed-form verdict: ill-posed iff `shape + σ < 1`.
///
/// Both families share the criterion; the family is kept for reporting.
pub fn analytic_verdict_stable(_family: AnalyticFamily, shape: f64, sigma: f64) -> AnalyticVerdict {
    let excess = shape + sigma - 1.0;
    if excess.abs() <= 1e-9 {
        AnalyticVerdict::Boundary
    } else if excess < 0.0 {
        AnalyticVerdict::IllPosed
    } else {
        AnalyticVerdict::WellPosed
    }
}

fn analytic_for(score: &MarginalScore, directing: &DirectingMeasure) -> Option<AnalyticVerdict> {
    let sigma = match directing.family() {
        DirectingFamily::SigmaStable { sigma }
        | DirectingFamily::SigmaStableNormalized { sigma } => sigma,
        _ => return None,
    };
    match score.family()? {
        ScoreFamily::Gamma { shape, .. } => {
            Some(analytic_verdict_stable(AnalyticFamily::Gamma, shape, sigma))
        }
        ScoreFamily::Beta { alpha, .. } => {
            Some(analytic_verdict_stable(AnalyticFamily::Beta, alpha, sigma))
        }
        ScoreFamily::Exponential => {
            Some(analytic_verdict_stable(AnalyticFamily::Gamma, 1.0, sigma))
        }
    }
}

/// `α(X) E[G(S_j)]` with `G(r) = ∫ min{1, r z} ρ*(dz)`.
pub fn marginal_levy_integral(
    score: &MarginalScore,
    directing: &DirectingMeasure,
    base: &BaseMeasure,
    config: &QuadConfig,
) -> Result<IntegralResult> {
    Ok(score
        .expect(|s| directing.min_one_moment(s), config)?
        .scaled(base.total_mass))
}

/// Combines both integral conditions and the shortcuts for marginal `j`.
pub fn check_marginal(
    j: usize,
    score: &MarginalScore,
    directing: &DirectingMeasure,
    base: &BaseMeasure,
    config: &QuadConfig,
) -> Result<MarginalVerdict> {
    let small_jumps = check_small_jumps(score, directing, base, config)?;
    let large_jumps = check_large_jumps(score, directing, base, config)?;
    let overall = match (small_jumps.verdict, large_jumps.verdict) {
        (Verdict::Convergent, Verdict::Convergent) => Posedness::WellPosed,
        (Verdict::Divergent, _) | (_, Verdict::Divergent) => Posedness::IllPosed,
        _ => Posedness::Inconclusive,
    };
    Ok(MarginalVerdict {
        j,
        score: score.name(),
        directing: directing.name(),
        small_jumps,
        large_jumps,
        tail_shortcut: check_tail_shortcut(score),
        origin_shortcut: check_origin_shortcut(score),
        levy_integral: marginal_levy_integral(score, directing, base, config).ok(),
        analytic: analytic_for(score, directing),
        overall,
    })
}

/// Checks every marginal (in parallel) and reduces to a multivariate
/// verdict: well posed when all marginals are, ill posed when any is.
pub fn check_corm(spec: &CormSpec, options: &CheckOptions) -> Result<CormVerdict> {
    options.quad.validate()?;
    let marginals = spec
        .score
        .marginals()
        .par_iter()
        .enumerate()
        .map(|(j, m)| check_marginal(j + 1, m, &spec.directing, &spec.base, &options.quad))
        .collect::<Result<Vec<_>>>()?;
    let multivariate = if marginals.iter().all(|m| m.overall == Posedness::WellPosed) {
        Posedness::WellPosed
    } else if marginals.iter().any(|m| m.overall == Posedness::IllPosed) {
        Posedness::IllPosed
    } else {
        Posedness::Inconclusive
    };
    let direct = if options.direct && spec.dim() <= 3 {
        let result = direct_joint_integral(spec, &options.quad)?;
        let sum: Option<f64> = marginals
            .iter()
            .map(|m| {
                m.levy_integral
                    .as_ref()
                    .filter(|r| r.is_convergent())
                    .map(|r| r.value)
            })
            .sum();
        let bound = sum.map_or(f64::INFINITY, |s| (spec.dim() as f64).sqrt() * s);
        let within_bound = result.is_convergent() && result.value <= bound * options.bound_slack;
        Some(DirectCheck {
            result,
            bound,
            within_bound,
        })
    } else {
        None
    };
    Ok(CormVerdict {
        marginals,
        multivariate,
        direct,
    })
}

const INNER_TOL: f64 = 1e-7;
const INNER_LEVEL: u32 = 9;

/// `α(X) ∫ min{1, ‖s‖} ν̃_d(ds)`, reduced to `α(X) E[G(‖S‖)]` and evaluated by
/// nested quadrature over the scores. Only the outermost level is probed for
/// divergence.
pub fn direct_joint_integral(spec: &CormSpec, config: &QuadConfig) -> Result<IntegralResult> {
    let d = spec.dim();
    if d > 3 {
        return Err(crate::Error::InvalidArgument(format!(
            "direct multivariate check supports d ≤ 3, got {d}"
        )));
    }
    let marg = spec.score.marginals();
    let dm = &spec.directing;
    let inner_ok = AtomicBool::new(true);
    let rest = |r2: f64| nested_expectation(marg, dm, r2, 1, &inner_ok);
    let first = &marg[0];
    let (lo, hi) = first.support();
    let mut r = quad::integrate_partitioned(
        |s: f64| {
            let h = first.density(s);
            if h == 0.0 {
                0.0
            } else {
                h * rest(s * s)
            }
        },
        lo,
        hi,
        &first.breakpoints(),
        config,
    )?;
    if !inner_ok.load(Ordering::Relaxed) && r.verdict == Verdict::Convergent {
        r.verdict = Verdict::Inconclusive;
    }
    Ok(r.scaled(spec.base.total_mass))
}

// E[G(sqrt(r2 + Σ_{k ≥ from} S_k²))] by nested value-only quadrature
fn nested_expectation(
    marg: &[MarginalScore],
    dm: &DirectingMeasure,
    r2: f64,
    from: usize,
    ok: &AtomicBool,
) -> f64 {
    if from == marg.len() {
        return dm.min_one_moment(r2.sqrt());
    }
    let m = &marg[from];
    let (lo, hi) = m.support();
    let f = |s: f64| {
        let h = m.density(s);
        if h == 0.0 {
            0.0
        } else {
            h * nested_expectation(marg, dm, r2 + s * s, from + 1, ok)
        }
    };
    match quad::integrate_value(f, lo, hi, &m.breakpoints(), INNER_TOL, INNER_LEVEL) {
        Ok((v, converged)) => {
            if !converged {
                ok.store(false, Ordering::Relaxed);
            }
            v
        }
        Err(_) => f64::NAN,
    }
}

/// Long-format table of the integral conditions: one row per marginal and
/// condition.
pub fn conditions_csv(verdict: &CormVerdict) -> String {
    let mut out = csv_line([
        "j",
        "condition",
        "value",
        "error_estimate",
        "verdict",
        "exponent",
    ]);
    let verdict_name = |v: Verdict| match v {
        Verdict::Convergent => "convergent",
        Verdict::Divergent => "divergent",
        Verdict::Inconclusive => "inconclusive",
    };
    for m in &verdict.marginals {
        let rows = [
            ("small_jumps", Some(&m.small_jumps)),
            ("large_jumps", Some(&m.large_jumps)),
            ("levy_integral", m.levy_integral.as_ref()),
        ];
        for (name, r) in rows {
            let Some(r) = r else { continue };
            out.push_str(&csv_line([
                m.j.to_string(),
                name.to_owned(),
                fmt_f64(r.value),
                fmt_f64(r.error_estimate),
                verdict_name(r.verdict).to_owned(),
                r.offending_exponent().map_or_else(String::new, fmt_f64),
            ]));
        }
    }
    if let Some(d) = &verdict.direct {
        out.push_str(&csv_line([
            "all".to_owned(),
            "multivariate".to_owned(),
            fmt_f64(d.result.value),
            fmt_f64(d.result.error_estimate),
            verdict_name(d.result.verdict).to_owned(),
            d.result
                .offending_exponent()
                .map_or_else(String::new, fmt_f64),
        ]));
    }
    out
}
