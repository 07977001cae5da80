//! Divergence-aware integration of improper integrals and high-order
//! numerical differentiation.
//!
//! No quadrature rule can prove that an integral diverges. [`integrate`]
//! therefore decides convergence operationally, per open endpoint, from two
//! independent signals:
//!
//! * the local power-law exponent of the integrand, fitted on a geometric
//!   window of sample points approaching the endpoint;
//! * a truncation ladder: the integral over the dyadic shells
//!   `[ε/2^(k+1), ε/2^k]` (or `[M·2^k, M·2^(k+1)]` at infinity) for
//!   `k = 0, 1, …`, whose growth rate gives a second exponent estimate.
//!
//! An endpoint is integrable only when both signals agree and divergent only
//! when both signals agree; anything else is reported as inconclusive. The
//! value itself comes from a double-exponential rule over the whole interval.

mod de;
mod derivative;
mod legendre;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use derivative::{derivative, DerivativeConfig, DerivativeEstimate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("integrand evaluated to {value} at interior point {at}")]
    EvaluationFailure { at: f64, value: f64 },
    #[error("integrand is not positive on the sampling window (value {value} at {at})")]
    NonPositiveSamples { at: f64, value: f64 },
    #[error("finite-difference step underflowed at s = {at}")]
    StepUnderflow { at: f64 },
    #[error("Richardson extrapolation stalled: best error estimate {error:e} for value {value:e}")]
    NoisePlateau { value: f64, error: f64 },
    #[error("invalid integration domain ({lo}, {hi})")]
    InvalidDomain { lo: f64, hi: f64 },
    #[error("derivative order {0} exceeds the supported maximum of 6")]
    InvalidOrder(u32),
}

/// Tolerances and ladder geometry for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Truncated integrals beyond this magnitude count as unbounded growth.
    pub divergence_threshold: f64,
    /// Number of dyadic shells in the truncation ladder (at most 60).
    pub ladder_rungs: u32,
    /// Shells used for the ladder growth-rate fit.
    pub ladder_window: usize,
    /// Sample points `2^-k` (or `2^k`) with `k` in this range feed the
    /// pointwise exponent fit.
    pub exponent_window: (u32, u32),
    /// Half-width of the band around the critical exponent −1 inside which
    /// the pointwise fit is considered borderline.
    pub exponent_tol: f64,
    /// Refinement levels of the double-exponential rule.
    pub max_level: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            divergence_threshold: 1e12,
            ladder_rungs: 60,
            ladder_window: 10,
            exponent_window: (20, 40),
            exponent_tol: 0.01,
            max_level: 10,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<(), crate::Error> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.divergence_threshold > 0.0
            && (1..=60).contains(&self.ladder_rungs)
            && self.ladder_window >= 3
            && self.exponent_window.0 < self.exponent_window.1
            && self.exponent_window.1 <= 60
            && self.exponent_tol > 0.0
            && self.max_level >= 3;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidArgument(format!(
                "invalid quadrature configuration {self:?}"
            )))
        }
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Integration interval `(lo, hi)` with `hi` possibly `+∞`.
///
/// A finite endpoint flagged regular is known to carry no singularity and
/// is not probed for divergence. Infinity is always probed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_regular: bool,
    pub hi_regular: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_regular: false,
            hi_regular: false,
        }
    }

    /// `[lo, hi)`: the lower endpoint is regular.
    pub fn closed_open(lo: f64, hi: f64) -> Self {
        Self {
            lo_regular: true,
            ..Self::open(lo, hi)
        }
    }

    /// `(lo, hi]`: the upper endpoint is regular.
    pub fn open_closed(lo: f64, hi: f64) -> Self {
        Self {
            hi_regular: hi.is_finite(),
            ..Self::open(lo, hi)
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo_regular: true,
            hi_regular: hi.is_finite(),
            ..Self::open(lo, hi)
        }
    }

    pub fn positive_half_line() -> Self {
        Self::open(0.0, f64::INFINITY)
    }

    fn check(&self) -> Result<(), QuadError> {
        if self.lo.is_finite() && !self.hi.is_nan() && self.hi > self.lo {
            Ok(())
        } else {
            Err(QuadError::InvalidDomain {
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    // ladder base scale
    fn shell_scale(&self) -> f64 {
        if self.hi.is_infinite() {
            1.0_f64.max(self.lo.abs())
        } else {
            0.5 * (self.hi - self.lo)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointBehaviour {
    Integrable,
    Divergent,
    Undecided,
}

/// Why the truncation ladder stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderStop {
    /// Shell contributions fell below the tolerance.
    Negligible,
    /// The truncated integral exceeded the divergence threshold.
    Threshold,
    /// All rungs were used.
    Exhausted,
    /// Shells collapsed onto a nonzero endpoint in floating point.
    Resolution,
}

/// Divergence evidence collected at one open endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointEvidence {
    pub side: Side,
    #[serde(with = "crate::report::float")]
    pub location: f64,
    /// Fitted local exponent of `f`; `None` when `f` vanishes faster than
    /// any power on the sampling window.
    pub pointwise_exponent: Option<f64>,
    /// Exponent implied by the growth of the ladder shells.
    pub ladder_exponent: Option<f64>,
    /// Truncated integrals over `[ε_k, ε_0]` (or `[M_0, M_k]`).
    pub truncation: Vec<f64>,
    pub ladder_stop: LadderStop,
    pub behaviour: EndpointBehaviour,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    /// Meaningful only when the verdict is [`Verdict::Convergent`].
    #[serde(with = "crate::report::float")]
    pub value: f64,
    #[serde(with = "crate::report::float")]
    pub error_estimate: f64,
    pub verdict: Verdict,
    pub evidence: Vec<EndpointEvidence>,
    pub evaluations: usize,
}

impl IntegralResult {
    pub fn is_convergent(&self) -> bool {
        self.verdict == Verdict::Convergent
    }

    /// A convergent zero integral, used where the integrand vanishes
    /// identically on the domain for structural reasons.
    pub fn exact_zero() -> Self {
        Self {
            value: 0.0,
            error_estimate: 0.0,
            verdict: Verdict::Convergent,
            evidence: Vec::new(),
            evaluations: 0,
        }
    }

    /// Sum of integrals over adjacent pieces: divergent if any piece
    /// diverges, otherwise convergent only if every piece converges.
    pub fn merge(mut self, other: Self) -> Self {
        self.value += other.value;
        self.error_estimate += other.error_estimate;
        self.evaluations += other.evaluations;
        self.evidence.extend(other.evidence);
        self.verdict = match (self.verdict, other.verdict) {
            (Verdict::Divergent, _) | (_, Verdict::Divergent) => Verdict::Divergent,
            (Verdict::Convergent, Verdict::Convergent) => Verdict::Convergent,
            _ => Verdict::Inconclusive,
        };
        self
    }

    /// Multiplies the value by a positive constant.
    pub fn scaled(mut self, c: f64) -> Self {
        self.value *= c;
        self.error_estimate *= c.abs();
        for e in &mut self.evidence {
            for v in &mut e.truncation {
                *v *= c;
            }
        }
        self
    }

    /// Most informative exponent found at a divergent or undecided endpoint.
    pub fn offending_exponent(&self) -> Option<f64> {
        self.evidence
            .iter()
            .find(|e| e.behaviour != EndpointBehaviour::Integrable)
            .and_then(|e| e.pointwise_exponent.or(e.ladder_exponent))
    }
}

/// Endpoint for [`estimate_endpoint_exponent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoint {
    /// Approached from above: `x = a + δ`.
    Lower(f64),
    /// Approached from below: `x = b − δ`.
    Upper(f64),
    /// `x → ∞`.
    Infinity,
}

/// Sample geometry: distances `scale·2^-k` (or abscissae `scale·2^k` at
/// infinity) for `k_min ≤ k ≤ k_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentWindow {
    pub scale: f64,
    pub k_min: u32,
    pub k_max: u32,
}

impl Default for ExponentWindow {
    fn default() -> Self {
        Self {
            scale: 1.0,
            k_min: 20,
            k_max: 40,
        }
    }
}

impl Endpoint {
    // abscissa and log-distance for sample k
    fn sample(self, scale: f64, k: u32) -> (f64, f64) {
        let step = 2f64.powi(k as i32);
        match self {
            Endpoint::Lower(a) => {
                let d = scale / step;
                (a + d, d.ln())
            }
            Endpoint::Upper(b) => {
                let d = scale / step;
                (b - d, d.ln())
            }
            Endpoint::Infinity => {
                let x = scale * step;
                (x, x.ln())
            }
        }
    }
}

/// Least-squares slope of `ln f` against the log-distance to `endpoint`.
///
/// For `f(z) = z^p` at 0 this returns `p`; at infinity it returns the decay
/// exponent (so `z^-2` gives −2).
pub fn estimate_endpoint_exponent<F: Fn(f64) -> f64>(
    f: F,
    endpoint: Endpoint,
    window: ExponentWindow,
) -> Result<f64, QuadError> {
    if window.k_min >= window.k_max || !(window.scale > 0.0) {
        return Err(QuadError::InvalidDomain {
            lo: window.k_min as f64,
            hi: window.k_max as f64,
        });
    }
    let mut pts = Vec::with_capacity((window.k_max - window.k_min + 1) as usize);
    for k in window.k_min..=window.k_max {
        let (x, ld) = endpoint.sample(window.scale, k);
        let y = f(x);
        if !(y > 0.0) || !y.is_finite() {
            return Err(QuadError::NonPositiveSamples { at: x, value: y });
        }
        pts.push((ld, y.ln()));
    }
    Ok(slope(&pts))
}

pub(crate) fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Integrates `f` over `domain` and classifies the integral as convergent,
/// divergent or inconclusive.
pub fn integrate<F>(
    f: F,
    domain: Interval,
    config: &QuadConfig,
) -> Result<IntegralResult, QuadError>
where
    F: Fn(f64) -> f64,
{
    domain.check()?;
    let de = de::integrate(
        &f,
        domain.lo,
        domain.hi,
        config.rel_tol,
        config.abs_tol,
        3,
        config.max_level,
    )?;
    let mut evaluations = de.evaluations;
    let mut evidence = Vec::new();
    let scale = domain.shell_scale();
    if !domain.lo_regular {
        let (ev, n) = probe(&f, Endpoint::Lower(domain.lo), Side::Lower, scale, config);
        evaluations += n;
        evidence.push(ev);
    }
    if domain.hi.is_infinite() {
        let (ev, n) = probe(&f, Endpoint::Infinity, Side::Upper, scale, config);
        evaluations += n;
        evidence.push(ev);
    } else if !domain.hi_regular {
        let (ev, n) = probe(&f, Endpoint::Upper(domain.hi), Side::Upper, scale, config);
        evaluations += n;
        evidence.push(ev);
    }

    let verdict = if evidence
        .iter()
        .any(|e| e.behaviour == EndpointBehaviour::Divergent)
    {
        Verdict::Divergent
    } else if evidence
        .iter()
        .all(|e| e.behaviour == EndpointBehaviour::Integrable)
        && de.converged
        && de.value.is_finite()
        && de.error <= config.tolerance(de.value)
    {
        Verdict::Convergent
    } else {
        Verdict::Inconclusive
    };
    Ok(IntegralResult {
        value: de.value,
        error_estimate: de.error,
        verdict,
        evidence,
        evaluations,
    })
}

/// Integrates `f` over `domain` after the substitution `u = 1/z`, i.e.
/// evaluates `∫_{1/hi}^{1/lo} f(1/u) u⁻² du`.
///
/// Integrands built from `g(1/z)` (essential singularities such as
/// `e^{-s/z}` at the origin) become smooth in `u`. The returned evidence is
/// mapped back to the original variable.
pub fn integrate_reciprocal<F>(
    f: F,
    domain: Interval,
    config: &QuadConfig,
) -> Result<IntegralResult, QuadError>
where
    F: Fn(f64) -> f64,
{
    domain.check()?;
    if domain.lo < 0.0 {
        return Err(QuadError::InvalidDomain {
            lo: domain.lo,
            hi: domain.hi,
        });
    }
    let recip = |x: f64| if x == 0.0 { f64::INFINITY } else { 1.0 / x };
    let mapped = Interval {
        lo: if domain.hi.is_infinite() {
            0.0
        } else {
            1.0 / domain.hi
        },
        hi: recip(domain.lo),
        lo_regular: domain.hi_regular,
        hi_regular: domain.lo_regular,
    };
    let g = |u: f64| {
        let z = 1.0 / u;
        f(z) / (u * u)
    };
    let mut res = integrate(g, mapped, config)?;
    for e in &mut res.evidence {
        let at_origin_or_infinity = e.location == 0.0 || e.location.is_infinite();
        e.side = match e.side {
            Side::Lower => Side::Upper,
            Side::Upper => Side::Lower,
        };
        e.location = recip(e.location);
        if at_origin_or_infinity {
            // f(z) ~ z^p  <=>  f(1/u)/u² ~ u^(-p-2)
            e.pointwise_exponent = e.pointwise_exponent.map(|p| -p - 2.0);
            e.ladder_exponent = e.ladder_exponent.map(|p| -p - 2.0);
        }
    }
    res.evidence.reverse();
    Ok(res)
}

/// Value-only double-exponential integration over `(lo, hi)` split at
/// `breakpoints`, without endpoint probing. Meant for the inner levels of
/// nested integrals; returns the value and whether every piece converged.
pub(crate) fn integrate_value<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    rel_tol: f64,
    max_level: u32,
) -> Result<(f64, bool), QuadError> {
    let mut edges = vec![lo];
    edges.extend(breakpoints.iter().copied().filter(|&b| b > lo && b < hi));
    edges.push(hi);
    let mut value = 0.0;
    let mut converged = true;
    for w in edges.windows(2) {
        let r = de::integrate(&f, w[0], w[1], rel_tol, 1e-300, 2, max_level)?;
        value += r.value;
        converged &= r.converged || r.error <= rel_tol * value.abs();
    }
    Ok((value, converged))
}

/// Fixed-node double-exponential rule at refinement `level` (step
/// `2^-(level+1)`); no adaptivity and no divergence probing.
///
/// Because the nodes do not depend on the integrand, the quadrature error is
/// a smooth function of any parameter of `f`, which keeps finite
/// differences of parameter integrals free of adaptive-level jumps.
pub fn integrate_fixed<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    level: u32,
) -> Result<f64, QuadError> {
    Interval::open(lo, hi).check()?;
    de::integrate_fixed(&f, lo, hi, level)
}

/// Integrates over `(lo, hi)` split at the interior `breakpoints`.
///
/// The outer endpoints are probed for divergence, the breakpoints are
/// treated as regular. Useful when the mass of `f` is concentrated far from
/// both endpoints.
pub fn integrate_partitioned<F>(
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    config: &QuadConfig,
) -> Result<IntegralResult, QuadError>
where
    F: Fn(f64) -> f64,
{
    Interval::open(lo, hi).check()?;
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > lo && b < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if cuts.is_empty() {
        return integrate(f, Interval::open(lo, hi), config);
    }
    let mut edges = vec![lo];
    edges.extend(cuts);
    edges.push(hi);
    let pieces = edges.len() - 1;

    let mut total = IntegralResult::exact_zero();
    for i in 0..pieces {
        let domain = Interval {
            lo: edges[i],
            hi: edges[i + 1],
            lo_regular: i > 0,
            hi_regular: i + 1 < pieces,
        };
        total = total.merge(integrate(&f, domain, config)?);
    }
    Ok(total)
}

struct Ladder {
    truncation: Vec<f64>,
    stop: LadderStop,
    exponent: Option<f64>,
}

fn probe<F: Fn(f64) -> f64>(
    f: &F,
    endpoint: Endpoint,
    side: Side,
    scale: f64,
    config: &QuadConfig,
) -> (EndpointEvidence, usize) {
    let location = match endpoint {
        Endpoint::Lower(a) => a,
        Endpoint::Upper(b) => b,
        Endpoint::Infinity => f64::INFINITY,
    };
    let (k_min, k_max) = config.exponent_window;
    let window = ExponentWindow {
        scale,
        k_min,
        k_max,
    };
    let pointwise = pointwise_exponent(f, endpoint, window);
    let mut evaluations = (k_max - k_min + 1) as usize;
    let ladder = ladder(f, endpoint, scale, config, &mut evaluations);

    // excess > 0 means integrable: p + 1 at a finite endpoint, -(p + 1) at infinity
    let excess = |p: f64| match endpoint {
        Endpoint::Infinity => -(p + 1.0),
        _ => p + 1.0,
    };
    let tol = config.exponent_tol;
    // a shell sequence whose fitted growth is flat within this margin
    // carries no evidence of decay
    let flat = 1e-3;
    let behaviour = match (pointwise, ladder.stop) {
        (PointwiseFit::Failed, LadderStop::Negligible) => EndpointBehaviour::Undecided,
        (PointwiseFit::Vanishing, LadderStop::Negligible) => EndpointBehaviour::Integrable,
        (PointwiseFit::Vanishing, LadderStop::Exhausted | LadderStop::Resolution) => {
            match ladder.exponent.map(excess) {
                Some(el) if el > tol => EndpointBehaviour::Integrable,
                _ => EndpointBehaviour::Undecided,
            }
        }
        (PointwiseFit::Exponent(p), LadderStop::Negligible) if excess(p) > tol => {
            EndpointBehaviour::Integrable
        }
        (PointwiseFit::Exponent(p), LadderStop::Threshold) if excess(p) <= tol => {
            EndpointBehaviour::Divergent
        }
        (PointwiseFit::Exponent(p), LadderStop::Exhausted | LadderStop::Resolution) => {
            match ladder.exponent.map(excess) {
                Some(el) if excess(p) > tol && el > tol => EndpointBehaviour::Integrable,
                Some(el) if excess(p) < -tol && el < -tol => EndpointBehaviour::Divergent,
                Some(el) if excess(p).abs() <= tol && el <= flat => EndpointBehaviour::Divergent,
                _ => EndpointBehaviour::Undecided,
            }
        }
        _ => EndpointBehaviour::Undecided,
    };
    let evidence = EndpointEvidence {
        side,
        location,
        pointwise_exponent: match pointwise {
            PointwiseFit::Exponent(p) => Some(p),
            _ => None,
        },
        ladder_exponent: ladder.exponent,
        truncation: ladder.truncation,
        ladder_stop: ladder.stop,
        behaviour,
    };
    (evidence, evaluations)
}

#[derive(Clone, Copy)]
enum PointwiseFit {
    Exponent(f64),
    Vanishing,
    Failed,
}

fn pointwise_exponent<F: Fn(f64) -> f64>(
    f: &F,
    endpoint: Endpoint,
    window: ExponentWindow,
) -> PointwiseFit {
    let mut pts = Vec::new();
    let mut sign = 0.0;
    for k in window.k_min..=window.k_max {
        let (x, ld) = endpoint.sample(window.scale, k);
        let y = f(x);
        if y == 0.0 {
            // zero at the innermost sample: faster than any power
            if k == window.k_max {
                return PointwiseFit::Vanishing;
            }
            continue;
        }
        if !y.is_finite() {
            return PointwiseFit::Failed;
        }
        if sign == 0.0 {
            sign = y.signum();
        } else if y.signum() != sign {
            return PointwiseFit::Failed;
        }
        pts.push((ld, y.abs().ln()));
    }
    if pts.len() < 3 {
        return PointwiseFit::Failed;
    }
    PointwiseFit::Exponent(slope(&pts))
}

fn ladder<F: Fn(f64) -> f64>(
    f: &F,
    endpoint: Endpoint,
    scale: f64,
    config: &QuadConfig,
    evaluations: &mut usize,
) -> Ladder {
    let mut truncation = Vec::with_capacity(config.ladder_rungs as usize);
    let mut shells: Vec<f64> = Vec::with_capacity(config.ladder_rungs as usize);
    let mut total = 0.0_f64;
    let mut quiet = 0;
    let mut stop = LadderStop::Exhausted;
    for k in 0..config.ladder_rungs {
        let near = 2f64.powi(-(k as i32 + 1)) * scale;
        let far = 2f64.powi(-(k as i32)) * scale;
        // shell in log-distance coordinates, where power laws are smooth
        let shell = match endpoint {
            Endpoint::Lower(a) => {
                if a + near == a {
                    stop = LadderStop::Resolution;
                    break;
                }
                legendre::panel(
                    &|v: f64| {
                        let d = v.exp();
                        d * f(a + d)
                    },
                    near.ln(),
                    far.ln(),
                )
            }
            Endpoint::Upper(b) => {
                if b - near == b {
                    stop = LadderStop::Resolution;
                    break;
                }
                legendre::panel(
                    &|v: f64| {
                        let d = v.exp();
                        d * f(b - d)
                    },
                    near.ln(),
                    far.ln(),
                )
            }
            Endpoint::Infinity => {
                let lo = scale * 2f64.powi(k as i32);
                legendre::panel(
                    &|v: f64| {
                        let x = v.exp();
                        x * f(x)
                    },
                    lo.ln(),
                    (2.0 * lo).ln(),
                )
            }
        };
        *evaluations += legendre::ORDER;
        if shell.is_nan() {
            stop = LadderStop::Exhausted;
            break;
        }
        total += shell;
        truncation.push(total);
        shells.push(shell);
        if !total.is_finite() || total.abs() > config.divergence_threshold {
            stop = LadderStop::Threshold;
            break;
        }
        if shell.abs() <= 0.01 * config.tolerance(total) {
            quiet += 1;
            if quiet >= 2 {
                stop = LadderStop::Negligible;
                break;
            }
        } else {
            quiet = 0;
        }
    }

    // growth rate over the trailing shells, in log2 per rung
    let tail: Vec<(f64, f64)> = shells
        .iter()
        .enumerate()
        .rev()
        .take(config.ladder_window)
        .filter(|(_, s)| **s != 0.0 && s.is_finite())
        .map(|(k, s)| (k as f64, s.abs().log2()))
        .collect();
    let same_sign = shells
        .iter()
        .rev()
        .take(config.ladder_window)
        .all(|s| s.signum() == shells.last().map_or(1.0, |l| l.signum()));
    let exponent = if tail.len() >= 3 && same_sign {
        let g = slope(&tail);
        Some(match endpoint {
            // shells ∝ 2^{-k(p+1)}
            Endpoint::Lower(_) | Endpoint::Upper(_) => -g - 1.0,
            // shells ∝ 2^{k(p+1)}
            Endpoint::Infinity => g - 1.0,
        })
    } else {
        None
    };
    Ladder {
        truncation,
        stop,
        exponent,
    }
}
