//! Score distributions: the per-coordinate multipliers that turn one
//! directing jump into a vector of weights.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution, Exp1, Gamma as GammaDist};
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{positive, Error, Result};
use crate::quad::{self, IntegralResult, Interval, QuadConfig};

/// Named score families with closed-form density, CDF and moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScoreFamily {
    /// Shape-rate parametrisation: `β^α s^{α-1} e^{-βs} / Γ(α)`.
    Gamma { shape: f64, rate: f64 },
    /// `s^{α-1} (1-s)^{β-1} / B(α, β)` on `(0, 1)`.
    Beta { alpha: f64, beta: f64 },
    /// Standard exponential, rate 1.
    Exponential,
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied marginal given by its density and CDF.
///
/// Only numerical verdicts are available for custom scores.
#[derive(Clone)]
pub struct CustomScore {
    pub name: String,
    pub density: RealFn,
    pub cdf: RealFn,
    /// Support `(lo, hi)` with `0 ≤ lo < hi ≤ ∞`.
    pub support: (f64, f64),
}

impl fmt::Debug for CustomScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomScore")
            .field("name", &self.name)
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Gamma { shape: f64, rate: f64, ln_norm: f64 },
    Beta { alpha: f64, beta: f64, ln_norm: f64 },
    Exponential,
    Custom(CustomScore),
}

/// One coordinate `S_j` of the score vector.
#[derive(Debug, Clone)]
pub struct MarginalScore {
    repr: Repr,
}

impl MarginalScore {
    /// Builds a named family and checks that its density is normalised.
    pub fn new(family: ScoreFamily) -> Result<Self> {
        let repr = match family {
            ScoreFamily::Gamma { shape, rate } => {
                let shape = positive("shape", shape)?;
                let rate = positive("rate", rate)?;
                Repr::Gamma {
                    shape,
                    rate,
                    ln_norm: shape * rate.ln() - ln_gamma(shape),
                }
            }
            ScoreFamily::Beta { alpha, beta } => {
                let alpha = positive("alpha", alpha)?;
                let beta = positive("beta", beta)?;
                Repr::Beta {
                    alpha,
                    beta,
                    ln_norm: -ln_beta(alpha, beta),
                }
            }
            ScoreFamily::Exponential => Repr::Exponential,
        };
        let score = Self { repr };
        score.check_normalised()?;
        Ok(score)
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Self::new(ScoreFamily::Gamma { shape, rate })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(ScoreFamily::Beta { alpha, beta })
    }

    pub fn exponential() -> Self {
        Self {
            repr: Repr::Exponential,
        }
    }

    /// Registers a custom marginal; the density must integrate to one.
    pub fn custom(score: CustomScore) -> Result<Self> {
        let (lo, hi) = score.support;
        if !(lo >= 0.0) || !(hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "custom score `{}` has invalid support ({lo}, {hi})",
                score.name
            )));
        }
        let s = Self {
            repr: Repr::Custom(score),
        };
        s.check_normalised()?;
        Ok(s)
    }

    fn check_normalised(&self) -> Result<()> {
        let r = self.expect(|_| 1.0, &QuadConfig::default())?;
        if !r.is_convergent() || (r.value - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalised {
                family: self.name(),
                integral: r.value,
            });
        }
        Ok(())
    }

    /// Closed-form family, `None` for custom scores.
    pub fn family(&self) -> Option<ScoreFamily> {
        match self.repr {
            Repr::Gamma { shape, rate, .. } => Some(ScoreFamily::Gamma { shape, rate }),
            Repr::Beta { alpha, beta, .. } => Some(ScoreFamily::Beta { alpha, beta }),
            Repr::Exponential => Some(ScoreFamily::Exponential),
            Repr::Custom(_) => None,
        }
    }

    pub fn name(&self) -> String {
        match &self.repr {
            Repr::Gamma { shape, rate, .. } => format!("Gamma({shape}, {rate})"),
            Repr::Beta { alpha, beta, .. } => format!("Beta({alpha}, {beta})"),
            Repr::Exponential => "Exponential(1)".to_owned(),
            Repr::Custom(c) => format!("Custom({})", c.name),
        }
    }

    pub fn is_standard_exponential(&self) -> bool {
        match self.repr {
            Repr::Exponential => true,
            Repr::Gamma { shape, rate, .. } => shape == 1.0 && rate == 1.0,
            _ => false,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Beta { .. } => (0.0, 1.0),
            Repr::Custom(c) => c.support,
            _ => (0.0, f64::INFINITY),
        }
    }

    /// Interior points where the density is concentrated; quadrature over
    /// the score splits there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.repr {
            Repr::Gamma { shape, rate, .. } => {
                let mean = shape / rate;
                let sd = shape.sqrt() / rate;
                if sd < 0.1 * mean {
                    [-8.0, -3.0, -1.0, 0.0, 1.0, 3.0, 8.0]
                        .iter()
                        .map(|k| mean + k * sd)
                        .filter(|&x| x > 0.0)
                        .collect()
                } else {
                    vec![mean]
                }
            }
            _ => Vec::new(),
        }
    }

    pub fn ln_density(&self, s: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(s > lo && s < hi) {
            return f64::NEG_INFINITY;
        }
        match &self.repr {
            Repr::Gamma {
                shape,
                rate,
                ln_norm,
            } => ln_norm + (shape - 1.0) * s.ln() - rate * s,
            Repr::Beta {
                alpha,
                beta,
                ln_norm,
            } => ln_norm + (alpha - 1.0) * s.ln() + (beta - 1.0) * (-s).ln_1p(),
            Repr::Exponential => -s,
            Repr::Custom(c) => (c.density)(s).ln(),
        }
    }

    /// Marginal density `h_j(s)`.
    pub fn density(&self, s: f64) -> f64 {
        match &self.repr {
            Repr::Custom(c) => {
                let (lo, hi) = c.support;
                if s > lo && s < hi {
                    (c.density)(s)
                } else {
                    0.0
                }
            }
            _ => self.ln_density(s).exp(),
        }
    }

    /// Distribution function `H_j(s) = P(S_j ≤ s)`.
    pub fn cdf(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return 0.0;
        }
        match &self.repr {
            Repr::Gamma { shape, rate, .. } => {
                if s.is_infinite() {
                    1.0
                } else {
                    gamma_lr(*shape, rate * s)
                }
            }
            Repr::Beta { alpha, beta, .. } => {
                if s >= 1.0 {
                    1.0
                } else {
                    beta_reg(*alpha, *beta, s)
                }
            }
            Repr::Exponential => -(-s).exp_m1(),
            Repr::Custom(c) => {
                if s <= c.support.0 {
                    0.0
                } else if s >= c.support.1 {
                    1.0
                } else {
                    (c.cdf)(s)
                }
            }
        }
    }

    /// Survival function `1 − H_j(s)`, computed without cancellation.
    pub fn survival(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return 1.0;
        }
        match &self.repr {
            Repr::Gamma { shape, rate, .. } => {
                if s.is_infinite() {
                    0.0
                } else {
                    gamma_ur(*shape, rate * s)
                }
            }
            Repr::Beta { alpha, beta, .. } => {
                if s >= 1.0 {
                    0.0
                } else {
                    beta_reg(*beta, *alpha, 1.0 - s)
                }
            }
            Repr::Exponential => (-s).exp(),
            Repr::Custom(_) => 1.0 - self.cdf(s),
        }
    }

    /// Inverse CDF by bisection.
    pub fn quantile(&self, p: f64) -> f64 {
        let (lo, hi) = self.support();
        let mut a = lo;
        let mut b = if hi.is_finite() { hi } else { lo.max(1.0) };
        while hi.is_infinite() && self.cdf(b) < p {
            b *= 2.0;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.cdf(m) < p {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-15 * b {
                break;
            }
        }
        0.5 * (a + b)
    }

    /// Draws one strictly positive score.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = match &self.repr {
                Repr::Gamma { shape, rate, .. } => GammaDist::new(*shape, 1.0 / rate)
                    .expect("validated parameters")
                    .sample(rng),
                Repr::Beta { alpha, beta, .. } => BetaDist::new(*alpha, *beta)
                    .expect("validated parameters")
                    .sample(rng),
                Repr::Exponential => Exp1.sample(rng),
                Repr::Custom(_) => {
                    let u: f64 = rng.random();
                    self.quantile(u)
                }
            };
            if x > 0.0 && x.is_finite() {
                return x;
            }
        }
    }

    /// `E[g(S_j)]` by quadrature over the support, split at the breakpoints.
    pub fn expect<G>(&self, g: G, config: &QuadConfig) -> Result<IntegralResult>
    where
        G: Fn(f64) -> f64,
    {
        if let Repr::Beta {
            alpha,
            beta,
            ln_norm,
        } = self.repr
        {
            // the upper half in t = 1 - s keeps the mass next to 1 resolvable
            let lower = |s: f64| self.density(s) * g(s);
            let upper = |t: f64| {
                let ln_h = ln_norm + (alpha - 1.0) * (-t).ln_1p() + (beta - 1.0) * t.ln();
                ln_h.exp() * g(1.0 - t)
            };
            let half = Interval {
                lo: 0.0,
                hi: 0.5,
                lo_regular: false,
                hi_regular: true,
            };
            let a = quad::integrate(lower, half, config)?;
            let b = quad::integrate(upper, half, config)?;
            return Ok(a.merge(b));
        }
        let (lo, hi) = self.support();
        let integrand = |s: f64| {
            let h = self.density(s);
            if h == 0.0 {
                0.0
            } else {
                h * g(s)
            }
        };
        Ok(quad::integrate_partitioned(
            integrand,
            lo,
            hi,
            &self.breakpoints(),
            config,
        )?)
    }

    /// Fractional moment `E[S_j^σ]` for `σ ∈ [0, 1)`.
    pub fn fractional_moment(&self, sigma: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&sigma) {
            return Err(Error::InvalidIndex {
                value: sigma,
                range: "[0, 1)",
            });
        }
        if sigma == 0.0 {
            return Ok(1.0);
        }
        Ok(match &self.repr {
            Repr::Gamma { shape, rate, .. } => {
                (ln_gamma(shape + sigma) - ln_gamma(*shape) - sigma * rate.ln()).exp()
            }
            Repr::Beta { alpha, beta, .. } => {
                (ln_beta(alpha + sigma, *beta) - ln_beta(*alpha, *beta)).exp()
            }
            Repr::Exponential => (ln_gamma(1.0 + sigma)).exp(),
            Repr::Custom(_) => {
                let r = self.expect(|s| s.powf(sigma), &QuadConfig::default())?;
                if !r.is_convergent() {
                    return Err(Error::NonConvergentMoment {
                        family: self.name(),
                        order: sigma,
                    });
                }
                r.value
            }
        })
    }
}

/// Dependence structure between score coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `h(s_1, …, s_d) = ∏ h_j(s_j)`.
    #[default]
    IndependentProduct,
}

/// d-variate score distribution.
#[derive(Debug, Clone)]
pub struct ScoreModel {
    marginals: Vec<MarginalScore>,
    coupling: Coupling,
}

impl ScoreModel {
    pub fn independent(marginals: Vec<MarginalScore>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        Ok(Self {
            marginals,
            coupling: Coupling::IndependentProduct,
        })
    }

    /// Builds every marginal from its family descriptor.
    pub fn from_families(families: &[ScoreFamily]) -> Result<Self> {
        let marginals = families
            .iter()
            .map(|f| MarginalScore::new(*f))
            .collect::<Result<Vec<_>>>()?;
        Self::independent(marginals)
    }

    /// `d` independent standard exponentials.
    pub fn iid_exponential(d: usize) -> Result<Self> {
        Self::independent(vec![MarginalScore::exponential(); d])
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn marginals(&self) -> &[MarginalScore] {
        &self.marginals
    }

    pub fn marginal(&self, j: usize) -> &MarginalScore {
        &self.marginals[j]
    }

    /// Joint density at `s`.
    pub fn density(&self, s: &[f64]) -> f64 {
        assert_eq!(s.len(), self.dim());
        self.marginals
            .iter()
            .zip(s)
            .map(|(m, &x)| m.density(x))
            .product()
    }

    pub fn all_standard_exponential(&self) -> bool {
        self.marginals
            .iter()
            .all(MarginalScore::is_standard_exponential)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.marginals.iter().map(|m| m.sample(rng)).collect()
    }
}
