//! Univariate directing Lévy intensities `ρ*(dz)`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::quad::{self, Interval, QuadConfig};
use crate::special::exp_integral_e1;

/// Named directing families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DirectingFamily {
    /// `σ z^{-1-σ}`, tail `y^{-σ}`.
    SigmaStable { sigma: f64 },
    /// `σ z^{-1-σ} / Γ(1-σ)`, tail `1 / (Γ(1-σ) y^σ)`.
    SigmaStableNormalized { sigma: f64 },
    /// `z^{-1} e^{-z}`, tail `E₁(y)`.
    GammaProcess,
    /// `e^{-z}`: finite activity with total mass 1.
    FiniteExponential,
}

impl DirectingFamily {
    pub fn name(&self) -> String {
        match self {
            Self::SigmaStable { sigma } => format!("SigmaStable({sigma})"),
            Self::SigmaStableNormalized { sigma } => format!("SigmaStableNormalized({sigma})"),
            Self::GammaProcess => "GammaProcess".to_owned(),
            Self::FiniteExponential => "FiniteExponential".to_owned(),
        }
    }
}

/// A validated directing intensity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectingMeasure {
    family: DirectingFamily,
    /// `∫ min{1, z} ρ*(dz)`, computed at construction.
    levy_integral: f64,
}

impl DirectingMeasure {
    /// Validates the parameters and checks `∫ min{1, z} ρ*(dz) < ∞`
    /// numerically.
    pub fn new(family: DirectingFamily) -> Result<Self> {
        if let DirectingFamily::SigmaStable { sigma }
        | DirectingFamily::SigmaStableNormalized { sigma } = family
        {
            if !(sigma > 0.0 && sigma < 1.0) {
                return Err(Error::InvalidIndex {
                    value: sigma,
                    range: "(0, 1)",
                });
            }
        }
        let mut m = Self {
            family,
            levy_integral: f64::NAN,
        };
        let cfg = QuadConfig::default();
        let small = quad::integrate(|z| z * m.density(z), Interval::open_closed(0.0, 1.0), &cfg)?;
        let large = quad::integrate(
            |z| m.density(z),
            Interval::closed_open(1.0, f64::INFINITY),
            &cfg,
        )?;
        if !small.is_convergent() || !large.is_convergent() {
            return Err(Error::IntegrabilityFailure(format!(
                "{}: ∫ min(1, z) ρ(dz) is not finite ({:?} on (0,1), {:?} on [1,∞))",
                family.name(),
                small.verdict,
                large.verdict
            )));
        }
        m.levy_integral = small.value + large.value;
        Ok(m)
    }

    pub fn sigma_stable(sigma: f64) -> Result<Self> {
        Self::new(DirectingFamily::SigmaStable { sigma })
    }

    pub fn sigma_stable_normalized(sigma: f64) -> Result<Self> {
        Self::new(DirectingFamily::SigmaStableNormalized { sigma })
    }

    pub fn gamma_process() -> Self {
        Self::new(DirectingFamily::GammaProcess).expect("gamma process is a Lévy intensity")
    }

    pub fn finite_exponential() -> Self {
        Self::new(DirectingFamily::FiniteExponential).expect("finite measure")
    }

    pub fn family(&self) -> DirectingFamily {
        self.family
    }

    pub fn name(&self) -> String {
        self.family.name()
    }

    /// `∫ min{1, z} ρ*(dz)` as measured at construction.
    pub fn levy_integral(&self) -> f64 {
        self.levy_integral
    }

    /// Stability index for the stable families.
    pub fn stable_index(&self) -> Option<f64> {
        match self.family {
            DirectingFamily::SigmaStable { sigma }
            | DirectingFamily::SigmaStableNormalized { sigma } => Some(sigma),
            _ => None,
        }
    }

    // multiplicative constant of the stable density relative to σ z^{-1-σ}
    fn stable_norm(sigma: f64, normalized: bool) -> f64 {
        if normalized {
            1.0 / gamma(1.0 - sigma)
        } else {
            1.0
        }
    }

    /// `ln ρ*(z)`; `-∞` outside `(0, ∞)`.
    pub fn ln_density(&self, z: f64) -> f64 {
        if !(z > 0.0) {
            return f64::NEG_INFINITY;
        }
        match self.family {
            DirectingFamily::SigmaStable { sigma } => sigma.ln() - (1.0 + sigma) * z.ln(),
            DirectingFamily::SigmaStableNormalized { sigma } => {
                sigma.ln() - ln_gamma(1.0 - sigma) - (1.0 + sigma) * z.ln()
            }
            DirectingFamily::GammaProcess => -z.ln() - z,
            DirectingFamily::FiniteExponential => -z,
        }
    }

    /// Density `ρ*(z)`.
    pub fn density(&self, z: f64) -> f64 {
        if !(z > 0.0) {
            return 0.0;
        }
        match self.family {
            DirectingFamily::SigmaStable { sigma } => sigma * z.powf(-1.0 - sigma),
            DirectingFamily::SigmaStableNormalized { sigma } => {
                sigma * z.powf(-1.0 - sigma) * Self::stable_norm(sigma, true)
            }
            DirectingFamily::GammaProcess => (-z).exp() / z,
            DirectingFamily::FiniteExponential => (-z).exp(),
        }
    }

    /// Tail integral `U*(y) = ρ*((y, ∞))`; `U*(0)` is the total mass.
    pub fn tail(&self, y: f64) -> f64 {
        let y = y.max(0.0);
        match self.family {
            DirectingFamily::SigmaStable { sigma } => y.powf(-sigma),
            DirectingFamily::SigmaStableNormalized { sigma } => {
                y.powf(-sigma) * Self::stable_norm(sigma, true)
            }
            DirectingFamily::GammaProcess => {
                if y == 0.0 {
                    f64::INFINITY
                } else {
                    exp_integral_e1(y)
                }
            }
            DirectingFamily::FiniteExponential => (-y).exp(),
        }
    }

    /// Total mass `U*(0⁺)`; infinite for infinite-activity families.
    pub fn total_mass(&self) -> f64 {
        self.tail(0.0)
    }

    /// Generalised inverse `U*⁻¹(t) = inf{y : U*(y) ≤ t}`; returns 0 when
    /// `t` exceeds the total mass (no jump of that rank) or when the jump
    /// underflows.
    pub fn inverse_tail(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return f64::INFINITY;
        }
        match self.family {
            DirectingFamily::SigmaStable { sigma } => t.powf(-1.0 / sigma),
            DirectingFamily::SigmaStableNormalized { sigma } => {
                (t * gamma(1.0 - sigma)).powf(-1.0 / sigma)
            }
            DirectingFamily::FiniteExponential => {
                if t >= 1.0 {
                    0.0
                } else {
                    -t.ln()
                }
            }
            DirectingFamily::GammaProcess => inverse_e1(t),
        }
    }

    /// `∫_0^c z ρ*(dz)`.
    pub fn truncated_first_moment(&self, c: f64) -> f64 {
        if !(c > 0.0) {
            return 0.0;
        }
        match self.family {
            DirectingFamily::SigmaStable { sigma } => sigma * c.powf(1.0 - sigma) / (1.0 - sigma),
            DirectingFamily::SigmaStableNormalized { sigma } => {
                sigma * c.powf(1.0 - sigma) / (1.0 - sigma) * Self::stable_norm(sigma, true)
            }
            DirectingFamily::GammaProcess => -(-c).exp_m1(),
            DirectingFamily::FiniteExponential => {
                if c.is_infinite() {
                    1.0
                } else {
                    gamma_lr(2.0, c)
                }
            }
        }
    }

    /// `∫ min{1, r z} ρ*(dz)` for `r ≥ 0`: the Lévy integral of the
    /// intensity rescaled by a constant score `r`.
    pub fn min_one_moment(&self, r: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        match self.family {
            DirectingFamily::SigmaStable { sigma } => r.powf(sigma) / (1.0 - sigma),
            DirectingFamily::SigmaStableNormalized { sigma } => {
                r.powf(sigma) / (1.0 - sigma) * Self::stable_norm(sigma, true)
            }
            _ => {
                let c = 1.0 / r;
                r * self.truncated_first_moment(c) + self.tail(c)
            }
        }
    }

    /// Regular-variation index at the origin: `U*(y) = L(1/y) y^{-σ}`.
    pub fn rv_index(&self) -> Option<f64> {
        match self.family {
            DirectingFamily::SigmaStable { sigma }
            | DirectingFamily::SigmaStableNormalized { sigma } => Some(sigma),
            DirectingFamily::GammaProcess | DirectingFamily::FiniteExponential => Some(0.0),
        }
    }

    /// Slowly varying factor `L(t) = U*(1/t) t^{-σ}`.
    pub fn slowly_varying(&self, t: f64) -> Option<f64> {
        let sigma = self.rv_index()?;
        Some(self.tail(1.0 / t) * t.powf(-sigma))
    }
}

// Solves E₁(y) = t by safeguarded Newton iteration in v = ln y.
fn inverse_e1(t: f64) -> f64 {
    // E₁ decreases from ∞ at 0 to 0 at ∞
    let (mut lo, mut hi) = (-745.0_f64, 6.6_f64);
    if t > -lo {
        // the jump underflows
        return 0.0;
    }
    if exp_integral_e1(hi.exp()) >= t {
        return hi.exp();
    }
    let mut v = if t > 1.0 {
        -t - crate::special::EULER_GAMMA
    } else {
        let l = -t.ln();
        (l - l.ln().max(0.0)).max(1e-300).ln()
    };
    v = v.clamp(lo, hi);
    for _ in 0..200 {
        let y = v.exp();
        let f = exp_integral_e1(y) - t;
        if f > 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        if f == 0.0 || hi - lo < 1e-15 * v.abs().max(1.0) {
            break;
        }
        // d E₁(e^v) / dv = -e^{-y}
        let mut next = v + f / (-y).exp();
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - v).abs() < 1e-15 * v.abs().max(1.0) {
            v = next;
            break;
        }
        v = next;
    }
    v.exp()
}
