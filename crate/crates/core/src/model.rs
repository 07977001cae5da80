//! Base measure and the full CoRM specification.

use serde::{Deserialize, Serialize};

use crate::directing::DirectingMeasure;
use crate::error::{positive, Error, Result};
use crate::score::ScoreModel;

/// Homogeneous base measure: total mass `α(X)` spread uniformly over the
/// window `[0, window_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseMeasure {
    pub total_mass: f64,
    pub window_end: f64,
}

impl BaseMeasure {
    pub fn new(total_mass: f64, window_end: f64) -> Result<Self> {
        Ok(Self {
            total_mass: positive("total_mass", total_mass)?,
            window_end: positive("window_end", window_end)?,
        })
    }

    /// Unit mass on `[0, 1]`.
    pub fn unit() -> Self {
        Self {
            total_mass: 1.0,
            window_end: 1.0,
        }
    }
}

/// A compound random measure: scores, directing intensity and base measure.
#[derive(Debug, Clone)]
pub struct CormSpec {
    pub score: ScoreModel,
    pub directing: DirectingMeasure,
    pub base: BaseMeasure,
}

impl CormSpec {
    /// Checks that the declared dimension matches the score model.
    pub fn new(
        dimension: usize,
        score: ScoreModel,
        directing: DirectingMeasure,
        base: BaseMeasure,
    ) -> Result<Self> {
        if dimension == 0 || score.dim() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                got: score.dim(),
            });
        }
        Ok(Self {
            score,
            directing,
            base,
        })
    }

    pub fn dim(&self) -> usize {
        self.score.dim()
    }

    /// Joint intensity density `∫ z^{-d} h(s/z) ρ*(z) dz` per unit base mass,
    /// by quadrature over `u = 1/z`.
    pub fn intensity_density(&self, s: &[f64], config: &crate::quad::QuadConfig) -> Result<f64> {
        if s.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: s.len(),
            });
        }
        let d = self.dim() as i32;
        let integrand = |u: f64| {
            let h: f64 = s
                .iter()
                .map(|&x| u * x)
                .zip(self.score.marginals())
                .map(|(v, m)| m.density(v))
                .product();
            if h == 0.0 {
                return 0.0;
            }
            h * u.powi(d - 2) * self.directing.density(1.0 / u)
        };
        let r = crate::quad::integrate(
            integrand,
            crate::quad::Interval::positive_half_line(),
            config,
        )?;
        if !r.is_convergent() {
            return Err(Error::DivergentIntensity { at: s.iter().sum() });
        }
        Ok(r.value)
    }
}
