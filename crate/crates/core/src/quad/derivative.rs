use super::QuadError;

pub const MAX_ORDER: u32 = 6;

/// Step control for [`derivative`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeConfig {
    /// Initial step; by default a fraction of `s` small enough to keep the
    /// stencil inside `(0, ∞)`.
    pub initial_step: Option<f64>,
    /// Step contraction factor between tableau rows.
    pub contraction: f64,
    /// Maximum tableau size.
    pub max_rows: usize,
    /// Largest acceptable relative error estimate.
    pub max_rel_error: f64,
}

impl Default for DerivativeConfig {
    fn default() -> Self {
        Self {
            initial_step: None,
            contraction: 1.4,
            max_rows: 12,
            max_rel_error: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub error: f64,
}

/// m-th central difference `δ^m f(s) / h^m`, second order in `h` with an
/// even error expansion.
fn central(f: &impl Fn(f64) -> f64, s: f64, m: u32, h: f64) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0;
    for k in 0..=m {
        let offset = (0.5 * m as f64 - k as f64) * h;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * f(s + offset);
        binom = binom * (m - k) as f64 / (k + 1) as f64;
    }
    acc / h.powi(m as i32)
}

/// m-th derivative of `f` at `s > 0` by Richardson-extrapolated central
/// differences (Ridders' tableau).
///
/// Order 0 returns `f(s)` unchanged.
pub fn derivative<F: Fn(f64) -> f64>(
    f: F,
    s: f64,
    order: u32,
    config: &DerivativeConfig,
) -> Result<DerivativeEstimate, QuadError> {
    if order > MAX_ORDER {
        return Err(QuadError::InvalidOrder(order));
    }
    let f0 = f(s);
    if !f0.is_finite() {
        return Err(QuadError::EvaluationFailure { at: s, value: f0 });
    }
    if order == 0 {
        return Ok(DerivativeEstimate {
            value: f0,
            error: 0.0,
        });
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(QuadError::StepUnderflow { at: s });
    }
    let reach = 0.5 * order as f64;
    let mut h = config
        .initial_step
        .unwrap_or_else(|| 0.8 * s / (reach + 1.0));
    if h <= s * 1e3 * f64::EPSILON || s - reach * h <= 0.0 {
        return Err(QuadError::StepUnderflow { at: s });
    }

    let con2 = config.contraction * config.contraction;
    let n = config.max_rows.max(2);
    let mut prev: Vec<f64> = vec![central(&f, s, order, h)];
    let mut best = prev[0];
    let mut err = f64::INFINITY;
    for _ in 1..n {
        h /= config.contraction;
        if h <= s * 1e3 * f64::EPSILON {
            break;
        }
        let mut row = Vec::with_capacity(prev.len() + 1);
        row.push(central(&f, s, order, h));
        let mut fac = con2;
        for j in 1..=prev.len() {
            let next = (row[j - 1] * fac - prev[j - 1]) / (fac - 1.0);
            fac *= con2;
            let e = (next - row[j - 1]).abs().max((next - prev[j - 1]).abs());
            if e <= err {
                err = e;
                best = next;
            }
            row.push(next);
        }
        let last = prev.len();
        let stalled = (row[last] - prev[last - 1]).abs() >= 2.0 * err;
        prev = row;
        if stalled {
            break;
        }
    }
    if !best.is_finite() || err > config.max_rel_error * best.abs().max(f64::MIN_POSITIVE) {
        return Err(QuadError::NoisePlateau {
            value: best,
            error: err,
        });
    }
    Ok(DerivativeEstimate {
        value: best,
        error: err,
    })
}
