use std::f64::consts::PI;
use std::sync::OnceLock;

pub(crate) const ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub(crate) fn rule() -> &'static [(f64, f64); ORDER] {
    static RULE: OnceLock<[(f64, f64); ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut out = [(0.0, 0.0); ORDER];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            out[i] = (-x, w);
            out[n - 1 - i] = (x, w);
        }
        out
    })
}

// P_n(x) and P_n'(x) by the three-term recurrence
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// ∫_a^b f by a single 16-point panel.
pub(crate) fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_integrate_polynomials() {
        let s: f64 = rule().iter().map(|p| p.1).sum();
        assert!((s - 2.0).abs() < 1e-14);
        // exact up to degree 31
        let v = panel(&|x: f64| x.powi(30), 0.0, 1.0);
        assert!((v - 1.0 / 31.0).abs() < 1e-14);
    }
}
