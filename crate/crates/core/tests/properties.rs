use corm_core::directing::DirectingMeasure;
use corm_core::expcorm::intensity_direct;
use corm_core::quad::{integrate, integrate_partitioned, Interval, QuadConfig};
use corm_core::score::MarginalScore;
use corm_core::sim::{ferguson_klass_jumps, Truncation};
use corm_core::tails::marginal_tail;
use proptest::prelude::*;

fn directing() -> impl Strategy<Value = DirectingMeasure> {
    prop_oneof![
        (0.05..0.95_f64).prop_map(|s| DirectingMeasure::sigma_stable(s).unwrap()),
        (0.05..0.95_f64).prop_map(|s| DirectingMeasure::sigma_stable_normalized(s).unwrap()),
        Just(DirectingMeasure::gamma_process()),
        Just(DirectingMeasure::finite_exponential()),
    ]
}

fn score() -> impl Strategy<Value = MarginalScore> {
    prop_oneof![
        (0.2..5.0_f64, 0.2..5.0_f64).prop_map(|(a, b)| MarginalScore::gamma(a, b).unwrap()),
        (0.2..5.0_f64, 0.2..5.0_f64).prop_map(|(a, b)| MarginalScore::beta(a, b).unwrap()),
        Just(MarginalScore::exponential()),
    ]
}

// densities with no singularity at the upper end of the support
fn regular_score() -> impl Strategy<Value = MarginalScore> {
    prop_oneof![
        (0.2..5.0_f64, 0.2..5.0_f64).prop_map(|(a, b)| MarginalScore::gamma(a, b).unwrap()),
        (0.2..5.0_f64, 1.0..5.0_f64).prop_map(|(a, b)| MarginalScore::beta(a, b).unwrap()),
        Just(MarginalScore::exponential()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn integral_is_linear_and_additive(c in 0.1..10.0_f64, a in 0.2..3.0_f64, cut in 0.1..5.0_f64) {
        let cfg = QuadConfig::default();
        let f = move |x: f64| x.powf(a - 1.0) * (-x).exp();
        let whole = integrate(f, Interval::positive_half_line(), &cfg).unwrap().value;
        let scaled = integrate(|x| c * f(x), Interval::positive_half_line(), &cfg).unwrap().value;
        prop_assert!((scaled - c * whole).abs() <= 1e-9 * c * whole);
        let left = integrate(f, Interval::open_closed(0.0, cut), &cfg).unwrap().value;
        let right = integrate(f, Interval::open(cut, f64::INFINITY), &cfg).unwrap().value;
        prop_assert!((left + right - whole).abs() <= 1e-9 * whole);
    }

    #[test]
    fn tail_is_decreasing_and_inverted(dm in directing(), y in 1e-4..20.0_f64, k in 1.01..4.0_f64) {
        let (t1, t2) = (dm.tail(y), dm.tail(k * y));
        prop_assert!(t2 <= t1);
        if t1 > 0.0 && t1 < dm.total_mass() && t1 < 1e300 && t1 > 1e-300 {
            let back = dm.inverse_tail(t1);
            prop_assert!((back - y).abs() <= 1e-8 * y, "{} vs {}", back, y);
        }
    }

    #[test]
    fn beta_scores_are_normalised(a in 0.05..5.0_f64, b in 0.05..5.0_f64) {
        let m = MarginalScore::beta(a, b).unwrap();
        let r = m.expect(|_| 1.0, &QuadConfig::default()).unwrap();
        prop_assert!((r.value - 1.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn scaled_score_density_integrates_to_one(m in regular_score(), z in 0.01..100.0_f64) {
        let (lo, hi) = m.support();
        let cuts: Vec<f64> = m.breakpoints().iter().map(|b| b * z).collect();
        let r = integrate_partitioned(|s| m.density(s / z) / z, lo * z, hi * z, &cuts, &QuadConfig::default()).unwrap();
        prop_assert!((r.value - 1.0).abs() < 1e-7, "{}", r.value);
    }

    #[test]
    fn exponential_intensity_is_symmetric(dm in directing(), a in 0.05..5.0_f64, b in 0.05..5.0_f64, c in 0.05..5.0_f64) {
        let cfg = QuadConfig::default();
        let x = intensity_direct(&dm, &[a, b, c], &cfg).unwrap();
        let y = intensity_direct(&dm, &[c, a, b], &cfg).unwrap();
        prop_assert!((x - y).abs() <= 1e-10 * x.abs());
    }

    #[test]
    fn stable_tail_factorizes(sigma in 0.1..0.9_f64, m in score(), y in 1e-3..50.0_f64) {
        let dm = DirectingMeasure::sigma_stable_normalized(sigma).unwrap();
        let u = marginal_tail(&m, &dm, y, &QuadConfig::default()).unwrap();
        let want = m.fractional_moment(sigma).unwrap() * dm.tail(y);
        prop_assert!((u - want).abs() <= 1e-6 * want, "{} vs {}", u, want);
    }

    #[test]
    fn series_jumps_strictly_decrease(dm in directing(), mass in 0.1..5.0_f64, seed in any::<u64>()) {
        let t = Truncation { min_jump: 1e-4, max_atoms: 20_000, strict: false };
        let s = ferguson_klass_jumps(&dm, mass, &t, seed).unwrap();
        prop_assert!(s.jumps.windows(2).all(|w| w[0] > w[1]));
        prop_assert!(s.jumps.iter().all(|&z| z >= t.min_jump));
    }
}
