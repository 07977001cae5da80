//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::Path;
use std::time::Instant;

use corm_core::expcorm::{intensity_direct, sample_points, verify_exp_intensity};
use corm_core::integrability::{
    analytic_verdict_stable, check_marginal, check_origin_shortcut, check_tail_shortcut,
    AnalyticFamily, AnalyticVerdict, ShortcutStatus,
};
use corm_core::quad::DerivativeConfig;
use corm_core::sim::{validate_tails, SimOptions};
use corm_core::tails::{log_grid, verify_tail_factorization, RvVerdict, TailsConfig};
use corm_core::{
    check_corm, BaseMeasure, CheckOptions, CormSpec, DirectingMeasure, MarginalScore, Posedness,
    QuadConfig, ScoreModel,
};
use statrs::function::gamma::gamma;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn directing_families() -> Vec<DirectingMeasure> {
    let mut out = Vec::new();
    for sigma in [0.1, 0.5, 0.9] {
        out.push(DirectingMeasure::sigma_stable(sigma).unwrap());
        out.push(DirectingMeasure::sigma_stable_normalized(sigma).unwrap());
    }
    out.push(DirectingMeasure::gamma_process());
    out.push(DirectingMeasure::finite_exponential());
    out
}

fn verdict_grid() -> Outcome {
    let quad = QuadConfig::default();
    let base = BaseMeasure::unit();
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for a in 1..=15 {
        let shape = a as f64 / 10.0;
        for s in 1..=9 {
            let sigma = s as f64 / 10.0;
            if (shape + sigma - 1.0).abs() < 0.05 {
                continue;
            }
            let dm = DirectingMeasure::sigma_stable(sigma).unwrap();
            let cases = [
                (
                    AnalyticFamily::Gamma,
                    MarginalScore::gamma(shape, 1.0).unwrap(),
                ),
                (
                    AnalyticFamily::Beta,
                    MarginalScore::beta(shape, 1.0).unwrap(),
                ),
            ];
            for (family, score) in cases {
                let want = match analytic_verdict_stable(family, shape, sigma) {
                    AnalyticVerdict::WellPosed => Posedness::WellPosed,
                    AnalyticVerdict::IllPosed => Posedness::IllPosed,
                    AnalyticVerdict::Boundary => unreachable!("boundary points are skipped"),
                };
                let got = check_marginal(1, &score, &dm, &base, &quad).map(|v| v.overall);
                compared += 1;
                if got.as_ref().ok() != Some(&want) {
                    mismatches.push(format!("{} σ={sigma}: {got:?} vs {want:?}", score.name()));
                }
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{}/{compared} numerical verdicts agree with the closed form{}",
            compared - mismatches.len(),
            if mismatches.is_empty() {
                String::new()
            } else {
                format!("; first mismatch: {}", mismatches[0])
            }
        ),
    )
}

fn shortcut_sufficiency() -> Outcome {
    let mut scores = vec![MarginalScore::exponential()];
    for shape in [0.5, 1.0, 1.5, 2.0, 3.0, 5.0] {
        for rate in [0.5, 1.0, 2.0] {
            scores.push(MarginalScore::gamma(shape, rate).unwrap());
        }
    }
    for a in [0.5, 1.0, 2.0, 3.0] {
        for b in [0.5, 1.0, 2.0] {
            scores.push(MarginalScore::beta(a, b).unwrap());
        }
    }
    let holding: Vec<&MarginalScore> = scores
        .iter()
        .filter(|m| {
            check_tail_shortcut(m).status == ShortcutStatus::Holds
                && check_origin_shortcut(m).status == ShortcutStatus::Holds
        })
        .collect();
    let quad = QuadConfig::default();
    let base = BaseMeasure::unit();
    let mut checked = 0;
    let mut counterexamples = Vec::new();
    for m in &holding {
        for dm in directing_families() {
            checked += 1;
            let v = check_marginal(1, m, &dm, &base, &quad).map(|v| v.overall);
            if !matches!(v, Ok(Posedness::WellPosed)) {
                counterexamples.push(format!("{} x {}: {v:?}", m.name(), dm.name()));
            }
        }
    }
    outcome(
        counterexamples.is_empty() && !holding.is_empty(),
        format!(
            "{} score instances satisfy both shortcuts, {checked} pairs checked, {} counterexamples{}",
            holding.len(),
            counterexamples.len(),
            counterexamples.first().map(|c| format!(": {c}")).unwrap_or_default()
        ),
    )
}

fn joint_consistency() -> Outcome {
    let score_sets: Vec<Vec<MarginalScore>> = vec![
        vec![MarginalScore::exponential(), MarginalScore::exponential()],
        vec![
            MarginalScore::gamma(2.0, 1.0).unwrap(),
            MarginalScore::beta(2.0, 2.0).unwrap(),
        ],
        vec![
            MarginalScore::gamma(0.7, 2.0).unwrap(),
            MarginalScore::beta(1.0, 1.0).unwrap(),
        ],
        vec![
            MarginalScore::exponential(),
            MarginalScore::gamma(3.0, 1.0).unwrap(),
            MarginalScore::beta(2.0, 1.0).unwrap(),
        ],
        vec![MarginalScore::gamma(1.5, 0.5).unwrap(); 3],
    ];
    let options = CheckOptions {
        direct: true,
        ..CheckOptions::default()
    };
    let mut checked = 0;
    let mut skipped = 0;
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for scores in &score_sets {
        for dm in directing_families() {
            let d = scores.len();
            let spec = CormSpec::new(
                d,
                ScoreModel::independent(scores.clone()).unwrap(),
                dm.clone(),
                BaseMeasure::new(1.5, 1.0).unwrap(),
            )
            .unwrap();
            let label = format!("d={d} {} x {}", scores[0].name(), dm.name());
            match check_corm(&spec, &options) {
                Ok(v) if v.multivariate != Posedness::WellPosed => skipped += 1,
                Ok(v) => {
                    checked += 1;
                    let direct = v.direct.expect("direct check requested");
                    worst = worst.max(direct.result.value / direct.bound);
                    if !direct.result.is_convergent() || !direct.within_bound {
                        failures.push(label);
                    }
                }
                Err(e) => failures.push(format!("{label}: {e}")),
            }
        }
    }
    outcome(
        failures.is_empty() && checked > 0,
        format!(
            "{checked} well-posed specs (d=2,3), {skipped} skipped, largest value/bound {worst:.3}, {} failures{}",
            failures.len(),
            failures.first().map(|c| format!(": {c}")).unwrap_or_default()
        ),
    )
}

fn example_scores() -> Vec<MarginalScore> {
    vec![
        MarginalScore::exponential(),
        MarginalScore::gamma(2.0, 1.0).unwrap(),
        MarginalScore::beta(2.0, 2.0).unwrap(),
    ]
}

fn tail_factorization() -> Outcome {
    let config = TailsConfig {
        grid: log_grid(1e-6, 1e2, 50).unwrap(),
        ..TailsConfig::default()
    };
    let mut worst: f64 = 0.0;
    let mut errors = Vec::new();
    for sigma in [0.3, 0.5, 0.7] {
        let dm = DirectingMeasure::sigma_stable_normalized(sigma).unwrap();
        for m in example_scores() {
            match verify_tail_factorization(1, &m, &dm, &config) {
                Ok(r) => worst = worst.max(r.max_factor_deviation),
                Err(e) => errors.push(format!("{} σ={sigma}: {e}", m.name())),
            }
        }
    }
    outcome(
        errors.is_empty() && worst <= 1e-4,
        format!("9 combinations, 50-point grid on [1e-6, 1e2], max relative factor deviation {worst:.2e} (limit 1e-4)"),
    )
}

fn index_recovery() -> Outcome {
    let config = TailsConfig::default();
    let mut worst_index: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    let mut failures = Vec::new();
    for sigma in [0.3, 0.5, 0.7] {
        let dm = DirectingMeasure::sigma_stable_normalized(sigma).unwrap();
        for m in example_scores() {
            let label = format!("{} σ={sigma}", m.name());
            let r = match verify_tail_factorization(1, &m, &dm, &config) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(format!("{label}: {e}"));
                    continue;
                }
            };
            let RvVerdict::RegularlyVarying { index } = r.diagnostic.verdict else {
                failures.push(format!("{label}: index not detected"));
                continue;
            };
            worst_index = worst_index.max((index - sigma).abs());
            for e in &r.diagnostic.ratios {
                worst_ratio = worst_ratio.max((e.ratio - 1.0).abs());
            }
            if !r.index_matches {
                failures.push(label);
            }
        }
    }
    outcome(
        failures.is_empty() && worst_index <= 0.02 && worst_ratio <= 0.05,
        format!(
            "9 combinations, max |index − σ| {worst_index:.2e} (limit 0.02), max |ratio − 1| {worst_ratio:.2e} (limit 0.05){}",
            failures.first().map(|c| format!("; failure: {c}")).unwrap_or_default()
        ),
    )
}

fn exponential_intensity() -> Outcome {
    let quad = QuadConfig::default();
    let deriv = DerivativeConfig::default();
    let mut points = Vec::new();
    for d in [2, 3, 4] {
        points.extend(sample_points(d, 20, 2024 + d as u64));
    }
    let cases = [
        (DirectingMeasure::sigma_stable(0.5).unwrap(), 1e-5),
        (
            DirectingMeasure::sigma_stable_normalized(0.3).unwrap(),
            1e-5,
        ),
        (
            DirectingMeasure::sigma_stable_normalized(0.7).unwrap(),
            1e-5,
        ),
        (DirectingMeasure::finite_exponential(), 1e-5),
        (DirectingMeasure::gamma_process(), 1e-4),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (dm, tol) in &cases {
        match verify_exp_intensity(dm, &points, *tol, &quad, &deriv) {
            Ok(r) => {
                pass &= r.all_pass;
                parts.push(format!("{} {:.1e}", dm.name(), r.max_rel_dev));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{}: {e}", dm.name()));
            }
        }
    }
    // closed form for the normalised stable family, written out here
    let mut closed: f64 = 0.0;
    for sigma in [0.3, 0.5, 0.7] {
        let dm = DirectingMeasure::sigma_stable_normalized(sigma).unwrap();
        for s in &points {
            let d = s.len() as f64;
            let total: f64 = s.iter().sum();
            let want = sigma * gamma(d + sigma) / gamma(1.0 - sigma) * total.powf(-(d + sigma));
            match intensity_direct(&dm, s, &quad) {
                Ok(got) => closed = closed.max(((got - want) / want).abs()),
                Err(_) => closed = f64::INFINITY,
            }
        }
    }
    pass &= closed <= 1e-6;
    outcome(
        pass,
        format!(
            "60 points (d=2,3,4); max rel. deviation {}; closed form {closed:.1e} (limit 1e-6)",
            parts.join(", ")
        ),
    )
}

fn simulation_tails() -> Outcome {
    let spec = CormSpec::new(
        1,
        ScoreModel::iid_exponential(1).unwrap(),
        DirectingMeasure::sigma_stable_normalized(0.5).unwrap(),
        BaseMeasure::unit(),
    )
    .unwrap();
    match validate_tails(
        &spec,
        &[0.5, 1.0, 2.0, 5.0],
        2000,
        20240601,
        &SimOptions::default(),
    ) {
        Ok(r) => {
            let all = r.rows.iter().all(|row| row.within && !row.excluded);
            let devs: Vec<String> = r
                .rows
                .iter()
                .map(|row| format!("{:+.2}", row.deviation))
                .collect();
            outcome(
                all,
                format!(
                    "2000 replications, deviations at y=0.5,1,2,5: {} se (limit ±4)",
                    devs.join(", ")
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn determinism() -> Outcome {
    let spec =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs/mixed_normalized_stable.toml");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut codes = Vec::new();
    for dir in &dirs {
        codes.push(corm_cli::run([
            "corm",
            "--quiet",
            "simulate",
            "--spec",
            spec.to_str().unwrap(),
            "--reps",
            "20",
            "--seed",
            "42",
            "--out",
            dir.path().to_str().unwrap(),
        ]));
    }
    let read = |i: usize| std::fs::read(dirs[i].path().join("atoms.csv")).unwrap_or_default();
    let (a, b) = (read(0), read(1));
    outcome(
        codes == [0, 0] && !a.is_empty() && a == b,
        format!(
            "two runs with seed 42: exit codes {codes:?}, atom CSVs of {} bytes, identical: {}",
            a.len(),
            a == b
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        (
            "verdict grid for Gamma and Beta scores over stable directing measures",
            verdict_grid,
        ),
        (
            "density shortcuts imply well-posedness",
            shortcut_sufficiency,
        ),
        (
            "joint Lévy integral within the marginal bound",
            joint_consistency,
        ),
        ("stable tail factorization", tail_factorization),
        ("regular-variation index recovery", index_recovery),
        (
            "exponential-score intensity: direct vs derivative form",
            exponential_intensity,
        ),
        ("simulated tail counts", simulation_tails),
        ("simulation determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
