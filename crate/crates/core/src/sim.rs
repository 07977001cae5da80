//! Ferguson–Klass simulation of CoRM draws and Monte Carlo validation of
//! the marginal tail integrals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directing::DirectingMeasure;
use crate::error::{Error, Result};
use crate::integrability::{check_corm, CheckOptions, Posedness};
use crate::model::CormSpec;
use crate::quad::QuadConfig;
use crate::report::{csv_line, fmt_f64};
use crate::tails::marginal_tail;

/// Where the jump series is cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Jumps below this are dropped.
    pub min_jump: f64,
    /// Largest number of atoms kept.
    pub max_atoms: usize,
    /// Treat reaching `max_atoms` before `min_jump` as an error.
    pub strict: bool,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            min_jump: 1e-8,
            max_atoms: 100_000,
            strict: false,
        }
    }
}

impl Truncation {
    fn validate(&self) -> Result<()> {
        if !(self.min_jump > 0.0) || self.max_atoms == 0 {
            return Err(Error::InvalidArgument(format!(
                "truncation needs min_jump > 0 and max_atoms ≥ 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Why a jump series ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesStop {
    /// The next jump fell below the threshold.
    MinJump,
    /// The atom budget was used up.
    MaxAtoms,
    /// A finite-activity measure ran out of mass.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSeries {
    /// Strictly decreasing jumps.
    pub jumps: Vec<f64>,
    pub stop: SeriesStop,
}

/// Random stream for `replication` derived from the master seed.
pub fn stream_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

fn jumps_from<R: Rng + ?Sized>(
    directing: &DirectingMeasure,
    base_mass: f64,
    truncation: &Truncation,
    rng: &mut R,
) -> Result<JumpSeries> {
    truncation.validate()?;
    let mut jumps = Vec::new();
    let mut arrival = 0.0_f64;
    loop {
        arrival += <Exp1 as Distribution<f64>>::sample(&Exp1, rng);
        let z = directing.inverse_tail(arrival / base_mass);
        if z == 0.0 {
            return Ok(JumpSeries {
                jumps,
                stop: SeriesStop::Exhausted,
            });
        }
        if z < truncation.min_jump {
            return Ok(JumpSeries {
                jumps,
                stop: SeriesStop::MinJump,
            });
        }
        if jumps.len() == truncation.max_atoms {
            if truncation.strict {
                return Err(Error::TruncationBudgetExceeded(truncation.max_atoms));
            }
            return Ok(JumpSeries {
                jumps,
                stop: SeriesStop::MaxAtoms,
            });
        }
        // ties from a zero-length arrival gap would break strict ordering
        if jumps.last().is_some_and(|&last| z >= last) {
            continue;
        }
        jumps.push(z);
    }
}

/// Jumps `z_i = U*⁻¹(Γ_i / α(X))` for unit-rate Poisson arrivals `Γ_i`.
pub fn ferguson_klass_jumps(
    directing: &DirectingMeasure,
    base_mass: f64,
    truncation: &Truncation,
    seed: u64,
) -> Result<JumpSeries> {
    crate::error::positive("base_mass", base_mass)?;
    jumps_from(directing, base_mass, truncation, &mut stream_rng(seed, 0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub jump: f64,
    pub scores: Vec<f64>,
    /// `jump · scores[j]`.
    pub weights: Vec<f64>,
}

/// A truncated CoRM realisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CormDraw {
    pub atoms: Vec<Atom>,
    pub truncation: Truncation,
    pub stop: SeriesStop,
    pub seed: u64,
    pub replication: u64,
}

impl CormDraw {
    pub fn dim(&self) -> usize {
        self.atoms.first().map_or(0, |a| a.scores.len())
    }

    /// Number of weights of coordinate `j` (0-based) strictly above `y`.
    pub fn count_above(&self, j: usize, y: f64) -> usize {
        self.atoms.iter().filter(|a| a.weights[j] > y).count()
    }

    /// Smallest retained jump, or the threshold when the series ended
    /// below it.
    pub fn effective_min_jump(&self) -> f64 {
        match self.stop {
            SeriesStop::MaxAtoms => self
                .atoms
                .last()
                .map_or(self.truncation.min_jump, |a| a.jump),
            _ => self.truncation.min_jump,
        }
    }

    /// CSV with columns `atom_index,location,z,m_1..m_d,s_1..s_d`.
    pub fn to_csv(&self, d: usize) -> String {
        let mut header = vec!["atom_index".to_owned(), "location".into(), "z".into()];
        header.extend((1..=d).map(|j| format!("m_{j}")));
        header.extend((1..=d).map(|j| format!("s_{j}")));
        let mut out = csv_line(&header);
        for (i, a) in self.atoms.iter().enumerate() {
            let mut row = vec![i.to_string(), fmt_f64(a.location), fmt_f64(a.jump)];
            row.extend(a.scores.iter().map(|&x| fmt_f64(x)));
            row.extend(a.weights.iter().map(|&x| fmt_f64(x)));
            out.push_str(&csv_line(&row));
        }
        out
    }
}

/// Simulation switches.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    pub truncation: Truncation,
    /// Skip the well-posedness check.
    pub force: bool,
}

fn ensure_well_posed(spec: &CormSpec, force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    let verdict = check_corm(spec, &CheckOptions::default())?;
    match verdict.multivariate {
        Posedness::WellPosed => Ok(()),
        other => Err(Error::IllPosedSpec(format!("{other:?}"))),
    }
}

/// One replication without the posedness check.
pub fn draw_replication(
    spec: &CormSpec,
    truncation: &Truncation,
    seed: u64,
    replication: u64,
) -> Result<CormDraw> {
    let mut rng = stream_rng(seed, replication);
    let series = jumps_from(&spec.directing, spec.base.total_mass, truncation, &mut rng)?;
    let window = spec.base.window_end;
    let atoms = series
        .jumps
        .iter()
        .map(|&z| {
            let location = rng.random::<f64>() * window;
            let scores = spec.score.sample(&mut rng);
            let weights = scores.iter().map(|m| z * m).collect();
            Atom {
                location,
                jump: z,
                scores,
                weights,
            }
        })
        .collect();
    Ok(CormDraw {
        atoms,
        truncation: *truncation,
        stop: series.stop,
        seed,
        replication,
    })
}

/// Draws replication 0 after checking that the spec is well posed (unless
/// `force` is set).
pub fn sample_corm(spec: &CormSpec, options: &SimOptions, seed: u64) -> Result<CormDraw> {
    ensure_well_posed(spec, options.force)?;
    draw_replication(spec, &options.truncation, seed, 0)
}

/// Empirical versus expected exceedance counts at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub j: usize,
    pub y: f64,
    /// `α(X) U_j(y)`.
    pub expected: f64,
    pub mean_count: f64,
    pub std_error: f64,
    /// `(mean − expected) / std_error`.
    pub deviation: f64,
    pub within: bool,
    /// Set when `y` is too close to the truncation level; such rows do not
    /// count towards the verdict.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub replications: usize,
    pub seed: u64,
    /// Allowed `|deviation|`.
    pub z_limit: f64,
    /// Smallest admissible threshold: `10 · ε · q99`.
    pub min_threshold: f64,
    pub rows: Vec<SimRow>,
    /// Fraction of included rows within `z_limit`.
    pub fraction_within: f64,
    pub pass: bool,
}

impl SimReport {
    /// CSV with columns
    /// `j,y,expected,mean_count,std_error,deviation,within,excluded`.
    pub fn to_csv(&self) -> String {
        let mut out = csv_line([
            "j",
            "y",
            "expected",
            "mean_count",
            "std_error",
            "deviation",
            "within",
            "excluded",
        ]);
        for r in &self.rows {
            out.push_str(&csv_line([
                r.j.to_string(),
                fmt_f64(r.y),
                fmt_f64(r.expected),
                fmt_f64(r.mean_count),
                fmt_f64(r.std_error),
                fmt_f64(r.deviation),
                r.within.to_string(),
                r.excluded.to_string(),
            ]));
        }
        out
    }
}

/// Monte Carlo check of `E #{i : s_{j,i} > y} = α(X) U_j(y)` for every
/// coordinate and threshold.
///
/// Replications use independent streams of the master seed and run in
/// parallel; the report does not depend on the thread count.
pub fn validate_tails(
    spec: &CormSpec,
    thresholds: &[f64],
    replications: usize,
    seed: u64,
    options: &SimOptions,
) -> Result<SimReport> {
    if replications < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least 2 replications are needed, got {replications}"
        )));
    }
    if thresholds.is_empty() || thresholds.iter().any(|&y| !(y > 0.0) || !y.is_finite()) {
        return Err(Error::InvalidArgument(
            "thresholds must be positive and finite".into(),
        ));
    }
    ensure_well_posed(spec, options.force)?;
    let d = spec.dim();
    let per_rep = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let draw = draw_replication(spec, &options.truncation, seed, r)?;
            let counts: Vec<f64> = (0..d)
                .flat_map(|j| thresholds.iter().map(move |&y| (j, y)))
                .map(|(j, y)| draw.count_above(j, y) as f64)
                .collect();
            Ok((counts, draw.effective_min_jump()))
        })
        .collect::<Result<Vec<_>>>()?;
    let eps = per_rep.iter().map(|p| p.1).fold(0.0, f64::max);
    let q99 = spec
        .score
        .marginals()
        .iter()
        .map(|m| m.quantile(0.99))
        .fold(0.0, f64::max);
    let min_threshold = 10.0 * eps * q99;

    let n = replications as f64;
    let quad = QuadConfig::default();
    let mut rows = Vec::with_capacity(d * thresholds.len());
    for j in 0..d {
        for (k, &y) in thresholds.iter().enumerate() {
            let idx = j * thresholds.len() + k;
            let mean = per_rep.iter().map(|p| p.0[idx]).sum::<f64>() / n;
            let var = per_rep
                .iter()
                .map(|p| (p.0[idx] - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            let expected = spec.base.total_mass
                * marginal_tail(spec.score.marginal(j), &spec.directing, y, &quad)?;
            // counts are Poisson: fall back to the model variance when every
            // replication saw the same count
            let std_error = if var > 0.0 {
                (var / n).sqrt()
            } else {
                (expected / n).sqrt()
            };
            let deviation = if std_error > 0.0 {
                (mean - expected) / std_error
            } else if mean == expected {
                0.0
            } else {
                f64::INFINITY
            };
            rows.push(SimRow {
                j: j + 1,
                y,
                expected,
                mean_count: mean,
                std_error,
                deviation,
                within: deviation.abs() <= 4.0,
                excluded: y < min_threshold,
            });
        }
    }
    let included: Vec<&SimRow> = rows.iter().filter(|r| !r.excluded).collect();
    if included.is_empty() {
        return Err(Error::TruncationBias(format!(
            "all thresholds lie below 10·ε·q99 = {min_threshold:e}"
        )));
    }
    let fraction_within =
        included.iter().filter(|r| r.within).count() as f64 / included.len() as f64;
    Ok(SimReport {
        replications,
        seed,
        z_limit: 4.0,
        min_threshold,
        rows,
        fraction_within,
        pass: fraction_within >= 0.95,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BaseMeasure;
    use crate::score::{MarginalScore, ScoreFamily, ScoreModel};
    use statrs::function::gamma::gamma;

    fn spec(d: usize, dm: DirectingMeasure, mass: f64) -> CormSpec {
        CormSpec::new(
            d,
            ScoreModel::iid_exponential(d).unwrap(),
            dm,
            BaseMeasure::new(mass, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn stable_jumps_follow_closed_form_inversion() {
        let sigma: f64 = 0.5;
        let dm = DirectingMeasure::sigma_stable_normalized(sigma).unwrap();
        let t = Truncation::default();
        let a = ferguson_klass_jumps(&dm, 2.0, &t, 11).unwrap();
        // replay the arrivals
        let mut rng = stream_rng(11, 0);
        let mut g = 0.0;
        for &z in a.jumps.iter().take(50) {
            g += <Exp1 as Distribution<f64>>::sample(&Exp1, &mut rng);
            let want = (g * gamma(1.0 - sigma) / 2.0).powf(-1.0 / sigma);
            assert!(((z - want) / want).abs() < 1e-12);
        }
        assert_eq!(a.stop, SeriesStop::MinJump);
        assert!(a.jumps.windows(2).all(|w| w[0] > w[1]));
        assert!(*a.jumps.last().unwrap() >= t.min_jump);
    }

    #[test]
    fn finite_activity_can_be_empty() {
        let dm = DirectingMeasure::finite_exponential();
        let lens: Vec<usize> = (0..200)
            .map(|s| {
                ferguson_klass_jumps(&dm, 0.05, &Truncation::default(), s)
                    .unwrap()
                    .jumps
                    .len()
            })
            .collect();
        assert!(lens.contains(&0));
        assert!(lens.iter().all(|&n| n < 10));
    }

    #[test]
    fn atom_budget() {
        let dm = DirectingMeasure::sigma_stable(0.9).unwrap();
        let t = Truncation {
            max_atoms: 100,
            ..Truncation::default()
        };
        let s = ferguson_klass_jumps(&dm, 1.0, &t, 1).unwrap();
        assert_eq!((s.jumps.len(), s.stop), (100, SeriesStop::MaxAtoms));
        let strict = Truncation { strict: true, ..t };
        assert!(matches!(
            ferguson_klass_jumps(&dm, 1.0, &strict, 1),
            Err(Error::TruncationBudgetExceeded(100))
        ));
    }

    #[test]
    fn identity_scores_reproduce_jumps() {
        let spec = CormSpec::new(
            1,
            ScoreModel::from_families(&[ScoreFamily::Gamma {
                shape: 1e6,
                rate: 1e6,
            }])
            .unwrap(),
            DirectingMeasure::sigma_stable_normalized(0.5).unwrap(),
            BaseMeasure::unit(),
        )
        .unwrap();
        let draw = sample_corm(&spec, &SimOptions::default(), 5).unwrap();
        assert!(!draw.atoms.is_empty());
        for a in &draw.atoms {
            assert!((a.weights[0] / a.jump - 1.0).abs() < 0.01);
            assert!((0.0..=1.0).contains(&a.location));
        }
    }

    #[test]
    fn same_seed_same_draw() {
        let spec = spec(2, DirectingMeasure::gamma_process(), 3.0);
        let o = SimOptions::default();
        let a = sample_corm(&spec, &o, 99).unwrap();
        let b = sample_corm(&spec, &o, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(2), b.to_csv(2));
        assert_ne!(a, sample_corm(&spec, &o, 100).unwrap());
        assert!(a
            .to_csv(2)
            .starts_with("atom_index,location,z,m_1,m_2,s_1,s_2\n"));
    }

    #[test]
    fn shared_jump_correlates_log_weights() {
        let spec = spec(
            2,
            DirectingMeasure::sigma_stable_normalized(0.5).unwrap(),
            1.0,
        );
        let draw = sample_corm(&spec, &SimOptions::default(), 3).unwrap();
        let pairs: Vec<(f64, f64)> = draw
            .atoms
            .iter()
            .map(|a| (a.weights[0].ln(), a.weights[1].ln()))
            .collect();
        let n = pairs.len() as f64;
        let (mx, my) = (
            pairs.iter().map(|p| p.0).sum::<f64>() / n,
            pairs.iter().map(|p| p.1).sum::<f64>() / n,
        );
        let cov: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        assert!(cov > 0.0);
    }

    #[test]
    fn ill_posed_spec_is_refused() {
        let spec = CormSpec::new(
            1,
            ScoreModel::independent(vec![MarginalScore::gamma(0.3, 1.0).unwrap()]).unwrap(),
            DirectingMeasure::sigma_stable(0.4).unwrap(),
            BaseMeasure::unit(),
        )
        .unwrap();
        assert!(matches!(
            sample_corm(&spec, &SimOptions::default(), 1),
            Err(Error::IllPosedSpec(_))
        ));
        let forced = SimOptions {
            force: true,
            ..SimOptions::default()
        };
        assert!(sample_corm(&spec, &forced, 1).is_ok());
    }

    #[test]
    fn tail_counts_match_expectation() {
        let spec = spec(
            1,
            DirectingMeasure::sigma_stable_normalized(0.5).unwrap(),
            1.0,
        );
        let r = validate_tails(&spec, &[1.0, 3.0], 400, 17, &SimOptions::default()).unwrap();
        assert!((r.rows[0].expected - 0.5).abs() < 1e-9);
        assert!(r.pass, "{:?}", r.rows);
        let doubled = super::tests::spec(
            1,
            DirectingMeasure::sigma_stable_normalized(0.5).unwrap(),
            2.0,
        );
        let r2 = validate_tails(&doubled, &[1.0], 50, 17, &SimOptions::default()).unwrap();
        assert!((r2.rows[0].expected - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tiny_thresholds_are_flagged() {
        let spec = spec(
            1,
            DirectingMeasure::sigma_stable_normalized(0.5).unwrap(),
            1.0,
        );
        let t = SimOptions {
            truncation: Truncation {
                min_jump: 1e-3,
                ..Truncation::default()
            },
            force: false,
        };
        let r = validate_tails(&spec, &[1e-3, 1.0], 20, 1, &t).unwrap();
        assert!(r.rows[0].excluded && !r.rows[1].excluded);
        assert!(matches!(
            validate_tails(&spec, &[1e-3], 20, 1, &t),
            Err(Error::TruncationBias(_))
        ));
    }

    #[test]
    fn disjoint_bands_are_uncorrelated() {
        let spec = spec(
            1,
            DirectingMeasure::sigma_stable_normalized(0.5).unwrap(),
            1.0,
        );
        let t = Truncation {
            min_jump: 1e-4,
            ..Truncation::default()
        };
        let reps = 1500;
        let counts: Vec<(f64, f64)> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let d = draw_replication(&spec, &t, 4, r).unwrap();
                let a = d.count_above(0, 0.1) - d.count_above(0, 0.5);
                let b = d.count_above(0, 0.5) - d.count_above(0, 2.0);
                (a as f64, b as f64)
            })
            .collect();
        let n = reps as f64;
        let (ma, mb) = (
            counts.iter().map(|c| c.0).sum::<f64>() / n,
            counts.iter().map(|c| c.1).sum::<f64>() / n,
        );
        let cov = counts.iter().map(|c| (c.0 - ma) * (c.1 - mb)).sum::<f64>() / n;
        let va = counts.iter().map(|c| (c.0 - ma).powi(2)).sum::<f64>() / n;
        let vb = counts.iter().map(|c| (c.1 - mb).powi(2)).sum::<f64>() / n;
        let corr = cov / (va * vb).sqrt();
        // |corr| ≲ 4/√n under independence
        assert!(corr.abs() < 4.0 / n.sqrt(), "{corr}");
    }
}
