//! Acceptance suite: one test per headline guarantee, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them all).
//!
//! Statistical criteria run at desk scale with pinned seeds, trial counts,
//! and tolerances; exact criteria assert with zero or floating-point-dust
//! tolerance only.

use rayon::prelude::*;
use sdg::concepts::{self, class_zoo, ConceptClass, DimensionReport, ZooName};
use sdg::game::{
    generator_strategy, Discriminator, DiscriminatorReply, FoolingParams, HonestDiscriminator,
    Outcome, TreeAdversary,
};
use sdg::measures::{self, Distribution, LabeledSample};
use sdg::minimax::{amenability_check, brute_force_game_value, AmenabilityResult, PayoffMatrix};
use sdg::online::{
    agnostic_soa_learner, count_flip_schedules, mw_learner, regret_of, DistExample, LearnerState,
};
use sdg::pipeline::{
    dp_fool, private_uniform_convergence, sanitize, DiscriminatorConfig, DpDiscriminator,
    PipelineConfig, PucConfig, SizeOverrides,
};
use sdg::privacy::{
    compose, dp_audit, exp_mech_learner, subsample_amplify, thresh_with_mean, Derivation,
    LearnerSpec, PrivacyParams, ThreshOutcome,
};
use sdg::rng::{Prng, RngFactory};

use rand::Rng;

fn criterion(id: u32, name: &str, run: impl FnOnce() -> Result<String, String>) {
    match run() {
        Ok(detail) => println!("PASS criterion {id:2}: {name} ({detail})"),
        Err(detail) => {
            println!("FAIL criterion {id:2}: {name} ({detail})");
            panic!("criterion {id} failed: {detail}");
        }
    }
}

fn random_distribution(n: usize, rng: &mut Prng) -> Distribution {
    Distribution::new((0..n).map(|_| rng.gen::<f64>() + 1e-6).collect()).unwrap()
}

/// Named zoo instances small enough for exhaustive dimension work.
fn zoo_instances() -> Vec<(String, ConceptClass)> {
    let mut out: Vec<(String, ConceptClass)> = Vec::new();
    out.push(("cube(2)".into(), class_zoo(ZooName::Cube, 2, 0, 0).unwrap()));
    out.push(("cube(3)".into(), class_zoo(ZooName::Cube, 3, 0, 0).unwrap()));
    for n in [3usize, 7] {
        out.push((
            format!("thresholds({n})+sym"),
            class_zoo(ZooName::Thresholds, n, 0, 0)
                .unwrap()
                .symmetrize(),
        ));
    }
    for n in [3usize, 4] {
        out.push((
            format!("singletons({n})+sym"),
            class_zoo(ZooName::Singletons, n, 0, 0)
                .unwrap()
                .symmetrize(),
        ));
    }
    for n in [4usize, 8] {
        out.push((
            format!("half_arcs({n})"),
            class_zoo(ZooName::HalfArcs, n, 0, 0).unwrap(),
        ));
    }
    out.push((
        "random(5,12,seed=3)+sym".into(),
        class_zoo(ZooName::Random, 5, 12, 3).unwrap().symmetrize(),
    ));
    out.push((
        "random(6,20,seed=11)+sym".into(),
        class_zoo(ZooName::Random, 6, 20, 11).unwrap().symmetrize(),
    ));
    out
}

// ---------------------------------------------------------------------------
// 1. Upper bound: every game against the honest discriminator ends Won
//    within ceil((4 l*/eps^2) ln(4 l*/eps^2)) rounds.
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_round_complexity_upper_bound() {
    criterion(1, "sequential games win within the round budget", || {
        let epsilons = [0.5, 0.3, 0.2];
        let factory = RngFactory::new(101);
        let mut games_mw = 0usize;
        let mut games_soa = 0usize;
        let mut worst_ratio = 0.0f64;
        for (name, class) in zoo_instances() {
            let class = class.symmetrize();
            let ell =
                concepts::dual_littlestone_dimension(&class).map_err(|e| format!("{name}: {e}"))?;
            if ell > 3 {
                continue;
            }
            for &eps in &epsilons {
                let params = FoolingParams::new(eps, ell).unwrap();
                let soa_fits = count_flip_schedules(params.horizon, ell) <= 1_000_000;
                let results: Vec<Result<(usize, usize, f64), String>> = (0..100u64)
                    .into_par_iter()
                    .map(|trial| {
                        let mut rng = factory.trial(trial);
                        let target = random_distribution(class.points(), &mut rng);
                        let run = |learner: LearnerState,
                                       tag: &str|
                         -> Result<(usize, f64), String> {
                            let mut disc =
                                HonestDiscriminator::new(&class, target.clone(), eps).unwrap();
                            let t = generator_strategy(
                                &class,
                                &params,
                                learner,
                                &mut disc,
                                Some(&target),
                            )
                            .map_err(|e| format!("{name} eps={eps} {tag} trial {trial}: {e}"))?;
                            if !t.won() {
                                return Err(format!(
                                    "{name} eps={eps} {tag} trial {trial}: lost after {} of {} rounds",
                                    t.rounds_played(),
                                    params.horizon
                                ));
                            }
                            Ok((
                                t.rounds_played(),
                                t.rounds_played() as f64 / params.horizon as f64,
                            ))
                        };
                        let (_, r_mw) =
                            run(mw_learner(&class, params.horizon).unwrap(), "mw")?;
                        let mut soa_games = 0;
                        let mut r_soa = 0.0;
                        if soa_fits {
                            let learner = agnostic_soa_learner(&class, params.horizon)
                                .map_err(|e| format!("{name} eps={eps}: {e}"))?;
                            let (_, r) = run(learner, "soa")?;
                            soa_games = 1;
                            r_soa = r;
                        }
                        Ok((1, soa_games, r_mw.max(r_soa)))
                    })
                    .collect();
                for r in results {
                    let (mw, soa, ratio) = r?;
                    games_mw += mw;
                    games_soa += soa;
                    worst_ratio = worst_ratio.max(ratio);
                }
            }
        }
        Ok(format!(
            "{games_mw} proper-engine and {games_soa} agnostic-engine games all won; worst rounds/budget = {worst_ratio:.3}"
        ))
    });
}

// ---------------------------------------------------------------------------
// 2. Lower bound: the tree adversary forces at least l*/2 served
//    distinguishers on average over a uniform hidden leaf.
// ---------------------------------------------------------------------------

fn random_class_with_dual_ldim(want: usize) -> (u64, ConceptClass) {
    for seed in 0..200u64 {
        let c = class_zoo(ZooName::Random, 8, 24, seed)
            .unwrap()
            .symmetrize();
        if concepts::dual_littlestone_dimension(&c).unwrap() == want {
            return (seed, c);
        }
    }
    panic!("no random class with dual dimension {want} in the scanned seeds");
}

#[test]
fn criterion_02_round_complexity_lower_bound() {
    criterion(2, "tree adversary forces l*/2 rounds on average", || {
        let eps = 0.4;
        let (seed3, random3) = random_class_with_dual_ldim(3);
        let cases = vec![
            (
                "cube(3)".to_string(),
                class_zoo(ZooName::Cube, 3, 0, 0).unwrap(),
            ),
            (format!("random(8,24,seed={seed3})+sym"), random3),
        ];
        let factory = RngFactory::new(102);
        let mut lines = Vec::new();
        for (name, class) in cases {
            let ell = concepts::dual_littlestone_dimension(&class).unwrap();
            let params = FoolingParams::new(eps, ell).unwrap();
            let served: Vec<f64> = (0..2000u64)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = factory.trial(trial);
                    let mut adv = TreeAdversary::new(&class, eps, &mut rng).unwrap();
                    let target = adv.target().clone();
                    let learner = mw_learner(&class, params.horizon).unwrap();
                    generator_strategy(&class, &params, learner, &mut adv, Some(&target))
                        .expect("game runs");
                    adv.served() as f64
                })
                .collect();
            let n = served.len() as f64;
            let mean = served.iter().sum::<f64>() / n;
            let var = served.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let stderr = (var / n).sqrt();
            let bound = ell as f64 / 2.0 - 3.0 * stderr;
            if mean < bound {
                return Err(format!(
                    "{name}: mean served {mean:.3} < l*/2 - 3 stderr = {bound:.3}"
                ));
            }
            lines.push(format!("{name}: mean {mean:.3} >= {bound:.3} (l*={ell})"));
        }
        Ok(lines.join("; "))
    });
}

// ---------------------------------------------------------------------------
// 3. Tightness at eps = 1/2: half arcs are fooled by the uniform
//    distribution in exactly one round, with zero tolerance.
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_half_arc_tightness() {
    criterion(3, "half arcs at eps = 1/2 end in round one", || {
        let factory = RngFactory::new(103);
        for n in [8usize, 64] {
            let class = class_zoo(ZooName::HalfArcs, n, 0, 0).unwrap();
            // Every row holds exactly half the circle, so the uniform
            // candidate is exactly 1/2-close; one round must suffice and the
            // budget can be pinned to 1.
            let params = FoolingParams {
                eps: 0.5,
                horizon: 1,
            };
            for trial in 0..20u64 {
                let mut rng = factory.trial(n as u64 * 1000 + trial);
                let target = random_distribution(class.points(), &mut rng);
                let learner = mw_learner(&class, params.horizon).unwrap();
                let mut disc = HonestDiscriminator::new(&class, target.clone(), 0.5).unwrap();
                let t = generator_strategy(&class, &params, learner, &mut disc, Some(&target))
                    .map_err(|e| format!("half_arcs({n}) trial {trial}: {e}"))?;
                if t.outcome != (Outcome::Won { round: 1 }) {
                    return Err(format!(
                        "half_arcs({n}) trial {trial}: outcome {:?}",
                        t.outcome
                    ));
                }
            }
        }
        Ok("half_arcs(8) and half_arcs(64): 20/20 immediate wins each".into())
    });
}

// ---------------------------------------------------------------------------
// 4. Dimension computations agree with an independent exhaustive search.
// ---------------------------------------------------------------------------

/// Exhaustive shattered-tree search, deliberately sharing nothing with the
/// library's max/min recursion: a per-depth boolean existence search with a
/// set of known-dead (subclass, depth) pairs for tractability.
mod oracle {
    use std::collections::HashSet;

    pub fn ldim(rows: &[Vec<bool>]) -> usize {
        let mut depth = 0;
        let mut dead = HashSet::new();
        while exists_tree(rows, depth + 1, &mut dead) {
            depth += 1;
        }
        depth
    }

    fn key(rows: &[Vec<bool>], depth: usize) -> (Vec<Vec<bool>>, usize) {
        (rows.to_vec(), depth)
    }

    fn exists_tree(
        rows: &[Vec<bool>],
        depth: usize,
        dead: &mut HashSet<(Vec<Vec<bool>>, usize)>,
    ) -> bool {
        if rows.is_empty() {
            return false;
        }
        if depth == 0 {
            return true;
        }
        if dead.contains(&key(rows, depth)) {
            return false;
        }
        let points = rows[0].len();
        for p in 0..points {
            let zeros: Vec<Vec<bool>> = rows.iter().filter(|r| !r[p]).cloned().collect();
            let ones: Vec<Vec<bool>> = rows.iter().filter(|r| r[p]).cloned().collect();
            if zeros.is_empty() || ones.is_empty() {
                continue;
            }
            if exists_tree(&zeros, depth - 1, dead) && exists_tree(&ones, depth - 1, dead) {
                return true;
            }
        }
        dead.insert(key(rows, depth));
        false
    }

    /// Transpose with duplicate-column removal, built from scratch.
    pub fn transpose(rows: &[Vec<bool>]) -> Vec<Vec<bool>> {
        let points = rows[0].len();
        let mut cols: Vec<Vec<bool>> = (0..points)
            .map(|x| rows.iter().map(|r| r[x]).collect())
            .collect();
        cols.sort();
        cols.dedup();
        cols
    }
}

#[test]
fn criterion_04_dimension_oracle_equivalence() {
    criterion(4, "dimensions match exhaustive tree search", || {
        let mut cases: Vec<(String, ConceptClass)> = zoo_instances()
            .into_iter()
            .filter(|(_, c)| c.points() <= 6 && c.len() <= 32)
            .collect();
        let mut rng_seed = 0u64;
        while cases.len() < 220 {
            rng_seed += 1;
            let mut rng = RngFactory::new(104).trial(rng_seed);
            let n = rng.gen_range(2..=6usize);
            let kmax = (1usize << n).min(20);
            let k = rng.gen_range(1..=kmax);
            let c = class_zoo(ZooName::Random, n, k, rng_seed ^ 0x9e37).unwrap();
            cases.push((format!("random(n={n},k={k},seed={rng_seed})"), c));
        }
        let checked = cases.len();
        let results: Vec<Result<(), String>> = cases
            .par_iter()
            .map(|(name, c)| {
                let rows: Vec<Vec<bool>> = c.rows().iter().map(|h| h.bits().to_vec()).collect();
                let report = DimensionReport::compute(c).map_err(|e| format!("{name}: {e}"))?;
                let want_ldim = oracle::ldim(&rows);
                if report.ldim != want_ldim {
                    return Err(format!(
                        "{name}: ldim {} vs oracle {want_ldim}",
                        report.ldim
                    ));
                }
                let want_dual = oracle::ldim(&oracle::transpose(&rows));
                if report.dual_ldim != want_dual {
                    return Err(format!(
                        "{name}: dual ldim {} vs oracle {want_dual}",
                        report.dual_ldim
                    ));
                }
                if !report.dual_bound_holds() {
                    return Err(format!("{name}: double-exponential bound violated"));
                }
                if report.vc > report.ldim {
                    return Err(format!("{name}: vc {} > ldim {}", report.vc, report.ldim));
                }
                let log_rows = (c.len() as f64).log2();
                if (report.ldim as f64) > log_rows + 1e-9 {
                    return Err(format!(
                        "{name}: ldim {} > log2 rows {log_rows}",
                        report.ldim
                    ));
                }
                Ok(())
            })
            .collect();
        for r in results {
            r?;
        }
        Ok(format!("{checked} classes, primal and dual, all matched"))
    });
}

// ---------------------------------------------------------------------------
// 5. Regret bounds of both learner engines on adversarial streams.
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_regret_bounds() {
    criterion(5, "learner regret stays under its bound", || {
        // Proper engine: cube(3), horizon 400, adaptive adversarial labels.
        let class = class_zoo(ZooName::Cube, 3, 0, 0).unwrap();
        let t = 400usize;
        let factory = RngFactory::new(105);
        let mw_bound = (t as f64 * (class.points() as f64).ln() / 2.0).sqrt() + 1.0;
        let mw_worst: f64 = (0..100u64)
            .into_par_iter()
            .map(|trial| {
                let mut rng = factory.trial(trial);
                let mut learner = mw_learner(&class, t).unwrap();
                for _ in 0..t {
                    let d = rng.gen_range(0..class.len());
                    let ex = DistExample::dirac(d, false, class.len()).unwrap();
                    let pred = learner.predict().unwrap().predictor.evaluate(&ex);
                    // Label against the learner's lean.
                    let y = pred < 0.5;
                    learner
                        .update(&DistExample::dirac(d, y, class.len()).unwrap())
                        .unwrap();
                }
                regret_of(learner.ledger(), &class)
            })
            .reduce(|| f64::NEG_INFINITY, f64::max);
        if mw_worst > mw_bound {
            return Err(format!(
                "mw: worst regret {mw_worst:.3} > bound {mw_bound:.3}"
            ));
        }

        // Mistake-bound engine on small dual dimensions within the caps.
        let soa_cases = vec![
            (
                "singletons(2)+sym",
                class_zoo(ZooName::Singletons, 2, 0, 0)
                    .unwrap()
                    .symmetrize(),
                400usize,
            ),
            (
                "thresholds(3)+sym",
                class_zoo(ZooName::Thresholds, 3, 0, 0)
                    .unwrap()
                    .symmetrize(),
                400usize,
            ),
            (
                "random(8,24)+sym l*=3",
                random_class_with_dual_ldim(3).1,
                150usize,
            ),
        ];
        let mut lines = vec![format!("mw worst {mw_worst:.2} <= {mw_bound:.2}")];
        for (name, class, horizon) in soa_cases {
            let ell = concepts::dual_littlestone_dimension(&class).unwrap();
            if count_flip_schedules(horizon, ell) > 1_000_000 {
                return Err(format!("{name}: expert cap unexpectedly exceeded"));
            }
            let bound = (0.5 * ell as f64 * horizon as f64 * (horizon as f64).ln()).sqrt();
            let worst: f64 = (0..100u64)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = factory.stream(trial, 2);
                    let mut learner = agnostic_soa_learner(&class, horizon).unwrap();
                    for _ in 0..horizon {
                        let d = rng.gen_range(0..class.len());
                        let ex = DistExample::dirac(d, false, class.len()).unwrap();
                        let pred = learner.predict().unwrap().predictor.evaluate(&ex);
                        let y = pred < 0.5;
                        learner
                            .update(&DistExample::dirac(d, y, class.len()).unwrap())
                            .unwrap();
                    }
                    regret_of(learner.ledger(), &class)
                })
                .reduce(|| f64::NEG_INFINITY, f64::max);
            if worst > bound {
                return Err(format!(
                    "{name}: worst regret {worst:.3} > bound {bound:.3} (l*={ell}, T={horizon})"
                ));
            }
            lines.push(format!("{name} worst {worst:.2} <= {bound:.2}"));
        }
        Ok(lines.join("; "))
    });
}

// ---------------------------------------------------------------------------
// 6. The minimax dichotomy matches a simplex-grid oracle and certificates
//    verify by direct evaluation.
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_minimax_dichotomy() {
    criterion(6, "amenability dichotomy matches the grid oracle", || {
        let grid = 200usize;
        let factory = RngFactory::new(106);
        let results: Vec<Result<(), String>> = (0..200u64)
            .into_par_iter()
            .map(|trial| {
                let mut rng = factory.trial(trial);
                // Symmetric classes with at most 6 rows and 4 points keep
                // the oracle within its caps.
                let n = rng.gen_range(3..=4usize);
                let k = rng.gen_range(2..=3usize);
                let class = class_zoo(ZooName::Random, n, k, trial ^ 0x51ed)
                    .unwrap()
                    .symmetrize();
                if class.len() > 6 {
                    return Ok(());
                }
                let f: Vec<f64> = (0..class.len()).map(|_| rng.gen::<f64>()).collect();
                let eps: f64 = rng.gen_range(0.1..0.9);

                let entries: Vec<Vec<f64>> = class
                    .rows()
                    .iter()
                    .zip(&f)
                    .map(|(row, &fd)| {
                        (0..class.points())
                            .map(|x| fd - row.get(x) as u8 as f64)
                            .collect()
                    })
                    .collect();
                let matrix = PayoffMatrix::new(entries).unwrap();
                let oracle_value = brute_force_game_value(&matrix, grid)
                    .map_err(|e| format!("trial {trial}: {e}"))?;

                let verdict = amenability_check(&f, &class, eps)
                    .map_err(|e| format!("trial {trial}: {e}"))?;
                let tol = 2.0 / grid as f64;
                match verdict {
                    AmenabilityResult::Proper(p) => {
                        // Certificate: no row beats eps/2 against p.
                        for (d, row) in class.rows().iter().enumerate() {
                            let gap = f[d] - measures::expect(&p, row).unwrap();
                            if gap > eps / 2.0 + 1e-9 {
                                return Err(format!(
                                    "trial {trial}: proper certificate leaks {gap}"
                                ));
                            }
                        }
                        // Grid value can overshoot the true value by at most
                        // the grid tolerance, so it cannot certify the other
                        // branch.
                        if oracle_value - tol > eps / 2.0 + 1e-9 {
                            return Err(format!(
                                "trial {trial}: oracle {oracle_value} refutes proper at eps/2 {}",
                                eps / 2.0
                            ));
                        }
                    }
                    AmenabilityResult::Separator { mixture, margin } => {
                        for x in 0..class.points() {
                            let payoff: f64 = mixture
                                .iter()
                                .map(|&(d, w)| w * (f[d] - class.row(d).get(x) as u8 as f64))
                                .sum();
                            if payoff < eps / 2.0 - 1e-9 {
                                return Err(format!(
                                    "trial {trial}: separator fails at point {x}: {payoff}"
                                ));
                            }
                        }
                        if margin > oracle_value + 1e-9 {
                            return Err(format!(
                                "trial {trial}: margin {margin} above oracle {oracle_value}"
                            ));
                        }
                        if oracle_value + 1e-9 < eps / 2.0 - tol {
                            return Err(format!(
                                "trial {trial}: oracle {oracle_value} refutes separator"
                            ));
                        }
                    }
                }
                Ok(())
            })
            .collect();
        for r in results {
            r?;
        }
        Ok("200 random instances: branch and certificate agree with the 1/200 grid".into())
    });
}

// ---------------------------------------------------------------------------
// 7. The private threshold test honors its margin contract.
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_thresh_margin_contract() {
    criterion(
        7,
        "threshold test error rate within gamma at the margin",
        || {
            let n = 200usize; // margin parameter and scalar count
            let c = 0.5;
            let trials = 10_000u32;
            let mut lines = Vec::new();
            for gamma in [0.1f64, 0.01] {
                let margin = 8.0 * (1.0 / gamma).ln() / n as f64;
                let stderr = (gamma * (1.0 - gamma) / trials as f64).sqrt();
                let allowed = gamma + 2.0 * stderr;
                let mut rng = RngFactory::new(107).trial((gamma * 1000.0) as u64);
                let mut wrong_top = 0u32;
                let mut wrong_bottom = 0u32;
                for _ in 0..trials {
                    // Above the margin: Bottom is an error.
                    if thresh_with_mean(c + margin, n, c, n, &mut rng).unwrap()
                        == ThreshOutcome::Bottom
                    {
                        wrong_bottom += 1;
                    }
                    // Below the margin: Top is an error.
                    if thresh_with_mean(c - margin, n, c, n, &mut rng).unwrap()
                        == ThreshOutcome::Top
                    {
                        wrong_top += 1;
                    }
                }
                let rate_b = wrong_bottom as f64 / trials as f64;
                let rate_t = wrong_top as f64 / trials as f64;
                if rate_b > allowed || rate_t > allowed {
                    return Err(format!(
                        "gamma {gamma}: error rates {rate_b:.4}/{rate_t:.4} above {allowed:.4}"
                    ));
                }
                lines.push(format!(
                    "gamma {gamma}: rates {rate_b:.4}/{rate_t:.4} <= {allowed:.4}"
                ));
            }
            Ok(lines.join("; "))
        },
    );
}

// ---------------------------------------------------------------------------
// 8. Privacy accounting re-derives from the composition and amplification
//    formulas, and the worked amplification example is exact.
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_privacy_accounting() {
    criterion(8, "ledger totals re-derive from first principles", || {
        // The worked example, exactly.
        let amped = subsample_amplify(&PrivacyParams::new(1.0, 1e-6).unwrap(), 10, 100).unwrap();
        if amped.alpha != 0.6 {
            return Err(format!("amplified alpha {} != 0.6 exactly", amped.alpha));
        }

        // Re-derivation helper applying the formulas independently of the
        // ledger's own total().
        let rederive = |entries: &[sdg::privacy::LedgerEntry]| -> PrivacyParams {
            let parts: Vec<PrivacyParams> = entries
                .iter()
                .map(|e| match &e.derivation {
                    Derivation::Atomic { params } => *params,
                    Derivation::Amplified { base, u, v } => {
                        subsample_amplify(base, *u, *v).unwrap()
                    }
                    Derivation::PostProcessed => PrivacyParams::ZERO,
                })
                .collect();
            compose(parts.iter())
        };

        let class = class_zoo(ZooName::Thresholds, 7, 0, 0)
            .unwrap()
            .symmetrize();
        let cfg = PipelineConfig::new(0.4, 0.2, 0.5, LearnerSpec::new(1.0))
            .with_overrides(SizeOverrides::all());
        let mut rng = RngFactory::new(108).trial(0);
        let target = Distribution::uniform(7).unwrap();
        let sample = measures::draw_sample(&target, 2500, &mut rng);
        let fool = dp_fool(&class, &sample, &cfg, &mut rng).unwrap();
        let total = fool.ledger.total().unwrap();
        let re = rederive(fool.ledger.entries());
        if (total.alpha - re.alpha).abs() > 1e-12 || (total.beta - re.beta).abs() > 1e-12 {
            return Err("fooling ledger total does not re-derive".into());
        }
        // Closed form: t0 rounds, each one subsampled learner plus one
        // threshold test.
        let n_ell = (fool.tau0 * sample.len() as f64).ceil();
        let per_round = 6.0 * 1.0 * n_ell / sample.len() as f64 + n_ell / sample.len() as f64;
        if (total.alpha - fool.t0 as f64 * per_round).abs() > 1e-12 {
            return Err(format!(
                "fooling ledger alpha {} differs from closed form {}",
                total.alpha,
                fool.t0 as f64 * per_round
            ));
        }

        let even_sample = measures::draw_sample(&target, 3000, &mut rng);
        let san = sanitize(&class, &even_sample, &cfg, &mut rng).unwrap();
        let re = rederive(san.ledger.entries());
        let total = san.ledger.total().unwrap();
        if (total.alpha - re.alpha).abs() > 1e-12 || (total.beta - re.beta).abs() > 1e-12 {
            return Err("sanitizer ledger total does not re-derive".into());
        }

        let pairs: Vec<(usize, bool)> = (0..20_000)
            .map(|_| (rng.gen_range(0..7), rng.gen::<bool>()))
            .collect();
        let labelled = LabeledSample::new(pairs, 7).unwrap();
        let puc_cfg = PucConfig {
            m_points: 5_000,
            kappa: 0.5,
            learner: LearnerSpec::new(1.0),
            overrides: SizeOverrides::all(),
        };
        let puc =
            private_uniform_convergence(&class, &labelled, 0.5, 0.3, &puc_cfg, &mut rng).unwrap();
        let re = rederive(puc.ledger.entries());
        let total = puc.ledger.total().unwrap();
        if (total.alpha - re.alpha).abs() > 1e-12 || (total.beta - re.beta).abs() > 1e-12 {
            return Err("uniform-convergence ledger total does not re-derive".into());
        }
        Ok(format!(
            "fooling, sanitizer, and convergence ledgers re-derive; worked example exact (alpha = {})",
            amped.alpha
        ))
    });
}

// ---------------------------------------------------------------------------
// 9. Private discriminator utility: served distinguishers carry half the
//    advantage, concessions certify closeness.
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_dp_discriminator_utility() {
    criterion(9, "private discriminator clauses hold", || {
        let eps = 0.4;
        let delta = 0.4;
        let tau = 0.45;
        let spec = LearnerSpec::new(1.0);
        let factory = RngFactory::new(109);
        let mut lines = Vec::new();
        for (name, class) in [
            (
                "singletons(4)+sym",
                class_zoo(ZooName::Singletons, 4, 0, 0)
                    .unwrap()
                    .symmetrize(),
            ),
            (
                "thresholds(7)+sym",
                class_zoo(ZooName::Thresholds, 7, 0, 0)
                    .unwrap()
                    .symmetrize(),
            ),
        ] {
            // Honest sizes: subsample covers the learner, sample covers the
            // threshold margin.
            let m = spec.sample_complexity(class.len(), eps / 8.0, tau * delta / 2.0);
            let by_margin = 64.0 * (2.0 / (tau * delta)).ln() / (eps * tau);
            let size = ((m as f64 / tau).max(by_margin).ceil() as usize).max(1000);
            let trials = 500u64;
            let ok: u64 = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = factory.trial(trial);
                    let target = random_distribution(class.points(), &mut rng);
                    let sample = measures::draw_sample(&target, size, &mut rng);
                    // Alternate candidate scenarios: near, far, random.
                    let candidate = match trial % 3 {
                        0 => target.clone(),
                        1 => {
                            let mut w = vec![1e-4; class.points()];
                            w[(trial as usize) % class.points()] = 1.0;
                            Distribution::new(w).unwrap()
                        }
                        _ => random_distribution(class.points(), &mut rng),
                    };
                    let mut disc = DpDiscriminator::new(
                        &class,
                        &sample,
                        DiscriminatorConfig { eps, delta, tau },
                        spec,
                        factory.stream(trial, 1),
                    )
                    .unwrap();
                    let p_s = disc.empirical_target().clone();
                    match disc.reply(&candidate).unwrap() {
                        DiscriminatorReply::Distinguisher(d) => {
                            let adv = measures::expect(&p_s, class.row(d)).unwrap()
                                - measures::expect(&candidate, class.row(d)).unwrap();
                            (adv >= eps / 2.0) as u64
                        }
                        DiscriminatorReply::Win => {
                            let v = measures::ipm(&class, &p_s, &candidate).unwrap().value;
                            (v <= eps) as u64
                        }
                    }
                })
                .sum();
            let rate = ok as f64 / trials as f64;
            let p = 1.0 - tau * delta;
            let stderr = (p * (1.0 - p) / trials as f64).sqrt();
            let needed = p - 2.0 * stderr;
            if rate < needed {
                return Err(format!(
                    "{name}: clause rate {rate:.4} below {needed:.4} (|S| = {size})"
                ));
            }
            lines.push(format!("{name}: {rate:.4} >= {needed:.4}"));
        }
        Ok(lines.join("; "))
    });
}

// ---------------------------------------------------------------------------
// 10. End-to-end private fooling lands within eps0/2 of the empirical
//     distribution in at least 1 - delta0 of runs.
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_dp_fooling_end_to_end() {
    criterion(10, "private fooling hits its accuracy target", || {
        let class = class_zoo(ZooName::Thresholds, 7, 0, 0)
            .unwrap()
            .symmetrize();
        let cfg = PipelineConfig::new(0.4, 0.2, 0.5, LearnerSpec::new(1.0))
            .with_overrides(SizeOverrides::all());
        let sample_size = 22_500usize; // 150^2: the round budget divides it
        let factory = RngFactory::new(110);
        let trials = 200u64;
        let hits: u64 = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = factory.trial(trial);
                let target = random_distribution(class.points(), &mut rng);
                let sample = measures::draw_sample(&target, sample_size, &mut rng);
                let out = dp_fool(&class, &sample, &cfg, &mut rng).unwrap();
                (out.ipm_to_sample <= cfg.eps0 / 2.0) as u64
            })
            .sum();
        let rate = hits as f64 / trials as f64;
        let p = 1.0 - cfg.delta0;
        let stderr = (p * (1.0 - p) / trials as f64).sqrt();
        let needed = p - 2.0 * stderr;
        if rate < needed {
            return Err(format!("accuracy rate {rate:.4} below {needed:.4}"));
        }
        Ok(format!(
            "{hits}/{trials} runs within eps0/2 (needed {needed:.4})"
        ))
    });
}

// ---------------------------------------------------------------------------
// 11. Private uniform convergence: released losses track population losses
//     uniformly, and the recombination identity is exact.
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_private_uniform_convergence() {
    criterion(11, "released losses are uniformly accurate", || {
        let class = class_zoo(ZooName::Thresholds, 7, 0, 0)
            .unwrap()
            .symmetrize();
        let eps = 0.5;
        let delta = 0.25;
        let m_points = 40_000usize;
        let cfg = PucConfig {
            m_points,
            kappa: 0.5,
            learner: LearnerSpec::new(1.0),
            overrides: SizeOverrides::all(),
        };
        let factory = RngFactory::new(111);
        let trials = 200u64;
        let hits: u64 = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = factory.trial(trial);
                // Planted population: random marginal, labels from a random
                // row with 10% flip noise.
                let marginal = random_distribution(class.points(), &mut rng);
                let truth = class.row(rng.gen_range(0..class.len())).clone();
                let flip = 0.1;
                // Sixteen times the per-call size guarantees enough points
                // on the majority-label side.
                let pairs: Vec<(usize, bool)> = (0..16 * m_points)
                    .map(|_| {
                        let x = measures::draw_sample(&marginal, 1, &mut rng).points()[0];
                        let y = truth.get(x) != (rng.gen::<f64>() < flip);
                        (x, y)
                    })
                    .collect();
                let sample = LabeledSample::new(pairs, class.points()).unwrap();
                let report =
                    private_uniform_convergence(&class, &sample, eps, delta, &cfg, &mut rng)
                        .unwrap();
                let worst = class
                    .rows()
                    .iter()
                    .enumerate()
                    .map(|(d, row)| {
                        let true_loss: f64 = (0..class.points())
                            .map(|x| {
                                let disagree = row.get(x) != truth.get(x);
                                let err = if disagree { 1.0 - flip } else { flip };
                                marginal.weight(x) * err
                            })
                            .sum();
                        (report.l_hat[d] - true_loss).abs()
                    })
                    .fold(0.0f64, f64::max);
                (worst <= eps) as u64
            })
            .sum();
        let rate = hits as f64 / trials as f64;
        let p = 1.0 - delta;
        let stderr = (p * (1.0 - p) / trials as f64).sqrt();
        let needed = p - 2.0 * stderr;
        if rate < needed {
            return Err(format!("uniform accuracy rate {rate:.4} below {needed:.4}"));
        }

        // Exact recombination on enumerated populations.
        for sigma_prob in [0.125f64, 0.5, 0.875] {
            for d_hit in [0.0f64, 0.25, 1.0] {
                let p_joint = sigma_prob * d_hit;
                let loss = d_hit + sigma_prob - 2.0 * p_joint;
                let combined = sdg::pipeline::combine_loss(
                    d_hit,
                    sigma_prob,
                    if sigma_prob > 0.0 {
                        p_joint / sigma_prob
                    } else {
                        0.0
                    },
                );
                if (combined - loss.clamp(0.0, 1.0)).abs() > 1e-12 {
                    return Err(format!("recombination drifted: {combined} vs {loss}"));
                }
            }
        }
        Ok(format!(
            "{hits}/{trials} trials uniformly within eps (needed {needed:.4}); identity exact"
        ))
    });
}

// ---------------------------------------------------------------------------
// 12. DP audit: the exponential-mechanism learner and the threshold test
//     stay under their declared budgets on adversarial neighbors.
// ---------------------------------------------------------------------------

#[test]
fn criterion_12_dp_audit() {
    criterion(12, "mechanisms pass the Monte-Carlo privacy audit", || {
        let trials = 100_000u64;
        // Exponential mechanism at alpha = 0.5 on neighbors engineered to
        // swing one error count.
        let class = ConceptClass::from_bitstrings(&["00", "11"]).unwrap();
        let alpha = 0.5;
        let left =
            LabeledSample::new(vec![(0, false), (1, false), (0, false), (1, false)], 2).unwrap();
        let right =
            LabeledSample::new(vec![(0, false), (1, false), (0, false), (1, true)], 2).unwrap();
        let mut rng = RngFactory::new(112).trial(0);
        let report = dp_audit(
            |s: &LabeledSample, r: &mut Prng| exp_mech_learner(&class, s, alpha, r).unwrap(),
            &left,
            &right,
            class.len(),
            trials,
            alpha,
            0.0,
            &mut rng,
        )
        .unwrap();
        if report.violation || report.max_lower_ci > alpha {
            return Err(format!(
                "exponential mechanism: lower CI {:.4} exceeds alpha {alpha}",
                report.max_lower_ci
            ));
        }
        let exp_ci = report.max_lower_ci;

        // Threshold test with n scalars and margin parameter n/2: declared
        // privacy n_margin / n = 0.5. Neighbors flip one scalar.
        let n = 100usize;
        let n_margin = 50usize;
        let declared = n_margin as f64 / n as f64;
        let mean_left = 0.5;
        let mean_right = 0.5 + 1.0 / n as f64;
        let mut rng = RngFactory::new(112).trial(1);
        let report = dp_audit(
            |mean: &f64, r: &mut Prng| match thresh_with_mean(*mean, n, 0.505, n_margin, r).unwrap()
            {
                ThreshOutcome::Top => 0usize,
                ThreshOutcome::Bottom => 1usize,
            },
            &mean_left,
            &mean_right,
            2,
            trials,
            declared,
            0.0,
            &mut rng,
        )
        .unwrap();
        if report.violation || report.max_lower_ci > declared {
            return Err(format!(
                "threshold test: lower CI {:.4} exceeds alpha {declared}",
                report.max_lower_ci
            ));
        }
        Ok(format!(
            "exp-mech CI {exp_ci:.4} <= 0.5; thresh CI {:.4} <= {declared}",
            report.max_lower_ci
        ))
    });
}
