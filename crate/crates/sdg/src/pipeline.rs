//! Private synthetic data end to end.
//!
//! The chain: a private discriminator ([`DpDiscriminator`]) turns the
//! sequential game into a differentially private fooling algorithm
//! ([`dp_fool`]); running that on a with-replacement subsample yields a
//! sanitizer ([`sanitize`]) releasing uniformly accurate frequency estimates
//! for every distinguisher; two sanitizer calls plus a noisy label counter
//! give private uniform convergence ([`private_uniform_convergence`]); and
//! minimizing the released loss estimates is a private proper agnostic
//! learner ([`pap_pac_from_puc`]).
//!
//! Proof-driven sample sizes are astronomical at desk scale, so every size
//! requirement is checked, reported, and individually overridable; outcomes
//! are then verified statistically rather than assumed from the constants.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concepts::{self, ConceptClass};
use crate::game::{
    self, Discriminator, DiscriminatorReply, FoolingGenerator, FoolingParams, GameError, Transcript,
};
use crate::measures::{self, Distribution, LabeledSample, MeasureError, Sample};
use crate::online::{mw_learner, LearnerError};
use crate::privacy::{
    exp_mech_learner, laplace_counter, laplace_counter_privacy, thresh_privacy, thresh_with_mean,
    LearnerSpec, PrivacyError, PrivacyLedger, ThreshOutcome,
};
use crate::rng::Prng;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("sample size checks failed:\n{0}")]
    SizeChecks(String),
    #[error("subsample must be at least one point and leave v > 2u, got |s| = {len}")]
    SampleTooSmall { len: usize },
    #[error("sanitizer input must have even size, got {len}")]
    OddSample { len: usize },
    #[error("needed {needed} points labelled {label} but the sample has {found}")]
    LabelImbalance {
        needed: usize,
        found: usize,
        label: bool,
    },
    #[error("discriminator subsample is empty: tau {tau} times {sample} points")]
    EmptySubsample { tau: f64, sample: usize },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Class(#[from] concepts::ClassError),
}

// ---------------------------------------------------------------------------
// Size checks
// ---------------------------------------------------------------------------

/// One named sample-size requirement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeCheck {
    pub name: String,
    pub required: usize,
    pub actual: usize,
    pub satisfied: bool,
    pub overridden: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SizeCheckReport {
    pub checks: Vec<SizeCheck>,
}

impl SizeCheckReport {
    fn push(&mut self, name: &str, required: usize, actual: usize, overridden: bool) {
        self.checks.push(SizeCheck {
            name: name.to_string(),
            required,
            actual,
            satisfied: actual >= required,
            overridden,
        });
    }

    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied || c.overridden)
    }

    fn failures(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.satisfied && !c.overridden)
            .map(|c| {
                format!(
                    "  {}: need {} points, have {}",
                    c.name, c.required, c.actual
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

// ---------------------------------------------------------------------------
// The private discriminator
// ---------------------------------------------------------------------------

/// Error, confidence, and subsampling-rate knobs of one discriminator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    pub eps: f64,
    pub delta: f64,
    /// Fraction of the sample consumed per invocation.
    pub tau: f64,
}

/// A discriminator whose view of the sample is differentially private.
///
/// Per reply it draws a labelled mixture sample (label 1 points from the
/// empirical target, label 0 points from the candidate), privately selects
/// the best distinguisher with the exponential mechanism, and puts the
/// decision to concede behind a noisy threshold test on the distinguisher's
/// empirical frequency. Per invocation the ledger gains one subsampled
/// learner entry and one threshold entry.
pub struct DpDiscriminator {
    class: ConceptClass,
    sample: Sample,
    p_s: Distribution,
    cfg: DiscriminatorConfig,
    learner: LearnerSpec,
    rng: Prng,
    ledger: PrivacyLedger,
    replies: usize,
}

impl DpDiscriminator {
    pub fn new(
        class: &ConceptClass,
        sample: &Sample,
        cfg: DiscriminatorConfig,
        learner: LearnerSpec,
        rng: Prng,
    ) -> Result<Self, PipelineError> {
        if !class.is_symmetric() {
            return Err(GameError::NotSymmetric.into());
        }
        let n_ell = (cfg.tau * sample.len() as f64).ceil() as usize;
        if n_ell == 0 || sample.is_empty() {
            return Err(PipelineError::EmptySubsample {
                tau: cfg.tau,
                sample: sample.len(),
            });
        }
        let p_s = measures::empirical(sample, class.points())?;
        Ok(DpDiscriminator {
            class: class.clone(),
            sample: sample.clone(),
            p_s,
            cfg,
            learner,
            rng,
            ledger: PrivacyLedger::new(),
            replies: 0,
        })
    }

    pub fn subsample_size(&self) -> usize {
        (self.cfg.tau * self.sample.len() as f64).ceil() as usize
    }

    pub fn empirical_target(&self) -> &Distribution {
        &self.p_s
    }

    pub fn ledger(&self) -> &PrivacyLedger {
        &self.ledger
    }

    pub fn replies(&self) -> usize {
        self.replies
    }

    /// Ledger cost of one invocation, for padding unexecuted round budgets.
    pub fn record_round_cost(
        ledger: &mut PrivacyLedger,
        learner: &LearnerSpec,
        n_ell: usize,
        sample_len: usize,
        note: &str,
    ) -> Result<(), PrivacyError> {
        ledger.record_amplified(
            format!("private learner on tau-subsample{note}"),
            learner.privacy(),
            n_ell,
            sample_len,
        )?;
        ledger.record_atomic(
            format!("threshold test{note}"),
            thresh_privacy(sample_len, n_ell),
        );
        Ok(())
    }
}

impl Discriminator for DpDiscriminator {
    fn reply(&mut self, candidate: &Distribution) -> Result<DiscriminatorReply, GameError> {
        let n_ell = self.subsample_size();
        // Draw the labelled sample: a fair label coin, then a point from the
        // side the label names. Label 1 is the empirical target, so low loss
        // means a large advantage over the candidate.
        let mut pairs = Vec::with_capacity(n_ell);
        for _ in 0..n_ell {
            let y: bool = self.rng.gen();
            let x = if y {
                self.sample.points()[self.rng.gen_range(0..self.sample.len())]
            } else {
                measures::draw_sample(candidate, 1, &mut self.rng).points()[0]
            };
            pairs.push((x, y));
        }
        let labelled = LabeledSample::new(pairs, self.class.points()).map_err(|e| {
            GameError::ProtocolViolation {
                round: self.replies + 1,
                detail: format!("internal sample construction: {e}"),
            }
        })?;

        let d_t = exp_mech_learner(&self.class, &labelled, self.learner.alpha, &mut self.rng)
            .map_err(|e| GameError::ProtocolViolation {
                round: self.replies + 1,
                detail: format!("private selection failed: {e}"),
            })?;
        DpDiscriminator::record_round_cost(
            &mut self.ledger,
            &self.learner,
            n_ell,
            self.sample.len(),
            "",
        )
        .map_err(|e| GameError::ProtocolViolation {
            round: self.replies + 1,
            detail: format!("ledger entry rejected: {e}"),
        })?;

        // Noisy check that the chosen distinguisher really separates the
        // sample from the candidate. The tested scalars are the row's values
        // over the sample; their mean comes off the histogram.
        let row = self.class.row(d_t);
        let mean = measures::expect(&self.p_s, row).map_err(GameError::Measure)?;
        let threshold = measures::expect(candidate, row).map_err(GameError::Measure)?
            + 5.0 * self.cfg.eps / 8.0;
        let z = thresh_with_mean(mean, self.sample.len(), threshold, n_ell, &mut self.rng)
            .map_err(|e| GameError::ProtocolViolation {
                round: self.replies + 1,
                detail: format!("threshold mechanism failed: {e}"),
            })?;
        self.replies += 1;
        Ok(match z {
            ThreshOutcome::Top => DiscriminatorReply::Distinguisher(d_t),
            ThreshOutcome::Bottom => DiscriminatorReply::Win,
        })
    }
}

/// Exact loss of a distinguisher under the label-balanced mixture the
/// discriminator samples from: half the mass misses the target side, half
/// hits the candidate side.
pub fn mixture_loss(p_s_of_d: f64, p_t_of_d: f64) -> f64 {
    (1.0 + p_t_of_d - p_s_of_d) / 2.0
}

// ---------------------------------------------------------------------------
// DP fooling
// ---------------------------------------------------------------------------

/// Which size requirements a run may proceed without.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeOverrides {
    pub uniform_convergence: bool,
    pub discriminator_sample: bool,
    pub threshold_margin: bool,
    pub round_budget: bool,
}

impl SizeOverrides {
    /// Desk-scale runs: proceed past every proof-driven constant.
    pub fn all() -> Self {
        SizeOverrides {
            uniform_convergence: true,
            discriminator_sample: true,
            threshold_margin: true,
            round_budget: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub eps0: f64,
    pub delta0: f64,
    pub kappa: f64,
    pub learner: LearnerSpec,
    pub overrides: SizeOverrides,
}

impl PipelineConfig {
    pub fn new(eps0: f64, delta0: f64, kappa: f64, learner: LearnerSpec) -> Self {
        PipelineConfig {
            eps0,
            delta0,
            kappa,
            learner,
            overrides: SizeOverrides::default(),
        }
    }

    pub fn with_overrides(mut self, overrides: SizeOverrides) -> Self {
        self.overrides = overrides;
        self
    }
}

/// Round budget and subsampling rate induced by a sample size:
/// `t0 = min(floor(|S|^kappa), budget(eps0/4))`, floored at 3 so each
/// round's subsample keeps the amplification precondition `v > 2u` strict.
pub fn round_budget_for(cfg: &PipelineConfig, sample_len: usize, dual_ldim: usize) -> usize {
    let by_sample = (sample_len as f64).powf(cfg.kappa).floor() as usize;
    let by_game = FoolingParams::round_budget(cfg.eps0 / 4.0, dual_ldim);
    by_sample.min(by_game).max(3)
}

/// Everything a fooling run produces.
#[derive(Debug)]
pub struct DpFoolOutcome {
    pub p_syn: Distribution,
    pub transcript: Transcript,
    pub ledger: PrivacyLedger,
    pub size_report: SizeCheckReport,
    pub t0: usize,
    pub tau0: f64,
    /// IPM between the output and the empirical distribution of the input.
    pub ipm_to_sample: f64,
}

/// Run the sequential game privately against the input sample and output the
/// generator's final distribution.
///
/// The error budget halves twice: the generator plays at `eps0/2`, and the
/// discriminator's utility gives per-round advantage `eps0/4`. The ledger
/// carries the full round budget regardless of early wins; the composed
/// total is what the run's worst case spends.
pub fn dp_fool(
    class: &ConceptClass,
    sample: &Sample,
    cfg: &PipelineConfig,
    rng: &mut Prng,
) -> Result<DpFoolOutcome, PipelineError> {
    if !class.is_symmetric() {
        return Err(GameError::NotSymmetric.into());
    }
    let dual_ldim = concepts::dual_littlestone_dimension(class)?;
    let t0 = round_budget_for(cfg, sample.len(), dual_ldim);
    let tau0 = 1.0 / t0 as f64;
    let eps_d = cfg.eps0 / 2.0;
    let delta_d = cfg.delta0 / 2.0;

    let mut report = SizeCheckReport::default();
    let vc = concepts::vc_dimension(class)?;
    report.push(
        "uniform convergence of the empirical sample",
        measures::m_emp_bound(cfg.eps0 / 2.0, cfg.delta0 / 2.0, vc)?,
        sample.len(),
        cfg.overrides.uniform_convergence,
    );
    let learner_m = cfg
        .learner
        .sample_complexity(class.len(), eps_d / 8.0, tau0 * delta_d / 2.0);
    report.push(
        "discriminator learner subsample",
        (learner_m as f64 / tau0).ceil() as usize,
        sample.len(),
        cfg.overrides.discriminator_sample,
    );
    let gamma = tau0 * delta_d / 2.0;
    report.push(
        "threshold margin",
        (64.0 * (1.0 / gamma).ln() / (eps_d * tau0)).ceil() as usize,
        sample.len(),
        cfg.overrides.threshold_margin,
    );
    let game_budget = FoolingParams::round_budget(cfg.eps0 / 4.0, dual_ldim);
    report.push(
        "round budget covers the full game",
        (game_budget as f64).powf(1.0 / cfg.kappa).ceil() as usize,
        sample.len(),
        cfg.overrides.round_budget,
    );
    if !report.ok() {
        return Err(PipelineError::SizeChecks(report.failures()));
    }

    let params = FoolingParams::new(eps_d, dual_ldim).map(|p| FoolingParams {
        eps: p.eps,
        horizon: t0,
    })?;
    let learner = mw_learner(class, t0)?;
    let mut generator = FoolingGenerator::new(class, &params, learner)?;
    let mut discriminator = DpDiscriminator::new(
        class,
        sample,
        DiscriminatorConfig {
            eps: eps_d,
            delta: delta_d,
            tau: tau0,
        },
        cfg.learner,
        rng.clone(),
    )?;
    let p_s = discriminator.empirical_target().clone();
    let n_ell = discriminator.subsample_size();

    let transcript = game::play_game(
        class,
        &mut generator,
        &mut discriminator,
        t0,
        eps_d,
        Some(&p_s),
        false,
    )?;

    let mut ledger = discriminator.ledger().clone();
    for _ in transcript.rounds_played()..t0 {
        DpDiscriminator::record_round_cost(
            &mut ledger,
            &cfg.learner,
            n_ell,
            sample.len(),
            " (budgeted, round not played)",
        )?;
    }

    let p_syn = generator.last_candidate().clone();
    let ipm_to_sample = measures::ipm(class, &p_s, &p_syn)?.value;
    Ok(DpFoolOutcome {
        p_syn,
        transcript,
        ledger,
        size_report: report,
        t0,
        tau0,
        ipm_to_sample,
    })
}

/// Smallest sample size passing every (non-overridden) check of [`dp_fool`].
pub fn dp_fool_required_size(
    class: &ConceptClass,
    cfg: &PipelineConfig,
) -> Result<usize, PipelineError> {
    let dual_ldim = concepts::dual_littlestone_dimension(class)?;
    let vc = concepts::vc_dimension(class)?;
    let eps_d = cfg.eps0 / 2.0;
    let delta_d = cfg.delta0 / 2.0;
    let passes = |n: usize| -> bool {
        let t0 = round_budget_for(cfg, n, dual_ldim);
        let tau0 = 1.0 / t0 as f64;
        let uc = measures::m_emp_bound(cfg.eps0 / 2.0, cfg.delta0 / 2.0, vc).unwrap_or(usize::MAX);
        let lm = cfg
            .learner
            .sample_complexity(class.len(), eps_d / 8.0, tau0 * delta_d / 2.0);
        let gamma = tau0 * delta_d / 2.0;
        let margin = (64.0 * (1.0 / gamma).ln() / (eps_d * tau0)).ceil() as usize;
        let budget = FoolingParams::round_budget(cfg.eps0 / 4.0, dual_ldim);
        n >= uc
            && n >= (lm as f64 / tau0).ceil() as usize
            && n >= margin
            && (n as f64).powf(cfg.kappa) >= budget as f64
    };
    let mut hi = 16usize;
    while !passes(hi) {
        hi = hi.saturating_mul(2);
        if hi > 1 << 40 {
            return Err(PipelineError::SizeChecks(
                "no feasible sample size below 2^40".into(),
            ));
        }
    }
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

// ---------------------------------------------------------------------------
// Sanitization
// ---------------------------------------------------------------------------

/// Frequency estimates for every distinguisher, backed by a synthetic
/// distribution so the estimates are exactly linear.
#[derive(Debug)]
pub struct SanitizerOutput {
    /// `est[d] = expectation of row d under p_syn`, exactly.
    pub est: Vec<f64>,
    pub p_syn: Distribution,
    pub ledger: PrivacyLedger,
    pub size_report: SizeCheckReport,
    pub inner_ipm_to_subsample: f64,
}

impl SanitizerOutput {
    /// Worst absolute deviation from the empirical frequencies of `sample`.
    pub fn max_error_on(
        &self,
        class: &ConceptClass,
        sample: &Sample,
    ) -> Result<f64, PipelineError> {
        let p = measures::empirical(sample, class.points())?;
        let mut worst = 0.0f64;
        for (d, row) in class.rows().iter().enumerate() {
            worst = worst.max((self.est[d] - measures::expect(&p, row)?).abs());
        }
        Ok(worst)
    }
}

/// Run the fooling algorithm on a with-replacement subsample of half the
/// input (less one point, keeping the amplification precondition strict) and
/// release the synthetic frequencies of every distinguisher.
pub fn sanitize(
    class: &ConceptClass,
    sample: &Sample,
    cfg: &PipelineConfig,
    rng: &mut Prng,
) -> Result<SanitizerOutput, PipelineError> {
    if !sample.len().is_multiple_of(2) {
        return Err(PipelineError::OddSample { len: sample.len() });
    }
    if sample.len() < 4 {
        return Err(PipelineError::SampleTooSmall { len: sample.len() });
    }
    let u = sample.len() / 2 - 1;
    let v = sample.len();

    let sub_points: Vec<usize> = (0..u)
        .map(|_| sample.points()[rng.gen_range(0..v)])
        .collect();
    let sub = Sample::new(sub_points, class.points())?;
    let inner = dp_fool(class, &sub, cfg, rng)?;

    // The whole inner run happened on the subsample, so each of its entries
    // amplifies; the entry list keeps the provenance for re-derivation.
    let mut ledger = PrivacyLedger::new();
    for entry in inner.ledger.entries() {
        ledger.record_amplified(
            format!("subsampled: {}", entry.tag),
            entry.contribution()?,
            u,
            v,
        )?;
    }

    let est: Vec<f64> = class
        .rows()
        .iter()
        .map(|row| measures::expect(&inner.p_syn, row))
        .collect::<Result<_, _>>()?;
    Ok(SanitizerOutput {
        est,
        p_syn: inner.p_syn,
        ledger,
        size_report: inner.size_report,
        inner_ipm_to_subsample: inner.ipm_to_sample,
    })
}

// ---------------------------------------------------------------------------
// Private uniform convergence and the learner on top of it
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PucConfig {
    /// Points fed to each sanitizer call.
    pub m_points: usize,
    pub kappa: f64,
    pub learner: LearnerSpec,
    pub overrides: SizeOverrides,
}

/// Released loss estimates for every distinguisher.
#[derive(Debug)]
pub struct PucReport {
    /// The majority label the pipeline oriented itself around.
    pub sigma: bool,
    /// Noisy estimate of the probability of that label.
    pub p_sigma: f64,
    /// Estimates of `P(d(x) = sigma)` per distinguisher.
    pub est: Vec<f64>,
    /// Estimates of `P(d(x) = sigma | y = sigma)` per distinguisher.
    pub est_sigma: Vec<f64>,
    /// Released loss estimates, clamped to `[0,1]`.
    pub l_hat: Vec<f64>,
    pub ledger: PrivacyLedger,
    pub size_report: SizeCheckReport,
}

/// The label-marginal threshold deciding which label the estimates orient
/// around.
pub const SIGMA_THRESHOLD: f64 = 1.0 / 8.0;

/// Loss recombination: `P(d != y) = P(d = s) + P(y = s) - 2 P(y = s) P(d = s | y = s)`.
pub fn combine_loss(est: f64, p_sigma: f64, est_sigma: f64) -> f64 {
    (est + p_sigma - 2.0 * p_sigma * est_sigma).clamp(0.0, 1.0)
}

/// Release uniformly accurate private estimates of every distinguisher's
/// population loss.
///
/// One sanitizer call estimates the unconditional hit rate `P(d(x) = sigma)`
/// on the unlabeled prefix, a noisy counter estimates the label marginal,
/// a second sanitizer call estimates the conditional hit rate on points
/// carrying the majority label, and the three recombine exactly through
/// [`combine_loss`].
pub fn private_uniform_convergence(
    class: &ConceptClass,
    sample: &LabeledSample,
    eps: f64,
    delta: f64,
    cfg: &PucConfig,
    rng: &mut Prng,
) -> Result<PucReport, PipelineError> {
    let inner_cfg = PipelineConfig {
        eps0: eps / 18.0,
        delta0: delta / 6.0,
        kappa: cfg.kappa,
        learner: cfg.learner,
        overrides: cfg.overrides,
    };

    let mut report = SizeCheckReport::default();
    // Requirements past the search cap report as unsatisfiable rather than
    // aborting; overrides still apply.
    let required = puc_required_size(class, eps, delta, &inner_cfg).unwrap_or(usize::MAX);
    report.push(
        "labelled sample covers both sanitizer calls",
        required,
        sample.len(),
        cfg.overrides.uniform_convergence,
    );
    report.push(
        "sanitizer input per call",
        cfg.m_points,
        sample.len() / 2,
        cfg.overrides.discriminator_sample,
    );
    if !report.ok() {
        return Err(PipelineError::SizeChecks(report.failures()));
    }

    // Unconditional estimates from the unlabeled prefix.
    let m1 = cfg.m_points.min(sample.len());
    let prefix: Vec<usize> = sample.pairs()[..m1].iter().map(|&(x, _)| x).collect();
    let san1 = sanitize(
        class,
        &Sample::new(prefix, class.points())?,
        &inner_cfg,
        rng,
    )?;

    // Noisy label marginal over the full sample.
    let p = laplace_counter(sample, rng)?;
    let mut ledger = san1.ledger.clone();
    ledger.record_atomic("noisy label counter", laplace_counter_privacy(sample.len()));

    let sigma = p >= SIGMA_THRESHOLD;
    let p_sigma = if sigma { p } else { 1.0 - p }.clamp(0.0, 1.0);
    // san1 estimates P(d = 1); orient it to P(d = sigma).
    let est: Vec<f64> = if sigma {
        san1.est.clone()
    } else {
        san1.est.iter().map(|e| 1.0 - e).collect()
    };

    // Conditional estimates from the first points carrying the label sigma.
    let mut sigma_points = Vec::with_capacity(cfg.m_points);
    for &(x, y) in sample.pairs() {
        if y == sigma {
            sigma_points.push(x);
            if sigma_points.len() == cfg.m_points {
                break;
            }
        }
    }
    if sigma_points.len() < cfg.m_points {
        return Err(PipelineError::LabelImbalance {
            needed: cfg.m_points,
            found: sigma_points.len(),
            label: sigma,
        });
    }
    let san2 = sanitize(
        class,
        &Sample::new(sigma_points, class.points())?,
        &inner_cfg,
        rng,
    )?;
    ledger.extend(&san2.ledger);
    let est_sigma: Vec<f64> = if sigma {
        san2.est.clone()
    } else {
        san2.est.iter().map(|e| 1.0 - e).collect()
    };

    let l_hat: Vec<f64> = est
        .iter()
        .zip(&est_sigma)
        .map(|(&e, &es)| combine_loss(e, p_sigma, es))
        .collect();

    Ok(PucReport {
        sigma,
        p_sigma,
        est,
        est_sigma,
        l_hat,
        ledger,
        size_report: report,
    })
}

/// The sample size the full pipeline asks for before overrides:
/// sixteen times the larger of the sanitizer requirement and plain uniform
/// convergence at the inner parameters.
pub fn puc_required_size(
    class: &ConceptClass,
    eps: f64,
    delta: f64,
    inner_cfg: &PipelineConfig,
) -> Result<usize, PipelineError> {
    let san = 2 * (dp_fool_required_size(class, inner_cfg)? + 1);
    let vc = concepts::vc_dimension(class)?;
    let uc = measures::m_emp_bound(eps / 18.0, delta / 6.0, vc)?;
    Ok(16 * san.max(uc))
}

/// Private proper agnostic learning by post-processing: pick any
/// distinguisher minimizing the released loss estimate, lowest index first.
pub fn pap_pac_from_puc(
    class: &ConceptClass,
    sample: &LabeledSample,
    eps: f64,
    delta: f64,
    cfg: &PucConfig,
    rng: &mut Prng,
) -> Result<(usize, PucReport), PipelineError> {
    let mut report = private_uniform_convergence(class, sample, eps, delta, cfg, rng)?;
    let best = report
        .l_hat
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.total_cmp(b))
        .map(|(i, _)| i)
        .expect("class is nonempty");
    report
        .ledger
        .record_post_processed("argmin over released loss estimates");
    Ok((best, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{class_zoo, ZooName};
    use crate::rng::RngFactory;

    fn singletons_sym(n: usize) -> ConceptClass {
        class_zoo(ZooName::Singletons, n, 0, 0)
            .unwrap()
            .symmetrize()
    }

    fn thresholds_sym(n: usize) -> ConceptClass {
        class_zoo(ZooName::Thresholds, n, 0, 0)
            .unwrap()
            .symmetrize()
    }

    fn desk_config() -> PipelineConfig {
        PipelineConfig::new(0.4, 0.2, 0.5, LearnerSpec::new(1.0))
            .with_overrides(SizeOverrides::all())
    }

    #[test]
    fn mixture_loss_identity() {
        // The discriminator's labelled mixture makes every distinguisher's
        // loss an exact affine function of its advantage. Enumerate the
        // mixture directly and compare.
        let class = singletons_sym(3);
        let p_s = Distribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        let p_t = Distribution::new(vec![0.1, 0.2, 0.7]).unwrap();
        for row in class.rows() {
            let p_s_d = measures::expect(&p_s, row).unwrap();
            let p_t_d = measures::expect(&p_t, row).unwrap();
            // Exact loss: label-1 mass where d = 0, label-0 mass where d = 1.
            let direct = 0.5 * (1.0 - p_s_d) + 0.5 * p_t_d;
            assert!((mixture_loss(p_s_d, p_t_d) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn discriminator_wins_on_matching_distributions() {
        let class = singletons_sym(4);
        let factory = RngFactory::new(60);
        let target = Distribution::new(vec![0.3, 0.3, 0.2, 0.2]).unwrap();
        let mut wins = 0;
        let trials = 30;
        for t in 0..trials {
            let mut rng = factory.trial(t);
            let sample = measures::draw_sample(&target, 4000, &mut rng);
            let disc_rng = factory.stream(t, 1);
            let mut disc = DpDiscriminator::new(
                &class,
                &sample,
                DiscriminatorConfig {
                    eps: 0.4,
                    delta: 0.2,
                    tau: 0.05,
                },
                LearnerSpec::new(1.0),
                disc_rng,
            )
            .unwrap();
            let p_t = disc.empirical_target().clone();
            if disc.reply(&p_t).unwrap() == DiscriminatorReply::Win {
                wins += 1;
            }
        }
        assert!(wins >= trials - 2, "wins {wins}/{trials}");
    }

    #[test]
    fn discriminator_finds_disjoint_support_gap() {
        let class = singletons_sym(4);
        let factory = RngFactory::new(61);
        let eps = 0.4;
        let mut good = 0;
        let trials = 30;
        for t in 0..trials {
            let mut rng = factory.trial(t);
            let target = Distribution::dirac(4, 0).unwrap();
            let sample = measures::draw_sample(&target, 4000, &mut rng);
            let p_t = Distribution::dirac(4, 1).unwrap();
            let mut disc = DpDiscriminator::new(
                &class,
                &sample,
                DiscriminatorConfig {
                    eps,
                    delta: 0.2,
                    tau: 0.05,
                },
                LearnerSpec::new(1.0),
                factory.stream(t, 1),
            )
            .unwrap();
            if let DiscriminatorReply::Distinguisher(d) = disc.reply(&p_t).unwrap() {
                let p_s = disc.empirical_target();
                let advantage = measures::expect(p_s, class.row(d)).unwrap()
                    - measures::expect(&p_t, class.row(d)).unwrap();
                if advantage >= eps / 2.0 {
                    good += 1;
                }
            }
            // Ledger shape: two entries per reply.
            assert_eq!(disc.ledger().entries().len(), 2);
        }
        assert!(good >= trials - 2, "good {good}/{trials}");
    }

    #[test]
    fn dp_fool_trivial_class_wins_immediately() {
        // The two constants have identical expectations under every
        // distribution, so the first candidate already fools them.
        let class = ConceptClass::from_bitstrings(&["000", "111"]).unwrap();
        assert!(class.is_symmetric());
        let mut rng = RngFactory::new(62).trial(0);
        let sample = measures::draw_sample(&Distribution::uniform(3).unwrap(), 512, &mut rng);
        let out = dp_fool(&class, &sample, &desk_config(), &mut rng).unwrap();
        assert!(out.transcript.won());
        assert_eq!(out.transcript.rounds_played(), 1);
        assert_eq!(out.ipm_to_sample, 0.0);
        // Budgeted rounds stay on the ledger even though the game stopped.
        assert_eq!(out.ledger.entries().len(), 2 * out.t0);
    }

    #[test]
    fn dp_fool_ledger_matches_closed_form() {
        let class = thresholds_sym(7);
        let mut rng = RngFactory::new(63).trial(0);
        let target = Distribution::uniform(7).unwrap();
        // Sample size divisible by the round budget keeps tau0 exact.
        let sample = measures::draw_sample(&target, 2500, &mut rng);
        let out = dp_fool(&class, &sample, &desk_config(), &mut rng).unwrap();
        assert_eq!(out.t0, 50);
        let total = out.ledger.total().unwrap();
        let n_ell = (out.tau0 * 2500.0).ceil();
        let tau_real = n_ell / 2500.0;
        let per_round = 6.0 * 1.0 * n_ell / 2500.0 + tau_real;
        assert!(
            (total.alpha - out.t0 as f64 * per_round).abs() < 1e-12,
            "ledger alpha {} vs closed form {}",
            total.alpha,
            out.t0 as f64 * per_round
        );
        assert_eq!(total.beta, 0.0);
    }

    #[test]
    fn dp_fool_desk_scale_accuracy_smoke() {
        let class = thresholds_sym(7);
        let cfg = desk_config();
        let factory = RngFactory::new(64);
        let mut hits = 0;
        let trials = 20;
        for t in 0..trials {
            let mut rng = factory.trial(t);
            let target = Distribution::new(vec![2.0, 1.0, 3.0, 1.0, 2.0, 3.0, 2.0]).unwrap();
            let sample = measures::draw_sample(&target, 22_500, &mut rng);
            let out = dp_fool(&class, &sample, &cfg, &mut rng).unwrap();
            if out.ipm_to_sample <= cfg.eps0 / 2.0 {
                hits += 1;
            }
        }
        assert!(
            hits >= (trials as f64 * 0.8) as usize,
            "hits {hits}/{trials}"
        );
    }

    #[test]
    fn dp_fool_size_checks_gate_unless_overridden() {
        let class = thresholds_sym(7);
        let mut rng = RngFactory::new(65).trial(0);
        let sample = measures::draw_sample(&Distribution::uniform(7).unwrap(), 300, &mut rng);
        let strict = PipelineConfig::new(0.4, 0.2, 0.5, LearnerSpec::new(1.0));
        match dp_fool(&class, &sample, &strict, &mut rng) {
            Err(PipelineError::SizeChecks(msg)) => {
                assert!(msg.contains("need"));
            }
            other => panic!("expected a size-check failure, got {other:?}"),
        }
        assert!(dp_fool(&class, &sample, &desk_config(), &mut rng).is_ok());
    }

    #[test]
    fn required_size_is_a_fixed_point() {
        let class = singletons_sym(3);
        let cfg = PipelineConfig::new(0.5, 0.3, 0.5, LearnerSpec::new(1.0));
        let n = dp_fool_required_size(&class, &cfg).unwrap();
        // Feasible at n, infeasible just below.
        let mut rng = RngFactory::new(66).trial(0);
        let sample = measures::draw_sample(&Distribution::uniform(3).unwrap(), n, &mut rng);
        assert!(dp_fool(&class, &sample, &cfg, &mut rng).is_ok());
        let short = Sample::new(sample.points()[..n - 1].to_vec(), 3).unwrap();
        assert!(matches!(
            dp_fool(&class, &short, &cfg, &mut rng),
            Err(PipelineError::SizeChecks(_))
        ));
    }

    #[test]
    fn sanitize_estimates_are_exactly_linear() {
        let class = singletons_sym(4);
        let mut rng = RngFactory::new(67).trial(0);
        let target = Distribution::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let sample = measures::draw_sample(&target, 5000, &mut rng);
        let out = sanitize(&class, &sample, &desk_config(), &mut rng).unwrap();
        for (d, row) in class.rows().iter().enumerate() {
            // Same dot product two ways: weights-with-bits vs per-point sum.
            let by_points: f64 = out
                .p_syn
                .weights()
                .iter()
                .enumerate()
                .map(|(x, w)| w * row.get(x) as u8 as f64)
                .sum();
            assert!((out.est[d] - by_points).abs() < 1e-12);
        }
        assert!(out.ledger.total().is_ok());
    }

    #[test]
    fn sanitize_rejects_bad_shapes() {
        let class = singletons_sym(2);
        let mut rng = RngFactory::new(68).trial(0);
        let odd = Sample::new(vec![0, 1, 0], 2).unwrap();
        assert!(matches!(
            sanitize(&class, &odd, &desk_config(), &mut rng),
            Err(PipelineError::OddSample { .. })
        ));
        let tiny = Sample::new(vec![0, 1], 2).unwrap();
        assert!(matches!(
            sanitize(&class, &tiny, &desk_config(), &mut rng),
            Err(PipelineError::SampleTooSmall { .. })
        ));
    }

    #[test]
    fn sanitize_desk_scale_accuracy_smoke() {
        let class = singletons_sym(4);
        let factory = RngFactory::new(69);
        let mut ok = 0;
        let trials = 10;
        for t in 0..trials {
            let mut rng = factory.trial(t);
            let target = Distribution::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
            let sample = measures::draw_sample(&target, 30_000, &mut rng);
            let out = sanitize(&class, &sample, &desk_config(), &mut rng).unwrap();
            if out.max_error_on(&class, &sample).unwrap() <= 0.25 {
                ok += 1;
            }
        }
        assert!(ok >= trials - 1, "ok {ok}/{trials}");
    }

    #[test]
    fn combination_identity_is_exact() {
        // Enumerate a few joint distributions over (point, label) on a tiny
        // domain and check the recombination identity with exact conditional
        // quantities, both orientations.
        let class = singletons_sym(2);
        let joints: Vec<Vec<f64>> = vec![
            // P(x=0,y=0), P(x=0,y=1), P(x=1,y=0), P(x=1,y=1)
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.5, 0.125, 0.25, 0.125],
            vec![0.0, 0.5, 0.5, 0.0],
            vec![0.7, 0.1, 0.1, 0.1],
        ];
        for joint in joints {
            for row in class.rows() {
                for sigma in [false, true] {
                    let p_y: f64 = joint[1] * (sigma as u8 as f64)
                        + joint[3] * (sigma as u8 as f64)
                        + (joint[0] + joint[2]) * (!sigma as u8 as f64);
                    if p_y == 0.0 {
                        continue;
                    }
                    let p_d_sigma: f64 = (0..2)
                        .map(|x| {
                            let mass = joint[2 * x] + joint[2 * x + 1];
                            mass * ((row.get(x) == sigma) as u8 as f64)
                        })
                        .sum();
                    let p_joint: f64 = (0..2)
                        .map(|x| {
                            let mass = if sigma {
                                joint[2 * x + 1]
                            } else {
                                joint[2 * x]
                            };
                            mass * ((row.get(x) == sigma) as u8 as f64)
                        })
                        .sum();
                    let p_cond = p_joint / p_y;
                    let loss_direct: f64 = (0..2)
                        .map(|x| {
                            if row.get(x) {
                                joint[2 * x]
                            } else {
                                joint[2 * x + 1]
                            }
                        })
                        .sum();
                    let combined = p_d_sigma + p_y - 2.0 * p_y * p_cond;
                    assert!(
                        (combined - loss_direct).abs() < 1e-12,
                        "sigma {sigma}: combined {combined} vs direct {loss_direct}"
                    );
                }
            }
        }
    }

    fn desk_puc_config() -> PucConfig {
        PucConfig {
            m_points: 10_000,
            kappa: 0.5,
            learner: LearnerSpec::new(1.0),
            overrides: SizeOverrides::all(),
        }
    }

    #[test]
    fn puc_degenerate_all_zero_labels() {
        let class = singletons_sym(3);
        let mut rng = RngFactory::new(70).trial(0);
        let pairs: Vec<(usize, bool)> = (0..24_000).map(|i| (i % 3, false)).collect();
        let sample = LabeledSample::new(pairs, 3).unwrap();
        let report =
            private_uniform_convergence(&class, &sample, 0.4, 0.3, &desk_puc_config(), &mut rng)
                .unwrap();
        // The all-zeros hypothesis is its complement-closed row "000"? Not
        // in this class; check instead that the released losses track the
        // true ones: row 1_x has loss P(x), complement has 1 - P(x).
        for (d, row) in class.rows().iter().enumerate() {
            let true_loss = (0..3)
                .map(|x| (1.0 / 3.0) * (row.get(x) as u8 as f64))
                .sum::<f64>();
            assert!(
                (report.l_hat[d] - true_loss).abs() <= 0.4,
                "row {d}: l_hat {} vs true {true_loss}",
                report.l_hat[d]
            );
        }
        // Recombination invariant holds on the released vectors.
        for d in 0..class.len() {
            let re = combine_loss(report.est[d], report.p_sigma, report.est_sigma[d]);
            assert_eq!(re, report.l_hat[d]);
        }
    }

    #[test]
    fn puc_label_imbalance_error() {
        let class = singletons_sym(2);
        let mut rng = RngFactory::new(71).trial(0);
        // Only 3 label-1 points; sigma resolves to 1 only if the noisy count
        // crosses 1/8, which it cannot here, so sigma = 0 and there are
        // plenty of points. Force the imbalance the other way instead: all
        // ones, so sigma = 1, and demand more points than exist.
        let pairs: Vec<(usize, bool)> = (0..100).map(|i| (i % 2, true)).collect();
        let sample = LabeledSample::new(pairs, 2).unwrap();
        let cfg = PucConfig {
            m_points: 200,
            ..desk_puc_config()
        };
        match private_uniform_convergence(&class, &sample, 0.5, 0.3, &cfg, &mut rng) {
            Err(PipelineError::LabelImbalance { needed, found, .. }) => {
                assert_eq!(needed, 200);
                assert_eq!(found, 100);
            }
            other => panic!("expected label imbalance, got {other:?}"),
        }
    }

    #[test]
    fn pap_pac_returns_low_loss_hypothesis() {
        let class = thresholds_sym(7);
        let mut rng = RngFactory::new(72).trial(0);
        // Plant: x uniform, labels from a fixed threshold row.
        let truth = class.row(3).clone();
        let pairs: Vec<(usize, bool)> = {
            use rand::Rng;
            (0..40_000)
                .map(|_| {
                    let x = rng.gen_range(0..7);
                    (x, truth.get(x))
                })
                .collect()
        };
        let sample = LabeledSample::new(pairs, 7).unwrap();
        let (best, report) =
            pap_pac_from_puc(&class, &sample, 0.5, 0.3, &desk_puc_config(), &mut rng).unwrap();
        // Realizable data: the chosen hypothesis has small true loss.
        let true_loss: f64 = (0..7)
            .map(|x| (1.0 / 7.0) * ((class.row(best).get(x) != truth.get(x)) as u8 as f64))
            .sum();
        assert!(true_loss <= 2.0 * 0.5, "true loss {true_loss}");
        assert!(report
            .ledger
            .entries()
            .iter()
            .any(|e| matches!(e.derivation, crate::privacy::Derivation::PostProcessed)));
    }
}
