//! No-regret online learners over the dual class.
//!
//! Examples arrive as finitely supported mixtures of distinguishers with a
//! bit label; a learner answers each round with a `[0,1]`-valued predictor
//! over the distinguisher rows, extended linearly to mixtures. Two engines
//! share the interface:
//!
//! * [`MwLearner`]: exponentially weighted averaging with one expert per
//!   domain point. Its predictor is always an exact expectation under an
//!   exposed domain mixture, which the sequential game exploits directly.
//!   Regret scales with `sqrt(T ln |X| / 2)`.
//! * [`AgnosticSoaLearner`]: the mistake-bound-faithful engine. Experts are
//!   flip schedules over the horizon laid on top of the standard optimal
//!   algorithm for the dual class; regret scales with
//!   `sqrt(l* T log T / 2)` where `l*` is the dual Littlestone dimension.
//!
//! The agnostic engine never materializes its expert set. Experts sharing a
//! realized history split into groups keyed by (surviving dual subclass,
//! flips spent); all experts in a group behave identically forever, so one
//! weight per group reproduces the full exponential-weights aggregate
//! exactly, with future flip schedules counted by binomials. Mixture
//! examples branch the realized history; each branch keeps its own group
//! table and the predictor is the exact probability-weighted mixture.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concepts::ConceptClass;
use crate::measures::Distribution;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("support must be nonempty")]
    EmptySupport,
    #[error("support weights must be nonnegative and sum to 1, got total {total}")]
    BadSupport { total: f64 },
    #[error("support index {index} out of range for {len} distinguishers")]
    SupportOutOfRange { index: usize, len: usize },
    #[error("predictor value {value} at {index} outside [0,1]")]
    PredictorRange { index: usize, value: f64 },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("horizon of {horizon} rounds exhausted")]
    HorizonExhausted { horizon: usize },
    #[error("expert set of size {count} exceeds the cap {cap}; use the multiplicative-weights engine instead")]
    ExpertCapExceeded { count: u128, cap: u128 },
    #[error("sample-path branching exceeded the cap {cap}")]
    PathCapExceeded { cap: usize },
    #[error("dual class has {len} distinct hypotheses, above the {max} supported")]
    DualTooWide { len: usize, max: usize },
    #[error("empty class")]
    EmptyClass,
}

const SUPPORT_TOL: f64 = 1e-9;

/// A labelled example: a finitely supported mixture over distinguisher rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistExample {
    support: Vec<(usize, f64)>,
    label: bool,
}

impl DistExample {
    pub fn new(
        support: Vec<(usize, f64)>,
        label: bool,
        class_len: usize,
    ) -> Result<Self, LearnerError> {
        if support.is_empty() {
            return Err(LearnerError::EmptySupport);
        }
        let mut total = 0.0;
        for &(index, w) in &support {
            if index >= class_len {
                return Err(LearnerError::SupportOutOfRange {
                    index,
                    len: class_len,
                });
            }
            if w.is_nan() || w < 0.0 {
                return Err(LearnerError::BadSupport { total: w });
            }
            total += w;
        }
        if (total - 1.0).abs() > SUPPORT_TOL {
            return Err(LearnerError::BadSupport { total });
        }
        let support = support.into_iter().map(|(i, w)| (i, w / total)).collect();
        Ok(DistExample { support, label })
    }

    /// Point mass on one distinguisher.
    pub fn dirac(index: usize, label: bool, class_len: usize) -> Result<Self, LearnerError> {
        DistExample::new(vec![(index, 1.0)], label, class_len)
    }

    pub fn support(&self) -> &[(usize, f64)] {
        &self.support
    }

    pub fn label(&self) -> bool {
        self.label
    }

    pub fn label_value(&self) -> f64 {
        self.label as u8 as f64
    }
}

/// A `[0,1]`-valued function on an indexed set, extended linearly to
/// mixtures by [`Predictor::evaluate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    values: Vec<f64>,
}

impl Predictor {
    pub fn new(mut values: Vec<f64>) -> Result<Self, LearnerError> {
        for (index, v) in values.iter_mut().enumerate() {
            if !v.is_finite() || *v < -SUPPORT_TOL || *v > 1.0 + SUPPORT_TOL {
                return Err(LearnerError::PredictorRange { index, value: *v });
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Predictor { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn evaluate(&self, ex: &DistExample) -> f64 {
        ex.support.iter().map(|&(i, w)| w * self.values[i]).sum()
    }
}

/// Per-round predictor losses together with the example stream.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RegretLedger {
    losses: Vec<f64>,
    examples: Vec<DistExample>,
}

impl RegretLedger {
    pub fn push(&mut self, loss: f64, example: DistExample) {
        self.losses.push(loss);
        self.examples.push(example);
    }

    pub fn rounds(&self) -> usize {
        self.losses.len()
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn examples(&self) -> &[DistExample] {
        &self.examples
    }

    pub fn total_loss(&self) -> f64 {
        self.losses.iter().sum()
    }
}

/// Cumulative predictor loss minus the best fixed domain point in hindsight,
/// computed exactly by enumerating the domain.
pub fn regret_of(ledger: &RegretLedger, c: &ConceptClass) -> f64 {
    if ledger.rounds() == 0 {
        return 0.0;
    }
    let best = (0..c.points())
        .map(|x| {
            ledger
                .examples()
                .iter()
                .map(|ex| {
                    let pred: f64 = ex
                        .support()
                        .iter()
                        .map(|&(d, w)| w * (c.row(d).get(x) as u8 as f64))
                        .sum();
                    (pred - ex.label_value()).abs()
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    ledger.total_loss() - best
}

/// What a learner offers each round.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub predictor: Predictor,
    /// For the proper engine: the domain mixture whose expectations the
    /// predictor equals pointwise.
    pub proper: Option<Distribution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LearnerKind {
    MultiplicativeWeights,
    AgnosticSoa,
}

/// Either learner engine behind one interface.
#[derive(Debug, Clone)]
pub enum LearnerState {
    Mw(MwLearner),
    Soa(AgnosticSoaLearner),
}

impl LearnerState {
    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerState::Mw(_) => LearnerKind::MultiplicativeWeights,
            LearnerState::Soa(_) => LearnerKind::AgnosticSoa,
        }
    }

    pub fn predict(&self) -> Result<Prediction, LearnerError> {
        match self {
            LearnerState::Mw(l) => l.predict(),
            LearnerState::Soa(l) => l.predict(),
        }
    }

    pub fn update(&mut self, ex: &DistExample) -> Result<(), LearnerError> {
        match self {
            LearnerState::Mw(l) => l.update(ex),
            LearnerState::Soa(l) => l.update(ex),
        }
    }

    pub fn ledger(&self) -> &RegretLedger {
        match self {
            LearnerState::Mw(l) => &l.ledger,
            LearnerState::Soa(l) => &l.ledger,
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            LearnerState::Mw(l) => l.horizon,
            LearnerState::Soa(l) => l.horizon,
        }
    }

    pub fn rounds_played(&self) -> usize {
        match self {
            LearnerState::Mw(l) => l.rounds_played,
            LearnerState::Soa(l) => l.rounds_played,
        }
    }
}

/// Build the proper engine.
pub fn mw_learner(c: &ConceptClass, horizon: usize) -> Result<LearnerState, LearnerError> {
    Ok(LearnerState::Mw(MwLearner::new(c, horizon)?))
}

/// Build the mistake-bound engine; errors when the expert set would exceed
/// the configured cap.
pub fn agnostic_soa_learner(
    c: &ConceptClass,
    horizon: usize,
) -> Result<LearnerState, LearnerError> {
    Ok(LearnerState::Soa(AgnosticSoaLearner::new(
        c,
        horizon,
        SoaCaps::default(),
    )?))
}

// ---------------------------------------------------------------------------
// Multiplicative weights over domain points
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MwLearner {
    class: ConceptClass,
    pub horizon: usize,
    pub rounds_played: usize,
    pub eta: f64,
    /// Normalized expert weights, one per domain point.
    weights: Vec<f64>,
    pub ledger: RegretLedger,
}

impl MwLearner {
    pub fn new(c: &ConceptClass, horizon: usize) -> Result<Self, LearnerError> {
        if horizon == 0 {
            return Err(LearnerError::ZeroHorizon);
        }
        if c.is_empty() {
            return Err(LearnerError::EmptyClass);
        }
        let n = c.points();
        let eta = (8.0 * (n as f64).ln() / horizon as f64).sqrt();
        Ok(MwLearner {
            class: c.clone(),
            horizon,
            rounds_played: 0,
            eta,
            weights: vec![1.0 / n as f64; n],
            ledger: RegretLedger::default(),
        })
    }

    /// Current domain mixture; the predictor is its expectation row by row.
    pub fn mixture(&self) -> Distribution {
        Distribution::new(self.weights.clone()).expect("weights stay positive")
    }

    pub fn predict(&self) -> Result<Prediction, LearnerError> {
        if self.rounds_played >= self.horizon {
            return Err(LearnerError::HorizonExhausted {
                horizon: self.horizon,
            });
        }
        let p = self.mixture();
        let values: Vec<f64> = self
            .class
            .rows()
            .iter()
            .map(|d| crate::measures::expect(&p, d).expect("dimensions match"))
            .collect();
        Ok(Prediction {
            predictor: Predictor::new(values)?,
            proper: Some(p),
        })
    }

    fn expert_prediction(&self, x: usize, ex: &DistExample) -> f64 {
        ex.support()
            .iter()
            .map(|&(d, w)| w * (self.class.row(d).get(x) as u8 as f64))
            .sum()
    }

    pub fn update(&mut self, ex: &DistExample) -> Result<(), LearnerError> {
        if self.rounds_played >= self.horizon {
            return Err(LearnerError::HorizonExhausted {
                horizon: self.horizon,
            });
        }
        for &(i, _) in ex.support() {
            if i >= self.class.len() {
                return Err(LearnerError::SupportOutOfRange {
                    index: i,
                    len: self.class.len(),
                });
            }
        }
        let pred = self.predict()?.predictor.evaluate(ex);
        let y = ex.label_value();
        self.ledger.push((pred - y).abs(), ex.clone());

        for x in 0..self.weights.len() {
            let loss = (self.expert_prediction(x, ex) - y).abs();
            self.weights[x] *= (-self.eta * loss).exp();
        }
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
        self.rounds_played += 1;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// The standard optimal algorithm and its agnostic expert wrapper
// ---------------------------------------------------------------------------

/// The deterministic one-step rule of the standard optimal algorithm:
/// predict 0 at a point exactly when restricting the class to 0 there keeps
/// its Littlestone dimension. Ties in favor of 1 by construction.
///
/// Returns one bit per domain point of `c`.
pub fn soa_rule(c: &ConceptClass) -> Result<Vec<bool>, LearnerError> {
    if c.is_empty() {
        return Err(LearnerError::EmptyClass);
    }
    let mut table = SubclassTable::new(c)?;
    let full = table.full_mask();
    Ok(table.soa_values(full).to_vec())
}

const MAX_DUAL_ROWS: usize = 64;

/// Littlestone dimensions and SOA rows for subclasses of a fixed class,
/// keyed by row bitmask. The empty subclass carries dimension -1 and an
/// all-zero rule, which keeps restriction chains total.
#[derive(Debug, Clone)]
struct SubclassTable {
    n_points: usize,
    /// For each point, the mask of rows evaluating to 0 there.
    zero_masks: Vec<u64>,
    n_rows: usize,
    ldim_memo: BTreeMap<u64, i32>,
    soa_memo: BTreeMap<u64, Vec<bool>>,
}

impl SubclassTable {
    fn new(c: &ConceptClass) -> Result<Self, LearnerError> {
        if c.len() > MAX_DUAL_ROWS {
            return Err(LearnerError::DualTooWide {
                len: c.len(),
                max: MAX_DUAL_ROWS,
            });
        }
        let zero_masks = (0..c.points())
            .map(|p| {
                let mut m = 0u64;
                for (i, row) in c.rows().iter().enumerate() {
                    if !row.get(p) {
                        m |= 1 << i;
                    }
                }
                m
            })
            .collect();
        Ok(SubclassTable {
            n_points: c.points(),
            zero_masks,
            n_rows: c.len(),
            ldim_memo: BTreeMap::new(),
            soa_memo: BTreeMap::new(),
        })
    }

    fn full_mask(&self) -> u64 {
        if self.n_rows == 64 {
            u64::MAX
        } else {
            (1u64 << self.n_rows) - 1
        }
    }

    fn restrict(&self, mask: u64, point: usize, bit: bool) -> u64 {
        if bit {
            mask & !self.zero_masks[point]
        } else {
            mask & self.zero_masks[point]
        }
    }

    fn ldim(&mut self, mask: u64) -> i32 {
        if mask == 0 {
            return -1;
        }
        if mask.count_ones() == 1 {
            return 0;
        }
        if let Some(&d) = self.ldim_memo.get(&mask) {
            return d;
        }
        let cap = 63 - mask.count_ones().leading_zeros() as i32; // floor(log2 |rows|)
        let mut best = 0;
        for p in 0..self.n_points {
            let zeros = mask & self.zero_masks[p];
            let ones = mask & !self.zero_masks[p];
            if zeros == 0 || ones == 0 || zeros == mask || ones == mask {
                continue;
            }
            let d = 1 + self.ldim(zeros).min(self.ldim(ones));
            if d > best {
                best = d;
                if best == cap {
                    break;
                }
            }
        }
        self.ldim_memo.insert(mask, best);
        best
    }

    fn soa_values(&mut self, mask: u64) -> &[bool] {
        if !self.soa_memo.contains_key(&mask) {
            let full = self.ldim(mask);
            let values: Vec<bool> = (0..self.n_points)
                .map(|p| {
                    let zeros = mask & self.zero_masks[p];
                    self.ldim(zeros) != full
                })
                .collect();
            self.soa_memo.insert(mask, values);
        }
        self.soa_memo.get(&mask).expect("just inserted")
    }
}

/// Run the realizable standard optimal algorithm directly on a stream of
/// labelled points, restricting by the true label after every round.
/// Returns the number of mistakes; at most the Littlestone dimension when
/// the stream is realizable.
pub fn soa_realizable_run(
    c: &ConceptClass,
    stream: &[(usize, bool)],
) -> Result<usize, LearnerError> {
    let mut table = SubclassTable::new(c)?;
    let mut mask = table.full_mask();
    let mut mistakes = 0;
    for &(p, y) in stream {
        let pred = table.soa_values(mask)[p];
        if pred != y {
            mistakes += 1;
        }
        mask = table.restrict(mask, p, y);
    }
    Ok(mistakes)
}

/// Caps on the implicit expert set and on sample-path branching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SoaCaps {
    pub max_experts: u128,
    pub max_paths: usize,
}

impl Default for SoaCaps {
    fn default() -> Self {
        SoaCaps {
            max_experts: 1_000_000,
            max_paths: 50_000,
        }
    }
}

/// One realized history branch: its probability under the observed mixtures
/// and the grouped expert weights it induces.
#[derive(Debug, Clone)]
struct PathState {
    prob: f64,
    /// (surviving dual subclass mask, flips spent) -> total expert weight.
    groups: BTreeMap<(u64, u8), f64>,
}

#[derive(Debug, Clone)]
pub struct AgnosticSoaLearner {
    class: ConceptClass,
    /// Transposed table: rows are the distinct dual hypotheses the experts
    /// track, over one point per distinguisher row of `class`.
    dual_table: SubclassTable,
    /// Littlestone dimension of the dual class = maximum flips per expert.
    pub ell: usize,
    pub horizon: usize,
    pub rounds_played: usize,
    pub eta: f64,
    pub expert_count: u128,
    caps: SoaCaps,
    paths: Vec<PathState>,
    pub ledger: RegretLedger,
}

impl AgnosticSoaLearner {
    pub fn new(c: &ConceptClass, horizon: usize, caps: SoaCaps) -> Result<Self, LearnerError> {
        if horizon == 0 {
            return Err(LearnerError::ZeroHorizon);
        }
        if c.is_empty() {
            return Err(LearnerError::EmptyClass);
        }
        let dual = c.dualize();
        let mut dual_table = SubclassTable::new(&dual)?;
        let full = dual_table.full_mask();
        let ell = dual_table.ldim(full).max(0) as usize;

        let expert_count = count_flip_schedules(horizon, ell);
        if expert_count > caps.max_experts {
            return Err(LearnerError::ExpertCapExceeded {
                count: expert_count,
                cap: caps.max_experts,
            });
        }
        // ln of the expert count; exact enough at any count under the cap.
        let eta = (8.0 * (expert_count as f64).ln() / horizon as f64).sqrt();
        let mut groups = BTreeMap::new();
        groups.insert((full, 0u8), 1.0);
        Ok(AgnosticSoaLearner {
            class: c.clone(),
            dual_table,
            ell,
            horizon,
            rounds_played: 0,
            eta,
            expert_count,
            caps,
            paths: vec![PathState { prob: 1.0, groups }],
            ledger: RegretLedger::default(),
        })
    }

    /// Number of expert schedules still open at the next round, split by
    /// whether they flip now. `k` flips are already spent; `remaining` rounds
    /// come after the current one.
    fn future_counts(&self, remaining: usize, k: u8) -> (f64, f64) {
        let budget = self.ell - k as usize;
        let stay: u128 = (0..=budget).map(|j| binomial(remaining, j)).sum();
        let flip: u128 = if budget == 0 {
            0
        } else {
            (0..budget).map(|j| binomial(remaining, j)).sum()
        };
        (stay as f64, flip as f64)
    }

    pub fn predict(&self) -> Result<Prediction, LearnerError> {
        if self.rounds_played >= self.horizon {
            return Err(LearnerError::HorizonExhausted {
                horizon: self.horizon,
            });
        }
        let mut table = self.dual_table.clone();
        let n = self.class.len();
        let remaining = self.horizon - self.rounds_played - 1;
        let mut values = vec![0.0f64; n];
        for path in &self.paths {
            let mut base = 0.0f64;
            let mut coef: BTreeMap<u64, f64> = BTreeMap::new();
            let mut norm = 0.0f64;
            for (&(mask, k), &w) in &path.groups {
                let (stay, flip) = self.future_counts(remaining, k);
                // Group prediction at d: stay copies play s(d), flip copies 1-s(d).
                base += w * flip;
                *coef.entry(mask).or_insert(0.0) += w * (stay - flip);
                norm += w * (stay + flip);
            }
            for (&mask, &a) in &coef {
                let svals = table.soa_values(mask);
                for d in 0..n {
                    if svals[d] {
                        values[d] += path.prob * a / norm;
                    }
                }
            }
            if base != 0.0 {
                for v in values.iter_mut() {
                    *v += path.prob * base / norm;
                }
            }
        }
        Ok(Prediction {
            predictor: Predictor::new(values)?,
            proper: None,
        })
    }

    pub fn update(&mut self, ex: &DistExample) -> Result<(), LearnerError> {
        if self.rounds_played >= self.horizon {
            return Err(LearnerError::HorizonExhausted {
                horizon: self.horizon,
            });
        }
        for &(i, _) in ex.support() {
            if i >= self.class.len() {
                return Err(LearnerError::SupportOutOfRange {
                    index: i,
                    len: self.class.len(),
                });
            }
        }
        let prediction = self.predict()?;
        let y = ex.label_value();
        self.ledger
            .push((prediction.predictor.evaluate(ex) - y).abs(), ex.clone());

        let down = (-self.eta).exp();
        let mut new_paths: Vec<PathState> = Vec::new();
        for path in &self.paths {
            for &(d, wd) in ex.support() {
                if wd == 0.0 {
                    continue;
                }
                let mut groups: BTreeMap<(u64, u8), f64> = BTreeMap::new();
                for (&(mask, k), &w) in &path.groups {
                    let s = self.dual_table.soa_values(mask)[d];
                    // Stay: play the SOA bit and restrict by it.
                    let stay_loss_one = s != ex.label();
                    let stay_mask = self.dual_table.restrict(mask, d, s);
                    let stay_w = if stay_loss_one { w * down } else { w };
                    *groups.entry((stay_mask, k)).or_insert(0.0) += stay_w;
                    // Flip: spend budget, play the opposite bit.
                    if (k as usize) < self.ell {
                        let flipped = !s;
                        let flip_loss_one = flipped != ex.label();
                        let flip_mask = self.dual_table.restrict(mask, d, flipped);
                        let flip_w = if flip_loss_one { w * down } else { w };
                        *groups.entry((flip_mask, k + 1)).or_insert(0.0) += flip_w;
                    }
                }
                // Rescale so weights stay in range over long horizons; the
                // predictor normalizes per path, so scale is immaterial.
                let total: f64 = groups.values().sum();
                if total > 0.0 {
                    for w in groups.values_mut() {
                        *w /= total;
                    }
                }
                new_paths.push(PathState {
                    prob: path.prob * wd,
                    groups,
                });
            }
        }
        if new_paths.len() > self.caps.max_paths {
            return Err(LearnerError::PathCapExceeded {
                cap: self.caps.max_paths,
            });
        }
        // Branches that realized identical group tables merge.
        new_paths.sort_by(|a, b| cmp_groups(&a.groups, &b.groups));
        let mut merged: Vec<PathState> = Vec::with_capacity(new_paths.len());
        for p in new_paths {
            match merged.last_mut() {
                Some(last) if cmp_groups(&last.groups, &p.groups) == std::cmp::Ordering::Equal => {
                    last.prob += p.prob;
                }
                _ => merged.push(p),
            }
        }
        let total_prob: f64 = merged.iter().map(|p| p.prob).sum();
        for p in &mut merged {
            p.prob /= total_prob;
        }
        self.paths = merged;
        self.rounds_played += 1;
        Ok(())
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }
}

fn cmp_groups(a: &BTreeMap<(u64, u8), f64>, b: &BTreeMap<(u64, u8), f64>) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        for ((ka, wa), (kb, wb)) in a.iter().zip(b.iter()) {
            let o = ka.cmp(kb).then(wa.total_cmp(wb));
            if o != std::cmp::Ordering::Equal {
                return o;
            }
        }
        std::cmp::Ordering::Equal
    })
}

/// Number of flip schedules: subsets of the horizon of size at most `ell`.
pub fn count_flip_schedules(horizon: usize, ell: usize) -> u128 {
    (0..=ell).map(|j| binomial(horizon, j)).sum()
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{class_zoo, ZooName};
    use crate::rng::RngFactory;
    use rand::Rng;

    fn singletons2() -> ConceptClass {
        class_zoo(ZooName::Singletons, 2, 0, 0).unwrap() // rows 01, 10
    }

    #[test]
    fn mw_initial_predictor_is_uniform_average() {
        let c = singletons2();
        let l = MwLearner::new(&c, 4).unwrap();
        let pred = l.predict().unwrap().predictor;
        // Every row has exactly one of two points set, so the uniform
        // mixture gives 1/2 on both distinguishers.
        assert_eq!(pred.values(), &[0.5, 0.5]);

        let cube2 = class_zoo(ZooName::Cube, 2, 0, 0).unwrap();
        let l = MwLearner::new(&cube2, 4).unwrap();
        let pred = l.predict().unwrap().predictor;
        for (d, row) in cube2.rows().iter().enumerate() {
            let avg = (row.get(0) as u8 as f64 + row.get(1) as u8 as f64) / 2.0;
            assert_eq!(pred.value(d), avg);
        }
    }

    #[test]
    fn mw_eta_formula() {
        let c = singletons2();
        let l = MwLearner::new(&c, 1).unwrap();
        assert!((l.eta - (8.0 * 2f64.ln()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mw_update_rules() {
        let c = singletons2();
        let mut l = MwLearner::new(&c, 8).unwrap();
        let eta = l.eta;
        // Dirac on row "10" (index 1) labelled 1: expert x0 predicts 1
        // (zero loss, weight kept), expert x1 predicts 0 (loss 1, shrinks).
        let before = l.weights.clone();
        l.update(&DistExample::dirac(1, true, 2).unwrap()).unwrap();
        let shrink = (-eta).exp();
        let expect0 = before[0] / (before[0] + before[1] * shrink);
        let expect1 = before[1] * shrink / (before[0] + before[1] * shrink);
        assert!((l.weights[0] - expect0).abs() < 1e-15);
        assert!((l.weights[1] - expect1).abs() < 1e-15);
    }

    #[test]
    fn mw_mixed_support_loss() {
        // Support (1/2, 1/2) on rows where the expert evaluates 1 and 0,
        // label 0: expert loss is 1/2.
        let c = singletons2();
        let mut l = MwLearner::new(&c, 8).unwrap();
        let ex = DistExample::new(vec![(0, 0.5), (1, 0.5)], false, 2).unwrap();
        let loss0 = (l.expert_prediction(0, &ex) - 0.0).abs();
        assert_eq!(loss0, 0.5);
        l.update(&ex).unwrap();
        assert_eq!(l.ledger.losses()[0], 0.5);
    }

    #[test]
    fn mw_is_proper_exactly() {
        let c = class_zoo(ZooName::Thresholds, 5, 0, 0)
            .unwrap()
            .symmetrize();
        let mut l = MwLearner::new(&c, 16).unwrap();
        let mut rng = RngFactory::new(3).trial(0);
        for _ in 0..16 {
            let pred = l.predict().unwrap();
            let p = pred.proper.expect("mw exposes its mixture");
            for (d, row) in c.rows().iter().enumerate() {
                // Exact up to the [0,1] clamp the predictor applies.
                assert_eq!(
                    pred.predictor.value(d),
                    crate::measures::expect(&p, row).unwrap().clamp(0.0, 1.0)
                );
            }
            let d = rng.gen_range(0..c.len());
            let y = rng.gen::<bool>();
            l.update(&DistExample::dirac(d, y, c.len()).unwrap())
                .unwrap();
        }
        assert!(l.predict().is_err());
    }

    #[test]
    fn mw_regret_bound_on_random_streams() {
        let c = class_zoo(ZooName::Cube, 3, 0, 0).unwrap();
        let t = 200;
        let bound = (t as f64 * (c.points() as f64).ln() / 2.0).sqrt() + 1.0;
        for seed in 0..10u64 {
            let mut rng = RngFactory::new(seed).trial(0);
            let mut l = MwLearner::new(&c, t).unwrap();
            for _ in 0..t {
                let d = rng.gen_range(0..c.len());
                let y = rng.gen::<bool>();
                l.update(&DistExample::dirac(d, y, c.len()).unwrap())
                    .unwrap();
            }
            assert!(regret_of(&l.ledger, &c) <= bound);
        }
    }

    #[test]
    fn regret_of_hand_computed() {
        let c = singletons2();
        let mut ledger = RegretLedger::default();
        // Rows sorted: 01 (index 0), 10 (index 1). Point x0 evaluates row0
        // to 0, row1 to 1; point x1 the reverse.
        ledger.push(0.3, DistExample::dirac(1, true, 2).unwrap());
        ledger.push(
            0.5,
            DistExample::new(vec![(0, 0.5), (1, 0.5)], false, 2).unwrap(),
        );
        ledger.push(0.2, DistExample::dirac(0, true, 2).unwrap());
        // x0 losses: |1-1| + |0.5-0| + |0-1| = 1.5; x1: |0-1| + |0.5| + |1-1| = 1.5.
        assert!((regret_of(&ledger, &c) - (1.0 - 1.5)).abs() < 1e-12);
        assert_eq!(regret_of(&RegretLedger::default(), &c), 0.0);
    }

    #[test]
    fn soa_rule_examples() {
        // Single hypothesis: predict its own value everywhere.
        let single = ConceptClass::from_bitstrings(&["0110"]).unwrap();
        let s = soa_rule(&single).unwrap();
        assert_eq!(s, vec![false, true, true, false]);

        // Full cube: both restrictions drop the dimension, rule says 1.
        let cube = class_zoo(ZooName::Cube, 3, 0, 0).unwrap();
        assert_eq!(soa_rule(&cube).unwrap(), vec![true; 3]);
    }

    #[test]
    fn soa_realizable_mistake_bound() {
        let f = RngFactory::new(17);
        for (ci, c) in [
            class_zoo(ZooName::Thresholds, 7, 0, 0).unwrap(),
            class_zoo(ZooName::Cube, 3, 0, 0).unwrap(),
            class_zoo(ZooName::Random, 5, 12, 3).unwrap(),
        ]
        .iter()
        .enumerate()
        {
            let ld = crate::concepts::littlestone_dimension(c).unwrap();
            for trial in 0..20u64 {
                let mut rng = f.trial(ci as u64 * 100 + trial);
                let target = c.row(rng.gen_range(0..c.len())).clone();
                let stream: Vec<(usize, bool)> = (0..40)
                    .map(|_| {
                        let p = rng.gen_range(0..c.points());
                        (p, target.get(p))
                    })
                    .collect();
                let mistakes = soa_realizable_run(c, &stream).unwrap();
                assert!(
                    mistakes <= ld,
                    "class {ci} trial {trial}: {mistakes} mistakes > ldim {ld}"
                );
            }
        }
    }

    #[test]
    fn agnostic_soa_with_zero_budget_is_pure_soa() {
        // A class whose dual has Littlestone dimension 0: a single distinct
        // column. Then the only expert is the flipless SOA itself.
        let c = ConceptClass::from_bitstrings(&["01", "10"]).unwrap();
        let dual = c.dualize();
        if crate::concepts::littlestone_dimension(&dual).unwrap() == 0 {
            unreachable!("dual of the identity table has dimension 1");
        }
        let two_consts = ConceptClass::from_bitstrings(&["00", "11"]).unwrap();
        let dual = two_consts.dualize();
        assert_eq!(crate::concepts::littlestone_dimension(&dual).unwrap(), 0);

        let mut learner = AgnosticSoaLearner::new(&two_consts, 6, SoaCaps::default()).unwrap();
        assert_eq!(learner.ell, 0);
        assert_eq!(learner.expert_count, 1);

        // Mirror the expert by hand: the dual has one row, so SOA predicts
        // that row's bits and restriction never changes it.
        let dual_row = dual.row(0).clone();
        let mut rng = RngFactory::new(5).trial(0);
        for _ in 0..6 {
            let pred = learner.predict().unwrap().predictor;
            for d in 0..two_consts.len() {
                assert_eq!(pred.value(d), dual_row.get(d) as u8 as f64);
            }
            let d = rng.gen_range(0..two_consts.len());
            let y = rng.gen::<bool>();
            learner
                .update(&DistExample::dirac(d, y, two_consts.len()).unwrap())
                .unwrap();
        }
    }

    /// Explicit expert enumeration: simulate every flip schedule as its own
    /// expert over a realized point sequence and aggregate by exponential
    /// weights. Mixture rounds enumerate all realizations weighted by their
    /// probability. This is the oracle for the grouped representation.
    fn brute_force_predictions(
        c: &ConceptClass,
        horizon: usize,
        stream: &[DistExample],
    ) -> Vec<Vec<f64>> {
        let dual = c.dualize();
        let mut table = SubclassTable::new(&dual).unwrap();
        let full = table.full_mask();
        let ell = table.ldim(full).max(0) as usize;
        let eta = (8.0 * (count_flip_schedules(horizon, ell) as f64).ln() / horizon as f64).sqrt();

        // All flip schedules as sorted time sets (1-indexed times).
        let mut experts: Vec<Vec<usize>> = vec![vec![]];
        fn extend(acc: &mut Vec<Vec<usize>>, horizon: usize, ell: usize) {
            let mut frontier: Vec<Vec<usize>> = vec![vec![]];
            for _ in 0..ell {
                let mut next = Vec::new();
                for f in &frontier {
                    let start = f.last().map_or(1, |&l| l + 1);
                    for t in start..=horizon {
                        let mut g = f.clone();
                        g.push(t);
                        next.push(g.clone());
                        acc.push(g);
                    }
                }
                frontier = next;
            }
        }
        extend(&mut experts, horizon, ell);

        // Enumerate realized point sequences for the observed prefix.
        fn paths(stream: &[DistExample], upto: usize) -> Vec<(f64, Vec<usize>)> {
            let mut acc = vec![(1.0, vec![])];
            for ex in &stream[..upto] {
                let mut next = Vec::new();
                for (p, seq) in &acc {
                    for &(d, w) in ex.support() {
                        if w > 0.0 {
                            let mut s = seq.clone();
                            s.push(d);
                            next.push((p * w, s));
                        }
                    }
                }
                acc = next;
            }
            acc
        }

        let mut out = Vec::new();
        for t in 0..stream.len() {
            let mut values = vec![0.0; c.len()];
            for (prob, seq) in paths(stream, t) {
                // Replay each expert over this realization.
                let mut num = vec![0.0; c.len()];
                let mut den = 0.0;
                for flips in &experts {
                    let mut mask = full;
                    let mut loss = 0.0;
                    for (i, &d) in seq.iter().enumerate() {
                        let s = table.soa_values(mask)[d];
                        let flip = flips.contains(&(i + 1));
                        let played = s != flip;
                        loss += (played as u8 as f64 - stream[i].label_value()).abs();
                        mask = table.restrict(mask, d, played);
                    }
                    let w = (-eta * loss).exp();
                    let s_now = table.soa_values(mask).to_vec();
                    let flip_now = flips.contains(&(t + 1));
                    for d in 0..c.len() {
                        let played = s_now[d] != flip_now;
                        num[d] += w * played as u8 as f64;
                    }
                    den += w;
                }
                for d in 0..c.len() {
                    values[d] += prob * num[d] / den;
                }
            }
            out.push(values);
        }
        out
    }

    #[test]
    fn agnostic_soa_matches_expert_enumeration() {
        let c = singletons2().symmetrize(); // rows 01 and 10; already symmetric
        let horizon = 5;
        let streams: Vec<Vec<DistExample>> = vec![
            vec![
                DistExample::dirac(0, true, 2).unwrap(),
                DistExample::dirac(1, false, 2).unwrap(),
                DistExample::dirac(0, false, 2).unwrap(),
                DistExample::dirac(1, true, 2).unwrap(),
                DistExample::dirac(0, true, 2).unwrap(),
            ],
            vec![
                DistExample::dirac(1, true, 2).unwrap(),
                DistExample::new(vec![(0, 0.25), (1, 0.75)], false, 2).unwrap(),
                DistExample::dirac(0, false, 2).unwrap(),
                DistExample::new(vec![(0, 0.5), (1, 0.5)], true, 2).unwrap(),
                DistExample::dirac(1, false, 2).unwrap(),
            ],
        ];
        for stream in &streams {
            let oracle = brute_force_predictions(&c, horizon, stream);
            let mut learner = AgnosticSoaLearner::new(&c, horizon, SoaCaps::default()).unwrap();
            for (t, ex) in stream.iter().enumerate() {
                let pred = learner.predict().unwrap().predictor;
                for (d, &want) in oracle[t].iter().enumerate() {
                    assert!(
                        (pred.value(d) - want).abs() < 1e-9,
                        "round {t} row {d}: grouped {} vs enumerated {want}",
                        pred.value(d),
                    );
                }
                learner.update(ex).unwrap();
            }
        }
    }

    #[test]
    fn agnostic_soa_matches_enumeration_on_wider_class() {
        let c = class_zoo(ZooName::Thresholds, 3, 0, 0)
            .unwrap()
            .symmetrize();
        let horizon = 4;
        let mut rng = RngFactory::new(23).trial(0);
        let stream: Vec<DistExample> = (0..horizon)
            .map(|t| {
                if t == 1 {
                    DistExample::new(vec![(0, 0.5), (2, 0.5)], false, c.len()).unwrap()
                } else {
                    DistExample::dirac(rng.gen_range(0..c.len()), rng.gen(), c.len()).unwrap()
                }
            })
            .collect();
        let oracle = brute_force_predictions(&c, horizon, &stream);
        let mut learner = AgnosticSoaLearner::new(&c, horizon, SoaCaps::default()).unwrap();
        for (t, ex) in stream.iter().enumerate() {
            let pred = learner.predict().unwrap().predictor;
            for (d, &want) in oracle[t].iter().enumerate() {
                assert!((pred.value(d) - want).abs() < 1e-9);
            }
            learner.update(ex).unwrap();
        }
    }

    #[test]
    fn agnostic_soa_regret_bound_on_streams() {
        let c = class_zoo(ZooName::Thresholds, 4, 0, 0)
            .unwrap()
            .symmetrize();
        let dual_ldim = crate::concepts::dual_littlestone_dimension(&c).unwrap();
        let t = 60;
        let bound = (0.5 * dual_ldim as f64 * t as f64 * (t as f64).ln()).sqrt();
        for seed in 0..5u64 {
            let mut rng = RngFactory::new(seed).trial(7);
            let mut learner = agnostic_soa_learner(&c, t).unwrap();
            for _ in 0..t {
                let d = rng.gen_range(0..c.len());
                let y = rng.gen::<bool>();
                learner
                    .update(&DistExample::dirac(d, y, c.len()).unwrap())
                    .unwrap();
            }
            let r = regret_of(learner.ledger(), &c);
            assert!(r <= bound, "seed {seed}: regret {r} > bound {bound}");
        }
    }

    #[test]
    fn learners_are_deterministic() {
        let c = class_zoo(ZooName::HalfArcs, 6, 0, 0).unwrap();
        let stream: Vec<DistExample> = vec![
            DistExample::dirac(2, true, c.len()).unwrap(),
            DistExample::new(vec![(1, 0.5), (4, 0.5)], false, c.len()).unwrap(),
            DistExample::dirac(0, true, c.len()).unwrap(),
        ];
        for build in [mw_learner, agnostic_soa_learner] {
            let mut a = build(&c, 8).unwrap();
            let mut b = build(&c, 8).unwrap();
            for ex in &stream {
                assert_eq!(
                    a.predict().unwrap().predictor.values(),
                    b.predict().unwrap().predictor.values()
                );
                a.update(ex).unwrap();
                b.update(ex).unwrap();
            }
        }
    }

    #[test]
    fn expert_cap_is_enforced() {
        let c = class_zoo(ZooName::Cube, 3, 0, 0).unwrap();
        let caps = SoaCaps {
            max_experts: 10,
            max_paths: 100,
        };
        assert!(matches!(
            AgnosticSoaLearner::new(&c, 100, caps),
            Err(LearnerError::ExpertCapExceeded { .. })
        ));
    }

    #[test]
    fn predictor_values_stay_in_range() {
        let c = class_zoo(ZooName::Random, 4, 8, 9).unwrap().symmetrize();
        let mut rng = RngFactory::new(2).trial(0);
        let mut learner = agnostic_soa_learner(&c, 20).unwrap();
        for _ in 0..20 {
            let pred = learner.predict().unwrap().predictor;
            for &v in pred.values() {
                assert!((0.0..=1.0).contains(&v));
            }
            let d = rng.gen_range(0..c.len());
            learner
                .update(&DistExample::dirac(d, rng.gen(), c.len()).unwrap())
                .unwrap();
        }
    }
}
