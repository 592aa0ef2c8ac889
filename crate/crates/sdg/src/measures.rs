//! Distributions over finite domains, sampling, and the integral probability
//! metric.
//!
//! The IPM of two distributions with respect to a symmetric class is the
//! largest advantage any single distinguisher achieves between them; the
//! witness row is reported alongside the value, with ties broken to the
//! lowest row index so every transcript is reproducible.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concepts::{ConceptClass, Hypothesis};

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("weight {value} at index {index} is negative")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights must have positive total mass")]
    ZeroMass,
    #[error("distribution must have at least one point")]
    EmptySupport,
    #[error("empty sample")]
    EmptySample,
    #[error("sample index {index} out of range for domain of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("epsilon and delta must lie in (0,1), got eps={eps}, delta={delta}")]
    BadRange { eps: f64, delta: f64 },
}

/// Entries more negative than this are rejected; anything in `(-CLAMP, 0)`
/// is treated as floating-point dust and clamped to zero.
const NEGATIVE_CLAMP: f64 = -1e-12;

/// A probability vector over a finite domain. Renormalized on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(mut weights: Vec<f64>) -> Result<Self, MeasureError> {
        if weights.is_empty() {
            return Err(MeasureError::EmptySupport);
        }
        for (index, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() || *w < NEGATIVE_CLAMP {
                return Err(MeasureError::NegativeWeight { index, value: *w });
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(MeasureError::ZeroMass);
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(Distribution { weights })
    }

    pub fn uniform(size: usize) -> Result<Self, MeasureError> {
        Distribution::new(vec![1.0; size])
    }

    /// Point mass at `index`.
    pub fn dirac(size: usize, index: usize) -> Result<Self, MeasureError> {
        if index >= size {
            return Err(MeasureError::IndexOutOfRange { index, size });
        }
        let mut w = vec![0.0; size];
        w[index] = 1.0;
        Distribution::new(w)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    /// Parse the one-line whitespace-separated format; renormalizes.
    pub fn parse(text: &str) -> Result<Self, MeasureError> {
        let weights: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| MeasureError::ZeroMass))
            .collect::<Result<_, _>>()?;
        Distribution::new(weights)
    }

    pub fn to_line(&self) -> String {
        self.weights
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// An ordered multiset of domain point indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    points: Vec<usize>,
}

impl Sample {
    pub fn new(points: Vec<usize>, domain_size: usize) -> Result<Self, MeasureError> {
        for &index in &points {
            if index >= domain_size {
                return Err(MeasureError::IndexOutOfRange {
                    index,
                    size: domain_size,
                });
            }
        }
        Ok(Sample { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }
}

/// An ordered list of labelled domain points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    pairs: Vec<(usize, bool)>,
}

impl LabeledSample {
    pub fn new(pairs: Vec<(usize, bool)>, domain_size: usize) -> Result<Self, MeasureError> {
        for &(index, _) in &pairs {
            if index >= domain_size {
                return Err(MeasureError::IndexOutOfRange {
                    index,
                    size: domain_size,
                });
            }
        }
        Ok(LabeledSample { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, bool)] {
        &self.pairs
    }

    /// Fraction of pairs labelled 1; 0 on an empty sample.
    pub fn positive_fraction(&self) -> f64 {
        if self.pairs.is_empty() {
            return 0.0;
        }
        self.pairs.iter().filter(|&&(_, y)| y).count() as f64 / self.pairs.len() as f64
    }
}

/// The empirical distribution of a sample over a domain of the given size.
pub fn empirical(s: &Sample, domain_size: usize) -> Result<Distribution, MeasureError> {
    if s.is_empty() {
        return Err(MeasureError::EmptySample);
    }
    let mut counts = vec![0.0; domain_size];
    for &p in s.points() {
        if p >= domain_size {
            return Err(MeasureError::IndexOutOfRange {
                index: p,
                size: domain_size,
            });
        }
        counts[p] += 1.0;
    }
    Distribution::new(counts)
}

/// `E_{x ~ p}[d(x)]`: the mass of the set that `d` indicates.
pub fn expect(p: &Distribution, d: &Hypothesis) -> Result<f64, MeasureError> {
    if p.len() != d.len() {
        return Err(MeasureError::DimensionMismatch {
            left: p.len(),
            right: d.len(),
        });
    }
    Ok(p.weights()
        .iter()
        .zip(d.bits())
        .filter(|(_, &b)| b)
        .map(|(w, _)| w)
        .sum())
}

/// IPM value and its lowest-index maximizing row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpmResult {
    pub value: f64,
    /// Row index into the symmetrized class.
    pub witness: usize,
}

/// The integral probability metric `max_d (p(d) - q(d))` over the
/// complement-closed extension of `c`.
///
/// When `c` is already symmetric (the usual case) the witness indexes into
/// `c` itself; otherwise it indexes into `c.symmetrize()`.
pub fn ipm(
    c: &ConceptClass,
    p: &Distribution,
    q: &Distribution,
) -> Result<IpmResult, MeasureError> {
    if c.is_symmetric() {
        ipm_symmetric(c, p, q)
    } else {
        ipm_symmetric(&c.symmetrize(), p, q)
    }
}

fn ipm_symmetric(
    c: &ConceptClass,
    p: &Distribution,
    q: &Distribution,
) -> Result<IpmResult, MeasureError> {
    if p.len() != q.len() {
        return Err(MeasureError::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut best = f64::NEG_INFINITY;
    let mut witness = 0;
    for (i, d) in c.rows().iter().enumerate() {
        let gap = expect(p, d)? - expect(q, d)?;
        if gap > best {
            best = gap;
            witness = i;
        }
    }
    // Symmetry makes the max nonnegative up to rounding dust.
    Ok(IpmResult {
        value: best.max(0.0),
        witness,
    })
}

/// `m` IID draws by inverse CDF on the weight vector.
pub fn draw_sample<R: Rng>(p: &Distribution, m: usize, rng: &mut R) -> Sample {
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &w in p.weights() {
        acc += w;
        cdf.push(acc);
    }
    let last = p.len() - 1;
    let points = (0..m)
        .map(|_| {
            let u: f64 = rng.gen();
            cdf.partition_point(|&c| c <= u).min(last)
        })
        .collect();
    Sample { points }
}

/// Sample-size rule `ceil(C * (vc + ln(1/delta)) / eps^2)` under which the
/// empirical distribution lands within `eps` of the target in IPM with
/// probability `1 - delta`. `C` defaults to 8 via [`m_emp_bound`].
pub fn m_emp_bound_with_constant(
    eps: f64,
    delta: f64,
    vc: usize,
    c: f64,
) -> Result<usize, MeasureError> {
    if !(0.0..1.0).contains(&eps) || eps == 0.0 || !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(MeasureError::BadRange { eps, delta });
    }
    let raw = c * (vc as f64 + (1.0 / delta).ln()) / (eps * eps);
    Ok(raw.ceil() as usize)
}

pub fn m_emp_bound(eps: f64, delta: f64, vc: usize) -> Result<usize, MeasureError> {
    m_emp_bound_with_constant(eps, delta, vc, 8.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{class_zoo, ConceptClass, ZooName};
    use crate::rng::RngFactory;

    #[test]
    fn distribution_renormalizes_and_clamps() {
        let d = Distribution::new(vec![2.0, 2.0]).unwrap();
        assert_eq!(d.weights(), &[0.5, 0.5]);
        let d = Distribution::new(vec![1.0, -1e-13]).unwrap();
        assert_eq!(d.weights(), &[1.0, 0.0]);
        assert!(Distribution::new(vec![1.0, -1e-9]).is_err());
        assert!(Distribution::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn empirical_counts() {
        let s = Sample::new(vec![0, 0, 1], 2).unwrap();
        let d = empirical(&s, 2).unwrap();
        assert!((d.weight(0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.weight(1) - 1.0 / 3.0).abs() < 1e-15);

        let s = Sample::new(vec![0], 3).unwrap();
        assert_eq!(empirical(&s, 3).unwrap().weights(), &[1.0, 0.0, 0.0]);

        assert!(matches!(
            empirical(&Sample::new(vec![], 2).unwrap(), 2),
            Err(MeasureError::EmptySample)
        ));
    }

    #[test]
    fn empirical_concentrates() {
        let mut rng = RngFactory::new(1).trial(0);
        let p = Distribution::uniform(4).unwrap();
        let s = draw_sample(&p, 10_000, &mut rng);
        let e = empirical(&s, 4).unwrap();
        for i in 0..4 {
            assert!((e.weight(i) - 0.25).abs() < 0.03);
        }
    }

    #[test]
    fn expect_examples() {
        let arcs = class_zoo(ZooName::HalfArcs, 8, 0, 0).unwrap();
        let uniform = Distribution::uniform(8).unwrap();
        for d in arcs.rows() {
            assert_eq!(expect(&uniform, d).unwrap(), 0.5);
        }

        let delta = Distribution::dirac(2, 0).unwrap();
        let ind = Hypothesis::from_bitstring("10").unwrap();
        assert_eq!(expect(&delta, &ind).unwrap(), 1.0);

        let p = Distribution::new(vec![0.75, 0.25]).unwrap();
        assert_eq!(expect(&p, &ind).unwrap(), 0.75);

        let short = Hypothesis::from_bitstring("100").unwrap();
        assert!(expect(&p, &short).is_err());
    }

    #[test]
    fn ipm_examples() {
        let singles = class_zoo(ZooName::Singletons, 2, 0, 0)
            .unwrap()
            .symmetrize();
        let p = Distribution::dirac(2, 0).unwrap();
        let q = Distribution::dirac(2, 1).unwrap();
        let r = ipm(&singles, &p, &q).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(singles.row(r.witness).bits(), &[true, false]);

        let same = ipm(&singles, &p, &p).unwrap();
        assert_eq!(same.value, 0.0);
        assert_eq!(same.witness, 0);

        let c = ConceptClass::from_bitstrings(&["10"]).unwrap();
        let p = Distribution::new(vec![0.75, 0.25]).unwrap();
        let q = Distribution::new(vec![0.5, 0.5]).unwrap();
        let r = ipm(&c, &p, &q).unwrap();
        assert!((r.value - 0.25).abs() < 1e-15);
        assert_eq!(c.symmetrize().row(r.witness).bits(), &[true, false]);
    }

    #[test]
    fn ipm_symmetry_and_triangle_spot_checks() {
        let c = class_zoo(ZooName::Thresholds, 5, 0, 0)
            .unwrap()
            .symmetrize();
        let f = RngFactory::new(7);
        for t in 0..20u64 {
            let mut rng = f.trial(t);
            let mut rand_dist = || {
                let w: Vec<f64> = (0..5).map(|_| rng.gen::<f64>() + 1e-3).collect();
                Distribution::new(w).unwrap()
            };
            let (p, q, r) = (rand_dist(), rand_dist(), rand_dist());
            let pq = ipm(&c, &p, &q).unwrap().value;
            let qp = ipm(&c, &q, &p).unwrap().value;
            assert!((pq - qp).abs() < 1e-9);
            let pr = ipm(&c, &p, &r).unwrap().value;
            let rq = ipm(&c, &r, &q).unwrap().value;
            assert!(pq <= pr + rq + 1e-9);
        }
    }

    #[test]
    fn draw_sample_examples() {
        let delta = Distribution::dirac(3, 1).unwrap();
        let mut rng = RngFactory::new(5).trial(0);
        let s = draw_sample(&delta, 5, &mut rng);
        assert_eq!(s.points(), &[1, 1, 1, 1, 1]);

        let p = Distribution::uniform(2).unwrap();
        let a = draw_sample(&p, 100, &mut RngFactory::new(3).trial(1));
        let b = draw_sample(&p, 100, &mut RngFactory::new(3).trial(1));
        assert_eq!(a, b);

        let big = draw_sample(&p, 10_000, &mut RngFactory::new(1).trial(2));
        let e = empirical(&big, 2).unwrap();
        assert!((e.weight(0) - 0.5).abs() < 0.02);
    }

    #[test]
    fn distribution_line_format_roundtrips() {
        let p = Distribution::parse("2 1 1").unwrap();
        assert_eq!(p.weights(), &[0.5, 0.25, 0.25]);
        let back = Distribution::parse(&p.to_line()).unwrap();
        assert_eq!(back, p);
        assert!(Distribution::parse("not numbers").is_err());
        assert!(Distribution::parse("").is_err());
    }

    #[test]
    fn m_emp_bound_suffices_empirically() {
        // At the rule's sample size, the empirical distribution fools the
        // symmetrized thresholds well within eps in almost every trial.
        let class = class_zoo(ZooName::Thresholds, 15, 0, 0)
            .unwrap()
            .symmetrize();
        let vc = crate::concepts::vc_dimension(&class).unwrap();
        let m = m_emp_bound(0.2, 0.1, vc).unwrap();
        let factory = RngFactory::new(31);
        let mut hits = 0;
        let trials = 500;
        for t in 0..trials {
            let mut rng = factory.trial(t);
            let w: Vec<f64> = (0..15).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let target = Distribution::new(w).unwrap();
            let s = draw_sample(&target, m, &mut rng);
            let e = empirical(&s, 15).unwrap();
            if ipm(&class, &e, &target).unwrap().value <= 0.2 {
                hits += 1;
            }
        }
        assert!(hits * 10 >= trials * 9, "{hits}/{trials} within eps");
    }

    #[test]
    fn empirical_ipm_shrinks_with_sample_size() {
        let class = class_zoo(ZooName::Cube, 3, 0, 0).unwrap();
        let target = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        let factory = RngFactory::new(32);
        let mean_ipm = |m: usize| -> f64 {
            let mut total = 0.0;
            let seeds = 30u64;
            for t in 0..seeds {
                let mut rng = factory.stream(t, m as u32);
                let s = draw_sample(&target, m, &mut rng);
                let e = empirical(&s, 3).unwrap();
                total += ipm(&class, &e, &target).unwrap().value;
            }
            total / seeds as f64
        };
        let (a, b, c) = (mean_ipm(100), mean_ipm(1000), mean_ipm(10_000));
        assert!(a > b && b > c, "not monotone: {a} {b} {c}");
    }

    #[test]
    fn m_emp_bound_arithmetic() {
        assert_eq!(m_emp_bound(0.5, 0.5, 1).unwrap(), 55);
        // Doubling vc at most doubles the bound (up to rounding).
        let m1 = m_emp_bound(0.2, 0.1, 2).unwrap();
        let m2 = m_emp_bound(0.2, 0.1, 4).unwrap();
        assert!(m2 <= 2 * m1);
        assert!(m2 > m1);
        assert!(m_emp_bound(1.0, 0.5, 1).is_err());
        assert!(m_emp_bound(0.5, 0.0, 1).is_err());
    }
}
