//! Finite boolean concept classes and their combinatorial dimensions.
//!
//! A [`ConceptClass`] is an evaluation table: a set of boolean hypotheses
//! (rows) over a finite indexed domain (columns). Classes are kept in a
//! canonical form (rows deduplicated and sorted lexicographically) so that
//! structurally equal classes compare equal and memoization keys are well
//! defined.
//!
//! The dimension computations here are exact and exponential; they are
//! guarded by explicit size caps rather than allowed to run silently for
//! hours. Defaults are [`Caps::DEFAULT`]; every capped entry point has a
//! `_with_caps` variant.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from class construction, parsing, and dimension queries.
#[derive(Debug, Error)]
pub enum ClassError {
    #[error("empty class")]
    Empty,
    #[error("domain must have at least one point")]
    ZeroPoints,
    #[error("{what} cap exceeded: {actual} > {limit}")]
    SizeCap {
        what: &'static str,
        limit: usize,
        actual: usize,
    },
    #[error("row has {actual} bits, domain has {expected} points")]
    RowLength { expected: usize, actual: usize },
    #[error("point {point} out of range for domain of size {size}")]
    PointOutOfRange { point: usize, size: usize },
    #[error("labels count {labels} does not match domain size {size}")]
    LabelCount { labels: usize, size: usize },
    #[error("half_arcs requires even n, got {n}")]
    HalfArcsOdd { n: usize },
    #[error("random class of {k} rows cannot be distinct over {n} points")]
    RandomTooMany { k: usize, n: usize },
    #[error("cube over {n} points exceeds the n <= {max} construction cap")]
    CubeTooLarge { n: usize, max: usize },
    #[error("class file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Size caps for the exponential dimension algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub max_points: usize,
    pub max_rows: usize,
}

impl Caps {
    pub const DEFAULT: Caps = Caps {
        max_points: 24,
        max_rows: 4096,
    };

    /// Caps for the transposed table: rows and points swap roles.
    pub fn transposed(self) -> Caps {
        Caps {
            max_points: self.max_rows,
            max_rows: self.max_points,
        }
    }
}

impl Default for Caps {
    fn default() -> Self {
        Caps::DEFAULT
    }
}

/// A finite indexed domain of points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Domain {
    pub fn new(size: usize) -> Result<Self, ClassError> {
        if size == 0 {
            return Err(ClassError::ZeroPoints);
        }
        Ok(Domain { size, labels: None })
    }

    pub fn with_labels(size: usize, labels: Vec<String>) -> Result<Self, ClassError> {
        if size == 0 {
            return Err(ClassError::ZeroPoints);
        }
        if labels.len() != size {
            return Err(ClassError::LabelCount {
                labels: labels.len(),
                size,
            });
        }
        Ok(Domain {
            size,
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// A boolean hypothesis: one row of the evaluation table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Hypothesis {
    bits: Vec<bool>,
}

impl Hypothesis {
    pub fn new(bits: Vec<bool>) -> Self {
        Hypothesis { bits }
    }

    /// Parse from a string of `0`/`1` characters.
    pub fn from_bitstring(s: &str) -> Option<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return None,
            }
        }
        Some(Hypothesis { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, point: usize) -> bool {
        self.bits[point]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Pointwise complement.
    pub fn complement(&self) -> Hypothesis {
        Hypothesis {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// A canonical, duplicate-free set of hypotheses over a shared domain.
///
/// Rows are sorted lexicographically, so two classes with the same extension
/// are structurally equal. The public constructor rejects empty classes;
/// [`ConceptClass::restrict`] may produce an empty class as a legitimate
/// intermediate value (checked with [`ConceptClass::is_empty`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptClass {
    domain: Domain,
    rows: Vec<Hypothesis>,
}

impl ConceptClass {
    pub fn new(domain: Domain, rows: Vec<Hypothesis>) -> Result<Self, ClassError> {
        if rows.is_empty() {
            return Err(ClassError::Empty);
        }
        for row in &rows {
            if row.len() != domain.size() {
                return Err(ClassError::RowLength {
                    expected: domain.size(),
                    actual: row.len(),
                });
            }
        }
        Ok(Self::canonical(domain, rows))
    }

    /// Build from `0`/`1` string rows; convenience for tests and small tables.
    pub fn from_bitstrings(rows: &[&str]) -> Result<Self, ClassError> {
        if rows.is_empty() {
            return Err(ClassError::Empty);
        }
        let n = rows[0].len();
        let domain = Domain::new(n)?;
        let mut hyps = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let h = Hypothesis::from_bitstring(r).ok_or_else(|| ClassError::Parse {
                line: i + 1,
                msg: format!("invalid bitstring {r:?}"),
            })?;
            hyps.push(h);
        }
        ConceptClass::new(domain, hyps)
    }

    fn canonical(domain: Domain, mut rows: Vec<Hypothesis>) -> Self {
        rows.sort();
        rows.dedup();
        ConceptClass { domain, rows }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn points(&self) -> usize {
        self.domain.size()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Hypothesis] {
        &self.rows
    }

    pub fn row(&self, idx: usize) -> &Hypothesis {
        &self.rows[idx]
    }

    /// Index of a row equal to `h`, if present.
    pub fn position(&self, h: &Hypothesis) -> Option<usize> {
        self.rows.binary_search(h).ok()
    }

    /// Close the class under pointwise complement. Idempotent.
    pub fn symmetrize(&self) -> ConceptClass {
        let mut rows = self.rows.clone();
        rows.extend(self.rows.iter().map(Hypothesis::complement));
        Self::canonical(self.domain.clone(), rows)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows
            .iter()
            .all(|h| self.position(&h.complement()).is_some())
    }

    /// Transpose the evaluation table and canonicalize.
    ///
    /// Points that act identically on every hypothesis collapse to a single
    /// dual hypothesis.
    pub fn dualize(&self) -> ConceptClass {
        self.dualize_with_points().0
    }

    /// Like [`ConceptClass::dualize`], but also reports, for each dual row,
    /// the lowest original point index realizing that column.
    pub fn dualize_with_points(&self) -> (ConceptClass, Vec<usize>) {
        let mut cols: Vec<(Hypothesis, usize)> = (0..self.points())
            .map(|x| {
                (
                    Hypothesis::new(self.rows.iter().map(|h| h.get(x)).collect()),
                    x,
                )
            })
            .collect();
        cols.sort();
        cols.dedup_by(|a, b| a.0 == b.0);
        let dual_domain = Domain::new(self.len()).expect("nonempty class");
        let (rows, witnesses): (Vec<_>, Vec<_>) = cols.into_iter().unzip();
        (
            ConceptClass {
                domain: dual_domain,
                rows,
            },
            witnesses,
        )
    }

    /// Keep only the hypotheses with `h(point) == label`. May be empty.
    pub fn restrict(&self, point: usize, label: bool) -> Result<ConceptClass, ClassError> {
        if point >= self.points() {
            return Err(ClassError::PointOutOfRange {
                point,
                size: self.points(),
            });
        }
        let rows = self
            .rows
            .iter()
            .filter(|h| h.get(point) == label)
            .cloned()
            .collect();
        // Filtering keeps the canonical order.
        Ok(ConceptClass {
            domain: self.domain.clone(),
            rows,
        })
    }

    fn check_caps(&self, caps: Caps) -> Result<(), ClassError> {
        if self.points() > caps.max_points {
            return Err(ClassError::SizeCap {
                what: "domain points",
                limit: caps.max_points,
                actual: self.points(),
            });
        }
        if self.len() > caps.max_rows {
            return Err(ClassError::SizeCap {
                what: "rows",
                limit: caps.max_rows,
                actual: self.len(),
            });
        }
        Ok(())
    }

    /// FNV-1a hash of the canonical table, as a hex string. Stable across
    /// runs; used to tie experiment outputs to the class they ran on.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |byte: u8| {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        for byte in format!("{} {}", self.points(), self.len()).bytes() {
            eat(byte);
        }
        for row in &self.rows {
            eat(b'\n');
            for &b in row.bits() {
                eat(b as u8);
            }
        }
        format!("{h:016x}")
    }
}

impl fmt::Display for ConceptClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.points(), self.len())?;
        for row in &self.rows {
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Class file format: header "n k", then k rows of n characters in {0,1}.
// ---------------------------------------------------------------------------

/// Parse the textual class format; validates, dedups, canonicalizes.
pub fn parse_class(text: &str) -> Result<ConceptClass, ClassError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(ClassError::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let mut it = header.split_whitespace();
    let n: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(ClassError::Parse {
            line: hline + 1,
            msg: "header must be \"n k\"".into(),
        })?;
    let k: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(ClassError::Parse {
            line: hline + 1,
            msg: "header must be \"n k\"".into(),
        })?;
    let domain = Domain::new(n)?;
    let mut rows = Vec::with_capacity(k);
    for _ in 0..k {
        let (lno, line) = lines.next().ok_or(ClassError::Parse {
            line: hline + 1,
            msg: format!("expected {k} rows"),
        })?;
        let line = line.trim();
        let h = Hypothesis::from_bitstring(line).ok_or_else(|| ClassError::Parse {
            line: lno + 1,
            msg: format!("invalid row {line:?}"),
        })?;
        if h.len() != n {
            return Err(ClassError::RowLength {
                expected: n,
                actual: h.len(),
            });
        }
        rows.push(h);
    }
    ConceptClass::new(domain, rows)
}

pub fn load_class(path: &Path) -> Result<ConceptClass, ClassError> {
    parse_class(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Dimensions
// ---------------------------------------------------------------------------

/// Exact Littlestone dimension.
///
/// Recursion: `ldim(H) = max` over points `p` whose two restrictions are both
/// nonempty of `1 + min(ldim(H|p,0), ldim(H|p,1))`, base 0 for singletons.
/// Memoized on the canonical row set.
pub fn littlestone_dimension(c: &ConceptClass) -> Result<usize, ClassError> {
    littlestone_dimension_with_caps(c, Caps::DEFAULT)
}

pub fn littlestone_dimension_with_caps(c: &ConceptClass, caps: Caps) -> Result<usize, ClassError> {
    if c.is_empty() {
        return Err(ClassError::Empty);
    }
    c.check_caps(caps)?;
    Ok(ldim_uncapped(c))
}

fn ldim_uncapped(c: &ConceptClass) -> usize {
    let all: Vec<u32> = (0..c.len() as u32).collect();
    let mut memo = HashMap::new();
    ldim_rec(c, &all, &mut memo)
}

fn ldim_rec(c: &ConceptClass, rows: &[u32], memo: &mut HashMap<Vec<u32>, usize>) -> usize {
    if rows.len() <= 1 {
        return 0;
    }
    if let Some(&d) = memo.get(rows) {
        return d;
    }
    let cap = usize::BITS as usize - 1 - rows.len().leading_zeros() as usize; // floor(log2 |rows|)
    let mut best = 0;
    for p in 0..c.points() {
        let (zeros, ones): (Vec<u32>, Vec<u32>) =
            rows.iter().partition(|&&r| !c.row(r as usize).get(p));
        if zeros.is_empty() || ones.is_empty() {
            continue;
        }
        let d = 1 + ldim_rec(c, &zeros, memo).min(ldim_rec(c, &ones, memo));
        if d > best {
            best = d;
            if best == cap {
                break;
            }
        }
    }
    memo.insert(rows.to_vec(), best);
    best
}

/// Exact VC dimension by subset enumeration, increasing in size with early
/// exit at the first size admitting no shattered set.
pub fn vc_dimension(c: &ConceptClass) -> Result<usize, ClassError> {
    vc_dimension_with_caps(c, Caps::DEFAULT)
}

pub fn vc_dimension_with_caps(c: &ConceptClass, caps: Caps) -> Result<usize, ClassError> {
    if c.is_empty() {
        return Err(ClassError::Empty);
    }
    c.check_caps(caps)?;
    let n = c.points();
    let log_rows = usize::BITS as usize - 1 - c.len().leading_zeros() as usize;
    let kmax = n.min(log_rows);
    let mut vc = 0;
    for k in 1..=kmax {
        if any_shattered_subset(c, k) {
            vc = k;
        } else {
            break;
        }
    }
    Ok(vc)
}

fn any_shattered_subset(c: &ConceptClass, k: usize) -> bool {
    let mut subset = vec![0usize; k];
    fn rec(
        c: &ConceptClass,
        subset: &mut Vec<usize>,
        depth: usize,
        start: usize,
        k: usize,
    ) -> bool {
        if depth == k {
            return is_shattered(c, subset);
        }
        for p in start..c.points() {
            subset[depth] = p;
            if rec(c, subset, depth + 1, p + 1, k) {
                return true;
            }
        }
        false
    }
    rec(c, &mut subset, 0, 0, k)
}

fn is_shattered(c: &ConceptClass, points: &[usize]) -> bool {
    let need = 1usize << points.len();
    if c.len() < need {
        return false;
    }
    let mut seen = vec![false; need];
    let mut count = 0;
    for row in c.rows() {
        let mut pat = 0usize;
        for (i, &p) in points.iter().enumerate() {
            if row.get(p) {
                pat |= 1 << i;
            }
        }
        if !seen[pat] {
            seen[pat] = true;
            count += 1;
            if count == need {
                return true;
            }
        }
    }
    false
}

/// Littlestone dimension of the transposed table.
pub fn dual_littlestone_dimension(c: &ConceptClass) -> Result<usize, ClassError> {
    dual_littlestone_dimension_with_caps(c, Caps::DEFAULT)
}

/// Caps are checked against the primal class; the transposed table swaps the
/// roles of rows and points, so its own shape is bounded by the same caps.
pub fn dual_littlestone_dimension_with_caps(
    c: &ConceptClass,
    caps: Caps,
) -> Result<usize, ClassError> {
    if c.is_empty() {
        return Err(ClassError::Empty);
    }
    c.check_caps(caps)?;
    let dual = c.dualize();
    let value = ldim_uncapped(&dual);
    debug_assert!(
        dual_ldim_bound(ldim_uncapped(c)).is_none_or(|b| (value as u128) <= b),
        "dual Littlestone dimension exceeds its double-exponential bound"
    );
    Ok(value)
}

/// Upper bound `2^(2^(ldim+2)) - 2` on the dual Littlestone dimension.
/// `None` when the bound exceeds `u128` (vacuously satisfied at any
/// representable class size).
pub fn dual_ldim_bound(ldim: usize) -> Option<u128> {
    let exp = 1u32.checked_shl(ldim as u32 + 2)?;
    if exp >= 128 {
        return None;
    }
    Some((1u128 << exp) - 2)
}

/// The three dimensions of a class, plus the double-exponential bound check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub vc: usize,
    pub ldim: usize,
    pub dual_ldim: usize,
}

impl DimensionReport {
    pub fn compute(c: &ConceptClass) -> Result<Self, ClassError> {
        Self::compute_with_caps(c, Caps::DEFAULT)
    }

    pub fn compute_with_caps(c: &ConceptClass, caps: Caps) -> Result<Self, ClassError> {
        Ok(DimensionReport {
            vc: vc_dimension_with_caps(c, caps)?,
            ldim: littlestone_dimension_with_caps(c, caps)?,
            dual_ldim: dual_littlestone_dimension_with_caps(c, caps)?,
        })
    }

    /// `dual_ldim <= 2^(2^(ldim+2)) - 2`.
    pub fn dual_bound_holds(&self) -> bool {
        dual_ldim_bound(self.ldim).is_none_or(|b| self.dual_ldim as u128 <= b)
    }
}

// ---------------------------------------------------------------------------
// Mistake trees
// ---------------------------------------------------------------------------

/// A complete binary decision tree over domain points, with a witness
/// hypothesis at every leaf realizing the labels along its path.
///
/// Nodes are stored in heap order (`children of i` at `2i+1`, `2i+2`); the
/// right child corresponds to label 1. Leaf `j` sits at the path whose label
/// bits spell `j` in binary, most significant bit at the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MistakeTree {
    depth: usize,
    points: Vec<usize>,
    leaves: Vec<usize>,
}

impl MistakeTree {
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Internal node labels in heap order; empty for a depth-0 tree.
    pub fn points(&self) -> &[usize] {
        &self.points
    }

    /// Witness hypothesis indices, one per leaf.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    /// The root-to-leaf path for leaf `j` as `(point, label)` pairs.
    pub fn path(&self, leaf: usize) -> Vec<(usize, bool)> {
        let mut out = Vec::with_capacity(self.depth);
        let mut node = 0usize;
        for level in 0..self.depth {
            let bit = (leaf >> (self.depth - 1 - level)) & 1 == 1;
            out.push((self.points[node], bit));
            node = 2 * node + 1 + bit as usize;
        }
        out
    }

    /// Check shape and that every leaf witness realizes its path.
    pub fn validate(&self, c: &ConceptClass) -> bool {
        if self.points.len() != (1usize << self.depth) - 1
            || self.leaves.len() != (1usize << self.depth)
        {
            return false;
        }
        if self.points.iter().any(|&p| p >= c.points()) {
            return false;
        }
        if self.leaves.iter().any(|&h| h >= c.len()) {
            return false;
        }
        (0..self.leaves.len()).all(|leaf| {
            let h = c.row(self.leaves[leaf]);
            self.path(leaf).iter().all(|&(p, y)| h.get(p) == y)
        })
    }
}

/// Search for a shattered complete tree of exactly the requested depth.
///
/// Returns a witness tree if one exists, i.e. iff `depth <= ldim(c)`.
pub fn shattered_tree(c: &ConceptClass, depth: usize) -> Result<Option<MistakeTree>, ClassError> {
    shattered_tree_with_caps(c, depth, Caps::DEFAULT)
}

pub fn shattered_tree_with_caps(
    c: &ConceptClass,
    depth: usize,
    caps: Caps,
) -> Result<Option<MistakeTree>, ClassError> {
    if c.is_empty() {
        return Err(ClassError::Empty);
    }
    c.check_caps(caps)?;
    let all: Vec<u32> = (0..c.len() as u32).collect();
    let mut points = vec![0usize; (1usize << depth) - 1];
    let mut leaves = vec![0usize; 1usize << depth];
    let mut dead: HashMap<(Vec<u32>, usize), ()> = HashMap::new();
    if build_tree(c, &all, depth, 0, 0, &mut points, &mut leaves, &mut dead) {
        let tree = MistakeTree {
            depth,
            points,
            leaves,
        };
        debug_assert!(tree.validate(c));
        Ok(Some(tree))
    } else {
        Ok(None)
    }
}

#[allow(clippy::too_many_arguments)]
fn build_tree(
    c: &ConceptClass,
    rows: &[u32],
    depth: usize,
    node: usize,
    leaf_base: usize,
    points: &mut [usize],
    leaves: &mut [usize],
    dead: &mut HashMap<(Vec<u32>, usize), ()>,
) -> bool {
    if rows.is_empty() {
        return false;
    }
    if depth == 0 {
        leaves[leaf_base] = rows[0] as usize; // lowest surviving row; deterministic
        return true;
    }
    if dead.contains_key(&(rows.to_vec(), depth)) {
        return false;
    }
    for p in 0..c.points() {
        let (zeros, ones): (Vec<u32>, Vec<u32>) =
            rows.iter().partition(|&&r| !c.row(r as usize).get(p));
        if zeros.is_empty() || ones.is_empty() {
            continue;
        }
        let half = 1usize << (depth - 1);
        if build_tree(
            c,
            &zeros,
            depth - 1,
            2 * node + 1,
            leaf_base,
            points,
            leaves,
            dead,
        ) && build_tree(
            c,
            &ones,
            depth - 1,
            2 * node + 2,
            leaf_base + half,
            points,
            leaves,
            dead,
        ) {
            points[node] = p;
            return true;
        }
    }
    dead.insert((rows.to_vec(), depth), ());
    false
}

// ---------------------------------------------------------------------------
// The class zoo
// ---------------------------------------------------------------------------

/// Named constructions used throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZooName {
    /// All `2^n` boolean functions over `n` points (construction cap `n <= 20`).
    Cube,
    /// The `n+1` monotone step functions over `n` ordered points.
    Thresholds,
    /// The `n` point indicators.
    Singletons,
    /// `n` cyclic arcs of length exactly `n/2` over `n` circle points,
    /// complement-closed by construction.
    HalfArcs,
    /// `k` distinct uniformly random rows, seeded.
    Random,
}

impl ZooName {
    pub fn parse(s: &str) -> Option<ZooName> {
        match s {
            "cube" => Some(ZooName::Cube),
            "thresholds" => Some(ZooName::Thresholds),
            "singletons" => Some(ZooName::Singletons),
            "half_arcs" => Some(ZooName::HalfArcs),
            "random" => Some(ZooName::Random),
            _ => None,
        }
    }
}

impl fmt::Display for ZooName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ZooName::Cube => "cube",
            ZooName::Thresholds => "thresholds",
            ZooName::Singletons => "singletons",
            ZooName::HalfArcs => "half_arcs",
            ZooName::Random => "random",
        };
        f.write_str(s)
    }
}

const CUBE_MAX: usize = 20;

/// Construct a zoo class. `k` and `seed` are only read by [`ZooName::Random`].
pub fn class_zoo(name: ZooName, n: usize, k: usize, seed: u64) -> Result<ConceptClass, ClassError> {
    if n == 0 {
        return Err(ClassError::ZeroPoints);
    }
    let domain = Domain::new(n)?;
    match name {
        ZooName::Cube => {
            if n > CUBE_MAX {
                return Err(ClassError::CubeTooLarge { n, max: CUBE_MAX });
            }
            let rows = (0..1usize << n)
                .map(|m| Hypothesis::new((0..n).map(|i| (m >> i) & 1 == 1).collect()))
                .collect();
            ConceptClass::new(domain, rows)
        }
        ZooName::Thresholds => {
            let rows = (0..=n)
                .map(|j| Hypothesis::new((0..n).map(|i| i >= j).collect()))
                .collect();
            ConceptClass::new(domain, rows)
        }
        ZooName::Singletons => {
            let rows = (0..n)
                .map(|j| Hypothesis::new((0..n).map(|i| i == j).collect()))
                .collect();
            ConceptClass::new(domain, rows)
        }
        ZooName::HalfArcs => {
            if !n.is_multiple_of(2) {
                return Err(ClassError::HalfArcsOdd { n });
            }
            let half = n / 2;
            let rows = (0..n)
                .map(|s| Hypothesis::new((0..n).map(|i| (i + n - s) % n < half).collect()))
                .collect();
            Ok(ConceptClass::new(domain, rows)?.symmetrize())
        }
        ZooName::Random => {
            use rand::Rng;
            use rand::SeedableRng;
            if n < usize::BITS as usize && k > 1usize << n {
                return Err(ClassError::RandomTooMany { k, n });
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut set = std::collections::BTreeSet::new();
            while set.len() < k {
                let bits: Vec<bool> = (0..n).map(|_| rng.gen::<bool>()).collect();
                set.insert(Hypothesis::new(bits));
            }
            ConceptClass::new(domain, set.into_iter().collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(n: usize) -> ConceptClass {
        class_zoo(ZooName::Cube, n, 0, 0).unwrap()
    }

    fn thresholds(n: usize) -> ConceptClass {
        class_zoo(ZooName::Thresholds, n, 0, 0).unwrap()
    }

    #[test]
    fn symmetrize_adds_complements() {
        let c = ConceptClass::from_bitstrings(&["10"]).unwrap();
        let s = c.symmetrize();
        assert_eq!(s, ConceptClass::from_bitstrings(&["10", "01"]).unwrap());
    }

    #[test]
    fn symmetrize_idempotent() {
        let c = ConceptClass::from_bitstrings(&["110", "001", "010"]).unwrap();
        let s = c.symmetrize();
        assert_eq!(s.symmetrize(), s);
        assert!(s.is_symmetric());
    }

    #[test]
    fn symmetrize_fixes_cube() {
        let c = cube(2);
        assert_eq!(c.symmetrize(), c);
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn dualize_identity_table() {
        let c = ConceptClass::from_bitstrings(&["10", "01"]).unwrap();
        assert_eq!(c.dualize(), c);
    }

    #[test]
    fn dualize_cube3_shape() {
        let d = cube(3).dualize();
        assert_eq!(d.points(), 8);
        assert_eq!(d.len(), 3);
    }

    #[test]
    fn dualize_thresholds_staircase() {
        // thresholds(4) rows sorted: 0000 0001 0011 0111 1111; columns are
        // the four distinct staircases below.
        let d = thresholds(4).dualize();
        let want = ConceptClass::from_bitstrings(&["00001", "00011", "00111", "01111"]).unwrap();
        assert_eq!(d, want);
    }

    #[test]
    fn dualize_twice_roundtrip() {
        // The double dual is the original table up to duplicate-column
        // removal and the point relabeling induced by canonical sorting.
        for c in [
            thresholds(5),
            cube(3),
            class_zoo(ZooName::HalfArcs, 6, 0, 0).unwrap(),
        ] {
            let (d1, cols) = c.dualize_with_points();
            let dd = d1.dualize();
            let expected: Vec<Hypothesis> = c
                .rows()
                .iter()
                .map(|row| Hypothesis::new(cols.iter().map(|&x| row.get(x)).collect()))
                .collect();
            let expected = ConceptClass::new(Domain::new(d1.len()).unwrap(), expected).unwrap();
            assert_eq!(dd, expected);
            assert_eq!(dd.len(), c.len());
        }
    }

    #[test]
    fn restrict_examples() {
        let c = cube(2);
        let r = c.restrict(0, true).unwrap();
        assert_eq!(r, ConceptClass::from_bitstrings(&["10", "11"]).unwrap());

        let single = ConceptClass::from_bitstrings(&["101"]).unwrap();
        assert_eq!(single.restrict(1, false).unwrap(), single);

        let t = thresholds(4).restrict(2, true).unwrap();
        assert_eq!(t.len(), 3);

        let empty = single.restrict(1, true).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn ldim_examples() {
        assert_eq!(littlestone_dimension(&cube(3)).unwrap(), 3);
        let single = ConceptClass::from_bitstrings(&["0110"]).unwrap();
        assert_eq!(littlestone_dimension(&single).unwrap(), 0);
        assert_eq!(littlestone_dimension(&thresholds(7)).unwrap(), 3);
    }

    #[test]
    fn ldim_empty_errors() {
        let c = ConceptClass::from_bitstrings(&["1"]).unwrap();
        let empty = c.restrict(0, false).unwrap();
        assert!(matches!(
            littlestone_dimension(&empty),
            Err(ClassError::Empty)
        ));
    }

    #[test]
    fn vc_examples() {
        assert_eq!(vc_dimension(&cube(3)).unwrap(), 3);
        let single = ConceptClass::from_bitstrings(&["0110"]).unwrap();
        assert_eq!(vc_dimension(&single).unwrap(), 0);
        assert_eq!(vc_dimension(&thresholds(7)).unwrap(), 1);
    }

    #[test]
    fn dual_ldim_examples() {
        let id = ConceptClass::from_bitstrings(&["10", "01"]).unwrap();
        assert_eq!(
            dual_littlestone_dimension(&id).unwrap(),
            littlestone_dimension(&id).unwrap()
        );
        assert_eq!(dual_littlestone_dimension(&cube(3)).unwrap(), 1);
        let t7 = thresholds(7);
        let report = DimensionReport::compute(&t7).unwrap();
        assert!(report.dual_bound_holds());
    }

    #[test]
    fn shattered_tree_witnesses() {
        for c in [
            cube(3),
            thresholds(7),
            class_zoo(ZooName::HalfArcs, 8, 0, 0).unwrap(),
        ] {
            let ld = littlestone_dimension(&c).unwrap();
            let t0 = shattered_tree(&c, 0).unwrap().unwrap();
            assert!(t0.validate(&c));
            let tree = shattered_tree(&c, ld).unwrap().unwrap();
            assert!(tree.validate(&c));
            assert!(shattered_tree(&c, ld + 1).unwrap().is_none());
        }
    }

    #[test]
    fn half_arcs_rows() {
        let c = class_zoo(ZooName::HalfArcs, 4, 0, 0).unwrap();
        assert_eq!(c.len(), 4);
        for row in c.rows() {
            assert_eq!(row.count_ones(), 2);
            // Cyclic contiguity: exactly two 01/10 boundaries around the circle.
            let b = row.bits();
            let switches = (0..4).filter(|&i| b[i] != b[(i + 1) % 4]).count();
            assert_eq!(switches, 2);
        }
        assert!(c.is_symmetric());
    }

    #[test]
    fn zoo_shapes_and_errors() {
        assert_eq!(cube(2).len(), 4);
        assert_eq!(thresholds(4).len(), 5);
        assert_eq!(class_zoo(ZooName::Singletons, 5, 0, 0).unwrap().len(), 5);
        assert!(matches!(
            class_zoo(ZooName::HalfArcs, 5, 0, 0),
            Err(ClassError::HalfArcsOdd { .. })
        ));
        assert!(matches!(
            class_zoo(ZooName::Random, 2, 5, 1),
            Err(ClassError::RandomTooMany { .. })
        ));
        assert!(matches!(
            class_zoo(ZooName::Cube, 21, 0, 0),
            Err(ClassError::CubeTooLarge { .. })
        ));
    }

    #[test]
    fn random_zoo_deterministic() {
        let a = class_zoo(ZooName::Random, 6, 10, 7).unwrap();
        let b = class_zoo(ZooName::Random, 6, 10, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
    }

    #[test]
    fn caps_guard_dimension_queries() {
        let c = cube(6);
        let caps = Caps {
            max_points: 24,
            max_rows: 32,
        };
        assert!(matches!(
            littlestone_dimension_with_caps(&c, caps),
            Err(ClassError::SizeCap { .. })
        ));
    }

    #[test]
    fn class_file_roundtrip() {
        let c = thresholds(4);
        let text = c.to_string();
        let back = parse_class(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.fingerprint(), c.fingerprint());
    }

    #[test]
    fn class_file_rejects_garbage() {
        assert!(parse_class("").is_err());
        assert!(parse_class("2 1\n1x").is_err());
        assert!(parse_class("3 2\n111").is_err());
        assert!(parse_class("2 2\n111\n000").is_err());
    }

    #[test]
    fn symmetrization_preserves_dual_dimension() {
        // Adding complements changes neither the game nor the transposed
        // table's Littlestone dimension.
        let classes = vec![
            thresholds(4),
            thresholds(6),
            class_zoo(ZooName::Singletons, 4, 0, 0).unwrap(),
            class_zoo(ZooName::HalfArcs, 6, 0, 0).unwrap(),
            class_zoo(ZooName::Random, 5, 9, 2).unwrap(),
            class_zoo(ZooName::Random, 6, 14, 8).unwrap(),
            cube(3),
        ];
        for c in classes {
            let plain = dual_littlestone_dimension(&c).unwrap();
            let sym = dual_littlestone_dimension(&c.symmetrize()).unwrap();
            assert_eq!(plain, sym, "class {c}");
        }
    }

    #[test]
    fn dimension_sandwich_across_the_zoo() {
        // vc <= ldim <= log2(rows) for every zoo construction.
        let zoo = vec![
            cube(2),
            cube(3),
            thresholds(3),
            thresholds(7),
            class_zoo(ZooName::Singletons, 3, 0, 0).unwrap(),
            class_zoo(ZooName::Singletons, 5, 0, 0).unwrap(),
            class_zoo(ZooName::HalfArcs, 4, 0, 0).unwrap(),
            class_zoo(ZooName::HalfArcs, 8, 0, 0).unwrap(),
            class_zoo(ZooName::Random, 6, 20, 11).unwrap(),
            class_zoo(ZooName::Random, 5, 12, 3).unwrap(),
        ];
        for c in zoo {
            let vc = vc_dimension(&c).unwrap();
            let ld = littlestone_dimension(&c).unwrap();
            assert!(vc <= ld, "vc {vc} > ldim {ld} for {c}");
            assert!(
                (ld as f64) <= (c.len() as f64).log2() + 1e-9,
                "ldim {ld} above log2 of {} rows",
                c.len()
            );
        }
    }

    #[test]
    fn dual_witnesses_point_back() {
        let c = thresholds(4);
        let (dual, points) = c.dualize_with_points();
        for (i, &x) in points.iter().enumerate() {
            let col: Vec<bool> = c.rows().iter().map(|h| h.get(x)).collect();
            assert_eq!(dual.row(i).bits(), col.as_slice());
        }
    }
}
