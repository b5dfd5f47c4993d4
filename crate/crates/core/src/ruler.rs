//! Circular sparse ruler algebra over coset patterns.
//!
//! A coset pattern is a set of marks in `{0, .., N-1}`. Its modular
//! difference set decides which correlation lags the pattern can measure:
//! a pattern whose differences cover every residue mod `N` is a complete
//! circular sparse ruler, and a pattern whose nonzero differences are all
//! distinct is a circular Golomb ruler. Banks of patterns are judged by the
//! union of their difference sets.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// The set of coset indices one sensor group keeps within a period of `N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CosetPattern {
    period_n: usize,
    marks: Vec<usize>,
}

impl CosetPattern {
    /// Builds a pattern from marks in `[0, period_n)`. Marks may arrive in
    /// any order; duplicates and out-of-range values are rejected.
    pub fn new(period_n: usize, mut marks: Vec<usize>) -> Result<Self> {
        if period_n == 0 {
            return Err(Error::PeriodTooSmall { min: 1, got: 0 });
        }
        if marks.is_empty() {
            return Err(Error::InvalidPattern("no marks".into()));
        }
        marks.sort_unstable();
        if marks.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPattern(format!(
                "duplicate marks in {marks:?}"
            )));
        }
        if *marks.last().unwrap() >= period_n {
            return Err(Error::InvalidPattern(format!(
                "mark {} out of range for N={period_n}",
                marks.last().unwrap()
            )));
        }
        Ok(Self { period_n, marks })
    }

    /// The pattern keeping every coset, `{0, .., N-1}`.
    pub fn full(period_n: usize) -> Result<Self> {
        Self::new(period_n, (0..period_n).collect())
    }

    pub fn period_n(&self) -> usize {
        self.period_n
    }

    /// Marks in strictly increasing order.
    pub fn marks(&self) -> &[usize] {
        &self.marks
    }

    /// Number of marks `M`.
    pub fn num_marks(&self) -> usize {
        self.marks.len()
    }

    /// All pairwise modular differences `(a - b) mod N`, self-pairs included.
    pub fn difference_set(&self) -> DifferenceSet {
        let n = self.period_n;
        let mut member = vec![false; n];
        for &a in &self.marks {
            for &b in &self.marks {
                member[(n + a - b) % n] = true;
            }
        }
        DifferenceSet {
            period_n: n,
            member,
        }
    }

    /// True iff the difference set is all of `{0, .., N-1}`.
    pub fn is_complete_circular_ruler(&self) -> bool {
        self.difference_set().len() == self.period_n
    }

    /// True iff some residue mod `N` is not a pairwise difference.
    pub fn is_incomplete_circular_ruler(&self) -> bool {
        !self.is_complete_circular_ruler()
    }

    /// True iff every nonzero modular difference arises from exactly one
    /// ordered pair of marks, i.e. the difference set has the maximal size
    /// `M(M-1) + 1`.
    pub fn is_circular_golomb(&self) -> bool {
        let n = self.period_n;
        let mut count = vec![0usize; n];
        for &a in &self.marks {
            for &b in &self.marks {
                if a != b {
                    let d = (n + a - b) % n;
                    count[d] += 1;
                    if count[d] > 1 {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Membership bitmap of the modular difference set of a pattern, or of a
/// union of pattern difference sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceSet {
    period_n: usize,
    member: Vec<bool>,
}

impl DifferenceSet {
    pub fn period_n(&self) -> usize {
        self.period_n
    }

    pub fn contains(&self, distance: usize) -> bool {
        distance < self.period_n && self.member[distance]
    }

    pub fn len(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Members in increasing order.
    pub fn members(&self) -> Vec<usize> {
        (0..self.period_n).filter(|&d| self.member[d]).collect()
    }
}

/// The `Z` patterns shared by the whole network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RulerBank {
    period_n: usize,
    marks_per_pattern: usize,
    patterns: Vec<CosetPattern>,
}

impl RulerBank {
    /// Builds a bank; all patterns must share `period_n` and have the same
    /// number of marks.
    pub fn new(patterns: Vec<CosetPattern>) -> Result<Self> {
        let first = patterns
            .first()
            .ok_or(Error::InvalidBank("no patterns".into()))?;
        let period_n = first.period_n();
        let marks_per_pattern = first.num_marks();
        for (z, p) in patterns.iter().enumerate() {
            if p.period_n() != period_n {
                return Err(Error::InvalidBank(format!(
                    "pattern {z} has N={}, expected {period_n}",
                    p.period_n()
                )));
            }
            if p.num_marks() != marks_per_pattern {
                return Err(Error::InvalidBank(format!(
                    "pattern {z} has {} marks, expected {marks_per_pattern}",
                    p.num_marks()
                )));
            }
        }
        Ok(Self {
            period_n,
            marks_per_pattern,
            patterns,
        })
    }

    pub fn period_n(&self) -> usize {
        self.period_n
    }

    /// Marks per pattern, `M`.
    pub fn marks_per_pattern(&self) -> usize {
        self.marks_per_pattern
    }

    /// Number of patterns, `Z`.
    pub fn num_patterns(&self) -> usize {
        self.patterns.len()
    }

    pub fn patterns(&self) -> &[CosetPattern] {
        &self.patterns
    }

    /// True iff the difference sets of the patterns pairwise intersect only
    /// in `{0}`, i.e. no nonzero distance is measured by two patterns.
    /// Requires at least two patterns.
    pub fn are_non_overlapping(&self) -> Result<bool> {
        if self.patterns.len() < 2 {
            return Err(Error::InvalidBank(
                "non-overlap needs at least two patterns".into(),
            ));
        }
        let n = self.period_n;
        let mut seen = vec![false; n];
        for p in &self.patterns {
            let omega = p.difference_set();
            for (d, s) in seen.iter_mut().enumerate().skip(1) {
                if omega.contains(d) {
                    if *s {
                        return Ok(false);
                    }
                    *s = true;
                }
            }
        }
        Ok(true)
    }

    /// Whether the union of the difference sets is all of `{0, .., N-1}`,
    /// together with the distances still missing.
    pub fn union_covers(&self) -> (bool, Vec<usize>) {
        let union = self.union_difference_set();
        let missing: Vec<usize> = (0..self.period_n)
            .filter(|&d| !union.contains(d))
            .collect();
        (missing.is_empty(), missing)
    }

    /// Union of the per-pattern difference sets.
    pub fn union_difference_set(&self) -> DifferenceSet {
        let n = self.period_n;
        let mut member = vec![false; n];
        for p in &self.patterns {
            for (d, m) in p.difference_set().member.iter().enumerate() {
                member[d] |= m;
            }
        }
        DifferenceSet {
            period_n: n,
            member,
        }
    }
}

/// Minimal number of patterns that could cover all `N - 1` nonzero
/// distances with `M` marks each: `ceil((N-1) / (M(M-1)))`.
pub fn lower_bound_z(n: usize, m: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::PeriodTooSmall { min: 2, got: n });
    }
    if m < 2 {
        return Err(Error::TooFewMarks { min: 2, got: m });
    }
    if m > n {
        return Err(Error::InvalidPattern(format!("M={m} exceeds N={n}")));
    }
    Ok((n - 1).div_ceil(m * (m - 1)))
}
