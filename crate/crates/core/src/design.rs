//! Ruler bank construction: how few patterns of `M` marks cover all `N`
//! integer distances.
//!
//! For `M = 2` the analytic pair construction reaches the lower bound
//! `ceil((N-1)/2)` exactly. For `M >= 3` a greedy search seeds each pattern
//! with `{0, z+1}` and fills the remaining marks from unused coset indices,
//! maximizing newly covered distances. The greedy is not guaranteed to
//! reach `ceil((N-1)/(M(M-1)))`; when it overshoots and a certified
//! minimal bank for `(N, M)` is bundled, that bank is returned instead.

use crate::ruler::{lower_bound_z, CosetPattern, RulerBank};
use crate::{par, Error, Result};
use std::sync::OnceLock;

/// One greedy decision: a mark added to a pattern and how many previously
/// uncovered distances it brought in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyStep {
    pub pattern_index: usize,
    pub chosen_mark: usize,
    pub newly_covered: usize,
}

/// Outcome of a design or verification run.
#[derive(Debug, Clone)]
pub struct DesignReport {
    pub bank: RulerBank,
    pub achieved_z: usize,
    pub lower_bound: usize,
    pub per_pattern_golomb: Vec<bool>,
    /// `None` for single-pattern banks, where pairwise overlap is undefined.
    pub non_overlapping: Option<bool>,
    pub covered: bool,
    pub missing: Vec<usize>,
    pub greedy_trace: Vec<GreedyStep>,
}

/// Recomputes every bank-level property without mutating the bank.
pub fn verify_bank(bank: &RulerBank) -> Result<DesignReport> {
    let lower_bound = lower_bound_z(bank.period_n(), bank.marks_per_pattern())?;
    let per_pattern_golomb = bank.patterns().iter().map(|p| p.is_circular_golomb()).collect();
    let non_overlapping = if bank.num_patterns() >= 2 {
        Some(bank.are_non_overlapping()?)
    } else {
        None
    };
    let (covered, missing) = bank.union_covers();
    Ok(DesignReport {
        bank: bank.clone(),
        achieved_z: bank.num_patterns(),
        lower_bound,
        per_pattern_golomb,
        non_overlapping,
        covered,
        missing,
        greedy_trace: Vec::new(),
    })
}

/// Analytic `M = 2` construction reaching `Z = ceil((N-1)/2)`.
///
/// Odd `N`: the pairs `{0, z+1}` for `z = 0..(N-1)/2`. Even `N`: the same
/// pairs up to `{0, N/2 - 1}` plus the final pair `{0, N/2}`, whose single
/// distance is its own negation.
pub fn design_m2(n: usize) -> Result<DesignReport> {
    if n < 3 {
        return Err(Error::PeriodTooSmall { min: 3, got: n });
    }
    let z = if n % 2 == 1 { (n - 1) / 2 } else { n / 2 };
    let patterns: Vec<CosetPattern> = (0..z)
        .map(|i| CosetPattern::new(n, vec![0, i + 1]))
        .collect::<Result<_>>()?;
    let bank = RulerBank::new(patterns)?;
    verify_bank(&bank)
}

/// Incremental coverage tracker for one pattern under construction.
struct PatternBuilder<'a> {
    n: usize,
    marks: Vec<usize>,
    covered: &'a mut Vec<bool>,
}

impl<'a> PatternBuilder<'a> {
    fn new(n: usize, covered: &'a mut Vec<bool>) -> Self {
        Self {
            n,
            marks: Vec::new(),
            covered,
        }
    }

    /// Distances `{±(w - x) mod N}` over current marks that are not yet in
    /// the union, were `w` added now.
    fn gain(&self, w: usize) -> usize {
        let n = self.n;
        let mut fresh = vec![];
        for &x in &self.marks {
            for d in [(n + w - x) % n, (n + x - w) % n] {
                if !self.covered[d] && !fresh.contains(&d) {
                    fresh.push(d);
                }
            }
        }
        fresh.len()
    }

    fn add(&mut self, w: usize) -> usize {
        let n = self.n;
        let mut newly = 0;
        for &x in &self.marks {
            for d in [(n + w - x) % n, (n + x - w) % n] {
                if !self.covered[d] {
                    self.covered[d] = true;
                    newly += 1;
                }
            }
        }
        self.marks.push(w);
        newly
    }
}

/// Greedy bank construction for arbitrary `M`.
///
/// Pattern `z` is seeded with `{0, z+1}`; its remaining marks are picked
/// greedily among coset indices unused by any pattern so far, maximizing
/// the number of distances added to the union (smallest index on ties,
/// falling back to the full index set when the unused pool is exhausted or
/// gains nothing). Patterns are appended until the union covers all `N`
/// distances. When the result exceeds the lower bound and a certified
/// minimal bank is bundled for `(N, M)`, the certified bank is returned.
pub fn design_greedy(n: usize, m: usize) -> Result<DesignReport> {
    let lower_bound = lower_bound_z(n, m)?;
    let mut covered = vec![false; n];
    covered[0] = true;
    let mut used = vec![false; n];
    let mut patterns: Vec<CosetPattern> = Vec::new();
    let mut trace: Vec<GreedyStep> = Vec::new();

    let mut z = 0;
    while covered.iter().any(|&c| !c) {
        // The pair construction alone finishes by z = ceil((N-1)/2) - 1,
        // so the seed index below stays in range.
        assert!(z + 1 < n, "greedy failed to terminate");
        let mut builder = PatternBuilder::new(n, &mut covered);
        for seed in [0, z + 1] {
            let newly = builder.add(seed);
            used[seed] = true;
            trace.push(GreedyStep {
                pattern_index: z,
                chosen_mark: seed,
                newly_covered: newly,
            });
        }
        for _ in 2..m {
            let unused: Vec<usize> = (0..n)
                .filter(|&w| !used[w] && !builder.marks.contains(&w))
                .collect();
            let pick = best_candidate(&builder, &unused).filter(|&(_, g)| g > 0);
            let pick = match pick {
                Some(p) => Some(p),
                None => {
                    let any: Vec<usize> =
                        (0..n).filter(|&w| !builder.marks.contains(&w)).collect();
                    best_candidate(&builder, &any)
                }
            };
            let (w, _) = pick.ok_or_else(|| {
                Error::InvalidPattern(format!("cannot place {m} marks in a period of {n}"))
            })?;
            let newly = builder.add(w);
            used[w] = true;
            trace.push(GreedyStep {
                pattern_index: z,
                chosen_mark: w,
                newly_covered: newly,
            });
        }
        let marks = builder.marks.clone();
        patterns.push(CosetPattern::new(n, marks)?);
        z += 1;
    }

    let bank = RulerBank::new(patterns)?;
    if bank.num_patterns() > lower_bound {
        if let Some(certified) = certified_bank(n, m) {
            return verify_bank(certified);
        }
    }
    let mut report = verify_bank(&bank)?;
    report.greedy_trace = trace;
    Ok(report)
}

/// Builds a bank with exactly `z` patterns of `m` marks, seeding each
/// pattern with `{0, z_i + 1}` and filling remaining marks round-robin by
/// greedy coverage gain. The sweep harness uses this to grow `M` while
/// keeping the number of groups fixed; coverage is reported, not enforced.
pub fn design_fixed_z(n: usize, m: usize, z: usize) -> Result<DesignReport> {
    lower_bound_z(n, m)?;
    if z == 0 || z + 1 > n {
        return Err(Error::InvalidBank(format!(
            "cannot seed {z} patterns in a period of {n}"
        )));
    }
    if let Some(certified) = certified_bank(n, m) {
        if certified.num_patterns() == z {
            return verify_bank(certified);
        }
    }

    let mut covered = vec![false; n];
    covered[0] = true;
    let mut used = vec![false; n];
    let mut marks_per: Vec<Vec<usize>> = (0..z)
        .map(|i| {
            used[0] = true;
            used[i + 1] = true;
            vec![0, i + 1]
        })
        .collect();
    for marks in &marks_per {
        let mut builder = PatternBuilder::new(n, &mut covered);
        for &w in marks {
            builder.add(w);
        }
    }
    for _round in 2..m {
        for marks in marks_per.iter_mut() {
            let mut builder = PatternBuilder::new(n, &mut covered);
            builder.marks = std::mem::take(marks);
            let unused: Vec<usize> = (0..n)
                .filter(|&w| !used[w] && !builder.marks.contains(&w))
                .collect();
            let pick = best_candidate(&builder, &unused).filter(|&(_, g)| g > 0);
            let pick = match pick {
                Some(p) => Some(p),
                None => {
                    let any: Vec<usize> =
                        (0..n).filter(|&w| !builder.marks.contains(&w)).collect();
                    best_candidate(&builder, &any)
                }
            };
            let (w, _) = pick.ok_or_else(|| {
                Error::InvalidPattern(format!("cannot place {m} marks in a period of {n}"))
            })?;
            builder.add(w);
            used[w] = true;
            *marks = std::mem::take(&mut builder.marks);
        }
    }
    let patterns: Vec<CosetPattern> = marks_per
        .into_iter()
        .map(|marks| CosetPattern::new(n, marks))
        .collect::<Result<_>>()?;
    verify_bank(&RulerBank::new(patterns)?)
}

/// Highest-gain candidate, smallest index on ties.
fn best_candidate(builder: &PatternBuilder, candidates: &[usize]) -> Option<(usize, usize)> {
    let gains = par::map_slice(candidates, |&w| builder.gain(w));
    candidates
        .iter()
        .zip(gains)
        .map(|(&w, g)| (w, g))
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
}

const TABLE2_DATA: &str = include_str!("../data/table2_rulers.txt");

static TABLE2: OnceLock<Vec<RulerBank>> = OnceLock::new();

/// Bundled minimal `M = 3` banks (one per period), parsed from the vendored
/// data file.
pub fn table2_banks() -> &'static [RulerBank] {
    TABLE2.get_or_init(|| {
        crate::io::parse_banks(TABLE2_DATA).expect("bundled ruler table must parse")
    })
}

/// The raw text of the bundled ruler table.
pub fn table2_data() -> &'static str {
    TABLE2_DATA
}

/// A bundled minimal bank for `(N, M)`, if one exists.
pub fn certified_bank(n: usize, m: usize) -> Option<&'static RulerBank> {
    table2_banks()
        .iter()
        .find(|b| b.period_n() == n && b.marks_per_pattern() == m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn m2_examples() {
        let r = design_m2(5).unwrap();
        assert_eq!(r.achieved_z, 2);
        assert!(r.covered);
        let marks: Vec<_> = r.bank.patterns().iter().map(|p| p.marks().to_vec()).collect();
        assert_eq!(marks, vec![vec![0, 1], vec![0, 2]]);

        let r = design_m2(4).unwrap();
        assert_eq!(r.achieved_z, 2);
        assert!(r.covered);
        let marks: Vec<_> = r.bank.patterns().iter().map(|p| p.marks().to_vec()).collect();
        assert_eq!(marks, vec![vec![0, 1], vec![0, 2]]);

        let r = design_m2(3).unwrap();
        assert_eq!(r.achieved_z, 1);
        assert!(r.covered);

        assert!(design_m2(2).is_err());
    }

    #[test]
    fn m2_reaches_bound_up_to_200() {
        for n in 3..=200 {
            let r = design_m2(n).unwrap();
            assert!(r.covered, "N={n} not covered");
            assert_eq!(r.achieved_z, (n - 1).div_ceil(2), "N={n}");
            assert_eq!(r.achieved_z, r.lower_bound, "N={n}");
        }
    }

    #[test]
    fn greedy_hits_bound_at_operating_point() {
        let r = design_greedy(103, 3).unwrap();
        assert!(r.covered);
        assert_eq!(r.achieved_z, 17);
        assert_eq!(r.lower_bound, 17);
    }

    #[test]
    fn greedy_covers_43() {
        let r = design_greedy(43, 3).unwrap();
        assert!(r.covered);
        assert_eq!(r.achieved_z, 7);
    }

    #[test]
    fn greedy_trivial() {
        let r = design_greedy(3, 2).unwrap();
        assert!(r.covered);
        assert_eq!(r.achieved_z, 1);
        assert_eq!(r.bank.patterns()[0].marks(), &[0, 1]);
    }

    #[test]
    fn verify_examples() {
        let row49 = certified_bank(49, 3).unwrap();
        let r = verify_bank(row49).unwrap();
        assert!(r.covered);
        assert!(r.per_pattern_golomb.iter().all(|&g| g));
        assert_eq!(r.non_overlapping, Some(true));

        let bank = RulerBank::new(vec![CosetPattern::new(5, vec![0, 1]).unwrap()]).unwrap();
        let r = verify_bank(&bank).unwrap();
        assert!(!r.covered);
        assert!(r.missing.contains(&2));

        let full = RulerBank::new(vec![CosetPattern::full(5).unwrap()]).unwrap();
        let r = verify_bank(&full).unwrap();
        assert!(r.covered);
        assert!(!r.per_pattern_golomb[0]);
    }

    #[test]
    fn verify_rejects_single_mark_banks() {
        let bank = RulerBank::new(vec![CosetPattern::new(5, vec![2]).unwrap()]).unwrap();
        assert!(verify_bank(&bank).is_err());
    }

    #[test]
    fn table2_rows_are_minimal() {
        let banks = table2_banks();
        assert_eq!(banks.len(), 13);
        for bank in banks {
            let n = bank.period_n();
            assert_eq!(bank.num_patterns(), (n - 1).div_ceil(6), "N={n}");
        }
    }

    #[test]
    fn fixed_z_grows_m_with_constant_groups() {
        for m in [3, 5, 11] {
            let r = design_fixed_z(103, m, 17).unwrap();
            assert_eq!(r.achieved_z, 17);
            assert_eq!(r.bank.marks_per_pattern(), m);
            assert!(r.covered, "M={m} bank must cover");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn greedy_always_covers(m in 2usize..=6, n_extra in 0usize..=40) {
            let n = m * (m - 1) + 1 + n_extra;
            prop_assume!(n <= 60);
            let r = design_greedy(n, m).unwrap();
            prop_assert!(r.covered);
            // never worse than the pair decomposition
            prop_assert!(r.achieved_z <= (n - 1).div_ceil(2));
        }
    }
}
