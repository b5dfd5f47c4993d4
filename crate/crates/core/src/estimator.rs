//! Per-sensor compression and unbiased sample correlation estimation.
//!
//! A sensor's Nyquist stream is cut into `L` blocks of `N` samples;
//! compression keeps the entries at the group's coset indices. The group
//! then averages `y^(m)[l'] y^(m')*[l' - l]` over blocks and sensors at
//! lags 0 and 1, which is all the fusion centre needs for lags up to
//! `N - 1` in magnitude. Negative lags come from conjugation, never from a
//! second pass.

use crate::ruler::{CosetPattern, RulerBank};
use crate::system::AutocorrelationVector;
use crate::{par, Error, Result};
use num_complex::Complex64;

/// `L` blocks of `N` Nyquist-rate samples from one sensor.
#[derive(Debug, Clone)]
pub struct SensorBlockSeries {
    pub group: usize,
    pub sensor: usize,
    block_len: usize,
    samples: Vec<Complex64>,
}

impl SensorBlockSeries {
    /// Takes exactly `blocks * block_len` samples; at least two blocks.
    pub fn new(
        group: usize,
        sensor: usize,
        block_len: usize,
        blocks: usize,
        samples: Vec<Complex64>,
    ) -> Result<Self> {
        if block_len == 0 {
            return Err(Error::PeriodTooSmall { min: 1, got: 0 });
        }
        if blocks < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 blocks, got {blocks}"
            )));
        }
        if samples.len() != blocks * block_len {
            return Err(Error::DimensionMismatch(format!(
                "{} samples cannot form {blocks} blocks of {block_len}",
                samples.len()
            )));
        }
        Ok(Self {
            group,
            sensor,
            block_len,
            samples,
        })
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn num_blocks(&self) -> usize {
        self.samples.len() / self.block_len
    }

    pub fn block(&self, l: usize) -> &[Complex64] {
        &self.samples[l * self.block_len..(l + 1) * self.block_len]
    }
}

/// The compressed `L x M` series of one sensor: entry `(l, m)` is the
/// block-`l` sample at the group's `m`-th coset index.
#[derive(Debug, Clone)]
pub struct CompressedSeries {
    pub group: usize,
    pub sensor: usize,
    num_marks: usize,
    samples: Vec<Complex64>,
}

impl CompressedSeries {
    pub fn num_marks(&self) -> usize {
        self.num_marks
    }

    pub fn num_blocks(&self) -> usize {
        self.samples.len() / self.num_marks
    }

    pub fn at(&self, block: usize, mark: usize) -> Complex64 {
        self.samples[block * self.num_marks + mark]
    }

    /// Column `m` across all blocks.
    fn coset_sequence(&self, mark: usize) -> Vec<Complex64> {
        (0..self.num_blocks()).map(|l| self.at(l, mark)).collect()
    }
}

/// Pure row selection of the pattern's coset indices from each block.
pub fn compress(blocks: &SensorBlockSeries, pattern: &CosetPattern) -> Result<CompressedSeries> {
    if blocks.block_len() != pattern.period_n() {
        return Err(Error::DimensionMismatch(format!(
            "block length {} does not match pattern period {}",
            blocks.block_len(),
            pattern.period_n()
        )));
    }
    let mut samples = Vec::with_capacity(blocks.num_blocks() * pattern.num_marks());
    for l in 0..blocks.num_blocks() {
        let block = blocks.block(l);
        samples.extend(pattern.marks().iter().map(|&n| block[n]));
    }
    Ok(CompressedSeries {
        group: blocks.group,
        sensor: blocks.sensor,
        num_marks: pattern.num_marks(),
        samples,
    })
}

/// Sum of `a[i] * conj(b[i])` with pairwise (tree) reduction, so long
/// accumulations stay accurate and the reduction order is fixed.
fn pairwise_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= 64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            acc += x * y.conj();
        }
        acc
    } else {
        let mid = a.len() / 2;
        pairwise_dot(&a[..mid], &b[..mid]) + pairwise_dot(&a[mid..], &b[mid..])
    }
}

/// Unbiased pair correlation estimates at lag `l` (0 or 1) for one group:
/// `r̂^(m,m')[l] = (1/(P(L-l))) Σ_p Σ_{l'=l}^{L-1} y^(m)[l'] y^(m')*[l'-l]`,
/// returned as the full `M x M` matrix indexed `[m][m']`.
pub fn sample_correlations(
    series: &[CompressedSeries],
    lag: usize,
) -> Result<Vec<Vec<Complex64>>> {
    if series.is_empty() {
        return Err(Error::EmptyInput("sensor series"));
    }
    if lag > 1 {
        return Err(Error::InvalidConfig(format!(
            "only lags 0 and 1 are estimated, got {lag}"
        )));
    }
    let m_count = series[0].num_marks();
    let blocks = series[0].num_blocks();
    for s in series {
        if s.num_marks() != m_count || s.num_blocks() != blocks {
            return Err(Error::DimensionMismatch(
                "all sensors of a group must share pattern and block count".into(),
            ));
        }
    }
    if blocks <= lag {
        return Err(Error::InvalidConfig(format!(
            "lag {lag} needs more than {lag} blocks, got {blocks}"
        )));
    }

    // Per-sensor partial sums are independent; the cross-sensor reduction
    // runs in sensor order.
    let partials = par::map_slice(series, |s| {
        let cosets: Vec<Vec<Complex64>> = (0..m_count).map(|m| s.coset_sequence(m)).collect();
        let mut sums = vec![vec![Complex64::new(0.0, 0.0); m_count]; m_count];
        for (m, row) in sums.iter_mut().enumerate() {
            for (mp, entry) in row.iter_mut().enumerate() {
                *entry = pairwise_dot(&cosets[m][lag..], &cosets[mp][..blocks - lag]);
            }
        }
        sums
    });

    let scale = 1.0 / (series.len() as f64 * (blocks - lag) as f64);
    let mut out = vec![vec![Complex64::new(0.0, 0.0); m_count]; m_count];
    for partial in partials {
        for (m, row) in partial.iter().enumerate() {
            for (mp, v) in row.iter().enumerate() {
                out[m][mp] += v;
            }
        }
    }
    for row in &mut out {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    Ok(out)
}

/// One group's stacked correlation estimates in fusion-centre order.
#[derive(Debug, Clone)]
pub struct GroupCorrelations {
    pub group: usize,
    zero_lag: Vec<f64>,
    plus_zero_lag: Vec<Complex64>,
    minus_lag_one: Vec<Complex64>,
    pub sensors: usize,
    pub blocks: usize,
}

impl GroupCorrelations {
    /// Per-coset zero-lag autocorrelations `r̂^(m,m)[0]`, all real.
    pub fn zero_lag(&self) -> &[f64] {
        &self.zero_lag
    }

    /// `r̂^(m,m')[0]` for `m > m'`, ordered by `(m', m)`.
    pub fn plus_zero_lag(&self) -> &[Complex64] {
        &self.plus_zero_lag
    }

    /// `r̂^(m,m')[1]` for `m < m'`, ordered by `(m, m')`.
    pub fn minus_lag_one(&self) -> &[Complex64] {
        &self.minus_lag_one
    }
}

/// Stacks full lag-0 and lag-1 pair matrices into the fixed fusion-centre
/// ordering that matches the system row map.
#[allow(clippy::needless_range_loop)] // the (m', m) index pairing is the point
pub fn stack_group(
    group: usize,
    lag0: &[Vec<Complex64>],
    lag1: &[Vec<Complex64>],
    sensors: usize,
    blocks: usize,
) -> GroupCorrelations {
    let m_count = lag0.len();
    let zero_lag = (0..m_count).map(|m| lag0[m][m].re).collect();
    let mut plus_zero_lag = Vec::with_capacity(m_count * (m_count - 1) / 2);
    for mp in 0..m_count {
        for m in (mp + 1)..m_count {
            plus_zero_lag.push(lag0[m][mp]);
        }
    }
    let mut minus_lag_one = Vec::with_capacity(m_count * (m_count - 1) / 2);
    for m in 0..m_count {
        for mp in (m + 1)..m_count {
            minus_lag_one.push(lag1[m][mp]);
        }
    }
    GroupCorrelations {
        group,
        zero_lag,
        plus_zero_lag,
        minus_lag_one,
        sensors,
        blocks,
    }
}

/// Sample correlations at both lags, stacked. Computes only the entries
/// the fusion centre consumes: the lag-0 diagonal and lower triangle and
/// the lag-1 upper triangle. Equivalent to [`sample_correlations`] at both
/// lags followed by [`stack_group`]; the redundant mirror entries are
/// exact conjugates and never materialized.
pub fn estimate_group(series: &[CompressedSeries]) -> Result<GroupCorrelations> {
    if series.is_empty() {
        return Err(Error::EmptyInput("sensor series"));
    }
    let m_count = series[0].num_marks();
    let blocks = series[0].num_blocks();
    for s in series {
        if s.num_marks() != m_count || s.num_blocks() != blocks {
            return Err(Error::DimensionMismatch(
                "all sensors of a group must share pattern and block count".into(),
            ));
        }
    }
    if blocks < 2 {
        return Err(Error::InvalidConfig(format!(
            "lag 1 needs at least 2 blocks, got {blocks}"
        )));
    }
    let pair_count = m_count * (m_count - 1) / 2;

    let partials = par::map_slice(series, |s| {
        let cosets: Vec<Vec<Complex64>> = (0..m_count).map(|m| s.coset_sequence(m)).collect();
        let diag: Vec<Complex64> = (0..m_count)
            .map(|m| pairwise_dot(&cosets[m], &cosets[m]))
            .collect();
        let mut plus = Vec::with_capacity(pair_count);
        for mp in 0..m_count {
            for m in (mp + 1)..m_count {
                plus.push(pairwise_dot(&cosets[m], &cosets[mp]));
            }
        }
        let mut minus = Vec::with_capacity(pair_count);
        for m in 0..m_count {
            for mp in (m + 1)..m_count {
                minus.push(pairwise_dot(&cosets[m][1..], &cosets[mp][..blocks - 1]));
            }
        }
        (diag, plus, minus)
    });

    let p = series.len() as f64;
    let scale0 = 1.0 / (p * blocks as f64);
    let scale1 = 1.0 / (p * (blocks - 1) as f64);
    let mut zero_lag = vec![0.0; m_count];
    let mut plus_zero_lag = vec![Complex64::new(0.0, 0.0); pair_count];
    let mut minus_lag_one = vec![Complex64::new(0.0, 0.0); pair_count];
    for (diag, plus, minus) in partials {
        for (acc, v) in zero_lag.iter_mut().zip(diag) {
            *acc += v.re;
        }
        for (acc, v) in plus_zero_lag.iter_mut().zip(plus) {
            *acc += v;
        }
        for (acc, v) in minus_lag_one.iter_mut().zip(minus) {
            *acc += v;
        }
    }
    for v in &mut zero_lag {
        *v *= scale0;
    }
    for v in &mut plus_zero_lag {
        *v *= scale0;
    }
    for v in &mut minus_lag_one {
        *v *= scale1;
    }
    Ok(GroupCorrelations {
        group: series[0].group,
        zero_lag,
        plus_zero_lag,
        minus_lag_one,
        sensors: series.len(),
        blocks,
    })
}

/// Exact group correlations from a known autocorrelation: each entry is
/// `r_x[lN + n_m - n_m']` with no estimation noise.
pub fn exact_correlations(bank: &RulerBank, rx: &AutocorrelationVector) -> Vec<GroupCorrelations> {
    let n = bank.period_n() as i64;
    bank.patterns()
        .iter()
        .enumerate()
        .map(|(z, pattern)| {
            let marks = pattern.marks();
            let m_count = marks.len();
            let zero_lag = vec![rx.at_lag(0).re; m_count];
            let mut plus_zero_lag = Vec::new();
            for mp in 0..m_count {
                for m in (mp + 1)..m_count {
                    plus_zero_lag.push(rx.at_lag(marks[m] as i64 - marks[mp] as i64));
                }
            }
            let mut minus_lag_one = Vec::new();
            for m in 0..m_count {
                for mp in (m + 1)..m_count {
                    minus_lag_one.push(rx.at_lag(n + marks[m] as i64 - marks[mp] as i64));
                }
            }
            GroupCorrelations {
                group: z,
                zero_lag,
                plus_zero_lag,
                minus_lag_one,
                sensors: 0,
                blocks: 0,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn series_from(group: usize, sensor: usize, n: usize, blocks: Vec<Vec<Complex64>>) -> SensorBlockSeries {
        let l = blocks.len();
        SensorBlockSeries::new(group, sensor, n, l, blocks.concat()).unwrap()
    }

    #[test]
    fn compress_examples() {
        let pattern = CosetPattern::new(3, vec![0, 2]).unwrap();
        let s = series_from(0, 0, 3, vec![
            vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)],
            vec![c(4.0, 0.0), c(5.0, 0.0), c(6.0, 0.0)],
        ]);
        let y = compress(&s, &pattern).unwrap();
        assert_eq!(y.at(0, 0), c(1.0, 0.0));
        assert_eq!(y.at(0, 1), c(3.0, 0.0));
        assert_eq!(y.at(1, 1), c(6.0, 0.0));

        let full = CosetPattern::full(3).unwrap();
        let y = compress(&s, &full).unwrap();
        assert_eq!(y.at(1, 2), c(6.0, 0.0));

        let single = CosetPattern::new(2, vec![1]).unwrap();
        let s = series_from(0, 0, 2, vec![vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(3.0, 0.0), c(4.0, 0.0)]]);
        let y = compress(&s, &single).unwrap();
        assert_eq!(y.at(0, 0), c(2.0, 0.0));
        assert_eq!(y.at(1, 0), c(4.0, 0.0));
    }

    #[test]
    fn compress_rejects_dimension_mismatch() {
        let pattern = CosetPattern::new(4, vec![0, 2]).unwrap();
        let s = series_from(0, 0, 3, vec![vec![c(0.0, 0.0); 3], vec![c(0.0, 0.0); 3]]);
        assert!(compress(&s, &pattern).is_err());
    }

    fn compressed(group: usize, sensor: usize, cosets: Vec<Vec<Complex64>>) -> CompressedSeries {
        // cosets[m][l] layout helper
        let m_count = cosets.len();
        let blocks = cosets[0].len();
        let mut samples = Vec::new();
        for l in 0..blocks {
            for coset in &cosets {
                samples.push(coset[l]);
            }
        }
        CompressedSeries {
            group,
            sensor,
            num_marks: m_count,
            samples,
        }
    }

    #[test]
    fn sample_correlation_examples() {
        let y = compressed(0, 0, vec![vec![c(1.0, 0.0), c(1.0, 0.0)]]);
        let r = sample_correlations(&[y], 0).unwrap();
        assert_eq!(r[0][0], c(1.0, 0.0));

        let y = compressed(0, 0, vec![
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
        ]);
        let r = sample_correlations(std::slice::from_ref(&y), 1).unwrap();
        assert_eq!(r[0][1], c(0.0, 0.0));
        // lag-1 of coset 1 against coset 0: y1[1] * conj(y0[0]) = 1
        assert_eq!(r[1][0], c(1.0, 0.0));

        // identical sensors leave the average unchanged
        let r2 = sample_correlations(&[y.clone(), y], 1).unwrap();
        assert_eq!(r, r2);
    }

    #[test]
    fn sample_correlation_errors() {
        assert!(sample_correlations(&[], 0).is_err());
        let y = compressed(0, 0, vec![vec![c(1.0, 0.0), c(1.0, 0.0)]]);
        assert!(sample_correlations(std::slice::from_ref(&y), 2).is_err());
        let short = compressed(0, 0, vec![vec![c(1.0, 0.0)]]);
        assert!(sample_correlations(&[short], 1).is_err());
        let other = compressed(0, 0, vec![vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]);
        assert!(sample_correlations(&[y, other], 0).is_err());
    }

    #[test]
    fn stack_group_orderings() {
        let m = 3;
        let lag0: Vec<Vec<Complex64>> = (0..m)
            .map(|i| (0..m).map(|j| c((10 * i + j) as f64, 0.0)).collect())
            .collect();
        let lag1: Vec<Vec<Complex64>> = (0..m)
            .map(|i| (0..m).map(|j| c(0.0, (10 * i + j) as f64)).collect())
            .collect();
        let g = stack_group(0, &lag0, &lag1, 1, 4);
        assert_eq!(g.zero_lag(), &[0.0, 11.0, 22.0]);
        // plus pairs (m, m') in order (1,0),(2,0),(2,1)
        assert_eq!(g.plus_zero_lag(), &[c(10.0, 0.0), c(20.0, 0.0), c(21.0, 0.0)]);
        // minus pairs (m, m') in order (0,1),(0,2),(1,2)
        assert_eq!(g.minus_lag_one(), &[c(0.0, 1.0), c(0.0, 2.0), c(0.0, 12.0)]);
    }

    #[test]
    fn stack_group_m2_and_m1() {
        let lag0 = vec![vec![c(1.0, 0.0), c(2.0, -1.0)], vec![c(2.0, 1.0), c(3.0, 0.0)]];
        let lag1 = vec![vec![c(0.0, 0.0), c(5.0, 0.0)], vec![c(6.0, 0.0), c(0.0, 0.0)]];
        let g = stack_group(0, &lag0, &lag1, 1, 2);
        assert_eq!(g.zero_lag(), &[1.0, 3.0]);
        assert_eq!(g.plus_zero_lag(), &[c(2.0, 1.0)]);
        assert_eq!(g.minus_lag_one(), &[c(5.0, 0.0)]);

        let g = stack_group(0, &[vec![c(4.0, 0.0)]], &[vec![c(0.0, 0.0)]], 1, 2);
        assert_eq!(g.zero_lag(), &[4.0]);
        assert!(g.plus_zero_lag().is_empty());
        assert!(g.minus_lag_one().is_empty());
    }

    #[test]
    fn hermitian_sample_symmetry_is_exact() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let m = 4;
        let blocks = 37;
        let cosets: Vec<Vec<Complex64>> = (0..m)
            .map(|_| {
                (0..blocks)
                    .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect()
            })
            .collect();
        let y = compressed(0, 0, cosets);
        let r = sample_correlations(&[y], 0).unwrap();
        #[allow(clippy::needless_range_loop)]
        for a in 0..m {
            for b in 0..m {
                assert_eq!(r[a][b], r[b][a].conj());
            }
        }
    }

    #[test]
    fn estimate_group_matches_generic_route() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let m = 3;
        let blocks = 20;
        let sensors: Vec<CompressedSeries> = (0..2)
            .map(|p| {
                let cosets = (0..m)
                    .map(|_| {
                        (0..blocks)
                            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                            .collect()
                    })
                    .collect();
                compressed(0, p, cosets)
            })
            .collect();
        let fast = estimate_group(&sensors).unwrap();
        let lag0 = sample_correlations(&sensors, 0).unwrap();
        let lag1 = sample_correlations(&sensors, 1).unwrap();
        let generic = stack_group(0, &lag0, &lag1, 2, blocks);
        assert_eq!(fast.zero_lag(), generic.zero_lag());
        assert_eq!(fast.plus_zero_lag(), generic.plus_zero_lag());
        assert_eq!(fast.minus_lag_one(), generic.minus_lag_one());
    }

    #[test]
    fn compression_commutes_with_selection() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 6;
        let l = 16;
        let samples: Vec<Complex64> = (0..n * l)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let series = SensorBlockSeries::new(0, 0, n, l, samples).unwrap();
        let pattern = CosetPattern::new(n, vec![1, 2, 5]).unwrap();

        // estimate from compressed samples
        let y = compress(&series, &pattern).unwrap();
        let compressed_r = sample_correlations(&[y], 0).unwrap();

        // estimate from all cosets, then select the pattern's entries
        let full = compress(&series, &CosetPattern::full(n).unwrap()).unwrap();
        let full_r = sample_correlations(&[full], 0).unwrap();
        for (a, &ma) in pattern.marks().iter().enumerate() {
            for (b, &mb) in pattern.marks().iter().enumerate() {
                assert_eq!(compressed_r[a][b], full_r[ma][mb]);
            }
        }
    }
}
