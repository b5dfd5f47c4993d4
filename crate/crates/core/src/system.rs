//! The linear system tying measured coset correlations to the signal
//! autocorrelation, its least-squares inversion, and the DFT to the power
//! spectrum.
//!
//! Each correlation between two active cosets of a group equals the signal
//! autocorrelation at a single lag, so every row of the stacked system is a
//! unit impulse. Only the lag-0 rows with `m > m'` and the lag-1 rows with
//! `m < m'` are materialized; their mirror images are redundant by the
//! Hermitian property of the correlations. Column `j` (0-based) holds lag
//! `j + 1`, for lags `1..N-1`.

use crate::estimator::GroupCorrelations;
use crate::ruler::RulerBank;
use crate::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Which correlation a system row comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// `r_y^(m,m')[0]` with `m > m'`; measures lag `n_m - n_m'`.
    PlusZeroLag,
    /// `r_y^(m,m')[1]` with `m < m'`; measures lag `N + n_m - n_m'`.
    MinusLagOne,
}

/// Provenance of one row: group, ordered coset pair, and lag tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowOrigin {
    pub group: usize,
    pub m: usize,
    pub m_prime: usize,
    pub kind: RowKind,
}

/// The stacked selection system. Every row has a single structural one;
/// only the nonzero column index is stored per row.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    bank: RulerBank,
    row_map: Vec<RowOrigin>,
    /// Column of the structural one of each row; columns index lags `1..N-1`.
    ones: Vec<usize>,
}

impl SystemMatrix {
    /// Stacks the rows for every group of the bank. Row order per group:
    /// first the lag-0 pairs `(m, m')` with `m > m'` ordered by `(m', m)`,
    /// then the lag-1 pairs with `m < m'` ordered by `(m, m')`; groups in
    /// bank order. This matches the stacking of the estimator.
    pub fn build(bank: &RulerBank) -> Self {
        let n = bank.period_n();
        let mut row_map = Vec::new();
        let mut ones = Vec::new();
        for (z, pattern) in bank.patterns().iter().enumerate() {
            let marks = pattern.marks();
            let m_count = marks.len();
            for mp in 0..m_count {
                for m in (mp + 1)..m_count {
                    // r_y^(m,m')[0] = r_x[n_m - n_m'], lag in 1..N-1
                    row_map.push(RowOrigin {
                        group: z,
                        m,
                        m_prime: mp,
                        kind: RowKind::PlusZeroLag,
                    });
                    ones.push(marks[m] - marks[mp] - 1);
                }
            }
            for m in 0..m_count {
                for mp in (m + 1)..m_count {
                    // r_y^(m,m')[1] = r_x[N + n_m - n_m'], lag in 1..N-1
                    row_map.push(RowOrigin {
                        group: z,
                        m,
                        m_prime: mp,
                        kind: RowKind::MinusLagOne,
                    });
                    ones.push(n + marks[m] - marks[mp] - 1);
                }
            }
        }
        Self {
            bank: bank.clone(),
            row_map,
            ones,
        }
    }

    pub fn bank(&self) -> &RulerBank {
        &self.bank
    }

    pub fn period_n(&self) -> usize {
        self.bank.period_n()
    }

    pub fn num_rows(&self) -> usize {
        self.row_map.len()
    }

    /// Columns index the lags `1..N-1`.
    pub fn num_cols(&self) -> usize {
        self.period_n() - 1
    }

    pub fn row_map(&self) -> &[RowOrigin] {
        &self.row_map
    }

    /// Nonzero column index of each row.
    pub fn structural_ones(&self) -> &[usize] {
        &self.ones
    }

    /// Structural full-column-rank test: every lag column carries at least
    /// one row, which holds exactly when the bank's difference sets cover
    /// all `N` distances. No numerics involved.
    pub fn has_full_column_rank(&self) -> bool {
        self.uncovered_lags().is_empty()
    }

    /// Lags in `1..N-1` without any measuring row.
    pub fn uncovered_lags(&self) -> Vec<usize> {
        let mut hit = vec![false; self.num_cols()];
        for &col in &self.ones {
            hit[col] = true;
        }
        hit.iter()
            .enumerate()
            .filter(|(_, &h)| !h)
            .map(|(j, _)| j + 1)
            .collect()
    }

    /// Dense 0/1 matrix, for rank oracles and generic LS cross-checks.
    pub fn materialize(&self) -> Vec<Vec<f64>> {
        let cols = self.num_cols();
        self.ones
            .iter()
            .map(|&col| {
                let mut row = vec![0.0; cols];
                row[col] = 1.0;
                row
            })
            .collect()
    }

    /// LS solution of the stacked system for the positive-lag half of the
    /// autocorrelation. Because every row is a unit impulse the normal
    /// equations are diagonal: each lag is the mean of the measurements
    /// whose one sits in its column.
    pub fn reconstruct_r1(&self, stacked: &[Complex64]) -> Result<Vec<Complex64>> {
        if stacked.len() != self.num_rows() {
            return Err(Error::DimensionMismatch(format!(
                "stacked vector has {} entries, system has {} rows",
                stacked.len(),
                self.num_rows()
            )));
        }
        let uncovered = self.uncovered_lags();
        if !uncovered.is_empty() {
            return Err(Error::RankDeficient(uncovered));
        }
        let cols = self.num_cols();
        let mut sums = vec![Complex64::new(0.0, 0.0); cols];
        let mut counts = vec![0usize; cols];
        for (&col, &value) in self.ones.iter().zip(stacked) {
            sums[col] += value;
            counts[col] += 1;
        }
        Ok(sums
            .into_iter()
            .zip(counts)
            .map(|(s, c)| s / c as f64)
            .collect())
    }
}

/// LS estimate of the zero-lag autocorrelation: the mean of the stacked
/// per-coset zero-lag estimates (the design is an all-ones vector).
pub fn reconstruct_r0(zero_lag_estimates: &[f64]) -> Result<f64> {
    if zero_lag_estimates.is_empty() {
        return Err(Error::EmptyInput("zero-lag estimates"));
    }
    Ok(zero_lag_estimates.iter().sum::<f64>() / zero_lag_estimates.len() as f64)
}

/// Autocorrelation stacked as `[r[0], r[1..N-1], r[1-N..-1]]`, length
/// `2N - 1`; entry `2N-1-t` is the conjugate of entry `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrelationVector {
    values: Vec<Complex64>,
}

impl AutocorrelationVector {
    /// Extends the positive lags by Hermitian symmetry.
    pub fn assemble(r0: f64, r1: &[Complex64]) -> Self {
        let mut values = Vec::with_capacity(2 * r1.len() + 1);
        values.push(Complex64::new(r0, 0.0));
        values.extend_from_slice(r1);
        for v in r1.iter().rev() {
            values.push(v.conj());
        }
        Self { values }
    }

    /// Builds directly from a full `2N - 1` stack. Hermitian symmetry of
    /// the input is the caller's concern.
    pub fn from_stacked(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() || values.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!(
                "autocorrelation stack must have odd length 2N-1, got {}",
                values.len()
            )));
        }
        Ok(Self { values })
    }

    pub fn period_n(&self) -> usize {
        self.values.len().div_ceil(2)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `r_x[lag]` for `lag` in `-(N-1)..=N-1`.
    pub fn at_lag(&self, lag: i64) -> Complex64 {
        let len = self.values.len() as i64;
        let idx = lag.rem_euclid(len) as usize;
        self.values[idx]
    }
}

/// `2N - 1` spectral samples, the DFT of the stacked autocorrelation.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    values: Vec<Complex64>,
}

impl PowerSpectrum {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Real part of every sample, plus the bins whose real part came out
    /// negative. Finite-sample LS can dip below zero; nothing is clamped.
    pub fn real_view(&self) -> (Vec<f64>, Vec<usize>) {
        let real: Vec<f64> = self.values.iter().map(|v| v.re).collect();
        let negative = real
            .iter()
            .enumerate()
            .filter(|(_, &r)| r < 0.0)
            .map(|(i, _)| i)
            .collect();
        (real, negative)
    }
}

/// Forward `(2N-1)`-point DFT (negative exponent, no normalization) of the
/// stacked autocorrelation.
pub fn power_spectrum(rx: &AutocorrelationVector) -> PowerSpectrum {
    let mut buf = rx.values().to_vec();
    FftPlanner::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    PowerSpectrum { values: buf }
}

/// Full fusion-centre solve: stacks the per-group correlation estimates in
/// system row order, reconstructs the autocorrelation by LS, and returns
/// it with its power spectrum.
pub fn reconstruct(
    system: &SystemMatrix,
    groups: &[GroupCorrelations],
) -> Result<(AutocorrelationVector, PowerSpectrum)> {
    if groups.len() != system.bank().num_patterns() {
        return Err(Error::DimensionMismatch(format!(
            "{} group estimates for a bank of {} patterns",
            groups.len(),
            system.bank().num_patterns()
        )));
    }
    let mut zero_lag = Vec::new();
    let mut stacked = Vec::with_capacity(system.num_rows());
    for g in groups {
        zero_lag.extend_from_slice(g.zero_lag());
    }
    // Row order interleaves plus/minus per group, so stack accordingly.
    for g in groups {
        stacked.extend_from_slice(g.plus_zero_lag());
        stacked.extend_from_slice(g.minus_lag_one());
    }
    let r0 = reconstruct_r0(&zero_lag)?;
    let r1 = system.reconstruct_r1(&stacked)?;
    let rx = AutocorrelationVector::assemble(r0, &r1);
    let px = power_spectrum(&rx);
    Ok((rx, px))
}
