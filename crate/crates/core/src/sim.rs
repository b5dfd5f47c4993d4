//! Monte-Carlo study: multiband WSS user signals, Rayleigh flat fading
//! with path loss, additive white noise, staggered sensor windows, and
//! NMSE of the compressive spectrum estimate against a Nyquist-rate
//! baseline running the identical pipeline with all cosets active.
//!
//! All dBm figures convert as `10^(dBm/10)`; the simulator is unit
//! consistent but unitless internally, and NMSE only sees ratios.

use crate::design;
use crate::estimator::{compress, estimate_group, exact_correlations, SensorBlockSeries};
use crate::ruler::{CosetPattern, RulerBank};
use crate::system::{power_spectrum, reconstruct, AutocorrelationVector, PowerSpectrum, SystemMatrix};
use crate::{par, Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// One user's occupied band, power density, and path loss (shadowing
/// included). Frequencies are in rad/sample within `[-pi, pi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserBand {
    pub band_lo: f64,
    pub band_hi: f64,
    #[serde(rename = "power_dbm")]
    pub power_density_dbm: f64,
    pub path_loss_db: f64,
}

impl UserBand {
    pub fn width(&self) -> f64 {
        self.band_hi - self.band_lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.band_lo + self.band_hi)
    }

    fn validate(&self) -> Result<()> {
        if !(self.band_lo >= -PI - 1e-12 && self.band_hi <= PI + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "band [{}, {}] outside [-pi, pi]",
                self.band_lo, self.band_hi
            )));
        }
        if self.width() <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "band [{}, {}] has nonpositive width",
                self.band_lo, self.band_hi
            )));
        }
        Ok(())
    }
}

fn default_offset() -> usize {
    14
}

/// Full experiment description. `n`, `m`, `z` fix the sampling patterns,
/// `p` the sensors per group, `l` the blocks per sensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub m: usize,
    pub z: usize,
    pub p: usize,
    pub l: usize,
    pub users: Vec<UserBand>,
    pub noise_power_dbm: f64,
    #[serde(default = "default_offset")]
    pub sensor_offset_samples: usize,
    pub seed: u64,
    pub runs: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::PeriodTooSmall { min: 2, got: self.n });
        }
        if self.p == 0 || self.z == 0 || self.runs == 0 {
            return Err(Error::InvalidConfig("p, z, and runs must be positive".into()));
        }
        if self.l < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 blocks, got {}",
                self.l
            )));
        }
        for user in &self.users {
            user.validate()?;
        }
        let mut bands: Vec<(f64, f64)> = self.users.iter().map(|u| (u.band_lo, u.band_hi)).collect();
        bands.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in bands.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::InvalidConfig(format!(
                    "user bands [{}, {}] and [{}, {}] overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(())
    }

    /// The sampling patterns for this config: certified or greedy-filled
    /// at exactly `z` patterns of `m` marks. Fails if coverage cannot be
    /// reached.
    pub fn bank(&self) -> Result<RulerBank> {
        bank_for(self.n, self.m, self.z)
    }
}

/// Designs a covering bank with exactly `z` patterns of `m` marks.
pub fn bank_for(n: usize, m: usize, z: usize) -> Result<RulerBank> {
    let report = design::design_fixed_z(n, m, z)?;
    if !report.covered {
        return Err(Error::RankDeficient(report.missing));
    }
    Ok(report.bank)
}

pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

// ---- deterministic seed splitting -------------------------------------

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

const TAG_SIGNAL: u64 = 1;
const TAG_FADING: u64 = 2;
const TAG_NOISE: u64 = 3;

fn child_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(tag ^ splitmix64(index))))
}

// ---- signal generation ------------------------------------------------

/// Linear-phase complex bandpass FIR: windowed sinc modulated to the band
/// center, gain calibrated to exactly 1 at the center frequency.
pub fn bandpass_fir(taps: usize, lo: f64, hi: f64) -> Vec<Complex64> {
    let center = 0.5 * (lo + hi);
    let half_width = 0.5 * (hi - lo);
    let mid = (taps as f64 - 1.0) / 2.0;
    let mut lowpass: Vec<f64> = (0..taps)
        .map(|k| {
            let t = k as f64 - mid;
            let sinc = if t.abs() < 1e-12 {
                half_width / PI
            } else {
                (half_width * t).sin() / (PI * t)
            };
            // Hamming window
            let w = 0.54 - 0.46 * (2.0 * PI * k as f64 / (taps as f64 - 1.0)).cos();
            sinc * w
        })
        .collect();
    let gain: f64 = lowpass.iter().sum();
    for h in &mut lowpass {
        *h /= gain;
    }
    lowpass
        .into_iter()
        .enumerate()
        .map(|(k, h)| Complex64::from_polar(h, center * (k as f64 - mid)))
        .collect()
}

fn complex_gaussian(rng: &mut impl Rng, variance: f64) -> Complex64 {
    let normal = Normal::new(0.0, (variance / 2.0).sqrt()).unwrap();
    Complex64::new(normal.sample(rng), normal.sample(rng))
}

/// One user signal: circular complex white Gaussian noise with variance
/// `density * width` (linear), shaped by the `taps`-tap bandpass filter of
/// the user's band. The first `taps` filtered samples are discarded so the
/// output sits in the stationary regime.
pub fn generate_user_signal(
    user: &UserBand,
    taps: usize,
    len: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Complex64>> {
    user.validate()?;
    let variance = dbm_to_linear(user.power_density_dbm) * user.width();
    let burn = taps;
    let input_len = len + burn + taps - 1;
    let white: Vec<Complex64> = (0..input_len)
        .map(|_| complex_gaussian(rng, variance))
        .collect();
    let fir = bandpass_fir(taps, user.band_lo, user.band_hi);
    let mut out = Vec::with_capacity(len);
    for k in 0..(len + burn) {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, h) in fir.iter().enumerate() {
            acc += h * white[k + taps - 1 - j];
        }
        if k >= burn {
            out.push(acc);
        }
    }
    Ok(out)
}

/// All user signals, one sequence per user.
pub fn generate_user_signals(
    users: &[UserBand],
    taps: usize,
    len: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<Complex64>>> {
    users
        .iter()
        .map(|u| generate_user_signal(u, taps, len, rng))
        .collect()
}

/// One Rayleigh block-fading coefficient per (user, sensor): complex
/// Gaussian with variance equal to the user's linear path loss, constant
/// over the whole observation window.
pub fn draw_fading(
    users: &[UserBand],
    num_sensors: usize,
    rng: &mut impl Rng,
) -> Vec<Vec<Complex64>> {
    users
        .iter()
        .map(|u| {
            let variance = dbm_to_linear(u.path_loss_db);
            (0..num_sensors)
                .map(|_| complex_gaussian(rng, variance))
                .collect()
        })
        .collect()
}

/// Received sequence of one sensor: fading-weighted sum of the user
/// signals, delayed by `sensor_index * offset` samples, plus white noise.
pub fn apply_channel(
    user_signals: &[Vec<Complex64>],
    fading_per_user: &[Complex64],
    sensor_index: usize,
    offset: usize,
    window_len: usize,
    noise_power_linear: f64,
    rng: &mut impl Rng,
) -> Result<Vec<Complex64>> {
    let start = sensor_index * offset;
    let mut out = vec![Complex64::new(0.0, 0.0); window_len];
    for (signal, &h) in user_signals.iter().zip(fading_per_user) {
        if signal.len() < start + window_len {
            return Err(Error::DimensionMismatch(format!(
                "user signal of {} samples too short for sensor {sensor_index} window",
                signal.len()
            )));
        }
        for (o, &x) in out.iter_mut().zip(&signal[start..start + window_len]) {
            *o += h * x;
        }
    }
    if noise_power_linear > 0.0 {
        for o in &mut out {
            *o += complex_gaussian(rng, noise_power_linear);
        }
    }
    Ok(out)
}

// ---- pipelines --------------------------------------------------------

/// Compress, estimate, and reconstruct the power spectrum for the given
/// bank. `received[z]` holds the Nyquist streams of the sensors of group
/// `z`; the first `blocks * N` samples of each are used.
pub fn pipeline_spectrum(
    bank: &RulerBank,
    received: &[Vec<&[Complex64]>],
    blocks: usize,
) -> Result<PowerSpectrum> {
    let n = bank.period_n();
    if received.len() != bank.num_patterns() {
        return Err(Error::DimensionMismatch(format!(
            "{} sensor groups for a bank of {} patterns",
            received.len(),
            bank.num_patterns()
        )));
    }
    let window = blocks * n;
    let mut groups = Vec::with_capacity(received.len());
    for (z, (pattern, sensors)) in bank.patterns().iter().zip(received).enumerate() {
        let mut series = Vec::with_capacity(sensors.len());
        for (p_idx, stream) in sensors.iter().enumerate() {
            if stream.len() < window {
                return Err(Error::DimensionMismatch(format!(
                    "sensor stream of {} samples cannot fill {blocks} blocks of {n}",
                    stream.len()
                )));
            }
            let blocks_data = stream[..window].to_vec();
            let sensor = SensorBlockSeries::new(z, p_idx, n, blocks, blocks_data)?;
            series.push(compress(&sensor, pattern)?);
        }
        groups.push(estimate_group(&series)?);
    }
    let system = SystemMatrix::build(bank);
    let (_, px) = reconstruct(&system, &groups)?;
    Ok(px)
}

/// The Nyquist-rate reference: the identical pipeline with every coset
/// active in every group.
pub fn nyquist_baseline(
    received: &[Vec<&[Complex64]>],
    n: usize,
    blocks: usize,
) -> Result<PowerSpectrum> {
    let full = RulerBank::new(vec![CosetPattern::full(n)?; received.len()])?;
    pipeline_spectrum(&full, received, blocks)
}

/// `||estimate - baseline||^2 / ||baseline||^2` over the complex samples.
pub fn nmse(estimate: &PowerSpectrum, baseline: &PowerSpectrum) -> Result<f64> {
    if estimate.len() != baseline.len() {
        return Err(Error::DimensionMismatch(format!(
            "spectra of lengths {} and {}",
            estimate.len(),
            baseline.len()
        )));
    }
    let denom: f64 = baseline.values().iter().map(|v| v.norm_sqr()).sum();
    if denom == 0.0 {
        return Err(Error::EmptyInput("zero baseline spectrum"));
    }
    let num: f64 = estimate
        .values()
        .iter()
        .zip(baseline.values())
        .map(|(e, b)| (e - b).norm_sqr())
        .sum();
    Ok(num / denom)
}

/// NMSE of the exact-correlation reconstruction against the direct DFT of
/// the same autocorrelation. Zero (to rounding) for any covering bank.
pub fn exact_nmse(bank: &RulerBank, rx: &AutocorrelationVector) -> Result<f64> {
    let system = SystemMatrix::build(bank);
    let groups = exact_correlations(bank, rx);
    let (_, px) = reconstruct(&system, &groups)?;
    let reference = power_spectrum(rx);
    nmse(&px, &reference)
}

// ---- Monte-Carlo ------------------------------------------------------

/// NMSE at one sweep coordinate, averaged over runs.
#[derive(Debug, Clone, Serialize)]
pub struct NmseResult {
    pub m: usize,
    pub p: usize,
    pub l: usize,
    pub runs: usize,
    pub nmse: f64,
    pub baseline_id: String,
    /// Per-run NMSE values, aligned across grid points for paired tests.
    #[serde(skip)]
    pub per_run: Vec<f64>,
}

/// Grid of sweep coordinates; empty axes fall back to the config value.
#[derive(Debug, Clone, Default)]
pub struct SweepGrid {
    pub m: Vec<usize>,
    pub p: Vec<usize>,
    pub l: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub results: Vec<NmseResult>,
    /// Grid points with no covering bank, with the reason.
    pub skipped: Vec<(usize, String)>,
}

/// Output of a single Monte-Carlo run at the config's own coordinate.
#[derive(Debug)]
pub struct RunOutput {
    pub compressed: PowerSpectrum,
    pub baseline: PowerSpectrum,
    pub nmse: f64,
}

/// One full realization at the config coordinate: signals, fading, noise,
/// both pipelines, NMSE.
pub fn run_once(cfg: &SimConfig, bank: &RulerBank, run_index: usize) -> Result<RunOutput> {
    cfg.validate()?;
    let grid = SweepGrid::default();
    let (points, _) = resolve_grid(cfg, &grid)?;
    let banks = BTreeMap::from([(cfg.m, bank.clone())]);
    let (spectra, baselines) = realize_run(cfg, &points, &banks, run_index)?;
    let compressed = spectra.into_iter().next().unwrap()?;
    let baseline = baselines.into_values().next().unwrap();
    let value = nmse(&compressed, &baseline)?;
    Ok(RunOutput {
        compressed,
        baseline,
        nmse: value,
    })
}

/// Full sweep over the (M, P, L) grid. Every run draws fresh signals,
/// fading, and noise from seeds split off `cfg.seed`; all grid points of a
/// run share the same realization, so per-run NMSE values are paired
/// along every axis, and the baseline for each (P, L) is computed once.
pub fn run_sweep(cfg: &SimConfig, grid: &SweepGrid) -> Result<SweepOutcome> {
    cfg.validate()?;
    let (points, skipped) = resolve_grid(cfg, grid)?;
    let mut banks = BTreeMap::new();
    for &(m, _, _) in &points {
        if let std::collections::btree_map::Entry::Vacant(e) = banks.entry(m) {
            e.insert(bank_for(cfg.n, m, cfg.z)?);
        }
    }

    let per_run: Vec<Result<Vec<f64>>> = par::map_indexed(cfg.runs, |run| {
        let (spectra, baselines) = realize_run(cfg, &points, &banks, run)?;
        points
            .iter()
            .zip(spectra)
            .map(|(&(_, p, l), spectrum)| nmse(&spectrum?, &baselines[&(p, l)]))
            .collect()
    });

    let mut per_point: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.runs); points.len()];
    for run_values in per_run {
        for (acc, v) in per_point.iter_mut().zip(run_values?) {
            acc.push(v);
        }
    }
    let results = points
        .iter()
        .zip(per_point)
        .map(|(&(m, p, l), values)| NmseResult {
            m,
            p,
            l,
            runs: cfg.runs,
            nmse: values.iter().sum::<f64>() / values.len() as f64,
            baseline_id: format!("nyquist-full-coset-N{}-P{p}-L{l}", cfg.n),
            per_run: values,
        })
        .collect();
    Ok(SweepOutcome { results, skipped })
}

type GridPoints = Vec<(usize, usize, usize)>;

fn resolve_grid(cfg: &SimConfig, grid: &SweepGrid) -> Result<(GridPoints, Vec<(usize, String)>)> {
    let ms = if grid.m.is_empty() { vec![cfg.m] } else { grid.m.clone() };
    let ps = if grid.p.is_empty() { vec![cfg.p] } else { grid.p.clone() };
    let ls = if grid.l.is_empty() { vec![cfg.l] } else { grid.l.clone() };
    let mut skipped = Vec::new();
    let mut usable_ms = Vec::new();
    for &m in &ms {
        match bank_for(cfg.n, m, cfg.z) {
            Ok(_) => usable_ms.push(m),
            Err(e) => skipped.push((m, e.to_string())),
        }
    }
    let mut points = Vec::new();
    for &m in &usable_ms {
        for &p in &ps {
            for &l in &ls {
                if l < 2 {
                    return Err(Error::InvalidConfig(format!("grid L={l} below 2")));
                }
                if p == 0 {
                    return Err(Error::InvalidConfig("grid P=0".into()));
                }
                points.push((m, p, l));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::InvalidConfig("no usable grid points".into()));
    }
    Ok((points, skipped))
}

type BaselineMap = BTreeMap<(usize, usize), PowerSpectrum>;

/// Draws one shared realization and evaluates every grid point on it.
fn realize_run(
    cfg: &SimConfig,
    points: &GridPoints,
    banks: &BTreeMap<usize, RulerBank>,
    run: usize,
) -> Result<(Vec<Result<PowerSpectrum>>, BaselineMap)> {
    let n = cfg.n;
    let p_max = points.iter().map(|&(_, p, _)| p).max().unwrap();
    let l_max = points.iter().map(|&(_, _, l)| l).max().unwrap();
    let num_sensors = cfg.z * p_max;
    let window = l_max * n;
    let master_len = (num_sensors - 1) * cfg.sensor_offset_samples + window;

    let mut rng_signal = child_rng(cfg.seed, TAG_SIGNAL, run as u64);
    let signals = generate_user_signals(&cfg.users, n, master_len, &mut rng_signal)?;
    let mut rng_fading = child_rng(cfg.seed, TAG_FADING, run as u64);
    let fading = draw_fading(&cfg.users, num_sensors, &mut rng_fading);
    let mut rng_noise = child_rng(cfg.seed, TAG_NOISE, run as u64);
    let noise_linear = dbm_to_linear(cfg.noise_power_dbm);

    let received: Vec<Vec<Complex64>> = (0..num_sensors)
        .map(|s| {
            let per_user: Vec<Complex64> = fading.iter().map(|f| f[s]).collect();
            apply_channel(
                &signals,
                &per_user,
                s,
                cfg.sensor_offset_samples,
                window,
                noise_linear,
                &mut rng_noise,
            )
        })
        .collect::<Result<_>>()?;

    // Group z under p sensors per group uses the first p sensors of its
    // slot in the maximal layout.
    let group_views = |p: usize| -> Vec<Vec<&[Complex64]>> {
        (0..cfg.z)
            .map(|z| {
                (0..p)
                    .map(|i| received[z * p_max + i].as_slice())
                    .collect()
            })
            .collect()
    };

    let mut baselines = BaselineMap::new();
    for &(_, p, l) in points {
        if let std::collections::btree_map::Entry::Vacant(e) = baselines.entry((p, l)) {
            e.insert(nyquist_baseline(&group_views(p), n, l)?);
        }
    }
    let spectra = points
        .iter()
        .map(|&(m, p, l)| pipeline_spectrum(&banks[&m], &group_views(p), l))
        .collect();
    Ok((spectra, baselines))
}

/// One-sided paired t statistic for the hypothesis `mean(diffs) > 0`.
pub fn paired_t_statistic(diffs: &[f64]) -> f64 {
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    mean / (var / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1_users() -> Vec<UserBand> {
        let f = |num: f64| num * PI / 9.0;
        vec![
            UserBand { band_lo: f(-8.0), band_hi: f(-7.0), power_density_dbm: 38.0, path_loss_db: -18.0 },
            UserBand { band_lo: f(-6.0), band_hi: f(-5.0), power_density_dbm: 40.0, path_loss_db: -19.0 },
            UserBand { band_lo: f(1.0), band_hi: f(2.0), power_density_dbm: 34.0, path_loss_db: -11.0 },
            UserBand { band_lo: f(3.0), band_hi: f(4.0), power_density_dbm: 34.0, path_loss_db: -17.0 },
            UserBand { band_lo: f(4.0), band_hi: f(5.0), power_density_dbm: 32.0, path_loss_db: -13.0 },
            UserBand { band_lo: f(6.0), band_hi: f(7.0), power_density_dbm: 35.0, path_loss_db: -19.0 },
        ]
    }

    fn small_config() -> SimConfig {
        SimConfig {
            n: 11,
            m: 3,
            z: 2,
            p: 2,
            l: 32,
            users: vec![UserBand {
                band_lo: 0.4,
                band_hi: 1.2,
                power_density_dbm: 10.0,
                path_loss_db: -3.0,
            }],
            noise_power_dbm: -10.0,
            sensor_offset_samples: 14,
            seed: 99,
            runs: 2,
        }
    }

    #[test]
    fn full_band_variance_matches_density() {
        let user = UserBand {
            band_lo: -PI,
            band_hi: PI,
            power_density_dbm: 0.0,
            path_loss_db: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let signal = generate_user_signal(&user, 31, 100_000, &mut rng).unwrap();
        let var: f64 = signal.iter().map(|v| v.norm_sqr()).sum::<f64>() / signal.len() as f64;
        let expected = 2.0 * PI; // density 1 over the full band
        assert!(
            (var - expected).abs() / expected < 0.05,
            "variance {var}, expected ~{expected}"
        );
    }

    #[test]
    fn empty_user_list_gives_zero_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let received = apply_channel(&[], &[], 0, 14, 64, 0.0, &mut rng).unwrap();
        assert!(received.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn user3_energy_concentrates_in_band() {
        // periodogram mass inside the band plus a two-bin transition slack
        let user = table1_users()[2].clone();
        let taps = 103;
        let len = 1 << 14;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let signal = generate_user_signal(&user, taps, len, &mut rng).unwrap();
        let mut buf = signal.clone();
        rustfft::FftPlanner::new()
            .plan_fft_forward(len)
            .process(&mut buf);
        let slack = 2.0 * 2.0 * PI / taps as f64;
        let (mut inside, mut total) = (0.0, 0.0);
        for (k, v) in buf.iter().enumerate() {
            // map bin to (-pi, pi]
            let mut w = 2.0 * PI * k as f64 / len as f64;
            if w > PI {
                w -= 2.0 * PI;
            }
            let mass = v.norm_sqr();
            total += mass;
            if w >= user.band_lo - slack && w <= user.band_hi + slack {
                inside += mass;
            }
        }
        assert!(inside / total >= 0.95, "in-band fraction {}", inside / total);
    }

    #[test]
    fn noise_variance_matches_dbm() {
        let len = 200_000;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let noise = apply_channel(&[], &[], 0, 0, len, dbm_to_linear(16.0), &mut rng).unwrap();
        let var: f64 = noise.iter().map(|v| v.norm_sqr()).sum::<f64>() / len as f64;
        let expected = dbm_to_linear(16.0);
        // variance of |x|^2 for CN(0, s) is s^2, so SE of the mean is s/sqrt(len)
        let se = expected / (len as f64).sqrt();
        assert!(
            (var - expected).abs() < 3.0 * se,
            "variance {var}, expected {expected} +- {se}"
        );
    }

    #[test]
    fn sensor_offset_is_a_pure_delay() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let user = UserBand {
            band_lo: -1.0,
            band_hi: 1.0,
            power_density_dbm: 0.0,
            path_loss_db: 0.0,
        };
        let signal = generate_user_signal(&user, 15, 300, &mut rng).unwrap();
        let ones = [Complex64::new(1.0, 0.0)];
        let s0 = apply_channel(std::slice::from_ref(&signal), &ones, 0, 14, 100, 0.0, &mut rng).unwrap();
        let s1 = apply_channel(&[signal], &ones, 1, 14, 100, 0.0, &mut rng).unwrap();
        assert_eq!(&s0[14..], &s1[..86]);
    }

    #[test]
    fn nmse_examples() {
        let flat = AutocorrelationVector::assemble(1.0, &[Complex64::new(0.0, 0.0); 4]);
        let base = power_spectrum(&flat);
        assert!(nmse(&base, &base).unwrap() < 1e-30);

        let double = AutocorrelationVector::assemble(2.0, &[Complex64::new(0.0, 0.0); 4]);
        let twice = power_spectrum(&double);
        assert!((nmse(&twice, &base).unwrap() - 1.0).abs() < 1e-12);

        let zero = AutocorrelationVector::assemble(0.0, &[Complex64::new(0.0, 0.0); 4]);
        let nothing = power_spectrum(&zero);
        assert!((nmse(&nothing, &base).unwrap() - 1.0).abs() < 1e-12);
        assert!(nmse(&base, &nothing).is_err());
    }

    #[test]
    fn exact_mode_nmse_is_zero() {
        // inverse-DFT of a nonnegative spectrum gives a Hermitian rx
        let n = 9;
        let len = 2 * n - 1;
        let spectrum: Vec<f64> = (0..len).map(|k| 1.0 + ((k * 37) % 5) as f64).collect();
        let rx_vals: Vec<Complex64> = (0..len)
            .map(|t| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &p) in spectrum.iter().enumerate() {
                    let phase = 2.0 * PI * (t * k) as f64 / len as f64;
                    acc += Complex64::from_polar(p / len as f64, phase);
                }
                acc
            })
            .collect();
        let rx = AutocorrelationVector::from_stacked(rx_vals).unwrap();
        let bank = bank_for(n, 2, 4).unwrap();
        assert!(exact_nmse(&bank, &rx).unwrap() < 1e-18);
    }

    #[test]
    fn zero_input_gives_zero_spectrum() {
        let zero = vec![Complex64::new(0.0, 0.0); 44];
        let groups = vec![vec![zero.as_slice()], vec![zero.as_slice()]];
        let px = nyquist_baseline(&groups, 11, 4).unwrap();
        assert!(px.values().iter().all(|v| v.norm() < 1e-30));
    }

    #[test]
    fn run_once_is_seed_deterministic() {
        let cfg = small_config();
        let bank = cfg.bank().unwrap();
        let a = run_once(&cfg, &bank, 0).unwrap();
        let b = run_once(&cfg, &bank, 0).unwrap();
        assert_eq!(a.nmse.to_bits(), b.nmse.to_bits());
        let c = run_once(&cfg, &bank, 1).unwrap();
        assert_ne!(a.nmse.to_bits(), c.nmse.to_bits());
    }

    #[test]
    fn sweep_is_seed_deterministic_and_paired() {
        let cfg = small_config();
        let grid = SweepGrid {
            m: vec![3, 4],
            p: vec![],
            l: vec![],
        };
        let a = run_sweep(&cfg, &grid).unwrap();
        let b = run_sweep(&cfg, &grid).unwrap();
        assert_eq!(a.results.len(), 2);
        for (x, y) in a.results.iter().zip(&b.results) {
            assert_eq!(x.nmse.to_bits(), y.nmse.to_bits());
            assert_eq!(x.per_run.len(), cfg.runs);
        }
    }

    #[test]
    fn sweep_skips_uncoverable_points() {
        let mut cfg = small_config();
        cfg.z = 1; // one pattern of 2 marks cannot cover N=11
        let grid = SweepGrid {
            m: vec![2, 4],
            p: vec![],
            l: vec![],
        };
        let out = run_sweep(&cfg, &grid).unwrap();
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].0, 2);
        assert_eq!(out.results.len(), 1);
        assert_eq!(out.results[0].m, 4);
    }

    #[test]
    fn config_validation_catches_bad_bands() {
        let mut cfg = small_config();
        cfg.users[0].band_hi = 4.0;
        assert!(cfg.validate().is_err());

        let mut cfg = small_config();
        cfg.users.push(cfg.users[0].clone());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn table1_config_is_valid() {
        let cfg = SimConfig {
            n: 103,
            m: 3,
            z: 17,
            p: 1,
            l: 16,
            users: table1_users(),
            noise_power_dbm: 16.0,
            sensor_offset_samples: 14,
            seed: 1,
            runs: 1,
        };
        cfg.validate().unwrap();
        let bank = cfg.bank().unwrap();
        assert_eq!(bank.num_patterns(), 17);
    }
}
