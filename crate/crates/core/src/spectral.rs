//! Periodograms, ensemble spectra, cross-mode correlations and a
//! stationarity diagnostic.
//!
//! Mode amplitudes use the rectangular-window transform
//! `u(w_l) = (1/sqrt(T)) sum_j dt e^{i w_l t_j} alpha_j` on the record's own
//! grid `w_l = 2 pi l / T`, so `|u(w_l)|^2` is a dimensionless photon flux
//! per unit frequency whose mean approaches `nu f(w)` for long records.

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft;
use crate::fieldgen::{fold_traces, lorentzian, FieldTrace, TraceSource};
use crate::num::{Complex, Scalar};
use crate::rng::{stream, Lane};
use crate::stats::{ks_one_sample, ComplexMoments, KsReport, Moments};

/// Significance level of every pass/fail verdict in this module.
pub const SIGNIFICANCE: f64 = 1e-3;

/// Fewest traces accepted by [`periodogram_distribution_test`].
pub const MIN_DISTRIBUTION_TRACES: usize = 1000;

/// Full transform of one record, in FFT bin order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeAmplitudes<T> {
    pub modes: Vec<Complex<T>>,
    pub duration: T,
}

impl<T: Scalar> ModeAmplitudes<T> {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Detuning of bin `k`.
    pub fn frequency(&self, k: usize) -> T {
        fft::bin_frequency(k, self.modes.len(), self.duration)
    }

    /// Grid spacing `2 pi / T`.
    pub fn spacing(&self) -> T {
        T::TAU() / self.duration
    }

    pub fn at(&self, detuning: T) -> Result<Complex<T>> {
        let l = grid_index(detuning.as_f64(), self.duration.as_f64(), self.modes.len())?;
        Ok(self.modes[fft::bin_of(l, self.modes.len()).expect("checked on grid")])
    }
}

pub fn mode_amplitudes<T: Scalar>(trace: &FieldTrace<T>) -> Result<ModeAmplitudes<T>> {
    if trace.samples.is_empty() {
        return Err(Error::domain("empty trace"));
    }
    Ok(ModeAmplitudes {
        modes: fft::to_modes(&trace.samples, trace.dt),
        duration: trace.duration(),
    })
}

/// Signed grid index of `detuning` on a record of length `duration` with
/// `n` samples, rejecting off-grid values and the unpaired Nyquist bin.
pub fn grid_index(detuning: f64, duration: f64, n: usize) -> Result<i64> {
    let x = detuning * duration / std::f64::consts::TAU;
    let l = x.round();
    if !x.is_finite() || (x - l).abs() > 1e-6 * l.abs().max(1.0) {
        return Err(Error::domain(format!(
            "detuning {detuning} is not on the grid of spacing 2 pi / {duration}"
        )));
    }
    let half = (n as i64 - 1) / 2;
    let l = l as i64;
    if l.abs() > half {
        return Err(Error::domain(format!(
            "detuning {detuning} lies outside the resolved band |l| <= {half}"
        )));
    }
    Ok(l)
}

/// `u(w_l)` for one grid index by direct summation, `O(n)`.
pub fn mode_at<T: Scalar>(trace: &FieldTrace<T>, l: i64) -> Complex<T> {
    let n = trace.n_samples();
    let step = l.rem_euclid(n as i64) as u128;
    let mut acc = Complex::new(0.0_f64, 0.0);
    for (j, a) in trace.samples.iter().enumerate() {
        let r = (step * j as u128 % n as u128) as f64;
        let ph = Complex::from_polar(1.0, std::f64::consts::TAU * r / n as f64);
        acc += ph * Complex::new(a.re.as_f64(), a.im.as_f64());
    }
    let dt = trace.dt.as_f64();
    let scale = dt / (dt * n as f64).sqrt();
    Complex::new(T::lit(acc.re * scale), T::lit(acc.im * scale))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumEstimate {
    /// Detunings, strictly increasing and symmetric about zero, rad/s.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub ensemble_size: usize,
}

impl SpectrumEstimate {
    pub fn peak(&self) -> (f64, f64) {
        let (i, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        (self.grid[i], v)
    }

    pub fn value_at(&self, detuning: f64) -> Option<(f64, f64)> {
        let spacing = self.grid.get(1).map(|g| g - self.grid[0])?;
        let i = ((detuning - self.grid[0]) / spacing).round();
        if i < 0.0 || i as usize >= self.grid.len() || (self.grid[i as usize] - detuning).abs() > 1e-6 * spacing {
            return None;
        }
        Some((self.values[i as usize], self.std_errors[i as usize]))
    }

    /// Full width at half of the peak value, by linear interpolation
    /// between the bins that straddle the half level on each side.
    pub fn fwhm(&self) -> Option<f64> {
        half_maximum_width(&self.grid, &self.values)
    }
}

/// Width of the region around the maximum of `values` where it stays above
/// half the maximum.
pub fn half_maximum_width(grid: &[f64], values: &[f64]) -> Option<f64> {
    let (peak, top) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let half = top / 2.0;
    let cross = |i: usize, j: usize| {
        let (x0, x1, y0, y1) = (grid[i], grid[j], values[i], values[j]);
        x0 + (half - y0) * (x1 - x0) / (y1 - y0)
    };
    let right = (peak..values.len() - 1).find(|&i| values[i + 1] < half).map(|i| cross(i, i + 1))?;
    let left = (1..=peak).rev().find(|&i| values[i - 1] < half).map(|i| cross(i, i - 1))?;
    Some(right - left)
}

/// Symmetric output ordering: signed indices `-h..=h` with `h = (n-1)/2`.
fn symmetric_bins(n: usize) -> impl Iterator<Item = (i64, usize)> {
    let h = (n as i64 - 1) / 2;
    (-h..=h).map(move |l| (l, fft::bin_of(l, n).expect("within half band")))
}

/// Single-shot `|u(w_l)|^2` on the symmetric grid (the unpaired Nyquist bin
/// of an even-length record is omitted).
pub fn periodogram<T: Scalar>(trace: &FieldTrace<T>) -> Result<SpectrumEstimate> {
    let m = mode_amplitudes(trace)?;
    let n = m.len();
    let duration = m.duration.as_f64();
    let (grid, values) = symmetric_bins(n)
        .map(|(l, k)| (l as f64 * std::f64::consts::TAU / duration, m.modes[k].norm_sqr().as_f64()))
        .unzip::<_, _, Vec<_>, Vec<_>>();
    Ok(SpectrumEstimate {
        std_errors: vec![0.0; grid.len()],
        grid,
        values,
        ensemble_size: 1,
    })
}

/// Relative mismatch between the record's mean flux and the sum of its
/// periodogram over the full grid divided by the duration.
pub fn parseval_residual<T: Scalar>(trace: &FieldTrace<T>) -> Result<f64> {
    let m = mode_amplitudes(trace)?;
    let t = m.duration.as_f64();
    let dt = trace.dt.as_f64();
    let time = crate::stats::compensated_sum(trace.samples.iter().map(|z| z.norm_sqr().as_f64() * dt)) / t;
    let freq = crate::stats::compensated_sum(m.modes.iter().map(|z| z.norm_sqr().as_f64())) / t;
    if time == 0.0 {
        return Ok(freq.abs());
    }
    Ok(((time - freq) / time).abs())
}

struct SpectrumAcc {
    shape: Option<(usize, f64)>,
    mismatch: bool,
    bins: Vec<Moments<f64>>,
}

/// Per-bin ensemble mean and standard error of the periodogram.
pub fn spectrum<T: Scalar, S: TraceSource<T> + ?Sized>(source: &S) -> Result<SpectrumEstimate> {
    if source.len() < 2 {
        return Err(Error::domain("spectrum needs at least 2 traces"));
    }
    let acc = fold_traces(
        source,
        || SpectrumAcc {
            shape: None,
            mismatch: false,
            bins: Vec::new(),
        },
        |acc, t| {
            let shape = (t.n_samples(), t.dt.as_f64());
            match acc.shape {
                None => {
                    acc.shape = Some(shape);
                    acc.bins = vec![Moments::new(); shape.0];
                }
                Some(s) if s != shape => {
                    acc.mismatch = true;
                    return Ok(());
                }
                Some(_) => {}
            }
            let modes = fft::to_modes(&t.samples, t.dt);
            for (m, z) in acc.bins.iter_mut().zip(&modes) {
                m.push(z.norm_sqr().as_f64());
            }
            Ok(())
        },
        |a, b| {
            a.mismatch |= b.mismatch;
            match (a.shape, b.shape) {
                (_, None) => {}
                (None, Some(_)) => {
                    a.shape = b.shape;
                    a.bins = b.bins;
                }
                (Some(x), Some(y)) if x != y => a.mismatch = true,
                _ => {
                    for (x, y) in a.bins.iter_mut().zip(&b.bins) {
                        x.merge(y);
                    }
                }
            }
        },
    )?;
    if acc.mismatch {
        return Err(Error::domain("traces in the ensemble have different grids"));
    }
    let (n, dt) = acc.shape.expect("non-empty ensemble");
    let duration = n as f64 * dt;
    let mut est = SpectrumEstimate {
        grid: Vec::new(),
        values: Vec::new(),
        std_errors: Vec::new(),
        ensemble_size: source.len(),
    };
    for (l, k) in symmetric_bins(n) {
        est.grid.push(l as f64 * std::f64::consts::TAU / duration);
        est.values.push(acc.bins[k].mean);
        est.std_errors.push(acc.bins[k].std_error());
    }
    Ok(est)
}

/// Inverse transform of a spectrum estimate, `(1/T) sum_l S_l e^{-i w_l tau}`:
/// the circular field autocorrelation `E[alpha*(t) alpha(t + tau)]` of the
/// records it came from.
pub fn correlation_from_spectrum(est: &SpectrumEstimate, taus: &[f64]) -> Vec<Complex<f64>> {
    let spacing = est.grid[1] - est.grid[0];
    let duration = std::f64::consts::TAU / spacing;
    taus.iter()
        .map(|&tau| {
            est.grid
                .iter()
                .zip(&est.values)
                .map(|(&w, &s)| Complex::from_polar(s, -w * tau))
                .sum::<Complex<f64>>()
                / duration
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagPoint {
    pub tau: f64,
    pub value: Complex<f64>,
    pub std_error: f64,
}

/// Time-averaged `alpha*(t) alpha(t + tau)` over each trace's analysis
/// region (no wrap-around), then averaged over the ensemble. `lags` are in
/// samples.
pub fn lag_correlation<T: Scalar, S: TraceSource<T> + ?Sized>(source: &S, lags: &[usize]) -> Result<Vec<LagPoint>> {
    if source.is_empty() {
        return Err(Error::domain("empty ensemble"));
    }
    let (acc, dt) = fold_traces(
        source,
        || (vec![ComplexMoments::new(); lags.len()], 0.0),
        |(acc, dt), t| {
            let a = t.analysis();
            *dt = t.dt.as_f64();
            for (m, &lag) in acc.iter_mut().zip(lags) {
                if lag >= a.len() {
                    return Err(Error::domain(format!("lag {lag} exceeds the analysis region")));
                }
                let pairs = a.len() - lag;
                let sum: Complex<f64> = (0..pairs)
                    .map(|j| {
                        let z = a[j].conj() * a[j + lag];
                        Complex::new(z.re.as_f64(), z.im.as_f64())
                    })
                    .sum();
                m.push(sum / pairs as f64);
            }
            Ok(())
        },
        |(a, da), (b, db)| {
            for (x, y) in a.iter_mut().zip(&b) {
                x.merge(y);
            }
            if db > 0.0 {
                *da = db;
            }
        },
    )?;
    Ok(lags
        .iter()
        .zip(acc)
        .map(|(&lag, m)| LagPoint {
            tau: lag as f64 * dt,
            value: m.mean(),
            std_error: m.std_error(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionTest {
    pub detuning: f64,
    /// Ensemble mean of the periodogram in the tested bin.
    pub mean: f64,
    pub ks: KsReport,
    pub pass: bool,
}

/// Kolmogorov-Smirnov test of single-shot periodogram values in one bin
/// against the exponential law with the ensemble mean.
pub fn periodogram_distribution_test<T: Scalar, S: TraceSource<T> + ?Sized>(
    source: &S,
    detuning: f64,
) -> Result<DistributionTest> {
    if source.len() < MIN_DISTRIBUTION_TRACES {
        return Err(Error::domain(format!(
            "periodogram distribution test needs at least {MIN_DISTRIBUTION_TRACES} traces, got {}",
            source.len()
        )));
    }
    let values: Vec<f64> = fold_traces(
        source,
        Vec::new,
        |v, t| {
            let l = grid_index(detuning, t.duration().as_f64(), t.n_samples())?;
            v.push(mode_at(t, l).norm_sqr().as_f64());
            Ok(())
        },
        |a, b| a.extend(b),
    )?;
    let mean = crate::stats::compensated_sum(values.iter().copied()) / values.len() as f64;
    if mean <= 0.0 {
        return Err(Error::domain("periodogram is identically zero in this bin"));
    }
    let ks = ks_one_sample(&values, |x| if x <= 0.0 { 0.0 } else { -(-x / mean).exp_m1() })?;
    Ok(DistributionTest {
        detuning,
        mean,
        pass: ks.p_value > SIGNIFICANCE,
        ks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub pairs: Vec<(f64, f64)>,
    pub values: Vec<Complex<f64>>,
    pub std_errors: Vec<f64>,
    pub ensemble_size: usize,
}

/// Ensemble mean of `u(w) u*(w')` for each requested pair of grid detunings.
pub fn cross_mode_correlation<T: Scalar, S: TraceSource<T> + ?Sized>(
    source: &S,
    pairs: &[(f64, f64)],
) -> Result<CorrelationEstimate> {
    if source.is_empty() {
        return Err(Error::domain("empty ensemble"));
    }
    let acc = fold_traces(
        source,
        || vec![ComplexMoments::new(); pairs.len()],
        |acc, t| {
            let duration = t.duration().as_f64();
            let n = t.n_samples();
            for (m, &(w, w2)) in acc.iter_mut().zip(pairs) {
                let a = mode_at(t, grid_index(w, duration, n)?);
                let b = if w2 == w { a } else { mode_at(t, grid_index(w2, duration, n)?) };
                let z = a * b.conj();
                m.push(Complex::new(z.re.as_f64(), z.im.as_f64()));
            }
            Ok(())
        },
        |a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                x.merge(y);
            }
        },
    )?;
    Ok(CorrelationEstimate {
        pairs: pairs.to_vec(),
        values: acc.iter().map(|m| m.mean()).collect(),
        std_errors: acc.iter().map(|m| m.std_error()).collect(),
        ensemble_size: source.len(),
    })
}

/// Leading finite-record prediction for `E[u(w) u*(w')]` of a stationary
/// Lorentzian beam observed for `duration`:
/// `delta_{w,w'} nu f(w) - nu (2 / (T Gamma)) f(w) f(w') [1 - w w' (2/Gamma)^2]`.
pub fn finite_record_correlation(nu: f64, gamma: f64, duration: f64, w: f64, w2: f64) -> f64 {
    let f1 = lorentzian(w, 0.0, gamma);
    let f2 = lorentzian(w2, 0.0, gamma);
    let spacing = std::f64::consts::TAU / duration;
    let diagonal = if (w - w2).abs() < 1e-6 * spacing { nu * f1 } else { 0.0 };
    diagonal - nu * 2.0 / (duration * gamma) * f1 * f2 * (1.0 - w * w2 * (2.0 / gamma).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarityReport {
    pub n_traces: usize,
    pub n_windows: usize,
    /// Variance ratio of window-position means to the trace-by-position
    /// interaction (large when the mean intensity depends on position).
    pub position_f: f64,
    pub position_p: f64,
    /// Variance ratio of per-trace means to within-trace window scatter
    /// (near zero when every record carries the same total energy).
    pub dispersion_f: f64,
    pub dispersion_p: f64,
    /// Bonferroni-combined p-value, `min(1, 2 min(p_position, p_dispersion))`.
    pub p_value: f64,
    /// Windowed intensity is constant to rounding; both statistics undefined.
    pub degenerate: bool,
    pub pass: bool,
}

/// Default number of permutations used by [`stationarity_test`].
pub const PERMUTATIONS: usize = 2999;

/// Windowed mean-intensity homogeneity test.
///
/// Each trace's analysis region is split into `n_windows` equal windows and
/// the mean intensity of each window forms one cell of a traces x positions
/// table. Two permutation tests are run on it:
///
/// * position: two-way F of the position effect against the interaction,
///   permuting cells within each trace (upper tail);
/// * dispersion: one-way F of between-trace against within-trace scatter,
///   permuting cells across the whole table (lower tail). A stationary
///   beam's records fluctuate in total energy; a record-level constraint
///   that pins the energy of every record drives this ratio to zero.
///
/// Permutations draw from `seed`'s permutation stream.
pub fn stationarity_test<T: Scalar, S: TraceSource<T> + ?Sized>(
    source: &S,
    n_windows: usize,
    permutations: usize,
    seed: u64,
) -> Result<StationarityReport> {
    if n_windows < 4 {
        return Err(Error::domain(format!("need at least 4 windows, got {n_windows}")));
    }
    if source.len() < 2 {
        return Err(Error::domain("stationarity test needs at least 2 traces"));
    }
    let rows: Vec<Vec<f64>> = fold_traces(
        source,
        Vec::new,
        |rows, t| {
            let a = t.analysis();
            if a.len() < n_windows {
                return Err(Error::domain(format!(
                    "trace of {} samples cannot be split into {n_windows} windows",
                    a.len()
                )));
            }
            let w = a.len() / n_windows;
            rows.push(
                (0..n_windows)
                    .map(|i| a[i * w..(i + 1) * w].iter().map(|z| z.norm_sqr().as_f64()).sum::<f64>() / w as f64)
                    .collect(),
            );
            Ok(())
        },
        |a, b| a.extend(b),
    )?;
    let m = rows.len();
    let w = n_windows;
    let mut cells: Vec<f64> = rows.concat();

    let total: Moments<f64> = cells.iter().copied().collect();
    let degenerate = total.variance() <= (1e-12 * total.mean.abs()).powi(2);
    if degenerate {
        return Ok(StationarityReport {
            n_traces: m,
            n_windows: w,
            position_f: f64::NAN,
            position_p: 1.0,
            dispersion_f: f64::NAN,
            dispersion_p: 1.0,
            p_value: 1.0,
            degenerate: true,
            pass: true,
        });
    }

    let position_f = position_statistic(&cells, m, w);
    let dispersion_f = dispersion_statistic(&cells, m, w);
    let mut rng = stream(seed, 0, Lane::Permutation);
    let (mut above, mut below) = (0usize, 0usize);
    let mut scratch = cells.clone();
    for _ in 0..permutations {
        for row in scratch.chunks_mut(w) {
            row.shuffle(&mut rng);
        }
        if position_statistic(&scratch, m, w) >= position_f {
            above += 1;
        }
    }
    for _ in 0..permutations {
        cells.shuffle(&mut rng);
        if dispersion_statistic(&cells, m, w) <= dispersion_f {
            below += 1;
        }
    }
    let b = permutations as f64 + 1.0;
    let position_p = (above as f64 + 1.0) / b;
    let dispersion_p = (below as f64 + 1.0) / b;
    let p_value = (2.0 * position_p.min(dispersion_p)).min(1.0);
    Ok(StationarityReport {
        n_traces: m,
        n_windows: w,
        position_f,
        position_p,
        dispersion_f,
        dispersion_p,
        p_value,
        degenerate: false,
        pass: p_value > SIGNIFICANCE,
    })
}

fn row_means(cells: &[f64], w: usize) -> Vec<f64> {
    cells.chunks(w).map(|r| r.iter().sum::<f64>() / w as f64).collect()
}

fn position_statistic(cells: &[f64], m: usize, w: usize) -> f64 {
    let rows = row_means(cells, w);
    let grand = rows.iter().sum::<f64>() / m as f64;
    let mut cols = vec![0.0; w];
    for r in cells.chunks(w) {
        for (c, x) in cols.iter_mut().zip(r) {
            *c += x;
        }
    }
    cols.iter_mut().for_each(|c| *c /= m as f64);
    let ss_pos: f64 = m as f64 * cols.iter().map(|c| (c - grand).powi(2)).sum::<f64>();
    let mut ss_res = 0.0;
    for (r, rm) in cells.chunks(w).zip(&rows) {
        for (x, c) in r.iter().zip(&cols) {
            ss_res += (x - rm - c + grand).powi(2);
        }
    }
    let df_pos = (w - 1) as f64;
    let df_res = ((m - 1) * (w - 1)) as f64;
    (ss_pos / df_pos) / (ss_res / df_res)
}

fn dispersion_statistic(cells: &[f64], m: usize, w: usize) -> f64 {
    let rows = row_means(cells, w);
    let grand = rows.iter().sum::<f64>() / m as f64;
    let ss_between: f64 = w as f64 * rows.iter().map(|r| (r - grand).powi(2)).sum::<f64>();
    let ss_within: f64 = cells
        .chunks(w)
        .zip(&rows)
        .map(|(r, rm)| r.iter().map(|x| (x - rm).powi(2)).sum::<f64>())
        .sum();
    let ms_between = ss_between / (m - 1) as f64;
    let ms_within = ss_within / (m * (w - 1)) as f64;
    ms_between / ms_within
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgen::{gen_laser_trace, BeamModelSpec, Ensemble};

    fn constant_trace(c: Complex<f64>, n: usize, dt: f64) -> FieldTrace<f64> {
        let m = BeamModelSpec::laser(1.0, 1.0).unwrap();
        FieldTrace::from_samples(vec![c; n], dt, m, 0, 0).unwrap()
    }

    #[test]
    fn constant_trace_is_a_dc_line() {
        let c = Complex::new(1.5, -0.5);
        let t = constant_trace(c, 100, 0.01);
        let p = periodogram(&t).unwrap();
        let (w, v) = p.peak();
        assert_eq!(w, 0.0);
        assert!((v - c.norm_sqr() * t.duration()).abs() < 1e-12);
        let off: f64 = p.values.iter().filter(|&&x| x != v).sum();
        assert!(off < 1e-24);
        assert_eq!(p.grid.len(), 99);
        assert_eq!(p.grid[0], -p.grid[98]);
    }

    #[test]
    fn pure_tone_hits_one_bin() {
        let n = 256;
        let dt = 0.01;
        let duration = n as f64 * dt;
        let w1 = 7.0 * std::f64::consts::TAU / duration;
        let m = BeamModelSpec::laser(1.0, 1.0).unwrap();
        // e^{-i w t} time dependence maps to +w on the detuning grid
        let s: Vec<_> = (0..n).map(|j| Complex::from_polar(1.0, -w1 * j as f64 * dt)).collect();
        let t = FieldTrace::from_samples(s, dt, m, 0, 0).unwrap();
        let p = periodogram(&t).unwrap();
        for (g, v) in p.grid.iter().zip(&p.values) {
            if (g - w1).abs() < 1e-9 {
                assert!((v - duration).abs() < 1e-9);
            } else {
                assert!(*v < 1e-20);
            }
        }
        let direct = mode_at(&t, 7);
        assert!((direct.norm_sqr() - duration).abs() < 1e-9);
    }

    #[test]
    fn parseval_holds() {
        let m = BeamModelSpec::laser(100.0, 1.0).unwrap();
        let t = gen_laser_trace(&m, 0.01, 10_000, 1, 0).unwrap();
        assert!(parseval_residual(&t).unwrap() < 1e-10);
    }

    #[test]
    fn grid_checks() {
        let duration = 10.0;
        let spacing = std::f64::consts::TAU / duration;
        assert_eq!(grid_index(3.0 * spacing, duration, 100).unwrap(), 3);
        assert!(grid_index(3.5 * spacing, duration, 100).is_err());
        assert!(grid_index(50.0 * spacing, duration, 100).is_err());
        assert_eq!(grid_index(-49.0 * spacing, duration, 100).unwrap(), -49);
    }

    #[test]
    fn spectrum_rejects_mixed_grids() {
        let m = BeamModelSpec::laser(1.0, 1.0).unwrap();
        let v = vec![
            gen_laser_trace(&m, 0.01, 100, 1, 0).unwrap(),
            gen_laser_trace(&m, 0.01, 101, 1, 1).unwrap(),
        ];
        assert!(spectrum(&v).is_err());
        assert!(spectrum(&v[..1]).is_err());
    }

    #[test]
    fn zero_brightness_spectrum_is_zero() {
        let m = BeamModelSpec::thermal(0.0, 1.0).unwrap();
        let e = Ensemble::new(m, 0.01, 2000, 1, 4);
        let s = spectrum(&e).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fwhm_of_sampled_lorentzian() {
        let grid: Vec<f64> = (-500..=500).map(|i| i as f64 * 0.01).collect();
        let values: Vec<f64> = grid.iter().map(|&w| 7.0 * lorentzian(w, 0.0, 1.3)).collect();
        assert!((half_maximum_width(&grid, &values).unwrap() - 1.3).abs() < 1e-3);
    }

    #[test]
    fn correlation_from_spectrum_matches_circular_average() {
        let m = BeamModelSpec::thermal(100.0, 1.0).unwrap();
        // odd length keeps every bin paired
        let t = crate::fieldgen::gen_thermal_trace(&m, 0.01, 1001, 3, 0).unwrap();
        let p = periodogram(&t).unwrap();
        let n = t.n_samples();
        for lag in [0usize, 10, 250] {
            let c = correlation_from_spectrum(&p, &[lag as f64 * t.dt])[0];
            let direct: Complex<f64> =
                (0..n).map(|j| t.samples[j].conj() * t.samples[(j + lag) % n]).sum::<Complex<f64>>() / n as f64;
            assert!((c - direct).norm() < 1e-9 * direct.norm().max(1.0), "{c} {direct}");
        }
    }

    #[test]
    fn finite_record_prediction_terms() {
        let (nu, g, t) = (100.0, 1.0, 50.0);
        assert!((finite_record_correlation(nu, g, t, 0.0, 0.0) - nu * (1.0 - 2.0 / 50.0)).abs() < 1e-12);
        let half = std::f64::consts::TAU / t * 4.0;
        let off = finite_record_correlation(nu, g, t, 0.0, half);
        let f = lorentzian(half, 0.0, g);
        assert!((off + nu * 2.0 / t * f).abs() < 1e-12);
    }

    #[test]
    fn stationarity_rejects_drift_and_pinned_energy() {
        let m = BeamModelSpec::laser(1.0, 1.0).unwrap();
        let mut rng = stream(4, 0, Lane::States);
        let make = |f: &dyn Fn(usize, usize) -> f64| -> Vec<FieldTrace<f64>> {
            (0..200)
                .map(|i| {
                    let s = (0..800).map(|j| Complex::new(f(i, j).sqrt(), 0.0)).collect();
                    FieldTrace::from_samples(s, 0.01, m, 0, i as u64).unwrap()
                })
                .collect()
        };
        use rand::Rng;
        let noise: Vec<f64> = (0..200 * 800).map(|_| rng.random::<f64>()).collect();
        let block = |i: usize, j: usize| noise[i * 800 + (j / 100) * 100];
        let iid = make(&|i, j| 1.0 + block(i, j));
        let r = stationarity_test(&iid, 8, PERMUTATIONS, 1).unwrap();
        assert!(r.pass, "{r:?}");
        let drift = make(&|i, j| 1.0 + block(i, j) + j as f64 / 800.0);
        let r = stationarity_test(&drift, 8, PERMUTATIONS, 1).unwrap();
        assert!(!r.pass && r.position_p < 1e-3, "{r:?}");
        // every record's windows are a permutation of the same values
        let pinned = make(&|i, j| 1.0 + noise[((j / 100) + i) % 8 * 100]);
        let r = stationarity_test(&pinned, 8, PERMUTATIONS, 1).unwrap();
        assert!(!r.pass && r.dispersion_p < 1e-3, "{r:?}");
        let flat = make(&|_, _| 2.0);
        assert!(stationarity_test(&flat, 8, 99, 1).unwrap().degenerate);
        assert!(stationarity_test(&flat, 3, 99, 1).is_err());
    }
}
