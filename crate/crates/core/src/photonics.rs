//! Lorentzian filtering, intensity correlations and photon counting.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft;
use crate::fieldgen::{fold_traces, lorentzian, BeamModelSpec, Ensemble, FieldTrace, TraceSource};
use crate::num::{positive, Complex, Scalar};
use crate::rng::{stream, Lane};
use crate::states::poisson_count;
use crate::stats::Moments;

/// Filter settling margin in units of `1/fwhm`.
pub const SETTLE_WIDTHS: f64 = 10.0;

/// Single-pole filter of Lorentzian power transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterSpec<T> {
    /// Centre, as a detuning from the carrier, rad/s.
    pub center_detuning: T,
    /// Power FWHM `delta omega`, rad/s.
    pub fwhm: T,
}

impl<T: Scalar> FilterSpec<T> {
    pub fn new(center_detuning: T, fwhm: T) -> Result<Self> {
        if !center_detuning.is_finite() {
            return Err(Error::domain("filter centre must be finite"));
        }
        if !positive(fwhm) {
            return Err(Error::domain(format!("filter FWHM must be finite and > 0, got {fwhm}")));
        }
        Ok(Self { center_detuning, fwhm })
    }

    pub fn centered(fwhm: T) -> Result<Self> {
        Self::new(T::zero(), fwhm)
    }

    /// Amplitude response `(d/2) / (d/2 - i (w - w_f))`; causal for the
    /// `e^{-i w t}` time dependence used throughout.
    pub fn response(&self, w: T) -> Complex<T> {
        let h = self.fwhm / T::lit(2.0);
        Complex::new(h, T::zero()) / Complex::new(h, -(w - self.center_detuning))
    }

    /// `|response|^2`, the unit-height Lorentzian.
    pub fn power_response(&self, w: T) -> T {
        lorentzian(w, self.center_detuning, self.fwhm)
    }

    /// Samples discarded at the start of a record of step `dt`.
    pub fn settle_samples(&self, dt: T) -> usize {
        (T::lit(SETTLE_WIDTHS) / (self.fwhm * dt)).ceil().to_usize().unwrap_or(usize::MAX)
    }
}

/// Multiplies the record's mode amplitudes by the filter response. The
/// record is treated as periodic, so the first `10/fwhm` of the output is
/// marked as settling and skipped by time-domain statistics.
pub fn apply_filter<T: Scalar>(trace: &FieldTrace<T>, filter: &FilterSpec<T>) -> Result<FieldTrace<T>> {
    let nyquist = T::PI() / trace.dt;
    if filter.fwhm >= nyquist {
        return Err(Error::config(format!(
            "filter FWHM {} not resolvable with dt = {}; need FWHM < pi/dt = {nyquist}",
            filter.fwhm, trace.dt
        )));
    }
    let n = trace.n_samples();
    let settle = trace.settle.saturating_add(filter.settle_samples(trace.dt));
    if settle.saturating_add(2) > n {
        return Err(Error::config(format!(
            "record of {n} samples cannot absorb a settling margin of {settle} samples (10/FWHM)"
        )));
    }
    let mut modes = fft::to_modes(&trace.samples, trace.dt);
    let duration = trace.duration();
    for (k, u) in modes.iter_mut().enumerate() {
        *u = *u * filter.response(fft::bin_frequency(k, n, duration));
    }
    let mut out = trace.clone();
    out.samples = fft::from_modes(modes, duration);
    out.filters.push(*filter);
    out.settle = settle;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct G2Point {
    pub tau: f64,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G2Estimate {
    pub points: Vec<G2Point>,
    pub ensemble_size: usize,
}

/// Per-trace sums for one lag, centred on the trace's mean intensity `s`.
#[derive(Debug, Clone, Copy, Default)]
struct LagTerms {
    /// Mean of `(I_j - s)(I_{j+m} - s)`.
    cross: f64,
    /// Mean of `(I_j - s) + (I_{j+m} - s)` over the same pairs.
    edges: f64,
}

/// `g2(tau) = <I(t) I(t + tau)> / <I>^2`, averaged over time origins in
/// each trace's analysis region and over the ensemble. `lags` are in
/// samples. Standard errors treat traces as independent replicates
/// (delta method on the ratio).
pub fn g2<T: Scalar, S: TraceSource<T> + ?Sized>(source: &S, lags: &[usize]) -> Result<G2Estimate> {
    if source.is_empty() {
        return Err(Error::domain("g2 needs a non-empty ensemble"));
    }
    type PerTrace = (f64, f64, Vec<LagTerms>);
    let rows: Vec<PerTrace> = fold_traces(
        source,
        Vec::new,
        |acc, t| {
            let a = t.analysis();
            if let Some(&m) = lags.iter().find(|&&m| m >= a.len()) {
                return Err(Error::domain(format!(
                    "lag of {m} samples exceeds the analysis region ({} samples)",
                    a.len()
                )));
            }
            let intensity: Vec<f64> = a.iter().map(|z| z.norm_sqr().as_f64()).collect();
            let s = crate::stats::compensated_sum(intensity.iter().copied()) / intensity.len() as f64;
            let dev: Vec<f64> = intensity.iter().map(|x| x - s).collect();
            let terms = lags
                .iter()
                .map(|&m| {
                    let pairs = dev.len() - m;
                    let mut cross = crate::stats::CompensatedSum::new();
                    let mut edges = crate::stats::CompensatedSum::new();
                    for j in 0..pairs {
                        cross.add(dev[j] * dev[j + m]);
                        edges.add(dev[j] + dev[j + m]);
                    }
                    LagTerms {
                        cross: cross.value() / pairs as f64,
                        edges: edges.value() / pairs as f64,
                    }
                })
                .collect();
            acc.push((s, t.dt.as_f64(), terms));
            Ok(())
        },
        |a, b| a.extend(b),
    )?;

    let m = rows.len() as f64;
    let means: Moments<f64> = rows.iter().map(|r| r.0).collect();
    let mean_i = means.mean;
    if mean_i <= 0.0 {
        return Err(Error::domain("g2 undefined for a dark ensemble"));
    }
    // population variance of the per-trace means
    let spread = means.m2 / m;
    let dt = rows[0].1;

    let points = lags
        .iter()
        .enumerate()
        .map(|(li, &lag)| {
            let mut excess = 0.0;
            for (s, _, terms) in &rows {
                let t = terms[li];
                excess += t.cross + s * t.edges;
            }
            excess = excess / m + spread;
            let value = 1.0 + excess / (mean_i * mean_i);

            // delta method for mean(x) / mean(y)^2 with x = <I I_m>, y = <I>
            let xs: Vec<f64> = rows
                .iter()
                .map(|(s, _, terms)| terms[li].cross + s * terms[li].edges + s * s)
                .collect();
            let mean_x = xs.iter().sum::<f64>() / m;
            let (mut vxx, mut vyy, mut vxy) = (0.0, 0.0, 0.0);
            for ((s, _, _), x) in rows.iter().zip(&xs) {
                let dx = x - mean_x;
                let dy = s - mean_i;
                vxx += dx * dx;
                vyy += dy * dy;
                vxy += dx * dy;
            }
            let std_error = if rows.len() > 1 {
                let d = m - 1.0;
                let (vxx, vyy, vxy) = (vxx / d, vyy / d, vxy / d);
                let gx = 1.0 / (mean_i * mean_i);
                let gy = -2.0 * mean_x / mean_i.powi(3);
                ((gx * gx * vxx + gy * gy * vyy + 2.0 * gx * gy * vxy) / m).max(0.0).sqrt()
            } else {
                0.0
            };
            G2Point {
                tau: lag as f64 * dt,
                value,
                std_error,
            }
        })
        .collect();
    Ok(G2Estimate {
        points,
        ensemble_size: rows.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhotonCountRecord {
    /// Counting window actually used (a whole number of steps), s.
    pub window: f64,
    pub counts: Vec<u64>,
    pub mean: f64,
    /// Variance over mean; `NaN` when the mean is zero.
    pub fano: f64,
}

/// Splits the analysis region into windows of `window` seconds (rounded to
/// whole steps) and draws a Poisson count per window with mean equal to the
/// trapezoidal integral of `|alpha|^2`. At least 10 windows are required.
pub fn photon_counts<T: Scalar, R: Rng + ?Sized>(
    trace: &FieldTrace<T>,
    window: T,
    rng: &mut R,
) -> Result<PhotonCountRecord> {
    let dt = trace.dt.as_f64();
    let window = window.as_f64();
    if !(window.is_finite() && window >= dt * (1.0 - 1e-9)) {
        return Err(Error::config(format!("counting window {window} shorter than dt = {dt}")));
    }
    let steps = ((window / dt).round() as usize).max(1);
    let a = trace.analysis();
    let n_windows = (a.len() - 1) / steps;
    if n_windows < 10 {
        return Err(Error::config(format!(
            "record holds {n_windows} counting windows of {window}; need at least 10"
        )));
    }
    let counts: Vec<u64> = (0..n_windows)
        .map(|w| {
            let seg = &a[w * steps..=(w + 1) * steps];
            let ends = (seg[0].norm_sqr() + seg[steps].norm_sqr()).as_f64() / 2.0;
            let inner: f64 = seg[1..steps].iter().map(|z| z.norm_sqr().as_f64()).sum();
            poisson_count((ends + inner) * dt, rng)
        })
        .collect();
    let m: Moments<f64> = counts.iter().map(|&c| c as f64).collect();
    Ok(PhotonCountRecord {
        window: steps as f64 * dt,
        mean: m.mean,
        fano: if m.mean > 0.0 { m.variance() / m.mean } else { f64::NAN },
        counts,
    })
}

/// [`photon_counts`] drawing from the trace's own counting stream.
pub fn photon_counts_seeded<T: Scalar>(trace: &FieldTrace<T>, window: T) -> Result<PhotonCountRecord> {
    let mut rng = stream(trace.master_seed, trace.trace_index, Lane::Counts);
    photon_counts(trace, window, &mut rng)
}

/// Sample variance over sample mean.
pub fn fano_factor(counts: &[u64]) -> Result<f64> {
    if counts.len() < 2 {
        return Err(Error::domain("Fano factor needs at least 2 windows"));
    }
    let m: Moments<f64> = counts.iter().map(|&c| c as f64).collect();
    if m.mean <= 0.0 {
        return Err(Error::domain("Fano factor undefined for zero mean counts"));
    }
    Ok(m.variance() / m.mean)
}

/// Record layout for one filter width of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepParams {
    pub traces: usize,
    /// Largest step; narrowed to `1/fwhm` for broad filters.
    pub dt: f64,
    /// Shortest analysis region, s.
    pub min_analysis: f64,
    /// Analysis region in units of the filtered coherence time `1/fwhm`,
    /// used when that is longer than `min_analysis`.
    pub coherence_multiple: f64,
    pub master_seed: u64,
}

impl SweepParams {
    /// Step and sample count used at filter width `fwhm`.
    pub fn layout(&self, fwhm: f64) -> (f64, usize) {
        let dt = self.dt.min(1.0 / fwhm);
        let settle = SETTLE_WIDTHS / fwhm;
        let analysis = self.min_analysis.max(self.coherence_multiple / fwhm);
        let n = ((settle + analysis) / dt).ceil() as usize + 2;
        (dt, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta_omega: f64,
    pub g2: f64,
    pub std_error: f64,
    pub ensemble_size: usize,
    pub dt: f64,
    pub n_samples: usize,
}

/// `g2(0)` of the model's output behind a zero-detuning filter of each width.
/// A fresh seeded ensemble is generated per width with the layout from
/// [`SweepParams::layout`].
pub fn filtered_laser_sweep(
    model: &BeamModelSpec<f64>,
    widths: &[f64],
    params: &SweepParams,
) -> Result<Vec<SweepRow>> {
    model.validate()?;
    widths
        .iter()
        .map(|&w| {
            let filter = FilterSpec::centered(w)?;
            let (dt, n) = params.layout(w);
            let ens = Ensemble::new(*model, dt, n, params.master_seed, params.traces).with_filter(filter);
            let est = g2(&ens, &[0])?;
            let p = est.points[0];
            log::info!("sweep: fwhm = {w}, g2(0) = {} +- {}", p.value, p.std_error);
            Ok(SweepRow {
                delta_omega: w,
                g2: p.value,
                std_error: p.std_error,
                ensemble_size: est.ensemble_size,
                dt,
                n_samples: n,
            })
        })
        .collect()
}
