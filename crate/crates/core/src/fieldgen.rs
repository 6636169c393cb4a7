//! Coherent-amplitude beam generators.
//!
//! Every generator works in the frame rotating at the carrier, so a trace is
//! the slowly varying amplitude `alpha(t)` sampled at `t_j = j dt`, in units
//! of sqrt(photons/s): `|alpha|^2` is a photon flux. Each trace draws from
//! its own RNG stream keyed by `(master_seed, trace_index)`.

use std::borrow::Cow;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft;
use crate::num::{positive, Complex, Scalar};
use crate::photonics::{self, FilterSpec};
use crate::rng::{stream, Lane};

/// Finest time step, in units of `1/Gamma`, accepted by the time-domain
/// generators.
pub const MAX_STEP_GAMMA: f64 = 0.01;

/// Shortest record, in units of `1/Gamma`, accepted by the mode-space
/// generators.
pub const MIN_PERIOD_GAMMA: f64 = 10.0;

const STEP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamFamily {
    /// Complex Ornstein-Uhlenbeck amplitude (Gaussian, thermal-derived).
    Thermal,
    /// Constant modulus with Wiener phase diffusion.
    Laser,
    /// Phase-diffusing laser whose detuning wanders as a slow OU process.
    JitteredLaser,
    /// Independent fixed-modulus, random-phase amplitudes per frequency mode.
    KspaceProduct,
    /// Independent complex Gaussian amplitudes per frequency mode.
    PeriodicThermal,
}

impl BeamFamily {
    pub const ALL: [BeamFamily; 5] = [
        BeamFamily::Thermal,
        BeamFamily::Laser,
        BeamFamily::JitteredLaser,
        BeamFamily::KspaceProduct,
        BeamFamily::PeriodicThermal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BeamFamily::Thermal => "thermal",
            BeamFamily::Laser => "laser",
            BeamFamily::JitteredLaser => "jittered_laser",
            BeamFamily::KspaceProduct => "kspace_product",
            BeamFamily::PeriodicThermal => "periodic_thermal",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            BeamFamily::Thermal => 1,
            BeamFamily::Laser => 2,
            BeamFamily::JitteredLaser => 3,
            BeamFamily::KspaceProduct => 4,
            BeamFamily::PeriodicThermal => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.code() == code)
    }

    /// Families synthesised in mode space over one period of the record.
    pub fn is_periodic(self) -> bool {
        matches!(self, BeamFamily::KspaceProduct | BeamFamily::PeriodicThermal)
    }
}

impl std::str::FromStr for BeamFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::config(format!("unknown beam family `{s}`")))
    }
}

impl std::fmt::Display for BeamFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamModelSpec<T> {
    pub family: BeamFamily,
    /// Photons per coherence time.
    pub nu: T,
    /// Linewidth (FWHM), 1/s.
    pub gamma: T,
    /// Jitter band `Delta omega`, rad/s: twice the stationary standard
    /// deviation of the detuning. Zero outside the jittered family.
    pub jitter_band: T,
    /// Correlation time of the detuning, s. Zero outside the jittered family.
    pub jitter_corr_time: T,
}

impl<T: Scalar> BeamModelSpec<T> {
    pub fn new(family: BeamFamily, nu: T, gamma: T) -> Result<Self> {
        let spec = Self {
            family,
            nu,
            gamma,
            jitter_band: T::zero(),
            jitter_corr_time: T::zero(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn thermal(nu: T, gamma: T) -> Result<Self> {
        Self::new(BeamFamily::Thermal, nu, gamma)
    }

    pub fn laser(nu: T, gamma: T) -> Result<Self> {
        Self::new(BeamFamily::Laser, nu, gamma)
    }

    pub fn kspace_product(nu: T, gamma: T) -> Result<Self> {
        Self::new(BeamFamily::KspaceProduct, nu, gamma)
    }

    pub fn periodic_thermal(nu: T, gamma: T) -> Result<Self> {
        Self::new(BeamFamily::PeriodicThermal, nu, gamma)
    }

    /// A band of zero is accepted and reduces to the plain laser.
    pub fn jittered_laser(nu: T, gamma: T, band: T, corr_time: T) -> Result<Self> {
        let spec = Self {
            family: BeamFamily::JitteredLaser,
            nu,
            gamma,
            jitter_band: band,
            jitter_corr_time: corr_time,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu >= T::zero()) {
            return Err(Error::domain(format!("nu must be finite and >= 0, got {}", self.nu)));
        }
        if !positive(self.gamma) {
            return Err(Error::domain(format!(
                "Gamma must be finite and > 0, got {}",
                self.gamma
            )));
        }
        if self.family == BeamFamily::JitteredLaser {
            let band = self.jitter_band;
            if !(band.is_finite() && (band == T::zero() || band > self.gamma)) {
                return Err(Error::domain(format!(
                    "jitter band must exceed Gamma = {} (or be 0), got {band}",
                    self.gamma
                )));
            }
            if !(self.jitter_corr_time.is_finite() && self.jitter_corr_time * self.gamma > T::one()) {
                return Err(Error::domain(format!(
                    "jitter correlation time must exceed 1/Gamma = {}, got {}",
                    self.gamma.recip(),
                    self.jitter_corr_time
                )));
            }
        } else if self.jitter_band != T::zero() || self.jitter_corr_time != T::zero() {
            return Err(Error::domain(format!(
                "jitter parameters only apply to the jittered laser, not {}",
                self.family
            )));
        }
        Ok(())
    }

    /// Stationary photon flux `nu Gamma / 4`.
    pub fn mean_flux(&self) -> T {
        self.nu * self.gamma / T::lit(4.0)
    }

    /// Lorentzian line shape of unit height and FWHM `Gamma` at detuning `w`.
    pub fn line_shape(&self, w: T) -> T {
        lorentzian(w, T::zero(), self.gamma)
    }
}

/// Photons per coherence time of a source emitting `mu` photons per mode at
/// rate `kappa`: `4 kappa mu / Gamma`.
pub fn nu_from_rate<T: Scalar>(kappa: T, mu: T, gamma: T) -> Result<T> {
    if !(kappa.is_finite() && kappa >= T::zero() && mu.is_finite() && mu >= T::zero()) {
        return Err(Error::domain("kappa and mu must be finite and >= 0"));
    }
    if !positive(gamma) {
        return Err(Error::domain(format!("Gamma must be finite and > 0, got {gamma}")));
    }
    Ok(T::lit(4.0) * kappa * mu / gamma)
}

/// Unit-height Lorentzian `(w0/2)^2 / ((w0/2)^2 + (w - center)^2)` with FWHM `w0`.
#[inline]
pub fn lorentzian<T: Scalar>(w: T, center: T, fwhm: T) -> T {
    let h = fwhm / T::lit(2.0);
    let d = w - center;
    h * h / (h * h + d * d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrace<T> {
    pub samples: Vec<Complex<T>>,
    pub dt: T,
    pub model: BeamModelSpec<T>,
    pub master_seed: u64,
    pub trace_index: u64,
    /// Filters applied since generation, in order.
    pub filters: Vec<FilterSpec<T>>,
    /// Leading samples excluded from time-domain statistics because a
    /// filter has not yet forgotten the wrapped end of the record.
    pub settle: usize,
}

impl<T: Scalar> FieldTrace<T> {
    /// Wraps externally produced samples, checking the trace invariants.
    pub fn from_samples(
        samples: Vec<Complex<T>>,
        dt: T,
        model: BeamModelSpec<T>,
        master_seed: u64,
        trace_index: u64,
    ) -> Result<Self> {
        if !positive(dt) {
            return Err(Error::domain(format!("dt must be finite and > 0, got {dt}")));
        }
        if samples.len() < 2 {
            return Err(Error::domain("a trace needs at least 2 samples"));
        }
        if let Some(j) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::domain(format!("sample {j} is not finite")));
        }
        model.validate()?;
        Ok(Self {
            samples,
            dt,
            model,
            master_seed,
            trace_index,
            filters: Vec::new(),
            settle: 0,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    /// Record length `n dt`.
    pub fn duration(&self) -> T {
        self.dt * T::from_usize_lossy(self.samples.len())
    }

    pub fn time(&self, j: usize) -> T {
        self.dt * T::from_usize_lossy(j)
    }

    /// Samples past the settling margin.
    pub fn analysis(&self) -> &[Complex<T>] {
        &self.samples[self.settle.min(self.samples.len())..]
    }

    pub fn intensity(&self) -> impl Iterator<Item = T> + '_ {
        self.samples.iter().map(|z| z.norm_sqr())
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::domain(format!("need at least 2 samples, got {n}")))
    } else {
        Ok(())
    }
}

fn check_step<T: Scalar>(model: &BeamModelSpec<T>, dt: T) -> Result<()> {
    if !positive(dt) {
        return Err(Error::domain(format!("dt must be finite and > 0, got {dt}")));
    }
    let bound = T::lit(MAX_STEP_GAMMA) / model.gamma;
    if dt > bound * T::lit(1.0 + STEP_SLACK) {
        return Err(Error::config(format!(
            "dt = {dt} does not resolve the coherence time; need dt <= {MAX_STEP_GAMMA}/Gamma = {bound}"
        )));
    }
    Ok(())
}

fn check_period<T: Scalar>(gamma: T, duration: T) -> Result<()> {
    let bound = T::lit(MIN_PERIOD_GAMMA) / gamma;
    if !(duration.is_finite() && duration > bound) {
        return Err(Error::config(format!(
            "duration = {duration} too short for the mode grid; need duration > {MIN_PERIOD_GAMMA}/Gamma = {bound}"
        )));
    }
    Ok(())
}

fn check_family<T: Scalar>(model: &BeamModelSpec<T>, expected: BeamFamily) -> Result<()> {
    model.validate()?;
    if model.family != expected {
        return Err(Error::domain(format!(
            "expected a {expected} model, got {}",
            model.family
        )));
    }
    Ok(())
}

fn trace<T: Scalar>(
    samples: Vec<Complex<T>>,
    dt: T,
    model: BeamModelSpec<T>,
    master_seed: u64,
    trace_index: u64,
) -> FieldTrace<T> {
    FieldTrace {
        samples,
        dt,
        model,
        master_seed,
        trace_index,
        filters: Vec::new(),
        settle: 0,
    }
}

#[inline]
fn complex_normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re = T::standard_normal(rng);
    let im = T::standard_normal(rng);
    Complex::new(re, im)
}

/// One exact step of the thermal amplitude,
/// `alpha' = decay alpha + kick (g1 + i g2)` with `g1, g2` standard normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuStep<T> {
    pub decay: T,
    /// Per-quadrature standard deviation of the innovation.
    pub kick: T,
}

impl<T: Scalar> OuStep<T> {
    /// Transition over `dt` for linewidth `gamma` and stationary flux `flux`.
    pub fn new(gamma: T, flux: T, dt: T) -> Self {
        OuStep {
            decay: (-gamma * dt / T::lit(2.0)).exp(),
            kick: (-flux * (-gamma * dt).exp_m1() / T::lit(2.0)).sqrt(),
        }
    }

    /// Conditional mean and variance of `alpha` after `k` steps from a known
    /// start, propagated through the recursion.
    pub fn propagate(&self, start: Complex<T>, k: usize) -> (Complex<T>, T) {
        let (mut mean, mut var) = (start, T::zero());
        let d2 = self.decay * self.decay;
        let innovation = T::lit(2.0) * self.kick * self.kick;
        for _ in 0..k {
            mean = mean * self.decay;
            var = d2 * var + innovation;
        }
        (mean, var)
    }
}

/// Exact discretisation of the complex OU amplitude
/// `d alpha = -(Gamma/2) alpha dt + sqrt(nu Gamma^2 / 4) dW`, started from
/// its stationary law.
pub fn gen_thermal_trace<T: Scalar>(
    model: &BeamModelSpec<T>,
    dt: T,
    n: usize,
    master_seed: u64,
    trace_index: u64,
) -> Result<FieldTrace<T>> {
    check_family(model, BeamFamily::Thermal)?;
    check_step(model, dt)?;
    check_samples(n)?;
    let mut rng = stream(master_seed, trace_index, Lane::Field);
    let flux = model.mean_flux();
    let OuStep { decay, kick } = OuStep::new(model.gamma, flux, dt);
    let start = (flux / T::lit(2.0)).sqrt();

    let mut samples = Vec::with_capacity(n);
    let mut a = complex_normal::<T, _>(&mut rng) * start;
    samples.push(a);
    for _ in 1..n {
        a = a * decay + complex_normal::<T, _>(&mut rng) * kick;
        samples.push(a);
    }
    Ok(trace(samples, dt, *model, master_seed, trace_index))
}

/// Constant modulus `sqrt(nu Gamma / 4)` with phase diffusing at rate `Gamma`.
pub fn gen_laser_trace<T: Scalar>(
    model: &BeamModelSpec<T>,
    dt: T,
    n: usize,
    master_seed: u64,
    trace_index: u64,
) -> Result<FieldTrace<T>> {
    check_family(model, BeamFamily::Laser)?;
    check_step(model, dt)?;
    check_samples(n)?;
    let samples = phase_diffusion(model, None, dt, n, master_seed, trace_index);
    Ok(trace(samples, dt, *model, master_seed, trace_index))
}

/// Phase-diffusing laser with an OU detuning `delta(t)` of standard deviation
/// `Delta omega / 2` and correlation time `tau`: `d phi = delta dt + sqrt(Gamma) dW`.
///
/// The detuning and its integral over each step are drawn jointly from
/// their exact Gaussian transition law, from a stream separate from the
/// phase noise, so a zero band reproduces [`gen_laser_trace`] bit for bit.
pub fn gen_jittered_laser_trace<T: Scalar>(
    model: &BeamModelSpec<T>,
    dt: T,
    n: usize,
    master_seed: u64,
    trace_index: u64,
) -> Result<FieldTrace<T>> {
    check_family(model, BeamFamily::JitteredLaser)?;
    check_step(model, dt)?;
    check_samples(n)?;
    let jitter = DetuningStep::new(model.jitter_band / T::lit(2.0), model.jitter_corr_time, dt);
    let samples = phase_diffusion(model, Some(jitter), dt, n, master_seed, trace_index);
    Ok(trace(samples, dt, *model, master_seed, trace_index))
}

/// Exact one-step transition of an OU detuning and its time integral.
#[derive(Debug, Clone, Copy)]
struct DetuningStep<T> {
    sigma: T,
    decay: T,
    /// `E[integral | delta] = mean_gain * delta`.
    mean_gain: T,
    /// Lower-triangular factor of the conditional covariance of
    /// `(delta_next, integral)`.
    l11: T,
    l21: T,
    l22: T,
}

impl<T: Scalar> DetuningStep<T> {
    fn new(sigma: T, corr_time: T, dt: T) -> Self {
        let theta = corr_time.recip();
        let x = theta * dt;
        let one_minus_a = -(-x).exp_m1();
        let decay = T::one() - one_minus_a;
        let s2 = sigma * sigma;
        let var_next = s2 * one_minus_a * (T::lit(2.0) - one_minus_a);
        let cov = s2 / theta * one_minus_a * one_minus_a;
        // x - 2(1 - a) + (1 - a^2)/2, which cancels to O(x^3) for small x
        let bracket = if x < T::lit(1e-3) {
            let x3 = x * x * x;
            x3 * (T::lit(1.0 / 3.0) - x / T::lit(4.0) + x * x * T::lit(7.0 / 60.0)
                - x * x * x / T::lit(24.0))
        } else {
            x - T::lit(2.0) * one_minus_a + one_minus_a * (T::lit(2.0) - one_minus_a) / T::lit(2.0)
        };
        let var_int = T::lit(2.0) * s2 / (theta * theta) * bracket;
        let l11 = var_next.sqrt();
        let l21 = if l11 > T::zero() { cov / l11 } else { T::zero() };
        let l22 = (var_int - l21 * l21).max(T::zero()).sqrt();
        Self {
            sigma,
            decay,
            mean_gain: one_minus_a / theta,
            l11,
            l21,
            l22,
        }
    }
}

fn phase_diffusion<T: Scalar>(
    model: &BeamModelSpec<T>,
    jitter: Option<DetuningStep<T>>,
    dt: T,
    n: usize,
    master_seed: u64,
    trace_index: u64,
) -> Vec<Complex<T>> {
    let mut rng = stream(master_seed, trace_index, Lane::Field);
    let modulus = model.mean_flux().sqrt();
    let diffusion = (model.gamma * dt).sqrt();
    let tau = T::TAU();

    let mut jitter_state = jitter.map(|j| {
        let mut jr = stream(master_seed, trace_index, Lane::Jitter);
        let delta = j.sigma * T::standard_normal(&mut jr);
        (j, jr, delta)
    });

    let mut phi = tau * T::unit_uniform(&mut rng);
    let mut samples = Vec::with_capacity(n);
    samples.push(Complex::from_polar(modulus, phi));
    for _ in 1..n {
        let drift = match jitter_state.as_mut() {
            Some((j, jr, delta)) => {
                let z1 = T::standard_normal(jr);
                let z2 = T::standard_normal(jr);
                let integral = j.mean_gain * *delta + j.l21 * z1 + j.l22 * z2;
                *delta = j.decay * *delta + j.l11 * z1;
                integral
            }
            None => T::zero(),
        };
        let step = drift + diffusion * T::standard_normal(&mut rng);
        phi = wrap_phase(phi + step);
        samples.push(Complex::from_polar(modulus, phi));
    }
    samples
}

/// Reduces a phase to `[0, 2 pi)`.
#[inline]
fn wrap_phase<T: Scalar>(phi: T) -> T {
    let tau = T::TAU();
    let r = phi % tau;
    let r = if r < T::zero() { r + tau } else { r };
    if r >= tau {
        T::zero()
    } else {
        r
    }
}

fn from_mode_amplitudes<T: Scalar>(
    model: &BeamModelSpec<T>,
    duration: T,
    n: usize,
    master_seed: u64,
    trace_index: u64,
    draw: impl Fn(&mut crate::rng::StreamRng, T) -> Complex<T>,
) -> FieldTrace<T> {
    let mut rng = stream(master_seed, trace_index, Lane::Field);
    let modes: Vec<Complex<T>> = (0..n)
        .map(|k| {
            let f = model.line_shape(fft::bin_frequency(k, n, duration));
            draw(&mut rng, model.nu * f)
        })
        .collect();
    let samples = fft::from_modes(modes, duration);
    let dt = duration / T::from_usize_lossy(n);
    trace(samples, dt, *model, master_seed, trace_index)
}

/// Product over frequency modes of fixed-modulus, uniform-phase amplitudes
/// with `|u_l|^2 = nu f(w_l)`, transformed to `n` samples over `duration`.
pub fn gen_kspace_product_field<T: Scalar>(
    nu: T,
    gamma: T,
    duration: T,
    n: usize,
    master_seed: u64,
    trace_index: u64,
) -> Result<FieldTrace<T>> {
    let model = BeamModelSpec::kspace_product(nu, gamma)?;
    check_period(gamma, duration)?;
    check_samples(n)?;
    Ok(from_mode_amplitudes(&model, duration, n, master_seed, trace_index, |rng, occ| {
        Complex::from_polar(occ.sqrt(), T::TAU() * T::unit_uniform(rng))
    }))
}

/// Independent circular Gaussian mode amplitudes with `E|u_l|^2 = nu f(w_l)`:
/// an exactly periodic realisation of the thermal beam.
pub fn gen_periodic_thermal_field<T: Scalar>(
    nu: T,
    gamma: T,
    duration: T,
    n: usize,
    master_seed: u64,
    trace_index: u64,
) -> Result<FieldTrace<T>> {
    let model = BeamModelSpec::periodic_thermal(nu, gamma)?;
    check_period(gamma, duration)?;
    check_samples(n)?;
    Ok(from_mode_amplitudes(&model, duration, n, master_seed, trace_index, |rng, occ| {
        complex_normal::<T, _>(rng) * (occ / T::lit(2.0)).sqrt()
    }))
}

/// Dispatches on the model family. The mode-space families use the record
/// length `n dt` as their period.
pub fn generate<T: Scalar>(
    model: &BeamModelSpec<T>,
    dt: T,
    n: usize,
    master_seed: u64,
    trace_index: u64,
) -> Result<FieldTrace<T>> {
    match model.family {
        BeamFamily::Thermal => gen_thermal_trace(model, dt, n, master_seed, trace_index),
        BeamFamily::Laser => gen_laser_trace(model, dt, n, master_seed, trace_index),
        BeamFamily::JitteredLaser => gen_jittered_laser_trace(model, dt, n, master_seed, trace_index),
        BeamFamily::KspaceProduct | BeamFamily::PeriodicThermal => {
            if !positive(dt) {
                return Err(Error::domain(format!("dt must be finite and > 0, got {dt}")));
            }
            let duration = dt * T::from_usize_lossy(n);
            let f = if model.family == BeamFamily::KspaceProduct {
                gen_kspace_product_field
            } else {
                gen_periodic_thermal_field
            };
            f(model.nu, model.gamma, duration, n, master_seed, trace_index)
        }
    }
}

/// Indexed collection of traces that estimators fold over. Generated
/// ensembles produce each trace on demand so memory stays bounded.
pub trait TraceSource<T: Scalar>: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn trace(&self, i: usize) -> Result<Cow<'_, FieldTrace<T>>>;
}

impl<T: Scalar> TraceSource<T> for [FieldTrace<T>] {
    fn len(&self) -> usize {
        <[FieldTrace<T>]>::len(self)
    }

    fn trace(&self, i: usize) -> Result<Cow<'_, FieldTrace<T>>> {
        self.get(i)
            .map(Cow::Borrowed)
            .ok_or_else(|| Error::domain(format!("trace {i} out of range")))
    }
}

impl<T: Scalar> TraceSource<T> for Vec<FieldTrace<T>> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn trace(&self, i: usize) -> Result<Cow<'_, FieldTrace<T>>> {
        self.as_slice().trace(i)
    }
}

/// Seeded ensemble of `count` traces with indices `first_index..`, each
/// passed through `filters` in order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble<T> {
    pub model: BeamModelSpec<T>,
    pub dt: T,
    pub n_samples: usize,
    pub master_seed: u64,
    pub first_index: u64,
    pub count: usize,
    pub filters: Vec<FilterSpec<T>>,
}

impl<T: Scalar> Ensemble<T> {
    pub fn new(model: BeamModelSpec<T>, dt: T, n_samples: usize, master_seed: u64, count: usize) -> Self {
        Self {
            model,
            dt,
            n_samples,
            master_seed,
            first_index: 0,
            count,
            filters: Vec::new(),
        }
    }

    pub fn with_filter(mut self, filter: FilterSpec<T>) -> Self {
        self.filters.push(filter);
        self
    }

    pub fn starting_at(mut self, first_index: u64) -> Self {
        self.first_index = first_index;
        self
    }

    pub fn duration(&self) -> T {
        self.dt * T::from_usize_lossy(self.n_samples)
    }

    /// Generates every trace up front.
    pub fn collect(&self) -> Result<Vec<FieldTrace<T>>> {
        (0..self.count).map(|i| self.generate(i)).collect()
    }

    pub fn generate(&self, i: usize) -> Result<FieldTrace<T>> {
        let mut t = generate(&self.model, self.dt, self.n_samples, self.master_seed, self.first_index + i as u64)?;
        for f in &self.filters {
            t = photonics::apply_filter(&t, f)?;
        }
        Ok(t)
    }
}

impl<T: Scalar> TraceSource<T> for Ensemble<T> {
    fn len(&self) -> usize {
        self.count
    }

    fn trace(&self, i: usize) -> Result<Cow<'_, FieldTrace<T>>> {
        if i >= self.count {
            return Err(Error::domain(format!("trace {i} out of range")));
        }
        self.generate(i).map(Cow::Owned)
    }
}

/// Traces per work unit of [`fold_traces`].
pub const FOLD_CHUNK: usize = 8;
const FOLD_BATCH: usize = 16;

/// Folds `step` over every trace of `source`. Traces are grouped into fixed
/// chunks of [`FOLD_CHUNK`] consecutive indices, each chunk is folded from
/// `init()` (chunks may run in parallel), and chunk results are merged in
/// index order, so the result does not depend on scheduling.
pub fn fold_traces<T, S, A>(
    source: &S,
    init: impl Fn() -> A + Sync,
    step: impl Fn(&mut A, &FieldTrace<T>) -> Result<()> + Sync,
    merge: impl Fn(&mut A, A),
) -> Result<A>
where
    T: Scalar,
    S: TraceSource<T> + ?Sized,
    A: Send,
{
    let n = source.len();
    let chunks: Vec<(usize, usize)> = (0..n)
        .step_by(FOLD_CHUNK)
        .map(|s| (s, (s + FOLD_CHUNK).min(n)))
        .collect();
    let mut acc = init();
    for batch in chunks.chunks(FOLD_BATCH) {
        let parts: Vec<Result<A>> = batch
            .par_iter()
            .map(|&(lo, hi)| {
                let mut a = init();
                for i in lo..hi {
                    let t = source.trace(i)?;
                    step(&mut a, &t)?;
                }
                Ok(a)
            })
            .collect();
        for p in parts {
            merge(&mut acc, p?);
        }
    }
    Ok(acc)
}
