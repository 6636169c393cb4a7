//! Streaming moments, compensated sums and goodness-of-fit tests.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::num::{Complex, Scalar};

/// Running count, mean and centred second moment (Welford), mergeable with
/// Chan's update so that chunked reductions stay order-deterministic.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments<T> {
    pub count: u64,
    pub mean: T,
    pub m2: T,
}

impl<T: Scalar> Moments<T> {
    pub fn new() -> Self {
        Self {
            count: 0,
            mean: T::zero(),
            m2: T::zero(),
        }
    }

    #[inline]
    pub fn push(&mut self, x: T) {
        self.count += 1;
        let n = T::from_u64(self.count).unwrap();
        let delta = x - self.mean;
        self.mean = self.mean + delta / n;
        self.m2 = self.m2 + delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let na = T::from_u64(self.count).unwrap();
        let nb = T::from_u64(other.count).unwrap();
        let n = na + nb;
        let delta = other.mean - self.mean;
        self.mean = self.mean + delta * nb / n;
        self.m2 = self.m2 + other.m2 + delta * delta * na * nb / n;
        self.count += other.count;
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> T {
        if self.count < 2 {
            T::zero()
        } else {
            (self.m2 / T::from_u64(self.count - 1).unwrap()).max(T::zero())
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> T {
        if self.count < 2 {
            T::zero()
        } else {
            (self.variance() / T::from_u64(self.count).unwrap()).sqrt()
        }
    }
}

impl<T: Scalar> FromIterator<T> for Moments<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut m = Moments::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Moments of a complex sample, real and imaginary parts tracked separately.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexMoments<T> {
    pub re: Moments<T>,
    pub im: Moments<T>,
}

impl<T: Scalar> ComplexMoments<T> {
    pub fn new() -> Self {
        Self {
            re: Moments::new(),
            im: Moments::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, z: Complex<T>) {
        self.re.push(z.re);
        self.im.push(z.im);
    }

    pub fn merge(&mut self, other: &Self) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn count(&self) -> u64 {
        self.re.count
    }

    pub fn mean(&self) -> Complex<T> {
        Complex::new(self.re.mean, self.im.mean)
    }

    /// Standard error of the complex mean, `sqrt(E|z - mean|^2 / n)`.
    pub fn std_error(&self) -> T {
        (self.re.std_error().powi(2) + self.im.std_error().powi(2)).sqrt()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

pub fn compensated_sum<T: Scalar>(xs: impl IntoIterator<Item = T>) -> T {
    let mut acc = CompensatedSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges fast for small arguments
        let pi2 = std::f64::consts::PI.powi(2);
        let mut s = 0.0;
        for k in 1..=20 {
            let odd = (2 * k - 1) as f64;
            s += (-odd * odd * pi2 / (8.0 * lambda * lambda)).exp();
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF, with
/// Stephens' finite-sample correction on the asymptotic p-value.
pub fn ks_one_sample(data: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsReport> {
    if data.is_empty() {
        return Err(Error::domain("KS test needs at least one sample"));
    }
    if data.iter().any(|x| x.is_nan()) {
        return Err(Error::domain("KS test sample contains NaN"));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    let p = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
    Ok(KsReport {
        statistic: d,
        p_value: p,
        n: sorted.len(),
    })
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("KS two-sample test needs non-empty samples"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let sn = ne.sqrt();
    Ok(KsReport {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
        n: xs.len() + ys.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins actually used after pooling sparse cells.
    pub bins: usize,
}

/// Pearson chi-square goodness of fit. `probs` must cover the whole outcome
/// space (callers lump the tail into the last cell). Adjacent cells are
/// pooled until every expected count is at least `min_expected`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> Result<ChiSquareReport> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::domain("observed and expected cells differ in length"));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::domain("no observations"));
    }
    let nt = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        o_acc += o as f64;
        e_acc += p * nt;
        if e_acc >= min_expected {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::domain("fewer than two usable chi-square cells"));
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::domain(e.to_string()))?;
    Ok(ChiSquareReport {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        bins: cells.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.25 - 3.0).collect();
        let m: Moments<f64> = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((m.mean - mean).abs() < 1e-12);
        assert!((m.variance() - var).abs() < 1e-10);
    }

    #[test]
    fn chan_merge_equals_single_pass() {
        let xs: Vec<f64> = (0..999).map(|i| (i as f64).sin() * 10.0).collect();
        let whole: Moments<f64> = xs.iter().copied().collect();
        let mut merged = Moments::new();
        for chunk in xs.chunks(64) {
            merged.merge(&chunk.iter().copied().collect());
        }
        assert_eq!(merged.count, whole.count);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.variance() - whole.variance()).abs() < 1e-9);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut xs: Vec<f64> = vec![1e16, 1.0, -1e16];
        xs.extend(std::iter::repeat_n(1e-3, 1000));
        let s = compensated_sum(xs.iter().copied());
        assert!((s - 2.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn kolmogorov_sf_known_values() {
        // tabulated: P(K > 1.3581) = 0.05, P(K > 1.9495) = 0.001
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 5e-4);
        assert!((kolmogorov_sf(1.9495) - 0.001).abs() < 5e-5);
        // both series agree where the evaluation switches between them
        assert!((kolmogorov_sf(1.18 - 1e-12) - kolmogorov_sf(1.18)).abs() < 1e-10);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn ks_accepts_uniform_and_rejects_shifted() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let ok = ks_one_sample(&u, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(ok.p_value > 1e-3, "{ok:?}");
        let shifted: Vec<f64> = u.iter().map(|x| x * 0.9).collect();
        let bad = ks_one_sample(&shifted, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(bad.p_value < 1e-3, "{bad:?}");
    }

    #[test]
    fn ks_two_sample_behaviour() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let a: Vec<f64> = (0..3000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 1e-3);
        let c: Vec<f64> = b.iter().map(|x| x.powf(1.3)).collect();
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-3);
        assert_eq!(ks_two_sample(&a, &a).unwrap().statistic, 0.0);
    }

    #[test]
    fn chi_square_pools_sparse_cells() {
        let obs = [50, 30, 15, 4, 1];
        let probs = [0.5, 0.3, 0.15, 0.04, 0.01];
        let r = chi_square_gof(&obs, &probs, 5.0).unwrap();
        assert!(r.statistic < 1e-12);
        assert_eq!(r.bins, 4);
        assert!((r.p_value - 1.0).abs() < 1e-9);
    }
}
