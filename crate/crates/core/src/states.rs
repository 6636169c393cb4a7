//! Single-mode thermal and laser states.
//!
//! A thermal mode has a geometric photon-number distribution and is a
//! Gaussian mixture of coherent states; a laser mode is Poissonian and is a
//! uniform-phase mixture of coherent states of fixed modulus.

use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::num::{Complex, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Thermal,
    Laser,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleModeState<T> {
    pub kind: StateKind,
    /// `nbar` for a thermal mode, `mu` for a laser mode.
    pub mean_photons: T,
}

fn check_mean<T: Scalar>(m: T) -> Result<T> {
    if m.is_finite() && m >= T::zero() {
        Ok(m)
    } else {
        Err(Error::domain(format!(
            "mean photon number must be finite and >= 0, got {m}"
        )))
    }
}

impl<T: Scalar> SingleModeState<T> {
    pub fn new(kind: StateKind, mean_photons: T) -> Result<Self> {
        Ok(Self {
            kind,
            mean_photons: check_mean(mean_photons)?,
        })
    }

    pub fn thermal(nbar: T) -> Result<Self> {
        Self::new(StateKind::Thermal, nbar)
    }

    pub fn laser(mu: T) -> Result<Self> {
        Self::new(StateKind::Laser, mu)
    }

    pub fn pmf(&self, n: u64) -> T {
        match self.kind {
            StateKind::Thermal => thermal_pmf(self.mean_photons, n).expect("validated state"),
            StateKind::Laser => poisson_pmf(self.mean_photons, n).expect("validated state"),
        }
    }

    pub fn variance(&self) -> T {
        photon_number_variance(self)
    }

    /// Largest `n` kept when summing the pmf: `mean + 20 sd`, extended so
    /// the discarded tail is below `1e-20`. The extension matters for the
    /// geometric law, whose tail beyond `mean + 20 sd` is about `e^-21`.
    pub fn truncation_bound(&self) -> u64 {
        let m = self.mean_photons.as_f64();
        let sd = self.variance().as_f64().sqrt();
        let base = (m + 20.0 * sd).ceil();
        let tail = match self.kind {
            // P(N > n) = (m / (1 + m))^(n + 1)
            StateKind::Thermal if m > 0.0 => (46.1 / (1.0 / m).ln_1p()).ceil(),
            _ => 30.0,
        };
        base.max(tail) as u64
    }

    /// Probability mass on `0..=truncation_bound()`, summed with compensation.
    pub fn truncated_mass(&self) -> T {
        crate::stats::compensated_sum((0..=self.truncation_bound()).map(|n| self.pmf(n)))
    }

    /// Coherent amplitude drawn from the state's P-function.
    pub fn sample_coherent_amplitude<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex<T> {
        sample_coherent_amplitude(self, rng)
    }

    pub fn sample_photon_count<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        sample_photon_count(self, rng)
    }
}

/// Geometric mass `nbar^n / (1 + nbar)^(n+1)`.
pub fn thermal_pmf<T: Scalar>(nbar: T, n: u64) -> Result<T> {
    let nbar = check_mean(nbar)?;
    if nbar == T::zero() {
        return Ok(if n == 0 { T::one() } else { T::zero() });
    }
    let n_t = T::from_u64(n).expect("count representable");
    // ln p = -ln(1 + nbar) - n ln(1 + 1/nbar)
    let ln_p = -nbar.ln_1p() - n_t * nbar.recip().ln_1p();
    Ok(ln_p.exp())
}

/// Poisson mass `e^-mu mu^n / n!`, evaluated in log space.
pub fn poisson_pmf<T: Scalar>(mu: T, n: u64) -> Result<T> {
    let mu = check_mean(mu)?;
    if mu == T::zero() {
        return Ok(if n == 0 { T::one() } else { T::zero() });
    }
    let m = mu.as_f64();
    let nf = n as f64;
    let ln_p = nf * m.ln() - m - ln_gamma(nf + 1.0);
    Ok(T::lit(ln_p.exp()))
}

/// `nbar^2 + nbar` for a thermal mode, `mu` for a laser mode.
pub fn photon_number_variance<T: Scalar>(state: &SingleModeState<T>) -> T {
    let m = state.mean_photons;
    match state.kind {
        StateKind::Thermal => m * m + m,
        StateKind::Laser => m,
    }
}

/// Thermal: circular complex Gaussian with `E|alpha|^2 = nbar`.
/// Laser: `sqrt(mu) e^{i phi}` with `phi` uniform on `[0, 2 pi)`.
pub fn sample_coherent_amplitude<T: Scalar, R: Rng + ?Sized>(
    state: &SingleModeState<T>,
    rng: &mut R,
) -> Complex<T> {
    match state.kind {
        StateKind::Thermal => {
            let s = (state.mean_photons / T::lit(2.0)).sqrt();
            let re = T::standard_normal(rng);
            let im = T::standard_normal(rng);
            Complex::new(s * re, s * im)
        }
        StateKind::Laser => {
            let phi = T::TAU() * T::unit_uniform(rng);
            Complex::from_polar(state.mean_photons.sqrt(), phi)
        }
    }
}

/// Number-basis draw: geometric for thermal, Poisson for laser.
pub fn sample_photon_count<T: Scalar, R: Rng + ?Sized>(
    state: &SingleModeState<T>,
    rng: &mut R,
) -> u64 {
    let m = state.mean_photons.as_f64();
    if m == 0.0 {
        return 0;
    }
    match state.kind {
        StateKind::Thermal => Geometric::new(1.0 / (1.0 + m))
            .expect("success probability in (0, 1]")
            .sample(rng),
        StateKind::Laser => poisson_count(m, rng),
    }
}

/// Poisson draw with mean `m >= 0`; zero mean gives zero.
pub(crate) fn poisson_count<R: Rng + ?Sized>(m: f64, rng: &mut R) -> u64 {
    if m <= 0.0 {
        return 0;
    }
    let x: f64 = Poisson::new(m).expect("finite positive mean").sample(rng);
    x as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Lane};
    use crate::stats::{chi_square_gof, Moments};
    use proptest::prelude::*;

    #[test]
    fn thermal_pmf_values() {
        assert_eq!(thermal_pmf(0.0_f64, 0).unwrap(), 1.0);
        assert_eq!(thermal_pmf(0.0_f64, 3).unwrap(), 0.0);
        assert!((thermal_pmf(1.0_f64, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!((thermal_pmf(1.0_f64, 1).unwrap() - 0.25).abs() < 1e-15);
        assert!(thermal_pmf(-1.0_f64, 0).is_err());
    }

    #[test]
    fn thermal_mean_after_truncation() {
        let s = SingleModeState::thermal(3.7_f64).unwrap();
        let mean: f64 = (0..=s.truncation_bound())
            .map(|n| n as f64 * s.pmf(n))
            .sum();
        assert!((mean - 3.7).abs() < 1e-9, "{mean}");
    }

    #[test]
    fn poisson_pmf_values() {
        assert_eq!(poisson_pmf(0.0_f64, 0).unwrap(), 1.0);
        assert!((poisson_pmf(1.0_f64, 0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!((poisson_pmf(1.0_f64, 0).unwrap() - 0.367_879).abs() < 1e-6);
        assert!(poisson_pmf(f64::NAN, 0).is_err());
        // no overflow at huge means
        let p = poisson_pmf(1e12_f64, 1_000_000_000_000).unwrap();
        assert!(p > 0.0 && p.is_finite());
    }

    #[test]
    fn poisson_variance_at_large_mean() {
        let s = SingleModeState::laser(1e6_f64).unwrap();
        let lo = (1e6 - 20.0 * 1e3) as u64;
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for n in lo..=s.truncation_bound() {
            let p = s.pmf(n);
            let x = n as f64 - 1e6;
            m0 += p;
            m1 += p * x;
            m2 += p * x * x;
        }
        let var = m2 / m0 - (m1 / m0).powi(2);
        assert!(((var - 1e6) / 1e6).abs() < 1e-6, "{var}");
    }

    #[test]
    fn variances() {
        assert_eq!(SingleModeState::thermal(1.0_f64).unwrap().variance(), 2.0);
        assert_eq!(SingleModeState::laser(1e4_f64).unwrap().variance(), 1e4);
        assert_eq!(SingleModeState::thermal(0.0_f64).unwrap().variance(), 0.0);
    }

    #[test]
    fn laser_amplitude_has_fixed_modulus() {
        let s = SingleModeState::laser(4.0_f64).unwrap();
        let mut rng = stream(1, 0, Lane::States);
        for _ in 0..1000 {
            let a = s.sample_coherent_amplitude(&mut rng);
            assert!((a.norm() - 2.0).abs() < 1e-14);
            let phi = a.arg().rem_euclid(std::f64::consts::TAU);
            assert!((0.0..std::f64::consts::TAU).contains(&phi));
        }
    }

    #[test]
    fn thermal_amplitude_is_exponential_in_intensity() {
        let s = SingleModeState::thermal(5.0_f64).unwrap();
        let mut rng = stream(2, 0, Lane::States);
        let n = 1_000_000;
        let mut m = Moments::new();
        let mut re = Moments::new();
        let mut im = Moments::new();
        let mut intens = Vec::with_capacity(20_000);
        for i in 0..n {
            let a = s.sample_coherent_amplitude(&mut rng);
            m.push(a.norm_sqr());
            re.push(a.re);
            im.push(a.im);
            if i % 50 == 0 {
                intens.push(a.norm_sqr());
            }
        }
        assert!((m.mean - 5.0).abs() < 3.0 * m.std_error());
        assert!(re.mean.abs() < 3.0 * re.std_error());
        assert!(im.mean.abs() < 3.0 * im.std_error());
        let ks = crate::stats::ks_one_sample(&intens, |x| 1.0 - (-x / 5.0).exp()).unwrap();
        assert!(ks.p_value > 1e-3, "{ks:?}");
    }

    #[test]
    fn count_statistics() {
        let mut rng = stream(3, 0, Lane::States);
        let s = SingleModeState::thermal(1.0_f64).unwrap();
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| s.sample_photon_count(&mut rng) as f64)
            .collect();
        let m: Moments<f64> = xs.iter().copied().collect();
        assert!((m.mean - 1.0).abs() < 3.0 * m.std_error());
        // standard error of the sample variance for a geometric law with nbar = 1:
        // mu4 = 26 central fourth moment, Var(s^2) ~ (mu4 - sigma^4) / n
        let se_var = ((26.0 - 4.0) / 1e6_f64).sqrt();
        assert!((m.variance() - 2.0).abs() < 3.0 * se_var, "{}", m.variance());

        let l = SingleModeState::laser(7.5_f64).unwrap();
        let m: Moments<f64> = (0..200_000)
            .map(|_| l.sample_photon_count(&mut rng) as f64)
            .collect();
        assert!((m.mean - 7.5).abs() < 3.0 * m.std_error());
        // Var(s^2) ~ (mu4 - sigma^4)/n with mu4 = 3 mu^2 + mu for Poisson
        let se_var = ((2.0 * 7.5 * 7.5 + 7.5) / 2e5_f64).sqrt();
        assert!((m.variance() - 7.5).abs() < 3.0 * se_var);

        assert_eq!(SingleModeState::thermal(0.0_f64).unwrap().sample_photon_count(&mut rng), 0);
        assert_eq!(SingleModeState::laser(0.0_f64).unwrap().sample_photon_count(&mut rng), 0);
    }

    fn two_route(state: SingleModeState<f64>, seed: u64) -> f64 {
        let mut rng = stream(seed, 0, Lane::States);
        let mut counts = vec![0u64; 32];
        for _ in 0..1_000_000 {
            let a = state.sample_coherent_amplitude(&mut rng);
            let n = poisson_count(a.norm_sqr(), &mut rng) as usize;
            counts[n.min(31)] += 1;
        }
        let mut probs: Vec<f64> = (0..31).map(|n| state.pmf(n)).collect();
        probs.push(1.0 - probs.iter().sum::<f64>());
        chi_square_gof(&counts, &probs, 5.0).unwrap().p_value
    }

    #[test]
    fn p_function_route_reproduces_thermal_pmf() {
        let p = two_route(SingleModeState::thermal(2.0).unwrap(), 11);
        assert!(p > 1e-3, "{p}");
    }

    #[test]
    fn p_function_route_reproduces_poisson_pmf() {
        let p = two_route(SingleModeState::laser(2.0).unwrap(), 12);
        assert!(p > 1e-3, "{p}");
    }

    #[test]
    fn single_precision_pmf() {
        let p = thermal_pmf(1.0_f32, 1).unwrap();
        assert!((p - 0.25).abs() < 1e-7);
        let s = SingleModeState::laser(3.0_f32).unwrap();
        assert!((s.truncated_mass() - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn pmfs_normalize(m in 0.0f64..200.0, thermal in any::<bool>()) {
            let s = if thermal {
                SingleModeState::thermal(m).unwrap()
            } else {
                SingleModeState::laser(m).unwrap()
            };
            prop_assert!((s.truncated_mass() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn pmfs_are_probabilities(m in 0.0f64..1e6, n in 0u64..10_000) {
            for p in [thermal_pmf(m, n).unwrap(), poisson_pmf(m, n).unwrap()] {
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }
}
