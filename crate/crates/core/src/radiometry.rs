//! Closed-form blackbody, collimation and filtering radiometry.
//!
//! All formulas are methods on [`PhysicalConstants`] so the constants can be
//! injected (CODATA defaults otherwise) and golden values stay bit-stable.
//! Quantities are SI except where noted; angular frequencies are in rad/s.
//!
//! With `f32` the SI-scale intermediates (for example `hbar^3`) overflow or
//! underflow; such results are reported as domain errors instead of `inf`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{positive, Scalar};

/// Coefficient of the filament-area relation `A = 2.37 P lambda_max^4 / (c^2 hbar)`,
/// taken as exact.
pub const FILAMENT_AREA_COEFFICIENT: f64 = 2.37;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants<T> {
    /// Reduced Planck constant, J s.
    pub hbar: T,
    /// Boltzmann constant, J/K.
    pub k_b: T,
    /// Speed of light, m/s.
    pub c: T,
    /// Root of `x = 5 (1 - e^-x)` fixing the Wien peak.
    pub wien_x: T,
}

impl<T: Scalar> Default for PhysicalConstants<T> {
    fn default() -> Self {
        Self {
            hbar: T::lit(1.054_571_817e-34),
            k_b: T::lit(1.380_649e-23),
            c: T::lit(299_792_458.0),
            wien_x: T::lit(4.965),
        }
    }
}

fn require<T: Scalar>(name: &str, x: T) -> Result<T> {
    if positive(x) {
        Ok(x)
    } else {
        Err(Error::domain(format!("{name} must be finite and > 0, got {x}")))
    }
}

fn finite<T: Scalar>(what: &str, x: T) -> Result<T> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::domain(format!(
            "{what} is not representable in {} ({x})",
            T::NAME
        )))
    }
}

/// Like [`finite`] but also rejects underflow to zero.
fn representable<T: Scalar>(what: &str, x: T) -> Result<T> {
    if positive(x) {
        Ok(x)
    } else {
        Err(Error::domain(format!(
            "{what} is not representable in {} ({x})",
            T::NAME
        )))
    }
}

/// Exact and approximate fraction of radiated power surviving collimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollimationEfficiency<T> {
    /// `lambda'_max^2 / A`.
    pub approximate: T,
    /// `P_coll / P_total` at the same temperature and area.
    pub exact: T,
    /// Temperature a collimated thermal beam needs to carry the power, K.
    pub temperature: T,
    /// Wien peak at that temperature, m.
    pub peak_wavelength: T,
}

/// Order-of-magnitude fraction of radiated power surviving collimation and
/// spectral filtering, factored as geometry x spectral purity x brightness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilteringEfficiency<T> {
    /// `geometric * spectral * brightness`.
    pub total: T,
    /// `lambda0^2 / A`.
    pub geometric: T,
    /// `Gamma / omega0`.
    pub spectral: T,
    /// `nu^-3`.
    pub brightness: T,
    /// Photons per coherence time.
    pub nu: T,
    /// The same ratio evaluated through the filtered-source temperature:
    /// `(lambda''_max^2 / A) (Gamma / omega''_max)`. Differs from `total`
    /// by exactly `wien_x^3`.
    pub total_via_temperature: T,
}

impl<T: Scalar> FilteringEfficiency<T> {
    pub fn log10_total(&self) -> T {
        self.total.log10()
    }
    pub fn log10_geometric(&self) -> T {
        self.geometric.log10()
    }
    pub fn log10_spectral(&self) -> T {
        self.spectral.log10()
    }
    pub fn log10_brightness(&self) -> T {
        self.brightness.log10()
    }
    pub fn log10_total_via_temperature(&self) -> T {
        self.total_via_temperature.log10()
    }
}

impl<T: Scalar> PhysicalConstants<T> {
    /// Angular frequency of light with vacuum wavelength `lambda`.
    pub fn angular_frequency(&self, lambda: T) -> Result<T> {
        let lambda = require("wavelength", lambda)?;
        finite("angular frequency", T::TAU() * self.c / lambda)
    }

    /// Planck mean occupation `1 / (exp(hbar omega / k_B T) - 1)`.
    pub fn mean_occupation(&self, omega: T, temperature: T) -> Result<T> {
        let omega = require("omega", omega)?;
        let t = require("temperature", temperature)?;
        let ratio = self.hbar * omega / (self.k_b * t);
        Ok(occupation_from_ratio(ratio))
    }

    /// Stefan-Boltzmann power of a blackbody of area `area` at temperature `t`.
    pub fn radiated_power(&self, area: T, t: T) -> Result<T> {
        let area = require("area", area)?;
        let t = require("temperature", t)?;
        let kt_over_hbar = self.k_b * t / self.hbar;
        // (pi^2/60) A (kT)^4 / (c^2 hbar^3), grouped to keep intermediates in range
        let p = T::PI() * T::PI() / T::lit(60.0) * area * kt_over_hbar.powi(3) * (self.k_b * t)
            / (self.c * self.c);
        finite("radiated power", p)
    }

    /// Wien peak wavelength `2 pi hbar c / (x k_B T)`.
    pub fn wien_peak(&self, t: T) -> Result<T> {
        let t = require("temperature", t)?;
        finite(
            "peak wavelength",
            T::TAU() * self.hbar * self.c / (self.wien_x * self.k_b * t),
        )
    }

    /// Filament area radiating `power` with spectral peak `lambda_max`.
    pub fn filament_area(&self, power: T, lambda_max: T) -> Result<T> {
        let p = require("power", power)?;
        let l = require("lambda_max", lambda_max)?;
        let coeff = T::lit(FILAMENT_AREA_COEFFICIENT);
        finite(
            "filament area",
            coeff * p * l.powi(4) / (self.c * self.c * self.hbar),
        )
    }

    /// Power of a collimated, polarized thermal beam at temperature `t`:
    /// `(pi/12) (k_B T)^2 / hbar`.
    pub fn collimated_power(&self, t: T) -> Result<T> {
        let t = require("temperature", t)?;
        let kt = self.k_b * t;
        finite("collimated power", T::PI() / T::lit(12.0) * kt * (kt / self.hbar))
    }

    /// Inverse of [`Self::collimated_power`].
    pub fn temperature_for_collimated_power(&self, power: T) -> Result<T> {
        let p = require("power", power)?;
        finite(
            "temperature",
            (T::lit(12.0) * self.hbar * p / T::PI()).sqrt() / self.k_b,
        )
    }

    /// Power of a Lorentzian-filtered collimated thermal beam,
    /// `nu hbar omega0 Gamma / 4`. Valid for `Gamma << omega0`; a warning is
    /// logged when `Gamma > omega0 / 100`. `nu = 0` gives zero.
    pub fn filtered_power(&self, nu: T, omega0: T, gamma: T) -> Result<T> {
        if !(nu.is_finite() && nu >= T::zero()) {
            return Err(Error::domain(format!("nu must be finite and >= 0, got {nu}")));
        }
        let omega0 = require("omega0", omega0)?;
        let gamma = require("Gamma", gamma)?;
        if gamma > omega0 / T::lit(100.0) {
            log::warn!(
                "filtered power assumes Gamma << omega0; Gamma/omega0 = {}",
                gamma / omega0
            );
        }
        finite("filtered power", nu * self.hbar * omega0 * gamma / T::lit(4.0))
    }

    /// High-temperature source temperature giving filtered power `power` in
    /// linewidth `gamma`: `4 P / (k_B Gamma)`.
    pub fn temperature_for_filtered_power(&self, power: T, gamma: T) -> Result<T> {
        let p = require("power", power)?;
        let g = require("Gamma", gamma)?;
        finite("temperature", T::lit(4.0) * p / (self.k_b * g))
    }

    /// Photons per coherence time, `4 P / (hbar omega0 Gamma)`.
    pub fn photons_per_coherence_time(&self, power: T, lambda0: T, gamma: T) -> Result<T> {
        let p = require("power", power)?;
        let omega0 = self.angular_frequency(lambda0)?;
        let g = require("Gamma", gamma)?;
        finite("nu", T::lit(4.0) * (p / (self.hbar * omega0)) / g)
    }

    pub fn collimation_efficiency(&self, power: T, area: T) -> Result<CollimationEfficiency<T>> {
        let area = require("area", area)?;
        let temperature = self.temperature_for_collimated_power(power)?;
        let peak = self.wien_peak(temperature)?;
        let approximate = finite("efficiency", peak * peak / area)?;
        let total = self.radiated_power(area, temperature)?;
        let exact = self.collimated_power(temperature)? / total;
        Ok(CollimationEfficiency {
            approximate,
            exact,
            temperature,
            peak_wavelength: peak,
        })
    }

    /// Both routes for the filtering efficiency of a source delivering
    /// `power` in linewidth `gamma` at `lambda0` from area `area`.
    pub fn filtering_efficiency(
        &self,
        power: T,
        area: T,
        gamma: T,
        lambda0: T,
    ) -> Result<FilteringEfficiency<T>> {
        let area = require("area", area)?;
        let nu = self.photons_per_coherence_time(power, lambda0, gamma)?;
        let efficiency = self.filtering_efficiency_for_nu(nu, area, gamma, lambda0)?;

        let t2 = self.temperature_for_filtered_power(power, gamma)?;
        let peak = self.wien_peak(t2)?;
        let omega_peak = self.angular_frequency(peak)?;
        let via_temperature =
            representable("efficiency", (peak * peak / area) * (gamma / omega_peak))?;
        Ok(FilteringEfficiency {
            total_via_temperature: via_temperature,
            ..efficiency
        })
    }

    /// Product form for a given brightness `nu`; `total_via_temperature` is
    /// evaluated with `k_B T'' = nu hbar omega0`.
    pub fn filtering_efficiency_for_nu(
        &self,
        nu: T,
        area: T,
        gamma: T,
        lambda0: T,
    ) -> Result<FilteringEfficiency<T>> {
        let nu = require("nu", nu)?;
        let area = require("area", area)?;
        let gamma = require("Gamma", gamma)?;
        let omega0 = self.angular_frequency(lambda0)?;
        let geometric = lambda0 * lambda0 / area;
        let spectral = gamma / omega0;
        let brightness = nu.powi(3).recip();
        let total = representable("efficiency", geometric * spectral * brightness)?;
        let kt2 = nu * self.hbar * omega0;
        let omega_peak = self.wien_x * kt2 / self.hbar;
        let peak = T::TAU() * self.c / omega_peak;
        Ok(FilteringEfficiency {
            total,
            geometric,
            spectral,
            brightness,
            nu,
            total_via_temperature: representable(
                "efficiency",
                (peak * peak / area) * (gamma / omega_peak),
            )?,
        })
    }
}

/// `1 / (e^r - 1)` evaluated without cancellation for small `r`.
fn occupation_from_ratio<T: Scalar>(r: T) -> T {
    r.exp_m1().recip()
}

/// Optional-field bundle of the quantities a blackbody / laser comparison
/// reads. Unset fields are `None`; set fields are positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BlackbodyScenario<T> {
    /// Beam power, W.
    pub power: Option<T>,
    /// Linewidth (FWHM), 1/s.
    pub linewidth: Option<T>,
    /// Central vacuum wavelength, m.
    pub center_wavelength: Option<T>,
    /// Radiating filament area, m^2.
    pub filament_area: Option<T>,
    /// Temperature, K.
    pub temperature: Option<T>,
}

impl<T: Scalar> BlackbodyScenario<T> {
    /// 100 mW, 10^7 s^-1 linewidth, 1 um laser; 15 mm^2 filament.
    pub fn reference_laser() -> Self {
        Self {
            power: Some(T::lit(0.1)),
            linewidth: Some(T::lit(1e7)),
            center_wavelength: Some(T::lit(1e-6)),
            filament_area: Some(T::lit(15e-6)),
            temperature: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("power", self.power),
            ("linewidth", self.linewidth),
            ("center_wavelength", self.center_wavelength),
            ("filament_area", self.filament_area),
            ("temperature", self.temperature),
        ] {
            if let Some(x) = v {
                require(name, x)?;
            }
        }
        Ok(())
    }

    /// Central angular frequency `2 pi c / lambda0`.
    pub fn omega0(&self, consts: &PhysicalConstants<T>) -> Result<T> {
        let l = self
            .center_wavelength
            .ok_or_else(|| Error::domain("center wavelength not set"))?;
        consts.angular_frequency(l)
    }

    pub fn with_temperature(self, t: T) -> Self {
        Self {
            temperature: Some(t),
            ..self
        }
    }

    fn get(&self, name: &str, v: Option<T>) -> Result<T> {
        require(name, v.ok_or_else(|| Error::domain(format!("{name} not set")))?)
    }

    pub fn power(&self) -> Result<T> {
        self.get("power", self.power)
    }
    pub fn linewidth(&self) -> Result<T> {
        self.get("linewidth", self.linewidth)
    }
    pub fn center_wavelength(&self) -> Result<T> {
        self.get("center_wavelength", self.center_wavelength)
    }
    pub fn filament_area(&self) -> Result<T> {
        self.get("filament_area", self.filament_area)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> PhysicalConstants<f64> {
        PhysicalConstants::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Independent oracle: Stefan-Boltzmann constant from its own definition.
    fn sigma_sb() -> f64 {
        let c = k();
        std::f64::consts::PI.powi(2) * c.k_b.powi(4) / (60.0 * c.c.powi(2) * c.hbar.powi(3))
    }

    #[test]
    fn occupation_examples() {
        let c = k();
        let t = 300.0;
        let omega_for = |r: f64| r * c.k_b * t / c.hbar;
        assert!((c.mean_occupation(omega_for(2f64.ln()), t).unwrap() - 1.0).abs() < 1e-12);
        assert!((c.mean_occupation(omega_for(1.0), t).unwrap() - 0.581_976_706_869_326_4).abs() < 1e-12);
        let deep = c.mean_occupation(omega_for(50.0), t).unwrap();
        assert!(rel(deep, (-50f64).exp()) < 1e-12 && deep < 2e-22 && deep > 1.9e-22);
    }

    #[test]
    fn occupation_limits() {
        let c = k();
        let t = 1000.0;
        let omega_for = |r: f64| r * c.k_b * t / c.hbar;
        let rj = c.mean_occupation(omega_for(1e-3), t).unwrap();
        assert!(rel(rj, 1e3) < 0.01);
        let wien = c.mean_occupation(omega_for(20.0), t).unwrap();
        assert!(rel(wien, (-20f64).exp()) < 0.01);
        // increasing in T
        let w = omega_for(1.0);
        assert!(c.mean_occupation(w, 2.0 * t).unwrap() > c.mean_occupation(w, t).unwrap());
    }

    #[test]
    fn occupation_rejects_bad_input() {
        let c = k();
        assert!(matches!(c.mean_occupation(0.0, 1.0), Err(Error::Domain(_))));
        assert!(c.mean_occupation(1.0, -1.0).is_err());
        assert!(c.mean_occupation(f64::NAN, 1.0).is_err());
        assert!(c.mean_occupation(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn stefan_boltzmann() {
        let c = k();
        let p = c.radiated_power(15e-6, 3000.0).unwrap();
        assert!(rel(p, sigma_sb() * 15e-6 * 3000f64.powi(4)) < 1e-12);
        assert!((p - 68.9).abs() < 0.5, "{p}");
        let p2 = c.radiated_power(15e-6, 6000.0).unwrap();
        assert!(rel(p2, 16.0 * p) < 1e-14);
        assert!(c.radiated_power(1e-300, 3000.0).unwrap() > 0.0);
        assert!(c.radiated_power(0.0, 3000.0).is_err());
    }

    #[test]
    fn wien_displacement() {
        let c = k();
        let b = 2.0 * std::f64::consts::PI * c.hbar * c.c / (c.wien_x * c.k_b);
        assert!((b - 2.897e-3).abs() < 1e-6);
        let l = c.wien_peak(2898.0).unwrap();
        assert!(rel(l, 1.0e-6) < 1e-3);
        assert!(rel(c.wien_peak(3000.0).unwrap(), 0.966e-6) < 1e-3);
        assert_eq!(c.wien_peak(6000.0).unwrap(), c.wien_peak(3000.0).unwrap() / 2.0);
        assert!(c.wien_peak(0.0).is_err());
    }

    #[test]
    fn filament_area_values() {
        let c = k();
        let a60 = c.filament_area(60.0, 1e-6).unwrap();
        assert!(rel(a60, 15e-6) < 0.05, "{a60}");
        assert!(rel(c.filament_area(100.0, 1e-6).unwrap(), a60 * 100.0 / 60.0) < 1e-14);
        assert!(rel(c.filament_area(60.0, 0.5e-6).unwrap(), a60 / 16.0) < 1e-14);
        assert!(c.filament_area(-1.0, 1e-6).is_err());
    }

    #[test]
    fn collimated_power_values() {
        let c = k();
        let p = c.collimated_power(4.6e5).unwrap();
        assert!(rel(p, 0.1) < 0.02, "{p}");
        let p3000 = c.collimated_power(3000.0).unwrap();
        // direct evaluation: (pi/12)(k_B 3000)^2/hbar = 4.2586e-6 W
        assert!(rel(p3000, 4.2586e-6) < 1e-4, "{p3000}");
        assert!(rel(c.collimated_power(6000.0).unwrap(), 4.0 * p3000) < 1e-14);
    }

    #[test]
    fn collimated_temperature_values() {
        let c = k();
        let t = c.temperature_for_collimated_power(0.1).unwrap();
        assert!(rel(t, 4.6e5) < 0.02, "{t}");
        assert!(rel(c.temperature_for_collimated_power(0.4).unwrap(), 2.0 * t) < 1e-14);
        let t_small = c.temperature_for_collimated_power(4.2586e-6).unwrap();
        assert!(rel(t_small, 3000.0) < 1e-4);
    }

    #[test]
    fn collimated_round_trip_over_range() {
        let c = k();
        let mut t = 1e2;
        while t <= 1e16 {
            let back = c
                .temperature_for_collimated_power(c.collimated_power(t).unwrap())
                .unwrap();
            assert!(rel(back, t) < 1e-12, "{t} -> {back}");
            t *= 3.7;
        }
    }

    #[test]
    fn filtered_power_values() {
        let c = k();
        let omega0 = c.angular_frequency(1e-6).unwrap();
        let p = c.filtered_power(2.0e11, omega0, 1e7).unwrap();
        assert!(rel(p, 0.1) < 0.01, "{p}");
        assert_eq!(c.filtered_power(0.0, omega0, 1e7).unwrap(), 0.0);
        assert!(rel(c.filtered_power(2.0e11, omega0, 2e7).unwrap(), 2.0 * p) < 1e-14);
        // broad line still evaluates (warning only)
        assert!(c.filtered_power(1.0, 1.0, 1.0).is_ok());
        assert!(c.filtered_power(-1.0, omega0, 1e7).is_err());
    }

    #[test]
    fn filtered_temperature_values() {
        let c = k();
        let t = c.temperature_for_filtered_power(0.1, 1e7).unwrap();
        assert!(rel(t, 2.9e15) < 0.02, "{t}");
        assert!(rel(c.temperature_for_filtered_power(1.0, 1e7).unwrap(), 10.0 * t) < 1e-14);
        assert!(rel(c.temperature_for_filtered_power(0.1, 1e8).unwrap(), t / 10.0) < 1e-14);
    }

    #[test]
    fn filtered_round_trip_matches_high_temperature_identity() {
        let c = k();
        let omega0 = c.angular_frequency(1e-6).unwrap();
        for &nu in &[1.0, 3.3e4, 2.0e11, 7.1e15] {
            for &gamma in &[1e3, 1e7, 1e9] {
                let p = c.filtered_power(nu, omega0, gamma).unwrap();
                let t = c.temperature_for_filtered_power(p, gamma).unwrap();
                assert!(rel(t, 4.0 * p / (c.k_b * gamma)) < 1e-12);
                assert!(rel(t, nu * c.hbar * omega0 / c.k_b) < 1e-12);
            }
        }
    }

    #[test]
    fn collimation_efficiency_values() {
        let c = k();
        let e = c.collimation_efficiency(0.1, 15e-6).unwrap();
        assert!(rel(e.approximate, 2.6e-12) < 0.05, "{e:?}");
        assert!(rel(e.exact, e.approximate) < 0.05, "{e:?}");
        let e2 = c.collimation_efficiency(0.1, 30e-6).unwrap();
        assert!(rel(e2.approximate, e.approximate / 2.0) < 1e-14);
        assert!(rel(e2.exact, e.exact / 2.0) < 1e-12);
    }

    #[test]
    fn photons_per_coherence_time_values() {
        let c = k();
        let nu = c.photons_per_coherence_time(0.1, 1e-6, 1e7).unwrap();
        assert!(rel(nu, 2.0e11) < 0.01, "{nu}");
        assert!((11.0..=12.5).contains(&nu.log10()));
        assert!(rel(c.photons_per_coherence_time(0.1, 1e-6, 4e7).unwrap(), nu / 4.0) < 1e-14);
    }

    #[test]
    fn filtering_efficiency_breakdown() {
        let c = k();
        let e = c.filtering_efficiency(0.1, 15e-6, 1e7, 1e-6).unwrap();
        assert!((e.log10_geometric() + 7.0).abs() <= 1.5, "{e:?}");
        assert!((e.log10_spectral() + 8.0).abs() <= 1.5, "{e:?}");
        assert_eq!(e.brightness, e.nu.powi(3).recip());
        assert_eq!(e.total, e.geometric * e.spectral * e.brightness);
        // the headline order of magnitude is carried by the temperature route
        assert!((e.log10_total_via_temperature() + 51.0).abs() <= 1.5, "{e:?}");
        // the two routes differ by exactly x^3
        assert!(rel(e.total / e.total_via_temperature, c.wien_x.powi(3)) < 1e-12);
        // product route with the exact nu = 2.0e11
        assert!((e.log10_total() + 49.36).abs() < 0.01, "{}", e.log10_total());
    }

    #[test]
    fn filtering_efficiency_with_unit_brightness() {
        let c = k();
        let e = c.filtering_efficiency_for_nu(1.0, 15e-6, 1e7, 1e-6).unwrap();
        assert_eq!(e.brightness, 1.0);
        assert_eq!(e.total, e.geometric * e.spectral);
    }

    #[test]
    fn product_form_is_independent_of_center_wavelength_at_fixed_source_temperature() {
        // at fixed k_B T'' = nu hbar omega0 the product form does not depend on omega0
        let c = k();
        let kt2 = c.k_b * 2.9e15;
        let at = |lambda0: f64| {
            let omega0 = c.angular_frequency(lambda0).unwrap();
            let nu = kt2 / (c.hbar * omega0);
            c.filtering_efficiency_for_nu(nu, 15e-6, 1e7, lambda0).unwrap().total
        };
        assert!(rel(at(0.5e-6), at(1e-6)) < 1e-12);
        assert!(rel(at(3e-6), at(1e-6)) < 1e-12);
    }

    #[test]
    fn scenario_validation() {
        let s = BlackbodyScenario::<f64>::reference_laser();
        s.validate().unwrap();
        let omega0 = s.omega0(&k()).unwrap();
        assert!(rel(omega0, 2.0 * std::f64::consts::PI * 299_792_458.0 / 1e-6) < 1e-15);
        let bad = BlackbodyScenario {
            power: Some(-1.0),
            ..s
        };
        assert!(bad.validate().is_err());
        let empty = BlackbodyScenario::<f64>::default();
        assert!(empty.validate().is_ok());
        assert!(empty.power().is_err());
    }

    #[test]
    fn single_precision_overflow_is_an_error() {
        let c = PhysicalConstants::<f32>::default();
        assert!(c.temperature_for_filtered_power(0.1, 1e7).is_ok());
        assert!(c.wien_peak(3000.0).is_ok());
        // (k_B T / hbar)^3 at T' overflows and 1e-50 underflows f32
        assert!(c.collimation_efficiency(0.1, 15e-6).is_err());
        assert!(c.filtering_efficiency(0.1, 15e-6, 1e7, 1e-6).is_err());
        let e = c.filtering_efficiency_for_nu(1.0, 15e-6, 1e7, 1e-6).unwrap();
        assert!((e.log10_total() + 15.0).abs() < 1.0);
    }
}
