//! Discrete transform between a sampled record and its mode amplitudes.
//!
//! For a record `alpha_j` at `t_j = j dt`, `j < n`, with `T = n dt`:
//!
//! ```text
//! u_l     = (dt / sqrt(T)) sum_j e^{+i w_l t_j} alpha_j,   w_l = 2 pi l / T
//! alpha_j = (1 / sqrt(T))  sum_l e^{-i w_l t_j} u_l
//! ```
//!
//! so that `sum_l |u_l|^2 / T = (1/T) sum_j |alpha_j|^2 dt`.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftDirection, FftPlanner};

use crate::num::{Complex, Scalar};

type PlanKey = (TypeId, usize, bool);

fn cache() -> &'static Mutex<HashMap<PlanKey, Box<dyn Any + Send + Sync>>> {
    static PLANS: OnceLock<Mutex<HashMap<PlanKey, Box<dyn Any + Send + Sync>>>> = OnceLock::new();
    PLANS.get_or_init(Default::default)
}

pub(crate) fn plan<T: Scalar>(n: usize, direction: FftDirection) -> Arc<dyn Fft<T>> {
    let key = (TypeId::of::<T>(), n, direction == FftDirection::Forward);
    let mut plans = cache().lock().expect("plan cache poisoned");
    plans
        .entry(key)
        .or_insert_with(|| Box::new(FftPlanner::<T>::new().plan_fft(n, direction)))
        .downcast_ref::<Arc<dyn Fft<T>>>()
        .expect("plan cache keyed by scalar type")
        .clone()
}

/// Signed grid index of FFT bin `k`: `0, 1, ..., -2, -1`. For even `n` the
/// unpaired Nyquist bin `n/2` maps to `-n/2`.
#[inline]
pub(crate) fn signed_index(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// FFT bin holding signed grid index `l`, if it exists on an `n`-point grid.
pub(crate) fn bin_of(l: i64, n: usize) -> Option<usize> {
    let k = if l >= 0 { l } else { l + n as i64 };
    (0..n as i64)
        .contains(&k)
        .then_some(k as usize)
        .filter(|&k| signed_index(k, n) == l)
}

/// Angular frequency of bin `k`.
#[inline]
pub(crate) fn bin_frequency<T: Scalar>(k: usize, n: usize, duration: T) -> T {
    T::lit(signed_index(k, n) as f64) * T::TAU() / duration
}

pub(crate) fn to_modes<T: Scalar>(samples: &[Complex<T>], dt: T) -> Vec<Complex<T>> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    plan::<T>(n, FftDirection::Inverse).process(&mut buf);
    let duration = dt * T::from_usize_lossy(n);
    let scale = dt / duration.sqrt();
    for z in &mut buf {
        *z = *z * scale;
    }
    buf
}

pub(crate) fn from_modes<T: Scalar>(mut modes: Vec<Complex<T>>, duration: T) -> Vec<Complex<T>> {
    let n = modes.len();
    plan::<T>(n, FftDirection::Forward).process(&mut modes);
    let scale = duration.sqrt().recip();
    for z in &mut modes {
        *z = *z * scale;
    }
    modes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_parseval() {
        let dt = 0.01_f64;
        let xs: Vec<Complex<f64>> = (0..257)
            .map(|j| Complex::new((j as f64 * 0.37).sin(), (j as f64 * 0.11).cos() - 0.2))
            .collect();
        let modes = to_modes(&xs, dt);
        let duration = dt * 257.0;
        let energy_t: f64 = xs.iter().map(|z| z.norm_sqr() * dt).sum::<f64>() / duration;
        let energy_k: f64 = modes.iter().map(|z| z.norm_sqr()).sum::<f64>() / duration;
        assert!(((energy_t - energy_k) / energy_t).abs() < 1e-12);
        let back = from_modes(modes, duration);
        for (a, b) in xs.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn transform_matches_direct_sum() {
        let n = 12;
        let dt = 0.3_f64;
        let duration = dt * n as f64;
        let xs: Vec<Complex<f64>> = (0..n).map(|j| Complex::new(j as f64, 1.0 / (1.0 + j as f64))).collect();
        let modes = to_modes(&xs, dt);
        for (k, m) in modes.iter().enumerate() {
            let w = bin_frequency(k, n, duration);
            let direct: Complex<f64> = xs
                .iter()
                .enumerate()
                .map(|(j, a)| Complex::from_polar(1.0, w * j as f64 * dt) * a)
                .sum::<Complex<f64>>()
                * (dt / duration.sqrt());
            assert!((direct - m).norm() < 1e-12);
        }
    }

    #[test]
    fn signed_grid() {
        assert_eq!((0..5).map(|k| signed_index(k, 5)).collect::<Vec<_>>(), [0, 1, 2, -2, -1]);
        assert_eq!((0..4).map(|k| signed_index(k, 4)).collect::<Vec<_>>(), [0, 1, -2, -1]);
        assert_eq!(bin_of(-1, 4), Some(3));
        assert_eq!(bin_of(2, 4), None);
        assert_eq!(bin_of(2, 5), Some(2));
        assert_eq!(bin_of(7, 5), None);
    }
}
