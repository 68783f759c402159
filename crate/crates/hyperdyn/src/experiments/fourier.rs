//! Decay of circle Fourier modes against a finite-difference smoothness
//! proxy: for a smooth sample vector the k-th mode is bounded by the m-th
//! derivative norm over |k|^m.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct FourierReport {
    pub resolution: usize,
    pub k_max: usize,
    pub order: usize,
    /// `|v_k|` for `k = 0..=k_max`.
    pub mode_moduli: Vec<f64>,
    /// Max of m-th cyclic finite differences scaled by `step^-m`.
    pub smoothness_proxy: f64,
    /// `max_k |v_k| |k|^m / proxy` over `1 <= |k| <= k_max`.
    pub bound_ratio: f64,
}

/// Discrete modes of uniformly sampled circle data and the decay ratio
/// `|v_k| |k|^m` against the `C^m` proxy.
///
/// Modes are trusted up to a quarter of the resolution.
pub fn fourier_decay_check(samples: &[f64], order: usize) -> Result<FourierReport> {
    let n = samples.len();
    if n < 8 {
        return Err(Error::Usage(format!(
            "resolution {n} too low; need at least 8 samples"
        )));
    }
    if order == 0 {
        return Err(Error::Usage("derivative order must be at least 1".into()));
    }
    let k_max = n / 4;

    let mut mode_moduli = Vec::with_capacity(k_max + 1);
    let mut bound_ratio = 0.0f64;
    let step = 2.0 * std::f64::consts::PI / n as f64;

    // C^m proxy: max |Delta^m v| / step^m over cyclic differences.
    let mut diff: Vec<f64> = samples.to_vec();
    for _ in 0..order {
        let prev = diff.clone();
        for j in 0..n {
            diff[j] = prev[(j + 1) % n] - prev[j];
        }
    }
    let proxy = diff.iter().fold(0.0f64, |m, v| m.max(v.abs())) / step.powi(order as i32);
    if proxy == 0.0 {
        // Constant input: every nonzero mode vanishes.
        for k in 0..=k_max {
            mode_moduli.push(mode(samples, k).norm());
        }
        return Ok(FourierReport {
            resolution: n,
            k_max,
            order,
            mode_moduli,
            smoothness_proxy: 0.0,
            bound_ratio: 0.0,
        });
    }

    for k in 0..=k_max {
        let m = mode(samples, k).norm();
        mode_moduli.push(m);
        if k >= 1 {
            bound_ratio = bound_ratio.max(m * (k as f64).powi(order as i32) / proxy);
        }
    }

    Ok(FourierReport {
        resolution: n,
        k_max,
        order,
        mode_moduli,
        smoothness_proxy: proxy,
        bound_ratio,
    })
}

fn mode(samples: &[f64], k: usize) -> Complex64 {
    let n = samples.len() as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &v) in samples.iter().enumerate() {
        let phase = -2.0 * std::f64::consts::PI * k as f64 * j as f64 / n;
        acc += Complex64::from_polar(v, phase);
    }
    acc / n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(f: impl Fn(f64) -> f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| f(2.0 * std::f64::consts::PI * j as f64 / n as f64))
            .collect()
    }

    #[test]
    fn cosine_has_single_mode() {
        let report = fourier_decay_check(&sample(|t| t.cos(), 256), 2).unwrap();
        assert!((report.mode_moduli[1] - 0.5).abs() <= 1e-10);
        for (k, m) in report.mode_moduli.iter().enumerate() {
            if k != 1 {
                assert!(*m <= 1e-10, "mode {k} = {m}");
            }
        }
    }

    #[test]
    fn constant_has_only_zero_mode() {
        let report = fourier_decay_check(&sample(|_| 2.5, 64), 2).unwrap();
        assert!((report.mode_moduli[0] - 2.5).abs() <= 1e-12);
        assert_eq!(report.smoothness_proxy, 0.0);
        for m in &report.mode_moduli[1..] {
            assert!(*m <= 1e-12);
        }
    }

    #[test]
    fn smooth_function_ratio_refinement_stable() {
        let coarse = fourier_decay_check(&sample(|t| t.sin().exp(), 256), 2).unwrap();
        let fine = fourier_decay_check(&sample(|t| t.sin().exp(), 512), 2).unwrap();
        assert!(coarse.bound_ratio.is_finite() && coarse.bound_ratio > 0.0);
        let rel = (coarse.bound_ratio - fine.bound_ratio).abs() / fine.bound_ratio;
        assert!(rel <= 0.15, "ratio moved by {rel} under refinement");
    }

    #[test]
    fn low_resolution_rejected() {
        assert!(fourier_decay_check(&[1.0; 4], 2).is_err());
    }
}
