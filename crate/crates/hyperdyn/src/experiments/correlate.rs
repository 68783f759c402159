//! Correlation decay of the suspension flow for observables of a fixed
//! rotation type, with block-bootstrap confidence on the fitted rate.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::suspension::{StationaryChain, SuspensionState};

/// Fiber profile, a function of the normalized fiber time `u = s / tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FiberProfile {
    /// Constant zero.
    Zero,
    /// Constant one.
    One,
    /// `sin^2(pi u)`: vanishes at both fiber ends.
    Bump,
    /// `cos(2 pi m u)`.
    Cos(u32),
    /// `sin(2 pi m u)`.
    Sin(u32),
}

impl FiberProfile {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            FiberProfile::Zero => 0.0,
            FiberProfile::One => 1.0,
            FiberProfile::Bump => {
                let s = (std::f64::consts::PI * u).sin();
                s * s
            }
            FiberProfile::Cos(m) => (2.0 * std::f64::consts::PI * *m as f64 * u).cos(),
            FiberProfile::Sin(m) => (2.0 * std::f64::consts::PI * *m as f64 * u).sin(),
        }
    }
}

/// A catalogue observable: an optional depth-one cylinder indicator times a
/// fiber profile; the rotation factor `e^{i k angle}` is applied at use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Observable {
    /// Restrict support to states whose cylinder starts with this symbol.
    pub symbol: Option<u16>,
    pub profile: FiberProfile,
}

impl Observable {
    pub fn constant() -> Self {
        Observable {
            symbol: None,
            profile: FiberProfile::One,
        }
    }

    /// Base-space value at a state (rotation factor excluded).
    pub fn base_value(&self, chain: &StationaryChain, state: &SuspensionState) -> f64 {
        if let Some(sym) = self.symbol {
            if chain.first_symbol(state.cylinder()) != sym {
                return 0.0;
            }
        }
        let tau = chain.edge_roof(state.cylinder(), state.slot());
        self.profile.eval(state.fiber_time() / tau)
    }

    /// Fiber value on a given cylinder at normalized time `u`.
    pub fn fiber_value(&self, chain: &StationaryChain, cylinder: usize, u: f64) -> f64 {
        if let Some(sym) = self.symbol {
            if chain.first_symbol(cylinder) != sym {
                return 0.0;
            }
        }
        self.profile.eval(u)
    }
}

fn full_value(
    chain: &StationaryChain,
    obs: &Observable,
    k: i32,
    state: &SuspensionState,
) -> Complex64 {
    let base = obs.base_value(chain, state);
    Complex64::from_polar(1.0, k as f64 * state.angle()) * base
}

/// Correlation estimates along a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationSeries {
    pub t_grid: Vec<f64>,
    pub estimates_re: Vec<f64>,
    pub estimates_im: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
}

/// Least-squares decay of `log |C(t)|` over the above-noise window.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// None when the window has fewer than five points.
    pub slope: Option<f64>,
    pub window: (f64, f64),
    pub points: usize,
    /// Bootstrap 95% interval on the slope.
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Fraction of bootstrap slopes below zero.
    pub negative_confidence: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub k: i32,
    pub f: Observable,
    pub g: Observable,
    pub series: CorrelationSeries,
    /// Product of the empirical means, the expected constant term at k = 0.
    pub constant_re: f64,
    pub constant_im: f64,
    pub fit: DecayFit,
}

const BOOTSTRAP_BLOCKS: usize = 50;
const BOOTSTRAP_RESAMPLES: usize = 200;

/// Estimate `C(t) = mean F(flow_t x) conj(G(x))` over stationary samples.
///
/// Results are a pure function of (chain, observables, grid, samples, seed):
/// per-sample streams are indexed, block sums are reduced in index order, and
/// the grid walk uses exact tick arithmetic.
pub fn correlate(
    chain: &StationaryChain,
    k: i32,
    f: Observable,
    g: Observable,
    t_grid: &[f64],
    samples: u64,
    seed: u64,
) -> Result<CorrelationReport> {
    if t_grid.is_empty() || samples == 0 {
        return Err(Error::Usage("need a time grid and samples".into()));
    }
    let nt = t_grid.len();
    for pair in t_grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Usage("time grid must be increasing".into()));
        }
    }
    if t_grid[0] < 0.0 {
        return Err(Error::Usage("time grid must be nonnegative".into()));
    }

    // Per-block accumulators: sums of F( flow_t x ) conj(G(x)), their
    // absolute squares, and the plain means of F and G.
    struct Block {
        corr: Vec<Complex64>,
        abs2: Vec<f64>,
        mean_f: Complex64,
        mean_g: Complex64,
        count: u64,
    }

    let blocks: Vec<Block> = (0..BOOTSTRAP_BLOCKS as u64)
        .into_par_iter()
        .map(|bi| {
            let lo = samples * bi / BOOTSTRAP_BLOCKS as u64;
            let hi = samples * (bi + 1) / BOOTSTRAP_BLOCKS as u64;
            let mut corr = vec![Complex64::new(0.0, 0.0); nt];
            let mut abs2 = vec![0.0f64; nt];
            let mut mean_f = Complex64::new(0.0, 0.0);
            let mut mean_g = Complex64::new(0.0, 0.0);
            for i in lo..hi {
                let mut state = chain.sample_state(seed, i);
                let g0 = full_value(chain, &g, k, &state).conj();
                mean_g += full_value(chain, &g, k, &state);
                mean_f += full_value(chain, &f, k, &state);
                let mut t_prev = 0.0;
                for (j, &t) in t_grid.iter().enumerate() {
                    chain.flow(&mut state, t - t_prev);
                    t_prev = t;
                    let v = full_value(chain, &f, k, &state) * g0;
                    corr[j] += v;
                    abs2[j] += v.norm_sqr();
                }
            }
            Block {
                corr,
                abs2,
                mean_f,
                mean_g,
                count: hi - lo,
            }
        })
        .collect();

    let n = samples as f64;
    let mut estimates = vec![Complex64::new(0.0, 0.0); nt];
    let mut abs2 = vec![0.0f64; nt];
    let mut mean_f = Complex64::new(0.0, 0.0);
    let mut mean_g = Complex64::new(0.0, 0.0);
    for b in &blocks {
        for j in 0..nt {
            estimates[j] += b.corr[j];
            abs2[j] += b.abs2[j];
        }
        mean_f += b.mean_f;
        mean_g += b.mean_g;
    }
    for e in &mut estimates {
        *e /= n;
    }
    mean_f /= n;
    mean_g /= n;
    let stderr: Vec<f64> = (0..nt)
        .map(|j| ((abs2[j] / n - estimates[j].norm_sqr()).max(0.0) / n).sqrt())
        .collect();

    let constant = if k == 0 {
        mean_f * mean_g.conj()
    } else {
        Complex64::new(0.0, 0.0)
    };

    // Window: contiguous above-noise prefix of the residual series.
    let residual: Vec<f64> = estimates.iter().map(|e| (e - constant).norm()).collect();
    let mut window_end = 0;
    while window_end < nt && residual[window_end] > 3.0 * stderr[window_end].max(1e-300) {
        window_end += 1;
    }
    let fit = if window_end >= 5 {
        let slope = fit_log_slope(&t_grid[..window_end], &residual[..window_end]);
        // Block bootstrap on the fitted slope.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb007_5eed_u64);
        let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
        for _ in 0..BOOTSTRAP_RESAMPLES {
            let mut corr = vec![Complex64::new(0.0, 0.0); window_end];
            let mut mf = Complex64::new(0.0, 0.0);
            let mut mg = Complex64::new(0.0, 0.0);
            let mut count = 0u64;
            for _ in 0..BOOTSTRAP_BLOCKS {
                let pick = rng.gen_range(0..BOOTSTRAP_BLOCKS);
                for j in 0..window_end {
                    corr[j] += blocks[pick].corr[j];
                }
                mf += blocks[pick].mean_f;
                mg += blocks[pick].mean_g;
                count += blocks[pick].count;
            }
            let cn = count as f64;
            let c = if k == 0 {
                (mf / cn) * (mg / cn).conj()
            } else {
                Complex64::new(0.0, 0.0)
            };
            let res: Vec<f64> = corr.iter().map(|v| (v / cn - c).norm()).collect();
            slopes.push(fit_log_slope(&t_grid[..window_end], &res));
        }
        slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lo = slopes[(BOOTSTRAP_RESAMPLES as f64 * 0.025) as usize];
        let hi = slopes[(BOOTSTRAP_RESAMPLES as f64 * 0.975) as usize - 1];
        let neg = slopes.iter().filter(|s| **s < 0.0).count() as f64 / slopes.len() as f64;
        DecayFit {
            slope: Some(slope),
            window: (t_grid[0], t_grid[window_end - 1]),
            points: window_end,
            ci_low: Some(lo),
            ci_high: Some(hi),
            negative_confidence: Some(neg),
        }
    } else {
        DecayFit {
            slope: None,
            window: (t_grid[0], t_grid[0]),
            points: window_end,
            ci_low: None,
            ci_high: None,
            negative_confidence: None,
        }
    };

    Ok(CorrelationReport {
        k,
        f,
        g,
        series: CorrelationSeries {
            t_grid: t_grid.to_vec(),
            estimates_re: estimates.iter().map(|e| e.re).collect(),
            estimates_im: estimates.iter().map(|e| e.im).collect(),
            stderr,
            samples,
            seed,
        },
        constant_re: constant.re,
        constant_im: constant.im,
        fit,
    })
}

fn fit_log_slope(t: &[f64], values: &[f64]) -> f64 {
    let logs: Vec<f64> = values.iter().map(|v| v.max(1e-300).ln()).collect();
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let ml = logs.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (ti, li) in t.iter().zip(logs.iter()) {
        num += (ti - mt) * (li - ml);
        den += (ti - mt) * (ti - mt);
    }
    num / den
}
