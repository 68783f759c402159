//! Consistency of the Laplace-transformed correlation with the twisted
//! operator series: the one-sided transform of the post-crossing correlation
//! equals the sum over iterates of the weighted operator applied to fiber
//! integrals of the observables.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::correlate::Observable;
use crate::experiments::suspension::StationaryChain;
use crate::transfer::{assemble, normalize, Discretization, SpectralData, TwistSpec};

/// 16-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 16] = [
    -0.9894009349916499,
    -0.9445750230732326,
    -0.8656312023878318,
    -0.7554044083550030,
    -0.6178762444026438,
    -0.4580167776572274,
    -0.2816035507792589,
    -0.0950125098376374,
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL_WEIGHTS: [f64; 16] = [
    0.0271524594117541,
    0.0622535239386479,
    0.0951585116824928,
    0.1246289712555339,
    0.1495959888165767,
    0.1691565193950025,
    0.1826034150449236,
    0.1894506104550685,
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

fn fiber_integral(
    chain: &StationaryChain,
    obs: &Observable,
    cylinder: usize,
    tau: f64,
    xi: f64,
) -> f64 {
    // int_0^tau e^{xi s} obs(cyl, s / tau) ds by Gauss-Legendre.
    let half = 0.5 * tau;
    let mut total = 0.0;
    for (n, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        let s = half * (1.0 + n);
        total += w * half * (xi * s).exp() * obs.fiber_value(chain, cylinder, s / tau);
    }
    total
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplaceReport {
    pub xi: f64,
    pub k: i32,
    pub depth: usize,
    pub series_re: f64,
    pub series_im: f64,
    pub mc_re: f64,
    pub mc_im: f64,
    /// `|series - mc| / max(|series|, |mc|)`.
    pub discrepancy: f64,
    pub series_terms: usize,
    pub samples: u64,
    pub seed: u64,
    /// Time horizon actually used by the Monte Carlo transform.
    pub mc_horizon: f64,
}

/// Compare the Laplace transform of the correlation, estimated by Monte
/// Carlo, against the operator-series expression, for observables of
/// rotation type `k` and real `xi > 0`.
#[allow(clippy::too_many_arguments)]
pub fn laplace_consistency(
    disc: &Discretization,
    spectral: &SpectralData,
    chain: &StationaryChain,
    delta: f64,
    xi: f64,
    k_f: i32,
    k_g: i32,
    f: Observable,
    g: Observable,
    max_terms: usize,
    samples: u64,
    seed: u64,
) -> Result<LaplaceReport> {
    if xi <= 0.0 {
        return Err(Error::Usage("xi must be positive for the transform".into()));
    }

    // Distinct rotation types are orthogonal on the circle, so the series
    // side vanishes identically.
    let series = if k_f == k_g {
        operator_series(disc, spectral, chain, delta, xi, k_f, &f, &g, max_terms)?
    } else {
        Complex64::new(0.0, 0.0)
    };
    let (mc, horizon) = transform_by_monte_carlo(chain, xi, k_f, k_g, &f, &g, samples, seed);

    let denom = series.norm().max(mc.norm()).max(1e-300);
    Ok(LaplaceReport {
        xi,
        k: k_f,
        depth: disc.depth(),
        series_re: series.re,
        series_im: series.im,
        mc_re: mc.re,
        mc_im: mc.im,
        discrepancy: (series - mc).norm() / denom,
        series_terms: max_terms,
        samples,
        seed,
        mc_horizon: horizon,
    })
}

/// Right side: `sum_{m >= 1} sum_w nu(w) Psi(w) (T^{m-1} Phi)(w)` with
/// `T` the normalized twisted matrix at exponent `delta + xi`, `Phi` the
/// edge integrals of `f` pushed through one operator step, and `Psi` the
/// expected outgoing fiber integral of `g`.
#[allow(clippy::too_many_arguments)]
fn operator_series(
    disc: &Discretization,
    spectral: &SpectralData,
    chain: &StationaryChain,
    delta: f64,
    xi: f64,
    k: i32,
    f: &Observable,
    g: &Observable,
    max_terms: usize,
) -> Result<Complex64> {
    let dim = disc.dim();
    let branches = disc.edges.branches;
    let matrix = normalize(
        &assemble(
            disc,
            TwistSpec {
                k,
                b: 0.0,
                a: delta + xi,
            },
        ),
        spectral,
    );

    // Phi(w') = sum over edges (v -> w') of T(w', v) * int e^{xi s} f(v, s).
    let mut phi = vec![Complex64::new(0.0, 0.0); dim];
    for w in 0..dim {
        for e in 0..branches {
            let idx = w * branches + e;
            let v = disc.edges.cols[idx] as usize;
            let tau = -disc.edges.logmod[idx];
            phi[w] += matrix.value_at(idx) * fiber_integral(chain, f, v, tau, xi);
        }
    }

    // Psi(w) = sum over outgoing slots of p * conj(int e^{-xi t} g(w, t)).
    let psi: Vec<f64> = (0..dim)
        .map(|w| {
            (0..chain.slots())
                .map(|s| {
                    let tau = chain.edge_roof(w, s);
                    chain.transition_prob(w, s) * fiber_integral(chain, g, w, tau, -xi)
                })
                .sum()
        })
        .collect();

    let mut total = Complex64::new(0.0, 0.0);
    let mut x = phi;
    let mut scratch = vec![Complex64::new(0.0, 0.0); dim];
    let mut prev_term = f64::INFINITY;
    for m in 0..max_terms {
        if m > 0 {
            matrix.apply(&x, &mut scratch);
            std::mem::swap(&mut x, &mut scratch);
        }
        let term: Complex64 = (0..dim).map(|w| chain.nu_hat[w] * psi[w] * x[w]).sum();
        total += term;
        let size = term.norm();
        if m + 1 == max_terms {
            // Geometric tail estimate from the last ratio.
            let ratio = if prev_term > 0.0 { size / prev_term } else { 0.0 };
            if ratio < 1.0 {
                let tail = size * ratio / (1.0 - ratio);
                if tail > 0.01 * total.norm().max(1e-300) {
                    return Err(Error::Convergence(format!(
                        "operator series tail {tail:.3e} above 1% after {max_terms} terms"
                    )));
                }
            } else if size > 0.01 * total.norm().max(1e-300) {
                return Err(Error::Convergence(
                    "operator series is not decaying".into(),
                ));
            }
        }
        prev_term = size;
    }
    Ok(total)
}

/// Left side: trapezoid transform of the post-crossing correlation
/// `rho(t) = Z * mean[f(x) conj(g(flow_t x)); crossed >= 1]`, truncated once
/// the correlation stays below twice its standard error.
fn transform_by_monte_carlo(
    chain: &StationaryChain,
    xi: f64,
    k_f: i32,
    k_g: i32,
    f: &Observable,
    g: &Observable,
    samples: u64,
    seed: u64,
) -> (Complex64, f64) {
    // Dyadic step keeps tick arithmetic exact along the walk.
    let dt = 1.0 / 16.0;
    let hard_cap = (32.0 / xi).min(120.0);
    let nt = (hard_cap / dt).ceil() as usize + 1;

    const CHUNKS: u64 = 64;
    let acc: Vec<(Vec<Complex64>, Vec<f64>)> = (0..CHUNKS)
        .into_par_iter()
        .map(|ci| {
            let lo = samples * ci / CHUNKS;
            let hi = samples * (ci + 1) / CHUNKS;
            let mut sums = vec![Complex64::new(0.0, 0.0); nt];
            let mut abs2 = vec![0.0f64; nt];
            for i in lo..hi {
                let mut state = chain.sample_state(seed, i);
                let f0 = Complex64::from_polar(1.0, k_f as f64 * state.angle())
                    * f.base_value(chain, &state);
                for j in 0..nt {
                    if j > 0 {
                        chain.flow(&mut state, dt);
                    }
                    if state.crossings() >= 1 {
                        let gv = Complex64::from_polar(1.0, k_g as f64 * state.angle())
                            * g.base_value(chain, &state);
                        let v = f0 * gv.conj();
                        sums[j] += v;
                        abs2[j] += v.norm_sqr();
                    }
                }
            }
            (sums, abs2)
        })
        .collect();

    let n = samples as f64;
    let mut rho = vec![Complex64::new(0.0, 0.0); nt];
    let mut stderr = vec![0.0f64; nt];
    for (sums, abs2) in &acc {
        for j in 0..nt {
            rho[j] += sums[j];
            stderr[j] += abs2[j];
        }
    }
    for j in 0..nt {
        let mean = rho[j] / n;
        stderr[j] = ((stderr[j] / n - mean.norm_sqr()).max(0.0) / n).sqrt() * chain.mean_roof;
        rho[j] = mean * chain.mean_roof;
    }

    // Truncate where the signal sits below noise for a stretch.
    let mut cut = nt;
    let mut quiet = 0;
    for j in 1..nt {
        if rho[j].norm() < 2.0 * stderr[j] {
            quiet += 1;
            if quiet >= 8 {
                cut = j + 1;
                break;
            }
        } else {
            quiet = 0;
        }
    }

    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..cut {
        let w = if j == 0 || j + 1 == cut { 0.5 } else { 1.0 };
        let t = j as f64 * dt;
        total += rho[j] * ((-xi * t).exp() * w * dt);
    }
    (total, (cut - 1) as f64 * dt)
}
