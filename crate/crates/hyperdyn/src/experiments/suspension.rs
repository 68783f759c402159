//! Stationary sampling of the suspension flow over the cylinder chain.
//!
//! The symbolic component is the forward Markov chain whose kernel is the
//! stationary reversal of the normalized transfer matrix; its rows sum to
//! one exactly and its stationary law is the equilibrium weight vector. Roof
//! and rotation increments attach to chain edges, matching the collocated
//! operator entries, so the sampled flow and the operator series describe
//! the same finite suspension.
//!
//! Fiber time is kept in integer ticks of 2^-40 seconds: crossing arithmetic
//! is exact, and flowing by `t1` then `t2` equals flowing by `t1 + t2`
//! whenever the tick quantization of the times adds exactly (dyadic grids).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::moebius::fold_angle;
use crate::moebius::TAU as TAU_ANGLE;
use crate::transfer::{Discretization, TransferMatrix};

/// Seconds per tick.
pub const TICK: f64 = 1.0 / (1u64 << 40) as f64;
const TICKS_PER_SECOND: f64 = (1u64 << 40) as f64;

/// Forward Markov chain on cylinders with edge-attached roof and rotation.
#[derive(Debug, Clone)]
pub struct StationaryChain {
    pub depth: usize,
    dim: usize,
    branches: usize,
    /// Successor cylinder per (state, slot), row-major.
    succ_idx: Vec<u32>,
    /// Transition probabilities, rows summing to one.
    succ_prob: Vec<f64>,
    /// Cumulative probabilities within each row.
    succ_cum: Vec<f64>,
    /// Roof increment per edge.
    succ_tau: Vec<f64>,
    /// Rotation increment per edge, folded.
    succ_theta: Vec<f64>,
    /// Stationary weights of the chain.
    pub nu_hat: Vec<f64>,
    /// Cumulative start distribution over (state, slot), roof-length biased.
    start_cum: Vec<f64>,
    /// Mean roof under the stationary pair law; total suspension mass.
    pub mean_roof: f64,
    /// First symbol per cylinder, for observables.
    first_symbol: Vec<u16>,
}

/// Build the chain from the normalized untwisted matrix and its stationary
/// weights.
///
/// The kernel is `p(w -> w') = nu(w') A(w', w) / nu(w)`: row-stochastic by
/// the stationarity of `nu` under the transpose, verified to 1e-12.
pub fn build_chain(
    disc: &Discretization,
    normalized: &TransferMatrix,
    nu_hat: &[f64],
) -> Result<StationaryChain> {
    if !normalized.is_normalized() || !normalized.twist.is_untwisted() {
        return Err(Error::Usage(
            "chain needs the normalized untwisted matrix".into(),
        ));
    }
    let dim = disc.dim();
    let branches = disc.edges.branches;
    let mut succ_idx = vec![0u32; dim * branches];
    let mut succ_prob = vec![0.0f64; dim * branches];
    let mut succ_tau = vec![0.0f64; dim * branches];
    let mut succ_theta = vec![0.0f64; dim * branches];
    let mut fill = vec![0usize; dim];

    for target in 0..dim {
        for e in 0..branches {
            let idx = target * branches + e;
            let source = disc.edges.cols[idx] as usize;
            let slot = fill[source];
            debug_assert!(slot < branches);
            let at = source * branches + slot;
            succ_idx[at] = target as u32;
            succ_prob[at] = nu_hat[target] * normalized.value_at(idx).re / nu_hat[source];
            succ_tau[at] = -disc.edges.logmod[idx];
            succ_theta[at] = fold_angle(-disc.edges.arg[idx]);
            fill[source] += 1;
        }
    }
    for (w, &f) in fill.iter().enumerate() {
        if f != branches {
            return Err(Error::Convergence(format!(
                "state {w} has {f} successors, expected {branches}"
            )));
        }
    }

    let mut succ_cum = vec![0.0f64; dim * branches];
    for w in 0..dim {
        let row = &mut succ_prob[w * branches..(w + 1) * branches];
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Convergence(format!(
                "chain row {w} sums to {sum}, expected 1"
            )));
        }
        for p in row.iter_mut() {
            *p /= sum;
        }
        let mut acc = 0.0;
        for e in 0..branches {
            acc += succ_prob[w * branches + e];
            succ_cum[w * branches + e] = acc;
        }
        succ_cum[(w + 1) * branches - 1] = 1.0;
    }

    let mut start_cum = vec![0.0f64; dim * branches];
    let mut acc = 0.0;
    for w in 0..dim {
        for e in 0..branches {
            let at = w * branches + e;
            acc += nu_hat[w] * succ_prob[at] * succ_tau[at];
            start_cum[at] = acc;
        }
    }
    let mean_roof = acc;
    for v in &mut start_cum {
        *v /= mean_roof;
    }
    *start_cum.last_mut().unwrap() = 1.0;

    let first_symbol = disc
        .cylinders
        .cylinders()
        .iter()
        .map(|c| c.first_symbol())
        .collect();

    Ok(StationaryChain {
        depth: disc.depth(),
        dim,
        branches,
        succ_idx,
        succ_prob,
        succ_cum,
        succ_tau,
        succ_theta,
        nu_hat: nu_hat.to_vec(),
        start_cum,
        mean_roof,
        first_symbol,
    })
}

/// A point of the sampled suspension: current fiber (a chain edge), exact
/// tick position in the fiber, and circle angle. Carries its own stream so
/// the future itinerary extends lazily and deterministically.
#[derive(Debug, Clone)]
pub struct SuspensionState {
    cur: u32,
    slot: u8,
    ticks: u64,
    theta: f64,
    crossings: u64,
    rng: ChaCha8Rng,
}

impl StationaryChain {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transition_prob(&self, w: usize, slot: usize) -> f64 {
        self.succ_prob[w * self.branches + slot]
    }

    pub fn successor(&self, w: usize, slot: usize) -> usize {
        self.succ_idx[w * self.branches + slot] as usize
    }

    pub fn edge_roof(&self, w: usize, slot: usize) -> f64 {
        self.succ_tau[w * self.branches + slot]
    }

    pub fn edge_rotation(&self, w: usize, slot: usize) -> f64 {
        self.succ_theta[w * self.branches + slot]
    }

    pub fn slots(&self) -> usize {
        self.branches
    }

    pub fn first_symbol(&self, w: usize) -> u16 {
        self.first_symbol[w]
    }

    fn fiber_ticks(&self, w: usize, slot: usize) -> u64 {
        (self.edge_roof(w, slot) * TICKS_PER_SECOND).round() as u64
    }

    /// Draw one stationary state; sample index selects an independent
    /// deterministic stream.
    pub fn sample_state(&self, seed: u64, index: u64) -> SuspensionState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let u: f64 = rng.gen::<f64>();
        let at = self.start_cum.partition_point(|&c| c < u).min(self.start_cum.len() - 1);
        let cur = (at / self.branches) as u32;
        let slot = (at % self.branches) as u8;
        let fiber = self.fiber_ticks(cur as usize, slot as usize);
        let s: f64 = rng.gen::<f64>();
        let ticks = ((s * fiber as f64) as u64).min(fiber - 1);
        let theta = rng.gen::<f64>() * TAU_ANGLE;
        SuspensionState {
            cur,
            slot,
            ticks,
            theta,
            crossings: 0,
            rng,
        }
    }

    /// Advance by `t >= 0` seconds (quantized to ticks).
    pub fn flow(&self, state: &mut SuspensionState, t: f64) {
        debug_assert!(t >= 0.0);
        let mut pos = state.ticks + (t * TICKS_PER_SECOND).round() as u64;
        loop {
            let fiber = self.fiber_ticks(state.cur as usize, state.slot as usize);
            if pos < fiber {
                break;
            }
            pos -= fiber;
            state.theta = fold_rotation(
                state.theta + self.edge_rotation(state.cur as usize, state.slot as usize),
            );
            state.cur = self.succ_idx[state.cur as usize * self.branches + state.slot as usize];
            let u: f64 = state.rng.gen();
            let row = &self.succ_cum
                [state.cur as usize * self.branches..(state.cur as usize + 1) * self.branches];
            state.slot = row.partition_point(|&c| c < u).min(self.branches - 1) as u8;
            state.crossings += 1;
        }
        state.ticks = pos;
    }
}

fn fold_rotation(theta: f64) -> f64 {
    let t = theta % TAU_ANGLE;
    if t < 0.0 {
        t + TAU_ANGLE
    } else {
        t
    }
}

impl SuspensionState {
    pub fn cylinder(&self) -> usize {
        self.cur as usize
    }

    pub fn slot(&self) -> usize {
        self.slot as usize
    }

    /// Time into the current fiber, seconds.
    pub fn fiber_time(&self) -> f64 {
        self.ticks as f64 * TICK
    }

    /// Circle angle in [0, 2 pi).
    pub fn angle(&self) -> f64 {
        self.theta
    }

    pub fn crossings(&self) -> u64 {
        self.crossings
    }
}
