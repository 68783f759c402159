//! Finite twisted transfer operators on cylinder partitions.
//!
//! Functions are discretized as piecewise constants on depth-`d` cylinders
//! with marker-point collocation. A matrix row collects the `2r - 1` inverse
//! branches feeding a cylinder; the entry for branch `j` into row `w` has
//! modulus `|g_j'(x_w)|^a` and phase `b log |g_j'(x_w)| + k arg g_j'(x_w)`.
//!
//! The untwisted operator at the critical exponent has a positive fixed
//! vector; normalizing by it makes the matrix row-stochastic, and iterate
//! norms of the normalized twisted matrices measure the spectral gap.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

use crate::coding::{enumerate_cylinders, CylinderSet};
use crate::error::{Error, Result};
use crate::schottky::{ContractionBounds, SchottkyScheme};

/// Character data of a twisted operator: rotation character `k`, frequency
/// `b` along the flow direction, and the real weight exponent `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwistSpec {
    pub k: i32,
    pub b: f64,
    pub a: f64,
}

impl TwistSpec {
    pub fn untwisted(a: f64) -> Self {
        TwistSpec { k: 0, b: 0.0, a }
    }

    pub fn is_untwisted(&self) -> bool {
        self.k == 0 && self.b == 0.0
    }

    /// Size of the character, `max(|k|, |b|, 1)`.
    pub fn norm_mu(&self) -> f64 {
        (self.k.abs() as f64).max(self.b.abs()).max(1.0)
    }
}

/// Sparse structure shared by every matrix at a fixed depth: column indices
/// and branch-derivative data per (row, branch) edge.
#[derive(Debug)]
pub struct EdgeStructure {
    pub dim: usize,
    pub branches: usize,
    /// Column index per edge, row-major, `branches` per row.
    pub cols: Vec<u32>,
    /// `log |g_j'(x_w)|` per edge.
    pub logmod: Vec<f64>,
    /// `arg g_j'(x_w)` per edge, folded.
    pub arg: Vec<f64>,
}

/// Cylinder partition plus the edge data all operators at this depth share.
#[derive(Debug)]
pub struct Discretization {
    pub cylinders: CylinderSet,
    pub edges: Arc<EdgeStructure>,
}

impl Discretization {
    pub fn new(scheme: &SchottkyScheme, depth: usize, cap: usize) -> Result<Self> {
        let cylinders = enumerate_cylinders(scheme, depth, cap)?;
        let dim = cylinders.len();
        let branches = scheme.symbol_count() - 1;
        let mut cols = Vec::with_capacity(dim * branches);
        let mut logmod = Vec::with_capacity(dim * branches);
        let mut arg = Vec::with_capacity(dim * branches);

        let mut source = vec![0u16; depth];
        for cyl in cylinders.cylinders() {
            let syms = cyl.symbols();
            source[1..depth].copy_from_slice(&syms[..depth - 1]);
            for j in scheme.symbols() {
                if !scheme.transition(j, syms[0]) {
                    continue;
                }
                source[0] = j;
                let col = if depth == 1 {
                    (j - 1) as usize
                } else {
                    cylinders.index_of(&source)
                };
                let d = scheme.map(j).derivative_log_polar(cyl.marker)?;
                cols.push(col as u32);
                logmod.push(d.logmod);
                arg.push(d.arg);
            }
        }

        Ok(Discretization {
            cylinders,
            edges: Arc::new(EdgeStructure {
                dim,
                branches,
                cols,
                logmod,
                arg,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.edges.dim
    }

    pub fn depth(&self) -> usize {
        self.cylinders.depth()
    }
}

/// A finite twisted transfer matrix over a fixed cylinder partition.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub twist: TwistSpec,
    pub depth: usize,
    edges: Arc<EdgeStructure>,
    values: Vec<Complex64>,
    normalized: bool,
}

/// Assemble the matrix for a twist over a prepared discretization.
pub fn assemble(disc: &Discretization, twist: TwistSpec) -> TransferMatrix {
    let e = &disc.edges;
    let values = (0..e.cols.len())
        .map(|i| {
            let modulus = (twist.a * e.logmod[i]).exp();
            let phase = twist.b * e.logmod[i] + (twist.k as f64) * e.arg[i];
            Complex64::from_polar(modulus, phase)
        })
        .collect();
    TransferMatrix {
        twist,
        depth: disc.depth(),
        edges: Arc::clone(&disc.edges),
        values,
        normalized: false,
    }
}

impl TransferMatrix {
    pub fn dim(&self) -> usize {
        self.edges.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn entry_count(&self) -> usize {
        self.values.len()
    }

    /// Value of the edge at a flat index (row-major, `branches` per row).
    pub fn value_at(&self, edge: usize) -> Complex64 {
        self.values[edge]
    }

    /// Dense copy, for small-depth oracles and reports.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let n = self.dim();
        let mut dense = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for w in 0..n {
            for (e, &col) in self.row_cols(w).iter().enumerate() {
                dense[w][col as usize] += self.row_values(w)[e];
            }
        }
        dense
    }

    fn row_cols(&self, w: usize) -> &[u32] {
        let b = self.edges.branches;
        &self.edges.cols[w * b..(w + 1) * b]
    }

    fn row_values(&self, w: usize) -> &[Complex64] {
        let b = self.edges.branches;
        &self.values[w * b..(w + 1) * b]
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let b = self.edges.branches;
        for w in 0..self.dim() {
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..b {
                let idx = w * b + e;
                acc += self.values[idx] * x[self.edges.cols[idx] as usize];
            }
            y[w] = acc;
        }
    }

    /// Real-valued product for matrices with real entries.
    fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        let b = self.edges.branches;
        for w in 0..self.dim() {
            let mut acc = 0.0;
            for e in 0..b {
                let idx = w * b + e;
                acc += self.values[idx].re * x[self.edges.cols[idx] as usize];
            }
            y[w] = acc;
        }
    }

    /// `y^T = x^T A` (real entries).
    fn apply_transpose_real(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        let b = self.edges.branches;
        for w in 0..self.dim() {
            let xw = x[w];
            for e in 0..b {
                let idx = w * b + e;
                y[self.edges.cols[idx] as usize] += self.values[idx].re * xw;
            }
        }
    }
}

/// Perron data of a nonnegative transfer matrix: lead eigenvalue, positive
/// right vector, and the left probability vector.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub lambda: f64,
    /// Right vector, sup-normalized to one.
    pub right: Vec<f64>,
    /// Left vector, normalized to sum one.
    pub left: Vec<f64>,
    /// Max of the right and left sup-norm residuals.
    pub residual: f64,
}

pub const PERRON_TOL: f64 = 1e-12;
pub const PERRON_MAX_ITERS: usize = 100_000;

fn power_iteration(
    matrix: &TransferMatrix,
    transpose: bool,
    tol: f64,
) -> Result<(f64, Vec<f64>, f64)> {
    let n = matrix.dim();
    let mut x = vec![1.0f64; n];
    let mut y = vec![0.0f64; n];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..PERRON_MAX_ITERS {
        if transpose {
            matrix.apply_transpose_real(&x, &mut y);
        } else {
            matrix.apply_real(&x, &mut y);
        }
        let norm = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Convergence(
                "power iteration collapsed to zero or overflowed".into(),
            ));
        }
        lambda = norm;
        residual = x
            .iter()
            .zip(y.iter())
            .fold(0.0f64, |m, (xi, yi)| m.max((yi - lambda * xi).abs()));
        for (xi, yi) in x.iter_mut().zip(y.iter()) {
            *xi = yi / norm;
        }
        if residual <= tol {
            break;
        }
    }
    if residual > 1e-10 {
        return Err(Error::Convergence(format!(
            "power iteration stalled at residual {residual:.3e}"
        )));
    }
    Ok((lambda, x, residual))
}

/// Perron eigendata by power iteration from the all-ones vector.
///
/// Requires an untwisted (nonnegative) matrix.
pub fn perron(matrix: &TransferMatrix) -> Result<SpectralData> {
    if !matrix.twist.is_untwisted() {
        return Err(Error::Usage(
            "perron data is defined for untwisted matrices only".into(),
        ));
    }
    let (lambda, right, res_r) = power_iteration(matrix, false, PERRON_TOL)?;
    let (lambda_l, mut left, res_l) = power_iteration(matrix, true, PERRON_TOL)?;
    if (lambda - lambda_l).abs() > 1e-8 * lambda.max(1.0) {
        return Err(Error::Convergence(format!(
            "left/right eigenvalues disagree: {lambda} vs {lambda_l}"
        )));
    }
    let sum: f64 = left.iter().sum();
    for v in &mut left {
        *v /= sum;
    }
    Ok(SpectralData {
        lambda,
        right,
        left,
        residual: res_r.max(res_l),
    })
}

fn lead_eigenvalue(disc: &Discretization, s: f64) -> Result<f64> {
    let m = assemble(disc, TwistSpec::untwisted(s));
    let (lambda, _, _) = power_iteration(&m, false, PERRON_TOL)?;
    Ok(lambda)
}

/// Result of the pressure-equation solve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DeltaSolve {
    pub delta: f64,
    pub depth: usize,
    /// `|lambda(delta) - 1|` at the returned point.
    pub residual: f64,
}

/// Solve `lambda(s) = 1` for the critical exponent by bisection on `[0, 2]`.
///
/// `lambda(s)` is strictly decreasing, `lambda(0) = 2r - 1`; elementary
/// rank-one schemes short-circuit to zero.
pub fn solve_delta(
    scheme: &SchottkyScheme,
    depth: usize,
    tol: f64,
    cap: usize,
) -> Result<DeltaSolve> {
    if scheme.rank() < 2 {
        return Ok(DeltaSolve {
            delta: 0.0,
            depth,
            residual: 0.0,
        });
    }
    let disc = Discretization::new(scheme, depth, cap)?;
    solve_delta_on(&disc, tol)
}

/// Same as [`solve_delta`] over an existing discretization.
pub fn solve_delta_on(disc: &Discretization, tol: f64) -> Result<DeltaSolve> {
    let mut lo = 0.0f64;
    let mut hi = 2.0f64;
    let lam_lo = lead_eigenvalue(disc, lo)?;
    let lam_hi = lead_eigenvalue(disc, hi)?;
    if lam_lo < 1.0 || lam_hi > 1.0 {
        return Err(Error::Convergence(format!(
            "bisection bracket failed: lambda(0) = {lam_lo}, lambda(2) = {lam_hi}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if lead_eigenvalue(disc, mid)? >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta = 0.5 * (lo + hi);
    let residual = (lead_eigenvalue(disc, delta)? - 1.0).abs();
    Ok(DeltaSolve {
        delta,
        depth: disc.depth(),
        residual,
    })
}

/// Rescale entries by the given Perron data: `entry(w, v) *= h(v)/(lambda h(w))`.
///
/// With the untwisted matrix and its own spectral data this is row-stochastic;
/// twisted matrices keep entry moduli equal to the untwisted entries.
pub fn normalize(matrix: &TransferMatrix, spectral: &SpectralData) -> TransferMatrix {
    let mut out = matrix.clone();
    let b = out.edges.branches;
    for w in 0..out.dim() {
        for e in 0..b {
            let idx = w * b + e;
            let v = out.edges.cols[idx] as usize;
            out.values[idx] *= spectral.right[v] / (spectral.lambda * spectral.right[w]);
        }
    }
    out.normalized = true;
    out
}

/// Stationary weights `nu_hat(w) = left(w) right(w) / sum`, the cylinder-level
/// equilibrium weights fixed by the transpose of the normalized matrix.
pub fn stationary_weights(spectral: &SpectralData) -> Vec<f64> {
    let mut w: Vec<f64> = spectral
        .left
        .iter()
        .zip(spectral.right.iter())
        .map(|(l, r)| l * r)
        .collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Probe vectors over which iterate norms take their maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProbeKind {
    Constant,
    Bump(usize),
    Random(u8),
}

impl ProbeKind {
    /// Nonnegative probes participate in the pointwise-domination check.
    pub fn is_nonnegative(&self) -> bool {
        !matches!(self, ProbeKind::Random(_))
    }
}

const RANDOM_PROBES: usize = 8;
const BUMP_PROBES: usize = 4;
const PROBE_SEED: u64 = 0x4859_5045_524e_0001;

/// Iterate norms of a normalized matrix in the stationary-weighted L2 norm.
#[derive(Debug, Clone)]
pub struct IterateReport {
    pub probes: Vec<ProbeKind>,
    /// `log ||A^j p||` per probe, `j = 0..=n`, probes start at unit norm.
    pub log_norms: Vec<Vec<f64>>,
    /// `m_j`: max over probes of the iterate norm.
    pub m: Vec<f64>,
    /// `(m_n / m_{n/2})^{2/n}`.
    pub rho_est: f64,
}

fn weighted_l2(x: &[Complex64], weights: &[f64]) -> f64 {
    x.iter()
        .zip(weights.iter())
        .map(|(v, w)| w * v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn probe_basis(dim: usize) -> Vec<(ProbeKind, Vec<Complex64>)> {
    let mut probes = Vec::new();
    probes.push((ProbeKind::Constant, vec![Complex64::new(1.0, 0.0); dim]));
    let mut bump_at = std::collections::BTreeSet::new();
    for i in 0..BUMP_PROBES {
        bump_at.insert(i * dim / BUMP_PROBES);
    }
    for idx in bump_at {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[idx] = Complex64::new(1.0, 0.0);
        probes.push((ProbeKind::Bump(idx), v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    for i in 0..RANDOM_PROBES {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0))
            .collect();
        probes.push((ProbeKind::Random(i as u8), v));
    }
    probes
}

/// Track iterate norms `m_j` over the fixed probe basis.
///
/// Probes are normalized to unit weighted-L2 norm; iterates are renormalized
/// every step with the logs accumulated, so long decays cannot underflow.
pub fn iterate_norm(matrix: &TransferMatrix, weights: &[f64], n: usize) -> Result<IterateReport> {
    if !matrix.normalized {
        return Err(Error::Usage("iterate_norm expects a normalized matrix".into()));
    }
    if n > 10_000 {
        return Err(Error::Budget(format!("iterate count {n} exceeds 10^4")));
    }
    let n = if n % 2 == 0 { n } else { n + 1 };
    let dim = matrix.dim();
    let mut probes = probe_basis(dim);
    let mut kinds = Vec::new();
    let mut log_norms = Vec::new();
    let mut scratch = vec![Complex64::new(0.0, 0.0); dim];

    for (kind, vec) in probes.iter_mut() {
        let norm0 = weighted_l2(vec, weights);
        for v in vec.iter_mut() {
            *v /= norm0;
        }
        let mut logs = Vec::with_capacity(n + 1);
        logs.push(0.0f64);
        let mut acc = 0.0f64;
        for _ in 0..n {
            matrix.apply(vec, &mut scratch);
            let norm = weighted_l2(&scratch, weights);
            if norm == 0.0 {
                // Iterate annihilated the probe; record -inf logs from here.
                acc = f64::NEG_INFINITY;
            } else {
                acc += norm.ln();
                for (v, s) in vec.iter_mut().zip(scratch.iter()) {
                    *v = s / norm;
                }
            }
            logs.push(acc);
        }
        kinds.push(*kind);
        log_norms.push(logs);
    }

    let m: Vec<f64> = (0..=n)
        .map(|j| {
            log_norms
                .iter()
                .map(|l| l[j])
                .fold(f64::NEG_INFINITY, f64::max)
                .exp()
        })
        .collect();
    let rho_est = ((m[n].ln() - m[n / 2].ln()) * 2.0 / n as f64).exp();
    Ok(IterateReport {
        probes: kinds,
        log_norms,
        m,
        rho_est,
    })
}

/// One cell of a twist-grid scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanRow {
    pub b: f64,
    pub k: i32,
    pub a: f64,
    pub depth: usize,
    pub rho_est: f64,
    /// Excluded by theory: trivial character with `|b| <= 1`.
    pub flagged: bool,
    /// Max over nonnegative probes and iterates of
    /// `m_j(twisted) - m_j(untwisted)`; domination means this is <= 0 up to
    /// rounding.
    pub domination_excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub a: f64,
    pub depth: usize,
    pub iters: usize,
    pub rows: Vec<ScanRow>,
    pub max_rho_unflagged: f64,
    pub argmax_b: f64,
    pub argmax_k: i32,
}

/// Scan `rho_est` over a `(b, k)` grid at fixed `a`.
///
/// Rows with the trivial character and `|b| <= 1` are reported but flagged
/// as excluded by theory. Cells are independent and run in parallel; rows
/// come back sorted by `(k, b)`.
pub fn scan_grid(
    disc: &Discretization,
    spectral: &SpectralData,
    a: f64,
    b_values: &[f64],
    k_values: &[i32],
    iters: usize,
) -> Result<ScanReport> {
    let weights = stationary_weights(spectral);
    let untwisted = normalize(&assemble(disc, TwistSpec::untwisted(a)), spectral);
    let base = iterate_norm(&untwisted, &weights, iters)?;

    let mut cells: Vec<(i32, f64)> = Vec::new();
    for &k in k_values {
        for &b in b_values {
            cells.push((k, b));
        }
    }
    cells.sort_by(|x, y| (x.0, x.1).partial_cmp(&(y.0, y.1)).unwrap());

    let rows: Result<Vec<ScanRow>> = cells
        .par_iter()
        .map(|&(k, b)| {
            let twist = TwistSpec { k, b, a };
            let matrix = normalize(&assemble(disc, twist), spectral);
            let report = iterate_norm(&matrix, &weights, iters)?;
            let mut excess = f64::NEG_INFINITY;
            for (p, kind) in report.probes.iter().enumerate() {
                if !kind.is_nonnegative() {
                    continue;
                }
                for j in 0..report.log_norms[p].len() {
                    let diff = report.log_norms[p][j].exp() - base.log_norms[p][j].exp();
                    excess = excess.max(diff);
                }
            }
            Ok(ScanRow {
                b,
                k,
                a,
                depth: disc.depth(),
                rho_est: report.rho_est,
                flagged: k == 0 && b.abs() <= 1.0,
                domination_excess: excess,
            })
        })
        .collect();
    let rows = rows?;

    let mut max_rho_unflagged = f64::NEG_INFINITY;
    let mut argmax = (0.0, 0);
    for row in &rows {
        if !row.flagged && row.rho_est > max_rho_unflagged {
            max_rho_unflagged = row.rho_est;
            argmax = (row.b, row.k);
        }
    }
    Ok(ScanReport {
        a,
        depth: disc.depth(),
        iters,
        rows,
        max_rho_unflagged,
        argmax_b: argmax.0,
        argmax_k: argmax.1,
    })
}

/// Result of the gradient-inequality check for one iterate count.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LyPoint {
    pub m: usize,
    /// Smallest front constant making the inequality hold over all sampled
    /// marker pairs and probes.
    pub a0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LyReport {
    pub twist: TwistSpec,
    pub depth: usize,
    pub points: Vec<LyPoint>,
    /// `max a0 / min a0` across the iterate counts.
    pub spread: f64,
}

/// Check the gradient inequality
/// `|grad(L_twisted^m h)| <= A0 [ |mu_b| (L_a^m |h|) + (B / kappa^m)(L_a^m H) ]`
/// with gradients proxied by first differences across sibling markers.
///
/// The left side is measured summand-wise, the way the inequality is sharp:
/// the gradient of an `m`-fold iterate expands over branch paths, and sibling
/// rows share their sources after one step, so the path bound factors as
/// `sum_j |d entry_j| (L_a^{m-1} |h|)(v_j)`. No cancellation between branches
/// is claimed; that is what keeps the constant uniform in `m`.
///
/// Probes are the two marker coordinates (`B = 1`, `H = 1`) and the constant
/// (`B = 0`); reports the smallest `A0` per iterate count `m`.
pub fn ly_check(
    disc: &Discretization,
    spectral: &SpectralData,
    twist: TwistSpec,
    ms: &[usize],
    bounds: &ContractionBounds,
) -> Result<LyReport> {
    if disc.depth() < 2 {
        return Err(Error::Usage("ly_check needs depth >= 2".into()));
    }
    let max_m = ms.iter().copied().max().unwrap_or(1);
    if max_m * disc.depth() > 512 {
        return Err(Error::Budget("m * depth exceeds the check budget".into()));
    }

    let twisted = normalize(&assemble(disc, twist), spectral);
    let plain = normalize(&assemble(disc, TwistSpec::untwisted(twist.a)), spectral);
    let dim = disc.dim();
    let branches = disc.edges.branches;
    let markers: Vec<Complex64> = disc
        .cylinders
        .cylinders()
        .iter()
        .map(|c| c.marker)
        .collect();

    // (probe, B): |grad h| <= B * H with H = 1.
    let probes: Vec<(Vec<f64>, f64)> = vec![
        (markers.iter().map(|z| z.re).collect(), 1.0),
        (markers.iter().map(|z| z.im).collect(), 1.0),
        (vec![1.0; dim], 0.0),
    ];

    // Sibling groups: cylinders sharing their first depth-1 symbols are
    // consecutive in lexicographic order and share source columns.
    let group = branches;
    debug_assert_eq!(dim % group, 0);

    let mut points = Vec::new();
    for &m in ms {
        let mut a0_required = 0.0f64;
        for (probe, b_const) in &probes {
            // Untwisted iterates of |h| and of the majorant H = 1.
            let mut abs: Vec<f64> = probe.iter().map(|v| v.abs()).collect();
            let mut maj = vec![1.0f64; dim];
            let mut scratch = vec![0.0f64; dim];
            for _ in 0..m.saturating_sub(1) {
                plain.apply_real(&abs, &mut scratch);
                std::mem::swap(&mut abs, &mut scratch);
                plain.apply_real(&maj, &mut scratch);
                std::mem::swap(&mut maj, &mut scratch);
            }
            let abs_prev = abs.clone();
            plain.apply_real(&abs_prev, &mut abs);
            let maj_prev = maj.clone();
            plain.apply_real(&maj_prev, &mut maj);

            let decay = bounds.kappa.powi(-(m as i32));
            for g in 0..dim / group {
                let base = g * group;
                for i in 0..group {
                    for l in (i + 1)..group {
                        let (w, w2) = (base + i, base + l);
                        let dist = (markers[w] - markers[w2]).norm();
                        if dist < 1e-14 {
                            continue;
                        }
                        let mut lhs = 0.0;
                        for e in 0..branches {
                            let dv = (twisted.values[w * branches + e]
                                - twisted.values[w2 * branches + e])
                                .norm();
                            let src = twisted.edges.cols[w * branches + e] as usize;
                            debug_assert_eq!(src, twisted.edges.cols[w2 * branches + e] as usize);
                            lhs += dv * abs_prev[src];
                        }
                        lhs /= dist;
                        let rhs = twist.norm_mu() * abs[w].min(abs[w2])
                            + b_const * decay * maj[w].min(maj[w2]);
                        if rhs > 0.0 {
                            a0_required = a0_required.max(lhs / rhs);
                        }
                    }
                }
            }
        }
        points.push(LyPoint { m, a0: a0_required });
    }

    let max = points.iter().map(|p| p.a0).fold(f64::NEG_INFINITY, f64::max);
    let min = points.iter().map(|p| p.a0).fold(f64::INFINITY, f64::min);
    Ok(LyReport {
        twist,
        depth: disc.depth(),
        points,
        spread: if min > 0.0 { max / min } else { f64::INFINITY },
    })
}
