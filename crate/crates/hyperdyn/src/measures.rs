//! Cylinder-level equilibrium measure and its geometric regularity: the
//! doubling constant of ball masses and the non-concentration certificate of
//! the limit set.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coding::cylinder_cocycle;
use crate::error::{Error, Result};
use crate::schottky::SchottkyScheme;
use crate::transfer::{stationary_weights, Discretization, SpectralData};

/// Probability weights over a cylinder partition.
#[derive(Debug, Clone)]
pub struct CylinderMeasure {
    pub depth: usize,
    pub weights: Vec<f64>,
}

/// The equilibrium weights `nu_hat(w) = left(w) right(w) / sum` from critical
/// Perron data; stationary under the normalized transpose.
pub fn equilibrium_measure(spectral: &SpectralData, depth: usize) -> CylinderMeasure {
    CylinderMeasure {
        depth,
        weights: stationary_weights(spectral),
    }
}

/// Measure-weighted mean of the roof function over cylinder markers.
pub fn roof_average(measure: &CylinderMeasure, scheme: &SchottkyScheme, disc: &Discretization) -> f64 {
    debug_assert_eq!(measure.weights.len(), disc.dim());
    measure
        .weights
        .iter()
        .zip(disc.cylinders.cylinders())
        .map(|(w, cyl)| w * cylinder_cocycle(scheme, cyl).tau)
        .sum()
}

/// Centers spread through the measure: markers at the weight quantiles.
fn quantile_markers(measure: &CylinderMeasure, disc: &Discretization, count: usize) -> Vec<usize> {
    let mut centers = Vec::with_capacity(count);
    let mut acc = 0.0;
    let mut idx = 0;
    for i in 0..count {
        let q = (i as f64 + 0.5) / count as f64;
        while idx + 1 < disc.dim() && acc + measure.weights[idx] < q {
            acc += measure.weights[idx];
            idx += 1;
        }
        centers.push(idx);
    }
    centers.dedup();
    centers
}

/// Mass of a ball: total weight of cylinders whose bounding disks meet it.
fn ball_mass(disc: &Discretization, measure: &CylinderMeasure, x: Complex64, eps: f64) -> f64 {
    disc.cylinders
        .cylinders()
        .iter()
        .zip(measure.weights.iter())
        .filter(|(cyl, _)| (cyl.marker - x).norm() <= eps + cyl.radius_bound / 2.0)
        .map(|(_, w)| w)
        .sum()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DoublingRow {
    pub center_re: f64,
    pub center_im: f64,
    pub scale: f64,
    pub mass_eps: f64,
    pub mass_2eps: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingReport {
    /// Max over centers of `mass(2 eps) / mass(eps)`, per scale.
    pub per_scale: Vec<(f64, f64)>,
    /// Max ratio over all (center, scale) pairs.
    pub sup_ratio: f64,
    /// (center, scale) pairs skipped for zero inner mass.
    pub skipped: usize,
    pub rows: Vec<DoublingRow>,
}

/// Measure `sup mass(B_{2eps}) / mass(B_eps)` over sampled centers and scales.
pub fn doubling_ratio(
    disc: &Discretization,
    measure: &CylinderMeasure,
    center_count: usize,
    scales: &[f64],
) -> Result<DoublingReport> {
    if scales.is_empty() {
        return Err(Error::Usage("at least one scale is required".into()));
    }
    let centers = quantile_markers(measure, disc, center_count);
    let mut rows = Vec::new();
    let mut per_scale = Vec::new();
    let mut sup_ratio = 0.0f64;
    let mut skipped = 0usize;
    for &eps in scales {
        let mut scale_sup = 0.0f64;
        for &ci in &centers {
            let x = disc.cylinders.get(ci).marker;
            let inner = ball_mass(disc, measure, x, eps);
            let outer = ball_mass(disc, measure, x, 2.0 * eps);
            if inner <= 0.0 {
                skipped += 1;
                continue;
            }
            let ratio = outer / inner;
            scale_sup = scale_sup.max(ratio);
            rows.push(DoublingRow {
                center_re: x.re,
                center_im: x.im,
                scale: eps,
                mass_eps: inner,
                mass_2eps: outer,
            });
        }
        per_scale.push((eps, scale_sup));
        sup_ratio = sup_ratio.max(scale_sup);
    }
    Ok(DoublingReport {
        per_scale,
        sup_ratio,
        skipped,
        rows,
    })
}

/// Non-concentration certificate over a point cloud.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NcpReport {
    /// Certified constant: min over samples, directions, and scales of the
    /// best projected displacement `|<y - x, w>| / eps` within the ball.
    pub delta_star: f64,
    pub worst_point_re: f64,
    pub worst_point_im: f64,
    /// Angle of the worst direction.
    pub worst_direction: f64,
    pub worst_scale: f64,
    pub sample_count: usize,
    pub direction_count: usize,
}

/// Core of the certificate over an explicit cloud; `x_indices` select the
/// sample centers.
fn ncp_core(
    points: &[Complex64],
    x_indices: &[usize],
    epsilons: &[f64],
    directions: usize,
) -> NcpReport {
    let dirs: Vec<Complex64> = (0..directions)
        .map(|i| Complex64::from_polar(1.0, std::f64::consts::PI * 2.0 * i as f64 / directions as f64))
        .collect();

    let per_sample: Vec<(f64, Complex64, f64, f64)> = x_indices
        .par_iter()
        .map(|&xi| {
            let x = points[xi];
            let mut worst = (f64::INFINITY, x, 0.0f64, 0.0f64);
            for &eps in epsilons {
                let mut best_proj = vec![0.0f64; dirs.len()];
                for &y in points {
                    let d = y - x;
                    if d.norm() > eps {
                        continue;
                    }
                    for (di, w) in dirs.iter().enumerate() {
                        let proj = (d.re * w.re + d.im * w.im).abs();
                        if proj > best_proj[di] {
                            best_proj[di] = proj;
                        }
                    }
                }
                for (di, &p) in best_proj.iter().enumerate() {
                    let val = p / eps;
                    if val < worst.0 {
                        worst = (val, x, dirs[di].arg(), eps);
                    }
                }
            }
            worst
        })
        .collect();

    let mut delta_star = f64::INFINITY;
    let mut worst = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for (v, x, dir, eps) in per_sample {
        if v < delta_star {
            delta_star = v;
            worst = (x, dir, eps);
        }
    }
    NcpReport {
        delta_star: if delta_star.is_finite() { delta_star } else { 0.0 },
        worst_point_re: worst.0.re,
        worst_point_im: worst.0.im,
        worst_direction: worst.1,
        worst_scale: worst.2,
        sample_count: x_indices.len(),
        direction_count: directions,
    }
}

/// Certify non-concentration of the marker cloud: for sampled centers `x`,
/// directions `w`, and scales `eps`, the cloud contains `y` within `eps` of
/// `x` whose displacement projects on `w` by at least `delta_star * eps`.
pub fn ncp_certificate(
    disc: &Discretization,
    measure: &CylinderMeasure,
    samples: usize,
    epsilons: &[f64],
    directions: usize,
) -> Result<NcpReport> {
    if epsilons.is_empty() || directions == 0 || samples == 0 {
        return Err(Error::Usage("ncp needs samples, directions, and scales".into()));
    }
    let points: Vec<Complex64> = disc
        .cylinders
        .cylinders()
        .iter()
        .map(|c| c.marker)
        .collect();
    let x_indices = quantile_markers(measure, disc, samples);
    Ok(ncp_core(&points, &x_indices, epsilons, directions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::DEFAULT_CYLINDER_CAP;
    use crate::moebius::Disk;
    use crate::schottky::{estimate_contraction, GeneratorSpec};
    use crate::transfer::{assemble, perron, solve_delta_on, TwistSpec};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference_scheme() -> SchottkyScheme {
        SchottkyScheme::build(&[
            GeneratorSpec::new(
                Disk::new(c(-2.0, 0.0), 0.5).unwrap(),
                Disk::new(c(2.0, 0.0), 0.5).unwrap(),
                0.7,
            ),
            GeneratorSpec::new(
                Disk::new(c(0.0, -2.0), 0.5).unwrap(),
                Disk::new(c(0.0, 2.0), 0.5).unwrap(),
                -0.3,
            ),
        ])
        .unwrap()
    }

    fn setup(depth: usize) -> (SchottkyScheme, Discretization, SpectralData, CylinderMeasure) {
        let scheme = reference_scheme();
        let disc = Discretization::new(&scheme, depth, DEFAULT_CYLINDER_CAP).unwrap();
        let delta = solve_delta_on(&disc, 1e-12).unwrap().delta;
        let spec = perron(&assemble(&disc, TwistSpec::untwisted(delta))).unwrap();
        let measure = equilibrium_measure(&spec, depth);
        (scheme, disc, spec, measure)
    }

    #[test]
    fn depth_one_weights_are_symmetric() {
        let (_, _, spec, measure) = {
            let scheme = reference_scheme();
            let disc = Discretization::new(&scheme, 1, DEFAULT_CYLINDER_CAP).unwrap();
            let delta = solve_delta_on(&disc, 1e-12).unwrap().delta;
            let spec = perron(&assemble(&disc, TwistSpec::untwisted(delta))).unwrap();
            let m = equilibrium_measure(&spec, 1);
            (scheme, disc, spec, m)
        };
        let sum: f64 = measure.weights.iter().sum();
        assert_relative_eq!(sum, 1.0, max_relative = 1e-12);
        // The disk geometry has a 4-fold symmetry, so depth-1 weights match.
        for w in &measure.weights {
            assert_relative_eq!(*w, 0.25, max_relative = 1e-8);
        }
        let _ = spec;
    }

    #[test]
    fn weights_are_child_consistent() {
        let (scheme, d4, _, m4) = setup(4);
        let (_, d5, _, m5) = {
            let disc = Discretization::new(&scheme, 5, DEFAULT_CYLINDER_CAP).unwrap();
            let delta = solve_delta_on(&disc, 1e-12).unwrap().delta;
            let spec = perron(&assemble(&disc, TwistSpec::untwisted(delta))).unwrap();
            let m = equilibrium_measure(&spec, 5);
            (scheme, disc, spec, m)
        };
        let fan = d5.dim() / d4.dim();
        for (i, w) in m4.weights.iter().enumerate() {
            let child_sum: f64 = m5.weights[i * fan..(i + 1) * fan].iter().sum();
            assert!(
                (child_sum - w).abs() <= 1e-8,
                "parent {i}: {w} vs child sum {child_sum}"
            );
        }
        let _ = d4;
    }

    #[test]
    fn rank_one_measure_concentrates_on_fixed_cylinders() {
        let scheme = SchottkyScheme::build(&[GeneratorSpec::new(
            Disk::new(c(-2.0, 0.0), 0.5).unwrap(),
            Disk::new(c(2.0, 0.0), 0.5).unwrap(),
            0.0,
        )])
        .unwrap();
        let disc = Discretization::new(&scheme, 3, DEFAULT_CYLINDER_CAP).unwrap();
        let spec = perron(&assemble(&disc, TwistSpec::untwisted(0.0))).unwrap();
        let m = equilibrium_measure(&spec, 3);
        assert_eq!(m.weights.len(), 2);
        let sum: f64 = m.weights.iter().sum();
        assert_relative_eq!(sum, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn roof_average_bounds_and_stability() {
        let (scheme, d4, _, m4) = setup(4);
        let bounds = estimate_contraction(&scheme, 1024);
        let avg4 = roof_average(&m4, &scheme, &d4);
        assert!(avg4 >= bounds.kappa.ln() && avg4 <= bounds.kappa_1.ln());

        let (_, d6, _, m6) = setup(6);
        let avg6 = roof_average(&m6, &scheme, &d6);
        assert!(
            (avg4 - avg6).abs() / avg6 <= 0.02,
            "roof average drifted: {avg4} vs {avg6}"
        );
    }

    #[test]
    fn equal_roofs_average_to_roof() {
        // Symmetric rank-one scheme: both cylinders carry the same roof.
        let scheme = SchottkyScheme::build(&[GeneratorSpec::new(
            Disk::new(c(-2.0, 0.0), 0.5).unwrap(),
            Disk::new(c(2.0, 0.0), 0.5).unwrap(),
            0.0,
        )])
        .unwrap();
        let disc = Discretization::new(&scheme, 2, DEFAULT_CYLINDER_CAP).unwrap();
        let spec = perron(&assemble(&disc, TwistSpec::untwisted(0.0))).unwrap();
        let m = equilibrium_measure(&spec, 2);
        let taus: Vec<f64> = disc
            .cylinders
            .cylinders()
            .iter()
            .map(|cyl| cylinder_cocycle(&scheme, cyl).tau)
            .collect();
        assert_relative_eq!(taus[0], taus[1], max_relative = 1e-12);
        assert_relative_eq!(
            roof_average(&m, &scheme, &disc),
            taus[0],
            max_relative = 1e-12
        );
    }

    #[test]
    fn doubling_ratio_at_least_one() {
        let (_, disc, _, measure) = setup(5);
        let extent = 4.5;
        let scales: Vec<f64> = (2..8).map(|i| extent / f64::powi(2.0, i)).collect();
        let report = doubling_ratio(&disc, &measure, 16, &scales).unwrap();
        assert!(report.sup_ratio >= 1.0);
        for row in &report.rows {
            assert!(row.mass_2eps >= row.mass_eps);
        }
    }

    #[test]
    fn doubling_atom_below_separation() {
        let (_, disc, _, _) = setup(3);
        // All mass on one cylinder: at scales below the separation both balls
        // see only the atom.
        let mut weights = vec![0.0; disc.dim()];
        weights[0] = 1.0;
        let atom = CylinderMeasure { depth: 3, weights };
        let tiny = disc.cylinders.get(0).radius_bound * 0.01;
        let report = doubling_ratio(&disc, &atom, 4, &[tiny]).unwrap();
        assert_relative_eq!(report.sup_ratio, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn ncp_three_point_and_collinear_clouds() {
        let tri = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)];
        let report = ncp_core(&tri, &[0, 1, 2], &[2.0], 64);
        assert!(report.delta_star > 0.1);
        assert!(report.delta_star <= 1.0);

        let line: Vec<Complex64> = (0..16).map(|i| c(i as f64 * 0.1, 0.0)).collect();
        let report = ncp_core(&line, &[0, 5, 10], &[0.5], 64);
        // Perpendicular direction defeats a collinear cloud.
        assert!(report.delta_star <= 0.05, "delta_star = {}", report.delta_star);
    }

    #[test]
    fn ncp_reference_scheme_positive_and_rotation_invariant() {
        let (_, disc, _, measure) = setup(5);
        let eps = [2.0, 1.0, 0.5];
        let report = ncp_certificate(&disc, &measure, 32, &eps, 64).unwrap();
        assert!(report.delta_star > 0.0);
        assert!(report.delta_star <= 1.0);

        // Rotate the whole configuration rigidly: the certificate moves by
        // at most the direction-grid resolution.
        let phase = Complex64::from_polar(1.0, 0.41);
        let rotate = |d: &Disk| Disk::new(d.center * phase, d.radius).unwrap();
        let specs: Vec<GeneratorSpec> = reference_scheme()
            .generator_specs()
            .iter()
            .map(|s| GeneratorSpec::new(rotate(&s.source), rotate(&s.target), s.twist))
            .collect();
        let rotated = SchottkyScheme::build(&specs).unwrap();
        let disc_r = Discretization::new(&rotated, 5, DEFAULT_CYLINDER_CAP).unwrap();
        let delta = solve_delta_on(&disc_r, 1e-12).unwrap().delta;
        let spec_r = perron(&assemble(&disc_r, TwistSpec::untwisted(delta))).unwrap();
        let measure_r = equilibrium_measure(&spec_r, 5);
        let report_r = ncp_certificate(&disc_r, &measure_r, 32, &eps, 64).unwrap();
        let rel = (report.delta_star - report_r.delta_star).abs() / report.delta_star;
        assert!(rel <= 0.10, "rotation moved delta_star by {rel}");
    }
}
