//! Schottky schemes: paired disks with twist angles, the symbol alphabet with
//! its inverse involution, the admissibility table, and empirical contraction
//! bounds for the inverse branches.
//!
//! Symbols are 1-based: `1..=r` are the generators, `r+1..=2r` their
//! inverses, and `bar(j) = j +/- r`. The disk carried by a symbol is the
//! target disk of its map, so every branch sends the exterior of
//! `disk(bar(j))` strictly inside `disk(j)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moebius::{fold_angle, pairing_map, Disk, MobiusMap, TAU};

/// Input data for one generator: a source disk, a target disk, and the twist
/// angle of the pairing map.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorSpec {
    pub source: Disk,
    pub target: Disk,
    pub twist: f64,
}

impl GeneratorSpec {
    pub fn new(source: Disk, target: Disk, twist: f64) -> Self {
        GeneratorSpec {
            source,
            target,
            twist: fold_angle(twist),
        }
    }
}

/// Required clearance between the closed disks; tangency is rejected.
pub const MIN_DISK_GAP: f64 = 1e-9;
/// Strict one-step contraction margin demanded of every branch.
pub const CONTRACTION_MARGIN: f64 = 1e-6;
/// Boundary samples used for the image-containment audit.
const CONTAINMENT_SAMPLES: usize = 64;

/// A validated Schottky scheme.
#[derive(Debug, Clone)]
pub struct SchottkyScheme {
    rank: usize,
    specs: Vec<GeneratorSpec>,
    maps: Vec<MobiusMap>,
    disks: Vec<Disk>,
    gap: f64,
    warnings: Vec<String>,
}

/// Empirical one-step derivative bounds over the admissible domains.
///
/// `kappa` is the reciprocal of the largest sampled branch derivative,
/// `kappa_1` of the smallest; with strict one-step contraction enforced at
/// validation the front factor `c_0` is one.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContractionBounds {
    pub c_0: f64,
    pub kappa: f64,
    pub kappa_1: f64,
}

impl SchottkyScheme {
    /// Validate disks, build the generator maps, and check every branch
    /// contracts strictly on each of its admissible domains.
    pub fn build(specs: &[GeneratorSpec]) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Geometry("at least one generator is required".into()));
        }
        let rank = specs.len();
        let specs: Vec<GeneratorSpec> = specs
            .iter()
            .map(|s| GeneratorSpec::new(s.source, s.target, s.twist))
            .collect();

        let mut maps = Vec::with_capacity(2 * rank);
        let mut disks = Vec::with_capacity(2 * rank);
        for spec in &specs {
            maps.push(pairing_map(&spec.source, &spec.target, spec.twist));
            disks.push(spec.target);
        }
        for (i, spec) in specs.iter().enumerate() {
            maps.push(maps[i].inverse());
            disks.push(spec.source);
        }

        let gap = check_disjoint(&disks)?;
        let scheme = SchottkyScheme {
            rank,
            specs,
            maps,
            disks,
            gap,
            warnings: Vec::new(),
        };
        scheme.check_contraction()?;
        scheme.check_containment()?;

        let mut scheme = scheme;
        if scheme.is_fuchsian_degenerate() {
            scheme.warnings.push(
                "configuration is Fuchsian-degenerate (collinear centers, twists multiple of pi): \
                 the frame twist is trivial and non-local-integrability fails by design"
                    .into(),
            );
        }
        Ok(scheme)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of symbols, `2r`.
    pub fn symbol_count(&self) -> usize {
        2 * self.rank
    }

    pub fn generator_specs(&self) -> &[GeneratorSpec] {
        &self.specs
    }

    /// Inverse symbol, `bar(j) = j +/- r`.
    pub fn bar(&self, sym: u16) -> u16 {
        debug_assert!(self.symbol_valid(sym));
        if (sym as usize) <= self.rank {
            sym + self.rank as u16
        } else {
            sym - self.rank as u16
        }
    }

    pub fn symbol_valid(&self, sym: u16) -> bool {
        sym >= 1 && (sym as usize) <= self.symbol_count()
    }

    /// Transition table: `j` may be followed by `j2` iff `j2 != bar(j)`.
    pub fn transition(&self, j: u16, j2: u16) -> bool {
        self.bar(j) != j2
    }

    /// The branch map carried by a symbol.
    pub fn map(&self, sym: u16) -> &MobiusMap {
        &self.maps[(sym - 1) as usize]
    }

    /// The disk carried by a symbol (target disk of its map).
    pub fn disk(&self, sym: u16) -> &Disk {
        &self.disks[(sym - 1) as usize]
    }

    pub fn symbols(&self) -> impl Iterator<Item = u16> {
        1..=(self.symbol_count() as u16)
    }

    /// Minimal clearance between boundary circles.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Diameter of the union of the scheme disks; outer scale of the limit set.
    pub fn extent(&self) -> f64 {
        let mut max = 0.0f64;
        for a in &self.disks {
            for b in &self.disks {
                max = max.max((a.center - b.center).norm() + a.radius + b.radius);
            }
        }
        max
    }

    fn symbol_pairs(&self) -> impl Iterator<Item = (u16, u16)> + '_ {
        self.symbols().flat_map(move |j| {
            self.symbols()
                .filter(move |&j2| self.transition(j, j2))
                .map(move |j2| (j, j2))
        })
    }

    fn check_contraction(&self) -> Result<()> {
        for (j, j2) in self.symbol_pairs() {
            let sup = sup_derivative_on_disk(self.map(j), self.disk(j2))?;
            if sup > 1.0 - CONTRACTION_MARGIN {
                return Err(Error::Geometry(format!(
                    "symbol {j} is not strictly contracting on disk of symbol {j2}: \
                     sup |g'| = {sup:.6e} > 1 - {CONTRACTION_MARGIN:e}"
                )));
            }
        }
        Ok(())
    }

    fn check_containment(&self) -> Result<()> {
        for (j, j2) in self.symbol_pairs() {
            let target = self.disk(j);
            let domain = self.disk(j2);
            for i in 0..CONTAINMENT_SAMPLES {
                let z = domain.boundary_point(TAU * (i as f64) / (CONTAINMENT_SAMPLES as f64));
                let w = self.map(j).apply_point(z);
                if (w - target.center).norm() > target.radius + 1e-9 {
                    return Err(Error::Geometry(format!(
                        "image of disk {j2} under symbol {j} escapes disk {j} at sample {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn is_fuchsian_degenerate(&self) -> bool {
        let twists_flat = self
            .specs
            .iter()
            .all(|s| fold_angle(2.0 * s.twist).abs() <= 1e-9);
        if !twists_flat {
            return false;
        }
        let centers: Vec<Complex64> = self.disks.iter().map(|d| d.center).collect();
        let scale = self.extent();
        let Some(&c0) = centers.first() else {
            return true;
        };
        let Some(&c1) = centers.iter().find(|&&c| (c - c0).norm() > 1e-12 * scale) else {
            return true;
        };
        let dir = (c1 - c0) / (c1 - c0).norm();
        centers
            .iter()
            .all(|&c| ((c - c0) / dir).im.abs() <= 1e-9 * scale)
    }
}

/// Minimal pairwise gap between closed disks; errors on overlap or tangency.
fn check_disjoint(disks: &[Disk]) -> Result<f64> {
    let mut gap = f64::INFINITY;
    for i in 0..disks.len() {
        for k in (i + 1)..disks.len() {
            let g = (disks[i].center - disks[k].center).norm() - disks[i].radius - disks[k].radius;
            if g <= MIN_DISK_GAP {
                return Err(Error::Geometry(format!(
                    "disks {} and {} overlap or are tangent (gap {g:.3e})",
                    i + 1,
                    k + 1
                )));
            }
            gap = gap.min(g);
        }
    }
    Ok(gap)
}

/// Exact supremum of `|g'(z)| = |cz + d|^{-2}` over a closed disk.
///
/// Errors if the pole of `g` meets the disk.
pub(crate) fn sup_derivative_on_disk(g: &MobiusMap, disk: &Disk) -> Result<f64> {
    let c_norm = g.c.norm();
    if c_norm == 0.0 {
        let n = g.d.norm();
        return Ok(1.0 / (n * n));
    }
    let dist = (g.c * disk.center + g.d).norm() - c_norm * disk.radius;
    if dist <= 0.0 {
        return Err(Error::Geometry(
            "branch pole meets an admissible domain".into(),
        ));
    }
    Ok(1.0 / (dist * dist))
}

// Deterministic low-discrepancy point sequence in a disk; prefixes are
// nested, so derivative extrema are monotone in the sample count.
fn disk_sample(disk: &Disk, i: usize) -> Complex64 {
    const A1: f64 = 0.754_877_666_246_692_7;
    const A2: f64 = 0.569_840_290_998_053_2;
    let t = (i + 1) as f64;
    let angle = TAU * (t * A1).fract();
    let radius = if i % 4 == 0 {
        disk.radius
    } else {
        disk.radius * (t * A2).fract().sqrt()
    };
    disk.center + Complex64::from_polar(radius, angle)
}

/// Sample branch derivatives over every admissible (symbol, domain) pair.
pub fn estimate_contraction(scheme: &SchottkyScheme, samples_per_domain: usize) -> ContractionBounds {
    let samples = samples_per_domain.max(1);
    let mut max_d = 0.0f64;
    let mut min_d = f64::INFINITY;
    for j in scheme.symbols() {
        for j2 in scheme.symbols() {
            if !scheme.transition(j, j2) {
                continue;
            }
            let map = scheme.map(j);
            let domain = scheme.disk(j2);
            for i in 0..samples {
                let m = map.derivative_modulus(disk_sample(domain, i));
                max_d = max_d.max(m);
                min_d = min_d.min(m);
            }
        }
    }
    ContractionBounds {
        c_0: 1.0,
        kappa: 1.0 / max_d,
        kappa_1: 1.0 / min_d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disk(re: f64, im: f64, r: f64) -> Disk {
        Disk::new(c(re, im), r).unwrap()
    }

    pub(crate) fn reference_specs() -> Vec<GeneratorSpec> {
        vec![
            GeneratorSpec::new(disk(-2.0, 0.0, 0.5), disk(2.0, 0.0, 0.5), 0.7),
            GeneratorSpec::new(disk(0.0, -2.0, 0.5), disk(0.0, 2.0, 0.5), -0.3),
        ]
    }

    #[test]
    fn four_symbol_scheme_builds() {
        let scheme = SchottkyScheme::build(&reference_specs()).unwrap();
        assert_eq!(scheme.symbol_count(), 4);
        assert!(scheme.warnings().is_empty());
        for j in scheme.symbols() {
            let row: usize = scheme
                .symbols()
                .filter(|&j2| scheme.transition(j, j2))
                .count();
            assert_eq!(row, 3);
        }
        assert_eq!(scheme.bar(1), 3);
        assert_eq!(scheme.bar(4), 2);
    }

    #[test]
    fn overlapping_disks_rejected() {
        let specs = vec![GeneratorSpec::new(
            disk(0.0, 0.0, 1.0),
            disk(1.0, 0.0, 1.0),
            0.0,
        )];
        let err = SchottkyScheme::build(&specs).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn rank_one_scheme() {
        let specs = vec![GeneratorSpec::new(disk(-2.0, 0.0, 0.5), disk(2.0, 0.0, 0.5), 0.0)];
        let scheme = SchottkyScheme::build(&specs).unwrap();
        assert_eq!(scheme.symbol_count(), 2);
        for j in scheme.symbols() {
            let row: usize = scheme
                .symbols()
                .filter(|&j2| scheme.transition(j, j2))
                .count();
            assert_eq!(row, 1);
        }
    }

    #[test]
    fn contraction_bound_single_pairing() {
        // |g'(z)| = 1/|z+2|^2 <= 1/9 on D(2,1), so kappa >= 9.
        let specs = vec![GeneratorSpec::new(disk(-2.0, 0.0, 1.0), disk(2.0, 0.0, 1.0), 0.0)];
        let scheme = SchottkyScheme::build(&specs).unwrap();
        let bounds = estimate_contraction(&scheme, 256);
        assert!(bounds.kappa >= 9.0);
        assert!(bounds.kappa > 1.0);
        assert!(bounds.kappa_1 >= bounds.kappa);
        assert_eq!(bounds.c_0, 1.0);
    }

    #[test]
    fn contraction_estimate_monotone_and_near_oracle() {
        let scheme = SchottkyScheme::build(&reference_specs()).unwrap();
        let coarse = estimate_contraction(&scheme, 64);
        let fine = estimate_contraction(&scheme, 640);
        assert!(fine.kappa <= coarse.kappa, "more samples must not increase kappa");
        assert!(fine.kappa_1 >= coarse.kappa_1);
        // Dense-sampling oracle at 10x the fine resolution.
        let oracle = estimate_contraction(&scheme, 6400);
        assert_relative_eq!(fine.kappa, oracle.kappa, max_relative = 2e-2);
        assert_relative_eq!(fine.kappa_1, oracle.kappa_1, max_relative = 2e-2);
        assert!(oracle.kappa <= fine.kappa);
    }

    #[test]
    fn non_contracting_configuration_rejected() {
        // Lopsided radii with a thin gap: the branch derivative exceeds one
        // on the part of the target disk nearest the source.
        let specs = vec![GeneratorSpec::new(
            disk(-0.9, 0.0, 0.2),
            disk(0.9, 0.0, 1.5),
            0.0,
        )];
        let err = SchottkyScheme::build(&specs).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn fuchsian_configuration_warns() {
        let specs = vec![
            GeneratorSpec::new(disk(-9.0, 0.0, 0.3), disk(-3.0, 0.0, 0.3), 0.0),
            GeneratorSpec::new(disk(3.0, 0.0, 0.3), disk(9.0, 0.0, 0.3), std::f64::consts::PI),
        ];
        let scheme = SchottkyScheme::build(&specs).unwrap();
        assert_eq!(scheme.warnings().len(), 1);

        let twisted = SchottkyScheme::build(&reference_specs()).unwrap();
        assert!(twisted.warnings().is_empty());
    }
}
