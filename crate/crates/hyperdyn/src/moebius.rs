//! Exact complex Möbius geometry: normalized 2x2 maps acting on the boundary
//! sphere, disks, conformal derivatives in log-polar form, and loxodromic
//! invariants (translation length and rotation angle).
//!
//! All maps are normalized to determinant one with a deterministic sign
//! convention so traces and compositions are reproducible run to run.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Fold an angle into the half-open interval (-pi, pi].
pub fn fold_angle(x: f64) -> f64 {
    let c = ((x - std::f64::consts::PI) / TAU).ceil();
    let y = x - TAU * c;
    // Guard against rounding pushing us just past the boundary.
    if y <= -std::f64::consts::PI {
        y + TAU
    } else if y > std::f64::consts::PI {
        y - TAU
    } else {
        y
    }
}

/// A point of the Riemann sphere: a finite complex number or the point at
/// infinity, kept as an explicit tag so projective arithmetic stays total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtComplex {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            ExtComplex::Finite(z) => Some(z),
            ExtComplex::Infinity => None,
        }
    }

    pub fn is_infinity(self) -> bool {
        matches!(self, ExtComplex::Infinity)
    }
}

impl From<Complex64> for ExtComplex {
    fn from(z: Complex64) -> Self {
        ExtComplex::Finite(z)
    }
}

/// A closed round disk in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || !center.re.is_finite() || !center.im.is_finite()
        {
            return Err(Error::Geometry(format!(
                "disk must have finite center and positive radius, got center {center}, radius {radius}"
            )));
        }
        Ok(Disk { center, radius })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() <= self.radius
    }

    /// Point on the boundary at the given angle.
    pub fn boundary_point(&self, angle: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, angle)
    }
}

/// Log-polar form of a conformal derivative: `log |g'(z)|` and `arg g'(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPolarDerivative {
    pub logmod: f64,
    /// Folded into (-pi, pi].
    pub arg: f64,
}

/// A Möbius transformation `z -> (az + b) / (cz + d)` with `ad - bc = 1`.
///
/// Normalization fixes the overall sign: the first entry (row-major) whose
/// modulus is non-negligible gets an argument in (-pi/2, pi/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MobiusMap {
    pub fn identity() -> Self {
        MobiusMap {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// Build from raw entries, normalizing the determinant to one.
    pub fn from_entries(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm());
        if !det.is_finite() || det.norm() <= 1e-14 * scale * scale {
            return Err(Error::Geometry(format!(
                "matrix is singular or non-finite (det = {det})"
            )));
        }
        let s = det.sqrt();
        let mut m = MobiusMap {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        };
        m.fix_sign();
        Ok(m)
    }

    /// Deterministic sign convention: first non-negligible entry in row-major
    /// order gets argument in (-pi/2, pi/2].
    fn fix_sign(&mut self) {
        let entries = [self.a, self.b, self.c, self.d];
        let max = entries.iter().map(|e| e.norm()).fold(0.0, f64::max);
        for e in entries {
            if e.norm() > 1e-12 * max {
                let arg = e.arg();
                if arg <= -std::f64::consts::FRAC_PI_2 || arg > std::f64::consts::FRAC_PI_2 {
                    self.a = -self.a;
                    self.b = -self.b;
                    self.c = -self.c;
                    self.d = -self.d;
                }
                return;
            }
        }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// Matrix product `self * rhs`, acting as `z -> self(rhs(z))`.
    ///
    /// No determinant renormalization: the product of unimodular matrices is
    /// unimodular up to entry-level rounding, and for long loxodromic words
    /// the determinant formula itself cancels catastrophically while the
    /// entries (and traces) stay accurate.
    pub fn compose(&self, rhs: &MobiusMap) -> MobiusMap {
        let mut m = MobiusMap {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        };
        m.fix_sign();
        m
    }

    pub fn inverse(&self) -> MobiusMap {
        let mut m = MobiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        };
        m.fix_sign();
        m
    }

    /// Apply to a point of the sphere; total via projective arithmetic.
    pub fn apply(&self, z: ExtComplex) -> ExtComplex {
        let (num, den) = match z {
            ExtComplex::Finite(z) => (self.a * z + self.b, self.c * z + self.d),
            ExtComplex::Infinity => (self.a, self.c),
        };
        if den.norm() == 0.0 {
            ExtComplex::Infinity
        } else {
            ExtComplex::Finite(num / den)
        }
    }

    /// Apply to a finite point known to stay finite (pole elsewhere).
    pub fn apply_point(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// `g'(z) = 1/(cz+d)^2` in log-polar form.
    pub fn derivative_log_polar(&self, z: Complex64) -> Result<LogPolarDerivative> {
        let w = self.c * z + self.d;
        let n = w.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Geometry(format!(
                "derivative evaluated at the pole z = {z}"
            )));
        }
        Ok(LogPolarDerivative {
            logmod: -2.0 * n.ln(),
            arg: fold_angle(-2.0 * w.arg()),
        })
    }

    /// `|g'(z)|` directly; convenience for sampling loops.
    pub fn derivative_modulus(&self, z: Complex64) -> f64 {
        let w = self.c * z + self.d;
        1.0 / (w.norm() * w.norm())
    }
}

/// Generator pairing two disks: maps the exterior of `src` onto the interior
/// of `tgt`, `g(z) = c_tgt + e^{i twist} r_src r_tgt / (z - c_src)`.
pub fn pairing_map(src: &Disk, tgt: &Disk, twist: f64) -> MobiusMap {
    let phase = Complex64::from_polar(src.radius * tgt.radius, twist);
    let a = tgt.center;
    let b = phase - tgt.center * src.center;
    let c = Complex64::new(1.0, 0.0);
    let d = -src.center;
    MobiusMap::from_entries(a, b, c, d).expect("pairing map of valid disks is invertible")
}

/// Length, holonomy angle, and eigenvalue of a loxodromic map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoxodromicData {
    /// Translation length, `2 log |lambda|`.
    pub length: f64,
    /// Rotation angle `2 arg lambda`, folded into (-pi, pi].
    pub holonomy: f64,
    /// Eigenvalue with `|lambda| > 1`.
    pub eigenvalue: Complex64,
}

/// Margin over `|lambda| = 1` below which a map is rejected as
/// elliptic/parabolic.
pub const LOXODROMIC_MARGIN: f64 = 1e-9;

/// Extract `(length, holonomy)` from a normalized map.
///
/// Errors if the map is not loxodromic (`|lambda| <= 1 + margin`).
pub fn loxodromic_data(g: &MobiusMap) -> Result<LoxodromicData> {
    let t = g.trace();
    let disc = (t * t - Complex64::new(4.0, 0.0)).sqrt();
    // Pick the root of lambda^2 - t lambda + 1 with the larger modulus,
    // avoiding the cancellation-prone branch.
    let r1 = (t + disc) / 2.0;
    let r2 = (t - disc) / 2.0;
    let lambda = if r1.norm() >= r2.norm() { r1 } else { r2 };
    if lambda.norm() <= 1.0 + LOXODROMIC_MARGIN {
        return Err(Error::Geometry(format!(
            "map is not loxodromic (trace {t}, |lambda| = {})",
            lambda.norm()
        )));
    }
    Ok(LoxodromicData {
        length: 2.0 * lambda.norm().ln(),
        holonomy: fold_angle(2.0 * lambda.arg()),
        eigenvalue: lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn translation(w: Complex64) -> MobiusMap {
        MobiusMap::from_entries(c(1.0, 0.0), w, c(0.0, 0.0), c(1.0, 0.0)).unwrap()
    }

    #[test]
    fn determinant_normalized() {
        let g = MobiusMap::from_entries(c(3.0, 1.0), c(0.5, -2.0), c(1.0, 1.0), c(2.0, 0.0)).unwrap();
        assert!((g.det() - c(1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn identity_composition() {
        let g = pairing_map(
            &Disk::new(c(-2.0, 0.0), 1.0).unwrap(),
            &Disk::new(c(2.0, 0.0), 1.0).unwrap(),
            0.7,
        );
        let id = MobiusMap::identity();
        let left = id.compose(&g);
        assert!((left.a - g.a).norm() <= 1e-12 && (left.d - g.d).norm() <= 1e-12);
        let right = g.compose(&g.inverse());
        let dev_plus = (right.a - id.a).norm() + (right.d - id.d).norm() + right.b.norm() + right.c.norm();
        assert!(dev_plus <= 1e-10, "g g^-1 = id up to sign, got deviation {dev_plus}");
    }

    #[test]
    fn translations_add() {
        let g = translation(c(1.0, 0.0)).compose(&translation(c(2.0, 0.0)));
        let z = g.apply(c(0.0, 0.0).into()).finite().unwrap();
        assert_relative_eq!(z.re, 3.0, max_relative = 1e-12);
        assert_relative_eq!(z.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn apply_identity_and_pairing() {
        let id = MobiusMap::identity();
        assert_eq!(id.apply(c(1.0, 2.0).into()).finite().unwrap(), c(1.0, 2.0));

        // D(-2,1) -> D(2,1), twist 0: g(z) = 2 + 1/(z+2).
        let g = pairing_map(
            &Disk::new(c(-2.0, 0.0), 1.0).unwrap(),
            &Disk::new(c(2.0, 0.0), 1.0).unwrap(),
            0.0,
        );
        let at_inf = g.apply(ExtComplex::Infinity).finite().unwrap();
        assert_relative_eq!(at_inf.re, 2.0, max_relative = 1e-12);
        assert_relative_eq!(at_inf.im, 0.0, epsilon = 1e-12);
        let at_zero = g.apply(c(0.0, 0.0).into()).finite().unwrap();
        assert_relative_eq!(at_zero.re, 2.5, max_relative = 1e-12);
    }

    #[test]
    fn apply_pole_goes_to_infinity() {
        let g = pairing_map(
            &Disk::new(c(-2.0, 0.0), 1.0).unwrap(),
            &Disk::new(c(2.0, 0.0), 1.0).unwrap(),
            0.0,
        );
        // Pole of g is the source center.
        assert!(g.apply(c(-2.0, 0.0).into()).is_infinity());
    }

    #[test]
    fn derivative_log_polar_cases() {
        let id = MobiusMap::identity();
        let d = id.derivative_log_polar(c(3.0, -1.0)).unwrap();
        assert_eq!(d.logmod, 0.0);
        assert_eq!(d.arg, 0.0);

        // g(z) = 2 + e^{i pi/2}/(z+2): g'(0) = -i/4.
        let g = pairing_map(
            &Disk::new(c(-2.0, 0.0), 1.0).unwrap(),
            &Disk::new(c(2.0, 0.0), 1.0).unwrap(),
            std::f64::consts::FRAC_PI_2,
        );
        let d = g.derivative_log_polar(c(0.0, 0.0)).unwrap();
        assert_relative_eq!(d.logmod, -(4.0f64.ln()), max_relative = 1e-12);
        assert_relative_eq!(d.arg, -std::f64::consts::FRAC_PI_2, max_relative = 1e-12);

        // Dilation z -> 4z at z = 1: derivative 4.
        let dil =
            MobiusMap::from_entries(c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let d = dil.derivative_log_polar(c(1.0, 0.0)).unwrap();
        assert_relative_eq!(d.logmod, 4.0f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(d.arg, 0.0, epsilon = 1e-12);

        // Pole rejected.
        assert!(g.derivative_log_polar(c(-2.0, 0.0)).is_err());
    }

    #[test]
    fn pairing_maps_boundary_to_boundary() {
        let src = Disk::new(c(-2.0, 0.0), 1.0).unwrap();
        let tgt = Disk::new(c(2.0, 1.0), 0.5).unwrap();
        let g = pairing_map(&src, &tgt, 1.1);
        for i in 0..32 {
            let angle = TAU * (i as f64) / 32.0;
            let z = g.apply_point(src.boundary_point(angle));
            assert!(
                ((z - tgt.center).norm() - tgt.radius).abs() <= 1e-10,
                "boundary image off target boundary"
            );
        }
    }

    #[test]
    fn pairing_contracts_exterior_points() {
        // twist pi/2, unit radii, centers 4 apart; oracle |g'(z)| = r r'/|z-c|^2.
        let src = Disk::new(c(-2.0, 0.0), 1.0).unwrap();
        let tgt = Disk::new(c(2.0, 0.0), 1.0).unwrap();
        let g = pairing_map(&src, &tgt, std::f64::consts::FRAC_PI_2);
        for &z in &[c(0.0, 0.0), c(1.5, 1.0), c(2.0, -2.0), c(-0.3, 0.9)] {
            let d = g.derivative_log_polar(z).unwrap();
            let oracle = (src.radius * tgt.radius) / (z - src.center).norm_sqr();
            assert_relative_eq!(d.logmod.exp(), oracle, max_relative = 1e-10);
            if (z - src.center).norm() > 1.0 {
                assert!(d.logmod < 0.0, "exterior point must contract");
            }
        }
    }

    #[test]
    fn loxodromic_basic_traces() {
        // trace = 2 cosh(1): lambda = e, length 2, holonomy 0.
        let t = 2.0 * 1.0f64.cosh();
        let g = MobiusMap::from_entries(
            Complex64::from_polar(1.0f64.exp(), 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            Complex64::from_polar((-1.0f64).exp(), 0.0),
        )
        .unwrap();
        assert_relative_eq!(g.trace().re, t, max_relative = 1e-12);
        let lox = loxodromic_data(&g).unwrap();
        assert_relative_eq!(lox.length, 2.0, max_relative = 1e-12);
        assert_relative_eq!(lox.holonomy, 0.0, epsilon = 1e-12);

        // trace = 2i sinh(1): lambda = i e, length 2, holonomy pi.
        let g = MobiusMap::from_entries(
            c(0.0, 1.0f64.exp()),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, -(-1.0f64).exp()),
        )
        .unwrap();
        let lox = loxodromic_data(&g).unwrap();
        assert_relative_eq!(lox.length, 2.0, max_relative = 1e-12);
        assert_relative_eq!(lox.holonomy, std::f64::consts::PI, max_relative = 1e-12);
    }

    #[test]
    fn parabolic_rejected() {
        let g = translation(c(1.0, 0.0));
        assert!(loxodromic_data(&g).is_err());
    }

    #[test]
    fn loxodromic_invariants() {
        let g = pairing_map(
            &Disk::new(c(-2.0, 0.0), 1.0).unwrap(),
            &Disk::new(c(2.0, 0.0), 1.0).unwrap(),
            0.7,
        );
        let lox = loxodromic_data(&g).unwrap();
        let recon = lox.eigenvalue + 1.0 / lox.eigenvalue;
        assert!((recon - g.trace()).norm() <= 1e-9 || (recon + g.trace()).norm() <= 1e-9);
        assert_relative_eq!(lox.length, 2.0 * lox.eigenvalue.norm().ln(), max_relative = 1e-12);
    }

    #[test]
    fn fold_angle_edges() {
        assert_eq!(fold_angle(std::f64::consts::PI), std::f64::consts::PI);
        assert_eq!(fold_angle(-std::f64::consts::PI), std::f64::consts::PI);
        assert_relative_eq!(fold_angle(3.0 * std::f64::consts::PI), std::f64::consts::PI);
        assert_eq!(fold_angle(0.0), 0.0);
    }

    proptest! {
        #[test]
        fn chain_rule_inverse(re in -3.0f64..3.0, im in -3.0f64..3.0,
                              tw in -3.0f64..3.0) {
            let src = Disk::new(c(-2.0, 0.0), 1.0).unwrap();
            let tgt = Disk::new(c(2.0, 0.0), 1.0).unwrap();
            let g = pairing_map(&src, &tgt, tw);
            let z = c(re, im);
            prop_assume!((g.c * z + g.d).norm() > 1e-6);
            let gz = g.apply_point(z);
            let gi = g.inverse();
            prop_assume!((gi.c * gz + gi.d).norm() > 1e-6);
            let fwd = g.derivative_log_polar(z).unwrap();
            let back = gi.derivative_log_polar(gz).unwrap();
            prop_assert!((fwd.logmod + back.logmod).abs() <= 1e-9);
        }

        #[test]
        fn conjugation_invariance(tw in -3.0f64..3.0,
                                  hre in -1.0f64..1.0, him in -1.0f64..1.0) {
            let g = pairing_map(
                &Disk::new(c(-2.0, 0.0), 1.0).unwrap(),
                &Disk::new(c(2.0, 0.0), 1.0).unwrap(),
                tw,
            );
            let h = MobiusMap::from_entries(c(1.0, 0.2), c(hre, him), c(0.1, -0.3), c(1.0, 0.0));
            prop_assume!(h.is_ok());
            let h = h.unwrap();
            let conj = h.compose(&g).compose(&h.inverse());
            let a = loxodromic_data(&g).unwrap();
            let b = loxodromic_data(&conj).unwrap();
            prop_assert!((a.length - b.length).abs() <= 1e-8);
            prop_assert!(fold_angle(a.holonomy - b.holonomy).abs() <= 1e-8);
        }

        #[test]
        fn composition_associative_up_to_sign(t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
            let f = pairing_map(
                &Disk::new(c(-2.0, 0.0), 1.0).unwrap(),
                &Disk::new(c(2.0, 0.0), 1.0).unwrap(),
                t1,
            );
            let g = pairing_map(
                &Disk::new(c(0.0, -2.0), 0.7).unwrap(),
                &Disk::new(c(0.0, 2.0), 0.7).unwrap(),
                t2,
            );
            let h = f.inverse();
            let lhs = f.compose(&g).compose(&h);
            let rhs = f.compose(&g.compose(&h));
            let dp = (lhs.a - rhs.a).norm() + (lhs.b - rhs.b).norm()
                + (lhs.c - rhs.c).norm() + (lhs.d - rhs.d).norm();
            let dm = (lhs.a + rhs.a).norm() + (lhs.b + rhs.b).norm()
                + (lhs.c + rhs.c).norm() + (lhs.d + rhs.d).norm();
            prop_assert!(dp.min(dm) <= 1e-10);
        }

        #[test]
        fn arg_always_folded(re in -5.0f64..5.0, im in -5.0f64..5.0, tw in -6.0f64..6.0) {
            let g = pairing_map(
                &Disk::new(c(-2.0, 0.0), 1.0).unwrap(),
                &Disk::new(c(2.0, 0.0), 1.0).unwrap(),
                tw,
            );
            let z = c(re, im);
            prop_assume!((g.c * z + g.d).norm() > 1e-6);
            let d = g.derivative_log_polar(z).unwrap();
            prop_assert!(d.arg > -std::f64::consts::PI && d.arg <= std::f64::consts::PI);
        }
    }
}
