//! Symbolic dynamics over a Schottky scheme: admissible words, cylinder
//! partitions with marker points and conservative radius bounds, inverse
//! branch application, and the two cocycles of the boundary map — the roof
//! `tau = -log |branch'|` and the frame rotation `theta = -arg branch'`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moebius::fold_angle;
use crate::schottky::{sup_derivative_on_disk, SchottkyScheme};

/// Default cap on the number of cylinders materialized at once.
pub const DEFAULT_CYLINDER_CAP: usize = 5_000_000;

/// An admissible word over the symbol alphabet `1..=2r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(Vec<u16>);

impl Word {
    pub fn new(symbols: Vec<u16>, scheme: &SchottkyScheme) -> Result<Self> {
        for &s in &symbols {
            if !scheme.symbol_valid(s) {
                return Err(Error::Geometry(format!("symbol {s} out of range")));
            }
        }
        for pair in symbols.windows(2) {
            if !scheme.transition(pair[0], pair[1]) {
                return Err(Error::Geometry(format!(
                    "inadmissible pair ({}, {}): a symbol may not be followed by its inverse",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Word(symbols))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[u16] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

/// One cell of the depth-`d` partition: an admissible word, a designated
/// interior marker point, and a conservative bound on the cell diameter.
#[derive(Debug, Clone)]
pub struct Cylinder {
    symbols: Vec<u16>,
    pub marker: Complex64,
    /// Upper bound on the diameter of the cylinder's disk image; the cell is
    /// contained in the disk of this diameter centered at the marker.
    pub radius_bound: f64,
}

impl Cylinder {
    pub fn symbols(&self) -> &[u16] {
        &self.symbols
    }

    pub fn first_symbol(&self) -> u16 {
        self.symbols[0]
    }

    pub fn last_symbol(&self) -> u16 {
        *self.symbols.last().unwrap()
    }
}

/// The full depth-`d` cylinder partition in lexicographic word order.
#[derive(Debug, Clone)]
pub struct CylinderSet {
    depth: usize,
    symbol_count: usize,
    cylinders: Vec<Cylinder>,
}

/// Number of admissible words of the given depth, `2r (2r-1)^(d-1)`,
/// saturating on overflow.
pub fn cylinder_count(scheme: &SchottkyScheme, depth: usize) -> u128 {
    let n = scheme.symbol_count() as u128;
    let mut count = n;
    for _ in 1..depth {
        count = count.saturating_mul(n - 1);
    }
    count
}

/// Build the depth-`d` partition.
///
/// Markers follow the shift recursion: the marker of `j.w` is the image of
/// the marker of `w` under the branch of `j`; at depth one the markers are
/// the disk centers. Radius bounds multiply the exact per-step derivative
/// supremum over the current bounding disk, so they stay conservative.
pub fn enumerate_cylinders(
    scheme: &SchottkyScheme,
    depth: usize,
    cap: usize,
) -> Result<CylinderSet> {
    if depth == 0 {
        return Err(Error::Usage("cylinder depth must be at least 1".into()));
    }
    let count = cylinder_count(scheme, depth);
    if count > cap as u128 {
        return Err(Error::Budget(format!(
            "depth {depth} needs {count} cylinders, cap is {cap}"
        )));
    }

    let mut level: Vec<Cylinder> = scheme
        .symbols()
        .map(|j| {
            let disk = scheme.disk(j);
            Cylinder {
                symbols: vec![j],
                marker: disk.center,
                radius_bound: 2.0 * disk.radius,
            }
        })
        .collect();

    for _ in 1..depth {
        let mut next = Vec::with_capacity(level.len() * (scheme.symbol_count() - 1));
        for j in scheme.symbols() {
            let map = scheme.map(j);
            for cyl in &level {
                if !scheme.transition(j, cyl.first_symbol()) {
                    continue;
                }
                let enclosure = crate::moebius::Disk {
                    center: cyl.marker,
                    radius: cyl.radius_bound / 2.0,
                };
                let sup = sup_derivative_on_disk(map, &enclosure)?;
                let mut symbols = Vec::with_capacity(cyl.symbols.len() + 1);
                symbols.push(j);
                symbols.extend_from_slice(&cyl.symbols);
                next.push(Cylinder {
                    symbols,
                    marker: map.apply_point(cyl.marker),
                    radius_bound: cyl.radius_bound * sup,
                });
            }
        }
        level = next;
    }

    Ok(CylinderSet {
        depth,
        symbol_count: scheme.symbol_count(),
        cylinders: level,
    })
}

impl CylinderSet {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.cylinders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cylinders.is_empty()
    }

    pub fn cylinders(&self) -> &[Cylinder] {
        &self.cylinders
    }

    pub fn get(&self, idx: usize) -> &Cylinder {
        &self.cylinders[idx]
    }

    /// Index of an admissible word in lexicographic order, O(depth).
    pub fn index_of(&self, symbols: &[u16]) -> usize {
        debug_assert_eq!(symbols.len(), self.depth);
        let n = self.symbol_count;
        let mut idx = (symbols[0] as usize - 1) * (n - 1).pow((self.depth - 1) as u32);
        for i in 1..self.depth {
            let prev = symbols[i - 1];
            let bar = bar_symbol(prev, n);
            let mut rank = symbols[i] as usize - 1;
            if symbols[i] > bar {
                rank -= 1;
            }
            idx += rank * (n - 1).pow((self.depth - 1 - i) as u32);
        }
        idx
    }
}

fn bar_symbol(sym: u16, symbol_count: usize) -> u16 {
    let r = (symbol_count / 2) as u16;
    if sym <= r {
        sym + r
    } else {
        sym - r
    }
}

/// One-step cocycle values: roof increment and frame rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocycleValue {
    pub tau: f64,
    /// Folded into (-pi, pi].
    pub theta: f64,
}

/// Cocycle of the branch `y = branch_j(x)`: `tau = -log |g_j'(x)|`,
/// `theta = -arg g_j'(x)`.
///
/// Errors when `x` lies in the disk of `bar(j)`, where the branch is
/// inadmissible.
pub fn one_step_cocycle(scheme: &SchottkyScheme, j: u16, x: Complex64) -> Result<CocycleValue> {
    if scheme.disk(scheme.bar(j)).contains(x) {
        return Err(Error::Geometry(format!(
            "point {x} lies in the forbidden disk of symbol {}",
            scheme.bar(j)
        )));
    }
    let d = scheme.map(j).derivative_log_polar(x)?;
    Ok(CocycleValue {
        tau: -d.logmod,
        theta: fold_angle(-d.arg),
    })
}

/// Birkhoff sum along the inverse-branch orbit of a word, with the rotation
/// kept unfolded (useful for finite differencing).
pub fn birkhoff_raw(scheme: &SchottkyScheme, word: &Word, x: Complex64) -> Result<(f64, f64)> {
    let mut tau = 0.0;
    let mut theta = 0.0;
    let mut y = x;
    for &j in word.symbols().iter().rev() {
        let step = one_step_cocycle(scheme, j, y)?;
        tau += step.tau;
        theta += step.theta;
        y = scheme.map(j).apply_point(y);
    }
    Ok((tau, theta))
}

/// Birkhoff sum of the `(tau, theta)` cocycle over a word, rotation folded.
pub fn birkhoff(scheme: &SchottkyScheme, word: &Word, x: Complex64) -> Result<CocycleValue> {
    let (tau, theta) = birkhoff_raw(scheme, word, x)?;
    Ok(CocycleValue {
        tau,
        theta: fold_angle(theta),
    })
}

/// Apply the composed inverse branch of a word: `g_{j_1} o ... o g_{j_n}(x)`.
pub fn branch_apply(scheme: &SchottkyScheme, word: &Word, x: Complex64) -> Result<Complex64> {
    let mut y = x;
    for &j in word.symbols().iter().rev() {
        if scheme.disk(scheme.bar(j)).contains(y) {
            return Err(Error::Geometry(format!(
                "inadmissible branch application: intermediate point in disk of {}",
                scheme.bar(j)
            )));
        }
        y = scheme.map(j).apply_point(y);
    }
    Ok(y)
}

/// Roof and rotation of a cylinder, evaluated by pulling the marker back one
/// shift step: for `w = (j_1 ...)` this is the one-step cocycle of `j_1` at
/// `g_{j_1}^{-1}(marker)`.
pub fn cylinder_cocycle(scheme: &SchottkyScheme, cyl: &Cylinder) -> CocycleValue {
    let j = cyl.first_symbol();
    let x = scheme.map(scheme.bar(j)).apply_point(cyl.marker);
    one_step_cocycle(scheme, j, x).expect("marker pullback is always admissible")
}
