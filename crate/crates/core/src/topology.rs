//! Atom lattices: the three offset-row families, geometry helpers and the
//! radii that govern interaction and blockade.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{at_most, clearly_less, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("invalid lattice: {0}")]
    InvalidSpec(String),
    #[error("every lattice site is occupied")]
    AllOccupied,
    #[error("unknown topology `{0}` (expected square, s-triangle or t-triangle)")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    Square,
    STriangle,
    TTriangle,
    Custom,
}

impl LatticeKind {
    /// The three shipped topologies, in tie-break order.
    pub const STANDARD: [LatticeKind; 3] =
        [LatticeKind::Square, LatticeKind::STriangle, LatticeKind::TTriangle];

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Square => "square",
            LatticeKind::STriangle => "s-triangle",
            LatticeKind::TTriangle => "t-triangle",
            LatticeKind::Custom => "custom",
        }
    }

    /// Position in [`LatticeKind::STANDARD`], if any.
    pub fn standard_index(self) -> Option<usize> {
        LatticeKind::STANDARD.iter().position(|&k| k == self)
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LatticeKind {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "square" => Ok(LatticeKind::Square),
            "s-triangle" | "striangle" => Ok(LatticeKind::STriangle),
            "t-triangle" | "ttriangle" => Ok(LatticeKind::TTriangle),
            "custom" => Ok(LatticeKind::Custom),
            _ => Err(TopologyError::UnknownKind(s.to_string())),
        }
    }
}

/// Parametric offset-row lattice. Odd rows are shifted right by `row_offset`.
/// `layers > 1` stacks copies `dz` apart along z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LatticeSpec<T> {
    pub kind: LatticeKind,
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "one_layer")]
    pub layers: usize,
    pub dx: T,
    pub dy: T,
    #[serde(default = "T::one")]
    pub dz: T,
    pub row_offset: T,
}

fn one_layer() -> usize {
    1
}

impl<T: Scalar> LatticeSpec<T> {
    /// Default geometry of a shipped topology: unit horizontal pitch, row pitch
    /// 1 (square), sqrt(3)/2 (s-triangle) or 1/2 (t-triangle), half-pitch offset
    /// on the triangular ones.
    pub fn standard(kind: LatticeKind, rows: usize, cols: usize) -> Self {
        let half = T::of(0.5);
        let (dy, row_offset) = match kind {
            LatticeKind::Square | LatticeKind::Custom => (T::one(), T::zero()),
            LatticeKind::STriangle => (T::of(3.0).sqrt() * half, half),
            LatticeKind::TTriangle => (half, half),
        };
        LatticeSpec {
            kind,
            rows,
            cols,
            layers: 1,
            dx: T::one(),
            dy,
            dz: T::one(),
            row_offset,
        }
    }

    pub fn num_sites(&self) -> usize {
        self.rows * self.cols * self.layers
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let bad = |m: &str| Err(TopologyError::InvalidSpec(m.to_string()));
        if self.rows == 0 || self.cols == 0 || self.layers == 0 {
            return bad("rows, cols and layers must be positive");
        }
        if !(self.dx > T::zero() && self.dy > T::zero() && self.dz > T::zero()) {
            return bad("pitches must be positive");
        }
        if !(self.row_offset >= T::zero() && self.row_offset < self.dx) {
            return bad("row_offset must lie in [0, dx)");
        }
        Ok(())
    }
}

/// Smallest near-square shape (`cols >= rows`, `cols - rows <= 1`) holding
/// `width` sites, with the default geometry of `kind`.
pub fn min_lattice_for<T: Scalar>(width: usize, kind: LatticeKind) -> LatticeSpec<T> {
    let width = width.max(1);
    let mut rows = 1;
    while rows * rows < width && rows * (rows + 1) < width {
        rows += 1;
    }
    let cols = if rows * rows >= width { rows } else { rows + 1 };
    LatticeSpec::standard(kind, rows, cols)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Site<T> {
    pub index: usize,
    pub row: usize,
    pub col: usize,
    pub layer: usize,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Site<T> {
    pub fn distance_sq(&self, other: &Site<T>) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    pub fn distance(&self, other: &Site<T>) -> T {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq_to(&self, point: [T; 3]) -> T {
        let dx = self.x - point[0];
        let dy = self.y - point[1];
        let dz = self.z - point[2];
        dx * dx + dy * dy + dz * dz
    }
}

/// Interaction and blockade radii, in the lattice's length units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RadiusConfig<T> {
    /// Two-qubit interaction radius (also the reach of one SWAP).
    pub r2: T,
    /// Three-qubit interaction radius.
    pub r3: T,
    /// Blockade radius: operand sites closer than this conflict.
    pub rb: T,
}

impl<T: Scalar> RadiusConfig<T> {
    /// `r2 = 1.05`, `r3 = 1.55`, `rb = 0.9`, scaled by the horizontal pitch.
    pub fn default_for(spec: &LatticeSpec<T>) -> Self {
        RadiusConfig {
            r2: T::of(1.05) * spec.dx,
            r3: T::of(1.55) * spec.dx,
            rb: T::of(0.9) * spec.dx,
        }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if !(self.r2 > T::zero() && self.r3 > T::zero() && self.rb > T::zero()) {
            return Err(TopologyError::InvalidSpec("radii must be positive".into()));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for RadiusConfig<T> {
    fn default() -> Self {
        RadiusConfig {
            r2: T::of(1.05),
            r3: T::of(1.55),
            rb: T::of(0.9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Lattice<T> {
    spec: LatticeSpec<T>,
    sites: Vec<Site<T>>,
}

/// Lays out `layers x rows x cols` sites, row-major within each layer.
pub fn build_lattice<T: Scalar>(spec: &LatticeSpec<T>) -> Result<Lattice<T>, TopologyError> {
    spec.validate()?;
    let mut sites = Vec::with_capacity(spec.num_sites());
    for layer in 0..spec.layers {
        for row in 0..spec.rows {
            let shift = if row % 2 == 1 { spec.row_offset } else { T::zero() };
            for col in 0..spec.cols {
                sites.push(Site {
                    index: sites.len(),
                    row,
                    col,
                    layer,
                    x: T::of_usize(col) * spec.dx + shift,
                    y: T::of_usize(row) * spec.dy,
                    z: T::of_usize(layer) * spec.dz,
                });
            }
        }
    }
    Ok(Lattice {
        spec: spec.clone(),
        sites,
    })
}

impl<T: Scalar> Lattice<T> {
    pub fn spec(&self) -> &LatticeSpec<T> {
        &self.spec
    }

    pub fn kind(&self) -> LatticeKind {
        self.spec.kind
    }

    pub fn sites(&self) -> &[Site<T>] {
        &self.sites
    }

    pub fn site(&self, index: usize) -> &Site<T> {
        &self.sites[index]
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn distance(&self, a: usize, b: usize) -> T {
        self.sites[a].distance(&self.sites[b])
    }

    pub fn within(&self, a: usize, b: usize, radius: T) -> bool {
        at_most(self.distance(a, b), radius)
    }

    /// Sum of squared distances from `site` to every lattice point.
    pub fn spread(&self, site: usize) -> T {
        let s = &self.sites[site];
        self.sites.iter().map(|p| s.distance_sq(p)).sum()
    }

    /// Unoccupied site minimising [`Lattice::spread`]; ties go to the lowest
    /// index. `occupied[i]` marks site `i`; missing entries count as free.
    pub fn center_site(&self, occupied: &[bool]) -> Result<usize, TopologyError> {
        let mut best: Option<(usize, T)> = None;
        for site in self.free_sites(occupied) {
            let value = self.spread(site);
            if best.is_none_or(|(_, b)| clearly_less(value, b)) {
                best = Some((site, value));
            }
        }
        best.map(|(s, _)| s).ok_or(TopologyError::AllOccupied)
    }

    /// Unoccupied site closest to `from`; ties go to the lowest index.
    pub fn nearest_free(&self, from: usize, occupied: &[bool]) -> Result<usize, TopologyError> {
        let origin = &self.sites[from];
        let mut best: Option<(usize, T)> = None;
        for site in self.free_sites(occupied) {
            if site == from {
                continue;
            }
            let d = origin.distance_sq(&self.sites[site]);
            if best.is_none_or(|(_, b)| clearly_less(d, b)) {
                best = Some((site, d));
            }
        }
        best.map(|(s, _)| s).ok_or(TopologyError::AllOccupied)
    }

    /// Smallest distance between two distinct sites.
    pub fn nearest_neighbor_spacing(&self) -> T {
        let mut best = T::infinity();
        for (i, a) in self.sites.iter().enumerate() {
            for b in &self.sites[i + 1..] {
                best = best.min(a.distance(b));
            }
        }
        best
    }

    /// Sites within `radius` of `site`, excluding itself, ascending.
    pub fn neighbors_within(&self, site: usize, radius: T) -> Vec<usize> {
        (0..self.sites.len())
            .filter(|&s| s != site && self.within(site, s, radius))
            .collect()
    }

    fn free_sites<'a>(&'a self, occupied: &'a [bool]) -> impl Iterator<Item = usize> + 'a {
        (0..self.sites.len()).filter(move |&i| !occupied.get(i).copied().unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(kind: LatticeKind, rows: usize, cols: usize) -> Lattice<f64> {
        build_lattice(&LatticeSpec::standard(kind, rows, cols)).unwrap()
    }

    fn index(l: &Lattice<f64>, row: usize, col: usize) -> usize {
        row * l.spec().cols + col
    }

    #[test]
    fn square_nearest_neighbours() {
        let l = lattice(LatticeKind::Square, 3, 3);
        assert_eq!(l.len(), 9);
        assert_eq!(l.nearest_neighbor_spacing(), 1.0);
        assert_eq!(l.distance(index(&l, 0, 0), index(&l, 0, 1)), 1.0);
        assert_eq!(l.distance(index(&l, 0, 0), index(&l, 1, 0)), 1.0);
    }

    #[test]
    fn triangle_row_distances() {
        let s = lattice(LatticeKind::STriangle, 2, 2);
        assert!((s.distance(0, 2) - 1.0).abs() < 1e-12);
        assert!((s.nearest_neighbor_spacing() - 1.0).abs() < 1e-12);
        let t = lattice(LatticeKind::TTriangle, 2, 2);
        assert!((t.distance(0, 2) - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn center_examples() {
        let l = lattice(LatticeKind::Square, 3, 3);
        assert_eq!(l.center_site(&[]).unwrap(), index(&l, 1, 1));
        let l = lattice(LatticeKind::Square, 2, 2);
        assert_eq!(l.center_site(&[]).unwrap(), 0);
        assert_eq!(l.center_site(&[true]).unwrap(), 1);
        assert_eq!(l.center_site(&[true; 4]), Err(TopologyError::AllOccupied));
    }

    #[test]
    fn min_lattice_shapes() {
        let shape = |w| {
            let s: LatticeSpec<f64> = min_lattice_for(w, LatticeKind::Square);
            (s.rows, s.cols)
        };
        assert_eq!(shape(9), (3, 3));
        assert_eq!(shape(10), (3, 4));
        assert_eq!(shape(70), (8, 9));
        assert_eq!(shape(1), (1, 1));
        assert_eq!(shape(2), (1, 2));
        assert_eq!(shape(12), (3, 4));
        assert_eq!(shape(13), (4, 4));
    }

    #[test]
    fn min_lattice_is_minimal() {
        for w in 1..200 {
            let s: LatticeSpec<f64> = min_lattice_for(w, LatticeKind::Square);
            assert!(s.rows * s.cols >= w);
            assert!(s.cols >= s.rows && s.cols - s.rows <= 1);
            let best = (1..=w)
                .flat_map(|r| [(r, r), (r, r + 1)])
                .filter(|(r, c)| r * c >= w)
                .map(|(r, c)| r * c)
                .min()
                .unwrap();
            assert_eq!(s.rows * s.cols, best, "width {w}");
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = LatticeSpec::<f64>::standard(LatticeKind::Square, 2, 2);
        spec.row_offset = 1.0;
        assert!(build_lattice(&spec).is_err());
        spec.row_offset = 0.0;
        spec.rows = 0;
        assert!(build_lattice(&spec).is_err());
    }

    #[test]
    fn layered_lattice_has_z() {
        let mut spec = LatticeSpec::<f64>::standard(LatticeKind::Custom, 1, 2);
        spec.layers = 2;
        spec.dz = 2.0;
        let l = build_lattice(&spec).unwrap();
        assert_eq!(l.len(), 4);
        assert_eq!(l.site(3).z, 2.0);
        assert_eq!(l.site(3).layer, 1);
    }

    #[test]
    fn kinds_parse() {
        assert_eq!("S-Triangle".parse::<LatticeKind>().unwrap(), LatticeKind::STriangle);
        assert_eq!("t_triangle".parse::<LatticeKind>().unwrap(), LatticeKind::TTriangle);
        assert!("hex".parse::<LatticeKind>().is_err());
    }

    #[test]
    fn generic_over_f32() {
        let l = build_lattice(&LatticeSpec::<f32>::standard(LatticeKind::STriangle, 3, 3)).unwrap();
        assert_eq!(l.center_site(&[]).unwrap(), 4);
        assert!((l.nearest_neighbor_spacing() - 1.0).abs() < 1e-6);
    }
}
