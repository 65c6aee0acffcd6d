//! Staggered edge grid on an axis-aligned box.
//!
//! Edge DOFs come in three families, one per direction. An x-directed edge
//! `(i, j, k)` joins the nodes `(i, j, k)` and `(i+1, j, k)`; its midpoint sits
//! at `((i+1/2) hx, j hy, k hz)`. Families are numbered x, then y, then z, and
//! within a family the index runs x fastest.

use crate::error::{Error, Result};

/// One of the six faces of the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::XMin,
        Face::XMax,
        Face::YMin,
        Face::YMax,
        Face::ZMin,
        Face::ZMax,
    ];

    /// Axis normal to the face.
    pub fn axis(self) -> usize {
        match self {
            Face::XMin | Face::XMax => 0,
            Face::YMin | Face::YMax => 1,
            Face::ZMin | Face::ZMax => 2,
        }
    }

    pub fn is_max(self) -> bool {
        matches!(self, Face::XMax | Face::YMax | Face::ZMax)
    }

    /// Sign of the outward normal along [`Face::axis`].
    pub fn sign(self) -> f64 {
        if self.is_max() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn normal(self) -> [f64; 3] {
        let mut n = [0.0; 3];
        n[self.axis()] = self.sign();
        n
    }

    pub fn from_axis(axis: usize, is_max: bool) -> Face {
        match (axis, is_max) {
            (0, false) => Face::XMin,
            (0, true) => Face::XMax,
            (1, false) => Face::YMin,
            (1, true) => Face::YMax,
            (2, false) => Face::ZMin,
            _ => Face::ZMax,
        }
    }

    /// Short label: `x-`, `x+`, ..., `z+`.
    pub fn label(self) -> &'static str {
        match self {
            Face::XMin => "x-",
            Face::XMax => "x+",
            Face::YMin => "y-",
            Face::YMax => "y+",
            Face::ZMin => "z-",
            Face::ZMax => "z+",
        }
    }

    /// Accepts the short labels plus `top` / `bottom` for z+ / z-.
    pub fn parse(s: &str) -> Option<Face> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x-" | "xmin" => Some(Face::XMin),
            "x+" | "xmax" => Some(Face::XMax),
            "y-" | "ymin" => Some(Face::YMin),
            "y+" | "ymax" => Some(Face::YMax),
            "z-" | "zmin" | "bottom" => Some(Face::ZMin),
            "z+" | "zmax" | "top" => Some(Face::ZMax),
            _ => None,
        }
    }
}

impl std::fmt::Display for Face {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Box `[0, extent]` split into `cells` uniform cells per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxGrid {
    extent: [f64; 3],
    cells: [usize; 3],
    spacing: [f64; 3],
    offsets: [usize; 4],
}

pub const MIN_CELLS: usize = 4;

impl BoxGrid {
    pub fn new(extent: [f64; 3], cells: [usize; 3]) -> Result<Self> {
        for a in 0..3 {
            if !(extent[a].is_finite() && extent[a] > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "extent along axis {a} must be positive, got {}",
                    extent[a]
                )));
            }
            if cells[a] < MIN_CELLS {
                return Err(Error::InvalidGrid(format!(
                    "need at least {MIN_CELLS} cells along axis {a}, got {}",
                    cells[a]
                )));
            }
        }
        let spacing = [
            extent[0] / cells[0] as f64,
            extent[1] / cells[1] as f64,
            extent[2] / cells[2] as f64,
        ];
        let mut g = Self {
            extent,
            cells,
            spacing,
            offsets: [0; 4],
        };
        for d in 0..3 {
            g.offsets[d + 1] = g.offsets[d] + g.family_len(d);
        }
        Ok(g)
    }

    /// Unit cube with `n` cells per axis.
    pub fn unit_cube(n: usize) -> Result<Self> {
        Self::new([1.0; 3], [n; 3])
    }

    pub fn extent(&self) -> [f64; 3] {
        self.extent
    }

    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn h_max(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    pub fn volume(&self) -> f64 {
        self.extent[0] * self.extent[1] * self.extent[2]
    }

    pub fn diameter(&self) -> f64 {
        norm3(self.extent)
    }

    pub fn n_cells(&self) -> usize {
        self.cells[0] * self.cells[1] * self.cells[2]
    }

    /// Index-space shape of the edge family directed along `d`.
    pub fn edge_shape(&self, d: usize) -> [usize; 3] {
        let mut s = [self.cells[0] + 1, self.cells[1] + 1, self.cells[2] + 1];
        s[d] -= 1;
        s
    }

    fn family_len(&self, d: usize) -> usize {
        let s = self.edge_shape(d);
        s[0] * s[1] * s[2]
    }

    pub fn edge_offset(&self, d: usize) -> usize {
        self.offsets[d]
    }

    pub fn n_edges(&self) -> usize {
        self.offsets[3]
    }

    #[inline]
    pub fn edge_index(&self, d: usize, ijk: [usize; 3]) -> usize {
        let s = self.edge_shape(d);
        debug_assert!(ijk[0] < s[0] && ijk[1] < s[1] && ijk[2] < s[2]);
        self.edge_offset(d) + ijk[0] + s[0] * (ijk[1] + s[1] * ijk[2])
    }

    /// Same as [`BoxGrid::edge_index`] but returns `None` when out of range.
    pub fn edge_index_checked(&self, d: usize, ijk: [isize; 3]) -> Option<usize> {
        let s = self.edge_shape(d);
        for a in 0..3 {
            if ijk[a] < 0 || ijk[a] as usize >= s[a] {
                return None;
            }
        }
        Some(self.edge_index(d, [ijk[0] as usize, ijk[1] as usize, ijk[2] as usize]))
    }

    /// Inverse of [`BoxGrid::edge_index`]: `(direction, (i, j, k))`.
    pub fn edge_coords(&self, idx: usize) -> (usize, [usize; 3]) {
        assert!(idx < self.offsets[3], "edge index {idx} out of range");
        let d = if idx < self.offsets[1] {
            0
        } else if idx < self.offsets[2] {
            1
        } else {
            2
        };
        let r = idx - self.offsets[d];
        let s = self.edge_shape(d);
        (d, [r % s[0], (r / s[0]) % s[1], r / (s[0] * s[1])])
    }

    pub fn edge_direction(&self, idx: usize) -> usize {
        self.edge_coords(idx).0
    }

    pub fn edge_midpoint(&self, idx: usize) -> [f64; 3] {
        let (d, ijk) = self.edge_coords(idx);
        let mut p = [0.0; 3];
        for a in 0..3 {
            let off = if a == d { 0.5 } else { 0.0 };
            p[a] = (ijk[a] as f64 + off) * self.spacing[a];
        }
        p
    }

    /// Edge position in doubled index units (odd along its own direction).
    pub fn edge_doubled(&self, idx: usize) -> [usize; 3] {
        let (d, ijk) = self.edge_coords(idx);
        let mut p = [2 * ijk[0], 2 * ijk[1], 2 * ijk[2]];
        p[d] += 1;
        p
    }

    /// Boundary planes (as faces) that contain the edge.
    pub fn edge_faces(&self, idx: usize) -> Vec<Face> {
        let (d, ijk) = self.edge_coords(idx);
        let mut out = Vec::new();
        for a in 0..3 {
            if a == d {
                continue;
            }
            if ijk[a] == 0 {
                out.push(Face::from_axis(a, false));
            }
            if ijk[a] == self.cells[a] {
                out.push(Face::from_axis(a, true));
            }
        }
        out
    }

    /// True when the edge lies in a face of the box (a tangential DOF).
    pub fn is_boundary_edge(&self, idx: usize) -> bool {
        let (d, ijk) = self.edge_coords(idx);
        (0..3).any(|a| a != d && (ijk[a] == 0 || ijk[a] == self.cells[a]))
    }

    /// Dual volume of an edge: a cell volume, halved per boundary plane it lies in.
    pub fn edge_weight(&self, idx: usize) -> f64 {
        let (d, ijk) = self.edge_coords(idx);
        let mut w = self.cell_volume();
        for a in 0..3 {
            if a != d && (ijk[a] == 0 || ijk[a] == self.cells[a]) {
                w *= 0.5;
            }
        }
        w
    }

    pub fn edge_weights(&self) -> Vec<f64> {
        (0..self.n_edges()).map(|e| self.edge_weight(e)).collect()
    }

    pub fn edge_midpoints(&self) -> Vec<[f64; 3]> {
        (0..self.n_edges()).map(|e| self.edge_midpoint(e)).collect()
    }

    /// Index-space shape of the face family with normal `d`.
    pub fn face_shape(&self, d: usize) -> [usize; 3] {
        let mut s = self.cells;
        s[d] += 1;
        s
    }

    fn face_family_len(&self, d: usize) -> usize {
        let s = self.face_shape(d);
        s[0] * s[1] * s[2]
    }

    pub fn face_offset(&self, d: usize) -> usize {
        (0..d).map(|e| self.face_family_len(e)).sum()
    }

    pub fn n_faces(&self) -> usize {
        (0..3).map(|d| self.face_family_len(d)).sum()
    }

    #[inline]
    pub fn face_index(&self, d: usize, ijk: [usize; 3]) -> usize {
        let s = self.face_shape(d);
        self.face_offset(d) + ijk[0] + s[0] * (ijk[1] + s[1] * ijk[2])
    }

    /// Dual weight of a face: a cell volume, halved on the boundary.
    pub fn face_weight(&self, d: usize, ijk: [usize; 3]) -> f64 {
        let mut w = self.cell_volume();
        if ijk[d] == 0 || ijk[d] == self.cells[d] {
            w *= 0.5;
        }
        w
    }

    pub fn node_shape(&self) -> [usize; 3] {
        [self.cells[0] + 1, self.cells[1] + 1, self.cells[2] + 1]
    }

    pub fn n_nodes(&self) -> usize {
        let s = self.node_shape();
        s[0] * s[1] * s[2]
    }

    pub fn node_index(&self, ijk: [usize; 3]) -> usize {
        let s = self.node_shape();
        ijk[0] + s[0] * (ijk[1] + s[1] * ijk[2])
    }

    pub fn cell_center(&self, ijk: [usize; 3]) -> [f64; 3] {
        [
            (ijk[0] as f64 + 0.5) * self.spacing[0],
            (ijk[1] as f64 + 0.5) * self.spacing[1],
            (ijk[2] as f64 + 0.5) * self.spacing[2],
        ]
    }

    /// Cell centers in x-fastest order.
    pub fn cell_centers(&self) -> Vec<[f64; 3]> {
        let [nx, ny, nz] = self.cells;
        let mut out = Vec::with_capacity(nx * ny * nz);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    out.push(self.cell_center([i, j, k]));
                }
            }
        }
        out
    }

    /// Distance from `x` to the nearest face.
    pub fn boundary_clearance(&self, x: [f64; 3]) -> f64 {
        (0..3)
            .map(|a| x[a].min(self.extent[a] - x[a]))
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_count_8() {
        let g = BoxGrid::unit_cube(8).unwrap();
        assert_eq!(g.n_edges(), 1944);
        assert_eq!(g.edge_shape(0), [8, 9, 9]);
    }

    #[test]
    fn spacing_division() {
        let g = BoxGrid::new([1.0, 1.0, 2.0], [4, 4, 8]).unwrap();
        assert_eq!(g.spacing(), [0.25, 0.25, 0.25]);
    }

    #[test]
    fn rejects_coarse() {
        assert!(matches!(
            BoxGrid::new([1.0; 3], [2, 8, 8]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(BoxGrid::new([0.0, 1.0, 1.0], [8, 8, 8]).is_err());
    }

    #[test]
    fn boundary_weights() {
        let g = BoxGrid::unit_cube(4).unwrap();
        let h3 = g.cell_volume();
        // x-edge on the rim y=0, z=0
        let e = g.edge_index(0, [1, 0, 0]);
        assert_eq!(g.edge_weight(e), h3 / 4.0);
        assert_eq!(g.edge_faces(e), vec![Face::YMin, Face::ZMin]);
        let e = g.edge_index(0, [1, 2, 4]);
        assert_eq!(g.edge_weight(e), h3 / 2.0);
        assert!(g.is_boundary_edge(e));
        let e = g.edge_index(0, [0, 2, 2]);
        assert_eq!(g.edge_weight(e), h3);
        assert!(!g.is_boundary_edge(e));
        // dual volumes tile the box, once per family
        let total: f64 = g.edge_weights().iter().sum();
        assert!((total - 3.0).abs() < 1e-12);
    }

    #[test]
    fn face_parse() {
        for f in Face::ALL {
            assert_eq!(Face::parse(f.label()), Some(f));
        }
        assert_eq!(Face::parse("top"), Some(Face::ZMax));
        assert_eq!(Face::parse("q"), None);
    }
}
