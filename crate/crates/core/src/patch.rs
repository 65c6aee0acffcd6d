//! Boundary patches and tangential boundary data.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{BoxGrid, Face};

const NONE: u32 = u32::MAX;

/// Accessible part `Γ` of the boundary: a set of box faces and the
/// tangential edge DOFs it carries.
///
/// A boundary edge belongs to the patch when every face containing it is in
/// the patch, so a single face contributes its interior edges only and the
/// rim is shared only between adjacent selected faces.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPatch {
    grid: BoxGrid,
    faces: Vec<Face>,
    dofs: Vec<usize>,
    dof_face: Vec<Face>,
    areas: Vec<f64>,
    slot: Vec<u32>,
}

impl BoundaryPatch {
    pub fn new(grid: &BoxGrid, faces: &[Face]) -> Result<Self> {
        let mut faces: Vec<Face> = faces.to_vec();
        faces.sort();
        faces.dedup();
        if faces.is_empty() {
            return Err(Error::InvalidPatch("no faces selected".into()));
        }
        let h = grid.spacing();
        let mut dofs = Vec::new();
        let mut dof_face = Vec::new();
        let mut areas = Vec::new();
        let mut slot = vec![NONE; grid.n_edges()];
        for e in 0..grid.n_edges() {
            let on = grid.edge_faces(e);
            if on.is_empty() || !on.iter().all(|f| faces.contains(f)) {
                continue;
            }
            let d = grid.edge_direction(e);
            // dual strip width across the edge within each containing face
            let area: f64 = if on.len() == 1 {
                let u = 3 - d - on[0].axis();
                h[d] * h[u]
            } else {
                on.iter().map(|f| 0.5 * h[d] * h[3 - d - f.axis()]).sum()
            };
            slot[e] = dofs.len() as u32;
            dofs.push(e);
            dof_face.push(on[0]);
            areas.push(area);
        }
        if dofs.is_empty() {
            return Err(Error::InvalidPatch("patch carries no tangential DOFs".into()));
        }
        Ok(Self {
            grid: *grid,
            faces,
            dofs,
            dof_face,
            areas,
            slot,
        })
    }

    /// The whole boundary.
    pub fn full(grid: &BoxGrid) -> Self {
        Self::new(grid, &Face::ALL).expect("full boundary is never empty")
    }

    /// The face `z = extent_z`.
    pub fn top(grid: &BoxGrid) -> Self {
        Self::new(grid, &[Face::ZMax]).expect("top face is never empty")
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// Edge indices of the patch DOFs, increasing.
    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    /// Face whose outward normal is attached to DOF `b`.
    pub fn dof_face(&self, b: usize) -> Face {
        self.dof_face[b]
    }

    pub fn normal(&self, b: usize) -> [f64; 3] {
        self.dof_face[b].normal()
    }

    /// Surface quadrature weight of DOF `b`.
    pub fn area(&self, b: usize) -> f64 {
        self.areas[b]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    /// Patch slot of an edge, if the edge is a patch DOF.
    pub fn slot(&self, edge: usize) -> Option<usize> {
        match self.slot[edge] {
            NONE => None,
            s => Some(s as usize),
        }
    }

    pub fn contains_face(&self, f: Face) -> bool {
        self.faces.contains(&f)
    }

    /// True when every DOF of `self` is also a DOF of `other`.
    pub fn is_subset_of(&self, other: &BoundaryPatch) -> bool {
        self.grid == other.grid && self.dofs.iter().all(|&e| other.slot(e).is_some())
    }
}

/// Complex tangential data on a patch, one number per patch DOF.
///
/// Each value is the component `u·t` of a tangential vector `u` along the
/// DOF's edge tangent `t`. For boundary data `f = ν×E` the stored vector is
/// `E_tan = f×ν`, so the values are `(ν×E)·(ν×t) = E·t`, exactly the edge
/// unknowns prescribed on the boundary. Impedance images `ν×curl E` are
/// stored directly. Data supported in `Γ` extend by zero to the rest of the
/// boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentialField {
    patch: Arc<BoundaryPatch>,
    values: Vec<C64>,
}

impl TangentialField {
    pub fn new(patch: Arc<BoundaryPatch>, values: Vec<C64>) -> Result<Self> {
        if values.len() != patch.len() {
            return Err(Error::DimensionMismatch {
                expected: patch.len(),
                found: values.len(),
            });
        }
        Ok(Self { patch, values })
    }

    pub fn zeros(patch: Arc<BoundaryPatch>) -> Self {
        let n = patch.len();
        Self {
            patch,
            values: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// Unit data on DOF `j`.
    pub fn basis(patch: Arc<BoundaryPatch>, j: usize) -> Self {
        let mut f = Self::zeros(patch);
        f.values[j] = C64::new(1.0, 0.0);
        f
    }

    /// Samples a vector field: the value at DOF `b` is `u(x_b)·t_b`.
    pub fn from_vector_fn(patch: Arc<BoundaryPatch>, u: impl Fn([f64; 3]) -> [C64; 3]) -> Self {
        let grid = *patch.grid();
        let values = patch
            .dofs()
            .iter()
            .map(|&e| u(grid.edge_midpoint(e))[grid.edge_direction(e)])
            .collect();
        Self { patch, values }
    }

    pub fn patch(&self) -> &Arc<BoundaryPatch> {
        &self.patch
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Value at a boundary edge; zero off the patch.
    pub fn at_edge(&self, edge: usize) -> C64 {
        self.patch
            .slot(edge)
            .map_or(C64::new(0.0, 0.0), |s| self.values[s])
    }

    /// Zero extension onto a larger patch on the same grid.
    pub fn extend_to(&self, target: Arc<BoundaryPatch>) -> Result<TangentialField> {
        if !self.patch.is_subset_of(&target) {
            return Err(Error::InvalidPatch(
                "target patch does not contain the source patch".into(),
            ));
        }
        let values = target.dofs().iter().map(|&e| self.at_edge(e)).collect();
        Ok(TangentialField {
            patch: target,
            values,
        })
    }

    /// Restriction onto a sub-patch.
    pub fn restrict_to(&self, target: Arc<BoundaryPatch>) -> Result<TangentialField> {
        if !target.is_subset_of(&self.patch) {
            return Err(Error::InvalidPatch(
                "target patch is not contained in the source patch".into(),
            ));
        }
        let values = target.dofs().iter().map(|&e| self.at_edge(e)).collect();
        Ok(TangentialField {
            patch: target,
            values,
        })
    }

    /// Surface pairing `∫_Γ u·v ds` (bilinear, no conjugation).
    pub fn pair(&self, other: &TangentialField) -> Result<C64> {
        if *self.patch != *other.patch {
            return Err(Error::InvalidPatch("pairing across different patches".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.patch.areas())
            .map(|((a, b), w)| a * b * *w)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `a*self + b*other`.
    pub fn combine(&self, a: C64, other: &TangentialField, b: C64) -> Result<TangentialField> {
        if *self.patch != *other.patch {
            return Err(Error::InvalidPatch("combining across different patches".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(TangentialField {
            patch: self.patch.clone(),
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_face_excludes_rim() {
        let g = BoxGrid::unit_cube(16).unwrap();
        let p = BoundaryPatch::top(&g);
        assert_eq!(p.len(), 16 * 15 * 2);
        for b in 0..p.len() {
            let e = p.dofs()[b];
            let d = g.edge_direction(e);
            assert_ne!(d, 2);
            assert!((g.edge_midpoint(e)[2] - 1.0).abs() < 1e-15);
            assert!((p.area(b) - g.spacing()[0] * g.spacing()[1]).abs() < 1e-16);
        }
    }

    #[test]
    fn full_boundary_counts_all_tangential_edges() {
        let g = BoxGrid::unit_cube(5).unwrap();
        let p = BoundaryPatch::full(&g);
        let nb = (0..g.n_edges()).filter(|&e| g.is_boundary_edge(e)).count();
        assert_eq!(p.len(), nb);
        // normals orthogonal to edge directions
        for b in 0..p.len() {
            let d = g.edge_direction(p.dofs()[b]);
            assert_eq!(p.normal(b)[d], 0.0);
        }
        // surface weights add up to the area of six unit faces, twice
        let total: f64 = p.areas().iter().sum();
        assert!((total - 12.0).abs() < 1e-12);
    }

    #[test]
    fn extension_by_zero() {
        let g = BoxGrid::unit_cube(6).unwrap();
        let top = Arc::new(BoundaryPatch::top(&g));
        let full = Arc::new(BoundaryPatch::full(&g));
        let f = TangentialField::new(top.clone(), vec![C64::new(1.0, 2.0); top.len()]).unwrap();
        let fe = f.extend_to(full.clone()).unwrap();
        for (b, &e) in full.dofs().iter().enumerate() {
            let expect = if top.slot(e).is_some() {
                C64::new(1.0, 2.0)
            } else {
                C64::new(0.0, 0.0)
            };
            assert_eq!(fe.values()[b], expect);
        }
        assert_eq!(fe.restrict_to(top).unwrap(), f);
    }
}
