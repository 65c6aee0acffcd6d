use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::BoxGrid;
use crate::medium::RefractiveIndexField;
use crate::sparse::Csr;
use crate::wave::WaveParams;

/// Discrete curl from edges to faces.
///
/// Row `f` of the face with normal `d` at `(i, j, k)` holds
/// `∂_u E_v − ∂_v E_u` with `(d, u, v)` cyclic.
pub fn curl_matrix(grid: &BoxGrid) -> Csr {
    let mut trip = Vec::with_capacity(4 * grid.n_faces());
    for_each_face(grid, |d, ijk, row, stencil| {
        let _ = (d, ijk);
        for (e, c) in stencil {
            trip.push((row, e, C64::new(c, 0.0)));
        }
    });
    Csr::from_triplets(grid.n_faces(), grid.n_edges(), &trip)
}

/// Discrete gradient from nodes to edges.
pub fn gradient_matrix(grid: &BoxGrid) -> Csr {
    let h = grid.spacing();
    let mut trip = Vec::with_capacity(2 * grid.n_edges());
    for e in 0..grid.n_edges() {
        let (d, ijk) = grid.edge_coords(e);
        let mut up = ijk;
        up[d] += 1;
        trip.push((e, grid.node_index(ijk), C64::new(-1.0 / h[d], 0.0)));
        trip.push((e, grid.node_index(up), C64::new(1.0 / h[d], 0.0)));
    }
    Csr::from_triplets(grid.n_edges(), grid.n_nodes(), &trip)
}

/// Calls `f(d, ijk, face_row, [(edge, coefficient); 4])` for every face.
fn for_each_face(grid: &BoxGrid, mut f: impl FnMut(usize, [usize; 3], usize, [(usize, f64); 4])) {
    let h = grid.spacing();
    for d in 0..3 {
        let (u, v) = ((d + 1) % 3, (d + 2) % 3);
        let s = grid.face_shape(d);
        for k in 0..s[2] {
            for j in 0..s[1] {
                for i in 0..s[0] {
                    let ijk = [i, j, k];
                    let mut pu = ijk;
                    pu[u] += 1;
                    let mut pv = ijk;
                    pv[v] += 1;
                    let stencil = [
                        (grid.edge_index(v, pu), 1.0 / h[u]),
                        (grid.edge_index(v, ijk), -1.0 / h[u]),
                        (grid.edge_index(u, pv), -1.0 / h[v]),
                        (grid.edge_index(u, ijk), 1.0 / h[v]),
                    ];
                    f(d, ijk, grid.face_index(d, ijk), stencil);
                }
            }
        }
    }
}

/// `curl curl − k² n` on the edge grid, split into interior and boundary
/// (tangential) unknowns.
///
/// The full operator is `Cᵀ W_f C − k² W_e N` with `C` the discrete curl and
/// `W_f`, `W_e` the dual face and edge volumes, so interior rows are the
/// 13-point edge stencil scaled by a cell volume and the matrix is complex
/// symmetric. Boundary rows give the variational trace of `ν×curl E`.
#[derive(Clone, Debug)]
pub struct CurlCurlSystem {
    grid: BoxGrid,
    n: Arc<RefractiveIndexField>,
    wp: WaveParams,
    a: Csr,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    /// position of each edge within `interior` or `boundary`
    local: Vec<usize>,
    a_ii: Csr,
    a_ib: Csr,
}

/// Assembles the curl-curl system for index `n` on `grid`.
pub fn assemble(
    grid: &BoxGrid,
    n: &RefractiveIndexField,
    wp: &WaveParams,
) -> Result<CurlCurlSystem> {
    CurlCurlSystem::new(grid, Arc::new(n.clone()), wp)
}

impl CurlCurlSystem {
    pub fn new(grid: &BoxGrid, n: Arc<RefractiveIndexField>, wp: &WaveParams) -> Result<Self> {
        if n.grid() != grid {
            return Err(Error::InvalidMedium(
                "refractive index is sampled on a different grid".into(),
            ));
        }
        let k2 = wp.k() * wp.k();
        let mut trip = Vec::with_capacity(16 * grid.n_faces() + grid.n_edges());
        for_each_face(grid, |d, ijk, _, st| {
            let w = grid.face_weight(d, ijk);
            for (ep, cp) in st {
                for (eq, cq) in st {
                    trip.push((ep, eq, C64::new(w * cp * cq, 0.0)));
                }
            }
        });
        let vals = n.values();
        for e in 0..grid.n_edges() {
            trip.push((e, e, -k2 * grid.edge_weight(e) * vals[e]));
        }
        let a = Csr::from_triplets(grid.n_edges(), grid.n_edges(), &trip);

        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut local = vec![0usize; grid.n_edges()];
        for e in 0..grid.n_edges() {
            if grid.is_boundary_edge(e) {
                local[e] = boundary.len();
                boundary.push(e);
            } else {
                local[e] = interior.len();
                interior.push(e);
            }
        }
        let imap: Vec<Option<usize>> = (0..grid.n_edges())
            .map(|e| (!grid.is_boundary_edge(e)).then(|| local[e]))
            .collect();
        let bmap: Vec<Option<usize>> = (0..grid.n_edges())
            .map(|e| grid.is_boundary_edge(e).then(|| local[e]))
            .collect();
        let a_ii = a.extract(&interior, &imap, interior.len());
        let a_ib = a.extract(&interior, &bmap, boundary.len());
        Ok(Self {
            grid: *grid,
            n,
            wp: *wp,
            a,
            interior,
            boundary,
            local,
            a_ii,
            a_ib,
        })
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn medium(&self) -> &RefractiveIndexField {
        &self.n
    }

    pub fn wave(&self) -> &WaveParams {
        &self.wp
    }

    /// Full edge operator.
    pub fn operator(&self) -> &Csr {
        &self.a
    }

    pub fn interior_operator(&self) -> &Csr {
        &self.a_ii
    }

    /// Coupling from boundary unknowns into interior rows (the lifting map).
    pub fn lifting(&self) -> &Csr {
        &self.a_ib
    }

    pub fn interior_edges(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary
    }

    /// Position of `edge` within the interior or boundary list.
    pub fn local_index(&self, edge: usize) -> usize {
        self.local[edge]
    }

    /// `A E` over all edges.
    pub fn apply(&self, e: &[C64]) -> Vec<C64> {
        self.a.mul_vec(e)
    }

    /// Nested-dissection coordinates of the interior unknowns.
    pub(crate) fn interior_coords(&self) -> Vec<[usize; 3]> {
        self.interior
            .iter()
            .map(|&e| self.grid.edge_doubled(e))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curl_of_gradient_vanishes() {
        for cells in [[4, 4, 4], [5, 6, 7]] {
            let g = BoxGrid::new([1.0, 1.3, 0.7], cells).unwrap();
            let c = curl_matrix(&g);
            let gr = gradient_matrix(&g);
            let phi: Vec<C64> = (0..g.n_nodes())
                .map(|i| C64::new((i as f64 * 0.731).sin(), (i as f64).cos()))
                .collect();
            let ge = gr.mul_vec(&phi);
            let cge = c.mul_vec(&ge);
            let scale = ge.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(cge.iter().all(|v| v.norm() <= 1e-12 * scale * 10.0));
        }
    }

    #[test]
    fn stencil_and_symmetry() {
        let g = BoxGrid::unit_cube(6).unwrap();
        let n = RefractiveIndexField::homogeneous(&g, C64::new(1.0, 0.2)).unwrap();
        let wp = WaveParams::from_wavenumber(2.0).unwrap();
        let s = assemble(&g, &n, &wp).unwrap();
        assert!(s.operator().symmetry_defect() < 1e-12);
        for &e in s.interior_edges() {
            assert_eq!(s.operator().row(e).0.len(), 13);
        }
        let s2 = assemble(&g, &n, &wp).unwrap();
        assert_eq!(s.operator(), s2.operator());
    }
}
