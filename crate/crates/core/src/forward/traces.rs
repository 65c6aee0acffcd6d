use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::solver::FieldSolution;
use super::system::CurlCurlSystem;
use crate::error::{Error, Result};
use crate::grid::{BoxGrid, Face};
use crate::patch::{BoundaryPatch, TangentialField};

/// How `ν×curl E` is read off a discrete field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceScheme {
    /// Second-order one-sided differences normal to the face.
    OneSided,
    /// Boundary rows of the assembled operator divided by the surface weight
    /// (discrete Green identity); makes the discrete reciprocity exact.
    Variational,
}

/// `(ν×curl E)·t` at boundary edge `e` for the face `face` containing it.
pub fn one_sided_curl_trace(grid: &BoxGrid, e: &[C64], edge: usize, face: Face) -> C64 {
    let (d, ijk) = grid.edge_coords(edge);
    let a = face.axis();
    debug_assert_ne!(a, d);
    let sigma = face.sign();
    let h = grid.spacing();
    let q0 = ijk[a] as isize;
    let inward: isize = if face.is_max() { -1 } else { 1 };
    let at = |dir: usize, p: [isize; 3]| -> C64 {
        e[grid
            .edge_index_checked(dir, p)
            .expect("one-sided stencil stays inside the grid")]
    };
    let base = [ijk[0] as isize, ijk[1] as isize, ijk[2] as isize];
    // ∂_a E_d, one-sided
    let mut p = base;
    let mut v = [C64::new(0.0, 0.0); 3];
    for (m, slot) in v.iter_mut().enumerate() {
        p[a] = q0 + inward * m as isize;
        *slot = at(d, p);
    }
    let da_ed = (3.0 * v[0] - 4.0 * v[1] + v[2]) * (sigma / (2.0 * h[a]));
    // E_a extrapolated to the face at the two end nodes of the edge
    let first_half = if face.is_max() { q0 - 1 } else { q0 };
    let mut ea = [C64::new(0.0, 0.0); 2];
    for (s, slot) in ea.iter_mut().enumerate() {
        let mut p = base;
        p[d] += s as isize;
        let mut w = [C64::new(0.0, 0.0); 3];
        for (m, wm) in w.iter_mut().enumerate() {
            p[a] = first_half + inward * m as isize;
            *wm = at(a, p);
        }
        *slot = (15.0 * w[0] - 10.0 * w[1] + 3.0 * w[2]) / 8.0;
    }
    let dd_ea = (ea[1] - ea[0]) / h[d];
    (dd_ea - da_ed) * sigma
}

/// `ν×curl E` on `patch`.
pub fn curl_trace(
    sys: Option<&CurlCurlSystem>,
    grid: &BoxGrid,
    e: &[C64],
    patch: &Arc<BoundaryPatch>,
    scheme: TraceScheme,
) -> Result<TangentialField> {
    if patch.grid() != grid {
        return Err(Error::InvalidPatch("patch lives on another grid".into()));
    }
    let values = match scheme {
        TraceScheme::OneSided => patch
            .dofs()
            .iter()
            .enumerate()
            .map(|(b, &edge)| one_sided_curl_trace(grid, e, edge, patch.dof_face(b)))
            .collect(),
        TraceScheme::Variational => {
            let sys = sys.ok_or_else(|| {
                Error::InvalidPatch("variational traces need the assembled system".into())
            })?;
            let a = sys.operator();
            patch
                .dofs()
                .iter()
                .enumerate()
                .map(|(b, &edge)| {
                    let (cols, vals) = a.row(edge);
                    let r: C64 = cols.iter().zip(vals).map(|(c, v)| v * e[*c]).sum();
                    -r / patch.area(b)
                })
                .collect()
        }
    };
    TangentialField::new(patch.clone(), values)
}

/// `(ν×E, ν×curl E)` on `patch`, the latter by one-sided differences.
pub fn boundary_traces(
    sol: &FieldSolution,
    patch: &Arc<BoundaryPatch>,
) -> Result<(TangentialField, TangentialField)> {
    if patch.grid() != &sol.grid {
        return Err(Error::InvalidPatch("patch lives on another grid".into()));
    }
    let nu_e = TangentialField::new(
        patch.clone(),
        patch.dofs().iter().map(|&edge| sol.e[edge]).collect(),
    )?;
    let nu_curl = curl_trace(None, &sol.grid, &sol.e, patch, TraceScheme::OneSided)?;
    Ok((nu_e, nu_curl))
}
