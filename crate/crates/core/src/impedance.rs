//! Local impedance map `f ↦ ν×curl E|_Γ` and the integral identity that ties
//! its differences to volume integrals of the index difference.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::forward::{
    curl_trace, BvpSolver, CurlCurlSystem, FieldSolution, SolverOptions, TraceScheme,
};
use crate::grid::BoxGrid;
use crate::medium::RefractiveIndexField;
use crate::patch::{BoundaryPatch, TangentialField};
use crate::wave::WaveParams;

/// Dense matrix of `Z_n` over the Γ degrees of freedom.
///
/// Column `j` holds `ν×curl E` on Γ for the solve whose boundary data is the
/// `j`-th Γ basis field extended by zero.
#[derive(Clone, Debug)]
pub struct ImpedanceOperator {
    patch: Arc<BoundaryPatch>,
    matrix: Mat<C64>,
    k: f64,
    background: C64,
    scheme: TraceScheme,
}

#[derive(Clone, Copy, Debug)]
pub struct ImpedanceOptions {
    pub solver: SolverOptions,
    pub scheme: TraceScheme,
    /// basis solves per block
    pub block: usize,
}

impl Default for ImpedanceOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            scheme: TraceScheme::Variational,
            block: 64,
        }
    }
}

impl ImpedanceOperator {
    pub fn from_matrix(
        patch: Arc<BoundaryPatch>,
        matrix: Mat<C64>,
        k: f64,
        background: C64,
        scheme: TraceScheme,
    ) -> Result<Self> {
        let m = patch.len();
        if matrix.nrows() != m || matrix.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        if (0..m).any(|j| (0..m).any(|i| !matrix[(i, j)].is_finite())) {
            return Err(Error::Format("impedance matrix has non-finite entries".into()));
        }
        Ok(Self {
            patch,
            matrix,
            k,
            background,
            scheme,
        })
    }

    pub fn patch(&self) -> &Arc<BoundaryPatch> {
        &self.patch
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn background(&self) -> C64 {
        self.background
    }

    pub fn scheme(&self) -> TraceScheme {
        self.scheme
    }

    /// Checks that `other` acts on the same Γ at the same wave number.
    pub fn compatible(&self, other: &ImpedanceOperator) -> Result<()> {
        if !Arc::ptr_eq(&self.patch, &other.patch) && *self.patch != *other.patch {
            return Err(Error::InvalidPatch("impedance maps act on different patches".into()));
        }
        if self.k != other.k {
            return Err(Error::InvalidWaveParams(format!(
                "impedance maps at different wave numbers ({} vs {})",
                self.k, other.k
            )));
        }
        Ok(())
    }

    /// `Z_self − Z_other`.
    pub fn difference(&self, other: &ImpedanceOperator) -> Result<Mat<C64>> {
        self.compatible(other)?;
        Ok(&self.matrix - &other.matrix)
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }
}

pub(crate) fn spectral_norm(m: &Mat<C64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values()
        .map(|s| s.first().copied().unwrap_or(0.0))
        .unwrap_or_else(|_| m.norm_l2())
}

/// Builds `Z_n` on `patch` from one basis solve per Γ degree of freedom.
pub fn assemble_impedance(
    n: &RefractiveIndexField,
    grid: &BoxGrid,
    patch: &Arc<BoundaryPatch>,
    wp: &WaveParams,
) -> Result<ImpedanceOperator> {
    let sys = Arc::new(CurlCurlSystem::new(grid, Arc::new(n.clone()), wp)?);
    assemble_impedance_with(sys, patch, &ImpedanceOptions::default())
}

/// As [`assemble_impedance`] for a prepared system.
pub fn assemble_impedance_with(
    sys: Arc<CurlCurlSystem>,
    patch: &Arc<BoundaryPatch>,
    opts: &ImpedanceOptions,
) -> Result<ImpedanceOperator> {
    let solver = BvpSolver::new(sys, opts.solver)?;
    impedance_from_solver(&solver, patch, opts)
}

/// Builds `Z_n` with an existing solver, returning the matrix only.
pub fn impedance_from_solver(
    solver: &BvpSolver,
    patch: &Arc<BoundaryPatch>,
    opts: &ImpedanceOptions,
) -> Result<ImpedanceOperator> {
    let sys = solver.system();
    let grid = sys.grid();
    if patch.grid() != grid {
        return Err(Error::InvalidPatch("patch lives on another grid".into()));
    }
    let m = patch.len();
    let ne = grid.n_edges();
    let nb = sys.boundary_edges().len();
    let mut z = Mat::<C64>::zeros(m, m);
    let block = opts.block.max(1);
    let mut start = 0;
    while start < m {
        let cols = block.min(m - start);
        let mut eb = vec![C64::new(0.0, 0.0); nb * cols];
        for c in 0..cols {
            let edge = patch.dofs()[start + c];
            eb[c * nb + sys.local_index(edge)] = C64::new(1.0, 0.0);
        }
        let fields = solver.solve_boundary_block(&eb, cols)?;
        for c in 0..cols {
            let e = &fields[c * ne..(c + 1) * ne];
            let tr = curl_trace(Some(sys), grid, e, patch, opts.scheme)?;
            for (b, v) in tr.values().iter().enumerate() {
                z[(b, start + c)] = *v;
            }
        }
        start += cols;
    }
    ImpedanceOperator::from_matrix(
        patch.clone(),
        z,
        sys.wave().k(),
        sys.medium().background(),
        opts.scheme,
    )
}

/// `Z f` for Γ data `f`.
pub fn apply_impedance(z: &ImpedanceOperator, f: &TangentialField) -> Result<TangentialField> {
    if f.values().len() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            found: f.values().len(),
        });
    }
    if **f.patch() != **z.patch() {
        return Err(Error::InvalidPatch("data live on another patch".into()));
    }
    let x = f.values();
    let a = &z.matrix;
    let m = z.dim();
    let mut out = vec![C64::new(0.0, 0.0); m];
    for (j, &xj) in x.iter().enumerate() {
        if xj == C64::new(0.0, 0.0) {
            continue;
        }
        let col = a.col(j);
        for (i, o) in out.iter_mut().enumerate() {
            *o += col[i] * xj;
        }
    }
    TangentialField::new(z.patch.clone(), out)
}

/// Both sides of `∫ E₁·(n₁−n₂)E₂ dx = k⁻² ∫_Γ [(ν×curl E₁)·E₂ − E₁·(ν×curl E₂)] ds`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityReport {
    pub volume_side: C64,
    pub boundary_side: C64,
    /// `|volume − boundary| / max(|volume|, |boundary|, floor)`
    pub mismatch: f64,
    /// noise floor: 1e-6 of the magnitude of the boundary integrand
    pub floor: f64,
}

/// Cells next to ∂Ω read by the one-sided trace stencil.
pub const TRACE_LAYER_CELLS: f64 = 3.0;

/// Solves the two problems and evaluates the identity with one-sided traces.
#[allow(clippy::too_many_arguments)]
pub fn alessandrini_residual(
    n1: &RefractiveIndexField,
    n2: &RefractiveIndexField,
    f1: &TangentialField,
    f2: &TangentialField,
    grid: &BoxGrid,
    patch: &Arc<BoundaryPatch>,
    wp: &WaveParams,
) -> Result<IdentityReport> {
    alessandrini_residual_with(n1, n2, f1, f2, grid, patch, wp, TraceScheme::OneSided)
}

#[allow(clippy::too_many_arguments)]
pub fn alessandrini_residual_with(
    n1: &RefractiveIndexField,
    n2: &RefractiveIndexField,
    f1: &TangentialField,
    f2: &TangentialField,
    grid: &BoxGrid,
    patch: &Arc<BoundaryPatch>,
    wp: &WaveParams,
    scheme: TraceScheme,
) -> Result<IdentityReport> {
    if n1.grid() != grid || n2.grid() != grid || patch.grid() != grid {
        return Err(Error::InvalidMedium("inputs sampled on different grids".into()));
    }
    let layer = TRACE_LAYER_CELLS * grid.h_max();
    let (v1, v2) = (n1.values(), n2.values());
    for e in 0..grid.n_edges() {
        if v1[e] != v2[e] && grid.boundary_clearance(grid.edge_midpoint(e)) < layer {
            return Err(Error::SupportViolation(format!(
                "index difference within {layer:.3} of the boundary"
            )));
        }
    }
    let full = Arc::new(BoundaryPatch::full(grid));
    let g1 = restrict_to_patch(f1, patch)?.extend_to(full.clone())?;
    let g2 = restrict_to_patch(f2, patch)?.extend_to(full)?;
    let s1 = Arc::new(CurlCurlSystem::new(grid, Arc::new(n1.clone()), wp)?);
    let s2 = Arc::new(CurlCurlSystem::new(grid, Arc::new(n2.clone()), wp)?);
    let e1 = BvpSolver::new(s1.clone(), SolverOptions::default())?.solve(&g1)?;
    let e2 = BvpSolver::new(s2.clone(), SolverOptions::default())?.solve(&g2)?;
    Ok(identity_report(grid, patch, wp.k(), n1, n2, (&s1, &e1), (&s2, &e2), scheme)?)
}

fn restrict_to_patch(f: &TangentialField, patch: &Arc<BoundaryPatch>) -> Result<TangentialField> {
    if **f.patch() == **patch {
        return Ok(f.clone());
    }
    if !f.patch().is_subset_of(patch) {
        return Err(Error::InvalidPatch("boundary data must be supported in Γ".into()));
    }
    f.extend_to(patch.clone())
}

#[allow(clippy::too_many_arguments)]
fn identity_report(
    grid: &BoxGrid,
    patch: &Arc<BoundaryPatch>,
    k: f64,
    n1: &RefractiveIndexField,
    n2: &RefractiveIndexField,
    (s1, e1): (&CurlCurlSystem, &FieldSolution),
    (s2, e2): (&CurlCurlSystem, &FieldSolution),
    scheme: TraceScheme,
) -> Result<IdentityReport> {
    let mut volume = C64::new(0.0, 0.0);
    for e in 0..grid.n_edges() {
        let dn = n1.values()[e] - n2.values()[e];
        if dn != C64::new(0.0, 0.0) {
            volume += grid.edge_weight(e) * e1.e[e] * dn * e2.e[e];
        }
    }
    let c1 = curl_trace(Some(s1), grid, &e1.e, patch, scheme)?;
    let c2 = curl_trace(Some(s2), grid, &e2.e, patch, scheme)?;
    let mut boundary = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (b, &edge) in patch.dofs().iter().enumerate() {
        let w = patch.area(b);
        let p = c1.values()[b] * e2.e[edge];
        let q = e1.e[edge] * c2.values()[b];
        boundary += w * (p - q);
        scale += w * (p.norm() + q.norm());
    }
    let k2 = k * k;
    boundary /= k2;
    let floor = 1e-6 * scale / k2;
    let denom = volume.norm().max(boundary.norm()).max(floor);
    let mismatch = if denom > 0.0 {
        (volume - boundary).norm() / denom
    } else {
        0.0
    };
    Ok(IdentityReport {
        volume_side: volume,
        boundary_side: boundary,
        mismatch,
        floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{solve_bvp, PlaneWave};

    fn setup(n: usize, k: f64) -> (BoxGrid, RefractiveIndexField, WaveParams) {
        let g = BoxGrid::unit_cube(n).unwrap();
        let m = RefractiveIndexField::homogeneous(&g, C64::new(1.0, 0.0)).unwrap();
        (g, m, WaveParams::from_wavenumber(k).unwrap())
    }

    #[test]
    fn columns_are_basis_traces() {
        let (g, m, wp) = setup(6, 2.0);
        let top = Arc::new(BoundaryPatch::top(&g));
        let z = assemble_impedance(&m, &g, &top, &wp).unwrap();
        let z2 = assemble_impedance(&m, &g, &top, &wp).unwrap();
        assert_eq!(z.matrix(), z2.matrix());
        let sys = CurlCurlSystem::new(&g, Arc::new(m.clone()), &wp).unwrap();
        let j = 7;
        let f = TangentialField::basis(top.clone(), j);
        let col = apply_impedance(&z, &f).unwrap();
        let sol = solve_bvp(&sys, &f.extend_to(Arc::new(BoundaryPatch::full(&g))).unwrap()).unwrap();
        let tr = curl_trace(Some(&sys), &g, &sol.e, &top, TraceScheme::Variational).unwrap();
        for b in 0..top.len() {
            assert_eq!(col.values()[b], z.matrix()[(b, j)]);
            assert!((tr.values()[b] - col.values()[b]).norm() <= 1e-9 * z.spectral_norm());
        }
        assert!(z.difference(&z2).unwrap().norm_max() == 0.0);
    }

    #[test]
    fn linear_in_data() {
        let (g, m, wp) = setup(5, 1.5);
        let top = Arc::new(BoundaryPatch::top(&g));
        let z = assemble_impedance(&m, &g, &top, &wp).unwrap();
        let f1 = TangentialField::new(
            top.clone(),
            (0..top.len()).map(|i| C64::new((i as f64).sin(), 0.3)).collect(),
        )
        .unwrap();
        let f2 = TangentialField::new(
            top.clone(),
            (0..top.len()).map(|i| C64::new(1.0, (i as f64).cos())).collect(),
        )
        .unwrap();
        let (a, b) = (C64::new(0.7, -1.2), C64::new(-2.0, 0.5));
        let lhs = apply_impedance(&z, &f1.combine(a, &f2, b).unwrap()).unwrap();
        let rhs = apply_impedance(&z, &f1)
            .unwrap()
            .combine(a, &apply_impedance(&z, &f2).unwrap(), b)
            .unwrap();
        let scale = lhs.norm();
        for (p, q) in lhs.values().iter().zip(rhs.values()) {
            assert!((p - q).norm() <= 1e-12 * scale);
        }
        let wrong = TangentialField::zeros(Arc::new(BoundaryPatch::full(&g)));
        assert!(matches!(
            apply_impedance(&z, &wrong),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn plane_wave_on_full_boundary() {
        let k = 2.0;
        let d = [0.6, 0.0, 0.8];
        let pw = PlaneWave {
            direction: d,
            polarization: [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            kappa: C64::new(k, 0.0),
        };
        let mut errs = Vec::new();
        for n in [6, 12] {
            let (g, m, wp) = setup(n, k);
            let full = Arc::new(BoundaryPatch::full(&g));
            let z = assemble_impedance(&m, &g, &full, &wp).unwrap();
            let f = TangentialField::from_vector_fn(full.clone(), |x| pw.field(x));
            let zf = apply_impedance(&z, &f).unwrap();
            let mut num = 0.0;
            let mut den = 0.0;
            for (b, &e) in full.dofs().iter().enumerate() {
                // rim edges mix the traces of two faces
                if g.edge_faces(e).len() > 1 {
                    continue;
                }
                let nu = full.normal(b).map(|v| C64::new(v, 0.0));
                let x = g.edge_midpoint(e);
                let exact = crate::forward::ccross(nu, pw.curl(x))[g.edge_direction(e)];
                num += full.area(b) * (zf.values()[b] - exact).norm_sqr();
                den += full.area(b) * exact.norm_sqr();
            }
            errs.push((num / den).sqrt());
        }
        assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn identical_media_cancel() {
        let (g, m, wp) = setup(6, 2.0);
        let top = Arc::new(BoundaryPatch::top(&g));
        let za = assemble_impedance(&m, &g, &top, &wp).unwrap();
        let zb = assemble_impedance(&m, &g, &top, &wp).unwrap();
        assert!(za.difference(&zb).unwrap().norm_max() == 0.0);
        let f1 = TangentialField::new(
            top.clone(),
            (0..top.len()).map(|i| C64::new((0.3 * i as f64).sin(), 0.0)).collect(),
        )
        .unwrap();
        let f2 = TangentialField::new(
            top.clone(),
            (0..top.len()).map(|i| C64::new(0.0, (0.2 * i as f64).cos())).collect(),
        )
        .unwrap();
        let rep =
            alessandrini_residual_with(&m, &m, &f1, &f2, &g, &top, &wp, TraceScheme::Variational)
                .unwrap();
        assert_eq!(rep.volume_side, C64::new(0.0, 0.0));
        assert!(rep.boundary_side.norm() <= rep.floor, "{rep:?}");
        let same = alessandrini_residual(&m, &m, &f1, &f1, &g, &top, &wp).unwrap();
        assert_eq!(same.boundary_side, C64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_contrast_near_boundary() {
        let (g, m, wp) = setup(8, 2.0);
        let sb = crate::medium::SupportBox::new([0.05, 0.3, 0.3], [0.5, 0.7, 0.7]).unwrap();
        let bumped = RefractiveIndexField::from_fn(&g, C64::new(1.0, 0.0), sb, |_| C64::new(1.1, 0.0))
                .unwrap();
        let top = Arc::new(BoundaryPatch::top(&g));
        let f = TangentialField::basis(top.clone(), 0);
        assert!(matches!(
            alessandrini_residual(&m, &bumped, &f, &f, &g, &top, &wp),
            Err(Error::SupportViolation(_))
        ));
    }
}
