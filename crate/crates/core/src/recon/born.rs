//! Joint Born least-squares route.
//!
//! With background fields `E⁰_a` for each Γ basis datum, the pairing gives
//! `k⁻² area_a (Z_n − Z_ñ)_ab ≈ Σ_e w_e E⁰_a(e) (n − ñ)_e E⁰_b(e)`. The contrast
//! is modelled as a trigonometric polynomial over the targets of an [`LGrid`]
//! and fitted to all data entries at once.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use super::{FourierSample, FourierTable, LGrid, Route};
use crate::error::{Error, Result};
use crate::forward::{curl_trace, BvpSolver, CurlCurlSystem, SolverOptions, TraceScheme};
use crate::grid::{dot3, BoxGrid};
use crate::impedance::ImpedanceOperator;
use crate::medium::RefractiveIndexField;
use crate::patch::BoundaryPatch;
use crate::wave::WaveParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackgroundOptions {
    pub solver: SolverOptions,
    /// cells between the outer boundary and the fitting region
    pub inset: usize,
    /// singular values below `rank_tol·σ_max` are discarded
    pub rank_tol: f64,
    pub block: usize,
}

impl Default for BackgroundOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            inset: 2,
            rank_tol: 1e-10,
            block: 64,
        }
    }
}

/// Background fields on the fitting region, compressed by an SVD, together
/// with the background impedance matrix computed from the same solves.
#[derive(Clone, Debug)]
pub struct BackgroundModel {
    grid: BoxGrid,
    patch: Arc<BoundaryPatch>,
    k: f64,
    background: C64,
    region: Vec<usize>,
    /// `U S` of `√W Φ = U S Vᴴ`, region edges × rank
    y: Mat<C64>,
    /// right singular vectors, Γ dofs × rank
    v: Mat<C64>,
    z_background: ImpedanceOperator,
}

impl BackgroundModel {
    /// Solves the homogeneous background problem for every Γ basis datum.
    pub fn new(
        grid: &BoxGrid,
        background: C64,
        patch: &Arc<BoundaryPatch>,
        wp: &WaveParams,
        opts: &BackgroundOptions,
    ) -> Result<Self> {
        let n0 = RefractiveIndexField::homogeneous(grid, background)?;
        let sys = Arc::new(CurlCurlSystem::new(grid, Arc::new(n0), wp)?);
        Self::from_system(sys, patch, opts)
    }

    pub fn from_system(
        sys: Arc<CurlCurlSystem>,
        patch: &Arc<BoundaryPatch>,
        opts: &BackgroundOptions,
    ) -> Result<Self> {
        let grid = *sys.grid();
        if patch.grid() != &grid {
            return Err(Error::InvalidPatch("patch lives on another grid".into()));
        }
        if !sys.medium().is_homogeneous() {
            return Err(Error::InvalidMedium("background must be homogeneous".into()));
        }
        let cells = grid.cells();
        if 2 * opts.inset >= cells.iter().copied().min().unwrap_or(0) {
            return Err(Error::Config(format!(
                "inset of {} cells leaves no fitting region",
                opts.inset
            )));
        }
        let h = grid.spacing();
        let ext = grid.extent();
        let region: Vec<usize> = (0..grid.n_edges())
            .filter(|&e| {
                let x = grid.edge_midpoint(e);
                (0..3).all(|a| {
                    let m = opts.inset as f64 * h[a] - 1e-9 * h[a];
                    x[a] >= m && x[a] <= ext[a] - m
                }) && !grid.is_boundary_edge(e)
            })
            .collect();
        let m = patch.len();
        let ne = grid.n_edges();
        let nb = sys.boundary_edges().len();
        let solver = BvpSolver::new(sys.clone(), opts.solver)?;
        let sqrt_w: Vec<f64> = region.iter().map(|&e| grid.edge_weight(e).sqrt()).collect();
        let mut psi = Mat::<C64>::zeros(region.len(), m);
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
                for (r, &edge) in region.iter().enumerate() {
                    psi[(r, start + c)] = e[edge] * sqrt_w[r];
                }
                let tr = curl_trace(Some(&sys), &grid, e, patch, TraceScheme::Variational)?;
                for (b, val) in tr.values().iter().enumerate() {
                    z[(b, start + c)] = *val;
                }
            }
            start += cols;
        }
        let z_background = ImpedanceOperator::from_matrix(
            patch.clone(),
            z,
            sys.wave().k(),
            sys.medium().background(),
            TraceScheme::Variational,
        )?;
        let svd = psi
            .thin_svd()
            .map_err(|e| Error::NoConvergence(format!("SVD of background fields: {e:?}")))?;
        let s = svd.S().column_vector();
        let smax = if s.nrows() > 0 { s[0].re } else { 0.0 };
        let rank = (0..s.nrows())
            .take_while(|&i| s[i].re > opts.rank_tol * smax)
            .count();
        if rank == 0 {
            return Err(Error::RankDeficient);
        }
        let u = svd.U();
        let y = Mat::from_fn(region.len(), rank, |i, j| u[(i, j)] * s[j]);
        let vv = svd.V();
        let v = Mat::from_fn(m, rank, |i, j| vv[(i, j)]);
        Ok(Self {
            grid,
            patch: patch.clone(),
            k: sys.wave().k(),
            background: sys.medium().background(),
            region,
            y,
            v,
            z_background,
        })
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn patch(&self) -> &Arc<BoundaryPatch> {
        &self.patch
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn background(&self) -> C64 {
        self.background
    }

    /// Edges on which the contrast is fitted.
    pub fn region(&self) -> &[usize] {
        &self.region
    }

    pub fn rank(&self) -> usize {
        self.y.ncols()
    }

    /// Right singular vectors of the weighted field matrix, Γ dofs × rank.
    pub fn right_vectors(&self) -> &Mat<C64> {
        &self.v
    }

    /// `Z_ñ` from the same basis solves.
    pub fn impedance(&self) -> &ImpedanceOperator {
        &self.z_background
    }

    /// Born prediction of `k⁻² area_a (Z_n − Z_ñ)_ab` in the reduced basis,
    /// `Yᵀ diag(c) Y`, for an edge contrast `c` over the region.
    pub fn predict_reduced(&self, contrast: &[C64]) -> Result<Mat<C64>> {
        if contrast.len() != self.region.len() {
            return Err(Error::DimensionMismatch {
                expected: self.region.len(),
                found: contrast.len(),
            });
        }
        let cy = Mat::from_fn(self.y.nrows(), self.y.ncols(), |i, j| contrast[i] * self.y[(i, j)]);
        Ok(self.y.transpose() * &cy)
    }

    /// `Vᵀ Λ V` with `Λ_ab = k⁻² area_a (Z_n − Z_ñ)_ab`.
    pub fn reduce_data(&self, z_n: &ImpedanceOperator, z_t: &ImpedanceOperator) -> Result<Mat<C64>> {
        z_n.compatible(z_t)?;
        if z_n.patch().dofs() != self.patch.dofs() || z_n.patch().grid() != &self.grid {
            return Err(Error::InvalidPatch(
                "impedance data and background model use different patches".into(),
            ));
        }
        let d = z_n.difference(z_t)?;
        let k2 = self.k * self.k;
        let lam = Mat::from_fn(d.nrows(), d.ncols(), |a, b| d[(a, b)] * (self.patch.area(a) / k2));
        Ok(self.v.transpose() * &lam * &self.v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointOptions {
    /// Tikhonov weight relative to the largest eigenvalue of the normal matrix
    pub lambda: f64,
    /// region rows per block when forming the normal matrix
    pub block: usize,
}

impl Default for JointOptions {
    fn default() -> Self {
        Self {
            lambda: 1e-5,
            block: 256,
        }
    }
}

/// Fits `c(x) = Σ_l γ_l e^{−il·x}` on the region to all Born data entries and
/// tabulates `Λ(l) = |Ω| γ_l`.
pub fn joint_table(
    model: &BackgroundModel,
    z_n: &ImpedanceOperator,
    z_t: &ImpedanceOperator,
    lgrid: &LGrid,
    opts: &JointOptions,
) -> Result<FourierTable> {
    if lgrid.grid() != &model.grid {
        return Err(Error::Config("l-grid and background model use different grids".into()));
    }
    if !(opts.lambda > 0.0) {
        return Err(Error::Config(format!(
            "joint regularization must be positive, got {}",
            opts.lambda
        )));
    }
    let lam = model.reduce_data(z_n, z_t)?;
    let ls = lgrid.samples();
    let nl = ls.len();
    if nl == 0 {
        return Ok(FourierTable::new(Route::Joint, Vec::new()));
    }
    if lam.norm_max() == 0.0 {
        return Ok(zero_table(&ls));
    }
    let grid = &model.grid;
    let no = model.region.len();
    let y = &model.y;
    let pos: Vec<[f64; 3]> = model.region.iter().map(|&e| grid.edge_midpoint(e)).collect();
    let b = Mat::from_fn(no, nl, |x, l| C64::from_polar(1.0, -dot3(ls[l], pos[x])));

    // rhs_x = Σ_pq conj(Y_xp) Λ'_pq conj(Y_xq)
    let ybar = y.conjugate().to_owned();
    let yl = &ybar * &lam;
    let dd = Mat::from_fn(no, 1, |x, _| {
        (0..y.ncols()).map(|q| yl[(x, q)] * ybar[(x, q)]).sum::<C64>()
    });
    let rhs = b.adjoint() * &dd;

    // G = Bᴴ (Q∘Q) B with Q = conj(Y) Yᵀ, accumulated over row blocks of Q
    let mut g = Mat::<C64>::zeros(nl, nl);
    let blk = opts.block.max(1);
    let mut start = 0;
    while start < no {
        let rows = blk.min(no - start);
        let ysub = ybar.subrows(start, rows);
        let mut q = ysub * y.transpose();
        for j in 0..no {
            for i in 0..rows {
                let v = q[(i, j)];
                q[(i, j)] = v * v;
            }
        }
        let qb = &q * &b;
        g += b.subrows(start, rows).adjoint() * &qb;
        start += rows;
    }
    let herm = Mat::from_fn(nl, nl, |i, j| 0.5 * (g[(i, j)] + g[(j, i)].conj()));
    let ev_max = herm
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::NoConvergence(format!("normal matrix spectrum: {e:?}")))?
        .into_iter()
        .fold(0.0f64, f64::max);
    if !(ev_max > 0.0) {
        return Err(Error::RankDeficient);
    }
    let mut reg = herm;
    for i in 0..nl {
        reg[(i, i)] += C64::new(opts.lambda * ev_max, 0.0);
    }
    let gamma = reg.partial_piv_lu().solve(&rhs);
    let vol = grid.volume();
    let samples = ls
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let value = gamma[(i, 0)] * vol;
            FourierSample {
                l,
                value,
                s: 0.0,
                failure: if value.re.is_finite() && value.im.is_finite() {
                    None
                } else {
                    Some("NO_CONVERGENCE: non-finite estimate".into())
                },
            }
        })
        .collect();
    Ok(FourierTable::new(Route::Joint, samples))
}

fn zero_table(ls: &[[f64; 3]]) -> FourierTable {
    FourierTable::new(
        Route::Joint,
        ls.iter()
            .map(|&l| FourierSample {
                l,
                value: C64::new(0.0, 0.0),
                s: 0.0,
                failure: None,
            })
            .collect(),
    )
}
