use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::system::{gradient_matrix, CurlCurlSystem};
use crate::error::{Error, Result};
use crate::grid::BoxGrid;
use crate::patch::TangentialField;
use crate::sparse::{cocg, Csr, Multifrontal};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    /// Direct up to `direct_limit` interior unknowns, iterative above.
    Auto,
    Direct,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// relative residual target
    pub tol: f64,
    pub direct_limit: usize,
    /// condition estimate above which the wave number is treated as resonant
    pub cond_limit: f64,
    pub max_refine: usize,
    pub max_iter: usize,
    /// estimate the condition number right after factorization
    pub check_condition: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::Auto,
            tol: 1e-10,
            direct_limit: 45_000,
            cond_limit: 1e12,
            max_refine: 4,
            max_iter: 20_000,
            check_condition: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveInfo {
    pub method: SolveMethod,
    /// Krylov iterations (iterative) or refinement sweeps (direct)
    pub iterations: usize,
    /// true when the solve reused an existing factorization
    pub reused_factorization: bool,
}

/// Electric field on every edge plus solve diagnostics.
#[derive(Clone, Debug)]
pub struct FieldSolution {
    pub grid: BoxGrid,
    pub e: Vec<C64>,
    pub residual_norm: f64,
    pub info: SolveInfo,
    /// wave number of the system that produced the field
    pub k: f64,
    /// constant index when the medium is homogeneous
    pub homogeneous_index: Option<C64>,
}

enum Backend {
    Direct(Multifrontal),
    Iterative { op: Csr, inv_diag: Vec<C64> },
}

/// A prepared solver for one system: factorization (or preconditioned Krylov
/// operator) shared by every right-hand side.
pub struct BvpSolver {
    sys: Arc<CurlCurlSystem>,
    backend: Backend,
    opts: SolverOptions,
    cond_estimate: Option<f64>,
    solves: std::sync::atomic::AtomicUsize,
}

impl BvpSolver {
    pub fn new(sys: Arc<CurlCurlSystem>, opts: SolverOptions) -> Result<Self> {
        let ni = sys.interior_edges().len();
        let direct = match opts.kind {
            SolverKind::Direct => true,
            SolverKind::Iterative => false,
            SolverKind::Auto => ni <= opts.direct_limit,
        };
        let backend = if direct {
            Backend::Direct(Multifrontal::factor(
                sys.interior_operator(),
                &sys.interior_coords(),
            ))
        } else {
            let op = regularized_interior(&sys);
            let inv_diag = op
                .diagonal()
                .iter()
                .map(|d| if d.norm() > 0.0 { d.inv() } else { C64::new(1.0, 0.0) })
                .collect();
            Backend::Iterative { op, inv_diag }
        };
        let mut s = Self {
            sys,
            backend,
            opts,
            cond_estimate: None,
            solves: std::sync::atomic::AtomicUsize::new(0),
        };
        if direct && opts.check_condition {
            let c = s.estimate_condition();
            s.cond_estimate = Some(c);
            if !(c <= opts.cond_limit) {
                return Err(Error::NearResonance(format!(
                    "condition estimate {c:.3e} exceeds {:.1e}",
                    opts.cond_limit
                )));
            }
        }
        Ok(s)
    }

    pub fn system(&self) -> &Arc<CurlCurlSystem> {
        &self.sys
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn method(&self) -> SolveMethod {
        match self.backend {
            Backend::Direct(_) => SolveMethod::Direct,
            Backend::Iterative { .. } => SolveMethod::Iterative,
        }
    }

    pub fn condition_estimate(&self) -> Option<f64> {
        self.cond_estimate
    }

    pub fn factor_stats(&self) -> Option<&crate::sparse::FactorStats> {
        match &self.backend {
            Backend::Direct(f) => Some(f.stats()),
            Backend::Iterative { .. } => None,
        }
    }

    /// Solves with Dirichlet data `f`; data on a sub-patch extend by zero.
    pub fn solve(&self, f: &TangentialField) -> Result<FieldSolution> {
        if f.patch().grid() != self.sys.grid() {
            return Err(Error::InvalidPatch("boundary data live on another grid".into()));
        }
        let eb: Vec<C64> = self
            .sys
            .boundary_edges()
            .iter()
            .map(|&e| f.at_edge(e))
            .collect();
        let reused = self.solves.fetch_add(1, std::sync::atomic::Ordering::Relaxed) > 0;
        let (e, res, iters) = self.solve_block_impl(&eb, 1)?;
        let n = self.sys.medium();
        Ok(FieldSolution {
            grid: *self.sys.grid(),
            e,
            residual_norm: res[0],
            info: SolveInfo {
                method: self.method(),
                iterations: iters,
                reused_factorization: reused && matches!(self.backend, Backend::Direct(_)),
            },
            k: self.sys.wave().k(),
            homogeneous_index: n.is_homogeneous().then(|| n.background()),
        })
    }

    /// Solves for `m` sets of boundary values (`boundary_edges().len()` × `m`,
    /// column-major) and returns the edge fields (`n_edges` × `m`).
    pub fn solve_boundary_block(&self, eb: &[C64], m: usize) -> Result<Vec<C64>> {
        self.solves.fetch_add(m, std::sync::atomic::Ordering::Relaxed);
        Ok(self.solve_block_impl(eb, m)?.0)
    }

    fn solve_block_impl(&self, eb: &[C64], m: usize) -> Result<(Vec<C64>, Vec<f64>, usize)> {
        let nb = self.sys.boundary_edges().len();
        let ni = self.sys.interior_edges().len();
        let ne = self.sys.grid().n_edges();
        if eb.len() != nb * m {
            return Err(Error::DimensionMismatch {
                expected: nb * m,
                found: eb.len(),
            });
        }
        let mut rhs = vec![C64::new(0.0, 0.0); ni * m];
        for j in 0..m {
            self.sys.lifting().matvec_acc(
                &eb[j * nb..(j + 1) * nb],
                C64::new(-1.0, 0.0),
                &mut rhs[j * ni..(j + 1) * ni],
            );
        }
        let (xi, res, iters) = self.solve_interior(&rhs, m)?;
        let mut out = vec![C64::new(0.0, 0.0); ne * m];
        for j in 0..m {
            let col = &mut out[j * ne..(j + 1) * ne];
            for (p, &e) in self.sys.interior_edges().iter().enumerate() {
                col[e] = xi[p + j * ni];
            }
            for (p, &e) in self.sys.boundary_edges().iter().enumerate() {
                col[e] = eb[p + j * nb];
            }
        }
        Ok((out, res, iters))
    }

    /// Solves `A_II X = B` for `m` columns; returns the solution, per-column
    /// relative residuals and the sweep/iteration count.
    pub fn solve_interior(&self, b: &[C64], m: usize) -> Result<(Vec<C64>, Vec<f64>, usize)> {
        let ni = self.sys.interior_edges().len();
        let a = self.sys.interior_operator();
        match &self.backend {
            Backend::Direct(f) => {
                let mut x = b.to_vec();
                f.solve_in_place(&mut x, m);
                let mut sweeps = 0;
                loop {
                    let mut r = vec![C64::new(0.0, 0.0); ni * m];
                    let mut rel = vec![0.0; m];
                    for j in 0..m {
                        let bj = &b[j * ni..(j + 1) * ni];
                        let rj = &mut r[j * ni..(j + 1) * ni];
                        a.matvec(&x[j * ni..(j + 1) * ni], rj);
                        for i in 0..ni {
                            rj[i] = bj[i] - rj[i];
                        }
                        let bn = crate::sparse::norm2(bj);
                        rel[j] = if bn > 0.0 {
                            crate::sparse::norm2(rj) / bn
                        } else {
                            crate::sparse::norm2(rj)
                        };
                    }
                    let worst = rel.iter().cloned().fold(0.0, f64::max);
                    if worst <= self.opts.tol {
                        return Ok((x, rel, sweeps));
                    }
                    if sweeps >= self.opts.max_refine || !worst.is_finite() {
                        return Err(Error::NearResonance(format!(
                            "relative residual {worst:.3e} after {sweeps} refinement sweeps"
                        )));
                    }
                    f.solve_in_place(&mut r, m);
                    for i in 0..ni * m {
                        x[i] += r[i];
                    }
                    sweeps += 1;
                }
            }
            Backend::Iterative { op, inv_diag } => {
                let mut x = vec![C64::new(0.0, 0.0); ni * m];
                let mut rel = vec![0.0; m];
                let mut total = 0;
                for j in 0..m {
                    let bj = &b[j * ni..(j + 1) * ni];
                    let xj = &mut x[j * ni..(j + 1) * ni];
                    let rep = cocg(
                        |v, y| op.matvec(v, y),
                        inv_diag,
                        bj,
                        xj,
                        self.opts.tol * 0.5,
                        self.opts.max_iter,
                    );
                    total += rep.iterations;
                    let ax = a.mul_vec(xj);
                    let bn = crate::sparse::norm2(bj);
                    let rn = ax
                        .iter()
                        .zip(bj)
                        .map(|(p, q)| (q - p).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    rel[j] = if bn > 0.0 { rn / bn } else { rn };
                    if !rep.converged || !(rel[j] <= self.opts.tol * 10.0) {
                        return Err(Error::NearResonance(format!(
                            "Krylov solve stalled at relative residual {:.3e} after {} iterations",
                            rel[j], rep.iterations
                        )));
                    }
                }
                Ok((x, rel, total))
            }
        }
    }

    /// Hager–Higham estimate of the 1-norm condition number of `A_II`.
    fn estimate_condition(&self) -> f64 {
        let Backend::Direct(f) = &self.backend else {
            return f64::NAN;
        };
        let a = self.sys.interior_operator();
        let n = a.nrows();
        if n == 0 {
            return 1.0;
        }
        let anorm = a.norm_one();
        let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0f64;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = f.solve(&x);
            let ynorm: f64 = y.iter().map(|v| v.norm()).sum();
            if !ynorm.is_finite() {
                return f64::INFINITY;
            }
            if ynorm <= est {
                break;
            }
            est = ynorm;
            // A is symmetric, so A⁻ᴴ v = conj(A⁻¹ conj v)
            let xi: Vec<C64> = y
                .iter()
                .map(|v| {
                    let m = v.norm();
                    if m > 0.0 {
                        (v / m).conj()
                    } else {
                        C64::new(1.0, 0.0)
                    }
                })
                .collect();
            let z: Vec<C64> = f.solve(&xi).into_iter().map(|v| v.conj()).collect();
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |acc, t| if t.1 > acc.1 { t } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(p, q)| (p.conj() * q).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![C64::new(0.0, 0.0); n];
            x[j] = C64::new(1.0, 0.0);
        }
        // alternating-sign test vector guards against an unlucky start
        let alt: Vec<C64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                C64::new(s * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0)), 0.0)
            })
            .collect();
        let y = f.solve(&alt);
        let alt_est = 2.0 * y.iter().map(|v| v.norm()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_est) * anorm
    }
}

/// `A_II + τ W N G Λ⁻¹ Gᵀ W N` restricted to interior unknowns, with `G` the
/// gradient on interior nodes and `Λ` the nodal volumes. The added term
/// vanishes on solutions (their weighted divergence is zero at interior
/// nodes) and lifts the gradient near-null space so Krylov iterations converge.
fn regularized_interior(sys: &CurlCurlSystem) -> Csr {
    let grid = sys.grid();
    let [nx, ny, nz] = grid.cells();
    let g = gradient_matrix(grid);
    let n = sys.medium().values();
    let tau = 1.0 / sys.medium().background().norm_sqr();
    let vol = grid.cell_volume();
    let ni = sys.interior_edges().len();
    // columns of G for interior nodes, as lists of (interior edge, coefficient)
    let mut cols: Vec<Vec<(usize, C64)>> = vec![Vec::new(); grid.n_nodes()];
    for &e in sys.interior_edges() {
        let (c, v) = g.row(e);
        let scale = grid.edge_weight(e) * n[e];
        for (node, gv) in c.iter().zip(v) {
            cols[*node].push((sys.local_index(e), gv * scale));
        }
    }
    let mut trip = Vec::new();
    for k in 1..nz {
        for j in 1..ny {
            for i in 1..nx {
                let col = &cols[grid.node_index([i, j, k])];
                let w = tau / vol;
                for (p, vp) in col {
                    for (q, vq) in col {
                        trip.push((*p, *q, vp * vq * w));
                    }
                }
            }
        }
    }
    let m = Csr::from_triplets(ni, ni, &trip);
    sys.interior_operator().add_scaled(&m, C64::new(1.0, 0.0))
}

/// One-shot solve of the boundary value problem with Dirichlet data `f`.
pub fn solve_bvp(sys: &CurlCurlSystem, f: &TangentialField) -> Result<FieldSolution> {
    BvpSolver::new(Arc::new(sys.clone()), SolverOptions::default())?.solve(f)
}
