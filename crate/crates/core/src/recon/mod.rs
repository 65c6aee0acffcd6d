//! Fourier samples of the contrast from impedance data, and their inversion.

mod born;
mod volume;

pub use born::{joint_table, BackgroundModel, BackgroundOptions, JointOptions};
pub use volume::{
    dft_modes, invert_fourier, invert_fourier_with, relative_l2, ContrastVolume, Window,
};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::cgo::{
    cgo_field, cgo_pair_with, cgo_trace_guarded, n_xi_matrix, CgoFrame, CgoPair, CVec3,
    Dispersion, OVERFLOW_GUARD,
};
use crate::error::{Error, Result};
use crate::grid::{dot3, norm3, BoxGrid};
use crate::impedance::{spectral_norm, ImpedanceOperator};
use crate::patch::{BoundaryPatch, TangentialField};

/// Probing scale as a function of `|l|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SSchedule {
    /// `s = max(k_factor·k, l_factor·|l|)`
    Scaled { k_factor: f64, l_factor: f64 },
    Fixed(f64),
}

impl Default for SSchedule {
    fn default() -> Self {
        SSchedule::Scaled {
            k_factor: 1.5,
            l_factor: 0.75,
        }
    }
}

impl SSchedule {
    fn raw(&self, l_norm: f64, k: f64) -> f64 {
        match *self {
            SSchedule::Scaled { k_factor, l_factor } => (k_factor * k).max(l_factor * l_norm),
            SSchedule::Fixed(s) => s,
        }
    }
}

/// Fourier targets `l = 2π m / extent` with `|l| ≤ l_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct LGrid {
    grid: BoxGrid,
    k: f64,
    l_max: f64,
    schedule: SSchedule,
    guard: f64,
    modes: Vec<[i64; 3]>,
}

impl LGrid {
    pub fn new(grid: &BoxGrid, k: f64, l_max: f64, schedule: SSchedule) -> Result<Self> {
        if !(l_max >= 0.0) || !l_max.is_finite() {
            return Err(Error::Config(format!("l_max must be nonnegative, got {l_max}")));
        }
        if !(k > 0.0) {
            return Err(Error::InvalidWaveParams(format!("k must be positive, got {k}")));
        }
        let s_min = match schedule {
            SSchedule::Scaled { k_factor, l_factor } => {
                if !(k_factor > 0.0) || !(l_factor >= 0.0) {
                    return Err(Error::Config("s-schedule factors must be positive".into()));
                }
                k_factor * k
            }
            SSchedule::Fixed(s) => s,
        };
        if !(s_min > 0.0) {
            return Err(Error::Config(format!("s must be positive, got {s_min}")));
        }
        let ext = grid.extent();
        let cells = grid.cells();
        let mut mmax = [0i64; 3];
        for a in 0..3 {
            mmax[a] = (l_max * ext[a] / (2.0 * std::f64::consts::PI)).floor() as i64;
            // keep every sample strictly below the Nyquist index so the
            // synthesis on cell centers stays alias free
            if 2 * mmax[a] >= cells[a] as i64 {
                return Err(Error::Config(format!(
                    "l_max = {l_max} exceeds the grid's Nyquist limit along axis {a}"
                )));
            }
        }
        let mut modes = Vec::new();
        for mz in -mmax[2]..=mmax[2] {
            for my in -mmax[1]..=mmax[1] {
                for mx in -mmax[0]..=mmax[0] {
                    let m = [mx, my, mz];
                    let l = mode_to_l(&ext, m);
                    // tolerance keeps lattice points that sit on the sphere
                    if norm3(l) <= l_max * (1.0 + 1e-12) {
                        modes.push(m);
                    }
                }
            }
        }
        Ok(Self {
            grid: *grid,
            k,
            l_max,
            schedule,
            guard: OVERFLOW_GUARD,
            modes,
        })
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn l_max(&self) -> f64 {
        self.l_max
    }

    pub fn schedule(&self) -> SSchedule {
        self.schedule
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[[i64; 3]] {
        &self.modes
    }

    pub fn l(&self, i: usize) -> [f64; 3] {
        mode_to_l(&self.grid.extent(), self.modes[i])
    }

    pub fn samples(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.l(i)).collect()
    }

    /// Scheduled `s` for `l`, capped so that `(s + g)·diam` stays within
    /// the overflow guard.
    pub fn s_for(&self, l: [f64; 3]) -> f64 {
        let ln = norm3(l);
        let s = self.schedule.raw(ln, self.k);
        let rate = self.guard / self.grid.diameter();
        // (s + g)² = s² + |l|²/4 − k² for the probing dispersion
        let cap2 = rate * rate - 0.25 * ln * ln + self.k * self.k;
        if cap2 > 0.0 {
            s.min(cap2.sqrt() * (1.0 - 1e-12))
        } else {
            s
        }
    }
}

pub(crate) fn mode_to_l(ext: &[f64; 3], m: [i64; 3]) -> [f64; 3] {
    let tau = 2.0 * std::f64::consts::PI;
    [
        tau * m[0] as f64 / ext[0],
        tau * m[1] as f64 / ext[1],
        tau * m[2] as f64 / ext[2],
    ]
}

/// How a table value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// leading-order CGO traces inserted directly
    Linearized,
    /// CGO traces from the regularized boundary equation
    Full,
    /// Born least-squares fit of all samples at once from background fields
    Joint,
    /// transform of a known volume or a model
    Synthetic,
}

impl Route {
    pub fn label(&self) -> &'static str {
        match self {
            Route::Linearized => "linearized",
            Route::Full => "full",
            Route::Joint => "joint",
            Route::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linearized" => Ok(Route::Linearized),
            "full" => Ok(Route::Full),
            "joint" => Ok(Route::Joint),
            "synthetic" => Ok(Route::Synthetic),
            _ => Err(Error::Config(format!("unknown route '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourierSample {
    pub l: [f64; 3],
    pub value: C64,
    /// probing scale (0 when no CGO pair was involved)
    pub s: f64,
    /// reason the sample was dropped, if it was
    pub failure: Option<String>,
}

impl FourierSample {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// `l ↦ Λ(l)` samples, `Λ(l) ≈ ∫ (n − ñ)(x) e^{i l·x} dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTable {
    pub route: Route,
    pub samples: Vec<FourierSample>,
}

impl FourierTable {
    pub fn new(route: Route, samples: Vec<FourierSample>) -> Self {
        Self { route, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| !s.ok()).count()
    }

    /// Value at `l` (matched to 1e-9 relative), if present and valid.
    pub fn get(&self, l: [f64; 3]) -> Option<C64> {
        let tol = 1e-9 * norm3(l).max(1.0);
        self.samples
            .iter()
            .find(|s| s.ok() && (0..3).all(|i| (s.l[i] - l[i]).abs() <= tol))
            .map(|s| s.value)
    }

    /// `Σ |Λ(−l) − conj Λ(l)| / Σ |Λ(l)|`; zero for real contrasts.
    pub fn hermitian_defect(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for s in self.samples.iter().filter(|s| s.ok()) {
            den += s.value.norm();
            if let Some(v) = self.get([-s.l[0], -s.l[1], -s.l[2]]) {
                num += (v - s.value.conj()).norm();
            }
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Keeps samples with `|l| ≤ cutoff`.
    pub fn truncated(&self, cutoff: f64) -> FourierTable {
        FourierTable {
            route: self.route,
            samples: self
                .samples
                .iter()
                .filter(|s| norm3(s.l) <= cutoff * (1.0 + 1e-12))
                .cloned()
                .collect(),
        }
    }
}

/// `k⁻² Σ_b area_b u_b ((Z_n − Z_ñ) v)_b`.
fn boundary_form(d: &Mat<C64>, patch: &BoundaryPatch, k: f64, u: &[C64], v: &[C64]) -> C64 {
    let m = patch.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..m {
        if u[i] == C64::new(0.0, 0.0) {
            continue;
        }
        let mut dv = C64::new(0.0, 0.0);
        for j in 0..m {
            dv += d[(i, j)] * v[j];
        }
        acc += patch.area(i) * u[i] * dv;
    }
    acc / (k * k)
}

/// Probing-pair options shared by the CGO routes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeOptions {
    pub dispersion: Dispersion,
    pub guard: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            dispersion: Dispersion::Maxwell,
            guard: OVERFLOW_GUARD,
        }
    }
}

/// `k⁻² ∫_Γ (ν×E_{ξ₁})·(Z_n − Z_ñ)(ν×V_{ξ₂}) ds` with leading-order CGO traces.
///
/// Equals `∫ E·(n − ñ)V dx` for the solutions `E` (index `n`) and `V` (index
/// `ñ`) driven by those traces.
pub fn lambda_linearized(
    z_n: &ImpedanceOperator,
    z_t: &ImpedanceOperator,
    pair: &CgoPair,
) -> Result<C64> {
    lambda_linearized_guarded(z_n, z_t, pair, OVERFLOW_GUARD)
}

pub fn lambda_linearized_guarded(
    z_n: &ImpedanceOperator,
    z_t: &ImpedanceOperator,
    pair: &CgoPair,
    guard: f64,
) -> Result<C64> {
    let d = z_n.difference(z_t)?;
    let patch = z_n.patch();
    let f1 = cgo_trace_guarded(pair.xi1, pair.eta1, patch, guard)?;
    let f2 = cgo_trace_guarded(pair.xi2, pair.eta2, patch, guard)?;
    Ok(boundary_form(&d, patch, z_n.k(), f1.values(), f2.values()))
}

/// Options for [`lambda_full`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FullOptions {
    /// Tikhonov parameter relative to `‖Z + N_ξ‖₂`
    pub reg_rel: f64,
    /// relative residual above which a sample is rejected
    pub max_residual: f64,
    pub guard: f64,
}

impl Default for FullOptions {
    fn default() -> Self {
        Self {
            reg_rel: 1e-6,
            max_residual: 1e-2,
            guard: OVERFLOW_GUARD,
        }
    }
}

/// Right side of the boundary equation at leading order: for
/// `E = e^{x·ξ}η`, `ν×curl E + N_ξ(ν×E) = (ν·E) ξ_tan` on Γ.
fn boundary_rhs(xi: CVec3, eta: CVec3, patch: &Arc<BoundaryPatch>) -> Vec<C64> {
    let grid = patch.grid();
    patch
        .dofs()
        .iter()
        .enumerate()
        .map(|(b, &edge)| {
            let x = grid.edge_midpoint(edge);
            let nu = patch.normal(b);
            let e = cgo_field(xi, eta, x);
            let nde = e[0] * nu[0] + e[1] * nu[1] + e[2] * nu[2];
            nde * xi[grid.edge_direction(edge)]
        })
        .collect()
}

/// `x = argmin ‖Mx − b‖² + reg²‖x‖²` via the SVD; returns `(x, ‖Mx − b‖/‖b‖)`.
pub(crate) fn tikhonov_solve(m: &Mat<C64>, b: &[C64], reg: f64) -> Result<(Vec<C64>, f64)> {
    let svd = m
        .thin_svd()
        .map_err(|e| Error::NoConvergence(format!("SVD failed: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let r = s.nrows();
    let mut coef = vec![C64::new(0.0, 0.0); r];
    for (i, c) in coef.iter_mut().enumerate() {
        let mut p = C64::new(0.0, 0.0);
        for j in 0..b.len() {
            p += u[(j, i)].conj() * b[j];
        }
        let si = s[i].re;
        *c = p * (si / (si * si + reg * reg));
    }
    let n = m.ncols();
    let mut x = vec![C64::new(0.0, 0.0); n];
    for (j, xj) in x.iter_mut().enumerate() {
        for i in 0..r {
            *xj += v[(j, i)] * coef[i];
        }
    }
    let mut rn = 0.0;
    let mut bn = 0.0;
    for i in 0..m.nrows() {
        let mut mx = C64::new(0.0, 0.0);
        for j in 0..n {
            mx += m[(i, j)] * x[j];
        }
        rn += (mx - b[i]).norm_sqr();
        bn += b[i].norm_sqr();
    }
    let rel = if bn > 0.0 { (rn / bn).sqrt() } else { rn.sqrt() };
    Ok((x, rel))
}

/// Regularized boundary-equation route: `u₁ = (Z_n + N_{ξ₁})⁻¹ b₁`,
/// `u₂ = (Z_ñ + N_{ξ₂})⁻¹ b₂`, then `k⁻² ∫_Γ u₁·(Z_n − Z_ñ)u₂ ds`.
pub fn lambda_full(
    z_n: &ImpedanceOperator,
    z_t: &ImpedanceOperator,
    pair: &CgoPair,
    reg_rel: f64,
) -> Result<C64> {
    lambda_full_with(
        z_n,
        z_t,
        pair,
        &FullOptions {
            reg_rel,
            ..Default::default()
        },
    )
}

pub fn lambda_full_with(
    z_n: &ImpedanceOperator,
    z_t: &ImpedanceOperator,
    pair: &CgoPair,
    opts: &FullOptions,
) -> Result<C64> {
    if !(opts.reg_rel > 0.0) {
        return Err(Error::Config(format!(
            "regularization must be positive, got {}",
            opts.reg_rel
        )));
    }
    let d = z_n.difference(z_t)?;
    let patch = z_n.patch();
    let grid = patch.grid();
    let growth = pair.growth_rate() * grid.diameter();
    if !(growth <= opts.guard) {
        return Err(Error::OverflowGuard {
            value: growth,
            limit: opts.guard,
        });
    }
    if d.norm_max() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let solve = |z: &ImpedanceOperator, xi: CVec3, eta: CVec3| -> Result<Vec<C64>> {
        let m = z.matrix() + n_xi_matrix(xi, patch);
        let reg = opts.reg_rel * spectral_norm(&m);
        let b = boundary_rhs(xi, eta, patch);
        let (u, res) = tikhonov_solve(&m, &b, reg)?;
        if !(res <= opts.max_residual) {
            return Err(Error::IllConditioned(res));
        }
        Ok(u)
    };
    let u1 = solve(z_n, pair.xi1, pair.eta1)?;
    let u2 = solve(z_t, pair.xi2, pair.eta2)?;
    Ok(boundary_form(&d, patch, z_n.k(), &u1, &u2))
}

/// Options for [`scan_fourier_with`].
#[derive(Clone, Debug)]
pub struct ScanOptions {
    pub route: Route,
    pub probe: ProbeOptions,
    pub full: FullOptions,
    /// background fields for [`Route::Joint`]
    pub background: Option<Arc<BackgroundModel>>,
    pub joint: JointOptions,
}

impl ScanOptions {
    pub fn new(route: Route) -> Self {
        Self {
            route,
            probe: ProbeOptions::default(),
            full: FullOptions::default(),
            background: None,
            joint: JointOptions::default(),
        }
    }
}

/// CGO pair used for sample `l` of `lgrid`.
pub fn probe_pair(lgrid: &LGrid, l: [f64; 3], dispersion: Dispersion) -> Result<CgoPair> {
    let s = lgrid.s_for(l);
    let frame = CgoFrame::for_l(l, s, lgrid.k())?;
    cgo_pair_with(&frame, dispersion)
}

/// One Λ value per `l` in `lgrid`.
pub fn scan_fourier(
    z_n: &ImpedanceOperator,
    z_t: &ImpedanceOperator,
    lgrid: &LGrid,
    route: Route,
) -> Result<FourierTable> {
    scan_fourier_with(z_n, z_t, lgrid, &ScanOptions::new(route))
}

pub fn scan_fourier_with(
    z_n: &ImpedanceOperator,
    z_t: &ImpedanceOperator,
    lgrid: &LGrid,
    opts: &ScanOptions,
) -> Result<FourierTable> {
    z_n.compatible(z_t)?;
    if z_n.patch().grid() != lgrid.grid() {
        return Err(Error::Config("l-grid and impedance data use different grids".into()));
    }
    if (z_n.k() - lgrid.k()).abs() > 1e-12 * z_n.k() {
        return Err(Error::InvalidWaveParams(format!(
            "l-grid built for k = {} but data at k = {}",
            lgrid.k(),
            z_n.k()
        )));
    }
    let table = match opts.route {
        Route::Joint => {
            let model = opts.background.as_ref().ok_or_else(|| {
                Error::Config("the joint route needs a background model".into())
            })?;
            joint_table(model, z_n, z_t, lgrid, &opts.joint)?
        }
        Route::Linearized | Route::Full => {
            let guard = opts.probe.guard.min(lgrid.guard());
            let samples = (0..lgrid.len())
                .map(|i| {
                    let l = lgrid.l(i);
                    let s = lgrid.s_for(l);
                    let v = probe_pair(lgrid, l, opts.probe.dispersion).and_then(|p| {
                        if opts.route == Route::Linearized {
                            lambda_linearized_guarded(z_n, z_t, &p, guard)
                        } else {
                            lambda_full_with(z_n, z_t, &p, &FullOptions { guard, ..opts.full })
                        }
                    });
                    match v {
                        Ok(value) => FourierSample {
                            l,
                            value,
                            s,
                            failure: None,
                        },
                        Err(e) => FourierSample {
                            l,
                            value: C64::new(0.0, 0.0),
                            s,
                            failure: Some(format!("{}: {e}", e.class())),
                        },
                    }
                })
                .collect();
            FourierTable::new(opts.route, samples)
        }
        Route::Synthetic => {
            return Err(Error::Config("synthetic tables are not scanned".into()));
        }
    };
    let failed = table.failures();
    if 2 * failed > table.len() {
        return Err(Error::TooManyFailures {
            failed,
            total: table.len(),
        });
    }
    Ok(table)
}

/// Direct quadrature `∫ E·(n − ñ)V dx` over edge dual volumes.
pub fn volume_pairing(grid: &BoxGrid, dn: &[C64], e: &[C64], v: &[C64]) -> C64 {
    (0..grid.n_edges())
        .filter(|&i| dn[i] != C64::new(0.0, 0.0))
        .map(|i| grid.edge_weight(i) * e[i] * dn[i] * v[i])
        .sum()
}

/// Transform of closed-form `Λ(l)` values onto `lgrid` (bypasses the solver).
pub fn synthetic_table(lgrid: &LGrid, f: impl Fn([f64; 3]) -> C64) -> FourierTable {
    FourierTable::new(
        Route::Synthetic,
        (0..lgrid.len())
            .map(|i| {
                let l = lgrid.l(i);
                FourierSample {
                    l,
                    value: f(l),
                    s: 0.0,
                    failure: None,
                }
            })
            .collect(),
    )
}

/// `Λ(l)` of a Gaussian `a·exp(−|x − x₀|²/(2σ²))` in free space.
pub fn gaussian_transform(amplitude: f64, sigma: f64, center: [f64; 3], l: [f64; 3]) -> C64 {
    let tau = 2.0 * std::f64::consts::PI;
    let mag = amplitude * (tau * sigma * sigma).powf(1.5) * (-0.5 * sigma * sigma * dot3(l, l)).exp();
    C64::from_polar(mag, dot3(l, center))
}

/// Data `f1`, `f2` and the CGO pair for the quadrature oracle of a sample.
pub fn cgo_traces(pair: &CgoPair, patch: &Arc<BoundaryPatch>) -> Result<(TangentialField, TangentialField)> {
    Ok((
        cgo_trace_guarded(pair.xi1, pair.eta1, patch, OVERFLOW_GUARD)?,
        cgo_trace_guarded(pair.xi2, pair.eta2, patch, OVERFLOW_GUARD)?,
    ))
}
