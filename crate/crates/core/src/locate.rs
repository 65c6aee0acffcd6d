//! Small inclusions: scenario synthesis, the leading-order boundary
//! functional, and recovery of centers and effective moments.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forward::{cdot, curl_trace, BvpSolver, CMat3, TraceScheme};
use crate::grid::{dot3, norm3, BoxGrid};
use crate::impedance::ImpedanceOperator;
use crate::medium::{RefractiveIndexField, SupportBox};
use crate::patch::TangentialField;
use crate::recon::{
    invert_fourier, scan_fourier_with, ContrastVolume, FourierTable, LGrid, ScanOptions, Window,
};

/// Rejection-sampling budget of [`synthesize_scenario`].
pub const PLACEMENT_BUDGET: usize = 10_000;

/// `m` balls `z_j + αB` with indices `n_j` in a homogeneous background.
#[derive(Clone, Debug, PartialEq)]
pub struct InclusionScenario {
    pub extent: [f64; 3],
    pub centers: Vec<[f64; 3]>,
    pub alpha: f64,
    pub indices: Vec<C64>,
    /// minimum center separation
    pub c0: f64,
    /// minimum center clearance from ∂Ω
    pub c: f64,
}

impl InclusionScenario {
    /// Checks separation, clearance and disjointness.
    pub fn new(
        extent: [f64; 3],
        centers: Vec<[f64; 3]>,
        alpha: f64,
        indices: Vec<C64>,
        c0: f64,
        c: f64,
    ) -> Result<Self> {
        if centers.len() != indices.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                found: indices.len(),
            });
        }
        check_geometry(extent, alpha, c0, c)?;
        for (j, z) in centers.iter().enumerate() {
            if clearance(extent, *z) < c * (1.0 - 1e-12) {
                return Err(Error::Config(format!("center {j} is closer than {c} to the boundary")));
            }
            for w in &centers[..j] {
                if dist(*z, *w) < c0 * (1.0 - 1e-12) {
                    return Err(Error::Config(format!("center {j} violates the separation {c0}")));
                }
            }
        }
        Ok(Self {
            extent,
            centers,
            alpha,
            indices,
            c0,
            c,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Same inclusions shifted by `delta`.
    pub fn translated(&self, delta: [f64; 3]) -> Self {
        let mut out = self.clone();
        for z in &mut out.centers {
            for a in 0..3 {
                z[a] += delta[a];
            }
        }
        out
    }

    /// Same centers with `n_j` replaced.
    pub fn with_indices(&self, indices: Vec<C64>) -> Self {
        Self {
            indices,
            ..self.clone()
        }
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

fn clearance(extent: [f64; 3], z: [f64; 3]) -> f64 {
    (0..3)
        .map(|a| z[a].min(extent[a] - z[a]))
        .fold(f64::INFINITY, f64::min)
}

fn check_geometry(extent: [f64; 3], alpha: f64, c0: f64, c: f64) -> Result<()> {
    if !(alpha > 0.0 && c0 > 0.0 && c > 0.0) {
        return Err(Error::Config("alpha, c0 and c must be positive".into()));
    }
    // scaled balls must stay disjoint and inside Ω
    if !(2.0 * alpha < c0 && alpha < c) {
        return Err(Error::Config(format!(
            "alpha = {alpha} exceeds alpha_max = {}",
            (0.5 * c0).min(c)
        )));
    }
    if extent.iter().any(|&e| e <= 2.0 * c) {
        return Err(Error::Infeasible(0));
    }
    Ok(())
}

/// Parameters of a random scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub m: usize,
    pub c0: f64,
    pub c: f64,
    pub alpha: f64,
    /// corners of the box the `n_j` are drawn from (real and imaginary parts)
    pub index_range: (C64, C64),
    pub extent: [f64; 3],
}

/// Seeded rejection sampling of centers; `Infeasible` after
/// [`PLACEMENT_BUDGET`] rejected draws.
pub fn synthesize_scenario(seed: u64, spec: &ScenarioSpec) -> Result<InclusionScenario> {
    check_geometry(spec.extent, spec.alpha, spec.c0, spec.c)?;
    let (lo, hi) = spec.index_range;
    if !(lo.re > 0.0 && hi.re >= lo.re && lo.im >= 0.0 && hi.im >= lo.im) {
        return Err(Error::Config(
            "index range must satisfy 0 < Re lo ≤ Re hi and 0 ≤ Im lo ≤ Im hi".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<[f64; 3]> = Vec::with_capacity(spec.m);
    let mut rejected = 0;
    while centers.len() < spec.m {
        let z: [f64; 3] = std::array::from_fn(|a| {
            spec.c + (spec.extent[a] - 2.0 * spec.c) * rng.random::<f64>()
        });
        if centers.iter().all(|w| dist(z, *w) >= spec.c0) {
            centers.push(z);
        } else {
            rejected += 1;
            if rejected >= PLACEMENT_BUDGET {
                return Err(Error::Infeasible(rejected));
            }
        }
    }
    let indices = (0..spec.m)
        .map(|_| {
            C64::new(
                lo.re + (hi.re - lo.re) * rng.random::<f64>(),
                lo.im + (hi.im - lo.im) * rng.random::<f64>(),
            )
        })
        .collect();
    InclusionScenario::new(spec.extent, centers, spec.alpha, indices, spec.c0, spec.c)
}

/// Rasterizes the inclusions by edge-midpoint membership. Requires `α ≥ h`
/// (at least two cells across each ball).
pub fn perturbed_index(
    scenario: &InclusionScenario,
    background: &RefractiveIndexField,
    grid: &BoxGrid,
) -> Result<RefractiveIndexField> {
    if background.grid() != grid {
        return Err(Error::InvalidGrid("background lives on another grid".into()));
    }
    if scenario.is_empty() {
        return Ok(background.clone());
    }
    let h = grid.h_max();
    if scenario.alpha < h {
        return Err(Error::UnderResolved {
            alpha: scenario.alpha,
            h,
        });
    }
    let ext = grid.extent();
    if (0..3).any(|a| (ext[a] - scenario.extent[a]).abs() > 1e-12 * ext[a]) {
        return Err(Error::InvalidGrid("scenario and grid extents differ".into()));
    }
    let a = scenario.alpha;
    let mut support: Option<SupportBox> = background.support();
    for z in &scenario.centers {
        let sb = SupportBox::centered(*z, a * (1.0 + 1e-9))?;
        support = Some(match support {
            Some(s) => s.union(&sb),
            None => sb,
        });
    }
    let mut values = background.values().to_vec();
    for (e, v) in values.iter_mut().enumerate() {
        let x = grid.edge_midpoint(e);
        for (z, nj) in scenario.centers.iter().zip(&scenario.indices) {
            if dist(x, *z) < a {
                *v = *nj;
            }
        }
    }
    RefractiveIndexField::from_values(grid, background.background(), support, values)
}

/// Polarization tensors used by [`asymptotic_functional`].
#[derive(Clone, Debug, PartialEq)]
pub enum Polarization {
    Identity,
    /// homogeneous ball: `|B|·3n/(n_j + 2n)·I`
    Ball,
    Tensors(Vec<CMat3>),
}

impl Polarization {
    fn tensor(&self, j: usize, n: C64, nj: C64) -> Result<CMat3> {
        let z = C64::new(0.0, 0.0);
        let diag = |d: C64| [[d, z, z], [z, d, z], [z, z, d]];
        match self {
            Polarization::Identity => Ok(diag(C64::new(1.0, 0.0))),
            Polarization::Ball => Ok(diag(ball_factor(n, nj))),
            Polarization::Tensors(ts) => ts.get(j).copied().ok_or(Error::DimensionMismatch {
                expected: j + 1,
                found: ts.len(),
            }),
        }
    }
}

/// `|B|·3n/(n_j + 2n)` for the unit ball.
pub fn ball_factor(n: C64, nj: C64) -> C64 {
    4.0 * std::f64::consts::PI * n / (nj + 2.0 * n)
}

/// `α³ Σ_j (n_j − n)(M^j E(z_j))·V(z_j)`, the leading term of
/// `k⁻² ∫_Γ (ν×E)·(Z_{n_α} − Z_n)(ν×V)` with `Z f = ν×curl E`.
pub fn asymptotic_functional(
    scenario: &InclusionScenario,
    background: C64,
    e_probe: impl Fn([f64; 3]) -> [C64; 3],
    v_probe: impl Fn([f64; 3]) -> [C64; 3],
    m: &Polarization,
) -> Result<C64> {
    let a3 = scenario.alpha.powi(3);
    let mut acc = C64::new(0.0, 0.0);
    for (j, (z, nj)) in scenario.centers.iter().zip(&scenario.indices).enumerate() {
        let mj = m.tensor(j, background, *nj)?;
        let e = e_probe(*z);
        let me: [C64; 3] = std::array::from_fn(|i| mj[i][0] * e[0] + mj[i][1] * e[1] + mj[i][2] * e[2]);
        acc += (*nj - background) * cdot(me, v_probe(*z));
    }
    Ok(a3 * acc)
}

/// Planted `q_j = α³(n_j − n)M^j` with its scalar reduction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveMoment {
    pub center: [f64; 3],
    pub tensor: CMat3,
    /// `trace(q)/3`
    pub scalar: C64,
    pub recovered: bool,
}

impl EffectiveMoment {
    pub fn isotropic(center: [f64; 3], q: C64, recovered: bool) -> Self {
        let z = C64::new(0.0, 0.0);
        Self {
            center,
            tensor: [[q, z, z], [z, q, z], [z, z, q]],
            scalar: q,
            recovered,
        }
    }
}

/// Planted moments of `scenario`; `raster` replaces `α³|B|` by the
/// rasterized volume on `grid` when given.
pub fn planted_moments(
    scenario: &InclusionScenario,
    background: C64,
    m: &Polarization,
    raster: Option<&BoxGrid>,
) -> Result<Vec<EffectiveMoment>> {
    let a3 = scenario.alpha.powi(3);
    let ball = 4.0 * std::f64::consts::PI / 3.0;
    scenario
        .centers
        .iter()
        .zip(&scenario.indices)
        .enumerate()
        .map(|(j, (z, nj))| {
            let mut t = m.tensor(j, background, *nj)?;
            let scale = match raster {
                Some(g) => rasterized_volume(g, *z, scenario.alpha) / (ball * a3),
                None => 1.0,
            };
            for row in t.iter_mut() {
                for v in row.iter_mut() {
                    *v *= a3 * scale * (*nj - background);
                }
            }
            Ok(EffectiveMoment {
                center: *z,
                tensor: t,
                scalar: (t[0][0] + t[1][1] + t[2][2]) / 3.0,
                recovered: false,
            })
        })
        .collect()
}

/// Mean over the three edge families of the dual volume inside the ball.
pub fn rasterized_volume(grid: &BoxGrid, z: [f64; 3], alpha: f64) -> f64 {
    (0..grid.n_edges())
        .filter(|&e| dist(grid.edge_midpoint(e), z) < alpha)
        .map(|e| grid.edge_weight(e))
        .sum::<f64>()
        / 3.0
}

/// `k⁻² Σ_b area_b f1_b ((Z_{n_α} − Z_n) f2)_b` from two solves with data `f2`,
/// without forming either impedance matrix.
pub fn boundary_functional(
    perturbed: &BvpSolver,
    background: &BvpSolver,
    f1: &TangentialField,
    f2: &TangentialField,
) -> Result<C64> {
    let patch = f2.patch();
    if f1.patch() != patch {
        return Err(Error::InvalidPatch("probe data on different patches".into()));
    }
    let k = perturbed.system().wave().k();
    let mut diff = vec![C64::new(0.0, 0.0); patch.len()];
    for (solver, sign) in [(perturbed, 1.0), (background, -1.0)] {
        let sys = solver.system();
        let sol = solver.solve(f2)?;
        let tr = curl_trace(Some(sys), sys.grid(), &sol.e, patch, TraceScheme::Variational)?;
        for (d, v) in diff.iter_mut().zip(tr.values()) {
            *d += sign * v;
        }
    }
    Ok((0..patch.len())
        .map(|b| patch.area(b) * f1.values()[b] * diff[b])
        .sum::<C64>()
        / (k * k))
}

/// Options of [`localize_and_recover`].
#[derive(Clone, Debug)]
pub struct LocateOptions {
    pub scan: ScanOptions,
    pub window: Window,
    /// keep local maxima above `threshold × median |c|`
    pub threshold: f64,
    /// non-maximum suppression radius
    pub suppression_radius: f64,
    /// minimum singular value ratio of the moment system
    pub rank_tol: f64,
    /// peaks closer than this to the boundary are ignored
    pub clearance: f64,
}

impl LocateOptions {
    pub fn new(scan: ScanOptions, c0: f64) -> Self {
        Self {
            scan,
            window: Window::None,
            threshold: 3.0,
            suppression_radius: 0.5 * c0,
            rank_tol: 1e-8,
            clearance: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Localization {
    pub centers: Vec<[f64; 3]>,
    pub moments: Vec<EffectiveMoment>,
    pub table: FourierTable,
    pub volume: ContrastVolume,
}

/// Local maxima of `|c|` over the 26-neighborhood above `threshold × median`,
/// strongest first, after non-maximum suppression. Centers are refined by a
/// per-axis parabola through the neighbors.
pub fn find_peaks(
    volume: &ContrastVolume,
    threshold: f64,
    radius: f64,
    clearance: f64,
    expected: Option<usize>,
) -> Vec<([f64; 3], f64)> {
    let g = volume.grid();
    let [nx, ny, nz] = g.cells();
    let mag: Vec<f64> = volume.values().iter().map(|c| c.norm()).collect();
    let mut sorted = mag.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted.get(sorted.len() / 2).copied().unwrap_or(0.0);
    let level = threshold * median;
    let idx = |i: usize, j: usize, k: usize| (k * ny + j) * nx + i;
    let h = g.spacing();
    let mut peaks = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let v = mag[idx(i, j, k)];
                if !(v > level) || v == 0.0 || g.boundary_clearance(g.cell_center([i, j, k])) < clearance {
                    continue;
                }
                let mut is_max = true;
                'nb: for dk in -1i64..=1 {
                    for dj in -1i64..=1 {
                        for di in -1i64..=1 {
                            if di == 0 && dj == 0 && dk == 0 {
                                continue;
                            }
                            let (a, b, c) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                            if a < 0 || b < 0 || c < 0 || a >= nx as i64 || b >= ny as i64 || c >= nz as i64 {
                                continue;
                            }
                            if mag[idx(a as usize, b as usize, c as usize)] > v {
                                is_max = false;
                                break 'nb;
                            }
                        }
                    }
                }
                if !is_max {
                    continue;
                }
                let mut x = g.cell_center([i, j, k]);
                let ijk = [i, j, k];
                let cells = [nx, ny, nz];
                for a in 0..3 {
                    if ijk[a] == 0 || ijk[a] + 1 == cells[a] {
                        continue;
                    }
                    let mut lo = ijk;
                    let mut hi = ijk;
                    lo[a] -= 1;
                    hi[a] += 1;
                    let (m0, m2) = (mag[idx(lo[0], lo[1], lo[2])], mag[idx(hi[0], hi[1], hi[2])]);
                    let den = m0 - 2.0 * v + m2;
                    if den < 0.0 {
                        x[a] += 0.5 * h[a] * (m0 - m2) / den;
                    }
                }
                peaks.push((x, v));
            }
        }
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut kept: Vec<([f64; 3], f64)> = Vec::new();
    for p in peaks {
        if kept.iter().all(|q| dist(p.0, q.0) >= radius) {
            kept.push(p);
        }
    }
    if let Some(m) = expected {
        kept.truncate(m);
    }
    kept
}

/// Least-squares moments for `Λ(l) ≈ Σ_j q_j e^{il·z_j}`.
pub fn fit_moments(table: &FourierTable, centers: &[[f64; 3]], rank_tol: f64) -> Result<Vec<C64>> {
    let rows: Vec<_> = table.samples.iter().filter(|s| s.ok()).collect();
    let m = centers.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    if rows.len() < m {
        return Err(Error::RankDeficient);
    }
    let a = Mat::from_fn(rows.len(), m, |r, j| C64::from_polar(1.0, dot3(rows[r].l, centers[j])));
    let s = a
        .singular_values()
        .map_err(|e| Error::NoConvergence(format!("moment system: {e:?}")))?;
    let (smax, smin) = (s[0], s[s.len() - 1]);
    if !(smin > rank_tol * smax) {
        return Err(Error::RankDeficient);
    }
    let b = Mat::from_fn(rows.len(), 1, |r, _| rows[r].value);
    let ah = a.adjoint().to_owned();
    let q = (&ah * &a).partial_piv_lu().solve(&ah * &b);
    Ok((0..m).map(|j| q[(j, 0)]).collect())
}

fn model_residual(rows: &[(&[f64; 3], C64)], centers: &[[f64; 3]], q: &[C64]) -> Vec<C64> {
    rows.iter()
        .map(|(l, v)| {
            let m: C64 = centers
                .iter()
                .zip(q)
                .map(|(z, qj)| qj * C64::from_polar(1.0, dot3(**l, *z)))
                .sum();
            m - v
        })
        .collect()
}

/// Damped Gauss-Newton on the centers of `Λ(l) ≈ Σ_j q_j e^{il·z_j}`, with the
/// moments re-fitted by least squares at every step. Each center moves at most
/// `max_shift` in total.
pub fn refine_centers(
    table: &FourierTable,
    centers: &[[f64; 3]],
    max_shift: f64,
    rank_tol: f64,
) -> Result<(Vec<[f64; 3]>, Vec<C64>)> {
    let rows: Vec<(&[f64; 3], C64)> = table
        .samples
        .iter()
        .filter(|s| s.ok())
        .map(|s| (&s.l, s.value))
        .collect();
    let start = centers.to_vec();
    let mut z = start.clone();
    let mut q = fit_moments(table, &z, rank_tol)?;
    let cost = |r: &[C64]| r.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let mut r = model_residual(&rows, &z, &q);
    let mut f = cost(&r);
    let scale: f64 = rows.iter().map(|(_, v)| v.norm_sqr()).sum();
    let mut mu = 1e-3;
    let np = 3 * z.len();
    for _ in 0..50 {
        if !(f > 1e-30 * scale) {
            break;
        }
        // J_{r,(j,a)} = i l_a q_j e^{il·z_j}
        let jac = Mat::from_fn(rows.len(), np, |i, p| {
            let (j, a) = (p / 3, p % 3);
            let l = rows[i].0;
            C64::new(0.0, l[a]) * q[j] * C64::from_polar(1.0, dot3(*l, z[j]))
        });
        let jtj = jac.adjoint() * &jac;
        let mut grad = vec![0.0; np];
        for (p, g) in grad.iter_mut().enumerate() {
            *g = (0..rows.len()).map(|i| (jac[(i, p)].conj() * r[i]).re).sum();
        }
        let mut improved = false;
        for _ in 0..12 {
            let a = Mat::from_fn(np, np, |i, j| {
                let d = if i == j { mu * (1.0 + jtj[(i, i)].re) } else { 0.0 };
                jtj[(i, j)].re + d
            });
            let rhs = Mat::from_fn(np, 1, |i, _| -grad[i]);
            let step = a.partial_piv_lu().solve(&rhs);
            let mut trial = z.clone();
            let mut ok = true;
            for (j, c) in trial.iter_mut().enumerate() {
                for a in 0..3 {
                    c[a] += step[(3 * j + a, 0)];
                }
                if dist(*c, start[j]) > max_shift || !c.iter().all(|v| v.is_finite()) {
                    ok = false;
                }
            }
            if ok {
                if let Ok(tq) = fit_moments(table, &trial, rank_tol) {
                    let tr = model_residual(&rows, &trial, &tq);
                    let tf = cost(&tr);
                    if tf < f {
                        z = trial;
                        q = tq;
                        r = tr;
                        let rel = (f - tf) / f;
                        f = tf;
                        mu = (mu * 0.3).max(1e-12);
                        improved = rel > 1e-14;
                        break;
                    }
                }
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok((z, q))
}

/// Scans `Λ` over `lgrid`, inverts, detects peaks and fits scalar moments.
pub fn localize_and_recover(
    z_perturbed: &ImpedanceOperator,
    z_background: &ImpedanceOperator,
    lgrid: &LGrid,
    expected_m: Option<usize>,
    opts: &LocateOptions,
) -> Result<Localization> {
    let table = scan_fourier_with(z_perturbed, z_background, lgrid, &opts.scan)?;
    locate_from_table(table, lgrid.grid(), expected_m, opts)
}

/// Peak detection and moment fit on an existing table.
pub fn locate_from_table(
    table: FourierTable,
    grid: &BoxGrid,
    expected_m: Option<usize>,
    opts: &LocateOptions,
) -> Result<Localization> {
    let volume = invert_fourier(&table, grid, opts.window);
    let peaks = find_peaks(&volume, opts.threshold, opts.suppression_radius, opts.clearance, expected_m);
    if peaks.is_empty() {
        return Err(Error::NoPeaks);
    }
    let centers: Vec<[f64; 3]> = peaks.iter().map(|p| p.0).collect();
    let h = grid.h_max();
    let (centers, q) = refine_centers(&table, &centers, h, opts.rank_tol)?;
    let moments = centers
        .iter()
        .zip(q)
        .map(|(z, q)| EffectiveMoment::isotropic(*z, q, true))
        .collect();
    Ok(Localization {
        centers,
        moments,
        table,
        volume,
    })
}

/// Table of the leading-order model `Λ(l) = Σ_j q_j e^{il·z_j}`.
pub fn moment_table(lgrid: &LGrid, moments: &[EffectiveMoment]) -> FourierTable {
    crate::recon::synthetic_table(lgrid, |l| {
        moments
            .iter()
            .map(|m| m.scalar * C64::from_polar(1.0, dot3(l, m.center)))
            .sum()
    })
}

#[cfg(test)]
mod tests;
