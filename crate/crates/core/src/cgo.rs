//! Complex geometrical optics probing fields `e^{x·ξ} η` and the boundary
//! operator `N_ξ`.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::forward::{ccross, cdot, dyadic_green_complex};
use crate::grid::{cross3, dot3, norm3, BoxGrid};
use crate::medium::RefractiveIndexField;
use crate::patch::{BoundaryPatch, TangentialField};

pub type CVec3 = [C64; 3];

/// Default bound on `|Re ξ|·diam(Ω)`.
pub const OVERFLOW_GUARD: f64 = 60.0;

/// Which quadratic relation `ξ` satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Dispersion {
    /// `ξ·ξ = k²`, `g = √(s² + |l|²/4 + k²) − s`.
    #[default]
    Helmholtz,
    /// `ξ·ξ = −k²`, `g = √(s² + |l|²/4 − k²) − s`; with this choice
    /// `e^{x·ξ}η` solves `curl curl V − k²V = 0` exactly.
    Maxwell,
}

/// Frame `(l, w1, w2)` with the probing scale `s` and wave number `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgoFrame {
    l: [f64; 3],
    w1: [f64; 3],
    w2: [f64; 3],
    s: f64,
    k: f64,
}

const FRAME_TOL: f64 = 1e-14;

impl CgoFrame {
    pub fn new(l: [f64; 3], w1: [f64; 3], w2: [f64; 3], s: f64, k: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidFrame(format!("s must be positive, got {s}")));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidFrame(format!("k must be positive, got {k}")));
        }
        let ln = norm3(l).max(1.0);
        let checks = [
            ((norm3(w1) - 1.0).abs(), "|w1| = 1"),
            ((norm3(w2) - 1.0).abs(), "|w2| = 1"),
            (dot3(w1, w2).abs(), "w1·w2 = 0"),
            (dot3(w1, l).abs() / ln, "w1·l = 0"),
            (dot3(w2, l).abs() / ln, "w2·l = 0"),
        ];
        for (err, what) in checks {
            if !(err <= 4.0 * FRAME_TOL) {
                return Err(Error::InvalidFrame(format!("{what} violated by {err:.2e}")));
            }
        }
        Ok(Self { l, w1, w2, s, k })
    }

    /// Deterministic frame for `l`: `w1`, `w2` complete `l/|l|` to a
    /// right-handed orthonormal basis.
    pub fn for_l(l: [f64; 3], s: f64, k: f64) -> Result<Self> {
        let (w1, w2) = orthonormal_pair(l);
        Self::new(l, w1, w2, s, k)
    }

    pub fn l(&self) -> [f64; 3] {
        self.l
    }

    pub fn w1(&self) -> [f64; 3] {
        self.w1
    }

    pub fn w2(&self) -> [f64; 3] {
        self.w2
    }

    /// `w1 × w2`.
    pub fn w3(&self) -> [f64; 3] {
        cross3(self.w1, self.w2)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

/// Orthonormal `(w1, w2)` perpendicular to `l` (any pair when `l = 0`).
pub fn orthonormal_pair(l: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let ln = norm3(l);
    if ln == 0.0 {
        return ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
    }
    let u = [l[0] / ln, l[1] / ln, l[2] / ln];
    // the coordinate axis least aligned with l
    let mut a = [0.0; 3];
    let mut best = 0;
    for i in 1..3 {
        if u[i].abs() < u[best].abs() {
            best = i;
        }
    }
    a[best] = 1.0;
    let w1 = unit(cross3(u, a));
    let w2 = unit(cross3(u, w1));
    // one Gram–Schmidt pass against l brings the residuals to rounding level
    let w1 = unit(sub_proj(w1, u));
    let w2 = unit(sub_proj(sub_proj(w2, u), w1));
    (w1, w2)
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

fn sub_proj(v: [f64; 3], u: [f64; 3]) -> [f64; 3] {
    let p = dot3(v, u);
    [v[0] - p * u[0], v[1] - p * u[1], v[2] - p * u[2]]
}

/// `g(s)` such that `(s+g)² = s² + |l|²/4 + k²`.
pub fn g_of_s(s: f64, l: [f64; 3], k: f64) -> f64 {
    g_with(s, dot3(l, l), k * k)
}

/// `g(s)` for the given dispersion.
pub fn g_dispersion(s: f64, l: [f64; 3], k: f64, disp: Dispersion) -> Result<f64> {
    let k2 = match disp {
        Dispersion::Helmholtz => k * k,
        Dispersion::Maxwell => -k * k,
    };
    let l2 = dot3(l, l);
    if s * s + 0.25 * l2 + k2 < 0.0 {
        return Err(Error::InvalidFrame(format!(
            "s = {s} too small for a real g at k = {k}, |l| = {}",
            l2.sqrt()
        )));
    }
    Ok(g_with(s, l2, k2))
}

/// `√(s² + c) − s` written to avoid cancellation.
fn g_with(s: f64, l2: f64, k2: f64) -> f64 {
    let c = 0.25 * l2 + k2;
    c / ((s * s + c).sqrt() + s)
}

/// The closed form `(|l|² + 4k²) / (4s + 2√(4s² + |l|²) + 4k²)` as printed in
/// the source derivation; agrees with [`g_of_s`] to `O(1/s²)`.
pub fn g_printed(s: f64, l: [f64; 3], k: f64) -> f64 {
    let l2 = dot3(l, l);
    (l2 + 4.0 * k * k) / (4.0 * s + 2.0 * (4.0 * s * s + l2).sqrt() + 4.0 * k * k)
}

/// Both probing fields for one Fourier target `l`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgoPair {
    pub frame: CgoFrame,
    pub dispersion: Dispersion,
    pub g: f64,
    pub xi1: CVec3,
    pub xi2: CVec3,
    pub eta1: CVec3,
    pub eta2: CVec3,
    /// `η₁·η₂` before `η₂` was rescaled
    pub normalization: C64,
}

/// `|η₁·η₂|` below this is rejected.
pub const DEGENERATE_ETA: f64 = 1e-8;

/// Builds the pair with the default dispersion.
pub fn cgo_pair(frame: &CgoFrame) -> Result<CgoPair> {
    cgo_pair_with(frame, Dispersion::Helmholtz)
}

pub fn cgo_pair_with(frame: &CgoFrame, dispersion: Dispersion) -> Result<CgoPair> {
    let CgoFrame { l, w1, w2, s, k } = *frame;
    let g = g_dispersion(s, l, k, dispersion)?;
    let a = s + g;
    let re = |v: f64| C64::new(v, 0.0);
    let mut xi1 = [C64::new(0.0, 0.0); 3];
    let mut xi2 = [C64::new(0.0, 0.0); 3];
    for i in 0..3 {
        // shared imaginary half so ξ₁ + ξ₂ = il holds bit for bit
        let half = 0.5 * l[i];
        let sw = s * w2[i];
        xi1[i] = C64::new(a * w1[i], half + sw);
        xi2[i] = C64::new(-(a * w1[i]), half - sw);
    }
    let l2 = dot3(l, l);
    let (eta1, mut eta2) = if l2.sqrt() <= 1e-12 * s.max(k) {
        let w3 = frame.w3().map(re);
        (w3, w3)
    } else {
        let c = 1.0 + g / s;
        let b = l2 / (2.0 * s);
        let mut e1 = [C64::new(0.0, 0.0); 3];
        let mut e2 = [C64::new(0.0, 0.0); 3];
        for i in 0..3 {
            e1[i] = C64::new(c * l[i], -b * w1[i]);
            e2[i] = C64::new(c * l[i], b * w1[i]);
        }
        (e1, e2)
    };
    let normalization = cdot(eta1, eta2);
    if normalization.norm() < DEGENERATE_ETA {
        return Err(Error::DegenerateEta(normalization.norm()));
    }
    let inv = normalization.inv();
    for v in eta2.iter_mut() {
        *v *= inv;
    }
    Ok(CgoPair {
        frame: *frame,
        dispersion,
        g,
        xi1,
        xi2,
        eta1,
        eta2,
        normalization,
    })
}

impl CgoPair {
    /// `(ξ_j, η_j)` for `j ∈ {1, 2}`.
    pub fn half(&self, j: usize) -> (CVec3, CVec3) {
        match j {
            1 => (self.xi1, self.eta1),
            2 => (self.xi2, self.eta2),
            _ => panic!("CGO pair index must be 1 or 2, got {j}"),
        }
    }

    /// `|Re ξ|`, identical for both halves.
    pub fn growth_rate(&self) -> f64 {
        self.frame.s + self.g
    }
}

/// `e^{x·ξ} η`.
pub fn cgo_field(xi: CVec3, eta: CVec3, x: [f64; 3]) -> CVec3 {
    let ph = (xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2]).exp();
    [eta[0] * ph, eta[1] * ph, eta[2] * ph]
}

/// `curl(e^{x·ξ}η) = ξ×η e^{x·ξ}`.
pub fn cgo_curl(xi: CVec3, eta: CVec3, x: [f64; 3]) -> CVec3 {
    cgo_field(xi, ccross(xi, eta), x)
}

fn check_guard(xi: CVec3, grid: &BoxGrid, guard: f64) -> Result<()> {
    let re = (xi[0].re * xi[0].re + xi[1].re * xi[1].re + xi[2].re * xi[2].re).sqrt();
    let value = re * grid.diameter();
    if !(value <= guard) {
        return Err(Error::OverflowGuard {
            value,
            limit: guard,
        });
    }
    Ok(())
}

/// Tangential trace of `e^{x·ξ}η` on `patch` (Dirichlet data `ν×V`).
pub fn cgo_trace(xi: CVec3, eta: CVec3, patch: &Arc<BoundaryPatch>) -> Result<TangentialField> {
    cgo_trace_guarded(xi, eta, patch, OVERFLOW_GUARD)
}

pub fn cgo_trace_guarded(
    xi: CVec3,
    eta: CVec3,
    patch: &Arc<BoundaryPatch>,
    guard: f64,
) -> Result<TangentialField> {
    let grid = patch.grid();
    check_guard(xi, grid, guard)?;
    Ok(TangentialField::from_vector_fn(patch.clone(), |x| {
        cgo_field(xi, eta, x)
    }))
}

/// Leading-order or Born-corrected CGO boundary data.
#[derive(Clone, Debug)]
pub struct CgoBoundaryData {
    pub xi: CVec3,
    pub eta: CVec3,
    pub trace: TangentialField,
    pub born_corrected: bool,
    /// remainder terms not represented in `trace`
    pub dropped: Vec<&'static str>,
}

/// Leading-order data: amplitude `η`, remainders dropped.
pub fn cgo_boundary_data(
    xi: CVec3,
    eta: CVec3,
    patch: &Arc<BoundaryPatch>,
) -> Result<CgoBoundaryData> {
    Ok(CgoBoundaryData {
        xi,
        eta,
        trace: cgo_trace(xi, eta, patch)?,
        born_corrected: false,
        dropped: vec!["Psi", "d1", "d1~", "D", "R"],
    })
}

/// Leading-order trace plus one Lippmann–Schwinger iteration
/// `V₁(x) = V₀(x) + k² ∫ G(x, y) (n(y) − n₀) V₀(y) dy` over the contrast of
/// `n` relative to its background, with `κ = k√n₀` in the kernel.
pub fn cgo_boundary_data_born(
    xi: CVec3,
    eta: CVec3,
    patch: &Arc<BoundaryPatch>,
    n: &RefractiveIndexField,
    k: f64,
) -> Result<CgoBoundaryData> {
    let grid = patch.grid();
    if n.grid() != grid {
        return Err(Error::InvalidMedium("index sampled on another grid".into()));
    }
    let mut data = cgo_boundary_data(xi, eta, patch)?;
    let n0 = n.background();
    let kappa = k * n0.sqrt();
    let sources: Vec<(usize, [f64; 3], C64)> = (0..grid.n_edges())
        .filter_map(|e| {
            let dn = n.values()[e] - n0;
            (dn != C64::new(0.0, 0.0)).then(|| {
                let y = grid.edge_midpoint(e);
                let d = grid.edge_direction(e);
                let v0 = cgo_field(xi, eta, y)[d];
                (d, y, k * k * grid.edge_weight(e) * dn * v0)
            })
        })
        .collect();
    let dofs = patch.dofs().to_vec();
    let values = data.trace.values_mut();
    for (b, &edge) in dofs.iter().enumerate() {
        let x = grid.edge_midpoint(edge);
        let t = grid.edge_direction(edge);
        let mut acc = C64::new(0.0, 0.0);
        for &(d, y, q) in &sources {
            acc += dyadic_green_complex(x, y, kappa)?[t][d] * q;
        }
        values[b] += acc;
    }
    data.born_corrected = true;
    data.dropped = vec!["Psi (beyond first Born)", "d1", "d1~", "D", "R"];
    Ok(data)
}

/// Neighbouring other-family edges used to rebuild the full tangential
/// vector at each patch DOF: `(perpendicular direction, [(dof, weight)])`.
fn perpendicular_stencil(patch: &BoundaryPatch) -> Vec<(usize, Vec<(usize, f64)>)> {
    let grid = patch.grid();
    patch
        .dofs()
        .iter()
        .enumerate()
        .map(|(b, &edge)| {
            let (t, ijk) = grid.edge_coords(edge);
            let a = patch.dof_face(b).axis();
            let u = 3 - a - t;
            let mut nb = Vec::with_capacity(4);
            for dt in 0..2isize {
                for du in [-1isize, 0] {
                    let mut p = [ijk[0] as isize, ijk[1] as isize, ijk[2] as isize];
                    p[t] += dt;
                    p[u] += du;
                    if let Some(e) = grid.edge_index_checked(u, p) {
                        if let Some(slot) = patch.slot(e) {
                            if patch.dof_face(slot).axis() == a {
                                nb.push(slot);
                            }
                        }
                    }
                }
            }
            let w = if nb.is_empty() { 0.0 } else { 1.0 / nb.len() as f64 };
            (u, nb.into_iter().map(|s| (s, w)).collect())
        })
        .collect()
}

/// Pointwise `(ν×f)×ξ + (ξ×ν)×f`, `t`-component, for tangential `f`.
fn n_xi_point(nu: [f64; 3], f: CVec3, xi: CVec3) -> CVec3 {
    let nuc = nu.map(|v| C64::new(v, 0.0));
    let a = ccross(ccross(nuc, f), xi);
    let b = ccross(ccross(xi, nuc), f);
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// `N_ξ` applied to Γ data stored as tangential vectors `f` (representing
/// `ν×f`); the output is stored like impedance images.
pub fn n_xi_apply(xi: CVec3, nu_cross_f: &TangentialField) -> TangentialField {
    let m = n_xi_matrix(xi, nu_cross_f.patch());
    let x = nu_cross_f.values();
    let vals = (0..x.len())
        .map(|i| (0..x.len()).map(|j| m[(i, j)] * x[j]).sum())
        .collect();
    TangentialField::new(nu_cross_f.patch().clone(), vals)
        .expect("same patch, same length")
}

/// Matrix of [`n_xi_apply`] over the patch DOFs.
pub fn n_xi_matrix(xi: CVec3, patch: &Arc<BoundaryPatch>) -> Mat<C64> {
    let grid = patch.grid();
    let m = patch.len();
    let stencil = perpendicular_stencil(patch);
    let mut out = Mat::<C64>::zeros(m, m);
    for (b, &edge) in patch.dofs().iter().enumerate() {
        let t = grid.edge_direction(edge);
        let nu = patch.normal(b);
        let (u, nb) = &stencil[b];
        // response to a unit t-component and a unit u-component
        let mut et = [C64::new(0.0, 0.0); 3];
        et[t] = C64::new(1.0, 0.0);
        let mut eu = [C64::new(0.0, 0.0); 3];
        eu[*u] = C64::new(1.0, 0.0);
        let rt = n_xi_point(nu, et, xi)[t];
        let ru = n_xi_point(nu, eu, xi)[t];
        out[(b, b)] += rt;
        for &(s, w) in nb {
            out[(b, s)] += ru * w;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn g_examples() {
        let g = g_of_s(1.0, [0.0; 3], 1.0);
        assert!((g - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let g = g_of_s(100.0, [2.0, 0.0, 0.0], 1.0);
        let exact = (10002.0f64).sqrt() - 100.0;
        assert!((g - exact).abs() < 1e-13);
        assert!((g - 0.0099995).abs() < 1e-7);
        let p = g_printed(100.0, [2.0, 0.0, 0.0], 1.0);
        assert!((p - 0.009950).abs() < 5e-7, "{p}");
    }

    #[test]
    fn pair_example() {
        let f = CgoFrame::new([0.0, 0.0, 2.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 1.0).unwrap();
        let p = cgo_pair(&f).unwrap();
        assert!((p.g - (3f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((p.xi1[0] - c(3f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(p.xi1[1], c(0.0, 1.0));
        assert_eq!(p.xi1[2], c(0.0, 1.0));
        assert!((cdot(p.xi1, p.xi1) - c(1.0, 0.0)).norm() < 1e-14);
        for i in 0..3 {
            assert_eq!(p.xi1[i] + p.xi2[i], c(0.0, f.l()[i]));
        }
        // η before normalization is (−2i, 0, 2(1 + g))
        assert_eq!(p.eta1[0], c(0.0, -2.0));
        assert_eq!(p.eta1[1], c(0.0, 0.0));
        assert!((p.eta1[2].re - 3.4641016).abs() < 1e-7);
        assert!(cdot(p.xi1, p.eta1).norm() < 1e-14);
        assert!((cdot(p.eta1, p.eta2) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_l_falls_back_to_normal() {
        let f = CgoFrame::for_l([0.0; 3], 2.0, 1.5).unwrap();
        for disp in [Dispersion::Helmholtz, Dispersion::Maxwell] {
            let p = cgo_pair_with(&f, disp).unwrap();
            let sign = if disp == Dispersion::Helmholtz { 1.0 } else { -1.0 };
            for (xi, eta) in [p.half(1), p.half(2)] {
                assert!(cdot(xi, eta).norm() < 1e-14);
                assert!((cdot(xi, xi) - c(sign * 2.25, 0.0)).norm() < 1e-12);
            }
            assert_eq!(cdot(p.eta1, p.eta2), c(1.0, 0.0));
        }
        let tiny = CgoFrame::for_l([1e-6, 0.0, 0.0], 1.0, 1.0).unwrap();
        assert!(matches!(cgo_pair(&tiny), Err(Error::DegenerateEta(_))));
    }

    #[test]
    fn maxwell_dispersion_solves_curl_curl() {
        let k = 3.0;
        let f = CgoFrame::for_l([1.0, -2.0, 0.5], 4.0, k).unwrap();
        let p = cgo_pair_with(&f, Dispersion::Maxwell).unwrap();
        let (xi, eta) = p.half(1);
        // curl curl V = −(ξ·ξ) V for ξ·η = 0
        let x = [0.3, 0.7, 0.2];
        let v = cgo_field(xi, eta, x);
        let cc = cgo_field(xi, ccross(xi, ccross(xi, eta)), x);
        for i in 0..3 {
            assert!((cc[i] - k * k * v[i]).norm() <= 1e-12 * v[i].norm().max(1.0) * k * k);
        }
    }

    #[test]
    fn trace_examples() {
        let g = BoxGrid::unit_cube(6).unwrap();
        let top = Arc::new(BoundaryPatch::top(&g));
        let eta = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let tr = cgo_trace([c(0.0, 0.0); 3], eta, &top).unwrap();
        for (b, &e) in top.dofs().iter().enumerate() {
            // stored tangential vector is η, whose ν×η = (0, 1, 0)
            let want = if g.edge_direction(e) == 0 { 1.0 } else { 0.0 };
            assert_eq!(tr.values()[b], c(want, 0.0));
        }
        let xi = [c(0.0, 3.0), c(0.0, -1.0), c(0.0, 0.5)];
        let tr = cgo_trace(xi, eta, &top).unwrap();
        for (b, &e) in top.dofs().iter().enumerate() {
            if g.edge_direction(e) == 0 {
                assert!((tr.values()[b].norm() - 1.0).abs() < 1e-14);
            }
        }
        let big = [c(40.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert!(matches!(
            cgo_trace(big, eta, &top),
            Err(Error::OverflowGuard { .. })
        ));
        // growth across the face along w1 = x
        let xi = [c(2.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)];
        let tr = cgo_trace(xi, eta, &top).unwrap();
        let (mut lo, mut hi) = (None, None);
        for (b, &e) in top.dofs().iter().enumerate() {
            let (d, ijk) = g.edge_coords(e);
            if d == 0 && ijk[1] == 3 {
                if ijk[0] == 0 {
                    lo = Some(tr.values()[b].norm());
                }
                if ijk[0] == 5 {
                    hi = Some(tr.values()[b].norm());
                }
            }
        }
        let ratio = hi.unwrap() / lo.unwrap();
        assert!((ratio - (2.0f64 * 5.0 / 6.0).exp()).abs() < 1e-12);
    }

    fn uniform_field(top: &Arc<BoundaryPatch>, f: [f64; 3]) -> TangentialField {
        TangentialField::from_vector_fn(top.clone(), |_| f.map(|v| c(v, 0.0)))
    }

    #[test]
    fn n_xi_examples() {
        let g = BoxGrid::unit_cube(4).unwrap();
        let top = Arc::new(BoundaryPatch::top(&g));
        let f = uniform_field(&top, [1.0, 0.0, 0.0]);
        let out = n_xi_apply([c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], &f);
        for (b, &e) in top.dofs().iter().enumerate() {
            let want = if g.edge_direction(e) == 0 { 1.0 } else { 0.0 };
            assert!((out.values()[b] - c(want, 0.0)).norm() < 1e-15);
        }
        let out = n_xi_apply([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], &f);
        assert!(out.values().iter().all(|v| v.norm() < 1e-15));
        let out = n_xi_apply([c(0.0, 0.0); 3], &f);
        assert!(out.values().iter().all(|v| *v == c(0.0, 0.0)));
    }

    #[test]
    fn n_xi_reconstructs_perpendicular_component() {
        // a uniform field with both tangential components is rebuilt exactly
        // at interior DOFs of the face
        let g = BoxGrid::unit_cube(6).unwrap();
        let top = Arc::new(BoundaryPatch::top(&g));
        let fv = [0.3, -1.1, 0.0];
        let f = uniform_field(&top, fv);
        let xi = [c(0.4, 1.0), c(-0.7, 0.2), c(0.1, -0.5)];
        let out = n_xi_apply(xi, &f);
        let want = n_xi_point([0.0, 0.0, 1.0], fv.map(|v| c(v, 0.0)), xi);
        for (b, &e) in top.dofs().iter().enumerate() {
            let (d, ijk) = g.edge_coords(e);
            let u = 1 - d;
            if ijk[u] >= 1 && ijk[u] <= 5 {
                assert!((out.values()[b] - want[d]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn born_correction_is_linear_in_the_contrast() {
        use crate::medium::{RefractiveIndexField, SupportBox};
        let g = crate::grid::BoxGrid::unit_cube(8).unwrap();
        let top = Arc::new(BoundaryPatch::top(&g));
        let (k, one) = (3.0, C64::new(1.0, 0.0));
        let p = cgo_pair_with(&CgoFrame::for_l([3.0, 0.0, 1.0], 4.0, k).unwrap(), Dispersion::Maxwell).unwrap();
        let sb = SupportBox::new([0.3; 3], [0.7; 3]).unwrap();
        let medium = |a: f64| {
            RefractiveIndexField::from_fn(&g, one, sb, |x| one + C64::new(a, 0.5 * a) * x[0]).unwrap()
        };
        let lead = cgo_boundary_data(p.xi1, p.eta1, &top).unwrap();
        let flat = cgo_boundary_data_born(p.xi1, p.eta1, &top, &RefractiveIndexField::homogeneous(&g, one).unwrap(), k).unwrap();
        assert_eq!(flat.trace.values(), lead.trace.values());
        let d1 = cgo_boundary_data_born(p.xi1, p.eta1, &top, &medium(0.1), k).unwrap();
        let d2 = cgo_boundary_data_born(p.xi1, p.eta1, &top, &medium(0.2), k).unwrap();
        assert!(d1.born_corrected && !lead.born_corrected);
        let c1 = d1.trace.combine(one, &lead.trace, -one).unwrap();
        let c2 = d2.trace.combine(one, &lead.trace, -one).unwrap();
        assert!(c1.norm() > 1e-6 * lead.trace.norm());
        let defect = c2.combine(one, &c1, C64::new(-2.0, 0.0)).unwrap().norm();
        assert!(defect <= 1e-12 * c2.norm(), "{defect}");
    }
}
