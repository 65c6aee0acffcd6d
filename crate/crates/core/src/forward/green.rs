//! Free-space Helmholtz kernel, dyadic Green function and the Stratton–Chu
//! representation used to cross-check discrete solutions.

use num_complex::Complex64 as C64;

use super::solver::FieldSolution;
use super::traces::one_sided_curl_trace;
use crate::error::{Error, Result};
use crate::grid::Face;

pub type CMat3 = [[C64; 3]; 3];

fn offset(x: [f64; 3], y: [f64; 3]) -> Result<([f64; 3], f64)> {
    let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if !(r > 0.0) {
        return Err(Error::CoincidentPoints);
    }
    Ok(([d[0] / r, d[1] / r, d[2] / r], r))
}

/// `e^{ik|x−y|} / (4π|x−y|)` for a possibly complex wave number.
pub fn phi_complex(x: [f64; 3], y: [f64; 3], k: C64) -> Result<C64> {
    let (_, r) = offset(x, y)?;
    Ok((C64::i() * k * r).exp() / (4.0 * std::f64::consts::PI * r))
}

/// Outgoing Helmholtz fundamental solution `e^{ik|x−y|} / (4π|x−y|)`.
pub fn helmholtz_phi(x: [f64; 3], y: [f64; 3], k: f64) -> Result<C64> {
    phi_complex(x, y, C64::new(k, 0.0))
}

/// `∇ₓΦ(x, y)`.
pub fn grad_phi(x: [f64; 3], y: [f64; 3], k: C64) -> Result<[C64; 3]> {
    let (rh, r) = offset(x, y)?;
    let p = phi_complex(x, y, k)?;
    let s = p * (C64::i() * k - 1.0 / r);
    Ok([s * rh[0], s * rh[1], s * rh[2]])
}

/// `Φ (I + ∇ₓ∇ₓ/k²)` for a possibly complex wave number.
pub fn dyadic_green_complex(x: [f64; 3], y: [f64; 3], k: C64) -> Result<CMat3> {
    if k.norm() == 0.0 {
        return Err(Error::ZeroWaveNumber);
    }
    let (rh, r) = offset(x, y)?;
    let p = phi_complex(x, y, k)?;
    let kr = k * r;
    let kr2 = kr * kr;
    let ikr = C64::i() * kr;
    let c1 = C64::new(1.0, 0.0) + (ikr - 1.0) / kr2;
    let c2 = (C64::new(3.0, 0.0) - 3.0 * ikr - kr2) / kr2;
    let mut g = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            g[i][j] = p * (c1 * delta + c2 * rh[i] * rh[j]);
        }
    }
    Ok(g)
}

/// Dyadic Green function `G = Φ I + ∇ₓ∇ₓΦ / k²`.
pub fn dyadic_green(x: [f64; 3], y: [f64; 3], k: f64) -> Result<CMat3> {
    dyadic_green_complex(x, y, C64::new(k, 0.0))
}

pub(crate) fn mat_vec(m: &CMat3, v: [C64; 3]) -> [C64; 3] {
    let mut out = [C64::new(0.0, 0.0); 3];
    for i in 0..3 {
        out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    out
}

pub(crate) fn ccross(a: [C64; 3], b: [C64; 3]) -> [C64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn cdot(a: [C64; 3], b: [C64; 3]) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Minimum clearance of the evaluation point, in grid cells.
pub const STRATTON_CHU_CLEARANCE: f64 = 4.0;

/// Reproduces `E(x)` from the boundary traces of `sol` via
/// `E(x) = −∮ ∇ₓΦ × (ν×E) ds − ∮ G(x, y) (ν×curl E) ds`,
/// with midpoint quadrature over the boundary face cells.
pub fn stratton_chu_check(sol: &FieldSolution, x: [f64; 3]) -> Result<[C64; 3]> {
    let grid = sol.grid;
    let n0 = sol.homogeneous_index.ok_or_else(|| {
        Error::InvalidMedium("the representation formula needs a homogeneous medium".into())
    })?;
    let min = STRATTON_CHU_CLEARANCE * grid.h_max();
    let clearance = grid.boundary_clearance(x);
    if clearance < min {
        return Err(Error::TooCloseToBoundary { clearance, min });
    }
    let kappa = sol.k * n0.sqrt();
    let h = grid.spacing();
    let cells = grid.cells();
    let mut acc = [C64::new(0.0, 0.0); 3];
    for face in Face::ALL {
        let a = face.axis();
        let (d1, d2) = match a {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let q0 = if face.is_max() { cells[a] } else { 0 };
        let nu = face.normal();
        for q in 0..cells[d2] {
            for p in 0..cells[d1] {
                // tangential components at the cell center, averaged from the
                // two bounding edges of each in-plane family
                let mut et = [C64::new(0.0, 0.0); 3];
                let mut ct = [C64::new(0.0, 0.0); 3];
                for (dir, other, idx, oidx) in [(d1, d2, p, q), (d2, d1, q, p)] {
                    for s in 0..2 {
                        let mut ijk = [0usize; 3];
                        ijk[a] = q0;
                        ijk[dir] = idx;
                        ijk[other] = oidx + s;
                        let edge = grid.edge_index(dir, ijk);
                        et[dir] += 0.5 * sol.e[edge];
                        ct[dir] += 0.5 * one_sided_curl_trace(&grid, &sol.e, edge, face);
                    }
                }
                let mut y = [0.0; 3];
                y[a] = q0 as f64 * h[a];
                y[d1] = (p as f64 + 0.5) * h[d1];
                y[d2] = (q as f64 + 0.5) * h[d2];
                let w = h[d1] * h[d2];
                let nuc = [
                    C64::new(nu[0], 0.0),
                    C64::new(nu[1], 0.0),
                    C64::new(nu[2], 0.0),
                ];
                let nxe = ccross(nuc, et);
                let gp = grad_phi(x, y, kappa)?;
                let t1 = ccross(gp, nxe);
                let g = dyadic_green_complex(x, y, kappa)?;
                let t2 = mat_vec(&g, ct);
                for i in 0..3 {
                    acc[i] -= (t1[i] + t2[i]) * w;
                }
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_unit_distance() {
        let p = helmholtz_phi([0.0; 3], [1.0, 0.0, 0.0], 1.0).unwrap();
        let four_pi = 4.0 * std::f64::consts::PI;
        assert!((p.re - 1f64.cos() / four_pi).abs() < 1e-15);
        assert!((p.im - 1f64.sin() / four_pi).abs() < 1e-15);
        assert!((p.re - 0.042997).abs() < 2e-6 && (p.im - 0.066962).abs() < 2e-6);
    }

    #[test]
    fn phi_laplace_limit_and_modulus() {
        let x = [0.1, 0.2, 0.3];
        let y = [0.4, -0.2, 0.9];
        let r = ((0.3f64).powi(2) + 0.4f64.powi(2) + 0.6f64.powi(2)).sqrt();
        let p0 = helmholtz_phi(x, y, 0.0).unwrap();
        assert_eq!(p0.im, 0.0);
        assert!((p0.re - 1.0 / (4.0 * std::f64::consts::PI * r)).abs() < 1e-15);
        for k in [0.5, 3.0, 40.0] {
            let p = helmholtz_phi(x, y, k).unwrap();
            assert!((p.norm() - p0.re).abs() < 1e-14);
        }
        assert!(matches!(
            helmholtz_phi(x, x, 1.0),
            Err(Error::CoincidentPoints)
        ));
        assert!(matches!(
            dyadic_green(x, y, 0.0),
            Err(Error::ZeroWaveNumber)
        ));
    }

    #[test]
    fn far_field_is_transverse() {
        let k = 2.0;
        let x = [0.0; 3];
        let dir = [0.48, 0.6, 0.64];
        let r = 100.0 / k;
        let y = [r * dir[0], r * dir[1], r * dir[2]];
        let g = dyadic_green(x, y, k).unwrap();
        let p = helmholtz_phi(x, y, k).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                let far = p * (delta - dir[i] * dir[j]);
                // remainder is O(1/(k r)) relative to |Φ|
                assert!((g[i][j] - far).norm() <= 2.0 * p.norm() / (k * r));
            }
        }
    }

    #[test]
    fn dyadic_symmetry() {
        let x = [0.2, -0.4, 0.9];
        let y = [1.1, 0.3, -0.2];
        let a = dyadic_green(x, y, 3.0).unwrap();
        let b = dyadic_green(y, x, 3.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[i][j] - a[j][i]).norm() < 1e-15);
                assert!((a[i][j] - b[j][i]).norm() < 1e-15);
            }
        }
    }

    type VField = dyn Fn([f64; 3]) -> [C64; 3];

    fn fd_curl(f: &VField, x: [f64; 3], h: f64) -> [C64; 3] {
        let d = |axis: usize, comp: usize| {
            let mut p = x;
            let mut m = x;
            p[axis] += h;
            m[axis] -= h;
            (f(p)[comp] - f(m)[comp]) / (2.0 * h)
        };
        [d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0)]
    }

    #[test]
    fn columns_solve_vector_helmholtz() {
        let k = 2.5;
        let y = [0.1, 0.2, -0.3];
        let x = [0.8, -0.1, 0.4];
        for j in 0..3 {
            let col = move |p: [f64; 3]| {
                let g = dyadic_green(p, y, k).unwrap();
                [g[0][j], g[1][j], g[2][j]]
            };
            let mut res = Vec::new();
            for h in [2e-2, 1e-2] {
                let c1 = move |p: [f64; 3]| fd_curl(&col, p, h);
                let cc = fd_curl(&c1, x, h);
                let g = col(x);
                let r: f64 = (0..3)
                    .map(|i| (cc[i] - k * k * g[i]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                let scale: f64 = (0..3).map(|i| g[i].norm_sqr()).sum::<f64>().sqrt();
                res.push(r / (k * k * scale));
            }
            assert!(res[1] < 1e-3, "residual {res:?}");
            // second order in the difference step
            assert!(res[0] / res[1] > 3.0, "ratio {res:?}");
        }
    }
}
