//! Conjugate orthogonal conjugate gradients for complex symmetric systems.

use num_complex::Complex64 as C64;

use super::norm2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CocgReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves `A x = b` with Jacobi preconditioning, starting from `x`.
///
/// `apply` computes `y = A v`; `inv_diag` holds the preconditioner entries.
/// The recurrence uses the unconjugated bilinear form, which is the natural
/// inner product for `A = Aᵀ`.
pub fn cocg(
    apply: impl Fn(&[C64], &mut [C64]),
    inv_diag: &[C64],
    b: &[C64],
    x: &mut [C64],
    tol: f64,
    max_iter: usize,
) -> CocgReport {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        return CocgReport {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut r = vec![C64::new(0.0, 0.0); n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<C64> = r.iter().zip(inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut q = vec![C64::new(0.0, 0.0); n];
    let mut rho: C64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut rel = norm2(&r) / bnorm;
    let mut it = 0;
    while rel > tol && it < max_iter {
        apply(&p, &mut q);
        let pq: C64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        if pq.norm() == 0.0 || !pq.is_finite() {
            break;
        }
        let alpha = rho / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        it += 1;
        rel = norm2(&r) / bnorm;
        if rel <= tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rho_new: C64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        if rho.norm() == 0.0 {
            break;
        }
        let beta = rho_new / rho;
        rho = rho_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // recompute the true residual
    apply(x, &mut q);
    let true_rel = q
        .iter()
        .zip(b)
        .map(|(a, b)| (b - a).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / bnorm;
    CocgReport {
        iterations: it,
        relative_residual: true_rel,
        converged: true_rel <= tol * 10.0,
    }
}
