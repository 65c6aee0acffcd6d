//! Multifrontal LDLᵀ for complex symmetric matrices (no conjugation) with a
//! geometric nested-dissection ordering.
//!
//! Unknowns carry integer coordinates (edge positions in doubled units). A
//! region is split by the set of unknowns lying on an even coordinate plane;
//! for stencils whose reach is at most two doubled units across such a plane
//! (the edge curl-curl stencil) the two halves do not interact, so each
//! separator becomes one dense front. Pivots are taken in order without
//! interchanges; pivots below a small multiple of the matrix scale are
//! replaced by that floor and reported, leaving residual correction to the
//! caller.

use faer::linalg::matmul::matmul;
use faer::linalg::matmul::triangular::{self as trimul, BlockStructure};
use faer::linalg::triangular_solve::{
    solve_unit_lower_triangular_in_place, solve_unit_upper_triangular_in_place,
};
use faer::{Accum, MatMut, MatRef, Par};
use num_complex::Complex64 as C64;

use super::Csr;

const LEAF_SIZE: usize = 96;
const PANEL: usize = 48;
const PIVOT_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FactorStats {
    pub n: usize,
    pub fronts: usize,
    pub factor_entries: usize,
    pub max_front: usize,
    pub perturbed_pivots: usize,
    /// min |d_i| / max |d_i| over all pivots
    pub pivot_ratio: f64,
}

#[derive(Clone, Debug)]
struct Node {
    start: usize,
    end: usize,
    update: Vec<usize>,
    children: Vec<usize>,
    l11: Vec<C64>,
    l21: Vec<C64>,
}

impl Node {
    fn nown(&self) -> usize {
        self.end - self.start
    }
}

/// Factorization `P A Pᵀ = L D Lᵀ`.
#[derive(Clone, Debug)]
pub struct Multifrontal {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    nodes: Vec<Node>,
    diag: Vec<C64>,
    stats: FactorStats,
}

struct Tree {
    own: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

fn dissect(mut ids: Vec<usize>, coords: &[[usize; 3]], tree: &mut Tree) -> usize {
    if ids.len() > LEAF_SIZE {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        for &i in &ids {
            for a in 0..3 {
                lo[a] = lo[a].min(coords[i][a]);
                hi[a] = hi[a].max(coords[i][a]);
            }
        }
        let mut axes = [0usize, 1, 2];
        axes.sort_by_key(|&a| std::cmp::Reverse(hi[a] - lo[a]));
        for a in axes {
            if hi[a] - lo[a] < 2 {
                continue;
            }
            let mut p = (lo[a] + hi[a]) / 2;
            if p % 2 == 1 {
                p += 1;
            }
            if p >= hi[a] {
                p -= 2;
            }
            if p <= lo[a] {
                continue;
            }
            let (mut left, mut right, mut sep) = (Vec::new(), Vec::new(), Vec::new());
            for &i in &ids {
                match coords[i][a].cmp(&p) {
                    std::cmp::Ordering::Less => left.push(i),
                    std::cmp::Ordering::Greater => right.push(i),
                    std::cmp::Ordering::Equal => sep.push(i),
                }
            }
            if left.is_empty() || right.is_empty() {
                continue;
            }
            let cl = dissect(left, coords, tree);
            let cr = dissect(right, coords, tree);
            sep.sort_unstable();
            tree.own.push(sep);
            tree.children.push(vec![cl, cr]);
            return tree.own.len() - 1;
        }
    }
    ids.sort_unstable();
    tree.own.push(ids);
    tree.children.push(Vec::new());
    tree.own.len() - 1
}

impl Multifrontal {
    /// Orders, analyses and factors `a` (symmetric, square).
    pub fn factor(a: &Csr, coords: &[[usize; 3]]) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        assert_eq!(n, coords.len());
        let mut tree = Tree {
            own: Vec::new(),
            children: Vec::new(),
        };
        if n > 0 {
            dissect((0..n).collect(), coords, &mut tree);
        }
        let nt = tree.own.len();
        let mut perm = Vec::with_capacity(n);
        let mut nodes = Vec::with_capacity(nt);
        for t in 0..nt {
            let start = perm.len();
            perm.extend_from_slice(&tree.own[t]);
            nodes.push(Node {
                start,
                end: perm.len(),
                update: Vec::new(),
                children: tree.children[t].clone(),
                l11: Vec::new(),
                l21: Vec::new(),
            });
        }
        let mut iperm = vec![0usize; n];
        for (g, &old) in perm.iter().enumerate() {
            iperm[old] = g;
        }

        // symbolic: update index sets
        let mut mark = vec![usize::MAX; n];
        for t in 0..nt {
            let (start, end) = (nodes[t].start, nodes[t].end);
            let mut upd = Vec::new();
            for g in start..end {
                let (cols, _) = a.row(perm[g]);
                for &c in cols {
                    let g2 = iperm[c];
                    if g2 >= end && mark[g2] != t {
                        mark[g2] = t;
                        upd.push(g2);
                    }
                }
            }
            for ci in 0..nodes[t].children.len() {
                let c = nodes[t].children[ci];
                for k in 0..nodes[c].update.len() {
                    let g2 = nodes[c].update[k];
                    debug_assert!(g2 >= start);
                    if g2 >= end && mark[g2] != t {
                        mark[g2] = t;
                        upd.push(g2);
                    }
                }
            }
            upd.sort_unstable();
            nodes[t].update = upd;
        }

        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let floor = PIVOT_FLOOR * scale;
        let mut diag = vec![C64::new(0.0, 0.0); n];
        let mut stats = FactorStats {
            n,
            fronts: nt,
            ..Default::default()
        };
        let mut pmin = f64::INFINITY;
        let mut pmax = 0.0f64;
        let mut loc = vec![0usize; n];
        let mut pending: Vec<Option<Vec<C64>>> = vec![None; nt];

        for t in 0..nt {
            let (start, end) = (nodes[t].start, nodes[t].end);
            let nown = end - start;
            let nupd = nodes[t].update.len();
            let nf = nown + nupd;
            stats.max_front = stats.max_front.max(nf);
            for (k, &g) in nodes[t].update.iter().enumerate() {
                loc[g] = nown + k;
            }
            let pos = |g: usize, loc: &[usize]| if g < end { g - start } else { loc[g] };
            let mut f = vec![C64::new(0.0, 0.0); nf * nf];
            for g in start..end {
                let j = g - start;
                let (cols, vals) = a.row(perm[g]);
                for (&c, &v) in cols.iter().zip(vals) {
                    let g2 = iperm[c];
                    if g2 < g {
                        continue;
                    }
                    f[pos(g2, &loc) + j * nf] += v;
                }
            }
            for ci in 0..nodes[t].children.len() {
                let c = nodes[t].children[ci];
                let cu = pending[c].take().expect("child update consumed once");
                let uc = &nodes[c].update;
                let m = uc.len();
                for b in 0..m {
                    let col = pos(uc[b], &loc);
                    let dst = &mut f[col * nf..(col + 1) * nf];
                    let src = &cu[b * m..(b + 1) * m];
                    for a in b..m {
                        dst[pos(uc[a], &loc)] += src[a];
                    }
                }
            }

            let (np, pmn, pmx) = partial_ldlt(&mut f, nf, nown, floor);
            stats.perturbed_pivots += np;
            pmin = pmin.min(pmn);
            pmax = pmax.max(pmx);

            let mut l11 = vec![C64::new(0.0, 0.0); nown * nown];
            let mut l21 = vec![C64::new(0.0, 0.0); nupd * nown];
            for j in 0..nown {
                l11[j * nown..(j + 1) * nown].copy_from_slice(&f[j * nf..j * nf + nown]);
                l21[j * nupd..(j + 1) * nupd].copy_from_slice(&f[j * nf + nown..(j + 1) * nf]);
                diag[start + j] = f[j * nf + j];
            }
            if nupd > 0 {
                let mut u = vec![C64::new(0.0, 0.0); nupd * nupd];
                for j in 0..nupd {
                    let src = (nown + j) * nf + nown;
                    u[j * nupd..(j + 1) * nupd].copy_from_slice(&f[src..src + nupd]);
                }
                pending[t] = Some(u);
            }
            stats.factor_entries += nown * nown + nupd * nown;
            nodes[t].l11 = l11;
            nodes[t].l21 = l21;
        }
        stats.pivot_ratio = if pmax > 0.0 { pmin / pmax } else { 0.0 };
        Self {
            n,
            perm,
            iperm,
            nodes,
            diag,
            stats,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stats(&self) -> &FactorStats {
        &self.stats
    }

    /// Solves `A X = B` in place; `x` holds `m` right-hand sides column-major.
    pub fn solve_in_place(&self, x: &mut [C64], m: usize) {
        let n = self.n;
        assert_eq!(x.len(), n * m);
        if n == 0 || m == 0 {
            return;
        }
        let mut w = vec![C64::new(0.0, 0.0); n * m];
        for j in 0..m {
            for g in 0..n {
                w[g + j * n] = x[self.perm[g] + j * n];
            }
        }
        let mut own = Vec::new();
        let mut upd = Vec::new();
        for node in &self.nodes {
            let nown = node.nown();
            let nupd = node.update.len();
            if nown == 0 {
                continue;
            }
            gather_block(&w, n, m, node.start, nown, &mut own);
            let l11 = MatRef::from_column_major_slice(&node.l11, nown, nown);
            solve_unit_lower_triangular_in_place(
                l11,
                MatMut::from_column_major_slice_mut(&mut own, nown, m),
                Par::Seq,
            );
            scatter_block(&mut w, n, m, node.start, nown, &own);
            if nupd > 0 {
                gather_rows(&w, n, m, &node.update, &mut upd);
                matmul(
                    MatMut::from_column_major_slice_mut(&mut upd, nupd, m),
                    Accum::Add,
                    MatRef::from_column_major_slice(&node.l21, nupd, nown),
                    MatRef::from_column_major_slice(&own, nown, m),
                    C64::new(-1.0, 0.0),
                    Par::Seq,
                );
                scatter_rows(&mut w, n, m, &node.update, &upd);
            }
        }
        for j in 0..m {
            for g in 0..n {
                w[g + j * n] /= self.diag[g];
            }
        }
        for node in self.nodes.iter().rev() {
            let nown = node.nown();
            let nupd = node.update.len();
            if nown == 0 {
                continue;
            }
            gather_block(&w, n, m, node.start, nown, &mut own);
            if nupd > 0 {
                gather_rows(&w, n, m, &node.update, &mut upd);
                matmul(
                    MatMut::from_column_major_slice_mut(&mut own, nown, m),
                    Accum::Add,
                    MatRef::from_column_major_slice(&node.l21, nupd, nown).transpose(),
                    MatRef::from_column_major_slice(&upd, nupd, m),
                    C64::new(-1.0, 0.0),
                    Par::Seq,
                );
            }
            let l11 = MatRef::from_column_major_slice(&node.l11, nown, nown);
            solve_unit_upper_triangular_in_place(
                l11.transpose(),
                MatMut::from_column_major_slice_mut(&mut own, nown, m),
                Par::Seq,
            );
            scatter_block(&mut w, n, m, node.start, nown, &own);
        }
        for j in 0..m {
            for g in 0..n {
                x[self.perm[g] + j * n] = w[g + j * n];
            }
        }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x, 1);
        x
    }

    /// Position of an original unknown in the elimination order.
    pub fn position(&self, i: usize) -> usize {
        self.iperm[i]
    }
}

fn gather_block(w: &[C64], n: usize, m: usize, start: usize, len: usize, out: &mut Vec<C64>) {
    out.clear();
    for j in 0..m {
        out.extend_from_slice(&w[start + j * n..start + len + j * n]);
    }
}

fn scatter_block(w: &mut [C64], n: usize, m: usize, start: usize, len: usize, src: &[C64]) {
    for j in 0..m {
        w[start + j * n..start + len + j * n].copy_from_slice(&src[j * len..(j + 1) * len]);
    }
}

fn gather_rows(w: &[C64], n: usize, m: usize, rows: &[usize], out: &mut Vec<C64>) {
    out.clear();
    for j in 0..m {
        let col = &w[j * n..(j + 1) * n];
        out.extend(rows.iter().map(|&r| col[r]));
    }
}

fn scatter_rows(w: &mut [C64], n: usize, m: usize, rows: &[usize], src: &[C64]) {
    let k = rows.len();
    for j in 0..m {
        let col = &mut w[j * n..(j + 1) * n];
        for (a, &r) in rows.iter().enumerate() {
            col[r] = src[a + j * k];
        }
    }
}

/// Eliminates the first `nown` columns of the lower triangle of the `nf`×`nf`
/// column-major front `f`, leaving unit-lower `L` below the diagonal, `D` on
/// it, and the Schur complement in the trailing block.
fn partial_ldlt(f: &mut [C64], nf: usize, nown: usize, floor: f64) -> (usize, f64, f64) {
    let mut perturbed = 0;
    let mut pmin = f64::INFINITY;
    let mut pmax = 0.0f64;
    let mut coef = vec![C64::new(0.0, 0.0); PANEL];
    let mut k0 = 0;
    while k0 < nown {
        let k1 = (k0 + PANEL).min(nown);
        for j in k0..k1 {
            let mut d = f[j + j * nf];
            if d.norm() < floor {
                d = if d.norm() > 0.0 {
                    d * (floor / d.norm())
                } else {
                    C64::new(floor, 0.0)
                };
                f[j + j * nf] = d;
                perturbed += 1;
            }
            pmin = pmin.min(d.norm());
            pmax = pmax.max(d.norm());
            let dinv = d.inv();
            for c in j + 1..k1 {
                coef[c - k0] = f[c + j * nf];
            }
            for i in j + 1..nf {
                f[i + j * nf] *= dinv;
            }
            let (left, right) = f.split_at_mut((j + 1) * nf);
            let lcol = &left[j * nf..];
            for c in j + 1..k1 {
                let w = coef[c - k0];
                let dst = &mut right[(c - j - 1) * nf..(c - j) * nf];
                for i in c..nf {
                    dst[i] -= lcol[i] * w;
                }
            }
        }
        if k1 < nf {
            let m = nf - k1;
            let b = k1 - k0;
            // W = L_panel * D
            let mut wbuf = vec![C64::new(0.0, 0.0); m * b];
            for (jj, j) in (k0..k1).enumerate() {
                let d = f[j + j * nf];
                for i in 0..m {
                    wbuf[i + jj * m] = f[k1 + i + j * nf] * d;
                }
            }
            let (left, right) = f.split_at_mut(k1 * nf);
            let panel = MatRef::from_column_major_slice_with_stride(&left[k0 * nf + k1..], m, b, nf);
            let trailing = MatMut::from_column_major_slice_with_stride_mut(&mut right[k1..], m, m, nf);
            trimul::matmul(
                trailing,
                BlockStructure::TriangularLower,
                Accum::Add,
                MatRef::from_column_major_slice(&wbuf, m, b),
                BlockStructure::Rectangular,
                panel.transpose(),
                BlockStructure::Rectangular,
                C64::new(-1.0, 0.0),
                Par::Seq,
            );
        }
        k0 = k1;
    }
    (perturbed, pmin, pmax)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 3-D 7-point shifted Laplacian on an `n`³ node grid with complex shift.
    fn laplace(n: usize, shift: C64) -> (Csr, Vec<[usize; 3]>) {
        let id = |i: usize, j: usize, k: usize| i + n * (j + n * k);
        let mut trip = Vec::new();
        let mut coords = Vec::new();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let r = id(i, j, k);
                    coords.push([2 * i, 2 * j, 2 * k]);
                    trip.push((r, r, C64::new(6.0, 0.0) - shift));
                    let mut nb = |ii: isize, jj: isize, kk: isize| {
                        if ii >= 0 && jj >= 0 && kk >= 0 {
                            let (ii, jj, kk) = (ii as usize, jj as usize, kk as usize);
                            if ii < n && jj < n && kk < n {
                                trip.push((r, id(ii, jj, kk), C64::new(-1.0, 0.0)));
                            }
                        }
                    };
                    let (i, j, k) = (i as isize, j as isize, k as isize);
                    nb(i - 1, j, k);
                    nb(i + 1, j, k);
                    nb(i, j - 1, k);
                    nb(i, j + 1, k);
                    nb(i, j, k - 1);
                    nb(i, j, k + 1);
                }
            }
        }
        (Csr::from_triplets(n * n * n, n * n * n, &trip), coords)
    }

    #[test]
    fn solves_indefinite_complex_system() {
        let (a, coords) = laplace(12, C64::new(2.5, 0.3));
        let f = Multifrontal::factor(&a, &coords);
        assert!(f.stats().fronts > 1);
        let n = a.nrows();
        let m = 3;
        let b: Vec<C64> = (0..n * m)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut x = b.clone();
        f.solve_in_place(&mut x, m);
        for j in 0..m {
            let r = a.mul_vec(&x[j * n..(j + 1) * n]);
            let err: f64 = r
                .iter()
                .zip(&b[j * n..(j + 1) * n])
                .map(|(p, q)| (p - q).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-10, "residual {err}");
        }
    }
}
