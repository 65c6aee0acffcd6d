//! Quick invariant suites run by `maxtomo validate`.

use std::sync::Arc;

use maxtomo::cgo::{cgo_pair, g_of_s, CgoFrame};
use maxtomo::forward::{curl_matrix, curl_trace, gradient_matrix, BvpSolver, CurlCurlSystem, SolverOptions, TraceScheme};
use maxtomo::grid::BoxGrid;
use maxtomo::impedance::{assemble_impedance, apply_impedance};
use maxtomo::io::{table_from_csv, table_to_csv, VolumeFile, VolumeKind};
use maxtomo::medium::{refractive_index, RefractiveIndexField, SupportBox};
use maxtomo::patch::{BoundaryPatch, TangentialField};
use maxtomo::recon::{scan_fourier, LGrid, Route, SSchedule};
use maxtomo::wave::WaveParams;
use maxtomo::{Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;

pub struct Outcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

type Suite = fn(&RunConfig, &mut ChaCha8Rng) -> Result<(bool, String)>;

const SUITES: [(&str, Suite); 10] = [
    ("edge_index_bijection", index_bijection),
    ("curl_grad_zero", curl_grad),
    ("index_admissibility", admissibility),
    ("extension_by_zero", extension),
    ("cgo_algebra", cgo_algebra),
    ("g_asymptotics", g_asymptotics),
    ("zero_data_zero_field", zero_data),
    ("impedance_linearity", impedance_linearity),
    ("transparency", transparency),
    ("format_round_trip", formats),
];

pub fn run(cfg: &RunConfig) -> Vec<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    SUITES
        .iter()
        .map(|(name, f)| match f(cfg, &mut rng) {
            Ok((pass, detail)) => Outcome { name, pass, detail },
            Err(e) => Outcome {
                name,
                pass: false,
                detail: format!("{}: {e}", e.class()),
            },
        })
        .collect()
}

fn small() -> Result<(BoxGrid, WaveParams)> {
    Ok((BoxGrid::unit_cube(8)?, WaveParams::from_wavenumber(4.0)?))
}

fn cnum(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

fn index_bijection(cfg: &RunConfig, _: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let g = cfg.grid()?;
    let mut seen = vec![false; g.n_edges()];
    for d in 0..3 {
        let s = g.edge_shape(d);
        for k in 0..s[2] {
            for j in 0..s[1] {
                for i in 0..s[0] {
                    let idx = g.edge_index(d, [i, j, k]);
                    if idx >= seen.len() || seen[idx] || g.edge_coords(idx) != (d, [i, j, k]) {
                        return Ok((false, format!("edge ({d}, {i}, {j}, {k})")));
                    }
                    seen[idx] = true;
                }
            }
        }
    }
    let all = seen.iter().all(|&b| b);
    Ok((all, format!("{} edges", g.n_edges())))
}

fn curl_grad(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let g = cfg.grid()?;
    let phi: Vec<C64> = (0..g.n_nodes()).map(|_| cnum(rng)).collect();
    let grad = gradient_matrix(&g).mul_vec(&phi);
    let cg = curl_matrix(&g).mul_vec(&grad);
    let scale = grad.iter().map(|v| v.norm()).fold(0.0, f64::max) / g.h_max();
    let m = cg.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok((m <= 1e-12 * scale, format!("max |curl grad| = {m:.3e}")))
}

fn admissibility(_: &RunConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let (g, wp) = small()?;
    let sb = SupportBox::new([0.25; 3], [0.75; 3])?;
    let mut eps = vec![wp.eps0(); g.n_edges()];
    let mut sigma = vec![0.0; g.n_edges()];
    for e in 0..g.n_edges() {
        if sb.contains(g.edge_midpoint(e)) {
            eps[e] = wp.eps0() * (0.1 + 5.0 * rng.random::<f64>());
            sigma[e] = wp.omega() * wp.eps0() * rng.random::<f64>();
        }
    }
    let n = refractive_index(&g, &eps, &sigma, &wp, Some(sb))?;
    let ok = n.values().iter().all(|v| v.re > 0.0 && v.im >= 0.0);
    Ok((ok, format!("{} edges", g.n_edges())))
}

fn extension(_: &RunConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let (g, _) = small()?;
    let top = Arc::new(BoundaryPatch::top(&g));
    let full = Arc::new(BoundaryPatch::full(&g));
    let f = TangentialField::new(top.clone(), (0..top.len()).map(|_| cnum(rng)).collect())?;
    let x = f.extend_to(full.clone())?;
    let ok = full
        .dofs()
        .iter()
        .zip(x.values())
        .all(|(&e, v)| if top.slot(e).is_some() { *v == f.at_edge(e) } else { *v == C64::new(0.0, 0.0) });
    Ok((ok, format!("{} of {} DOFs on the patch", top.len(), full.len())))
}

fn cgo_algebra(_: &RunConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = [0.0f64; 4];
    for _ in 0..200 {
        let k = 0.5 + 10.0 * rng.random::<f64>();
        let l = [0; 3].map(|_| 4.0 * k * (rng.random::<f64>() - 0.5));
        let s = k * (1.0 + 9.0 * rng.random::<f64>());
        let p = cgo_pair(&CgoFrame::for_l(l, s, k)?)?;
        let dot = |a: [C64; 3], b: [C64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let norm = |a: [C64; 3]| a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for (xi, eta) in [(p.xi1, p.eta1), (p.xi2, p.eta2)] {
            worst[0] = worst[0].max((dot(xi, xi) - k * k).norm() / (k * k));
            worst[1] = worst[1].max(dot(xi, eta).norm() / (norm(xi) * norm(eta)));
        }
        // round-off of l/2 ± s w₂, in units of ε(|l|/2 + s)
        let scale = f64::EPSILON * (0.5 * l.iter().map(|v| v * v).sum::<f64>().sqrt() + s);
        for i in 0..3 {
            let sum = p.xi1[i] + p.xi2[i];
            worst[2] = worst[2].max((sum - C64::new(0.0, l[i])).norm() / scale);
        }
        worst[3] = worst[3].max((dot(p.eta1, p.eta2) - 1.0).norm());
    }
    let ok = worst[0] <= 1e-12 && worst[1] <= 1e-10 && worst[2] <= 4.0 && worst[3] <= 1e-12;
    Ok((ok, format!("worst {:.1e} {:.1e} {:.1e} {:.1e}", worst[0], worst[1], worst[2], worst[3])))
}

fn g_asymptotics(_: &RunConfig, _: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let (k, l) = (3.0, [2.0, -1.0, 4.0]);
    let l2: f64 = l.iter().map(|v| v * v).sum();
    let limit = (l2 + 4.0 * k * k) / 8.0;
    let mut worst = 0.0f64;
    let mut ok = true;
    for s in [10.0, 100.0, 1000.0] {
        let dev = (s * g_of_s(s, l, k) - limit).abs() / limit;
        ok &= dev <= 2.0 / s;
        worst = worst.max(dev * s);
    }
    Ok((ok, format!("max s*deviation = {worst:.3}")))
}

fn zero_data(_: &RunConfig, _: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let (g, wp) = small()?;
    let n = Arc::new(RefractiveIndexField::homogeneous(&g, C64::new(1.0, 0.0))?);
    let sys = Arc::new(CurlCurlSystem::new(&g, n, &wp)?);
    let solver = BvpSolver::new(sys, SolverOptions::default())?;
    let sol = solver.solve(&TangentialField::zeros(Arc::new(BoundaryPatch::full(&g))))?;
    let m = sol.e.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok((m <= 1e-10, format!("max |E| = {m:.1e}")))
}

fn impedance_linearity(_: &RunConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let (g, wp) = small()?;
    let n = RefractiveIndexField::homogeneous(&g, C64::new(1.0, 0.0))?;
    let top = Arc::new(BoundaryPatch::top(&g));
    let z = assemble_impedance(&n, &g, &top, &wp)?;
    let f = TangentialField::new(top.clone(), (0..top.len()).map(|_| cnum(rng)).collect())?;
    // Z f from the matrix against Z f from one direct solve
    let zf = apply_impedance(&z, &f)?;
    let sys = Arc::new(CurlCurlSystem::new(&g, Arc::new(n), &wp)?);
    let solver = BvpSolver::new(sys.clone(), SolverOptions::default())?;
    let full = Arc::new(BoundaryPatch::full(&g));
    let sol = solver.solve(&f.extend_to(full)?)?;
    let direct = curl_trace(Some(&sys), &g, &sol.e, &top, TraceScheme::Variational)?;
    let d = zf.combine(C64::new(1.0, 0.0), &direct, C64::new(-1.0, 0.0))?.norm() / direct.norm();
    Ok((d <= 1e-8, format!("relative defect {d:.1e}")))
}

fn transparency(_: &RunConfig, _: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let (g, wp) = small()?;
    let n = RefractiveIndexField::homogeneous(&g, C64::new(1.0, 0.0))?;
    let top = Arc::new(BoundaryPatch::top(&g));
    let z = assemble_impedance(&n, &g, &top, &wp)?;
    let lg = LGrid::new(&g, wp.k(), 2.0 * wp.k(), SSchedule::default())?;
    let t = scan_fourier(&z, &z, &lg, Route::Linearized)?;
    let ok = t.failures() == 0 && t.samples.iter().all(|s| s.value == C64::new(0.0, 0.0));
    Ok((ok, format!("{} samples", t.len())))
}

fn formats(_: &RunConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let data: Vec<C64> = (0..60).map(|_| cnum(rng) * 1e-7).collect();
    let v = VolumeFile::new([3, 4, 5], [0.1, 0.2, 1.0 / 3.0], VolumeKind::Contrast, data)?;
    let b = v.to_bytes();
    let vol_ok = VolumeFile::from_bytes(&b)?.to_bytes() == b;
    let (g, wp) = small()?;
    let lg = LGrid::new(&g, wp.k(), 2.0 * wp.k(), SSchedule::default())?;
    let t = maxtomo::recon::synthetic_table(&lg, |l| C64::new(l[0].sin(), 1.0 / (1.0 + l[1].abs())));
    let csv = table_to_csv(&t);
    let u = table_from_csv(&csv)?;
    let csv_ok = u.samples.iter().zip(&t.samples).all(|(a, b)| a.l == b.l && a.value == b.value && a.s == b.s);
    Ok((vol_ok && csv_ok, format!("{} bytes, {} rows", b.len(), t.len())))
}
