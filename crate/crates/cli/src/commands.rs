use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use maxtomo::forward::{boundary_traces, BvpSolver, CurlCurlSystem, PlaneWave};
use maxtomo::grid::BoxGrid;
use maxtomo::impedance::{assemble_impedance_with, ImpedanceOperator, ImpedanceOptions};
use maxtomo::io::{centers_to_csv, table_to_csv, write_text, VolumeFile};
use maxtomo::locate::{localize_and_recover, planted_moments, LocateOptions, Polarization};
use maxtomo::medium::RefractiveIndexField;
use maxtomo::patch::{BoundaryPatch, TangentialField};
use maxtomo::recon::{
    invert_fourier, relative_l2, scan_fourier_with, BackgroundModel, BackgroundOptions,
    ContrastVolume, LGrid, Route, ScanOptions,
};
use maxtomo::wave::WaveParams;
use maxtomo::{Error, Result, C64};

use crate::config::RunConfig;

/// `key = value` lines with 17 significant digits.
#[derive(Default)]
pub struct Report(String);

impl Report {
    pub fn text(&mut self, key: &str, v: impl std::fmt::Display) {
        writeln!(self.0, "{key} = {v}").unwrap();
    }

    pub fn num(&mut self, key: &str, v: f64) {
        writeln!(self.0, "{key} = {v:.16e}").unwrap();
    }

    pub fn complex(&mut self, key: &str, v: C64) {
        self.num(&format!("{key}_re"), v.re);
        self.num(&format!("{key}_im"), v.im);
    }

    pub fn point(&mut self, key: &str, x: [f64; 3]) {
        writeln!(self.0, "{key} = [{:.16e}, {:.16e}, {:.16e}]", x[0], x[1], x[2]).unwrap();
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

struct Setup {
    grid: BoxGrid,
    wave: WaveParams,
    patch: Arc<BoundaryPatch>,
}

fn setup(cfg: &RunConfig) -> Result<Setup> {
    let grid = cfg.grid()?;
    let wave = cfg.wave()?;
    let patch = Arc::new(BoundaryPatch::new(&grid, &cfg.faces()?)?);
    Ok(Setup { grid, wave, patch })
}

fn impedance(cfg: &RunConfig, s: &Setup, n: RefractiveIndexField) -> Result<ImpedanceOperator> {
    let sys = Arc::new(CurlCurlSystem::new(&s.grid, Arc::new(n), &s.wave)?);
    let opts = ImpedanceOptions {
        solver: cfg.solver_options()?,
        ..Default::default()
    };
    assemble_impedance_with(sys, &s.patch, &opts)
}

/// Background impedance plus scan options for the configured route.
fn background(cfg: &RunConfig, s: &Setup, route: Route, inset: usize) -> Result<(Arc<ImpedanceOperator>, ScanOptions)> {
    let bg = cfg.background();
    let mut scan = ScanOptions::new(route);
    scan.full.reg_rel = cfg.recon.reg_rel;
    scan.joint.lambda = cfg.recon.lambda;
    if route == Route::Joint {
        let opts = BackgroundOptions {
            solver: cfg.solver_options()?,
            inset,
            ..Default::default()
        };
        let model = Arc::new(BackgroundModel::new(&s.grid, bg, &s.patch, &s.wave, &opts)?);
        let z = Arc::new(model.impedance().clone());
        scan.background = Some(model);
        Ok((z, scan))
    } else {
        let n = RefractiveIndexField::homogeneous(&s.grid, bg)?;
        Ok((Arc::new(impedance(cfg, s, n)?), scan))
    }
}

fn lgrid(cfg: &RunConfig, s: &Setup) -> Result<LGrid> {
    let k = s.wave.k();
    LGrid::new(&s.grid, k, cfg.lgrid.l_max_factor * k, cfg.schedule())
}

pub fn forward(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let s = setup(cfg)?;
    let n = cfg.medium(&s.grid)?;
    let homogeneous = n.is_homogeneous();
    let bg = cfg.background();
    let d = unit(cfg.forward.direction)?;
    let p = cfg.forward.polarization;
    let dp = d[0] * p[0] + d[1] * p[1] + d[2] * p[2];
    let p = unit([p[0] - dp * d[0], p[1] - dp * d[1], p[2] - dp * d[2]])?;
    let wave = PlaneWave {
        direction: d,
        polarization: p.map(|v| C64::new(v, 0.0)),
        kappa: s.wave.k() * bg.sqrt(),
    };
    let full = Arc::new(BoundaryPatch::full(&s.grid));
    let f = TangentialField::from_vector_fn(full, |x| wave.field(x));
    let sys = Arc::new(CurlCurlSystem::new(&s.grid, Arc::new(n), &s.wave)?);
    let solver = BvpSolver::new(sys, cfg.solver_options()?)?;
    let sol = solver.solve(&f)?;
    let comps = VolumeFile::field_components(&s.grid, &sol.e)?;
    for (c, name) in comps.iter().zip(["field_x", "field_y", "field_z"]) {
        c.write(out.join(format!("{name}.mxc")))?;
    }
    let (nu_e, nu_curl) = boundary_traces(&sol, &s.patch)?;
    write_text(out.join("traces.csv"), &traces_csv(&s.patch, &nu_e, &nu_curl))?;

    let mut r = Report::default();
    r.text("command", "forward");
    r.text("method", format!("{:?}", sol.info.method).to_lowercase());
    r.text("iterations", sol.info.iterations);
    r.num("residual_norm", sol.residual_norm);
    if homogeneous {
        let exact = wave.sample_edges(&s.grid);
        let (mut e, mut d) = (0.0, 0.0);
        for i in 0..exact.len() {
            let w = s.grid.edge_weight(i);
            e += w * (sol.e[i] - exact[i]).norm_sqr();
            d += w * exact[i].norm_sqr();
        }
        r.num("plane_wave_relative_l2_error", (e / d).sqrt());
    }
    Ok(r)
}

fn unit(v: [f64; 3]) -> Result<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(n > 1e-12 && n.is_finite()) {
        return Err(Error::Config("direction and polarization must be nonzero and not parallel".into()));
    }
    Ok(v.map(|x| x / n))
}

fn traces_csv(patch: &BoundaryPatch, e: &TangentialField, c: &TangentialField) -> String {
    let g = patch.grid();
    let mut s = String::from("b,edge,x,y,z,face,e_re,e_im,curl_re,curl_im\n");
    for (b, &edge) in patch.dofs().iter().enumerate() {
        let x = g.edge_midpoint(edge);
        let (u, v) = (e.values()[b], c.values()[b]);
        writeln!(
            s,
            "{b},{edge},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            x[0],
            x[1],
            x[2],
            patch.dof_face(b),
            u.re,
            u.im,
            v.re,
            v.im
        )
        .unwrap();
    }
    s
}

pub fn impedance_cmd(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let s = setup(cfg)?;
    let n = cfg.medium(&s.grid)?;
    let z = impedance(cfg, &s, n)?;
    VolumeFile::from_impedance(&z).write(out.join("impedance.mxc"))?;
    let mut r = Report::default();
    r.text("command", "impedance");
    r.text("dofs", z.dim());
    r.num("k", z.k());
    r.num("spectral_norm", z.spectral_norm());
    Ok(r)
}

pub fn reconstruct(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let s = setup(cfg)?;
    let route = cfg.route()?;
    let n = cfg.medium(&s.grid)?;
    let lg = lgrid(cfg, &s)?;
    let (z_bg, scan) = background(cfg, &s, route, cfg.recon.inset)?;
    let z_n = impedance(cfg, &s, n)?;
    let table = scan_fourier_with(&z_n, &z_bg, &lg, &scan)?;
    let volume = invert_fourier(&table, &s.grid, cfg.window()?);
    write_text(out.join("table.csv"), &table_to_csv(&table))?;
    VolumeFile::from_contrast(&volume).write(out.join("contrast.mxc"))?;

    let mut r = Report::default();
    r.text("command", "reconstruct");
    r.text("route", route);
    r.text("window", volume.window.label());
    r.num("l_max", lg.l_max());
    r.text("samples", table.len());
    r.text("failed_samples", table.failures());
    let (_, peak) = volume.peak();
    r.point("peak", peak);
    if let Some((_, f)) = cfg.contrast_fn() {
        let truth = ContrastVolume::from_fn(&s.grid, f);
        r.num("relative_l2_error", relative_l2(&volume, &truth)?);
        let (_, tp) = truth.peak();
        r.point("true_peak", tp);
        r.num("peak_offset", dist(peak, tp));
        r.num("h", s.grid.h_max());
    }
    Ok(r)
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn locate(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let s = setup(cfg)?;
    let sc = cfg
        .scenario()?
        .ok_or_else(|| Error::Config("locate needs an [inclusions] table".into()))?;
    let route = cfg.route()?;
    let n = cfg.medium(&s.grid)?;
    let lg = lgrid(cfg, &s)?;
    let (z_bg, scan) = background(cfg, &s, route, cfg.locate.inset)?;
    let z_n = impedance(cfg, &s, n)?;
    let mut opts = LocateOptions::new(scan, sc.c0);
    opts.window = cfg.window()?;
    opts.threshold = cfg.locate.threshold;
    opts.clearance = sc.c;
    if let Some(r) = cfg.locate.suppression_radius {
        opts.suppression_radius = r;
    }
    let loc = localize_and_recover(&z_n, &z_bg, &lg, Some(sc.len()), &opts)?;
    write_text(out.join("centers.csv"), &centers_to_csv(&loc.moments))?;
    write_text(out.join("table.csv"), &table_to_csv(&loc.table))?;

    let planted = planted_moments(&sc, cfg.background(), &Polarization::Ball, Some(&s.grid))?;
    let mut r = Report::default();
    r.text("command", "locate");
    r.text("route", route);
    r.text("found", loc.centers.len());
    r.num("h", s.grid.h_max());
    for (j, m) in loc.moments.iter().enumerate() {
        r.point(&format!("center_{j}"), m.center);
        r.complex(&format!("moment_{j}"), m.scalar);
        if let Some(p) = planted
            .iter()
            .min_by(|a, b| dist(a.center, m.center).total_cmp(&dist(b.center, m.center)))
        {
            r.num(&format!("center_error_{j}"), dist(p.center, m.center));
            r.num(
                &format!("moment_relative_error_{j}"),
                (m.scalar - p.scalar).norm() / p.scalar.norm(),
            );
        }
    }
    Ok(r)
}
