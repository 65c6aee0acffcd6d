//! Run configuration. Every table rejects unknown keys.

use std::path::Path;

use maxtomo::grid::{BoxGrid, Face};
use maxtomo::locate::{synthesize_scenario, InclusionScenario, ScenarioSpec};
use maxtomo::medium::{RefractiveIndexField, SupportBox};
use maxtomo::recon::{Route, SSchedule, Window};
use maxtomo::wave::{WaveParams, EPS0, MU0};
use maxtomo::{Error, Result, C64};
use serde::Deserialize;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// output directory (overridden by `--out`)
    pub out: Option<String>,
    pub grid: GridConfig,
    pub wave: WaveConfig,
    pub patch: PatchConfig,
    pub solver: SolverConfig,
    pub medium: MediumConfig,
    pub inclusions: Option<InclusionConfig>,
    pub forward: ForwardConfig,
    pub lgrid: LGridConfig,
    pub recon: ReconConfig,
    pub locate: LocateConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub extent: [f64; 3],
    pub cells: [usize; 3],
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            extent: [1.0; 3],
            cells: [16; 3],
        }
    }
}

/// Either `k` (scaled units) or `omega` in rad/s with vacuum constants.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveConfig {
    pub k: Option<f64>,
    pub omega: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatchConfig {
    pub faces: Vec<String>,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            faces: vec!["z+".into()],
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// auto | direct | iterative
    pub kind: String,
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: "auto".into(),
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumConfig {
    /// `[re, im]`
    pub background: [f64; 2],
    pub contrast: Option<ContrastConfig>,
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            background: [1.0, 0.0],
            contrast: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContrastConfig {
    /// gaussian | bump
    pub shape: String,
    pub amplitude: [f64; 2],
    /// Gaussian standard deviation (ignored by `bump`)
    pub width: f64,
    pub center: [f64; 3],
    /// half-width of the support box
    pub radius: f64,
}

impl Default for ContrastConfig {
    fn default() -> Self {
        Self {
            shape: "gaussian".into(),
            amplitude: [0.05, 0.0],
            width: 0.08,
            center: [0.5; 3],
            radius: 0.25,
        }
    }
}

/// Explicit `centers`, or `count` random centers drawn with the run seed.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InclusionConfig {
    pub centers: Option<Vec<[f64; 3]>>,
    pub count: usize,
    pub alpha: f64,
    /// `n_j` for explicit centers
    pub index: [f64; 2],
    /// corners of the random `n_j` box
    pub index_min: [f64; 2],
    pub index_max: [f64; 2],
    /// minimum center separation
    pub c0: f64,
    /// minimum boundary clearance
    pub c: f64,
}

impl Default for InclusionConfig {
    fn default() -> Self {
        Self {
            centers: None,
            count: 2,
            alpha: 0.06,
            index: [2.0, 0.5],
            index_min: [1.5, 0.0],
            index_max: [2.5, 1.0],
            c0: 0.4,
            c: 0.2,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardConfig {
    pub direction: [f64; 3],
    pub polarization: [f64; 3],
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self {
            direction: [0.0, 0.6, 0.8],
            polarization: [1.0, 0.0, 0.0],
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LGridConfig {
    /// `l_max` as a multiple of `k`
    pub l_max_factor: f64,
    pub s_k_factor: f64,
    pub s_l_factor: f64,
}

impl Default for LGridConfig {
    fn default() -> Self {
        Self {
            l_max_factor: 2.0,
            s_k_factor: 1.5,
            s_l_factor: 0.75,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconConfig {
    /// linearized | full | joint
    pub route: String,
    /// none | hann-radial
    pub window: String,
    /// Tikhonov weight of the joint route, relative to the largest eigenvalue
    pub lambda: f64,
    /// Tikhonov weight of the full route, relative to the operator norm
    pub reg_rel: f64,
    /// cells between the boundary and the joint fitting region
    pub inset: usize,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            route: "joint".into(),
            window: "none".into(),
            lambda: 1e-5,
            reg_rel: 1e-6,
            inset: 2,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocateConfig {
    pub threshold: f64,
    /// defaults to `c0 / 2`
    pub suppression_radius: Option<f64>,
    pub inset: usize,
}

impl Default for LocateConfig {
    fn default() -> Self {
        Self {
            threshold: 3.0,
            suppression_radius: None,
            inset: 5,
        }
    }
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn c64(v: [f64; 2]) -> C64 {
    C64::new(v[0], v[1])
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| cfg(e.message().to_string()))?;
        c.check()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&maxtomo::io::read_text(path)?)
    }

    fn check(&self) -> Result<()> {
        let finite = |x: f64| x.is_finite();
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(cfg("solver.tol must lie in (0, 1)"));
        }
        if !(self.lgrid.l_max_factor > 0.0 && finite(self.lgrid.l_max_factor)) {
            return Err(cfg("lgrid.l_max_factor must be positive"));
        }
        if !(self.lgrid.s_k_factor >= 1.0) || !(self.lgrid.s_l_factor >= 0.0) {
            return Err(cfg("lgrid.s_k_factor must be >= 1 and lgrid.s_l_factor >= 0"));
        }
        if !(self.recon.lambda >= 0.0 && self.recon.lambda < 1.0) {
            return Err(cfg("recon.lambda must lie in [0, 1)"));
        }
        if !(self.recon.reg_rel >= 0.0 && self.recon.reg_rel < 1.0) {
            return Err(cfg("recon.reg_rel must lie in [0, 1)"));
        }
        if !(self.locate.threshold > 0.0) {
            return Err(cfg("locate.threshold must be positive"));
        }
        if let Some(r) = self.locate.suppression_radius {
            if !(r > 0.0) {
                return Err(cfg("locate.suppression_radius must be positive"));
            }
        }
        if let Some(c) = &self.medium.contrast {
            if !matches!(c.shape.as_str(), "gaussian" | "bump") {
                return Err(cfg(format!("unknown contrast shape '{}'", c.shape)));
            }
            if !(c.width > 0.0 && c.radius > 0.0) {
                return Err(cfg("contrast width and radius must be positive"));
            }
        }
        if self.medium.contrast.is_some() && self.inclusions.is_some() {
            return Err(cfg("medium.contrast and inclusions are mutually exclusive"));
        }
        self.route()?;
        self.window()?;
        self.solver_kind()?;
        self.faces()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<BoxGrid> {
        BoxGrid::new(self.grid.extent, self.grid.cells)
    }

    pub fn wave(&self) -> Result<WaveParams> {
        match (self.wave.k, self.wave.omega) {
            (Some(k), None) => WaveParams::from_wavenumber(k),
            (None, Some(w)) => WaveParams::new(w, EPS0, MU0),
            (None, None) => WaveParams::from_wavenumber(4.0),
            (Some(_), Some(_)) => Err(cfg("give either wave.k or wave.omega, not both")),
        }
    }

    pub fn faces(&self) -> Result<Vec<Face>> {
        self.patch
            .faces
            .iter()
            .map(|s| Face::parse(s).ok_or_else(|| cfg(format!("unknown face '{s}'"))))
            .collect()
    }

    pub fn route(&self) -> Result<Route> {
        let r: Route = self.recon.route.parse().map_err(|_| cfg(format!("unknown route '{}'", self.recon.route)))?;
        if r == Route::Synthetic {
            return Err(cfg("the synthetic route needs an analytic table"));
        }
        Ok(r)
    }

    pub fn window(&self) -> Result<Window> {
        self.recon
            .window
            .parse()
            .map_err(|_| cfg(format!("unknown window '{}'", self.recon.window)))
    }

    pub fn solver_kind(&self) -> Result<maxtomo::forward::SolverKind> {
        use maxtomo::forward::SolverKind;
        match self.solver.kind.as_str() {
            "auto" => Ok(SolverKind::Auto),
            "direct" => Ok(SolverKind::Direct),
            "iterative" => Ok(SolverKind::Iterative),
            s => Err(cfg(format!("unknown solver kind '{s}'"))),
        }
    }

    pub fn solver_options(&self) -> Result<maxtomo::forward::SolverOptions> {
        Ok(maxtomo::forward::SolverOptions {
            kind: self.solver_kind()?,
            tol: self.solver.tol,
            ..Default::default()
        })
    }

    pub fn schedule(&self) -> SSchedule {
        SSchedule::Scaled {
            k_factor: self.lgrid.s_k_factor,
            l_factor: self.lgrid.s_l_factor,
        }
    }

    pub fn background(&self) -> C64 {
        c64(self.medium.background)
    }

    /// Planted contrast `n − n_bg` as a function of position (zero outside its box).
    pub fn contrast_fn(&self) -> Option<(SupportBox, impl Fn([f64; 3]) -> C64 + Clone)> {
        let c = self.medium.contrast.clone()?;
        let sb = SupportBox::centered(c.center, c.radius).ok()?;
        let amp = c64(c.amplitude);
        let f = move |x: [f64; 3]| {
            if !sb.contains(x) {
                return C64::new(0.0, 0.0);
            }
            let d: Vec<f64> = (0..3).map(|i| x[i] - c.center[i]).collect();
            let v = if c.shape == "gaussian" {
                (-d.iter().map(|t| t * t).sum::<f64>() / (2.0 * c.width * c.width)).exp()
            } else {
                d.iter()
                    .map(|t| (std::f64::consts::PI * t / (2.0 * c.radius)).cos().powi(2))
                    .product()
            };
            amp * v
        };
        Some((sb, f))
    }

    pub fn scenario(&self) -> Result<Option<InclusionScenario>> {
        let Some(inc) = &self.inclusions else {
            return Ok(None);
        };
        let extent = self.grid.extent;
        let sc = match &inc.centers {
            Some(cs) => InclusionScenario::new(
                extent,
                cs.clone(),
                inc.alpha,
                vec![c64(inc.index); cs.len()],
                inc.c0,
                inc.c,
            )?,
            None => synthesize_scenario(
                self.seed,
                &ScenarioSpec {
                    m: inc.count,
                    c0: inc.c0,
                    c: inc.c,
                    alpha: inc.alpha,
                    index_range: (c64(inc.index_min), c64(inc.index_max)),
                    extent,
                },
            )?,
        };
        Ok(Some(sc))
    }

    /// The medium described by `medium` and `inclusions`.
    pub fn medium(&self, grid: &BoxGrid) -> Result<RefractiveIndexField> {
        let bg = self.background();
        let base = RefractiveIndexField::homogeneous(grid, bg)?;
        if let Some((sb, f)) = self.contrast_fn() {
            return RefractiveIndexField::from_fn(grid, bg, sb, move |x| bg + f(x));
        }
        if self.medium.contrast.is_some() {
            return Err(cfg("contrast support box must be nonempty"));
        }
        if let Some(sc) = self.scenario()? {
            return maxtomo::locate::perturbed_index(&sc, &base, grid);
        }
        Ok(base)
    }
}
