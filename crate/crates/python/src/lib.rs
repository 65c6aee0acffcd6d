//! Python bindings: grids, media, impedance maps, Fourier scans, inversion,
//! inclusion localization and the binary volume format.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::sync::Arc;

use mxcore::cgo::{cgo_pair as pair, g_of_s as g, CgoFrame};
use mxcore::grid::{BoxGrid, Face};
use mxcore::impedance::{apply_impedance, assemble_impedance, ImpedanceOperator};
use mxcore::io::{table_from_csv, table_to_csv, VolumeFile};
use mxcore::locate::{localize_and_recover, perturbed_index, InclusionScenario, LocateOptions};
use mxcore::medium::{RefractiveIndexField, SupportBox};
use mxcore::patch::{BoundaryPatch, TangentialField};
use mxcore::recon::{
    invert_fourier, relative_l2, scan_fourier_with, BackgroundModel, BackgroundOptions,
    ContrastVolume, FourierTable, LGrid, Route, SSchedule, ScanOptions, Window,
};
use mxcore::wave::WaveParams;
use mxcore::{Error, C64};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(maxtomo, MaxtomoError, PyException, "Error raised by the toolkit, message `CLASS: detail`.");

fn err(e: Error) -> PyErr {
    MaxtomoError::new_err(format!("{}: {e}", e.class()))
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for mxcore::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn faces(names: &[String]) -> PyResult<Vec<Face>> {
    names
        .iter()
        .map(|s| Face::parse(s).ok_or_else(|| err(Error::Config(format!("unknown face '{s}'")))))
        .collect()
}

fn window(name: &str) -> PyResult<Window> {
    name.parse().map_err(|_| err(Error::Config(format!("unknown window '{name}'"))))
}

fn route(name: &str) -> PyResult<Route> {
    let r: Route = name.parse().py()?;
    if r == Route::Synthetic {
        return Err(err(Error::Config("the synthetic route needs an analytic table".into())));
    }
    Ok(r)
}

/// Uniform Yee grid on `[0, extent]`.
#[pyclass(name = "Grid", module = "maxtomo", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyGrid(pub BoxGrid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(extent: [f64; 3], cells: [usize; 3]) -> PyResult<Self> {
        BoxGrid::new(extent, cells).map(Self).py()
    }

    #[staticmethod]
    fn unit_cube(n: usize) -> PyResult<Self> {
        BoxGrid::unit_cube(n).map(Self).py()
    }

    #[getter]
    fn extent(&self) -> [f64; 3] {
        self.0.extent()
    }

    #[getter]
    fn cells(&self) -> [usize; 3] {
        self.0.cells()
    }

    #[getter]
    fn spacing(&self) -> [f64; 3] {
        self.0.spacing()
    }

    #[getter]
    fn h_max(&self) -> f64 {
        self.0.h_max()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.0.n_edges()
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.0.n_cells()
    }

    fn __repr__(&self) -> String {
        format!("Grid(extent={:?}, cells={:?})", self.0.extent(), self.0.cells())
    }
}

/// Complex refractive index per grid edge.
#[pyclass(name = "Medium", module = "maxtomo", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyMedium(pub Arc<RefractiveIndexField>);

#[pymethods]
impl PyMedium {
    #[staticmethod]
    #[pyo3(signature = (grid, background = C64::new(1.0, 0.0)))]
    fn homogeneous(grid: &PyGrid, background: C64) -> PyResult<Self> {
        RefractiveIndexField::homogeneous(&grid.0, background).map(|n| Self(Arc::new(n))).py()
    }

    /// Background plus `amplitude·exp(−|x−c|²/2w²)` inside the box of half-width `radius`.
    #[staticmethod]
    #[pyo3(signature = (grid, amplitude, width, center, radius, background = C64::new(1.0, 0.0)))]
    fn gaussian(grid: &PyGrid, amplitude: C64, width: f64, center: [f64; 3], radius: f64, background: C64) -> PyResult<Self> {
        if !(width > 0.0) {
            return Err(err(Error::Config("width must be positive".into())));
        }
        let sb = SupportBox::centered(center, radius).py()?;
        let f = move |x: [f64; 3]| {
            let r2: f64 = (0..3).map(|i| (x[i] - center[i]).powi(2)).sum();
            background + amplitude * (-r2 / (2.0 * width * width)).exp()
        };
        RefractiveIndexField::from_fn(&grid.0, background, sb, f).map(|n| Self(Arc::new(n))).py()
    }

    /// Balls of radius `alpha` with indices `indices` centred at `centers`.
    #[staticmethod]
    #[pyo3(signature = (grid, centers, alpha, indices, c0, c, background = C64::new(1.0, 0.0)))]
    fn inclusions(
        grid: &PyGrid,
        centers: Vec<[f64; 3]>,
        alpha: f64,
        indices: Vec<C64>,
        c0: f64,
        c: f64,
        background: C64,
    ) -> PyResult<Self> {
        let sc = InclusionScenario::new(grid.0.extent(), centers, alpha, indices, c0, c).py()?;
        let bg = RefractiveIndexField::homogeneous(&grid.0, background).py()?;
        perturbed_index(&sc, &bg, &grid.0).map(|n| Self(Arc::new(n))).py()
    }

    /// Raw per-edge values in edge-index order.
    #[staticmethod]
    #[pyo3(signature = (grid, values, background = C64::new(1.0, 0.0)))]
    fn from_values(grid: &PyGrid, values: Vec<C64>, background: C64) -> PyResult<Self> {
        RefractiveIndexField::from_values(&grid.0, background, None, values)
            .map(|n| Self(Arc::new(n)))
            .py()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    #[getter]
    fn background(&self) -> C64 {
        self.0.background()
    }

    #[getter]
    fn values(&self) -> Vec<C64> {
        self.0.values().to_vec()
    }

    #[getter]
    fn is_homogeneous(&self) -> bool {
        self.0.is_homogeneous()
    }
}

/// Discrete impedance map `ν×E|_Γ ↦ ν×curl E|_Γ` on a boundary patch.
#[pyclass(name = "Impedance", module = "maxtomo", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyImpedance(pub Arc<ImpedanceOperator>);

#[pymethods]
impl PyImpedance {
    #[staticmethod]
    #[pyo3(signature = (medium, k, faces = vec!["z+".to_string()]))]
    fn assemble(py: Python<'_>, medium: &PyMedium, k: f64, faces: Vec<String>) -> PyResult<Self> {
        let fs = self::faces(&faces)?;
        let n = medium.0.clone();
        py.detach(move || {
            let grid = *n.grid();
            let patch = Arc::new(BoundaryPatch::new(&grid, &fs)?);
            assemble_impedance(&n, &grid, &patch, &WaveParams::from_wavenumber(k)?)
        })
        .map(|z| Self(Arc::new(z)))
        .py()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn k(&self) -> f64 {
        self.0.k()
    }

    /// Row-major list of rows.
    fn matrix(&self) -> Vec<Vec<C64>> {
        let m = self.0.matrix();
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    fn spectral_norm(&self) -> f64 {
        self.0.spectral_norm()
    }

    /// `Z f` for patch values `f`.
    fn apply(&self, values: Vec<C64>) -> PyResult<Vec<C64>> {
        let f = TangentialField::new(self.0.patch().clone(), values).py()?;
        apply_impedance(&self.0, &f).map(|v| v.into_values()).py()
    }

    fn write(&self, path: &str) -> PyResult<()> {
        VolumeFile::from_impedance(&self.0).write(path).py()
    }
}

/// Samples `l ↦ Λ(l)` of the Fourier transform of the contrast.
#[pyclass(name = "FourierTable", module = "maxtomo", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyTable(pub FourierTable);

#[pymethods]
impl PyTable {
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        table_from_csv(text).map(Self).py()
    }

    fn to_csv(&self) -> String {
        table_to_csv(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn route(&self) -> &'static str {
        self.0.route.label()
    }

    #[getter]
    fn failures(&self) -> usize {
        self.0.failures()
    }

    /// `(l, value, s, ok)` per sample.
    fn samples(&self) -> Vec<([f64; 3], C64, f64, bool)> {
        self.0.samples.iter().map(|s| (s.l, s.value, s.s, s.ok())).collect()
    }
}

/// Reconstructed contrast on the cell centers.
#[pyclass(name = "Contrast", module = "maxtomo", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyContrast(pub ContrastVolume);

#[pymethods]
impl PyContrast {
    #[getter]
    fn dims(&self) -> [usize; 3] {
        self.0.grid().cells()
    }

    /// Values with x fastest.
    #[getter]
    fn values(&self) -> Vec<C64> {
        self.0.values().to_vec()
    }

    /// Cell center of the largest `|c|`.
    fn peak(&self) -> [f64; 3] {
        self.0.peak().1
    }

    fn relative_l2(&self, other: &PyContrast) -> PyResult<f64> {
        relative_l2(&self.0, &other.0).py()
    }

    fn write(&self, path: &str) -> PyResult<()> {
        VolumeFile::from_contrast(&self.0).write(path).py()
    }
}

/// Background impedance and scan options for `route`.
fn background(
    grid: &BoxGrid,
    bg: C64,
    patch: &Arc<BoundaryPatch>,
    wave: &WaveParams,
    route: Route,
    inset: usize,
) -> mxcore::Result<(ImpedanceOperator, ScanOptions)> {
    let mut scan = ScanOptions::new(route);
    if route == Route::Joint {
        let opts = BackgroundOptions {
            inset,
            ..Default::default()
        };
        let model = Arc::new(BackgroundModel::new(grid, bg, patch, wave, &opts)?);
        let z = model.impedance().clone();
        scan.background = Some(model);
        Ok((z, scan))
    } else {
        let n = RefractiveIndexField::homogeneous(grid, bg)?;
        Ok((assemble_impedance(&n, grid, patch, wave)?, scan))
    }
}

struct Problem {
    z_n: ImpedanceOperator,
    z_bg: ImpedanceOperator,
    scan: ScanOptions,
    lgrid: LGrid,
}

fn problem(n: &RefractiveIndexField, k: f64, fs: &[Face], l_max_factor: f64, route: Route, inset: usize) -> mxcore::Result<Problem> {
    let grid = *n.grid();
    let wave = WaveParams::from_wavenumber(k)?;
    let patch = Arc::new(BoundaryPatch::new(&grid, fs)?);
    let (z_bg, scan) = background(&grid, n.background(), &patch, &wave, route, inset)?;
    let z_n = assemble_impedance(n, &grid, &patch, &wave)?;
    let lgrid = LGrid::new(&grid, k, l_max_factor * k, SSchedule::default())?;
    Ok(Problem { z_n, z_bg, scan, lgrid })
}

/// Scans `Λ` for two impedance maps on the same patch (linearized or full route).
#[pyfunction]
#[pyo3(signature = (z_n, z_bg, l_max, route = "linearized"))]
fn scan(py: Python<'_>, z_n: &PyImpedance, z_bg: &PyImpedance, l_max: f64, route: &str) -> PyResult<PyTable> {
    let r = self::route(route)?;
    if r == Route::Joint {
        return Err(err(Error::Config("the joint route needs a medium; use reconstruct()".into())));
    }
    let (a, b) = (z_n.0.clone(), z_bg.0.clone());
    py.detach(move || {
        let lg = LGrid::new(a.patch().grid(), a.k(), l_max, SSchedule::default())?;
        scan_fourier_with(&a, &b, &lg, &ScanOptions::new(r))
    })
    .map(PyTable)
    .py()
}

/// Inverse Fourier synthesis of a table on `grid`.
#[pyfunction]
#[pyo3(signature = (table, grid, window = "none"))]
fn invert(table: &PyTable, grid: &PyGrid, window: &str) -> PyResult<PyContrast> {
    Ok(PyContrast(invert_fourier(&table.0, &grid.0, self::window(window)?)))
}

/// Full pipeline: impedance maps, scan and inversion. Returns `(table, contrast)`.
#[pyfunction]
#[pyo3(signature = (medium, k, faces = vec!["z+".to_string()], l_max_factor = 2.0, route = "joint", window = "none", inset = 2))]
#[allow(clippy::too_many_arguments)]
fn reconstruct(
    py: Python<'_>,
    medium: &PyMedium,
    k: f64,
    faces: Vec<String>,
    l_max_factor: f64,
    route: &str,
    window: &str,
    inset: usize,
) -> PyResult<(PyTable, PyContrast)> {
    let (fs, r, w) = (self::faces(&faces)?, self::route(route)?, self::window(window)?);
    let n = medium.0.clone();
    py.detach(move || {
        let p = problem(&n, k, &fs, l_max_factor, r, inset)?;
        let t = scan_fourier_with(&p.z_n, &p.z_bg, &p.lgrid, &p.scan)?;
        let v = invert_fourier(&t, n.grid(), w);
        Ok((PyTable(t), PyContrast(v)))
    })
    .py()
}

/// Localizes small inclusions; returns `[(center, moment)]`, strongest first.
#[pyfunction]
#[pyo3(signature = (medium, k, c0, expected = None, clearance = 0.0, faces = vec!["z+".to_string()], l_max_factor = 2.0, route = "joint", inset = 5, threshold = 3.0))]
#[allow(clippy::too_many_arguments)]
fn locate(
    py: Python<'_>,
    medium: &PyMedium,
    k: f64,
    c0: f64,
    expected: Option<usize>,
    clearance: f64,
    faces: Vec<String>,
    l_max_factor: f64,
    route: &str,
    inset: usize,
    threshold: f64,
) -> PyResult<Vec<([f64; 3], C64)>> {
    let (fs, r) = (self::faces(&faces)?, self::route(route)?);
    let n = medium.0.clone();
    py.detach(move || {
        let p = problem(&n, k, &fs, l_max_factor, r, inset)?;
        let mut opts = LocateOptions::new(p.scan, c0);
        opts.threshold = threshold;
        opts.clearance = clearance;
        let loc = localize_and_recover(&p.z_n, &p.z_bg, &p.lgrid, expected, &opts)?;
        Ok(loc.moments.iter().map(|m| (m.center, m.scalar)).collect())
    })
    .py()
}

/// CGO exponents and polarizations for target `l`, scale `s`, wavenumber `k`.
#[pyfunction]
fn cgo_pair<'py>(py: Python<'py>, l: [f64; 3], s: f64, k: f64) -> PyResult<Bound<'py, PyDict>> {
    let p = pair(&CgoFrame::for_l(l, s, k).py()?).py()?;
    let d = PyDict::new(py);
    d.set_item("g", p.g)?;
    d.set_item("xi1", p.xi1)?;
    d.set_item("xi2", p.xi2)?;
    d.set_item("eta1", p.eta1)?;
    d.set_item("eta2", p.eta2)?;
    Ok(d)
}

/// Scalar `g(s)` of the CGO construction.
#[pyfunction]
fn g_of_s(s: f64, l: [f64; 3], k: f64) -> f64 {
    g(s, l, k)
}

/// Reads a volume file: `(dims, spacing, kind, values)`.
#[pyfunction]
fn read_volume(path: &str) -> PyResult<([usize; 3], [f64; 3], String, Vec<C64>)> {
    let v = VolumeFile::read(path).py()?;
    Ok((v.dims, v.spacing, v.kind.label().to_string(), v.data))
}

#[pymodule(name = "maxtomo")]
pub fn maxtomo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MaxtomoError", m.py().get_type::<MaxtomoError>())?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyMedium>()?;
    m.add_class::<PyImpedance>()?;
    m.add_class::<PyTable>()?;
    m.add_class::<PyContrast>()?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(invert, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(locate, m)?)?;
    m.add_function(wrap_pyfunction!(cgo_pair, m)?)?;
    m.add_function(wrap_pyfunction!(g_of_s, m)?)?;
    m.add_function(wrap_pyfunction!(read_volume, m)?)?;
    Ok(())
}
