//! Contrast samples on cell centers and the discrete Fourier pair linking
//! them to `Λ(l)` tables.

use num_complex::Complex64 as C64;

use super::{mode_to_l, FourierSample, FourierTable, Route};
use crate::error::{Error, Result};
use crate::grid::{norm3, BoxGrid};

/// Spectral taper applied before synthesis.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Window {
    None,
    /// `½(1 + cos(π|l|/l_c))` with `l_c` the cutoff (or the largest `|l|`)
    #[default]
    HannRadial,
}

impl Window {
    pub fn label(&self) -> &'static str {
        match self {
            Window::None => "none",
            Window::HannRadial => "hann-radial",
        }
    }

    pub fn weight(&self, l_norm: f64, l_c: f64) -> f64 {
        match self {
            Window::None => 1.0,
            Window::HannRadial => {
                if l_c <= 0.0 {
                    1.0
                } else if l_norm >= l_c {
                    0.0
                } else {
                    0.5 * (1.0 + (std::f64::consts::PI * l_norm / l_c).cos())
                }
            }
        }
    }
}

impl std::str::FromStr for Window {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Window::None),
            "hann-radial" | "hann" => Ok(Window::HannRadial),
            _ => Err(Error::Config(format!("unknown window '{s}'"))),
        }
    }
}

/// Complex contrast `n − ñ` at cell centers (x fastest), with the table it
/// was synthesized from.
#[derive(Clone, Debug, PartialEq)]
pub struct ContrastVolume {
    grid: BoxGrid,
    values: Vec<C64>,
    pub window: Window,
    /// `|l|` cutoff used in the synthesis, if any
    pub cutoff: Option<f64>,
    pub table: FourierTable,
}

impl ContrastVolume {
    pub fn new(grid: &BoxGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_cells(),
                found: values.len(),
            });
        }
        Ok(Self {
            grid: *grid,
            values,
            window: Window::None,
            cutoff: None,
            table: FourierTable::new(Route::Synthetic, Vec::new()),
        })
    }

    pub fn zeros(grid: &BoxGrid) -> Self {
        Self::new(grid, vec![C64::new(0.0, 0.0); grid.n_cells()]).expect("sized to the grid")
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: &BoxGrid, f: impl Fn([f64; 3]) -> C64) -> Self {
        let values = grid.cell_centers().into_iter().map(f).collect();
        Self::new(grid, values).expect("sized to the grid")
    }

    /// Averages per-edge values over the twelve edges of each cell.
    pub fn from_edges(grid: &BoxGrid, edge_values: &[C64]) -> Result<Self> {
        if edge_values.len() != grid.n_edges() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_edges(),
                found: edge_values.len(),
            });
        }
        let [nx, ny, nz] = grid.cells();
        let mut values = Vec::with_capacity(grid.n_cells());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let mut acc = C64::new(0.0, 0.0);
                    for d in 0..3 {
                        let (a, b) = ((d + 1) % 3, (d + 2) % 3);
                        for sa in 0..2 {
                            for sb in 0..2 {
                                let mut ijk = [i, j, k];
                                ijk[a] += sa;
                                ijk[b] += sb;
                                acc += edge_values[grid.edge_index(d, ijk)];
                            }
                        }
                    }
                    values.push(acc / 12.0);
                }
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Cell index and center of the largest `|c|`.
    pub fn peak(&self) -> (usize, [f64; 3]) {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, v)| if v.norm() > best.1 { (i, v.norm()) } else { best });
        (i, self.cell_center(i))
    }

    pub fn cell_center(&self, idx: usize) -> [f64; 3] {
        let [nx, ny, _] = self.grid.cells();
        self.grid
            .cell_center([idx % nx, (idx / nx) % ny, idx / (nx * ny)])
    }

    /// `T(l) = Σ_cells c(x) e^{il·x} h³`.
    pub fn transform(&self, l: [f64; 3]) -> C64 {
        let ph = axis_phases(&self.grid, l, 1.0);
        let [nx, ny, nz] = self.grid.cells();
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..nz {
            for j in 0..ny {
                let pjk = ph[1][j] * ph[2][k];
                let row = &self.values[(k * ny + j) * nx..(k * ny + j + 1) * nx];
                let s: C64 = row.iter().zip(&ph[0]).map(|(c, p)| c * p).sum();
                acc += s * pjk;
            }
        }
        acc * self.grid.cell_volume()
    }

    /// Transform sampled on every `l` of `ls`.
    pub fn forward_table(&self, ls: &[[f64; 3]]) -> FourierTable {
        FourierTable::new(
            Route::Synthetic,
            ls.iter()
                .map(|&l| FourierSample {
                    l,
                    value: self.transform(l),
                    s: 0.0,
                    failure: None,
                })
                .collect(),
        )
    }
}

/// Every discrete mode `m ∈ [−N/2, N/2)³` of the grid, as wave vectors.
pub fn dft_modes(grid: &BoxGrid) -> Vec<[f64; 3]> {
    let ext = grid.extent();
    let c = grid.cells().map(|n| n as i64);
    let mut out = Vec::with_capacity(grid.n_cells());
    for mz in -c[2] / 2..(c[2] + 1) / 2 {
        for my in -c[1] / 2..(c[1] + 1) / 2 {
            for mx in -c[0] / 2..(c[0] + 1) / 2 {
                out.push(mode_to_l(&ext, [mx, my, mz]));
            }
        }
    }
    out
}

/// `e^{sign·i l_a x_a}` at the cell centers along each axis.
fn axis_phases(grid: &BoxGrid, l: [f64; 3], sign: f64) -> [Vec<C64>; 3] {
    let h = grid.spacing();
    let cells = grid.cells();
    std::array::from_fn(|a| {
        (0..cells[a])
            .map(|i| C64::from_polar(1.0, sign * l[a] * (i as f64 + 0.5) * h[a]))
            .collect()
    })
}

/// Windowed synthesis `c(x) = |Ω|⁻¹ Σ_l w(|l|) Λ(l) e^{−il·x}` on cell centers.
pub fn invert_fourier(table: &FourierTable, grid: &BoxGrid, window: Window) -> ContrastVolume {
    invert_fourier_with(table, grid, window, None)
}

/// As [`invert_fourier`], keeping only samples with `|l| ≤ cutoff`.
pub fn invert_fourier_with(
    table: &FourierTable,
    grid: &BoxGrid,
    window: Window,
    cutoff: Option<f64>,
) -> ContrastVolume {
    let used: Vec<&FourierSample> = table
        .samples
        .iter()
        .filter(|s| s.ok() && cutoff.map_or(true, |c| norm3(s.l) <= c * (1.0 + 1e-12)))
        .collect();
    let l_c = cutoff.unwrap_or_else(|| {
        // just beyond the outermost sample so it keeps a nonzero weight
        let lm = used.iter().map(|s| norm3(s.l)).fold(0.0, f64::max);
        lm * (1.0 + 1.0 / (used.len().max(1) as f64).cbrt())
    });
    let [nx, ny, nz] = grid.cells();
    let mut values = vec![C64::new(0.0, 0.0); grid.n_cells()];
    let inv_vol = 1.0 / grid.volume();
    for s in &used {
        let w = window.weight(norm3(s.l), l_c);
        if w == 0.0 || s.value == C64::new(0.0, 0.0) {
            continue;
        }
        let amp = s.value * (w * inv_vol);
        let ph = axis_phases(grid, s.l, -1.0);
        for k in 0..nz {
            for j in 0..ny {
                let pjk = amp * ph[1][j] * ph[2][k];
                let row = &mut values[(k * ny + j) * nx..(k * ny + j + 1) * nx];
                for (v, p) in row.iter_mut().zip(&ph[0]) {
                    *v += pjk * p;
                }
            }
        }
    }
    ContrastVolume {
        grid: *grid,
        values,
        window,
        cutoff,
        table: FourierTable::new(table.route, used.into_iter().cloned().collect()),
    }
}

/// `‖a − b‖₂ / ‖b‖₂` over cells (`b` is the reference).
pub fn relative_l2(a: &ContrastVolume, b: &ContrastVolume) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::DimensionMismatch {
            expected: b.values.len(),
            found: a.values.len(),
        });
    }
    let num: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.values.iter().map(|y| y.norm_sqr()).sum();
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}
