//! Time-harmonic curl-curl forward problem on the edge grid.

mod green;
mod solver;
mod system;
mod traces;

pub use green::{
    dyadic_green, dyadic_green_complex, grad_phi, helmholtz_phi, phi_complex,
    stratton_chu_check, CMat3, STRATTON_CHU_CLEARANCE,
};
pub(crate) use green::{ccross, cdot};
pub use solver::{
    solve_bvp, BvpSolver, FieldSolution, SolveInfo, SolveMethod, SolverKind, SolverOptions,
};
pub use system::{assemble, curl_matrix, gradient_matrix, CurlCurlSystem};
pub use traces::{boundary_traces, curl_trace, one_sided_curl_trace, TraceScheme};

use num_complex::Complex64 as C64;

use crate::grid::BoxGrid;

/// Plane wave `η e^{i κ d·x}` with `d·η = 0`, `|d| = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneWave {
    pub direction: [f64; 3],
    pub polarization: [C64; 3],
    pub kappa: C64,
}

impl PlaneWave {
    pub fn field(&self, x: [f64; 3]) -> [C64; 3] {
        let ph = (C64::i()
            * self.kappa
            * (self.direction[0] * x[0] + self.direction[1] * x[1] + self.direction[2] * x[2]))
            .exp();
        [
            self.polarization[0] * ph,
            self.polarization[1] * ph,
            self.polarization[2] * ph,
        ]
    }

    /// `curl E = iκ d × E`.
    pub fn curl(&self, x: [f64; 3]) -> [C64; 3] {
        let e = self.field(x);
        let d = self.direction.map(|v| C64::new(v, 0.0));
        let c = ccross(d, e);
        let s = C64::i() * self.kappa;
        [c[0] * s, c[1] * s, c[2] * s]
    }

    /// Edge samples `E(x_e)·t_e` on every edge.
    pub fn sample_edges(&self, grid: &BoxGrid) -> Vec<C64> {
        (0..grid.n_edges())
            .map(|e| self.field(grid.edge_midpoint(e))[grid.edge_direction(e)])
            .collect()
    }
}
