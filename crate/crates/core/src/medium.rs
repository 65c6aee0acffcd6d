//! Complex refractive index sampled at edge midpoints.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::BoxGrid;
use crate::wave::WaveParams;

/// Axis-aligned box `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl SupportBox {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        for a in 0..3 {
            if !(lo[a] < hi[a]) {
                return Err(Error::InvalidMedium(format!(
                    "support box is empty along axis {a}"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// Cube of half-width `r` around `c`.
    pub fn centered(c: [f64; 3], r: f64) -> Result<Self> {
        Self::new([c[0] - r, c[1] - r, c[2] - r], [c[0] + r, c[1] + r, c[2] + r])
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        (0..3).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a])
    }

    /// Smallest distance from the box to the boundary of the grid domain.
    pub fn margin(&self, grid: &BoxGrid) -> f64 {
        let ext = grid.extent();
        (0..3)
            .map(|a| self.lo[a].min(ext[a] - self.hi[a]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn union(&self, other: &SupportBox) -> SupportBox {
        let mut out = *self;
        for a in 0..3 {
            out.lo[a] = out.lo[a].min(other.lo[a]);
            out.hi[a] = out.hi[a].max(other.hi[a]);
        }
        out
    }
}

/// Complex index `n = eps/eps0 + i sigma/(omega eps0)` per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct RefractiveIndexField {
    grid: BoxGrid,
    values: Vec<C64>,
    background: C64,
    support: Option<SupportBox>,
}

impl RefractiveIndexField {
    /// Constant index everywhere.
    pub fn homogeneous(grid: &BoxGrid, background: C64) -> Result<Self> {
        check_value(background)?;
        Ok(Self {
            grid: *grid,
            values: vec![background; grid.n_edges()],
            background,
            support: None,
        })
    }

    /// Background plus a contrast given by `f` inside `support` (edge midpoints
    /// outside the box keep the background value).
    pub fn from_fn(
        grid: &BoxGrid,
        background: C64,
        support: SupportBox,
        f: impl Fn([f64; 3]) -> C64,
    ) -> Result<Self> {
        let values = (0..grid.n_edges())
            .map(|e| {
                let x = grid.edge_midpoint(e);
                if support.contains(x) {
                    f(x)
                } else {
                    background
                }
            })
            .collect();
        Self::from_values(grid, background, Some(support), values)
    }

    /// Validates raw per-edge samples.
    pub fn from_values(
        grid: &BoxGrid,
        background: C64,
        support: Option<SupportBox>,
        values: Vec<C64>,
    ) -> Result<Self> {
        if values.len() != grid.n_edges() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_edges(),
                found: values.len(),
            });
        }
        check_value(background)?;
        for v in &values {
            check_value(*v)?;
        }
        match support {
            Some(sb) => {
                if !(sb.margin(grid) > 0.0) {
                    return Err(Error::SupportViolation(
                        "contrast support must lie strictly inside the domain".into(),
                    ));
                }
                for (e, v) in values.iter().enumerate() {
                    if *v != background && !sb.contains(grid.edge_midpoint(e)) {
                        return Err(Error::SupportViolation(format!(
                            "index differs from background outside the support box at edge {e}"
                        )));
                    }
                }
            }
            None => {
                if values.iter().any(|v| *v != background) {
                    return Err(Error::SupportViolation(
                        "non-constant index requires a support box".into(),
                    ));
                }
            }
        }
        Ok(Self {
            grid: *grid,
            values,
            background,
            support,
        })
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn background(&self) -> C64 {
        self.background
    }

    pub fn support(&self) -> Option<SupportBox> {
        self.support
    }

    pub fn is_homogeneous(&self) -> bool {
        self.values.iter().all(|v| *v == self.background)
    }

    /// Pointwise `self - other`.
    pub fn difference(&self, other: &RefractiveIndexField) -> Result<Vec<C64>> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch {
                expected: self.grid.n_edges(),
                found: other.grid.n_edges(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect())
    }
}

fn check_value(v: C64) -> Result<()> {
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::InvalidMedium("non-finite index".into()));
    }
    if !(v.re > 0.0) {
        return Err(Error::InvalidMedium(format!(
            "Re(n) must be positive, got {}",
            v.re
        )));
    }
    if v.im < 0.0 {
        return Err(Error::InvalidMedium(format!(
            "Im(n) must be nonnegative, got {}",
            v.im
        )));
    }
    Ok(())
}

/// Builds `n = eps/eps0 + i sigma/(omega eps0)` from per-edge permittivity and
/// conductivity samples. Outside `support` the medium must be vacuum.
pub fn refractive_index(
    grid: &BoxGrid,
    eps: &[f64],
    sigma: &[f64],
    wp: &WaveParams,
    support: Option<SupportBox>,
) -> Result<RefractiveIndexField> {
    let ne = grid.n_edges();
    for len in [eps.len(), sigma.len()] {
        if len != ne {
            return Err(Error::DimensionMismatch {
                expected: ne,
                found: len,
            });
        }
    }
    let (eps0, omega) = (wp.eps0(), wp.omega());
    let mut values = Vec::with_capacity(ne);
    for e in 0..ne {
        if !(eps[e] > 0.0 && eps[e].is_finite()) {
            return Err(Error::InvalidMedium(format!(
                "permittivity must be positive, got {} at edge {e}",
                eps[e]
            )));
        }
        if !(sigma[e] >= 0.0 && sigma[e].is_finite()) {
            return Err(Error::InvalidMedium(format!(
                "conductivity must be nonnegative, got {} at edge {e}",
                sigma[e]
            )));
        }
        let n = C64::new(eps[e] / eps0, sigma[e] / (omega * eps0));
        let inside = support.is_some_and(|s| s.contains(grid.edge_midpoint(e)));
        if !inside && (eps[e] != eps0 || sigma[e] != 0.0) {
            return Err(Error::SupportViolation(format!(
                "eps - eps0 or sigma nonzero outside the declared support at edge {e}"
            )));
        }
        values.push(if inside { n } else { C64::new(1.0, 0.0) });
    }
    RefractiveIndexField::from_values(grid, C64::new(1.0, 0.0), support, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::EPS0;

    fn setup() -> (BoxGrid, WaveParams) {
        (
            BoxGrid::unit_cube(6).unwrap(),
            WaveParams::from_wavenumber(2.0).unwrap(),
        )
    }

    #[test]
    fn vacuum_is_one() {
        let (g, wp) = setup();
        let eps = vec![EPS0; g.n_edges()];
        let sig = vec![0.0; g.n_edges()];
        let n = refractive_index(&g, &eps, &sig, &wp, None).unwrap();
        assert!(n.values().iter().all(|v| *v == C64::new(1.0, 0.0)));
    }

    #[test]
    fn single_voxel_substitution() {
        let (g, wp) = setup();
        let mut eps = vec![EPS0; g.n_edges()];
        let mut sig = vec![0.0; g.n_edges()];
        let e = g.edge_index(0, [2, 3, 3]);
        eps[e] = 2.0 * EPS0;
        sig[e] = wp.omega() * EPS0;
        let sb = SupportBox::centered(g.edge_midpoint(e), 0.01).unwrap();
        let n = refractive_index(&g, &eps, &sig, &wp, Some(sb)).unwrap();
        assert!((n.values()[e] - C64::new(2.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_samples() {
        let (g, wp) = setup();
        let ne = g.n_edges();
        let mut eps = vec![EPS0; ne];
        let sig = vec![0.0; ne];
        eps[3] = 0.0;
        assert!(matches!(
            refractive_index(&g, &eps, &sig, &wp, None),
            Err(Error::InvalidMedium(_))
        ));
        let eps = vec![EPS0; ne];
        let mut sig2 = sig.clone();
        sig2[0] = -1.0;
        assert!(refractive_index(&g, &eps, &sig2, &wp, None).is_err());
        // perturbation touching the boundary
        let mut eps3 = eps.clone();
        let e = g.edge_index(0, [0, 0, 0]);
        eps3[e] = 2.0 * EPS0;
        let sb = SupportBox::new([0.0; 3], [0.5; 3]).unwrap();
        assert!(matches!(
            refractive_index(&g, &eps3, &sig, &wp, Some(sb)),
            Err(Error::SupportViolation(_))
        ));
    }
}
