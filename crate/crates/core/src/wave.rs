use crate::error::{Error, Result};

/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability (H/m).
pub const MU0: f64 = 1.256_637_062_12e-6;

/// Frequency and vacuum constants; `k = omega * sqrt(mu0 * eps0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveParams {
    omega: f64,
    eps0: f64,
    mu0: f64,
    k: f64,
}

impl WaveParams {
    pub fn new(omega: f64, eps0: f64, mu0: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidWaveParams(format!(
                "omega must be positive, got {omega}"
            )));
        }
        if !(eps0 > 0.0 && mu0 > 0.0 && eps0.is_finite() && mu0.is_finite()) {
            return Err(Error::InvalidWaveParams(
                "eps0 and mu0 must be positive".into(),
            ));
        }
        let k = omega * (mu0 * eps0).sqrt();
        Ok(Self {
            omega,
            eps0,
            mu0,
            k,
        })
    }

    /// Vacuum constants in SI units, frequency chosen to give wave number `k`.
    pub fn from_wavenumber(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidWaveParams(format!(
                "wave number must be positive, got {k}"
            )));
        }
        let omega = k / (MU0 * EPS0).sqrt();
        let mut wp = Self::new(omega, EPS0, MU0)?;
        // keep the requested value; it agrees with omega*sqrt(mu0 eps0) to rounding
        debug_assert!((wp.k - k).abs() <= 1e-14 * k);
        wp.k = k;
        Ok(wp)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Relative deviation of `k` from `omega * sqrt(mu0 * eps0)`.
    pub fn consistency(&self) -> f64 {
        (self.k - self.omega * (self.mu0 * self.eps0).sqrt()).abs() / self.k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_consistent() {
        for k in [0.5, 1.0, std::f64::consts::PI, 16.0, 123.4] {
            let wp = WaveParams::from_wavenumber(k).unwrap();
            assert_eq!(wp.k(), k);
            assert!(wp.consistency() <= 1e-14);
        }
        let wp = WaveParams::new(3.0e9, EPS0, MU0).unwrap();
        assert!(wp.consistency() <= 1e-14);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(WaveParams::new(0.0, EPS0, MU0).is_err());
        assert!(WaveParams::new(1.0, -1.0, MU0).is_err());
        assert!(WaveParams::from_wavenumber(-2.0).is_err());
    }
}
