use std::f64::consts::PI;

use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    Laplace,
}

/// Additive observation noise `n` in `x = G(z) + n`.
///
/// `sigma` is the standard deviation for the Gaussian family and the scale
/// `b` (density `exp(-|r|/b) / 2b`) for the Laplace family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub family: NoiseFamily,
    pub sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            family: NoiseFamily::Gaussian,
            sigma: 0.1,
        }
    }
}

impl NoiseModel {
    pub fn new(family: NoiseFamily, sigma: f64) -> Result<Self> {
        let m = NoiseModel { family, sigma };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise scale must be positive and finite, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    fn check(&self, x: &Array2<f64>, gz: &Array2<f64>) -> Result<()> {
        self.validate()?;
        if x.dim() != gz.dim() {
            return Err(Error::shape(format!("{:?}", x.dim()), format!("{:?}", gz.dim())));
        }
        Ok(())
    }

    /// Row-wise `log p(x | z)` = log density of the noise at `x - gz`.
    pub fn log_cond_density(&self, x: &Array2<f64>, gz: &Array2<f64>) -> Result<Array1<f64>> {
        self.check(x, gz)?;
        let d = x.ncols() as f64;
        let s = self.sigma;
        let out = Zip::from(x.rows()).and(gz.rows()).map_collect(|xr, gr| {
            let residual = xr.iter().zip(gr.iter()).map(|(a, b)| a - b);
            match self.family {
                NoiseFamily::Gaussian => {
                    let sq: f64 = residual.map(|r| r * r).sum();
                    -0.5 * d * (2.0 * PI * s * s).ln() - sq / (2.0 * s * s)
                }
                NoiseFamily::Laplace => {
                    let abs: f64 = residual.map(f64::abs).sum();
                    -d * (2.0 * s).ln() - abs / s
                }
            }
        });
        Ok(out)
    }

    /// Log density at zero residual, the maximum over `gz`.
    pub fn log_density_peak(&self, dim: usize) -> f64 {
        let d = dim as f64;
        match self.family {
            NoiseFamily::Gaussian => -0.5 * d * (2.0 * PI * self.sigma * self.sigma).ln(),
            NoiseFamily::Laplace => -d * (2.0 * self.sigma).ln(),
        }
    }

    /// Gradient of each row's `log p(x | z)` with respect to `gz`.
    pub fn grad_wrt_mean(&self, x: &Array2<f64>, gz: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(x, gz)?;
        let s = self.sigma;
        Ok(match self.family {
            NoiseFamily::Gaussian => (x - gz) / (s * s),
            NoiseFamily::Laplace => Zip::from(x).and(gz).map_collect(|&a, &b| {
                let r = a - b;
                if r > 0.0 {
                    1.0 / s
                } else if r < 0.0 {
                    -1.0 / s
                } else {
                    0.0
                }
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn standard_gaussian_at_zero_and_one() {
        let m = NoiseModel::new(NoiseFamily::Gaussian, 1.0).unwrap();
        let at0 = m.log_cond_density(&array![[0.0]], &array![[0.0]]).unwrap()[0];
        assert!((at0 - (-0.5 * (2.0 * PI).ln())).abs() < 1e-15);
        assert!((at0 + 0.9189).abs() < 1e-4);
        let at1 = m.log_cond_density(&array![[1.0]], &array![[0.0]]).unwrap()[0];
        assert!((at1 - (-0.5 * (2.0 * PI).ln() - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_sigma_is_rejected() {
        assert!(NoiseModel::new(NoiseFamily::Gaussian, 0.0).is_err());
        let bad = NoiseModel {
            family: NoiseFamily::Laplace,
            sigma: -1.0,
        };
        assert!(matches!(
            bad.log_cond_density(&array![[0.0]], &array![[0.0]]),
            Err(Error::InvalidArgument(_))
        ));
    }

    /// Trapezoid over a wide grid; the density must integrate to one.
    fn integrate_1d(m: NoiseModel, centre: f64) -> f64 {
        let (lo, hi, n) = (centre - 40.0 * m.sigma, centre + 40.0 * m.sigma, 400_001);
        let h = (hi - lo) / (n - 1) as f64;
        let xs = Array2::from_shape_fn((n, 1), |(i, _)| lo + i as f64 * h);
        let gz = Array2::from_elem((n, 1), centre);
        let dens = m.log_cond_density(&xs, &gz).unwrap().mapv(f64::exp);
        h * (dens.sum() - 0.5 * (dens[0] + dens[n - 1]))
    }

    #[test]
    fn densities_normalize() {
        for family in [NoiseFamily::Gaussian, NoiseFamily::Laplace] {
            for sigma in [0.1, 0.7, 2.0] {
                let m = NoiseModel::new(family, sigma).unwrap();
                let total = integrate_1d(m, 0.3);
                assert!((total - 1.0).abs() < 1e-4, "{family:?} sigma={sigma}: {total}");
            }
        }
    }

    #[test]
    fn laplace_matches_quadrature_normalized_kernel() {
        // Normalize exp(-|r|/b) numerically and compare log densities.
        let b = 0.35;
        let m = NoiseModel::new(NoiseFamily::Laplace, b).unwrap();
        let n = 2_000_001;
        let (lo, hi) = (-60.0 * b, 60.0 * b);
        let h = (hi - lo) / (n - 1) as f64;
        let mut z = 0.0;
        for i in 0..n {
            let r: f64 = lo + i as f64 * h;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            z += w * (-r.abs() / b).exp();
        }
        z *= h;
        for (x, g) in [(0.0, 0.0), (1.3, -0.2), (-0.4, 0.9)] {
            let got = m.log_cond_density(&array![[x]], &array![[g]]).unwrap()[0];
            let want = -(x - g).abs() / b - z.ln();
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn gradient_points_towards_x() {
        let m = NoiseModel::default();
        let g = m.grad_wrt_mean(&array![[1.0, -1.0]], &array![[0.0, 0.0]]).unwrap();
        assert!(g[[0, 0]] > 0.0 && g[[0, 1]] < 0.0);
    }
}
