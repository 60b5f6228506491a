use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive warp factor `f(z)` of a metric `f(z) dθ² + dz²` on `S¹ × ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WarpFunction {
    /// `f(z) = 1 + a·z²`, minimized at `z = 0`.
    Quadratic { a: f64 },
    /// Piecewise-linear interpolation through `(z[k], f[k])`, constant outside
    /// the table, with a declared global minimizer `z0`.
    Tabulated { z: Vec<f64>, f: Vec<f64>, z0: f64 },
}

impl WarpFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            WarpFunction::Quadratic { a } => {
                if !a.is_finite() || *a < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "quadratic warp needs a >= 0, got {a}"
                    )));
                }
            }
            WarpFunction::Tabulated { z, f, z0 } => {
                if z.len() < 2 || z.len() != f.len() {
                    return Err(Error::InvalidParameter(
                        "tabulated warp needs matching z/f tables of length >= 2".into(),
                    ));
                }
                if z.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
                    return Err(Error::InvalidParameter(
                        "tabulated warp z nodes must be strictly increasing".into(),
                    ));
                }
                if f.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::InvalidParameter(
                        "tabulated warp values must be positive".into(),
                    ));
                }
                if !z0.is_finite() {
                    return Err(Error::InvalidParameter("z0 must be finite".into()));
                }
                let fmin = self.eval(*z0);
                if let Some(bad) = z.iter().zip(f).find(|(_, v)| **v < fmin) {
                    return Err(Error::InvalidParameter(format!(
                        "declared minimizer z0={z0} is not global: f({}) = {} < f(z0) = {fmin}",
                        bad.0, bad.1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            WarpFunction::Quadratic { a } => 1.0 + a * z * z,
            WarpFunction::Tabulated { z: zs, f, .. } => {
                if z <= zs[0] {
                    return f[0];
                }
                let last = zs.len() - 1;
                if z >= zs[last] {
                    return f[last];
                }
                let k = zs.partition_point(|&node| node <= z) - 1;
                let t = (z - zs[k]) / (zs[k + 1] - zs[k]);
                f[k] + t * (f[k + 1] - f[k])
            }
        }
    }

    /// The declared global minimizer.
    pub fn minimizer(&self) -> f64 {
        match self {
            WarpFunction::Quadratic { .. } => 0.0,
            WarpFunction::Tabulated { z0, .. } => *z0,
        }
    }

    /// Length of the waist circle `S¹ × {z0}`.
    pub fn waist_length(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.eval(self.minimizer()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum_at_origin() {
        let w = WarpFunction::Quadratic { a: 1.0 };
        w.validate().unwrap();
        assert_eq!(w.eval(0.0), 1.0);
        assert_eq!(w.eval(0.5), 1.25);
        assert!((w.waist_length() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn tabulated_interpolates_and_checks_minimizer() {
        let w = WarpFunction::Tabulated {
            z: vec![-1.0, 0.0, 1.0],
            f: vec![2.0, 1.0, 3.0],
            z0: 0.0,
        };
        w.validate().unwrap();
        assert!((w.eval(0.5) - 2.0).abs() < 1e-15);
        assert_eq!(w.eval(-5.0), 2.0);
        assert_eq!(w.eval(7.0), 3.0);

        let bad = WarpFunction::Tabulated {
            z: vec![-1.0, 0.0, 1.0],
            f: vec![0.5, 1.0, 3.0],
            z0: 0.0,
        };
        assert!(bad.validate().is_err());
    }
}
