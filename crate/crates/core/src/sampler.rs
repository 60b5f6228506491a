//! Gaussian fields on finite point sets: fractional Brownian fields pinned at
//! an origin and stationary fields with covariance `exp(−λ d^{2H})`.
//!
//! Covariances are factored once as `S = V √Λ₊ Vᵀ` with negative eigenvalues
//! clipped to zero, and every realization is `S z` for a standard normal `z`.
//! The variate attached to a point is drawn from a ChaCha stream keyed by the
//! master seed and the point's coordinates, with the realization index as the
//! stream number, so permuting the points permutes the columns.

use std::io::{self, Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::definiteness::{check_distinct, check_hurst, covariance_entries, sorted_eigen, stationary_kernel_matrix};
use crate::error::{Error, Result};
use crate::spaces::{Point, SpaceDescriptor};

/// Clipped eigenvalue mass allowed, relative to the trace.
pub const CLIP_REL_TOL: f64 = 1e-6;

/// Minimum realizations for [`variogram_check`].
pub const MIN_VARIOGRAM_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind {
    /// Pinned fractional Brownian field.
    Fractional,
    /// Stationary field with covariance `exp(−λ d^{2H})`.
    Stationary { lambda: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSample {
    pub space: SpaceDescriptor,
    pub kind: FieldKind,
    /// Pinning point; `None` for stationary fields.
    pub origin: Option<Point>,
    pub points: Vec<Point>,
    #[serde(rename = "H")]
    pub h: f64,
    /// `n_samples × n_points`.
    pub realizations: Vec<Vec<f64>>,
    pub seed: u64,
    /// Sum of the absolute values of the clipped negative eigenvalues.
    pub clipped_mass: f64,
    pub trace: f64,
}

impl FieldSample {
    pub fn n_samples(&self) -> usize {
        self.realizations.len()
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    /// Column `j` across realizations.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.realizations.iter().map(|r| r[j]).collect()
    }

    /// Empirical second moments `E X_i X_j`.
    pub fn empirical_covariance(&self) -> DMatrix<f64> {
        let n = self.n_points();
        let mut m = DMatrix::zeros(n, n);
        for r in &self.realizations {
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += r[i] * r[j];
                }
            }
        }
        m / self.n_samples().max(1) as f64
    }

    /// One row per realization, header `p0,p1,…`.
    pub fn to_csv(&self) -> String {
        let header: Vec<String> = (0..self.n_points()).map(|j| format!("p{j}")).collect();
        let mut out = header.join(",");
        out.push('\n');
        for r in &self.realizations {
            let row: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Columnar binary: `FFLD`, version (`u32`), rows and columns (`u64`),
    /// then each column as `f64`, all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&(self.n_samples() as u64).to_le_bytes())?;
        w.write_all(&(self.n_points() as u64).to_le_bytes())?;
        for j in 0..self.n_points() {
            for r in &self.realizations {
                w.write_all(&r[j].to_le_bytes())?;
            }
        }
        Ok(())
    }
}

pub const BINARY_MAGIC: &[u8; 4] = b"FFLD";
pub const BINARY_VERSION: u32 = 1;

/// Reads the realization matrix written by [`FieldSample::write_binary`].
pub fn read_binary<R: Read>(mut r: R) -> io::Result<Vec<Vec<f64>>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let mut u32b = [0u8; 4];
    r.read_exact(&mut u32b)?;
    let version = u32::from_le_bytes(u32b);
    if version != BINARY_VERSION {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("unsupported version {version}")));
    }
    let mut u64b = [0u8; 8];
    r.read_exact(&mut u64b)?;
    let rows = u64::from_le_bytes(u64b) as usize;
    r.read_exact(&mut u64b)?;
    let cols = u64::from_le_bytes(u64b) as usize;
    let mut out = vec![vec![0.0; cols]; rows];
    for j in 0..cols {
        for row in out.iter_mut() {
            r.read_exact(&mut u64b)?;
            row[j] = f64::from_le_bytes(u64b);
        }
    }
    Ok(out)
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the variate stream attached to a point.
fn point_seed(master: u64, p: &Point) -> u64 {
    p.0.iter().fold(splitmix(master), |acc, x| splitmix(acc ^ (x + 0.0).to_bits()))
}

/// Symmetric square root of a covariance with negative eigenvalues clipped.
/// Returns `(root, clipped_mass, trace)`.
fn clipped_root(cov: DMatrix<f64>) -> Result<(DMatrix<f64>, f64, f64)> {
    let trace = cov.trace();
    let (values, vectors) = sorted_eigen(cov)?;
    let clipped: f64 = values.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
    if clipped > CLIP_REL_TOL * trace {
        return Err(Error::ExcessClipping {
            clipped,
            limit: CLIP_REL_TOL * trace,
        });
    }
    let roots = DVector::from_iterator(values.len(), values.iter().map(|v| v.max(0.0).sqrt()));
    let root = &vectors * DMatrix::from_diagonal(&roots) * vectors.transpose();
    Ok((root, clipped, trace))
}

fn draw(root: &DMatrix<f64>, seeds: &[u64], n_samples: usize) -> Vec<Vec<f64>> {
    (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let z = DVector::from_iterator(
                seeds.len(),
                seeds.iter().map(|seed| {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    rng.set_stream(s as u64);
                    StandardNormal.sample(&mut rng)
                }),
            );
            (root * z).iter().copied().collect()
        })
        .collect()
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
    }
    Ok(())
}

/// Realizations of the fractional Brownian field pinned at `origin`.
pub fn sample_fbm(
    space: &SpaceDescriptor,
    origin: &Point,
    points: &[Point],
    h: f64,
    n_samples: usize,
    seed: u64,
) -> Result<FieldSample> {
    check_hurst(h)?;
    check_samples(n_samples)?;
    space.check_point(origin)?;
    check_distinct(space, points)?;
    // Points at the origin are pinned to zero and kept out of the factorization.
    let free: Vec<usize> = (0..points.len())
        .map(|j| Ok((j, space.distance(origin, &points[j])?)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|(j, _)| j)
        .collect();
    let free_points: Vec<Point> = free.iter().map(|&j| points[j].clone()).collect();

    let mut realizations = vec![vec![0.0; points.len()]; n_samples];
    let (mut clipped_mass, mut trace) = (0.0, 0.0);
    if !free_points.is_empty() {
        let cov = covariance_entries(space, origin, &free_points, h)?;
        let (root, clipped, tr) = clipped_root(cov)?;
        clipped_mass = clipped;
        trace = tr;
        let seeds: Vec<u64> = free_points.iter().map(|p| point_seed(seed, p)).collect();
        for (row, values) in realizations.iter_mut().zip(draw(&root, &seeds, n_samples)) {
            for (k, &j) in free.iter().enumerate() {
                row[j] = values[k];
            }
        }
    }
    Ok(FieldSample {
        space: space.clone(),
        kind: FieldKind::Fractional,
        origin: Some(origin.clone()),
        points: points.to_vec(),
        h,
        realizations,
        seed,
        clipped_mass,
        trace,
    })
}

/// Realizations of the stationary field with covariance `exp(−λ d^{2H})`.
pub fn sample_stationary(
    space: &SpaceDescriptor,
    points: &[Point],
    h: f64,
    lambda: f64,
    n_samples: usize,
    seed: u64,
) -> Result<FieldSample> {
    check_hurst(h)?;
    check_samples(n_samples)?;
    if points.is_empty() {
        return Err(Error::InvalidParameter("need at least one point".into()));
    }
    check_distinct(space, points)?;
    let (k, _) = stationary_kernel_matrix(space, points, h, lambda)?;
    let (root, clipped_mass, trace) = clipped_root(k)?;
    let seeds: Vec<u64> = points.iter().map(|p| point_seed(seed, p)).collect();
    Ok(FieldSample {
        space: space.clone(),
        kind: FieldKind::Stationary { lambda },
        origin: None,
        points: points.to_vec(),
        h,
        realizations: draw(&root, &seeds, n_samples),
        seed,
        clipped_mass,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramPair {
    pub i: usize,
    pub j: usize,
    /// Mean of `(X_i − X_j)²` over realizations.
    pub empirical: f64,
    pub target: f64,
    pub z_score: f64,
}

/// Empirical mean squared increments against their targets: `d^{2H}` for a
/// fractional field, `2(1 − exp(−λ d^{2H}))` for a stationary one.
///
/// `X_i − X_j` is centered Gaussian with variance `t`, so the squared
/// increment has variance `2t²` and the mean of `n` draws has standard error
/// `t √(2/n)`.
pub fn variogram_check(sample: &FieldSample, pairs: &[(usize, usize)]) -> Result<Vec<VariogramPair>> {
    let n = sample.n_samples();
    if n < MIN_VARIOGRAM_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_VARIOGRAM_SAMPLES,
            got: n,
        });
    }
    pairs
        .iter()
        .map(|&(i, j)| {
            if i >= sample.n_points() || j >= sample.n_points() {
                return Err(Error::InvalidParameter(format!("pair ({i}, {j}) out of range")));
            }
            let d2h = sample
                .space
                .distance(&sample.points[i], &sample.points[j])?
                .powf(2.0 * sample.h);
            let target = match sample.kind {
                FieldKind::Fractional => d2h,
                FieldKind::Stationary { lambda } => 2.0 * (1.0 - (-lambda * d2h).exp()),
            };
            let empirical = sample
                .realizations
                .iter()
                .map(|r| (r[i] - r[j]) * (r[i] - r[j]))
                .sum::<f64>()
                / n as f64;
            let z_score = if target > 0.0 {
                (empirical - target) / (target * (2.0 / n as f64).sqrt())
            } else if empirical == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            Ok(VariogramPair { i, j, empirical, target, z_score })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn origin_only_is_zero() {
        let s = SpaceDescriptor::sphere(2, 1.0);
        let o = Point::new([0.0, 0.0, 1.0]);
        let f = sample_fbm(&s, &o, std::slice::from_ref(&o), 0.5, 50, 3).unwrap();
        assert!(f.realizations.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn sphere_quarter_variance() {
        let s = SpaceDescriptor::sphere(2, 1.0);
        let o = Point::new([0.0, 0.0, 1.0]);
        let x = Point::new([1.0, 0.0, 0.0]);
        let n = 20000;
        let f = sample_fbm(&s, &o, &[x], 0.5, n, 11).unwrap();
        let var = f.column(0).iter().map(|v| v * v).sum::<f64>() / n as f64;
        let target = PI / 2.0;
        let se = target * (2.0 / n as f64).sqrt();
        assert!((var - target).abs() < 3.0 * se, "{var} vs {target}");
    }

    #[test]
    fn circle_above_index_clips() {
        let c = SpaceDescriptor::circle(2.0 * PI);
        let pts: Vec<Point> = (1..50).map(|k| Point::new([2.0 * PI * k as f64 / 50.0])).collect();
        let err = sample_fbm(&c, &Point::new([0.0]), &pts, 0.6, 10, 1).unwrap_err();
        assert!(matches!(err, Error::ExcessClipping { .. }), "{err:?}");
    }

    #[test]
    fn unit_pair_on_line() {
        let e = SpaceDescriptor::euclidean(1);
        let pts = [Point::new([0.0]), Point::new([1.0])];
        let f = sample_fbm(&e, &pts[0], &pts, 0.5, 4000, 5).unwrap();
        let v = variogram_check(&f, &[(0, 1), (0, 0)]).unwrap();
        assert_eq!(v[0].target, 1.0);
        assert!(v[0].z_score.abs() < 4.0);
        assert_eq!((v[1].empirical, v[1].target, v[1].z_score), (0.0, 0.0, 0.0));
        let short = sample_fbm(&e, &pts[0], &pts, 0.5, 999, 5).unwrap();
        assert_eq!(
            variogram_check(&short, &[(0, 1)]).unwrap_err(),
            Error::TooFewSamples { needed: 1000, got: 999 }
        );
    }

    #[test]
    fn stationary_single_point_and_correlation() {
        let c = SpaceDescriptor::circle(2.0 * PI);
        let n = 20000;
        let one = sample_stationary(&c, &[Point::new([0.0])], 0.5, 1.0, n, 2).unwrap();
        let var = one.column(0).iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt());

        let pts: Vec<Point> = (0..3).map(|k| Point::new([2.0 * PI * k as f64 / 3.0])).collect();
        let f = sample_stationary(&c, &pts, 0.5, 1.0, n, 2).unwrap();
        let q = (-2.0 * PI / 3.0).exp();
        let cov = f.empirical_covariance();
        // sd of a product of unit normals with correlation q is sqrt(1 + q²)
        let se = ((1.0 + q * q) / n as f64).sqrt();
        assert!((cov[(0, 1)] - q).abs() < 3.0 * se, "{} vs {q}", cov[(0, 1)]);

        let far = sample_stationary(&c, &pts, 0.5, 50.0, n, 2).unwrap();
        let cov = far.empirical_covariance();
        assert!(cov[(0, 1)].abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn binary_round_trip() {
        let e = SpaceDescriptor::euclidean(2);
        let pts = [Point::new([0.5, 0.0]), Point::new([0.0, 0.5]), Point::new([1.0, 1.0])];
        let f = sample_fbm(&e, &Point::new([0.0, 0.0]), &pts, 0.7, 17, 9).unwrap();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"FFLD");
        assert_eq!(buf.len(), 4 + 4 + 16 + 8 * 17 * 3);
        assert_eq!(read_binary(&buf[..]).unwrap(), f.realizations);
        assert!(f.to_csv().starts_with("p0,p1,p2\n"));
    }
}
