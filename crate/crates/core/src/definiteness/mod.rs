//! Negative definiteness of `d^{2H}`: quadratic forms over zero-sum
//! coefficients, centered-Gram spectral tests, the pinned covariance of a
//! fractional Brownian field, and stationary kernels `exp(−λ d^{2H})`.
//!
//! `d^{2H}` is negative definite on a finite point set iff the power matrix
//! `A_ij = d^{2H}(P_i, P_j)` satisfies `cᵀAc ≤ 0` for every `c` with
//! `Σ c_i = 0`. The zero-sum vectors are exactly the range of the centering
//! projector `J = I − 11ᵀ/n`, so the test reduces to the spectrum of `JAJ`.

mod index;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{wrap_diff, Point, SpaceDescriptor};

pub use index::{estimate_fractional_index, IndexBracket, IndexSearch, PointSampler};

/// Default relative spectral tolerance.
pub const DEFAULT_TOL_SCALE: f64 = 1e-9;

const MIN_SEPARATION: f64 = 1e-12;
const SUM_TOL: f64 = 1e-12;

/// Distinct points with nonzero coefficients summing to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub points: Vec<Point>,
    pub coefficients: Vec<f64>,
}

/// Separation used for distinctness checks; chart distance on warped products.
pub(crate) fn separation(space: &SpaceDescriptor, p: &Point, q: &Point) -> Result<f64> {
    if space.is_analytic() {
        return space.distance(p, q);
    }
    space.check_point(p)?;
    space.check_point(q)?;
    let dt = wrap_diff(p.0[0], q.0[0]);
    let dz = q.0[1] - p.0[1];
    Ok((dt * dt + dz * dz).sqrt())
}

impl Configuration {
    pub fn new(space: &SpaceDescriptor, points: Vec<Point>, coefficients: Vec<f64>) -> Result<Self> {
        if points.len() != coefficients.len() {
            return Err(Error::InvalidConfiguration(format!(
                "{} points but {} coefficients",
                points.len(),
                coefficients.len()
            )));
        }
        if points.len() < 2 {
            return Err(Error::InvalidConfiguration("need at least two points".into()));
        }
        if let Some(c) = coefficients.iter().find(|c| !(c.is_finite() && **c != 0.0)) {
            return Err(Error::InvalidConfiguration(format!("coefficient {c} must be nonzero")));
        }
        let sum: f64 = coefficients.iter().sum();
        if sum.abs() >= SUM_TOL {
            return Err(Error::InvalidConfiguration(format!(
                "coefficients sum to {sum:e}, not zero"
            )));
        }
        check_distinct(space, &points)?;
        Ok(Configuration { points, coefficients })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub(crate) fn check_distinct(space: &SpaceDescriptor, points: &[Point]) -> Result<()> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = separation(space, &points[i], &points[j])?;
            if d <= MIN_SEPARATION {
                return Err(Error::InvalidConfiguration(format!(
                    "points {i} and {j} coincide (separation {d:e})"
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn check_hurst(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 && h <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("H must lie in (0, 1], got {h}")))
    }
}

/// `A_ij = d^{2H}(P_i, P_j)`, symmetric with an exact zero diagonal.
pub fn power_matrix(space: &SpaceDescriptor, points: &[Point], h: f64) -> Result<DMatrix<f64>> {
    check_hurst(h)?;
    let n = points.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = space.distance(&points[i], &points[j])?.powf(2.0 * h);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok(a)
}

/// `cᵀ A c`.
pub fn form_value(a: &DMatrix<f64>, c: &[f64]) -> f64 {
    let n = c.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a[(i, j)] * c[j];
        }
        total += c[i] * row;
    }
    total
}

/// `Σ_ij c_i c_j d^{2H}(P_i, P_j)` over both orderings.
pub fn quadratic_form(space: &SpaceDescriptor, config: &Configuration, h: f64) -> Result<f64> {
    let a = power_matrix(space, &config.points, h)?;
    Ok(form_value(&a, &config.coefficients))
}

/// Scale `n · max d^{2H}` used for relative tolerances.
pub fn form_scale(a: &DMatrix<f64>) -> f64 {
    a.nrows() as f64 * a.amax()
}

fn eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure("matrix has non-finite entries".into()));
    }
    let n = m.nrows();
    let e = SymmetricEigen::try_new(m, f64::EPSILON, 1000 * n.max(1))
        .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
    if e.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure("non-finite eigenvalue".into()));
    }
    Ok(e)
}

/// Eigenvalues sorted descending with matching eigenvectors.
pub(crate) fn sorted_eigen(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let e = eigen(m)?;
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let values = order.iter().map(|&k| e.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(e.eigenvectors.nrows(), order.len(), |i, k| {
        e.eigenvectors[(i, order[k])]
    });
    Ok((values, vectors))
}

/// `JAJ` with `J = I − 11ᵀ/n`.
pub fn double_center(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| a.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| a.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut out = DMatrix::from_fn(n, n, |i, j| a[(i, j)] - row_means[i] - col_means[j] + grand);
    // exact symmetry
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Subtracts the mean and rescales to unit Euclidean norm.
pub fn recenter_unit(c: &mut [f64]) {
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    c.iter_mut().for_each(|x| *x -= mean);
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        c.iter_mut().for_each(|x| *x /= n);
    }
}

/// Orthonormal (Helmert) basis of the zero-sum hyperplane, as columns.
fn zero_sum_basis(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n - 1, |i, k| {
        let k1 = (k + 1) as f64;
        let norm = (k1 * (k1 + 1.0)).sqrt();
        if i <= k {
            1.0 / norm
        } else if i == k + 1 {
            -k1 / norm
        } else {
            0.0
        }
    })
}

/// Extremes of `cᵀAc` over unit zero-sum `c`.
#[derive(Debug, Clone)]
pub struct ZeroSumExtremes {
    pub max_value: f64,
    pub max_vector: Vec<f64>,
    pub min_value: f64,
    pub min_vector: Vec<f64>,
}

/// Largest and smallest values of the form on the unit sphere of the
/// zero-sum hyperplane, with their maximizers.
pub fn zero_sum_extremes(a: &DMatrix<f64>) -> Result<ZeroSumExtremes> {
    let n = a.nrows();
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two points".into()));
    }
    let q = zero_sum_basis(n);
    let restricted = q.transpose() * a * &q;
    let (values, vectors) = sorted_eigen(restricted)?;
    let lift = |k: usize| -> Vec<f64> {
        let mut c: Vec<f64> = (&q * vectors.column(k)).iter().copied().collect();
        recenter_unit(&mut c);
        c
    };
    Ok(ZeroSumExtremes {
        max_value: values[0],
        max_vector: lift(0),
        min_value: values[values.len() - 1],
        min_vector: lift(values.len() - 1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NoViolation,
    Violation,
}

/// Spectral test of negative definiteness of `d^{2H}` on a point set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CenteredGramReport {
    #[serde(rename = "H")]
    pub h: f64,
    /// Power matrix rows.
    pub power_matrix: Vec<Vec<f64>>,
    /// Eigenvalues of `JAJ`, descending.
    pub spectrum: Vec<f64>,
    pub max_eigenvalue: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Unit zero-sum coefficients of a violating configuration, when one was found.
    pub violating_coefficients: Option<Vec<f64>>,
    /// Form value of the violating coefficients.
    pub violating_form: Option<f64>,
}

impl CenteredGramReport {
    /// Max eigenvalue exceeds ten times the tolerance.
    pub fn is_certified(&self) -> bool {
        self.max_eigenvalue > 10.0 * self.tolerance
    }

    /// Exceeds the tolerance without clearing the certification margin.
    pub fn is_inconclusive(&self) -> bool {
        self.verdict == Verdict::Violation && !self.is_certified()
    }
}

pub fn centered_gram(
    space: &SpaceDescriptor,
    points: &[Point],
    h: f64,
    tol_scale: f64,
) -> Result<CenteredGramReport> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("centered Gram test needs >= 2 points".into()));
    }
    if !(tol_scale.is_finite() && tol_scale >= 0.0) {
        return Err(Error::InvalidParameter(format!("tol_scale must be >= 0, got {tol_scale}")));
    }
    check_distinct(space, points)?;
    let a = power_matrix(space, points, h)?;
    let tolerance = tol_scale * form_scale(&a);
    let (spectrum, vectors) = sorted_eigen(double_center(&a))?;
    let max_eigenvalue = spectrum[0];
    let (verdict, violating_coefficients, violating_form) = if max_eigenvalue > tolerance {
        let mut c: Vec<f64> = vectors.column(0).iter().copied().collect();
        recenter_unit(&mut c);
        let f = form_value(&a, &c);
        (Verdict::Violation, Some(c), Some(f))
    } else {
        (Verdict::NoViolation, None, None)
    };
    Ok(CenteredGramReport {
        h,
        power_matrix: a.row_iter().map(|r| r.iter().copied().collect()).collect(),
        spectrum,
        max_eigenvalue,
        tolerance,
        verdict,
        violating_coefficients,
        violating_form,
    })
}

/// Covariance of a fractional Brownian field pinned at an origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    pub origin: Point,
    pub points: Vec<Point>,
    #[serde(rename = "H")]
    pub h: f64,
    pub entries: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    pub positive_semidefinite: bool,
}

impl CovarianceMatrix {
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.entries.len();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j])
    }

    pub fn trace(&self) -> f64 {
        (0..self.entries.len()).map(|i| self.entries[i][i]).sum()
    }

    /// `cᵀ Cov c`.
    pub fn form(&self, c: &[f64]) -> f64 {
        form_value(&self.matrix(), c)
    }
}

/// `½ (d^{2H}(O,x) + d^{2H}(O,y) − d^{2H}(x,y))`.
pub fn covariance_entries(
    space: &SpaceDescriptor,
    origin: &Point,
    points: &[Point],
    h: f64,
) -> Result<DMatrix<f64>> {
    check_hurst(h)?;
    let from_origin: Vec<f64> = points
        .iter()
        .map(|p| Ok(space.distance(origin, p)?.powf(2.0 * h)))
        .collect::<Result<_>>()?;
    let a = power_matrix(space, points, h)?;
    let n = points.len();
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = if i == j {
                from_origin[i]
            } else {
                0.5 * (from_origin[i] + from_origin[j] - a[(i, j)])
            };
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    // A point equal to the origin carries an identically zero row and column.
    for i in 0..n {
        if from_origin[i] == 0.0 {
            for j in 0..n {
                cov[(i, j)] = 0.0;
                cov[(j, i)] = 0.0;
            }
        }
    }
    Ok(cov)
}

pub fn covariance_matrix(
    space: &SpaceDescriptor,
    origin: &Point,
    points: &[Point],
    h: f64,
) -> Result<CovarianceMatrix> {
    let cov = covariance_entries(space, origin, points, h)?;
    let (values, _) = sorted_eigen(cov.clone())?;
    let min_eigenvalue = *values.last().unwrap_or(&0.0);
    let trace = cov.trace();
    Ok(CovarianceMatrix {
        origin: origin.clone(),
        points: points.to_vec(),
        h,
        entries: cov.row_iter().map(|r| r.iter().copied().collect()).collect(),
        min_eigenvalue,
        positive_semidefinite: min_eigenvalue >= -1e-10 * trace.max(f64::MIN_POSITIVE),
    })
}

/// Minimum covariance eigenvalue of a pinned field on hyperbolic space,
/// for `0 < H ≤ 1/2` and points distinct from each other and from the origin.
pub fn nondegeneracy_min_eigenvalue(
    space: &SpaceDescriptor,
    origin: &Point,
    points: &[Point],
    h: f64,
) -> Result<f64> {
    if !matches!(space, SpaceDescriptor::Hyperbolic { .. }) {
        return Err(Error::InvalidParameter("nondegeneracy test needs a hyperbolic space".into()));
    }
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::InvalidParameter(format!("H must lie in (0, 1/2], got {h}")));
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter("need at least one point".into()));
    }
    let mut all = points.to_vec();
    all.push(origin.clone());
    check_distinct(space, &all)?;
    let cov = covariance_entries(space, origin, points, h)?;
    let (values, _) = sorted_eigen(cov)?;
    Ok(*values.last().expect("nonempty"))
}

/// `K_ij = exp(−λ d^{2H}(P_i, P_j))` and its minimum eigenvalue.
pub fn stationary_kernel_matrix(
    space: &SpaceDescriptor,
    points: &[Point],
    h: f64,
    lambda: f64,
) -> Result<(DMatrix<f64>, f64)> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let a = power_matrix(space, points, h)?;
    let k = a.map(|x| (-lambda * x).exp());
    let (values, _) = sorted_eigen(k.clone())?;
    let min = *values.last().unwrap_or(&f64::NAN);
    Ok((k, min))
}

/// Rows `i,j,d,d^{2H}` for `i < j`.
pub fn distance_csv(space: &SpaceDescriptor, points: &[Point], h: f64) -> Result<String> {
    check_hurst(h)?;
    let mut out = String::from("i,j,d,d2h\n");
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = space.distance(&points[i], &points[j])?;
            out.push_str(&format!("{i},{j},{d},{}\n", d.powf(2.0 * h)));
        }
    }
    Ok(out)
}

/// Rows `index,eigenvalue`.
pub fn spectrum_csv(spectrum: &[f64]) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (k, v) in spectrum.iter().enumerate() {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}
