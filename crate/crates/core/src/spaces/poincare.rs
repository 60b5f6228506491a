//! Poincaré ball model of curvature −1: metric `4‖dx‖² / (1 − ‖x‖²)²`.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Conformal factor `λ_x = 2 / (1 − ‖x‖²)`.
pub(crate) fn conformal_factor(x: &[f64]) -> f64 {
    2.0 / (1.0 - norm_sq(x))
}

pub(crate) fn distance(p: &[f64], q: &[f64]) -> f64 {
    let diff_sq: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
    let denom = (1.0 - norm_sq(p)) * (1.0 - norm_sq(q));
    let x = (2.0 * diff_sq / denom).max(0.0);
    // arccosh(1 + x) = ln(1 + x + sqrt(x (x + 2))), accurate for small x
    (x + (x * (x + 2.0)).sqrt()).ln_1p()
}

/// Möbius addition `x ⊕ y`.
pub(crate) fn mobius_add(x: &[f64], y: &[f64]) -> Vec<f64> {
    let xy = dot(x, y);
    let x2 = norm_sq(x);
    let y2 = norm_sq(y);
    let a = 1.0 + 2.0 * xy + y2;
    let b = 1.0 - x2;
    let denom = 1.0 + 2.0 * xy + x2 * y2;
    x.iter()
        .zip(y)
        .map(|(xi, yi)| (a * xi + b * yi) / denom)
        .collect()
}

/// Exponential map at `p` of the chart vector `v`.
pub(crate) fn exp(p: &[f64], v: &[f64]) -> Vec<f64> {
    let nv = norm_sq(v).sqrt();
    if nv == 0.0 {
        return p.to_vec();
    }
    let t = (conformal_factor(p) * nv / 2.0).tanh();
    let step: Vec<f64> = v.iter().map(|vi| t * vi / nv).collect();
    mobius_add(p, &step)
}

/// Unit-speed initial velocity (chart components) of the geodesic from `p` to `q`.
pub(crate) fn unit_direction(p: &[f64], q: &[f64]) -> Vec<f64> {
    let neg_p: Vec<f64> = p.iter().map(|x| -x).collect();
    let u = mobius_add(&neg_p, q);
    let nu = norm_sq(&u).sqrt();
    let scale = 1.0 / (conformal_factor(p) * nu);
    u.iter().map(|x| x * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_recovers_target_along_unit_direction() {
        let p = [0.2, -0.3];
        let q = [-0.4, 0.5];
        let d = distance(&p, &q);
        let v: Vec<f64> = unit_direction(&p, &q).iter().map(|x| x * d).collect();
        let r = exp(&p, &v);
        assert!(distance(&r, &q) < 1e-10);
    }

    #[test]
    fn origin_distance_is_twice_artanh() {
        let d = distance(&[0.0, 0.0], &[0.5, 0.0]);
        assert!((d - 2.0 * 0.5f64.atanh()).abs() < 1e-15);
    }
}
