//! Acceptance suite: one PASS/FAIL line per criterion, with its runtime limit.
//! Runs without the libtest harness so the lines always appear in the output.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use fracindex::configurations::{antipodal_quadruple, perturb_witness, witness_pipeline};
use fracindex::definiteness::{
    centered_gram, covariance_matrix, estimate_fractional_index, quadratic_form, IndexSearch, PointSampler,
    DEFAULT_TOL_SCALE,
};
use fracindex::discrete_geodesics::{build_graph, refine_distance, ParametricChart};
use fracindex::sampler::{sample_fbm, variogram_check};
use fracindex::spaces::{embed_hyperbolic, fibonacci_sphere};
use fracindex::{Point, SpaceDescriptor, WarpFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAU: f64 = 2.0 * PI;

type Check = Result<String, String>;

type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Pairwise sum `Σ c_i c_j d^{2H}` from an explicit distance function.
fn pair_sum(points: &[Point], c: &[f64], h: f64, d: impl Fn(&Point, &Point) -> f64) -> f64 {
    let mut s = 0.0;
    for i in 0..points.len() {
        for j in 0..points.len() {
            if i != j {
                s += c[i] * c[j] * d(&points[i], &points[j]).powf(2.0 * h);
            }
        }
    }
    s
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let t = (a - b).rem_euclid(TAU);
    t.min(TAU - t)
}

fn c1_quadruple_zero() -> Check {
    let space = SpaceDescriptor::circle(TAU);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let base = rng.random_range(0.0..TAU);
        let a = rng.random_range(1e-3..PI - 1e-3);
        let q = antipodal_quadruple(&space, base, a).map_err(|e| e.to_string())?;
        worst = worst.max(quadratic_form(&space, &q, 0.5).map_err(|e| e.to_string())?.abs());
    }
    ensure(worst <= 1e-12, format!("max |form| = {worst:.3e} over 50 draws"))
}

fn c2_quadruple_positive() -> Check {
    let space = SpaceDescriptor::circle(TAU);
    let q = antipodal_quadruple(&space, 0.0, PI / 2.0).map_err(|e| e.to_string())?;
    let form = quadratic_form(&space, &q, 0.6).map_err(|e| e.to_string())?;
    // four adjacent pairs at π/2 with product −1, two opposite pairs at π with product +1
    let oracle = 2.0 * (-4.0 * (PI / 2.0).powf(1.2) + 2.0 * PI.powf(1.2));
    let closed = 4.0 * PI.powf(1.2) * (1.0 - 2f64.powf(-0.2));
    let rel = (form - closed).abs() / closed;
    ensure(
        rel <= 1e-10 && (oracle - closed).abs() <= 1e-12 * closed && (closed - 2.045).abs() < 5e-4,
        format!("form = {form:.12}, closed form = {closed:.12}, rel err = {rel:.2e}"),
    )
}

fn c3_sphere_no_violation() -> Check {
    let space = SpaceDescriptor::sphere(2, 1.0);
    let points = fibonacci_sphere(200);
    let r = centered_gram(&space, &points, 0.5, DEFAULT_TOL_SCALE).map_err(|e| e.to_string())?;
    ensure(
        r.max_eigenvalue <= r.tolerance,
        format!("max eigenvalue {:.3e} <= tolerance {:.3e}", r.max_eigenvalue, r.tolerance),
    )
}

fn c4_cylinder_witness() -> Check {
    let space = SpaceDescriptor::cylinder(TAU);
    let q = antipodal_quadruple(&space, 0.0, PI / 2.0).map_err(|e| e.to_string())?;
    let dir = space.tangent(&q.points[3], vec![0.0, 1.0]).map_err(|e| e.to_string())?;
    let cert = perturb_witness(&space, &q, 3, &dir, 0.5, &[1e-2, 1e-3]).map_err(|e| e.to_string())?;
    let cyl = |p: &Point, r: &Point| {
        let dt = angle_gap(p.0[0], r.0[0]);
        let dz = p.0[1] - r.0[1];
        (dt * dt + dz * dz).sqrt()
    };
    let five = &cert.perturbed[0];
    let oracle = pair_sum(&five.points, &five.coefficients, 0.5, cyl);
    let form = cert.forms[0];
    let rel = (form - oracle).abs() / oracle;
    let slope = cert.forms[1] / 1e-3;
    let slope_rel = (slope - 0.5).abs() / 0.5;
    ensure(
        form > 0.0 && oracle > 0.0 && rel <= 0.05 && slope_rel <= 0.05,
        format!(
            "form(0.01) = {form:.6e}, oracle = {oracle:.6e} (rel {rel:.1e}); form/eps at 1e-3 = {slope:.6}"
        ),
    )
}

fn c5_condition_g() -> Check {
    let cyl = SpaceDescriptor::cylinder(TAU);
    let p = Point::new([0.0, 0.0]);
    let cyl_span = cyl
        .shortest_direction_span_dim(&p, &[cyl.antipode(&p).map_err(|e| e.to_string())?])
        .map_err(|e| e.to_string())?;
    let sph = SpaceDescriptor::sphere(2, 1.0);
    let n = Point::new([0.0, 0.0, 1.0]);
    let sph_span = sph
        .shortest_direction_span_dim(&n, &[sph.antipode(&n).map_err(|e| e.to_string())?])
        .map_err(|e| e.to_string())?;
    ensure(
        cyl_span == 1 && cyl.dim() == 2 && sph_span == 2 && sph.dim() == 2,
        format!("cylinder span {cyl_span} of {} (fail); sphere span {sph_span} of {} (pass)", cyl.dim(), sph.dim()),
    )
}

fn c6_hyperbolic_nondegenerate() -> Check {
    let space = SpaceDescriptor::hyperbolic(2);
    let origin = Point::new([0.0, 0.0]);
    let mut worst = f64::INFINITY;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Point> = (0..20).map(|_| space.random_point(&mut rng)).collect();
        let cov = covariance_matrix(&space, &origin, &points, 0.5).map_err(|e| e.to_string())?;
        worst = worst.min(cov.min_eigenvalue / cov.trace());
    }
    ensure(worst > 1e-12, format!("min over runs of min eigenvalue / trace = {worst:.3e}"))
}

fn c7_immersion() -> Check {
    let h2 = SpaceDescriptor::hyperbolic(2);
    let h3 = SpaceDescriptor::hyperbolic(3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = h2.random_point(&mut rng);
        let q = h2.random_point(&mut rng);
        let d2 = h2.distance(&p, &q).map_err(|e| e.to_string())?;
        let ep = embed_hyperbolic(&p).map_err(|e| e.to_string())?;
        let eq = embed_hyperbolic(&q).map_err(|e| e.to_string())?;
        let d3 = h3.distance(&ep, &eq).map_err(|e| e.to_string())?;
        worst = worst.max((d2 - d3).abs());
    }
    ensure(worst <= 1e-12, format!("max |d_H2 - d_H3| = {worst:.3e} over 100 pairs"))
}

fn c8_index_bracket() -> Check {
    let circle = estimate_fractional_index(
        &SpaceDescriptor::circle(TAU),
        &IndexSearch {
            h_min: 0.3,
            h_max: 1.0,
            step: 0.05,
            sampler: PointSampler::Equispaced { n: 50 },
            seed: 8,
            ..IndexSearch::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let plane = estimate_fractional_index(
        &SpaceDescriptor::euclidean(2),
        &IndexSearch {
            h_min: 0.05,
            h_max: 1.0,
            step: 0.05,
            sampler: PointSampler::Uniform { n: 40 },
            seed: 8,
            ..IndexSearch::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let [lo, hi] = circle.beta_bracket;
    ensure(
        lo == Some(1.0) && hi == Some(1.1) && plane.violation_h.is_none() && plane.evidence_h == Some(1.0),
        format!(
            "circle bracket [{lo:?}, {hi:?}]; plane violation_H {:?}, evidence_H {:?}",
            plane.violation_h, plane.evidence_h
        ),
    )
}

fn c9_discrete_geodesics() -> Check {
    let flat = ParametricChart::Flat { z_min: -1.0, z_max: 1.0 };
    let g = build_graph(&flat, 64, 17, 3).map_err(|e| e.to_string())?;
    let (d_flat, _) = g
        .graph_distance(g.nearest_vertex(0.0, 0.0).map_err(|e| e.to_string())?, g.nearest_vertex(PI, 0.0).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;

    let warped = ParametricChart::Warped { z_min: -1.0, z_max: 1.0, warp: WarpFunction::Quadratic { a: 1.0 } };
    let d_warped = refine_distance(&warped, (0.0, 0.0), (PI, 0.0), 0.005).map_err(|e| e.to_string())?;
    let gw = build_graph(&warped, 128, 33, 3).map_err(|e| e.to_string())?;
    let (_, path_w) = gw
        .graph_distance(gw.nearest_vertex(0.0, 0.0).map_err(|e| e.to_string())?, gw.nearest_vertex(PI, 0.0).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let dev_w = gw.path_deviation(&path_w, 0.0).map_err(|e| e.to_string())?;

    let hyper = ParametricChart::Hyperboloid { z_min: -1.0, z_max: 1.0 };
    let gh = build_graph(&hyper, 128, 33, 3).map_err(|e| e.to_string())?;
    let (d_hyper, path_h) = gh
        .graph_distance(gh.nearest_vertex(0.0, 0.0).map_err(|e| e.to_string())?, gh.nearest_vertex(PI, 0.0).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let dev_h = gh.path_deviation(&path_h, 0.0).map_err(|e| e.to_string())?;

    let rel = |d: f64| (d - PI).abs() / PI;
    ensure(
        rel(d_flat) <= 0.01
            && rel(d_warped) <= 0.01
            && dev_w <= gw.z_spacing()
            && rel(d_hyper) <= 0.015
            && dev_h <= gh.z_spacing(),
        format!(
            "flat {d_flat:.5} ({:.2}%), warped {d_warped:.5} ({:.2}%, deviation {dev_w:.3} <= spacing {:.3}), hyperboloid {d_hyper:.5} ({:.2}%, deviation {dev_h:.3})",
            100.0 * rel(d_flat),
            100.0 * rel(d_warped),
            gw.z_spacing(),
            100.0 * rel(d_hyper)
        ),
    )
}

fn c10_torus_witness() -> Check {
    let cert = witness_pipeline(&SpaceDescriptor::flat_torus(vec![TAU, TAU]), 0.5).map_err(|e| e.to_string())?;
    let best = cert.forms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    ensure(
        cert.certified && best > 0.0,
        format!("certified at eps = {:?}, max form {best:.4e}", cert.certified_epsilon),
    )
}

fn c11_sampler() -> Check {
    let space = SpaceDescriptor::sphere(2, 1.0);
    let origin = Point::new([0.0, 0.0, 1.0]);
    let mut points = vec![origin.clone()];
    points.extend(fibonacci_sphere(12).into_iter().filter(|p| space.distance(p, &origin).unwrap() > 1e-6));
    let n = 20000;
    let seed = 11;
    let a = sample_fbm(&space, &origin, &points, 0.5, n, seed).map_err(|e| e.to_string())?;
    let b = sample_fbm(&space, &origin, &points, 0.5, n, seed).map_err(|e| e.to_string())?;
    let identical = a
        .realizations
        .iter()
        .flatten()
        .zip(b.realizations.iter().flatten())
        .all(|(x, y)| x.to_bits() == y.to_bits());
    let pinned = a.realizations.iter().all(|r| r[0] == 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = points.len();
    let pairs: Vec<(usize, usize)> = (0..10)
        .map(|_| {
            let i = rng.random_range(0..m);
            (i, (i + rng.random_range(1..m)) % m)
        })
        .collect();
    let report = variogram_check(&a, &pairs).map_err(|e| e.to_string())?;
    let worst = report.iter().fold(0.0f64, |w, p| w.max(p.z_score.abs()));
    let targets_ok = report.iter().all(|p| {
        let d = space.distance(&points[p.i], &points[p.j]).unwrap();
        (p.target - d).abs() <= 1e-12
    });
    ensure(
        worst <= 4.0 && pinned && identical && targets_ok,
        format!("max |z| = {worst:.2} over 10 pairs; origin column zero: {pinned}; bit-identical rerun: {identical}"),
    )
}

/// Worst `|slope − inner product|` for each ε over a fixed set of probes.
fn first_variation_errors(space: &SpaceDescriptor, seed: u64, eps: &[f64]) -> Result<Vec<f64>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = vec![0.0f64; eps.len()];
    let mut probes: Vec<(Point, Point)> = (0..10).map(|_| (space.random_point(&mut rng), space.random_point(&mut rng))).collect();
    if let SpaceDescriptor::Sphere { .. } = space {
        let n = Point::new([0.0, 0.0, 1.0]);
        probes.push((space.antipode(&n).unwrap(), n));
    }
    for (p_i, p_n) in probes {
        let raw: Vec<f64> = (0..space.coord_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dir = match space {
            SpaceDescriptor::Sphere { .. } => {
                let along: f64 = raw.iter().zip(&p_n.0).map(|(a, b)| a * b).sum();
                let t: Vec<f64> = raw.iter().zip(&p_n.0).map(|(a, b)| a - along * b).collect();
                space.unit_tangent(&p_n, t)
            }
            _ => space.unit_tangent(&p_n, raw),
        }
        .map_err(|e| e.to_string())?;
        let rows = space.first_variation_probe(&p_i, &p_n, &dir, eps).map_err(|e| e.to_string())?;
        for (k, (lhs, rhs)) in rows.iter().enumerate() {
            worst[k] = worst[k].max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

fn c12_first_variation() -> Check {
    let mut details = Vec::new();
    let mut ok = true;
    for (name, space) in [("sphere", SpaceDescriptor::sphere(2, 1.0)), ("hyperbolic", SpaceDescriptor::hyperbolic(2))] {
        let fit = first_variation_errors(&space, 12, &[1e-2, 1e-3])?;
        let k = 2.0 * (fit[0] / 1e-2).max(fit[1] / 1e-3);
        let check = first_variation_errors(&space, 12, &[1e-4])?[0];
        let bound = k * 1e-4 + 1e-10;
        ok &= check <= bound;
        details.push(format!("{name}: K = {k:.3}, error at 1e-4 = {check:.3e} <= {bound:.3e}"));
    }
    ensure(ok, details.join("; "))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("circle antipodal quadruple vanishes at H=1/2", Duration::from_secs(1), c1_quadruple_zero),
        ("circle quadruple at H=0.6 matches closed form", Duration::from_secs(1), c2_quadruple_positive),
        ("sphere S2 at H=1/2 shows no violation", Duration::from_secs(5), c3_sphere_no_violation),
        ("cylinder perturbation witness", Duration::from_secs(1), c4_cylinder_witness),
        ("condition (G) on cylinder and sphere", Duration::from_secs(1), c5_condition_g),
        ("hyperbolic nondegeneracy", Duration::from_secs(5), c6_hyperbolic_nondegenerate),
        ("hyperbolic immersion isometry", Duration::from_secs(1), c7_immersion),
        ("fractional index brackets", Duration::from_secs(60), c8_index_bracket),
        ("discrete geodesics", Duration::from_secs(30), c9_discrete_geodesics),
        ("flat torus witness", Duration::from_secs(1), c10_torus_witness),
        ("sampler variogram on S2", Duration::from_secs(30), c11_sampler),
        ("first-variation probe", Duration::from_secs(1), c12_first_variation),
    ];
    let mut failures = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let (pass, detail) = match result {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({}; {:.3}s, limit {}s)",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            name,
            detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
