use std::f64::consts::PI;
use std::fmt;

use fracindex::configurations::{
    antipodal_quadruple, check_condition_g, search_critical, witness_pipeline_with, SearchBudget,
    DEFAULT_EPS_SCHEDULE,
};
use fracindex::definiteness::{
    centered_gram, covariance_matrix, distance_csv, estimate_fractional_index, spectrum_csv, Configuration,
    IndexSearch, PointSampler, DEFAULT_TOL_SCALE,
};
use fracindex::discrete_geodesics::{build_graph, ParametricChart};
use fracindex::sampler::{sample_fbm, sample_stationary, variogram_check};
use fracindex::spaces::fibonacci_sphere;
use fracindex::{Error, Point, SpaceDescriptor, WarpFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{ChartKind, Command, Common, Format, Layout};
use crate::{EXIT_EXHAUSTED, EXIT_INTERNAL, EXIT_NEGATIVE, EXIT_OK, EXIT_USAGE};

pub struct Artifact {
    pub file_name: String,
    pub bytes: Vec<u8>,
}

pub struct Success {
    pub artifact: Artifact,
    pub code: u8,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    /// A library error, with a partial report when one is worth writing.
    Domain(Error, Option<Artifact>),
    Internal(String),
}

impl fmt::Debug for Artifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Artifact({}, {} bytes)", self.file_name, self.bytes.len())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Internal(m) => f.write_str(m),
            Failure::Domain(e, _) => write!(f, "{e}"),
        }
    }
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Domain(e, _) => error_code(e),
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e, None)
    }
}

pub fn error_code(e: &Error) -> u8 {
    match e {
        Error::GNotFailing
        | Error::NoCircleFactor
        | Error::ExcessClipping { .. }
        | Error::NotCritical { .. }
        | Error::DirectionNotPerpendicular(_) => EXIT_NEGATIVE,
        Error::NoPositivityFound | Error::BudgetExhausted(_) | Error::NoConvergence(_) => EXIT_EXHAUSTED,
        Error::EigenFailure(_) | Error::Disconnected(..) => EXIT_INTERNAL,
        _ => EXIT_USAGE,
    }
}

type Outcome = Result<Success, Failure>;

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn json_artifact<T: Serialize>(value: &T) -> Result<Artifact, Failure> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Failure::Internal(e.to_string()))?;
    bytes.push(b'\n');
    Ok(Artifact { file_name: "report.json".into(), bytes })
}

fn csv_artifact(text: String) -> Artifact {
    Artifact { file_name: "report.csv".into(), bytes: text.into_bytes() }
}

fn ok(artifact: Artifact) -> Outcome {
    Ok(Success { artifact, code: EXIT_OK })
}

fn json_only(common: &Common, what: &str) -> Result<(), Failure> {
    if common.format != Format::Json {
        return usage(format!("{what} reports are JSON only"));
    }
    Ok(())
}

fn tabular(common: &Common, what: &str) -> Result<(), Failure> {
    if common.format == Format::Bin {
        return usage(format!("binary output is only available for sample, not {what}"));
    }
    Ok(())
}

pub fn resolve_space(c: &Common) -> Result<SpaceDescriptor, Failure> {
    let Some(name) = c.space.as_deref() else {
        return usage("--space is required");
    };
    let circumference = |default: f64| c.l.first().copied().unwrap_or(default);
    let space = if name.trim_start().starts_with('{') {
        SpaceDescriptor::from_json(name).map_err(|e| Failure::Usage(e.to_string()))?
    } else {
        match name {
            "circle" => SpaceDescriptor::circle(circumference(2.0 * PI)),
            "sphere" => SpaceDescriptor::sphere(c.d.unwrap_or(2), c.r.unwrap_or(1.0)),
            "hyperbolic" => SpaceDescriptor::hyperbolic(c.d.unwrap_or(2)),
            "euclidean" => SpaceDescriptor::euclidean(c.d.unwrap_or(2)),
            "cylinder" => SpaceDescriptor::cylinder(circumference(2.0 * PI)),
            "torus" | "flat-torus" | "flat_torus" => SpaceDescriptor::flat_torus(if c.l.is_empty() {
                vec![2.0 * PI; c.d.unwrap_or(2)]
            } else {
                c.l.clone()
            }),
            "warped" => SpaceDescriptor::warped(WarpFunction::Quadratic { a: c.warp_a.unwrap_or(1.0) }),
            other => return usage(format!("unknown space '{other}'")),
        }
    };
    space.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(space)
}

fn resolve_h(c: &Common, default: Option<f64>) -> Result<f64, Failure> {
    let Some(h) = c.h.or(default) else {
        return usage("--H is required");
    };
    if !(h > 0.0 && h <= 1.0) {
        return usage(format!("--H must lie in (0, 1], got {h}"));
    }
    Ok(h)
}

fn resolve_tol_scale(c: &Common) -> Result<f64, Failure> {
    let t = c.tol_scale.unwrap_or(DEFAULT_TOL_SCALE);
    if !(t.is_finite() && t >= 0.0) {
        return usage(format!("--tol-scale must be >= 0, got {t}"));
    }
    Ok(t)
}

fn parse_coords(space: &SpaceDescriptor, text: &str) -> Result<Point, Failure> {
    let coords: Vec<f64> = serde_json::from_str(text).map_err(|e| Failure::Usage(format!("bad coordinates: {e}")))?;
    space.point(coords).map_err(|e| Failure::Usage(e.to_string()))
}

fn default_origin(space: &SpaceDescriptor) -> Point {
    match space {
        SpaceDescriptor::Sphere { d, r } => {
            let mut c = vec![0.0; d + 1];
            c[*d] = *r;
            Point(c)
        }
        SpaceDescriptor::Euclidean { d } | SpaceDescriptor::Hyperbolic { d } => Point(vec![0.0; *d]),
        _ => space.waist_point(0.0).unwrap_or_else(|_| Point(vec![0.0; space.coord_len()])),
    }
}

fn resolve_origin(space: &SpaceDescriptor, text: Option<&str>) -> Result<Point, Failure> {
    match text {
        Some(t) => parse_coords(space, t),
        None => Ok(default_origin(space)),
    }
}

fn equispaced(space: &SpaceDescriptor, n: usize) -> Option<Vec<Point>> {
    match space {
        SpaceDescriptor::Sphere { d: 2, r } => Some(
            fibonacci_sphere(n)
                .into_iter()
                .map(|p| Point(p.0.iter().map(|x| x * r).collect()))
                .collect(),
        ),
        _ => (0..n)
            .map(|k| space.waist_point(2.0 * PI * k as f64 / n as f64).ok())
            .collect(),
    }
}

pub fn resolve_points(space: &SpaceDescriptor, c: &Common, default_n: usize, seed: u64) -> Result<Vec<Point>, Failure> {
    if let Some(text) = &c.points {
        let rows: Vec<Vec<f64>> =
            serde_json::from_str(text).map_err(|e| Failure::Usage(format!("bad --points: {e}")))?;
        return rows
            .into_iter()
            .map(|r| space.point(r).map_err(|e| Failure::Usage(e.to_string())))
            .collect();
    }
    let n = c.n.unwrap_or(default_n);
    if n == 0 {
        return usage("--n must be >= 1");
    }
    let layout = c.layout.unwrap_or(if equispaced(space, 1).is_some() { Layout::Equispaced } else { Layout::Random });
    match layout {
        Layout::Equispaced => {
            equispaced(space, n).ok_or_else(|| Failure::Usage(format!("no equispaced layout on {}", space.name())))
        }
        Layout::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n).map(|_| space.random_point(&mut rng)).collect())
        }
    }
}

#[derive(Serialize)]
struct DistanceRow {
    i: usize,
    j: usize,
    d: f64,
    d2h: f64,
}

#[derive(Serialize)]
struct DistanceReport<'a> {
    space: &'a SpaceDescriptor,
    #[serde(rename = "H")]
    h: f64,
    points: &'a [Point],
    pairs: Vec<DistanceRow>,
}

fn distance(c: &Common, seed: u64) -> Outcome {
    tabular(c, "distance")?;
    let space = resolve_space(c)?;
    let h = resolve_h(c, Some(0.5))?;
    let points = resolve_points(&space, c, 8, seed)?;
    if c.format == Format::Csv {
        return ok(csv_artifact(distance_csv(&space, &points, h)?));
    }
    let mut pairs = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = space.distance(&points[i], &points[j])?;
            pairs.push(DistanceRow { i, j, d, d2h: d.powf(2.0 * h) });
        }
    }
    ok(json_artifact(&DistanceReport { space: &space, h, points: &points, pairs })?)
}

#[derive(Serialize)]
struct CheckReport<'a> {
    space: &'a SpaceDescriptor,
    points: &'a [Point],
    #[serde(flatten)]
    report: fracindex::definiteness::CenteredGramReport,
    certified: bool,
}

fn check_nd(c: &Common, seed: u64) -> Outcome {
    tabular(c, "check-nd")?;
    let space = resolve_space(c)?;
    let h = resolve_h(c, None)?;
    let tol = resolve_tol_scale(c)?;
    let points = resolve_points(&space, c, 50, seed)?;
    let report = centered_gram(&space, &points, h, tol)?;
    log::info!("max eigenvalue {} vs tolerance {}", report.max_eigenvalue, report.tolerance);
    if c.format == Format::Csv {
        return ok(csv_artifact(spectrum_csv(&report.spectrum)));
    }
    let certified = report.is_certified();
    ok(json_artifact(&CheckReport { space: &space, points: &points, report, certified })?)
}

fn covariance(c: &Common, origin: Option<&str>, seed: u64) -> Outcome {
    tabular(c, "covariance")?;
    let space = resolve_space(c)?;
    let h = resolve_h(c, None)?;
    let origin = resolve_origin(&space, origin)?;
    let points = resolve_points(&space, c, 8, seed)?;
    let cov = covariance_matrix(&space, &origin, &points, h)?;
    if c.format == Format::Csv {
        let mut out = String::new();
        for row in &cov.entries {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        return ok(csv_artifact(out));
    }
    ok(json_artifact(&cov)?)
}

#[derive(Serialize)]
struct IndexReport<'a> {
    space: &'a SpaceDescriptor,
    search: IndexSearch,
    #[serde(flatten)]
    bracket: fracindex::definiteness::IndexBracket,
}

fn index(c: &Common, cmd: &Command, seed: u64) -> Outcome {
    json_only(c, "index")?;
    let Command::Index { h_min, h_max, step, point_sets, restarts, search_points } = *cmd else {
        unreachable!()
    };
    let space = resolve_space(c)?;
    let n = c.n.unwrap_or(40);
    let sampler = match c.layout {
        Some(Layout::Random) => PointSampler::Uniform { n },
        Some(Layout::Equispaced) => PointSampler::Equispaced { n },
        None if equispaced(&space, 1).is_some() => PointSampler::Equispaced { n },
        None => PointSampler::Uniform { n },
    };
    let search = IndexSearch {
        h_min,
        h_max,
        step,
        sampler,
        point_sets,
        search_restarts: restarts,
        search_points,
        tol_scale: resolve_tol_scale(c)?,
        seed,
    };
    let bracket = estimate_fractional_index(&space, &search)?;
    ok(json_artifact(&IndexReport { space: &space, search, bracket })?)
}

#[derive(Serialize)]
struct CriticalReport<'a> {
    space: &'a SpaceDescriptor,
    #[serde(rename = "H")]
    h: f64,
    budget: SearchBudget,
    seed: u64,
    #[serde(flatten)]
    result: fracindex::configurations::CriticalSearch,
}

fn critical(c: &Common, restarts: usize, max_sweeps: usize, seed: u64) -> Outcome {
    json_only(c, "critical")?;
    let space = resolve_space(c)?;
    let h = resolve_h(c, None)?;
    let n = c.n.unwrap_or(4);
    let budget = SearchBudget { restarts, max_sweeps, ..SearchBudget::default() };
    let result = search_critical(&space, n, h, &budget, seed)?;
    let code = if result.critical { EXIT_OK } else { EXIT_EXHAUSTED };
    let artifact = json_artifact(&CriticalReport { space: &space, h, budget, seed, result })?;
    Ok(Success { artifact, code })
}

#[derive(Serialize)]
struct ConditionGOutput<'a> {
    space: &'a SpaceDescriptor,
    configuration: Configuration,
    #[serde(flatten)]
    report: fracindex::configurations::ConditionGReport,
    failing: Vec<usize>,
}

fn condition_g(c: &Common, coeffs: Option<&str>, base: f64, a: f64, seed: u64) -> Outcome {
    json_only(c, "condition-g")?;
    let space = resolve_space(c)?;
    let configuration = if c.points.is_some() {
        let Some(text) = coeffs else {
            return usage("--coeffs is required with --points");
        };
        let coefficients: Vec<f64> =
            serde_json::from_str(text).map_err(|e| Failure::Usage(format!("bad --coeffs: {e}")))?;
        let points = resolve_points(&space, c, 0, seed)?;
        Configuration::new(&space, points, coefficients).map_err(|e| Failure::Usage(e.to_string()))?
    } else {
        antipodal_quadruple(&space, base, a)?
    };
    let report = check_condition_g(&space, &configuration)?;
    let failing = report.failing();
    ok(json_artifact(&ConditionGOutput { space: &space, configuration, report, failing })?)
}

fn witness(c: &Common) -> Outcome {
    json_only(c, "witness")?;
    let space = resolve_space(c)?;
    let h = resolve_h(c, Some(0.5))?;
    let schedule: Vec<f64> = if c.eps_schedule.is_empty() {
        DEFAULT_EPS_SCHEDULE.to_vec()
    } else {
        c.eps_schedule.clone()
    };
    let cert = witness_pipeline_with(&space, h, &schedule)?;
    ok(json_artifact(&cert)?)
}

fn sample(c: &Common, origin: Option<&str>, samples: usize, lambda: Option<f64>, seed: u64) -> Outcome {
    let space = resolve_space(c)?;
    let h = resolve_h(c, None)?;
    let points = resolve_points(&space, c, 10, seed)?;
    let field = match lambda {
        Some(l) => sample_stationary(&space, &points, h, l, samples, seed)?,
        None => {
            let origin = resolve_origin(&space, origin)?;
            sample_fbm(&space, &origin, &points, h, samples, seed)?
        }
    };
    match c.format {
        Format::Json => ok(json_artifact(&field)?),
        Format::Csv => ok(csv_artifact(field.to_csv())),
        Format::Bin => {
            let mut bytes = Vec::new();
            field.write_binary(&mut bytes).map_err(|e| Failure::Internal(e.to_string()))?;
            ok(Artifact { file_name: "samples.bin".into(), bytes })
        }
    }
}

#[derive(Serialize)]
struct VariogramReport<'a> {
    space: &'a SpaceDescriptor,
    #[serde(rename = "H")]
    h: f64,
    origin: Point,
    points: Vec<Point>,
    n_samples: usize,
    seed: u64,
    clipped_mass: f64,
    pairs: Vec<fracindex::sampler::VariogramPair>,
    max_abs_z: f64,
}

fn variogram(c: &Common, origin: Option<&str>, samples: usize, pairs: Option<&str>, seed: u64) -> Outcome {
    tabular(c, "variogram")?;
    let space = resolve_space(c)?;
    let h = resolve_h(c, None)?;
    let points = resolve_points(&space, c, 20, seed)?;
    let origin = resolve_origin(&space, origin)?;
    let field = sample_fbm(&space, &origin, &points, h, samples, seed)?;
    let pairs: Vec<(usize, usize)> = match pairs {
        Some(t) => serde_json::from_str(t).map_err(|e| Failure::Usage(format!("bad --pairs: {e}")))?,
        None => {
            let m = points.len();
            if m < 2 {
                return usage("need at least two points for random pairs");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_9a12);
            (0..10)
                .map(|_| {
                    let i = rng.random_range(0..m);
                    let j = (i + rng.random_range(1..m)) % m;
                    (i, j)
                })
                .collect()
        }
    };
    let result = variogram_check(&field, &pairs)?;
    if c.format == Format::Csv {
        let mut out = String::from("i,j,empirical,target,z\n");
        for p in &result {
            out.push_str(&format!("{},{},{},{},{}\n", p.i, p.j, p.empirical, p.target, p.z_score));
        }
        return ok(csv_artifact(out));
    }
    let max_abs_z = result.iter().fold(0.0f64, |m, p| m.max(p.z_score.abs()));
    ok(json_artifact(&VariogramReport {
        space: &space,
        h,
        origin,
        points,
        n_samples: samples,
        seed,
        clipped_mass: field.clipped_mass,
        pairs: result,
        max_abs_z,
    })?)
}

#[derive(Serialize)]
struct MeshReport {
    chart: ParametricChart,
    n_theta: usize,
    n_z: usize,
    stencil_radius: usize,
    z_spacing: f64,
    from: (f64, f64),
    to: (f64, f64),
    distance: f64,
    path: Vec<(f64, f64)>,
    /// Largest `|z − z_from|` along the path.
    deviation: f64,
}

fn mesh_geodesic(c: &Common, cmd: &Command) -> Outcome {
    tabular(c, "mesh-geodesic")?;
    let Command::MeshGeodesic { chart, z_min, z_max, n_theta, n_z, stencil, from, to } = cmd else {
        unreachable!()
    };
    let chart = match chart {
        ChartKind::Flat => ParametricChart::Flat { z_min: *z_min, z_max: *z_max },
        ChartKind::Hyperboloid => ParametricChart::Hyperboloid { z_min: *z_min, z_max: *z_max },
        ChartKind::Warped => ParametricChart::Warped {
            z_min: *z_min,
            z_max: *z_max,
            warp: WarpFunction::Quadratic { a: c.warp_a.unwrap_or(1.0) },
        },
    };
    let g = build_graph(&chart, *n_theta, *n_z, *stencil).map_err(|e| Failure::Usage(e.to_string()))?;
    let u = g.nearest_vertex(from[0], from[1]).map_err(|e| Failure::Usage(e.to_string()))?;
    let v = g.nearest_vertex(to[0], to[1]).map_err(|e| Failure::Usage(e.to_string()))?;
    if c.format == Format::Csv {
        return ok(csv_artifact(g.distance_csv(u)?));
    }
    let (distance, path) = g.graph_distance(u, v)?;
    let deviation = g.path_deviation(&path, g.vertex_param(u).1)?;
    ok(json_artifact(&MeshReport {
        chart,
        n_theta: *n_theta,
        n_z: *n_z,
        stencil_radius: *stencil,
        z_spacing: g.z_spacing(),
        from: g.vertex_param(u),
        to: g.vertex_param(v),
        distance,
        path: path.iter().map(|&p| g.vertex_param(p)).collect(),
        deviation,
    })?)
}

pub fn execute(cmd: &Command, c: &Common, seed: u64) -> Outcome {
    if c.h.is_some() {
        resolve_h(c, None)?;
    }
    match cmd {
        Command::Distance => distance(c, seed),
        Command::CheckNd => check_nd(c, seed),
        Command::Covariance { origin } => covariance(c, origin.as_deref(), seed),
        Command::Index { .. } => index(c, cmd, seed),
        Command::Critical { restarts, max_sweeps } => critical(c, *restarts, *max_sweeps, seed),
        Command::ConditionG { coeffs, base, a } => condition_g(c, coeffs.as_deref(), *base, *a, seed),
        Command::Witness => witness(c),
        Command::Sample { origin, samples, lambda } => sample(c, origin.as_deref(), *samples, *lambda, seed),
        Command::Variogram { origin, samples, pairs } => {
            variogram(c, origin.as_deref(), *samples, pairs.as_deref(), seed)
        }
        Command::MeshGeodesic { .. } => mesh_geodesic(c, cmd),
    }
}
