//! Shortest-path approximations of geodesic distance on periodic strip charts
//! `[0, 2π) × [z_min, z_max]`.
//!
//! The chart is sampled on a regular grid that wraps in θ and has hard walls
//! in z. Each vertex is joined to the grid points within a Chebyshev radius
//! whose offsets are coprime, and each edge is weighted by the metric length
//! of the straight chart segment (midpoint rule).

use std::f64::consts::PI;
use std::fmt::Write as _;

use petgraph::algo::{astar, dijkstra};
use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{wrap_angle, WarpFunction};

const TAU: f64 = 2.0 * PI;

pub const DEFAULT_STENCIL_RADIUS: usize = 3;
const MAX_DOUBLINGS: usize = 6;

/// A periodic strip chart with a Riemannian metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "snake_case")]
pub enum ParametricChart {
    /// `dθ² + dz²`.
    Flat { z_min: f64, z_max: f64 },
    /// Induced metric of the one-sheeted hyperboloid
    /// `(√(1+z²) cos θ, √(1+z²) sin θ, z)`, whose waist is the unit circle.
    Hyperboloid { z_min: f64, z_max: f64 },
    /// `f(z) dθ² + dz²`.
    Warped { z_min: f64, z_max: f64, warp: WarpFunction },
}

impl ParametricChart {
    pub fn from_json(s: &str) -> Result<Self> {
        let chart: ParametricChart = serde_json::from_str(s)
            .map_err(|e| Error::InvalidParameter(format!("chart descriptor: {e}")))?;
        chart.validate()?;
        Ok(chart)
    }

    pub fn z_range(&self) -> (f64, f64) {
        match self {
            ParametricChart::Flat { z_min, z_max }
            | ParametricChart::Hyperboloid { z_min, z_max }
            | ParametricChart::Warped { z_min, z_max, .. } => (*z_min, *z_max),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.z_range();
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "z range [{lo}, {hi}] is empty or not finite"
            )));
        }
        if let ParametricChart::Warped { warp, .. } = self {
            warp.validate()?;
        }
        Ok(())
    }

    /// Metric coefficients `(g_θθ, g_θz, g_zz)` at `(θ, z)`.
    pub fn metric(&self, _theta: f64, z: f64) -> (f64, f64, f64) {
        match self {
            ParametricChart::Flat { .. } => (1.0, 0.0, 1.0),
            ParametricChart::Hyperboloid { .. } => {
                let rho_sq = 1.0 + z * z;
                (rho_sq, 0.0, 1.0 + z * z / rho_sq)
            }
            ParametricChart::Warped { warp, .. } => (warp.eval(z), 0.0, 1.0),
        }
    }

    /// Ambient embedding, when the chart comes from a surface in `ℝ³`.
    pub fn embedding(&self, theta: f64, z: f64) -> Option<[f64; 3]> {
        match self {
            ParametricChart::Hyperboloid { .. } => {
                let rho = (1.0 + z * z).sqrt();
                Some([rho * theta.cos(), rho * theta.sin(), z])
            }
            _ => None,
        }
    }

    /// Metric length of the straight chart segment from `(θ, z)` by `(dθ, dz)`,
    /// evaluated at the midpoint.
    pub fn segment_length(&self, theta: f64, z: f64, d_theta: f64, d_z: f64) -> f64 {
        let (gtt, gtz, gzz) = self.metric(theta + 0.5 * d_theta, z + 0.5 * d_z);
        (gtt * d_theta * d_theta + 2.0 * gtz * d_theta * d_z + gzz * d_z * d_z).sqrt()
    }
}

/// Grid graph over a [`ParametricChart`]. Vertex `j·n_theta + i` sits at
/// `(2πi/n_theta, z_min + j·Δz)`.
#[derive(Debug, Clone)]
pub struct GeodesicGraph {
    pub chart: ParametricChart,
    pub n_theta: usize,
    pub n_z: usize,
    pub stencil_radius: usize,
    graph: UnGraph<(), f64>,
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Half-stencil of coprime offsets `(di, dj)` with `dj > 0`, or `dj = 0, di > 0`.
fn stencil(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dj in 0..=r {
        for di in -r..=r {
            if (dj == 0 && di <= 0) || gcd(di.unsigned_abs(), dj.unsigned_abs()) != 1 {
                continue;
            }
            out.push((di, dj));
        }
    }
    out
}

pub fn build_graph(
    chart: &ParametricChart,
    n_theta: usize,
    n_z: usize,
    stencil_radius: usize,
) -> Result<GeodesicGraph> {
    chart.validate()?;
    if n_theta < 8 {
        return Err(Error::InvalidParameter(format!("n_theta must be >= 8, got {n_theta}")));
    }
    if n_z < 2 {
        return Err(Error::InvalidParameter(format!("n_z must be >= 2, got {n_z}")));
    }
    if !(1..=3).contains(&stencil_radius) {
        return Err(Error::InvalidParameter(format!(
            "stencil radius must be 1, 2 or 3, got {stencil_radius}"
        )));
    }

    let (z_min, z_max) = chart.z_range();
    let dz = (z_max - z_min) / (n_z - 1) as f64;
    let dtheta = TAU / n_theta as f64;

    for j in 0..n_z {
        let z = z_min + j as f64 * dz;
        let (gtt, gtz, gzz) = chart.metric(0.0, z);
        if !(gtt > 0.0 && gzz > 0.0 && gtt * gzz - gtz * gtz > 0.0) {
            return Err(Error::DegenerateChart(format!("metric not positive at z={z}")));
        }
    }

    let mut graph = UnGraph::with_capacity(n_theta * n_z, n_theta * n_z * 16);
    for _ in 0..n_theta * n_z {
        graph.add_node(());
    }
    let offsets = stencil(stencil_radius);
    for j in 0..n_z {
        let z = z_min + j as f64 * dz;
        for i in 0..n_theta {
            let theta = i as f64 * dtheta;
            for &(di, dj) in &offsets {
                let jj = j as isize + dj;
                if jj >= n_z as isize {
                    continue;
                }
                let ii = (i as isize + di).rem_euclid(n_theta as isize) as usize;
                let w = chart.segment_length(theta, z, di as f64 * dtheta, dj as f64 * dz);
                if !(w.is_finite() && w > 0.0) {
                    return Err(Error::DegenerateChart(format!(
                        "non-positive edge weight {w} at (θ={theta}, z={z})"
                    )));
                }
                graph.add_edge(
                    NodeIndex::new(j * n_theta + i),
                    NodeIndex::new(jj as usize * n_theta + ii),
                    w,
                );
            }
        }
    }

    Ok(GeodesicGraph {
        chart: chart.clone(),
        n_theta,
        n_z,
        stencil_radius,
        graph,
    })
}

impl GeodesicGraph {
    pub fn vertex_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Iterator over `(u, v, weight)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.graph.raw_edges().iter().map(|e| {
            (e.source().index(), e.target().index(), e.weight)
        })
    }

    pub fn z_spacing(&self) -> f64 {
        let (lo, hi) = self.chart.z_range();
        (hi - lo) / (self.n_z - 1) as f64
    }

    pub fn vertex(&self, i_theta: usize, j_z: usize) -> usize {
        j_z * self.n_theta + i_theta
    }

    /// Chart parameters `(θ, z)` of a vertex.
    pub fn vertex_param(&self, v: usize) -> (f64, f64) {
        let (i, j) = (v % self.n_theta, v / self.n_theta);
        let z_min = self.chart.z_range().0;
        (TAU * i as f64 / self.n_theta as f64, z_min + j as f64 * self.z_spacing())
    }

    /// Vertex closest to `(θ, z)` in grid units.
    pub fn nearest_vertex(&self, theta: f64, z: f64) -> Result<usize> {
        let (lo, hi) = self.chart.z_range();
        if !(lo..=hi).contains(&z) {
            return Err(Error::OutOfChart(format!("z={z} outside [{lo}, {hi}]")));
        }
        let i = (wrap_angle(theta) / TAU * self.n_theta as f64).round() as usize % self.n_theta;
        let j = ((z - lo) / self.z_spacing()).round() as usize;
        Ok(self.vertex(i, j.min(self.n_z - 1)))
    }

    fn check_vertex(&self, v: usize) -> Result<NodeIndex> {
        if v < self.vertex_count() {
            Ok(NodeIndex::new(v))
        } else {
            Err(Error::InvalidParameter(format!(
                "vertex {v} out of range (graph has {})",
                self.vertex_count()
            )))
        }
    }

    /// Shortest-path length and one optimal path from `u` to `v`.
    pub fn graph_distance(&self, u: usize, v: usize) -> Result<(f64, Vec<usize>)> {
        let (src, dst) = (self.check_vertex(u)?, self.check_vertex(v)?);
        astar(&self.graph, src, |n| n == dst, |e| *e.weight(), |_| 0.0)
            .map(|(len, path)| (len, path.into_iter().map(|n| n.index()).collect()))
            .ok_or(Error::Disconnected(u, v))
    }

    /// Shortest-path lengths from `source` to every vertex (∞ when unreachable).
    pub fn distances_from(&self, source: usize) -> Result<Vec<f64>> {
        let src = self.check_vertex(source)?;
        let map = dijkstra(&self.graph, src, None, |e| *e.weight());
        let mut out = vec![f64::INFINITY; self.vertex_count()];
        for (node, d) in map {
            out[node.index()] = d;
        }
        Ok(out)
    }

    /// Maximum `|z − waist_z|` along a path.
    pub fn path_deviation(&self, path: &[usize], waist_z: f64) -> Result<f64> {
        if path.is_empty() {
            return Err(Error::InvalidParameter("path must be nonempty".into()));
        }
        path.iter()
            .map(|&v| {
                self.check_vertex(v)?;
                Ok((self.vertex_param(v).1 - waist_z).abs())
            })
            .try_fold(0.0f64, |acc, d: Result<f64>| Ok(acc.max(d?)))
    }

    /// CSV rows `theta,z,distance` for every vertex, measured from `source`.
    pub fn distance_csv(&self, source: usize) -> Result<String> {
        let dist = self.distances_from(source)?;
        let mut out = String::from("theta,z,distance\n");
        for (v, d) in dist.iter().enumerate() {
            let (t, z) = self.vertex_param(v);
            writeln!(out, "{t},{z},{d}").expect("writing to a String");
        }
        Ok(out)
    }
}

/// Maximum `|z − waist_z|` along a path of chart parameters.
pub fn path_deviation(path: &[(f64, f64)], waist_z: f64) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::InvalidParameter("path must be nonempty".into()));
    }
    Ok(path.iter().map(|(_, z)| (z - waist_z).abs()).fold(0.0, f64::max))
}

/// Grid resolution used as the starting point of [`refine_distance`].
pub const REFINE_START: (usize, usize) = (32, 9);

/// Doubles the grid resolution until successive graph distances between the
/// vertices nearest `u` and `v` agree to `rel_tol`.
pub fn refine_distance(
    chart: &ParametricChart,
    u: (f64, f64),
    v: (f64, f64),
    rel_tol: f64,
) -> Result<f64> {
    if !(rel_tol > 0.0 && rel_tol <= 0.1) {
        return Err(Error::InvalidParameter(format!(
            "rel_tol must lie in (0, 0.1], got {rel_tol}"
        )));
    }
    let (mut n_theta, mut n_z) = REFINE_START;
    let mut previous: Option<f64> = None;
    for _ in 0..=MAX_DOUBLINGS {
        let g = build_graph(chart, n_theta, n_z, DEFAULT_STENCIL_RADIUS)?;
        let a = g.nearest_vertex(u.0, u.1)?;
        let b = g.nearest_vertex(v.0, v.1)?;
        let (d, _) = g.graph_distance(a, b)?;
        log::debug!("refine {n_theta}x{n_z}: {d}");
        if let Some(p) = previous {
            if (d - p).abs() <= rel_tol * d.abs().max(f64::MIN_POSITIVE) {
                return Ok(d);
            }
        }
        previous = Some(d);
        n_theta *= 2;
        n_z = 2 * (n_z - 1) + 1;
    }
    Err(Error::NoConvergence(MAX_DOUBLINGS))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> ParametricChart {
        ParametricChart::Flat { z_min: 0.0, z_max: 1.0 }
    }

    fn warped() -> ParametricChart {
        ParametricChart::Warped {
            z_min: -1.0,
            z_max: 1.0,
            warp: WarpFunction::Quadratic { a: 1.0 },
        }
    }

    #[test]
    fn stencil_counts() {
        assert_eq!(stencil(1).len(), 4);
        // radius 2 adds (±1,2), (±2,1)
        assert_eq!(stencil(2).len(), 8);
        assert_eq!(stencil(3).len(), 16);
    }

    #[test]
    fn flat_grid_construction() {
        let g = build_graph(&flat(), 64, 8, 1).unwrap();
        assert_eq!(g.vertex_count(), 512);
        let last = g.vertex(63, 0);
        let first = g.vertex(0, 0);
        assert!(g
            .edges()
            .any(|(a, b, _)| (a == last && b == first) || (a == first && b == last)));
        assert!(g.edges().all(|(_, _, w)| w > 0.0 && w.is_finite()));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_graph(&flat(), 4, 8, 1).is_err());
        assert!(build_graph(&flat(), 16, 1, 1).is_err());
        assert!(build_graph(&flat(), 16, 4, 4).is_err());
        let bad_warp = ParametricChart::Warped {
            z_min: -1.0,
            z_max: 1.0,
            warp: WarpFunction::Tabulated { z: vec![-1.0, 1.0], f: vec![1.0, -1.0], z0: 0.0 },
        };
        assert!(build_graph(&bad_warp, 16, 4, 1).is_err());
    }

    #[test]
    fn warped_row_weights_grow_with_z() {
        let g = build_graph(&warped(), 32, 9, 1).unwrap();
        let row_weight = |j: usize| {
            let (a, b) = (g.vertex(0, j), g.vertex(1, j));
            g.edges()
                .find(|(x, y, _)| (*x == a && *y == b) || (*x == b && *y == a))
                .unwrap()
                .2
        };
        let mid = 4;
        for k in 1..=4 {
            assert!(row_weight(mid + k) > row_weight(mid + k - 1));
            assert!(row_weight(mid - k) > row_weight(mid - k + 1));
        }
    }

    #[test]
    fn hyperboloid_weights_dominate_flat() {
        let hyp = ParametricChart::Hyperboloid { z_min: -0.5, z_max: 0.5 };
        let flat = ParametricChart::Flat { z_min: -0.5, z_max: 0.5 };
        let gh = build_graph(&hyp, 32, 9, 2).unwrap();
        let gf = build_graph(&flat, 32, 9, 2).unwrap();
        for ((a, b, wh), (c, d, wf)) in gh.edges().zip(gf.edges()) {
            assert_eq!((a, b), (c, d));
            assert!(wh >= wf - 1e-15);
        }
    }

    #[test]
    fn self_distance_is_zero() {
        let g = build_graph(&flat(), 16, 4, 2).unwrap();
        assert_eq!(g.graph_distance(5, 5).unwrap(), (0.0, vec![5]));
        assert!(g.graph_distance(0, 10_000).is_err());
    }

    #[test]
    fn flat_half_turn() {
        let g = build_graph(&flat(), 64, 8, 3).unwrap();
        let (d, _) = g.graph_distance(g.vertex(0, 0), g.vertex(32, 0)).unwrap();
        assert!((d - PI).abs() < 0.01 * PI);
    }

    #[test]
    fn graph_metric_properties() {
        let g = build_graph(&warped(), 24, 7, 2).unwrap();
        let d0 = g.distances_from(0).unwrap();
        let d1 = g.distances_from(50).unwrap();
        assert!((d0[50] - d1[0]).abs() < 1e-12);
        for v in 0..g.vertex_count() {
            assert!(d0[v] <= d0[50] + d1[v] + 1e-12);
        }
    }

    #[test]
    fn larger_stencils_never_lengthen() {
        let (u, v) = ((0usize, 0usize), (17usize, 6usize));
        let mut last = f64::INFINITY;
        for r in 1..=3 {
            let g = build_graph(&warped(), 40, 9, r).unwrap();
            let (d, _) = g.graph_distance(g.vertex(u.0, u.1), g.vertex(v.0, v.1)).unwrap();
            assert!(d <= last + 1e-12);
            last = d;
        }
    }

    #[test]
    fn path_deviation_examples() {
        assert_eq!(path_deviation(&[(0.0, 0.0), (1.0, 0.0)], 0.0).unwrap(), 0.0);
        assert_eq!(path_deviation(&[(0.0, 0.0), (1.0, 0.25), (2.0, 0.0)], 0.0).unwrap(), 0.25);
        assert!(path_deviation(&[], 0.0).is_err());
    }

    #[test]
    fn refine_rejects_loose_tolerance() {
        assert!(matches!(
            refine_distance(&flat(), (0.0, 0.0), (PI, 0.0), 0.2),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn csv_export_has_one_row_per_vertex() {
        let g = build_graph(&flat(), 8, 2, 1).unwrap();
        let csv = g.distance_csv(0).unwrap();
        assert_eq!(csv.lines().count(), 17);
        assert!(csv.starts_with("theta,z,distance\n0,0,0\n"));
    }

    #[test]
    fn chart_json() {
        let c = ParametricChart::from_json(
            r#"{"chart":"warped","z_min":-1,"z_max":1,"warp":{"kind":"quadratic","a":1.0}}"#,
        )
        .unwrap();
        assert_eq!(c, warped());
        assert!(ParametricChart::from_json(r#"{"chart":"hyperboloid","z_min":1,"z_max":0}"#).is_err());
    }
}
