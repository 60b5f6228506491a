use std::f64::consts::PI;

use fracindex::configurations::{verify_waist_minimality, witness_pipeline};
use fracindex::discrete_geodesics::{build_graph, refine_distance, ParametricChart};
use fracindex::{SpaceDescriptor, WarpFunction};

fn off_center_warp() -> WarpFunction {
    WarpFunction::Tabulated {
        z: vec![-1.0, -0.2, 0.3, 0.8, 2.0],
        f: vec![3.0, 1.6, 1.2, 1.5, 4.0],
        z0: 0.3,
    }
}

#[test]
fn tabulated_waist_is_minimal() {
    let warp = off_center_warp();
    let check = verify_waist_minimality(&warp).unwrap();
    assert!(check.verified, "{check:?}");
    let half = PI * 1.2f64.sqrt();
    assert!((check.waist_half_length - half).abs() < 1e-12);
}

#[test]
fn tabulated_waist_distance_refines() {
    let warp = off_center_warp();
    let chart = ParametricChart::Warped { z_min: -0.7, z_max: 1.3, warp };
    let d = refine_distance(&chart, (0.0, 0.3), (PI, 0.3), 0.005).unwrap();
    let half = PI * 1.2f64.sqrt();
    assert!((d - half).abs() <= 0.01 * half, "{d} vs {half}");
}

#[test]
fn tabulated_warp_has_a_witness() {
    let cert = witness_pipeline(&SpaceDescriptor::warped(off_center_warp()), 0.5).unwrap();
    assert!(cert.certified);
    assert_eq!(cert.span_dims, vec![1, 1, 1, 1]);
    assert!(cert.forms.iter().zip(cert.forms_upper.as_ref().unwrap()).all(|(lo, hi)| lo <= hi));
}

#[test]
fn hyperboloid_path_stays_on_waist() {
    let chart = ParametricChart::Hyperboloid { z_min: -1.0, z_max: 1.0 };
    let g = build_graph(&chart, 96, 25, 3).unwrap();
    let (d, path) = g.graph_distance(g.nearest_vertex(0.0, 0.0).unwrap(), g.nearest_vertex(PI, 0.0).unwrap()).unwrap();
    assert!((d - PI).abs() <= 0.015 * PI);
    assert!(g.path_deviation(&path, 0.0).unwrap() <= g.z_spacing());
}
