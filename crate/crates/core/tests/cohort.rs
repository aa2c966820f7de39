use std::f64::consts::{PI, TAU};

use nalgebra::{Point3, Rotation3, Unit, Vector3};
use proptest::prelude::*;
use vessel_coords::cohort::{
    coregister, correspondence_points, mode_decomposition, shape_pca, shape_pca_models, synthesize, CoregisterOptions,
    Pca, RigidTransform,
};
use vessel_coords::coords::VcsContext;
use vessel_coords::model::{fit_model, FeatureVector, ModelDims, ModelMetadata, VesselModel};
use vessel_coords::splines::fit_curve;
use vessel_coords::synthetic::{CenterlineShape, RadiusTerm, SyntheticSpec};
use vessel_coords::VcsError;

/// Base model, sample vectors and the two planted directions.
type Planted = (VesselModel, Vec<FeatureVector>, Vec<f64>, Vec<f64>);

const AMPLITUDES_A: [f64; 8] = [3.0, -3.0, 2.0, -2.0, 1.0, -1.0, 0.0, 0.0];
const DIMS: ModelDims = ModelDims { l: 7, k: 9, r: 9 };

fn base_model() -> VesselModel {
    let spec = SyntheticSpec::new(
        CenterlineShape::Arc { radius: 40.0, angle: 1.2 },
        vec![
            RadiusTerm::Constant { radius: 8.0 },
            RadiusTerm::Sinusoidal { amplitude: 1.5, m_tau: 1.0, m_theta: 1.0 },
        ],
    )
    .with_density(80, 32);
    let (mesh, oracle) = spec.generate().unwrap();
    let curve = fit_curve(&oracle.centerline_samples(801), DIMS.l).unwrap();
    let t0 = curve.tangent(0.0);
    let ctx = VcsContext::new(&curve, &(oracle.v1_0() - t0 * t0.dot(&oracle.v1_0())).normalize()).unwrap();
    fit_model(&mesh, &ctx, DIMS).unwrap()
}

fn unit(n: usize, entries: &[(usize, f64)]) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &(i, x) in entries {
        v[i] = x;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// Wall-only planted modes, so the centerline and frame stay fixed.
fn planted() -> Planted {
    let base = base_model();
    let fv = base.to_feature_vector();
    let n = fv.values.len();
    let off = 3 * DIMS.centerline_coefficients();
    let ua = unit(n, &(off..n).map(|i| (i, 1.0)).collect::<Vec<_>>());
    let ub = unit(n, &(off..n).map(|i| (i, if (i - off) / 8 < 5 { 1.0 } else { -1.0 })).collect::<Vec<_>>());
    let ub: Vec<f64> = {
        let d: f64 = ua.iter().zip(&ub).map(|(a, b)| a * b).sum();
        let w: Vec<f64> = ub.iter().zip(&ua).map(|(b, a)| b - d * a).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        w.iter().map(|x| x / norm).collect()
    };
    // zero mean and uncorrelated, so the sample modes are exactly ua and ub
    let a = AMPLITUDES_A;
    let b = [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
    let vectors = a
        .iter()
        .zip(&b)
        .map(|(x, y)| FeatureVector { values: (0..n).map(|i| fv.values[i] + x * ua[i] + y * ub[i]).collect(), dims: DIMS })
        .collect();
    (base, vectors, ua, ub)
}

#[test]
fn planted_modes_are_recovered_in_order() {
    let (base, vectors, ua, ub) = planted();
    let cohort = shape_pca(&vectors, base.v1_0()).unwrap();
    assert_eq!(cohort.n_modes(), 2);
    assert!(cosine(cohort.pca.modes[0].as_slice(), &ua).abs() > 1.0 - 1e-9);
    assert!(cosine(cohort.pca.modes[1].as_slice(), &ub).abs() > 1.0 - 1e-9);
    assert!(cohort.pca.variances[0] >= cohort.pca.variances[1]);
    let var = AMPLITUDES_A.iter().map(|x| x * x).sum::<f64>() / 7.0;
    assert!((cohort.pca.variances[0] - var).abs() < 1e-9 * var, "{} vs {var}", cohort.pca.variances[0]);
}

#[test]
fn pca_invariants() {
    let (base, vectors, _, _) = planted();
    let cohort = shape_pca(&vectors, base.v1_0()).unwrap();
    let pca = &cohort.pca;
    for (i, u) in pca.modes.iter().enumerate() {
        for (j, w) in pca.modes.iter().enumerate() {
            let d: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
            assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
        }
        let big = u.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap();
        assert!(big > 0.0, "largest entry of each mode is positive");
    }
    assert!(pca.variances.windows(2).all(|w| w[0] >= w[1]));
    for v in &vectors {
        let alphas = cohort.project(v).unwrap();
        let back = pca.reconstruct(&alphas).unwrap();
        for (x, y) in back.iter().zip(&v.values) {
            assert!((x - y).abs() < 1e-8);
        }
    }
    let mean = synthesize(&cohort, &[]).unwrap();
    assert!(mean.warning.is_none());
    assert_eq!(mean.model.to_feature_vector().values, pca.mean);
}

#[test]
fn at_most_m_minus_one_modes() {
    let data: Vec<Vec<f64>> = (0..4).map(|i| (0..10).map(|j| ((i * 7 + j * 3) % 11) as f64).collect()).collect();
    let pca = Pca::fit(&data).unwrap();
    assert!(pca.modes.len() <= 3);
    let total: f64 = {
        let mean: Vec<f64> = (0..10).map(|j| data.iter().map(|v| v[j]).sum::<f64>() / 4.0).collect();
        data.iter().map(|v| v.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sum::<f64>() / 3.0
    };
    assert!((pca.total_variance() - total).abs() < 1e-9 * total);
    assert!(matches!(Pca::fit(&data[..1]), Err(VcsError::Cardinality { .. })));
}

#[test]
fn extreme_coefficients_warn() {
    let (base, vectors, _, _) = planted();
    let cohort = shape_pca(&vectors, base.v1_0()).unwrap();
    let s = synthesize(&cohort, &[-100.0 * cohort.std_dev(0)]).unwrap();
    assert!(s.warning.is_some());
    assert!(synthesize(&cohort, &[0.0, 0.0, 0.0]).is_err());
}

#[test]
fn wall_mode_moves_no_centerline() {
    let (base, vectors, ua, _) = planted();
    let cohort = shape_pca(&vectors, base.v1_0()).unwrap();
    let d = mode_decomposition(&cohort, 0, 2.0, 11, 8).unwrap();
    assert!(d.displacement.iter().all(|&x| x < 1e-9));
    // ua is uniform over the wall coefficients, which sum to a constant radius change
    let off = 3 * DIMS.centerline_coefficients();
    let shift = 2.0 * cohort.std_dev(0) * ua[off] * cosine(&cohort.pca.modes[0], &ua).signum();
    for r in &d.radius_difference {
        assert!((r - shift).abs() < 1e-9, "{r} vs {shift}");
    }
    assert!(matches!(mode_decomposition(&cohort, 5, 1.0, 11, 8), Err(VcsError::Parameter(_))));
}

#[test]
fn coregistration_undoes_rigid_poses() {
    let base = base_model();
    let poses = [
        RigidTransform::identity(),
        RigidTransform::new(*Rotation3::from_axis_angle(&Vector3::z_axis(), 0.7).matrix(), Vector3::new(10.0, -4.0, 3.0)),
        RigidTransform::new(
            *Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(1.0, 1.0, 0.0)), -1.2).matrix(),
            Vector3::new(-20.0, 5.0, 40.0),
        ),
    ];
    let models: Vec<_> = poses.iter().map(|t| base.transformed(&t.rotation, &t.translation).unwrap()).collect();
    let opts = CoregisterOptions { n_tau: 24, n_theta: 12, ..Default::default() };
    let reg = coregister(&models, &opts).unwrap();
    assert!(reg.converged);
    assert!(reg.objective.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{:?}", reg.objective);
    assert!(*reg.objective.last().unwrap() < 1e-12);
    let reference = correspondence_points(&reg.models[0], 24, 12).unwrap();
    for (m, t) in reg.models.iter().zip(&reg.transforms) {
        assert!(t.orthogonality_error() < 1e-12);
        let pts = correspondence_points(m, 24, 12).unwrap();
        for (p, q) in pts.iter().zip(&reference) {
            assert!((p - q).norm() < 1e-8);
        }
    }
    let cohort = shape_pca_models(&reg.models).unwrap();
    assert!((cohort.v1_0.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn cohort_size_and_layout_errors() {
    let base = base_model();
    assert!(matches!(coregister(std::slice::from_ref(&base), &CoregisterOptions::default()), Err(VcsError::Cardinality { .. })));
    assert!(matches!(shape_pca_models(std::slice::from_ref(&base)), Err(VcsError::Cardinality { .. })));
    let other = VesselModel::from_feature_vector(
        &FeatureVector { values: vec![0.0; ModelDims::new(5, 5, 5).feature_len()], dims: ModelDims::new(5, 5, 5) },
        &Vector3::x(),
        ModelMetadata::named("flat"),
    );
    // all-zero control points have no tangent, so the frame is rejected before layout
    assert!(other.is_err());
    let fv = base.to_feature_vector();
    let mut odd = fv.clone();
    odd.dims = ModelDims::new(7, 9, 7);
    assert!(matches!(shape_pca(&[fv, odd], base.v1_0()), Err(VcsError::Layout(_))));
}

fn random_rotation() -> impl Strategy<Value = Rotation3<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..PI)
        .prop_filter("axis", |(x, y, z, _)| x * x + y * y + z * z > 0.01)
        .prop_map(|(x, y, z, a)| Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(x, y, z)), a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kabsch_recovers_rigid_motion(
        rot in random_rotation(),
        shift in prop::array::uniform3(-100.0..100.0f64),
        pts in prop::collection::vec(prop::array::uniform3(-10.0..10.0f64), 4..40),
    ) {
        let src: Vec<Point3<f64>> = pts.iter().map(|p| Point3::from(*p)).collect();
        // keep the cloud away from collinear
        let spread = src.iter().map(|p| p.coords.cross(&(src[1] - src[0])).norm()).fold(0.0, f64::max);
        prop_assume!(spread > 1.0);
        let t = Vector3::from(shift);
        let dst: Vec<_> = src.iter().map(|p| rot * p + t).collect();
        let k = RigidTransform::kabsch(&src, &dst).unwrap();
        prop_assert!((k.rotation - rot.matrix()).abs().max() < 1e-9);
        prop_assert!((k.translation - t).norm() < 1e-7);
        let back = k.inverse().compose(&k);
        prop_assert!((back.rotation - nalgebra::Matrix3::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn synthesized_models_stay_in_the_span(a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let (base, vectors, _, _) = planted_cached();
        let cohort = shape_pca(&vectors, base.v1_0()).unwrap();
        let alphas = [a * cohort.std_dev(0), b * cohort.std_dev(1)];
        let s = synthesize(&cohort, &alphas).unwrap();
        let back = cohort.project(&s.model.to_feature_vector()).unwrap();
        prop_assert!((back[0] - alphas[0]).abs() < 1e-9 && (back[1] - alphas[1]).abs() < 1e-9);
        let r = s.model.radius(0.5, TAU / 3.0).unwrap();
        prop_assert!(r > 0.0);
    }
}

fn planted_cached() -> Planted {
    static P: std::sync::OnceLock<Planted> = std::sync::OnceLock::new();
    P.get_or_init(planted).clone()
}
