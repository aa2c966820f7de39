//! Builds a shape model from a small synthetic cohort and walks along its first mode.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};
use vessel_coords::centerline::extract_centerline;
use vessel_coords::cohort::{coregister, mode_decomposition, shape_pca_models, synthesize, CoregisterOptions};
use vessel_coords::model::{context_for_mesh, fit_model, ModelDims};
use vessel_coords::synthetic::{CenterlineShape, RadiusTerm, SyntheticSpec};

fn main() -> vessel_coords::Result<()> {
    let dims = ModelDims::new(9, 11, 9);
    let mut models = Vec::new();
    for i in 0..6 {
        let s = i as f64;
        let spec = SyntheticSpec::new(
            CenterlineShape::AortaLike { arch_radius: 26.0 + 2.0 * s, leg_length: 50.0 },
            vec![
                RadiusTerm::Constant { radius: 9.0 + 0.4 * s },
                RadiusTerm::Sinusoidal { amplitude: 1.0 + 0.2 * (s - 2.5), m_tau: 1.0, m_theta: 1.0 },
            ],
        )
        .with_density(180, 48);
        let (mesh, _) = spec.generate()?;
        // each subject is scanned in its own pose
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), 0.3 * s);
        let mesh = mesh.map_vertices(|p| rot * p + Vector3::new(5.0 * s, -2.0 * s, s));
        let cl = extract_centerline(&mesh, 0.5, None, dims.l)?;
        models.push(fit_model(&mesh, &context_for_mesh(&cl.curve, &mesh)?, dims)?);
    }

    let reg = coregister(&models, &CoregisterOptions::default())?;
    println!("coregistration: {} iterations, converged {}, objective {:.3} -> {:.3}", reg.iterations, reg.converged, reg.objective[0], reg.objective.last().unwrap());

    let cohort = shape_pca_models(&reg.models)?;
    let total = cohort.pca.total_variance();
    for (i, v) in cohort.pca.variances.iter().enumerate() {
        println!("mode {}: sd {:.3}, {:.1}% of variance", i + 1, v.sqrt(), 100.0 * v / total);
    }

    let d = mode_decomposition(&cohort, 0, 2.0, 11, 8)?;
    let max_disp = d.displacement.iter().copied().fold(0.0, f64::max);
    let max_dr = d.radius_difference.iter().map(|r| r.abs()).fold(0.0, f64::max);
    println!("mode 1 at +2 sd: centerline moves up to {max_disp:.3} mm, radius changes up to {max_dr:.3} mm");

    for a in [-2.0, 0.0, 2.0] {
        let s = synthesize(&cohort, &[a * cohort.std_dev(0)])?;
        println!("alpha_1 = {a:+} sd: radius at (0.5, pi) {:.3} mm, warning {:?}", s.model.radius(0.5, PI)?, s.warning);
    }
    Ok(())
}
