//! Fits a vessel model to a mesh, reports residuals and saves the model.

use vessel_coords::centerline::extract_centerline;
use vessel_coords::io::{read_model, write_model};
use vessel_coords::model::{context_for_mesh, fit_model, residuals_with_nearest, ModelDims, ModelMetadata};
use vessel_coords::synthetic::SyntheticSpec;

fn main() -> vessel_coords::Result<()> {
    let (mesh, _) = SyntheticSpec::aorta().with_density(250, 100).with_noise(0.1, 4).generate()?;
    let dims = ModelDims::DEFAULT;
    let cl = extract_centerline(&mesh, 0.5, None, dims.l)?;
    let ctx = context_for_mesh(&cl.curve, &mesh)?;
    let mut model = fit_model(&mesh, &ctx, dims)?;
    model.metadata = ModelMetadata::named("patient-001");

    let rep = residuals_with_nearest(&mesh, &model, 400, 200)?;
    let s = &rep.summary;
    println!("L={} K={} R={}: {} numbers per model", dims.l, dims.k, dims.r, dims.feature_len());
    println!("residual mean {:.4} mm, p75 {:.4} mm, max {:.4} mm", s.mean, s.p75, s.max);
    println!("{} vertices beyond the end planes (max {:.4} mm with them)", rep.clamped_count, rep.summary_all.max);
    if let Some(n) = &rep.nearest_surface {
        println!("distance to the fitted surface: mean {:.4} mm, max {:.4} mm", n.mean, n.max);
    }
    let (r, tau, theta) = model.min_radius();
    println!("smallest wall radius {r:.3} mm at tau {tau:.3}, theta {theta:.3}");

    let path = std::env::temp_dir().join("vessel-coords-examples/patient-001.json");
    write_model(&model, &path)?;
    assert_eq!(read_model(&path)?, model);
    println!("wrote {}", path.display());
    Ok(())
}
