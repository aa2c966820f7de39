//! Residuals of the wall fit as the number of axial knots grows.

use vessel_coords::centerline::extract_centerline;
use vessel_coords::model::{context_for_mesh, fit_model, residuals, ModelDims};
use vessel_coords::synthetic::SyntheticSpec;

fn main() -> vessel_coords::Result<()> {
    let (mesh, _) = SyntheticSpec::aorta().with_density(250, 100).generate()?;
    let cl = extract_centerline(&mesh, 0.5, None, 9)?;
    let ctx = context_for_mesh(&cl.curve, &mesh)?;
    println!("{:>3} {:>3} {:>10} {:>10} {:>10}", "K", "R", "mean", "p75", "max");
    for r in [9, 15] {
        for k in (5..=19).step_by(2) {
            let model = fit_model(&mesh, &ctx, ModelDims::new(9, k, r))?;
            let s = residuals(&mesh, &model).summary;
            println!("{k:>3} {r:>3} {:>10.4} {:>10.4} {:>10.4}", s.mean, s.p75, s.max);
        }
    }
    Ok(())
}
