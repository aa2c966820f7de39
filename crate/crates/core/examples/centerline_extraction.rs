//! Extracts the centerline of a synthetic aorta and compares it with the analytic one.

use vessel_coords::centerline::extract_centerline;
use vessel_coords::synthetic::SyntheticSpec;

fn main() -> vessel_coords::Result<()> {
    let spec = SyntheticSpec::aorta().with_density(200, 64);
    let (mesh, oracle) = spec.generate()?;
    let r = extract_centerline(&mesh, 0.5, None, 9)?;
    let vol = &r.volume;
    println!("grid {:?}, {} lumen voxels, max clearance {:.3} mm", vol.dims, vol.inside_count(), vol.max_distance());
    println!("path of {} voxels, min clearance {:.3} mm", r.path.len(), r.path.min_clearance());
    println!("seeds {:?} -> {:?}", r.seeds[0].coords.as_slice(), r.seeds[1].coords.as_slice());

    let truth = oracle.centerline_samples(2001);
    let mut worst: f64 = 0.0;
    for i in 0..=200 {
        let p = r.curve.point(i as f64 / 200.0)?;
        let d = truth.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    println!(
        "fitted curve: {} knots, length {:.2} mm (analytic {:.2}), farthest from the true axis {:.3} mm",
        r.curve.knot_count(),
        r.curve.length(2000),
        spec.centerline_length(),
        worst
    );
    Ok(())
}
