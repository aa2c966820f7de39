//! Samples a flow field of several vessels on a common grid and builds a field atlas.

use nalgebra::Point3;
use vessel_coords::atlas::{build_grid, field_pca, materialize, sample_field, threshold_region, FieldSupport, ScatteredField};
use vessel_coords::coords::VcsContext;
use vessel_coords::model::{fit_model, ModelDims};
use vessel_coords::splines::fit_curve;
use vessel_coords::synthetic::{CenterlineShape, SyntheticSpec};

const LENGTH: f64 = 60.0;

fn main() -> vessel_coords::Result<()> {
    let grid = build_grid(24, 16, 6)?;
    let mut sampled = Vec::new();
    for (i, radius) in [5.0, 5.5, 6.0, 6.5, 7.0].into_iter().enumerate() {
        let spec = SyntheticSpec::tube(CenterlineShape::Line { length: LENGTH }, radius).with_density(80, 32);
        let (mesh, oracle) = spec.generate()?;
        let curve = fit_curve(&oracle.centerline_samples(201), 5)?;
        let model = fit_model(&mesh, &VcsContext::new(&curve, &oracle.v1_0())?, ModelDims::new(5, 9, 9))?;

        // Poiseuille flow on a 0.5 mm solver lattice, peak speed growing along the cohort
        let peak = 0.5 + 0.1 * i as f64;
        let h = 0.5;
        let n = (radius / h).ceil() as i64;
        let mut points = Vec::new();
        let mut values = Vec::new();
        for k in 0..=(LENGTH / h) as i64 {
            for a in -n..=n {
                for b in -n..=n {
                    let p = Point3::new(a as f64 * h, b as f64 * h, k as f64 * h);
                    let r2 = (p.x * p.x + p.y * p.y) / (radius * radius);
                    if r2 <= 1.0 {
                        points.push(p);
                        values.extend([0.0, 0.0, peak * (1.0 - r2)]);
                    }
                }
            }
        }
        let field = ScatteredField::new("velocity", "m/s", 3, points, values)?;
        let s = sample_field(&field.magnitude(), &grid, &model, FieldSupport::Volume)?;
        println!("vessel {i}: radius {radius} mm, {} field points, {} grid nodes, {} gaps", field.points.len(), s.node_count(), s.gaps);
        sampled.push((s, model));
    }

    let fields: Vec<_> = sampled.iter().map(|(s, _)| s.clone()).collect();
    let atlas = field_pca(&fields)?;
    let total = atlas.pca.total_variance();
    println!("atlas of '{}' ({}): {} modes", atlas.name, atlas.units, atlas.pca.modes.len());
    for (i, v) in atlas.pca.variances.iter().enumerate() {
        println!("  mode {}: {:.2}% of variance", i + 1, 100.0 * v / total);
    }

    let core = threshold_region(atlas.mean(), 1, 0.9)?;
    let nodes = grid.nodes();
    let max_rho = core.iter().map(|&i| nodes[i].rho_n).fold(0.0, f64::max);
    println!("{} of {} nodes carry at least 90% of the peak mean speed, all within rho_n <= {max_rho:.2}", core.len(), nodes.len());

    // the mean field placed in the first vessel
    let positions = materialize(&grid, &sampled[0].1)?;
    let fastest = atlas.mean().iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
    println!("fastest mean node at {:?}", positions[fastest].coords.as_slice());
    Ok(())
}
