//! Converts points near a curved vessel to `(τ, θ, ρ)` and back.

use std::f64::consts::PI;

use nalgebra::Point3;
use vessel_coords::coords::{VcsContext, VesselCoordinates};
use vessel_coords::splines::fit_curve;
use vessel_coords::synthetic::{CenterlineShape, SyntheticSpec};

fn main() -> vessel_coords::Result<()> {
    let spec = SyntheticSpec::tube(CenterlineShape::Arc { radius: 30.0, angle: 2.0 }, 8.0);
    let (_, oracle) = spec.generate()?;
    let curve = fit_curve(&oracle.centerline_samples(1001), 40)?;
    let t0 = curve.tangent(0.0);
    let v1 = (oracle.v1_0() - t0 * t0.dot(&oracle.v1_0())).normalize();
    let ctx = VcsContext::new(&curve, &v1)?;

    let queries = [
        ("wall point", spec.point(0.4, 1.0, 8.0)),
        ("inside the lumen", spec.point(0.7, PI, 3.0)),
        ("on the centerline", curve.point(0.5)?),
        ("before the start", Point3::new(0.0, 0.0, -5.0)),
        ("past the bend center", Point3::new(40.0, 0.0, 10.0)),
    ];
    for (label, x) in queries {
        let c = ctx.to_vcs(&x)?;
        let back = ctx.from_vcs(&c)?;
        println!(
            "{label:<22} tau {:.6} theta {:.6} rho {:8.4}  valid {:<5} boundary {:<5} degenerate {:<5} back-conversion {:.2e}",
            c.tau,
            c.theta,
            c.rho,
            c.valid,
            c.boundary,
            c.degenerate,
            (back - x).norm()
        );
    }

    let x = ctx.from_vcs(&VesselCoordinates::new(0.25, PI / 2.0, 5.0))?;
    let exact = oracle.coords_of(&x)?;
    println!("(0.25, pi/2, 5) -> {:?}; closed form gives tau {:.8} rho {:.8}", x.coords.as_slice(), exact.tau, exact.rho);
    Ok(())
}
