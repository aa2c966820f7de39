//! Uniform cubic B-splines: basis functions, space curves, and the
//! theta-periodic radius surface, with least-squares fitting for both.

mod basis;
mod curve;
mod knots;
mod lsq;
mod surface;

pub use basis::{eval_basis, SpanBasis};
pub use curve::{chord_length_params, fit_curve, fit_curve_with_params, SplineCurve3};
pub use knots::{KnotKind, KnotVector, DEGREE};
pub use surface::{fit_surface, BivariateSpline, SurfaceDerivatives, SurfaceSample};
