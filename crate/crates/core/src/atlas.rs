//! Field comparison across vessels on a common `(τ, θ, ρ_n)` grid.

use std::f64::consts::TAU;
use std::num::NonZeroUsize;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::Pca;
use crate::error::{Result, VcsError};
use crate::model::VesselModel;

/// Neighbours averaged by the inverse-distance interpolation.
pub const IDW_NEIGHBOURS: usize = 8;
/// Targets farther than this many median field spacings from every field point are gaps.
pub const GAP_FACTOR: f64 = 4.0;
/// Targets closer than this to a field point copy its value.
pub const COINCIDENCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridNode {
    pub tau: f64,
    pub theta: f64,
    pub rho_n: f64,
}

/// Regular lattice over `[0,1] × [0,2π) × [0,1]`.
///
/// Nodes run `τ`-major; within one `τ` the single centerline node comes first
/// (when `n_rho ≥ 2`), then each `ρ_n > 0` ring in increasing order, each ring
/// in increasing `θ`. With `n_rho = 1` only the wall ring is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGrid {
    pub n_tau: usize,
    pub n_theta: usize,
    pub n_rho: usize,
    nodes: Vec<GridNode>,
    wall: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_tau: usize,
    pub n_theta: usize,
    pub n_rho: usize,
}

impl MeasurementGrid {
    pub fn spec(&self) -> GridSpec {
        GridSpec { n_tau: self.n_tau, n_theta: self.n_theta, n_rho: self.n_rho }
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Indices of the `ρ_n = 1` nodes, in grid order.
    pub fn wall_subset(&self) -> &[usize] {
        &self.wall
    }

    pub fn rho_levels(&self) -> Vec<f64> {
        if self.n_rho == 1 {
            vec![1.0]
        } else {
            (0..self.n_rho).map(|k| k as f64 / (self.n_rho - 1) as f64).collect()
        }
    }
}

pub fn build_grid(n_tau: usize, n_theta: usize, n_rho: usize) -> Result<MeasurementGrid> {
    if n_tau < 1 || n_theta < 3 || n_rho < 1 {
        return Err(VcsError::Parameter(format!(
            "grid needs n_tau >= 1, n_theta >= 3 and n_rho >= 1, got {n_tau}x{n_theta}x{n_rho}"
        )));
    }
    let mut grid = MeasurementGrid { n_tau, n_theta, n_rho, nodes: Vec::new(), wall: Vec::new() };
    let levels = grid.rho_levels();
    for i in 0..n_tau {
        let tau = if n_tau == 1 { 0.5 } else { i as f64 / (n_tau - 1) as f64 };
        for &rho_n in &levels {
            if rho_n == 0.0 {
                grid.nodes.push(GridNode { tau, theta: 0.0, rho_n });
                continue;
            }
            for j in 0..n_theta {
                if rho_n == 1.0 {
                    grid.wall.push(grid.nodes.len());
                }
                grid.nodes.push(GridNode { tau, theta: TAU * j as f64 / n_theta as f64, rho_n });
            }
        }
    }
    Ok(grid)
}

impl GridSpec {
    pub fn build(&self) -> Result<MeasurementGrid> {
        build_grid(self.n_tau, self.n_theta, self.n_rho)
    }
}

/// Which grid nodes a field lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldSupport {
    #[default]
    Volume,
    /// Only the `ρ_n = 1` layer, for wall quantities such as shear stress.
    Wall,
}

impl FieldSupport {
    pub fn nodes<'a>(&self, grid: &'a MeasurementGrid) -> Vec<&'a GridNode> {
        match self {
            FieldSupport::Volume => grid.nodes.iter().collect(),
            FieldSupport::Wall => grid.wall.iter().map(|&i| &grid.nodes[i]).collect(),
        }
    }
}

/// Cartesian positions of the grid nodes inside `model`.
pub fn materialize(grid: &MeasurementGrid, model: &VesselModel) -> Result<Vec<Point3<f64>>> {
    materialize_nodes(&grid.nodes.iter().collect::<Vec<_>>(), model)
}

pub fn materialize_nodes(nodes: &[&GridNode], model: &VesselModel) -> Result<Vec<Point3<f64>>> {
    let ctx = model.context();
    nodes
        .par_iter()
        .map(|n| {
            if n.rho_n == 0.0 {
                return ctx.point_at(n.tau, 0.0, 0.0);
            }
            let rw = model.radius(n.tau, n.theta)?;
            ctx.point_at(n.tau, n.theta, n.rho_n * rw)
        })
        .collect()
}

/// Values at arbitrary points, as produced by an external solver.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteredField {
    pub name: String,
    pub units: String,
    pub components: usize,
    pub points: Vec<Point3<f64>>,
    /// `points.len() × components`, point-major.
    pub values: Vec<f64>,
}

impl ScatteredField {
    pub fn new(name: impl Into<String>, units: impl Into<String>, components: usize, points: Vec<Point3<f64>>, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(VcsError::Input("field needs at least one component".into()));
        }
        if points.is_empty() {
            return Err(VcsError::Input("empty field".into()));
        }
        if values.len() != points.len() * components {
            return Err(VcsError::Input(format!(
                "{} points with {components} components need {} values, got {}",
                points.len(),
                points.len() * components,
                values.len()
            )));
        }
        if values.iter().chain(points.iter().flat_map(|p| p.iter())).any(|v| !v.is_finite()) {
            return Err(VcsError::Input("non-finite field entry".into()));
        }
        Ok(Self { name: name.into(), units: units.into(), components, points, values })
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.components..(i + 1) * self.components]
    }

    /// Euclidean norm of each point's components, as a scalar field.
    pub fn magnitude(&self) -> ScatteredField {
        let values = (0..self.points.len()).map(|i| self.value(i).iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        ScatteredField {
            name: format!("{}_magnitude", self.name),
            units: self.units.clone(),
            components: 1,
            points: self.points.clone(),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub values: Vec<f64>,
    /// Targets beyond the gap cutoff, filled from their nearest field point.
    pub gaps: usize,
    pub cutoff: f64,
}

/// Inverse-distance-squared average of the nearest field points at every target.
pub fn resample(field: &ScatteredField, targets: &[Point3<f64>]) -> Result<Resampled> {
    if field.points.is_empty() {
        return Err(VcsError::Input("empty field".into()));
    }
    let coords: Vec<[f64; 3]> = field.points.iter().map(|p| [p.x, p.y, p.z]).collect();
    let tree: ImmutableKdTree<f64, 3> = ImmutableKdTree::new_from_slice(&coords);
    let cutoff = GAP_FACTOR * median_spacing(&tree, &coords);
    let k = NonZeroUsize::new(IDW_NEIGHBOURS.min(coords.len())).expect("non-empty field");
    let nc = field.components;
    let per_target: Vec<(Vec<f64>, bool)> = targets
        .par_iter()
        .map(|t| {
            let q = [t.x, t.y, t.z];
            let nn = tree.nearest_n::<SquaredEuclidean>(&q, k);
            let nearest = nn[0].item as usize;
            let d0 = nn[0].distance.sqrt();
            if d0 < COINCIDENCE {
                return (field.value(nearest).to_vec(), false);
            }
            if d0 > cutoff {
                return (field.value(nearest).to_vec(), true);
            }
            let mut acc = vec![0.0; nc];
            let mut wsum = 0.0;
            for n in &nn {
                let w = 1.0 / n.distance;
                wsum += w;
                for (a, v) in acc.iter_mut().zip(field.value(n.item as usize)) {
                    *a += w * v;
                }
            }
            acc.iter_mut().for_each(|a| *a /= wsum);
            (acc, false)
        })
        .collect();
    let gaps = per_target.iter().filter(|(_, g)| *g).count();
    let values = per_target.into_iter().flat_map(|(v, _)| v).collect();
    Ok(Resampled { values, gaps, cutoff })
}

/// Median distance from each field point to its nearest distinct neighbour.
fn median_spacing(tree: &ImmutableKdTree<f64, 3>, coords: &[[f64; 3]]) -> f64 {
    if coords.len() < 2 {
        return f64::INFINITY;
    }
    let mut d: Vec<f64> = coords
        .par_iter()
        .filter_map(|q| {
            tree.nearest_n::<SquaredEuclidean>(q, NonZeroUsize::MIN.saturating_add(1)).iter().map(|n| n.distance).find(|&d| d > 0.0).map(f64::sqrt)
        })
        .collect();
    if d.is_empty() {
        return f64::INFINITY;
    }
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Field values on a measurement grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    pub name: String,
    pub units: String,
    pub components: usize,
    pub grid: GridSpec,
    #[serde(default)]
    pub support: FieldSupport,
    /// Node-major values over the supported nodes.
    pub values: Vec<f64>,
    pub gaps: usize,
}

impl SampledField {
    pub fn node_count(&self) -> usize {
        self.values.len() / self.components
    }
}

/// Resamples `field` onto `grid` materialized in `model`.
pub fn sample_field(
    field: &ScatteredField,
    grid: &MeasurementGrid,
    model: &VesselModel,
    support: FieldSupport,
) -> Result<SampledField> {
    let nodes = support.nodes(grid);
    let targets = materialize_nodes(&nodes, model)?;
    let r = resample(field, &targets)?;
    if r.gaps > 0 {
        log::info!("{} of {} grid nodes lie beyond {:.4} mm of the field and took nearest values", r.gaps, targets.len(), r.cutoff);
    }
    Ok(SampledField {
        name: field.name.clone(),
        units: field.units.clone(),
        components: field.components,
        grid: grid.spec(),
        support,
        values: r.values,
        gaps: r.gaps,
    })
}

/// Mean and principal modes of one field across a cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldAtlas {
    pub name: String,
    pub units: String,
    pub components: usize,
    pub grid: GridSpec,
    pub support: FieldSupport,
    pub pca: Pca,
}

impl FieldAtlas {
    pub fn mean(&self) -> &[f64] {
        &self.pca.mean
    }

    pub fn mode(&self, i: usize) -> Option<&[f64]> {
        self.pca.modes.get(i).map(|m| m.as_slice())
    }
}

pub fn field_pca(fields: &[SampledField]) -> Result<FieldAtlas> {
    let first = fields.first().ok_or(VcsError::Cardinality { needed: 2, got: 0 })?;
    for f in fields {
        if f.grid != first.grid || f.components != first.components || f.support != first.support || f.values.len() != first.values.len() {
            return Err(VcsError::Layout(format!(
                "field '{}' on grid {:?} ({} components) does not match '{}' on grid {:?} ({} components)",
                f.name, f.grid, f.components, first.name, first.grid, first.components
            )));
        }
    }
    let data: Vec<Vec<f64>> = fields.iter().map(|f| f.values.clone()).collect();
    Ok(FieldAtlas {
        name: first.name.clone(),
        units: first.units.clone(),
        components: first.components,
        grid: first.grid,
        support: first.support,
        pca: Pca::fit(&data)?,
    })
}

/// Nodes whose value magnitude reaches `fraction` of the largest magnitude.
pub fn threshold_region(values: &[f64], components: usize, fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(VcsError::Parameter(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    if components == 0 || !values.len().is_multiple_of(components) {
        return Err(VcsError::Layout(format!("{} values do not split into {components} components", values.len())));
    }
    let mags: Vec<f64> = values.chunks_exact(components).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let max = mags.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(Vec::new());
    }
    Ok(mags.iter().enumerate().filter(|(_, &m)| m >= fraction * max).map(|(i, _)| i).collect())
}
