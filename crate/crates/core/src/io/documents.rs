use std::path::Path;

use nalgebra::{Point3, Vector3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::atlas::{FieldAtlas, FieldSupport, GridSpec};
use crate::cohort::{CohortModel, Pca};
use crate::error::{Result, VcsError};
use crate::model::{ModelDims, ModelMetadata, VesselModel};
use crate::splines::{BivariateSpline, SplineCurve3, DEGREE};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// How to treat fields a reader does not know.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBlock {
    pub degree: usize,
    pub knots: usize,
    pub control_points: Vec<[f64; 3]>,
}

impl CurveBlock {
    pub fn from_curve(c: &SplineCurve3) -> Self {
        Self {
            degree: DEGREE,
            knots: c.knot_count(),
            control_points: c.coefficients().iter().map(|p| [p.x, p.y, p.z]).collect(),
        }
    }

    pub fn to_curve(&self) -> Result<SplineCurve3> {
        if self.degree != DEGREE {
            return Err(VcsError::Input(format!("only cubic centerlines are supported, got degree {}", self.degree)));
        }
        SplineCurve3::new(self.knots, self.control_points.iter().map(|c| Point3::new(c[0], c[1], c[2])).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallBlock {
    pub tau_knots: usize,
    pub theta_knots: usize,
    /// Rows along `τ`, columns along `θ`.
    pub coefficients: Vec<Vec<f64>>,
}

impl WallBlock {
    pub fn from_wall(w: &BivariateSpline) -> Self {
        let (_, cols) = w.shape();
        Self {
            tau_knots: w.tau_knots().count(),
            theta_knots: w.theta_knots().count(),
            coefficients: w.coefficients().chunks(cols).map(|r| r.to_vec()).collect(),
        }
    }

    pub fn to_wall(&self) -> Result<BivariateSpline> {
        let cols = self.coefficients.first().map_or(0, |r| r.len());
        if self.coefficients.iter().any(|r| r.len() != cols) {
            return Err(VcsError::Layout("ragged wall coefficient matrix".into()));
        }
        BivariateSpline::new(self.tau_knots, self.theta_knots, self.coefficients.concat())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameBlock {
    pub v1_0: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_mesh_sha256: Option<String>,
    pub parameters: ModelDims,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub id: String,
    pub units: String,
    pub centerline: CurveBlock,
    pub wall: WallBlock,
    pub frame: FrameBlock,
    pub provenance: Provenance,
}

impl ModelDocument {
    pub fn from_model(m: &VesselModel) -> Self {
        let v = m.v1_0();
        Self {
            schema_version: SCHEMA_VERSION,
            id: m.metadata.id.clone(),
            units: m.metadata.units.clone(),
            centerline: CurveBlock::from_curve(m.centerline()),
            wall: WallBlock::from_wall(m.wall()),
            frame: FrameBlock { v1_0: [v.x, v.y, v.z] },
            provenance: Provenance {
                source_mesh_sha256: m.metadata.source_hash.clone(),
                parameters: m.dims(),
                tool_version: TOOL_VERSION.into(),
            },
        }
    }

    pub fn to_model(&self) -> Result<VesselModel> {
        let model = VesselModel::new(
            self.centerline.to_curve()?,
            self.wall.to_wall()?,
            Vector3::from(self.frame.v1_0),
            ModelMetadata { id: self.id.clone(), units: self.units.clone(), source_hash: self.provenance.source_mesh_sha256.clone() },
        )?;
        if model.dims() != self.provenance.parameters {
            return Err(VcsError::Layout(format!(
                "declared parameters {:?} do not match the stored splines {:?}",
                self.provenance.parameters,
                model.dims()
            )));
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterlineDocument {
    pub schema_version: u32,
    pub units: String,
    pub centerline: CurveBlock,
    pub seeds: [[f64; 3]; 2],
    pub voxel_spacing: f64,
    pub path_points: usize,
    pub min_clearance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_mesh_sha256: Option<String>,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortDocument {
    pub schema_version: u32,
    pub units: String,
    pub dims: ModelDims,
    pub n_samples: usize,
    pub v1_0: [f64; 3],
    pub mean: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
    pub tool_version: String,
}

impl CohortDocument {
    pub fn from_cohort(c: &CohortModel) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            units: "mm".into(),
            dims: c.dims,
            n_samples: c.pca.n_samples,
            v1_0: [c.v1_0.x, c.v1_0.y, c.v1_0.z],
            mean: c.pca.mean.clone(),
            modes: c.pca.modes.clone(),
            variances: c.pca.variances.clone(),
            tool_version: TOOL_VERSION.into(),
        }
    }

    pub fn to_cohort(&self) -> Result<CohortModel> {
        let n = self.dims.feature_len();
        if self.mean.len() != n || self.modes.iter().any(|m| m.len() != n) || self.modes.len() != self.variances.len() {
            return Err(VcsError::Layout("cohort mean, modes and variances disagree with dims".into()));
        }
        Ok(CohortModel {
            dims: self.dims,
            pca: Pca { mean: self.mean.clone(), modes: self.modes.clone(), variances: self.variances.clone(), n_samples: self.n_samples },
            v1_0: Vector3::from(self.v1_0),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasDocument {
    pub schema_version: u32,
    pub name: String,
    pub units: String,
    pub components: usize,
    pub grid: GridSpec,
    pub support: FieldSupport,
    pub n_samples: usize,
    pub mean: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
    pub tool_version: String,
}

impl AtlasDocument {
    pub fn from_atlas(a: &FieldAtlas) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: a.name.clone(),
            units: a.units.clone(),
            components: a.components,
            grid: a.grid,
            support: a.support,
            n_samples: a.pca.n_samples,
            mean: a.pca.mean.clone(),
            modes: a.pca.modes.clone(),
            variances: a.pca.variances.clone(),
            tool_version: TOOL_VERSION.into(),
        }
    }

    pub fn to_atlas(&self) -> FieldAtlas {
        FieldAtlas {
            name: self.name.clone(),
            units: self.units.clone(),
            components: self.components,
            grid: self.grid,
            support: self.support,
            pca: Pca { mean: self.mean.clone(), modes: self.modes.clone(), variances: self.variances.clone(), n_samples: self.n_samples },
        }
    }
}

/// Paths of keys present in `input` but absent from `known`.
fn unknown_keys(input: &Value, known: &Value, path: &str, out: &mut Vec<String>) {
    match (input, known) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in a {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get(k) {
                    Some(kv) => unknown_keys(v, kv, &p, out),
                    None => out.push(p),
                }
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                unknown_keys(x, y, &format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}

/// Parses a versioned JSON document. In strict mode any field the document
/// type does not define is an error.
pub fn from_json<T: Serialize + DeserializeOwned>(text: &str, mode: ReadMode) -> Result<T> {
    let value: Value = serde_json::from_str(text).map_err(|e| VcsError::Parse { offset: json_offset(text, &e), message: e.to_string() })?;
    if let Some(v) = value.get("schema_version") {
        let found = v.as_u64().ok_or_else(|| VcsError::Input("schema_version must be an unsigned integer".into()))?;
        if found > SCHEMA_VERSION as u64 {
            return Err(VcsError::SchemaVersion { found: found as u32, supported: SCHEMA_VERSION });
        }
    }
    let doc: T = serde_json::from_value(value.clone()).map_err(|e| VcsError::Input(format!("invalid document: {e}")))?;
    if mode == ReadMode::Strict {
        let known = serde_json::to_value(&doc)?;
        let mut extra = Vec::new();
        unknown_keys(&value, &known, "", &mut extra);
        if !extra.is_empty() {
            return Err(VcsError::Input(format!("unknown fields: {}", extra.join(", "))));
        }
    }
    Ok(doc)
}

fn json_offset(text: &str, e: &serde_json::Error) -> usize {
    text.lines().take(e.line().saturating_sub(1)).map(|l| l.len() + 1).sum::<usize>() + e.column().saturating_sub(1)
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(doc)? + "\n")
}

pub fn read_json<T: Serialize + DeserializeOwned>(path: impl AsRef<Path>, mode: ReadMode) -> Result<T> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| VcsError::Input(format!("{}: {e}", path.as_ref().display())))?;
    from_json(&text, mode)
}

pub fn write_json<T: Serialize>(doc: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, to_json(doc)?)?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<VesselModel> {
    read_json::<ModelDocument>(path, ReadMode::Strict)?.to_model()
}

pub fn write_model(model: &VesselModel, path: impl AsRef<Path>) -> Result<()> {
    write_json(&ModelDocument::from_model(model), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> ModelDocument {
        let pts = (0..7).map(|i| Point3::new(0.1 * i as f64, 1.0 / 3.0, 10.0 * i as f64)).collect();
        let curve = SplineCurve3::new(5, pts).unwrap();
        let wall = BivariateSpline::new(5, 5, (0..28).map(|i| 5.0 + (i as f64).sqrt()).collect()).unwrap();
        let m = VesselModel::with_projected_frame(curve, wall, Vector3::x(), ModelMetadata::named("t")).unwrap();
        ModelDocument::from_model(&m)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let d = doc();
        let text = to_json(&d).unwrap();
        let back: ModelDocument = from_json(&text, ReadMode::Strict).unwrap();
        assert_eq!(back, d);
        assert_eq!(to_json(&back).unwrap(), text);
        assert_eq!(back.to_model().unwrap(), d.to_model().unwrap());
    }

    #[test]
    fn strict_mode_rejects_unknown_fields() {
        let mut v = serde_json::to_value(doc()).unwrap();
        v["wall"]["extra"] = Value::from(1);
        let text = v.to_string();
        let err = from_json::<ModelDocument>(&text, ReadMode::Strict).unwrap_err();
        assert!(err.to_string().contains("wall.extra"), "{err}");
        assert!(from_json::<ModelDocument>(&text, ReadMode::Lenient).is_ok());
    }

    #[test]
    fn newer_schema_is_rejected() {
        let mut v = serde_json::to_value(doc()).unwrap();
        v["schema_version"] = Value::from(SCHEMA_VERSION + 1);
        assert!(matches!(
            from_json::<ModelDocument>(&v.to_string(), ReadMode::Strict),
            Err(VcsError::SchemaVersion { .. })
        ));
    }

    #[test]
    fn malformed_json_reports_offset() {
        let err = from_json::<ModelDocument>("{\n  \"a\": tru }", ReadMode::Strict).unwrap_err();
        assert!(matches!(err, VcsError::Parse { offset, .. } if offset > 2));
    }
}
