//! The `vcs` command line tool.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::atlas::{field_pca, materialize_nodes, sample_field, FieldSupport, SampledField, ScatteredField};
use crate::centerline::{extract_centerline, CenterlineResult, DEFAULT_VOXEL};
use crate::cohort::{coregister, shape_pca_models, synthesize, CoregisterOptions, RigidTransform};
use crate::coords::VesselCoordinates;
use crate::error::{ErrorClass, Result, VcsError};
use crate::io::{self, AtlasDocument, CenterlineDocument, CohortDocument, CurveBlock, ReadMode, SCHEMA_VERSION, TOOL_VERSION};
use crate::mesh::{read_mesh, write_mesh, TriMesh};
use crate::model::{context_for_mesh, fit_model, residuals, residuals_with_nearest, ModelDims, ModelMetadata, VesselModel};
use crate::splines::{fit_curve, SplineCurve3};
use crate::synthetic::SyntheticSpec;

#[derive(Debug, Parser)]
#[command(name = "vcs", version, about = "Vessel coordinate system pipeline")]
pub struct Cli {
    /// Print failures as a JSON object on stderr.
    #[arg(long, global = true)]
    pub error_json: bool,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic vessel mesh and its exact coordinates.
    Synth(SynthArgs),
    /// Extract a centerline from a wall mesh.
    Centerline(CenterlineArgs),
    /// Fit a vessel model to a wall mesh.
    Fit(FitArgs),
    /// Convert points to vessel coordinates, or back with --inverse.
    Coords(CoordsArgs),
    /// Report fitting residuals of a model against a mesh.
    Residuals(ResidualsArgs),
    /// Residual statistics over a range of knot counts.
    Sweep(SweepArgs),
    /// Triangulate a model's wall.
    Tessellate(TessellateArgs),
    /// Rigidly align a directory of models.
    Coregister(CoregisterArgs),
    /// Shape PCA over a directory of aligned models.
    Pca(PcaArgs),
    /// Build a model from cohort mode weights.
    SynthShape(SynthShapeArgs),
    /// Resample a scattered field onto a vessel grid.
    SampleField(SampleFieldArgs),
    /// Field PCA over a directory of sampled fields.
    Atlas(AtlasArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    /// Overrides the spec's noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CenterlineArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, default_value_t = DEFAULT_VOXEL)]
    pub voxel: f64,
    /// Start seed `x,y,z`; defaults to the first boundary loop center.
    #[arg(long = "pA", value_parser = parse_point, allow_hyphen_values = true)]
    pub pa: Option<Point3<f64>>,
    #[arg(long = "pB", value_parser = parse_point, allow_hyphen_values = true)]
    pub pb: Option<Point3<f64>>,
    #[arg(long = "L", default_value_t = ModelDims::DEFAULT.l)]
    pub l: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Centerline document; extracted from the mesh when absent.
    #[arg(long)]
    pub centerline: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_VOXEL)]
    pub voxel: f64,
    #[arg(long = "L", default_value_t = ModelDims::DEFAULT.l)]
    pub l: usize,
    #[arg(long = "K", default_value_t = ModelDims::DEFAULT.k)]
    pub k: usize,
    #[arg(long = "R", default_value_t = ModelDims::DEFAULT.r)]
    pub r: usize,
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CoordsArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// `x,y,z` table, or `tau,theta,rho` with --inverse.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub inverse: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResidualsArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Also measure distance to a fine tessellation of the model.
    #[arg(long)]
    pub nearest: bool,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, default_value_t = DEFAULT_VOXEL)]
    pub voxel: f64,
    /// Knot counts: `5..19`, `5..19:2` or `5,9,15,19`.
    #[arg(long = "L", default_value = "9", value_parser = parse_range)]
    pub l: KnotList,
    #[arg(long = "K", default_value = "5..19", value_parser = parse_range)]
    pub k: KnotList,
    #[arg(long = "R", default_value = "15", value_parser = parse_range)]
    pub r: KnotList,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TessellateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub ntau: usize,
    #[arg(long, default_value_t = 100)]
    pub ntheta: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CoregisterArgs {
    #[arg(long)]
    pub models: PathBuf,
    /// Correspondence grid `n_tau x n_theta`.
    #[arg(long, default_value = "64x32", value_parser = parse_grid2)]
    pub grid: (usize, usize),
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Writes the per-model rigid transforms here.
    #[arg(long)]
    pub transforms: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthShapeArgs {
    #[arg(long)]
    pub cohort: PathBuf,
    /// Mode weights, one number per mode; missing trailing modes are zero.
    #[arg(long)]
    pub alphas: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SupportArg {
    Volume,
    Wall,
}

#[derive(Debug, Args)]
pub struct SampleFieldArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// `x,y,z,v...` CSV or ASCII legacy VTK.
    #[arg(long)]
    pub field: PathBuf,
    /// Point array to read from a VTK file.
    #[arg(long)]
    pub array: Option<String>,
    #[arg(long, default_value = "64x32x8", value_parser = parse_grid3)]
    pub grid: crate::atlas::GridSpec,
    #[arg(long, value_enum, default_value = "volume")]
    pub support: SupportArg,
    /// Sample the norm of the field's components instead of the components.
    #[arg(long)]
    pub magnitude: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AtlasArgs {
    #[arg(long)]
    pub sampled: PathBuf,
    /// Also writes mean and modes as a grid table materialized in this model.
    #[arg(long, requires = "table")]
    pub model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_point(s: &str) -> std::result::Result<Point3<f64>, String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
    match v.as_slice() {
        [x, y, z] => Ok(Point3::new(*x, *y, *z)),
        _ => Err(format!("expected x,y,z, got '{s}'")),
    }
}

/// Knot counts given to `sweep`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnotList(pub Vec<usize>);

fn parse_range(s: &str) -> std::result::Result<KnotList, String> {
    parse_knot_range(s).map(KnotList)
}

/// `a..b` (inclusive), `a..b:step` or a comma list.
pub fn parse_knot_range(s: &str) -> std::result::Result<Vec<usize>, String> {
    let bad = |_| format!("bad range '{s}'");
    if let Some((a, rest)) = s.split_once("..") {
        let (b, step) = rest.split_once(':').unwrap_or((rest, "1"));
        let (a, b, step): (usize, usize, usize) = (a.parse().map_err(bad)?, b.parse().map_err(bad)?, step.parse().map_err(bad)?);
        if step == 0 || a > b {
            return Err(format!("empty range '{s}'"));
        }
        Ok((a..=b).step_by(step).collect())
    } else {
        s.split(',').map(|p| p.trim().parse().map_err(bad)).collect()
    }
}

fn parse_grid2(s: &str) -> std::result::Result<(usize, usize), String> {
    match s.split_once('x').map(|(a, b)| (a.parse(), b.parse())) {
        Some((Ok(a), Ok(b))) => Ok((a, b)),
        _ => Err(format!("expected NxM, got '{s}'")),
    }
}

fn parse_grid3(s: &str) -> std::result::Result<crate::atlas::GridSpec, String> {
    io::parse_grid(s).map_err(|e| e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Files in `dir` with extension `ext`, sorted by name.
fn list_dir(dir: &Path, ext: &[&str]) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| VcsError::Input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().and_then(|e| e.to_str()).is_some_and(|e| ext.iter().any(|x| e.eq_ignore_ascii_case(x))))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(VcsError::Input(format!("no {} files in {}", ext.join("/"), dir.display())));
    }
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

#[derive(Debug, Serialize, Deserialize)]
struct OracleDocument {
    schema_version: u32,
    spec: SyntheticSpec,
    v1_0: [f64; 3],
    /// Exact `(τ, θ, ρ)` of every mesh vertex, in vertex order.
    vertices: Vec<VesselCoordinates>,
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut spec: SyntheticSpec = io::read_json(&a.spec, ReadMode::Strict)?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let (mesh, oracle) = spec.generate()?;
    write_mesh(&mesh, &a.out)?;
    if let Some(path) = &a.oracle {
        let v = oracle.v1_0();
        let doc = OracleDocument {
            schema_version: SCHEMA_VERSION,
            spec: oracle.spec.clone(),
            v1_0: [v.x, v.y, v.z],
            vertices: oracle.vertex_coords_all().to_vec(),
        };
        io::write_json(&doc, path)?;
    }
    log::info!("{} vertices, {} faces", mesh.vertices.len(), mesh.faces.len());
    Ok(())
}

fn seeds(a: Option<Point3<f64>>, b: Option<Point3<f64>>) -> Result<Option<[Point3<f64>; 2]>> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(Some([a, b])),
        (None, None) => Ok(None),
        _ => Err(VcsError::Parameter("--pA and --pB must be given together".into())),
    }
}

fn run_extraction(mesh: &TriMesh, voxel: f64, seeds: Option<[Point3<f64>; 2]>, l: usize) -> Result<CenterlineResult> {
    if !(voxel > 0.0) {
        return Err(VcsError::Parameter(format!("voxel spacing must be positive, got {voxel}")));
    }
    ModelDims::new(l, 5, 5).validate()?;
    extract_centerline(mesh, voxel, seeds, l)
}

fn centerline(a: &CenterlineArgs) -> Result<()> {
    let mesh = read_mesh(&a.mesh)?;
    let r = run_extraction(&mesh, a.voxel, seeds(a.pa, a.pb)?, a.l)?;
    let doc = CenterlineDocument {
        schema_version: SCHEMA_VERSION,
        units: "mm".into(),
        centerline: CurveBlock::from_curve(&r.curve),
        seeds: [r.seeds[0].into(), r.seeds[1].into()],
        voxel_spacing: a.voxel,
        path_points: r.path.len(),
        min_clearance: r.path.min_clearance(),
        source_mesh_sha256: Some(io::file_sha256(&a.mesh)?),
        tool_version: TOOL_VERSION.into(),
    };
    io::write_json(&doc, &a.out)
}

fn fit(a: &FitArgs) -> Result<()> {
    let dims = ModelDims::new(a.l, a.k, a.r);
    dims.validate()?;
    let mesh = read_mesh(&a.mesh)?;
    let curve: SplineCurve3 = match &a.centerline {
        Some(p) => {
            let doc: CenterlineDocument = io::read_json(p, ReadMode::Strict)?;
            let c = doc.centerline.to_curve()?;
            if c.knot_count() == a.l {
                c
            } else {
                // Refit to the requested knot count from dense samples.
                let pts: Vec<Point3<f64>> = (0..=1000).map(|i| c.point(i as f64 / 1000.0)).collect::<Result<_>>()?;
                fit_curve(&pts, a.l)?
            }
        }
        None => run_extraction(&mesh, a.voxel, None, a.l)?.curve,
    };
    let ctx = context_for_mesh(&curve, &mesh)?;
    let mut model = fit_model(&mesh, &ctx, dims)?;
    model.metadata = ModelMetadata {
        id: a.id.clone().unwrap_or_else(|| stem(&a.mesh)),
        units: "mm".into(),
        source_hash: Some(io::file_sha256(&a.mesh)?),
    };
    io::write_model(&model, &a.out)
}

fn coords(a: &CoordsArgs) -> Result<()> {
    let model = io::read_model(&a.model)?;
    let ctx = model.context();
    let mut out = create(&a.out)?;
    if a.inverse {
        let coords: Vec<VesselCoordinates> =
            io::read_coords(&a.points)?.into_iter().map(|[t, th, r]| VesselCoordinates::new(t, th, r)).collect();
        io::write_points(&mut out, &ctx.from_vcs_many(&coords)?)?;
    } else {
        let points = io::read_points(&a.points)?;
        io::write_coords(&mut out, &ctx.to_vcs_many(&points)?)?;
    }
    out.flush()?;
    Ok(())
}

fn residuals_cmd(a: &ResidualsArgs) -> Result<()> {
    let mesh = read_mesh(&a.mesh)?;
    let model = io::read_model(&a.model)?;
    let report = if a.nearest { residuals_with_nearest(&mesh, &model, 400, 200)? } else { residuals(&mesh, &model) };
    log::info!(
        "mean {:.4} mm, p75 {:.4} mm, max {:.4} mm ({} vertices at the cut ends)",
        report.summary.mean,
        report.summary.p75,
        report.summary.max,
        report.clamped_count
    );
    io::write_json(&report, &a.report)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "R")]
    r: usize,
    mean: f64,
    p75: f64,
    max: f64,
    mean_all: f64,
    max_all: f64,
    clamped: usize,
    excluded: usize,
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let (ls, ks, rs) = (&a.l.0, &a.k.0, &a.r.0);
    for &l in ls {
        for &k in ks {
            for &r in rs {
                ModelDims::new(l, k, r).validate()?;
            }
        }
    }
    let mesh = read_mesh(&a.mesh)?;
    let first = run_extraction(&mesh, a.voxel, None, ls[0])?;
    let mut w = csv::Writer::from_writer(create(&a.out)?);
    for &l in ls {
        let curve = if l == ls[0] { first.curve.clone() } else { crate::centerline::build_centerline(&first.path, l)? };
        let ctx = context_for_mesh(&curve, &mesh)?;
        for &k in ks {
            for &r in rs {
                let model = fit_model(&mesh, &ctx, ModelDims::new(l, k, r))?;
                let rep = residuals(&mesh, &model);
                log::info!("L={l} K={k} R={r}: mean {:.4} p75 {:.4}", rep.summary.mean, rep.summary.p75);
                w.serialize(SweepRow {
                    l,
                    k,
                    r,
                    mean: rep.summary.mean,
                    p75: rep.summary.p75,
                    max: rep.summary.max,
                    mean_all: rep.summary_all.mean,
                    max_all: rep.summary_all.max,
                    clamped: rep.clamped_count,
                    excluded: rep.excluded,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn tessellate(a: &TessellateArgs) -> Result<()> {
    let model = io::read_model(&a.model)?;
    write_mesh(&model.tessellate(a.ntau, a.ntheta)?, &a.out)
}

fn read_models(dir: &Path) -> Result<(Vec<PathBuf>, Vec<VesselModel>)> {
    let files = list_dir(dir, &["json"])?;
    let models = files.iter().map(io::read_model).collect::<Result<Vec<_>>>()?;
    Ok((files, models))
}

#[derive(Debug, Serialize, Deserialize)]
struct TransformsDocument {
    schema_version: u32,
    iterations: usize,
    converged: bool,
    objective: Vec<f64>,
    models: Vec<TransformEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransformEntry {
    file: String,
    transform: RigidTransform,
}

fn coregister_cmd(a: &CoregisterArgs) -> Result<()> {
    let (files, models) = read_models(&a.models)?;
    let opts = CoregisterOptions { n_tau: a.grid.0, n_theta: a.grid.1, max_iter: a.max_iter, tol: a.tol };
    let reg = coregister(&models, &opts)?;
    std::fs::create_dir_all(&a.out)?;
    for (f, m) in files.iter().zip(&reg.models) {
        io::write_model(m, a.out.join(f.file_name().unwrap_or_default()))?;
    }
    if let Some(path) = &a.transforms {
        let doc = TransformsDocument {
            schema_version: SCHEMA_VERSION,
            iterations: reg.iterations,
            converged: reg.converged,
            objective: reg.objective.clone(),
            models: files
                .iter()
                .zip(&reg.transforms)
                .map(|(f, t)| TransformEntry { file: f.file_name().unwrap_or_default().to_string_lossy().into_owned(), transform: *t })
                .collect(),
        };
        io::write_json(&doc, path)?;
    }
    log::info!("{} models aligned in {} iterations", models.len(), reg.iterations);
    Ok(())
}

fn pca(a: &PcaArgs) -> Result<()> {
    let (_, models) = read_models(&a.models)?;
    let cohort = shape_pca_models(&models)?;
    log::info!("{} modes, variances {:?}", cohort.n_modes(), cohort.pca.variances);
    io::write_json(&CohortDocument::from_cohort(&cohort), &a.out)
}

fn synth_shape(a: &SynthShapeArgs) -> Result<()> {
    let cohort = io::read_json::<CohortDocument>(&a.cohort, ReadMode::Strict)?.to_cohort()?;
    let alphas = io::read_numbers(&a.alphas)?;
    let s = synthesize(&cohort, &alphas)?;
    if let Some(w) = &s.warning {
        eprintln!("warning: {w}");
    }
    io::write_model(&s.model, &a.out)
}

fn read_field(path: &Path, array: Option<&str>) -> Result<ScatteredField> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("vtk") => io::read_vtk(path, array),
        _ => io::read_scattered_field(path),
    }
}

fn sample_field_cmd(a: &SampleFieldArgs) -> Result<()> {
    let model = io::read_model(&a.model)?;
    let mut field = read_field(&a.field, a.array.as_deref())?;
    if a.magnitude {
        field = field.magnitude();
    }
    let grid = a.grid.build()?;
    let support = match a.support {
        SupportArg::Volume => FieldSupport::Volume,
        SupportArg::Wall => FieldSupport::Wall,
    };
    let sampled = sample_field(&field, &grid, &model, support)?;
    if is_json(&a.out) {
        return io::write_json(&sampled, &a.out);
    }
    let points = materialize_nodes(&support.nodes(&grid), &model)?;
    let mut out = create(&a.out)?;
    io::write_sampled_field(&mut out, &sampled, &points)?;
    out.flush()?;
    Ok(())
}

fn atlas(a: &AtlasArgs) -> Result<()> {
    let files = list_dir(&a.sampled, &["csv", "json"])?;
    let fields = files
        .iter()
        .map(|f| if is_json(f) { io::read_json::<SampledField>(f, ReadMode::Strict) } else { io::read_sampled_field(f) })
        .collect::<Result<Vec<_>>>()?;
    let atlas = field_pca(&fields)?;
    io::write_json(&AtlasDocument::from_atlas(&atlas), &a.out)?;
    if let (Some(model), Some(table)) = (&a.model, &a.table) {
        let model = io::read_model(model)?;
        let grid = atlas.grid.build()?;
        let points = materialize_nodes(&atlas.support.nodes(&grid), &model)?;
        let mut out = create(table)?;
        io::write_atlas_table(&mut out, &atlas, &points)?;
        out.flush()?;
    }
    Ok(())
}

/// Runs one parsed command.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Centerline(a) => centerline(a),
        Command::Fit(a) => fit(a),
        Command::Coords(a) => coords(a),
        Command::Residuals(a) => residuals_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Tessellate(a) => tessellate(a),
        Command::Coregister(a) => coregister_cmd(a),
        Command::Pca(a) => pca(a),
        Command::SynthShape(a) => synth_shape(a),
        Command::SampleField(a) => sample_field_cmd(a),
        Command::Atlas(a) => atlas(a),
    }
}

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Usage => 1,
        ErrorClass::Input => 2,
        ErrorClass::Numerical => 3,
    }
}

#[derive(Debug, Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    class: &'a str,
    exit_code: i32,
    message: String,
}

fn report(json: bool, kind: &str, class: ErrorClass, message: String) -> i32 {
    let code = exit_code(class);
    if json {
        let class = match class {
            ErrorClass::Usage => "usage",
            ErrorClass::Input => "input",
            ErrorClass::Numerical => "numerical",
        };
        let r = ErrorReport { error: kind, class, exit_code: code, message };
        eprintln!("{}", serde_json::to_string(&r).unwrap_or_default());
    } else {
        eprintln!("error: {message}");
    }
    code
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let json = args.iter().any(|a| a == "--error-json");
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            if json {
                return report(true, "usage", ErrorClass::Usage, e.kind().to_string());
            }
            let _ = e.print();
            return exit_code(ErrorClass::Usage);
        }
    };
    let level = if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => report(cli.error_json, e.kind(), e.class(), e.to_string()),
    }
}
