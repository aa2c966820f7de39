use thiserror::Error;

pub type Result<T> = std::result::Result<T, VcsError>;

/// Broad failure category, used by the command line tool to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Input,
    Numerical,
}

#[derive(Debug, Error)]
pub enum VcsError {
    #[error("parameter {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("no samples in {band}")]
    Coverage { band: String },

    #[error("mesh is not watertight: {} boundary edges remain (first: {:?})", edges.len(), edges.first())]
    Topology { edges: Vec<[u32; 2]> },

    #[error("no lumen path between the seed points")]
    DisconnectedLumen,

    #[error("degenerate initial frame: {0}")]
    DegenerateFrame(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("{invalid} of {total} wall vertices have invalid coordinates")]
    Validity { invalid: usize, total: usize },

    #[error("wall radius {radius} is not positive at tau={tau}, theta={theta} (star-convexity violated)")]
    StarConvexity { tau: f64, theta: f64, radius: f64 },

    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("need at least {needed} items, got {got}")]
    Cardinality { needed: usize, got: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("invalid synthetic vessel: {0}")]
    Spec(String),

    #[error("unsupported schema version {found} (tool supports up to {supported})")]
    SchemaVersion { found: u32, supported: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl VcsError {
    pub fn class(&self) -> ErrorClass {
        use VcsError::*;
        match self {
            Parameter(_) => ErrorClass::Usage,
            Input(_) | Parse { .. } | Io(_) | Json(_) | Csv(_) | Layout(_) | Topology { .. }
            | SchemaVersion { .. } | Spec(_) | Cardinality { .. } => ErrorClass::Input,
            _ => ErrorClass::Numerical,
        }
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        use VcsError::*;
        match self {
            Domain { .. } => "domain",
            Parameter(_) => "parameter",
            InsufficientSamples { .. } => "insufficient_samples",
            DegenerateGeometry(_) => "degenerate_geometry",
            Coverage { .. } => "coverage",
            Topology { .. } => "topology",
            DisconnectedLumen => "disconnected_lumen",
            DegenerateFrame(_) => "degenerate_frame",
            Precondition(_) => "precondition",
            Model(_) => "model",
            Validity { .. } => "validity",
            StarConvexity { .. } => "star_convexity",
            Layout(_) => "layout",
            Cardinality { .. } => "cardinality",
            Input(_) => "input",
            Parse { .. } => "parse",
            Spec(_) => "spec",
            SchemaVersion { .. } => "schema_version",
            Io(_) => "io",
            Json(_) => "json",
            Csv(_) => "csv",
        }
    }
}
