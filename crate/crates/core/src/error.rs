use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Every variant maps to a stable machine-readable code (see [`HardyError::code`])
/// which the command line front end reports verbatim.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HardyError {
    #[error("singular set is empty")]
    EmptySubmanifold,
    #[error("point ({0}, {1}) lies outside the domain")]
    PointOutsideDomain(f64, f64),
    #[error("singular set is unreachable from vertex {0} inside the mesh")]
    DisconnectedMesh(usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("sampling region is empty")]
    EmptyRegion,
    #[error("map is not invertible: C1 deviation {0} >= 1")]
    NotInvertible(f64),
    #[error("inverse iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("tube half-width {width} exceeds the reach estimate {reach}")]
    TubeTooWide { width: f64, reach: f64 },
    #[error("geometry feature {feature:e} is too thin for target size {size:e}")]
    GeometryTooThin { feature: f64, size: f64 },
    #[error("element {0} inverted under the map")]
    ElementInversion(usize),
    #[error("element {0} is degenerate")]
    DegenerateElement(usize),
    #[error("quadrature node in element {0} lies on the singular set")]
    SingularNode(usize),
    #[error("quadratic form is not positive definite")]
    IndefiniteForm,
    #[error("H = {h} is above the critical value {critical}")]
    Supercritical { h: f64, critical: f64 },
    #[error("too few samples in the fitting window: {0}")]
    InsufficientSamples(usize),
    #[error("nearest point on the singular set is not unique")]
    NonUniqueFoot,
    #[error("skipped quadrature weight fraction {0:e} exceeds the limit")]
    QuadratureBreakdown(f64),
    #[error("solution is near-critical (H = {h}, critical {critical}); derivatives are not defined")]
    CriticalityGate { h: f64, critical: f64 },
    #[error("minimiser is not normalised (residual {0:e})")]
    NotNormalized(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration at `{path}`: {message}")]
    ConfigInvalid { path: String, message: String },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl HardyError {
    /// Stable upper-snake-case code for machine consumption.
    pub fn code(&self) -> &'static str {
        use HardyError::*;
        match self {
            EmptySubmanifold => "EMPTY_SUBMANIFOLD",
            PointOutsideDomain(..) => "POINT_OUTSIDE_DOMAIN",
            DisconnectedMesh(_) => "DISCONNECTED_MESH",
            DegenerateInput(_) => "DEGENERATE_INPUT",
            InvalidDomain(_) => "INVALID_DOMAIN",
            EmptyRegion => "EMPTY_REGION",
            NotInvertible(_) => "NOT_INVERTIBLE",
            NoConvergence { .. } => "NO_CONVERGENCE",
            TubeTooWide { .. } => "TUBE_TOO_WIDE",
            GeometryTooThin { .. } => "GEOMETRY_TOO_THIN",
            ElementInversion(_) => "ELEMENT_INVERSION",
            DegenerateElement(_) => "DEGENERATE_ELEMENT",
            SingularNode(_) => "SINGULAR_NODE",
            IndefiniteForm => "INDEFINITE_FORM",
            Supercritical { .. } => "SUPERCRITICAL",
            InsufficientSamples(_) => "INSUFFICIENT_SAMPLES",
            NonUniqueFoot => "NON_UNIQUE_FOOT",
            QuadratureBreakdown(_) => "QUADRATURE_BREAKDOWN",
            CriticalityGate { .. } => "CRITICALITY_GATE",
            NotNormalized(_) => "NOT_NORMALIZED",
            DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            ConfigInvalid { .. } => "CONFIG_INVALID",
            Parse { .. } => "PARSE_ERROR",
            Io(_) => "IO_ERROR",
        }
    }
}

impl From<std::io::Error> for HardyError {
    fn from(e: std::io::Error) -> Self {
        HardyError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HardyError>;
