use serde::Serialize;
use serde_json::Value;

use dirac_reduction::bubbles::BubbleError;
use dirac_reduction::degree::DegreeError;
use dirac_reduction::expr::ExprError;
use dirac_reduction::grid::GridError;
use dirac_reduction::morse::MorseError;
use dirac_reduction::reduced_functional::GammaError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_HYPOTHESES: i32 = 3;
pub const EXIT_BOUNDARY: i32 = 4;

#[derive(Debug, Serialize)]
pub struct ReportEnvelope {
    pub command: String,
    pub input: Value,
    pub version: &'static str,
    pub wall_time: f64,
    pub results: Value,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
}

/// A command that ran to completion. `exit` carries verdict codes (0, 1, 3).
pub struct Outcome {
    pub input: Value,
    pub results: Value,
    pub warnings: Vec<String>,
    pub exit: i32,
}

#[derive(Debug, Clone)]
pub struct Failure {
    pub code: i32,
    pub error: ErrorReport,
    pub input: Value,
}

impl Failure {
    pub fn new(code: i32, kind: &str, message: impl Into<String>) -> Self {
        Self {
            code,
            error: ErrorReport {
                kind: kind.into(),
                message: message.into(),
                position: None,
            },
            input: Value::Null,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, "UsageError", message)
    }

    pub fn with_input(mut self, input: &Value) -> Self {
        self.input = input.clone();
        self
    }
}

impl From<ExprError> for Failure {
    fn from(e: ExprError) -> Self {
        let (kind, position) = match &e {
            ExprError::Parse { position, .. } => ("ParseError", Some(*position)),
            ExprError::Domain { position, .. } => ("DomainError", Some(*position)),
            ExprError::MixedVariables { position } => ("MixedVariables", Some(*position)),
            ExprError::Dimension { .. } => ("DimensionError", None),
        };
        let mut f = Failure::new(EXIT_USAGE, kind, e.to_string());
        f.error.position = position;
        f
    }
}

impl From<MorseError> for Failure {
    fn from(e: MorseError) -> Self {
        match e {
            MorseError::Expr(x) => x.into(),
            MorseError::Spec(m) => Failure::usage(m),
            MorseError::DegenerateCriticalPoint { .. } => Failure::new(EXIT_HYPOTHESES, "DegenerateCriticalPoint", e.to_string()),
            MorseError::ConditionIViolated { .. } => Failure::new(EXIT_HYPOTHESES, "ConditionIViolated", e.to_string()),
            MorseError::NonConvergence { .. } => Failure::new(EXIT_NUMERIC, "NonConvergence", e.to_string()),
        }
    }
}

impl From<GammaError> for Failure {
    fn from(e: GammaError) -> Self {
        match e {
            GammaError::Eval(x) => x.into(),
            GammaError::InvalidInput(m) => Failure::usage(m),
            GammaError::QuadratureNotConverged { .. } => Failure::new(EXIT_NUMERIC, "QuadratureNotConverged", e.to_string()),
            GammaError::DegenerateFit(_) => Failure::new(EXIT_NUMERIC, "DegenerateFit", e.to_string()),
        }
    }
}

impl From<DegreeError> for Failure {
    fn from(e: DegreeError) -> Self {
        match e {
            DegreeError::Gamma(g) => g.into(),
            DegreeError::BoundaryZero { .. } => Failure::new(EXIT_BOUNDARY, "BoundaryZero", e.to_string()),
            DegreeError::InvalidInput(m) => Failure::usage(m),
            DegreeError::SingularZero { .. } => Failure::new(EXIT_NUMERIC, "SingularZero", e.to_string()),
            DegreeError::NotConverged { .. } => Failure::new(EXIT_NUMERIC, "NotConverged", e.to_string()),
            DegreeError::Field(_) => Failure::new(EXIT_NUMERIC, "FieldError", e.to_string()),
        }
    }
}

impl From<BubbleError> for Failure {
    fn from(e: BubbleError) -> Self {
        match e {
            BubbleError::Grid(GridError::GridTooSmall(_)) => Failure::new(EXIT_USAGE, "GridTooSmall", e.to_string()),
            BubbleError::InvalidParams(_) | BubbleError::InvalidGrid(_) | BubbleError::Grid(_) => {
                Failure::new(EXIT_USAGE, "InvalidInput", e.to_string())
            }
            BubbleError::QuadratureNotConverged { .. } => Failure::new(EXIT_NUMERIC, "QuadratureNotConverged", e.to_string()),
        }
    }
}
