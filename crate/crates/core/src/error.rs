use thiserror::Error;

use crate::synthweb::{Action, TemplateId};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown template id {0}")]
    UnknownTemplate(TemplateId),
    #[error("template {template} expects {expected} parameters, instance binds {got}")]
    ParameterArity {
        template: TemplateId,
        expected: usize,
        got: usize,
    },
    #[error("action {0} is not feasible in the current state")]
    InfeasibleAction(Action),
    #[error("episode already terminated")]
    Terminated,
    #[error("non-finite policy score")]
    NonFiniteScore,
    #[error("action lies outside the policy support")]
    ZeroProbability,
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("training diverged: loss became {0}")]
    Divergence(f64),
    #[error("dataset contains a single class")]
    SingleClass,
    #[error("state digest mismatch at step {step}")]
    DigestMismatch { step: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
