use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("base rig is not in pure rolling (residual {0})")]
    NotPureRolling(String),
    #[error("perturbed rig differs from base in {0}")]
    PerturbationMismatch(String),
    #[error("wrong sliding method: expected {expected}")]
    WrongMethod { expected: &'static str },
    #[error("family step {index}: {source}")]
    FamilyStep {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("traces are drawn in different frames")]
    MixedFrames,
    #[error("degenerate ellipse: {0:?}")]
    Degenerate(crate::ellipse::Degenerate),
    #[error("rig is not an ellipse generator (needs co-polarization and omega_pen = 2 omega_table)")]
    NotEllipseRig,
    #[error("{0}")]
    Csv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
