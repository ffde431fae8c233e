//! Command layer: load a scenario, run one analysis, write artifacts.
//! Exit codes distinguish the failure classes: 2 parse, 3 validation,
//! 4 refusal (a hypothesis of the requested analysis does not hold),
//! 5 numeric failure, 6 budget exhausted, 7 i/o.

pub mod commands;
pub mod scenario;

use std::path::PathBuf;

use thiserror::Error;

pub use scenario::Scenario;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("refused: {0}")]
    Refusal(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) => 2,
            Self::Validation(_) => 3,
            Self::Refusal(_) => 4,
            Self::Numeric(_) => 5,
            Self::Budget(_) => 6,
            Self::Io(_) => 7,
        }
    }
}

impl From<netmean::Error> for CliError {
    fn from(err: netmean::Error) -> Self {
        use netmean::Error as E;
        let text = err.to_string();
        match err {
            E::NotErgodic { .. }
            | E::NonErgodicRoot { .. }
            | E::ErgodicRoot
            | E::RootConnected
            | E::NotAffine { .. }
            | E::NoMatrixLimit { .. }
            | E::BadStochasticBlock => Self::Refusal(text),
            E::NumericFailure { .. }
            | E::SingularSystem
            | E::WitnessNotCertified { .. }
            | E::LimitCrossCheckFailed { .. }
            | E::WalkThresholdOverflow { .. }
            | E::OscillationDetected { .. }
            | E::Internal(_) => Self::Numeric(text),
            E::BudgetExhausted { .. } => Self::Budget(text),
            _ => Self::Validation(text),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self::Io(err.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Analyze,
    Simulate,
    Invariant,
    Witness,
    Limit,
    Verify,
    Batch,
}

impl CommandKind {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "analyze" => Ok(Self::Analyze),
            "simulate" => Ok(Self::Simulate),
            "invariant" => Ok(Self::Invariant),
            "witness" => Ok(Self::Witness),
            "limit" => Ok(Self::Limit),
            "verify" => Ok(Self::Verify),
            other => Err(CliError::Validation(format!(
                "unknown command {other:?} in scenario"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: u64,
    pub exact: bool,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub samples: usize,
}

pub fn run(kind: CommandKind, opts: &Options) -> Result<(), CliError> {
    let scenario = Scenario::load(&opts.scenario)?;
    std::fs::create_dir_all(&opts.out)?;
    dispatch(kind, &scenario, opts)
}

fn dispatch(kind: CommandKind, scenario: &Scenario, opts: &Options) -> Result<(), CliError> {
    match kind {
        CommandKind::Analyze => commands::analyze(scenario, opts),
        CommandKind::Simulate => commands::simulate(scenario, opts),
        CommandKind::Invariant => commands::invariant(scenario, opts),
        CommandKind::Witness => commands::witness(scenario, opts),
        CommandKind::Limit => commands::limit(scenario, opts),
        CommandKind::Verify => commands::verify(scenario, opts),
        CommandKind::Batch => {
            if scenario.commands.is_empty() {
                return Err(CliError::Validation(
                    "batch requested but the scenario lists no commands".into(),
                ));
            }
            for name in &scenario.commands {
                let kind = CommandKind::parse(name)?;
                dispatch(kind, scenario, opts)?;
            }
            Ok(())
        }
    }
}
