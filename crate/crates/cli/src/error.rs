use chargeplan::admm::AdmmError;
use chargeplan::central::CentralError;
use chargeplan::datagen::GenError;
use chargeplan::ingest::IngestError;
use chargeplan::model::ModelError;
use chargeplan::sweep::SweepError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::NotConverged(_) => 4,
            CliError::Internal(_) => 1,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Spec(_) | IngestError::Params(_) => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<CentralError> for CliError {
    fn from(e: CentralError) -> Self {
        match e {
            CentralError::Infeasible(_) => CliError::Infeasible(e.to_string()),
            CentralError::Model(m) => m.into(),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<AdmmError> for CliError {
    fn from(e: AdmmError) -> Self {
        match e {
            AdmmError::Config(_) => CliError::Config(e.to_string()),
            AdmmError::LocalInfeasible { .. } | AdmmError::MasterInfeasible { .. } => CliError::Infeasible(e.to_string()),
            AdmmError::Model(m) => m.into(),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Empty => CliError::Config(e.to_string()),
            SweepError::Solve { source, range } => match CliError::from(source) {
                CliError::Infeasible(m) => CliError::Infeasible(format!("range {range} km: {m}")),
                other => other,
            },
            SweepError::Model(m) => m.into(),
        }
    }
}
