use qmolgen_core::dataset::DatasetError;
use qmolgen_core::gan::GanError;
use qmolgen_core::metrics::MetricsError;

/// Failures grouped by process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit code 1.
    #[error("{0}")]
    Usage(String),
    /// Exit code 2.
    #[error("{0}")]
    Data(String),
    /// Exit code 3.
    #[error("{0}")]
    Numerical(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

impl From<GanError> for CliError {
    fn from(e: GanError) -> Self {
        let msg = e.to_string();
        match e {
            GanError::InvalidConfig(_) | GanError::UnknownPreset { .. } | GanError::ZeroIterations => {
                CliError::Usage(msg)
            }
            GanError::Dataset(_) | GanError::Checkpoint(_) | GanError::LatentLength { .. } => CliError::Data(msg),
            GanError::Metrics(m) => m.into(),
            _ => CliError::Numerical(msg),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Table(_) | MetricsError::EmptyBatch => CliError::Data(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}
