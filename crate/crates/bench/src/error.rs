use thiserror::Error;

use pulsesim_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),

    #[error("calibration failed: {0}")]
    Calibration(#[source] CoreError),

    #[error("numerical failure in {context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: CoreError,
    },

    #[error("output error: {0}")]
    Output(String),
}

impl BenchError {
    pub fn numerical(context: impl Into<String>) -> impl FnOnce(CoreError) -> Self {
        let context = context.into();
        move |source| BenchError::Numerical { context, source }
    }

    /// Process exit code: 2 config, 3 calibration, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Calibration(_) => 3,
            BenchError::Numerical { .. } | BenchError::Output(_) => 4,
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Output(e.to_string())
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Output(e.to_string())
    }
}
