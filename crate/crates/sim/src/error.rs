use std::path::PathBuf;

use p2pcc_core::control::{ParamError, ReceiverId};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("duration must be a positive number of seconds, got {0}")]
    Duration(f64),
    #[error("scenario has no receivers")]
    NoReceivers,
    #[error("receiver id {0} appears more than once")]
    DuplicateReceiver(ReceiverId),
    #[error("invalid {what} schedule: {reason}")]
    Schedule { what: String, reason: String },
    #[error("block size must be positive")]
    BlockSize,
    #[error("invalid active period for {0}")]
    ActivePeriod(String),
    #[error("invalid or duplicate flow name {0:?}")]
    FlowName(String),
    #[error("flow {flow} targets unknown receiver {receiver}")]
    FlowReceiver { flow: String, receiver: ReceiverId },
    #[error("invalid controller parameters: {0}")]
    Params(#[from] ParamError),
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}
