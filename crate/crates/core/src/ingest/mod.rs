//! Transaction acquisition: node RPC lookups and timestamped replay.

mod rpc;
mod stream;

pub use rpc::{
    fetch_with, get_tx_request, parse_tx_response, FetchedTransaction, FixtureTransport, RpcEndpoint, Transport,
    GET_TX_METHOD,
};
#[cfg(feature = "http")]
pub use rpc::{fetch_transaction, HttpTransport};
pub use stream::{
    detect_window, monitoring_csv, monitoring_header, monitoring_row, run_pipeline, stream_detect, window_stream,
    FixtureStream, LiveFeed, Window, WindowIter, WindowReport, DEFAULT_WINDOW_MS,
};

use crate::neuralcore::NeuralError;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("transaction not found")]
    NotFound,
    #[error("transport: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("node returned error {code}: {message}")]
    Rpc { code: i64, message: String },
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("fixture: {0}")]
    Fixture(String),
    #[error("record {0} has no timestamp")]
    MissingTimestamp(usize),
    #[error("record {0} is earlier than its predecessor")]
    OutOfOrder(usize),
    #[error("window length must be positive")]
    InvalidWindow,
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
