//! Model endpoints: HTTP chat clients, offline mocks, retries and usage
//! accounting.

pub mod endpoint;
pub mod query;
pub mod usage;

pub use endpoint::{EndpointSpec, Flavor};
pub use query::{query_batch, query_model, ChatExchange, ExchangeError, OracleHint, QueryRequest, Querier};
pub use usage::{accumulate_usage, UsageSummary};
pub use visdiag_core::parse::{parse_answer, parse_answer_with};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("endpoint config: {0}")]
    Config(String),
    #[error("endpoint `{endpoint}` needs the token variable `{var}`")]
    MissingAuth { endpoint: String, var: String },
    #[error("http client: {0}")]
    Http(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}
