use std::path::PathBuf;

use crate::ids::ItemId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: rating {value} outside [1, 5]")]
    RatingRange { line: usize, value: f64 },

    #[error("no group mapping for {} item(s): {}", .items.len(), format_items(.items))]
    MissingMapping { items: Vec<ItemId> },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("requested {requested} items but only {available} candidates are available")]
    Capacity { requested: usize, available: usize },

    #[error("training diverged at epoch {epoch}: non-finite factor")]
    Training { epoch: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error("degenerate variance: both samples have zero variance")]
    DegenerateVariance,

    #[error("no eligible users: {0}")]
    Eligibility(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_items(items: &[ItemId]) -> String {
    const SHOWN: usize = 20;
    let mut s = items
        .iter()
        .take(SHOWN)
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    if items.len() > SHOWN {
        s.push_str(", ...");
    }
    s
}

/// Process exit codes used by the command line tool.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const PARSE: i32 = 4;
    pub const DATA: i32 = 5;
    pub const NUMERIC: i32 = 6;
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => exit_code::IO,
            Error::Parse { .. } | Error::Schema(_) | Error::Config(_) => exit_code::PARSE,
            Error::Argument(_) => exit_code::USAGE,
            Error::RatingRange { .. }
            | Error::MissingMapping { .. }
            | Error::Capacity { .. }
            | Error::Data(_)
            | Error::Eligibility(_)
            | Error::Invariant(_) => exit_code::DATA,
            Error::Training { .. } | Error::DegenerateVariance => exit_code::NUMERIC,
        }
    }
}
