//! On-disk formats: session bundles, training tables, learning history and
//! evaluation reports, plus the synthetic session generator.
//!
//! A session bundle is a directory holding
//!
//! | file               | contents                                                     |
//! |--------------------|--------------------------------------------------------------|
//! | `meta.json`        | `app_started_at`, `board_size`, `perspective`                |
//! | `bci.csv`          | `t_ms,attention,left_brain,right_brain,stress,fatigue`       |
//! | `moves.csv`        | `move,played_at,color,position`                              |
//! | `predictions.json` | `[{"move": n, "top5": [{position, simulations, win_rate}]}]` |
//!
//! Timestamps are ISO 8601 with millisecond precision and no zone.

mod report;
mod session;
mod synthetic;
mod tables;

use std::path::PathBuf;

use thiserror::Error;

pub use report::{
    evaluate_controllers, read_report, write_report, EvaluationReport, MoveEvaluation,
};
pub use session::{
    format_datetime, is_valid_sgf_point, load_session, parse_datetime, validate_bundle,
    write_session, SessionBundle, BCI_HEADER, MOVES_HEADER,
};
pub use synthetic::generate_synthetic_session;
pub use tables::{
    read_history, read_training_set, write_history, write_training_set, HISTORY_HEADER,
    TRAINING_HEADER,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {message}")]
    Schema { file: String, message: String },
    #[error("{file} line {line}: {message}")]
    Range {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

impl DataError {
    pub(crate) fn schema(file: &str, message: impl Into<String>) -> Self {
        DataError::Schema {
            file: file.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn range(file: &str, line: usize, message: impl Into<String>) -> Self {
        DataError::Range {
            file: file.to_string(),
            line,
            message: message.into(),
        }
    }
}

pub fn read_file(path: &std::path::Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            DataError::MissingFile(path.to_path_buf())
        } else {
            DataError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

pub fn write_file(path: &std::path::Path, contents: &str) -> Result<(), DataError> {
    std::fs::write(path, contents).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}
