use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("touchstone parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("frequency {freq_hz} Hz is outside the network band [{min_hz}, {max_hz}] Hz")]
    OutOfBand {
        freq_hz: f64,
        min_hz: f64,
        max_hz: f64,
    },

    #[error("singular channel matrix at subcarrier {subcarrier}")]
    SingularChannel { subcarrier: i32 },

    #[error("no channel file configured for distance {distance_mm} mm")]
    MissingDistance { distance_mm: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("frame {frame}: {source}")]
    Frame {
        frame: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
