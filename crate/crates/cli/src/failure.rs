use std::fmt;
use std::io;
use std::path::PathBuf;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug)]
pub enum Failure {
    Model(mfdc::Error),
    Io { path: PathBuf, source: io::Error },
    Usage(String),
}

impl Failure {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Failure::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Model(e) if e.is_numerical() => EXIT_NUMERICAL,
            Failure::Model(_) | Failure::Usage(_) => EXIT_VALIDATION,
            Failure::Io { .. } => EXIT_IO,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Model(e) => write!(f, "{e}"),
            Failure::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Failure::Usage(msg) => f.write_str(msg),
        }
    }
}

impl From<mfdc::Error> for Failure {
    fn from(e: mfdc::Error) -> Self {
        Failure::Model(e)
    }
}
