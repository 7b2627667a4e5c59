use std::fmt;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

pub type Fallible<T> = Result<T, Failure>;

/// Bad configuration or input.
pub const EXIT_USAGE: u8 = 2;
/// Numerical or sampler failure.
pub const EXIT_NUMERIC: u8 = 3;

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, msg: msg.into() }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERIC, msg: msg.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<groupr2::Error> for Failure {
    fn from(e: groupr2::Error) -> Self {
        if e.is_domain() {
            Failure::usage(e.to_string())
        } else {
            Failure::numeric(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::usage(e.to_string())
    }
}
