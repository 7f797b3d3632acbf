use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Spatial axis of the voxel grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{axis} = {value} lies outside the grid range [{lo}, {hi}]")]
    OutOfBounds {
        axis: Axis,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("{what} index {index} out of range 1..={max}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },

    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("link m={m} n={n} t={t} is not scheduled")]
    Unscheduled { m: usize, n: usize, t: usize },

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("radio map file: {0}")]
    MapFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn check_index(what: &'static str, index: usize, max: usize) -> Result<usize> {
        if index == 0 || index > max {
            Err(Error::IndexOutOfRange { what, index, max })
        } else {
            Ok(index - 1)
        }
    }
}
