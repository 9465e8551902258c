use alloc::string::String;
use core::fmt;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A position, orientation or velocity became NaN or infinite.
    NonFiniteState { body: usize },
    /// Body-frame inertia could not be inverted.
    SingularInertia,
    /// Invalid solver configuration (e.g. an odd facet count).
    Config(String),
    /// The narrowphase has no routine for this pair of shapes.
    UnsupportedPair { a: &'static str, b: &'static str },
    /// An invariant the broadphase is supposed to guarantee was broken.
    Internal(&'static str),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::NonFiniteState { body } => write!(f, "non-finite state on body {body}"),
            CoreError::SingularInertia => f.write_str("singular inertia tensor"),
            CoreError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            CoreError::UnsupportedPair { a, b } => write!(f, "unsupported collision pair {a}-{b}"),
            CoreError::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl core::error::Error for CoreError {}

/// A scene field failed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub field: String,
    pub reason: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ValidationError { field: field.into(), reason: reason.into() }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

impl core::error::Error for ValidationError {}
