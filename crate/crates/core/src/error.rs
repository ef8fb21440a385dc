use thiserror::Error;

/// Errors raised by the model, protocol and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain {domain}")]
    InputDomain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("level {0} is outside 0..=10")]
    InvalidLevel(i64),

    #[error("tariff bounds inverted for importer {importer} / exporter {exporter}: min {min} > max {max}")]
    BoundInversion {
        importer: usize,
        exporter: usize,
        min: u8,
        max: u8,
    },

    #[error("illegal action by region {region}: {reason}")]
    IllegalAction { region: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("need at least {required} samples, got {got}")]
    InsufficientSamples { required: usize, got: usize },

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("dimension mismatch: {0}")]
    Shape(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
