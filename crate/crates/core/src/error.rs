//! Error types shared across the engine.

use alloc::string::String;
use core::fmt;

/// Problems with the input panel itself: malformed series, impossible
/// alignments, or values the model cannot accept (non-positive prices).
#[derive(Debug, Clone, PartialEq)]
pub enum DataError {
    /// The panel holds no series at all.
    EmptyPanel,
    /// A series was requested by id but is not present.
    UnknownCoin(String),
    /// The designated context series is missing from the panel.
    MissingContext(String),
    /// A price at `index` (days since the series start) is zero, negative or
    /// non-finite; levels and log ratios are undefined for it.
    NonPositivePrice { coin: String, index: usize },
    /// An exogenous value is negative or non-finite, which the log transform
    /// cannot absorb.
    BadExogenous { coin: String, var: String, index: usize },
    /// A series is shorter than the engine needs for the requested geometry.
    ShortSeries { coin: String, needed: usize, got: usize },
    /// Exogenous variable names differ between series of one panel.
    ExoMismatch { coin: String },
    /// A per-series array does not match the series length.
    LengthMismatch { coin: String, expected: usize, got: usize },
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::EmptyPanel => write!(f, "panel contains no series"),
            DataError::UnknownCoin(id) => write!(f, "unknown series '{id}'"),
            DataError::MissingContext(id) => {
                write!(f, "context series '{id}' is not in the panel")
            }
            DataError::NonPositivePrice { coin, index } => {
                write!(f, "series '{coin}': non-positive price at day {index}")
            }
            DataError::BadExogenous { coin, var, index } => {
                write!(f, "series '{coin}': invalid value for '{var}' at day {index}")
            }
            DataError::ShortSeries { coin, needed, got } => {
                write!(f, "series '{coin}': needs at least {needed} days, has {got}")
            }
            DataError::ExoMismatch { coin } => {
                write!(f, "series '{coin}': exogenous variables differ from the rest of the panel")
            }
            DataError::LengthMismatch { coin, expected, got } => {
                write!(f, "series '{coin}': expected {expected} values, got {got}")
            }
        }
    }
}

impl core::error::Error for DataError {}

/// Engine-level failures: bad configuration, indexing outside a series,
/// mismatched tensor shapes, or numerics going non-finite mid-training.
#[derive(Debug, Clone, PartialEq)]
pub enum ForecastError {
    /// A configuration value is inconsistent with the panel or with itself.
    Config(String),
    /// A window or anchor fell outside the available history.
    Range(String),
    /// Two tensors met in an operation with incompatible shapes.
    Shape { context: &'static str, expected: usize, got: usize },
    /// A loss or parameter became NaN/inf; the run cannot continue.
    NonFinite(&'static str),
    /// Engine state was used out of order (e.g. stepping a series that was
    /// never warm-started).
    State(&'static str),
    /// Training loss went non-finite; names the offending update.
    Diverged { epoch: usize, update: usize },
    /// The underlying panel is unusable.
    Data(DataError),
}

impl fmt::Display for ForecastError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForecastError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            ForecastError::Range(msg) => write!(f, "out of range: {msg}"),
            ForecastError::Shape { context, expected, got } => {
                write!(f, "shape mismatch in {context}: expected {expected}, got {got}")
            }
            ForecastError::NonFinite(what) => {
                write!(f, "non-finite value encountered in {what}")
            }
            ForecastError::State(what) => write!(f, "engine state misuse: {what}"),
            ForecastError::Diverged { epoch, update } => {
                write!(f, "training diverged (non-finite loss) at epoch {epoch}, update {update}")
            }
            ForecastError::Data(e) => write!(f, "data error: {e}"),
        }
    }
}

impl core::error::Error for ForecastError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            ForecastError::Data(e) => Some(e),
            _ => None,
        }
    }
}

impl From<DataError> for ForecastError {
    fn from(e: DataError) -> Self {
        ForecastError::Data(e)
    }
}
