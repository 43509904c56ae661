use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("image is {width}x{height}, need at least {min}x{min}")]
    DimensionTooSmall { width: usize, height: usize, min: usize },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("region is empty")]
    EmptyRegion,

    #[error("degenerate region: {0}")]
    DegenerateMask(&'static str),

    #[error("time step {dt} exceeds the stable bound {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("histogram bin counts differ: {0} vs {1}")]
    BinCountMismatch(usize, usize),

    #[error("unknown design '{0}'")]
    UnknownDesign(String),

    #[error("design {design} takes {expected} weights, got {got}")]
    WeightArity {
        design: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("design {design} needs a {expected}-channel image, got {got} channel(s)")]
    ChannelMismatch {
        design: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("shape {index} leaves the frame at frame {frame}")]
    ShapeOutOfBounds { index: usize, frame: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no frames to track")]
    EmptySequence,
}
