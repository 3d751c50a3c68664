//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),

    #[error("truncated PGM data: expected {expected} pixel bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },

    #[error("unsupported PGM maxval {0} (must be in 1..=255)")]
    UnsupportedMaxval(u32),

    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),

    #[error("reference histogram is empty")]
    EmptyReference,

    #[error("bad Gaussian kernel: {0}")]
    BadKernel(String),

    #[error("image {width}x{height} too small, need at least {min}x{min}")]
    TooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("bad Canny thresholds: low_ratio={low}, high_ratio={high} (need 0 < low < high <= 1)")]
    BadThresholds { low: f64, high: f64 },

    #[error("edge map contains no edge pixels")]
    NoEdges,

    #[error("empty radius range [{r_min}, {r_max}]")]
    EmptyRadiusRange { r_min: u32, r_max: u32 },

    #[error("pupil not found: {0}")]
    PupilNotFound(String),

    #[error("limbic search range does not fit in the image: {0}")]
    SearchRangeOutOfImage(String),

    #[error("empty search space: {0}")]
    EmptySearchSpace(String),

    #[error("no boundary found: radial derivative is flat everywhere")]
    DegenerateMaximum,

    #[error("degenerate annulus: limbic radius {limbic} <= pupil radius {pupil}")]
    DegenerateAnnulus { pupil: f64, limbic: f64 },

    #[error("every strip pixel is masked invalid")]
    AllMasked,

    #[error("dimensions {rows}x{cols} not divisible by 2^{levels}")]
    IndivisibleDims {
        rows: usize,
        cols: usize,
        levels: usize,
    },

    #[error("strip {rows}x{cols} does not produce a 2048-bit code")]
    CodeSizeMismatch { rows: usize, cols: usize },

    #[error("bad packed code length {found}, expected {expected}")]
    BadLength { found: usize, expected: usize },

    #[error("insufficient mask overlap: {usable} usable bits < required {min}")]
    InsufficientOverlap { usable: u32, min: u32 },

    #[error("invalid shift set: {0}")]
    InvalidShifts(String),

    #[error("subject id must be non-empty")]
    EmptySubjectId,

    #[error("subject '{0}' is already enrolled (pass overwrite to replace)")]
    DuplicateId(String),

    #[error("unknown subject '{0}'")]
    UnknownSubject(String),

    #[error("template store is empty")]
    EmptyStore,

    #[error("malformed template store: {0}")]
    MalformedStore(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid eye spec: {0}")]
    SpecInvalid(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}
