use alloc::string::String;
use core::fmt;

/// Errors raised by the core pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Latitude outside [-90, 90] degrees.
    LatitudeOutOfRange(f64),
    /// Longitude outside [-180, 180] degrees.
    LongitudeOutOfRange(f64),
    /// A GPS list was empty where at least one label is required.
    NoGpsLabels,
    /// GPS label second indices must be strictly increasing.
    NonIncreasingSeconds { video_id: String },
    /// Latitude beyond the Web-Mercator validity bound.
    OutsideMercatorDomain(f64),
    /// Zoom level outside [0, 22].
    ZoomOutOfRange(u8),
    /// Pixel coordinate outside the world bounds for its zoom.
    PixelOutOfBounds { x: u64, y: u64, zoom: u8 },
    /// A box would extend past the world pixel bounds.
    BoxOutOfBounds,
    /// GPS labels span more pixels than a large region holds.
    RegionOverflow { span_x: u64, span_y: u64 },
    /// A point maps outside the region it was queried against.
    PointOutsideRegion { region_id: String },
    /// A vector with near-zero norm cannot be normalized.
    DegenerateEmbedding { id: String },
    /// Gallery construction needs at least one record.
    EmptyGallery,
    /// Duplicate id within one gallery or manifest.
    DuplicateId(String),
    /// Vector dimension differs from the gallery dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// Requested k outside [1, gallery size].
    KOutOfRange { k: usize, len: usize },
    /// An id was not found in the gallery or map.
    UnknownId(String),
    /// A non-finite value where a finite float is required.
    NonFinite { context: &'static str },
    /// Contrastive loss needs at least two pairs per batch.
    BatchTooSmall { rows: usize },
    /// A batch row norm strays from 1 beyond the allowed tolerance.
    RowNotNormalized { row: usize, norm: f64 },
    /// Temperature and other loss / config parameters must be valid.
    InvalidParameter(&'static str),
    /// Training loss became non-finite.
    Divergence { epoch: usize },
    /// Sequence aggregation cancelled to a near-zero mean.
    DegenerateSequence,
    /// A prediction set or ranking was empty.
    EmptyPredictions,
    /// A prediction lacks the GPS point a distance metric needs.
    MissingPredictionPoint { query_id: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::LatitudeOutOfRange(v) => write!(f, "latitude {v} outside [-90, 90]"),
            Error::LongitudeOutOfRange(v) => write!(f, "longitude {v} outside [-180, 180]"),
            Error::NoGpsLabels => write!(f, "no GPS labels"),
            Error::NonIncreasingSeconds { video_id } => {
                write!(f, "video {video_id}: second indices not strictly increasing")
            }
            Error::OutsideMercatorDomain(v) => {
                write!(f, "latitude {v} outside Mercator domain")
            }
            Error::ZoomOutOfRange(z) => write!(f, "zoom {z} outside [0, 22]"),
            Error::PixelOutOfBounds { x, y, zoom } => {
                write!(f, "pixel ({x}, {y}) outside world bounds at zoom {zoom}")
            }
            Error::BoxOutOfBounds => write!(f, "box extends past world pixel bounds"),
            Error::RegionOverflow { span_x, span_y } => {
                write!(f, "region overflow: labels span {span_x}x{span_y} px")
            }
            Error::PointOutsideRegion { region_id } => {
                write!(f, "point outside region {region_id}")
            }
            Error::DegenerateEmbedding { id } => write!(f, "degenerate embedding: {id}"),
            Error::EmptyGallery => write!(f, "empty gallery"),
            Error::DuplicateId(id) => write!(f, "duplicate id: {id}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::KOutOfRange { k, len } => {
                write!(f, "k = {k} outside [1, {len}]")
            }
            Error::UnknownId(id) => write!(f, "unknown id: {id}"),
            Error::NonFinite { context } => write!(f, "non-finite value in {context}"),
            Error::BatchTooSmall { rows } => {
                write!(f, "batch of {rows} pairs too small: denominator empty below 2")
            }
            Error::RowNotNormalized { row, norm } => {
                write!(f, "row {row} not normalized: norm {norm}")
            }
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::Divergence { epoch } => write!(f, "loss diverged at epoch {epoch}"),
            Error::DegenerateSequence => write!(f, "degenerate sequence"),
            Error::EmptyPredictions => write!(f, "empty prediction set"),
            Error::MissingPredictionPoint { query_id } => {
                write!(f, "query {query_id}: prediction has no GPS point")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
