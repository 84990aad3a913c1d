use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported raster format: {0}")]
    UnsupportedFormat(String),
    #[error("image has {0} channels, expected 3")]
    NonThreeChannelImage(u8),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("taxel count changed from {expected} to {found} at record {index}")]
    InconsistentTaxelCount {
        expected: usize,
        found: usize,
        index: usize,
    },
    #[error("force sequence is empty")]
    EmptySequence,
    #[error("timestamps must strictly increase (record {0})")]
    NonIncreasingTimestamp(usize),
    #[error("frame is not force-stacked")]
    WrongSensorKind,
    #[error("invalid force mapping: {0}")]
    InvalidMapping(String),
    #[error("malformed force log: {0}")]
    MalformedForceLog(String),

    #[error("need at least 2 trajectories, found {0}")]
    TooFewTrajectories(usize),
    #[error("duplicate manifest path {0}")]
    DuplicatePath(String),
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error("target {target_w}x{target_h} is smaller than source {width}x{height}")]
    TargetSmallerThanSource {
        width: usize,
        height: usize,
        target_w: usize,
        target_h: usize,
    },

    #[error("token stream has {found} symbols, geometry needs {expected}")]
    LengthGeometryMismatch { expected: usize, found: usize },

    #[error("bitstream ended early")]
    TruncatedBitstream,
    #[error("bitstream holds a different symbol count than requested")]
    CountMismatch,
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("unsupported container version {0}")]
    VersionMismatch(u8),
    #[error("payload checksum mismatch")]
    CorruptPayload,

    #[error("frame dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("frame too small for any MS-SSIM scale ({0}x{1})")]
    TooSmallForAnyScale(usize, usize),
    #[error("curve needs at least {needed} points, has {found}")]
    InsufficientPoints { needed: usize, found: usize },
    #[error("quality ranges of the two curves do not overlap")]
    NoQualityOverlap,
    #[error("curve is not strictly monotone: {0}")]
    NonMonotoneCurve(String),
    #[error("input must be positive: {0}")]
    NonPositiveInput(&'static str),
    #[error("zero pixel area")]
    ZeroArea,
    #[error("empty input")]
    EmptyInput,

    #[error("unknown codec {0}")]
    UnknownCodec(String),
    #[error("duplicate codec id {0}")]
    DuplicateCodec(String),
    #[error("missing dataset {0}")]
    MissingDataset(PathBuf),
    #[error("external command failed: {0}")]
    ExternalCommandFailure(String),
    #[error("malformed command template: {0}")]
    MalformedTemplate(String),
    #[error("need at least {needed} frames for timing, got {found}")]
    TooFewFrames { needed: usize, found: usize },
    #[error("lossless codec {codec} changed frame {frame}")]
    LosslessViolation { codec: String, frame: usize },
    #[error("invalid quality {0}")]
    InvalidQuality(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    UnwritableOutput {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("manifest entries carry no labels")]
    UnlabeledManifest,
    #[error("normal equations are singular")]
    SingularSystem,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
