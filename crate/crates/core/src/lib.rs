//! Compression of tactile sensor data: frame I/O and force mapping, patch
//! tokenization, range coding, a lossless and a lossy codec, evaluation
//! metrics, a benchmark harness and a downstream classification probe.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod codec;
pub mod container;
pub mod dataset;
pub mod downstream;
pub mod entropy;
pub mod error;
pub mod force;
pub mod frame;
pub mod lossless;
pub mod lossy;
pub mod metrics;
pub mod synth;
pub mod tokenizer;

pub use bench::{emit_report, run_benchmark, BenchConfig, BenchOutcome, BenchResult, RowStatus};
pub use codec::{Codec, CodecKind, CodecRegistry, CodecSpec, FrameShape};
pub use dataset::{split_dataset, Dataset, DatasetManifest, LabeledFrame, ManifestEntry, Split};
pub use downstream::{
    accuracy_under_compression, extract_features, knn_classify, linear_classify, AccuracyPoint, Classifier,
    FeatureVector,
};
pub use entropy::{Bitstream, ProbabilityModel};
pub use error::{Error, Result};
pub use force::{force_to_frame, frame_to_force, ForceImageMapping, ForceRecord};
pub use frame::{load_frame, pad_frame, save_ppm, PaddedFrame, SensorKind, TactileFrame};
pub use lossless::{decode_lossless, encode_lossless, LosslessConfig, Predictor};
pub use lossy::{decode_lossy, encode_lossy, rd_cost, rd_sweep, QualityPoint};
pub use metrics::{bd_rate, bandwidth_mbps, bpp_of, ms_ssim, psnr, rmse_map, RdCurve, RdPoint};
pub use tokenizer::{detokenize, tokenize, TokenStream};
