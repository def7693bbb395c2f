//! Per-learner training views: categorical encodings and histogram bins.

mod binning;
mod encoding;

pub use binning::{build_bins, BinMapper, BinnedView, FeatureBins, DEFAULT_MAX_BINS, MISSING_BIN};
pub use encoding::{
    build_encoding, ordered_target_values, CategoricalStrategy, Encoded, EncodingPlan,
    FittedEncoding, FittedFeature,
};
