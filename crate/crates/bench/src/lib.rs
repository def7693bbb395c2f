//! Shared fixtures for the benchmarks.

use std::io::BufReader;
use std::path::Path;

use treestack::data::{parse_reader, Dataset, DatasetSchema};
use treestack::features::{
    build_bins, build_encoding, BinnedView, CategoricalStrategy, EncodingPlan,
};
use treestack::synth::{write_synthetic, SynthProfile};

/// `n` synthetic training-profile rows, parsed.
pub fn synthetic(n: usize, seed: u64) -> Dataset {
    let mut buf = Vec::new();
    write_synthetic(&mut buf, n, &SynthProfile::train(), seed).expect("write synthetic rows");
    parse_reader(
        BufReader::new(&buf[..]),
        Path::new("synthetic"),
        &DatasetSchema::nsl_kdd(),
        None,
    )
    .expect("parse synthetic rows")
}

/// Encoded and binned synthetic rows.
pub fn binned(n: usize, seed: u64) -> (Dataset, BinnedView) {
    let ds = synthetic(n, seed);
    let enc = build_encoding(
        &ds,
        &EncodingPlan::uniform(&ds, CategoricalStrategy::Passthrough),
        seed,
    )
    .expect("encode synthetic rows");
    let view = build_bins(&enc.dataset, 255).expect("bin synthetic rows");
    (enc.dataset, view)
}
