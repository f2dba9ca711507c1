//! Shared fixtures for the pipeline benchmarks: a deterministic synthetic
//! corpus and dense tensors sized like real workloads.

use slu_core::corpus::{Corpus, Token};
use slu_core::corpus::synth::{generate_synthetic, SynthConfig};
use slu_core::seeds::substream;
use slu_core::tensor::Tensor;

use rand::Rng;

/// A small synthetic corpus with the default noise channel.
pub fn corpus(count: usize, seed: u64) -> Corpus {
    let config = SynthConfig { utterance_count: count, ..SynthConfig::default() };
    generate_synthetic(&config, seed).expect("default config is valid")
}

/// The n-best lists of every utterance.
pub fn nbest_lists(corpus: &Corpus) -> Vec<Vec<Vec<Token>>> {
    corpus.utterances.iter().map(|u| u.nbest_tokens()).collect()
}

/// A deterministic `[rows, cols]` tensor with entries in `(-1, 1)`.
pub fn dense(rows: usize, cols: usize, label: &str) -> Tensor {
    let mut rng = substream(97, label);
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::new(rows, cols, data).expect("consistent shape")
}
