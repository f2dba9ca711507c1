//! End-to-end hot paths: network construction, language-model scoring,
//! CRF inference, and joint-model decoding.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use slu_core::align::build_confusion_network;
use slu_core::slm::{train_ngram, SlmConfig};
use slu_core::tagger::{crf_log_partition, crf_viterbi};
use slu_core::wcn::{train_wcn, CorrectionHead, WcnModelConfig};

fn bench_network_build(c: &mut Criterion) {
    let corpus = slu_bench::corpus(50, 7);
    let lists = slu_bench::nbest_lists(&corpus);
    c.bench_function("align/build_network_50_lists", |b| {
        b.iter(|| {
            for list in &lists {
                black_box(build_confusion_network(black_box(list)).unwrap());
            }
        })
    });
}

fn bench_slm_scoring(c: &mut Criterion) {
    let train = slu_bench::corpus(500, 7);
    let sentences: Vec<_> =
        train.utterances.iter().map(|u| u.transcript.clone()).collect();
    let model = train_ngram(&sentences, &SlmConfig::default()).unwrap();
    let test = slu_bench::corpus(50, 9);
    c.bench_function("slm/perplexity_50_sentences", |b| {
        b.iter(|| {
            for utt in &test.utterances {
                black_box(model.perplexity(black_box(&utt.transcript)));
            }
        })
    });
    let lists = slu_bench::nbest_lists(&test);
    c.bench_function("slm/rerank_50_lists", |b| {
        b.iter(|| {
            for list in &lists {
                black_box(model.rerank(black_box(list)));
            }
        })
    });
}

fn bench_crf(c: &mut Criterion) {
    let emissions = slu_bench::dense(20, 9, "bench-emissions");
    let transitions = slu_bench::dense(9, 9, "bench-transitions");
    c.bench_function("tagger/crf_log_partition_t20_k9", |b| {
        b.iter(|| black_box(crf_log_partition(black_box(&emissions), black_box(&transitions))))
    });
    c.bench_function("tagger/crf_viterbi_t20_k9", |b| {
        b.iter(|| black_box(crf_viterbi(black_box(&emissions), black_box(&transitions))))
    });
}

fn bench_wcn_decode(c: &mut Criterion) {
    let train = slu_bench::corpus(60, 7);
    let dev = slu_bench::corpus(20, 8);
    let config = WcnModelConfig {
        embed_dim: 8,
        hidden: 16,
        attention_heads: 2,
        head: CorrectionHead::Pointer,
        epochs: 1,
        ..WcnModelConfig::default()
    };
    let model = train_wcn(&train, &dev, &config).unwrap();
    let lists = slu_bench::nbest_lists(&dev);
    c.bench_function("wcn/joint_decode_20_utterances", |b| {
        b.iter(|| {
            for list in &lists {
                black_box(model.infer(black_box(list)).unwrap());
            }
        })
    });
}

criterion_group!(
    benches,
    bench_network_build,
    bench_slm_scoring,
    bench_crf,
    bench_wcn_decode
);
criterion_main!(benches);
