//! Spoken language understanding on word confusion networks.
//!
//! The crate covers the full experimental pipeline for robust language
//! understanding over noisy ASR n-best lists:
//!
//! - [`corpus`]: data model, JSON-lines I/O, IOB tagging utilities, and a
//!   synthetic restaurant-domain corpus generator with a noise channel.
//! - [`align`]: Levenshtein alignment, word confusion network
//!   construction, and transcript alignment for training targets.
//! - [`slm`]: absolute-discounting n-gram language model for rescoring.
//! - [`metrics`]: WER/SER/DA-Acc/Slot-F1/TER/FER and report rendering.
//! - [`tensor`]: a small reverse-mode autodiff engine with the layers the
//!   models need (LSTM, convolution, attention) plus Adam and
//!   checkpointing.
//! - [`tagger`]: Bi-LSTM-CRF slot tagger with a dialogue act head.
//! - [`ranker`]: hierarchical CNN-RNN hypothesis ranker.
//! - [`wcn`]: joint confusion-network model with pointer/generator
//!   correction, tagging, and intent heads.
//!
//! Everything is deterministic for a fixed seed: training shuffles,
//! parameter init, and synthetic data all draw from labeled ChaCha12
//! substreams, and all keyed state lives in ordered maps.

pub mod align;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod ranker;
pub mod seeds;
pub mod slm;
pub mod tagger;
pub mod tensor;
pub mod wcn;

pub use align::{
    align_transcript, build_confusion_network, levenshtein_align, levenshtein_distance,
    project_training_targets, training_network, Column, ConfusionNetwork, EditOp, EditScript,
    TranscriptAlignment, TrainingTargets,
};
pub use corpus::{
    combine_act_label, detokenize, filter_utterances, generate_synthetic, parse_corpus,
    parse_corpus_reader, repair_iob, spans_from_iob, to_iob, tokenize, write_corpus, ContextTurn,
    Corpus, Grammar, Hypothesis, SlotSpan, Speaker, SynthConfig, Token, Utterance,
};
pub use error::{Error, Result};
pub use metrics::{
    build_report, corpus_wer, da_accuracy, frame_error_rate, oracle_index, render_table,
    sentence_error_rate, slot_f1, tag_error_rate, EvaluationReport, SystemOutput, TagSpace,
};
pub use metrics::{project_tags_to_reference, Frame};
pub use ranker::{train_ranker, Ranker, RankerConfig};
pub use slm::{train_ngram, NGramModel, SlmConfig};
pub use tagger::{crf_log_partition, crf_viterbi, train_tagger, Tagger, TaggerConfig};
pub use wcn::{
    column_bins, dev_frame_error, encoder_gradient_check, gold_column_tags, train_wcn, ColumnBin,
    CorrectionHead, WcnInference, WcnModel, WcnModelConfig,
};
