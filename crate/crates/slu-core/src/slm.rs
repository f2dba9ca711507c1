//! Statistical n-gram language model with absolute-discounting
//! interpolation, used to rescore n-best hypotheses by perplexity.
//!
//! Probabilities interpolate all orders down to a uniform distribution
//! over the vocabulary:
//!
//! ```text
//! P(w | ctx) = max(c(ctx, w) - D, 0) / c(ctx) + lambda(ctx) * P(w | ctx')
//! lambda(ctx) = D * N1+(ctx) / c(ctx)
//! ```
//!
//! where `ctx'` drops the oldest context word and `N1+(ctx)` counts the
//! distinct words seen after `ctx`. An unseen context contributes no mass
//! of its own and defers entirely to the shorter context. The unigram
//! level interpolates with `1 / |V|`, so every vocabulary word (including
//! `<unk>` and `<eos>`) has positive probability and each conditional
//! sums to one exactly.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Token;
use crate::error::{Error, Result};

/// Default absolute discount.
pub const DEFAULT_DISCOUNT: f64 = 0.75;

/// Training options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlmConfig {
    /// n-gram order (1 = unigram)
    pub order: usize,
    /// subtracted from every observed count
    pub discount: f64,
    /// words seen fewer than this many times map to `<unk>`
    pub min_count: usize,
}

impl Default for SlmConfig {
    fn default() -> Self {
        SlmConfig { order: 3, discount: DEFAULT_DISCOUNT, min_count: 2 }
    }
}

/// Counts for one context: total, distinct continuations, per-word counts.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct ContextCounts {
    total: usize,
    continuations: BTreeMap<Token, usize>,
}

/// A trained model. Contexts are keyed by space-joined token strings
/// (tokens cannot contain whitespace, so the join is lossless), which keeps
/// the JSON serialization a plain sorted map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NGramModel {
    pub order: usize,
    pub discount: f64,
    vocab: BTreeMap<Token, usize>,
    /// counts per order; index k holds contexts of length k
    contexts: Vec<BTreeMap<String, ContextCounts>>,
}

fn context_key(ctx: &[Token]) -> String {
    ctx.iter().map(Token::as_str).collect::<Vec<_>>().join(" ")
}

impl NGramModel {
    /// Vocabulary size |V| (includes `<unk>` and `<eos>`, never `<s>`).
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn contains(&self, word: &Token) -> bool {
        self.vocab.contains_key(word)
    }

    /// Iterate the vocabulary (includes `<unk>` and `<eos>`).
    pub fn vocabulary(&self) -> impl Iterator<Item = &Token> {
        self.vocab.keys()
    }

    fn map_unk(&self, word: &Token) -> Token {
        if self.vocab.contains_key(word) {
            word.clone()
        } else {
            Token::unk()
        }
    }

    /// P(word | context) with all context words already in-vocabulary or
    /// `<s>`. The context may be any length; only the final `order - 1`
    /// words are consulted.
    fn prob_mapped(&self, context: &[Token], word: &Token) -> f64 {
        let start = context.len().saturating_sub(self.order - 1).min(context.len());
        self.prob_rec(&context[start..], word)
    }

    fn prob_rec(&self, ctx: &[Token], word: &Token) -> f64 {
        if ctx.is_empty() {
            let table = &self.contexts[0];
            let counts = table.get("").expect("unigram table always present");
            let c = counts.continuations.get(word).copied().unwrap_or(0);
            let discounted = (c as f64 - self.discount).max(0.0) / counts.total as f64;
            let types = counts.continuations.len() as f64;
            let lambda = self.discount * types / counts.total as f64;
            discounted + lambda / self.vocab.len() as f64
        } else {
            let table = &self.contexts[ctx.len()];
            match table.get(&context_key(ctx)) {
                None => self.prob_rec(&ctx[1..], word),
                Some(counts) => {
                    let c = counts.continuations.get(word).copied().unwrap_or(0);
                    let discounted =
                        (c as f64 - self.discount).max(0.0) / counts.total as f64;
                    let lambda = self.discount * counts.continuations.len() as f64
                        / counts.total as f64;
                    discounted + lambda * self.prob_rec(&ctx[1..], word)
                }
            }
        }
    }

    /// P(word | context) for arbitrary tokens; out-of-vocabulary words on
    /// either side fold to `<unk>` first.
    pub fn prob(&self, context: &[Token], word: &Token) -> f64 {
        let mapped_ctx: Vec<Token> = context
            .iter()
            .map(|t| if t.as_str() == crate::corpus::BOS { t.clone() } else { self.map_unk(t) })
            .collect();
        self.prob_mapped(&mapped_ctx, &self.map_unk(word))
    }

    /// Per-word perplexity of a sentence, including the `<eos>` event:
    /// `exp(-(1/L) * sum ln P)` with `L = sentence.len() + 1`.
    pub fn perplexity(&self, sentence: &[Token]) -> f64 {
        let mut seq: Vec<Token> = Vec::with_capacity(sentence.len() + self.order);
        for _ in 0..self.order.saturating_sub(1) {
            seq.push(Token::bos());
        }
        for tok in sentence {
            seq.push(self.map_unk(tok));
        }
        seq.push(Token::eos());

        let pad = self.order.saturating_sub(1);
        let mut log_sum = 0.0;
        for i in pad..seq.len() {
            let ctx = &seq[i.saturating_sub(pad)..i];
            log_sum += self.prob_mapped(ctx, &seq[i]).ln();
        }
        let events = (seq.len() - pad) as f64;
        (-log_sum / events).exp()
    }

    /// Index of the lowest-perplexity hypothesis (ties -> lowest index).
    pub fn rerank(&self, nbest: &[Vec<Token>]) -> usize {
        let mut best = 0;
        let mut best_ppl = f64::INFINITY;
        for (i, hyp) in nbest.iter().enumerate() {
            let ppl = self.perplexity(hyp);
            if ppl < best_ppl {
                best = i;
                best_ppl = ppl;
            }
        }
        best
    }

    pub fn save(&self, mut out: impl Write) -> Result<()> {
        serde_json::to_writer(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(reader: impl BufRead) -> Result<Self> {
        let model: NGramModel = serde_json::from_reader(reader)?;
        if model.order == 0 || model.contexts.len() != model.order {
            return Err(Error::InvalidInput("malformed language model file".into()));
        }
        Ok(model)
    }
}

/// Train a model on tokenized sentences. Words below `min_count` fold into
/// `<unk>`; every sentence contributes a terminating `<eos>` event with
/// `<s>` padding on the left.
pub fn train_ngram(sentences: &[Vec<Token>], config: &SlmConfig) -> Result<NGramModel> {
    if config.order == 0 {
        return Err(Error::InvalidInput("n-gram order must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&config.discount) {
        return Err(Error::InvalidInput(format!(
            "discount must lie in [0, 1], got {}",
            config.discount
        )));
    }
    if sentences.is_empty() {
        return Err(Error::InvalidInput("no training sentences".into()));
    }

    let mut raw_counts: BTreeMap<Token, usize> = BTreeMap::new();
    for sent in sentences {
        for tok in sent {
            *raw_counts.entry(tok.clone()).or_insert(0) += 1;
        }
    }
    let mut vocab: BTreeMap<Token, usize> = BTreeMap::new();
    for (tok, count) in &raw_counts {
        if *count >= config.min_count {
            vocab.insert(tok.clone(), *count);
        } else {
            *vocab.entry(Token::unk()).or_insert(0) += count;
        }
    }
    vocab.entry(Token::unk()).or_insert(0);
    *vocab.entry(Token::eos()).or_insert(0) += sentences.len();

    let keep = |tok: &Token| -> Token {
        if raw_counts.get(tok).copied().unwrap_or(0) >= config.min_count {
            tok.clone()
        } else {
            Token::unk()
        }
    };

    let mut contexts: Vec<BTreeMap<String, ContextCounts>> = vec![BTreeMap::new(); config.order];
    let pad = config.order - 1;
    for sent in sentences {
        let mut seq: Vec<Token> = Vec::with_capacity(sent.len() + config.order);
        for _ in 0..pad {
            seq.push(Token::bos());
        }
        seq.extend(sent.iter().map(keep));
        seq.push(Token::eos());
        for i in pad..seq.len() {
            for k in 0..config.order {
                let ctx = &seq[i - k..i];
                let entry = contexts[k].entry(context_key(ctx)).or_default();
                entry.total += 1;
                *entry.continuations.entry(seq[i].clone()).or_insert(0) += 1;
            }
        }
    }

    Ok(NGramModel { order: config.order, discount: config.discount, vocab, contexts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn sents(lines: &[&str]) -> Vec<Vec<Token>> {
        lines.iter().map(|l| tokenize(l)).collect()
    }

    fn assert_normalized(model: &NGramModel, context: &[Token]) {
        let mut sum = 0.0;
        for word in model.vocab.keys() {
            sum += model.prob(context, word);
        }
        assert!(
            (sum - 1.0).abs() < 1e-9,
            "sum over vocab = {sum} for context {context:?}"
        );
    }

    #[test]
    fn unigram_uniform_fixture_has_vocab_size_perplexity() {
        // singletons x, y, w fold into <unk>; a, b, <unk>, <eos> each
        // occur three times, so every unigram probability is exactly 1/4
        // and any sentence scores perplexity |V| = 4.
        let model = train_ngram(
            &sents(&["a b x", "a b y", "a b w"]),
            &SlmConfig { order: 1, ..SlmConfig::default() },
        )
        .unwrap();
        assert_eq!(model.vocab_size(), 4);
        for word in ["a", "b", "<unk>", "<eos>"] {
            let p = model.prob(&[], &Token::new(word).unwrap());
            assert!((p - 0.25).abs() < 1e-12, "P({word}) = {p}");
        }
        let ppl = model.perplexity(&tokenize("a b"));
        assert!((ppl - 4.0).abs() < 1e-9, "ppl = {ppl}");
        let ppl = model.perplexity(&tokenize("b a b a"));
        assert!((ppl - 4.0).abs() < 1e-9, "ppl = {ppl}");
    }

    #[test]
    fn conditionals_sum_to_one_all_orders() {
        let corpus = sents(&[
            "i want thai food",
            "i want cheap food",
            "thai food in the east",
            "cheap food in the west",
            "i want the phone number",
        ]);
        for order in 1..=4 {
            let model =
                train_ngram(&corpus, &SlmConfig { order, ..SlmConfig::default() }).unwrap();
            assert_normalized(&model, &[]);
            assert_normalized(&model, &tokenize("i"));
            assert_normalized(&model, &tokenize("i want"));
            assert_normalized(&model, &tokenize("thai food"));
            // unseen context must back off and still normalize
            assert_normalized(&model, &tokenize("west east"));
            // OOV context word folds to <unk>
            assert_normalized(&model, &tokenize("zebra"));
        }
    }

    #[test]
    fn observed_bigram_outranks_unobserved() {
        let model = train_ngram(
            &sents(&["a b a b a b", "a b a b"]),
            &SlmConfig { order: 2, min_count: 1, ..SlmConfig::default() },
        )
        .unwrap();
        let a = Token::new("a").unwrap();
        let b = Token::new("b").unwrap();
        let p_b_after_a = model.prob(std::slice::from_ref(&a), &b);
        let p_a_after_a = model.prob(std::slice::from_ref(&a), &a);
        assert!(
            p_b_after_a > p_a_after_a,
            "P(b|a) = {p_b_after_a} should exceed P(a|a) = {p_a_after_a}"
        );
    }

    #[test]
    fn unseen_context_backs_off_to_shorter() {
        let model = train_ngram(
            &sents(&["a b c", "a b d"]),
            &SlmConfig { order: 3, min_count: 1, ..SlmConfig::default() },
        )
        .unwrap();
        let c = Token::new("c").unwrap();
        // context "d a" never occurs, so P(c | d a) = P(c | a);
        // "a" alone is a seen unigram context
        let p_long = model.prob(&tokenize("d a"), &c);
        let p_short = model.prob(&tokenize("a"), &c);
        assert!((p_long - p_short).abs() < 1e-15);
    }

    #[test]
    fn perplexity_prefers_fluent_hypothesis() {
        let corpus = sents(&[
            "i want thai food",
            "i want chinese food",
            "i want indian food",
            "thai food please",
        ]);
        let model =
            train_ngram(&corpus, &SlmConfig { order: 2, min_count: 1, ..SlmConfig::default() })
                .unwrap();
        let fluent = tokenize("i want thai food");
        let disfluent = tokenize("food thai want i");
        assert!(model.perplexity(&fluent) < model.perplexity(&disfluent));
        let idx = model.rerank(&[disfluent, fluent.clone(), fluent]);
        assert_eq!(idx, 1, "ties resolve to the lowest index");
    }

    #[test]
    fn oov_words_score_as_unk() {
        let model = train_ngram(
            &sents(&["a b", "a b", "a c"]),
            &SlmConfig { order: 2, min_count: 1, ..SlmConfig::default() },
        )
        .unwrap();
        let zebra = Token::new("zebra").unwrap();
        let unk = Token::unk();
        let p_oov = model.prob(&tokenize("a"), &zebra);
        let p_unk = model.prob(&tokenize("a"), &unk);
        assert_eq!(p_oov, p_unk);
        assert!(p_oov > 0.0);
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let model = train_ngram(
            &sents(&["i want thai food", "i want cheap food", "phone number please"]),
            &SlmConfig::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let loaded = NGramModel::load(buf.as_slice()).unwrap();
        let ctx = tokenize("i want");
        let w = Token::new("thai").unwrap();
        assert_eq!(model.prob(&ctx, &w).to_bits(), loaded.prob(&ctx, &w).to_bits());
        assert_eq!(
            model.perplexity(&tokenize("i want food")).to_bits(),
            loaded.perplexity(&tokenize("i want food")).to_bits()
        );
        // a second save must be byte-identical
        let mut buf2 = Vec::new();
        loaded.save(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn invalid_configs_rejected() {
        let corpus = sents(&["a b"]);
        assert!(train_ngram(&corpus, &SlmConfig { order: 0, ..SlmConfig::default() }).is_err());
        assert!(
            train_ngram(&corpus, &SlmConfig { discount: 1.5, ..SlmConfig::default() }).is_err()
        );
        assert!(train_ngram(&[], &SlmConfig::default()).is_err());
    }

    #[test]
    fn empty_hypothesis_scores_eos_only() {
        let model = train_ngram(
            &sents(&["a b", "a b"]),
            &SlmConfig { order: 2, min_count: 1, ..SlmConfig::default() },
        )
        .unwrap();
        let ppl = model.perplexity(&[]);
        assert!(ppl.is_finite() && ppl > 0.0);
    }
}
