//! Hierarchical CNN-RNN hypothesis ranker: a word-level convolution stack
//! feeds a hypothesis-level LSTM, and each hypothesis is scored in the
//! context of the whole n-best list.
//!
//! Every hypothesis is encoded independently (multi-width same-padding
//! convolutions over embeddings, ReLU, then an LSTM whose final state
//! summarizes the hypothesis). The list is scored permutation-equivariantly:
//! each hypothesis' score comes from a shared head applied to
//! `[own summary; average of all summaries]`, so identical hypotheses
//! always tie. Training minimizes cross-entropy against the oracle
//! (lowest-edit-distance) index.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{Corpus, Token};
use crate::error::{Error, Result};
use crate::metrics::oracle_index;
use crate::seeds::substream;
use crate::tensor::nn::{ConvBlock, Linear, LstmCell};
use crate::tensor::store::{AdamConfig, Init, ParameterStore};
use crate::tensor::{argmax, softmax_slice, Graph, NodeId};

/// Ranker hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankerConfig {
    pub embed_dim: usize,
    pub conv_widths: Vec<usize>,
    pub conv_filters: usize,
    pub hidden: usize,
    /// hypotheses per list; shorter lists repeat their last hypothesis
    pub nbest: usize,
    pub epochs: usize,
    pub lr: f64,
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for RankerConfig {
    fn default() -> Self {
        RankerConfig {
            embed_dim: 16,
            conv_widths: vec![2, 3],
            conv_filters: 16,
            hidden: 32,
            nbest: 10,
            epochs: 8,
            lr: 2e-3,
            grad_clip: 5.0,
            seed: 29,
        }
    }
}

impl RankerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nbest == 0 {
            return Err(Error::InvalidInput("nbest must be at least 1".into()));
        }
        if self.conv_widths.is_empty() || self.conv_widths.contains(&0) {
            return Err(Error::InvalidInput("conv widths must be non-empty and positive".into()));
        }
        Ok(())
    }
}

/// A trained ranker.
pub struct Ranker {
    store: ParameterStore,
    vocab: BTreeMap<Token, usize>,
    config: RankerConfig,
    pub best_epoch: usize,
}

impl Ranker {
    fn ids(&self, tokens: &[Token]) -> Vec<usize> {
        if tokens.is_empty() {
            // an empty hypothesis still needs one step for the encoders
            return vec![self.vocab[&Token::eps()]];
        }
        tokens.iter().map(|t| self.vocab.get(t).copied().unwrap_or(0)).collect()
    }

    /// Softmax scores over the padded list and the selected real index.
    pub fn rank(&self, nbest: &[Vec<Token>]) -> Result<(Vec<f64>, usize)> {
        if nbest.is_empty() {
            return Err(Error::InvalidInput("cannot rank an empty n-best list".into()));
        }
        let mut g = Graph::new();
        let logits = build_logits(
            &mut g,
            &self.store,
            &self.config,
            &pad_list(nbest, self.config.nbest).iter().map(|h| self.ids(h)).collect::<Vec<_>>(),
        );
        let scores = g.value(logits).data.clone();
        let probs = softmax_slice(&scores);
        let real = nbest.len().min(self.config.nbest);
        let selected = argmax(&scores[..real]);
        Ok((probs, selected))
    }

    pub fn save(&self, out: impl std::io::Write) -> Result<()> {
        let meta = json!({
            "model": "ranker",
            "config": self.config,
            "vocab": crate::corpus::vocab_to_list(&self.vocab),
            "best_epoch": self.best_epoch,
        });
        self.store.save(meta, out)
    }

    pub fn load(reader: impl std::io::BufRead) -> Result<Self> {
        let (store, meta) = ParameterStore::load(reader)?;
        if meta["model"] != "ranker" {
            return Err(Error::InvalidInput(format!(
                "expected a ranker checkpoint, found model {}",
                meta["model"]
            )));
        }
        let config: RankerConfig = serde_json::from_value(meta["config"].clone())?;
        let vocab_list: Vec<String> = serde_json::from_value(meta["vocab"].clone())?;
        let vocab = crate::corpus::vocab_from_list(&vocab_list)?;
        let best_epoch = meta["best_epoch"].as_u64().unwrap_or(0) as usize;
        Ok(Ranker { store, vocab, config, best_epoch })
    }
}

/// Repeat the final hypothesis until the list is exactly `n` long.
fn pad_list(nbest: &[Vec<Token>], n: usize) -> Vec<Vec<Token>> {
    let mut out: Vec<Vec<Token>> = nbest.iter().take(n).cloned().collect();
    while out.len() < n {
        out.push(out.last().expect("non-empty list").clone());
    }
    out
}

fn init_params(store: &mut ParameterStore, config: &RankerConfig, vocab_len: usize, seed: u64) {
    let mut rng = substream(seed, "ranker-init");
    store.init("embed", vocab_len, config.embed_dim, Init::Uniform(0.1), &mut rng);
    ConvBlock::init_params(
        store,
        &mut rng,
        "conv",
        config.embed_dim,
        &config.conv_widths,
        config.conv_filters,
    );
    let conv_out = config.conv_widths.len() * config.conv_filters;
    LstmCell::init_params(store, &mut rng, "rnn", conv_out, config.hidden);
    Linear::init_params(store, &mut rng, "head1", 2 * config.hidden, config.hidden, true);
    Linear::init_params(store, &mut rng, "head2", config.hidden, 1, true);
}

/// Score a padded list: one shared encoder per hypothesis, then a shared
/// head over `[summary; list average]`, concatenated into `[1, N]` logits.
fn build_logits(
    g: &mut Graph,
    store: &ParameterStore,
    config: &RankerConfig,
    hyp_ids: &[Vec<usize>],
) -> NodeId {
    let embed = g.param(store, "embed");
    let conv = ConvBlock::bind(g, store, "conv", &config.conv_widths);
    let rnn = LstmCell::bind(g, store, "rnn", config.hidden);
    let head1 = Linear::bind(g, store, "head1");
    let head2 = Linear::bind(g, store, "head2");

    let summaries: Vec<NodeId> = hyp_ids
        .iter()
        .map(|ids| {
            let rows = g.embed_rows(embed, ids);
            let features = conv.apply(g, rows);
            let inputs: Vec<NodeId> = (0..ids.len()).map(|t| g.row(features, t)).collect();
            let states = rnn.run(g, &inputs);
            states[states.len() - 1]
        })
        .collect();

    let mut avg = summaries[0];
    for s in &summaries[1..] {
        avg = g.add(avg, *s);
    }
    let avg = g.scale(avg, 1.0 / summaries.len() as f64);

    let scores: Vec<NodeId> = summaries
        .iter()
        .map(|s| {
            let feat = g.concat_cols(&[*s, avg]);
            let h = head1.apply(g, feat);
            let h = g.tanh(h);
            head2.apply(g, h)
        })
        .collect();
    g.concat_cols(&scores)
}

/// Train against oracle indices; the kept epoch maximizes dev selection
/// accuracy (how often the oracle hypothesis is chosen).
pub fn train_ranker(train: &Corpus, dev: &Corpus, config: &RankerConfig) -> Result<Ranker> {
    config.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::InvalidInput("train and dev corpora must be non-empty".into()));
    }

    let mut vocab: BTreeMap<Token, usize> = BTreeMap::new();
    vocab.insert(Token::unk(), 0);
    let next = vocab.len();
    vocab.entry(Token::eps()).or_insert(next);
    for utt in &train.utterances {
        for hyp in &utt.nbest {
            for tok in &hyp.tokens {
                let next = vocab.len();
                vocab.entry(tok.clone()).or_insert(next);
            }
        }
    }

    let mut store = ParameterStore::new();
    init_params(&mut store, config, vocab.len(), config.seed);

    let template = Ranker {
        store: ParameterStore::new(),
        vocab: vocab.clone(),
        config: config.clone(),
        best_epoch: 0,
    };
    let examples: Vec<(Vec<Vec<usize>>, usize)> = train
        .utterances
        .iter()
        .filter(|u| !u.nbest.is_empty())
        .map(|u| {
            let hyps = u.nbest_tokens();
            let target = oracle_index(&hyps[..hyps.len().min(config.nbest)], &u.transcript);
            let ids = pad_list(&hyps, config.nbest)
                .iter()
                .map(|h| template.ids(h))
                .collect();
            (ids, target)
        })
        .collect();

    let adam = AdamConfig { lr: config.lr, ..AdamConfig::default() };
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut best: Option<(f64, ParameterStore, usize)> = None;

    for epoch in 0..config.epochs {
        let mut shuffle_rng = substream(config.seed, &format!("ranker-shuffle-{epoch}"));
        rand::seq::SliceRandom::shuffle(&mut order[..], &mut shuffle_rng);
        for idx in &order {
            let (ids, target) = &examples[*idx];
            let mut g = Graph::new();
            let logits = build_logits(&mut g, &store, config, ids);
            let loss = g.cross_entropy(logits, &[*target]);
            g.backward(loss);
            g.accumulate_grads(&mut store);
            store.clip_global_norm(config.grad_clip);
            store.adam_step(&adam);
        }

        let candidate = Ranker {
            store: store.clone(),
            vocab: vocab.clone(),
            config: config.clone(),
            best_epoch: epoch,
        };
        let score = selection_accuracy(&candidate, dev)?;
        if best.as_ref().map(|(s, _, _)| score > *s).unwrap_or(true) {
            best = Some((score, store.clone(), epoch));
        }
    }

    let (_, store, best_epoch) = best.expect("at least one epoch");
    Ok(Ranker { store, vocab, config: config.clone(), best_epoch })
}

/// Fraction of utterances whose selected hypothesis is the oracle one.
pub fn selection_accuracy(ranker: &Ranker, corpus: &Corpus) -> Result<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for utt in &corpus.utterances {
        if utt.nbest.is_empty() {
            continue;
        }
        let hyps = utt.nbest_tokens();
        let capped = &hyps[..hyps.len().min(ranker.config.nbest)];
        let (_, selected) = ranker.rank(capped)?;
        if selected == oracle_index(capped, &utt.transcript) {
            hits += 1;
        }
        total += 1;
    }
    if total == 0 {
        return Err(Error::InvalidInput("no utterances with hypotheses".into()));
    }
    Ok(hits as f64 / total as f64)
}
