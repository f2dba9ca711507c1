//! Bi-LSTM-CRF slot tagger with a dialogue act head, the cascaded
//! understanding baseline: tag the (possibly reranked) 1-best hypothesis
//! and classify the act from the sequence summary.
//!
//! The CRF layer is linear-chain with emission scores from the BiLSTM and
//! a learned tag-transition matrix. [`crf_log_partition`] and
//! [`crf_viterbi`] are exposed as pure functions over plain matrices so
//! they can be verified against path enumeration; training builds the
//! same forward recursion out of graph operations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{repair_iob, to_iob, Corpus, Token};
use crate::error::{Error, Result};
use crate::seeds::substream;
use crate::tensor::nn::{BiLstm, Linear};
use crate::tensor::store::{AdamConfig, Init, ParameterStore};
use crate::tensor::{argmax, Graph, NodeId, Tensor};

/// Log-partition (normalizer) of a linear-chain CRF: log of the summed
/// exponentiated scores of all `K^T` tag paths. Path score is the sum of
/// per-step emissions plus transitions between consecutive tags.
pub fn crf_log_partition(emissions: &Tensor, transitions: &Tensor) -> f64 {
    let (t_len, k) = emissions.shape();
    assert!(t_len > 0, "empty sequence");
    assert_eq!(transitions.shape(), (k, k), "transitions must be [K, K]");
    let mut alpha: Vec<f64> = (0..k).map(|j| emissions.at(0, j)).collect();
    for t in 1..t_len {
        let mut next = vec![0.0; k];
        for (j, slot) in next.iter_mut().enumerate() {
            let terms: Vec<f64> =
                (0..k).map(|i| alpha[i] + transitions.at(i, j)).collect();
            *slot = log_sum_exp(&terms) + emissions.at(t, j);
        }
        alpha = next;
    }
    log_sum_exp(&alpha)
}

/// Best-scoring tag path and its score. Ties resolve toward the lowest
/// tag index at every decision.
pub fn crf_viterbi(emissions: &Tensor, transitions: &Tensor) -> (Vec<usize>, f64) {
    let (t_len, k) = emissions.shape();
    assert!(t_len > 0, "empty sequence");
    assert_eq!(transitions.shape(), (k, k), "transitions must be [K, K]");
    let mut delta: Vec<f64> = (0..k).map(|j| emissions.at(0, j)).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(t_len - 1);
    for t in 1..t_len {
        let mut next = vec![0.0; k];
        let mut ptr = vec![0usize; k];
        for j in 0..k {
            let mut best_i = 0;
            let mut best = delta[0] + transitions.at(0, j);
            for i in 1..k {
                let score = delta[i] + transitions.at(i, j);
                if score > best {
                    best = score;
                    best_i = i;
                }
            }
            next[j] = best + emissions.at(t, j);
            ptr[j] = best_i;
        }
        delta = next;
        back.push(ptr);
    }
    let mut state = argmax(&delta);
    let score = delta[state];
    let mut path = vec![state; t_len];
    for (t, ptr) in back.iter().enumerate().rev() {
        state = ptr[state];
        path[t] = state;
    }
    (path, score)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// CRF negative log-likelihood built from graph operations, so gradients
/// reach the emissions and the transition matrix.
fn crf_nll_node(
    g: &mut Graph,
    emissions: NodeId,
    transitions: NodeId,
    gold: &[usize],
) -> NodeId {
    let t_len = g.value(emissions).rows;
    assert_eq!(gold.len(), t_len);
    let mut alpha = g.row(emissions, 0);
    for t in 1..t_len {
        let alpha_col = g.transpose(alpha);
        let scores = g.add_col(transitions, alpha_col);
        let lse = g.log_sum_exp_cols(scores);
        let emit = g.row(emissions, t);
        alpha = g.add(lse, emit);
    }
    let alpha_col = g.transpose(alpha);
    let log_z = g.log_sum_exp_cols(alpha_col);

    let mut gold_score = g.pick(emissions, 0, gold[0]);
    for t in 1..t_len {
        let emit = g.pick(emissions, t, gold[t]);
        let trans = g.pick(transitions, gold[t - 1], gold[t]);
        let step = g.add(emit, trans);
        gold_score = g.add(gold_score, step);
    }
    let neg_gold = g.scale(gold_score, -1.0);
    g.add(log_z, neg_gold)
}

/// Tagger hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaggerConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            embed_dim: 64,
            hidden: 64,
            epochs: 10,
            lr: 1e-3,
            grad_clip: 5.0,
            seed: 17,
        }
    }
}

/// A trained tagger: parameters plus the inventories frozen at training.
pub struct Tagger {
    store: ParameterStore,
    vocab: BTreeMap<Token, usize>,
    tags: Vec<String>,
    acts: Vec<String>,
    config: TaggerConfig,
    /// epoch whose parameters were kept (best dev score)
    pub best_epoch: usize,
}

struct TaggedExample {
    ids: Vec<usize>,
    tag_ids: Vec<usize>,
    act_id: usize,
}

impl Tagger {
    fn token_ids(&self, tokens: &[Token]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| self.vocab.get(t).copied().unwrap_or(0))
            .collect()
    }

    /// Decode IOB tags (already repaired) and a dialogue act.
    pub fn tag(&self, tokens: &[Token]) -> (Vec<String>, String) {
        let ids = if tokens.is_empty() { vec![0] } else { self.token_ids(tokens) };
        let (emissions, act_logits, transitions) = self.forward(&ids);
        let (path, _) = crf_viterbi(&emissions, &transitions);
        let raw: Vec<String> =
            path.iter().take(tokens.len()).map(|t| self.tags[*t].clone()).collect();
        let act = self.acts[argmax(&act_logits)].clone();
        (repair_iob(&raw), act)
    }

    fn forward(&self, ids: &[usize]) -> (Tensor, Vec<f64>, Tensor) {
        let mut g = Graph::new();
        let embed = g.param(&self.store, "embed");
        let rows = g.embed_rows(embed, ids);
        let inputs: Vec<NodeId> = (0..ids.len()).map(|t| g.row(rows, t)).collect();
        let enc = BiLstm::bind(&mut g, &self.store, "enc", self.config.hidden);
        let states = enc.run(&mut g, &inputs);
        let emit_layer = Linear::bind(&mut g, &self.store, "emit");
        let per_step: Vec<NodeId> =
            states.iter().map(|s| emit_layer.apply(&mut g, *s)).collect();
        let emissions_node = g.concat_rows(&per_step);
        let summary = enc.final_summary(&mut g, &states);
        let act_layer = Linear::bind(&mut g, &self.store, "act");
        let act_node = act_layer.apply(&mut g, summary);
        let transitions = self.store.value("crf.trans").unwrap().clone();
        (g.value(emissions_node).clone(), g.value(act_node).data.clone(), transitions)
    }

    pub fn tag_inventory(&self) -> &[String] {
        &self.tags
    }

    pub fn act_inventory(&self) -> &[String] {
        &self.acts
    }

    pub fn save(&self, out: impl std::io::Write) -> Result<()> {
        let meta = json!({
            "model": "tagger",
            "config": self.config,
            "vocab": crate::corpus::vocab_to_list(&self.vocab),
            "tags": self.tags,
            "acts": self.acts,
            "best_epoch": self.best_epoch,
        });
        self.store.save(meta, out)
    }

    pub fn load(reader: impl std::io::BufRead) -> Result<Self> {
        let (store, meta) = ParameterStore::load(reader)?;
        if meta["model"] != "tagger" {
            return Err(Error::InvalidInput(format!(
                "expected a tagger checkpoint, found model {}",
                meta["model"]
            )));
        }
        let config: TaggerConfig = serde_json::from_value(meta["config"].clone())?;
        let vocab_list: Vec<String> = serde_json::from_value(meta["vocab"].clone())?;
        let vocab = crate::corpus::vocab_from_list(&vocab_list)?;
        let tags: Vec<String> = serde_json::from_value(meta["tags"].clone())?;
        let acts: Vec<String> = serde_json::from_value(meta["acts"].clone())?;
        let best_epoch = meta["best_epoch"].as_u64().unwrap_or(0) as usize;
        Ok(Tagger { store, vocab, tags, acts, config, best_epoch })
    }
}

fn build_inventories(
    train: &Corpus,
) -> Result<(BTreeMap<Token, usize>, Vec<String>, Vec<String>)> {
    let mut vocab = BTreeMap::new();
    vocab.insert(Token::unk(), 0);
    for utt in &train.utterances {
        for tok in &utt.transcript {
            let next = vocab.len();
            vocab.entry(tok.clone()).or_insert(next);
        }
    }
    let mut tag_set = std::collections::BTreeSet::new();
    tag_set.insert("O".to_string());
    for utt in &train.utterances {
        for tag in to_iob(&utt.transcript, &utt.slots)? {
            tag_set.insert(tag);
        }
    }
    let acts: Vec<String> = train.act_inventory.iter().cloned().collect();
    if acts.is_empty() {
        return Err(Error::InvalidInput("training corpus has no dialogue acts".into()));
    }
    Ok((vocab, tag_set.into_iter().collect(), acts))
}

/// Train on transcripts with early selection on dev tag/act accuracy.
pub fn train_tagger(train: &Corpus, dev: &Corpus, config: &TaggerConfig) -> Result<Tagger> {
    if train.is_empty() || dev.is_empty() {
        return Err(Error::InvalidInput("train and dev corpora must be non-empty".into()));
    }
    let (vocab, tags, acts) = build_inventories(train)?;
    let tag_ids: BTreeMap<&str, usize> =
        tags.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let act_ids: BTreeMap<&str, usize> =
        acts.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();

    let mut examples = Vec::with_capacity(train.len());
    for utt in &train.utterances {
        let iob = to_iob(&utt.transcript, &utt.slots)?;
        examples.push(TaggedExample {
            ids: utt.transcript.iter().map(|t| vocab[t]).collect(),
            tag_ids: iob.iter().map(|t| tag_ids[t.as_str()]).collect(),
            act_id: act_ids[utt.dialogue_act.as_str()],
        });
    }

    let mut rng = substream(config.seed, "tagger-init");
    let mut store = ParameterStore::new();
    store.init("embed", vocab.len(), config.embed_dim, Init::Uniform(0.1), &mut rng);
    BiLstm::init_params(&mut store, &mut rng, "enc", config.embed_dim, config.hidden);
    Linear::init_params(&mut store, &mut rng, "emit", 2 * config.hidden, tags.len(), true);
    Linear::init_params(&mut store, &mut rng, "act", 2 * config.hidden, acts.len(), true);
    store.init("crf.trans", tags.len(), tags.len(), Init::Uniform(0.01), &mut rng);

    let adam = AdamConfig { lr: config.lr, ..AdamConfig::default() };
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut best: Option<(f64, ParameterStore, usize)> = None;

    for epoch in 0..config.epochs {
        let mut shuffle_rng = substream(config.seed, &format!("tagger-shuffle-{epoch}"));
        rand::seq::SliceRandom::shuffle(&mut order[..], &mut shuffle_rng);
        for idx in &order {
            let ex = &examples[*idx];
            if ex.ids.is_empty() {
                continue;
            }
            let mut g = Graph::new();
            let embed = g.param(&store, "embed");
            let rows = g.embed_rows(embed, &ex.ids);
            let inputs: Vec<NodeId> = (0..ex.ids.len()).map(|t| g.row(rows, t)).collect();
            let enc = BiLstm::bind(&mut g, &store, "enc", config.hidden);
            let states = enc.run(&mut g, &inputs);
            let emit_layer = Linear::bind(&mut g, &store, "emit");
            let per_step: Vec<NodeId> =
                states.iter().map(|s| emit_layer.apply(&mut g, *s)).collect();
            let emissions = g.concat_rows(&per_step);
            let trans = g.param(&store, "crf.trans");
            let nll = crf_nll_node(&mut g, emissions, trans, &ex.tag_ids);

            let summary = enc.final_summary(&mut g, &states);
            let act_layer = Linear::bind(&mut g, &store, "act");
            let act_logits = act_layer.apply(&mut g, summary);
            let act_loss = g.cross_entropy(act_logits, &[ex.act_id]);

            let loss = g.add(nll, act_loss);
            g.backward(loss);
            g.accumulate_grads(&mut store);
            store.clip_global_norm(config.grad_clip);
            store.adam_step(&adam);
        }

        let candidate = Tagger {
            store: store.clone(),
            vocab: vocab.clone(),
            tags: tags.clone(),
            acts: acts.clone(),
            config: config.clone(),
            best_epoch: epoch,
        };
        let score = dev_score(&candidate, dev);
        if best.as_ref().map(|(s, _, _)| score > *s).unwrap_or(true) {
            best = Some((score, store.clone(), epoch));
        }
    }

    let (_, store, best_epoch) = best.expect("at least one epoch");
    Ok(Tagger { store, vocab, tags, acts, config: config.clone(), best_epoch })
}

/// Mean of token-level tag accuracy and utterance-level act accuracy.
fn dev_score(tagger: &Tagger, dev: &Corpus) -> f64 {
    let mut tag_hits = 0usize;
    let mut tag_total = 0usize;
    let mut act_hits = 0usize;
    for utt in &dev.utterances {
        let (tags, act) = tagger.tag(&utt.transcript);
        if let Ok(gold) = to_iob(&utt.transcript, &utt.slots) {
            tag_total += gold.len();
            tag_hits += tags.iter().zip(&gold).filter(|(p, g)| p == g).count();
        }
        if act == utt.dialogue_act {
            act_hits += 1;
        }
    }
    let tag_acc = if tag_total == 0 { 1.0 } else { tag_hits as f64 / tag_total as f64 };
    let act_acc = act_hits as f64 / dev.len() as f64;
    (tag_acc + act_acc) / 2.0
}
