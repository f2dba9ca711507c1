//! Joint confusion-network correction and understanding model.
//!
//! Each network column becomes a word bin: the embeddings of its N
//! hypothesis tokens concatenated into one vector. A Bi-LSTM reads the
//! bin sequence (plus a trailing `<eos>` column), every hidden state is
//! concatenated with its bin embedding as a residual connection, and
//! multihead self-attention mixes the result across columns. Four heads
//! share that encoder: a pointer head that picks the row holding the
//! correct word, a word-generation head that scores the full vocabulary,
//! a per-column IOB tag head, and a dialogue-act head read off the
//! `<eos>` state. Pointer and word generation are mutually exclusive per
//! run; all active heads train jointly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::align::{build_confusion_network, training_network, ConfusionNetwork};
use crate::corpus::{
    repair_iob, to_iob, vocab_from_list, vocab_to_list, Corpus, Token, Utterance,
};
use crate::error::{Error, Result};
use crate::metrics::{frame_error_rate, Frame};
use crate::seeds::substream;
use crate::tensor::nn::{BiLstm, Linear, MultiheadAttention};
use crate::tensor::store::{AdamConfig, Init, ParameterStore};
use crate::tensor::{argmax, grad_check, Graph, GradCheckReport, NodeId};

/// Which correction head the joint model trains and decodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionHead {
    /// predict the bin row holding the correct word
    Pointer,
    /// score every vocabulary word (plus `<eps>`) directly
    WordGen,
    /// understanding only; the corrected output is the 1-best
    None,
}

/// Joint model hyperparameters.
///
/// `attention_heads = 0` skips the self-attention layer entirely (the
/// no-attention ablation). Loss weights are per head; the weight of
/// whichever correction head is inactive contributes nothing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WcnModelConfig {
    /// bin depth N: hypotheses kept per column
    pub nbest: usize,
    /// token embedding size E
    pub embed_dim: usize,
    /// Bi-LSTM hidden size H per direction
    pub hidden: usize,
    pub attention_heads: usize,
    /// pointer-head loss weight
    pub w_ptr: f64,
    /// word-generation-head loss weight
    pub w_gen: f64,
    /// tag-head loss weight
    pub w_tag: f64,
    /// act-head loss weight
    pub w_act: f64,
    pub head: CorrectionHead,
    pub epochs: usize,
    pub lr: f64,
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for WcnModelConfig {
    fn default() -> Self {
        WcnModelConfig {
            nbest: 10,
            embed_dim: 16,
            hidden: 40,
            attention_heads: 4,
            w_ptr: 1.0,
            w_gen: 1.0,
            w_tag: 1.0,
            w_act: 1.0,
            head: CorrectionHead::Pointer,
            epochs: 15,
            lr: 1e-3,
            grad_clip: 5.0,
            seed: 41,
        }
    }
}

impl WcnModelConfig {
    /// Width of one encoded column: bidirectional state plus the
    /// bin-embedding residual, `2H + N·E`.
    pub fn state_dim(&self) -> usize {
        2 * self.hidden + self.nbest * self.embed_dim
    }

    /// Loss weight of the configured correction head.
    fn corr_weight(&self) -> f64 {
        match self.head {
            CorrectionHead::Pointer => self.w_ptr,
            CorrectionHead::WordGen => self.w_gen,
            CorrectionHead::None => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nbest == 0 || self.embed_dim == 0 || self.hidden == 0 {
            return Err(Error::InvalidInput(
                "nbest, embed_dim, and hidden must be positive".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be positive".into()));
        }
        let weights = [self.w_ptr, self.w_gen, self.w_tag, self.w_act];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(
                "head loss weights must be non-negative".into(),
            ));
        }
        if self.corr_weight() + self.w_tag + self.w_act <= 0.0 {
            return Err(Error::InvalidInput(
                "active head loss weights must sum to a positive value".into(),
            ));
        }
        if self.attention_heads > 0 && self.state_dim() % self.attention_heads != 0 {
            return Err(Error::InvalidInput(format!(
                "state width {} is not divisible by {} attention heads",
                self.state_dim(),
                self.attention_heads
            )));
        }
        Ok(())
    }
}

/// One confusion-network column padded to the model's bin depth: exactly
/// N tokens, rows beyond the network's depth repeating row 0. The encoder
/// concatenates the N token embeddings into one length-`N·E` bin vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnBin {
    pub tokens: Vec<Token>,
}

/// Bins for every content column plus a trailing all-`<eos>` column.
pub fn column_bins(cn: &ConfusionNetwork, n: usize) -> Vec<ColumnBin> {
    let rows = cn.grid.len();
    let mut bins = Vec::with_capacity(cn.width() + 1);
    for t in 0..cn.width() {
        let tokens = (0..n)
            .map(|i| cn.grid[if i < rows { i } else { 0 }][t].clone())
            .collect();
        bins.push(ColumnBin { tokens });
    }
    bins.push(ColumnBin { tokens: vec![Token::eos(); n] });
    bins
}

/// Per-column gold tags in the space of the inference-time network:
/// the training projection restricted to columns that existed before the
/// transcript widened the network.
pub fn gold_column_tags(
    nbest: &[Vec<Token>],
    transcript: &[Token],
    iob: &[String],
    act: &str,
) -> Result<Vec<String>> {
    let (_, targets, inserted) = training_network(nbest, transcript, iob, act)?;
    Ok(targets
        .iob_tag
        .into_iter()
        .zip(inserted)
        .filter(|(_, ins)| !ins)
        .map(|(tag, _)| tag)
        .collect())
}

/// Additive attention over the bin axis: `score_i = v·tanh(Ws·s + We·e_i)`.
struct PointerHead {
    ws: NodeId,
    we: NodeId,
    v: NodeId,
}

impl PointerHead {
    fn init_params(store: &mut ParameterStore, rng: &mut rand_chacha::ChaCha12Rng, config: &WcnModelConfig) {
        store.init("ptr.ws", config.state_dim(), config.hidden, Init::FanIn, rng);
        store.init("ptr.we", config.embed_dim, config.hidden, Init::FanIn, rng);
        store.init("ptr.v", config.hidden, 1, Init::FanIn, rng);
    }

    fn bind(g: &mut Graph, store: &ParameterStore) -> Self {
        PointerHead {
            ws: g.param(store, "ptr.ws"),
            we: g.param(store, "ptr.we"),
            v: g.param(store, "ptr.v"),
        }
    }

    /// `state [1, d]` and the column's bin entries `[N, E]` -> `[1, N]`.
    fn logits(&self, g: &mut Graph, state: NodeId, entries: NodeId) -> NodeId {
        let s_proj = g.matmul(state, self.ws);
        let e_proj = g.matmul(entries, self.we);
        let summed = g.add_row(e_proj, s_proj);
        let bent = g.tanh(summed);
        let scores = g.matmul(bent, self.v);
        g.transpose(scores)
    }
}

/// Encoder outputs, one entry per column (content columns then `<eos>`).
struct EncodedColumns {
    /// bin-entry embeddings, `[N, E]` each
    entries: Vec<NodeId>,
    /// attended states, `[1, 2H + N·E]` each
    states: Vec<NodeId>,
    /// per-head `[T+1, T+1]` attention weights; empty when heads = 0.
    /// Kept for verification: decoding never reads the weights back.
    #[allow(dead_code)]
    attentions: Vec<NodeId>,
}

/// Bin ids in, attended per-column states out.
fn encode_columns(
    g: &mut Graph,
    store: &ParameterStore,
    config: &WcnModelConfig,
    ids: &[Vec<usize>],
) -> EncodedColumns {
    let embed = g.param(store, "embed");
    let entries: Vec<NodeId> = ids.iter().map(|col| g.embed_rows(embed, col)).collect();
    let bins: Vec<NodeId> = entries
        .iter()
        .map(|e| g.reshape(*e, 1, config.nbest * config.embed_dim))
        .collect();
    let enc = BiLstm::bind(g, store, "enc", config.hidden);
    let lstm_states = enc.run(g, &bins);
    let concat: Vec<NodeId> = lstm_states
        .iter()
        .zip(&bins)
        .map(|(s, b)| g.concat_cols(&[*s, *b]))
        .collect();
    if config.attention_heads == 0 {
        return EncodedColumns { entries, states: concat, attentions: Vec::new() };
    }
    let stacked = g.concat_rows(&concat);
    let attn =
        MultiheadAttention::bind(g, store, "attn", config.state_dim(), config.attention_heads);
    let (mixed, attentions) = attn.apply(g, stacked);
    let residual = g.add(stacked, mixed);
    let states = (0..ids.len()).map(|t| g.row(residual, t)).collect();
    EncodedColumns { entries, states, attentions }
}

/// One preprocessed training utterance: padded bin ids (content columns
/// plus `<eos>`) and per-column targets over the content columns.
struct WcnExample {
    bins: Vec<Vec<usize>>,
    ptr_targets: Vec<usize>,
    gen_targets: Vec<usize>,
    tag_targets: Vec<usize>,
    act_id: usize,
}

/// Weighted joint loss; `None` when no active head applies (a zero-width
/// network with the act head disabled).
fn loss_node(
    g: &mut Graph,
    store: &ParameterStore,
    config: &WcnModelConfig,
    ex: &WcnExample,
) -> Option<NodeId> {
    let enc = encode_columns(g, store, config, &ex.bins);
    let t_content = ex.bins.len() - 1;
    let mut terms: Vec<(NodeId, f64)> = Vec::new();
    let w_corr = config.corr_weight();
    if t_content > 0 && w_corr > 0.0 {
        match config.head {
            CorrectionHead::Pointer => {
                let head = PointerHead::bind(g, store);
                let per: Vec<NodeId> = (0..t_content)
                    .map(|t| head.logits(g, enc.states[t], enc.entries[t]))
                    .collect();
                let logits = g.concat_rows(&per);
                terms.push((g.cross_entropy(logits, &ex.ptr_targets), w_corr));
            }
            CorrectionHead::WordGen => {
                let gen = Linear::bind(g, store, "gen");
                let per: Vec<NodeId> =
                    (0..t_content).map(|t| gen.apply(g, enc.states[t])).collect();
                let logits = g.concat_rows(&per);
                terms.push((g.cross_entropy(logits, &ex.gen_targets), w_corr));
            }
            CorrectionHead::None => {}
        }
    }
    if t_content > 0 && config.w_tag > 0.0 {
        let tag = Linear::bind(g, store, "tag");
        let per: Vec<NodeId> = (0..t_content).map(|t| tag.apply(g, enc.states[t])).collect();
        let logits = g.concat_rows(&per);
        terms.push((g.cross_entropy(logits, &ex.tag_targets), config.w_tag));
    }
    if config.w_act > 0.0 {
        let act = Linear::bind(g, store, "act");
        let logits = act.apply(g, *enc.states.last().expect("eos column"));
        terms.push((g.cross_entropy(logits, &[ex.act_id]), config.w_act));
    }
    let mut total = None;
    for (node, w) in terms {
        let scaled = if w == 1.0 { node } else { g.scale(node, w) };
        total = Some(match total {
            Some(acc) => g.add(acc, scaled),
            None => scaled,
        });
    }
    total
}

fn init_store(
    config: &WcnModelConfig,
    vocab_len: usize,
    tag_count: usize,
    act_count: usize,
) -> ParameterStore {
    let mut rng = substream(config.seed, "wcn-init");
    let mut store = ParameterStore::new();
    store.init("embed", vocab_len, config.embed_dim, Init::Uniform(0.1), &mut rng);
    BiLstm::init_params(
        &mut store,
        &mut rng,
        "enc",
        config.nbest * config.embed_dim,
        config.hidden,
    );
    if config.attention_heads > 0 {
        MultiheadAttention::init_params(&mut store, &mut rng, "attn", config.state_dim());
    }
    match config.head {
        CorrectionHead::Pointer => PointerHead::init_params(&mut store, &mut rng, config),
        CorrectionHead::WordGen => {
            Linear::init_params(&mut store, &mut rng, "gen", config.state_dim(), vocab_len, true)
        }
        CorrectionHead::None => {}
    }
    Linear::init_params(&mut store, &mut rng, "tag", config.state_dim(), tag_count, true);
    Linear::init_params(&mut store, &mut rng, "act", config.state_dim(), act_count, true);
    store
}

/// Model output for one n-best list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WcnInference {
    /// corrected token sequence (`<eps>` selections removed)
    pub corrected: Vec<Token>,
    /// repaired IOB tags, one per corrected token
    pub tags: Vec<String>,
    pub act: String,
    /// pointer head: selected bin row per column; empty for other heads
    pub indices: Vec<usize>,
    /// raw per-column tag decisions before `<eps>` positions are dropped
    pub column_tags: Vec<String>,
}

/// A trained joint model: parameters plus the inventories frozen at
/// training time.
pub struct WcnModel {
    store: ParameterStore,
    vocab: BTreeMap<Token, usize>,
    tags: Vec<String>,
    acts: Vec<String>,
    config: WcnModelConfig,
    /// epoch whose parameters were kept (best dev frame error)
    pub best_epoch: usize,
}

impl WcnModel {
    pub fn config(&self) -> &WcnModelConfig {
        &self.config
    }

    pub fn act_inventory(&self) -> &[String] {
        &self.acts
    }

    pub fn tag_inventory(&self) -> &[String] {
        &self.tags
    }

    fn bin_ids(&self, tokens: &[Token]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| self.vocab.get(t).copied().unwrap_or(0))
            .collect()
    }

    fn id_to_token(&self) -> Vec<Token> {
        let mut by_id = vec![Token::unk(); self.vocab.len()];
        for (tok, id) in &self.vocab {
            by_id[*id] = tok.clone();
        }
        by_id
    }

    /// Correct and understand one n-best list (capped at the model's N).
    pub fn infer(&self, nbest: &[Vec<Token>]) -> Result<WcnInference> {
        if nbest.is_empty() {
            return Err(Error::InvalidInput("empty n-best list".into()));
        }
        let capped: Vec<Vec<Token>> =
            nbest.iter().take(self.config.nbest).cloned().collect();
        let cn = build_confusion_network(&capped)?;
        self.infer_network(&cn)
    }

    /// Decode a prebuilt confusion network.
    pub fn infer_network(&self, cn: &ConfusionNetwork) -> Result<WcnInference> {
        let bins = column_bins(cn, self.config.nbest);
        let ids: Vec<Vec<usize>> = bins.iter().map(|b| self.bin_ids(&b.tokens)).collect();
        let t_content = cn.width();
        let mut g = Graph::new();
        let enc = encode_columns(&mut g, &self.store, &self.config, &ids);

        let act_layer = Linear::bind(&mut g, &self.store, "act");
        let act_node = act_layer.apply(&mut g, *enc.states.last().expect("eos column"));
        let act = self.acts[argmax(&g.value(act_node).data)].clone();

        let tag_layer = Linear::bind(&mut g, &self.store, "tag");
        let mut column_tags = Vec::with_capacity(t_content);
        for t in 0..t_content {
            let node = tag_layer.apply(&mut g, enc.states[t]);
            column_tags.push(self.tags[argmax(&g.value(node).data)].clone());
        }

        let mut indices = Vec::new();
        let mut column_words = Vec::with_capacity(t_content);
        match self.config.head {
            CorrectionHead::Pointer => {
                let head = PointerHead::bind(&mut g, &self.store);
                for t in 0..t_content {
                    let node = head.logits(&mut g, enc.states[t], enc.entries[t]);
                    let row = argmax(&g.value(node).data);
                    indices.push(row);
                    column_words.push(bins[t].tokens[row].clone());
                }
            }
            CorrectionHead::WordGen => {
                let gen = Linear::bind(&mut g, &self.store, "gen");
                let by_id = self.id_to_token();
                for t in 0..t_content {
                    let node = gen.apply(&mut g, enc.states[t]);
                    column_words.push(by_id[argmax(&g.value(node).data)].clone());
                }
            }
            CorrectionHead::None => {
                for t in 0..t_content {
                    column_words.push(cn.grid[0][t].clone());
                }
            }
        }

        let mut corrected = Vec::new();
        let mut kept = Vec::new();
        for (tok, tag) in column_words.iter().zip(&column_tags) {
            if !tok.is_eps() {
                corrected.push(tok.clone());
                kept.push(tag.clone());
            }
        }
        let tags = repair_iob(&kept);
        Ok(WcnInference { corrected, tags, act, indices, column_tags })
    }

    pub fn save(&self, out: impl std::io::Write) -> Result<()> {
        let meta = json!({
            "model": "wcn",
            "config": self.config,
            "vocab": vocab_to_list(&self.vocab),
            "tags": self.tags,
            "acts": self.acts,
            "best_epoch": self.best_epoch,
        });
        self.store.save(meta, out)
    }

    pub fn load(reader: impl std::io::BufRead) -> Result<Self> {
        let (store, meta) = ParameterStore::load(reader)?;
        if meta["model"] != "wcn" {
            return Err(Error::InvalidInput(format!(
                "expected a joint-model checkpoint, found model {}",
                meta["model"]
            )));
        }
        let config: WcnModelConfig = serde_json::from_value(meta["config"].clone())?;
        let vocab_list: Vec<String> = serde_json::from_value(meta["vocab"].clone())?;
        let vocab = vocab_from_list(&vocab_list)?;
        let tags: Vec<String> = serde_json::from_value(meta["tags"].clone())?;
        let acts: Vec<String> = serde_json::from_value(meta["acts"].clone())?;
        let best_epoch = meta["best_epoch"].as_u64().unwrap_or(0) as usize;
        Ok(WcnModel { store, vocab, tags, acts, config, best_epoch })
    }
}

fn build_vocab(train: &Corpus) -> BTreeMap<Token, usize> {
    let mut vocab = BTreeMap::new();
    for tok in [Token::unk(), Token::eps(), Token::eos()] {
        let next = vocab.len();
        vocab.entry(tok).or_insert(next);
    }
    for utt in &train.utterances {
        for tok in utt
            .transcript
            .iter()
            .chain(utt.nbest.iter().flat_map(|h| h.tokens.iter()))
        {
            let next = vocab.len();
            vocab.entry(tok.clone()).or_insert(next);
        }
    }
    vocab
}

fn build_inventories(train: &Corpus) -> Result<(Vec<String>, Vec<String>)> {
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
    Ok((tag_set.into_iter().collect(), acts))
}

fn example_from(
    utt: &Utterance,
    vocab: &BTreeMap<Token, usize>,
    tag_ids: &BTreeMap<&str, usize>,
    act_ids: &BTreeMap<&str, usize>,
    config: &WcnModelConfig,
) -> Result<WcnExample> {
    if utt.nbest.is_empty() {
        return Err(Error::InvalidInput(format!(
            "utterance {} has an empty n-best list",
            utt.id
        )));
    }
    let capped: Vec<Vec<Token>> =
        utt.nbest_tokens().into_iter().take(config.nbest).collect();
    let iob = to_iob(&utt.transcript, &utt.slots)?;
    let (cn, targets, _) =
        training_network(&capped, &utt.transcript, &iob, &utt.dialogue_act)?;
    let id_of = |t: &Token| vocab.get(t).copied().unwrap_or(0);
    let bins: Vec<Vec<usize>> = column_bins(&cn, config.nbest)
        .iter()
        .map(|b| b.tokens.iter().map(id_of).collect())
        .collect();
    Ok(WcnExample {
        bins,
        ptr_targets: targets.bin_index,
        gen_targets: targets.correction_word.iter().map(id_of).collect(),
        tag_targets: targets
            .iob_tag
            .iter()
            .map(|t| tag_ids[t.as_str()])
            .collect(),
        act_id: act_ids[targets.act.as_str()],
    })
}

/// Train the joint model with Adam; keeps the epoch with the lowest dev
/// frame error rate.
pub fn train_wcn(train: &Corpus, dev: &Corpus, config: &WcnModelConfig) -> Result<WcnModel> {
    config.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::InvalidInput("train and dev corpora must be non-empty".into()));
    }
    let vocab = build_vocab(train);
    let (tags, acts) = build_inventories(train)?;
    let tag_ids: BTreeMap<&str, usize> =
        tags.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let act_ids: BTreeMap<&str, usize> =
        acts.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let examples: Vec<WcnExample> = train
        .utterances
        .iter()
        .map(|u| example_from(u, &vocab, &tag_ids, &act_ids, config))
        .collect::<Result<_>>()?;

    let mut store = init_store(config, vocab.len(), tags.len(), acts.len());
    let adam = AdamConfig { lr: config.lr, ..AdamConfig::default() };
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut best: Option<(f64, ParameterStore, usize)> = None;

    for epoch in 0..config.epochs {
        let mut shuffle_rng = substream(config.seed, &format!("wcn-shuffle-{epoch}"));
        rand::seq::SliceRandom::shuffle(&mut order[..], &mut shuffle_rng);
        for idx in &order {
            let mut g = Graph::new();
            let Some(loss) = loss_node(&mut g, &store, config, &examples[*idx]) else {
                continue;
            };
            g.backward(loss);
            g.accumulate_grads(&mut store);
            store.clip_global_norm(config.grad_clip);
            store.adam_step(&adam);
        }

        let candidate = WcnModel {
            store: store.clone(),
            vocab: vocab.clone(),
            tags: tags.clone(),
            acts: acts.clone(),
            config: config.clone(),
            best_epoch: epoch,
        };
        let fer = dev_frame_error(&candidate, dev)?;
        if best.as_ref().map(|(f, _, _)| fer < *f).unwrap_or(true) {
            best = Some((fer, store.clone(), epoch));
        }
    }

    let (_, store, best_epoch) = best.expect("at least one epoch");
    Ok(WcnModel { store, vocab, tags, acts, config: config.clone(), best_epoch })
}

/// Frame error rate of the model's joint output against the transcripts.
pub fn dev_frame_error(model: &WcnModel, dev: &Corpus) -> Result<f64> {
    let mut predicted = Vec::with_capacity(dev.len());
    let mut gold = Vec::with_capacity(dev.len());
    for utt in &dev.utterances {
        let inf = model.infer(&utt.nbest_tokens())?;
        predicted.push(Frame::from_tagged(&inf.act, &inf.corrected, &inf.tags));
        let iob = to_iob(&utt.transcript, &utt.slots)?;
        gold.push(Frame::from_tagged(&utt.dialogue_act, &utt.transcript, &iob));
    }
    frame_error_rate(&predicted, &gold)
}

/// Finite-difference verification of the full joint-model gradient on a
/// tiny randomized instance: three content columns, bin depth 3, both
/// residual wiring and two-head self-attention on the path.
pub fn encoder_gradient_check(seed: u64) -> GradCheckReport {
    gradient_check_with_head(seed, CorrectionHead::Pointer)
}

/// Same check with a selectable correction head.
pub fn gradient_check_with_head(seed: u64, head: CorrectionHead) -> GradCheckReport {
    use rand::Rng;
    let config = WcnModelConfig {
        nbest: 3,
        embed_dim: 2,
        hidden: 3,
        attention_heads: 2,
        head,
        seed,
        ..WcnModelConfig::default()
    };
    let vocab_len = 7;
    let mut store = init_store(&config, vocab_len, 3, 3);
    // redraw every value mixed-sign so no coordinate sits in float dust
    let mut rng = substream(seed, "wcn-grad-redraw");
    let names: Vec<String> = store.names().map(str::to_string).collect();
    for name in &names {
        for x in &mut store.value_mut(name).unwrap().data {
            *x = rng.gen_range(-0.3..0.3);
        }
    }
    let mut ex_rng = substream(seed, "wcn-grad-example");
    let mut bins: Vec<Vec<usize>> = (0..3)
        .map(|_| (0..3).map(|_| ex_rng.gen_range(0..vocab_len)).collect())
        .collect();
    bins.push(vec![2; 3]);
    let example = WcnExample {
        bins,
        ptr_targets: (0..3).map(|_| ex_rng.gen_range(0..3)).collect(),
        gen_targets: (0..3).map(|_| ex_rng.gen_range(0..vocab_len)).collect(),
        tag_targets: (0..3).map(|_| ex_rng.gen_range(0..3)).collect(),
        act_id: ex_rng.gen_range(0..3),
    };
    grad_check(
        &mut store,
        |g, s| loss_node(g, s, &config, &example).expect("active heads"),
        1e-5,
        8,
    )
}
