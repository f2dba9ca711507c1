//! Subcommand implementations.
//!
//! Every command reads JSON-lines or checkpoint files produced by the
//! other commands, never mutates its inputs, and writes a resolved-config
//! echo beside its primary output.

use std::fs;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;
use slu_core::corpus::{
    detokenize, filter_utterances, generate_synthetic, parse_corpus, to_iob, write_corpus,
    Corpus, SynthConfig, Token, Utterance,
};
use slu_core::metrics::{
    build_report, oracle_index, render_table, EvaluationReport, SystemOutput,
};
use slu_core::ranker::{train_ranker, Ranker, RankerConfig};
use slu_core::slm::{train_ngram, NGramModel, SlmConfig};
use slu_core::tagger::{train_tagger, Tagger, TaggerConfig};
use slu_core::wcn::{gold_column_tags, train_wcn, CorrectionHead, WcnModel, WcnModelConfig};
use slu_core::align as align_mod;

use crate::config::{echo_beside, ensure_parent, write_echo};

fn load_corpus(path: &Path) -> Result<Corpus> {
    parse_corpus(path).with_context(|| format!("loading corpus {}", path.display()))
}

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    let file =
        File::open(path).with_context(|| format!("opening model file {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn create_writer(path: &Path) -> Result<BufWriter<File>> {
    ensure_parent(path)?;
    let file =
        File::create(path).with_context(|| format!("creating output file {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn onebest_or_err(utt: &Utterance) -> Result<Vec<Token>> {
    utt.nbest
        .first()
        .map(|h| h.tokens.clone())
        .ok_or_else(|| anyhow!("utterance {} has an empty n-best list", utt.id))
}

/// Generate a synthetic corpus.
pub fn synth(seed: u64, out: &Path, config: &SynthConfig) -> Result<()> {
    let corpus = generate_synthetic(config, seed)?;
    let mut w = create_writer(out)?;
    write_corpus(&corpus, &mut w)?;
    w.flush()?;
    echo_beside(
        out,
        &json!({
            "command": "synth",
            "seed": seed,
            "out": out,
            "count": config.utterance_count,
            "nbest": config.nbest_size,
            "sub": config.sub_prob,
            "del": config.del_prob,
            "ins": config.ins_prob,
        }),
    )?;
    println!("wrote {} utterances to {}", corpus.len(), out.display());
    Ok(())
}

/// Validate, optionally filter, and re-emit a corpus.
pub fn ingest(input: &Path, out: &Path, filter: bool) -> Result<()> {
    let corpus = load_corpus(input)?;
    let total = corpus.len();
    let kept = if filter { filter_utterances(&corpus) } else { corpus };
    let mut w = create_writer(out)?;
    write_corpus(&kept, &mut w)?;
    w.flush()?;
    echo_beside(
        out,
        &json!({"command": "ingest", "input": input, "out": out, "filter": filter}),
    )?;
    println!(
        "ingested {} utterances, kept {} ({} filtered out)",
        total,
        kept.len(),
        total - kept.len()
    );
    println!(
        "acts: {}, slot types: {}, vocabulary: {}",
        kept.act_inventory.len(),
        kept.slot_inventory.len(),
        kept.vocabulary.len()
    );
    Ok(())
}

/// Build confusion networks for every utterance.
pub fn align(input: &Path, out: &Path) -> Result<()> {
    let corpus = load_corpus(input)?;
    let mut w = create_writer(out)?;
    for utt in &corpus.utterances {
        let cn = align_mod::build_confusion_network(&utt.nbest_tokens())
            .with_context(|| format!("aligning utterance {}", utt.id))?;
        let line = serde_json::to_string(&json!({"id": utt.id, "network": cn}))?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    echo_beside(out, &json!({"command": "align", "input": input, "out": out}))?;
    println!("aligned {} utterances into {}", corpus.len(), out.display());
    Ok(())
}

/// Train the n-gram language model on transcripts.
pub fn train_slm(train: &Path, out: &Path, config: &SlmConfig) -> Result<()> {
    let corpus = load_corpus(train)?;
    let sentences: Vec<Vec<Token>> =
        corpus.utterances.iter().map(|u| u.transcript.clone()).collect();
    let model = train_ngram(&sentences, config)?;
    let mut w = create_writer(out)?;
    model.save(&mut w)?;
    w.flush()?;
    echo_beside(
        out,
        &json!({"command": "train-slm", "train": train, "out": out, "config": config}),
    )?;
    println!(
        "trained order-{} language model ({} word vocabulary) -> {}",
        config.order,
        model.vocab_size(),
        out.display()
    );
    Ok(())
}

/// Train the baseline Bi-LSTM-CRF tagger.
pub fn train_tagger_cmd(
    train: &Path,
    dev: &Path,
    out: &Path,
    config: &TaggerConfig,
) -> Result<()> {
    let train_corpus = load_corpus(train)?;
    let dev_corpus = load_corpus(dev)?;
    let model = train_tagger(&train_corpus, &dev_corpus, config)?;
    let mut w = create_writer(out)?;
    model.save(&mut w)?;
    w.flush()?;
    echo_beside(
        out,
        &json!({"command": "train-tagger", "train": train, "dev": dev, "out": out, "config": config}),
    )?;
    println!("trained tagger (best epoch {}) -> {}", model.best_epoch, out.display());
    Ok(())
}

/// Train the hypothesis ranker.
pub fn train_ranker_cmd(
    train: &Path,
    dev: &Path,
    out: &Path,
    config: &RankerConfig,
) -> Result<()> {
    let train_corpus = load_corpus(train)?;
    let dev_corpus = load_corpus(dev)?;
    let model = train_ranker(&train_corpus, &dev_corpus, config)?;
    let mut w = create_writer(out)?;
    model.save(&mut w)?;
    w.flush()?;
    echo_beside(
        out,
        &json!({"command": "train-ranker", "train": train, "dev": dev, "out": out, "config": config}),
    )?;
    println!("trained ranker (best epoch {}) -> {}", model.best_epoch, out.display());
    Ok(())
}

/// Train the joint confusion-network model.
pub fn train_wcn_cmd(
    train: &Path,
    dev: &Path,
    out: &Path,
    config: &WcnModelConfig,
) -> Result<()> {
    let train_corpus = load_corpus(train)?;
    let dev_corpus = load_corpus(dev)?;
    let model = train_wcn(&train_corpus, &dev_corpus, config)?;
    let mut w = create_writer(out)?;
    model.save(&mut w)?;
    w.flush()?;
    echo_beside(
        out,
        &json!({"command": "train-wcn", "train": train, "dev": dev, "out": out, "config": config}),
    )?;
    println!("trained joint model (best epoch {}) -> {}", model.best_epoch, out.display());
    Ok(())
}

/// Which trained model reorders the n-best list.
pub enum RerankModel {
    Slm(PathBuf),
    Ranker(PathBuf),
}

/// Select the best hypothesis per utterance and write the picks.
pub fn rerank(model: &RerankModel, input: &Path, out: &Path) -> Result<()> {
    let corpus = load_corpus(input)?;
    let select: Box<dyn Fn(&Utterance) -> Result<usize>> = match model {
        RerankModel::Slm(path) => {
            let slm = NGramModel::load(open_reader(path)?)?;
            Box::new(move |utt| {
                if utt.nbest.is_empty() {
                    bail!("utterance {} has an empty n-best list", utt.id);
                }
                Ok(slm.rerank(&utt.nbest_tokens()))
            })
        }
        RerankModel::Ranker(path) => {
            let ranker = Ranker::load(open_reader(path)?)?;
            Box::new(move |utt| {
                let (_, best) = ranker
                    .rank(&utt.nbest_tokens())
                    .with_context(|| format!("ranking utterance {}", utt.id))?;
                Ok(best)
            })
        }
    };
    let mut w = create_writer(out)?;
    for utt in &corpus.utterances {
        let k = select(utt)?;
        let text = detokenize(&utt.nbest[k].tokens);
        let line = serde_json::to_string(&json!({"id": utt.id, "selected": k, "text": text}))?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    let model_echo = match model {
        RerankModel::Slm(p) => json!({"slm": p}),
        RerankModel::Ranker(p) => json!({"ranker": p}),
    };
    echo_beside(
        out,
        &json!({"command": "rerank", "input": input, "out": out, "model": model_echo}),
    )?;
    println!("reranked {} utterances into {}", corpus.len(), out.display());
    Ok(())
}

/// Tag 1-best hypotheses (or transcripts) with the baseline tagger.
pub fn tag(model: &Path, input: &Path, out: &Path, use_transcript: bool) -> Result<()> {
    let tagger = Tagger::load(open_reader(model)?)?;
    let corpus = load_corpus(input)?;
    let mut w = create_writer(out)?;
    for utt in &corpus.utterances {
        let tokens = if use_transcript {
            utt.transcript.clone()
        } else {
            onebest_or_err(utt)?
        };
        let (tags, act) = tagger.tag(&tokens);
        let line = serde_json::to_string(
            &json!({"id": utt.id, "text": detokenize(&tokens), "tags": tags, "act": act}),
        )?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    echo_beside(
        out,
        &json!({"command": "tag", "model": model, "input": input, "out": out, "transcript": use_transcript}),
    )?;
    println!("tagged {} utterances into {}", corpus.len(), out.display());
    Ok(())
}

/// Run the joint model over every n-best list.
pub fn infer(model: &Path, input: &Path, out: &Path) -> Result<()> {
    let wcn = WcnModel::load(open_reader(model)?)?;
    let corpus = load_corpus(input)?;
    let mut w = create_writer(out)?;
    for utt in &corpus.utterances {
        let inf = wcn
            .infer(&utt.nbest_tokens())
            .with_context(|| format!("decoding utterance {}", utt.id))?;
        let line = serde_json::to_string(&json!({
            "id": utt.id,
            "corrected": detokenize(&inf.corrected),
            "tags": inf.tags,
            "act": inf.act,
            "indices": inf.indices,
        }))?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    echo_beside(
        out,
        &json!({"command": "infer", "model": model, "input": input, "out": out}),
    )?;
    println!("decoded {} utterances into {}", corpus.len(), out.display());
    Ok(())
}

/// Systems the evaluator can score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SystemKind {
    /// tag the decoder's 1-best (cascade)
    Onebest,
    /// tag the minimum-WER hypothesis (cascade upper bound)
    Oracle,
    /// tag the human transcript (understanding ceiling)
    Groundtruth,
    /// tag the language-model reranked hypothesis (cascade)
    Slm,
    /// tag the neural-ranker selection (cascade)
    Ranker,
    /// joint confusion-network model
    Wcn,
    /// joint model's corrected text re-tagged by the baseline (cascade)
    WcnCascade,
}

impl SystemKind {
    /// stable key used for report file names
    pub fn key(&self) -> &'static str {
        match self {
            SystemKind::Onebest => "onebest",
            SystemKind::Oracle => "oracle",
            SystemKind::Groundtruth => "groundtruth",
            SystemKind::Slm => "slm",
            SystemKind::Ranker => "ranker",
            SystemKind::Wcn => "wcn",
            SystemKind::WcnCascade => "wcn-cascade",
        }
    }

    fn needs_tagger(&self) -> bool {
        !matches!(self, SystemKind::Wcn)
    }
}

/// Model checkpoint paths the evaluator may need.
#[derive(Debug, Default)]
pub struct EvalModels {
    pub tagger: Option<PathBuf>,
    pub slm: Option<PathBuf>,
    pub ranker: Option<PathBuf>,
    pub wcn: Option<PathBuf>,
}

fn wcn_row_name(model: &WcnModel, cascaded: bool) -> String {
    let head = match model.config().head {
        CorrectionHead::Pointer => "WCN Pointer",
        CorrectionHead::WordGen => "WCN WordGen",
        CorrectionHead::None => "WCN",
    };
    let attention = if model.config().attention_heads == 0 { " No-Attention" } else { "" };
    let marker = if cascaded { "(C)" } else { "(J)" };
    format!("{head}{attention} {marker}")
}

fn cascaded_outputs(
    corpus: &Corpus,
    tagger: &Tagger,
    select: impl Fn(&Utterance) -> Result<Vec<Token>>,
) -> Result<Vec<SystemOutput>> {
    corpus
        .utterances
        .iter()
        .map(|utt| {
            let tokens = select(utt)?;
            let (tags, act) = tagger.tag(&tokens);
            Ok(SystemOutput { id: utt.id.clone(), tokens, tags, act, column_tags: None })
        })
        .collect()
}

fn joint_outputs(corpus: &Corpus, model: &WcnModel) -> Result<Vec<SystemOutput>> {
    corpus
        .utterances
        .iter()
        .map(|utt| {
            let inf = model
                .infer(&utt.nbest_tokens())
                .with_context(|| format!("decoding utterance {}", utt.id))?;
            let capped: Vec<Vec<Token>> = utt
                .nbest_tokens()
                .into_iter()
                .take(model.config().nbest)
                .collect();
            let iob = to_iob(&utt.transcript, &utt.slots)?;
            let gold_cols =
                gold_column_tags(&capped, &utt.transcript, &iob, &utt.dialogue_act)?;
            Ok(SystemOutput {
                id: utt.id.clone(),
                tokens: inf.corrected,
                tags: inf.tags,
                act: inf.act,
                column_tags: Some((inf.column_tags, gold_cols)),
            })
        })
        .collect()
}

struct LoadedModels {
    tagger: Option<Tagger>,
    slm: Option<NGramModel>,
    ranker: Option<Ranker>,
    wcn: Option<WcnModel>,
}

fn load_models(systems: &[SystemKind], paths: &EvalModels) -> Result<LoadedModels> {
    let require = |name: &str, path: &Option<PathBuf>, wanted: bool| -> Result<Option<PathBuf>> {
        match (wanted, path) {
            (false, _) => Ok(None),
            (true, Some(p)) => Ok(Some(p.clone())),
            (true, None) => bail!("the requested systems need --{name} MODEL"),
        }
    };
    let tagger_path = require(
        "tagger",
        &paths.tagger,
        systems.iter().any(|s| s.needs_tagger()),
    )?;
    let slm_path = require("slm", &paths.slm, systems.contains(&SystemKind::Slm))?;
    let ranker_path =
        require("ranker", &paths.ranker, systems.contains(&SystemKind::Ranker))?;
    let wcn_path = require(
        "wcn",
        &paths.wcn,
        systems
            .iter()
            .any(|s| matches!(s, SystemKind::Wcn | SystemKind::WcnCascade)),
    )?;
    Ok(LoadedModels {
        tagger: match tagger_path {
            Some(p) => Some(Tagger::load(open_reader(&p)?)?),
            None => None,
        },
        slm: match slm_path {
            Some(p) => Some(NGramModel::load(open_reader(&p)?)?),
            None => None,
        },
        ranker: match ranker_path {
            Some(p) => Some(Ranker::load(open_reader(&p)?)?),
            None => None,
        },
        wcn: match wcn_path {
            Some(p) => Some(WcnModel::load(open_reader(&p)?)?),
            None => None,
        },
    })
}

fn evaluate_system(
    sys: SystemKind,
    corpus: &Corpus,
    models: &LoadedModels,
) -> Result<EvaluationReport> {
    let tagger = models.tagger.as_ref();
    let report = match sys {
        SystemKind::Onebest => {
            let outputs = cascaded_outputs(corpus, tagger.unwrap(), onebest_or_err)?;
            build_report("1-best (C)", &outputs, corpus)?
        }
        SystemKind::Oracle => {
            let outputs = cascaded_outputs(corpus, tagger.unwrap(), |utt| {
                if utt.nbest.is_empty() {
                    bail!("utterance {} has an empty n-best list", utt.id);
                }
                let nbest = utt.nbest_tokens();
                Ok(nbest[oracle_index(&nbest, &utt.transcript)].clone())
            })?;
            build_report("Oracle (C)", &outputs, corpus)?
        }
        SystemKind::Groundtruth => {
            let outputs =
                cascaded_outputs(corpus, tagger.unwrap(), |utt| Ok(utt.transcript.clone()))?;
            build_report("Ground Truth (C)", &outputs, corpus)?
        }
        SystemKind::Slm => {
            let slm = models.slm.as_ref().unwrap();
            let outputs = cascaded_outputs(corpus, tagger.unwrap(), |utt| {
                if utt.nbest.is_empty() {
                    bail!("utterance {} has an empty n-best list", utt.id);
                }
                let nbest = utt.nbest_tokens();
                Ok(nbest[slm.rerank(&nbest)].clone())
            })?;
            build_report("SLM Rerank (C)", &outputs, corpus)?
        }
        SystemKind::Ranker => {
            let ranker = models.ranker.as_ref().unwrap();
            let outputs = cascaded_outputs(corpus, tagger.unwrap(), |utt| {
                let nbest = utt.nbest_tokens();
                let (_, best) = ranker
                    .rank(&nbest)
                    .with_context(|| format!("ranking utterance {}", utt.id))?;
                Ok(nbest[best].clone())
            })?;
            build_report("CNN-RNN Rerank (C)", &outputs, corpus)?
        }
        SystemKind::Wcn => {
            let wcn = models.wcn.as_ref().unwrap();
            let outputs = joint_outputs(corpus, wcn)?;
            build_report(&wcn_row_name(wcn, false), &outputs, corpus)?
        }
        SystemKind::WcnCascade => {
            let wcn = models.wcn.as_ref().unwrap();
            let outputs = cascaded_outputs(corpus, tagger.unwrap(), |utt| {
                let inf = wcn
                    .infer(&utt.nbest_tokens())
                    .with_context(|| format!("decoding utterance {}", utt.id))?;
                Ok(inf.corrected)
            })?;
            build_report(&wcn_row_name(wcn, true), &outputs, corpus)?
        }
    };
    Ok(report)
}

/// Score the requested systems on a test corpus; write one JSON report
/// per system plus the rendered table.
pub fn evaluate(
    test: &Path,
    systems: &[SystemKind],
    out_dir: &Path,
    model_paths: &EvalModels,
    echo: serde_json::Value,
) -> Result<()> {
    let corpus = load_corpus(test)?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating report directory {}", out_dir.display()))?;
    let models = load_models(systems, model_paths)?;
    let mut reports = Vec::with_capacity(systems.len());
    for sys in systems {
        let report = evaluate_system(*sys, &corpus, &models)?;
        let path = out_dir.join(format!("report-{}.json", sys.key()));
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        fs::write(&path, text)
            .with_context(|| format!("writing report {}", path.display()))?;
        reports.push(report);
    }
    let table = render_table(&reports);
    print!("{table}");
    fs::write(out_dir.join("report.txt"), &table)?;
    write_echo(&out_dir.join("resolved.config.json"), &echo)?;
    Ok(())
}

/// Render every report in a directory as one comparison table; writes
/// `summary.txt` and `summary.json` beside them.
pub fn report(dir: &Path) -> Result<()> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading report directory {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("report-") && n.ends_with(".json"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no report-*.json files found in {}", dir.display());
    }
    let reports: Vec<EvaluationReport> = files
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading report {}", p.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing report {}", p.display()))
        })
        .collect::<Result<_>>()?;
    let table = render_table(&reports);
    print!("{table}");
    fs::write(dir.join("summary.txt"), &table)?;
    let mut combined = serde_json::to_string_pretty(&reports)?;
    combined.push('\n');
    fs::write(dir.join("summary.json"), combined)?;
    println!(
        "wrote {} and {}",
        dir.join("summary.txt").display(),
        dir.join("summary.json").display()
    );
    Ok(())
}
