//! `slu` — spoken-language-understanding pipelines from the command line.
//!
//! One binary wires the library into reproducible runs: corpus synthesis
//! and ingestion, confusion-network alignment, model training, n-best
//! reranking, joint decoding, and multi-system evaluation. Settings come
//! from flags, then an optional `--config` JSON file, then built-in
//! defaults; every command echoes its resolved settings beside its
//! outputs. Exit codes: 0 success, 1 usage error, 2 data error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::error::ErrorKind;
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use serde_json::json;
use slu_core::corpus::SynthConfig;
use slu_core::wcn::CorrectionHead;

use commands::{EvalModels, RerankModel, SystemKind};
use config::{resolve, RunConfig};

/// Correction-head choice exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HeadChoice {
    /// copy a bin entry per column
    Pointer,
    /// generate each column's word from the vocabulary
    Wordgen,
    /// understanding only, no correction output
    None,
}

impl From<HeadChoice> for CorrectionHead {
    fn from(choice: HeadChoice) -> Self {
        match choice {
            HeadChoice::Pointer => CorrectionHead::Pointer,
            HeadChoice::Wordgen => CorrectionHead::WordGen,
            HeadChoice::None => CorrectionHead::None,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "slu",
    version,
    about = "Spoken-language-understanding pipelines over ASR n-best lists",
    propagate_version = true
)]
struct Cli {
    /// JSON run-configuration file (flags override its values)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Base random seed (overrides the config file)
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dialogue corpus with simulated recognition noise
    Synth {
        /// output corpus (JSON lines)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// number of utterances
        #[arg(long, value_name = "N")]
        count: Option<usize>,
        /// hypotheses per n-best list
        #[arg(long, value_name = "N")]
        nbest: Option<usize>,
        /// per-word substitution probability
        #[arg(long, value_name = "P")]
        sub: Option<f64>,
        /// per-word deletion probability
        #[arg(long, value_name = "P")]
        del: Option<f64>,
        /// per-gap insertion probability
        #[arg(long, value_name = "P")]
        ins: Option<f64>,
    },
    /// Validate a JSON-lines corpus and re-emit it in canonical form
    Ingest {
        /// input corpus (JSON lines)
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// output corpus (JSON lines)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// drop utterances unusable for training (empty n-best,
        /// empty hypotheses only, or empty act label)
        #[arg(long)]
        filter: bool,
    },
    /// Build a word confusion network for every utterance
    Align {
        /// input corpus (JSON lines)
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// output networks (JSON lines)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Train the n-gram language model on reference transcripts
    TrainSlm {
        /// training corpus (falls back to the config file's data.train)
        #[arg(long, value_name = "FILE")]
        train: Option<PathBuf>,
        /// model output path
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// n-gram order
        #[arg(long, value_name = "N")]
        order: Option<usize>,
        /// absolute-discount mass
        #[arg(long, value_name = "D")]
        discount: Option<f64>,
        /// minimum count for a word to stay out of <unk>
        #[arg(long, value_name = "N")]
        min_count: Option<usize>,
    },
    /// Train the Bi-LSTM-CRF baseline tagger on reference transcripts
    TrainTagger {
        /// training corpus (falls back to the config file's data.train)
        #[arg(long, value_name = "FILE")]
        train: Option<PathBuf>,
        /// development corpus for epoch selection (data.dev)
        #[arg(long, value_name = "FILE")]
        dev: Option<PathBuf>,
        /// checkpoint output path
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// word-embedding size
        #[arg(long, value_name = "N")]
        embed_dim: Option<usize>,
        /// Bi-LSTM hidden size per direction
        #[arg(long, value_name = "N")]
        hidden: Option<usize>,
        /// training epochs
        #[arg(long, value_name = "N")]
        epochs: Option<usize>,
        /// Adam learning rate
        #[arg(long, value_name = "F")]
        lr: Option<f64>,
    },
    /// Train the hierarchical CNN-RNN hypothesis ranker
    TrainRanker {
        /// training corpus (falls back to the config file's data.train)
        #[arg(long, value_name = "FILE")]
        train: Option<PathBuf>,
        /// development corpus for epoch selection (data.dev)
        #[arg(long, value_name = "FILE")]
        dev: Option<PathBuf>,
        /// checkpoint output path
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// word-embedding size
        #[arg(long, value_name = "N")]
        embed_dim: Option<usize>,
        /// convolution filters per width
        #[arg(long, value_name = "N")]
        conv_filters: Option<usize>,
        /// utterance-level RNN hidden size
        #[arg(long, value_name = "N")]
        hidden: Option<usize>,
        /// hypotheses considered per list
        #[arg(long, value_name = "N")]
        nbest: Option<usize>,
        /// training epochs
        #[arg(long, value_name = "N")]
        epochs: Option<usize>,
        /// Adam learning rate
        #[arg(long, value_name = "F")]
        lr: Option<f64>,
    },
    /// Train the joint confusion-network correction + understanding model
    TrainWcn {
        /// training corpus (falls back to the config file's data.train)
        #[arg(long, value_name = "FILE")]
        train: Option<PathBuf>,
        /// development corpus for epoch selection (data.dev)
        #[arg(long, value_name = "FILE")]
        dev: Option<PathBuf>,
        /// checkpoint output path
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// correction head
        #[arg(long, value_enum, value_name = "HEAD")]
        head: Option<HeadChoice>,
        /// self-attention heads (0 disables attention)
        #[arg(long, value_name = "K")]
        attention_heads: Option<usize>,
        /// token-embedding size
        #[arg(long, value_name = "N")]
        embed_dim: Option<usize>,
        /// encoder Bi-LSTM hidden size per direction
        #[arg(long, value_name = "N")]
        hidden: Option<usize>,
        /// confusion-network rows (bin size)
        #[arg(long, value_name = "N")]
        nbest: Option<usize>,
        /// pointer-loss weight
        #[arg(long, value_name = "W")]
        w_ptr: Option<f64>,
        /// word-generation-loss weight
        #[arg(long, value_name = "W")]
        w_gen: Option<f64>,
        /// tag-loss weight
        #[arg(long, value_name = "W")]
        w_tag: Option<f64>,
        /// act-loss weight
        #[arg(long, value_name = "W")]
        w_act: Option<f64>,
        /// training epochs
        #[arg(long, value_name = "N")]
        epochs: Option<usize>,
        /// Adam learning rate
        #[arg(long, value_name = "F")]
        lr: Option<f64>,
    },
    /// Pick the best hypothesis from each n-best list
    #[command(group = ArgGroup::new("selector").required(true).multiple(false))]
    Rerank {
        /// input corpus (JSON lines)
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// output selections (JSON lines)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// rerank by n-gram language-model perplexity
        #[arg(long, group = "selector", value_name = "FILE")]
        model: Option<PathBuf>,
        /// rerank with the trained CNN-RNN ranker
        #[arg(long, group = "selector", value_name = "FILE")]
        ranker: Option<PathBuf>,
    },
    /// Tag utterances with the baseline tagger
    Tag {
        /// tagger checkpoint
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// input corpus (JSON lines)
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// output tag sequences (JSON lines)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// tag the reference transcript instead of the 1-best hypothesis
        #[arg(long)]
        transcript: bool,
    },
    /// Decode n-best lists with the joint model
    Infer {
        /// joint-model checkpoint
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// input corpus (JSON lines)
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// output decodes (JSON lines)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Score systems on a test corpus and write metric reports
    Evaluate {
        /// test corpus (falls back to the config file's data.test)
        #[arg(long, value_name = "FILE")]
        test: Option<PathBuf>,
        /// systems to score (comma-separated or repeated)
        #[arg(long, value_enum, value_delimiter = ',', required = true, value_name = "SYS")]
        system: Vec<SystemKind>,
        /// report directory
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// baseline tagger checkpoint (cascaded systems)
        #[arg(long, value_name = "FILE")]
        tagger: Option<PathBuf>,
        /// n-gram language model (slm system)
        #[arg(long, value_name = "FILE")]
        slm: Option<PathBuf>,
        /// CNN-RNN ranker checkpoint (ranker system)
        #[arg(long, value_name = "FILE")]
        ranker: Option<PathBuf>,
        /// joint-model checkpoint (wcn systems)
        #[arg(long, value_name = "FILE")]
        wcn: Option<PathBuf>,
    },
    /// Combine previously written reports into one comparison table
    Report {
        /// directory holding report-*.json files
        #[arg(long, value_name = "DIR")]
        dir: PathBuf,
    },
}

/// Resolve an output path: flag, else the config file's out_dir joined
/// with a command-specific default name, else the default name alone.
fn out_path(flag: Option<PathBuf>, file: &RunConfig, default_name: &str) -> PathBuf {
    flag.unwrap_or_else(|| match &file.out_dir {
        Some(dir) => dir.join(default_name),
        None => PathBuf::from(default_name),
    })
}

/// Resolve a required data path from a flag or the config file.
fn data_path(flag: Option<PathBuf>, file: Option<&PathBuf>, name: &str) -> Result<PathBuf> {
    match flag.or_else(|| file.cloned()) {
        Some(p) => Ok(p),
        None => bail!("missing --{name} (set it on the command line or in the config file)"),
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = RunConfig::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Synth { out, count, nbest, sub, del, ins } => {
            let seed = resolve(cli.seed, file.seed, 7);
            let out = out_path(out, &file, "corpus.jsonl");
            let d = SynthConfig::default();
            let cfg = SynthConfig {
                utterance_count: resolve(count, file.synth.count, d.utterance_count),
                nbest_size: resolve(nbest, file.synth.nbest, d.nbest_size),
                sub_prob: resolve(sub, file.synth.sub, d.sub_prob),
                del_prob: resolve(del, file.synth.del, d.del_prob),
                ins_prob: resolve(ins, file.synth.ins, d.ins_prob),
                ..d
            };
            commands::synth(seed, &out, &cfg)
        }
        Cmd::Ingest { input, out, filter } => {
            let out = out_path(out, &file, "ingested.jsonl");
            commands::ingest(&input, &out, filter)
        }
        Cmd::Align { input, out } => {
            let out = out_path(out, &file, "networks.jsonl");
            commands::align(&input, &out)
        }
        Cmd::TrainSlm { train, out, order, discount, min_count } => {
            let train = data_path(train, file.data.train.as_ref(), "train")?;
            let out = out_path(out, &file, "slm.json");
            let flags = config::SlmSection { order, discount, min_count };
            let cfg = config::slm_config(&flags, &file.slm);
            commands::train_slm(&train, &out, &cfg)
        }
        Cmd::TrainTagger { train, dev, out, embed_dim, hidden, epochs, lr } => {
            let train = data_path(train, file.data.train.as_ref(), "train")?;
            let dev = data_path(dev, file.data.dev.as_ref(), "dev")?;
            let out = out_path(out, &file, "tagger.ckpt");
            let flags = config::TaggerSection { embed_dim, hidden, epochs, lr };
            let seed = resolve(cli.seed, file.seed, slu_core::tagger::TaggerConfig::default().seed);
            let cfg = config::tagger_config(seed, &flags, &file.tagger);
            commands::train_tagger_cmd(&train, &dev, &out, &cfg)
        }
        Cmd::TrainRanker { train, dev, out, embed_dim, conv_filters, hidden, nbest, epochs, lr } => {
            let train = data_path(train, file.data.train.as_ref(), "train")?;
            let dev = data_path(dev, file.data.dev.as_ref(), "dev")?;
            let out = out_path(out, &file, "ranker.ckpt");
            let flags = config::RankerSection { embed_dim, conv_filters, hidden, nbest, epochs, lr };
            let seed = resolve(cli.seed, file.seed, slu_core::ranker::RankerConfig::default().seed);
            let cfg = config::ranker_config(seed, &flags, &file.ranker);
            commands::train_ranker_cmd(&train, &dev, &out, &cfg)
        }
        Cmd::TrainWcn {
            train,
            dev,
            out,
            head,
            attention_heads,
            embed_dim,
            hidden,
            nbest,
            w_ptr,
            w_gen,
            w_tag,
            w_act,
            epochs,
            lr,
        } => {
            let train = data_path(train, file.data.train.as_ref(), "train")?;
            let dev = data_path(dev, file.data.dev.as_ref(), "dev")?;
            let out = out_path(out, &file, "wcn.ckpt");
            let flags = config::WcnSection {
                embed_dim,
                hidden,
                nbest,
                attention_heads,
                head: head.map(CorrectionHead::from),
                w_ptr,
                w_gen,
                w_tag,
                w_act,
                epochs,
                lr,
            };
            let seed = resolve(cli.seed, file.seed, slu_core::wcn::WcnModelConfig::default().seed);
            let cfg = config::wcn_config(seed, &flags, &file.wcn);
            commands::train_wcn_cmd(&train, &dev, &out, &cfg)
        }
        Cmd::Rerank { input, out, model, ranker } => {
            let out = out_path(out, &file, "reranked.jsonl");
            let selector = match (model, ranker) {
                (Some(m), None) => RerankModel::Slm(m),
                (None, Some(r)) => RerankModel::Ranker(r),
                _ => unreachable!("clap enforces exactly one selector"),
            };
            commands::rerank(&selector, &input, &out)
        }
        Cmd::Tag { model, input, out, transcript } => {
            let out = out_path(out, &file, "tagged.jsonl");
            commands::tag(&model, &input, &out, transcript)
        }
        Cmd::Infer { model, input, out } => {
            let out = out_path(out, &file, "inferred.jsonl");
            commands::infer(&model, &input, &out)
        }
        Cmd::Evaluate { test, system, out, tagger, slm, ranker, wcn } => {
            let test = data_path(test, file.data.test.as_ref(), "test")?;
            let out = out_path(out, &file, "reports");
            let mut systems: Vec<SystemKind> = Vec::new();
            for sys in system {
                if !systems.contains(&sys) {
                    systems.push(sys);
                }
            }
            let models = EvalModels { tagger, slm, ranker, wcn };
            let echo = json!({
                "command": "evaluate",
                "test": test,
                "out": out,
                "systems": systems.iter().map(|s| s.key()).collect::<Vec<_>>(),
                "models": {
                    "tagger": models.tagger,
                    "slm": models.slm,
                    "ranker": models.ranker,
                    "wcn": models.wcn,
                },
            });
            commands::evaluate(&test, &systems, &out, &models, echo)
        }
        Cmd::Report { dir } => commands::report(&dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
