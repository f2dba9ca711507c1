//! Dialogue-turn data model: JSON-lines ingestion, filtering, label
//! transformations, IOB tagging, and a seeded synthetic corpus generator.
//!
//! One corpus line is one utterance:
//!
//! ```json
//! {"id": "t1", "context": [{"speaker": "system", "text": "..."}],
//!  "nbest": [{"text": "thai food", "score": -1.2}],
//!  "transcript": "thai food", "dialogue_act": "inform_food",
//!  "slots": [{"type": "food", "start": 0, "end": 1}]}
//! ```
//!
//! All text is lowercased and whitespace-tokenized on ingestion. Slot
//! indices refer to whitespace tokens of the normalized transcript.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Epsilon placeholder: a confusion-network cell where a hypothesis
/// contributes no word.
pub const EPS: &str = "<eps>";
/// Unknown-word token used by every model vocabulary.
pub const UNK: &str = "<unk>";
/// End-of-sequence token (language model terminator, intent position).
pub const EOS: &str = "<eos>";
/// Sentence-start padding used by the n-gram model.
pub const BOS: &str = "<s>";

/// Transcripts that mark non-speech turns; utterances with these are dropped.
pub const FILTERED_TRANSCRIPTS: [&str; 6] = [
    "noise",
    "unintelligible",
    "silence",
    "system",
    "inaudible",
    "hello and welcome",
];

/// A single lowercase, whitespace-free word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(String);

impl Token {
    /// Validating constructor: rejects empty strings and internal whitespace.
    pub fn new(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidInput("empty token".into()));
        }
        if s.chars().any(char::is_whitespace) {
            return Err(Error::InvalidInput(format!("token contains whitespace: {s:?}")));
        }
        Ok(Token(s.to_lowercase()))
    }

    pub fn eps() -> Self {
        Token(EPS.into())
    }

    pub fn unk() -> Self {
        Token(UNK.into())
    }

    pub fn eos() -> Self {
        Token(EOS.into())
    }

    pub fn bos() -> Self {
        Token(BOS.into())
    }

    pub fn is_eps(&self) -> bool {
        self.0 == EPS
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_reserved(&self) -> bool {
        matches!(self.0.as_str(), EPS | UNK | EOS | BOS)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::ops::Deref for Token {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

/// Lowercase + split on whitespace. Empty input gives an empty sequence.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.split_whitespace()
        .map(|w| Token(w.to_lowercase()))
        .collect()
}

/// Render a token sequence back to a space-joined string.
pub fn detokenize(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(Token::as_str)
        .collect::<Vec<_>>()
        .join(" ")
}

/// A typed slot span over transcript tokens, `start` inclusive, `end` exclusive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotSpan {
    #[serde(rename = "type")]
    pub slot_type: String,
    pub start: usize,
    pub end: usize,
}

impl SlotSpan {
    pub fn new(slot_type: impl Into<String>, start: usize, end: usize) -> Self {
        SlotSpan { slot_type: slot_type.into(), start, end }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    System,
    User,
}

/// One prior dialogue turn, carried for format completeness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextTurn {
    pub speaker: Speaker,
    pub tokens: Vec<Token>,
}

/// One ASR hypothesis with its (optional) decoder score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub tokens: Vec<Token>,
    pub score: Option<f64>,
}

/// One dialogue turn: n-best hypotheses, gold transcript, act, and slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    #[serde(default)]
    pub context: Vec<ContextTurn>,
    pub nbest: Vec<Hypothesis>,
    pub transcript: Vec<Token>,
    pub dialogue_act: String,
    #[serde(default)]
    pub slots: Vec<SlotSpan>,
}

impl Utterance {
    /// The 1-best hypothesis token sequence (empty when the n-best is empty).
    pub fn onebest(&self) -> &[Token] {
        self.nbest.first().map(|h| h.tokens.as_slice()).unwrap_or(&[])
    }

    /// Token sequences of all hypotheses.
    pub fn nbest_tokens(&self) -> Vec<Vec<Token>> {
        self.nbest.iter().map(|h| h.tokens.clone()).collect()
    }
}

/// An immutable utterance collection with derived inventories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub utterances: Vec<Utterance>,
    pub act_inventory: BTreeSet<String>,
    pub slot_inventory: BTreeSet<String>,
    /// Multiset union of all transcript and hypothesis tokens.
    pub vocabulary: BTreeMap<Token, usize>,
}

impl Corpus {
    pub fn from_utterances(utterances: Vec<Utterance>) -> Self {
        let mut act_inventory = BTreeSet::new();
        let mut slot_inventory = BTreeSet::new();
        let mut vocabulary: BTreeMap<Token, usize> = BTreeMap::new();
        for utt in &utterances {
            if !utt.dialogue_act.is_empty() {
                act_inventory.insert(utt.dialogue_act.clone());
            }
            for slot in &utt.slots {
                slot_inventory.insert(slot.slot_type.clone());
            }
            for tok in utt
                .transcript
                .iter()
                .chain(utt.nbest.iter().flat_map(|h| h.tokens.iter()))
            {
                *vocabulary.entry(tok.clone()).or_insert(0) += 1;
            }
        }
        Corpus { utterances, act_inventory, slot_inventory, vocabulary }
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Raw JSON-lines schema
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct RawRecord {
    id: String,
    #[serde(default)]
    context: Vec<RawTurn>,
    nbest: Vec<RawHyp>,
    transcript: String,
    dialogue_act: String,
    #[serde(default)]
    slots: Vec<RawSlot>,
}

#[derive(Debug, Deserialize)]
struct RawTurn {
    speaker: Speaker,
    text: String,
}

#[derive(Debug, Deserialize)]
struct RawHyp {
    text: String,
    #[serde(default)]
    score: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RawSlot {
    #[serde(rename = "type")]
    slot_type: String,
    start: usize,
    end: usize,
}

#[derive(Debug, Serialize)]
struct RawRecordOut<'a> {
    id: &'a str,
    context: Vec<serde_json::Value>,
    nbest: Vec<serde_json::Value>,
    transcript: String,
    dialogue_act: &'a str,
    slots: &'a [SlotSpan],
}

fn check_no_reserved(tokens: &[Token], line: usize, field: &str) -> Result<()> {
    if let Some(tok) = tokens.iter().find(|t| t.is_reserved()) {
        return Err(Error::Parse {
            line,
            msg: format!("reserved token {tok:?} in field `{field}`"),
        });
    }
    Ok(())
}

fn validate_spans(spans: &[SlotSpan], transcript_len: usize, line: usize) -> Result<()> {
    let mut sorted: Vec<&SlotSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    for span in &sorted {
        if span.start >= span.end || span.end > transcript_len {
            return Err(Error::Parse {
                line,
                msg: format!(
                    "slot span {}..{} out of range for transcript of {} tokens",
                    span.start, span.end, transcript_len
                ),
            });
        }
    }
    for pair in sorted.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(Error::Parse { line, msg: "overlapping slot spans".into() });
        }
    }
    Ok(())
}

fn utterance_from_raw(raw: RawRecord, line: usize) -> Result<Utterance> {
    let transcript = tokenize(&raw.transcript);
    check_no_reserved(&transcript, line, "transcript")?;
    let mut nbest = Vec::with_capacity(raw.nbest.len());
    for hyp in raw.nbest {
        let tokens = tokenize(&hyp.text);
        check_no_reserved(&tokens, line, "nbest")?;
        nbest.push(Hypothesis { tokens, score: hyp.score });
    }
    let context = raw
        .context
        .into_iter()
        .map(|t| ContextTurn { speaker: t.speaker, tokens: tokenize(&t.text) })
        .collect();
    validate_spans(
        &raw.slots.iter().map(|s| SlotSpan::new(s.slot_type.clone(), s.start, s.end)).collect::<Vec<_>>(),
        transcript.len(),
        line,
    )?;
    Ok(Utterance {
        id: raw.id,
        context,
        nbest,
        transcript,
        dialogue_act: raw.dialogue_act.trim().to_lowercase(),
        slots: raw.slots.into_iter().map(|s| SlotSpan::new(s.slot_type, s.start, s.end)).collect(),
    })
}

/// Parse a JSON-lines corpus file. Preserves file order; lowercases and
/// whitespace-tokenizes all text fields. Blank lines are skipped.
pub fn parse_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_corpus_reader(BufReader::new(file))
}

/// Same as [`parse_corpus`] but over any reader (used by tests and stdin).
pub fn parse_corpus_reader(reader: impl BufRead) -> Result<Corpus> {
    let mut utterances = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
        if !seen_ids.insert(raw.id.clone()) {
            return Err(Error::DuplicateId(raw.id));
        }
        utterances.push(utterance_from_raw(raw, line_no)?);
    }
    Ok(Corpus::from_utterances(utterances))
}

/// Serialize a corpus back to the JSON-lines format.
pub fn write_corpus(corpus: &Corpus, mut out: impl Write) -> Result<()> {
    for utt in &corpus.utterances {
        let rec = RawRecordOut {
            id: &utt.id,
            context: utt
                .context
                .iter()
                .map(|t| {
                    serde_json::json!({
                        "speaker": t.speaker,
                        "text": detokenize(&t.tokens),
                    })
                })
                .collect(),
            nbest: utt
                .nbest
                .iter()
                .map(|h| serde_json::json!({ "text": detokenize(&h.tokens), "score": h.score }))
                .collect(),
            transcript: detokenize(&utt.transcript),
            dialogue_act: &utt.dialogue_act,
            slots: &utt.slots,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Drop utterances with an empty n-best, an empty dialogue act, or a
/// transcript in [`FILTERED_TRANSCRIPTS`]. Total and idempotent.
pub fn filter_utterances(corpus: &Corpus) -> Corpus {
    let retained = corpus
        .utterances
        .iter()
        .filter(|utt| {
            if utt.nbest.is_empty() || utt.nbest.iter().all(|h| h.tokens.is_empty()) {
                return false;
            }
            if utt.dialogue_act.is_empty() {
                return false;
            }
            let text = detokenize(&utt.transcript);
            !FILTERED_TRANSCRIPTS.contains(&text.as_str())
        })
        .cloned()
        .collect();
    Corpus::from_utterances(retained)
}

/// Combine a base dialogue act with the slot types it targets:
/// `request` + `{pricerange}` becomes `request_pricerange`. With no slot
/// types the act passes through unchanged; multiple types are appended in
/// sorted order so the label is deterministic.
pub fn combine_act_label(act: &str, slot_types: &BTreeSet<String>) -> String {
    if slot_types.is_empty() {
        return act.to_string();
    }
    let mut label = act.to_string();
    for ty in slot_types {
        label.push('_');
        label.push_str(ty);
    }
    label
}

/// Flatten an id-assigned vocabulary into a list ordered by id, the form
/// model checkpoints store so ids survive a save/load round trip.
pub fn vocab_to_list(vocab: &BTreeMap<Token, usize>) -> Vec<String> {
    let mut by_id: Vec<(&Token, usize)> = vocab.iter().map(|(t, i)| (t, *i)).collect();
    by_id.sort_by_key(|(_, i)| *i);
    by_id.iter().map(|(t, _)| t.to_string()).collect()
}

/// Rebuild the id map from a list written by [`vocab_to_list`].
pub fn vocab_from_list(list: &[String]) -> Result<BTreeMap<Token, usize>> {
    let mut vocab = BTreeMap::new();
    for (i, w) in list.iter().enumerate() {
        let tok = Token(w.clone());
        if vocab.insert(tok, i).is_some() {
            return Err(Error::InvalidInput(format!("duplicate vocabulary entry {w:?}")));
        }
    }
    Ok(vocab)
}

/// IOB tag strings for a transcript: `B-<type>` opens a span, `I-<type>`
/// continues it, `O` is outside every span.
pub fn to_iob(transcript: &[Token], slots: &[SlotSpan]) -> Result<Vec<String>> {
    validate_spans(slots, transcript.len(), 0).map_err(|_| {
        Error::InvalidInput("invalid or overlapping slot spans for transcript".into())
    })?;
    let mut tags = vec!["O".to_string(); transcript.len()];
    for span in slots {
        tags[span.start] = format!("B-{}", span.slot_type);
        for tag in tags.iter_mut().take(span.end).skip(span.start + 1) {
            *tag = format!("I-{}", span.slot_type);
        }
    }
    Ok(tags)
}

/// Recover slot spans from a valid IOB tag sequence. Errors on an `I-` tag
/// with no matching `B-`/`I-` predecessor; use [`repair_iob`] first for
/// model output.
pub fn spans_from_iob(tags: &[String]) -> Result<Vec<SlotSpan>> {
    let mut spans = Vec::new();
    let mut open: Option<SlotSpan> = None;
    for (i, tag) in tags.iter().enumerate() {
        if let Some(ty) = tag.strip_prefix("B-") {
            if let Some(span) = open.take() {
                spans.push(span);
            }
            open = Some(SlotSpan::new(ty, i, i + 1));
        } else if let Some(ty) = tag.strip_prefix("I-") {
            match open.as_mut() {
                Some(span) if span.slot_type == ty => span.end = i + 1,
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "orphan tag {tag} at position {i}"
                    )))
                }
            }
        } else if tag == "O" {
            if let Some(span) = open.take() {
                spans.push(span);
            }
        } else {
            return Err(Error::InvalidInput(format!("unknown IOB tag {tag:?}")));
        }
    }
    if let Some(span) = open.take() {
        spans.push(span);
    }
    Ok(spans)
}

/// Rewrite any `I-x` without a preceding `B-x`/`I-x` of the same type to
/// `B-x`, making model output parseable by [`spans_from_iob`].
pub fn repair_iob(tags: &[String]) -> Vec<String> {
    let mut repaired = Vec::with_capacity(tags.len());
    let mut prev_type: Option<String> = None;
    for tag in tags {
        if let Some(ty) = tag.strip_prefix("I-") {
            if prev_type.as_deref() != Some(ty) {
                repaired.push(format!("B-{ty}"));
            } else {
                repaired.push(tag.clone());
            }
            prev_type = Some(ty.to_string());
        } else {
            prev_type = tag.strip_prefix("B-").map(str::to_string);
            repaired.push(tag.clone());
        }
    }
    repaired
}

// ---------------------------------------------------------------------------
// Synthetic corpus generator
// ---------------------------------------------------------------------------

pub mod synth;
pub use synth::{generate_synthetic, Grammar, SynthConfig};

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn toks(s: &str) -> Vec<Token> {
        tokenize(s)
    }

    const LINE_A: &str = r#"{"id":"a","context":[],"nbest":[{"text":"thai food","score":-0.5}],"transcript":"thai food","dialogue_act":"inform_food","slots":[{"type":"food","start":0,"end":1}]}"#;
    const LINE_B: &str = r#"{"id":"b","context":[{"speaker":"system","text":"What food?"}],"nbest":[{"text":"cheap food"}],"transcript":"cheap food","dialogue_act":"inform_pricerange","slots":[]}"#;

    #[test]
    fn parse_two_valid_lines() {
        let input = format!("{LINE_A}\n{LINE_B}\n");
        let corpus = parse_corpus_reader(Cursor::new(input)).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.utterances[0].id, "a");
        assert_eq!(corpus.utterances[1].context[0].speaker, Speaker::System);
        assert_eq!(corpus.act_inventory.len(), 2);
        assert_eq!(corpus.slot_inventory.len(), 1);
    }

    #[test]
    fn parse_missing_transcript_names_line_and_field() {
        let input = format!(
            "{LINE_A}\n{}\n",
            r#"{"id":"c","nbest":[{"text":"x"}],"dialogue_act":"ack"}"#
        );
        let err = parse_corpus_reader(Cursor::new(input)).unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("transcript"), "message should name the field: {msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_normalizes_case_and_whitespace() {
        let input = r#"{"id":"a","nbest":[{"text":"Thai  Food"}],"transcript":"Thai  Food","dialogue_act":"inform_food"}"#;
        let corpus = parse_corpus_reader(Cursor::new(input)).unwrap();
        assert_eq!(corpus.utterances[0].transcript, toks("thai food"));
        assert_eq!(corpus.utterances[0].nbest[0].tokens, toks("thai food"));
    }

    #[test]
    fn parse_rejects_duplicate_id() {
        let input = format!("{LINE_A}\n{LINE_A}\n");
        let err = parse_corpus_reader(Cursor::new(input)).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(id) if id == "a"));
    }

    #[test]
    fn parse_rejects_reserved_tokens() {
        let input = r#"{"id":"a","nbest":[{"text":"<eps> food"}],"transcript":"thai","dialogue_act":"x"}"#;
        assert!(parse_corpus_reader(Cursor::new(input)).is_err());
    }

    #[test]
    fn parse_rejects_overlapping_spans() {
        let input = r#"{"id":"a","nbest":[{"text":"a b c"}],"transcript":"a b c","dialogue_act":"x","slots":[{"type":"food","start":0,"end":2},{"type":"area","start":1,"end":3}]}"#;
        assert!(parse_corpus_reader(Cursor::new(input)).is_err());
    }

    #[test]
    fn write_then_parse_round_trips() {
        let input = format!("{LINE_A}\n{LINE_B}\n");
        let corpus = parse_corpus_reader(Cursor::new(&input)).unwrap();
        let mut buf = Vec::new();
        write_corpus(&corpus, &mut buf).unwrap();
        let reparsed = parse_corpus_reader(Cursor::new(buf)).unwrap();
        assert_eq!(corpus, reparsed);
    }

    fn utt(id: &str, transcript: &str, nbest: &[&str], act: &str) -> Utterance {
        Utterance {
            id: id.into(),
            context: vec![],
            nbest: nbest
                .iter()
                .map(|h| Hypothesis { tokens: toks(h), score: None })
                .collect(),
            transcript: toks(transcript),
            dialogue_act: act.into(),
            slots: vec![],
        }
    }

    #[test]
    fn filter_drops_noise_empty_nbest_and_empty_act() {
        let corpus = Corpus::from_utterances(vec![
            utt("1", "noise", &["noise"], "x"),
            utt("2", "thai food", &[], "x"),
            utt("3", "thai food", &["thai food"], ""),
            utt("4", "hello and welcome", &["hello"], "x"),
            utt("5", "thai food", &["thai food", "tie food"], "inform_food"),
        ]);
        let filtered = filter_utterances(&corpus);
        assert_eq!(filtered.len(), 1);
        assert_eq!(filtered.utterances[0].id, "5");
    }

    #[test]
    fn filter_is_idempotent() {
        let corpus = Corpus::from_utterances(vec![
            utt("1", "silence", &["x"], "x"),
            utt("2", "thai food", &["thai food"], "inform_food"),
        ]);
        let once = filter_utterances(&corpus);
        let twice = filter_utterances(&once);
        assert_eq!(once, twice);
    }

    #[test]
    fn filtered_vocabulary_matches_retained_utterances() {
        let corpus = Corpus::from_utterances(vec![
            utt("1", "noise", &["zonk"], "x"),
            utt("2", "thai food", &["thai foods"], "inform_food"),
        ]);
        let filtered = filter_utterances(&corpus);
        let words: Vec<&str> = filtered.vocabulary.keys().map(|t| t.as_str()).collect();
        assert_eq!(words, vec!["food", "foods", "thai"]);
        assert_eq!(filtered.vocabulary[&Token::new("thai").unwrap()], 2);
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn combine_act_examples() {
        assert_eq!(combine_act_label("request", &set(&["pricerange"])), "request_pricerange");
        assert_eq!(combine_act_label("ack", &set(&[])), "ack");
        assert_eq!(combine_act_label("request", &set(&["food"])), "request_food");
        // multiple slot types append in sorted order
        assert_eq!(combine_act_label("inform", &set(&["food", "area"])), "inform_area_food");
    }

    #[test]
    fn iob_examples() {
        let tags =
            to_iob(&toks("cheap thai food"), &[SlotSpan::new("food", 1, 2)]).unwrap();
        assert_eq!(tags, vec!["O", "B-food", "O"]);

        let tags = to_iob(&toks("north part"), &[SlotSpan::new("area", 0, 2)]).unwrap();
        assert_eq!(tags, vec!["B-area", "I-area"]);

        let tags = to_iob(&toks("hello"), &[]).unwrap();
        assert_eq!(tags, vec!["O"]);
    }

    #[test]
    fn iob_rejects_overlap() {
        let spans = [SlotSpan::new("food", 0, 2), SlotSpan::new("area", 1, 3)];
        assert!(to_iob(&toks("a b c"), &spans).is_err());
    }

    #[test]
    fn iob_round_trip() {
        let transcript = toks("im looking for cheap thai food in the north");
        let slots = vec![
            SlotSpan::new("pricerange", 3, 4),
            SlotSpan::new("food", 4, 5),
            SlotSpan::new("area", 8, 9),
        ];
        let tags = to_iob(&transcript, &slots).unwrap();
        assert_eq!(spans_from_iob(&tags).unwrap(), slots);
    }

    #[test]
    fn spans_from_iob_rejects_orphan_i() {
        let tags: Vec<String> = ["O", "I-food"].iter().map(|s| s.to_string()).collect();
        assert!(spans_from_iob(&tags).is_err());
    }

    #[test]
    fn repair_rewrites_orphan_i_to_b() {
        let tags: Vec<String> =
            ["O", "I-food", "I-food", "B-area", "I-food"].iter().map(|s| s.to_string()).collect();
        let repaired = repair_iob(&tags);
        assert_eq!(repaired, vec!["O", "B-food", "I-food", "B-area", "B-food"]);
        assert!(spans_from_iob(&repaired).is_ok());
    }

    #[test]
    fn token_rejects_empty_and_whitespace() {
        assert!(Token::new("").is_err());
        assert!(Token::new("two words").is_err());
        assert_eq!(Token::new("Thai").unwrap().as_str(), "thai");
    }
}
