//! Evaluation metrics: WER, SER, DA-Acc, Slot-F1, TER, FER, oracle
//! selection, and report assembly/rendering.
//!
//! WER is corpus-level (micro): summed edit distance over summed reference
//! length. Slot-F1 is span-level and positional; frame error compares
//! (type, surface value) slot sets so corrected output need not share the
//! transcript's token positions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::align::{levenshtein_align, levenshtein_distance, EditOp};
use crate::corpus::{repair_iob, spans_from_iob, Corpus, SlotSpan, Token};
use crate::error::{Error, Result};

/// Which space per-token tags were scored in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagSpace {
    /// confusion-network columns (joint WCN models)
    Column,
    /// transcript tokens (cascaded taggers)
    Transcript,
}

/// One Table-style result row. All ratios live in [0, 1] and render as
/// percentages with two decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub system_name: String,
    pub wer: f64,
    pub ser: f64,
    pub da_acc: f64,
    pub slot_f1: f64,
    pub ter: f64,
    pub fer: f64,
    pub utterance_count: usize,
    pub tag_space: TagSpace,
}

/// Corpus-level WER: total edit distance / total reference tokens.
pub fn corpus_wer(pairs: &[(Vec<Token>, Vec<Token>)]) -> Result<f64> {
    let total_ref: usize = pairs.iter().map(|(r, _)| r.len()).sum();
    if total_ref == 0 {
        return Err(Error::InvalidInput("zero total reference tokens".into()));
    }
    let total_edits: usize =
        pairs.iter().map(|(r, h)| levenshtein_distance(r, h)).sum();
    Ok(total_edits as f64 / total_ref as f64)
}

/// Fraction of pairs whose hypothesis differs from the reference.
pub fn sentence_error_rate(pairs: &[(Vec<Token>, Vec<Token>)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no sentence pairs".into()));
    }
    let errors = pairs.iter().filter(|(r, h)| r != h).count();
    Ok(errors as f64 / pairs.len() as f64)
}

/// Index of the hypothesis closest to the transcript (ties -> lowest index).
pub fn oracle_index(nbest: &[Vec<Token>], transcript: &[Token]) -> usize {
    let mut best = 0;
    let mut best_dist = usize::MAX;
    for (i, hyp) in nbest.iter().enumerate() {
        let d = levenshtein_distance(transcript, hyp);
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    best
}

/// Micro-averaged span-level F1. A predicted span is correct iff its type,
/// start, and end all match a gold span. Returns 0 when P + R = 0.
pub fn slot_f1(predicted: &[Vec<SlotSpan>], gold: &[Vec<SlotSpan>]) -> f64 {
    let mut tp = 0usize;
    let mut pred_total = 0usize;
    let mut gold_total = 0usize;
    for (pred, gold) in predicted.iter().zip(gold) {
        pred_total += pred.len();
        gold_total += gold.len();
        let gold_set: BTreeSet<&SlotSpan> = gold.iter().collect();
        tp += pred.iter().filter(|s| gold_set.contains(s)).count();
    }
    if pred_total == 0 && gold_total == 0 {
        return 1.0;
    }
    if tp == 0 {
        return 0.0;
    }
    let p = tp as f64 / pred_total as f64;
    let r = tp as f64 / gold_total as f64;
    2.0 * p * r / (p + r)
}

/// Micro tag error rate over equal-length per-utterance tag sequences.
pub fn tag_error_rate(predicted: &[Vec<String>], gold: &[Vec<String>]) -> Result<f64> {
    let mut errors = 0usize;
    let mut total = 0usize;
    for (i, (pred, gold)) in predicted.iter().zip(gold).enumerate() {
        if pred.len() != gold.len() {
            return Err(Error::Shape {
                expected: format!("{} tags in utterance {i}", gold.len()),
                got: format!("{}", pred.len()),
            });
        }
        total += gold.len();
        errors += pred.iter().zip(gold).filter(|(p, g)| p != g).count();
    }
    if total == 0 {
        return Err(Error::InvalidInput("no tags to score".into()));
    }
    Ok(errors as f64 / total as f64)
}

/// A semantic frame: dialogue act plus the (type, value) slot set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Frame {
    pub act: String,
    pub slots: BTreeSet<(String, String)>,
}

impl Frame {
    /// Extract a frame from a token sequence and its IOB tags (values are
    /// the space-joined span tokens).
    pub fn from_tagged(act: &str, tokens: &[Token], tags: &[String]) -> Self {
        let repaired = repair_iob(tags);
        let spans = spans_from_iob(&repaired).unwrap_or_default();
        let slots = spans
            .iter()
            .map(|s| {
                let value = tokens[s.start..s.end]
                    .iter()
                    .map(Token::as_str)
                    .collect::<Vec<_>>()
                    .join(" ");
                (s.slot_type.clone(), value)
            })
            .collect();
        Frame { act: act.to_string(), slots }
    }
}

/// Fraction of utterances whose act or slot set is wrong.
pub fn frame_error_rate(predicted: &[Frame], gold: &[Frame]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != gold.len() {
        return Err(Error::InvalidInput(format!(
            "frame lists empty or mismatched: {} vs {}",
            predicted.len(),
            gold.len()
        )));
    }
    let errors = predicted.iter().zip(gold).filter(|(p, g)| p != g).count();
    Ok(errors as f64 / predicted.len() as f64)
}

/// Exact-match dialogue act accuracy.
pub fn da_accuracy(predicted: &[String], gold: &[String]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != gold.len() {
        return Err(Error::InvalidInput(format!(
            "act lists empty or mismatched: {} vs {}",
            predicted.len(),
            gold.len()
        )));
    }
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / predicted.len() as f64)
}

/// Project tags from a system's token sequence onto reference tokens via
/// Levenshtein alignment: matched/substituted reference positions take the
/// system token's tag, deleted positions take `O`, system insertions drop.
pub fn project_tags_to_reference(
    reference: &[Token],
    sys_tokens: &[Token],
    sys_tags: &[String],
) -> Vec<String> {
    let script = levenshtein_align(reference, sys_tokens);
    let mut out = vec!["O".to_string(); reference.len()];
    for op in &script.ops {
        if let EditOp::Match { ref_idx, hyp_idx } | EditOp::Substitute { ref_idx, hyp_idx } =
            *op
        {
            if let Some(tag) = sys_tags.get(hyp_idx) {
                out[ref_idx] = tag.clone();
            }
        }
    }
    out
}

/// Everything a system produced for one utterance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemOutput {
    pub id: String,
    /// corrected or selected token sequence
    pub tokens: Vec<Token>,
    /// IOB tags over `tokens`
    pub tags: Vec<String>,
    pub act: String,
    /// (predicted, gold) per-column tags for WCN systems; drives
    /// column-space TER when present
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_tags: Option<(Vec<String>, Vec<String>)>,
}

/// Assemble a full report for one system over a gold corpus.
///
/// TER is computed in column space when every output carries column tags,
/// otherwise in transcript space by aligning the system tokens onto the
/// transcript; the report records which.
pub fn build_report(
    system_name: &str,
    outputs: &[SystemOutput],
    gold: &Corpus,
) -> Result<EvaluationReport> {
    let by_id: BTreeMap<&str, &SystemOutput> =
        outputs.iter().map(|o| (o.id.as_str(), o)).collect();
    let mut pairs = Vec::with_capacity(gold.len());
    let mut pred_acts = Vec::with_capacity(gold.len());
    let mut gold_acts = Vec::with_capacity(gold.len());
    let mut pred_spans = Vec::with_capacity(gold.len());
    let mut gold_spans = Vec::with_capacity(gold.len());
    let mut pred_tags = Vec::with_capacity(gold.len());
    let mut gold_tags = Vec::with_capacity(gold.len());
    let mut pred_frames = Vec::with_capacity(gold.len());
    let mut gold_frames = Vec::with_capacity(gold.len());

    let column_space = !outputs.is_empty() && outputs.iter().all(|o| o.column_tags.is_some());

    for utt in &gold.utterances {
        let out = by_id
            .get(utt.id.as_str())
            .ok_or_else(|| Error::MissingOutput(utt.id.clone()))?;
        pairs.push((utt.transcript.clone(), out.tokens.clone()));
        pred_acts.push(out.act.clone());
        gold_acts.push(utt.dialogue_act.clone());

        let repaired = repair_iob(&out.tags);
        pred_spans.push(spans_from_iob(&repaired).unwrap_or_default());
        gold_spans.push(utt.slots.clone());

        if column_space {
            let (pred, gold_cols) = out.column_tags.clone().unwrap();
            pred_tags.push(pred);
            gold_tags.push(gold_cols);
        } else {
            pred_tags.push(project_tags_to_reference(&utt.transcript, &out.tokens, &out.tags));
            let gold_tag_seq = crate::corpus::to_iob(&utt.transcript, &utt.slots)?;
            gold_tags.push(gold_tag_seq);
        }

        pred_frames.push(Frame::from_tagged(&out.act, &out.tokens, &out.tags));
        let gold_tag_seq = crate::corpus::to_iob(&utt.transcript, &utt.slots)?;
        gold_frames.push(Frame::from_tagged(&utt.dialogue_act, &utt.transcript, &gold_tag_seq));
    }

    Ok(EvaluationReport {
        system_name: system_name.to_string(),
        wer: corpus_wer(&pairs)?,
        ser: sentence_error_rate(&pairs)?,
        da_acc: da_accuracy(&pred_acts, &gold_acts)?,
        slot_f1: slot_f1(&pred_spans, &gold_spans),
        ter: tag_error_rate(&pred_tags, &gold_tags)?,
        fer: frame_error_rate(&pred_frames, &gold_frames)?,
        utterance_count: gold.len(),
        tag_space: if column_space { TagSpace::Column } else { TagSpace::Transcript },
    })
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

/// Render one or more reports as an aligned plain-text table in the
/// fixed column order WER, SER, DA-Acc, Slot-F1, TER, FER.
pub fn render_table(reports: &[EvaluationReport]) -> String {
    let header = ["Experiments", "WER", "SER", "DA-Acc", "Slot-F1", "TER", "FER"];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in reports {
        rows.push(vec![
            r.system_name.clone(),
            pct(r.wer),
            pct(r.ser),
            pct(r.da_acc),
            pct(r.slot_f1),
            pct(r.ter),
            pct(r.fer),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if c == 0 {
                    format!("{:<width$}", cell, width = widths[c])
                } else {
                    format!("{:>width$}", cell, width = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn toks(s: &str) -> Vec<Token> {
        tokenize(s)
    }

    fn pair(r: &str, h: &str) -> (Vec<Token>, Vec<Token>) {
        (toks(r), toks(h))
    }

    #[test]
    fn wer_examples() {
        assert_eq!(corpus_wer(&[pair("a b c", "a x c")]).unwrap(), 1.0 / 3.0);
        assert_eq!(corpus_wer(&[pair("a b", "a b"), pair("c", "c")]).unwrap(), 0.0);
        let wer = corpus_wer(&[pair("a b", "a"), pair("c", "c d")]).unwrap();
        assert!((wer - 2.0 / 3.0).abs() < 1e-12);
        assert!(corpus_wer(&[pair("", "a")]).is_err());
    }

    #[test]
    fn ser_examples() {
        assert_eq!(sentence_error_rate(&[pair("a", "a")]).unwrap(), 0.0);
        assert_eq!(sentence_error_rate(&[pair("a", "b")]).unwrap(), 1.0);
        assert_eq!(
            sentence_error_rate(&[pair("a", "a"), pair("a", "b")]).unwrap(),
            0.5
        );
        assert!(sentence_error_rate(&[]).is_err());
    }

    #[test]
    fn oracle_examples() {
        // distances 1, 0, 1 -> index 1
        let nbest = vec![toks("a b"), toks("a c"), toks("a")];
        assert_eq!(oracle_index(&nbest, &toks("a c")), 1);
        // all identical -> tie-break to 0
        let nbest = vec![toks("x"), toks("x"), toks("x")];
        assert_eq!(oracle_index(&nbest, &toks("y")), 0);
    }

    #[test]
    fn slot_f1_examples() {
        let gold = vec![vec![SlotSpan::new("food", 1, 2), SlotSpan::new("area", 3, 4)]];
        let pred_all = gold.clone();
        assert_eq!(slot_f1(&pred_all, &gold), 1.0);

        let pred_none = vec![vec![]];
        assert_eq!(slot_f1(&pred_none, &gold), 0.0);

        let pred_half = vec![vec![SlotSpan::new("food", 1, 2)]];
        let f1 = slot_f1(&pred_half, &gold);
        assert!((f1 - 2.0 / 3.0).abs() < 1e-12, "P=1, R=0.5 -> F1=2/3, got {f1}");
    }

    #[test]
    fn ter_examples() {
        let tags = |v: &[&str]| -> Vec<String> { v.iter().map(|s| s.to_string()).collect() };
        assert_eq!(
            tag_error_rate(&[tags(&["O", "B-food"])], &[tags(&["O", "B-food"])]).unwrap(),
            0.0
        );
        assert_eq!(
            tag_error_rate(&[tags(&["O", "B-food"])], &[tags(&["O", "O"])]).unwrap(),
            0.5
        );
        // micro average over utterances of lengths 3 and 1
        let ter = tag_error_rate(
            &[tags(&["O", "O", "B-food"]), tags(&["O"])],
            &[tags(&["O", "O", "O"]), tags(&["O"])],
        )
        .unwrap();
        assert_eq!(ter, 0.25);
        assert!(tag_error_rate(&[tags(&["O"])], &[tags(&["O", "O"])]).is_err());
    }

    #[test]
    fn frame_error_examples() {
        let tags = |v: &[&str]| -> Vec<String> { v.iter().map(|s| s.to_string()).collect() };
        let gold = Frame::from_tagged(
            "inform_food",
            &toks("thai food"),
            &tags(&["B-food", "O"]),
        );
        let same = gold.clone();
        assert_eq!(frame_error_rate(&[same], &[gold.clone()]).unwrap(), 0.0);

        // act right, slot value wrong -> frame error
        let wrong_value = Frame::from_tagged(
            "inform_food",
            &toks("tie food"),
            &tags(&["B-food", "O"]),
        );
        assert_eq!(frame_error_rate(&[wrong_value], &[gold]).unwrap(), 1.0);
    }

    #[test]
    fn frame_value_extraction_spans_multiple_tokens() {
        let tags: Vec<String> =
            ["O", "B-food", "I-food"].iter().map(|s| s.to_string()).collect();
        let frame = Frame::from_tagged("x", &toks("want modern european"), &tags);
        assert!(frame.slots.contains(&("food".to_string(), "modern european".to_string())));
    }

    #[test]
    fn da_accuracy_examples() {
        let acts = |v: &[&str]| -> Vec<String> { v.iter().map(|s| s.to_string()).collect() };
        assert_eq!(da_accuracy(&acts(&["a", "b"]), &acts(&["a", "b"])).unwrap(), 1.0);
        assert_eq!(da_accuracy(&acts(&["a", "x"]), &acts(&["a", "b"])).unwrap(), 0.5);
        assert!(da_accuracy(&[], &[]).is_err());
    }

    #[test]
    fn tag_projection_onto_reference() {
        let tags: Vec<String> = ["B-food", "O"].iter().map(|s| s.to_string()).collect();
        // system dropped "the": deleted reference position gets O
        let projected =
            project_tags_to_reference(&toks("the thai food"), &toks("thai food"), &tags);
        assert_eq!(projected, vec!["O", "B-food", "O"]);
    }

    #[test]
    fn report_on_perfect_system() {
        use crate::corpus::{Hypothesis, Utterance};
        let utt = Utterance {
            id: "u1".into(),
            context: vec![],
            nbest: vec![Hypothesis { tokens: toks("thai food"), score: None }],
            transcript: toks("thai food"),
            dialogue_act: "inform_food".into(),
            slots: vec![SlotSpan::new("food", 0, 1)],
        };
        let corpus = Corpus::from_utterances(vec![utt]);
        let outputs = vec![SystemOutput {
            id: "u1".into(),
            tokens: toks("thai food"),
            tags: ["B-food", "O"].iter().map(|s| s.to_string()).collect(),
            act: "inform_food".into(),
            column_tags: None,
        }];
        let report = build_report("perfect", &outputs, &corpus).unwrap();
        assert_eq!(
            (report.wer, report.ser, report.da_acc, report.slot_f1, report.ter, report.fer),
            (0.0, 0.0, 1.0, 1.0, 0.0, 0.0)
        );
        assert_eq!(report.tag_space, TagSpace::Transcript);
        assert!(report.fer >= 1.0 - report.da_acc);
    }

    #[test]
    fn report_errors_on_missing_utterance() {
        use crate::corpus::{Hypothesis, Utterance};
        let utt = Utterance {
            id: "u1".into(),
            context: vec![],
            nbest: vec![Hypothesis { tokens: toks("a"), score: None }],
            transcript: toks("a"),
            dialogue_act: "ack".into(),
            slots: vec![],
        };
        let corpus = Corpus::from_utterances(vec![utt]);
        let err = build_report("sys", &[], &corpus).unwrap_err();
        assert!(matches!(err, Error::MissingOutput(id) if id == "u1"));
    }

    #[test]
    fn table_renders_two_decimal_percentages() {
        let report = EvaluationReport {
            system_name: "1-best (C)".into(),
            wer: 0.2999,
            ser: 0.5448,
            da_acc: 0.8828,
            slot_f1: 0.8101,
            ter: 0.149,
            fer: 0.2143,
            utterance_count: 100,
            tag_space: TagSpace::Transcript,
        };
        let table = render_table(&[report]);
        assert!(table.contains("29.99"));
        assert!(table.contains("54.48"));
        assert!(table.contains("88.28"));
        let header = table.lines().next().unwrap();
        for (a, b) in ["WER", "SER", "DA-Acc", "Slot-F1", "TER", "FER"].windows(2).map(|w| (w[0], w[1])) {
            let pa = header.find(a).unwrap();
            let pb = header.find(b).unwrap();
            assert!(pa < pb, "column order violated: {a} after {b}");
        }
    }
}
