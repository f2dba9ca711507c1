//! Word confusion networks from n-best lists.
//!
//! Every hypothesis is aligned to the 1-best with word-level Levenshtein
//! distance; insertions are merged across hypotheses into a global
//! reference whose columns expand all hypotheses to one shared length.
//! During training the transcript is aligned onto the same columns to
//! project per-column correction words, pointer targets, and IOB tags.

use serde::{Deserialize, Serialize};

use crate::corpus::Token;
use crate::error::{Error, Result};

/// One edit operation from aligning `hypothesis` against `reference`.
///
/// `Insert` carries the gap position: the number of reference tokens
/// consumed before the inserted token (0 = before the first reference
/// token, `ref_len` = after the last).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Match { ref_idx: usize, hyp_idx: usize },
    Substitute { ref_idx: usize, hyp_idx: usize },
    Delete { ref_idx: usize },
    Insert { hyp_idx: usize, gap: usize },
}

/// A minimal-cost edit script under unit costs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

impl EditScript {
    /// Substitutions + deletions + insertions = Levenshtein distance.
    pub fn cost(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| !matches!(op, EditOp::Match { .. }))
            .count()
    }
}

/// Word-level Levenshtein alignment with a deterministic traceback that
/// prefers, at equal cost, Match > Substitute > Delete > Insert.
pub fn levenshtein_align(reference: &[Token], hypothesis: &[Token]) -> EditScript {
    let m = reference.len();
    let n = hypothesis.len();
    let mut dist = vec![vec![0usize; n + 1]; m + 1];
    for (i, row) in dist.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=n {
        dist[0][j] = j;
    }
    for i in 1..=m {
        for j in 1..=n {
            let sub_cost = usize::from(reference[i - 1] != hypothesis[j - 1]);
            dist[i][j] = (dist[i - 1][j - 1] + sub_cost)
                .min(dist[i - 1][j] + 1)
                .min(dist[i][j - 1] + 1);
        }
    }

    let mut ops = Vec::with_capacity(m.max(n));
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        let here = dist[i][j];
        if i > 0 && j > 0 && reference[i - 1] == hypothesis[j - 1] && here == dist[i - 1][j - 1] {
            ops.push(EditOp::Match { ref_idx: i - 1, hyp_idx: j - 1 });
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && here == dist[i - 1][j - 1] + 1 {
            ops.push(EditOp::Substitute { ref_idx: i - 1, hyp_idx: j - 1 });
            i -= 1;
            j -= 1;
        } else if i > 0 && here == dist[i - 1][j] + 1 {
            ops.push(EditOp::Delete { ref_idx: i - 1 });
            i -= 1;
        } else {
            ops.push(EditOp::Insert { hyp_idx: j - 1, gap: i });
            j -= 1;
        }
    }
    ops.reverse();
    EditScript { ops }
}

/// Word-level Levenshtein distance (no script).
pub fn levenshtein_distance(a: &[Token], b: &[Token]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for (i, tok_a) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, tok_b) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(tok_a != tok_b);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// A column is anchored on a 1-best token or sits in an insertion gap.
///
/// Serialized as `{"kind": "anchor"|"gap", "token": str|null}`; gap
/// columns also carry their `gap` position and `ordinal` within it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Anchor { token: Token },
    /// `gap` = position in 0..=len(1-best); `ordinal` = index within the gap.
    Gap { gap: usize, ordinal: usize },
}

impl Serialize for Column {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        match self {
            Column::Anchor { token } => {
                let mut map = serializer.serialize_map(Some(2))?;
                map.serialize_entry("kind", "anchor")?;
                map.serialize_entry("token", token)?;
                map.end()
            }
            Column::Gap { gap, ordinal } => {
                let mut map = serializer.serialize_map(Some(4))?;
                map.serialize_entry("kind", "gap")?;
                map.serialize_entry("token", &Option::<Token>::None)?;
                map.serialize_entry("gap", gap)?;
                map.serialize_entry("ordinal", ordinal)?;
                map.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Column {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        #[derive(Deserialize)]
        struct Wire {
            kind: String,
            #[serde(default)]
            token: Option<Token>,
            #[serde(default)]
            gap: Option<usize>,
            #[serde(default)]
            ordinal: Option<usize>,
        }
        let wire = Wire::deserialize(deserializer)?;
        match wire.kind.as_str() {
            "anchor" => Ok(Column::Anchor {
                token: wire.token.ok_or_else(|| D::Error::missing_field("token"))?,
            }),
            "gap" => Ok(Column::Gap {
                gap: wire.gap.ok_or_else(|| D::Error::missing_field("gap"))?,
                ordinal: wire.ordinal.ok_or_else(|| D::Error::missing_field("ordinal"))?,
            }),
            other => Err(D::Error::unknown_variant(other, &["anchor", "gap"])),
        }
    }
}

impl Column {
    pub fn is_gap(&self) -> bool {
        matches!(self, Column::Gap { .. })
    }
}

/// The aligned n-best: column descriptors and an N x T token grid where
/// `<eps>` marks cells a hypothesis does not fill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionNetwork {
    pub columns: Vec<Column>,
    /// `grid[i][t]` = token of hypothesis `i` at column `t`.
    pub grid: Vec<Vec<Token>>,
    /// hypothesis count
    pub n: usize,
    /// the original n-best the network was built from
    pub source: Vec<Vec<Token>>,
}

impl ConfusionNetwork {
    /// Number of columns.
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Row `i` with `<eps>` removed: exactly the original hypothesis `i`.
    pub fn stripped_row(&self, i: usize) -> Vec<Token> {
        self.grid[i].iter().filter(|t| !t.is_eps()).cloned().collect()
    }

    /// Tokens of one column across all hypotheses.
    pub fn column_tokens(&self, t: usize) -> Vec<Token> {
        self.grid.iter().map(|row| row[t].clone()).collect()
    }
}

/// Build a confusion network from an n-best list (position 0 = 1-best).
///
/// Gap width at each position is the max (not sum) of per-hypothesis
/// insertion counts there; inserted tokens fill gap columns left-aligned in
/// original order.
pub fn build_confusion_network(nbest: &[Vec<Token>]) -> Result<ConfusionNetwork> {
    if nbest.is_empty() {
        return Err(Error::InvalidInput("empty n-best list".into()));
    }
    let onebest = &nbest[0];
    let scripts: Vec<EditScript> =
        nbest[1..].iter().map(|hyp| levenshtein_align(onebest, hyp)).collect();

    // widths[g] = max insertions any hypothesis places at gap g
    let mut widths = vec![0usize; onebest.len() + 1];
    for script in &scripts {
        let mut counts = vec![0usize; onebest.len() + 1];
        for op in &script.ops {
            if let EditOp::Insert { gap, .. } = op {
                counts[*gap] += 1;
            }
        }
        for (w, c) in widths.iter_mut().zip(&counts) {
            *w = (*w).max(*c);
        }
    }

    // column layout: gap block g, anchor g, gap block g+1, ... , final gap block
    let mut columns = Vec::new();
    // anchor_col[r] = column index of reference token r; gap_start[g] = first
    // column of gap block g
    let mut anchor_col = vec![0usize; onebest.len()];
    let mut gap_start = vec![0usize; onebest.len() + 1];
    for g in 0..=onebest.len() {
        gap_start[g] = columns.len();
        for ordinal in 0..widths[g] {
            columns.push(Column::Gap { gap: g, ordinal });
        }
        if g < onebest.len() {
            anchor_col[g] = columns.len();
            columns.push(Column::Anchor { token: onebest[g].clone() });
        }
    }
    let width = columns.len();

    let mut grid = vec![vec![Token::eps(); width]; nbest.len()];
    for (r, tok) in onebest.iter().enumerate() {
        grid[0][anchor_col[r]] = tok.clone();
    }
    for (i, script) in scripts.iter().enumerate() {
        let row = &mut grid[i + 1];
        let hyp = &nbest[i + 1];
        let mut used = vec![0usize; onebest.len() + 1];
        for op in &script.ops {
            match *op {
                EditOp::Match { ref_idx, hyp_idx } | EditOp::Substitute { ref_idx, hyp_idx } => {
                    row[anchor_col[ref_idx]] = hyp[hyp_idx].clone();
                }
                EditOp::Delete { .. } => {}
                EditOp::Insert { hyp_idx, gap } => {
                    row[gap_start[gap] + used[gap]] = hyp[hyp_idx].clone();
                    used[gap] += 1;
                }
            }
        }
    }

    Ok(ConfusionNetwork {
        columns,
        grid,
        n: nbest.len(),
        source: nbest.to_vec(),
    })
}

/// Per-column training targets projected from the transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTargets {
    /// transcript word at each column, `<eps>` where none maps
    pub correction_word: Vec<Token>,
    /// lowest hypothesis row holding the correction word, 0 when absent
    /// (first-best fallback)
    pub bin_index: Vec<usize>,
    /// IOB tag per column, `O` at `<eps>` columns
    pub iob_tag: Vec<String>,
    /// combined dialogue act
    pub act: String,
}

/// Align the transcript onto the network's columns for training.
///
/// Matches and substitutions against the 1-best map to anchor columns.
/// Result of aligning a transcript onto a network's columns.
#[derive(Debug, Clone)]
pub struct TranscriptAlignment {
    /// the network, widened with extra gap columns if insertions overflowed
    pub network: ConfusionNetwork,
    /// per column: the transcript index assigned to it, if any
    pub column_map: Vec<Option<usize>>,
    /// per column: true when the column was created by widening (these
    /// columns do not exist when the same n-best list is decoded without a
    /// transcript, so column-space scoring drops them)
    pub inserted: Vec<bool>,
}

/// Transcript insertions go into existing gap columns at the same gap
/// (preferring the lowest column where some hypothesis already holds the
/// token, otherwise the lowest free column); overflow appends all-`<eps>`
/// gap columns so no gold token is dropped.
pub fn align_transcript(cn: &ConfusionNetwork, transcript: &[Token]) -> TranscriptAlignment {
    let onebest = &cn.source[0];
    let script = levenshtein_align(onebest, transcript);

    // anchor column of each reference index, existing gap columns per gap
    let mut anchor_col = vec![usize::MAX; onebest.len()];
    let mut gap_cols: Vec<Vec<usize>> = vec![Vec::new(); onebest.len() + 1];
    for (c, col) in cn.columns.iter().enumerate() {
        match col {
            Column::Anchor { .. } => {
                if let Some(slot) = anchor_col.iter_mut().find(|v| **v == usize::MAX) {
                    *slot = c;
                }
            }
            Column::Gap { gap, .. } => gap_cols[*gap].push(c),
        }
    }

    // assignment over original columns; extras[g] = transcript indices that
    // overflow gap g into new columns
    let mut assigned: Vec<Option<usize>> = vec![None; cn.width()];
    let mut extras: Vec<Vec<usize>> = vec![Vec::new(); onebest.len() + 1];
    let mut cursor: Vec<usize> = vec![0; onebest.len() + 1];

    for op in &script.ops {
        match *op {
            EditOp::Match { ref_idx, hyp_idx } | EditOp::Substitute { ref_idx, hyp_idx } => {
                assigned[anchor_col[ref_idx]] = Some(hyp_idx);
            }
            EditOp::Delete { .. } => {}
            EditOp::Insert { hyp_idx, gap } => {
                let free = &gap_cols[gap][cursor[gap]..];
                // prefer the lowest free column where some row already
                // carries this transcript token
                let pick = free
                    .iter()
                    .position(|&c| cn.grid.iter().any(|row| row[c] == transcript[hyp_idx]))
                    .or(if free.is_empty() { None } else { Some(0) });
                match pick {
                    Some(offset) => {
                        let col = free[offset];
                        assigned[col] = Some(hyp_idx);
                        cursor[gap] += offset + 1;
                    }
                    None => extras[gap].push(hyp_idx),
                }
            }
        }
    }

    if extras.iter().all(Vec::is_empty) {
        let inserted = vec![false; cn.width()];
        return TranscriptAlignment { network: cn.clone(), column_map: assigned, inserted };
    }

    // widen: splice new all-eps columns after each gap block that overflowed
    let mut columns = Vec::with_capacity(cn.width());
    let mut grid: Vec<Vec<Token>> = vec![Vec::new(); cn.grid.len()];
    let mut map = Vec::with_capacity(cn.width());
    let mut inserted = Vec::with_capacity(cn.width());
    let push_existing = |c: usize,
                         columns: &mut Vec<Column>,
                         grid: &mut Vec<Vec<Token>>,
                         map: &mut Vec<Option<usize>>,
                         inserted: &mut Vec<bool>| {
        columns.push(cn.columns[c].clone());
        for (row, src) in grid.iter_mut().zip(&cn.grid) {
            row.push(src[c].clone());
        }
        map.push(assigned[c]);
        inserted.push(false);
    };
    let mut next_ordinal: Vec<usize> = gap_cols.iter().map(Vec::len).collect();
    let mut emit_extras = |g: usize,
                           columns: &mut Vec<Column>,
                           grid: &mut Vec<Vec<Token>>,
                           map: &mut Vec<Option<usize>>,
                           inserted: &mut Vec<bool>| {
        for &t_idx in &extras[g] {
            columns.push(Column::Gap { gap: g, ordinal: next_ordinal[g] });
            next_ordinal[g] += 1;
            for row in grid.iter_mut() {
                row.push(Token::eps());
            }
            map.push(Some(t_idx));
            inserted.push(true);
        }
    };

    let mut c = 0;
    for g in 0..=onebest.len() {
        for _ in 0..gap_cols[g].len() {
            push_existing(c, &mut columns, &mut grid, &mut map, &mut inserted);
            c += 1;
        }
        emit_extras(g, &mut columns, &mut grid, &mut map, &mut inserted);
        if g < onebest.len() {
            push_existing(c, &mut columns, &mut grid, &mut map, &mut inserted);
            c += 1;
        }
    }

    let network = ConfusionNetwork {
        columns,
        grid,
        n: cn.n,
        source: cn.source.clone(),
    };
    TranscriptAlignment { network, column_map: map, inserted }
}

/// Project per-column targets: correction word (or `<eps>`), pointer bin
/// index with first-best fallback, IOB tag (or `O`), and the utterance act.
pub fn project_training_targets(
    cn: &ConfusionNetwork,
    column_map: &[Option<usize>],
    transcript: &[Token],
    tags: &[String],
    act: &str,
) -> Result<TrainingTargets> {
    if tags.len() != transcript.len() {
        return Err(Error::Shape {
            expected: format!("{} tags (one per transcript token)", transcript.len()),
            got: format!("{}", tags.len()),
        });
    }
    if column_map.len() != cn.width() {
        return Err(Error::Shape {
            expected: format!("column map of length {}", cn.width()),
            got: format!("{}", column_map.len()),
        });
    }
    let eps = Token::eps();
    let mut correction_word = Vec::with_capacity(cn.width());
    let mut bin_index = Vec::with_capacity(cn.width());
    let mut iob_tag = Vec::with_capacity(cn.width());
    for (c, mapped) in column_map.iter().enumerate() {
        let (word, tag) = match mapped {
            Some(t_idx) => (transcript[*t_idx].clone(), tags[*t_idx].clone()),
            None => (eps.clone(), "O".to_string()),
        };
        let bin = cn
            .grid
            .iter()
            .position(|row| row[c] == word)
            .unwrap_or(0);
        correction_word.push(word);
        bin_index.push(bin);
        iob_tag.push(tag);
    }
    Ok(TrainingTargets { correction_word, bin_index, iob_tag, act: act.to_string() })
}

/// Convenience: build the network, align the transcript, project targets.
/// The returned flags mark widening-inserted columns.
pub fn training_network(
    nbest: &[Vec<Token>],
    transcript: &[Token],
    tags: &[String],
    act: &str,
) -> Result<(ConfusionNetwork, TrainingTargets, Vec<bool>)> {
    let cn = build_confusion_network(nbest)?;
    let aligned = align_transcript(&cn, transcript);
    let targets = project_training_targets(
        &aligned.network,
        &aligned.column_map,
        transcript,
        tags,
        act,
    )?;
    Ok((aligned.network, targets, aligned.inserted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn toks(s: &str) -> Vec<Token> {
        tokenize(s)
    }

    #[test]
    fn align_single_deletion() {
        let script = levenshtein_align(&toks("the east side"), &toks("east side"));
        assert_eq!(
            script.ops,
            vec![
                EditOp::Delete { ref_idx: 0 },
                EditOp::Match { ref_idx: 1, hyp_idx: 0 },
                EditOp::Match { ref_idx: 2, hyp_idx: 1 },
            ]
        );
        assert_eq!(script.cost(), 1);
    }

    #[test]
    fn align_identity() {
        let script = levenshtein_align(&toks("a"), &toks("a"));
        assert_eq!(script.ops, vec![EditOp::Match { ref_idx: 0, hyp_idx: 0 }]);
        assert_eq!(script.cost(), 0);
    }

    #[test]
    fn align_prefers_double_substitution() {
        // both 2-cost paths exist; the traceback preference picks sub+sub
        let script = levenshtein_align(&toks("a b"), &toks("b a"));
        assert_eq!(
            script.ops,
            vec![
                EditOp::Substitute { ref_idx: 0, hyp_idx: 0 },
                EditOp::Substitute { ref_idx: 1, hyp_idx: 1 },
            ]
        );
        assert_eq!(script.cost(), 2);
    }

    #[test]
    fn align_empty_sequences() {
        let script = levenshtein_align(&[], &toks("a b"));
        assert_eq!(
            script.ops,
            vec![
                EditOp::Insert { hyp_idx: 0, gap: 0 },
                EditOp::Insert { hyp_idx: 1, gap: 0 },
            ]
        );
        let script = levenshtein_align(&toks("a b"), &[]);
        assert_eq!(script.cost(), 2);
        assert!(script.ops.iter().all(|op| matches!(op, EditOp::Delete { .. })));
    }

    #[test]
    fn build_merges_insertions_into_global_reference() {
        let nbest = vec![toks("thai food"), toks("the thai food"), toks("thai foods")];
        let cn = build_confusion_network(&nbest).unwrap();
        assert_eq!(
            cn.columns,
            vec![
                Column::Gap { gap: 0, ordinal: 0 },
                Column::Anchor { token: toks("thai")[0].clone() },
                Column::Anchor { token: toks("food")[0].clone() },
            ]
        );
        assert_eq!(cn.grid[0], toks("<eps> thai food"));
        assert_eq!(cn.grid[1], toks("the thai food"));
        assert_eq!(cn.grid[2], toks("<eps> thai foods"));
    }

    #[test]
    fn build_single_hypothesis() {
        let cn = build_confusion_network(&[toks("a")]).unwrap();
        assert_eq!(cn.columns, vec![Column::Anchor { token: toks("a")[0].clone() }]);
        assert_eq!(cn.grid, vec![toks("a")]);
    }

    #[test]
    fn build_insertions_on_both_sides_of_anchor() {
        let nbest = vec![toks("a"), toks("x a y")];
        let cn = build_confusion_network(&nbest).unwrap();
        assert_eq!(
            cn.columns,
            vec![
                Column::Gap { gap: 0, ordinal: 0 },
                Column::Anchor { token: toks("a")[0].clone() },
                Column::Gap { gap: 1, ordinal: 0 },
            ]
        );
        assert_eq!(cn.grid[0], toks("<eps> a <eps>"));
        assert_eq!(cn.grid[1], toks("x a y"));
    }

    #[test]
    fn build_rejects_empty_nbest() {
        assert!(build_confusion_network(&[]).is_err());
    }

    #[test]
    fn build_row0_eps_exactly_at_gaps() {
        let nbest = vec![toks("b c"), toks("a b c d"), toks("b x c")];
        let cn = build_confusion_network(&nbest).unwrap();
        for (col, tok) in cn.columns.iter().zip(&cn.grid[0]) {
            assert_eq!(col.is_gap(), tok.is_eps());
        }
        for i in 0..nbest.len() {
            assert_eq!(cn.stripped_row(i), nbest[i]);
        }
    }

    #[test]
    fn transcript_maps_into_existing_gap_column() {
        let cn = build_confusion_network(&[toks("thai food"), toks("the thai food")]).unwrap();
        let aligned = align_transcript(&cn, &toks("the thai food"));
        assert_eq!(aligned.network.width(), cn.width(), "no widening expected");
        assert_eq!(aligned.column_map, vec![Some(0), Some(1), Some(2)]);
        assert_eq!(aligned.inserted, vec![false; 3]);
    }

    #[test]
    fn transcript_identical_to_onebest_maps_anchors_only() {
        let cn =
            build_confusion_network(&[toks("thai food"), toks("the thai food")]).unwrap();
        let aligned = align_transcript(&cn, &toks("thai food"));
        assert_eq!(aligned.network.width(), cn.width());
        assert_eq!(aligned.column_map, vec![None, Some(0), Some(1)]);
    }

    #[test]
    fn transcript_overflow_appends_all_eps_column() {
        let cn = build_confusion_network(&[toks("a")]).unwrap();
        let aligned = align_transcript(&cn, &toks("a b"));
        assert_eq!(
            aligned.network.columns,
            vec![
                Column::Anchor { token: toks("a")[0].clone() },
                Column::Gap { gap: 1, ordinal: 0 },
            ]
        );
        assert_eq!(aligned.column_map, vec![Some(0), Some(1)]);
        assert_eq!(aligned.inserted, vec![false, true]);
        assert_eq!(aligned.network.grid[0], toks("a <eps>"));
        assert_eq!(aligned.network.stripped_row(0), toks("a"));
    }

    #[test]
    fn transcript_prefers_matching_gap_column() {
        // gap 0 has two columns; the transcript token matches only the second
        let nbest = vec![toks("z"), toks("p q z"), toks("u q z")];
        let cn = build_confusion_network(&nbest).unwrap();
        assert_eq!(cn.width(), 3);
        let aligned = align_transcript(&cn, &toks("q z"));
        assert_eq!(aligned.network.width(), 3);
        assert_eq!(aligned.column_map, vec![None, Some(0), Some(1)]);
    }

    #[test]
    fn targets_point_at_lowest_matching_row() {
        let nbest = vec![toks("thai food"), toks("the thai food")];
        let transcript = toks("the thai food");
        let tags: Vec<String> = ["O", "B-food", "O"].iter().map(|s| s.to_string()).collect();
        let (cn, targets, inserted) =
            training_network(&nbest, &transcript, &tags, "inform_food").unwrap();
        assert_eq!(inserted, vec![false; 3]);
        // column 0: rows [<eps>, the], correction "the" -> bin 1
        assert_eq!(targets.correction_word[0], toks("the")[0]);
        assert_eq!(targets.bin_index[0], 1);
        // anchor columns: unanimous rows -> bin 0
        assert_eq!(targets.bin_index[1], 0);
        assert_eq!(targets.iob_tag, vec!["O", "B-food", "O"]);
        assert_eq!(targets.act, "inform_food");
        assert_eq!(cn.width(), 3);
    }

    #[test]
    fn targets_fall_back_to_first_best_when_word_absent() {
        let nbest = vec![toks("foo"), toks("bar")];
        let transcript = toks("baz");
        let tags = vec!["O".to_string()];
        let (_, targets, _) = training_network(&nbest, &transcript, &tags, "x").unwrap();
        assert_eq!(targets.bin_index, vec![0]);
        assert_eq!(targets.correction_word, toks("baz"));
    }

    #[test]
    fn targets_eps_columns_get_o_tag() {
        let nbest = vec![toks("a"), toks("x a")];
        let transcript = toks("a");
        let tags = vec!["B-area".to_string()];
        let (cn, targets, _) = training_network(&nbest, &transcript, &tags, "x").unwrap();
        assert_eq!(cn.width(), 2);
        assert_eq!(targets.correction_word[0], Token::eps());
        assert_eq!(targets.iob_tag[0], "O");
        assert_eq!(targets.iob_tag[1], "B-area");
    }

    #[test]
    fn targets_reject_tag_length_mismatch() {
        let nbest = vec![toks("a")];
        let cn = build_confusion_network(&nbest).unwrap();
        let aligned = align_transcript(&cn, &toks("a"));
        let err =
            project_training_targets(&aligned.network, &aligned.column_map, &toks("a"), &[], "x");
        assert!(err.is_err());
    }

    #[test]
    fn network_serialization_round_trips_and_matches_wire_shape() {
        let nbest = vec![toks("a b"), toks("a x b")];
        let cn = build_confusion_network(&nbest).unwrap();
        let value: serde_json::Value = serde_json::to_value(&cn).unwrap();
        let cols = value["columns"].as_array().unwrap();
        assert_eq!(cols[0]["kind"], "anchor");
        assert_eq!(cols[0]["token"], "a");
        let gap = cols.iter().find(|c| c["kind"] == "gap").unwrap();
        assert!(gap["token"].is_null());
        assert_eq!(value["grid"].as_array().unwrap().len(), 2);
        let back: ConfusionNetwork = serde_json::from_value(value).unwrap();
        assert_eq!(back, cn);
    }
}
