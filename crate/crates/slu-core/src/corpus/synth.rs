//! Seeded synthetic corpus generator.
//!
//! Transcripts are drawn from a small restaurant-domain template grammar;
//! each hypothesis is an independent noise-channel sample of the transcript
//! (per-token substitution from a confusion table, deletion, and insertion
//! at token gaps). Hypotheses are ordered by descending channel
//! log-probability, so the 1-best is the channel's most probable sample —
//! which is not always the closest to the transcript.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::{combine_act_label, Corpus, Hypothesis, SlotSpan, Token, Utterance};
use crate::error::{Error, Result};
use crate::seeds::substream;

/// One template element: a literal word or a slot placeholder.
#[derive(Debug, Clone)]
pub enum Piece {
    Lit(String),
    Slot(String),
}

/// An utterance template: base act, the slot types folded into the combined
/// act label, and the token pattern.
#[derive(Debug, Clone)]
pub struct Template {
    pub act: String,
    pub label_slots: Vec<String>,
    pub pattern: Vec<Piece>,
}

/// Template grammar plus the noise channel's word lists.
#[derive(Debug, Clone)]
pub struct Grammar {
    pub templates: Vec<Template>,
    /// slot type -> candidate fillers (each possibly multi-token)
    pub fillers: BTreeMap<String, Vec<Vec<Token>>>,
    /// word -> substitution alternatives; words without an entry substitute
    /// from `decoys`
    pub confusions: BTreeMap<String, Vec<String>>,
    /// fallback substitution pool
    pub decoys: Vec<String>,
    /// insertion pool (hesitations and function words)
    pub insertions: Vec<String>,
}

/// Pattern syntax: words separated by spaces, `{type}` marks a slot.
fn parse_pattern(pattern: &str) -> Vec<Piece> {
    pattern
        .split_whitespace()
        .map(|w| {
            if let Some(ty) = w.strip_prefix('{').and_then(|w| w.strip_suffix('}')) {
                Piece::Slot(ty.to_string())
            } else {
                Piece::Lit(w.to_string())
            }
        })
        .collect()
}

impl Template {
    /// Template whose label slots are exactly the slot types in the pattern.
    fn new(act: &str, pattern: &str) -> Self {
        let pattern = parse_pattern(pattern);
        let label_slots = pattern
            .iter()
            .filter_map(|p| match p {
                Piece::Slot(ty) => Some(ty.clone()),
                Piece::Lit(_) => None,
            })
            .collect();
        Template { act: act.to_string(), label_slots, pattern }
    }

    /// Template that targets a slot type without carrying its value
    /// (e.g. `request` + pricerange for "whats the price range").
    fn targeting(act: &str, slot: &str, pattern: &str) -> Self {
        Template {
            act: act.to_string(),
            label_slots: vec![slot.to_string()],
            pattern: parse_pattern(pattern),
        }
    }

    fn combined_label(&self) -> String {
        let types: BTreeSet<String> = self.label_slots.iter().cloned().collect();
        combine_act_label(&self.act, &types)
    }
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl Default for Grammar {
    fn default() -> Self {
        let templates = vec![
            Template::new("inform", "i want {food} food"),
            Template::new("inform", "im looking for {food} food"),
            Template::new("inform", "serving {food} food please"),
            Template::new("inform", "im looking for a {pricerange} restaurant"),
            Template::new("inform", "a {pricerange} restaurant please"),
            Template::new("inform", "somewhere in the {area} of town"),
            Template::new("inform", "a restaurant in the {area} part of town"),
            Template::new("inform", "im looking for {food} food in the {area} of town"),
            Template::new("inform", "{food} food in the {area} please"),
            Template::new("inform", "a {pricerange} restaurant serving {food} food"),
            Template::new("inform", "i want {pricerange} {food} food"),
            Template::new("inform", "a {pricerange} restaurant in the {area} of town"),
            Template::new("inform", "{pricerange} place in the {area} please"),
            Template::targeting("request", "pricerange", "whats the price range"),
            Template::targeting("request", "pricerange", "may i have the price range"),
            Template::targeting("request", "food", "what type of food do they serve"),
            Template::targeting("request", "food", "what kind of food is that"),
            Template::targeting("request", "area", "what area is it in"),
            Template::targeting("request", "area", "what part of town is it in"),
            Template::targeting("request", "phone", "whats the phone number"),
            Template::targeting("request", "phone", "may i have the phone number"),
            Template::targeting("request", "address", "whats the address"),
            Template::targeting("request", "address", "may i have the address"),
            Template::targeting("request", "postcode", "whats the postcode"),
            Template::targeting("request", "postcode", "can i get the postcode"),
            Template::new("confirm", "do they serve {food} food"),
            Template::new("confirm", "is it {food} food"),
            Template::new("confirm", "is it a {pricerange} restaurant"),
            Template::new("confirm", "is that place {pricerange}"),
            Template::new("confirm", "is it in the {area} of town"),
            Template::new("confirm", "is that in the {area}"),
            Template::new("affirm", "yes"),
            Template::new("affirm", "yes please"),
            Template::new("affirm", "yes that one"),
            Template::new("negate", "no"),
            Template::new("negate", "no thank you"),
            Template::new("negate", "no not that"),
            Template::new("ack", "okay"),
            Template::new("ack", "okay then"),
            Template::new("hello", "hello"),
            Template::new("hello", "hi there"),
            Template::new("bye", "good bye"),
            Template::new("bye", "bye bye"),
            Template::new("thankyou", "thank you"),
            Template::new("thankyou", "thank you very much"),
            Template::new("reqalts", "how about something else"),
            Template::new("reqalts", "are there any others"),
            Template::new("reqalts", "anything else"),
            Template::new("repeat", "can you repeat that"),
            Template::new("repeat", "repeat that please"),
            Template::new("deny", "not {food} food"),
            Template::new("deny", "i dont want {food} food"),
            Template::new("dontcare", "it doesnt matter"),
            Template::new("dontcare", "i dont care"),
            Template::new("dontcare", "any will do"),
        ];

        let mut fillers: BTreeMap<String, Vec<Vec<Token>>> = BTreeMap::new();
        let food = [
            "thai",
            "chinese",
            "indian",
            "italian",
            "french",
            "korean",
            "british",
            "spanish",
            "turkish",
            "vietnamese",
            "seafood",
            "mexican",
            "modern european",
            "north american",
        ];
        fillers.insert(
            "food".into(),
            food.iter().map(|f| super::tokenize(f)).collect(),
        );
        fillers.insert(
            "pricerange".into(),
            ["cheap", "moderate", "expensive"].iter().map(|f| super::tokenize(f)).collect(),
        );
        fillers.insert(
            "area".into(),
            ["north", "south", "east", "west", "centre"]
                .iter()
                .map(|f| super::tokenize(f))
                .collect(),
        );

        let confusion_pairs: &[(&str, &[&str])] = &[
            ("thai", &["tie", "type", "time"]),
            ("chinese", &["genies", "cheese"]),
            ("indian", &["indie"]),
            ("italian", &["stallion"]),
            ("french", &["bench", "trench"]),
            ("korean", &["crane"]),
            ("british", &["bridge"]),
            ("spanish", &["spinach"]),
            ("turkish", &["turkey"]),
            ("vietnamese", &["beaches"]),
            ("seafood", &["sea"]),
            ("mexican", &["mexico"]),
            ("modern", &["madden"]),
            ("european", &["you"]),
            ("american", &["america"]),
            ("cheap", &["chip", "keep", "jeep"]),
            ("moderate", &["moderately"]),
            ("expensive", &["expense", "extensive"]),
            ("north", &["nor", "fourth"]),
            ("south", &["mouth", "sow"]),
            ("east", &["least", "yeast"]),
            ("west", &["rest", "vest"]),
            ("centre", &["center", "enter"]),
            ("food", &["foot", "good", "mood"]),
            ("restaurant", &["restaurants"]),
            ("looking", &["booking", "cooking"]),
            ("want", &["wont", "went"]),
            ("whats", &["what"]),
            ("price", &["rice"]),
            ("range", &["strange"]),
            ("phone", &["fun", "foam"]),
            ("number", &["lumber"]),
            ("address", &["dress"]),
            ("postcode", &["post"]),
            ("area", &["era"]),
            ("town", &["down", "ton"]),
            ("part", &["park"]),
            ("serve", &["surf"]),
            ("serving", &["surfing"]),
            ("repeat", &["repeats"]),
            ("matter", &["mater"]),
            ("okay", &["kay"]),
            ("hello", &["low"]),
            ("thank", &["tank"]),
            ("yes", &["yeah", "guess"]),
            ("no", &["know", "now"]),
            ("please", &["pleas", "peas"]),
            ("about", &["bout"]),
            ("something", &["nothing"]),
            ("else", &["eels"]),
            ("others", &["otters"]),
            ("doesnt", &["dont"]),
            ("care", &["car"]),
            ("any", &["many"]),
            ("will", &["well"]),
            ("place", &["plays"]),
            ("kind", &["kinds"]),
            ("have", &["half"]),
        ];
        let confusions = confusion_pairs
            .iter()
            .map(|(w, alts)| (w.to_string(), words(alts)))
            .collect();

        Grammar {
            templates,
            fillers,
            confusions,
            decoys: words(&["bar", "far", "say", "way", "door", "four", "line", "mine"]),
            insertions: words(&["uh", "um", "oh", "the", "a", "and", "please"]),
        }
    }
}

/// Generator settings: grammar, noise channel, n-best size, corpus size.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub utterance_count: usize,
    pub nbest_size: usize,
    /// per-token probability of substituting via the confusion table
    pub sub_prob: f64,
    /// per-token deletion probability
    pub del_prob: f64,
    /// per-gap insertion probability
    pub ins_prob: f64,
    /// stddev of the Gaussian noise added to each hypothesis's channel
    /// log-probability to form its decoder score; a decoder ranks by
    /// score, so noise makes the 1-best imperfect and leaves oracle
    /// headroom further down the list, as in real n-best output
    pub score_noise: f64,
    pub grammar: Grammar,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            utterance_count: 2000,
            nbest_size: 10,
            sub_prob: 0.25,
            del_prob: 0.05,
            ins_prob: 0.05,
            score_noise: 2.0,
            grammar: Grammar::default(),
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("sub_prob", self.sub_prob),
            ("del_prob", self.del_prob),
            ("ins_prob", self.ins_prob),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidInput(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if self.sub_prob + self.del_prob > 1.0 {
            return Err(Error::InvalidInput(format!(
                "sub_prob + del_prob = {} exceeds 1",
                self.sub_prob + self.del_prob
            )));
        }
        if !self.score_noise.is_finite() || self.score_noise < 0.0 {
            return Err(Error::InvalidInput(format!(
                "score_noise = {} must be finite and non-negative",
                self.score_noise
            )));
        }
        if self.nbest_size == 0 {
            return Err(Error::InvalidInput("nbest_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// One noise-channel sample of `transcript` plus its log-probability.
fn corrupt(
    transcript: &[Token],
    cfg: &SynthConfig,
    rng: &mut ChaCha12Rng,
) -> (Vec<Token>, f64) {
    let g = &cfg.grammar;
    let mut out = Vec::with_capacity(transcript.len() + 2);
    let mut logp = 0.0;
    let keep = 1.0 - cfg.sub_prob - cfg.del_prob;

    let maybe_insert = |out: &mut Vec<Token>, logp: &mut f64, rng: &mut ChaCha12Rng| {
        if cfg.ins_prob > 0.0 && rng.gen::<f64>() < cfg.ins_prob {
            let w = &g.insertions[rng.gen_range(0..g.insertions.len())];
            out.push(Token(w.clone()));
            *logp += cfg.ins_prob.ln() - (g.insertions.len() as f64).ln();
        } else if cfg.ins_prob < 1.0 {
            *logp += (1.0 - cfg.ins_prob).ln();
        }
    };

    for tok in transcript {
        maybe_insert(&mut out, &mut logp, rng);
        let u: f64 = rng.gen();
        if u < cfg.del_prob {
            logp += cfg.del_prob.ln();
        } else if u < cfg.del_prob + cfg.sub_prob {
            let alts = g.confusions.get(tok.as_str()).unwrap_or(&g.decoys);
            let w = &alts[rng.gen_range(0..alts.len())];
            out.push(Token(w.clone()));
            logp += cfg.sub_prob.ln() - (alts.len() as f64).ln();
        } else {
            out.push(tok.clone());
            logp += keep.ln();
        }
    }
    maybe_insert(&mut out, &mut logp, rng);
    (out, logp)
}

/// Standard normal sample via Box-Muller.
fn gaussian(rng: &mut ChaCha12Rng) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1], keeps ln finite
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Generate a corpus deterministically from `(config, seed)`.
///
/// Each utterance's transcript comes from the grammar; its gold act and
/// slots come from the generating template; each hypothesis is an
/// independent channel sample. Hypotheses are ordered by descending
/// decoder score — channel log-probability plus `score_noise` Gaussian
/// noise — so the 1-best is usually good but the best hypothesis often
/// sits deeper in the list (ties keep sample order).
pub fn generate_synthetic(config: &SynthConfig, seed: u64) -> Result<Corpus> {
    config.validate()?;
    let g = &config.grammar;
    if g.templates.is_empty() {
        return Err(Error::InvalidInput("grammar has no templates".into()));
    }
    let mut rng = substream(seed, "synth-data");
    let mut utterances = Vec::with_capacity(config.utterance_count);

    for idx in 0..config.utterance_count {
        let template = &g.templates[rng.gen_range(0..g.templates.len())];
        let mut transcript: Vec<Token> = Vec::new();
        let mut slots: Vec<SlotSpan> = Vec::new();
        for piece in &template.pattern {
            match piece {
                Piece::Lit(w) => transcript.push(Token(w.clone())),
                Piece::Slot(ty) => {
                    let options = g.fillers.get(ty).ok_or_else(|| {
                        Error::InvalidInput(format!("no fillers for slot type {ty}"))
                    })?;
                    let filler = &options[rng.gen_range(0..options.len())];
                    let start = transcript.len();
                    transcript.extend(filler.iter().cloned());
                    slots.push(SlotSpan::new(ty.clone(), start, transcript.len()));
                }
            }
        }

        let mut samples: Vec<(usize, Vec<Token>, f64)> = (0..config.nbest_size)
            .map(|k| {
                let (tokens, logp) = corrupt(&transcript, config, &mut rng);
                let score = logp + config.score_noise * gaussian(&mut rng);
                (k, tokens, score)
            })
            .collect();
        samples.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));

        utterances.push(Utterance {
            id: format!("synth-{seed}-{idx:05}"),
            context: Vec::new(),
            nbest: samples
                .into_iter()
                .map(|(_, tokens, score)| Hypothesis { tokens, score: Some(score) })
                .collect(),
            transcript,
            dialogue_act: template.combined_label(),
            slots,
        });
    }

    Ok(Corpus::from_utterances(utterances))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = SynthConfig { utterance_count: 50, ..SynthConfig::default() };
        let a = generate_synthetic(&cfg, 7).unwrap();
        let b = generate_synthetic(&cfg, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&cfg, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_channel_copies_transcript() {
        let cfg = SynthConfig {
            utterance_count: 30,
            sub_prob: 0.0,
            del_prob: 0.0,
            ins_prob: 0.0,
            ..SynthConfig::default()
        };
        let corpus = generate_synthetic(&cfg, 3).unwrap();
        for utt in &corpus.utterances {
            for hyp in &utt.nbest {
                assert_eq!(hyp.tokens, utt.transcript);
            }
        }
    }

    #[test]
    fn rejects_invalid_probabilities() {
        let bad = SynthConfig { sub_prob: 1.5, ..SynthConfig::default() };
        assert!(generate_synthetic(&bad, 1).is_err());
        let bad = SynthConfig { del_prob: -0.1, ..SynthConfig::default() };
        assert!(generate_synthetic(&bad, 1).is_err());
        let bad = SynthConfig { sub_prob: 0.6, del_prob: 0.6, ..SynthConfig::default() };
        assert!(generate_synthetic(&bad, 1).is_err());
    }

    #[test]
    fn hypotheses_sorted_by_decoder_score() {
        let cfg = SynthConfig { utterance_count: 40, ..SynthConfig::default() };
        let corpus = generate_synthetic(&cfg, 11).unwrap();
        for utt in &corpus.utterances {
            let scores: Vec<f64> = utt.nbest.iter().map(|h| h.score.unwrap()).collect();
            assert!(scores.windows(2).all(|w| w[0] >= w[1]), "scores not sorted: {scores:?}");
        }
    }

    #[test]
    fn gold_slots_match_transcript_and_acts_are_combined() {
        let cfg = SynthConfig { utterance_count: 400, ..SynthConfig::default() };
        let corpus = generate_synthetic(&cfg, 5).unwrap();
        for utt in &corpus.utterances {
            for slot in &utt.slots {
                assert!(slot.end <= utt.transcript.len());
            }
            assert!(!utt.dialogue_act.is_empty());
        }
        // the default grammar covers a DSTC2-sized combined-act inventory
        assert_eq!(corpus.act_inventory.len(), 25, "acts: {:?}", corpus.act_inventory);
    }
}
