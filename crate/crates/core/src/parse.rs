//! Free-form model responses to typed answers.
//!
//! Rules are tried in order: the `{answer : X}` tag under chain-of-thought,
//! the text after the last colon for declarative prompts, the last integer
//! in the response, and finally vocabulary matching for label answers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use regex::Regex;

use crate::answer::{AnswerKind, AnswerValue, ExtractionRule, ParsedAnswer};
use crate::chess::PIECE_TYPES;
use crate::poker::{full_deck, CardName};
use crate::qa::{InstructionKind, PrepromptKind};

const WORD_NUMBERS: [&str; 21] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
    "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
];

fn answer_tag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\{\s*answer\s*:\s*([^{}]*?)\s*\}").unwrap())
}

fn integer_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let words = WORD_NUMBERS.join("|");
        Regex::new(&format!(r"(?i)(?:^|[^\w.])(-?\d+)\b|\b({words})\b")).unwrap()
    })
}

fn card_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(10|[2-9TJQKA])([SHDCshdc])\b").unwrap())
}

/// Integers in reading order, word numbers included.
pub fn integers_in(text: &str) -> Vec<i64> {
    integer_re()
        .captures_iter(text)
        .filter_map(|c| {
            if let Some(d) = c.get(1) {
                d.as_str().parse().ok()
            } else {
                let w = c.get(2)?.as_str().to_ascii_lowercase();
                WORD_NUMBERS.iter().position(|n| *n == w).map(|i| i as i64)
            }
        })
        .collect()
}

/// Piece types, colors and every card encoding.
pub fn default_vocabulary() -> Vec<String> {
    let mut v: Vec<String> = PIECE_TYPES.iter().map(|t| t.as_str().to_string()).collect();
    v.extend(["white", "black"].map(String::from));
    v.extend(full_deck().iter().map(|c| c.encoding()));
    v
}

/// One alternation per word list, compiled once: `\bword(?:e?s)?\b` with
/// underscores also matching spaces.
fn word_re(words: &[&String]) -> Arc<Regex> {
    static CACHE: OnceLock<Mutex<HashMap<Vec<String>, Arc<Regex>>>> = OnceLock::new();
    let key: Vec<String> = words.iter().map(|w| w.to_string()).collect();
    let mut cache = CACHE.get_or_init(Default::default).lock().expect("regex cache");
    cache
        .entry(key)
        .or_insert_with(|| {
            let alts: Vec<String> =
                words.iter().map(|w| format!("({})", regex::escape(w).replace('_', "[_ ]"))).collect();
            Arc::new(Regex::new(&format!(r"(?i)\b(?:{})(?:e?s)?\b", alts.join("|"))).expect("escaped vocabulary"))
        })
        .clone()
}

/// Vocabulary hits as (byte offset, canonical word), in reading order.
fn vocabulary_hits(text: &str, vocab: &[String]) -> Vec<(usize, String)> {
    let mut hits = Vec::new();
    let mut words = Vec::new();
    let mut has_cards = false;
    for w in vocab {
        if w.parse::<CardName>().is_ok() {
            has_cards = true;
        } else {
            words.push(w);
        }
    }
    if has_cards {
        for c in card_re().captures_iter(text) {
            let rank = if &c[1] == "T" { "10" } else { &c[1] };
            let enc = format!("{rank}{}", c[2].to_ascii_uppercase());
            if let Some(w) = vocab.iter().find(|w| **w == enc) {
                hits.push((c.get(0).unwrap().start(), w.clone()));
            }
        }
    }
    if !words.is_empty() {
        let re = word_re(&words);
        for c in re.captures_iter(text) {
            let (i, m) = c.iter().skip(1).enumerate().find_map(|(i, m)| m.map(|m| (i, m))).expect("one group matches");
            hits.push((m.start(), words[i].clone()));
        }
    }
    hits.sort();
    hits
}

#[derive(Clone, Copy, PartialEq)]
enum Pick {
    First,
    Last,
}

fn value_from(text: &str, kind: AnswerKind, vocab: &[String], pick: Pick) -> Option<AnswerValue> {
    match kind {
        AnswerKind::Integer => {
            let ints = integers_in(text);
            let v = if pick == Pick::First { ints.first() } else { ints.last() };
            v.copied().map(AnswerValue::Integer)
        }
        AnswerKind::Cell => {
            let ints = integers_in(text);
            if ints.len() < 2 {
                return None;
            }
            let pair = if pick == Pick::First { &ints[..2] } else { &ints[ints.len() - 2..] };
            Some(AnswerValue::Cell([pair[0], pair[1]]))
        }
        AnswerKind::Label => {
            let hits = vocabulary_hits(text, vocab);
            let h = if pick == Pick::First { hits.first() } else { hits.last() };
            h.map(|(_, w)| AnswerValue::Label(w.clone()))
        }
        AnswerKind::LabelList => {
            let mut out: Vec<String> = Vec::new();
            for (_, w) in vocabulary_hits(text, vocab) {
                if !out.contains(&w) {
                    out.push(w);
                }
            }
            (!out.is_empty()).then_some(AnswerValue::LabelList(out))
        }
    }
}

/// Parse with the default vocabulary.
pub fn parse_answer(
    text: &str,
    expected: AnswerKind,
    instruction: InstructionKind,
    preprompt: PrepromptKind,
) -> ParsedAnswer {
    parse_answer_with(text, expected, instruction, preprompt, &default_vocabulary())
}

pub fn parse_answer_with(
    text: &str,
    expected: AnswerKind,
    instruction: InstructionKind,
    preprompt: PrepromptKind,
    vocab: &[String],
) -> ParsedAnswer {
    let found = |value: Option<AnswerValue>, rule| value.map(|v| ParsedAnswer { value: Some(v), rule });

    if preprompt.is_cot() {
        if let Some(c) = answer_tag_re().captures_iter(text).last() {
            if let Some(p) = found(value_from(&c[1], expected, vocab, Pick::First), ExtractionRule::CotAnswerTag) {
                return p;
            }
        }
    }
    if instruction == InstructionKind::Declarative {
        if let Some(i) = text.rfind(':') {
            let tail = text[i + 1..].trim_start();
            if let Some(p) = found(value_from(tail, expected, vocab, Pick::First), ExtractionRule::Declarative) {
                return p;
            }
        }
    }
    let rule = match expected {
        AnswerKind::Integer | AnswerKind::Cell => ExtractionRule::LastInteger,
        AnswerKind::Label | AnswerKind::LabelList => ExtractionRule::Vocabulary,
    };
    found(value_from(text, expected, vocab, Pick::Last), rule).unwrap_or_else(ParsedAnswer::unparsed)
}
