//! Question bank, prompt assembly and the legend-driven answer oracle.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::{AnswerKind, AnswerValue};
use crate::chess::PIECE_TYPES;
use crate::config::GameKind;
use crate::legend::{ChessLegend, Legend, PokerLegend};
use crate::poker::{Suit, SUITS};

const BUILTIN_BANK: &str = include_str!("../assets/question_bank.json");

/// Blank marker in fill-in-the-blank renderings.
pub const BLANK: &str = "____";

#[derive(Debug, Error, PartialEq)]
pub enum QaError {
    #[error("no question `{key}` for {game}")]
    UnknownKey { key: String, game: &'static str },
    #[error("question `{key}`: cannot resolve placeholder `{{{name}}}`")]
    Placeholder { key: String, name: String },
    #[error("question `{key}` does not apply to this legend: {reason}")]
    Mismatch { key: String, reason: String },
    #[error("question `{key}`: cannot read the target attribute from `{text}`")]
    Unparsable { key: String, text: String },
    #[error("question bank: {0}")]
    Bank(String),
    #[error("unknown {what} `{name}`")]
    UnknownKind { what: &'static str, name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Counting,
    Identification,
    Localization,
    Combined,
}

/// Closed answer vocabulary for label questions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vocabulary {
    PieceTypes,
    Colors,
    Cards,
    Players,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionTemplate {
    pub category: Category,
    pub answer: AnswerKind,
    pub body: String,
    pub declarative: String,
    pub missing_word: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<Vocabulary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GamePreprompts {
    pub debiased: String,
    /// Defaults to the debiased text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub helpful: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preprompts {
    pub chess: GamePreprompts,
    pub poker: GamePreprompts,
    pub cot: String,
    pub cot_suffix: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionBank {
    pub version: u32,
    pub preprompts: Preprompts,
    pub questions: BTreeMap<GameKind, BTreeMap<String, QuestionTemplate>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrepromptKind {
    Neutral,
    Helpful,
    Debiased,
    Cot,
    DebiasedCot,
}

pub const PREPROMPT_KINDS: [PrepromptKind; 5] = [
    PrepromptKind::Neutral,
    PrepromptKind::Helpful,
    PrepromptKind::Debiased,
    PrepromptKind::Cot,
    PrepromptKind::DebiasedCot,
];

impl PrepromptKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PrepromptKind::Neutral => "neutral",
            PrepromptKind::Helpful => "helpful",
            PrepromptKind::Debiased => "debiased",
            PrepromptKind::Cot => "cot",
            PrepromptKind::DebiasedCot => "debiased_cot",
        }
    }

    pub fn parse(s: &str) -> Result<Self, QaError> {
        let k = s.trim().to_ascii_lowercase().replace('-', "_");
        PREPROMPT_KINDS
            .iter()
            .copied()
            .find(|p| p.as_str() == k)
            .ok_or_else(|| QaError::UnknownKind { what: "preprompt", name: s.to_string() })
    }

    pub fn is_cot(self) -> bool {
        matches!(self, PrepromptKind::Cot | PrepromptKind::DebiasedCot)
    }
}

impl fmt::Display for PrepromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstructionKind {
    Direct,
    Declarative,
    MissingWord,
}

pub const INSTRUCTION_KINDS: [InstructionKind; 3] =
    [InstructionKind::Direct, InstructionKind::Declarative, InstructionKind::MissingWord];

impl InstructionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InstructionKind::Direct => "direct",
            InstructionKind::Declarative => "declarative",
            InstructionKind::MissingWord => "missing_word",
        }
    }

    pub fn parse(s: &str) -> Result<Self, QaError> {
        let k = s.trim().to_ascii_lowercase().replace('-', "_");
        let k = match k.as_str() {
            "fill_blank" | "fill_in_the_blank" | "missing" => "missing_word".to_string(),
            _ => k,
        };
        INSTRUCTION_KINDS
            .iter()
            .copied()
            .find(|p| p.as_str() == k)
            .ok_or_else(|| QaError::UnknownKind { what: "instruction", name: s.to_string() })
    }
}

impl fmt::Display for InstructionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedQuestion {
    pub prompt: String,
    pub key: String,
    pub game: GameKind,
    pub preprompt: PrepromptKind,
    pub instruction: InstructionKind,
    pub expected: AnswerKind,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub variables: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub kind: AnswerKind,
    pub value: AnswerValue,
    /// Legend path the answer was read from.
    pub source: String,
}

impl QuestionBank {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_BANK).expect("shipped question bank is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, QaError> {
        let bank: QuestionBank = serde_json::from_str(text).map_err(|e| QaError::Bank(e.to_string()))?;
        bank.validate()?;
        Ok(bank)
    }

    pub fn load(path: &Path) -> Result<Self, QaError> {
        let text = std::fs::read_to_string(path).map_err(|e| QaError::Bank(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Every template has three non-empty renderings and one blank.
    pub fn validate(&self) -> Result<(), QaError> {
        for (game, qs) in &self.questions {
            for (key, t) in qs {
                let bad = |what: &str| QaError::Bank(format!("{}/{key}: {what}", game.as_str()));
                if t.body.trim().is_empty() || t.declarative.trim().is_empty() || t.missing_word.trim().is_empty() {
                    return Err(bad("empty rendering"));
                }
                if t.missing_word.matches(BLANK).count() != 1 {
                    return Err(bad("fill-in-the-blank needs exactly one blank"));
                }
                if matches!(t.answer, AnswerKind::Label | AnswerKind::LabelList) && t.vocabulary.is_none() {
                    return Err(bad("label questions need a vocabulary"));
                }
            }
        }
        Ok(())
    }

    pub fn keys(&self, game: GameKind) -> Vec<&str> {
        self.questions.get(&game).map(|q| q.keys().map(String::as_str).collect()).unwrap_or_default()
    }

    pub fn template(&self, game: GameKind, key: &str) -> Result<&QuestionTemplate, QaError> {
        self.questions
            .get(&game)
            .and_then(|q| q.get(key))
            .ok_or_else(|| QaError::UnknownKey { key: key.to_string(), game: game.as_str() })
    }

    fn game_preprompts(&self, game: GameKind) -> &GamePreprompts {
        match game {
            GameKind::Chess => &self.preprompts.chess,
            GameKind::Poker => &self.preprompts.poker,
        }
    }

    /// Text placed before the question.
    pub fn preprompt_text(&self, game: GameKind, kind: PrepromptKind) -> String {
        let g = self.game_preprompts(game);
        match kind {
            PrepromptKind::Neutral => String::new(),
            PrepromptKind::Helpful => g.helpful.clone().unwrap_or_else(|| g.debiased.clone()),
            PrepromptKind::Debiased => g.debiased.clone(),
            PrepromptKind::Cot => self.preprompts.cot.clone(),
            PrepromptKind::DebiasedCot => format!("{} {}", g.debiased, self.preprompts.cot),
        }
    }
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn fill(text: &str, key: &str, vars: &BTreeMap<String, String>) -> Result<String, QaError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let end = after.find('}').ok_or_else(|| QaError::Placeholder { key: key.into(), name: after.into() })?;
        let name = &after[..end];
        let v = vars.get(name).ok_or_else(|| QaError::Placeholder { key: key.into(), name: name.into() })?;
        out.push_str(v);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Substitute `{name}` placeholders.
pub fn fill_placeholders(text: &str, vars: &BTreeMap<String, String>) -> Result<String, QaError> {
    fill(text, "", vars)
}

/// Placeholder values a template needs, read from the legend.
pub fn template_variables(t: &QuestionTemplate, legend: &Legend) -> BTreeMap<String, String> {
    let mut vars = BTreeMap::new();
    let text = format!("{} {} {}", t.body, t.declarative, t.missing_word);
    if text.contains("{suit}") {
        if let Legend::Poker(p) = legend {
            vars.insert("suit".into(), dominant_suit(p).name().to_string());
        }
    }
    vars
}

/// Most frequent face-up suit; ties go to the earlier suit, no cards to hearts.
pub fn dominant_suit(p: &PokerLegend) -> Suit {
    let mut counts = [0usize; 4];
    for c in p.all_cards().filter(|c| c.face_up) {
        counts[SUITS.iter().position(|s| *s == c.card.suit).unwrap()] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    if best == 0 {
        return Suit::Hearts;
    }
    SUITS[counts.iter().position(|&c| c == best).unwrap()]
}

/// Question text in the requested instruction form, without preprompt.
pub fn question_form(t: &QuestionTemplate, instruction: InstructionKind) -> String {
    match instruction {
        InstructionKind::Direct => t.body.clone(),
        InstructionKind::Declarative => format!("{} {}", t.body, t.declarative),
        InstructionKind::MissingWord => t.missing_word.clone(),
    }
}

pub fn instantiate_question(
    bank: &QuestionBank,
    key: &str,
    game: GameKind,
    legend: &Legend,
    preprompt: PrepromptKind,
    instruction: InstructionKind,
) -> Result<RenderedQuestion, QaError> {
    let t = bank.template(game, key)?;
    let vars = template_variables(t, legend);
    let question = fill(&question_form(t, instruction), key, &vars)?;
    let mut parts = vec![bank.preprompt_text(game, preprompt), question];
    if preprompt.is_cot() {
        parts.push(bank.preprompts.cot_suffix.clone());
    }
    let prompt = squash(&parts.join(" "));
    Ok(RenderedQuestion {
        prompt,
        key: key.to_string(),
        game,
        preprompt,
        instruction,
        expected: t.answer,
        variables: vars,
    })
}

/// Full cross product in declaration order: key slowest, instruction fastest.
pub fn enumerate_combinations(
    keys: &[String],
    preprompts: &[PrepromptKind],
    instructions: &[InstructionKind],
) -> Vec<(String, PrepromptKind, InstructionKind)> {
    let mut out = Vec::with_capacity(keys.len() * preprompts.len() * instructions.len());
    for k in keys {
        for &p in preprompts {
            for &i in instructions {
                out.push((k.clone(), p, i));
            }
        }
    }
    out
}

/// A model-style answer sentence for `truth` in the given instruction form.
pub fn render_truth(
    t: &QuestionTemplate,
    vars: &BTreeMap<String, String>,
    truth: &AnswerValue,
    instruction: InstructionKind,
) -> String {
    let v = truth.to_string();
    let sub = |s: &str| fill(s, "", vars).unwrap_or_else(|_| s.to_string());
    match instruction {
        InstructionKind::Direct => v,
        InstructionKind::Declarative => format!("{} {v}", sub(&t.declarative)),
        InstructionKind::MissingWord => sub(&t.missing_word).replace(BLANK, &v),
    }
}

/// Answer vocabulary for a label question on this legend.
pub fn vocabulary_words(v: Vocabulary, legend: &Legend) -> Vec<String> {
    match v {
        Vocabulary::PieceTypes => PIECE_TYPES.iter().map(|t| t.as_str().to_string()).collect(),
        Vocabulary::Colors => vec!["white".into(), "black".into()],
        Vocabulary::Cards => crate::poker::full_deck().iter().map(|c| c.encoding()).collect(),
        Vocabulary::Players => match legend {
            Legend::Poker(p) => p.players.iter().map(|p| p.player_id.clone()).collect(),
            Legend::Chess(_) => Vec::new(),
        },
    }
}

/// Piece color class: luma above one half reads as white.
pub fn color_class(c: &crate::scene::Rgba) -> &'static str {
    if c.luma() > 0.5 {
        "white"
    } else {
        "black"
    }
}

fn mismatch(key: &str, reason: impl Into<String>) -> QaError {
    QaError::Mismatch { key: key.to_string(), reason: reason.into() }
}

fn truth(kind: AnswerKind, value: AnswerValue, source: &str) -> GroundTruth {
    GroundTruth { kind, value, source: source.to_string() }
}

fn one_piece<'a>(key: &str, l: &'a ChessLegend) -> Result<&'a crate::legend::PieceRecord, QaError> {
    match l.pieces.as_slice() {
        [p] => Ok(p),
        other => Err(mismatch(key, format!("needs exactly one piece, found {}", other.len()))),
    }
}

fn two_pieces<'a>(
    key: &str,
    l: &'a ChessLegend,
) -> Result<(&'a crate::legend::PieceRecord, &'a crate::legend::PieceRecord), QaError> {
    match l.pieces.as_slice() {
        [a, b] => Ok((a, b)),
        other => Err(mismatch(key, format!("needs exactly two pieces, found {}", other.len()))),
    }
}

fn chess_answer(key: &str, l: &ChessLegend) -> Result<GroundTruth, QaError> {
    use AnswerKind as K;
    use AnswerValue as V;
    Ok(match key {
        "count_pieces" => truth(K::Integer, V::Integer(l.pieces.len() as i64), "pieces"),
        "count_identification_white_pieces" => {
            let n = l.pieces.iter().filter(|p| color_class(&p.color) == "white").count();
            truth(K::Integer, V::Integer(n as i64), "pieces[].color")
        }
        "identify_type_one_piece" => {
            let p = one_piece(key, l)?;
            truth(K::Label, V::Label(p.piece_type.as_str().into()), "pieces[0].type")
        }
        "identify_pieces" => {
            if l.pieces.is_empty() {
                return Err(mismatch(key, "no pieces on the board"));
            }
            let types: Vec<String> = PIECE_TYPES
                .iter()
                .filter(|t| l.pieces.iter().any(|p| p.piece_type == **t))
                .map(|t| t.as_str().to_string())
                .collect();
            truth(K::LabelList, V::LabelList(types), "pieces[].type")
        }
        "identify_color_one_piece" => {
            let p = one_piece(key, l)?;
            truth(K::Label, V::Label(color_class(&p.color).into()), "pieces[0].color")
        }
        "localize_row_one_piece" => {
            let p = one_piece(key, l)?;
            truth(K::Integer, V::Integer(i64::from(p.position[0])), "pieces[0].position[0]")
        }
        "localize_column_one_piece" => {
            let p = one_piece(key, l)?;
            truth(K::Integer, V::Integer(i64::from(p.position[1])), "pieces[0].position[1]")
        }
        "localize_cell_one_piece" => {
            let p = one_piece(key, l)?;
            truth(K::Cell, V::Cell([i64::from(p.position[0]), i64::from(p.position[1])]), "pieces[0].position")
        }
        "relative_rows_two_pieces" => {
            let (a, b) = two_pieces(key, l)?;
            let d = (i64::from(a.position[0]) - i64::from(b.position[0])).abs();
            truth(K::Integer, V::Integer(d), "pieces[].position[0]")
        }
        "relative_columns_two_pieces" => {
            let (a, b) = two_pieces(key, l)?;
            let d = (i64::from(a.position[1]) - i64::from(b.position[1])).abs();
            truth(K::Integer, V::Integer(d), "pieces[].position[1]")
        }
        "board_square_count" => {
            truth(K::Integer, V::Integer(i64::from(l.board.rows) * i64::from(l.board.columns)), "board")
        }
        _ => return Err(QaError::UnknownKey { key: key.to_string(), game: "chess" }),
    })
}

/// Suit named in a question, e.g. "How many hearts cards ...".
pub fn suit_in_text(text: &str) -> Option<Suit> {
    let re = regex::Regex::new(r"(?i)\b(spade|heart|diamond|club)s?\b").expect("static regex");
    re.captures_iter(text).last().and_then(|c| Suit::parse(&c[1]))
}

fn poker_answer(key: &str, l: &PokerLegend, question_text: Option<&str>) -> Result<GroundTruth, QaError> {
    use AnswerKind as K;
    use AnswerValue as V;
    Ok(match key {
        "count_total_cards" | "count_overlap_cards" => {
            truth(K::Integer, V::Integer(l.total_cards() as i64), "community_cards+players[].hand+overlap")
        }
        "count_community_cards" => truth(K::Integer, V::Integer(l.community_cards.len() as i64), "community_cards"),
        "count_identify_face_up_cards" => {
            let n = l.all_cards().filter(|c| c.face_up).count();
            truth(K::Integer, V::Integer(n as i64), "cards[].face_up")
        }
        "identify_cards" => {
            let cards: Vec<String> = l
                .community_cards
                .iter()
                .chain(l.overlap.iter().flat_map(|o| o.cards.iter()))
                .map(|c| c.card.encoding())
                .collect();
            if cards.is_empty() {
                return Err(mismatch(key, "no cards on the table"));
            }
            truth(K::LabelList, V::LabelList(cards), "community_cards")
        }
        "suit_count" => {
            let suit = match question_text {
                Some(text) => suit_in_text(text)
                    .ok_or_else(|| QaError::Unparsable { key: key.to_string(), text: text.to_string() })?,
                None => dominant_suit(l),
            };
            let n = l.all_cards().filter(|c| c.face_up && c.card.suit == suit).count();
            truth(K::Integer, V::Integer(n as i64), "cards[].card")
        }
        "most_cards_player" => {
            let best = l.players.iter().map(|p| p.hand.len()).max().ok_or_else(|| mismatch(key, "no players"))?;
            let ids: Vec<String> =
                l.players.iter().filter(|p| p.hand.len() == best).map(|p| p.player_id.clone()).collect();
            truth(K::LabelList, V::LabelList(ids), "players[].hand")
        }
        _ => return Err(QaError::UnknownKey { key: key.to_string(), game: "poker" }),
    })
}

/// The oracle: ground truth for a question key on a legend.
pub fn extract_answer(
    key: &str,
    game: GameKind,
    legend: &Legend,
    question_text: Option<&str>,
) -> Result<GroundTruth, QaError> {
    match (game, legend) {
        (GameKind::Chess, Legend::Chess(l)) => chess_answer(key, l),
        (GameKind::Poker, Legend::Poker(l)) => poker_answer(key, l, question_text),
        _ => Err(mismatch(key, format!("{} question on a legend of the other game", game.as_str()))),
    }
}

/// One entry of a per-image `qa.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaItem {
    pub key: String,
    pub prompt: String,
    pub preprompt: PrepromptKind,
    pub instruction: InstructionKind,
    pub ground_truth: GroundTruth,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub variables: BTreeMap<String, String>,
}

/// Questions for one legend. An empty `keys` means the whole bank. Keys that
/// do not apply (e.g. single-piece keys on a crowded board) are skipped when
/// `keys` is empty or `skip_inapplicable` is set, and are errors otherwise.
pub fn build_qa(
    bank: &QuestionBank,
    game: GameKind,
    legend: &Legend,
    keys: &[String],
    preprompts: &[PrepromptKind],
    instructions: &[InstructionKind],
    skip_inapplicable: bool,
) -> Result<Vec<QaItem>, QaError> {
    let explicit = !keys.is_empty();
    let skip = skip_inapplicable || !explicit;
    let keys: Vec<String> =
        if explicit { keys.to_vec() } else { bank.keys(game).into_iter().map(String::from).collect() };
    let mut out = Vec::new();
    for (key, p, i) in enumerate_combinations(&keys, preprompts, instructions) {
        let q = instantiate_question(bank, &key, game, legend, p, i)?;
        let gt = match extract_answer(&key, game, legend, Some(&q.prompt)) {
            Ok(gt) => gt,
            Err(QaError::Mismatch { .. }) if skip => continue,
            Err(e) => return Err(e),
        };
        out.push(QaItem {
            key,
            prompt: q.prompt,
            preprompt: p,
            instruction: i,
            ground_truth: gt,
            variables: q.variables,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_bank_loads_and_has_required_keys() {
        let bank = QuestionBank::builtin();
        for k in [
            "count_pieces",
            "count_identification_white_pieces",
            "identify_type_one_piece",
            "localize_row_one_piece",
            "localize_column_one_piece",
            "relative_rows_two_pieces",
            "relative_columns_two_pieces",
            "board_square_count",
        ] {
            bank.template(GameKind::Chess, k).unwrap();
        }
        for k in [
            "count_total_cards",
            "count_community_cards",
            "count_identify_face_up_cards",
            "identify_cards",
            "suit_count",
            "most_cards_player",
        ] {
            bank.template(GameKind::Poker, k).unwrap();
        }
    }

    #[test]
    fn combinations_product() {
        let keys = vec!["a".to_string(), "b".to_string()];
        let c = enumerate_combinations(
            &keys,
            &[PrepromptKind::Neutral, PrepromptKind::Helpful, PrepromptKind::Cot],
            &[InstructionKind::Declarative, InstructionKind::MissingWord],
        );
        assert_eq!(c.len(), 12);
        assert_eq!(c[0], ("a".into(), PrepromptKind::Neutral, InstructionKind::Declarative));
        assert_eq!(c[11], ("b".into(), PrepromptKind::Cot, InstructionKind::MissingWord));
    }

    #[test]
    fn placeholders() {
        let mut vars = BTreeMap::new();
        vars.insert("suit".to_string(), "hearts".to_string());
        assert_eq!(fill("How many {suit} cards?", "k", &vars).unwrap(), "How many hearts cards?");
        assert!(matches!(fill("{color}", "k", &vars), Err(QaError::Placeholder { .. })));
    }

    #[test]
    fn suit_from_question() {
        assert_eq!(suit_in_text("How many hearts cards are face up?"), Some(Suit::Hearts));
        assert_eq!(suit_in_text("How many Spade cards?"), Some(Suit::Spades));
        assert_eq!(suit_in_text("How many cards?"), None);
    }

    #[test]
    fn kinds_parse() {
        assert_eq!(PrepromptKind::parse("debiased-cot").unwrap(), PrepromptKind::DebiasedCot);
        assert_eq!(InstructionKind::parse("fill_blank").unwrap(), InstructionKind::MissingWord);
        assert!(PrepromptKind::parse("polite").is_err());
    }
}
