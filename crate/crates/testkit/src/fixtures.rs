//! Hand-checked fixtures: recorded model replies, metric sets and series.

use std::collections::BTreeMap;

use serde_json::Value;
use visdiag_core::answer::{AnswerValue, ExtractionRule, ParsedAnswer};
use visdiag_core::chess::{ChessConfig, PieceCountSpec};
use visdiag_core::diagnostics::EvalRecord;
use visdiag_core::qa::{GroundTruth, InstructionKind, PrepromptKind};
use visdiag_core::scene::{SceneConfig, Setting};

/// Eight replies to "how many pieces" on a board holding ten.
pub const COUNTING_REPLIES: [&str; 8] = [
    "The number of pieces in the image is: 10",
    "The number of pieces in the image is: 10",
    "The number of pieces in the image is: 8",
    "The number of pieces in the image is: 9",
    "The number of pieces in the image is: 8",
    "The number of pieces in the image is: 8",
    "The number of pieces in the image is: 12",
    "The number of pieces in the image is: 10",
];
pub const COUNTING_TRUTH: i64 = 10;
pub const COUNTING_PARSED: [i64; 8] = [10, 10, 8, 9, 8, 8, 12, 10];

/// Sixteen column/row replies for a single piece at row 3, column 3.
pub const LOCALIZATION_REPLIES: [(&str, &str); 16] = [
    ("localize_column_one_piece", "The column on which the piece is on the board is: 3"),
    ("localize_row_one_piece", "The row on which the piece is on the board is: 3"),
    ("localize_column_one_piece", "The column on which the piece is on the board is: 3"),
    ("localize_row_one_piece", "The row on which the piece is on the board is: 3"),
    ("localize_column_one_piece", "The column on which the piece is on the board is: 2"),
    ("localize_row_one_piece", "The row on which the piece is on the board is: 3"),
    ("localize_column_one_piece", "The column on which the piece is on the board is: 3"),
    ("localize_row_one_piece", "The row on which the piece is on the board is: 3"),
    ("localize_column_one_piece", "The column on which the piece is on the board is: 2"),
    ("localize_row_one_piece", "The row on which the piece is on the board is: 1"),
    ("localize_column_one_piece", "The column on which the piece is on the board is: 3"),
    ("localize_row_one_piece", "The row on which the piece is on the board is: 3"),
    ("localize_column_one_piece", "The column on which the piece is on the board is: 2"),
    ("localize_row_one_piece", "The row on which the piece is on the board is: 2"),
    ("localize_column_one_piece", "The column on which the piece is on the board is: 3"),
    ("localize_row_one_piece", "The row on which the piece is on the board is: 3"),
];
pub const LOCALIZATION_TRUTH: [i64; 2] = [3, 3];
/// Correct replies the stated score claims.
pub const LOCALIZATION_CLAIMED: usize = 12;
/// Correct replies according to the check marks printed beside the same table.
pub const LOCALIZATION_MARKED: usize = 11;

pub fn truth(value: AnswerValue) -> GroundTruth {
    GroundTruth { kind: value.kind(), value, source: "fixture".into() }
}

pub fn parsed(value: Option<AnswerValue>) -> ParsedAnswer {
    match value {
        Some(v) => ParsedAnswer { value: Some(v), rule: ExtractionRule::LastInteger },
        None => ParsedAnswer::unparsed(),
    }
}

/// An integer-answer record with `count` as its only variable.
pub fn count_record(index: u64, target: i64, pred: Option<i64>) -> EvalRecord {
    let mut vars = BTreeMap::new();
    vars.insert("chess.count_config".to_string(), Value::from(target));
    EvalRecord::new(
        index,
        "count_pieces",
        vars,
        PrepromptKind::Helpful,
        InstructionKind::Declarative,
        truth(AnswerValue::Integer(target)),
        parsed(pred.map(AnswerValue::Integer)),
    )
}

/// Counts 1..=5, one sample each, always answered with 3.
pub fn constant_three() -> Vec<EvalRecord> {
    (1..=5).map(|t| count_record(t as u64, t, Some(3))).collect()
}
pub const CONSTANT_THREE_NMAE: f64 = (2.0 + 0.5 + 0.0 + 0.25 + 0.4) / 5.0;

/// Ten integer answers, the last unparsed.
pub const MIXED_TRUTH: [i64; 10] = [1, 1, 2, 2, 2, 3, 3, 4, 4, 5];
pub const MIXED_PRED: [Option<i64>; 10] =
    [Some(1), Some(2), Some(2), Some(2), Some(3), Some(3), Some(1), Some(4), Some(6), None];

pub fn mixed() -> Vec<EvalRecord> {
    MIXED_TRUTH.iter().zip(MIXED_PRED).enumerate().map(|(i, (&t, p))| count_record(i as u64, t, p)).collect()
}

/// Reference values from scikit-learn (`precision_recall_fscore_support`,
/// macro average over the truth labels, zero_division=0) and numpy.
pub struct MixedExpected;
impl MixedExpected {
    pub const ACCURACY: f64 = 0.5;
    pub const PRECISION: f64 = 0.5333333333333333;
    pub const RECALL: f64 = 0.4333333333333333;
    pub const F1: f64 = 0.4666666666666666;
    pub const MAE: f64 = 1.1;
    pub const MSE: f64 = 3.5;
    pub const NMAE: f64 = 0.36666666666666664;
}

/// Level series with Pearson r = 14 / sqrt(1832).
pub const CORR_A: [f64; 7] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
pub const CORR_B: [f64; 7] = [0.0, 0.0, 7.0, 2.0, 0.0, 0.0, 7.0];
/// 40-digit evaluation of 14 / sqrt(1832).
pub const CORR_PEARSON: f64 = 0.327_088_519_461_198_419_623_943_506_482_951_057_458;
/// scipy.stats.spearmanr on the same series (ties averaged).
pub const CORR_SPEARMAN: f64 = 0.3187276291558383;

/// A fixed eight-piece board at 640x480 with the given blur preset.
pub fn blur_scene(blur: &str) -> SceneConfig {
    let mut cfg = SceneConfig::default();
    cfg.setup.resolution = serde_json::from_value(Value::from("low")).expect("resolution preset");
    cfg.noise.blur = Setting::preset(blur);
    cfg.chess = Some(ChessConfig { count_config: PieceCountSpec::explicit(8), ..Default::default() });
    cfg
}
