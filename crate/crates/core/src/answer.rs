//! Typed answers shared by the oracle, the response parser and scoring.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    Integer,
    Label,
    LabelList,
    /// (row, col) pair.
    Cell,
}

impl AnswerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AnswerKind::Integer => "integer",
            AnswerKind::Label => "label",
            AnswerKind::LabelList => "label_list",
            AnswerKind::Cell => "cell",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum AnswerValue {
    Integer(i64),
    Label(String),
    LabelList(Vec<String>),
    Cell([i64; 2]),
}

impl AnswerValue {
    pub fn kind(&self) -> AnswerKind {
        match self {
            AnswerValue::Integer(_) => AnswerKind::Integer,
            AnswerValue::Label(_) => AnswerKind::Label,
            AnswerValue::LabelList(_) => AnswerKind::LabelList,
            AnswerValue::Cell(_) => AnswerKind::Cell,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self {
            AnswerValue::Integer(v) => Some(*v),
            _ => None,
        }
    }

    /// Kind-specific equality: labels ignore case, label lists compare as sets.
    pub fn matches(&self, other: &AnswerValue) -> bool {
        match (self, other) {
            (AnswerValue::Label(a), AnswerValue::Label(b)) => a.eq_ignore_ascii_case(b),
            (AnswerValue::LabelList(a), AnswerValue::LabelList(b)) => label_set(a) == label_set(b),
            _ => self == other,
        }
    }
}

fn label_set(v: &[String]) -> std::collections::BTreeSet<String> {
    v.iter().map(|s| s.to_ascii_lowercase()).collect()
}

impl fmt::Display for AnswerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnswerValue::Integer(v) => write!(f, "{v}"),
            AnswerValue::Label(s) => f.write_str(s),
            AnswerValue::LabelList(v) => f.write_str(&v.join(", ")),
            AnswerValue::Cell([r, c]) => write!(f, "{r}, {c}"),
        }
    }
}

/// Which rule of the parsing ladder produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionRule {
    CotAnswerTag,
    Declarative,
    LastInteger,
    Vocabulary,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedAnswer {
    /// `None` means unparsed.
    pub value: Option<AnswerValue>,
    pub rule: ExtractionRule,
}

impl ParsedAnswer {
    pub fn unparsed() -> Self {
        Self { value: None, rule: ExtractionRule::None }
    }

    pub fn is_unparsed(&self) -> bool {
        self.value.is_none()
    }

    pub fn kind_str(&self) -> &'static str {
        self.value.as_ref().map_or("unparsed", |v| v.kind().as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_lists_compare_as_sets() {
        let a = AnswerValue::LabelList(vec!["KS".into(), "7D".into()]);
        let b = AnswerValue::LabelList(vec!["7d".into(), "ks".into()]);
        assert!(a.matches(&b));
        assert!(!a.matches(&AnswerValue::LabelList(vec!["KS".into()])));
    }

    #[test]
    fn serde_shape() {
        let v = AnswerValue::Integer(7);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"kind":"integer","value":7}"#);
    }
}
