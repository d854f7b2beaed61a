//! Dataset specifications and their expansion into scene combinations.
//!
//! A dataset file has a `dataset:` header and a `variables:` map keyed by a
//! dotted path into the scene config. Each variable declares how it sweeps;
//! the sweep is the Cartesian product of all variables in declaration order.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use serde_yaml::{Mapping, Value as Yaml};
use thiserror::Error;

use crate::seed::{derive_seed, rng_for};

pub const DEFAULT_EXPANSION_CAP: u64 = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("malformed config document: {0}")]
    Malformed(String),
    #[error("{path}: unknown variate_type `{found}`")]
    UnknownVariateType { path: String, found: String },
    #[error("{path}: {reason}")]
    LevelShape { path: String, reason: String },
    #[error("duplicate variable path `{0}`")]
    DuplicatePath(String),
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("dataset `{0}` draws random levels but declares no seed")]
    MissingSeed(String),
    #[error("expansion of {count} scenes exceeds the cap of {cap}")]
    TooLarge { count: u128, cap: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariateType {
    Fixed,
    VaryingAll,
    VaryingRandom,
    VaryingAmongRange,
}

impl VariateType {
    /// Accepts the canonical names plus the two aliases found in poker configs.
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "fixed" => Some(Self::Fixed),
            "varying_all" => Some(Self::VaryingAll),
            "varying_random" | "varying_among" => Some(Self::VaryingRandom),
            "varying_among_range" | "varying_all_range" => Some(Self::VaryingAmongRange),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fixed => "fixed",
            Self::VaryingAll => "varying_all",
            Self::VaryingRandom => "varying_random",
            Self::VaryingAmongRange => "varying_among_range",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Levels {
    Scalar(Value),
    List(Vec<Value>),
    IntRange(i64, i64),
    RealRange(f64, f64),
}

impl Levels {
    fn to_json(&self) -> Value {
        match self {
            Levels::Scalar(v) => v.clone(),
            Levels::List(vs) => Value::Array(vs.clone()),
            Levels::IntRange(a, b) => serde_json::json!([a, b]),
            Levels::RealRange(a, b) => serde_json::json!([a, b]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub path: String,
    pub variate_type: VariateType,
    pub levels: Levels,
    pub n_images: u32,
    pub randomize: bool,
    pub randomize_percentage: f64,
}

impl VariableSpec {
    pub fn fixed(path: &str, value: Value) -> Self {
        Self {
            path: path.to_string(),
            variate_type: VariateType::Fixed,
            levels: Levels::Scalar(value),
            n_images: 1,
            randomize: false,
            randomize_percentage: 0.2,
        }
    }

    pub fn varying_all(path: &str, levels: Vec<Value>, n_images: u32) -> Self {
        Self {
            path: path.to_string(),
            variate_type: VariateType::VaryingAll,
            levels: Levels::List(levels),
            n_images,
            randomize: false,
            randomize_percentage: 0.2,
        }
    }

    /// Number of values this variable contributes to the product.
    pub fn axis_len(&self) -> u64 {
        match (&self.variate_type, &self.levels) {
            (VariateType::Fixed, _) => 1,
            (VariateType::VaryingAll, Levels::List(v)) => v.len() as u64,
            (VariateType::VaryingAmongRange, Levels::IntRange(a, b)) => (b - a) as u64 + 1,
            (VariateType::VaryingAmongRange, Levels::RealRange(..))
            | (VariateType::VaryingRandom, _) => u64::from(self.n_images),
            _ => 1,
        }
    }

    fn draws_randomly(&self) -> bool {
        self.randomize
            || self.variate_type == VariateType::VaryingRandom
            || matches!(self.levels, Levels::RealRange(..))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceSet {
    #[default]
    Default,
    OldSchool,
    StonesColor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    #[default]
    Chess,
    Poker,
}

impl GameKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GameKind::Chess => "chess",
            GameKind::Poker => "poker",
        }
    }
}

/// Which questions are attached to each generated image.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QuestionPlan {
    /// Empty means every bank key applicable to the scene.
    #[serde(default)]
    pub keys: Vec<String>,
    #[serde(default)]
    pub preprompts: Vec<String>,
    #[serde(default)]
    pub instructions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub output_dir: String,
    pub seed: u64,
    pub seed_declared: bool,
    pub piece_set: PieceSet,
    pub game: GameKind,
    pub replicates: u32,
    pub variables: Vec<VariableSpec>,
    /// Scene config applied before the variable assignments.
    pub base: Option<Value>,
    pub questions: QuestionPlan,
    pub expansion_cap: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigCombination {
    pub index: u64,
    pub assignments: BTreeMap<String, Value>,
    pub derived_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub total: u64,
    pub combinations: Vec<ConfigCombination>,
}

// ---------------------------------------------------------------------------
// parsing

fn malformed(msg: impl Into<String>) -> ConfigError {
    ConfigError::Malformed(msg.into())
}

fn shape(path: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::LevelShape { path: path.to_string(), reason: reason.into() }
}

fn yaml_to_json(path: &str, v: &Yaml) -> Result<Value, ConfigError> {
    serde_json::to_value(v).map_err(|e| shape(path, format!("unsupported level value: {e}")))
}

fn get<'a>(map: &'a Mapping, key: &str) -> Option<&'a Yaml> {
    map.get(Yaml::String(key.to_string()))
}

fn as_u64(path: &str, key: &str, v: &Yaml) -> Result<u64, ConfigError> {
    v.as_u64().ok_or_else(|| ConfigError::Invalid {
        path: path.to_string(),
        reason: format!("`{key}` must be a non-negative integer"),
    })
}

fn parse_levels(path: &str, kind: VariateType, raw: Option<&Yaml>) -> Result<Levels, ConfigError> {
    let raw = raw.ok_or_else(|| shape(path, "missing variate_levels"))?;
    match kind {
        VariateType::Fixed => match raw {
            Yaml::Sequence(_) => Err(shape(path, "fixed variables take a single value, not a list")),
            Yaml::Mapping(m) => match get(m, "value") {
                Some(v) => Ok(Levels::Scalar(yaml_to_json(path, v)?)),
                None => Ok(Levels::Scalar(yaml_to_json(path, raw)?)),
            },
            other => Ok(Levels::Scalar(yaml_to_json(path, other)?)),
        },
        VariateType::VaryingAll | VariateType::VaryingRandom => match raw {
            Yaml::Sequence(items) if !items.is_empty() => Ok(Levels::List(
                items.iter().map(|v| yaml_to_json(path, v)).collect::<Result<_, _>>()?,
            )),
            Yaml::Sequence(_) => Err(shape(path, "level list is empty")),
            _ => Err(shape(path, "expected a non-empty list of levels")),
        },
        VariateType::VaryingAmongRange => {
            let items = match raw {
                Yaml::Sequence(items) if items.len() == 2 => items,
                _ => return Err(shape(path, "expected a [min, max] pair")),
            };
            let (lo, hi) = (&items[0], &items[1]);
            if let (Some(a), Some(b)) = (lo.as_i64(), hi.as_i64()) {
                if a > b {
                    return Err(shape(path, format!("range min {a} exceeds max {b}")));
                }
                return Ok(Levels::IntRange(a, b));
            }
            match (lo.as_f64(), hi.as_f64()) {
                (Some(a), Some(b)) if a.is_finite() && b.is_finite() => {
                    if a > b {
                        return Err(shape(path, format!("range min {a} exceeds max {b}")));
                    }
                    Ok(Levels::RealRange(a, b))
                }
                _ => Err(shape(path, "range bounds must be numbers")),
            }
        }
    }
}

fn parse_variable(path: &str, body: &Yaml) -> Result<VariableSpec, ConfigError> {
    let map = body
        .as_mapping()
        .ok_or_else(|| malformed(format!("variable `{path}` must be a mapping")))?;
    let kind_name = get(map, "variate_type")
        .and_then(Yaml::as_str)
        .ok_or_else(|| ConfigError::Invalid {
            path: path.to_string(),
            reason: "missing variate_type".into(),
        })?;
    let variate_type = VariateType::parse(kind_name).ok_or_else(|| ConfigError::UnknownVariateType {
        path: path.to_string(),
        found: kind_name.to_string(),
    })?;
    // `value:` beside the type is shorthand for a fixed level.
    let levels_raw = get(map, "variate_levels").or_else(|| get(map, "value"));
    let levels = parse_levels(path, variate_type, levels_raw)?;
    let n_images = match get(map, "n_images") {
        Some(v) => as_u64(path, "n_images", v)?,
        None => 1,
    };
    if n_images == 0 || n_images > u64::from(u32::MAX) {
        return Err(ConfigError::Invalid { path: path.into(), reason: "n_images must be positive".into() });
    }
    let randomize = match get(map, "randomize") {
        Some(v) => v.as_bool().ok_or_else(|| ConfigError::Invalid {
            path: path.into(),
            reason: "`randomize` must be a boolean".into(),
        })?,
        None => false,
    };
    let randomize_percentage = match get(map, "randomize_percentage") {
        Some(v) => v.as_f64().ok_or_else(|| ConfigError::Invalid {
            path: path.into(),
            reason: "`randomize_percentage` must be a number".into(),
        })?,
        None => 0.2,
    };
    Ok(VariableSpec {
        path: path.to_string(),
        variate_type,
        levels,
        n_images: n_images as u32,
        randomize,
        randomize_percentage,
    })
}

/// Game inferred from variable paths when the header does not name one.
fn infer_game(vars: &[VariableSpec]) -> GameKind {
    let poker_prefixes = ["poker.", "n_players", "card_distribution_inputs.", "chip_distribution_inputs."];
    if vars.iter().any(|v| poker_prefixes.iter().any(|p| v.path.starts_with(p))) {
        GameKind::Poker
    } else {
        GameKind::Chess
    }
}

/// Parse a YAML (or JSON) dataset document.
pub fn parse_dataset_spec(text: &str) -> Result<DatasetSpec, ConfigError> {
    let doc: Yaml = serde_yaml::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let root = doc.as_mapping().ok_or_else(|| malformed("top level must be a mapping"))?;
    let header = get(root, "dataset")
        .and_then(Yaml::as_mapping)
        .ok_or_else(|| malformed("missing `dataset:` header"))?;

    let name = get(header, "name")
        .and_then(Yaml::as_str)
        .ok_or_else(|| malformed("dataset.name is required"))?
        .to_string();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return Err(ConfigError::Invalid {
            path: "dataset.name".into(),
            reason: format!("`{name}` is not an identifier"),
        });
    }
    let output_dir = get(header, "output_dir").and_then(Yaml::as_str).unwrap_or(&name).to_string();
    let (seed, seed_declared) = match get(header, "seed") {
        Some(v) => (as_u64("dataset.seed", "seed", v)?, true),
        None => (0, false),
    };
    let piece_set = match get(header, "piece_set") {
        Some(v) => serde_yaml::from_value(v.clone()).map_err(|e| ConfigError::Invalid {
            path: "dataset.piece_set".into(),
            reason: e.to_string(),
        })?,
        None => PieceSet::Default,
    };
    let replicates = match get(header, "replicates") {
        Some(v) => as_u64("dataset.replicates", "replicates", v)?,
        None => 1,
    };
    if replicates == 0 || replicates > u64::from(u32::MAX) {
        return Err(ConfigError::Invalid { path: "dataset.replicates".into(), reason: "must be positive".into() });
    }
    let expansion_cap = match get(header, "expansion_cap") {
        Some(v) => as_u64("dataset.expansion_cap", "expansion_cap", v)?,
        None => DEFAULT_EXPANSION_CAP,
    };

    let mut variables = Vec::new();
    match get(root, "variables") {
        None | Some(Yaml::Null) => {}
        Some(Yaml::Mapping(vars)) => {
            for (k, body) in vars {
                let path = k.as_str().ok_or_else(|| malformed("variable paths must be strings"))?;
                if variables.iter().any(|v: &VariableSpec| v.path == path) {
                    return Err(ConfigError::DuplicatePath(path.to_string()));
                }
                variables.push(parse_variable(path, body)?);
            }
        }
        Some(_) => return Err(malformed("`variables:` must be a mapping")),
    }

    let game = match get(header, "game") {
        Some(v) => serde_yaml::from_value(v.clone()).map_err(|e| ConfigError::Invalid {
            path: "dataset.game".into(),
            reason: e.to_string(),
        })?,
        None => infer_game(&variables),
    };
    let base = match get(root, "scene") {
        Some(v) => Some(yaml_to_json("scene", v)?),
        None => None,
    };
    let questions = match get(root, "questions") {
        Some(v) => serde_yaml::from_value(v.clone()).map_err(|e| ConfigError::Invalid {
            path: "questions".into(),
            reason: e.to_string(),
        })?,
        None => QuestionPlan::default(),
    };

    let spec = DatasetSpec {
        name,
        output_dir,
        seed,
        seed_declared,
        piece_set,
        game,
        replicates: replicates as u32,
        variables,
        base,
        questions,
        expansion_cap,
    };
    if !spec.seed_declared && spec.variables.iter().any(VariableSpec::draws_randomly) {
        return Err(ConfigError::MissingSeed(spec.name));
    }
    if !spec.seed_declared {
        log::warn!("dataset `{}` declares no seed; scene generation uses seed 0", spec.name);
    }
    Ok(spec)
}

fn json_to_yaml(v: &Value) -> Yaml {
    serde_yaml::to_value(v).expect("json values are representable in yaml")
}

impl DatasetSpec {
    /// Canonical YAML document; parsing it yields an equal spec.
    pub fn to_yaml(&self) -> String {
        let mut header = Mapping::new();
        header.insert("name".into(), self.name.clone().into());
        header.insert("output_dir".into(), self.output_dir.clone().into());
        if self.seed_declared {
            header.insert("seed".into(), self.seed.into());
        }
        header.insert("piece_set".into(), serde_yaml::to_value(self.piece_set).unwrap());
        header.insert("game".into(), self.game.as_str().into());
        header.insert("replicates".into(), u64::from(self.replicates).into());
        if self.expansion_cap != DEFAULT_EXPANSION_CAP {
            header.insert("expansion_cap".into(), self.expansion_cap.into());
        }
        let mut vars = Mapping::new();
        for v in &self.variables {
            let mut body = Mapping::new();
            body.insert("variate_type".into(), v.variate_type.as_str().into());
            body.insert("variate_levels".into(), json_to_yaml(&v.levels.to_json()));
            body.insert("n_images".into(), u64::from(v.n_images).into());
            body.insert("randomize".into(), v.randomize.into());
            body.insert("randomize_percentage".into(), v.randomize_percentage.into());
            vars.insert(v.path.clone().into(), Yaml::Mapping(body));
        }
        let mut root = Mapping::new();
        root.insert("dataset".into(), Yaml::Mapping(header));
        root.insert("variables".into(), Yaml::Mapping(vars));
        if let Some(base) = &self.base {
            root.insert("scene".into(), json_to_yaml(base));
        }
        if self.questions != QuestionPlan::default() {
            root.insert("questions".into(), serde_yaml::to_value(&self.questions).unwrap());
        }
        serde_yaml::to_string(&Yaml::Mapping(root)).expect("yaml serialization")
    }

    /// Replication factor applied to every combination.
    pub fn replication(&self) -> u64 {
        let per_level = self
            .variables
            .iter()
            .filter(|v| v.variate_type == VariateType::VaryingAll)
            .map(|v| u64::from(v.n_images))
            .max()
            .unwrap_or(1);
        per_level * u64::from(self.replicates)
    }

    /// Analytic size of the expansion, without materializing it.
    pub fn expansion_size(&self) -> u128 {
        let mut n: u128 = u128::from(self.replication());
        for v in &self.variables {
            n = n.saturating_mul(u128::from(v.axis_len()));
        }
        n
    }
}

// ---------------------------------------------------------------------------
// expansion

/// Draw uniformly from `[base(1-p), base(1+p)]`.
pub fn resolve_randomization<R: Rng>(base: f64, percentage: f64, rng: &mut R) -> f64 {
    let p = if (0.0..=1.0).contains(&percentage) {
        percentage
    } else {
        log::warn!("randomization percentage {percentage} clamped to [0, 1]");
        percentage.clamp(0.0, 1.0)
    };
    if p == 0.0 || base == 0.0 {
        // still consume one draw so the stream position does not depend on p
        let _: f64 = rng.random();
        return base;
    }
    let (lo, hi) = {
        let a = base * (1.0 - p);
        let b = base * (1.0 + p);
        if a <= b { (a, b) } else { (b, a) }
    };
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

fn axis_values(spec: &DatasetSpec, var_index: usize, var: &VariableSpec) -> Vec<Value> {
    let mut rng = rng_for(spec.seed, &format!("levels/{var_index}/{}", var.path));
    match (&var.variate_type, &var.levels) {
        (VariateType::Fixed, Levels::Scalar(v)) => vec![v.clone()],
        (VariateType::VaryingAll, Levels::List(vs)) => vs.clone(),
        (VariateType::VaryingAmongRange, Levels::IntRange(a, b)) => (*a..=*b).map(Value::from).collect(),
        (VariateType::VaryingAmongRange, Levels::RealRange(a, b)) => (0..var.n_images)
            .map(|_| {
                let u: f64 = rng.random();
                Value::from(a + (b - a) * u)
            })
            .collect(),
        (VariateType::VaryingRandom, Levels::List(vs)) => (0..var.n_images)
            .map(|_| vs[rng.random_range(0..vs.len())].clone())
            .collect(),
        _ => unreachable!("levels validated at parse time"),
    }
}

fn randomize_value(v: &Value, p: f64, rng: &mut impl Rng) -> Value {
    match v {
        Value::Number(n) if n.is_i64() || n.is_u64() => {
            let x = resolve_randomization(n.as_f64().unwrap(), p, rng);
            Value::from(x.round() as i64)
        }
        Value::Number(n) => Value::from(resolve_randomization(n.as_f64().unwrap(), p, rng)),
        other => other.clone(),
    }
}

/// Expand a dataset into its ordered list of combinations.
pub fn expand_variables(spec: &DatasetSpec) -> Result<Expansion, ConfigError> {
    let count = spec.expansion_size();
    if count > u128::from(spec.expansion_cap) {
        return Err(ConfigError::TooLarge { count, cap: spec.expansion_cap });
    }
    let axes: Vec<Vec<Value>> = spec
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| axis_values(spec, i, v))
        .collect();
    let reps = spec.replication();
    let mut combinations = Vec::with_capacity(count as usize);
    let mut digits = vec![0usize; axes.len()];
    let mut index = 0u64;
    loop {
        for _ in 0..reps {
            let derived = derive_seed(spec.seed, index);
            let mut assignments = BTreeMap::new();
            for (i, var) in spec.variables.iter().enumerate() {
                let mut value = axes[i][digits[i]].clone();
                if var.randomize {
                    let mut rng = rng_for(derived, &format!("randomize/{}", var.path));
                    value = randomize_value(&value, var.randomize_percentage, &mut rng);
                }
                assignments.insert(var.path.clone(), value);
            }
            combinations.push(ConfigCombination { index, assignments, derived_seed: derived });
            index += 1;
        }
        // odometer increment, last variable fastest
        let mut pos = axes.len();
        loop {
            if pos == 0 {
                return Ok(Expansion { total: index, combinations });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < axes[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const IDENT_CHESS: &str = "
dataset:
  name: chess_identification
  output_dir: ../data/chess_ident_dataset
  seed: 42
  piece_set: old_school

variables:
  chess.count_config:
    variate_type: fixed
    variate_levels:
      type: fixed
      value: 3
      randomization: false

  chess.type_config:
    variate_type: varying_random
    variate_levels: [pawn, rook, knight, bishop, queen, king]
    n_images: 10

  noise.blur:
    variate_type: varying_all
    variate_levels: [none, very_low, low, medium,
                      high, very_high]
    n_images: 5
";

    #[test]
    fn fixed_value_mapping_unwraps() {
        let spec = parse_dataset_spec(IDENT_CHESS).unwrap();
        assert_eq!(spec.piece_set, PieceSet::OldSchool);
        assert_eq!(spec.variables[0].variate_type, VariateType::Fixed);
        assert_eq!(spec.variables[0].levels, Levels::Scalar(Value::from(3)));
        assert_eq!(spec.game, GameKind::Chess);
        // 1 × 10 draws × 6 levels, each replicated 5 times
        assert_eq!(expand_variables(&spec).unwrap().total, 300);
    }

    #[test]
    fn aliases_canonicalize() {
        let text = "
dataset: {name: poker_chip_variations, seed: 5678}
variables:
  n_players: {variate_type: fixed, variate_levels: 4}
  card_distribution_inputs.overall_cards:
    variate_type: varying_all_range
    variate_levels: [2, 15]
    n_images: 2
  chip_distribution_inputs.color_options:
    variate_type: varying_among
    variate_levels: [[1.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 1.0]]
";
        let spec = parse_dataset_spec(text).unwrap();
        assert_eq!(spec.game, GameKind::Poker);
        assert_eq!(spec.variables[1].variate_type, VariateType::VaryingAmongRange);
        assert_eq!(spec.variables[1].levels, Levels::IntRange(2, 15));
        assert_eq!(spec.variables[2].variate_type, VariateType::VaryingRandom);
        let exp = expand_variables(&spec).unwrap();
        assert_eq!(exp.total, 14);
        let counts: Vec<i64> = exp
            .combinations
            .iter()
            .map(|c| c.assignments["card_distribution_inputs.overall_cards"].as_i64().unwrap())
            .collect();
        assert_eq!(counts, (2..=15).collect::<Vec<_>>());
    }

    #[test]
    fn empty_variables_give_one_combination() {
        let spec = parse_dataset_spec("dataset: {name: empty, seed: 1}\nvariables:\n").unwrap();
        assert!(spec.variables.is_empty());
        let exp = expand_variables(&spec).unwrap();
        assert_eq!(exp.total, 1);
        assert!(exp.combinations[0].assignments.is_empty());
    }

    #[test]
    fn blur_sweep_is_thirty() {
        let text = "
dataset: {name: blur, seed: 7}
variables:
  noise.blur:
    variate_type: varying_all
    variate_levels: [none, very_low, low, medium, high, very_high]
    n_images: 5
  chess.count_config: {variate_type: fixed, value: 3}
";
        let exp = expand_variables(&parse_dataset_spec(text).unwrap()).unwrap();
        assert_eq!(exp.total, 30);
        assert_eq!(exp.combinations[4].assignments["noise.blur"], "none");
        assert_eq!(exp.combinations[5].assignments["noise.blur"], "very_low");
    }

    #[test]
    fn two_fixed_is_one() {
        let text = "dataset: {name: f, seed: 1}\nvariables:\n  a: {variate_type: fixed, value: 1}\n  b: {variate_type: fixed, value: x}\n";
        assert_eq!(expand_variables(&parse_dataset_spec(text).unwrap()).unwrap().total, 1);
    }

    #[test]
    fn shape_errors_name_the_path() {
        let bad = [
            ("a: {variate_type: fixed, variate_levels: [1, 2]}", "a"),
            ("b: {variate_type: varying_all, variate_levels: []}", "b"),
            ("c: {variate_type: varying_among_range, variate_levels: [5, 2]}", "c"),
            ("d: {variate_type: varying_among_range, variate_levels: [1, 2, 3]}", "d"),
        ];
        for (var, path) in bad {
            let text = format!("dataset: {{name: x, seed: 1}}\nvariables:\n  {var}\n");
            match parse_dataset_spec(&text) {
                Err(ConfigError::LevelShape { path: p, .. }) => assert_eq!(p, path),
                other => panic!("expected shape error for {path}, got {other:?}"),
            }
        }
        let text = "dataset: {name: x, seed: 1}\nvariables:\n  z: {variate_type: sometimes, variate_levels: 1}\n";
        assert!(matches!(parse_dataset_spec(text), Err(ConfigError::UnknownVariateType { .. })));
        assert!(matches!(parse_dataset_spec("dataset: [1"), Err(ConfigError::Malformed(_))));
    }

    #[test]
    fn random_draws_need_a_seed() {
        let text = "dataset: {name: x}\nvariables:\n  a: {variate_type: varying_random, variate_levels: [1, 2]}\n";
        assert!(matches!(parse_dataset_spec(text), Err(ConfigError::MissingSeed(_))));
    }

    #[test]
    fn cap_is_enforced() {
        let text = "dataset: {name: x, seed: 1, expansion_cap: 10}\nvariables:\n  a: {variate_type: varying_among_range, variate_levels: [1, 11]}\n";
        let spec = parse_dataset_spec(text).unwrap();
        assert!(matches!(expand_variables(&spec), Err(ConfigError::TooLarge { count: 11, cap: 10 })));
    }

    #[test]
    fn real_ranges_sample_n_images() {
        let text = "dataset: {name: x, seed: 3}\nvariables:\n  camera.distance: {variate_type: varying_among_range, variate_levels: [1.5, 2.5], n_images: 4}\n";
        let exp = expand_variables(&parse_dataset_spec(text).unwrap()).unwrap();
        assert_eq!(exp.total, 4);
        for c in &exp.combinations {
            let d = c.assignments["camera.distance"].as_f64().unwrap();
            assert!((1.5..=2.5).contains(&d));
        }
    }

    #[test]
    fn canonical_yaml_round_trips() {
        let spec = parse_dataset_spec(IDENT_CHESS).unwrap();
        let again = parse_dataset_spec(&spec.to_yaml()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(again.to_yaml(), spec.to_yaml());
    }

    #[test]
    fn randomization_zero_width_and_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(resolve_randomization(3.0, 0.0, &mut rng), 3.0);
        let mut sum = 0.0;
        for _ in 0..10_000 {
            let v = resolve_randomization(3.0, 0.1, &mut rng);
            assert!((2.7..=3.3).contains(&v));
            sum += v;
        }
        assert!((sum / 10_000.0 - 3.0).abs() < 0.03);
        let a = resolve_randomization(3.0, 0.1, &mut ChaCha8Rng::seed_from_u64(5));
        let b = resolve_randomization(3.0, 0.1, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        // out-of-range percentages are clamped, not rejected
        let v = resolve_randomization(2.0, 4.0, &mut rng);
        assert!((0.0..=4.0).contains(&v));
    }
}
