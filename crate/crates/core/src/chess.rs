//! Chess boards and piece placement.
//!
//! Board frame: rows run along +x and columns along +y, both centered on the
//! board location. Seen from the default chess camera (on the +x side), row 0
//! is the far edge (top of the image) and column 0 the left edge.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::scene::{check_color_violation, on_table, push_violation, MaterialSpec, Rgba, TableSpec, Violation};
use crate::seed::rng_for;

#[derive(Debug, Error, PartialEq)]
pub enum ChessError {
    #[error("board {field} must be a power of 2, got {value}")]
    NotPowerOfTwo { field: &'static str, value: u32 },
    #[error("{requested} pieces requested but only {available} cells are available")]
    TooManyPieces { requested: u32, available: u32 },
    #[error("{requested} pieces requested but only {allowed} allowed positions given")]
    AllowedTooFew { requested: u32, allowed: u32 },
    #[error("cell ({row}, {col}) is outside the {rows}×{cols} board")]
    OutOfBounds { row: u32, col: u32, rows: u32, cols: u32 },
    #[error("cell ({row}, {col}) is used twice")]
    DuplicateCell { row: u32, col: u32 },
    #[error("unknown piece type `{0}`")]
    UnknownPieceType(String),
    #[error("invalid piece spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceType {
    Pawn,
    Rook,
    Knight,
    Bishop,
    Queen,
    King,
}

pub const PIECE_TYPES: [PieceType; 6] =
    [PieceType::Pawn, PieceType::Rook, PieceType::Knight, PieceType::Bishop, PieceType::Queen, PieceType::King];

impl PieceType {
    pub fn as_str(self) -> &'static str {
        match self {
            PieceType::Pawn => "pawn",
            PieceType::Rook => "rook",
            PieceType::Knight => "knight",
            PieceType::Bishop => "bishop",
            PieceType::Queen => "queen",
            PieceType::King => "king",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        PIECE_TYPES.iter().copied().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for PieceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Stock piece colors; classification elsewhere uses luma against 0.5.
pub const WHITE_PIECE: Rgba = Rgba::new(0.9, 0.9, 0.9, 1.0);
pub const BLACK_PIECE: Rgba = Rgba::new(0.1, 0.1, 0.1, 1.0);

// ---------------------------------------------------------------------------
// board

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoardSpec {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    pub border_width: f64,
    pub location: [f64; 3],
    pub rows: u32,
    pub columns: u32,
    pub random_pattern: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern_seed: Option<u64>,
    pub board_material: MaterialSpec,
    pub white_material: MaterialSpec,
    pub black_material: MaterialSpec,
}

impl Default for BoardSpec {
    fn default() -> Self {
        Self {
            length: 0.7,
            width: 0.7,
            thickness: 0.05,
            border_width: 0.05,
            location: [0.0, 0.0, 0.9],
            rows: 8,
            columns: 8,
            random_pattern: false,
            pattern_seed: None,
            board_material: MaterialSpec::colored(Rgba::new(0.4, 0.3, 0.2, 1.0), 0.5),
            white_material: MaterialSpec::colored(Rgba::new(0.9, 0.9, 0.9, 1.0), 0.3),
            black_material: MaterialSpec::colored(Rgba::new(0.1, 0.1, 0.1, 1.0), 0.3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardCell {
    pub row: u32,
    pub col: u32,
    pub center: [f64; 3],
    pub dark: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardLayout {
    pub spec: BoardSpec,
    /// Cell size along x (rows) and y (columns).
    pub pitch: [f64; 2],
    /// Row-major, `rows * columns` entries.
    pub cells: Vec<BoardCell>,
}

fn pow2(field: &'static str, value: u32) -> Result<(), ChessError> {
    if value.is_power_of_two() {
        Ok(())
    } else {
        Err(ChessError::NotPowerOfTwo { field, value })
    }
}

/// Offset of index `k` from the center of an `n`-cell axis with pitch `p`.
fn axis_offset(p: f64, k: u32, n: u32) -> f64 {
    p * (2.0 * f64::from(k) - f64::from(n - 1)) / 2.0
}

pub fn generate_board(spec: &BoardSpec, seed: u64) -> Result<BoardLayout, ChessError> {
    pow2("rows", spec.rows)?;
    pow2("columns", spec.columns)?;
    let pitch = [
        (spec.length - 2.0 * spec.border_width) / f64::from(spec.rows),
        (spec.width - 2.0 * spec.border_width) / f64::from(spec.columns),
    ];
    if !(pitch[0] > 0.0 && pitch[1] > 0.0) {
        return Err(ChessError::InvalidSpec("border leaves no room for squares".into()));
    }
    let mut rng = rng_for(spec.pattern_seed.unwrap_or(seed), "board-pattern");
    let [x0, y0, z0] = spec.location;
    let mut cells = Vec::with_capacity((spec.rows * spec.columns) as usize);
    for row in 0..spec.rows {
        for col in 0..spec.columns {
            let dark = if spec.random_pattern { rng.random_bool(0.5) } else { (row + col) % 2 == 1 };
            cells.push(BoardCell {
                row,
                col,
                center: [
                    x0 + axis_offset(pitch[0], row, spec.rows),
                    y0 + axis_offset(pitch[1], col, spec.columns),
                    z0 + spec.thickness,
                ],
                dark,
            });
        }
    }
    Ok(BoardLayout { spec: spec.clone(), pitch, cells })
}

impl BoardLayout {
    pub fn rows(&self) -> u32 {
        self.spec.rows
    }

    pub fn columns(&self) -> u32 {
        self.spec.columns
    }

    pub fn cell(&self, row: u32, col: u32) -> Option<&BoardCell> {
        if row < self.spec.rows && col < self.spec.columns {
            self.cells.get((row * self.spec.columns + col) as usize)
        } else {
            None
        }
    }

    /// Top-surface height of the board.
    pub fn surface_z(&self) -> f64 {
        self.spec.location[2] + self.spec.thickness
    }
}

pub fn cell_to_world(board: &BoardLayout, row: u32, col: u32) -> Result<[f64; 3], ChessError> {
    board.cell(row, col).map(|c| c.center).ok_or(ChessError::OutOfBounds {
        row,
        col,
        rows: board.spec.rows,
        cols: board.spec.columns,
    })
}

/// Cell containing the world point (x, y), if it lies on the playing area.
pub fn world_to_cell(board: &BoardLayout, x: f64, y: f64) -> Option<(u32, u32)> {
    let idx = |v: f64, origin: f64, p: f64, n: u32| {
        let k = ((v - origin) / p + f64::from(n) / 2.0).floor();
        (k >= 0.0 && k < f64::from(n)).then_some(k as u32)
    };
    let r = idx(x, board.spec.location[0], board.pitch[0], board.spec.rows)?;
    let c = idx(y, board.spec.location[1], board.pitch[1], board.spec.columns)?;
    Some((r, c))
}

// ---------------------------------------------------------------------------
// count / type / position specs

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountSpecType {
    Preset,
    #[serde(alias = "fixed")]
    Explicit,
    Range,
}

pub const COUNT_PRESETS: [(&str, u32); 3] = [("low", 3), ("medium", 10), ("high", 16)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PieceCountSpec {
    pub spec_type: CountSpecType,
    pub preset: String,
    pub count: u32,
    pub min_count: u32,
    pub max_count: u32,
}

impl Default for PieceCountSpec {
    fn default() -> Self {
        Self { spec_type: CountSpecType::Preset, preset: "medium".into(), count: 10, min_count: 5, max_count: 15 }
    }
}

impl PieceCountSpec {
    pub fn explicit(count: u32) -> Self {
        Self { spec_type: CountSpecType::Explicit, count, ..Self::default() }
    }

    pub fn range(min_count: u32, max_count: u32) -> Self {
        Self { spec_type: CountSpecType::Range, min_count, max_count, ..Self::default() }
    }

    pub fn resolve(&self, rng: &mut ChaCha8Rng) -> Result<u32, ChessError> {
        if self.min_count > self.max_count {
            return Err(ChessError::InvalidSpec(format!(
                "min_count {} exceeds max_count {}",
                self.min_count, self.max_count
            )));
        }
        match self.spec_type {
            CountSpecType::Explicit => Ok(self.count),
            CountSpecType::Range => Ok(rng.random_range(self.min_count..=self.max_count)),
            CountSpecType::Preset => {
                let nominal = COUNT_PRESETS
                    .iter()
                    .find(|(n, _)| *n == self.preset)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| ChessError::InvalidSpec(format!("unknown count preset `{}`", self.preset)))?;
                Ok(nominal.clamp(self.min_count, self.max_count))
            }
        }
    }
}

impl<'de> Deserialize<'de> for PieceCountSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Full {
            #[serde(alias = "type")]
            spec_type: Option<CountSpecType>,
            preset: Option<String>,
            count: Option<u32>,
            value: Option<u32>,
            min_count: Option<u32>,
            max_count: Option<u32>,
            #[allow(dead_code)]
            randomization: Option<bool>,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Input {
            Count(u32),
            Pair([u32; 2]),
            Preset(String),
            Full(Full),
        }
        let d0 = PieceCountSpec::default();
        Ok(match Input::deserialize(d)? {
            Input::Count(n) => PieceCountSpec::explicit(n),
            Input::Pair([a, b]) => PieceCountSpec::range(a, b),
            Input::Preset(p) => PieceCountSpec { spec_type: CountSpecType::Preset, preset: p, ..d0 },
            Input::Full(f) => {
                let count = f.count.or(f.value);
                let spec_type = f.spec_type.unwrap_or(if count.is_some() {
                    CountSpecType::Explicit
                } else if f.min_count.is_some() || f.max_count.is_some() {
                    CountSpecType::Range
                } else {
                    CountSpecType::Preset
                });
                PieceCountSpec {
                    spec_type,
                    preset: f.preset.unwrap_or(d0.preset),
                    count: count.unwrap_or(d0.count),
                    min_count: f.min_count.unwrap_or(d0.min_count),
                    max_count: f.max_count.unwrap_or(d0.max_count),
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeSpecType {
    Preset,
    ExplicitList,
    NRandom,
}

/// Number of distinct types drawn per type preset.
pub const TYPE_PRESETS: [(&str, u32); 3] = [("low", 1), ("medium", 3), ("high", 6)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PieceTypeSpec {
    pub spec_type: TypeSpecType,
    pub preset: String,
    pub types: Vec<PieceType>,
    pub n_types: u32,
}

impl Default for PieceTypeSpec {
    fn default() -> Self {
        Self { spec_type: TypeSpecType::Preset, preset: "medium".into(), types: Vec::new(), n_types: 3 }
    }
}

impl PieceTypeSpec {
    pub fn list(types: Vec<PieceType>) -> Self {
        Self { spec_type: TypeSpecType::ExplicitList, types, ..Self::default() }
    }

    /// The pool each piece draws its type from.
    pub fn resolve_pool(&self, rng: &mut ChaCha8Rng) -> Result<Vec<PieceType>, ChessError> {
        let n_random = |n: u32, rng: &mut ChaCha8Rng| -> Result<Vec<PieceType>, ChessError> {
            if n == 0 || n > 6 {
                return Err(ChessError::InvalidSpec(format!("n_types must be in 1..=6, got {n}")));
            }
            let mut all = PIECE_TYPES.to_vec();
            all.shuffle(rng);
            all.truncate(n as usize);
            all.sort();
            Ok(all)
        };
        match self.spec_type {
            TypeSpecType::ExplicitList if self.types.is_empty() => {
                Err(ChessError::InvalidSpec("explicit type list is empty".into()))
            }
            TypeSpecType::ExplicitList => Ok(self.types.clone()),
            TypeSpecType::NRandom => n_random(self.n_types, rng),
            TypeSpecType::Preset => {
                let n = TYPE_PRESETS
                    .iter()
                    .find(|(p, _)| *p == self.preset)
                    .map(|(_, n)| *n)
                    .ok_or_else(|| ChessError::InvalidSpec(format!("unknown type preset `{}`", self.preset)))?;
                n_random(n, rng)
            }
        }
    }
}

impl<'de> Deserialize<'de> for PieceTypeSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Full {
            #[serde(alias = "type")]
            spec_type: Option<TypeSpecType>,
            preset: Option<String>,
            types: Option<Vec<String>>,
            n_types: Option<u32>,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Input {
            N(u32),
            Name(String),
            List(Vec<String>),
            Full(Full),
        }
        let parse_list = |names: &[String]| -> Result<Vec<PieceType>, D::Error> {
            names
                .iter()
                .map(|n| PieceType::parse(n).ok_or_else(|| D::Error::custom(format!("unknown piece type `{n}`"))))
                .collect()
        };
        let d0 = PieceTypeSpec::default();
        Ok(match Input::deserialize(d)? {
            Input::N(n) => PieceTypeSpec { spec_type: TypeSpecType::NRandom, n_types: n, ..d0 },
            Input::Name(n) => match PieceType::parse(&n) {
                Some(t) => PieceTypeSpec::list(vec![t]),
                None => PieceTypeSpec { spec_type: TypeSpecType::Preset, preset: n, ..d0 },
            },
            Input::List(names) => PieceTypeSpec::list(parse_list(&names)?),
            Input::Full(f) => {
                let types = match &f.types {
                    Some(names) => parse_list(names)?,
                    None => Vec::new(),
                };
                let spec_type = f.spec_type.unwrap_or(if !types.is_empty() {
                    TypeSpecType::ExplicitList
                } else if f.n_types.is_some() {
                    TypeSpecType::NRandom
                } else {
                    TypeSpecType::Preset
                });
                PieceTypeSpec {
                    spec_type,
                    preset: f.preset.unwrap_or(d0.preset),
                    types,
                    n_types: f.n_types.unwrap_or(d0.n_types),
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadLevel {
    Low,
    #[default]
    Medium,
    High,
}

impl SpreadLevel {
    /// Chebyshev radius around the start point; `None` means the whole board.
    pub fn radius(self) -> Option<u32> {
        match self {
            SpreadLevel::Low => Some(1),
            SpreadLevel::Medium => Some(3),
            SpreadLevel::High => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPoint {
    #[default]
    Center,
    Corner,
    /// Midpoint of the row-0 edge.
    Edge,
    #[serde(untagged)]
    Cell([u32; 2]),
}

impl StartPoint {
    /// Anchor in fractional (row, col) coordinates.
    fn anchor(self, rows: u32, cols: u32) -> (f64, f64) {
        let mid = |n: u32| f64::from(n - 1) / 2.0;
        match self {
            StartPoint::Center => (mid(rows), mid(cols)),
            StartPoint::Corner => (0.0, 0.0),
            StartPoint::Edge => (0.0, mid(cols)),
            StartPoint::Cell([r, c]) => (f64::from(r), f64::from(c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PiecePositionSpec {
    pub allowed_positions: Vec<[u32; 2]>,
    pub spread_level: SpreadLevel,
    pub start_point: StartPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorChoice {
    #[default]
    Random,
    White,
    Black,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceSpec {
    pub piece_type: PieceType,
    /// (row, col)
    pub cell: [u32; 2],
    pub world_location: [f64; 3],
    pub material: MaterialSpec,
    pub scale: f64,
    /// Yaw in degrees.
    pub rotation: f64,
}

/// Piece given verbatim in a config, e.g. `{type: king, location: [0, 4]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitPiece {
    #[serde(rename = "type")]
    pub piece_type: PieceType,
    pub location: [u32; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Rgba>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default)]
    pub random_rotation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rotation_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roughness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChessConfig {
    pub board: BoardSpec,
    pub count_config: PieceCountSpec,
    pub type_config: PieceTypeSpec,
    pub position_config: PiecePositionSpec,
    pub color_config: ColorChoice,
    pub white_piece_color: Rgba,
    pub black_piece_color: Rgba,
    pub piece_scale: f64,
    pub random_rotation: bool,
    pub max_rotation_angle: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pieces: Option<Vec<ExplicitPiece>>,
}

impl Default for ChessConfig {
    fn default() -> Self {
        Self {
            board: BoardSpec::default(),
            count_config: PieceCountSpec::default(),
            type_config: PieceTypeSpec::default(),
            position_config: PiecePositionSpec::default(),
            color_config: ColorChoice::Random,
            white_piece_color: WHITE_PIECE,
            black_piece_color: BLACK_PIECE,
            piece_scale: 0.1,
            random_rotation: false,
            max_rotation_angle: 15.0,
            pieces: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChessLayout {
    pub board: BoardLayout,
    pub pieces: Vec<PieceSpec>,
}

// ---------------------------------------------------------------------------
// generation

fn sample_cells(
    n: u32,
    positions: &PiecePositionSpec,
    board: &BoardLayout,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(u32, u32)>, ChessError> {
    let (rows, cols) = (board.rows(), board.columns());
    if n > rows * cols {
        return Err(ChessError::TooManyPieces { requested: n, available: rows * cols });
    }
    let mut candidates: Vec<(u32, u32)> = if !positions.allowed_positions.is_empty() {
        let mut seen = BTreeSet::new();
        for &[r, c] in &positions.allowed_positions {
            if r >= rows || c >= cols {
                return Err(ChessError::OutOfBounds { row: r, col: c, rows, cols });
            }
            if !seen.insert((r, c)) {
                return Err(ChessError::DuplicateCell { row: r, col: c });
            }
        }
        if (seen.len() as u32) < n {
            return Err(ChessError::AllowedTooFew { requested: n, allowed: seen.len() as u32 });
        }
        positions.allowed_positions.iter().map(|&[r, c]| (r, c)).collect()
    } else {
        if let StartPoint::Cell([r, c]) = positions.start_point {
            if r >= rows || c >= cols {
                return Err(ChessError::OutOfBounds { row: r, col: c, rows, cols });
            }
        }
        let (ar, ac) = positions.start_point.anchor(rows, cols);
        let all: Vec<(u32, u32)> = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect();
        match positions.spread_level.radius() {
            None => all,
            Some(mut radius) => loop {
                let within: Vec<(u32, u32)> = all
                    .iter()
                    .copied()
                    .filter(|&(r, c)| (f64::from(r) - ar).abs().max((f64::from(c) - ac).abs()) <= f64::from(radius))
                    .collect();
                if within.len() as u32 >= n {
                    break within;
                }
                radius += 1;
            },
        }
    };
    candidates.shuffle(rng);
    candidates.truncate(n as usize);
    Ok(candidates)
}

fn rotation(random: bool, max_angle: f64, rng: &mut ChaCha8Rng) -> f64 {
    if random && max_angle > 0.0 {
        rng.random_range(-max_angle..=max_angle)
    } else {
        0.0
    }
}

/// Place pieces per the count/type/position specs.
pub fn generate_pieces(
    cfg: &ChessConfig,
    board: &BoardLayout,
    seed: u64,
) -> Result<Vec<PieceSpec>, ChessError> {
    let mut rng = rng_for(seed, "pieces");
    let n = cfg.count_config.resolve(&mut rng)?;
    let pool = cfg.type_config.resolve_pool(&mut rng)?;
    let cells = sample_cells(n, &cfg.position_config, board, &mut rng)?;
    let mut pieces = Vec::with_capacity(cells.len());
    for (row, col) in cells {
        let piece_type = pool[rng.random_range(0..pool.len())];
        let color = match cfg.color_config {
            ColorChoice::White => cfg.white_piece_color,
            ColorChoice::Black => cfg.black_piece_color,
            ColorChoice::Random => {
                if rng.random_bool(0.5) {
                    cfg.white_piece_color
                } else {
                    cfg.black_piece_color
                }
            }
        };
        pieces.push(PieceSpec {
            piece_type,
            cell: [row, col],
            world_location: cell_to_world(board, row, col)?,
            material: MaterialSpec::colored(color, 0.3),
            scale: cfg.piece_scale,
            rotation: rotation(cfg.random_rotation, cfg.max_rotation_angle, &mut rng),
        });
    }
    Ok(pieces)
}

fn explicit_pieces(cfg: &ChessConfig, list: &[ExplicitPiece], board: &BoardLayout, seed: u64) -> Result<Vec<PieceSpec>, ChessError> {
    let mut rng = rng_for(seed, "explicit-pieces");
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(list.len());
    for p in list {
        let [row, col] = p.location;
        let world = cell_to_world(board, row, col)?;
        if !seen.insert((row, col)) {
            return Err(ChessError::DuplicateCell { row, col });
        }
        let material = MaterialSpec {
            color: p.color.unwrap_or(cfg.white_piece_color),
            roughness: p.roughness.unwrap_or(0.3),
            material_name: p.material_name.clone(),
        };
        let max_angle = p.max_rotation_angle.unwrap_or(cfg.max_rotation_angle);
        out.push(PieceSpec {
            piece_type: p.piece_type,
            cell: [row, col],
            world_location: world,
            material,
            scale: p.scale.unwrap_or(cfg.piece_scale),
            rotation: rotation(p.random_rotation, max_angle, &mut rng),
        });
    }
    Ok(out)
}

pub fn generate_layout(cfg: &ChessConfig, seed: u64) -> Result<ChessLayout, ChessError> {
    let board = generate_board(&cfg.board, seed)?;
    let pieces = match &cfg.pieces {
        Some(list) => explicit_pieces(cfg, list, &board, seed)?,
        None => generate_pieces(cfg, &board, seed)?,
    };
    Ok(ChessLayout { board, pieces })
}

pub(crate) fn validate_layout(layout: &ChessLayout, table: &TableSpec, out: &mut Vec<Violation>) {
    let b = &layout.board.spec;
    for (name, v) in [("length", b.length), ("width", b.width), ("thickness", b.thickness)] {
        if !(v > 0.0) {
            push_violation(out, &format!("chess.board.{name}"), format!("must be positive, got {v}"));
        }
    }
    if !b.rows.is_power_of_two() || !b.columns.is_power_of_two() {
        push_violation(out, "chess.board", "rows and columns must be powers of 2");
    }
    let [x, y, _] = b.location;
    let (hl, hw) = (b.length / 2.0, b.width / 2.0);
    let corners = [(x - hl, y - hw), (x - hl, y + hw), (x + hl, y - hw), (x + hl, y + hw)];
    if !corners.iter().all(|&(cx, cy)| on_table(table, cx, cy)) {
        push_violation(
            out,
            "chess.board",
            format!("{}×{} board does not fit on the {}×{} table", b.length, b.width, table.length, table.width),
        );
    }
    check_color_violation(out, "chess.board.board_material.color", &b.board_material.color);
    check_color_violation(out, "chess.board.white_material.color", &b.white_material.color);
    check_color_violation(out, "chess.board.black_material.color", &b.black_material.color);
    let mut seen = BTreeSet::new();
    for (i, p) in layout.pieces.iter().enumerate() {
        let [r, c] = p.cell;
        if r >= b.rows || c >= b.columns {
            push_violation(out, &format!("chess.pieces[{i}].cell"), "outside the board");
        }
        if !seen.insert((r, c)) {
            push_violation(out, &format!("chess.pieces[{i}].cell"), "cell already occupied");
        }
        check_color_violation(out, &format!("chess.pieces[{i}].material.color"), &p.material.color);
        if !(p.scale > 0.0) {
            push_violation(out, &format!("chess.pieces[{i}].scale"), "must be positive");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_board_is_checkered() {
        let b = generate_board(&BoardSpec::default(), 0).unwrap();
        assert_eq!(b.cells.len(), 64);
        assert_ne!(b.cell(0, 0).unwrap().dark, b.cell(0, 1).unwrap().dark);
        assert_ne!(b.cell(0, 0).unwrap().dark, b.cell(1, 0).unwrap().dark);
    }

    #[test]
    fn non_power_of_two_rejected() {
        let spec = BoardSpec { rows: 6, ..Default::default() };
        assert_eq!(generate_board(&spec, 0), Err(ChessError::NotPowerOfTwo { field: "rows", value: 6 }));
    }

    #[test]
    fn corner_cell_offset() {
        let b = generate_board(&BoardSpec::default(), 0).unwrap();
        let p = cell_to_world(&b, 0, 0).unwrap();
        assert!((p[0] + 0.2625).abs() < 1e-12 && (p[1] + 0.2625).abs() < 1e-12);
        assert!((p[2] - 0.95).abs() < 1e-12);
    }

    #[test]
    fn single_cell_board_is_centered() {
        let spec = BoardSpec { rows: 1, columns: 1, location: [0.3, -0.2, 0.9], ..Default::default() };
        let b = generate_board(&spec, 0).unwrap();
        let p = cell_to_world(&b, 0, 0).unwrap();
        assert_eq!((p[0], p[1]), (0.3, -0.2));
    }

    #[test]
    fn count_spec_shapes() {
        let c: PieceCountSpec = serde_json::from_str("3").unwrap();
        assert_eq!(c, PieceCountSpec::explicit(3));
        let c: PieceCountSpec = serde_json::from_str(r#"{"type": "fixed", "value": 3, "randomization": false}"#).unwrap();
        assert_eq!(c.spec_type, CountSpecType::Explicit);
        assert_eq!(c.count, 3);
        let c: PieceCountSpec = serde_json::from_str("[5, 25]").unwrap();
        assert_eq!(c, PieceCountSpec::range(5, 25));
        let c: PieceCountSpec = serde_json::from_str("\"high\"").unwrap();
        assert_eq!(c.preset, "high");
        let back: PieceCountSpec = serde_json::from_value(serde_json::to_value(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn type_spec_shapes() {
        let t: PieceTypeSpec = serde_json::from_str("\"rook\"").unwrap();
        assert_eq!(t, PieceTypeSpec::list(vec![PieceType::Rook]));
        let t: PieceTypeSpec = serde_json::from_str("\"high\"").unwrap();
        assert_eq!((t.spec_type, t.preset.as_str()), (TypeSpecType::Preset, "high"));
        assert!(serde_json::from_str::<PieceTypeSpec>("[\"rook\", \"dragon\"]").is_err());
    }

    #[test]
    fn explicit_king_at_0_4() {
        let cfg: ChessConfig = serde_json::from_str(
            r#"{"pieces": [{"type": "king", "location": [0, 4], "color": [0.9, 0.9, 0.9, 1.0], "scale": 0.08}]}"#,
        )
        .unwrap();
        let layout = generate_layout(&cfg, 1).unwrap();
        assert_eq!(layout.pieces.len(), 1);
        assert_eq!(layout.pieces[0].cell, [0, 4]);
        assert_eq!(layout.pieces[0].scale, 0.08);
    }

    #[test]
    fn spread_low_clusters_near_corner() {
        let cfg = ChessConfig {
            count_config: PieceCountSpec::explicit(4),
            position_config: PiecePositionSpec {
                spread_level: SpreadLevel::Low,
                start_point: StartPoint::Corner,
                ..Default::default()
            },
            ..Default::default()
        };
        let layout = generate_layout(&cfg, 11).unwrap();
        for p in &layout.pieces {
            assert!(p.cell[0] <= 1 && p.cell[1] <= 1, "{:?}", p.cell);
        }
        // five pieces do not fit in radius 1 at the corner; the radius grows
        let cfg = ChessConfig { count_config: PieceCountSpec::explicit(5), ..cfg };
        let layout = generate_layout(&cfg, 11).unwrap();
        assert_eq!(layout.pieces.len(), 5);
        assert!(layout.pieces.iter().all(|p| p.cell[0] <= 2 && p.cell[1] <= 2));
    }

    #[test]
    fn errors_on_overfull_and_short_allowed_list() {
        let board = generate_board(&BoardSpec { rows: 2, columns: 2, ..Default::default() }, 0).unwrap();
        let cfg = ChessConfig { count_config: PieceCountSpec::explicit(5), ..Default::default() };
        assert_eq!(
            generate_pieces(&cfg, &board, 0),
            Err(ChessError::TooManyPieces { requested: 5, available: 4 })
        );
        let cfg = ChessConfig {
            count_config: PieceCountSpec::explicit(2),
            position_config: PiecePositionSpec { allowed_positions: vec![[0, 0]], ..Default::default() },
            ..Default::default()
        };
        assert_eq!(generate_pieces(&cfg, &board, 0), Err(ChessError::AllowedTooFew { requested: 2, allowed: 1 }));
    }

    #[test]
    fn zero_pieces() {
        let cfg = ChessConfig { count_config: PieceCountSpec::explicit(0), ..Default::default() };
        assert!(generate_layout(&cfg, 0).unwrap().pieces.is_empty());
    }

    #[test]
    fn start_point_serde() {
        let s: StartPoint = serde_json::from_str("\"edge\"").unwrap();
        assert_eq!(s, StartPoint::Edge);
        let s: StartPoint = serde_json::from_str("[2, 5]").unwrap();
        assert_eq!(s, StartPoint::Cell([2, 5]));
        assert_eq!(serde_json::to_string(&StartPoint::Cell([2, 5])).unwrap(), "[2,5]");
    }
}
