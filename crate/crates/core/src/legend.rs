//! Ground-truth legends. JSON is the normative form; the text view is
//! rendered from the same structure.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::chess::{ChessLayout, PieceType, PIECE_TYPES};
use crate::poker::{total_card_count, CardName, OverlapAxis, PlacedCard, PokerLayout};
use crate::scene::{
    preset_name, GameScene, ResolvedScene, Rgba, Setting, TableShape, TextureLevel, ANGLE_PRESETS, BLUR_PRESETS,
    DISTANCE_PRESETS, LIGHTING_PRESETS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardRecord {
    pub rows: u32,
    pub columns: u32,
    pub length: f64,
    pub width: f64,
    pub location: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceRecord {
    #[serde(rename = "type")]
    pub piece_type: PieceType,
    /// (row, col)
    pub position: [u32; 2],
    pub color: Rgba,
    pub scale: f64,
    pub world_location: [f64; 3],
    pub rotation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRecord {
    pub shape: TableShape,
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    /// Preset name when the value matches one, else meters.
    pub distance: Setting,
    /// Preset name when the value matches one, else degrees.
    pub angle: Setting,
    pub horizontal_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub blur: Setting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lighting: Option<Setting>,
    pub table_texture: TextureLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChessLegend {
    pub board: BoardRecord,
    pub pieces: Vec<PieceRecord>,
    pub table: TableRecord,
    pub camera: CameraRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseRecord>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardRecord {
    pub card: CardName,
    pub position: [f64; 3],
    pub face_up: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipRecord {
    pub n_chips: u32,
    pub color: Rgba,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerRecord {
    pub player_id: String,
    pub hand: Vec<CardRecord>,
    pub chips: Vec<ChipRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRecord {
    pub axis: OverlapAxis,
    pub overlap_fraction: f64,
    pub cards: Vec<CardRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PokerLegend {
    pub table: TableRecord,
    pub community_cards: Vec<CardRecord>,
    pub players: Vec<PlayerRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<OverlapRecord>,
    pub camera: CameraRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseRecord>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "game", rename_all = "snake_case")]
pub enum Legend {
    Chess(ChessLegend),
    Poker(PokerLegend),
}

impl PokerLegend {
    pub fn all_cards(&self) -> impl Iterator<Item = &CardRecord> {
        self.players
            .iter()
            .flat_map(|p| p.hand.iter())
            .chain(self.community_cards.iter())
            .chain(self.overlap.iter().flat_map(|o| o.cards.iter()))
    }

    pub fn total_cards(&self) -> usize {
        self.all_cards().count()
    }
}

impl ChessLegend {
    pub fn count_by_type(&self) -> BTreeMap<PieceType, usize> {
        let mut m = BTreeMap::new();
        for p in &self.pieces {
            *m.entry(p.piece_type).or_insert(0) += 1;
        }
        m
    }
}

fn setting_for(table: &[(&'static str, f64)], v: f64) -> Setting {
    match preset_name(table, &v) {
        Some(n) => Setting::preset(n),
        None => Setting::Value(v),
    }
}

fn camera_record(scene: &ResolvedScene) -> CameraRecord {
    let c = &scene.setup.camera;
    CameraRecord {
        distance: setting_for(&DISTANCE_PRESETS, c.distance),
        angle: setting_for(&ANGLE_PRESETS, c.angle),
        horizontal_angle: c.horizontal_angle,
    }
}

fn noise_record(scene: &ResolvedScene) -> NoiseRecord {
    let n = &scene.noise;
    let blur = match n.blur_fstop {
        None => Setting::preset("none"),
        Some(f) => match preset_name(&BLUR_PRESETS, &Some(f)) {
            Some(p) => Setting::preset(p),
            None => Setting::Value(f),
        },
    };
    NoiseRecord { blur, lighting: n.lighting.map(|m| setting_for(&LIGHTING_PRESETS, m)), table_texture: n.table_texture }
}

fn table_record(scene: &ResolvedScene) -> TableRecord {
    let t = &scene.setup.table;
    TableRecord { shape: t.shape, length: t.length, width: t.width, height: t.height }
}

fn card_record(c: &PlacedCard) -> CardRecord {
    CardRecord { card: c.card, position: c.position, face_up: c.face_up }
}

fn chess_legend(scene: &ResolvedScene, l: &ChessLayout) -> ChessLegend {
    let s = &l.board.spec;
    ChessLegend {
        board: BoardRecord { rows: s.rows, columns: s.columns, length: s.length, width: s.width, location: s.location },
        pieces: l
            .pieces
            .iter()
            .map(|p| PieceRecord {
                piece_type: p.piece_type,
                position: p.cell,
                color: p.material.color,
                scale: p.scale,
                world_location: p.world_location,
                rotation: p.rotation,
            })
            .collect(),
        table: table_record(scene),
        camera: camera_record(scene),
        noise: Some(noise_record(scene)),
        seed: scene.derived_seed,
    }
}

fn poker_legend(scene: &ResolvedScene, l: &PokerLayout) -> PokerLegend {
    let legend = PokerLegend {
        table: table_record(scene),
        community_cards: l.community.iter().map(card_record).collect(),
        players: l
            .players
            .iter()
            .map(|p| PlayerRecord {
                player_id: p.player_id.clone(),
                hand: p.hand.iter().map(card_record).collect(),
                chips: p
                    .chips
                    .iter()
                    .map(|c| ChipRecord { n_chips: c.n_chips, color: c.color, position: c.position })
                    .collect(),
            })
            .collect(),
        overlap: l.overlap.as_ref().map(|o| OverlapRecord {
            axis: o.axis,
            overlap_fraction: o.overlap_fraction,
            cards: o.cards.iter().map(card_record).collect(),
        }),
        camera: camera_record(scene),
        noise: Some(noise_record(scene)),
        seed: scene.derived_seed,
    };
    debug_assert_eq!(legend.total_cards(), total_card_count(l));
    legend
}

pub fn build_legend(scene: &ResolvedScene) -> Legend {
    match &scene.game {
        GameScene::Chess(l) => Legend::Chess(chess_legend(scene, l)),
        GameScene::Poker(l) => Legend::Poker(poker_legend(scene, l)),
    }
}

/// Round to 4 decimals, trim trailing zeros, keep one decimal.
pub fn fmt_num(v: f64) -> String {
    let mut s = format!("{:.4}", (v * 1e4).round() / 1e4);
    while s.ends_with('0') && !s.ends_with(".0") {
        s.pop();
    }
    if s == "-0.0" {
        s = "0.0".into();
    }
    s
}

fn fmt_rgba(c: &Rgba) -> String {
    let [r, g, b, a] = c.0;
    format!("RGBA({}, {}, {}, {})", fmt_num(r), fmt_num(g), fmt_num(b), fmt_num(a))
}

fn fmt_setting(s: &Setting) -> String {
    match s {
        Setting::Preset(p) => p.clone(),
        Setting::Value(v) => fmt_num(*v),
    }
}

/// Display order of piece types: king first.
const TEXT_ORDER: [PieceType; 6] =
    [PieceType::King, PieceType::Queen, PieceType::Bishop, PieceType::Knight, PieceType::Rook, PieceType::Pawn];

fn card_list(cards: &[CardRecord]) -> String {
    cards
        .iter()
        .map(|c| if c.face_up { c.card.encoding() } else { format!("{} (face down)", c.card) })
        .collect::<Vec<_>>()
        .join(", ")
}

fn labeled(label: &str, list: String) -> String {
    if list.is_empty() {
        format!("{label}:")
    } else {
        format!("{label}: {list}")
    }
}

fn camera_noise_text(out: &mut String, camera: &CameraRecord, noise: Option<&NoiseRecord>) {
    let _ = writeln!(
        out,
        "Camera: distance {}; angle {}; horizontal angle {}",
        fmt_setting(&camera.distance),
        fmt_setting(&camera.angle),
        fmt_num(camera.horizontal_angle)
    );
    if let Some(n) = noise {
        let light = n.lighting.as_ref().map_or("none".to_string(), fmt_setting);
        let tex = match n.table_texture {
            TextureLevel::Low => "low",
            TextureLevel::Medium => "medium",
            TextureLevel::High => "high",
        };
        let _ = writeln!(out, "Noise: blur {}; lighting {}; table texture {}", fmt_setting(&n.blur), light, tex);
    }
}

pub fn render_legend_text(legend: &Legend) -> String {
    let mut out = String::new();
    match legend {
        Legend::Chess(l) => {
            out.push_str("CHESS PIECES LEGEND\n");
            let _ = writeln!(out, "Board: {} rows, {} columns", l.board.rows, l.board.columns);
            let _ = writeln!(out, "PIECES ({}):", l.pieces.len());
            for t in TEXT_ORDER {
                let of_type: Vec<&PieceRecord> = l.pieces.iter().filter(|p| p.piece_type == t).collect();
                if of_type.is_empty() {
                    continue;
                }
                let name = t.as_str().to_ascii_uppercase();
                let _ = writeln!(out, "{name} PIECES ({}):", of_type.len());
                for (k, p) in of_type.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "- {name}_{}: Board Position: row {}, col {}; Color: {}; Scale: {}",
                        k + 1,
                        p.position[0],
                        p.position[1],
                        fmt_rgba(&p.color),
                        fmt_num(p.scale)
                    );
                }
            }
            camera_noise_text(&mut out, &l.camera, l.noise.as_ref());
        }
        Legend::Poker(l) => {
            out.push_str("POKER TABLE LEGEND\n");
            let _ = writeln!(out, "TOTAL CARDS ({}):", l.total_cards());
            out.push_str("COMMUNITY CARDS (POKER):\n");
            let _ = writeln!(out, "{}", labeled("Cards", card_list(&l.community_cards)));
            for p in &l.players {
                let _ = writeln!(out, "Player: {}; {}", p.player_id, labeled("Hand Cards", card_list(&p.hand)));
                if !p.chips.is_empty() {
                    let piles: Vec<String> = p.chips.iter().map(|c| c.n_chips.to_string()).collect();
                    let _ = writeln!(out, "Player: {}; Chip Piles: {}", p.player_id, piles.join(", "));
                }
            }
            if let Some(o) = &l.overlap {
                let axis = match o.axis {
                    OverlapAxis::Horizontal => "horizontal",
                    OverlapAxis::Vertical => "vertical",
                };
                let _ = writeln!(out, "OVERLAPPING CARDS ({axis}, overlap {}):", fmt_num(o.overlap_fraction));
                let _ = writeln!(out, "{}", labeled("Cards", card_list(&o.cards)));
            }
            camera_noise_text(&mut out, &l.camera, l.noise.as_ref());
        }
    }
    out
}

pub fn render_legend_json(legend: &Legend) -> String {
    serde_json::to_string_pretty(legend).expect("legend serializes")
}

pub fn parse_legend_json(text: &str) -> Result<Legend, serde_json::Error> {
    serde_json::from_str(text)
}

/// Object counts recovered from the text view, for consistency checks.
pub fn count_from_text(text: &str) -> usize {
    let header = |line: &str, prefix: &str| -> Option<usize> {
        line.strip_prefix(prefix)?.strip_suffix("):")?.parse().ok()
    };
    for line in text.lines() {
        if let Some(n) = header(line, "PIECES (") {
            return n;
        }
        if let Some(n) = header(line, "TOTAL CARDS (") {
            return n;
        }
    }
    0
}

/// All piece types in canonical order, for vocabulary building.
pub fn piece_type_names() -> Vec<&'static str> {
    PIECE_TYPES.iter().map(|t| t.as_str()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(fmt_num(0.9), "0.9");
        assert_eq!(fmt_num(1.0), "1.0");
        assert_eq!(fmt_num(0.08), "0.08");
        assert_eq!(fmt_num(0.123456), "0.1235");
        assert_eq!(fmt_num(-0.00001), "0.0");
        assert_eq!(fmt_num(12.0), "12.0");
    }

    #[test]
    fn rgba_text() {
        assert_eq!(fmt_rgba(&Rgba::new(0.9, 0.9, 0.9, 1.0)), "RGBA(0.9, 0.9, 0.9, 1.0)");
    }
}
