//! Poker tables: dealing, hand and community layouts, chip piles and the
//! overlap row used for counting-under-occlusion.
//!
//! Cards lie flat on the table top with their long side along y. The default
//! poker camera sits on the -y side, so +x runs left to right in the image.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scene::{check_color_violation, on_table, push_violation, Rgba, TableSpec, Violation};
use crate::seed::{rng_for, sub_seed};

#[derive(Debug, Error, PartialEq)]
pub enum PokerError {
    #[error("cannot deal {requested} cards, only {available} left in the deck")]
    DeckExhausted { requested: u32, available: u32 },
    #[error("card `{0}` appears more than once in the scene")]
    DuplicateCard(String),
    #[error("`{0}` is not a card encoding")]
    BadCard(String),
    #[error("invalid poker spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suit {
    Spades,
    Hearts,
    Diamonds,
    Clubs,
}

pub const SUITS: [Suit; 4] = [Suit::Spades, Suit::Hearts, Suit::Diamonds, Suit::Clubs];

impl Suit {
    pub fn letter(self) -> char {
        match self {
            Suit::Spades => 'S',
            Suit::Hearts => 'H',
            Suit::Diamonds => 'D',
            Suit::Clubs => 'C',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suit::Spades => "spades",
            Suit::Hearts => "hearts",
            Suit::Diamonds => "diamonds",
            Suit::Clubs => "clubs",
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        SUITS.iter().copied().find(|s| s.letter() == c.to_ascii_uppercase())
    }

    /// Accepts "hearts", "heart" or the letter.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        SUITS.iter().copied().find(|suit| {
            let n = suit.name();
            s == n || s == &n[..n.len() - 1] || (s.len() == 1 && s.starts_with(suit.letter().to_ascii_lowercase()))
        })
    }

    pub fn is_red(self) -> bool {
        matches!(self, Suit::Hearts | Suit::Diamonds)
    }
}

/// One of the 52 cards. Rank 2..=14 with 11..14 = J, Q, K, A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CardName {
    pub rank: u8,
    pub suit: Suit,
}

impl CardName {
    pub fn new(rank: u8, suit: Suit) -> Option<Self> {
        (2..=14).contains(&rank).then_some(Self { rank, suit })
    }

    pub fn rank_str(&self) -> &'static str {
        const RANKS: [&str; 13] = ["2", "3", "4", "5", "6", "7", "8", "9", "10", "J", "Q", "K", "A"];
        RANKS[(self.rank - 2) as usize]
    }

    pub fn encoding(&self) -> String {
        format!("{}{}", self.rank_str(), self.suit.letter())
    }
}

impl fmt::Display for CardName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.rank_str(), self.suit.letter())
    }
}

impl FromStr for CardName {
    type Err = PokerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || PokerError::BadCard(s.to_string());
        let suit_char = t.chars().last().ok_or_else(bad)?;
        let suit = Suit::from_letter(suit_char).ok_or_else(bad)?;
        let rank = match &t[..t.len() - suit_char.len_utf8()] {
            "10" => 10,
            "J" | "j" => 11,
            "Q" | "q" => 12,
            "K" | "k" => 13,
            "A" | "a" => 14,
            d if d.len() == 1 && ("2"..="9").contains(&d) => d.parse::<u8>().map_err(|_| bad())?,
            _ => return Err(bad()),
        };
        CardName::new(rank, suit).ok_or_else(bad)
    }
}

impl Serialize for CardName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.encoding())
    }
}

impl<'de> Deserialize<'de> for CardName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn full_deck() -> Vec<CardName> {
    SUITS
        .iter()
        .flat_map(|&suit| (2..=14).map(move |rank| CardName { rank, suit }))
        .collect()
}

/// Deal `n` distinct cards not in `exclude`.
pub fn deal_cards(n: u32, exclude: &BTreeSet<CardName>, seed: u64) -> Result<Vec<CardName>, PokerError> {
    let mut deck: Vec<CardName> = full_deck().into_iter().filter(|c| !exclude.contains(c)).collect();
    if n as usize > deck.len() {
        return Err(PokerError::DeckExhausted { requested: n, available: deck.len() as u32 });
    }
    deck.shuffle(&mut rng_for(seed, "deal"));
    deck.truncate(n as usize);
    Ok(deck)
}

// ---------------------------------------------------------------------------
// geometry

/// Cards measure 0.063 × 0.088 m at the stock scale of 0.1.
pub const CARD_REFERENCE_SCALE: f64 = 0.1;
pub const CARD_SIZE: [f64; 2] = [0.063, 0.088];
/// Height step between consecutive cards so later cards paint on top.
pub const CARD_Z_STEP: f64 = 0.0002;
/// Cards rest this far above the table top.
pub const CARD_LIFT: f64 = 0.01;

pub fn card_size(scale: f64) -> [f64; 2] {
    let k = scale / CARD_REFERENCE_SCALE;
    [CARD_SIZE[0] * k, CARD_SIZE[1] * k]
}

/// Chip radius and thickness for a chip scale.
pub fn chip_dims(scale: f64) -> (f64, f64) {
    (scale * 0.35, scale * 0.06)
}

/// Distance between consecutive cards of an overlapped row.
pub fn overlap_stride(card_extent: f64, overlap_fraction: f64) -> f64 {
    card_extent * (1.0 - overlap_fraction)
}

// ---------------------------------------------------------------------------
// specs

fn default_scale() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub card_names: Option<Vec<CardName>>,
    pub n_cards: u32,
    /// Center of the hand; `None` seats the player on the table perimeter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<[f64; 3]>,
    pub scale: f64,
    pub spread_factor_h: f64,
    pub spread_factor_v: f64,
    pub n_verso: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_seed: Option<u64>,
}

impl Default for HandSpec {
    fn default() -> Self {
        Self {
            card_names: None,
            n_cards: 2,
            location: None,
            scale: default_scale(),
            spread_factor_h: 0.2,
            spread_factor_v: 0.05,
            n_verso: 0,
            random_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaseChipConfig {
    pub chip_object_name: String,
    pub scale: f64,
    pub color: Rgba,
}

impl Default for BaseChipConfig {
    fn default() -> Self {
        Self { chip_object_name: "Cylinder001".into(), scale: 0.06, color: Rgba::new(0.1, 0.2, 0.8, 1.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasePileConfig {
    pub n_chips: u32,
    pub base_chip_config: BaseChipConfig,
    pub spread_factor: f64,
}

impl Default for BasePileConfig {
    fn default() -> Self {
        Self { n_chips: 5, base_chip_config: BaseChipConfig::default(), spread_factor: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChipAreaSpec {
    pub base_pile_config: BasePileConfig,
    pub n_piles: u32,
    /// Empty lists inherit the base pile for every pile.
    pub n_chips_per_pile: Vec<u32>,
    pub pile_colors: Vec<Option<Rgba>>,
    pub pile_spreads: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_seed: Option<u64>,
}

impl Default for ChipAreaSpec {
    fn default() -> Self {
        Self {
            base_pile_config: BasePileConfig::default(),
            n_piles: 1,
            n_chips_per_pile: Vec::new(),
            pile_colors: Vec::new(),
            pile_spreads: Vec::new(),
            random_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CardGap {
    pub base_gap_x: f64,
    pub base_gap_y: f64,
    pub random_gap: bool,
}

impl Default for CardGap {
    fn default() -> Self {
        Self { base_gap_x: 0.15, base_gap_y: 0.005, random_gap: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommunitySpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub card_names: Option<Vec<CardName>>,
    /// `None` takes the count from the card distribution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cards: Option<u32>,
    /// First card position; `None` centers the row on the table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_location: Option<[f64; 3]>,
    pub scale: f64,
    pub card_gap: CardGap,
    pub n_verso: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_seed: Option<u64>,
}

impl Default for CommunitySpec {
    fn default() -> Self {
        Self {
            card_names: None,
            n_cards: None,
            start_location: None,
            scale: default_scale(),
            card_gap: CardGap::default(),
            n_verso: 0,
            random_seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapAxis {
    #[default]
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapSpec {
    pub axis: OverlapAxis,
    pub overlap_fraction: f64,
    /// `None` takes the community share of the card distribution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cards: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub card_names: Option<Vec<CardName>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_location: Option<[f64; 3]>,
    pub scale: f64,
    pub n_verso: u32,
}

impl Default for OverlapSpec {
    fn default() -> Self {
        Self {
            axis: OverlapAxis::Horizontal,
            overlap_fraction: 0.5,
            n_cards: None,
            card_names: None,
            start_location: None,
            scale: default_scale(),
            n_verso: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerConfig {
    pub player_id: String,
    #[serde(default)]
    pub hand_config: HandSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chip_area_config: Option<ChipAreaSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CardDistribution {
    /// Total cards on the table; split between community and hands.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overall_cards: Option<u32>,
    pub cards_per_player: u32,
    pub community_cards: u32,
    pub n_verso_per_player: u32,
}

impl Default for CardDistribution {
    fn default() -> Self {
        Self { overall_cards: None, cards_per_player: 2, community_cards: 5, n_verso_per_player: 0 }
    }
}

/// Chip settings for generated players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChipDistribution {
    pub n_piles: u32,
    pub chips_per_pile: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color: Option<Rgba>,
    pub scale: f64,
    pub spread: f64,
}

impl Default for ChipDistribution {
    fn default() -> Self {
        Self { n_piles: 1, chips_per_pile: 5, color: None, scale: 0.06, spread: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PokerConfig {
    pub n_players: u32,
    /// Explicit players replace the generated seating.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub players: Option<Vec<PlayerConfig>>,
    pub card_distribution: CardDistribution,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub community_cards: Option<CommunitySpec>,
    pub chips: ChipDistribution,
    /// When present, an overlapped row replaces the community cards.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap: Option<OverlapSpec>,
}

impl Default for PokerConfig {
    fn default() -> Self {
        Self {
            n_players: 2,
            players: None,
            card_distribution: CardDistribution::default(),
            community_cards: None,
            chips: ChipDistribution::default(),
            overlap: None,
        }
    }
}

// ---------------------------------------------------------------------------
// layout

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedCard {
    pub card: CardName,
    pub position: [f64; 3],
    /// Yaw in degrees.
    pub rotation: f64,
    pub face_up: bool,
    /// Footprint (x, y) in meters.
    pub size: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipPile {
    pub n_chips: u32,
    pub color: Rgba,
    /// Center of the bottom chip.
    pub position: [f64; 3],
    pub radius: f64,
    pub thickness: f64,
    pub spread: f64,
    /// Horizontal offset of each chip from the pile center.
    pub offsets: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedPlayer {
    pub player_id: String,
    pub hand: Vec<PlacedCard>,
    pub chips: Vec<ChipPile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub axis: OverlapAxis,
    pub overlap_fraction: f64,
    pub cards: Vec<PlacedCard>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PokerLayout {
    pub table_height: f64,
    pub players: Vec<PlacedPlayer>,
    pub community: Vec<PlacedCard>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<OverlapRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PokerLayout {
    /// Every card in the scene: hands in player order, community, overlap row.
    pub fn all_cards(&self) -> impl Iterator<Item = &PlacedCard> {
        self.players
            .iter()
            .flat_map(|p| p.hand.iter())
            .chain(self.community.iter())
            .chain(self.overlap.iter().flat_map(|o| o.cards.iter()))
    }
}

pub fn total_card_count(layout: &PokerLayout) -> usize {
    layout.community.len()
        + layout.players.iter().map(|p| p.hand.len()).sum::<usize>()
        + layout.overlap.as_ref().map_or(0, |o| o.cards.len())
}

/// Place `cards` at `start + k·stride`, the last `n_verso` face down.
pub fn layout_cards(
    cards: &[CardName],
    start: [f64; 3],
    strides: &[[f64; 2]],
    n_verso: u32,
    size: [f64; 2],
) -> Vec<PlacedCard> {
    let n = cards.len();
    let mut pos = [start[0], start[1]];
    cards
        .iter()
        .enumerate()
        .map(|(k, &card)| {
            if k > 0 {
                let s = strides[(k - 1).min(strides.len() - 1)];
                pos[0] += s[0];
                pos[1] += s[1];
            }
            PlacedCard {
                card,
                position: [pos[0], pos[1], start[2] + k as f64 * CARD_Z_STEP],
                rotation: 0.0,
                face_up: k + (n_verso as usize) < n,
                size,
            }
        })
        .collect()
}

fn bounds_warnings(label: &str, cards: &[PlacedCard], table: &TableSpec, out: &mut Vec<String>) {
    for c in cards {
        let [hw, hh] = [c.size[0] / 2.0, c.size[1] / 2.0];
        let [x, y, _] = c.position;
        let corners = [(x - hw, y - hh), (x - hw, y + hh), (x + hw, y - hh), (x + hw, y + hh)];
        if !corners.iter().all(|&(cx, cy)| on_table(table, cx, cy)) {
            out.push(format!("{label}: card {} extends beyond the table", c.card));
        }
    }
}

/// Seat `i` of `n` on an inset ellipse, first seat nearest the camera.
fn seat(i: u32, n: u32, table: &TableSpec) -> [f64; 2] {
    let (mut a, mut b) = ((table.length / 2.0 - 0.3).max(0.0), (table.width / 2.0 - 0.15).max(0.0));
    if table.shape == crate::scene::TableShape::Circular {
        a = a.min(b);
        b = a;
    }
    let theta = (-90.0 + 360.0 * f64::from(i) / f64::from(n)).to_radians();
    [a * libm::cos(theta), b * libm::sin(theta)]
}

struct Slot {
    label: String,
    explicit: Option<Vec<CardName>>,
    n: u32,
    seed: u64,
}

fn fill_slots(slots: &[Slot]) -> Result<Vec<Vec<CardName>>, PokerError> {
    let mut used = BTreeSet::new();
    for s in slots {
        if let Some(names) = &s.explicit {
            if names.len() as u32 != s.n {
                return Err(PokerError::InvalidSpec(format!(
                    "{}: {} card names given for n_cards {}",
                    s.label,
                    names.len(),
                    s.n
                )));
            }
            for c in names {
                if !used.insert(*c) {
                    return Err(PokerError::DuplicateCard(c.encoding()));
                }
            }
        }
    }
    let mut out = Vec::with_capacity(slots.len());
    for s in slots {
        match &s.explicit {
            Some(names) => out.push(names.clone()),
            None => {
                let cards = deal_cards(s.n, &used, s.seed)?;
                used.extend(cards.iter().copied());
                out.push(cards);
            }
        }
    }
    Ok(out)
}

fn chip_piles(spec: &ChipAreaSpec, anchor: [f64; 3], seed: u64) -> Result<Vec<ChipPile>, PokerError> {
    let n = spec.n_piles as usize;
    for (name, len) in [
        ("n_chips_per_pile", spec.n_chips_per_pile.len()),
        ("pile_colors", spec.pile_colors.len()),
        ("pile_spreads", spec.pile_spreads.len()),
    ] {
        if len != 0 && len != n {
            return Err(PokerError::InvalidSpec(format!("{name} has {len} entries for {n} piles")));
        }
    }
    let base = &spec.base_pile_config;
    let (radius, thickness) = chip_dims(base.base_chip_config.scale);
    let pitch = 2.0 * radius + 0.02;
    let mut rng = rng_for(spec.random_seed.unwrap_or(seed), "chips");
    let mut piles = Vec::with_capacity(n);
    for k in 0..n {
        let n_chips = spec.n_chips_per_pile.get(k).copied().unwrap_or(base.n_chips);
        let color = spec.pile_colors.get(k).copied().flatten().unwrap_or(base.base_chip_config.color);
        let spread = spec.pile_spreads.get(k).copied().flatten().unwrap_or(base.spread_factor);
        let offsets = (0..n_chips)
            .map(|i| {
                if i == 0 || spread == 0.0 {
                    [0.0, 0.0]
                } else {
                    let j = spread * radius;
                    [rng.random_range(-j..=j), rng.random_range(-j..=j)]
                }
            })
            .collect();
        let dx = (k as f64 - (n as f64 - 1.0) / 2.0) * pitch;
        piles.push(ChipPile {
            n_chips,
            color,
            position: [anchor[0] + dx, anchor[1], anchor[2]],
            radius,
            thickness,
            spread,
            offsets,
        });
    }
    Ok(piles)
}

fn check_verso(label: &str, n_verso: u32, n: u32) -> Result<(), PokerError> {
    if n_verso > n {
        return Err(PokerError::InvalidSpec(format!("{label}: n_verso {n_verso} exceeds {n} cards")));
    }
    Ok(())
}

/// Generate the full poker layout for a table.
pub fn generate_layout(cfg: &PokerConfig, table: &TableSpec, seed: u64) -> Result<PokerLayout, PokerError> {
    let z = table.height + CARD_LIFT;
    let dist = &cfg.card_distribution;

    // who plays, and with which hand spec
    let players: Vec<PlayerConfig> = match &cfg.players {
        Some(list) => list.clone(),
        None => {
            let n = cfg.n_players;
            let (community_share, per_player): (u32, Vec<u32>) = match dist.overall_cards {
                Some(total) if n == 0 => (total, Vec::new()),
                Some(total) => {
                    let c = total.min(dist.community_cards);
                    let rest = total - c;
                    (c, (0..n).map(|k| rest / n + u32::from(k < rest % n)).collect())
                }
                None => (dist.community_cards, vec![dist.cards_per_player; n as usize]),
            };
            let _ = community_share;
            per_player
                .iter()
                .enumerate()
                .map(|(k, &n_cards)| PlayerConfig {
                    player_id: format!("Player_{}", k + 1),
                    hand_config: HandSpec {
                        n_cards,
                        n_verso: dist.n_verso_per_player.min(n_cards),
                        ..HandSpec::default()
                    },
                    chip_area_config: Some(ChipAreaSpec {
                        base_pile_config: BasePileConfig {
                            n_chips: cfg.chips.chips_per_pile,
                            base_chip_config: BaseChipConfig {
                                scale: cfg.chips.scale,
                                color: cfg.chips.color.unwrap_or(BaseChipConfig::default().color),
                                ..BaseChipConfig::default()
                            },
                            spread_factor: cfg.chips.spread,
                        },
                        n_piles: cfg.chips.n_piles,
                        ..ChipAreaSpec::default()
                    }),
                })
                .collect()
        }
    };
    let mut ids = BTreeSet::new();
    for p in &players {
        if !ids.insert(p.player_id.as_str()) {
            return Err(PokerError::InvalidSpec(format!("player id `{}` used twice", p.player_id)));
        }
        check_verso(&p.player_id, p.hand_config.n_verso, p.hand_config.n_cards)?;
    }

    // community share when not given explicitly
    let default_community = match dist.overall_cards {
        Some(total) if cfg.players.is_none() && cfg.n_players == 0 => total,
        Some(total) if cfg.players.is_none() => total.min(dist.community_cards),
        _ => dist.community_cards,
    };
    let community_spec = cfg.community_cards.clone().unwrap_or_default();
    let community_n = community_spec
        .n_cards
        .or(community_spec.card_names.as_ref().map(|v| v.len() as u32))
        .unwrap_or(default_community);
    let (community_n, overlap_n) = match &cfg.overlap {
        Some(o) => {
            if !(0.0..1.0).contains(&o.overlap_fraction) {
                return Err(PokerError::InvalidSpec(format!(
                    "overlap_fraction must lie in [0, 1), got {}",
                    o.overlap_fraction
                )));
            }
            let n = o.n_cards.or(o.card_names.as_ref().map(|v| v.len() as u32)).unwrap_or(community_n);
            check_verso("overlap", o.n_verso, n)?;
            (0, n)
        }
        None => (community_n, 0),
    };
    check_verso("community", community_spec.n_verso.min(community_n.max(community_spec.n_verso)), community_n)
        .or_else(|e| if community_n == 0 { Ok(()) } else { Err(e) })?;

    let mut slots: Vec<Slot> = players
        .iter()
        .enumerate()
        .map(|(k, p)| Slot {
            label: p.player_id.clone(),
            explicit: p.hand_config.card_names.clone(),
            n: p.hand_config.n_cards,
            seed: p.hand_config.random_seed.unwrap_or_else(|| sub_seed(seed, &format!("hand/{k}"))),
        })
        .collect();
    slots.push(Slot {
        label: "community".into(),
        explicit: if cfg.overlap.is_none() { community_spec.card_names.clone() } else { None },
        n: community_n,
        seed: community_spec.random_seed.unwrap_or_else(|| sub_seed(seed, "community")),
    });
    slots.push(Slot {
        label: "overlap".into(),
        explicit: cfg.overlap.as_ref().and_then(|o| o.card_names.clone()),
        n: overlap_n,
        seed: sub_seed(seed, "overlap"),
    });
    let dealt = fill_slots(&slots)?;

    let mut warnings = Vec::new();
    let n_players = players.len() as u32;
    let mut placed_players = Vec::with_capacity(players.len());
    for (k, p) in players.iter().enumerate() {
        let h = &p.hand_config;
        let size = card_size(h.scale);
        let center = match h.location {
            Some(l) => l,
            None => {
                let [x, y] = seat(k as u32, n_players, table);
                [x, y, z]
            }
        };
        let stride = [size[0] * (1.0 + h.spread_factor_h), size[1] * h.spread_factor_v];
        let half = (dealt[k].len() as f64 - 1.0).max(0.0) / 2.0;
        let start = [center[0] - half * stride[0], center[1] - half * stride[1], center[2]];
        let hand = layout_cards(&dealt[k], start, &[stride], h.n_verso, size);
        bounds_warnings(&p.player_id, &hand, table, &mut warnings);
        let chip_spec = p.chip_area_config.clone().unwrap_or_else(|| ChipAreaSpec { n_piles: 0, ..Default::default() });
        let side = if center[1] >= 0.0 { 1.0 } else { -1.0 };
        let anchor = [center[0], center[1] + side * (size[1] / 2.0 + 0.05), table.height];
        let chips = chip_piles(&chip_spec, anchor, sub_seed(seed, &format!("chips/{k}")))?;
        placed_players.push(PlacedPlayer { player_id: p.player_id.clone(), hand, chips });
    }

    let community_cards = &dealt[players.len()];
    let community = if community_cards.is_empty() {
        Vec::new()
    } else {
        let size = card_size(community_spec.scale);
        let gap = &community_spec.card_gap;
        let n = community_cards.len();
        let start = community_spec
            .start_location
            .unwrap_or([-(n as f64 - 1.0) / 2.0 * gap.base_gap_x, 0.0, z]);
        let mut rng = rng_for(community_spec.random_seed.unwrap_or(seed), "gap-jitter");
        let strides: Vec<[f64; 2]> = (0..n.max(2) - 1)
            .map(|_| {
                if gap.random_gap {
                    let jx: f64 = rng.random_range(-0.2..=0.2);
                    let jy: f64 = rng.random_range(-0.2..=0.2);
                    [gap.base_gap_x * (1.0 + jx), gap.base_gap_y * (1.0 + jy)]
                } else {
                    [gap.base_gap_x, gap.base_gap_y]
                }
            })
            .collect();
        let cards = layout_cards(community_cards, start, &strides, community_spec.n_verso.min(n as u32), size);
        bounds_warnings("community", &cards, table, &mut warnings);
        cards
    };

    let overlap = cfg.overlap.as_ref().map(|o| {
        let cards_in = &dealt[players.len() + 1];
        let size = card_size(o.scale);
        let stride = match o.axis {
            OverlapAxis::Horizontal => [overlap_stride(size[0], o.overlap_fraction), 0.0],
            OverlapAxis::Vertical => [0.0, overlap_stride(size[1], o.overlap_fraction)],
        };
        let half = (cards_in.len() as f64 - 1.0).max(0.0) / 2.0;
        let start = o.start_location.unwrap_or([-half * stride[0], -half * stride[1], z]);
        let cards = layout_cards(cards_in, start, &[stride], o.n_verso, size);
        bounds_warnings("overlap", &cards, table, &mut warnings);
        OverlapRow { axis: o.axis, overlap_fraction: o.overlap_fraction, cards }
    });
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(PokerLayout { table_height: table.height, players: placed_players, community, overlap, warnings })
}

/// Bounding-box width (x extent) of a set of placed cards.
pub fn layout_width(cards: &[PlacedCard]) -> f64 {
    if cards.is_empty() {
        return 0.0;
    }
    let lo = cards.iter().map(|c| c.position[0] - c.size[0] / 2.0).fold(f64::INFINITY, f64::min);
    let hi = cards.iter().map(|c| c.position[0] + c.size[0] / 2.0).fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

pub(crate) fn validate_layout(layout: &PokerLayout, out: &mut Vec<Violation>) {
    let mut seen = BTreeSet::new();
    for c in layout.all_cards() {
        if !seen.insert(c.card) {
            push_violation(out, "poker.cards", format!("card {} appears more than once", c.card));
        }
    }
    for p in &layout.players {
        for (i, pile) in p.chips.iter().enumerate() {
            check_color_violation(out, &format!("poker.players.{}.chips[{i}].color", p.player_id), &pile.color);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> TableSpec {
        TableSpec::default()
    }

    #[test]
    fn encodings_round_trip() {
        let deck = full_deck();
        assert_eq!(deck.len(), 52);
        let set: BTreeSet<String> = deck.iter().map(CardName::encoding).collect();
        assert_eq!(set.len(), 52);
        for c in &deck {
            assert_eq!(c.encoding().parse::<CardName>().unwrap(), *c);
        }
        assert_eq!("10H".parse::<CardName>().unwrap().rank, 10);
        for bad in ["1S", "11H", "AX", "", "T", "10"] {
            assert!(bad.parse::<CardName>().is_err(), "{bad}");
        }
    }

    #[test]
    fn dealing() {
        let all = deal_cards(52, &BTreeSet::new(), 3).unwrap();
        assert_eq!(all.iter().collect::<BTreeSet<_>>().len(), 52);
        assert_eq!(deal_cards(5, &BTreeSet::new(), 9).unwrap(), deal_cards(5, &BTreeSet::new(), 9).unwrap());
        let exclude: BTreeSet<CardName> = full_deck().into_iter().take(48).collect();
        assert_eq!(
            deal_cards(5, &exclude, 1),
            Err(PokerError::DeckExhausted { requested: 5, available: 4 })
        );
    }

    #[test]
    fn community_positions() {
        let cards = deal_cards(5, &BTreeSet::new(), 1).unwrap();
        let placed = layout_cards(&cards, [-0.3, 0.0, 0.91], &[[0.15, 0.005]], 0, card_size(0.1));
        let xs: Vec<f64> = placed.iter().map(|c| c.position[0]).collect();
        for (x, want) in xs.iter().zip([-0.3, -0.15, 0.0, 0.15, 0.3]) {
            assert!((x - want).abs() < 1e-12, "{xs:?}");
        }
        assert!(placed.windows(2).all(|w| w[1].position[2] > w[0].position[2]));
        let one = layout_cards(&cards[..1], [0.1, 0.2, 0.91], &[[0.15, 0.0]], 0, card_size(0.1));
        assert_eq!(one[0].position, [0.1, 0.2, 0.91]);
    }

    #[test]
    fn verso_cards_are_last() {
        let cards = deal_cards(4, &BTreeSet::new(), 1).unwrap();
        let placed = layout_cards(&cards, [0.0; 3], &[[0.1, 0.0]], 2, card_size(0.1));
        let faces: Vec<bool> = placed.iter().map(|c| c.face_up).collect();
        assert_eq!(faces, [true, true, false, false]);
    }

    #[test]
    fn overlap_stride_formula() {
        assert!((overlap_stride(0.1, 0.5) - 0.05).abs() < 1e-15);
        assert_eq!(overlap_stride(0.1, 0.0), 0.1);
    }

    #[test]
    fn totals() {
        let cfg = PokerConfig { n_players: 4, ..Default::default() };
        let layout = generate_layout(&cfg, &table(), 5).unwrap();
        assert_eq!(total_card_count(&layout), 13);
        let empty = PokerConfig {
            n_players: 0,
            card_distribution: CardDistribution { community_cards: 0, ..Default::default() },
            ..Default::default()
        };
        assert_eq!(total_card_count(&generate_layout(&empty, &table(), 5).unwrap()), 0);
    }

    #[test]
    fn player_and_river_example() {
        let cfg: PokerConfig = serde_json::from_value(serde_json::json!({
            "players": [{
                "player_id": "Alice",
                "hand_config": {
                    "card_names": ["AS", "AH", "AD", "AC", "2S"], "n_cards": 5,
                    "location": [-0.6, 0.0, 0.91], "scale": 0.1,
                    "spread_factor_h": 0.2, "spread_factor_v": 0.05, "n_verso": 0, "random_seed": 101
                },
                "chip_area_config": {
                    "base_pile_config": {
                        "n_chips": 8,
                        "base_chip_config": {"chip_object_name": "Cylinder001", "scale": 0.06, "color": [0.1, 0.2, 0.8, 1]},
                        "spread_factor": 0.1
                    },
                    "n_piles": 2, "n_chips_per_pile": [8, 10],
                    "pile_colors": [null, [0.2, 0.8, 0.2, 1]], "pile_spreads": [null, 0.3], "random_seed": 1001
                }
            }],
            "community_cards": {
                "card_names": ["4C", "4H", "4D", "4S", "5C"], "n_cards": 5,
                "start_location": [-0.3, 0, 0.91], "scale": 0.1, "n_verso": 0,
                "card_gap": {"base_gap_x": 0.15, "base_gap_y": 0.005, "random_gap": false}
            }
        }))
        .unwrap();
        let layout = generate_layout(&cfg, &table(), 1).unwrap();
        assert_eq!(total_card_count(&layout), 10);
        let chips = &layout.players[0].chips;
        assert_eq!(chips.iter().map(|c| c.n_chips).collect::<Vec<_>>(), [8, 10]);
        assert_eq!(chips[0].color, Rgba::new(0.1, 0.2, 0.8, 1.0));
        assert_eq!(chips[1].color, Rgba::new(0.2, 0.8, 0.2, 1.0));
        assert_eq!(chips[1].spread, 0.3);
    }

    #[test]
    fn duplicate_explicit_cards_rejected() {
        let cfg: PokerConfig = serde_json::from_value(serde_json::json!({
            "players": [{"player_id": "A", "hand_config": {"card_names": ["AS", "KD"], "n_cards": 2}}],
            "community_cards": {"card_names": ["AS"], "n_cards": 1}
        }))
        .unwrap();
        assert_eq!(generate_layout(&cfg, &table(), 1), Err(PokerError::DuplicateCard("AS".into())));
    }

    #[test]
    fn overlap_replaces_community() {
        let cfg = PokerConfig {
            n_players: 0,
            overlap: Some(OverlapSpec { n_cards: Some(6), overlap_fraction: 0.3, ..Default::default() }),
            ..Default::default()
        };
        let layout = generate_layout(&cfg, &table(), 2).unwrap();
        assert!(layout.community.is_empty());
        assert_eq!(layout.overlap.as_ref().unwrap().cards.len(), 6);
        assert_eq!(total_card_count(&layout), 6);
    }

    #[test]
    fn overall_cards_split() {
        let cfg = PokerConfig {
            n_players: 4,
            card_distribution: CardDistribution { overall_cards: Some(11), ..Default::default() },
            ..Default::default()
        };
        let layout = generate_layout(&cfg, &table(), 2).unwrap();
        assert_eq!(layout.community.len(), 5);
        let hands: Vec<usize> = layout.players.iter().map(|p| p.hand.len()).collect();
        assert_eq!(hands, [2, 2, 1, 1]);
        assert_eq!(total_card_count(&layout), 11);
    }
}
