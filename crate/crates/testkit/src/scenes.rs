//! Random chess and poker scene configs, and answers recomputed from the
//! placed objects of a resolved scene.

use rand::seq::SliceRandom;
use rand::Rng;
use visdiag_core::answer::AnswerValue;
use visdiag_core::chess::{
    ChessConfig, ChessLayout, ColorChoice, ExplicitPiece, PieceCountSpec, PiecePositionSpec, PieceType,
    PieceTypeSpec, SpreadLevel, StartPoint, TypeSpecType,
};
use visdiag_core::poker::{CardName, CommunitySpec, OverlapAxis, OverlapSpec, PokerConfig, PokerLayout, Suit};
use visdiag_core::scene::{GameScene, ResolvedScene, Rgba, SceneConfig};

const TYPES: [PieceType; 6] =
    [PieceType::Pawn, PieceType::Rook, PieceType::Knight, PieceType::Bishop, PieceType::Queen, PieceType::King];

fn color(rng: &mut impl Rng) -> Rgba {
    Rgba::new(rng.random(), rng.random(), rng.random(), 1.0)
}

pub fn fuzz_chess(rng: &mut impl Rng) -> SceneConfig {
    let mut c = ChessConfig::default();
    c.board.rows = [2, 4, 8, 16][rng.random_range(0..4)];
    c.board.columns = [2, 4, 8, 16][rng.random_range(0..4)];
    let cells = c.board.rows * c.board.columns;
    if rng.random_bool(0.1) {
        // explicit placement
        let mut all: Vec<[u32; 2]> = (0..c.board.rows).flat_map(|r| (0..c.board.columns).map(move |k| [r, k])).collect();
        all.shuffle(rng);
        let n = rng.random_range(1..=3.min(cells as usize));
        c.pieces = Some(
            all[..n]
                .iter()
                .map(|&location| ExplicitPiece {
                    piece_type: TYPES[rng.random_range(0..6)],
                    location,
                    color: rng.random_bool(0.7).then(|| color(rng)),
                    scale: None,
                    random_rotation: rng.random_bool(0.5),
                    max_rotation_angle: None,
                    roughness: None,
                    material_name: None,
                })
                .collect(),
        );
    } else {
        let max = cells.min(21);
        c.count_config = match rng.random_range(0..4) {
            0 => PieceCountSpec::explicit(rng.random_range(1..=2)),
            1 => PieceCountSpec::explicit(rng.random_range(0..=max)),
            _ => {
                let a = rng.random_range(0..=max);
                PieceCountSpec::range(a, rng.random_range(a..=max))
            }
        };
        c.type_config = match rng.random_range(0..3) {
            0 => {
                let mut t = TYPES.to_vec();
                t.shuffle(rng);
                t.truncate(rng.random_range(1..=6));
                PieceTypeSpec::list(t)
            }
            1 => PieceTypeSpec { spec_type: TypeSpecType::NRandom, n_types: rng.random_range(1..=6), ..Default::default() },
            _ => PieceTypeSpec {
                preset: ["low", "medium", "high"][rng.random_range(0..3)].into(),
                ..Default::default()
            },
        };
        c.position_config = PiecePositionSpec {
            allowed_positions: Vec::new(),
            spread_level: [SpreadLevel::Low, SpreadLevel::Medium, SpreadLevel::High][rng.random_range(0..3)],
            start_point: match rng.random_range(0..4) {
                0 => StartPoint::Center,
                1 => StartPoint::Corner,
                2 => StartPoint::Edge,
                _ => StartPoint::Cell([rng.random_range(0..c.board.rows), rng.random_range(0..c.board.columns)]),
            },
        };
        c.color_config = [ColorChoice::Random, ColorChoice::White, ColorChoice::Black][rng.random_range(0..3)];
        if rng.random_bool(0.3) {
            c.white_piece_color = color(rng);
            c.black_piece_color = color(rng);
        }
        c.random_rotation = rng.random_bool(0.3);
    }
    SceneConfig { chess: Some(c), ..Default::default() }
}

pub fn fuzz_poker(rng: &mut impl Rng) -> SceneConfig {
    let mut p = PokerConfig { n_players: rng.random_range(0..=5), ..Default::default() };
    let d = &mut p.card_distribution;
    d.community_cards = rng.random_range(0..=5);
    d.cards_per_player = rng.random_range(0..=3);
    d.n_verso_per_player = rng.random_range(0..=2);
    if rng.random_bool(0.5) {
        d.overall_cards = Some(rng.random_range(2..=15));
    }
    let community = match d.overall_cards {
        Some(total) if p.n_players > 0 => total.min(d.community_cards),
        Some(total) => total,
        None => d.community_cards,
    };
    if community > 0 && rng.random_bool(0.3) {
        p.community_cards = Some(CommunitySpec { n_verso: rng.random_range(0..=community), ..Default::default() });
    }
    if rng.random_bool(0.25) {
        let n = rng.random_range(2..=6);
        p.overlap = Some(OverlapSpec {
            axis: if rng.random_bool(0.5) { OverlapAxis::Horizontal } else { OverlapAxis::Vertical },
            overlap_fraction: rng.random_range(0.1..0.9),
            n_cards: Some(n),
            n_verso: rng.random_range(0..=1),
            ..Default::default()
        });
    }
    SceneConfig { poker: Some(p), ..Default::default() }
}

// ---------------------------------------------------------------------------
// brute-force answers

fn is_white(c: &Rgba) -> bool {
    0.299 * c.0[0] + 0.587 * c.0[1] + 0.114 * c.0[2] > 0.5
}

/// (row, col) of a piece from its world position and the board geometry.
fn cell_of(layout: &ChessLayout, xyz: [f64; 3]) -> (i64, i64) {
    let s = &layout.board.spec;
    let axis = |v: f64, origin: f64, extent: f64, n: u32| {
        let pitch = (extent - 2.0 * s.border_width) / f64::from(n);
        ((v - origin) / pitch + f64::from(n - 1) / 2.0).round() as i64
    };
    (axis(xyz[0], s.location[0], s.length, s.rows), axis(xyz[1], s.location[1], s.width, s.columns))
}

fn type_name(t: PieceType) -> &'static str {
    match t {
        PieceType::Pawn => "pawn",
        PieceType::Rook => "rook",
        PieceType::Knight => "knight",
        PieceType::Bishop => "bishop",
        PieceType::Queen => "queen",
        PieceType::King => "king",
    }
}

/// `None` when the key does not apply to the scene.
pub fn chess_truth(key: &str, layout: &ChessLayout) -> Option<AnswerValue> {
    let pieces = &layout.pieces;
    let single = (pieces.len() == 1).then(|| &pieces[0]);
    let pair = (pieces.len() == 2).then(|| (cell_of(layout, pieces[0].world_location), cell_of(layout, pieces[1].world_location)));
    Some(match key {
        "count_pieces" => AnswerValue::Integer(pieces.len() as i64),
        "count_identification_white_pieces" => {
            AnswerValue::Integer(pieces.iter().filter(|p| is_white(&p.material.color)).count() as i64)
        }
        "identify_type_one_piece" => AnswerValue::Label(type_name(single?.piece_type).into()),
        "identify_pieces" => {
            let mut names: Vec<String> = Vec::new();
            for p in pieces {
                let n = type_name(p.piece_type).to_string();
                if !names.contains(&n) {
                    names.push(n);
                }
            }
            if names.is_empty() {
                return None;
            }
            AnswerValue::LabelList(names)
        }
        "identify_color_one_piece" => {
            AnswerValue::Label(if is_white(&single?.material.color) { "white" } else { "black" }.into())
        }
        "localize_row_one_piece" => AnswerValue::Integer(cell_of(layout, single?.world_location).0),
        "localize_column_one_piece" => AnswerValue::Integer(cell_of(layout, single?.world_location).1),
        "localize_cell_one_piece" => {
            let (r, c) = cell_of(layout, single?.world_location);
            AnswerValue::Cell([r, c])
        }
        "relative_rows_two_pieces" => {
            let (a, b) = pair?;
            AnswerValue::Integer((a.0 - b.0).abs())
        }
        "relative_columns_two_pieces" => {
            let (a, b) = pair?;
            AnswerValue::Integer((a.1 - b.1).abs())
        }
        "board_square_count" => AnswerValue::Integer(layout.board.cells.len() as i64),
        _ => return None,
    })
}

fn encode(c: &CardName) -> String {
    let rank = match c.rank {
        2..=10 => c.rank.to_string(),
        11 => "J".into(),
        12 => "Q".into(),
        13 => "K".into(),
        _ => "A".into(),
    };
    let suit = match c.suit {
        Suit::Spades => 'S',
        Suit::Hearts => 'H',
        Suit::Diamonds => 'D',
        Suit::Clubs => 'C',
    };
    format!("{rank}{suit}")
}

const SUIT_WORDS: [(Suit, &str); 4] =
    [(Suit::Spades, "spade"), (Suit::Hearts, "heart"), (Suit::Diamonds, "diamond"), (Suit::Clubs, "club")];

/// Suit the question asks about: the last suit word in the text.
fn asked_suit(text: &str) -> Option<Suit> {
    let lower = text.to_lowercase();
    SUIT_WORDS.iter().filter_map(|(s, w)| lower.rfind(w).map(|i| (i, *s))).max_by_key(|(i, _)| *i).map(|(_, s)| s)
}

pub fn poker_truth(key: &str, layout: &PokerLayout, question: Option<&str>) -> Option<AnswerValue> {
    let mut cards = Vec::new();
    for p in &layout.players {
        cards.extend(p.hand.iter());
    }
    cards.extend(layout.community.iter());
    if let Some(o) = &layout.overlap {
        cards.extend(o.cards.iter());
    }
    Some(match key {
        "count_total_cards" | "count_overlap_cards" => AnswerValue::Integer(cards.len() as i64),
        "count_community_cards" => AnswerValue::Integer(layout.community.len() as i64),
        "count_identify_face_up_cards" => AnswerValue::Integer(cards.iter().filter(|c| c.face_up).count() as i64),
        "identify_cards" => {
            let table: Vec<String> = layout
                .community
                .iter()
                .chain(layout.overlap.iter().flat_map(|o| o.cards.iter()))
                .map(|c| encode(&c.card))
                .collect();
            if table.is_empty() {
                return None;
            }
            AnswerValue::LabelList(table)
        }
        "suit_count" => {
            let suit = match question {
                Some(q) => asked_suit(q)?,
                None => {
                    let mut best = (0, Suit::Hearts);
                    for (s, _) in SUIT_WORDS {
                        let n = cards.iter().filter(|c| c.face_up && c.card.suit == s).count();
                        if n > best.0 {
                            best = (n, s);
                        }
                    }
                    best.1
                }
            };
            AnswerValue::Integer(cards.iter().filter(|c| c.face_up && c.card.suit == suit).count() as i64)
        }
        "most_cards_player" => {
            let most = layout.players.iter().map(|p| p.hand.len()).max()?;
            AnswerValue::LabelList(
                layout.players.iter().filter(|p| p.hand.len() == most).map(|p| p.player_id.clone()).collect(),
            )
        }
        _ => return None,
    })
}

pub fn scene_truth(key: &str, scene: &ResolvedScene, question: Option<&str>) -> Option<AnswerValue> {
    match &scene.game {
        GameScene::Chess(l) => chess_truth(key, l),
        GameScene::Poker(l) => poker_truth(key, l, question),
    }
}

/// Exact equality, except label lists compare as multisets.
pub fn same_answer(a: &AnswerValue, b: &AnswerValue) -> bool {
    match (a, b) {
        (AnswerValue::LabelList(x), AnswerValue::LabelList(y)) => {
            let (mut x, mut y) = (x.clone(), y.clone());
            x.sort();
            y.sort();
            x == y
        }
        _ => a == b,
    }
}
