//! Flat shapes in local units: piece silhouettes, card pips and a tiny
//! bitmap font for card ranks.
//!
//! Piece silhouettes use x ∈ [-0.25, 0.25] and y up from 0, in units of the
//! piece scale. Pips are centered in a unit square.

use crate::chess::PieceType;
use crate::poker::Suit;

pub type Contour = Vec<[f64; 2]>;

pub fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64, n: usize) -> Contour {
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            [cx + rx * libm::cos(t), cy + ry * libm::sin(t)]
        })
        .collect()
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Contour {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

fn base() -> Contour {
    vec![[-0.22, 0.0], [0.22, 0.0], [0.18, 0.08], [-0.18, 0.08]]
}

/// Silhouette of a piece; contours are unioned when filled.
pub fn piece_glyph(t: PieceType) -> Vec<Contour> {
    match t {
        PieceType::Pawn => vec![
            base(),
            vec![[-0.08, 0.08], [0.08, 0.08], [0.06, 0.3], [-0.06, 0.3]],
            ellipse(0.0, 0.38, 0.12, 0.12, 20),
        ],
        PieceType::Rook => vec![
            base(),
            rect(-0.13, 0.08, 0.13, 0.5),
            rect(-0.17, 0.5, 0.17, 0.6),
            rect(-0.17, 0.6, -0.09, 0.68),
            rect(-0.04, 0.6, 0.04, 0.68),
            rect(0.09, 0.6, 0.17, 0.68),
        ],
        PieceType::Knight => vec![
            base(),
            vec![
                [-0.15, 0.08],
                [0.15, 0.08],
                [0.12, 0.35],
                [0.2, 0.5],
                [0.18, 0.6],
                [0.05, 0.72],
                [-0.02, 0.78],
                [-0.06, 0.7],
                [-0.2, 0.58],
                [-0.22, 0.5],
                [-0.08, 0.48],
                [-0.14, 0.3],
            ],
        ],
        PieceType::Bishop => vec![
            base(),
            vec![[-0.1, 0.08], [0.1, 0.08], [0.06, 0.4], [-0.06, 0.4]],
            ellipse(0.0, 0.55, 0.12, 0.18, 24),
            ellipse(0.0, 0.78, 0.04, 0.04, 12),
        ],
        PieceType::Queen => vec![
            base(),
            vec![[-0.14, 0.08], [0.14, 0.08], [0.08, 0.6], [-0.08, 0.6]],
            vec![
                [-0.18, 0.6],
                [0.18, 0.6],
                [0.22, 0.8],
                [0.12, 0.7],
                [0.06, 0.84],
                [0.0, 0.72],
                [-0.06, 0.84],
                [-0.12, 0.7],
                [-0.22, 0.8],
            ],
            ellipse(0.0, 0.88, 0.04, 0.04, 12),
        ],
        PieceType::King => vec![
            base(),
            vec![[-0.14, 0.08], [0.14, 0.08], [0.1, 0.66], [-0.1, 0.66]],
            rect(-0.16, 0.66, 0.16, 0.74),
            rect(-0.03, 0.74, 0.03, 0.98),
            rect(-0.09, 0.84, 0.09, 0.9),
        ],
    }
}

/// Suit symbol in [-0.5, 0.5]², y up.
pub fn suit_pip(s: Suit) -> Vec<Contour> {
    match s {
        Suit::Diamonds => vec![vec![[0.0, 0.5], [0.35, 0.0], [0.0, -0.5], [-0.35, 0.0]]],
        Suit::Hearts => vec![
            ellipse(-0.22, 0.15, 0.25, 0.25, 20),
            ellipse(0.22, 0.15, 0.25, 0.25, 20),
            vec![[-0.46, 0.08], [0.46, 0.08], [0.0, -0.5]],
        ],
        Suit::Spades => vec![
            ellipse(-0.22, -0.05, 0.25, 0.25, 20),
            ellipse(0.22, -0.05, 0.25, 0.25, 20),
            vec![[-0.46, 0.02], [0.46, 0.02], [0.0, 0.5]],
            vec![[0.0, -0.1], [0.15, -0.5], [-0.15, -0.5]],
        ],
        Suit::Clubs => vec![
            ellipse(0.0, 0.25, 0.22, 0.22, 20),
            ellipse(-0.25, -0.1, 0.22, 0.22, 20),
            ellipse(0.25, -0.1, 0.22, 0.22, 20),
            vec![[0.0, 0.0], [0.12, -0.5], [-0.12, -0.5]],
        ],
    }
}

/// 3×5 bitmaps, top row first, bit 2 = left column.
fn font_rows(c: char) -> Option<[u8; 5]> {
    Some(match c {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b010, 0b010, 0b010],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        'J' => [0b001, 0b001, 0b001, 0b101, 0b111],
        'Q' => [0b111, 0b101, 0b101, 0b111, 0b001],
        'K' => [0b101, 0b110, 0b100, 0b110, 0b101],
        'A' => [0b010, 0b101, 0b111, 0b101, 0b101],
        _ => return None,
    })
}

/// Lit cells of a text string, one square per cell, in units of one cell,
/// origin at the top-left and y pointing down.
pub fn text_cells(text: &str) -> Vec<Contour> {
    let mut out = Vec::new();
    for (k, ch) in text.chars().enumerate() {
        let Some(rows) = font_rows(ch) else { continue };
        let ox = 4.0 * k as f64;
        for (r, bits) in rows.iter().enumerate() {
            for col in 0..3 {
                if bits & (0b100 >> col) != 0 {
                    let (x, y) = (ox + col as f64, r as f64);
                    out.push(rect(x, y, x + 1.0, y + 1.0));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chess::PIECE_TYPES;

    #[test]
    fn silhouettes_are_distinct() {
        let heights: Vec<f64> = PIECE_TYPES
            .iter()
            .map(|&t| piece_glyph(t).iter().flatten().map(|p| p[1]).fold(0.0, f64::max))
            .collect();
        let mut sorted = heights.clone();
        sorted.dedup();
        assert_eq!(sorted.len(), 6, "{heights:?}");
    }

    #[test]
    fn font_covers_all_ranks() {
        for r in ["2", "3", "4", "5", "6", "7", "8", "9", "10", "J", "Q", "K", "A"] {
            assert!(!text_cells(r).is_empty(), "{r}");
        }
    }
}
