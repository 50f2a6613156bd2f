//! Deterministic SVG pictures of allocations: one horizontal band per
//! family, one filled rectangle per interval component, and an axis
//! ticked at every cut with its exact rational coordinate. The output
//! is a pure function of the input — same instance and allocation,
//! same bytes.

use crate::geometry::Interval;
use crate::instance::{Allocation, Instance};
use crate::rational::Rational;
use num::{BigInt, Signed, ToPrimitive};
use std::collections::BTreeSet;
use std::fmt::Write;

const PLOT_LEFT: i64 = 130;
const PLOT_WIDTH: i64 = 660;
const BAND_TOP: i64 = 24;
const BAND_HEIGHT: i64 = 34;
const BAND_GAP: i64 = 16;
const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2", "#edc949", "#9c755f",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// A horizontal pixel position with three deterministic decimals.
fn px(cake: &Interval, pos: &Rational) -> String {
    let offset = (pos - cake.left()) / cake.length();
    let scaled = offset * Rational::from_integer(PLOT_WIDTH.into())
        + Rational::from_integer(PLOT_LEFT.into());
    // Round half up to 1/1000, then print without floating point.
    let thousandths = (scaled * Rational::from_integer(1000.into())
        + Rational::new(BigInt::from(1), BigInt::from(2)))
    .floor()
    .to_integer();
    debug_assert!(!thousandths.is_negative());
    let whole = &thousandths / BigInt::from(1000);
    let frac = (&thousandths % BigInt::from(1000)).to_i64().unwrap_or(0);
    if frac == 0 {
        whole.to_string()
    } else {
        format!("{whole}.{frac:03}")
            .trim_end_matches('0')
            .to_string()
    }
}

/// Renders the allocation as an SVG document.
pub fn render_allocation(instance: &Instance, allocation: &Allocation) -> String {
    let cake = instance.cake();
    let k = allocation.pieces.len();
    let axis_y = BAND_TOP + (k as i64) * (BAND_HEIGHT + BAND_GAP) + 6;
    let height = axis_y + 44;
    let width = PLOT_LEFT + PLOT_WIDTH + 50;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">"
    );
    svg.push_str(
        "  <style>text { font-family: monospace; font-size: 12px; fill: #333; }</style>\n",
    );

    for (f, piece) in allocation.pieces.iter().enumerate() {
        let band_y = BAND_TOP + (f as i64) * (BAND_HEIGHT + BAND_GAP);
        let label = instance
            .families()
            .get(f)
            .map(|fam| fam.id.as_str())
            .unwrap_or("?");
        let text_y = band_y + BAND_HEIGHT / 2 + 4;
        let _ = writeln!(
            svg,
            "  <text x=\"16\" y=\"{text_y}\">{}</text>",
            escape(label)
        );
        if piece.is_empty() {
            let _ = writeln!(
                svg,
                "  <text x=\"{PLOT_LEFT}\" y=\"{text_y}\" opacity=\"0.6\">(empty)</text>"
            );
            continue;
        }
        let color = PALETTE[f % PALETTE.len()];
        for iv in piece.intervals() {
            let x = px(cake, iv.left());
            let x_right = px(cake, iv.right());
            // Width in pixel space; both ends share the rounding grid.
            let w = width_between(&x, &x_right);
            let _ = writeln!(
                svg,
                "  <rect x=\"{x}\" y=\"{band_y}\" width=\"{w}\" height=\"{BAND_HEIGHT}\" \
                 fill=\"{color}\" stroke=\"#222\" stroke-width=\"1\">\
                 <title>[{}, {}]</title></rect>",
                iv.left(),
                iv.right()
            );
        }
    }

    // Axis with a tick and exact label at every endpoint in play.
    let mut ticks: BTreeSet<Rational> = BTreeSet::new();
    ticks.insert(cake.left().clone());
    ticks.insert(cake.right().clone());
    for piece in &allocation.pieces {
        for iv in piece.intervals() {
            ticks.insert(iv.left().clone());
            ticks.insert(iv.right().clone());
        }
    }
    let axis_right = PLOT_LEFT + PLOT_WIDTH;
    let _ = writeln!(
        svg,
        "  <line x1=\"{PLOT_LEFT}\" y1=\"{axis_y}\" x2=\"{axis_right}\" y2=\"{axis_y}\" \
         stroke=\"#222\" stroke-width=\"1\"/>"
    );
    let label_y = axis_y + 26;
    let tick_bottom = axis_y + 6;
    for tick in &ticks {
        let x = px(cake, tick);
        let _ = writeln!(
            svg,
            "  <line x1=\"{x}\" y1=\"{axis_y}\" x2=\"{x}\" y2=\"{tick_bottom}\" \
             stroke=\"#222\" stroke-width=\"1\"/>"
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{x}\" y=\"{label_y}\" text-anchor=\"middle\">{}</text>",
            escape(&tick.to_string())
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Difference of two already-rounded pixel strings, kept in the same
/// decimal grid so widths never go negative from rounding skew.
fn width_between(left: &str, right: &str) -> String {
    let to_thousandths = |s: &str| -> i64 {
        match s.split_once('.') {
            Some((w, f)) => {
                let mut frac = f.to_owned();
                while frac.len() < 3 {
                    frac.push('0');
                }
                w.parse::<i64>().unwrap() * 1000 + frac.parse::<i64>().unwrap()
            }
            None => s.parse::<i64>().unwrap() * 1000,
        }
    };
    let diff = (to_thousandths(right) - to_thousandths(left)).max(0);
    let (whole, frac) = (diff / 1000, diff % 1000);
    if frac == 0 {
        whole.to_string()
    } else {
        format!("{whole}.{frac:03}")
            .trim_end_matches('0')
            .to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::estate;
    use crate::geometry::Piece;
    use crate::rational::{int, rat};

    fn halves() -> Allocation {
        Allocation::new(vec![
            Piece::from_interval(Interval::new(int(0), int(2))),
            Piece::from_interval(Interval::new(int(2), int(4))),
        ])
    }

    #[test]
    fn two_bands_one_rectangle_each() {
        let svg = render_allocation(&estate(), &halves());
        assert_eq!(svg.matches("<rect").count(), 2);
        assert!(svg.contains(">f1</text>"));
        assert!(svg.contains(">f2</text>"));
        assert!(svg.contains("<title>[0, 2]</title>"));
        assert!(svg.contains("<title>[2, 4]</title>"));
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn components_get_their_own_rectangles() {
        let alloc = Allocation::new(vec![
            Piece::from_intervals(vec![
                Interval::new(int(0), rat(1, 2)),
                Interval::new(int(1), int(2)),
                Interval::new(int(3), rat(7, 2)),
            ]),
            Piece::from_intervals(vec![
                Interval::new(rat(1, 2), int(1)),
                Interval::new(int(2), int(3)),
                Interval::new(rat(7, 2), int(4)),
            ]),
        ]);
        let svg = render_allocation(&estate(), &alloc);
        assert_eq!(svg.matches("<rect").count(), 6);
        // Exact rational tick labels, not decimals.
        assert!(svg.contains(">1/2</text>"));
        assert!(svg.contains(">7/2</text>"));
    }

    #[test]
    fn empty_pieces_are_labeled() {
        let alloc = Allocation::new(vec![
            Piece::from_interval(Interval::new(int(0), int(4))),
            Piece::empty(),
        ]);
        let svg = render_allocation(&estate(), &alloc);
        assert_eq!(svg.matches("<rect").count(), 1);
        assert!(svg.contains("(empty)"));
    }

    #[test]
    fn output_bytes_are_deterministic() {
        let a = render_allocation(&estate(), &halves());
        let b = render_allocation(&estate(), &halves());
        assert_eq!(a, b);
    }

    #[test]
    fn pixel_positions_round_deterministically() {
        let cake = Interval::new(int(0), int(3));
        assert_eq!(px(&cake, &int(0)), "130");
        assert_eq!(px(&cake, &int(3)), "790");
        assert_eq!(px(&cake, &int(1)), "350");
        // 130 + 660/7 = 130 + 94.285714... -> 224.286
        assert_eq!(px(&cake, &rat(3, 7)), "224.286");
        assert_eq!(width_between("224.286", "350"), "125.714");
        assert_eq!(width_between("130", "790"), "660");
    }
}
