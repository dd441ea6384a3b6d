//! Minimal static SVG scatter of achieved sparsity (x) against balanced
//! accuracy (y), one labelled point per evaluated checkpoint.

use std::fmt::Write;

pub struct Point {
    pub x: f64,
    pub y: f64,
    pub label: String,
}

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 50.0;

fn sx(v: f64) -> f64 {
    MARGIN + (v / 100.0) * (W - 2.0 * MARGIN)
}

fn sy(v: f64) -> f64 {
    H - MARGIN - (v / 100.0) * (H - 2.0 * MARGIN)
}

pub fn scatter(points: &[Point]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{W}" height="{H}" fill="white"/>"#
    );
    // axes
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        sx(0.0),
        sy(0.0),
        sx(100.0),
        sy(0.0)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        sx(0.0),
        sy(0.0),
        sx(0.0),
        sy(100.0)
    );
    for tick in [0.0, 25.0, 50.0, 75.0, 100.0] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">{tick}</text>"#,
            sx(tick),
            sy(0.0) + 14.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{tick}</text>"#,
            sx(0.0) - 6.0,
            sy(tick) + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">sparsity (%)</text>"#,
        W / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">balanced accuracy (%)</text>"#,
        H / 2.0,
        H / 2.0
    );
    for p in points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="steelblue"/>"#,
            sx(p.x),
            sy(p.y)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#,
            sx(p.x) + 6.0,
            sy(p.y) - 6.0,
            p.label
        );
    }
    s.push_str("</svg>\n");
    s
}
