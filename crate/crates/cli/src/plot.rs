//! Minimal SVG line chart of masked sigma against segment length.

use std::fmt::Write;

use lrtd::multislice::SweepTable;

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 48.0;

pub fn sigma_vs_k_svg(table: &SweepTable) -> String {
    let rows = &table.rows;
    let (kmin, kmax) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.k as f64), b.max(r.k as f64)));
    let (smin, smax) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.sigma), b.max(r.sigma)));
    let kspan = if kmax > kmin { kmax - kmin } else { 1.0 };
    let sspan = if smax > smin { smax - smin } else { smax.abs().max(1.0) };
    let x = |k: f64| PAD + (k - kmin) / kspan * (W - 2.0 * PAD);
    let y = |s: f64| H - PAD - (s - smin) / sspan * (H - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let points: Vec<String> = rows.iter().map(|r| format!("{:.2},{:.2}", x(r.k as f64), y(r.sigma))).collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        points.join(" ")
    );
    for r in rows {
        let (px, py) = (x(r.k as f64), y(r.sigma));
        let _ = writeln!(svg, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="steelblue"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            H - PAD + 16.0,
            r.k
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{smax:.4}</text>"#,
        PAD - 4.0,
        y(smax) + 4.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{smin:.4}</text>"#,
        PAD - 4.0,
        y(smin) + 4.0
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">K</text>"#, W / 2.0, H - 8.0);
    let _ = writeln!(svg, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">masked sigma</text>"#, H / 2.0, H / 2.0);
    svg.push_str("</svg>\n");
    svg
}
