//! Hand-written SVG: nested squares for score matrices, polylines for sweeps.

use daa::ScoreMatrix;
use std::fmt::Write as _;

const CELL: f64 = 64.0;
const LABEL_W: f64 = 110.0;
const LABEL_H: f64 = 90.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One cell per (archetype, target). The outer square's side is the
/// similarity, the inner one's the simplicity; the best archetype of each
/// target gets a dark outline.
pub fn matrix(m: &ScoreMatrix) -> String {
    let (rows, cols) = (m.archetypes.len(), m.targets.len());
    let w = LABEL_W + CELL * cols as f64 + 20.0;
    let h = LABEL_H + CELL * rows as f64 + 50.0;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    for (j, t) in m.targets.iter().enumerate() {
        let x = LABEL_W + CELL * (j as f64 + 0.5);
        writeln!(s, r#"<text x="{x}" y="{}" transform="rotate(-45 {x} {})" text-anchor="start">{}</text>"#, LABEL_H - 8.0, LABEL_H - 8.0, esc(t)).unwrap();
    }
    for (i, a) in m.archetypes.iter().enumerate() {
        let y = LABEL_H + CELL * (i as f64 + 0.5) + 4.0;
        writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#, LABEL_W - 8.0, esc(a)).unwrap();
    }
    for j in 0..cols {
        let best = m.best_archetype(&m.targets[j]).ok();
        for i in 0..rows {
            let cx = LABEL_W + CELL * (j as f64 + 0.5);
            let cy = LABEL_H + CELL * (i as f64 + 0.5);
            writeln!(s, r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="none" stroke="#dddddd"/>"##, cx - CELL / 2.0, cy - CELL / 2.0).unwrap();
            let sim = m.similarity[i][j].clamp(0.0, 1.0);
            let simp = m.simplicity[i][j].clamp(0.0, 1.0);
            let outline = if best == Some(m.archetypes[i].as_str()) { "#222222" } else { "none" };
            square(&mut s, cx, cy, sim * (CELL - 6.0), "#4a7fb5", outline);
            square(&mut s, cx, cy, simp * (CELL - 6.0) * 0.7, "#e08a3c", "none");
        }
    }
    let ly = LABEL_H + CELL * rows as f64 + 25.0;
    writeln!(s, r##"<rect x="{LABEL_W}" y="{}" width="10" height="10" fill="#4a7fb5"/><text x="{}" y="{ly}">similarity</text>"##, ly - 9.0, LABEL_W + 14.0).unwrap();
    writeln!(s, r##"<rect x="{}" y="{}" width="10" height="10" fill="#e08a3c"/><text x="{}" y="{ly}">simplicity</text>"##, LABEL_W + 90.0, ly - 9.0, LABEL_W + 104.0).unwrap();
    s.push_str("</svg>\n");
    s
}

fn square(s: &mut String, cx: f64, cy: f64, side: f64, fill: &str, stroke: &str) {
    if side <= 0.0 {
        return;
    }
    writeln!(s, r#"<rect x="{:.3}" y="{:.3}" width="{side:.3}" height="{side:.3}" fill="{fill}" stroke="{stroke}" stroke-width="2"/>"#, cx - side / 2.0, cy - side / 2.0).unwrap();
}

/// A named series of `(x, y)` points; the line joins the per-x means.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#4a7fb5", "#e08a3c", "#5a9e55", "#c2433f", "#8a66b0", "#7f7f7f"];

/// Side-by-side panels sharing the x axis.
pub fn panels(x_label: &str, panels: &[(&str, Vec<Series>)]) -> String {
    let (pw, ph, m) = (300.0, 220.0, 50.0);
    let w = (pw + 2.0 * m) * panels.len() as f64;
    let h = ph + 2.0 * m + 20.0;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    for (k, (title, series)) in panels.iter().enumerate() {
        let ox = k as f64 * (pw + 2.0 * m) + m;
        let all: Vec<(f64, f64)> = series.iter().flat_map(|c| c.points.iter().copied()).filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
        let (x0, x1) = bounds(all.iter().map(|p| p.0));
        let (y0, y1) = bounds(all.iter().map(|p| p.1));
        let px = |x: f64| ox + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| m + ph - (y - y0) / (y1 - y0) * ph;
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, ox + pw / 2.0, m - 15.0, esc(title)).unwrap();
        writeln!(s, r#"<rect x="{ox}" y="{m}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#).unwrap();
        for t in 0..=4 {
            let f = t as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, px(xv), m + ph + 14.0, tick(xv)).unwrap();
            writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, ox - 4.0, py(yv) + 4.0, tick(yv)).unwrap();
        }
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, ox + pw / 2.0, m + ph + 30.0, esc(x_label)).unwrap();
        for (c, series) in series.iter().enumerate() {
            let color = PALETTE[c % PALETTE.len()];
            for &(x, y) in series.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
                writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}" fill-opacity="0.5"/>"#, px(x), py(y)).unwrap();
            }
            let line: Vec<String> = means(&series.points).iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" ")).unwrap();
            writeln!(s, r#"<text x="{}" y="{}" fill="{color}">{}</text>"#, ox + 6.0, m + 14.0 + 13.0 * c as f64, esc(&series.name)).unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

/// Mean `y` per distinct `x`, sorted by `x`.
pub fn means(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).filter(|x| x.is_finite()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.into_iter()
        .filter_map(|x| {
            let ys: Vec<f64> = points.iter().filter(|p| p.0 == x && p.1.is_finite()).map(|p| p.1).collect();
            (!ys.is_empty()).then(|| (x, ys.iter().sum::<f64>() / ys.len() as f64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn means_group_by_x() {
        let m = means(&[(1.0, 2.0), (0.0, 1.0), (1.0, 4.0), (0.0, f64::NAN)]);
        assert_eq!(m, vec![(0.0, 1.0), (1.0, 3.0)]);
    }

    #[test]
    fn panels_are_well_formed() {
        let s = panels("s", &[("d", vec![Series { name: "ring".into(), points: vec![(0.0, 1.0), (1.0, 2.0)] }])]);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<polyline").count(), 1);
    }
}
