//! Minimal SVG emitters for reconstructions, ARC plots and heatmaps.

use std::fmt::Write;

use curvefill::{Inducer, Point2};

const MARGIN: f64 = 20.0;

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}px" height="{h:.0}px" viewBox="0 0 {w:.0} {h:.0}">"#,
        w = width.ceil(),
        h = height.ceil()
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(out: &mut String, pts: impl IntoIterator<Item = (f64, f64)>, style: &str) {
    let coords: Vec<String> = pts.into_iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
    let _ = writeln!(out, r#"<polyline fill="none" {style} points="{}"/>"#, coords.join(" "));
}

/// Gray level for a sample count: more samples, darker stroke.
pub fn shade_for_count(m: usize) -> u8 {
    let t = ((1.0 + m as f64).ln() / (1.0 + 1000f64).ln()).min(1.0);
    (200.0 * (1.0 - t)).round() as u8
}

/// One reconstruction drawn in image coordinates (y down, as in the corpus).
pub struct ReconstructionPlot<'a> {
    pub i1: &'a Inducer,
    pub i2: &'a Inducer,
    pub mean: &'a [Point2],
    pub m: usize,
    pub euler: Option<&'a [Point2]>,
    pub ground_truth: Option<&'a [Point2]>,
}

impl ReconstructionPlot<'_> {
    pub fn render(&self) -> String {
        let gap = self.i1.position.distance(self.i2.position);
        let arrow = 0.15 * gap;
        let mut all: Vec<Point2> = self.mean.to_vec();
        all.extend(self.euler.unwrap_or(&[]));
        all.extend(self.ground_truth.unwrap_or(&[]));
        for i in [self.i1, self.i2] {
            all.push(i.position);
            all.push(i.position - i.direction() * arrow);
        }
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &all {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let tx = |p: &Point2| (p.x - x0 + MARGIN, p.y - y0 + MARGIN);
        let mut out = String::new();
        header(&mut out, x1 - x0 + 2.0 * MARGIN, y1 - y0 + 2.0 * MARGIN);
        if let Some(gt) = self.ground_truth {
            polyline(&mut out, gt.iter().map(tx), r##"stroke="#2a9d8f" stroke-width="1.5" stroke-dasharray="4 3""##);
        }
        if let Some(e) = self.euler {
            polyline(&mut out, e.iter().map(tx), r#"stroke="magenta" stroke-width="1.5""#);
        }
        let g = shade_for_count(self.m);
        polyline(
            &mut out,
            self.mean.iter().map(tx),
            &format!(r#"stroke="rgb({g},{g},{g})" stroke-width="2""#),
        );
        for i in [self.i1, self.i2] {
            // the visible curve stub behind each inducer
            let (ax, ay) = tx(&(i.position - i.direction() * arrow));
            let (bx, by) = tx(&i.position);
            let _ = writeln!(
                out,
                r#"<line x1="{ax:.3}" y1="{ay:.3}" x2="{bx:.3}" y2="{by:.3}" stroke="black" stroke-width="3"/>"#
            );
            let _ = writeln!(out, r#"<circle cx="{bx:.3}" cy="{by:.3}" r="2.5" fill="red"/>"#);
        }
        let _ = writeln!(
            out,
            r#"<text x="4" y="14" font-size="11" font-family="sans-serif">m = {}</text>"#,
            self.m
        );
        out.push_str("</svg>\n");
        out
    }
}

const PALETTE: [&str; 4] = ["#1d3557", "magenta", "#e76f51", "#2a9d8f"];

/// ARC curves, one per method, on a 0..1 by 0..1 plot.
pub fn arc_plot(title: &str, thresholds: &[f64], series: &[(&str, &[f64], f64)]) -> String {
    let (w, h) = (420.0, 320.0);
    let (px, py, pw, ph) = (50.0, 30.0, 340.0, 240.0);
    let mut out = String::new();
    header(&mut out, w, h);
    let _ = writeln!(
        out,
        r#"<text x="{px}" y="18" font-size="13" font-family="sans-serif">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{px}" y="{py}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let gx = px + v * pw;
        let gy = py + ph - v * ph;
        let _ = writeln!(
            out,
            r#"<text x="{gx:.1}" y="{:.1}" font-size="10" text-anchor="middle" font-family="sans-serif">{v:.2}</text>"#,
            py + ph + 14.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end" font-family="sans-serif">{v:.2}</text>"#,
            px - 4.0,
            gy + 3.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle" font-family="sans-serif">RRE threshold</text>"#,
        px + pw / 2.0,
        h - 6.0
    );
    for (k, (name, arc, auc)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        polyline(
            &mut out,
            thresholds.iter().zip(arc.iter()).map(|(t, a)| (px + t * pw, py + ph - a * ph)),
            &format!(r#"stroke="{color}" stroke-width="2""#),
        );
        let ly = py + ph - 12.0 - 14.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{ly:.1}" font-size="11" fill="{color}" font-family="sans-serif">{} (AUC {auc:.3})</text>"#,
            px + pw - 150.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Heatmap of `values[row][col]`; `NaN` cells are drawn hatched gray.
/// Rows run along θ1 (top to bottom), columns along θ2.
pub fn heatmap(title: &str, values: &[Vec<f64>], cell: f64) -> String {
    let rows = values.len();
    let cols = values.first().map_or(0, Vec::len);
    let finite = values.iter().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let top = 24.0;
    let mut out = String::new();
    header(&mut out, cols as f64 * cell + 2.0 * MARGIN, rows as f64 * cell + top + MARGIN + 16.0);
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="16" font-size="12" font-family="sans-serif">{} (min {:.4}, max {:.4})</text>"#,
        escape(title),
        if lo.is_finite() { lo } else { f64::NAN },
        if hi.is_finite() { hi } else { f64::NAN }
    );
    for (r, row) in values.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let fill = if v.is_finite() {
                ramp((v - lo) / span)
            } else {
                "#cccccc".to_string()
            };
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="{cell}" height="{cell}" fill="{fill}"/>"#,
                MARGIN + c as f64 * cell,
                top + r as f64 * cell
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{:.1}" font-size="10" font-family="sans-serif">θ2 →, θ1 ↓</text>"#,
        top + rows as f64 * cell + 14.0
    );
    out.push_str("</svg>\n");
    out
}

/// Dark blue to yellow.
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let stops = [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let x = t * (stops.len() - 1) as f64;
    let i = (x as usize).min(stops.len() - 2);
    let f = x - i as f64;
    let (a, b) = (stops[i], stops[i + 1]);
    let mix = |u: f64, v: f64| (u + (v - u) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(svg: &str) -> bool {
        svg.starts_with("<svg ") && svg.trim_end().ends_with("</svg>") && svg.matches("<svg").count() == 1
    }

    #[test]
    fn reconstruction_plot_is_well_formed() {
        let i1 = Inducer::new(Point2::new(10.0, 10.0), 0.0);
        let i2 = Inducer::new(Point2::new(90.0, 10.0), std::f64::consts::PI);
        let mean = [i1.position, Point2::new(50.0, 20.0), i2.position];
        let svg = ReconstructionPlot {
            i1: &i1,
            i2: &i2,
            mean: &mean,
            m: 12,
            euler: Some(&mean),
            ground_truth: None,
        }
        .render();
        assert!(balanced(&svg));
        assert!(svg.contains("magenta"));
        assert!(svg.contains(r#"width="144px""#), "{svg}");
    }

    #[test]
    fn more_samples_draw_darker() {
        assert!(shade_for_count(1000) < shade_for_count(10));
        assert_eq!(shade_for_count(0), 200);
    }

    #[test]
    fn arc_plot_and_heatmap() {
        let t: Vec<f64> = (0..101).map(|k| k as f64 / 100.0).collect();
        let a: Vec<f64> = t.iter().map(|x| x.sqrt()).collect();
        let svg = arc_plot("full <set>", &t, &[("mean_curve", &a, 0.6)]);
        assert!(balanced(&svg) && svg.contains("&lt;set&gt;"));
        let h = heatmap("std", &[vec![0.0, 1.0], vec![f64::NAN, 0.5]], 10.0);
        assert!(balanced(&h));
        assert_eq!(h.matches("<rect x=").count(), 4);
        assert!(h.contains("#cccccc"));
        assert_eq!(ramp(0.0), "#440154");
        assert_eq!(ramp(1.0), "#fde725");
    }
}
