//! Minimal deterministic SVG writer. Coordinates are printed with three
//! decimals so identical inputs give identical bytes.

use std::fmt::Write;

use active_coreset::oracle::BitmapOracle;
use active_coreset::BoundingBox;

pub struct Canvas {
    lo: (f64, f64),
    hi: (f64, f64),
    scale: f64,
    width: f64,
    height: f64,
    body: String,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl Canvas {
    /// Canvas for world coordinates in `bounds` (first two axes), `width_px`
    /// pixels wide.
    pub fn new(bounds: &BoundingBox<f64>, width_px: f64) -> Self {
        let lo = (bounds.lo[0], bounds.lo[1]);
        let hi = (bounds.hi[0], bounds.hi[1]);
        let scale = width_px / (hi.0 - lo.0);
        Canvas { lo, hi, scale, width: width_px, height: (hi.1 - lo.1) * scale, body: String::new() }
    }

    /// Plain pixel canvas for charts.
    pub fn chart(width: f64, height: f64) -> Self {
        Canvas { lo: (0.0, 0.0), hi: (width, height), scale: 1.0, width, height, body: String::new() }
    }

    fn x(&self, x: f64) -> f64 {
        (x - self.lo.0) * self.scale
    }

    fn y(&self, y: f64) -> f64 {
        (self.hi.1 - y) * self.scale
    }

    pub fn rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, fill: &str) {
        let (a, b) = (self.x(x0.min(x1)), self.y(y0.max(y1)));
        let (w, h) = ((x1 - x0).abs() * self.scale, (y1 - y0).abs() * self.scale);
        let _ = writeln!(self.body, r#"<rect x="{a:.3}" y="{b:.3}" width="{w:.3}" height="{h:.3}" fill="{fill}"/>"#);
    }

    pub fn polygon(&mut self, pts: &[(f64, f64)], fill: &str, stroke: &str, opacity: f64) {
        let mut s = String::new();
        for (i, p) in pts.iter().enumerate() {
            let sep = if i == 0 { "" } else { " " };
            let _ = write!(s, "{sep}{:.3},{:.3}", self.x(p.0), self.y(p.1));
        }
        let _ = writeln!(
            self.body,
            r#"<polygon points="{s}" fill="{fill}" fill-opacity="{opacity:.2}" stroke="{stroke}" stroke-width="1"/>"#
        );
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64) {
        let mut s = String::new();
        for (i, p) in pts.iter().enumerate() {
            let sep = if i == 0 { "" } else { " " };
            let _ = write!(s, "{sep}{:.3},{:.3}", self.x(p.0), self.y(p.1));
        }
        let _ =
            writeln!(self.body, r#"<polyline points="{s}" fill="none" stroke="{stroke}" stroke-width="{width:.2}"/>"#);
    }

    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{stroke}" stroke-width="{width:.2}"/>"#,
            self.x(a.0),
            self.y(a.1),
            self.x(b.0),
            self.y(b.1)
        );
    }

    pub fn circle(&mut self, c: (f64, f64), r_px: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.3}" cy="{:.3}" r="{r_px:.2}" fill="{fill}"/>"#,
            self.x(c.0),
            self.y(c.1)
        );
    }

    pub fn text(&mut self, at: (f64, f64), size: f64, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.3}" y="{:.3}" font-size="{size:.1}" font-family="sans-serif">{}</text>"#,
            self.x(at.0),
            self.y(at.1),
            esc(s)
        );
    }

    /// Obstacle pixels of a bitmap, merged into horizontal runs.
    pub fn bitmap(&mut self, o: &BitmapOracle<f64>, fill: &str) {
        let map = o.map();
        let mpp = o.meters_per_pixel();
        for row in 0..map.height {
            let mut col = 0;
            while col < map.width {
                if !o.is_obstacle_pixel(col, row) {
                    col += 1;
                    continue;
                }
                let start = col;
                while col < map.width && o.is_obstacle_pixel(col, row) {
                    col += 1;
                }
                let c0 = o.pixel_center(start, row);
                let (x0, y0) = (c0[0] - 0.5 * mpp, c0[1] - 0.5 * mpp);
                self.rect(x0, y0, x0 + (col - start) as f64 * mpp, y0 + mpp, fill);
            }
        }
    }

    pub fn finish(self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.3} {:.3}">"#,
            self.width, self.height, self.width, self.height
        );
        let _ =
            writeln!(out, r#"<rect x="0" y="0" width="{:.3}" height="{:.3}" fill="white"/>"#, self.width, self.height);
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

/// Line chart of one or more series over a shared x axis. The y axis is
/// logarithmic when `log_y` is set (non-positive values are dropped).
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(&str, &str, Vec<(f64, f64)>)],
    log_y: bool,
) -> String {
    let (w, h, m) = (640.0, 400.0, 50.0);
    let mut c = Canvas::chart(w, h);
    let tf = |v: f64| if log_y { v.log10() } else { v };
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.2.iter().copied())
        .filter(|p| !log_y || p.1 > 0.0)
        .map(|p| (p.0, tf(p.1)))
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (0.0f64, 1.0f64, 0.0f64, 1.0f64);
    if !pts.is_empty() {
        x0 = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        x1 = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        y0 = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        y1 = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| m + (y - y0) / (y1 - y0) * (h - 2.0 * m);
    c.line((m, m), (w - m, m), "black", 1.0);
    c.line((m, m), (m, h - m), "black", 1.0);
    c.text((m, h - 20.0), 16.0, title);
    c.text((w / 2.0, 15.0), 12.0, x_label);
    c.text((5.0, h / 2.0), 12.0, y_label);
    let lab = |v: f64| if log_y { format!("1e{v:.1}") } else { format!("{v:.3}") };
    c.text((m, m - 15.0), 10.0, &format!("{x0:.0}"));
    c.text((w - m, m - 15.0), 10.0, &format!("{x1:.0}"));
    c.text((5.0, m), 10.0, &lab(y0));
    c.text((5.0, h - m), 10.0, &lab(y1));
    for (k, (name, colour, data)) in series.iter().enumerate() {
        let line: Vec<(f64, f64)> = data
            .iter()
            .filter(|p| !log_y || p.1 > 0.0)
            .map(|p| (px(p.0), py(tf(p.1))))
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .collect();
        c.polyline(&line, colour, 1.5);
        c.text((w - 160.0, h - 20.0 - 14.0 * k as f64), 11.0, name);
        c.line((w - 180.0, h - 24.0 - 14.0 * k as f64), (w - 165.0, h - 24.0 - 14.0 * k as f64), colour, 2.0);
    }
    c.finish()
}
