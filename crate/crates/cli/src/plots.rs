//! Minimal SVG rendering for scatter plots, heatmaps, curves and boxplots.

use std::fmt::Write as _;
use std::path::Path;

use minlgan::BoxStats;

use crate::error::Result;
use crate::tsv::write_atomic;

const PANEL: f64 = 360.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Axis-aligned data window mapped onto one panel.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Frame {
    pub fn unit() -> Self {
        Frame { x: [0.0, 1.0], y: [0.0, 1.0] }
    }

    /// Smallest frame holding every point, padded by 5% per side.
    pub fn fit<'a>(points: impl IntoIterator<Item = &'a (f64, f64)>) -> Self {
        let mut f = Frame {
            x: [f64::INFINITY, f64::NEG_INFINITY],
            y: [f64::INFINITY, f64::NEG_INFINITY],
        };
        for &(x, y) in points {
            if x.is_finite() && y.is_finite() {
                f.x = [f.x[0].min(x), f.x[1].max(x)];
                f.y = [f.y[0].min(y), f.y[1].max(y)];
            }
        }
        if !f.x[0].is_finite() {
            return Frame::unit();
        }
        let pad = |r: [f64; 2]| {
            let w = (r[1] - r[0]).max(1e-9) * 0.05;
            [r[0] - w, r[1] + w]
        };
        Frame { x: pad(f.x), y: pad(f.y) }
    }
}

/// A row of equally sized panels rendered into one SVG document.
pub struct Canvas {
    panels: usize,
    body: String,
    title: String,
}

impl Canvas {
    pub fn new(panels: usize, title: &str) -> Self {
        Canvas {
            panels: panels.max(1),
            body: String::new(),
            title: title.to_string(),
        }
    }

    pub fn panel(&mut self, index: usize, frame: Frame, title: &str) -> Panel<'_> {
        let ox = MARGIN + index as f64 * (PANEL + 2.0 * MARGIN);
        let oy = MARGIN;
        let mut p = Panel { canvas: self, ox, oy, frame };
        p.axes(title);
        p
    }

    pub fn render(&self) -> String {
        let w = self.panels as f64 * (PANEL + 2.0 * MARGIN);
        let h = PANEL + 2.0 * MARGIN + 20.0;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"11\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
             <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n{}</svg>\n",
            w / 2.0,
            escape(&self.title),
            self.body
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

pub struct Panel<'a> {
    canvas: &'a mut Canvas,
    ox: f64,
    oy: f64,
    frame: Frame,
}

impl Panel<'_> {
    fn px(&self, x: f64) -> f64 {
        let [a, b] = self.frame.x;
        self.ox + (x - a) / (b - a) * PANEL
    }

    fn py(&self, y: f64) -> f64 {
        let [a, b] = self.frame.y;
        self.oy + PANEL - (y - a) / (b - a) * PANEL
    }

    fn axes(&mut self, title: &str) {
        let (ox, oy) = (self.ox, self.oy);
        let b = &mut self.canvas.body;
        let _ = writeln!(b, "<rect x=\"{ox}\" y=\"{oy}\" width=\"{PANEL}\" height=\"{PANEL}\" fill=\"none\" stroke=\"black\"/>");
        let _ = writeln!(
            b,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            ox + PANEL / 2.0,
            oy + PANEL + 34.0,
            escape(title)
        );
        for t in 0..=4 {
            let f = t as f64 / 4.0;
            let xv = self.frame.x[0] + f * (self.frame.x[1] - self.frame.x[0]);
            let yv = self.frame.y[0] + f * (self.frame.y[1] - self.frame.y[0]);
            let (x, y) = (self.px(xv), self.py(yv));
            let (xs, ys) = (self.frame.x[1] - self.frame.x[0], self.frame.y[1] - self.frame.y[0]);
            let b = &mut self.canvas.body;
            let _ = writeln!(b, "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", oy + PANEL + 14.0, tick(xv, xs));
            let _ = writeln!(b, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>", ox - 4.0, y + 4.0, tick(yv, ys));
        }
    }

    pub fn points(&mut self, pts: &[(f64, f64)], color: &str, radius: f64) {
        for &(x, y) in pts {
            let (cx, cy) = (self.px(x), self.py(y));
            let _ = writeln!(
                self.canvas.body,
                "<circle cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"{radius}\" fill=\"{color}\" fill-opacity=\"0.6\"/>"
            );
        }
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, dashed: bool) {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", self.px(x), self.py(y))).collect();
        let dash = if dashed { " stroke-dasharray=\"4 3\"" } else { "" };
        let _ = writeln!(
            self.canvas.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>",
            coords.join(" ")
        );
    }

    /// Vertical error bars of half-length `err` around each point.
    pub fn error_bars(&mut self, pts: &[(f64, f64, f64)], color: &str) {
        for &(x, y, err) in pts {
            let (cx, lo, hi) = (self.px(x), self.py(y - err), self.py(y + err));
            let _ = writeln!(
                self.canvas.body,
                "<line x1=\"{cx:.1}\" y1=\"{lo:.1}\" x2=\"{cx:.1}\" y2=\"{hi:.1}\" stroke=\"{color}\"/>"
            );
        }
    }

    /// Grid of `values[row][col]` over the frame, row 0 at the bottom,
    /// colored on a blue-white-red scale centred at zero.
    pub fn heatmap(&mut self, values: &[Vec<f64>]) {
        let rows = values.len();
        let Some(cols) = values.first().map(Vec::len) else { return };
        let scale = values
            .iter()
            .flatten()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-12);
        let (w, h) = (PANEL / cols as f64, PANEL / rows as f64);
        for (r, row) in values.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let x = self.ox + c as f64 * w;
                let y = self.oy + PANEL - (r + 1) as f64 * h;
                let _ = writeln!(
                    self.canvas.body,
                    "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                    w + 0.3,
                    h + 0.3,
                    diverging(v / scale)
                );
            }
        }
    }

    /// One box per entry, placed at x = 1, 2, ...; the frame should span
    /// `[0.5, n + 0.5]` horizontally.
    pub fn boxes(&mut self, stats: &[(String, BoxStats)]) {
        for (i, (name, s)) in stats.iter().enumerate() {
            let x = (i + 1) as f64;
            let (l, r, m) = (self.px(x - 0.3), self.px(x + 0.3), self.px(x));
            let (q1, q3, med, lo, hi) = (self.py(s.q1), self.py(s.q3), self.py(s.median), self.py(s.min), self.py(s.max));
            let c = color(i);
            let b = &mut self.canvas.body;
            let _ = writeln!(b, "<line x1=\"{m:.1}\" y1=\"{lo:.1}\" x2=\"{m:.1}\" y2=\"{hi:.1}\" stroke=\"{c}\"/>");
            let _ = writeln!(
                b,
                "<rect x=\"{l:.1}\" y=\"{q3:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"white\" stroke=\"{c}\"/>",
                r - l,
                (q1 - q3).max(0.5)
            );
            let _ = writeln!(b, "<line x1=\"{l:.1}\" y1=\"{med:.1}\" x2=\"{r:.1}\" y2=\"{med:.1}\" stroke=\"black\" stroke-width=\"2\"/>");
            let _ = writeln!(
                b,
                "<text x=\"{m:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"9\">{}</text>",
                self.oy + PANEL + 24.0,
                escape(name)
            );
        }
    }

    pub fn legend(&mut self, entries: &[(&str, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = self.oy + 14.0 + 14.0 * i as f64;
            let x = self.ox + 8.0;
            let b = &mut self.canvas.body;
            let _ = writeln!(b, "<rect x=\"{x}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{color}\"/>", y - 9.0);
            let _ = writeln!(b, "<text x=\"{:.1}\" y=\"{y:.1}\">{}</text>", x + 14.0, escape(label));
        }
    }
}

/// Tick label with enough decimals to tell neighbouring ticks (a quarter of
/// `span` apart) from each other.
fn tick(v: f64, span: f64) -> String {
    if v.abs() >= 1e5 || span <= 0.0 || !span.is_finite() {
        return format!("{v:.2e}");
    }
    let decimals = (-(span / 4.0).log10()).ceil().clamp(0.0, 8.0) as usize + 1;
    format!("{v:.decimals$}")
}

fn diverging(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_document() {
        let mut c = Canvas::new(2, "a <b> & c");
        let mut p = c.panel(0, Frame::unit(), "roc");
        p.polyline(&[(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)], color(0), false);
        p.legend(&[("x", color(0))]);
        let mut p = c.panel(1, Frame { x: [-1.0, 1.0], y: [-1.0, 1.0] }, "map");
        p.heatmap(&[vec![-1.0, 0.0], vec![0.5, 2.0]]);
        let svg = c.render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt;b&gt; &amp; c"));
        assert_eq!(svg.matches("<rect x=").count(), 2 + 4 + 1);
    }

    #[test]
    fn ticks_resolve_narrow_ranges() {
        assert_eq!(tick(0.9475, 0.02), "0.9475");
        assert_eq!(tick(0.5, 1.0), "0.50");
        assert_eq!(tick(-1.5, 3.0), "-1.50");
    }

    #[test]
    fn diverging_scale_endpoints() {
        assert_eq!(diverging(1.0), "#ff0000");
        assert_eq!(diverging(-1.0), "#0000ff");
        assert_eq!(diverging(0.0), "#ffffff");
    }

    #[test]
    fn fit_ignores_non_finite_points() {
        let f = Frame::fit(&[(0.0, 0.0), (1.0, 2.0), (f64::NAN, 5.0)]);
        assert!(f.x[0] < 0.0 && f.x[1] > 1.0 && f.y[1] < 2.2);
    }
}
