//! Minimal self-contained SVG charts: lines with optional ±s.d. bands,
//! bars with error whiskers, and scatters.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Half-width of a shaded band around each point.
    pub band: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub log_y: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BarChart {
    pub title: String,
    pub y_label: String,
    /// `(label, value, error)`.
    pub bars: Vec<(String, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScatterChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw the `y = x` line.
    pub diagonal: bool,
}

/// Round tick positions covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    log_y: bool,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>, log_y: bool) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            it.filter(|v| v.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                    (a.min(v), b.max(v))
                })
        };
        let mut x = span(&mut xs.into_iter());
        let ys: Vec<f64> = ys.map(|v| if log_y { v.log10() } else { v }).collect();
        let mut y = span(&mut ys.into_iter());
        for r in [&mut x, &mut y] {
            if !r.0.is_finite() {
                *r = (0.0, 1.0);
            }
            if r.1 - r.0 < 1e-12 {
                *r = (r.0 - 0.5, r.1 + 0.5);
            }
        }
        let pad = 0.04 * (y.1 - y.0);
        Frame {
            x,
            y: (y.0 - pad, y.1 + pad),
            log_y,
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let y = if self.log_y { y.log10() } else { y };
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, title: &str, x_label: &str, y_label: &str, x_ticks: bool) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = write!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            (x0 + x1) / 2.0,
            escape(title)
        );
        let _ = write!(
            out,
            r##"<path d="M{x0},{y1} V{y0} H{x1}" fill="none" stroke="#333"/>"##
        );
        if x_ticks {
            for t in nice_ticks(self.x.0, self.x.1, 6) {
                let x = self.px(t);
                let _ = write!(
                    out,
                    r##"<line x1="{x}" y1="{y0}" x2="{x}" y2="{}" stroke="#333"/><text x="{x}" y="{}" text-anchor="middle" font-size="11">{}</text>"##,
                    y0 + 5.0,
                    y0 + 18.0,
                    fmt_tick(t)
                );
            }
        }
        for t in nice_ticks(self.y.0, self.y.1, 6) {
            let y =
                HEIGHT - BOTTOM - (t - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM);
            let label = if self.log_y { 10f64.powf(t) } else { t };
            let _ = write!(
                out,
                r##"<line x1="{}" y1="{y}" x2="{x0}" y2="{y}" stroke="#333"/><line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#eee"/><text x="{}" y="{}" text-anchor="end" font-size="11">{}</text>"##,
                x0 - 5.0,
                x0 - 8.0,
                y + 4.0,
                fmt_tick(label)
            );
        }
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            escape(x_label)
        );
        let _ = write!(
            out,
            r#"<text transform="translate(18,{}) rotate(-90)" text-anchor="middle" font-size="12">{}</text>"#,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
    }
}

fn open() -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif"><rect width="100%" height="100%" fill="white"/>"#
    )
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 12.0;
        let _ = write!(
            out,
            r#"<rect x="{x}" y="{}" width="14" height="4" fill="{}"/><text x="{}" y="{}" font-size="11">{}</text>"#,
            y - 2.0,
            color(i),
            x + 20.0,
            y + 4.0,
            escape(name)
        );
    }
}

fn path(points: impl Iterator<Item = (f64, f64)>) -> String {
    let mut d = String::new();
    for (i, (x, y)) in points.enumerate() {
        let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
    }
    d
}

impl LineChart {
    pub fn render(&self) -> String {
        let pts = || self.series.iter().flat_map(|s| s.points.iter().copied());
        let bands = self.series.iter().flat_map(|s| {
            s.points.iter().enumerate().flat_map(move |(i, &(_, y))| {
                let h = s
                    .band
                    .as_ref()
                    .and_then(|b| b.get(i))
                    .copied()
                    .unwrap_or(0.0);
                [y - h, y + h]
            })
        });
        let ys = pts()
            .map(|p| p.1)
            .chain(bands.filter(|v| !self.log_y || *v > 0.0));
        let f = Frame::new(pts().map(|p| p.0), ys, self.log_y);
        let mut out = open();
        f.axes(&mut out, &self.title, &self.x_label, &self.y_label, true);
        for (i, s) in self.series.iter().enumerate() {
            let finite: Vec<(usize, (f64, f64))> = s
                .points
                .iter()
                .copied()
                .enumerate()
                .filter(|(_, (x, y))| x.is_finite() && y.is_finite() && (!self.log_y || *y > 0.0))
                .collect();
            if let Some(band) = &s.band {
                let upper = finite
                    .iter()
                    .map(|&(k, (x, y))| (f.px(x), f.py(y + band.get(k).copied().unwrap_or(0.0))));
                let lower = finite
                    .iter()
                    .rev()
                    .map(|&(k, (x, y))| (f.px(x), f.py(y - band.get(k).copied().unwrap_or(0.0))));
                let d = path(upper.chain(lower));
                let _ = write!(
                    out,
                    r#"<path d="{d}Z" fill="{}" fill-opacity="0.18" stroke="none"/>"#,
                    color(i)
                );
            }
            let d = path(finite.iter().map(|&(_, (x, y))| (f.px(x), f.py(y))));
            let _ = write!(
                out,
                r#"<path d="{d}" fill="none" stroke="{}" stroke-width="2"/>"#,
                color(i)
            );
        }
        let names: Vec<&str> = self.series.iter().map(|s| s.name.as_str()).collect();
        legend(&mut out, &names);
        out.push_str("</svg>\n");
        out
    }
}

impl BarChart {
    pub fn render(&self) -> String {
        let n = self.bars.len().max(1);
        let ys = self
            .bars
            .iter()
            .flat_map(|b| [b.1 - b.2, b.1 + b.2])
            .chain(std::iter::once(0.0));
        let f = Frame::new([0.0, n as f64].into_iter(), ys, false);
        let mut out = open();
        f.axes(&mut out, &self.title, "", &self.y_label, false);
        let slot = (WIDTH - LEFT - RIGHT) / n as f64;
        for (i, (label, v, e)) in self.bars.iter().enumerate() {
            let x = LEFT + slot * (i as f64 + 0.15);
            let w = slot * 0.7;
            let (top, base) = (f.py(v.max(0.0)), f.py(v.min(0.0)));
            let _ = write!(
                out,
                r#"<rect x="{x:.2}" y="{top:.2}" width="{w:.2}" height="{:.2}" fill="{}"/>"#,
                (base - top).max(0.0),
                color(i)
            );
            let cx = x + w / 2.0;
            let _ = write!(
                out,
                r##"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="#000"/>"##,
                f.py(v - e),
                f.py(v + e)
            );
            let _ = write!(
                out,
                r#"<text x="{cx:.2}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
                HEIGHT - BOTTOM + 16.0,
                escape(label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

impl ScatterChart {
    pub fn render(&self) -> String {
        let xs = self.points.iter().map(|p| p.0);
        let ys = self.points.iter().map(|p| p.1);
        let f = if self.diagonal {
            Frame::new(xs.clone().chain(ys.clone()), ys.chain(xs), false)
        } else {
            Frame::new(xs, ys, false)
        };
        let mut out = open();
        f.axes(&mut out, &self.title, &self.x_label, &self.y_label, true);
        if self.diagonal {
            let (a, b) = (f.x.0.max(f.y.0), f.x.1.min(f.y.1));
            let _ = write!(
                out,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
                f.px(a),
                f.py(a),
                f.px(b),
                f.py(b)
            );
        }
        for &(x, y) in self
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
        {
            let _ = write!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="{}" fill-opacity="0.6"/>"#,
                f.px(x),
                f.py(y),
                color(0)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}
