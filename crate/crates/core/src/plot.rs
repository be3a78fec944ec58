//! Minimal SVG line plots: axes with ticks, polylines, error bars and
//! reference lines. Output is a pure function of the input numbers.

use std::fmt::Write;

const PANEL_W: f64 = 720.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;
const TITLE_H: f64 = 30.0;
const MAX_ERROR_BARS: usize = 60;

const PALETTE: [&str; 6] = ["#1f4e9c", "#c2410c", "#15803d", "#7e22ce", "#a16207", "#0f766e"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Symmetric error bars, drawn on a thinned subset of points.
    pub err: Option<Vec<f64>>,
}

impl Series {
    pub fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            x,
            y,
            err: None,
        }
    }

    pub fn with_err(mut self, err: Vec<f64>) -> Self {
        self.err = Some(err);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefLine {
    pub value: f64,
    pub label: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub hlines: Vec<RefLine>,
    pub vlines: Vec<RefLine>,
}

impl Panel {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Self::default()
        }
    }

    pub fn hline(mut self, value: f64, label: impl Into<String>) -> Self {
        self.hlines.push(RefLine {
            value,
            label: label.into(),
        });
        self
    }

    pub fn vline(mut self, value: f64, label: impl Into<String>) -> Self {
        self.vlines.push(RefLine {
            value,
            label: label.into(),
        });
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick step of 1, 2 or 5 times a power of ten giving about `target` ticks.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let m = raw / mag;
    let nice = if m < 1.5 {
        1.0
    } else if m < 3.5 {
        2.0
    } else if m < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10()).ceil() as usize
    };
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

#[derive(Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Option<Self> {
        let mut r: Option<Range> = None;
        for v in values.filter(|v| v.is_finite()) {
            r = Some(match r {
                None => Range { lo: v, hi: v },
                Some(r) => Range {
                    lo: r.lo.min(v),
                    hi: r.hi.max(v),
                },
            });
        }
        r
    }

    fn padded(self, frac: f64) -> Self {
        let span = self.hi - self.lo;
        if span <= 0.0 {
            let d = if self.lo == 0.0 { 1.0 } else { 0.1 * self.lo.abs() };
            return Range {
                lo: self.lo - d,
                hi: self.hi + d,
            };
        }
        Range {
            lo: self.lo - frac * span,
            hi: self.hi + frac * span,
        }
    }
}

fn render_panel(svg: &mut String, panel: &Panel, top: f64) {
    let x0 = MARGIN_L;
    let x1 = PANEL_W - MARGIN_R;
    let y0 = top + MARGIN_T;
    let y1 = top + PANEL_H - MARGIN_B;
    let xr = Range::of(
        panel
            .series
            .iter()
            .flat_map(|s| s.x.iter().copied())
            .chain(panel.vlines.iter().map(|l| l.value)),
    )
    .unwrap_or(Range { lo: 0.0, hi: 1.0 })
    .padded(0.0);
    let yr = Range::of(
        panel
            .series
            .iter()
            .flat_map(|s| {
                let err = s.err.clone().unwrap_or_else(|| vec![0.0; s.y.len()]);
                s.y.iter()
                    .zip(err)
                    .flat_map(|(&y, e)| [y - e.abs(), y + e.abs()])
                    .collect::<Vec<_>>()
            })
            .chain(panel.hlines.iter().map(|l| l.value)),
    )
    .unwrap_or(Range { lo: 0.0, hi: 1.0 })
    .padded(0.05);
    let xr = if xr.hi > xr.lo { xr } else { xr.padded(0.05) };
    let sx = |x: f64| x0 + (x - xr.lo) / (xr.hi - xr.lo) * (x1 - x0);
    let sy = |y: f64| y1 - (y - yr.lo) / (yr.hi - yr.lo) * (y1 - y0);

    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#,
        0.5 * (x0 + x1),
        top + 22.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333" stroke-width="1"/>"##,
        x1 - x0,
        y1 - y0
    );
    for (range, horizontal) in [(xr, true), (yr, false)] {
        let step = nice_step(range.hi - range.lo, 6.0);
        let mut t = (range.lo / step).ceil() * step;
        while t <= range.hi + 1e-9 * step {
            let label = fmt_tick(t, step);
            if horizontal {
                let x = sx(t);
                let _ = writeln!(
                    svg,
                    r##"<line x1="{x:.2}" y1="{y1:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{label}</text>"##,
                    y1 + 5.0,
                    y1 + 18.0
                );
            } else {
                let y = sy(t);
                let _ = writeln!(
                    svg,
                    r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{label}</text>"##,
                    x0 - 5.0,
                    x0 - 8.0,
                    y + 4.0
                );
            }
            t += step;
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        0.5 * (x0 + x1),
        y1 + 38.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        x0 - 55.0,
        0.5 * (y0 + y1),
        x0 - 55.0,
        0.5 * (y0 + y1),
        escape(&panel.y_label)
    );
    for l in &panel.hlines {
        let y = sy(l.value);
        let _ = writeln!(
            svg,
            r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#888" stroke-dasharray="5,4"/><text x="{:.2}" y="{:.2}" font-size="10" fill="#555">{}</text>"##,
            x0 + 4.0,
            y - 4.0,
            escape(&l.label)
        );
    }
    for l in &panel.vlines {
        let x = sx(l.value);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="#888" stroke-dasharray="5,4"/><text x="{:.2}" y="{:.2}" font-size="10" fill="#555">{}</text>"##,
            x + 4.0,
            y0 + 12.0,
            escape(&l.label)
        );
    }
    for (k, s) in panel.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut segment = String::new();
        let flush = |seg: &mut String, svg: &mut String| {
            if !seg.is_empty() {
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    seg.trim_end()
                );
                seg.clear();
            }
        };
        for (&x, &y) in s.x.iter().zip(&s.y) {
            if x.is_finite() && y.is_finite() {
                let _ = write!(segment, "{:.2},{:.2} ", sx(x), sy(y));
            } else {
                flush(&mut segment, svg);
            }
        }
        flush(&mut segment, svg);
        if let Some(err) = &s.err {
            let stride = s.x.len().div_ceil(MAX_ERROR_BARS).max(1);
            for i in (0..s.x.len().min(err.len())).step_by(stride) {
                let (x, y, e) = (s.x[i], s.y[i], err[i].abs());
                if x.is_finite() && y.is_finite() && e.is_finite() && e > 0.0 {
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}" stroke-width="1"/>"#,
                        sx(x),
                        sy(y - e),
                        sy(y + e)
                    );
                }
            }
        }
        let ly = y0 + 14.0 + 18.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            x1 + 10.0,
            x1 + 30.0,
            x1 + 35.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
}

/// Panels stacked vertically under a common title.
pub fn render(title: &str, panels: &[Panel]) -> String {
    let height = TITLE_H + PANEL_H * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W:.0}" height="{height:.0}" viewBox="0 0 {PANEL_W:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="20" font-size="16" font-weight="bold" text-anchor="middle">{}</text>"#,
        0.5 * PANEL_W,
        escape(title)
    );
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut svg, p, TITLE_H + PANEL_H * i as f64);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks() {
        assert_eq!(nice_step(400.0, 6.0), 50.0);
        assert_eq!(nice_step(1.0, 6.0), 0.2);
        assert_eq!(fmt_tick(-0.0, 0.2), "0.0");
        assert_eq!(fmt_tick(150.0, 50.0), "150");
    }

    #[test]
    fn deterministic_and_skips_nan() {
        let p = Panel::new("a", "x", "y").hline(2.0, "limit");
        let mut p = p;
        p.series
            .push(Series::new("s", vec![0.0, 1.0, 2.0, 3.0], vec![1.0, f64::NAN, 2.0, 3.0]).with_err(vec![0.1; 4]));
        let a = render("t", &[p.clone()]);
        assert_eq!(a, render("t", &[p]));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(!a.contains("NaN"));
    }
}
