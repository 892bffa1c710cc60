//! CSV tables, JSON reports and SVG figures. All output is a pure function
//! of its input, so identical runs produce identical bytes.

use num_complex::Complex64;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectra::PseudospectrumGrid;
use crate::walk::Autocorrelation;

/// A numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.headers.len() {
            return Err(Error::InvalidSize(format!("row of {} values for {} columns", row.len(), self.headers.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn points(points: &[Complex64]) -> Self {
        let mut t = Self::new(&["re", "im"]);
        t.rows = points.iter().map(|z| vec![z.re, z.im]).collect();
        t
    }

    pub fn pseudospectrum(grid: &PseudospectrumGrid) -> Self {
        let mut t = Self::new(&["re", "im", "sigma_min"]);
        t.rows = grid.nodes().map(|(ix, iy, z)| vec![z.re, z.im, grid.value(ix, iy)]).collect();
        t
    }

    pub fn autocorrelation(ac: &Autocorrelation) -> Self {
        let mut t = Self::new(&["n", "re", "im", "abs"]);
        t.rows = ac.values.iter().enumerate().map(|(n, z)| vec![n as f64, z.re, z.im, z.norm()]).collect();
        t
    }

    pub fn segments(segments: &[(Complex64, Complex64)]) -> Self {
        let mut t = Self::new(&["x1", "y1", "x2", "y2"]);
        t.rows = segments.iter().map(|(a, b)| vec![a.re, a.im, b.re, b.im]).collect();
        t
    }

    /// Floats are written in their shortest round-trip form.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format!("{x:?}"))).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let headers = r.headers().map_err(csv_error)?.iter().map(String::from).collect::<Vec<_>>();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_error)?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != headers.len() {
                return Err(Error::Parse(format!("row of {} fields for {} columns", row.len(), headers.len())));
            }
            rows.push(row);
        }
        Ok(Self { headers, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Axis-aligned window of the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Window {
    pub fn square(half_width: f64) -> Self {
        Self { re: (-half_width, half_width), im: (-half_width, half_width) }
    }

    fn at(&self, fx: f64, fy: f64) -> Complex64 {
        Complex64::new(self.re.0 + fx * (self.re.1 - self.re.0), self.im.0 + fy * (self.im.1 - self.im.0))
    }
}

fn bisect_edge(f: &impl Fn(Complex64) -> bool, mut a: Complex64, mut b: Complex64) -> Complex64 {
    let fa = f(a);
    for _ in 0..30 {
        let m = 0.5 * (a + b);
        if f(m) == fa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Boundary of `{z : f(z)}` inside the window as line segments, by marching
/// squares on an `n x n` cell grid with crossings refined by bisection.
pub fn boundary_segments(f: impl Fn(Complex64) -> bool, window: Window, n: usize) -> Vec<(Complex64, Complex64)> {
    let node = |i: usize, j: usize| window.at(i as f64 / n as f64, j as f64 / n as f64);
    let inside: Vec<Vec<bool>> = (0..=n).map(|j| (0..=n).map(|i| f(node(i, j))).collect()).collect();
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let mut hits = Vec::with_capacity(4);
            for k in 0..4 {
                let (p, q) = (corners[k], corners[(k + 1) % 4]);
                if inside[p.1][p.0] != inside[q.1][q.0] {
                    hits.push(bisect_edge(&f, node(p.0, p.1), node(q.0, q.1)));
                }
            }
            for pair in hits.chunks_exact(2) {
                out.push((pair[0], pair[1]));
            }
        }
    }
    out
}

/// Minimal SVG writer for complex-plane figures.
#[derive(Debug, Clone)]
pub struct Svg {
    pub size: usize,
    pub window: Window,
    body: Vec<String>,
}

impl Svg {
    pub fn new(window: Window, size: usize) -> Self {
        Self { size, window, body: Vec::new() }
    }

    fn px(&self, z: Complex64) -> (f64, f64) {
        let s = self.size as f64;
        let x = (z.re - self.window.re.0) / (self.window.re.1 - self.window.re.0) * s;
        let y = (self.window.im.1 - z.im) / (self.window.im.1 - self.window.im.0) * s;
        (x, y)
    }

    fn scale(&self) -> f64 {
        self.size as f64 / (self.window.re.1 - self.window.re.0)
    }

    pub fn axes(&mut self) -> &mut Self {
        let (x0, y0) = self.px(Complex64::new(0.0, 0.0));
        let s = self.size;
        self.body.push(format!(
            r##"<path d="M0 {y0:.2}H{s}M{x0:.2} 0V{s}" stroke="#999" stroke-width="0.5" fill="none"/>"##
        ));
        self
    }

    pub fn circle(&mut self, center: Complex64, radius: f64, color: &str) -> &mut Self {
        let (x, y) = self.px(center);
        let r = radius * self.scale();
        self.body.push(format!(
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" stroke="{color}" stroke-width="1.2" fill="none"/>"#
        ));
        self
    }

    pub fn dots(&mut self, points: &[Complex64], radius_px: f64, color: &str) -> &mut Self {
        let mut s = format!(r#"<g fill="{color}">"#);
        for &z in points {
            let (x, y) = self.px(z);
            let _ = write!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{radius_px}"/>"#);
        }
        s.push_str("</g>");
        self.body.push(s);
        self
    }

    pub fn polyline(&mut self, points: &[Complex64], color: &str) -> &mut Self {
        if points.is_empty() {
            return self;
        }
        let mut d = String::new();
        for (k, &z) in points.iter().enumerate() {
            let (x, y) = self.px(z);
            let _ = write!(d, "{}{x:.2} {y:.2}", if k == 0 { "M" } else { "L" });
        }
        self.body.push(format!(r#"<path d="{d}" stroke="{color}" stroke-width="1.2" fill="none"/>"#));
        self
    }

    pub fn segments(&mut self, segments: &[(Complex64, Complex64)], color: &str) -> &mut Self {
        let mut d = String::new();
        for &(a, b) in segments {
            let (xa, ya) = self.px(a);
            let (xb, yb) = self.px(b);
            let _ = write!(d, "M{xa:.2} {ya:.2}L{xb:.2} {yb:.2}");
        }
        self.body.push(format!(r#"<path d="{d}" stroke="{color}" stroke-width="1.2" fill="none"/>"#));
        self
    }

    /// Fills the pixels whose centres satisfy `f`, one rectangle per run.
    pub fn mask(&mut self, f: impl Fn(Complex64) -> bool, resolution: usize, fill: &str, opacity: f64) -> &mut Self {
        let cell = self.size as f64 / resolution as f64;
        let mut s = format!(r#"<g fill="{fill}" fill-opacity="{opacity}">"#);
        for row in 0..resolution {
            let fy = 1.0 - (row as f64 + 0.5) / resolution as f64;
            let mut col = 0;
            while col < resolution {
                let hit = |c: usize| f(self.window.at((c as f64 + 0.5) / resolution as f64, fy));
                if !hit(col) {
                    col += 1;
                    continue;
                }
                let start = col;
                while col < resolution && hit(col) {
                    col += 1;
                }
                let _ = write!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                    start as f64 * cell,
                    row as f64 * cell,
                    (col - start) as f64 * cell,
                    cell
                );
            }
        }
        s.push_str("</g>");
        self.body.push(s);
        self
    }

    /// Indicator layers `sigma_min <= eps` of a pseudospectrum grid, drawn
    /// from the largest level down with increasing opacity.
    pub fn pseudospectrum(&mut self, grid: &PseudospectrumGrid) -> &mut Self {
        let mut levels = grid.spec.epsilons.clone();
        levels.sort_by(|a, b| b.total_cmp(a));
        let (nx, ny) = (grid.spec.nx, grid.spec.ny);
        let hx = (grid.spec.re.1 - grid.spec.re.0) / (nx - 1) as f64;
        let hy = (grid.spec.im.1 - grid.spec.im.0) / (ny - 1) as f64;
        for (k, &eps) in levels.iter().enumerate() {
            let opacity = 0.2 + 0.6 * (k + 1) as f64 / levels.len() as f64;
            let mut s = format!(r##"<g fill="#1f5fbf" fill-opacity="{opacity:.2}">"##);
            for iy in 0..ny {
                for ix in 0..nx {
                    if grid.value(ix, iy) <= eps {
                        let z = grid.spec.node(ix, iy);
                        let (x, y) = self.px(Complex64::new(z.re - 0.5 * hx, z.im + 0.5 * hy));
                        let (w, h) = (hx * self.scale(), hy * self.scale());
                        let _ = write!(s, r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}"/>"#);
                    }
                }
            }
            s.push_str("</g>");
            self.body.push(s);
        }
        self
    }

    pub fn label(&mut self, text: &str) -> &mut Self {
        let escaped = text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        self.body.push(format!(r#"<text x="8" y="18" font-family="monospace" font-size="12">{escaped}</text>"#));
        self
    }

    pub fn render(&self) -> String {
        let s = self.size;
        let mut out = format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">"#
        );
        out.push('\n');
        out.push_str(&format!(r#"<rect width="{s}" height="{s}" fill="white"/>"#));
        out.push('\n');
        for e in &self.body {
            out.push_str(e);
            out.push('\n');
        }
        out.push_str("</svg>\n");
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}
