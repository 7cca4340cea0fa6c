use std::fmt::Write;

use super::{GeometryError, Layout2D};
use crate::molgraph::Element;
use crate::MolecularGraph;

const SCALE: f64 = 50.0;
const MARGIN: f64 = 0.1;
const MIN_SPAN: f64 = 1.0;
const ATOM_RADIUS: f64 = 10.0;
const HIGHLIGHT_RADIUS: f64 = 14.0;
const LINE_GAP: f64 = 4.0;
const TILE: f64 = 200.0;
const LABEL_HEIGHT: f64 = 20.0;

fn color(e: Element) -> &'static str {
    match e {
        Element::C => "#808080",
        Element::N => "#3050F8",
        Element::O => "#FF0D0D",
        Element::F => "#50B020",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Body of a depiction plus its canvas size in pixels.
fn draw(graph: &MolecularGraph, layout: &Layout2D, highlight: &[usize]) -> Result<(f64, f64, String), GeometryError> {
    let n = graph.atom_count();
    if layout.coords.len() != n {
        return Err(GeometryError::LengthMismatch { expected: n, got: layout.coords.len() });
    }
    if let Some(&bad) = highlight.iter().find(|&&h| h >= n) {
        return Err(GeometryError::HighlightOutOfRange(bad));
    }
    let (mut lo, mut hi) = ([0.0f64; 2], [0.0f64; 2]);
    if n > 0 {
        lo = [f64::INFINITY; 2];
        hi = [f64::NEG_INFINITY; 2];
        for p in &layout.coords {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
    }
    let span = [(hi[0] - lo[0]).max(MIN_SPAN), (hi[1] - lo[1]).max(MIN_SPAN)];
    // centre short axes inside the minimum span
    let offset = [(span[0] - (hi[0] - lo[0])) / 2.0, (span[1] - (hi[1] - lo[1])) / 2.0];
    let width = span[0] * (1.0 + 2.0 * MARGIN) * SCALE;
    let height = span[1] * (1.0 + 2.0 * MARGIN) * SCALE;
    let px = |p: [f64; 2]| {
        ((p[0] - lo[0] + offset[0] + MARGIN * span[0]) * SCALE, (hi[1] - p[1] + offset[1] + MARGIN * span[1]) * SCALE)
    };

    let mut body = String::new();
    for b in graph.bonds() {
        let (x1, y1) = px(layout.coords[b.i]);
        let (x2, y2) = px(layout.coords[b.j]);
        let len = ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt().max(1e-9);
        let (nx, ny) = (-(y2 - y1) / len, (x2 - x1) / len);
        let k = b.order.value() as usize;
        for line in 0..k {
            let o = (line as f64 - (k as f64 - 1.0) / 2.0) * LINE_GAP;
            let _ = writeln!(
                body,
                r##"<line class="bond" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333" stroke-width="2"/>"##,
                x1 + o * nx,
                y1 + o * ny,
                x2 + o * nx,
                y2 + o * ny
            );
        }
    }
    for (i, &e) in graph.atoms().iter().enumerate() {
        let (x, y) = px(layout.coords[i]);
        let _ = writeln!(
            body,
            r##"<circle class="atom" cx="{x:.2}" cy="{y:.2}" r="{ATOM_RADIUS}" fill="{}" stroke="#333333"/>"##,
            color(e)
        );
        let _ = writeln!(
            body,
            r##"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" fill="#FFFFFF">{}</text>"##,
            y + 4.0,
            e.symbol()
        );
    }
    let mut marked: Vec<usize> = highlight.to_vec();
    marked.sort_unstable();
    marked.dedup();
    for i in marked {
        let (x, y) = px(layout.coords[i]);
        let _ = writeln!(
            body,
            r##"<circle class="highlight" cx="{x:.2}" cy="{y:.2}" r="{HIGHLIGHT_RADIUS}" fill="none" stroke="#FFB000" stroke-width="3"/>"##
        );
    }
    Ok((width, height, body))
}

/// Standalone SVG depiction. Bonds are drawn first with one, two or three
/// parallel lines by order, then atoms coloured by element, then a ring
/// outline around each highlighted atom.
pub fn render_svg(graph: &MolecularGraph, layout: &Layout2D, highlight: &[usize]) -> Result<String, GeometryError> {
    let (w, h, body) = draw(graph, layout, highlight)?;
    Ok(format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.2}\" height=\"{h:.2}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"#FFFFFF\"/>\n{body}</svg>\n"
    ))
}

pub struct PanelCell<'a> {
    pub graph: &'a MolecularGraph,
    pub layout: Option<Layout2D>,
    pub label: String,
    pub highlight: Vec<usize>,
}

/// Rows of fixed-size tiles, each a scaled depiction with a caption.
/// Cells without a layout (empty molecules) get a caption only.
pub fn render_panel_svg(rows: &[Vec<PanelCell<'_>>]) -> Result<String, GeometryError> {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let width = cols as f64 * TILE;
    let height = rows.len() as f64 * (TILE + LABEL_HEIGHT);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#FFFFFF"/>"##);
    for (r, row) in rows.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            let (x, y) = (c as f64 * TILE, r as f64 * (TILE + LABEL_HEIGHT));
            let _ = writeln!(out, r#"<g transform="translate({x:.0},{y:.0})">"#);
            if let Some(layout) = &cell.layout {
                let (w, h, body) = draw(cell.graph, layout, &cell.highlight)?;
                let _ = write!(
                    out,
                    "<svg width=\"{TILE:.0}\" height=\"{TILE:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\" preserveAspectRatio=\"xMidYMid meet\">\n{body}</svg>\n"
                );
            }
            let _ = writeln!(
                out,
                r##"<text x="{:.0}" y="{:.0}" font-family="monospace" font-size="11" text-anchor="middle" fill="#000000">{}</text>"##,
                TILE / 2.0,
                TILE + LABEL_HEIGHT * 0.7,
                escape(&cell.label)
            );
            let _ = writeln!(out, "</g>");
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
