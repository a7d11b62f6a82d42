//! SVG rendering of one page with regions and keys drawn as colored boxes.

use std::fmt::Write;

use crate::geometry::BBox;
use crate::pagegraph::PageGraph;
use crate::pipeline::RefsFile;

pub const REGION_COLOR: &str = "#e6c700";
pub const EXPLICIT_COLOR: &str = "#1a9c1a";
pub const IMPLICIT_COLOR: &str = "#d62020";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn rect(svg: &mut String, b: &BBox, color: &str, width: f64) {
    let _ = writeln!(
        svg,
        r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
        b.x0,
        b.y0,
        b.width(),
        b.height()
    );
}

/// Page text in grey, regions in yellow, explicit keys in green and the
/// sources of resolved links (implicit keys) in red. `None` if the page
/// does not exist.
pub fn render_page(doc: &PageGraph, refs: &RefsFile, page: usize) -> Option<String> {
    let p = doc.pages.get(page)?;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.3}" height="{h:.3}" viewBox="0 0 {w:.3} {h:.3}">"#,
        w = p.width,
        h = p.height
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for r in &p.runs {
        let _ = writeln!(
            svg,
            r##"<text x="{:.3}" y="{:.3}" font-size="{:.3}" font-family="serif" fill="#888">{}</text>"##,
            r.bbox.x0,
            r.baseline_y,
            r.font_size,
            escape(&r.text)
        );
    }
    for r in refs.regions.iter().filter(|r| r.page == page) {
        rect(&mut svg, &r.bbox, REGION_COLOR, 1.5);
    }
    for k in refs.explicit_key_boxes.iter().filter(|k| k.page == page) {
        rect(&mut svg, &k.bbox, EXPLICIT_COLOR, 1.0);
    }
    for r in refs.resolved.iter().filter(|r| r.link.source_page == page) {
        rect(&mut svg, &r.link.source_rect, IMPLICIT_COLOR, 1.0);
    }
    svg.push_str("</svg>\n");
    Some(svg)
}
