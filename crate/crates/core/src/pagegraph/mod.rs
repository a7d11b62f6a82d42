//! Geometric document model: pages, positioned text runs and link annotations.
//!
//! A [`PageGraph`] is produced either by [`ingest_pdf`] or by loading the
//! canonical JSON form with [`load_pagegraph_json`]. After the annotation passes
//! ([`reading_order`], [`mark_superscripts`]) it is treated as immutable.
//!
//! Within a page, `runs` is kept sorted by `reading_index`, so
//! `page.runs[i].reading_index == i` once reading order has been assigned.

mod order;
mod pdf;
mod superscript;

use serde::{Deserialize, Serialize};

use crate::error::PageGraphError;
use crate::geometry::{ser_round3, BBox, Point};

pub use order::{detect_gutter, reading_order, Gutter, OrderConfig};
pub use pdf::{ingest_pdf, ingest_pdf_bytes};
pub use superscript::{mark_superscripts, SuperscriptConfig};
pub(crate) use order::modal_font_size;
pub(crate) use superscript::dominant as superscript_dominant;

/// Slack allowed between a run box and its page's media box.
pub const MEDIA_BOX_SLACK: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Units {
    #[default]
    #[serde(rename = "pt")]
    Pt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageGraph {
    pub source_id: String,
    pub units: Units,
    pub pages: Vec<Page>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Page {
    pub index: usize,
    #[serde(serialize_with = "ser_round3")]
    pub width: f64,
    #[serde(serialize_with = "ser_round3")]
    pub height: f64,
    pub runs: Vec<TextRun>,
    pub links: Vec<LinkAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextRun {
    pub text: String,
    pub bbox: BBox,
    #[serde(serialize_with = "ser_round3")]
    pub font_size: f64,
    #[serde(serialize_with = "ser_round3")]
    pub baseline_y: f64,
    pub reading_index: usize,
    #[serde(default)]
    pub superscript: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Internal,
    External,
}

/// An embedded link. External links carry `target_page == source_page` and a
/// zero target point, since they have no in-document destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkAnnotation {
    pub source_page: usize,
    pub source_rect: BBox,
    pub target_page: usize,
    pub target_point: Point,
    pub kind: LinkKind,
}

/// Position of a run: page index and reading index on that page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunRef {
    pub page: usize,
    pub reading_index: usize,
}

impl PageGraph {
    pub fn new(source_id: impl Into<String>, pages: Vec<Page>) -> Self {
        PageGraph {
            source_id: source_id.into(),
            units: Units::Pt,
            pages,
        }
    }

    pub fn run(&self, r: RunRef) -> Option<&TextRun> {
        self.pages.get(r.page)?.run(r.reading_index)
    }

    pub fn run_count(&self) -> usize {
        self.pages.iter().map(|p| p.runs.len()).sum()
    }

    /// Runs every annotation pass: reading order, then superscript flags.
    pub fn annotate_passes(&mut self) {
        for page in &mut self.pages {
            reading_order(page, &OrderConfig::default());
            mark_superscripts(page, &SuperscriptConfig::default());
        }
    }

    /// Canonical JSON bytes (fixed key order, 3-decimal numbers).
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let sorted;
        let graph = if self.pages.iter().all(Page::runs_sorted) {
            self
        } else {
            let mut g = self.clone();
            for p in &mut g.pages {
                p.runs.sort_by_key(|r| r.reading_index);
            }
            sorted = g;
            &sorted
        };
        let mut out = serde_json::to_vec(graph).expect("page graph serializes");
        out.push(b'\n');
        out
    }
}

impl Page {
    pub fn new(index: usize, width: f64, height: f64) -> Self {
        Page {
            index,
            width,
            height,
            runs: Vec::new(),
            links: Vec::new(),
        }
    }

    pub fn media_box(&self) -> BBox {
        BBox {
            x0: 0.0,
            y0: 0.0,
            x1: self.width,
            y1: self.height,
        }
    }

    /// Run with the given reading index.
    pub fn run(&self, reading_index: usize) -> Option<&TextRun> {
        match self.runs.get(reading_index) {
            Some(r) if r.reading_index == reading_index => Some(r),
            _ => self.runs.iter().find(|r| r.reading_index == reading_index),
        }
    }

    fn runs_sorted(&self) -> bool {
        self.runs.windows(2).all(|w| w[0].reading_index < w[1].reading_index)
    }
}

impl TextRun {
    pub fn new(text: impl Into<String>, bbox: BBox, font_size: f64, baseline_y: f64) -> Self {
        TextRun {
            text: text.into(),
            bbox,
            font_size,
            baseline_y,
            reading_index: 0,
            superscript: false,
        }
    }
}

/// Parses and validates canonical PageGraph JSON.
pub fn load_pagegraph_json(bytes: &[u8]) -> Result<PageGraph, PageGraphError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let mut graph: PageGraph =
        serde_path_to_error::deserialize(de).map_err(|e| PageGraphError::SchemaViolation {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    validate(&graph)?;
    for p in &mut graph.pages {
        p.runs.sort_by_key(|r| r.reading_index);
    }
    Ok(graph)
}

fn violation(path: String, message: impl Into<String>) -> PageGraphError {
    PageGraphError::SchemaViolation {
        path,
        message: message.into(),
    }
}

/// Checks every structural invariant of a [`PageGraph`].
pub fn validate(graph: &PageGraph) -> Result<(), PageGraphError> {
    let n_pages = graph.pages.len();
    for (i, page) in graph.pages.iter().enumerate() {
        let at = format!("pages[{i}]");
        if page.index != i {
            return Err(violation(
                format!("{at}.index"),
                format!("page indices must be contiguous from 0, expected {i}, found {}", page.index),
            ));
        }
        if !(page.width.is_finite() && page.width > 0.0) {
            return Err(violation(format!("{at}.width"), "width must be > 0"));
        }
        if !(page.height.is_finite() && page.height > 0.0) {
            return Err(violation(format!("{at}.height"), "height must be > 0"));
        }
        let mut seen = vec![false; page.runs.len()];
        for (j, run) in page.runs.iter().enumerate() {
            let at = format!("{at}.runs[{j}]");
            if run.text.is_empty() {
                return Err(violation(format!("{at}.text"), "text must be non-empty"));
            }
            if run.text.contains(['\n', '\r']) {
                return Err(violation(format!("{at}.text"), "text must not contain line breaks"));
            }
            if !run.bbox.is_valid() {
                return Err(violation(format!("{at}.bbox"), "box needs x0 < x1 and y0 < y1"));
            }
            let b = run.bbox;
            let s = MEDIA_BOX_SLACK;
            if b.x0 < -s || b.y0 < -s || b.x1 > page.width + s || b.y1 > page.height + s {
                return Err(violation(format!("{at}.bbox"), "box lies outside the page media box"));
            }
            if !(run.font_size.is_finite() && run.font_size > 0.0) {
                return Err(violation(format!("{at}.font_size"), "font_size must be > 0"));
            }
            if !run.baseline_y.is_finite() {
                return Err(violation(format!("{at}.baseline_y"), "baseline_y must be finite"));
            }
            match seen.get_mut(run.reading_index) {
                Some(slot) if !*slot => *slot = true,
                _ => {
                    return Err(violation(
                        format!("{at}.reading_index"),
                        "reading indices must be a permutation of 0..n",
                    ))
                }
            }
        }
        for (j, link) in page.links.iter().enumerate() {
            let at = format!("{at}.links[{j}]");
            if link.source_page != i {
                return Err(violation(format!("{at}.source_page"), "must equal the containing page index"));
            }
            if !link.source_rect.is_valid() {
                return Err(violation(format!("{at}.source_rect"), "box needs x0 < x1 and y0 < y1"));
            }
            if link.kind == LinkKind::Internal && link.target_page >= n_pages {
                return Err(violation(
                    format!("{at}.target_page"),
                    format!("internal link targets page {} of {n_pages}", link.target_page),
                ));
            }
            if !(link.target_point.x.is_finite() && link.target_point.y.is_finite()) {
                return Err(violation(format!("{at}.target_point"), "must be finite"));
            }
        }
    }
    Ok(())
}
