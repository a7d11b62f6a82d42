//! Explicit keys: bibliography items, caption keys, equation tags and
//! footnote markers.

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::RefItemsError;
use crate::geometry::BBox;
use crate::layout::{equation_tag, group_lines, LayoutConfig, Region, RegionCategory};
use crate::pagegraph::{superscript_dominant, PageGraph, RunRef, TextRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerStyle {
    /// `[n]`
    Bracket,
    /// `(n)`
    Paren,
    /// `n.`
    Dot,
    /// `n)`
    CloseParen,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StartMarker {
    pub key: String,
    pub number: u32,
    pub style: MarkerStyle,
}

static MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:\[(\d{1,3})\]|\((\d{1,3})\)(?:\s|$)|(\d{1,3})\.(?:\s|$)|(\d{1,3})\)(?:\s|$))").unwrap()
});

/// Parses a start marker at the head of a line. A bracket marker may be glued
/// to the following word; the other styles need whitespace after them.
pub fn parse_start_marker(line: &str) -> Option<StartMarker> {
    let caps = MARKER.captures(line.trim_start())?;
    let (i, style) = (1..=4)
        .find(|&i| caps.get(i).is_some())
        .map(|i| (i, [MarkerStyle::Bracket, MarkerStyle::Paren, MarkerStyle::Dot, MarkerStyle::CloseParen][i - 1]))?;
    let digits = caps.get(i)?.as_str();
    let key = match style {
        MarkerStyle::Bracket => format!("[{digits}]"),
        MarkerStyle::Paren => format!("({digits})"),
        MarkerStyle::Dot => format!("{digits}."),
        MarkerStyle::CloseParen => format!("{digits})"),
    };
    Some(StartMarker {
        key,
        number: digits.parse().ok()?,
        style,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageBox {
    pub page: usize,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceItem {
    pub item_id: usize,
    pub explicit_key: String,
    pub text: String,
    /// One box per (page, list region) fragment of the item.
    pub boxes: Vec<PageBox>,
    pub start_run: RunRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSection {
    pub start: RunRef,
    pub title_text: String,
    pub title_bbox: BBox,
    pub title_font_size: f64,
    pub list_regions: Vec<Region>,
}

pub const SECTION_KEYWORDS: [&str; 5] = ["references", "bibliography", "works cited", "literature cited", "reference"];

static LEADING_NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:\d+(?:\.\d+)*\.?|[ivxlcdm]+\.)\s+").unwrap());

/// Lowercased title with leading numbering ("7.", "VII.") and trailing
/// punctuation removed.
pub fn normalize_title(title: &str) -> String {
    let lower = title.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let stripped = LEADING_NUMBER.replace(&lower, "");
    stripped.trim_end_matches([':', '.']).trim().to_string()
}

pub fn is_section_title(title: &str) -> bool {
    let t = normalize_title(title);
    SECTION_KEYWORDS.contains(&t.as_str())
}

fn region_font_size(region: &Region, doc: &PageGraph) -> f64 {
    let runs: Vec<&TextRun> = region.runs(&doc.pages[region.page]).collect();
    if runs.is_empty() {
        0.0
    } else {
        superscript_dominant(&runs).0
    }
}

fn in_reading_order(regions: &[Region]) -> Vec<&Region> {
    let mut v: Vec<&Region> = regions.iter().collect();
    v.sort_by_key(|r| r.reading_key());
    v
}

pub fn detect_reference_section(doc: &PageGraph, regions: &[Region]) -> Result<ReferenceSection, RefItemsError> {
    let ordered = in_reading_order(regions);
    let (pos, title) = ordered
        .iter()
        .enumerate()
        .find(|(_, r)| {
            r.category == RegionCategory::Title
                && !r.member_runs.is_empty()
                && is_section_title(&r.text(&doc.pages[r.page]))
        })
        .ok_or(RefItemsError::SectionNotFound)?;
    let size = region_font_size(title, doc);
    let end = ordered[pos + 1..]
        .iter()
        .position(|r| r.category == RegionCategory::Title && region_font_size(r, doc) >= size - 0.05)
        .map_or(ordered.len(), |off| pos + 1 + off);
    let list_regions = ordered[pos + 1..end]
        .iter()
        .filter(|r| r.category == RegionCategory::List)
        .map(|r| (*r).clone())
        .collect();
    Ok(ReferenceSection {
        start: RunRef {
            page: title.page,
            reading_index: title.member_runs[0],
        },
        title_text: title.text(&doc.pages[title.page]),
        title_bbox: title.bbox,
        title_font_size: size,
        list_regions,
    })
}

struct OpenItem {
    key: String,
    start: RunRef,
    lines: Vec<String>,
    // fragment boxes keyed by position in the section's list regions
    fragments: Vec<(usize, PageBox)>,
}

pub fn segment_reference_items(section: &ReferenceSection, doc: &PageGraph) -> Result<Vec<ReferenceItem>, RefItemsError> {
    let mut items: Vec<OpenItem> = Vec::new();
    let mut last: Option<(u32, MarkerStyle)> = None;
    for (ri, region) in section.list_regions.iter().enumerate() {
        let page = &doc.pages[region.page];
        for line in group_lines(page, &region.member_runs) {
            let text = line.text(page);
            let marker = parse_start_marker(&text).filter(|m| match last {
                None => true,
                Some((n, style)) => m.style == style && m.number == n + 1,
            });
            if let Some(m) = marker {
                last = Some((m.number, m.style));
                items.push(OpenItem {
                    key: m.key,
                    start: RunRef {
                        page: region.page,
                        reading_index: line.runs[0],
                    },
                    lines: Vec::new(),
                    fragments: Vec::new(),
                });
            }
            // lines before the first marker belong to no item
            let Some(item) = items.last_mut() else { continue };
            item.lines.push(text);
            match item.fragments.last_mut() {
                Some((r, b)) if *r == ri => b.bbox = b.bbox.union(&line.bbox),
                _ => item.fragments.push((
                    ri,
                    PageBox {
                        page: region.page,
                        bbox: line.bbox,
                    },
                )),
            }
        }
    }
    if items.is_empty() {
        return Err(RefItemsError::NoItemsFound);
    }
    Ok(items
        .into_iter()
        .enumerate()
        .map(|(item_id, it)| ReferenceItem {
            item_id,
            explicit_key: it.key,
            text: it.lines.join(" "),
            boxes: it.fragments.into_iter().map(|(_, b)| b).collect(),
            start_run: it.start,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaptionKind {
    Table,
    Figure,
    Equation,
}

impl CaptionKind {
    fn name(&self) -> &'static str {
        match self {
            CaptionKind::Table => "Table",
            CaptionKind::Figure => "Figure",
            CaptionKind::Equation => "Equation",
        }
    }

    fn anchor_category(&self) -> RegionCategory {
        match self {
            CaptionKind::Table => RegionCategory::Table,
            CaptionKind::Figure => RegionCategory::Figure,
            CaptionKind::Equation => RegionCategory::Equation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionKey {
    pub kind: CaptionKind,
    pub number_token: String,
    pub key: String,
    pub region: Region,
    pub anchor_region: Option<Region>,
    /// Set when an earlier key in the document has the same kind and number.
    #[serde(default)]
    pub duplicate: bool,
}

impl CaptionKey {
    fn new(kind: CaptionKind, number_token: &str, region: Region, anchor_region: Option<Region>) -> Self {
        CaptionKey {
            kind,
            key: format!("{} {}", kind.name(), number_token),
            number_token: number_token.to_string(),
            region,
            anchor_region,
            duplicate: false,
        }
    }
}

static CAPTION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(table|tab\.|figure|fig\.|equation|eq\.)\s*([0-9]+[a-z]?)(?:[^a-z0-9]|$)").unwrap()
});

fn vertical_edge_distance(a: &BBox, b: &BBox) -> f64 {
    (a.y0 - b.y1).max(b.y0 - a.y1).max(0.0)
}

/// Caption keys from Text regions, in reading order. Repeated (kind, number)
/// pairs are kept and flagged as duplicates.
pub fn extract_caption_keys(doc: &PageGraph, regions: &[Region]) -> Vec<CaptionKey> {
    let ordered = in_reading_order(regions);
    let mut keys = Vec::new();
    for region in ordered.iter().filter(|r| r.category == RegionCategory::Text) {
        let text = region.text(&doc.pages[region.page]);
        let Some(caps) = CAPTION.captures(&text) else { continue };
        let kind = match caps[1].to_lowercase().as_str() {
            "table" | "tab." => CaptionKind::Table,
            "figure" | "fig." => CaptionKind::Figure,
            _ => CaptionKind::Equation,
        };
        let anchor = ordered
            .iter()
            .filter(|r| r.page == region.page && r.category == kind.anchor_category())
            .min_by(|a, b| {
                vertical_edge_distance(&a.bbox, &region.bbox).total_cmp(&vertical_edge_distance(&b.bbox, &region.bbox))
            })
            .map(|r| (*r).clone());
        keys.push(CaptionKey::new(kind, &caps[2], (*region).clone(), anchor));
    }
    flag_duplicates(&mut keys);
    keys
}

pub fn flag_duplicates(keys: &mut [CaptionKey]) {
    let mut seen: HashMap<(CaptionKind, String), usize> = HashMap::new();
    for k in keys.iter_mut() {
        let n = seen.entry((k.kind, k.number_token.clone())).or_insert(0);
        if *n > 0 {
            k.duplicate = true;
            log::warn!("duplicate caption key {:?}", k.key);
        }
        *n += 1;
    }
}

/// Keys of tagged Equation regions, in reading order.
pub fn detect_equation_tags(doc: &PageGraph, regions: &[Region], cfg: &LayoutConfig) -> Vec<CaptionKey> {
    in_reading_order(regions)
        .into_iter()
        .filter(|r| r.category == RegionCategory::Equation)
        .filter_map(|r| {
            let (_, number) = equation_tag(r, &doc.pages[r.page], cfg)?;
            Some(CaptionKey::new(CaptionKind::Equation, &number, r.clone(), None))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootnoteMarker {
    pub marker_text: String,
    pub in_text: RunRef,
    pub footnote_region: Option<Region>,
}

/// Regions starting below this fraction of the page height hold footnotes.
pub const FOOTNOTE_BAND: f64 = 0.75;

static FOOTNOTE_MARK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?:\d{1,2}|[†‡*§])$").unwrap());

/// Footnote markers among superscript runs. The marker repeated at the head of
/// a footnote itself is not reported as an in-text marker.
pub fn detect_footnote_markers(doc: &PageGraph, regions: &[Region]) -> Vec<FootnoteMarker> {
    let mut out = Vec::new();
    for page in &doc.pages {
        let bottom: Vec<&Region> = in_reading_order(regions)
            .into_iter()
            .filter(|r| r.page == page.index && r.bbox.y0 >= FOOTNOTE_BAND * page.height && !r.member_runs.is_empty())
            .collect();
        for run in page.runs.iter().filter(|r| r.superscript && FOOTNOTE_MARK.is_match(&r.text)) {
            if bottom.iter().any(|r| r.member_runs[0] == run.reading_index) {
                continue;
            }
            let footnote_region = bottom
                .iter()
                .find(|r| page.run(r.member_runs[0]).is_some_and(|lead| lead.text == run.text))
                .map(|r| (*r).clone());
            out.push(FootnoteMarker {
                marker_text: run.text.clone(),
                in_text: RunRef {
                    page: page.index,
                    reading_index: run.reading_index,
                },
                footnote_region,
            });
        }
    }
    out
}
