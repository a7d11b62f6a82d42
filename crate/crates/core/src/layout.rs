//! Page segmentation into the six region categories.
//!
//! The heuristic path clusters runs into blocks and classifies each block as
//! Text, Title, List or Equation. Table and Figure regions only come from an
//! external segmentation imported with [`import_regions`].

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::LayoutError;
use crate::geometry::BBox;
use crate::pagegraph::superscript_dominant;
use crate::pagegraph::{Page, PageGraph, TextRun};
use crate::refitems::parse_start_marker;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionCategory {
    Text,
    Title,
    List,
    Table,
    Figure,
    Equation,
}

impl RegionCategory {
    pub const ALL: [RegionCategory; 6] = [
        RegionCategory::Text,
        RegionCategory::Title,
        RegionCategory::List,
        RegionCategory::Table,
        RegionCategory::Figure,
        RegionCategory::Equation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RegionCategory::Text => "Text",
            RegionCategory::Title => "Title",
            RegionCategory::List => "List",
            RegionCategory::Table => "Table",
            RegionCategory::Figure => "Figure",
            RegionCategory::Equation => "Equation",
        }
    }
}

impl fmt::Display for RegionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegionCategory {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegionCategory::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| LayoutError::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub page: usize,
    pub bbox: BBox,
    pub category: RegionCategory,
    pub confidence: f64,
    /// Reading indices of the runs on `page` that belong to this region.
    pub member_runs: Vec<usize>,
}

impl Region {
    /// Sort key placing regions in document reading order.
    pub fn reading_key(&self) -> (usize, usize, i64, i64) {
        (
            self.page,
            self.member_runs.first().copied().unwrap_or(usize::MAX),
            (self.bbox.y0 * 1000.0) as i64,
            (self.bbox.x0 * 1000.0) as i64,
        )
    }

    pub fn runs<'a>(&'a self, page: &'a Page) -> impl Iterator<Item = &'a TextRun> + 'a {
        self.member_runs.iter().filter_map(move |&i| page.run(i))
    }

    pub fn text(&self, page: &Page) -> String {
        self.runs(page).map(|r| r.text.as_str()).collect::<Vec<_>>().join(" ")
    }
}

#[derive(Debug, Clone)]
pub struct LayoutConfig {
    /// Lines merge when their baselines are at most this many font sizes apart.
    pub line_gap_factor: f64,
    /// Minimum horizontal overlap of two line extents, relative to the shorter.
    pub min_line_overlap: f64,
    /// Lines whose dominant sizes differ by this ratio or more never merge.
    pub size_break_ratio: f64,
    pub title_size_ratio: f64,
    pub title_max_lines: usize,
    pub list_line_fraction: f64,
    /// Equation tag must end within this many points of the region's right edge.
    pub equation_tag_slack: f64,
    /// Gap (in em) separating an equation tag from the formula on its line.
    pub equation_tag_gap_em: f64,
    pub math_glyph_fraction: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            line_gap_factor: 1.6,
            min_line_overlap: 0.3,
            size_break_ratio: 1.15,
            title_size_ratio: 1.15,
            title_max_lines: 2,
            list_line_fraction: 0.6,
            equation_tag_slack: 10.0,
            equation_tag_gap_em: 1.5,
            math_glyph_fraction: 0.5,
        }
    }
}

/// Document-wide font statistics used by classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DocStats {
    /// Modal font size over all runs.
    pub body_font_size: f64,
}

impl DocStats {
    pub fn from_doc(doc: &PageGraph) -> Self {
        let size = crate::pagegraph::modal_font_size(doc.pages.iter().flat_map(|p| p.runs.iter()));
        DocStats {
            body_font_size: size.unwrap_or(10.0),
        }
    }
}

/// A text line: runs sharing a baseline, consecutive in reading order.
#[derive(Debug, Clone)]
pub struct Line {
    pub runs: Vec<usize>,
    pub baseline: f64,
    pub size: f64,
    pub bbox: BBox,
}

impl Line {
    pub fn text(&self, page: &Page) -> String {
        self.runs
            .iter()
            .filter_map(|&i| page.run(i))
            .map(|r| r.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Groups runs (given in reading order) into lines.
pub fn group_lines(page: &Page, reading_indices: &[usize]) -> Vec<Line> {
    let mut groups: Vec<Vec<&TextRun>> = Vec::new();
    let mut anchor: Option<(f64, f64)> = None; // baseline and size of the largest run so far
    for r in reading_indices.iter().filter_map(|&i| page.run(i)) {
        match (&mut anchor, groups.last_mut()) {
            (Some((base, size)), Some(group))
                if (r.baseline_y - *base).abs() <= 0.4 * size.max(r.font_size) + 1e-9 =>
            {
                group.push(r);
                if r.font_size > *size {
                    *base = r.baseline_y;
                    *size = r.font_size;
                }
            }
            _ => {
                groups.push(vec![r]);
                anchor = Some((r.baseline_y, r.font_size));
            }
        }
    }
    groups
        .into_iter()
        .map(|runs| {
            let (size, baseline) = superscript_dominant(&runs);
            let bbox = BBox::union_all(runs.iter().map(|r| &r.bbox)).expect("non-empty line");
            Line {
                runs: runs.iter().map(|r| r.reading_index).collect(),
                baseline,
                size,
                bbox,
            }
        })
        .collect()
}

fn horizontal_overlap(a: &BBox, b: &BBox) -> f64 {
    let inter = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
    let shorter = a.width().min(b.width());
    if shorter <= 0.0 {
        0.0
    } else {
        inter / shorter
    }
}

fn region_from_runs(page: &Page, members: Vec<usize>) -> Region {
    let bbox = BBox::union_all(members.iter().filter_map(|&i| page.run(i)).map(|r| &r.bbox)).expect("non-empty block");
    Region {
        page: page.index,
        bbox,
        category: RegionCategory::Text,
        confidence: 1.0,
        member_runs: members,
    }
}

/// Clusters a page's runs into blocks; every run lands in exactly one region.
pub fn cluster_blocks(page: &Page, cfg: &LayoutConfig) -> Vec<Region> {
    let all: Vec<usize> = {
        let mut v: Vec<usize> = page.runs.iter().map(|r| r.reading_index).collect();
        v.sort_unstable();
        v
    };
    let lines = group_lines(page, &all);
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut prev: Option<&Line> = None;
    for line in &lines {
        let joins = prev.is_some_and(|p| {
            let gap = line.baseline - p.baseline;
            let (lo, hi) = (p.size.min(line.size), p.size.max(line.size));
            gap > 0.0
                && gap <= cfg.line_gap_factor * p.size + 1e-9
                && hi / lo < cfg.size_break_ratio
                && horizontal_overlap(&p.bbox, &line.bbox) >= cfg.min_line_overlap
        });
        match blocks.last_mut() {
            Some(block) if joins => block.extend(&line.runs),
            _ => blocks.push(line.runs.clone()),
        }
        prev = Some(line);
    }
    blocks
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            region_from_runs(page, members)
        })
        .collect()
}

static EQUATION_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\((\d{1,3}[a-z]?)\)$").unwrap());

/// Right-aligned "(n)" tag of a region: reading index and the number token.
pub fn equation_tag(region: &Region, page: &Page, cfg: &LayoutConfig) -> Option<(usize, String)> {
    let lines = group_lines(page, &region.member_runs);
    let mut found = None;
    for line in &lines {
        let Some(&last) = line.runs.last() else { continue };
        let run = page.run(last)?;
        let Some(caps) = EQUATION_TAG.captures(run.text.trim()) else { continue };
        if run.bbox.x1 < region.bbox.x1 - cfg.equation_tag_slack {
            continue;
        }
        let separated = match line.runs.len() {
            1 => true,
            n => {
                let before = page.run(line.runs[n - 2])?;
                run.bbox.x0 - before.bbox.x1 >= cfg.equation_tag_gap_em * run.font_size
            }
        };
        if separated {
            found = Some((last, caps[1].to_string()));
        }
    }
    found
}

fn is_math_glyph(c: char) -> bool {
    matches!(c as u32,
        0x0370..=0x03FF      // Greek
        | 0x2100..=0x214F    // letterlike
        | 0x2190..=0x21FF    // arrows
        | 0x2200..=0x22FF    // mathematical operators
        | 0x27C0..=0x27EF
        | 0x2980..=0x2AFF
        | 0x1D400..=0x1D7FF) // mathematical alphanumerics
        || "=+<>^_|~\u{2212}".contains(c)
}

pub fn classify_region(region: &Region, page: &Page, stats: &DocStats, cfg: &LayoutConfig) -> RegionCategory {
    let runs: Vec<&TextRun> = region.runs(page).collect();
    if runs.is_empty() {
        return RegionCategory::Text;
    }
    let lines = group_lines(page, &region.member_runs);
    let (size, _) = superscript_dominant(&runs);

    if lines.len() <= cfg.title_max_lines && size >= cfg.title_size_ratio * stats.body_font_size - 1e-9 {
        return RegionCategory::Title;
    }

    // Continuation lines indented past the block edge (hanging indents) don't count.
    let margin_tol = 0.25 * size;
    let (mut marked, mut counted) = (0usize, 0usize);
    for line in &lines {
        let starts_marked = parse_start_marker(&line.text(page)).is_some();
        if starts_marked {
            marked += 1;
            counted += 1;
        } else if line.bbox.x0 <= region.bbox.x0 + margin_tol {
            counted += 1;
        }
    }
    if counted > 0 && marked as f64 >= cfg.list_line_fraction * counted as f64 {
        return RegionCategory::List;
    }

    if equation_tag(region, page, cfg).is_some() {
        return RegionCategory::Equation;
    }
    let glyphs: Vec<char> = runs.iter().flat_map(|r| r.text.chars()).filter(|c| !c.is_whitespace()).collect();
    let math = glyphs.iter().filter(|&&c| is_math_glyph(c)).count();
    if !glyphs.is_empty() && math as f64 >= cfg.math_glyph_fraction * glyphs.len() as f64 {
        return RegionCategory::Equation;
    }
    RegionCategory::Text
}

/// Heuristic segmentation of every page, in reading order.
pub fn segment_document(doc: &PageGraph, cfg: &LayoutConfig) -> Vec<Region> {
    let stats = DocStats::from_doc(doc);
    doc.pages
        .iter()
        .flat_map(|page| {
            cluster_blocks(page, cfg).into_iter().map(move |mut r| {
                r.category = classify_region(&r, page, &stats, cfg);
                r
            })
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ImportFile {
    #[allow(dead_code)]
    source_id: String,
    regions: Vec<ImportRegion>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ImportRegion {
    page: usize,
    bbox: BBox,
    category: String,
    #[serde(default = "full_confidence")]
    confidence: f64,
}

fn full_confidence() -> f64 {
    1.0
}

/// Builds regions from an external segmentation; member runs are the runs
/// whose box center lies inside the region.
pub fn import_regions(doc: &PageGraph, bytes: &[u8]) -> Result<Vec<Region>, LayoutError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let file: ImportFile = serde_path_to_error::deserialize(de).map_err(|e| LayoutError::SchemaViolation {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let mut regions = Vec::with_capacity(file.regions.len());
    for (i, r) in file.regions.into_iter().enumerate() {
        let category: RegionCategory = r.category.parse()?;
        if !r.bbox.is_valid() {
            return Err(LayoutError::SchemaViolation {
                path: format!("regions[{i}].bbox"),
                message: "box needs x0 < x1 and y0 < y1".into(),
            });
        }
        if !(0.0..=1.0).contains(&r.confidence) {
            return Err(LayoutError::SchemaViolation {
                path: format!("regions[{i}].confidence"),
                message: "confidence must lie in [0, 1]".into(),
            });
        }
        let page = doc.pages.get(r.page).ok_or(LayoutError::PageOutOfRange {
            index: i,
            page: r.page,
            pages: doc.pages.len(),
        })?;
        let mut member_runs: Vec<usize> = page
            .runs
            .iter()
            .filter(|run| r.bbox.contains(run.bbox.center()))
            .map(|run| run.reading_index)
            .collect();
        member_runs.sort_unstable();
        regions.push(Region {
            page: r.page,
            bbox: r.bbox,
            category,
            confidence: r.confidence,
            member_runs,
        });
    }
    Ok(regions)
}
