//! The `annotate` pipeline: layout, explicit keys, links and ground-truth records.

use serde::{Deserialize, Serialize};

use crate::dataset::{assemble_records, GroundTruthRecord};
use crate::error::Result;
use crate::geometry::BBox;
use crate::layout::{equation_tag, segment_document, LayoutConfig, Region};
use crate::links::{extract_links, filter_bibliographic_links, resolve_links, ResolvedReference};
use crate::pagegraph::PageGraph;
use crate::refitems::{
    detect_equation_tags, detect_footnote_markers, detect_reference_section, extract_caption_keys,
    segment_reference_items, CaptionKey, FootnoteMarker, ReferenceItem, ReferenceSection,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyKind {
    Reference,
    Caption,
    Equation,
    Footnote,
}

/// Location of an explicit key on the page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyBox {
    pub page: usize,
    pub bbox: BBox,
    pub kind: KeyKind,
    pub key: String,
}

/// Everything `annotate` extracts from one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefsFile {
    pub source_id: String,
    pub section: ReferenceSection,
    pub regions: Vec<Region>,
    pub items: Vec<ReferenceItem>,
    pub bibliographic_links: usize,
    pub resolved: Vec<ResolvedReference>,
    pub unresolved_links: usize,
    pub captions: Vec<CaptionKey>,
    pub equation_tags: Vec<CaptionKey>,
    pub footnotes: Vec<FootnoteMarker>,
    pub explicit_key_boxes: Vec<KeyBox>,
    pub records: Vec<GroundTruthRecord>,
}

impl RefsFile {
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec(self).expect("serializable");
        v.push(b'\n');
        v
    }
}

/// Runs the full extraction. `regions` replaces the heuristic segmentation
/// when given.
pub fn annotate(doc: &PageGraph, regions: Option<Vec<Region>>, cfg: &LayoutConfig) -> Result<RefsFile> {
    let regions = regions.unwrap_or_else(|| segment_document(doc, cfg));
    let section = detect_reference_section(doc, &regions)?;
    let items = segment_reference_items(&section, doc)?;
    let links = filter_bibliographic_links(&extract_links(doc), &section);
    let (resolved, unresolved_links) = resolve_links(doc, &links, &items);
    let captions = extract_caption_keys(doc, &regions);
    let equation_tags = detect_equation_tags(doc, &regions, cfg);
    let footnotes = detect_footnote_markers(doc, &regions);
    let records = assemble_records(&doc.source_id, &section, &items, &resolved)?;
    let explicit_key_boxes = key_boxes(doc, &items, &captions, &equation_tags, &footnotes, cfg);
    Ok(RefsFile {
        source_id: doc.source_id.clone(),
        section,
        regions,
        items,
        bibliographic_links: links.len(),
        resolved,
        unresolved_links,
        captions,
        equation_tags,
        footnotes,
        explicit_key_boxes,
        records,
    })
}

fn key_boxes(
    doc: &PageGraph,
    items: &[ReferenceItem],
    captions: &[CaptionKey],
    tags: &[CaptionKey],
    footnotes: &[FootnoteMarker],
    cfg: &LayoutConfig,
) -> Vec<KeyBox> {
    let mut out = Vec::new();
    for item in items {
        if let Some(run) = doc.run(item.start_run) {
            out.push(KeyBox {
                page: item.start_run.page,
                bbox: run.bbox,
                kind: KeyKind::Reference,
                key: item.explicit_key.clone(),
            });
        }
    }
    for c in captions {
        let page = &doc.pages[c.region.page];
        let mut runs = c.region.runs(page);
        let Some(first) = runs.next() else { continue };
        // "Table 1" usually spans the keyword run and the number run
        let bbox = match runs.next() {
            Some(second) if !first.text.chars().any(|ch| ch.is_ascii_digit()) => first.bbox.union(&second.bbox),
            _ => first.bbox,
        };
        out.push(KeyBox {
            page: c.region.page,
            bbox,
            kind: KeyKind::Caption,
            key: c.key.clone(),
        });
    }
    for t in tags {
        let page = &doc.pages[t.region.page];
        if let Some(run) = equation_tag(&t.region, page, cfg).and_then(|(i, _)| page.run(i)) {
            out.push(KeyBox {
                page: t.region.page,
                bbox: run.bbox,
                kind: KeyKind::Equation,
                key: t.key.clone(),
            });
        }
    }
    for f in footnotes {
        if let Some(run) = doc.run(f.in_text) {
            out.push(KeyBox {
                page: f.in_text.page,
                bbox: run.bbox,
                kind: KeyKind::Footnote,
                key: f.marker_text.clone(),
            });
        }
    }
    out
}
