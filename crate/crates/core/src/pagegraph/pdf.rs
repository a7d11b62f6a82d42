//! Born-digital PDF ingestion.
//!
//! Glyph positions come from `pdf-extract`'s content-stream interpreter; link
//! annotations and destinations are read directly with `lopdf`. Coordinates are
//! flipped once here to the top-left origin used everywhere else.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use lopdf::{Dictionary, Document, Object, ObjectId};
use pdf_extract::{MediaBox, OutputDev, OutputError, Transform};

use super::{LinkAnnotation, LinkKind, Page, PageGraph, TextRun};
use crate::error::PageGraphError;
use crate::geometry::{round3, BBox, Point};

/// Run boxes span this fraction of the font size above the baseline...
const ASCENT: f64 = 0.8;
/// ...and this fraction below it.
const DESCENT: f64 = 0.2;
/// Horizontal gap (in em) that splits two glyphs into separate runs.
const WORD_GAP_EM: f64 = 0.2;

pub fn ingest_pdf(path: &Path) -> Result<PageGraph, PageGraphError> {
    let bytes = std::fs::read(path)?;
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "document".to_string());
    ingest_pdf_bytes(&bytes, &source_id)
}

pub fn ingest_pdf_bytes(bytes: &[u8], source_id: &str) -> Result<PageGraph, PageGraphError> {
    let mut doc = Document::load_mem(bytes).map_err(|e| match e {
        lopdf::Error::Decryption(_) | lopdf::Error::InvalidPassword | lopdf::Error::UnsupportedSecurityHandler(_) => {
            PageGraphError::EncryptedPdf
        }
        other => PageGraphError::UnreadablePdf(other.to_string()),
    })?;
    if doc.is_encrypted() && doc.decrypt("").is_err() {
        return Err(PageGraphError::EncryptedPdf);
    }

    let page_ids: Vec<ObjectId> = doc.get_pages().into_values().collect();
    if page_ids.is_empty() {
        return Err(PageGraphError::UnreadablePdf("document has no pages".into()));
    }
    let boxes: Vec<MediaBox> = page_ids.iter().map(|&id| media_box(&doc, id)).collect();

    let mut collector = GlyphCollector::default();
    let outcome = catch_unwind(AssertUnwindSafe(|| pdf_extract::output_doc(&doc, &mut collector)));
    match outcome {
        Ok(Ok(())) => {}
        Ok(Err(e)) => return Err(PageGraphError::UnreadablePdf(format!("{e:?}"))),
        Err(_) => return Err(PageGraphError::UnreadablePdf("content stream interpreter failed".into())),
    }

    let index_of: HashMap<ObjectId, usize> = page_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut pages = Vec::with_capacity(page_ids.len());
    for (i, mb) in boxes.iter().enumerate() {
        let mut page = Page::new(i, round3(mb.urx - mb.llx), round3(mb.ury - mb.lly));
        if let Some(glyphs) = collector.pages.get(i) {
            page.runs = glyphs_to_runs(glyphs, mb, &page);
        }
        page.links = page_links(&doc, page_ids[i], i, mb, &index_of, &boxes);
        pages.push(page);
    }

    let mut graph = PageGraph::new(source_id, pages);
    if graph.run_count() == 0 {
        return Err(PageGraphError::NoTextLayer);
    }
    graph.annotate_passes();
    Ok(graph)
}

#[derive(Debug, Clone)]
struct Glyph {
    text: String,
    x: f64,
    baseline: f64,
    advance: f64,
    size: f64,
}

#[derive(Default)]
struct GlyphCollector {
    pages: Vec<Vec<Glyph>>,
}

impl OutputDev for GlyphCollector {
    fn begin_page(&mut self, _page_num: u32, _media_box: &MediaBox, _art_box: Option<(f64, f64, f64, f64)>) -> Result<(), OutputError> {
        self.pages.push(Vec::new());
        Ok(())
    }

    fn end_page(&mut self) -> Result<(), OutputError> {
        Ok(())
    }

    fn output_character(&mut self, trm: &Transform, width: f64, _spacing: f64, font_size: f64, ch: &str) -> Result<(), OutputError> {
        // rendering matrix applied to (font_size, font_size) and to the advance vector
        let sx = font_size * trm.m11 + font_size * trm.m21;
        let sy = font_size * trm.m12 + font_size * trm.m22;
        let size = (sx * sy).abs().sqrt();
        let advance = width * font_size * trm.m11;
        if let Some(page) = self.pages.last_mut() {
            page.push(Glyph {
                text: ch.to_string(),
                x: trm.m31,
                baseline: trm.m32,
                advance,
                size,
            });
        }
        Ok(())
    }

    fn begin_word(&mut self) -> Result<(), OutputError> {
        Ok(())
    }

    fn end_word(&mut self) -> Result<(), OutputError> {
        Ok(())
    }

    fn end_line(&mut self) -> Result<(), OutputError> {
        Ok(())
    }
}

struct WordAcc {
    text: String,
    x0: f64,
    x1: f64,
    baseline: f64,
    size: f64,
}

fn glyphs_to_runs(glyphs: &[Glyph], mb: &MediaBox, page: &Page) -> Vec<TextRun> {
    let mut runs = Vec::new();
    let mut cur: Option<WordAcc> = None;
    let flush = |w: Option<WordAcc>, runs: &mut Vec<TextRun>| {
        if let Some(w) = w {
            if let Some(r) = word_to_run(w, mb, page) {
                runs.push(r);
            }
        }
    };
    for g in glyphs {
        let text: String = g.text.chars().filter(|c| !c.is_control()).collect();
        if text.trim().is_empty() || g.size <= 0.0 {
            flush(cur.take(), &mut runs);
            continue;
        }
        let breaks = match &cur {
            Some(w) => {
                (g.size - w.size).abs() > 0.5
                    || (g.baseline - w.baseline).abs() > 0.5
                    || g.x - w.x1 > WORD_GAP_EM * g.size
                    || g.x < w.x1 - 0.5 * g.size
            }
            None => false,
        };
        if breaks {
            flush(cur.take(), &mut runs);
        }
        match &mut cur {
            Some(w) => {
                w.text.push_str(text.trim());
                w.x1 = w.x1.max(g.x + g.advance);
            }
            None => {
                cur = Some(WordAcc {
                    text: text.trim().to_string(),
                    x0: g.x,
                    x1: g.x + g.advance.max(0.0),
                    baseline: g.baseline,
                    size: g.size,
                })
            }
        }
    }
    flush(cur, &mut runs);
    runs
}

fn word_to_run(w: WordAcc, mb: &MediaBox, page: &Page) -> Option<TextRun> {
    let baseline = mb.ury - w.baseline;
    let x0 = (w.x0 - mb.llx).clamp(0.0, page.width);
    let mut x1 = (w.x1 - mb.llx).clamp(0.0, page.width);
    if x1 - x0 < 0.01 {
        x1 = (x0 + 0.5 * w.size).min(page.width);
    }
    let y0 = (baseline - ASCENT * w.size).clamp(0.0, page.height);
    let y1 = (baseline + DESCENT * w.size).clamp(0.0, page.height);
    let bbox = BBox::new(x0, y0, x1, y1)?.rounded();
    bbox.is_valid()
        .then(|| TextRun::new(w.text, bbox, round3(w.size), round3(baseline)))
}

fn number(obj: &Object) -> Option<f64> {
    match obj {
        Object::Integer(i) => Some(*i as f64),
        Object::Real(f) => Some(*f as f64),
        _ => None,
    }
}

fn resolve<'a>(doc: &'a Document, obj: &'a Object) -> &'a Object {
    doc.dereference(obj).map(|(_, o)| o).unwrap_or(obj)
}

fn inherited<'a>(doc: &'a Document, mut dict: &'a Dictionary, key: &[u8]) -> Option<&'a Object> {
    for _ in 0..32 {
        if let Ok(v) = dict.get(key) {
            return Some(resolve(doc, v));
        }
        let parent = dict.get(b"Parent").ok()?;
        dict = resolve(doc, parent).as_dict().ok()?;
    }
    None
}

fn media_box(doc: &Document, page_id: ObjectId) -> MediaBox {
    let letter = MediaBox { llx: 0.0, lly: 0.0, urx: 612.0, ury: 792.0 };
    let Ok(dict) = doc.get_dictionary(page_id) else {
        return letter;
    };
    let values: Option<Vec<f64>> = inherited(doc, dict, b"MediaBox")
        .and_then(|o| o.as_array().ok())
        .map(|a| a.iter().filter_map(|o| number(resolve(doc, o))).collect());
    match values.as_deref() {
        Some(&[a, b, c, d]) if c != a && d != b => MediaBox {
            llx: a.min(c),
            lly: b.min(d),
            urx: a.max(c),
            ury: b.max(d),
        },
        _ => letter,
    }
}

enum Target {
    Internal { page: ObjectId, left: Option<f64>, top: Option<f64> },
    External,
}

fn page_links(
    doc: &Document,
    page_id: ObjectId,
    page_index: usize,
    mb: &MediaBox,
    index_of: &HashMap<ObjectId, usize>,
    boxes: &[MediaBox],
) -> Vec<LinkAnnotation> {
    let Ok(annots) = doc.get_page_annotations(page_id) else {
        return Vec::new();
    };
    let width = mb.urx - mb.llx;
    let height = mb.ury - mb.lly;
    let mut links = Vec::new();
    for annot in annots {
        if !matches!(annot.get(b"Subtype").and_then(Object::as_name), Ok(b"Link")) {
            continue;
        }
        let Some(rect) = annot
            .get(b"Rect")
            .ok()
            .and_then(|r| resolve(doc, r).as_array().ok())
            .map(|a| a.iter().filter_map(|o| number(resolve(doc, o))).collect::<Vec<_>>())
        else {
            continue;
        };
        let [ax, ay, bx, by] = rect[..] else { continue };
        let x0 = (ax.min(bx) - mb.llx).clamp(0.0, width);
        let x1 = (ax.max(bx) - mb.llx).clamp(0.0, width);
        let y0 = (mb.ury - ay.max(by)).clamp(0.0, height);
        let y1 = (mb.ury - ay.min(by)).clamp(0.0, height);
        let Some(source_rect) = BBox::new(x0, y0, x1, y1).map(|b| b.rounded()).filter(BBox::is_valid) else {
            continue;
        };
        let link = match link_target(doc, annot) {
            Some(Target::Internal { page, left, top }) => {
                let Some(&target_page) = index_of.get(&page) else { continue };
                let tb = &boxes[target_page];
                let tx = left.map_or(0.0, |l| l - tb.llx).clamp(0.0, tb.urx - tb.llx);
                let ty = top.map_or(0.0, |t| tb.ury - t).clamp(0.0, tb.ury - tb.lly);
                LinkAnnotation {
                    source_page: page_index,
                    source_rect,
                    target_page,
                    target_point: Point::new(round3(tx), round3(ty)),
                    kind: LinkKind::Internal,
                }
            }
            Some(Target::External) => LinkAnnotation {
                source_page: page_index,
                source_rect,
                target_page: page_index,
                target_point: Point::new(0.0, 0.0),
                kind: LinkKind::External,
            },
            None => continue,
        };
        links.push(link);
    }
    links
}

fn link_target(doc: &Document, annot: &Dictionary) -> Option<Target> {
    if let Ok(dest) = annot.get(b"Dest") {
        return resolve_dest(doc, dest, 0);
    }
    let action = resolve(doc, annot.get(b"A").ok()?).as_dict().ok()?;
    match action.get(b"S").and_then(Object::as_name).ok()? {
        b"GoTo" => resolve_dest(doc, action.get(b"D").ok()?, 0),
        b"URI" => Some(Target::External),
        _ => None,
    }
}

fn resolve_dest(doc: &Document, dest: &Object, depth: usize) -> Option<Target> {
    if depth > 8 {
        return None;
    }
    match resolve(doc, dest) {
        Object::Array(arr) => {
            let page = arr.first()?.as_reference().ok()?;
            let kind = arr.get(1).and_then(|o| o.as_name().ok()).unwrap_or(b"Fit");
            let arg = |i: usize| arr.get(i).and_then(|o| number(resolve(doc, o)));
            let (left, top) = match kind {
                b"XYZ" => (arg(2), arg(3)),
                b"FitH" | b"FitBH" => (None, arg(2)),
                b"FitV" | b"FitBV" => (arg(2), None),
                b"FitR" => (arg(2), arg(5)),
                _ => (None, None),
            };
            Some(Target::Internal { page, left, top })
        }
        Object::Dictionary(d) => resolve_dest(doc, d.get(b"D").ok()?, depth + 1),
        Object::Name(name) => {
            let catalog = doc.catalog().ok()?;
            let dests = resolve(doc, catalog.get(b"Dests").ok()?).as_dict().ok()?;
            resolve_dest(doc, dests.get(name).ok()?, depth + 1)
        }
        Object::String(name, _) => {
            let catalog = doc.catalog().ok()?;
            let names = resolve(doc, catalog.get(b"Names").ok()?).as_dict().ok()?;
            let tree = resolve(doc, names.get(b"Dests").ok()?).as_dict().ok()?;
            let found = name_tree_lookup(doc, tree, name, 0)?;
            resolve_dest(doc, found, depth + 1)
        }
        _ => None,
    }
}

fn name_tree_lookup<'a>(doc: &'a Document, node: &'a Dictionary, key: &[u8], depth: usize) -> Option<&'a Object> {
    if depth > 32 {
        return None;
    }
    if let Ok(names) = node.get(b"Names").and_then(Object::as_array) {
        for pair in names.chunks(2) {
            if let [k, v] = pair {
                if resolve(doc, k).as_str().ok() == Some(key) {
                    return Some(v);
                }
            }
        }
    }
    let kids = node.get(b"Kids").and_then(Object::as_array).ok()?;
    kids.iter()
        .filter_map(|k| resolve(doc, k).as_dict().ok())
        .find_map(|kid| name_tree_lookup(doc, kid, key, depth + 1))
}
