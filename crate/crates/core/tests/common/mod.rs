#![allow(dead_code)]

use refweave::evalkit::compute_iou;
use refweave::layout::LayoutConfig;
use refweave::synth::Expected;
use refweave::{annotate, PageGraph};

/// Compares the pipeline output on a synthetic document against its oracle.
/// Returns a description of the first mismatch.
pub fn check_synth_document(doc: &PageGraph, exp: &Expected) -> Result<(), String> {
    let refs = annotate(doc, None, &LayoutConfig::default()).map_err(|e| format!("{}: {e}", doc.source_id))?;
    let id = &doc.source_id;
    if refs.items.len() != exp.items.len() {
        return Err(format!("{id}: {} items, expected {}", refs.items.len(), exp.items.len()));
    }
    for (got, want) in refs.items.iter().zip(&exp.items) {
        if got.explicit_key != want.explicit_key {
            return Err(format!("{id}: key {} != {}", got.explicit_key, want.explicit_key));
        }
        if got.boxes.len() != want.boxes.len() {
            return Err(format!("{id}: item {} has {} boxes, expected {}", want.item_id, got.boxes.len(), want.boxes.len()));
        }
        for (g, w) in got.boxes.iter().zip(&want.boxes) {
            let iou = compute_iou(&g.bbox, &w.bbox);
            if g.page != w.page || iou < 0.95 {
                return Err(format!("{id}: item {} box IoU {iou:.3} on page {} vs {}", want.item_id, g.page, w.page));
            }
        }
    }
    if refs.resolved.len() != exp.links.len() || refs.unresolved_links != 0 {
        return Err(format!("{id}: {} links resolved ({} unresolved), expected {}", refs.resolved.len(), refs.unresolved_links, exp.links.len()));
    }
    for want in &exp.links {
        let got = refs
            .resolved
            .iter()
            .find(|r| r.link.source_page == want.source_page && r.link.source_rect == want.source_rect)
            .ok_or_else(|| format!("{id}: link at {:?} missing", want.source_rect))?;
        if got.target_item != want.target_item || got.implicit_key != want.implicit_key {
            return Err(format!(
                "{id}: link {:?} -> item {} key {:?}, expected item {} key {:?}",
                want.source_rect, got.target_item, got.implicit_key, want.target_item, want.implicit_key
            ));
        }
    }
    Ok(())
}
