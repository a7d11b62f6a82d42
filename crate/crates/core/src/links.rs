//! Implicit keys from embedded hyperlinks and their resolution to reference items.

use serde::{Deserialize, Serialize};

use crate::error::LinksError;
use crate::geometry::{ser_round3, BBox, Point};
use crate::pagegraph::{LinkAnnotation, LinkKind, PageGraph};
use crate::refitems::{ReferenceItem, ReferenceSection};

/// Link targets this close (pt) to a section list region count as inside it.
pub const TARGET_SLACK: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedReference {
    pub link: LinkAnnotation,
    pub implicit_key: String,
    pub target_item: usize,
    pub distance: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceJson {
    page: usize,
    rect: BBox,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetJson {
    page: usize,
    point: Point,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResolvedJson {
    implicit_key: String,
    source: SourceJson,
    target: TargetJson,
    target_item: usize,
    #[serde(serialize_with = "ser_round3")]
    distance: f64,
}

impl Serialize for ResolvedReference {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ResolvedJson {
            implicit_key: self.implicit_key.clone(),
            source: SourceJson {
                page: self.link.source_page,
                rect: self.link.source_rect,
            },
            target: TargetJson {
                page: self.link.target_page,
                point: self.link.target_point,
            },
            target_item: self.target_item,
            distance: self.distance,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ResolvedReference {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = ResolvedJson::deserialize(d)?;
        Ok(ResolvedReference {
            link: LinkAnnotation {
                source_page: j.source.page,
                source_rect: j.source.rect,
                target_page: j.target.page,
                target_point: j.target.point,
                kind: LinkKind::Internal,
            },
            implicit_key: j.implicit_key,
            target_item: j.target_item,
            distance: j.distance,
        })
    }
}

/// All link annotations ordered by (page, top, left).
pub fn extract_links(doc: &PageGraph) -> Vec<LinkAnnotation> {
    let mut links: Vec<LinkAnnotation> = doc.pages.iter().flat_map(|p| p.links.iter().cloned()).collect();
    links.sort_by(|a, b| {
        a.source_page
            .cmp(&b.source_page)
            .then(a.source_rect.y0.total_cmp(&b.source_rect.y0))
            .then(a.source_rect.x0.total_cmp(&b.source_rect.x0))
    });
    links
}

fn targets_section(link: &LinkAnnotation, section: &ReferenceSection) -> bool {
    let start = section.start.page;
    if link.target_page != start {
        return link.target_page > start;
    }
    // Same page: below the title, or inside a list region of the section
    // (covers a second column that starts above the title).
    link.target_point.y >= section.title_bbox.y0
        || section.list_regions.iter().any(|r| {
            r.page == start
                && BBox::new(r.bbox.x0 - TARGET_SLACK, r.bbox.y0 - TARGET_SLACK, r.bbox.x1 + TARGET_SLACK, r.bbox.y1 + TARGET_SLACK)
                    .is_some_and(|b| b.contains(link.target_point))
        })
}

fn source_in_section(link: &LinkAnnotation, section: &ReferenceSection) -> bool {
    let c = link.source_rect.center();
    (link.source_page == section.start.page && section.title_bbox.contains(c))
        || section.list_regions.iter().any(|r| r.page == link.source_page && r.bbox.contains(c))
}

/// Internal links pointing at or after the start of the reference section,
/// excluding links that sit inside the section.
pub fn filter_bibliographic_links(links: &[LinkAnnotation], section: &ReferenceSection) -> Vec<LinkAnnotation> {
    links
        .iter()
        .filter(|l| l.kind == LinkKind::Internal && targets_section(l, section) && !source_in_section(l, section))
        .cloned()
        .collect()
}

/// Nearest item to the link's target point, measured against the item's
/// boxes on the target page. Ties go to the smaller item id.
pub fn resolve_link_target(link: &LinkAnnotation, items: &[ReferenceItem]) -> Result<ResolvedReference, LinksError> {
    let mut best: Option<(f64, usize)> = None;
    for item in items {
        for b in item.boxes.iter().filter(|b| b.page == link.target_page) {
            let d = b.bbox.distance_sq_to(link.target_point);
            let better = match best {
                None => true,
                Some((bd, bid)) => d < bd || (d == bd && item.item_id < bid),
            };
            if better {
                best = Some((d, item.item_id));
            }
        }
    }
    let (d, target_item) = best.ok_or(LinksError::Unresolvable(link.target_page))?;
    Ok(ResolvedReference {
        link: link.clone(),
        implicit_key: String::new(),
        target_item,
        distance: d.sqrt(),
    })
}

/// Text of the runs mostly covered by the link rectangle, in reading order.
pub fn extract_implicit_key(link: &LinkAnnotation, doc: &PageGraph) -> String {
    let Some(page) = doc.pages.get(link.source_page) else {
        return String::new();
    };
    let words: Vec<&str> = page
        .runs
        .iter()
        .filter(|r| r.bbox.area() > 0.0 && r.bbox.intersection_area(&link.source_rect) / r.bbox.area() >= 0.5)
        .map(|r| r.text.as_str())
        .collect();
    words.join(" ").trim().to_string()
}

/// Resolves every link, filling in implicit keys. Returns the resolved
/// references and the number of links that had no item on their target page.
pub fn resolve_links(doc: &PageGraph, links: &[LinkAnnotation], items: &[ReferenceItem]) -> (Vec<ResolvedReference>, usize) {
    let mut unresolved = 0;
    let mut out = Vec::with_capacity(links.len());
    for link in links {
        match resolve_link_target(link, items) {
            Ok(mut r) => {
                r.implicit_key = extract_implicit_key(link, doc);
                out.push(r);
            }
            Err(e) => {
                log::debug!("{e}");
                unresolved += 1;
            }
        }
    }
    (out, unresolved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::layout::{Region, RegionCategory};
    use crate::pagegraph::{Page, RunRef, TextRun};
    use crate::refitems::PageBox;

    fn bx(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    fn link(page: usize, rect: BBox, target_page: usize, x: f64, y: f64) -> LinkAnnotation {
        LinkAnnotation {
            source_page: page,
            source_rect: rect,
            target_page,
            target_point: Point { x, y },
            kind: LinkKind::Internal,
        }
    }

    fn item(id: usize, page: usize, b: BBox) -> ReferenceItem {
        ReferenceItem {
            item_id: id,
            explicit_key: format!("[{}]", id + 1),
            text: format!("[{}] entry", id + 1),
            boxes: vec![PageBox { page, bbox: b }],
            start_run: RunRef { page, reading_index: 0 },
        }
    }

    fn section(page: usize, title: BBox, list: BBox) -> ReferenceSection {
        ReferenceSection {
            start: RunRef { page, reading_index: 0 },
            title_text: "References".into(),
            title_bbox: title,
            title_font_size: 12.0,
            list_regions: vec![Region {
                page,
                bbox: list,
                category: RegionCategory::List,
                confidence: 1.0,
                member_runs: vec![1],
            }],
        }
    }

    #[test]
    fn empty_and_sorted() {
        let doc = PageGraph::new("t", vec![Page::new(0, 612.0, 792.0)]);
        assert!(extract_links(&doc).is_empty());

        let mut p = Page::new(0, 612.0, 792.0);
        p.links.push(link(0, bx(10.0, 50.0, 20.0, 60.0), 0, 0.0, 0.0));
        p.links.push(LinkAnnotation {
            kind: LinkKind::External,
            ..link(0, bx(10.0, 30.0, 20.0, 40.0), 0, 0.0, 0.0)
        });
        let doc = PageGraph::new("t", vec![p]);
        let got = extract_links(&doc);
        assert_eq!(got[0].source_rect.y0, 30.0);
        assert_eq!(got.iter().filter(|l| l.kind == LinkKind::Internal).count(), 1);
        assert_eq!(got.iter().filter(|l| l.kind == LinkKind::External).count(), 1);
    }

    #[test]
    fn filter_by_target_page() {
        let s = section(8, bx(72.0, 100.0, 150.0, 112.0), bx(72.0, 120.0, 540.0, 700.0));
        let to9 = link(2, bx(100.0, 100.0, 110.0, 110.0), 9, 80.0, 80.0);
        let to3 = link(2, bx(120.0, 100.0, 130.0, 110.0), 3, 80.0, 80.0);
        let inside = link(8, bx(100.0, 200.0, 110.0, 210.0), 8, 80.0, 300.0);
        let above_title = link(2, bx(140.0, 100.0, 150.0, 110.0), 8, 80.0, 50.0);
        let below_title = link(2, bx(160.0, 100.0, 170.0, 110.0), 8, 80.0, 130.0);
        let kept = filter_bibliographic_links(&[to9.clone(), to3, inside, above_title, below_title.clone()], &s);
        assert_eq!(kept, vec![to9, below_title]);
        assert_eq!(filter_bibliographic_links(&kept, &s), kept);
    }

    #[test]
    fn same_page_second_column_target_kept() {
        let mut s = section(8, bx(72.0, 400.0, 150.0, 412.0), bx(72.0, 420.0, 297.0, 700.0));
        s.list_regions.push(Region {
            bbox: bx(315.0, 72.0, 540.0, 700.0),
            ..s.list_regions[0].clone()
        });
        let l = link(2, bx(100.0, 100.0, 110.0, 110.0), 8, 316.0, 80.0);
        assert_eq!(filter_bibliographic_links(std::slice::from_ref(&l), &s), vec![l]);
    }

    #[test]
    fn containment_gives_zero_distance() {
        let items: Vec<ReferenceItem> = (0..6).map(|i| item(i, 0, bx(72.0, 100.0 + 20.0 * i as f64, 300.0, 118.0 + 20.0 * i as f64))).collect();
        let r = resolve_link_target(&link(0, bx(0.0, 0.0, 1.0, 1.0), 0, 100.0, 205.0), &items).unwrap();
        assert_eq!((r.target_item, r.distance), (5, 0.0));
    }

    #[test]
    fn nearest_above_and_tie() {
        // item 0 starts 10 pt below the point, item 1 ends 40 pt above it
        let items = vec![item(0, 0, bx(72.0, 110.0, 300.0, 130.0)), item(1, 0, bx(72.0, 20.0, 300.0, 60.0))];
        let r = resolve_link_target(&link(0, bx(0.0, 0.0, 1.0, 1.0), 0, 100.0, 100.0), &items).unwrap();
        assert_eq!((r.target_item, r.distance), (0, 10.0));

        let items = vec![item(2, 0, bx(72.0, 100.0, 300.0, 110.0)), item(3, 0, bx(72.0, 120.0, 300.0, 130.0))];
        let r = resolve_link_target(&link(0, bx(0.0, 0.0, 1.0, 1.0), 0, 100.0, 115.0), &items).unwrap();
        assert_eq!(r.target_item, 2);
    }

    #[test]
    fn no_item_on_target_page() {
        let items = vec![item(0, 0, bx(72.0, 110.0, 300.0, 130.0))];
        let err = resolve_link_target(&link(0, bx(0.0, 0.0, 1.0, 1.0), 4, 100.0, 100.0), &items);
        assert_eq!(err, Err(LinksError::Unresolvable(4)));
    }

    #[test]
    fn implicit_keys() {
        let mut p = Page::new(0, 612.0, 792.0);
        let words = [("[52]", 72.0, 92.0), ("presents", 95.0, 130.0), ("Smith", 200.0, 225.0), ("et", 228.0, 236.0), ("al.", 239.0, 252.0)];
        for (i, (w, x0, x1)) in words.iter().enumerate() {
            let mut r = TextRun::new(*w, bx(*x0, 92.0, *x1, 102.0), 10.0, 100.0);
            r.reading_index = i;
            p.runs.push(r);
        }
        let doc = PageGraph::new("t", vec![p]);
        assert_eq!(extract_implicit_key(&link(0, bx(71.0, 91.0, 93.0, 103.0), 0, 0.0, 0.0), &doc), "[52]");
        assert_eq!(extract_implicit_key(&link(0, bx(199.0, 91.0, 253.0, 103.0), 0, 0.0, 0.0), &doc), "Smith et al.");
        assert_eq!(extract_implicit_key(&link(0, bx(300.0, 300.0, 400.0, 400.0), 0, 0.0, 0.0), &doc), "");
    }

    #[test]
    fn json_shape() {
        let r = ResolvedReference {
            link: link(1, bx(1.0, 2.0, 3.0, 4.0), 2, 5.0, 6.0),
            implicit_key: "[1]".into(),
            target_item: 0,
            distance: 1.23456,
        };
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(
            s,
            r#"{"implicit_key":"[1]","source":{"page":1,"rect":[1.0,2.0,3.0,4.0]},"target":{"page":2,"point":[5.0,6.0]},"target_item":0,"distance":1.235}"#
        );
        let back: ResolvedReference = serde_json::from_str(&s).unwrap();
        assert_eq!(back.link, r.link);
    }
}
