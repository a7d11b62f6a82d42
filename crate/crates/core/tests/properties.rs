use proptest::prelude::*;

use refweave::dataset::{split_dataset, SplitConfig};
use refweave::evalkit::{compute_ap, compute_iou, Detection, GroundTruth};
use refweave::geometry::round3;
use refweave::layout::{cluster_blocks, LayoutConfig};
use refweave::links::resolve_link_target;
use refweave::pagegraph::{
    mark_superscripts, reading_order, LinkAnnotation, LinkKind, OrderConfig, Page, RunRef, SuperscriptConfig, TextRun,
};
use refweave::refitems::{PageBox, ReferenceItem};
use refweave::{load_pagegraph_json, BBox, PageGraph, Point};

fn r3(v: f64) -> f64 {
    round3(v)
}

prop_compose! {
    fn arb_box(w: f64, h: f64)(x in 0.0..w - 20.0, y in 0.0..h - 20.0, bw in 1.0..20.0f64, bh in 1.0..20.0f64) -> BBox {
        BBox::new(r3(x), r3(y), r3(x + bw), r3(y + bh)).unwrap()
    }
}

prop_compose! {
    fn arb_run()(bbox in arb_box(600.0, 780.0), text in "[a-zA-Z0-9\\[\\]().,]{1,8}", size in 4.0..20.0f64, sup in any::<bool>()) -> TextRun {
        let mut r = TextRun::new(text, bbox, r3(size), bbox.y1);
        r.superscript = sup;
        r
    }
}

prop_compose! {
    fn arb_page(index: usize)(runs in prop::collection::vec(arb_run(), 0..12), nlinks in 0..3usize, tgt in 0..4usize) -> Page {
        let mut p = Page::new(index, 612.0, 792.0);
        for (i, mut r) in runs.into_iter().enumerate() {
            r.reading_index = i;
            p.runs.push(r);
        }
        for k in 0..nlinks {
            let rect = BBox::new(10.0 + k as f64, 10.0, 30.5, 20.25).unwrap();
            p.links.push(LinkAnnotation {
                source_page: index,
                source_rect: rect,
                target_page: tgt.min(index),
                target_point: Point::new(72.0, r3(100.0 + k as f64 * 0.125)),
                kind: if k % 2 == 0 { LinkKind::Internal } else { LinkKind::External },
            });
        }
        p
    }
}

fn arb_graph() -> impl Strategy<Value = PageGraph> {
    (1..4usize)
        .prop_flat_map(|n| (0..n).map(arb_page).collect::<Vec<_>>())
        .prop_map(|pages| PageGraph::new("prop", pages))
}

/// Runs laid out as words on lines, in one or two columns.
fn arb_layout_page() -> impl Strategy<Value = Page> {
    (1..3usize, prop::collection::vec((1..6usize, 0..2usize), 1..14)).prop_map(|(cols, lines)| {
        let mut p = Page::new(0, 612.0, 792.0);
        let mut y = [100.0, 100.0];
        for (words, col) in lines {
            let col = col.min(cols - 1);
            let x0 = if col == 0 { 72.0 } else { 320.0 };
            for w in 0..words {
                let x = x0 + w as f64 * 40.0;
                p.runs.push(TextRun::new(format!("w{w}"), BBox::new(x, y[col] - 8.0, x + 35.0, y[col] + 2.0).unwrap(), 10.0, y[col]));
            }
            y[col] += 12.0;
        }
        p
    })
}

fn texts(p: &Page) -> Vec<(String, i64, i64)> {
    p.runs.iter().map(|r| (r.text.clone(), (r.bbox.x0 * 1000.0) as i64, (r.bbox.y0 * 1000.0) as i64)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn pagegraph_json_round_trips(g in arb_graph()) {
        let bytes = g.to_json_bytes();
        let back = load_pagegraph_json(&bytes).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(back.to_json_bytes(), bytes);
    }

    #[test]
    fn reading_order_is_an_idempotent_permutation(mut p in arb_layout_page(), seed in any::<u64>()) {
        let n = p.runs.len();
        let assignment = reading_order(&mut p, &OrderConfig::default());
        let mut seen = assignment.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        for (i, r) in p.runs.iter().enumerate() {
            prop_assert_eq!(r.reading_index, i);
        }
        let first = texts(&p);
        reading_order(&mut p, &OrderConfig::default());
        prop_assert_eq!(texts(&p), first.clone());

        // the input order of the runs does not matter
        let mut shuffled = p.clone();
        let len = shuffled.runs.len();
        for i in (1..len).rev() {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) >> 33) as usize % (i + 1);
            shuffled.runs.swap(i, j);
        }
        reading_order(&mut shuffled, &OrderConfig::default());
        prop_assert_eq!(texts(&shuffled), first);
    }

    #[test]
    fn superscripts_idempotent_and_never_the_largest(mut p in arb_page(0)) {
        let cfg = SuperscriptConfig::default();
        reading_order(&mut p, &OrderConfig::default());
        let n1 = mark_superscripts(&mut p, &cfg);
        let flags: Vec<bool> = p.runs.iter().map(|r| r.superscript).collect();
        let n2 = mark_superscripts(&mut p, &cfg);
        prop_assert_eq!(n1, n2);
        prop_assert_eq!(flags, p.runs.iter().map(|r| r.superscript).collect::<Vec<_>>());
        if let Some(max) = p.runs.iter().map(|r| r.font_size).reduce(f64::max) {
            prop_assert!(p.runs.iter().filter(|r| r.font_size == max).all(|r| !r.superscript));
        }
    }

    #[test]
    fn cluster_blocks_partitions_runs(mut p in arb_layout_page()) {
        reading_order(&mut p, &OrderConfig::default());
        let regions = cluster_blocks(&p, &LayoutConfig::default());
        let mut members: Vec<usize> = regions.iter().flat_map(|r| r.member_runs.iter().copied()).collect();
        members.sort_unstable();
        prop_assert_eq!(members, (0..p.runs.len()).collect::<Vec<_>>());
    }

    #[test]
    fn split_is_a_seeded_partition(n in 0..3000usize, ratio in 0.01..0.99f64, seed in any::<u64>()) {
        let cfg = SplitConfig { ratio, seed };
        let (train, val) = split_dataset(n, &cfg).unwrap();
        prop_assert_eq!(train.len(), (ratio * n as f64 + 1e-9).floor() as usize);
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(train.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(val.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(split_dataset(n, &cfg).unwrap(), (train, val));
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in arb_box(100.0, 100.0), b in arb_box(100.0, 100.0)) {
        let ab = compute_iou(&a, &b);
        prop_assert_eq!(ab, compute_iou(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((compute_iou(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iou_matches_pixel_count(c in prop::array::uniform8(0..=30u32)) {
        let mk = |x: u32, y: u32, w: u32, h: u32| (x, y, x + w % 15 + 1, y + h % 15 + 1);
        let a = mk(c[0], c[1], c[2], c[3]);
        let b = mk(c[4], c[5], c[6], c[7]);
        let inside = |r: (u32, u32, u32, u32), px: u32, py: u32| px >= r.0 && px < r.2 && py >= r.1 && py < r.3;
        let (mut inter, mut union) = (0u32, 0u32);
        for px in 0..50 {
            for py in 0..50 {
                let (ia, ib) = (inside(a, px, py), inside(b, px, py));
                inter += u32::from(ia && ib);
                union += u32::from(ia || ib);
            }
        }
        let bb = |r: (u32, u32, u32, u32)| BBox::new(r.0 as f64, r.1 as f64, r.2 as f64, r.3 as f64).unwrap();
        prop_assert!((compute_iou(&bb(a), &bb(b)) - inter as f64 / union as f64).abs() < 1e-12);
    }

    #[test]
    fn link_target_is_the_nearest_box(
        boxes in prop::collection::vec((0..3usize, 0..2usize, 0..40i32, 0..40i32, 1..10i32, 1..10i32), 1..10),
        px in 0..50i32, py in 0..50i32, page in 0..2usize,
    ) {
        let mut items: Vec<ReferenceItem> = Vec::new();
        for (k, &(item, pg, x, y, w, h)) in boxes.iter().enumerate() {
            let bbox = BBox::new(x as f64, y as f64, (x + w) as f64, (y + h) as f64).unwrap();
            // ids deliberately out of order
            let id = 10 - item;
            match items.iter_mut().find(|i| i.item_id == id) {
                Some(i) => i.boxes.push(PageBox { page: pg, bbox }),
                None => items.push(ReferenceItem {
                    item_id: id,
                    explicit_key: format!("[{id}]"),
                    text: String::new(),
                    boxes: vec![PageBox { page: pg, bbox }],
                    start_run: RunRef { page: pg, reading_index: k },
                }),
            }
        }
        let link = LinkAnnotation {
            source_page: 0,
            source_rect: BBox::new(0.0, 0.0, 1.0, 1.0).unwrap(),
            target_page: page,
            target_point: Point::new(px as f64, py as f64),
            kind: LinkKind::Internal,
        };
        // exhaustive search in integer arithmetic
        let mut best: Option<(i64, usize)> = None;
        for it in &items {
            for b in it.boxes.iter().filter(|b| b.page == page) {
                let (x0, y0, x1, y1) = (b.bbox.x0 as i64, b.bbox.y0 as i64, b.bbox.x1 as i64, b.bbox.y1 as i64);
                let dx = (x0 - px as i64).max(0).max(px as i64 - x1);
                let dy = (y0 - py as i64).max(0).max(py as i64 - y1);
                let cand = (dx * dx + dy * dy, it.item_id);
                if best.is_none_or(|b| cand < b) {
                    best = Some(cand);
                }
            }
        }
        match (resolve_link_target(&link, &items), best) {
            (Ok(r), Some((d, id))) => {
                prop_assert_eq!(r.target_item, id);
                prop_assert!((r.distance - (d as f64).sqrt()).abs() < 1e-9);
            }
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "got {:?}, want {:?}", got, want),
        }
    }

    #[test]
    fn ap_ignores_detection_order_and_trailing_false_positives(
        gts in prop::collection::vec((0..2u64, 0..60i32, 0..60i32, 5..40i32, 5..40i32), 1..6),
        dets in prop::collection::vec((0..2u64, 0..60i32, 0..60i32, 5..40i32, 5..40i32), 0..8),
        rot in 0..8usize,
    ) {
        let bb = |x: i32, y: i32, w: i32, h: i32| BBox::new(x as f64, y as f64, (x + w) as f64, (y + h) as f64).unwrap();
        let gts: Vec<GroundTruth> = gts.iter().map(|&(img, x, y, w, h)| GroundTruth::new(img, bb(x, y, w, h))).collect();
        // distinct scores so the ranking is total
        let dets: Vec<Detection> = dets
            .iter()
            .enumerate()
            .map(|(i, &(img, x, y, w, h))| Detection { image_id: img, bbox: bb(x, y, w, h), score: 0.9 - i as f64 * 0.05 })
            .collect();
        for thr in [0.5, 0.75] {
            let ap = compute_ap(&dets, &gts, thr);
            prop_assert!((0.0..=1.0).contains(&ap));
            let mut rotated = dets.clone();
            if !rotated.is_empty() {
                let k = rot % rotated.len();
                rotated.rotate_left(k);
            }
            prop_assert_eq!(compute_ap(&rotated, &gts, thr), ap);
            let mut extra = dets.clone();
            extra.push(Detection { image_id: 0, bbox: bb(500, 500, 5, 5), score: 0.01 });
            prop_assert_eq!(compute_ap(&extra, &gts, thr), ap);
        }
        let perfect: Vec<Detection> = gts.iter().map(|g| Detection { image_id: g.image_id, bbox: g.bbox, score: 1.0 }).collect();
        prop_assert_eq!(compute_ap(&perfect, &gts, 0.95), 1.0);
    }
}
