//! COCO-style box detection evaluation: IoU, greedy matching, 101-point
//! interpolated AP and the five-column report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::geometry::BBox;

/// Detections kept per image, highest scores first.
pub const MAX_DETS: usize = 100;
pub const MEDIUM_AREA: (f64, f64) = (1024.0, 9216.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub image_id: u64,
    pub bbox: BBox,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub image_id: u64,
    pub bbox: BBox,
    pub area: f64,
}

impl GroundTruth {
    pub fn new(image_id: u64, bbox: BBox) -> Self {
        GroundTruth {
            image_id,
            bbox,
            area: bbox.area(),
        }
    }
}

pub fn compute_iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    inter / (a.area() + b.area() - inter)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaRange {
    pub lo: f64,
    pub hi: f64,
    pub lo_inclusive: bool,
    pub hi_inclusive: bool,
}

impl AreaRange {
    pub const SMALL: AreaRange = AreaRange {
        lo: 0.0,
        hi: MEDIUM_AREA.0,
        lo_inclusive: true,
        hi_inclusive: false,
    };
    pub const MEDIUM: AreaRange = AreaRange {
        lo: MEDIUM_AREA.0,
        hi: MEDIUM_AREA.1,
        lo_inclusive: true,
        hi_inclusive: true,
    };
    pub const LARGE: AreaRange = AreaRange {
        lo: MEDIUM_AREA.1,
        hi: f64::INFINITY,
        lo_inclusive: false,
        hi_inclusive: true,
    };

    fn contains(&self, area: f64) -> bool {
        let above = if self.lo_inclusive { area >= self.lo } else { area > self.lo };
        let below = if self.hi_inclusive { area <= self.hi } else { area < self.hi };
        above && below
    }
}

fn by_score(dets: &[Detection], idx: &mut [usize]) {
    idx.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
}

/// Greedy matching within one image, at most one detection per ground truth.
/// Detections are taken by descending score (stable for ties); each takes the
/// free ground truth of highest IoU at or above the threshold, and among
/// ignored/non-ignored candidates prefers non-ignored ones. Equal IoUs go to
/// the later ground truth, as in the reference COCO implementation.
fn match_image(dets: &[Detection], det_idx: &[usize], gts: &[GroundTruth], gt_idx: &[usize], ignored: &[bool], thr: f64) -> Vec<Option<usize>> {
    let mut taken = vec![false; gt_idx.len()];
    det_idx
        .iter()
        .map(|&d| {
            let mut best_iou = thr.min(1.0 - 1e-10);
            let mut best: Option<usize> = None;
            for (k, &g) in gt_idx.iter().enumerate() {
                if taken[k] {
                    continue;
                }
                if let Some(m) = best {
                    if !ignored[m] && ignored[k] {
                        break;
                    }
                }
                let iou = compute_iou(&dets[d].bbox, &gts[g].bbox);
                if iou < best_iou {
                    continue;
                }
                best_iou = iou;
                best = Some(k);
            }
            if let Some(k) = best {
                taken[k] = true;
            }
            best
        })
        .collect()
}

/// Matches detections to ground truths per image. Returns, for every input
/// detection, the index of the matched ground truth.
pub fn match_detections(dets: &[Detection], gts: &[GroundTruth], iou_threshold: f64) -> Vec<Option<usize>> {
    let mut out = vec![None; dets.len()];
    for (_, (mut d, g)) in group(dets, gts) {
        by_score(dets, &mut d);
        let ignored = vec![false; g.len()];
        for (di, m) in d.iter().zip(match_image(dets, &d, gts, &g, &ignored, iou_threshold)) {
            out[*di] = m.map(|k| g[k]);
        }
    }
    out
}

type Groups = BTreeMap<u64, (Vec<usize>, Vec<usize>)>;

fn group(dets: &[Detection], gts: &[GroundTruth]) -> Groups {
    let mut groups: Groups = BTreeMap::new();
    for (i, d) in dets.iter().enumerate() {
        groups.entry(d.image_id).or_default().0.push(i);
    }
    for (i, g) in gts.iter().enumerate() {
        groups.entry(g.image_id).or_default().1.push(i);
    }
    groups
}

/// AP at one threshold, restricted to an area range. `None` when no ground
/// truth falls in the range.
pub fn evaluate(dets: &[Detection], gts: &[GroundTruth], thr: f64, range: Option<AreaRange>) -> Option<f64> {
    let in_range = |a: f64| range.is_none_or(|r| r.contains(a));
    let mut scored: Vec<(f64, bool)> = Vec::new(); // (score, true positive), ignored detections dropped
    let mut n_gt = 0usize;
    for (_, (mut d, g)) in group(dets, gts) {
        by_score(dets, &mut d);
        d.truncate(MAX_DETS);
        let mut g_sorted = g.clone();
        g_sorted.sort_by_key(|&i| !in_range(gts[i].area));
        let ignored: Vec<bool> = g_sorted.iter().map(|&i| !in_range(gts[i].area)).collect();
        n_gt += ignored.iter().filter(|&&ig| !ig).count();
        for (&di, m) in d.iter().zip(match_image(dets, &d, gts, &g_sorted, &ignored, thr)) {
            match m {
                Some(k) if ignored[k] => {}
                Some(_) => scored.push((dets[di].score, true)),
                None if !in_range(dets[di].bbox.area()) => {}
                None => scored.push((dets[di].score, false)),
            }
        }
    }
    if n_gt == 0 {
        return None;
    }
    // stable: equal scores keep image order, then within-image order
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].0.total_cmp(&scored[a].0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut recall = Vec::with_capacity(order.len());
    let mut precision = Vec::with_capacity(order.len());
    for i in order {
        if scored[i].1 {
            tp += 1;
        } else {
            fp += 1;
        }
        recall.push(tp as f64 / n_gt as f64);
        precision.push(tp as f64 / (tp + fp) as f64);
    }
    for i in (1..precision.len()).rev() {
        if precision[i] > precision[i - 1] {
            precision[i - 1] = precision[i];
        }
    }
    let total: f64 = (0..=100)
        .map(|i| {
            let r = if i == 100 { 1.0 } else { i as f64 * 0.01 };
            let pos = recall.partition_point(|&x| x < r);
            precision.get(pos).copied().unwrap_or(0.0)
        })
        .sum();
    Some(total / 101.0)
}

/// 101-point interpolated AP over all ground truths. With no ground truths
/// the AP is 0 and a warning is logged.
pub fn compute_ap(dets: &[Detection], gts: &[GroundTruth], iou_threshold: f64) -> f64 {
    evaluate(dets, gts, iou_threshold, None).unwrap_or_else(|| {
        log::warn!("EmptyGroundTruth: AP over zero ground truths reported as 0");
        0.0
    })
}

/// AP values in [0, 1]; area strata without ground truths hold -1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApReport {
    pub ap: f64,
    pub ap50: f64,
    pub ap75: f64,
    pub ap_s: f64,
    pub ap_m: f64,
    pub ap_l: f64,
}

pub fn iou_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

fn mean_over_thresholds(dets: &[Detection], gts: &[GroundTruth], range: Option<AreaRange>) -> f64 {
    let vals: Vec<f64> = iou_thresholds().iter().filter_map(|&t| evaluate(dets, gts, t, range)).collect();
    if vals.is_empty() {
        -1.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

pub fn compute_ap_report(dets: &[Detection], gts: &[GroundTruth]) -> ApReport {
    ApReport {
        ap: mean_over_thresholds(dets, gts, None).max(0.0),
        ap50: compute_ap(dets, gts, 0.5),
        ap75: compute_ap(dets, gts, 0.75),
        ap_s: mean_over_thresholds(dets, gts, Some(AreaRange::SMALL)),
        ap_m: mean_over_thresholds(dets, gts, Some(AreaRange::MEDIUM)),
        ap_l: mean_over_thresholds(dets, gts, Some(AreaRange::LARGE)),
    }
}

fn percent(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        (v * 10000.0).round() / 100.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub ap: f64,
    pub ap50: f64,
    pub ap75: f64,
    pub ap_m: f64,
    pub ap_l: f64,
}

impl ApReport {
    /// The five report columns scaled to percent with two decimals.
    pub fn to_json(&self) -> ReportJson {
        ReportJson {
            ap: percent(self.ap),
            ap50: percent(self.ap50),
            ap75: percent(self.ap75),
            ap_m: percent(self.ap_m),
            ap_l: percent(self.ap_l),
        }
    }
}

#[derive(Deserialize)]
struct CocoImageIn {
    id: u64,
}

#[derive(Deserialize)]
struct CocoAnnotationIn {
    image_id: u64,
    bbox: [f64; 4],
    area: Option<f64>,
}

#[derive(Deserialize)]
struct CocoIn {
    images: Vec<CocoImageIn>,
    annotations: Vec<CocoAnnotationIn>,
}

#[derive(Deserialize)]
struct DetectionIn {
    image_id: u64,
    bbox: [f64; 4],
    score: f64,
}

fn parse<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<T, EvalError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| EvalError::InvalidInput {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn xywh(b: [f64; 4], path: String) -> Result<BBox, EvalError> {
    let bad = || EvalError::InvalidInput {
        path: path.clone(),
        message: "bbox needs finite values and positive width and height".into(),
    };
    if !(b[2] > 0.0 && b[3] > 0.0) || b.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    BBox::from_xywh(b[0], b[1], b[2], b[3]).ok_or_else(bad)
}

/// Ground truths from a COCO annotation file.
pub fn load_ground_truth(bytes: &[u8]) -> Result<Vec<GroundTruth>, EvalError> {
    let coco: CocoIn = parse(bytes)?;
    let ids: std::collections::HashSet<u64> = coco.images.iter().map(|i| i.id).collect();
    coco.annotations
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            if !ids.contains(&a.image_id) {
                return Err(EvalError::InvalidInput {
                    path: format!("annotations[{i}].image_id"),
                    message: format!("image {} not listed in images", a.image_id),
                });
            }
            let bbox = xywh(a.bbox, format!("annotations[{i}].bbox"))?;
            Ok(GroundTruth {
                image_id: a.image_id,
                bbox,
                area: a.area.unwrap_or(a.bbox[2] * a.bbox[3]),
            })
        })
        .collect()
}

/// Detections in the COCO results format.
pub fn load_detections(bytes: &[u8]) -> Result<Vec<Detection>, EvalError> {
    let raw: Vec<DetectionIn> = parse(bytes)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, d)| {
            if !(0.0..=1.0).contains(&d.score) {
                return Err(EvalError::InvalidInput {
                    path: format!("[{i}].score"),
                    message: "score must lie in [0, 1]".into(),
                });
            }
            Ok(Detection {
                image_id: d.image_id,
                bbox: xywh(d.bbox, format!("[{i}].bbox"))?,
                score: d.score,
            })
        })
        .collect()
}
