//! Ground-truth records, the seeded train/val split, and COCO output.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::DatasetError;
use crate::geometry::{round3, BBox};
use crate::links::ResolvedReference;
use crate::refitems::{PageBox, ReferenceItem, ReferenceSection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub item_id: usize,
    /// Box relative to the crop origin.
    pub bbox: BBox,
    pub explicit_key: String,
    pub implicit_keys: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub source_id: String,
    pub list_image: PageBox,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub ratio: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { ratio: 0.85, seed: 0 }
    }
}

/// Annotation boxes thinner than this (pt) are dropped as slivers.
const MIN_SIDE: f64 = 1e-3;

/// One record per List region of the section; every item overlapping the
/// region contributes an annotation clipped to the crop.
pub fn assemble_records(
    source_id: &str,
    section: &ReferenceSection,
    items: &[ReferenceItem],
    resolved: &[ResolvedReference],
) -> Result<Vec<GroundTruthRecord>, DatasetError> {
    if section.list_regions.is_empty() {
        return Err(DatasetError::EmptySection);
    }
    let records = section
        .list_regions
        .iter()
        .map(|region| {
            let crop = region.bbox;
            let annotations = items
                .iter()
                .filter_map(|item| {
                    let clipped = BBox::union_all(
                        item.boxes
                            .iter()
                            .filter(|b| b.page == region.page)
                            .filter_map(|b| b.bbox.intersection(&crop))
                            .collect::<Vec<_>>()
                            .iter(),
                    )?;
                    if clipped.width() < MIN_SIDE || clipped.height() < MIN_SIDE {
                        return None;
                    }
                    Some(Annotation {
                        item_id: item.item_id,
                        bbox: clipped.translate(-crop.x0, -crop.y0),
                        explicit_key: item.explicit_key.clone(),
                        implicit_keys: resolved
                            .iter()
                            .filter(|r| r.target_item == item.item_id)
                            .map(|r| r.implicit_key.clone())
                            .collect(),
                        text: item.text.clone(),
                    })
                })
                .collect();
            GroundTruthRecord {
                source_id: source_id.to_string(),
                list_image: PageBox {
                    page: region.page,
                    bbox: crop,
                },
                annotations,
            }
        })
        .collect();
    Ok(records)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic shuffle split of `0..n`. Both id lists come back sorted.
pub fn split_dataset(n: usize, cfg: &SplitConfig) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    if !(cfg.ratio > 0.0 && cfg.ratio < 1.0) {
        return Err(DatasetError::InvalidRatio(cfg.ratio));
    }
    let n_train = (cfg.ratio * n as f64 + 1e-9).floor() as usize;
    let mut keyed: Vec<(u64, usize)> = (0..n)
        .map(|i| (splitmix64(cfg.seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))), i))
        .collect();
    keyed.sort_unstable();
    let mut train: Vec<usize> = keyed[..n_train].iter().map(|&(_, i)| i).collect();
    let mut val: Vec<usize> = keyed[n_train..].iter().map(|&(_, i)| i).collect();
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

#[derive(Serialize)]
struct CocoImage {
    id: usize,
    file_name: String,
    width: u64,
    height: u64,
}

#[derive(Serialize)]
struct CocoAnnotation {
    id: usize,
    image_id: usize,
    category_id: u32,
    bbox: [f64; 4],
    area: f64,
    iscrowd: u8,
}

#[derive(Serialize)]
struct CocoCategory {
    id: u32,
    name: &'static str,
}

#[derive(Serialize)]
struct Coco {
    images: Vec<CocoImage>,
    annotations: Vec<CocoAnnotation>,
    categories: Vec<CocoCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarEntry {
    pub id: usize,
    pub explicit_key: String,
    pub implicit_keys: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub annotations: Vec<SidecarEntry>,
}

pub const CATEGORY_NAME: &str = "reference_item";

/// COCO file and sidecar for the records selected by `ids`. Image ids are the
/// positions in `records`; annotation ids count from 1 in output order.
pub fn emit_coco(records: &[GroundTruthRecord], ids: &[usize]) -> (Vec<u8>, Vec<u8>) {
    let mut coco = Coco {
        images: Vec::new(),
        annotations: Vec::new(),
        categories: vec![CocoCategory {
            id: 1,
            name: CATEGORY_NAME,
        }],
    };
    let mut sidecar = Sidecar { annotations: Vec::new() };
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let local: Vec<usize> = records
        .iter()
        .map(|r| {
            let n = seen.entry(r.source_id.as_str()).or_default();
            *n += 1;
            *n - 1
        })
        .collect();
    for &id in ids {
        let rec = &records[id];
        let local = local[id];
        coco.images.push(CocoImage {
            id,
            file_name: format!("{}_{}.png", rec.source_id, local),
            width: rec.list_image.bbox.width().round() as u64,
            height: rec.list_image.bbox.height().round() as u64,
        });
        for a in &rec.annotations {
            let (w, h) = (round3(a.bbox.width()), round3(a.bbox.height()));
            if w <= 0.0 || h <= 0.0 {
                continue;
            }
            let ann_id = coco.annotations.len() + 1;
            coco.annotations.push(CocoAnnotation {
                id: ann_id,
                image_id: id,
                category_id: 1,
                bbox: [round3(a.bbox.x0), round3(a.bbox.y0), w, h],
                area: w * h,
                iscrowd: 0,
            });
            sidecar.annotations.push(SidecarEntry {
                id: ann_id,
                explicit_key: a.explicit_key.clone(),
                implicit_keys: a.implicit_keys.clone(),
                text: a.text.clone(),
            });
        }
    }
    let mut coco_bytes = serde_json::to_vec(&coco).expect("serializable");
    coco_bytes.push(b'\n');
    let mut side_bytes = serde_json::to_vec(&sidecar).expect("serializable");
    side_bytes.push(b'\n');
    (coco_bytes, side_bytes)
}
