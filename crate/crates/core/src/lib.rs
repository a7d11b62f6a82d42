//! Extraction of internal references (bibliography items, captions,
//! equation tags, footnotes) from born-digital documents, and tooling to turn
//! them into detection datasets and evaluate detectors on them.
//!
//! The pipeline runs PDF ingest ([`pagegraph`]), page segmentation
//! ([`layout`]), explicit-key extraction ([`refitems`]), link resolution
//! ([`links`]) and dataset assembly ([`dataset`]). [`evalkit`] scores
//! detections COCO-style and [`synth`] generates documents with known answers.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod evalkit;
pub mod geometry;
pub mod layout;
pub mod links;
pub mod overlay;
pub mod pagegraph;
pub mod pipeline;
pub mod refitems;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{BBox, Point};
pub use layout::{Region, RegionCategory};
pub use pagegraph::{ingest_pdf, load_pagegraph_json, PageGraph};
pub use pipeline::{annotate, RefsFile};
