//! Python bindings. Documents cross the boundary as the same JSON the CLI
//! reads and writes, so Python code can use `json.loads` on every result.

use std::path::Path;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use refweave::dataset::{split_dataset as split, SplitConfig};
use refweave::evalkit::{compute_ap_report, compute_iou as iou, load_detections, load_ground_truth};
use refweave::layout::{import_regions, LayoutConfig};
use refweave::synth::{generate_document, SynthSpec};
use refweave::{BBox, Error};

create_exception!(refweave, RefweaveError, PyException);

fn to_py(e: Error) -> PyErr {
    RefweaveError::new_err((e.code(), e.to_string()))
}

pub fn ingest_pdf_json(path: &str) -> Result<String, Error> {
    let g = refweave::ingest_pdf(Path::new(path))?;
    Ok(String::from_utf8(g.to_json_bytes()).expect("utf-8 json"))
}

pub fn annotate_json(graph: &str, regions: Option<&str>) -> Result<String, Error> {
    let doc = refweave::load_pagegraph_json(graph.as_bytes())?;
    let imported = regions.map(|r| import_regions(&doc, r.as_bytes())).transpose()?;
    let refs = refweave::annotate(&doc, imported, &LayoutConfig::default())?;
    Ok(String::from_utf8(refs.to_json_bytes()).expect("utf-8 json"))
}

pub fn evaluate_json(gt: &str, dets: &str) -> Result<String, Error> {
    let gts = load_ground_truth(gt.as_bytes())?;
    let dets = load_detections(dets.as_bytes())?;
    Ok(serde_json::to_string(&compute_ap_report(&dets, &gts).to_json()).expect("serializable"))
}

pub fn synth_json(seed: u64) -> Result<(String, String), Error> {
    let (g, exp) = generate_document(&SynthSpec::from_seed(seed))?;
    let text = |b: Vec<u8>| String::from_utf8(b).expect("utf-8 json");
    Ok((text(g.to_json_bytes()), text(exp.to_json_bytes())))
}

/// Page-graph JSON for a born-digital PDF.
#[pyfunction]
fn ingest_pdf(path: &str) -> PyResult<String> {
    ingest_pdf_json(path).map_err(to_py)
}

/// refs JSON (regions, items, resolved links, records) for a page graph.
#[pyfunction]
#[pyo3(signature = (graph_json, regions_json=None))]
fn annotate(graph_json: &str, regions_json: Option<&str>) -> PyResult<String> {
    annotate_json(graph_json, regions_json).map_err(to_py)
}

/// (train ids, val ids), both sorted.
#[pyfunction]
#[pyo3(signature = (n, ratio=0.85, seed=0))]
fn split_dataset(n: usize, ratio: f64, seed: u64) -> PyResult<(Vec<usize>, Vec<usize>)> {
    split(n, &SplitConfig { ratio, seed }).map_err(|e| to_py(e.into()))
}

#[pyfunction]
fn compute_iou(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> PyResult<f64> {
    let bbox = |t: (f64, f64, f64, f64)| {
        BBox::new(t.0, t.1, t.2, t.3).ok_or_else(|| PyValueError::new_err(format!("invalid box {t:?}")))
    };
    Ok(iou(&bbox(a)?, &bbox(b)?))
}

/// Report JSON with ap, ap50, ap75, ap_m, ap_l in percent.
#[pyfunction]
fn evaluate(gt_json: &str, dets_json: &str) -> PyResult<String> {
    evaluate_json(gt_json, dets_json).map_err(to_py)
}

/// (graph JSON, expected JSON) for one synthetic document.
#[pyfunction]
fn synth_document(seed: u64) -> PyResult<(String, String)> {
    synth_json(seed).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "refweave")]
fn refweave_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RefweaveError", m.py().get_type::<RefweaveError>())?;
    m.add_function(wrap_pyfunction!(ingest_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(annotate, m)?)?;
    m.add_function(wrap_pyfunction!(split_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(compute_iou, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(synth_document, m)?)?;
    Ok(())
}
