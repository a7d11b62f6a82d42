use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use refweave::pagegraph::{Page, TextRun};
use refweave::{BBox, PageGraph};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_refweave"));
    c.env_remove("REFWEAVE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pdf").join(name)
}

/// synth + annotate for `count` documents; returns the refs.json paths.
fn annotated_corpus(dir: &Path, count: usize) -> Vec<PathBuf> {
    let corpus = dir.join("corpus");
    let out = run(&["synth", "--seed", "0", "--count", &count.to_string(), "-o", s(&corpus)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut ids: Vec<String> = fs::read_dir(&corpus)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    ids.sort_by_key(|id| id.trim_start_matches("synth-").parse::<u64>().unwrap());
    assert_eq!(ids.len(), count);
    ids.iter()
        .map(|id| {
            let refs = dir.join("refs").join(format!("{id}.json"));
            let out = run(&["annotate", s(&corpus.join(id).join("graph.json")), "-o", s(&refs)]);
            assert!(out.status.success(), "{id}: {}", String::from_utf8_lossy(&out.stderr));
            refs
        })
        .collect()
}

#[test]
fn dataset_split_follows_floor_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    let refs = annotated_corpus(tmp.path(), 40);
    let out_dir = tmp.path().join("ds");
    let mut args = vec!["dataset"];
    args.extend(refs.iter().map(|p| s(p)));
    args.extend(["--ratio", "0.85", "--seed", "0", "-o", s(&out_dir)]);
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let n_records: usize = refs
        .iter()
        .map(|p| {
            let v: Value = serde_json::from_slice(&fs::read(p).unwrap()).unwrap();
            v["records"].as_array().unwrap().len()
        })
        .sum();
    let load = |name: &str| -> Value { serde_json::from_slice(&fs::read(out_dir.join(name)).unwrap()).unwrap() };
    let train = load("train.json");
    let val = load("val.json");
    let n_train = train["images"].as_array().unwrap().len();
    let n_val = val["images"].as_array().unwrap().len();
    assert_eq!(n_train, (0.85 * n_records as f64).floor() as usize);
    assert_eq!(n_train + n_val, n_records);

    // sidecar entries line up with annotation ids
    let sidecar = load("train_sidecar.json");
    let ann_ids: Vec<u64> = train["annotations"].as_array().unwrap().iter().map(|a| a["id"].as_u64().unwrap()).collect();
    let side_ids: Vec<u64> = sidecar["annotations"].as_array().unwrap().iter().map(|a| a["id"].as_u64().unwrap()).collect();
    assert_eq!(ann_ids, side_ids);
    assert_eq!(train["categories"][0]["name"], "reference_item");

    // a perfect detector on the val split scores 100 everywhere
    let dets: Vec<Value> = val["annotations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| serde_json::json!({"image_id": a["image_id"], "bbox": a["bbox"], "score": 1.0}))
        .collect();
    let dets_path = tmp.path().join("dets.json");
    fs::write(&dets_path, serde_json::to_vec(&dets).unwrap()).unwrap();
    let report = tmp.path().join("report.json");
    let out = run(&["eval", "--gt", s(&out_dir.join("val.json")), "--dets", s(&dets_path), "-o", s(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    for k in ["ap", "ap50", "ap75", "ap_m", "ap_l"] {
        let v = r[k].as_f64().unwrap();
        assert!(v == 100.0 || v == -1.0, "{k} = {v}");
    }
    assert_eq!(r["ap"], 100.0);
}

#[test]
fn missing_references_title_exits_1_with_code() {
    let tmp = tempfile::tempdir().unwrap();
    let mut page = Page::new(0, 612.0, 792.0);
    for (i, w) in ["Just", "a", "sentence."].iter().enumerate() {
        let x = 72.0 + 40.0 * i as f64;
        page.runs.push(TextRun::new(*w, BBox::new(x, 92.0, x + 30.0, 102.0).unwrap(), 10.0, 100.0));
    }
    let mut g = PageGraph::new("plain", vec![page]);
    g.annotate_passes();
    let graph = tmp.path().join("graph.json");
    fs::write(&graph, g.to_json_bytes()).unwrap();
    let out = run(&["annotate", s(&graph), "-o", s(&tmp.path().join("refs.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error(&out)["error"]["code"], "refitems.SectionNotFound");
    assert!(!tmp.path().join("refs.json").exists());
}

#[test]
fn invalid_input_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"source_id":"x","units":"pt","pages":[{"index":1,"width":10,"height":10,"runs":[],"links":[]}]}"#)
        .unwrap();
    let out = run(&["annotate", s(&bad), "-o", s(&tmp.path().join("r.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"]["code"], "pagegraph.SchemaViolation");

    let out = run(&["annotate", s(&tmp.path().join("absent.json")), "-o", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"]["code"], "cli.Io");

    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"]["code"], "cli.Usage");

    let out = run(&["dataset", s(&bad), "--ratio", "1.5", "-o", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"]["code"], "dataset.InvalidRatio");

    let out = run(&["ingest", s(&fixture("encrypted.pdf")), "-o", s(&tmp.path().join("g.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error(&out)["error"]["code"], "pagegraph.EncryptedPdf");

    let out = bin()
        .env("REFWEAVE_THREADS", "many")
        .args(["synth", "--count", "1", "-o", s(&tmp.path().join("c"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_0() {
    assert!(run(&["--help"]).status.success());
    assert!(run(&["dataset", "--help"]).status.success());
}

#[test]
fn ingest_annotate_overlay_on_pdf() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = tmp.path().join("graph.json");
    let refs = tmp.path().join("refs.json");
    let svg = tmp.path().join("page.svg");
    assert!(run(&["ingest", s(&fixture("paper_bracket_2col.pdf")), "-o", s(&graph)]).status.success());
    assert!(run(&["annotate", s(&graph), "-o", s(&refs)]).status.success());
    let v: Value = serde_json::from_slice(&fs::read(&refs).unwrap()).unwrap();
    let page = v["resolved"][0]["source"]["page"].as_u64().unwrap().to_string();
    let out = run(&["overlay", s(&graph), s(&refs), "--page", &page, "-o", s(&svg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    for color in ["#e6c700", "#1a9c1a", "#d62020"] {
        assert!(text.contains(color), "missing {color}");
    }
    let out = run(&["overlay", s(&graph), s(&refs), "--page", "999", "-o", s(&svg)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn annotate_with_imported_regions() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    assert!(run(&["synth", "--seed", "3", "--count", "1", "-o", s(&corpus)]).status.success());
    let graph = corpus.join("synth-3/graph.json");
    let heur = tmp.path().join("heur.json");
    assert!(run(&["annotate", s(&graph), "-o", s(&heur)]).status.success());
    let v: Value = serde_json::from_slice(&fs::read(&heur).unwrap()).unwrap();
    // feed the heuristic regions back in as an external segmentation
    let regions: Vec<Value> = v["regions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| serde_json::json!({"page": r["page"], "bbox": r["bbox"], "category": r["category"]}))
        .collect();
    let ext = tmp.path().join("ext.json");
    let file = serde_json::json!({"source_id": "synth-3", "regions": regions});
    fs::write(&ext, serde_json::to_vec(&file).unwrap()).unwrap();
    let imported = tmp.path().join("imp.json");
    let out = run(&["annotate", s(&graph), "--regions", s(&ext), "-o", s(&imported)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let w: Value = serde_json::from_slice(&fs::read(&imported).unwrap()).unwrap();
    assert_eq!(v["items"].as_array().unwrap().len(), w["items"].as_array().unwrap().len());

    fs::write(&ext, r#"{"source_id":"synth-3","regions":[{"page":0,"bbox":[0,0,10,10],"category":"Sidebar"}]}"#).unwrap();
    let out = run(&["annotate", s(&graph), "--regions", s(&ext), "-o", s(&imported)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"]["code"], "layout.UnknownCategory");
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = bin().env("REFWEAVE_THREADS", "1").args(["synth", "--seed", "7", "--count", "6", "-o", s(&a)]).output().unwrap();
    assert!(out.status.success());
    let out = bin().env("REFWEAVE_THREADS", "0").args(["synth", "--seed", "7", "--count", "6", "-o", s(&b)]).output().unwrap();
    assert!(out.status.success());
    for seed in 7..13 {
        for f in ["graph.json", "expected.json"] {
            let rel = format!("synth-{seed}/{f}");
            assert_eq!(fs::read(a.join(&rel)).unwrap(), fs::read(b.join(&rel)).unwrap(), "{rel}");
        }
    }
}
