//! Command-line front end. [`run`] returns the process exit status so tests
//! can drive it in-process.
//!
//! Exit 0 on success, 1 on a recoverable extraction failure, 2 on invalid
//! input. Failures print `{"error":{"code":..,"message":..}}` on stderr.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{emit_coco, split_dataset, SplitConfig};
use crate::error::Error;
use crate::evalkit::{compute_ap_report, load_detections, load_ground_truth};
use crate::layout::{import_regions, LayoutConfig};
use crate::overlay::render_page;
use crate::pagegraph::{ingest_pdf, load_pagegraph_json, PageGraph};
use crate::pipeline::{annotate, RefsFile};
use crate::synth::generate_corpus;

pub const THREADS_ENV: &str = "REFWEAVE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "refweave", version, about = "Internal-reference extraction and COCO dataset tooling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert a born-digital PDF into page-graph JSON.
    Ingest {
        pdf: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Find regions, reference items and resolved links in a page graph.
    Annotate {
        graph: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// External segmentation to use instead of the built-in heuristics.
        #[arg(long)]
        regions: Option<PathBuf>,
    },
    /// Split the records of annotated documents into COCO train/val files.
    Dataset {
        #[arg(required = true)]
        refs: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.85)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Score detections against COCO ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        dets: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render one page with its regions and keys as SVG.
    Overlay {
        graph: PathBuf,
        refs: PathBuf,
        #[arg(long)]
        page: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate a synthetic corpus with oracle annotations.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Failure reported on stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: String,
    pub message: String,
    pub exit: i32,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: e.code().to_string(),
            message: e.to_string(),
            exit: if e.is_recoverable() { 1 } else { 2 },
        }
    }
}

impl Failure {
    fn input(path: &Path, message: impl std::fmt::Display) -> Self {
        Failure {
            code: "cli.InvalidInput".into(),
            message: format!("{}: {message}", path.display()),
            exit: 2,
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure {
            code: "cli.Io".into(),
            message: format!("{}: {e}", path.display()),
            exit: 2,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            code: &'a str,
            message: &'a str,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Wrapper {
            error: Body {
                code: &self.code,
                message: &self.message,
            },
        })
        .expect("serializable")
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let f = Failure {
                code: "cli.Usage".into(),
                message: e.to_string().trim().to_string(),
                exit: 2,
            };
            eprintln!("{}", f.to_json());
            return f.exit;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            log::debug!("{} failed: {}", f.code, f.message);
            eprintln!("{}", f.to_json());
            f.exit
        }
    }
}

/// Thread count requested through the environment; 0 or unset means auto.
pub fn configured_threads() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v.trim().parse().map_err(|_| Failure {
            code: "cli.InvalidInput".into(),
            message: format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"),
            exit: 2,
        }),
    }
}

fn pool() -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(configured_threads()?)
        .build()
        .map_err(|e| Failure {
            code: "cli.Threads".into(),
            message: e.to_string(),
            exit: 2,
        })
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

fn load_graph(path: &Path) -> CliResult<PageGraph> {
    Ok(load_pagegraph_json(&read(path)?).map_err(Error::from)?)
}

fn load_refs(path: &Path) -> CliResult<RefsFile> {
    let bytes = read(path)?;
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    serde_path_to_error::deserialize(de).map_err(|e| Failure::input(path, format!("at `{}`: {}", e.path(), e.inner())))
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Ingest { pdf, output } => {
            let graph = ingest_pdf(&pdf).map_err(Error::from)?;
            write(&output, &graph.to_json_bytes())
        }
        Command::Annotate { graph, output, regions } => {
            let doc = load_graph(&graph)?;
            let imported = match regions {
                Some(p) => Some(import_regions(&doc, &read(&p)?).map_err(Error::from)?),
                None => None,
            };
            let refs = annotate(&doc, imported, &LayoutConfig::default())?;
            write(&output, &refs.to_json_bytes())
        }
        Command::Dataset {
            refs,
            ratio,
            seed,
            output,
        } => {
            let cfg = SplitConfig { ratio, seed };
            // reject a bad ratio before reading anything
            split_dataset(0, &cfg).map_err(Error::from)?;
            let files: Vec<RefsFile> = pool()?.install(|| refs.par_iter().map(|p| load_refs(p)).collect::<CliResult<_>>())?;
            let records: Vec<_> = files.into_iter().flat_map(|f| f.records).collect();
            let (train, val) = split_dataset(records.len(), &cfg).map_err(Error::from)?;
            for (name, ids) in [("train", &train), ("val", &val)] {
                let (coco, sidecar) = emit_coco(&records, ids);
                write(&output.join(format!("{name}.json")), &coco)?;
                write(&output.join(format!("{name}_sidecar.json")), &sidecar)?;
            }
            log::info!("{} records: {} train, {} val", records.len(), train.len(), val.len());
            Ok(())
        }
        Command::Eval { gt, dets, output } => {
            let gts = load_ground_truth(&read(&gt)?).map_err(Error::from)?;
            let dets = load_detections(&read(&dets)?).map_err(Error::from)?;
            let report = compute_ap_report(&dets, &gts).to_json();
            let mut bytes = serde_json::to_vec(&report).expect("serializable");
            bytes.push(b'\n');
            match output {
                Some(p) => write(&p, &bytes),
                None => {
                    print!("{}", String::from_utf8_lossy(&bytes));
                    Ok(())
                }
            }
        }
        Command::Overlay {
            graph,
            refs,
            page,
            output,
        } => {
            let doc = load_graph(&graph)?;
            let refs_file = load_refs(&refs)?;
            let svg = render_page(&doc, &refs_file, page).ok_or_else(|| {
                Failure::input(&graph, format!("page {page} out of range, document has {}", doc.pages.len()))
            })?;
            write(&output, svg.as_bytes())
        }
        Command::Synth { seed, count, output } => {
            if count == 0 {
                return Err(Failure {
                    code: "synthcorpus.InvalidSpec".into(),
                    message: "count must be at least 1".into(),
                    exit: 2,
                });
            }
            let corpus = pool()?.install(|| generate_corpus(seed, count)).map_err(Error::from)?;
            for (doc, expected) in &corpus {
                let dir = output.join(&doc.source_id);
                write(&dir.join("graph.json"), &doc.to_json_bytes())?;
                write(&dir.join("expected.json"), &expected.to_json_bytes())?;
            }
            Ok(())
        }
    }
}
