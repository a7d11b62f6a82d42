//! Seeded generator of synthetic documents with known reference items and
//! citation links, used as an end-to-end oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SynthError;
use crate::geometry::{BBox, Point};
use crate::pagegraph::{mark_superscripts, reading_order, LinkAnnotation, LinkKind, Page, PageGraph, TextRun};
use crate::refitems::{MarkerStyle, PageBox};

const PAGE_W: f64 = 612.0;
const PAGE_H: f64 = 792.0;
const MARGIN: f64 = 72.0;
const BOTTOM: f64 = PAGE_H - MARGIN;

const TITLE_SIZE: f64 = 14.0;
const HEADING_SIZE: f64 = 12.0;
const BODY_SIZE: f64 = 10.0;
const BODY_LEADING: f64 = 12.0;
const REF_SIZE: f64 = 9.0;
const REF_LEADING: f64 = 11.0;

const BODY_WORDS: [&str; 40] = [
    "the", "model", "data", "results", "we", "show", "that", "method", "layout", "page", "text", "with", "for", "of",
    "and", "a", "in", "on", "is", "are", "our", "this", "approach", "document", "reading", "prior", "analysis",
    "learning", "structure", "network", "evidence", "section", "using", "from", "as", "by", "can", "be", "which",
    "these",
];
const HEADINGS: [&str; 8] = ["Introduction", "Background", "Method", "Experiments", "Results", "Discussion", "Analysis", "Evaluation"];
const SURNAMES: [&str; 10] = ["Smith", "Chen", "Garcia", "Kumar", "Nguyen", "Weber", "Ivanova", "Okafor", "Tanaka", "Rossi"];
const INITIALS: [&str; 8] = ["A.", "B.", "J.", "K.", "L.", "M.", "R.", "S."];
const VENUES: [&str; 5] = ["Proc.", "Journal", "Trans.", "Workshop", "Letters"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_pages: usize,
    pub n_items: usize,
    pub n_citations: usize,
    pub columns: u8,
    pub marker_style: MarkerStyle,
    pub wrap_probability: f64,
}

impl SynthSpec {
    /// Spec varied deterministically by seed: marker style cycles fastest,
    /// then column count, then wrap probability.
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_5EED);
        let n_items = rng.random_range(3..=40);
        SynthSpec {
            seed,
            n_pages: 12,
            n_items,
            n_citations: rng.random_range(0..=2 * n_items),
            columns: ((seed / 3) % 2 + 1) as u8,
            marker_style: [MarkerStyle::Bracket, MarkerStyle::Dot, MarkerStyle::Paren][(seed % 3) as usize],
            wrap_probability: [0.0, 0.5, 1.0][((seed / 6) % 3) as usize],
        }
    }

    pub fn source_id(&self) -> String {
        format!("synth-{}", self.seed)
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        if self.n_items == 0 || self.n_items > 999 {
            return bad("n_items must be in 1..=999");
        }
        if !matches!(self.columns, 1 | 2) {
            return bad("columns must be 1 or 2");
        }
        if !(0.0..=1.0).contains(&self.wrap_probability) {
            return bad("wrap_probability must lie in [0, 1]");
        }
        if self.n_pages == 0 {
            return bad("n_pages must be positive");
        }
        if self.marker_style == MarkerStyle::CloseParen {
            return bad("marker style must be bracket, dot or paren");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedItem {
    pub item_id: usize,
    pub explicit_key: String,
    pub text: String,
    pub boxes: Vec<PageBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedLink {
    pub source_page: usize,
    pub source_rect: BBox,
    pub implicit_key: String,
    pub target_item: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub source_id: String,
    pub items: Vec<ExpectedItem>,
    pub links: Vec<ExpectedLink>,
}

impl Expected {
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec(self).expect("serializable");
        v.push(b'\n');
        v
    }
}

fn width(text: &str, size: f64) -> f64 {
    0.5 * size * text.chars().count() as f64
}

fn make_run(text: &str, x0: f64, size: f64, baseline: f64) -> TextRun {
    let bbox = BBox::new(x0, baseline - 0.8 * size, x0 + width(text, size), baseline + 0.2 * size).expect("non-empty word");
    TextRun::new(text, bbox, size, baseline)
}

/// Column/page cursor. `last` is the baseline of the last line in the
/// current column.
struct Flow {
    cols: Vec<(f64, f64)>,
    first_top: f64,
    page: usize,
    col: usize,
    last: Option<f64>,
    pages: Vec<Page>,
}

impl Flow {
    fn new(columns: u8) -> Self {
        let cols = if columns == 1 {
            vec![(MARGIN, PAGE_W - MARGIN)]
        } else {
            vec![(MARGIN, 297.0), (315.0, PAGE_W - MARGIN)]
        };
        Flow {
            cols,
            first_top: MARGIN,
            page: 0,
            col: 0,
            last: None,
            pages: vec![Page::new(0, PAGE_W, PAGE_H)],
        }
    }

    fn column(&self) -> (f64, f64) {
        self.cols[self.col]
    }

    fn top(&self) -> f64 {
        if self.page == 0 {
            self.first_top
        } else {
            MARGIN
        }
    }

    fn advance(&mut self) {
        self.col += 1;
        if self.col == self.cols.len() {
            self.col = 0;
            self.page += 1;
            self.pages.push(Page::new(self.page, PAGE_W, PAGE_H));
        }
        self.last = None;
    }

    /// Baseline for a block's first line; `extra` is the height the block
    /// needs below that baseline. Moves to the next column when it won't fit.
    fn place(&mut self, size: f64, step: f64, extra: f64) -> f64 {
        let at = |f: &Flow| match f.last {
            Some(b) => b + step,
            None => f.top() + 0.8 * size,
        };
        let mut baseline = at(self);
        if self.last.is_some() && baseline + extra > BOTTOM {
            self.advance();
            baseline = at(self);
        }
        baseline
    }

    fn push(&mut self, run: TextRun) {
        self.pages[self.page].runs.push(run);
    }
}

struct PendingLink {
    page: usize,
    rect: BBox,
    key: String,
    item: usize,
}

fn citation_key(style: MarkerStyle, n: usize) -> String {
    match style {
        MarkerStyle::Paren => format!("({n})"),
        _ => format!("[{n}]"),
    }
}

fn item_label(style: MarkerStyle, n: usize) -> String {
    match style {
        MarkerStyle::Bracket => format!("[{n}]"),
        MarkerStyle::Dot => format!("{n}."),
        MarkerStyle::Paren => format!("({n})"),
        MarkerStyle::CloseParen => format!("{n})"),
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str]) -> &'a str {
    words[rng.random_range(0..words.len())]
}

/// Lays out one paragraph of body text; tokens glued to a citation never
/// start a line apart from it.
fn paragraph(flow: &mut Flow, rng: &mut ChaCha8Rng, citations: &[(usize, String)], gap: f64, links: &mut Vec<PendingLink>) {
    let n_words = rng.random_range(25..45);
    let mut groups: Vec<Vec<(String, Option<usize>)>> = (0..n_words).map(|_| vec![(pick(rng, &BODY_WORDS).to_string(), None)]).collect();
    for (item, key) in citations {
        let at = rng.random_range(1..groups.len());
        groups[at].push((key.clone(), Some(*item)));
    }
    let space = width(" ", BODY_SIZE);
    let mut lines: Vec<Vec<(String, Option<usize>, f64)>> = vec![Vec::new()];
    let (x0, x1) = flow.column();
    let mut x = x0;
    for g in groups {
        let w: f64 = g.iter().map(|(t, _)| width(t, BODY_SIZE)).sum::<f64>() + space * (g.len() - 1) as f64;
        let line = lines.last_mut().expect("one line");
        if !line.is_empty() && x + w > x1 {
            lines.push(Vec::new());
            x = x0;
        }
        let line = lines.last_mut().expect("one line");
        for (t, c) in g {
            let tw = width(&t, BODY_SIZE);
            line.push((t, c, x));
            x += tw + space;
        }
    }
    for (i, line) in lines.into_iter().enumerate() {
        let step = if i == 0 { BODY_LEADING + gap } else { BODY_LEADING };
        let baseline = flow.place(BODY_SIZE, step, 0.2 * BODY_SIZE);
        // the paragraph may have moved to the next column
        let shift = flow.column().0 - x0;
        for (t, c, lx) in line {
            let run = make_run(&t, lx + shift, BODY_SIZE, baseline);
            if let Some(item) = c {
                links.push(PendingLink {
                    page: flow.page,
                    rect: run.bbox,
                    key: t.clone(),
                    item,
                });
            }
            flow.push(run);
        }
        flow.last = Some(baseline);
    }
}

fn reference_tokens(rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut t = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        t.push(pick(rng, &INITIALS).to_string());
        t.push(format!("{},", pick(rng, &SURNAMES)));
    }
    for _ in 0..rng.random_range(3..7) {
        t.push(pick(rng, &BODY_WORDS).to_string());
    }
    t.push(pick(rng, &VENUES).to_string());
    t.push(format!("{}.", rng.random_range(1990..2024)));
    for _ in 0..30 {
        t.push(pick(rng, &BODY_WORDS).to_string());
    }
    t
}

/// Builds a document and the oracle describing its bibliography and links.
pub fn generate_document(spec: &SynthSpec) -> Result<(PageGraph, Expected), SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut flow = Flow::new(spec.columns);

    // spanning title
    let mut x = MARGIN;
    let title_base = MARGIN + 0.8 * TITLE_SIZE;
    while x < 330.0 {
        let w = pick(&mut rng, &BODY_WORDS);
        let word = format!("{}{}", w[..1].to_uppercase(), &w[1..]);
        if x + width(&word, TITLE_SIZE) > PAGE_W - MARGIN {
            break;
        }
        flow.push(make_run(&word, x, TITLE_SIZE, title_base));
        x += width(&word, TITLE_SIZE) + width(" ", TITLE_SIZE);
    }
    flow.first_top = title_base + 0.2 * TITLE_SIZE + 24.0;

    // body
    let n_paras = (spec.n_citations.div_ceil(3) + 2).max(4);
    let mut per_para: Vec<Vec<(usize, String)>> = vec![Vec::new(); n_paras];
    for i in 0..spec.n_citations {
        let item = rng.random_range(0..spec.n_items);
        per_para[i % (n_paras - 1)].push((item, citation_key(spec.marker_style, item + 1)));
    }
    let mut pending = Vec::new();
    let mut heading_no = 0;
    for (p, cites) in per_para.iter().enumerate() {
        let mut gap = BODY_LEADING;
        if p % 3 == 0 {
            heading_no += 1;
            let text = format!("{heading_no}. {}", HEADINGS[(heading_no - 1) % HEADINGS.len()]);
            heading(&mut flow, &text, 4.0 * BODY_LEADING);
            gap = 8.0;
        }
        paragraph(&mut flow, &mut rng, cites, gap, &mut pending);
    }

    // bibliography
    let section_title = match (spec.seed / 18) % 4 {
        0 => "References".to_string(),
        1 => format!("{}. References", heading_no + 1),
        2 => "REFERENCES".to_string(),
        _ => "Bibliography".to_string(),
    };
    heading(&mut flow, &section_title, 6.0 + 3.0 * REF_LEADING);
    let indent = width(&item_label(spec.marker_style, spec.n_items), REF_SIZE) + width(" ", REF_SIZE);
    let space = width(" ", REF_SIZE);
    let mut items = Vec::with_capacity(spec.n_items);
    let mut targets = Vec::with_capacity(spec.n_items);
    for i in 0..spec.n_items {
        let label = item_label(spec.marker_style, i + 1);
        let tokens = reference_tokens(&mut rng);
        let wraps = rng.random_bool(spec.wrap_probability);
        let (c0, c1) = flow.column();
        let text_w = c1 - c0 - indent;
        // fill the first line, then optionally part of a second
        let mut lines: Vec<Vec<String>> = vec![Vec::new()];
        let mut used = 0.0;
        let mut rest = tokens.into_iter().peekable();
        while let Some(t) = rest.peek() {
            let w = width(t, REF_SIZE);
            if used + w > text_w {
                break;
            }
            used += w + space;
            lines[0].push(rest.next().expect("peeked"));
        }
        if wraps {
            let take = rng.random_range(1..=4);
            lines.push(rest.take(take).collect());
        }
        let first_step = if i == 0 { 18.0 } else { REF_LEADING };
        let extra = (lines.len() - 1) as f64 * REF_LEADING + 0.2 * REF_SIZE;
        let baseline = flow.place(REF_SIZE, first_step, extra);
        let (c0, _) = flow.column();
        let mut runs = vec![make_run(&label, c0, REF_SIZE, baseline)];
        for (li, line) in lines.iter().enumerate() {
            let y = baseline + li as f64 * REF_LEADING;
            let mut x = c0 + indent;
            for t in line {
                runs.push(make_run(t, x, REF_SIZE, y));
                x += width(t, REF_SIZE) + space;
            }
        }
        let bbox = BBox::union_all(runs.iter().map(|r| &r.bbox)).expect("item has runs");
        targets.push((flow.page, Point::new(runs[0].bbox.x0 + 1.0, runs[0].bbox.y0 + 1.0)));
        items.push(ExpectedItem {
            item_id: i,
            explicit_key: label,
            text: runs.iter().map(|r| r.text.as_str()).collect::<Vec<_>>().join(" "),
            boxes: vec![PageBox { page: flow.page, bbox }],
        });
        for r in runs {
            flow.push(r);
        }
        flow.last = Some(baseline + (lines.len() - 1) as f64 * REF_LEADING);
    }

    let needed = flow.pages.len();
    if needed > spec.n_pages {
        return Err(SynthError::Overflow {
            needed,
            budget: spec.n_pages,
        });
    }

    let mut links: Vec<ExpectedLink> = pending
        .iter()
        .map(|p| ExpectedLink {
            source_page: p.page,
            source_rect: p.rect,
            implicit_key: p.key.clone(),
            target_item: p.item,
        })
        .collect();
    for p in &pending {
        let (target_page, target_point) = targets[p.item];
        flow.pages[p.page].links.push(LinkAnnotation {
            source_page: p.page,
            source_rect: p.rect,
            target_page,
            target_point,
            kind: LinkKind::Internal,
        });
    }
    links.sort_by(|a, b| {
        a.source_page
            .cmp(&b.source_page)
            .then(a.source_rect.y0.total_cmp(&b.source_rect.y0))
            .then(a.source_rect.x0.total_cmp(&b.source_rect.x0))
    });

    let mut pages = flow.pages;
    for page in &mut pages {
        reading_order(page, &Default::default());
        mark_superscripts(page, &Default::default());
    }
    let source_id = spec.source_id();
    Ok((
        PageGraph::new(&source_id, pages),
        Expected {
            source_id,
            items,
            links,
        },
    ))
}

/// Heading on its own line, kept with `reserve` points of what follows.
fn heading(flow: &mut Flow, text: &str, reserve: f64) {
    let baseline = flow.place(HEADING_SIZE, 2.0 * BODY_LEADING + 6.0, reserve);
    let mut x = flow.column().0;
    for w in text.split(' ') {
        flow.push(make_run(w, x, HEADING_SIZE, baseline));
        x += width(w, HEADING_SIZE) + width(" ", HEADING_SIZE);
    }
    flow.last = Some(baseline);
}

/// Documents for seeds `base_seed..base_seed + count`, in seed order.
pub fn generate_corpus(base_seed: u64, count: usize) -> Result<Vec<(PageGraph, Expected)>, SynthError> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| generate_document(&SynthSpec::from_seed(base_seed + i)))
        .collect()
}
