use super::{Page, TextRun};

#[derive(Debug, Clone)]
pub struct SuperscriptConfig {
    /// A superscript is smaller than this fraction of the line's dominant size.
    pub size_ratio: f64,
    /// ...and raised at least this fraction of the dominant size.
    pub rise_ratio: f64,
    /// Runs join a line when their baseline is within this fraction of its size.
    pub line_gap_ratio: f64,
    /// Runs small enough to be superscripts may also join from up to this
    /// fraction of the size above the line (TeX raises them about 0.41 em).
    pub superscript_reach: f64,
}

impl Default for SuperscriptConfig {
    fn default() -> Self {
        SuperscriptConfig {
            size_ratio: 0.75,
            rise_ratio: 0.30,
            line_gap_ratio: 0.4,
            superscript_reach: 0.6,
        }
    }
}

struct Line {
    seed_size: f64,
    seed_baseline: f64,
    members: Vec<usize>,
}

/// Sets the `superscript` flag on every run of the page; returns how many are set.
pub fn mark_superscripts(page: &mut Page, cfg: &SuperscriptConfig) -> usize {
    let runs = &page.runs;
    let mut by_size: Vec<usize> = (0..runs.len()).collect();
    by_size.sort_by(|&a, &b| {
        let (ra, rb) = (&runs[a], &runs[b]);
        rb.font_size
            .total_cmp(&ra.font_size)
            .then(rb.text.chars().count().cmp(&ra.text.chars().count()))
            .then(ra.baseline_y.total_cmp(&rb.baseline_y))
            .then(ra.bbox.x0.total_cmp(&rb.bbox.x0))
            .then(a.cmp(&b))
    });

    // Largest runs seed lines; smaller runs attach to the nearest seed in reach.
    let mut lines: Vec<Line> = Vec::new();
    for i in by_size {
        let r = &runs[i];
        let nearest = lines
            .iter_mut()
            .filter(|l| {
                let rise = l.seed_baseline - r.baseline_y;
                let reach = if rise > 0.0 && r.font_size < cfg.size_ratio * l.seed_size {
                    cfg.superscript_reach
                } else {
                    cfg.line_gap_ratio
                };
                rise.abs() <= reach * l.seed_size + 1e-9
            })
            .min_by(|a, b| {
                (r.baseline_y - a.seed_baseline)
                    .abs()
                    .total_cmp(&(r.baseline_y - b.seed_baseline).abs())
            });
        match nearest {
            Some(line) => line.members.push(i),
            None => lines.push(Line {
                seed_size: r.font_size,
                seed_baseline: r.baseline_y,
                members: vec![i],
            }),
        }
    }

    let mut flags = vec![false; runs.len()];
    for line in &lines {
        let members: Vec<&TextRun> = line.members.iter().map(|&i| &runs[i]).collect();
        let (size, baseline) = dominant(&members);
        for &i in &line.members {
            let r = &runs[i];
            let small = r.font_size < cfg.size_ratio * size;
            let raised = baseline - r.baseline_y >= cfg.rise_ratio * size - 1e-9;
            flags[i] = small && raised;
        }
    }
    let mut count = 0;
    for (r, f) in page.runs.iter_mut().zip(flags) {
        r.superscript = f;
        count += usize::from(f);
    }
    count
}

/// Dominant (size, baseline) of a line, weighted by character count.
/// Ties prefer the larger size and the lower baseline.
pub(crate) fn dominant(runs: &[&TextRun]) -> (f64, f64) {
    let size = weighted_mode(runs.iter().map(|r| (r.font_size, r.text.chars().count())), true);
    let baseline = weighted_mode(
        runs.iter()
            .filter(|r| (r.font_size - size).abs() < 0.05)
            .map(|r| (r.baseline_y, r.text.chars().count())),
        true,
    );
    (size, baseline)
}

fn weighted_mode(values: impl Iterator<Item = (f64, usize)>, prefer_larger: bool) -> f64 {
    let mut buckets: Vec<(i64, usize)> = Vec::new();
    for (v, w) in values {
        let key = (v * 10.0).round() as i64;
        match buckets.iter_mut().find(|(k, _)| *k == key) {
            Some((_, total)) => *total += w.max(1),
            None => buckets.push((key, w.max(1))),
        }
    }
    buckets
        .into_iter()
        .max_by(|a, b| {
            let by_key = if prefer_larger { a.0.cmp(&b.0) } else { b.0.cmp(&a.0) };
            a.1.cmp(&b.1).then(by_key)
        })
        .map(|(k, _)| k as f64 / 10.0)
        .unwrap_or(0.0)
}
