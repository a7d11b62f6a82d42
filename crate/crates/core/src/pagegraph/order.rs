use std::collections::{HashMap, HashSet};

use super::{Page, TextRun};

#[derive(Debug, Clone)]
pub struct OrderConfig {
    /// Fraction of the text band height a gutter strip must keep free.
    pub gutter_free_fraction: f64,
    /// Minimum gutter width, in multiples of the page's modal font size.
    pub min_gutter_em: f64,
    /// Each column must span at least this fraction of the text band width.
    pub min_column_fraction: f64,
    /// Baselines are bucketed to this many points before sorting.
    pub baseline_bin: f64,
}

impl Default for OrderConfig {
    fn default() -> Self {
        OrderConfig {
            gutter_free_fraction: 0.8,
            min_gutter_em: 1.0,
            min_column_fraction: 0.25,
            baseline_bin: 2.0,
        }
    }
}

/// Horizontal whitespace strip separating two columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gutter {
    pub x0: f64,
    pub x1: f64,
}

impl Gutter {
    fn mid(&self) -> f64 {
        (self.x0 + self.x1) / 2.0
    }
}

/// Assigns reading indices column-major and reorders `page.runs` to match.
///
/// Returns the new reading index of each run, indexed by the run's position
/// before the call.
pub fn reading_order(page: &mut Page, cfg: &OrderConfig) -> Vec<usize> {
    let order = column_major(&page.runs, cfg);
    let mut assignment = vec![0; page.runs.len()];
    for (rank, &i) in order.iter().enumerate() {
        assignment[i] = rank;
    }
    let mut runs: Vec<Option<TextRun>> = std::mem::take(&mut page.runs).into_iter().map(Some).collect();
    page.runs = order
        .iter()
        .enumerate()
        .map(|(rank, &i)| {
            let mut r = runs[i].take().expect("order is a permutation");
            r.reading_index = rank;
            r
        })
        .collect();
    assignment
}

fn column_major(runs: &[TextRun], cfg: &OrderConfig) -> Vec<usize> {
    let bin = |r: &TextRun| (r.baseline_y / cfg.baseline_bin).round() as i64;
    let mut idx: Vec<usize> = (0..runs.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ra, rb) = (&runs[a], &runs[b]);
        bin(ra)
            .cmp(&bin(rb))
            .then(ra.bbox.x0.total_cmp(&rb.bbox.x0))
            .then(a.cmp(&b))
    });
    let Some(gutter) = detect_gutter(runs, cfg) else {
        return idx;
    };

    // Rows bridging the gutter's right edge (where the right column starts)
    // span both columns and act as separators. A gutter is only mostly free,
    // so runs that poke into it from the left don't count; neither does the
    // gap between two columns' lines, which is wider than an em.
    let edge = gutter.x1;
    let mut rows: HashMap<i64, Vec<&TextRun>> = HashMap::new();
    for r in runs {
        rows.entry(bin(r)).or_default().push(r);
    }
    let spanning: HashSet<i64> = rows
        .into_iter()
        .filter(|(_, row)| {
            let mut row = row.clone();
            row.sort_by(|a, b| a.bbox.x0.total_cmp(&b.bbox.x0));
            row.iter().any(|r| r.bbox.x0 < edge && r.bbox.x1 > edge)
                || row.windows(2).any(|w| {
                    w[0].bbox.x1 <= edge
                        && w[1].bbox.x0 >= edge
                        && w[1].bbox.x0 - w[0].bbox.x1 < w[0].font_size.max(w[1].font_size)
                })
        })
        .map(|(b, _)| b)
        .collect();
    let mut out = Vec::with_capacity(runs.len());
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for i in idx {
        let r = &runs[i];
        if spanning.contains(&bin(r)) {
            out.append(&mut left);
            out.append(&mut right);
            out.push(i);
        } else if r.bbox.center().x < gutter.mid() {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    out.append(&mut left);
    out.append(&mut right);
    out
}

pub(crate) fn modal_font_size<'a, I: IntoIterator<Item = &'a TextRun>>(runs: I) -> Option<f64> {
    let mut counts: Vec<(i64, usize)> = Vec::new();
    for r in runs {
        let key = (r.font_size * 10.0).round() as i64;
        match counts.iter_mut().find(|(k, _)| *k == key) {
            Some((_, c)) => *c += 1,
            None => counts.push((key, 1)),
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(k, _)| k as f64 / 10.0)
}

/// Interior x-strip that stays free over most of the text band. Among the
/// candidates the one with the most text facing across it wins, then the
/// widest.
pub fn detect_gutter(runs: &[TextRun], cfg: &OrderConfig) -> Option<Gutter> {
    if runs.len() < 2 {
        return None;
    }
    let band_y0 = runs.iter().map(|r| r.bbox.y0).fold(f64::INFINITY, f64::min);
    let band_y1 = runs.iter().map(|r| r.bbox.y1).fold(f64::NEG_INFINITY, f64::max);
    let band_h = band_y1 - band_y0;
    let min_x = runs.iter().map(|r| r.bbox.x0).fold(f64::INFINITY, f64::min);
    let max_x = runs.iter().map(|r| r.bbox.x1).fold(f64::NEG_INFINITY, f64::max);
    let band_w = max_x - min_x;
    if band_h <= 0.0 || band_w <= 0.0 {
        return None;
    }
    let min_width = cfg.min_gutter_em * modal_font_size(runs).unwrap_or(10.0);

    let mut edges: Vec<f64> = runs.iter().flat_map(|r| [r.bbox.x0, r.bbox.x1]).collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let bin = |r: &TextRun| (r.baseline_y / cfg.baseline_bin).round() as i64;
    // runs right of the strip that face text on its left, with nothing
    // crossing the strip at that height
    let support = |g: &Gutter| {
        let vert = |a: &TextRun, b: &TextRun| a.bbox.y0 < b.bbox.y1 && b.bbox.y0 < a.bbox.y1;
        runs.iter()
            .filter(|r| r.bbox.x0 >= g.x1)
            .filter(|r| {
                runs.iter().any(|l| l.bbox.x1 <= g.x0 && vert(l, r))
                    && !runs.iter().any(|c| c.bbox.x0 < g.x1 && c.bbox.x1 > g.x0 && vert(c, r))
            })
            .count()
    };

    let mut best: Option<(usize, Gutter)> = None;
    let valid = |g: &Gutter| {
        g.x1 - g.x0 >= min_width
            && g.x0 - min_x >= cfg.min_column_fraction * band_w
            && max_x - g.x1 >= cfg.min_column_fraction * band_w
    };
    let mut consider = |g: Gutter| {
        if !valid(&g) {
            return;
        }
        let s = support(&g);
        if best.is_none_or(|(bs, b)| (s, g.x1 - g.x0) > (bs, b.x1 - b.x0)) {
            best = Some((s, g));
        }
    };

    let line_starts: Vec<f64> = runs
        .iter()
        .filter(|r| {
            !runs.iter().any(|o| {
                bin(o) == bin(r) && o.bbox.x1 <= r.bbox.x0 + 1e-9 && r.bbox.x0 - o.bbox.x1 < min_width
            })
        })
        .map(|r| r.bbox.x0)
        .collect();

    // (x0, x1, covered height) of each elementary x-interval
    let intervals: Vec<(f64, f64, f64)> = edges
        .windows(2)
        .map(|w| {
            let mut spans: Vec<(f64, f64)> = runs
                .iter()
                .filter(|r| r.bbox.x0 <= w[0] && r.bbox.x1 >= w[1])
                .map(|r| (r.bbox.y0, r.bbox.y1))
                .collect();
            (w[0], w[1], union_length(&mut spans))
        })
        .collect();
    let free = |c: f64| 1.0 - c / band_h >= cfg.gutter_free_fraction;
    let mut i = 0;
    while i < intervals.len() {
        if !free(intervals[i].2) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < intervals.len() && free(intervals[j + 1].2) {
            j += 1;
        }
        let strip = Gutter {
            x0: intervals[i].0,
            x1: intervals[j].1,
        };
        // a gutter never contains the start of a line
        let mut clipped = |g: Gutter| {
            let first = line_starts.iter().copied().filter(|&x| x > g.x0 && x < g.x1).reduce(f64::min);
            consider(Gutter {
                x0: g.x0,
                x1: first.unwrap_or(g.x1),
            });
        };
        clipped(strip);
        if !valid(&strip) {
            // A sparse column next to the gutter can merge with it; fall back
            // to the least covered parts of the strip.
            let run = &intervals[i..=j];
            let floor = run.iter().map(|t| t.2).fold(f64::INFINITY, f64::min) + 0.1 * band_h;
            let mut k = 0;
            while k < run.len() {
                if run[k].2 > floor {
                    k += 1;
                    continue;
                }
                let mut m = k;
                while m + 1 < run.len() && run[m + 1].2 <= floor {
                    m += 1;
                }
                clipped(Gutter {
                    x0: run[k].0,
                    x1: run[m].1,
                });
                k = m + 1;
            }
        }
        i = j + 1;
    }
    best.map(|(_, g)| g)
}

fn union_length(spans: &mut [(f64, f64)]) -> f64 {
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for &(s, e) in spans.iter() {
        match cur {
            Some((cs, ce)) if s <= ce => cur = Some((cs, ce.max(e))),
            Some((cs, ce)) => {
                total += ce - cs;
                cur = Some((s, e));
            }
            None => cur = Some((s, e)),
        }
    }
    if let Some((cs, ce)) = cur {
        total += ce - cs;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;

    fn run(text: &str, x0: f64, baseline: f64, width: f64) -> TextRun {
        TextRun::new(text, BBox::new(x0, baseline - 8.0, x0 + width, baseline + 2.0).unwrap(), 10.0, baseline)
    }

    fn page(runs: Vec<TextRun>) -> Page {
        let mut p = Page::new(0, 612.0, 792.0);
        p.runs = runs;
        p
    }

    #[test]
    fn single_column_sorts_top_down() {
        let mut p = page(vec![run("a", 72.0, 100.0, 200.0), run("b", 72.0, 50.0, 200.0)]);
        assert_eq!(reading_order(&mut p, &OrderConfig::default()), vec![1, 0]);
        assert_eq!(p.runs[0].text, "b");
    }

    #[test]
    fn empty_page() {
        let mut p = page(vec![]);
        assert!(reading_order(&mut p, &OrderConfig::default()).is_empty());
    }

    /// Is `order` (texts) column-major for the given labelled runs?
    fn is_column_major(order: &[&str]) -> bool {
        let col = |s: &str| if s.starts_with('L') { 0 } else { 1 };
        let y = |s: &str| s[1..].parse::<u32>().unwrap();
        order.windows(2).all(|w| (col(w[0]), y(w[0])) < (col(w[1]), y(w[1])))
    }

    fn permutations(items: Vec<&'static str>) -> Vec<Vec<&'static str>> {
        if items.len() <= 1 {
            return vec![items];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.clone();
            let head = rest.remove(i);
            for mut p in permutations(rest) {
                p.insert(0, head);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn two_columns_match_enumerated_oracle() {
        let labels = vec!["L50", "L100", "R50", "R100"];
        let oracle: Vec<Vec<&str>> = permutations(labels).into_iter().filter(|p| is_column_major(p)).collect();
        assert_eq!(oracle.len(), 1);

        let mut p = page(vec![
            run("R100", 320.0, 100.0, 220.0),
            run("L50", 72.0, 50.0, 220.0),
            run("R50", 320.0, 50.0, 220.0),
            run("L100", 72.0, 100.0, 220.0),
        ]);
        reading_order(&mut p, &OrderConfig::default());
        let got: Vec<&str> = p.runs.iter().map(|r| r.text.as_str()).collect();
        assert_eq!(got, oracle[0]);
    }

    #[test]
    fn spanning_title_comes_first() {
        let mut runs = vec![run("Title", 200.0, 30.0, 200.0)];
        for (i, y) in [60.0, 72.0, 84.0].iter().enumerate() {
            runs.push(run(&format!("L{i}"), 72.0, *y, 220.0));
            runs.push(run(&format!("R{i}"), 320.0, *y, 220.0));
        }
        let mut p = page(runs);
        reading_order(&mut p, &OrderConfig::default());
        let got: Vec<&str> = p.runs.iter().map(|r| r.text.as_str()).collect();
        assert_eq!(got, ["Title", "L0", "L1", "L2", "R0", "R1", "R2"]);
    }

    #[test]
    fn word_gaps_are_not_gutters() {
        // aligned 5 pt gaps between words on every line
        let mut runs = Vec::new();
        for i in 0..6 {
            let y = 100.0 + 12.0 * i as f64;
            runs.push(run("aaaa", 72.0, y, 200.0));
            runs.push(run("bbbb", 277.0, y, 200.0));
        }
        assert_eq!(detect_gutter(&runs, &OrderConfig::default()), None);
    }

    #[test]
    fn idempotent() {
        let mut p = page(vec![
            run("x", 320.0, 100.0, 220.0),
            run("y", 72.0, 50.0, 220.0),
            run("z", 72.0, 50.5, 100.0),
        ]);
        reading_order(&mut p, &OrderConfig::default());
        let first = p.clone();
        let again = reading_order(&mut p, &OrderConfig::default());
        assert_eq!(again, vec![0, 1, 2]);
        assert_eq!(p, first);
    }
}
