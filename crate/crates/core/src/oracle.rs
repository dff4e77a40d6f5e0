//! Ground-truth baselines computed by scanning the whole table.

use serde::{Deserialize, Serialize};

use crate::data::{BoxQuery, CategoricalPredicate, Dataset, Domain, Interval};
use crate::distance::{Metric, TupleDistance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub row: usize,
    pub distance: f64,
}

/// Ranked answers, nearest first, ties broken by row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSet {
    pub answers: Vec<Answer>,
    pub query: BoxQuery,
}

impl AnswerSet {
    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn distances(&self) -> Vec<f64> {
        self.answers.iter().map(|a| a.distance).collect()
    }

    pub fn rows(&self) -> Vec<usize> {
        self.answers.iter().map(|a| a.row).collect()
    }

    /// `row,distance` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,distance\n");
        for a in &self.answers {
            out.push_str(&format!("{},{}\n", a.row, a.distance));
        }
        out
    }
}

/// Keeps the `n` smallest `(distance, row)` pairs, sorted.
pub(crate) fn take_nearest(mut scored: Vec<Answer>, n: usize) -> Vec<Answer> {
    let order = |a: &Answer, b: &Answer| a.distance.total_cmp(&b.distance).then(a.row.cmp(&b.row));
    if scored.len() > n {
        scored.select_nth_unstable_by(n - 1, order);
        scored.truncate(n);
    }
    scored.sort_unstable_by(order);
    scored
}

fn predicate_filter<'a>(
    dataset: &'a Dataset,
    predicates: &[CategoricalPredicate],
) -> Result<Vec<(&'a [u32], Option<u32>)>> {
    predicates
        .iter()
        .map(|p| {
            let col = dataset.categorical(&p.attribute)?;
            Ok((col.codes(), col.stats().code(&p.value)))
        })
        .collect()
}

/// Rows inside every range of `query` that satisfy all of its categorical
/// predicates. Linear scan.
pub fn execute_box(dataset: &Dataset, query: &BoxQuery) -> Result<Vec<usize>> {
    query.check_dims(dataset.dims())?;
    let filters = predicate_filter(dataset, query.predicates())?;
    if filters.iter().any(|(_, code)| code.is_none()) {
        return Ok(Vec::new());
    }
    let columns = dataset.numeric_columns();
    let ranges = query.ranges();
    let mut rows = Vec::new();
    'rows: for row in 0..dataset.len() {
        for (col, r) in columns.iter().zip(ranges) {
            let v = col[row];
            if v < r.lo || v > r.hi {
                continue 'rows;
            }
        }
        for (codes, code) in &filters {
            if Some(codes[row]) != *code {
                continue 'rows;
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Drops predicates that `metric` scores instead of filtering.
pub(crate) fn hard_predicates(query: &BoxQuery, metric: &Metric) -> Vec<CategoricalPredicate> {
    query
        .predicates()
        .iter()
        .filter(|p| metric.categorical_weight(&p.attribute) <= 0.0)
        .cloned()
        .collect()
}

/// The `n` tuples nearest to `query` (all of them when fewer exist), found by
/// scoring every tuple that passes the hard predicates.
pub fn top_n_sequential(dataset: &Dataset, query: &BoxQuery, n: usize, metric: &Metric) -> Result<AnswerSet> {
    if n == 0 {
        return Err(Error::InvalidQuery("N must be at least 1".into()));
    }
    let scorer = TupleDistance::new(dataset, query, metric)?;
    let hard = hard_predicates(query, metric);
    let filters = predicate_filter(dataset, &hard)?;
    let mut scored = Vec::with_capacity(dataset.len());
    if filters.iter().all(|(_, code)| code.is_some()) {
        'rows: for row in 0..dataset.len() {
            for (codes, code) in &filters {
                if Some(codes[row]) != *code {
                    continue 'rows;
                }
            }
            scored.push(Answer {
                row,
                distance: scorer.distance(row),
            });
        }
    }
    Ok(AnswerSet {
        answers: take_nearest(scored, n),
        query: query.clone(),
    })
}

/// Result of the minimal relaxation found by a full scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalRelaxation {
    pub query: BoxQuery,
    pub retrieved: usize,
}

/// Bounding box of `query` and its `n` nearest tuples, and how many tuples
/// that box returns (often more than `n`).
pub fn optimal_relaxation(dataset: &Dataset, query: &BoxQuery, n: usize, metric: &Metric) -> Result<OptimalRelaxation> {
    let nearest = top_n_sequential(dataset, query, n, metric)?;
    if nearest.len() < n {
        return Err(Error::NotEnoughTuples {
            requested: n,
            available: nearest.len(),
        });
    }
    let mut ranges = query.ranges().to_vec();
    let columns = dataset.numeric_columns();
    for a in &nearest.answers {
        for (r, col) in ranges.iter_mut().zip(&columns) {
            let v = col[a.row];
            r.lo = r.lo.min(v);
            r.hi = r.hi.max(v);
        }
    }
    let opt = BoxQuery::new(ranges).with_predicates(hard_predicates(query, metric));
    let retrieved = execute_box(dataset, &opt)?.len();
    Ok(OptimalRelaxation { query: opt, retrieved })
}

/// Outcome of a simulated manual relaxation session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualRun {
    /// Number of queries executed, including the original one.
    pub iterations: usize,
    /// Sum of the result sizes of all executed queries.
    pub tuples_scanned: u64,
    pub final_query: BoxQuery,
    pub answers: usize,
}

/// One manual relaxation step: every range grows by 10% of its width on each
/// side (10% of the domain width for zero-width ranges). Ranges never shrink
/// and do not grow past the domain.
pub fn manual_step(query: &BoxQuery, domain: &Domain) -> BoxQuery {
    let ranges = query
        .ranges()
        .iter()
        .zip(domain.bounds())
        .map(|(r, d)| {
            let width = r.width();
            let grow = 0.1 * if width > 0.0 { width } else { d.width() };
            Interval {
                lo: (r.lo - grow).max(r.lo.min(d.lo)),
                hi: (r.hi + grow).min(r.hi.max(d.hi)),
            }
        })
        .collect();
    BoxQuery::new(ranges).with_predicates(query.predicates().to_vec())
}

/// Re-executes `query`, widening it by 20% per dimension after each round,
/// until it returns at least `n` tuples or covers the whole domain.
pub fn manual_simulation(dataset: &Dataset, query: &BoxQuery, n: usize) -> Result<ManualRun> {
    if n == 0 {
        return Err(Error::InvalidQuery("N must be at least 1".into()));
    }
    let domain = dataset.domain();
    let full = domain.to_query();
    let mut current = query.clone();
    let mut iterations = 0;
    let mut scanned = 0u64;
    loop {
        let rows = execute_box(dataset, &current)?;
        iterations += 1;
        scanned += rows.len() as u64;
        if rows.len() >= n || current.contains(&full) {
            return Ok(ManualRun {
                iterations,
                tuples_scanned: scanned,
                final_query: current,
                answers: rows.len(),
            });
        }
        current = manual_step(&current, domain);
    }
}
