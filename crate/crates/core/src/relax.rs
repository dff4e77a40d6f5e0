//! Histogram-guided relaxation of box queries to a target answer count.
//!
//! Every histogram bucket is treated as if all its tuples sat at one
//! distance from the query: its MinDist for the optimistic Box-Restarts
//! estimate, its MaxDist for the conservative Box-NoRestarts estimate.
//! Sorting buckets by that distance and accumulating counts until `N` is
//! reached gives a relaxation distance. Box-Dynamic interpolates between the
//! two with a workload-trained `alpha`.
//!
//! [`sauna_relax`] runs the full procedure: estimate the original query,
//! relax with Box-Dynamic if the estimate falls short, and fall back to
//! Box-NoRestarts at most once if the relaxed query still under-delivers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{BoxQuery, Dataset, Domain, Interval};
use crate::distance::{Metric, MetricSpec, TupleDistance};
use crate::error::{Error, Result};
use crate::histogram::{max_dist, min_dist, Bucket, Histogram};
use crate::oracle::{execute_box, hard_predicates, take_nearest, Answer, AnswerSet};
use crate::search::GoldenSection;

/// Alpha used when no training workload is available.
pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxMode {
    /// Every tuple of the relaxed bounding box is a candidate answer.
    #[default]
    BoxPreserving,
    /// Tuples farther than the relaxation distance are pruned.
    DistancePreserving,
}

impl fmt::Display for RelaxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelaxMode::BoxPreserving => "box-preserving",
            RelaxMode::DistancePreserving => "distance-preserving",
        })
    }
}

impl FromStr for RelaxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "box-preserving" | "box" => Ok(RelaxMode::BoxPreserving),
            "distance-preserving" | "distance" => Ok(RelaxMode::DistancePreserving),
            other => Err(Error::InvalidQuery(format!("unknown relaxation mode `{other}`"))),
        }
    }
}

fn check_inputs(histogram: &Histogram, query: &BoxQuery, n: usize, metric: &Metric) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidQuery("N must be at least 1".into()));
    }
    if histogram.buckets().is_empty() {
        return Err(Error::EmptyHistogram);
    }
    query.check_dims(histogram.dims())?;
    query.check_dims(metric.dims())
}

/// Distance at which the relaxed query's locus covers the whole domain.
pub fn full_domain_distance(domain: &Domain, query: &BoxQuery, metric: &Metric) -> f64 {
    let whole = Bucket {
        bounds: domain.bounds().to_vec(),
        count: 0,
    };
    max_dist(query, &whole, metric).unwrap_or(f64::INFINITY)
}

fn threshold_distance(
    histogram: &Histogram,
    query: &BoxQuery,
    n: usize,
    metric: &Metric,
    bucket_distance: fn(&BoxQuery, &Bucket, &Metric) -> Result<f64>,
) -> Result<f64> {
    check_inputs(histogram, query, n, metric)?;
    if histogram.total() < n as u64 {
        return Ok(full_domain_distance(histogram.domain(), query, metric));
    }
    let mut scored = histogram
        .buckets()
        .iter()
        .map(|b| Ok((bucket_distance(query, b, metric)?, b.count)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cumulative = 0u64;
    for (distance, count) in scored {
        cumulative += count;
        if cumulative >= n as u64 {
            return Ok(distance);
        }
    }
    unreachable!("bucket counts sum to the histogram total")
}

/// Box-Restarts distance: buckets sorted by MinDist, the first distance at
/// which the accumulated count reaches `n`.
pub fn restarts_distance(histogram: &Histogram, query: &BoxQuery, n: usize, metric: &Metric) -> Result<f64> {
    threshold_distance(histogram, query, n, metric, min_dist)
}

/// Box-NoRestarts distance: as [`restarts_distance`] with MaxDist. Every
/// bucket counted lies wholly inside the relaxed region, so with exact
/// bucket counts the relaxed query returns at least `n` tuples.
pub fn no_restarts_distance(histogram: &Histogram, query: &BoxQuery, n: usize, metric: &Metric) -> Result<f64> {
    threshold_distance(histogram, query, n, metric, max_dist)
}

/// `d_br + alpha * (d_bnr - d_br)`.
pub fn dynamic_distance(d_br: f64, d_bnr: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(d_br + alpha * (d_bnr - d_br))
}

/// Bounding box of every point within distance `radius` of `query`: each
/// range grows by `radius / w_i` on both sides (to the domain edge for zero
/// weights, even at radius 0),
/// then is clamped to the domain without ever shrinking below `query`.
///
/// The new bounds are pushed out by a few ulps so that a tuple whose computed
/// distance is exactly `radius` is never lost to rounding.
pub fn expand_query(query: &BoxQuery, radius: f64, weights: &[f64], domain: &Domain) -> BoxQuery {
    let ranges = query
        .ranges()
        .iter()
        .zip(weights)
        .zip(domain.bounds())
        .map(|((r, &w), d)| {
            let delta = if w > 0.0 { radius.max(0.0) / w } else { f64::INFINITY };
            if delta == 0.0 {
                return *r;
            }
            let slack_lo = 4.0 * f64::EPSILON * (r.lo.abs() + delta);
            let slack_hi = 4.0 * f64::EPSILON * (r.hi.abs() + delta);
            Interval {
                lo: (r.lo - delta - slack_lo).max(r.lo.min(d.lo)),
                hi: (r.hi + delta + slack_hi).min(r.hi.max(d.hi)),
            }
        })
        .collect();
    BoxQuery::new(ranges).with_predicates(query.predicates().to_vec())
}

/// Keeps the tuples within `radius` of `query`, dropping those that only
/// the bounding box's corners brought in.
pub fn filter_distance_preserving(scored: Vec<Answer>, radius: f64) -> Vec<Answer> {
    scored.into_iter().filter(|a| a.distance <= radius).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationPlan {
    pub d_br: f64,
    pub d_bnr: f64,
    pub alpha: f64,
    pub chosen_distance: f64,
    pub relaxed_query: BoxQuery,
    pub mode: RelaxMode,
    /// Box-NoRestarts query issued after the Box-Dynamic one fell short.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_query: Option<BoxQuery>,
}

impl RelaxationPlan {
    pub const CSV_HEADER: &'static str = "d_br,d_bnr,alpha,chosen_distance,relaxed_query,mode";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},\"{}\",{}",
            self.d_br, self.d_bnr, self.alpha, self.chosen_distance, self.relaxed_query, self.mode
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelaxStats {
    /// Relaxed queries executed: 1, or 2 after a restart. Zero when the
    /// original query sufficed.
    pub queries_issued: usize,
    pub restarted: bool,
    /// Sum of result sizes over every executed query.
    pub tuples_retrieved: u64,
    pub answers_returned: usize,
    /// All executions including the original query.
    pub executions: usize,
    /// Fewer than `N` answers exist.
    pub short: bool,
}

impl RelaxStats {
    pub const CSV_HEADER: &'static str = "queries_issued,restarted,tuples_retrieved,answers_returned";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.queries_issued, self.restarted, self.tuples_retrieved, self.answers_returned
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxOutcome {
    pub answers: AnswerSet,
    pub stats: RelaxStats,
    /// `None` when the original query already held `N` tuples.
    pub plan: Option<RelaxationPlan>,
}

/// Scores the rows of one execution, pruning by `radius` in
/// distance-preserving mode.
fn candidates(rows: &[usize], scorer: &TupleDistance<'_>, radius: f64, mode: RelaxMode) -> Vec<Answer> {
    let scored = rows
        .iter()
        .map(|&row| Answer {
            row,
            distance: scorer.distance(row),
        })
        .collect();
    match mode {
        RelaxMode::BoxPreserving => scored,
        RelaxMode::DistancePreserving => filter_distance_preserving(scored, radius),
    }
}

/// Relaxed query that drops predicates the metric scores softly.
fn relaxed_box(query: &BoxQuery, radius: f64, metric: &Metric, domain: &Domain) -> BoxQuery {
    expand_query(query, radius, metric.weights(), domain).with_predicates(hard_predicates(query, metric))
}

/// Runs the full relaxation procedure for one query and returns the `n`
/// nearest answers found.
///
/// The original query is executed first only when the histogram expects it
/// to hold `n` tuples; otherwise, or if it falls short, a Box-Dynamic query
/// is executed, followed by at most one Box-NoRestarts query.
pub fn sauna_relax(
    dataset: &Dataset,
    histogram: &Histogram,
    query: &BoxQuery,
    n: usize,
    metric: &Metric,
    alpha: f64,
    mode: RelaxMode,
) -> Result<RelaxOutcome> {
    check_inputs(histogram, query, n, metric)?;
    query.check_dims(dataset.dims())?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let scorer = TupleDistance::new(dataset, query, metric)?;
    let mut stats = RelaxStats::default();
    let finish = |answers: Vec<Answer>, mut stats: RelaxStats, plan| {
        stats.answers_returned = answers.len();
        stats.short = answers.len() < n;
        RelaxOutcome {
            answers: AnswerSet {
                answers,
                query: query.clone(),
            },
            stats,
            plan,
        }
    };

    if histogram.estimate_cardinality(query) >= n as f64 {
        let rows = execute_box(dataset, query)?;
        stats.executions += 1;
        stats.tuples_retrieved += rows.len() as u64;
        if rows.len() >= n {
            let answers = take_nearest(candidates(&rows, &scorer, 0.0, RelaxMode::BoxPreserving), n);
            return Ok(finish(answers, stats, None));
        }
    }

    let domain = dataset.domain();
    let d_br = restarts_distance(histogram, query, n, metric)?;
    let d_bnr = no_restarts_distance(histogram, query, n, metric)?;
    let chosen = dynamic_distance(d_br, d_bnr, alpha)?;
    let relaxed = relaxed_box(query, chosen, metric, domain);
    let rows = execute_box(dataset, &relaxed)?;
    stats.executions += 1;
    stats.queries_issued += 1;
    stats.tuples_retrieved += rows.len() as u64;
    let mut found = candidates(&rows, &scorer, chosen, mode);
    let mut plan = RelaxationPlan {
        d_br,
        d_bnr,
        alpha,
        chosen_distance: chosen,
        relaxed_query: relaxed,
        mode,
        restart_query: None,
    };

    // Re-running an identical query cannot find more tuples.
    if found.len() < n && chosen < d_bnr {
        let fallback = relaxed_box(query, d_bnr, metric, domain);
        let rows = execute_box(dataset, &fallback)?;
        stats.executions += 1;
        stats.queries_issued += 1;
        stats.restarted = true;
        stats.tuples_retrieved += rows.len() as u64;
        found = candidates(&rows, &scorer, d_bnr, mode);
        plan.restart_query = Some(fallback);
    }
    Ok(finish(take_nearest(found, n), stats, Some(plan)))
}

/// Per-query data reused across every alpha probe.
struct TrainingCase {
    query: BoxQuery,
    metric: Metric,
    d_br: f64,
    d_bnr: f64,
    /// Tuples retrieved by the Box-NoRestarts query.
    fallback_tuples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaTraining {
    pub alpha: f64,
    /// Mean tuples retrieved per workload query at `alpha`.
    pub cost: f64,
    pub cost_at_zero: f64,
    pub cost_at_one: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Workload queries that needed relaxation.
    pub relaxed_queries: usize,
}

/// Relaxation-phase cost model over a training workload.
///
/// Queries the histogram and a first execution show to be satisfiable
/// without relaxation contribute nothing. For the rest, a probe at `alpha`
/// costs the tuples of the Box-Dynamic query, plus those of the
/// Box-NoRestarts query when the first falls short.
pub struct AlphaCost<'a> {
    dataset: &'a Dataset,
    cases: Vec<TrainingCase>,
    workload_len: usize,
    n: usize,
    mode: RelaxMode,
}

impl<'a> AlphaCost<'a> {
    pub fn new(
        dataset: &'a Dataset,
        histogram: &Histogram,
        workload: &[BoxQuery],
        n: usize,
        spec: &MetricSpec,
        mode: RelaxMode,
    ) -> Result<Self> {
        if workload.is_empty() {
            return Err(Error::InvalidQuery("training workload is empty".into()));
        }
        let prepare = |query: &BoxQuery| -> Result<Option<TrainingCase>> {
            let metric = spec.resolve(query)?;
            check_inputs(histogram, query, n, &metric)?;
            if histogram.estimate_cardinality(query) >= n as f64
                && execute_box(dataset, query)?.len() >= n
            {
                return Ok(None);
            }
            let d_br = restarts_distance(histogram, query, n, &metric)?;
            let d_bnr = no_restarts_distance(histogram, query, n, &metric)?;
            let fallback = relaxed_box(query, d_bnr, &metric, dataset.domain());
            let fallback_tuples = execute_box(dataset, &fallback)?.len() as u64;
            Ok(Some(TrainingCase {
                query: query.clone(),
                metric,
                d_br,
                d_bnr,
                fallback_tuples,
            }))
        };
        let cases = par_map(workload, prepare)
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        Ok(AlphaCost {
            dataset,
            cases,
            workload_len: workload.len(),
            n,
            mode,
        })
    }

    pub fn relaxed_queries(&self) -> usize {
        self.cases.len()
    }

    /// Mean tuples retrieved per workload query at `alpha`.
    pub fn cost(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidAlpha(alpha));
        }
        let per_case = |case: &TrainingCase| -> Result<u64> {
            let chosen = dynamic_distance(case.d_br, case.d_bnr, alpha)?;
            let relaxed = relaxed_box(&case.query, chosen, &case.metric, self.dataset.domain());
            let rows = execute_box(self.dataset, &relaxed)?;
            let answers = match self.mode {
                RelaxMode::BoxPreserving => rows.len(),
                RelaxMode::DistancePreserving => {
                    let scorer = TupleDistance::new(self.dataset, &case.query, &case.metric)?;
                    rows.iter().filter(|&&r| scorer.distance(r) <= chosen).count()
                }
            };
            let mut tuples = rows.len() as u64;
            if answers < self.n && chosen < case.d_bnr {
                tuples += case.fallback_tuples;
            }
            Ok(tuples)
        };
        let total: u64 = par_map(&self.cases, per_case)
            .into_iter()
            .sum::<Result<u64>>()?;
        Ok(total as f64 / self.workload_len as f64)
    }
}

/// Picks alpha by golden-section search over the training cost, then keeps
/// whichever of the search result and the two endpoints is cheapest.
pub fn train_alpha(
    dataset: &Dataset,
    histogram: &Histogram,
    workload: &[BoxQuery],
    n: usize,
    spec: &MetricSpec,
    mode: RelaxMode,
    search: GoldenSection,
) -> Result<AlphaTraining> {
    let model = AlphaCost::new(dataset, histogram, workload, n, spec, mode)?;
    let mut failure = None;
    let found = search.minimize(
        |a| match model.cost(a) {
            Ok(c) => c,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        0.0,
        1.0,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let cost_at_zero = model.cost(0.0)?;
    let cost_at_one = model.cost(1.0)?;
    let (alpha, cost) = [(found.x, found.value), (0.0, cost_at_zero), (1.0, cost_at_one)]
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    Ok(AlphaTraining {
        alpha,
        cost,
        cost_at_zero,
        cost_at_one,
        iterations: found.iterations,
        evaluations: found.evaluations + 2,
        relaxed_queries: model.relaxed_queries(),
    })
}

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{aspect_weights, inverse_weights, Norm, WeightLimits};
    use crate::oracle::top_n_sequential;

    fn bucket(bounds: &[(f64, f64)], count: u64) -> Bucket {
        Bucket {
            bounds: bounds.iter().map(|&(lo, hi)| Interval { lo, hi }).collect(),
            count,
        }
    }

    fn q1(lo: f64, hi: f64) -> BoxQuery {
        BoxQuery::from_bounds(&[(lo, hi)]).unwrap()
    }

    #[test]
    fn restarts_accumulates_by_min_dist() {
        // minDist 0 (count 3) and minDist 2 (count 4)
        let h = Histogram::from_buckets(vec![bucket(&[(0.0, 5.0)], 3), bucket(&[(7.0, 9.0)], 4)]).unwrap();
        let m = Metric::uniform(Norm::L2, 1);
        let q = q1(1.0, 5.0);
        assert_eq!(restarts_distance(&h, &q, 5, &m).unwrap(), 2.0);
        assert_eq!(restarts_distance(&h, &q, 3, &m).unwrap(), 0.0);
        let full = restarts_distance(&h, &q, 8, &m).unwrap();
        assert_eq!(full, full_domain_distance(h.domain(), &q, &m));
        assert_eq!(full, 4.0);
        assert!(matches!(restarts_distance(&h, &q, 0, &m), Err(Error::InvalidQuery(_))));
    }

    #[test]
    fn no_restarts_accumulates_by_max_dist() {
        let m = Metric::uniform(Norm::L2, 1);
        let single = Histogram::from_buckets(vec![bucket(&[(0.0, 10.0)], 10)]).unwrap();
        assert_eq!(no_restarts_distance(&single, &q1(3.0, 4.0), 5, &m).unwrap(), 6.0);
        // maxDist 1 (count 2) and maxDist 4 (count 3)
        let h = Histogram::from_buckets(vec![bucket(&[(5.0, 6.0)], 2), bucket(&[(6.0, 9.0)], 3)]).unwrap();
        assert_eq!(no_restarts_distance(&h, &q1(4.0, 5.0), 4, &m).unwrap(), 4.0);
        assert_eq!(no_restarts_distance(&h, &h.domain().to_query(), 4, &m).unwrap(), 0.0);
    }

    #[test]
    fn dynamic_interpolation() {
        assert_eq!(dynamic_distance(2.0, 6.0, 0.0).unwrap(), 2.0);
        assert_eq!(dynamic_distance(2.0, 6.0, 1.0).unwrap(), 6.0);
        assert_eq!(dynamic_distance(2.0, 6.0, 0.25).unwrap(), 3.0);
        assert!(matches!(dynamic_distance(2.0, 6.0, 1.5), Err(Error::InvalidAlpha(_))));
        assert!(dynamic_distance(2.0, 6.0, -0.1).is_err());
    }

    #[test]
    fn expand_examples() {
        let domain = Domain::uniform(2, 0.0, 10.0).unwrap();
        let q = BoxQuery::from_bounds(&[(4.0, 6.0), (4.0, 6.0)]).unwrap();
        assert_eq!(expand_query(&q, 0.0, &[1.0, 2.0], &domain), q);
        let e = expand_query(&q, 1.0, &[1.0, 2.0], &domain);
        let want = [(3.0, 7.0), (3.5, 6.5)];
        for (r, (lo, hi)) in e.ranges().iter().zip(want) {
            assert!((r.lo - lo).abs() < 1e-12 && (r.hi - hi).abs() < 1e-12, "{r:?}");
        }
        let clamped = expand_query(&q, 100.0, &[1.0, 1.0], &domain);
        assert_eq!(clamped, domain.to_query());
        let zero = expand_query(&q, 1.0, &[1.0, 0.0], &domain);
        assert_eq!(zero.range(1), Interval { lo: 0.0, hi: 10.0 });
        let flat = expand_query(&q, 0.0, &[1.0, 0.0], &domain);
        assert_eq!(flat.range(0), q.range(0));
        assert_eq!(flat.range(1), Interval { lo: 0.0, hi: 10.0 });
        // a query sticking out of the domain keeps its own bounds
        let wide = BoxQuery::from_bounds(&[(-5.0, 6.0), (4.0, 6.0)]).unwrap();
        assert_eq!(expand_query(&wide, 100.0, &[1.0, 1.0], &domain).range(0).lo, -5.0);
    }

    #[test]
    fn zero_width_dimension_relaxes_by_capped_weight() {
        let limits = WeightLimits::default();
        let q = BoxQuery::from_bounds(&[(0.0, 10.0), (5.0, 5.0)]).unwrap();
        let domain = Domain::uniform(2, -100.0, 100.0).unwrap();
        let w = aspect_weights(&q, limits);
        let e = expand_query(&q, 3.0, &w, &domain);
        assert!((e.range(1).width() / 2.0 - 3.0 / limits.max_weight).abs() < 1e-12);
        let inv = inverse_weights(&q, limits);
        let e = expand_query(&q, 3.0, &inv, &domain);
        assert!(e.range(1).width().is_finite());
        assert!(e.range(1).width() > 0.0);
    }

    #[test]
    fn distance_preserving_filter() {
        let ds = Dataset::from_points(
            &[vec![0.5, 0.5], vec![2.0, 2.0], vec![2.0, 0.5]],
            Some(Domain::uniform(2, 0.0, 10.0).unwrap()),
        )
        .unwrap();
        let q = BoxQuery::from_bounds(&[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let m = Metric::uniform(Norm::L2, 2);
        let scorer = TupleDistance::new(&ds, &q, &m).unwrap();
        let r = 1.0;
        let mbr = expand_query(&q, r, m.weights(), ds.domain());
        // (2,2) is a corner of the bounding box at distance sqrt(2) > 1
        let rows = execute_box(&ds, &mbr).unwrap();
        assert_eq!(rows, vec![0, 1, 2]);
        let kept = candidates(&rows, &scorer, r, RelaxMode::DistancePreserving);
        assert_eq!(kept.iter().map(|a| a.row).collect::<Vec<_>>(), vec![0, 2]);
        let inside = candidates(&[0], &scorer, 0.0, RelaxMode::DistancePreserving);
        assert_eq!(inside.len(), 1);
        let all = filter_distance_preserving(candidates(&rows, &scorer, 0.0, RelaxMode::BoxPreserving), f64::INFINITY);
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn satisfied_query_is_not_relaxed() {
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let ds = Dataset::from_points(&pts, None).unwrap();
        let h = Histogram::build_equi_depth(&ds, 4).unwrap();
        let m = Metric::uniform(Norm::L2, 1);
        let out = sauna_relax(&ds, &h, &q1(0.0, 10.0), 5, &m, 0.5, RelaxMode::BoxPreserving).unwrap();
        assert!(out.plan.is_none());
        assert_eq!(out.stats.executions, 1);
        assert_eq!(out.stats.queries_issued, 0);
        assert_eq!(out.answers.distances(), vec![0.0; 5]);
    }

    #[test]
    fn low_estimate_relaxes_once() {
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let ds = Dataset::from_points(&pts, None).unwrap();
        let h = Histogram::build_equi_depth(&ds, 4).unwrap();
        let m = Metric::uniform(Norm::L2, 1);
        let q = q1(9.2, 9.8);
        assert!(h.estimate_cardinality(&q) < 3.0);
        let out = sauna_relax(&ds, &h, &q, 3, &m, 1.0, RelaxMode::BoxPreserving).unwrap();
        assert_eq!(out.stats.queries_issued, 1);
        assert_eq!(out.stats.executions, 1);
        assert!(!out.stats.restarted);
        assert_eq!(out.answers.len(), 3);
    }

    #[test]
    fn skewed_single_bucket_forces_restart() {
        // every tuple crammed into one corner of a single wide bucket
        let mut pts: Vec<Vec<f64>> = (0..30).map(|i| vec![99.0 + i as f64 * 0.01, 99.0]).collect();
        pts.push(vec![0.0, 0.0]);
        let ds = Dataset::from_points(&pts, Some(Domain::uniform(2, 0.0, 100.0).unwrap())).unwrap();
        let h = Histogram::build_equi_depth(&ds, 1).unwrap();
        let m = Metric::uniform(Norm::L2, 2);
        let q = BoxQuery::from_bounds(&[(1.0, 2.0), (1.0, 2.0)]).unwrap();
        let out = sauna_relax(&ds, &h, &q, 10, &m, 0.0, RelaxMode::DistancePreserving).unwrap();
        assert!(out.stats.restarted);
        assert_eq!(out.stats.queries_issued, 2);
        assert!(out.answers.len() >= 10);
        let seq = top_n_sequential(&ds, &q, 10, &m).unwrap();
        assert_eq!(out.answers.distances(), seq.distances());
    }

    #[test]
    fn more_answers_than_tuples() {
        let ds = Dataset::from_points(&[vec![0.0], vec![1.0], vec![5.0]], None).unwrap();
        let h = Histogram::build_equi_depth(&ds, 2).unwrap();
        let m = Metric::uniform(Norm::L2, 1);
        let out = sauna_relax(&ds, &h, &q1(0.2, 0.4), 10, &m, 0.3, RelaxMode::DistancePreserving).unwrap();
        assert_eq!(out.answers.len(), 3);
        assert!(out.stats.short);
        assert!(out.stats.queries_issued <= 2);
    }

    #[test]
    fn csv_rows_follow_field_order() {
        let stats = RelaxStats {
            queries_issued: 2,
            restarted: true,
            tuples_retrieved: 17,
            answers_returned: 10,
            ..RelaxStats::default()
        };
        assert_eq!(stats.csv_row(), "2,true,17,10");
        let plan = RelaxationPlan {
            d_br: 1.0,
            d_bnr: 3.0,
            alpha: 0.5,
            chosen_distance: 2.0,
            relaxed_query: BoxQuery::from_bounds(&[(0.0, 1.0), (2.0, 3.0)]).unwrap(),
            mode: RelaxMode::DistancePreserving,
            restart_query: None,
        };
        assert_eq!(plan.csv_row(), "1,3,0.5,2,\"0:1,2:3\",distance-preserving");
    }

    #[test]
    fn alpha_cost_rejects_empty_workload() {
        let ds = Dataset::from_points(&[vec![0.0], vec![1.0]], None).unwrap();
        let h = Histogram::build_equi_depth(&ds, 1).unwrap();
        assert!(AlphaCost::new(&ds, &h, &[], 1, &MetricSpec::default(), RelaxMode::BoxPreserving).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn points(dims: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
            prop::collection::vec(prop::collection::vec(0.0..100.0f64, dims), 1..200)
        }

        fn query(dims: usize) -> impl Strategy<Value = BoxQuery> {
            prop::collection::vec((0.0..100.0f64, 0.0..30.0f64), dims).prop_map(|r| {
                BoxQuery::new(r.into_iter().map(|(lo, w)| Interval { lo, hi: lo + w }).collect())
            })
        }

        fn case() -> impl Strategy<Value = (Vec<Vec<f64>>, BoxQuery, usize, usize)> {
            (1usize..4).prop_flat_map(|d| (points(d), query(d), 1usize..64, 1usize..30))
        }

        proptest! {
            #[test]
            fn relaxed_query_contains_original((pts, q, _, _) in case(), r in 0.0..500.0f64) {
                let ds = Dataset::from_points(&pts, Some(Domain::uniform(q.dims(), 0.0, 130.0).unwrap())).unwrap();
                let m = MetricSpec::default().resolve(&q).unwrap();
                let e = expand_query(&q, r, m.weights(), ds.domain());
                prop_assert!(e.contains(&q));
            }

            #[test]
            fn restarts_never_exceed_norestarts((pts, q, budget, n) in case()) {
                let ds = Dataset::from_points(&pts, None).unwrap();
                let h = Histogram::build_equi_depth(&ds, budget).unwrap();
                for spec in [MetricSpec::default(), MetricSpec::new(Norm::L1, crate::distance::Weighting::Inverse)] {
                    let m = spec.resolve(&q).unwrap();
                    let br = restarts_distance(&h, &q, n, &m).unwrap();
                    let bnr = no_restarts_distance(&h, &q, n, &m).unwrap();
                    prop_assert!(br <= bnr);
                    let d = dynamic_distance(br, bnr, 0.3).unwrap();
                    prop_assert!(br <= d && d <= bnr);
                }
            }

            #[test]
            fn norestarts_returns_enough_without_restart((pts, q, budget, n) in case()) {
                let ds = Dataset::from_points(&pts, None).unwrap();
                let h = Histogram::build_equi_depth(&ds, budget).unwrap();
                let m = MetricSpec::default().resolve(&q).unwrap();
                for mode in [RelaxMode::BoxPreserving, RelaxMode::DistancePreserving] {
                    let out = sauna_relax(&ds, &h, &q, n, &m, 1.0, mode).unwrap();
                    prop_assert!(!out.stats.restarted);
                    prop_assert_eq!(out.answers.len(), n.min(ds.len()));
                    prop_assert!(out.stats.queries_issued <= 1);
                }
            }

            #[test]
            fn distance_preserving_matches_full_scan((pts, q, budget, n) in case(), alpha in 0.0..=1.0f64) {
                let ds = Dataset::from_points(&pts, None).unwrap();
                let h = Histogram::build_equi_depth(&ds, budget).unwrap();
                let m = MetricSpec::default().resolve(&q).unwrap();
                let out = sauna_relax(&ds, &h, &q, n, &m, alpha, RelaxMode::DistancePreserving).unwrap();
                let seq = top_n_sequential(&ds, &q, n, &m).unwrap();
                prop_assert_eq!(out.answers.distances(), seq.distances());
                prop_assert!(out.stats.queries_issued <= 2);
            }
        }
    }
}
