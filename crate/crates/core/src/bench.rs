//! Workload benchmark: runs every query through a set of strategies and
//! reports how many tuples each one had to retrieve.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{BoxQuery, Dataset};
use crate::distance::MetricSpec;
use crate::error::{Error, Result};
use crate::histogram::Histogram;
use crate::oracle::{manual_simulation, optimal_relaxation, top_n_sequential};
use crate::relax::{par_map, sauna_relax, train_alpha, AlphaTraining, RelaxMode, DEFAULT_ALPHA};
use crate::search::GoldenSection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    SaunaDynamic,
    SaunaRestarts,
    SaunaNorestarts,
    Seq,
    Opt,
    Manual,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::SaunaDynamic,
        Strategy::SaunaRestarts,
        Strategy::SaunaNorestarts,
        Strategy::Seq,
        Strategy::Opt,
        Strategy::Manual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::SaunaDynamic => "sauna-dynamic",
            Strategy::SaunaRestarts => "sauna-restarts",
            Strategy::SaunaNorestarts => "sauna-norestarts",
            Strategy::Seq => "seq",
            Strategy::Opt => "opt",
            Strategy::Manual => "manual",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| Error::InvalidSpec(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub n: usize,
    pub metric: MetricSpec,
    pub mode: RelaxMode,
    pub strategies: Vec<Strategy>,
    /// Fixed alpha for sauna-dynamic; trained on `training` when `None`.
    pub alpha: Option<f64>,
    pub training: Vec<BoxQuery>,
    pub search: GoldenSection,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n: 10,
            metric: MetricSpec::default(),
            mode: RelaxMode::BoxPreserving,
            strategies: Strategy::ALL.to_vec(),
            alpha: None,
            training: Vec::new(),
            search: GoldenSection::default(),
        }
    }
}

/// One row per (query, strategy). Column order is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub query_id: usize,
    pub strategy: Strategy,
    pub tuples_retrieved: u64,
    /// Tuples retrieved as a percentage of the dataset. Restarted and
    /// manual runs add up every execution.
    pub tuples_retrieved_pct: f64,
    pub answers: usize,
    pub restarted: bool,
    /// Relaxed queries issued by sauna strategies.
    pub queries_issued: usize,
    /// All queries executed, including the original one.
    pub executions: usize,
    pub wall_time_us: f64,
    pub seq_wall_time_us: f64,
    pub opt_tuples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub strategy: Strategy,
    pub queries: usize,
    pub mean_tuples_retrieved: f64,
    pub mean_tuples_retrieved_pct: f64,
    pub restarts: usize,
    pub mean_executions: f64,
    pub max_queries_issued: usize,
    pub mean_wall_time_us: f64,
    /// Mean wall time relative to a full scan.
    pub time_ratio_to_seq: f64,
}

/// Manual relaxation measured against sauna-dynamic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualComparison {
    pub mean_manual_iterations: f64,
    pub max_manual_iterations: usize,
    pub mean_sauna_executions: f64,
    /// Manual tuples scanned over sauna tuples retrieved.
    pub tuples_ratio: f64,
    /// Manual wall time over sauna wall time.
    pub time_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub dataset_tuples: usize,
    pub n: usize,
    pub mode: RelaxMode,
    pub alpha: f64,
    pub training: Option<AlphaTraining>,
    pub rows: Vec<QueryResult>,
    pub aggregates: Vec<Aggregate>,
    pub manual_comparison: Option<ManualComparison>,
}

impl BenchReport {
    pub fn rows_for(&self, strategy: Strategy) -> impl Iterator<Item = &QueryResult> {
        self.rows.iter().filter(move |r| r.strategy == strategy)
    }

    pub fn aggregate(&self, strategy: Strategy) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.strategy == strategy)
    }

    /// Per-query rows as CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    /// Aggregate rows as CSV.
    pub fn write_aggregate_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.aggregates {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }
}

fn micros(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e6
}

/// Runs `workload` through every configured strategy. Rows are sorted by
/// query id, then strategy.
pub fn run_bench(
    dataset: &Dataset,
    histogram: &Histogram,
    workload: &[BoxQuery],
    config: &BenchConfig,
) -> Result<BenchReport> {
    if config.strategies.is_empty() {
        return Err(Error::InvalidSpec("no strategies selected".into()));
    }
    if config.n > dataset.len() {
        return Err(Error::NotEnoughTuples {
            requested: config.n,
            available: dataset.len(),
        });
    }
    let mut training = None;
    let alpha = match config.alpha {
        Some(a) => a,
        None if config.strategies.contains(&Strategy::SaunaDynamic) && !config.training.is_empty() => {
            let t = train_alpha(
                dataset,
                histogram,
                &config.training,
                config.n,
                &config.metric,
                config.mode,
                config.search,
            )?;
            let a = t.alpha;
            training = Some(t);
            a
        }
        None => DEFAULT_ALPHA,
    };
    let total = dataset.len() as f64;
    let mut strategies = config.strategies.clone();
    strategies.sort();
    strategies.dedup();

    let run_query = |(id, query): &(usize, &BoxQuery)| -> Result<Vec<QueryResult>> {
        let metric = config.metric.resolve(query)?;
        let start = Instant::now();
        top_n_sequential(dataset, query, config.n, &metric)?;
        let seq_wall = micros(start);
        let opt = optimal_relaxation(dataset, query, config.n, &metric)?.retrieved as u64;
        let row = |strategy, tuples: u64, answers, restarted, queries_issued, executions, wall| QueryResult {
            query_id: *id,
            strategy,
            tuples_retrieved: tuples,
            tuples_retrieved_pct: 100.0 * tuples as f64 / total,
            answers,
            restarted,
            queries_issued,
            executions,
            wall_time_us: wall,
            seq_wall_time_us: seq_wall,
            opt_tuples: opt,
        };
        let mut out = Vec::with_capacity(strategies.len());
        for &strategy in &strategies {
            let result = match strategy {
                Strategy::SaunaDynamic | Strategy::SaunaRestarts | Strategy::SaunaNorestarts => {
                    let a = match strategy {
                        Strategy::SaunaRestarts => 0.0,
                        Strategy::SaunaNorestarts => 1.0,
                        _ => alpha,
                    };
                    let start = Instant::now();
                    let o = sauna_relax(dataset, histogram, query, config.n, &metric, a, config.mode)?;
                    let wall = micros(start);
                    let s = o.stats;
                    row(strategy, s.tuples_retrieved, s.answers_returned, s.restarted, s.queries_issued, s.executions, wall)
                }
                Strategy::Seq => row(strategy, dataset.len() as u64, config.n, false, 0, 1, seq_wall),
                Strategy::Opt => row(strategy, opt, config.n, false, 0, 1, 0.0),
                Strategy::Manual => {
                    let start = Instant::now();
                    let m = manual_simulation(dataset, query, config.n)?;
                    let wall = micros(start);
                    row(strategy, m.tuples_scanned, m.answers, false, m.iterations, m.iterations, wall)
                }
            };
            out.push(result);
        }
        Ok(out)
    };
    let indexed: Vec<(usize, &BoxQuery)> = workload.iter().enumerate().collect();
    let mut rows = Vec::with_capacity(workload.len() * strategies.len());
    for batch in par_map(&indexed, run_query) {
        rows.extend(batch?);
    }
    rows.sort_by(|a, b| a.query_id.cmp(&b.query_id).then(a.strategy.cmp(&b.strategy)));

    let aggregates: Vec<Aggregate> = strategies
        .iter()
        .map(|&strategy| {
            let mine: Vec<&QueryResult> = rows.iter().filter(|r| r.strategy == strategy).collect();
            let k = mine.len().max(1) as f64;
            let mean = |f: &dyn Fn(&QueryResult) -> f64| mine.iter().map(|r| f(r)).sum::<f64>() / k;
            let wall = mean(&|r| r.wall_time_us);
            let seq = mean(&|r| r.seq_wall_time_us);
            Aggregate {
                strategy,
                queries: mine.len(),
                mean_tuples_retrieved: mean(&|r| r.tuples_retrieved as f64),
                mean_tuples_retrieved_pct: mean(&|r| r.tuples_retrieved_pct),
                restarts: mine.iter().filter(|r| r.restarted).count(),
                mean_executions: mean(&|r| r.executions as f64),
                max_queries_issued: mine.iter().map(|r| r.queries_issued).max().unwrap_or(0),
                mean_wall_time_us: wall,
                time_ratio_to_seq: if seq > 0.0 { wall / seq } else { 0.0 },
            }
        })
        .collect();

    let manual_comparison = match (
        aggregates.iter().find(|a| a.strategy == Strategy::Manual),
        aggregates.iter().find(|a| a.strategy == Strategy::SaunaDynamic),
    ) {
        (Some(m), Some(s)) => Some(ManualComparison {
            mean_manual_iterations: m.mean_executions,
            max_manual_iterations: m.max_queries_issued,
            mean_sauna_executions: s.mean_executions,
            tuples_ratio: m.mean_tuples_retrieved / s.mean_tuples_retrieved.max(1.0),
            time_ratio: if s.mean_wall_time_us > 0.0 {
                m.mean_wall_time_us / s.mean_wall_time_us
            } else {
                0.0
            },
        }),
        _ => None,
    };

    Ok(BenchReport {
        dataset_tuples: dataset.len(),
        n: config.n,
        mode: config.mode,
        alpha,
        training,
        rows,
        aggregates,
        manual_comparison,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Domain;
    use crate::datagen::{gen_array, gen_training_workload, gen_workload, GenSpec};

    fn fixture() -> (Dataset, Histogram, Vec<BoxQuery>) {
        let domain = Domain::uniform(2, 0.0, 1000.0).unwrap();
        let ds = gen_array(&GenSpec::array(4000, 2, 1.0, 9), &domain).unwrap();
        let h = Histogram::build_equi_depth(&ds, 64).unwrap();
        (ds, h, gen_workload(&domain, 16))
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("fastest".parse::<Strategy>().is_err());
    }

    #[test]
    fn seq_is_full_scan_and_opt_is_minimal() {
        let (ds, h, w) = fixture();
        let config = BenchConfig {
            mode: RelaxMode::DistancePreserving,
            alpha: Some(0.5),
            ..BenchConfig::default()
        };
        let report = run_bench(&ds, &h, &w, &config).unwrap();
        assert_eq!(report.rows.len(), 16 * 6);
        for r in report.rows_for(Strategy::Seq) {
            assert_eq!(r.tuples_retrieved_pct, 100.0);
        }
        for r in &report.rows {
            assert!(r.opt_tuples <= r.tuples_retrieved || r.strategy == Strategy::Manual, "{r:?}");
            assert!(r.seq_wall_time_us > 0.0);
            assert!(r.answers >= 10);
        }
        let ids: Vec<usize> = report.rows.iter().map(|r| r.query_id).collect();
        assert!(ids.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn restarts_retrieve_no_more_than_norestarts() {
        let (ds, h, w) = fixture();
        let config = BenchConfig {
            strategies: vec![Strategy::SaunaRestarts, Strategy::SaunaNorestarts],
            ..BenchConfig::default()
        };
        let report = run_bench(&ds, &h, &w, &config).unwrap();
        let br: Vec<_> = report.rows_for(Strategy::SaunaRestarts).collect();
        let bnr: Vec<_> = report.rows_for(Strategy::SaunaNorestarts).collect();
        for (a, b) in br.iter().zip(&bnr) {
            assert!(!b.restarted);
            if !a.restarted {
                assert!(a.tuples_retrieved <= b.tuples_retrieved);
            }
        }
    }

    #[test]
    fn csv_columns_are_stable() {
        let (ds, h, w) = fixture();
        let config = BenchConfig {
            strategies: vec![Strategy::Seq, Strategy::Opt],
            ..BenchConfig::default()
        };
        let report = run_bench(&ds, &h, &w[..2], &config).unwrap();
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "query_id,strategy,tuples_retrieved,tuples_retrieved_pct,answers,restarted,\
             queries_issued,executions,wall_time_us,seq_wall_time_us,opt_tuples"
        );
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().nth(1).unwrap().starts_with("0,seq,4000,100.0,10,false"), "{text}");
    }

    #[test]
    fn trains_alpha_when_unset() {
        let (ds, h, w) = fixture();
        let config = BenchConfig {
            strategies: vec![Strategy::SaunaDynamic],
            training: gen_training_workload(ds.domain(), 16, 1),
            ..BenchConfig::default()
        };
        let report = run_bench(&ds, &h, &w, &config).unwrap();
        let t = report.training.as_ref().unwrap();
        assert_eq!(report.alpha, t.alpha);
        assert!(t.cost <= t.cost_at_zero.min(t.cost_at_one));
        let untrained = BenchConfig {
            training: Vec::new(),
            ..config
        };
        assert_eq!(run_bench(&ds, &h, &w, &untrained).unwrap().alpha, DEFAULT_ALPHA);
    }
}
