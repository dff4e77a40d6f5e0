//! Synthetic datasets and query workloads.
//!
//! Two generators are provided. Gauss draws tuples from a set of
//! overlapping gaussian bells with zipf-distributed popularity. Array gives
//! each attribute an evenly spaced value set with zipf-distributed
//! frequencies, independently per attribute.
//!
//! All randomness comes from ChaCha8 seeded with [`GenSpec::seed`], so a spec
//! reproduces the same dataset on every platform.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::data::{BoxQuery, Dataset, Domain, Interval, Manifest};
use crate::error::{Error, Result};

/// Distinct values per attribute in Array datasets.
pub const DEFAULT_ARRAY_VALUES: usize = 1000;
pub const DEFAULT_BELLS: usize = 10;
pub const DEFAULT_WORKLOAD: usize = 100;
/// Redraws of a gaussian sample before it is clamped into the domain.
const MAX_REDRAWS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    Gauss,
    Array,
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GenKind::Gauss => "gauss",
            GenKind::Array => "array",
        })
    }
}

impl FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gauss" => Ok(GenKind::Gauss),
            "array" => Ok(GenKind::Array),
            other => Err(Error::InvalidSpec(format!("unknown generator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub n: usize,
    pub dims: usize,
    pub zipf: f64,
    /// Gauss only.
    pub bells: usize,
    /// Gauss only. `None` uses `(width / 20)^2` per dimension.
    pub variance: Option<f64>,
    /// Array only.
    pub values: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn gauss(n: usize, dims: usize, zipf: f64, seed: u64) -> Self {
        GenSpec {
            kind: GenKind::Gauss,
            n,
            dims,
            zipf,
            bells: DEFAULT_BELLS,
            variance: None,
            values: DEFAULT_ARRAY_VALUES,
            seed,
        }
    }

    pub fn array(n: usize, dims: usize, zipf: f64, seed: u64) -> Self {
        GenSpec {
            kind: GenKind::Array,
            ..GenSpec::gauss(n, dims, zipf, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidSpec(msg.into()));
        if self.n < 1 {
            return fail("n must be at least 1");
        }
        if self.dims < 1 {
            return fail("dims must be at least 1");
        }
        if !(self.zipf >= 0.0 && self.zipf.is_finite()) {
            return fail("zipf must be a finite non-negative number");
        }
        if self.bells < 1 {
            return fail("bells must be at least 1");
        }
        if let Some(v) = self.variance {
            if !(v > 0.0 && v.is_finite()) {
                return fail("variance must be positive");
            }
        }
        if self.values < 1 {
            return fail("values must be at least 1");
        }
        Ok(())
    }

    /// Generator parameters as manifest keys.
    pub fn manifest_entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("gen.kind".to_owned(), self.kind.to_string()),
            ("gen.n".to_owned(), self.n.to_string()),
            ("gen.dims".to_owned(), self.dims.to_string()),
            ("gen.zipf".to_owned(), self.zipf.to_string()),
            ("gen.seed".to_owned(), self.seed.to_string()),
        ];
        match self.kind {
            GenKind::Gauss => {
                out.push(("gen.bells".to_owned(), self.bells.to_string()));
                let variance = self
                    .variance
                    .map_or_else(|| "(width/20)^2".to_owned(), |v| v.to_string());
                out.push(("gen.variance".to_owned(), variance));
            }
            GenKind::Array => out.push(("gen.values".to_owned(), self.values.to_string())),
        }
        out
    }
}

/// Rank-frequency probabilities `k^-z / H` for ranks `1..=count`.
pub fn zipf_probabilities(count: usize, z: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=count).map(|k| (k as f64).powf(-z)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// Splits `n` into zipf-proportional integer counts that sum to `n`, by
/// largest remainder. Ties in the remainder go to the lower rank.
pub fn zipf_counts(n: usize, count: usize, z: f64) -> Vec<usize> {
    let probs = zipf_probabilities(count, z);
    let exact: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

fn check_dims(spec: &GenSpec, domain: &Domain) -> Result<()> {
    spec.validate()?;
    if domain.dims() != spec.dims {
        return Err(Error::DimensionMismatch {
            expected: spec.dims,
            actual: domain.dims(),
        });
    }
    Ok(())
}

/// Tuples drawn from `spec.bells` gaussian bells with centers uniform in the
/// domain. Bell `k` (1-based rank) is picked with probability proportional
/// to `k^-zipf`; samples falling outside the domain are redrawn.
pub fn gen_gauss(spec: &GenSpec, domain: &Domain) -> Result<Dataset> {
    check_dims(spec, domain)?;
    if spec.kind != GenKind::Gauss {
        return Err(Error::InvalidSpec("expected a gauss spec".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers: Vec<Vec<f64>> = (0..spec.bells)
        .map(|_| {
            domain
                .bounds()
                .iter()
                .map(|b| rng.random_range(b.lo..=b.hi))
                .collect()
        })
        .collect();
    let normals = domain
        .bounds()
        .iter()
        .map(|b| {
            let variance = spec.variance.unwrap_or_else(|| (b.width() / 20.0).powi(2));
            Normal::new(0.0, variance.sqrt()).map_err(|e| Error::InvalidSpec(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let chooser = WeightedIndex::new(zipf_probabilities(spec.bells, spec.zipf))
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;

    let mut columns = vec![Vec::with_capacity(spec.n); spec.dims];
    for _ in 0..spec.n {
        let center = &centers[chooser.sample(&mut rng)];
        for (d, column) in columns.iter_mut().enumerate() {
            let bound = domain.bound(d);
            let mut x = center[d] + normals[d].sample(&mut rng);
            let mut redraws = 0;
            while !bound.contains(x) && redraws < MAX_REDRAWS {
                x = center[d] + normals[d].sample(&mut rng);
                redraws += 1;
            }
            column.push(x.clamp(bound.lo, bound.hi));
        }
    }
    Dataset::from_numeric_columns(columns, Some(domain.clone()))
}

/// Evenly spaced value set: `lo + (k + 0.5) * width / count`.
pub fn value_set(bound: Interval, count: usize) -> Vec<f64> {
    let step = bound.width() / count as f64;
    (0..count).map(|k| bound.lo + (k as f64 + 0.5) * step).collect()
}

/// Each attribute takes `spec.values` evenly spaced values. The `k`-th
/// smallest value receives the `k`-th largest zipf count, so dense and
/// sparse areas sit at opposite ends of every axis. Columns are shuffled
/// independently.
pub fn gen_array(spec: &GenSpec, domain: &Domain) -> Result<Dataset> {
    check_dims(spec, domain)?;
    if spec.kind != GenKind::Array {
        return Err(Error::InvalidSpec("expected an array spec".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let counts = zipf_counts(spec.n, spec.values, spec.zipf);
    let columns = domain
        .bounds()
        .iter()
        .map(|&bound| {
            let mut column = Vec::with_capacity(spec.n);
            for (value, &count) in value_set(bound, spec.values).into_iter().zip(&counts) {
                column.extend(std::iter::repeat_n(value, count));
            }
            column.shuffle(&mut rng);
            column
        })
        .collect();
    Dataset::from_numeric_columns(columns, Some(domain.clone()))
}

pub fn generate(spec: &GenSpec, domain: &Domain) -> Result<Dataset> {
    match spec.kind {
        GenKind::Gauss => gen_gauss(spec, domain),
        GenKind::Array => gen_array(spec, domain),
    }
}

/// Manifest for a generated dataset, including the generator parameters.
pub fn generated_manifest(dataset: &Dataset, spec: &GenSpec) -> Manifest {
    let mut manifest = dataset.manifest();
    manifest.extra.extend(spec.manifest_entries());
    manifest
}

/// Tiles per dimension for a workload of `count` boxes: the most balanced
/// factorization of `count` into `dims` factors, larger factors first.
///
/// `100` in two dimensions is `[10, 10]`; in three it is `[5, 5, 4]`.
pub fn tile_counts(count: usize, dims: usize) -> Vec<usize> {
    fn best(count: usize, dims: usize) -> Vec<usize> {
        if dims == 1 {
            return vec![count];
        }
        let mut chosen: Option<Vec<usize>> = None;
        for f in (1..=count).filter(|f| count.is_multiple_of(*f)) {
            let mut rest = best(count / f, dims - 1);
            if rest[0] > f {
                continue;
            }
            rest.insert(0, f);
            let spread = rest[0] as f64 / *rest.last().unwrap() as f64;
            let better = chosen.as_ref().is_none_or(|c| {
                spread < c[0] as f64 / *c.last().unwrap() as f64
            });
            if better {
                chosen = Some(rest);
            }
        }
        chosen.unwrap_or_else(|| {
            let mut v = vec![1; dims];
            v[0] = count;
            v
        })
    }
    best(count.max(1), dims.max(1))
}

/// Non-overlapping tiles whose union is the domain, in row-major order.
pub fn gen_workload(domain: &Domain, count: usize) -> Vec<BoxQuery> {
    let tiles = tile_counts(count, domain.dims());
    let edges: Vec<Vec<f64>> = domain
        .bounds()
        .iter()
        .zip(&tiles)
        .map(|(b, &t)| {
            (0..=t)
                .map(|k| if k == t { b.hi } else { b.lo + b.width() * k as f64 / t as f64 })
                .collect()
        })
        .collect();
    let total: usize = tiles.iter().product();
    (0..total)
        .map(|mut index| {
            let mut ranges = vec![Interval { lo: 0.0, hi: 0.0 }; tiles.len()];
            for d in (0..tiles.len()).rev() {
                let k = index % tiles[d];
                index /= tiles[d];
                ranges[d] = Interval {
                    lo: edges[d][k],
                    hi: edges[d][k + 1],
                };
            }
            BoxQuery::new(ranges)
        })
        .collect()
}

/// `count` boxes with the tile size of [`gen_workload`], placed uniformly at
/// random inside the domain.
pub fn gen_training_workload(domain: &Domain, count: usize, seed: u64) -> Vec<BoxQuery> {
    let tiles = tile_counts(count, domain.dims());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let ranges = domain
                .bounds()
                .iter()
                .zip(&tiles)
                .map(|(b, &t)| {
                    let w = b.width() / t as f64;
                    let lo = b.lo + rng.random::<f64>() * (b.width() - w);
                    Interval { lo, hi: lo + w }
                })
                .collect();
            BoxQuery::new(ranges)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_bytes(ds: &Dataset) -> Vec<u8> {
        let mut out = Vec::new();
        ds.write_csv(&mut out).unwrap();
        out
    }

    #[test]
    fn spec_validation() {
        let mut spec = GenSpec::gauss(10, 2, 1.0, 1);
        assert!(spec.validate().is_ok());
        spec.n = 0;
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
        let mut spec = GenSpec::array(10, 2, -0.5, 1);
        assert!(spec.validate().is_err());
        spec.zipf = 1.5;
        spec.variance = Some(0.0);
        assert!(spec.validate().is_err());
        let mut spec = GenSpec::gauss(10, 0, 1.0, 1);
        assert!(spec.validate().is_err());
        spec.dims = 2;
        spec.bells = 0;
        assert!(spec.validate().is_err());
        let domain = Domain::uniform(3, 0.0, 1.0).unwrap();
        assert!(matches!(
            generate(&GenSpec::gauss(10, 2, 1.0, 1), &domain),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn generators_are_deterministic() {
        let domain = Domain::uniform(3, 0.0, 1000.0).unwrap();
        for spec in [GenSpec::gauss(2000, 3, 1.0, 7), GenSpec::array(2000, 3, 1.0, 7)] {
            let a = csv_bytes(&generate(&spec, &domain).unwrap());
            let b = csv_bytes(&generate(&spec, &domain).unwrap());
            assert_eq!(a, b);
            let other = GenSpec { seed: 8, ..spec.clone() };
            assert_ne!(a, csv_bytes(&generate(&other, &domain).unwrap()));
        }
    }

    #[test]
    fn tuples_stay_in_domain() {
        let domain = Domain::new(vec![Interval::new(-5.0, 5.0).unwrap(), Interval::new(100.0, 101.0).unwrap()]).unwrap();
        let mut spec = GenSpec::gauss(3000, 2, 0.5, 3);
        spec.variance = Some(50.0);
        let ds = gen_gauss(&spec, &domain).unwrap();
        assert!((0..ds.len()).all(|r| domain.contains(&ds.point(r))));
        let ds = gen_array(&GenSpec::array(3000, 2, 2.0, 3), &domain).unwrap();
        assert!((0..ds.len()).all(|r| domain.contains(&ds.point(r))));
    }

    #[test]
    fn vanishing_variance_collapses_bells() {
        let domain = Domain::uniform(2, 0.0, 1000.0).unwrap();
        let mut spec = GenSpec::gauss(500, 2, 1.0, 11);
        spec.bells = 1;
        spec.variance = Some(1e-12);
        let ds = gen_gauss(&spec, &domain).unwrap();
        for d in 0..2 {
            let col = ds.numeric(d);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(hi - lo < 1e-4, "spread {}", hi - lo);
        }
    }

    #[test]
    fn zipf_zero_is_uniform() {
        let counts = zipf_counts(100_000, 100, 0.0);
        let max = *counts.iter().max().unwrap() as f64;
        let min = *counts.iter().min().unwrap() as f64;
        assert!(max / min <= 1.1);
        let domain = Domain::uniform(1, 0.0, 1.0).unwrap();
        let mut spec = GenSpec::array(100_000, 1, 0.0, 5);
        spec.values = 100;
        let ds = gen_array(&spec, &domain).unwrap();
        let mut freq = std::collections::HashMap::new();
        for &v in ds.numeric(0) {
            *freq.entry(v.to_bits()).or_insert(0usize) += 1;
        }
        assert_eq!(freq.len(), 100);
        let max = *freq.values().max().unwrap() as f64;
        let min = *freq.values().min().unwrap() as f64;
        assert!(max / min <= 1.1);
    }

    #[test]
    fn zipf_two_values_ratio() {
        let n = 10_001;
        let counts = zipf_counts(n, 2, 2.0);
        assert_eq!(counts.iter().sum::<usize>(), n);
        assert!((counts[0] as f64 - n as f64 * 0.8).abs() <= 1.0);
        assert!((counts[1] as f64 - n as f64 * 0.2).abs() <= 1.0);
    }

    #[test]
    fn zipf_counts_sum_and_order() {
        for z in [0.5, 1.0, 1.5, 2.0] {
            let counts = zipf_counts(12_345, 37, z);
            assert_eq!(counts.iter().sum::<usize>(), 12_345);
            assert!(counts.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_frequency_slope() {
        let domain = Domain::uniform(1, 0.0, 1000.0).unwrap();
        for z in [0.5, 1.0] {
            let ds = gen_array(&GenSpec::array(500_000, 1, z, 1), &domain).unwrap();
            let mut freq = std::collections::HashMap::new();
            for &v in ds.numeric(0) {
                *freq.entry(v.to_bits()).or_insert(0usize) += 1;
            }
            let mut counts: Vec<usize> = freq.into_values().collect();
            counts.sort_unstable_by(|a, b| b.cmp(a));
            let pts: Vec<(f64, f64)> = counts
                .iter()
                .enumerate()
                .map(|(i, &c)| (((i + 1) as f64).ln(), (c as f64).ln()))
                .collect();
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let slope = sxy / sxx;
            assert!((slope + z).abs() <= 0.1, "z={z} slope={slope}");
        }
    }

    #[test]
    fn array_dense_values_sit_low() {
        let domain = Domain::uniform(1, 0.0, 10.0).unwrap();
        let mut spec = GenSpec::array(1000, 1, 1.0, 2);
        spec.values = 10;
        let ds = gen_array(&spec, &domain).unwrap();
        let at = |v: f64| ds.numeric(0).iter().filter(|&&x| x == v).count();
        assert!(at(0.5) > at(9.5));
        assert_eq!(value_set(Interval { lo: 0.0, hi: 10.0 }, 4), vec![1.25, 3.75, 6.25, 8.75]);
    }

    #[test]
    fn tile_factorizations() {
        assert_eq!(tile_counts(100, 2), vec![10, 10]);
        assert_eq!(tile_counts(100, 3), vec![5, 5, 4]);
        assert_eq!(tile_counts(1, 4), vec![1, 1, 1, 1]);
        assert_eq!(tile_counts(7, 2), vec![7, 1]);
        assert_eq!(tile_counts(64, 3), vec![4, 4, 4]);
        for count in 1..60 {
            for dims in 1..5 {
                assert_eq!(tile_counts(count, dims).iter().product::<usize>(), count);
            }
        }
    }

    #[test]
    fn workload_grid() {
        let domain = Domain::uniform(2, 0.0, 100.0).unwrap();
        let w = gen_workload(&domain, 100);
        assert_eq!(w.len(), 100);
        assert!(w.iter().all(|q| q.widths().all(|x| (x - 10.0).abs() < 1e-12)));
        let single = gen_workload(&domain, 1);
        assert_eq!(single, vec![domain.to_query()]);
    }

    #[test]
    fn workload_covers_domain() {
        let domain = Domain::new(vec![
            Interval::new(0.0, 1000.0).unwrap(),
            Interval::new(-3.0, 7.0).unwrap(),
            Interval::new(1.0, 2.0).unwrap(),
        ])
        .unwrap();
        let w = gen_workload(&domain, 100);
        assert_eq!(w.len(), 100);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..5000 {
            let p: Vec<f64> = domain.bounds().iter().map(|b| rng.random_range(b.lo..=b.hi)).collect();
            assert!(w.iter().any(|q| q.contains_point(&p)));
        }
        for corner in [[0.0, -3.0, 1.0], [1000.0, 7.0, 2.0]] {
            assert!(w.iter().any(|q| q.contains_point(&corner)));
        }
    }

    #[test]
    fn training_workload_shape() {
        let domain = Domain::uniform(3, 0.0, 1000.0).unwrap();
        let t = gen_training_workload(&domain, 100, 4);
        assert_eq!(t.len(), 100);
        assert_eq!(t, gen_training_workload(&domain, 100, 4));
        let dq = domain.to_query();
        assert!(t.iter().all(|q| dq.contains(q)));
        let widths: Vec<f64> = t[0].widths().collect();
        assert!((widths[0] - 200.0).abs() < 1e-9 && (widths[2] - 250.0).abs() < 1e-9);
    }
}
