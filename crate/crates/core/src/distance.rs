//! Distances between points and box queries.
//!
//! A point inside or on a box is at distance zero. Outside, each dimension
//! contributes its gap to the nearest face, scaled by a per-dimension weight,
//! and the contributions are combined with an L1, L2 or L-infinity norm.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{BoxQuery, CategoricalStats, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    #[default]
    L2,
    LInf,
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::LInf => "linf",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" | "1" => Ok(Norm::L1),
            "l2" | "2" => Ok(Norm::L2),
            "linf" | "inf" => Ok(Norm::LInf),
            other => Err(Error::InvalidMetric(format!("unknown norm `{other}`"))),
        }
    }
}

impl Norm {
    /// Norm of already-weighted, nonnegative components.
    pub fn combine<I: IntoIterator<Item = f64>>(self, components: I) -> f64 {
        match self {
            Norm::L1 => components.into_iter().sum(),
            Norm::L2 => components.into_iter().map(|c| c * c).sum::<f64>().sqrt(),
            Norm::LInf => components.into_iter().fold(0.0, f64::max),
        }
    }
}

/// Gap between coordinate `p` and the interval `[lo, hi]`.
#[inline]
pub fn per_dim_distance(p: f64, lo: f64, hi: f64) -> f64 {
    if p > hi {
        p - hi
    } else if p < lo {
        lo - p
    } else {
        0.0
    }
}

/// Bounds applied to derived weights when a query has zero-width ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightLimits {
    /// Cap for aspect weights; a point constraint relaxes by `r / max_weight`.
    pub max_weight: f64,
    /// Floor for inverse weights.
    pub min_weight: f64,
}

impl Default for WeightLimits {
    fn default() -> Self {
        WeightLimits {
            max_weight: 1e6,
            min_weight: 1e-6,
        }
    }
}

/// Weights that relax each dimension in proportion to its range width.
///
/// `w_i = max_j(width_j) / width_i`, capped at `limits.max_weight`. A query
/// whose ranges are all zero-width gets unit weights.
pub fn aspect_weights(query: &BoxQuery, limits: WeightLimits) -> Vec<f64> {
    let widest = query.widths().fold(0.0, f64::max);
    if widest <= 0.0 {
        return vec![1.0; query.dims()];
    }
    query
        .widths()
        .map(|w| {
            if w > 0.0 {
                (widest / w).min(limits.max_weight)
            } else {
                limits.max_weight
            }
        })
        .collect()
}

/// Weights that relax each dimension in inverse proportion to its range
/// width: `w_i = width_i / max_j(width_j)`, floored at `limits.min_weight`.
pub fn inverse_weights(query: &BoxQuery, limits: WeightLimits) -> Vec<f64> {
    let widest = query.widths().fold(0.0, f64::max);
    if widest <= 0.0 {
        return vec![1.0; query.dims()];
    }
    query
        .widths()
        .map(|w| (w / widest).max(limits.min_weight))
        .collect()
}

/// How per-dimension weights are chosen for a query.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    Aspect,
    Inverse,
    Explicit(Vec<f64>),
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weighting::Aspect => f.write_str("aspect"),
            Weighting::Inverse => f.write_str("inverse"),
            Weighting::Explicit(w) => {
                let parts: Vec<String> = w.iter().map(f64::to_string).collect();
                write!(f, "explicit:{}", parts.join(","))
            }
        }
    }
}

/// Parses `aspect`, `inverse` or `explicit:w1,w2,...`.
impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "aspect" => return Ok(Weighting::Aspect),
            "inverse" => return Ok(Weighting::Inverse),
            _ => {}
        }
        let list = s
            .strip_prefix("explicit:")
            .ok_or_else(|| Error::InvalidMetric(format!("unknown weighting `{s}`")))?;
        let weights = list
            .split(',')
            .map(|w| {
                w.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidMetric(format!("`{w}` is not a weight")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Weighting::Explicit(weights))
    }
}

/// Norm plus weighting rule; resolves to a concrete [`Metric`] per query.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSpec {
    pub norm: Norm,
    pub weighting: Weighting,
    pub limits: WeightLimits,
    /// Categorical attributes whose equality predicates become soft terms.
    #[serde(default)]
    pub categorical_weights: Vec<(String, f64)>,
}

impl MetricSpec {
    pub fn new(norm: Norm, weighting: Weighting) -> Self {
        MetricSpec {
            norm,
            weighting,
            ..MetricSpec::default()
        }
    }

    pub fn resolve(&self, query: &BoxQuery) -> Result<Metric> {
        let weights = match &self.weighting {
            Weighting::Aspect => aspect_weights(query, self.limits),
            Weighting::Inverse => inverse_weights(query, self.limits),
            Weighting::Explicit(w) => {
                query.check_dims(w.len())?;
                w.clone()
            }
        };
        let mut metric = Metric::new(self.norm, weights)?;
        for (attr, w) in &self.categorical_weights {
            metric = metric.with_categorical_weight(attr.clone(), *w)?;
        }
        Ok(metric)
    }
}

/// Concrete weighted norm for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    norm: Norm,
    weights: Vec<f64>,
    categorical: Vec<(String, f64)>,
}

impl Metric {
    /// Weights must be finite and nonnegative with at least one positive.
    pub fn new(norm: Norm, weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMetric(format!(
                "weights must be finite and nonnegative: {weights:?}"
            )));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidMetric("at least one weight must be positive".into()));
        }
        Ok(Metric {
            norm,
            weights,
            categorical: Vec::new(),
        })
    }

    /// Unweighted metric on `dims` dimensions.
    pub fn uniform(norm: Norm, dims: usize) -> Self {
        Metric {
            norm,
            weights: vec![1.0; dims],
            categorical: Vec::new(),
        }
    }

    pub fn with_categorical_weight(mut self, attribute: impl Into<String>, weight: f64) -> Result<Self> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::InvalidMetric(format!(
                "categorical weight must be finite and nonnegative, got {weight}"
            )));
        }
        let attribute = attribute.into();
        self.categorical.retain(|(a, _)| *a != attribute);
        self.categorical.push((attribute, weight));
        Ok(self)
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dims(&self) -> usize {
        self.weights.len()
    }

    pub fn categorical_weight(&self, attribute: &str) -> f64 {
        self.categorical
            .iter()
            .find(|(a, _)| a == attribute)
            .map_or(0.0, |(_, w)| *w)
    }

    /// Weighted norm of unweighted per-dimension gaps.
    #[inline]
    pub fn combine(&self, gaps: &[f64]) -> f64 {
        self.norm
            .combine(gaps.iter().zip(&self.weights).map(|(d, w)| d * w))
    }

    /// Distance from a numeric point to the box.
    pub fn point_distance(&self, point: &[f64], query: &BoxQuery) -> Result<f64> {
        query.check_dims(self.dims())?;
        if point.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: point.len(),
            });
        }
        Ok(self.point_distance_unchecked(point, query))
    }

    #[inline]
    pub(crate) fn point_distance_unchecked(&self, point: &[f64], query: &BoxQuery) -> f64 {
        self.norm.combine(
            point
                .iter()
                .zip(query.ranges())
                .zip(&self.weights)
                .map(|((&p, r), w)| per_dim_distance(p, r.lo, r.hi) * w),
        )
    }
}

/// Similarity of two tuples that share categorical value `value`.
///
/// `Sim(v) = 1 - sum over l with f_l <= f_v of f_l (f_l - 1) / (n (n - 1))`.
/// Values tied in frequency with `v` are included in the sum.
pub fn similarity(value: &str, stats: &CategoricalStats) -> Result<f64> {
    let f_v = stats.frequency(value).ok_or_else(|| Error::UnknownValue {
        attribute: String::new(),
        value: value.to_owned(),
    })?;
    Ok(similarity_for_frequency(f_v, stats))
}

fn similarity_for_frequency(f_v: u64, stats: &CategoricalStats) -> f64 {
    let n = stats.total() as u128;
    if n < 2 {
        return 1.0;
    }
    let numerator: u128 = stats
        .frequencies()
        .iter()
        .filter(|&&f| f <= f_v)
        .map(|&f| f as u128 * (f as u128 - 1))
        .sum();
    1.0 - numerator as f64 / (n * (n - 1)) as f64
}

/// `Sim` for every value code, in code order.
pub fn similarity_table(stats: &CategoricalStats) -> Vec<f64> {
    let n = stats.total() as u128;
    let freqs = stats.frequencies();
    if n < 2 {
        return vec![1.0; freqs.len()];
    }
    let mut sorted: Vec<u64> = freqs.to_vec();
    sorted.sort_unstable();
    // prefix[i] = sum of f(f-1) over the i smallest frequencies
    let mut prefix = Vec::with_capacity(sorted.len() + 1);
    prefix.push(0u128);
    for &f in &sorted {
        let last = *prefix.last().unwrap();
        prefix.push(last + f as u128 * (f as u128 - 1));
    }
    let denom = (n * (n - 1)) as f64;
    freqs
        .iter()
        .map(|&f| {
            let upto = sorted.partition_point(|&g| g <= f);
            1.0 - prefix[upto] as f64 / denom
        })
        .collect()
}

/// Zero for equal values, otherwise `Sim(v1) * Sim(v2)`.
pub fn categorical_distance(v1: &str, v2: &str, stats: &CategoricalStats) -> Result<f64> {
    let s1 = similarity(v1, stats)?;
    let s2 = similarity(v2, stats)?;
    Ok(if v1 == v2 { 0.0 } else { s1 * s2 })
}

/// Distance evaluator for the tuples of one dataset against one query.
///
/// Categorical predicates whose attribute has a positive weight in the
/// metric contribute `weight * DIST(target, value)` as an extra component
/// of the norm; other predicates are left to the executor as hard filters.
pub struct TupleDistance<'a> {
    metric: &'a Metric,
    query: &'a BoxQuery,
    columns: Vec<&'a [f64]>,
    soft: Vec<SoftTerm<'a>>,
}

struct SoftTerm<'a> {
    codes: &'a [u32],
    /// Weighted distance from the query value, by value code.
    by_code: Vec<f64>,
}

impl<'a> TupleDistance<'a> {
    pub fn new(dataset: &'a Dataset, query: &'a BoxQuery, metric: &'a Metric) -> Result<Self> {
        query.check_dims(dataset.dims())?;
        query.check_dims(metric.dims())?;
        let mut soft = Vec::new();
        for pred in query.predicates() {
            let weight = metric.categorical_weight(&pred.attribute);
            if weight <= 0.0 {
                continue;
            }
            let column = dataset.categorical(&pred.attribute)?;
            let stats = column.stats();
            let target = stats.code(&pred.value).ok_or_else(|| Error::UnknownValue {
                attribute: pred.attribute.clone(),
                value: pred.value.clone(),
            })?;
            let sims = similarity_table(stats);
            let by_code = (0..stats.distinct() as u32)
                .map(|c| {
                    if c == target {
                        0.0
                    } else {
                        weight * sims[c as usize] * sims[target as usize]
                    }
                })
                .collect();
            soft.push(SoftTerm {
                codes: column.codes(),
                by_code,
            });
        }
        Ok(TupleDistance {
            metric,
            query,
            columns: dataset.numeric_columns(),
            soft,
        })
    }

    /// True when some predicate is scored rather than filtered.
    pub fn has_soft_terms(&self) -> bool {
        !self.soft.is_empty()
    }

    #[inline]
    pub fn distance(&self, row: usize) -> f64 {
        let numeric = self
            .columns
            .iter()
            .zip(self.query.ranges())
            .zip(self.metric.weights())
            .map(|((col, r), w)| per_dim_distance(col[row], r.lo, r.hi) * w);
        let categorical = self
            .soft
            .iter()
            .map(|t| t.by_code[t.codes[row] as usize]);
        self.metric.norm().combine(numeric.chain(categorical))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Interval;
    use proptest::prelude::*;

    fn square(lo: f64, hi: f64) -> BoxQuery {
        BoxQuery::from_bounds(&[(lo, hi), (lo, hi)]).unwrap()
    }

    #[test]
    fn per_dim_branches() {
        assert_eq!(per_dim_distance(2.5, 1.0, 3.0), 0.0);
        assert_eq!(per_dim_distance(5.0, 1.0, 3.0), 2.0);
        assert_eq!(per_dim_distance(0.0, 1.0, 3.0), 1.0);
    }

    #[test]
    fn box_distance_examples() {
        let b = square(0.0, 3.0);
        let m = Metric::uniform(Norm::L2, 2);
        assert_eq!(m.point_distance(&[2.0, 2.0], &b).unwrap(), 0.0);
        assert!((m.point_distance(&[4.0, 5.0], &b).unwrap() - 5f64.sqrt()).abs() < 1e-12);
        let w = Metric::new(Norm::L2, vec![2.0, 1.0]).unwrap();
        assert!((w.point_distance(&[4.0, 5.0], &b).unwrap() - 8f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            m.point_distance(&[1.0], &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn norms() {
        let b = square(0.0, 3.0);
        let p = [4.0, 5.0];
        assert_eq!(Metric::uniform(Norm::L1, 2).point_distance(&p, &b).unwrap(), 3.0);
        assert_eq!(Metric::uniform(Norm::LInf, 2).point_distance(&p, &b).unwrap(), 2.0);
    }

    #[test]
    fn periphery_beats_center() {
        let b = square(0.0, 4.0);
        let m = Metric::uniform(Norm::L2, 2);
        let p = m.point_distance(&[4.5, 2.0], &b).unwrap();
        let q = m.point_distance(&[3.0, 7.0], &b).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!((q - 3.0).abs() < 1e-12);
        assert!(p < q);
    }

    #[test]
    fn aspect_and_inverse_weights() {
        let l = WeightLimits::default();
        let q = BoxQuery::from_bounds(&[(0.0, 10.0), (0.0, 5.0)]).unwrap();
        assert_eq!(aspect_weights(&q, l), vec![1.0, 2.0]);
        assert_eq!(inverse_weights(&q, l), vec![1.0, 0.5]);
        let cube = BoxQuery::from_bounds(&[(0.0, 4.0), (1.0, 5.0), (2.0, 6.0)]).unwrap();
        assert_eq!(aspect_weights(&cube, l), vec![1.0; 3]);
        assert_eq!(inverse_weights(&cube, l), vec![1.0; 3]);
        let flat = BoxQuery::from_bounds(&[(0.0, 10.0), (3.0, 3.0)]).unwrap();
        assert_eq!(aspect_weights(&flat, l), vec![1.0, 1e6]);
        assert_eq!(inverse_weights(&flat, l), vec![1.0, 1e-6]);
        let point = BoxQuery::from_bounds(&[(1.0, 1.0), (3.0, 3.0)]).unwrap();
        assert_eq!(aspect_weights(&point, l), vec![1.0, 1.0]);
        assert_eq!(inverse_weights(&point, l), vec![1.0, 1.0]);
    }

    #[test]
    fn metric_validation() {
        assert!(Metric::new(Norm::L2, vec![0.0, 0.0]).is_err());
        assert!(Metric::new(Norm::L2, vec![-1.0, 1.0]).is_err());
        assert!(Metric::new(Norm::L2, vec![f64::INFINITY, 1.0]).is_err());
        assert!(Metric::new(Norm::L2, vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn weighting_parse() {
        assert_eq!("aspect".parse::<Weighting>().unwrap(), Weighting::Aspect);
        assert_eq!(
            "explicit:1,2.5".parse::<Weighting>().unwrap(),
            Weighting::Explicit(vec![1.0, 2.5])
        );
        assert!("bogus".parse::<Weighting>().is_err());
        assert_eq!("linf".parse::<Norm>().unwrap(), Norm::LInf);
    }

    #[test]
    fn similarity_examples() {
        let stats = CategoricalStats::from_values(["a", "a", "a", "b", "b"]);
        assert!((similarity("b", &stats).unwrap() - 0.9).abs() < 1e-12);
        assert!((similarity("a", &stats).unwrap() - 0.6).abs() < 1e-12);
        let single = CategoricalStats::from_values(["a"]);
        assert_eq!(similarity("a", &single).unwrap(), 1.0);
        assert!(similarity("z", &stats).is_err());
    }

    #[test]
    fn categorical_distance_examples() {
        let stats = CategoricalStats::from_values(["a", "a", "a", "b", "b"]);
        assert_eq!(categorical_distance("a", "a", &stats).unwrap(), 0.0);
        assert!((categorical_distance("a", "b", &stats).unwrap() - 0.54).abs() < 1e-12);
        let tied = CategoricalStats::from_values(["a", "a", "b", "b", "c"]);
        assert!((similarity("a", &tied).unwrap() - 0.8).abs() < 1e-12);
        assert!((categorical_distance("a", "b", &tied).unwrap() - 0.64).abs() < 1e-12);
        assert!(categorical_distance("a", "q", &stats).is_err());
    }

    #[test]
    fn similarity_table_matches_direct() {
        let stats = CategoricalStats::from_values(["x", "y", "y", "z", "z", "z", "w", "w"]);
        let table = similarity_table(&stats);
        for code in 0..stats.distinct() as u32 {
            let v = stats.value(code);
            assert!((table[code as usize] - similarity(v, &stats).unwrap()).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn zero_inside_positive_outside(
            lo in -50.0f64..50.0, w in 0.0f64..20.0,
            lo2 in -50.0f64..50.0, w2 in 0.0f64..20.0,
            px in -100.0f64..100.0, py in -100.0f64..100.0,
            wx in 0.01f64..10.0, wy in 0.01f64..10.0,
        ) {
            let q = BoxQuery::new(vec![Interval { lo, hi: lo + w }, Interval { lo: lo2, hi: lo2 + w2 }]);
            for norm in [Norm::L1, Norm::L2, Norm::LInf] {
                let m = Metric::new(norm, vec![wx, wy]).unwrap();
                let d = m.point_distance(&[px, py], &q).unwrap();
                prop_assert!(d >= 0.0);
                prop_assert_eq!(d == 0.0, q.contains_point(&[px, py]));
            }
        }

        #[test]
        fn enlarging_box_never_increases_distance(
            lo in -50.0f64..50.0, w in 0.0f64..20.0,
            grow_lo in 0.0f64..10.0, grow_hi in 0.0f64..10.0,
            px in -100.0f64..100.0, py in -100.0f64..100.0,
        ) {
            let q = BoxQuery::new(vec![Interval { lo, hi: lo + w }; 2]);
            let big = BoxQuery::new(vec![Interval { lo: lo - grow_lo, hi: lo + w + grow_hi }, q.range(1)]);
            let m = Metric::uniform(Norm::L2, 2);
            prop_assert!(m.point_distance(&[px, py], &big).unwrap() <= m.point_distance(&[px, py], &q).unwrap());
        }

        #[test]
        fn categorical_distance_properties(freqs in prop::collection::vec(1u64..40, 2..8)) {
            let table: Vec<(String, u64)> = freqs.iter().enumerate().map(|(i, &f)| (format!("v{i}"), f)).collect();
            let stats = CategoricalStats::from_frequencies(&table).unwrap();
            for (a, fa) in &table {
                let sa = similarity(a, &stats).unwrap();
                prop_assert!((0.0..=1.0).contains(&sa));
                for (b, fb) in &table {
                    let d = categorical_distance(a, b, &stats).unwrap();
                    prop_assert!((0.0..=1.0).contains(&d));
                    prop_assert_eq!(d, categorical_distance(b, a, &stats).unwrap());
                    prop_assert_eq!(d == 0.0, a == b || similarity(a, &stats).unwrap() * similarity(b, &stats).unwrap() == 0.0);
                    // a rarer value is at least as similar on a match
                    if fa < fb {
                        prop_assert!(sa >= similarity(b, &stats).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn frequency_ladder_orders_distances() {
        // a most frequent, then b, then c
        let stats = CategoricalStats::from_frequencies(&[("a", 6), ("b", 3), ("c", 1)]).unwrap();
        let ac = categorical_distance("a", "c", &stats).unwrap();
        let bc = categorical_distance("b", "c", &stats).unwrap();
        let ab = categorical_distance("a", "b", &stats).unwrap();
        assert!(ac < bc);
        assert!(ab < bc);
        assert!(similarity("c", &stats).unwrap() > similarity("b", &stats).unwrap());
        assert!(similarity("b", &stats).unwrap() > similarity("a", &stats).unwrap());
    }
}
