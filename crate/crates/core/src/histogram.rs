//! Multi-dimensional equi-depth histograms.
//!
//! Buckets are built by recursive equi-count partitioning: the data is cut
//! into quantile slices along the first numeric dimension, each slice is cut
//! along the second, and so on. Buckets tile the domain, so bucket bounds in
//! a dimension always come from a parent slice or a midpoint between two
//! adjacent distinct data values.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{BoxQuery, Dataset, Domain, Interval};
use crate::distance::{per_dim_distance, Metric};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub bounds: Vec<Interval>,
    pub count: u64,
}

impl Bucket {
    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains_point(&self, point: &[f64]) -> bool {
        self.bounds.iter().zip(point).all(|(b, &x)| b.contains(x))
    }

    /// Fraction of the bucket volume inside `query`; degenerate dimensions
    /// count as fully covered when they intersect the query.
    pub fn overlap_fraction(&self, query: &BoxQuery) -> f64 {
        let mut fraction = 1.0;
        for (b, q) in self.bounds.iter().zip(query.ranges()) {
            if !b.intersects(q) {
                return 0.0;
            }
            let width = b.width();
            if width > 0.0 {
                fraction *= b.overlap(q) / width;
            }
            if fraction == 0.0 {
                return 0.0;
            }
        }
        fraction
    }

    pub fn corners(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let d = self.dims();
        (0u64..1 << d).map(move |mask| {
            self.bounds
                .iter()
                .enumerate()
                .map(|(i, b)| if mask >> i & 1 == 1 { b.hi } else { b.lo })
                .collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    buckets: Vec<Bucket>,
    domain: Domain,
    total: u64,
}

impl Histogram {
    /// Equi-depth histogram with `round(budget^(1/D))` slices per dimension.
    ///
    /// Slice sizes are recomputed from what remains, so runs of duplicate
    /// values (which always stay in the lower slice) only shift later cuts.
    /// A dimension can end up with fewer slices than requested when it has
    /// too few distinct values.
    pub fn build_equi_depth(dataset: &Dataset, budget: usize) -> Result<Self> {
        if budget < 1 {
            return Err(Error::InvalidBudget(budget));
        }
        let dims = dataset.dims();
        let fanout = (budget as f64).powf(1.0 / dims as f64).round().max(1.0) as usize;
        let columns = dataset.numeric_columns();
        let mut rows: Vec<u32> = (0..dataset.len() as u32).collect();
        let mut buckets = Vec::new();
        let mut bounds = dataset.domain().bounds().to_vec();
        partition(&columns, &mut rows, 0, fanout, &mut bounds, &mut buckets);
        Ok(Histogram {
            buckets,
            domain: dataset.domain().clone(),
            total: dataset.len() as u64,
        })
    }

    /// Histogram from explicit buckets; the domain is their bounding box,
    /// padded by 0.5 on each side where it is flat.
    pub fn from_buckets(buckets: Vec<Bucket>) -> Result<Self> {
        let first = buckets.first().ok_or(Error::EmptyHistogram)?;
        let dims = first.dims();
        let mut hull = first.bounds.clone();
        for b in &buckets {
            if b.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: b.dims(),
                });
            }
            for (h, i) in hull.iter_mut().zip(&b.bounds) {
                if i.lo.partial_cmp(&i.hi).is_none_or(|o| o.is_gt()) {
                    return Err(Error::InvalidDomain(format!("bucket bound [{}, {}]", i.lo, i.hi)));
                }
                h.lo = h.lo.min(i.lo);
                h.hi = h.hi.max(i.hi);
            }
        }
        for h in hull.iter_mut().filter(|h| h.lo == h.hi) {
            h.lo -= 0.5;
            h.hi += 0.5;
        }
        let total = buckets.iter().map(|b| b.count).sum();
        Ok(Histogram {
            buckets,
            domain: Domain::new(hull)?,
            total,
        })
    }

    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn dims(&self) -> usize {
        self.domain.dims()
    }

    /// Expected number of tuples in `query`, assuming tuples spread
    /// uniformly inside each bucket.
    pub fn estimate_cardinality(&self, query: &BoxQuery) -> f64 {
        self.buckets
            .iter()
            .map(|b| b.count as f64 * b.overlap_fraction(query))
            .sum()
    }

    /// Approximate in-memory footprint: `2D` bounds plus a count per bucket,
    /// eight bytes each.
    pub fn byte_estimate(&self) -> usize {
        Self::bytes_for(self.buckets.len(), self.dims())
    }

    pub fn bytes_for(buckets: usize, dims: usize) -> usize {
        buckets * (2 * dims + 1) * 8
    }

    /// Text form: a `D totalCount` header, then one
    /// `b_l_1 b_h_1 ... b_l_D b_h_D count` line per bucket.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.dims(), self.total);
        for b in &self.buckets {
            for i in &b.bounds {
                let _ = write!(out, "{} {} ", i.lo, i.hi);
            }
            let _ = writeln!(out, "{}", b.count);
        }
        out
    }

    pub fn read_text<R: Read>(reader: R, origin: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Format {
            path: origin.to_path_buf(),
            message: format!("line {line}: {message}"),
        };
        let mut lines = BufReader::new(reader).lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Empty(origin.to_path_buf()))?;
        let header = header.map_err(|e| Error::io(origin, e))?;
        let mut parts = header.split_whitespace();
        let dims: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(1, "expected dimension count".into()))?;
        let total: u64 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(1, "expected total count".into()))?;
        let mut buckets = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 * dims + 1 {
                return Err(err(
                    i + 1,
                    format!("expected {} fields, got {}", 2 * dims + 1, fields.len()),
                ));
            }
            let num = |t: &str| {
                t.parse::<f64>()
                    .map_err(|_| err(i + 1, format!("`{t}` is not a number")))
            };
            let bounds = (0..dims)
                .map(|d| Ok(Interval { lo: num(fields[2 * d])?, hi: num(fields[2 * d + 1])? }))
                .collect::<Result<Vec<_>>>()?;
            let count = fields[2 * dims]
                .parse::<u64>()
                .map_err(|_| err(i + 1, format!("`{}` is not a count", fields[2 * dims])))?;
            buckets.push(Bucket { bounds, count });
        }
        let hist = Histogram::from_buckets(buckets)?;
        if hist.dims() != dims || hist.total != total {
            return Err(err(1, format!(
                "header says {dims} dims / {total} tuples, buckets give {} / {}",
                hist.dims(),
                hist.total
            )));
        }
        Ok(hist)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Histogram::read_text(file, path)
    }
}

fn partition(
    columns: &[&[f64]],
    rows: &mut [u32],
    dim: usize,
    fanout: usize,
    bounds: &mut Vec<Interval>,
    out: &mut Vec<Bucket>,
) {
    if dim == columns.len() {
        out.push(Bucket {
            bounds: bounds.clone(),
            count: rows.len() as u64,
        });
        return;
    }
    let col = columns[dim];
    rows.sort_unstable_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
    let parent = bounds[dim];
    let len = rows.len();
    let mut start = 0;
    let mut lower = parent.lo;
    for slice in 0..fanout {
        if start == len {
            break;
        }
        let end = if slice + 1 == fanout {
            len
        } else {
            let remaining = len - start;
            let mut end = start + remaining.div_ceil(fanout - slice);
            while end < len && col[rows[end] as usize] == col[rows[end - 1] as usize] {
                end += 1;
            }
            end
        };
        let upper = if end == len {
            parent.hi
        } else {
            0.5 * (col[rows[end - 1] as usize] + col[rows[end] as usize])
        };
        bounds[dim] = Interval { lo: lower, hi: upper };
        partition(columns, &mut rows[start..end], dim + 1, fanout, bounds, out);
        lower = upper;
        start = end;
    }
    bounds[dim] = parent;
}

fn check(query: &BoxQuery, bucket: &Bucket, metric: &Metric) -> Result<()> {
    query.check_dims(metric.dims())?;
    if bucket.dims() != metric.dims() {
        return Err(Error::DimensionMismatch {
            expected: metric.dims(),
            actual: bucket.dims(),
        });
    }
    Ok(())
}

/// A point of `bucket` nearest to `query`, picked per dimension without
/// reference to weights or norm.
pub fn nearest_point(query: &BoxQuery, bucket: &Bucket) -> Vec<f64> {
    query
        .ranges()
        .iter()
        .zip(&bucket.bounds)
        .map(|(q, b)| {
            let pick = |x: f64| {
                if b.lo <= x && x <= b.hi {
                    x
                } else if x < b.lo {
                    b.lo
                } else {
                    b.hi
                }
            };
            let near_lo = pick(q.lo);
            let near_hi = pick(q.hi);
            if (q.lo - near_lo).abs() < (q.hi - near_hi).abs() {
                near_lo
            } else {
                near_hi
            }
        })
        .collect()
}

/// A corner of `bucket` farthest from `query`.
///
/// The gap to an interval is convex in the coordinate, so over a bucket
/// edge it peaks at one of the two endpoints; each dimension takes the
/// endpoint with the larger gap. Selecting `b_l` whenever `q_l <= b_l`
/// would pick the near endpoint for buckets lying entirely above the query.
pub fn farthest_point(query: &BoxQuery, bucket: &Bucket) -> Vec<f64> {
    query
        .ranges()
        .iter()
        .zip(&bucket.bounds)
        .map(|(q, b)| {
            if per_dim_distance(b.lo, q.lo, q.hi) >= per_dim_distance(b.hi, q.lo, q.hi) {
                b.lo
            } else {
                b.hi
            }
        })
        .collect()
}

/// Smallest distance from `query` to any point of `bucket`.
pub fn min_dist(query: &BoxQuery, bucket: &Bucket, metric: &Metric) -> Result<f64> {
    check(query, bucket, metric)?;
    Ok(metric.point_distance_unchecked(&nearest_point(query, bucket), query))
}

/// Largest distance from `query` to any point of `bucket`.
pub fn max_dist(query: &BoxQuery, bucket: &Bucket, metric: &Metric) -> Result<f64> {
    check(query, bucket, metric)?;
    Ok(metric.point_distance_unchecked(&farthest_point(query, bucket), query))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::Norm;

    fn bucket(bounds: &[(f64, f64)], count: u64) -> Bucket {
        Bucket {
            bounds: bounds.iter().map(|&(lo, hi)| Interval { lo, hi }).collect(),
            count,
        }
    }

    #[test]
    fn one_dimensional_median_split() {
        let ds = Dataset::from_numeric_columns(vec![vec![3.0, 1.0, 4.0, 2.0]], None).unwrap();
        let h = Histogram::build_equi_depth(&ds, 2).unwrap();
        assert_eq!(h.buckets(), &[bucket(&[(1.0, 2.5)], 2), bucket(&[(2.5, 4.0)], 2)]);
    }

    #[test]
    fn budget_one_is_domain() {
        let ds = Dataset::from_numeric_columns(vec![vec![0.0, 5.0, 9.0], vec![1.0, 1.0, 2.0]], None).unwrap();
        let h = Histogram::build_equi_depth(&ds, 1).unwrap();
        assert_eq!(h.buckets().len(), 1);
        assert_eq!(h.buckets()[0].bounds, ds.domain().bounds());
        assert_eq!(h.buckets()[0].count, 3);
        assert!(matches!(Histogram::build_equi_depth(&ds, 0), Err(Error::InvalidBudget(0))));
    }

    #[test]
    fn grid_two_by_two() {
        let mut pts = Vec::new();
        for x in 0..4 {
            for y in 0..4 {
                pts.push(vec![x as f64, y as f64]);
            }
        }
        let ds = Dataset::from_points(&pts, None).unwrap();
        let h = Histogram::build_equi_depth(&ds, 4).unwrap();
        assert_eq!(h.buckets().len(), 4);
        assert!(h.buckets().iter().all(|b| b.count == 4));
        assert_eq!(h.buckets()[0].bounds, vec![Interval { lo: 0.0, hi: 1.5 }, Interval { lo: 0.0, hi: 1.5 }]);
    }

    #[test]
    fn duplicates_go_to_lower_slice() {
        let ds = Dataset::from_numeric_columns(vec![vec![1.0, 2.0, 2.0, 2.0, 3.0, 4.0]], None).unwrap();
        let h = Histogram::build_equi_depth(&ds, 2).unwrap();
        assert_eq!(h.buckets()[0], bucket(&[(1.0, 2.5)], 4));
        assert_eq!(h.buckets()[1], bucket(&[(2.5, 4.0)], 2));
    }

    #[test]
    fn estimate_examples() {
        let h = Histogram::from_buckets(vec![bucket(&[(0.0, 10.0)], 100)]).unwrap();
        assert_eq!(h.estimate_cardinality(&BoxQuery::from_bounds(&[(0.0, 5.0)]).unwrap()), 50.0);
        assert_eq!(h.estimate_cardinality(&h.domain().to_query()), 100.0);
        assert_eq!(h.estimate_cardinality(&BoxQuery::from_bounds(&[(11.0, 12.0)]).unwrap()), 0.0);
        let flat = Histogram::from_buckets(vec![bucket(&[(2.0, 2.0), (0.0, 1.0)], 7)]).unwrap();
        assert_eq!(flat.estimate_cardinality(&BoxQuery::from_bounds(&[(1.0, 3.0), (0.0, 1.0)]).unwrap()), 7.0);
    }

    #[test]
    fn min_max_examples() {
        let m = Metric::uniform(Norm::L2, 2);
        let q = BoxQuery::from_bounds(&[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        assert_eq!(min_dist(&q, &bucket(&[(0.5, 3.0), (-1.0, 0.5)], 1), &m).unwrap(), 0.0);
        let side = bucket(&[(5.0, 6.0), (0.0, 1.0)], 1);
        assert_eq!(min_dist(&q, &side, &m).unwrap(), 4.0);
        assert_eq!(max_dist(&q, &side, &m).unwrap(), 5.0);
        let diag = bucket(&[(5.0, 6.0), (5.0, 6.0)], 1);
        assert!((min_dist(&q, &diag, &m).unwrap() - 32f64.sqrt()).abs() < 1e-12);
        let inside = bucket(&[(0.2, 0.4), (0.5, 0.6)], 1);
        assert_eq!(max_dist(&q, &inside, &m).unwrap(), 0.0);

        let m1 = Metric::uniform(Norm::L2, 1);
        let q1 = BoxQuery::from_bounds(&[(2.0, 3.0)]).unwrap();
        assert_eq!(max_dist(&q1, &bucket(&[(0.0, 6.0)], 1), &m1).unwrap(), 3.0);
        assert!(matches!(min_dist(&q1, &side, &m1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn text_round_trip() {
        let ds = Dataset::from_numeric_columns(
            vec![vec![0.1, 0.7, 0.3, 0.9, 0.25], vec![1.0, 2.0, 3.0, 4.0, 5.5]],
            None,
        )
        .unwrap();
        let h = Histogram::build_equi_depth(&ds, 4).unwrap();
        let back = Histogram::read_text(h.to_text().as_bytes(), Path::new("h")).unwrap();
        assert_eq!(back, h);
        assert!(Histogram::read_text("2 5\n0 1 0 1\n".as_bytes(), Path::new("h")).is_err());
    }

    #[test]
    fn byte_model() {
        assert_eq!(Histogram::bytes_for(256, 3), 256 * 7 * 8);
    }
}
