//! Columnar datasets, schemas, domains and box queries.
//!
//! A [`Dataset`] is immutable once built. Numeric attributes are stored as
//! `f64` columns and form the dimensions of box queries, in schema order.
//! Categorical attributes are interned to dense `u32` codes, and their
//! frequency statistics are computed once at construction.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttributeKind::Numeric => "numeric",
            AttributeKind::Categorical => "categorical",
        })
    }
}

impl FromStr for AttributeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "numeric" => Ok(AttributeKind::Numeric),
            "categorical" => Ok(AttributeKind::Categorical),
            other => Err(Error::InvalidSchema(format!("unknown attribute kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Categorical,
        }
    }
}

/// Ordered attribute list with unique, non-empty names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    attributes: Vec<Attribute>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::InvalidSchema("at least one attribute is required".into()));
        }
        let mut seen = HashMap::new();
        for (i, attr) in attributes.iter().enumerate() {
            if attr.name.trim().is_empty() {
                return Err(Error::InvalidSchema(format!("attribute {i} has an empty name")));
            }
            if seen.insert(attr.name.as_str(), i).is_some() {
                return Err(Error::InvalidSchema(format!(
                    "duplicate attribute name `{}`",
                    attr.name
                )));
            }
        }
        Ok(Schema { attributes })
    }

    /// All-numeric schema, mostly for generated data and tests.
    pub fn numeric<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Schema::new(names.iter().map(|n| Attribute::numeric(n.as_ref())).collect())
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Number of numeric attributes, i.e. the dimensionality of box queries.
    pub fn numeric_dims(&self) -> usize {
        self.attributes
            .iter()
            .filter(|a| a.kind == AttributeKind::Numeric)
            .count()
    }

    pub fn numeric_names(&self) -> impl Iterator<Item = &str> {
        self.attributes
            .iter()
            .filter(|a| a.kind == AttributeKind::Numeric)
            .map(|a| a.name.as_str())
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidQuery(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Length of the overlap with `other`, zero when disjoint.
    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }

    pub fn clamp_to(&self, bounds: &Interval) -> Interval {
        let lo = self.lo.max(bounds.lo).min(bounds.hi);
        let hi = self.hi.min(bounds.hi).max(lo);
        Interval { lo, hi }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

/// Per-dimension value bounds of the numeric attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    bounds: Vec<Interval>,
}

impl Domain {
    pub fn new(bounds: Vec<Interval>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidDomain("at least one dimension is required".into()));
        }
        for (i, b) in bounds.iter().enumerate() {
            if !(b.lo.is_finite() && b.hi.is_finite() && b.lo < b.hi) {
                return Err(Error::InvalidDomain(format!(
                    "dimension {i}: bounds [{}, {}] must be finite with lo < hi",
                    b.lo, b.hi
                )));
            }
        }
        Ok(Domain { bounds })
    }

    /// The same `[lo, hi]` on every one of `dims` dimensions.
    pub fn uniform(dims: usize, lo: f64, hi: f64) -> Result<Self> {
        Domain::new(vec![Interval { lo, hi }; dims])
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn bound(&self, dim: usize) -> Interval {
        self.bounds[dim]
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.bounds.len()
            && self.bounds.iter().zip(point).all(|(b, &x)| b.contains(x))
    }

    /// The whole domain as a box query.
    pub fn to_query(&self) -> BoxQuery {
        BoxQuery::new(self.bounds.clone())
    }
}

/// Equality predicate on a categorical attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalPredicate {
    pub attribute: String,
    pub value: String,
}

/// Conjunctive range query: one closed interval per numeric dimension,
/// plus optional categorical equality predicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxQuery {
    ranges: Vec<Interval>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    predicates: Vec<CategoricalPredicate>,
}

impl BoxQuery {
    pub fn new(ranges: Vec<Interval>) -> Self {
        BoxQuery {
            ranges,
            predicates: Vec::new(),
        }
    }

    /// Builds a query from `(lo, hi)` pairs, validating each interval.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let ranges = bounds
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        if ranges.is_empty() {
            return Err(Error::InvalidQuery("a box query needs at least one range".into()));
        }
        Ok(BoxQuery::new(ranges))
    }

    pub fn with_predicate(mut self, attribute: impl Into<String>, value: impl Into<String>) -> Self {
        self.predicates.push(CategoricalPredicate {
            attribute: attribute.into(),
            value: value.into(),
        });
        self
    }

    pub fn with_predicates(mut self, predicates: Vec<CategoricalPredicate>) -> Self {
        self.predicates = predicates;
        self
    }

    pub fn dims(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[Interval] {
        &self.ranges
    }

    pub fn range(&self, dim: usize) -> Interval {
        self.ranges[dim]
    }

    pub fn predicates(&self) -> &[CategoricalPredicate] {
        &self.predicates
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.ranges.iter().map(Interval::width)
    }

    pub fn contains_point(&self, point: &[f64]) -> bool {
        self.ranges.iter().zip(point).all(|(r, &x)| r.contains(x))
    }

    /// True when every range of `other` lies inside the matching range of `self`.
    pub fn contains(&self, other: &BoxQuery) -> bool {
        self.dims() == other.dims()
            && self
                .ranges
                .iter()
                .zip(&other.ranges)
                .all(|(a, b)| a.contains_interval(b))
    }

    pub fn check_dims(&self, expected: usize) -> Result<()> {
        if self.dims() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for BoxQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.ranges.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Parses `lo:hi,lo:hi,...`.
impl FromStr for BoxQuery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut bounds = Vec::new();
        for part in s.split(',') {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidQuery(format!("expected `lo:hi`, got `{part}`")))?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidQuery(format!("`{t}` is not a number")))
            };
            bounds.push((parse(lo)?, parse(hi)?));
        }
        BoxQuery::from_bounds(&bounds)
    }
}

/// Value frequencies of one categorical attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalStats {
    values: Vec<String>,
    index: HashMap<String, u32>,
    frequencies: Vec<u64>,
    total: u64,
}

impl CategoricalStats {
    /// Counts every occurrence; codes are assigned in order of first appearance.
    pub fn from_values<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut stats = CategoricalStats {
            values: Vec::new(),
            index: HashMap::new(),
            frequencies: Vec::new(),
            total: 0,
        };
        for v in values {
            stats.intern(v.as_ref());
        }
        stats
    }

    /// Builds stats directly from a frequency table.
    pub fn from_frequencies<S: AsRef<str>>(table: &[(S, u64)]) -> Result<Self> {
        let mut stats = CategoricalStats::from_values(std::iter::empty::<&str>());
        for (value, freq) in table {
            if *freq == 0 {
                return Err(Error::InvalidSchema(format!(
                    "value `{}` has zero frequency",
                    value.as_ref()
                )));
            }
            if stats.index.contains_key(value.as_ref()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate value `{}`",
                    value.as_ref()
                )));
            }
            let code = stats.intern(value.as_ref());
            stats.frequencies[code as usize] += freq - 1;
            stats.total += freq - 1;
        }
        Ok(stats)
    }

    fn intern(&mut self, value: &str) -> u32 {
        let code = match self.index.get(value) {
            Some(&c) => c,
            None => {
                let c = self.values.len() as u32;
                self.values.push(value.to_owned());
                self.index.insert(value.to_owned(), c);
                self.frequencies.push(0);
                c
            }
        };
        self.frequencies[code as usize] += 1;
        self.total += 1;
        code
    }

    /// Total number of tuples, `n`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.values.len()
    }

    pub fn code(&self, value: &str) -> Option<u32> {
        self.index.get(value).copied()
    }

    pub fn value(&self, code: u32) -> &str {
        &self.values[code as usize]
    }

    pub fn frequency(&self, value: &str) -> Option<u64> {
        self.code(value).map(|c| self.frequencies[c as usize])
    }

    pub fn frequency_of_code(&self, code: u32) -> u64 {
        self.frequencies[code as usize]
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequencies
    }

    /// `(value, frequency)` pairs sorted by value.
    pub fn to_map(&self) -> BTreeMap<String, u64> {
        self.values
            .iter()
            .cloned()
            .zip(self.frequencies.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalColumn {
    codes: Vec<u32>,
    stats: CategoricalStats,
}

impl CategoricalColumn {
    pub fn from_values<S: AsRef<str>>(values: &[S]) -> Self {
        let mut stats = CategoricalStats::from_values(std::iter::empty::<&str>());
        let codes = values.iter().map(|v| stats.intern(v.as_ref())).collect();
        CategoricalColumn { codes, stats }
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn stats(&self) -> &CategoricalStats {
        &self.stats
    }

    pub fn value_at(&self, row: usize) -> &str {
        self.stats.value(self.codes[row])
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(CategoricalColumn),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn kind(&self) -> AttributeKind {
        match self {
            Column::Numeric(_) => AttributeKind::Numeric,
            Column::Categorical(_) => AttributeKind::Categorical,
        }
    }
}

/// Immutable columnar table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    domain: Domain,
    columns: Vec<Column>,
    /// Attribute index of each numeric dimension.
    numeric: Vec<usize>,
    len: usize,
}

impl Dataset {
    /// Validates the columns against `schema`. When `domain` is `None` it is
    /// inferred as the per-dimension `[min, max]` of the data; a constant
    /// column gets `[v - 0.5, v + 0.5]` so that bounds stay non-degenerate.
    pub fn new(schema: Schema, columns: Vec<Column>, domain: Option<Domain>) -> Result<Self> {
        if columns.len() != schema.len() {
            return Err(Error::InvalidSchema(format!(
                "schema has {} attributes but {} columns were supplied",
                schema.len(),
                columns.len()
            )));
        }
        let len = columns[0].len();
        if len == 0 {
            return Err(Error::InvalidSchema("a dataset needs at least one tuple".into()));
        }
        for (attr, col) in schema.attributes().iter().zip(&columns) {
            if attr.kind != col.kind() {
                return Err(Error::InvalidSchema(format!(
                    "attribute `{}` is {} but its column is {}",
                    attr.name,
                    attr.kind,
                    col.kind()
                )));
            }
            if col.len() != len {
                return Err(Error::InvalidSchema(format!(
                    "column `{}` has {} values, expected {len}",
                    attr.name,
                    col.len()
                )));
            }
        }
        let numeric: Vec<usize> = schema
            .attributes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind == AttributeKind::Numeric)
            .map(|(i, _)| i)
            .collect();
        if numeric.is_empty() {
            return Err(Error::InvalidSchema("at least one numeric attribute is required".into()));
        }
        for &i in &numeric {
            if let Column::Numeric(values) = &columns[i] {
                if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidSchema(format!(
                        "attribute `{}` row {row}: non-finite value",
                        schema.attributes()[i].name
                    )));
                }
            }
        }

        let numeric_col = |i: usize| match &columns[i] {
            Column::Numeric(v) => v.as_slice(),
            Column::Categorical(_) => unreachable!(),
        };
        let domain = match domain {
            Some(d) => {
                if d.dims() != numeric.len() {
                    return Err(Error::DimensionMismatch {
                        expected: numeric.len(),
                        actual: d.dims(),
                    });
                }
                for (dim, &i) in numeric.iter().enumerate() {
                    let b = d.bound(dim);
                    if let Some(row) = numeric_col(i).iter().position(|&v| !b.contains(v)) {
                        return Err(Error::InvalidDomain(format!(
                            "attribute `{}` row {row}: value {} outside [{}, {}]",
                            schema.attributes()[i].name,
                            numeric_col(i)[row],
                            b.lo,
                            b.hi
                        )));
                    }
                }
                d
            }
            None => Domain::new(
                numeric
                    .iter()
                    .map(|&i| {
                        let (lo, hi) = numeric_col(i)
                            .iter()
                            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                                (lo.min(v), hi.max(v))
                            });
                        if lo < hi {
                            Interval { lo, hi }
                        } else {
                            Interval {
                                lo: lo - 0.5,
                                hi: hi + 0.5,
                            }
                        }
                    })
                    .collect(),
            )?,
        };

        Ok(Dataset {
            schema,
            domain,
            columns,
            numeric,
            len,
        })
    }

    /// All-numeric dataset from per-dimension columns named `d0, d1, ...`.
    pub fn from_numeric_columns(columns: Vec<Vec<f64>>, domain: Option<Domain>) -> Result<Self> {
        let names: Vec<String> = (0..columns.len()).map(|i| format!("d{i}")).collect();
        let schema = Schema::numeric(&names)?;
        Dataset::new(schema, columns.into_iter().map(Column::Numeric).collect(), domain)
    }

    /// All-numeric dataset from row-major points.
    pub fn from_points(points: &[Vec<f64>], domain: Option<Domain>) -> Result<Self> {
        let dims = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidSchema("a dataset needs at least one tuple".into()))?;
        let mut columns = vec![Vec::with_capacity(points.len()); dims];
        for p in points {
            if p.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: p.len(),
                });
            }
            for (c, &v) in columns.iter_mut().zip(p) {
                c.push(v);
            }
        }
        Dataset::from_numeric_columns(columns, domain)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of numeric dimensions.
    pub fn dims(&self) -> usize {
        self.numeric.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    /// Values of numeric dimension `dim`.
    pub fn numeric(&self, dim: usize) -> &[f64] {
        match &self.columns[self.numeric[dim]] {
            Column::Numeric(v) => v,
            Column::Categorical(_) => unreachable!("numeric index points at a numeric column"),
        }
    }

    pub fn numeric_columns(&self) -> Vec<&[f64]> {
        (0..self.dims()).map(|d| self.numeric(d)).collect()
    }

    pub fn point(&self, row: usize) -> Vec<f64> {
        (0..self.dims()).map(|d| self.numeric(d)[row]).collect()
    }

    pub fn categorical(&self, attribute: &str) -> Result<&CategoricalColumn> {
        let i = self
            .schema
            .position(attribute)
            .ok_or_else(|| Error::UnknownAttribute(attribute.to_owned()))?;
        match &self.columns[i] {
            Column::Categorical(c) => Ok(c),
            Column::Numeric(_) => Err(Error::NotCategorical(attribute.to_owned())),
        }
    }

    /// Exact value frequencies of a categorical attribute.
    pub fn categorical_stats(&self, attribute: &str) -> Result<&CategoricalStats> {
        self.categorical(attribute).map(CategoricalColumn::stats)
    }

    /// Reads a CSV file whose header names exactly the schema attributes
    /// (in any order). Empty cells are rejected.
    pub fn load_csv(path: impl AsRef<Path>, schema: &Schema, domain: Option<Domain>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Dataset::read_csv(file, path, schema, domain)
    }

    /// Like [`Dataset::load_csv`], reading from any source. `origin` labels errors.
    pub fn read_csv<R: Read>(
        reader: R,
        origin: &Path,
        schema: &Schema,
        domain: Option<Domain>,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
            return Err(Error::Empty(origin.to_path_buf()));
        }
        let mut mapping = Vec::with_capacity(schema.len());
        for attr in schema.attributes() {
            let pos = header.iter().position(|h| h.trim() == attr.name).ok_or_else(|| {
                Error::Format {
                    path: origin.to_path_buf(),
                    message: format!("header has no column `{}`", attr.name),
                }
            })?;
            mapping.push(pos);
        }
        if header.len() != schema.len() {
            return Err(Error::Format {
                path: origin.to_path_buf(),
                message: format!(
                    "header has {} columns, schema has {}",
                    header.len(),
                    schema.len()
                ),
            });
        }

        let mut numeric: Vec<Vec<f64>> = vec![Vec::new(); schema.len()];
        let mut text: Vec<Vec<String>> = vec![Vec::new(); schema.len()];
        for (r, record) in rdr.records().enumerate() {
            let record = record?;
            // 1-based line number including the header.
            let row = r + 2;
            for (a, attr) in schema.attributes().iter().enumerate() {
                let cell = record.get(mapping[a]).map(str::trim).unwrap_or("");
                let parse_err = |message: String| Error::Parse {
                    path: origin.to_path_buf(),
                    row,
                    column: attr.name.clone(),
                    message,
                };
                if cell.is_empty() {
                    return Err(parse_err("missing value".into()));
                }
                match attr.kind {
                    AttributeKind::Numeric => {
                        let v: f64 = cell
                            .parse()
                            .map_err(|_| parse_err(format!("`{cell}` is not a number")))?;
                        if !v.is_finite() {
                            return Err(parse_err(format!("`{cell}` is not finite")));
                        }
                        numeric[a].push(v);
                    }
                    AttributeKind::Categorical => text[a].push(cell.to_owned()),
                }
            }
        }
        let rows = numeric
            .iter()
            .zip(&text)
            .map(|(n, t)| n.len().max(t.len()))
            .max()
            .unwrap_or(0);
        if rows == 0 {
            return Err(Error::Empty(origin.to_path_buf()));
        }

        let columns = schema
            .attributes()
            .iter()
            .zip(numeric.into_iter().zip(text))
            .map(|(attr, (n, t))| match attr.kind {
                AttributeKind::Numeric => Column::Numeric(n),
                AttributeKind::Categorical => Column::Categorical(CategoricalColumn::from_values(&t)),
            })
            .collect();
        Dataset::new(schema.clone(), columns, domain)
    }

    /// Reads only the header and infers attribute kinds: a column is numeric
    /// when every cell parses as a finite number.
    pub fn infer_schema(path: impl AsRef<Path>) -> Result<Schema> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let header = rdr.headers()?.clone();
        let mut numeric = vec![true; header.len()];
        let mut any = false;
        for record in rdr.records() {
            let record = record?;
            any = true;
            for (i, cell) in record.iter().enumerate().take(header.len()) {
                if numeric[i] && !cell.trim().parse::<f64>().is_ok_and(f64::is_finite) {
                    numeric[i] = false;
                }
            }
        }
        if !any {
            return Err(Error::Empty(path.to_path_buf()));
        }
        Schema::new(
            header
                .iter()
                .zip(numeric)
                .map(|(name, is_num)| Attribute {
                    name: name.trim().to_owned(),
                    kind: if is_num {
                        AttributeKind::Numeric
                    } else {
                        AttributeKind::Categorical
                    },
                })
                .collect(),
        )
    }

    /// Writes the table as CSV. Reals use the shortest representation that
    /// parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.attributes().iter().map(|a| a.name.as_str()))?;
        let mut record: Vec<String> = vec![String::new(); self.columns.len()];
        for row in 0..self.len {
            for (cell, col) in record.iter_mut().zip(&self.columns) {
                cell.clear();
                match col {
                    Column::Numeric(v) => {
                        use std::fmt::Write as _;
                        let _ = write!(cell, "{}", v[row]);
                    }
                    Column::Categorical(c) => cell.push_str(c.value_at(row)),
                }
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Manifest describing this dataset's schema and domain.
    pub fn manifest(&self) -> Manifest {
        Manifest {
            attributes: self.schema.attributes().to_vec(),
            domain: Some(self.domain.clone()),
            extra: BTreeMap::new(),
        }
    }
}

/// Sidecar file of `key=value` lines describing a dataset:
///
/// ```text
/// attributes=d0:numeric,d1:numeric,color:categorical
/// domain.d0=0,1000
/// domain.d1=0,1000
/// gen.seed=7
/// ```
///
/// Keys other than `attributes` and `domain.*` are kept verbatim in `extra`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub attributes: Vec<Attribute>,
    pub domain: Option<Domain>,
    pub extra: BTreeMap<String, String>,
}

impl Manifest {
    pub fn schema(&self) -> Result<Schema> {
        Schema::new(self.attributes.clone())
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let fmt_err = |line: usize, message: String| Error::Format {
            path: origin.to_path_buf(),
            message: format!("line {line}: {message}"),
        };
        let mut attributes = Vec::new();
        let mut bounds: BTreeMap<String, Interval> = BTreeMap::new();
        let mut extra = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fmt_err(i + 1, format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "attributes" {
                for item in value.split(',') {
                    let (name, kind) = item.split_once(':').ok_or_else(|| {
                        fmt_err(i + 1, format!("expected name:kind, got `{item}`"))
                    })?;
                    attributes.push(Attribute {
                        name: name.trim().to_owned(),
                        kind: kind.parse().map_err(|e: Error| fmt_err(i + 1, e.to_string()))?,
                    });
                }
            } else if let Some(name) = key.strip_prefix("domain.") {
                let (lo, hi) = value
                    .split_once(',')
                    .ok_or_else(|| fmt_err(i + 1, format!("expected lo,hi, got `{value}`")))?;
                let num = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| fmt_err(i + 1, format!("`{s}` is not a number")))
                };
                bounds.insert(name.to_owned(), Interval { lo: num(lo)?, hi: num(hi)? });
            } else {
                extra.insert(key.to_owned(), value.to_owned());
            }
        }
        if attributes.is_empty() {
            return Err(fmt_err(0, "missing `attributes` line".into()));
        }
        let domain = if bounds.is_empty() {
            None
        } else {
            let per_dim = attributes
                .iter()
                .filter(|a| a.kind == AttributeKind::Numeric)
                .map(|a| {
                    bounds
                        .get(&a.name)
                        .copied()
                        .ok_or_else(|| fmt_err(0, format!("no domain for attribute `{}`", a.name)))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(Domain::new(per_dim)?)
        };
        Ok(Manifest {
            attributes,
            domain,
            extra,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("attributes=");
        let attrs: Vec<String> = self
            .attributes
            .iter()
            .map(|a| format!("{}:{}", a.name, a.kind))
            .collect();
        out.push_str(&attrs.join(","));
        out.push('\n');
        if let Some(domain) = &self.domain {
            let numeric = self
                .attributes
                .iter()
                .filter(|a| a.kind == AttributeKind::Numeric);
            for (a, b) in numeric.zip(domain.bounds()) {
                out.push_str(&format!("domain.{}={},{}\n", a.name, b.lo, b.hi));
            }
        }
        for (k, v) in &self.extra {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
