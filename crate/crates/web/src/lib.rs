//! Browser bindings for the relaxation demo page in `www/`.
//!
//! Every export takes and returns JSON strings. The same functions without
//! the `wasm_bindgen` wrapper are public for native tests.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use sauna_core::{
    farthest_point, gen_array, gen_gauss, max_dist, min_dist, nearest_point, sauna_relax, top_n_sequential,
    BoxQuery, Dataset, Domain, GenKind, GenSpec, Histogram, Interval, Metric, MetricSpec, Norm, RelaxMode,
    RelaxStats, Weighting,
};

/// Side of the square demo domain.
pub const EXTENT: f64 = 100.0;
const MAX_POINTS: usize = 50_000;

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct DemoConfig {
    pub kind: GenKind,
    pub points: usize,
    pub zipf: f64,
    pub bells: usize,
    pub seed: u64,
    pub budget: usize,
    /// `[[lo, hi], [lo, hi]]`
    pub query: [[f64; 2]; 2],
    pub n: usize,
    pub alpha: f64,
    pub norm: Norm,
    pub weighting: Weighting,
    pub mode: RelaxMode,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            kind: GenKind::Gauss,
            points: 2000,
            zipf: 1.0,
            bells: 5,
            seed: 1,
            budget: 64,
            query: [[70.0, 75.0], [20.0, 22.0]],
            n: 10,
            alpha: 0.5,
            norm: Norm::L2,
            weighting: Weighting::Aspect,
            mode: RelaxMode::DistancePreserving,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DemoBucket {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub count: u64,
}

#[derive(Debug, Serialize)]
pub struct RelaxView {
    pub points: Vec<[f64; 2]>,
    pub buckets: Vec<DemoBucket>,
    pub query: [[f64; 2]; 2],
    pub estimate: f64,
    pub d_br: Option<f64>,
    pub d_bnr: Option<f64>,
    pub chosen_distance: Option<f64>,
    pub relaxed: Option<[[f64; 2]; 2]>,
    pub restart: Option<[[f64; 2]; 2]>,
    pub answers: Vec<usize>,
    pub optimal_answers: Vec<usize>,
    pub stats: RelaxStats,
}

#[derive(Debug, Serialize)]
pub struct DistanceField {
    pub resolution: usize,
    pub max: f64,
    /// Row-major, `y` outer.
    pub values: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct BucketDistance {
    pub bucket: usize,
    pub min_dist: f64,
    pub max_dist: f64,
    pub nearest: [f64; 2],
    pub farthest: [f64; 2],
}

fn bounds(q: &BoxQuery) -> [[f64; 2]; 2] {
    let r = q.ranges();
    [[r[0].lo, r[0].hi], [r[1].lo, r[1].hi]]
}

fn query_of(raw: [[f64; 2]; 2]) -> Result<BoxQuery, String> {
    let ranges = raw
        .iter()
        .map(|[a, b]| Interval::new(a.min(*b), a.max(*b)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(BoxQuery::new(ranges))
}

fn dataset(config: &DemoConfig) -> Result<Dataset, String> {
    let domain = Domain::uniform(2, 0.0, EXTENT).map_err(|e| e.to_string())?;
    let mut spec = match config.kind {
        GenKind::Gauss => GenSpec::gauss(config.points.min(MAX_POINTS), 2, config.zipf, config.seed),
        GenKind::Array => GenSpec::array(config.points.min(MAX_POINTS), 2, config.zipf, config.seed),
    };
    spec.bells = config.bells.max(1);
    spec.values = 100;
    let data = match config.kind {
        GenKind::Gauss => gen_gauss(&spec, &domain),
        GenKind::Array => gen_array(&spec, &domain),
    };
    data.map_err(|e| e.to_string())
}

fn metric(config: &DemoConfig, query: &BoxQuery) -> Result<Metric, String> {
    MetricSpec::new(config.norm, config.weighting.clone())
        .resolve(query)
        .map_err(|e| e.to_string())
}

fn parse(config_json: &str) -> Result<DemoConfig, String> {
    serde_json::from_str(config_json).map_err(|e| e.to_string())
}

/// Generates the dataset, builds the histogram and relaxes the query.
pub fn relax_view(config_json: &str) -> Result<String, String> {
    let config = parse(config_json)?;
    let data = dataset(&config)?;
    let hist = Histogram::build_equi_depth(&data, config.budget.max(1)).map_err(|e| e.to_string())?;
    let query = query_of(config.query)?;
    let m = metric(&config, &query)?;
    let out = sauna_relax(&data, &hist, &query, config.n.max(1), &m, config.alpha, config.mode)
        .map_err(|e| e.to_string())?;
    let optimal = top_n_sequential(&data, &query, config.n.max(1), &m).map_err(|e| e.to_string())?;
    let (x, y) = (data.numeric(0), data.numeric(1));
    let view = RelaxView {
        points: x.iter().zip(y).map(|(&a, &b)| [a, b]).collect(),
        buckets: hist
            .buckets()
            .iter()
            .map(|b| DemoBucket {
                lo: [b.bounds[0].lo, b.bounds[1].lo],
                hi: [b.bounds[0].hi, b.bounds[1].hi],
                count: b.count,
            })
            .collect(),
        query: bounds(&query),
        estimate: hist.estimate_cardinality(&query),
        d_br: out.plan.as_ref().map(|p| p.d_br),
        d_bnr: out.plan.as_ref().map(|p| p.d_bnr),
        chosen_distance: out.plan.as_ref().map(|p| p.chosen_distance),
        relaxed: out.plan.as_ref().map(|p| bounds(&p.relaxed_query)),
        restart: out.plan.as_ref().and_then(|p| p.restart_query.as_ref()).map(bounds),
        answers: out.answers.rows(),
        optimal_answers: optimal.rows(),
        stats: out.stats,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Box distance from every cell centre of a `resolution` square grid over
/// the domain to the query.
pub fn distance_field_view(config_json: &str, resolution: usize) -> Result<String, String> {
    let config = parse(config_json)?;
    let query = query_of(config.query)?;
    let m = metric(&config, &query)?;
    let resolution = resolution.clamp(2, 400);
    let step = EXTENT / resolution as f64;
    let mut values = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        for i in 0..resolution {
            let p = [(i as f64 + 0.5) * step, (j as f64 + 0.5) * step];
            values.push(m.point_distance(&p, &query).map_err(|e| e.to_string())?);
        }
    }
    let max = values.iter().cloned().fold(0.0, f64::max);
    serde_json::to_string(&DistanceField { resolution, max, values }).map_err(|e| e.to_string())
}

/// MinDist and MaxDist from the query to every histogram bucket, with the
/// bucket points that attain them.
pub fn bucket_distances_view(config_json: &str) -> Result<String, String> {
    let config = parse(config_json)?;
    let data = dataset(&config)?;
    let hist = Histogram::build_equi_depth(&data, config.budget.max(1)).map_err(|e| e.to_string())?;
    let query = query_of(config.query)?;
    let m = metric(&config, &query)?;
    let rows = hist
        .buckets()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let near = nearest_point(&query, b);
            let far = farthest_point(&query, b);
            Ok(BucketDistance {
                bucket: i,
                min_dist: min_dist(&query, b, &m).map_err(|e| e.to_string())?,
                max_dist: max_dist(&query, b, &m).map_err(|e| e.to_string())?,
                nearest: [near[0], near[1]],
                farthest: [far[0], far[1]],
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn relax(config_json: &str) -> Result<String, JsError> {
    relax_view(config_json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn distance_field(config_json: &str, resolution: usize) -> Result<String, JsError> {
    distance_field_view(config_json, resolution).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bucket_distances(config_json: &str) -> Result<String, JsError> {
    bucket_distances_view(config_json).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn default_relaxation_finds_n_answers() {
        let v: Value = serde_json::from_str(&relax_view("{}").unwrap()).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 2000);
        assert_eq!(v["answers"].as_array().unwrap().len(), 10);
        assert_eq!(v["answers"], v["optimal_answers"]);
        let total: u64 = v["buckets"].as_array().unwrap().iter().map(|b| b["count"].as_u64().unwrap()).sum();
        assert_eq!(total, 2000);
    }

    #[test]
    fn config_fields_are_optional_and_validated() {
        let json = r#"{"kind":"array","points":500,"norm":"linf","weighting":{"explicit":[1,2]},"mode":"box-preserving","query":[[5,1],[3,4]]}"#;
        let v: Value = serde_json::from_str(&relax_view(json).unwrap()).unwrap();
        assert_eq!(v["query"][0], serde_json::json!([1.0, 5.0]));
        assert!(relax_view("{\"norm\":\"l7\"}").is_err());
        assert!(relax_view("{\"alpha\":3}").is_err());
    }

    #[test]
    fn field_is_zero_inside_query() {
        let json = r#"{"query":[[0,50],[0,50]]}"#;
        let v: Value = serde_json::from_str(&distance_field_view(json, 10).unwrap()).unwrap();
        let values = v["values"].as_array().unwrap();
        assert_eq!(values.len(), 100);
        assert_eq!(values[0].as_f64().unwrap(), 0.0);
        assert!(values[99].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn bucket_bounds_are_ordered() {
        let rows: Vec<Value> = serde_json::from_str(&bucket_distances_view("{\"budget\":16}").unwrap()).unwrap();
        assert_eq!(rows.len(), 16);
        for r in rows {
            assert!(r["min_dist"].as_f64().unwrap() <= r["max_dist"].as_f64().unwrap());
        }
    }
}
