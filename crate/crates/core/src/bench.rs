//! Parameter sweeps over generated grids, emitting one CSV row per
//! (setting, query, algorithm) plus median summaries.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{build_category_bounds, destination_bounds, static_distances};
use crate::clock::{Clock, DAY};
use crate::error::{Error, Result};
use crate::graph::{StaticGraph, TimeDependentGraph, VertexId};
use crate::netgen::{generate_grid, GridParams};
use crate::osr::{td_osr_run, OsrOptions, SearchBudget};
use crate::pne::td_pne_run;
use crate::route::OtdsrQuery;

/// Default sequence size and query locality (percent of the diameter).
pub const DEFAULT_SEQUENCE: usize = 3;
pub const DEFAULT_LOCALITY: f64 = 15.0;
const DIAMETER_PROBES: usize = 16;
const RESAMPLES: usize = 100;

/// Which knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SweepParameter {
    Vertices,
    PoiDensity,
    VertexDegree,
    NumCategories,
    SequenceSize,
    Locality,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            Self::Vertices => "vertices",
            Self::PoiDensity => "poiDensity",
            Self::VertexDegree => "vertexDegree",
            Self::NumCategories => "numCategories",
            Self::SequenceSize => "sequenceSize",
            Self::Locality => "locality",
        }
    }
}

fn default_scale() -> f64 {
    0.1
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_queries() -> usize {
    10
}

/// Sweep description, usually read from TOML:
///
/// ```toml
/// parameter = "sequenceSize"
/// values = [1, 3, 10]
/// scale = 0.1          # multiplies the vertex count
/// seeds = [1]
/// queries = 10
/// timeout_ms = 60000
/// deterministic = false
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_queries")]
    pub queries: usize,
    #[serde(default)]
    pub timeout_ms: Option<u64>,
    #[serde(default)]
    pub max_expansions: Option<u64>,
    /// Write 0 in the timing column so reruns are byte-identical.
    #[serde(default)]
    pub deterministic: bool,
    /// Base values for the parameters that are not swept.
    #[serde(default)]
    pub base: BaseSetting,
}

/// Unscaled defaults of every sweep knob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct BaseSetting {
    pub vertices: usize,
    pub poi_density: f64,
    pub vertex_degree: f64,
    pub num_categories: usize,
    pub sequence_size: usize,
    pub locality: f64,
    pub dwell: f64,
}

impl Default for BaseSetting {
    fn default() -> Self {
        let g = GridParams::default();
        Self {
            vertices: g.vertices,
            poi_density: g.poi_density,
            vertex_degree: g.vertex_degree,
            num_categories: g.num_categories,
            sequence_size: DEFAULT_SEQUENCE,
            locality: DEFAULT_LOCALITY,
            dwell: g.dwell,
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("sweep config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidParameter("sweep needs at least one value and one seed".into()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale {}", self.scale)));
        }
        Ok(())
    }

    /// Concrete setting for one swept value.
    pub fn setting(&self, value: f64, seed: u64) -> Setting {
        let b = &self.base;
        let mut s = Setting {
            grid: GridParams {
                vertices: b.vertices,
                poi_density: b.poi_density,
                vertex_degree: b.vertex_degree,
                num_categories: b.num_categories,
                dwell: b.dwell,
                seed,
            },
            sequence_size: b.sequence_size,
            locality: b.locality,
        };
        match self.parameter {
            SweepParameter::Vertices => s.grid.vertices = value as usize,
            SweepParameter::PoiDensity => s.grid.poi_density = value,
            SweepParameter::VertexDegree => s.grid.vertex_degree = value,
            SweepParameter::NumCategories => s.grid.num_categories = value as usize,
            SweepParameter::SequenceSize => s.sequence_size = value as usize,
            SweepParameter::Locality => s.locality = value,
        }
        s.grid.vertices = ((s.grid.vertices as f64 * self.scale).round() as usize).max(4);
        s
    }

    fn budget(&self) -> SearchBudget {
        SearchBudget { max_expansions: self.max_expansions, time_limit: self.timeout_ms.map(Duration::from_millis) }
    }
}

/// One fully specified sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub grid: GridParams,
    pub sequence_size: usize,
    pub locality: f64,
}

/// A CSV record. `kind` is `data`, `failed` or `summary`; summary rows hold
/// medians over the setting's successful data rows and leave `query` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Row {
    pub parameter: String,
    pub value: String,
    pub seed: u64,
    pub query: Option<usize>,
    pub algo: String,
    pub kind: String,
    pub expanded_vertices: Option<f64>,
    pub elapsed_ms: Option<f64>,
    pub total_travel: Option<f64>,
    pub max_expansions_per_vertex: Option<u64>,
    pub error: String,
}

pub const ALGORITHMS: [&str; 2] = ["tdosr", "tdpne"];

/// Diameter estimate of the lower-bound graph: the largest finite
/// eccentricity found by double sweeps from random starts.
pub fn estimate_diameter(lb: &StaticGraph, probes: usize, rng: &mut impl Rng) -> f64 {
    let n = lb.num_vertices();
    let ecc = |src: VertexId| {
        static_distances(lb, &[src])
            .into_iter()
            .enumerate()
            .filter(|(_, d)| d.is_finite())
            .fold((src, 0.0), |best, (v, d)| if d > best.1 { (v as VertexId, d) } else { best })
    };
    let mut diam: f64 = 0.0;
    for _ in 0..probes {
        let (far, e1) = ecc(rng.gen_range(0..n as VertexId));
        let (_, e2) = ecc(far);
        diam = diam.max(e1).max(e2);
    }
    diam
}

/// Samples origin/destination pairs whose lower-bound distance is about a
/// given share of the network diameter.
pub struct LocalitySampler {
    lb: StaticGraph,
    diameter: f64,
}

impl LocalitySampler {
    pub fn new(g: &TimeDependentGraph, rng: &mut impl Rng) -> Self {
        let lb = g.lower_bound_graph();
        let diameter = estimate_diameter(&lb, DIAMETER_PROBES, rng);
        Self { lb, diameter }
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Accepted distance range for `pct` percent of the diameter.
    pub fn band(&self, pct: f64) -> (f64, f64) {
        let t = pct / 100.0 * self.diameter;
        (0.9 * t, 1.1 * t)
    }

    /// Picks `s` uniformly and `d != s` uniformly inside the band; after
    /// 100 failed draws of `s`, takes the `d` closest to the target distance.
    pub fn sample(&self, pct: f64, rng: &mut impl Rng) -> Result<(VertexId, VertexId)> {
        if !(pct > 0.0 && pct <= 100.0) {
            return Err(Error::InvalidParameter(format!("locality {pct}% outside (0, 100]")));
        }
        let n = self.lb.num_vertices() as VertexId;
        let (lo, hi) = self.band(pct);
        let mut last = None;
        for _ in 0..RESAMPLES {
            let s = rng.gen_range(0..n);
            let dist = static_distances(&self.lb, &[s]);
            let cands: Vec<VertexId> = (0..n).filter(|&v| v != s && dist[v as usize] >= lo && dist[v as usize] <= hi).collect();
            if let Some(&d) = cands.choose(rng) {
                return Ok((s, d));
            }
            last = Some((s, dist));
        }
        let (s, dist) = last.expect("at least one draw");
        let target = (lo + hi) / 2.0;
        (0..n)
            .filter(|&v| v != s && dist[v as usize].is_finite())
            .min_by(|&a, &b| (dist[a as usize] - target).abs().total_cmp(&(dist[b as usize] - target).abs()))
            .map(|d| (s, d))
            .ok_or_else(|| Error::InvalidParameter("no vertex reachable from the sampled origin".into()))
    }
}

/// One-shot form of [`LocalitySampler::sample`].
pub fn sample_locality_query(g: &TimeDependentGraph, locality_pct: f64, seed: u64) -> Result<(VertexId, VertexId)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LocalitySampler::new(g, &mut rng).sample(locality_pct, &mut rng)
}

/// Random queries for a setting: locality-controlled endpoints, a random
/// departure minute and distinct non-empty categories (repeating only when
/// the sequence is longer than the category count, never back to back).
pub fn sample_queries(g: &TimeDependentGraph, sequence_size: usize, locality: f64, count: usize, seed: u64) -> Result<Vec<OtdsrQuery>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_9e37_79b9_7f4a);
    let sampler = LocalitySampler::new(g, &mut rng);
    let cats: Vec<u32> = (0..g.num_categories() as u32).filter(|&c| !g.category(c).members.is_empty()).collect();
    if sequence_size > 0 && cats.is_empty() {
        return Err(Error::InvalidParameter("graph has no POIs".into()));
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (s, d) = sampler.sample(locality, &mut rng)?;
        let depart = Clock::new(rng.gen_range(0..DAY as u32) as f64, DAY);
        let mut seq: Vec<u32> = Vec::with_capacity(sequence_size);
        while seq.len() < sequence_size {
            let mut round = cats.clone();
            round.shuffle(&mut rng);
            if round.len() > 1 && seq.last() == round.first() {
                round.swap(0, 1);
            }
            seq.extend(round.into_iter().take(sequence_size - seq.len()));
        }
        out.push(OtdsrQuery::new(s, d, depart, seq));
    }
    Ok(out)
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let k = xs.len() / 2;
    Some(if xs.len() % 2 == 1 { xs[k] } else { (xs[k - 1] + xs[k]) / 2.0 })
}

/// Median rows per algorithm over the successful data rows of one setting.
pub fn summarize(rows: &[Row]) -> Vec<Row> {
    let mut groups: BTreeMap<(String, String, u64, String), Vec<&Row>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.kind == "data") {
        groups.entry((r.parameter.clone(), r.value.clone(), r.seed, r.algo.clone())).or_default().push(r);
    }
    let mut out: Vec<Row> = groups
        .into_iter()
        .map(|((parameter, value, seed, algo), rs)| Row {
            parameter,
            value,
            seed,
            query: None,
            kind: "summary".into(),
            expanded_vertices: median(rs.iter().filter_map(|r| r.expanded_vertices).collect()),
            elapsed_ms: median(rs.iter().filter_map(|r| r.elapsed_ms).collect()),
            total_travel: median(rs.iter().filter_map(|r| r.total_travel).collect()),
            max_expansions_per_vertex: rs.iter().filter_map(|r| r.max_expansions_per_vertex).max(),
            error: String::new(),
            algo,
        })
        .collect();
    out.sort_by_key(|r| ALGORITHMS.iter().position(|a| *a == r.algo));
    out
}

/// Generates the graph of one setting, runs every query with both
/// algorithms and returns data rows followed by summary rows.
pub fn run_setting(parameter: &str, value: &str, setting: &Setting, queries: usize, budget: &SearchBudget, deterministic: bool) -> Result<Vec<Row>> {
    let g = generate_grid(&setting.grid)?;
    let table = build_category_bounds(&g);
    let qs = sample_queries(&g, setting.sequence_size, setting.locality, queries, setting.grid.seed)?;
    let mut rows = Vec::with_capacity(2 * queries + 2);
    for (qi, q) in qs.iter().enumerate() {
        let bounds = destination_bounds(&g, q.destination)?;
        for algo in ALGORITHMS {
            let res = match algo {
                "tdosr" => {
                    let opts = OsrOptions { budget: *budget, ..Default::default() };
                    td_osr_run(&g, &table, Some(&bounds), q, &opts).map(|a| (a.route, a.stats))
                }
                _ => td_pne_run(&g, &table, Some(&bounds), q, budget).map(|a| (a.route, a.stats)),
            };
            let mut row = Row {
                parameter: parameter.to_string(),
                value: value.to_string(),
                seed: setting.grid.seed,
                query: Some(qi),
                algo: algo.to_string(),
                kind: "data".into(),
                expanded_vertices: None,
                elapsed_ms: None,
                total_travel: None,
                max_expansions_per_vertex: None,
                error: String::new(),
            };
            match res {
                Ok((route, stats)) => {
                    row.expanded_vertices = Some(stats.expansions as f64);
                    row.elapsed_ms = Some(if deterministic { 0.0 } else { stats.elapsed_ms });
                    row.total_travel = Some(route.total_travel);
                    row.max_expansions_per_vertex = (algo == "tdosr").then_some(stats.max_expansions_per_vertex);
                }
                Err(e) => {
                    row.kind = "failed".into();
                    row.error = e.to_string();
                }
            }
            rows.push(row);
        }
    }
    let summary = summarize(&rows);
    rows.extend(summary);
    Ok(rows)
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        v.to_string()
    }
}

/// Runs every (value, seed) cell of the sweep in parallel. Rows come back
/// in config order regardless of scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<Row>> {
    cfg.validate()?;
    let budget = cfg.budget();
    let cells: Vec<(f64, u64)> = cfg.values.iter().flat_map(|&v| cfg.seeds.iter().map(move |&s| (v, s))).collect();
    let parts = cells
        .par_iter()
        .map(|&(v, seed)| {
            let setting = cfg.setting(v, seed);
            log::info!("sweep {}={} seed {}: {} vertices", cfg.parameter.name(), v, seed, setting.grid.vertices);
            run_setting(cfg.parameter.name(), &format_value(v), &setting, cfg.queries, &budget, cfg.deterministic)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

pub fn write_csv<W: std::io::Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use crate::ttf::TravelTimeFunction;

    fn path_graph(n: usize) -> TimeDependentGraph {
        let mut b = GraphBuilder::new(DAY);
        b.add_numbered_vertices(n);
        for i in 0..n as u32 - 1 {
            b.add_edge(i, i + 1, TravelTimeFunction::constant(1.0)).unwrap();
            b.add_edge(i + 1, i, TravelTimeFunction::constant(1.0)).unwrap();
        }
        b.build().unwrap()
    }

    #[test]
    fn full_locality_on_path_gives_endpoints() {
        // short enough that the +-10% band only admits the full length
        let g = path_graph(8);
        for seed in 0..5 {
            let (s, d) = sample_locality_query(&g, 100.0, seed).unwrap();
            let mut pair = [s, d];
            pair.sort();
            assert_eq!(pair, [0, 7]);
        }
    }

    #[test]
    fn tiny_locality_gives_close_pair() {
        let g = path_graph(30);
        let (s, d) = sample_locality_query(&g, 0.1, 3).unwrap();
        assert_ne!(s, d);
        assert_eq!((s as i64 - d as i64).abs(), 1);
    }

    #[test]
    fn medians() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
    }

    #[test]
    fn config_parsing() {
        let cfg = SweepConfig::from_toml("parameter = \"sequenceSize\"\nvalues = [1, 3, 10]\n").unwrap();
        assert_eq!(cfg.scale, 0.1);
        assert_eq!(cfg.queries, 10);
        let s = cfg.setting(10.0, 4);
        assert_eq!(s.sequence_size, 10);
        assert_eq!(s.grid.vertices, 5000);
        assert!(SweepConfig::from_toml("parameter = \"bogus\"\nvalues = [1]\n").is_err());
    }

    #[test]
    fn sequences_avoid_adjacent_repeats() {
        let g = crate::netgen::generate_grid(&GridParams { vertices: 400, num_categories: 3, seed: 2, ..Default::default() }).unwrap();
        for q in sample_queries(&g, 7, 15.0, 5, 9).unwrap() {
            assert_eq!(q.len(), 7);
            assert!(q.sequence.windows(2).all(|w| w[0] != w[1]));
        }
    }
}
