//! Synthetic networks and cost synthesis for imported road data.
//!
//! Grids are built so that they are strongly connected by construction: a
//! random spanning tree of the grid with two-way streets, plus random extra
//! one-way grid arcs (and diagonals when the grid runs out) until the target
//! average out-degree is met.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::clock::DAY;
use crate::error::{Error, Result};
use crate::format::ImportReport;
use crate::graph::{GraphBuilder, TimeDependentGraph, VertexId};
use crate::ttf::TravelTimeFunction;

/// Grid edge length in metres.
pub const GRID_EDGE_M: f64 = 500.0;
pub const MIN_SPEED_KMH: f64 = 30.0;
pub const MAX_SPEED_KMH: f64 = 80.0;

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct GridParams {
    pub vertices: usize,
    pub poi_density: f64,
    /// Target average out-degree.
    pub vertex_degree: f64,
    pub num_categories: usize,
    /// Dwell minutes given to every category.
    pub dwell: f64,
    pub seed: u64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { vertices: 50_000, poi_density: 0.01, vertex_degree: 2.5, num_categories: 10, dwell: 15.0, seed: 1 }
    }
}

impl GridParams {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.vertices < 2 {
            return bad(format!("need at least 2 vertices, got {}", self.vertices));
        }
        if !(self.poi_density > 0.0 && self.poi_density <= 1.0) {
            return bad(format!("POI density {} outside (0, 1]", self.poi_density));
        }
        if !(self.vertex_degree.is_finite() && self.vertex_degree > 0.0) {
            return bad(format!("vertex degree {}", self.vertex_degree));
        }
        if self.num_categories == 0 {
            return bad("need at least one category".into());
        }
        if !(self.dwell.is_finite() && self.dwell >= 0.0) {
            return bad(format!("dwell {}", self.dwell));
        }
        Ok(())
    }
}

/// Columns of a near-square grid holding `n` vertices.
fn grid_cols(n: usize) -> usize {
    let rows = ((n as f64).sqrt().floor() as usize).max(1);
    n.div_ceil(rows)
}

/// Undirected 4-neighbour grid edges over `n` vertices laid out row-major.
fn grid_edges(n: usize, cols: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        if (i + 1) % cols != 0 && i + 1 < n {
            out.push((i as u32, i as u32 + 1));
        }
        if i + cols < n {
            out.push((i as u32, (i + cols) as u32));
        }
    }
    out
}

fn diagonal_edges(n: usize, cols: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for i in 0..n {
        let c = i % cols;
        if c + 1 < cols && i + cols + 1 < n {
            out.push((i as u32, (i + cols + 1) as u32));
        }
        if c > 0 && i + cols - 1 < n {
            out.push((i as u32, (i + cols - 1) as u32));
        }
    }
    out
}

struct Dsu(Vec<u32>);

impl Dsu {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.0[x as usize] != x {
            let p = self.0[self.0[x as usize] as usize];
            self.0[x as usize] = p;
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra as usize] = rb;
        true
    }
}

/// Directed arcs of a strongly connected grid-like network with about
/// `target` arcs.
fn grid_arcs(n: usize, target: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(u32, u32)>> {
    let cols = grid_cols(n);
    let mut edges = grid_edges(n, cols);
    edges.shuffle(rng);
    let mut dsu = Dsu((0..n as u32).collect());
    let mut arcs = Vec::with_capacity(target);
    let mut spare = Vec::new();
    for (a, b) in edges {
        if dsu.union(a, b) {
            arcs.push((a, b));
            arcs.push((b, a));
        } else {
            spare.push((a, b));
            spare.push((b, a));
        }
    }
    if arcs.len() > target {
        return Err(Error::InvalidParameter(format!(
            "average degree {:.3} is below the {:.3} needed to keep the grid strongly connected",
            target as f64 / n as f64,
            arcs.len() as f64 / n as f64
        )));
    }
    spare.shuffle(rng);
    let mut extra = spare.into_iter();
    while arcs.len() < target {
        match extra.next() {
            Some(a) => arcs.push(a),
            None => break,
        }
    }
    if arcs.len() < target {
        let mut diag: Vec<(u32, u32)> = diagonal_edges(n, cols).into_iter().flat_map(|(a, b)| [(a, b), (b, a)]).collect();
        diag.shuffle(rng);
        arcs.extend(diag.into_iter().take(target - arcs.len()));
    }
    if arcs.len() < target {
        return Err(Error::InvalidParameter(format!(
            "average degree {:.3} exceeds what a grid with diagonals offers",
            target as f64 / n as f64
        )));
    }
    Ok(arcs)
}

/// Hourly breakpoints through `costs[h]` at `h * 60`, FIFO-repaired.
fn hourly_function(costs: &[f64]) -> Result<TravelTimeFunction> {
    let step = DAY / costs.len() as f64;
    let pts = costs.iter().enumerate().map(|(h, &c)| (h as f64 * step, c)).collect();
    let mut f = TravelTimeFunction::new_unchecked_fifo(pts, DAY)?;
    f.repair_fifo();
    Ok(f)
}

/// Picks `round(density * n)` distinct POIs among `candidates` and deals
/// categories round-robin after a shuffle, so sizes differ by at most one.
fn assign_pois(b: &mut GraphBuilder, candidates: &[VertexId], count: usize, num_categories: usize, dwell: f64, rng: &mut ChaCha8Rng) -> Result<()> {
    let cats: Vec<_> = (0..num_categories).map(|i| b.add_category(&format!("C{i}"), dwell)).collect::<Result<_>>()?;
    let mut picked: Vec<VertexId> = rand::seq::index::sample(rng, candidates.len(), count.min(candidates.len()))
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    picked.shuffle(rng);
    for (i, v) in picked.into_iter().enumerate() {
        b.set_category(v, cats[i % num_categories])?;
    }
    Ok(())
}

/// Random grid network with hourly travel times from speeds in 30–80 km/h
/// over 500 m edges. Categories are named `C0`, `C1`, …
pub fn generate_grid(params: &GridParams) -> Result<TimeDependentGraph> {
    params.validate()?;
    let n = params.vertices;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let target = (params.vertex_degree * n as f64).round() as usize;
    let arcs = grid_arcs(n, target, &mut rng)?;

    let mut b = GraphBuilder::new(DAY);
    b.add_numbered_vertices(n);
    let pois = (params.poi_density * n as f64).round() as usize;
    if pois < params.num_categories {
        log::warn!("{pois} POIs for {} categories; some categories stay empty", params.num_categories);
    }
    let all: Vec<VertexId> = (0..n as u32).collect();
    assign_pois(&mut b, &all, pois, params.num_categories, params.dwell, &mut rng)?;

    let minutes_per_kmh = GRID_EDGE_M / 1000.0 * 60.0;
    for (u, v) in arcs {
        let costs: Vec<f64> = (0..24).map(|_| minutes_per_kmh / rng.gen_range(MIN_SPEED_KMH..=MAX_SPEED_KMH)).collect();
        b.add_edge(u, v, hourly_function(&costs)?)?;
    }
    b.build()
}

/// Parameters of the small verification networks: a full two-way grid with
/// sharply time-varying costs, and every POI on its own leaf spur.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpurParams {
    pub grid_vertices: usize,
    pub num_categories: usize,
    pub pois_per_category: usize,
    /// Dwell per category is drawn from `0..=max_dwell` minutes.
    pub max_dwell: f64,
    pub seed: u64,
}

/// Random cost function with 1–6 breakpoints in 0.5–40 minutes, repaired.
fn random_function(rng: &mut ChaCha8Rng) -> Result<TravelTimeFunction> {
    let k = rng.gen_range(1..=6);
    let mut at: Vec<f64> = (0..k).map(|_| rng.gen_range(0..(DAY as u32 * 4)) as f64 / 4.0).collect();
    at.sort_by(f64::total_cmp);
    at.dedup();
    let pts = at.into_iter().map(|t| (t, (rng.gen_range(0.5..40.0) * 4.0f64).round() / 4.0)).collect();
    let mut f = TravelTimeFunction::new_unchecked_fifo(pts, DAY)?;
    f.repair_fifo();
    Ok(f)
}

/// Grid vertices are named by index; POIs are `p<k>` and each hangs off one
/// grid vertex by a pair of arcs, so reaching a POI never happens by
/// accident on the way elsewhere.
pub fn spur_network(params: &SpurParams) -> Result<TimeDependentGraph> {
    if params.grid_vertices < 2 || params.num_categories == 0 || params.pois_per_category == 0 {
        return Err(Error::InvalidParameter(format!("{params:?}")));
    }
    let n = params.grid_vertices;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut b = GraphBuilder::new(DAY);
    b.add_numbered_vertices(n);
    for (a, c) in grid_edges(n, grid_cols(n)) {
        b.add_edge(a, c, random_function(&mut rng)?)?;
        b.add_edge(c, a, random_function(&mut rng)?)?;
    }
    let mut k = 0;
    for ci in 0..params.num_categories {
        let dwell = rng.gen_range(0.0..=params.max_dwell).round();
        let c = b.add_category(&format!("C{ci}"), dwell)?;
        for _ in 0..params.pois_per_category {
            let p = b.add_vertex(&format!("p{k}"))?;
            k += 1;
            b.set_category(p, c)?;
            let host = rng.gen_range(0..n as u32);
            b.add_edge(host, p, random_function(&mut rng)?)?;
            b.add_edge(p, host, random_function(&mut rng)?)?;
        }
    }
    b.build()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedClass {
    pub name: String,
    pub max_kmh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadEdge {
    pub from: VertexId,
    pub to: VertexId,
    pub length_m: f64,
    /// Index into [`RoadNetwork::classes`].
    pub class: usize,
    /// Source line, for reports (0 when built in code).
    pub line: usize,
}

/// Static road data before travel times are attached.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoadNetwork {
    pub names: Vec<String>,
    pub edges: Vec<RoadEdge>,
    pub classes: Vec<SpeedClass>,
    /// `(vertex, category name)`.
    pub pois: Vec<(VertexId, String)>,
}

/// Time-of-day multiplier for the hour starting at `hour`.
pub fn hour_multiplier(hour: usize) -> f64 {
    match hour {
        8 => 1.7,
        10..=14 => 1.4,
        16 | 17 => 1.9,
        19..=21 => 1.3,
        23 => 1.1,
        _ => 1.0,
    }
}

/// Mean and standard deviation of the speed distribution of a class.
pub fn class_speed_distribution(class_max: f64, min_of_maxima: f64) -> (f64, f64) {
    let mean = (class_max + min_of_maxima) / 2.0;
    (mean, mean / 4.0)
}

/// Hourly travel-time function for one edge at sampled free-flow `speed_kmh`.
pub fn rush_hour_function(length_m: f64, speed_kmh: f64) -> Result<TravelTimeFunction> {
    let base = length_m / 1000.0 / speed_kmh * 60.0;
    let costs: Vec<f64> = (0..24).map(|h| base * hour_multiplier(h)).collect();
    hourly_function(&costs)
}

/// Attaches time-of-day travel times to every road: one speed per edge
/// drawn from its class's normal distribution (redrawn while above the class
/// maximum or not positive), then the hourly multipliers. Parallel roads are
/// merged by pointwise minimum and self-loops are dropped; both are listed in
/// the report. POIs get categories named as in the input, all with `dwell`.
pub fn synthesize_real_costs(net: &RoadNetwork, dwell: f64, seed: u64) -> Result<(TimeDependentGraph, ImportReport)> {
    if net.classes.is_empty() {
        return Err(Error::InvalidParameter("empty speed-class table".into()));
    }
    for c in &net.classes {
        if !(c.max_kmh.is_finite() && c.max_kmh > 0.0) {
            return Err(Error::InvalidParameter(format!("class `{}` has max speed {}", c.name, c.max_kmh)));
        }
    }
    let min_max = net.classes.iter().map(|c| c.max_kmh).fold(f64::INFINITY, f64::min);
    let dists: Vec<Normal<f64>> = net
        .classes
        .iter()
        .map(|c| {
            let (mean, sd) = class_speed_distribution(c.max_kmh, min_max);
            Normal::new(mean, sd).expect("positive deviation")
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new(DAY);
    for n in &net.names {
        b.add_vertex(n)?;
    }
    let mut report = ImportReport::default();
    for e in &net.edges {
        let class = net.classes.get(e.class).ok_or_else(|| Error::InvalidParameter(format!("edge class index {}", e.class)))?;
        if !(e.length_m.is_finite() && e.length_m > 0.0) {
            return Err(Error::InvalidParameter(format!("line {}: edge length {}", e.line, e.length_m)));
        }
        let speed = loop {
            let x = dists[e.class].sample(&mut rng);
            if x > 0.0 && x <= class.max_kmh {
                break x;
            }
        };
        if e.from == e.to {
            report.dropped.push((e.line, format!("self-loop at {}", net.names[e.from as usize])));
            continue;
        }
        if b.add_or_merge_edge(e.from, e.to, rush_hour_function(e.length_m, speed)?)? {
            report.merged.push((e.line, net.names[e.from as usize].clone(), net.names[e.to as usize].clone()));
        }
    }
    let mut cats = HashMap::new();
    for (v, name) in &net.pois {
        let c = match cats.get(name) {
            Some(&c) => c,
            None => {
                let c = b.add_category(name, dwell)?;
                cats.insert(name.clone(), c);
                c
            }
        };
        b.set_category(*v, c)?;
    }
    Ok((b.build()?, report))
}

#[derive(Deserialize)]
struct VertexRow {
    id: String,
}

#[derive(Deserialize)]
struct EdgeRow {
    from: String,
    to: String,
    length_m: f64,
    speed_class: String,
}

#[derive(Deserialize)]
struct PoiRow {
    vertex: String,
    category: String,
}

#[derive(Deserialize)]
struct ClassRow {
    class: String,
    max_kmh: f64,
}

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse { path: path.display().to_string(), line: 0, msg: format!("{other:?}") },
        })?;
    let mut out = Vec::new();
    for rec in rdr.deserialize::<T>() {
        match rec {
            Ok(r) => out.push((out.len() + 2, r)),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                return Err(Error::Parse { path: path.display().to_string(), line, msg: e.to_string() });
            }
        }
    }
    Ok(out)
}

/// Reads static road data from CSV files with headers:
///
/// - vertices: `id` (extra columns ignored)
/// - edges: `from,to,length_m,speed_class`
/// - POIs: `vertex,category`
/// - classes: `class,max_kmh`
///
/// Unknown vertices or classes are errors naming the file and line.
pub fn read_road_network(vertices: &Path, edges: &Path, pois: &Path, classes: &Path) -> Result<RoadNetwork> {
    let mut net = RoadNetwork::default();
    let mut index = HashMap::new();
    let parse_err = |path: &Path, line: usize, msg: String| Error::Parse { path: path.display().to_string(), line, msg };

    for (line, row) in read_csv::<ClassRow>(classes)? {
        net.classes.push(SpeedClass { name: row.class, max_kmh: row.max_kmh });
        if net.classes.last().unwrap().max_kmh <= 0.0 {
            return Err(parse_err(classes, line, "max_kmh must be positive".into()));
        }
    }
    let class_of: HashMap<&str, usize> = net.classes.iter().enumerate().map(|(i, c)| (c.name.as_str(), i)).collect();

    for (line, row) in read_csv::<VertexRow>(vertices)? {
        if index.insert(row.id.clone(), net.names.len() as VertexId).is_some() {
            return Err(parse_err(vertices, line, format!("duplicate vertex `{}`", row.id)));
        }
        net.names.push(row.id);
    }
    let lookup = |path: &Path, line: usize, name: &str| {
        index.get(name).copied().ok_or_else(|| parse_err(path, line, format!("unknown vertex `{name}`")))
    };
    for (line, row) in read_csv::<EdgeRow>(edges)? {
        let from = lookup(edges, line, &row.from)?;
        let to = lookup(edges, line, &row.to)?;
        let class = *class_of
            .get(row.speed_class.as_str())
            .ok_or_else(|| parse_err(edges, line, format!("unknown speed class `{}`", row.speed_class)))?;
        if !(row.length_m.is_finite() && row.length_m > 0.0) {
            return Err(parse_err(edges, line, format!("length {} must be positive", row.length_m)));
        }
        net.edges.push(RoadEdge { from, to, length_m: row.length_m, class, line });
    }
    for (line, row) in read_csv::<PoiRow>(pois)? {
        let v = lookup(pois, line, &row.vertex)?;
        net.pois.push((v, row.category));
    }
    Ok(net)
}

/// [`read_road_network`] followed by [`synthesize_real_costs`]. A POI listed
/// twice is reported as dropped.
pub fn import_network(
    vertices: &Path,
    edges: &Path,
    pois: &Path,
    classes: &Path,
    dwell: f64,
    seed: u64,
) -> Result<(TimeDependentGraph, ImportReport)> {
    let mut net = read_road_network(vertices, edges, pois, classes)?;
    let mut seen = HashMap::new();
    let mut dropped = Vec::new();
    net.pois.retain(|(v, c)| {
        if let Some(prev) = seen.insert(*v, c.clone()) {
            dropped.push((0, format!("vertex {} already has category `{prev}`", v)));
            false
        } else {
            true
        }
    });
    let (g, mut report) = synthesize_real_costs(&net, dwell, seed)?;
    report.dropped.extend(dropped);
    Ok((g, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_pois_split_evenly() {
        let g = generate_grid(&GridParams { vertices: 25, poi_density: 0.2, num_categories: 2, seed: 7, ..Default::default() }).unwrap();
        let sizes: Vec<usize> = g.categories().iter().map(|c| c.members.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 5);
        assert!(sizes == [3, 2] || sizes == [2, 3], "{sizes:?}");
    }

    #[test]
    fn grid_degree_and_breakpoints() {
        let g = generate_grid(&GridParams { vertices: 400, seed: 3, ..Default::default() }).unwrap();
        assert_eq!(g.num_edges(), 1000);
        for (_, _, f) in g.edges() {
            assert_eq!(f.breakpoints().len(), 24);
            assert!(f.validate_fifo().is_ok());
        }
    }

    #[test]
    fn degree_too_low_is_rejected() {
        let p = GridParams { vertices: 100, vertex_degree: 1.0, ..Default::default() };
        assert!(matches!(generate_grid(&p), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn high_degree_uses_diagonals() {
        let g = generate_grid(&GridParams { vertices: 100, vertex_degree: 5.0, ..Default::default() }).unwrap();
        assert_eq!(g.num_edges(), 500);
    }

    #[test]
    fn same_seed_same_graph() {
        let p = GridParams { vertices: 64, seed: 11, ..Default::default() };
        assert_eq!(generate_grid(&p).unwrap().fingerprint(), generate_grid(&p).unwrap().fingerprint());
        let q = GridParams { seed: 12, ..p };
        assert_ne!(generate_grid(&p).unwrap().fingerprint(), generate_grid(&q).unwrap().fingerprint());
    }

    #[test]
    fn class_distribution() {
        assert_eq!(class_speed_distribution(100.0, 100.0), (100.0, 25.0));
    }

    #[test]
    fn rush_hour_arithmetic() {
        let f = rush_hour_function(1000.0, 60.0).unwrap();
        assert!((f.eval_at(0.0) - 1.0).abs() < 1e-12);
        assert!((f.eval_at(16.0 * 60.0) - 1.9).abs() < 1e-12);
        assert!((f.eval_at(8.0 * 60.0) - 1.7).abs() < 1e-12);
        assert!((f.eval_at(7.0 * 60.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn long_edges_get_repaired() {
        // 100 km at 20 km/h: 300 min base, the 1.9 -> 1.0 drop is steeper than -1
        let f = rush_hour_function(100_000.0, 20.0).unwrap();
        assert!(f.validate_fifo().is_ok());
    }

    #[test]
    fn spur_pois_are_leaves() {
        let g = spur_network(&SpurParams { grid_vertices: 36, num_categories: 3, pois_per_category: 2, max_dwell: 60.0, seed: 5 }).unwrap();
        for c in g.categories() {
            for &p in &c.members {
                assert_eq!(g.out_degree(p), 1);
            }
        }
    }
}
