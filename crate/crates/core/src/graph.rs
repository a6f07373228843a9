//! Time-dependent and static road graphs.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use crate::clock::{Clock, DAY, EPS};
use crate::error::{Error, Result};
use crate::ttf::TravelTimeFunction;

pub type VertexId = u32;
pub type CategoryId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct Category {
    pub name: String,
    /// Minutes spent at any POI of this category.
    pub dwell: f64,
    /// Member POIs in increasing vertex order.
    pub members: Vec<VertexId>,
}

/// Directed graph whose edge costs depend on the departure time of day.
///
/// Immutable once built; adjacency lists are sorted by head vertex.
#[derive(Debug)]
pub struct TimeDependentGraph {
    period: f64,
    names: Vec<String>,
    index: HashMap<String, VertexId>,
    first_out: Vec<u32>,
    heads: Vec<VertexId>,
    funcs: Vec<TravelTimeFunction>,
    poi_category: Vec<Option<CategoryId>>,
    categories: Vec<Category>,
    category_index: HashMap<String, CategoryId>,
    fingerprint: OnceLock<[u8; 32]>,
}

impl Clone for TimeDependentGraph {
    fn clone(&self) -> Self {
        Self {
            period: self.period,
            names: self.names.clone(),
            index: self.index.clone(),
            first_out: self.first_out.clone(),
            heads: self.heads.clone(),
            funcs: self.funcs.clone(),
            poi_category: self.poi_category.clone(),
            categories: self.categories.clone(),
            category_index: self.category_index.clone(),
            fingerprint: OnceLock::new(),
        }
    }
}

impl TimeDependentGraph {
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.heads.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        0..self.names.len() as VertexId
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn vertex(&self, name: &str) -> Result<VertexId> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if (v as usize) < self.names.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v.to_string()))
        }
    }

    /// Outgoing edges of `u` as `(head, cost function)` pairs.
    pub fn out_edges(&self, u: VertexId) -> impl Iterator<Item = (VertexId, &TravelTimeFunction)> + '_ {
        let r = self.first_out[u as usize] as usize..self.first_out[u as usize + 1] as usize;
        self.heads[r.clone()].iter().copied().zip(self.funcs[r].iter())
    }

    pub fn out_degree(&self, u: VertexId) -> usize {
        (self.first_out[u as usize + 1] - self.first_out[u as usize]) as usize
    }

    /// All edges as `(tail, head, function)`, in tail then head order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, &TravelTimeFunction)> + '_ {
        self.vertices().flat_map(move |u| self.out_edges(u).map(move |(v, f)| (u, v, f)))
    }

    pub fn edge(&self, u: VertexId, v: VertexId) -> Option<&TravelTimeFunction> {
        let lo = self.first_out[u as usize] as usize;
        let hi = self.first_out[u as usize + 1] as usize;
        let slice = &self.heads[lo..hi];
        slice.binary_search(&v).ok().map(|i| &self.funcs[lo + i])
    }

    pub fn eval_cost(&self, u: VertexId, v: VertexId, depart: Clock) -> Result<f64> {
        self.edge(u, v).map(|f| f.eval(depart)).ok_or(Error::MissingEdge(u, v))
    }

    /// Clock on reaching `v` when leaving `u` at `depart`.
    pub fn arrival_clock(&self, u: VertexId, v: VertexId, depart: Clock) -> Result<Clock> {
        let c = self.eval_cost(u, v, depart)?;
        Ok(depart.advance(c, self.period))
    }

    pub fn category_of(&self, v: VertexId) -> Option<CategoryId> {
        self.poi_category[v as usize]
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn num_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn category(&self, c: CategoryId) -> &Category {
        &self.categories[c as usize]
    }

    pub fn category_id(&self, name: &str) -> Result<CategoryId> {
        self.category_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownCategory(name.to_string()))
    }

    pub fn dwell(&self, c: CategoryId) -> f64 {
        self.categories[c as usize].dwell
    }

    /// The static graph whose edge costs are the minimum over the day.
    pub fn lower_bound_graph(&self) -> StaticGraph {
        StaticGraph {
            first_out: self.first_out.clone(),
            heads: self.heads.clone(),
            weights: self.funcs.iter().map(TravelTimeFunction::min_cost).collect(),
        }
    }

    /// Stable hash over the canonical text serialization.
    pub fn fingerprint(&self) -> [u8; 32] {
        *self.fingerprint.get_or_init(|| crate::format::fingerprint(self))
    }

    /// A builder pre-populated with this graph's vertices, categories and edges.
    pub fn to_builder(&self) -> GraphBuilder {
        let mut b = GraphBuilder::new(self.period);
        for name in &self.names {
            b.add_vertex(name).expect("names are unique");
        }
        for c in &self.categories {
            b.add_category(&c.name, c.dwell).expect("categories are unique");
        }
        for v in self.vertices() {
            if let Some(c) = self.poi_category[v as usize] {
                b.set_category(v, c).expect("valid tag");
            }
        }
        for (u, v, f) in self.edges() {
            b.add_edge(u, v, f.clone()).expect("edges are unique");
        }
        b
    }
}

/// Incremental construction of a [`TimeDependentGraph`]; validates on `build`.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    period: f64,
    names: Vec<String>,
    index: HashMap<String, VertexId>,
    edges: BTreeMap<(VertexId, VertexId), TravelTimeFunction>,
    poi_category: Vec<Option<CategoryId>>,
    categories: Vec<(String, f64)>,
    category_index: HashMap<String, CategoryId>,
}

impl Default for GraphBuilder {
    fn default() -> Self {
        Self::new(DAY)
    }
}

impl GraphBuilder {
    pub fn new(period: f64) -> Self {
        Self {
            period,
            names: Vec::new(),
            index: HashMap::new(),
            edges: BTreeMap::new(),
            poi_category: Vec::new(),
            categories: Vec::new(),
            category_index: HashMap::new(),
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn add_vertex(&mut self, name: &str) -> Result<VertexId> {
        if self.index.contains_key(name) {
            return Err(Error::InvalidGraph(format!("duplicate vertex `{name}`")));
        }
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidGraph(format!("bad vertex name `{name}`")));
        }
        let id = self.names.len() as VertexId;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.poi_category.push(None);
        Ok(id)
    }

    /// Adds `n` vertices named by their index.
    pub fn add_numbered_vertices(&mut self, n: usize) -> Vec<VertexId> {
        (0..n)
            .map(|_| {
                let name = self.names.len().to_string();
                self.add_vertex(&name).expect("numbered names are fresh")
            })
            .collect()
    }

    pub fn vertex(&self, name: &str) -> Option<VertexId> {
        self.index.get(name).copied()
    }

    pub fn add_category(&mut self, name: &str, dwell: f64) -> Result<CategoryId> {
        if self.category_index.contains_key(name) {
            return Err(Error::InvalidGraph(format!("duplicate category `{name}`")));
        }
        if !(dwell.is_finite() && dwell >= 0.0) {
            return Err(Error::InvalidGraph(format!("category `{name}` has invalid dwell {dwell}")));
        }
        let id = self.categories.len() as CategoryId;
        self.categories.push((name.to_string(), dwell));
        self.category_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn category(&self, name: &str) -> Option<CategoryId> {
        self.category_index.get(name).copied()
    }

    pub fn set_category(&mut self, v: VertexId, c: CategoryId) -> Result<()> {
        if c as usize >= self.categories.len() {
            return Err(Error::UnknownCategory(c.to_string()));
        }
        let slot = self
            .poi_category
            .get_mut(v as usize)
            .ok_or_else(|| Error::UnknownVertex(v.to_string()))?;
        if let Some(old) = *slot {
            if old != c {
                return Err(Error::InvalidGraph(format!("vertex {v} already belongs to a category")));
            }
        }
        *slot = Some(c);
        Ok(())
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.edges.contains_key(&(u, v))
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    fn check_edge(&self, u: VertexId, v: VertexId, f: &TravelTimeFunction) -> Result<()> {
        let n = self.names.len() as VertexId;
        if u >= n || v >= n {
            return Err(Error::InvalidGraph(format!("edge ({u}, {v}) references an unknown vertex")));
        }
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop on vertex {}", self.names[u as usize])));
        }
        if (f.period() - self.period).abs() > EPS {
            return Err(Error::InvalidGraph(format!(
                "edge ({}, {}) has period {} but the graph uses {}",
                self.names[u as usize],
                self.names[v as usize],
                f.period(),
                self.period
            )));
        }
        Ok(())
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId, f: TravelTimeFunction) -> Result<()> {
        self.check_edge(u, v, &f)?;
        if self.edges.contains_key(&(u, v)) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                self.names[u as usize], self.names[v as usize]
            )));
        }
        self.edges.insert((u, v), f);
        Ok(())
    }

    /// Adds an edge, merging with an existing parallel edge by pointwise
    /// minimum. Returns `true` when a merge happened.
    pub fn add_or_merge_edge(&mut self, u: VertexId, v: VertexId, f: TravelTimeFunction) -> Result<bool> {
        self.check_edge(u, v, &f)?;
        match self.edges.get_mut(&(u, v)) {
            Some(old) => {
                *old = old.pointwise_min(&f);
                Ok(true)
            }
            None => {
                self.edges.insert((u, v), f);
                Ok(false)
            }
        }
    }

    pub fn remove_edge(&mut self, u: VertexId, v: VertexId) -> Option<TravelTimeFunction> {
        self.edges.remove(&(u, v))
    }

    pub fn edge_keys(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.edges.keys().copied()
    }

    pub fn edge_functions_mut(&mut self) -> impl Iterator<Item = (&(VertexId, VertexId), &mut TravelTimeFunction)> {
        self.edges.iter_mut()
    }

    pub fn build(self) -> Result<TimeDependentGraph> {
        let n = self.names.len();
        let mut first_out = vec![0u32; n + 1];
        for &(u, _) in self.edges.keys() {
            first_out[u as usize + 1] += 1;
        }
        for i in 0..n {
            first_out[i + 1] += first_out[i];
        }
        let mut heads = Vec::with_capacity(self.edges.len());
        let mut funcs = Vec::with_capacity(self.edges.len());
        // BTreeMap iteration is already (tail, head) ordered
        for ((u, v), f) in self.edges {
            if let Err(e) = f.validate_fifo() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) violates FIFO on segment {} (slope {})",
                    self.names[u as usize], self.names[v as usize], e.segment, e.slope
                )));
            }
            heads.push(v);
            funcs.push(f);
        }
        let mut members: Vec<Vec<VertexId>> = vec![Vec::new(); self.categories.len()];
        for (v, c) in self.poi_category.iter().enumerate() {
            if let Some(c) = c {
                members[*c as usize].push(v as VertexId);
            }
        }
        let categories = self
            .categories
            .into_iter()
            .zip(members)
            .map(|((name, dwell), members)| Category { name, dwell, members })
            .collect();
        Ok(TimeDependentGraph {
            period: self.period,
            names: self.names,
            index: self.index,
            first_out,
            heads,
            funcs,
            poi_category: self.poi_category,
            categories,
            category_index: self.category_index,
            fingerprint: OnceLock::new(),
        })
    }
}

/// Directed graph with constant non-negative edge costs.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticGraph {
    first_out: Vec<u32>,
    heads: Vec<VertexId>,
    weights: Vec<f64>,
}

impl StaticGraph {
    /// Builds from an edge list; rejects self-loops, duplicates, bad costs
    /// and unknown endpoints.
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId, f64)]) -> Result<Self> {
        let mut sorted: Vec<(VertexId, VertexId, f64)> = edges.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in sorted.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
            }
        }
        let mut first_out = vec![0u32; n + 1];
        for &(u, v, c) in &sorted {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) references an unknown vertex")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {u}")));
            }
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) has invalid cost {c}")));
            }
            first_out[u as usize + 1] += 1;
        }
        for i in 0..n {
            first_out[i + 1] += first_out[i];
        }
        Ok(Self {
            first_out,
            heads: sorted.iter().map(|e| e.1).collect(),
            weights: sorted.iter().map(|e| e.2).collect(),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.first_out.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.heads.len()
    }

    pub fn out_edges(&self, u: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        let r = self.first_out[u as usize] as usize..self.first_out[u as usize + 1] as usize;
        self.heads[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        (0..self.num_vertices() as VertexId).flat_map(move |u| self.out_edges(u).map(move |(v, c)| (u, v, c)))
    }

    pub fn edge(&self, u: VertexId, v: VertexId) -> Option<f64> {
        self.out_edges(u).find(|&(h, _)| h == v).map(|(_, c)| c)
    }

    /// Same vertices, every edge flipped, costs preserved.
    pub fn reverse(&self) -> StaticGraph {
        let edges: Vec<_> = self.edges().map(|(u, v, c)| (v, u, c)).collect();
        StaticGraph::from_edges(self.num_vertices(), &edges).expect("reversal preserves validity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> TimeDependentGraph {
        let mut b = GraphBuilder::default();
        let a = b.add_vertex("a").unwrap();
        let bb = b.add_vertex("b").unwrap();
        let c = b.add_vertex("c").unwrap();
        b.add_edge(a, bb, TravelTimeFunction::constant(6.0)).unwrap();
        b.add_edge(bb, c, TravelTimeFunction::constant(30.0)).unwrap();
        b.add_edge(
            a,
            c,
            TravelTimeFunction::new(vec![(0.0, 10.0), (720.0, 30.0)], DAY).unwrap(),
        )
        .unwrap();
        b.build().unwrap()
    }

    #[test]
    fn arrival_clock_examples() {
        let g = chain();
        let t = |m: f64| Clock::new(m, DAY);
        assert_eq!(g.arrival_clock(0, 1, t(1080.0)).unwrap().minutes(), 1086.0);
        assert_eq!(g.arrival_clock(1, 2, t(1430.0)).unwrap().minutes(), 20.0);
        assert!((g.arrival_clock(0, 2, t(360.0)).unwrap().minutes() - 380.0).abs() < 1e-12);
        assert!(matches!(g.arrival_clock(2, 0, t(0.0)), Err(Error::MissingEdge(2, 0))));
    }

    #[test]
    fn lower_bound_graph_takes_minimum() {
        let g = chain();
        let lb = g.lower_bound_graph();
        assert_eq!(lb.edge(0, 1), Some(6.0));
        assert_eq!(lb.edge(0, 2), Some(10.0));
        assert_eq!(lb.num_edges(), 3);
    }

    #[test]
    fn reverse_examples() {
        let g = StaticGraph::from_edges(2, &[(0, 1, 3.0)]).unwrap();
        assert_eq!(g.reverse().edges().collect::<Vec<_>>(), vec![(1, 0, 3.0)]);
        let empty = StaticGraph::from_edges(3, &[]).unwrap();
        assert_eq!(empty.reverse(), empty);
        assert_eq!(empty.reverse().num_vertices(), 3);
        let two = StaticGraph::from_edges(2, &[(0, 1, 2.0), (1, 0, 7.0)]).unwrap();
        let r = two.reverse();
        assert_eq!(r.edge(1, 0), Some(2.0));
        assert_eq!(r.edge(0, 1), Some(7.0));
        assert_eq!(r.reverse(), two);
    }

    #[test]
    fn structural_invariants_enforced() {
        let mut b = GraphBuilder::default();
        let a = b.add_vertex("a").unwrap();
        let c = b.add_vertex("c").unwrap();
        assert!(b.add_vertex("a").is_err());
        assert!(b.add_edge(a, a, TravelTimeFunction::constant(1.0)).is_err());
        assert!(b.add_edge(a, 9, TravelTimeFunction::constant(1.0)).is_err());
        b.add_edge(a, c, TravelTimeFunction::constant(1.0)).unwrap();
        assert!(b.add_edge(a, c, TravelTimeFunction::constant(2.0)).is_err());
        assert!(b
            .add_edge(c, a, TravelTimeFunction::constant_with_period(1.0, 60.0))
            .is_err());
        let bank = b.add_category("bank", 15.0).unwrap();
        let food = b.add_category("food", 60.0).unwrap();
        b.set_category(a, bank).unwrap();
        assert!(b.set_category(a, food).is_err());
        assert!(b.add_category("bank", 1.0).is_err());
        let g = b.build().unwrap();
        assert_eq!(g.category(bank).members, vec![a]);
        assert!(g.category(food).members.is_empty());
    }

    #[test]
    fn merge_keeps_pointwise_minimum() {
        let mut b = GraphBuilder::default();
        let a = b.add_vertex("a").unwrap();
        let c = b.add_vertex("c").unwrap();
        b.add_edge(a, c, TravelTimeFunction::constant(5.0)).unwrap();
        assert!(b.add_or_merge_edge(a, c, TravelTimeFunction::constant(8.0)).unwrap());
        let g = b.build().unwrap();
        assert_eq!(g.edge(a, c).unwrap(), &TravelTimeFunction::constant(5.0));
    }
}
