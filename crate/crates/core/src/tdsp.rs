//! Time-dependent shortest paths under FIFO.
//!
//! With FIFO costs, leaving a vertex earlier never arrives later, so the
//! classic label-setting search on arrival times is exact and every vertex is
//! settled once. All searches break ties on equal keys by smaller vertex id.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::bounds::{DestinationBounds, LowerBoundTable};
use crate::clock::Clock;
use crate::error::{Error, Result};
use crate::graph::{CategoryId, TimeDependentGraph, VertexId};

/// A path walked from a departure clock, with its accumulated travel time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub path: Vec<VertexId>,
    pub travel: f64,
    pub depart: Clock,
    pub arrive: Clock,
}

impl Leg {
    pub fn trivial(v: VertexId, at: Clock) -> Self {
        Leg { path: vec![v], travel: 0.0, depart: at, arrive: at }
    }

    pub fn source(&self) -> VertexId {
        self.path[0]
    }

    pub fn target(&self) -> VertexId {
        *self.path.last().expect("legs are non-empty")
    }
}

/// Walks `path` edge by edge from `depart`, returning `(travel, arrival clock)`.
pub fn simulate_path(g: &TimeDependentGraph, path: &[VertexId], depart: Clock) -> Result<(f64, Clock)> {
    let mut clock = depart;
    let mut travel = 0.0;
    for w in path.windows(2) {
        let c = g.eval_cost(w[0], w[1], clock)?;
        travel += c;
        clock = clock.advance(c, g.period());
    }
    Ok((travel, clock))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key {
    prio: f64,
    vertex: VertexId,
}

impl Eq for Key {}

impl Ord for Key {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .prio
            .total_cmp(&self.prio)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy)]
struct Label {
    travel: f64,
    clock: Clock,
    parent: VertexId,
    settled: bool,
}

/// Label store shared by the point-to-point, one-to-all and NN searches.
#[derive(Debug, Clone)]
struct Search {
    source: VertexId,
    labels: HashMap<VertexId, Label>,
    heap: BinaryHeap<Key>,
    settled: usize,
    /// POIs of this category end a walk: they are settled but not expanded.
    /// If the source is one of them, walks returning to it reach [`RETURN`].
    leaf_category: Option<CategoryId>,
}

/// Stand-in for the source vertex reached again by a non-empty walk.
const RETURN: VertexId = VertexId::MAX;

impl Search {
    fn new(source: VertexId, depart: Clock, h0: f64) -> Self {
        let mut labels = HashMap::new();
        labels.insert(source, Label { travel: 0.0, clock: depart, parent: source, settled: false });
        let mut heap = BinaryHeap::new();
        heap.push(Key { prio: h0, vertex: source });
        Search { source, labels, heap, settled: 0, leaf_category: None }
    }

    fn is_leaf(&self, g: &TimeDependentGraph, v: VertexId) -> bool {
        self.leaf_category.is_some() && g.category_of(v) == self.leaf_category
    }

    /// Settles the next vertex and relaxes its out-edges.
    fn step(&mut self, g: &TimeDependentGraph, h: impl Fn(VertexId) -> f64) -> Option<VertexId> {
        loop {
            let Key { prio, vertex: u } = self.heap.pop()?;
            let hu = if u == RETURN { 0.0 } else { h(u) };
            let label = self.labels.get_mut(&u).expect("queued vertices have labels");
            if label.settled || prio > label.travel + hu {
                continue;
            }
            label.settled = true;
            self.settled += 1;
            let (travel, clock) = (label.travel, label.clock);
            if u == RETURN || (u != self.source && self.is_leaf(g, u)) {
                return Some(u);
            }
            let source_is_leaf = self.is_leaf(g, self.source);
            for (v, f) in g.out_edges(u) {
                let v = if v == self.source && source_is_leaf { RETURN } else { v };
                let hv = if v == RETURN { 0.0 } else { h(v) };
                if hv.is_infinite() {
                    continue;
                }
                let c = f.eval(clock);
                let nt = travel + c;
                let entry = self.labels.entry(v).or_insert(Label {
                    travel: f64::INFINITY,
                    clock,
                    parent: u,
                    settled: false,
                });
                if entry.settled {
                    continue;
                }
                if nt < entry.travel {
                    entry.travel = nt;
                    entry.clock = clock.advance(c, g.period());
                    entry.parent = u;
                    self.heap.push(Key { prio: nt + hv, vertex: v });
                }
            }
            return Some(u);
        }
    }

    fn leg_to(&self, v: VertexId, depart: Clock) -> Leg {
        let mut path = vec![if v == RETURN { self.source } else { v }];
        let mut cur = v;
        loop {
            cur = self.labels[&cur].parent;
            path.push(cur);
            if cur == self.source {
                break;
            }
        }
        if v == self.source {
            path.truncate(1);
        }
        path.reverse();
        let l = &self.labels[&v];
        Leg { path, travel: l.travel, depart, arrive: l.clock }
    }
}

/// Point-to-point search result with its instrumentation.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub leg: Leg,
    pub settled: usize,
}

/// Minimum-travel-time leg from `s` departing at `depart` to `d`.
///
/// With `bounds` the search is A* guided by `L(v, d)`; without, plain
/// Dijkstra on arrival times. Both return the same travel time.
pub fn shortest_path(
    g: &TimeDependentGraph,
    s: VertexId,
    depart: Clock,
    d: VertexId,
    bounds: Option<&DestinationBounds>,
) -> Result<Leg> {
    shortest_path_counted(g, s, depart, d, bounds).map(|r| r.leg)
}

pub fn shortest_path_counted(
    g: &TimeDependentGraph,
    s: VertexId,
    depart: Clock,
    d: VertexId,
    bounds: Option<&DestinationBounds>,
) -> Result<PathResult> {
    g.check_vertex(s)?;
    g.check_vertex(d)?;
    if let Some(b) = bounds {
        if b.target() != d {
            return Err(Error::InvalidParameter(format!(
                "destination bounds are for vertex {}, not {}",
                g.name(b.target()),
                g.name(d)
            )));
        }
    }
    let h = |v: VertexId| bounds.map_or(0.0, |b| b.get(v));
    if h(s).is_infinite() {
        return Err(Error::Unreachable);
    }
    let mut search = Search::new(s, depart, h(s));
    while let Some(u) = search.step(g, h) {
        if u == d {
            return Ok(PathResult { leg: search.leg_to(d, depart), settled: search.settled });
        }
    }
    Err(Error::Unreachable)
}

/// Earliest arrival at a vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub clock: Clock,
    pub travel: f64,
}

/// Earliest arrivals at every vertex reachable from `s`.
pub fn one_to_all(g: &TimeDependentGraph, s: VertexId, depart: Clock) -> Result<Vec<Option<Arrival>>> {
    g.check_vertex(s)?;
    let mut search = Search::new(s, depart, 0.0);
    while search.step(g, |_| 0.0).is_some() {}
    let mut out = vec![None; g.num_vertices()];
    for (&v, l) in &search.labels {
        if l.settled {
            out[v as usize] = Some(Arrival { clock: l.clock, travel: l.travel });
        }
    }
    Ok(out)
}

/// Resumable time-dependent nearest-neighbour search for one category.
///
/// An A* search with `g` = travel time from the source and `h = L(v, C)`.
/// Because the bound is consistent, category POIs are settled in
/// non-decreasing travel time, so each settled POI is the next neighbour.
///
/// A POI of the category counts as visited as soon as a walk reaches it, so
/// walks never continue through one: the k-th neighbour's leg avoids every
/// other POI of the category. The source only counts when a walk of at
/// least one edge comes back to it.
///
/// Emitted neighbours are kept so several consumers can read ranks
/// independently through [`NnIterator::neighbor`].
#[derive(Debug, Clone)]
pub struct NnIterator<'a> {
    graph: &'a TimeDependentGraph,
    table: &'a LowerBoundTable,
    category: CategoryId,
    depart: Clock,
    search: Search,
    emitted: Vec<(VertexId, Leg)>,
    exhausted: bool,
}

impl<'a> NnIterator<'a> {
    pub fn open(
        graph: &'a TimeDependentGraph,
        table: &'a LowerBoundTable,
        source: VertexId,
        depart: Clock,
        category: CategoryId,
    ) -> Result<Self> {
        graph.check_vertex(source)?;
        if !table.has_category(category) {
            return Err(Error::UnknownCategory(category.to_string()));
        }
        let h0 = table.get(source, category);
        let mut it = Self {
            graph,
            table,
            category,
            depart,
            search: Search { leaf_category: Some(category), ..Search::new(source, depart, h0) },
            emitted: Vec::new(),
            exhausted: false,
        };
        if h0.is_infinite() {
            it.exhausted = true;
        }
        Ok(it)
    }

    pub fn source(&self) -> VertexId {
        self.search.source
    }

    pub fn depart(&self) -> Clock {
        self.depart
    }

    pub fn category(&self) -> CategoryId {
        self.category
    }

    /// Vertices settled so far.
    pub fn settled(&self) -> usize {
        self.search.settled
    }

    fn advance(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        let (table, category, graph) = (self.table, self.category, self.graph);
        let h = |v: VertexId| table.get(v, category);
        while let Some(u) = self.search.step(graph, h) {
            if u == RETURN {
                let leg = self.search.leg_to(u, self.depart);
                self.emitted.push((self.search.source, leg));
                return true;
            }
            if u != self.search.source && graph.category_of(u) == Some(category) {
                let leg = self.search.leg_to(u, self.depart);
                self.emitted.push((u, leg));
                return true;
            }
        }
        self.exhausted = true;
        false
    }

    /// The `k`-th nearest POI (0-based), searching further if needed.
    pub fn neighbor(&mut self, k: usize) -> Option<&(VertexId, Leg)> {
        while self.emitted.len() <= k {
            if !self.advance() {
                return None;
            }
        }
        self.emitted.get(k)
    }

    /// The next not-yet-returned neighbour, in rank order.
    pub fn next_neighbor(&mut self) -> Option<(VertexId, Leg)> {
        if !self.advance() {
            return None;
        }
        self.emitted.last().cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{build_category_bounds, destination_bounds};
    use crate::clock::DAY;
    use crate::graph::GraphBuilder;
    use crate::ttf::TravelTimeFunction;

    fn chain() -> TimeDependentGraph {
        let mut b = GraphBuilder::default();
        let v = b.add_numbered_vertices(3);
        b.add_edge(v[0], v[1], TravelTimeFunction::constant(2.0)).unwrap();
        b.add_edge(v[1], v[2], TravelTimeFunction::constant(3.0)).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn same_source_and_target() {
        let g = chain();
        let leg = shortest_path(&g, 1, Clock::new(5.0, DAY), 1, None).unwrap();
        assert_eq!(leg.travel, 0.0);
        assert_eq!(leg.path, vec![1]);
    }

    #[test]
    fn one_to_all_chain() {
        let g = chain();
        let all = one_to_all(&g, 0, Clock::new(0.0, DAY)).unwrap();
        let travel: Vec<f64> = all.iter().map(|a| a.unwrap().travel).collect();
        assert_eq!(travel, vec![0.0, 2.0, 5.0]);
        let back = one_to_all(&g, 2, Clock::new(0.0, DAY)).unwrap();
        assert!(back[0].is_none() && back[1].is_none());
        assert_eq!(back[2].unwrap().travel, 0.0);
    }

    #[test]
    fn singleton_one_to_all() {
        let mut b = GraphBuilder::default();
        b.add_vertex("s").unwrap();
        let g = b.build().unwrap();
        let all = one_to_all(&g, 0, Clock::new(0.0, DAY)).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].unwrap().travel, 0.0);
    }

    #[test]
    fn unreachable_is_distinct() {
        let g = chain();
        let b = destination_bounds(&g, 0).unwrap();
        assert!(matches!(shortest_path(&g, 2, Clock::new(0.0, DAY), 0, None), Err(Error::Unreachable)));
        assert!(matches!(shortest_path(&g, 2, Clock::new(0.0, DAY), 0, Some(&b)), Err(Error::Unreachable)));
        assert!(matches!(shortest_path(&g, 9, Clock::new(0.0, DAY), 0, None), Err(Error::UnknownVertex(_))));
        assert!(shortest_path(&g, 0, Clock::new(0.0, DAY), 2, Some(&b)).is_err());
    }

    #[test]
    fn nn_source_is_poi() {
        let mut b = GraphBuilder::default();
        let v = b.add_numbered_vertices(4);
        let c = b.add_category("x", 0.0).unwrap();
        b.set_category(v[0], c).unwrap();
        b.set_category(v[2], c).unwrap();
        b.set_category(v[3], c).unwrap();
        b.add_edge(v[0], v[1], TravelTimeFunction::constant(1.0)).unwrap();
        b.add_edge(v[1], v[0], TravelTimeFunction::constant(1.5)).unwrap();
        b.add_edge(v[1], v[2], TravelTimeFunction::constant(1.0)).unwrap();
        b.add_edge(v[2], v[3], TravelTimeFunction::constant(1.0)).unwrap();
        let g = b.build().unwrap();
        let t = build_category_bounds(&g);
        let mut it = NnIterator::open(&g, &t, v[0], Clock::new(0.0, DAY), c).unwrap();
        let (p, leg) = it.next_neighbor().unwrap();
        assert_eq!((p, leg.travel), (v[2], 2.0));
        // coming back to the source counts; the walk is 0 -> 1 -> 0
        let (p, leg) = it.next_neighbor().unwrap();
        assert_eq!((p, leg.travel, leg.path.clone()), (v[0], 2.5, vec![v[0], v[1], v[0]]));
        // v3 is only reachable through the POI v2
        assert!(it.next_neighbor().is_none());
        assert!(it.next_neighbor().is_none());
        assert!(NnIterator::open(&g, &t, v[0], Clock::new(0.0, DAY), 7).is_err());
    }
}
