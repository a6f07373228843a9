//! TD-OSR: A* over (vertex, sequence progress) labels.
//!
//! The heuristic of a label at `v` with categories `C[i..]` still to visit is
//! `max(L(v, C_i), ..., L(v, C_m), L(v, d))`. The heuristic is consistent,
//! also across POI visits, so closing each `(vertex, progress)` state on its
//! first expansion is exact and expands a vertex at most `m + 1` times.
//!
//! [`OsrOptions::level_pruning`] switches to the more aggressive per-vertex
//! bookkeeping: one queued label per vertex, a vertex expanded at progress
//! `k` rejects later labels with progress `<= k`, and a queued label is only
//! replaced by one with at least as much progress and no larger priority.
//! That variant expands fewer labels but can miss the optimum when a
//! low-progress label is crowded out by a high-progress one at the same
//! vertex, so it is off by default.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::bounds::{destination_bounds, DestinationBounds, LowerBoundTable};
use crate::clock::{Clock, EPS};
use crate::error::{Error, Result};
use crate::graph::{CategoryId, TimeDependentGraph, VertexId};
use crate::oracle;
use crate::route::{OtdsrQuery, Route, SearchStats};
use crate::tdsp::Leg;

/// Limits after which a search gives up with [`Error::BudgetExceeded`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SearchBudget {
    pub max_expansions: Option<u64>,
    pub time_limit: Option<Duration>,
}

impl SearchBudget {
    pub(crate) fn check(&self, expansions: u64, started: Instant) -> Result<()> {
        if let Some(max) = self.max_expansions {
            if expansions > max {
                return Err(Error::BudgetExceeded(format!("more than {max} expansions")));
            }
        }
        if let Some(limit) = self.time_limit {
            if expansions % 256 == 0 && started.elapsed() > limit {
                return Err(Error::BudgetExceeded(format!("time limit of {limit:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OsrOptions {
    /// Reject labels at vertices already expanded at an equal or higher
    /// progress, and keep one queued label per vertex. Not exact; when off
    /// (the default), labels are closed per `(vertex, progress)` state.
    pub level_pruning: bool,
    /// Count the source as the first POI when it belongs to `sequence[0]`.
    pub count_origin: bool,
    /// Besides consuming a POI of the next category, also keep a label that
    /// passes through it without visiting.
    pub allow_passthrough: bool,
    /// Record the `(priority, progress)` of every expanded label.
    pub record_pops: bool,
    pub budget: SearchBudget,
}

impl Default for OsrOptions {
    fn default() -> Self {
        Self {
            level_pruning: false,
            count_origin: false,
            allow_passthrough: false,
            record_pops: false,
            budget: SearchBudget::default(),
        }
    }
}

/// Lower bound on the remaining travel from `v` through `remaining` to the destination.
pub fn heuristic(v: VertexId, remaining: &[CategoryId], table: &LowerBoundTable, bounds: &DestinationBounds) -> f64 {
    remaining
        .iter()
        .map(|&c| table.get(v, c))
        .fold(bounds.get(v), f64::max)
}

#[derive(Debug, Clone, Copy)]
struct Label {
    vertex: VertexId,
    progress: u32,
    /// Travel so far, dwell excluded.
    travel: f64,
    /// Cost of the edge that led here.
    edge_cost: f64,
    /// Clock on arrival, before any dwell.
    arrive: Clock,
    /// Clock when leaving, dwell included.
    clock: Clock,
    priority: f64,
    visited: bool,
    parent: u32,
}

const NO_PARENT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
struct QKey {
    priority: f64,
    progress: u32,
    vertex: VertexId,
    label: u32,
}

impl Eq for QKey {}

impl Ord for QKey {
    // smallest priority first, then highest progress, then smallest vertex id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| self.progress.cmp(&other.progress))
            .then_with(|| other.vertex.cmp(&self.vertex))
            .then_with(|| other.label.cmp(&self.label))
    }
}

impl PartialOrd for QKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Full result of a TD-OSR run.
#[derive(Debug, Clone)]
pub struct OsrAnswer {
    pub route: Route,
    pub stats: SearchStats,
    /// `(priority, progress)` of each expanded label when requested.
    pub popped: Vec<(f64, u32)>,
}

/// Answers `query` with TD-OSR using default options.
pub fn td_osr_query(g: &TimeDependentGraph, table: &LowerBoundTable, query: &OtdsrQuery) -> Result<(Route, SearchStats)> {
    let a = td_osr_run(g, table, None, query, &OsrOptions::default())?;
    Ok((a.route, a.stats))
}

/// Answers `query` with TD-OSR. `bounds` may carry precomputed destination
/// bounds for `query.destination`; they are computed otherwise.
pub fn td_osr_run(
    g: &TimeDependentGraph,
    table: &LowerBoundTable,
    bounds: Option<&DestinationBounds>,
    query: &OtdsrQuery,
    opts: &OsrOptions,
) -> Result<OsrAnswer> {
    let started = Instant::now();
    table.check(g)?;
    query.validate(g)?;
    for &c in &query.sequence {
        if !table.has_category(c) {
            return Err(Error::UnknownCategory(g.category(c).name.clone()));
        }
    }
    let owned;
    let bounds = match bounds {
        Some(b) if b.target() == query.destination => b,
        Some(_) => return Err(Error::InvalidParameter("destination bounds for another vertex".into())),
        None => {
            owned = destination_bounds(g, query.destination)?;
            &owned
        }
    };

    let seq = &query.sequence;
    let m = seq.len();
    let n = g.num_vertices();
    let period = g.period();
    let h = |v: VertexId, progress: usize| heuristic(v, &seq[progress..], table, bounds);

    let mut labels: Vec<Label> = Vec::new();
    let mut heap: BinaryHeap<QKey> = BinaryHeap::new();
    let mut stats = SearchStats::default();
    let mut popped = Vec::new();
    let mut expanded_count = vec![0u32; n];

    // Level-pruning mode: one queue slot per vertex plus the highest level removed.
    // State mode: one queue slot and a closed flag per (vertex, progress).
    let slots = if opts.level_pruning { n } else { n * (m + 1) };
    let mut in_queue: Vec<u32> = vec![NO_PARENT; slots];
    let mut removed_max: Vec<i64> = vec![-1; if opts.level_pruning { n } else { 0 }];
    let mut closed: Vec<bool> = vec![false; if opts.level_pruning { 0 } else { slots }];
    let slot = |v: VertexId, progress: u32| {
        if opts.level_pruning {
            v as usize
        } else {
            v as usize * (m + 1) + progress as usize
        }
    };

    let s = query.source;
    let mut start = Label {
        vertex: s,
        progress: 0,
        travel: 0.0,
        edge_cost: 0.0,
        arrive: query.depart,
        clock: query.depart,
        priority: 0.0,
        visited: false,
        parent: NO_PARENT,
    };
    if opts.count_origin && m > 0 && g.category_of(s) == Some(seq[0]) {
        start.progress = 1;
        start.visited = true;
        start.clock = query.depart.advance(query.dwell_at(g, 0), period);
    }
    start.priority = h(s, start.progress as usize);
    if start.priority.is_infinite() {
        return Err(Error::Unreachable);
    }
    labels.push(start);
    heap.push(QKey { priority: start.priority, progress: start.progress, vertex: s, label: 0 });
    in_queue[slot(s, start.progress)] = 0;
    stats.enqueued += 1;

    let mut candidates: Vec<(u32, f64, bool)> = Vec::with_capacity(2);
    while let Some(key) = heap.pop() {
        let u = key.vertex;
        let us = slot(u, key.progress);
        if in_queue[us] != key.label {
            continue;
        }
        in_queue[us] = NO_PARENT;
        let cur = labels[key.label as usize];
        if opts.level_pruning {
            removed_max[u as usize] = removed_max[u as usize].max(cur.progress as i64);
        } else {
            closed[us] = true;
        }
        stats.expansions += 1;
        expanded_count[u as usize] += 1;
        if opts.record_pops {
            popped.push((cur.priority, cur.progress));
        }
        opts.budget.check(stats.expansions, started)?;

        if u == query.destination && cur.progress as usize == m {
            stats.max_expansions_per_vertex = expanded_count.iter().copied().max().unwrap_or(0) as u64;
            let route = build_route(g, query, &labels, key.label);
            stats.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
            return Ok(OsrAnswer { route, stats, popped });
        }

        for (v, f) in g.out_edges(u) {
            let c = f.eval(cur.clock);
            let travel = cur.travel + c;
            let arrive = cur.clock.advance(c, period);
            candidates.clear();
            let next = cur.progress as usize;
            if next < m && g.category_of(v) == Some(seq[next]) {
                candidates.push((cur.progress + 1, query.dwell_at(g, next), true));
                if opts.allow_passthrough {
                    candidates.push((cur.progress, 0.0, false));
                }
            } else {
                candidates.push((cur.progress, 0.0, false));
            }
            for &(progress, spent, visited) in &candidates {
                let hv = h(v, progress as usize);
                if hv.is_infinite() {
                    continue;
                }
                let priority = travel + hv;
                let vs = slot(v, progress);
                if opts.level_pruning {
                    if removed_max[v as usize] >= progress as i64 {
                        continue;
                    }
                } else if closed[vs] {
                    continue;
                }
                let queued = in_queue[vs];
                let replace = if queued == NO_PARENT {
                    None
                } else {
                    let q = &labels[queued as usize];
                    let better = if opts.level_pruning {
                        progress >= q.progress && priority <= q.priority
                    } else {
                        priority < q.priority
                    };
                    if !better {
                        continue;
                    }
                    Some(())
                };
                let idx = labels.len() as u32;
                labels.push(Label {
                    vertex: v,
                    progress,
                    travel,
                    edge_cost: c,
                    arrive,
                    clock: arrive.advance(spent, period),
                    priority,
                    visited,
                    parent: key.label,
                });
                in_queue[vs] = idx;
                heap.push(QKey { priority, progress, vertex: v, label: idx });
                if replace.is_some() {
                    stats.updated += 1;
                } else {
                    stats.enqueued += 1;
                }
            }
        }
    }
    Err(Error::Unreachable)
}

fn build_route(g: &TimeDependentGraph, query: &OtdsrQuery, labels: &[Label], last: u32) -> Route {
    let mut chain = Vec::new();
    let mut i = last;
    while i != NO_PARENT {
        chain.push(labels[i as usize]);
        i = labels[i as usize].parent;
    }
    chain.reverse();

    let mut legs = Vec::new();
    let mut pois = Vec::new();
    let mut path = vec![chain[0].vertex];
    let mut travel = 0.0;
    let mut depart = query.depart;
    let close_leg = |path: &mut Vec<VertexId>, travel: &mut f64, depart: Clock, arrive: Clock| {
        let leg = Leg { path: std::mem::take(path), travel: *travel, depart, arrive };
        *travel = 0.0;
        leg
    };
    if chain[0].visited {
        pois.push(chain[0].vertex);
        legs.push(close_leg(&mut path, &mut travel, depart, chain[0].arrive));
        path.push(chain[0].vertex);
        depart = chain[0].clock;
    }
    for l in &chain[1..] {
        path.push(l.vertex);
        travel += l.edge_cost;
        if l.visited {
            pois.push(l.vertex);
            legs.push(close_leg(&mut path, &mut travel, depart, l.arrive));
            path.push(l.vertex);
            depart = l.clock;
        }
    }
    let end = chain.last().expect("non-empty chain");
    legs.push(close_leg(&mut path, &mut travel, depart, end.arrive));
    let route = Route::from_legs(g, query, pois, legs);
    debug_assert!((route.total_travel - end.travel).abs() <= 1e-6 + EPS);
    route
}

/// One `(vertex, remaining sequence, clock)` state checked by
/// [`label_admissibility_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilitySample {
    pub vertex: VertexId,
    pub remaining: Vec<CategoryId>,
    pub clock: Clock,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdmissibilityReport {
    pub checked: usize,
    /// Samples from which the destination cannot be reached at all.
    pub unreachable: usize,
    /// `(sample index, heuristic, oracle remaining travel)` of each violation.
    pub violations: Vec<(usize, f64, f64)>,
}

/// Compares the heuristic against the exact remaining travel computed by the
/// product-graph oracle for every sample.
pub fn label_admissibility_check(
    g: &TimeDependentGraph,
    table: &LowerBoundTable,
    bounds: &DestinationBounds,
    samples: &[AdmissibilitySample],
) -> Result<AdmissibilityReport> {
    let mut report = AdmissibilityReport::default();
    for (i, s) in samples.iter().enumerate() {
        let h = heuristic(s.vertex, &s.remaining, table, bounds);
        let q = OtdsrQuery::new(s.vertex, bounds.target(), s.clock, s.remaining.clone());
        report.checked += 1;
        match oracle::product_dijkstra(g, &q, oracle::VisitSemantics::default()) {
            Ok(route) => {
                if h > route.total_travel + EPS {
                    report.violations.push((i, h, route.total_travel));
                }
            }
            Err(Error::Unreachable) => report.unreachable += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::build_category_bounds;
    use crate::clock::DAY;
    use crate::graph::GraphBuilder;
    use crate::ttf::TravelTimeFunction;

    #[test]
    fn heuristic_examples() {
        let mut b = GraphBuilder::default();
        let v = b.add_numbered_vertices(5);
        let cats: Vec<_> = (0..3).map(|i| b.add_category(&format!("c{i}"), 0.0).unwrap()).collect();
        // v0 -> v1 (3) ; v0 -> v2 (7) ; v0 -> v3 (5) ; v0 -> v4 (6)
        b.set_category(v[1], cats[0]).unwrap();
        b.set_category(v[2], cats[1]).unwrap();
        b.set_category(v[3], cats[2]).unwrap();
        for (t, c) in [(1, 3.0), (2, 7.0), (3, 5.0), (4, 6.0)] {
            b.add_edge(v[0], v[t], TravelTimeFunction::constant(c)).unwrap();
        }
        let g = b.build().unwrap();
        let table = build_category_bounds(&g);
        let d = destination_bounds(&g, v[4]).unwrap();
        assert_eq!(heuristic(v[0], &[], &table, &d), 6.0);
        assert_eq!(heuristic(v[0], &cats, &table, &d), 7.0);
        // v4 is the destination; no POI of c0 reachable from it
        assert_eq!(heuristic(v[4], &[], &table, &d), 0.0);
        assert!(heuristic(v[4], &cats[..1], &table, &d).is_infinite());
    }

    #[test]
    fn destination_poi_of_last_category_gives_zero() {
        let mut b = GraphBuilder::default();
        let v = b.add_numbered_vertices(2);
        let c = b.add_category("c", 0.0).unwrap();
        b.set_category(v[1], c).unwrap();
        b.add_edge(v[0], v[1], TravelTimeFunction::constant(1.0)).unwrap();
        let g = b.build().unwrap();
        let table = build_category_bounds(&g);
        let d = destination_bounds(&g, v[1]).unwrap();
        assert_eq!(heuristic(v[1], &[c], &table, &d), 0.0);
    }

    #[test]
    fn empty_sequence_source_is_destination() {
        let mut b = GraphBuilder::default();
        b.add_numbered_vertices(2);
        b.add_edge(0, 1, TravelTimeFunction::constant(1.0)).unwrap();
        let g = b.build().unwrap();
        let table = build_category_bounds(&g);
        let q = OtdsrQuery::new(1, 1, Clock::new(100.0, DAY), vec![]);
        let (route, stats) = td_osr_query(&g, &table, &q).unwrap();
        assert_eq!(route.total_travel, 0.0);
        assert_eq!(route.full_path, vec![1]);
        assert_eq!(stats.expansions, 1);
        assert!(route.verify(&g, &q).is_ok());
    }

    #[test]
    fn count_origin_flag() {
        let mut b = GraphBuilder::default();
        let v = b.add_numbered_vertices(3);
        let c = b.add_category("c", 10.0).unwrap();
        b.set_category(v[0], c).unwrap();
        b.set_category(v[2], c).unwrap();
        b.add_edge(v[0], v[1], TravelTimeFunction::constant(1.0)).unwrap();
        b.add_edge(v[1], v[2], TravelTimeFunction::constant(1.0)).unwrap();
        b.add_edge(v[2], v[1], TravelTimeFunction::constant(1.0)).unwrap();
        let g = b.build().unwrap();
        let table = build_category_bounds(&g);
        let q = OtdsrQuery::new(v[0], v[1], Clock::new(0.0, DAY), vec![c]);
        let (r, _) = td_osr_query(&g, &table, &q).unwrap();
        assert_eq!(r.poi_choices, vec![v[2]]);
        assert_eq!(r.total_travel, 3.0);
        let opts = OsrOptions { count_origin: true, ..Default::default() };
        let a = td_osr_run(&g, &table, None, &q, &opts).unwrap();
        assert_eq!(a.route.poi_choices, vec![v[0]]);
        assert_eq!(a.route.total_travel, 1.0);
        assert!(a.route.verify(&g, &q).is_ok());
    }

    #[test]
    fn budget_is_enforced() {
        let mut b = GraphBuilder::default();
        let v = b.add_numbered_vertices(4);
        for i in 0..3 {
            b.add_edge(v[i], v[i + 1], TravelTimeFunction::constant(1.0)).unwrap();
        }
        let g = b.build().unwrap();
        let table = build_category_bounds(&g);
        let q = OtdsrQuery::new(v[0], v[3], Clock::new(0.0, DAY), vec![]);
        let opts = OsrOptions {
            budget: SearchBudget { max_expansions: Some(2), time_limit: None },
            ..Default::default()
        };
        assert!(matches!(td_osr_run(&g, &table, None, &q, &opts), Err(Error::BudgetExceeded(_))));
    }
}
