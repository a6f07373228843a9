//! Brute-force reference answers and the greedy baseline.
//!
//! None of this is tuned for speed. The product-graph search and the
//! combination enumeration share no code with the TD-OSR search, so they
//! can certify its answers on small instances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::bounds::{destination_bounds, LowerBoundTable};
use crate::clock::Clock;
use crate::error::{Error, Result};
use crate::graph::{TimeDependentGraph, VertexId};
use crate::route::{OtdsrQuery, Route};
use crate::tdsp::{one_to_all, shortest_path, Leg, NnIterator};

/// Largest `|V| * (m + 1)` the product-graph search accepts.
pub const MAX_PRODUCT_STATES: usize = 1_000_000;
/// Largest number of POI combinations [`enumerate_combinations`] accepts.
pub const MAX_COMBINATIONS: usize = 10_000;

/// How reaching a POI of the next category is treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VisitSemantics {
    pub count_origin: bool,
    pub allow_passthrough: bool,
}

#[derive(Debug, Clone, Copy)]
struct State {
    travel: f64,
    clock: Clock,
    arrive: Clock,
    edge_cost: f64,
    parent: usize,
    visited: bool,
    closed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    travel: f64,
    state: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.travel.total_cmp(&self.travel).then_with(|| other.state.cmp(&self.state))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact label-setting search over `(vertex, progress)` states.
///
/// Reaching a POI of the next category consumes it and adds its dwell to the
/// clock. At a fixed progress the dwell already spent is the same for every
/// label, so earlier travel means an earlier clock and FIFO makes the first
/// settled label of each state optimal.
pub fn product_dijkstra(g: &TimeDependentGraph, query: &OtdsrQuery, sem: VisitSemantics) -> Result<Route> {
    query.validate(g)?;
    let m = query.len();
    let width = m + 1;
    let n = g.num_vertices();
    if n.saturating_mul(width) > MAX_PRODUCT_STATES {
        return Err(Error::BudgetExceeded(format!("{} product states", n * width)));
    }
    let id = |v: VertexId, p: usize| v as usize * width + p;
    let mut states: Vec<Option<State>> = vec![None; n * width];
    let mut heap = BinaryHeap::new();

    let s = query.source;
    let mut p0 = 0;
    let mut clock0 = query.depart;
    let mut visited0 = false;
    if sem.count_origin && m > 0 && g.category_of(s) == Some(query.sequence[0]) {
        p0 = 1;
        clock0 = query.depart.advance(query.dwell_at(g, 0), g.period());
        visited0 = true;
    }
    states[id(s, p0)] = Some(State {
        travel: 0.0,
        clock: clock0,
        arrive: query.depart,
        edge_cost: 0.0,
        parent: usize::MAX,
        visited: visited0,
        closed: false,
    });
    heap.push(Entry { travel: 0.0, state: id(s, p0) });

    let target = id(query.destination, m);
    while let Some(Entry { travel, state }) = heap.pop() {
        let cur = states[state].expect("queued states exist");
        if cur.closed || travel > cur.travel {
            continue;
        }
        states[state].as_mut().unwrap().closed = true;
        if state == target {
            return Ok(rebuild(g, query, &states, state, width));
        }
        let u = (state / width) as VertexId;
        let p = state % width;
        for (v, f) in g.out_edges(u) {
            let c = f.eval(cur.clock);
            let arrive = cur.clock.advance(c, g.period());
            let nt = cur.travel + c;
            let consumes = p < m && g.category_of(v) == Some(query.sequence[p]);
            let mut options = Vec::with_capacity(2);
            if consumes {
                options.push((p + 1, arrive.advance(query.dwell_at(g, p), g.period()), true));
            }
            if !consumes || sem.allow_passthrough {
                options.push((p, arrive, false));
            }
            for (np, clock, visited) in options {
                let sid = id(v, np);
                let better = match &states[sid] {
                    None => true,
                    Some(old) => !old.closed && nt < old.travel,
                };
                if better {
                    states[sid] = Some(State { travel: nt, clock, arrive, edge_cost: c, parent: state, visited, closed: false });
                    heap.push(Entry { travel: nt, state: sid });
                }
            }
        }
    }
    Err(Error::Unreachable)
}

fn rebuild(g: &TimeDependentGraph, query: &OtdsrQuery, states: &[Option<State>], last: usize, width: usize) -> Route {
    let mut chain = Vec::new();
    let mut i = last;
    while i != usize::MAX {
        let st = states[i].unwrap();
        chain.push(((i / width) as VertexId, st));
        i = st.parent;
    }
    chain.reverse();
    let mut legs = Vec::new();
    let mut pois = Vec::new();
    let mut path = vec![chain[0].0];
    let mut travel = 0.0;
    let mut depart = query.depart;
    if chain[0].1.visited {
        pois.push(chain[0].0);
        legs.push(Leg { path: std::mem::replace(&mut path, vec![chain[0].0]), travel: 0.0, depart, arrive: query.depart });
        depart = chain[0].1.clock;
    }
    for &(v, st) in &chain[1..] {
        path.push(v);
        travel += st.edge_cost;
        if st.visited {
            pois.push(v);
            legs.push(Leg { path: std::mem::replace(&mut path, vec![v]), travel, depart, arrive: st.arrive });
            travel = 0.0;
            depart = st.clock;
        }
    }
    let end = chain.last().unwrap().1;
    legs.push(Leg { path, travel, depart, arrive: end.arrive });
    Route::from_legs(g, query, pois, legs)
}

/// Tries every choice of one POI per sequence slot, chaining exact
/// time-dependent legs with dwell between them, and keeps the fastest.
///
/// POIs act as free waypoints here, so this matches the forced-visit
/// semantics only when POIs sit on dead-end spurs.
pub fn enumerate_combinations(g: &TimeDependentGraph, query: &OtdsrQuery) -> Result<Route> {
    query.validate(g)?;
    let m = query.len();
    let mut combos: usize = 1;
    for &c in &query.sequence {
        combos = combos.saturating_mul(g.category(c).members.len());
    }
    if combos > MAX_COMBINATIONS {
        return Err(Error::BudgetExceeded(format!("{combos} POI combinations")));
    }
    if m == 0 {
        let leg = shortest_path(g, query.source, query.depart, query.destination, None)?;
        return Ok(Route::from_legs(g, query, vec![], vec![leg]));
    }
    let first = one_to_all(g, query.source, query.depart)?;
    let per_first = g
        .category(query.sequence[0])
        .members
        .par_iter()
        .filter_map(|&p| {
            let a = first[p as usize]?;
            let clock = a.clock.advance(query.dwell_at(g, 0), g.period());
            let mut choice = vec![p];
            explore(g, query, 1, p, clock, a.travel, &mut choice).transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    // first minimum in member order, for determinism
    let mut best: Option<(f64, Vec<VertexId>)> = None;
    for cand in per_first {
        if best.as_ref().map_or(true, |b| cand.0 < b.0) {
            best = Some(cand);
        }
    }
    let (_, choice) = best.ok_or(Error::Unreachable)?;
    chain_route(g, query, choice)
}

/// Best `(travel, full choice)` below a prefix ending at `at` with `clock`.
fn explore(
    g: &TimeDependentGraph,
    query: &OtdsrQuery,
    slot: usize,
    at: VertexId,
    clock: Clock,
    travel: f64,
    choice: &mut Vec<VertexId>,
) -> Result<Option<(f64, Vec<VertexId>)>> {
    let arrivals = one_to_all(g, at, clock)?;
    if slot == query.len() {
        return Ok(arrivals[query.destination as usize].map(|a| (travel + a.travel, choice.clone())));
    }
    let mut best: Option<(f64, Vec<VertexId>)> = None;
    for &p in &g.category(query.sequence[slot]).members {
        let Some(a) = arrivals[p as usize] else { continue };
        let next_clock = a.clock.advance(query.dwell_at(g, slot), g.period());
        choice.push(p);
        let sub = explore(g, query, slot + 1, p, next_clock, travel + a.travel, choice)?;
        choice.pop();
        if let Some(s) = sub {
            if best.as_ref().map_or(true, |b| s.0 < b.0) {
                best = Some(s);
            }
        }
    }
    Ok(best)
}

fn chain_route(g: &TimeDependentGraph, query: &OtdsrQuery, choice: Vec<VertexId>) -> Result<Route> {
    let mut legs = Vec::with_capacity(choice.len() + 1);
    let mut at = query.source;
    let mut clock = query.depart;
    for (i, &p) in choice.iter().enumerate() {
        let leg = shortest_path(g, at, clock, p, None)?;
        clock = leg.arrive.advance(query.dwell_at(g, i), g.period());
        at = p;
        legs.push(leg);
    }
    legs.push(shortest_path(g, at, clock, query.destination, None)?);
    Ok(Route::from_legs(g, query, choice, legs))
}

/// Repeatedly goes to the time-dependent nearest POI of the next category,
/// then to the destination. Not optimal in general.
pub fn greedy_route(g: &TimeDependentGraph, table: &LowerBoundTable, query: &OtdsrQuery) -> Result<Route> {
    table.check(g)?;
    query.validate(g)?;
    let mut legs = Vec::new();
    let mut pois = Vec::new();
    let mut at = query.source;
    let mut clock = query.depart;
    for (i, &c) in query.sequence.iter().enumerate() {
        let mut it = NnIterator::open(g, table, at, clock, c)?;
        let (p, leg) = it.next_neighbor().ok_or(Error::Unreachable)?;
        clock = leg.arrive.advance(query.dwell_at(g, i), g.period());
        at = p;
        pois.push(p);
        legs.push(leg);
    }
    let bounds = destination_bounds(g, query.destination)?;
    legs.push(shortest_path(g, at, clock, query.destination, Some(&bounds))?);
    Ok(Route::from_legs(g, query, pois, legs))
}
