//! TD-PNE: progressive neighbour exploration with time-dependent NN searches.
//!
//! The heap holds partial routes (chosen POI prefixes) keyed by travel time.
//! Popping a prefix generates its extension (nearest POI of the next
//! category from its last POI, at its departure clock) and its sibling (the
//! next-nearest POI for the same parent prefix). Once a prefix covers the
//! whole sequence its destination leg is computed right away; the fastest
//! such complete route is the incumbent and prefixes slower than it are
//! dropped. The search stops when the cheapest prefix is no faster than the
//! incumbent.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use crate::bounds::{destination_bounds, DestinationBounds, LowerBoundTable};
use crate::clock::Clock;
use crate::error::{Error, Result};
use crate::graph::{CategoryId, TimeDependentGraph, VertexId};
use crate::osr::SearchBudget;
use crate::route::{OtdsrQuery, Route, SearchStats};
use crate::tdsp::{shortest_path_counted, Leg, NnIterator};

#[derive(Debug, Clone)]
struct Partial {
    pois: Vec<VertexId>,
    legs: Vec<Leg>,
    /// Travel of the parent prefix (everything but the last POI).
    base_travel: f64,
    travel: f64,
    /// Departure clock after dwelling at the last POI.
    clock: Clock,
    /// Iterator that produced the last POI, and its rank there.
    iter: usize,
    rank: usize,
}

impl Partial {
    fn order(&self, other: &Self) -> Ordering {
        self.travel
            .total_cmp(&other.travel)
            .then_with(|| self.pois.len().cmp(&other.pois.len()))
            .then_with(|| self.pois.cmp(&other.pois))
    }
}

struct HeapItem(Partial);

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.order(&self.0)
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One heap entry as shown in a trace: chosen POIs and travel so far.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub pois: Vec<VertexId>,
    pub travel: f64,
}

/// Heap contents after seeding and after every pop-and-generate round that
/// did not end the search, plus the travel of every popped entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PneTrace {
    pub snapshots: Vec<Vec<TraceEntry>>,
    pub popped: Vec<f64>,
    /// Travel of each new incumbent, in discovery order.
    pub incumbents: Vec<f64>,
}

impl PneTrace {
    /// One line per snapshot: `(p1,p2:travel) (q1:travel) ...`.
    pub fn render(&self, g: &TimeDependentGraph) -> String {
        let mut out = String::new();
        for (i, snap) in self.snapshots.iter().enumerate() {
            let entries: Vec<String> = snap
                .iter()
                .map(|e| {
                    let names: Vec<&str> = e.pois.iter().map(|&p| g.name(p)).collect();
                    format!("({}:{})", names.join(","), e.travel)
                })
                .collect();
            out.push_str(&format!("{} {}\n", i + 1, entries.join(" ")));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct PneAnswer {
    pub route: Route,
    pub stats: SearchStats,
    pub trace: PneTrace,
}

pub fn td_pne_query(g: &TimeDependentGraph, table: &LowerBoundTable, query: &OtdsrQuery) -> Result<(Route, SearchStats)> {
    let a = td_pne_run(g, table, None, query, &SearchBudget::default())?;
    Ok((a.route, a.stats))
}

/// Heap snapshots of a TD-PNE run; empty for an empty sequence.
pub fn pne_trace(g: &TimeDependentGraph, table: &LowerBoundTable, query: &OtdsrQuery) -> Result<PneTrace> {
    td_pne_run(g, table, None, query, &SearchBudget::default()).map(|a| a.trace)
}

struct Run<'a> {
    g: &'a TimeDependentGraph,
    table: &'a LowerBoundTable,
    query: &'a OtdsrQuery,
    bounds: &'a DestinationBounds,
    iters: Vec<NnIterator<'a>>,
    cache: HashMap<(VertexId, u64, CategoryId), usize>,
    inner_settled: u64,
}

impl<'a> Run<'a> {
    fn iterator(&mut self, at: VertexId, clock: Clock, c: CategoryId) -> Result<usize> {
        let key = (at, clock.minutes().to_bits(), c);
        if let Some(&i) = self.cache.get(&key) {
            return Ok(i);
        }
        let it = NnIterator::open(self.g, self.table, at, clock, c)?;
        self.iters.push(it);
        self.cache.insert(key, self.iters.len() - 1);
        Ok(self.iters.len() - 1)
    }

    /// Builds the child of a parent prefix from rank `rank` of iterator `iter`.
    fn child(&mut self, parent_pois: &[VertexId], parent_legs: &[Leg], base_travel: f64, iter: usize, rank: usize) -> Option<Partial> {
        let it = &mut self.iters[iter];
        let before = it.settled();
        let found = it.neighbor(rank).cloned();
        self.inner_settled += (it.settled() - before) as u64;
        let (p, leg) = found?;
        let slot = parent_pois.len();
        let clock = leg.arrive.advance(self.query.dwell_at(self.g, slot), self.g.period());
        let mut pois = parent_pois.to_vec();
        pois.push(p);
        let mut legs = parent_legs.to_vec();
        let travel = base_travel + leg.travel;
        legs.push(leg);
        Some(Partial { pois, legs, base_travel, travel, clock, iter, rank })
    }

    fn destination_leg(&mut self, e: &Partial) -> Result<Option<Leg>> {
        let at = *e.pois.last().expect("complete prefixes are non-empty");
        match shortest_path_counted(self.g, at, e.clock, self.query.destination, Some(self.bounds)) {
            Ok(r) => {
                self.inner_settled += r.settled as u64;
                Ok(Some(r.leg))
            }
            Err(Error::Unreachable) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

pub fn td_pne_run(
    g: &TimeDependentGraph,
    table: &LowerBoundTable,
    bounds: Option<&DestinationBounds>,
    query: &OtdsrQuery,
    budget: &SearchBudget,
) -> Result<PneAnswer> {
    let started = Instant::now();
    table.check(g)?;
    query.validate(g)?;
    let owned;
    let bounds = match bounds {
        Some(b) if b.target() == query.destination => b,
        Some(_) => return Err(Error::InvalidParameter("destination bounds for another vertex".into())),
        None => {
            owned = destination_bounds(g, query.destination)?;
            &owned
        }
    };
    let m = query.len();
    let mut stats = SearchStats::default();
    let mut trace = PneTrace::default();

    if m == 0 {
        let r = shortest_path_counted(g, query.source, query.depart, query.destination, Some(bounds))?;
        stats.expansions = r.settled as u64;
        stats.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
        let route = Route::from_legs(g, query, vec![], vec![r.leg]);
        return Ok(PneAnswer { route, stats, trace });
    }

    let mut run = Run {
        g,
        table,
        query,
        bounds,
        iters: Vec::new(),
        cache: HashMap::new(),
        inner_settled: 0,
    };
    let mut heap: BinaryHeap<HeapItem> = BinaryHeap::new();
    let mut incumbent: Option<(f64, Partial, Leg)> = None;

    // Pushes `e` unless it is slower than the incumbent; full prefixes get
    // their destination leg and may become the new incumbent.
    let offer = |e: Partial,
                     run: &mut Run,
                     heap: &mut BinaryHeap<HeapItem>,
                     incumbent: &mut Option<(f64, Partial, Leg)>,
                     stats: &mut SearchStats,
                     trace: &mut PneTrace|
     -> Result<()> {
        let ub = incumbent.as_ref().map_or(f64::INFINITY, |i| i.0);
        if e.travel > ub {
            return Ok(());
        }
        if e.pois.len() == m {
            if let Some(leg) = run.destination_leg(&e)? {
                let total = e.travel + leg.travel;
                if total < ub {
                    *incumbent = Some((total, e.clone(), leg));
                    trace.incumbents.push(total);
                    heap.retain(|x| x.0.travel <= total);
                }
            }
        }
        heap.push(HeapItem(e));
        stats.enqueued += 1;
        Ok(())
    };

    let first = run.iterator(query.source, query.depart, query.sequence[0])?;
    match run.child(&[], &[], 0.0, first, 0) {
        Some(e) => offer(e, &mut run, &mut heap, &mut incumbent, &mut stats, &mut trace)?,
        None => return Err(Error::Unreachable),
    }
    trace.snapshots.push(snapshot(&heap));

    while let Some(HeapItem(e)) = heap.pop() {
        stats.expansions += 1;
        budget.check(stats.expansions + run.inner_settled, started)?;
        trace.popped.push(e.travel);
        if let Some((ub, _, _)) = &incumbent {
            if e.travel >= *ub {
                break;
            }
        }
        let i = e.pois.len();
        if i < m {
            let last = *e.pois.last().unwrap();
            let it = run.iterator(last, e.clock, query.sequence[i])?;
            if let Some(ext) = run.child(&e.pois, &e.legs, e.travel, it, 0) {
                offer(ext, &mut run, &mut heap, &mut incumbent, &mut stats, &mut trace)?;
            }
        }
        if let Some(sib) = run.child(&e.pois[..i - 1], &e.legs[..i - 1], e.base_travel, e.iter, e.rank + 1) {
            offer(sib, &mut run, &mut heap, &mut incumbent, &mut stats, &mut trace)?;
        }
        trace.snapshots.push(snapshot(&heap));
    }

    let (_, e, leg) = incumbent.ok_or(Error::Unreachable)?;
    let mut legs = e.legs;
    legs.push(leg);
    let route = Route::from_legs(g, query, e.pois, legs);
    stats.expansions += run.inner_settled;
    stats.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(PneAnswer { route, stats, trace })
}

fn snapshot(heap: &BinaryHeap<HeapItem>) -> Vec<TraceEntry> {
    let mut items: Vec<&Partial> = heap.iter().map(|h| &h.0).collect();
    items.sort_by(|a, b| a.order(b));
    items
        .into_iter()
        .map(|p| TraceEntry { pois: p.pois.clone(), travel: p.travel })
        .collect()
}
