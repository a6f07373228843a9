//! Queries, answers and search instrumentation shared by every algorithm.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::clock::{Clock, EPS};
use crate::error::{Error, Result};
use crate::graph::{CategoryId, TimeDependentGraph, VertexId};
use crate::tdsp::{simulate_path, Leg};

/// Route from `source` to `destination` departing at `depart`, visiting one
/// POI of each category in `sequence`, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct OtdsrQuery {
    pub source: VertexId,
    pub destination: VertexId,
    pub depart: Clock,
    pub sequence: Vec<CategoryId>,
    pub dwell_override: BTreeMap<CategoryId, f64>,
}

impl OtdsrQuery {
    pub fn new(source: VertexId, destination: VertexId, depart: Clock, sequence: Vec<CategoryId>) -> Self {
        Self { source, destination, depart, sequence, dwell_override: BTreeMap::new() }
    }

    /// Resolves vertex and category names against `g`.
    pub fn from_names(g: &TimeDependentGraph, source: &str, destination: &str, depart: Clock, sequence: &[&str]) -> Result<Self> {
        let seq = sequence.iter().map(|c| g.category_id(c)).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(g.vertex(source)?, g.vertex(destination)?, depart, seq))
    }

    pub fn with_dwell(mut self, c: CategoryId, minutes: f64) -> Self {
        self.dwell_override.insert(c, minutes);
        self
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn dwell(&self, g: &TimeDependentGraph, c: CategoryId) -> f64 {
        self.dwell_override.get(&c).copied().unwrap_or_else(|| g.dwell(c))
    }

    /// Dwell at the POI filling slot `i` of the sequence.
    pub fn dwell_at(&self, g: &TimeDependentGraph, i: usize) -> f64 {
        self.dwell(g, self.sequence[i])
    }

    pub fn validate(&self, g: &TimeDependentGraph) -> Result<()> {
        g.check_vertex(self.source)?;
        g.check_vertex(self.destination)?;
        for &c in self.sequence.iter().chain(self.dwell_override.keys()) {
            if c as usize >= g.num_categories() {
                return Err(Error::UnknownCategory(c.to_string()));
            }
        }
        for (&c, &m) in &self.dwell_override {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::InvalidParameter(format!("dwell {m} for category {c}")));
            }
        }
        Ok(())
    }
}

/// Counters collected by a search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SearchStats {
    /// Labels popped and expanded (for TD-PNE: settled vertices of all inner
    /// searches plus heap pops).
    pub expansions: u64,
    pub max_expansions_per_vertex: u64,
    pub enqueued: u64,
    pub updated: u64,
    pub elapsed_ms: f64,
}

/// An answer to an [`OtdsrQuery`].
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub poi_choices: Vec<VertexId>,
    pub full_path: Vec<VertexId>,
    /// One leg per sequence slot plus the final leg to the destination.
    pub legs: Vec<Leg>,
    /// Travel time excluding dwell.
    pub total_travel: f64,
    /// Travel time plus every dwell.
    pub total_elapsed: f64,
    pub arrive: Clock,
}

impl Route {
    /// Assembles a route from consecutive legs; `legs.len()` must be
    /// `poi_choices.len() + 1`.
    pub fn from_legs(g: &TimeDependentGraph, query: &OtdsrQuery, poi_choices: Vec<VertexId>, legs: Vec<Leg>) -> Self {
        assert_eq!(legs.len(), poi_choices.len() + 1, "one leg per POI plus the final leg");
        let mut full_path = vec![legs[0].source()];
        for leg in &legs {
            full_path.extend_from_slice(&leg.path[1..]);
        }
        let total_travel: f64 = legs.iter().map(|l| l.travel).sum();
        let dwell: f64 = (0..query.len()).map(|i| query.dwell_at(g, i)).sum();
        let arrive = legs.last().expect("at least one leg").arrive;
        Route { poi_choices, full_path, legs, total_travel, total_elapsed: total_travel + dwell, arrive }
    }

    /// Replays the route edge by edge from the query clock and checks every
    /// stored value: leg travel and clocks, POI categories and order, dwell.
    pub fn verify(&self, g: &TimeDependentGraph, query: &OtdsrQuery) -> std::result::Result<(), String> {
        let m = query.len();
        if self.poi_choices.len() != m || self.legs.len() != m + 1 {
            return Err(format!("expected {m} POIs and {} legs", m + 1));
        }
        let mut at = query.source;
        let mut clock = query.depart;
        let mut total = 0.0;
        for (i, leg) in self.legs.iter().enumerate() {
            if leg.source() != at {
                return Err(format!("leg {i} starts at {} instead of {}", g.name(leg.source()), g.name(at)));
            }
            if !leg.depart.approx_eq(clock, g.period()) {
                return Err(format!("leg {i} departs at {} instead of {}", leg.depart, clock));
            }
            let (travel, arrive) = simulate_path(g, &leg.path, clock).map_err(|e| format!("leg {i}: {e}"))?;
            if (travel - leg.travel).abs() > EPS {
                return Err(format!("leg {i} travel {} but replay gives {travel}", leg.travel));
            }
            if !arrive.approx_eq(leg.arrive, g.period()) {
                return Err(format!("leg {i} arrives {} but replay gives {arrive}", leg.arrive));
            }
            total += travel;
            at = leg.target();
            clock = arrive;
            if i < m {
                if at != self.poi_choices[i] {
                    return Err(format!("leg {i} ends at {} not POI {}", g.name(at), g.name(self.poi_choices[i])));
                }
                if g.category_of(at) != Some(query.sequence[i]) {
                    return Err(format!("POI {} is not in category {}", g.name(at), g.category(query.sequence[i]).name));
                }
                clock = clock.advance(query.dwell_at(g, i), g.period());
            }
        }
        if at != query.destination {
            return Err(format!("route ends at {} not {}", g.name(at), g.name(query.destination)));
        }
        if (total - self.total_travel).abs() > EPS {
            return Err(format!("total travel {} but replay gives {total}", self.total_travel));
        }
        if !clock.approx_eq(self.arrive, g.period()) {
            return Err(format!("arrival {} but replay gives {clock}", self.arrive));
        }
        Ok(())
    }
}

/// Machine-readable query answer.
#[derive(Debug, Clone, Serialize)]
pub struct QueryReport {
    pub algorithm: String,
    pub source: String,
    pub destination: String,
    pub depart: String,
    pub sequence: Vec<String>,
    pub total_travel: f64,
    pub total_elapsed: f64,
    pub arrive: String,
    pub path: Vec<String>,
    pub pois: Vec<PoiReport>,
    pub legs: Vec<LegReport>,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoiReport {
    pub category: String,
    pub vertex: String,
    pub dwell: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LegReport {
    pub from: String,
    pub to: String,
    pub depart: String,
    pub arrive: String,
    pub travel: f64,
    pub path: Vec<String>,
}

impl QueryReport {
    pub fn new(g: &TimeDependentGraph, query: &OtdsrQuery, algorithm: &str, route: &Route, stats: SearchStats) -> Self {
        let name = |v: VertexId| g.name(v).to_string();
        QueryReport {
            algorithm: algorithm.to_string(),
            source: name(query.source),
            destination: name(query.destination),
            depart: query.depart.to_string(),
            sequence: query.sequence.iter().map(|&c| g.category(c).name.clone()).collect(),
            total_travel: route.total_travel,
            total_elapsed: route.total_elapsed,
            arrive: route.arrive.to_string(),
            path: route.full_path.iter().map(|&v| name(v)).collect(),
            pois: route
                .poi_choices
                .iter()
                .enumerate()
                .map(|(i, &p)| PoiReport {
                    category: g.category(query.sequence[i]).name.clone(),
                    vertex: name(p),
                    dwell: query.dwell_at(g, i),
                })
                .collect(),
            legs: route
                .legs
                .iter()
                .map(|l| LegReport {
                    from: name(l.source()),
                    to: name(l.target()),
                    depart: l.depart.to_string(),
                    arrive: l.arrive.to_string(),
                    travel: l.travel,
                    path: l.path.iter().map(|&v| name(v)).collect(),
                })
                .collect(),
            stats,
        }
    }

    /// Line-oriented text rendering; see the README for the schema.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "algorithm {}", self.algorithm).unwrap();
        writeln!(out, "query {} -> {} depart {} sequence [{}]", self.source, self.destination, self.depart, self.sequence.join(",")).unwrap();
        writeln!(out, "total_travel {}", self.total_travel).unwrap();
        writeln!(out, "total_elapsed {}", self.total_elapsed).unwrap();
        writeln!(out, "arrive {}", self.arrive).unwrap();
        writeln!(out, "path {}", self.path.join(" ")).unwrap();
        for (i, p) in self.pois.iter().enumerate() {
            writeln!(out, "poi {i} {} {} dwell {}", p.category, p.vertex, p.dwell).unwrap();
        }
        for (i, l) in self.legs.iter().enumerate() {
            writeln!(
                out,
                "leg {i} {} -> {} depart {} arrive {} travel {} via {}",
                l.from,
                l.to,
                l.depart,
                l.arrive,
                l.travel,
                l.path.join(" ")
            )
            .unwrap();
        }
        let s = &self.stats;
        writeln!(
            out,
            "stats expansions {} max_expansions_per_vertex {} enqueued {} updated {} elapsed_ms {:.3}",
            s.expansions, s.max_expansions_per_vertex, s.enqueued, s.updated, s.elapsed_ms
        )
        .unwrap();
        out
    }
}
