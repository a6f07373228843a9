//! Optimal time-dependent sequenced route queries on FIFO road networks.
//!
//! Given a graph whose edge costs vary with the time of day, a source, a
//! destination, a departure clock and an ordered list of POI categories,
//! find the fastest route that visits one POI of each category in order.
//!
//! * [`osr`] answers queries with an A* search over `(vertex, progress)`
//!   labels guided by precomputed lower bounds ([`bounds`]).
//! * [`pne`] is the progressive-neighbour-exploration baseline built on
//!   resumable time-dependent nearest-neighbour searches ([`tdsp`]).
//! * [`oracle`] holds brute-force references and the greedy baseline.
//! * [`netgen`] and [`bench`] generate networks and run parameter sweeps.

pub mod bench;
pub mod bounds;
pub mod clock;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod graph;
pub mod netgen;
pub mod oracle;
pub mod osr;
pub mod pne;
pub mod route;
pub mod tdsp;
pub mod ttf;

pub use bounds::{build_category_bounds, destination_bounds, DestinationBounds, LowerBoundTable};
pub use clock::{Clock, DAY, EPS};
pub use error::{Error, Result};
pub use graph::{CategoryId, GraphBuilder, StaticGraph, TimeDependentGraph, VertexId};
pub use osr::{td_osr_query, td_osr_run, OsrOptions, SearchBudget};
pub use pne::{pne_trace, td_pne_query};
pub use route::{OtdsrQuery, QueryReport, Route, SearchStats};
pub use tdsp::Leg;
pub use ttf::TravelTimeFunction;
