//! Small hand-built networks with known answers, used by tests, docs and the
//! CLI demo data.

use crate::clock::DAY;
use crate::error::Result;
use crate::graph::{GraphBuilder, TimeDependentGraph};
use crate::ttf::TravelTimeFunction;

fn pl(points: &[(f64, f64)]) -> TravelTimeFunction {
    TravelTimeFunction::new(points.to_vec(), DAY).expect("fixture functions are FIFO")
}

fn add(b: &mut GraphBuilder, from: &str, to: &str, f: TravelTimeFunction) {
    let (u, v) = (b.vertex(from).unwrap(), b.vertex(to).unwrap());
    b.add_edge(u, v, f).expect("fixture edge");
}

/// Evening errand network: two banks (`C_B`, 15 min), two restaurants
/// (`C_R`, 60 min) and a grocery (`C_G`, 10 min) between `s` and `d`.
///
/// Departing `s` at 18:00 for `[C_B, C_R]`, the nearest-first route
/// `s b1 v2 r2 v2 v1 d` takes 6 + 13 + 19 = 38 minutes, while
/// `s v1 b2 r1 d` takes 21. The rush-hour bumps on `s->b1`, `s->v1` and
/// `v1->b2` are what make `b1` look closer at 18:00.
pub fn worked_example() -> TimeDependentGraph {
    let mut b = GraphBuilder::new(DAY);
    for n in ["s", "v1", "v2", "b1", "b2", "r1", "r2", "g1", "d"] {
        b.add_vertex(n).unwrap();
    }
    let bank = b.add_category("C_B", 15.0).unwrap();
    let rest = b.add_category("C_R", 60.0).unwrap();
    let groc = b.add_category("C_G", 10.0).unwrap();
    for (n, c) in [("b1", bank), ("b2", bank), ("r1", rest), ("r2", rest), ("g1", groc)] {
        let v = b.vertex(n).unwrap();
        b.set_category(v, c).unwrap();
    }
    add(&mut b, "s", "b1", pl(&[(0.0, 5.0), (1020.0, 5.0), (1080.0, 6.0), (1200.0, 5.0)]));
    add(&mut b, "s", "v1", pl(&[(0.0, 2.0), (1020.0, 2.0), (1080.0, 4.0), (1200.0, 2.0)]));
    add(&mut b, "v1", "b2", pl(&[(0.0, 1.0), (1020.0, 1.0), (1080.0, 3.0), (1140.0, 3.0), (1200.0, 1.0)]));
    let c = TravelTimeFunction::constant;
    add(&mut b, "b1", "v2", c(6.0));
    add(&mut b, "v2", "r2", c(7.0));
    add(&mut b, "r2", "v2", c(7.0));
    add(&mut b, "v2", "v1", c(6.0));
    add(&mut b, "v1", "d", c(6.0));
    add(&mut b, "b2", "r1", c(7.0));
    add(&mut b, "r1", "d", c(7.0));
    add(&mut b, "v2", "g1", c(2.0));
    add(&mut b, "g1", "v2", c(2.0));
    b.build().expect("worked example is valid")
}

/// Static three-bank, two-restaurant network with zero dwell. `d` is a sink
/// reached at no cost from either restaurant, so the best route for
/// `[C_B, C_R]` from `s` is `s b3 r2` with cost 9.
pub fn bank_restaurant_static() -> TimeDependentGraph {
    let mut b = GraphBuilder::new(DAY);
    for n in ["s", "b1", "b2", "b3", "r1", "r2", "d"] {
        b.add_vertex(n).unwrap();
    }
    let bank = b.add_category("C_B", 0.0).unwrap();
    let rest = b.add_category("C_R", 0.0).unwrap();
    for (n, c) in [("b1", bank), ("b2", bank), ("b3", bank), ("r1", rest), ("r2", rest)] {
        let v = b.vertex(n).unwrap();
        b.set_category(v, c).unwrap();
    }
    for (u, v, w) in [
        ("s", "b1", 4.0),
        ("s", "b2", 5.0),
        ("s", "b3", 7.0),
        ("b1", "r2", 9.0),
        ("b1", "r1", 12.0),
        ("b2", "r1", 7.0),
        ("b2", "r2", 10.0),
        ("b3", "r2", 2.0),
        ("b3", "r1", 6.0),
        ("r1", "d", 0.0),
        ("r2", "d", 0.0),
    ] {
        add(&mut b, u, v, TravelTimeFunction::constant(w));
    }
    b.build().expect("static fixture is valid")
}

/// `s -> p0 -> p1 -> ... -> p{m-1} -> d` with one POI per category `K0..`,
/// unit edge costs and the given dwell.
pub fn chain(m: usize, dwell: f64) -> Result<TimeDependentGraph> {
    let mut b = GraphBuilder::new(DAY);
    let mut names = vec!["s".to_string()];
    names.extend((0..m).map(|i| format!("p{i}")));
    names.push("d".into());
    for n in &names {
        b.add_vertex(n)?;
    }
    for i in 0..m {
        let c = b.add_category(&format!("K{i}"), dwell)?;
        b.set_category(i as u32 + 1, c)?;
    }
    for i in 0..names.len() - 1 {
        b.add_edge(i as u32, i as u32 + 1, TravelTimeFunction::constant(1.0))?;
    }
    b.build()
}
