mod common;

use proptest::prelude::*;

use common::suite_instance;
use seqroute::format::{parse_tdg, write_tdg};
use seqroute::netgen::{generate_grid, GridParams};
use seqroute::oracle::{product_dijkstra, VisitSemantics};
use seqroute::{build_category_bounds, pne_trace, Clock, StaticGraph, TravelTimeFunction, DAY};

/// Random breakpoints on a quarter-minute lattice, lifted to FIFO.
fn ttf() -> impl Strategy<Value = TravelTimeFunction> {
    prop::collection::btree_map(0u32..(DAY as u32 * 4), 0.0f64..120.0, 1..8).prop_map(|pts| {
        let pts = pts.into_iter().map(|(q, c)| (q as f64 / 4.0, c)).collect();
        let mut f = TravelTimeFunction::new_unchecked_fifo(pts, DAY).unwrap();
        f.repair_fifo();
        f
    })
}

proptest! {
    #[test]
    fn repaired_functions_are_fifo(f in ttf()) {
        prop_assert!(f.validate_fifo().is_ok());
    }

    #[test]
    fn arrival_is_monotone(f in ttf(), t1 in 0.0..DAY, dt in 0.0..2.0 * DAY) {
        let t2 = t1 + dt;
        prop_assert!(t1 + f.eval_at(t1) <= t2 + f.eval_at(t2) + 1e-6);
    }

    #[test]
    fn eval_is_continuous(f in ttf(), t in 0.0..DAY) {
        // slopes are bounded, so a tiny step moves the cost only a little
        let h = 1e-6;
        let step = (f.eval_at(t + h) - f.eval_at(t)).abs();
        prop_assert!(step <= f.max_abs_slope() * h + 1e-9, "jump {step} at {t}");
        // and the wrap closes: T is the same instant as 0
        prop_assert!((f.eval_at(t + DAY) - f.eval_at(t)).abs() <= 1e-9);
    }

    #[test]
    fn min_cost_bounds_every_evaluation(f in ttf(), t in 0.0..DAY) {
        let c = f.eval(Clock::new(t, DAY));
        prop_assert!(f.min_cost() <= c + 1e-12 && c <= f.max_cost() + 1e-12);
    }

    #[test]
    fn pointwise_min_is_below_both(f in ttf(), g in ttf(), t in 0.0..DAY) {
        let m = f.pointwise_min(&g);
        prop_assert!((m.eval_at(t) - f.eval_at(t).min(g.eval_at(t))).abs() <= 1e-9);
    }

    #[test]
    fn reverse_is_an_involution(edges in prop::collection::vec((0u32..12, 0u32..12, 0.0f64..50.0), 0..40)) {
        let mut seen = std::collections::HashSet::new();
        let edges: Vec<_> = edges.into_iter().filter(|&(u, v, _)| u != v && seen.insert((u, v))).collect();
        let g = StaticGraph::from_edges(12, &edges).unwrap();
        let back = g.reverse().reverse();
        let mut a: Vec<_> = g.edges().collect();
        let mut b: Vec<_> = back.edges().collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn text_format_round_trips(i in 0u64..500) {
        let g = suite_instance(i).graph;
        let text = write_tdg(&g);
        let (back, report) = parse_tdg(&text, "roundtrip").unwrap();
        prop_assert!(report.is_clean());
        prop_assert_eq!(back.fingerprint(), g.fingerprint());
        prop_assert_eq!(write_tdg(&back), text);
    }

    #[test]
    fn pne_pops_in_order_and_bounds_are_sound(i in 0u64..500) {
        let inst = suite_instance(i);
        let (g, q) = (&inst.graph, &inst.query);
        let t = build_category_bounds(g);
        let trace = pne_trace(g, &t, q).unwrap();
        prop_assert!(trace.popped.windows(2).all(|w| w[0] <= w[1]), "pops {:?}", trace.popped);
        prop_assert!(trace.incumbents.windows(2).all(|w| w[1] < w[0]));
        let best = product_dijkstra(g, q, VisitSemantics::default()).unwrap().total_travel;
        // every incumbent is a real route, so never below the optimum
        for &ub in &trace.incumbents {
            prop_assert!(ub >= best - 1e-9);
        }
        if !q.is_empty() {
            prop_assert!((trace.incumbents.last().unwrap() - best).abs() <= 1e-9);
        }
    }

    #[test]
    fn grid_generation_is_deterministic(seed in 0u64..1000, cats in 1usize..6) {
        let p = GridParams { vertices: 400, poi_density: 0.05, num_categories: cats, seed, ..Default::default() };
        let a = generate_grid(&p).unwrap();
        let b = generate_grid(&p).unwrap();
        prop_assert_eq!(a.fingerprint(), b.fingerprint());
        // categories are dealt evenly
        let sizes: Vec<usize> = a.categories().iter().map(|c| c.members.len()).collect();
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1, "sizes {sizes:?}");
        prop_assert_eq!(sizes.iter().sum::<usize>(), 20);
    }
}
