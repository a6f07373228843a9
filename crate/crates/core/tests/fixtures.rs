use seqroute::fixtures::{bank_restaurant_static, chain, worked_example};
use seqroute::oracle::{enumerate_combinations, greedy_route, product_dijkstra, VisitSemantics};
use seqroute::pne::{pne_trace, td_pne_query};
use seqroute::tdsp::{shortest_path, NnIterator};
use seqroute::{build_category_bounds, destination_bounds, td_osr_query, Clock, OtdsrQuery, TimeDependentGraph, DAY};

fn names(g: &TimeDependentGraph, vs: &[u32]) -> Vec<String> {
    vs.iter().map(|&v| g.name(v).to_string()).collect()
}

fn evening_query(g: &TimeDependentGraph) -> OtdsrQuery {
    OtdsrQuery::from_names(g, "s", "d", Clock::parse("18:00", DAY).unwrap(), &["C_B", "C_R"]).unwrap()
}

#[test]
fn greedy_takes_38_minutes() {
    let g = worked_example();
    let t = build_category_bounds(&g);
    let q = evening_query(&g);
    let r = greedy_route(&g, &t, &q).unwrap();
    assert_eq!(names(&g, &r.full_path), ["s", "b1", "v2", "r2", "v2", "v1", "d"]);
    assert_eq!(r.legs.iter().map(|l| l.travel).collect::<Vec<_>>(), [6.0, 13.0, 19.0]);
    assert_eq!(r.total_travel, 38.0);
    r.verify(&g, &q).unwrap();
}

#[test]
fn optimal_takes_21_minutes() {
    let g = worked_example();
    let t = build_category_bounds(&g);
    let q = evening_query(&g);
    let (osr, _) = td_osr_query(&g, &t, &q).unwrap();
    let (pne, _) = td_pne_query(&g, &t, &q).unwrap();
    let oracle = product_dijkstra(&g, &q, VisitSemantics::default()).unwrap();
    let combos = enumerate_combinations(&g, &q).unwrap();
    for r in [&osr, &pne, &oracle, &combos] {
        assert_eq!(names(&g, &r.full_path), ["s", "v1", "b2", "r1", "d"]);
        assert_eq!(r.total_travel, 21.0);
        r.verify(&g, &q).unwrap();
    }
}

#[test]
fn worked_example_legs_and_bounds() {
    let g = worked_example();
    let t = build_category_bounds(&g);
    let v = |n| g.vertex(n).unwrap();
    let at = |s: &str| Clock::parse(s, DAY).unwrap();
    let mut it = NnIterator::open(&g, &t, v("b1"), at("18:21"), g.category_id("C_R").unwrap()).unwrap();
    let (p, leg) = it.next_neighbor().unwrap();
    assert_eq!((g.name(p), leg.travel), ("r2", 13.0));
    let leg = shortest_path(&g, v("r2"), at("19:34"), v("d"), None).unwrap();
    assert_eq!(leg.travel, 19.0);
    assert_eq!(names(&g, &leg.path), ["r2", "v2", "v1", "d"]);
    assert_eq!(t.get(v("s"), g.category_id("C_B").unwrap()), 3.0);
    assert_eq!(t.get(v("s"), g.category_id("C_R").unwrap()), 10.0);
    assert_eq!(destination_bounds(&g, v("d")).unwrap().get(v("s")), 8.0);
}

#[test]
fn bank_restaurant_trace() {
    let g = bank_restaurant_static();
    let t = build_category_bounds(&g);
    let q = OtdsrQuery::from_names(&g, "s", "d", Clock::new(0.0, DAY), &["C_B", "C_R"]).unwrap();
    let trace = pne_trace(&g, &t, &q).unwrap();
    let rendered: Vec<Vec<(Vec<String>, f64)>> = trace
        .snapshots
        .iter()
        .map(|s| s.iter().map(|e| (names(&g, &e.pois), e.travel)).collect())
        .collect();
    let e = |p: &[&str], c: f64| (p.iter().map(|s| s.to_string()).collect::<Vec<_>>(), c);
    assert_eq!(
        rendered,
        vec![
            vec![e(&["b1"], 4.0)],
            vec![e(&["b2"], 5.0), e(&["b1", "r2"], 13.0)],
            vec![e(&["b3"], 7.0), e(&["b2", "r1"], 12.0)],
            vec![e(&["b3", "r2"], 9.0)],
        ]
    );
    let (r, _) = td_pne_query(&g, &t, &q).unwrap();
    assert_eq!(names(&g, &r.full_path), ["s", "b3", "r2", "d"]);
    assert_eq!(r.total_travel, 9.0);
    assert_eq!(enumerate_combinations(&g, &q).unwrap().total_travel, 9.0);
    assert_eq!(td_osr_query(&g, &t, &q).unwrap().0.total_travel, 9.0);
}

#[test]
fn chain_trace_has_m_plus_one_snapshots() {
    for m in 1..5 {
        let g = chain(m, 5.0).unwrap();
        let t = build_category_bounds(&g);
        let seq: Vec<u32> = (0..m as u32).collect();
        let q = OtdsrQuery::new(0, g.vertex("d").unwrap(), Clock::new(100.0, DAY), seq);
        let trace = pne_trace(&g, &t, &q).unwrap();
        assert_eq!(trace.snapshots.len(), m + 1, "m = {m}");
        assert!(trace.snapshots.last().unwrap().is_empty());
    }
    let g = chain(0, 0.0).unwrap();
    let t = build_category_bounds(&g);
    let q = OtdsrQuery::new(0, 1, Clock::new(0.0, DAY), vec![]);
    assert!(pne_trace(&g, &t, &q).unwrap().snapshots.is_empty());
}
