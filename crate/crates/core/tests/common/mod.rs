#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqroute::netgen::{spur_network, SpurParams};
use seqroute::{Clock, OtdsrQuery, TimeDependentGraph, DAY};

/// A random spur-POI network with one query on it.
pub struct Instance {
    pub seed: u64,
    pub graph: TimeDependentGraph,
    pub query: OtdsrQuery,
}

/// Instance `i` of the verification suite: 36-400 grid vertices, sequence
/// length `i % 4`, distinct categories in random order, 1-5 POIs each,
/// dwell 0-60 min, random endpoints among grid vertices and a random clock.
pub fn suite_instance(i: u64) -> Instance {
    let seed = 0xC0FFEE + i;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = (i % 4) as usize;
    let side = rng.gen_range(6..=20);
    let params = SpurParams {
        grid_vertices: side * side,
        num_categories: m.max(1) + rng.gen_range(0..=1),
        pois_per_category: rng.gen_range(1..=5),
        max_dwell: 60.0,
        seed,
    };
    let graph = spur_network(&params).unwrap();
    let n = params.grid_vertices as u32;
    let s = rng.gen_range(0..n);
    let d = rng.gen_range(0..n);
    let mut cats: Vec<u32> = (0..params.num_categories as u32).collect();
    rand::seq::SliceRandom::shuffle(&mut cats[..], &mut rng);
    cats.truncate(m);
    let depart = Clock::new(rng.gen_range(0.0..DAY), DAY);
    Instance { seed, graph, query: OtdsrQuery::new(s, d, depart, cats) }
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}
