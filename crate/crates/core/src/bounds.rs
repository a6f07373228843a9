//! Lower bounds on the lower-bound graph: per-vertex distances to the nearest
//! POI of every category, and per-query distances to the destination.
//!
//! Both are plain Dijkstra runs over the reversed lower-bound graph. The
//! category table uses one multi-source run per category seeded with all of
//! its POIs, which yields the same values as a search from every vertex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{CategoryId, StaticGraph, TimeDependentGraph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Item {
    dist: f64,
    vertex: VertexId,
}

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra; unreachable vertices get `f64::INFINITY`.
pub fn static_distances(g: &StaticGraph, sources: &[VertexId]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.num_vertices()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s as usize] = 0.0;
        heap.push(Item { dist: 0.0, vertex: s });
    }
    while let Some(Item { dist: d, vertex: u }) = heap.pop() {
        if d > dist[u as usize] {
            continue;
        }
        for (v, w) in g.out_edges(u) {
            let nd = d + w;
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(Item { dist: nd, vertex: v });
            }
        }
    }
    dist
}

/// `L(v, C)` for every vertex and category, as a dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundTable {
    num_vertices: usize,
    /// Column order: `columns[i]` is the category stored in column `i`.
    columns: Vec<CategoryId>,
    /// Inverse of `columns`, indexed by category id.
    column_of: Vec<Option<usize>>,
    values: Vec<f64>,
    fingerprint: [u8; 32],
    empty_categories: Vec<CategoryId>,
}

impl LowerBoundTable {
    pub fn get(&self, v: VertexId, c: CategoryId) -> f64 {
        let col = self.column_of[c as usize].expect("category present in table");
        self.values[v as usize * self.columns.len() + col]
    }

    pub fn has_category(&self, c: CategoryId) -> bool {
        self.column_of.get(c as usize).copied().flatten().is_some()
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn categories(&self) -> &[CategoryId] {
        &self.columns
    }

    pub fn num_entries(&self) -> usize {
        self.values.len()
    }

    pub fn fingerprint(&self) -> [u8; 32] {
        self.fingerprint
    }

    /// Categories without any POI; their columns are all infinite.
    pub fn empty_categories(&self) -> &[CategoryId] {
        &self.empty_categories
    }

    pub fn matches(&self, g: &TimeDependentGraph) -> bool {
        self.fingerprint == g.fingerprint()
    }

    pub fn check(&self, g: &TimeDependentGraph) -> Result<()> {
        if self.matches(g) {
            Ok(())
        } else {
            Err(Error::FingerprintMismatch)
        }
    }

    /// Checks zero-on-POI and the triangle inequality over lower-bound edges.
    /// Returns one message per violated entry.
    pub fn invariant_violations(&self, g: &TimeDependentGraph) -> Vec<String> {
        let lb = g.lower_bound_graph();
        let mut out = Vec::new();
        for &c in &self.columns {
            for v in g.vertices() {
                let l = self.get(v, c);
                let is_poi = g.category_of(v) == Some(c);
                if is_poi != (l == 0.0) {
                    out.push(format!("L({}, {}) = {l} but POI membership is {is_poi}", g.name(v), g.category(c).name));
                }
            }
            for (u, v, w) in lb.edges() {
                let lu = self.get(u, c);
                let lv = self.get(v, c);
                if lu > w + lv + 1e-9 {
                    out.push(format!(
                        "L({}, {}) = {lu} exceeds {w} + L({}, ..) = {}",
                        g.name(u),
                        g.category(c).name,
                        g.name(v),
                        w + lv
                    ));
                }
            }
        }
        out
    }

    pub fn save(&self, g: &TimeDependentGraph, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        w.write_all(TABLE_MAGIC).map_err(io)?;
        w.write_all(&self.fingerprint).map_err(io)?;
        w.write_all(&(self.num_vertices as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&(self.columns.len() as u64).to_le_bytes()).map_err(io)?;
        for &c in &self.columns {
            let name = g.category(c).name.as_bytes();
            w.write_all(&(name.len() as u32).to_le_bytes()).map_err(io)?;
            w.write_all(name).map_err(io)?;
        }
        for &x in &self.values {
            w.write_all(&x.to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Loads a table and checks it belongs to `g`.
    pub fn load(g: &TimeDependentGraph, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let io = |e| Error::io(path, e);
        let bad = |msg: &str| Error::BadTable { path: path.to_path_buf(), msg: msg.to_string() };

        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != TABLE_MAGIC {
            return Err(bad("bad magic"));
        }
        let mut fingerprint = [0u8; 32];
        r.read_exact(&mut fingerprint).map_err(io)?;
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(io)?;
        let num_vertices = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word).map_err(io)?;
        let num_columns = u64::from_le_bytes(word) as usize;
        if fingerprint != g.fingerprint() {
            return Err(Error::FingerprintMismatch);
        }
        if num_vertices != g.num_vertices() || num_columns > g.num_categories() {
            return Err(bad("dimensions do not match the graph"));
        }
        let mut columns = Vec::with_capacity(num_columns);
        for _ in 0..num_columns {
            let mut len = [0u8; 4];
            r.read_exact(&mut len).map_err(io)?;
            let mut name = vec![0u8; u32::from_le_bytes(len) as usize];
            r.read_exact(&mut name).map_err(io)?;
            let name = String::from_utf8(name).map_err(|_| bad("category name is not UTF-8"))?;
            columns.push(g.category_id(&name)?);
        }
        let mut values = vec![0.0; num_vertices * num_columns];
        for x in values.iter_mut() {
            r.read_exact(&mut word).map_err(io)?;
            *x = f64::from_le_bytes(word);
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest).map_err(io)?;
        if !rest.is_empty() {
            return Err(bad("trailing bytes"));
        }
        Ok(Self::assemble(g, columns, values, fingerprint))
    }

    fn assemble(g: &TimeDependentGraph, columns: Vec<CategoryId>, values: Vec<f64>, fingerprint: [u8; 32]) -> Self {
        let mut column_of = vec![None; g.num_categories()];
        for (i, &c) in columns.iter().enumerate() {
            column_of[c as usize] = Some(i);
        }
        let empty_categories = columns
            .iter()
            .copied()
            .filter(|&c| g.category(c).members.is_empty())
            .collect();
        Self { num_vertices: g.num_vertices(), columns, column_of, values, fingerprint, empty_categories }
    }
}

/// File magic of the binary table format. Infinite entries are stored as the
/// IEEE-754 bit pattern of `+inf` (`0x7FF0000000000000`).
pub const TABLE_MAGIC: &[u8; 4] = b"LBT1";

/// Builds the table for every category of `g`, in category-id column order.
pub fn build_category_bounds(g: &TimeDependentGraph) -> LowerBoundTable {
    let order: Vec<CategoryId> = (0..g.num_categories() as CategoryId).collect();
    build_category_bounds_ordered(g, &order)
}

/// Builds the table with columns in the given category order.
pub fn build_category_bounds_ordered(g: &TimeDependentGraph, order: &[CategoryId]) -> LowerBoundTable {
    let reverse = g.lower_bound_graph().reverse();
    let columns: Vec<Vec<f64>> = order
        .par_iter()
        .map(|&c| {
            let members = &g.category(c).members;
            if members.is_empty() {
                log::warn!("category `{}` has no POIs; its bounds are all infinite", g.category(c).name);
            }
            static_distances(&reverse, members)
        })
        .collect();
    let n = g.num_vertices();
    let k = order.len();
    let mut values = vec![f64::INFINITY; n * k];
    for (col, dist) in columns.iter().enumerate() {
        for (v, &d) in dist.iter().enumerate() {
            values[v * k + col] = d;
        }
    }
    LowerBoundTable::assemble(g, order.to_vec(), values, g.fingerprint())
}

/// `L(v, d)` for one destination `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DestinationBounds {
    target: VertexId,
    dist: Vec<f64>,
}

impl DestinationBounds {
    pub fn target(&self) -> VertexId {
        self.target
    }

    pub fn get(&self, v: VertexId) -> f64 {
        self.dist[v as usize]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.dist
    }
}

pub fn destination_bounds(g: &TimeDependentGraph, d: VertexId) -> Result<DestinationBounds> {
    g.check_vertex(d)?;
    let reverse = g.lower_bound_graph().reverse();
    Ok(DestinationBounds { target: d, dist: static_distances(&reverse, &[d]) })
}

/// Same as [`destination_bounds`] but reuses a prebuilt reversed lower-bound graph.
pub fn destination_bounds_with(reverse_lb: &StaticGraph, d: VertexId) -> DestinationBounds {
    DestinationBounds { target: d, dist: static_distances(reverse_lb, &[d]) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::DAY;
    use crate::graph::GraphBuilder;
    use crate::ttf::TravelTimeFunction;

    fn chain() -> TimeDependentGraph {
        let mut b = GraphBuilder::default();
        let a = b.add_vertex("a").unwrap();
        let m = b.add_vertex("b").unwrap();
        let c = b.add_vertex("c").unwrap();
        let lone = b.add_vertex("lone").unwrap();
        let food = b.add_category("food", 10.0).unwrap();
        b.add_category("nothing", 0.0).unwrap();
        b.set_category(c, food).unwrap();
        b.add_edge(a, m, TravelTimeFunction::new(vec![(0.0, 2.0), (600.0, 9.0)], DAY).unwrap()).unwrap();
        b.add_edge(m, c, TravelTimeFunction::constant(3.0)).unwrap();
        b.add_edge(c, lone, TravelTimeFunction::constant(1.0)).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn destination_chain() {
        let g = chain();
        let d = destination_bounds(&g, 2).unwrap();
        assert_eq!(d.get(2), 0.0);
        assert_eq!(d.get(0), 5.0);
        assert_eq!(d.get(1), 3.0);
        assert_eq!(d.get(3), f64::INFINITY);
        assert!(destination_bounds(&g, 99).is_err());
    }

    #[test]
    fn category_table_basics() {
        let g = chain();
        let t = build_category_bounds(&g);
        assert_eq!(t.num_entries(), 2 * 4);
        assert_eq!(t.get(2, 0), 0.0);
        assert_eq!(t.get(0, 0), 5.0);
        assert_eq!(t.get(3, 0), f64::INFINITY);
        assert!(t.get(0, 1).is_infinite());
        assert_eq!(t.empty_categories(), &[1]);
        assert!(t.invariant_violations(&g).is_empty());
    }

    #[test]
    fn column_order_does_not_change_values() {
        let g = chain();
        let a = build_category_bounds_ordered(&g, &[0, 1]);
        let b = build_category_bounds_ordered(&g, &[1, 0]);
        for v in g.vertices() {
            for c in 0..2 {
                assert_eq!(a.get(v, c), b.get(v, c));
            }
        }
    }
}
