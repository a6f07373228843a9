//! Line-oriented text format for time-dependent graphs.
//!
//! ```text
//! tdg <period> <num-vertices> <num-edge-lines>
//! c <category> <dwell-minutes>
//! v <id> [<category>]
//! e <from> <to> <k> <b_0>:<c_0> ... <b_{k-1}>:<c_{k-1}>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Lines may appear in
//! any order after the header; categories are resolved once the whole file is
//! read. Static graphs use the same layout with `k = 1` on every edge.
//! Repeated `(from, to)` pairs are merged by pointwise minimum and listed in
//! the [`ImportReport`].

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, StaticGraph, TimeDependentGraph, VertexId};
use crate::ttf::TravelTimeFunction;

/// What the reader changed while importing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImportReport {
    /// `(line, from, to)` of every edge line merged into an earlier one.
    pub merged: Vec<(usize, String, String)>,
    /// `(line, reason)` of records dropped outright.
    pub dropped: Vec<(usize, String)>,
}

impl ImportReport {
    pub fn is_clean(&self) -> bool {
        self.merged.is_empty() && self.dropped.is_empty()
    }
}

pub fn write_tdg(g: &TimeDependentGraph) -> String {
    let mut out = String::new();
    writeln!(out, "tdg {} {} {}", g.period(), g.num_vertices(), g.num_edges()).unwrap();
    for c in g.categories() {
        writeln!(out, "c {} {}", c.name, c.dwell).unwrap();
    }
    for v in g.vertices() {
        match g.category_of(v) {
            Some(c) => writeln!(out, "v {} {}", g.name(v), g.category(c).name).unwrap(),
            None => writeln!(out, "v {}", g.name(v)).unwrap(),
        }
    }
    for (u, v, f) in g.edges() {
        write!(out, "e {} {} {}", g.name(u), g.name(v), f.breakpoints().len()).unwrap();
        for b in f.breakpoints() {
            write!(out, " {}:{}", b.at, b.cost).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Writes a static graph; vertices are named by index unless `names` is given.
pub fn write_static(g: &StaticGraph, period: f64, names: Option<&[String]>) -> String {
    let name = |v: VertexId| match names {
        Some(n) => n[v as usize].clone(),
        None => v.to_string(),
    };
    let mut out = String::new();
    writeln!(out, "tdg {} {} {}", period, g.num_vertices(), g.num_edges()).unwrap();
    for v in 0..g.num_vertices() as VertexId {
        writeln!(out, "v {}", name(v)).unwrap();
    }
    for (u, v, c) in g.edges() {
        writeln!(out, "e {} {} 1 0:{}", name(u), name(v), c).unwrap();
    }
    out
}

pub(crate) fn fingerprint(g: &TimeDependentGraph) -> [u8; 32] {
    Sha256::digest(write_tdg(g).as_bytes()).into()
}

struct EdgeLine {
    line: usize,
    from: String,
    to: String,
    f: TravelTimeFunction,
}

/// Parses into a builder so callers can inspect FIFO problems before `build`.
pub fn parse_tdg_builder(text: &str, origin: &str) -> Result<(GraphBuilder, ImportReport)> {
    let perr = |line: usize, msg: String| Error::Parse { path: origin.to_string(), line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| perr(0, "empty file".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != "tdg" {
        return Err(perr(hline, "expected header `tdg <T> <|V|> <|E|>`".into()));
    }
    let period: f64 = h[1].parse().map_err(|_| perr(hline, format!("bad period `{}`", h[1])))?;
    if !(period.is_finite() && period > 0.0) {
        return Err(perr(hline, format!("bad period `{}`", h[1])));
    }
    let nv: usize = h[2].parse().map_err(|_| perr(hline, format!("bad vertex count `{}`", h[2])))?;
    let ne: usize = h[3].parse().map_err(|_| perr(hline, format!("bad edge count `{}`", h[3])))?;

    let mut b = GraphBuilder::new(period);
    let mut tags: Vec<(usize, VertexId, String)> = Vec::new();
    let mut edge_lines: Vec<EdgeLine> = Vec::new();
    let mut cats: Vec<(usize, String, f64)> = Vec::new();

    for (ln, line) in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok[0] {
            "v" => {
                if !(2..=3).contains(&tok.len()) {
                    return Err(perr(ln, "expected `v <id> [<category>]`".into()));
                }
                let id = b.add_vertex(tok[1]).map_err(|e| perr(ln, e.to_string()))?;
                if let Some(c) = tok.get(2) {
                    tags.push((ln, id, c.to_string()));
                }
            }
            "c" => {
                if tok.len() != 3 {
                    return Err(perr(ln, "expected `c <category> <dwell>`".into()));
                }
                let dwell: f64 = tok[2].parse().map_err(|_| perr(ln, format!("bad dwell `{}`", tok[2])))?;
                cats.push((ln, tok[1].to_string(), dwell));
            }
            "e" => {
                if tok.len() < 4 {
                    return Err(perr(ln, "expected `e <from> <to> <k> <b:c>...`".into()));
                }
                let k: usize = tok[3].parse().map_err(|_| perr(ln, format!("bad breakpoint count `{}`", tok[3])))?;
                if tok.len() != 4 + k {
                    return Err(perr(ln, format!("expected {k} breakpoints, found {}", tok.len() - 4)));
                }
                let mut pts = Vec::with_capacity(k);
                for p in &tok[4..] {
                    let (at, cost) = p
                        .split_once(':')
                        .ok_or_else(|| perr(ln, format!("bad breakpoint `{p}`")))?;
                    let at: f64 = at.parse().map_err(|_| perr(ln, format!("bad breakpoint `{p}`")))?;
                    let cost: f64 = cost.parse().map_err(|_| perr(ln, format!("bad breakpoint `{p}`")))?;
                    pts.push((at, cost));
                }
                let f = TravelTimeFunction::new_unchecked_fifo(pts, period).map_err(|e| perr(ln, e.to_string()))?;
                edge_lines.push(EdgeLine { line: ln, from: tok[1].to_string(), to: tok[2].to_string(), f });
            }
            other => return Err(perr(ln, format!("unknown record type `{other}`"))),
        }
    }

    for (ln, name, dwell) in cats {
        b.add_category(&name, dwell).map_err(|e| perr(ln, e.to_string()))?;
    }
    for (ln, v, cat) in tags {
        let c = b.category(&cat).ok_or_else(|| perr(ln, format!("unknown category `{cat}`")))?;
        b.set_category(v, c).map_err(|e| perr(ln, e.to_string()))?;
    }
    if b.num_vertices() != nv {
        return Err(perr(hline, format!("header declares {nv} vertices, file has {}", b.num_vertices())));
    }
    if edge_lines.len() != ne {
        return Err(perr(hline, format!("header declares {ne} edges, file has {}", edge_lines.len())));
    }
    let mut report = ImportReport::default();
    for e in edge_lines {
        let u = b
            .vertex(&e.from)
            .ok_or_else(|| perr(e.line, format!("edge references unknown vertex `{}`", e.from)))?;
        let v = b
            .vertex(&e.to)
            .ok_or_else(|| perr(e.line, format!("edge references unknown vertex `{}`", e.to)))?;
        if u == v {
            report.dropped.push((e.line, format!("self-loop on `{}`", e.from)));
            continue;
        }
        if b.add_or_merge_edge(u, v, e.f).map_err(|err| perr(e.line, err.to_string()))? {
            report.merged.push((e.line, e.from, e.to));
        }
    }
    Ok((b, report))
}

pub fn parse_tdg(text: &str, origin: &str) -> Result<(TimeDependentGraph, ImportReport)> {
    let (b, report) = parse_tdg_builder(text, origin)?;
    Ok((b.build()?, report))
}

pub fn read_tdg(path: impl AsRef<Path>) -> Result<(TimeDependentGraph, ImportReport)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tdg(&text, &path.display().to_string())
}

pub fn save_tdg(g: &TimeDependentGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_tdg(g)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::DAY;

    const SAMPLE: &str = "\
# two banks
tdg 1440 3 3
c bank 15
v a
v b bank
v c
e a b 2 0:5 720:9.5
e b c 1 0:3
e a c 1 0:1e-1
";

    #[test]
    fn parse_and_write_round_trip() {
        let (g, report) = parse_tdg(SAMPLE, "sample").unwrap();
        assert!(report.is_clean());
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.category(0).members, vec![1]);
        let text = write_tdg(&g);
        let (g2, _) = parse_tdg(&text, "again").unwrap();
        assert_eq!(write_tdg(&g2), text);
        assert_eq!(g.fingerprint(), g2.fingerprint());
    }

    #[test]
    fn unknown_vertex_names_line() {
        let bad = SAMPLE.replace("e b c 1 0:3", "e b zz 1 0:3");
        let err = parse_tdg(&bad, "f.tdg").unwrap_err();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 8);
                assert!(msg.contains("zz"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_edge_merged_and_reported() {
        let text = SAMPLE.replace("tdg 1440 3 3", "tdg 1440 3 4").to_string() + "e a b 1 0:50\n";
        let (g, report) = parse_tdg(&text, "dup").unwrap();
        assert_eq!(report.merged, vec![(10, "a".to_string(), "b".to_string())]);
        let a = g.vertex("a").unwrap();
        let b = g.vertex("b").unwrap();
        let f = g.edge(a, b).unwrap();
        assert_eq!(f.eval_at(0.0), 5.0);
        assert_eq!(f.eval_at(720.0), 9.5);
    }

    #[test]
    fn fifo_violation_names_edge() {
        let text = "tdg 1440 2 1\nv x\nv y\ne x y 2 0:100 60:10\n";
        let err = parse_tdg(text, "bad").unwrap_err().to_string();
        assert!(err.contains("(x, y)"), "{err}");
    }

    #[test]
    fn header_mismatch_rejected() {
        assert!(parse_tdg("tdg 1440 2 0\nv a\n", "h").is_err());
        assert!(parse_tdg("graph 1 2 3\n", "h").is_err());
        assert!(parse_tdg("", "h").is_err());
    }

    #[test]
    fn static_graph_written_with_single_breakpoints() {
        let s = StaticGraph::from_edges(2, &[(0, 1, 2.5)]).unwrap();
        let text = write_static(&s, DAY, None);
        let (g, _) = parse_tdg(&text, "s").unwrap();
        assert_eq!(g.lower_bound_graph(), s);
    }
}
