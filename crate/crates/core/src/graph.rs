//! Metric graphs with exact edge lengths, the intrinsic metric and metric neighborhoods.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{parse_rational, Rational};

pub type VertexIdx = usize;
pub type EdgeIdx = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub id: String,
    pub boundary: bool,
}

/// Edge parametrized by offset `s ∈ [0, length]` from `from` to `to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub from: VertexIdx,
    pub to: VertexIdx,
    pub length: Rational,
}

/// Point of a metric graph. Vertices have exactly one representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GraphPoint {
    Vertex(VertexIdx),
    Interior { edge: EdgeIdx, offset: Rational },
}

/// Description of a graph as read from JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpec {
    pub id: String,
    #[serde(default)]
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length: String,
}

/// Validated metric graph. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    incident: Vec<Vec<EdgeIdx>>,
    /// All-pairs shortest path lengths between vertices.
    dist: Vec<Vec<Rational>>,
}

/// Sub-interval of an edge, given by offsets, with explicit endpoint inclusion.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn contains(&self, s: &Rational) -> bool {
        (s > &self.lo || (self.lo_closed && s == &self.lo))
            && (s < &self.hi || (self.hi_closed && s == &self.hi))
    }
}

/// Per-edge union of disjoint, sorted intervals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub per_edge: Vec<Vec<Interval>>,
}

impl Region {
    pub fn contains(&self, g: &MetricGraph, p: &GraphPoint) -> bool {
        g.placements(p)
            .into_iter()
            .any(|(e, s)| self.per_edge[e].iter().any(|iv| iv.contains(&s)))
    }

    /// Pointwise union.
    pub fn union(&self, other: &Region) -> Region {
        Region {
            per_edge: self
                .per_edge
                .iter()
                .zip(&other.per_edge)
                .map(|(a, b)| normalize(a.iter().chain(b).cloned().collect()))
                .collect(),
        }
    }

    /// `self ⊆ other`, decided exactly from the interval lists.
    pub fn is_subset(&self, other: &Region) -> bool {
        self.union(other) == *other
    }

    /// Region with every interval closed.
    pub fn closure(&self) -> Region {
        Region {
            per_edge: self
                .per_edge
                .iter()
                .map(|ivs| {
                    normalize(
                        ivs.iter()
                            .map(|iv| Interval {
                                lo: iv.lo.clone(),
                                hi: iv.hi.clone(),
                                lo_closed: true,
                                hi_closed: true,
                            })
                            .collect(),
                    )
                })
                .collect(),
        }
    }
}

/// Sorts and merges overlapping or touching intervals.
pub fn normalize(mut ivs: Vec<Interval>) -> Vec<Interval> {
    ivs.retain(|iv| iv.lo < iv.hi || (iv.lo == iv.hi && iv.lo_closed && iv.hi_closed));
    ivs.sort_by(|a, b| a.lo.cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
    let mut out: Vec<Interval> = Vec::new();
    for iv in ivs {
        if let Some(last) = out.last_mut() {
            let joins = iv.lo < last.hi || (iv.lo == last.hi && (last.hi_closed || iv.lo_closed));
            if joins {
                if iv.hi > last.hi {
                    last.hi = iv.hi;
                    last.hi_closed = iv.hi_closed;
                } else if iv.hi == last.hi {
                    last.hi_closed |= iv.hi_closed;
                }
                if iv.lo == last.lo {
                    last.lo_closed |= iv.lo_closed;
                }
                continue;
            }
        }
        out.push(iv);
    }
    out
}

impl MetricGraph {
    /// Validates a graph description.
    pub fn build(spec: &GraphSpec) -> Result<MetricGraph> {
        let mut index = BTreeMap::new();
        let mut vertices = Vec::new();
        for v in &spec.vertices {
            if index.insert(v.id.clone(), vertices.len()).is_some() {
                return Err(Error::Graph(format!("duplicate vertex id {:?}", v.id)));
            }
            vertices.push(Vertex {
                id: v.id.clone(),
                boundary: v.boundary,
            });
        }
        if vertices.is_empty() {
            return Err(Error::Graph("graph has no vertices".into()));
        }
        let mut edges = Vec::new();
        let mut edge_ids = BTreeMap::new();
        let mut incident = vec![Vec::new(); vertices.len()];
        for e in &spec.edges {
            if edge_ids.insert(e.id.clone(), edges.len()).is_some() {
                return Err(Error::Graph(format!("duplicate edge id {:?}", e.id)));
            }
            let lookup = |id: &String| {
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Graph(format!("edge {:?} references unknown vertex {id:?}", e.id)))
            };
            let from = lookup(&e.from)?;
            let to = lookup(&e.to)?;
            if from == to {
                return Err(Error::Graph(format!("edge {:?} is a loop", e.id)));
            }
            let length = parse_rational(&e.length)?;
            if !length.is_positive() {
                return Err(Error::Graph(format!("edge {:?} has nonpositive length", e.id)));
            }
            incident[from].push(edges.len());
            incident[to].push(edges.len());
            edges.push(Edge {
                id: e.id.clone(),
                from,
                to,
                length,
            });
        }
        for (i, v) in vertices.iter().enumerate() {
            let mu = incident[i].len();
            if mu == 2 {
                return Err(Error::Graph(format!("vertex {:?} has valency 2", v.id)));
            }
            if v.boundary && mu != 1 {
                return Err(Error::Graph(format!(
                    "boundary vertex {:?} has valency {mu}, expected 1",
                    v.id
                )));
            }
            if !v.boundary && mu < 3 {
                return Err(Error::Graph(format!(
                    "inner vertex {:?} has valency {mu}, expected at least 3",
                    v.id
                )));
            }
        }
        if !vertices.iter().any(|v| v.boundary) {
            return Err(Error::Graph("boundary set is empty".into()));
        }
        let dist = all_pairs(vertices.len(), &edges)
            .ok_or_else(|| Error::Graph("graph is disconnected".into()))?;
        Ok(MetricGraph {
            vertices,
            edges,
            incident,
            dist,
        })
    }

    pub fn from_json(text: &str) -> Result<MetricGraph> {
        let spec: GraphSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("graph file: {e}")))?;
        MetricGraph::build(&spec)
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexSpec {
                    id: v.id.clone(),
                    boundary: v.boundary,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    id: e.id.clone(),
                    from: self.vertices[e.from].id.clone(),
                    to: self.vertices[e.to].id.clone(),
                    length: e.length.to_string(),
                })
                .collect(),
        }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, v: VertexIdx) -> &Vertex {
        &self.vertices[v]
    }

    pub fn edge(&self, e: EdgeIdx) -> &Edge {
        &self.edges[e]
    }

    pub fn incident(&self, v: VertexIdx) -> &[EdgeIdx] {
        &self.incident[v]
    }

    /// Valency μ(v).
    pub fn valency(&self, v: VertexIdx) -> usize {
        self.incident[v].len()
    }

    pub fn is_boundary(&self, v: VertexIdx) -> bool {
        self.vertices[v].boundary
    }

    pub fn boundary(&self) -> Vec<VertexIdx> {
        (0..self.vertices.len()).filter(|&v| self.is_boundary(v)).collect()
    }

    pub fn inner(&self) -> Vec<VertexIdx> {
        (0..self.vertices.len()).filter(|&v| !self.is_boundary(v)).collect()
    }

    pub fn vertex_index(&self, id: &str) -> Option<VertexIdx> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn edge_index(&self, id: &str) -> Option<EdgeIdx> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Shortest path length between two vertices.
    pub fn vertex_distance(&self, a: VertexIdx, b: VertexIdx) -> &Rational {
        &self.dist[a][b]
    }

    /// Largest vertex-to-vertex distance plus the longest edge; bounds every distance.
    pub fn diameter_bound(&self) -> Rational {
        let mut m = Rational::zero();
        for row in &self.dist {
            for d in row {
                if d > &m {
                    m = d.clone();
                }
            }
        }
        for e in &self.edges {
            m += &e.length;
        }
        m
    }

    /// Canonical point at `offset` on edge `e`.
    pub fn point(&self, e: EdgeIdx, offset: Rational) -> Result<GraphPoint> {
        let edge = self
            .edges
            .get(e)
            .ok_or_else(|| Error::Graph(format!("no edge with index {e}")))?;
        if offset.is_negative() || offset > edge.length {
            return Err(Error::Graph(format!(
                "offset {offset} outside edge {:?} of length {}",
                edge.id, edge.length
            )));
        }
        Ok(if offset.is_zero() {
            GraphPoint::Vertex(edge.from)
        } else if offset == edge.length {
            GraphPoint::Vertex(edge.to)
        } else {
            GraphPoint::Interior { edge: e, offset }
        })
    }

    /// All `(edge, offset)` coordinates of a point (one per incident edge for vertices).
    pub fn placements(&self, p: &GraphPoint) -> Vec<(EdgeIdx, Rational)> {
        match p {
            GraphPoint::Interior { edge, offset } => vec![(*edge, offset.clone())],
            GraphPoint::Vertex(v) => self.incident[*v]
                .iter()
                .map(|&e| {
                    let edge = &self.edges[e];
                    if edge.from == *v {
                        (e, Rational::zero())
                    } else {
                        (e, edge.length.clone())
                    }
                })
                .collect(),
        }
    }

    fn check_point(&self, p: &GraphPoint) -> Result<()> {
        match p {
            GraphPoint::Vertex(v) if *v < self.vertices.len() => Ok(()),
            GraphPoint::Interior { edge, offset }
                if *edge < self.edges.len()
                    && offset.is_positive()
                    && offset < &self.edges[*edge].length =>
            {
                Ok(())
            }
            _ => Err(Error::Graph(format!("point {p:?} is not on the graph"))),
        }
    }

    /// Distances from `p` to every vertex.
    fn to_vertices(&self, p: &GraphPoint) -> Vec<Rational> {
        match p {
            GraphPoint::Vertex(v) => self.dist[*v].clone(),
            GraphPoint::Interior { edge, offset } => {
                let e = &self.edges[*edge];
                let back = &e.length - offset;
                (0..self.vertices.len())
                    .map(|w| {
                        let a = offset + &self.dist[e.from][w];
                        let b = &back + &self.dist[e.to][w];
                        a.min(b)
                    })
                    .collect()
            }
        }
    }

    /// Intrinsic metric τ(x, y).
    pub fn distance(&self, x: &GraphPoint, y: &GraphPoint) -> Result<Rational> {
        self.check_point(x)?;
        self.check_point(y)?;
        let dx = self.to_vertices(x);
        let mut best = match y {
            GraphPoint::Vertex(w) => dx[*w].clone(),
            GraphPoint::Interior { edge, offset } => {
                let e = &self.edges[*edge];
                let a = &dx[e.from] + offset;
                let b = &dx[e.to] + (&e.length - offset);
                a.min(b)
            }
        };
        if let (
            GraphPoint::Interior { edge: e1, offset: o1 },
            GraphPoint::Interior { edge: e2, offset: o2 },
        ) = (x, y)
        {
            if e1 == e2 {
                best = best.min((o1 - o2).abs());
            }
        }
        Ok(best)
    }

    /// Open metric neighborhood `{x : τ(x, A) < r}` as exact per-edge intervals.
    pub fn neighborhood(&self, a: &[GraphPoint], r: &Rational) -> Result<Region> {
        if !r.is_positive() {
            return Err(Error::Graph("neighborhood radius must be positive".into()));
        }
        for p in a {
            self.check_point(p)?;
        }
        let mut per_edge = vec![Vec::new(); self.edges.len()];
        let open = |lo: Rational, hi: Rational, lo_closed: bool, hi_closed: bool| Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        };
        for p in a {
            let dv = self.to_vertices(p);
            for (ei, e) in self.edges.iter().enumerate() {
                let len = &e.length;
                let ivs = &mut per_edge[ei];
                // Reach through the first endpoint.
                if &dv[e.from] < r {
                    let reach = r - &dv[e.from];
                    if &reach > len {
                        ivs.push(open(Rational::zero(), len.clone(), true, true));
                    } else {
                        ivs.push(open(Rational::zero(), reach, true, false));
                    }
                }
                if &dv[e.to] < r {
                    let reach = r - &dv[e.to];
                    if &reach > len {
                        ivs.push(open(Rational::zero(), len.clone(), true, true));
                    } else {
                        ivs.push(open(len - reach, len.clone(), false, true));
                    }
                }
                if let GraphPoint::Interior { edge, offset } = p {
                    if *edge == ei {
                        let lo = offset - r;
                        let hi = offset + r;
                        let (lo, lc) = if lo.is_negative() {
                            (Rational::zero(), true)
                        } else {
                            (lo, false)
                        };
                        let (hi, hc) = if &hi > len { (len.clone(), true) } else { (hi, false) };
                        ivs.push(open(lo, hi, lc, hc));
                    }
                }
            }
        }
        Ok(Region {
            per_edge: per_edge.into_iter().map(normalize).collect(),
        })
    }

    /// Human readable label, e.g. `v` or `e2@1/2`.
    pub fn label(&self, p: &GraphPoint) -> String {
        match p {
            GraphPoint::Vertex(v) => self.vertices[*v].id.clone(),
            GraphPoint::Interior { edge, offset } => format!("{}@{}", self.edges[*edge].id, offset),
        }
    }

    /// Parses `v`, `e2@1/2` or `e2:1/2`.
    pub fn parse_point(&self, s: &str) -> Result<GraphPoint> {
        let s = s.trim();
        if let Some(v) = self.vertex_index(s) {
            return Ok(GraphPoint::Vertex(v));
        }
        let (e, off) = s
            .split_once(['@', ':'])
            .ok_or_else(|| Error::Parse(format!("invalid point {s:?}")))?;
        let e = self
            .edge_index(e.trim())
            .ok_or_else(|| Error::Parse(format!("unknown edge in point {s:?}")))?;
        self.point(e, parse_rational(off)?)
    }
}

impl fmt::Display for GraphPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphPoint::Vertex(v) => write!(f, "vertex {v}"),
            GraphPoint::Interior { edge, offset } => write!(f, "edge {edge} @ {offset}"),
        }
    }
}

fn all_pairs(n: usize, edges: &[Edge]) -> Option<Vec<Vec<Rational>>> {
    let mut d: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(Rational::zero());
    }
    for e in edges {
        for (a, b) in [(e.from, e.to), (e.to, e.from)] {
            if d[a][b].as_ref().is_none_or(|x| &e.length < x) {
                d[a][b] = Some(e.length.clone());
            }
        }
    }
    #[allow(clippy::needless_range_loop)]
    for k in 0..n {
        for i in 0..n {
            let Some(dik) = d[i][k].clone() else { continue };
            for j in 0..n {
                if let Some(dkj) = &d[k][j] {
                    let c = &dik + dkj;
                    if d[i][j].as_ref().is_none_or(|x| &c < x) {
                        d[i][j] = Some(c);
                    }
                }
            }
        }
    }
    d.into_iter()
        .map(|row| row.into_iter().collect::<Option<Vec<_>>>())
        .collect()
}

/// Star graph with one inner vertex `v` and edges `e_i` from boundary `g_i` to `v`.
pub fn star(lengths: &[Rational]) -> Result<MetricGraph> {
    let mut vertices = vec![VertexSpec {
        id: "v".into(),
        boundary: false,
    }];
    let mut edges = Vec::new();
    for (i, l) in lengths.iter().enumerate() {
        vertices.push(VertexSpec {
            id: format!("g{}", i + 1),
            boundary: true,
        });
        edges.push(EdgeSpec {
            id: format!("e{}", i + 1),
            from: format!("g{}", i + 1),
            to: "v".into(),
            length: l.to_string(),
        });
    }
    if lengths.len() == 1 {
        vertices[0].boundary = true;
    }
    MetricGraph::build(&GraphSpec { vertices, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn star3() -> MetricGraph {
        star(&[int(2), int(3), int(10)]).unwrap()
    }

    #[test]
    fn builds_the_three_star() {
        let g = star3();
        assert_eq!(g.boundary().len(), 3);
        let v = g.vertex_index("v").unwrap();
        assert_eq!(g.inner(), vec![v]);
        assert_eq!(g.valency(v), 3);
    }

    #[test]
    fn single_edge_and_valency_two() {
        let g = star(&[int(1)]).unwrap();
        assert!(g.inner().is_empty());
        let spec = GraphSpec {
            vertices: vec![
                VertexSpec { id: "a".into(), boundary: true },
                VertexSpec { id: "m".into(), boundary: false },
                VertexSpec { id: "b".into(), boundary: true },
            ],
            edges: vec![
                EdgeSpec { id: "x".into(), from: "a".into(), to: "m".into(), length: "1".into() },
                EdgeSpec { id: "y".into(), from: "m".into(), to: "b".into(), length: "1".into() },
            ],
        };
        assert!(matches!(MetricGraph::build(&spec), Err(Error::Graph(_))));
    }

    #[test]
    fn rejects_bad_graphs() {
        let text = r#"{"vertices":[{"id":"a","boundary":true},{"id":"b","boundary":true},
            {"id":"c","boundary":true},{"id":"d","boundary":true}],
            "edges":[{"id":"x","from":"a","to":"b","length":"1"},{"id":"y","from":"c","to":"d","length":"1"}]}"#;
        assert_eq!(
            MetricGraph::from_json(text),
            Err(Error::Graph("graph is disconnected".into()))
        );
        let text = r#"{"vertices":[{"id":"a","boundary":true},{"id":"b","boundary":true}],
            "edges":[{"id":"x","from":"a","to":"b","length":"0"}]}"#;
        assert!(MetricGraph::from_json(text).is_err());
        let text = r#"{"vertices":[{"id":"a"},{"id":"b"},{"id":"c"},{"id":"d"}],
            "edges":[{"id":"x","from":"a","to":"b","length":"1"},{"id":"y","from":"a","to":"c","length":"1"},
            {"id":"z","from":"a","to":"d","length":"1"}]}"#;
        assert!(MetricGraph::from_json(text).is_err());
    }

    #[test]
    fn distances_on_the_star() {
        let g = star3();
        let g1 = GraphPoint::Vertex(g.vertex_index("g1").unwrap());
        let g2 = GraphPoint::Vertex(g.vertex_index("g2").unwrap());
        assert_eq!(g.distance(&g1, &g2).unwrap(), int(5));
        assert_eq!(g.distance(&g1, &g1).unwrap(), int(0));
        let m1 = g.point(0, int(1)).unwrap();
        let m2 = g.point(1, int(1)).unwrap();
        assert_eq!(g.distance(&m1, &m2).unwrap(), int(3));
        assert_eq!(g.point(0, int(0)).unwrap(), g1);
        assert!(g.point(0, int(3)).is_err());
    }

    #[test]
    fn neighborhoods_on_the_star() {
        let g = star3();
        let g1 = GraphPoint::Vertex(g.vertex_index("g1").unwrap());
        let r = g.neighborhood(std::slice::from_ref(&g1), &int(1)).unwrap();
        assert_eq!(
            r.per_edge[0],
            vec![Interval { lo: int(0), hi: int(1), lo_closed: true, hi_closed: false }]
        );
        assert!(r.per_edge[1].is_empty() && r.per_edge[2].is_empty());
        let r = g.neighborhood(std::slice::from_ref(&g1), &frac(9, 4)).unwrap();
        assert_eq!(
            r.per_edge[0],
            vec![Interval { lo: int(0), hi: int(2), lo_closed: true, hi_closed: true }]
        );
        assert_eq!(
            r.per_edge[1],
            vec![Interval { lo: frac(11, 4), hi: int(3), lo_closed: false, hi_closed: true }]
        );
        assert_eq!(
            r.per_edge[2],
            vec![Interval { lo: frac(39, 4), hi: int(10), lo_closed: false, hi_closed: true }]
        );
        let all = g.neighborhood(&[g1], &int(100)).unwrap();
        for (e, ivs) in all.per_edge.iter().enumerate() {
            assert_eq!(
                ivs,
                &vec![Interval { lo: int(0), hi: g.edge(e).length.clone(), lo_closed: true, hi_closed: true }]
            );
        }
        assert!(g.neighborhood(&[], &int(0)).is_err());
    }

    #[test]
    fn parses_points() {
        let g = star3();
        assert_eq!(g.parse_point("e2:1/2").unwrap(), g.point(1, frac(1, 2)).unwrap());
        assert_eq!(g.parse_point("e2@3").unwrap(), GraphPoint::Vertex(0));
        assert!(g.parse_point("e9:1").is_err());
    }
}
