//! Lattices on hydras, critical points, families of cells and the multi-source partition.
//!
//! Closure is computed on a finite arrangement. Cut offsets (per edge) and cut times are
//! seeded from corner points and closed under "a cut time inside a segment gives a cut
//! offset" and vice versa. Between consecutive cuts every segment runs from one cell to one
//! time cell; union-find over those incidences yields the families.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::ops::Bound::Excluded;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::graph::{normalize, EdgeIdx, GraphPoint, Interval, MetricGraph, Region, VertexIdx};
use crate::hydra::{corner_points, Segment, StPoint};
use crate::rational::{int, Affine, Rational};

const MAX_CUTS: usize = 100_000;
const MAX_REFINEMENTS: usize = 64;

/// Disjoint-set forest with path halving.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Open interval `(lo, hi)` of an edge; `map` sends the parameter `r ∈ (0, ε)` to the offset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub edge: EdgeIdx,
    pub lo: Rational,
    pub hi: Rational,
    pub map: Affine,
}

impl Cell {
    pub fn point(&self, g: &MetricGraph, r: &Rational) -> GraphPoint {
        g.point(self.edge, self.map.eval(r)).expect("cell inside edge")
    }

    pub fn len(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, edge: EdgeIdx, offset: &Rational) -> bool {
        self.edge == edge && &self.lo < offset && offset < &self.hi
    }

    fn flip(&mut self, eps: &Rational) {
        self.map = flipped(&self.map, eps);
    }
}

/// Open time interval with its parametrization `τ(r)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeCell {
    pub lo: Rational,
    pub hi: Rational,
    pub map: Affine,
}

fn flipped(m: &Affine, eps: &Rational) -> Affine {
    Affine::new(m.eval(eps), -m.sign)
}

/// Family of equal-length cells swept together, with their time cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family<V> {
    pub eps: Rational,
    /// Sorted by `(edge, lo)`.
    pub cells: Vec<Cell>,
    /// Sorted increasingly; `τ^i = times[i].map`.
    pub times: Vec<TimeCell>,
    /// `(i, k) -> value` for every structure segment over cell `k` during time cell `i`.
    pub entries: BTreeMap<(usize, usize), V>,
}

/// Single-source partition of the region swept by a segment structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition<V> {
    pub horizon: Rational,
    /// Critical points `Θ`: projections of the lattice of the corner points.
    pub critical: Vec<GraphPoint>,
    /// Extra cut points added to split cells that would otherwise map onto themselves reversed.
    pub refinements: Vec<GraphPoint>,
    pub families: Vec<Family<V>>,
    pub diagnostics: Vec<String>,
}

#[derive(Clone, Debug, Default)]
struct Cuts {
    offsets: Vec<BTreeSet<Rational>>,
    times: BTreeSet<Rational>,
}

impl Cuts {
    fn new(g: &MetricGraph) -> Self {
        Cuts {
            offsets: g
                .edges()
                .iter()
                .map(|e| BTreeSet::from([Rational::zero(), e.length.clone()]))
                .collect(),
            times: BTreeSet::new(),
        }
    }

    fn add_point(&mut self, g: &MetricGraph, p: &GraphPoint) {
        for (e, o) in g.placements(p) {
            self.offsets[e].insert(o);
        }
    }

    fn size(&self) -> usize {
        self.times.len() + self.offsets.iter().map(BTreeSet::len).sum::<usize>()
    }
}

fn open_range<'a>(
    set: &'a BTreeSet<Rational>,
    a: &'a Rational,
    b: &'a Rational,
) -> impl Iterator<Item = &'a Rational> + 'a {
    let it = if a < b {
        Some(set.range::<Rational, _>((Excluded(a), Excluded(b))))
    } else {
        None
    };
    it.into_iter().flatten()
}

fn close_cuts<V>(segs: &[Segment<V>], cuts: &mut Cuts) -> Result<()> {
    loop {
        let mut changed = false;
        for s in segs {
            let new_o: Vec<Rational> = open_range(&cuts.times, &s.t0, &s.t1)
                .map(|t| s.offset_at(t))
                .filter(|o| !cuts.offsets[s.edge].contains(o))
                .collect();
            let (a, b) = s.offset_range();
            let new_t: Vec<Rational> = open_range(&cuts.offsets[s.edge], a, b)
                .map(|o| s.time_at(o))
                .filter(|t| !cuts.times.contains(t))
                .collect();
            changed |= !new_o.is_empty() || !new_t.is_empty();
            cuts.offsets[s.edge].extend(new_o);
            cuts.times.extend(new_t);
        }
        if cuts.size() > MAX_CUTS {
            return Err(Error::Partition(format!("lattice closure exceeded {MAX_CUTS} cuts")));
        }
        if !changed {
            return Ok(());
        }
    }
}

fn covered_points<V>(g: &MetricGraph, segs: &[Segment<V>], cuts: &Cuts) -> BTreeSet<GraphPoint> {
    let mut out = BTreeSet::new();
    for (e, set) in cuts.offsets.iter().enumerate() {
        for o in set {
            if segs.iter().any(|s| s.edge == e && s.covers_offset(o)) {
                out.insert(g.point(e, o.clone()).expect("cut inside edge"));
            }
        }
    }
    out
}

enum Assembly<V> {
    Done(Vec<Family<V>>),
    /// A cell or time cell received two mirrored parametrizations.
    Reflected { edge: Option<EdgeIdx>, mid: Rational },
}

struct Sub {
    cell: usize,
    time: usize,
    /// Offset and time of the segment at the cell's `lo` end, and its direction.
    o: Rational,
    t: Rational,
    dir: i8,
    seg: usize,
}

fn assemble<V: Clone + PartialEq>(segs: &[Segment<V>], cuts: &Cuts) -> Result<Assembly<V>> {
    let cut_times: Vec<Rational> = cuts.times.iter().cloned().collect();
    let time_index: BTreeMap<&Rational, usize> =
        cut_times.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut cells: Vec<(EdgeIdx, Rational, Rational)> = Vec::new();
    let two = int(2);
    for (e, set) in cuts.offsets.iter().enumerate() {
        let v: Vec<&Rational> = set.iter().collect();
        for w in v.windows(2) {
            let mid = (w[0] + w[1]) / &two;
            if segs.iter().any(|s| {
                let (a, b) = s.offset_range();
                s.edge == e && a < &mid && &mid < b
            }) {
                cells.push((e, w[0].clone(), w[1].clone()));
            }
        }
    }
    let nc = cells.len();
    let mut subs = Vec::new();
    for (si, s) in segs.iter().enumerate() {
        let (a, b) = s.offset_range();
        for (ci, (e, lo, hi)) in cells.iter().enumerate() {
            if *e != s.edge || lo < a || hi > b {
                continue;
            }
            let ta = s.time_at(lo);
            let tb = s.time_at(hi);
            let (t0, t1) = if ta < tb { (&ta, &tb) } else { (&tb, &ta) };
            let ti = *time_index.get(t0).ok_or_else(|| {
                Error::Partition("segment over a cell starts between cut times".into())
            })?;
            if cut_times.get(ti + 1) != Some(t1) {
                return Err(Error::Partition("segment over a cell spans several time cells".into()));
            }
            subs.push(Sub {
                cell: ci,
                time: ti,
                o: lo.clone(),
                t: ta,
                dir: s.dir(),
                seg: si,
            });
        }
    }
    let nt = cut_times.len().saturating_sub(1);
    let mut uf = UnionFind::new(nc + nt);
    for s in &subs {
        uf.union(s.cell, nc + s.time);
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in 0..nc {
        comps.entry(uf.find(c)).or_default().push(c);
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nc + nt];
    for (i, s) in subs.iter().enumerate() {
        adj[s.cell].push(i);
        adj[nc + s.time].push(i);
    }
    let mut maps: Vec<Option<Affine>> = vec![None; nc + nt];
    let mut families = Vec::new();
    for (_, members) in comps {
        let root = members[0];
        maps[root] = Some(Affine::new(cells[root].1.clone(), 1));
        let mut queue = VecDeque::from([root]);
        let mut seen_times = BTreeSet::new();
        while let Some(node) = queue.pop_front() {
            let m = maps[node].clone().expect("mapped");
            for &si in &adj[node] {
                let s = &subs[si];
                let (other, om) = if node < nc {
                    // Cell map (b, σ) to time map along the line t = t_s + dir·(o - o_s).
                    let start = &s.t + crate::rational::signed(s.dir, &(&m.start - &s.o));
                    (nc + s.time, Affine::new(start, s.dir * m.sign))
                } else {
                    let start = &s.o + crate::rational::signed(s.dir, &(&m.start - &s.t));
                    (s.cell, Affine::new(start, s.dir * m.sign))
                };
                match &maps[other] {
                    None => {
                        maps[other] = Some(om);
                        queue.push_back(other);
                    }
                    Some(existing) if *existing == om => {}
                    Some(_) => {
                        return Ok(if other < nc {
                            let (e, lo, hi) = &cells[other];
                            Assembly::Reflected {
                                edge: Some(*e),
                                mid: (lo + hi) / &two,
                            }
                        } else {
                            let t = other - nc;
                            Assembly::Reflected {
                                edge: None,
                                mid: (&cut_times[t] + &cut_times[t + 1]) / &two,
                            }
                        });
                    }
                }
                if other >= nc {
                    seen_times.insert(other - nc);
                }
            }
        }
        let eps = &cells[root].2 - &cells[root].1;
        let mut fam_cells: Vec<Cell> = members
            .iter()
            .map(|&c| Cell {
                edge: cells[c].0,
                lo: cells[c].1.clone(),
                hi: cells[c].2.clone(),
                map: maps[c].clone().expect("mapped"),
            })
            .collect();
        let time_ids: Vec<usize> = seen_times.into_iter().collect();
        let mut fam_times: Vec<TimeCell> = time_ids
            .iter()
            .map(|&t| TimeCell {
                lo: cut_times[t].clone(),
                hi: cut_times[t + 1].clone(),
                map: maps[nc + t].clone().expect("mapped"),
            })
            .collect();
        if fam_times.last().is_some_and(|t| t.map.sign < 0) {
            for c in fam_cells.iter_mut() {
                c.flip(&eps);
            }
            for t in fam_times.iter_mut() {
                t.map = flipped(&t.map, &eps);
            }
        }
        let cell_pos: BTreeMap<usize, usize> =
            members.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        let time_pos: BTreeMap<usize, usize> =
            time_ids.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let mut entries = BTreeMap::new();
        for s in subs.iter().filter(|s| cell_pos.contains_key(&s.cell)) {
            let key = (time_pos[&s.time], cell_pos[&s.cell]);
            if entries.insert(key, segs[s.seg].value.clone()).is_some() {
                return Err(Error::Partition("two segments share a grid line".into()));
            }
        }
        families.push(Family {
            eps,
            cells: fam_cells,
            times: fam_times,
            entries,
        });
    }
    Ok(Assembly::Done(families))
}

/// Partition of the region swept by `segs`, seeded by the given corner points.
pub fn build_partition<V: Clone + PartialEq>(
    g: &MetricGraph,
    horizon: &Rational,
    segs: &[Segment<V>],
    corners: &[StPoint],
) -> Result<Partition<V>> {
    let mut base = Cuts::new(g);
    for (p, t) in corners {
        base.add_point(g, p);
        base.times.insert(t.clone());
    }
    close_cuts(segs, &mut base)?;
    let critical = covered_points(g, segs, &base);
    let mut cuts = base.clone();
    let mut diagnostics = Vec::new();
    for _ in 0..MAX_REFINEMENTS {
        match assemble(segs, &cuts)? {
            Assembly::Done(families) => {
                let all = covered_points(g, segs, &cuts);
                let refinements: Vec<GraphPoint> = all.difference(&critical).cloned().collect();
                return Ok(Partition {
                    horizon: horizon.clone(),
                    critical: critical.into_iter().collect(),
                    refinements,
                    families,
                    diagnostics,
                });
            }
            Assembly::Reflected { edge, mid } => {
                match edge {
                    Some(e) => {
                        diagnostics.push(format!(
                            "cell on {} mapped onto itself reversed; split at offset {mid}",
                            g.edge(e).id
                        ));
                        cuts.offsets[e].insert(mid);
                    }
                    None => {
                        diagnostics.push(format!(
                            "time cell mapped onto itself reversed; split at t = {mid}"
                        ));
                        cuts.times.insert(mid);
                    }
                }
                close_cuts(segs, &mut cuts)?;
            }
        }
    }
    Err(Error::Partition("too many reflection refinements".into()))
}

/// Partition of a segment structure seeded by its own corners.
pub fn families<V: Clone + PartialEq>(
    g: &MetricGraph,
    horizon: &Rational,
    segs: &[Segment<V>],
) -> Result<Partition<V>> {
    let corners = corner_points(g, segs);
    build_partition(g, horizon, segs, &corners)
}

/// Critical points `Θ = π(𝓛[corners])` of a segment structure.
pub fn critical_points<V: Clone + PartialEq>(
    g: &MetricGraph,
    horizon: &Rational,
    segs: &[Segment<V>],
) -> Result<Vec<GraphPoint>> {
    Ok(families(g, horizon, segs)?.critical)
}

impl<V> Partition<V> {
    /// Family, cell and parameter of a non-critical point.
    pub fn locate(&self, g: &MetricGraph, x: &GraphPoint) -> Result<(usize, usize, Rational)> {
        if self.critical.contains(x) || self.refinements.contains(x) {
            return Err(Error::Partition(format!("{} is a critical point", g.label(x))));
        }
        let GraphPoint::Interior { edge, offset } = x else {
            return Err(Error::Partition(format!("{} is outside the partition", g.label(x))));
        };
        for (f, fam) in self.families.iter().enumerate() {
            for (k, c) in fam.cells.iter().enumerate() {
                if c.contains(*edge, offset) {
                    return Ok((f, k, c.map.inverse_at(offset)));
                }
            }
        }
        Err(Error::Partition(format!("{} is outside the partition", g.label(x))))
    }

    /// Determination set `Λ[x]` (one point per cell of the family) and the sorted times `Ξ[x]`.
    pub fn determination_set(
        &self,
        g: &MetricGraph,
        x: &GraphPoint,
    ) -> Result<(Vec<GraphPoint>, Vec<Rational>)> {
        let (f, _, r) = self.locate(g, x)?;
        let fam = &self.families[f];
        let lambda = fam.cells.iter().map(|c| c.point(g, &r)).collect();
        let mut xi: Vec<Rational> = fam.times.iter().map(|t| t.map.eval(&r)).collect();
        xi.sort();
        Ok((lambda, xi))
    }

    /// Closed region covered by the families.
    pub fn region(&self, g: &MetricGraph) -> Region {
        let mut per_edge = vec![Vec::new(); g.edges().len()];
        for fam in &self.families {
            for c in &fam.cells {
                per_edge[c.edge].push(Interval {
                    lo: c.lo.clone(),
                    hi: c.hi.clone(),
                    lo_closed: true,
                    hi_closed: true,
                });
            }
        }
        Region {
            per_edge: per_edge.into_iter().map(normalize).collect(),
        }
    }
}

/// Pointwise lattice closure on a segment structure: repeatedly add every structure point
/// sharing a position or a time with a point already in the set.
pub fn lattice_closure<V>(
    g: &MetricGraph,
    segs: &[Segment<V>],
    seeds: &[StPoint],
) -> Result<BTreeSet<StPoint>> {
    let mut out: BTreeSet<StPoint> = BTreeSet::new();
    let mut queue: VecDeque<StPoint> = seeds.iter().cloned().collect();
    let mut by_pos = BTreeSet::new();
    let mut by_time = BTreeSet::new();
    while let Some((p, t)) = queue.pop_front() {
        if !out.insert((p.clone(), t.clone())) {
            continue;
        }
        if out.len() > MAX_CUTS {
            return Err(Error::Partition("lattice closure does not terminate".into()));
        }
        if by_pos.insert(p.clone()) {
            for (e, o) in g.placements(&p) {
                for s in segs.iter().filter(|s| s.edge == e && s.covers_offset(&o)) {
                    queue.push_back((p.clone(), s.time_at(&o)));
                }
            }
        }
        if by_time.insert(t.clone()) {
            for s in segs.iter().filter(|s| s.covers_time(&t)) {
                let q = g.point(s.edge, s.offset_at(&t)).expect("segment inside edge");
                queue.push_back((q, t.clone()));
            }
        }
    }
    Ok(out)
}

/// All structure points above `x`.
pub fn fiber<V>(g: &MetricGraph, segs: &[Segment<V>], x: &GraphPoint) -> Vec<StPoint> {
    let mut out = BTreeSet::new();
    for (e, o) in g.placements(x) {
        for s in segs.iter().filter(|s| s.edge == e && s.covers_offset(&o)) {
            out.insert((x.clone(), s.time_at(&o)));
        }
    }
    out.into_iter().collect()
}

/// A cell of the multi-source partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaCell {
    pub edge: EdgeIdx,
    pub lo: Rational,
    pub hi: Rational,
    pub map: Affine,
}

impl SigmaCell {
    pub fn point(&self, g: &MetricGraph, r: &Rational) -> GraphPoint {
        g.point(self.edge, self.map.eval(r)).expect("cell inside edge")
    }
}

/// The cells of one source family seen inside a multi-source family.
///
/// `cell_map[j] = Some(k)` when cell `j` of the multi-source family lies in cell `k` of
/// family `family` of source `source`; the source parameter is `r_map.eval(r)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaClass {
    pub source: usize,
    pub family: usize,
    pub r_map: Affine,
    pub cell_map: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaFamily {
    pub eps: Rational,
    /// Sorted by `(edge, lo)`; this order is the coordinate frame of the eikonal blocks.
    pub cells: Vec<SigmaCell>,
    pub classes: Vec<SigmaClass>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaPartition {
    pub sources: Vec<VertexIdx>,
    pub horizon: Rational,
    pub critical: Vec<GraphPoint>,
    pub refinements: Vec<GraphPoint>,
    pub families: Vec<SigmaFamily>,
    pub diagnostics: Vec<String>,
}

fn inverse(m: &Affine) -> Affine {
    // o = b + s r  =>  r = s (o - b)
    Affine::new(crate::rational::signed(m.sign, &(-m.start.clone())), m.sign)
}

/// Merges per-source partitions into the partition of the controlled set `sources`.
pub fn sigma_partition<V>(
    g: &MetricGraph,
    sources: &[VertexIdx],
    parts: &[Partition<V>],
) -> Result<SigmaPartition> {
    if sources.is_empty() {
        return Err(Error::Partition("the controlled set is empty".into()));
    }
    if let Some(s) = sources.iter().find(|&&s| s >= g.vertices().len() || !g.is_boundary(s)) {
        return Err(Error::Partition(format!("source {s} is not a boundary vertex")));
    }
    if sources.len() != parts.len() {
        return Err(Error::Partition("one partition per source is required".into()));
    }
    let horizon = parts[0].horizon.clone();
    let mut base: Vec<BTreeSet<Rational>> = g
        .edges()
        .iter()
        .map(|e| BTreeSet::from([Rational::zero(), e.length.clone()]))
        .collect();
    for p in parts {
        for x in p.critical.iter().chain(&p.refinements) {
            for (e, o) in g.placements(x) {
                base[e].insert(o);
            }
        }
    }
    close_sigma(parts, &mut base)?;
    let covered = |e: EdgeIdx, o: &Rational| {
        parts.iter().any(|p| {
            p.families
                .iter()
                .flat_map(|f| &f.cells)
                .any(|c| c.edge == e && &c.lo <= o && o <= &c.hi)
        })
    };
    let mut critical = BTreeSet::new();
    for (e, set) in base.iter().enumerate() {
        for o in set.iter().filter(|o| covered(e, o)) {
            critical.insert(g.point(e, o.clone()).expect("cut inside edge"));
        }
    }
    let mut cuts = base.clone();
    let mut diagnostics = Vec::new();
    for _ in 0..MAX_REFINEMENTS {
        match assemble_sigma(g, parts, &cuts)? {
            Ok(families) => {
                let mut refinements = BTreeSet::new();
                for (e, set) in cuts.iter().enumerate() {
                    for o in set.iter().filter(|o| covered(e, o)) {
                        let p = g.point(e, o.clone()).expect("cut inside edge");
                        if !critical.contains(&p) {
                            refinements.insert(p);
                        }
                    }
                }
                return Ok(SigmaPartition {
                    sources: sources.to_vec(),
                    horizon,
                    critical: critical.into_iter().collect(),
                    refinements: refinements.into_iter().collect(),
                    families,
                    diagnostics,
                });
            }
            Err((e, mid)) => {
                diagnostics.push(format!(
                    "multi-source cell on {} mapped onto itself reversed; split at offset {mid}",
                    g.edge(e).id
                ));
                cuts[e].insert(mid);
                close_sigma(parts, &mut cuts)?;
            }
        }
    }
    Err(Error::Partition("too many reflection refinements".into()))
}

fn close_sigma<V>(parts: &[Partition<V>], cuts: &mut [BTreeSet<Rational>]) -> Result<()> {
    loop {
        let mut changed = false;
        for p in parts {
            for fam in &p.families {
                for cj in &fam.cells {
                    let inside: Vec<Rational> =
                        open_range(&cuts[cj.edge], &cj.lo, &cj.hi).cloned().collect();
                    for o in inside {
                        let r = cj.map.inverse_at(&o);
                        for ck in &fam.cells {
                            changed |= cuts[ck.edge].insert(ck.map.eval(&r));
                        }
                    }
                }
            }
        }
        if cuts.iter().map(BTreeSet::len).sum::<usize>() > MAX_CUTS {
            return Err(Error::Partition(format!("partition closure exceeded {MAX_CUTS} cuts")));
        }
        if !changed {
            return Ok(());
        }
    }
}

type SigmaAssembly = std::result::Result<Vec<SigmaFamily>, (EdgeIdx, Rational)>;

fn assemble_sigma<V>(
    _g: &MetricGraph,
    parts: &[Partition<V>],
    cuts: &[BTreeSet<Rational>],
) -> Result<SigmaAssembly> {
    let two = int(2);
    // Source cells as (source, family, cell).
    let mut cells: Vec<(EdgeIdx, Rational, Rational)> = Vec::new();
    let mut containers: Vec<Vec<Option<(usize, usize)>>> = Vec::new();
    for (e, set) in cuts.iter().enumerate() {
        let v: Vec<&Rational> = set.iter().collect();
        for w in v.windows(2) {
            let mut cont = Vec::with_capacity(parts.len());
            for p in parts {
                let hit = p.families.iter().enumerate().find_map(|(f, fam)| {
                    fam.cells
                        .iter()
                        .position(|c| c.edge == e && &c.lo <= w[0] && w[1] <= &c.hi)
                        .map(|k| (f, k))
                });
                cont.push(hit);
            }
            if cont.iter().any(Option::is_some) {
                cells.push((e, w[0].clone(), w[1].clone()));
                containers.push(cont);
            }
        }
    }
    let index: BTreeMap<(EdgeIdx, &Rational), usize> =
        cells.iter().enumerate().map(|(i, (e, lo, _))| ((*e, lo), i)).collect();
    let n = cells.len();
    // Offset transforms between Σ cells induced by source families.
    let mut adj: Vec<Vec<(usize, Affine)>> = vec![Vec::new(); n];
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for (si, cont) in containers[i].iter().enumerate() {
            let Some((f, k)) = cont else { continue };
            let fam = &parts[si].families[*f];
            let ck = &fam.cells[*k];
            let to_r = inverse(&ck.map);
            for ck2 in &fam.cells {
                let t = ck2.map.compose(&to_r);
                let a = t.eval(&cells[i].1);
                let b = t.eval(&cells[i].2);
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let j = *index.get(&(ck2.edge, &lo)).ok_or_else(|| {
                    Error::Partition("multi-source cuts are not closed".into())
                })?;
                if cells[j].2 != hi {
                    return Err(Error::Partition("multi-source cuts are not closed".into()));
                }
                uf.union(i, j);
                adj[i].push((j, t));
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        comps.entry(uf.find(i)).or_default().push(i);
    }
    let mut maps: Vec<Option<Affine>> = vec![None; n];
    let mut families = Vec::new();
    for (_, members) in comps {
        let root = members[0];
        maps[root] = Some(Affine::new(cells[root].1.clone(), 1));
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            let m = maps[i].clone().expect("mapped");
            for (j, t) in &adj[i] {
                let mj = t.compose(&m);
                match &maps[*j] {
                    None => {
                        maps[*j] = Some(mj);
                        queue.push_back(*j);
                    }
                    Some(existing) if *existing == mj => {}
                    Some(_) => {
                        let (e, lo, hi) = &cells[*j];
                        return Ok(Err((*e, (lo + hi) / &two)));
                    }
                }
            }
        }
        let eps = &cells[root].2 - &cells[root].1;
        let mut fam_cells: Vec<SigmaCell> = members
            .iter()
            .map(|&i| SigmaCell {
                edge: cells[i].0,
                lo: cells[i].1.clone(),
                hi: cells[i].2.clone(),
                map: maps[i].clone().expect("mapped"),
            })
            .collect();
        let conts: Vec<&Vec<Option<(usize, usize)>>> = members.iter().map(|&i| &containers[i]).collect();
        let mut classes = sigma_classes(parts, &fam_cells, &conts)?;
        // Orientation: the latest time cell of the first active source runs forward in r.
        if let Some(first) = classes.first().map(|c| c.source) {
            let mut latest: Option<(Rational, i8)> = None;
            for cl in classes.iter().filter(|c| c.source == first) {
                for tc in &parts[first].families[cl.family].times {
                    let tau = tc.map.compose(&cl.r_map);
                    let (lo, _) = tau.range(&eps);
                    if latest.as_ref().is_none_or(|(l, _)| &lo > l) {
                        latest = Some((lo, tau.sign));
                    }
                }
            }
            if latest.is_some_and(|(_, s)| s < 0) {
                for c in fam_cells.iter_mut() {
                    c.map = flipped(&c.map, &eps);
                }
                classes = sigma_classes(parts, &fam_cells, &conts)?;
            }
        }
        families.push(SigmaFamily {
            eps,
            cells: fam_cells,
            classes,
        });
    }
    Ok(Ok(families))
}

fn sigma_classes<V>(
    parts: &[Partition<V>],
    cells: &[SigmaCell],
    containers: &[&Vec<Option<(usize, usize)>>],
) -> Result<Vec<SigmaClass>> {
    let mut classes: BTreeMap<(usize, usize, Affine), Vec<Option<usize>>> = BTreeMap::new();
    for (j, cell) in cells.iter().enumerate() {
        for (si, cont) in containers[j].iter().enumerate() {
            let Some((f, k)) = cont else { continue };
            let ck = &parts[si].families[*f].cells[*k];
            let r_map = inverse(&ck.map).compose(&cell.map);
            let slot = classes
                .entry((si, *f, r_map))
                .or_insert_with(|| vec![None; cells.len()]);
            slot[j] = Some(*k);
        }
    }
    let mut out = Vec::new();
    for ((source, family, r_map), cell_map) in classes {
        let m = parts[source].families[family].cells.len();
        let mut hit: Vec<usize> = cell_map.iter().flatten().copied().collect();
        hit.sort_unstable();
        if hit != (0..m).collect::<Vec<_>>() {
            return Err(Error::Partition(
                "a source family is only partly visible in a multi-source family".into(),
            ));
        }
        out.push(SigmaClass {
            source,
            family,
            r_map,
            cell_map,
        });
    }
    Ok(out)
}

impl SigmaPartition {
    pub fn locate(&self, g: &MetricGraph, x: &GraphPoint) -> Result<(usize, usize, Rational)> {
        if self.critical.contains(x) || self.refinements.contains(x) {
            return Err(Error::Partition(format!("{} is a critical point", g.label(x))));
        }
        if let GraphPoint::Interior { edge, offset } = x {
            for (f, fam) in self.families.iter().enumerate() {
                for (k, c) in fam.cells.iter().enumerate() {
                    if c.edge == *edge && &c.lo < offset && offset < &c.hi {
                        return Ok((f, k, c.map.inverse_at(offset)));
                    }
                }
            }
        }
        Err(Error::Partition(format!("{} is outside the partition", g.label(x))))
    }

    /// `Λ_Σ[x]`: one point per cell of the family of `x`.
    pub fn determination_set(&self, g: &MetricGraph, x: &GraphPoint) -> Result<Vec<GraphPoint>> {
        let (f, _, r) = self.locate(g, x)?;
        Ok(self.families[f].cells.iter().map(|c| c.point(g, &r)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::star;
    use crate::hydra::propagate;
    use crate::rational::frac;

    fn star3() -> MetricGraph {
        star(&[int(2), int(3), int(10)]).unwrap()
    }

    #[test]
    fn union_find_groups() {
        let mut uf = UnionFind::new(5);
        uf.union(0, 3);
        uf.union(3, 4);
        assert_eq!(uf.find(4), uf.find(0));
        assert_ne!(uf.find(1), uf.find(0));
    }

    #[test]
    fn before_the_vertex_there_is_one_family() {
        let g = star3();
        let h = propagate(&g, 1, &int(1)).unwrap();
        let p = families(&g, &int(1), &h.segments).unwrap();
        assert_eq!(p.families.len(), 1);
        let f = &p.families[0];
        assert_eq!(f.eps, int(1));
        assert_eq!(f.times[0].map, Affine::new(int(0), 1));
        assert_eq!(p.critical, vec![GraphPoint::Vertex(1), g.point(0, int(1)).unwrap()]);
        let x = g.point(0, frac(1, 3)).unwrap();
        let (lambda, xi) = p.determination_set(&g, &x).unwrap();
        assert_eq!(lambda, vec![x]);
        assert_eq!(xi, vec![frac(1, 3)]);
    }

    #[test]
    fn transmitted_branches_share_a_family() {
        let g = star3();
        let t = frac(9, 4);
        let h = propagate(&g, 1, &t).unwrap();
        let p = families(&g, &t, &h.segments).unwrap();
        let x = g.point(1, frac(23, 8)).unwrap();
        let (lambda, xi) = p.determination_set(&g, &x).unwrap();
        assert_eq!(xi, vec![frac(15, 8), frac(17, 8)]);
        assert!(lambda.contains(&g.point(0, frac(15, 8)).unwrap()));
        assert!(lambda.contains(&g.point(2, frac(79, 8)).unwrap()));
        assert!(p.critical.contains(&GraphPoint::Vertex(0)));
        assert!(p.critical.contains(&g.point(0, frac(7, 4)).unwrap()));
        assert!(p.determination_set(&g, &GraphPoint::Vertex(0)).is_err());
    }

    #[test]
    fn point_closure_matches_cells() {
        let g = star3();
        let t = frac(11, 4);
        let h = propagate(&g, 1, &t).unwrap();
        let p = families(&g, &t, &h.segments).unwrap();
        let x = g.point(0, frac(15, 8)).unwrap();
        let lat = lattice_closure(&g, &h.segments, &fiber(&g, &h.segments, &x)).unwrap();
        let pos: BTreeSet<GraphPoint> = lat.iter().map(|(p, _)| p.clone()).collect();
        let (lambda, _) = p.determination_set(&g, &x).unwrap();
        assert_eq!(pos, lambda.into_iter().collect());
    }

    #[test]
    fn sigma_requires_sources() {
        let g = star3();
        assert!(sigma_partition::<Rational>(&g, &[], &[]).is_err());
        let h = propagate(&g, 1, &int(1)).unwrap();
        let p = families(&g, &int(1), &h.segments).unwrap();
        assert!(sigma_partition(&g, &[0], &[p]).is_err());
    }
}
