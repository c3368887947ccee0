//! Particle dynamics of the fundamental solution and the space-time hydras built from it.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};

use crate::eikonal::Schmidt;
use crate::error::{Error, Result};
use crate::graph::{EdgeIdx, GraphPoint, MetricGraph, VertexIdx};
use crate::partition::Partition;
use crate::poly::PiecewisePoly;
use crate::rational::{int, Rational, SignedSqrt};

/// Upper bound on emitted segments before propagation gives up.
const MAX_SEGMENTS: usize = 200_000;

/// Space-time segment of slope ±1 on one edge, carrying a constant value on its interior.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Segment<V> {
    pub edge: EdgeIdx,
    pub t0: Rational,
    pub o0: Rational,
    pub t1: Rational,
    pub o1: Rational,
    pub value: V,
}

pub type HydraSegment = Segment<Rational>;

impl<V> Segment<V> {
    /// `+1` if the offset grows with time.
    pub fn dir(&self) -> i8 {
        if self.o1 > self.o0 {
            1
        } else {
            -1
        }
    }

    pub fn offset_at(&self, t: &Rational) -> Rational {
        if self.dir() > 0 {
            &self.o0 + (t - &self.t0)
        } else {
            &self.o0 - (t - &self.t0)
        }
    }

    pub fn time_at(&self, o: &Rational) -> Rational {
        if self.dir() > 0 {
            &self.t0 + (o - &self.o0)
        } else {
            &self.t0 + (&self.o0 - o)
        }
    }

    /// Offsets covered, as `(min, max)`.
    pub fn offset_range(&self) -> (&Rational, &Rational) {
        if self.o0 <= self.o1 {
            (&self.o0, &self.o1)
        } else {
            (&self.o1, &self.o0)
        }
    }

    pub fn covers_offset(&self, o: &Rational) -> bool {
        let (a, b) = self.offset_range();
        a <= o && o <= b
    }

    pub fn covers_time(&self, t: &Rational) -> bool {
        &self.t0 <= t && t <= &self.t1
    }

    pub fn with_value<W>(&self, value: W) -> Segment<W> {
        Segment {
            edge: self.edge,
            t0: self.t0.clone(),
            o0: self.o0.clone(),
            t1: self.t1.clone(),
            o1: self.o1.clone(),
            value,
        }
    }
}

/// Scattering event at a vertex: summed incoming and emitted amplitudes per edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexEvent {
    pub vertex: VertexIdx,
    pub time: Rational,
    pub incoming: Vec<(EdgeIdx, Rational)>,
    pub outgoing: Vec<(EdgeIdx, Rational)>,
}

/// A space-time point `(x, t)`.
pub type StPoint = (GraphPoint, Rational);

/// Truncated hydra of one boundary source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hydra {
    pub source: VertexIdx,
    pub horizon: Rational,
    pub segments: Vec<HydraSegment>,
    pub events: Vec<VertexEvent>,
    pub corners: Vec<StPoint>,
}

/// Simulates the particles launched from boundary vertex `gamma` up to time `horizon`.
pub fn propagate(g: &MetricGraph, gamma: VertexIdx, horizon: &Rational) -> Result<Hydra> {
    if gamma >= g.vertices().len() || !g.is_boundary(gamma) {
        return Err(Error::Hydra(format!("source {gamma} is not a boundary vertex")));
    }
    if !horizon.is_positive() {
        return Err(Error::Hydra("horizon T must be positive".into()));
    }
    let mut pending: BTreeMap<(Rational, VertexIdx), BTreeMap<EdgeIdx, Rational>> = BTreeMap::new();
    let mut segments = Vec::new();
    let mut events = Vec::new();

    let launch_edge = g.incident(gamma)[0];
    events.push(VertexEvent {
        vertex: gamma,
        time: Rational::zero(),
        incoming: vec![],
        outgoing: vec![(launch_edge, int(1))],
    });
    emit(g, gamma, launch_edge, &Rational::zero(), int(1), horizon, &mut segments, &mut pending);

    while let Some(((time, w), incoming)) = pending.pop_first() {
        let incoming: Vec<(EdgeIdx, Rational)> = incoming.into_iter().collect();
        let outgoing = scatter(g, w, &incoming);
        if time < *horizon {
            for (e, a) in &outgoing {
                if !a.is_zero() {
                    emit(g, w, *e, &time, a.clone(), horizon, &mut segments, &mut pending);
                }
            }
        }
        events.push(VertexEvent {
            vertex: w,
            time,
            incoming,
            outgoing,
        });
        if segments.len() > MAX_SEGMENTS {
            return Err(Error::Hydra(format!(
                "more than {MAX_SEGMENTS} segments before T = {horizon}"
            )));
        }
    }
    segments.sort();
    let corners = corner_points(g, &segments);
    Ok(Hydra {
        source: gamma,
        horizon: horizon.clone(),
        segments,
        events,
        corners,
    })
}

/// Outgoing amplitudes at a vertex. Boundary vertices reflect with a sign change;
/// an inner vertex of valency μ sends `(2/μ)·Σ a - a_e` back into each edge `e`.
pub fn scatter(g: &MetricGraph, w: VertexIdx, incoming: &[(EdgeIdx, Rational)]) -> Vec<(EdgeIdx, Rational)> {
    if g.is_boundary(w) {
        return incoming.iter().map(|(e, a)| (*e, -a.clone())).collect();
    }
    let mu = int(g.valency(w) as i64);
    let total: Rational = incoming.iter().map(|(_, a)| a.clone()).sum();
    let share = int(2) * total / mu;
    g.incident(w)
        .iter()
        .map(|&e| {
            let inc = incoming
                .iter()
                .find(|(f, _)| *f == e)
                .map_or_else(Rational::zero, |(_, a)| a.clone());
            (e, &share - inc)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn emit(
    g: &MetricGraph,
    w: VertexIdx,
    e: EdgeIdx,
    t: &Rational,
    amp: Rational,
    horizon: &Rational,
    segments: &mut Vec<HydraSegment>,
    pending: &mut BTreeMap<(Rational, VertexIdx), BTreeMap<EdgeIdx, Rational>>,
) {
    let edge = g.edge(e);
    let (o0, far, other) = if edge.from == w {
        (Rational::zero(), edge.length.clone(), edge.to)
    } else {
        (edge.length.clone(), Rational::zero(), edge.from)
    };
    let arrival = t + &edge.length;
    if &arrival <= horizon {
        segments.push(Segment {
            edge: e,
            t0: t.clone(),
            o0,
            t1: arrival.clone(),
            o1: far,
            value: amp.clone(),
        });
        *pending
            .entry((arrival, other))
            .or_default()
            .entry(e)
            .or_insert_with(Rational::zero) += amp;
    } else {
        let run = horizon - t;
        let o1 = if edge.from == w { run } else { &edge.length - run };
        segments.push(Segment {
            edge: e,
            t0: t.clone(),
            o0,
            t1: horizon.clone(),
            o1,
            value: amp,
        });
    }
}

/// Interior crossings of opposite-moving segments on the same edge.
pub fn crossings<V>(g: &MetricGraph, segments: &[Segment<V>]) -> Vec<StPoint> {
    let mut by_edge: BTreeMap<EdgeIdx, Vec<&Segment<V>>> = BTreeMap::new();
    for s in segments {
        by_edge.entry(s.edge).or_default().push(s);
    }
    let mut out = BTreeSet::new();
    let two = int(2);
    for (e, segs) in by_edge {
        let len = &g.edge(e).length;
        let up: Vec<_> = segs.iter().filter(|s| s.dir() > 0).collect();
        let down: Vec<_> = segs.iter().filter(|s| s.dir() < 0).collect();
        for a in &up {
            for b in &down {
                // o = a.o0 + (t - a.t0) = b.o0 - (t - b.t0)
                let t = (&b.o0 + &b.t0 - &a.o0 + &a.t0) / &two;
                if !a.covers_time(&t) || !b.covers_time(&t) {
                    continue;
                }
                let o = a.offset_at(&t);
                if o.is_positive() && &o < len {
                    out.insert((GraphPoint::Interior { edge: e, offset: o }, t));
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Corner points of a segment structure: segment endpoints and crossings.
pub fn corner_points<V>(g: &MetricGraph, segments: &[Segment<V>]) -> Vec<StPoint> {
    let mut out: BTreeSet<StPoint> = crossings(g, segments).into_iter().collect();
    for s in segments {
        for (o, t) in [(&s.o0, &s.t0), (&s.o1, &s.t1)] {
            let p = g.point(s.edge, o.clone()).expect("segment inside edge");
            out.insert((p, t.clone()));
        }
    }
    out.into_iter().collect()
}

impl Hydra {
    /// Amplitude `a(x, t)` of a hydra point. Amplitudes of segments through the point add up.
    /// At an inner vertex the value is `(2/μ)·Σ incoming`, which is the common limit along
    /// every incident edge. Boundary points carry 0, except the launch point `(γ, 0)` with 1.
    pub fn amplitude_at(&self, g: &MetricGraph, p: &GraphPoint, t: &Rational) -> Result<Rational> {
        match p {
            GraphPoint::Vertex(w) => {
                let ev = self
                    .events
                    .iter()
                    .find(|e| e.vertex == *w && &e.time == t)
                    .ok_or_else(|| not_on(g, p, t))?;
                if g.is_boundary(*w) {
                    Ok(if *w == self.source && t.is_zero() { int(1) } else { Rational::zero() })
                } else {
                    let total: Rational = ev.incoming.iter().map(|(_, a)| a.clone()).sum();
                    Ok(int(2) * total / int(g.valency(*w) as i64))
                }
            }
            GraphPoint::Interior { edge, offset } => {
                let mut found = false;
                let mut sum = Rational::zero();
                for s in self.segments.iter().filter(|s| s.edge == *edge) {
                    if s.covers_time(t) && &s.offset_at(t) == offset {
                        found = true;
                        sum += &s.value;
                    }
                }
                if found {
                    Ok(sum)
                } else {
                    Err(not_on(g, p, t))
                }
            }
        }
    }

    /// Times at which the hydra passes over `x`.
    pub fn times_over(&self, g: &MetricGraph, x: &GraphPoint) -> Vec<Rational> {
        let mut ts = BTreeSet::new();
        for (e, o) in g.placements(x) {
            for s in self.segments.iter().filter(|s| s.edge == e) {
                if s.covers_offset(&o) {
                    ts.insert(s.time_at(&o));
                }
            }
        }
        ts.into_iter().collect()
    }

    pub fn is_corner_position(&self, x: &GraphPoint) -> bool {
        self.corners.iter().any(|(p, _)| p == x)
    }
}

fn not_on(g: &MetricGraph, p: &GraphPoint, t: &Rational) -> Error {
    Error::Hydra(format!("({}, {t}) is not on the hydra", g.label(p)))
}

/// Exact wave value `u(x, T) = Σ_γ Σ_t a_γ(x, t) φ_γ(T - t)`.
///
/// `controls[i]` drives `hydras[i]`. Points above which a hydra has a corner are rejected,
/// since the finite sum is not well defined there.
pub fn wave_snapshot(
    g: &MetricGraph,
    hydras: &[Hydra],
    controls: &[PiecewisePoly],
    x: &GraphPoint,
) -> Result<Rational> {
    if hydras.len() != controls.len() {
        return Err(Error::Hydra("one control per hydra is required".into()));
    }
    let mut u = Rational::zero();
    for (h, phi) in hydras.iter().zip(controls) {
        if h.is_corner_position(x) {
            return Err(Error::Hydra(format!(
                "{} is a corner position of the hydra from {}",
                g.label(x),
                g.vertex(h.source).id
            )));
        }
        for t in h.times_over(g, x) {
            let a = h.amplitude_at(g, x, &t)?;
            u += a * phi.eval(&(&h.horizon - &t));
        }
    }
    Ok(u)
}

/// Grid segment of an extended hydra: cell `k` paired with time cell `i` of one family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSegment {
    pub family: usize,
    pub time: usize,
    pub cell: usize,
    pub segment: HydraSegment,
    pub on_hydra: bool,
}

/// The hydra enlarged to the full grids `Λ[x] × Ξ[x]`, amplitude extended by zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtendedHydra {
    pub source: VertexIdx,
    pub horizon: Rational,
    pub grid: Vec<GridSegment>,
    /// `amplitudes[f][i][k] = ã(x_k, t_i)` for family `f`.
    pub amplitudes: Vec<Vec<Vec<Rational>>>,
}

/// Materializes the grid over every family of `part`, the partition of `h`.
pub fn build_extended_hydra(h: &Hydra, part: &Partition<Rational>) -> Result<ExtendedHydra> {
    let mut grid = Vec::new();
    let mut amplitudes = Vec::new();
    for (f, fam) in part.families.iter().enumerate() {
        let mut table = vec![vec![Rational::zero(); fam.cells.len()]; fam.times.len()];
        for (i, tc) in fam.times.iter().enumerate() {
            for (k, cell) in fam.cells.iter().enumerate() {
                let seg = grid_segment(cell.edge, &cell.map, &tc.map, &fam.eps);
                let value = fam.entries.get(&(i, k)).cloned();
                let on_hydra = value.is_some();
                let a = value.unwrap_or_else(Rational::zero);
                if on_hydra {
                    // The grid line must be the hydra subsegment itself.
                    let mid_t = tc.map.eval(&(&fam.eps / int(2)));
                    let mid_o = cell.map.eval(&(&fam.eps / int(2)));
                    let hit = h.segments.iter().any(|s| {
                        s.edge == cell.edge && s.covers_time(&mid_t) && s.offset_at(&mid_t) == mid_o
                    });
                    if !hit {
                        return Err(Error::Partition(format!(
                            "partition inconsistent with hydra in family {}",
                            f + 1
                        )));
                    }
                }
                table[i][k] = a.clone();
                grid.push(GridSegment {
                    family: f,
                    time: i,
                    cell: k,
                    segment: seg.with_value(a),
                    on_hydra,
                });
            }
        }
        amplitudes.push(table);
    }
    Ok(ExtendedHydra {
        source: h.source,
        horizon: h.horizon.clone(),
        grid,
        amplitudes,
    })
}

fn grid_segment(
    edge: EdgeIdx,
    cell_map: &crate::rational::Affine,
    time_map: &crate::rational::Affine,
    eps: &Rational,
) -> Segment<()> {
    let z = Rational::zero();
    let (ta, tb) = (time_map.eval(&z), time_map.eval(eps));
    let (oa, ob) = (cell_map.eval(&z), cell_map.eval(eps));
    if ta < tb {
        Segment { edge, t0: ta, o0: oa, t1: tb, o1: ob, value: () }
    } else {
        Segment { edge, t0: tb, o0: ob, t1: ta, o1: oa, value: () }
    }
}

impl ExtendedHydra {
    /// `ã(x, t)`: the amplitude on the hydra, zero on the added grid points.
    pub fn amplitude_at(&self, g: &MetricGraph, x: &GraphPoint, t: &Rational) -> Option<Rational> {
        for (e, o) in g.placements(x) {
            for gs in &self.grid {
                let s = &gs.segment;
                if s.edge == e && s.covers_time(t) && s.offset_at(t) == o {
                    return Some(s.value.clone());
                }
            }
        }
        None
    }
}

/// Support of the normalized amplitude function `b`, with collinear equal-valued pieces merged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EfficientHydra {
    pub source: VertexIdx,
    pub horizon: Rational,
    pub segments: Vec<Segment<SignedSqrt>>,
}

/// Keeps the grid segments where `b(x_k, t_i) = β^i_k / |β^i|` is nonzero.
pub fn build_efficient_hydra(ext: &ExtendedHydra, schmidt: &[Schmidt]) -> Result<EfficientHydra> {
    if schmidt.len() != ext.amplitudes.len() {
        return Err(Error::Eikonal("one orthogonal system per family is required".into()));
    }
    let mut segs = Vec::new();
    for gs in &ext.grid {
        let sys = &schmidt[gs.family];
        let b = sys.normalized(gs.time, gs.cell);
        if !b.is_zero() {
            segs.push(gs.segment.with_value(b));
        }
    }
    Ok(EfficientHydra {
        source: ext.source,
        horizon: ext.horizon.clone(),
        segments: merge_collinear(segs),
    })
}

/// Joins segments that continue each other on one line with the same value.
pub fn merge_collinear<V: Clone + Ord>(mut segs: Vec<Segment<V>>) -> Vec<Segment<V>> {
    segs.sort();
    let mut out: Vec<Segment<V>> = Vec::new();
    let mut used = vec![false; segs.len()];
    for i in 0..segs.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut cur = segs[i].clone();
        loop {
            let next = (0..segs.len()).find(|&j| {
                !used[j]
                    && segs[j].edge == cur.edge
                    && segs[j].t0 == cur.t1
                    && segs[j].o0 == cur.o1
                    && segs[j].dir() == cur.dir()
                    && segs[j].value == cur.value
            });
            match next {
                Some(j) => {
                    used[j] = true;
                    cur.t1 = segs[j].t1.clone();
                    cur.o1 = segs[j].o1.clone();
                }
                None => break,
            }
        }
        out.push(cur);
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::star;
    use crate::poly::Poly;
    use crate::rational::frac;

    fn star3() -> MetricGraph {
        star(&[int(2), int(3), int(10)]).unwrap()
    }

    fn g(gr: &MetricGraph, id: &str) -> VertexIdx {
        gr.vertex_index(id).unwrap()
    }

    #[test]
    fn single_particle_before_the_vertex() {
        let gr = star3();
        let h = propagate(&gr, g(&gr, "g1"), &int(1)).unwrap();
        assert_eq!(
            h.segments,
            vec![Segment { edge: 0, t0: int(0), o0: int(0), t1: int(1), o1: int(1), value: int(1) }]
        );
    }

    #[test]
    fn scattering_at_the_inner_vertex() {
        let gr = star3();
        let h = propagate(&gr, g(&gr, "g1"), &frac(9, 4)).unwrap();
        let mut amps: Vec<(EdgeIdx, Rational)> =
            h.segments.iter().map(|s| (s.edge, s.value.clone())).collect();
        amps.sort();
        assert_eq!(
            amps,
            vec![(0, frac(-1, 3)), (0, int(1)), (1, frac(2, 3)), (2, frac(2, 3))]
        );
        let v = GraphPoint::Vertex(g(&gr, "v"));
        assert_eq!(h.amplitude_at(&gr, &v, &int(2)).unwrap(), frac(2, 3));
    }

    #[test]
    fn boundary_reflection_flips_sign() {
        let gr = star(&[int(1)]).unwrap();
        let h = propagate(&gr, 1, &frac(3, 2)).unwrap();
        assert_eq!(h.segments.len(), 2);
        assert_eq!(h.segments[1].value, int(-1));
        assert_eq!(h.segments[1].o1, frac(1, 2));
        let far = GraphPoint::Vertex(0);
        assert_eq!(h.amplitude_at(&gr, &far, &int(1)).unwrap(), int(0));
        assert_eq!(h.amplitude_at(&gr, &GraphPoint::Vertex(1), &int(0)).unwrap(), int(1));
        assert!(h.amplitude_at(&gr, &far, &frac(1, 2)).is_err());
    }

    #[test]
    fn crossing_amplitudes_add() {
        // Lengths (2, 1, 10): the reflection from g2 meets the reflection from v on e1.
        let gr = star(&[int(2), int(1), int(10)]).unwrap();
        let h = propagate(&gr, g(&gr, "g1"), &int(6)).unwrap();
        let mid = gr.point(0, int(1)).unwrap();
        assert_eq!(h.amplitude_at(&gr, &mid, &int(5)).unwrap(), frac(-1, 9));
        assert!(h.corners.contains(&(mid, int(5))));
    }

    #[test]
    fn rejects_bad_sources() {
        let gr = star3();
        assert!(propagate(&gr, g(&gr, "v"), &int(1)).is_err());
        assert!(propagate(&gr, g(&gr, "g1"), &int(0)).is_err());
    }

    #[test]
    fn snapshot_on_a_single_edge() {
        let gr = star(&[int(1)]).unwrap();
        let h = propagate(&gr, 1, &frac(1, 2)).unwrap();
        let phi = PiecewisePoly::global(int(0), frac(1, 2), Poly::new(vec![int(0), int(1)]));
        let x = gr.point(0, frac(1, 4)).unwrap();
        let u = wave_snapshot(&gr, std::slice::from_ref(&h), std::slice::from_ref(&phi), &x).unwrap();
        assert_eq!(u, frac(1, 4));
        let front = gr.point(0, frac(1, 2)).unwrap();
        assert!(wave_snapshot(&gr, &[h], &[phi], &front).is_err());
    }

    #[test]
    fn merge_joins_continuations() {
        let a = Segment { edge: 0, t0: int(0), o0: int(0), t1: int(1), o1: int(1), value: 1 };
        let b = Segment { edge: 0, t0: int(1), o0: int(1), t1: int(2), o1: int(2), value: 1 };
        let c = Segment { edge: 0, t0: int(2), o0: int(2), t1: int(3), o1: int(3), value: 2 };
        let m = merge_collinear(vec![c.clone(), b, a]);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].t1, int(2));
        assert_eq!(m[1], c);
    }
}
