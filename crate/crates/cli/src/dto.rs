//! Serializable result envelope. Every rational is written as an exact string.

use serde::{Deserialize, Serialize};

use graph_eikonal::algebra::{AlgebraDescriptor, Link};
use graph_eikonal::eikonal::EikonalBlock;
use graph_eikonal::hydra::{Segment, StPoint};
use graph_eikonal::linalg::QMatrix;
use graph_eikonal::partition::{Partition, SigmaPartition};
use graph_eikonal::pipeline::Run;
use graph_eikonal::rational::fmt_rational;
use graph_eikonal::verify::Report;
use graph_eikonal::MetricGraph;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub graph: String,
    pub sigma: Vec<String>,
    #[serde(rename = "T")]
    pub horizon: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub command: String,
    pub config: ConfigEcho,
    pub output: Output,
    pub diagnostics: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Output {
    Hydra(Vec<HydraDto>),
    Partition(PartitionDto),
    Eikonal(Vec<BlockDto>),
    Classify(DescriptorDto),
    Wave(Vec<WaveValueDto>),
    Verify(Vec<CheckDto>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentDto {
    pub edge: String,
    pub t0: String,
    pub o0: String,
    pub t1: String,
    pub o1: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StPointDto {
    pub point: String,
    pub t: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HydraDto {
    pub source: String,
    pub segments: Vec<SegmentDto>,
    pub corners: Vec<StPointDto>,
    pub efficient: Vec<SegmentDto>,
    pub critical: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDto {
    pub edge: String,
    pub lo: String,
    pub hi: String,
    pub offset: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TauDto {
    pub source: String,
    pub tau: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyDto {
    pub id: usize,
    pub eps: String,
    pub cells: Vec<CellDto>,
    pub taus: Vec<TauDto>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionDto {
    pub critical: Vec<String>,
    pub refinements: Vec<String>,
    pub families: Vec<FamilyDto>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDto {
    pub tau: String,
    pub b: Vec<String>,
    pub projection: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDto {
    pub family: usize,
    pub source: String,
    pub eps: String,
    pub rows: Vec<RowDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointDto {
    pub r: String,
    pub dim: usize,
    pub blocks: Vec<usize>,
    pub full: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyAlgebraDto {
    pub id: usize,
    pub eps: String,
    pub m: usize,
    pub fiber_dim: usize,
    /// `(n_k, multiplicity)`.
    pub fiber_blocks: Vec<(usize, usize)>,
    pub real_type: bool,
    pub ends: Vec<EndpointDto>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkDto {
    pub a: String,
    pub b: String,
    pub glued: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummandDto {
    pub text: String,
    pub families: Vec<usize>,
    pub length: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_blocks: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptorDto {
    pub rendered: String,
    pub summands: Vec<SummandDto>,
    pub families: Vec<FamilyAlgebraDto>,
    pub links: Vec<LinkDto>,
    pub joint_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveValueDto {
    pub point: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckDto {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub fn matrix(m: &QMatrix) -> Vec<Vec<String>> {
    m.to_rows()
        .iter()
        .map(|row| row.iter().map(fmt_rational).collect())
        .collect()
}

pub fn segments<V: std::fmt::Display>(g: &MetricGraph, segs: &[Segment<V>]) -> Vec<SegmentDto> {
    segs.iter()
        .map(|s| SegmentDto {
            edge: g.edge(s.edge).id.clone(),
            t0: fmt_rational(&s.t0),
            o0: fmt_rational(&s.o0),
            t1: fmt_rational(&s.t1),
            o1: fmt_rational(&s.o1),
            value: s.value.to_string(),
        })
        .collect()
}

fn st_points(g: &MetricGraph, pts: &[StPoint]) -> Vec<StPointDto> {
    pts.iter()
        .map(|(p, t)| StPointDto {
            point: g.label(p),
            t: fmt_rational(t),
        })
        .collect()
}

pub fn hydras(g: &MetricGraph, run: &Run) -> Vec<HydraDto> {
    run.sources
        .iter()
        .map(|s| HydraDto {
            source: g.vertex(s.source).id.clone(),
            segments: segments(g, &s.hydra.segments),
            corners: st_points(g, &s.hydra.corners),
            efficient: segments(g, &s.efficient.segments),
            critical: critical(g, &s.partition),
        })
        .collect()
}

fn critical<V>(g: &MetricGraph, p: &Partition<V>) -> Vec<String> {
    p.critical.iter().map(|x| g.label(x)).collect()
}

pub fn partition(g: &MetricGraph, sigma: &SigmaPartition, blocks: &[Vec<EikonalBlock>]) -> PartitionDto {
    PartitionDto {
        critical: sigma.critical.iter().map(|x| g.label(x)).collect(),
        refinements: sigma.refinements.iter().map(|x| g.label(x)).collect(),
        families: sigma
            .families
            .iter()
            .enumerate()
            .map(|(f, fam)| FamilyDto {
                id: f + 1,
                eps: fmt_rational(&fam.eps),
                cells: fam
                    .cells
                    .iter()
                    .map(|c| CellDto {
                        edge: g.edge(c.edge).id.clone(),
                        lo: fmt_rational(&c.lo),
                        hi: fmt_rational(&c.hi),
                        offset: c.map.to_string(),
                    })
                    .collect(),
                taus: blocks[f]
                    .iter()
                    .flat_map(|b| {
                        let id = g.vertex(sigma.sources[b.source]).id.clone();
                        b.rows.iter().map(move |r| TauDto {
                            source: id.clone(),
                            tau: r.tau.to_string(),
                        })
                    })
                    .collect(),
            })
            .collect(),
    }
}

pub fn block(g: &MetricGraph, sigma: &SigmaPartition, b: &EikonalBlock, value: Option<&QMatrix>) -> BlockDto {
    BlockDto {
        family: b.family + 1,
        source: g.vertex(sigma.sources[b.source]).id.clone(),
        eps: fmt_rational(&b.eps),
        rows: b
            .rows
            .iter()
            .map(|r| RowDto {
                tau: r.tau.to_string(),
                b: r.vector.iter().map(ToString::to_string).collect(),
                projection: matrix(&r.projection),
            })
            .collect(),
        value: value.map(matrix),
    }
}

fn slot(s: (usize, usize), d: &AlgebraDescriptor) -> String {
    let end = if s.1 == 0 {
        "0".to_string()
    } else {
        fmt_rational(&d.families[s.0].eps)
    };
    format!("{}@{end}", s.0 + 1)
}

fn link(l: &Link, d: &AlgebraDescriptor) -> LinkDto {
    LinkDto {
        a: slot(l.a, d),
        b: slot(l.b, d),
        glued: l.glued,
    }
}

pub fn descriptor(d: &AlgebraDescriptor) -> DescriptorDto {
    DescriptorDto {
        rendered: d.rendered.clone(),
        summands: d
            .summands
            .iter()
            .map(|s| SummandDto {
                text: s.text.clone(),
                families: s.families.iter().map(|f| f + 1).collect(),
                length: fmt_rational(&s.length),
                endpoint_blocks: s.endpoint_blocks.clone(),
            })
            .collect(),
        families: d
            .families
            .iter()
            .map(|f| FamilyAlgebraDto {
                id: f.family + 1,
                eps: fmt_rational(&f.eps),
                m: f.m,
                fiber_dim: f.fiber.dim(),
                fiber_blocks: f.decomposition.blocks.clone(),
                real_type: f.decomposition.real_type,
                ends: f
                    .ends
                    .iter()
                    .map(|e| EndpointDto {
                        r: fmt_rational(&e.r),
                        dim: e.algebra.dim(),
                        blocks: e.decomposition.sizes(),
                        full: e.full,
                    })
                    .collect(),
            })
            .collect(),
        links: d.links.iter().map(|l| link(l, d)).collect(),
        joint_dim: d.joint_dim,
    }
}

pub fn checks(r: &Report) -> Vec<CheckDto> {
    r.checks
        .iter()
        .map(|c| CheckDto {
            name: c.name.to_string(),
            passed: c.passed,
            detail: c.detail.clone(),
        })
        .collect()
}
