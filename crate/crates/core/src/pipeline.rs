//! End-to-end run for a set of controlled boundary vertices.

use std::collections::BTreeSet;

use num_traits::Signed;

use crate::algebra::{classify, AlgebraDescriptor};
use crate::eikonal::{eikonal_blocks, schmidt, EikonalBlock, Schmidt};
use crate::error::{Error, Result};
use crate::graph::{MetricGraph, VertexIdx};
use crate::hydra::{
    build_efficient_hydra, build_extended_hydra, propagate, EfficientHydra, ExtendedHydra, Hydra,
};
use crate::partition::{build_partition, families, sigma_partition, Partition, SigmaPartition};
use crate::rational::{Rational, SignedSqrt};

/// Everything computed for one source.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceRun {
    pub source: VertexIdx,
    pub hydra: Hydra,
    pub partition: Partition<Rational>,
    pub extended: ExtendedHydra,
    /// One orthogonal system per family of `partition`.
    pub schmidt: Vec<Schmidt>,
    pub efficient: EfficientHydra,
    pub efficient_partition: Partition<SignedSqrt>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub horizon: Rational,
    pub sources: Vec<SourceRun>,
    pub sigma: SigmaPartition,
    /// `blocks[family][source]`.
    pub blocks: Vec<Vec<EikonalBlock>>,
    pub descriptor: AlgebraDescriptor,
    pub diagnostics: Vec<String>,
}

pub fn run_source(g: &MetricGraph, gamma: VertexIdx, horizon: &Rational) -> Result<SourceRun> {
    let hydra = propagate(g, gamma, horizon)?;
    let partition = build_partition(g, horizon, &hydra.segments, &hydra.corners)?;
    let extended = build_extended_hydra(&hydra, &partition)?;
    let schmidt: Vec<Schmidt> = extended.amplitudes.iter().map(|a| schmidt(a)).collect();
    let efficient = build_efficient_hydra(&extended, &schmidt)?;
    let efficient_partition = families(g, horizon, &efficient.segments)?;
    Ok(SourceRun {
        source: gamma,
        hydra,
        partition,
        extended,
        schmidt,
        efficient,
        efficient_partition,
    })
}

/// Resolves comma-separated vertex ids.
pub fn parse_sources(g: &MetricGraph, text: &str) -> Result<Vec<VertexIdx>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|id| {
            g.vertex_index(id)
                .ok_or_else(|| Error::Graph(format!("unknown vertex {id:?}")))
        })
        .collect()
}

pub fn run(g: &MetricGraph, sources: &[VertexIdx], horizon: &Rational, seed: u64) -> Result<Run> {
    if sources.is_empty() {
        return Err(Error::Graph("the controlled set is empty".into()));
    }
    if !horizon.is_positive() {
        return Err(Error::Hydra("horizon T must be positive".into()));
    }
    if sources.iter().collect::<BTreeSet<_>>().len() != sources.len() {
        return Err(Error::Graph("a controlled vertex is listed twice".into()));
    }
    for &s in sources {
        if s >= g.vertices().len() {
            return Err(Error::Graph(format!("vertex index {s} out of range")));
        }
        if !g.is_boundary(s) {
            return Err(Error::Graph(format!("{} is not a boundary vertex", g.vertex(s).id)));
        }
    }
    let runs: Vec<SourceRun> = sources
        .iter()
        .map(|&s| run_source(g, s, horizon))
        .collect::<Result<_>>()?;
    let parts: Vec<Partition<SignedSqrt>> =
        runs.iter().map(|r| r.efficient_partition.clone()).collect();
    let sigma = sigma_partition(g, sources, &parts)?;
    let blocks = eikonal_blocks(&sigma, &parts)?;
    let descriptor = classify(&sigma, &blocks, seed)?;
    let mut diagnostics = degeneracy_notes(g);
    for r in &runs {
        for d in r.partition.diagnostics.iter().chain(&r.efficient_partition.diagnostics) {
            diagnostics.push(format!("{}: {d}", g.vertex(r.source).id));
        }
    }
    diagnostics.extend(sigma.diagnostics.iter().cloned());
    diagnostics.extend(coincident_taus(&blocks));
    diagnostics.extend(descriptor.diagnostics.iter().cloned());
    Ok(Run {
        horizon: horizon.clone(),
        sources: runs,
        sigma,
        blocks,
        descriptor,
        diagnostics,
    })
}

fn degeneracy_notes(g: &MetricGraph) -> Vec<String> {
    let mut out = Vec::new();
    let edges = g.edges();
    for (i, a) in edges.iter().enumerate() {
        for b in &edges[i + 1..] {
            if a.length == b.length {
                out.push(format!("edges {} and {} have equal length {}", a.id, b.id, a.length));
            }
        }
    }
    out
}

fn coincident_taus(blocks: &[Vec<EikonalBlock>]) -> Vec<String> {
    let mut out = Vec::new();
    for (f, fam) in blocks.iter().enumerate() {
        for (a, ba) in fam.iter().enumerate() {
            for bb in &fam[a + 1..] {
                for ra in &ba.rows {
                    if bb.rows.iter().any(|rb| rb.tau == ra.tau) {
                        out.push(format!(
                            "family {}: sources {} and {} share the eigenvalue map {}",
                            f + 1,
                            a + 1,
                            bb.source + 1,
                            ra.tau
                        ));
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::star;
    use crate::rational::int;

    #[test]
    fn rejects_bad_configs() {
        let g = star(&[int(2), int(3), int(10)]).unwrap();
        assert!(run(&g, &[], &int(1), 0).is_err());
        assert!(run(&g, &[1], &int(0), 0).is_err());
        assert!(run(&g, &[1, 1], &int(1), 0).is_err());
        assert!(run(&g, &[0], &int(1), 0).is_err());
        assert!(parse_sources(&g, "g1,zz").is_err());
        assert_eq!(parse_sources(&g, "g1,g2").unwrap(), vec![1, 2]);
    }

    #[test]
    fn early_time_renders_two_half_lines() {
        let g = star(&[int(2), int(3), int(10)]).unwrap();
        let r = run(&g, &[1, 2], &int(1), 0).unwrap();
        assert_eq!(r.descriptor.rendered, "C0[0,1] ⊕ C0[0,1]");
    }
}
