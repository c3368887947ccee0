//! Exact invariant checks over a completed run.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::graph::MetricGraph;
use crate::linalg::QMatrix;
use crate::pipeline::Run;
use crate::rational::{frac, int, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    fn push(&mut self, name: &'static str, failures: Vec<String>, total: usize) {
        let passed = failures.is_empty();
        let detail = if passed {
            format!("{total} cases")
        } else {
            format!("{} of {total} failed; first: {}", failures.len(), failures[0])
        };
        self.checks.push(Check { name, passed, detail });
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs every invariant against `run`.
pub fn verify(g: &MetricGraph, run: &Run) -> Report {
    let mut report = Report::default();
    projections(run, &mut report);
    beta_systems(run, &mut report);
    cell_diameters(run, &mut report);
    tau_maps(run, &mut report);
    finite_speed(g, run, &mut report);
    amplitude_balance(g, run, &mut report);
    eigenvalues(run, &mut report);
    dimensions(run, &mut report);
    report
}

fn projections(run: &Run, report: &mut Report) {
    let (mut bad, mut orth, mut total) = (Vec::new(), Vec::new(), 0);
    for fam in &run.blocks {
        for b in fam {
            for (i, row) in b.rows.iter().enumerate() {
                total += 1;
                let p = &row.projection;
                if !p.is_symmetric() || &(p * p) != p {
                    bad.push(format!("family {} source {} row {}", b.family + 1, b.source + 1, i + 1));
                }
                for (l, other) in b.rows.iter().enumerate().skip(i + 1) {
                    if !(p * &other.projection).is_zero() {
                        orth.push(format!(
                            "family {} source {} rows {} and {}",
                            b.family + 1,
                            b.source + 1,
                            i + 1,
                            l + 1
                        ));
                    }
                }
            }
        }
    }
    report.push("projection idempotency", bad, total);
    report.push("projection orthogonality", orth, total);
}

fn beta_systems(run: &Run, report: &mut Report) {
    let (mut bad, mut total) = (Vec::new(), 0);
    for sr in &run.sources {
        for (f, sys) in sr.schmidt.iter().enumerate() {
            for i in 0..sys.rows.len() {
                total += 1;
                if dot(&sys.rows[i], &sys.rows[i]) != sys.norms2[i] {
                    bad.push(format!("family {} row {}: stored norm", f + 1, i + 1));
                }
                for l in i + 1..sys.rows.len() {
                    if !dot(&sys.rows[i], &sys.rows[l]).is_zero() {
                        bad.push(format!("family {} rows {} and {}", f + 1, i + 1, l + 1));
                    }
                }
            }
            // Schmidt consistency: the rank of α equals the number of nonzero β.
            let alpha = QMatrix::from_rows(sr.extended.amplitudes[f].clone());
            if alpha.rank() != sys.rank() {
                bad.push(format!("family {}: rank of amplitude vectors", f + 1));
            }
        }
    }
    // Normalized block vectors: unit length and B*B equal to the summed projections.
    for fam in &run.blocks {
        for b in fam {
            let mut bb = QMatrix::zeros(b.m, b.m);
            for row in &b.rows {
                total += 1;
                let n2: Rational = row.vector.iter().map(|x| x.square.clone()).sum();
                if !n2.is_one() {
                    bad.push(format!("family {} source {}: unit length", b.family + 1, b.source + 1));
                }
                for j in 0..b.m {
                    for l in 0..b.m {
                        match row.vector[j].product(&row.vector[l]) {
                            Some(v) => bb[(j, l)] += v,
                            None => bad.push("irrational projection entry".into()),
                        }
                    }
                }
            }
            if bb != b.support() {
                bad.push(format!("family {} source {}: B*B", b.family + 1, b.source + 1));
            }
        }
    }
    report.push("beta orthonormality", bad, total);
}

fn cell_diameters(run: &Run, report: &mut Report) {
    let (mut bad, mut total) = (Vec::new(), 0);
    for sr in &run.sources {
        for fam in &sr.partition.families {
            for c in &fam.cells {
                total += 1;
                if c.len() != fam.eps {
                    bad.push(format!("cell on edge {} at {}", c.edge, c.lo));
                }
            }
        }
        for fam in &sr.efficient_partition.families {
            for c in &fam.cells {
                total += 1;
                if c.len() != fam.eps {
                    bad.push(format!("efficient cell on edge {} at {}", c.edge, c.lo));
                }
            }
        }
    }
    for fam in &run.sigma.families {
        for c in &fam.cells {
            total += 1;
            if &c.hi - &c.lo != fam.eps {
                bad.push(format!("multi-source cell on edge {} at {}", c.edge, c.lo));
            }
        }
    }
    report.push("equal cell diameter", bad, total);
}

fn tau_maps(run: &Run, report: &mut Report) {
    let (mut bad, mut total) = (Vec::new(), 0);
    let zero = Rational::zero();
    for sr in &run.sources {
        for fam in &sr.partition.families {
            for c in fam.cells.iter().map(|c| &c.map) {
                total += 1;
                let (lo, hi) = c.range(&fam.eps);
                if c.sign.abs() != 1 || hi - lo != fam.eps {
                    bad.push("cell parametrization".into());
                }
            }
            for tc in &fam.times {
                total += 1;
                if tc.map.sign.abs() != 1 || tc.map.range(&fam.eps) != (tc.lo.clone(), tc.hi.clone()) {
                    bad.push(format!("time cell ({}, {})", tc.lo, tc.hi));
                }
            }
        }
    }
    for fam in &run.blocks {
        for b in fam {
            for row in &b.rows {
                total += 1;
                let (lo, hi) = row.tau.range(&b.eps);
                if row.tau.sign.abs() != 1 || lo < zero || hi > run.horizon {
                    bad.push(format!("family {} source {}: τ = {}", b.family + 1, b.source + 1, row.tau));
                }
            }
        }
    }
    report.push("tau slope and range", bad, total);
}

fn finite_speed(g: &MetricGraph, run: &Run, report: &mut Report) {
    let (mut bad, mut total) = (Vec::new(), 0);
    for sr in &run.sources {
        let src = crate::graph::GraphPoint::Vertex(sr.source);
        for s in &sr.hydra.segments {
            for (o, t) in [(&s.o0, &s.t0), (&s.o1, &s.t1)] {
                total += 1;
                let ok = g
                    .point(s.edge, o.clone())
                    .and_then(|p| g.distance(&src, &p))
                    .map(|d| &d <= t && t <= &run.horizon);
                if ok != Ok(true) {
                    bad.push(format!("segment on edge {} at t = {t}", s.edge));
                }
            }
        }
    }
    report.push("finite speed", bad, total);
}

fn amplitude_balance(g: &MetricGraph, run: &Run, report: &mut Report) {
    let (mut bad, mut total) = (Vec::new(), 0);
    for sr in &run.sources {
        for ev in &sr.hydra.events {
            if ev.incoming.is_empty() {
                continue;
            }
            total += 1;
            let inc: BTreeMap<usize, &Rational> = ev.incoming.iter().map(|(e, a)| (*e, a)).collect();
            let out: BTreeMap<usize, &Rational> = ev.outgoing.iter().map(|(e, a)| (*e, a)).collect();
            let zero = Rational::zero();
            let traces: Vec<Rational> = g
                .incident(ev.vertex)
                .iter()
                .map(|e| inc.get(e).copied().unwrap_or(&zero) + out.get(e).copied().unwrap_or(&zero))
                .collect();
            let flux: Rational = g
                .incident(ev.vertex)
                .iter()
                .map(|e| out.get(e).copied().unwrap_or(&zero) - inc.get(e).copied().unwrap_or(&zero))
                .sum();
            let ok = if g.is_boundary(ev.vertex) {
                traces.iter().all(Zero::is_zero)
            } else {
                traces.windows(2).all(|w| w[0] == w[1]) && flux.is_zero()
            };
            if !ok {
                bad.push(format!("{} at t = {}", g.vertex(ev.vertex).id, ev.time));
            }
        }
    }
    report.push("vertex amplitude balance", bad, total);
}

fn eigenvalues(run: &Run, report: &mut Report) {
    let (mut bad, mut total) = (Vec::new(), 0);
    let samples = [int(0), frac(1, 3), frac(1, 2), frac(5, 7), int(1)];
    for fam in &run.blocks {
        for b in fam {
            for s in &samples {
                let r = s * &b.eps;
                let Ok(e) = b.evaluate(&r) else {
                    bad.push(format!("family {}: evaluation at {r}", b.family + 1));
                    continue;
                };
                total += 1;
                if !e.is_symmetric() {
                    bad.push(format!("family {}: asymmetric at {r}", b.family + 1));
                }
                for row in &b.rows {
                    if &e * &row.projection != row.projection.scale(&row.tau.eval(&r)) {
                        bad.push(format!("family {}: eigenvalue at {r}", b.family + 1));
                    }
                }
                let rest = &QMatrix::identity(b.m) - &b.support();
                if !(&e * &rest).is_zero() {
                    bad.push(format!("family {}: support at {r}", b.family + 1));
                }
            }
        }
    }
    report.push("eikonal eigenvalues", bad, total);
}

fn dimensions(run: &Run, report: &mut Report) {
    let (mut bad, mut total) = (Vec::new(), 0);
    for fa in &run.descriptor.families {
        let decs = std::iter::once((&fa.fiber, &fa.decomposition))
            .chain(fa.ends.iter().map(|e| (&e.algebra, &e.decomposition)));
        for (alg, dec) in decs {
            total += 1;
            if !alg.is_closed() {
                bad.push(format!("family {}: algebra not closed", fa.family + 1));
            }
            if !dec.real_type {
                bad.push(format!("family {}: not of real type", fa.family + 1));
                continue;
            }
            let kernel = fa.m - dec.unit_rank;
            let sum_n2: usize = dec.blocks.iter().map(|(n, _)| n * n).sum();
            let sum_k2: usize = dec.blocks.iter().map(|(_, k)| k * k).sum();
            let sum_nk: usize = dec.blocks.iter().map(|(n, k)| n * k).sum();
            if sum_n2 != alg.dim()
                || sum_k2 + kernel * kernel != dec.commutant_dim
                || sum_nk != dec.unit_rank
                || dec.blocks.len() != dec.center_dim
            {
                bad.push(format!("family {}: block dimensions", fa.family + 1));
            }
        }
        total += 1;
        if !fa.ends.iter().all(|e| fa.fiber.contains_algebra(&e.algebra)) {
            bad.push(format!("family {}: endpoint outside fiber", fa.family + 1));
        }
    }
    report.push("block dimension equalities", bad, total);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::star;
    use crate::pipeline::run;

    #[test]
    fn early_star_passes() {
        let g = star(&[int(2), int(3), int(10)]).unwrap();
        let r = run(&g, &[1, 2], &int(1), 0).unwrap();
        let rep = verify(&g, &r);
        assert!(rep.all_passed(), "{:?}", rep.failures());
        assert!(rep.checks.len() >= 9);
    }
}
