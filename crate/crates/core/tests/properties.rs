use std::collections::BTreeSet;

use graph_eikonal::eikonal::{apply_projection, schmidt};
use graph_eikonal::graph::{star, GraphPoint};
use graph_eikonal::linalg::QMatrix;
use graph_eikonal::partition::{fiber, lattice_closure};
use graph_eikonal::pipeline::run;
use graph_eikonal::poly::{Piece, PiecewisePoly, Poly};
use graph_eikonal::rational::{fmt_rational, frac, int, parse_rational, Rational};
use graph_eikonal::verify::verify;
use graph_eikonal::MetricGraph;
use num_traits::Zero;
use proptest::prelude::*;

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn star_config() -> impl Strategy<Value = (Vec<i64>, i64)> {
    (prop::collection::vec(2i64..=12, 3), 1i64..=16)
}

fn build(halves: &[i64]) -> MetricGraph {
    let lengths: Vec<Rational> = halves.iter().map(|&k| frac(k, 2)).collect();
    star(&lengths).unwrap()
}

fn poly_strategy() -> impl Strategy<Value = PiecewisePoly> {
    (prop::collection::vec(-3i64..=3, 1..=3), 0i64..=3).prop_map(|(c, s)| {
        PiecewisePoly::new(vec![Piece {
            start: frac(s, 8),
            end: int(1),
            poly: Poly::new(c.into_iter().map(int).collect()),
        }])
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_text_round_trips(n in -100_000i64..100_000, d in 1i64..10_000) {
        let q = frac(n, d);
        prop_assert_eq!(parse_rational(&fmt_rational(&q)).unwrap(), q);
    }

    #[test]
    fn schmidt_rows_are_orthogonal(rows in prop::collection::vec(prop::collection::vec(-3i64..=3, 3), 1..=4)) {
        let alpha: Vec<Vec<Rational>> = rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
        let s = schmidt(&alpha);
        for i in 0..s.rows.len() {
            prop_assert_eq!(dot(&s.rows[i], &s.rows[i]), s.norms2[i].clone());
            for l in i + 1..s.rows.len() {
                prop_assert!(dot(&s.rows[i], &s.rows[l]).is_zero());
            }
        }
        prop_assert_eq!(s.rank(), QMatrix::from_rows(alpha).rank());
    }

    #[test]
    fn star_distances_are_a_metric(halves in prop::collection::vec(1i64..=12, 3..=4), a in 0u32..64, b in 0u32..64, c in 0u32..64) {
        let g = build(&halves);
        let pick = |k: u32| -> GraphPoint {
            let e = k as usize % halves.len();
            g.point(e, frac((k as i64 * 7) % (halves[e] * 8), 16)).unwrap()
        };
        let (x, y, z) = (pick(a), pick(b), pick(c));
        let dxy = g.distance(&x, &y).unwrap();
        prop_assert_eq!(&dxy, &g.distance(&y, &x).unwrap());
        prop_assert!(dxy <= g.distance(&x, &z).unwrap() + g.distance(&z, &y).unwrap());
        prop_assert!(g.distance(&x, &x).unwrap().is_zero());
        let again = MetricGraph::build(&g.to_spec()).unwrap();
        prop_assert_eq!(again, g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_stars_verify((halves, quarters) in star_config()) {
        let g = build(&halves);
        let r = run(&g, &[1, 2], &frac(quarters, 4), 0).unwrap();
        let rep = verify(&g, &r);
        prop_assert!(rep.all_passed(), "{:?}", rep.failures());
    }

    /// Cells of one family are exactly the positions reached by the lattice closure of the fiber.
    #[test]
    fn families_match_lattice_closure((halves, quarters) in star_config(), pick in 0u32..1000) {
        let g = build(&halves);
        let r = run(&g, &[1], &frac(quarters, 4), 0).unwrap();
        let sr = &r.sources[0];
        let part = &sr.partition;
        let e = pick as usize % halves.len();
        let x = g.point(e, frac((pick as i64 * 13) % (halves[e] * 50) + 1, 100)).unwrap();
        let Ok((lambda, xi)) = part.determination_set(&g, &x) else { return Ok(()) };
        let segs = &sr.hydra.segments;
        let closure = lattice_closure(&g, segs, &fiber(&g, segs, &x)).unwrap();
        let positions: BTreeSet<GraphPoint> = closure.iter().map(|(p, _)| p.clone()).collect();
        let times: BTreeSet<Rational> = closure.iter().map(|(_, t)| t.clone()).collect();
        prop_assert_eq!(lambda.into_iter().collect::<BTreeSet<_>>(), positions);
        prop_assert_eq!(xi.into_iter().collect::<BTreeSet<_>>(), times);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn block_projection_is_idempotent(ys in prop::collection::vec(poly_strategy(), 3)) {
        let g = star(&[int(2), int(3), int(10)]).unwrap();
        let r = run(&g, &[1, 2], &int(4), 0).unwrap();
        for fam in &r.blocks {
            for b in fam {
                let y: Vec<PiecewisePoly> = ys.iter().cycle().take(b.m).cloned().collect();
                let once = apply_projection(b, &y).unwrap();
                let twice = apply_projection(b, &once).unwrap();
                for (a, c) in once.iter().zip(&twice) {
                    prop_assert!(a.same_function(c));
                }
            }
        }
    }
}

#[test]
fn decimal_and_malformed_rationals_are_rejected() {
    for s in ["1.5", "", "1/0", "/2", "2/", "--1", "1/-2", "a"] {
        assert!(parse_rational(s).is_err(), "{s:?}");
    }
    assert_eq!(parse_rational(" -3/6 ").unwrap(), frac(-1, 2));
}
