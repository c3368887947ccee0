//! Oracles shared by the integration tests.
#![allow(dead_code)]

use graph_eikonal::linalg::QMatrix;
use graph_eikonal::rational::{int, Rational};
use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Orthogonal projection onto the span of `k` random integer vectors in `R^m`.
pub fn random_projection(rng: &mut ChaCha8Rng, m: usize, k: usize) -> QMatrix {
    let mut ortho: Vec<Vec<Rational>> = Vec::new();
    let mut p = QMatrix::zeros(m, m);
    for _ in 0..k {
        let mut v: Vec<Rational> = (0..m).map(|_| int(rng.gen_range(-2..=2))).collect();
        for w in &ortho {
            let c = dot(&v, w) / dot(w, w);
            for (x, y) in v.iter_mut().zip(w) {
                *x -= &c * y;
            }
        }
        if v.iter().all(Zero::is_zero) {
            continue;
        }
        p = &p + &QMatrix::projection_onto(&v);
        ortho.push(v);
    }
    p
}

/// `m` uniform in 1..=4, one to three projections of uniform random rank 0..=m.
pub fn random_family(rng: &mut ChaCha8Rng) -> (usize, Vec<QMatrix>) {
    let m = rng.gen_range(1..=4);
    let count = rng.gen_range(1..=3);
    let ps = (0..count)
        .map(|_| {
            let k = rng.gen_range(0..=m);
            random_projection(rng, m, k)
        })
        .collect();
    (m, ps)
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Leapfrog solver for the wave equation on a star graph with Dirichlet controls at the
/// boundary ends and the Kirchhoff condition at the center.
///
/// Edge `i` runs from its boundary vertex (offset 0) to the center (offset `lengths[i]`).
pub struct StarWave {
    pub h: f64,
    pub dt: f64,
    /// Nodes `0..=n_i` per edge; the last node of every edge is the center.
    pub u: Vec<Vec<f64>>,
}

impl StarWave {
    pub fn solve(lengths: &[f64], h: f64, horizon: f64, controls: &[&dyn Fn(f64) -> f64]) -> StarWave {
        let dt = h / 2.0;
        let lam2 = (dt / h).powi(2);
        let n: Vec<usize> = lengths.iter().map(|l| (l / h).round() as usize).collect();
        let mut prev: Vec<Vec<f64>> = n.iter().map(|&k| vec![0.0; k + 1]).collect();
        let mut cur = prev.clone();
        let mu = lengths.len() as f64;
        let steps = (horizon / dt).round() as usize;
        for step in 1..steps {
            let t_next = (step + 1) as f64 * dt;
            let mut next = cur.clone();
            for (e, row) in next.iter_mut().enumerate() {
                let c = &cur[e];
                let p = &prev[e];
                for j in 1..n[e] {
                    row[j] = 2.0 * c[j] - p[j] + lam2 * (c[j + 1] - 2.0 * c[j] + c[j - 1]);
                }
                row[0] = controls[e](t_next);
            }
            let uv = cur[0][n[0]];
            let uv_prev = prev[0][n[0]];
            let flux: f64 = (0..n.len()).map(|e| cur[e][n[e] - 1] - uv).sum();
            let v_next = 2.0 * uv - uv_prev + 2.0 * lam2 / mu * flux;
            for (e, row) in next.iter_mut().enumerate() {
                row[n[e]] = v_next;
            }
            prev = cur;
            cur = next;
        }
        StarWave { h, dt, u: cur }
    }

    /// Linear interpolation at `offset` on edge `e`.
    pub fn at(&self, e: usize, offset: f64) -> f64 {
        let row = &self.u[e];
        let x = offset / self.h;
        let j = (x.floor() as usize).min(row.len() - 2);
        let w = x - j as f64;
        (1.0 - w) * row[j] + w * row[j + 1]
    }
}
