//! Amplitude vectors, the Schmidt procedure, projection blocks and eikonal evaluation.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::hydra::ExtendedHydra;
use crate::linalg::QMatrix;
use crate::partition::{Partition, SigmaPartition};
use crate::poly::PiecewisePoly;
use crate::rational::{Affine, Rational, SignedSqrt};

/// Orthogonal system `β` kept unnormalized, with exact squared norms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schmidt {
    pub rows: Vec<Vec<Rational>>,
    pub norms2: Vec<Rational>,
}

impl Schmidt {
    /// `β^i_k / |β^i|`, zero for a vanishing row.
    pub fn normalized(&self, i: usize, k: usize) -> SignedSqrt {
        if self.norms2[i].is_zero() {
            SignedSqrt::zero()
        } else {
            SignedSqrt::normalized(&self.rows[i][k], &self.norms2[i])
        }
    }

    /// `β βᵀ / ⟨β, β⟩`, or the zero matrix.
    pub fn projection(&self, i: usize) -> QMatrix {
        if self.norms2[i].is_zero() {
            QMatrix::zeros(self.rows[i].len(), self.rows[i].len())
        } else {
            QMatrix::projection_onto(&self.rows[i])
        }
    }

    pub fn rank(&self) -> usize {
        self.norms2.iter().filter(|n| !n.is_zero()).count()
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gram–Schmidt in row order; dependent rows become zero.
pub fn schmidt(alpha: &[Vec<Rational>]) -> Schmidt {
    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(alpha.len());
    let mut norms2 = Vec::with_capacity(alpha.len());
    for a in alpha {
        let mut v = a.clone();
        for (b, n) in rows.iter().zip(&norms2) {
            if Zero::is_zero(n) {
                continue;
            }
            let c = dot(a, b) / n;
            for (x, y) in v.iter_mut().zip(b) {
                *x -= &c * y;
            }
        }
        let n = dot(&v, &v);
        rows.push(v);
        norms2.push(n);
    }
    Schmidt { rows, norms2 }
}

/// `α^i_k = ã(x_k, t_i)` for family `f` of the partition behind `ext`.
pub fn amplitude_vectors(
    ext: &ExtendedHydra,
    part: &Partition<Rational>,
    f: usize,
) -> Result<Vec<Vec<Rational>>> {
    let (Some(table), Some(fam)) = (ext.amplitudes.get(f), part.families.get(f)) else {
        return Err(Error::Eikonal(format!("family {} does not exist", f + 1)));
    };
    if table.len() != fam.times.len() || table.iter().any(|row| row.len() != fam.cells.len()) {
        return Err(Error::Eikonal(format!("hydra and family {} disagree", f + 1)));
    }
    Ok(table.clone())
}

/// One time cell of one source family, written in the frame of a multi-source family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockRow {
    /// Index of the source family class inside the multi-source family.
    pub class: usize,
    /// Time cell inside the source family.
    pub time_cell: usize,
    pub tau: Affine,
    /// Normalized amplitude vector, zero-extended to the frame.
    pub vector: Vec<SignedSqrt>,
    pub projection: QMatrix,
}

/// Generator block `E_{γΦ}(r) = Σ_i τ^i(r) P^i` of one source on one family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EikonalBlock {
    pub family: usize,
    pub source: usize,
    pub eps: Rational,
    pub m: usize,
    pub rows: Vec<BlockRow>,
}

impl EikonalBlock {
    pub fn evaluate(&self, r: &Rational) -> Result<QMatrix> {
        if r < &Rational::zero() || r > &self.eps {
            return Err(Error::Eikonal(format!(
                "parameter {r} outside [0, {}] of family {}",
                self.eps,
                self.family + 1
            )));
        }
        let mut e = QMatrix::zeros(self.m, self.m);
        for row in &self.rows {
            e = &e + &row.projection.scale(&row.tau.eval(r));
        }
        Ok(e)
    }

    /// `Σ_i P^i`, the constant projection `B*B`.
    pub fn support(&self) -> QMatrix {
        self.rows
            .iter()
            .fold(QMatrix::zeros(self.m, self.m), |acc, row| &acc + &row.projection)
    }

    /// Rows of `B`: the unit vectors `β^i / |β^i|`.
    pub fn b_matrix(&self) -> Vec<Vec<SignedSqrt>> {
        self.rows.iter().map(|row| row.vector.clone()).collect()
    }

    /// `D(r) = diag(τ^i(r))`.
    pub fn d_matrix(&self, r: &Rational) -> Result<QMatrix> {
        self.evaluate(r)?;
        let n = self.rows.len();
        let mut d = QMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            d[(i, i)] = row.tau.eval(r);
        }
        Ok(d)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// `b bᵀ / Σ b²` computed exactly; fails if an entry is irrational.
fn projection_of(v: &[SignedSqrt]) -> Result<QMatrix> {
    let norm2: Rational = v.iter().map(|b| b.square.clone()).sum();
    let m = v.len();
    let mut p = QMatrix::zeros(m, m);
    if norm2.is_zero() {
        return Ok(p);
    }
    for j in 0..m {
        for l in 0..m {
            let prod = v[j].product(&v[l]).ok_or_else(|| {
                Error::Eikonal("projection entry is not rational".into())
            })?;
            p[(j, l)] = prod / &norm2;
        }
    }
    Ok(p)
}

/// Blocks `[family][source]` on the multi-source partition built from the efficient partitions.
pub fn eikonal_blocks(
    sigma: &SigmaPartition,
    parts: &[Partition<SignedSqrt>],
) -> Result<Vec<Vec<EikonalBlock>>> {
    let mut out = Vec::with_capacity(sigma.families.len());
    for (f, fam) in sigma.families.iter().enumerate() {
        let m = fam.cells.len();
        let mut per_source: Vec<EikonalBlock> = (0..sigma.sources.len())
            .map(|s| EikonalBlock {
                family: f,
                source: s,
                eps: fam.eps.clone(),
                m,
                rows: Vec::new(),
            })
            .collect();
        for (c, class) in fam.classes.iter().enumerate() {
            let gfam = parts
                .get(class.source)
                .and_then(|p| p.families.get(class.family))
                .ok_or_else(|| Error::Eikonal("class refers to a missing family".into()))?;
            for (i, tc) in gfam.times.iter().enumerate() {
                let vector: Vec<SignedSqrt> = class
                    .cell_map
                    .iter()
                    .map(|k| {
                        k.and_then(|k| gfam.entries.get(&(i, k)).cloned())
                            .unwrap_or_else(SignedSqrt::zero)
                    })
                    .collect();
                if vector.iter().all(SignedSqrt::is_zero) {
                    continue;
                }
                let projection = projection_of(&vector)?;
                let norm2: Rational = vector.iter().map(|b| b.square.clone()).sum();
                let vector = vector
                    .iter()
                    .map(|b| SignedSqrt {
                        negative: b.negative,
                        square: &b.square / &norm2,
                    })
                    .collect();
                per_source[class.source].rows.push(BlockRow {
                    class: c,
                    time_cell: i,
                    tau: tc.map.compose(&class.r_map),
                    vector,
                    projection,
                });
            }
        }
        for b in per_source.iter_mut() {
            b.rows.sort_by(|x, y| {
                let (lx, _) = x.tau.range(&b.eps);
                let (ly, _) = y.tau.range(&b.eps);
                lx.cmp(&ly).then(x.class.cmp(&y.class))
            });
        }
        out.push(per_source);
    }
    Ok(out)
}

/// `(Q_Φ y)(x_k(r)) = Σ_i Σ_j P^i_{kj} y_j(r)` for `y` given per cell of the family.
pub fn apply_projection(block: &EikonalBlock, y: &[PiecewisePoly]) -> Result<Vec<PiecewisePoly>> {
    if y.len() != block.m {
        return Err(Error::Eikonal(format!(
            "expected {} cell functions, got {}",
            block.m,
            y.len()
        )));
    }
    let p = block.support();
    Ok((0..block.m)
        .map(|k| {
            let terms: Vec<(Rational, &PiecewisePoly)> = (0..block.m)
                .filter(|&j| !p[(k, j)].is_zero())
                .map(|j| (p[(k, j)].clone(), &y[j]))
                .collect();
            PiecewisePoly::linear_combination(&terms)
        })
        .collect())
}

/// Sum of squared entries of `[a, b]`.
pub fn commutator_norm2(a: &QMatrix, b: &QMatrix) -> Rational {
    a.commutator(b).frobenius2()
}

/// Largest commutator norm over all source pairs, families and the given parameters in `[0, 1]`
/// (scaled to each family's interval).
pub fn max_commutator(blocks: &[Vec<EikonalBlock>], samples: &[Rational]) -> Result<Rational> {
    let mut best = Rational::zero();
    for fam in blocks {
        for (a, ba) in fam.iter().enumerate() {
            for bb in fam.iter().skip(a + 1) {
                for s in samples {
                    if s < &Rational::zero() || s > &Rational::one() {
                        return Err(Error::Eikonal("samples must lie in [0, 1]".into()));
                    }
                    let r = s * &ba.eps;
                    let c = commutator_norm2(&ba.evaluate(&r)?, &bb.evaluate(&r)?);
                    if c > best {
                        best = c;
                    }
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::rational::{frac, int};

    #[test]
    fn schmidt_orthogonal_rows() {
        let s = schmidt(&[vec![int(1), int(0)], vec![int(0), int(1)]]);
        assert_eq!(s.norms2, vec![int(1), int(1)]);
        let s = schmidt(&[vec![int(1), int(1)], vec![int(2), int(2)]]);
        assert_eq!(s.rows[1], vec![int(0), int(0)]);
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn transmitted_pair_projection() {
        let s = schmidt(&[vec![frac(2, 3), frac(2, 3)]]);
        let h = frac(1, 2);
        assert_eq!(s.projection(0), QMatrix::from_rows(vec![vec![h.clone(), h.clone()], vec![h.clone(), h]]));
        assert_eq!(s.normalized(0, 1), SignedSqrt { negative: false, square: frac(1, 2) });
    }

    #[test]
    fn reflected_row_is_orthogonalized() {
        let s = schmidt(&[vec![frac(2, 3), frac(2, 3)], vec![frac(-1, 3), frac(2, 3)]]);
        assert_eq!(dot(&s.rows[0], &s.rows[1]), int(0));
        assert_eq!(s.rank(), 2);
        let p0 = s.projection(0);
        let p1 = s.projection(1);
        assert!((&p0 * &p1).is_zero());
        assert_eq!(&p0 + &p1, QMatrix::identity(2));
    }

    fn block(eps: Rational, rows: Vec<(Affine, Vec<SignedSqrt>)>) -> EikonalBlock {
        let m = rows[0].1.len();
        EikonalBlock {
            family: 0,
            source: 0,
            eps,
            m,
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (tau, vector))| BlockRow {
                    class: 0,
                    time_cell: i,
                    tau,
                    projection: projection_of(&vector).unwrap(),
                    vector,
                })
                .collect(),
        }
    }

    #[test]
    fn evaluation_and_range() {
        let one = SignedSqrt::from_rational(&int(1));
        let b = block(int(1), vec![(Affine::identity(), vec![one, SignedSqrt::zero()])]);
        assert!(b.evaluate(&int(0)).unwrap().is_zero());
        assert_eq!(b.evaluate(&frac(1, 2)).unwrap()[(0, 0)], frac(1, 2));
        assert!(b.evaluate(&int(2)).is_err());
        assert_eq!(b.d_matrix(&frac(1, 3)).unwrap()[(0, 0)], frac(1, 3));
    }

    #[test]
    fn projection_of_an_indicator() {
        let half = SignedSqrt { negative: false, square: frac(1, 2) };
        let b = block(int(1), vec![(Affine::identity(), vec![half.clone(), half])]);
        let y = vec![PiecewisePoly::global(int(0), int(1), Poly::constant(int(1))), PiecewisePoly::zero()];
        let q = apply_projection(&b, &y).unwrap();
        assert_eq!(q[0].eval(&frac(1, 3)), frac(1, 2));
        assert_eq!(q[1].eval(&frac(1, 3)), frac(1, 2));
        let qq = apply_projection(&b, &q).unwrap();
        assert!(qq[0].same_function(&q[0]) && qq[1].same_function(&q[1]));
    }
}
