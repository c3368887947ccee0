//! Finitely generated real matrix *-algebras, their block structure, and the classification of
//! the eikonal algebra as a sum of standard matrix-function algebras.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eikonal::EikonalBlock;
use crate::error::{Error, Result};
use crate::linalg::{QMatrix, SpanBasis};
use crate::partition::SigmaPartition;
use crate::rational::{fmt_rational, Rational};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
const MAX_ATTEMPTS: usize = 8;

/// Eigensplit tolerance, overridable through `EIKONAL_DECOMP_TOL`.
pub fn tolerance() -> f64 {
    std::env::var("EIKONAL_DECOMP_TOL")
        .ok()
        .and_then(|s| s.parse::<f64>().ok())
        .filter(|t| t.is_finite() && *t > 0.0)
        .unwrap_or(DEFAULT_TOLERANCE)
}

/// Anything that multiplies associatively and flattens to a rational vector.
pub trait Element: Clone {
    fn product(&self, other: &Self) -> Self;
    fn flatten(&self) -> Vec<Rational>;
    /// Rebuilds an element of the same shape as `self` from flat entries.
    fn unflatten(&self, flat: &[Rational]) -> Self;
}

impl Element for QMatrix {
    fn product(&self, other: &Self) -> Self {
        self * other
    }

    fn flatten(&self) -> Vec<Rational> {
        self.as_slice().to_vec()
    }

    fn unflatten(&self, flat: &[Rational]) -> Self {
        QMatrix::from_rows(flat.chunks(self.cols().max(1)).map(<[Rational]>::to_vec).collect())
    }
}

/// Block-diagonal tuple, one matrix per slot.
impl Element for Vec<QMatrix> {
    fn product(&self, other: &Self) -> Self {
        self.iter().zip(other).map(|(a, b)| a * b).collect()
    }

    fn flatten(&self) -> Vec<Rational> {
        self.iter().flat_map(|m| m.as_slice().iter().cloned()).collect()
    }

    fn unflatten(&self, flat: &[Rational]) -> Self {
        let mut at = 0;
        self.iter()
            .map(|m| {
                let n = m.rows() * m.cols();
                let part = m.unflatten(&flat[at..at + n]);
                at += n;
                part
            })
            .collect()
    }
}

/// Reduced echelon basis of the span of all words of length at least one in `gens`.
///
/// Words are extended from reduced elements rather than raw products, which keeps entry sizes
/// from compounding.
pub fn span_words<E: Element>(gens: &[E]) -> Vec<E> {
    let Some(shape) = gens.first() else {
        return Vec::new();
    };
    let mut span = SpanBasis::new();
    let mut queue: Vec<E> = Vec::new();
    for g in gens {
        if let Some(r) = span.insert_reduced(&g.flatten()) {
            queue.push(shape.unflatten(&r));
        }
    }
    let mut next = 0;
    while next < queue.len() {
        let x = queue[next].clone();
        for g in gens {
            if let Some(r) = span.insert_reduced(&x.product(g).flatten()) {
                queue.push(shape.unflatten(&r));
            }
        }
        next += 1;
    }
    span.rows().iter().map(|r| shape.unflatten(r)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixAlgebra {
    pub m: usize,
    pub basis: Vec<QMatrix>,
    /// Generators the basis was closed from; commutation and unit equations only need these.
    pub generators: Vec<QMatrix>,
}

impl MatrixAlgebra {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn zero(m: usize) -> Self {
        MatrixAlgebra {
            m,
            basis: Vec::new(),
            generators: Vec::new(),
        }
    }

    pub fn contains(&self, x: &QMatrix) -> bool {
        let mut span = SpanBasis::new();
        for b in &self.basis {
            span.insert(&b.flatten());
        }
        span.contains(&x.flatten())
    }

    pub fn contains_algebra(&self, other: &MatrixAlgebra) -> bool {
        let mut span = SpanBasis::new();
        for b in &self.basis {
            span.insert(&b.flatten());
        }
        other.basis.iter().all(|b| span.contains(&b.flatten()))
    }

    /// Exact re-check of closure under products and transposition.
    ///
    /// With generators, the span must contain them and be stable under right multiplication by
    /// each; otherwise every product of basis elements is checked.
    pub fn is_closed(&self) -> bool {
        let mut span = SpanBasis::new();
        for b in &self.basis {
            span.insert(&b.flatten());
        }
        let right: &[QMatrix] = if self.generators.is_empty() {
            &self.basis
        } else {
            &self.generators
        };
        right.iter().all(|g| span.contains(&g.flatten()))
            && self.basis.iter().all(|a| {
                span.contains(&a.transpose().flatten())
                    && right.iter().all(|b| span.contains(&(a * b).flatten()))
            })
    }

    /// Matrices whose commutant equals the algebra's commutant.
    fn spanning(&self) -> &[QMatrix] {
        if self.generators.is_empty() {
            &self.basis
        } else {
            &self.generators
        }
    }

    /// Basis of `{X : XA = AX for all A}` in `M^m`.
    pub fn commutant(&self) -> Vec<QMatrix> {
        let m = self.m;
        let n = m * m;
        let mut eqs: Vec<Vec<Rational>> = Vec::new();
        for a in self.spanning() {
            // (XA - AX)_{ij} = Σ_l X_il A_lj - Σ_l A_il X_lj
            for i in 0..m {
                for j in 0..m {
                    let mut row = vec![Rational::zero(); n];
                    for l in 0..m {
                        row[i * m + l] += &a[(l, j)];
                        row[l * m + j] -= &a[(i, l)];
                    }
                    eqs.push(row);
                }
            }
        }
        if eqs.is_empty() {
            return (0..n).map(|k| unit_matrix(m, k)).collect();
        }
        QMatrix::from_rows(eqs)
            .nullspace()
            .into_iter()
            .map(|v| from_flat(m, v))
            .collect()
    }

    /// Basis of the center `A ∩ A'`.
    pub fn center(&self) -> Vec<QMatrix> {
        let d = self.dim();
        if d == 0 {
            return Vec::new();
        }
        let m = self.m;
        // Columns: coefficients c_i; rows: entries of Σ c_i [a_i, g] for each spanning g.
        let comms: Vec<Vec<QMatrix>> = self
            .basis
            .iter()
            .map(|ai| self.spanning().iter().map(|g| ai.commutator(g)).collect())
            .collect();
        let mut eqs = Vec::new();
        #[allow(clippy::needless_range_loop)]
        for j in 0..self.spanning().len() {
            for e in 0..m * m {
                eqs.push((0..d).map(|i| comms[i][j].as_slice()[e].clone()).collect());
            }
        }
        QMatrix::from_rows(eqs)
            .nullspace()
            .into_iter()
            .map(|c| combine(&self.basis, &c, m))
            .collect()
    }

    /// The unit of the algebra (zero for the zero algebra).
    pub fn unit(&self) -> Result<QMatrix> {
        let d = self.dim();
        let m = self.m;
        if d == 0 {
            return Ok(QMatrix::zeros(m, m));
        }
        // Σ c_i a_i g = g and Σ c_i g a_i = g for every spanning g, hence for every word.
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for aj in self.spanning() {
            let left: Vec<QMatrix> = self.basis.iter().map(|ai| ai * aj).collect();
            let right: Vec<QMatrix> = self.basis.iter().map(|ai| aj * ai).collect();
            for e in 0..m * m {
                rows.push(left.iter().map(|x| x.as_slice()[e].clone()).collect());
                rhs.push(aj.as_slice()[e].clone());
                rows.push(right.iter().map(|x| x.as_slice()[e].clone()).collect());
                rhs.push(aj.as_slice()[e].clone());
            }
        }
        let c = QMatrix::from_rows(rows)
            .solve(&rhs)
            .ok_or_else(|| Error::Algebra("the algebra has no unit".into()))?;
        Ok(combine(&self.basis, &c, m))
    }
}

fn unit_matrix(m: usize, k: usize) -> QMatrix {
    let mut x = QMatrix::zeros(m, m);
    x[(k / m, k % m)] = Rational::one();
    x
}

fn from_flat(m: usize, v: Vec<Rational>) -> QMatrix {
    QMatrix::from_rows(v.chunks(m).map(<[Rational]>::to_vec).collect())
}

fn combine(basis: &[QMatrix], c: &[Rational], m: usize) -> QMatrix {
    basis
        .iter()
        .zip(c)
        .fold(QMatrix::zeros(m, m), |acc, (b, x)| &acc + &b.scale(x))
}

/// Non-unital algebra generated by `gens` inside `M^m`.
pub fn span_closure(m: usize, gens: &[QMatrix]) -> Result<MatrixAlgebra> {
    if let Some(g) = gens.iter().find(|g| g.rows() != m || g.cols() != m) {
        return Err(Error::Algebra(format!(
            "generator of size {}x{} in M^{m}",
            g.rows(),
            g.cols()
        )));
    }
    Ok(MatrixAlgebra {
        m,
        basis: span_words(gens),
        generators: gens.to_vec(),
    })
}

/// A common eigenvector of all projections, if one exists.
pub fn common_eigenvector_test(m: usize, ps: &[QMatrix]) -> Result<Option<Vec<Rational>>> {
    if ps.iter().any(|p| p.rows() != m || !p.is_projection()) {
        return Err(Error::Algebra("common eigenvector test needs projections in M^m".into()));
    }
    if m == 0 {
        return Ok(None);
    }
    if ps.len() > 20 {
        return Err(Error::Algebra("too many projections for the pattern search".into()));
    }
    let id = QMatrix::identity(m);
    for pattern in 0u32..(1 << ps.len()) {
        let stack: Vec<QMatrix> = ps
            .iter()
            .enumerate()
            .map(|(i, p)| if pattern >> i & 1 == 0 { p.clone() } else { &id - p })
            .collect();
        let kernel = if stack.is_empty() {
            vec![id.row(0).to_vec()]
        } else {
            QMatrix::vstack(&stack).nullspace()
        };
        if let Some(mut v) = kernel.into_iter().next() {
            let lead = v.iter().find(|x| !x.is_zero()).cloned().expect("nonzero kernel vector");
            for x in v.iter_mut() {
                *x /= &lead;
            }
            return Ok(Some(v));
        }
    }
    Ok(None)
}

/// Simple summands `M^{n_k}` with multiplicities, and the numeric witness.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDecomposition {
    /// `(n_k, multiplicity)` sorted by `n_k`.
    pub blocks: Vec<(usize, usize)>,
    pub dim: usize,
    pub commutant_dim: usize,
    pub center_dim: usize,
    pub unit_rank: usize,
    /// False when the exact dimensions cannot be met by real matrix blocks.
    pub real_type: bool,
    pub tolerance: f64,
    /// Orthonormal basis (columns) of each summand's invariant subspace.
    pub witness: Vec<Vec<Vec<f64>>>,
}

impl BlockDecomposition {
    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|(n, _)| *n).collect()
    }

    pub fn is_simple(&self) -> bool {
        self.blocks.len() == 1 && self.real_type
    }

    /// `M1⊕M2`-style text.
    pub fn render(&self) -> String {
        if !self.real_type {
            return format!("A{}", self.dim);
        }
        self.blocks
            .iter()
            .map(|(n, _)| format!("M{n}"))
            .collect::<Vec<_>>()
            .join("⊕")
    }
}

fn svd_rank(rows: &[Vec<f64>], tol: f64) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|s| **s > tol * top.max(1.0)).count()
}

/// Splits the algebra into simple summands.
///
/// The invariant subspaces come from the eigenspaces of a random symmetric central element;
/// every count is then checked against exact dimensions.
pub fn decompose(alg: &MatrixAlgebra, seed: u64) -> Result<BlockDecomposition> {
    let tol = tolerance();
    let m = alg.m;
    let dim = alg.dim();
    let commutant_dim = alg.commutant().len();
    let center = alg.center();
    let unit = alg.unit()?;
    let unit_rank = unit.rank();
    let kernel = m - unit_rank;
    if dim == 0 {
        return Ok(BlockDecomposition {
            blocks: Vec::new(),
            dim,
            commutant_dim,
            center_dim: 0,
            unit_rank,
            real_type: true,
            tolerance: tol,
            witness: Vec::new(),
        });
    }
    let basis_f: Vec<DMatrix<f64>> = alg.basis.iter().map(QMatrix::to_nalgebra).collect();
    let center_f: Vec<DMatrix<f64>> = center.iter().map(QMatrix::to_nalgebra).collect();
    let unit_f = unit.to_nalgebra();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let mut z = unit_f.clone();
        for c in &center_f {
            z += c * rng.gen_range(1.0..2.0);
        }
        let z = (&z + z.transpose()) * 0.5;
        let eig = SymmetricEigen::new(z);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for &i in &order {
            let lam = eig.eigenvalues[i];
            match clusters.last_mut() {
                Some(c) if (lam - eig.eigenvalues[*c.last().unwrap()]).abs() <= tol.sqrt() => c.push(i),
                _ => clusters.push(vec![i]),
            }
        }
        let mut blocks = Vec::new();
        let mut witness = Vec::new();
        let mut kernel_seen = 0;
        for c in &clusters {
            let lam = eig.eigenvalues[c[0]];
            if lam.abs() <= tol.sqrt() {
                kernel_seen += c.len();
                continue;
            }
            let v = DMatrix::from_fn(m, c.len(), |r, j| eig.eigenvectors[(r, c[j])]);
            let q = &v * v.transpose();
            let rows: Vec<Vec<f64>> = basis_f
                .iter()
                .map(|a| (&q * a * &q).iter().cloned().collect())
                .collect();
            let d = svd_rank(&rows, tol);
            let n = (d as f64).sqrt().round() as usize;
            if n == 0 || n * n != d || c.len() % n != 0 {
                blocks.clear();
                break;
            }
            blocks.push((n, c.len() / n));
            witness.push((0..c.len()).map(|j| v.column(j).iter().cloned().collect()).collect());
        }
        let ok = !blocks.is_empty()
            && kernel_seen == kernel
            && blocks.len() == center.len()
            && blocks.iter().map(|(n, _)| n * n).sum::<usize>() == dim
            && blocks.iter().map(|(_, k)| k * k).sum::<usize>() + kernel * kernel == commutant_dim;
        if ok {
            let mut paired: Vec<_> = blocks.into_iter().zip(witness).collect();
            paired.sort_by_key(|p: &((usize, usize), Vec<Vec<f64>>)| p.0);
            let (blocks, witness) = paired.into_iter().unzip();
            return Ok(BlockDecomposition {
                blocks,
                dim,
                commutant_dim,
                center_dim: center.len(),
                unit_rank,
                real_type: true,
                tolerance: tol,
                witness,
            });
        }
    }
    let comm = commutant_dim.checked_sub(kernel * kernel).unwrap_or(usize::MAX);
    if !is_real_split_possible(dim, comm, center.len(), unit_rank) {
        return Ok(BlockDecomposition {
            blocks: Vec::new(),
            dim,
            commutant_dim,
            center_dim: center.len(),
            unit_rank,
            real_type: false,
            tolerance: tol,
            witness: Vec::new(),
        });
    }
    Err(Error::Algebra(format!(
        "eigensplit inconsistent with exact dimensions after {MAX_ATTEMPTS} attempts"
    )))
}

/// Whether real blocks `(n_k, k_k)` exist with `Σ n² = dim`, `Σ k² = comm` and `Σ n k = rank`,
/// one per central summand.
fn is_real_split_possible(dim: usize, comm: usize, center: usize, rank: usize) -> bool {
    fn search(left: usize, dim: usize, comm: usize, rank: usize, min: (usize, usize)) -> bool {
        if left == 0 {
            return dim == 0 && comm == 0 && rank == 0;
        }
        for n in min.0..=rank {
            if n * n > dim {
                break;
            }
            let kmin = if n == min.0 { min.1 } else { 1 };
            for k in kmin..=rank / n {
                if k * k > comm || n * k > rank {
                    break;
                }
                if search(left - 1, dim - n * n, comm - k * k, rank - n * k, (n, k)) {
                    return true;
                }
            }
        }
        false
    }
    search(center, dim, comm, rank, (1, 1))
}

/// `ℙ_Φ`: the algebra generated by every projection of every source on one family.
pub fn fiber_algebra(blocks: &[EikonalBlock]) -> Result<MatrixAlgebra> {
    let Some(first) = blocks.first() else {
        return Err(Error::Algebra("a family needs at least one block".into()));
    };
    if blocks.iter().any(|b| b.m != first.m || b.family != first.family) {
        return Err(Error::Algebra("blocks do not share a family frame".into()));
    }
    let gens: Vec<QMatrix> = blocks
        .iter()
        .flat_map(|b| b.rows.iter().map(|r| r.projection.clone()))
        .collect();
    span_closure(first.m, &gens)
}

/// The algebra generated by the evaluated generators at one end of a family.
#[derive(Clone, Debug, PartialEq)]
pub struct Endpoint {
    pub r: Rational,
    pub algebra: MatrixAlgebra,
    pub decomposition: BlockDecomposition,
    /// Equal to the fiber.
    pub full: bool,
}

impl Endpoint {
    pub fn is_zero(&self) -> bool {
        self.algebra.dim() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyAlgebra {
    pub family: usize,
    pub eps: Rational,
    pub m: usize,
    pub fiber: MatrixAlgebra,
    pub decomposition: BlockDecomposition,
    /// Ends at `r = 0` and `r = ε`.
    pub ends: [Endpoint; 2],
}

/// A family end: `(family, 0 | 1)` for `r = 0 | ε`.
pub type Slot = (usize, usize);

/// Two ends whose values are tied together in the joint endpoint algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub a: Slot,
    pub b: Slot,
    /// An isomorphic identification of full simple ends (the intervals are concatenated).
    pub glued: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Summand {
    pub families: Vec<usize>,
    pub length: Rational,
    pub fiber_dim: usize,
    pub text: String,
    /// Block sizes of a proper endpoint subalgebra, if any.
    pub endpoint_blocks: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraDescriptor {
    pub families: Vec<FamilyAlgebra>,
    pub joint_dim: usize,
    pub links: Vec<Link>,
    pub summands: Vec<Summand>,
    pub rendered: String,
    pub diagnostics: Vec<String>,
}

impl AlgebraDescriptor {
    pub fn identifications(&self) -> Vec<&Link> {
        self.links.iter().filter(|l| l.glued).collect()
    }
}

/// Spectral projections of `E(r)` for its nonzero eigenvalues.
///
/// Each is a polynomial without constant term in `E(r)`, so they generate the same non-unital
/// algebra as the evaluated generators while keeping entries small.
fn spectral(block: &EikonalBlock, r: &Rational) -> Result<BTreeMap<Rational, QMatrix>> {
    if r < &Rational::zero() || r > &block.eps {
        return Err(Error::Algebra(format!(
            "endpoint {r} outside [0, {}] of family {}",
            block.eps,
            block.family + 1
        )));
    }
    let mut out: BTreeMap<Rational, QMatrix> = BTreeMap::new();
    for row in &block.rows {
        let lam = row.tau.eval(r);
        if lam.is_zero() {
            continue;
        }
        let acc = out.entry(lam).or_insert_with(|| QMatrix::zeros(block.m, block.m));
        *acc = &*acc + &row.projection;
    }
    Ok(out)
}

/// Endpoint algebras of every family and the links of the joint endpoint algebra.
pub fn endpoint_analysis(
    blocks: &[Vec<EikonalBlock>],
    seed: u64,
) -> Result<(Vec<FamilyAlgebra>, usize, Vec<Link>)> {
    let mut fams = Vec::with_capacity(blocks.len());
    // values[slot][source]: spectral projections by eigenvalue.
    let mut values: Vec<Vec<BTreeMap<Rational, QMatrix>>> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    for (f, fb) in blocks.iter().enumerate() {
        let fiber = fiber_algebra(fb)?;
        let decomposition = decompose(&fiber, seed)?;
        let eps = fb[0].eps.clone();
        let m = fb[0].m;
        let mut ends = Vec::with_capacity(2);
        for r in [Rational::zero(), eps.clone()] {
            let vals: Vec<BTreeMap<Rational, QMatrix>> =
                fb.iter().map(|b| spectral(b, &r)).collect::<Result<_>>()?;
            let gens: Vec<QMatrix> = vals.iter().flat_map(|v| v.values().cloned()).collect();
            let algebra = span_closure(m, &gens)?;
            if !fiber.contains_algebra(&algebra) {
                return Err(Error::Algebra(format!(
                    "endpoint algebra of family {} escapes its fiber",
                    f + 1
                )));
            }
            let dec = decompose(&algebra, seed)?;
            ends.push(Endpoint {
                full: algebra.dim() == fiber.dim(),
                r,
                algebra,
                decomposition: dec,
            });
            values.push(vals);
            sizes.push(m);
        }
        let [e0, e1]: [Endpoint; 2] = ends.try_into().expect("two ends");
        fams.push(FamilyAlgebra {
            family: f,
            eps,
            m,
            fiber,
            decomposition,
            ends: [e0, e1],
        });
    }
    let sources = blocks.first().map_or(0, Vec::len);
    // One tuple per source and eigenvalue: the spectral projections of the source's tuple.
    let mut tuples: Vec<Vec<QMatrix>> = Vec::new();
    for s in 0..sources {
        let lams: BTreeSet<&Rational> = values.iter().flat_map(|v| v[s].keys()).collect();
        for lam in lams {
            tuples.push(
                values
                    .iter()
                    .zip(&sizes)
                    .map(|(v, &m)| v[s].get(lam).cloned().unwrap_or_else(|| QMatrix::zeros(m, m)))
                    .collect(),
            );
        }
    }
    let joint = span_words(&tuples);
    let slot_dim = |idx: &[usize]| {
        let mut span = SpanBasis::new();
        for t in &joint {
            let flat: Vec<Rational> = idx.iter().flat_map(|&i| t[i].as_slice().iter().cloned()).collect();
            span.insert(&flat);
        }
        span.dim()
    };
    let nslots = values.len();
    let dims: Vec<usize> = (0..nslots).map(|p| slot_dim(&[p])).collect();
    let mut links = Vec::new();
    for p in 0..nslots {
        if dims[p] == 0 {
            continue;
        }
        for q in p + 1..nslots {
            if dims[q] == 0 || p / 2 == q / 2 {
                continue;
            }
            let pair = slot_dim(&[p, q]);
            if pair < dims[p] + dims[q] {
                let (fp, fq) = (&fams[p / 2], &fams[q / 2]);
                let glued = fp.ends[p % 2].full
                    && fq.ends[q % 2].full
                    && fp.decomposition.is_simple()
                    && fq.decomposition.is_simple()
                    && fp.decomposition.sizes() == fq.decomposition.sizes()
                    && pair == dims[p]
                    && pair == dims[q];
                links.push(Link {
                    a: (p / 2, p % 2),
                    b: (q / 2, q % 2),
                    glued,
                });
            }
        }
    }
    Ok((fams, joint.len(), links))
}

fn standard_text(prefix: &str, length: &Rational, fiber: &BlockDecomposition) -> String {
    let interval = format!("[0,{}]", fmt_rational(length));
    let sizes = fiber.sizes();
    if fiber.real_type && sizes == [1] && prefix != "Cdot" {
        format!("{prefix}{interval}")
    } else {
        format!("{prefix}({interval};{})", fiber.render())
    }
}

/// Assembles the descriptor and its rendering from endpoint data.
pub fn classify(
    sigma: &SigmaPartition,
    blocks: &[Vec<EikonalBlock>],
    seed: u64,
) -> Result<AlgebraDescriptor> {
    if blocks.len() != sigma.families.len() {
        return Err(Error::Algebra("one block set per family is required".into()));
    }
    let (fams, joint_dim, links) = endpoint_analysis(blocks, seed)?;
    let mut diagnostics = Vec::new();
    for f in &fams {
        if !f.decomposition.real_type {
            diagnostics.push(format!(
                "fiber of family {} is not a sum of real matrix blocks",
                f.family + 1
            ));
        }
    }
    // Chains of glued families.
    let mut uf = crate::partition::UnionFind::new(fams.len());
    let mut glued_ends: BTreeSet<Slot> = BTreeSet::new();
    for l in links.iter().filter(|l| l.glued) {
        uf.union(l.a.0, l.b.0);
        glued_ends.insert(l.a);
        glued_ends.insert(l.b);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for f in 0..fams.len() {
        groups.entry(uf.find(f)).or_default().push(f);
    }
    let mut summands = Vec::new();
    for (_, members) in groups {
        let length: Rational = members.iter().map(|&f| fams[f].eps.clone()).sum();
        let free: Vec<&Endpoint> = members
            .iter()
            .flat_map(|&f| [(f, 0), (f, 1)])
            .filter(|s| !glued_ends.contains(s))
            .map(|(f, e)| &fams[f].ends[e])
            .collect();
        if free.len() != 2 {
            diagnostics.push(format!(
                "glued families {:?} do not form an interval",
                members.iter().map(|f| f + 1).collect::<Vec<_>>()
            ));
        }
        let head = &fams[members[0]];
        let zeros = free.iter().filter(|e| e.is_zero()).count();
        let proper: Vec<&Endpoint> = free.iter().filter(|e| !e.is_zero() && !e.full).copied().collect();
        let (prefix, endpoint_blocks) = if let Some(e) = proper.first() {
            ("Cdot", Some(e.decomposition.sizes()))
        } else {
            (["C", "C0", "C00"][zeros.min(2)], None)
        };
        summands.push(Summand {
            text: standard_text(prefix, &length, &head.decomposition),
            families: members.clone(),
            length,
            fiber_dim: head.fiber.dim(),
            endpoint_blocks,
        });
    }
    summands.sort_by(|a, b| {
        (a.fiber_dim, &a.length, a.families[0]).cmp(&(b.fiber_dim, &b.length, b.families[0]))
    });
    let rendered = summands
        .iter()
        .map(|s| s.text.as_str())
        .collect::<Vec<_>>()
        .join(" ⊕ ");
    Ok(AlgebraDescriptor {
        families: fams,
        joint_dim,
        links,
        summands,
        rendered,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn q(rows: &[&[i64]]) -> QMatrix {
        QMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect())
    }

    fn p_half() -> QMatrix {
        let h = frac(1, 2);
        QMatrix::from_rows(vec![vec![h.clone(), h.clone()], vec![h.clone(), h]])
    }

    #[test]
    fn two_projections_generate_m2() {
        let a = span_closure(2, &[p_half(), q(&[&[0, 0], &[0, 1]])]).unwrap();
        assert_eq!(a.dim(), 4);
        assert!(a.is_closed());
        let d = decompose(&a, 1).unwrap();
        assert_eq!(d.blocks, vec![(2, 1)]);
        assert_eq!(d.commutant_dim, 1);
    }

    #[test]
    fn single_projection() {
        let a = span_closure(2, &[p_half()]).unwrap();
        assert_eq!(a.dim(), 1);
        let d = decompose(&a, 1).unwrap();
        assert_eq!(d.blocks, vec![(1, 1)]);
        assert_eq!(d.unit_rank, 1);
    }

    #[test]
    fn zero_algebra() {
        let a = span_closure(3, &[]).unwrap();
        let d = decompose(&a, 1).unwrap();
        assert!(d.blocks.is_empty());
        assert_eq!(d.commutant_dim, 9);
    }

    #[test]
    fn multiplicity_two() {
        // M2 acting diagonally on R2 ⊕ R2.
        let mut gens = Vec::new();
        for base in [p_half(), q(&[&[0, 0], &[0, 1]])] {
            let mut x = QMatrix::zeros(4, 4);
            for i in 0..2 {
                for j in 0..2 {
                    x[(i, j)] = base[(i, j)].clone();
                    x[(i + 2, j + 2)] = base[(i, j)].clone();
                }
            }
            gens.push(x);
        }
        let a = span_closure(4, &gens).unwrap();
        assert_eq!(a.dim(), 4);
        let d = decompose(&a, 3).unwrap();
        assert_eq!(d.blocks, vec![(2, 2)]);
        assert_eq!(d.commutant_dim, 4);
    }

    #[test]
    fn eigenvector_search() {
        assert_eq!(
            common_eigenvector_test(2, &[p_half(), q(&[&[0, 0], &[0, 1]])]).unwrap(),
            None
        );
        assert!(common_eigenvector_test(2, &[q(&[&[1, 0], &[0, 1]])]).unwrap().is_some());
        assert!(common_eigenvector_test(2, &[q(&[&[2, 0], &[0, 0]])]).is_err());
    }

    #[test]
    fn unit_and_center() {
        let a = span_closure(3, &[q(&[&[1, 0, 0], &[0, 0, 0], &[0, 0, 0]])]).unwrap();
        assert_eq!(a.unit().unwrap().rank(), 1);
        assert_eq!(a.center().len(), 1);
    }

    #[test]
    fn tuples_multiply_slotwise() {
        let t = vec![p_half(), q(&[&[1]])];
        let words = span_words(&[t]);
        assert_eq!(words.len(), 1);
    }

    #[test]
    fn spectral_generators_span_the_evaluated_algebra() {
        let g = crate::graph::star(&[int(2), int(3), int(10)]).unwrap();
        let r = crate::pipeline::run(&g, &[1, 2], &int(4), 0).unwrap();
        for (fb, fa) in r.blocks.iter().zip(&r.descriptor.families) {
            for end in &fa.ends {
                let vals: Vec<QMatrix> = fb.iter().map(|b| b.evaluate(&end.r).unwrap()).collect();
                let direct = span_closure(fa.m, &vals).unwrap();
                assert!(direct.contains_algebra(&end.algebra));
                assert!(end.algebra.contains_algebra(&direct));
            }
        }
    }
}
