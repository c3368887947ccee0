//! Polynomials and piecewise polynomials with rational coefficients.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Polynomial with coefficients in ascending degree order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    pub coeffs: Vec<Rational>,
}

impl Poly {
    pub fn new(coeffs: Vec<Rational>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: Rational) -> Self {
        Poly::new(vec![c])
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// `q(x) = p(x + delta)`.
    pub fn shift(&self, delta: &Rational) -> Poly {
        let n = self.coeffs.len();
        let mut c = self.coeffs.clone();
        // Repeated synthetic division (Taylor shift).
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let add = &c[j + 1] * delta;
                c[j] += add;
            }
        }
        Poly::new(c)
    }

    pub fn scale(&self, s: &Rational) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let z = Rational::zero();
        Poly::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&z) + other.coeffs.get(i).unwrap_or(&z))
                .collect(),
        )
    }
}

/// One piece `p(s - start)` on `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub start: Rational,
    pub end: Rational,
    pub poly: Poly,
}

/// Piecewise polynomial; each piece uses the local variable `s - start`.
/// Zero outside the pieces.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PiecewisePoly {
    pub pieces: Vec<Piece>,
}

impl PiecewisePoly {
    /// Validates that pieces are nonempty, sorted and non-overlapping.
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        for p in &pieces {
            if p.start >= p.end {
                return Err(Error::Parse(format!(
                    "empty piece [{}, {})",
                    p.start, p.end
                )));
            }
        }
        for w in pieces.windows(2) {
            if w[0].end > w[1].start {
                return Err(Error::Parse("pieces overlap or are unsorted".into()));
            }
        }
        Ok(PiecewisePoly { pieces })
    }

    pub fn zero() -> Self {
        PiecewisePoly { pieces: vec![] }
    }

    /// Single polynomial in the global variable on `[a, b]`.
    pub fn global(a: Rational, b: Rational, p: Poly) -> Self {
        let local = p.shift(&a);
        PiecewisePoly {
            pieces: vec![Piece {
                start: a,
                end: b,
                poly: local,
            }],
        }
    }

    pub fn eval(&self, s: &Rational) -> Rational {
        let n = self.pieces.len();
        for (i, p) in self.pieces.iter().enumerate() {
            let last = i + 1 == n;
            if &p.start <= s && (s < &p.end || (last && s == &p.end)) {
                return p.poly.eval(&(s - &p.start));
            }
        }
        Rational::zero()
    }

    fn breakpoints(&self) -> Vec<Rational> {
        let mut v = Vec::new();
        for p in &self.pieces {
            v.push(p.start.clone());
            v.push(p.end.clone());
        }
        v
    }

    /// Piece covering the open interval `(a, b)`, re-expressed in `s - a`.
    fn local_on(&self, a: &Rational, b: &Rational) -> Poly {
        for p in &self.pieces {
            if &p.start <= a && b <= &p.end {
                return p.poly.shift(&(a - &p.start));
            }
        }
        Poly::default()
    }

    /// `Σ c_j f_j` on the common refinement of breakpoints.
    pub fn linear_combination(terms: &[(Rational, &PiecewisePoly)]) -> PiecewisePoly {
        let mut cuts: Vec<Rational> = terms.iter().flat_map(|(_, f)| f.breakpoints()).collect();
        cuts.sort();
        cuts.dedup();
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let mut acc = Poly::default();
            for (c, f) in terms {
                if c.is_zero() {
                    continue;
                }
                acc = acc.add(&f.local_on(&w[0], &w[1]).scale(c));
            }
            if !acc.is_zero() {
                pieces.push(Piece {
                    start: w[0].clone(),
                    end: w[1].clone(),
                    poly: acc,
                });
            }
        }
        PiecewisePoly { pieces }
    }

    /// Equality as functions on the union of the supports (ignores how pieces are cut).
    pub fn same_function(&self, other: &PiecewisePoly) -> bool {
        let minus = PiecewisePoly::linear_combination(&[
            (Rational::from_integer(1.into()), self),
            (Rational::from_integer((-1).into()), other),
        ]);
        minus.pieces.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    #[test]
    fn shift_matches_substitution() {
        let p = Poly::new(vec![int(1), int(-2), int(3), int(1)]);
        let d = frac(5, 3);
        let q = p.shift(&d);
        for x in [int(0), frac(1, 2), int(-4)] {
            assert_eq!(q.eval(&x), p.eval(&(&x + &d)));
        }
    }

    #[test]
    fn piecewise_eval_uses_local_variable() {
        let f = PiecewisePoly::new(vec![
            Piece {
                start: int(0),
                end: frac(1, 4),
                poly: Poly::default(),
            },
            Piece {
                start: frac(1, 4),
                end: int(3),
                poly: Poly::new(vec![int(0), int(0), int(0), int(1)]),
            },
        ])
        .unwrap();
        assert_eq!(f.eval(&frac(1, 8)), int(0));
        assert_eq!(f.eval(&frac(3, 4)), frac(1, 8));
        assert_eq!(f.eval(&int(3)), frac(1331, 64));
        assert_eq!(f.eval(&int(4)), int(0));
    }

    #[test]
    fn linear_combination_refines() {
        let a = PiecewisePoly::global(int(0), int(2), Poly::new(vec![int(0), int(1)]));
        let b = PiecewisePoly::global(int(1), int(3), Poly::constant(int(1)));
        let c = PiecewisePoly::linear_combination(&[(int(2), &a), (int(-1), &b)]);
        assert_eq!(c.eval(&frac(1, 2)), int(1));
        assert_eq!(c.eval(&frac(3, 2)), int(2));
        assert_eq!(c.eval(&frac(5, 2)), int(-1));
        assert!(c.same_function(&c.clone()));
        assert!(PiecewisePoly::new(vec![Piece {
            start: int(1),
            end: int(1),
            poly: Poly::default()
        }])
        .is_err());
    }
}
