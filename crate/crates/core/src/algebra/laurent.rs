use std::collections::BTreeMap;

use super::matrix::Matrix;
use super::scalar::{Ring, Scalar};
use crate::error::{Error, Result};

/// Laurent polynomial in the spectral parameter λ.
///
/// Stored densely from the lowest to the highest nonzero exponent. The
/// exact backend keeps only nonzero end coefficients; the float backend
/// additionally zeroes coefficients below `eps · max|c|`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly<S: Scalar> {
    ctx: S::Ctx,
    low: i64,
    coeffs: Vec<S>,
}

impl<S: Scalar> LaurentPoly<S> {
    pub fn zero(ctx: &S::Ctx) -> Self {
        LaurentPoly {
            ctx: ctx.clone(),
            low: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(c: S) -> Self {
        Self::monomial(c, 0)
    }

    pub fn monomial(c: S, exp: i64) -> Self {
        let mut p = LaurentPoly {
            ctx: c.ctx(),
            low: exp,
            coeffs: vec![c],
        };
        p.trim();
        p
    }

    /// The indeterminate λ itself.
    pub fn lambda(ctx: &S::Ctx) -> Self {
        Self::monomial(S::one(ctx), 1)
    }

    pub fn from_terms(ctx: &S::Ctx, terms: impl IntoIterator<Item = (i64, S)>) -> Self {
        let mut map: BTreeMap<i64, S> = BTreeMap::new();
        for (e, c) in terms {
            match map.get_mut(&e) {
                Some(v) => *v = v.add(&c),
                None => {
                    map.insert(e, c);
                }
            }
        }
        let Some((&low, _)) = map.first_key_value() else {
            return Self::zero(ctx);
        };
        let high = *map.last_key_value().unwrap().0;
        let mut coeffs = vec![S::zero(ctx); (high - low + 1) as usize];
        for (e, c) in map {
            coeffs[(e - low) as usize] = c;
        }
        let mut p = LaurentPoly {
            ctx: ctx.clone(),
            low,
            coeffs,
        };
        p.trim();
        p
    }

    fn trim(&mut self) {
        if !S::EXACT {
            let max = self.coeffs.iter().map(Scalar::magnitude).fold(0.0, f64::max);
            let cut = S::eps(&self.ctx) * max;
            for c in &mut self.coeffs {
                if !c.is_zero() && c.magnitude() <= cut {
                    *c = S::zero(&self.ctx);
                }
            }
        }
        while self.coeffs.last().is_some_and(Ring::is_zero) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.low += lead as i64;
        }
        if self.coeffs.is_empty() {
            self.low = 0;
        }
    }

    pub fn ctx(&self) -> &S::Ctx {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn low(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.low)
    }

    pub fn high(&self) -> Option<i64> {
        (!self.is_zero()).then(|| self.low + self.coeffs.len() as i64 - 1)
    }

    pub fn coeff(&self, exp: i64) -> S {
        let i = exp - self.low;
        if i < 0 || i >= self.coeffs.len() as i64 {
            S::zero(&self.ctx)
        } else {
            self.coeffs[i as usize].clone()
        }
    }

    /// Nonzero terms `(exponent, coefficient)` in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &S)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (self.low + i as i64, c))
    }

    pub fn max_magnitude(&self) -> f64 {
        self.coeffs.iter().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut p = LaurentPoly {
            ctx: self.ctx.clone(),
            low: self.low,
            coeffs: self.coeffs.iter().map(|c| c.mul(s)).collect(),
        };
        p.trim();
        p
    }

    /// Multiplication by λ^k.
    pub fn shift(&self, k: i64) -> Self {
        let mut p = self.clone();
        if !p.is_zero() {
            p.low += k;
        }
        p
    }

    /// `Some((c, p))` when the polynomial is the single term `c λ^p`.
    pub fn as_monomial(&self) -> Option<(S, i64)> {
        let mut it = self.terms();
        let (e, c) = it.next()?;
        it.next().is_none().then(|| (c.clone(), e))
    }

    pub fn eval(&self, x: &S) -> S {
        let Some(low) = self.low() else {
            return S::zero(&self.ctx);
        };
        let mut acc = S::zero(&self.ctx);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc.mul(&x.pow_i(low))
    }
}

impl<S: Scalar> Ring for LaurentPoly<S> {
    fn zero_like(&self) -> Self {
        Self::zero(&self.ctx)
    }

    fn one_like(&self) -> Self {
        Self::constant(S::one(&self.ctx))
    }

    fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let low = self.low.min(other.low);
        let high = self.high().unwrap().max(other.high().unwrap());
        let coeffs = (low..=high).map(|e| self.coeff(e).add(&other.coeff(e))).collect();
        let mut p = LaurentPoly {
            ctx: self.ctx.clone(),
            low,
            coeffs,
        };
        p.trim();
        p
    }

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return self.zero_like();
        }
        let len = self.coeffs.len() + other.coeffs.len() - 1;
        let mut coeffs = vec![S::zero(&self.ctx); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        let mut p = LaurentPoly {
            ctx: self.ctx.clone(),
            low: self.low + other.low,
            coeffs,
        };
        p.trim();
        p
    }

    fn neg(&self) -> Self {
        LaurentPoly {
            ctx: self.ctx.clone(),
            low: self.low,
            coeffs: self.coeffs.iter().map(Ring::neg).collect(),
        }
    }

    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Division-free determinant by Laplace expansion along rows, memoized over
/// the set of consumed columns (`O(2^m · m)` ring products).
pub fn det_ring<R: Ring>(a: &[Vec<R>]) -> R {
    let m = a.len();
    assert!(m > 0 && a.iter().all(|r| r.len() == m), "square matrix expected");
    assert!(m <= 20, "Laplace determinant limited to small matrices");
    let full = (1usize << m) - 1;
    let mut memo: Vec<Option<R>> = vec![None; 1 << m];
    memo[full] = Some(a[0][0].one_like());
    for mask in (0..full).rev() {
        let row = mask.count_ones() as usize;
        let mut acc = a[0][0].zero_like();
        let mut free_before = 0;
        for c in 0..m {
            if mask & (1 << c) != 0 {
                continue;
            }
            let sub = memo[mask | (1 << c)].as_ref().expect("processed in decreasing order");
            if !a[row][c].is_zero() && !sub.is_zero() {
                let term = a[row][c].mul(sub);
                acc = if free_before % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            free_before += 1;
        }
        memo[mask] = Some(acc);
    }
    memo[0].take().unwrap()
}

/// Coefficients of `det(kI − M)` in increasing powers of `k`, by summing
/// principal minors: the coefficient of `k^(m−s)` is `(−1)^s` times the
/// sum of the `s × s` principal minors.
pub fn char_poly_ring<R: Ring>(a: &[Vec<R>]) -> Vec<R> {
    let m = a.len();
    let zero = a[0][0].zero_like();
    let mut e = vec![zero; m + 1];
    e[0] = a[0][0].one_like();
    for subset in 1usize..(1 << m) {
        let idx: Vec<usize> = (0..m).filter(|&i| subset & (1 << i) != 0).collect();
        let sub: Vec<Vec<R>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| a[i][j].clone()).collect())
            .collect();
        let s = idx.len();
        e[s] = e[s].add(&det_ring(&sub));
    }
    (0..=m)
        .map(|r| {
            let s = m - r;
            if s % 2 == 0 {
                e[s].clone()
            } else {
                e[s].neg()
            }
        })
        .collect()
}

/// Square matrix over the Laurent ring `Scalar[λ, λ⁻¹]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentMatrix<S: Scalar> {
    size: usize,
    entries: Vec<LaurentPoly<S>>,
}

impl<S: Scalar> LaurentMatrix<S> {
    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> LaurentPoly<S>) -> Self {
        let mut entries = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                entries.push(f(i, j));
            }
        }
        LaurentMatrix { size, entries }
    }

    pub fn identity(size: usize, ctx: &S::Ctx) -> Self {
        Self::from_fn(size, |i, j| {
            if i == j {
                LaurentPoly::constant(S::one(ctx))
            } else {
                LaurentPoly::zero(ctx)
            }
        })
    }

    pub fn diagonal(diag: Vec<LaurentPoly<S>>) -> Self {
        let ctx = diag[0].ctx().clone();
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                diag[i].clone()
            } else {
                LaurentPoly::zero(&ctx)
            }
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentPoly<S> {
        &self.entries[i * self.size + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: LaurentPoly<S>) {
        self.entries[i * self.size + j] = p;
    }

    pub fn to_rows(&self) -> Vec<Vec<LaurentPoly<S>>> {
        (0..self.size)
            .map(|i| self.entries[i * self.size..(i + 1) * self.size].to_vec())
            .collect()
    }

    /// Entrywise product-sum. Size mismatch is a contract violation.
    pub fn mat_mul(&self, other: &Self) -> Result<Self> {
        if self.size != other.size {
            return Err(Error::contract(format!(
                "Laurent matrix sizes differ: {} vs {}",
                self.size, other.size
            )));
        }
        let m = self.size;
        Ok(Self::from_fn(m, |i, j| {
            let mut acc = self.get(i, 0).mul(other.get(0, j));
            for k in 1..m {
                acc = acc.add(&self.get(i, k).mul(other.get(k, j)));
            }
            acc
        }))
    }

    pub fn det(&self) -> LaurentPoly<S> {
        det_ring(&self.to_rows())
    }

    /// Classical adjugate (transposed cofactor matrix).
    pub fn adjugate(&self) -> Self {
        let m = self.size;
        let ctx = self.get(0, 0).ctx().clone();
        if m == 1 {
            return Self::identity(1, &ctx);
        }
        let rows = self.to_rows();
        let mut cof = vec![vec![LaurentPoly::zero(&ctx); m]; m];
        for (i, cof_row) in cof.iter_mut().enumerate() {
            for (j, slot) in cof_row.iter_mut().enumerate() {
                let minor: Vec<Vec<LaurentPoly<S>>> = rows
                    .iter()
                    .enumerate()
                    .filter(|(r, _)| *r != i)
                    .map(|(_, row)| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != j)
                            .map(|(_, x)| x.clone())
                            .collect()
                    })
                    .collect();
                let d = det_ring(&minor);
                *slot = if (i + j) % 2 == 0 { d } else { d.neg() };
            }
        }
        Self::from_fn(m, |i, j| cof[j][i].clone())
    }

    /// Inverse within the Laurent ring; defined only when the determinant
    /// is a single monomial `c λ^p` (a unit of the ring).
    pub fn inverse_monomial(&self) -> Result<Self> {
        let det = self.det();
        let (c, p) = det.as_monomial().ok_or_else(|| {
            Error::StructuralMismatch("determinant is not a monomial; matrix is not invertible over the Laurent ring".into())
        })?;
        let inv_c = c.inv();
        let adj = self.adjugate();
        Ok(Self::from_fn(self.size, |i, j| adj.get(i, j).scale(&inv_c).shift(-p)))
    }

    /// Numeric matrix at `λ = λ0`.
    pub fn eval(&self, lambda0: &S) -> Matrix<S> {
        Matrix::from_rows(
            (0..self.size)
                .map(|i| (0..self.size).map(|j| self.get(i, j).eval(lambda0)).collect())
                .collect(),
        )
    }

    /// Coefficients of `det(kI − M)` in increasing powers of `k`.
    pub fn char_poly(&self) -> Vec<LaurentPoly<S>> {
        char_poly_ring(&self.to_rows())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::scalar::q;
    use rug::Rational;

    fn lp(terms: &[(i64, i64)]) -> LaurentPoly<Rational> {
        LaurentPoly::from_terms(&(), terms.iter().map(|&(e, c)| (e, Rational::from(c))))
    }

    #[test]
    fn exponent_bookkeeping_is_exact() {
        let a = lp(&[(-2, 1), (3, 2)]);
        let b = lp(&[(-1, 3), (1, -1)]);
        let p = a.mul(&b);
        assert_eq!(p.low(), Some(-3));
        assert_eq!(p.high(), Some(4));
        assert_eq!(p.coeff(-3), q(3, 1));
        assert_eq!(p.coeff(-1), q(-1, 1));
        assert_eq!(p.coeff(2), q(6, 1));
        assert!(a.sub(&a).is_zero());
        assert_eq!(a.sub(&a).low(), None);
    }

    #[test]
    fn identity_and_inverse_monomials() {
        let ctx = ();
        let a = LaurentMatrix::from_fn(2, |i, j| lp(&[((i + 2 * j) as i64 - 1, (i * 3 + j + 1) as i64)]));
        let id = LaurentMatrix::identity(2, &ctx);
        assert_eq!(a.mat_mul(&id).unwrap(), a);
        let d1 = LaurentMatrix::diagonal(vec![lp(&[(1, 1)]), lp(&[(0, 1)])]);
        let d2 = LaurentMatrix::diagonal(vec![lp(&[(-1, 1)]), lp(&[(0, 1)])]);
        assert_eq!(d1.mat_mul(&d2).unwrap(), id);
        assert!(matches!(
            d1.mat_mul(&LaurentMatrix::identity(3, &ctx)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn char_poly_of_small_cases() {
        let id = LaurentMatrix::<Rational>::identity(2, &());
        let cp = id.char_poly();
        assert_eq!(cp, vec![lp(&[(0, 1)]), lp(&[(0, -2)]), lp(&[(0, 1)])]);
        let d = LaurentMatrix::diagonal(vec![lp(&[(1, 1)]), lp(&[(-1, 1)])]);
        let cp = d.char_poly();
        assert_eq!(cp, vec![lp(&[(0, 1)]), lp(&[(-1, -1), (1, -1)]), lp(&[(0, 1)])]);
    }

    #[test]
    fn laplace_matches_elimination() {
        let rows = vec![
            vec![q(2, 3), q(1, 1), q(-4, 5), q(0, 1)],
            vec![q(7, 2), q(-1, 9), q(3, 1), q(1, 4)],
            vec![q(0, 1), q(5, 6), q(2, 1), q(-3, 1)],
            vec![q(1, 1), q(1, 2), q(1, 3), q(1, 5)],
        ];
        assert_eq!(det_ring(&rows), Matrix::from_rows(rows).det());
    }

    #[test]
    fn monomial_inverse_round_trip() {
        let a = LaurentMatrix::from_fn(3, |i, j| match (i, j) {
            (0, 2) => lp(&[(0, 1)]),
            (1, 0) => lp(&[(1, 1)]),
            (2, 1) => lp(&[(0, 1)]),
            (1, 2) => lp(&[(0, 3)]),
            (2, 2) => lp(&[(0, -2)]),
            _ => lp(&[]),
        });
        let inv = a.inverse_monomial().unwrap();
        assert_eq!(a.mat_mul(&inv).unwrap(), LaurentMatrix::identity(3, &()));
    }

    #[test]
    fn eval_handles_negative_powers() {
        let p = lp(&[(-2, 3), (1, 1)]);
        assert_eq!(p.eval(&q(2, 1)), q(3, 4).add(&q(2, 1)));
    }
}
