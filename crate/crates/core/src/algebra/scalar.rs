//! Scalar backends.
//!
//! Two fields sit behind the [`Scalar`] trait: exact rationals
//! ([`rug::Rational`]) and multi-precision complex floats
//! ([`rug::Complex`], precision carried by each value). Geometric
//! predicates are exact-zero tests for the former and threshold tests for
//! the latter.

use std::fmt;

use num_complex::Complex64;
use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};

use crate::error::{Error, Result};

/// Default precision (bits) of the multi-precision float backend.
pub const DEFAULT_PRECISION: u32 = 256;

/// Multiplier of the machine epsilon used by float general-position tests.
pub const GP_TOL_FACTOR: f64 = 1e3;

/// A commutative ring with unit. Implemented by the scalars and by
/// [`LaurentPoly`](super::LaurentPoly), so determinant-style routines can be
/// shared.
pub trait Ring: Clone + fmt::Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
}

/// Which root the lift normalization took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootBranch {
    RealPositive,
    RealOdd,
    PrincipalComplex,
}

pub trait Scalar: Ring + PartialEq + fmt::Display + Send + Sync + 'static {
    type Ctx: Clone + fmt::Debug + PartialEq + Send + Sync;
    const EXACT: bool;

    fn ctx(&self) -> Self::Ctx;
    fn from_i64(v: i64, ctx: &Self::Ctx) -> Self;
    fn from_rational(q: &Rational, ctx: &Self::Ctx) -> Self;
    /// Exact conversion of the binary double for the rational backend.
    fn from_f64(x: f64, ctx: &Self::Ctx) -> Self;

    /// Field division. Dividing by an exact zero panics.
    fn div(&self, other: &Self) -> Self;
    fn magnitude(&self) -> f64;
    /// Machine epsilon of the context; zero for exact arithmetic.
    fn eps(ctx: &Self::Ctx) -> f64;

    /// A `k`-th root chosen by the fixed branch policy: the positive real
    /// root when the value is positive real, the real root for odd `k`, and
    /// otherwise the principal complex root (float backend only).
    fn root(&self, k: u32) -> Result<(Self, RootBranch)>;

    fn to_text(&self) -> String;
    fn parse_text(s: &str, ctx: &Self::Ctx) -> Result<Self>;
    fn to_c64(&self) -> Complex64;

    /// Canonical representative of a direction; the rational backend
    /// clears denominators and common factors.
    fn reduce_content(v: Vec<Self>) -> Vec<Self> {
        v
    }

    fn zero(ctx: &Self::Ctx) -> Self {
        Self::from_i64(0, ctx)
    }

    fn one(ctx: &Self::Ctx) -> Self {
        Self::from_i64(1, ctx)
    }

    fn inv(&self) -> Self {
        self.one_like().div(self)
    }

    fn pow_i(&self, e: i64) -> Self {
        let mut base = if e < 0 { self.inv() } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = self.one_like();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// General-position threshold `GP_TOL_FACTOR * eps`.
    fn tol(ctx: &Self::Ctx) -> f64 {
        GP_TOL_FACTOR * Self::eps(ctx)
    }

    /// Exact zero for rationals; `|x| <= tol * scale` for floats.
    fn is_negligible(&self, scale: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.magnitude() <= Self::tol(&self.ctx()) * scale
        }
    }
}

/// Extra operations available only on the float backend.
pub trait FloatScalar: Scalar {
    fn from_c64(z: Complex64, ctx: &Self::Ctx) -> Self;
    fn sqrt(&self) -> Self;
    fn ln(&self) -> Self;
    fn conj(&self) -> Self;
    fn real_part(&self) -> Self;
}

// ---------------------------------------------------------------------------
// Exact rationals

impl Ring for Rational {
    fn zero_like(&self) -> Self {
        Rational::new()
    }

    fn one_like(&self) -> Self {
        Rational::from(1)
    }

    fn add(&self, other: &Self) -> Self {
        Rational::from(self + other)
    }

    fn sub(&self, other: &Self) -> Self {
        Rational::from(self - other)
    }

    fn mul(&self, other: &Self) -> Self {
        Rational::from(self * other)
    }

    fn neg(&self) -> Self {
        Rational::from(-self)
    }

    fn is_zero(&self) -> bool {
        self.numer().is_zero()
    }
}

fn exact_int_root(x: &Integer, k: u32) -> Option<Integer> {
    let neg = *x < 0;
    if neg && k % 2 == 0 {
        return None;
    }
    let abs = Integer::from(x.abs_ref());
    let r = Integer::from(abs.root_ref(k));
    if Integer::from(Pow::pow(&r, k)) == abs {
        Some(if neg { -r } else { r })
    } else {
        None
    }
}

impl Scalar for Rational {
    type Ctx = ();
    const EXACT: bool = true;

    fn ctx(&self) {}

    fn from_i64(v: i64, _: &()) -> Self {
        Rational::from(v)
    }

    fn from_rational(q: &Rational, _: &()) -> Self {
        q.clone()
    }

    fn from_f64(x: f64, _: &()) -> Self {
        Rational::from_f64(x).expect("finite double")
    }

    fn div(&self, other: &Self) -> Self {
        assert!(!Ring::is_zero(other), "division by exact zero");
        Rational::from(self / other)
    }

    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    fn eps(_: &()) -> f64 {
        0.0
    }

    fn root(&self, k: u32) -> Result<(Self, RootBranch)> {
        let branch = if *self > 0 {
            RootBranch::RealPositive
        } else if k % 2 == 1 {
            RootBranch::RealOdd
        } else {
            return Err(Error::IrrationalNormalization(self.to_string()));
        };
        match (exact_int_root(self.numer(), k), exact_int_root(self.denom(), k)) {
            (Some(p), Some(q)) => Ok((Rational::from((p, q)), branch)),
            _ => Err(Error::IrrationalNormalization(self.to_string())),
        }
    }

    fn reduce_content(v: Vec<Self>) -> Vec<Self> {
        let mut lcm = Integer::from(1);
        for x in &v {
            lcm.lcm_mut(x.denom());
        }
        let ints: Vec<Integer> = v
            .iter()
            .map(|x| Rational::from(x * &lcm).into_numer_denom().0)
            .collect();
        let mut g = Integer::new();
        for i in &ints {
            g.gcd_mut(i);
        }
        if g == 0 {
            return v;
        }
        ints.into_iter().map(|i| Rational::from(i / &g)).collect()
    }

    fn to_text(&self) -> String {
        self.to_string()
    }

    fn parse_text(s: &str, _: &()) -> Result<Self> {
        s.trim()
            .parse::<Rational>()
            .map_err(|e| Error::Parse(format!("rational {s:?}: {e}")))
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.to_f64(), 0.0)
    }
}

// ---------------------------------------------------------------------------
// Multi-precision complex floats

fn cprec(z: &Complex) -> u32 {
    z.prec().0
}

impl Ring for Complex {
    fn zero_like(&self) -> Self {
        Complex::new(cprec(self))
    }

    fn one_like(&self) -> Self {
        Complex::with_val(cprec(self), 1)
    }

    fn add(&self, other: &Self) -> Self {
        Complex::with_val(cprec(self), self + other)
    }

    fn sub(&self, other: &Self) -> Self {
        Complex::with_val(cprec(self), self - other)
    }

    fn mul(&self, other: &Self) -> Self {
        Complex::with_val(cprec(self), self * other)
    }

    fn neg(&self) -> Self {
        Complex::with_val(cprec(self), -self)
    }

    fn is_zero(&self) -> bool {
        self.real().is_zero() && self.imag().is_zero()
    }
}

impl Scalar for Complex {
    type Ctx = u32;
    const EXACT: bool = false;

    fn ctx(&self) -> u32 {
        cprec(self)
    }

    fn from_i64(v: i64, prec: &u32) -> Self {
        Complex::with_val(*prec, v)
    }

    fn from_rational(q: &Rational, prec: &u32) -> Self {
        Complex::with_val(*prec, (Float::with_val(*prec, q), 0))
    }

    fn from_f64(x: f64, prec: &u32) -> Self {
        Complex::with_val(*prec, x)
    }

    fn div(&self, other: &Self) -> Self {
        assert!(!Ring::is_zero(other), "division by exact zero");
        Complex::with_val(cprec(self), self / other)
    }

    fn magnitude(&self) -> f64 {
        self.real().to_f64().hypot(self.imag().to_f64())
    }

    fn eps(prec: &u32) -> f64 {
        2f64.powi(1 - *prec as i32)
    }

    fn root(&self, k: u32) -> Result<(Self, RootBranch)> {
        let prec = cprec(self);
        if self.imag().is_zero() {
            let re = self.real();
            if *re > 0 {
                let r = Float::with_val(prec, re.root_ref(k));
                return Ok((Complex::with_val(prec, (r, 0)), RootBranch::RealPositive));
            }
            if k % 2 == 1 && !re.is_zero() {
                let r = Float::with_val(prec, re.root_ref(k));
                return Ok((Complex::with_val(prec, (r, 0)), RootBranch::RealOdd));
            }
        }
        if Ring::is_zero(self) {
            return Err(Error::degenerate(None, "root of zero normalization constant"));
        }
        let e = Float::with_val(prec, 1) / k;
        let r = Complex::with_val(prec, self.pow(&e));
        Ok((r, RootBranch::PrincipalComplex))
    }

    fn to_text(&self) -> String {
        if self.imag().is_zero() {
            self.real().to_string_radix(10, None)
        } else {
            format!(
                "({} {})",
                self.real().to_string_radix(10, None),
                self.imag().to_string_radix(10, None)
            )
        }
    }

    fn parse_text(s: &str, prec: &u32) -> Result<Self> {
        let parsed = Complex::parse(s.trim()).map_err(|e| Error::Parse(format!("float {s:?}: {e}")))?;
        Ok(Complex::with_val(*prec, parsed))
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.real().to_f64(), self.imag().to_f64())
    }
}

impl FloatScalar for Complex {
    fn from_c64(z: Complex64, prec: &u32) -> Self {
        Complex::with_val(*prec, (z.re, z.im))
    }

    fn sqrt(&self) -> Self {
        Complex::with_val(cprec(self), self.sqrt_ref())
    }

    fn ln(&self) -> Self {
        Complex::with_val(cprec(self), self.ln_ref())
    }

    fn conj(&self) -> Self {
        Complex::with_val(cprec(self), self.conj_ref())
    }

    fn real_part(&self) -> Self {
        Complex::with_val(cprec(self), (self.real(), 0))
    }
}

/// Shorthand constructor for a float-backend value.
pub fn cf(x: f64, prec: u32) -> Complex {
    Complex::with_val(prec, x)
}

/// Shorthand constructor for an exact rational `num/den`.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::from((num, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_roots_follow_branch_policy() {
        let (r, b) = q(16, 81).root(4).unwrap();
        assert_eq!(r, q(2, 3));
        assert_eq!(b, RootBranch::RealPositive);
        let (r, b) = q(-8, 27).root(3).unwrap();
        assert_eq!(r, q(-2, 3));
        assert_eq!(b, RootBranch::RealOdd);
        assert!(matches!(q(2, 1).root(2), Err(Error::IrrationalNormalization(_))));
        assert!(matches!(q(-16, 1).root(4), Err(Error::IrrationalNormalization(_))));
    }

    #[test]
    fn complex_root_falls_back_to_principal_branch() {
        let x = cf(-16.0, 128);
        let (r, b) = x.root(4).unwrap();
        assert_eq!(b, RootBranch::PrincipalComplex);
        let back = r.pow_i(4);
        assert!(back.sub(&x).magnitude() < 1e-30);
        let z = r.to_c64();
        assert!((z.re - 2f64.sqrt()).abs() < 1e-12 && (z.im - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let x = q(-123456789, 987654321);
        assert_eq!(Rational::parse_text(&x.to_text(), &()).unwrap(), x);
        let z = Complex::with_val(256, (Float::with_val(256, 1) / 3, -0.25));
        assert_eq!(Complex::parse_text(&z.to_text(), &256).unwrap(), z);
        let y = Complex::with_val(256, Float::with_val(256, 2).sqrt());
        assert_eq!(Complex::parse_text(&y.to_text(), &256).unwrap(), y);
    }

    #[test]
    fn eps_matches_precision() {
        assert_eq!(Complex::eps(&53), f64::EPSILON);
        assert!(Complex::eps(&256) < 1e-76);
    }

    #[test]
    fn pow_i_handles_negative_exponents() {
        assert_eq!(q(2, 3).pow_i(-3), q(27, 8));
        assert_eq!(q(5, 1).pow_i(0), q(1, 1));
    }
}
