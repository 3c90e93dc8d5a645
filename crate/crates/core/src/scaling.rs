//! The one-parameter scaling of coordinates that commutes with the map, and
//! the bridge between the geometric monodromy of the scaled frames and the
//! Lax monodromy at `λ = s⁻²`.

use serde::Serialize;

use crate::algebra::eigen::{check_simple, eigenvalues};
use crate::algebra::{FloatScalar, Matrix, Scalar};
use crate::error::{Error, Result};
use crate::lax::lax_monodromy;
use crate::pentagram::pentagram_map;
use crate::polygon::TwistedCoords;

/// `a_{j,k} ↦ s^{e_k} a_{j,k}`.
///
/// Odd `d`: `e_k = 1` for odd `k`, `0` for even `k`.
/// Even `d = 2ϰ`: `e_{2m} = m` and `e_{2m−1} = −(ϰ − m + 1)`, so `d = 2`
/// gives `(−1, 1)` and `d = 4` gives `(−2, 1, −1, 2)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScalingRule {
    pub d: usize,
    pub exponents: Vec<i64>,
}

impl ScalingRule {
    pub fn new(d: usize) -> Self {
        let kappa = (d / 2) as i64;
        let exponents = (1..=d as i64)
            .map(|k| match (d % 2, k % 2) {
                (1, 1) => 1,
                (1, _) => 0,
                (_, 0) => k / 2,
                _ => -(kappa - (k + 1) / 2 + 1),
            })
            .collect();
        ScalingRule { d, exponents }
    }

    /// `e_k`, `1 ≤ k ≤ d`.
    pub fn exponent(&self, k: usize) -> i64 {
        self.exponents[k - 1]
    }
}

pub fn apply_scaling<S: Scalar>(c: &TwistedCoords<S>, s: &S) -> Result<TwistedCoords<S>> {
    if s.is_zero() {
        return Err(Error::contract("scaling parameter must be nonzero"));
    }
    let rule = ScalingRule::new(c.d());
    let powers: Vec<S> = rule.exponents.iter().map(|&e| s.pow_i(e)).collect();
    Ok(c.map_coeffs(|_, k, x| x.mul(&powers[k - 1])))
}

/// Normwise gap `max |x − y| / max |y|` between two coordinate sets of one
/// shape; exactly zero when they agree.
fn normwise_gap<S: Scalar>(x: &TwistedCoords<S>, y: &TwistedCoords<S>) -> f64 {
    let mut diff = 0.0f64;
    for (a, b) in x.rows().iter().flatten().zip(y.rows().iter().flatten()) {
        let dv = a.sub(b);
        if !dv.is_zero() {
            diff = diff.max(dv.magnitude());
        }
    }
    if diff == 0.0 {
        0.0
    } else {
        diff / y.max_magnitude().max(f64::MIN_POSITIVE)
    }
}

/// Compares `T(scale_s(c))` with `scale_s(T(c))`.
pub fn scaling_invariance_check<S: Scalar>(c: &TwistedCoords<S>, s: &S) -> Result<f64> {
    let left = pentagram_map(&apply_scaling(c, s)?)?;
    let right = apply_scaling(&pentagram_map(c)?, s)?;
    Ok(normwise_gap(&left, &right))
}

/// Dimensions in which invariance is asserted; above this the check only
/// reports.
pub const ASSERTED_MAX_DIMENSION: usize = 6;

pub fn scaling_is_asserted(d: usize) -> bool {
    d <= ASSERTED_MAX_DIMENSION
}

/// Odd `d` only. The scaled frames satisfy `L_j(s⁻²)⁻¹ = g⁻¹ N_j(s) g / s`
/// with `g = diag(1, s, 1, s, …, s)`, so every eigenvalue `μ` of
/// `Π(s) = N_0(s) ⋯ N_{n−1}(s)` gives an eigenvalue `s^n / μ` of the Lax
/// monodromy at `λ = s⁻²`. Returns the largest mismatch, relative to the
/// spectral radius, after matching the two spectra greedily from the
/// largest predicted magnitude down.
pub fn monodromy_crosscheck<S: FloatScalar>(c: &TwistedCoords<S>, s: &S) -> Result<f64> {
    let d = c.d();
    if d % 2 == 0 {
        return Err(Error::contract("monodromy cross-check is defined for odd d only"));
    }
    if s.is_zero() {
        return Err(Error::contract("scaling parameter must be nonzero"));
    }
    let ctx = c.ctx().clone();
    let scaled = apply_scaling(c, s)?;
    let pi = (0..c.n()).fold(Matrix::identity(d + 1, &ctx), |acc, j| acc.mul(&scaled.frame_matrix(j)));
    let mu = eigenvalues(&pi)?;
    check_simple(&mu)?;
    let sn = s.pow_i(c.n() as i64);
    let mut predicted: Vec<S> = mu.iter().map(|m| sn.div(m)).collect();
    predicted.sort_by(|a, b| b.magnitude().total_cmp(&a.magnitude()));

    let lambda = s.pow_i(-2);
    let mut actual = eigenvalues(&lax_monodromy(c, 0).eval(&lambda))?;
    check_simple(&actual)?;
    let radius = actual.iter().map(Scalar::magnitude).fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    let mut worst = 0.0f64;
    for k in &predicted {
        let (i, gap) = actual
            .iter()
            .enumerate()
            .map(|(i, a)| (i, a.sub(k).magnitude()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("spectra have equal size");
        actual.swap_remove(i);
        worst = worst.max(gap / radius);
    }
    Ok(worst)
}

/// One line of a deviation report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationRow {
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub s: String,
    pub deviation: f64,
}

pub fn deviation_csv(rows: &[DeviationRow]) -> String {
    let mut out = String::from("d,n,seed,s,deviation\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{:e}\n", r.d, r.n, r.seed, r.s, r.deviation));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{cf, q};
    use crate::polygon::random_polygon;
    use rug::{Complex, Rational};

    #[test]
    fn exponents_by_dimension() {
        assert_eq!(ScalingRule::new(2).exponents, vec![-1, 1]);
        assert_eq!(ScalingRule::new(3).exponents, vec![1, 0, 1]);
        assert_eq!(ScalingRule::new(4).exponents, vec![-2, 1, -1, 2]);
        assert_eq!(ScalingRule::new(5).exponents, vec![1, 0, 1, 0, 1]);
        assert_eq!(ScalingRule::new(6).exponents, vec![-3, 1, -2, 2, -1, 3]);
    }

    #[test]
    fn three_dimensional_rule_scales_outer_coefficients() {
        let c = random_polygon::<Rational>(3, 5, 1, 4.0, &()).unwrap();
        let s = q(3, 2);
        let scaled = apply_scaling(&c, &s).unwrap();
        for j in 0..5 {
            assert_eq!(scaled.get(j, 1), &(c.get(j, 1).clone() * &s));
            assert_eq!(scaled.get(j, 2), c.get(j, 2));
            assert_eq!(scaled.get(j, 3), &(c.get(j, 3).clone() * &s));
        }
    }

    #[test]
    fn unit_and_zero_parameters() {
        let c = random_polygon::<Rational>(2, 5, 2, 4.0, &()).unwrap();
        assert_eq!(apply_scaling(&c, &q(1, 1)).unwrap(), c);
        assert_eq!(scaling_invariance_check(&c, &q(1, 1)).unwrap(), 0.0);
        assert!(matches!(apply_scaling(&c, &q(0, 1)), Err(Error::Contract(_))));
    }

    #[test]
    fn exact_invariance_through_dimension_six() {
        for (d, n) in [(2, 5), (3, 5), (4, 7), (5, 7), (6, 8)] {
            let c = random_polygon::<Rational>(d, n, 9, 3.0, &()).unwrap();
            assert_eq!(scaling_invariance_check(&c, &q(-5, 3)).unwrap(), 0.0, "d = {d}");
        }
    }

    #[test]
    fn float_invariance_in_three_dimensions() {
        for seed in 0..6 {
            let c = random_polygon::<Complex>(3, 7, seed, 0.5, &53).unwrap();
            let dev = scaling_invariance_check(&c, &cf(1.7, 53)).unwrap();
            assert!(dev <= 1e3 * f64::EPSILON, "seed {seed}: {dev}");
        }
    }

    #[test]
    fn crosscheck_matches_lax_spectrum() {
        let prec = 256;
        let c = random_polygon::<Complex>(3, 5, 3, 1.0, &prec).unwrap();
        for s in [0.5, 1.0, 2.0] {
            let dev = monodromy_crosscheck(&c, &cf(s, prec)).unwrap();
            assert!(dev <= 1e-25, "s = {s}: {dev}");
        }
        assert!(matches!(monodromy_crosscheck(&random_polygon::<Complex>(2, 5, 3, 1.0, &prec).unwrap(), &cf(2.0, prec)), Err(Error::Contract(_))));
    }

    #[test]
    fn csv_header_and_rows() {
        let rows = vec![DeviationRow { d: 3, n: 5, seed: 1, s: "3/2".into(), deviation: 0.0 }];
        assert_eq!(deviation_csv(&rows), "d,n,seed,s,deviation\n3,5,1,3/2,0e0\n");
    }
}
