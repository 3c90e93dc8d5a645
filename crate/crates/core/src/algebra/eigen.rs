//! Eigenvalues of small dense matrices on the float backend, via the
//! characteristic polynomial and simultaneous (Aberth–Ehrlich) root
//! iteration at full working precision.

use num_complex::Complex64;

use super::laurent::char_poly_ring;
use super::matrix::Matrix;
use super::scalar::{FloatScalar, Scalar};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 2000;

fn horner<S: FloatScalar>(coeffs: &[S], z: &S) -> (S, S) {
    let mut p = coeffs.last().unwrap().clone();
    let mut dp = p.zero_like();
    for c in coeffs.iter().rev().skip(1) {
        dp = dp.mul(z).add(&p);
        p = p.mul(z).add(c);
    }
    (p, dp)
}

/// All complex roots of `Σ coeffs[i] z^i` (leading coefficient nonzero).
pub fn poly_roots<S: FloatScalar>(coeffs: &[S]) -> Result<Vec<S>> {
    let lead = coeffs
        .last()
        .filter(|c| !c.is_zero())
        .ok_or_else(|| Error::contract("polynomial with vanishing leading coefficient"))?;
    let m = coeffs.len() - 1;
    if m == 0 {
        return Ok(Vec::new());
    }
    let ctx = lead.ctx();
    let monic: Vec<S> = coeffs.iter().map(|c| c.div(lead)).collect();
    let eps = S::eps(&ctx);

    let radius = monic[..m]
        .iter()
        .enumerate()
        .map(|(i, c)| c.magnitude().powf(1.0 / (m - i) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut z: Vec<S> = (0..m)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / m as f64 + 0.4;
            S::from_c64(Complex64::from_polar(radius, theta), &ctx)
        })
        .collect();

    // Clustered roots converge only linearly and may exhaust the budget;
    // the estimates are still returned and `check_simple` reports them.
    for _ in 0..MAX_ITERATIONS {
        let mut max_rel = 0.0f64;
        for k in 0..m {
            let (p, dp) = horner(&monic, &z[k]);
            if p.is_zero() {
                continue;
            }
            let mut repulsion = z[k].zero_like();
            for j in 0..m {
                if j != k {
                    let diff = z[k].sub(&z[j]);
                    if !diff.is_zero() {
                        repulsion = repulsion.add(&diff.inv());
                    }
                }
            }
            let ratio = if dp.is_zero() { p.clone() } else { p.div(&dp) };
            let denom = z[k].one_like().sub(&ratio.mul(&repulsion));
            let w = if denom.is_zero() { ratio } else { ratio.div(&denom) };
            let rel = w.magnitude() / z[k].magnitude().max(f64::MIN_POSITIVE);
            max_rel = max_rel.max(rel);
            z[k] = z[k].sub(&w);
        }
        if max_rel <= 16.0 * eps {
            break;
        }
    }
    // Newton polish.
    for zk in &mut z {
        for _ in 0..2 {
            let (p, dp) = horner(&monic, zk);
            if dp.is_zero() {
                break;
            }
            *zk = zk.sub(&p.div(&dp));
        }
    }
    Ok(z)
}

/// Eigenvalues of a square numeric matrix.
pub fn eigenvalues<S: FloatScalar>(a: &Matrix<S>) -> Result<Vec<S>> {
    assert!(a.is_square());
    let cp = char_poly_ring(&a.to_rows());
    poly_roots(&cp)
}

/// Fails with `RepeatedSpectrum` when two eigenvalues coincide within
/// `sqrt(eps)` relative to the spectral radius.
pub fn check_simple<S: FloatScalar>(values: &[S]) -> Result<()> {
    let Some(first) = values.first() else {
        return Ok(());
    };
    let scale = values.iter().map(Scalar::magnitude).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = S::eps(&first.ctx()).sqrt() * scale;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            if values[i].sub(&values[j]).magnitude() <= tol {
                return Err(Error::RepeatedSpectrum(format!(
                    "eigenvalues {} and {} coincide",
                    values[i].to_c64(),
                    values[j].to_c64()
                )));
            }
        }
    }
    Ok(())
}

/// A nonzero kernel vector of a (numerically) rank-deficient matrix, by
/// complete-pivoting elimination.
pub fn kernel_vector<S: FloatScalar>(a: &Matrix<S>) -> Vec<S> {
    let m = a.rows();
    let n = a.cols();
    let mut rows = a.to_rows();
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = m.min(n.saturating_sub(1));
    for k in 0..steps {
        let mut best = (k, k, -1.0);
        for (i, row) in rows.iter().enumerate().skip(k) {
            for (j, x) in row.iter().enumerate().skip(k) {
                let mag = x.magnitude();
                if mag > best.2 {
                    best = (i, j, mag);
                }
            }
        }
        rows.swap(k, best.0);
        for row in rows.iter_mut() {
            row.swap(k, best.1);
        }
        perm.swap(k, best.1);
        if rows[k][k].is_zero() {
            break;
        }
        let pivot = rows[k][k].clone();
        for i in k + 1..m {
            if rows[i][k].is_zero() {
                continue;
            }
            let f = rows[i][k].div(&pivot);
            for j in k..n {
                let t = f.mul(&rows[k][j]);
                rows[i][j] = rows[i][j].sub(&t);
            }
        }
    }
    let ctx = a.get(0, 0).ctx();
    let mut y = vec![S::zero(&ctx); n];
    y[n - 1] = S::one(&ctx);
    for i in (0..steps).rev() {
        if rows[i][i].is_zero() {
            continue;
        }
        let mut acc = S::zero(&ctx);
        for j in i + 1..n {
            acc = acc.add(&rows[i][j].mul(&y[j]));
        }
        y[i] = acc.neg().div(&rows[i][i]);
    }
    let mut x = vec![S::zero(&ctx); n];
    for (pos, &col) in perm.iter().enumerate() {
        x[col] = y[pos].clone();
    }
    x
}

/// Eigenpairs of a diagonalizable matrix with simple spectrum.
pub fn eigenpairs<S: FloatScalar>(a: &Matrix<S>) -> Result<Vec<(S, Vec<S>)>> {
    let values = eigenvalues(a)?;
    check_simple(&values)?;
    let m = a.rows();
    let ctx = a.get(0, 0).ctx();
    Ok(values
        .into_iter()
        .map(|k| {
            let shifted = a.sub(&Matrix::identity(m, &ctx).scale(&k));
            let v = kernel_vector(&shifted);
            (k, v)
        })
        .collect())
}
