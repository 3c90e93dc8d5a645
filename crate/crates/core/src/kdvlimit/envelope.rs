//! Envelopes of chord hyperplanes of a nondegenerate curve.
//!
//! Everything is computed in the frame coordinates at each sample `x₀`,
//! where `G(x₀ + s)` becomes the vector of canonical solutions `φ_m(s)`
//! with `φ_m^{(k)}(0) = δ_{mk}`. Their Taylor series follow from the ODE, so
//! every `x`-derivative is exact up to truncation. Spectral differentiation
//! in `x` is not an option: the hyperplane covectors satisfy
//! `n(x + 2π) ∝ M^{−T} n(x)` and are periodic only when `M = Id`.
//!
//! The hyperplane through `G(x + t_i ε)` is spanned by the divided
//! differences of `G` over the nodes, which stay of unit size as `ε → 0`;
//! for monomials they are complete homogeneous symmetric polynomials of the
//! nodes, so no cancellation occurs.

use nalgebra::{DMatrix, DVector};

use super::curve::{det, SampledCurve};
use super::grid::TrigInterpolant;
use super::jet::{cross, det as jet_det, Jet};
use crate::error::{Error, Result};

/// Largest `max |t_i ε|` accepted, so the local expansions converge fast.
pub const MAX_REACH: f64 = 0.5;

/// Condition number above which the potential solve is refused.
pub const MAX_CONDITION: f64 = 1e12;

/// Node offsets `t_i`: `−ϰ, …, ϰ` for `d = 2ϰ + 1`, and `±1, ±3, …, ±(2ϰ − 1)`
/// for `d = 2ϰ`.
pub fn nodes(d: usize) -> Vec<f64> {
    let kappa = (d / 2) as i64;
    if d % 2 == 1 {
        (-kappa..=kappa).map(|t| t as f64).collect()
    } else {
        (1..=kappa).flat_map(|m| [-(2 * m - 1) as f64, (2 * m - 1) as f64]).collect()
    }
}

fn series_order(d: usize) -> usize {
    3 * d + 30
}

fn jet_order(d: usize) -> usize {
    3 * d
}

/// Taylor coefficients of the canonical solutions at `x₀`, from the Taylor
/// coefficients `v[j][m]` of `u_j` there: `c[m][k]` for `φ_m`.
fn canonical_series(v: &[Vec<f64>], order: usize) -> Vec<Vec<f64>> {
    let d = v.len();
    // (a + j)! / a!
    let rising = |a: usize, j: usize| (a + 1..=a + j).map(|x| x as f64).product::<f64>();
    (0..=d)
        .map(|m| {
            let mut c = vec![0.0; order + 1];
            c[m] = 1.0 / (1..=m).map(|x| x as f64).product::<f64>();
            for n in 0..order.saturating_sub(d) {
                let mut s = 0.0;
                for (j, vj) in v.iter().enumerate() {
                    for (mm, vjm) in vj.iter().enumerate().take(n + 1) {
                        let a = n - mm;
                        s += vjm * rising(a, j) * c[a + j];
                    }
                }
                c[n + d + 1] = -s / rising(n, d + 1);
            }
            c
        })
        .collect()
}

/// `table[p] = h_p(z_0, …, z_r)` for `p ≤ top`.
fn complete_homogeneous(z: &[f64], top: usize) -> Vec<f64> {
    let mut h: Vec<f64> = (0..=top).map(|p| z[0].powi(p as i32)).collect();
    for &zi in &z[1..] {
        for p in 1..=top {
            h[p] += zi * h[p - 1];
        }
    }
    h
}

/// The jet in `h` of the divided difference of `Σ c_n s^n` over the nodes
/// `z_0..z_r` shifted by `h`.
fn divided_difference_jet(c: &[f64], h: &[f64], r: usize, order: usize) -> Jet {
    let k_max = c.len() - 1;
    let mut out = vec![0.0; order + 1];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut binom = 1.0; // C(n, k), starting at n = k
        for n in k..=k_max {
            if n > k {
                binom = binom * n as f64 / (n - k) as f64;
            }
            if n >= k + r {
                *slot += c[n] * binom * h[n - k - r];
            }
        }
    }
    Jet::new(out)
}

/// The envelope at one sample, normalized to unit Wronskian.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeSample {
    /// `L_ε(x_k)` in the coordinates of the curve.
    pub point: Vec<f64>,
    /// `L_ε^{(m)}(x_k)`, `m ≤ d + 1`, in the frame coordinates at `x_k`.
    pub local: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub eps: f64,
    pub samples: Vec<EnvelopeSample>,
}

fn check_nodes(d: usize, eps: f64) -> Result<Vec<f64>> {
    let t = nodes(d);
    if !eps.is_finite() {
        return Err(Error::contract("ε must be finite"));
    }
    let reach = t.iter().fold(0.0f64, |m, x| m.max(x.abs())) * eps.abs();
    if reach > MAX_REACH {
        return Err(Error::contract(format!("ε = {eps} reaches {reach} from x, above {MAX_REACH}")));
    }
    // Coincident sample points, either equal or one period apart.
    for (i, a) in t.iter().enumerate() {
        for b in &t[i + 1..] {
            let gap = ((a - b) * eps).abs();
            let turns = gap / (2.0 * std::f64::consts::PI);
            if gap == 0.0 || (turns - turns.round()).abs() < 1e-12 {
                return Err(Error::DegenerateConfiguration {
                    index: None,
                    reason: format!("ε = {eps} makes the chord points coincide"),
                });
            }
        }
    }
    Ok(t)
}

fn envelope_at(d: usize, potentials: &[TrigInterpolant], x: f64, z: &[f64], index: usize) -> Result<Vec<Vec<f64>>> {
    let dim = d + 1;
    let k_series = series_order(d);
    let order = jet_order(d);
    let v: Vec<Vec<f64>> = potentials.iter().map(|p| p.taylor(x, k_series)).collect();
    let series = canonical_series(&v, k_series);

    // Span of the chord points, as divided differences over z_0..z_r.
    let spans: Vec<Vec<Jet>> = (0..d)
        .map(|r| {
            let h = complete_homogeneous(&z[..=r], k_series);
            series.iter().map(|c| divided_difference_jet(c, &h, r, order)).collect()
        })
        .collect();
    let mut normal = vec![cross(&spans)];
    for _ in 1..d {
        let next = normal.last().unwrap().iter().map(Jet::derivative).collect();
        normal.push(next);
    }
    let mut lifted = vec![cross(&normal)];
    for _ in 0..d {
        let next = lifted.last().unwrap().iter().map(Jet::derivative).collect();
        lifted.push(next);
    }
    let rows: Vec<Vec<Jet>> = (0..dim).map(|i| lifted.iter().map(|col| col[i].clone()).collect()).collect();
    let w = jet_det(&rows);
    let scale: f64 = lifted.iter().map(|col| col.iter().map(|j| j.value() * j.value()).sum::<f64>().sqrt()).product();
    if !(w.value().abs() > 1e-12 * scale) {
        return Err(Error::DegenerateConfiguration {
            index: Some(index as i64),
            reason: format!("envelope Wronskian {:e} vanishes at x = {x}", w.value()),
        });
    }
    let w = if w.value() < 0.0 { w.scale(-1.0) } else { w };
    let phi = w.powf(-1.0 / dim as f64);
    let normalized: Vec<Jet> = lifted[0].iter().map(|c| phi.mul(c)).collect();
    Ok((0..=dim).map(|m| normalized.iter().map(|c| c.deriv_at(m)).collect()).collect())
}

/// The lifted envelope `L_ε` of the hyperplanes through the chord points
/// `G(x + t_i ε)`, normalized to unit Wronskian, at every grid sample.
///
/// Conditions `n^{(k)} · L = 0`, `k < d`, on the hyperplane covector `n`
/// are the determinant system `det(G(x + t_1 ε), …, G(x + t_d ε), L^{(j)}) = 0`
/// rewritten by differentiation, and `L` spans their common nullspace.
pub fn envelope(curve: &SampledCurve, eps: f64) -> Result<Envelope> {
    let d = curve.d;
    let z: Vec<f64> = check_nodes(d, eps)?.iter().map(|t| t * eps).collect();
    let grid = curve.operator.grid();
    let potentials: Vec<TrigInterpolant> = curve.operator.potentials().iter().map(|u| grid.interpolant(u)).collect();
    let samples = grid
        .points()
        .into_iter()
        .enumerate()
        .map(|(k, x)| {
            let local = envelope_at(d, &potentials, x, &z, k)?;
            let frame = &curve.frames[k];
            let point = frame.iter().map(|row| row.iter().zip(&local[0]).map(|(a, b)| a * b).sum()).collect();
            Ok(EnvelopeSample { point, local })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Envelope { eps, samples })
}

/// Potentials of the unit-Wronskian envelope, from the least-squares solve
/// of `L^{(d+1)} = −Σ_{j<d} u_j L^{(j)}` over the `d + 1` components.
pub fn envelope_potentials(env: &Envelope, d: usize) -> Result<Vec<Vec<f64>>> {
    let mut u = vec![Vec::with_capacity(env.samples.len()); d];
    for (k, s) in env.samples.iter().enumerate() {
        let a = DMatrix::from_fn(d + 1, d, |i, j| s.local[j][i]);
        let b = DVector::from_fn(d + 1, |i, _| -s.local[d + 1][i]);
        let svd = a.svd(true, true);
        let (hi, lo) = (svd.singular_values.max(), svd.singular_values.min());
        if !(lo > 0.0) || hi / lo > MAX_CONDITION {
            return Err(Error::IllConditioned(format!("potential solve at sample {k}: condition {:e}", hi / lo)));
        }
        let sol = svd.solve(&b, 0.0).map_err(|e| Error::IllConditioned(e.to_string()))?;
        for (j, uj) in u.iter_mut().enumerate() {
            uj.push(sol[j]);
        }
    }
    Ok(u)
}

/// Largest relative residual of `det(G(x + t_1 ε), …, G(x + t_d ε), L^{(j)}(x))`,
/// `j < d`, at the given samples. Chord points come from integrating the
/// curve to `x + t_i ε`, and each determinant is divided by the volume of
/// the chord points times `|L^{(j)}|`, so the value is the sine of the angle
/// between `L^{(j)}` and the hyperplane.
pub fn determinant_residual(curve: &SampledCurve, env: &Envelope, samples: &[usize]) -> Result<f64> {
    let d = curve.d;
    let h = curve.operator.grid().step();
    let mut worst = 0.0f64;
    for &k in samples {
        let x = k as f64 * h;
        let pts: Vec<Vec<f64>> = nodes(d)
            .iter()
            .map(|t| curve.frame_at(x + t * env.eps).map(|f| f.iter().map(|row| row[0]).collect()))
            .collect::<Result<_>>()?;
        let p = DMatrix::from_fn(d + 1, d, |i, c| pts[c][i]);
        let volume = (p.transpose() * &p).determinant().abs().sqrt();
        let frame = &curve.frames[k];
        for j in 0..d {
            let lj: Vec<f64> = frame.iter().map(|row| row.iter().zip(&env.samples[k].local[j]).map(|(a, b)| a * b).sum()).collect();
            let norm = lj.iter().map(|x| x * x).sum::<f64>().sqrt();
            let m: Vec<Vec<f64>> = (0..=d).map(|i| pts.iter().map(|q| q[i]).chain([lj[i]]).collect()).collect();
            worst = worst.max(det(&m).abs() / (volume * norm));
        }
    }
    Ok(worst)
}

/// Largest sine of the angle between `L_ε(x_k)` and `G(x_k)`.
pub fn projective_gap(curve: &SampledCurve, env: &Envelope) -> f64 {
    env.samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let g = curve.point(k);
            let dot: f64 = g.iter().zip(&s.point).map(|(a, b)| a * b).sum();
            let (ng, nl) = (g.iter().map(|x| x * x).sum::<f64>(), s.point.iter().map(|x| x * x).sum::<f64>());
            (1.0 - dot * dot / (ng * nl)).max(0.0).sqrt()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::super::curve::curve_from_potentials;
    use super::super::grid::CircleGrid;
    use super::super::operator::DiffOperator;
    use super::*;

    fn curve(d: usize) -> SampledCurve {
        let g = CircleGrid::new(32).unwrap();
        let u = (0..d).map(|j| g.sample(|x| 0.3 * ((j + 1) as f64 * x).cos() + 0.2 * (x + j as f64).sin())).collect();
        curve_from_potentials(&DiffOperator::agd(&g, u).unwrap()).unwrap()
    }

    #[test]
    fn node_patterns() {
        assert_eq!(nodes(3), vec![-1.0, 0.0, 1.0]);
        assert_eq!(nodes(5), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(nodes(2), vec![-1.0, 1.0]);
        assert_eq!(nodes(4), vec![-1.0, 1.0, -3.0, 3.0]);
    }

    #[test]
    fn canonical_series_of_constant_potential() {
        // φ'' + φ = 0 (d = 1): cos and sin.
        let c = canonical_series(&[vec![1.0, 0.0, 0.0]], 8);
        let cos = [1.0, 0.0, -0.5, 0.0, 1.0 / 24.0, 0.0, -1.0 / 720.0, 0.0, 1.0 / 40320.0];
        for (a, b) in c[0].iter().zip(cos) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((c[1][3] + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn divided_differences_match_direct_quotients() {
        let c = vec![0.3, -1.0, 0.5, 2.0, -0.7, 0.1];
        let f = |s: f64| c.iter().enumerate().map(|(n, a)| a * s.powi(n as i32)).sum::<f64>();
        let z = [-0.2, 0.1, 0.4];
        let h = complete_homogeneous(&z, 5);
        let jet = divided_difference_jet(&c, &h, 2, 0);
        let f01 = (f(z[1]) - f(z[0])) / (z[1] - z[0]);
        let f12 = (f(z[2]) - f(z[1])) / (z[2] - z[1]);
        assert!((jet.value() - (f12 - f01) / (z[2] - z[0])).abs() < 1e-13);
    }

    #[test]
    fn envelope_satisfies_the_determinant_system() {
        for d in [2, 3] {
            let c = curve(d);
            let env = envelope(&c, 0.1).unwrap();
            let res = determinant_residual(&c, &env, &[3, 11, 20]).unwrap();
            assert!(res <= 1e-8, "d = {d}: {res}");
        }
    }

    #[test]
    fn envelope_tends_to_the_curve() {
        let c = curve(3);
        let gaps: Vec<f64> = [0.08, 0.04, 0.02].iter().map(|&e| projective_gap(&c, &envelope(&c, e).unwrap())).collect();
        for w in gaps.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!((slope - 2.0).abs() < 0.2, "{gaps:?}");
        }
    }

    #[test]
    fn wronskian_normalization_recovers_potentials() {
        let c = curve(3);
        let env = envelope(&c, 0.02).unwrap();
        let u = envelope_potentials(&env, 3).unwrap();
        for (a, b) in u.iter().flatten().zip(c.operator.potentials().iter().flatten()) {
            assert!((a - b).abs() < 0.05, "{a} vs {b}");
        }
    }

    #[test]
    fn rescaling_the_normal_keeps_the_envelope() {
        // ρ n has derivatives that are triangular combinations of those of n,
        // so the stacked nullspace is unchanged.
        let n: Vec<Jet> = (0..4).map(|i| Jet::new((0..8).map(|k| ((i * 7 + k * 3) % 5) as f64 - 1.7 + 0.1 * k as f64).collect())).collect();
        let rho = Jet::new(vec![1.3, -0.4, 0.7, 0.2, -0.1, 0.05, 0.3, -0.2]);
        let stack = |v: &Vec<Jet>| {
            let mut rows = vec![v.clone()];
            for _ in 1..3 {
                let next = rows.last().unwrap().iter().map(Jet::derivative).collect();
                rows.push(next);
            }
            cross(&rows).iter().map(Jet::value).collect::<Vec<f64>>()
        };
        let a = stack(&n);
        let b = stack(&n.iter().map(|c| rho.mul(c)).collect());
        let ratio = b[0] / a[0];
        for (x, y) in a.iter().zip(&b) {
            assert!((y - ratio * x).abs() < 1e-12 * ratio.abs() * (1.0 + x.abs()));
        }
    }

    #[test]
    fn collapsed_chords_are_degenerate() {
        let c = curve(3);
        assert!(matches!(envelope(&c, 0.0), Err(Error::DegenerateConfiguration { .. })));
        assert!(matches!(envelope(&c, 1.0), Err(Error::Contract(_))));
    }
}
