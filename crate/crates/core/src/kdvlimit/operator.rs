use serde::{Deserialize, Serialize};

use super::grid::CircleGrid;
use crate::error::{Error, Result};

/// `Σ_{i ≤ order} c_i(x) ∂^i` with every coefficient sampled on one grid.
///
/// The operators of the flow are monic and traceless,
/// `L = ∂^{d+1} + u_{d−1} ∂^{d−1} + … + u_0`, so `c_{d+1} ≡ 1` and
/// `c_d ≡ 0`; commutators are general and of lower order.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOperator {
    grid: CircleGrid,
    coeffs: Vec<Vec<f64>>,
}

/// Relative size allowed for the terms of a commutator that must cancel.
pub const ORDER_DROP_TOL: f64 = 1e-8;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

impl DiffOperator {
    /// The monic traceless operator of order `d + 1` with potentials
    /// `u = (u_0, …, u_{d−1})`.
    pub fn agd(grid: &CircleGrid, potentials: Vec<Vec<f64>>) -> Result<Self> {
        let d = potentials.len();
        if d < 1 {
            return Err(Error::contract("need at least one potential"));
        }
        if potentials.iter().any(|u| u.len() != grid.len()) {
            return Err(Error::contract(format!("every potential needs {} samples", grid.len())));
        }
        if potentials.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::contract("potentials must be finite"));
        }
        let mut coeffs = potentials;
        coeffs.push(vec![0.0; grid.len()]);
        coeffs.push(vec![1.0; grid.len()]);
        Ok(DiffOperator { grid: grid.clone(), coeffs })
    }

    pub fn from_coeffs(grid: &CircleGrid, coeffs: Vec<Vec<f64>>) -> Self {
        assert!(coeffs.iter().all(|c| c.len() == grid.len()));
        DiffOperator { grid: grid.clone(), coeffs }
    }

    pub fn grid(&self) -> &CircleGrid {
        &self.grid
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `d` for an operator of order `d + 1`.
    pub fn dimension(&self) -> usize {
        self.order() - 1
    }

    pub fn coeff(&self, i: usize) -> &[f64] {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    /// `u_0, …, u_{d−1}` of a monic traceless operator.
    pub fn potentials(&self) -> &[Vec<f64>] {
        &self.coeffs[..self.order() - 1]
    }

    /// `A ∘ B` by the Leibniz rule `∂^i b = Σ_r C(i,r) b^{(r)} ∂^{i−r}`.
    pub fn compose(&self, other: &DiffOperator) -> DiffOperator {
        let n = self.grid.len();
        let (p, q) = (self.order(), other.order());
        let mut out = vec![vec![0.0; n]; p + q + 1];
        let derivs: Vec<Vec<Vec<f64>>> = other
            .coeffs
            .iter()
            .map(|b| (0..=p as u32).map(|r| self.grid.derivative(b, r)).collect())
            .collect();
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.iter().all(|x| *x == 0.0) {
                continue;
            }
            for (j, db) in derivs.iter().enumerate() {
                for r in 0..=i {
                    let c = binomial(i, r);
                    let slot = &mut out[i - r + j];
                    for ((s, x), y) in slot.iter_mut().zip(a).zip(&db[r]) {
                        *s += c * x * y;
                    }
                }
            }
        }
        DiffOperator::from_coeffs(&self.grid, out)
    }
}

/// `Q₂ = ∂² + (2/(d+1)) u_{d−1}` for `L` of order `d + 1`.
pub fn q2_of(l: &DiffOperator) -> DiffOperator {
    let d = l.dimension();
    let n = l.grid.len();
    let f: Vec<f64> = l.coeff(d - 1).iter().map(|u| 2.0 / (d + 1) as f64 * u).collect();
    DiffOperator::from_coeffs(&l.grid, vec![f, vec![0.0; n], vec![1.0; n]])
}

/// `[Q, L] = QL − LQ` truncated to order `d − 1`. The coefficients of
/// `∂^d` and above cancel identically; their sampled size is checked against
/// [`ORDER_DROP_TOL`] times the scale of the products.
pub fn commutator(q: &DiffOperator, l: &DiffOperator) -> Result<DiffOperator> {
    commutator_with_residual(q, l).map(|(c, _)| c)
}

/// [`commutator`] together with the relative size of the dropped terms.
pub fn commutator_with_residual(q: &DiffOperator, l: &DiffOperator) -> Result<(DiffOperator, f64)> {
    if q.grid != l.grid {
        return Err(Error::contract("operators live on different grids"));
    }
    let d = l.dimension();
    let ql = q.compose(l);
    let lq = l.compose(q);
    let scale = ql.coeffs.iter().chain(&lq.coeffs).map(|c| max_abs(c)).fold(1.0, f64::max);
    let diff: Vec<Vec<f64>> = ql.coeffs.iter().zip(&lq.coeffs).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
    let residual = diff[d..].iter().map(|c| max_abs(c)).fold(0.0, f64::max) / scale;
    if residual > ORDER_DROP_TOL {
        return Err(Error::StructuralMismatch(format!(
            "terms of order ≥ {d} in [Q, L] do not cancel: relative size {residual:e}"
        )));
    }
    Ok((DiffOperator::from_coeffs(&l.grid, diff[..d].to_vec()), residual))
}

/// Grid samples of the potentials, as stored in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialsFile {
    pub d: usize,
    pub n: usize,
    /// `u[j]` holds the samples of `u_j`.
    pub u: Vec<Vec<f64>>,
}

impl PotentialsFile {
    pub fn from_operator(l: &DiffOperator) -> Self {
        PotentialsFile {
            d: l.dimension(),
            n: l.grid.len(),
            u: l.potentials().to_vec(),
        }
    }

    pub fn into_operator(self) -> Result<DiffOperator> {
        if self.u.len() != self.d {
            return Err(Error::Parse(format!("expected {} potentials, found {}", self.d, self.u.len())));
        }
        let grid = CircleGrid::new(self.n)?;
        DiffOperator::agd(&grid, self.u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> CircleGrid {
        CircleGrid::new(64).unwrap()
    }

    fn constant_operator(g: &CircleGrid, order: usize) -> DiffOperator {
        let mut c = vec![vec![0.0; g.len()]; order + 1];
        c[order] = vec![1.0; g.len()];
        DiffOperator::from_coeffs(g, c)
    }

    #[test]
    fn q2_coefficients() {
        let g = grid();
        let l = DiffOperator::agd(&g, vec![g.sample(f64::sin), g.sample(f64::cos)]).unwrap();
        let q = q2_of(&l);
        assert_eq!(q.order(), 2);
        for (a, x) in q.coeff(0).iter().zip(g.points()) {
            assert!((a - 2.0 / 3.0 * x.cos()).abs() < 1e-15);
        }
        assert!(q.coeff(1).iter().all(|x| *x == 0.0));
        let l3 = DiffOperator::agd(&g, vec![vec![0.0; 64], vec![0.0; 64], g.sample(f64::sin)]).unwrap();
        for (a, x) in q2_of(&l3).coeff(0).iter().zip(g.points()) {
            assert!((a - 0.5 * x.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_coefficients_commute() {
        let g = grid();
        let c = commutator(&constant_operator(&g, 2), &constant_operator(&g, 3)).unwrap();
        assert!(c.coeffs().iter().flatten().all(|x| x.abs() < 1e-14));
        let l = DiffOperator::agd(&g, vec![vec![0.7; 64], vec![-1.3; 64]]).unwrap();
        let c = commutator(&q2_of(&l), &l).unwrap();
        assert!(c.coeffs().iter().flatten().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn boussinesq_commutator_matches_test_functions() {
        // Oracle: apply QL − LQ to test functions by spectral differentiation
        // of the composed action, independently of the Leibniz bookkeeping.
        let g = grid();
        let u1 = g.sample(f64::cos);
        let l = DiffOperator::agd(&g, vec![vec![0.0; 64], u1]).unwrap();
        let q = q2_of(&l);
        let c = commutator(&q, &l).unwrap();
        assert_eq!(c.order(), 1);
        let apply = |op: &DiffOperator, f: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; f.len()];
            for (i, a) in op.coeffs().iter().enumerate() {
                let df = g.derivative(f, i as u32);
                for ((o, x), y) in out.iter_mut().zip(a).zip(&df) {
                    *o += x * y;
                }
            }
            out
        };
        for f in [g.sample(|x| (2.0 * x).sin()), g.sample(|x| (x + 0.3).cos() + 0.2 * (3.0 * x).sin())] {
            let lhs: Vec<f64> = apply(&q, &apply(&l, &f)).iter().zip(apply(&l, &apply(&q, &f))).map(|(a, b)| a - b).collect();
            let rhs = apply(&c, &f);
            for (a, b) in lhs.iter().zip(&rhs) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn order_drops_for_smooth_potentials() {
        let g = CircleGrid::new(128).unwrap();
        for d in 2..=4 {
            let u: Vec<Vec<f64>> = (0..d).map(|j| g.sample(|x| 0.3 * ((j + 1) as f64 * x).sin() + 0.2 * (x + j as f64).cos())).collect();
            let l = DiffOperator::agd(&g, u).unwrap();
            let (c, res) = commutator_with_residual(&q2_of(&l), &l).unwrap();
            assert_eq!(c.order(), d - 1);
            assert!(res <= 1e-12, "d = {d}: {res}");
        }
    }

    #[test]
    fn potentials_round_trip_through_json() {
        let g = CircleGrid::new(32).unwrap();
        let l = DiffOperator::agd(&g, vec![g.sample(f64::sin), g.sample(f64::cos)]).unwrap();
        let text = serde_json::to_string(&PotentialsFile::from_operator(&l)).unwrap();
        let back: PotentialsFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_operator().unwrap(), l);
    }
}
