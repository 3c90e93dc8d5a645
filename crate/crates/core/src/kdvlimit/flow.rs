use super::operator::{commutator, q2_of, DiffOperator};
use crate::error::{Error, Result};

/// Largest `dt · (N/2)²` accepted. The linearized flow is dispersive with
/// symbol eigenvalues of size about `k²`, and classical RK4 is stable on
/// the imaginary axis up to `2√2`.
pub const STABILITY_BUDGET: f64 = 1.0;

/// Blow-up threshold, relative to `1 + max |u(0)|`.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Tolerance scale of the flow comparisons.
pub const INTEGRATION_TOL: f64 = 1e-10;

/// `dt` and the potentials after each step, starting with the initial data.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<DiffOperator>,
}

impl Trajectory {
    pub fn last(&self) -> &DiffOperator {
        self.states.last().expect("a trajectory holds the initial state")
    }
}

/// `du_j/dt` = coefficient of `∂^j` in `[Q₂, L]`, `j < d`.
pub fn flow_rhs(l: &DiffOperator) -> Result<Vec<Vec<f64>>> {
    Ok(commutator(&q2_of(l), l)?.coeffs().to_vec())
}

fn axpy(u: &[Vec<f64>], a: f64, k: &[Vec<f64>]) -> Vec<Vec<f64>> {
    u.iter().zip(k).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + a * q).collect()).collect()
}

fn rk4_step(l: &DiffOperator, dt: f64) -> Result<DiffOperator> {
    let grid = l.grid();
    let u = l.potentials();
    let at = |v: Vec<Vec<f64>>| DiffOperator::agd(grid, v);
    let k1 = flow_rhs(l)?;
    let k2 = flow_rhs(&at(axpy(u, dt / 2.0, &k1))?)?;
    let k3 = flow_rhs(&at(axpy(u, dt / 2.0, &k2))?)?;
    let k4 = flow_rhs(&at(axpy(u, dt, &k3))?)?;
    let next = u
        .iter()
        .enumerate()
        .map(|(j, x)| {
            x.iter()
                .enumerate()
                .map(|(i, v)| v + dt / 6.0 * (k1[j][i] + 2.0 * k2[j][i] + 2.0 * k3[j][i] + k4[j][i]))
                .collect()
        })
        .collect();
    at(next)
}

fn max_abs(l: &DiffOperator) -> f64 {
    l.potentials().iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Integrates `dL/dt = [Q₂, L]` with classical RK4, recomputing `Q₂` from
/// the current potentials at every stage.
pub fn kdv_flow(l0: &DiffOperator, dt: f64, steps: usize) -> Result<Trajectory> {
    let half = l0.grid().len() as f64 / 2.0;
    if !(dt > 0.0) || dt * half * half > STABILITY_BUDGET {
        return Err(Error::contract(format!(
            "time step {dt} outside the stability budget dt·(N/2)² ≤ {STABILITY_BUDGET}"
        )));
    }
    let limit = DIVERGENCE_FACTOR * (1.0 + max_abs(l0));
    let mut states = vec![l0.clone()];
    for step in 1..=steps {
        // A state that leaves the finite range is reported as divergence,
        // not as malformed input.
        let next = match rk4_step(states.last().unwrap(), dt) {
            Ok(l) => l,
            Err(Error::Contract(_)) => return Err(Error::Diverged { step }),
            Err(e) => return Err(e),
        };
        let size = max_abs(&next);
        if !size.is_finite() || size > limit {
            return Err(Error::Diverged { step });
        }
        states.push(next);
    }
    Ok(Trajectory { dt, states })
}

/// Flows `u` and `u` with `u_0 + c`, and returns the largest departure of
/// their difference from the constant `c` in `u_0`.
pub fn spectral_shift_check(l0: &DiffOperator, c: f64, dt: f64, steps: usize) -> Result<f64> {
    let mut shifted = l0.potentials().to_vec();
    shifted[0].iter_mut().for_each(|x| *x += c);
    let a = kdv_flow(l0, dt, steps)?;
    let b = kdv_flow(&DiffOperator::agd(l0.grid(), shifted)?, dt, steps)?;
    let mut worst = 0.0f64;
    for (x, y) in a.states.iter().zip(&b.states) {
        for (j, (ux, uy)) in x.potentials().iter().zip(y.potentials()).enumerate() {
            let offset = if j == 0 { c } else { 0.0 };
            for (p, q) in ux.iter().zip(uy) {
                worst = worst.max((q - p - offset).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::super::grid::CircleGrid;
    use super::*;

    fn smooth(g: &CircleGrid, d: usize) -> DiffOperator {
        let u = (0..d).map(|j| g.sample(|x| 0.2 * ((j + 1) as f64 * x).cos() + 0.1 * (x - j as f64).sin())).collect();
        DiffOperator::agd(g, u).unwrap()
    }

    #[test]
    fn constant_data_is_fixed() {
        let g = CircleGrid::new(32).unwrap();
        let l = DiffOperator::agd(&g, vec![vec![0.4; 32], vec![-0.9; 32]]).unwrap();
        let t = kdv_flow(&l, 1e-3, 20).unwrap();
        for (a, b) in t.last().potentials().iter().flatten().zip(l.potentials().iter().flatten()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn mean_of_top_potential_is_conserved() {
        let g = CircleGrid::new(32).unwrap();
        for d in [2, 3] {
            let l = smooth(&g, d);
            let t = kdv_flow(&l, 5e-4, 200).unwrap();
            let m0 = g.mean(&l.potentials()[d - 1]);
            let m1 = g.mean(&t.last().potentials()[d - 1]);
            assert!((m0 - m1).abs() < INTEGRATION_TOL, "d = {d}: {m0} -> {m1}");
        }
    }

    #[test]
    fn budget_is_enforced() {
        let g = CircleGrid::new(64).unwrap();
        assert!(matches!(kdv_flow(&smooth(&g, 2), 1.0, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn blow_up_is_reported() {
        let g = CircleGrid::new(32).unwrap();
        let l = DiffOperator::agd(&g, vec![g.sample(|x| 1e3 * (3.0 * x).sin()), g.sample(|x| 1e3 * (5.0 * x).cos())]).unwrap();
        assert!(matches!(kdv_flow(&l, 9e-4, 2000), Err(Error::Diverged { .. })));
    }

    #[test]
    fn spectral_shift_only_moves_the_constant_term() {
        let g = CircleGrid::new(32).unwrap();
        let l = smooth(&g, 2);
        assert_eq!(spectral_shift_check(&l, 0.0, 5e-4, 50).unwrap(), 0.0);
        let one = spectral_shift_check(&l, 1.0, 5e-4, 50).unwrap();
        let ten = spectral_shift_check(&l, 10.0, 5e-4, 50).unwrap();
        assert!(one <= 10.0 * INTEGRATION_TOL && ten <= 10.0 * INTEGRATION_TOL, "{one} {ten}");
    }
}
