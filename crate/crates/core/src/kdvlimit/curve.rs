use ode_solvers::dop_shared::OutputType;
use ode_solvers::{DVector, Dop853, System};

use super::grid::TrigInterpolant;
use super::operator::DiffOperator;
use crate::error::{Error, Result};

/// Relative and absolute tolerance of the adaptive integrator.
pub const CURVE_TOL: f64 = 1e-13;

/// Solutions of `G^{(d+1)} + u_{d−1} G^{(d−1)} + … + u_0 G = 0` with the
/// identity frame at `x = 0`, sampled on the operator's grid.
///
/// `frames[k][i][m]` is `g_i^{(m)}(x_k)`, so column `m` of a frame is
/// `G^{(m)}(x_k)`.
#[derive(Clone, Debug)]
pub struct SampledCurve {
    pub d: usize,
    pub operator: DiffOperator,
    pub frames: Vec<Vec<Vec<f64>>>,
    /// `G(x + 2π) = M G(x)`; equal to the frame at `2π`.
    pub monodromy: Vec<Vec<f64>>,
}

/// The companion system on the whole frame; `y[i(d+1) + m] = g_i^{(m)}`.
/// The last component carries `x` itself: the solver's stage abscissae
/// are unreliable for explicitly `x`-dependent systems, so the system is
/// made autonomous.
struct FrameSystem {
    dim: usize,
    potentials: Vec<TrigInterpolant>,
}

impl System<f64, DVector<f64>> for FrameSystem {
    fn system(&self, _x: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let x = y[self.dim * self.dim];
        dy[self.dim * self.dim] = 1.0;
        let u: Vec<f64> = self.potentials.iter().map(|p| p.eval(x)).collect();
        for i in 0..self.dim {
            let row = i * self.dim;
            for m in 0..self.dim - 1 {
                dy[row + m] = y[row + m + 1];
            }
            dy[row + self.dim - 1] = -u.iter().enumerate().map(|(j, uj)| uj * y[row + j]).sum::<f64>();
        }
    }
}

fn to_frame(y: &DVector<f64>, dim: usize) -> Vec<Vec<f64>> {
    (0..dim).map(|i| (0..dim).map(|m| y[i * dim + m]).collect()).collect()
}

pub(crate) fn det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]).determinant()
}

fn advance(system: FrameSystem, a: f64, b: f64, y: DVector<f64>) -> Result<DVector<f64>> {
    let dim2 = y.len();
    let y = DVector::from_fn(dim2 + 1, |i, _| if i < dim2 { y[i] } else { a });
    let mut solver = Dop853::new(system, a, b, b - a, y, CURVE_TOL, CURVE_TOL);
    // Step endpoints only; the dense interpolant is far less accurate.
    solver.set_output(OutputType::Sparse);
    solver
        .integrate()
        .map_err(|e| Error::IntegrationFailure(format!("on [{a:.6}, {b:.6}]: {e}")))?;
    let end = *solver.x_out().last().expect("the solver reports its endpoint");
    if (end - b).abs() > 1e-12 {
        return Err(Error::IntegrationFailure(format!("stopped at {end} short of {b}")));
    }
    Ok(solver.y_out().last().unwrap().rows(0, dim2).into_owned())
}

fn frame_system(l: &DiffOperator) -> FrameSystem {
    FrameSystem {
        dim: l.order(),
        potentials: l.potentials().iter().map(|u| l.grid().interpolant(u)).collect(),
    }
}

/// Integrates the frame with an eighth-order adaptive scheme, restarting at
/// every grid point so each sample is a step endpoint.
pub fn curve_from_potentials(l: &DiffOperator) -> Result<SampledCurve> {
    let d = l.dimension();
    let dim = d + 1;
    let grid = l.grid();
    let mut y = DVector::from_fn(dim * dim, |k, _| if k / dim == k % dim { 1.0 } else { 0.0 });
    let mut frames = vec![to_frame(&y, dim)];
    let h = grid.step();
    for k in 0..grid.len() {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        y = advance(frame_system(l), a, b, y)?;
        frames.push(to_frame(&y, dim));
    }
    let monodromy = frames.pop().unwrap();
    Ok(SampledCurve { d, operator: l.clone(), frames, monodromy })
}

impl SampledCurve {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `G(x_k)`.
    pub fn point(&self, k: usize) -> Vec<f64> {
        self.frames[k].iter().map(|row| row[0]).collect()
    }

    /// `det(G, G′, …, G^{(d)})` at `x_k`.
    pub fn wronskian(&self, k: usize) -> f64 {
        det(&self.frames[k])
    }

    /// The frame at any `x ∈ [0, 2π]`, integrated from the grid sample below.
    pub fn frame_at(&self, x: f64) -> Result<Vec<Vec<f64>>> {
        let h = self.operator.grid().step();
        if !(0.0..=2.0 * std::f64::consts::PI).contains(&x) {
            return Err(Error::contract(format!("x = {x} outside [0, 2π]")));
        }
        let k = ((x / h).floor() as usize).min(self.len() - 1);
        let a = k as f64 * h;
        if x == a {
            return Ok(self.frames[k].clone());
        }
        let dim = self.d + 1;
        let y = DVector::from_fn(dim * dim, |i, _| self.frames[k][i / dim][i % dim]);
        Ok(to_frame(&advance(frame_system(&self.operator), a, x, y)?, dim))
    }

    /// `max_k |W(x_k) − 1|`, including the frame at `2π`.
    pub fn wronskian_defect(&self) -> f64 {
        (0..self.len())
            .map(|k| self.wronskian(k))
            .chain([det(&self.monodromy)])
            .map(|w| (w - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::super::grid::CircleGrid;
    use super::*;

    #[test]
    fn free_curve_is_the_monomial_frame() {
        let g = CircleGrid::new(32).unwrap();
        let l = DiffOperator::agd(&g, vec![vec![0.0; 32]; 3]).unwrap();
        let c = curve_from_potentials(&l).unwrap();
        let fact = [1.0, 1.0, 2.0, 6.0];
        for (k, x) in g.points().into_iter().enumerate() {
            let p = c.point(k);
            for (i, v) in p.iter().enumerate() {
                assert!((v - x.powi(i as i32) / fact[i]).abs() < 1e-10, "{i} at {x}");
            }
        }
        assert!(c.wronskian_defect() < 1e-12);
    }

    #[test]
    fn wronskian_stays_one_for_smooth_potentials() {
        let g = CircleGrid::new(64).unwrap();
        for d in 2..=4 {
            let u = (0..d).map(|j| g.sample(|x| 0.4 * ((j + 1) as f64 * x).sin() + 0.3 * (2.0 * x - j as f64).cos())).collect();
            let c = curve_from_potentials(&DiffOperator::agd(&g, u).unwrap()).unwrap();
            assert!(c.wronskian_defect() <= 1e-10, "d = {d}: {}", c.wronskian_defect());
            assert!((det(&c.monodromy) - 1.0).abs() <= 1e-10);
        }
    }
}
