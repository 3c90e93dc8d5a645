//! The pentagram map in `P^d`: each vertex of the image is the common
//! point of `d` consecutive short-diagonal hyperplanes.

use crate::algebra::{norm2, nullspace_covector, Matrix, Scalar};
use crate::error::{Error, Result};
use crate::polygon::{coords_of_polygon, reconstruct_vertices, ProjectivePolygon, TwistedCoords};

/// A hyperplane `{x : h·x = 0}` anchored at vertex index `anchor`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane<S: Scalar> {
    pub covector: Vec<S>,
    pub anchor: i64,
}

/// Indices of the vertices spanning the short-diagonal hyperplane at `k`:
/// step 2, centered on `k` for odd `d`, straddling `k` for even `d`.
pub fn defining_indices(d: usize, k: i64) -> Vec<i64> {
    let kappa = (d / 2) as i64;
    let first = if d % 2 == 1 { k - 2 * kappa } else { k - 2 * kappa + 1 };
    (0..d as i64).map(|i| first + 2 * i).collect()
}

/// Offsets `i − k` of the hyperplanes meeting at the image of vertex `k`.
fn meeting_offsets(d: usize) -> std::ops::RangeInclusive<i64> {
    let kappa = (d / 2) as i64;
    if d % 2 == 1 {
        -kappa..=kappa
    } else {
        (1 - kappa)..=kappa
    }
}

pub fn short_diagonal_hyperplane<S: Scalar>(p: &ProjectivePolygon<S>, k: i64) -> Result<Hyperplane<S>> {
    let points: Vec<Vec<S>> = defining_indices(p.d(), k).into_iter().map(|i| p.vertex(i)).collect();
    let covector = nullspace_covector(&points).map_err(|_| Error::degenerate(k, "short-diagonal vertices are dependent"))?;
    Ok(Hyperplane { covector, anchor: k })
}

/// The image polygon with the same monodromy; vertex `k` of the image keeps
/// label `k`. Hyperplanes are computed over one period and carried to other
/// periods by `h_{i+n} = h_i · M⁻¹`.
pub fn image_polygon<S: Scalar>(p: &ProjectivePolygon<S>) -> Result<ProjectivePolygon<S>> {
    let (d, n) = (p.d(), p.n() as i64);
    let base: Vec<Vec<S>> = (0..n)
        .map(|k| short_diagonal_hyperplane(p, k).map(|h| h.covector))
        .collect::<Result<_>>()?;
    let m = p.monodromy();
    let m_inv = m.inverse()?;
    let plane = |i: i64| -> Vec<S> {
        let q = i.div_euclid(n);
        let mut h = base[i.rem_euclid(n) as usize].clone();
        let step = if q >= 0 { &m_inv } else { m };
        for _ in 0..q.unsigned_abs() {
            h = step.covec_mul(&h);
        }
        h
    };
    let offsets = meeting_offsets(d);
    let reps = (0..n)
        .map(|k| {
            let planes: Vec<Vec<S>> = offsets.clone().map(|o| plane(k + o)).collect();
            nullspace_covector(&planes).map_err(|_| Error::degenerate(k, "consecutive hyperplanes do not meet in a point"))
        })
        .collect::<Result<Vec<_>>>()?;
    ProjectivePolygon::new(reps, m.clone())
}

/// `T` on coordinates. Float polygons are first moved to a well-scaled
/// projective frame. The image is lifted with equal window determinants
/// before the coefficients are read off; this avoids extracting a root and
/// keeps the exact backend in ℚ.
pub fn pentagram_map<S: Scalar>(c: &TwistedCoords<S>) -> Result<TwistedCoords<S>> {
    let p = reconstruct_vertices(c).projectivize().conditioned()?;
    coords_of_polygon(&image_polygon(&p)?.conditioned()?)
}

/// Per-step conditioning of an orbit.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct StepDiagnostics {
    pub step: usize,
    /// Smallest `|det(p_j, …, p_{j+d})| / Π‖p_i‖` over the image vertices.
    pub min_window_det: f64,
    pub max_coeff: f64,
}

#[derive(Clone, Debug)]
pub struct Orbit<S: Scalar> {
    pub states: Vec<TwistedCoords<S>>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// The step that failed and why; the orbit is truncated there.
    pub failure: Option<(usize, Error)>,
}

fn min_window_det<S: Scalar>(p: &ProjectivePolygon<S>) -> f64 {
    (0..p.n() as i64)
        .map(|j| {
            let w: Vec<Vec<S>> = (0..=p.d() as i64).map(|i| p.vertex(j + i)).collect();
            let scale: f64 = w.iter().map(|v| norm2(v)).product();
            Matrix::from_columns(&w).det().magnitude() / scale
        })
        .fold(f64::INFINITY, f64::min)
}

fn step_once<S: Scalar>(c: &TwistedCoords<S>) -> Result<(TwistedCoords<S>, f64)> {
    let image = image_polygon(&reconstruct_vertices(c).projectivize().conditioned()?)?.conditioned()?;
    let det = min_window_det(&image);
    Ok((coords_of_polygon(&image)?, det))
}

/// Applies the map `steps` times, stopping at the first failure.
pub fn iterate<S: Scalar>(c: &TwistedCoords<S>, steps: usize) -> Orbit<S> {
    let mut orbit = Orbit {
        states: vec![c.clone()],
        diagnostics: Vec::new(),
        failure: None,
    };
    for step in 1..=steps {
        match step_once(orbit.states.last().unwrap()) {
            Ok((next, min_det)) => {
                orbit.diagnostics.push(StepDiagnostics {
                    step,
                    min_window_det: min_det,
                    max_coeff: next.max_magnitude(),
                });
                orbit.states.push(next);
            }
            Err(e) => {
                orbit.failure = Some((step, e));
                break;
            }
        }
    }
    orbit
}
