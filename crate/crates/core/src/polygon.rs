//! Twisted polygons in projective space, in vertex form and in the
//! coordinates of the difference equation
//! `V_{j+d+1} = a_{j,d} V_{j+d} + … + a_{j,1} V_{j+1} + (−1)^d V_j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;

use crate::algebra::{norm2, Matrix, RootBranch, Scalar};
use crate::error::{Error, Result};

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The forced last coefficient `(−1)^d`.
pub(crate) fn forced_sign<S: Scalar>(d: usize, ctx: &S::Ctx) -> S {
    S::from_i64(if d % 2 == 0 { 1 } else { -1 }, ctx)
}

/// Coefficients `a_{j,k}`, `0 ≤ j < n`, `1 ≤ k ≤ d`, of the difference
/// equation. In dimension 3, `a_{j,3}`, `a_{j,2}`, `a_{j,1}` are the
/// classical `a_j`, `b_j`, `c_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistedCoords<S: Scalar> {
    d: usize,
    ctx: S::Ctx,
    /// `rows[j][k-1] = a_{j,k}`
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> TwistedCoords<S> {
    pub fn new(d: usize, rows: Vec<Vec<S>>) -> Result<Self> {
        if d < 2 {
            return Err(Error::contract(format!("dimension must be at least 2, got {d}")));
        }
        let n = rows.len();
        if n < d + 2 {
            return Err(Error::contract(format!("period n = {n} must be at least d + 2 = {}", d + 2)));
        }
        if let Some((j, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::contract(format!("row {j} has {} coefficients, expected {d}", r.len())));
        }
        let ctx = rows[0][0].ctx();
        Ok(TwistedCoords { d, ctx, rows })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn ctx(&self) -> &S::Ctx {
        &self.ctx
    }

    /// `a_{j,k}` with `j` taken modulo `n` and `1 ≤ k ≤ d`.
    pub fn get(&self, j: i64, k: usize) -> &S {
        assert!((1..=self.d).contains(&k), "coefficient index k = {k} out of 1..={}", self.d);
        &self.rows[j.rem_euclid(self.n() as i64) as usize][k - 1]
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<S>> {
        self.rows
    }

    /// `gcd(n, d+1) = 1`: a unique normalized lift exists and the spectral
    /// machinery applies.
    pub fn spectral_ready(&self) -> bool {
        gcd(self.n(), self.d + 1) == 1
    }

    pub fn max_magnitude(&self) -> f64 {
        self.rows.iter().flatten().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    pub fn map_coeffs(&self, mut f: impl FnMut(usize, usize, &S) -> S) -> Self {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(j, r)| r.iter().enumerate().map(|(k, x)| f(j, k + 1, x)).collect())
            .collect();
        TwistedCoords {
            d: self.d,
            ctx: self.ctx.clone(),
            rows,
        }
    }

    /// Frame transition `N_j`: first row `(0,…,0,(−1)^d)`, identity block
    /// below-left, last column `(a_{j,1},…,a_{j,d})` underneath.
    pub fn frame_matrix(&self, j: usize) -> Matrix<S> {
        let d = self.d;
        let mut m = Matrix::zeros(d + 1, d + 1, &self.ctx);
        m.set(0, d, forced_sign(d, &self.ctx));
        for i in 1..=d {
            m.set(i, i - 1, S::one(&self.ctx));
            m.set(i, d, self.rows[j][i - 1].clone());
        }
        m
    }

    /// `N_j⁻¹`, written out directly: column 0 is `(−1)^d (−a_{j,1},…,−a_{j,d}, 1)`,
    /// column `r ≥ 1` is `e_{r−1}`.
    pub fn frame_matrix_inv(&self, j: usize) -> Matrix<S> {
        let d = self.d;
        let sign = forced_sign::<S>(d, &self.ctx);
        let mut m = Matrix::zeros(d + 1, d + 1, &self.ctx);
        for i in 1..=d {
            m.set(i - 1, 0, self.rows[j][i - 1].mul(&sign).neg());
            m.set(i - 1, i, S::one(&self.ctx));
        }
        m.set(d, 0, sign);
        m
    }
}

/// Lifted vertices `V_0 … V_{n−1}` with monodromy `M`; other indices are
/// resolved through `V_{j+n} = M V_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexChain<S: Scalar> {
    d: usize,
    vertices: Vec<Vec<S>>,
    monodromy: Matrix<S>,
    monodromy_inv: Matrix<S>,
    branch: Option<RootBranch>,
}

fn check_vertex_shapes<S: Scalar>(d: usize, vertices: &[Vec<S>], m: &Matrix<S>) -> Result<()> {
    if d < 2 {
        return Err(Error::contract("dimension must be at least 2"));
    }
    if vertices.len() < d + 2 {
        return Err(Error::contract(format!("need at least d + 2 = {} vertices", d + 2)));
    }
    if vertices.iter().any(|v| v.len() != d + 1) {
        return Err(Error::contract(format!("vertices must have {} components", d + 1)));
    }
    if m.rows() != d + 1 || m.cols() != d + 1 {
        return Err(Error::contract("monodromy has the wrong size"));
    }
    Ok(())
}

fn resolve<S: Scalar>(vertices: &[Vec<S>], m: &Matrix<S>, m_inv: &Matrix<S>, j: i64) -> Vec<S> {
    let n = vertices.len() as i64;
    let q = j.div_euclid(n);
    let mut v = vertices[j.rem_euclid(n) as usize].clone();
    let step = if q >= 0 { m } else { m_inv };
    for _ in 0..q.unsigned_abs() {
        v = step.mul_vec(&v);
    }
    v
}

impl<S: Scalar> VertexChain<S> {
    /// Builds a chain, checking shapes and `det M = 1`. Window determinants
    /// are not checked here; see [`VertexChain::is_normalized`].
    pub fn new(vertices: Vec<Vec<S>>, monodromy: Matrix<S>) -> Result<Self> {
        let d = vertices.first().map_or(0, |v| v.len().saturating_sub(1));
        check_vertex_shapes(d, &vertices, &monodromy)?;
        let det = monodromy.det();
        let one = S::one(&det.ctx());
        if !det.sub(&one).is_negligible(monodromy.max_magnitude().powi(d as i32 + 1).max(1.0)) {
            return Err(Error::NotNormalized(format!("det M = {det} != 1")));
        }
        let monodromy_inv = monodromy.inverse()?;
        Ok(VertexChain {
            d,
            vertices,
            monodromy,
            monodromy_inv,
            branch: None,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn monodromy(&self) -> &Matrix<S> {
        &self.monodromy
    }

    pub fn monodromy_inv(&self) -> &Matrix<S> {
        &self.monodromy_inv
    }

    pub fn vertices(&self) -> &[Vec<S>] {
        &self.vertices
    }

    /// Root branch taken by [`normalize_lift`], if the chain came from it.
    pub fn root_branch(&self) -> Option<RootBranch> {
        self.branch
    }

    pub fn vertex(&self, j: i64) -> Vec<S> {
        resolve(&self.vertices, &self.monodromy, &self.monodromy_inv, j)
    }

    pub fn window(&self, j: i64) -> Vec<Vec<S>> {
        (0..=self.d as i64).map(|i| self.vertex(j + i)).collect()
    }

    /// `det(V_j, …, V_{j+d})`.
    pub fn window_det(&self, j: i64) -> S {
        Matrix::from_columns(&self.window(j)).det()
    }

    pub fn window_dets(&self) -> Vec<S> {
        (0..self.n() as i64).map(|j| self.window_det(j)).collect()
    }

    /// All window determinants equal 1 (exactly, or within tolerance).
    pub fn is_normalized(&self) -> bool {
        (0..self.n() as i64).all(|j| {
            let w = self.window(j);
            let scale: f64 = w.iter().map(|v| norm2(v)).product();
            let det = Matrix::from_columns(&w).det();
            det.sub(&det.one_like()).is_negligible(scale.max(1.0))
        })
    }

    /// Forgets the lift: the vertices become projective representatives.
    pub fn projectivize(&self) -> ProjectivePolygon<S> {
        ProjectivePolygon {
            d: self.d,
            reps: self.vertices.clone(),
            monodromy: self.monodromy.clone(),
            monodromy_inv: self.monodromy_inv.clone(),
        }
    }
}

/// Homogeneous representatives `p_j` of a twisted polygon together with
/// its monodromy.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectivePolygon<S: Scalar> {
    d: usize,
    reps: Vec<Vec<S>>,
    monodromy: Matrix<S>,
    monodromy_inv: Matrix<S>,
}

impl<S: Scalar> ProjectivePolygon<S> {
    pub fn new(reps: Vec<Vec<S>>, monodromy: Matrix<S>) -> Result<Self> {
        let d = reps.first().map_or(0, |v| v.len().saturating_sub(1));
        check_vertex_shapes(d, &reps, &monodromy)?;
        let monodromy_inv = monodromy.inverse()?;
        Ok(ProjectivePolygon {
            d,
            reps,
            monodromy,
            monodromy_inv,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.reps.len()
    }

    pub fn reps(&self) -> &[Vec<S>] {
        &self.reps
    }

    pub fn monodromy(&self) -> &Matrix<S> {
        &self.monodromy
    }

    pub fn vertex(&self, j: i64) -> Vec<S> {
        resolve(&self.reps, &self.monodromy, &self.monodromy_inv, j)
    }

    /// Applies `g`: `p ↦ g p`, `M ↦ g M g⁻¹`.
    pub fn transform(&self, g: &Matrix<S>) -> Result<Self> {
        let g_inv = g.inverse()?;
        let reps = self.reps.iter().map(|p| g.mul_vec(p)).collect();
        ProjectivePolygon::new(reps, g.mul(&self.monodromy).mul(&g_inv))
    }

    /// A projectively equivalent copy that is well scaled for floating point:
    /// representatives of unit length, and a lower-triangular change of
    /// frame that makes the rows of `(p_0 … p_{n−1})` orthonormal. The exact
    /// backend is returned unchanged.
    pub fn conditioned(&self) -> Result<Self> {
        if S::EXACT {
            return Ok(self.clone());
        }
        let ctx = self.reps[0][0].ctx();
        let unit = |v: &[S]| -> Vec<S> {
            let s = S::from_f64(1.0 / norm2(v), &ctx);
            v.iter().map(|x| x.mul(&s)).collect()
        };
        let reps: Vec<Vec<S>> = self.reps.iter().map(|v| unit(v)).collect();
        let m = self.d + 1;
        // Gram–Schmidt on the rows of the vertex matrix, recorded in g.
        let mut rows: Vec<Vec<S>> = (0..m).map(|i| reps.iter().map(|v| v[i].clone()).collect()).collect();
        let mut g: Matrix<S> = Matrix::identity(m, &ctx);
        for i in 0..m {
            for j in 0..i {
                let f = crate::algebra::dot(&rows[i], &rows[j]);
                let (ri, rj) = (rows[i].clone(), &rows[j]);
                rows[i] = ri.iter().zip(rj).map(|(a, b)| a.sub(&f.mul(b))).collect();
                for k in 0..m {
                    let v = g.get(i, k).sub(&f.mul(g.get(j, k)));
                    g.set(i, k, v);
                }
            }
            let norm = norm2(&rows[i]);
            if norm == 0.0 {
                return Err(Error::degenerate(None, "vertices lie in a hyperplane"));
            }
            let s = S::from_f64(1.0 / norm, &ctx);
            rows[i] = rows[i].iter().map(|x| x.mul(&s)).collect();
            for k in 0..m {
                let v = g.get(i, k).mul(&s);
                g.set(i, k, v);
            }
        }
        ProjectivePolygon::new(reps, self.monodromy.clone())?.transform(&g)
    }

    /// Window determinants `det(p_j, …, p_{j+d})`, failing on a window that
    /// lies in a hyperplane.
    fn window_dets(&self) -> Result<Vec<S>> {
        (0..self.n() as i64)
            .map(|j| {
                let w: Vec<Vec<S>> = (0..=self.d as i64).map(|i| self.vertex(j + i)).collect();
                let scale: f64 = w.iter().map(|v| norm2(v)).product();
                let det = Matrix::from_columns(&w).det();
                if det.is_negligible(scale) {
                    Err(Error::degenerate(j, "d + 1 consecutive vertices lie in a hyperplane"))
                } else {
                    Ok(det)
                }
            })
            .collect()
    }

    pub fn check_general_position(&self) -> Result<()> {
        self.window_dets().map(|_| ())
    }
}

/// Per-vertex scale ratios `r_j` (with `r_0 = 1`) that make all window
/// determinants of `r_j p_j` equal, and that common value `C`.
///
/// The ratios follow from `t_{j+d+1} = t_j d_j / d_{j+1}`, stepping the
/// index by `d+1` modulo `n`; this visits every residue iff
/// `gcd(n, d+1) = 1`.
fn lift_ratios<S: Scalar>(p: &ProjectivePolygon<S>) -> Result<(Vec<S>, S)> {
    let (n, d) = (p.n(), p.d());
    if gcd(n, d + 1) != 1 {
        return Err(Error::NoLift { n, d });
    }
    let dets = p.window_dets()?;
    let ctx = dets[0].ctx();
    let mut r: Vec<Option<S>> = vec![None; n];
    r[0] = Some(S::one(&ctx));
    let mut idx = 0;
    for _ in 1..n {
        let next = (idx + d + 1) % n;
        let val = r[idx].as_ref().unwrap().mul(&dets[idx]).div(&dets[(idx + 1) % n]);
        r[next] = Some(val);
        idx = next;
    }
    let r: Vec<S> = r.into_iter().map(|x| x.expect("cycle covers all residues")).collect();
    let mut c = dets[0].clone();
    for x in r.iter().take(d + 1) {
        c = c.mul(x);
    }
    Ok((r, c))
}

/// Window determinants and the normalization constant `C` of
/// [`normalize_lift`]: `t_0^{d+1} · C = 1`.
pub fn normalization_constant<S: Scalar>(p: &ProjectivePolygon<S>) -> Result<S> {
    lift_ratios(p).map(|(_, c)| c)
}

/// The unique lift with unit window determinants, `V_{j+n} = M V_j`.
///
/// The root of `1/C` follows the branch policy of [`Scalar::root`]: the
/// rational backend fails with `IrrationalNormalization` when that root is
/// not rational.
pub fn normalize_lift<S: Scalar>(p: &ProjectivePolygon<S>) -> Result<VertexChain<S>> {
    let (r, c) = lift_ratios(p)?;
    let (t0, branch) = c.inv().root(p.d() as u32 + 1)?;
    let vertices = p
        .reps
        .iter()
        .zip(&r)
        .map(|(v, rj)| {
            let t = t0.mul(rj);
            v.iter().map(|x| x.mul(&t)).collect()
        })
        .collect();
    Ok(VertexChain {
        d: p.d(),
        vertices,
        monodromy: p.monodromy.clone(),
        monodromy_inv: p.monodromy_inv.clone(),
        branch: Some(branch),
    })
}

/// Coordinates of a projective polygon without extracting the root of the
/// normalization constant: the coefficients are homogeneous of degree zero
/// in a common rescaling of the lift, so the equal-window lift `r_j p_j`
/// already determines them. Keeps the pentagram map rational over ℚ.
pub fn coords_of_polygon<S: Scalar>(p: &ProjectivePolygon<S>) -> Result<TwistedCoords<S>> {
    let (r, _) = lift_ratios(p)?;
    let vertices: Vec<Vec<S>> = p
        .reps
        .iter()
        .zip(&r)
        .map(|(v, rj)| v.iter().map(|x| x.mul(rj)).collect())
        .collect();
    coords_from_vertices(p.d(), &vertices, &p.monodromy, &p.monodromy_inv)
}

fn coords_from_vertices<S: Scalar>(
    d: usize,
    vertices: &[Vec<S>],
    m: &Matrix<S>,
    m_inv: &Matrix<S>,
) -> Result<TwistedCoords<S>> {
    let n = vertices.len();
    let ctx = vertices[0][0].ctx();
    let sign = forced_sign::<S>(d, &ctx);
    let mut rows = Vec::with_capacity(n);
    for j in 0..n as i64 {
        let frame: Vec<Vec<S>> = (0..=d as i64).map(|i| resolve(vertices, m, m_inv, j + i)).collect();
        let target = resolve(vertices, m, m_inv, j + d as i64 + 1);
        let x = Matrix::from_columns(&frame)
            .solve(&target)
            .map_err(|_| Error::degenerate(j, "singular vertex window"))?;
        let slack = x[0].sub(&sign);
        let consistent = if S::EXACT {
            slack.is_zero()
        } else {
            let scale = x.iter().map(Scalar::magnitude).fold(1.0, f64::max);
            slack.magnitude() <= S::eps(&ctx).sqrt() * scale
        };
        if !consistent {
            return Err(Error::NotNormalized(format!(
                "window {j}: coefficient of V_j is {} instead of {sign}",
                x[0]
            )));
        }
        rows.push(x[1..].to_vec());
    }
    TwistedCoords::new(d, rows)
}

/// Recovers `a_{j,k}` from a chain by solving the window system for each
/// `j`; the coefficient of `V_j` must come out as `(−1)^d`.
pub fn extract_coords<S: Scalar>(ch: &VertexChain<S>) -> Result<TwistedCoords<S>> {
    coords_from_vertices(ch.d, &ch.vertices, &ch.monodromy, &ch.monodromy_inv)
}

/// Runs the difference equation from the standard frame `V_0…V_d = e_1…e_{d+1}`;
/// the monodromy is the frame at `j = n`, i.e. `N_0 N_1 ⋯ N_{n−1}`.
pub fn reconstruct_vertices<S: Scalar>(c: &TwistedCoords<S>) -> VertexChain<S> {
    let (d, n) = (c.d(), c.n());
    let ctx = c.ctx().clone();
    let sign = forced_sign::<S>(d, &ctx);
    let mut v: Vec<Vec<S>> = (0..=d)
        .map(|i| (0..=d).map(|r| S::from_i64((r == i) as i64, &ctx)).collect())
        .collect();
    for j in 0..n {
        let mut next: Vec<S> = v[j].iter().map(|x| x.mul(&sign)).collect();
        for k in 1..=d {
            let a = &c.rows[j][k - 1];
            for (slot, x) in next.iter_mut().zip(&v[j + k]) {
                *slot = slot.add(&a.mul(x));
            }
        }
        v.push(next);
    }
    let monodromy = Matrix::from_columns(&v[n..=n + d]);
    let monodromy_inv = (0..n)
        .rev()
        .fold(Matrix::identity(d + 1, &ctx), |acc, j| acc.mul(&c.frame_matrix_inv(j)));
    v.truncate(n);
    VertexChain {
        d,
        vertices: v,
        monodromy,
        monodromy_inv,
        branch: None,
    }
}

/// A closed polygon inscribed in the convex trigonometric moment curve,
/// with vertex angles `2πj/n` jittered by up to `jitter · 2π/n`.
///
/// Even `d = 2ϰ`: `(1, cos θ, sin θ, …, cos ϰθ, sin ϰθ)`, monodromy `Id`.
/// Odd `d`: odd harmonics of `θ/2`, `(cos θ/2, sin θ/2, cos 3θ/2, …)`,
/// monodromy `−Id`. Any `d + 1` points within one period are independent,
/// which keeps orbits of the map far from degenerate configurations.
pub fn moment_polygon<S: Scalar>(d: usize, n: usize, seed: u64, jitter: f64, ctx: &S::Ctx) -> Result<ProjectivePolygon<S>> {
    if d < 2 || n < d + 2 {
        return Err(Error::contract(format!("need d ≥ 2 and n ≥ d + 2, got d = {d}, n = {n}")));
    }
    if !(0.0..0.5).contains(&jitter) {
        return Err(Error::contract("jitter must lie in [0, 0.5)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = std::f64::consts::TAU / n as f64;
    let reps = (0..n)
        .map(|j| {
            let theta = step * (j as f64 + rng.random_range(-jitter..=jitter));
            let mut v = Vec::with_capacity(d + 1);
            if d % 2 == 0 {
                v.push(1.0);
                for h in 1..=d / 2 {
                    v.push((h as f64 * theta).cos());
                    v.push((h as f64 * theta).sin());
                }
            } else {
                for h in 0..=d / 2 {
                    let w = (2 * h + 1) as f64 * theta / 2.0;
                    v.push(w.cos());
                    v.push(w.sin());
                }
            }
            v.into_iter().map(|x| S::from_f64(x, ctx)).collect()
        })
        .collect();
    let sign = if d % 2 == 0 { 1 } else { -1 };
    let m = Matrix::identity(d + 1, ctx).scale(&S::from_i64(sign, ctx));
    ProjectivePolygon::new(reps, m)
}

/// Deterministic random coordinates: rationals `p/q` with `|p| ≤ spread`,
/// `1 ≤ q ≤ spread`, `p ≠ 0` on the exact backend, uniform floats in
/// `[−spread, spread]` otherwise. Draws are rejected until the pentagram
/// map is defined at the polygon.
pub fn random_polygon<S: Scalar>(d: usize, n: usize, seed: u64, spread: f64, ctx: &S::Ctx) -> Result<TwistedCoords<S>> {
    const ATTEMPTS: usize = 100;
    if n < d + 2 {
        return Err(Error::contract(format!("period n = {n} must be at least d + 2 = {}", d + 2)));
    }
    if !(spread > 0.0) {
        return Err(Error::contract("spread must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = (spread.round() as i64).max(1);
    for _ in 0..ATTEMPTS {
        let rows: Vec<Vec<S>> = (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| {
                        if S::EXACT {
                            let mag = rng.random_range(1..=bound);
                            let num = if rng.random_bool(0.5) { mag } else { -mag };
                            let den = rng.random_range(1..=bound);
                            S::from_rational(&Rational::from((num, den)), ctx)
                        } else {
                            S::from_f64(rng.random_range(-spread..=spread), ctx)
                        }
                    })
                    .collect()
            })
            .collect();
        let c = TwistedCoords::new(d, rows)?;
        if crate::pentagram::pentagram_map(&c).is_ok() {
            return Ok(c);
        }
    }
    Err(Error::GenerationFailed(ATTEMPTS))
}
