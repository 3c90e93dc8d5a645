//! Lax matrices with spectral parameter λ, their monodromy, and the
//! spectral polynomial whose coefficients are the integrals of motion.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;
use serde_json::{json, Value};

use crate::algebra::eigen::eigenpairs;
use crate::algebra::{FloatScalar, LaurentMatrix, LaurentPoly, Scalar};
use crate::error::{Error, Result};
use crate::pentagram::pentagram_map;
use crate::polygon::{forced_sign, TwistedCoords};

/// Whether diagonal entry `i` (1-based) of the block `D(λ)` is λ.
///
/// Odd `d`: `diag(λ, 1, λ, 1, …, λ)`. Even `d`: `diag(1, λ, 1, λ, …, λ)`,
/// the form forced by the even-dimensional scaling symmetry of the map
/// (see [`crate::scaling::ScalingRule`]); for `d = 2` this is `diag(1, λ)`.
pub fn lambda_slot(d: usize, i: usize) -> bool {
    if d % 2 == 1 {
        i % 2 == 1
    } else {
        i % 2 == 0
    }
}

/// `L_j(λ)⁻¹`: first row `(0, …, 0, (−1)^d)`, the block `D(λ)` below-left,
/// and `(a_{j,1}, …, a_{j,d})` down the last column.
pub fn lax_inverse_form<S: Scalar>(c: &TwistedCoords<S>, j: i64) -> LaurentMatrix<S> {
    let d = c.d();
    let ctx = c.ctx();
    let mut m = LaurentMatrix::from_fn(d + 1, |_, _| LaurentPoly::zero(ctx));
    m.set(0, d, LaurentPoly::constant(forced_sign(d, ctx)));
    for i in 1..=d {
        let diag = if lambda_slot(d, i) {
            LaurentPoly::lambda(ctx)
        } else {
            LaurentPoly::constant(S::one(ctx))
        };
        m.set(i, i - 1, diag);
        m.set(i, d, LaurentPoly::constant(c.get(j, i).clone()));
    }
    m
}

/// The Lax matrix `L_j(λ)`, inverted exactly from [`lax_inverse_form`].
pub fn lax_matrix<S: Scalar>(c: &TwistedCoords<S>, j: i64) -> LaurentMatrix<S> {
    lax_inverse_form(c, j)
        .inverse_monomial()
        .expect("determinant of the inverse form is a signed power of λ")
}

/// Builds `L_j(λ)` from coordinates; lets callers substitute a variant.
pub type LaxBuilder<'a, S> = &'a dyn Fn(&TwistedCoords<S>, i64) -> LaurentMatrix<S>;

/// `M_i = L_{i+n−1} ⋯ L_{i+1} L_i`.
pub fn lax_monodromy<S: Scalar>(c: &TwistedCoords<S>, i: i64) -> LaurentMatrix<S> {
    monodromy_with(c, i, &lax_matrix)
}

pub fn monodromy_with<S: Scalar>(c: &TwistedCoords<S>, i: i64, build: LaxBuilder<S>) -> LaurentMatrix<S> {
    let factors: Vec<LaurentMatrix<S>> = (0..c.n() as i64).map(|t| build(c, i + t)).collect();
    ordered_product(&factors)
}

/// `F_{m−1} ⋯ F_1 F_0`: later factors multiply on the left.
pub fn ordered_product<S: Scalar>(factors: &[LaurentMatrix<S>]) -> LaurentMatrix<S> {
    let mut it = factors.iter();
    let mut acc = it.next().expect("at least one factor").clone();
    for f in it {
        acc = f.mat_mul(&acc).expect("factors share one size");
    }
    acc
}

/// The integrals `G_j`, `J_j`, `I_j`, `0 ≤ j ≤ q = ⌊n/2⌋`, of a 3D polygon
/// with odd `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralLabels<S: Scalar> {
    pub g: Vec<S>,
    pub j: Vec<S>,
    pub i: Vec<S>,
}

impl<S: Scalar> IntegralLabels<S> {
    pub fn count(&self) -> usize {
        self.g.len() + self.j.len() + self.i.len()
    }

    pub fn flatten(&self) -> Vec<S> {
        self.g.iter().chain(&self.j).chain(&self.i).cloned().collect()
    }
}

/// `λ^N · det(k I − M_0(λ))` with `N` the smallest power that clears all
/// negative exponents. Monic in `k`: the `k^{d+1}` row is `λ^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPolynomial<S: Scalar> {
    pub d: usize,
    pub n: usize,
    pub cleared_power: i64,
    /// `rows[r]` is the coefficient of `k^r`, a polynomial in λ.
    pub rows: Vec<LaurentPoly<S>>,
    pub labels: Option<IntegralLabels<S>>,
}

impl<S: Scalar> SpectralPolynomial<S> {
    /// Float coefficients below `eps^{2/3}` relative to the largest one in
    /// the whole table are roundoff and are dropped before clearing; the
    /// minors summed by the characteristic polynomial lose a few digits
    /// beyond `eps` to cancellation.
    pub fn from_char_poly(d: usize, n: usize, rows: Vec<LaurentPoly<S>>) -> Self {
        let rows: Vec<LaurentPoly<S>> = if S::EXACT {
            rows
        } else {
            let scale = rows.iter().map(LaurentPoly::max_magnitude).fold(0.0, f64::max);
            let cut = S::eps(rows[0].ctx()).powf(2.0 / 3.0) * scale;
            rows.iter()
                .map(|p| {
                    let ctx = p.ctx().clone();
                    LaurentPoly::from_terms(&ctx, p.terms().filter(|(_, c)| c.magnitude() > cut).map(|(e, c)| (e, c.clone())))
                })
                .collect()
        };
        let low = rows.iter().filter_map(LaurentPoly::low).min().unwrap_or(0);
        let cleared_power = -low.min(0);
        let rows = rows.iter().map(|p| p.shift(cleared_power)).collect();
        SpectralPolynomial {
            d,
            n,
            cleared_power,
            rows,
            labels: None,
        }
    }

    /// Like [`SpectralPolynomial::from_char_poly`], but float entries outside
    /// `support` (uncleared `(k-power, λ-power)` pairs) are dropped instead of
    /// pruning by size. Exact rows are taken as they are.
    pub fn from_char_poly_on(d: usize, n: usize, rows: Vec<LaurentPoly<S>>, support: &BTreeSet<(usize, i64)>) -> Self {
        if S::EXACT {
            return Self::from_char_poly(d, n, rows);
        }
        let rows: Vec<LaurentPoly<S>> = rows
            .iter()
            .enumerate()
            .map(|(r, p)| {
                let ctx = p.ctx().clone();
                LaurentPoly::from_terms(&ctx, p.terms().filter(|(e, _)| support.contains(&(r, *e))).map(|(e, c)| (e, c.clone())))
            })
            .collect();
        let low = rows.iter().filter_map(LaurentPoly::low).min().unwrap_or(0);
        let cleared_power = -low.min(0);
        let rows = rows.iter().map(|p| p.shift(cleared_power)).collect();
        SpectralPolynomial {
            d,
            n,
            cleared_power,
            rows,
            labels: None,
        }
    }

    pub fn ctx(&self) -> S::Ctx {
        self.rows[0].ctx().clone()
    }

    pub fn k_degree(&self) -> usize {
        self.rows.iter().rposition(|p| !p.is_zero()).unwrap_or(0)
    }

    pub fn coeff(&self, k_power: usize, lambda_power: i64) -> S {
        match self.rows.get(k_power) {
            Some(p) => p.coeff(lambda_power),
            None => S::zero(&self.ctx()),
        }
    }

    /// Nonzero coefficients as `(k-power, λ-power, value)`.
    pub fn entries(&self) -> Vec<(usize, i64, S)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, p)| p.terms().map(move |(m, c)| (r, m, c.clone())))
            .collect()
    }

    /// Support as lattice points `(λ-power, k-power)`.
    pub fn support(&self) -> Vec<(i64, i64)> {
        self.entries().into_iter().map(|(r, m, _)| (m, r as i64)).collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.rows.iter().map(LaurentPoly::max_magnitude).fold(0.0, f64::max)
    }

    /// `∂_λ^a ∂_k^b R` at `(λ0, k0)`, taken on the uncleared Laurent form
    /// `R = λ^{−N} · (cleared polynomial)`.
    pub fn derivative(&self, a: u32, b: u32, lambda0: &S, k0: &S) -> S {
        let ctx = self.ctx();
        let mut acc = S::zero(&ctx);
        for (r, m, c) in self.entries() {
            let e = m - self.cleared_power;
            let (Some(fk), fl) = (falling(r as i64, b), falling(e, a)) else {
                continue;
            };
            let Some(fl) = fl else { continue };
            let term = c
                .mul(&S::from_i64(fk * fl, &ctx))
                .mul(&lambda0.pow_i(e - a as i64))
                .mul(&k0.pow_i(r as i64 - b as i64));
            acc = acc.add(&term);
        }
        acc
    }

    /// `R(λ0, k0)` on the uncleared form.
    pub fn eval(&self, lambda0: &S, k0: &S) -> S {
        self.derivative(0, 0, lambda0, k0)
    }

    pub fn coeff_id(k_power: usize, lambda_power: i64) -> String {
        format!("k{k_power}_l{lambda_power}")
    }

    pub fn to_json(&self) -> Value {
        let coeffs: Vec<Value> = self
            .entries()
            .into_iter()
            .map(|(r, m, c)| json!({"k": r, "lambda": m, "value": c.to_text()}))
            .collect();
        let labels = match &self.labels {
            Some(l) => {
                let text = |v: &[S]| v.iter().map(Scalar::to_text).collect::<Vec<_>>();
                json!({"G": text(&l.g), "J": text(&l.j), "I": text(&l.i)})
            }
            None => Value::Null,
        };
        json!({"d": self.d, "n": self.n, "cleared_power": self.cleared_power, "coeffs": coeffs, "labels": labels})
    }
}

/// `x (x − 1) ⋯ (x − a + 1)`, or `None` when it vanishes.
fn falling(x: i64, a: u32) -> Option<i64> {
    let v: i64 = (0..a as i64).map(|i| x - i).product();
    (v != 0).then_some(v)
}

/// The spectral polynomial of `M_0`.
pub fn spectral<S: Scalar>(c: &TwistedCoords<S>) -> Result<SpectralPolynomial<S>> {
    if S::EXACT {
        return spectral_with(c, &lax_matrix);
    }
    check_spectral_ready(c)?;
    let support = generic_support(c.d(), c.n());
    let m = lax_monodromy(c, 0);
    finish_spectral(SpectralPolynomial::from_char_poly_on(c.d(), c.n(), m.char_poly(), &support))
}

/// Uncleared support of the characteristic polynomial of the Lax monodromy
/// for generic coordinates, found once per `(d, n)` from random rationals.
/// Float tables are restricted to it, so the coefficients kept do not depend
/// on how large the monodromy entries happen to be.
pub fn generic_support(d: usize, n: usize) -> Arc<BTreeSet<(usize, i64)>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<BTreeSet<(usize, i64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(s) = cache.lock().unwrap().get(&(d, n)) {
        return s.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ ((d as u64) << 32) ^ n as u64);
    let rows: Vec<Vec<Rational>> = (0..n)
        .map(|_| (0..d).map(|_| Rational::from((rng.random_range(1..=97i64) * if rng.random_bool(0.5) { 1 } else { -1 }, rng.random_range(1..=89i64)))).collect())
        .collect();
    let c = TwistedCoords::new(d, rows).expect("shape is valid");
    let support: BTreeSet<(usize, i64)> = lax_monodromy(&c, 0)
        .char_poly()
        .iter()
        .enumerate()
        .flat_map(|(r, p)| p.terms().map(move |(e, _)| (r, e)).collect::<Vec<_>>())
        .collect();
    let support = Arc::new(support);
    cache.lock().unwrap().insert((d, n), support.clone());
    support
}

fn check_spectral_ready<S: Scalar>(c: &TwistedCoords<S>) -> Result<()> {
    if c.spectral_ready() {
        Ok(())
    } else {
        Err(Error::contract(format!(
            "spectral data needs gcd(n, d + 1) = 1; got n = {}, d = {}",
            c.n(),
            c.d()
        )))
    }
}

fn finish_spectral<S: Scalar>(mut sp: SpectralPolynomial<S>) -> Result<SpectralPolynomial<S>> {
    if sp.d == 3 && sp.n % 2 == 1 {
        sp.labels = Some(label_3d(&sp)?);
    }
    Ok(sp)
}

/// [`spectral`] with a substitute Lax builder.
pub fn spectral_with<S: Scalar>(c: &TwistedCoords<S>, build: LaxBuilder<S>) -> Result<SpectralPolynomial<S>> {
    check_spectral_ready(c)?;
    let m = monodromy_with(c, 0, build);
    finish_spectral(SpectralPolynomial::from_char_poly(c.d(), c.n(), m.char_poly()))
}

/// Reads off `G_j`, `J_j`, `I_j` from the cleared 3D table, checking that
/// nothing lies outside the windows of the expansion
/// `R = k⁴ − k³ Σ G_j λ^{j−n} + k² Σ J_j λ^{j−q−n} − k Σ I_j λ^{j−2n} + λ^{−2n}`.
fn label_3d<S: Scalar>(sp: &SpectralPolynomial<S>) -> Result<IntegralLabels<S>> {
    let n = sp.n as i64;
    let q = n / 2;
    let ctx = sp.ctx();
    let scale = sp.max_magnitude().max(1.0);
    // Same cut as the float pruning of the table.
    let tol = S::eps(&ctx).powf(2.0 / 3.0) * scale;
    let small = |c: &S| if S::EXACT { c.is_zero() } else { c.magnitude() <= tol };
    if sp.cleared_power != 2 * n {
        return Err(Error::StructuralMismatch(format!(
            "cleared power is {} instead of 2n = {}",
            sp.cleared_power,
            2 * n
        )));
    }
    let one = S::one(&ctx);
    let expect_single = |r: usize, at: i64| -> Result<()> {
        for (m, c) in sp.rows[r].terms() {
            let want = if m == at { c.sub(&one) } else { c.clone() };
            if !small(&want) {
                return Err(Error::StructuralMismatch(format!("k^{r} row has coefficient {c} at λ^{m}")));
            }
        }
        if sp.rows[r].coeff(at).is_negligible(1.0) {
            return Err(Error::StructuralMismatch(format!("k^{r} row lacks λ^{at}")));
        }
        Ok(())
    };
    expect_single(4, 2 * n)?;
    expect_single(0, 0)?;
    let windows = [(3usize, n, n + q), (2, n - q, n), (1, 0, q)];
    for (r, lo, hi) in windows {
        for (m, c) in sp.rows[r].terms() {
            if (m < lo || m > hi) && !small(c) {
                return Err(Error::StructuralMismatch(format!(
                    "k^{r} coefficient {c} at λ^{m} lies outside λ^{lo}..λ^{hi}"
                )));
            }
        }
    }
    let window = |r: usize, lo: i64, negate: bool| -> Vec<S> {
        (0..=q)
            .map(|j| {
                let c = sp.rows[r].coeff(lo + j);
                if negate {
                    c.neg()
                } else {
                    c
                }
            })
            .collect()
    };
    Ok(IntegralLabels {
        g: window(3, n, true),
        j: window(2, n - q, false),
        i: window(1, 0, true),
    })
}

/// One entry of a conservation drift table.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DriftRow {
    pub step: usize,
    pub coeff_id: String,
    pub rel_drift: f64,
}

#[derive(Clone, Debug)]
pub struct DriftReport<S: Scalar> {
    pub initial: SpectralPolynomial<S>,
    pub rows: Vec<DriftRow>,
    pub max_drift: f64,
}

impl<S: Scalar> DriftReport<S> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,coeff_id,rel_drift\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:e}\n", r.step, r.coeff_id, r.rel_drift));
        }
        out
    }
}

/// Iterates the map and records, per step and per coefficient, the drift
/// `|c_t − c_0| / |c_0|`. Coefficients at or below `sqrt(eps)` times the
/// table's largest one are numerically zero and are measured against that
/// largest one instead. The exact
/// backend demands zero drift and fails with `StructuralMismatch` otherwise.
pub fn conservation_report<S: Scalar>(c: &TwistedCoords<S>, steps: usize) -> Result<DriftReport<S>> {
    drift_over_orbit(c, steps, &spectral)
}

pub fn conservation_report_with<S: Scalar>(
    c: &TwistedCoords<S>,
    steps: usize,
    build: LaxBuilder<S>,
) -> Result<DriftReport<S>> {
    drift_over_orbit(c, steps, &|x| spectral_with(x, build))
}

fn drift_over_orbit<S: Scalar>(
    c: &TwistedCoords<S>,
    steps: usize,
    spec: &dyn Fn(&TwistedCoords<S>) -> Result<SpectralPolynomial<S>>,
) -> Result<DriftReport<S>> {
    let initial = spec(c)?;
    let scale = initial.max_magnitude();
    let floor = if S::EXACT { 0.0 } else { S::eps(&c.ctx().clone()).sqrt() * scale };
    let mut ids: BTreeSet<(usize, i64)> = initial.entries().into_iter().map(|(r, m, _)| (r, m)).collect();
    let mut rows = Vec::new();
    let mut max_drift = 0.0f64;
    let mut state = c.clone();
    for step in 1..=steps {
        state = pentagram_map(&state)?;
        let now = spec(&state)?;
        ids.extend(now.entries().into_iter().map(|(r, m, _)| (r, m)));
        for &(r, m) in &ids {
            let before = initial.coeff(r, m);
            let diff = now.coeff(r, m).sub(&before);
            if S::EXACT && !diff.is_zero() {
                return Err(Error::StructuralMismatch(format!(
                    "spectral coefficient of k^{r} λ^{m} changed at step {step}: {before} -> {}",
                    now.coeff(r, m)
                )));
            }
            let rel = if diff.is_zero() {
                0.0
            } else if before.magnitude() > floor {
                diff.magnitude() / before.magnitude()
            } else {
                diff.magnitude() / scale
            };
            max_drift = max_drift.max(rel);
            rows.push(DriftRow {
                step,
                coeff_id: SpectralPolynomial::<S>::coeff_id(r, m),
                rel_drift: rel,
            });
        }
    }
    Ok(DriftReport { initial, rows, max_drift })
}

/// The ten quadruple-point conditions at `(λ, k) = (1, σ)` and the residual
/// of the relation tying them together.
#[derive(Clone, Debug)]
pub struct ClosedConditions<S: Scalar> {
    pub sign: i64,
    /// `(label, value)`; the label lists the derivatives, e.g. `"kl"` for
    /// `∂_k ∂_λ R`.
    pub residuals: Vec<(String, S)>,
    /// `R − σ ∂_k R + ½ ∂_k² R − (σ/6) ∂_k³ R` at `(1, σ)`; zero for every
    /// polygon.
    pub dependency: S,
}

impl<S: Scalar> ClosedConditions<S> {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|(_, v)| v.magnitude()).fold(0.0, f64::max)
    }
}

/// Derivatives are taken on the Laurent form of `R` itself, so no Leibniz
/// correction for the `λ^N` factor is needed.
pub fn closed_polygon_conditions<S: Scalar>(sp: &SpectralPolynomial<S>, sign: i64) -> Result<ClosedConditions<S>> {
    if sp.d != 3 || sp.n % 2 == 0 {
        return Err(Error::contract("closed-polygon conditions are defined for d = 3 and odd n"));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::contract("sign must be +1 or -1"));
    }
    let ctx = sp.ctx();
    let l0 = S::one(&ctx);
    let k0 = S::from_i64(sign, &ctx);
    let mut residuals = Vec::with_capacity(10);
    for order in 0..=3u32 {
        for a in 0..=order {
            let b = order - a;
            let label = format!("{}{}", "k".repeat(b as usize), "l".repeat(a as usize));
            let label = if label.is_empty() { "R".to_string() } else { label };
            residuals.push((label, sp.derivative(a, b, &l0, &k0)));
        }
    }
    let dk = |b| sp.derivative(0, b, &l0, &k0);
    let sigma = S::from_i64(sign, &ctx);
    let dependency = dk(0)
        .sub(&sigma.mul(&dk(1)))
        .add(&dk(2).div(&S::from_i64(2, &ctx)))
        .sub(&sigma.mul(&dk(3)).div(&S::from_i64(6, &ctx)));
    Ok(ClosedConditions { sign, residuals, dependency })
}

/// Number of interior lattice points of the Newton polygon, by Pick's
/// theorem on the convex hull of the support.
pub fn newton_genus_bound<S: Scalar>(sp: &SpectralPolynomial<S>) -> usize {
    interior_lattice_points(&sp.support())
}

pub fn interior_lattice_points(points: &[(i64, i64)]) -> usize {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return 0;
    }
    let mut twice_area = 0i64;
    let mut boundary = 0i64;
    for (i, &(x0, y0)) in hull.iter().enumerate() {
        let (x1, y1) = hull[(i + 1) % hull.len()];
        twice_area += x0 * y1 - x1 * y0;
        boundary += gcd_i((x1 - x0).abs(), (y1 - y0).abs());
    }
    // Pick: A = I + B/2 − 1.
    ((twice_area.abs() - boundary + 2) / 2) as usize
}

fn gcd_i(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd_i(b, a % b)
    }
}

/// Andrew's monotone chain; collinear points are dropped.
fn convex_hull(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(i64, i64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Numerical rank of the Jacobian of `f` at `x`, by central differences
/// with step `eps^{1/3} · max(1, |x_i|)`. Rows are normalized before the
/// singular values are thresholded at `tol` relative to the largest.
pub fn jacobian_rank<S: FloatScalar>(f: impl Fn(&[S]) -> Result<Vec<S>>, x: &[S], tol: f64) -> Result<usize> {
    let ctx = x[0].ctx();
    let h0 = S::eps(&ctx).cbrt();
    let base = f(x)?;
    let mut jac = DMatrix::<f64>::zeros(base.len(), x.len());
    for (col, xi) in x.iter().enumerate() {
        let h = S::from_f64(h0 * xi.magnitude().max(1.0), &ctx);
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[col] = xi.add(&h);
        minus[col] = xi.sub(&h);
        let (fp, fm) = (f(&plus)?, f(&minus)?);
        let two_h = h.add(&h);
        for (row, (a, b)) in fp.iter().zip(&fm).enumerate() {
            jac[(row, col)] = a.sub(b).div(&two_h).to_c64().re;
        }
    }
    for mut row in jac.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let sv = jac.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * top).count())
}

/// Rank of the map from the `3n` coordinates to the labeled integrals.
pub fn integrals_rank<S: FloatScalar>(c: &TwistedCoords<S>) -> Result<usize> {
    if c.d() != 3 || c.n() % 2 == 0 {
        return Err(Error::contract("integrals rank is defined for d = 3 and odd n"));
    }
    let (d, n) = (c.d(), c.n());
    let x: Vec<S> = c.rows().iter().flatten().cloned().collect();
    let f = |x: &[S]| -> Result<Vec<S>> {
        let rows = x.chunks(d).map(<[S]>::to_vec).collect();
        let sp = spectral(&TwistedCoords::new(d, rows)?)?;
        Ok(sp.labels.expect("3D odd n is labeled").flatten())
    };
    debug_assert_eq!(x.len(), d * n);
    jacobian_rank(f, &x, 1e-10)
}

/// Eigenpairs `(k, ψ)` of `M_0(λ0)` with `ψ` scaled so its components sum
/// to 1.
pub fn floquet_bloch<S: FloatScalar>(c: &TwistedCoords<S>, lambda0: &S) -> Result<Vec<(S, Vec<S>)>> {
    if lambda0.is_zero() {
        return Err(Error::contract("λ0 must be nonzero"));
    }
    let m = lax_monodromy(c, 0).eval(lambda0);
    eigenpairs(&m)?
        .into_iter()
        .map(|(k, v)| {
            let sum = v.iter().fold(k.zero_like(), |acc, x| acc.add(x));
            let norm = v.iter().map(|x| x.magnitude()).fold(0.0, f64::max);
            if sum.magnitude() <= S::eps(&k.ctx()).sqrt() * norm {
                return Err(Error::NormalizationPole(k.to_text()));
            }
            Ok((k, v.iter().map(|x| x.div(&sum)).collect()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{q, Matrix, Ring};
    use crate::polygon::{coords_of_polygon, random_polygon, ProjectivePolygon};
    use rug::{Complex, Rational};

    fn lam(e: i64) -> LaurentPoly<Rational> {
        LaurentPoly::monomial(q(1, 1), e)
    }

    fn cst(x: &Rational) -> LaurentPoly<Rational> {
        LaurentPoly::constant(x.clone())
    }

    #[test]
    fn lambda_block_by_dimension() {
        let slots = |d: usize| (1..=d).map(|i| lambda_slot(d, i)).collect::<Vec<_>>();
        assert_eq!(slots(3), vec![true, false, true]);
        assert_eq!(slots(4), vec![false, true, false, true]);
        assert_eq!(slots(2), vec![false, true]);
        assert_eq!(slots(5), vec![true, false, true, false, true]);
    }

    #[test]
    fn three_dimensional_lax_matrix_is_explicit() {
        let c = random_polygon::<Rational>(3, 5, 3, 5.0, &()).unwrap();
        let (a, b, cc) = (c.get(2, 3), c.get(2, 2), c.get(2, 1));
        let zero = LaurentPoly::zero(&());
        let want = LaurentMatrix::from_fn(4, |i, j| match (i, j) {
            (0, 0) => cst(cc).shift(-1),
            (0, 1) => lam(-1),
            (1, 0) => cst(b),
            (1, 2) => lam(0),
            (2, 0) => cst(a).shift(-1),
            (2, 3) => lam(-1),
            (3, 0) => cst(&q(-1, 1)),
            _ => zero.clone(),
        });
        let l = lax_matrix(&c, 2);
        assert_eq!(l, want);
        assert_eq!(l.det(), lam(-2));
    }

    #[test]
    fn monodromy_determinant_and_cyclic_independence() {
        let c = random_polygon::<Rational>(3, 5, 8, 4.0, &()).unwrap();
        let m0 = lax_monodromy(&c, 0);
        assert_eq!(m0.det(), lam(-10));
        let cp = m0.char_poly();
        for i in 1..5 {
            assert_eq!(lax_monodromy(&c, i).char_poly(), cp);
        }
        assert_eq!(ordered_product(&[lax_matrix(&c, 0)]), lax_matrix(&c, 0));
    }

    #[test]
    fn three_dimensional_structure() {
        for n in [5usize, 7, 9] {
            let c = random_polygon::<Rational>(3, n, n as u64, 4.0, &()).unwrap();
            let sp = spectral(&c).unwrap();
            assert_eq!(sp.cleared_power, 2 * n as i64);
            assert_eq!(sp.k_degree(), 4);
            assert_eq!(sp.rows[0], lam(0));
            assert_eq!(sp.labels.as_ref().unwrap().count(), 3 * (n / 2 + 1));
        }
    }

    #[test]
    fn conserved_exactly_in_two_and_three_dimensions() {
        for (d, n) in [(2, 5), (2, 7), (3, 5), (3, 7)] {
            let c = random_polygon::<Rational>(d, n, 40 + n as u64, 4.0, &()).unwrap();
            let rep = conservation_report(&c, 2).unwrap();
            assert_eq!(rep.max_drift, 0.0);
            assert!(!rep.rows.is_empty());
        }
        let c = random_polygon::<Rational>(3, 5, 1, 3.0, &()).unwrap();
        assert!(conservation_report(&c, 0).unwrap().rows.is_empty());
    }

    #[test]
    fn corrupted_lax_sign_breaks_conservation() {
        let c = random_polygon::<Rational>(3, 5, 2, 4.0, &()).unwrap();
        let corrupted = |c: &TwistedCoords<Rational>, j: i64| {
            let mut inv = lax_inverse_form(c, j);
            inv.set(2, 3, inv.get(2, 3).neg());
            inv.inverse_monomial().unwrap()
        };
        let err = conservation_report_with(&c, 1, &corrupted).unwrap_err();
        assert!(matches!(err, Error::StructuralMismatch(_)), "{err:?}");
    }

    #[test]
    fn dependency_relation_holds_for_any_polygon() {
        for seed in 0..10 {
            let c = random_polygon::<Rational>(3, 7, seed, 6.0, &()).unwrap();
            let sp = spectral(&c).unwrap();
            for sign in [1, -1] {
                let cc = closed_polygon_conditions(&sp, sign).unwrap();
                assert!(cc.dependency.is_zero());
                assert_eq!(cc.residuals.len(), 10);
            }
            assert!(!sp.eval(&q(1, 1), &q(1, 1)).is_zero());
        }
    }

    #[test]
    fn closed_pentagon_in_space_has_quadruple_point() {
        let pts: [[i64; 4]; 5] = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 2, -1, 3]];
        let reps = pts.iter().map(|p| p.iter().map(|&x| q(x, 1)).collect()).collect();
        let p = ProjectivePolygon::new(reps, Matrix::identity(4, &())).unwrap();
        let c = coords_of_polygon(&p).unwrap();
        let sp = spectral(&c).unwrap();
        let cc = closed_polygon_conditions(&sp, 1).unwrap();
        assert!(cc.residuals.iter().all(|(_, v)| v.is_zero()), "{:?}", cc.residuals);
    }

    #[test]
    fn genus_of_three_dimensional_curves() {
        for (n, g) in [(5usize, 6usize), (7, 9)] {
            let c = random_polygon::<Rational>(3, n, 17, 5.0, &()).unwrap();
            assert_eq!(newton_genus_bound(&spectral(&c).unwrap()), g);
        }
        assert_eq!(interior_lattice_points(&[(0, 1), (1, 0)]), 0);
        assert_eq!(interior_lattice_points(&[(0, 0), (2, 0), (0, 2), (2, 2)]), 1);
        assert_eq!(interior_lattice_points(&[(0, 0), (1, 1), (2, 2)]), 0);
    }

    #[test]
    fn integrals_are_independent() {
        let c = random_polygon::<Complex>(3, 5, 5, 1.5, &256).unwrap();
        assert_eq!(integrals_rank(&c).unwrap(), 9);
        let one = |_: &[Complex]| Ok(vec![Complex::with_val(256, 1)]);
        let x: Vec<Complex> = c.rows().iter().flatten().cloned().collect();
        assert_eq!(jacobian_rank(one, &x, 1e-10).unwrap(), 0);
    }

    #[test]
    fn floquet_bloch_normalization_and_determinant() {
        let prec = 256;
        let c = random_polygon::<Complex>(3, 5, 6, 1.5, &prec).unwrap();
        let l0 = Complex::with_val(prec, (0.7, 0.2));
        let pairs = floquet_bloch(&c, &l0).unwrap();
        let sp = spectral(&c).unwrap();
        let mut log_sum = Complex::with_val(prec, 0);
        for (k, psi) in &pairs {
            let s = psi.iter().fold(Complex::with_val(prec, 0), |a, x| a + x);
            assert!((s - 1u32).magnitude() < 1e-60);
            assert!(sp.eval(&l0, k).magnitude() < 1e-50 * sp.max_magnitude());
            log_sum += k.clone().ln();
        }
        let want = Complex::with_val(prec, l0.clone().ln()) * (-10i32);
        let diff = Complex::with_val(prec, &log_sum - &want);
        // Logarithms agree up to a multiple of 2πi.
        let turns = diff.imag().to_f64() / (2.0 * std::f64::consts::PI);
        assert!(diff.real().to_f64().abs() < 1e-60);
        assert!((turns - turns.round()).abs() < 1e-50);
    }
}
