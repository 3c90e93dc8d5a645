//! The verification battery: one check per acceptance criterion.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::float::Constant;
use rug::{Complex, Float, Rational};
use serde::Serialize;

use crate::algebra::{cf, Matrix, Ring, Scalar};
use crate::error::{Error, Result};
use crate::kdvlimit::operator::{commutator_with_residual, ORDER_DROP_TOL};
use crate::kdvlimit::flow::INTEGRATION_TOL;
use crate::kdvlimit::{continuous_limit_check, q2_of, spectral_shift_check, CircleGrid, DiffOperator};
use crate::lax::{closed_polygon_conditions, conservation_report, integrals_rank, newton_genus_bound, spectral};
use crate::pentagram::pentagram_map;
use crate::polygon::{coords_of_polygon, moment_polygon, random_polygon, ProjectivePolygon, TwistedCoords};
use crate::scaling::{monodromy_crosscheck, scaling_invariance_check};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// `d ≤ 3`, `n ≤ 7`, no differential-operator checks.
    Quick,
    Full,
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(Error::Parse(format!("unknown level {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub outcome: Outcome,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.outcome != Outcome::Fail
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub level: Level,
    pub results: Vec<CriterionResult>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(CriterionResult::passed)
    }

    pub fn failures(&self) -> Vec<&CriterionResult> {
        self.results.iter().filter(|r| !r.passed()).collect()
    }

    /// A fixed-width table headed by the configuration.
    pub fn table(&self, config: &str) -> String {
        let mut out = format!("# {config}\n");
        let _ = writeln!(out, "{:>3}  {:<26} {:<7} {:>9}  detail", "id", "criterion", "result", "seconds");
        for r in &self.results {
            let tag = match r.outcome {
                Outcome::Pass => "PASS",
                Outcome::Fail => "FAIL",
                Outcome::Skipped => "SKIP",
            };
            let _ = writeln!(out, "{:>3}  {:<26} {:<7} {:>9.2}  {}", r.id, r.name, tag, r.seconds, r.detail);
        }
        out
    }
}

/// `(id, name, runtime budget in seconds)`.
pub const CRITERIA: [(usize, &str, f64); 11] = [
    (1, "exact conservation", 120.0),
    (2, "float conservation", 300.0),
    (3, "scaling invariance", 120.0),
    (4, "3D structure", 30.0),
    (5, "genus", 10.0),
    (6, "closed polygons", 60.0),
    (7, "monodromy cross-check", 60.0),
    (8, "integral independence", 60.0),
    (9, "KdV commutator", 60.0),
    (10, "continuous limit", 300.0),
    (11, "2D regression", 1.0),
];

/// A check either holds (with a summary) or fails (with the reason).
type Check = Result<std::result::Result<String, String>>;

fn verdict(ok: bool, detail: String) -> Check {
    Ok(if ok { Ok(detail) } else { Err(detail) })
}

pub fn run_criterion(id: usize, level: Level) -> Result<CriterionResult> {
    let &(_, name, budget) = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .ok_or_else(|| Error::contract(format!("no criterion {id}")))?;
    let quick = level == Level::Quick;
    if quick && matches!(id, 9 | 10) {
        return Ok(CriterionResult {
            id,
            name,
            outcome: Outcome::Skipped,
            detail: "differential-operator checks run at the full level".into(),
            seconds: 0.0,
            budget_seconds: budget,
        });
    }
    let start = Instant::now();
    let check = match id {
        1 => exact_conservation(quick),
        2 => float_conservation(quick),
        3 => scaling(quick),
        4 => structure_3d(quick),
        5 => genus(quick),
        6 => closed_polygons(),
        7 => crosscheck(quick),
        8 => independence(),
        9 => kdv_commutator(),
        10 => continuous_limit(),
        _ => regular_pentagon(),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (mut outcome, mut detail) = match check {
        Ok(Ok(d)) => (Outcome::Pass, d),
        Ok(Err(d)) => (Outcome::Fail, d),
        Err(e) => (Outcome::Fail, format!("error: {e}")),
    };
    if seconds > budget {
        outcome = Outcome::Fail;
        detail = format!("{detail}; over the {budget} s budget");
    }
    Ok(CriterionResult { id, name, outcome, detail, seconds, budget_seconds: budget })
}

pub fn verify_suite(level: Level) -> SuiteReport {
    let results = CRITERIA
        .iter()
        .map(|c| run_criterion(c.0, level).expect("listed criteria exist"))
        .collect();
    SuiteReport { level, results }
}

fn cap(quick: bool, configs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    configs.iter().copied().filter(|&(d, n)| !quick || (d <= 3 && n <= 7)).collect()
}

fn random_ratio(rng: &mut ChaCha8Rng) -> Rational {
    loop {
        let num: i64 = rng.random_range(1..=5) * if rng.random_bool(0.5) { 1 } else { -1 };
        let den: i64 = rng.random_range(1..=5);
        let s = Rational::from((num, den));
        if s.clone().abs() != 1 {
            return s;
        }
    }
}

fn exact_conservation(quick: bool) -> Check {
    let mut count = 0;
    for (d, n) in cap(quick, &[(3, 5), (3, 7), (3, 9), (2, 5), (2, 7)]) {
        for seed in 0..5 {
            let c = random_polygon::<Rational>(d, n, seed, 5.0, &())?;
            let before = spectral(&c)?.entries();
            let after = spectral(&pentagram_map(&c)?)?.entries();
            if before != after {
                return verdict(false, format!("d = {d}, n = {n}, seed {seed}: spectral coefficients changed"));
            }
            count += 1;
        }
    }
    verdict(true, format!("{count} polygons, all coefficients identical"))
}

fn float_instance(d: usize, seed: u64, prec: u32) -> Result<TwistedCoords<Complex>> {
    match d {
        5 => coords_of_polygon(&moment_polygon::<Complex>(5, 7, seed, 0.2, &prec)?),
        3 => random_polygon::<Complex>(3, 7, seed, 0.2, &prec),
        _ => random_polygon::<Complex>(d, d + 3, seed, 0.2, &prec),
    }
}

fn float_conservation(quick: bool) -> Check {
    let dims: &[usize] = if quick { &[3] } else { &[4, 5, 6] };
    let mut worst = [0.0f64; 2];
    for (slot, (prec, limit)) in [(256u32, 1e-30), (53, 1e-9)].into_iter().enumerate() {
        for &d in dims {
            for seed in 0..3 {
                let drift = conservation_report(&float_instance(d, seed, prec)?, 20)?.max_drift;
                worst[slot] = worst[slot].max(drift);
                if !(drift <= limit) {
                    return verdict(false, format!("d = {d}, seed {seed}, {prec} bits: drift {drift:.3e} > {limit:e}"));
                }
            }
        }
    }
    verdict(true, format!("max drift {:.2e} at 256 bits, {:.2e} at 53 bits over 20 steps", worst[0], worst[1]))
}

fn scaling(quick: bool) -> Check {
    let asserted = cap(quick, &[(2, 5), (3, 5), (4, 7), (5, 7), (6, 8)]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &(d, n) in &asserted {
        for seed in 0..10 {
            let c = random_polygon::<Rational>(d, n, seed, 4.0, &())?;
            let s = random_ratio(&mut rng);
            let dev = scaling_invariance_check(&c, &s)?;
            if dev != 0.0 {
                return verdict(false, format!("d = {d}, seed {seed}, s = {s}: deviation {dev:e}"));
            }
        }
    }
    let mut detail = format!("zero deviation for d = 2..{}", asserted.last().map_or(0, |x| x.0));
    if !quick {
        for (d, n) in [(7, 9), (8, 10)] {
            let c = random_polygon::<Rational>(d, n, 0, 4.0, &())?;
            let s = random_ratio(&mut rng);
            let _ = write!(detail, "; d = {d} reports {:.3e}", scaling_invariance_check(&c, &s)?);
        }
    }
    verdict(true, detail)
}

fn structure_3d(quick: bool) -> Check {
    let ns: &[usize] = if quick { &[5, 7] } else { &[5, 7, 9] };
    for &n in ns {
        let c = random_polygon::<Rational>(3, n, 20 + n as u64, 5.0, &())?;
        let sp = spectral(&c)?;
        let (n, q) = (n as i64, (n / 2) as i64);
        let count = sp.labels.as_ref().map_or(0, |l| l.count());
        if count != 3 * (q as usize + 1) {
            return verdict(false, format!("n = {n}: {count} labeled integrals"));
        }
        if sp.cleared_power != 2 * n || sp.coeff(0, 0) != 1 {
            return verdict(false, format!("n = {n}: cleared by λ^{} with k⁰ term {}", sp.cleared_power, sp.coeff(0, 0)));
        }
        let window = |r: usize| match r {
            4 => (2 * n, 2 * n),
            3 => (n, n + q),
            2 => (n - q, n),
            1 => (0, q),
            _ => (0, 0),
        };
        if let Some((r, m, _)) = sp.entries().into_iter().find(|&(r, m, _)| m < window(r).0 || m > window(r).1) {
            return verdict(false, format!("n = {n}: k^{r} has λ^{m} outside its window"));
        }
    }
    verdict(true, format!("n ∈ {ns:?}: 3(q + 1) labels, k⁰ term 1, supports inside the windows"))
}

fn genus(quick: bool) -> Check {
    let ns: &[usize] = if quick { &[5, 7] } else { &[5, 7, 9] };
    for &n in ns {
        for seed in 0..3 {
            let g = newton_genus_bound(&spectral(&random_polygon::<Rational>(3, n, seed, 5.0, &())?)?);
            if g != 3 * (n / 2) {
                return verdict(false, format!("n = {n}, seed {seed}: genus {g}"));
            }
        }
    }
    verdict(true, format!("genus 3q for n ∈ {ns:?}"))
}

fn closed_polygons() -> Check {
    let prec = 256u32;
    let mut worst = 0.0f64;
    for n in [5usize, 7] {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let reps: Vec<Vec<Complex>> = (0..n)
                .map(|_| (0..4).map(|_| cf(rng.random_range(-1.0..1.0), prec)).collect())
                .collect();
            let c = coords_of_polygon(&ProjectivePolygon::new(reps, Matrix::identity(4, &prec))?)?;
            let res = closed_polygon_conditions(&spectral(&c)?, 1)?.max_residual();
            worst = worst.max(res);
            if !(res <= 1e-25) {
                return verdict(false, format!("n = {n}, seed {seed}: residual {res:e}"));
            }
        }
    }
    for n in [5usize, 7] {
        for seed in 0..3 {
            let sp = spectral(&random_polygon::<Rational>(3, n, seed, 5.0, &())?)?;
            for sign in [1, -1] {
                let dep = closed_polygon_conditions(&sp, sign)?.dependency;
                if !dep.is_zero() {
                    return verdict(false, format!("n = {n}, seed {seed}: dependency {dep}"));
                }
            }
        }
    }
    verdict(true, format!("max residual {worst:.2e} at k = 1; dependency exactly 0 on rational polygons"))
}

fn crosscheck(quick: bool) -> Check {
    let prec = 256u32;
    let dims: &[usize] = if quick { &[3] } else { &[3, 5] };
    let mut worst = 0.0f64;
    for &d in dims {
        for n in [5usize, 7] {
            if n < d + 2 {
                continue;
            }
            let c = random_polygon::<Complex>(d, n, n as u64, 1.0, &prec)?;
            for s in [0.5, 2.0] {
                let dev = monodromy_crosscheck(&c, &cf(s, prec))?;
                worst = worst.max(dev);
                if !(dev <= 1e-25) {
                    return verdict(false, format!("d = {d}, n = {n}, s = {s}: deviation {dev:e}"));
                }
            }
        }
    }
    verdict(true, format!("max deviation {worst:.2e}"))
}

fn independence() -> Check {
    for n in [5usize, 7] {
        for seed in 0..5 {
            let c = random_polygon::<Complex>(3, n, 60 + seed, 1.5, &256)?;
            let rank = integrals_rank(&c)?;
            if rank != 3 * (n / 2 + 1) {
                return verdict(false, format!("n = {n}, seed {seed}: rank {rank}"));
            }
        }
    }
    verdict(true, "full rank 3(q + 1) at 10 points".into())
}

fn smooth_potentials(g: &CircleGrid, d: usize, which: usize) -> Result<DiffOperator> {
    let u = (0..d)
        .map(|j| match which {
            0 => g.sample(|x| 0.3 * ((j + 1) as f64 * x).cos() + 0.2 * (x + j as f64).sin()),
            _ => g.sample(|x| 0.25 * (2.0 * x + 0.7 * j as f64).sin() - 0.15 * (3.0 * x).cos() + 0.1),
        })
        .collect();
    DiffOperator::agd(g, u)
}

fn kdv_commutator() -> Check {
    let g = CircleGrid::new(128)?;
    let (mut drop, mut shift) = (0.0f64, 0.0f64);
    for d in 2..=4 {
        let l = smooth_potentials(&g, d, 0)?;
        let (_, res) = commutator_with_residual(&q2_of(&l), &l)?;
        drop = drop.max(res);
        if !(res <= ORDER_DROP_TOL) {
            return verdict(false, format!("d = {d}: order-drop residual {res:e}"));
        }
        let dev = spectral_shift_check(&l, 1.0, 2e-4, 50)?;
        shift = shift.max(dev);
        if !(dev <= 10.0 * INTEGRATION_TOL) {
            return verdict(false, format!("d = {d}: spectral shift deviation {dev:e}"));
        }
    }
    verdict(true, format!("order drop {drop:.2e}, shift deviation {shift:.2e}"))
}

fn continuous_limit() -> Check {
    let g = CircleGrid::new(32)?;
    let mut detail = Vec::new();
    for d in [2, 3] {
        let mut alphas = Vec::new();
        for which in 0..2 {
            let r = continuous_limit_check(&smooth_potentials(&g, d, which)?, &[0.08, 0.04, 0.02])?;
            if let Some(s) = r.slopes.iter().find(|s| (*s - 2.0).abs() > 0.1) {
                return verdict(false, format!("d = {d}: slope {s:.4}"));
            }
            if !(r.final_cosine() >= 0.999) {
                return verdict(false, format!("d = {d}: cosine {:.6}", r.final_cosine()));
            }
            alphas.push(r.alpha);
        }
        let spread = (alphas[0] / alphas[1] - 1.0).abs();
        if !(spread <= 0.01) {
            return verdict(false, format!("d = {d}: α {:?} disagree", alphas));
        }
        detail.push(format!("d = {d}: α = {:.6}", alphas[0]));
    }
    verdict(true, detail.join(", "))
}

fn regular_pentagon() -> Check {
    let prec = 160u32;
    let reps: Vec<Vec<Complex>> = (0..5i32)
        .map(|j| {
            let t = Float::with_val(prec, Constant::Pi) * 2i32 * j / 5i32;
            vec![
                Complex::with_val(prec, t.clone().cos()),
                Complex::with_val(prec, t.sin()),
                Complex::with_val(prec, 1),
            ]
        })
        .collect();
    let c = coords_of_polygon(&ProjectivePolygon::new(reps, Matrix::identity(3, &prec))?)?;
    let image = pentagram_map(&c)?;
    let gap = image
        .rows()
        .iter()
        .flatten()
        .zip(c.rows().iter().flatten())
        .map(|(x, y)| x.sub(y).magnitude())
        .fold(0.0, f64::max);
    verdict(gap <= 1e-40, format!("coordinate change {gap:.2e}"))
}
