use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Complex, Rational};
use serde_json::{json, Value};

use pentalab::algebra::{cf, Matrix, Scalar};
use pentalab::io::{parse_polygon, AnyCoords, Backend, PolygonFile, WireScalar};
use pentalab::kdvlimit::flow::{flow_rhs, STABILITY_BUDGET};
use pentalab::kdvlimit::{continuous_limit_check, kdv_flow, spectral_shift_check, CircleGrid, DiffOperator, PotentialsFile};
use pentalab::lax::{closed_polygon_conditions, conservation_report, integrals_rank, newton_genus_bound, spectral};
use pentalab::pentagram::{iterate, pentagram_map};
use pentalab::polygon::{coords_of_polygon, moment_polygon, random_polygon, ProjectivePolygon};
use pentalab::scaling::{deviation_csv, monodromy_crosscheck, scaling_invariance_check, scaling_is_asserted, DeviationRow};
use pentalab::suite::verify_suite;
use pentalab::{Error, Result, TwistedCoords};

use crate::output::RunConfig;
use crate::{Command, GlobalArgs, Potentials, Source};

/// Runs a generic body on either backend.
macro_rules! on_coords {
    ($coords:expr, $c:ident => $body:expr) => {
        match $coords {
            AnyCoords::Rational($c) => $body,
            AnyCoords::Float($c) => $body,
        }
    };
}

fn config(g: &GlobalArgs, command: &str, backend: Backend) -> Result<RunConfig> {
    Ok(RunConfig {
        command: command.into(),
        backend,
        precision: g.precision,
        seed: g.seed,
        tol: g.tol,
        out_dir: g.out_dir.clone(),
    })
}

fn read(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Contract(format!("cannot read {}: {e}", path.display())))
}

fn generate<S: WireScalar>(src: &Source, seed: u64, spread: f64, ctx: &S::Ctx) -> Result<AnyCoords> {
    let c = match src.moment {
        Some(jitter) => coords_of_polygon(&moment_polygon::<S>(src.d, src.n, seed, jitter, ctx)?)?,
        None => random_polygon::<S>(src.d, src.n, seed, spread, ctx)?,
    };
    Ok(S::wrap(c))
}

fn load(src: &Source, g: &GlobalArgs) -> Result<AnyCoords> {
    if let Some(path) = &src.input {
        return parse_polygon(&read(path)?, g.precision);
    }
    match g.backend {
        Backend::Rational => generate::<Rational>(src, g.seed, src.spread.unwrap_or(5.0), &()),
        Backend::Float => generate::<Complex>(src, g.seed, src.spread.unwrap_or(1.0), &g.precision),
    }
}

fn backend_of(c: &AnyCoords) -> Backend {
    match c {
        AnyCoords::Rational(_) => Backend::Rational,
        AnyCoords::Float(_) => Backend::Float,
    }
}

fn polygon_value<S: WireScalar>(c: &TwistedCoords<S>, tag: &str) -> Value {
    serde_json::to_value(PolygonFile::from_any(&S::wrap(c.clone()), Some(tag))).expect("polygon serializes")
}

fn random_potentials(p: &Potentials, seed: u64) -> Result<DiffOperator> {
    let grid = CircleGrid::new(p.grid)?;
    if let Some(path) = &p.potentials {
        let file: PotentialsFile = serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(e.to_string()))?;
        return file.into_operator();
    }
    if p.d < 1 {
        return Err(Error::Contract("d must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = (0..p.d)
        .map(|_| {
            let modes: Vec<(f64, f64)> = (1..=3)
                .map(|m| {
                    let w = p.amplitude / (m * m) as f64;
                    (rng.random_range(-w..=w), rng.random_range(-w..=w))
                })
                .collect();
            grid.sample(|x| modes.iter().enumerate().map(|(m, (a, b))| a * ((m + 1) as f64 * x).cos() + b * ((m + 1) as f64 * x).sin()).sum())
        })
        .collect();
    DiffOperator::agd(&grid, u)
}

fn default_dt(l: &DiffOperator, dt: Option<f64>) -> f64 {
    let half = l.grid().len() as f64 / 2.0;
    dt.unwrap_or(0.25 * STABILITY_BUDGET / (half * half))
}

fn within(tol: Option<f64>, value: f64) -> Value {
    tol.map_or(Value::Null, |t| json!(value <= t))
}

pub fn run(g: &GlobalArgs, command: Command) -> Result<u8> {
    if g.precision < 53 {
        return Err(Error::Contract(format!("precision {} is below 53 bits", g.precision)));
    }
    match command {
        Command::Gen(src) => {
            let c = load(&src, g)?;
            let cfg = config(g, "gen", backend_of(&c))?;
            let tag = "polygon.generate";
            let value = serde_json::to_value(PolygonFile::from_any(&c, Some(tag))).expect("polygon serializes");
            let path = cfg.write_json("polygon.json", tag, value)?;
            println!("wrote {} (d = {}, n = {})", path.display(), c.d(), c.n());
        }
        Command::Map(src) => {
            let c = load(&src, g)?;
            let cfg = config(g, "map", backend_of(&c))?;
            let tag = "pentagram.pentagram_map";
            let value = on_coords!(&c, c => polygon_value(&pentagram_map(c)?, tag));
            let path = cfg.write_json("image.json", tag, value)?;
            println!("wrote {}", path.display());
        }
        Command::Orbit { source, steps } => {
            let c = load(&source, g)?;
            let cfg = config(g, "orbit", backend_of(&c))?;
            let tag = "pentagram.iterate";
            let (states, csv, failure) = on_coords!(&c, c => {
                let orbit = iterate(c, steps);
                let states: Vec<Value> = orbit.states.iter().map(|s| polygon_value(s, tag)).collect();
                let mut csv = String::from("step,min_window_det,max_coeff\n");
                for d in &orbit.diagnostics {
                    csv.push_str(&format!("{},{:e},{:e}\n", d.step, d.min_window_det, d.max_coeff));
                }
                (states, csv, orbit.failure)
            });
            let count = states.len() - 1;
            cfg.write_json("orbit.json", tag, Value::Array(states))?;
            cfg.write_csv("orbit.csv", tag, &csv)?;
            match failure {
                Some((step, e)) => {
                    eprintln!("orbit stopped at step {step}: {e}");
                    return Err(e);
                }
                None => println!("{count} steps written to orbit.json and orbit.csv"),
            }
        }
        Command::Spectral(src) => {
            let c = load(&src, g)?;
            let cfg = config(g, "spectral", backend_of(&c))?;
            let tag = "lax.spectral";
            let value = on_coords!(&c, c => spectral(c)?.to_json());
            let entries = value["coeffs"].as_array().map_or(0, Vec::len);
            let path = cfg.write_json("spectral.json", tag, value)?;
            println!("wrote {} ({entries} coefficients)", path.display());
        }
        Command::Conserve { source, steps } => {
            let c = load(&source, g)?;
            let cfg = config(g, "conserve", backend_of(&c))?;
            let tag = "lax.conservation_report";
            let (csv, drift) = on_coords!(&c, c => {
                let r = conservation_report(c, steps)?;
                (r.to_csv(), r.max_drift)
            });
            let path = cfg.write_csv("drift.csv", tag, &csv)?;
            println!("max drift {drift:e} over {steps} steps; wrote {}", path.display());
        }
        Command::ScalingCheck { d, n, samples } => {
            let cfg = config(g, "scaling-check", g.backend)?;
            let tag = "scaling.scaling_invariance_check";
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            let mut rows = Vec::with_capacity(samples);
            for k in 0..samples as u64 {
                let seed = g.seed.wrapping_add(k);
                let s = loop {
                    let s = Rational::from((rng.random_range(1..=5i64) * if rng.random_bool(0.5) { 1 } else { -1 }, rng.random_range(1..=5i64)));
                    if s.clone().abs() != 1 {
                        break s;
                    }
                };
                let deviation = match g.backend {
                    Backend::Rational => scaling_invariance_check(&random_polygon::<Rational>(d, n, seed, 4.0, &())?, &s)?,
                    Backend::Float => {
                        let c = random_polygon::<Complex>(d, n, seed, 1.0, &g.precision)?;
                        scaling_invariance_check(&c, &Complex::from_rational(&s, &g.precision))?
                    }
                };
                rows.push(DeviationRow { d, n, seed, s: s.to_string(), deviation });
            }
            let worst = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
            let path = cfg.write_csv("scaling.csv", tag, &deviation_csv(&rows))?;
            let note = if scaling_is_asserted(d) { "" } else { " (reported only)" };
            println!("max deviation {worst:e}{note}; wrote {}", path.display());
            if scaling_is_asserted(d) && g.backend == Backend::Rational && worst != 0.0 {
                return Err(Error::StructuralMismatch(format!("scaling deviation {worst:e} in d = {d}")));
            }
        }
        Command::ClosedCheck { input, n, sign } => {
            let c = match &input {
                Some(path) => parse_polygon(&read(path)?, g.precision)?,
                None => {
                    let prec = g.precision;
                    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
                    let reps: Vec<Vec<Complex>> = (0..n).map(|_| (0..4).map(|_| cf(rng.random_range(-1.0..1.0), prec)).collect()).collect();
                    AnyCoords::Float(coords_of_polygon(&ProjectivePolygon::new(reps, Matrix::identity(4, &prec))?)?)
                }
            };
            let cfg = config(g, "closed-check", backend_of(&c))?;
            let tag = "lax.closed_polygon_conditions";
            let value = on_coords!(&c, c => {
                let cc = closed_polygon_conditions(&spectral(c)?, sign)?;
                let residuals: Vec<Value> = cc.residuals.iter().map(|(l, v)| json!({"derivative": l, "value": v.to_text()})).collect();
                json!({
                    "sign": sign,
                    "residuals": residuals,
                    "max_residual": cc.max_residual(),
                    "dependency": cc.dependency.to_text(),
                    "within_tol": within(g.tol, cc.max_residual()),
                })
            });
            println!("max residual {:e}, dependency {}", value["max_residual"].as_f64().unwrap_or(f64::NAN), value["dependency"]);
            cfg.write_json("closed.json", tag, value)?;
        }
        Command::XcheckMonodromy { source, s } => {
            let c = load(&source, g)?.into_float(g.precision)?;
            let cfg = config(g, "xcheck-monodromy", Backend::Float)?;
            let tag = "scaling.monodromy_crosscheck";
            let prec = *c.ctx();
            let mut csv = String::from("d,n,s,deviation\n");
            let mut worst = 0.0f64;
            for s in s {
                let dev = monodromy_crosscheck(&c, &cf(s, prec))?;
                worst = worst.max(dev);
                csv.push_str(&format!("{},{},{s},{dev:e}\n", c.d(), c.n()));
            }
            let path = cfg.write_csv("xcheck.csv", tag, &csv)?;
            println!("max deviation {worst:e}; wrote {}", path.display());
        }
        Command::Genus(src) => {
            let c = load(&src, g)?;
            let cfg = config(g, "genus", backend_of(&c))?;
            let tag = "lax.newton_genus_bound";
            let genus = on_coords!(&c, c => newton_genus_bound(&spectral(c)?));
            cfg.write_json("genus.json", tag, json!({"d": c.d(), "n": c.n(), "genus": genus}))?;
            println!("genus {genus}");
        }
        Command::Rank(src) => {
            let c = load(&src, g)?.into_float(g.precision)?;
            let cfg = config(g, "rank", Backend::Float)?;
            let tag = "lax.integrals_rank";
            let rank = integrals_rank(&c)?;
            cfg.write_json("rank.json", tag, json!({"d": c.d(), "n": c.n(), "rank": rank, "expected": 3 * (c.n() / 2 + 1)}))?;
            println!("rank {rank}");
        }
        Command::KdvEvolve { potentials, dt, steps } => {
            let cfg = config(g, "kdv-evolve", Backend::Float)?;
            let tag = "kdvlimit.kdv_flow";
            let l = random_potentials(&potentials, g.seed)?;
            let dt = default_dt(&l, dt);
            let traj = kdv_flow(&l, dt, steps)?;
            let last = traj.last();
            let rhs = flow_rhs(last)?;
            let d = last.dimension();
            let mut csv = String::from("x");
            for j in 0..d {
                csv.push_str(&format!(",u_{j}"));
            }
            for j in 0..d {
                csv.push_str(&format!(",rhs_{j}"));
            }
            csv.push('\n');
            for (k, x) in last.grid().points().into_iter().enumerate() {
                csv.push_str(&x.to_string());
                for u in last.potentials() {
                    csv.push_str(&format!(",{}", u[k]));
                }
                for r in &rhs {
                    csv.push_str(&format!(",{}", r[k]));
                }
                csv.push('\n');
            }
            let mut value = serde_json::to_value(PotentialsFile::from_operator(last)).expect("potentials serialize");
            value["t"] = json!(dt * steps as f64);
            cfg.write_json("potentials.json", tag, value)?;
            let path = cfg.write_csv("kdv_evolve.csv", tag, &csv)?;
            println!("evolved to t = {}; wrote potentials.json and {}", dt * steps as f64, path.display());
        }
        Command::KdvShiftCheck { potentials, shift, dt, steps } => {
            let cfg = config(g, "kdv-shift-check", Backend::Float)?;
            let tag = "kdvlimit.spectral_shift_check";
            let l = random_potentials(&potentials, g.seed)?;
            let dt = default_dt(&l, dt);
            let dev = spectral_shift_check(&l, shift, dt, steps)?;
            cfg.write_json("shift.json", tag, json!({"shift": shift, "dt": dt, "steps": steps, "deviation": dev, "within_tol": within(g.tol, dev)}))?;
            println!("deviation {dev:e}");
        }
        Command::Climit { potentials, eps } => {
            let cfg = config(g, "climit", Backend::Float)?;
            let tag = "kdvlimit.continuous_limit_check";
            let l = random_potentials(&potentials, g.seed)?;
            let report = continuous_limit_check(&l, &eps)?;
            cfg.write_csv("climit.csv", tag, &report.csv())?;
            cfg.write_json("climit.json", tag, serde_json::to_value(&report).expect("report serializes"))?;
            let slopes: Vec<String> = report.slopes.iter().map(|s| format!("{s:.4}")).collect();
            println!("slopes {}; alpha {:.6}; cosine {:.6}", slopes.join(", "), report.alpha, report.final_cosine());
        }
        Command::Verify { level } => {
            let cfg = config(g, "verify", g.backend)?;
            let report = verify_suite(level);
            let table = report.table(&format!("config={} level={level:?}", cfg.echo()));
            print!("{table}");
            cfg.write("verify.txt", &table)?;
            if !report.all_passed() {
                let ids: Vec<String> = report.failures().iter().map(|r| format!("{} ({})", r.id, r.name)).collect();
                eprintln!("failing criteria: {}", ids.join(", "));
                return Ok(4);
            }
        }
    }
    Ok(0)
}
