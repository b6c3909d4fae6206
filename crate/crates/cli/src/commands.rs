use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, Gamma};
use urnlab::density::{
    density_grid, empirical_cf, kde_density, silverman_bandwidth, support_span, trapezoid, uniform_grid,
    write_density_csv, MIN_CF_SAMPLES,
};
use urnlab::dirichlet::{
    coordinate_checks, gamma_p_expectation, gamma_p_limit, run_diagonal_urn, simulate_diagonal_urn,
    write_simplex_csv, DirichletParams,
};
use urnlab::exact::{decomposition_check, exact_distribution, normalized_profile, write_profile_csv};
use urnlab::exec::map_indexed;
use urnlab::fixpoint::iterate_fixpoint;
use urnlab::mc::{sample_connexion, sample_ct, sample_w_dt, Estimator, DEFAULT_HORIZON};
use urnlab::moments::{
    composite_moments, ct_moments_exact, dt_moments_direct, dt_moments_via_connexion, growth_diagnostics,
    odd_signs, phi_bound, phi_capital, MomentSeq, System,
};
use urnlab::rational::{fmt_exact, to_f64};
use urnlab::rng::{domain, stream};
use urnlab::stats::{ks_distance, pooled_std, raw_moment, two_sample_w2};
use urnlab::{Composition, SampleSet, UrnSpec};

use crate::config::{positive, Settings, SystemArg};

/// Band for Monte Carlo estimates against exact values, in standard errors.
const Z_BAND: f64 = 4.0;
/// Relative W2 tolerance at 1e5 samples; scaled by sqrt(1e5 / N) below that.
const W2_REL: f64 = 0.05;
/// Kolmogorov distance critical value coefficient (level about 0.001).
const KS_COEF: f64 = 1.95;
const RATIO_SLACK: f64 = 0.05;
const DUAL_ROUTE_REL: f64 = 1e-6;
const GOF_LEVEL: f64 = 1e-3;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub config: Settings,
    pub checks: Vec<Check>,
    pub results: Value,
    pub artifacts: Vec<PathBuf>,
}

impl Report {
    fn new(command: &'static str) -> Self {
        Self {
            command,
            config: Settings::default(),
            checks: Vec::new(),
            results: json!({}),
            artifacts: Vec::new(),
        }
    }

    fn check(&mut self, name: &'static str, pass: bool, detail: String) {
        self.checks.push(Check { name, pass, detail });
    }

    fn set(&mut self, key: &str, value: impl Serialize) {
        self.results[key] = serde_json::to_value(value).expect("serializable result");
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    fn write<F>(&mut self, path: PathBuf, f: F) -> anyhow::Result<()>
    where
        F: FnOnce(BufWriter<File>) -> urnlab::Result<()>,
    {
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        f(BufWriter::new(file))?;
        self.artifacts.push(path);
        Ok(())
    }
}

/// `dir/name.csv` with `tag` -> `dir/name.tag.csv`.
pub fn companion(out: &Path, tag: &str, ext: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{tag}.{ext}"))
}

fn z(estimate: (f64, f64), exact: f64) -> f64 {
    if estimate.1 > 0.0 {
        (estimate.0 - exact) / estimate.1
    } else if estimate.0 == exact {
        0.0
    } else {
        f64::INFINITY
    }
}

fn mc_common(cfg: &mut Settings) -> anyhow::Result<(UrnSpec, Composition, u64, usize, u64, Estimator)> {
    let spec = cfg.large_spec()?;
    let init = cfg.composition()?;
    let steps = positive("steps", *cfg.steps.get_or_insert(DEFAULT_HORIZON))?;
    let samples = positive("samples", *cfg.samples.get_or_insert(100_000))?;
    let seed = cfg.seed()?;
    let estimator = *cfg.estimator.get_or_insert(crate::config::EstimatorArg::Completed);
    Ok((spec, init, steps, samples, seed, estimator.into()))
}

fn draw_w(
    spec: &UrnSpec,
    system: SystemArg,
    init: Composition,
    steps: u64,
    samples: usize,
    seed: u64,
    estimator: Estimator,
) -> anyhow::Result<(SampleSet, Option<SampleSet>)> {
    Ok(match system {
        SystemArg::Dt => (sample_w_dt(spec, init, steps, samples, seed, estimator)?, None),
        SystemArg::Ct => {
            let (xi, w) = sample_ct(spec, init, steps, samples, seed, estimator)?;
            (w, Some(xi))
        }
    })
}

fn exact_composite(spec: &UrnSpec, system: System, init: Composition, order: usize) -> anyhow::Result<MomentSeq> {
    let table = match system {
        System::Ct => ct_moments_exact(spec, order)?,
        System::Dt => dt_moments_direct(spec, order)?,
    };
    Ok(composite_moments(&table, init)?.values)
}

fn seq_json(seq: &MomentSeq) -> Vec<Value> {
    (0..seq.len())
        .map(|p| match seq.get_exact(p) {
            Some(q) => json!({ "p": p, "exact": fmt_exact(q), "value": to_f64(q) }),
            None => json!({ "p": p, "value": seq.get_f64(p) }),
        })
        .collect()
}

pub fn exact_dist(mut cfg: Settings) -> anyhow::Result<Report> {
    let mut r = Report::new("exact-dist");
    let spec = cfg.spec()?;
    let init = cfg.composition()?;
    let Some(steps) = cfg.steps else { bail!("--steps is required") };
    let dist = exact_distribution(&spec, init, steps);
    let mass = dist.total_mass();
    r.check("total mass is exactly one", mass == urnlab::rational::qi(1), format!("mass {}", fmt_exact(&mass)));
    let mean = dist.mean_u2();
    let product = spec.expected_u2_exact(init, steps);
    r.check(
        "mean of u2 equals the martingale product",
        mean == product,
        format!("dp {:.12e} product {:.12e}", to_f64(&mean), to_f64(&product)),
    );
    if let Some(seed) = cfg.seed {
        let samples = positive("samples", *cfg.samples.get_or_insert(20_000))?;
        let gof = decomposition_check(&spec, init, steps, samples, seed)?;
        r.check(
            "forest decomposition matches the exact law",
            gof.p_value >= GOF_LEVEL,
            format!("chi2 {:.2} on {} dof, p {:.3e}", gof.statistic, gof.dof, gof.p_value),
        );
        r.set("decomposition", &gof);
    }
    r.set("atoms", dist.mass.len());
    r.set("mean_red", json!({ "exact": fmt_exact(&dist.mean_red()), "value": to_f64(&dist.mean_red()) }));
    r.set("mean_u2", json!({ "exact": fmt_exact(&mean), "value": to_f64(&mean) }));
    r.set("spec", spec.record());
    if let Some(out) = cfg.out.clone() {
        r.write(out.clone(), |w| dist.write_csv(w))?;
        if steps > 0 {
            let profile = normalized_profile(&dist)?;
            r.write(companion(&out, "profile", "csv"), |w| write_profile_csv(&profile, w))?;
        }
    }
    r.config = cfg;
    Ok(r)
}

pub fn mc_w(mut cfg: Settings) -> anyhow::Result<Report> {
    let mut r = Report::new("mc-w");
    let system = cfg.system()?;
    let (spec, init, steps, samples, seed, estimator) = mc_common(&mut cfg)?;
    let (w, xi) = draw_w(&spec, system, init, steps, samples, seed, estimator)?;
    let exact = exact_composite(&spec, system.into(), init, 2)?;
    let mut moments = Vec::new();
    for p in 1..=2 {
        let est = raw_moment(w.values(), p);
        let e = exact.get_f64(p as usize);
        let zp = z(est, e);
        moments.push(json!({ "p": p, "estimate": est.0, "std_err": est.1, "exact": e, "z": zp }));
        // the truncated estimator is biased beyond the first moment at any finite horizon
        if p == 1 || estimator == Estimator::Completed {
            let name = if p == 1 { "sample mean matches the exact mean" } else { "second moment matches the exact value" };
            r.check(name, zp.abs() <= Z_BAND, format!("z {zp:.2} (band {Z_BAND})"));
        }
    }
    r.set("moments", moments);
    r.set("mean", w.mean());
    r.set("std_dev", w.std_dev());
    if let Some(out) = cfg.out.clone() {
        w.save(&out)?;
        r.artifacts.push(out.clone());
        if let Some(xi) = &xi {
            let path = companion(&out, "xi", "csv");
            xi.save(&path)?;
            r.artifacts.push(path);
        }
    }
    r.config = cfg;
    Ok(r)
}

pub fn connexion_check(mut cfg: Settings) -> anyhow::Result<Report> {
    let mut r = Report::new("connexion-check");
    let (spec, init, steps, samples, seed, estimator) = mc_common(&mut cfg)?;
    let (xi, w_ct) = sample_ct(&spec, init, steps, samples, seed, estimator)?;
    let rhs = sample_connexion(&spec, init, steps, samples, seed, estimator)?;
    let w2 = two_sample_w2(w_ct.values(), rhs.values(), seed)?.distance;
    let rel = w2 / pooled_std(w_ct.values(), rhs.values());
    let tol = W2_REL * (1e5 / samples as f64).sqrt().max(1.0);
    r.check(
        "W^CT and xi^sigma W^DT agree in law",
        rel <= tol,
        format!("W2/pooled std {rel:.4} (limit {tol:.4})"),
    );
    let kappa = spec.kappa_f64(init);
    let gamma = Gamma::new(kappa, 1.0).context("Gamma law for xi")?;
    let ks = ks_distance(xi.values(), |x| gamma.cdf(x))?;
    let ks_tol = KS_COEF / (samples as f64).sqrt();
    r.check("xi is Gamma(kappa)", ks <= ks_tol, format!("KS {ks:.4} (limit {ks_tol:.4})"));
    let mean = spec.expected_w_ct(init)?;
    let (zl, zr) = (z(raw_moment(w_ct.values(), 1), mean), z(raw_moment(rhs.values(), 1), mean));
    r.check(
        "both sides have the exact mean",
        zl.abs() <= Z_BAND && zr.abs() <= Z_BAND,
        format!("z {zl:.2} and {zr:.2} (band {Z_BAND})"),
    );
    r.set("kappa", kappa);
    r.set("w2_relative", rel);
    r.set("ks_xi", ks);
    if let Some(out) = cfg.out.clone() {
        w_ct.save(&out)?;
        r.artifacts.push(out.clone());
        let path = companion(&out, "connexion", "csv");
        rhs.save(&path)?;
        r.artifacts.push(path);
    }
    r.config = cfg;
    Ok(r)
}

pub fn fixpoint(mut cfg: Settings) -> anyhow::Result<Report> {
    let mut r = Report::new("fixpoint");
    let system = cfg.system()?;
    let spec = cfg.large_spec()?;
    let particles = *cfg.particles.get_or_insert(100_000);
    if particles < 2 {
        bail!("--particles must be at least 2");
    }
    let iters = positive("iters", *cfg.iters.get_or_insert(40))?;
    let seed = cfg.seed()?;
    let run = iterate_fixpoint(&spec, system.into(), particles, iters, seed)?;
    let summary = run.summary(RATIO_SLACK);
    r.check(
        "successive distances contract above the noise floor",
        summary.within,
        format!(
            "max ratio {} over {} checked iterations (constant {:.4} + {RATIO_SLACK}, floor {:.4})",
            summary.max_ratio.map_or("none".into(), |m| format!("{m:.4}")),
            summary.checked,
            summary.constant,
            summary.noise_floor
        ),
    );
    r.set("contraction", &summary);
    r.set("target_means", run.pair.target());
    r.set("final_distance", run.trace.last().map(|t| t.distance));
    if let Some(out) = cfg.out.clone() {
        r.write(out.clone(), |w| run.write_trace_csv(w))?;
        let pair = &run.pair;
        r.write(companion(&out, "pools", "csv"), |w| {
            let mut w = csv::Writer::from_writer(w);
            w.write_record(["x", "y"])?;
            for (x, y) in pair.x().iter().zip(pair.y()) {
                w.write_record([format!("{x:e}"), format!("{y:e}")])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    r.config = cfg;
    Ok(r)
}

pub fn moments(mut cfg: Settings) -> anyhow::Result<Report> {
    let mut r = Report::new("moments");
    let system: System = cfg.system()?.into();
    let spec = cfg.large_spec()?;
    let order = positive("max-order", *cfg.max_order.get_or_insert(20))?;
    let composite_init = match cfg.init {
        Some(_) => Some(cfg.composition()?),
        None => None,
    };
    let table = match system {
        System::Ct => ct_moments_exact(&spec, order)?,
        System::Dt => dt_moments_direct(&spec, order)?,
    };
    match system {
        System::Ct => {
            let (bx, by) = spec.ct_elementary_means();
            let ok = table.x.get_exact(1) == Some(&bx) && table.y.get_exact(1) == Some(&by);
            r.check(
                "first moments equal (b/S, -c/S)",
                ok,
                format!("x1 {} y1 {}", fmt_exact(&bx), fmt_exact(&by)),
            );
        }
        System::Dt => {
            let via = dt_moments_via_connexion(&ct_moments_exact(&spec, order)?, Composition::new(1, 0)?)?;
            let mut worst: f64 = 0.0;
            for p in 0..=order {
                for (a, b) in [(via.x.get_f64(p), table.x.get_f64(p)), (via.y.get_f64(p), table.y.get_f64(p))] {
                    worst = worst.max(((a - b) / b).abs());
                }
            }
            r.check(
                "direct and connexion routes agree",
                worst <= DUAL_ROUTE_REL,
                format!("max relative gap {worst:.2e} (limit {DUAL_ROUTE_REL:.0e})"),
            );
        }
    }
    r.check("even moments are positive", table.nondegenerate(), String::new());
    r.results = table.to_json();
    r.set("odd_signs_x", odd_signs(&table.x));
    r.set("odd_signs_y", odd_signs(&table.y));
    if order >= 2 {
        r.set("growth", growth_diagnostics(&table)?);
    }
    let composite = composite_init.map(|init| composite_moments(&table, init)).transpose()?;
    if let Some(c) = &composite {
        r.set("composite", json!({ "init": c.init, "values": seq_json(&c.values) }));
    }
    if let Some(out) = cfg.out.clone() {
        r.write(out.clone(), |w| table.write_csv(w))?;
        if let Some(c) = &composite {
            r.write(companion(&out, "composite", "csv"), |w| {
                let mut w = csv::Writer::from_writer(w);
                w.write_record(["p", "exact", "value"])?;
                for p in 0..c.values.len() {
                    let exact = c.values.get_exact(p).map(fmt_exact).unwrap_or_default();
                    w.write_record([p.to_string(), exact, format!("{:e}", c.values.get_f64(p))])?;
                }
                w.flush()?;
                Ok(())
            })?;
        }
    }
    r.config = cfg;
    Ok(r)
}

pub fn phi_check(mut cfg: Settings) -> anyhow::Result<Report> {
    let mut r = Report::new("phi-check");
    let balance = match (cfg.balance, &cfg.matrix) {
        (Some(s), _) => s,
        (None, Some(_)) => cfg.spec()?.balance(),
        (None, None) => bail!("--S or --matrix is required"),
    };
    cfg.balance = Some(positive("S", balance)?);
    let pmax = *cfg.pmax.get_or_insert(60);
    if pmax < 2 {
        bail!("--pmax must be at least 2");
    }
    let rows: Vec<(usize, f64, f64)> = (2..=pmax).map(|p| (p, phi_capital(p, balance), phi_bound(p, balance))).collect();
    let violations: Vec<usize> = rows.iter().filter(|(_, v, b)| v > b).map(|r| r.0).collect();
    let worst = rows.iter().map(|(_, v, b)| v / b).fold(0.0, f64::max);
    r.check(
        "Phi(p) stays below (1 + 8 ln(p + 2))^(S + 1)",
        violations.is_empty(),
        format!("max ratio {worst:.3e}, violations at p = {violations:?}"),
    );
    r.set("max_ratio", worst);
    r.set("phi_2", rows[0].1);
    if let Some(out) = cfg.out.clone() {
        r.write(out, |w| {
            let mut w = csv::Writer::from_writer(w);
            w.write_record(["p", "phi", "bound", "ratio"])?;
            for (p, v, b) in &rows {
                w.write_record([p.to_string(), format!("{v:e}"), format!("{b:e}"), format!("{:e}", v / b)])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    r.config = cfg;
    Ok(r)
}

fn diagonal_inputs(cfg: &Settings) -> anyhow::Result<(u64, Vec<u64>)> {
    let Some(balance) = cfg.balance else { bail!("--S is required") };
    let Some(init) = cfg.init.clone() else { bail!("--init is required (one count per color)") };
    if init.len() < 2 {
        bail!("--init needs at least two colors");
    }
    Ok((positive("S", balance)?, init))
}

pub fn dirichlet_check(mut cfg: Settings) -> anyhow::Result<Report> {
    let mut r = Report::new("dirichlet-check");
    let (balance, init) = diagonal_inputs(&cfg)?;
    let d = init.len();
    let steps = positive("steps", *cfg.steps.get_or_insert(DEFAULT_HORIZON))?;
    let samples = positive("samples", *cfg.samples.get_or_insert(100_000))?;
    let seed = cfg.seed()?;
    let rows = simulate_diagonal_urn(d, balance, &init, steps, samples, seed)?;
    let params = DirichletParams::from_urn(balance, &init)?;
    let limit = coordinate_checks(&params, &rows)?;
    // exact finite-n moments of P_k / (n S) from E Gamma_p
    let n = steps as f64;
    let mut worst: f64 = 0.0;
    let mut coords = Vec::new();
    for (k, c) in limit.iter().enumerate() {
        let mut unit = vec![0u32; d];
        unit[k] = 1;
        let g1 = to_f64(&gamma_p_expectation(d, balance, &init, steps, &unit)?);
        unit[k] = 2;
        let g2 = to_f64(&gamma_p_expectation(d, balance, &init, steps, &unit)?);
        let (m1, m2) = (g1 / n, (g2 - g1) / (n * n));
        let (z1, z2) = (z((c.mean, c.mean_se), m1), z((c.second, c.second_se), m2));
        worst = worst.max(z1.abs()).max(z2.abs());
        coords.push(json!({
            "coordinate": k, "mean": c.mean, "mean_exact": m1, "mean_limit": c.mean_expected,
            "second": c.second, "second_exact": m2, "second_limit": c.second_expected, "z_mean": z1, "z_second": z2,
        }));
    }
    r.check(
        "coordinate moments match the exact finite-n values",
        worst <= Z_BAND,
        format!("max |z| {worst:.2} (band {Z_BAND})"),
    );
    r.set("nu", params.nu().iter().map(fmt_exact).collect::<Vec<_>>());
    r.set("coordinates", coords);
    if let Some(out) = cfg.out.clone() {
        r.write(out, |w| write_simplex_csv(&rows, w))?;
    }
    r.config = cfg;
    Ok(r)
}

pub fn gamma_p(mut cfg: Settings) -> anyhow::Result<Report> {
    let mut r = Report::new("gamma-p");
    let (balance, init) = diagonal_inputs(&cfg)?;
    let d = init.len();
    let Some(steps) = cfg.steps else { bail!("--steps is required") };
    let Some(powers) = cfg.powers.clone() else { bail!("--powers is required") };
    if powers.len() != d {
        bail!("--powers needs {d} entries to match --init, got {}", powers.len());
    }
    let exact = gamma_p_expectation(d, balance, &init, steps, &powers)?;
    let total_p: u32 = powers.iter().sum();
    let limit = gamma_p_limit(balance, &init, &powers);
    let scaled = to_f64(&exact) / (steps as f64).powi(total_p as i32);
    r.set("expectation", json!({ "exact": fmt_exact(&exact), "value": to_f64(&exact) }));
    r.set("scaled", scaled);
    r.set("limit", limit);
    r.set("scaled_over_limit", scaled / limit);
    if let Some(seed) = cfg.seed {
        let samples = positive("samples", *cfg.samples.get_or_insert(100_000))?;
        let values = map_indexed(samples, |i| {
            let mut rng = stream(seed, domain::DIAGONAL_URN, i as u64);
            let counts = run_diagonal_urn(balance, &init, steps, &mut rng);
            counts.iter().zip(&powers).fold(1.0, |acc, (&c, &p)| {
                let x = c as f64 / balance as f64;
                (0..p).fold(acc, |a, j| a * (x + j as f64))
            })
        });
        let est = raw_moment(&values, 1);
        let zv = z(est, to_f64(&exact));
        r.check(
            "simulated mean matches the exact expectation",
            zv.abs() <= Z_BAND,
            format!("estimate {:.6e} +- {:.2e}, z {zv:.2} (band {Z_BAND})", est.0, est.1),
        );
    }
    r.config = cfg;
    Ok(r)
}

fn stochastic_w(cfg: &mut Settings) -> anyhow::Result<SampleSet> {
    let system = *cfg.system.get_or_insert(SystemArg::Dt);
    let (spec, init, steps, samples, seed, estimator) = mc_common(cfg)?;
    Ok(draw_w(&spec, system, init, steps, samples, seed, estimator)?.0)
}

pub fn density(mut cfg: Settings) -> anyhow::Result<Report> {
    let mut r = Report::new("density");
    let width = positive("width", *cfg.width.get_or_insert(8.0))?;
    let points = positive("points", *cfg.points.get_or_insert(512))?;
    let w = stochastic_w(&mut cfg)?;
    let h = silverman_bandwidth(&w)?;
    let grid = density_grid(&w, width, points);
    let dens = kde_density(&w, h, &grid)?;
    let mass = trapezoid(&grid, &dens);
    r.check(
        "density integrates to one over the grid",
        (0.95..=1.001).contains(&mass),
        format!("mass {mass:.5}"),
    );
    r.set("bandwidth", h);
    r.set("mass", mass);
    r.set("support", support_span(&w)?);
    if let Some(out) = cfg.out.clone() {
        r.write(out, |o| write_density_csv(&grid, &dens, o))?;
    }
    r.config = cfg;
    Ok(r)
}

pub fn cf_decay(mut cfg: Settings) -> anyhow::Result<Report> {
    let mut r = Report::new("cf-decay");
    let t_max = positive("t-max", *cfg.t_max.get_or_insert(20.0))?;
    let points = *cfg.points.get_or_insert(201);
    if points < 2 {
        bail!("--points must be at least 2");
    }
    if cfg.samples.is_some_and(|n| n < MIN_CF_SAMPLES) {
        bail!("--samples must be at least {MIN_CF_SAMPLES} for the characteristic function");
    }
    let w = stochastic_w(&mut cfg)?;
    let cf = empirical_cf(w.values(), &uniform_grid(t_max, points))?;
    let at_zero = cf.modulus[0];
    let max = cf.modulus.iter().copied().fold(0.0, f64::max);
    r.check(
        "modulus is one at zero and at most one",
        (at_zero - 1.0).abs() <= 1e-9 && max <= 1.0 + 1e-9,
        format!("|cf(0)| {at_zero}, max {max}"),
    );
    let below = cf.t.iter().zip(&cf.modulus).find(|(_, m)| **m < cf.noise_floor).map(|(t, _)| *t);
    r.set("noise_floor", cf.noise_floor);
    r.set("first_t_below_floor", below);
    r.set("modulus_at_t_max", cf.modulus.last());
    if let Some(out) = cfg.out.clone() {
        r.write(out, |o| cf.write_csv(o))?;
    }
    r.config = cfg;
    Ok(r)
}
