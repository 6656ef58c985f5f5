//! One runner per experiment. Each returns its metrics, a CSV table and a
//! free-form JSON block; `main` writes them out and applies the acceptance
//! bounds.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use radial_chirp::chirp::{build_decomposition, choose_truncation, reconstruct, ChirpDecomposition};
use radial_chirp::cutoff::{ChirpCutoff, DyadicBump};
use radial_chirp::grid::GridFunction;
use radial_chirp::littlewood_paley::{build_partition, hl_maximal, lp_project, shell_energies};
use radial_chirp::operator::{apply_direct, apply_fast, norm_probe, relative_l2_error, Applier, ProbeConfig};
use radial_chirp::sobolev::{condition_check, radial_integer_sobolev, ConditionConfig, IntegerSobolevConfig};
use radial_chirp::spectral::{ell_q_norm, fit_decay_exponent, fourier_coefficients, tail_bound, FitConfig, QuadratureRule};
use radial_chirp::symbols::RadialSymbolSpec;
use radial_chirp::trace::{extract_trace, Extension};

use crate::config::{ApplierKind, ConfigError, Experiment, ExperimentConfig, GridConfig};

pub struct Outcome {
    pub metrics: BTreeMap<String, f64>,
    pub details: Value,
    pub table: Vec<u8>,
    /// Human-readable lines for stdout.
    pub lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { metrics: BTreeMap::new(), details: Value::Null, table: Vec::new(), lines: Vec::new() }
    }

    fn metric(&mut self, name: &str, v: f64) {
        self.metrics.insert(name.to_string(), v);
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.experiment.expect("resolved config") {
        Experiment::DecayTable => decay_table(cfg),
        Experiment::Reconstruct => reconstruct_points(cfg),
        Experiment::OracleCheck => oracle_check(cfg),
        Experiment::ConditionCheck => condition(cfg),
        Experiment::NormProbe => probe(cfg),
        Experiment::LpDemo => lp_demo(cfg),
        Experiment::Sobolev62 => sobolev_62(cfg),
    }
}

fn rule(cfg: &ExperimentConfig) -> QuadratureRule {
    QuadratureRule { exec: cfg.exec(), ..Default::default() }
}

/// Decomposition at the configured `K`, or the smallest ladder `K` meeting
/// `eps_tail`.
fn decomposition(cfg: &ExperimentConfig, spec: &RadialSymbolSpec) -> Result<ChirpDecomposition> {
    let cutoff = ChirpCutoff { c_sup: cfg.c_sup.unwrap_or(1.2) };
    Ok(match (cfg.k_max, cfg.eps_tail) {
        (Some(k), _) => build_decomposition(spec, k, cutoff, &rule(cfg))?,
        (None, Some(eps)) => choose_truncation(spec, eps, cutoff, &rule(cfg))?,
        (None, None) => return Err(ConfigError("one of `K` or `eps_tail` is required".into()).into()),
    })
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::Writer::from_writer(buf)
}

fn decay_table(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let k_max = cfg.k_max.expect("resolved");
    let (k_lo, k_hi) = cfg.k_range.expect("resolved");
    let table = fourier_coefficients(&extract_trace(&spec, Extension::Even), k_max, &rule(cfg))?;
    let fit = fit_decay_exponent(&table, k_lo, k_hi, &FitConfig::default())?;
    let tail = tail_bound(&table, k_max);
    let l1 = ell_q_norm(&table, 1.0)?;
    let mut out = Outcome::new();
    {
        let mut w = csv_writer(&mut out.table);
        w.write_record(["k", "abs", "quadrature_error"])?;
        for k in 0..=k_max {
            w.write_record([k.to_string(), table.get(k as i64).norm().to_string(), table.error_at(k).to_string()])?;
        }
        w.flush()?;
    }
    out.metric("alpha", fit.alpha);
    out.metric("prefactor", fit.prefactor);
    out.metric("residual", fit.residual);
    out.metric("ell1_partial", l1.partial_sum);
    out.metric("tail", tail.total());
    out.metric("quadrature_error", table.meta().map_or(0.0, |m| m.max_error));
    out.details = json!({ "fit": fit, "tail": tail, "ell1": l1 });
    out.lines.push(format!("fitted alpha = {:.4} over k in [{k_lo}, {k_hi}] (residual {:.2e})", fit.alpha, fit.residual));
    Ok(out)
}

fn reconstruct_points(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let d = decomposition(cfg, &spec)?;
    let (m, n, r) = (spec.m(), spec.n(), spec.support_radius());
    let c_sup = d.cutoff().c_sup;
    let total = cfg.points.expect("resolved");
    // three regions: inside the ball, outside it but inside the cutoff
    // product support, outside everything
    let quota = total.div_ceil(3);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let mut points = Vec::with_capacity(total);
    let mut regions = Vec::with_capacity(total);
    let mut counts = [0usize; 3];
    let mut draws = 0usize;
    while points.len() < total && draws < 1000 * total.max(1) {
        draws += 1;
        let p: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.5..1.5) * r).collect()).collect();
        let norms: Vec<f64> = p.iter().map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        let kind = if norms.iter().map(|v| v * v).sum::<f64>() < r * r {
            0
        } else if norms.iter().all(|&v| v < c_sup * r) {
            1
        } else {
            2
        };
        if counts[kind] >= quota {
            continue;
        }
        counts[kind] += 1;
        points.push(p);
        regions.push(kind);
    }
    let rec = reconstruct(&d, &points, cfg.exec())?;
    let names = ["inside", "outside_ball", "outside_cutoff"];
    let mut out = Outcome::new();
    {
        let mut w = csv_writer(&mut out.table);
        w.write_record(["index", "region", "symbol", "re", "im", "error"])?;
        for (i, p) in points.iter().enumerate() {
            let flat: Vec<f64> = p.iter().flatten().copied().collect();
            let v = rec.values[i];
            w.write_record([
                i.to_string(),
                names[regions[i]].to_string(),
                spec.eval_point(&flat).to_string(),
                v.re.to_string(),
                v.im.to_string(),
                rec.errors[i].to_string(),
            ])?;
        }
        w.flush()?;
    }
    out.metric("K", d.k_max() as f64);
    out.metric("tail", rec.tail);
    out.metric("quadrature_error", rec.quadrature_error);
    out.metric("sup_error", rec.sup_error);
    for (kind, name) in names.iter().enumerate() {
        let sup = (0..points.len()).filter(|&i| regions[i] == kind).map(|i| rec.errors[i]).fold(0.0, f64::max);
        out.metric(&format!("sup_error_{name}"), sup);
        out.metric(&format!("points_{name}"), counts[kind] as f64);
    }
    out.metric("excess_over_tail", rec.sup_error - rec.tail);
    out.details = json!({ "K": d.k_max(), "c_sup": c_sup, "tail_bound": d.tail() });
    out.lines.push(format!(
        "K = {}, tail = {:.3e}, sup error = {:.3e} over {} points",
        d.k_max(),
        rec.tail,
        rec.sup_error,
        points.len()
    ));
    Ok(out)
}

fn random_inputs(grid: &GridConfig, count: usize, seed: u64) -> Result<Vec<GridFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| GridFunction::random_band_limited(grid.n, grid.size, grid.period, grid.band, &mut rng))
        .collect::<radial_chirp::error::Result<_>>()?)
}

fn write_grid_pair(out: &mut Vec<u8>, a: &GridFunction, b: &GridFunction) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["index", "direct_re", "direct_im", "fast_re", "fast_im", "abs_diff"])?;
    for (i, (x, y)) in a.samples().iter().zip(b.samples()).enumerate() {
        w.write_record([
            i.to_string(),
            x.re.to_string(),
            x.im.to_string(),
            y.re.to_string(),
            y.im.to_string(),
            (x - y).norm().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn oracle_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let fs = match &cfg.fixture {
        Some(fx) => fx
            .inputs
            .iter()
            .map(|p| GridFunction::load(p).with_context(|| format!("loading fixture {}", p.display())))
            .collect::<Result<Vec<_>>>()?,
        None => random_inputs(cfg.grid.as_ref().expect("resolved"), spec.m(), cfg.seed())?,
    };
    let direct = apply_direct(&spec, &fs, cfg.direct_budget.expect("resolved") as u128)?;
    let mut out = Outcome::new();
    if let Some(path) = cfg.fixture.as_ref().and_then(|fx| fx.expected.as_ref()) {
        let stored = GridFunction::load(path).with_context(|| format!("loading fixture {}", path.display()))?;
        out.metric("fixture_error", relative_l2_error(&direct, &stored)?);
    }
    let d = decomposition(cfg, &spec)?;
    let fast = apply_fast(&d, &fs, cfg.exec())?;
    let err = relative_l2_error(&fast, &direct)?;
    write_grid_pair(&mut out.table, &direct, &fast)?;
    let tol = cfg.tolerance.expect("resolved");
    out.metric("relative_error", err);
    out.metric("K", d.k_max() as f64);
    out.metric("tail", d.tail().total());
    out.details = json!({ "K": d.k_max(), "grid": { "n": fs[0].n(), "N": fs[0].size(), "L": fs[0].period() } });
    let verdict = if err <= tol { "PASS" } else { "FAIL" };
    out.lines.push(format!("oracle_check: {verdict} relative L2 error {err:.3e} (tolerance {tol:.1e}, K = {})", d.k_max()));
    out.metric("within_tolerance", if err <= tol { 1.0 } else { 0.0 });
    Ok(out)
}

fn condition(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let cc = ConditionConfig { resolution: cfg.resolution.expect("resolved"), exec: cfg.exec(), ..Default::default() };
    let bump = DyadicBump::new(cfg.variant.expect("resolved"));
    let rep = condition_check(&spec, cfg.eps.expect("resolved"), cfg.j_range, bump, &cc)?;
    let mut out = Outcome::new();
    rep.write_csv(&mut out.table)?;
    out.metric("supremum", rep.supremum);
    out.metric("finite", if rep.finite { 1.0 } else { 0.0 });
    if let Some((lo, hi)) = rep.method_equivalence_ratio {
        out.metric("equivalence_min", lo);
        out.metric("equivalence_max", hi);
    }
    out.lines.push(format!("supremum = {:.6} over {} blocks, finite = {}", rep.supremum, rep.per_j.len(), rep.finite));
    for d in &rep.diagnostics {
        out.lines.push(format!("note: {d}"));
    }
    out.details = serde_json::to_value(&rep)?;
    Ok(out)
}

fn probe(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let grid = cfg.grid.expect("resolved");
    if grid.n != spec.n() {
        return Err(ConfigError(format!("grid.n = {} but the symbol has n = {}", grid.n, spec.n())).into());
    }
    let pc = ProbeConfig { size: grid.size, period: grid.period, band: grid.band, seed: cfg.seed() };
    let trials = cfg.trials.expect("resolved");
    let decomp;
    let applier = match cfg.applier.expect("resolved") {
        ApplierKind::Direct => Applier::Direct { spec: &spec, budget: cfg.direct_budget.expect("resolved") as u128 },
        ApplierKind::Fast => {
            decomp = decomposition(cfg, &spec)?;
            Applier::Fast { decomp: &decomp }
        }
    };
    let stats = norm_probe(applier, trials, &pc, cfg.exec())?;
    let mut out = Outcome::new();
    {
        let mut w = csv_writer(&mut out.table);
        w.write_record(["trial", "ratio"])?;
        for (t, r) in stats.ratios.iter().enumerate() {
            w.write_record([t.to_string(), r.to_string()])?;
        }
        w.flush()?;
    }
    out.metric("max", stats.max);
    out.metric("median", stats.median);
    out.metric("q1", stats.q1);
    out.metric("q3", stats.q3);
    if spec.m() == 2 {
        // the l^1 norm of the trace coefficients bounds the bilinear ratio
        let table = fourier_coefficients(&extract_trace(&spec, Extension::Even), 4096, &rule(cfg))?;
        let l1 = ell_q_norm(&table, 1.0)?;
        out.metric("ell1", l1.norm());
        out.metric("max_over_ell1", stats.max / l1.norm());
    }
    out.lines.push(format!("{trials} trials: max {:.5}, median {:.5}", stats.max, stats.median));
    out.details = json!({ "q1": stats.q1, "q3": stats.q3 });
    Ok(out)
}

fn lp_demo(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = cfg.grid.expect("resolved");
    let p = build_partition(cfg.variant.expect("resolved"))?;
    let f = random_inputs(&grid, 1, cfg.seed())?.remove(0);
    let total = f.norm_l2().powi(2);
    let shells = shell_energies(&f, &p)?;
    let mut sum = GridFunction::zeros(f.n(), f.size(), f.period())?;
    for &(j, _) in &shells {
        sum = sum.add(&lp_project(&f, j, &p)?)?;
    }
    let mean = f.samples().iter().sum::<Complex64>() / f.len() as f64;
    let mean_free = GridFunction::from_samples(f.n(), f.size(), f.period(), f.samples().iter().map(|v| v - mean).collect())?;
    let reassembly = sum.sub(&mean_free)?.sup_norm();
    let partition_error = (0..=10_000)
        .map(|i| (p.bump.partition_sum((-8.0 + 16.0 * i as f64 / 10_000.0).exp2()) - 1.0).abs())
        .fold(0.0, f64::max);
    let maximal = hl_maximal(&f).norm_l2() / f.norm_l2();
    let energy: f64 = shells.iter().map(|s| s.1).sum();
    let mut out = Outcome::new();
    {
        let mut w = csv_writer(&mut out.table);
        w.write_record(["j", "energy", "fraction"])?;
        for (j, e) in &shells {
            w.write_record([j.to_string(), e.to_string(), (e / total).to_string()])?;
        }
        w.flush()?;
    }
    out.metric("energy_ratio", energy / total);
    out.metric("reassembly_error", reassembly);
    out.metric("partition_error", partition_error);
    out.metric("maximal_ratio", maximal);
    out.lines.push(format!(
        "{} shells, sum_j ||D_j f||^2 / ||f||^2 = {:.4}, reassembly error {reassembly:.2e}",
        shells.len(),
        energy / total
    ));
    Ok(out)
}

fn sobolev_62(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let order = cfg.order.expect("resolved");
    let (lo, hi) = cfg.scales.expect("resolved");
    let sc = IntegerSobolevConfig { intervals: cfg.intervals.expect("resolved"), ..Default::default() };
    let d = spec.m() * spec.n();
    let profile = |t: f64| spec.profile(t);
    let mut out = Outcome::new();
    let mut reports = Vec::new();
    {
        let mut w = csv_writer(&mut out.table);
        let mut header = vec!["scale".to_string()];
        header.extend((0..=order).map(|i| format!("term_{i}")));
        header.extend(["total".to_string(), "change".to_string()]);
        w.write_record(&header)?;
        for k in lo..=hi {
            let rep = radial_integer_sobolev(&profile, d, order, k, &sc)?;
            let mut row = vec![k.to_string()];
            row.extend(rep.terms.iter().map(|t| t.to_string()));
            row.extend([rep.total.to_string(), rep.change.to_string()]);
            w.write_record(&row)?;
            reports.push((k, rep));
        }
        w.flush()?;
    }
    let sup = reports.iter().map(|r| r.1.total).fold(0.0, f64::max);
    let change = reports.iter().map(|r| r.1.change).fold(0.0, f64::max);
    out.metric("supremum", sup);
    out.metric("max_change", change);
    out.lines.push(format!("sup over scales {lo}..={hi} = {sup:.6} (d = {d}, order {order}, max change {change:.2e})"));
    out.details = json!({ "d": d, "reports": reports.iter().map(|(k, r)| json!({ "scale": k, "report": r })).collect::<Vec<_>>() });
    Ok(out)
}
