//! The experiment commands behind the CLI.

use crate::config::ExperimentConfig;
use crate::io::{sample_rows, write_csv, write_json, PointCloud};
use crate::record::{RunRecord, ThresholdCheck};
use crate::reference::{population_body, population_quantiles, uniform_in_polytope};
use crate::wasserstein::wasserstein2_empirical;
use anyhow::{bail, Context, Result};
use floatbody::extension::{extension_audit, shipped_instances};
use floatbody::geometry::{project, sphere_net, DirectionNet};
use floatbody::langevin::{noisy_oracle_params, LangevinConfig};
use floatbody::mechanism::{audit_grid, privacy_ratio_audit, HolderQuerySpec, MechanismParams, RegionProbe};
use floatbody::num::{derive_seed, dist2};
use floatbody::pipeline::{
    private_project, private_quantiles, private_sample_floating_body, private_steiner, BatchPlan, PrivateSetup,
};
use floatbody::quantile::Sample;
use floatbody::typical::{check_typical_with_body, TypicalSetConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Gen,
    Quantiles,
    Steiner,
    Project,
    Sample,
    Typical,
    Audit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Quantiles => "quantiles",
            Command::Steiner => "steiner",
            Command::Project => "project",
            Command::Sample => "sample",
            Command::Typical => "typical",
            Command::Audit => "audit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub threads: usize,
    pub format: Format,
    pub timing: bool,
}

/// Stream 0 feeds data generation; trial `i` uses stream `i + 1`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, trial as u64 + 1))
}

/// Runs `count` trials on up to `threads` workers; results stay in trial order.
pub fn run_trials<T, F>(seed: u64, count: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    let threads = threads.clamp(1, count.max(1));
    if threads == 1 {
        return (0..count).map(|i| f(i, &mut trial_rng(seed, i))).collect();
    }
    let mut slots: Vec<Option<Result<T>>> = (0..count).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let f = &f;
                s.spawn(move || {
                    (w..count).step_by(threads).map(|i| (i, f(i, &mut trial_rng(seed, i)))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every trial ran")).collect()
}

pub fn load_data(cfg: &ExperimentConfig) -> Result<Sample> {
    match &cfg.data {
        Some(path) => {
            let x = crate::io::read_sample(path)?;
            if x.dim() != cfg.distribution.dim {
                bail!("{} has {} columns, config expects {}", path.display(), x.dim(), cfg.distribution.dim);
            }
            Ok(x)
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0));
            Ok(cfg.distribution.sample(cfg.n, &mut rng))
        }
    }
}

fn net(cfg: &ExperimentConfig) -> Result<DirectionNet> {
    Ok(sphere_net(cfg.distribution.dim, cfg.net.clone())?)
}

fn setup(cfg: &ExperimentConfig, n: usize) -> Result<PrivateSetup> {
    Ok(PrivateSetup::new(cfg.q, cfg.epsilon, cfg.params(n)?, net(cfg)?, cfg.beta, cfg.constants.c_w)?)
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn metrics(values: &[(&str, f64)]) -> BTreeMap<String, f64> {
    values.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn fraction(flags: impl Iterator<Item = bool>) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for f in flags {
        total += 1;
        hit += f as usize;
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

/// Runs one command and writes its report files into `opts.out`.
pub fn run(cmd: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunRecord> {
    let started = Instant::now();
    let mut rec = RunRecord::new(cmd.name(), cfg.digest(), cfg.seed, opts.threads);
    std::fs::create_dir_all(&opts.out).with_context(|| format!("creating {}", opts.out.display()))?;
    match cmd {
        Command::Gen => gen(cfg, opts, &mut rec)?,
        Command::Quantiles => quantiles(cfg, opts, &mut rec)?,
        Command::Steiner => steiner(cfg, opts, &mut rec)?,
        Command::Project => projection(cfg, opts, &mut rec)?,
        Command::Sample => sample(cfg, opts, &mut rec)?,
        Command::Typical => typical(cfg, &mut rec)?,
        Command::Audit => audit(cfg, opts, &mut rec)?,
    }
    rec.finish();
    if opts.timing {
        rec.wall_clock_secs = Some(started.elapsed().as_secs_f64());
    }
    if opts.format.json() {
        write_json(&opts.out.join("record.json"), &rec)?;
    }
    if opts.format.csv() {
        rec.write_trials_csv(std::fs::File::create(opts.out.join("trials.csv"))?)?;
        if !rec.outputs.is_empty() {
            write_csv(std::fs::File::create(opts.out.join("outputs.csv"))?, &rec.outputs)?;
        }
    }
    Ok(rec)
}

fn gen(cfg: &ExperimentConfig, opts: &RunOptions, rec: &mut RunRecord) -> Result<()> {
    let x = load_data(cfg)?;
    let rows = sample_rows(&x);
    if opts.format.csv() {
        write_csv(std::fs::File::create(opts.out.join("data.csv"))?, &rows)?;
    }
    if opts.format.json() {
        write_json(&opts.out.join("data.json"), &PointCloud::new(rows))?;
    }
    rec.metrics = metrics(&[("n", x.len() as f64), ("d", x.dim() as f64)]);
    Ok(())
}

fn quantiles(cfg: &ExperimentConfig, opts: &RunOptions, rec: &mut RunRecord) -> Result<()> {
    let x = load_data(cfg)?;
    let setup = setup(cfg, x.len())?;
    let truth = population_quantiles(&cfg.distribution, &setup.net, cfg.q)?;
    let runs = run_trials(cfg.seed, cfg.trials, opts.threads, |_, rng| Ok(private_quantiles(&x, &setup, rng)?))?;
    for r in &runs {
        rec.trials.push(metrics(&[
            ("linf_to_empirical", linf(&r.value, &r.center)),
            ("linf_to_population", linf(&r.value, &truth)),
        ]));
        rec.outputs.push(r.value.clone());
    }
    let fail = fraction(runs.iter().map(|r| linf(&r.value, &truth) > cfg.alpha));
    rec.metrics = metrics(&[("failure_rate", fail), ("n", x.len() as f64), ("w", setup.w)]);
    rec.check(ThresholdCheck::at_most("failure_rate", fail, cfg.beta));
    rec.ledger = Some(single_ledger(&runs[0].charge));
    Ok(())
}

fn single_ledger(c: &floatbody::pipeline::Charge) -> floatbody::pipeline::PrivacyLedger {
    let mut l = floatbody::pipeline::PrivacyLedger::new();
    l.open_batch(0, c.rows).expect("fresh ledger");
    l.record(c.clone());
    l
}

fn steiner(cfg: &ExperimentConfig, opts: &RunOptions, rec: &mut RunRecord) -> Result<()> {
    let x = load_data(cfg)?;
    let setup = setup(cfg, x.len())?;
    let target = setup.params.center.clone();
    let runs = run_trials(cfg.seed, cfg.trials, opts.threads, |_, rng| {
        Ok(private_steiner(&x, &setup, cfg.steiner_directions, rng)?)
    })?;
    let body = floatbody::quantile::floating_body(&x, cfg.q, &setup.net)?;
    for r in &runs {
        rec.trials.push(metrics(&[
            ("error", dist2(&r.value, &target)),
            ("noise", dist2(&r.value, &r.center)),
            ("exited_body", (!body.body.contains(&r.value, 1e-9)) as u8 as f64),
        ]));
        rec.outputs.push(r.value.clone());
    }
    let fail = fraction(runs.iter().map(|r| dist2(&r.value, &target) > cfg.alpha));
    let exit = fraction(runs.iter().map(|r| !body.body.contains(&r.value, 1e-9)));
    rec.metrics = metrics(&[("failure_rate", fail), ("exit_rate", exit), ("n", x.len() as f64)]);
    rec.check(ThresholdCheck::at_most("failure_rate", fail, cfg.beta));
    rec.ledger = Some(single_ledger(&runs[0].charge));
    Ok(())
}

fn projection(cfg: &ExperimentConfig, opts: &RunOptions, rec: &mut RunRecord) -> Result<()> {
    let point = cfg.point.clone().context("the project command needs `point` in the config")?;
    let x = load_data(cfg)?;
    let setup = setup(cfg, x.len())?;
    let reference = population_body(&cfg.distribution, &setup.net, cfg.q)?;
    let target = project(&reference.body, &point)?.point;
    let runs = run_trials(cfg.seed, cfg.trials, opts.threads, |_, rng| Ok(private_project(&x, &setup, &point, rng)?))?;
    for r in &runs {
        rec.trials.push(metrics(&[("error", dist2(&r.value, &target)), ("noise", dist2(&r.value, &r.center))]));
        rec.outputs.push(r.value.clone());
    }
    let fail = fraction(runs.iter().map(|r| dist2(&r.value, &target) > cfg.alpha));
    rec.metrics = metrics(&[("failure_rate", fail), ("n", x.len() as f64)]);
    rec.check(ThresholdCheck::at_most("failure_rate", fail, cfg.beta));
    rec.ledger = Some(single_ledger(&runs[0].charge));
    Ok(())
}

/// Langevin settings from the config, calibrated from `alpha` where not given.
pub fn langevin_config(cfg: &ExperimentConfig, n: usize) -> Result<LangevinConfig> {
    let p = cfg.params(n)?;
    let d = cfg.distribution.dim;
    let cal = LangevinConfig::calibrated(d, cfg.alpha, p.r_min, p.r_max, cfg.constants.c_eta, cfg.constants.c_k)?;
    let eta = cfg.langevin.eta.unwrap_or(cal.eta);
    let k = cfg.langevin.k.unwrap_or(cal.k);
    let mut lc = LangevinConfig::explicit(d, eta, k, cfg.alpha)?;
    lc.steiner_directions = cfg.steiner_directions;
    Ok(lc)
}

fn sample(cfg: &ExperimentConfig, opts: &RunOptions, rec: &mut RunRecord) -> Result<()> {
    let x = load_data(cfg)?;
    let setup = setup(cfg, x.len())?;
    let lc = langevin_config(cfg, x.len())?;
    let plan = match cfg.langevin.rows_per_batch {
        Some(rows_per_batch) => BatchPlan::Explicit { rows_per_batch },
        None => {
            let b = noisy_oracle_params(cfg.alpha, lc.k, &setup.params)
                .context("the strict batch plan needs k >= d; set langevin.rows_per_batch instead")?;
            BatchPlan::Strict { alpha_tilde: b.alpha_tilde, beta: b.beta, constants: cfg.constants.sample_size }
        }
    };
    let chains = cfg.langevin.chains;
    let runs = run_trials(cfg.seed, chains, opts.threads, |_, rng| {
        Ok(private_sample_floating_body(&x, &setup, &lc, &plan, rng)?)
    })?;
    let outputs: Vec<Vec<f64>> = runs.iter().map(|r| r.point.clone()).collect();
    let reference = population_body(&cfg.distribution, &setup.net, cfg.q)?;
    let mut rrng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, u64::MAX));
    let uniform = uniform_in_polytope(&reference.body, chains, &mut rrng)?;
    let w2 = wasserstein2_empirical(&outputs, &uniform)?;
    let score = w2 * w2 / cfg.distribution.dim as f64;
    for o in &outputs {
        rec.trials.push(metrics(&[("inside_reference", reference.body.contains(o, 1e-9) as u8 as f64)]));
    }
    rec.outputs = outputs;
    rec.metrics = metrics(&[
        ("w2_squared_over_d", score),
        ("k", lc.k as f64),
        ("eta", lc.eta),
        ("rows_per_batch", runs[0].rows_per_batch as f64),
        ("total_epsilon", runs[0].ledger.total_epsilon()),
        ("naive_epsilon_sum", runs[0].ledger.naive_sum()),
    ]);
    rec.check(ThresholdCheck::at_most("w2_squared_over_d", score, 9.0 * cfg.alpha));
    if runs[0].steiner_only {
        rec.notes.push("Steiner-only degenerate: k = 0, output is the private Steiner point".into());
    }
    rec.notes.push("rows are split into k + 1 disjoint batches, one per oracle call; total epsilon uses parallel composition".into());
    rec.notes.push("each chain is an independent release on the same rows; the ledger is per chain".into());
    rec.ledger = Some(runs[0].ledger.clone());
    Ok(())
}

fn typical(cfg: &ExperimentConfig, rec: &mut RunRecord) -> Result<()> {
    let x = load_data(cfg)?;
    let setup = setup(cfg, x.len())?;
    let tc = TypicalSetConfig::new(setup.w, setup.params.clone(), x.len())?;
    let (report, _) = check_typical_with_body(&x, cfg.q, &setup.net, &tc)?;
    rec.metrics = metrics(&[
        ("kappa_max", report.kappa_max as f64),
        ("ball_radius", report.ball_radius.unwrap_or(f64::INFINITY)),
        ("violations", report.directions.iter().filter(|c| c.violation.is_some()).count() as f64),
    ]);
    rec.check(ThresholdCheck::at_most("not_in_typical_set", (!report.in_set) as u8 as f64, 0.0));
    rec.details = Some(serde_json::to_value(&report)?);
    Ok(())
}

fn audit(cfg: &ExperimentConfig, opts: &RunOptions, rec: &mut RunRecord) -> Result<()> {
    let mut details = Vec::new();
    for inst in shipped_instances()? {
        let probes: Vec<Sample> = inst.universe().collect();
        let a = extension_audit(&inst, &probes)?;
        rec.check(ThresholdCheck::at_most(&format!("{}:ratio_slack", inst.name), a.max_ratio_slack, floatbody::extension::RATIO_SLACK_TOL));
        rec.check(ThresholdCheck::at_most(&format!("{}:tv", inst.name), a.max_tv, floatbody::extension::TV_TOL));
        details.push(serde_json::json!({ "instance": inst.name, "audit": a }));
    }
    let x = load_data(cfg)?;
    let setup = setup(cfg, x.len())?;
    let tc = TypicalSetConfig::new(setup.w, setup.params.clone(), x.len())?;
    let (base, body) = check_typical_with_body(&x, cfg.q, &setup.net, &tc)?;
    if base.in_set {
        let spec = HolderQuerySpec::quantiles(setup.net.len());
        let mp = MechanismParams::new(cfg.epsilon, &tc, &spec)?;
        let pairs = run_trials(cfg.seed, cfg.trials, opts.threads, |_, rng| {
            let mut y = x.clone();
            let i = rng.random_range(0..y.len());
            let mut row = Vec::new();
            cfg.distribution.draw(rng, &mut row);
            y.replace_row(i, &row)?;
            let (r, by) = check_typical_with_body(&y, cfg.q, &setup.net, &tc)?;
            if !r.in_set {
                return Ok(None);
            }
            let probe = RegionProbe::uniform(&mp, 4000, rng);
            let grid = audit_grid(&body.quantiles, &by.quantiles, &mp, 200, rng);
            Ok(Some(privacy_ratio_audit(&body.quantiles, &by.quantiles, 1, &mp, &probe, &grid)))
        })?;
        let audited: Vec<_> = pairs.into_iter().flatten().collect();
        let worst = audited.iter().map(|a| a.max_slack).fold(f64::NEG_INFINITY, f64::max);
        for a in &audited {
            rec.trials.push(metrics(&[("ratio_slack", a.max_slack)]));
        }
        rec.metrics.insert("typical_pairs".into(), audited.len() as f64);
        if !audited.is_empty() {
            rec.check(ThresholdCheck::at_most("mechanism:ratio_slack", worst, floatbody::mechanism::RATIO_AUDIT_TOL));
        }
    } else {
        rec.notes.push("data set is not typical; mechanism ratio audit skipped".into());
    }
    rec.details = Some(serde_json::Value::Array(details));
    Ok(())
}
