//! The subcommands. Each returns its tables; [`run`] writes them with a manifest.

use std::str::FromStr;

use bbmlab_core::breakout::{excursion_replicas, rescale_path, summarize_pb, EpochOptions, EpochRunner};
use bbmlab_core::critical_line::{laplace_crosscheck, simulate_absorbed, solve_traveling_wave, tail_statistic, TravelingWave, MIN_TAIL_SAMPLES};
use bbmlab_core::engine::sample_initial_population;
use bbmlab_core::levy::{simulate_levy, LevySpec};
use bbmlab_core::nbbm::{simulate_nbbm, speed_and_cumulants, FrontStatistic, NbbmConfig, DEFAULT_DT};
use bbmlab_core::numerics::{theta_fourier, theta_gaussian};
use bbmlab_core::params::ModelParams;
use bbmlab_core::rng::{ReplicaMap, RngStream};
use bbmlab_core::Error;
use rand::Rng;

use crate::config::Resolved;
use crate::output::{num, write_run, Table};
use crate::pool::Pool;
use crate::suites;
use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    NumericsCheck,
    CriticalLine,
    BreakoutRate,
    BarrierPath,
    Nbbm,
    Levy,
    Verify(String),
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::NumericsCheck => "numerics-check".into(),
            Command::CriticalLine => "critical-line".into(),
            Command::BreakoutRate => "breakout-rate".into(),
            Command::BarrierPath => "barrier-path".into(),
            Command::Nbbm => "nbbm".into(),
            Command::Levy => "levy".into(),
            Command::Verify(s) => format!("verify {s}"),
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let mut parts = s.split_whitespace();
        let head = parts.next().unwrap_or("");
        let cmd = match head {
            "numerics-check" => Command::NumericsCheck,
            "critical-line" => Command::CriticalLine,
            "breakout-rate" => Command::BreakoutRate,
            "barrier-path" => Command::BarrierPath,
            "nbbm" => Command::Nbbm,
            "levy" => Command::Levy,
            "verify" => Command::Verify(parts.next().ok_or_else(|| CliError::Config("verify needs a suite name".into()))?.to_string()),
            _ => return Err(CliError::Config(format!("unknown command {s:?}"))),
        };
        if parts.next().is_some() {
            return Err(CliError::Config(format!("trailing words in command {s:?}")));
        }
        Ok(cmd)
    }
}

/// Tables produced by a command, and whether it passed (always true except for `verify`).
pub struct Outcome {
    pub tables: Vec<Table>,
    pub passed: bool,
}

fn ok(tables: Vec<Table>) -> CliResult<Outcome> {
    Ok(Outcome { tables, passed: true })
}

pub fn execute(cmd: &Command, cfg: &Resolved, pool: &Pool) -> CliResult<Outcome> {
    match cmd {
        Command::NumericsCheck => ok(vec![numerics_check(cfg)?]),
        Command::CriticalLine => ok(critical_line(cfg, pool)?),
        Command::BreakoutRate => ok(breakout_rate(cfg, pool)?),
        Command::BarrierPath => ok(barrier_path(cfg, pool)?),
        Command::Nbbm => ok(nbbm(cfg, pool)?),
        Command::Levy => ok(levy(cfg, pool)?),
        Command::Verify(name) => {
            let ctx = suites::Context { seed: cfg.seed, replicas: cfg.file.replicas, pool };
            let results = suites::run_suite(name, &ctx)?;
            let mut t = Table::new("verify.csv", &["criterion", "name", "status", "detail"]);
            for r in &results {
                t.row([r.id.to_string(), r.name.to_string(), r.status().to_string(), r.detail.replace(',', ";")]);
            }
            Ok(Outcome { tables: vec![t], passed: results.iter().all(|r| r.pass) })
        }
    }
}

/// Runs a command and writes its outputs; returns the exit code.
pub fn run(cmd: &Command, cfg: &Resolved) -> CliResult<i32> {
    let pool = Pool::new(cfg.workers)?;
    let out = execute(cmd, cfg, &pool)?;
    write_run(&cfg.output_dir, &cmd.name(), &cfg.echo(), &out.tables)?;
    Ok(if out.passed { 0 } else { 1 })
}

fn stream(seed: u64, i: usize) -> bbmlab_core::rng::SimRng {
    RngStream::new(seed, i as u64).rng()
}

fn flag(b: bool) -> String {
    (b as u8).to_string()
}

fn numerics_check(cfg: &Resolved) -> CliResult<Table> {
    let n = cfg.replicas(1000);
    let mut rng = stream(cfg.seed, 0);
    let mut t = Table::new("numerics.csv", &["x", "t", "theta_fourier", "theta_gaussian", "diff"]);
    for _ in 0..n {
        let x = rng.random_range(0.0..2.0);
        let s = rng.random_range(0.05..5.0);
        let f = theta_fourier(x, s, 0)?.value;
        let g = theta_gaussian(x, s, 0)?.value;
        t.row([num(x), num(s), num(f), num(g), num((f - g).abs())]);
    }
    Ok(t)
}

pub fn wave_for(p: &ModelParams<f64>) -> CliResult<TravelingWave<f64>> {
    Ok(solve_traveling_wave(&p.law, -15.0, 25.0, 1e-12)?)
}

/// `W_y` samples, one stream per replicate, in replicate order.
pub fn absorbed_samples<M: ReplicaMap>(p: &ModelParams<f64>, y: f64, n: usize, seed: u64, map: &M) -> CliResult<Vec<bbmlab_core::critical_line::AbsorptionRun>> {
    let runs: Result<Vec<_>, Error> = map.map(n, |i| simulate_absorbed(y, &p.law, &mut stream(seed, i))).into_iter().collect();
    Ok(runs?)
}

fn critical_line(cfg: &Resolved, pool: &Pool) -> CliResult<Vec<Table>> {
    let p = &cfg.params;
    let y = cfg.file.critical_line.y.unwrap_or(8.0);
    let n = cfg.replicas(MIN_TAIL_SAMPLES);
    let runs = absorbed_samples(p, y, n, cfg.seed, pool)?;
    let mut abs = Table::new("absorbed.csv", &["replicate", "y", "Z_y", "W_y", "discarded_flag"]);
    for (i, r) in runs.iter().enumerate() {
        abs.row([i.to_string(), num(y), r.z_y.to_string(), num(r.w_y), flag(r.discarded)]);
    }
    let wave = wave_for(p)?;
    let mut wt = Table::new("wave.csv", &["x", "psi"]);
    for (x, s) in wave.grid.iter().zip(&wave.psi) {
        wt.row([num(*x), num(*s)]);
    }
    let w: Vec<f64> = runs.iter().filter(|r| !r.discarded).map(|r| r.w_y).collect();
    let mut tables = vec![abs, wt];
    if w.len() >= MIN_TAIL_SAMPLES {
        let mut tail = Table::new("tail.csv", &["x", "x_tail", "lo", "hi"]);
        let xs = cfg.file.critical_line.thresholds.clone().unwrap_or_else(|| vec![5.0, 10.0, 20.0, 50.0]);
        for (k, &x) in xs.iter().enumerate() {
            let ci = tail_statistic(&w, x, cfg.seed.wrapping_add(k as u64))?;
            tail.row([num(x), num(ci.estimate), num(ci.lo), num(ci.hi)]);
        }
        let grid: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect();
        let (dev, shift) = laplace_crosscheck(&w, &wave, &grid)?;
        let mut lap = Table::new("laplace.csv", &["samples", "sup_dev", "shift", "wave_residual"]);
        lap.row([w.len().to_string(), num(dev), num(shift), num(wave.max_residual())]);
        tables.extend([tail, lap]);
    }
    Ok(tables)
}

fn breakout_rate(cfg: &Resolved, pool: &Pool) -> CliResult<Vec<Table>> {
    let p = &cfg.params;
    let n = cfg.replicas(10_000);
    let early = cfg.file.breakout.early_stop.unwrap_or(true);
    let outcomes = excursion_replicas(p, p.breakout_threshold(), n, cfg.seed, early, pool)?;
    let mut ex = Table::new("excursions.csv", &["replicate", "breakout", "trigger", "z_prime", "tau_max", "truncated"]);
    for (i, o) in outcomes.iter().enumerate() {
        let trig = o.breakout.map_or("none".to_string(), |t| format!("{t:?}"));
        ex.row([i.to_string(), flag(o.breakout.is_some()), trig, num(o.z_prime), num(o.tau_max), flag(o.truncated)]);
    }
    let est = summarize_pb(&outcomes)?;
    let mut s = Table::new("pb.csv", &["replicas", "successes", "tau_cap", "p_hat", "lo", "hi", "scaled"]);
    let scale = p.breakout_threshold() * p.c0 / std::f64::consts::PI;
    s.row([
        est.replicas.to_string(),
        est.successes.to_string(),
        est.tau_cap.to_string(),
        num(est.p.estimate),
        num(est.p.lo),
        num(est.p.hi),
        num(est.p.estimate * scale),
    ]);
    Ok(vec![ex, s])
}

/// One barrier path: the epochs completed, the particle count after each, and how it ended.
pub struct PathRun {
    pub path: bbmlab_core::breakout::BarrierPath,
    pub counts: Vec<usize>,
    pub stopped: Option<Error>,
}

/// Runs up to `epochs` epochs from a fresh initial population. A population that dies out ends
/// the path early; other errors are returned.
pub fn run_path(p: &ModelParams<f64>, epochs: usize, band: f64, opts: EpochOptions, seed: u64, replicate: usize) -> CliResult<PathRun> {
    let mut rng = stream(seed, replicate);
    let init = sample_initial_population(p, band, 10_000, &mut rng)?;
    let mut runner = EpochRunner::new(p, &init.positions, opts, rng)?;
    let mut counts = Vec::new();
    let mut stopped = None;
    while counts.len() < epochs {
        match runner.next_epoch() {
            Ok(_) => counts.push(runner.state().len()),
            Err(e @ Error::DegenerateEpoch { .. }) => {
                stopped = Some(e);
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(PathRun { path: runner.into_path(), counts, stopped })
}

fn barrier_path(cfg: &Resolved, pool: &Pool) -> CliResult<Vec<Table>> {
    let p = &cfg.params;
    let b = &cfg.file.barrier;
    let epochs = b.epochs.unwrap_or(20);
    let band = b.initial_band.unwrap_or(0.5);
    let opts = EpochOptions { z_band: b.z_band, ..EpochOptions::default() };
    let n = cfg.replicas(1);
    let runs: CliResult<Vec<PathRun>> = pool.map(n, |i| run_path(p, epochs, band, opts.clone(), cfg.seed, i)).into_iter().collect();
    let runs = runs?;
    let mut et = Table::new(
        "epochs.csv",
        &["replicate", "epoch", "n", "T_n", "delta", "X_end", "Z_end", "Y_end", "good_flags", "trigger", "z_prime", "Z_T", "stopped"],
    );
    let mut pt = Table::new("path.csv", &["replicate", "t", "X_raw", "X_rescaled", "J_rescaled"]);
    let points = b.points.unwrap_or(200);
    for (r, run) in runs.iter().enumerate() {
        for (e, &count) in run.path.epochs.iter().zip(&run.counts) {
            et.row([
                r.to_string(),
                e.n.to_string(),
                count.to_string(),
                num(e.t_n),
                num(e.delta),
                num(e.x_end),
                num(e.z_end),
                num(e.y_end),
                e.good_flags.code(),
                format!("{:?}", e.breakout.triggered_by),
                num(e.breakout.z_prime),
                num(e.z_t),
                flag(false),
            ]);
        }
        if let Some(Error::DegenerateEpoch { time }) = &run.stopped {
            let n = run.path.epochs.len() + 1;
            let mut row = vec![r.to_string(), n.to_string(), "0".into(), num(*time)];
            row.extend(std::iter::repeat_n(String::new(), 8));
            row.push(flag(true));
            et.row(row);
        }
        let horizon = cfg.file.horizon.unwrap_or_else(|| run.path.end_time() / bbmlab_core::breakout::time_scale(p));
        let rp = rescale_path(&run.path, p, horizon, points)?;
        for k in 0..rp.t.len() {
            pt.row([r.to_string(), num(rp.t[k]), num(rp.x_raw[k]), num(rp.x[k]), num(rp.j[k])]);
        }
    }
    Ok(vec![et, pt])
}

fn nbbm(cfg: &Resolved, pool: &Pool) -> CliResult<Vec<Table>> {
    let s = &cfg.file.nbbm;
    let ns = s.n.clone().unwrap_or_else(|| vec![100]);
    let horizon = cfg.file.horizon.unwrap_or(1000.0);
    let statistic = match &s.statistic {
        Some(x) => FrontStatistic::from_str(x)?,
        None => FrontStatistic::Barycenter,
    };
    let burn_in = s.burn_in.unwrap_or(horizon / 5.0);
    let reps = cfg.replicas(1);
    let jobs: Vec<(usize, usize)> = ns.iter().flat_map(|&n| (0..reps).map(move |r| (n, r))).collect();
    let runs: Result<Vec<_>, Error> = pool
        .map(jobs.len(), |j| {
            let (n, _) = jobs[j];
            let mut c = NbbmConfig::new(n, horizon);
            c.dt = s.dt.unwrap_or(DEFAULT_DT);
            c.statistic = statistic;
            if let Some(every) = s.record_every {
                c.record_every = every;
            }
            simulate_nbbm(&c, &cfg.params.law, &mut stream(cfg.seed, j))
        })
        .into_iter()
        .collect();
    let runs = runs?;
    let mut ft = Table::new("front.csv", &["N", "replicate", "t", "front", "count"]);
    let mut st = Table::new("summary.csv", &["N", "replicate", "v_hat", "v_se", "k2", "k3", "k4", "window", "windows"]);
    for ((n, r), series) in jobs.iter().zip(&runs) {
        for k in 0..series.times.len() {
            ft.row([n.to_string(), r.to_string(), num(series.times[k]), num(series.front[k]), series.counts[k].to_string()]);
        }
        let row = match speed_and_cumulants(series, burn_in) {
            Ok(e) => vec![num(e.v), num(e.v_se), num(e.k2), num(e.k3), num(e.k4), num(e.window), e.windows.to_string()],
            Err(Error::InsufficientHorizon { .. }) => match bbmlab_core::nbbm::front_speed(series, burn_in) {
                Ok(f) => vec![num(f.slope), num(f.slope_se), String::new(), String::new(), String::new(), String::new(), "0".into()],
                Err(_) => vec![String::new(); 7],
            },
            Err(e) => return Err(e.into()),
        };
        let mut full = vec![n.to_string(), r.to_string()];
        full.extend(row);
        st.row(full);
    }
    Ok(vec![ft, st])
}

fn levy(cfg: &Resolved, pool: &Pool) -> CliResult<Vec<Table>> {
    let p = &cfg.params;
    let l = &cfg.file.levy;
    let mut spec = LevySpec::new(p.c0, p.kappa)?;
    spec.drift_const = l.drift_const.unwrap_or(0.0);
    let horizon = cfg.file.horizon.unwrap_or(10.0);
    let points = l.points.unwrap_or(1000);
    let delta = l.delta.unwrap_or(1e-3);
    let reps = cfg.replicas(1);
    let paths: Result<Vec<_>, Error> = pool.map(reps, |i| simulate_levy(&spec, horizon, delta, points, &mut stream(cfg.seed, i))).into_iter().collect();
    let mut t = Table::new("levy.csv", &["replicate", "t", "L"]);
    for (r, path) in paths?.iter().enumerate() {
        for (s, v) in path.times.iter().zip(&path.values) {
            t.row([r.to_string(), num(*s), num(*v)]);
        }
    }
    Ok(vec![t])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_names_round_trip() {
        for c in ["numerics-check", "critical-line", "breakout-rate", "barrier-path", "nbbm", "levy", "verify theta"] {
            assert_eq!(Command::from_str(c).unwrap().name(), c);
        }
        assert!(Command::from_str("verify").is_err());
        assert!(Command::from_str("plot").is_err());
    }
}
