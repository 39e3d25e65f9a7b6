//! Seeded ensemble execution and file output.
//!
//! Output directory layout:
//! - `traj_NNNNN.csv`: one file per trajectory, written when `n_traj <= 16`
//!   or with `dump_paths`;
//! - `aggregate.csv`: one row per trajectory, or the comparison table of a
//!   statistics mode;
//! - `summary.csv`: `statistic,value` pairs of the statistics modes;
//! - `manifest.txt`: `key=value` record of the run.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use trajzoom_core::discrete::{run_discrete_with, steps_for_horizon};
use trajzoom_core::limit::{mollified_local_time, run_limit_with, Boundary, LimitTrajectory};
use trajzoom_core::sde::run_sde;
use trajzoom_core::stats::ks_statistic;
use trajzoom_core::stats::laws::{spike_count_mean, BoundaryLaw, LawSpec};
use trajzoom_core::SeedSpec;

use crate::config::{Mode, RunConfig};
use crate::csvio::{fmt_float, write_key_values, write_limit, write_rows, write_trajectory};
use crate::error::RunError;
use crate::studies::{
    excursion_run, levy_study, par_map, spike_run, summarize_excursions, EntropyStats, APEX_STREAM_OFFSET,
};

/// Paths are always written up to this ensemble size.
pub const MAX_AUTO_DUMP: usize = 16;

/// Mollifier width of the local-time audit column.
pub const AUDIT_EPS: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub threads: usize,
    pub dump_paths: bool,
    /// Where the master seed came from, echoed in the manifest.
    pub seed_source: String,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            threads: 1,
            dump_paths: false,
            seed_source: "config".to_string(),
        }
    }
}

/// One internal check of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, value: f64, bound: impl Into<String>, passed: bool) -> Self {
        Check {
            name: name.to_string(),
            value,
            bound: bound.into(),
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub manifest: Vec<(String, String)>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Output {
    files: Vec<PathBuf>,
    checks: Vec<Check>,
    facts: Vec<(String, String)>,
    summary: Vec<(String, f64)>,
}

impl Output {
    fn new() -> Self {
        Output {
            files: Vec::new(),
            checks: Vec::new(),
            facts: Vec::new(),
            summary: Vec::new(),
        }
    }

    fn fact(&mut self, key: &str, value: impl ToString) {
        self.facts.push((key.to_string(), value.to_string()));
    }

    fn stat(&mut self, key: impl Into<String>, value: f64) {
        self.summary.push((key.into(), value));
    }
}

fn traj_path(dir: &Path, i: u64) -> PathBuf {
    dir.join(format!("traj_{i:05}.csv"))
}

fn engine<T>(ctx: &str, r: trajzoom_core::Result<T>) -> Result<T, RunError> {
    r.map_err(|e| RunError::engine(ctx, e))
}

fn collect<T>(v: Vec<Result<T, RunError>>) -> Result<Vec<T>, RunError> {
    v.into_iter().collect()
}

fn f(x: f64) -> String {
    fmt_float(x)
}

/// Runs the ensemble described by `cfg` and writes its files. Failed
/// internal checks are reported as [`RunError::Consistency`] after every
/// file, including the manifest, has been written.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.max(1))
        .build()
        .map_err(|e| RunError::Consistency(format!("thread pool: {e}")))?;
    let dump = cfg.n_traj <= MAX_AUTO_DUMP || opts.dump_paths;
    let mut out = pool.install(|| match cfg.mode {
        Mode::Discrete => run_discrete_mode(cfg, &dir, dump),
        Mode::Sde => run_sde_mode(cfg, &dir, dump),
        Mode::Limit => run_limit_mode(cfg, &dir, dump),
        Mode::StatsExcursions => run_excursions_mode(cfg, &dir, dump),
        Mode::StatsLevy => run_levy_mode(cfg, &dir),
        Mode::StatsSpikes => run_spikes_mode(cfg, &dir),
        Mode::StatsEntropy => run_entropy_mode(cfg, &dir, dump),
    })?;

    if !out.summary.is_empty() {
        let path = dir.join("summary.csv");
        let rows: Vec<Vec<String>> = out.summary.iter().map(|(k, v)| vec![k.clone(), f(*v)]).collect();
        write_rows(&path, &["statistic", "value"], &rows)?;
        out.files.push(path);
    }

    let mut manifest: Vec<(String, String)> = vec![
        ("artifact".into(), env!("CARGO_PKG_NAME").into()),
        ("artifact_version".into(), env!("CARGO_PKG_VERSION").into()),
    ];
    manifest.extend(cfg.echo().into_iter().map(|(k, v)| (format!("config.{k}"), v)));
    manifest.push(("master_seed_source".into(), opts.seed_source.clone()));
    manifest.push((
        "seed_derivation".into(),
        "ChaCha8Rng::seed_from_u64(master_seed) with stream trajectory_index".into(),
    ));
    manifest.push(("trajectory_indices".into(), format!("0..{}", cfg.n_traj)));
    manifest.extend(out.facts.iter().cloned());
    for c in &out.checks {
        manifest.push((
            format!("check.{}", c.name),
            format!(
                "{} value={} bound={}",
                if c.passed { "pass" } else { "FAIL" },
                f(c.value),
                c.bound
            ),
        ));
    }
    manifest.push(("files".into(), (out.files.len() + 1).to_string()));
    manifest.push(("threads".into(), opts.threads.max(1).to_string()));
    manifest.push((
        "wall_clock_seconds".into(),
        format!("{:.3}", start.elapsed().as_secs_f64()),
    ));
    let mpath = dir.join("manifest.txt");
    write_key_values(&mpath, &manifest)?;
    out.files.push(mpath);

    let outcome = RunOutcome {
        output_dir: dir,
        files: out.files,
        checks: out.checks,
        manifest,
    };
    if let Some(bad) = outcome.checks.iter().find(|c| !c.passed) {
        return Err(RunError::Consistency(format!(
            "check {} failed: value {} outside {}",
            bad.name,
            f(bad.value),
            bad.bound
        )));
    }
    Ok(outcome)
}

fn run_discrete_mode(cfg: &RunConfig, dir: &Path, dump: bool) -> Result<Output, RunError> {
    let n_steps = steps_for_horizon(cfg.horizon, cfg.params.ds);
    let rows = collect(par_map(cfg.n_traj, |i| {
        let ctx = format!("discrete trajectory {i}");
        let run = engine(
            &ctx,
            run_discrete_with(
                &cfg.params,
                SeedSpec::new(cfg.master_seed, i),
                n_steps,
                cfg.effective_time_normalization,
            ),
        )?;
        let tr = &run.trajectory;
        let ok = tr.check_invariants().is_ok();
        if dump {
            write_trajectory(&traj_path(dir, i), tr)?;
        }
        let near = tr.q.iter().filter(|&&q| q <= 0.05 || q >= 0.95).count() as f64 / tr.len() as f64;
        let t_end = *tr.t_cum.last().unwrap_or(&0.0);
        Ok((
            vec![
                i.to_string(),
                n_steps.to_string(),
                f(*tr.s_grid.last().unwrap_or(&0.0)),
                f(t_end),
                f(near),
            ],
            ok,
            t_end == 0.0,
        ))
    }))?;
    let mut out = Output::new();
    if dump {
        out.files.extend((0..cfg.n_traj as u64).map(|i| traj_path(dir, i)));
    }
    let path = dir.join("aggregate.csv");
    let table: Vec<Vec<String>> = rows.iter().map(|r| r.0.clone()).collect();
    write_rows(
        &path,
        &["trajectory", "steps", "final_s", "final_t", "boundary_fraction"],
        &table,
    )?;
    out.files.push(path);
    let bad = rows.iter().filter(|r| !r.1).count();
    out.fact("clamped_steps", 0);
    out.fact("degenerate_events", rows.iter().filter(|r| r.2).count());
    out.checks.push(Check::new(
        "trajectory_invariants",
        bad as f64,
        "0 violations",
        bad == 0,
    ));
    Ok(out)
}

fn run_sde_mode(cfg: &RunConfig, dir: &Path, dump: bool) -> Result<Output, RunError> {
    let rows = collect(par_map(cfg.n_traj, |i| {
        let ctx = format!("sde trajectory {i}");
        let path = engine(
            &ctx,
            run_sde(&cfg.params, SeedSpec::new(cfg.master_seed, i), cfg.horizon),
        )?;
        let tr = &path.trajectory;
        let ok = tr.check_invariants().is_ok();
        if dump {
            write_trajectory(&traj_path(dir, i), tr)?;
        }
        let t_end = *tr.t_cum.last().unwrap_or(&0.0);
        let qv = *path.quadratic_variation_clock().last().unwrap_or(&0.0);
        Ok((
            vec![
                i.to_string(),
                path.increments_w.len().to_string(),
                f(*tr.s_grid.last().unwrap_or(&0.0)),
                f(t_end),
                f(qv),
                path.clamped_steps.to_string(),
            ],
            ok,
            path.clamped_steps,
            t_end == 0.0,
        ))
    }))?;
    let mut out = Output::new();
    if dump {
        out.files.extend((0..cfg.n_traj as u64).map(|i| traj_path(dir, i)));
    }
    let path = dir.join("aggregate.csv");
    let table: Vec<Vec<String>> = rows.iter().map(|r| r.0.clone()).collect();
    write_rows(
        &path,
        &[
            "trajectory",
            "steps",
            "final_s",
            "final_t",
            "final_t_qv",
            "clamped_steps",
        ],
        &table,
    )?;
    out.files.push(path);
    out.fact("clamped_steps", rows.iter().map(|r| r.2).sum::<usize>());
    out.fact("degenerate_events", rows.iter().filter(|r| r.3).count());
    let bad = rows.iter().filter(|r| !r.1).count();
    out.checks.push(Check::new(
        "trajectory_invariants",
        bad as f64,
        "0 violations",
        bad == 0,
    ));
    Ok(out)
}

fn limit_invariants_hold(tr: &LimitTrajectory) -> bool {
    let monotone = |v: &[f64]| v.first() == Some(&0.0) && v.windows(2).all(|w| w[1] >= w[0]);
    tr.q.iter().all(|q| (0.0..=1.0).contains(q)) && monotone(&tr.big_l) && monotone(&tr.big_u) && monotone(&tr.s_of_t)
}

fn run_limit_mode(cfg: &RunConfig, dir: &Path, dump: bool) -> Result<Output, RunError> {
    let rows = collect(par_map(cfg.n_traj, |i| {
        let ctx = format!("limit trajectory {i}");
        let tr = engine(
            &ctx,
            run_limit_with(&cfg.params, SeedSpec::new(cfg.master_seed, i), cfg.horizon, cfg.limit),
        )?;
        if dump {
            write_limit(&traj_path(dir, i), &tr)?;
        }
        let res = tr.skorokhod_residual();
        let moll = engine(&ctx, mollified_local_time(&tr.q, tr.dt, Boundary::Lower, AUDIT_EPS))?;
        let last = tr.len() - 1;
        Ok((
            vec![
                i.to_string(),
                last.to_string(),
                f(tr.t_grid[last]),
                f(tr.big_l[last]),
                f(tr.big_u[last]),
                f(tr.s_of_t[last]),
                f(res),
                f(moll[last]),
            ],
            res,
            limit_invariants_hold(&tr),
        ))
    }))?;
    let mut out = Output::new();
    if dump {
        out.files.extend((0..cfg.n_traj as u64).map(|i| traj_path(dir, i)));
    }
    let path = dir.join("aggregate.csv");
    let table: Vec<Vec<String>> = rows.iter().map(|r| r.0.clone()).collect();
    write_rows(
        &path,
        &[
            "trajectory",
            "steps",
            "final_t",
            "final_L",
            "final_U",
            "final_s",
            "max_residual",
            "L_mollifier",
        ],
        &table,
    )?;
    out.files.push(path);
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    out.fact("clamped_steps", 0);
    out.fact("degenerate_events", 0);
    out.checks
        .push(Check::new("skorokhod_residual", worst, "<= 1e-12", worst <= 1e-12));
    let bad = rows.iter().filter(|r| !r.2).count();
    out.checks.push(Check::new(
        "trajectory_invariants",
        bad as f64,
        "0 violations",
        bad == 0,
    ));
    Ok(out)
}

fn run_excursions_mode(cfg: &RunConfig, dir: &Path, dump: bool) -> Result<Output, RunError> {
    let st = &cfg.stats;
    let runs = collect(par_map(cfg.n_traj, |i| {
        let seed = SeedSpec::new(cfg.master_seed, i);
        let run = engine(
            &format!("excursion trajectory {i}"),
            excursion_run(&cfg.params, seed, cfg.limit, cfg.horizon, st.floor, st.band),
        )?;
        if dump {
            let rows: Vec<Vec<String>> = run
                .selected
                .iter()
                .map(|e| {
                    vec![
                        f(e.t_start),
                        f(e.t_apex),
                        f(e.t_end),
                        f(e.max_height),
                        f(e.ascent_time),
                        f(e.descent_time),
                    ]
                })
                .collect();
            write_rows(
                &traj_path(dir, i),
                &[
                    "t_start",
                    "t_apex",
                    "t_end",
                    "max_height",
                    "ascent_time",
                    "descent_time",
                ],
                &rows,
            )?;
        }
        Ok(run)
    }))?;
    let mut out = Output::new();
    if dump {
        out.files.extend((0..cfg.n_traj as u64).map(|i| traj_path(dir, i)));
    }
    let m_ref = 0.5 * (st.band.0 + st.band.1);
    let selected: usize = runs.iter().map(|r| r.selected.len()).sum();
    out.fact("apex_stream_offset", APEX_STREAM_OFFSET);
    out.fact("degenerate_events", 0);
    out.checks.push(Check::new(
        "selected_excursions",
        selected as f64,
        ">= 2",
        selected >= 2,
    ));
    if selected < 2 {
        return Ok(out);
    }
    let s = engine("excursion summary", summarize_excursions(&runs, m_ref, &st.sigmas))?;
    let path = dir.join("aggregate.csv");
    let rows: Vec<Vec<String>> = s
        .rows
        .iter()
        .map(|r| {
            vec![
                f(r.sigma),
                f(r.ascent.estimate),
                f(r.ascent.stderr),
                f(r.descent.estimate),
                f(r.descent.stderr),
                f(r.exact),
            ]
        })
        .collect();
    write_rows(
        &path,
        &["sigma", "ascent", "ascent_stderr", "descent", "descent_stderr", "exact"],
        &rows,
    )?;
    out.files.push(path);
    out.stat("excursions_selected", selected as f64);
    out.stat("spikes", s.spikes as f64);
    out.stat("jumps", s.jumps as f64);
    out.stat("reference_height", m_ref);
    out.stat("mean_ascent", s.mean_ascent.0);
    out.stat("mean_ascent_stderr", s.mean_ascent.1);
    out.stat("mean_descent", s.mean_descent.0);
    out.stat("mean_descent_stderr", s.mean_descent.1);
    out.stat("mean_exact", m_ref * m_ref / 3.0);
    out.stat("ascent_descent_correlation", s.correlation);
    out.stat("max_residual", s.max_residual);
    out.checks.push(Check::new(
        "skorokhod_residual",
        s.max_residual,
        "<= 1e-12",
        s.max_residual <= 1e-12,
    ));
    out.checks
        .push(Check::new("laplace_worst_z", s.worst_z(), "<= 3", s.worst_z() <= 3.0));
    let cz = s.correlation_z().abs();
    out.checks.push(Check::new("correlation_z", cz, "<= 3", cz <= 3.0));
    Ok(out)
}

fn run_levy_mode(cfg: &RunConfig, dir: &Path) -> Result<Output, RunError> {
    let st = &cfg.stats;
    let s = engine(
        "levy study",
        levy_study(
            &cfg.params,
            cfg.master_seed,
            cfg.n_traj,
            cfg.limit,
            &st.s_levels,
            st.t_cap,
            &st.sigmas,
        ),
    )?;
    let mut out = Output::new();
    let path = dir.join("samples.csv");
    let mut header = vec!["trajectory".to_string()];
    header.extend((0..st.s_levels.len()).map(|k| format!("t_s{k}")));
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = s
        .samples
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut r = vec![i.to_string()];
            r.extend(x.times.iter().map(|&t| f(t)));
            r
        })
        .collect();
    write_rows(&path, &header_ref, &rows)?;
    out.files.push(path);

    let path = dir.join("aggregate.csv");
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for lvl in &s.levels {
        for (sigma, est, exact) in &lvl.laplace {
            worst = worst.max(est.z_score(*exact).abs());
            rows.push(vec![f(lvl.s), f(*sigma), f(est.estimate), f(est.stderr), f(*exact)]);
        }
    }
    write_rows(&path, &["s", "sigma", "empirical", "stderr", "exact"], &rows)?;
    out.files.push(path);
    let censored: usize = s.levels.iter().map(|l| l.censored).max().unwrap_or(0);
    out.fact("degenerate_events", censored);
    for (k, lvl) in s.levels.iter().enumerate() {
        out.stat(format!("ks_distance_s{k}"), lvl.ks.d);
        out.stat(format!("ks_p_value_s{k}"), lvl.ks.p_value);
        out.stat(format!("censored_s{k}"), lvl.censored as f64);
    }
    out.stat("max_residual", s.max_residual);
    out.checks.push(Check::new(
        "skorokhod_residual",
        s.max_residual,
        "<= 1e-12",
        s.max_residual <= 1e-12,
    ));
    out.checks
        .push(Check::new("laplace_worst_z", worst, "<= 3", worst <= 3.0));
    if let Some(rep) = &s.factorization {
        for (j, r) in rep.rows.iter().enumerate() {
            out.stat(format!("factorization_{j}_joint_z"), r.joint_z);
            out.stat(format!("factorization_{j}_covariance_z"), r.covariance_z);
        }
        out.checks.push(Check::new(
            "factorization",
            rep.rows
                .iter()
                .map(|r| r.joint_z.abs().max(r.covariance_z.abs()))
                .fold(0.0, f64::max),
            "<= 3",
            rep.passed,
        ));
    }
    Ok(out)
}

fn run_spikes_mode(cfg: &RunConfig, dir: &Path) -> Result<Output, RunError> {
    let st = &cfg.stats;
    let runs = collect(par_map(cfg.n_traj, |i| {
        engine(
            &format!("spike trajectory {i}"),
            spike_run(
                &cfg.params,
                SeedSpec::new(cfg.master_seed, i),
                cfg.horizon,
                st.plateau_delta,
                st.spike_m,
                st.window,
                st.sample_stride,
            ),
        )
    }))?;
    let mut out = Output::new();
    let path = dir.join("aggregate.csv");
    let mut rows = Vec::new();
    for (i, r) in runs.iter().enumerate() {
        for (w, c) in r.census.counts.iter().enumerate() {
            rows.push(vec![i.to_string(), w.to_string(), c.to_string()]);
        }
    }
    write_rows(&path, &["trajectory", "window", "count"], &rows)?;
    out.files.push(path);

    let counts: Vec<f64> = runs
        .iter()
        .flat_map(|r| r.census.counts.iter().map(|&c| c as f64))
        .collect();
    let samples: Vec<f64> = runs.iter().flat_map(|r| r.census.samples.iter().copied()).collect();
    let gamma = cfg.params.gamma.finite().unwrap_or(f64::NAN);
    let (lambda, p) = (cfg.params.lambda, cfg.params.p);
    let expected = spike_count_mean(st.spike_m, lambda, p, st.window);
    out.fact("clamped_steps", runs.iter().map(|r| r.clamped_steps).sum::<usize>());
    out.fact("degenerate_events", 0);
    out.stat("windows", counts.len() as f64);
    out.stat("expected_count", expected);
    out.stat("plateau_samples", samples.len() as f64);
    out.checks
        .push(Check::new("windows", counts.len() as f64, ">= 1", !counts.is_empty()));
    if !counts.is_empty() {
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        out.stat("mean_count", mean);
        let tol = 3.0 * expected.sqrt();
        out.checks.push(Check::new(
            "spike_count",
            mean,
            format!("{} +- {}", f(expected), f(tol)),
            (mean - expected).abs() <= tol,
        ));
    }
    if !samples.is_empty() {
        let stated = BoundaryLaw::new(gamma, lambda, p);
        let alt = BoundaryLaw::with_scale(2.0 * lambda * p / gamma);
        let ks = engine("boundary law", ks_statistic(&samples, |q| stated.cdf(q).unwrap_or(0.0)))?;
        let ks_alt = engine("boundary law", ks_statistic(&samples, |q| alt.cdf(q).unwrap_or(0.0)))?;
        out.stat("boundary_ks_stated_scale", ks.d);
        out.stat("boundary_scale_stated", stated.c);
        out.stat("boundary_ks_scale_2lp_over_gamma", ks_alt.d);
        out.stat("boundary_scale_2lp_over_gamma", alt.c);
        out.checks.push(Check::new("boundary_ks", ks.d, "< 0.05", ks.d < 0.05));
    }
    Ok(out)
}

fn run_entropy_mode(cfg: &RunConfig, dir: &Path, dump: bool) -> Result<Output, RunError> {
    let st = &cfg.stats;
    let runs = collect(par_map(cfg.n_traj, |i| {
        let ctx = format!("entropy trajectory {i}");
        let tr = engine(
            &ctx,
            run_limit_with(&cfg.params, SeedSpec::new(cfg.master_seed, i), cfg.horizon, cfg.limit),
        )?;
        if dump {
            write_limit(&traj_path(dir, i), &tr)?;
        }
        let stats = engine(&ctx, EntropyStats::of(&tr, st.bulk))?;
        Ok((stats, tr.skorokhod_residual()))
    }))?;
    let mut out = Output::new();
    if dump {
        out.files.extend((0..cfg.n_traj as u64).map(|i| traj_path(dir, i)));
    }
    let path = dir.join("aggregate.csv");
    let rows: Vec<Vec<String>> = runs
        .iter()
        .enumerate()
        .map(|(i, (s, _))| {
            vec![
                i.to_string(),
                s.bulk_delta_s.n.to_string(),
                f(s.bulk_delta_s.mean()),
                f(s.residual.mean()),
            ]
        })
        .collect();
    write_rows(
        &path,
        &["trajectory", "bulk_steps", "bulk_mean_delta_s", "residual_mean"],
        &rows,
    )?;
    out.files.push(path);
    let mut total = EntropyStats::default();
    for (s, _) in &runs {
        total.merge(s);
    }
    let worst = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    out.fact("degenerate_events", 0);
    out.stat("bulk_steps", total.bulk_delta_s.n as f64);
    out.stat("bulk_mean_delta_s", total.bulk_delta_s.mean());
    out.stat("bulk_mean_delta_s_stderr", total.bulk_delta_s.stderr());
    out.stat("drift_target", -2.0 * total.dt);
    out.stat("residual_mean", total.residual.mean());
    out.stat("residual_stderr", total.residual.stderr());
    out.checks
        .push(Check::new("skorokhod_residual", worst, "<= 1e-12", worst <= 1e-12));
    let rel = total.bulk_relative_error().abs();
    out.checks
        .push(Check::new("bulk_drift_relative_error", rel, "<= 0.05", rel <= 0.05));
    let z = total.residual_z().abs();
    out.checks.push(Check::new("residual_z", z, "<= 3", z <= 3.0));
    Ok(out)
}
