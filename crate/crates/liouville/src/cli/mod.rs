//! Command-line orchestration: configuration, pipeline runs, verification
//! suites, artifact emission, and run manifests.
//!
//! Exit-code contract: 0 success, 1 configuration error, 2 numeric failure
//! in the pipeline, 3 verification failure. Every run leaves a parseable
//! `manifest.json` in the output directory, including failed ones.
//! Identical configuration (and seed) produces bit-identical artifacts;
//! wall-clock timings only enter the manifest behind `--timings`.

pub mod artifacts;
pub mod config;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::{AnalyticChiral, ChiralFamily, LiouvilleSolution, Pairing, SpacetimeGrid};
use crate::initial_data::{self, CauchyData, DataHandle, SeminormSpec};
use crate::pipeline::{self, PipelineError};
use crate::verify::{
    self, monotone_decreasing, residual, CorpusEntry, ProbeConfig, ResidualMethod,
};
use crate::zero_tracker;
use config::{parse_eps_list, parse_grid_spec, parse_range_spec, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Fixed thresholds of the verification suite (acceptance contract, not
/// user-tunable).
const ROUND_TRIP_DATA_TOL: f64 = 1e-6;
const ROUND_TRIP_SOLUTION_TOL: f64 = 1e-5;
const ORACLE_TOL: f64 = 1e-3;
const ORACLE_SLOPE: (f64, f64) = (1.7, 2.3);
const FD_RATIO: (f64, f64) = (3.5, 4.5);
/// Coarse and halved finite-difference steps for the order check.
const FD_DELTAS: (f64, f64) = (2e-3, 1e-3);
const DRIFT_BUDGET: f64 = 1e-8;
const GAUGE_TOL: f64 = 1e-9;
const TRACK_WRONSKIAN_TOL: f64 = 1e-8;
const TRACK_WRONSKIAN_POINTS: usize = 64;

#[derive(Parser, Debug)]
#[command(
    name = "liouville",
    version,
    about = "Exact solutions of the Liouville initial-value problem, with verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// INI-style config file; flags override file values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Mass m > 0 (also bound to the expression parameter `m`).
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    /// Initial value phi(x) as an expression.
    #[arg(long)]
    pub phi: Option<String>,
    /// Initial time derivative pi(x) as an expression.
    #[arg(long)]
    pub pi: Option<String>,
    /// Sampled data CSV (`x,phi,pi`) instead of expressions.
    #[arg(long = "data-file")]
    pub data_file: Option<PathBuf>,
    /// Base point for the chiral initial conditions.
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    /// ODE step.
    #[arg(long)]
    pub h: Option<f64>,
    /// Evaluation grid `tmin:tmax:nt,xmin:xmax:nx`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Half-width of the working interval for closed-form data.
    #[arg(long)]
    pub window: Option<f64>,
    /// Seed for randomized checks.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock timings in the manifest (makes manifests differ
    /// between runs).
    #[arg(long)]
    pub timings: bool,
    /// Wronskian drift gate for assembling solutions.
    #[arg(long = "drift-tol")]
    pub drift_tol: Option<f64>,
    /// Light-cone residual tolerance for verification.
    #[arg(long = "residual-tol")]
    pub residual_tol: Option<f64>,
    /// Newton tolerance echo for tracking runs.
    #[arg(long = "newton-tol")]
    pub newton_tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the pipeline and emit the field table.
    Solve(SolveArgs),
    /// Run residual, round-trip, oracle, convergence, and gauge checks.
    Verify(VerifyArgs),
    /// Seed and track zero curves of a hand-specified chiral family.
    Track(TrackArgs),
    /// Continuity probes of the map and its inverse over an eps sequence.
    Probe(ProbeArgs),
    /// Emit the chiral potentials u, w over a range.
    DumpPotentials(DumpPotentialsArgs),
    /// Emit the integrated chiral solutions over a range.
    DumpChirals(DumpChiralsArgs),
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Index pairing for F (debug; `same-index` is the negative control).
    #[arg(long, hide = true, value_parser = parse_pairing)]
    pub pairing: Option<Pairing>,
    /// Verify every corpus entry instead of the configured data.
    #[arg(long)]
    pub corpus: bool,
}

fn parse_pairing(s: &str) -> Result<Pairing, String> {
    match s {
        "cross" => Ok(Pairing::Cross),
        "same-index" => Ok(Pairing::SameIndex),
        other => Err(format!("unknown pairing `{other}`")),
    }
}

#[derive(Args, Debug)]
pub struct TrackArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// chi1(s) expression.
    #[arg(long, allow_hyphen_values = true)]
    pub chi1: String,
    /// chi2(s) expression.
    #[arg(long, allow_hyphen_values = true)]
    pub chi2: String,
    /// psi1(s) expression.
    #[arg(long, allow_hyphen_values = true)]
    pub psi1: String,
    /// psi2(s) expression.
    #[arg(long, allow_hyphen_values = true)]
    pub psi2: String,
    /// Slice time for the seed scan.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t0: f64,
    /// Seed scan interval `lo:hi:n`.
    #[arg(
        long = "x-scan",
        default_value = "-4:4:512",
        allow_hyphen_values = true
    )]
    pub x_scan: String,
    /// Tracking range `lo:hi` in t.
    #[arg(long = "t-range", default_value = "-5:5", allow_hyphen_values = true)]
    pub t_range: String,
    /// Continuation step in t.
    #[arg(long, default_value_t = 1e-2)]
    pub ht: f64,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated strictly decreasing eps list.
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<String>,
    /// Perturbation of phi.
    #[arg(
        long = "eta-phi",
        default_value = "1/cosh(x)",
        allow_hyphen_values = true
    )]
    pub eta_phi: String,
    /// Perturbation of pi.
    #[arg(
        long = "eta-pi",
        default_value = "1/cosh(x)",
        allow_hyphen_values = true
    )]
    pub eta_pi: String,
}

#[derive(Args, Debug)]
pub struct DumpPotentialsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output abscissae `lo:hi:n`.
    #[arg(long, default_value = "-8:8:1001", allow_hyphen_values = true)]
    pub range: String,
}

#[derive(Args, Debug)]
pub struct DumpChiralsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output abscissae `lo:hi:n`; defaults to 1001 points over the
    /// intersection of the integrated ranges.
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
}

// --- manifest ----------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub requirement: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageStat {
    pub stage: String,
    pub items: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub stages: Vec<StageStat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wronskian_drift_chi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wronskian_drift_psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_abs_f: Option<f64>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<Vec<(String, f64)>>,
}

struct ManifestBuilder {
    manifest: RunManifest,
    timings: Vec<(String, f64)>,
    record_timings: bool,
}

impl ManifestBuilder {
    fn new(command: &str, cfg: &RunConfig) -> Self {
        ManifestBuilder {
            manifest: RunManifest {
                version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                config: cfg.clone(),
                stages: Vec::new(),
                wronskian_drift_chi: None,
                wronskian_drift_psi: None,
                min_f: None,
                min_abs_f: None,
                checks: Vec::new(),
                passed: false,
                error: None,
                timings_ms: None,
            },
            timings: Vec::new(),
            record_timings: cfg.timings,
        }
    }

    fn timed<R>(&mut self, name: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let out = f();
        if self.record_timings {
            self.timings
                .push((name.to_string(), start.elapsed().as_secs_f64() * 1e3));
        }
        out
    }

    fn stage(&mut self, name: &str, items: u64) {
        self.manifest.stages.push(StageStat {
            stage: name.to_string(),
            items,
        });
    }

    fn check(&mut self, c: CheckResult) {
        self.manifest.checks.push(c);
    }

    fn finish(mut self, out_dir: &Path, error: Option<String>) -> RunManifest {
        self.manifest.passed = error.is_none() && self.manifest.checks.iter().all(|c| c.pass);
        self.manifest.error = error;
        if self.record_timings {
            self.manifest.timings_ms = Some(self.timings);
        }
        let path = out_dir.join("manifest.json");
        if let Err(e) = artifacts::write_json(&path, &self.manifest) {
            eprintln!("warning: could not write manifest {}: {e}", path.display());
        }
        self.manifest
    }
}

fn check_upper(name: &str, measured: f64, tol: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        pass: measured.is_finite() && measured <= tol,
        measured,
        requirement: format!("<= {tol:e}"),
        note: None,
    }
}

fn check_interval(name: &str, measured: f64, lo: f64, hi: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        pass: measured.is_finite() && measured >= lo && measured <= hi,
        measured,
        requirement: format!("in [{lo}, {hi}]"),
        note: None,
    }
}

fn check_failed(name: &str, requirement: &str, err: impl std::fmt::Display) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        pass: false,
        measured: f64::NAN,
        requirement: requirement.to_string(),
        note: Some(err.to_string()),
    }
}

// --- shared helpers ------------------------------------------------------------

fn resolve_config(common: &CommonArgs) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        config::apply_config_file(&mut cfg, &text)?;
    }
    if let Some(m) = common.m {
        cfg.mass = m;
    }
    if common.phi.is_some() {
        cfg.phi = common.phi.clone();
    }
    if common.pi.is_some() {
        cfg.pi = common.pi.clone();
    }
    if common.data_file.is_some() {
        cfg.data_file = common.data_file.clone();
    }
    if let Some(x0) = common.x0 {
        cfg.x0 = x0;
    }
    if let Some(h) = common.h {
        cfg.h = h;
    }
    if let Some(g) = &common.grid {
        cfg.grid = parse_grid_spec(g)?;
    }
    if let Some(w) = common.window {
        cfg.window = w;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if common.timings {
        cfg.timings = true;
    }
    if let Some(v) = common.drift_tol {
        cfg.tolerances.wronskian_drift = v;
    }
    if let Some(v) = common.residual_tol {
        cfg.tolerances.residual = v;
    }
    if let Some(v) = common.newton_tol {
        cfg.tolerances.newton = v;
    }
    Ok(cfg)
}

fn load_data(cfg: &RunConfig) -> Result<DataHandle<f64>, String> {
    if let Some(path) = &cfg.data_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read data file {}: {e}", path.display()))?;
        let data = initial_data::parse_csv::<f64>(&text).map_err(|e| e.to_string())?;
        return Ok(Arc::new(data));
    }
    let (Some(phi), Some(pi)) = (&cfg.phi, &cfg.pi) else {
        return Err("initial data required: --phi and --pi expressions, or --data-file".into());
    };
    let data = CauchyData::from_expressions(phi, pi, cfg.params()).map_err(|e| e.to_string())?;
    Ok(Arc::new(data))
}

fn pipeline_exit(err: &PipelineError) -> i32 {
    if err.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERIC
    }
}

fn config_fail(command: &str, cfg: &RunConfig, message: String) -> i32 {
    eprintln!("error: {message}");
    ManifestBuilder::new(command, cfg).finish(&cfg.out_dir, Some(message));
    EXIT_CONFIG
}

// --- dispatch ---------------------------------------------------------------

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Track(args) => cmd_track(args),
        Command::Probe(args) => cmd_probe(args),
        Command::DumpPotentials(args) => cmd_dump_potentials(args),
        Command::DumpChirals(args) => cmd_dump_chirals(args),
    }
}

// --- solve -------------------------------------------------------------------

fn cmd_solve(args: SolveArgs) -> i32 {
    let cfg = match resolve_config(&args.common) {
        Ok(cfg) => cfg,
        Err(e) => return config_fail("solve", &RunConfig::default(), e),
    };
    if let Err(e) = cfg.validate() {
        return config_fail("solve", &cfg, e);
    }
    let data = match load_data(&cfg) {
        Ok(d) => d,
        Err(e) => return config_fail("solve", &cfg, e),
    };

    let mut mb = ManifestBuilder::new("solve", &cfg);
    let settings = cfg.pipeline_settings(Pairing::Cross);
    let result = mb.timed("pipeline", || pipeline::solve(&data, &cfg.grid, &settings));
    let (sol, diag) = match result {
        Ok(v) => v,
        Err(e) => {
            let code = pipeline_exit(&e);
            eprintln!("error: {e}");
            mb.finish(&cfg.out_dir, Some(e.to_string()));
            return code;
        }
    };
    mb.stage("S1 potentials", 0);
    mb.stage(
        "S2 chiral integration",
        (diag.chi_nodes + diag.psi_nodes) as u64,
    );
    mb.manifest.wronskian_drift_chi = Some(diag.chi_drift);
    mb.manifest.wronskian_drift_psi = Some(diag.psi_drift);

    let table = match mb.timed("grid evaluation", || sol.evaluate_grid(&cfg.grid)) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            mb.finish(&cfg.out_dir, Some(e.to_string()));
            return EXIT_NUMERIC;
        }
    };
    mb.stage("S3 grid evaluation", table.rows.len() as u64);
    mb.manifest.min_f = Some(table.min_f);
    mb.manifest.min_abs_f = Some(table.min_abs_f);
    mb.check(check_upper(
        "wronskian-drift",
        diag.chi_drift.max(diag.psi_drift),
        cfg.tolerances.wronskian_drift,
    ));

    if let Err(e) = artifacts::write_text(
        &cfg.out_dir.join("field.csv"),
        &artifacts::field_csv(&table),
    ) {
        eprintln!("error: {e}");
        mb.finish(&cfg.out_dir, Some(e.to_string()));
        return EXIT_NUMERIC;
    }
    let manifest = mb.finish(&cfg.out_dir, None);
    if manifest.passed {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}

// --- verify ---------------------------------------------------------------------

fn cmd_verify(args: VerifyArgs) -> i32 {
    let cfg = match resolve_config(&args.common) {
        Ok(cfg) => cfg,
        Err(e) => return config_fail("verify", &RunConfig::default(), e),
    };
    if let Err(e) = cfg.validate() {
        return config_fail("verify", &cfg, e);
    }
    let pairing = args.pairing.unwrap_or(Pairing::Cross);

    if args.corpus {
        let mut summaries = Vec::new();
        let mut all = true;
        for entry in verify::corpus() {
            eprintln!("corpus entry `{}`:", entry.name);
            let mut sub = cfg.clone();
            sub.mass = entry.mass;
            sub.phi = Some(entry.phi.to_string());
            sub.pi = Some(entry.pi.to_string());
            sub.data_file = None;
            sub.out_dir = cfg.out_dir.join("corpus").join(entry.name);
            let passed = verify_one(&sub, pairing, Some(&entry));
            all &= passed;
            summaries.push(serde_json::json!({
                "name": entry.name,
                "passed": passed,
            }));
        }
        let summary = serde_json::json!({
            "entries": summaries,
            "all_passed": all,
        });
        if let Err(e) = artifacts::write_json(&cfg.out_dir.join("summary.json"), &summary) {
            eprintln!("error: {e}");
            return EXIT_NUMERIC;
        }
        return if all { EXIT_OK } else { EXIT_VERIFY };
    }

    if verify_one(&cfg, pairing, None) {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}

/// Run the full check suite for one datum; returns pass/fail and writes
/// `checks.json` plus the manifest.
fn verify_one(cfg: &RunConfig, pairing: Pairing, entry: Option<&CorpusEntry>) -> bool {
    let mut mb = ManifestBuilder::new("verify", cfg);
    if let Some(entry) = entry {
        mb.manifest.command = format!("verify[{}]", entry.name);
    }
    let data = match load_data(cfg) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            mb.finish(&cfg.out_dir, Some(e));
            return false;
        }
    };

    let settings = cfg.pipeline_settings(pairing);
    let built = mb.timed("pipeline", || pipeline::solve(&data, &cfg.grid, &settings));
    let (sol, diag) = match built {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            mb.finish(&cfg.out_dir, Some(e.to_string()));
            return false;
        }
    };
    mb.manifest.wronskian_drift_chi = Some(diag.chi_drift);
    mb.manifest.wronskian_drift_psi = Some(diag.psi_drift);
    if let Ok(table) = sol.evaluate_grid(&cfg.grid) {
        mb.manifest.min_f = Some(table.min_f);
        mb.manifest.min_abs_f = Some(table.min_abs_f);
    }

    // 1. light-cone residual
    let c = mb.timed("light-cone residual", || {
        match residual(&sol, &cfg.grid, ResidualMethod::LightCone) {
            Ok(r) => check_upper(
                "light-cone-residual",
                r.sup_residual,
                cfg.tolerances.residual,
            ),
            Err(e) => check_failed(
                "light-cone-residual",
                &format!("<= {:e}", cfg.tolerances.residual),
                e,
            ),
        }
    });
    mb.check(c);

    // 2. finite-difference residual order, on the interior region where the
    // delta^2 truncation term dominates the representation's round-off floor
    let c = mb.timed("fd residual order", || {
        let res_grid = fd_residual_grid(&cfg.grid);
        let sup = |delta: f64| {
            residual(&sol, &res_grid, ResidualMethod::FiniteDifference { delta })
                .map(|r| r.sup_residual)
        };
        match (sup(FD_DELTAS.0), sup(FD_DELTAS.1)) {
            (Ok(a), Ok(b)) if b > 0.0 => {
                check_interval("fd-residual-order2", a / b, FD_RATIO.0, FD_RATIO.1)
            }
            (Err(e), _) | (_, Err(e)) => check_failed(
                "fd-residual-order2",
                &format!("in [{}, {}]", FD_RATIO.0, FD_RATIO.1),
                e,
            ),
            _ => check_failed(
                "fd-residual-order2",
                &format!("in [{}, {}]", FD_RATIO.0, FD_RATIO.1),
                "zero residual at refined delta",
            ),
        }
    });
    mb.check(c);

    // 3. Wronskian drift budget
    mb.check(check_upper(
        "wronskian-drift",
        diag.chi_drift.max(diag.psi_drift),
        DRIFT_BUDGET,
    ));

    // 4/5. round trips
    let (rt_data, rt_solution) = mb.timed("round trips", || round_trip_checks(cfg, &data, &sol));
    mb.check(rt_data);
    mb.check(rt_solution);

    // 6/7. leapfrog oracle against the construction, plus convergence
    let (oracle_c, slope_c) = mb.timed("oracle", || oracle_checks(&data, &sol));
    mb.check(oracle_c);
    mb.check(slope_c);

    // 8. gauge invariance under seeded unimodular recombinations
    let c = mb.timed("gauge invariance", || gauge_check(cfg, &sol));
    mb.check(c);

    let checks = mb.manifest.checks.clone();
    if let Err(e) = artifacts::write_json(&cfg.out_dir.join("checks.json"), &checks) {
        eprintln!("error: {e}");
        mb.finish(&cfg.out_dir, Some(e.to_string()));
        return false;
    }
    let manifest = mb.finish(&cfg.out_dir, None);
    for c in &manifest.checks {
        let status = if c.pass { "pass" } else { "FAIL" };
        eprintln!(
            "  [{status}] {} = {:.3e} (want {})",
            c.name, c.measured, c.requirement
        );
    }
    manifest.passed
}

fn round_trip_checks(
    cfg: &RunConfig,
    data: &DataHandle<f64>,
    sol: &LiouvilleSolution<f64>,
) -> (CheckResult, CheckResult) {
    let fail = |e: &dyn std::fmt::Display| {
        (
            check_failed("round-trip-data", &format!("<= {ROUND_TRIP_DATA_TOL:e}"), e),
            check_failed(
                "round-trip-solution",
                &format!("<= {ROUND_TRIP_SOLUTION_TOL:e}"),
                e,
            ),
        )
    };

    // restrict on the widest slice the tables support
    let (c_lo, c_hi) = sol.chi().range().unwrap_or((-cfg.window, cfg.window));
    let (p_lo, p_hi) = sol.psi().range().unwrap_or((-cfg.window, cfg.window));
    let (lo, hi) = (c_lo.max(p_lo), c_hi.min(p_hi));
    let n = 2049;
    let xs: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * (i as f64 / (n - 1) as f64))
        .collect();
    let restricted = match sol.restrict(&xs) {
        Ok(d) => Arc::new(d),
        Err(e) => return fail(&e),
    };

    // S^-1 S: recovered data vs original on the comparison window
    let w = 4.0f64.min(hi.min(-lo));
    let mut sup: f64 = 0.0;
    for i in 0..1025 {
        let x = -w + 2.0 * w * (i as f64 / 1024.0);
        let (phi_a, pi_a) = match (data.phi(x), data.pi(x)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return fail(&e),
        };
        let (phi_b, pi_b) = match (restricted.phi(x), restricted.pi(x)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return fail(&e),
        };
        sup = sup.max((phi_a - phi_b).abs()).max((pi_a - pi_b).abs());
    }
    let data_check = check_upper("round-trip-data", sup, ROUND_TRIP_DATA_TOL);

    // S S^-1: rebuild from the restricted data and compare fields on the grid
    let settings = cfg.pipeline_settings(sol.pairing());
    let rebuilt = match pipeline::solve(&restricted, &cfg.grid, &settings) {
        Ok((s, _)) => s,
        Err(e) => {
            return (
                data_check,
                check_failed(
                    "round-trip-solution",
                    &format!("<= {ROUND_TRIP_SOLUTION_TOL:e}"),
                    e,
                ),
            )
        }
    };
    let dev = match (
        sol.evaluate_grid(&cfg.grid),
        rebuilt.evaluate_grid(&cfg.grid),
    ) {
        (Ok(a), Ok(b)) => a.sup_phi_deviation(&b).unwrap_or(f64::NAN),
        (Err(e), _) | (_, Err(e)) => {
            return (
                data_check,
                check_failed(
                    "round-trip-solution",
                    &format!("<= {ROUND_TRIP_SOLUTION_TOL:e}"),
                    e,
                ),
            )
        }
    };
    (
        data_check,
        check_upper("round-trip-solution", dev, ROUND_TRIP_SOLUTION_TOL),
    )
}

fn oracle_checks(
    data: &DataHandle<f64>,
    sol: &LiouvilleSolution<f64>,
) -> (CheckResult, CheckResult) {
    // dx = 1/128, dt = dx/2 on [0,1] x [-2,2]
    let grid = SpacetimeGrid::new(0.0, 1.0, 257, -2.0, 2.0, 513);
    let compare = match verify::oracle_error_vs_solution(data, sol, &grid) {
        Ok(err) => check_upper("oracle-compare", err, ORACLE_TOL),
        Err(e) => check_failed("oracle-compare", &format!("<= {ORACLE_TOL:e}"), e),
    };

    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for cells in [64usize, 128, 256] {
        let grid = SpacetimeGrid::new(0.0, 1.0, cells / 2 + 1, -2.0, 2.0, cells + 1);
        match verify::oracle_error_vs_solution(data, sol, &grid) {
            Ok(err) => {
                hs.push(4.0 / cells as f64);
                errs.push(err);
            }
            Err(e) => {
                return (
                    compare,
                    check_failed(
                        "oracle-convergence",
                        &format!("slope in [{}, {}]", ORACLE_SLOPE.0, ORACLE_SLOPE.1),
                        e,
                    ),
                )
            }
        }
    }
    let slope = verify::fit_log_slope(&hs, &errs);
    (
        compare,
        check_interval("oracle-convergence", slope, ORACLE_SLOPE.0, ORACLE_SLOPE.1),
    )
}

fn gauge_check(cfg: &RunConfig, sol: &LiouvilleSolution<f64>) -> CheckResult {
    let (chi, psi) = match (sol.chi(), sol.psi()) {
        (ChiralFamily::Table(c), ChiralFamily::Table(p)) => (c, p),
        _ => {
            return check_failed(
                "gauge-invariance",
                &format!("<= {GAUGE_TOL:e}"),
                "solution is not table-backed",
            )
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    let ts = cfg.grid.t_nodes();
    let xs = cfg.grid.x_nodes();
    for _ in 0..4 {
        let a: f64 = rng.gen_range(0.5..2.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        let c: f64 = rng.gen_range(-1.0..1.0);
        let d = (1.0 + b * c) / a;
        let chi_g = chi.recombine(a, b, c, d);
        let psi_g = psi.recombine(a, -b, -c, d);
        let regauged = match LiouvilleSolution::build_with(
            ChiralFamily::Table(chi_g),
            ChiralFamily::Table(psi_g),
            sol.mass(),
            sol.pairing(),
            cfg.tolerances.wronskian_drift,
        ) {
            Ok(s) => s,
            Err(e) => return check_failed("gauge-invariance", &format!("<= {GAUGE_TOL:e}"), e),
        };
        let picks = [
            (0usize, 0usize),
            (ts.len() - 1, xs.len() - 1),
            (ts.len() / 2, xs.len() / 3),
            (ts.len() / 3, xs.len() - 1),
        ];
        for (i, j) in picks {
            let (t, x) = (ts[i.min(ts.len() - 1)], xs[j.min(xs.len() - 1)]);
            match (sol.eval_f(t, x), regauged.eval_f(t, x)) {
                (Ok(u), Ok(v)) => worst = worst.max((u.f - v.f).abs()),
                (Err(e), _) | (_, Err(e)) => {
                    return check_failed("gauge-invariance", &format!("<= {GAUGE_TOL:e}"), e)
                }
            }
        }
    }
    check_upper("gauge-invariance", worst, GAUGE_TOL)
}

/// Interior half of the field grid: the FD residual differences the
/// assembled field, and near the light-cone corners the cancellation noise
/// of the chiral products (amplified by 1/delta^2) would mask the
/// truncation signal being measured.
fn fd_residual_grid(grid: &SpacetimeGrid<f64>) -> SpacetimeGrid<f64> {
    SpacetimeGrid::new(
        grid.t_min / 2.0,
        grid.t_max / 2.0,
        (grid.nt / 2).max(2),
        grid.x_min / 2.0,
        grid.x_max / 2.0,
        (grid.nx / 2).max(2),
    )
}

// --- track ---------------------------------------------------------------------

fn cmd_track(args: TrackArgs) -> i32 {
    let cfg = match resolve_config(&args.common) {
        Ok(cfg) => cfg,
        Err(e) => return config_fail("track", &RunConfig::default(), e),
    };
    if let Err(e) = cfg.validate() {
        return config_fail("track", &cfg, e);
    }
    let (scan_lo, scan_hi, n_scan) = match parse_range_spec(&args.x_scan) {
        Ok(v) => v,
        Err(e) => return config_fail("track", &cfg, format!("--x-scan: {e}")),
    };
    let t_range = {
        let parts: Vec<&str> = args.t_range.split(':').collect();
        let parsed = (|| -> Option<(f64, f64)> {
            if parts.len() != 2 {
                return None;
            }
            Some((parts[0].trim().parse().ok()?, parts[1].trim().parse().ok()?))
        })();
        match parsed {
            Some(v) if v.0 < v.1 => v,
            _ => {
                return config_fail(
                    "track",
                    &cfg,
                    format!("--t-range: expected `lo:hi`, got `{}`", args.t_range),
                )
            }
        }
    };

    let mut mb = ManifestBuilder::new("track", &cfg);
    let params = cfg.params();
    let family = |f1: &str, f2: &str| AnalyticChiral::from_texts(f1, f2, params.clone());
    let (chi, psi) = match (
        family(&args.chi1, &args.chi2),
        family(&args.psi1, &args.psi2),
    ) {
        (Ok(c), Ok(p)) => (c, p),
        (Err(e), _) | (_, Err(e)) => {
            let msg = e.to_string();
            eprintln!("error: {msg}");
            mb.finish(&cfg.out_dir, Some(msg));
            return EXIT_CONFIG;
        }
    };

    // Wronskian validation on the hull the curves can reach
    let hull_lo = (scan_lo + t_range.0).min(scan_lo - t_range.1);
    let hull_hi = (scan_hi + t_range.1).max(scan_hi - t_range.0);
    for (name, fam) in [("chi", &chi), ("psi", &psi)] {
        match fam.wronskian_deviation(hull_lo, hull_hi, TRACK_WRONSKIAN_POINTS) {
            Ok(dev) => {
                mb.check(check_upper(
                    &format!("wronskian-{name}"),
                    dev,
                    TRACK_WRONSKIAN_TOL,
                ));
                if dev > TRACK_WRONSKIAN_TOL {
                    let msg = format!(
                        "{name} pair violates the unit-Wronskian requirement: max deviation {dev:e}"
                    );
                    eprintln!("error: {msg}");
                    mb.finish(&cfg.out_dir, Some(msg));
                    return EXIT_CONFIG;
                }
            }
            Err(e) => {
                let msg = e.to_string();
                eprintln!("error: {msg}");
                mb.finish(&cfg.out_dir, Some(msg));
                return EXIT_CONFIG;
            }
        }
    }

    let sol = match LiouvilleSolution::build_with(
        ChiralFamily::Analytic(chi),
        ChiralFamily::Analytic(psi),
        cfg.mass,
        Pairing::Cross,
        TRACK_WRONSKIAN_TOL,
    ) {
        Ok(s) => s,
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {msg}");
            mb.finish(&cfg.out_dir, Some(msg));
            return EXIT_CONFIG;
        }
    };

    let seeds = match mb.timed("seed scan", || {
        zero_tracker::find_seed_zeros(&sol, args.t0, (scan_lo, scan_hi), n_scan)
    }) {
        Ok(s) => s,
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {msg}");
            mb.finish(&cfg.out_dir, Some(msg));
            return EXIT_NUMERIC;
        }
    };
    mb.stage("seeds found", seeds.len() as u64);

    let mut tracked = 0u64;
    for (k, &x_seed) in seeds.iter().enumerate() {
        let curve = match mb.timed(&format!("track curve {k}"), || {
            zero_tracker::track(&sol, (args.t0, x_seed), t_range, args.ht)
        }) {
            Ok(c) => c,
            // Newton stalls and flat gradients are genuine invariant
            // violations; domain exits never reach here (they truncate)
            Err(e) => {
                let msg = e.to_string();
                eprintln!("error: {msg}");
                mb.finish(&cfg.out_dir, Some(msg));
                return EXIT_NUMERIC;
            }
        };
        let report = zero_tracker::lemma_report(&curve);
        let write = artifacts::write_text(
            &cfg.out_dir.join(format!("curve_{k}.csv")),
            &artifacts::curve_csv(&curve),
        )
        .and_then(|_| artifacts::write_json(&cfg.out_dir.join(format!("lemma_{k}.json")), &report));
        if let Err(e) = write {
            eprintln!("error: {e}");
            mb.finish(&cfg.out_dir, Some(e.to_string()));
            return EXIT_NUMERIC;
        }
        mb.check(check_upper(
            &format!("curve-{k}-max-abs-f"),
            report.max_abs_f,
            1e-8,
        ));
        tracked += 1;
    }
    mb.stage("curves tracked", tracked);
    mb.finish(&cfg.out_dir, None);
    EXIT_OK
}

// --- probe ---------------------------------------------------------------------

fn cmd_probe(args: ProbeArgs) -> i32 {
    let mut cfg = match resolve_config(&args.common) {
        Ok(cfg) => cfg,
        Err(e) => return config_fail("probe", &RunConfig::default(), e),
    };
    if let Some(eps) = &args.eps {
        cfg.eps = match parse_eps_list(eps) {
            Ok(v) => v,
            Err(e) => return config_fail("probe", &cfg, e),
        };
    }
    if let Err(e) = cfg.validate() {
        return config_fail("probe", &cfg, e);
    }
    // eps validation is a config concern: exit 1 on a malformed list
    if cfg.eps.is_empty()
        || cfg.eps.windows(2).any(|w| w[1] >= w[0])
        || cfg.eps.last().copied().unwrap_or(0.0) <= 0.0
    {
        return config_fail(
            "probe",
            &cfg,
            "eps list must be strictly decreasing and positive".into(),
        );
    }
    let data = match load_data(&cfg) {
        Ok(d) => d,
        Err(e) => return config_fail("probe", &cfg, e),
    };
    let parse_eta = |text: &str| crate::expr::parse::<f64>(text);
    let (eta_phi, eta_pi) = match (parse_eta(&args.eta_phi), parse_eta(&args.eta_pi)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return config_fail("probe", &cfg, e.to_string()),
    };

    let mut mb = ManifestBuilder::new("probe", &cfg);
    let probe_cfg = ProbeConfig {
        grid: &cfg.grid,
        spec: SeminormSpec::default(),
        settings: cfg.pipeline_settings(Pairing::Cross),
        restrict_points: 1024,
    };

    let forward = mb.timed("forward probe", || {
        verify::continuity_probe(&data, &eta_phi, &eta_pi, &cfg.eps, &probe_cfg)
    });
    let inverse = mb.timed("inverse probe", || {
        verify::inverse_continuity_probe(&data, &eta_phi, &eta_pi, &cfg.eps, &probe_cfg)
    });
    let (forward, inverse) = match (forward, inverse) {
        (Ok(f), Ok(i)) => (f, i),
        (Err(e), _) | (_, Err(e)) => {
            let msg = e.to_string();
            eprintln!("error: {msg}");
            mb.finish(&cfg.out_dir, Some(msg));
            return EXIT_NUMERIC;
        }
    };

    let write = artifacts::write_text(
        &cfg.out_dir.join("probe_forward.csv"),
        &artifacts::probe_csv(&forward),
    )
    .and_then(|_| {
        artifacts::write_text(
            &cfg.out_dir.join("probe_inverse.csv"),
            &artifacts::probe_csv(&inverse),
        )
    });
    if let Err(e) = write {
        eprintln!("error: {e}");
        mb.finish(&cfg.out_dir, Some(e.to_string()));
        return EXIT_NUMERIC;
    }

    let fwd_ok = monotone_decreasing(&forward);
    let inv_ok = monotone_decreasing(&inverse);
    mb.check(CheckResult {
        name: "forward-monotone".into(),
        pass: fwd_ok,
        measured: forward
            .last()
            .map(|r| r.output_deviation)
            .unwrap_or(f64::NAN),
        requirement: "strictly decreasing in eps".into(),
        note: None,
    });
    mb.check(CheckResult {
        name: "inverse-monotone".into(),
        pass: inv_ok,
        measured: inverse
            .last()
            .map(|r| r.output_deviation)
            .unwrap_or(f64::NAN),
        requirement: "strictly decreasing in eps".into(),
        note: None,
    });
    let manifest = mb.finish(&cfg.out_dir, None);
    if manifest.passed {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}

// --- dumps ---------------------------------------------------------------------

fn cmd_dump_potentials(args: DumpPotentialsArgs) -> i32 {
    let cfg = match resolve_config(&args.common) {
        Ok(cfg) => cfg,
        Err(e) => return config_fail("dump-potentials", &RunConfig::default(), e),
    };
    if let Err(e) = cfg.validate() {
        return config_fail("dump-potentials", &cfg, e);
    }
    let (lo, hi, n) = match parse_range_spec(&args.range) {
        Ok(v) if v.0 < v.1 && v.2 >= 2 => v,
        Ok(_) => {
            return config_fail(
                "dump-potentials",
                &cfg,
                "--range must satisfy lo < hi, n >= 2".into(),
            )
        }
        Err(e) => return config_fail("dump-potentials", &cfg, e),
    };
    let data = match load_data(&cfg) {
        Ok(d) => d,
        Err(e) => return config_fail("dump-potentials", &cfg, e),
    };
    let mut mb = ManifestBuilder::new("dump-potentials", &cfg);
    let pots = match crate::potentials::compute_potentials(data, cfg.mass) {
        Ok(p) => p,
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {msg}");
            mb.finish(&cfg.out_dir, Some(msg));
            return EXIT_CONFIG;
        }
    };
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let x = lo + (hi - lo) * (i as f64 / (n - 1) as f64);
        match (pots.u(x), pots.w(x)) {
            (Ok(u), Ok(w)) => rows.push((x, u, w)),
            (Err(e), _) | (_, Err(e)) => {
                let msg = e.to_string();
                eprintln!("error: {msg}");
                mb.finish(&cfg.out_dir, Some(msg));
                return EXIT_NUMERIC;
            }
        }
    }
    mb.stage("potential samples", rows.len() as u64);
    if let Err(e) = artifacts::write_text(
        &cfg.out_dir.join("potentials.csv"),
        &artifacts::potentials_csv(&rows),
    ) {
        eprintln!("error: {e}");
        mb.finish(&cfg.out_dir, Some(e.to_string()));
        return EXIT_NUMERIC;
    }
    mb.finish(&cfg.out_dir, None);
    EXIT_OK
}

fn cmd_dump_chirals(args: DumpChiralsArgs) -> i32 {
    let cfg = match resolve_config(&args.common) {
        Ok(cfg) => cfg,
        Err(e) => return config_fail("dump-chirals", &RunConfig::default(), e),
    };
    if let Err(e) = cfg.validate() {
        return config_fail("dump-chirals", &cfg, e);
    }
    let data = match load_data(&cfg) {
        Ok(d) => d,
        Err(e) => return config_fail("dump-chirals", &cfg, e),
    };

    let mut mb = ManifestBuilder::new("dump-chirals", &cfg);
    let settings = cfg.pipeline_settings(Pairing::Cross);
    let (sol, diag) = match pipeline::solve(&data, &cfg.grid, &settings) {
        Ok(v) => v,
        Err(e) => {
            let code = pipeline_exit(&e);
            eprintln!("error: {e}");
            mb.finish(&cfg.out_dir, Some(e.to_string()));
            return code;
        }
    };
    mb.manifest.wronskian_drift_chi = Some(diag.chi_drift);
    mb.manifest.wronskian_drift_psi = Some(diag.psi_drift);

    let (chi, psi) = match (sol.chi(), sol.psi()) {
        (ChiralFamily::Table(c), ChiralFamily::Table(p)) => (c.clone(), p.clone()),
        _ => unreachable!("pipeline builds table-backed families"),
    };
    let (c_range, p_range) = (chi.range(), psi.range());
    let (mut lo, mut hi) = (c_range.0.max(p_range.0), c_range.1.min(p_range.1));
    let mut n = 1001usize;
    if let Some(spec) = &args.range {
        match parse_range_spec(spec) {
            Ok((a, b, m)) if a < b && m >= 2 => {
                if a < lo || b > hi {
                    return config_fail(
                        "dump-chirals",
                        &cfg,
                        format!("--range must lie within the integrated intersection [{lo}, {hi}]"),
                    );
                }
                lo = a;
                hi = b;
                n = m;
            }
            Ok(_) => {
                return config_fail(
                    "dump-chirals",
                    &cfg,
                    "--range must satisfy lo < hi, n >= 2".into(),
                )
            }
            Err(e) => return config_fail("dump-chirals", &cfg, e),
        }
    }
    let s_values: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * (i as f64 / (n - 1) as f64))
        .collect();
    let csv = artifacts::chirals_csv(&s_values, &psi, &chi);
    mb.stage("chiral samples", n as u64);
    if let Err(e) = artifacts::write_text(&cfg.out_dir.join("chirals.csv"), &csv) {
        eprintln!("error: {e}");
        mb.finish(&cfg.out_dir, Some(e.to_string()));
        return EXIT_NUMERIC;
    }
    mb.finish(&cfg.out_dir, None);
    EXIT_OK
}
