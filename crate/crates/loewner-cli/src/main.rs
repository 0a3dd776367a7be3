// Validation code writes `!(x > y)` on purpose: a NaN fails the inner
// comparison and is rejected with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Batch front end: scenario configs in, CSV/JSON/SVG artifacts out.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage/config error,
//! 3 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use loewner::{
    chordal_solve, decreasing_chain, duality_transform, estimate_universal_constants,
    evolution_family, reverse_family, solve_decreasing, solve_forward, solve_reverse_endpoint,
    trace_hull_with_radius, verify_herglotz, ChordalDirection, ConstantsPlan, ConstantsReport,
    DiskPoint, Error as LoewnerError, HalfPlanePoint, HerglotzField, SolverConfig,
    VerificationReport,
};

use loewner_cli::config::{ComplexSpec, ScenarioConfig};
use loewner_cli::emit::{
    duality_csv, hull_csv, hull_svg, status_label, trajectory_csv, write_text, DualityRow,
    TrajectoryRow, HULL_HEADER,
};

const EXIT_VERIFICATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "loewner",
    version,
    about = "Deterministic Loewner evolutions: trajectories, chains, hulls, and verification reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for emitted artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Override the solver relative tolerance (absolute = tol * 1e-2).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Override the verification seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Emit an SVG plot where supported.
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Forward trajectories of the evolution family over a time window.
    Evolve,
    /// Reverse-family values with data at the right endpoint.
    Reverse,
    /// Decreasing-evolution samples g_t(z) (native chordal or disk).
    Chain,
    /// Hull tip trace with capacity estimates.
    Hull,
    /// Run verification checks and emit a JSON report bundle.
    Verify,
    /// Compare the reverse family against the time-reversed forward family.
    Duality,
}

struct Failure {
    code: u8,
    message: String,
}

fn config_failure(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

fn classify(err: LoewnerError) -> Failure {
    let code = match err {
        LoewnerError::StepLimit { .. }
        | LoewnerError::IllConditionedFit
        | LoewnerError::ChainNotConverged { .. } => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    };
    Failure {
        code,
        message: err.to_string(),
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("LOEWNER_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| config_failure("missing required flag --config"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_failure(format!("cannot read {}: {e}", path.display())))?;
    let scenario = ScenarioConfig::parse(&text).map_err(config_failure)?;
    let cfg = scenario.solver_config(cli.tol).map_err(config_failure)?;
    match cli.command {
        Command::Evolve => cmd_evolve(cli, &scenario, &cfg),
        Command::Reverse => cmd_reverse(cli, &scenario, &cfg),
        Command::Chain => cmd_chain(cli, &scenario, &cfg),
        Command::Hull => cmd_hull(cli, &scenario, &cfg),
        Command::Verify => cmd_verify(cli, &scenario, &cfg),
        Command::Duality => cmd_duality(cli, &scenario, &cfg),
    }
}

fn disk_field(scenario: &ScenarioConfig) -> Result<HerglotzField, Failure> {
    let field = scenario.build_field().map_err(config_failure)?;
    if field.is_half_plane() {
        return Err(config_failure(
            "this command needs a disk-side field; set `transport = true` on the chordal field",
        ));
    }
    Ok(field)
}

fn disk_points(specs: &[ComplexSpec]) -> Result<Vec<DiskPoint>, Failure> {
    specs
        .iter()
        .map(|spec| DiskPoint::new(spec.to_complex()).map_err(classify))
        .collect()
}

fn window_times(t_start: f64, t_end: f64, samples: usize) -> Vec<f64> {
    if t_end <= t_start || samples <= 1 {
        return vec![t_start];
    }
    let n = samples.max(2);
    (0..n)
        .map(|i| t_start + (t_end - t_start) * i as f64 / (n - 1) as f64)
        .collect()
}

fn out_path(cli: &Cli, configured: &Option<String>, default_name: &str) -> PathBuf {
    cli.out
        .join(configured.clone().unwrap_or_else(|| default_name.to_string()))
}

fn exit_for_statuses<'a>(statuses: impl Iterator<Item = &'a str>) -> u8 {
    if statuses.into_iter().any(|s| s == "step_limit") {
        EXIT_NUMERIC
    } else {
        0
    }
}

fn cmd_evolve(cli: &Cli, scenario: &ScenarioConfig, cfg: &SolverConfig) -> Result<u8, Failure> {
    let section = scenario
        .evolve
        .as_ref()
        .ok_or_else(|| config_failure("config error: missing [evolve] section"))?;
    let field = disk_field(scenario)?;
    let points = disk_points(&section.points)?;
    let times = window_times(
        section.window.t_start,
        section.window.t_end,
        section.window.samples,
    );
    let rows: Result<Vec<Vec<TrajectoryRow>>, Failure> = points
        .par_iter()
        .map(|&z| {
            let mut out = Vec::with_capacity(times.len());
            for &t in &times {
                let traj =
                    solve_forward(&field, z, section.window.t_start, t, cfg).map_err(classify)?;
                out.push(TrajectoryRow {
                    t,
                    z0: z.value(),
                    w: traj.end_value(),
                    status: status_label(traj.status).to_string(),
                });
            }
            Ok(out)
        })
        .collect();
    let rows: Vec<TrajectoryRow> = rows?.into_iter().flatten().collect();
    write_text(
        &out_path(cli, &scenario.output.csv, "evolve.csv"),
        &trajectory_csv(&rows),
    )
    .map_err(config_failure)?;
    Ok(exit_for_statuses(rows.iter().map(|r| r.status.as_str())))
}

fn cmd_reverse(cli: &Cli, scenario: &ScenarioConfig, cfg: &SolverConfig) -> Result<u8, Failure> {
    let section = scenario
        .reverse
        .as_ref()
        .ok_or_else(|| config_failure("config error: missing [reverse] section"))?;
    let field = disk_field(scenario)?;
    let points = disk_points(&section.points)?;
    let times = window_times(
        section.window.t_start,
        section.window.t_end,
        section.window.samples,
    );
    let rows: Result<Vec<Vec<TrajectoryRow>>, Failure> = points
        .par_iter()
        .map(|&z| {
            let mut out = Vec::with_capacity(times.len());
            for &s in &times {
                let w = solve_reverse_endpoint(&field, z, s, section.window.t_end, cfg)
                    .map_err(classify)?;
                out.push(TrajectoryRow {
                    t: s,
                    z0: z.value(),
                    w: w.value(),
                    status: "completed".to_string(),
                });
            }
            Ok(out)
        })
        .collect();
    let rows: Vec<TrajectoryRow> = rows?.into_iter().flatten().collect();
    write_text(
        &out_path(cli, &scenario.output.csv, "reverse.csv"),
        &trajectory_csv(&rows),
    )
    .map_err(config_failure)?;
    Ok(0)
}

fn cmd_chain(cli: &Cli, scenario: &ScenarioConfig, cfg: &SolverConfig) -> Result<u8, Failure> {
    let section = scenario
        .chain
        .as_ref()
        .ok_or_else(|| config_failure("config error: missing [chain] section"))?;
    if section.times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(config_failure("config error: chain times must increase"));
    }
    let rows: Vec<TrajectoryRow> = if scenario.field.kind == "chordal" && !scenario.field.transport
    {
        // native half-plane decreasing evolution
        let lambda = scenario.build_driver().map_err(config_failure)?;
        let points: Result<Vec<HalfPlanePoint>, Failure> = section
            .points
            .iter()
            .map(|spec| HalfPlanePoint::new(spec.to_complex()).map_err(classify))
            .collect();
        let points = points?;
        let nested: Result<Vec<Vec<TrajectoryRow>>, Failure> = points
            .par_iter()
            .map(|&z| {
                let mut out = Vec::with_capacity(section.times.len());
                for &t in &section.times {
                    let traj = chordal_solve(&lambda, z, t, ChordalDirection::Grow, cfg)
                        .map_err(classify)?;
                    out.push(TrajectoryRow {
                        t,
                        z0: z.value(),
                        w: traj.end_value(),
                        status: status_label(traj.status).to_string(),
                    });
                }
                Ok(out)
            })
            .collect();
        nested?.into_iter().flatten().collect()
    } else {
        let field = disk_field(scenario)?;
        let points = disk_points(&section.points)?;
        let nested: Result<Vec<Vec<TrajectoryRow>>, Failure> = points
            .par_iter()
            .map(|&z| {
                let mut out = Vec::with_capacity(section.times.len());
                for &t in &section.times {
                    let traj = solve_decreasing(&field, z, t, cfg).map_err(classify)?;
                    out.push(TrajectoryRow {
                        t,
                        z0: z.value(),
                        w: traj.end_value(),
                        status: status_label(traj.status).to_string(),
                    });
                }
                Ok(out)
            })
            .collect();
        nested?.into_iter().flatten().collect()
    };
    write_text(
        &out_path(cli, &scenario.output.csv, "chain.csv"),
        &trajectory_csv(&rows),
    )
    .map_err(config_failure)?;
    Ok(exit_for_statuses(rows.iter().map(|r| r.status.as_str())))
}

fn cmd_hull(cli: &Cli, scenario: &ScenarioConfig, cfg: &SolverConfig) -> Result<u8, Failure> {
    let section = scenario
        .hull
        .as_ref()
        .ok_or_else(|| config_failure("config error: missing [hull] section"))?;
    if scenario.field.kind != "chordal" {
        return Err(config_failure(
            "config error: hull tracing needs a chordal field",
        ));
    }
    let lambda = scenario.build_driver().map_err(config_failure)?;
    if section.times.is_empty() {
        write_text(
            &out_path(cli, &scenario.output.csv, "hull.csv"),
            &format!("{HULL_HEADER}\n"),
        )
        .map_err(config_failure)?;
        return Ok(0);
    }
    let trace = trace_hull_with_radius(
        &lambda,
        &section.times,
        section.epsilon,
        section.radius,
        cfg,
    )
    .map_err(classify)?;
    write_text(
        &out_path(cli, &scenario.output.csv, "hull.csv"),
        &hull_csv(&trace),
    )
    .map_err(config_failure)?;
    if cli.svg || scenario.output.svg.is_some() {
        write_text(
            &out_path(cli, &scenario.output.svg, "hull.svg"),
            &hull_svg(&trace),
        )
        .map_err(config_failure)?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct HerglotzSummary {
    sample_count: usize,
    violations: usize,
}

#[derive(Serialize)]
struct VerifyBundle {
    seed: u64,
    reports: Vec<VerificationReport>,
    constants: Option<ConstantsReport>,
    herglotz: Option<HerglotzSummary>,
    all_pass: bool,
}

fn cmd_verify(cli: &Cli, scenario: &ScenarioConfig, cfg: &SolverConfig) -> Result<u8, Failure> {
    let section = scenario
        .verify
        .as_ref()
        .ok_or_else(|| config_failure("config error: missing [verify] section"))?;
    let field = disk_field(scenario)?;
    let horizon = field.horizon();
    let window = section.window.unwrap_or([0.0, 0.9 * horizon]);
    let big_t = section.big_t.unwrap_or(window[1]);
    let seed = cli.seed.or(section.seed).unwrap_or(7_394_201);
    let grid = loewner::family::default_spatial_grid();
    let triples = loewner::family::default_time_triples((window[0], window[1]));
    let chain = decreasing_chain(field.clone(), *cfg).map_err(classify)?;

    let mut reports: Vec<VerificationReport> = Vec::new();
    let mut constants: Option<ConstantsReport> = None;
    let mut herglotz: Option<HerglotzSummary> = None;
    for check in &section.checks {
        match check.as_str() {
            "semigroup" => {
                let tol = section.semigroup_tol.unwrap_or(1e-8);
                let fwd = evolution_family(field.clone(), *cfg).map_err(classify)?;
                let mut r =
                    loewner::check_semigroup(&fwd, &grid, &triples, tol).map_err(classify)?;
                r.check_name = "semigroup_forward".into();
                reports.push(r);
                let rev = reverse_family(field.clone(), *cfg).map_err(classify)?;
                let mut r =
                    loewner::check_semigroup(&rev, &grid, &triples, tol).map_err(classify)?;
                r.check_name = "semigroup_reverse".into();
                reports.push(r);
            }
            "pde_residual" => {
                let h = section.pde_h.unwrap_or(1e-4);
                let points = [Complex64::new(0.25, 0.15), Complex64::new(-0.3, 0.2)];
                let times = [0.45 * (window[0] + window[1])];
                reports.push(
                    loewner::check_pde_residual(&chain, &field, &points, &times, h, 1e-6)
                        .map_err(classify)?,
                );
            }
            "characteristics" => {
                let starts: Vec<DiskPoint> = (0..8)
                    .map(|k| {
                        let theta = std::f64::consts::TAU * (k as f64 + 0.5) / 8.0;
                        DiskPoint::new(Complex64::from_polar(0.35, theta)).unwrap()
                    })
                    .collect();
                let t_grid: Vec<f64> = (1..=5)
                    .map(|i| window[0] + (window[1] - window[0]) * 0.16 * i as f64)
                    .collect();
                reports.push(
                    loewner::check_characteristics(&chain, &field, &starts, &t_grid, 1e-8)
                        .map_err(classify)?,
                );
            }
            "duality_roundtrip" => {
                let pairs: Vec<(f64, f64)> = (0..6)
                    .map(|i| {
                        let s = big_t * i as f64 / 8.0;
                        (s, (s + big_t / 3.0).min(big_t))
                    })
                    .collect();
                reports.push(
                    loewner::check_duality_roundtrip(&field, big_t, &grid, &pairs, cfg, 1e-7)
                        .map_err(classify)?,
                );
            }
            "inclusion" => {
                let (mut s, mut t) = (0.25 * window[1], 0.75 * window[1]);
                if section.corrupt_time_swap {
                    std::mem::swap(&mut s, &mut t);
                }
                reports.push(loewner::check_inclusion(&chain, s, t, 16).map_err(classify)?);
            }
            "herglotz" => {
                let n = section.herglotz_samples.unwrap_or(2000);
                let report = verify_herglotz(&field, n);
                herglotz = Some(HerglotzSummary {
                    sample_count: report.sample_count,
                    violations: report.violations.len(),
                });
            }
            "constants" => {
                let plan = ConstantsPlan {
                    seed,
                    samples: section.constant_samples.unwrap_or(10_000),
                    ..ConstantsPlan::default()
                };
                constants = Some(estimate_universal_constants(&plan));
            }
            other => {
                return Err(config_failure(format!(
                    "config error: unknown check name `{other}`"
                )));
            }
        }
    }
    let all_pass = reports.iter().all(|r| r.pass)
        && herglotz.as_ref().is_none_or(|h| h.violations == 0);
    let bundle = VerifyBundle {
        seed,
        reports,
        constants,
        herglotz,
        all_pass,
    };
    let json = serde_json::to_string_pretty(&bundle)
        .map_err(|e| config_failure(format!("serialization error: {e}")))?;
    write_text(
        &out_path(cli, &scenario.output.json, "verify.json"),
        &format!("{json}\n"),
    )
    .map_err(config_failure)?;
    Ok(if all_pass { 0 } else { EXIT_VERIFICATION })
}

fn cmd_duality(cli: &Cli, scenario: &ScenarioConfig, cfg: &SolverConfig) -> Result<u8, Failure> {
    let section = scenario
        .duality
        .as_ref()
        .ok_or_else(|| config_failure("config error: missing [duality] section"))?;
    let field = disk_field(scenario)?;
    let reverse = reverse_family(field.clone(), *cfg).map_err(classify)?;
    let reversed_field = field.time_reversed(section.big_t).map_err(classify)?;
    let forward = evolution_family(reversed_field, *cfg).map_err(classify)?;
    let transformed = duality_transform(&forward, section.big_t).map_err(classify)?;
    let mut rows = Vec::with_capacity(section.pairs.len() * section.points.len());
    for &[s, t] in &section.pairs {
        if !(0.0 <= s && s <= t && t <= section.big_t * (1.0 + 1e-14)) {
            return Err(config_failure(format!(
                "config error: duality pair ({s}, {t}) must satisfy 0 <= s <= t <= big_t"
            )));
        }
        for spec in &section.points {
            let z = spec.to_complex();
            let direct = reverse.evaluate(s, t, z).map_err(classify)?;
            let via = transformed.evaluate(s, t, z).map_err(classify)?;
            rows.push(DualityRow {
                s,
                t,
                z,
                direct,
                transformed: via,
            });
        }
    }
    write_text(
        &out_path(cli, &scenario.output.csv, "duality.csv"),
        &duality_csv(&rows),
    )
    .map_err(config_failure)?;
    Ok(0)
}
