use std::time::Instant;

use quench_core::experiments::*;
use quench_core::observables::{bound_state_analysis, BoundStateReport};
use quench_core::{band_info, protocol_segments, BandInfo, ProtocolKind};
use serde::Serialize;

use crate::args::{Command, Common};
use crate::config::{read_grid, resolve_params};
use crate::error::{CliError, CliResult};
use crate::output::{format_number as num, OutputDir, RunManifest};

pub fn run(command: &Command) -> CliResult<RunManifest> {
    match command {
        Command::Free { common, t_end, dt } => free(common, *t_end, *dt),
        Command::Quench { common, tau, delta, dt } => quench(common, *tau, *delta, *dt),
        Command::Zeno {
            common,
            tau,
            delta,
            cycles,
            dt,
        } => zeno(common, *tau, *delta, *cycles, *dt),
        Command::BoundState { common } => bound_state(common),
        Command::Sweep {
            common,
            grid_file,
            cycles,
            dt,
        } => sweep_cmd(common, grid_file, *cycles, *dt),
    }
}

fn free(common: &Common, t_end: f64, dt: f64) -> CliResult<RunManifest> {
    let start = Instant::now();
    let params = resolve_params(common)?;
    let run = run_free_decay(&params, t_end, dt)?;
    let mut out = OutputDir::create(&common.out_dir)?;

    out.csv(
        "population.csv",
        &header(&["t_ns", "P"]),
        run.survival.iter().map(|(t, p)| [num(t), num(p)]),
    )?;
    let mut sites_header = vec!["t_ns".to_string()];
    sites_header.extend((0..params.n_sites).map(|l| format!("site_{l}")));
    out.csv(
        "sites.csv",
        &sites_header,
        run.trajectory.times_ns.iter().zip(&run.sites).map(|(&t, pops)| {
            std::iter::once(num(t))
                .chain(pops.iter().map(|&p| num(p)))
                .collect::<Vec<_>>()
        }),
    )?;
    let rates = &run.rates;
    out.csv(
        "rates.csv",
        &header(&["t_ns", "omega", "gamma", "valid"]),
        (0..rates.times_ns.len()).map(|i| {
            [
                num(rates.times_ns[i]),
                num(rates.omega_shift[i]),
                num(rates.gamma[i]),
                rates.valid[i].to_string(),
            ]
        }),
    )?;
    out.json("zeno_fit.json", &run.zeno_fit)?;

    println!(
        "free decay: tau_z = {} ns, P({} ns) = {}",
        num(run.zeno_fit.tau_z_ns),
        num(t_end),
        num(run.survival.last().map_or(f64::NAN, |(_, p)| p))
    );
    let manifest = RunManifest::new("free", params, format!("free decay for {t_end} ns"))
        .with_protocol(&run.trajectory.protocol, dt)
        .with_elapsed(start.elapsed());
    out.finish(manifest)
}

#[derive(Serialize)]
struct ShapeReport {
    tau_ns: f64,
    delta_ns: f64,
    shape_distance: f64,
    normalized_shape_distance: f64,
    first_stage_drop: f64,
    second_stage_drop: f64,
}

fn quench(common: &Common, tau: f64, delta: f64, dt: f64) -> CliResult<RunManifest> {
    let start = Instant::now();
    let params = resolve_params(common)?;
    let run = run_single_quench(&params, tau, delta, dt)?;
    let mut out = OutputDir::create(&common.out_dir)?;

    let traj = &run.trajectory;
    out.csv(
        "quench.csv",
        &header(&["t_ns", "P", "C", "g_active_ghz"]),
        (0..traj.len()).map(|i| {
            [
                num(traj.times_ns[i]),
                num(run.survival.values[i]),
                num(run.concurrence.values[i]),
                num(traj.coupling_at[i]),
            ]
        }),
    )?;
    out.json(
        "shape_distance.json",
        &ShapeReport {
            tau_ns: tau,
            delta_ns: delta,
            shape_distance: run.shape_distance,
            normalized_shape_distance: run.normalized_shape_distance,
            first_stage_drop: run.first_stage_drop,
            second_stage_drop: run.second_stage_drop,
        },
    )?;

    println!(
        "single quench: first-stage drop {}, second-stage drop {}, shape distance {}",
        num(run.first_stage_drop),
        num(run.second_stage_drop),
        num(run.shape_distance)
    );
    let manifest = RunManifest::new(
        "quench",
        params,
        format!("single quench tau = {tau} ns, delta = {delta} ns"),
    )
    .with_protocol(&traj.protocol, dt)
    .with_elapsed(start.elapsed());
    out.finish(manifest)
}

#[derive(Serialize)]
struct VerdictReport<'a> {
    verdict: Verdict,
    tau_ns: f64,
    delta_ns: f64,
    cycles: usize,
    margin: f64,
    final_on_time_ns: f64,
    p_quench: f64,
    p_free: f64,
    p_ideal: f64,
    measurement_deviation: f64,
    stage_ends: &'a [StageEnd],
}

fn zeno(common: &Common, tau: f64, delta: f64, cycles: usize, dt: f64) -> CliResult<RunManifest> {
    let start = Instant::now();
    let params = resolve_params(common)?;
    let run = run_periodic_quench(&params, tau, delta, cycles, dt)?;
    let mut out = OutputDir::create(&common.out_dir)?;

    out.csv(
        "zeno.csv",
        &header(&["on_time_ns", "p_quench", "p_free", "p_ideal"]),
        (0..run.on_time_axis_ns.len()).map(|i| {
            [
                num(run.on_time_axis_ns[i]),
                num(run.p_quench[i]),
                num(run.p_free[i]),
                num(run.p_ideal[i]),
            ]
        }),
    )?;
    out.csv(
        "concurrence.csv",
        &header(&["t_ns", "C"]),
        run.concurrence_full.iter().map(|(t, c)| [num(t), num(c)]),
    )?;
    let last = run.final_stage();
    out.json(
        "verdict.json",
        &VerdictReport {
            verdict: run.verdict,
            tau_ns: tau,
            delta_ns: delta,
            cycles,
            margin: DEFAULT_ZENO_MARGIN,
            final_on_time_ns: last.on_time_ns,
            p_quench: last.p_quench,
            p_free: last.p_free,
            p_ideal: last.p_ideal,
            measurement_deviation: run.measurement_deviation(),
            stage_ends: &run.stage_ends,
        },
    )?;

    println!(
        "periodic quench: {} (p_quench {} vs p_free {} at on-time {} ns)",
        run.verdict,
        num(last.p_quench),
        num(last.p_free),
        num(last.on_time_ns)
    );
    let manifest = RunManifest::new(
        "zeno",
        params,
        format!("periodic quench tau = {tau} ns, delta = {delta} ns, {cycles} cycles"),
    )
    .with_protocol(&run.trajectory.protocol, dt)
    .with_elapsed(start.elapsed());
    out.finish(manifest)
}

#[derive(Serialize)]
struct BoundStateFile {
    #[serde(flatten)]
    report: BoundStateReport,
    band: BandInfo,
}

fn bound_state(common: &Common) -> CliResult<RunManifest> {
    let start = Instant::now();
    let params = resolve_params(common)?;
    let report = bound_state_analysis(&params)?;
    let mut out = OutputDir::create(&common.out_dir)?;
    println!(
        "bound state: exists = {}, trapped population prediction = {}",
        report.exists,
        num(report.trapped_population_prediction)
    );
    out.json(
        "bound_state.json",
        &BoundStateFile {
            report,
            band: band_info(&params),
        },
    )?;
    let manifest =
        RunManifest::new("bound-state", params, "spectral analysis at g0".to_string()).with_elapsed(start.elapsed());
    out.finish(manifest)
}

fn sweep_cmd(common: &Common, grid_file: &std::path::Path, cycles: usize, dt: f64) -> CliResult<RunManifest> {
    let start = Instant::now();
    let params = resolve_params(common)?;
    let grid = read_grid(grid_file)?;
    // Reject schedule-level problems before spending time on the grid.
    protocol_segments(
        ProtocolKind::Periodic {
            tau_ns: grid.tau_ns[0],
            delta_ns: grid.delta_ns[0],
            cycles,
        },
        params.g0_ghz,
    )?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CliError::Config(format!("dt {dt} must be positive")));
    }
    let rows = sweep(&params, &grid, cycles, dt)?;
    let mut out = OutputDir::create(&common.out_dir)?;

    let mut failures = Vec::new();
    out.csv(
        "sweep.csv",
        &header(&["tau_ns", "delta_ns", "omega0_ghz", "verdict", "p_quench", "p_free"]),
        rows.iter().map(|row| {
            let mut cells = vec![num(row.tau_ns), num(row.delta_ns), num(row.omega0_ghz)];
            match &row.outcome {
                Ok(o) => cells.extend([o.verdict.to_string(), num(o.p_quench), num(o.p_free)]),
                Err(msg) => {
                    failures.push(format!(
                        "tau = {}, delta = {}, omega0 = {}: {msg}",
                        row.tau_ns, row.delta_ns, row.omega0_ghz
                    ));
                    cells.extend(["error".to_string(), String::new(), String::new()]);
                }
            }
            cells
        }),
    )?;

    let count = |v: Verdict| {
        rows.iter()
            .filter(|r| matches!(&r.outcome, Ok(o) if o.verdict == v))
            .count()
    };
    println!(
        "sweep: {} points, {} QZE, {} AZE, {} neutral, {} failed",
        rows.len(),
        count(Verdict::Zeno),
        count(Verdict::AntiZeno),
        count(Verdict::Neutral),
        failures.len()
    );
    let manifest = RunManifest::new(
        "sweep",
        params,
        format!(
            "periodic quench sweep over {} x {} x {} grid, {cycles} cycles",
            grid.tau_ns.len(),
            grid.delta_ns.len(),
            grid.omega0_ghz.len()
        ),
    )
    .with_dt(dt)
    .with_elapsed(start.elapsed());
    let manifest = out.finish(manifest)?;
    if failures.is_empty() {
        Ok(manifest)
    } else {
        Err(CliError::Numerical(format!(
            "{} grid points failed:\n  {}",
            failures.len(),
            failures.join("\n  ")
        )))
    }
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}
