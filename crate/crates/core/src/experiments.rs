//! Free decay, single quench and periodic quench runs, plus parameter sweeps.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{protocol_segments, ProtocolKind, SystemParams};
use crate::observables::{
    concurrence_qubit_site0, decay_rates, fit_zeno_time, ideal_measurement_survival, site_populations,
    survival_probability, RateSeries, Series, ZenoFit, DEFAULT_EPS_C, DEFAULT_FIT_WINDOW_NS,
};
use crate::propagator::{Propagator, StateVector, Trajectory};

pub const DEFAULT_CYCLES: usize = 5;
/// Relative margin separating a Zeno or anti-Zeno verdict from a neutral one.
pub const DEFAULT_ZENO_MARGIN: f64 = 0.05;

/// Everything derived from one uninterrupted decay.
#[derive(Debug, Clone)]
pub struct FreeDecayRun {
    pub trajectory: Trajectory,
    pub survival: Series,
    pub sites: Vec<Vec<f64>>,
    pub rates: RateSeries,
    pub zeno_fit: ZenoFit,
}

pub fn run_free_decay(params: &SystemParams, t_end_ns: f64, dt_ns: f64) -> Result<FreeDecayRun> {
    run_free_decay_with_window(params, t_end_ns, dt_ns, DEFAULT_FIT_WINDOW_NS)
}

pub fn run_free_decay_with_window(
    params: &SystemParams,
    t_end_ns: f64,
    dt_ns: f64,
    window_ns: f64,
) -> Result<FreeDecayRun> {
    let protocol = protocol_segments(ProtocolKind::Free { total_ns: t_end_ns }, params.g0_ghz)?;
    let trajectory = Propagator::new(*params)?.run(&protocol, dt_ns, &StateVector::excited(params.n_sites))?;
    let survival = survival_probability(&trajectory);
    let zeno_fit = fit_zeno_time(&survival, window_ns.min(t_end_ns))?;
    Ok(FreeDecayRun {
        sites: site_populations(&trajectory),
        rates: decay_rates(&trajectory, DEFAULT_EPS_C),
        survival,
        zeno_fit,
        trajectory,
    })
}

/// On (τ) / off (δ) / on (τ) run.
#[derive(Debug, Clone)]
pub struct SingleQuenchRun {
    pub trajectory: Trajectory,
    pub survival: Series,
    pub concurrence: Series,
    /// max over s ∈ [0, τ] of |P(τ + δ + s) − P(s)|.
    pub shape_distance: f64,
    /// Same comparison after rescaling the second stage to start at 1:
    /// max over s of |P(τ + δ + s) / P(τ + δ) − P(s)|.
    pub normalized_shape_distance: f64,
    /// 1 − P(τ).
    pub first_stage_drop: f64,
    /// P(τ + δ) − P(2τ + δ).
    pub second_stage_drop: f64,
}

pub fn run_single_quench(params: &SystemParams, tau_ns: f64, delta_ns: f64, dt_ns: f64) -> Result<SingleQuenchRun> {
    let protocol = protocol_segments(ProtocolKind::SingleQuench { tau_ns, delta_ns }, params.g0_ghz)?;
    let mut prop = Propagator::new(*params)?;
    let excited = StateVector::excited(params.n_sites);
    let trajectory = prop.run(&protocol, dt_ns, &excited)?;

    // Both on-stages are evaluated on the same offsets from their own start.
    let after_on = prop.evolve(&excited, params.g0_ghz, tau_ns)?;
    let restart = prop.evolve(&after_on, 0.0, delta_ns)?;
    let eig = prop.eigensystem(params.g0_ghz)?;
    let first = eig.project(&excited.amplitudes);
    let second = eig.project(&restart.amplitudes);
    let mut offsets: Vec<f64> = (0..).map(|j| j as f64 * dt_ns).take_while(|&s| s < tau_ns).collect();
    offsets.push(tau_ns);
    let p_restart = restart.survival();
    let mut shape_distance = 0.0_f64;
    let mut normalized_shape_distance = 0.0_f64;
    for &s in &offsets {
        let p1 = eig.synthesize_emitter(&first, s).norm_sqr();
        let p2 = eig.synthesize_emitter(&second, s).norm_sqr();
        shape_distance = shape_distance.max((p2 - p1).abs());
        if p_restart > 0.0 {
            normalized_shape_distance = normalized_shape_distance.max((p2 / p_restart - p1).abs());
        }
    }
    let p_tau = eig.synthesize_emitter(&first, tau_ns).norm_sqr();
    let p_end = eig.synthesize_emitter(&second, tau_ns).norm_sqr();

    Ok(SingleQuenchRun {
        survival: survival_probability(&trajectory),
        concurrence: concurrence_qubit_site0(&trajectory),
        trajectory,
        shape_distance,
        normalized_shape_distance,
        first_stage_drop: 1.0 - p_tau,
        second_stage_drop: p_restart - p_end,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "QZE")]
    Zeno,
    #[serde(rename = "AZE")]
    AntiZeno,
    #[serde(rename = "neutral")]
    Neutral,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Zeno => "QZE",
            Verdict::AntiZeno => "AZE",
            Verdict::Neutral => "neutral",
        })
    }
}

/// Compares the quenched and un-quenched survival at equal accumulated on-time.
pub fn classify_zeno(p_quench: f64, p_free: f64, margin: f64) -> Verdict {
    if p_quench > p_free * (1.0 + margin) {
        Verdict::Zeno
    } else if p_quench < p_free * (1.0 - margin) {
        Verdict::AntiZeno
    } else {
        Verdict::Neutral
    }
}

/// Survival values at the end of the k-th on-stage (on-time kτ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageEnd {
    pub k: usize,
    pub on_time_ns: f64,
    pub p_quench: f64,
    pub p_free: f64,
    pub p_ideal: f64,
}

/// Periodic quench run projected onto the accumulated on-time axis.
#[derive(Debug, Clone)]
pub struct ZenoRunResult {
    pub tau_ns: f64,
    pub delta_ns: f64,
    pub cycles: usize,
    /// Accumulated coupling-on time; off intervals are excised.
    pub on_time_axis_ns: Vec<f64>,
    pub p_quench: Vec<f64>,
    /// Uninterrupted decay at the same on-time.
    pub p_free: Vec<f64>,
    /// Ideal projective measurements every τ: P(τ)^k · P(s) at on-time kτ + s.
    pub p_ideal: Vec<f64>,
    pub stage_ends: Vec<StageEnd>,
    /// C(t) on the full, uncompressed timeline.
    pub concurrence_full: Series,
    pub trajectory: Trajectory,
    pub verdict: Verdict,
}

impl ZenoRunResult {
    /// Largest |p_quench − p_ideal| over the stage ends.
    pub fn measurement_deviation(&self) -> f64 {
        self.stage_ends
            .iter()
            .map(|s| (s.p_quench - s.p_ideal).abs())
            .fold(0.0, f64::max)
    }

    pub fn final_stage(&self) -> &StageEnd {
        self.stage_ends.last().expect("at least two on-stages")
    }
}

pub fn run_periodic_quench(
    params: &SystemParams,
    tau_ns: f64,
    delta_ns: f64,
    cycles: usize,
    dt_ns: f64,
) -> Result<ZenoRunResult> {
    run_periodic_quench_with_margin(params, tau_ns, delta_ns, cycles, dt_ns, DEFAULT_ZENO_MARGIN)
}

pub fn run_periodic_quench_with_margin(
    params: &SystemParams,
    tau_ns: f64,
    delta_ns: f64,
    cycles: usize,
    dt_ns: f64,
    margin: f64,
) -> Result<ZenoRunResult> {
    let protocol = protocol_segments(
        ProtocolKind::Periodic {
            tau_ns,
            delta_ns,
            cycles,
        },
        params.g0_ghz,
    )?;
    let mut prop = Propagator::new(*params)?;
    let excited = StateVector::excited(params.n_sites);
    let trajectory = prop.run(&protocol, dt_ns, &excited)?;

    let mut on_time_axis_ns = Vec::new();
    let mut p_quench = Vec::new();
    let mut on_ends = Vec::new();
    let starts = protocol.start_times();
    let mut on_before = 0.0;
    for (i, seg) in protocol.segments().iter().enumerate() {
        if !seg.is_on() {
            continue;
        }
        let range = trajectory.segment_indices(i);
        let skip_first = !on_time_axis_ns.is_empty();
        for idx in range.clone().skip(usize::from(skip_first)) {
            on_time_axis_ns.push(on_before + (trajectory.times_ns[idx] - starts[i]));
            p_quench.push(trajectory.states[idx].survival());
        }
        on_before += seg.duration_ns;
        on_ends.push((on_before, trajectory.states[range.end - 1].survival()));
    }
    if on_time_axis_ns.is_empty() {
        // g0 = 0: the emitter never couples, so its population is frozen at
        // the initial value over the whole on-time budget.
        let total_on = (cycles + 1) as f64 * tau_ns;
        let frozen = trajectory.states[0].survival();
        on_time_axis_ns = (0..)
            .map(|j| j as f64 * dt_ns)
            .take_while(|&t| t < total_on - 1e-9 * dt_ns)
            .chain(std::iter::once(total_on))
            .collect();
        p_quench = vec![frozen; on_time_axis_ns.len()];
    }

    let eig = prop.eigensystem(params.g0_ghz)?;
    let free_coeffs = eig.project(&excited.amplitudes);
    let p_free_at = |t: f64| eig.synthesize_emitter(&free_coeffs, t).norm_sqr();
    let p_tau = p_free_at(tau_ns);

    let p_free: Vec<f64> = on_time_axis_ns.iter().map(|&t| p_free_at(t)).collect();
    let p_ideal: Vec<f64> = on_time_axis_ns
        .iter()
        .map(|&t| {
            let k = (t / tau_ns + 1e-9).floor();
            let s = (t - k * tau_ns).max(0.0);
            ideal_measurement_survival(p_tau, k as u32) * p_free_at(s)
        })
        .collect();

    let stages = cycles + 1;
    let stage_ends: Vec<StageEnd> = (1..=stages)
        .map(|k| {
            let on_time_ns = k as f64 * tau_ns;
            let p_free_k = p_free_at(on_time_ns);
            // merged schedules (δ = 0) have no interior boundaries to read from
            let p_quench_k = if on_ends.len() == stages {
                on_ends[k - 1].1
            } else {
                p_free_k
            };
            StageEnd {
                k,
                on_time_ns,
                p_quench: p_quench_k,
                p_free: p_free_k,
                p_ideal: ideal_measurement_survival(p_tau, k as u32),
            }
        })
        .collect();

    let last = stage_ends.last().copied().expect("cycles >= 1");
    Ok(ZenoRunResult {
        tau_ns,
        delta_ns,
        cycles,
        verdict: classify_zeno(last.p_quench, last.p_free, margin),
        on_time_axis_ns,
        p_quench,
        p_free,
        p_ideal,
        stage_ends,
        concurrence_full: concurrence_qubit_site0(&trajectory),
        trajectory,
    })
}

/// Axis values of a sweep; rows are the Cartesian product in
/// (tau, delta, omega0) lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub tau_ns: Vec<f64>,
    pub delta_ns: Vec<f64>,
    pub omega0_ghz: Vec<f64>,
}

impl SweepGrid {
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.tau_ns.len() * self.delta_ns.len() * self.omega0_ghz.len());
        for &tau in &self.tau_ns {
            for &delta in &self.delta_ns {
                for &omega0 in &self.omega0_ghz {
                    out.push((tau, delta, omega0));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub verdict: Verdict,
    pub p_quench: f64,
    pub p_free: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau_ns: f64,
    pub delta_ns: f64,
    pub omega0_ghz: f64,
    /// Failure message when this grid point could not be simulated.
    pub outcome: std::result::Result<SweepOutcome, String>,
}

/// Runs the periodic quench at every grid point. Points are simulated in
/// parallel; rows come back in grid order and a failing point does not stop
/// the others.
pub fn sweep(template: &SystemParams, grid: &SweepGrid, cycles: usize, dt_ns: f64) -> Result<Vec<SweepRow>> {
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::invalid("grid", "every axis needs at least one value"));
    }
    Ok(points
        .into_par_iter()
        .map(|(tau_ns, delta_ns, omega0_ghz)| {
            let params = template.with_omega0(omega0_ghz);
            let outcome = params
                .validate()
                .and_then(|_| run_periodic_quench(&params, tau_ns, delta_ns, cycles, dt_ns))
                .map(|r| {
                    let last = r.final_stage();
                    SweepOutcome {
                        verdict: r.verdict,
                        p_quench: last.p_quench,
                        p_free: last.p_free,
                    }
                })
                .map_err(|e| e.to_string());
            SweepRow {
                tau_ns,
                delta_ns,
                omega0_ghz,
                outcome,
            }
        })
        .collect())
}
