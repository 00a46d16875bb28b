//! Quantities extracted from trajectories and from the spectrum.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{assemble_hamiltonian, band_info, to_angular, to_ghz, Frame, SystemParams};
use crate::propagator::{eig_sym, StateVector, Trajectory};

/// Default validity threshold on |c_emitter| for the rate extraction.
pub const DEFAULT_EPS_C: f64 = 1e-6;
/// Default Zeno-time fit window in ns.
pub const DEFAULT_FIT_WINDOW_NS: f64 = 1.0;
/// Minimum emitter weight for a level outside the band to count as bound.
pub const BOUND_WEIGHT_THRESHOLD: f64 = 0.01;
/// Margin (rad/ns) by which a bound level must clear the band edge.
pub const BAND_EDGE_MARGIN: f64 = 1e-9;

/// A scalar sampled on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub times_ns: Vec<f64>,
    pub values: Vec<f64>,
}

impl Series {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<(f64, f64)> {
        Some((*self.times_ns.last()?, *self.values.last()?))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times_ns.iter().copied().zip(self.values.iter().copied())
    }
}

/// P(t) = |c_emitter(t)|².
pub fn survival_probability(traj: &Trajectory) -> Series {
    Series {
        times_ns: traj.times_ns.clone(),
        values: traj.states.iter().map(StateVector::survival).collect(),
    }
}

/// |c_l(t)|² for every resonator; one row per grid point.
pub fn site_populations(traj: &Trajectory) -> Vec<Vec<f64>> {
    traj.states
        .iter()
        .map(|s| s.c_sites().iter().map(|c| c.norm_sqr()).collect())
        .collect()
}

/// Entanglement between the emitter and the resonator it couples to.
///
/// Tracing out every other resonator leaves an X-shaped two-qubit state
/// spanned by |e0>, |g1> and |g0>; its Wootters concurrence is 2|c_e c_center|.
pub fn concurrence(state: &StateVector, center_index: usize) -> f64 {
    2.0 * state.c_emitter().norm() * state.amplitudes[center_index].norm()
}

pub fn concurrence_qubit_site0(traj: &Trajectory) -> Series {
    let center = traj.params.center_index();
    Series {
        times_ns: traj.times_ns.clone(),
        values: traj.states.iter().map(|s| concurrence(s, center)).collect(),
    }
}

/// Instantaneous frequency shift Ω(t) and decay rate Γ(t), both rad/ns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSeries {
    pub times_ns: Vec<f64>,
    pub omega_shift: Vec<f64>,
    pub gamma: Vec<f64>,
    pub valid: Vec<bool>,
    pub frame: Frame,
}

/// Ω = −Im(ċ_e/c_e) and Γ = −Re(ċ_e/c_e) from the equation of motion.
///
/// With ċ_e = −i(h_ee c_e + g c_center) and z = c_center c̄_e / |c_e|²:
/// Ω = h_ee + g Re z, Γ = −g Im z. Points where |c_e| < `eps_c` are flagged
/// invalid and carry zeros.
pub fn decay_rates(traj: &Trajectory, eps_c: f64) -> RateSeries {
    let params = &traj.params;
    let level = params.emitter_level();
    let center = params.center_index();
    let n = traj.len();
    let mut out = RateSeries {
        times_ns: traj.times_ns.clone(),
        omega_shift: Vec::with_capacity(n),
        gamma: Vec::with_capacity(n),
        valid: Vec::with_capacity(n),
        frame: params.frame,
    };
    for (state, &g_ghz) in traj.states.iter().zip(&traj.coupling_at) {
        let ce = state.c_emitter();
        if ce.norm() < eps_c {
            out.omega_shift.push(0.0);
            out.gamma.push(0.0);
            out.valid.push(false);
            continue;
        }
        let g = to_angular(g_ghz);
        let z: Complex64 = state.amplitudes[center] * ce.conj() / ce.norm_sqr();
        out.omega_shift.push(level + g * z.re);
        out.gamma.push(-g * z.im);
        out.valid.push(true);
    }
    out
}

/// Result of fitting 1 − P(t) = (t/τz)² on [0, window].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZenoFit {
    pub tau_z_ns: f64,
    pub window_ns: f64,
    pub slope: f64,
    /// τz refitted with half and double the window, where the data allow it.
    pub window_sensitivity: Vec<WindowFit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowFit {
    pub window_ns: f64,
    pub tau_z_ns: f64,
}

fn quadratic_slope(p: &Series, window_ns: f64) -> Result<f64> {
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in p.iter().take_while(|&(t, _)| t <= window_ns * (1.0 + 1e-12)) {
        let x = t * t;
        sxy += x * (1.0 - v);
        sxx += x * x;
    }
    if sxx == 0.0 {
        return Err(Error::invalid("window_ns", "no samples with t > 0 inside the window"));
    }
    let slope = sxy / sxx;
    if slope.is_nan() || slope <= 0.0 {
        return Err(Error::DegenerateFit { slope });
    }
    Ok(slope)
}

/// Least-squares fit (through the origin) of 1 − P against t².
pub fn fit_zeno_time(p: &Series, window_ns: f64) -> Result<ZenoFit> {
    let (t0, p0) = p.iter().next().ok_or_else(|| Error::invalid("series", "empty"))?;
    if t0 != 0.0 || (p0 - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("series", "must start at t = 0 with P = 1"));
    }
    let t_max = p.last().map(|(t, _)| t).unwrap_or(0.0);
    if window_ns.is_nan() || window_ns <= 0.0 || window_ns > t_max * (1.0 + 1e-12) {
        return Err(Error::invalid(
            "window_ns",
            format!("{window_ns} must lie in (0, {t_max}]"),
        ));
    }
    let slope = quadratic_slope(p, window_ns)?;
    let window_sensitivity = [0.5 * window_ns, 2.0 * window_ns]
        .into_iter()
        .filter(|&w| w <= t_max * (1.0 + 1e-12))
        .filter_map(|w| {
            quadratic_slope(p, w).ok().map(|s| WindowFit {
                window_ns: w,
                tau_z_ns: 1.0 / s.sqrt(),
            })
        })
        .collect();
    Ok(ZenoFit {
        tau_z_ns: 1.0 / slope.sqrt(),
        window_ns,
        slope,
        window_sensitivity,
    })
}

/// Survival after `n` ideal measurements spaced by τ, given P(τ).
pub fn ideal_measurement_survival(p_tau: f64, n: u32) -> f64 {
    p_tau.powi(n as i32)
}

/// A (group of degenerate) eigenlevel(s) of the on-coupling Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    /// Lab-frame ordinary frequency.
    pub energy_ghz: f64,
    pub emitter_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStateReport {
    pub exists: bool,
    /// Energy of the bound level with the largest emitter weight.
    pub energy_ghz: Option<f64>,
    pub emitter_weight: f64,
    /// Long-time average of P(t): Σ over distinct levels of (emitter weight)².
    pub trapped_population_prediction: f64,
    pub bound_levels: Vec<Level>,
}

/// Finds emitter-dressed levels outside the resonator band and predicts the
/// infinite-time average of the survival probability.
///
/// Degenerate eigenvalues are grouped before squaring weights so that the
/// prediction does not depend on the basis chosen inside a degenerate space.
/// With zero coupling the emitter is itself an eigenstate and counts as bound.
pub fn bound_state_analysis(params: &SystemParams) -> Result<BoundStateReport> {
    params.validate()?;
    let h = assemble_hamiltonian(params, params.g0_ghz);
    let eig = eig_sym(&h)?;
    let degeneracy_tol = 1e-9 * h.max_abs().max(1.0);

    let mut groups: Vec<(f64, f64)> = Vec::new();
    for (m, &lambda) in eig.eigenvalues.iter().enumerate() {
        let w = eig.eigenvectors.get(0, m).powi(2);
        match groups.last_mut() {
            Some((e, acc)) if (lambda - *e).abs() <= degeneracy_tol => *acc += w,
            _ => groups.push((lambda, w)),
        }
    }
    let trapped: f64 = groups.iter().map(|(_, w)| w * w).sum::<f64>().clamp(0.0, 1.0);

    let band = band_info(params);
    let offset = params.frame_offset();
    let decoupled = params.g0_ghz == 0.0;
    let bound_levels: Vec<Level> = groups
        .iter()
        .map(|&(lambda, w)| Level {
            energy_ghz: to_ghz(lambda + offset),
            emitter_weight: w.min(1.0),
        })
        .filter(|lvl| {
            if decoupled {
                lvl.emitter_weight > 0.5
            } else {
                let outside = to_angular(band.distance_outside_ghz(lvl.energy_ghz));
                outside > BAND_EDGE_MARGIN && lvl.emitter_weight > BOUND_WEIGHT_THRESHOLD
            }
        })
        .collect();

    let best = bound_levels
        .iter()
        .copied()
        .max_by(|a, b| a.emitter_weight.total_cmp(&b.emitter_weight));
    Ok(BoundStateReport {
        exists: best.is_some(),
        energy_ghz: best.map(|l| l.energy_ghz),
        emitter_weight: best.map_or(0.0, |l| l.emitter_weight),
        trapped_population_prediction: trapped,
        bound_levels,
    })
}
