//! Exact time evolution in the single-excitation sector.
//!
//! The coupling is piecewise constant, so each segment is propagated with the
//! spectral decomposition of its Hamiltonian:
//! `c(t0 + s) = V exp(−iΛs) Vᵀ c(t0)`. The sampling step only decides where the
//! trajectory is recorded; it introduces no discretisation error.

mod eigen;

pub use eigen::{eig_sym, Eigensystem, MAX_SWEEPS, RELATIVE_TOLERANCE};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{assemble_hamiltonian, QuenchProtocol, SystemParams};

/// Default sampling step in ns.
pub const DEFAULT_DT_NS: f64 = 0.01;

/// Amplitudes in the basis `[|e, vac>, |g, 1_0>, ..., |g, 1_{N-1}>]` at a time stamp.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
    pub time_ns: f64,
}

impl StateVector {
    /// Excited emitter, empty resonators, t = 0.
    pub fn excited(n_sites: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_sites + 1];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        StateVector {
            amplitudes,
            time_ns: 0.0,
        }
    }

    pub fn new(amplitudes: Vec<Complex64>, time_ns: f64) -> Self {
        assert!(!amplitudes.is_empty(), "state needs an emitter amplitude");
        StateVector { amplitudes, time_ns }
    }

    pub fn c_emitter(&self) -> Complex64 {
        self.amplitudes[0]
    }

    pub fn c_sites(&self) -> &[Complex64] {
        &self.amplitudes[1..]
    }

    pub fn n_sites(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// |c_emitter|².
    pub fn survival(&self) -> f64 {
        self.c_emitter().norm_sqr()
    }
}

impl Eigensystem {
    pub fn for_coupling(params: &SystemParams, coupling_ghz: f64) -> Result<Self> {
        let mut eig = eig_sym(&assemble_hamiltonian(params, coupling_ghz))?;
        eig.source_coupling_ghz = Some(coupling_ghz);
        Ok(eig)
    }

    /// Components of `amps` along each eigenvector, `Vᵀ c`.
    pub fn project(&self, amps: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(amps.len(), self.dim(), "state and Hamiltonian dimensions differ");
        (0..self.dim())
            .map(|m| {
                self.eigenvectors
                    .column(m)
                    .iter()
                    .zip(amps)
                    .fold(Complex64::new(0.0, 0.0), |acc, (v, c)| acc + c * v)
            })
            .collect()
    }

    /// `V exp(−iΛs) coeffs`.
    pub fn synthesize(&self, coeffs: &[Complex64], s: f64) -> Vec<Complex64> {
        let n = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (m, (&lambda, &d)) in self.eigenvalues.iter().zip(coeffs).enumerate() {
            let w = d * Complex64::from_polar(1.0, -lambda * s);
            for (o, v) in out.iter_mut().zip(self.eigenvectors.column(m)) {
                *o += w * v;
            }
        }
        out
    }

    /// Emitter amplitude only, `Σ_m V[0,m] exp(−iλ_m s) coeffs_m`.
    pub fn synthesize_emitter(&self, coeffs: &[Complex64], s: f64) -> Complex64 {
        self.eigenvalues
            .iter()
            .zip(coeffs)
            .enumerate()
            .fold(Complex64::new(0.0, 0.0), |acc, (m, (&lambda, &d))| {
                // same operation order as `synthesize`, so both agree bit for bit
                acc + d * Complex64::from_polar(1.0, -lambda * s) * self.eigenvectors.get(0, m)
            })
    }
}

/// Evolves `state` for `duration_ns` under the Hamiltonian diagonalised by `eig`.
///
/// Negative durations run the evolution backwards.
pub fn evolve_segment(state: &StateVector, eig: &Eigensystem, duration_ns: f64) -> StateVector {
    if duration_ns == 0.0 {
        return state.clone();
    }
    let coeffs = eig.project(&state.amplitudes);
    StateVector {
        amplitudes: eig.synthesize(&coeffs, duration_ns),
        time_ns: state.time_ns + duration_ns,
    }
}

/// Projective measurement of the excited emitter.
///
/// Returns the probability of finding the emitter excited together with the
/// collapsed state: excited emitter (real amplitude 1), empty resonators, same
/// time stamp.
pub fn ideal_measure(state: &StateVector) -> (f64, StateVector) {
    let mut reset = StateVector::excited(state.n_sites());
    reset.time_ns = state.time_ns;
    (state.survival(), reset)
}

/// Per-coupling cache of eigensystems for one parameter set.
#[derive(Debug, Clone)]
pub struct Propagator {
    params: SystemParams,
    cache: Vec<Eigensystem>,
}

impl Propagator {
    pub fn new(params: SystemParams) -> Result<Self> {
        params.validate()?;
        Ok(Propagator {
            params,
            cache: Vec::new(),
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn eigensystem(&mut self, coupling_ghz: f64) -> Result<&Eigensystem> {
        let idx = match self
            .cache
            .iter()
            .position(|e| e.source_coupling_ghz == Some(coupling_ghz))
        {
            Some(i) => i,
            None => {
                self.cache.push(Eigensystem::for_coupling(&self.params, coupling_ghz)?);
                self.cache.len() - 1
            }
        };
        Ok(&self.cache[idx])
    }

    pub fn cached_couplings(&self) -> Vec<f64> {
        self.cache.iter().filter_map(|e| e.source_coupling_ghz).collect()
    }

    pub fn evolve(&mut self, state: &StateVector, coupling_ghz: f64, duration_ns: f64) -> Result<StateVector> {
        let eig = self.eigensystem(coupling_ghz)?;
        Ok(evolve_segment(state, eig, duration_ns))
    }

    /// Samples a whole protocol into a trajectory.
    pub fn run(&mut self, protocol: &QuenchProtocol, dt_ns: f64, initial: &StateVector) -> Result<Trajectory> {
        if !(dt_ns.is_finite() && dt_ns > 0.0) {
            return Err(Error::invalid("dt_ns", format!("{dt_ns} must be positive")));
        }
        if initial.amplitudes.len() != self.params.dim() {
            return Err(Error::invalid(
                "initial",
                format!(
                    "state has {} amplitudes, system needs {}",
                    initial.amplitudes.len(),
                    self.params.dim()
                ),
            ));
        }
        if (initial.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("initial", "state is not normalised"));
        }

        let starts = protocol.start_times();
        let mut traj = Trajectory {
            times_ns: Vec::new(),
            states: Vec::new(),
            coupling_at: Vec::new(),
            segment_of: Vec::new(),
            protocol: protocol.clone(),
            params: self.params,
        };
        let mut current = StateVector::new(initial.amplitudes.clone(), 0.0);

        for (idx, (seg, &t0)) in protocol.segments().iter().zip(&starts).enumerate() {
            let eig = self.eigensystem(seg.coupling_ghz)?;
            let coeffs = eig.project(&current.amplitudes);
            let cutoff = seg.duration_ns - 1e-9 * dt_ns;

            traj.push(t0, current.amplitudes.clone(), seg.coupling_ghz, idx);
            let mut j = 1usize;
            loop {
                let s = j as f64 * dt_ns;
                if s >= cutoff {
                    break;
                }
                traj.push(t0 + s, eig.synthesize(&coeffs, s), seg.coupling_ghz, idx);
                j += 1;
            }
            current = StateVector {
                amplitudes: eig.synthesize(&coeffs, seg.duration_ns),
                time_ns: t0 + seg.duration_ns,
            };
        }
        let last = protocol.segments().len() - 1;
        let end = starts[last] + protocol.segments()[last].duration_ns;
        traj.push(end, current.amplitudes, protocol.segments()[last].coupling_ghz, last);
        Ok(traj)
    }
}

/// Evolves `initial` through `protocol`, recording the state every `dt_ns`
/// inside each segment and exactly once at every segment boundary.
pub fn propagate(
    params: &SystemParams,
    protocol: &QuenchProtocol,
    dt_ns: f64,
    initial: &StateVector,
) -> Result<Trajectory> {
    Propagator::new(*params)?.run(protocol, dt_ns, initial)
}

/// A sampled run. `coupling_at[i]` and `segment_of[i]` describe the interval
/// `[t_i, t_{i+1})`; the final point inherits the last segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times_ns: Vec<f64>,
    pub states: Vec<StateVector>,
    pub coupling_at: Vec<f64>,
    pub segment_of: Vec<usize>,
    pub protocol: QuenchProtocol,
    pub params: SystemParams,
}

impl Trajectory {
    fn push(&mut self, t: f64, amplitudes: Vec<Complex64>, coupling: f64, segment: usize) {
        self.times_ns.push(t);
        self.states.push(StateVector { amplitudes, time_ns: t });
        self.coupling_at.push(coupling);
        self.segment_of.push(segment);
    }

    pub fn len(&self) -> usize {
        self.times_ns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_ns.is_empty()
    }

    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory always holds the initial state")
    }

    /// Largest deviation of ‖state‖² from 1 along the run.
    pub fn max_norm_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Indices of the grid points covering segment `idx`, including the point
    /// at its closing boundary.
    pub fn segment_indices(&self, idx: usize) -> std::ops::Range<usize> {
        let start = self.segment_of.partition_point(|&s| s < idx);
        let end = self.segment_of.partition_point(|&s| s <= idx);
        start..(end + 1).min(self.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{protocol_segments, Frame, ProtocolKind, Segment};
    use proptest::prelude::*;

    fn reference() -> SystemParams {
        SystemParams::reference()
    }

    #[test]
    fn zero_duration_is_identity() {
        let p = reference();
        let eig = Eigensystem::for_coupling(&p, p.g0_ghz).unwrap();
        let s = StateVector::excited(p.n_sites);
        assert_eq!(evolve_segment(&s, &eig, 0.0), s);
    }

    #[test]
    fn rabi_oscillation_of_single_cavity() {
        let p = reference().with_sites(1).with_hop(0.0);
        let eig = Eigensystem::for_coupling(&p, p.g0_ghz).unwrap();
        let g = p.g0();
        let s0 = StateVector::excited(1);
        for k in 0..200 {
            let t = 0.1 * k as f64;
            let s = evolve_segment(&s0, &eig, t);
            assert!((s.survival() - (g * t).cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn decoupled_emitter_keeps_its_population() {
        let p = reference();
        let mut prop = Propagator::new(p).unwrap();
        let mut s = prop.evolve(&StateVector::excited(p.n_sites), p.g0_ghz, 1.3).unwrap();
        let before = s.c_emitter().norm();
        for _ in 0..10 {
            s = prop.evolve(&s, 0.0, 0.7).unwrap();
            assert!((s.c_emitter().norm() - before).abs() < 1e-12);
        }
    }

    #[test]
    fn never_coupled_run_keeps_full_survival() {
        let p = reference();
        let proto = QuenchProtocol::new(vec![Segment::new(5.0, 0.0)]).unwrap();
        let traj = propagate(&p, &proto, 0.01, &StateVector::excited(p.n_sites)).unwrap();
        assert!(traj.states.iter().all(|s| (s.survival() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn grid_includes_boundaries_once() {
        let p = reference();
        let proto = protocol_segments(
            ProtocolKind::SingleQuench {
                tau_ns: 1.0,
                delta_ns: 2.5,
            },
            p.g0_ghz,
        )
        .unwrap();
        let traj = propagate(&p, &proto, 0.3, &StateVector::excited(p.n_sites)).unwrap();
        assert_eq!(traj.times_ns[0], 0.0);
        assert_eq!(*traj.times_ns.last().unwrap(), 4.5);
        assert!(traj.times_ns.windows(2).all(|w| w[1] > w[0]));
        for b in [1.0, 3.5] {
            assert_eq!(traj.times_ns.iter().filter(|&&t| t == b).count(), 1);
        }
        let i = traj.times_ns.iter().position(|&t| t == 1.0).unwrap();
        assert_eq!(traj.coupling_at[i], 0.0);
        assert_eq!(traj.coupling_at[i - 1], p.g0_ghz);
        assert_eq!(traj.segment_indices(1).start, i);
        assert_eq!(traj.times_ns[traj.segment_indices(1).end - 1], 3.5);
        assert_eq!(*traj.coupling_at.last().unwrap(), p.g0_ghz);
    }

    #[test]
    fn cache_holds_one_entry_per_coupling() {
        let p = reference();
        let proto = protocol_segments(
            ProtocolKind::Periodic {
                tau_ns: 1.0,
                delta_ns: 3.0,
                cycles: 4,
            },
            p.g0_ghz,
        )
        .unwrap();
        let mut prop = Propagator::new(p).unwrap();
        prop.run(&proto, 0.1, &StateVector::excited(p.n_sites)).unwrap();
        assert_eq!(prop.cached_couplings(), vec![p.g0_ghz, 0.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = reference();
        let proto = protocol_segments(ProtocolKind::Free { total_ns: 1.0 }, p.g0_ghz).unwrap();
        let s = StateVector::excited(p.n_sites);
        assert!(propagate(&p, &proto, 0.0, &s).is_err());
        assert!(propagate(&p, &proto, 0.1, &StateVector::excited(3)).is_err());
        let mut bad = s.clone();
        bad.amplitudes[0] = Complex64::new(2.0, 0.0);
        assert!(propagate(&p, &proto, 0.1, &bad).is_err());
    }

    #[test]
    fn measurement_collapses_onto_excited_emitter() {
        let s = StateVector::excited(5);
        let (prob, reset) = ideal_measure(&s);
        assert_eq!(prob, 1.0);
        assert_eq!(reset, s);

        let mut amps = vec![Complex64::new(0.0, 0.0); 6];
        amps[3] = Complex64::new(0.0, 1.0);
        let (prob, reset) = ideal_measure(&StateVector::new(amps, 2.0));
        assert_eq!(prob, 0.0);
        assert_eq!(reset.c_emitter(), Complex64::new(1.0, 0.0));
        assert_eq!(reset.time_ns, 2.0);
    }

    #[test]
    fn chained_measurements_multiply() {
        let p = reference();
        let mut prop = Propagator::new(p).unwrap();
        let mut state = StateVector::excited(p.n_sites);
        let single = prop.evolve(&state, p.g0_ghz, 1.0).unwrap().survival();
        let mut product = 1.0;
        for _ in 0..3 {
            let evolved = prop.evolve(&state, p.g0_ghz, 1.0).unwrap();
            let (prob, reset) = ideal_measure(&evolved);
            product *= prob;
            state = reset;
        }
        assert!((product - single.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn lab_frame_matches_rotating_populations() {
        let p = reference();
        let proto = protocol_segments(
            ProtocolKind::SingleQuench {
                tau_ns: 1.0,
                delta_ns: 2.0,
            },
            p.g0_ghz,
        )
        .unwrap();
        let s = StateVector::excited(p.n_sites);
        let a = propagate(&p, &proto, 0.05, &s).unwrap();
        let b = propagate(&p.with_frame(Frame::Lab), &proto, 0.05, &s).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            for (u, v) in x.amplitudes.iter().zip(&y.amplitudes) {
                assert!((u.norm() - v.norm()).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn segments_compose_and_preserve_norm(t1 in 0.0f64..20.0, t2 in 0.0f64..20.0, g in 0.0f64..0.1) {
            let p = reference();
            let eig = Eigensystem::for_coupling(&p, g).unwrap();
            let s0 = StateVector::excited(p.n_sites);
            let two_step = evolve_segment(&evolve_segment(&s0, &eig, t1), &eig, t2);
            let one_step = evolve_segment(&s0, &eig, t1 + t2);
            for (a, b) in two_step.amplitudes.iter().zip(&one_step.amplitudes) {
                prop_assert!((a - b).norm() <= 1e-11);
            }
            prop_assert!((two_step.norm_sqr() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn backwards_evolution_undoes_forwards(t in 0.0f64..30.0) {
            let p = reference().with_omega0(8.6);
            let eig = Eigensystem::for_coupling(&p, p.g0_ghz).unwrap();
            let s0 = StateVector::excited(p.n_sites);
            let back = evolve_segment(&evolve_segment(&s0, &eig, t), &eig, -t);
            for (a, b) in back.amplitudes.iter().zip(&s0.amplitudes) {
                prop_assert!((a - b).norm() <= 1e-10);
            }
        }
    }
}
