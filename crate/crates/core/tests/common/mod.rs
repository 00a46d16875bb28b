//! Independent reference computations shared by the integration tests.
//!
//! Nothing here goes through the spectral propagator: the stepper applies the
//! Hamiltonian directly from the physical parameters, and the concurrence
//! oracle works on the reduced 4×4 density matrix.

#![allow(dead_code)]

use std::f64::consts::TAU;

use nalgebra::{Complex, Matrix4, SymmetricEigen, SVD};
use quench_core::{Boundary, Complex64, Frame, Segment, SystemParams};

/// `−i H c` assembled site by site.
fn rhs(p: &SystemParams, g_ghz: f64, c: &[Complex64], out: &mut [Complex64]) {
    let n = p.n_sites;
    let (e_level, s_level) = match p.frame {
        Frame::Rotating => (TAU * (p.omega0_ghz - p.omegac_ghz), 0.0),
        Frame::Lab => (TAU * p.omega0_ghz, TAU * p.omegac_ghz),
    };
    let j = TAU * p.hop_ghz;
    let g = TAU * g_ghz;
    let center = 1 + (n - 1) / 2;
    let minus_i = Complex64::new(0.0, -1.0);

    out[0] = minus_i * (c[0] * e_level + c[center] * g);
    for l in 0..n {
        let mut h = c[1 + l] * s_level;
        if l > 0 {
            h -= c[l] * j;
        }
        if l + 1 < n {
            h -= c[2 + l] * j;
        }
        if p.boundary == Boundary::Periodic && n >= 3 {
            if l == 0 {
                h -= c[n] * j;
            }
            if l == n - 1 {
                h -= c[1] * j;
            }
        }
        if 1 + l == center {
            h += c[0] * g;
        }
        out[1 + l] = minus_i * h;
    }
}

fn rk4_step(p: &SystemParams, g_ghz: f64, c: &mut [Complex64], dt: f64, scratch: &mut [Vec<Complex64>; 5]) {
    let [k1, k2, k3, k4, tmp] = scratch;
    rhs(p, g_ghz, c, k1);
    for i in 0..c.len() {
        tmp[i] = c[i] + k1[i] * (0.5 * dt);
    }
    rhs(p, g_ghz, tmp, k2);
    for i in 0..c.len() {
        tmp[i] = c[i] + k2[i] * (0.5 * dt);
    }
    rhs(p, g_ghz, tmp, k3);
    for i in 0..c.len() {
        tmp[i] = c[i] + k3[i] * dt;
    }
    rhs(p, g_ghz, tmp, k4);
    for i in 0..c.len() {
        c[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
    }
}

/// Fixed-step RK4 through a piecewise-constant schedule starting from the
/// excited emitter. Returns the state after every `record_every` steps
/// (time, amplitudes), always including t = 0 and the final time.
pub fn rk4_schedule(
    p: &SystemParams,
    segments: &[Segment],
    dt: f64,
    record_every: usize,
) -> Vec<(f64, Vec<Complex64>)> {
    let dim = p.n_sites + 1;
    let mut c = vec![Complex64::new(0.0, 0.0); dim];
    c[0] = Complex64::new(1.0, 0.0);
    let mut scratch: [Vec<Complex64>; 5] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); dim]);
    let mut out = vec![(0.0, c.clone())];
    let mut t0 = 0.0;
    let mut step_count = 0usize;
    for seg in segments {
        let steps = (seg.duration_ns / dt).round() as usize;
        assert!(
            (steps as f64 * dt - seg.duration_ns).abs() < 1e-9,
            "dt must divide every segment"
        );
        for s in 1..=steps {
            rk4_step(p, seg.coupling_ghz, &mut c, dt, &mut scratch);
            step_count += 1;
            if step_count.is_multiple_of(record_every) {
                out.push((t0 + s as f64 * dt, c.clone()));
            }
        }
        t0 += seg.duration_ns;
    }
    if !step_count.is_multiple_of(record_every) {
        out.push((t0, c.clone()));
    }
    out
}

/// Reduced density matrix of (emitter, central resonator) in the basis
/// |00>, |01>, |10>, |11> with first label the emitter (1 = excited) and second
/// the photon number of the central resonator.
pub fn reduced_density_matrix(amps: &[Complex64], center_index: usize) -> Matrix4<Complex<f64>> {
    let zero = Complex::new(0.0, 0.0);
    // branch where every other resonator is empty
    let mut vac = [zero; 4];
    vac[2] = amps[0];
    vac[1] = amps[center_index];
    let mut rho = Matrix4::from_fn(|i, j| vac[i] * vac[j].conj());
    // branches with the photon elsewhere leave (emitter, center) in |00>
    for (k, a) in amps.iter().enumerate() {
        if k != 0 && k != center_index {
            rho[(0, 0)] += a.norm_sqr();
        }
    }
    rho
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// Writes ρ = Σ_i |v_i><v_i| from its eigendecomposition and uses that the
/// square roots of the eigenvalues of ρ(σy⊗σy)ρ*(σy⊗σy) are the singular
/// values of τ_ij = v_iᵀ (σy⊗σy) v_j.
pub fn wootters_concurrence(rho: &Matrix4<Complex<f64>>) -> f64 {
    let eig = SymmetricEigen::new(*rho);
    let mut v = eig.eigenvectors;
    for (i, &p) in eig.eigenvalues.iter().enumerate() {
        let scale = p.max(0.0).sqrt();
        v.column_mut(i).scale_mut(scale);
    }
    let yy = spin_flip();
    let tau = v.transpose() * yy * v;
    let mut s: Vec<f64> = SVD::new(tau, false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    (s[0] - s[1] - s[2] - s[3]).max(0.0)
}

/// σy ⊗ σy.
pub fn spin_flip() -> Matrix4<Complex<f64>> {
    let z = Complex::new(0.0, 0.0);
    let one = Complex::new(1.0, 0.0);
    Matrix4::new(
        z, z, z, -one, //
        z, z, one, z, //
        z, one, z, z, //
        -one, z, z, z,
    )
}

/// Trapezoidal rule on a possibly non-uniform grid.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(tw, yw)| 0.5 * (tw[1] - tw[0]) * (yw[0] + yw[1]))
        .sum()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
