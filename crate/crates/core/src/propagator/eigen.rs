//! Cyclic Jacobi diagonalisation of real symmetric matrices.

use crate::error::{Error, Result};
use crate::linalg::{ColMatrix, SymMatrix};

/// Sweeps stop once the off-diagonal Frobenius norm falls below this fraction
/// of the full Frobenius norm.
pub const RELATIVE_TOLERANCE: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

/// Ascending eigenvalues and matching orthonormal eigenvectors (as columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ColMatrix,
    /// Coupling (GHz) of the Hamiltonian this decomposes, when known.
    pub source_coupling_ghz: Option<f64>,
}

impl Eigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// ‖V Λ Vᵀ − H‖ in the max norm.
    pub fn reconstruction_error(&self, h: &SymMatrix) -> f64 {
        let n = self.dim();
        let v = &self.eigenvectors;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let r: f64 = (0..n).map(|m| v.get(i, m) * self.eigenvalues[m] * v.get(j, m)).sum();
                worst = worst.max((r - h.get(i, j)).abs());
            }
        }
        worst
    }

    /// ‖Vᵀ V − I‖ in the max norm.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = self
                    .eigenvectors
                    .column(a)
                    .iter()
                    .zip(self.eigenvectors.column(b))
                    .map(|(x, y)| x * y)
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Diagonalises a real symmetric matrix.
///
/// Eigenvalues come back ascending; each eigenvector is normalised and its
/// largest-magnitude component (first one on ties) is made positive, so the
/// output is deterministic.
pub fn eig_sym(h: &SymMatrix) -> Result<Eigensystem> {
    let n = h.dim();
    let mut a: Vec<f64> = h.rows().flatten().copied().collect();
    let mut v = ColMatrix::identity(n);

    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = RELATIVE_TOLERANCE * total;

    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&a, n);
    while off > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::ConvergenceFailure { sweeps, off_norm: off });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a[k * n + p] = new_kp;
                    a[p * n + k] = new_kp;
                    a[k * n + q] = new_kq;
                    a[q * n + k] = new_kq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                let (vp, vq) = v.two_columns_mut(p, q);
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&a, n);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]).then(i.cmp(&j)));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let columns: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| {
            let mut col = v.column(i).to_vec();
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut pivot = 0;
            for (k, x) in col.iter().enumerate() {
                if x.abs() > col[pivot].abs() {
                    pivot = k;
                }
            }
            let scale = if col.get(pivot).copied().unwrap_or(1.0) < 0.0 {
                -1.0 / norm
            } else {
                1.0 / norm
            };
            col.iter_mut().for_each(|x| *x *= scale);
            col
        })
        .collect();

    Ok(Eigensystem {
        eigenvalues,
        eigenvectors: ColMatrix::from_columns(n, columns),
        source_coupling_ghz: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    use crate::model::{assemble_hamiltonian, SystemParams};

    #[test]
    fn two_by_two_coupling() {
        let g = 0.3;
        let h = SymMatrix::from_rows(&[vec![0.0, g], vec![g, 0.0]], 0.0).unwrap();
        let e = eig_sym(&h).unwrap();
        assert!((e.eigenvalues[0] + g).abs() < 1e-15);
        assert!((e.eigenvalues[1] - g).abs() < 1e-15);
        let r = 1.0 / 2f64.sqrt();
        // lower state (1, -1)/√2 up to the pivot sign rule, upper state (1, 1)/√2
        assert!((e.eigenvectors.get(0, 0).abs() - r).abs() < 1e-15);
        assert!((e.eigenvectors.get(0, 0) * e.eigenvectors.get(1, 0) + 0.5).abs() < 1e-15);
        assert!((e.eigenvectors.get(0, 1) - r).abs() < 1e-15);
        assert!((e.eigenvectors.get(1, 1) - r).abs() < 1e-15);
    }

    #[test]
    fn diagonal_input_is_a_permutation() {
        let h = SymMatrix::from_rows(&[vec![3.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, 2.0]], 0.0).unwrap();
        let e = eig_sym(&h).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 2.0, 3.0]);
        assert_eq!(e.eigenvectors.column(0), &[0.0, 1.0, 0.0]);
        assert_eq!(e.eigenvectors.column(1), &[0.0, 0.0, 1.0]);
        assert_eq!(e.eigenvectors.column(2), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn open_chain_closed_form_spectrum() {
        let p = SystemParams::reference();
        let h = assemble_hamiltonian(&p, 0.0);
        let e = eig_sym(&h).unwrap();
        let n = p.n_sites;
        let mut expected: Vec<f64> = (1..=n)
            .map(|m| -2.0 * p.hop() * (m as f64 * PI / (n as f64 + 1.0)).cos())
            .collect();
        expected.push(p.detuning());
        expected.sort_by(f64::total_cmp);
        for (a, b) in e.eigenvalues.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        // decoupled emitter stays a pure basis vector
        let emitter_cols = (0..e.dim()).filter(|&m| e.eigenvectors.get(0, m) == 1.0).count();
        assert_eq!(emitter_cols, 1);
    }

    #[test]
    fn reference_hamiltonian_invariants() {
        let p = SystemParams::reference();
        let h = assemble_hamiltonian(&p, p.g0_ghz);
        let e = eig_sym(&h).unwrap();
        assert!(e.reconstruction_error(&h) <= 1e-9 * h.max_abs().max(1.0));
        assert!(e.orthonormality_error() <= 1e-10);
        assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn empty_and_scalar() {
        let e = eig_sym(&SymMatrix::zeros(0)).unwrap();
        assert!(e.eigenvalues.is_empty());
        let e = eig_sym(&SymMatrix::from_rows(&[vec![-2.5]], 0.0).unwrap()).unwrap();
        assert_eq!(e.eigenvalues, vec![-2.5]);
        assert_eq!(e.eigenvectors.column(0), &[1.0]);
    }

    fn symmetric_matrix() -> impl Strategy<Value = SymMatrix> {
        (1usize..9).prop_flat_map(|n| {
            proptest::collection::vec(-10.0f64..10.0, n * n).prop_map(move |vals| {
                let mut m = SymMatrix::zeros(n);
                for i in 0..n {
                    for j in 0..=i {
                        m.set(i, j, vals[i * n + j]);
                    }
                }
                m
            })
        })
    }

    proptest! {
        #[test]
        fn decomposition_invariants(h in symmetric_matrix()) {
            let e = eig_sym(&h).unwrap();
            prop_assert!(e.reconstruction_error(&h) <= 1e-9 * h.max_abs().max(1.0));
            prop_assert!(e.orthonormality_error() <= 1e-10);
            prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            let trace: f64 = (0..h.dim()).map(|i| h.get(i, i)).sum();
            let sum: f64 = e.eigenvalues.iter().sum();
            prop_assert!((trace - sum).abs() <= 1e-10 * h.max_abs().max(1.0) * h.dim() as f64);
        }
    }
}
