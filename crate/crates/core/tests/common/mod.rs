//! Shared helpers for the acceptance suite: an exact few-mode reference
//! model (qubit plus a handful of truncated bosonic modes) evolved by dense
//! diagonalization, independent of all tensor-network machinery.

use ndarray::{linalg::kron, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

pub struct FewModeModel {
    pub mode_freqs: Vec<f64>,
    /// Real couplings g_k; the spectral density carries |g_k|².
    pub couplings: Vec<f64>,
    /// Levels kept per mode (occupations 0..fock_levels-1).
    pub fock_levels: usize,
    pub temperature: f64,
    pub kb_over_hbar: f64,
}

impl FewModeModel {
    pub fn dim(&self) -> usize {
        2 * self.fock_levels.pow(self.mode_freqs.len() as u32)
    }

    fn eye(n: usize) -> Array2<C64> {
        Array2::from_diag(&ndarray::Array1::from_elem(n, C64::new(1.0, 0.0)))
    }

    fn lowering(&self) -> Array2<C64> {
        let f = self.fock_levels;
        let mut b = Array2::zeros((f, f));
        for n in 1..f {
            b[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
        }
        b
    }

    fn number(&self) -> Array2<C64> {
        let f = self.fock_levels;
        let mut n_op = Array2::zeros((f, f));
        for n in 0..f {
            n_op[[n, n]] = C64::new(n as f64, 0.0);
        }
        n_op
    }

    /// Operator acting on mode k, identity elsewhere, in the product space
    /// of the modes only.
    fn mode_op(&self, k: usize, op: &Array2<C64>) -> Array2<C64> {
        let f = self.fock_levels;
        let mut acc = Self::eye(1);
        for j in 0..self.mode_freqs.len() {
            let next = if j == k { op.clone() } else { Self::eye(f) };
            acc = kron(&acc, &next);
        }
        acc
    }

    /// Static Hamiltonian: Σ_k [σ_z/2 ⊗ g_k(b_k + b_k†) + ω_k n_k].
    fn static_hamiltonian(&self) -> Array2<C64> {
        let m = self.fock_levels.pow(self.mode_freqs.len() as u32);
        let sz_half = {
            let mut s = Array2::zeros((2, 2));
            s[[0, 0]] = C64::new(0.5, 0.0);
            s[[1, 1]] = C64::new(-0.5, 0.0);
            s
        };
        let b = self.lowering();
        let bd = b.t().mapv(|v| v.conj());
        let nm = self.number();
        let mut h = Array2::zeros((2 * m, 2 * m));
        for (k, (&w, &g)) in self.mode_freqs.iter().zip(&self.couplings).enumerate() {
            let x = (&b + &bd).mapv(|v| v * g);
            h = h + kron(&sz_half, &self.mode_op(k, &x));
            h = h + kron(&Self::eye(2), &self.mode_op(k, &nm).mapv(|v| v * w));
        }
        h
    }

    fn drive_hamiltonian(&self, field: C64) -> Array2<C64> {
        let m = self.fock_levels.pow(self.mode_freqs.len() as u32);
        let mut hs = Array2::zeros((2, 2));
        hs[[0, 1]] = field / 2.0;
        hs[[1, 0]] = field.conj() / 2.0;
        kron(&hs, &Self::eye(m))
    }

    /// Qubit ground state ⊗ truncated thermal state of every mode.
    pub fn initial_state(&self) -> Array2<C64> {
        let f = self.fock_levels;
        let kbt = self.kb_over_hbar * self.temperature;
        let mut env = Self::eye(1);
        for &w in &self.mode_freqs {
            let mut th = Array2::<C64>::zeros((f, f));
            let mut z = 0.0;
            for n in 0..f {
                let p = if kbt == 0.0 {
                    if n == 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (-(w * n as f64) / kbt).exp()
                };
                th[[n, n]] = C64::new(p, 0.0);
                z += p;
            }
            th.mapv_inplace(|v| v / z);
            env = kron(&env, &th);
        }
        let mut down = Array2::<C64>::zeros((2, 2));
        down[[1, 1]] = C64::new(1.0, 0.0);
        kron(&down, &env)
    }

    /// Evolve with midpoint-frozen Hamiltonians diagonalized exactly per
    /// step; returns the reduced 2×2 system states on the step grid.
    pub fn evolve_reduced(
        &self,
        drive: &dyn Fn(f64) -> C64,
        t0: f64,
        dt: f64,
        n: usize,
    ) -> Vec<Array2<C64>> {
        let h0 = self.static_hamiltonian();
        let mut rho = self.initial_state();
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.reduce(&rho));
        for m in 0..n {
            let t_mid = t0 + (m as f64 + 0.5) * dt;
            let h = &h0 + &self.drive_hamiltonian(drive(t_mid));
            let (vals, vecs) = h.eigh(UPLO::Lower).expect("dense eigh");
            let phases = Array2::from_diag(&vals.mapv(|l| (-C64::i() * l * dt).exp()));
            let vh = vecs.t().mapv(|v| v.conj());
            let u = vecs.dot(&phases).dot(&vh);
            let ud = u.t().mapv(|v| v.conj());
            rho = u.dot(&rho).dot(&ud);
            out.push(self.reduce(&rho));
        }
        out
    }

    /// Partial trace over the modes.
    fn reduce(&self, rho: &Array2<C64>) -> Array2<C64> {
        let m = self.fock_levels.pow(self.mode_freqs.len() as u32);
        let mut s = Array2::zeros((2, 2));
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for e in 0..m {
                    acc += rho[[i * m + e, j * m + e]];
                }
                s[[i, j]] = acc;
            }
        }
        s
    }
}

/// PASS/FAIL line for the acceptance report.
pub fn report(criterion: &str, pass: bool, details: &str) {
    println!(
        "{} criterion {criterion}: {details}",
        if pass { "PASS" } else { "FAIL" }
    );
}
