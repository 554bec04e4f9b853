//! Tuning run for the few-mode cross-validation: qubit + 3 truncated modes
//! evolved exactly vs the tensor-network method with a matching broadened
//! spectral density.

use ndarray::{linalg::kron, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use ptempo::bath::{eta_coefficients, BathSpec, Peak};
use ptempo::dynamics::{apply, bloch_vector, make_propagators, DriveField, QubitHamiltonian};
use ptempo::ptbuild::{build_influence_tensors, build_process_tensor, CouplingSpec};
use ptempo::tensornet::TruncationPolicy;

struct Model {
    freqs: Vec<f64>,
    gs: Vec<f64>,
    f: usize,
    kbt: f64,
}

impl Model {
    fn eye(n: usize) -> Array2<C64> {
        Array2::from_diag(&ndarray::Array1::from_elem(n, C64::new(1.0, 0.0)))
    }
    fn mode_op(&self, k: usize, op: &Array2<C64>) -> Array2<C64> {
        let mut acc = Self::eye(1);
        for j in 0..self.freqs.len() {
            let nxt = if j == k { op.clone() } else { Self::eye(self.f) };
            acc = kron(&acc, &nxt);
        }
        acc
    }
    fn h0(&self) -> Array2<C64> {
        let mut b = Array2::<C64>::zeros((self.f, self.f));
        for n in 1..self.f {
            b[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
        }
        let bd = b.t().mapv(|v| v.conj());
        let mut nm = Array2::<C64>::zeros((self.f, self.f));
        for n in 0..self.f {
            nm[[n, n]] = C64::new(n as f64, 0.0);
        }
        let mut sz = Array2::<C64>::zeros((2, 2));
        sz[[0, 0]] = C64::new(0.5, 0.0);
        sz[[1, 1]] = C64::new(-0.5, 0.0);
        let m = self.f.pow(self.freqs.len() as u32);
        let mut h = Array2::zeros((2 * m, 2 * m));
        for (k, (&w, &g)) in self.freqs.iter().zip(&self.gs).enumerate() {
            let x = (&b + &bd).mapv(|v| v * g);
            h = h + kron(&sz, &self.mode_op(k, &x));
            h = h + kron(&Self::eye(2), &self.mode_op(k, &nm).mapv(|v| v * w));
        }
        h
    }
    fn rho0(&self) -> Array2<C64> {
        let mut env = Self::eye(1);
        for &w in &self.freqs {
            let mut th = Array2::<C64>::zeros((self.f, self.f));
            let mut z = 0.0;
            for n in 0..self.f {
                let p = (-(w * n as f64) / self.kbt).exp();
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
    fn reduce(&self, rho: &Array2<C64>) -> Array2<C64> {
        let m = self.f.pow(self.freqs.len() as u32);
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

fn main() {
    let freqs = vec![1.2, 2.0, 2.9];
    let weights = vec![0.03, 0.05, 0.035];
    let gs: Vec<f64> = weights.iter().map(|w: &f64| w.sqrt()).collect();
    let temperature = 2.0;
    let kbt = 0.1309 * temperature;
    let sigma = 0.015;
    let horizon = 2.0;
    let (tau, theta, tc) = (0.3, 0.7 * std::f64::consts::PI, 0.7);

    let model = Model {
        freqs: freqs.clone(),
        gs: gs.clone(),
        f: 6,
        kbt,
    };
    let drive_fn = move |t: f64| -> C64 {
        let amp = theta / (std::f64::consts::PI.sqrt() * tau);
        C64::new(amp * (-((t - tc) / tau).powi(2)).exp(), 0.0)
    };

    for dt in [0.005f64, 0.0025] {
        let n = (horizon / dt).round() as usize;
        // exact side
        let t_exact = std::time::Instant::now();
        let h0 = model.h0();
        let mut rho = model.rho0();
        let mut exact = Vec::with_capacity(n + 1);
        exact.push(model.reduce(&rho));
        let m = model.f.pow(3);
        for s in 0..n {
            let t_mid = (s as f64 + 0.5) * dt;
            let e = drive_fn(t_mid);
            let mut hs = Array2::<C64>::zeros((2, 2));
            hs[[0, 1]] = e / 2.0;
            hs[[1, 0]] = e.conj() / 2.0;
            let h = &h0 + &kron(&hs, &Model::eye(m));
            let (vals, vecs) = h.eigh(UPLO::Lower).unwrap();
            let ph = Array2::from_diag(&vals.mapv(|l| (-C64::i() * l * dt).exp()));
            let vh = vecs.t().mapv(|v| v.conj());
            let u = vecs.dot(&ph).dot(&vh);
            let ud = u.t().mapv(|v| v.conj());
            rho = u.dot(&rho).dot(&ud);
            exact.push(model.reduce(&rho));
        }
        let exact_time = t_exact.elapsed();

        // tensor-network side
        let t_tn = std::time::Instant::now();
        let peaks: Vec<Peak> = freqs
            .iter()
            .zip(&weights)
            .map(|(&c, &w)| Peak { weight: w, center: c })
            .collect();
        let bath = BathSpec::gaussian_peaks(peaks, sigma, temperature);
        let eta = eta_coefficients(&bath, dt, n).unwrap();
        let infl = build_influence_tensors(&eta, &CouplingSpec::qubit()).unwrap();
        let pt = build_process_tensor(&infl, n, &TruncationPolicy::from_exponent(-8.0)).unwrap();
        let samples: Vec<C64> = (0..n).map(|s| drive_fn((s as f64 + 0.5) * dt)).collect();
        let drive = DriveField { t0: 0.0, dt, samples };
        let props = make_propagators(&QubitHamiltonian::resonant(), &drive, 0.0, dt, n).unwrap();
        let traj = apply(&pt, &props, &ptempo::dynamics::states::down()).unwrap();
        let tn_time = t_tn.elapsed();

        let mut worst_pop = 0.0f64;
        let mut worst_coh = 0.0f64;
        for (a, b) in traj.states.iter().zip(exact.iter()) {
            let za = bloch_vector(a)[2];
            let zb = bloch_vector(b)[2];
            worst_pop = worst_pop.max((za - zb).abs());
            let ca = a[[0, 1]].norm();
            let cb = b[[0, 1]].norm();
            worst_coh = worst_coh.max((ca - cb).abs());
        }
        println!(
            "dt={dt}: pop dev {worst_pop:.3e}, coh dev {worst_coh:.3e}, max bond {}, exact {:?}, tn {:?}",
            pt.max_bond(),
            exact_time,
            tn_time
        );
    }
}
