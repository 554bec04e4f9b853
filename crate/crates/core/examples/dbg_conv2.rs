use num_complex::Complex64 as C64;
use ptempo::bath::{eta_coefficients, BathSpec};
use ptempo::dynamics::{
    apply, conventional_tempo_with_influences, make_propagators, states, DriveField,
    QubitHamiltonian,
};
use ptempo::ptbuild::{build_influence_tensors, build_process_tensor, CouplingSpec};
use ptempo::tensornet::TruncationPolicy;

fn main() {
    let bath = BathSpec::super_ohmic(0.126, 3.04, 1.0);
    for (dt, n, mem, expo, theta) in [
        (0.02f64, 40usize, 25usize, -9.0f64, 1.2),
        (0.02, 30, 20, -9.0, 1.0),
        (0.02, 30, 20, -9.5, 1.0),
    ] {
        let eta = eta_coefficients(&bath, dt, mem).unwrap();
        let infl = build_influence_tensors(&eta, &CouplingSpec::qubit()).unwrap();
        let amp = theta / (std::f64::consts::PI.sqrt() * 0.15);
        let samples: Vec<C64> = (0..n)
            .map(|m| {
                let t = (m as f64 + 0.5) * dt;
                C64::new(amp * (-((t - 0.4) / 0.15).powi(2)).exp(), 0.0)
            })
            .collect();
        let drive = DriveField { t0: 0.0, dt, samples };
        let props = make_propagators(&QubitHamiltonian::resonant(), &drive, 0.0, dt, n).unwrap();
        let policy = TruncationPolicy::from_exponent(expo);
        let t0 = std::time::Instant::now();
        let pt = build_process_tensor(&infl, n, &policy).unwrap();
        let a = apply(&pt, &props, &states::down()).unwrap();
        let t1 = std::time::Instant::now();
        let b = conventional_tempo_with_influences(&infl, &props, &states::down(), &policy).unwrap();
        let t2 = std::time::Instant::now();
        let mut worst = 0.0f64;
        for (x, y) in a.states.iter().zip(b.states.iter()) {
            let e = (x - y).iter().map(|v| v.norm()).fold(0.0f64, f64::max);
            worst = worst.max(e);
        }
        println!(
            "dt={dt} n={n} mem={mem} cutoff=1e{expo} theta={theta}: dev {worst:.3e}  (pt {:?}, conv {:?}, conv max bond {})",
            t1 - t0, t2 - t1,
            b.states.len()
        );
    }
}
