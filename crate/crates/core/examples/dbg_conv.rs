use num_complex::Complex64 as C64;
use ptempo::bath::{eta_coefficients, BathSpec};
use ptempo::dynamics::{
    apply, conventional_tempo_with_influences, make_propagators, oracles, states, DriveField,
    QubitHamiltonian,
};
use ptempo::ptbuild::{build_influence_tensors, build_process_tensor, CouplingSpec};
use ptempo::tensornet::TruncationPolicy;

fn main() {
    let bath = BathSpec::super_ohmic(0.126, 3.04, 1.0);
    let dt = 0.05;
    let n = 7usize;
    let mem = 3usize;
    let eta = eta_coefficients(&bath, dt, mem).unwrap();
    let infl = build_influence_tensors(&eta, &CouplingSpec::qubit()).unwrap();
    let mut seed = 0x1234u64;
    let mut next = move || {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let samples: Vec<C64> = (0..n).map(|_| 15.0 * C64::new(next(), next())).collect();
    let drive = DriveField { t0: 0.0, dt, samples };
    let h = QubitHamiltonian { detuning: 1.0 };
    let props = make_propagators(&h, &drive, 0.0, dt, n).unwrap();
    let rho0 = states::x_plus();
    let dense = oracles::dense_path_trajectory(&infl, &props, &rho0);
    let conv =
        conventional_tempo_with_influences(&infl, &props, &rho0, &TruncationPolicy::new(0.0))
            .unwrap();
    let pt = build_process_tensor(&infl, n, &TruncationPolicy::new(0.0)).unwrap();
    let pta = apply(&pt, &props, &rho0).unwrap();
    for m in 0..=n {
        let ec = (&conv.states[m] - &dense[m]).iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let ea = (&pta.states[m] - &dense[m]).iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        println!("m={m}: conv vs dense {ec:.3e}   apply vs dense {ea:.3e}");
    }
}
