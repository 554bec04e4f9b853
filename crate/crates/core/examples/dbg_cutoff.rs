use ptempo::bath::{eta_coefficients, BathSpec};
use ptempo::dynamics::{apply, make_propagators, sigma_plus_expectation, states, DriveField, QubitHamiltonian};
use ptempo::ptbuild::{build_influence_tensors, build_process_tensor, CouplingSpec};
use ptempo::tensornet::TruncationPolicy;

fn main() {
    let bath = BathSpec::super_ohmic(0.126, 3.04, 1.0);
    let dt = 0.01;
    let n = 150usize;
    let eta = eta_coefficients(&bath, dt, n).unwrap();
    let infl = build_influence_tensors(&eta, &CouplingSpec::qubit()).unwrap();
    let drive = DriveField::zero(0.0, dt, n);
    let props = make_propagators(&QubitHamiltonian::resonant(), &drive, 0.0, dt, n).unwrap();
    for expo in [-6.5f64, -8.0, -10.0, -12.0] {
        let t = std::time::Instant::now();
        let pt = build_process_tensor(&infl, n, &TruncationPolicy::from_exponent(expo)).unwrap();
        let traj = apply(&pt, &props, &states::x_plus()).unwrap();
        let mut worst = 0.0f64;
        for (m, rho) in traj.states.iter().enumerate() {
            let mut g = m as f64 * eta.eta[0].re;
            for nn in 1..m {
                g += (m - nn) as f64 * eta.eta[nn].re;
            }
            let want = 0.5 * (-g).exp();
            let got = sigma_plus_expectation(rho).norm();
            worst = worst.max((got - want).abs());
        }
        println!(
            "cutoff 1e{expo}: max|err| {worst:.3e}  max_bond {}  cum_trunc {:.3e}  build {:?}",
            pt.max_bond(),
            pt.meta().diagnostics.cumulative_truncation_error,
            t.elapsed()
        );
    }
}
