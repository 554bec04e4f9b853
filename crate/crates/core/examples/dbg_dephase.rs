use ptempo::bath::{eta_coefficients, BathSpec};
use ptempo::dynamics::{apply, make_propagators, sigma_plus_expectation, states, DriveField, QubitHamiltonian};
use ptempo::ptbuild::{build_influence_tensors, build_process_tensor, CouplingSpec};
use ptempo::tensornet::TruncationPolicy;

fn main() {
    let bath = BathSpec::super_ohmic(0.126, 3.04, 1.0);
    let dt = 0.01;
    let n = 150usize;
    let eta = eta_coefficients(&bath, dt, n).unwrap();
    println!("eta0 = {:?}", eta.eta[0]);
    println!("eta1 = {:?}", eta.eta[1]);
    println!("eta10 = {:?}", eta.eta[10]);
    let infl = build_influence_tensors(&eta, &CouplingSpec::qubit()).unwrap();
    let pt = build_process_tensor(&infl, n, &TruncationPolicy::from_exponent(-6.5)).unwrap();
    let drive = DriveField::zero(0.0, dt, n);
    let props = make_propagators(&QubitHamiltonian::resonant(), &drive, 0.0, dt, n).unwrap();
    let traj = apply(&pt, &props, &states::x_plus()).unwrap();
    for &m in &[1usize, 2, 3, 5, 10, 50, 100, 150] {
        let mut g = m as f64 * eta.eta[0].re;
        for nn in 1..m {
            g += (m - nn) as f64 * eta.eta[nn].re;
        }
        let want = 0.5 * (-g).exp();
        let got = sigma_plus_expectation(&traj.states[m]).norm();
        println!("m={m:3}  got {got:.9}  formula {want:.9}  ratio {:.6}", got / want);
    }
}
