//! Tensor-network simulation of driven open quantum systems with strong,
//! structured bosonic environments, plus the tooling to optimize laser-pulse
//! controls against such environments.
//!
//! The workflow is split in two stages. First the environment's influence
//! functionals are contracted, column by column, into a matrix-product-state
//! *process tensor* that is independent of the system Hamiltonian and can be
//! written to disk ([`ptbuild`]). Second, arbitrary sequences of system
//! propagators are folded into that saved object to obtain reduced system
//! dynamics at a cost of milliseconds per trajectory ([`dynamics`]), which
//! makes brute-force landscape sweeps and population-based global
//! optimization of pulse parameters practical ([`optimizer`]).
//!
//! Supporting modules: [`bath`] builds spectral densities, autocorrelation
//! functions and discretized memory coefficients; [`tensornet`] is a minimal
//! dense complex tensor/MPS core; [`pulse`] models a Gaussian input pulse
//! passing through a pixelated spatial-light-modulator pulse shaper;
//! [`config`] and [`cli`] wire everything to a batch-oriented command line.

pub mod bath;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod optimizer;
pub mod ptbuild;
pub mod pulse;
pub mod quad;
pub mod tensornet;

pub use num_complex::Complex64 as C64;
