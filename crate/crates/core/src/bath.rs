//! Bosonic environment definitions: spectral density, temperature-dependent
//! autocorrelation function, and the time-step-discretized memory
//! coefficients that feed the influence functionals.
//!
//! Units are ps for time and ps⁻¹ for frequency/energy with ħ = 1;
//! temperature is in kelvin and is converted through k_B/ħ.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{self, QuadError};

/// k_B/ħ in ps⁻¹ K⁻¹ (CODATA-derived).
pub const KB_OVER_HBAR: f64 = 0.1309;

/// Relative tolerance used for the correlation-function and memory-kernel
/// quadratures.
const QUAD_REL_TOL: f64 = 1e-8;
const QUAD_ABS_TOL: f64 = 1e-16;
const QUAD_MAX_SEGMENTS: usize = 20_000;

#[derive(Debug, Error)]
pub enum BathError {
    #[error("invalid bath specification: {0}")]
    InvalidSpec(String),
    #[error("spectral density evaluated at negative frequency {0}")]
    NegativeFrequency(f64),
    #[error("bath quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
}

/// A single broadened mode for [`SpectralDensityForm::GaussianPeaks`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Integrated weight of the peak, |g|² for a discrete mode.
    pub weight: f64,
    /// Center frequency in ps⁻¹.
    pub center: f64,
}

/// Functional family of the spectral density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectralDensityForm {
    /// J(ω) = 2 α ω³ ω_c⁻² exp(−ω²/ω_c²)
    SuperOhmic,
    /// A sum of narrow Gaussians of unit area, J(ω) = α Σ_k w_k N(ω; ω_k, σ).
    /// Stands in for a set of discrete modes, with the delta peaks broadened
    /// to width σ so that the correlation integrals stay well defined.
    GaussianPeaks { peaks: Vec<Peak>, width: f64 },
}

/// Environment specification: coupling strength, cutoff, temperature, and
/// the shape of the spectral density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    /// Dimensionless coupling constant.
    pub alpha: f64,
    /// Cutoff frequency in ps⁻¹ (enters the super-Ohmic form).
    pub omega_c: f64,
    /// Temperature in kelvin.
    pub temperature: f64,
    /// Conversion constant k_B/ħ in ps⁻¹ K⁻¹.
    #[serde(default = "default_kb_over_hbar")]
    pub kb_over_hbar: f64,
    #[serde(default = "default_form")]
    pub form: SpectralDensityForm,
}

fn default_kb_over_hbar() -> f64 {
    KB_OVER_HBAR
}

fn default_form() -> SpectralDensityForm {
    SpectralDensityForm::SuperOhmic
}

impl BathSpec {
    pub fn super_ohmic(alpha: f64, omega_c: f64, temperature: f64) -> Self {
        Self {
            alpha,
            omega_c,
            temperature,
            kb_over_hbar: KB_OVER_HBAR,
            form: SpectralDensityForm::SuperOhmic,
        }
    }

    /// Broadened discrete modes; `alpha` is fixed to 1 so the peak weights
    /// carry the couplings.
    pub fn gaussian_peaks(peaks: Vec<Peak>, width: f64, temperature: f64) -> Self {
        Self {
            alpha: 1.0,
            omega_c: 1.0,
            temperature,
            kb_over_hbar: KB_OVER_HBAR,
            form: SpectralDensityForm::GaussianPeaks { peaks, width },
        }
    }

    pub fn validate(&self) -> Result<(), BathError> {
        if !(self.alpha >= 0.0) {
            return Err(BathError::InvalidSpec(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.omega_c > 0.0) {
            return Err(BathError::InvalidSpec(format!(
                "omega_c must be > 0, got {}",
                self.omega_c
            )));
        }
        if !(self.temperature >= 0.0) {
            return Err(BathError::InvalidSpec(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.kb_over_hbar > 0.0) {
            return Err(BathError::InvalidSpec("kb_over_hbar must be > 0".into()));
        }
        if let SpectralDensityForm::GaussianPeaks { peaks, width } = &self.form {
            if peaks.is_empty() {
                return Err(BathError::InvalidSpec("no peaks given".into()));
            }
            if !(*width > 0.0) {
                return Err(BathError::InvalidSpec("peak width must be > 0".into()));
            }
            for p in peaks {
                if !(p.center > 0.0) || !(p.weight >= 0.0) {
                    return Err(BathError::InvalidSpec(format!(
                        "bad peak (weight {}, center {})",
                        p.weight, p.center
                    )));
                }
            }
        }
        Ok(())
    }

    /// Thermal frequency k_B T/ħ in ps⁻¹.
    pub fn kbt(&self) -> f64 {
        self.kb_over_hbar * self.temperature
    }

    fn j_raw(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        match &self.form {
            SpectralDensityForm::SuperOhmic => {
                let r = omega / self.omega_c;
                2.0 * self.alpha * omega.powi(3) / (self.omega_c * self.omega_c)
                    * (-r * r).exp()
            }
            SpectralDensityForm::GaussianPeaks { peaks, width } => {
                let norm = 1.0 / (width * (2.0 * std::f64::consts::PI).sqrt());
                self.alpha
                    * peaks
                        .iter()
                        .map(|p| {
                            let z = (omega - p.center) / width;
                            p.weight * norm * (-0.5 * z * z).exp()
                        })
                        .sum::<f64>()
            }
        }
    }

    /// coth(ω/(2 k_B T/ħ)); the T = 0 limit is coth → 1.
    fn thermal_factor(&self, omega: f64) -> f64 {
        let kbt = self.kbt();
        if kbt == 0.0 {
            1.0
        } else {
            1.0 / (omega / (2.0 * kbt)).tanh()
        }
    }

    /// Integration panels covering the support of J to well below the
    /// quadrature tolerance.
    fn panels(&self) -> Vec<(f64, f64)> {
        match &self.form {
            SpectralDensityForm::SuperOhmic => {
                let wc = self.omega_c;
                vec![(0.0, wc), (wc, 3.0 * wc), (3.0 * wc, 10.0 * wc)]
            }
            SpectralDensityForm::GaussianPeaks { peaks, width } => {
                let mut iv: Vec<(f64, f64)> = peaks
                    .iter()
                    .map(|p| ((p.center - 12.0 * width).max(0.0), p.center + 12.0 * width))
                    .collect();
                iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for (a, b) in iv {
                    match merged.last_mut() {
                        Some(last) if a <= last.1 => last.1 = last.1.max(b),
                        _ => merged.push((a, b)),
                    }
                }
                merged
            }
        }
    }
}

/// Evaluate the spectral density J(ω) in ps⁻¹.
pub fn spectral_density(spec: &BathSpec, omega: f64) -> Result<f64, BathError> {
    spec.validate()?;
    if omega < 0.0 {
        return Err(BathError::NegativeFrequency(omega));
    }
    Ok(spec.j_raw(omega))
}

/// The environment autocorrelation function C(t), evaluated by adaptive
/// quadrature over the spectral density.
#[derive(Clone, Debug)]
pub struct CorrelationKernel {
    spec: BathSpec,
    kbt: f64,
    panels: Vec<(f64, f64)>,
}

impl CorrelationKernel {
    pub fn new(spec: &BathSpec) -> Result<Self, BathError> {
        spec.validate()?;
        Ok(Self {
            spec: spec.clone(),
            kbt: spec.kbt(),
            panels: spec.panels(),
        })
    }

    pub fn kbt(&self) -> f64 {
        self.kbt
    }

    /// C(t) = ∫₀^∞ dω J(ω) [coth(ω/(2 k_B T/ħ)) cos(ωt) − i sin(ωt)].
    ///
    /// Hermitian symmetry C(−t) = C(t)* holds by construction (cos is even,
    /// sin is odd, and the quadrature nodes are identical for ±t).
    pub fn eval(&self, t: f64) -> Result<C64, BathError> {
        if self.spec.alpha == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let f = |w: f64| -> C64 {
            let j = self.spec.j_raw(w);
            if j == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let th = self.spec.thermal_factor(w);
            C64::new(j * th * (w * t).cos(), -j * (w * t).sin())
        };
        let r = quad::integrate_panels(&f, &self.panels, QUAD_ABS_TOL, QUAD_REL_TOL, QUAD_MAX_SEGMENTS)?;
        Ok(r.value)
    }
}

/// Evaluate the autocorrelation function once; build a [`CorrelationKernel`]
/// for repeated evaluation.
pub fn correlation(spec: &BathSpec, t: f64) -> Result<C64, BathError> {
    CorrelationKernel::new(spec)?.eval(t)
}

/// Discretized memory-kernel coefficients η_0..η_{n_max} for time step `dt`.
///
/// η_0 integrates C over the triangle 0 ≤ t″ ≤ t′ ≤ dt; η_n (n ≥ 1)
/// integrates C over the square t′ ∈ [0, dt], t″ ∈ [−n·dt, −(n−1)·dt].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaCoefficients {
    pub dt: f64,
    pub n_max: usize,
    pub eta: Vec<C64>,
}

impl EtaCoefficients {
    pub fn validate(&self) -> Result<(), BathError> {
        if self.eta.len() != self.n_max + 1 {
            return Err(BathError::InvalidSpec(format!(
                "eta length {} != n_max + 1 = {}",
                self.eta.len(),
                self.n_max + 1
            )));
        }
        if self.eta.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
            return Err(BathError::InvalidSpec("non-finite eta coefficient".into()));
        }
        Ok(())
    }
}

/// 2 sin²(x/2), a cancellation-free 1 − cos(x).
fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

/// x − sin(x) without catastrophic cancellation for small x.
fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    } else {
        x - x.sin()
    }
}

/// Compute the memory coefficients by carrying out the double time integrals
/// analytically against the spectral density, leaving one frequency
/// quadrature per coefficient:
///
///   η_0 = ∫ dω J/ω² [coth·(1 − cos ω·dt) − i (ω·dt − sin ω·dt)]
///   η_n = ∫ dω J/ω² · 2(1 − cos ω·dt) [coth·cos(n ω dt) − i sin(n ω dt)]
///
/// These are the exact frequency-space forms of the cell integrals of C
/// stated on [`EtaCoefficients`]: the time integral of C's triangular lag
/// weight over a cell has this closed form.
pub fn eta_coefficients(
    spec: &BathSpec,
    dt: f64,
    n_max: usize,
) -> Result<EtaCoefficients, BathError> {
    spec.validate()?;
    if !(dt > 0.0) {
        return Err(BathError::InvalidSpec(format!("dt must be > 0, got {dt}")));
    }
    let mut eta = Vec::with_capacity(n_max + 1);
    if spec.alpha == 0.0 {
        eta.resize(n_max + 1, C64::new(0.0, 0.0));
        return Ok(EtaCoefficients { dt, n_max, eta });
    }
    let panels = spec.panels();

    let f0 = |w: f64| -> C64 {
        let j = spec.j_raw(w);
        if j == 0.0 || w == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let jw2 = j / (w * w);
        let th = spec.thermal_factor(w);
        C64::new(jw2 * th * one_minus_cos(w * dt), -jw2 * x_minus_sin(w * dt))
    };
    let r0 = quad::integrate_panels(&f0, &panels, QUAD_ABS_TOL, QUAD_REL_TOL, QUAD_MAX_SEGMENTS)?;
    eta.push(r0.value);

    for n in 1..=n_max {
        let nf = n as f64;
        let f = |w: f64| -> C64 {
            let j = spec.j_raw(w);
            if j == 0.0 || w == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let env = j / (w * w) * 2.0 * one_minus_cos(w * dt);
            let th = spec.thermal_factor(w);
            let phase = nf * w * dt;
            C64::new(env * th * phase.cos(), -env * phase.sin())
        };
        let r = quad::integrate_panels(&f, &panels, QUAD_ABS_TOL, QUAD_REL_TOL, QUAD_MAX_SEGMENTS)?;
        eta.push(r.value);
    }

    let coeffs = EtaCoefficients { dt, n_max, eta };
    coeffs.validate()?;
    Ok(coeffs)
}
