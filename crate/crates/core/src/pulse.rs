//! Gaussian input pulses and the pixelated spatial-light-modulator pulse
//! shaper that turns physical control parameters into the complex drive
//! field on the simulation grid.
//!
//! Frequencies are detunings from the carrier in the rotating frame: a field
//! component at detuning δ evolves as e^{−iδt}, and its spectral amplitude
//! is read off with the transform Ê(δ) = ∫ E(t) e^{+iδt} dt. Pixel n of the
//! modulator covers detunings near δ_n (ascending from red to blue), so its
//! comb term in the impulse response carries e^{−i δ_n t}.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PulseError {
    #[error("invalid pulse specification: {0}")]
    InvalidSpec(String),
    #[error("sampling too coarse: {0}")]
    Sampling(String),
    #[error("aliasing detected: spectral weight {fraction:.3e} at the grid Nyquist edge")]
    Resolution { fraction: f64 },
    #[error("phase array length {got} does not match pixel count {want}")]
    PhaseLength { got: usize, want: usize },
}

/// Uniform simulation time grid; drive samples live at step midpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Self {
        Self { t0, dt, n }
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n)
            .map(|m| self.t0 + (m as f64 + 0.5) * self.dt)
            .collect()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.t0, self.t0 + self.n as f64 * self.dt)
    }
}

/// Phase-mask function f(x) on x ∈ [−1, 1] (−1 = most red-detuned pixel,
/// +1 = most blue-detuned). Pixel phases are f wrapped into [0, 2π).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhaseMask {
    /// f(x) = 0
    Flat,
    /// f(x) = phi (a global phase)
    Constant { phi: f64 },
    /// f(x) = phi + quad·x²
    Parabolic { phi: f64, quad: f64 },
    /// f is the integral of a piecewise-constant slope over equal segments,
    /// anchored at f(−1) = 0, optionally smoothed by a natural cubic spline
    /// through the segment endpoints.
    Segments { slopes: Vec<f64>, smooth: bool },
}

impl PhaseMask {
    /// Unwrapped mask value f(x).
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PhaseMask::Flat => 0.0,
            PhaseMask::Constant { phi } => *phi,
            PhaseMask::Parabolic { phi, quad } => phi + quad * x * x,
            PhaseMask::Segments { slopes, smooth } => eval_segments(slopes, *smooth, x),
        }
    }
}

/// f at the segment endpoints: cumulative sum of slope × segment width.
fn segment_knots(slopes: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = slopes.len();
    let width = 2.0 / k as f64;
    let mut xs = Vec::with_capacity(k + 1);
    let mut ys = Vec::with_capacity(k + 1);
    let mut acc = 0.0;
    xs.push(-1.0);
    ys.push(0.0);
    for (i, s) in slopes.iter().enumerate() {
        acc += s * width;
        xs.push(-1.0 + (i + 1) as f64 * width);
        ys.push(acc);
    }
    (xs, ys)
}

fn eval_segments(slopes: &[f64], smooth: bool, x: f64) -> f64 {
    if slopes.is_empty() {
        return 0.0;
    }
    let (xs, ys) = segment_knots(slopes);
    if smooth {
        natural_cubic_eval(&xs, &ys, x)
    } else {
        // piecewise linear between knots
        let k = slopes.len();
        let width = 2.0 / k as f64;
        let pos = ((x + 1.0) / width).clamp(0.0, k as f64 - 1e-12);
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        ys[i] + (ys[i + 1] - ys[i]) * frac
    }
}

/// Natural cubic spline through (xs, ys), evaluated at x (clamped to the
/// knot range). Knots are equally spaced here but the solve is general.
fn natural_cubic_eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n < 3 {
        let t = (x - xs[0]) / (xs[n - 1] - xs[0]);
        return ys[0] + t * (ys[n - 1] - ys[0]);
    }
    // second derivatives m_i from the tridiagonal system (Thomas algorithm)
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    diag[0] = 1.0;
    diag[n - 1] = 1.0;
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        sub[i] = h0;
        diag[i] = 2.0 * (h0 + h1);
        sup[i] = h1;
        rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i < n - 1 { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut m2 = vec![0.0; n];
    m2[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        m2[i] = d[i] - c[i] * m2[i + 1];
    }
    let xq = x.clamp(xs[0], xs[n - 1]);
    let mut i = match xs.binary_search_by(|v| v.partial_cmp(&xq).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    };
    if xq >= xs[n - 1] {
        i = n - 2;
    }
    let h = xs[i + 1] - xs[i];
    let a = (xs[i + 1] - xq) / h;
    let b = (xq - xs[i]) / h;
    a * ys[i]
        + b * ys[i + 1]
        + ((a * a * a - a) * m2[i] + (b * b * b - b) * m2[i + 1]) * h * h / 6.0
}

/// Input Gaussian pulse: duration τ, carrier detuning Δ, area Θ, centered at
/// `t_center`, shaped by `mask`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Input pulse duration in ps.
    pub tau: f64,
    /// Carrier detuning Δ in ps⁻¹.
    pub delta: f64,
    /// Pulse area Θ in radians (of the unshaped input pulse).
    pub theta: f64,
    /// Pulse center in ps.
    pub t_center: f64,
    pub mask: PhaseMask,
}

impl PulseSpec {
    pub fn validate(&self) -> Result<(), PulseError> {
        if !(self.tau > 0.0) {
            return Err(PulseError::InvalidSpec(format!(
                "tau must be > 0, got {}",
                self.tau
            )));
        }
        if !(self.theta >= 0.0) {
            return Err(PulseError::InvalidSpec(format!(
                "theta must be >= 0, got {}",
                self.theta
            )));
        }
        if !self.delta.is_finite() || !self.t_center.is_finite() {
            return Err(PulseError::InvalidSpec("non-finite pulse field".into()));
        }
        Ok(())
    }
}

/// Spatial-light-modulator geometry: pixel count and covered detuning span.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlmSpec {
    pub n_pixels: usize,
    /// Full covered frequency range in ps⁻¹.
    pub span: f64,
    /// Spot size as a multiple of the pixel width.
    pub spot_factor: f64,
}

impl Default for SlmSpec {
    fn default() -> Self {
        Self {
            n_pixels: 512,
            span: 2.0 * std::f64::consts::PI * 128.0,
            spot_factor: 2.0,
        }
    }
}

impl SlmSpec {
    pub fn validate(&self) -> Result<(), PulseError> {
        if self.n_pixels == 0 || self.n_pixels % 2 != 0 {
            return Err(PulseError::InvalidSpec(format!(
                "pixel count must be even and positive, got {}",
                self.n_pixels
            )));
        }
        if !(self.span > 0.0) || !(self.spot_factor > 0.0) {
            return Err(PulseError::InvalidSpec(
                "span and spot factor must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Pixel width δΩ_p in ps⁻¹.
    pub fn pixel_width(&self) -> f64 {
        self.span / self.n_pixels as f64
    }

    /// Spot width δΩ_s in ps⁻¹.
    pub fn spot_width(&self) -> f64 {
        self.spot_factor * self.pixel_width()
    }

    /// Detuning of pixel n, centers symmetric about the carrier.
    pub fn pixel_detuning(&self, n: usize) -> f64 {
        (n as f64 - (self.n_pixels as f64 - 1.0) / 2.0) * self.pixel_width()
    }

    /// Mask coordinate of pixel n, x(n) = (n − N/2)/(N/2).
    pub fn pixel_x(&self, n: usize) -> f64 {
        let half = self.n_pixels as f64 / 2.0;
        (n as f64 - half) / half
    }

    /// Per-pixel phases of a mask, wrapped into [0, 2π).
    pub fn phases(&self, mask: &PhaseMask) -> Vec<f64> {
        let tau = 2.0 * std::f64::consts::PI;
        (0..self.n_pixels)
            .map(|n| {
                let f = mask.eval(self.pixel_x(n));
                let frac = (f / tau).fract();
                let frac = if frac < 0.0 { frac + 1.0 } else { frac };
                tau * frac
            })
            .collect()
    }

    /// Envelope transform Ŵ(ν) = ∫ sinc(δΩ_p u/2) e^{−δΩ_s² u²/4} e^{iνu} du
    /// = (π/δΩ_p)[erf((ν + δΩ_p/2)/δΩ_s) − erf((ν − δΩ_p/2)/δΩ_s)].
    fn envelope_transform(&self, nu: f64) -> f64 {
        let a = self.pixel_width();
        let s = self.spot_width();
        std::f64::consts::PI / a * (erf((nu + a / 2.0) / s) - erf((nu - a / 2.0) / s))
    }

    /// Normalization so the zero-mask frequency response is 1 at the carrier.
    fn dc_norm(&self) -> f64 {
        (0..self.n_pixels)
            .map(|n| self.envelope_transform(-self.pixel_detuning(n)))
            .sum()
    }
}

/// The unshaped input field on arbitrary sample times:
/// Ω(t) = Θ/(√π τ) exp(−(t−t_c)²/τ²), E = Ω · exp(−iΔ(t−t_c)), so that
/// ∫ Ω dt = Θ exactly and results do not depend on where the pulse sits on
/// the grid.
pub fn input_field(spec: &PulseSpec, times: &[f64]) -> Result<Vec<C64>, PulseError> {
    spec.validate()?;
    if times.len() < 2 {
        return Err(PulseError::Sampling("need at least two samples".into()));
    }
    let step = times[1] - times[0];
    if step > spec.tau / 8.0 {
        return Err(PulseError::Sampling(format!(
            "grid step {step} exceeds tau/8 = {}",
            spec.tau / 8.0
        )));
    }
    let (lo, hi) = (times[0], times[times.len() - 1]);
    if spec.theta > 0.0
        && (spec.t_center - lo < 5.0 * spec.tau || hi - spec.t_center < 5.0 * spec.tau)
    {
        return Err(PulseError::Sampling(format!(
            "grid [{lo}, {hi}] does not cover the pulse support t_c ± 5τ \
             (t_c = {}, τ = {})",
            spec.t_center, spec.tau
        )));
    }
    let amp = spec.theta / (std::f64::consts::PI.sqrt() * spec.tau);
    Ok(times
        .iter()
        .map(|&t| {
            let u = t - spec.t_center;
            let env = amp * (-(u / spec.tau) * (u / spec.tau)).exp();
            C64::new(0.0, -spec.delta * u).exp() * env
        })
        .collect())
}

/// Impulse response of the modulator sampled on `times`:
/// h(t) = N⁻¹ sinc(δΩ_p t/2) e^{−δΩ_s² t²/4} Σ_n e^{i(Ω_n t + φ_n)} with
/// comb frequencies Ω_n = −δ_n, normalized so the zero-mask response at the
/// carrier is one.
pub fn impulse_response(
    slm: &SlmSpec,
    phases: &[f64],
    times: &[f64],
) -> Result<Vec<C64>, PulseError> {
    slm.validate()?;
    if phases.len() != slm.n_pixels {
        return Err(PulseError::PhaseLength {
            got: phases.len(),
            want: slm.n_pixels,
        });
    }
    let a = slm.pixel_width();
    let s = slm.spot_width();
    let norm = slm.dc_norm();
    // Per-sample comb evaluated by phase recursion over equally spaced
    // pixels: sum_n e^{i phi_n} e^{-i delta_n t}.
    let phase_factors: Vec<C64> = phases.iter().map(|&p| C64::new(0.0, p).exp()).collect();
    Ok(times
        .iter()
        .map(|&t| {
            let x = 0.5 * a * t;
            let sinc = if x.abs() < 1e-12 { 1.0 } else { x.sin() / x };
            let env = sinc * (-0.25 * s * s * t * t).exp();
            if env == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let base = C64::new(0.0, -slm.pixel_detuning(0) * t).exp();
            let step = C64::new(0.0, -a * t).exp();
            let mut comb = C64::new(0.0, 0.0);
            let mut carrier = base;
            for pf in &phase_factors {
                comb += pf * carrier;
                carrier *= step;
            }
            comb * (env / norm)
        })
        .collect())
}

/// Frequency response at detuning `omega` implied by the impulse response:
/// M(ω) = N⁻¹ Σ_n e^{iφ_n} Ŵ(ω − δ_n), with Ŵ the closed-form envelope
/// transform. This is an independent route to the same filter used by the
/// time-domain convolution and serves as its cross-check.
pub fn frequency_response(slm: &SlmSpec, phases: &[f64], omega: f64) -> Result<C64, PulseError> {
    slm.validate()?;
    if phases.len() != slm.n_pixels {
        return Err(PulseError::PhaseLength {
            got: phases.len(),
            want: slm.n_pixels,
        });
    }
    let norm = slm.dc_norm();
    let mut acc = C64::new(0.0, 0.0);
    for (n, &p) in phases.iter().enumerate() {
        let w = slm.envelope_transform(omega - slm.pixel_detuning(n));
        if w != 0.0 {
            acc += C64::new(0.0, p).exp() * w;
        }
    }
    Ok(acc / norm)
}

/// Internal oversampling factor of the convolution grid relative to the
/// simulation step.
const OVERSAMPLE: usize = 8;

/// Shaped field on the simulation grid midpoints: E = (h ∗ E_in) evaluated by
/// FFT convolution on an oversampled internal grid, then decimated onto the
/// midpoints. The impulse response support is padded on both sides.
pub fn shape(spec: &PulseSpec, slm: &SlmSpec, grid: &TimeGrid) -> Result<Vec<C64>, PulseError> {
    spec.validate()?;
    slm.validate()?;
    shape_impl(spec, slm, grid)
}

fn shape_impl(spec: &PulseSpec, slm: &SlmSpec, grid: &TimeGrid) -> Result<Vec<C64>, PulseError> {
    let dt_fine = grid.dt / OVERSAMPLE as f64;
    if dt_fine > spec.tau / 8.0 {
        return Err(PulseError::Sampling(format!(
            "internal step {dt_fine} exceeds tau/8 = {}",
            spec.tau / 8.0
        )));
    }
    let (lo, hi) = grid.span();
    if spec.theta > 0.0
        && (spec.t_center - lo < 5.0 * spec.tau || hi - spec.t_center < 5.0 * spec.tau)
    {
        return Err(PulseError::Sampling(format!(
            "grid [{lo}, {hi}] does not cover the input pulse support t_c ± 5τ \
             (t_c = {}, τ = {})",
            spec.t_center, spec.tau
        )));
    }
    // half-support of h: where the spot Gaussian has decayed below 1e-11
    let t_h = (2.0 * (25.3f64).sqrt() / slm.spot_width()).max(4.0 * grid.dt);
    let pad_steps = (t_h / grid.dt).ceil() as usize + 1;
    let n_fine_signal = grid.n * OVERSAMPLE;
    let n_pad = pad_steps * OVERSAMPLE;
    let n_needed = n_fine_signal + 2 * n_pad;
    let n_fft = n_needed.next_power_of_two();

    // fine samples at integer multiples of dt_fine so the coarse midpoints
    // (at offsets pad + m dt + dt/2 = (8(pad + m) + 4) dt_fine) land exactly
    // on fine samples
    let t_start = grid.t0 - pad_steps as f64 * grid.dt;
    let fine_times: Vec<f64> = (0..n_fft).map(|k| t_start + k as f64 * dt_fine).collect();

    let amp = spec.theta / (std::f64::consts::PI.sqrt() * spec.tau);
    let e_in: Vec<C64> = fine_times
        .iter()
        .map(|&t| {
            let u = t - spec.t_center;
            let env = amp * (-(u / spec.tau) * (u / spec.tau)).exp();
            C64::new(0.0, -spec.delta * u).exp() * env
        })
        .collect();

    // impulse response, centered: h sampled on times relative to zero lag
    let phases = slm.phases(&spec.mask);
    let h_half = (t_h / dt_fine).ceil() as usize;
    let h_times: Vec<f64> = (-(h_half as isize)..=h_half as isize)
        .map(|k| k as f64 * dt_fine)
        .collect();
    let h_vals = impulse_response(slm, &phases, &h_times)?;

    // cyclic FFT convolution with h placed around index 0
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n_fft);
    let ifft = planner.plan_fft_inverse(n_fft);

    let mut sig: Vec<C64> = e_in;
    let mut ker: Vec<C64> = vec![C64::new(0.0, 0.0); n_fft];
    for (off, &v) in h_vals.iter().enumerate() {
        let k = off as isize - h_half as isize;
        let idx = k.rem_euclid(n_fft as isize) as usize;
        ker[idx] = v;
    }
    fft.process(&mut sig);
    fft.process(&mut ker);
    for (svv, kv) in sig.iter_mut().zip(ker.iter()) {
        *svv *= kv * dt_fine;
    }
    // aliasing check on the shaped spectrum: weight near the fine-grid
    // Nyquist must be negligible
    let total: f64 = sig.iter().map(|v| v.norm_sqr()).sum();
    let band = (n_fft / 50).max(1);
    let mid = n_fft / 2;
    let edge: f64 = sig[mid - band..mid + band].iter().map(|v| v.norm_sqr()).sum();
    if total > 0.0 && edge / total > 1e-6 {
        return Err(PulseError::Resolution {
            fraction: edge / total,
        });
    }
    ifft.process(&mut sig);
    let scale = 1.0 / n_fft as f64;

    let mut out = Vec::with_capacity(grid.n);
    for m in 0..grid.n {
        let idx = n_pad + m * OVERSAMPLE + OVERSAMPLE / 2;
        out.push(sig[idx] * scale);
    }
    Ok(out)
}
