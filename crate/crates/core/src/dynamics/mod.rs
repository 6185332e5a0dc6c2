//! Time-domain model: driven cavity field coupled to the ground–excited
//! population difference.
//!
//! In normalized variables e = E_cav/(√G·E_in) and n = N_δ/N the system is
//!
//! ```text
//! de/dt = (κ/2)·[ i − e + i·(Δ̃ ± A·n)·e ]
//! dn/dt = (1/τ)·[ 1 − n·(1 + S·|e|²) ]
//! ```
//!
//! whose fixed points are exactly the steady states in [`crate::steady`].

mod ode;

use nalgebra::{Complex, Matrix3};

pub use ode::Stepper;

use crate::error::{Error, Result};
use crate::params::{ModelParams, PhysicalParams};

/// Fixed RK4 step used for reproducible regression runs, s.
pub const DEFAULT_FIXED_DT: f64 = 10e-9;

/// Output sampling interval, s.
pub const DEFAULT_OUTPUT_DT: f64 = 0.5e-6;

pub const DEFAULT_ABS_TOL: f64 = 1e-9;

/// Internal step bound as a fraction of min(1/κ, τ).
const STEP_FRACTION: f64 = 0.05;

/// Allowed excess of |e|² above one during transients.
const INTENSITY_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizedState {
    pub field_re: f64,
    pub field_im: f64,
    /// n = N_δ/N.
    pub pop_fraction: f64,
}

impl NormalizedState {
    /// Empty cavity, unsaturated atoms.
    pub const DARK: NormalizedState = NormalizedState {
        field_re: 0.0,
        field_im: 0.0,
        pop_fraction: 1.0,
    };

    pub fn intensity(&self) -> f64 {
        self.field_re * self.field_re + self.field_im * self.field_im
    }

    pub fn field(&self) -> Complex<f64> {
        Complex::new(self.field_re, self.field_im)
    }

    /// Fixed point belonging to the steady intensity `intensity` at `detuning`.
    pub fn steady(intensity: f64, detuning: f64, m: &ModelParams) -> Self {
        let n = m.population_fraction(intensity);
        let d = detuning + m.shift_sign.sign() * m.a * n;
        // e = i / (1 − iδ)
        let norm = 1.0 + d * d;
        NormalizedState {
            field_re: -d / norm,
            field_im: 1.0 / norm,
            pop_fraction: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let i = self.intensity();
        if !(i.is_finite() && i <= 1.0 + INTENSITY_SLACK) {
            return Err(Error::param("state", format!("|e|^2 = {i} outside [0, 1]")));
        }
        if !(self.pop_fraction > 0.0 && self.pop_fraction <= 1.0) {
            return Err(Error::param(
                "state",
                format!("population fraction {} outside (0, 1]", self.pop_fraction),
            ));
        }
        Ok(())
    }

    fn to_array(self) -> [f64; 3] {
        [self.field_re, self.field_im, self.pop_fraction]
    }

    fn from_array(y: [f64; 3]) -> Self {
        NormalizedState {
            field_re: y[0],
            field_im: y[1],
            pop_fraction: y[2],
        }
    }
}

/// Which saturation intensity divides I_cav in the population equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SaturationReading {
    /// The detuned I_sat_eff, consistent with the steady-state population.
    #[default]
    Detuned,
    /// The bare on-resonance I_sat; scales S by 4Δ_ca²/Γ².
    OnResonance,
}

impl SaturationReading {
    pub fn as_str(self) -> &'static str {
        match self {
            SaturationReading::Detuned => "detuned",
            SaturationReading::OnResonance => "on_resonance",
        }
    }
}

impl std::str::FromStr for SaturationReading {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "detuned" => Ok(SaturationReading::Detuned),
            "on_resonance" => Ok(SaturationReading::OnResonance),
            other => Err(format!(
                "unknown saturation reading `{other}` (expected `detuned` or `on_resonance`)"
            )),
        }
    }
}

/// Linear detuning ramp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChirpSpec {
    pub start: f64,
    pub end: f64,
    /// Ramp duration, s.
    pub duration: f64,
}

impl ChirpSpec {
    pub fn new(start: f64, end: f64, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::param(
                "duration",
                format!("must be > 0, got {duration}"),
            ));
        }
        if !(start.is_finite() && end.is_finite()) {
            return Err(Error::param(
                "chirp",
                "start and end detunings must be finite",
            ));
        }
        Ok(ChirpSpec {
            start,
            end,
            duration,
        })
    }

    pub fn detuning_at(&self, t: f64) -> f64 {
        self.start + (self.end - self.start) * (t / self.duration)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Drive {
    Fixed { detuning: f64, duration: f64 },
    Chirp(ChirpSpec),
}

impl Drive {
    pub fn duration(&self) -> f64 {
        match self {
            Drive::Fixed { duration, .. } => *duration,
            Drive::Chirp(c) => c.duration,
        }
    }

    pub fn detuning_at(&self, t: f64) -> f64 {
        match self {
            Drive::Fixed { detuning, .. } => *detuning,
            Drive::Chirp(c) => c.detuning_at(t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationOptions {
    /// Uniform output sampling interval, s.
    pub output_dt: f64,
    pub stepper: Stepper,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            output_dt: DEFAULT_OUTPUT_DT,
            stepper: Stepper::Adaptive {
                abs_tol: DEFAULT_ABS_TOL,
            },
        }
    }
}

impl IntegrationOptions {
    pub fn fixed_step() -> Self {
        IntegrationOptions {
            output_dt: DEFAULT_OUTPUT_DT,
            stepper: Stepper::Fixed {
                dt: DEFAULT_FIXED_DT,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Trajectory {
    /// Sample times, s; uniformly spaced from zero.
    pub times: Vec<f64>,
    pub states: Vec<NormalizedState>,
    /// Drive detuning at each sample, units of κ/2.
    pub detunings: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.states.iter().map(NormalizedState::intensity).collect()
    }

    pub fn output_dt(&self) -> Option<f64> {
        (self.times.len() > 1).then(|| self.times[1] - self.times[0])
    }

    pub fn last(&self) -> Option<&NormalizedState> {
        self.states.last()
    }
}

/// Rates and model constants of the coupled field–population system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavitySystem {
    model: ModelParams,
    kappa: f64,
    tau: f64,
    saturation_scale: f64,
}

impl CavitySystem {
    pub fn new(model: ModelParams, p: &PhysicalParams, reading: SaturationReading) -> Result<Self> {
        model.validate()?;
        p.validate()?;
        let saturation_scale = match reading {
            SaturationReading::Detuned => 1.0,
            SaturationReading::OnResonance => p.effective_saturation_intensity() / p.i_sat,
        };
        Ok(CavitySystem {
            model,
            kappa: p.kappa,
            tau: p.tau(),
            saturation_scale,
        })
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Saturation parameter seen by the population equation.
    pub fn effective_s(&self) -> f64 {
        self.model.s * self.saturation_scale
    }

    fn shifted_detuning(&self, state: &NormalizedState, detuning: f64) -> f64 {
        detuning + self.model.shift_sign.sign() * self.model.a * state.pop_fraction
    }

    /// de/dt in 1/s.
    pub fn field_derivative(&self, state: &NormalizedState, detuning: f64) -> Complex<f64> {
        let d = self.shifted_detuning(state, detuning);
        let e = state.field();
        let i = Complex::i();
        (i - e + i * d * e) * (0.5 * self.kappa)
    }

    /// dn/dt in 1/s.
    pub fn population_derivative(&self, state: &NormalizedState) -> f64 {
        (1.0 - state.pop_fraction * (1.0 + self.effective_s() * state.intensity())) / self.tau
    }

    fn rhs(&self, y: &[f64; 3], detuning: f64) -> [f64; 3] {
        let state = NormalizedState::from_array(*y);
        let de = self.field_derivative(&state, detuning);
        [de.re, de.im, self.population_derivative(&state)]
    }

    /// ∂(ė_re, ė_im, ṅ)/∂(e_re, e_im, n).
    pub fn jacobian(&self, state: &NormalizedState, detuning: f64) -> Matrix3<f64> {
        let half_kappa = 0.5 * self.kappa;
        let sigma_a = self.model.shift_sign.sign() * self.model.a;
        let d = self.shifted_detuning(state, detuning);
        let s = self.effective_s();
        let (er, ei, n) = (state.field_re, state.field_im, state.pop_fraction);
        let inv_tau = 1.0 / self.tau;
        #[rustfmt::skip]
        let jac = Matrix3::new(
            -half_kappa,              -half_kappa * d,          -half_kappa * sigma_a * ei,
            half_kappa * d,           -half_kappa,              half_kappa * sigma_a * er,
            -2.0 * inv_tau * n * s * er, -2.0 * inv_tau * n * s * ei, -inv_tau * (1.0 + s * state.intensity()),
        );
        jac
    }

    /// Largest internal step that resolves both the cavity and atomic rates.
    pub fn max_step(&self) -> f64 {
        STEP_FRACTION * (1.0 / self.kappa).min(self.tau)
    }

    pub fn integrate(
        &self,
        initial: NormalizedState,
        drive: &Drive,
        options: &IntegrationOptions,
    ) -> Result<Trajectory> {
        initial.validate()?;
        let duration = drive.duration();
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::param(
                "duration",
                format!("must be > 0, got {duration}"),
            ));
        }
        if !(options.output_dt.is_finite() && options.output_dt > 0.0) {
            return Err(Error::param(
                "output_dt",
                format!("must be > 0, got {}", options.output_dt),
            ));
        }
        match options.stepper {
            Stepper::Fixed { dt } if !(dt > 0.0 && dt <= self.max_step()) => {
                return Err(Error::param(
                    "fixed_dt",
                    format!("must lie in (0, {:e}] s, got {dt:e}", self.max_step()),
                ));
            }
            Stepper::Adaptive { abs_tol } if !(abs_tol > 0.0) => {
                return Err(Error::param(
                    "abs_tol",
                    format!("must be > 0, got {abs_tol}"),
                ));
            }
            _ => {}
        }

        let (times, raw) = ode::solve(
            |t, y| self.rhs(y, drive.detuning_at(t)),
            initial.to_array(),
            duration,
            options.output_dt,
            self.max_step(),
            options.stepper,
        )?;
        let detunings = times.iter().map(|&t| drive.detuning_at(t)).collect();
        Ok(Trajectory {
            times,
            states: raw.into_iter().map(NormalizedState::from_array).collect(),
            detunings,
        })
    }
}
