//! Laboratory and dimensionless parameters of the atom–cavity system.
//!
//! Every angular frequency is stored in rad/s. Conversion to the
//! dimensionless detuning axis (units of κ/2) happens only when building
//! [`ModelParams`].

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Dimensionless factor applied to the peak Gaussian pump intensity.
///
/// With the default parameter set (135 µW, w₀ = 90 µm, G = 360,
/// Δ_ca = 2π×30 MHz, Γ = 2π×182 kHz, I_sat = 1.4 W/m²) the raw peak
/// intensity gives S ≈ 25.1; this factor maps it onto S = 12.
pub const DEFAULT_INTENSITY_CALIBRATION: f64 = 0.478_010_716_522_538_3;

/// Relative tolerance on `enhancement_g == T / (1 - R)^2`.
const ENHANCEMENT_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalParams {
    /// Cavity linewidth (FWHM), rad/s.
    pub kappa: f64,
    /// Atomic linewidth, rad/s.
    pub gamma: f64,
    /// Single-atom coupling, rad/s.
    pub g0: f64,
    /// Cavity–atom detuning ω_c − ω_a, rad/s. May be negative.
    pub delta_ca: f64,
    /// Atoms coupled to the cavity mode.
    pub n_atoms: f64,
    /// On-resonance saturation intensity, W/m².
    pub i_sat: f64,
    pub mirror_t: Option<f64>,
    pub mirror_r: Option<f64>,
    /// Power enhancement G = T/(1−R)².
    pub enhancement_g: f64,
    /// Input pump power, W.
    pub pump_power: f64,
    /// Cavity mode waist, m.
    pub waist: f64,
    /// Multiplies the peak Gaussian intensity 2P/(πw₀²) to give I_in.
    pub intensity_calibration: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            kappa: TWO_PI * 70e3,
            gamma: TWO_PI * 182e3,
            g0: TWO_PI * 30e3,
            delta_ca: TWO_PI * 30e6,
            n_atoms: 150_000.0,
            i_sat: 1.4,
            mirror_t: None,
            mirror_r: None,
            enhancement_g: 360.0,
            pump_power: 135e-6,
            waist: 90e-6,
            intensity_calibration: DEFAULT_INTENSITY_CALIBRATION,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be finite and >= 0, got {value}"),
        ))
    }
}

impl PhysicalParams {
    /// Sets the mirror coefficients and recomputes the enhancement factor.
    pub fn with_mirrors(mut self, transmittance: f64, reflectivity: f64) -> Result<Self> {
        self.mirror_t = Some(transmittance);
        self.mirror_r = Some(reflectivity);
        self.enhancement_g = transmittance / (1.0 - reflectivity).powi(2);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        positive("kappa", self.kappa)?;
        positive("gamma", self.gamma)?;
        positive("g0", self.g0)?;
        positive("i_sat", self.i_sat)?;
        positive("enhancement_g", self.enhancement_g)?;
        positive("waist", self.waist)?;
        positive("intensity_calibration", self.intensity_calibration)?;
        non_negative("n_atoms", self.n_atoms)?;
        non_negative("pump_power", self.pump_power)?;
        if !self.delta_ca.is_finite() || self.delta_ca == 0.0 {
            return Err(Error::param("delta_ca", "must be finite and non-zero"));
        }
        match (self.mirror_t, self.mirror_r) {
            (None, None) => {}
            (Some(t), Some(r)) => {
                if !(t > 0.0 && t <= 1.0) {
                    return Err(Error::param(
                        "mirror_t",
                        format!("must lie in (0, 1], got {t}"),
                    ));
                }
                if !(r > 0.0 && r < 1.0) {
                    return Err(Error::param(
                        "mirror_r",
                        format!("must lie in (0, 1), got {r}"),
                    ));
                }
                let expected = t / (1.0 - r).powi(2);
                if ((self.enhancement_g - expected) / expected).abs() > ENHANCEMENT_REL_TOL {
                    return Err(Error::param(
                        "enhancement_g",
                        format!(
                            "{} disagrees with T/(1-R)^2 = {expected}",
                            self.enhancement_g
                        ),
                    ));
                }
            }
            _ => {
                return Err(Error::param(
                    "mirror_t",
                    "mirror transmittance and reflectivity must be given together",
                ))
            }
        }
        Ok(())
    }

    /// Excited-state lifetime τ = 1/Γ, s.
    pub fn tau(&self) -> f64 {
        1.0 / self.gamma
    }

    /// Saturation intensity at the cavity–atom detuning, (4Δ_ca²/Γ²)·I_sat.
    ///
    /// The pump–atom detuning is approximated by Δ_ca.
    pub fn effective_saturation_intensity(&self) -> f64 {
        4.0 * self.delta_ca * self.delta_ca / (self.gamma * self.gamma) * self.i_sat
    }

    /// Pump intensity I_in = calibration · 2P/(πw₀²), W/m².
    pub fn pump_intensity(&self) -> f64 {
        self.intensity_calibration * 2.0 * self.pump_power / (PI * self.waist * self.waist)
    }
}

/// Orientation of the atom-induced resonance shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ShiftSign {
    /// Effective detuning Δ̃ + A/(1+SĨ): the resonance is pulled to negative Δ̃.
    AsWritten,
    /// Effective detuning Δ̃ − A/(1+SĨ): the resonance is pulled to positive Δ̃.
    #[default]
    FigureConvention,
}

impl ShiftSign {
    pub fn sign(self) -> f64 {
        match self {
            ShiftSign::AsWritten => 1.0,
            ShiftSign::FigureConvention => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ShiftSign::AsWritten => ShiftSign::FigureConvention,
            ShiftSign::FigureConvention => ShiftSign::AsWritten,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ShiftSign::AsWritten => "as_written",
            ShiftSign::FigureConvention => "figure_convention",
        }
    }
}

impl std::str::FromStr for ShiftSign {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "as_written" => Ok(ShiftSign::AsWritten),
            "figure_convention" => Ok(ShiftSign::FigureConvention),
            other => Err(format!(
                "unknown shift sign `{other}` (expected `as_written` or `figure_convention`)"
            )),
        }
    }
}

impl fmt::Display for ShiftSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dimensionless parameters of the normalized resonance equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Atom–cavity interaction strength A.
    pub a: f64,
    /// Saturation parameter S.
    pub s: f64,
    pub shift_sign: ShiftSign,
}

impl ModelParams {
    pub fn new(a: f64, s: f64, shift_sign: ShiftSign) -> Result<Self> {
        let m = ModelParams { a, s, shift_sign };
        m.validate()?;
        Ok(m)
    }

    pub fn from_physical(p: &PhysicalParams, shift_sign: ShiftSign) -> Result<Self> {
        Self::new(derive_a(p)?, derive_s(p)?, shift_sign)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() {
            return Err(Error::param(
                "a_param",
                format!("must be finite, got {}", self.a),
            ));
        }
        non_negative("s_param", self.s)
    }

    /// Normalized unsaturated population fraction n = 1/(1+SĨ).
    pub fn population_fraction(&self, intensity: f64) -> f64 {
        1.0 / (1.0 + self.s * intensity)
    }

    /// Δ̃_eff = Δ̃ ± A/(1+SĨ), sign per [`ShiftSign`].
    pub fn effective_detuning(&self, detuning: f64, intensity: f64) -> f64 {
        detuning + self.shift_sign.sign() * self.a * self.population_fraction(intensity)
    }
}

/// Resonance shift Δ_n = g₀²·N_δ/(6Δ_ca) in rad/s.
pub fn dispersive_shift(n_delta: f64, p: &PhysicalParams) -> Result<f64> {
    if !(n_delta >= 0.0 && n_delta <= p.n_atoms) {
        return Err(Error::param(
            "n_delta",
            format!("must lie in [0, {}], got {n_delta}", p.n_atoms),
        ));
    }
    Ok(p.g0 * p.g0 * n_delta / (6.0 * p.delta_ca))
}

/// Ground-minus-excited population N/(1 + I/I_sat_eff) at intra-cavity intensity `i_cav` (W/m²).
pub fn steady_population_difference(i_cav: f64, p: &PhysicalParams) -> Result<f64> {
    if !(i_cav >= 0.0) {
        return Err(Error::param("i_cav", format!("must be >= 0, got {i_cav}")));
    }
    Ok(p.n_atoms / (1.0 + i_cav / p.effective_saturation_intensity()))
}

/// A = N·g₀²/(3·Δ_ca·κ).
pub fn derive_a(p: &PhysicalParams) -> Result<f64> {
    p.validate()?;
    Ok(p.n_atoms * p.g0 * p.g0 / (3.0 * p.delta_ca * p.kappa))
}

/// S = G·I_in·Γ²/(4·Δ_ca²·I_sat).
pub fn derive_s(p: &PhysicalParams) -> Result<f64> {
    p.validate()?;
    Ok(p.enhancement_g * p.pump_intensity() / p.effective_saturation_intensity())
}
