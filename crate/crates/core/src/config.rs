//! Run configuration read from a TOML file.
//!
//! Dimensional keys carry their unit as a suffix (`_hz`, `_s`, `_w`, `_m`,
//! `_w_per_m2`); frequencies given in Hz are stored as angular frequencies.
//! Detunings with the `_norm` suffix are in units of κ/2.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use toml::{Table, Value};

use crate::analysis::{FitBounds, FitOptions, StftOptions, WindowFunction};
use crate::dynamics::{
    ChirpSpec, IntegrationOptions, SaturationReading, Stepper, DEFAULT_ABS_TOL, DEFAULT_FIXED_DT,
};
use crate::error::{ConfigError, Error, Result};
use crate::params::{derive_a, derive_s, ModelParams, PhysicalParams, ShiftSign, TWO_PI};
use crate::steady::{detuning_grid, ScanDirection};

const SECTIONS: [&str; 5] = ["physical", "model", "scan", "dynamics", "analysis"];

/// (section, bare name, canonical key)
const DIMENSIONAL: [(&str, &str, &str); 12] = [
    ("physical", "kappa", "kappa_hz"),
    ("physical", "gamma", "gamma_hz"),
    ("physical", "g0", "g0_hz"),
    ("physical", "delta_ca", "delta_ca_hz"),
    ("physical", "i_sat", "i_sat_w_per_m2"),
    ("physical", "pump_power", "pump_power_w"),
    ("physical", "waist", "waist_m"),
    ("dynamics", "duration", "duration_s"),
    ("dynamics", "output_dt", "output_dt_s"),
    ("dynamics", "fixed_dt", "fixed_dt_s"),
    ("analysis", "band_low", "band_low_hz"),
    ("analysis", "band_high", "band_high_hz"),
];

const UNIT_SUFFIXES: [&str; 16] = [
    "_hz",
    "_khz",
    "_mhz",
    "_rad_s",
    "_s",
    "_ms",
    "_us",
    "_ns",
    "_w",
    "_mw",
    "_uw",
    "_m",
    "_mm",
    "_um",
    "_w_per_m2",
    "_mw_per_cm2",
];

/// Which scan directions the `scan` command emits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ScanSelection {
    Increasing,
    Decreasing,
    #[default]
    Both,
}

impl ScanSelection {
    pub fn directions(self) -> Vec<ScanDirection> {
        match self {
            ScanSelection::Increasing => vec![ScanDirection::Increasing],
            ScanSelection::Decreasing => vec![ScanDirection::Decreasing],
            ScanSelection::Both => vec![ScanDirection::Increasing, ScanDirection::Decreasing],
        }
    }
}

impl std::str::FromStr for ScanSelection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "increasing" => Ok(ScanSelection::Increasing),
            "decreasing" => Ok(ScanSelection::Decreasing),
            "both" => Ok(ScanSelection::Both),
            other => Err(format!(
                "expected increasing, decreasing or both, got `{other}`"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    pub selection: ScanSelection,
    /// RMS of additive Gaussian noise on synthetic traces.
    pub noise_rms: f64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec {
            start: -10.0,
            end: 40.0,
            points: 501,
            selection: ScanSelection::Both,
            noise_rms: 0.0,
        }
    }
}

impl ScanSpec {
    /// Ascending grid.
    pub fn grid(&self) -> Vec<f64> {
        detuning_grid(self.start, self.end, self.points)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsSpec {
    pub chirp: ChirpSpec,
    pub integration: IntegrationOptions,
    pub reading: SaturationReading,
}

impl Default for DynamicsSpec {
    fn default() -> Self {
        DynamicsSpec {
            chirp: ChirpSpec {
                start: 45.0,
                end: -5.0,
                duration: 68e-3,
            },
            integration: IntegrationOptions::default(),
            reading: SaturationReading::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisSpec {
    pub stft: StftOptions,
    /// Search band for the dominant frequency, Hz.
    pub band: (f64, f64),
    pub average_window: usize,
    pub fit_bounds: FitBounds,
    pub fit_max_iterations: usize,
    pub fit_tolerance: f64,
    /// Start the fit at the physically derived (A, S).
    pub fit_seed_physical: bool,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        let fit = FitOptions::default();
        AnalysisSpec {
            stft: StftOptions::default(),
            band: (10e3, 400e3),
            average_window: 11,
            fit_bounds: fit.bounds,
            fit_max_iterations: fit.max_iterations,
            fit_tolerance: fit.tolerance,
            fit_seed_physical: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub physical: PhysicalParams,
    /// Replaces the A derived from `physical`.
    pub a_override: Option<f64>,
    /// Replaces the S derived from `physical`.
    pub s_override: Option<f64>,
    pub shift_sign: ShiftSign,
    pub scan: ScanSpec,
    pub dynamics: DynamicsSpec,
    pub analysis: AnalysisSpec,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        let mut cfg = RunConfig::default();
        for (name, value) in &table {
            if !SECTIONS.contains(&name.as_str()) {
                return Err(ConfigError::UnknownSection(name.clone()).into());
            }
            if !value.is_table() {
                return Err(ConfigError::Syntax(format!("`{name}` must be a [section]")).into());
            }
        }

        let mut n_atoms_given = false;
        let mut pump_given = false;
        let mut s = Section::new("physical", &table);
        let p = &mut cfg.physical;
        if let Some(v) = s.f64("kappa_hz")? {
            p.kappa = TWO_PI * v;
        }
        if let Some(v) = s.f64("gamma_hz")? {
            p.gamma = TWO_PI * v;
        }
        if let Some(v) = s.f64("g0_hz")? {
            p.g0 = TWO_PI * v;
        }
        if let Some(v) = s.f64("delta_ca_hz")? {
            p.delta_ca = TWO_PI * v;
        }
        if let Some(v) = s.f64("n_atoms")? {
            p.n_atoms = v;
            n_atoms_given = true;
        }
        if let Some(v) = s.f64("i_sat_w_per_m2")? {
            p.i_sat = v;
        }
        if let Some(v) = s.f64("enhancement")? {
            p.enhancement_g = v;
        }
        if let Some(v) = s.f64("pump_power_w")? {
            p.pump_power = v;
            pump_given = true;
        }
        if let Some(v) = s.f64("waist_m")? {
            p.waist = v;
        }
        if let Some(v) = s.f64("intensity_calibration")? {
            p.intensity_calibration = v;
        }
        let t = s.f64("mirror_transmittance")?;
        let r = s.f64("mirror_reflectivity")?;
        match (t, r) {
            (Some(t), Some(r)) => {
                if s.seen("enhancement") {
                    p.mirror_t = Some(t);
                    p.mirror_r = Some(r);
                } else {
                    *p = p.clone().with_mirrors(t, r)?;
                }
            }
            (None, None) => {}
            _ => {
                return Err(ConfigError::Invalid(
                    "mirror_transmittance and mirror_reflectivity must be given together".into(),
                )
                .into())
            }
        }
        s.finish()?;

        let mut s = Section::new("model", &table);
        cfg.a_override = s.f64("a_param")?;
        cfg.s_override = s.f64("s_param")?;
        if let Some(v) = s.parsed::<ShiftSign>("shift_sign")? {
            cfg.shift_sign = v;
        }
        s.finish()?;
        if n_atoms_given && cfg.a_override.is_some() {
            return Err(ConfigError::Conflict {
                first: "n_atoms",
                second: "a_param",
            }
            .into());
        }
        if pump_given && cfg.s_override.is_some() {
            return Err(ConfigError::Conflict {
                first: "pump_power_w",
                second: "s_param",
            }
            .into());
        }

        let mut s = Section::new("scan", &table);
        let scan = &mut cfg.scan;
        if let Some(v) = s.f64("start_norm")? {
            scan.start = v;
        }
        if let Some(v) = s.f64("end_norm")? {
            scan.end = v;
        }
        if let Some(v) = s.usize("points")? {
            scan.points = v;
        }
        if let Some(v) = s.parsed::<ScanSelection>("direction")? {
            scan.selection = v;
        }
        if let Some(v) = s.f64("noise_rms")? {
            scan.noise_rms = v;
        }
        s.finish()?;

        let mut s = Section::new("dynamics", &table);
        let dynamics = &mut cfg.dynamics;
        if let Some(v) = s.f64("chirp_start_norm")? {
            dynamics.chirp.start = v;
        }
        if let Some(v) = s.f64("chirp_end_norm")? {
            dynamics.chirp.end = v;
        }
        if let Some(v) = s.f64("duration_s")? {
            dynamics.chirp.duration = v;
        }
        if let Some(v) = s.f64("output_dt_s")? {
            dynamics.integration.output_dt = v;
        }
        let stepper = s.string("stepper")?;
        let fixed_dt = s.f64("fixed_dt_s")?;
        let abs_tol = s.f64("abs_tol")?;
        dynamics.integration.stepper = match stepper.as_deref() {
            None | Some("adaptive") => {
                if fixed_dt.is_some() {
                    return Err(s.bad("fixed_dt_s", "only valid with stepper = \"fixed\""));
                }
                Stepper::Adaptive {
                    abs_tol: abs_tol.unwrap_or(DEFAULT_ABS_TOL),
                }
            }
            Some("fixed") => {
                if abs_tol.is_some() {
                    return Err(s.bad("abs_tol", "only valid with stepper = \"adaptive\""));
                }
                Stepper::Fixed {
                    dt: fixed_dt.unwrap_or(DEFAULT_FIXED_DT),
                }
            }
            Some(other) => {
                return Err(s.bad(
                    "stepper",
                    format!("expected adaptive or fixed, got `{other}`"),
                ))
            }
        };
        if let Some(v) = s.parsed::<SaturationReading>("saturation_reading")? {
            dynamics.reading = v;
        }
        s.finish()?;

        let mut s = Section::new("analysis", &table);
        let analysis = &mut cfg.analysis;
        if let Some(v) = s.usize("window_len")? {
            analysis.stft.window_len = v;
        }
        if let Some(v) = s.usize("hop")? {
            analysis.stft.hop = v;
        }
        if let Some(v) = s.parsed::<WindowFunction>("window")? {
            analysis.stft.window = v;
        }
        if let Some(v) = s.f64("band_low_hz")? {
            analysis.band.0 = v;
        }
        if let Some(v) = s.f64("band_high_hz")? {
            analysis.band.1 = v;
        }
        if let Some(v) = s.usize("average_window")? {
            analysis.average_window = v;
        }
        if let Some(v) = s.f64("fit_a_min")? {
            analysis.fit_bounds.a.0 = v;
        }
        if let Some(v) = s.f64("fit_a_max")? {
            analysis.fit_bounds.a.1 = v;
        }
        if let Some(v) = s.f64("fit_s_min")? {
            analysis.fit_bounds.s.0 = v;
        }
        if let Some(v) = s.f64("fit_s_max")? {
            analysis.fit_bounds.s.1 = v;
        }
        if let Some(v) = s.usize("fit_max_iterations")? {
            analysis.fit_max_iterations = v;
        }
        if let Some(v) = s.f64("fit_tolerance")? {
            analysis.fit_tolerance = v;
        }
        if let Some(v) = s.bool("fit_seed_physical")? {
            analysis.fit_seed_physical = v;
        }
        s.finish()?;

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        self.model_params()?;
        let invalid = |msg: String| Err(ConfigError::Invalid(msg).into());
        if self.scan.points < 2 {
            return invalid(format!(
                "scan.points must be >= 2, got {}",
                self.scan.points
            ));
        }
        if !(self.scan.start.is_finite()
            && self.scan.end.is_finite()
            && self.scan.start < self.scan.end)
        {
            return invalid("scan needs finite start_norm < end_norm".into());
        }
        if !(self.scan.noise_rms.is_finite() && self.scan.noise_rms >= 0.0) {
            return invalid("scan.noise_rms must be finite and >= 0".into());
        }
        ChirpSpec::new(
            self.dynamics.chirp.start,
            self.dynamics.chirp.end,
            self.dynamics.chirp.duration,
        )?;
        let output_dt = self.dynamics.integration.output_dt;
        if !(output_dt.is_finite() && output_dt > 0.0) {
            return invalid("dynamics.output_dt_s must be > 0".into());
        }
        match self.dynamics.integration.stepper {
            Stepper::Fixed { dt } if !(dt.is_finite() && dt > 0.0) => {
                return invalid("dynamics.fixed_dt_s must be > 0".into())
            }
            Stepper::Adaptive { abs_tol } if !(abs_tol.is_finite() && abs_tol > 0.0) => {
                return invalid("dynamics.abs_tol must be > 0".into())
            }
            _ => {}
        }
        let a = &self.analysis;
        if a.stft.window_len == 0 || a.stft.hop == 0 {
            return invalid("analysis.window_len and analysis.hop must be >= 1".into());
        }
        if !(a.band.0 >= 0.0 && a.band.0 < a.band.1) {
            return invalid("analysis needs 0 <= band_low_hz < band_high_hz".into());
        }
        if a.average_window.is_multiple_of(2) {
            return invalid("analysis.average_window must be odd".into());
        }
        for (name, (lo, hi)) in [("a", a.fit_bounds.a), ("s", a.fit_bounds.s)] {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
                return invalid(format!(
                    "analysis needs 0 <= fit_{name}_min < fit_{name}_max"
                ));
            }
        }
        if !(a.fit_tolerance > 0.0) {
            return invalid("analysis.fit_tolerance must be > 0".into());
        }
        Ok(())
    }

    pub fn derived_a(&self) -> Result<f64> {
        derive_a(&self.physical)
    }

    pub fn derived_s(&self) -> Result<f64> {
        derive_s(&self.physical)
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let a = match self.a_override {
            Some(a) => a,
            None => self.derived_a()?,
        };
        let s = match self.s_override {
            Some(s) => s,
            None => self.derived_s()?,
        };
        ModelParams::new(a, s, self.shift_sign)
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            bounds: self.analysis.fit_bounds,
            shift_sign: self.shift_sign,
            seed_from: self
                .analysis
                .fit_seed_physical
                .then(|| self.physical.clone()),
            rates: self.physical.clone(),
            max_iterations: self.analysis.fit_max_iterations,
            tolerance: self.analysis.fit_tolerance,
        }
    }

    /// Key-value echo of the derived quantities.
    pub fn summary(&self) -> Result<String> {
        let p = &self.physical;
        let m = self.model_params()?;
        let (a_phys, s_phys) = (self.derived_a()?, self.derived_s()?);
        let source = |over: Option<f64>, key: &str| match over {
            Some(_) => "override".to_string(),
            None => format!("derived from {key}"),
        };
        let mut out = String::new();
        let _ = writeln!(out, "tau_s = {:.9e}", p.tau());
        let _ = writeln!(out, "enhancement = {:.9e}", p.enhancement_g);
        let _ = writeln!(out, "pump_intensity_w_per_m2 = {:.9e}", p.pump_intensity());
        let _ = writeln!(
            out,
            "i_sat_eff_w_per_m2 = {:.9e}",
            p.effective_saturation_intensity()
        );
        let _ = writeln!(out, "a_physical = {a_phys:.9e}");
        let _ = writeln!(out, "s_physical = {s_phys:.9e}");
        let _ = writeln!(
            out,
            "a_param = {:.9e} # {}",
            m.a,
            source(self.a_override, "n_atoms")
        );
        let _ = writeln!(
            out,
            "s_param = {:.9e} # {}",
            m.s,
            source(self.s_override, "pump_power_w")
        );
        let _ = writeln!(out, "shift_sign = \"{}\"", m.shift_sign);
        Ok(out)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::from_toml_str(&text)
}

struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn new(name: &'static str, root: &'a Table) -> Self {
        Section {
            name,
            table: root.get(name).and_then(Value::as_table),
            used: BTreeSet::new(),
        }
    }

    fn bad(&self, key: &str, reason: impl Into<String>) -> Error {
        ConfigError::BadValue {
            section: self.name.into(),
            key: key.into(),
            reason: reason.into(),
        }
        .into()
    }

    fn seen(&self, key: &str) -> bool {
        self.table.is_some_and(|t| t.contains_key(key))
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn f64(&mut self, key: &'static str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(other) => {
                Err(self.bad(key, format!("expected a number, got {}", other.type_str())))
            }
        }
    }

    fn usize(&mut self, key: &'static str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(v)) => usize::try_from(*v)
                .map(Some)
                .map_err(|_| self.bad(key, format!("expected a non-negative integer, got {v}"))),
            Some(other) => Err(self.bad(
                key,
                format!("expected an integer, got {}", other.type_str()),
            )),
        }
    }

    fn bool(&mut self, key: &'static str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Boolean(v)) => Ok(Some(*v)),
            Some(other) => {
                Err(self.bad(key, format!("expected a boolean, got {}", other.type_str())))
            }
        }
    }

    fn string(&mut self, key: &'static str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(v)) => Ok(Some(v.clone())),
            Some(other) => {
                Err(self.bad(key, format!("expected a string, got {}", other.type_str())))
            }
        }
    }

    fn parsed<T>(&mut self, key: &'static str) -> Result<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match self.string(key)? {
            None => Ok(None),
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|e: T::Err| self.bad(key, e.to_string())),
        }
    }

    fn finish(self) -> Result<()> {
        let Some(table) = self.table else {
            return Ok(());
        };
        for key in table.keys() {
            if self.used.contains(key.as_str()) {
                continue;
            }
            let stem = UNIT_SUFFIXES
                .iter()
                .filter_map(|suffix| key.strip_suffix(suffix))
                .chain(std::iter::once(key.as_str()));
            for candidate in stem {
                if let Some((_, _, expected)) = DIMENSIONAL
                    .iter()
                    .find(|(section, bare, _)| *section == self.name && *bare == candidate)
                {
                    return Err(ConfigError::UnitSuffix {
                        section: self.name.into(),
                        key: key.clone(),
                        expected: (*expected).into(),
                    }
                    .into());
                }
            }
            return Err(ConfigError::UnknownKey {
                section: self.name.into(),
                key: key.clone(),
            }
            .into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DEFAULT_OUTPUT_DT;

    fn config_err(text: &str) -> ConfigError {
        match RunConfig::from_toml_str(text) {
            Err(Error::Config(e)) => e,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let m = cfg.model_params().unwrap();
        let p = PhysicalParams::default();
        let a_oracle = p.n_atoms * p.g0 * p.g0 / (3.0 * p.delta_ca * p.kappa);
        assert!((m.a - a_oracle).abs() < 1e-12 * a_oracle);
        assert!((m.a - 21.4).abs() < 0.1);
        assert!((m.s - 12.0).abs() < 1e-9);
        assert_eq!(m.shift_sign, ShiftSign::FigureConvention);
    }

    #[test]
    fn overrides_replace_derived_values() {
        let cfg = RunConfig::from_toml_str("[model]\na_param = 16\ns_param = 9.0\n").unwrap();
        let m = cfg.model_params().unwrap();
        assert_eq!((m.a, m.s), (16.0, 9.0));
        let echo = cfg.summary().unwrap();
        assert!(
            echo.contains("a_param = 1.600000000e1 # override"),
            "{echo}"
        );
        assert!(
            echo.contains("s_param = 9.000000000e0 # override"),
            "{echo}"
        );
        assert!(echo.contains("a_physical"));
    }

    #[test]
    fn both_atom_number_and_a_rejected() {
        let err = config_err("[physical]\nn_atoms = 1e5\n[model]\na_param = 16\n");
        let text = err.to_string();
        assert!(
            text.contains("n_atoms") && text.contains("a_param"),
            "{text}"
        );
        let err = config_err("[physical]\npump_power_w = 1e-4\n[model]\ns_param = 9\n");
        assert!(matches!(
            err,
            ConfigError::Conflict {
                first: "pump_power_w",
                second: "s_param"
            }
        ));
    }

    #[test]
    fn frequencies_in_hz_become_angular() {
        let cfg =
            RunConfig::from_toml_str("[physical]\nkappa_hz = 1e5\ndelta_ca_hz = -2e7\n").unwrap();
        assert_eq!(cfg.physical.kappa, TWO_PI * 1e5);
        assert_eq!(cfg.physical.delta_ca, TWO_PI * -2e7);
    }

    #[test]
    fn unit_suffix_violations_name_the_key() {
        for (text, key, expected) in [
            ("[physical]\nkappa = 7e4\n", "kappa", "kappa_hz"),
            ("[physical]\nkappa_khz = 70\n", "kappa_khz", "kappa_hz"),
            (
                "[physical]\npump_power_uw = 135\n",
                "pump_power_uw",
                "pump_power_w",
            ),
            (
                "[dynamics]\nduration_ms = 68\n",
                "duration_ms",
                "duration_s",
            ),
            ("[physical]\nwaist = 9e-5\n", "waist", "waist_m"),
        ] {
            match config_err(text) {
                ConfigError::UnitSuffix {
                    key: k,
                    expected: e,
                    ..
                } => {
                    assert_eq!((k.as_str(), e.as_str()), (key, expected))
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        assert!(matches!(
            config_err("[physics]\n"),
            ConfigError::UnknownSection(_)
        ));
        assert!(matches!(
            config_err("[scan]\nstep = 0.1\n"),
            ConfigError::UnknownKey { .. }
        ));
        assert!(matches!(
            config_err("top = 1\n"),
            ConfigError::UnknownSection(_)
        ));
        assert!(matches!(config_err("[scan\n"), ConfigError::Syntax(_)));
    }

    #[test]
    fn bad_values_reported() {
        assert!(matches!(
            config_err("[model]\nshift_sign = \"sideways\"\n"),
            ConfigError::BadValue { .. }
        ));
        assert!(matches!(
            config_err("[scan]\npoints = -3\n"),
            ConfigError::BadValue { .. }
        ));
        assert!(matches!(
            config_err("[scan]\npoints = 1\n"),
            ConfigError::Invalid(_)
        ));
        assert!(matches!(
            config_err("[dynamics]\nfixed_dt_s = 1e-8\n"),
            ConfigError::BadValue { .. }
        ));
        assert!(RunConfig::from_toml_str("[physical]\nwaist_m = -1.0\n").is_err());
    }

    #[test]
    fn sections_parse() {
        let text = r#"
            [physical]
            mirror_transmittance = 3.6e-5
            mirror_reflectivity = 0.9996838
            [model]
            shift_sign = "as_written"
            [scan]
            start_norm = -5
            end_norm = 15
            points = 201
            direction = "decreasing"
            noise_rms = 0.02
            [dynamics]
            chirp_start_norm = 40
            chirp_end_norm = 0
            duration_s = 1e-3
            stepper = "fixed"
            fixed_dt_s = 2e-8
            saturation_reading = "on_resonance"
            [analysis]
            window_len = 512
            hop = 256
            window = "hamming"
            band_low_hz = 1e4
            band_high_hz = 1.5e5
            fit_seed_physical = true
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert!((cfg.physical.enhancement_g - 3.6e-5 / (1.0f64 - 0.9996838).powi(2)).abs() < 1e-9);
        assert_eq!(cfg.shift_sign, ShiftSign::AsWritten);
        assert_eq!(cfg.scan.grid().len(), 201);
        assert_eq!(cfg.scan.selection, ScanSelection::Decreasing);
        assert_eq!(
            cfg.dynamics.integration.stepper,
            Stepper::Fixed { dt: 2e-8 }
        );
        assert_eq!(cfg.dynamics.reading, SaturationReading::OnResonance);
        assert_eq!(cfg.analysis.stft.window, WindowFunction::Hamming);
        assert!(cfg.fit_options().seed_from.is_some());
        assert_eq!(cfg.dynamics.integration.output_dt, DEFAULT_OUTPUT_DT);
    }

    #[test]
    fn load_reports_missing_path() {
        let err = load_config(Path::new("/nonexistent/run.toml")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/run.toml"));
    }
}
