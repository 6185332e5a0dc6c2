use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use cavity_bistability::analysis::{dominant_frequency, fit_model, stft, Series};
use cavity_bistability::config::{load_config, RunConfig, ScanSelection};
use cavity_bistability::dynamics::{
    CavitySystem, ChirpSpec, Drive, IntegrationOptions, NormalizedState, SaturationReading, Stepper,
};
use cavity_bistability::io;
use cavity_bistability::params::ShiftSign;
use cavity_bistability::steady::{
    bistable_region, detuning_grid, hysteresis_scan, steady_roots, transmission_raster,
    ScanDirection, ScanTrace,
};
use cavity_bistability::{Error, Result};

/// Dispersive optical bistability of saturable atoms in a driven cavity.
#[derive(Parser)]
#[command(name = "bistability", version)]
struct Cli {
    /// TOML run configuration; absent keys take the default parameter set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for emitted files.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,

    /// Seed for synthetic noise.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct ModelArgs {
    /// Interaction strength A (replaces the value derived from the atom number).
    #[arg(long = "a", conflicts_with = "n_atoms")]
    a: Option<f64>,
    /// Saturation parameter S (replaces the value derived from the pump power).
    #[arg(long = "s", conflicts_with = "pump_power_w")]
    s: Option<f64>,
    #[arg(long)]
    n_atoms: Option<f64>,
    #[arg(long)]
    pump_power_w: Option<f64>,
    /// `figure_convention` or `as_written`.
    #[arg(long)]
    shift_sign: Option<ShiftSign>,
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(n) = self.n_atoms {
            cfg.physical.n_atoms = n;
            cfg.a_override = None;
        }
        if let Some(p) = self.pump_power_w {
            cfg.physical.pump_power = p;
            cfg.s_override = None;
        }
        if self.a.is_some() {
            cfg.a_override = self.a;
        }
        if self.s.is_some() {
            cfg.s_override = self.s;
        }
        if let Some(sign) = self.shift_sign {
            cfg.shift_sign = sign;
        }
        cfg.validate()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print derived quantities (tau, G, A, S).
    Params {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Steady-state roots at one detuning.
    Steady {
        #[command(flatten)]
        model: ModelArgs,
        /// Detuning in units of κ/2.
        #[arg(long, allow_negative_numbers = true)]
        detuning: f64,
        /// Also write steady_roots.csv.
        #[arg(long)]
        csv: bool,
    },
    /// Bistable detuning interval.
    Region {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_negative_numbers = true, default_value_t = -100.0)]
        from: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 100.0)]
        to: f64,
    },
    /// Quasi-static hysteresis scans.
    Scan {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_negative_numbers = true)]
        start: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        end: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// increasing, decreasing or both.
        #[arg(long)]
        direction: Option<ScanSelection>,
        /// RMS of additive Gaussian intensity noise.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Time-domain integration under a chirped or fixed detuning.
    Dynamics {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_negative_numbers = true)]
        chirp_start: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        chirp_end: Option<f64>,
        #[arg(long)]
        duration_s: Option<f64>,
        /// Hold this detuning instead of chirping.
        #[arg(long, allow_negative_numbers = true)]
        detuning: Option<f64>,
        /// Use the fixed-step integrator.
        #[arg(long)]
        fixed_step: bool,
        /// `detuned` or `on_resonance`.
        #[arg(long)]
        saturation_reading: Option<SaturationReading>,
    },
    /// Spectrogram and dominant frequencies of a trajectory CSV.
    Spectrogram {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        window_len: Option<usize>,
        #[arg(long)]
        hop: Option<usize>,
        #[arg(long)]
        band_low_hz: Option<f64>,
        #[arg(long)]
        band_high_hz: Option<f64>,
    },
    /// Fit A and S to an increasing and a decreasing trace.
    Fit {
        #[arg(long)]
        increasing: PathBuf,
        #[arg(long)]
        decreasing: PathBuf,
        #[arg(long)]
        shift_sign: Option<ShiftSign>,
    },
    /// Scans and bistable regions over a range of A.
    Raster {
        #[arg(long, default_value_t = 0.0)]
        a_min: f64,
        #[arg(long, default_value_t = 60.0)]
        a_max: f64,
        #[arg(long, default_value_t = 200)]
        a_points: usize,
        #[arg(long = "s", default_value_t = 8.0)]
        s: f64,
        #[arg(long, allow_negative_numbers = true)]
        start: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        end: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        shift_sign: Option<ShiftSign>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    std::fs::create_dir_all(&cli.output_dir).map_err(|source| Error::Io {
        path: cli.output_dir.clone(),
        source,
    })?;
    let out = |name: &str| cli.output_dir.join(name);

    match cli.command {
        Command::Params { model } => {
            model.apply(&mut cfg)?;
            print!("{}", cfg.summary()?);
        }
        Command::Steady {
            model,
            detuning,
            csv,
        } => {
            model.apply(&mut cfg)?;
            let m = cfg.model_params()?;
            let solution = steady_roots(detuning, &m, &cfg.physical)?;
            println!("detuning_norm = {}", io::fmt_f64(detuning));
            for root in &solution.roots {
                let label = if root.stable { "stable" } else { "unstable" };
                println!("intensity_norm = {} # {label}", io::fmt_f64(root.intensity));
            }
            if csv {
                io::write_roots(&solution, &out("steady_roots.csv"))?;
            }
        }
        Command::Region { model, from, to } => {
            model.apply(&mut cfg)?;
            let m = cfg.model_params()?;
            match bistable_region(&m, (from, to))? {
                Some(r) => {
                    println!("lower_norm = {}", io::fmt_f64(r.lower));
                    println!("upper_norm = {}", io::fmt_f64(r.upper));
                    println!("width_norm = {}", io::fmt_f64(r.width()));
                }
                None => println!("# no bistable region in [{from}, {to}]"),
            }
        }
        Command::Scan {
            model,
            start,
            end,
            points,
            direction,
            noise,
        } => {
            model.apply(&mut cfg)?;
            let scan = &mut cfg.scan;
            scan.start = start.unwrap_or(scan.start);
            scan.end = end.unwrap_or(scan.end);
            scan.points = points.unwrap_or(scan.points);
            scan.selection = direction.unwrap_or(scan.selection);
            scan.noise_rms = noise.unwrap_or(scan.noise_rms);
            cfg.validate()?;
            let m = cfg.model_params()?;
            let grid = cfg.scan.grid();
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let normal = Normal::new(0.0, cfg.scan.noise_rms)
                .map_err(|e| Error::InvalidInput(format!("noise: {e}")))?;
            for dir in cfg.scan.selection.directions() {
                let ordered: Vec<f64> = match dir {
                    ScanDirection::Increasing => grid.clone(),
                    ScanDirection::Decreasing => grid.iter().rev().copied().collect(),
                };
                let mut trace = hysteresis_scan(&ordered, dir, &m, &cfg.physical)?;
                if cfg.scan.noise_rms > 0.0 {
                    add_noise(&mut trace, &normal, &mut rng);
                }
                let path = out(&format!("scan_{}.csv", dir.as_str()));
                io::write_trace(&trace, &path)?;
                println!("wrote {}", path.display());
            }
        }
        Command::Dynamics {
            model,
            chirp_start,
            chirp_end,
            duration_s,
            detuning,
            fixed_step,
            saturation_reading,
        } => {
            model.apply(&mut cfg)?;
            let m = cfg.model_params()?;
            let d = &mut cfg.dynamics;
            d.chirp = ChirpSpec::new(
                chirp_start.unwrap_or(d.chirp.start),
                chirp_end.unwrap_or(d.chirp.end),
                duration_s.unwrap_or(d.chirp.duration),
            )?;
            if fixed_step && !matches!(d.integration.stepper, Stepper::Fixed { .. }) {
                d.integration.stepper = IntegrationOptions::fixed_step().stepper;
            }
            d.reading = saturation_reading.unwrap_or(d.reading);
            let drive = match detuning {
                Some(detuning) => Drive::Fixed {
                    detuning,
                    duration: d.chirp.duration,
                },
                None => Drive::Chirp(d.chirp),
            };
            let system = CavitySystem::new(m, &cfg.physical, d.reading)?;
            let trajectory = system.integrate(NormalizedState::DARK, &drive, &d.integration)?;
            let path = out("trajectory.csv");
            io::write_trajectory(&io::TrajectoryTable::from(&trajectory), &path)?;
            println!("wrote {} ({} samples)", path.display(), trajectory.len());
        }
        Command::Spectrogram {
            input,
            window_len,
            hop,
            band_low_hz,
            band_high_hz,
        } => {
            let a = &mut cfg.analysis;
            a.stft.window_len = window_len.unwrap_or(a.stft.window_len);
            a.stft.hop = hop.unwrap_or(a.stft.hop);
            a.band = (
                band_low_hz.unwrap_or(a.band.0),
                band_high_hz.unwrap_or(a.band.1),
            );
            cfg.validate()?;
            let table = io::read_trajectory(&input)?;
            let dt = table.output_dt().ok_or_else(|| {
                Error::InvalidInput(format!("{}: need at least two samples", input.display()))
            })?;
            let series = Series::new(table.times[0], dt, table.intensities)?;
            let spec = stft(&series, &cfg.analysis.stft)?;
            let dominant = dominant_frequency(&spec, cfg.analysis.band)?;
            io::write_spectrogram(&spec, &out("spectrogram.csv"))?;
            io::write_dominant(&dominant, &out("dominant_frequency.csv"))?;
            let found = dominant.iter().filter(|d| d.frequency.is_some()).count();
            println!(
                "{} sections, {} oscillating; bin width {:.1} Hz",
                dominant.len(),
                found,
                spec.bin_width()
            );
        }
        Command::Fit {
            increasing,
            decreasing,
            shift_sign,
        } => {
            cfg.shift_sign = shift_sign.unwrap_or(cfg.shift_sign);
            let up = io::read_trace(&increasing)?;
            let down = io::read_trace(&decreasing)?;
            require_direction(&up, ScanDirection::Increasing, &increasing)?;
            require_direction(&down, ScanDirection::Decreasing, &decreasing)?;
            let fit = fit_model(&up, &down, &cfg.fit_options())?;
            let report = io::fit_report(&fit, Some((cfg.derived_a()?, cfg.derived_s()?)));
            print!("{report}");
            io::write_text(&report, &out("fit.toml"))?;
        }
        Command::Raster {
            a_min,
            a_max,
            a_points,
            s,
            start,
            end,
            points,
            shift_sign,
        } => {
            let scan = &mut cfg.scan;
            scan.start = start.unwrap_or(scan.start);
            scan.end = end.unwrap_or(scan.end);
            scan.points = points.unwrap_or(scan.points);
            cfg.shift_sign = shift_sign.unwrap_or(cfg.shift_sign);
            cfg.validate()?;
            if a_points < 2 || a_min.partial_cmp(&a_max) != Some(std::cmp::Ordering::Less) {
                return Err(Error::InvalidInput(
                    "raster needs a_min < a_max and a_points >= 2".into(),
                ));
            }
            let a_values = detuning_grid(a_min, a_max, a_points);
            let grid = cfg.scan.grid();
            let search = (grid[0] - 50.0, grid[grid.len() - 1] + a_max + 50.0);
            let rows =
                transmission_raster(&a_values, &grid, s, cfg.shift_sign, &cfg.physical, search)?;
            io::write_raster(&rows, &grid, &out("raster.csv"))?;
            io::write_regions(&rows, &out("regions.csv"))?;
            println!("wrote {} rows x {} detunings", rows.len(), grid.len());
        }
    }
    Ok(())
}

fn add_noise(trace: &mut ScanTrace, normal: &Normal<f64>, rng: &mut ChaCha8Rng) {
    for s in &mut trace.samples {
        s.intensity += normal.sample(rng);
    }
}

fn require_direction(trace: &ScanTrace, expected: ScanDirection, path: &Path) -> Result<()> {
    if trace.direction == expected {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{} holds a {} scan, expected {}",
            path.display(),
            trace.direction.as_str(),
            expected.as_str()
        )))
    }
}
