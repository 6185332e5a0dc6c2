use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

/// Default section length: 2 MHz / 256 ≈ 7.8 kHz bins at 0.5 µs sampling.
pub const DEFAULT_WINDOW_LEN: usize = 256;
pub const DEFAULT_HOP: usize = 128;

/// A bin is an oscillation only if its peak exceeds this multiple of the band median.
pub const PEAK_TO_MEDIAN: f64 = 5.0;

/// Peaks below this fraction of the largest possible tone magnitude are silence.
const SILENCE_FLOOR: f64 = 1e-9;

/// Uniformly sampled real signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    /// Time of the first sample, s.
    pub start: f64,
    /// Sampling interval, s.
    pub dt: f64,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(start: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be > 0, got {dt}")));
        }
        Ok(Series { start, dt, values })
    }

    /// Transmitted intensity |e|² of a trajectory.
    pub fn intensity_of(trajectory: &Trajectory) -> Result<Self> {
        let dt = trajectory
            .output_dt()
            .ok_or_else(|| Error::InvalidInput("trajectory has fewer than two samples".into()))?;
        Series::new(trajectory.times[0], dt, trajectory.intensities())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WindowFunction {
    #[default]
    Hann,
    Hamming,
    Rectangular,
}

impl WindowFunction {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        let denom = len.max(2) as f64 - 1.0;
        (0..len)
            .map(|k| {
                let phase = 2.0 * PI * k as f64 / denom;
                match self {
                    WindowFunction::Hann => 0.5 - 0.5 * phase.cos(),
                    WindowFunction::Hamming => 0.54 - 0.46 * phase.cos(),
                    WindowFunction::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

impl std::str::FromStr for WindowFunction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "hann" => Ok(WindowFunction::Hann),
            "hamming" => Ok(WindowFunction::Hamming),
            "rectangular" => Ok(WindowFunction::Rectangular),
            other => Err(format!("unknown window `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StftOptions {
    pub window_len: usize,
    pub hop: usize,
    pub window: WindowFunction,
}

impl Default for StftOptions {
    fn default() -> Self {
        StftOptions {
            window_len: DEFAULT_WINDOW_LEN,
            hop: DEFAULT_HOP,
            window: WindowFunction::Hann,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    /// Section centers, s.
    pub time_bins: Vec<f64>,
    /// One-sided frequency axis from 0 to the Nyquist frequency, Hz.
    pub freq_bins: Vec<f64>,
    /// |DFT| per section, indexed `[time][frequency]`.
    pub magnitude: Vec<Vec<f64>>,
    /// Sum of the window coefficients; a unit-amplitude tone peaks near half of this.
    pub window_gain: f64,
    /// Largest |sample| of the analysed series.
    pub reference_level: f64,
}

impl Spectrogram {
    pub fn bin_width(&self) -> f64 {
        self.freq_bins.get(1).copied().unwrap_or(0.0)
    }
}

/// Magnitude spectra of mean-subtracted, windowed sections.
pub fn stft(series: &Series, options: &StftOptions) -> Result<Spectrogram> {
    let n = options.window_len;
    if n == 0 || n > series.values.len() {
        return Err(Error::param(
            "window_len",
            format!("must lie in [1, {}], got {n}", series.values.len()),
        ));
    }
    if options.hop == 0 {
        return Err(Error::param("hop", "must be >= 1"));
    }
    let window = options.window.coefficients(n);
    let fft = FftPlanner::new().plan_fft_forward(n);
    let n_freq = n / 2 + 1;
    let freq_bins = (0..n_freq)
        .map(|k| k as f64 / (n as f64 * series.dt))
        .collect();

    let mut time_bins = Vec::new();
    let mut magnitude = Vec::new();
    let mut buffer = vec![Complex::new(0.0, 0.0); n];
    let mut offset = 0;
    while offset + n <= series.values.len() {
        let section = &series.values[offset..offset + n];
        let mean = section.iter().sum::<f64>() / n as f64;
        for ((b, x), w) in buffer.iter_mut().zip(section).zip(&window) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buffer);
        magnitude.push(buffer[..n_freq].iter().map(|z| z.norm()).collect());
        time_bins.push(series.start + (offset as f64 + 0.5 * (n - 1) as f64) * series.dt);
        offset += options.hop;
    }
    Ok(Spectrogram {
        time_bins,
        freq_bins,
        magnitude,
        window_gain: window.iter().sum(),
        reference_level: series.values.iter().fold(0.0, |m, x| m.max(x.abs())),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominantFrequency {
    pub time: f64,
    /// `None` when the section shows no oscillation in the band.
    pub frequency: Option<f64>,
}

/// Strongest in-band frequency per section.
///
/// A section counts as oscillating when that bin is a local maximum of the
/// full spectrum, stands [`PEAK_TO_MEDIAN`] times above the band median and
/// clears a small floor relative to the signal level.
pub fn dominant_frequency(spec: &Spectrogram, band: (f64, f64)) -> Result<Vec<DominantFrequency>> {
    let (lo, hi) = band;
    let bins: Vec<usize> = spec
        .freq_bins
        .iter()
        .enumerate()
        .filter(|(_, f)| **f >= lo && **f <= hi)
        .map(|(k, _)| k)
        .collect();
    if !(lo < hi) || bins.is_empty() {
        return Err(Error::param(
            "band",
            format!("[{lo}, {hi}] Hz contains no frequency bin"),
        ));
    }
    let floor = SILENCE_FLOOR * spec.reference_level * spec.window_gain;
    Ok(spec
        .time_bins
        .iter()
        .zip(&spec.magnitude)
        .map(|(&time, mags)| {
            let mut in_band: Vec<f64> = bins.iter().map(|&k| mags[k]).collect();
            let (peak_idx, peak) = bins.iter().map(|&k| (k, mags[k])).fold(
                (bins[0], f64::NEG_INFINITY),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
            in_band.sort_by(f64::total_cmp);
            let median = if in_band.len() % 2 == 1 {
                in_band[in_band.len() / 2]
            } else {
                0.5 * (in_band[in_band.len() / 2 - 1] + in_band[in_band.len() / 2])
            };
            // slow drifts leak a spectrum that falls off from DC; require a true peak
            let rises_into = peak_idx == 0 || peak > mags[peak_idx - 1];
            let falls_after = mags.get(peak_idx + 1).is_none_or(|next| peak >= *next);
            let oscillating =
                peak > floor && peak >= PEAK_TO_MEDIAN * median && rises_into && falls_after;
            DominantFrequency {
                time,
                frequency: oscillating.then(|| spec.freq_bins[peak_idx]),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 2e6;

    fn tone(freq: f64, n: usize, amplitude: f64) -> Series {
        let values = (0..n)
            .map(|k| 0.4 + amplitude * (2.0 * PI * freq * k as f64 / FS).sin())
            .collect();
        Series::new(0.0, 1.0 / FS, values).unwrap()
    }

    #[test]
    fn stationary_tone_peaks_at_its_frequency() {
        let spec = stft(&tone(200e3, 4096, 0.1), &StftOptions::default()).unwrap();
        assert!((spec.bin_width() - 7812.5).abs() < 1e-9);
        assert_eq!(*spec.freq_bins.last().unwrap(), FS / 2.0);
        let dom = dominant_frequency(&spec, (0.0, FS / 2.0)).unwrap();
        assert_eq!(dom.len(), spec.time_bins.len());
        for d in dom {
            let f = d.frequency.expect("tone detected");
            assert!((f - 200e3).abs() <= spec.bin_width());
        }
    }

    #[test]
    fn chirp_peak_rises() {
        // f(t) = f0 + (f1 - f0) t / T; phase = 2π (f0 t + (f1 - f0) t² / (2T))
        let (f0, f1, n) = (100e3, 300e3, 8192);
        let total = n as f64 / FS;
        let values = (0..n)
            .map(|k| {
                let t = k as f64 / FS;
                (2.0 * PI * (f0 * t + 0.5 * (f1 - f0) * t * t / total)).sin()
            })
            .collect();
        let series = Series::new(0.0, 1.0 / FS, values).unwrap();
        let options = StftOptions {
            hop: 512,
            ..Default::default()
        };
        let spec = stft(&series, &options).unwrap();
        let freqs: Vec<f64> = dominant_frequency(&spec, (0.0, FS / 2.0))
            .unwrap()
            .iter()
            .map(|d| d.frequency.unwrap())
            .collect();
        assert!(freqs.windows(2).all(|w| w[1] > w[0]), "{freqs:?}");
        for (f, t) in freqs.iter().zip(&spec.time_bins) {
            let instantaneous = f0 + (f1 - f0) * t / total;
            assert!((f - instantaneous).abs() <= spec.bin_width());
        }
    }

    #[test]
    fn constant_series_is_silent() {
        let series = Series::new(0.0, 1.0 / FS, vec![0.37; 1024]).unwrap();
        let spec = stft(&series, &StftOptions::default()).unwrap();
        assert!(spec.magnitude.iter().flatten().all(|m| *m < 1e-9));
        let dom = dominant_frequency(&spec, (10e3, 150e3)).unwrap();
        assert!(dom.iter().all(|d| d.frequency.is_none()));
    }

    #[test]
    fn parseval_per_section() {
        let values: Vec<f64> = (0..1000)
            .map(|k| ((k as f64) * 0.173).sin() + 0.01 * k as f64)
            .collect();
        let series = Series::new(0.0, 1.0 / FS, values.clone()).unwrap();
        for window_len in [256, 255] {
            let options = StftOptions {
                window_len,
                hop: 100,
                window: WindowFunction::Hann,
            };
            let spec = stft(&series, &options).unwrap();
            let w = WindowFunction::Hann.coefficients(window_len);
            for (s, mags) in spec.magnitude.iter().enumerate() {
                let section = &values[s * 100..s * 100 + window_len];
                let mean = section.iter().sum::<f64>() / window_len as f64;
                let time_energy: f64 = section
                    .iter()
                    .zip(&w)
                    .map(|(x, wk)| ((x - mean) * wk).powi(2))
                    .sum();
                let mut spectral = 0.0;
                for (k, m) in mags.iter().enumerate() {
                    let doubled = k != 0 && !(window_len % 2 == 0 && k == window_len / 2);
                    spectral += if doubled { 2.0 } else { 1.0 } * m * m;
                }
                spectral /= window_len as f64;
                assert!(
                    ((time_energy - spectral) / time_energy).abs() < 1e-9,
                    "{time_energy} vs {spectral}"
                );
            }
        }
    }

    #[test]
    fn slow_drift_is_not_an_oscillation() {
        // a steady state followed through a chirp: smooth, non-periodic
        let values = (0..4096)
            .map(|k| 0.2 + 0.1 * (k as f64 / 4096.0).powi(2))
            .collect();
        let series = Series::new(0.0, 1.0 / FS, values).unwrap();
        let spec = stft(&series, &StftOptions::default()).unwrap();
        let dom = dominant_frequency(&spec, (10e3, 150e3)).unwrap();
        assert!(dom.iter().all(|d| d.frequency.is_none()), "{dom:?}");

        let mut with_tone = series.clone();
        for (k, v) in with_tone.values.iter_mut().enumerate() {
            *v += 1e-3 * (2.0 * PI * 50e3 * k as f64 / FS).sin();
        }
        let spec = stft(&with_tone, &StftOptions::default()).unwrap();
        for d in dominant_frequency(&spec, (10e3, 150e3)).unwrap() {
            assert!((d.frequency.expect("tone found") - 50e3).abs() <= spec.bin_width());
        }
    }

    #[test]
    fn dominant_frequency_ignores_amplitude_scale() {
        let base = tone(150e3, 2048, 0.05);
        let scaled = Series {
            values: base.values.iter().map(|v| v * 1e3).collect(),
            ..base.clone()
        };
        let a = dominant_frequency(
            &stft(&base, &StftOptions::default()).unwrap(),
            (10e3, 500e3),
        )
        .unwrap();
        let b = dominant_frequency(
            &stft(&scaled, &StftOptions::default()).unwrap(),
            (10e3, 500e3),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_sections_and_bands() {
        let s = tone(1e5, 100, 1.0);
        assert!(stft(&s, &StftOptions::default()).is_err());
        let opts = StftOptions {
            window_len: 64,
            hop: 0,
            ..Default::default()
        };
        assert!(stft(&s, &opts).is_err());
        let spec = stft(
            &s,
            &StftOptions {
                window_len: 64,
                hop: 32,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(dominant_frequency(&spec, (5.0, 6.0)).is_err());
        assert!(dominant_frequency(&spec, (2e5, 1e5)).is_err());
    }
}
