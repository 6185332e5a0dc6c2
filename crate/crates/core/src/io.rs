//! Plot-ready CSV files.
//!
//! Every file starts with a single header line; floats are written with nine
//! significant digits. Detunings are in units of κ/2, intensities are
//! normalized to the empty-cavity resonance.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use crate::analysis::{DominantFrequency, FitResult, Spectrogram};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::steady::{RasterRow, ScanDirection, ScanTrace, SteadySolution, TracePoint};

pub const TRACE_HEADER: [&str; 2] = ["detuning_norm", "intensity_norm"];
pub const TRAJECTORY_HEADER: [&str; 4] = ["t_s", "detuning_norm", "intensity_norm", "pop_fraction"];
pub const SPECTROGRAM_HEADER: [&str; 3] = ["time_s", "freq_hz", "magnitude"];
pub const ROOTS_HEADER: [&str; 3] = ["detuning_norm", "intensity_norm", "stable"];
pub const DOMINANT_HEADER: [&str; 2] = ["time_s", "freq_hz"];
pub const RASTER_HEADER: [&str; 4] = [
    "a_param",
    "detuning_norm",
    "intensity_increasing",
    "intensity_decreasing",
];
pub const REGION_HEADER: [&str; 3] = ["a_param", "region_lower_norm", "region_upper_norm"];

/// Nine significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.8e}")
}

/// Trajectory columns as stored on disk.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub detunings: Vec<f64>,
    pub intensities: Vec<f64>,
    pub pop_fractions: Vec<f64>,
}

impl From<&Trajectory> for TrajectoryTable {
    fn from(t: &Trajectory) -> Self {
        TrajectoryTable {
            times: t.times.clone(),
            detunings: t.detunings.clone(),
            intensities: t.intensities(),
            pop_fractions: t.states.iter().map(|s| s.pop_fraction).collect(),
        }
    }
}

impl TrajectoryTable {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Sampling interval taken from the first two rows.
    pub fn output_dt(&self) -> Option<f64> {
        (self.times.len() >= 2).then(|| self.times[1] - self.times[0])
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(io_err(path))?;
    let mut writer = csv::Writer::from_writer(std::io::BufWriter::new(file));
    writer.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        writer.write_record(&row).map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

/// Rows of optional floats (empty cell = `None`) after checking the header.
fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<Option<f64>>>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let found = reader.headers().map_err(csv_err(path))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        if record.len() != header.len() {
            return Err(parse_err(format!(
                "expected {} fields, found {}",
                header.len(),
                record.len()
            )));
        }
        let row = record
            .iter()
            .map(|field| match field {
                "" => Ok(None),
                text => text
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| parse_err(format!("`{text}` is not a number"))),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn required(path: &Path, rows: Vec<Vec<Option<f64>>>, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    rows.into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .zip(header)
                .map(|(v, name)| {
                    v.ok_or_else(|| Error::Parse {
                        path: path.to_path_buf(),
                        line: i as u64 + 2,
                        reason: format!("missing value for `{name}`"),
                    })
                })
                .collect()
        })
        .collect()
}

pub fn write_trace(trace: &ScanTrace, path: &Path) -> Result<()> {
    write_rows(
        path,
        &TRACE_HEADER,
        trace
            .samples
            .iter()
            .map(|s| vec![fmt_f64(s.detuning), fmt_f64(s.intensity)]),
    )
}

/// Reads a trace; the scan direction follows from the row order.
pub fn read_trace(path: &Path) -> Result<ScanTrace> {
    let rows = required(path, read_rows(path, &TRACE_HEADER)?, &TRACE_HEADER)?;
    let samples: Vec<TracePoint> = rows
        .iter()
        .map(|r| TracePoint {
            detuning: r[0],
            intensity: r[1],
        })
        .collect();
    let direction = match samples.as_slice() {
        [first, second, ..] if second.detuning < first.detuning => ScanDirection::Decreasing,
        _ => ScanDirection::Increasing,
    };
    let ordered = samples.windows(2).all(|w| match direction {
        ScanDirection::Increasing => w[1].detuning > w[0].detuning,
        ScanDirection::Decreasing => w[1].detuning < w[0].detuning,
    });
    if samples.is_empty() || !ordered {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            reason: "detunings must be non-empty and strictly monotone".into(),
        });
    }
    Ok(ScanTrace { direction, samples })
}

pub fn write_trajectory(table: &TrajectoryTable, path: &Path) -> Result<()> {
    write_rows(
        path,
        &TRAJECTORY_HEADER,
        (0..table.len()).map(|i| {
            vec![
                fmt_f64(table.times[i]),
                fmt_f64(table.detunings[i]),
                fmt_f64(table.intensities[i]),
                fmt_f64(table.pop_fractions[i]),
            ]
        }),
    )
}

pub fn read_trajectory(path: &Path) -> Result<TrajectoryTable> {
    let rows = required(
        path,
        read_rows(path, &TRAJECTORY_HEADER)?,
        &TRAJECTORY_HEADER,
    )?;
    let column = |k: usize| rows.iter().map(|r| r[k]).collect();
    Ok(TrajectoryTable {
        times: column(0),
        detunings: column(1),
        intensities: column(2),
        pop_fractions: column(3),
    })
}

/// Long format: one row per (time, frequency) bin.
pub fn write_spectrogram(spec: &Spectrogram, path: &Path) -> Result<()> {
    write_rows(
        path,
        &SPECTROGRAM_HEADER,
        spec.time_bins
            .iter()
            .zip(&spec.magnitude)
            .flat_map(|(t, mags)| {
                spec.freq_bins
                    .iter()
                    .zip(mags)
                    .map(move |(f, m)| vec![fmt_f64(*t), fmt_f64(*f), fmt_f64(*m)])
            }),
    )
}

/// Window gain and reference level are not stored and read back as zero.
pub fn read_spectrogram(path: &Path) -> Result<Spectrogram> {
    let rows = required(
        path,
        read_rows(path, &SPECTROGRAM_HEADER)?,
        &SPECTROGRAM_HEADER,
    )?;
    let mut time_bins: Vec<f64> = Vec::new();
    let mut magnitude: Vec<Vec<f64>> = Vec::new();
    let mut freq_bins: Vec<f64> = Vec::new();
    for r in &rows {
        if time_bins.last() != Some(&r[0]) {
            time_bins.push(r[0]);
            magnitude.push(Vec::new());
        }
        let current = magnitude.last_mut().expect("pushed above");
        if time_bins.len() == 1 {
            freq_bins.push(r[1]);
        } else if freq_bins.get(current.len()) != Some(&r[1]) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                reason: format!("frequency bins differ at time {}", r[0]),
            });
        }
        current.push(r[2]);
    }
    if magnitude.iter().any(|m| m.len() != freq_bins.len()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            reason: "every time bin needs the same number of frequency rows".into(),
        });
    }
    Ok(Spectrogram {
        time_bins,
        freq_bins,
        magnitude,
        window_gain: 0.0,
        reference_level: 0.0,
    })
}

/// Empty `freq_hz` cells mark sections without oscillation.
pub fn write_dominant(series: &[DominantFrequency], path: &Path) -> Result<()> {
    write_rows(
        path,
        &DOMINANT_HEADER,
        series.iter().map(|d| {
            vec![
                fmt_f64(d.time),
                d.frequency.map(fmt_f64).unwrap_or_default(),
            ]
        }),
    )
}

pub fn read_dominant(path: &Path) -> Result<Vec<DominantFrequency>> {
    read_rows(path, &DOMINANT_HEADER)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let time = r[0].ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 2,
                reason: "missing value for `time_s`".into(),
            })?;
            Ok(DominantFrequency {
                time,
                frequency: r[1],
            })
        })
        .collect()
}

pub fn write_roots(solution: &SteadySolution, path: &Path) -> Result<()> {
    write_rows(
        path,
        &ROOTS_HEADER,
        solution.roots.iter().map(|r| {
            vec![
                fmt_f64(solution.detuning),
                fmt_f64(r.intensity),
                u8::from(r.stable).to_string(),
            ]
        }),
    )
}

/// Long-format raster over `grid` (ascending) for every row.
pub fn write_raster(rows: &[RasterRow], grid: &[f64], path: &Path) -> Result<()> {
    write_rows(
        path,
        &RASTER_HEADER,
        rows.iter().flat_map(|row| {
            grid.iter().enumerate().map(move |(k, d)| {
                vec![
                    fmt_f64(row.a),
                    fmt_f64(*d),
                    fmt_f64(row.increasing[k]),
                    fmt_f64(row.decreasing[k]),
                ]
            })
        }),
    )
}

/// Bistable interval per row; empty cells when there is none.
pub fn write_regions(rows: &[RasterRow], path: &Path) -> Result<()> {
    write_rows(
        path,
        &REGION_HEADER,
        rows.iter().map(|row| {
            let (lo, hi) = row.region.map_or((String::new(), String::new()), |r| {
                (fmt_f64(r.lower), fmt_f64(r.upper))
            });
            vec![fmt_f64(row.a), lo, hi]
        }),
    )
}

/// TOML key-value summary of a fit, with the physically derived values beside it.
pub fn fit_report(fit: &FitResult, physical: Option<(f64, f64)>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "a_est = {}", fmt_f64(fit.a_est));
    let _ = writeln!(out, "s_est = {}", fmt_f64(fit.s_est));
    let _ = writeln!(out, "residual_rms = {}", fmt_f64(fit.residual_rms));
    let _ = writeln!(out, "converged = {}", fit.converged);
    let _ = writeln!(out, "iterations = {}", fit.iterations);
    if let Some((a, s)) = physical {
        let _ = writeln!(out, "a_physical = {}", fmt_f64(a));
        let _ = writeln!(out, "s_physical = {}", fmt_f64(s));
    }
    out
}

pub fn write_text(text: &str, path: &Path) -> Result<()> {
    let mut file = File::create(path).map_err(io_err(path))?;
    file.write_all(text.as_bytes()).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::SteadyRoot;

    fn rounded(x: f64) -> f64 {
        fmt_f64(x).parse().unwrap()
    }

    fn lines(path: &Path) -> Vec<String> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(String::from)
            .collect()
    }

    #[test]
    fn three_sample_trace_is_four_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("up.csv");
        let trace = ScanTrace {
            direction: ScanDirection::Increasing,
            samples: vec![
                TracePoint {
                    detuning: -0.1,
                    intensity: 0.2,
                },
                TracePoint {
                    detuning: 0.0,
                    intensity: 1.0 / 3.0,
                },
                TracePoint {
                    detuning: 0.1,
                    intensity: 0.5,
                },
            ],
        };
        write_trace(&trace, &path).unwrap();
        let text = lines(&path);
        assert_eq!(text.len(), 4);
        assert_eq!(text[0], "detuning_norm,intensity_norm");
        assert_eq!(text[2], "0.00000000e0,3.33333333e-1");
    }

    #[test]
    fn trace_round_trip_and_direction() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("down.csv");
        let samples: Vec<TracePoint> = (0..50)
            .map(|k| TracePoint {
                detuning: 3.0 - 0.0999 * k as f64,
                intensity: (0.37 * k as f64).sin().abs() / 7.0,
            })
            .collect();
        let trace = ScanTrace {
            direction: ScanDirection::Decreasing,
            samples,
        };
        write_trace(&trace, &path).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back.direction, ScanDirection::Decreasing);
        for (a, b) in trace.samples.iter().zip(&back.samples) {
            assert_eq!(rounded(a.detuning), b.detuning);
            assert_eq!(rounded(a.intensity), b.intensity);
        }
        let again = dir.path().join("again.csv");
        write_trace(&back, &again).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&again).unwrap()
        );
    }

    #[test]
    fn trajectory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let table = TrajectoryTable {
            times: vec![0.0, 5e-7, 1e-6],
            detunings: vec![45.0, 44.9999, 44.9998],
            intensities: vec![0.0, 1.234567891234e-5, 2e-5],
            pop_fractions: vec![1.0, 0.999999999, 0.9876543219],
        };
        write_trajectory(&table, &path).unwrap();
        assert_eq!(
            lines(&path)[0],
            "t_s,detuning_norm,intensity_norm,pop_fraction"
        );
        let back = read_trajectory(&path).unwrap();
        assert_eq!(
            back.times,
            table.times.iter().map(|x| rounded(*x)).collect::<Vec<_>>()
        );
        assert_eq!(back.intensities[1], 1.23456789e-5);
        assert_eq!(back.pop_fractions[2], rounded(0.9876543219));
    }

    #[test]
    fn spectrogram_long_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.csv");
        let spec = Spectrogram {
            time_bins: vec![1e-4, 2e-4],
            freq_bins: vec![0.0, 1e3, 2e3],
            magnitude: vec![vec![0.0, 1.5, 0.25], vec![0.125, 3.0, 1.0 / 3.0]],
            window_gain: 0.0,
            reference_level: 0.0,
        };
        write_spectrogram(&spec, &path).unwrap();
        assert_eq!(lines(&path).len(), 1 + 2 * 3);
        let back = read_spectrogram(&path).unwrap();
        assert_eq!(back.time_bins, spec.time_bins);
        assert_eq!(back.freq_bins, spec.freq_bins);
        assert_eq!(back.magnitude[1][2], rounded(1.0 / 3.0));
    }

    #[test]
    fn dominant_and_roots_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dom.csv");
        let series = vec![
            DominantFrequency {
                time: 1e-3,
                frequency: Some(5.5e4),
            },
            DominantFrequency {
                time: 2e-3,
                frequency: None,
            },
        ];
        write_dominant(&series, &path).unwrap();
        assert_eq!(read_dominant(&path).unwrap(), series);

        let roots = dir.path().join("roots.csv");
        let solution = SteadySolution {
            detuning: 4.0,
            roots: vec![
                SteadyRoot {
                    intensity: 0.1,
                    stable: true,
                },
                SteadyRoot {
                    intensity: 0.4,
                    stable: false,
                },
            ],
        };
        write_roots(&solution, &roots).unwrap();
        assert_eq!(lines(&roots)[2], "4.00000000e0,4.00000000e-1,0");
    }

    #[test]
    fn errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.csv");
        let err = read_trace(&missing).unwrap_err();
        assert!(err.to_string().contains("nope.csv"));

        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "detuning_norm,intensity_norm\n0.0,abc\n").unwrap();
        match read_trace(&bad).unwrap_err() {
            Error::Parse { line, path, .. } => {
                assert_eq!(line, 2);
                assert_eq!(path, bad);
            }
            other => panic!("{other:?}"),
        }

        let header = dir.path().join("header.csv");
        std::fs::write(&header, "x,y\n0,1\n").unwrap();
        assert!(matches!(
            read_trace(&header),
            Err(Error::Parse { line: 1, .. })
        ));

        let unordered = dir.path().join("unordered.csv");
        std::fs::write(
            &unordered,
            "detuning_norm,intensity_norm\n0,1\n1,1\n0.5,1\n",
        )
        .unwrap();
        assert!(read_trace(&unordered).is_err());

        let unwritable = dir.path().join("missing_dir").join("x.csv");
        let err = write_text("x", &unwritable).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn fit_report_is_toml() {
        let fit = FitResult {
            a_est: 16.0,
            s_est: 9.0,
            residual_rms: 0.0,
            converged: true,
            iterations: 42,
        };
        let text = fit_report(&fit, Some((21.4, 12.0)));
        let table: toml::Table = text.parse().unwrap();
        assert_eq!(table["a_est"].as_float(), Some(16.0));
        assert_eq!(table["converged"].as_bool(), Some(true));
        assert_eq!(table["s_physical"].as_float(), Some(12.0));
    }
}
