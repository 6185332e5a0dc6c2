use crate::error::{Error, Result};
use crate::steady::{ScanTrace, TracePoint};

/// Centered moving average; near the ends the window shrinks symmetrically.
pub fn moving_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::param(
            "window",
            format!("must be odd and >= 1, got {window}"),
        ));
    }
    if window > values.len() {
        return Err(Error::param(
            "window",
            format!("{window} exceeds series length {}", values.len()),
        ));
    }
    let half = window / 2;
    let n = values.len();
    Ok((0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            values[i - h..=i + h].iter().sum::<f64>() / (2 * h + 1) as f64
        })
        .collect())
}

/// Smooths the intensities of a trace, keeping its detunings.
pub fn average_trace(trace: &ScanTrace, window: usize) -> Result<ScanTrace> {
    let smoothed = moving_average(&trace.intensities(), window)?;
    Ok(ScanTrace {
        direction: trace.direction,
        samples: trace
            .samples
            .iter()
            .zip(smoothed)
            .map(|(s, intensity)| TracePoint {
                detuning: s.detuning,
                intensity,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_window_is_identity() {
        let v = vec![0.3, -1.0, 2.5, 4.0];
        assert_eq!(moving_average(&v, 1).unwrap(), v);
    }

    #[test]
    fn constant_is_preserved() {
        let v = vec![0.7; 50];
        for w in [3, 11, 49] {
            for (a, b) in moving_average(&v, w).unwrap().iter().zip(&v) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_windows() {
        let v = vec![1.0; 5];
        assert!(moving_average(&v, 0).is_err());
        assert!(moving_average(&v, 4).is_err());
        assert!(moving_average(&v, 7).is_err());
    }

    #[test]
    fn endpoints_use_shrinking_windows() {
        let v = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let out = moving_average(&v, 5).unwrap();
        assert_eq!(out[0], 1.0);
        assert_eq!(out[1], 2.0);
        assert_eq!(out[2], 3.0);
        assert_eq!(out.len(), v.len());
    }

    #[test]
    fn suppresses_fast_oscillation() {
        // 200 kHz sampled at 2 MHz; an 11-sample window spans 1.1 periods.
        let n = 2000;
        let v: Vec<f64> = (0..n).map(|k| (2.0 * PI * 0.1 * k as f64).sin()).collect();
        let out = moving_average(&v, 11).unwrap();
        // 196 whole periods in the interior: amplitude = sqrt(2 * mean square)
        let interior = &out[20..n - 20];
        let amp =
            (2.0 * interior.iter().map(|x| x * x).sum::<f64>() / interior.len() as f64).sqrt();
        let response = ((PI * 0.1 * 11.0).sin() / (11.0 * (PI * 0.1).sin())).abs();
        assert!((amp - response).abs() < 1e-3, "{amp} vs {response}");
        assert!(amp < 0.1);
    }

    #[test]
    fn linear_for_every_window_idempotent_only_for_one() {
        let x: Vec<f64> = (0..40).map(|k| (k as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..40).map(|k| (k as f64 * 0.11).cos()).collect();
        for w in [1, 3, 9] {
            let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
            let lhs = moving_average(&combo, w).unwrap();
            let ax = moving_average(&x, w).unwrap();
            let ay = moving_average(&y, w).unwrap();
            for i in 0..x.len() {
                assert!((lhs[i] - (2.0 * ax[i] - 0.5 * ay[i])).abs() < 1e-12);
            }
            let once = moving_average(&x, w).unwrap();
            let twice = moving_average(&once, w).unwrap();
            let same = once.iter().zip(&twice).all(|(a, b)| (a - b).abs() < 1e-12);
            assert_eq!(same, w == 1, "window {w}");
        }
    }
}
