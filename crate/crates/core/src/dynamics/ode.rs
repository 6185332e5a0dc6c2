//! Explicit Runge–Kutta steppers for the 3-component cavity system.

use crate::error::{Error, Result};

pub(crate) type State = [f64; 3];

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (fifth minus embedded fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stepper {
    /// Dormand–Prince 5(4) with an absolute error bound per component.
    Adaptive { abs_tol: f64 },
    /// Classical RK4 with a step no larger than `dt`.
    Fixed { dt: f64 },
}

#[inline]
fn axpy(y: &State, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (w, k) in terms {
        for i in 0..3 {
            out[i] += w * k[i];
        }
    }
    out
}

/// Integrates `f` from t = 0 and samples the solution at `k * output_dt`
/// for every k with `k * output_dt <= t_end`.
pub(crate) fn solve<F>(
    mut f: F,
    y0: State,
    t_end: f64,
    output_dt: f64,
    max_step: f64,
    stepper: Stepper,
) -> Result<(Vec<f64>, Vec<State>)>
where
    F: FnMut(f64, &State) -> State,
{
    let n_out = (t_end / output_dt * (1.0 + 1e-12)).floor() as usize + 1;
    let mut times = Vec::with_capacity(n_out);
    let mut states = Vec::with_capacity(n_out);
    times.push(0.0);
    states.push(y0);

    let mut y = y0;
    match stepper {
        Stepper::Fixed { dt } => {
            let substeps = (output_dt / dt.min(max_step) - 1e-9).ceil().max(1.0) as usize;
            let h = output_dt / substeps as f64;
            for k in 1..n_out {
                let t0 = (k - 1) as f64 * output_dt;
                for j in 0..substeps {
                    y = rk4_step(&mut f, t0 + j as f64 * h, &y, h);
                }
                times.push(k as f64 * output_dt);
                states.push(y);
            }
        }
        Stepper::Adaptive { abs_tol } => {
            let mut t = 0.0;
            let mut h = max_step.min(output_dt);
            let mut k1 = f(t, &y);
            let h_floor = max_step * 1e-10;
            for k in 1..n_out {
                let t_target = k as f64 * output_dt;
                while t < t_target {
                    let gap = t_target - t;
                    let clamped = gap <= h;
                    let step = if clamped { gap } else { h };
                    let (y_new, k7, err) = dp45_step(&mut f, t, &y, &k1, step);
                    let norm = err.iter().fold(0.0f64, |m, e| m.max(e.abs())) / abs_tol;
                    if norm <= 1.0 && y_new.iter().all(|v| v.is_finite()) {
                        t = if clamped { t_target } else { t + step };
                        y = y_new;
                        k1 = k7;
                        let grow = if norm == 0.0 {
                            MAX_FACTOR
                        } else {
                            (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                        };
                        // A step shortened to hit an output time says nothing about h.
                        h = (step * grow)
                            .max(if clamped { h } else { 0.0 })
                            .min(max_step);
                    } else {
                        let shrink = if norm.is_finite() {
                            (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
                        } else {
                            MIN_FACTOR
                        };
                        h = step * shrink;
                        if h < h_floor {
                            return Err(Error::StepUnderflow { time: t });
                        }
                    }
                }
                times.push(t_target);
                states.push(y);
            }
        }
    }
    Ok((times, states))
}

fn rk4_step<F: FnMut(f64, &State) -> State>(f: &mut F, t: f64, y: &State, h: f64) -> State {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, &[(0.5 * h, &k1)]));
    let k3 = f(t + 0.5 * h, &axpy(y, &[(0.5 * h, &k2)]));
    let k4 = f(t + h, &axpy(y, &[(h, &k3)]));
    axpy(
        y,
        &[
            (h / 6.0, &k1),
            (h / 3.0, &k2),
            (h / 3.0, &k3),
            (h / 6.0, &k4),
        ],
    )
}

/// One Dormand–Prince step; returns (y_{n+1}, f(t+h, y_{n+1}), error estimate).
fn dp45_step<F: FnMut(f64, &State) -> State>(
    f: &mut F,
    t: f64,
    y: &State,
    k1: &State,
    h: f64,
) -> (State, State, State) {
    let k2 = f(t + C2 * h, &axpy(y, &[(h * A21, k1)]));
    let k3 = f(t + C3 * h, &axpy(y, &[(h * A31, k1), (h * A32, &k2)]));
    let k4 = f(
        t + C4 * h,
        &axpy(y, &[(h * A41, k1), (h * A42, &k2), (h * A43, &k3)]),
    );
    let k5 = f(
        t + C5 * h,
        &axpy(
            y,
            &[
                (h * A51, k1),
                (h * A52, &k2),
                (h * A53, &k3),
                (h * A54, &k4),
            ],
        ),
    );
    let k6 = f(
        t + h,
        &axpy(
            y,
            &[
                (h * A61, k1),
                (h * A62, &k2),
                (h * A63, &k3),
                (h * A64, &k4),
                (h * A65, &k5),
            ],
        ),
    );
    let y_new = axpy(
        y,
        &[
            (h * B1, k1),
            (h * B3, &k3),
            (h * B4, &k4),
            (h * B5, &k5),
            (h * B6, &k6),
        ],
    );
    let k7 = f(t + h, &y_new);
    let mut err = [0.0; 3];
    for i in 0..3 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y_new, k7, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_: f64, y: &State) -> State {
        [-y[0], -2.0 * y[1], y[0] - y[2]]
    }

    fn exact(t: f64) -> State {
        // y2' = e^{-t} - y2, y2(0) = 0  =>  y2 = t e^{-t}
        [(-t).exp(), (-2.0 * t).exp(), t * (-t).exp()]
    }

    #[test]
    fn adaptive_tracks_linear_system() {
        let (t, y) = solve(
            decay,
            [1.0, 1.0, 0.0],
            5.0,
            0.25,
            0.05,
            Stepper::Adaptive { abs_tol: 1e-10 },
        )
        .unwrap();
        assert_eq!(t.len(), 21);
        for (ti, yi) in t.iter().zip(&y) {
            let e = exact(*ti);
            for i in 0..3 {
                assert!((yi[i] - e[i]).abs() < 1e-9, "t={ti} i={i}");
            }
        }
    }

    #[test]
    fn fixed_step_is_fourth_order() {
        let err = |dt: f64| {
            let (_, y) =
                solve(decay, [1.0, 1.0, 0.0], 1.0, 0.5, 1.0, Stepper::Fixed { dt }).unwrap();
            (y.last().unwrap()[1] - exact(1.0)[1]).abs()
        };
        let ratio = err(0.05) / err(0.025);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn output_grid_is_uniform() {
        let (t, _) = solve(
            decay,
            [1.0, 1.0, 0.0],
            1.0,
            0.1,
            0.01,
            Stepper::Fixed { dt: 0.01 },
        )
        .unwrap();
        assert_eq!(t.len(), 11);
        for (k, ti) in t.iter().enumerate() {
            assert_eq!(*ti, k as f64 * 0.1);
        }
    }

    #[test]
    fn blow_up_reports_underflow() {
        let r = solve(
            |_, y| [y[0] * y[0], 0.0, 0.0],
            [1.0, 0.0, 0.0],
            2.0,
            0.1,
            0.01,
            Stepper::Adaptive { abs_tol: 1e-9 },
        );
        match r {
            Err(Error::StepUnderflow { time }) => assert!(time > 0.9 && time < 1.0),
            other => panic!("expected underflow, got {other:?}"),
        }
    }
}
