use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{derive_a, derive_s, ModelParams, PhysicalParams, ShiftSign};
use crate::steady::{check_grid, scan_with_folds, ScanDirection, ScanTrace, MAX_SCAN_STEP};

/// Weight of samples within two grid steps of a fold.
pub const FOLD_WEIGHT: f64 = 0.25;
const FOLD_REACH: usize = 2;
const COARSE_NODES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitBounds {
    pub a: (f64, f64),
    pub s: (f64, f64),
}

impl Default for FitBounds {
    fn default() -> Self {
        FitBounds {
            a: (0.0, 60.0),
            s: (0.0, 30.0),
        }
    }
}

impl FitBounds {
    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("bounds.a", self.a), ("bounds.s", self.s)] {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
                return Err(Error::param(
                    name,
                    format!("need 0 <= lo < hi, got [{lo}, {hi}]"),
                ));
            }
        }
        Ok(())
    }

    fn clamp(&self, x: [f64; 2]) -> [f64; 2] {
        [
            x[0].clamp(self.a.0, self.a.1),
            x[1].clamp(self.s.0, self.s.1),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    pub bounds: FitBounds,
    pub shift_sign: ShiftSign,
    /// Seeds the search at the derived (A, S) instead of a coarse grid.
    pub seed_from: Option<PhysicalParams>,
    /// Rates used to decide which steady states are stable.
    pub rates: PhysicalParams,
    pub max_iterations: usize,
    /// Simplex extent, in both A and S, that counts as converged.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            bounds: FitBounds::default(),
            shift_sign: ShiftSign::default(),
            seed_from: None,
            rates: PhysicalParams::default(),
            max_iterations: 2000,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub a_est: f64,
    pub s_est: f64,
    /// Unweighted RMS deviation over both traces.
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
}

struct Measured {
    grid: Vec<f64>,
    direction: ScanDirection,
    values: Vec<f64>,
}

impl Measured {
    fn new(trace: &ScanTrace) -> Result<Self> {
        let grid = trace.detunings();
        check_grid(&grid, trace.direction, Some(MAX_SCAN_STEP))?;
        if let Some(bad) = trace.samples.iter().find(|s| !s.intensity.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite intensity at detuning {}",
                bad.detuning
            )));
        }
        Ok(Measured {
            grid,
            direction: trace.direction,
            values: trace.intensities(),
        })
    }

    /// (weighted SSE, plain SSE)
    fn misfit(&self, m: &ModelParams, rates: &PhysicalParams) -> Result<(f64, f64)> {
        let model = scan_with_folds(&self.grid, self.direction, m, rates)?;
        let mut weights = vec![1.0; self.grid.len()];
        for &k in &model.folds {
            let lo = k.saturating_sub(FOLD_REACH);
            let hi = (k + FOLD_REACH - 1).min(weights.len() - 1);
            weights[lo..=hi].iter_mut().for_each(|w| *w = FOLD_WEIGHT);
        }
        let mut weighted = 0.0;
        let mut plain = 0.0;
        for ((y, point), w) in self.values.iter().zip(&model.trace.samples).zip(&weights) {
            let r = y - point.intensity;
            weighted += w * r * r;
            plain += r * r;
        }
        Ok((weighted, plain))
    }
}

struct Problem<'a> {
    traces: [Measured; 2],
    shift_sign: ShiftSign,
    rates: &'a PhysicalParams,
}

impl Problem<'_> {
    fn evaluate(&self, x: [f64; 2]) -> Result<(f64, f64)> {
        let m = ModelParams::new(x[0], x[1], self.shift_sign)?;
        let (w0, p0) = self.traces[0].misfit(&m, self.rates)?;
        let (w1, p1) = self.traces[1].misfit(&m, self.rates)?;
        Ok((w0 + w1, p0 + p1))
    }

    /// Weighted objective; model failures count as infinitely bad.
    fn cost(&self, x: [f64; 2]) -> f64 {
        self.evaluate(x).map_or(f64::INFINITY, |(w, _)| w)
    }

    fn samples(&self) -> usize {
        self.traces.iter().map(|t| t.values.len()).sum()
    }
}

fn build_problem<'a>(
    increasing: &ScanTrace,
    decreasing: &ScanTrace,
    shift_sign: ShiftSign,
    rates: &'a PhysicalParams,
) -> Result<Problem<'a>> {
    if increasing.direction != ScanDirection::Increasing
        || decreasing.direction != ScanDirection::Decreasing
    {
        return Err(Error::InvalidInput(
            "expected one increasing and one decreasing trace".into(),
        ));
    }
    let up = Measured::new(increasing)?;
    let down = Measured::new(decreasing)?;
    let same_grid = up.grid.len() == down.grid.len()
        && up
            .grid
            .iter()
            .zip(down.grid.iter().rev())
            .all(|(a, b)| a == b);
    if !same_grid {
        return Err(Error::InvalidInput(
            "increasing and decreasing traces must share a detuning grid".into(),
        ));
    }
    rates.validate()?;
    Ok(Problem {
        traces: [up, down],
        shift_sign,
        rates,
    })
}

/// Weighted squared misfit of both traces against the model at (a, s).
pub fn fit_objective(
    increasing: &ScanTrace,
    decreasing: &ScanTrace,
    a: f64,
    s: f64,
    shift_sign: ShiftSign,
    rates: &PhysicalParams,
) -> Result<f64> {
    let problem = build_problem(increasing, decreasing, shift_sign, rates)?;
    Ok(problem.evaluate([a, s])?.0)
}

/// Estimates (A, S) from an increasing and a decreasing scan.
pub fn fit_model(
    increasing: &ScanTrace,
    decreasing: &ScanTrace,
    options: &FitOptions,
) -> Result<FitResult> {
    options.bounds.validate()?;
    if !(options.tolerance > 0.0) {
        return Err(Error::param("tolerance", "must be > 0"));
    }
    let problem = build_problem(increasing, decreasing, options.shift_sign, &options.rates)?;
    let bounds = &options.bounds;
    let grid_step = [
        (bounds.a.1 - bounds.a.0) / (COARSE_NODES - 1) as f64,
        (bounds.s.1 - bounds.s.0) / (COARSE_NODES - 1) as f64,
    ];

    let seed = match &options.seed_from {
        Some(p) => bounds.clamp([derive_a(p)?, derive_s(p)?]),
        None => coarse_minimum(&problem, bounds, grid_step),
    };

    let mut best = seed;
    let mut scale = [0.5 * grid_step[0], 0.5 * grid_step[1]];
    let mut iterations = 0;
    let mut converged = false;
    // One restart from the optimum.
    for _ in 0..2 {
        let budget = options.max_iterations.saturating_sub(iterations);
        let run = nelder_mead(&problem, bounds, best, scale, options.tolerance, budget);
        iterations += run.iterations;
        let moved = (run.x[0] - best[0]).abs().max((run.x[1] - best[1]).abs());
        best = run.x;
        converged = run.converged;
        if !converged || moved < options.tolerance {
            break;
        }
        scale = [0.05 * grid_step[0], 0.05 * grid_step[1]];
    }

    let (_, plain) = problem.evaluate(best)?;
    Ok(FitResult {
        a_est: best[0],
        s_est: best[1],
        residual_rms: (plain / problem.samples() as f64).sqrt(),
        converged,
        iterations,
    })
}

fn coarse_minimum(problem: &Problem, bounds: &FitBounds, step: [f64; 2]) -> [f64; 2] {
    let nodes: Vec<[f64; 2]> = (0..COARSE_NODES * COARSE_NODES)
        .map(|k| {
            let (i, j) = (k / COARSE_NODES, k % COARSE_NODES);
            [
                bounds.a.0 + step[0] * i as f64,
                bounds.s.0 + step[1] * j as f64,
            ]
        })
        .collect();
    let costs: Vec<f64> = nodes.par_iter().map(|&x| problem.cost(x)).collect();
    let best = costs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map_or(0, |(k, _)| k);
    nodes[best]
}

struct Run {
    x: [f64; 2],
    iterations: usize,
    converged: bool,
}

fn nelder_mead(
    problem: &Problem,
    bounds: &FitBounds,
    start: [f64; 2],
    scale: [f64; 2],
    tolerance: f64,
    max_iterations: usize,
) -> Run {
    let vertex = |x: [f64; 2]| {
        let x = bounds.clamp(x);
        (x, problem.cost(x))
    };
    // Step inward when the seed sits on an upper bound.
    let offset = |value: f64, step: f64, hi: f64| {
        if value + step > hi {
            value - step
        } else {
            value + step
        }
    };
    let mut simplex = [
        vertex(start),
        vertex([offset(start[0], scale[0], bounds.a.1), start[1]]),
        vertex([start[0], offset(start[1], scale[1], bounds.s.1)]),
    ];

    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let extent = |i: usize| {
            simplex
                .iter()
                .map(|v| (v.0[i] - simplex[0].0[i]).abs())
                .fold(0.0, f64::max)
        };
        if extent(0) < tolerance && extent(1) < tolerance {
            return Run {
                x: simplex[0].0,
                iterations,
                converged: true,
            };
        }
        if iterations >= max_iterations {
            return Run {
                x: simplex[0].0,
                iterations,
                converged: false,
            };
        }
        iterations += 1;

        let centroid = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let along = |t: f64| {
            vertex([
                centroid[0] + t * (simplex[2].0[0] - centroid[0]),
                centroid[1] + t * (simplex[2].0[1] - centroid[1]),
            ])
        };
        let reflected = along(-1.0);
        if reflected.1 < simplex[0].1 {
            let expanded = along(-2.0);
            simplex[2] = if expanded.1 < reflected.1 {
                expanded
            } else {
                reflected
            };
            continue;
        }
        if reflected.1 < simplex[1].1 {
            simplex[2] = reflected;
            continue;
        }
        let contracted = if reflected.1 < simplex[2].1 {
            along(-0.5)
        } else {
            along(0.5)
        };
        if contracted.1 < simplex[2].1.min(reflected.1) {
            simplex[2] = contracted;
            continue;
        }
        let best = simplex[0].0;
        for v in simplex.iter_mut().skip(1) {
            *v = vertex([0.5 * (best[0] + v.0[0]), 0.5 * (best[1] + v.0[1])]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::{detuning_grid, scan_pair, TracePoint};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, Uniform};

    fn synthetic(a: f64, s: f64) -> (ScanTrace, ScanTrace) {
        let grid = detuning_grid(-10.0, 30.0, 401);
        let m = ModelParams::new(a, s, ShiftSign::FigureConvention).unwrap();
        scan_pair(&grid, &m, &PhysicalParams::default()).unwrap()
    }

    fn with_noise(trace: &ScanTrace, sigma: f64, rng: &mut ChaCha8Rng) -> ScanTrace {
        let normal = Normal::new(0.0, sigma).unwrap();
        ScanTrace {
            direction: trace.direction,
            samples: trace
                .samples
                .iter()
                .map(|p| TracePoint {
                    detuning: p.detuning,
                    intensity: p.intensity + normal.sample(rng),
                })
                .collect(),
        }
    }

    #[test]
    fn recovers_noise_free_parameters() {
        let (up, down) = synthetic(16.0, 9.0);
        let fit = fit_model(&up, &down, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(((fit.a_est - 16.0) / 16.0).abs() < 1e-4, "{fit:?}");
        assert!(((fit.s_est - 9.0) / 9.0).abs() < 1e-4, "{fit:?}");
        assert!(fit.residual_rms < 1e-6);
    }

    #[test]
    fn physical_seed_reaches_same_answer() {
        let (up, down) = synthetic(21.43, 12.0);
        let options = FitOptions {
            seed_from: Some(PhysicalParams::default()),
            ..Default::default()
        };
        let fit = fit_model(&up, &down, &options).unwrap();
        assert!(((fit.a_est - 21.43) / 21.43).abs() < 1e-4, "{fit:?}");
        assert!(((fit.s_est - 12.0) / 12.0).abs() < 1e-4, "{fit:?}");
    }

    #[test]
    fn tolerates_two_percent_noise() {
        let (up, down) = synthetic(16.0, 9.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let up = with_noise(&up, 0.02, &mut rng);
        let down = with_noise(&down, 0.02, &mut rng);
        let fit = fit_model(&up, &down, &FitOptions::default()).unwrap();
        assert!(((fit.a_est - 16.0) / 16.0).abs() < 0.05, "{fit:?}");
        assert!(((fit.s_est - 9.0) / 9.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn truth_minimises_objective() {
        let (up, down) = synthetic(16.0, 9.0);
        let rates = PhysicalParams::default();
        let sign = ShiftSign::FigureConvention;
        let at_truth = fit_objective(&up, &down, 16.0, 9.0, sign, &rates).unwrap();
        assert_eq!(at_truth, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let jitter = Uniform::new(-0.2, 0.2).unwrap();
        for _ in 0..100 {
            let a = 16.0 * (1.0 + jitter.sample(&mut rng));
            let s = 9.0 * (1.0 + jitter.sample(&mut rng));
            assert!(fit_objective(&up, &down, a, s, sign, &rates).unwrap() >= at_truth);
        }
    }

    #[test]
    fn deterministic() {
        let (up, down) = synthetic(12.0, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let up = with_noise(&up, 0.01, &mut rng);
        let down = with_noise(&down, 0.01, &mut rng);
        let first = fit_model(&up, &down, &FitOptions::default()).unwrap();
        let second = fit_model(&up, &down, &FitOptions::default()).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn rejects_mismatched_traces() {
        let (up, down) = synthetic(10.0, 4.0);
        assert!(fit_model(&down, &up, &FitOptions::default()).is_err());
        let mut short = down.clone();
        short.samples.pop();
        assert!(fit_model(&up, &short, &FitOptions::default()).is_err());
        let bad = FitOptions {
            bounds: FitBounds {
                a: (5.0, 1.0),
                s: (0.0, 1.0),
            },
            ..Default::default()
        };
        assert!(fit_model(&up, &down, &bad).is_err());
    }
}
