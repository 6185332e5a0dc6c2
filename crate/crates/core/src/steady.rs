//! Steady states of the normalized resonance equation
//!
//! ```text
//! Ĩ = 1 / (1 + [Δ̃ ± A/(1 + S·Ĩ)]²)
//! ```
//!
//! Clearing denominators gives a cubic in Ĩ whose real roots all lie in
//! (0, 1]. Roots come from the companion matrix and are then polished with
//! safeguarded Newton steps on the original residual.

use nalgebra::Schur;
use rayon::prelude::*;

use crate::dynamics::{CavitySystem, NormalizedState, SaturationReading};
use crate::error::{Error, Result};
use crate::params::{ModelParams, PhysicalParams, ShiftSign};
use crate::poly;

/// Largest detuning step accepted by [`hysteresis_scan`], in units of κ/2.
pub const MAX_SCAN_STEP: f64 = 0.1;

/// Bisection tolerance on bistable-region endpoints.
pub const REGION_TOLERANCE: f64 = 1e-6;

/// Sampling step used to locate tristable detunings before bisection.
const REGION_SAMPLE_STEP: f64 = 0.01;

/// Roots outside [0, 1] by less than this are clamped onto the interval.
const CLAMP_TOL: f64 = 1e-9;

/// Residual bound a caller-supplied root must meet before linearization.
const ROOT_RESIDUAL_TOL: f64 = 1e-9;

/// Eigenvalues with |Re| below this multiple of κ count as marginal.
const MARGINAL_FRACTION: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyRoot {
    /// Normalized intra-cavity intensity Ĩ ∈ [0, 1].
    pub intensity: f64,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadySolution {
    /// Δ̃ = 2Δ_pc/κ.
    pub detuning: f64,
    /// Sorted ascending by intensity.
    pub roots: Vec<SteadyRoot>,
}

impl SteadySolution {
    pub fn is_bistable(&self) -> bool {
        self.roots.len() == 3
    }
}

/// Empty-cavity Lorentzian 1/(1 + Δ̃²).
pub fn empty_cavity_intensity(detuning: f64) -> f64 {
    1.0 / (1.0 + detuning * detuning)
}

/// Ĩ·(1 + Δ̃_eff²) − 1; zero exactly on a steady state.
pub fn resonance_residual(intensity: f64, detuning: f64, m: &ModelParams) -> f64 {
    let d = m.effective_detuning(detuning, intensity);
    intensity * (1.0 + d * d) - 1.0
}

fn residual_slope(intensity: f64, detuning: f64, m: &ModelParams) -> f64 {
    let u = 1.0 + m.s * intensity;
    let d = m.effective_detuning(detuning, intensity);
    let d_slope = -m.shift_sign.sign() * m.a * m.s / (u * u);
    1.0 + d * d + 2.0 * intensity * d * d_slope
}

/// Coefficients `[c0, c1, c2, c3]` of the cleared cubic in Ĩ.
fn resonance_coefficients(detuning: f64, m: &ModelParams) -> [f64; 4] {
    let (a, s, sigma) = (m.a, m.s, m.shift_sign.sign());
    let q = 1.0 + detuning * detuning;
    let cross = 2.0 * sigma * a * detuning;
    [
        -1.0,
        q + cross + a * a - 2.0 * s,
        2.0 * s * q + cross * s - s * s,
        q * s * s,
    ]
}

fn polish(mut x: f64, detuning: f64, m: &ModelParams) -> f64 {
    let mut g = resonance_residual(x, detuning, m);
    for _ in 0..16 {
        if g == 0.0 {
            break;
        }
        let slope = residual_slope(x, detuning, m);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let next = x - g / slope;
        let g_next = resonance_residual(next, detuning, m);
        if g_next.abs() < g.abs() {
            x = next;
            g = g_next;
        } else {
            break;
        }
    }
    x
}

/// All real solutions Ĩ ∈ [0, 1] at one detuning, ascending, without stability.
pub fn resonance_roots(detuning: f64, m: &ModelParams) -> Result<Vec<f64>> {
    if !detuning.is_finite() {
        return Err(Error::param(
            "detuning",
            format!("must be finite, got {detuning}"),
        ));
    }
    m.validate()?;
    let c = resonance_coefficients(detuning, m);
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateCubic {
            detuning,
            reason: "non-finite coefficient",
        });
    }
    if m.s > 0.0 && !c[3].is_normal() {
        return Err(Error::DegenerateCubic {
            detuning,
            reason: "leading coefficient underflow",
        });
    }

    let mut roots: Vec<f64> = poly::real_roots(c)?
        .into_iter()
        .map(|x| polish(x, detuning, m))
        .filter(|x| (-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(x))
        .map(|x| x.clamp(0.0, 1.0))
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 4.0 * f64::EPSILON);
    if roots.is_empty() {
        return Err(Error::DegenerateCubic {
            detuning,
            reason: "no root in [0, 1]",
        });
    }
    Ok(roots)
}

/// Roots at `detuning` with stability flags from the linearized dynamics.
pub fn steady_roots(detuning: f64, m: &ModelParams, p: &PhysicalParams) -> Result<SteadySolution> {
    let system = CavitySystem::new(*m, p, SaturationReading::Detuned)?;
    let roots = resonance_roots(detuning, m)?
        .into_iter()
        .map(|intensity| {
            Ok(SteadyRoot {
                intensity,
                stable: fixed_point_is_stable(&system, intensity, detuning)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SteadySolution { detuning, roots })
}

/// Linear stability of the fixed point belonging to `root`.
///
/// True iff every eigenvalue of the 3×3 Jacobian of (field quadratures,
/// population fraction) has real part below −1e-9·κ.
pub fn classify_stability(
    root: f64,
    detuning: f64,
    m: &ModelParams,
    p: &PhysicalParams,
) -> Result<bool> {
    let residual = resonance_residual(root, detuning, m);
    if !(residual.abs() < ROOT_RESIDUAL_TOL) {
        return Err(Error::param(
            "root",
            format!("not a steady state at detuning {detuning}: residual {residual:e}"),
        ));
    }
    let system = CavitySystem::new(*m, p, SaturationReading::Detuned)?;
    fixed_point_is_stable(&system, root, detuning)
}

fn fixed_point_is_stable(system: &CavitySystem, root: f64, detuning: f64) -> Result<bool> {
    let state = NormalizedState::steady(root, detuning, system.model());
    let jac = system.jacobian(&state, detuning);
    let eig = Schur::try_new(jac, f64::EPSILON, 500)
        .ok_or(Error::EigenSolver)?
        .complex_eigenvalues();
    let margin = MARGINAL_FRACTION * system.kappa();
    Ok(eig.iter().all(|z| z.re < -margin))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BistableRegion {
    pub lower: f64,
    pub upper: f64,
}

impl BistableRegion {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, detuning: f64) -> bool {
        detuning > self.lower && detuning < self.upper
    }
}

fn is_tristable(detuning: f64, m: &ModelParams) -> Result<bool> {
    Ok(resonance_roots(detuning, m)?.len() == 3)
}

/// Boundary between a tristable and a monostable detuning, by bisection.
fn bisect_edge(mut inside: f64, mut outside: f64, m: &ModelParams) -> Result<f64> {
    while (inside - outside).abs() > REGION_TOLERANCE {
        let mid = 0.5 * (inside + outside);
        if is_tristable(mid, m)? {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(0.5 * (inside + outside))
}

/// The widest interval inside `search` with three steady states, or `None`.
pub fn bistable_region(m: &ModelParams, search: (f64, f64)) -> Result<Option<BistableRegion>> {
    let (lo, hi) = search;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::param(
            "search_range",
            format!("expected a finite interval with lo < hi, got [{lo}, {hi}]"),
        ));
    }
    if m.a == 0.0 {
        return Ok(None);
    }
    let n = ((hi - lo) / REGION_SAMPLE_STEP).ceil() as usize + 1;
    let grid: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let flags = grid
        .iter()
        .map(|&d| is_tristable(d, m))
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, &tri) in flags.iter().chain(std::iter::once(&false)).enumerate() {
        match (tri, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(b0, b1)| i - 1 - s > b1 - b0) {
                    best = Some((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    let Some((first, last)) = best else {
        return Ok(None);
    };
    let lower = if first == 0 {
        lo
    } else {
        bisect_edge(grid[first], grid[first - 1], m)?
    };
    let upper = if last == n - 1 {
        hi
    } else {
        bisect_edge(grid[last], grid[last + 1], m)?
    };
    Ok(Some(BistableRegion { lower, upper }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScanDirection {
    Increasing,
    Decreasing,
}

impl ScanDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanDirection::Increasing => "increasing",
            ScanDirection::Decreasing => "decreasing",
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            ScanDirection::Increasing => ScanDirection::Decreasing,
            ScanDirection::Decreasing => ScanDirection::Increasing,
        }
    }

    fn ordered(self, prev: f64, next: f64) -> bool {
        match self {
            ScanDirection::Increasing => next > prev,
            ScanDirection::Decreasing => next < prev,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub detuning: f64,
    pub intensity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanTrace {
    pub direction: ScanDirection,
    pub samples: Vec<TracePoint>,
}

impl ScanTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn detunings(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.detuning).collect()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.intensity).collect()
    }

    /// Samples reordered so detuning increases, regardless of scan direction.
    pub fn ascending(&self) -> Vec<TracePoint> {
        let mut out = self.samples.clone();
        if self.direction == ScanDirection::Decreasing {
            out.reverse();
        }
        out
    }
}

/// Evenly spaced detunings from `start` to `end` inclusive.
pub fn detuning_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub(crate) fn check_grid(
    grid: &[f64],
    direction: ScanDirection,
    max_step: Option<f64>,
) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("detuning grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|d| !d.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite detuning {bad} in grid"
        )));
    }
    for (k, w) in grid.windows(2).enumerate() {
        if !direction.ordered(w[0], w[1]) {
            return Err(Error::InvalidInput(format!(
                "grid is not strictly {} at index {}: {} -> {}",
                direction.as_str(),
                k + 1,
                w[0],
                w[1]
            )));
        }
        if let Some(limit) = max_step {
            if (w[1] - w[0]).abs() > limit * (1.0 + 1e-9) {
                return Err(Error::InvalidInput(format!(
                    "grid step {} at index {} exceeds {limit}",
                    (w[1] - w[0]).abs(),
                    k + 1
                )));
            }
        }
    }
    Ok(())
}

/// A scan together with the sample indices where the root count changed.
pub(crate) struct ScanWithFolds {
    pub trace: ScanTrace,
    /// Index `k` marks a fold between samples `k-1` and `k`.
    pub folds: Vec<usize>,
}

pub(crate) fn scan_with_folds(
    grid: &[f64],
    direction: ScanDirection,
    m: &ModelParams,
    p: &PhysicalParams,
) -> Result<ScanWithFolds> {
    check_grid(grid, direction, Some(MAX_SCAN_STEP))?;
    let system = CavitySystem::new(*m, p, SaturationReading::Detuned)?;
    let mut samples = Vec::with_capacity(grid.len());
    let mut folds = Vec::new();
    let mut previous: Option<(f64, usize)> = None;

    for (k, &detuning) in grid.iter().enumerate() {
        let roots = resonance_roots(detuning, m)?;
        let chosen = if roots.len() == 1 {
            roots[0]
        } else {
            let mut candidates = Vec::with_capacity(roots.len());
            for &r in &roots {
                if fixed_point_is_stable(&system, r, detuning)? {
                    candidates.push(r);
                }
            }
            // Inside a Hopf band no steady state is stable; follow the nearest one.
            if candidates.is_empty() {
                candidates = roots.clone();
            }
            match previous {
                None => candidates[0],
                Some((prev, _)) => candidates
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - prev).abs().total_cmp(&(b - prev).abs()))
                    .expect("non-empty candidates"),
            }
        };
        if let Some((_, count)) = previous {
            if count != roots.len() {
                folds.push(k);
            }
        }
        previous = Some((chosen, roots.len()));
        samples.push(TracePoint {
            detuning,
            intensity: chosen,
        });
    }
    Ok(ScanWithFolds {
        trace: ScanTrace { direction, samples },
        folds,
    })
}

/// Quasi-static sweep that always stays on the stable branch closest to the
/// previous sample, jumping only when that branch ends at a fold.
pub fn hysteresis_scan(
    grid: &[f64],
    direction: ScanDirection,
    m: &ModelParams,
    p: &PhysicalParams,
) -> Result<ScanTrace> {
    Ok(scan_with_folds(grid, direction, m, p)?.trace)
}

/// Increasing and decreasing scans over the same detunings.
///
/// `grid` must increase; the decreasing trace is returned in its own scan order.
pub fn scan_pair(
    grid: &[f64],
    m: &ModelParams,
    p: &PhysicalParams,
) -> Result<(ScanTrace, ScanTrace)> {
    let up = hysteresis_scan(grid, ScanDirection::Increasing, m, p)?;
    let reversed: Vec<f64> = grid.iter().rev().copied().collect();
    let down = hysteresis_scan(&reversed, ScanDirection::Decreasing, m, p)?;
    Ok((up, down))
}

/// One row of an interaction-strength sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterRow {
    pub a: f64,
    pub region: Option<BistableRegion>,
    /// Increasing-scan intensities on the ascending grid.
    pub increasing: Vec<f64>,
    /// Decreasing-scan intensities, re-ordered onto the ascending grid.
    pub decreasing: Vec<f64>,
}

/// Up/down transmission maps and bistable regions for every `a` in `a_values`.
///
/// Rows are computed in parallel; output order follows `a_values`.
pub fn transmission_raster(
    a_values: &[f64],
    grid: &[f64],
    s: f64,
    shift_sign: ShiftSign,
    p: &PhysicalParams,
    region_search: (f64, f64),
) -> Result<Vec<RasterRow>> {
    check_grid(grid, ScanDirection::Increasing, Some(MAX_SCAN_STEP))?;
    a_values
        .par_iter()
        .map(|&a| {
            let m = ModelParams::new(a, s, shift_sign)?;
            let (up, down) = scan_pair(grid, &m, p)?;
            let mut decreasing = down.intensities();
            decreasing.reverse();
            Ok(RasterRow {
                a,
                region: bistable_region(&m, region_search)?,
                increasing: up.intensities(),
                decreasing,
            })
        })
        .collect()
}
