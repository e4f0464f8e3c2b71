//! Lamb-shift and decoherence kernels.
//!
//! ```text
//! f(t) = (1/t) ∫_0^∞ G_0(ω) (ωt − sin ωt)/ω² dω
//! Γ(t) = (1/t) ∫_0^∞ G_T(ω) (1 − cos ωt)/ω² dω
//! ```
//!
//! Each integral is split in three regions:
//!
//! * `[0, π/t]`: the full kernel, written through `x = ωt` so that the
//!   small-`x` behaviour is evaluated by series (no cancellation);
//! * `[π/t, Ω]`: the kernel separated into a smooth part and a smooth factor
//!   times `e^{iωt}`; the latter is integrated by the Filon-type panel rule,
//!   whose cost is independent of `t`;
//! * `[Ω, ∞)`: the smooth part through `ω = Ω/u`; the oscillatory part is
//!   bounded by `(1/t) ∫_Ω^∞ G/ω²` and `Ω` is pushed out until that bound is
//!   negligible.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bath::SpectralDensity;
use crate::format;
use crate::quadrature::{self, Estimate, LegendreSeries, Panel, QuadratureError, Tolerance, ORDER};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum KernelError {
    #[error("time must be finite and > 0, got {0:e}")]
    InvalidTime(f64),
    #[error("time grid must be strictly increasing and positive (index {0})")]
    InvalidGrid(usize),
    #[error("{0}")]
    Divergent(&'static str),
    #[error("{operation}: {source}")]
    Quadrature {
        operation: &'static str,
        #[source]
        source: QuadratureError,
    },
    #[error("correlation time undefined: {0}")]
    WidthUndefined(&'static str),
    #[error("Markov evaluation time {t_eval:e} is below 100 t_c = {min:e}")]
    EvalTooEarly { t_eval: f64, min: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kernel {
    LambShift,
    Decoherence,
}

impl Kernel {
    fn name(self) -> &'static str {
        match self {
            Kernel::LambShift => "f(t)",
            Kernel::Decoherence => "gamma(t)",
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Region {
    Direct,
    Oscillatory,
    /// `ω = start/u`, `u ∈ (0, 1]`.
    Tail {
        start: f64,
    },
}

/// `(x − sin x)/x²`.
pub(crate) fn lamb_shift_weight(x: f64) -> f64 {
    if x < 1.0 {
        // x/6 − x³/120 + x⁵/5040 − …
        let x2 = x * x;
        let mut term = x / 6.0;
        let mut sum = term;
        let mut k = 3.0;
        while term.abs() > 1e-18 * sum.abs() {
            term *= -x2 / ((k + 1.0) * (k + 2.0));
            sum += term;
            k += 2.0;
        }
        sum
    } else {
        (x - x.sin()) / (x * x)
    }
}

/// `(1 − cos x)/x²`, evaluated as `½ sinc²(x/2)`.
pub(crate) fn decoherence_weight(x: f64) -> f64 {
    let h = 0.5 * x;
    if h < 1e-4 {
        0.5 * (1.0 - h * h / 3.0)
    } else {
        let s = h.sin() / h;
        0.5 * s * s
    }
}

const KERNEL_TOLERANCE: Tolerance = Tolerance {
    rel: 1e-11,
    abs: 0.0,
    max_segments: 20_000,
};

const MAX_EDGE_EXTENSIONS: usize = 40;

fn kernel_integral(sd: &SpectralDensity, t: f64, kernel: Kernel) -> Result<Estimate, KernelError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(KernelError::InvalidTime(t));
    }
    if kernel == Kernel::Decoherence && sd.gt_at_zero().is_infinite() {
        return Err(KernelError::Divergent(
            "decoherence integral diverges: G_T(ω) ~ 1/ω at ω→0 (G_0(0) > 0 at finite temperature)",
        ));
    }
    let g = |w: f64| match kernel {
        Kernel::LambShift => sd.g0_unchecked(w),
        Kernel::Decoherence => sd.gt_unchecked(w),
    };
    let split = PI / t;
    let compact = sd.compact_support();
    let breakpoints = sd.breakpoints();
    let mut edge = sd.support_edge();

    for _ in 0..MAX_EDGE_EXTENSIONS {
        let segments = build_segments(split, edge, compact, &breakpoints);
        let tail_start = split.max(edge);

        let rule = |a: f64, b: f64, region: Region| -> Panel {
            let nodes = quadrature::panel_nodes(a, b);
            match region {
                Region::Direct => {
                    let mut samples = [0.0; ORDER];
                    for (s, &w) in samples.iter_mut().zip(nodes.iter()) {
                        let x = w * t;
                        *s = t
                            * g(w)
                            * match kernel {
                                Kernel::LambShift => lamb_shift_weight(x),
                                Kernel::Decoherence => decoherence_weight(x),
                            };
                    }
                    Panel::from_series(&LegendreSeries::from_samples(a, b, &samples))
                }
                Region::Oscillatory => {
                    let mut over_w = [0.0; ORDER];
                    let mut over_w2 = [0.0; ORDER];
                    for ((s1, s2), &w) in
                        over_w.iter_mut().zip(over_w2.iter_mut()).zip(nodes.iter())
                    {
                        let gw = g(w);
                        *s1 = gw / w;
                        *s2 = gw / (w * w);
                    }
                    let smooth2 = LegendreSeries::from_samples(a, b, &over_w2);
                    let (re, im) = smooth2.fourier(t);
                    match kernel {
                        Kernel::LambShift => {
                            let smooth1 = LegendreSeries::from_samples(a, b, &over_w);
                            Panel {
                                value: smooth1.integral() - im / t,
                                error: smooth1.error() + smooth2.error() / t,
                                magnitude: smooth1.magnitude() + smooth2.magnitude() / t,
                                noise: smooth1.noise() + smooth2.noise() / t,
                            }
                        }
                        Kernel::Decoherence => Panel {
                            value: (smooth2.integral() - re) / t,
                            error: 2.0 * smooth2.error() / t,
                            magnitude: 2.0 * smooth2.magnitude() / t,
                            noise: 2.0 * smooth2.noise() / t,
                        },
                    }
                }
                Region::Tail { start } => {
                    let mut samples = [0.0; ORDER];
                    for (s, &u) in samples.iter_mut().zip(nodes.iter()) {
                        let w = start / u;
                        *s = match kernel {
                            // ∫ G_0/ω dω
                            Kernel::LambShift => g(w) / u,
                            // (1/t) ∫ G_T/ω² dω
                            Kernel::Decoherence => g(w) / (start * t),
                        };
                    }
                    Panel::from_series(&LegendreSeries::from_samples(a, b, &samples))
                }
            }
        };

        let mut initial = segments;
        if !compact {
            initial.push((0.0, 1.0, Region::Tail { start: tail_start }));
        }
        let estimate =
            quadrature::adaptive(&initial, KERNEL_TOLERANCE, rule).map_err(|source| {
                KernelError::Quadrature {
                    operation: kernel.name(),
                    source,
                }
            })?;

        let bound = if compact {
            0.0
        } else {
            oscillatory_tail_bound(&g, tail_start, t).map_err(|source| KernelError::Quadrature {
                operation: kernel.name(),
                source,
            })?
        };
        if bound <= 1e-3 * KERNEL_TOLERANCE.rel * estimate.value.abs() || bound == 0.0 {
            return Ok(Estimate {
                error: estimate.error + bound,
                ..estimate
            });
        }
        edge *= 4.0;
    }
    Err(KernelError::Quadrature {
        operation: kernel.name(),
        source: QuadratureError::NonConvergence {
            estimate: f64::NAN,
            error_bound: f64::INFINITY,
            segments: 0,
        },
    })
}

fn build_segments(
    split: f64,
    edge: f64,
    compact: bool,
    breakpoints: &[f64],
) -> Vec<(f64, f64, Region)> {
    let mut out = Vec::new();
    let direct_end = if compact { split.min(edge) } else { split };
    let mut edges = vec![0.0];
    edges.extend(
        breakpoints
            .iter()
            .copied()
            .filter(|&w| w > 0.0 && w < direct_end),
    );
    edges.push(direct_end);
    out.extend(edges.windows(2).map(|w| (w[0], w[1], Region::Direct)));

    if split < edge {
        let mut edges = vec![split];
        let mut w = 4.0 * split;
        while w < edge {
            edges.push(w);
            w *= 4.0;
        }
        edges.extend(
            breakpoints
                .iter()
                .copied()
                .filter(|&w| w > split && w < edge),
        );
        edges.push(edge);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        out.extend(edges.windows(2).map(|w| (w[0], w[1], Region::Oscillatory)));
    }
    out
}

/// `(1/t) ∫_start^∞ G(ω)/ω² dω`, an upper bound on the dropped oscillatory tail.
fn oscillatory_tail_bound<G: Fn(f64) -> f64>(
    g: &G,
    start: f64,
    t: f64,
) -> Result<f64, QuadratureError> {
    let tol = Tolerance {
        rel: 1e-6,
        ..Tolerance::default()
    };
    let est = quadrature::integrate(|u| g(start / u) / start, 0.0, 1.0, &[], tol)?;
    Ok(est.value / t)
}

/// `f(t)` with its quadrature error bound.
pub fn lamb_shift(sd: &SpectralDensity, t: f64) -> Result<Estimate, KernelError> {
    kernel_integral(sd, t, Kernel::LambShift)
}

/// `Γ(t)` with its quadrature error bound.
pub fn decoherence(sd: &SpectralDensity, t: f64) -> Result<Estimate, KernelError> {
    kernel_integral(sd, t, Kernel::Decoherence).map(|e| Estimate {
        value: e.value.max(0.0),
        ..e
    })
}

pub fn f_of_t(sd: &SpectralDensity, t: f64) -> Result<f64, KernelError> {
    lamb_shift(sd, t).map(|e| e.value)
}

pub fn gamma_of_t(sd: &SpectralDensity, t: f64) -> Result<f64, KernelError> {
    decoherence(sd, t).map(|e| e.value)
}

/// Long-time limits of the kernels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovLimits {
    pub f_markov: f64,
    pub gamma_markov: f64,
    pub t_eval: f64,
    /// `f` keeps growing like `G_0(0) ln t`; `f_markov` is only its value at
    /// `t_eval`.
    pub slow_growth: bool,
}

impl MarkovLimits {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.slow_growth {
            out.push(format!(
                "G_0(0) > 0: f(t) grows logarithmically and has no finite limit; f_markov is f({}) ",
                format::float(self.t_eval)
            ).trim_end().to_string());
        }
        out
    }
}

/// Markov limits with `f` evaluated at `t_eval ≥ 100 t_c`.
///
/// `Γ_M = (π/2) G_T(0⁺)`, from `(1 − cos ωt)/(tω²) → (π/2) δ(ω)`.
pub fn markov_limits(sd: &SpectralDensity, t_eval: f64) -> Result<MarkovLimits, KernelError> {
    let t_corr = correlation_time(sd)?;
    markov_limits_with(sd, t_eval, t_corr)
}

/// Markov limits at the default evaluation time `10³ t_c`.
pub fn markov_limits_default(sd: &SpectralDensity) -> Result<MarkovLimits, KernelError> {
    let t_corr = correlation_time(sd)?;
    markov_limits_with(sd, 1e3 * t_corr, t_corr)
}

fn markov_limits_with(
    sd: &SpectralDensity,
    t_eval: f64,
    t_corr: f64,
) -> Result<MarkovLimits, KernelError> {
    if !(t_eval.is_finite() && t_eval >= 100.0 * t_corr * (1.0 - 1e-12)) {
        return Err(KernelError::EvalTooEarly {
            t_eval,
            min: 100.0 * t_corr,
        });
    }
    let f_markov = f_of_t(sd, t_eval)?;
    let gt0 = sd.gt_at_zero();
    let gamma_markov = if gt0.is_finite() {
        0.5 * PI * gt0
    } else {
        gamma_of_t(sd, t_eval)?
    };
    Ok(MarkovLimits {
        f_markov,
        gamma_markov,
        t_eval,
        slow_growth: sd.g0_unchecked(0.0) > 0.0,
    })
}

const WIDTH_GRID: usize = 4096;
const WIDTH_SUBGRID: usize = 256;

/// Bath correlation time `1/W`, `W` the full width at half maximum of
/// `G_T(ω)` on `[0, ∞)`.
///
/// The half-maximum crossings are the ones bounding the contiguous region
/// above half maximum that contains the global peak; when `G_T(0)` is above
/// half maximum the left edge is `ω = 0`.
pub fn correlation_time(sd: &SpectralDensity) -> Result<f64, KernelError> {
    if sd.gt_at_zero().is_infinite() {
        return Err(KernelError::WidthUndefined("G_T(0) is infinite"));
    }
    let g = |w: f64| sd.gt_unchecked(w);
    let upper = sd.support_edge();

    let mut grid: Vec<f64> = (0..=WIDTH_GRID)
        .map(|i| upper * i as f64 / WIDTH_GRID as f64)
        .collect();
    let mut anchors = vec![0.0];
    anchors.extend(sd.breakpoints().into_iter().filter(|&w| w < upper));
    anchors.push(upper);
    for pair in anchors.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        grid.extend((1..WIDTH_SUBGRID).map(|i| a + (b - a) * i as f64 / WIDTH_SUBGRID as f64));
    }
    grid.extend(anchors);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let values: Vec<f64> = grid.iter().map(|&w| g(w)).collect();

    let (mut peak_idx, mut peak) = (0, values[0]);
    for (i, &v) in values.iter().enumerate() {
        if v > peak {
            peak = v;
            peak_idx = i;
        }
    }
    if !(peak > 0.0) {
        return Err(KernelError::WidthUndefined("spectrum vanishes everywhere"));
    }
    // Golden-section refinement of the maximum inside the neighbouring cells.
    let lo = grid[peak_idx.saturating_sub(1)];
    let hi = grid[(peak_idx + 1).min(grid.len() - 1)];
    peak = peak.max(golden_max(&g, lo, hi));
    let half = 0.5 * peak;

    let left = match (0..peak_idx).rev().find(|&i| values[i] < half) {
        None => 0.0,
        Some(i) => bisect_crossing(&g, grid[i], grid[i + 1], half),
    };
    let right = match (peak_idx + 1..grid.len()).find(|&i| values[i] < half) {
        Some(i) => bisect_crossing(&g, grid[i - 1], grid[i], half),
        None if sd.compact_support() => upper,
        None => {
            return Err(KernelError::WidthUndefined(
                "no half-maximum crossing above the peak",
            ))
        }
    };
    let width = right - left;
    if !(width > 0.0) {
        return Err(KernelError::WidthUndefined("zero spectral width"));
    }
    Ok(1.0 / width)
}

fn golden_max<G: Fn(f64) -> f64>(g: &G, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..100 {
        if (b - a) <= 1e-15 * b.abs().max(1e-300) {
            break;
        }
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    gc.max(gd)
}

/// Crossing of `g = level` in `[a, b]`, with `g(a)` and `g(b)` on opposite
/// sides of `level`.
fn bisect_crossing<G: Fn(f64) -> f64>(g: &G, mut a: f64, mut b: f64, level: f64) -> f64 {
    let above_at_a = g(a) >= level;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (g(m) >= level) == above_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Sampled kernels plus their long-time limits and the correlation time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelTable {
    pub times: Vec<f64>,
    pub f_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub f_markov: f64,
    pub gamma_markov: f64,
    pub t_eval: f64,
    pub t_corr: f64,
    pub warnings: Vec<String>,
}

/// JSON block emitted next to the kernel CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSummary {
    pub f_markov: f64,
    pub gamma_markov: f64,
    pub t_eval: f64,
    pub t_corr: f64,
    pub warnings: Vec<String>,
}

impl KernelTable {
    pub fn summary(&self) -> KernelSummary {
        KernelSummary {
            f_markov: self.f_markov,
            gamma_markov: self.gamma_markov,
            t_eval: self.t_eval,
            t_corr: self.t_corr,
            warnings: self.warnings.clone(),
        }
    }

    /// CSV with header `t,f,gamma`, preceded by `#` comment lines.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str("t,f,gamma\n");
        for ((t, f), g) in self
            .times
            .iter()
            .zip(&self.f_values)
            .zip(&self.gamma_values)
        {
            out.push_str(&format!(
                "{},{},{}\n",
                format::float(*t),
                format::float(*f),
                format::float(*g)
            ));
        }
        out
    }
}

pub fn validate_grid(grid: &[f64]) -> Result<(), KernelError> {
    for (i, &t) in grid.iter().enumerate() {
        if !(t > 0.0 && t.is_finite()) || (i > 0 && t <= grid[i - 1]) {
            return Err(KernelError::InvalidGrid(i));
        }
    }
    Ok(())
}

/// Evaluates both kernels on `grid` (in parallel, order preserved) and the
/// Markov limits and correlation time of `sd`.
pub fn tabulate_kernels(sd: &SpectralDensity, grid: &[f64]) -> Result<KernelTable, KernelError> {
    validate_grid(grid)?;
    let t_corr = correlation_time(sd)?;
    let limits = markov_limits_with(sd, 1e3 * t_corr, t_corr)?;
    let rows: Result<Vec<(f64, f64)>, KernelError> = grid
        .par_iter()
        .map(|&t| Ok((f_of_t(sd, t)?, gamma_of_t(sd, t)?)))
        .collect();
    let rows = rows?;
    Ok(KernelTable {
        times: grid.to_vec(),
        f_values: rows.iter().map(|r| r.0).collect(),
        gamma_values: rows.iter().map(|r| r.1).collect(),
        f_markov: limits.f_markov,
        gamma_markov: limits.gamma_markov,
        t_eval: limits.t_eval,
        t_corr,
        warnings: limits.warnings(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::ThermalConvention;
    use proptest::prelude::*;

    fn ohmic_f(alpha: f64, wc: f64, t: f64) -> f64 {
        alpha * (wc * t - (wc * t).atan()) / t
    }

    fn ohmic_gamma(alpha: f64, wc: f64, t: f64) -> f64 {
        alpha * (wc * wc * t * t).ln_1p() / (2.0 * t)
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn weights_match_direct_formulas() {
        for &x in &[0.05_f64, 0.5, 0.99, 1.0, 3.0, 50.0] {
            let direct_f = (x - f64::sin(x)) / (x * x);
            let direct_g = (1.0 - f64::cos(x)) / (x * x);
            assert!(rel(lamb_shift_weight(x), direct_f) < 1e-13, "x={x}");
            assert!(rel(decoherence_weight(x), direct_g) < 1e-13, "x={x}");
        }
        for &x in &[1e-8_f64, 1e-5, 1e-3] {
            let series_f = x / 6.0 - x.powi(3) / 120.0;
            let series_g = 0.5 - x * x / 24.0;
            assert!(rel(lamb_shift_weight(x), series_f) < 1e-14, "x={x}");
            assert!(rel(decoherence_weight(x), series_g) < 1e-14, "x={x}");
        }
    }

    #[test]
    fn ohmic_spot_values() {
        let sd = SpectralDensity::ohmic(1.0, 1.0).unwrap();
        assert!((f_of_t(&sd, 1.0).unwrap() - (1.0 - PI / 4.0)).abs() < 1e-12);
        assert!((gamma_of_t(&sd, 1.0).unwrap() - 2f64.ln() / 2.0).abs() < 1e-12);
        assert!((f_of_t(&sd, 1.0).unwrap() - 0.21460).abs() < 1e-5);
        assert!((gamma_of_t(&sd, 1.0).unwrap() - 0.34657).abs() < 1e-5);
    }

    #[test]
    fn ohmic_closed_form_across_scales() {
        let sd = SpectralDensity::ohmic(2.5e-5, 1.0).unwrap();
        for &t in &[1e-2, 0.3, 1.0, 17.0, 1e3, 6.3e4, 1e6] {
            assert!(
                rel(f_of_t(&sd, t).unwrap(), ohmic_f(2.5e-5, 1.0, t)) < 1e-9,
                "f t={t}"
            );
            assert!(
                rel(gamma_of_t(&sd, t).unwrap(), ohmic_gamma(2.5e-5, 1.0, t)) < 1e-9,
                "Γ t={t}"
            );
        }
    }

    #[test]
    fn kernels_vanish_as_t_goes_to_zero() {
        let sd = SpectralDensity::lorentzian(1.0, 1.0, 10.0).unwrap();
        let f_small = f_of_t(&sd, 1e-6).unwrap();
        let g_small = gamma_of_t(&sd, 1e-6).unwrap();
        assert!(
            f_small.abs() < 1e-4 && g_small.abs() < 1e-4,
            "{f_small} {g_small}"
        );
    }

    #[test]
    fn ohmic_long_time_limit() {
        let sd = SpectralDensity::ohmic(2.5e-5, 1.0).unwrap();
        assert!(rel(f_of_t(&sd, 1e6).unwrap(), 2.5e-5) < 1e-4);
    }

    #[test]
    fn zero_temperature_gamma_decays_without_zero_frequency_weight() {
        let sd = SpectralDensity::ohmic(1.0, 1.0).unwrap();
        let g = gamma_of_t(&sd, 1e8).unwrap();
        assert!(g < 1e-6);
    }

    #[test]
    fn finite_temperature_gamma_tends_to_delta_limit() {
        let sd = SpectralDensity::ohmic(1.0, 1.0)
            .unwrap()
            .with_beta(Some(2.0))
            .unwrap();
        let expected = 0.5 * PI * 0.5;
        // The approach is ~ ln(t)/t; 1e7 is enough for 1e-5.
        let g = gamma_of_t(&sd, 1e7).unwrap();
        assert!(rel(g, expected) < 1e-5, "{g} vs {expected}");
        let m = markov_limits_default(&sd).unwrap();
        assert!(rel(m.gamma_markov, expected) < 1e-15);
    }

    #[test]
    fn ohmic_markov_limits_zero_temperature() {
        let sd = SpectralDensity::ohmic(2.5e-5, 1.0).unwrap();
        let m = markov_limits_default(&sd).unwrap();
        assert!(rel(m.f_markov, 2.5e-5) < 5e-3);
        assert_eq!(m.gamma_markov, 0.0);
        assert!(!m.slow_growth);
        assert!(m.warnings().is_empty());
    }

    #[test]
    fn lorentzian_markov_flags_log_growth() {
        let sd = SpectralDensity::lorentzian(1.0, 1.0, 10.0).unwrap();
        let m = markov_limits_default(&sd).unwrap();
        assert!(m.slow_growth);
        assert_eq!(m.warnings().len(), 1);
        // Growth rate ~ G_0(0) per e-fold of t, checked over two decades.
        let f1 = f_of_t(&sd, 1e3).unwrap();
        let f2 = f_of_t(&sd, 1e5).unwrap();
        let slope = (f2 - f1) / (100f64).ln();
        assert!(rel(slope, 1.0 / 101.0) < 1e-3, "slope {slope}");
        assert!(rel(m.gamma_markov, 0.5 * PI / 101.0) < 1e-15);
    }

    #[test]
    fn markov_rejects_early_evaluation() {
        let sd = SpectralDensity::ohmic(1.0, 1.0).unwrap();
        assert!(matches!(
            markov_limits(&sd, 1.0),
            Err(KernelError::EvalTooEarly { .. })
        ));
    }

    #[test]
    fn lorentzian_finite_temperature_gamma_diverges() {
        let sd = SpectralDensity::lorentzian(1.0, 1.0, 10.0)
            .unwrap()
            .with_beta(Some(1.0))
            .unwrap();
        assert!(matches!(
            gamma_of_t(&sd, 1.0),
            Err(KernelError::Divergent(_))
        ));
        assert!(f_of_t(&sd, 1.0).is_ok());
    }

    #[test]
    fn invalid_times_are_rejected() {
        let sd = SpectralDensity::ohmic(1.0, 1.0).unwrap();
        assert!(f_of_t(&sd, 0.0).is_err());
        assert!(gamma_of_t(&sd, -1.0).is_err());
        assert!(f_of_t(&sd, f64::NAN).is_err());
    }

    #[test]
    fn lorentzian_correlation_time() {
        let sd = SpectralDensity::lorentzian(1.0, 1.0, 10.0).unwrap();
        assert!(rel(correlation_time(&sd).unwrap(), 0.5) < 1e-10);
    }

    #[test]
    fn ohmic_correlation_time() {
        // Half-maximum crossings of ω e^{-ω}: solve ω e^{1-ω} = 1/2 by bisection.
        let h = |w: f64| w * (1.0 - w).exp() - 0.5;
        let root = |mut a: f64, mut b: f64| {
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if (h(a) < 0.0) == (h(m) < 0.0) {
                    a = m
                } else {
                    b = m
                }
            }
            0.5 * (a + b)
        };
        let (lo, hi) = (root(0.0, 1.0), root(1.0, 10.0));
        assert!((lo - 0.232).abs() < 1e-3 && (hi - 2.678).abs() < 1e-3);
        let sd = SpectralDensity::ohmic(1.0, 1.0).unwrap();
        let tc = correlation_time(&sd).unwrap();
        assert!(rel(tc, 1.0 / (hi - lo)) < 1e-10);
        assert!((1.0 / tc - 2.446).abs() < 1e-3);
    }

    #[test]
    fn correlation_time_scales_inversely_with_cutoff() {
        let base = correlation_time(&SpectralDensity::ohmic(1.0, 1.0).unwrap()).unwrap();
        for s in [0.01, 3.0, 1e13] {
            let tc = correlation_time(&SpectralDensity::ohmic(1.0, s).unwrap()).unwrap();
            assert!(rel(tc, base / s) < 1e-9);
        }
    }

    #[test]
    fn flat_zero_spectrum_has_no_width() {
        let sd = SpectralDensity::tabulated(vec![(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!(matches!(
            correlation_time(&sd),
            Err(KernelError::WidthUndefined(_))
        ));
    }

    #[test]
    fn empty_grid_still_reports_limits() {
        let sd = SpectralDensity::ohmic(2.5e-5, 1.0).unwrap();
        let table = tabulate_kernels(&sd, &[]).unwrap();
        assert!(table.times.is_empty());
        assert!(table.f_markov > 0.0 && table.t_corr > 0.0);
    }

    #[test]
    fn grid_validation() {
        let sd = SpectralDensity::ohmic(1.0, 1.0).unwrap();
        assert_eq!(
            tabulate_kernels(&sd, &[1.0, 1.0]),
            Err(KernelError::InvalidGrid(1))
        );
        assert_eq!(
            tabulate_kernels(&sd, &[0.0]),
            Err(KernelError::InvalidGrid(0))
        );
    }

    #[test]
    fn csv_layout() {
        let sd = SpectralDensity::ohmic(1.0, 1.0).unwrap();
        let table = tabulate_kernels(&sd, &[1.0, 2.0]).unwrap();
        let csv = table.to_csv(&["ohmic".to_string()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# ohmic");
        assert_eq!(lines[1], "t,f,gamma");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("1e0,"));
    }

    #[test]
    fn standard_convention_doubles_low_frequency_weight() {
        let paper = SpectralDensity::ohmic(1.0, 1.0)
            .unwrap()
            .with_beta(Some(4.0))
            .unwrap();
        let standard = paper
            .clone()
            .with_thermal_convention(ThermalConvention::StandardCothHalf);
        let mp = markov_limits_default(&paper).unwrap();
        let ms = markov_limits_default(&standard).unwrap();
        assert!(rel(ms.gamma_markov, 2.0 * mp.gamma_markov) < 1e-14);
    }

    #[test]
    fn tabulated_matches_equivalent_quadrature() {
        // Triangle table; compare against brute-force trapezoid on a fine
        // grid of the direct kernel.
        let sd = SpectralDensity::tabulated(vec![(0.0, 0.0), (1.0, 1.0), (3.0, 0.0)]).unwrap();
        let t = 2.0;
        let n = 400_000;
        let h = 3.0 / n as f64;
        let (mut f_ref, mut g_ref) = (0.0, 0.0);
        for i in 0..=n {
            let w = i as f64 * h;
            let weight = if i == 0 || i == n { 0.5 } else { 1.0 };
            let g0 = sd.eval_g0(w).unwrap();
            f_ref += weight * h * t * g0 * lamb_shift_weight(w * t);
            g_ref += weight * h * t * g0 * decoherence_weight(w * t);
        }
        assert!(rel(f_of_t(&sd, t).unwrap(), f_ref) < 1e-9);
        assert!(rel(gamma_of_t(&sd, t).unwrap(), g_ref) < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn kernels_scale_with_cutoff(s in 0.05f64..20.0, t in 0.05f64..200.0, beta in 0.1f64..10.0) {
            // Ohmic α is dimensionless: G_0(sω; sω_c) = s G_0(ω; ω_c).
            let base = SpectralDensity::ohmic(0.3, 1.0).unwrap().with_beta(Some(beta)).unwrap();
            let scaled = SpectralDensity::ohmic(0.3, s).unwrap().with_beta(Some(beta / s)).unwrap();
            let f1 = f_of_t(&base, t).unwrap();
            let f2 = f_of_t(&scaled, t / s).unwrap();
            let g1 = gamma_of_t(&base, t).unwrap();
            let g2 = gamma_of_t(&scaled, t / s).unwrap();
            prop_assert!(rel(f2, s * f1) < 1e-9);
            prop_assert!(rel(g2, s * g1) < 1e-9);
        }

        #[test]
        fn lorentzian_kernels_are_scale_free(s in 0.05f64..20.0, t in 0.05f64..200.0) {
            // Lorentzian α carries frequency units, so f and Γ are unchanged.
            let base = SpectralDensity::lorentzian(0.3, 1.0, 4.0).unwrap();
            let scaled = SpectralDensity::lorentzian(0.3, s, 4.0 * s).unwrap();
            prop_assert!(rel(f_of_t(&scaled, t / s).unwrap(), f_of_t(&base, t).unwrap()) < 1e-9);
            prop_assert!(rel(gamma_of_t(&scaled, t / s).unwrap(), gamma_of_t(&base, t).unwrap()) < 1e-9);
        }

        #[test]
        fn gamma_is_nonnegative_and_tf_monotone(
            values in proptest::collection::vec(0.0f64..2.0, 3..12),
            beta in proptest::option::of(0.1f64..20.0),
        ) {
            let n = values.len();
            let pts: Vec<(f64, f64)> = values.iter().enumerate()
                .map(|(i, &g)| (0.5 + 3.0 * i as f64 / n as f64, g)).collect();
            let sd = SpectralDensity::tabulated(pts).unwrap().with_beta(beta).unwrap();
            let mut last = 0.0;
            for k in 0..30 {
                let t = 1e-2 * 1.5f64.powi(k);
                let tf = t * f_of_t(&sd, t).unwrap();
                prop_assert!(tf >= last * (1.0 - 1e-10));
                last = tf;
                prop_assert!(gamma_of_t(&sd, t).unwrap() >= 0.0);
            }
        }
    }
}
