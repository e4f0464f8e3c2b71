//! Adaptive panel quadrature.
//!
//! Every panel is sampled at the nodes of a fixed Gauss–Legendre rule and the
//! samples are projected onto a Legendre series on that panel. The series
//! gives the plain integral (the zeroth coefficient), a Fourier-weighted
//! integral through the closed form
//!
//! ```text
//! ∫_{-1}^{1} P_k(x) e^{iκx} dx = 2 i^k j_k(κ)
//! ```
//!
//! (a Filon-type rule whose cost does not depend on the oscillation
//! frequency), and an error estimate from the trailing coefficients.
//! [`adaptive`] drives global bisection on the panel with the largest error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use thiserror::Error;

/// Number of Gauss–Legendre nodes per panel.
pub const ORDER: usize = 32;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadratureError {
    #[error(
        "quadrature did not converge after {segments} panels: estimate {estimate:e}, error bound {error_bound:e}"
    )]
    NonConvergence {
        estimate: f64,
        error_bound: f64,
        segments: usize,
    },
    #[error("integrand is not finite near {at:e}")]
    NonFinite { at: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_segments: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-11,
            abs: 0.0,
            max_segments: 20_000,
        }
    }
}

/// Result of an integration: value, error bound and panel count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub segments: usize,
}

/// Value, error estimate and magnitude (integral of |g|, roughly) of one panel.
///
/// `noise` is the level the error estimate cannot drop below because of
/// rounding in the samples and in the node positions; panels with
/// `error ≤ NOISE_FACTOR · noise` are not refined further.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub value: f64,
    pub error: f64,
    pub magnitude: f64,
    pub noise: f64,
}

pub const NOISE_FACTOR: f64 = 4.0;

impl Panel {
    pub fn from_series(series: &LegendreSeries) -> Self {
        Panel {
            value: series.integral(),
            error: series.error(),
            magnitude: series.magnitude(),
            noise: series.noise(),
        }
    }
}

struct LegendreRule {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
    /// Row `k`, column `j`: `(2k+1)/2 · w_j · P_k(x_j)`.
    projection: Vec<f64>,
    /// Largest row 1-norm among the two trailing coefficients.
    tail_gain: f64,
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn rule() -> &'static LegendreRule {
    static RULE: OnceLock<LegendreRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut nodes = [0.0; ORDER];
        let mut weights = [0.0; ORDER];
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        let mut projection = vec![0.0; n * n];
        for (j, &x) in nodes.iter().enumerate() {
            let mut p_prev = 1.0;
            let mut p = x;
            for k in 0..n {
                let pk = match k {
                    0 => 1.0,
                    1 => x,
                    _ => {
                        let kf = k as f64;
                        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
                        p_prev = p;
                        p = next;
                        next
                    }
                };
                projection[k * n + j] = (2.0 * k as f64 + 1.0) / 2.0 * weights[j] * pk;
            }
        }
        let tail_gain = (n - 2..n)
            .map(|k| {
                projection[k * n..(k + 1) * n]
                    .iter()
                    .map(|p| p.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        LegendreRule {
            nodes,
            weights,
            projection,
            tail_gain,
        }
    })
}

/// Nodes of the panel `[a, b]`.
pub fn panel_nodes(a: f64, b: f64) -> [f64; ORDER] {
    let r = rule();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [0.0; ORDER];
    for (o, x) in out.iter_mut().zip(r.nodes.iter()) {
        *o = c + h * x;
    }
    out
}

/// Legendre coefficients of the interpolant through samples taken at
/// [`panel_nodes`].
#[derive(Debug, Clone)]
pub struct LegendreSeries {
    coeffs: [f64; ORDER],
    half_width: f64,
    center: f64,
    magnitude: f64,
    noise: f64,
}

impl LegendreSeries {
    pub fn from_samples(a: f64, b: f64, samples: &[f64; ORDER]) -> Self {
        let r = rule();
        let mut coeffs = [0.0; ORDER];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let row = &r.projection[k * ORDER..(k + 1) * ORDER];
            *c = row.iter().zip(samples.iter()).map(|(p, g)| p * g).sum();
        }
        let half_width = 0.5 * (b - a);
        let magnitude = half_width
            * r.weights
                .iter()
                .zip(samples.iter())
                .map(|(w, g)| w * g.abs())
                .sum::<f64>();
        // Each sample is off by ~ε|g| plus |g'| times the rounding of its node.
        let nodes = panel_nodes(a, b);
        let mut slope: f64 = 0.0;
        for j in 1..ORDER {
            let dx = (nodes[j] - nodes[j - 1]).abs();
            if dx > 0.0 {
                slope = slope.max((samples[j] - samples[j - 1]).abs() / dx);
            }
        }
        let peak = samples.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        let jitter = 0.5 * f64::EPSILON * a.abs().max(b.abs());
        let noise = 2.0 * half_width * r.tail_gain * (4.0 * f64::EPSILON * peak + jitter * slope);
        Self {
            coeffs,
            half_width,
            center: 0.5 * (a + b),
            magnitude,
            noise,
        }
    }

    pub fn integral(&self) -> f64 {
        2.0 * self.half_width * self.coeffs[0]
    }

    /// Truncation estimate from the two trailing coefficients.
    pub fn error(&self) -> f64 {
        2.0 * self.half_width
            * self.coeffs[ORDER - 1]
                .abs()
                .max(self.coeffs[ORDER - 2].abs())
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    /// Floor of [`error`](Self::error) set by rounding in samples and nodes.
    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// `∫ g(ω) e^{iωt} dω` over the panel, returned as `(re, im)`.
    pub fn fourier(&self, t: f64) -> (f64, f64) {
        let kappa = self.half_width * t;
        let mut bessel = [0.0; ORDER];
        spherical_bessel_j(kappa, &mut bessel);
        // Σ c_k i^k j_k split by the phase of i^k.
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, (c, j)) in self.coeffs.iter().zip(bessel.iter()).enumerate() {
            let term = c * j;
            match k % 4 {
                0 => re += term,
                1 => im += term,
                2 => re -= term,
                _ => im -= term,
            }
        }
        let (s, co) = (self.center * t).sin_cos();
        let scale = 2.0 * self.half_width;
        (scale * (co * re - s * im), scale * (s * re + co * im))
    }
}

/// Spherical Bessel functions `j_0..j_{n-1}` at `x ≥ 0`.
///
/// Upward recurrence when `x` exceeds the highest order, otherwise Miller's
/// downward recurrence normalized against the closed form of `j_0` or `j_1`.
pub fn spherical_bessel_j(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    if x == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
        return;
    }
    if x < 1e-6 {
        // Higher orders are below x³/105.
        out.fill(0.0);
        out[0] = 1.0 - x * x / 6.0;
        if n > 1 {
            out[1] = x / 3.0;
        }
        if n > 2 {
            out[2] = x * x / 15.0;
        }
        return;
    }
    let (s, c) = x.sin_cos();
    let j0 = if x < 1e-4 { 1.0 - x * x / 6.0 } else { s / x };
    if x > n as f64 {
        out[0] = j0;
        if n > 1 {
            out[1] = s / (x * x) - c / x;
        }
        for k in 1..n.saturating_sub(1) {
            out[k + 1] = (2.0 * k as f64 + 1.0) / x * out[k] - out[k - 1];
        }
        return;
    }
    let start = n + 20 + (x.sqrt() * 4.0) as usize + x as usize;
    let mut above = 0.0_f64;
    let mut current = 1e-300_f64;
    out.fill(0.0);
    for k in (1..=start).rev() {
        let below = (2.0 * k as f64 + 1.0) / x * current - above;
        above = current;
        current = below;
        if k - 1 < n {
            out[k - 1] = current;
        }
        if current.abs() > 1e250 {
            above *= 1e-250;
            current *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    // `current` holds the unnormalized j_0 and `above` j_1.
    let scale = if x < 0.5 || n < 2 {
        j0 / current
    } else {
        let j1 = s / (x * x) - c / x;
        if j0.abs() >= j1.abs() {
            j0 / current
        } else {
            j1 / above
        }
    };
    for v in out.iter_mut() {
        *v *= scale;
    }
}

/// Neumaier-compensated sum in the given order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Copy)]
struct Segment<K> {
    a: f64,
    b: f64,
    kind: K,
    panel: Panel,
}

struct ByError<K>(Segment<K>);

impl<K> PartialEq for ByError<K> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<K> Eq for ByError<K> {}
impl<K> PartialOrd for ByError<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<K> Ord for ByError<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .panel
            .error
            .total_cmp(&other.0.panel.error)
            .then_with(|| other.0.a.total_cmp(&self.0.a))
    }
}

/// Globally adaptive integration over a set of tagged intervals.
///
/// `rule(a, b, kind)` evaluates one panel. Panels are bisected (keeping their
/// tag) in order of decreasing error until the summed error satisfies `tol`
/// or only panels at floating-point resolution remain. The final value is a
/// compensated sum over panels sorted by left endpoint, so the result does
/// not depend on the refinement history beyond the panel set itself.
pub fn adaptive<K, R>(
    initial: &[(f64, f64, K)],
    tol: Tolerance,
    mut rule: R,
) -> Result<Estimate, QuadratureError>
where
    K: Copy,
    R: FnMut(f64, f64, K) -> Panel,
{
    let mut heap: BinaryHeap<ByError<K>> = BinaryHeap::new();
    let mut frozen: Vec<Segment<K>> = Vec::new();
    let mut total_value = 0.0;
    let mut total_error = 0.0;
    let mut total_magnitude = 0.0;
    let mut total_noise = 0.0;

    let mut evaluate = |a: f64, b: f64, kind: K| -> Result<Segment<K>, QuadratureError> {
        let panel = rule(a, b, kind);
        if !(panel.value.is_finite() && panel.error.is_finite()) {
            return Err(QuadratureError::NonFinite { at: 0.5 * (a + b) });
        }
        Ok(Segment { a, b, kind, panel })
    };

    for &(a, b, kind) in initial {
        if b <= a {
            continue;
        }
        let seg = evaluate(a, b, kind)?;
        total_value += seg.panel.value;
        total_error += seg.panel.error;
        total_magnitude += seg.panel.magnitude;
        total_noise += seg.panel.noise;
        heap.push(ByError(seg));
    }

    let target = |value: f64, magnitude: f64, noise: f64| {
        tol.abs
            .max(tol.rel * value.abs())
            .max(64.0 * f64::EPSILON * magnitude)
            + NOISE_FACTOR * noise
    };

    let mut count = heap.len();
    while total_error > target(total_value, total_magnitude, total_noise) {
        let Some(ByError(worst)) = heap.pop() else {
            break;
        };
        let mid = 0.5 * (worst.a + worst.b);
        let at_noise_floor = worst.panel.error <= NOISE_FACTOR * worst.panel.noise;
        if mid <= worst.a || mid >= worst.b || at_noise_floor || count >= tol.max_segments {
            frozen.push(worst);
            if count >= tol.max_segments {
                break;
            }
            continue;
        }
        let left = evaluate(worst.a, mid, worst.kind)?;
        let right = evaluate(mid, worst.b, worst.kind)?;
        total_value += left.panel.value + right.panel.value - worst.panel.value;
        total_error += left.panel.error + right.panel.error - worst.panel.error;
        total_magnitude += left.panel.magnitude + right.panel.magnitude - worst.panel.magnitude;
        total_noise += left.panel.noise + right.panel.noise - worst.panel.noise;
        heap.push(ByError(left));
        heap.push(ByError(right));
        count += 1;
    }

    let mut all: Vec<Segment<K>> = heap.into_iter().map(|s| s.0).chain(frozen).collect();
    all.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = compensated_sum(all.iter().map(|s| s.panel.value));
    let error = compensated_sum(all.iter().map(|s| s.panel.error));
    let magnitude = compensated_sum(all.iter().map(|s| s.panel.magnitude));
    let noise = compensated_sum(all.iter().map(|s| s.panel.noise));
    let estimate = Estimate {
        value,
        error,
        segments: all.len(),
    };
    if error > target(value, magnitude, noise) {
        return Err(QuadratureError::NonConvergence {
            estimate: value,
            error_bound: error,
            segments: all.len(),
        });
    }
    Ok(estimate)
}

/// Plain adaptive integral of a smooth function on `[a, b]` with optional
/// interior breakpoints.
pub fn integrate<F: Fn(f64) -> f64>(
    g: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<Estimate, QuadratureError> {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(b);
    let initial: Vec<(f64, f64, ())> = edges.windows(2).map(|w| (w[0], w[1], ())).collect();
    adaptive(&initial, tol, |lo, hi, ()| {
        let nodes = panel_nodes(lo, hi);
        let mut samples = [0.0; ORDER];
        for (s, &x) in samples.iter_mut().zip(nodes.iter()) {
            *s = g(x);
        }
        Panel::from_series(&LegendreSeries::from_samples(lo, hi, &samples))
    })
}
