//! Exact reduced dynamics, cat-state targets and the formation time.
//!
//! In a sector `l` the reduced density matrix evolves elementwise,
//!
//! ```text
//! ρ_{mm'}(t) = ρ_{mm'}(0) e^{−i t f(t) (m² − m'²)} e^{−t Γ(t) (m − m')²},
//! ```
//!
//! so populations never move and every coherence only acquires a phase and a
//! Gaussian-in-`(m − m')` damping.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bath::SpectralDensity;
use crate::dicke::{self, Basis, DickeDensityMatrix, DickeError, DickeState, SectorLabel};
use crate::kernels::{self, KernelError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvolveError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Dicke(#[from] DickeError),
    #[error("time must be finite and >= 0, got {0:e}")]
    InvalidTime(f64),
    #[error("snapshot times must be strictly increasing (index {0})")]
    InvalidGrid(usize),
    #[error(
        "no cat formation: t f(t) reaches only {supremum:e} < π/2 by the horizon t = {horizon:e}"
    )]
    NoFormation { supremum: f64, horizon: f64 },
    #[error(
        "formation-time search did not converge (bracket [{lo:e}, {hi:e}], residual {residual:e})"
    )]
    NoConvergence { lo: f64, hi: f64, residual: f64 },
    #[error("cat-state targets need a coherent initial state with known Bloch angles")]
    MissingAngles,
}

/// Which antipodal partner completes the cat target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MqsConvention {
    /// Partner `|θ − π, φ⟩`.
    #[serde(rename = "paper")]
    Antipodal,
    /// Partner `e^{iπL_z}|θ, φ⟩`, the state reached by `L_z²` twisting with
    /// phase `π/2`.
    #[default]
    #[serde(rename = "twist")]
    TwistCompatible,
}

/// Initial state, bath and target convention of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionParams {
    spectrum: SpectralDensity,
    initial: DickeState,
    angles: Option<(f64, f64)>,
    mqs_convention: MqsConvention,
    dephasing_suppressed: bool,
}

impl EvolutionParams {
    /// Coherent initial state `|θ, φ⟩` of `n_particles` spins.
    pub fn coherent(
        spectrum: SpectralDensity,
        n_particles: u32,
        theta: f64,
        phi: f64,
        mqs_convention: MqsConvention,
    ) -> Result<Self, EvolveError> {
        let sector = SectorLabel::symmetric(n_particles)?;
        Ok(Self {
            spectrum,
            initial: dicke::coherent_state(sector, theta, phi)?,
            angles: Some((theta, phi)),
            mqs_convention,
            dephasing_suppressed: false,
        })
    }

    /// Arbitrary normalized initial state; [`assess_mqs`] is unavailable.
    pub fn from_state(
        spectrum: SpectralDensity,
        initial: DickeState,
        mqs_convention: MqsConvention,
    ) -> Self {
        Self {
            spectrum,
            initial,
            angles: None,
            mqs_convention,
            dephasing_suppressed: false,
        }
    }

    /// Forces `Γ ≡ 0`, leaving only the unitary twisting.
    pub fn without_dephasing(mut self) -> Self {
        self.dephasing_suppressed = true;
        self
    }

    pub fn spectrum(&self) -> &SpectralDensity {
        &self.spectrum
    }

    pub fn sector(&self) -> SectorLabel {
        self.initial.sector()
    }

    pub fn initial(&self) -> &DickeState {
        &self.initial
    }

    pub fn angles(&self) -> Option<(f64, f64)> {
        self.angles
    }

    pub fn mqs_convention(&self) -> MqsConvention {
        self.mqs_convention
    }

    pub fn dephasing_suppressed(&self) -> bool {
        self.dephasing_suppressed
    }

    /// `(f(t), Γ(t))`, with `Γ = 0` when dephasing is suppressed. Both are 0 at
    /// `t = 0`.
    pub fn kernels_at(&self, t: f64) -> Result<(f64, f64), EvolveError> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(EvolveError::InvalidTime(t));
        }
        if t == 0.0 {
            return Ok((0.0, 0.0));
        }
        let f = kernels::f_of_t(&self.spectrum, t)?;
        let gamma = if self.dephasing_suppressed {
            0.0
        } else {
            kernels::gamma_of_t(&self.spectrum, t)?
        };
        Ok((f, gamma))
    }
}

/// The evolved density matrix for given kernel values, in the `L_z` basis.
pub fn evolve_with_kernels(initial: &DickeState, t: f64, f: f64, gamma: f64) -> DickeDensityMatrix {
    let sector = initial.sector();
    let d = sector.dimension();
    let twist = t * f;
    let u: DVector<Complex64> = DVector::from_iterator(
        d,
        initial.amplitudes().iter().enumerate().map(|(i, c)| {
            let m = sector.m(i);
            c * Complex64::from_polar(1.0, -twist * m * m)
        }),
    );
    // Depends on |i − j| only; m − m' = j − i.
    let damping: Vec<f64> = (0..d)
        .map(|k| (-t * gamma * (k * k) as f64).exp())
        .collect();
    let elements = DMatrix::from_fn(d, d, |i, j| u[i] * u[j].conj() * damping[i.abs_diff(j)]);
    DickeDensityMatrix::from_parts(sector, elements, Basis::Lz)
}

/// `ρ(t)` in the `L_z` basis; `t = 0` gives the initial projector.
pub fn evolve_state(p: &EvolutionParams, t: f64) -> Result<DickeDensityMatrix, EvolveError> {
    let (f, gamma) = p.kernels_at(t)?;
    Ok(evolve_with_kernels(&p.initial, t, f, gamma))
}

/// `e^{iπm}` for `2m = two_m`, exact for integer and half-integer `m`.
fn pi_phase(two_m: i64) -> Complex64 {
    match two_m.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Cat target `(e^{−iπ/4}|θ, φ⟩ + e^{iπ/4}|partner⟩)/√2`, renormalized.
///
/// At the equator the two partners differ by the global sign `(−1)^l`.
pub fn mqs_target(
    sector: SectorLabel,
    theta: f64,
    phi: f64,
    convention: MqsConvention,
) -> Result<DickeState, DickeError> {
    let first = dicke::coherent_state(sector, theta, phi)?;
    let partner: DVector<Complex64> = match convention {
        MqsConvention::Antipodal => {
            dicke::coherent_state(sector, theta - std::f64::consts::PI, phi)?
                .amplitudes()
                .clone()
        }
        MqsConvention::TwistCompatible => DVector::from_iterator(
            sector.dimension(),
            first
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(i, c)| c * pi_phase(sector.two_l() as i64 - 2 * i as i64)),
        ),
    };
    let a = Complex64::from_polar(FRAC_1_SQRT_2, -FRAC_PI_4);
    let b = Complex64::from_polar(FRAC_1_SQRT_2, FRAC_PI_4);
    DickeState::normalized(sector, first.amplitudes() * a + partner * b)
}

/// Root of `t f(t) = π/2` with its certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauSolution {
    pub tau: f64,
    /// `g(lo) < 0 ≤ g(hi)` for `g(t) = t f(t) − π/2`.
    pub bracket: (f64, f64),
    /// `τ f(τ) − π/2`.
    pub residual: f64,
    pub f_at_tau: f64,
}

pub const TAU_RESIDUAL_TOL: f64 = 1e-9 * FRAC_PI_2;
const HORIZON_FACTOR: f64 = 1e6;
const HORIZON_EXTENSION: f64 = 1e3;

/// Time scale for bracketing; falls back to the zero-temperature width when
/// the thermal spectrum has none.
fn search_scale(sd: &SpectralDensity) -> Result<f64, KernelError> {
    match kernels::correlation_time(sd) {
        Ok(t) => Ok(t),
        Err(KernelError::WidthUndefined(_)) => kernels::correlation_time(
            &sd.clone()
                .with_beta(None)
                .expect("zero temperature is valid"),
        ),
        Err(e) => Err(e),
    }
}

/// Earliest `τ` with `τ f(τ) = π/2`.
///
/// `t f(t) = ∫ G_0 (ωt − sin ωt)/ω² dω` is nondecreasing, so the root is
/// bracketed by doubling from `10⁻³ t_c`, narrowed by bisection and polished
/// by Illinois regula falsi inside the bracket. The search horizon is
/// `10⁶ t_c`, stretched by up to `10³` when the near-linear late growth of
/// `t f(t)` projects the crossing beyond it.
pub fn solve_tau_mqs(sd: &SpectralDensity) -> Result<TauSolution, EvolveError> {
    let t_c = search_scale(sd)?;
    let g = |t: f64| -> Result<(f64, f64), EvolveError> {
        let f = kernels::f_of_t(sd, t)?;
        Ok((t * f - FRAC_PI_2, f))
    };
    // Beyond 10⁶ t_c, t f(t) ≈ f_M t − const; follow that line at most 10³ further.
    let base = HORIZON_FACTOR * t_c;
    let (g_base, _) = g(base)?;
    let reach = g_base + FRAC_PI_2;
    let horizon = if g_base >= 0.0 || reach <= 0.0 {
        base
    } else {
        base * (4.0 * FRAC_PI_2 / reach).min(HORIZON_EXTENSION)
    };

    let mut lo = 1e-3 * t_c;
    let (mut g_lo, _) = g(lo)?;
    while g_lo >= 0.0 {
        lo *= 0.5;
        if lo < 1e-12 * t_c {
            return Err(EvolveError::NoConvergence {
                lo,
                hi: 2.0 * lo,
                residual: g_lo,
            });
        }
        g_lo = g(lo)?.0;
    }
    let mut hi = lo;
    let mut g_hi = g_lo;
    while g_hi < 0.0 {
        lo = hi;
        g_lo = g_hi;
        if hi >= horizon {
            return Err(EvolveError::NoFormation {
                supremum: g_hi + FRAC_PI_2,
                horizon: hi,
            });
        }
        hi = (2.0 * hi).min(horizon);
        g_hi = g(hi)?.0;
    }

    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        let (gm, _) = g(mid)?;
        if gm < 0.0 {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            g_hi = gm;
        }
    }

    // Illinois: halve the retained endpoint's value when the same side moves twice.
    let mut side = 0i8;
    let mut best = if -g_lo < g_hi { (lo, g_lo) } else { (hi, g_hi) };
    for _ in 0..100 {
        if best.1.abs() <= 1e-3 * TAU_RESIDUAL_TOL || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mut t = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
        }
        let (gt, _) = g(t)?;
        if gt.abs() < best.1.abs() {
            best = (t, gt);
        }
        if gt < 0.0 {
            lo = t;
            g_lo = gt;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = t;
            g_hi = gt;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
    }
    let (tau, residual) = best;
    if residual.abs() > TAU_RESIDUAL_TOL {
        return Err(EvolveError::NoConvergence { lo, hi, residual });
    }
    // Re-evaluate the certificate with unscaled values.
    let (g_lo, _) = g(lo)?;
    let (g_hi, _) = g(hi)?;
    let bracket = if g_lo < 0.0 && g_hi >= 0.0 {
        (lo, hi)
    } else {
        certify(&g, tau, residual)?
    };
    Ok(TauSolution {
        tau,
        bracket,
        residual,
        f_at_tau: (residual + FRAC_PI_2) / tau,
    })
}

/// A sign-change bracket around `tau`, widened geometrically.
fn certify<G>(g: &G, tau: f64, residual: f64) -> Result<(f64, f64), EvolveError>
where
    G: Fn(f64) -> Result<(f64, f64), EvolveError>,
{
    let mut h = 8.0 * f64::EPSILON * tau;
    for _ in 0..60 {
        let (a, b) = (tau - h, tau + h);
        if g(a)?.0 < 0.0 && g(b)?.0 >= 0.0 {
            return Ok((a, b));
        }
        h *= 4.0;
    }
    Err(EvolveError::NoConvergence {
        lo: tau,
        hi: tau,
        residual,
    })
}

/// Formation time, cat quality and the survival condition
/// `τ Γ(τ) N² < 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MqsReport {
    pub n_particles: u32,
    pub tau_mqs: f64,
    pub f_at_tau: f64,
    pub gamma_at_tau: f64,
    /// `τ Γ(τ)`; the time average in `Γ` already plays the role of `Γ̄`.
    pub tau_gamma: f64,
    pub fidelity: f64,
    /// `|ρ_{+l,−l}|` in the `L_x` basis.
    pub corner: f64,
    pub purity: f64,
    pub feasible: bool,
    /// `⌊1/√(τ Γ(τ))⌋`; `None` when `Γ(τ) = 0`.
    pub n_max: Option<u64>,
    pub convention_used: MqsConvention,
    pub dephasing_suppressed: bool,
    pub tau_bracket: (f64, f64),
    pub tau_residual: f64,
}

/// `⌊1/√x⌋`, exact at perfect squares.
pub fn n_max_from(tau_gamma: f64) -> Option<u64> {
    if !(tau_gamma > 0.0) || !tau_gamma.is_finite() {
        return None;
    }
    let mut n = (1.0 / tau_gamma.sqrt()).floor() as u64;
    while n > 0 && (n as f64) * (n as f64) * tau_gamma >= 1.0 {
        n -= 1;
    }
    while ((n + 1) as f64) * ((n + 1) as f64) * tau_gamma < 1.0 {
        n += 1;
    }
    // n² τΓ < 1 ≤ (n+1)² τΓ, i.e. N = n is the largest feasible size.
    Some(n)
}

pub fn assess_mqs(p: &EvolutionParams) -> Result<MqsReport, EvolveError> {
    let (theta, phi) = p.angles.ok_or(EvolveError::MissingAngles)?;
    let solution = solve_tau_mqs(&p.spectrum)?;
    let tau = solution.tau;
    let (_, gamma) = p.kernels_at(tau)?;
    let rho = evolve_with_kernels(&p.initial, tau, solution.f_at_tau, gamma);
    let target = mqs_target(p.sector(), theta, phi, p.mqs_convention)?;
    let fidelity = dicke::fidelity(&rho, &target)?;
    let purity = dicke::purity(&rho);
    let corner = dicke::coherence_corner(&rho.to_basis(Basis::Lx))?;
    let n = p.sector().n_particles();
    let tau_gamma = tau * gamma;
    Ok(MqsReport {
        n_particles: n,
        tau_mqs: tau,
        f_at_tau: solution.f_at_tau,
        gamma_at_tau: gamma,
        tau_gamma,
        fidelity,
        corner,
        purity,
        feasible: tau_gamma * (n as f64) * (n as f64) < 1.0,
        n_max: n_max_from(tau_gamma),
        convention_used: p.mqs_convention,
        dephasing_suppressed: p.dephasing_suppressed,
        tau_bracket: solution.bracket,
        tau_residual: solution.residual,
    })
}

/// One time slice of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub f: f64,
    pub gamma: f64,
    pub rho: DickeDensityMatrix,
}

/// JSON sidecar of a snapshot grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotMeta {
    pub time: f64,
    pub f: f64,
    pub gamma: f64,
    pub basis: Basis,
    pub sector: SectorLabel,
    /// Row and column order of the grid.
    pub m_order: &'static str,
}

impl Snapshot {
    pub fn meta(&self) -> SnapshotMeta {
        SnapshotMeta {
            time: self.time,
            f: self.f,
            gamma: self.gamma,
            basis: self.rho.basis(),
            sector: self.rho.sector(),
            m_order: "descending (+l first)",
        }
    }
}

/// `ρ(t)` at each time in `times` (strictly increasing, `≥ 0`), expressed in
/// `basis`. Times are processed in parallel; output order follows `times`.
pub fn snapshot_series(
    p: &EvolutionParams,
    times: &[f64],
    basis: Basis,
) -> Result<Vec<Snapshot>, EvolveError> {
    for (i, &t) in times.iter().enumerate() {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(EvolveError::InvalidTime(t));
        }
        if i > 0 && t <= times[i - 1] {
            return Err(EvolveError::InvalidGrid(i));
        }
    }
    times
        .par_iter()
        .map(|&t| {
            let (f, gamma) = p.kernels_at(t)?;
            let rho = evolve_with_kernels(&p.initial, t, f, gamma).to_basis(basis);
            Ok(Snapshot {
                time: t,
                f,
                gamma,
                rho,
            })
        })
        .collect()
}
