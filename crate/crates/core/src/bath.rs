//! Bath coupling spectra.
//!
//! A [`SpectralDensity`] is the zero-temperature coupling spectrum `G_0(ω)`
//! together with an inverse temperature and a thermal-factor convention,
//! which together define the thermal spectrum `G_T(ω)`. Frequencies are in
//! whatever unit the caller chooses (`ω_c = 1` for the dimensionless presets,
//! s⁻¹ for the physical ones); times are the reciprocal unit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{self, QuadratureError, Tolerance};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpectrumError {
    #[error("spectral density evaluated at negative frequency {0:e}")]
    NegativeFrequency(f64),
    #[error("invalid spectrum parameter `{name}` = {value:e}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("invalid spectrum table: {0}")]
    InvalidTable(String),
    #[error("total coupling integral failed: {0}")]
    Numeric(#[from] QuadratureError),
}

/// Thermal factor applied to `G_0` to obtain `G_T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ThermalConvention {
    /// `coth(βω)`.
    #[default]
    #[serde(rename = "paper")]
    PaperCoth,
    /// `coth(βω/2)`.
    #[serde(rename = "standard")]
    StandardCothHalf,
}

/// Linearly interpolated `(ω, G_0)` samples; zero outside the table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    points: Vec<(f64, f64)>,
}

impl Table {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, SpectrumError> {
        if points.is_empty() {
            return Err(SpectrumError::InvalidTable("table is empty".into()));
        }
        for (i, &(w, g)) in points.iter().enumerate() {
            if !(w.is_finite() && g.is_finite()) {
                return Err(SpectrumError::InvalidTable(format!(
                    "non-finite entry at row {i}"
                )));
            }
            if w < 0.0 {
                return Err(SpectrumError::InvalidTable(format!(
                    "negative frequency at row {i}"
                )));
            }
            if g < 0.0 {
                return Err(SpectrumError::InvalidTable(format!(
                    "negative coupling at row {i}"
                )));
            }
            if i > 0 && w <= points[i - 1].0 {
                return Err(SpectrumError::InvalidTable(format!(
                    "frequencies not strictly increasing at row {i}"
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    fn eval(&self, omega: f64) -> f64 {
        let pts = &self.points;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if omega < first.0 || omega > last.0 {
            return 0.0;
        }
        if pts.len() == 1 {
            return first.1;
        }
        let idx = pts.partition_point(|&(w, _)| w <= omega);
        if idx >= pts.len() {
            return last.1;
        }
        let (w0, g0) = pts[idx - 1];
        let (w1, g1) = pts[idx];
        g0 + (g1 - g0) * (omega - w0) / (w1 - w0)
    }

    fn span(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }
}

/// Model family of the zero-temperature spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumShape {
    /// `α ω e^{-ω/ω_c}`
    Ohmic {
        alpha: f64,
        omega_c: f64,
    },
    /// `α ω_c² / (ω_c² + (ω - ω_0)²)`
    Lorentzian {
        alpha: f64,
        omega_c: f64,
        omega_0: f64,
    },
    Tabulated {
        table: Table,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Ohmic,
    Lorentzian,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDensity {
    #[serde(flatten)]
    shape: SpectrumShape,
    /// Inverse temperature; `None` is zero temperature.
    beta: Option<f64>,
    thermal_convention: ThermalConvention,
}

fn check_positive(name: &'static str, value: f64) -> Result<(), SpectrumError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SpectrumError::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn check_nonnegative(name: &'static str, value: f64) -> Result<(), SpectrumError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(SpectrumError::InvalidParameter {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}

impl SpectralDensity {
    pub fn ohmic(alpha: f64, omega_c: f64) -> Result<Self, SpectrumError> {
        check_nonnegative("alpha", alpha)?;
        check_positive("omega_c", omega_c)?;
        Ok(Self::from_shape(SpectrumShape::Ohmic { alpha, omega_c }))
    }

    pub fn lorentzian(alpha: f64, omega_c: f64, omega_0: f64) -> Result<Self, SpectrumError> {
        check_nonnegative("alpha", alpha)?;
        check_positive("omega_c", omega_c)?;
        check_nonnegative("omega_0", omega_0)?;
        Ok(Self::from_shape(SpectrumShape::Lorentzian {
            alpha,
            omega_c,
            omega_0,
        }))
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self, SpectrumError> {
        Ok(Self::from_shape(SpectrumShape::Tabulated {
            table: Table::new(points)?,
        }))
    }

    fn from_shape(shape: SpectrumShape) -> Self {
        Self {
            shape,
            beta: None,
            thermal_convention: ThermalConvention::PaperCoth,
        }
    }

    /// Sets the inverse temperature. `None` or `+∞` means zero temperature.
    pub fn with_beta(mut self, beta: Option<f64>) -> Result<Self, SpectrumError> {
        self.beta = match beta {
            None => None,
            Some(b) if b == f64::INFINITY => None,
            Some(b) => {
                check_positive("beta", b)?;
                Some(b)
            }
        };
        Ok(self)
    }

    pub fn with_thermal_convention(mut self, convention: ThermalConvention) -> Self {
        self.thermal_convention = convention;
        self
    }

    /// Same spectrum with `α` replaced. For tabulated spectra every table
    /// value is multiplied by `alpha`.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, SpectrumError> {
        check_nonnegative("alpha", alpha)?;
        let shape = match &self.shape {
            SpectrumShape::Ohmic { omega_c, .. } => SpectrumShape::Ohmic {
                alpha,
                omega_c: *omega_c,
            },
            SpectrumShape::Lorentzian {
                omega_c, omega_0, ..
            } => SpectrumShape::Lorentzian {
                alpha,
                omega_c: *omega_c,
                omega_0: *omega_0,
            },
            SpectrumShape::Tabulated { table } => SpectrumShape::Tabulated {
                table: Table::new(table.points.iter().map(|&(w, g)| (w, alpha * g)).collect())?,
            },
        };
        Ok(Self {
            shape,
            ..self.clone()
        })
    }

    pub fn shape(&self) -> &SpectrumShape {
        &self.shape
    }

    pub fn kind(&self) -> SpectrumKind {
        match self.shape {
            SpectrumShape::Ohmic { .. } => SpectrumKind::Ohmic,
            SpectrumShape::Lorentzian { .. } => SpectrumKind::Lorentzian,
            SpectrumShape::Tabulated { .. } => SpectrumKind::Tabulated,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    pub fn thermal_convention(&self) -> ThermalConvention {
        self.thermal_convention
    }

    /// Characteristic width: `ω_c` for the model families, the table span
    /// otherwise.
    pub fn omega_c(&self) -> f64 {
        match &self.shape {
            SpectrumShape::Ohmic { omega_c, .. } | SpectrumShape::Lorentzian { omega_c, .. } => {
                *omega_c
            }
            SpectrumShape::Tabulated { table } => table.span(),
        }
    }

    pub fn omega_0(&self) -> f64 {
        match &self.shape {
            SpectrumShape::Lorentzian { omega_0, .. } => *omega_0,
            _ => 0.0,
        }
    }

    /// `G_0(ω)` without the domain check.
    pub(crate) fn g0_unchecked(&self, omega: f64) -> f64 {
        match &self.shape {
            SpectrumShape::Ohmic { alpha, omega_c } => alpha * omega * (-omega / omega_c).exp(),
            SpectrumShape::Lorentzian {
                alpha,
                omega_c,
                omega_0,
            } => {
                let d = omega - omega_0;
                alpha * omega_c * omega_c / (omega_c * omega_c + d * d)
            }
            SpectrumShape::Tabulated { table } => table.eval(omega),
        }
    }

    pub fn eval_g0(&self, omega: f64) -> Result<f64, SpectrumError> {
        if omega < 0.0 || omega.is_nan() {
            return Err(SpectrumError::NegativeFrequency(omega));
        }
        Ok(self.g0_unchecked(omega))
    }

    /// Argument multiplier inside coth: `βω` or `βω/2`.
    fn thermal_beta(&self) -> Option<f64> {
        self.beta.map(|b| match self.thermal_convention {
            ThermalConvention::PaperCoth => b,
            ThermalConvention::StandardCothHalf => 0.5 * b,
        })
    }

    /// `lim_{ω→0} G_0(ω)/ω`, or `None` when `G_0(0) > 0`.
    pub(crate) fn low_frequency_slope(&self) -> Option<f64> {
        match &self.shape {
            SpectrumShape::Ohmic { alpha, .. } => Some(*alpha),
            SpectrumShape::Lorentzian { alpha, .. } => (*alpha == 0.0).then_some(0.0),
            SpectrumShape::Tabulated { table } => {
                let pts = table.points();
                match pts {
                    [(w0, _), ..] if *w0 > 0.0 => Some(0.0),
                    [(_, g0), ..] if *g0 > 0.0 => None,
                    [_] => Some(0.0),
                    [_, (w1, g1), ..] => Some(g1 / w1),
                    [] => Some(0.0),
                }
            }
        }
    }

    /// `G_T(0⁺)`; `+∞` when `G_0(0) > 0` at finite temperature.
    pub fn gt_at_zero(&self) -> f64 {
        match self.thermal_beta() {
            None => self.g0_unchecked(0.0),
            Some(b) => match self.low_frequency_slope() {
                Some(slope) => slope / b,
                None => f64::INFINITY,
            },
        }
    }

    pub(crate) fn gt_unchecked(&self, omega: f64) -> f64 {
        if omega == 0.0 {
            return self.gt_at_zero();
        }
        let g0 = self.g0_unchecked(omega);
        match self.thermal_beta() {
            None => g0,
            Some(b) => {
                if g0 == 0.0 {
                    0.0
                } else {
                    g0 / (b * omega).tanh()
                }
            }
        }
    }

    pub fn eval_gt(&self, omega: f64) -> Result<f64, SpectrumError> {
        if omega < 0.0 || omega.is_nan() {
            return Err(SpectrumError::NegativeFrequency(omega));
        }
        Ok(self.gt_unchecked(omega))
    }

    /// Frequencies where the integrands change character: table nodes,
    /// Lorentzian centre and shoulders, thermal scale.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut out = match &self.shape {
            SpectrumShape::Ohmic { omega_c, .. } => vec![*omega_c, 10.0 * omega_c],
            SpectrumShape::Lorentzian {
                omega_c, omega_0, ..
            } => [-10.0, -1.0, 0.0, 1.0, 10.0]
                .iter()
                .map(|k| omega_0 + k * omega_c)
                .filter(|&w| w > 0.0)
                .collect(),
            SpectrumShape::Tabulated { table } => table.points.iter().map(|p| p.0).collect(),
        };
        if let Some(b) = self.thermal_beta() {
            out.push(1.0 / b);
        }
        out.retain(|w| w.is_finite() && *w > 0.0);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Frequency beyond which the spectrum is treated as a tail:
    /// `ω_0 + 50 ω_c` for the model families, the table end otherwise.
    pub(crate) fn support_edge(&self) -> f64 {
        match &self.shape {
            SpectrumShape::Ohmic { omega_c, .. } => 50.0 * omega_c,
            SpectrumShape::Lorentzian {
                omega_c, omega_0, ..
            } => omega_0 + 50.0 * omega_c,
            SpectrumShape::Tabulated { table } => table.span(),
        }
    }

    /// True when `G_0` vanishes beyond [`Self::support_edge`].
    pub(crate) fn compact_support(&self) -> bool {
        matches!(self.shape, SpectrumShape::Tabulated { .. })
    }

    /// `η = sqrt(∫_0^∞ G_0(ω) dω)`.
    pub fn total_coupling(&self) -> Result<f64, SpectrumError> {
        let edge = self.support_edge();
        let tol = Tolerance {
            rel: 1e-12,
            ..Tolerance::default()
        };
        let body = quadrature::integrate(
            |w| self.g0_unchecked(w),
            0.0,
            edge,
            &self.breakpoints(),
            tol,
        )?;
        let tail = if self.compact_support() {
            0.0
        } else {
            // ω = edge/u maps [edge, ∞) onto (0, 1].
            quadrature::integrate(
                |u| {
                    let w = edge / u;
                    self.g0_unchecked(w) * edge / (u * u)
                },
                0.0,
                1.0,
                &[],
                tol,
            )?
            .value
        };
        let total = body.value + tail;
        if !total.is_finite() {
            return Err(SpectrumError::Numeric(QuadratureError::NonFinite {
                at: edge,
            }));
        }
        Ok(total.max(0.0).sqrt())
    }
}
