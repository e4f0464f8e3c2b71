//! Collective-spin states in a fixed total-spin sector.
//!
//! Vectors and matrices are indexed by `i = l − m`, so index 0 is `m = +l`
//! and the last index is `m = −l`. Every serialized grid follows the same
//! descending order.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format;

pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DickeError {
    #[error("invalid sector (N = {n_particles}, 2l = {two_l}): {reason}")]
    Sector {
        n_particles: u32,
        two_l: u32,
        reason: &'static str,
    },
    #[error("amplitude vector has length {got}, sector dimension is {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("state norm deviates from 1 by {0:e}")]
    Normalization(f64),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("{0}")]
    Mismatch(&'static str),
    #[error("matrix is not Hermitian: max |ρ − ρ†| = {0:e}")]
    NotHermitian(f64),
    #[error("trace deviates from 1 by {0:e}")]
    Trace(f64),
    #[error("matrix is not positive semidefinite: smallest eigenvalue {0:e}")]
    NotPositive(f64),
}

/// Total-spin sector `l` of `N` spin-½ particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SectorLabel {
    n_particles: u32,
    two_l: u32,
}

impl SectorLabel {
    /// Sector with `2l = two_l`; requires `two_l ≤ N` and `N − 2l` even.
    pub fn new(n_particles: u32, two_l: u32) -> Result<Self, DickeError> {
        let err = |reason| DickeError::Sector {
            n_particles,
            two_l,
            reason,
        };
        if n_particles == 0 {
            return Err(err("N must be ≥ 1"));
        }
        if two_l > n_particles {
            return Err(err("l exceeds N/2"));
        }
        if !(n_particles - two_l).is_multiple_of(2) {
            return Err(err("N − 2l must be even"));
        }
        Ok(Self { n_particles, two_l })
    }

    /// The symmetric sector `l = N/2`.
    pub fn symmetric(n_particles: u32) -> Result<Self, DickeError> {
        Self::new(n_particles, n_particles)
    }

    pub fn n_particles(&self) -> u32 {
        self.n_particles
    }

    pub fn two_l(&self) -> u32 {
        self.two_l
    }

    pub fn l(&self) -> f64 {
        0.5 * self.two_l as f64
    }

    pub fn dimension(&self) -> usize {
        self.two_l as usize + 1
    }

    pub fn is_symmetric(&self) -> bool {
        self.two_l == self.n_particles
    }

    /// `m` at index `i`.
    pub fn m(&self, i: usize) -> f64 {
        0.5 * (self.two_l as f64 - 2.0 * i as f64)
    }

    /// `m` values in storage order, `+l` first.
    pub fn m_values(&self) -> Vec<f64> {
        (0..self.dimension()).map(|i| self.m(i)).collect()
    }
}

impl Serialize for SectorLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            n_particles: u32,
            l: f64,
            dimension: usize,
        }
        Repr {
            n_particles: self.n_particles,
            l: self.l(),
            dimension: self.dimension(),
        }
        .serialize(serializer)
    }
}

/// Quantization axis of the basis a matrix is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Basis {
    #[default]
    #[serde(rename = "lz", alias = "Lz")]
    Lz,
    #[serde(rename = "lx", alias = "Lx")]
    Lx,
}

/// Pure state as `L_z`-basis amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeState {
    sector: SectorLabel,
    amplitudes: DVector<Complex64>,
}

impl DickeState {
    pub fn new(sector: SectorLabel, amplitudes: DVector<Complex64>) -> Result<Self, DickeError> {
        if amplitudes.len() != sector.dimension() {
            return Err(DickeError::Dimension {
                expected: sector.dimension(),
                got: amplitudes.len(),
            });
        }
        if amplitudes
            .iter()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(DickeError::NonFinite("amplitude"));
        }
        let deviation = (amplitudes.norm_squared() - 1.0).abs();
        if deviation > NORM_TOL {
            return Err(DickeError::Normalization(deviation));
        }
        Ok(Self { sector, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(
        sector: SectorLabel,
        mut amplitudes: DVector<Complex64>,
    ) -> Result<Self, DickeError> {
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(DickeError::NonFinite("or zero norm"));
        }
        amplitudes.unscale_mut(norm);
        Self::new(sector, amplitudes)
    }

    pub fn sector(&self) -> SectorLabel {
        self.sector
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &DickeState) -> Result<Complex64, DickeError> {
        if self.sector != other.sector {
            return Err(DickeError::Mismatch("states belong to different sectors"));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn projector(&self) -> DickeDensityMatrix {
        DickeDensityMatrix {
            sector: self.sector,
            elements: &self.amplitudes * self.amplitudes.adjoint(),
            basis: Basis::Lz,
        }
    }
}

/// `ln k!` for `k = 0..=n`.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// `b^e` in log space, with `0^0 = 1`; returns `(ln |b^e|, sign)`.
fn log_power(b: f64, e: usize) -> (f64, f64) {
    if e == 0 {
        return (0.0, 1.0);
    }
    let sign = if b < 0.0 && e % 2 == 1 { -1.0 } else { 1.0 };
    (e as f64 * b.abs().ln(), sign)
}

/// Spin coherent state `|θ, φ⟩`, the symmetric product of
/// `cos(θ/2)|↑⟩ + e^{iφ} sin(θ/2)|↓⟩`.
///
/// `c_m = √C(2l, l−m) cos^{l+m}(θ/2) sin^{l−m}(θ/2) e^{i(l−m)φ}`, so `c_{+l}`
/// is real and positive for `0 ≤ θ < π`.
pub fn coherent_state(sector: SectorLabel, theta: f64, phi: f64) -> Result<DickeState, DickeError> {
    if !sector.is_symmetric() {
        return Err(DickeError::Sector {
            n_particles: sector.n_particles,
            two_l: sector.two_l,
            reason: "coherent states live in the symmetric sector l = N/2",
        });
    }
    if !(theta.is_finite() && phi.is_finite()) {
        return Err(DickeError::NonFinite("Bloch angle"));
    }
    let n = sector.two_l as usize;
    let lnf = ln_factorials(n);
    let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let phi = phi.rem_euclid(TAU);
    let amplitudes = DVector::from_iterator(
        n + 1,
        (0..=n).map(|k| {
            // k = l − m spins down
            let (lc, sc) = log_power(c, n - k);
            let (ls, ss) = log_power(s, k);
            let magnitude = (0.5 * (lnf[n] - lnf[k] - lnf[n - k]) + lc + ls).exp();
            Complex64::from_polar(sc * ss * magnitude, (k as f64 * phi).rem_euclid(TAU))
        }),
    );
    DickeState::normalized(sector, amplitudes)
}

/// Change of basis from `L_z` to `L_x` components, `ψ_x = R ψ_z`.
///
/// `R_{rk} = ⟨x, m_r | z, m_k⟩ = d^l_{m_r m_k}(−π/2)`, the matrix of
/// `e^{iπL_y/2}`. `R` is real orthogonal; row `r` holds the `L_z`
/// components of the `L_x` eigenvector with eigenvalue `m_r`, with sign fixed
/// by `sign(R_{r0}) = (−1)^r`. For `l = 1`,
///
/// ```text
/// R = [[ 1/2,  1/√2, 1/2],
///      [−1/√2, 0,    1/√2],
///      [ 1/2, −1/√2, 1/2]]
/// ```
///
/// which is the transpose of `d^1(π/2)`.
///
/// Each row solves `a_{k−1} v_{k−1} + a_k v_{k+1} = 2μ v_k`,
/// `a_k = √((l−k)(l+k+1))`, by recursion inward from both ends (each
/// direction only runs where the solution grows), matched on the two
/// middle entries and renormalized.
pub fn rotation_to_x(sector: SectorLabel) -> DMatrix<f64> {
    let d = sector.dimension();
    let two_l = sector.two_l as usize;
    let l = sector.l();
    // a[i] couples index i and i − 1, i.e. a_{k} with k = m(i).
    let a: Vec<f64> = (0..d)
        .map(|i| {
            let k = sector.m(i);
            ((l - k) * (l + k + 1.0)).max(0.0).sqrt()
        })
        .collect();
    let lnf = ln_factorials(two_l);
    let mid = two_l / 2;

    let mut out = DMatrix::<f64>::zeros(d, d);
    let mut row = vec![0.0; d];
    let mut lower = vec![0.0; d];
    for r in 0..d {
        let mu2 = 2.0 * sector.m(r);
        if d == 1 {
            out[(0, 0)] = 1.0;
            break;
        }
        // Downward in m (increasing index) from m = +l.
        let top =
            0.5 * (lnf[two_l] - lnf[r] - lnf[two_l - r] - two_l as f64 * std::f64::consts::LN_2);
        row[0] = if r % 2 == 0 { top.exp() } else { -top.exp() };
        let upto = (mid + 1).min(d - 1);
        for i in 0..upto {
            // v_{i+1} from a(i)·v_{i−1} + a(i+1)·v_{i+1} = 2μ v_i
            let prev = if i == 0 { 0.0 } else { a[i] * row[i - 1] };
            row[i + 1] = (mu2 * row[i] - prev) / a[i + 1];
        }
        // Upward in m (decreasing index) from m = −l.
        lower[d - 1] = 1.0;
        for i in (mid + 1..d).rev() {
            let next = if i == d - 1 {
                0.0
            } else {
                a[i + 1] * lower[i + 1]
            };
            lower[i - 1] = (mu2 * lower[i] - next) / a[i];
        }
        let overlap = mid..=upto;
        let num: f64 = overlap.clone().map(|i| row[i] * lower[i]).sum();
        let den: f64 = overlap.map(|i| lower[i] * lower[i]).sum();
        let scale = num / den;
        for i in upto + 1..d {
            row[i] = scale * lower[i];
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let sign = if (row[0] < 0.0) == (r % 2 == 1) {
            1.0
        } else {
            -1.0
        };
        for (i, v) in row.iter().enumerate() {
            out[(r, i)] = sign * v / norm;
        }
    }
    out
}

/// Density matrix in a fixed sector and basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeDensityMatrix {
    sector: SectorLabel,
    elements: DMatrix<Complex64>,
    basis: Basis,
}

/// Deviations measured by [`DickeDensityMatrix::check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatrixDiagnostics {
    pub hermitian_error: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl DickeDensityMatrix {
    /// Validated construction.
    pub fn new(
        sector: SectorLabel,
        elements: DMatrix<Complex64>,
        basis: Basis,
    ) -> Result<Self, DickeError> {
        let d = sector.dimension();
        if elements.nrows() != d || elements.ncols() != d {
            return Err(DickeError::Dimension {
                expected: d,
                got: elements.nrows().max(elements.ncols()),
            });
        }
        let rho = Self {
            sector,
            elements,
            basis,
        };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_parts(
        sector: SectorLabel,
        elements: DMatrix<Complex64>,
        basis: Basis,
    ) -> Self {
        Self {
            sector,
            elements,
            basis,
        }
    }

    pub fn maximally_mixed(sector: SectorLabel) -> Self {
        let d = sector.dimension();
        Self::from_parts(
            sector,
            DMatrix::from_diagonal_element(d, d, Complex64::new(1.0 / d as f64, 0.0)),
            Basis::Lz,
        )
    }

    pub fn sector(&self) -> SectorLabel {
        self.sector
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn check(&self) -> MatrixDiagnostics {
        let rho = &self.elements;
        let hermitian_error = (rho - rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let trace_error = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
        let hermitian_part = (rho + rho.adjoint()).scale(0.5);
        let min_eigenvalue = SymmetricEigen::new(hermitian_part)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        MatrixDiagnostics {
            hermitian_error,
            trace_error,
            min_eigenvalue,
        }
    }

    /// Hermiticity, unit trace and positivity within the module tolerances.
    pub fn validate(&self) -> Result<MatrixDiagnostics, DickeError> {
        if self
            .elements
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(DickeError::NonFinite("matrix element"));
        }
        let diag = self.check();
        if diag.hermitian_error > HERMITIAN_TOL {
            return Err(DickeError::NotHermitian(diag.hermitian_error));
        }
        if diag.trace_error > TRACE_TOL {
            return Err(DickeError::Trace(diag.trace_error));
        }
        if diag.min_eigenvalue < -PSD_TOL {
            return Err(DickeError::NotPositive(diag.min_eigenvalue));
        }
        Ok(diag)
    }

    /// The same state expressed in `basis`.
    pub fn to_basis(&self, basis: Basis) -> Self {
        if basis == self.basis {
            return self.clone();
        }
        let r = rotation_to_x(self.sector);
        let (left, right) = match basis {
            Basis::Lx => (r.clone(), r.transpose()),
            Basis::Lz => (r.transpose(), r),
        };
        let re = &left * self.elements.map(|z| z.re) * &right;
        let im = &left * self.elements.map(|z| z.im) * &right;
        let elements = re.zip_map(&im, Complex64::new);
        Self::from_parts(self.sector, elements, basis)
    }

    /// `|ρ_{mm'}|` grid. The header row is `m` followed by the `m'` values, and
    /// each data row starts with its `m`.
    pub fn magnitude_csv(&self, comments: &[String]) -> String {
        let ms = self.sector.m_values();
        let mut out = String::new();
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push('m');
        for m in &ms {
            out.push(',');
            out.push_str(&m_label(*m));
        }
        out.push('\n');
        for (i, m) in ms.iter().enumerate() {
            out.push_str(&m_label(*m));
            for j in 0..ms.len() {
                out.push(',');
                out.push_str(&format::float(self.elements[(i, j)].norm()));
            }
            out.push('\n');
        }
        out
    }
}

/// `m` as an integer or half-integer literal.
pub fn m_label(m: f64) -> String {
    format!("{m}")
}

/// `Re ⟨ψ|ρ|ψ⟩`, clamped to `[0, 1]`. Both must be in the `L_z` basis.
pub fn fidelity(rho: &DickeDensityMatrix, target: &DickeState) -> Result<f64, DickeError> {
    if rho.sector != target.sector {
        return Err(DickeError::Mismatch(
            "density matrix and target belong to different sectors",
        ));
    }
    if rho.basis != Basis::Lz {
        return Err(DickeError::Mismatch(
            "fidelity requires the density matrix in the L_z basis",
        ));
    }
    let psi = &target.amplitudes;
    let value = psi.dotc(&(&rho.elements * psi)).re;
    Ok(value.clamp(0.0, 1.0))
}

/// `tr ρ² = Σ |ρ_{ij}|²`.
pub fn purity(rho: &DickeDensityMatrix) -> f64 {
    rho.elements.iter().map(|z| z.norm_sqr()).sum()
}

/// `|ρ_{+l,−l}|` in the `L_x` basis.
pub fn coherence_corner(rho: &DickeDensityMatrix) -> Result<f64, DickeError> {
    if rho.basis != Basis::Lx {
        return Err(DickeError::Mismatch(
            "corner coherence requires the L_x basis",
        ));
    }
    let d = rho.sector.dimension();
    Ok(rho.elements[(0, d - 1)].norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    #[test]
    fn sector_rules() {
        assert!(SectorLabel::new(0, 0).is_err());
        assert!(SectorLabel::new(3, 2).is_err());
        assert!(SectorLabel::new(2, 4).is_err());
        let s = SectorLabel::new(5, 3).unwrap();
        assert_eq!(s.dimension(), 4);
        assert_eq!(s.m_values(), vec![1.5, 0.5, -0.5, -1.5]);
        assert!(!s.is_symmetric());
        assert!(coherent_state(s, 0.3, 0.0).is_err());
    }

    #[test]
    fn coherent_state_examples() {
        let s = SectorLabel::symmetric(6).unwrap();
        let up = coherent_state(s, 0.0, 1.0).unwrap();
        assert_eq!(up.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(up.amplitudes().iter().skip(1).all(|c| c.norm() == 0.0));

        let s = SectorLabel::symmetric(2).unwrap();
        let psi = coherent_state(s, PI / 2.0, 0.0).unwrap();
        let expect = [0.5, FRAC_1_SQRT_2, 0.5];
        for (c, e) in psi.amplitudes().iter().zip(expect) {
            assert!((c - Complex64::new(e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn coherent_state_survives_large_n() {
        let s = SectorLabel::symmetric(512).unwrap();
        let psi = coherent_state(s, 1.1, 2.0).unwrap();
        assert!((psi.amplitudes().norm_squared() - 1.0).abs() < 1e-12);
        let down = coherent_state(s, PI, 0.0).unwrap();
        assert!((down.amplitudes()[512].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_l1_and_half() {
        let r = rotation_to_x(SectorLabel::symmetric(2).unwrap());
        let h = FRAC_1_SQRT_2;
        let expect = DMatrix::from_row_slice(3, 3, &[0.5, h, 0.5, -h, 0.0, h, 0.5, -h, 0.5]);
        assert!(max_abs(&(r - expect)) < 1e-15);

        let r = rotation_to_x(SectorLabel::symmetric(1).unwrap());
        assert!(r.iter().all(|v| (v.abs() - h).abs() < 1e-15));
        assert_eq!(
            rotation_to_x(SectorLabel::new(2, 0).unwrap()),
            DMatrix::from_element(1, 1, 1.0)
        );
    }

    #[test]
    fn rotation_matches_matrix_exponential() {
        for n in 1..=40u32 {
            let s = SectorLabel::symmetric(n).unwrap();
            let d = s.dimension();
            // (L+ − L−)/2 = i L_y
            let mut gen = DMatrix::<f64>::zeros(d, d);
            for i in 1..d {
                let m = s.m(i);
                let a = ((s.l() - m) * (s.l() + m + 1.0)).sqrt();
                gen[(i - 1, i)] = 0.5 * a;
                gen[(i, i - 1)] = -0.5 * a;
            }
            let oracle = (gen * (PI / 2.0)).exp();
            let r = rotation_to_x(s);
            assert!(max_abs(&(r - oracle)) < 1e-12, "N={n}");
        }
    }

    #[test]
    fn rotation_is_orthogonal_up_to_l_256() {
        for n in [1u32, 7, 64, 101, 255, 512] {
            let r = rotation_to_x(SectorLabel::symmetric(n).unwrap());
            let d = r.nrows();
            assert!(
                max_abs(&(&r * r.transpose() - DMatrix::identity(d, d))) < 1e-12,
                "N={n}"
            );
        }
    }

    #[test]
    fn rotated_pole_is_binomial() {
        let s = SectorLabel::symmetric(30).unwrap();
        let r = rotation_to_x(s);
        let lnf = ln_factorials(30);
        for i in 0..=30 {
            let expect =
                (0.5 * (lnf[30] - lnf[i] - lnf[30 - i] - 30.0 * std::f64::consts::LN_2)).exp();
            assert!((r[(i, 0)].abs() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn metrics() {
        let s = SectorLabel::symmetric(2).unwrap();
        let psi = coherent_state(s, PI / 2.0, 0.0).unwrap();
        let rho = psi.projector();
        assert!((fidelity(&rho, &psi).unwrap() - 1.0).abs() < 1e-15);
        assert!((purity(&rho) - 1.0).abs() < 1e-15);

        let mixed = DickeDensityMatrix::maximally_mixed(s);
        assert!((fidelity(&mixed, &psi).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((purity(&mixed) - 1.0 / 3.0).abs() < 1e-15);

        let diag = DMatrix::from_diagonal(&rho.elements().diagonal());
        let dephased = DickeDensityMatrix::new(s, diag, Basis::Lz).unwrap();
        assert!((purity(&dephased) - 3.0 / 8.0).abs() < 1e-15);

        assert!(coherence_corner(&rho).is_err());
        let x = rho.to_basis(Basis::Lx);
        assert!(coherence_corner(&x).unwrap() < 1e-15);
        assert!((x.elements()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(fidelity(&x, &psi).is_err());
    }

    #[test]
    fn ghz_x_corner() {
        let s = SectorLabel::symmetric(4).unwrap();
        let r = rotation_to_x(s);
        let d = s.dimension();
        // Build in the L_x basis, then express in L_z.
        let mut ax = DVector::<Complex64>::zeros(d);
        ax[0] = Complex64::from_polar(FRAC_1_SQRT_2, -PI / 4.0);
        ax[d - 1] = Complex64::from_polar(FRAC_1_SQRT_2, PI / 4.0);
        let az = r.transpose().map(|v| Complex64::new(v, 0.0)) * ax;
        let rho = DickeState::new(s, az)
            .unwrap()
            .projector()
            .to_basis(Basis::Lx);
        assert!((coherence_corner(&rho).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let s = SectorLabel::symmetric(1).unwrap();
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let not_h =
            DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.1), c(0.1, 0.1), c(0.5, 0.0)]);
        assert!(matches!(
            DickeDensityMatrix::new(s, not_h, Basis::Lz),
            Err(DickeError::NotHermitian(_))
        ));
        let bad_trace =
            DMatrix::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(matches!(
            DickeDensityMatrix::new(s, bad_trace, Basis::Lz),
            Err(DickeError::Trace(_))
        ));
        let neg =
            DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.9, 0.0), c(0.9, 0.0), c(0.5, 0.0)]);
        assert!(matches!(
            DickeDensityMatrix::new(s, neg, Basis::Lz),
            Err(DickeError::NotPositive(_))
        ));
    }

    #[test]
    fn csv_grid_layout() {
        let s = SectorLabel::symmetric(1).unwrap();
        let rho = DickeDensityMatrix::maximally_mixed(s);
        let csv = rho.magnitude_csv(&["t = 1".into()]);
        assert_eq!(csv, "# t = 1\nm,0.5,-0.5\n0.5,5e-1,0e0\n-0.5,0e0,5e-1\n");
    }
}
