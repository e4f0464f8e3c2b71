//! Independent constructions checked against the library.

use mqs_core::bath::SpectralDensity;
use mqs_core::evolve::evolve_with_kernels;
use mqs_core::kernels::{f_of_t, gamma_of_t};
use mqs_core::{
    coherent_state, evolve_state, rotation_to_x, EvolutionParams, MqsConvention, SectorLabel,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `⊗ (cos(θ/2)|↑⟩ + e^{iφ} sin(θ/2)|↓⟩)` over `2^N` configurations, bit set = down.
fn product_state(n: usize, theta: f64, phi: f64) -> Vec<Complex64> {
    let up = Complex64::new((0.5 * theta).cos(), 0.0);
    let down = Complex64::from_polar((0.5 * theta).sin(), phi);
    let mut psi = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(psi.len() * 2);
        for &a in &psi {
            next.push(a * up);
            next.push(a * down);
        }
        psi = next;
    }
    psi
}

/// Component along the normalized symmetric state with `k` spins down.
fn dicke_projection(psi: &[Complex64], n: usize, k: usize) -> Complex64 {
    let sum: Complex64 = psi
        .iter()
        .enumerate()
        .filter(|(bits, _)| bits.count_ones() as usize == k)
        .map(|(_, a)| *a)
        .sum();
    sum / binomial(n, k).sqrt()
}

#[test]
fn coherent_state_equals_symmetric_projection_of_product_state() {
    let mut rng = StdRng::seed_from_u64(11);
    for n in 1..=10usize {
        for _ in 0..4 {
            let theta = rng.random_range(0.0..std::f64::consts::PI);
            let phi = rng.random_range(-10.0..10.0);
            let psi = product_state(n, theta, phi);
            let state =
                coherent_state(SectorLabel::symmetric(n as u32).unwrap(), theta, phi).unwrap();
            for k in 0..=n {
                let expected = dicke_projection(&psi, n, k);
                let got = state.amplitudes()[k];
                assert!(
                    (got - expected).norm() <= 1e-12,
                    "N={n} k={k}: {got} vs {expected}"
                );
            }
        }
    }
}

#[test]
fn evolution_matches_elementwise_construction() {
    let sd = SpectralDensity::ohmic(0.03, 1.0)
        .unwrap()
        .with_beta(Some(4.0))
        .unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    for n in 1..=4u32 {
        let theta = rng.random_range(0.1..3.0);
        let phi = rng.random_range(0.0..6.0);
        let params =
            EvolutionParams::coherent(sd.clone(), n, theta, phi, MqsConvention::TwistCompatible)
                .unwrap();
        let c = params.initial().amplitudes().clone();
        let l = n as f64 / 2.0;
        for _ in 0..10 {
            let t = 10f64.powf(rng.random_range(-2.0..3.0));
            let f = f_of_t(&sd, t).unwrap();
            let gamma = gamma_of_t(&sd, t).unwrap();
            let rho = evolve_state(&params, t).unwrap();
            for i in 0..=n as usize {
                for j in 0..=n as usize {
                    let (m, mp) = (l - i as f64, l - j as f64);
                    let phase = Complex64::from_polar(1.0, -t * f * (m * m - mp * mp));
                    let expected =
                        c[i] * c[j].conj() * phase * (-t * gamma * (m - mp).powi(2)).exp();
                    let got = rho.elements()[(i, j)];
                    assert!((got - expected).norm() <= 1e-12, "N={n} t={t} ({i},{j})");
                }
            }
        }
    }
}

/// `(L_+ − L_−)/2 = i L_y` and `(L_+ + L_−)/2 = L_x`, indexed by `l − m`.
fn ladder_parts(sector: SectorLabel) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = sector.dimension();
    let l = sector.l();
    let mut raise = DMatrix::zeros(d, d);
    for i in 1..d {
        let m = sector.m(i);
        raise[(i - 1, i)] = ((l - m) * (l + m + 1.0)).sqrt();
    }
    let lower = raise.transpose();
    ((&raise - &lower) * 0.5, (&raise + &lower) * 0.5)
}

#[test]
fn rotation_matches_matrix_exponential() {
    for n in [1u32, 2, 3, 6, 11, 24, 40] {
        let sector = SectorLabel::symmetric(n).unwrap();
        let (i_ly, _) = ladder_parts(sector);
        let expected = (i_ly * std::f64::consts::FRAC_PI_2).exp();
        let r = rotation_to_x(sector);
        let err = (&r - &expected).abs().max();
        assert!(err <= 1e-12, "N={n}: {err}");
    }
}

#[test]
fn rotation_diagonalizes_lx() {
    for n in [1u32, 5, 16, 63, 128] {
        let sector = SectorLabel::symmetric(n).unwrap();
        let (_, lx) = ladder_parts(sector);
        let r = rotation_to_x(sector);
        let diag = &r * lx * r.transpose();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(sector.m_values()));
        let err = (&diag - &expected).abs().max();
        assert!(err <= 1e-10 * sector.l().max(1.0), "N={n}: {err}");
    }
}

#[test]
fn rotation_for_spin_one_has_documented_rows() {
    let r = rotation_to_x(SectorLabel::symmetric(2).unwrap());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let expected = DMatrix::from_row_slice(3, 3, &[0.5, s, 0.5, -s, 0.0, s, 0.5, -s, 0.5]);
    assert!((&r - &expected).abs().max() <= 1e-15);
}

#[test]
fn free_twist_is_exactly_periodic_in_phase() {
    let initial = coherent_state(SectorLabel::symmetric(8).unwrap(), 1.1, 0.4).unwrap();
    let t = 3.0;
    let f = 2.0 * std::f64::consts::PI / t;
    let rho = evolve_with_kernels(&initial, t, f, 0.0);
    let start = initial.projector();
    let err = (rho.elements() - start.elements()).map(|z| z.norm()).max();
    assert!(err <= 1e-12, "{err}");
}
