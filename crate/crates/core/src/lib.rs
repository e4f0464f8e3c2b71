//! Exact reduced dynamics of `N` two-level systems collectively and linearly
//! coupled to a bosonic bath through `L_z`.
//!
//! The bath enters only through two kernels of its coupling spectrum: a
//! Lamb-shift kernel `f(t)` that generates one-axis twisting (`L_z²`) and a
//! decoherence kernel `Γ(t)` that damps coherences between `L_z` eigenstates.
//! Starting from a spin coherent state, twisting produces a two-component
//! cat state at the earliest time with `t f(t) = π/2`.
//!
//! * [`bath`]: coupling spectra `G_0(ω)`, `G_T(ω)`.
//! * [`kernels`]: `f(t)`, `Γ(t)`, Markov limits, correlation time.
//! * [`dicke`]: symmetric-sector states, density matrices, `L_x` rotation.
//! * [`evolve`]: reduced dynamics, cat targets, formation time, feasibility.
//! * [`scenario`]: run descriptions and built-in presets.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod dicke;
pub mod evolve;
pub mod format;
pub mod kernels;
pub mod quadrature;
pub mod scenario;

pub use bath::{SpectralDensity, SpectrumError, SpectrumKind, ThermalConvention};
pub use dicke::{
    coherence_corner, coherent_state, fidelity, purity, rotation_to_x, Basis, DickeDensityMatrix,
    DickeError, DickeState, SectorLabel,
};
pub use evolve::{
    assess_mqs, evolve_state, mqs_target, snapshot_series, solve_tau_mqs, EvolutionParams,
    EvolveError, MqsConvention, MqsReport, Snapshot, TauSolution,
};
pub use kernels::{
    correlation_time, f_of_t, gamma_of_t, markov_limits, tabulate_kernels, KernelError,
    KernelTable, MarkovLimits,
};
pub use scenario::{Scenario, ScenarioError, SweepAxis};
