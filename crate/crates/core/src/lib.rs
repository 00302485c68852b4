//! Reduced dynamics of a two-level atom coupled to a leaky cavity mode, its
//! quantum speed limit and BLP non-Markovianity.
//!
//! The atom, the cavity and a zero-temperature bosonic reservoir share a
//! single excitation. The reservoir is either Lorentzian or Ohmic with a
//! Lorentz–Drude cutoff. Everything follows from the excited-state amplitude
//! `A(t)`, which is available in closed form ([`amplitude`]); [`metrics`]
//! turns it into the non-Markovianity and the speed-limit ratio, [`sweep`]
//! scans couplings and detunings for the onset of information backflow, and
//! [`oracle`] re-derives the closed forms by brute force.

pub mod amplitude;
pub mod cli;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod oracle;
pub mod spectral;
pub mod sweep;

pub use amplitude::{
    amplitude, amplitude_rate, atom_state, excited_population, population_rate,
    sample_trajectory, time_local_coefficients, QubitState, TimeLocal, Trajectory,
};
pub use error::{Error, Result};
pub use metrics::{
    evaluate, non_markovianity, qslt_ratio, relation_residual, trace_distance, MetricsResult,
};
pub use spectral::{
    beta, decay_rate, dressed_frequencies, spectral_density, Branch, Family, SpectralModel,
    SystemParams,
};

pub use sweep::{
    figure_dataset, find_critical, run_sweep, CriticalPoint, FigureId, SweepRow, SweepSpec,
    SweepTarget,
};
