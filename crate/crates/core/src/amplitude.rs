//! Excited-state amplitude of the atom and its reduced density matrix.
//!
//! With the cavity initially empty and the reservoir at zero temperature the
//! atom stays in the span of `|e⟩, |g⟩` with
//!
//! ```text
//! ρ₁₁(t) = |A(t)|² ρ₁₁(0),   ρ₁₀(t) = A(t) ρ₁₀(0),
//! A(t)   = ½ Σⱼ exp(−i ωⱼ t − βⱼ(t)/4).
//! ```
//!
//! Internally `A(t) = e^{−i ω₀ t} B(t)` where the envelope `B` only carries the
//! dressed splitting `±coupling`; populations are computed from `B` and are
//! therefore exactly independent of `omega0` for the Lorentzian family.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_time, Error, Result};
use crate::numerics::roots::sign_changes;
use crate::spectral::{beta_at, decay_rate_at, Branch, SystemParams};

/// Below this `|A|` the time-local coefficients are reported as singular.
pub const SINGULAR_AMPLITUDE: f64 = 1e-9;

/// Time resolution of located sign changes of the population rate.
pub const ROOT_RESOLUTION: f64 = 1e-10;

/// Atomic density matrix in the `{|e⟩, |g⟩}` basis. `rho00 = 1 - rho11` and
/// `rho01 = conj(rho10)` are implied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub rho11: f64,
    pub rho10: Complex64,
}

impl QubitState {
    pub fn new(rho11: f64, rho10: Complex64) -> Result<Self> {
        let s = Self { rho11, rho10 };
        s.validate()?;
        Ok(s)
    }

    pub fn excited() -> Self {
        Self {
            rho11: 1.0,
            rho10: Complex64::new(0.0, 0.0),
        }
    }

    pub fn ground() -> Self {
        Self {
            rho11: 0.0,
            rho10: Complex64::new(0.0, 0.0),
        }
    }

    /// State with Bloch vector `(x, y, z)`, `x² + y² + z² ≤ 1`.
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(0.5 * (1.0 + z), Complex64::new(0.5 * x, -0.5 * y))
    }

    pub fn bloch(&self) -> [f64; 3] {
        [2.0 * self.rho10.re, -2.0 * self.rho10.im, 2.0 * self.rho11 - 1.0]
    }

    pub fn rho00(&self) -> f64 {
        1.0 - self.rho11
    }

    pub fn rho01(&self) -> Complex64 {
        self.rho10.conj()
    }

    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho00()
    }

    /// `det ρ = ρ₁₁ρ₀₀ − |ρ₁₀|²`; non-negative for physical states.
    pub fn determinant(&self) -> f64 {
        self.rho11 * self.rho00() - self.rho10.norm_sqr()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho11.is_finite() && self.rho10.re.is_finite() && self.rho10.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        if !(0.0..=1.0).contains(&self.rho11) {
            return Err(Error::InvalidState(format!(
                "population {} outside [0, 1]",
                self.rho11
            )));
        }
        if self.determinant() < -1e-12 {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (det = {:e})",
                self.determinant()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Envelope {
    value: Complex64,
    rate: Complex64,
}

fn branch_terms(sys: &SystemParams, t: f64) -> [(Complex64, f64); 2] {
    // e^{+iΩt} on the lower branch, e^{−iΩt} on the upper, relative to e^{−iω₀t}.
    let o = sys.coupling;
    [(Branch::Lower, o), (Branch::Upper, -o)].map(|(b, w)| {
        let phase = Complex64::from_polar((-beta_at(sys, b, t) / 4.0).exp(), w * t);
        (phase, decay_rate_at(sys, b, t))
    })
}

fn envelope(sys: &SystemParams, t: f64) -> Envelope {
    let o = sys.coupling;
    let [(p1, g1), (p2, g2)] = branch_terms(sys, t);
    Envelope {
        value: 0.5 * (p1 + p2),
        rate: 0.5 * (Complex64::new(-g1 / 4.0, o) * p1 + Complex64::new(-g2 / 4.0, -o) * p2),
    }
}

/// Probability amplitude `A(t)` of the excited state.
pub fn amplitude(sys: &SystemParams, t: f64) -> Result<Complex64> {
    check_time(t)?;
    let carrier = Complex64::from_polar(1.0, -sys.omega0 * t);
    Ok(carrier * envelope(sys, t).value)
}

/// Analytic time derivative `Ȧ(t)`.
pub fn amplitude_rate(sys: &SystemParams, t: f64) -> Result<Complex64> {
    check_time(t)?;
    let (w1, w2) = sys.dressed_frequencies();
    let total = [(Branch::Lower, w1), (Branch::Upper, w2)]
        .into_iter()
        .map(|(b, w)| {
            let g = decay_rate_at(sys, b, t);
            let e = Complex64::from_polar((-beta_at(sys, b, t) / 4.0).exp(), -w * t);
            Complex64::new(-g / 4.0, -w) * e
        })
        .sum::<Complex64>();
    Ok(0.5 * total)
}

/// Excited population `|A(t)|²`.
pub fn excited_population(sys: &SystemParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(population_at(sys, t))
}

/// `d|A(t)|²/dt`, analytic.
pub fn population_rate(sys: &SystemParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(population_rate_at(sys, t))
}

pub(crate) fn population_at(sys: &SystemParams, t: f64) -> f64 {
    envelope(sys, t).value.norm_sqr()
}

pub(crate) fn population_rate_at(sys: &SystemParams, t: f64) -> f64 {
    let e = envelope(sys, t);
    2.0 * (e.rate * e.value.conj()).re
}

/// Evolves an initial atomic state to time `t`.
pub fn atom_state(sys: &SystemParams, rho0: &QubitState, t: f64) -> Result<QubitState> {
    rho0.validate()?;
    let a = amplitude(sys, t)?;
    Ok(QubitState {
        rho11: a.norm_sqr() * rho0.rho11,
        rho10: a * rho0.rho10,
    })
}

/// Lamb shift `S(t)` and decoherence rate `Γ(t)` of the time-local generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TimeLocal {
    Regular { shift: f64, rate: f64 },
    /// `A(t)` is (numerically) zero; both coefficients diverge here.
    Singular { abs_amplitude: f64 },
}

impl TimeLocal {
    pub fn rate(&self) -> Option<f64> {
        match *self {
            TimeLocal::Regular { rate, .. } => Some(rate),
            TimeLocal::Singular { .. } => None,
        }
    }

    pub fn shift(&self) -> Option<f64> {
        match *self {
            TimeLocal::Regular { shift, .. } => Some(shift),
            TimeLocal::Singular { .. } => None,
        }
    }
}

/// `S = −2 Im[Ȧ/A]`, `Γ = −2 Re[Ȧ/A]`.
pub fn time_local_coefficients(sys: &SystemParams, t: f64) -> Result<TimeLocal> {
    check_time(t)?;
    Ok(time_local_at(sys, t))
}

pub(crate) fn time_local_at(sys: &SystemParams, t: f64) -> TimeLocal {
    let e = envelope(sys, t);
    let abs_amplitude = e.value.norm();
    if abs_amplitude < SINGULAR_AMPLITUDE {
        return TimeLocal::Singular { abs_amplitude };
    }
    // Ȧ/A = −iω₀ + Ḃ/B
    let r = e.rate / e.value;
    TimeLocal::Regular {
        shift: 2.0 * sys.omega0 - 2.0 * r.im,
        rate: -2.0 * r.re,
    }
}

/// Number of grid cells used to scan `[0, tau]` for sign changes of the
/// population rate.
pub(crate) fn scan_cells(sys: &SystemParams, tau: f64) -> usize {
    // ≥ 16 samples per radian of the fastest frequency, never fewer than 1024
    let by_freq = (16.0 * tau * sys.max_frequency()).ceil();
    (by_freq as usize).clamp(1024, 4_000_000)
}

/// Interior instants in `(0, tau)` where `d|A|²/dt` changes sign.
pub fn population_turning_points(sys: &SystemParams, tau: f64) -> Result<Vec<f64>> {
    check_time(tau)?;
    if tau == 0.0 {
        return Ok(Vec::new());
    }
    let cells = scan_cells(sys, tau);
    let mut roots = sign_changes(
        |t| population_rate_at(sys, t),
        0.0,
        tau,
        cells,
        ROOT_RESOLUTION,
    );
    roots.retain(|&r| r > ROOT_RESOLUTION && r < tau - ROOT_RESOLUTION);
    Ok(roots)
}

/// Sampled dynamics on `[0, tau]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub amp: Vec<Complex64>,
    pub pop: Vec<f64>,
    pub pop_rate: Vec<f64>,
    /// `Γ(t)`; `None` where `A` vanishes.
    pub gamma_t: Vec<Option<f64>>,
    /// `S(t)`; `None` where `A` vanishes.
    pub shift_t: Vec<Option<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Samples the dynamics on a uniform grid of `n` points over `[0, tau]`,
/// with the turning points of `|A|²` inserted.
pub fn sample_trajectory(sys: &SystemParams, tau: f64, n: usize) -> Result<Trajectory> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("must be finite and > 0, got {tau}"),
        });
    }
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("grid needs at least 2 points, got {n}"),
        });
    }
    let mut times: Vec<f64> = (0..n)
        .map(|k| {
            if k == n - 1 {
                tau
            } else {
                tau * k as f64 / (n - 1) as f64
            }
        })
        .collect();
    times.extend(population_turning_points(sys, tau)?);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < ROOT_RESOLUTION);

    let carrier = |t: f64| Complex64::from_polar(1.0, -sys.omega0 * t);
    let mut traj = Trajectory {
        times: Vec::with_capacity(times.len()),
        amp: Vec::with_capacity(times.len()),
        pop: Vec::with_capacity(times.len()),
        pop_rate: Vec::with_capacity(times.len()),
        gamma_t: Vec::with_capacity(times.len()),
        shift_t: Vec::with_capacity(times.len()),
    };
    for t in times {
        let e = envelope(sys, t);
        let tl = time_local_at(sys, t);
        traj.times.push(t);
        traj.amp.push(carrier(t) * e.value);
        traj.pop.push(e.value.norm_sqr());
        traj.pop_rate.push(2.0 * (e.rate * e.value.conj()).re);
        traj.gamma_t.push(tl.rate());
        traj.shift_t.push(tl.shift());
    }
    Ok(traj)
}
