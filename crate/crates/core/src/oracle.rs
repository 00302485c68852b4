//! Brute-force validators for the closed forms.
//!
//! * [`decay_rate_bruteforce`] evaluates the decay rate straight from the
//!   spectral density, `γⱼ(t) = 2 Re ∫₀ᵗ dτ ∫ dω′ e^{i(ωⱼ−ω′)τ} J(ω′)`.
//! * [`evolve_time_local`] integrates the time-local master equation for the
//!   atom with coefficients `S(t)`, `Γ(t)`. It is singular wherever `A(t)`
//!   vanishes.
//! * [`evolve_dressed`] integrates the three-level master equation of the
//!   atom–cavity system in the dressed basis `{|α₁,+⟩, |α₁,−⟩, |α₀⟩}` and traces
//!   out the cavity. It is regular everywhere, including through zeros of `A`.
//! * [`pair_search`] samples pairs of initial states and evaluates the BLP
//!   functional of their trace distance.

use std::cell::Cell;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitude::{
    atom_state, population_at, population_rate_at, population_turning_points, scan_cells, time_local_at, QubitState,
    TimeLocal, ROOT_RESOLUTION,
};
use crate::error::{check_time, Error, Result};
use crate::metrics::{non_markovianity, trace_distance};
use crate::numerics::ode::{self, OdeError, OdeOptions, StepStats};
use crate::numerics::quad::{integrate_pieces, Tolerance};
use crate::numerics::roots::sign_changes;
use crate::spectral::{beta_at, decay_rate_at, spectral_density, Branch, SpectralModel, SystemParams};

type C64 = Complex64;
type Mat<const N: usize> = [[C64; N]; N];

const ZERO: C64 = C64::new(0.0, 0.0);

/// `|A|` below which the time-local generator is considered singular.
pub const NEAR_SINGULAR_AMPLITUDE: f64 = 1e-6;

/// Local error tolerance of both dynamics oracles.
pub const ODE_TOLERANCE: f64 = 1e-10;

// ---------------------------------------------------------------------------
// decay rates from the spectral density
// ---------------------------------------------------------------------------

/// Frequency window `[lo, hi]` outside of which the spectral weight is
/// neglected.
fn frequency_window(sys: &SystemParams, branch: Branch, t: f64) -> (f64, f64, f64) {
    let wj = branch.frequency(sys);
    match sys.model {
        SpectralModel::Lorentzian { lambda, delta, .. } => {
            let center = sys.omega0 - delta;
            let half = (2000.0 * lambda)
                .max(2000.0 / t)
                .max(20.0 * (wj - center).abs());
            (center, center - half, center + half)
        }
        SpectralModel::Ohmic { omega_c } => {
            let half = (2e4 * omega_c).max(2000.0 / t).max(20.0 * wj.abs());
            (0.0, -half, half)
        }
    }
}

/// Decay rate of branch `j` by direct numerical integration over the
/// spectral density.
///
/// The time integral of `2 cos((ωⱼ − ω′)τ)` is elementary and is carried out
/// exactly; the frequency integral runs over the whole real axis (the Ohmic
/// density is odd in `ω′`), truncated to a window wide enough that the
/// neglected tails are below `1e-8` relative for the tested parameter ranges.
pub fn decay_rate_bruteforce(sys: &SystemParams, branch: Branch, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let wj = branch.frequency(sys);
    let kernel = |w: f64| {
        let d = wj - w;
        if (d * t).abs() < 1e-8 {
            2.0 * t
        } else {
            2.0 * (d * t).sin() / d
        }
    };
    let integrand = |w: f64| spectral_density(sys, w) * kernel(w);

    let (center, lo, hi) = frequency_window(sys, branch, t);
    // Seed the adaptive scheme with the kernel oscillation scale, refined
    // geometrically around the spectral peak and the branch frequency.
    let mut breaks = vec![lo, hi, center, wj];
    let width = match sys.model {
        SpectralModel::Lorentzian { lambda, .. } => lambda,
        SpectralModel::Ohmic { omega_c } => omega_c,
    };
    for k in -3..=4 {
        let s = width * 10f64.powi(k);
        for p in [center, wj] {
            breaks.push(p - s);
            breaks.push(p + s);
        }
    }
    let period = PI / t;
    let pieces = ((hi - lo) / period).ceil().min(400_000.0) as usize;
    let step = (hi - lo) / pieces as f64;
    breaks.extend((1..pieces).map(|k| lo + step * k as f64));
    breaks.retain(|&x| x >= lo && x <= hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let tol = Tolerance::new(1e-14, 1e-10).with_max_subdivisions(2_000_000);
    Ok(integrate_pieces(integrand, &breaks, tol)?.value)
}

// ---------------------------------------------------------------------------
// small dense matrices
// ---------------------------------------------------------------------------

fn mat_mul<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    let mut c = [[ZERO; N]; N];
    for i in 0..N {
        for k in 0..N {
            if a[i][k] == ZERO {
                continue;
            }
            for j in 0..N {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn dagger<const N: usize>(a: &Mat<N>) -> Mat<N> {
    let mut d = [[ZERO; N]; N];
    for i in 0..N {
        for j in 0..N {
            d[i][j] = a[j][i].conj();
        }
    }
    d
}

fn axpy<const N: usize>(y: &mut Mat<N>, s: C64, x: &Mat<N>) {
    for i in 0..N {
        for j in 0..N {
            y[i][j] += s * x[i][j];
        }
    }
}

fn trace<const N: usize>(a: &Mat<N>) -> C64 {
    (0..N).map(|i| a[i][i]).sum()
}

/// `L ρ L† − ½{L†L, ρ}`.
fn dissipator<const N: usize>(jump: &Mat<N>, rho: &Mat<N>) -> Mat<N> {
    let jd = dagger(jump);
    let jdj = mat_mul(&jd, jump);
    let mut out = mat_mul(&mat_mul(jump, rho), &jd);
    axpy(&mut out, C64::new(-0.5, 0.0), &mat_mul(&jdj, rho));
    axpy(&mut out, C64::new(-0.5, 0.0), &mat_mul(rho, &jdj));
    out
}

/// `−i[H, ρ]`.
fn hamiltonian_part<const N: usize>(h: &Mat<N>, rho: &Mat<N>) -> Mat<N> {
    let mut out = mat_mul(h, rho);
    axpy(&mut out, C64::new(-1.0, 0.0), &mat_mul(rho, h));
    for row in out.iter_mut() {
        for x in row.iter_mut() {
            *x *= C64::new(0.0, -1.0);
        }
    }
    out
}

// Hermitian matrices are carried as N real diagonal entries followed by the
// real and imaginary parts of the strict upper triangle, so Hermiticity holds
// exactly at every stage.
fn pack<const N: usize>(m: &Mat<N>, out: &mut [f64]) {
    let mut k = 0;
    for i in 0..N {
        out[k] = m[i][i].re;
        k += 1;
    }
    for i in 0..N {
        for j in i + 1..N {
            out[k] = m[i][j].re;
            out[k + 1] = m[i][j].im;
            k += 2;
        }
    }
}

fn unpack<const N: usize>(v: &[f64]) -> Mat<N> {
    let mut m = [[ZERO; N]; N];
    let mut k = 0;
    for i in 0..N {
        m[i][i] = C64::new(v[k], 0.0);
        k += 1;
    }
    for i in 0..N {
        for j in i + 1..N {
            m[i][j] = C64::new(v[k], v[k + 1]);
            m[j][i] = m[i][j].conj();
            k += 2;
        }
    }
    m
}

const fn packed_len(n: usize) -> usize {
    n * n
}

// ---------------------------------------------------------------------------
// dynamics oracles
// ---------------------------------------------------------------------------

/// Three-level density matrix in the dressed basis `{|α₁,+⟩, |α₁,−⟩, |α₀⟩}`.
pub type DressedDensity = Mat<3>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    pub max_error_estimate: f64,
}

impl From<StepStats> for OdeStats {
    fn from(s: StepStats) -> Self {
        Self {
            accepted: s.accepted,
            rejected: s.rejected,
            rhs_evaluations: s.rhs_evaluations,
            max_error_estimate: s.max_error_estimate,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OdeResult {
    pub times: Vec<f64>,
    /// Atomic state at each accepted step.
    pub states: Vec<QubitState>,
    /// Full atom–cavity state, only for the dressed-basis oracle.
    pub dressed: Option<Vec<DressedDensity>>,
    pub step_stats: OdeStats,
    /// Largest `|tr ρ − 1|` over accepted steps.
    pub max_trace_deviation: f64,
}

impl OdeResult {
    pub fn final_state(&self) -> &QubitState {
        self.states.last().expect("at least the initial state")
    }

    /// Largest component-wise gap to the closed-form evolution of `rho0`.
    pub fn sup_gap(&self, sys: &SystemParams, rho0: &QubitState) -> Result<f64> {
        let mut gap: f64 = 0.0;
        for (t, s) in self.times.iter().zip(&self.states) {
            let exact = atom_state(sys, rho0, *t)?;
            gap = gap
                .max((s.rho11 - exact.rho11).abs())
                .max((s.rho10 - exact.rho10).norm());
        }
        Ok(gap)
    }
}

fn ode_options() -> OdeOptions {
    OdeOptions {
        rtol: ODE_TOLERANCE,
        atol: ODE_TOLERANCE,
        ..OdeOptions::default()
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("must be finite and > 0, got {tau}"),
        })
    }
}

fn qubit_matrix(s: &QubitState) -> Mat<2> {
    // basis order (|e⟩, |g⟩)
    [
        [C64::new(s.rho11, 0.0), s.rho10],
        [s.rho10.conj(), C64::new(s.rho00(), 0.0)],
    ]
}

/// Smallest `|A|` on `[0, tau]` and where it occurs. Minima of `|A|²` are
/// among its turning points, so these and the end points suffice.
pub fn min_abs_amplitude(sys: &SystemParams, tau: f64) -> Result<(f64, f64)> {
    let mut candidates = population_turning_points(sys, tau)?;
    candidates.push(tau);
    Ok(candidates
        .into_iter()
        .map(|t| (t, population_at(sys, t).sqrt()))
        .fold((0.0, 1.0), |m, c| if c.1 < m.1 { c } else { m }))
}

/// Integrates `dρ/dt = −(i/2)S[σ₊σ₋, ρ] + Γ(σ₋ρσ₊ − ½{σ₊σ₋, ρ})`.
///
/// Fails with [`Error::CoefficientSingularity`] if `|A| < 1e-6` anywhere on
/// `[0, tau]`.
pub fn evolve_time_local(sys: &SystemParams, rho0: &QubitState, tau: f64) -> Result<OdeResult> {
    rho0.validate()?;
    check_tau(tau)?;
    let (t_min, a_min) = min_abs_amplitude(sys, tau)?;
    if a_min < NEAR_SINGULAR_AMPLITUDE {
        return Err(Error::CoefficientSingularity {
            t: t_min,
            abs_amplitude: a_min,
        });
    }

    let excited_proj: Mat<2> = [[C64::new(1.0, 0.0), ZERO], [ZERO, ZERO]];
    let lowering: Mat<2> = [[ZERO, ZERO], [C64::new(1.0, 0.0), ZERO]];
    let singular = Cell::new(None::<(f64, f64)>);

    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> std::result::Result<(), String> {
        let (shift, rate) = match time_local_at(sys, t) {
            TimeLocal::Regular { shift, rate } => {
                let abs_a = population_at(sys, t).sqrt();
                if abs_a < NEAR_SINGULAR_AMPLITUDE {
                    singular.set(Some((t, abs_a)));
                    return Err("near-singular".into());
                }
                (shift, rate)
            }
            TimeLocal::Singular { abs_amplitude } => {
                singular.set(Some((t, abs_amplitude)));
                return Err("singular".into());
            }
        };
        let rho = unpack::<2>(y);
        let mut d = [[ZERO; 2]; 2];
        axpy(&mut d, C64::new(0.5 * shift, 0.0), &hamiltonian_part(&excited_proj, &rho));
        axpy(&mut d, C64::new(rate, 0.0), &dissipator(&lowering, &rho));
        pack(&d, dy);
        Ok(())
    };

    let mut y0 = [0.0; packed_len(2)];
    pack(&qubit_matrix(rho0), &mut y0);
    // Γ grows like 1/|A|² near small amplitudes, so absolute errors in ρ₁₁
    // are amplified on revival; control the error relative to the state.
    let opts = OdeOptions {
        atol: 1e-16,
        ..ode_options()
    };
    let sol = match ode::integrate(rhs, 0.0, tau, &y0, opts) {
        Ok(sol) => sol,
        Err(OdeError::RhsFailure { .. }) => {
            let (t, abs_amplitude) = singular.get().unwrap_or((f64::NAN, f64::NAN));
            return Err(Error::CoefficientSingularity { t, abs_amplitude });
        }
        Err(e) => return Err(e.into()),
    };

    let mut states = Vec::with_capacity(sol.states.len());
    let mut max_trace_deviation: f64 = 0.0;
    for y in &sol.states {
        let m = unpack::<2>(y);
        max_trace_deviation = max_trace_deviation.max((trace(&m).re - 1.0).abs());
        states.push(QubitState {
            rho11: m[0][0].re,
            rho10: m[0][1],
        });
    }
    Ok(OdeResult {
        times: sol.times,
        states,
        dressed: None,
        step_stats: sol.stats.into(),
        max_trace_deviation,
    })
}

/// Columns are the bare states `|0,e⟩, |1,g⟩, |0,g⟩` expressed in the dressed
/// basis `{|α₁,+⟩, |α₁,−⟩, |α₀⟩}`, with `|α₁,±⟩ = (|1,g⟩ ± |0,e⟩)/√2`.
fn bare_to_dressed() -> Mat<3> {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    [
        [s, s, ZERO],
        [-s, s, ZERO],
        [ZERO, ZERO, C64::new(1.0, 0.0)],
    ]
}

fn atomic_reduction(dressed: &Mat<3>) -> QubitState {
    let u = bare_to_dressed();
    let bare = mat_mul(&mat_mul(&dagger(&u), dressed), &u);
    // bare order |0,e⟩, |1,g⟩, |0,g⟩; the cavity trace pairs |0,e⟩ with |0,g⟩
    QubitState {
        rho11: bare[0][0].re,
        rho10: bare[0][2],
    }
}

/// Dressed-basis oracle started from `|0,e⟩` (atom excited, cavity empty).
pub fn evolve_dressed(sys: &SystemParams, tau: f64) -> Result<OdeResult> {
    evolve_dressed_from(sys, &QubitState::excited(), tau)
}

/// Dressed-basis oracle started from `rho0 ⊗ |0⟩⟨0|`.
///
/// Dissipators carry the prefactors `γⱼ(t)/2`, with `γⱼ` taken from the
/// closed-form rates.
pub fn evolve_dressed_from(sys: &SystemParams, rho0: &QubitState, tau: f64) -> Result<OdeResult> {
    rho0.validate()?;
    check_tau(tau)?;

    let (w1, w2) = sys.dressed_frequencies();
    let h: Mat<3> = [
        [C64::new(w2, 0.0), ZERO, ZERO],
        [ZERO, C64::new(w1, 0.0), ZERO],
        [ZERO, ZERO, ZERO],
    ];
    let one = C64::new(1.0, 0.0);
    // b₁⁻ = |α₀⟩⟨α₁,−|,  b₂⁻ = |α₀⟩⟨α₁,+|
    let mut b1: Mat<3> = [[ZERO; 3]; 3];
    b1[2][1] = one;
    let mut b2: Mat<3> = [[ZERO; 3]; 3];
    b2[2][0] = one;

    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> std::result::Result<(), String> {
        let rho = unpack::<3>(y);
        let g1 = decay_rate_at(sys, Branch::Lower, t);
        let g2 = decay_rate_at(sys, Branch::Upper, t);
        let mut d = hamiltonian_part(&h, &rho);
        axpy(&mut d, C64::new(0.5 * g1, 0.0), &dissipator(&b1, &rho));
        axpy(&mut d, C64::new(0.5 * g2, 0.0), &dissipator(&b2, &rho));
        pack(&d, dy);
        Ok(())
    };

    // atom ⊗ vacuum in the bare order |0,e⟩, |1,g⟩, |0,g⟩
    let mut bare = [[ZERO; 3]; 3];
    bare[0][0] = C64::new(rho0.rho11, 0.0);
    bare[0][2] = rho0.rho10;
    bare[2][0] = rho0.rho10.conj();
    bare[2][2] = C64::new(rho0.rho00(), 0.0);
    let u = bare_to_dressed();
    let start = mat_mul(&mat_mul(&u, &bare), &dagger(&u));

    let mut y0 = [0.0; packed_len(3)];
    pack(&start, &mut y0);
    let sol = ode::integrate(rhs, 0.0, tau, &y0, ode_options())?;

    let mut states = Vec::with_capacity(sol.states.len());
    let mut dressed = Vec::with_capacity(sol.states.len());
    let mut max_trace_deviation: f64 = 0.0;
    for y in &sol.states {
        let m = unpack::<3>(y);
        max_trace_deviation = max_trace_deviation.max((trace(&m).re - 1.0).abs());
        states.push(atomic_reduction(&m));
        dressed.push(m);
    }
    Ok(OdeResult {
        times: sol.times,
        states,
        dressed: Some(dressed),
        step_stats: sol.stats.into(),
        max_trace_deviation,
    })
}

/// Amplitude-decay exponents `kⱼ` fitted from the dressed-basis oracle,
/// assuming `ϱⱼⱼ(τ) = ½ exp(−2 kⱼ βⱼ(τ))` for the initially excited atom.
/// The closed form corresponds to `kⱼ = 1/4`.
pub fn dressed_decay_exponents(sys: &SystemParams, tau: f64) -> Result<[f64; 2]> {
    let res = evolve_dressed(sys, tau)?;
    let last = res
        .dressed
        .as_ref()
        .and_then(|d| d.last())
        .expect("dressed trajectory is recorded");
    // populations of |α₁,−⟩ (index 1) and |α₁,+⟩ (index 0)
    let fit = |pop: f64, b: f64| -(2.0 * pop).ln() / (2.0 * b);
    Ok([
        fit(last[1][1].re, beta_at(sys, Branch::Lower, tau)),
        fit(last[0][0].re, beta_at(sys, Branch::Upper, tau)),
    ])
}

// ---------------------------------------------------------------------------
// optimal pair search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSearch {
    /// Largest BLP functional among the sampled pairs.
    pub best_n: f64,
    pub best_pair: (QubitState, QubitState),
    /// BLP functional of `(|e⟩⟨e|, |g⟩⟨g|)` evaluated the same way.
    pub reference_n: f64,
    /// Closed-form non-Markovianity.
    pub closed_form_n: f64,
    pub samples: usize,
}

impl PairSearch {
    /// No sampled pair exceeds the closed-form value by more than `1e-8`.
    pub fn bound_holds(&self) -> bool {
        self.best_n <= self.closed_form_n + 1e-8
    }

    /// `(|e⟩⟨e|, |g⟩⟨g|)` is at least as good as every sampled pair.
    pub fn reference_attains_max(&self) -> bool {
        self.reference_n + 1e-10 >= self.best_n
    }
}

fn random_pure(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

fn pure_state(b: [f64; 3]) -> QubitState {
    QubitState {
        rho11: 0.5 * (1.0 + b[2]),
        rho10: C64::new(0.5 * b[0], -0.5 * b[1]),
    }
}

/// Total increase of the trace distance between the evolved pair on
/// `[0, tau]`.
///
/// With `u = |A|²`, `D(t)² = u² Δp² + u |Δc|²` where `Δp`, `Δc` are the
/// initial population and coherence differences. `dD/dt` is evaluated
/// analytically and its sign changes delimit the monotone pieces of `D`.
pub fn blp_functional(sys: &SystemParams, a: &QubitState, b: &QubitState, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let dp2 = (a.rho11 - b.rho11).powi(2);
    let dc2 = (a.rho10 - b.rho10).norm_sqr();
    if dp2 + dc2 == 0.0 {
        return Ok(0.0);
    }
    let distance = |t: f64| {
        let u = population_at(sys, t);
        (u * u * dp2 + u * dc2).sqrt()
    };
    let distance_rate = |t: f64| {
        let u = population_at(sys, t);
        let d = (u * u * dp2 + u * dc2).sqrt();
        let du = population_rate_at(sys, t);
        if d == 0.0 {
            // D ~ sqrt(u) near a zero of u; only the sign matters here
            du.signum()
        } else {
            du * (2.0 * u * dp2 + dc2) / (2.0 * d)
        }
    };
    let mut cuts = vec![0.0];
    cuts.extend(
        sign_changes(distance_rate, 0.0, tau, scan_cells(sys, tau), ROOT_RESOLUTION)
            .into_iter()
            .filter(|&r| r > ROOT_RESOLUTION && r < tau - ROOT_RESOLUTION),
    );
    cuts.push(tau);
    Ok(cuts
        .windows(2)
        .map(|w| (distance(w[1]) - distance(w[0])).max(0.0))
        .sum())
}

/// Samples `samples` pairs of pure initial states (alternating antipodal and
/// independent pairs) and returns the best BLP functional found.
///
/// Pair `k` draws from its own generator seeded by `(seed, k)`, so the result
/// does not depend on how the work is scheduled.
pub fn pair_search(sys: &SystemParams, tau: f64, samples: usize, seed: u64) -> Result<PairSearch> {
    if samples < 100 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: format!("need at least 100 samples, got {samples}"),
        });
    }
    check_tau(tau)?;

    let evaluated: Vec<(f64, [f64; 6])> = (0..samples)
        .into_par_iter()
        .map(|k| -> Result<(f64, [f64; 6])> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let u = random_pure(&mut rng);
            let v = if k % 2 == 0 {
                [-u[0], -u[1], -u[2]]
            } else {
                random_pure(&mut rng)
            };
            let n = blp_functional(sys, &pure_state(u), &pure_state(v), tau)?;
            Ok((n, [u[0], u[1], u[2], v[0], v[1], v[2]]))
        })
        .collect::<Result<_>>()?;

    let (best_n, code) = evaluated
        .into_iter()
        .reduce(|x, y| match x.0.total_cmp(&y.0) {
            std::cmp::Ordering::Less => y,
            std::cmp::Ordering::Greater => x,
            std::cmp::Ordering::Equal => {
                if y.1.iter().zip(&x.1).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne())
                    == Some(std::cmp::Ordering::Less)
                {
                    y
                } else {
                    x
                }
            }
        })
        .expect("samples > 0");

    let e = QubitState::excited();
    let g = QubitState::ground();
    Ok(PairSearch {
        best_n,
        best_pair: (
            pure_state([code[0], code[1], code[2]]),
            pure_state([code[3], code[4], code[5]]),
        ),
        reference_n: blp_functional(sys, &e, &g, tau)?,
        closed_form_n: non_markovianity(sys, tau)?,
        samples,
    })
}

/// Trace distance of the evolved pair `(|e⟩⟨e|, |g⟩⟨g|)` at time `t`.
pub fn reference_pair_distance(sys: &SystemParams, t: f64) -> Result<f64> {
    Ok(trace_distance(
        &atom_state(sys, &QubitState::excited(), t)?,
        &atom_state(sys, &QubitState::ground(), t)?,
    ))
}

// ---------------------------------------------------------------------------
// default battery
// ---------------------------------------------------------------------------

/// Outcome of one family of oracle comparisons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub cases: usize,
    pub max_error: f64,
    pub threshold: f64,
    /// First failure that prevented a comparison, if any.
    pub failure: Option<String>,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.max_error < self.threshold
    }
}

fn check<I, F>(name: &str, threshold: f64, cases: Vec<I>, f: F) -> OracleCheck
where
    I: Sync,
    F: Fn(&I) -> Result<f64> + Sync,
{
    let results: Vec<Result<f64>> = cases.par_iter().map(&f).collect();
    let mut max_error: f64 = 0.0;
    let mut failure = None;
    for r in results {
        match r {
            Ok(e) if e.is_nan() => failure = failure.or(Some("nan".to_string())),
            Ok(e) => max_error = max_error.max(e),
            Err(e) => failure = failure.or(Some(e.reason().to_string())),
        }
    }
    OracleCheck {
        name: name.to_string(),
        cases: cases.len(),
        max_error,
        threshold,
        failure,
    }
}

pub fn battery_lorentzian() -> Vec<SystemParams> {
    [
        (5.0, 0.0, 0.5),
        (1.0, 0.6, 0.6),
        (0.5, 2.0, 1.5),
        (0.1, -1.0, 3.0),
        (0.01, 0.0, 2.0),
    ]
    .iter()
    .map(|&(l, d, o)| SystemParams::lorentzian(l, d, o).expect("valid"))
    .collect()
}

pub fn battery_ohmic() -> Vec<SystemParams> {
    [(10.0, 0.3), (2.0, 0.5), (1.0, 0.0), (0.3, 0.2), (0.1, 0.5)]
        .iter()
        .map(|&(wc, o)| SystemParams::ohmic(wc, o).expect("valid"))
        .collect()
}

pub const BATTERY_TIMES: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];

fn rate_cases(systems: Vec<SystemParams>) -> Vec<(SystemParams, Branch, f64)> {
    let mut cases = Vec::new();
    for (i, sys) in systems.into_iter().enumerate() {
        for (k, &t) in BATTERY_TIMES.iter().enumerate() {
            let branch = if (i + k) % 2 == 0 { Branch::Lower } else { Branch::Upper };
            cases.push((sys, branch, t));
        }
    }
    cases
}

fn rate_error(&(sys, branch, t): &(SystemParams, Branch, f64)) -> Result<f64> {
    let exact = decay_rate_at(&sys, branch, t);
    Ok((decay_rate_bruteforce(&sys, branch, t)? - exact).abs() / exact.abs())
}

fn beta_error(&(sys, branch, t): &(SystemParams, Branch, f64)) -> Result<f64> {
    let n = (16.0 * t * sys.max_frequency()).ceil().max(8.0) as usize;
    let breaks: Vec<f64> = (0..=n).map(|k| t * k as f64 / n as f64).collect();
    let q = integrate_pieces(|s| decay_rate_at(&sys, branch, s), &breaks, Tolerance::new(1e-15, 1e-12))?;
    let b = beta_at(&sys, branch, t);
    Ok((q.value - b).abs() / b.abs())
}

/// Parameter sets for the dynamics oracles. The first three Lorentzian sets
/// and the first Ohmic set have zeros of `A` inside `[0, tau]`.
pub fn dynamics_cases() -> Vec<(SystemParams, QubitState, f64)> {
    let lor = |l, d, o| SystemParams::lorentzian(l, d, o).expect("valid");
    let ohm = |wc, o| SystemParams::ohmic(wc, o).expect("valid");
    let e = QubitState::excited();
    let plus = QubitState::from_bloch(1.0, 0.0, 0.0).expect("valid");
    let mixed = QubitState::from_bloch(0.3, -0.4, 0.2).expect("valid");
    vec![
        (lor(5.0, 0.0, 2.0), e, 1.0),
        (lor(0.01, 0.0, 3.0), plus, 1.0),
        (lor(0.5, 0.0, 1.0), mixed, 3.0),
        (lor(1.0, 0.6, 0.6), e, 2.0),
        (lor(0.3, 5.0, 0.5), mixed, 2.0),
        (ohm(0.1, 0.5), e, 8.73),
        (ohm(10.0, 0.3), plus, 1.0),
        (ohm(2.0, 0.6), mixed, 5.0),
        (ohm(0.3, 0.1), e, 8.73),
    ]
}


/// Runs every oracle comparison on the built-in parameter sets.
pub fn default_battery() -> Vec<OracleCheck> {
    let dyn_cases = dynamics_cases();
    let regular: Vec<_> = dyn_cases
        .iter()
        .copied()
        .filter(|(sys, _, tau)| min_abs_amplitude(sys, *tau).map_or(false, |m| m.1 > 1e-3))
        .collect();
    let mut all_rates = rate_cases(battery_lorentzian());
    all_rates.extend(rate_cases(battery_ohmic()));

    vec![
        check("rate-lorentzian", 1e-5, rate_cases(battery_lorentzian()), rate_error),
        check("rate-ohmic", 1e-5, rate_cases(battery_ohmic()), rate_error),
        check("beta-quadrature", 1e-6, all_rates, beta_error),
        check("dressed-vs-closed", 1e-6, dyn_cases.clone(), |(sys, rho0, tau)| {
            evolve_dressed_from(sys, rho0, *tau)?.sup_gap(sys, rho0)
        }),
        check("time-local-vs-closed", 1e-6, regular, |(sys, rho0, tau)| {
            evolve_time_local(sys, rho0, *tau)?.sup_gap(sys, rho0)
        }),
        check("dressed-trace", 1e-9, dyn_cases.clone(), |(sys, rho0, tau)| {
            Ok(evolve_dressed_from(sys, rho0, *tau)?.max_trace_deviation)
        }),
        check("dressed-exponent", 1e-6, dyn_cases, |(sys, _, tau)| {
            let k = dressed_decay_exponents(sys, *tau)?;
            Ok(k.iter()
                .filter(|x| x.is_finite())
                .map(|x| (x - 0.25).abs())
                .fold(0.0, f64::max))
        }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::decay_rate;

    fn lorentzian(lambda: f64, delta: f64, coupling: f64) -> SystemParams {
        SystemParams::lorentzian(lambda, delta, coupling).unwrap()
    }

    #[test]
    fn bruteforce_rate_examples() {
        let sys = lorentzian(1.0, 0.6, 0.6);
        assert_eq!(decay_rate_bruteforce(&sys, Branch::Lower, 0.0).unwrap(), 0.0);
        let g = decay_rate_bruteforce(&sys, Branch::Lower, 1.0).unwrap();
        let exact = 1.0 - (-1f64).exp();
        assert!((g / exact - 1.0).abs() < 1e-5, "{g}");

        let sys = SystemParams::ohmic(1.0, 0.0).unwrap();
        let g = decay_rate_bruteforce(&sys, Branch::Lower, 1.0).unwrap();
        let exact = decay_rate(&sys, Branch::Lower, 1.0).unwrap();
        assert!((g / exact - 1.0).abs() < 1e-5, "{g} vs {exact}");
    }

    #[test]
    fn ohmic_needs_negative_frequencies() {
        // Restricting the frequency integral to ω′ > 0 misses the closed form
        // by tens of percent; the full-line integral of the odd density does not.
        let sys = SystemParams::ohmic(1.0, 0.0).unwrap();
        let t = 1.0;
        let wj = 1.0;
        let half_line = integrate_pieces(
            |w: f64| {
                let d = wj - w;
                let k = if (d * t).abs() < 1e-8 { 2.0 * t } else { 2.0 * (d * t).sin() / d };
                spectral_density(&sys, w) * k
            },
            &(0..=20_000).map(|k| k as f64).collect::<Vec<_>>(),
            Tolerance::new(1e-12, 1e-10).with_max_subdivisions(1_000_000),
        )
        .unwrap()
        .value;
        let exact = decay_rate(&sys, Branch::Lower, t).unwrap();
        assert!((half_line / exact - 1.0).abs() > 0.1);
    }

    #[test]
    fn ground_state_is_stationary_under_time_local_flow() {
        let sys = lorentzian(5.0, 0.0, 0.5);
        let res = evolve_time_local(&sys, &QubitState::ground(), 0.9).unwrap();
        for s in &res.states {
            assert!(s.rho11.abs() < 1e-14 && s.rho10.norm() < 1e-14);
        }
    }

    #[test]
    fn time_local_matches_closed_form_before_first_zero() {
        let sys = lorentzian(5.0, 0.0, 0.5);
        let res = evolve_time_local(&sys, &QubitState::excited(), 0.9).unwrap();
        let exact = population_at(&sys, 0.9);
        assert!((res.final_state().rho11 - exact).abs() < 1e-6);
        assert!(res.max_trace_deviation < 1e-9);
    }

    #[test]
    fn time_local_coherence_ohmic() {
        let sys = SystemParams::ohmic(10.0, 0.3).unwrap();
        let rho0 = QubitState::new(0.5, C64::new(0.5, 0.0)).unwrap();
        let res = evolve_time_local(&sys, &rho0, 1.0).unwrap();
        let a = crate::amplitude::amplitude(&sys, 1.0).unwrap();
        assert!((res.final_state().rho10 - a / 2.0).norm() < 1e-6);
        assert!(res.sup_gap(&sys, &rho0).unwrap() < 1e-6);
    }

    #[test]
    fn time_local_refuses_population_zero() {
        // resonant δ = 0, Ω = 2: A vanishes at t = π/4
        let sys = lorentzian(5.0, 0.0, 2.0);
        let err = evolve_time_local(&sys, &QubitState::excited(), 1.0).unwrap_err();
        assert!(matches!(err, Error::CoefficientSingularity { .. }), "{err:?}");
    }

    #[test]
    fn dressed_starts_excited() {
        let sys = lorentzian(1.0, 0.0, 1.0);
        let res = evolve_dressed(&sys, 0.5).unwrap();
        assert_eq!(res.times[0], 0.0);
        let s0 = res.states[0];
        assert!((s0.rho11 - 1.0).abs() < 1e-15 && s0.rho10.norm() < 1e-15);
    }

    #[test]
    fn dressed_follows_factored_form_through_zero() {
        let o = 2.0;
        let sys = lorentzian(0.5, 0.0, o);
        let res = evolve_dressed(&sys, 1.5).unwrap();
        for (t, s) in res.times.iter().zip(&res.states) {
            let b = beta_at(&sys, Branch::Lower, *t);
            let expected = (-b / 2.0).exp() * (o * t).cos().powi(2);
            assert!((s.rho11 - expected).abs() < 1e-6);
        }
        assert!(res.max_trace_deviation < 1e-9);
    }

    #[test]
    fn dressed_ohmic_strong_coupling() {
        let sys = SystemParams::ohmic(0.1, 0.5).unwrap();
        let res = evolve_dressed(&sys, 8.73).unwrap();
        assert!(res.sup_gap(&sys, &QubitState::excited()).unwrap() < 1e-6);
    }

    #[test]
    fn dressed_coherence_from_superposition() {
        let sys = lorentzian(0.3, 1.0, 1.5);
        let rho0 = QubitState::from_bloch(0.6, -0.8, 0.0).unwrap();
        let res = evolve_dressed_from(&sys, &rho0, 2.0).unwrap();
        assert!(res.sup_gap(&sys, &rho0).unwrap() < 1e-6);
    }

    #[test]
    fn fitted_exponent_is_one_quarter() {
        let sys = lorentzian(1.0, 0.5, 1.0);
        let [k1, k2] = dressed_decay_exponents(&sys, 2.0).unwrap();
        assert!((k1 - 0.25).abs() < 1e-6, "{k1}");
        assert!((k2 - 0.25).abs() < 1e-6, "{k2}");
    }

    #[test]
    fn blp_of_reference_pair_is_closed_form_n() {
        let sys = lorentzian(5.0, 0.0, 2.0);
        let n = blp_functional(&sys, &QubitState::excited(), &QubitState::ground(), 1.0).unwrap();
        let closed = non_markovianity(&sys, 1.0).unwrap();
        assert!((n - closed).abs() < 1e-10);
    }

    #[test]
    fn markovian_pairs_all_vanish() {
        let sys = lorentzian(5.0, 0.0, 0.1);
        let r = pair_search(&sys, 1.0, 100, 7).unwrap();
        assert_eq!(r.best_n, 0.0);
        assert_eq!(r.reference_n, 0.0);
        assert!(r.bound_holds() && r.reference_attains_max());
    }

    #[test]
    fn equatorial_pair_beats_reference_after_population_zero() {
        // |A|² passes through 0 at t = π/6 and revives. For the equatorial
        // antipodal pair D = |A|, whose revival sqrt(u) outgrows u itself.
        let sys = lorentzian(0.01, 0.0, 3.0);
        let plus = QubitState::from_bloch(1.0, 0.0, 0.0).unwrap();
        let minus = QubitState::from_bloch(-1.0, 0.0, 0.0).unwrap();
        let eq = blp_functional(&sys, &plus, &minus, 1.0).unwrap();
        let reference = non_markovianity(&sys, 1.0).unwrap();
        let abs_a = population_at(&sys, 1.0).sqrt();
        assert!((eq - abs_a).abs() < 1e-9);
        assert!(eq > reference + 1e-3, "{eq} vs {reference}");
    }

    #[test]
    fn default_battery_passes() {
        for c in default_battery() {
            assert!(c.passed(), "{c:?}");
        }
    }

    #[test]
    fn pair_search_is_seed_deterministic() {
        let sys = lorentzian(0.5, 2.0, 0.7);
        let a = pair_search(&sys, 2.0, 120, 42).unwrap();
        let b = pair_search(&sys, 2.0, 120, 42).unwrap();
        assert_eq!(a.best_n, b.best_n);
        assert_eq!(a.best_pair, b.best_pair);
        assert!(pair_search(&sys, 2.0, 50, 42).is_err());
    }
}
