//! Trace distance, BLP non-Markovianity and the quantum-speed-limit ratio for
//! an atom prepared in `|e⟩`.
//!
//! `[0, tau]` is split at the turning points of `|A(t)|²` into monotone
//! segments. The non-Markovianity is the total population gained on the
//! rising segments. The speed-limit denominator `∫|∂ₜ|A|²|` is integrated
//! segment by segment with adaptive quadrature, which makes
//!
//! ```text
//! tau_qsl / tau = (1 − |A(τ)|²) / (1 − |A(τ)|² + 2N)
//! ```
//!
//! a non-trivial consistency check between two independent computations.

use serde::{Deserialize, Serialize};

use crate::amplitude::{population_at, population_rate_at, population_turning_points, QubitState};
use crate::error::{Error, Result};
use crate::numerics::quad::{integrate, Tolerance};
use crate::spectral::SystemParams;

/// Per-segment quadrature tolerance for `∫|∂ₜ|A|²|`.
pub const SEGMENT_TOLERANCE: Tolerance = Tolerance::new(1e-13, 1e-13);

/// Denominators below this are treated as "no evolution".
pub const DEGENERATE_DENOMINATOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub rising: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsResult {
    pub tau: f64,
    /// `|A(τ)|²`.
    pub final_pop: f64,
    pub n_blp: f64,
    pub qslt_ratio: f64,
    /// The ratio with a signed denominator `∫ ∂ₜ|A|² dt = |A(τ)|² − 1`;
    /// identically −1, reported for comparison only.
    pub qslt_ratio_literal: f64,
    /// `∫₀^τ |∂ₜ|A|²| dt` by quadrature.
    pub denominator: f64,
    /// Maximal intervals on which `|A|²` increases.
    pub segments: Vec<(f64, f64)>,
}

impl MetricsResult {
    /// `|tau_qsl/tau − (1 − P)/(1 − P + 2N)|`.
    pub fn relation_residual(&self) -> f64 {
        let loss = 1.0 - self.final_pop;
        (self.qslt_ratio - loss / (loss + 2.0 * self.n_blp)).abs()
    }
}

/// Half the trace norm of `a − b`.
pub fn trace_distance(a: &QubitState, b: &QubitState) -> f64 {
    let p = a.rho11 - b.rho11;
    let c = a.rho10 - b.rho10;
    (p * p + c.norm_sqr()).sqrt()
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

/// Monotone pieces of `|A|²` on `[0, tau]`.
pub fn monotone_segments(sys: &SystemParams, tau: f64) -> Result<Vec<Segment>> {
    check_tau(tau)?;
    let mut cuts = vec![0.0];
    cuts.extend(population_turning_points(sys, tau)?);
    cuts.push(tau);
    Ok(cuts
        .windows(2)
        .map(|w| Segment {
            start: w[0],
            end: w[1],
            rising: population_at(sys, w[1]) > population_at(sys, w[0]),
        })
        .collect())
}

/// Full metric evaluation over `[0, tau]` with `ρ(0) = |e⟩⟨e|`.
pub fn evaluate(sys: &SystemParams, tau: f64) -> Result<MetricsResult> {
    let segments = monotone_segments(sys, tau)?;
    let final_pop = population_at(sys, tau);

    let mut n_blp = 0.0;
    let mut denominator = 0.0;
    let mut signed = 0.0;
    let mut rising = Vec::new();
    for seg in &segments {
        let q = integrate(
            |t| population_rate_at(sys, t),
            seg.start,
            seg.end,
            SEGMENT_TOLERANCE,
        )?;
        denominator += q.value.abs();
        signed += q.value;
        if seg.rising {
            n_blp += population_at(sys, seg.end) - population_at(sys, seg.start);
            rising.push((seg.start, seg.end));
        }
    }
    let n_blp = n_blp.max(0.0);

    if denominator < DEGENERATE_DENOMINATOR {
        return Err(Error::DegenerateEvolution(denominator));
    }
    Ok(MetricsResult {
        tau,
        final_pop,
        n_blp,
        qslt_ratio: (1.0 - final_pop) / denominator,
        qslt_ratio_literal: (1.0 - final_pop) / signed,
        denominator,
        segments: rising,
    })
}

/// BLP non-Markovianity `N` over `[0, tau]`.
pub fn non_markovianity(sys: &SystemParams, tau: f64) -> Result<f64> {
    // N does not need the denominator, so a frozen system still yields 0.
    match evaluate(sys, tau) {
        Ok(m) => Ok(m.n_blp),
        Err(Error::DegenerateEvolution(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// `tau_qsl / tau` for an initially excited atom.
pub fn qslt_ratio(sys: &SystemParams, tau: f64) -> Result<f64> {
    evaluate(sys, tau).map(|m| m.qslt_ratio)
}

pub fn relation_residual(sys: &SystemParams, tau: f64) -> Result<f64> {
    evaluate(sys, tau).map(|m| m.relation_residual())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::{atom_state, excited_population};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn lorentzian(lambda: f64, delta: f64, coupling: f64) -> SystemParams {
        SystemParams::lorentzian(lambda, delta, coupling).unwrap()
    }

    /// Dense uniform trapezoid integral of |∂ₜ|A|²| and the resulting N.
    fn dense_grid_n(sys: &SystemParams, tau: f64, n: usize) -> f64 {
        let h = tau / n as f64;
        let f = |k: usize| population_rate_at(sys, k as f64 * h).abs();
        let mut acc = 0.5 * (f(0) + f(n));
        for k in 1..n {
            acc += f(k);
        }
        0.5 * (acc * h + population_at(sys, tau) - 1.0)
    }

    #[test]
    fn trace_distance_examples() {
        let e = QubitState::excited();
        let g = QubitState::ground();
        assert_eq!(trace_distance(&e, &e), 0.0);
        assert_eq!(trace_distance(&e, &g), 1.0);
        let sys = lorentzian(0.5, 1.0, 2.0);
        for t in [0.1, 0.7, 1.3] {
            let d = trace_distance(
                &atom_state(&sys, &e, t).unwrap(),
                &atom_state(&sys, &g, t).unwrap(),
            );
            assert!((d - excited_population(&sys, t).unwrap()).abs() < 1e-15);
        }
        let plus = QubitState::new(0.5, Complex64::new(0.5, 0.0)).unwrap();
        let minus = QubitState::new(0.5, Complex64::new(-0.5, 0.0)).unwrap();
        assert_eq!(trace_distance(&plus, &minus), 1.0);
    }

    #[test]
    fn markovian_regime_is_flat() {
        let m = evaluate(&lorentzian(5.0, 0.0, 0.1), 1.0).unwrap();
        assert_eq!(m.n_blp, 0.0);
        assert!(m.segments.is_empty());
        assert!((m.qslt_ratio - 1.0).abs() < 1e-12);
        assert!(m.relation_residual() < 1e-12);
        assert!((m.qslt_ratio_literal + 1.0).abs() < 1e-12);
    }

    #[test]
    fn revival_regime_matches_dense_grid() {
        let sys = lorentzian(5.0, 0.0, 2.0);
        let m = evaluate(&sys, 1.0).unwrap();
        assert_eq!(m.segments.len(), 1);
        let (a, b) = m.segments[0];
        assert!((a - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
        assert_eq!(b, 1.0);
        let oracle = dense_grid_n(&sys, 1.0, 1_000_000);
        assert!((m.n_blp - oracle).abs() < 1e-6, "{} vs {}", m.n_blp, oracle);
        assert!(m.qslt_ratio < 1.0);
    }

    #[test]
    fn relation_holds_in_strong_coupling() {
        let r = relation_residual(&lorentzian(0.01, 0.0, 3.0), 1.0).unwrap();
        assert!(r < 1e-9);
        let ohmic = SystemParams::ohmic(0.1, 0.5).unwrap();
        assert!(relation_residual(&ohmic, 8.73).unwrap() < 1e-9);
    }

    #[test]
    fn transition_across_quarter_period() {
        // δ = 0 onset: the first population zero π/(2Ω) enters [0, 1]
        let below = lorentzian(5.0, 0.0, 1.5);
        let above = lorentzian(5.0, 0.0, 1.65);
        assert_eq!(non_markovianity(&below, 1.0).unwrap(), 0.0);
        assert_eq!(qslt_ratio(&below, 1.0).unwrap(), 1.0);
        assert!(non_markovianity(&above, 1.0).unwrap() > 0.0);
        assert!(qslt_ratio(&above, 1.0).unwrap() < 1.0);
    }

    #[test]
    fn rejects_bad_tau() {
        let sys = lorentzian(1.0, 0.0, 1.0);
        assert!(non_markovianity(&sys, 0.0).is_err());
        assert!(qslt_ratio(&sys, -1.0).is_err());
        assert!(relation_residual(&sys, f64::NAN).is_err());
    }

    fn any_system() -> impl Strategy<Value = SystemParams> {
        prop_oneof![
            (0.01f64..10.0, 0.0f64..25.0, 0.0f64..5.0)
                .prop_map(|(l, d, o)| SystemParams::lorentzian(l, d, o).unwrap()),
            (0.05f64..10.0, 0.0f64..0.95).prop_map(|(wc, o)| SystemParams::ohmic(wc, o).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn metric_invariants(sys in any_system(), tau in 0.2f64..5.0) {
            let m = evaluate(&sys, tau).unwrap();
            prop_assert!(m.n_blp >= 0.0);
            prop_assert!(m.qslt_ratio > 0.0 && m.qslt_ratio <= 1.0 + 1e-12);
            prop_assert!(m.relation_residual() < 1e-9);
            prop_assert_eq!(m.n_blp == 0.0, m.segments.is_empty());
            if m.n_blp == 0.0 {
                prop_assert!((m.qslt_ratio - 1.0).abs() < 1e-10);
            } else {
                prop_assert!(m.qslt_ratio < 1.0);
            }
            let decomposed = 1.0 - m.final_pop + 2.0 * m.n_blp;
            prop_assert!((m.denominator - decomposed).abs() < 1e-9);
        }
    }
}
