//! Reservoir spectral densities and the dressed-state decay rates they induce.
//!
//! Two reservoir families are supported. The Lorentzian family is peaked at
//! `omega0 - delta` with width `lambda` and is naturally expressed in units of
//! `gamma0`; the Ohmic family with a Lorentz–Drude cutoff `omega_c` is
//! expressed in units of `omega0`.
//!
//! For each dressed branch `j` the time-dependent rate `gamma_j(t)` and its
//! running integral `beta_j(t)` are available in closed form.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_time, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SpectralModel {
    Lorentzian { gamma0: f64, lambda: f64, delta: f64 },
    Ohmic { omega_c: f64 },
}

impl SpectralModel {
    pub fn lorentzian(gamma0: f64, lambda: f64, delta: f64) -> Result<Self> {
        let m = SpectralModel::Lorentzian {
            gamma0,
            lambda,
            delta,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn ohmic(omega_c: f64) -> Result<Self> {
        let m = SpectralModel::Ohmic { omega_c };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SpectralModel::Lorentzian {
                gamma0,
                lambda,
                delta,
            } => {
                positive("gamma0", gamma0)?;
                positive("lambda", lambda)?;
                finite("delta", delta)
            }
            SpectralModel::Ohmic { omega_c } => positive("omega_c", omega_c),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            SpectralModel::Lorentzian { .. } => Family::Lorentzian,
            SpectralModel::Ohmic { .. } => Family::Ohmic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lorentzian,
    Ohmic,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Lorentzian => "lorentzian",
            Family::Ohmic => "ohmic",
        })
    }
}

/// Atom–cavity parameters together with the reservoir model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Atomic (and cavity) transition frequency.
    pub omega0: f64,
    /// Atom–cavity coupling strength.
    pub coupling: f64,
    pub model: SpectralModel,
}

/// Default atomic frequency for Lorentzian runs, in units of `gamma0`.
/// Populations do not depend on it.
pub const DEFAULT_LORENTZIAN_OMEGA0: f64 = 50.0;

impl SystemParams {
    pub fn new(omega0: f64, coupling: f64, model: SpectralModel) -> Result<Self> {
        let sys = Self {
            omega0,
            coupling,
            model,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Lorentzian reservoir in canonical units (`gamma0 = 1`).
    pub fn lorentzian(lambda: f64, delta: f64, coupling: f64) -> Result<Self> {
        Self::new(
            DEFAULT_LORENTZIAN_OMEGA0,
            coupling,
            SpectralModel::lorentzian(1.0, lambda, delta)?,
        )
    }

    /// Ohmic reservoir in canonical units (`omega0 = 1`).
    pub fn ohmic(omega_c: f64, coupling: f64) -> Result<Self> {
        Self::new(1.0, coupling, SpectralModel::ohmic(omega_c)?)
    }

    pub fn validate(&self) -> Result<()> {
        positive("omega0", self.omega0)?;
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "coupling",
                reason: format!("must be finite and >= 0, got {}", self.coupling),
            });
        }
        if let SpectralModel::Ohmic { .. } = self.model {
            // the closed form integrates the odd density over the whole real
            // line, which amplifies instead of damping once ω₀ − Ω < 0
            if self.coupling > self.omega0 {
                return Err(Error::InvalidParameter {
                    name: "coupling",
                    reason: format!(
                        "ohmic coupling must not exceed omega0 = {}, got {}",
                        self.omega0, self.coupling
                    ),
                });
            }
        }
        self.model.validate()
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    /// Replaces the Lorentzian detuning; Ohmic parameters are returned
    /// unchanged.
    pub fn with_delta(mut self, delta: f64) -> Self {
        if let SpectralModel::Lorentzian { delta: d, .. } = &mut self.model {
            *d = delta;
        }
        self
    }

    pub fn with_omega0(mut self, omega0: f64) -> Self {
        self.omega0 = omega0;
        self
    }

    /// Dressed transition frequencies `(omega0 - coupling, omega0 + coupling)`.
    pub fn dressed_frequencies(&self) -> (f64, f64) {
        dressed_frequencies(self)
    }

    /// The fastest rate present in the dynamics; used to size sampling grids.
    pub fn max_frequency(&self) -> f64 {
        let o = self.coupling;
        match self.model {
            SpectralModel::Lorentzian {
                gamma0,
                lambda,
                delta,
            } => [2.0 * o, (o - delta).abs(), (o + delta).abs(), lambda, gamma0]
                .into_iter()
                .fold(0.0, f64::max),
            SpectralModel::Ohmic { omega_c } => {
                let (w1, w2) = self.dressed_frequencies();
                [2.0 * o, w1.abs(), w2.abs(), omega_c, self.omega0]
                    .into_iter()
                    .fold(0.0, f64::max)
            }
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {v}"),
        })
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite, got {v}"),
        })
    }
}

/// Dressed-state branch. `Lower` decays through `|α₁,−⟩` at `omega0 - coupling`,
/// `Upper` through `|α₁,+⟩` at `omega0 + coupling`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Lower,
    Upper,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Lower, Branch::Upper];

    /// 1 for the lower branch, 2 for the upper.
    pub fn index(self) -> usize {
        match self {
            Branch::Lower => 1,
            Branch::Upper => 2,
        }
    }

    pub fn from_index(j: usize) -> Option<Self> {
        match j {
            1 => Some(Branch::Lower),
            2 => Some(Branch::Upper),
            _ => None,
        }
    }

    pub fn frequency(self, sys: &SystemParams) -> f64 {
        let (w1, w2) = sys.dressed_frequencies();
        match self {
            Branch::Lower => w1,
            Branch::Upper => w2,
        }
    }
}

pub fn dressed_frequencies(sys: &SystemParams) -> (f64, f64) {
    (sys.omega0 - sys.coupling, sys.omega0 + sys.coupling)
}

/// Reservoir spectral density `J(ω′)`.
///
/// The Lorentzian peak sits at `omega0 - delta`, so the enclosing system
/// parameters are needed. The Ohmic density is odd in `ω′`.
pub fn spectral_density(sys: &SystemParams, omega_prime: f64) -> f64 {
    match sys.model {
        SpectralModel::Lorentzian {
            gamma0,
            lambda,
            delta,
        } => {
            let d = sys.omega0 - omega_prime - delta;
            gamma0 * lambda * lambda / (2.0 * PI * (d * d + lambda * lambda))
        }
        SpectralModel::Ohmic { omega_c } => {
            let wc2 = omega_c * omega_c;
            2.0 * omega_prime / PI * wc2 / (wc2 + omega_prime * omega_prime)
        }
    }
}

/// Detuning of branch `j` from the Lorentzian peak, `omega0 - omega_j - delta`.
fn lorentzian_offset(sys: &SystemParams, branch: Branch, delta: f64) -> f64 {
    sys.omega0 - branch.frequency(sys) - delta
}

/// Time-dependent decay rate `gamma_j(t)` of the given dressed branch.
pub fn decay_rate(sys: &SystemParams, branch: Branch, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(decay_rate_at(sys, branch, t))
}

/// Accumulated decay exponent `beta_j(t) = ∫₀ᵗ gamma_j`.
pub fn beta(sys: &SystemParams, branch: Branch, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(beta_at(sys, branch, t))
}

pub(crate) fn decay_rate_at(sys: &SystemParams, branch: Branch, t: f64) -> f64 {
    match sys.model {
        SpectralModel::Lorentzian {
            gamma0,
            lambda,
            delta,
        } => {
            let x = lorentzian_offset(sys, branch, delta);
            let (s, c) = (x * t).sin_cos();
            let scale = gamma0 * lambda * lambda / (x * x + lambda * lambda);
            scale * (1.0 + ((x / lambda) * s - c) * (-lambda * t).exp())
        }
        SpectralModel::Ohmic { omega_c } => {
            let w = branch.frequency(sys);
            let (s, c) = (w * t).sin_cos();
            let e = (-omega_c * t).exp();
            4.0 * omega_c * omega_c / (w * w + omega_c * omega_c)
                * (w * (1.0 - e * c) - omega_c * e * s)
        }
    }
}

pub(crate) fn beta_at(sys: &SystemParams, branch: Branch, t: f64) -> f64 {
    match sys.model {
        SpectralModel::Lorentzian {
            gamma0,
            lambda,
            delta,
        } => {
            // Even in the offset, so the sign convention of x is immaterial.
            let x = lorentzian_offset(sys, branch, delta);
            let d = x * x + lambda * lambda;
            let (s, c) = (x * t).sin_cos();
            let e = (-lambda * t).exp();
            gamma0 * lambda * lambda / d
                * (t - 2.0 * x * e * s / d
                    + (lambda * lambda - x * x) * (e * c - 1.0) / (lambda * d))
        }
        SpectralModel::Ohmic { omega_c } => {
            let w = branch.frequency(sys);
            let wc2 = omega_c * omega_c;
            let d = w * w + wc2;
            let (s, c) = (w * t).sin_cos();
            let e = (-omega_c * t).exp();
            4.0 * wc2 / (d * d)
                * (d * w * t + 2.0 * omega_c * w * (e * c - 1.0) - (w * w - wc2) * e * s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::Tolerance;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn quad_rate(sys: &SystemParams, b: Branch, t: f64) -> f64 {
        let brk: Vec<f64> = (0..=64).map(|k| t * k as f64 / 64.0).collect();
        crate::numerics::quad::integrate_pieces(
            |s| decay_rate_at(sys, b, s),
            &brk,
            Tolerance::new(1e-13, 1e-13),
        )
        .unwrap()
        .value
    }

    #[test]
    fn lorentzian_peak_value() {
        let sys = SystemParams::new(50.0, 0.3, SpectralModel::lorentzian(1.0, 2.0, 4.0).unwrap())
            .unwrap();
        assert_relative_eq!(spectral_density(&sys, 50.0 - 4.0), 1.0 / (2.0 * PI), max_relative = 1e-15);
    }

    #[test]
    fn ohmic_density_values() {
        let sys = SystemParams::ohmic(0.7, 0.2).unwrap();
        assert_eq!(spectral_density(&sys, 0.0), 0.0);
        assert_relative_eq!(spectral_density(&sys, 0.7), 0.7 / PI, max_relative = 1e-15);
        assert_relative_eq!(spectral_density(&sys, -1.3), -spectral_density(&sys, 1.3));
    }

    #[test]
    fn dressed_frequency_examples() {
        let m = SpectralModel::ohmic(1.0).unwrap();
        assert_eq!(SystemParams::new(1.0, 0.0, m).unwrap().dressed_frequencies(), (1.0, 1.0));
        assert_eq!(SystemParams::new(1.0, 0.5, m).unwrap().dressed_frequencies(), (0.5, 1.5));
        assert_eq!(SystemParams::new(10.0, 2.0, m).unwrap().dressed_frequencies(), (8.0, 12.0));
    }

    #[test]
    fn rates_vanish_at_origin() {
        for sys in [
            SystemParams::lorentzian(0.3, 2.0, 1.1).unwrap(),
            SystemParams::ohmic(2.0, 0.4).unwrap(),
        ] {
            for b in Branch::BOTH {
                assert_eq!(decay_rate(&sys, b, 0.0).unwrap(), 0.0);
                assert_eq!(beta(&sys, b, 0.0).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn zero_offset_lorentzian_rate() {
        // x = coupling - delta = 0 on the lower branch
        let sys = SystemParams::lorentzian(1.0, 0.8, 0.8).unwrap();
        let g = decay_rate(&sys, Branch::Lower, 1.0).unwrap();
        assert_relative_eq!(g, 1.0 - (-1f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(g, 0.632_120_558_828_557_7, max_relative = 1e-14);
    }

    #[test]
    fn ohmic_resonant_rate_value() {
        let sys = SystemParams::ohmic(1.0, 0.0).unwrap();
        let expected = 2.0 * (1.0 - (-1f64).exp() * (1f64.cos() + 1f64.sin()));
        let g = decay_rate(&sys, Branch::Lower, 1.0).unwrap();
        assert_relative_eq!(g, expected, max_relative = 1e-14);
        assert!((g - 0.983_348).abs() < 1e-6);
    }

    #[test]
    fn lorentzian_beta_matches_quadrature() {
        let sys = SystemParams::lorentzian(5.0, 0.0, 2.0).unwrap();
        let b = beta(&sys, Branch::Lower, 1.0).unwrap();
        let q = quad_rate(&sys, Branch::Lower, 1.0);
        assert_relative_eq!(b, q, max_relative = 1e-8);
    }

    #[test]
    fn resonant_lorentzian_branches_coincide() {
        let sys = SystemParams::lorentzian(0.7, 0.0, 2.3).unwrap();
        for k in 0..50 {
            let t = 0.1 * k as f64;
            let (b1, b2) = (beta_at(&sys, Branch::Lower, t), beta_at(&sys, Branch::Upper, t));
            assert!((b1 - b2).abs() <= 1e-12 * b1.abs().max(1e-300));
        }
    }

    #[test]
    fn lorentzian_long_time_slope() {
        let sys = SystemParams::lorentzian(8.0, 0.2, 0.5).unwrap();
        let x: f64 = 0.5 - 0.2;
        let slope = 64.0 / (x * x + 64.0);
        let b = beta(&sys, Branch::Lower, 50.0).unwrap();
        assert!((b / 50.0 / slope - 1.0).abs() < 0.02);
    }

    #[test]
    fn ohmic_long_time_limit() {
        let sys = SystemParams::ohmic(0.4, 0.3).unwrap();
        for b in Branch::BOTH {
            let w = b.frequency(&sys);
            let limit = 4.0 * 0.16 * w / (w * w + 0.16);
            let g = decay_rate(&sys, b, 50.0).unwrap();
            assert!((g / limit - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn negative_time_rejected() {
        let sys = SystemParams::ohmic(1.0, 0.1).unwrap();
        assert_eq!(decay_rate(&sys, Branch::Upper, -1.0), Err(Error::NegativeTime(-1.0)));
        assert!(beta(&sys, Branch::Lower, -1e-9).is_err());
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(SpectralModel::lorentzian(0.0, 1.0, 0.0).is_err());
        assert!(SpectralModel::lorentzian(1.0, -1.0, 0.0).is_err());
        assert!(SpectralModel::lorentzian(1.0, 1.0, f64::NAN).is_err());
        assert!(SpectralModel::ohmic(0.0).is_err());
        assert!(SystemParams::ohmic(1.0, -0.1).is_err());
    }

    fn any_system() -> impl Strategy<Value = SystemParams> {
        prop_oneof![
            (0.01f64..10.0, 0.0f64..25.0, 0.0f64..5.0)
                .prop_map(|(l, d, o)| SystemParams::lorentzian(l, d, o).unwrap()),
            (0.05f64..10.0, 0.0f64..0.95).prop_map(|(wc, o)| SystemParams::ohmic(wc, o).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn beta_is_integral_of_rate(sys in any_system(), t in 0.0f64..5.0, upper in any::<bool>()) {
            let b = if upper { Branch::Upper } else { Branch::Lower };
            let closed = beta_at(&sys, b, t);
            let q = if t == 0.0 { 0.0 } else { quad_rate(&sys, b, t) };
            prop_assert!((closed - q).abs() <= 1e-6 * (1.0 + closed.abs()));
        }

        #[test]
        fn beta_derivative_is_rate(sys in any_system(), t in 0.05f64..5.0) {
            let h = 1e-5;
            for b in Branch::BOTH {
                let fd = (beta_at(&sys, b, t + h) - beta_at(&sys, b, t - h)) / (2.0 * h);
                let g = decay_rate_at(&sys, b, t);
                prop_assert!((fd - g).abs() <= 1e-6 * (1.0 + g.abs()), "fd {} vs {}", fd, g);
            }
        }
    }

    #[test]
    fn ohmic_coupling_bounded_by_omega0() {
        assert!(SystemParams::ohmic(1.0, 1.0).is_ok());
        assert!(SystemParams::ohmic(1.0, 1.2).is_err());
        assert!(SystemParams::lorentzian(1.0, 0.0, 4.0).is_ok());
    }
}
