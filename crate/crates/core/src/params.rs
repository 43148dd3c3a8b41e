//! Physical parameters of the laser and the coefficients derived from them.
//!
//! All rates (linear gain, cavity damping, amplifier strength, and the
//! microscopic rates) share one arbitrary inverse-time unit. Nothing in the
//! crate assumes a particular unit.

use crate::error::{Error, Result};

/// Microscopic inputs from which the linear gain and pump ratio follow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Microscopic {
    /// Atom-cavity coupling constant.
    pub g: f64,
    /// Atomic injection rate.
    pub r_a: f64,
    /// Atomic decay rate, the same for all three levels.
    pub gamma: f64,
    /// Amplitude of the pump mode coupling top and bottom levels.
    pub omega: f64,
    /// Coupling constant of the nonlinear crystal.
    pub lambda_pump: f64,
    /// Amplitude of the classical pump driving the crystal.
    pub mu: f64,
}

/// Physical inputs: linear gain `A`, cavity damping `kappa`, pump ratio
/// `beta`, amplifier strength `epsilon` and squeeze parameter `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub linear_gain: f64,
    pub kappa: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub squeeze_r: f64,
    pub microscopic: Option<Microscopic>,
}

fn check(name: &str, value: f64, positive: bool) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::Domain(format!("{name} must be finite, got {value}")));
    }
    if positive && value <= 0.0 {
        return Err(Error::Domain(format!("{name} must be > 0, got {value}")));
    }
    if !positive && value < 0.0 {
        return Err(Error::Domain(format!("{name} must be >= 0, got {value}")));
    }
    Ok(())
}

impl SystemParams {
    pub fn new(linear_gain: f64, kappa: f64, beta: f64, epsilon: f64, squeeze_r: f64) -> Result<Self> {
        let p = SystemParams {
            linear_gain,
            kappa,
            beta,
            epsilon,
            squeeze_r,
            microscopic: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from the atomic and pump inputs, with
    /// `A = 2 g^2 r_a / gamma^2`, `beta = Omega / gamma` and `epsilon = lambda * mu`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_microscopic(
        g: f64,
        r_a: f64,
        gamma: f64,
        omega: f64,
        lambda_pump: f64,
        mu: f64,
        kappa: f64,
        r: f64,
    ) -> Result<Self> {
        check("gamma", gamma, true)?;
        check("kappa", kappa, true)?;
        check("r_a", r_a, false)?;
        check("Omega", omega, false)?;
        check("lambda_pump", lambda_pump, false)?;
        check("mu", mu, false)?;
        check("r", r, false)?;
        if !g.is_finite() {
            return Err(Error::Domain(format!("g must be finite, got {g}")));
        }
        let micro = Microscopic {
            g,
            r_a,
            gamma,
            omega,
            lambda_pump,
            mu,
        };
        let p = SystemParams {
            linear_gain: 2.0 * g * g * r_a / (gamma * gamma),
            kappa,
            beta: omega / gamma,
            epsilon: lambda_pump * mu,
            squeeze_r: r,
            microscopic: Some(micro),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check("kappa", self.kappa, true)?;
        check("A", self.linear_gain, false)?;
        check("beta", self.beta, false)?;
        check("epsilon", self.epsilon, false)?;
        check("r", self.squeeze_r, false)?;
        Ok(())
    }

    /// Same parameters with a different amplifier strength. The microscopic
    /// block is dropped because `epsilon = lambda * mu` would no longer hold.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut p = *self;
        p.epsilon = epsilon;
        p.microscopic = None;
        p.validate()?;
        Ok(p)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        let mut p = *self;
        p.beta = beta;
        p.microscopic = None;
        p.validate()?;
        Ok(p)
    }

    pub fn with_squeeze(&self, r: f64) -> Result<Self> {
        let mut p = *self;
        p.squeeze_r = r;
        p.validate()?;
        Ok(p)
    }

    /// Same parameters with the amplifier set exactly to threshold.
    pub fn at_threshold(&self) -> Result<Self> {
        self.with_epsilon(threshold_epsilon(self))
    }

    /// `(1 + beta^2)(1 + beta^2/4)`.
    pub fn big_b(&self) -> f64 {
        let b2 = self.beta * self.beta;
        (1.0 + b2) * (1.0 + b2 / 4.0)
    }
}

/// Coefficients of the cavity-mode master equation plus the two decay rates
/// of the quadrature variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoefficients {
    pub cal_a: f64,
    pub cal_b: f64,
    pub cal_c: f64,
    pub cal_d: f64,
    pub big_b: f64,
    /// Reservoir photon number `sinh^2 r`.
    pub n: f64,
    /// Reservoir phase correlation `sinh r cosh r`.
    pub m: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub epsilon_threshold: f64,
    /// Amplifier strength the coefficients were derived with.
    pub epsilon: f64,
}

impl DerivedCoefficients {
    /// `B - A`, the damping of the amplitude.
    pub fn damping(&self) -> f64 {
        self.cal_b - self.cal_a
    }

    /// `C - D + epsilon`, the coupling of the amplitude to its conjugate.
    pub fn coupling(&self) -> f64 {
        self.cal_c - self.cal_d + self.epsilon
    }

    /// Weight of the `<f f>` noise correlation, `epsilon - 2D`.
    pub fn noise_ff(&self) -> f64 {
        self.epsilon - 2.0 * self.cal_d
    }

    /// Weight of the `<f f*>` noise correlation, `2A`.
    pub fn noise_ffstar(&self) -> f64 {
        2.0 * self.cal_a
    }
}

pub fn derive_coefficients(params: &SystemParams) -> DerivedCoefficients {
    let a = params.linear_gain;
    let k = params.kappa;
    let b = params.beta;
    let r = params.squeeze_r;
    let eps = params.epsilon;
    let big_b = params.big_b();
    let (s, c) = (r.sinh(), r.cosh());
    let n = s * s;
    let m = s * c;
    let g = a / (4.0 * big_b);
    let b2 = b * b;
    let b3 = b2 * b;

    let cal_a = k * n / 2.0 + g * (1.0 - 1.5 * b + b2);
    let cal_b = k * (n + 1.0) / 2.0 + g * (1.0 + 1.5 * b + b2);
    let cal_c = -k * m / 2.0 + g * (-1.0 + b / 2.0 + b2 / 2.0 + b3 / 2.0);
    let cal_d = -k * m / 2.0 + g * (-1.0 - b / 2.0 + b2 / 2.0 - b3 / 2.0);

    let damping = cal_b - cal_a;
    let coupling = cal_c - cal_d + eps;

    DerivedCoefficients {
        cal_a,
        cal_b,
        cal_c,
        cal_d,
        big_b,
        n,
        m,
        lambda_minus: damping - coupling,
        lambda_plus: damping + coupling,
        epsilon_threshold: threshold_epsilon(params),
        epsilon: eps,
    }
}

/// Amplifier strength at which `lambda_minus` vanishes. The `epsilon` field
/// of `params` is ignored.
pub fn threshold_epsilon(params: &SystemParams) -> f64 {
    let b = params.beta;
    params.kappa / 2.0 + params.linear_gain * (2.0 * b - b * b * b) / (4.0 * params.big_b())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Below,
    At,
    Above,
}

/// Default classification tolerance, relative to `kappa`.
pub const DEFAULT_THRESHOLD_TOL: f64 = 1e-12;

pub fn stability_classify(params: &SystemParams) -> Stability {
    stability_classify_with_tol(params, DEFAULT_THRESHOLD_TOL * params.kappa)
}

pub fn stability_classify_with_tol(params: &SystemParams, tol: f64) -> Stability {
    let lm = derive_coefficients(params).lambda_minus;
    if lm > tol {
        Stability::Below
    } else if lm < -tol {
        Stability::Above
    } else {
        Stability::At
    }
}

/// Errors unless the parameters lie strictly below threshold.
pub(crate) fn require_below(params: &SystemParams, quantity: &'static str) -> Result<DerivedCoefficients> {
    let c = derive_coefficients(params);
    match stability_classify(params) {
        Stability::Below => Ok(c),
        _ => Err(Error::Stability {
            quantity,
            lambda_minus: c.lambda_minus,
        }),
    }
}

/// Errors if the parameters lie above threshold.
pub(crate) fn require_not_above(params: &SystemParams, quantity: &'static str) -> Result<(DerivedCoefficients, Stability)> {
    let c = derive_coefficients(params);
    match stability_classify(params) {
        Stability::Above => Err(Error::Stability {
            quantity,
            lambda_minus: c.lambda_minus,
        }),
        s => Ok((c, s)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn microscopic_direct_substitution() {
        let p = SystemParams::from_microscopic(1.0, 2.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(p.linear_gain, 4.0);
        assert_eq!(p.beta, 0.0);
        assert_eq!(p.epsilon, 0.0);
        assert!(p.microscopic.is_some());

        let p = SystemParams::from_microscopic(0.0, 17.0, 2.0, 0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(p.linear_gain, 0.0);

        let p = SystemParams::from_microscopic(2.0, 12.5, 1.0, 0.022, 0.3, 5.0, 0.8, 1.0).unwrap();
        assert_relative_eq!(p.linear_gain, 100.0, max_relative = 1e-15);
        assert_relative_eq!(p.beta, 0.022);
        assert_relative_eq!(p.epsilon, 1.5, max_relative = 1e-15);
    }

    #[test]
    fn microscopic_rejects_bad_rates() {
        assert!(SystemParams::from_microscopic(1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(SystemParams::from_microscopic(1.0, 1.0, 1.0, 0.0, 0.0, 1.0, -1.0, 0.0).is_err());
        assert!(SystemParams::from_microscopic(1.0, -1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(SystemParams::new(1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(SystemParams::new(-1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, 1.0, -0.1, 0.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, 1.0, 0.0, f64::NAN, 0.0).is_err());
        assert!(SystemParams::new(1.0, 1.0, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn coefficients_at_trivial_point() {
        let p = SystemParams::new(4.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        let c = derive_coefficients(&p);
        assert_eq!(c.cal_a, 1.0);
        assert_eq!(c.cal_b, 1.5);
        assert_eq!(c.cal_c, -1.0);
        assert_eq!(c.cal_d, -1.0);
        assert_eq!(c.big_b, 1.0);
        assert_eq!((c.n, c.m), (0.0, 0.0));
        assert_eq!(c.lambda_minus, 0.5);
        assert_eq!(c.lambda_plus, 0.5);
    }

    #[test]
    fn reservoir_moments_at_unit_squeeze() {
        let p = SystemParams::new(0.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        let c = derive_coefficients(&p);
        assert_relative_eq!(c.n, 1.381098, epsilon = 1e-6);
        assert_relative_eq!(c.m, 1.813430, epsilon = 1e-6);
    }

    #[test]
    fn threshold_values() {
        let p = SystemParams::new(100.0, 0.8, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(threshold_epsilon(&p), 0.4);
        let p = p.with_beta(2f64.sqrt()).unwrap();
        assert_relative_eq!(threshold_epsilon(&p), 0.4, epsilon = 1e-13);
        let p = p.with_beta(0.022).unwrap();
        assert_relative_eq!(threshold_epsilon(&p), 1.499069, epsilon = 1e-6);
        let at = p.at_threshold().unwrap();
        assert!(derive_coefficients(&at).lambda_minus.abs() < 1e-14);
    }

    #[test]
    fn classification() {
        let p = SystemParams::new(0.0, 1.0, 0.3, 0.0, 0.5).unwrap();
        assert_eq!(stability_classify(&p), Stability::Below);
        let p = SystemParams::new(100.0, 0.8, 0.022, 0.0, 1.0).unwrap();
        let at = p.at_threshold().unwrap();
        assert_eq!(stability_classify(&at), Stability::At);
        let above = at.with_epsilon(at.epsilon + 0.1 * p.kappa).unwrap();
        assert_eq!(stability_classify(&above), Stability::Above);
    }

    #[test]
    fn derivation_is_bit_reproducible() {
        let p = SystemParams::new(37.0, 0.7, 0.41, 0.2, 0.9).unwrap();
        let a = derive_coefficients(&p);
        let b = derive_coefficients(&p);
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
