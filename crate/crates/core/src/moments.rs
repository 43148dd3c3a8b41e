//! First and second normally ordered moments of the cavity field: their
//! equations of motion, fixed-step RK4 integration and closed-form steady
//! state.
//!
//! The state tracks `<alpha>`, `<alpha^2>` and `<alpha* alpha>`; the conjugate
//! moments `<alpha*>` and `<alpha*^2>` are the complex conjugates of the
//! first two. For the bilinear master equation of this model the hierarchy
//! closes exactly at second order, and normally ordered c-number moments
//! coincide with the operator expectations `<a>`, `<a^2>`, `<a^dagger a>`.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{derive_coefficients, require_below, DerivedCoefficients, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentState {
    pub mean_alpha: Complex64,
    pub mean_alpha_sq: Complex64,
    pub mean_n: f64,
}

impl Add for MomentState {
    type Output = MomentState;
    fn add(self, o: MomentState) -> MomentState {
        MomentState {
            mean_alpha: self.mean_alpha + o.mean_alpha,
            mean_alpha_sq: self.mean_alpha_sq + o.mean_alpha_sq,
            mean_n: self.mean_n + o.mean_n,
        }
    }
}

impl Mul<f64> for MomentState {
    type Output = MomentState;
    fn mul(self, s: f64) -> MomentState {
        MomentState {
            mean_alpha: self.mean_alpha * s,
            mean_alpha_sq: self.mean_alpha_sq * s,
            mean_n: self.mean_n * s,
        }
    }
}

impl MomentState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn is_finite(&self) -> bool {
        self.mean_alpha.is_finite() && self.mean_alpha_sq.is_finite() && self.mean_n.is_finite()
    }

    /// `(<alpha_+^2>, <alpha_-^2>)` with `alpha_+- = alpha* +- alpha`.
    pub fn quadrature_moments(&self) -> (f64, f64) {
        let sq = self.mean_alpha_sq.conj() + self.mean_alpha_sq;
        (sq.re + 2.0 * self.mean_n, sq.re - 2.0 * self.mean_n)
    }
}

/// Time derivative of the moments. `epsilon` overrides the amplifier
/// strength stored in `coeffs`.
pub fn moment_rhs(s: &MomentState, coeffs: &DerivedCoefficients, epsilon: f64) -> MomentState {
    let damping = coeffs.cal_b - coeffs.cal_a;
    let coupling = coeffs.cal_c - coeffs.cal_d + epsilon;
    MomentState {
        mean_alpha: -damping * s.mean_alpha + coupling * s.mean_alpha.conj(),
        mean_alpha_sq: -2.0 * damping * s.mean_alpha_sq
            + Complex64::new(2.0 * coupling * s.mean_n + epsilon - 2.0 * coeffs.cal_d, 0.0),
        mean_n: -2.0 * damping * s.mean_n + coupling * (s.mean_alpha_sq.conj() + s.mean_alpha_sq).re + 2.0 * coeffs.cal_a,
    }
}

/// The pair `E_+-(t) = (e^{-lambda_- t} +- e^{-lambda_+ t}) / 2` that propagates
/// the mean amplitude: `alpha(t) = E_+ alpha(0) + E_- alpha*(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorPair {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

impl PropagatorPair {
    pub fn new(c: &DerivedCoefficients) -> Self {
        PropagatorPair {
            lambda_minus: c.lambda_minus,
            lambda_plus: c.lambda_plus,
        }
    }

    pub fn e_plus(&self, t: f64) -> f64 {
        0.5 * ((-self.lambda_minus * t).exp() + (-self.lambda_plus * t).exp())
    }

    pub fn e_minus(&self, t: f64) -> f64 {
        0.5 * ((-self.lambda_minus * t).exp() - (-self.lambda_plus * t).exp())
    }
}

/// Default RK4 step, `1e-3 / max(lambda_+, kappa, A)`.
pub fn default_dt(params: &SystemParams) -> f64 {
    let c = derive_coefficients(params);
    1e-3 / c.lambda_plus.max(params.kappa).max(c.cal_a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub states: Vec<MomentState>,
    /// Set when the integration produced a non-finite value; the series then
    /// ends at the last finite step.
    pub diverged: bool,
}

impl MomentSeries {
    pub fn last(&self) -> &MomentState {
        self.states.last().expect("series always holds the initial state")
    }
}

fn rk4_step(s: &MomentState, c: &DerivedCoefficients, h: f64) -> MomentState {
    let e = c.epsilon;
    let k1 = moment_rhs(s, c, e);
    let k2 = moment_rhs(&(*s + k1 * (h / 2.0)), c, e);
    let k3 = moment_rhs(&(*s + k2 * (h / 2.0)), c, e);
    let k4 = moment_rhs(&(*s + k3 * h), c, e);
    *s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn step_plan(t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Domain(format!("t_end must be >= 0, got {t_end}")));
    }
    let n = (t_end / dt).round().max(if t_end > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if n == 0 { 0.0 } else { t_end / n as f64 };
    Ok((n, h))
}

/// Integrates the moment equations from vacuum with classical RK4, recording
/// every `record_every`-th step (the final step is always recorded). The step
/// is adjusted so that `t_end` is hit exactly.
pub fn integrate_moments_every(params: &SystemParams, t_end: f64, dt: f64, record_every: usize) -> Result<MomentSeries> {
    let (n, h) = step_plan(t_end, dt)?;
    let every = record_every.max(1);
    let c = derive_coefficients(params);
    let mut s = MomentState::vacuum();
    let mut times = vec![0.0];
    let mut states = vec![s];
    for i in 1..=n {
        let next = rk4_step(&s, &c, h);
        if !next.is_finite() {
            return Ok(MomentSeries {
                times,
                states,
                diverged: true,
            });
        }
        s = next;
        if i % every == 0 || i == n {
            times.push(i as f64 * h);
            states.push(s);
        }
    }
    Ok(MomentSeries {
        times,
        states,
        diverged: false,
    })
}

/// Integrates from vacuum and records every step.
pub fn integrate_moments(params: &SystemParams, t_end: f64, dt: f64) -> Result<MomentSeries> {
    integrate_moments_every(params, t_end, dt, 1)
}

/// Closed-form steady moments: `<alpha> = 0`, `<alpha^2>` and `<alpha* alpha>`
/// from the two-exponential noise integrals.
pub fn steady_state_moments(params: &SystemParams) -> Result<MomentState> {
    let c = require_below(params, "steady-state moments")?;
    let slow = (2.0 * c.cal_a - 2.0 * c.cal_d + c.epsilon) / (4.0 * c.lambda_minus);
    let fast = (2.0 * c.cal_a + 2.0 * c.cal_d - c.epsilon) / (4.0 * c.lambda_plus);
    Ok(MomentState {
        mean_alpha: Complex64::new(0.0, 0.0),
        mean_alpha_sq: Complex64::new(slow - fast, 0.0),
        mean_n: slow + fast,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{mean_photon_cavity, steady_quadrature_moments, PhotonTime};
    use approx::assert_relative_eq;

    fn p(a: f64, k: f64, b: f64, e: f64, r: f64) -> SystemParams {
        SystemParams::new(a, k, b, e, r).unwrap()
    }

    #[test]
    fn rhs_at_vacuum() {
        let pp = p(4.0, 1.0, 0.0, 0.0, 0.0);
        let c = derive_coefficients(&pp);
        let d = moment_rhs(&MomentState::vacuum(), &c, 0.0);
        assert_eq!(d.mean_alpha_sq, Complex64::new(2.0, 0.0));
        assert_eq!(d.mean_n, 2.0);
        assert_eq!(d.mean_alpha, Complex64::new(0.0, 0.0));

        let pp = p(0.0, 1.0, 0.4, 0.0, 0.0);
        let c = derive_coefficients(&pp);
        assert_eq!(moment_rhs(&MomentState::vacuum(), &c, 0.0), MomentState::vacuum());
    }

    #[test]
    fn steady_state_is_fixed_point() {
        for &(a, k, b, e, r) in &[(4.0, 1.0, 0.0, 0.0, 0.0), (25.0, 0.8, 0.1, 0.3, 1.0), (3.0, 0.7, 1.2, 0.05, 0.4)] {
            let pp = p(a, k, b, e, r);
            let s = steady_state_moments(&pp).unwrap();
            let c = derive_coefficients(&pp);
            let d = moment_rhs(&s, &c, e);
            let scale = 1.0 + s.mean_n.abs();
            assert!(d.mean_n.abs() < 1e-12 * scale * c.lambda_plus.max(1.0));
            assert!(d.mean_alpha_sq.norm() < 1e-12 * scale * c.lambda_plus.max(1.0));
        }
    }

    #[test]
    fn steady_state_values() {
        let s = steady_state_moments(&p(4.0, 1.0, 0.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(s.mean_n, 2.0, max_relative = 1e-14);
        assert_relative_eq!(s.mean_alpha_sq.re, 2.0, max_relative = 1e-14);
        let s = steady_state_moments(&p(0.0, 0.9, 0.3, 0.0, 0.0)).unwrap();
        assert_eq!(s, MomentState::vacuum());
        assert!(steady_state_moments(&p(100.0, 0.8, 0.022, 0.0, 1.0).at_threshold().unwrap()).is_err());
    }

    #[test]
    fn quadrature_moments_match_steady_formula() {
        let pp = p(7.0, 0.6, 0.35, 0.12, 0.8);
        let s = steady_state_moments(&pp).unwrap();
        let (ap, am) = s.quadrature_moments();
        let (bp, bm) = steady_quadrature_moments(&derive_coefficients(&pp));
        assert_relative_eq!(ap, bp, max_relative = 1e-10);
        assert_relative_eq!(am, bm, max_relative = 1e-10);
    }

    #[test]
    fn integration_reaches_steady_state() {
        let pp = p(25.0, 0.8, 0.1, 0.3, 1.0);
        let series = integrate_moments_every(&pp, 50.0 / 0.8, default_dt(&pp), 1000).unwrap();
        assert!(!series.diverged);
        let last = series.last();
        let ss = steady_state_moments(&pp).unwrap();
        assert!((last.mean_n - ss.mean_n).abs() < 1e-6);
        assert_relative_eq!(last.mean_n, 4.733_542_854_068_67, epsilon = 1e-6);
        for (t, s) in series.times.iter().zip(&series.states) {
            assert_eq!(s.mean_alpha, Complex64::new(0.0, 0.0));
            let closed = mean_photon_cavity(&pp, PhotonTime::At(*t)).unwrap();
            assert!((s.mean_n - closed).abs() < 1e-9 * (1.0 + closed));
        }
    }

    #[test]
    fn no_gain_stays_at_vacuum() {
        let series = integrate_moments(&p(0.0, 1.0, 0.5, 0.0, 0.0), 3.0, 0.01).unwrap();
        assert!(series.states.iter().all(|s| *s == MomentState::vacuum()));
        assert_eq!(series.times.len(), 301);
    }

    #[test]
    fn first_step_follows_gain() {
        let pp = p(25.0, 0.8, 0.1, 0.3, 1.0);
        let c = derive_coefficients(&pp);
        let dt = 1e-4;
        let s = integrate_moments(&pp, dt, dt).unwrap();
        let n1 = s.states[1].mean_n;
        assert!((n1 - 2.0 * c.cal_a * dt).abs() < 10.0 * (c.lambda_plus * dt).powi(2) * c.cal_a);
    }

    #[test]
    fn divergence_above_threshold_is_flagged() {
        let pp = p(100.0, 0.8, 0.022, 0.0, 1.0).at_threshold().unwrap();
        let above = pp.with_epsilon(pp.epsilon + 10.0).unwrap();
        let s = integrate_moments_every(&above, 1e4, 0.01, 100).unwrap();
        assert!(s.diverged);
        assert!(s.states.iter().all(MomentState::is_finite));
    }

    #[test]
    fn propagator_pair_identities() {
        let c = derive_coefficients(&p(25.0, 0.8, 0.1, 0.3, 1.0));
        let e = PropagatorPair::new(&c);
        assert_eq!(e.e_plus(0.0), 1.0);
        assert_eq!(e.e_minus(0.0), 0.0);
        for &t in &[0.1, 1.0, 7.5] {
            assert_relative_eq!(e.e_plus(t) + e.e_minus(t), (-c.lambda_minus * t).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn bad_step_is_rejected() {
        assert!(integrate_moments(&p(1.0, 1.0, 0.0, 0.0, 0.0), 1.0, 0.0).is_err());
        assert!(integrate_moments(&p(1.0, 1.0, 0.0, 0.0, 0.0), -1.0, 0.1).is_err());
    }
}
