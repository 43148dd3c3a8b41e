//! Closed-form steady-state, threshold and spectral results.
//!
//! Quadrature variances, squeezing spectra and power spectra are evaluated
//! from their reduced expressions in `beta`, `kappa`, `A`, `epsilon` and `r`.
//! The moment-based routes (steady quadrature moments, input-output
//! correlations) are kept separate so each can check the other.
//!
//! Three closed forms in their commonly quoted shape are inconsistent with
//! the underlying moments and are corrected here:
//! - the threshold output minus-quadrature variance must carry a `kappa` on
//!   the `(2 - e^{-2r})` term of its numerator;
//! - the first Lorentzian of the output power spectrum carries `kappa`;
//! - the second fraction of the closed-form mean photon number has the sign
//!   of its `kappa (e^{-2r} - 1)` term flipped.
//!
//! The uncorrected variants are exposed (`*_uncorrected`) only so that the
//! verification report can show the discrepancy.

use crate::error::{Error, Result};
use crate::numerics::{bisect, golden_section, linspace};
use crate::params::{derive_coefficients, require_below, require_not_above, DerivedCoefficients, Stability, SystemParams};

/// A value that is either finite or flagged as divergent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaybeDivergent {
    Finite(f64),
    Divergent,
}

impl MaybeDivergent {
    pub fn value(self) -> Option<f64> {
        match self {
            MaybeDivergent::Finite(v) => Some(v),
            MaybeDivergent::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, MaybeDivergent::Divergent)
    }
}

/// Variances of the `+` (amplitude) and `-` (phase) quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePair {
    pub plus: MaybeDivergent,
    pub minus: f64,
}

impl QuadraturePair {
    /// `plus * minus`, or `None` when the plus quadrature diverges.
    pub fn uncertainty_product(&self) -> Option<f64> {
        self.plus.value().map(|p| p * self.minus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    SqueezingPlus,
    SqueezingMinus,
    PowerCavity,
    PowerOutput,
    /// Numerically transformed from a correlation series.
    Transformed,
}

impl SpectrumKind {
    pub fn label(self) -> &'static str {
        match self {
            SpectrumKind::SqueezingPlus => "squeezing_plus",
            SpectrumKind::SqueezingMinus => "squeezing_minus",
            SpectrumKind::PowerCavity => "power_cavity",
            SpectrumKind::PowerOutput => "power_output",
            SpectrumKind::Transformed => "transformed",
        }
    }
}

/// Samples of a spectrum on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    pub kind: SpectrumKind,
    pub omega: Vec<f64>,
    pub values: Vec<MaybeDivergent>,
    /// Standard errors, present for Monte Carlo derived spectra.
    pub std_err: Option<Vec<f64>>,
}

impl SpectrumSeries {
    pub(crate) fn finite(kind: SpectrumKind, omega: &[f64], values: Vec<f64>) -> Self {
        SpectrumSeries {
            kind,
            omega: omega.to_vec(),
            values: values.into_iter().map(MaybeDivergent::Finite).collect(),
            std_err: None,
        }
    }

    /// Finite values, with divergent points mapped to `None`.
    pub fn finite_values(&self) -> Vec<Option<f64>> {
        self.values.iter().map(|v| v.value()).collect()
    }
}

fn guard_positive(formula: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::FormulaValidity { formula, value })
    }
}

fn check_transmission(p: &SystemParams) -> Result<()> {
    if p.kappa > 1.0 {
        return Err(Error::Domain(format!(
            "output-mode quantities need 0 < kappa <= 1 (mirror transmission), got {}",
            p.kappa
        )));
    }
    Ok(())
}

/// Reduced form of `lambda_minus` used by the closed-form spectra.
fn width_minus(p: &SystemParams) -> f64 {
    let b = p.beta;
    p.kappa / 2.0 - p.epsilon + p.linear_gain * (2.0 * b - b.powi(3)) / (4.0 * p.big_b())
}

fn width_plus(p: &SystemParams) -> f64 {
    let b = p.beta;
    p.kappa / 2.0 + p.epsilon + p.linear_gain * (4.0 * b + b.powi(3)) / (4.0 * p.big_b())
}

/// Intracavity quadrature variances. At threshold the plus quadrature is
/// flagged divergent and the minus quadrature is the threshold limit.
pub fn cavity_variances(p: &SystemParams) -> Result<QuadraturePair> {
    let (_, stab) = require_not_above(p, "cavity quadrature variance")?;
    let (a, k, b, e) = (p.linear_gain, p.kappa, p.beta, p.epsilon);
    let bb = p.big_b();
    let r2 = 2.0 * p.squeeze_r;

    let minus = (2.0 * k * bb * (-r2).exp() + 3.0 * a * b * b) / (2.0 * (k + 2.0 * e) * bb + a * (4.0 * b + b.powi(3)));
    let minus = guard_positive("cavity minus-quadrature variance", minus)?;

    let plus = match stab {
        Stability::At => MaybeDivergent::Divergent,
        _ => {
            let v = (2.0 * k * bb * r2.exp() + a * (4.0 + b * b)) / (2.0 * (k - 2.0 * e) * bb + a * (2.0 * b - b.powi(3)));
            MaybeDivergent::Finite(guard_positive("cavity plus-quadrature variance", v)?)
        }
    };
    Ok(QuadraturePair { plus, minus })
}

/// Output-mode quadrature variances from the reduced closed form. At threshold
/// the minus quadrature is the exact substitution of the threshold amplifier
/// strength, which keeps the `kappa` on the `(2 - e^{-2r})` numerator term.
pub fn output_variances(p: &SystemParams) -> Result<QuadraturePair> {
    let (_, stab) = require_not_above(p, "output quadrature variance")?;
    check_transmission(p)?;
    let (a, k, b, e) = (p.linear_gain, p.kappa, p.beta, p.epsilon);
    let bb = p.big_b();
    let r2 = 2.0 * p.squeeze_r;
    let (b2, b3) = (b * b, b.powi(3));

    let num = 2.0 * bb * (2.0 * e + k * (1.0 - (-r2).exp())) + a * (4.0 * b - 3.0 * b2 + b3);
    let den = 2.0 * (k + 2.0 * e) * bb + a * (4.0 * b + b3);
    let minus = 1.0 - k * num / den - (1.0 - k) * (1.0 - (-r2).exp());
    let minus = guard_positive("output minus-quadrature variance", minus)?;

    let plus = match stab {
        Stability::At => MaybeDivergent::Divergent,
        _ => {
            let num = 2.0 * bb * (2.0 * e + k * r2.exp_m1()) + a * (4.0 - 2.0 * b + b2 + b3);
            let den = 2.0 * (k - 2.0 * e) * bb + a * (2.0 * b - b3);
            let v = 1.0 + k * num / den + (1.0 - k) * r2.exp_m1();
            MaybeDivergent::Finite(guard_positive("output plus-quadrature variance", v)?)
        }
    };
    Ok(QuadraturePair { plus, minus })
}

/// Threshold output minus-quadrature variance in its uncorrected shape, without the
/// `kappa` on the `(2 - e^{-2r})` term. Unguarded: used only for reporting.
pub fn output_minus_threshold_uncorrected(p: &SystemParams) -> Result<f64> {
    check_transmission(p)?;
    let (a, k, b) = (p.linear_gain, p.kappa, p.beta);
    let bb = p.big_b();
    let em = (-2.0 * p.squeeze_r).exp();
    let frac = (2.0 * bb * (2.0 - em) + a * (6.0 * b - 3.0 * b * b)) / (4.0 * k * bb + 6.0 * a * b);
    Ok(1.0 - k * frac - (1.0 - k) * (1.0 - em))
}

/// Same quantity with the `kappa` restored, written out explicitly.
pub fn output_minus_threshold_corrected(p: &SystemParams) -> Result<f64> {
    check_transmission(p)?;
    let (a, k, b) = (p.linear_gain, p.kappa, p.beta);
    let bb = p.big_b();
    let em = (-2.0 * p.squeeze_r).exp();
    let frac = (2.0 * bb * k * (2.0 - em) + a * (6.0 * b - 3.0 * b * b)) / (4.0 * k * bb + 6.0 * a * b);
    Ok(1.0 - k * frac - (1.0 - k) * (1.0 - em))
}

/// Steady quadrature moments `<alpha_+^2>` and `<alpha_-^2>` from the
/// noise weights and decay rates.
pub fn steady_quadrature_moments(c: &DerivedCoefficients) -> (f64, f64) {
    let plus = (c.noise_ff() + c.noise_ffstar()) / c.lambda_minus;
    let minus = (c.noise_ff() - c.noise_ffstar()) / c.lambda_plus;
    (plus, minus)
}

/// Output variances assembled from the steady quadrature moments and the
/// input-output correlations, `1 +- [kappa <a_+-^2> - 2 kappa (M+-N) + 2 (M+-N)]`.
pub fn output_variances_via_moments(p: &SystemParams) -> Result<QuadraturePair> {
    let c = require_below(p, "output quadrature variance (moment route)")?;
    check_transmission(p)?;
    let (ap, am) = steady_quadrature_moments(&c);
    let k = p.kappa;
    let (sp, sm) = (c.m + c.n, c.m - c.n);
    let plus = 1.0 + (k * ap - 2.0 * k * sp + 2.0 * sp);
    let minus = 1.0 - (k * am - 2.0 * k * sm + 2.0 * sm);
    Ok(QuadraturePair {
        plus: MaybeDivergent::Finite(plus),
        minus,
    })
}

/// Output squeezing spectra `(S_+, S_-)` on `omega`. At threshold the plus
/// spectrum is flagged divergent at `omega = 0`.
pub fn squeezing_spectrum_output(p: &SystemParams, omega: &[f64]) -> Result<(SpectrumSeries, SpectrumSeries)> {
    check_transmission(p)?;
    let (_, stab) = require_not_above(p, "squeezing spectrum")?;
    let (a, k, b, e) = (p.linear_gain, p.kappa, p.beta, p.epsilon);
    let bb = p.big_b();
    let q = a / ((1.0 + b * b) * (4.0 + b * b));
    let r2 = 2.0 * p.squeeze_r;
    let b3 = b.powi(3);

    let lm = if stab == Stability::At { 0.0 } else { width_minus(p) };
    let lp = width_plus(p);
    let num_p = 2.0 * k * (e + q * (-2.0 * b + b3)) + k * a * (4.0 + b * b) * (-r2).exp() / (2.0 * bb);
    let num_m = 2.0 * k * (e + q * (4.0 * b + b3)) - 3.0 * k * a * b * b * r2.exp() / (2.0 * bb);

    let mut plus = Vec::with_capacity(omega.len());
    let mut minus = Vec::with_capacity(omega.len());
    for &w in omega {
        let den_p = lm * lm + w * w;
        plus.push(if den_p == 0.0 {
            MaybeDivergent::Divergent
        } else {
            MaybeDivergent::Finite(r2.exp() * (1.0 + num_p / den_p))
        });
        minus.push(MaybeDivergent::Finite((-r2).exp() * (1.0 - num_m / (lp * lp + w * w))));
    }
    Ok((
        SpectrumSeries {
            kind: SpectrumKind::SqueezingPlus,
            omega: omega.to_vec(),
            values: plus,
            std_err: None,
        },
        SpectrumSeries {
            kind: SpectrumKind::SqueezingMinus,
            omega: omega.to_vec(),
            values: minus,
            std_err: None,
        },
    ))
}

/// Time argument for the photon-number queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhotonTime {
    SteadyState,
    At(f64),
}

/// `(1 - e^{-2 lambda t}) / (4 lambda)`, continuous through `lambda = 0`.
fn relaxation(lambda: f64, t: f64) -> f64 {
    let x = 2.0 * lambda * t;
    if x.abs() < 1e-8 {
        t / 2.0 * (1.0 - x / 2.0)
    } else {
        -(-x).exp_m1() / (4.0 * lambda)
    }
}

/// Weights of the two exponentials in `<alpha*(t) alpha(t+tau)>`.
pub fn photon_weights(c: &DerivedCoefficients) -> (f64, f64) {
    let slow = (2.0 * c.cal_a - 2.0 * c.cal_d + c.epsilon) / (4.0 * c.lambda_minus);
    let fast = (2.0 * c.cal_a + 2.0 * c.cal_d - c.epsilon) / (4.0 * c.lambda_plus);
    (slow, fast)
}

/// Mean intracavity photon number, from vacuum at `t = 0`.
pub fn mean_photon_cavity(p: &SystemParams, time: PhotonTime) -> Result<f64> {
    match time {
        PhotonTime::SteadyState => {
            let c = require_below(p, "steady-state mean photon number")?;
            let (w1, w2) = photon_weights(&c);
            Ok(w1 + w2)
        }
        PhotonTime::At(t) => {
            if !(t >= 0.0) {
                return Err(Error::Domain(format!("time must be >= 0, got {t}")));
            }
            let c = derive_coefficients(p);
            let s = 2.0 * c.cal_a - 2.0 * c.cal_d + c.epsilon;
            let f = 2.0 * c.cal_a + 2.0 * c.cal_d - c.epsilon;
            Ok(s * relaxation(c.lambda_minus, t) + f * relaxation(c.lambda_plus, t))
        }
    }
}

/// Steady mean photon number from the uncorrected closed form, with the
/// flipped sign on the `kappa (e^{-2r} - 1)` term. Reporting only.
pub fn mean_photon_uncorrected(p: &SystemParams) -> Result<f64> {
    require_below(p, "steady-state mean photon number")?;
    let (a, k, b, e) = (p.linear_gain, p.kappa, p.beta, p.epsilon);
    let bb = p.big_b();
    let r2 = 2.0 * p.squeeze_r;
    let (b2, b3) = (b * b, b.powi(3));
    let t1 = ((2.0 * e + k * r2.exp_m1()) * bb + a * (2.0 - b + b2 / 2.0 + b3 / 2.0))
        / (4.0 * bb * (k - 2.0 * e) + 2.0 * a * (2.0 * b - b3));
    let t2 = ((2.0 * e + k * (-r2).exp_m1()) * bb + a * (2.0 * b - 1.5 * b2 + b3 / 2.0))
        / (4.0 * bb * (k + 2.0 * e) + 2.0 * a * (4.0 * b + b3));
    Ok(t1 - t2)
}

/// Mean photon number of the output mode, `kappa n + (1 - kappa) N`.
pub fn mean_photon_output(p: &SystemParams, time: PhotonTime) -> Result<f64> {
    check_transmission(p)?;
    let n = mean_photon_cavity(p, time)?;
    let big_n = p.squeeze_r.sinh().powi(2);
    Ok(p.kappa * n + (1.0 - p.kappa) * big_n)
}

/// Stationary `<alpha*(t) alpha(t + tau)>` of the cavity mode.
pub fn autocorrelation_cavity(p: &SystemParams, tau: &[f64]) -> Result<Vec<f64>> {
    let c = require_below(p, "cavity autocorrelation")?;
    let (w1, w2) = photon_weights(&c);
    tau.iter()
        .map(|&t| {
            if !(t >= 0.0) {
                return Err(Error::Domain(format!("tau must be >= 0, got {t}")));
            }
            Ok(w1 * (-c.lambda_minus * t).exp() + w2 * (-c.lambda_plus * t).exp())
        })
        .collect()
}

/// Cavity power spectrum: two Lorentzians centred at zero frequency.
pub fn power_spectrum_cavity(p: &SystemParams, omega: &[f64]) -> Result<SpectrumSeries> {
    require_below(p, "cavity power spectrum")?;
    let f = cavity_power_fn(p);
    Ok(SpectrumSeries::finite(SpectrumKind::PowerCavity, omega, omega.iter().map(|&w| f(w)).collect()))
}

/// Closed-form cavity power spectrum as a function of frequency. Callers are
/// responsible for checking that `p` is below threshold.
pub(crate) fn cavity_power_fn(p: &SystemParams) -> impl Fn(f64) -> f64 {
    let (a, k, b, e) = (p.linear_gain, p.kappa, p.beta, p.epsilon);
    let r2 = 2.0 * p.squeeze_r;
    let q8 = a / ((1.0 + b * b) * (8.0 + 2.0 * b * b));
    let (b2, b3) = (b * b, b.powi(3));
    let n1 = k / 4.0 * r2.exp_m1() + e / 2.0 + q8 * (4.0 - 2.0 * b + b2 + b3);
    let n2 = k / 4.0 * (-r2).exp_m1() - e / 2.0 + q8 * (-4.0 * b + 3.0 * b2 - b3);
    let (l1, l2) = (width_minus(p), width_plus(p));
    move |w| n1 / (l1 * l1 + w * w) + n2 / (l2 * l2 + w * w)
}

/// Output power spectrum: two Lorentzians, each scaled by `kappa`, on top of a
/// flat `sinh^2 r` background.
pub fn power_spectrum_output(p: &SystemParams, omega: &[f64]) -> Result<SpectrumSeries> {
    require_below(p, "output power spectrum")?;
    check_transmission(p)?;
    let f = output_power_fn(p);
    Ok(SpectrumSeries::finite(SpectrumKind::PowerOutput, omega, omega.iter().map(|&w| f(w)).collect()))
}

pub(crate) fn output_power_fn(p: &SystemParams) -> impl Fn(f64) -> f64 {
    let (a, k, b, e) = (p.linear_gain, p.kappa, p.beta, p.epsilon);
    let r2 = 2.0 * p.squeeze_r;
    let q8 = a / ((1.0 + b * b) * (8.0 + 2.0 * b * b));
    let (b2, b3) = (b * b, b.powi(3));
    let n1 = k * ((e / 2.0 - q8 * (2.0 * b - b3)) * r2.exp() + q8 * (4.0 + b2));
    let n2 = k * (-(e / 2.0 + q8 * (4.0 * b + b3)) * (-r2).exp() + q8 * 3.0 * b2);
    let flat = p.squeeze_r.sinh().powi(2);
    let (l1, l2) = (width_minus(p), width_plus(p));
    move |w| n1 / (l1 * l1 + w * w) + n2 / (l2 * l2 + w * w) + flat
}

/// Quantities that can be minimised over `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaQuantity {
    CavityMinus,
    OutputMinus,
    SqueezingMinus { omega: f64 },
}

/// How the amplifier strength is chosen at each `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonChoice {
    Fixed(f64),
    Threshold,
}

impl EpsilonChoice {
    pub fn apply(self, p: &SystemParams) -> Result<SystemParams> {
        match self {
            EpsilonChoice::Fixed(e) => p.with_epsilon(e),
            EpsilonChoice::Threshold => p.at_threshold(),
        }
    }
}

pub fn evaluate_at_beta(q: BetaQuantity, base: &SystemParams, eps: EpsilonChoice, beta: f64) -> Result<f64> {
    let p = eps.apply(&base.with_beta(beta)?)?;
    match q {
        BetaQuantity::CavityMinus => Ok(cavity_variances(&p)?.minus),
        BetaQuantity::OutputMinus => Ok(output_variances(&p)?.minus),
        BetaQuantity::SqueezingMinus { omega } => {
            let (_, m) = squeezing_spectrum_output(&p, &[omega])?;
            m.values[0]
                .value()
                .ok_or_else(|| Error::Numerical("squeezing spectrum diverges".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRefine {
    pub coarse_points: usize,
    pub xtol: f64,
}

impl Default for GridRefine {
    fn default() -> Self {
        GridRefine {
            coarse_points: 2001,
            xtol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaMinimum {
    pub beta: f64,
    pub value: f64,
}

/// Global minimum over `beta` in `range`: a coarse scan picks the best grid
/// point (leftmost on ties), then golden-section search refines it within the
/// neighbouring grid cells.
pub fn minimize_over_beta(
    q: BetaQuantity,
    base: &SystemParams,
    eps: EpsilonChoice,
    range: (f64, f64),
    refine: GridRefine,
) -> Result<BetaMinimum> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo || lo < 0.0 {
        return Err(Error::Domain(format!("empty or invalid beta range [{lo}, {hi}]")));
    }
    if refine.coarse_points < 3 {
        return Err(Error::Domain("coarse grid needs at least 3 points".into()));
    }
    let grid = linspace(lo, hi, refine.coarse_points);
    let mut best = (0usize, f64::INFINITY);
    for (i, &b) in grid.iter().enumerate() {
        let v = evaluate_at_beta(q, base, eps, b)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    let a = grid[i.saturating_sub(1)];
    let b = grid[(i + 1).min(grid.len() - 1)];
    let (x, fx) = golden_section(|x| evaluate_at_beta(q, base, eps, x), a, b, refine.xtol)?;
    if fx < best.1 {
        Ok(BetaMinimum { beta: x, value: fx })
    } else {
        Ok(BetaMinimum {
            beta: grid[i],
            value: best.1,
        })
    }
}

/// Half width at half maximum of a spectrum peaked at `omega = 0`, after
/// subtracting a flat `background`.
pub fn hwhm<F: Fn(f64) -> f64>(spectrum: F, background: f64) -> Result<f64> {
    let peak = spectrum(0.0) - background;
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::Numerical(format!("no finite positive peak at omega = 0 (peak {peak})")));
    }
    let half = |w: f64| spectrum(w) - background - peak / 2.0;
    let mut hi = 1e-6;
    let mut steps = 0;
    while half(hi) > 0.0 {
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(Error::Numerical("spectrum does not decay to half maximum".into()));
        }
    }
    bisect(half, 0.0, hi, 1e-12)
}

/// Half width from sampled data: linear interpolation at the first crossing
/// of half maximum on the non-negative frequency side.
pub fn hwhm_of_series(series: &SpectrumSeries, background: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .omega
        .iter()
        .zip(&series.values)
        .filter(|(w, _)| **w >= 0.0)
        .map(|(w, v)| v.value().map(|v| (*w, v - background)))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Numerical("divergent sample in spectrum".into()))?;
    let (w0, peak) = *pts.first().ok_or_else(|| Error::Numerical("no non-negative frequencies".into()))?;
    if w0 != 0.0 || !(peak > 0.0) {
        return Err(Error::Numerical("series must start at omega = 0 with a positive peak".into()));
    }
    for win in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (win[0], win[1]);
        if y1 <= peak / 2.0 {
            return Ok(x0 + (y0 - peak / 2.0) * (x1 - x0) / (y0 - y1));
        }
    }
    Err(Error::Numerical("spectrum does not decay to half maximum on the grid".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerSelector {
    Cavity,
    Output,
}

/// Half width of a closed-form power spectrum (output background removed).
pub fn hwhm_closed_form(sel: PowerSelector, p: &SystemParams) -> Result<f64> {
    require_below(p, "power spectrum half width")?;
    match sel {
        PowerSelector::Cavity => hwhm(cavity_power_fn(p), 0.0),
        PowerSelector::Output => {
            check_transmission(p)?;
            hwhm(output_power_fn(p), p.squeeze_r.sinh().powi(2))
        }
    }
}
