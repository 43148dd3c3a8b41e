//! Correlation-to-spectrum transforms and the power-spectrum normalisation
//! check.
//!
//! `S(omega) = 2 Re int_0^inf c(tau) e^{i omega tau} dtau` is evaluated with the
//! trapezoid rule on the sampled correlation, the first Euler-Maclaurin end
//! correction, and, when the series has not decayed, an exponential tail
//! `c(T) e^{-mu (tau - T)}` whose contribution `c(T) e^{i omega T} / (mu - i omega)`
//! is added in closed form.

use num_complex::Complex64;

use crate::analytics::{cavity_power_fn, mean_photon_cavity, PhotonTime, SpectrumKind, SpectrumSeries};
use crate::error::{Error, Result};
use crate::langevin::CorrelationEstimate;
use crate::numerics::{adaptive_simpson, linspace};
use crate::params::{require_below, SystemParams};

type C64 = Complex64;

/// Relative size of the final sample below which a series counts as decayed.
pub const DECAY_TOL: f64 = 1e-10;

/// Default number of lag points.
pub const DEFAULT_TAU_POINTS: usize = 4096;
/// Default number of frequency points.
pub const DEFAULT_OMEGA_POINTS: usize = 1024;

/// A correlation function sampled on a uniform lag grid starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries {
    tau: Vec<f64>,
    values: Vec<C64>,
    std_err: Option<Vec<f64>>,
    batches: Option<Vec<Vec<C64>>>,
}

impl CorrelationSeries {
    pub fn new(tau: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        if tau.len() != values.len() {
            return Err(Error::Domain(format!("{} lags but {} values", tau.len(), values.len())));
        }
        if tau.len() < 3 {
            return Err(Error::Domain("a correlation series needs at least 3 points".into()));
        }
        if tau[0] != 0.0 {
            return Err(Error::Domain(format!("lag grid must start at 0, got {}", tau[0])));
        }
        let h = tau[1];
        if !(h > 0.0) {
            return Err(Error::Domain("lag grid must be strictly increasing".into()));
        }
        for (j, &t) in tau.iter().enumerate() {
            if (t - j as f64 * h).abs() > 1e-12 * (j as f64 * h).max(1.0) {
                return Err(Error::Domain(format!("lag grid is not uniform at index {j}")));
            }
        }
        Ok(CorrelationSeries {
            tau,
            values,
            std_err: None,
            batches: None,
        })
    }

    pub fn from_real(tau: Vec<f64>, values: &[f64]) -> Result<Self> {
        Self::new(tau, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn with_std_err(mut self, std_err: Vec<f64>) -> Result<Self> {
        if std_err.len() != self.tau.len() {
            return Err(Error::Domain("standard errors do not match the lag grid".into()));
        }
        self.std_err = Some(std_err);
        Ok(self)
    }

    /// Attaches per-batch estimates; the spectrum's standard error is then the
    /// spread of the per-batch spectra.
    pub fn with_batches(mut self, batches: Vec<Vec<C64>>) -> Result<Self> {
        if batches.len() < 2 || batches.iter().any(|b| b.len() != self.tau.len()) {
            return Err(Error::Domain("need at least two batches matching the lag grid".into()));
        }
        self.batches = Some(batches);
        Ok(self)
    }

    /// Converts a Monte Carlo estimate, keeping its errors and batches.
    pub fn from_estimate(est: &CorrelationEstimate) -> Result<Self> {
        Self::new(est.tau.clone(), est.values.clone())?
            .with_std_err(est.std_err.clone())?
            .with_batches(est.batches.clone())
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        self.tau[1]
    }

    /// Whether the last sample is negligible: below `DECAY_TOL` of the first,
    /// or within four standard errors of zero for a noisy series.
    pub fn is_decayed(&self) -> bool {
        let last = *self.values.last().expect("non-empty");
        if last.norm() <= DECAY_TOL * self.values[0].norm() {
            return true;
        }
        match &self.std_err {
            Some(se) => last.re.abs() <= 4.0 * se[se.len() - 1],
            None => false,
        }
    }
}

/// How the integral beyond the last lag is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailClosure {
    /// The series must have decayed; otherwise an error.
    Require,
    /// Append an exponential tail fitted over the last decade of decay.
    Exponential,
    /// Exponential tail only when the series has not decayed.
    Auto,
}

/// Decay rate fitted between the last sample and the latest earlier sample
/// at least ten times larger in magnitude (or the earliest sample if none).
fn fit_tail_rate(tau: &[f64], v: &[C64]) -> Result<f64> {
    let n = v.len();
    let end = v[n - 1];
    let j0 = (0..n - 1).rev().find(|&j| v[j].norm() >= 10.0 * end.norm()).unwrap_or(0);
    let ratio = (v[j0] / end).re;
    let mu = ratio.ln() / (tau[n - 1] - tau[j0]);
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Numerical(format!(
            "cannot fit a decaying exponential tail (ratio {ratio} over the last decade)"
        )));
    }
    Ok(mu)
}

fn fd_slope(v: &[C64], h: f64, at_end: bool) -> C64 {
    // third-order one-sided difference
    let (a, b, c, d) = if at_end {
        let n = v.len();
        (v[n - 1], v[n - 2], v[n - 3], v[n - 4])
    } else {
        (v[0], v[1], v[2], v[3])
    };
    let s = (-11.0 * a + 18.0 * b - 9.0 * c + 2.0 * d) / (6.0 * h);
    if at_end {
        -s
    } else {
        s
    }
}

/// `int_0^T c(tau) e^{i omega tau} dtau` plus an optional tail beyond `T`.
fn one_sided(tau: &[f64], v: &[C64], omega: f64, tail_rate: Option<f64>) -> C64 {
    let n = v.len();
    let h = tau[1];
    let t_end = tau[n - 1];
    let mut sum = C64::new(0.0, 0.0);
    for (j, &c) in v.iter().enumerate() {
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        sum += w * c * C64::from_polar(1.0, omega * tau[j]);
    }
    let mut total = sum * h;
    if n >= 4 {
        let i = C64::new(0.0, 1.0);
        let end_phase = C64::from_polar(1.0, omega * t_end);
        let d_end = (fd_slope(v, h, true) + i * omega * v[n - 1]) * end_phase;
        let d_start = fd_slope(v, h, false) + i * omega * v[0];
        total -= h * h / 12.0 * (d_end - d_start);
    }
    if let Some(mu) = tail_rate {
        total += v[n - 1] * C64::from_polar(1.0, omega * t_end) / C64::new(mu, -omega);
    }
    total
}

/// `2 Re` of the one-sided transform of `corr` on `omega`.
pub fn spectrum_from_correlation(corr: &CorrelationSeries, omega: &[f64], tail: TailClosure) -> Result<SpectrumSeries> {
    let decayed = corr.is_decayed();
    let use_tail = match tail {
        TailClosure::Require if !decayed => {
            return Err(Error::Numerical(format!(
                "correlation has not decayed by tau = {} and no tail closure was requested",
                corr.tau[corr.tau.len() - 1]
            )))
        }
        TailClosure::Require => false,
        TailClosure::Exponential => true,
        TailClosure::Auto => !decayed,
    };
    let rate = if use_tail { Some(fit_tail_rate(&corr.tau, &corr.values)?) } else { None };
    let transform = |v: &[C64]| -> Vec<f64> { omega.iter().map(|&w| 2.0 * one_sided(&corr.tau, v, w, rate).re).collect() };
    let values = transform(&corr.values);
    let mut out = SpectrumSeries::finite(SpectrumKind::Transformed, omega, values);
    if let Some(batches) = &corr.batches {
        let per: Vec<Vec<f64>> = batches.iter().map(|b| transform(b)).collect();
        let nb = per.len() as f64;
        let se = (0..omega.len())
            .map(|k| {
                let mean = per.iter().map(|s| s[k]).sum::<f64>() / nb;
                let var = per.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (nb - 1.0);
                (var / nb).sqrt()
            })
            .collect();
        out.std_err = Some(se);
    } else if let Some(se) = &corr.std_err {
        // treats lags as independent, which understates the error of a
        // correlated series; batches are preferred when available
        let h = corr.spacing();
        let n = se.len();
        let s = omega
            .iter()
            .map(|&w| {
                let var: f64 = se
                    .iter()
                    .enumerate()
                    .map(|(j, &e)| {
                        let wt = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                        (2.0 * wt * h * (w * corr.tau[j]).cos() * e).powi(2)
                    })
                    .sum();
                var.sqrt()
            })
            .collect();
        out.std_err = Some(s);
    }
    Ok(out)
}

/// Default lag grid: `DEFAULT_TAU_POINTS` points over `[0, 20 / lambda_-]`,
/// refined if needed so that `omega_max * h <= 0.25`.
pub fn default_tau_grid(params: &SystemParams) -> Result<Vec<f64>> {
    let c = require_below(params, "lag grid")?;
    let span = 20.0 / c.lambda_minus;
    let omega_max = 10.0 * c.lambda_plus;
    let needed = (span * omega_max / 0.25).ceil() as usize + 1;
    Ok(linspace(0.0, span, DEFAULT_TAU_POINTS.max(needed)))
}

/// Default frequency grid: `DEFAULT_OMEGA_POINTS` points over `[-10, 10] lambda_+`.
pub fn default_omega_grid(params: &SystemParams) -> Result<Vec<f64>> {
    let c = require_below(params, "frequency grid")?;
    Ok(linspace(-10.0 * c.lambda_plus, 10.0 * c.lambda_plus, DEFAULT_OMEGA_POINTS))
}

/// The closed-form cavity autocorrelation on `tau` as a series.
pub fn analytic_correlation(params: &SystemParams, tau: Vec<f64>) -> Result<CorrelationSeries> {
    let v = crate::analytics::autocorrelation_cavity(params, &tau)?;
    CorrelationSeries::from_real(tau, &v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsevalReport {
    /// `int S(omega) d omega / 2 pi` of the closed-form cavity power spectrum.
    pub integral: f64,
    /// Steady mean photon number.
    pub n_bar: f64,
    /// `|integral - n_bar| / n_bar`, or `|integral|` when `n_bar = 0`.
    pub relative_gap: f64,
}

/// Integrates the cavity power spectrum over all frequencies and compares
/// with the steady mean photon number.
pub fn parseval_check(params: &SystemParams) -> Result<ParsevalReport> {
    let c = require_below(params, "Parseval check")?;
    let s = cavity_power_fn(params);
    let n_bar = mean_photon_cavity(params, PhotonTime::SteadyState)?;
    let limit = 1e3 * c.lambda_plus;
    let scale = (s(0.0) * c.lambda_minus).abs().max(f64::MIN_POSITIVE);
    // geometric breakpoints resolve the narrow peak at zero
    let mut edges = vec![0.0];
    let mut x = c.lambda_minus.min(c.lambda_plus) / 8.0;
    while x < limit {
        edges.push(x);
        x *= 4.0;
    }
    edges.push(limit);
    let half: f64 = edges.windows(2).map(|w| adaptive_simpson(&s, w[0], w[1], 1e-12 * scale)).sum();
    // beyond the cut-off S ~ K / omega^2
    let tail = s(limit) * limit;
    let integral = 2.0 * (half + tail) / (2.0 * std::f64::consts::PI);
    let relative_gap = if n_bar != 0.0 { ((integral - n_bar) / n_bar).abs() } else { integral.abs() };
    Ok(ParsevalReport {
        integral,
        n_bar,
        relative_gap,
    })
}
