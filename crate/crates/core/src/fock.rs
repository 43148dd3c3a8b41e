//! Truncated Fock-space evolution of the cavity-mode master equation.
//!
//! The density matrix on levels `0..=n_max` is stored densely (row-major) and
//! advanced with classical RK4. Every term of the generator is a product of at
//! most two single-band ladder operators, so the right-hand side is evaluated
//! element by element in `O(n^2)` without forming operator matrices:
//!
//! ```text
//! d rho_ik = -[A (aa+_i + aa+_k) + B (i + k)] rho_ik
//!          - (eps/2 + C) [sqrt((i+1)(i+2)) rho_{i+2,k} + sqrt((k+1)(k+2)) rho_{i,k+2}]
//!          + (eps/2 - D) [sqrt(i(i-1)) rho_{i-2,k} + sqrt(k(k-1)) rho_{i,k-2}]
//!          + 2A sqrt(ik) rho_{i-1,k-1} + 2B sqrt((i+1)(k+1)) rho_{i+1,k+1}
//!          + (C + D) [sqrt(i(k+1)) rho_{i-1,k+1} + sqrt((i+1)k) rho_{i+1,k-1}]
//! ```
//!
//! where `aa+_j = j + 1` below the cutoff and `0` at `n_max`, the truncated
//! product of the annihilation and creation matrices. With that choice the
//! truncated generator is exactly trace preserving.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moments::MomentState;
use crate::params::{derive_coefficients, DerivedCoefficients, SystemParams};

/// Default tolerance on the population of the highest retained level.
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    n_max: usize,
    rho: Vec<Complex64>,
}

impl FockState {
    pub fn vacuum(n_max: usize) -> Self {
        let d = n_max + 1;
        let mut rho = vec![Complex64::new(0.0, 0.0); d * d];
        rho[0] = Complex64::new(1.0, 0.0);
        FockState { n_max, rho }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn get(&self, i: usize, k: usize) -> Complex64 {
        self.rho[i * self.dim() + k]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for k in i..d {
                worst = worst.max((self.get(i, k) - self.get(k, i).conj()).norm());
            }
        }
        worst
    }

    pub fn tail_population(&self) -> f64 {
        self.get(self.n_max, self.n_max).re
    }

    /// Operator moments `<a>`, `<a^2>`, `<a^dagger a>`.
    pub fn moments(&self) -> MomentState {
        let d = self.dim();
        let mut a = Complex64::new(0.0, 0.0);
        let mut a2 = Complex64::new(0.0, 0.0);
        let mut n = 0.0;
        for i in 0..d {
            n += i as f64 * self.get(i, i).re;
            if i + 1 < d {
                a += ((i + 1) as f64).sqrt() * self.get(i + 1, i);
            }
            if i + 2 < d {
                a2 += (((i + 1) * (i + 2)) as f64).sqrt() * self.get(i + 2, i);
            }
        }
        MomentState {
            mean_alpha: a,
            mean_alpha_sq: a2,
            mean_n: n,
        }
    }

    /// Smallest eigenvalue of the Hermitian part of the density matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, k| 0.5 * (self.get(i, k) + self.get(k, i).conj()));
        m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Precomputed generator coefficients for the element-wise right-hand side.
struct Generator {
    d: usize,
    sqrt: Vec<f64>,
    diag: Vec<f64>,
    bdiag: Vec<f64>,
    lower2: f64,
    raise2: f64,
    gain: f64,
    loss: f64,
    cross: f64,
}

impl Generator {
    fn new(c: &DerivedCoefficients, n_max: usize) -> Self {
        let d = n_max + 1;
        let sqrt: Vec<f64> = (0..d + 2).map(|j| (j as f64).sqrt()).collect();
        // a a^dagger truncated, and a^dagger a
        let diag = (0..d).map(|j| if j < n_max { (j + 1) as f64 } else { 0.0 }).collect();
        let bdiag = (0..d).map(|j| j as f64).collect();
        Generator {
            d,
            sqrt,
            diag,
            bdiag,
            lower2: -(c.epsilon / 2.0 + c.cal_c),
            raise2: c.epsilon / 2.0 - c.cal_d,
            gain: 2.0 * c.cal_a,
            loss: 2.0 * c.cal_b,
            cross: c.cal_c + c.cal_d,
        }
    }

    /// Gershgorin-style bound on the generator's spectral radius.
    fn rate_bound(&self, c: &DerivedCoefficients) -> f64 {
        let n = (self.d + 1) as f64;
        2.0 * (c.cal_a.abs() + c.cal_b.abs()) * n + 2.0 * (self.lower2.abs() + self.raise2.abs()) * n + (self.gain.abs() + self.loss.abs() + 2.0 * self.cross.abs()) * n
    }

    fn apply(&self, c: &DerivedCoefficients, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.d;
        let s = &self.sqrt;
        let at = |i: usize, k: usize| rho[i * d + k];
        for i in 0..d {
            for k in 0..d {
                let mut acc = -(c.cal_a * (self.diag[i] + self.diag[k]) + c.cal_b * (self.bdiag[i] + self.bdiag[k])) * at(i, k);
                if i + 2 < d {
                    acc += self.lower2 * s[i + 1] * s[i + 2] * at(i + 2, k);
                }
                if k + 2 < d {
                    acc += self.lower2 * s[k + 1] * s[k + 2] * at(i, k + 2);
                }
                if i >= 2 {
                    acc += self.raise2 * s[i] * s[i - 1] * at(i - 2, k);
                }
                if k >= 2 {
                    acc += self.raise2 * s[k] * s[k - 1] * at(i, k - 2);
                }
                if i >= 1 && k >= 1 {
                    acc += self.gain * s[i] * s[k] * at(i - 1, k - 1);
                }
                if i + 1 < d && k + 1 < d {
                    acc += self.loss * s[i + 1] * s[k + 1] * at(i + 1, k + 1);
                }
                if i >= 1 && k + 1 < d {
                    acc += self.cross * s[i] * s[k + 1] * at(i - 1, k + 1);
                }
                if i + 1 < d && k >= 1 {
                    acc += self.cross * s[i + 1] * s[k] * at(i + 1, k - 1);
                }
                out[i * d + k] = acc;
            }
        }
    }
}

/// Right-hand side of the master equation applied to `state`.
pub fn master_rhs(params: &SystemParams, state: &FockState) -> FockState {
    let c = derive_coefficients(params);
    let g = Generator::new(&c, state.n_max);
    let mut out = FockState {
        n_max: state.n_max,
        rho: vec![Complex64::new(0.0, 0.0); state.rho.len()],
    };
    g.apply(&c, &state.rho, &mut out.rho);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockConfig {
    pub n_max: usize,
    pub t_end: f64,
    pub dt: f64,
    pub tail_tol: f64,
    /// Moments and diagnostics are recorded every this many steps.
    pub record_every: usize,
    /// Run the eigenvalue positivity check at every record.
    pub check_positivity: bool,
}

impl FockConfig {
    /// Default configuration: `n_max = ceil(10 n + 20)` for the expected
    /// photon number `n`, and a step inside the RK4 stability region.
    pub fn for_params(params: &SystemParams, expected_n: f64, t_end: f64) -> Self {
        let n_max = default_n_max(expected_n);
        FockConfig {
            n_max,
            t_end,
            dt: default_dt(params, n_max),
            tail_tol: DEFAULT_TAIL_TOL,
            record_every: 100,
            check_positivity: true,
        }
    }
}

pub fn default_n_max(expected_n: f64) -> usize {
    (10.0 * expected_n.max(0.0) + 20.0).ceil() as usize
}

/// Step size for the Fock oracle: inside the RK4 stability region of the
/// truncated generator and at most `1e-2` of the fastest physical rate.
pub fn default_dt(params: &SystemParams, n_max: usize) -> f64 {
    let c = derive_coefficients(params);
    let g = Generator::new(&c, n_max);
    let stable = 2.0 / g.rate_bound(&c).max(f64::MIN_POSITIVE);
    let accurate = 1e-2 / c.lambda_plus.max(params.kappa).max(c.cal_a);
    stable.min(accurate)
}

/// Cutoff at which the top population would fall below `tol`, extrapolating
/// the geometric decay of the two-step population ratio at the current top.
pub fn required_n_max(state: &FockState, tol: f64) -> usize {
    let n = state.n_max;
    let top = state.get(n, n).re.max(f64::MIN_POSITIVE);
    let below = state.get(n - 2, n - 2).re.max(f64::MIN_POSITIVE);
    let q = (top / below).sqrt().clamp(1e-3, 0.98);
    let extra = ((tol / top).ln() / q.ln()).ceil().max(0.0) as usize;
    n + extra.max(5) + 2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockDiagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    pub max_tail_population: f64,
    /// Smallest eigenvalue seen at the checked records (`+inf` if unchecked).
    pub min_eigenvalue: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockRun {
    pub times: Vec<f64>,
    pub moments: Vec<MomentState>,
    pub diagnostics: FockDiagnostics,
    pub final_state: FockState,
}

/// Evolves the vacuum under the master equation with RK4.
pub fn fock_evolve(params: &SystemParams, n_max: usize, t_end: f64, dt: f64) -> Result<FockRun> {
    fock_evolve_with(
        params,
        &FockConfig {
            n_max,
            t_end,
            dt,
            tail_tol: DEFAULT_TAIL_TOL,
            record_every: 100,
            check_positivity: true,
        },
    )
}

pub fn fock_evolve_with(params: &SystemParams, cfg: &FockConfig) -> Result<FockRun> {
    if cfg.n_max < 4 {
        return Err(Error::Domain(format!("n_max must be >= 4, got {}", cfg.n_max)));
    }
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be > 0, got {}", cfg.dt)));
    }
    if !(cfg.t_end >= 0.0 && cfg.t_end.is_finite()) {
        return Err(Error::Domain(format!("t_end must be >= 0, got {}", cfg.t_end)));
    }
    let c = derive_coefficients(params);
    let gen = Generator::new(&c, cfg.n_max);
    let steps = if cfg.t_end > 0.0 { (cfg.t_end / cfg.dt).round().max(1.0) as usize } else { 0 };
    let h = if steps > 0 { cfg.t_end / steps as f64 } else { 0.0 };
    let every = cfg.record_every.max(1);

    let mut state = FockState::vacuum(cfg.n_max);
    let len = state.rho.len();
    let zero = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; len], vec![zero; len], vec![zero; len], vec![zero; len]);
    let mut tmp = vec![zero; len];

    let mut diag = FockDiagnostics {
        max_trace_drift: 0.0,
        max_hermiticity_error: 0.0,
        max_tail_population: 0.0,
        min_eigenvalue: f64::INFINITY,
        steps,
    };
    let mut times = vec![0.0];
    let mut moments = vec![state.moments()];

    let record = |state: &FockState, diag: &mut FockDiagnostics| -> Result<()> {
        diag.max_trace_drift = diag.max_trace_drift.max((state.trace() - 1.0).norm());
        diag.max_hermiticity_error = diag.max_hermiticity_error.max(state.hermiticity_error());
        let tail = state.tail_population();
        diag.max_tail_population = diag.max_tail_population.max(tail);
        if tail > cfg.tail_tol {
            return Err(Error::Truncation {
                n_max: cfg.n_max,
                tail,
                tolerance: cfg.tail_tol,
                required: required_n_max(state, cfg.tail_tol),
            });
        }
        if cfg.check_positivity {
            diag.min_eigenvalue = diag.min_eigenvalue.min(state.min_eigenvalue());
        }
        Ok(())
    };

    for step in 1..=steps {
        gen.apply(&c, &state.rho, &mut k1);
        for j in 0..len {
            tmp[j] = state.rho[j] + k1[j] * (h / 2.0);
        }
        gen.apply(&c, &tmp, &mut k2);
        for j in 0..len {
            tmp[j] = state.rho[j] + k2[j] * (h / 2.0);
        }
        gen.apply(&c, &tmp, &mut k3);
        for j in 0..len {
            tmp[j] = state.rho[j] + k3[j] * h;
        }
        gen.apply(&c, &tmp, &mut k4);
        for j in 0..len {
            state.rho[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
        }
        if step % every == 0 || step == steps {
            if !state.rho.iter().all(|z| z.is_finite()) {
                return Err(Error::Numerical(format!("non-finite density matrix at t = {}", step as f64 * h)));
            }
            record(&state, &mut diag)?;
            times.push(step as f64 * h);
            moments.push(state.moments());
        }
    }
    if steps == 0 {
        record(&state, &mut diag)?;
    }
    Ok(FockRun {
        times,
        moments,
        diagnostics: diag,
        final_state: state,
    })
}
