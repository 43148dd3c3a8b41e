//! Monte Carlo solution of the c-number Langevin equation in a doubled phase
//! space.
//!
//! The normally ordered noise of this model has `<f f> = eps - 2D` and
//! `<f f*> = 2A`. Once the reservoir is squeezed the implied real-noise
//! covariance is indefinite, so `alpha` and its conjugate are promoted to two
//! independent complex fields `(alpha, alpha_c)` driven by `g = L xi sqrt(dt)`
//! where `L L^T = C = [[eps - 2D, 2A], [2A, eps - 2D]]` and `xi` are real unit
//! Gaussians. The holomorphic averages `<alpha^2>`, `<alpha_c alpha>` and
//! `<alpha_c^2>` then reproduce the normally ordered moments.
//!
//! Each step advances the linear drift exactly (the sum and difference modes
//! decay with `lambda_-` and `lambda_+`) and adds the Gaussian increment at the
//! end of the step, an exponential Euler-Maruyama scheme of weak order one.
//! Trajectory `i` draws from the ChaCha8 stream `i` of the run seed, and
//! ensemble sums are reduced over a fixed binary split of the index range, so
//! results do not depend on thread count or scheduling.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::analytics::{MaybeDivergent, QuadraturePair};
use crate::error::{Error, Result};
use crate::params::{derive_coefficients, require_below, require_not_above, DerivedCoefficients, SystemParams};

type C64 = Complex64;

/// Noise weights of the Langevin force and their split into the squeezed
/// reservoir part and the remainder contributed by the gain medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionSpec {
    /// `<f f>` weight, `eps - 2D`.
    pub d_ff: f64,
    /// `<f f*>` weight, `2A`.
    pub d_ffstar: f64,
    /// Reservoir `<f_R f_R*>` weight, `kappa N`.
    pub reservoir_n: f64,
    /// Reservoir `<f_R f_R>` weight, `kappa M`.
    pub reservoir_m: f64,
    /// Gain-medium remainder of `<f f*>`, `2A - kappa N`.
    pub gain_ffstar: f64,
    /// Gain-medium remainder of `<f f>`, `eps - 2D - kappa M`.
    pub gain_ff: f64,
}

impl DiffusionSpec {
    pub fn new(c: &DerivedCoefficients, params: &SystemParams) -> Self {
        let k = params.kappa;
        let d_ff = c.noise_ff();
        let d_ffstar = c.noise_ffstar();
        DiffusionSpec {
            d_ff,
            d_ffstar,
            reservoir_n: k * c.n,
            reservoir_m: k * c.m,
            gain_ffstar: d_ffstar - k * c.n,
            gain_ff: d_ff - k * c.m,
        }
    }

    /// The symmetric diffusion matrix in the `(alpha, alpha_c)` basis.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.d_ff, self.d_ffstar], [self.d_ffstar, self.d_ff]]
    }
}

/// Complex 2x2 matrix, row major.
pub type Factor = [[C64; 2]; 2];

/// Complex `L` with `L L^T = C` for a real symmetric 2x2 `C`.
pub fn factor_symmetric(c: [[f64; 2]; 2]) -> Factor {
    let z = C64::new(0.0, 0.0);
    let (c11, c12, c22) = (C64::new(c[0][0], 0.0), C64::new(c[0][1], 0.0), C64::new(c[1][1], 0.0));
    if c11.norm() >= c22.norm() && c11.norm() > 0.0 {
        let l11 = c11.sqrt();
        let l21 = c12 / l11;
        [[l11, z], [l21, (c22 - l21 * l21).sqrt()]]
    } else if c22.norm() > 0.0 {
        let l22 = c22.sqrt();
        let l12 = c12 / l22;
        [[(c11 - l12 * l12).sqrt(), l12], [z, l22]]
    } else {
        // zero diagonal: [[0, q], [q, 0]] = s [[1, i], [1, -i]] [[1, 1], [i, -i]] s
        let s = C64::new(c12.re / 2.0, 0.0).sqrt();
        let i = C64::new(0.0, 1.0);
        [[s, s * i], [s, -s * i]]
    }
}

/// `L L^T` for a complex 2x2 `L`.
pub fn reconstruct(l: &Factor) -> Factor {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = l[i][0] * l[j][0] + l[i][1] * l[j][1];
        }
    }
    out
}

pub fn build_diffusion_factor(coeffs: &DerivedCoefficients, params: &SystemParams) -> Factor {
    factor_symmetric(DiffusionSpec::new(coeffs, params).matrix())
}

/// Whether a single complex field driven by real noise could carry the
/// force: it needs non-negative variances for both components of
/// `f = x + i y` and for both principal directions of the reservoir force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Representability {
    pub var_x: f64,
    pub var_y: f64,
    pub reservoir_major: f64,
    pub reservoir_minor: f64,
    pub representable: bool,
}

pub fn classical_representability(params: &SystemParams) -> Representability {
    let c = derive_coefficients(params);
    let var_x = (c.noise_ffstar() + c.noise_ff()) / 2.0;
    let var_y = (c.noise_ffstar() - c.noise_ff()) / 2.0;
    let reservoir_major = params.kappa * (c.n + c.m) / 2.0;
    let reservoir_minor = params.kappa * (c.n - c.m) / 2.0;
    Representability {
        var_x,
        var_y,
        reservoir_major,
        reservoir_minor,
        representable: var_x >= 0.0 && var_y >= 0.0 && reservoir_major >= 0.0 && reservoir_minor >= 0.0,
    }
}

/// Default step, `1e-3 / lambda_+`.
pub fn default_dt(params: &SystemParams) -> f64 {
    1e-3 / derive_coefficients(params).lambda_plus
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    /// Number of equally spaced recording times after `t = 0`.
    pub n_records: usize,
    /// Initial amplitude; `alpha_c(0)` is its conjugate.
    pub alpha0: C64,
}

impl EnsembleConfig {
    pub fn new(n_traj: usize, t_end: f64, dt: f64, seed: u64) -> Self {
        EnsembleConfig {
            n_traj,
            t_end,
            dt,
            seed,
            n_records: 1,
            alpha0: C64::new(0.0, 0.0),
        }
    }
}

/// Ensemble means (complex) and standard errors of their real parts at each
/// recording time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean_alpha: Vec<C64>,
    pub mean_alpha_sq: Vec<C64>,
    /// `<alpha_c alpha>`, the estimate of `<alpha* alpha>`.
    pub mean_n: Vec<C64>,
    /// `<alpha_c^2>`, the estimate of `<alpha*^2>`.
    pub mean_conj_sq: Vec<C64>,
    /// `<(alpha_c + alpha)^2>` and `<(alpha_c - alpha)^2>` (real parts).
    pub mean_quad_plus: Vec<f64>,
    pub mean_quad_minus: Vec<f64>,
    pub se_alpha: Vec<f64>,
    pub se_alpha_sq: Vec<f64>,
    pub se_n: Vec<f64>,
    pub se_conj_sq: Vec<f64>,
    pub se_quad_plus: Vec<f64>,
    pub se_quad_minus: Vec<f64>,
    pub n_traj: usize,
    pub seed: u64,
    pub dt: f64,
}

/// Mean with standard error for a real estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    /// Distance from `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = self.mean - target;
        if self.std_err > 0.0 {
            d.abs() / self.std_err
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

impl EnsembleStats {
    pub fn final_index(&self) -> usize {
        self.times.len() - 1
    }

    pub fn n_at(&self, i: usize) -> Estimate {
        Estimate { mean: self.mean_n[i].re, std_err: self.se_n[i] }
    }

    pub fn alpha_sq_at(&self, i: usize) -> Estimate {
        Estimate { mean: self.mean_alpha_sq[i].re, std_err: self.se_alpha_sq[i] }
    }

    pub fn quad_plus_at(&self, i: usize) -> Estimate {
        Estimate { mean: self.mean_quad_plus[i], std_err: self.se_quad_plus[i] }
    }

    pub fn quad_minus_at(&self, i: usize) -> Estimate {
        Estimate { mean: self.mean_quad_minus[i], std_err: self.se_quad_minus[i] }
    }
}

/// Per-trajectory stepping state.
struct Stepper {
    decay_sum: f64,
    decay_diff: f64,
    l: Factor,
    sqrt_dt: f64,
}

impl Stepper {
    fn new(c: &DerivedCoefficients, params: &SystemParams, dt: f64) -> Self {
        Stepper {
            decay_sum: (-c.lambda_minus * dt).exp(),
            decay_diff: (-c.lambda_plus * dt).exp(),
            l: build_diffusion_factor(c, params),
            sqrt_dt: dt.sqrt(),
        }
    }

    #[inline]
    fn step(&self, a: &mut C64, ac: &mut C64, rng: &mut ChaCha8Rng) {
        let s = (*a + *ac) * self.decay_sum;
        let d = (*a - *ac) * self.decay_diff;
        let x1: f64 = StandardNormal.sample(rng);
        let x2: f64 = StandardNormal.sample(rng);
        let (x1, x2) = (x1 * self.sqrt_dt, x2 * self.sqrt_dt);
        *a = 0.5 * (s + d) + self.l[0][0] * x1 + self.l[0][1] * x2;
        *ac = 0.5 * (s - d) + self.l[1][0] * x1 + self.l[1][1] * x2;
    }
}

fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Running sums of `values` and of their squared real parts.
#[derive(Debug, Clone)]
struct Acc {
    sum: Vec<C64>,
    sum_sq_re: Vec<f64>,
}

impl Acc {
    fn zeros(n: usize) -> Self {
        Acc {
            sum: vec![C64::new(0.0, 0.0); n],
            sum_sq_re: vec![0.0; n],
        }
    }

    fn push(&mut self, values: &[C64]) {
        for ((s, q), v) in self.sum.iter_mut().zip(self.sum_sq_re.iter_mut()).zip(values) {
            *s += v;
            *q += v.re * v.re;
        }
    }

    fn merge(mut self, o: Acc) -> Acc {
        for (a, b) in self.sum.iter_mut().zip(o.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq_re.iter_mut().zip(o.sum_sq_re) {
            *a += b;
        }
        self
    }

    /// Mean and standard error of the real part of entry `j` over `n` samples.
    fn estimate(&self, j: usize, n: usize) -> (C64, f64) {
        let nf = n as f64;
        let mean = self.sum[j] / nf;
        let var = ((self.sum_sq_re[j] - nf * mean.re * mean.re) / (nf - 1.0)).max(0.0);
        (mean, (var / nf).sqrt())
    }
}

const LEAF: usize = 16;

/// Reduces `leaf(i)` over `range` with a binary split fixed by the range
/// alone, so the floating-point result does not depend on scheduling.
fn reduce_range<F>(lo: usize, hi: usize, width: usize, leaf: &F) -> Acc
where
    F: Fn(usize, &mut Acc) + Sync,
{
    if hi - lo <= LEAF {
        let mut acc = Acc::zeros(width);
        for i in lo..hi {
            leaf(i, &mut acc);
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    let (a, b) = rayon::join(|| reduce_range(lo, mid, width, leaf), || reduce_range(mid, hi, width, leaf));
    a.merge(b)
}

fn check_common(n_traj: usize, dt: f64) -> Result<()> {
    if n_traj < 2 {
        return Err(Error::Domain(format!("n_traj must be >= 2, got {n_traj}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    Ok(())
}

const WIDTH: usize = 6;

/// Runs `n_traj` independent trajectories from `alpha0` to `t_end` and
/// records ensemble statistics at `n_records` equally spaced times plus `t = 0`.
pub fn simulate_ensemble(params: &SystemParams, cfg: &EnsembleConfig) -> Result<EnsembleStats> {
    let (c, _) = require_not_above(params, "Monte Carlo ensemble")?;
    check_common(cfg.n_traj, cfg.dt)?;
    if !(cfg.t_end >= 0.0 && cfg.t_end.is_finite()) {
        return Err(Error::Domain(format!("t_end must be >= 0, got {}", cfg.t_end)));
    }
    if cfg.n_records == 0 {
        return Err(Error::Domain("n_records must be >= 1".into()));
    }
    let total = (cfg.t_end / cfg.dt).round() as usize;
    let records = cfg.n_records.min(total.max(1));
    let per = (total / records).max(1);
    let steps = per * records;
    let dt = if steps > 0 && total > 0 { cfg.t_end / steps as f64 } else { cfg.dt };
    let stepper = Stepper::new(&c, params, dt);
    let n_points = if total == 0 { 1 } else { records + 1 };

    let leaf = |i: usize, acc: &mut Acc| {
        let mut rng = trajectory_rng(cfg.seed, i);
        let mut a = cfg.alpha0;
        let mut ac = cfg.alpha0.conj();
        let mut row = [C64::new(0.0, 0.0); WIDTH];
        let mut rows = Vec::with_capacity(n_points * WIDTH);
        let mut record = |a: C64, ac: C64, rows: &mut Vec<C64>| {
            row[0] = a;
            row[1] = a * a;
            row[2] = ac * a;
            row[3] = ac * ac;
            row[4] = (ac + a) * (ac + a);
            row[5] = (ac - a) * (ac - a);
            rows.extend_from_slice(&row);
        };
        record(a, ac, &mut rows);
        if total > 0 {
            for _ in 0..records {
                for _ in 0..per {
                    stepper.step(&mut a, &mut ac, &mut rng);
                }
                record(a, ac, &mut rows);
            }
        }
        acc.push(&rows);
    };
    let acc = reduce_range(0, cfg.n_traj, n_points * WIDTH, &leaf);

    let mut st = EnsembleStats {
        times: (0..n_points).map(|k| (k * per) as f64 * dt).collect(),
        mean_alpha: vec![],
        mean_alpha_sq: vec![],
        mean_n: vec![],
        mean_conj_sq: vec![],
        mean_quad_plus: vec![],
        mean_quad_minus: vec![],
        se_alpha: vec![],
        se_alpha_sq: vec![],
        se_n: vec![],
        se_conj_sq: vec![],
        se_quad_plus: vec![],
        se_quad_minus: vec![],
        n_traj: cfg.n_traj,
        seed: cfg.seed,
        dt,
    };
    for k in 0..n_points {
        let e = |j: usize| acc.estimate(k * WIDTH + j, cfg.n_traj);
        let (m, s) = e(0);
        st.mean_alpha.push(m);
        st.se_alpha.push(s);
        let (m, s) = e(1);
        st.mean_alpha_sq.push(m);
        st.se_alpha_sq.push(s);
        let (m, s) = e(2);
        st.mean_n.push(m);
        st.se_n.push(s);
        let (m, s) = e(3);
        st.mean_conj_sq.push(m);
        st.se_conj_sq.push(s);
        let (m, s) = e(4);
        st.mean_quad_plus.push(m.re);
        st.se_quad_plus.push(s);
        let (m, s) = e(5);
        st.mean_quad_minus.push(m.re);
        st.se_quad_minus.push(s);
    }
    Ok(st)
}

/// Output quadrature variances assembled from Monte Carlo quadrature moments
/// and the analytic input-output correlations, with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputVarianceEstimate {
    pub plus: Estimate,
    pub minus: Estimate,
}

impl OutputVarianceEstimate {
    pub fn as_pair(&self) -> QuadraturePair {
        QuadraturePair {
            plus: MaybeDivergent::Finite(self.plus.mean),
            minus: self.minus.mean,
        }
    }
}

pub fn output_variances_mc(params: &SystemParams, stats: &EnsembleStats, index: usize) -> Result<OutputVarianceEstimate> {
    let c = require_below(params, "output variance (Monte Carlo)")?;
    if params.kappa > 1.0 {
        return Err(Error::Domain(format!("output-mode quantities need 0 < kappa <= 1, got {}", params.kappa)));
    }
    let k = params.kappa;
    let (sp, sm) = (c.m + c.n, c.m - c.n);
    let qp = stats.quad_plus_at(index);
    let qm = stats.quad_minus_at(index);
    Ok(OutputVarianceEstimate {
        plus: Estimate {
            mean: 1.0 + k * qp.mean - 2.0 * k * sp + 2.0 * sp,
            std_err: k * qp.std_err,
        },
        minus: Estimate {
            mean: 1.0 - (k * qm.mean - 2.0 * k * sm + 2.0 * sm),
            std_err: k * qm.std_err,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationConfig {
    pub n_traj: usize,
    pub dt: f64,
    pub seed: u64,
    /// Time discarded before the first origin; must be at least `10 / lambda_-`.
    pub burn_in: f64,
    /// Length of the window of origin times `t` after burn-in.
    pub window: f64,
    /// Origins are taken every this many steps.
    pub origin_stride: usize,
    /// Number of contiguous trajectory batches for batch-mean errors.
    pub n_batches: usize,
}

/// Monte Carlo estimate of `<alpha_c(t) alpha(t + tau)>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    pub tau: Vec<f64>,
    pub values: Vec<C64>,
    /// Standard error of the real part across trajectories.
    pub std_err: Vec<f64>,
    /// The same estimate restricted to each trajectory batch.
    pub batches: Vec<Vec<C64>>,
    /// Time-and-ensemble average of `alpha_c alpha` over the origins.
    pub equal_time_n: C64,
}

/// Two-time correlation by averaging over origin times within each
/// trajectory and then over trajectories. The trajectory is sampled every
/// `origin_stride` steps; every entry of `tau` must be a non-negative multiple
/// of that sampling interval.
pub fn two_time_correlation_mc(params: &SystemParams, cfg: &CorrelationConfig, tau: &[f64]) -> Result<CorrelationEstimate> {
    let c = require_below(params, "two-time correlation (Monte Carlo)")?;
    check_common(cfg.n_traj, cfg.dt)?;
    let needed = 10.0 / c.lambda_minus;
    if !(cfg.burn_in >= needed) {
        return Err(Error::Domain(format!(
            "burn-in {} is shorter than 10/lambda_- = {needed}",
            cfg.burn_in
        )));
    }
    if !(cfg.window > 0.0) || cfg.origin_stride == 0 {
        return Err(Error::Domain("window must be > 0 and origin_stride >= 1".into()));
    }
    if cfg.n_batches < 2 || cfg.n_batches > cfg.n_traj {
        return Err(Error::Domain(format!("n_batches must lie in [2, n_traj], got {}", cfg.n_batches)));
    }
    let spacing = cfg.dt * cfg.origin_stride as f64;
    let mut lags = Vec::with_capacity(tau.len());
    for &t in tau {
        let k = (t / spacing).round();
        if !(t >= 0.0) || (k * spacing - t).abs() > 1e-9 * t.max(spacing) {
            return Err(Error::Domain(format!("tau = {t} is not a non-negative multiple of the sampling interval {spacing}")));
        }
        lags.push(k as usize);
    }
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    let burn_steps = (cfg.burn_in / cfg.dt).ceil() as usize;
    let n_origins = ((cfg.window / spacing).round() as usize).max(1);
    let n_samples = n_origins + max_lag;
    let stepper = Stepper::new(&c, params, cfg.dt);
    let width = lags.len() + 1;

    let leaf = |i: usize, acc: &mut Acc| {
        let mut rng = trajectory_rng(cfg.seed, i);
        let (mut a, mut ac) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for _ in 0..burn_steps {
            stepper.step(&mut a, &mut ac, &mut rng);
        }
        let mut fwd = Vec::with_capacity(n_samples);
        let mut conj = Vec::with_capacity(n_samples);
        for s in 0..n_samples {
            if s > 0 {
                for _ in 0..cfg.origin_stride {
                    stepper.step(&mut a, &mut ac, &mut rng);
                }
            }
            fwd.push(a);
            conj.push(ac);
        }
        let inv = 1.0 / n_origins as f64;
        let mut sums = vec![C64::new(0.0, 0.0); width];
        for (j, &k) in lags.iter().enumerate() {
            let s: C64 = (0..n_origins).map(|o| conj[o] * fwd[o + k]).sum();
            sums[j] = s * inv;
        }
        let s: C64 = (0..n_origins).map(|o| conj[o] * fwd[o]).sum();
        sums[width - 1] = s * inv;
        acc.push(&sums);
    };

    let mut batch_accs = Vec::with_capacity(cfg.n_batches);
    for b in 0..cfg.n_batches {
        let lo = b * cfg.n_traj / cfg.n_batches;
        let hi = (b + 1) * cfg.n_traj / cfg.n_batches;
        batch_accs.push((hi - lo, reduce_range(lo, hi, width, &leaf)));
    }
    let batches = batch_accs
        .iter()
        .map(|(n, acc)| (0..lags.len()).map(|j| acc.sum[j] / *n as f64).collect())
        .collect();
    let total = batch_accs.into_iter().map(|(_, a)| a).reduce(Acc::merge).expect("at least two batches");
    let mut values = Vec::with_capacity(lags.len());
    let mut std_err = Vec::with_capacity(lags.len());
    for j in 0..lags.len() {
        let (m, s) = total.estimate(j, cfg.n_traj);
        values.push(m);
        std_err.push(s);
    }
    Ok(CorrelationEstimate {
        tau: lags.iter().map(|&k| k as f64 * spacing).collect(),
        values,
        std_err,
        batches,
        equal_time_n: total.sum[width - 1] / cfg.n_traj as f64,
    })
}
