//! Command-line front end.
//!
//! Every command writes CSV (or, for `report`, plain text) to `--out` or to
//! stdout. Exit status is 0 on success, 1 on a numerical or stability
//! failure and 2 on a usage or configuration error.

pub mod config;
pub mod csv;
pub mod figures;
pub mod oracle;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::analytics::{
    cavity_variances, hwhm_closed_form, mean_photon_cavity, mean_photon_output, mean_photon_uncorrected, output_variances, power_spectrum_cavity,
    power_spectrum_output, squeezing_spectrum_output, EpsilonChoice, PhotonTime, PowerSelector,
};
use crate::error::Error;
use crate::langevin::{self, simulate_ensemble, EnsembleConfig};
use crate::numerics::linspace;
use crate::params::{derive_coefficients, require_below, stability_classify, SystemParams};

use config::{parse_config, RunConfig};
use csv::{emit, emit_csv, Cell, Table, DIVERGENCE_NOTE};
use oracle::{run_oracle, OracleSettings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{0}")]
    Model(#[from] Error),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(Error::Domain(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cascade", version, about = "Squeezing, photon statistics and spectra of a cascade laser with a parametric amplifier")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat key=value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output path (stdout if omitted)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo trajectory count
    #[arg(long, global = true)]
    pub ntraj: Option<usize>,
    /// Time step
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Linear gain coefficient A
    #[arg(long = "gain", visible_alias = "A", global = true, allow_hyphen_values = true)]
    pub gain: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Amplifier strength, or `threshold`
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub epsilon: Option<String>,
    /// Squeeze parameter
    #[arg(long = "r", visible_alias = "squeeze", global = true, allow_hyphen_values = true)]
    pub r: Option<String>,
    /// Grid points per axis
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Integration time for `mc`
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    /// Fock-space cutoff for `oracle`
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derived coefficients, threshold and stability
    Coeffs,
    /// Cavity and output quadrature variances
    Variance,
    /// Output squeezing spectra on a frequency grid
    Spectrum,
    /// Steady mean photon numbers
    Photon,
    /// Cavity and output power spectra on a frequency grid
    Power,
    /// Monte Carlo ensemble moments over time
    Mc,
    /// Steady moments from all four routes
    Oracle,
    /// Curve data of a figure
    Figure {
        /// fig2 .. fig13
        id: String,
    },
    /// One quantity over a range of one parameter
    Sweep(SweepArgs),
    /// Verification report
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    #[value(name = "A")]
    Gain,
    Kappa,
    Beta,
    Epsilon,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepQuantity {
    CavityPlus,
    CavityMinus,
    OutputPlus,
    OutputMinus,
    Photon,
    PhotonOutput,
    Hwhm,
    LambdaMinus,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub var: SweepVar,
    #[arg(long, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long = "count", default_value_t = 50)]
    pub count: usize,
    #[arg(long, value_enum)]
    pub quantity: SweepQuantity,
}

fn overrides(c: &Common) -> Vec<(String, String)> {
    let mut v = Vec::new();
    let mut put = |k: &str, val: Option<String>| {
        if let Some(x) = val {
            v.push((k.to_string(), x));
        }
    };
    put("A", c.gain.clone());
    put("kappa", c.kappa.clone());
    put("beta", c.beta.clone());
    put("epsilon", c.epsilon.clone());
    put("r", c.r.clone());
    put("seed", c.seed.map(|x| x.to_string()));
    put("ntraj", c.ntraj.map(|x| x.to_string()));
    put("dt", c.dt.map(|x| x.to_string()));
    put("points", c.points.map(|x| x.to_string()));
    put("t_end", c.t_end.map(|x| x.to_string()));
    put("n_max", c.n_max.map(|x| x.to_string()));
    put("out", c.out.as_ref().map(|p| p.display().to_string()));
    v
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let text = match &cli.common.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    let cfg = parse_config(&text, &overrides(&cli.common))?;
    run_command(&cli.command, &cfg)
}

fn omega_grid(cfg: &RunConfig, lambda_plus: f64) -> Vec<f64> {
    let w = cfg.omega_max.unwrap_or(10.0 * lambda_plus);
    linspace(-w, w, cfg.points)
}

pub fn run_command(cmd: &Command, cfg: &RunConfig) -> Result<(), CliError> {
    let p = &cfg.params;
    let out = cfg.out.as_deref();
    match cmd {
        Command::Coeffs => emit_csv(&coeffs_table(p), out),
        Command::Variance => {
            let mut t = Table::new(&["mode", "plus", "minus"]);
            let cav = cavity_variances(p)?;
            t.push(vec!["cavity".into(), Cell::maybe(cav.plus, DIVERGENCE_NOTE), cav.minus.into()]);
            if p.kappa <= 1.0 {
                let o = output_variances(p)?;
                t.push(vec!["output".into(), Cell::maybe(o.plus, DIVERGENCE_NOTE), o.minus.into()]);
            }
            emit_csv(&t, out)
        }
        Command::Spectrum => {
            let omega = omega_grid(cfg, derive_coefficients(p).lambda_plus);
            let (sp, sm) = squeezing_spectrum_output(p, &omega)?;
            let mut t = Table::new(&["omega", "s_plus", "s_minus"]);
            for (i, &w) in omega.iter().enumerate() {
                t.push(vec![
                    w.into(),
                    Cell::maybe(sp.values[i], "diverges: squeezing spectrum at zero frequency"),
                    Cell::maybe(sm.values[i], "diverges: squeezing spectrum at zero frequency"),
                ]);
            }
            emit_csv(&t, out)
        }
        Command::Photon => {
            let mut t = Table::new(&["quantity", "value"]);
            t.push(vec!["cavity".into(), mean_photon_cavity(p, PhotonTime::SteadyState)?.into()]);
            if p.kappa <= 1.0 {
                t.push(vec!["output".into(), mean_photon_output(p, PhotonTime::SteadyState)?.into()]);
            }
            t.push(vec!["cavity_uncorrected_form".into(), mean_photon_uncorrected(p)?.into()]);
            emit_csv(&t, out)
        }
        Command::Power => {
            let omega = omega_grid(cfg, derive_coefficients(p).lambda_plus);
            let cav = power_spectrum_cavity(p, &omega)?;
            let outp = if p.kappa <= 1.0 { Some(power_spectrum_output(p, &omega)?) } else { None };
            let mut t = Table::new(if outp.is_some() { &["omega", "cavity", "output"][..] } else { &["omega", "cavity"][..] });
            for (i, &w) in omega.iter().enumerate() {
                let mut row = vec![w.into(), Cell::maybe(cav.values[i], "")];
                if let Some(o) = &outp {
                    row.push(Cell::maybe(o.values[i], ""));
                }
                t.push(row);
            }
            emit_csv(&t, out)
        }
        Command::Mc => emit_csv(&mc_table(cfg)?, out),
        Command::Oracle => emit_csv(&oracle_table(cfg)?, out),
        Command::Figure { id } => emit_csv(&figures::figure(id, cfg.points)?, out),
        Command::Sweep(args) => emit_csv(&sweep_table(cfg, args)?, out),
        Command::Report => {
            let rep = report::build_report(cfg.mc.seed)?;
            emit(&rep.text(), out)?;
            if rep.all_pass() {
                Ok(())
            } else {
                Err(CliError::ChecksFailed("one or more report checks failed".into()))
            }
        }
    }
}

fn coeffs_table(p: &SystemParams) -> Table {
    let c = derive_coefficients(p);
    let mut t = Table::new(&["name", "value"]);
    for (name, v) in [
        ("cal_A", c.cal_a),
        ("cal_B", c.cal_b),
        ("cal_C", c.cal_c),
        ("cal_D", c.cal_d),
        ("B", c.big_b),
        ("N", c.n),
        ("M", c.m),
        ("lambda_minus", c.lambda_minus),
        ("lambda_plus", c.lambda_plus),
        ("epsilon", c.epsilon),
        ("epsilon_threshold", c.epsilon_threshold),
    ] {
        t.push(vec![name.into(), v.into()]);
    }
    let stab = format!("{:?}", stability_classify(p)).to_lowercase();
    t.push(vec!["stability".into(), Cell::Text(stab)]);
    t
}

fn mc_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = &cfg.params;
    let c = require_below(p, "Monte Carlo run")?;
    let ec = EnsembleConfig {
        n_records: cfg.mc.records,
        ..EnsembleConfig::new(
            cfg.mc.n_traj,
            cfg.mc.t_end.unwrap_or(20.0 / c.lambda_minus),
            cfg.mc.dt.unwrap_or_else(|| langevin::default_dt(p)),
            cfg.mc.seed,
        )
    };
    let st = simulate_ensemble(p, &ec)?;
    let mut t = Table::new(&[
        "t", "n", "n_se", "alpha_sq", "alpha_sq_se", "quad_plus", "quad_plus_se", "quad_minus", "quad_minus_se",
    ]);
    for i in 0..st.times.len() {
        t.push(vec![
            st.times[i].into(),
            st.mean_n[i].re.into(),
            st.se_n[i].into(),
            st.mean_alpha_sq[i].re.into(),
            st.se_alpha_sq[i].into(),
            st.mean_quad_plus[i].into(),
            st.se_quad_plus[i].into(),
            st.mean_quad_minus[i].into(),
            st.se_quad_minus[i].into(),
        ]);
    }
    t.comment(format!("trajectories: {} seed: {} dt: {}", st.n_traj, st.seed, st.dt));
    Ok(t)
}

fn oracle_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let s = OracleSettings {
        fock_n_max: cfg.n_max,
        mc_traj: cfg.mc.n_traj,
        seed: cfg.mc.seed,
        ..OracleSettings::default()
    };
    let o = run_oracle(&cfg.params, &s)?;
    let mut t = Table::new(&["quantity", "closed_form", "moment_ode", "fock", "mc", "mc_se"]);
    let (fock_n, fock_a2) = o.fock.as_ref().map(|(m, _, _)| (m.mean_n, m.mean_alpha_sq.re)).unwrap_or((f64::NAN, f64::NAN));
    let (mn, ma) = o.mc.expect("mc enabled");
    t.push(vec!["n".into(), o.closed.mean_n.into(), o.ode.mean_n.into(), fock_n.into(), mn.mean.into(), mn.std_err.into()]);
    t.push(vec![
        "re_alpha_sq".into(),
        o.closed.mean_alpha_sq.re.into(),
        o.ode.mean_alpha_sq.re.into(),
        fock_a2.into(),
        ma.mean.into(),
        ma.std_err.into(),
    ]);
    if let Some((_, d, n_max)) = &o.fock {
        t.comment(format!(
            "fock: n_max={n_max} steps={} trace drift={:e} min eigenvalue={:e} tail={:e}",
            d.steps, d.max_trace_drift, d.min_eigenvalue, d.max_tail_population
        ));
    }
    Ok(t)
}

fn sweep_params(base: &SystemParams, eps: EpsilonChoice, var: SweepVar, x: f64) -> crate::error::Result<SystemParams> {
    let mut p = *base;
    p.microscopic = None;
    match var {
        SweepVar::Gain => p.linear_gain = x,
        SweepVar::Kappa => p.kappa = x,
        SweepVar::Beta => p.beta = x,
        SweepVar::Epsilon => p.epsilon = x,
        SweepVar::R => p.squeeze_r = x,
    }
    p.validate()?;
    match (var, eps) {
        (SweepVar::Epsilon, _) => Ok(p),
        (_, e) => e.apply(&p),
    }
}

fn sweep_value(p: &SystemParams, q: SweepQuantity) -> crate::error::Result<Cell> {
    Ok(match q {
        SweepQuantity::CavityPlus => Cell::maybe(cavity_variances(p)?.plus, DIVERGENCE_NOTE),
        SweepQuantity::CavityMinus => Cell::Num(cavity_variances(p)?.minus),
        SweepQuantity::OutputPlus => Cell::maybe(output_variances(p)?.plus, DIVERGENCE_NOTE),
        SweepQuantity::OutputMinus => Cell::Num(output_variances(p)?.minus),
        SweepQuantity::Photon => Cell::Num(mean_photon_cavity(p, PhotonTime::SteadyState)?),
        SweepQuantity::PhotonOutput => Cell::Num(mean_photon_output(p, PhotonTime::SteadyState)?),
        SweepQuantity::Hwhm => Cell::Num(hwhm_closed_form(PowerSelector::Cavity, p)?),
        SweepQuantity::LambdaMinus => Cell::Num(derive_coefficients(p).lambda_minus),
    })
}

fn sweep_table(cfg: &RunConfig, a: &SweepArgs) -> Result<Table, CliError> {
    if a.count < 2 {
        return Err(CliError::Usage(format!("count: must be >= 2, got {}", a.count)));
    }
    if !(a.from.is_finite() && a.to.is_finite()) {
        return Err(CliError::Usage("sweep bounds must be finite".into()));
    }
    let xs = linspace(a.from, a.to, a.count);
    let cells: Vec<Cell> = xs
        .par_iter()
        .map(|&x| {
            let p = sweep_params(&cfg.params, cfg.epsilon, a.var, x).map_err(|e| CliError::Usage(format!("sweep point {x}: {e}")))?;
            sweep_value(&p, a.quantity).map_err(|e| CliError::Model(annotate(e, x)))
        })
        .collect::<Result<_, CliError>>()?;
    let var = a.var.to_possible_value().expect("named").get_name().to_string();
    let quantity = a.quantity.to_possible_value().expect("named").get_name().replace('-', "_");
    let mut t = Table::new(&[var, quantity]);
    for (x, c) in xs.into_iter().zip(cells) {
        t.push(vec![x.into(), c]);
    }
    t.comment(format!("points: {}", a.count));
    Ok(t)
}

fn annotate(e: Error, x: f64) -> Error {
    match e {
        Error::Domain(m) => Error::Domain(format!("at sweep value {x}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("at sweep value {x}: {m}")),
        other => other,
    }
}
