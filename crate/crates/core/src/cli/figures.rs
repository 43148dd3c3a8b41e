//! Curve data for figures 2 to 13.
//!
//! Each figure fixes its own parameter set. Where a value is left
//! open the choice is listed in the CSV footer: `r = 1` for the squeezing
//! spectrum surface, `r` in `{0, 0.5, 1, 1.5}` for the spectrum-versus-beta
//! families, `beta` in `[0, 1]` throughout and `omega` in `[-5, 5]` for the
//! spectral plots.

use rayon::prelude::*;

use crate::analytics::{
    cavity_variances, mean_photon_cavity, mean_photon_output, output_variances, power_spectrum_cavity, squeezing_spectrum_output, PhotonTime,
};
use crate::error::Result;
use crate::numerics::linspace;
use crate::params::SystemParams;

use super::csv::{Cell, Table};
use super::CliError;

pub const FIGURE_IDS: &[&str] = &[
    "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13",
];

pub const SPECTRUM_SQUEEZE: f64 = 1.0;
pub const SQUEEZE_FAMILY: [f64; 4] = [0.0, 0.5, 1.0, 1.5];
pub const OMEGA_SPAN: f64 = 5.0;
pub const HALFWIDTH_EPSILONS: [f64; 2] = [0.2, 0.3];

fn base(a: f64, kappa: f64, r: f64) -> Result<SystemParams> {
    SystemParams::new(a, kappa, 0.0, 0.0, r)
}

fn at(a: f64, kappa: f64, beta: f64, r: f64, threshold: bool) -> Result<SystemParams> {
    let p = base(a, kappa, r)?.with_beta(beta)?;
    if threshold {
        p.at_threshold()
    } else {
        Ok(p)
    }
}

fn cavity_minus(a: f64, k: f64, beta: f64, r: f64, threshold: bool) -> Result<f64> {
    Ok(cavity_variances(&at(a, k, beta, r, threshold)?)?.minus)
}

fn output_minus(a: f64, k: f64, beta: f64, r: f64, threshold: bool) -> Result<f64> {
    Ok(output_variances(&at(a, k, beta, r, threshold)?)?.minus)
}

fn squeezing_minus_zero(a: f64, k: f64, beta: f64, r: f64, threshold: bool) -> Result<Cell> {
    let (_, m) = squeezing_spectrum_output(&at(a, k, beta, r, threshold)?, &[0.0])?;
    Ok(Cell::maybe(m.values[0], "diverges: squeezing spectrum at zero frequency"))
}

/// Evaluates `f` on each x in parallel, keeping the order.
fn rows<F>(xs: &[f64], f: F) -> Result<Vec<Vec<Cell>>>
where
    F: Fn(f64) -> Result<Vec<Cell>> + Sync,
{
    xs.par_iter()
        .map(|&x| {
            let mut row = vec![Cell::Num(x)];
            row.extend(f(x)?);
            Ok(row)
        })
        .collect()
}

fn surface<F>(header: [&str; 3], xs: &[f64], ys: &[f64], f: F) -> Result<Table>
where
    F: Fn(f64, f64) -> Result<Cell> + Sync,
{
    let pairs: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let cells: Vec<Vec<Cell>> = pairs
        .par_iter()
        .map(|&(x, y)| Ok(vec![Cell::Num(x), Cell::Num(y), f(x, y)?]))
        .collect::<Result<_>>()?;
    let mut t = Table::new(&header);
    t.rows = cells;
    Ok(t)
}

/// Builds the table for figure `id` with `points` samples per axis.
pub fn figure(id: &str, points: usize) -> std::result::Result<Table, CliError> {
    let n = points;
    let beta = linspace(0.0, 1.0, n);
    let (a, k) = (100.0, 0.8);
    let mut table = match id {
        "fig2" => surface(["beta", "r", "variance"], &beta, &linspace(0.0, 2.0, n), |b, r| {
            Ok(Cell::Num(cavity_minus(a, k, b, r, true)?))
        })?,
        "fig3" => {
            let mut t = Table::new(&["beta", "no_amplifier_r0", "threshold_r0", "threshold_r1"]);
            t.rows = rows(&beta, |b| {
                Ok(vec![
                    Cell::Num(cavity_minus(a, k, b, 0.0, false)?),
                    Cell::Num(cavity_minus(a, k, b, 0.0, true)?),
                    Cell::Num(cavity_minus(a, k, b, 1.0, true)?),
                ])
            })?;
            t
        }
        "fig4" => surface(["beta", "r", "variance"], &beta, &linspace(0.0, 2.0, n), |b, r| {
            Ok(Cell::Num(cavity_minus(a, k, b, r, false)?))
        })?,
        "fig5" => {
            let mut t = Table::new(&["beta", "r0", "r1"]);
            t.rows = rows(&beta, |b| {
                Ok(vec![
                    Cell::Num(cavity_minus(a, k, b, 0.0, false)?),
                    Cell::Num(cavity_minus(a, k, b, 1.0, false)?),
                ])
            })?;
            t
        }
        "fig6" | "fig7" => {
            let threshold = id == "fig6";
            let mut t = Table::new(&["beta", "output", "cavity"]);
            t.rows = rows(&beta, |b| {
                Ok(vec![
                    Cell::Num(output_minus(a, k, b, 1.0, threshold)?),
                    Cell::Num(cavity_minus(a, k, b, 1.0, threshold)?),
                ])
            })?;
            t
        }
        "fig8" => surface(["beta", "omega", "s_minus"], &beta, &linspace(-OMEGA_SPAN, OMEGA_SPAN, n), |b, w| {
            let (_, m) = squeezing_spectrum_output(&at(a, k, b, SPECTRUM_SQUEEZE, true)?, &[w])?;
            Ok(Cell::maybe(m.values[0], "diverges: squeezing spectrum at zero frequency"))
        })?,
        "fig9" | "fig10" => {
            let threshold = id == "fig9";
            let mut t = Table::new(&["beta", "r0", "r0.5", "r1", "r1.5"]);
            t.rows = rows(&beta, |b| SQUEEZE_FAMILY.iter().map(|&r| squeezing_minus_zero(a, k, b, r, threshold)).collect())?;
            t
        }
        "fig11" => {
            let mut t = Table::new(&["beta", "r0_eps0", "r0_eps0.3", "r1_eps0.3"]);
            t.rows = rows(&beta, |b| {
                let nbar = |r: f64, e: f64| -> Result<Cell> {
                    Ok(Cell::Num(mean_photon_cavity(&SystemParams::new(25.0, k, b, e, r)?, PhotonTime::SteadyState)?))
                };
                Ok(vec![nbar(0.0, 0.0)?, nbar(0.0, 0.3)?, nbar(1.0, 0.3)?])
            })?;
            t
        }
        "fig12" => {
            let mut t = Table::new(&["beta", "output", "cavity"]);
            t.rows = rows(&beta, |b| {
                let p = SystemParams::new(25.0, k, b, 0.3, 1.0)?;
                Ok(vec![
                    Cell::Num(mean_photon_output(&p, PhotonTime::SteadyState)?),
                    Cell::Num(mean_photon_cavity(&p, PhotonTime::SteadyState)?),
                ])
            })?;
            t
        }
        "fig13" => {
            let omega = linspace(-OMEGA_SPAN, OMEGA_SPAN, n);
            let mut cols = Vec::new();
            for e in HALFWIDTH_EPSILONS {
                let s = power_spectrum_cavity(&SystemParams::new(100.0, k, 0.01, e, 1.0)?, &omega)?;
                cols.push(s.values);
            }
            let mut t = Table::new(&["omega", "eps0.2", "eps0.3"]);
            for (i, &w) in omega.iter().enumerate() {
                t.push(vec![Cell::Num(w), Cell::maybe(cols[0][i], ""), Cell::maybe(cols[1][i], "")]);
            }
            t
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown figure `{other}`; expected one of {}",
                FIGURE_IDS.join(", ")
            )))
        }
    };
    table.comment(format!("grid: {n} points per axis"));
    table.comment(format!("parameters: {}", figure_params(id)));
    Ok(table)
}

fn figure_params(id: &str) -> &'static str {
    match id {
        "fig2" => "kappa=0.8 A=100 epsilon=threshold beta=[0,1] r=[0,2]",
        "fig3" => "kappa=0.8 A=100 beta=[0,1]; no_amplifier: epsilon=0; threshold: epsilon=threshold",
        "fig4" => "kappa=0.8 A=100 epsilon=0 beta=[0,1] r=[0,2]",
        "fig5" => "kappa=0.8 A=100 epsilon=0 beta=[0,1]",
        "fig6" => "kappa=0.8 A=100 r=1 epsilon=threshold beta=[0,1]",
        "fig7" => "kappa=0.8 A=100 r=1 epsilon=0 beta=[0,1]",
        "fig8" => "kappa=0.8 A=100 r=1 epsilon=threshold beta=[0,1] omega=[-5,5]",
        "fig9" => "kappa=0.8 A=100 omega=0 epsilon=threshold beta=[0,1]",
        "fig10" => "kappa=0.8 A=100 omega=0 epsilon=0 beta=[0,1]",
        "fig11" => "kappa=0.8 A=25 beta=[0,1]",
        "fig12" => "kappa=0.8 A=25 r=1 epsilon=0.3 beta=[0,1]",
        _ => "kappa=0.8 A=100 beta=0.01 r=1 omega=[-5,5]",
    }
}
