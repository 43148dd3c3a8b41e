//! Flat `key=value` run configuration with flag overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::analytics::EpsilonChoice;
use crate::params::SystemParams;

use super::CliError;

/// Keys accepted in a config file, with a short description each.
pub const KEYS: &[(&str, &str)] = &[
    ("A", "linear gain coefficient, >= 0"),
    ("kappa", "cavity damping constant, > 0"),
    ("beta", "pump coupling ratio, >= 0"),
    ("epsilon", "amplifier strength, >= 0, or `threshold`"),
    ("r", "squeeze parameter, >= 0"),
    ("seed", "Monte Carlo seed"),
    ("ntraj", "Monte Carlo trajectory count, >= 2"),
    ("dt", "time step, > 0"),
    ("t_end", "integration time, > 0"),
    ("records", "Monte Carlo recording times, >= 1"),
    ("n_max", "Fock-space cutoff, >= 4"),
    ("points", "grid points per axis, >= 2"),
    ("omega_max", "half span of frequency grids, > 0"),
    ("out", "output path"),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub n_traj: usize,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub seed: u64,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Parameters with `epsilon` resolved.
    pub params: SystemParams,
    /// How `epsilon` was given; sweeps re-resolve `threshold` per point.
    pub epsilon: EpsilonChoice,
    pub mc: McSettings,
    pub n_max: Option<usize>,
    pub points: usize,
    pub omega_max: Option<f64>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_POINTS: usize = 400;

/// Reads `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("line {}: expected key=value, got `{line}`", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|(name, _)| *name == k) {
            return Err(CliError::Usage(format!("line {}: unknown key `{k}`", n + 1)));
        }
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

fn num(map: &BTreeMap<String, String>, key: &str, default: f64) -> Result<f64, CliError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::Usage(format!("{key}: expected a finite number, got `{v}`"))),
    }
}

fn int<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|_| CliError::Usage(format!("{key}: expected a non-negative integer, got `{v}`"))))
        .transpose()
}

fn require(key: &str, ok: bool, rule: &str, value: impl std::fmt::Display) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{key}: must be {rule}, got {value}")))
    }
}

/// Builds a validated configuration from file text and flag overrides; the
/// overrides win.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<RunConfig, CliError> {
    let mut map = parse_pairs(text)?;
    for (k, v) in overrides {
        if !KEYS.iter().any(|(name, _)| name == k) {
            return Err(CliError::Usage(format!("unknown key `{k}`")));
        }
        map.insert(k.clone(), v.clone());
    }

    let a = num(&map, "A", 100.0)?;
    let kappa = num(&map, "kappa", 0.8)?;
    let beta = num(&map, "beta", 0.022)?;
    let r = num(&map, "r", 1.0)?;
    require("A", a >= 0.0, ">= 0", a)?;
    require("kappa", kappa > 0.0, "> 0", kappa)?;
    require("beta", beta >= 0.0, ">= 0", beta)?;
    require("r", r >= 0.0, ">= 0", r)?;
    let epsilon = match map.get("epsilon").map(String::as_str) {
        Some("threshold") => EpsilonChoice::Threshold,
        _ => {
            let e = num(&map, "epsilon", 0.0)?;
            require("epsilon", e >= 0.0, ">= 0 or `threshold`", e)?;
            EpsilonChoice::Fixed(e)
        }
    };
    let base = SystemParams::new(a, kappa, beta, 0.0, r).map_err(|e| CliError::Usage(e.to_string()))?;
    let params = epsilon.apply(&base).map_err(|e| CliError::Usage(e.to_string()))?;

    let n_traj = int::<usize>(&map, "ntraj")?.unwrap_or(2000);
    require("ntraj", n_traj >= 2, ">= 2", n_traj)?;
    let dt = map.contains_key("dt").then(|| num(&map, "dt", 0.0)).transpose()?;
    if let Some(dt) = dt {
        require("dt", dt > 0.0, "> 0", dt)?;
    }
    let t_end = map.contains_key("t_end").then(|| num(&map, "t_end", 0.0)).transpose()?;
    if let Some(t) = t_end {
        require("t_end", t > 0.0, "> 0", t)?;
    }
    let records = int::<usize>(&map, "records")?.unwrap_or(20);
    require("records", records >= 1, ">= 1", records)?;
    let seed = int::<u64>(&map, "seed")?.unwrap_or(1);
    let n_max = int::<usize>(&map, "n_max")?;
    if let Some(n) = n_max {
        require("n_max", n >= 4, ">= 4", n)?;
    }
    let points = int::<usize>(&map, "points")?.unwrap_or(DEFAULT_POINTS);
    require("points", points >= 2, ">= 2", points)?;
    let omega_max = map.contains_key("omega_max").then(|| num(&map, "omega_max", 0.0)).transpose()?;
    if let Some(w) = omega_max {
        require("omega_max", w > 0.0, "> 0", w)?;
    }

    Ok(RunConfig {
        params,
        epsilon,
        mc: McSettings {
            n_traj,
            dt,
            t_end,
            seed,
            records,
        },
        n_max,
        points,
        omega_max,
        out: map.get("out").map(PathBuf::from),
    })
}
