//! Monte Carlo correlation through the numerical transform, against the
//! closed-form power spectrum.

use cascade_core::analytics::power_spectrum_cavity;
use cascade_core::langevin::{two_time_correlation_mc, CorrelationConfig};
use cascade_core::spectra::{spectrum_from_correlation, CorrelationSeries, TailClosure};
use cascade_core::SystemParams;

#[test]
fn mc_spectrum_matches_closed_form() {
    let p = SystemParams::new(1.0, 1.0, 0.5, 0.1, 0.3).unwrap();
    let cfg = CorrelationConfig {
        n_traj: 800,
        dt: 0.01,
        seed: 31,
        burn_in: 20.0,
        window: 60.0,
        origin_stride: 5,
        n_batches: 20,
    };
    let h = cfg.dt * cfg.origin_stride as f64;
    let tau: Vec<f64> = (0..=600).map(|j| j as f64 * h).collect();
    let est = two_time_correlation_mc(&p, &cfg, &tau).unwrap();
    let corr = CorrelationSeries::from_estimate(&est).unwrap();
    let omega = [0.0, 0.25, 0.5, 1.0, 2.0];
    let mc = spectrum_from_correlation(&corr, &omega, TailClosure::Auto).unwrap();
    let exact = power_spectrum_cavity(&p, &omega).unwrap();
    let se = mc.std_err.as_ref().unwrap();
    for k in 0..omega.len() {
        let (m, e) = (mc.values[k].value().unwrap(), exact.values[k].value().unwrap());
        let z = (m - e).abs() / se[k];
        assert!(z < 4.0, "omega={}: {m} vs {e} (se {})", omega[k], se[k]);
    }
}

