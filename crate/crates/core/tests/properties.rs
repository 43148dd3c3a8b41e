use cascade_core::analytics::{
    cavity_variances, output_variances, output_variances_via_moments, power_spectrum_cavity, squeezing_spectrum_output, MaybeDivergent,
};
use cascade_core::fock::fock_evolve;
use cascade_core::langevin::{factor_symmetric, reconstruct};
use cascade_core::moments::{default_dt, integrate_moments_every, steady_state_moments};
use cascade_core::{derive_coefficients, threshold_epsilon, SystemParams};
use nalgebra::Matrix2;
use proptest::prelude::*;

/// Below-threshold parameters with `epsilon` a fraction of its threshold.
fn below() -> impl Strategy<Value = SystemParams> {
    (0.0..200.0f64, 0.05..1.0f64, 0.0..2.0f64, 0.0..0.95f64, 0.0..2.0f64).prop_filter_map("above threshold without amplifier", |(a, k, b, u, r)| {
        let base = SystemParams::new(a, k, b, 0.0, r).unwrap();
        let th = threshold_epsilon(&base);
        (th > 0.01 * k).then(|| base.with_epsilon(u * th).unwrap())
    })
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(1e-300)
}

proptest! {
    #[test]
    fn reservoir_identity(r in 0.0..3.0f64) {
        let p = SystemParams::new(1.0, 1.0, 0.0, 0.0, r).unwrap();
        let c = derive_coefficients(&p);
        prop_assert!((c.m * c.m - c.n * (c.n + 1.0)).abs() <= 1e-12 * (1.0 + c.m * c.m));
    }

    #[test]
    fn rates_are_drift_eigenvalues(p in below()) {
        let c = derive_coefficients(&p);
        let drift = Matrix2::new(c.damping(), -c.coupling(), -c.coupling(), c.damping());
        let mut ev: Vec<f64> = drift.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let (lo, hi) = if c.coupling() >= 0.0 { (c.lambda_minus, c.lambda_plus) } else { (c.lambda_plus, c.lambda_minus) };
        let scale = 1.0 + c.lambda_plus.abs();
        prop_assert!((ev[0] - lo).abs() <= 1e-12 * scale);
        prop_assert!((ev[1] - hi).abs() <= 1e-12 * scale);
        // the slow rate closes exactly at the threshold amplifier strength
        prop_assert!((c.lambda_minus - (threshold_epsilon(&p) - p.epsilon)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn uncertainty_products(p in below()) {
        for q in [cavity_variances(&p).unwrap(), output_variances(&p).unwrap()] {
            let prod = q.uncertainty_product().unwrap();
            prop_assert!(prod >= 1.0 - 1e-9, "{prod} at {p:?}");
        }
    }

    #[test]
    fn moment_bound(p in below()) {
        let m = steady_state_moments(&p).unwrap();
        prop_assert!(m.mean_n >= 0.0);
        prop_assert!(m.mean_alpha_sq.norm() <= (m.mean_n * (m.mean_n + 1.0)).sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn output_variance_routes_agree(p in below()) {
        let a = output_variances(&p).unwrap();
        let b = output_variances_via_moments(&p).unwrap();
        prop_assert!(rel(a.minus, b.minus) < 1e-9);
        prop_assert!(rel(a.plus.value().unwrap(), b.plus.value().unwrap()) < 1e-9);
    }

    #[test]
    fn minus_variance_is_continuous_at_threshold(a in 1.0..200.0f64, k in 0.1..1.0f64, b in 0.0..2.0f64, r in 0.0..2.0f64) {
        let base = SystemParams::new(a, k, b, 0.0, r).unwrap();
        prop_assume!(threshold_epsilon(&base) > 0.01 * k);
        let th = base.at_threshold().unwrap();
        let near = base.with_epsilon(threshold_epsilon(&base) * (1.0 - 1e-9)).unwrap();
        let (vt, vn) = (cavity_variances(&th).unwrap(), cavity_variances(&near).unwrap());
        prop_assert!(rel(vn.minus, vt.minus) < 1e-6);
        prop_assert_eq!(vt.plus, MaybeDivergent::Divergent);
        prop_assert!(vn.plus.value().unwrap() > 1e3);
        let (ot, on) = (output_variances(&th).unwrap(), output_variances(&near).unwrap());
        prop_assert!(rel(on.minus, ot.minus) < 1e-6);
    }

    #[test]
    fn spectra_are_even_and_non_negative(p in below(), w in 0.0..50.0f64) {
        let (sp, sm) = squeezing_spectrum_output(&p, &[-w, w]).unwrap();
        let pw = power_spectrum_cavity(&p, &[-w, w]).unwrap();
        for s in [&sp, &sm, &pw] {
            let (x, y) = (s.values[0].value().unwrap(), s.values[1].value().unwrap());
            prop_assert!(x >= -1e-12 && (x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn factor_reconstructs(c11 in -5.0..5.0f64, c12 in -5.0..5.0f64, c22 in -5.0..5.0f64) {
        let l = factor_symmetric([[c11, c12], [c12, c22]]);
        let back = reconstruct(&l);
        let want = [[c11, c12], [c12, c22]];
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((back[i][j].re - want[i][j]).abs() < 1e-12 && back[i][j].im.abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_matches_moment_equations(p in below()) {
        let c = derive_coefficients(&p);
        prop_assume!(c.lambda_minus > 0.05);
        let t = 50.0 / c.lambda_minus;
        let series = integrate_moments_every(&p, t, default_dt(&p), usize::MAX).unwrap();
        let closed = steady_state_moments(&p).unwrap();
        let end = series.last();
        let scale = closed.mean_n.max(closed.mean_alpha_sq.re.abs());
        prop_assert!((end.mean_n - closed.mean_n).abs() <= 1e-8 * scale);
        prop_assert!((end.mean_alpha_sq - closed.mean_alpha_sq).norm() <= 1e-8 * scale);
    }
}

#[test]
fn fock_state_stays_physical() {
    for (a, k, b, e, r) in [(1.0, 1.0, 0.5, 0.1, 0.3), (2.0, 0.8, 0.3, 0.2, 0.5), (0.5, 1.0, 1.0, 0.3, 0.0)] {
        let p = SystemParams::new(a, k, b, e, r).unwrap();
        let run = fock_evolve(&p, 55, 5.0, 2e-3).unwrap();
        let d = run.diagnostics;
        assert!(d.min_eigenvalue > -1e-10, "{p:?}: {}", d.min_eigenvalue);
        assert!(d.max_trace_drift < 1e-10, "{p:?}: {}", d.max_trace_drift);
        assert!(d.max_hermiticity_error < 1e-12, "{p:?}: {}", d.max_hermiticity_error);
    }
}
