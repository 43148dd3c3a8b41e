//! Exit criteria, one PASS/FAIL line each. Runs as a plain binary so every
//! line is printed whether or not it passes; the process fails if any does.

use std::time::Instant;

use cascade_core::analytics::{
    cavity_variances, hwhm_closed_form, mean_photon_cavity, mean_photon_output, minimize_over_beta, output_minus_threshold_uncorrected,
    output_variances, squeezing_spectrum_output, BetaMinimum, BetaQuantity, EpsilonChoice, GridRefine, PhotonTime, PowerSelector,
};
use cascade_core::cli::oracle::{random_parameter_sets, run_oracle, OracleSettings};
use cascade_core::cli::report::{build_report, output_photon_crossing};
use cascade_core::langevin::{simulate_ensemble, EnsembleConfig};
use cascade_core::moments::integrate_moments;
use cascade_core::numerics::linspace;
use cascade_core::spectra::parseval_check;
use cascade_core::{derive_coefficients, SystemParams};

const ORACLE_SEED: u64 = 2024;

struct Gate {
    failed: usize,
    total: usize,
}

impl Gate {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        self.total += 1;
        if !pass {
            self.failed += 1;
        }
        println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn reference() -> SystemParams {
    SystemParams::new(100.0, 0.8, 0.0, 0.0, 1.0).unwrap()
}

fn minimum(q: BetaQuantity, eps: EpsilonChoice) -> BetaMinimum {
    minimize_over_beta(q, &reference(), eps, (0.0, 1.0), GridRefine::default()).unwrap()
}

fn minimum_ok(m: &BetaMinimum, value: f64, beta: f64) -> bool {
    within(m.value, value, 0.002) && within(m.beta, beta, 0.005)
}

fn criteria_1_to_4(g: &mut Gate) {
    let t0 = Instant::now();
    let cav_th = minimum(BetaQuantity::CavityMinus, EpsilonChoice::Threshold);
    let secs = t0.elapsed().as_secs_f64();
    g.line(
        "1",
        minimum_ok(&cav_th, 0.022, 0.022) && secs < 1.0,
        format!("cavity threshold minimum {:.6} at beta={:.6} in {secs:.3} s", cav_th.value, cav_th.beta),
    );

    let cav_0 = minimum(BetaQuantity::CavityMinus, EpsilonChoice::Fixed(0.0));
    g.line(
        "2",
        minimum_ok(&cav_0, 0.035, 0.023),
        format!("no-amplifier cavity minimum {:.6} at beta={:.6}", cav_0.value, cav_0.beta),
    );

    let out_th = minimum(BetaQuantity::OutputMinus, EpsilonChoice::Threshold);
    let p0 = reference().at_threshold().unwrap();
    let unc = output_minus_threshold_uncorrected(&p0).unwrap();
    let text = build_report(1).unwrap().text();
    let line = text.lines().find(|l| l.contains("uncorrected=") && l.contains("at threshold")).unwrap_or("").to_string();
    let shown_negative = line.contains("uncorrected=-");
    g.line(
        "3",
        minimum_ok(&out_th, 0.045, 0.022) && unc < 0.0 && shown_negative,
        format!(
            "output threshold minimum {:.6} at beta={:.6}; report shows `{}`",
            out_th.value,
            out_th.beta,
            line.trim()
        ),
    );

    let out_0 = minimum(BetaQuantity::OutputMinus, EpsilonChoice::Fixed(0.0));
    let gap = out_0.value - out_th.value;
    g.line(
        "4",
        minimum_ok(&out_0, 0.055, 0.023) && within(gap, 0.010, 0.004),
        format!("no-amplifier output minimum {:.6} at beta={:.6}; amplifier gap {gap:.6}", out_0.value, out_0.beta),
    );
}

fn criterion_5(g: &mut Gate) {
    let mut worst: f64 = 0.0;
    for r in [0.0, 0.5, 1.0, 2.0] {
        for k in [0.5, 0.8] {
            for a in [10.0, 100.0] {
                let p = SystemParams::new(a, k, 0.0, 0.0, r).unwrap().at_threshold().unwrap();
                let (_, m) = squeezing_spectrum_output(&p, &[0.0]).unwrap();
                worst = worst.max(m.values[0].value().map_or(f64::INFINITY, f64::abs));
            }
        }
    }
    g.line("5", worst <= 1e-12, format!("largest |S_-(0)| over 16 threshold sets at beta=0: {worst:e}"));
}

fn criterion_6(g: &mut Gate) {
    let h = |e: f64| hwhm_closed_form(PowerSelector::Cavity, &SystemParams::new(100.0, 0.8, 0.01, e, 1.0).unwrap()).unwrap();
    let (h2, h3) = (h(0.2), h(0.3));
    g.line(
        "6",
        h3 < h2,
        format!("half width {h2:.4} (epsilon=0.2) -> {h3:.4} (epsilon=0.3); quoted 0.80 -> 0.75 not reproduced"),
    );
}

fn criteria_7_and_8(g: &mut Gate, sets: &[SystemParams]) {
    let t0 = Instant::now();
    let mut ode_worst: f64 = 0.0;
    let mut fock_worst: f64 = 0.0;
    let mut mc_ok = 0;
    let mut parseval_worst: f64 = 0.0;
    for (i, p) in sets.iter().enumerate() {
        let s = OracleSettings {
            mc_traj: 10_000,
            seed: ORACLE_SEED + i as u64,
            ..OracleSettings::default()
        };
        let o = run_oracle(p, &s).unwrap();
        let fg = o.fock_gap().unwrap();
        let z = o.mc_z().unwrap();
        let n_max = o.fock.as_ref().map_or(0, |f| f.2);
        println!(
            "     set {i}: A={:.4} kappa={:.4} beta={:.4} epsilon={:.4} r={:.4} n={:.5} ode={:.1e} fock={:.1e} (n_max={n_max}) z={:.2}",
            p.linear_gain, p.kappa, p.beta, p.epsilon, p.squeeze_r, o.closed.mean_n, o.ode_gap(), fg, z
        );
        ode_worst = ode_worst.max(o.ode_gap());
        fock_worst = fock_worst.max(fg);
        if z <= 4.0 {
            mc_ok += 1;
        }
        parseval_worst = parseval_worst.max(parseval_check(p).unwrap().relative_gap);
    }
    let secs = t0.elapsed().as_secs_f64();
    g.line(
        "7",
        ode_worst <= 1e-8 && fock_worst <= 1e-4 && mc_ok * 10 >= 9 * sets.len() && secs < 300.0,
        format!(
            "{} random sets: ode gap {ode_worst:.1e}, fock gap {fock_worst:.1e}, mc within 4 SE on {mc_ok}/{}, {secs:.1} s",
            sets.len(),
            sets.len()
        ),
    );
    g.line("8", parseval_worst <= 1e-3, format!("largest Parseval relative gap {parseval_worst:.1e}"));
}

fn criterion_9(g: &mut Gate, sets: &[SystemParams]) {
    let mut sampled: Vec<SystemParams> = sets.to_vec();
    for b in linspace(0.0, 1.0, 11) {
        let p = reference().with_beta(b).unwrap();
        sampled.push(p);
        sampled.push(p.at_threshold().unwrap());
    }
    let mut limit_err: f64 = 0.0;
    let mut worst_at = reference();
    let mut min_product = f64::INFINITY;
    for p in &sampled {
        let c = derive_coefficients(p);
        let w = 1e3 * c.lambda_minus.max(c.lambda_plus);
        let (sp, sm) = squeezing_spectrum_output(p, &[w]).unwrap();
        let r2 = 2.0 * p.squeeze_r;
        let e = ((sp.values[0].value().unwrap_or(f64::NAN) - r2.exp()).abs() / r2.exp())
            .max((sm.values[0].value().unwrap_or(f64::NAN) - (-r2).exp()).abs() / (-r2).exp());
        if !(e <= limit_err) {
            limit_err = e;
            worst_at = *p;
        }
        if c.lambda_minus > 0.0 {
            for q in [cavity_variances(p).unwrap(), output_variances(p).unwrap()] {
                if let Some(x) = q.uncertainty_product() {
                    min_product = min_product.min(x);
                }
            }
        }
    }
    g.line(
        "9",
        limit_err <= 1e-6 && min_product >= 1.0 - 1e-9,
        format!(
            "largest relative gap of S_+- from e^(+-2r) at omega = 1e3 max(lambda): {limit_err:.2e} (A={} beta={:.2} epsilon={:.4}); smallest uncertainty product {min_product:.9}",
            worst_at.linear_gain, worst_at.beta, worst_at.epsilon
        ),
    );
}

fn rk4_error(p: &SystemParams, t: f64, dt: f64) -> f64 {
    let s = integrate_moments(p, t, dt).unwrap();
    (s.last().mean_n - mean_photon_cavity(p, PhotonTime::At(t)).unwrap()).abs()
}

fn criterion_10(g: &mut Gate) {
    let p = SystemParams::new(1.0, 1.0, 0.5, 0.1, 0.3).unwrap();
    let (e1, e2) = (rk4_error(&p, 4.0, 0.2), rk4_error(&p, 4.0, 0.1));
    let rk4_order = (e1 / e2).log2();

    // exact drift: the stationary bias comes from the noise alone and is
    // n (2 lambda dt / (1 - e^{-2 lambda dt}) - 1)
    let q = SystemParams::new(4.0, 1.0, 0.0, 0.0, 0.0).unwrap();
    let c = derive_coefficients(&q);
    let n_exact = mean_photon_cavity(&q, PhotonTime::SteadyState).unwrap();
    let bias = |lambda_dt: f64| {
        let cfg = EnsembleConfig::new(200_000, 20.0 / c.lambda_minus, lambda_dt / c.lambda_plus, 77);
        let st = simulate_ensemble(&q, &cfg).unwrap();
        st.n_at(st.final_index()).mean - n_exact
    };
    let (b1, b2) = (bias(0.2), bias(0.1));
    let em_order = (b1 / b2).log2();
    g.line(
        "10",
        (3.7..=4.3).contains(&rk4_order) && (0.7..=1.3).contains(&em_order),
        format!("RK4 order {rk4_order:.3} (errors {e1:.2e}, {e2:.2e}); Euler-Maruyama weak order {em_order:.3} (biases {b1:.4}, {b2:.4})"),
    );
}

fn criterion_11(g: &mut Gate) {
    let betas: Vec<f64> = linspace(0.0, 0.5, 51).into_iter().filter(|&b| b < 0.5).collect();
    let n = |b: f64, r: f64, e: f64| mean_photon_cavity(&SystemParams::new(25.0, 0.8, b, e, r).unwrap(), PhotonTime::SteadyState).unwrap();
    let raised = betas.iter().all(|&b| {
        let full = n(b, 1.0, 0.3);
        full > n(b, 0.0, 0.3) && full > n(b, 1.0, 0.0)
    });
    let below = betas.iter().filter(|&&b| {
        let p = SystemParams::new(25.0, 0.8, b, 0.3, 1.0).unwrap();
        mean_photon_output(&p, PhotonTime::SteadyState).unwrap() < mean_photon_cavity(&p, PhotonTime::SteadyState).unwrap()
    });
    let below = below.count();
    let crossing = output_photon_crossing(0.0, 1.0).unwrap();
    g.line(
        "11",
        raised && below == betas.len(),
        format!(
            "amplifier and squeezing raise n on all {} beta < 0.5: {raised}; output below cavity on {below}/{}; crossing at beta={}",
            betas.len(),
            betas.len(),
            crossing.map_or("none".to_string(), |b| format!("{b:.4}"))
        ),
    );
}

fn main() {
    let mut g = Gate { failed: 0, total: 0 };
    let sets = random_parameter_sets(ORACLE_SEED, 10);
    criteria_1_to_4(&mut g);
    criterion_5(&mut g);
    criterion_6(&mut g);
    criteria_7_and_8(&mut g, &sets);
    criterion_9(&mut g, &sets);
    criterion_10(&mut g);
    criterion_11(&mut g);
    println!("{} criteria, {} failed", g.total, g.failed);
    if g.failed > 0 {
        std::process::exit(1);
    }
}
