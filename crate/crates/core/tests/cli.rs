use std::fs;
use std::process::{Command, Output};

fn cascade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(cascade(&["coeffs"]).status.code(), Some(0));
    assert_eq!(cascade(&["figure", "fig1"]).status.code(), Some(2));
    assert_eq!(cascade(&["figure", "fig14"]).status.code(), Some(2));
    assert_eq!(cascade(&["bogus"]).status.code(), Some(2));
    assert_eq!(cascade(&["variance", "--kappa", "-1"]).status.code(), Some(2));
    assert_eq!(cascade(&["sweep", "--var", "beta", "--from", "0", "--to", "1", "--count", "1", "--quantity", "photon"]).status.code(), Some(2));
    // above threshold: a stability error
    let o = cascade(&["variance", "--epsilon", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("threshold"));
    assert_eq!(cascade(&["variance", "--out", "/nonexistent-dir/v.csv"]).status.code(), Some(1));
}

#[test]
fn bad_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "kappa=0.8\nbeta=abc\n").unwrap();
    let o = cascade(&["variance", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "# figure parameters\nkappa=0.8\nA=100\nbeta=0.022\nr=1\nepsilon=threshold\n").unwrap();
    let cfg = path.to_str().unwrap();
    let from_file = cascade(&["variance", "--config", cfg, "--epsilon", "0"]);
    let direct = cascade(&["variance", "--kappa", "0.8", "--A", "100", "--beta", "0.022", "--r", "1", "--epsilon", "0"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(stdout(&from_file), stdout(&direct));
    // the file alone resolves epsilon to the threshold: plus quadrature diverges
    let th = stdout(&cascade(&["variance", "--config", cfg]));
    assert!(th.contains("inf") && th.contains("# diverges: plus quadrature at threshold"));
}

#[test]
fn mc_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = cascade(&["mc", "--seed", "7", "--ntraj", "300", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    let (x, y) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("t,n,n_se,"));
    assert!(!text.contains('\r'));
    let other = cascade(&["mc", "--seed", "8", "--ntraj", "300"]);
    assert_ne!(stdout(&other), text);
}

#[test]
fn figure_csv_is_reproducible() {
    let a = cascade(&["figure", "fig3", "--points", "7"]);
    let b = cascade(&["figure", "fig3", "--points", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("beta,no_amplifier_r0,threshold_r0,threshold_r1"));
    assert_eq!(lines.clone().filter(|l| !l.starts_with('#')).count(), 7);
    for line in lines.filter(|l| !l.starts_with('#')) {
        for cell in line.split(',') {
            cell.parse::<f64>().unwrap();
        }
    }
}

#[test]
fn sweep_is_ordered() {
    let o = cascade(&["sweep", "--var", "beta", "--from", "0", "--to", "1", "--count", "5", "--quantity", "cavity-minus"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let betas: Vec<f64> = text.lines().skip(1).filter(|l| !l.starts_with('#')).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(betas, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
}
