use std::f64::consts::{FRAC_PI_2, PI};
use std::process::{Command, Output};

use triwell::critical::z_crit;

fn triwell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triwell"))
        .args(args)
        .env_remove("TRIWELL_PRECISION")
        .output()
        .expect("binary runs")
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(bytes: &[u8]) -> Csv {
        let mut r = csv::Reader::from_reader(bytes);
        let header = r.headers().unwrap().iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.unwrap().iter().map(String::from).collect())
            .collect();
        Csv { header, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap()
    }

    fn f(&self, row: usize, name: &str) -> f64 {
        self.rows[row][self.col(name)].parse().unwrap()
    }
}

#[test]
fn exit_codes() {
    assert_eq!(triwell(&["spectrum", "--Y", "0", "--Z", "0"]).status.code(), Some(0));
    let complex = triwell(&["spectrum", "--Y", "0", "--Z", "4.6"]);
    assert_eq!(complex.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&complex.stderr).contains("Z_crit - 2Y"));
    assert_eq!(triwell(&["spectrum", "--bogus"]).status.code(), Some(64));
    assert_eq!(triwell(&["spectrum", "--precision", "30"]).status.code(), Some(64));
    assert_eq!(triwell(&["verify", "--grid-n", "9"]).status.code(), Some(64));
    assert_eq!(triwell(&[]).status.code(), Some(64));
    assert_eq!(triwell(&["--help"]).status.code(), Some(0));
    assert_eq!(triwell(&["wavefunction", "--Z", "-5"]).status.code(), Some(2));
}

#[test]
fn hermitian_spectrum_from_binary() {
    let out = triwell(&["spectrum", "--Y", "0", "--Z", "0", "--n-max", "2"]);
    let csv = Csv::parse(&out.stdout);
    assert_eq!(csv.rows.len(), 9);
    for i in 0..9 {
        let k = (i / 3 + 1) as f64;
        assert!((csv.f(i, "energy") - k * k * PI * PI / 4.0).abs() < 1e-10);
        assert_eq!(csv.rows[i][csv.col("degeneracy")], "3");
    }
}

/// Root of `F(s, z/2s)` on the first lobe by plain bisection.
fn first_root(z: f64) -> f64 {
    let g = |s: f64| {
        let t = z / (2.0 * s);
        2.0 * s * (2.0 * s).sin() + 2.0 * t * (2.0 * t).sinh()
    };
    let n = 10_000;
    let (a, b) = (FRAC_PI_2, PI);
    let mut lo = a;
    let mut hi = b;
    for i in 1..n {
        let s = a + (b - a) * i as f64 / n as f64;
        if g(s) < 0.0 {
            hi = s;
            break;
        }
        lo = s;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn coupled_ground_states() {
    let out = triwell(&["spectrum", "--Y", "1", "--Z", "1", "--n-max", "0"]);
    let csv = Csv::parse(&out.stdout);
    assert_eq!(csv.rows.len(), 3);
    assert_eq!(csv.rows[0][csv.col("sigma")], "1");
    assert!((csv.f(0, "s") - first_root(3.0)).abs() < 1e-10);
    for i in [1, 2] {
        assert!((csv.f(i, "energy") - PI * PI / 4.0).abs() < 1e-11);
    }
}

#[test]
fn csv_round_trip() {
    let precision = 12;
    let out = triwell(&["spectrum", "--Y", "0.7", "--Z", "-1.3", "--n-max", "5"]);
    let csv = Csv::parse(&out.stdout);
    let rel = 10f64.powi(1 - precision);
    for i in 0..csv.rows.len() {
        let (s, t) = (csv.f(i, "s"), csv.f(i, "t"));
        let e = csv.f(i, "energy");
        assert!((s * s - t * t - e).abs() <= 4.0 * rel * (s * s + t * t));
        let z_eff = match csv.rows[i][csv.col("sigma")].as_str() {
            "1" => -1.3 + 1.4,
            _ => -1.3 - 0.7,
        };
        let hyperbola = 2.0 * s * t - z_eff;
        assert!((hyperbola - csv.f(i, "hyperbola_residual")).abs() <= 4.0 * rel * 2.0 * s * t.abs() + 1e-15);
        let f = 2.0 * s * (2.0 * s).sin() + 2.0 * t * (2.0 * t).sinh();
        let scale = 4.0 * s * (s + t.abs()).exp();
        assert!((f - csv.f(i, "secular_residual")).abs() <= 4.0 * rel * scale);
    }
}

#[test]
fn json_layout() {
    let out = triwell(&["critical", "--iterations", "2", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["command"], "critical");
    assert_eq!(v["results"]["rows"].as_array().unwrap().len(), 3);
    assert!(v["residuals"]["oracle_g"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn domain_is_deterministic_across_thread_counts() {
    let args = ["domain", "--resolution", "41"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_triwell"))
            .args(args)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("4"));
}

#[test]
fn domain_edge_flips_within_one_cell() {
    let zc = z_crit();
    let y = 1.2;
    let edge = zc - 2.0 * y;
    let (lo, hi) = (format!("{}", edge - 0.05), format!("{}", edge + 0.05));
    let out = triwell(&[
        "domain", "--y-min", "1.2", "--y-max", "1.3", "--z-min", &lo, "--z-max", &hi, "--resolution", "11",
    ]);
    let csv = Csv::parse(&out.stdout);
    let flags: Vec<&str> = csv.rows[3..14].iter().map(|r| r[csv.col("real")].as_str()).collect();
    let flips = flags.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(flips, 1, "{flags:?}");
    let inside = triwell(&["domain", "--y-min", "1", "--y-max", "2", "--z-min", "0", "--z-max", "1", "--resolution", "2"]);
    let csv = Csv::parse(&inside.stdout);
    assert_eq!(csv.rows[3][csv.col("real")], "true");
}

#[test]
fn curves_touch_at_critical_coupling() {
    let zc = format!("{}", z_crit());
    let check = |z: &str| {
        let out = triwell(&["curves", "--Y", "0", "--Z", z, "--s-max", "3.2", "--samples", "4000"]);
        let csv = Csv::parse(&out.stdout);
        let mut oval = std::collections::BTreeMap::new();
        let mut gap = f64::NEG_INFINITY;
        for i in 0..csv.rows.len() {
            let (s, t) = (csv.f(i, "s"), csv.f(i, "t"));
            match csv.rows[i][csv.col("curve")].as_str() {
                "oval" => {
                    assert!(csv.f(i, "residual").abs() <= 1e-9);
                    if t >= 0.0 {
                        oval.insert(s.to_bits(), t);
                    }
                }
                _ if csv.rows[i][csv.col("sigma")] == "1" => {
                    if let Some(to) = oval.get(&s.to_bits()) {
                        gap = gap.max(to - t);
                    }
                }
                _ => {}
            }
        }
        for k in 1..=2 {
            let s = k as f64 * FRAC_PI_2;
            let on_axis = oval.iter().any(|(b, t)| (f64::from_bits(*b) - s).abs() < 1e-11 && *t == 0.0);
            assert!(on_axis, "no axis point at {s}");
        }
        gap
    };
    let touching = check(&zc);
    // The hyperbola stays outside the oval and touches it once.
    assert!(touching <= 1e-9 && touching > -1e-5, "{touching}");
    assert!(check("4.3") > 1e-3);
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "precision = 8\nY = 0.0\nZ = 1.0\nn_max = 0\n").unwrap();
    let p = path.to_str().unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_triwell"));
        cmd.args(["spectrum", "--config", p]).args(extra);
        match env {
            Some(v) => cmd.env("TRIWELL_PRECISION", v),
            None => cmd.env_remove("TRIWELL_PRECISION"),
        };
        let out = cmd.output().unwrap();
        let csv = Csv::parse(&out.stdout);
        csv.rows[0][csv.col("s")].clone()
    };
    assert_eq!(run(&[], Some("10")), "1.6321181e0");
    assert_eq!(run(&["--precision", "6"], Some("10")), "1.63212e0");
    let out = Command::new(env!("CARGO_BIN_EXE_triwell"))
        .args(["spectrum", "--Z", "1", "--n-max", "0"])
        .env("TRIWELL_PRECISION", "10")
        .output()
        .unwrap();
    let csv = Csv::parse(&out.stdout);
    assert_eq!(csv.rows[0][csv.col("s")], "1.632118128e0");
    assert_eq!(triwell(&["spectrum", "--config", "/nonexistent.toml"]).status.code(), Some(64));
}

#[test]
fn output_file_and_wavefunction() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.csv");
    let out = triwell(&[
        "wavefunction", "--Y", "0.5", "--Z", "0.5", "--sigma", "2", "--n", "1", "--samples", "21",
        "--output", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = Csv::parse(&std::fs::read(&path).unwrap());
    assert_eq!(csv.rows.len(), 21);
    assert_eq!(csv.f(0, "x"), -1.0);
    assert_eq!(csv.f(20, "x"), 1.0);
    for i in 0..21 {
        // Branch 2 eigenvector (1, -1, 0).
        assert_eq!(csv.f(i, "re_a"), -csv.f(i, "re_b"));
        assert_eq!(csv.f(i, "re_c"), 0.0);
    }
}
