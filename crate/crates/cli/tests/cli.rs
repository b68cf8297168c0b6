use std::process::{Command, Output};

fn randsub(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randsub"))
        .args(args)
        .env_remove("RANDSUB_CAPS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn analyze_period_doubling() {
    let out = randsub(&["analyze", "period-doubling", "--param", "p=0.5", "--kmax", "3", "--mmax", "3"]);
    let v = json(&out);
    assert_eq!(v["perron"]["lambda_exact"], 2);
    let r = v["perron"]["right"].as_array().unwrap();
    assert!((r[0].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-9);
    assert!((r[1].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);
    let closed = v["entropy"]["measure_entropy_closed"]["value"].as_f64().unwrap();
    assert!((closed - 2.0 / 3.0 * 2f64.ln()).abs() < 1e-12);
    assert_eq!(v["entropy"]["mme_flag"], "compatible-set-condition");
    assert_eq!(v["provenance"]["binding"]["p"], 0.5);
    assert_eq!(v["entropy"]["bounds"].as_array().unwrap().len(), 3);
}

#[test]
fn analyze_is_byte_identical() {
    let args = ["analyze", "example-5.3", "--kmax", "2", "--mmax", "2"];
    let a = randsub(&args);
    let b = randsub(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn analyze_reports_urp_witness() {
    let v = json(&randsub(&["analyze", "example-2.10", "--kmax", "2", "--mmax", "2"]));
    let urp = &v["conditions"]["urp"];
    assert_eq!(urp["verdict"], "refuted");
    assert_eq!(urp["witnesses"][0]["image"], "aba");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let nonprimitive = dir.path().join("np.spec");
    std::fs::write(&nonprimitive, "alphabet: a b\nrule a -> \"a\" : 1\nrule b -> \"b\" : 1\n").unwrap();
    let out = randsub(&["analyze", nonprimitive.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not primitive"));

    let bad = dir.path().join("bad.spec");
    std::fs::write(&bad, "alphabet: a b\nrule a -> \"ac\" : 1\nrule b -> \"a\" : 1\n").unwrap();
    assert_eq!(randsub(&["analyze", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(randsub(&["analyze", "no-such-fixture"]).status.code(), Some(1));
    assert_eq!(randsub(&["freqs", "period-doubling", "--param", "q=1"]).status.code(), Some(1));
    assert_eq!(randsub(&["freqs", "period-doubling", "--caps", "language=2"]).status.code(), Some(3));
    assert_eq!(randsub(&["check", "period-doubling", "--name", "nope"]).status.code(), Some(1));
    assert_eq!(randsub(&["analyze"]).status.code(), Some(1));
    assert_eq!(randsub(&["--help"]).status.code(), Some(0));
}

#[test]
fn caps_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_randsub"))
        .args(["freqs", "period-doubling"])
        .env("RANDSUB_CAPS", "language=2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn freqs_text_and_json() {
    let out = randsub(&["freqs", "period-doubling", "--n", "1"]);
    let text = stdout(&out);
    assert!(text.contains("a: 0.666666"), "{text}");
    assert!(text.contains("b: 0.333333"), "{text}");
    let v = json(&randsub(&["freqs", "period-doubling", "--n", "2", "--json"]));
    let total: f64 = v["slices"][1].as_array().unwrap().iter().map(|e| e["frequency"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn sample_is_deterministic() {
    let args = ["sample", "period-doubling", "--k", "2", "--trials", "2000", "--seed", "7"];
    let a = randsub(&args);
    let b = randsub(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("seed: 7"));
    let v = json(&randsub(&["sample", "period-doubling", "--k", "2", "--trials", "2000", "--seed", "7", "--json"]));
    let total: u64 = v["empirical"].as_array().unwrap().iter().map(|e| e["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 2000);
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = randsub(&[
        "sweep", "period-doubling", "--sweep", "p", "--from", "0.1", "--to", "0.9", "--steps", "8", "--kmax", "2", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "p,lower_1,lower_2,upper_1,upper_2,closed_form");
    assert_eq!(lines.len(), 10);
    let closed: Vec<f64> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    for i in 0..closed.len() {
        assert!((closed[i] - closed[closed.len() - 1 - i]).abs() < 1e-12);
    }
    let max = closed.iter().cloned().fold(f64::MIN, f64::max);
    assert!((max - 2.0 / 3.0 * 2f64.ln()).abs() < 1e-12);
    let out = randsub(&["sweep", "period-doubling", "--sweep", "p", "--from", "0", "--to", "0.5", "--steps", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_and_closed_commands() {
    let v = json(&randsub(&["check", "period-doubling", "--name", "urp"]));
    assert_eq!(v[0]["name"], "urp");
    assert_eq!(v[0]["result"]["result"]["verdict"], "implied-by-geometric");
    let all = json(&randsub(&["check", "example-5.6", "--rmax", "4"]));
    assert_eq!(all.as_array().unwrap().len(), 8);
    let c = json(&randsub(&["closed", "example-5.6", "--rule", "isc-ipp", "--rmax", "4"]));
    assert!((c["value"].as_f64().unwrap() - 0.5 * 2f64.ln()).abs() < 1e-12);
    let text = stdout(&randsub(&["closed", "random-fibonacci", "--rmax", "4"]));
    assert!(text.contains("dsc: n/a"), "{text}");
    let list = stdout(&randsub(&["list"]));
    for name in ["dyck", "recognisable", "constant-length-recognisable"] {
        assert!(list.contains(name));
    }
}
