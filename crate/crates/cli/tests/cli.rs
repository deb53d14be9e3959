use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_weylcalc"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Vec<u8> {
    let o = run(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o.stdout
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("osc.sym"), "1 + x^2 + xi^2\n").unwrap();
    std::fs::write(
        dir.path().join("sqrt.sym"),
        "dim 1\nbase a = 1 + x^2 + xi^2\nsymbol a^(1/2)\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("grid.csv"), "x,xi\n0,0\n1,0.5\n-2,3\n4,-1\n").unwrap();
    dir
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn check_weights_gevrey_two() {
    let dir = fixture();
    let r = json(&ok(dir.path(), &["check-weights", "--gevrey", "2", "--pmax", "200"]));
    let c = &r["result"]["conditions"];
    for k in ["holds_m1", "holds_m2", "holds_m3", "holds_m3prime", "holds_m4"] {
        assert_eq!(c[k], true, "{k}");
    }
    assert_eq!(r["result"]["p_max"], 200);
    assert_eq!(r["provenance"]["command"], "check-weights");
    assert_eq!(r["provenance"]["config"]["gevrey"], 2.0);
    assert!(r["provenance"]["versions"]["weylcalc"].is_string());
}

#[test]
fn complex_power_on_a_point_file() {
    let dir = fixture();
    let csv = String::from_utf8(ok(
        dir.path(),
        &[
            "complex-power",
            "--symbol",
            "osc.sym",
            "--z",
            "0.5",
            "--order",
            "4",
            "--points",
            "grid.csv",
        ],
    ))
    .unwrap();
    let mut rows = csv::Reader::from_reader(csv.as_bytes());
    assert_eq!(
        rows.headers().unwrap().iter().collect::<Vec<_>>(),
        ["point", "x", "xi", "j", "re", "im", "error", "warning"]
    );
    let recs: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(recs.len(), 16);
    for r in &recs {
        let (x, xi): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        let (re, im): (f64, f64) = (r[4].parse().unwrap(), r[5].parse().unwrap());
        match &r[3] {
            "0" => assert!((re - (1.0 + x * x + xi * xi).sqrt()).abs() < 1e-7 && im.abs() < 1e-12),
            "1" => assert_eq!((re, im), (0.0, 0.0)),
            _ => {}
        }
    }
    // the cpow alias runs the same command
    let again = ok(
        dir.path(),
        &[
            "cpow", "--symbol", "osc.sym", "--z", "0.5", "--order", "4", "--points", "grid.csv",
        ],
    );
    assert_eq!(again, csv.as_bytes());
}

#[test]
fn validate_sqrt_meets_the_spectral_targets() {
    let dir = fixture();
    let r = json(&ok(
        dir.path(),
        &["validate-sqrt", "--basis", "64", "--order", "4", "--z", "0.5"],
    ));
    let res = &r["result"];
    assert_eq!(res["exponent"], "1/2");
    assert!(res["initial_identity_defect"].as_f64().unwrap() < 1e-8);
    let runs = res["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 3);
    for run in runs {
        let orders = run["orders"].as_array().unwrap();
        assert_eq!(orders.len(), 4);
        assert_eq!(orders[0]["states"], serde_json::json!([16, 41]));
        let med = |k: usize| orders[k]["median_error"].as_f64().unwrap();
        assert!(orders[2]["max_error"].as_f64().unwrap() <= 0.15);
        assert!(med(2) < med(0), "t = {}", run["t"]);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = fixture();
    let cmds: [&[&str]; 4] = [
        &[
            "--seed",
            "5",
            "complex-power",
            "--symbol",
            "osc.sym",
            "--z",
            "0.5,0.3",
            "--order",
            "3",
            "--npoints",
            "6",
            "--resum",
        ],
        &[
            "--seed",
            "5",
            "heat",
            "--symbol",
            "sqrt.sym",
            "--order",
            "3",
            "--npoints",
            "4",
        ],
        &[
            "parametrix",
            "--symbol",
            "osc.sym",
            "--order",
            "4",
            "--profile-order",
            "2",
        ],
        &["quantize", "--symbol", "osc.sym", "--basis", "12", "--general", "--csv"],
    ];
    for (k, args) in cmds.iter().enumerate() {
        let mut outs = Vec::new();
        for rep in 0..2 {
            let d = dir.path().join(format!("run{k}_{rep}"));
            let mut full = vec!["--out", d.to_str().unwrap()];
            full.extend_from_slice(args);
            ok(dir.path(), &full);
            outs.push(d);
        }
        let (a, b) = (files(&outs[0]), files(&outs[1]));
        assert!(a.iter().any(|p| p.ends_with("metadata.json")));
        assert!(a.iter().any(|p| p.ends_with("provenance.json")));
        assert_eq!(a.len(), b.len());
        for (pa, pb) in a.iter().zip(&b) {
            if pa.ends_with("metadata.json") {
                continue;
            }
            assert_eq!(
                std::fs::read(pa).unwrap(),
                std::fs::read(pb).unwrap(),
                "{}",
                pa.display()
            );
        }
    }
}

#[test]
fn seeds_change_random_grids() {
    let dir = fixture();
    let base = ["complex-power", "--symbol", "osc.sym", "--z", "0.5", "--npoints", "3"];
    let a = ok(dir.path(), &[&["--seed", "1"][..], &base].concat());
    let b = ok(dir.path(), &[&["--seed", "2"][..], &base].concat());
    assert_ne!(a, b);
}

#[test]
fn config_run_matches_flags() {
    let dir = fixture();
    std::fs::write(
        dir.path().join("exp.toml"),
        "command = \"heat\"\nseed = 4\noutput_dir = \"from_config\"\n\n[params]\nsymbol = \"sqrt.sym\"\norder = 3\nnpoints = 3\nt_grid = [0.5, 1]\n",
    )
    .unwrap();
    let sub = dir.path().join("sub");
    std::fs::create_dir(&sub).unwrap();
    // paths in the config resolve against its directory, not the cwd
    ok(&sub, &["run", "../exp.toml"]);
    ok(
        dir.path(),
        &[
            "--seed",
            "4",
            "--out",
            "from_flags",
            "heat",
            "--symbol",
            "sqrt.sym",
            "--order",
            "3",
            "--npoints",
            "3",
            "--t-grid",
            "0.5,1",
        ],
    );
    for f in ["heat.csv", "terms.series"] {
        assert_eq!(
            std::fs::read(dir.path().join("from_config").join(f)).unwrap(),
            std::fs::read(dir.path().join("from_flags").join(f)).unwrap()
        );
    }
    let report = json(&std::fs::read(dir.path().join("from_config/report.json")).unwrap());
    assert_eq!(report["result"]["residual_zero"], serde_json::json!([true, true, true]));
    assert_eq!(report["provenance"]["seed"], 4);
}

#[test]
fn series_commands_compose() {
    let dir = fixture();
    let d = dir.path();
    ok(d, &["--out", "p", "parametrix", "--symbol", "osc.sym", "--order", "4"]);
    let prod = ok(
        d,
        &[
            "sharp",
            "--left",
            "p/parametrix.series",
            "--right",
            "p/parametrix.series",
            "--order",
            "4",
        ],
    );
    std::fs::write(d.join("prod.series"), &prod).unwrap();
    let there = ok(
        d,
        &[
            "requantize",
            "--series",
            "prod.series",
            "--from",
            "1/2",
            "--to",
            "0",
            "--order",
            "4",
        ],
    );
    std::fs::write(d.join("there.series"), &there).unwrap();
    let back = ok(
        d,
        &[
            "requantize",
            "--series",
            "there.series",
            "--from",
            "0",
            "--to",
            "0.5",
            "--order",
            "4",
        ],
    );
    assert_eq!(back, prod);
    let report = json(&std::fs::read(d.join("p/report.json")).unwrap());
    assert_eq!(report["result"]["left_identity_zero"], true);
    assert_eq!(report["result"]["right_identity_zero"], true);
}

#[test]
fn quantize_then_compare() {
    let dir = fixture();
    let d = dir.path();
    ok(
        d,
        &["--out", "poly", "quantize", "--symbol", "osc.sym", "--basis", "24"],
    );
    ok(
        d,
        &[
            "--out",
            "grid",
            "quantize",
            "--symbol",
            "osc.sym",
            "--basis",
            "24",
            "--general",
        ],
    );
    let r = json(&ok(
        d,
        &[
            "spectral-compare",
            "--reference",
            "poly/matrix.bin",
            "--candidate",
            "grid/matrix.bin",
            "--states",
            "0:12",
        ],
    ));
    assert!(r["result"]["max_error"].as_f64().unwrap() < 1e-6);
    assert_eq!(r["result"]["errors"].as_array().unwrap().len(), 12);
}

fn diagnostic(o: &Output) -> Value {
    let line = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(line.trim()).unwrap_or_else(|_| panic!("not a JSON diagnostic: {line}"))
}

#[test]
fn validation_failures_exit_with_two() {
    let dir = fixture();
    let d = dir.path();
    let cases: [&[&str]; 8] = [
        &["check-weights"],
        &["check-weights", "--gevrey=-1"],
        &["sharp", "--left", "missing", "--right", "missing", "--order", "2"],
        &["complex-power", "--symbol", "osc.sym", "--z", "3", "--k", "2"],
        &["validate-sqrt", "--basis", "8", "--states", "4:20"],
        &[
            "parametrix",
            "--symbol",
            "osc.sym",
            "--profile-order",
            "2",
            "--rho",
            "1.5",
        ],
        &["run", "nope.toml"],
        &["heat", "--symbol", "sqrt.sym", "--t-grid", "1,-1"],
    ];
    for args in cases {
        let o = run(d, args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty());
        let diag = diagnostic(&o);
        assert_eq!(diag["error"], "validation", "{args:?}");
        assert_eq!(diag["exit_code"], 2);
    }
    // argument parse errors use the same code and format
    let o = run(d, &["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(diagnostic(&o)["error"], "validation");
}

#[test]
fn module_errors_exit_with_one() {
    let dir = fixture();
    std::fs::write(dir.path().join("neg.sym"), "-1 - x^2\n").unwrap();
    // well-formed input, but the symbol violates the sector condition
    let o = run(
        dir.path(),
        &[
            "complex-power",
            "--symbol",
            "neg.sym",
            "--z",
            "0.5",
            "--points",
            "grid.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(diagnostic(&o)["error"], "error");
}

#[test]
fn validate_power_reports_each_order() {
    let dir = fixture();
    let r = json(&ok(
        dir.path(),
        &[
            "validate-power",
            "--basis",
            "24",
            "--states",
            "4:12",
            "--order",
            "2",
            "--sweep-r",
            "2,4",
        ],
    ));
    let res = &r["result"];
    assert!(res["balakrishnan"]["max_error"].as_f64().unwrap() < 1e-7);
    let runs = res["runs"].as_array().unwrap();
    let radii: Vec<f64> = runs.iter().map(|r| r["cutoff_r"].as_f64().unwrap()).collect();
    assert_eq!(radii, [1.5, 2.0, 4.0]);
    for run in runs {
        assert_eq!(run["orders"].as_array().unwrap().len(), 2);
    }
}
