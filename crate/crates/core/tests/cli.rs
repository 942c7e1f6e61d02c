use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_compound-secrecy"))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_slice(&o.stdout).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr)
        .unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&o.stderr)))
}

const GRAM_21: &str = r#"{"eigenvalues": [2, 1], "eigenvectors": {"rows": 2, "cols": 2, "entries": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}}"#;
const H_DIAG: &str =
    r#"{"rows": 2, "cols": 2, "entries": [[[1.4142135623730951, 0], [0, 0]], [[0, 0], [1, 0]]]}"#;
const H_RANK1: &str =
    r#"{"rows": 2, "cols": 2, "entries": [[[1.4142135623730951, 0], [0, 0]], [[0, 0], [0, 0]]]}"#;
const BSC_FAMILY: &str =
    r#"{"states": [{"legit": [[0.9, 0.1], [0.1, 0.9]], "eaves": [[0.8, 0.2], [0.2, 0.8]]}]}"#;

struct Files {
    _dir: TempDir,
    gram: String,
    h: String,
    h_rank1: String,
    family: String,
    root: PathBuf,
}

fn files() -> Files {
    let dir = TempDir::new().unwrap();
    let root = dir.path().to_path_buf();
    let s = |p: PathBuf| p.to_str().unwrap().to_string();
    Files {
        gram: s(write(&root, "gram.json", GRAM_21)),
        h: s(write(&root, "h.json", H_DIAG)),
        h_rank1: s(write(&root, "h1.json", H_RANK1)),
        family: s(write(&root, "fam.json", BSC_FAMILY)),
        root,
        _dir: dir,
    }
}

#[test]
fn capacity_report() {
    let f = files();
    let o = run(&[
        "capacity",
        "--channel",
        &f.gram,
        "--eaves-bound",
        "0.5",
        "--eaves-bound-kind",
        "power",
        "--power",
        "1",
    ]);
    let v = stdout_json(&o);
    assert_eq!(v["model"], "isotropic");
    assert!((v["capacity"].as_f64().unwrap() - 0.7066).abs() < 1e-4);
    assert_eq!(v["active_count"], 2);
    assert!((v["high_snr_asymptote"].as_f64().unwrap() - 8f64.ln()).abs() < 1e-12);
    assert_eq!(v["worst_eaves"]["rows"], 2);
}

#[test]
fn channel_matrix_is_h_unless_gram() {
    let f = files();
    // H = diag(√2, 1) has Gram diag(2, 1)
    let a = stdout_json(&run(&[
        "capacity",
        "--channel",
        &f.h,
        "--eaves-bound",
        "0.5",
        "--eaves-bound-kind",
        "power",
        "--power",
        "1",
    ]));
    let b = stdout_json(&run(&[
        "capacity",
        "--channel",
        &f.gram,
        "--eaves-bound",
        "0.5",
        "--eaves-bound-kind",
        "power",
        "--power",
        "1",
    ]));
    assert!((a["capacity"].as_f64().unwrap() - b["capacity"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn voltage_bound_is_squared() {
    let f = files();
    let v = stdout_json(&run(&[
        "capacity",
        "--channel",
        &f.gram,
        "--eaves-bound",
        "0.5",
        "--eaves-bound-kind",
        "voltage",
        "--power",
        "1",
    ]));
    assert_eq!(v["epsilon"].as_f64().unwrap(), 0.25);
}

#[test]
fn bits_divide_by_ln2() {
    let f = files();
    let base = [
        "capacity",
        "--channel",
        &f.gram,
        "--eaves-bound",
        "0.5",
        "--eaves-bound-kind",
        "power",
        "--power",
        "1",
    ];
    let nats = stdout_json(&run(&base));
    let mut with_bits = base.to_vec();
    with_bits.push("--bits");
    let bits = stdout_json(&run(&with_bits));
    assert_eq!(bits["units"], "bits");
    let ratio = nats["capacity"].as_f64().unwrap() / bits["capacity"].as_f64().unwrap();
    assert!((ratio - std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn eaves_bound_kind_is_mandatory() {
    let f = files();
    let o = run(&[
        "capacity",
        "--channel",
        &f.gram,
        "--eaves-bound",
        "0.5",
        "--power",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "parse");
}

#[test]
fn rank_exceeded_is_refused() {
    let f = files();
    let o = run(&[
        "capacity",
        "--channel",
        &f.gram,
        "--eaves-bound",
        "0.5",
        "--eaves-bound-kind",
        "power",
        "--power",
        "1",
        "--rank-bound",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "rank_exceeded");
    assert_eq!(e["exit_code"], 3);
    assert!(o.stdout.is_empty());
}

#[test]
fn double_sided_models() {
    let f = files();
    let v = stdout_json(&run(&[
        "capacity",
        "--channel",
        &f.h,
        "--eaves-bound",
        "0.5",
        "--eaves-bound-kind",
        "power",
        "--power",
        "1",
        "--legit-bound",
        "0.2",
    ]));
    assert_eq!(v["model"], "double_sided");
    assert_eq!(v["active_count"], 1);
    assert!(v["worst_legit_channel"].is_object());

    let args = [
        "capacity",
        "--channel",
        &f.h_rank1,
        "--eaves-bound",
        "0.5",
        "--eaves-bound-kind",
        "voltage",
        "--power",
        "1",
        "--legit-bound",
        "0.2",
        "--rank-bound",
        "1",
    ];
    let o = run(&args);
    assert_eq!(o.status.code(), Some(3), "seed is required");
    let mut seeded = args.to_vec();
    seeded.extend(["--seed", "5"]);
    let v = stdout_json(&run(&seeded));
    assert_eq!(v["model"], "double_rank");
    assert!((v["capacity"].as_f64().unwrap() - 0.68282).abs() < 1e-4);
    assert!(v["worst_eaves_channel"].is_object());
}

#[test]
fn worst_case_outputs() {
    let f = files();
    let v = stdout_json(&run(&[
        "worst-case",
        "--channel",
        &f.h,
        "--eaves-bound",
        "0.5",
        "--eaves-bound-kind",
        "power",
        "--legit-bound",
        "0.2",
    ]));
    let g = v["degraded_gains"].as_array().unwrap();
    assert!((g[0].as_f64().unwrap() - 1.47431).abs() < 1e-5);
    assert!((g[1].as_f64().unwrap() - 0.64).abs() < 1e-12);
    let v = stdout_json(&run(&[
        "worst-case",
        "--channel",
        &f.gram,
        "--eaves-bound",
        "0.5",
        "--eaves-bound-kind",
        "power",
    ]));
    assert_eq!(v["worst_eaves"]["entries"][1][1][0].as_f64().unwrap(), 0.5);
}

#[test]
fn verify_saddle_zero_samples_passes() {
    let f = files();
    let v = stdout_json(&run(&[
        "verify-saddle",
        "--channel",
        &f.gram,
        "--eaves-bound",
        "0.5",
        "--eaves-bound-kind",
        "power",
        "--power",
        "1",
        "--samples",
        "0",
        "--seed",
        "1",
    ]));
    assert_eq!(v["passed"], true);
    assert_eq!(v["samples"], 0);
}

#[test]
fn verify_saddle_is_reproducible() {
    let f = files();
    let args = [
        "verify-saddle",
        "--channel",
        &f.gram,
        "--eaves-bound",
        "0.5",
        "--eaves-bound-kind",
        "power",
        "--power",
        "1",
        "--samples",
        "300",
        "--seed",
        "9",
        "--workers",
        "2",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout_json(&a)["passed"], true);
}

#[test]
fn sweep_csv_to_file() {
    let f = files();
    let out = f.root.join("sweep.csv");
    let o = run(&[
        "sweep",
        "--channel",
        &f.gram,
        "--eaves-bound",
        "0,0.1,0.3,1",
        "--eaves-bound-kind",
        "power",
        "--power-range",
        "0.1:1e4:30",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv_lines(&std::fs::read_to_string(&out).unwrap());
    let header = rdr.remove(0);
    assert_eq!(
        header,
        "p_total,epsilon,capacity_nats,active_modes,water_level"
    );
    assert_eq!(rdr.len(), 120);
}

fn csv_lines(s: &str) -> Vec<String> {
    s.lines().map(str::to_string).collect()
}

#[test]
fn report_round_trips_through_out_file() {
    let f = files();
    let out = f.root.join("rep.json");
    let o = run(&[
        "capacity",
        "--channel",
        &f.gram,
        "--eaves-bound",
        "0.3",
        "--eaves-bound-kind",
        "power",
        "--power",
        "3.7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again, v);
    let report: compound_secrecy::CapacityReport = serde_json::from_value(v).unwrap();
    let direct = compound_secrecy::secrecy::capacity_isotropic(
        &compound_secrecy::HermitianPSD::from_real_diag(&[2.0, 1.0]).unwrap(),
        0.3,
        3.7,
    )
    .unwrap();
    assert_eq!(report.capacity.to_bits(), direct.capacity.to_bits());
}

#[test]
fn file_rejections() {
    let f = files();
    let bad_row = write(
        &f.root,
        "bad.json",
        r#"{"states": [{"legit": [[0.9, 0.1], [0.1, 0.88]], "eaves": [[0.8, 0.2], [0.2, 0.8]]}]}"#,
    );
    let o = run(&["dmc-rate", "--channel", bad_row.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "not_stochastic");
    assert!(e["message"].as_str().unwrap().contains("row 1"));

    let mismatch = write(
        &f.root,
        "mm.json",
        r#"{"states": [{"legit": [[0.9, 0.1], [0.1, 0.9]], "eaves": [[0.8, 0.2], [0.2, 0.8]]},
                       {"legit": [[0.5, 0.25, 0.25], [0.1, 0.8, 0.1]], "eaves": [[0.8, 0.2], [0.2, 0.8]]}]}"#,
    );
    let o = run(&["dmc-rate", "--channel", mismatch.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "dimension_mismatch");

    let not_herm = write(
        &f.root,
        "nh.json",
        r#"{"rows": 2, "cols": 2, "entries": [[[1, 0], [0.5, 0]], [[0, 0], [1, 0]]]}"#,
    );
    let o = run(&[
        "capacity",
        "--channel",
        not_herm.to_str().unwrap(),
        "--gram",
        "--eaves-bound",
        "0.5",
        "--eaves-bound-kind",
        "power",
        "--power",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "not_hermitian");
    assert!(e["message"].as_str().unwrap().contains("(0, 1)"));

    let garbage = write(&f.root, "g.json", "{not json");
    let o = run(&["dmc-rate", "--channel", garbage.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&[
        "dmc-rate",
        "--channel",
        f.root.join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "io");
}

#[test]
fn dmc_commands() {
    let f = files();
    let v = stdout_json(&run(&["dmc-rate", "--channel", &f.family]));
    assert!((v["rate"].as_f64().unwrap() - 0.175319).abs() < 1e-6);

    let v = stdout_json(&run(&[
        "dmc-quantize",
        "--channel",
        &f.family,
        "--levels",
        "10000",
        "--seed",
        "3",
        "--blocklength",
        "100",
        "--alpha",
        "0.1",
        "--beta",
        "0.1",
        "--scale",
        "321",
    ]));
    assert_eq!(v["all_additive_hold"], true);
    assert_eq!(v["all_mutual_information_hold"], true);
    assert!(v["bounds"]["approx_leakage_bound"].as_f64().unwrap() > 0.0);

    let o = run(&[
        "dmc-quantize",
        "--channel",
        &f.family,
        "--levels",
        "10",
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(3));

    let v = stdout_json(&run(&[
        "dmc-order",
        "--channel",
        &f.family,
        "--samples",
        "200",
        "--seed",
        "1",
    ]));
    let s = &v["states"][0];
    assert_eq!(s["degraded"]["degraded"], true);
    assert_eq!(s["less_capable"]["holds"], true);
    assert_eq!(s["noisier"]["holds"], true);
    assert_eq!(s["noisier"]["sampled"], true);
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("capacity"));
}
