use std::io::Write;
use std::path::{Path, PathBuf};

use gaussian_ceo_cli::{run, EXIT_INFEASIBLE, EXIT_USAGE};

const M1: &str = "k = 1\nl = 2\nsigma_x = [[1.0]]\na = [[1.0], [1.0]]\nnoise_var = [1.0, 1.0]\n";
const CYC2: &str = "kind = \"direct\"\nl = 2\nsigma_x = [[1.0, 0.5], [0.5, 1.0]]\nnoise_var = [0.1, 0.1]\n";

fn write_model(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::File::create(&path)
        .unwrap()
        .write_all(body.as_bytes())
        .unwrap();
    path
}

fn gceo(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("gceo").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn sumrate_matches_for_m1() {
    let dir = tempfile::tempdir().unwrap();
    let m1 = write_model(dir.path(), "M1.model", M1);
    let (code, out, _) = gceo(&["sumrate", m1.to_str().unwrap(), "--gamma", "1", "--sum", "0.5"]);
    assert_eq!(code, 0);
    assert!(out.contains("inner=1.03972 nats"), "{out}");
    assert!(out.contains("outer=1.03972 nats"), "{out}");
    assert!(out.contains("matched=yes"), "{out}");

    let (_, bits, _) = gceo(&["--bits", "sumrate", m1.to_str().unwrap(), "--sum", "0.5"]);
    assert!(bits.contains("inner=1.5 bits"), "{bits}");
}

#[test]
fn curve_starts_at_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let cyc = write_model(dir.path(), "cyc2.model", CYC2);
    let (code, out, _) = gceo(&["curve", cyc.to_str().unwrap(), "--steps", "3"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "r,R_nats,D");
    assert_eq!(lines[1], "0,0,2.2");
}

#[test]
fn zero_rates_are_achievable_at_the_prior() {
    let dir = tempfile::tempdir().unwrap();
    let m1 = write_model(dir.path(), "M1.model", M1);
    let (code, out, _) = gceo(&["member", m1.to_str().unwrap(), "--rates", "0,0", "--matrix", "1.0"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("achievable (r=0"), "{out}");
}

#[test]
fn other_subcommands_report() {
    let dir = tempfile::tempdir().unwrap();
    let m1 = write_model(dir.path(), "M1.model", M1);
    let cyc = write_model(dir.path(), "cyc2.model", CYC2);
    let m1 = m1.to_str().unwrap();
    let (code, out, _) = gceo(&["info", m1]);
    assert_eq!(code, 0);
    assert!(
        out.contains("K=1") && out.contains("L=2") && out.contains("matching_threshold=0.666667"),
        "{out}"
    );

    let half = format!("{0},{0}", 0.5 * 2f64.ln());
    let (code, out, _) = gceo(&["waterfill", m1, "-r", &half, "--sum", "0.6"]);
    assert_eq!(code, 0);
    assert!(out.contains("xi=0.6") && out.contains("omega=0.6"), "{out}");

    let (code, out, _) = gceo(&["match", m1, "--sum", "0.6"]);
    assert_eq!(code, 0);
    assert!(out.contains("verdict=matched"), "{out}");

    let (code, out, _) = gceo(&["convert", cyc.to_str().unwrap(), "--sum", "1.0"]);
    assert_eq!(code, 0);
    assert!(
        out.contains("# remote model") && out.contains("criterion: sum"),
        "{out}"
    );

    let (code, out, _) = gceo(&["simulate", m1, "-r", &half, "-n", "20000", "--seed", "9"]);
    assert_eq!(code, 0);
    assert!(out.contains("analytic:\n  [0.5]"), "{out}");
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let m1 = write_model(dir.path(), "M1.model", M1);
    let args = [
        "simulate",
        m1.to_str().unwrap(),
        "-r",
        "0.3,0.7",
        "-n",
        "5000",
        "--seed",
        "4",
    ];
    assert_eq!(gceo(&args), gceo(&args));
    let args = ["sumrate", m1.to_str().unwrap(), "--sum", "0.6"];
    assert_eq!(gceo(&args), gceo(&args));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let m1 = write_model(dir.path(), "M1.model", M1);
    let m1 = m1.to_str().unwrap();
    let (code, _, err) = gceo(&["sumrate", m1, "--sum", "0.2"]);
    assert_eq!(code, EXIT_INFEASIBLE);
    assert!(err.contains("InfeasibleSpec"), "{err}");

    assert_eq!(gceo(&["sumrate", "missing.model", "--sum", "1"]).0, EXIT_USAGE);
    assert_eq!(gceo(&["sumrate", m1]).0, EXIT_USAGE);
    assert_eq!(gceo(&["sumrate", m1, "--sum", "1", "--vector", "1"]).0, EXIT_USAGE);
    assert_eq!(gceo(&["curve", m1]).0, EXIT_USAGE);

    let bad = write_model(dir.path(), "bad.model", &M1.replace("[1.0, 1.0]", "[1.0, -1.0]"));
    let (code, _, err) = gceo(&["info", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("line 5") && err.contains("noise_var"), "{err}");

    let (code, out, _) = gceo(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("sumrate") && out.contains("--bits"));
}
