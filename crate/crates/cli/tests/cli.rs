use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

const P1: &str = "wfa v1\nalphabet a\ndim 1\ninitial 1\nfinal 0.5\nmatrix a\n0.5\n";

const TWO_STATE: &str = "\
wfa v1
alphabet a b
dim 2
initial 0.7 0.3
final 0.3 0.4
matrix a
0.3 0.2
0.1 0.1
matrix b
0.1 0.1
0.2 0.2
";

// problems 3, 4, 7, 15, 25, 29, 31, 38, 39, 40, 42
const S2: [f64; 11] = [8.23, 6.25, 6.52, 13.40, 10.65, 6.35, 6.97, 8.09, 8.82, 9.74, 7.39];
const S3: [f64; 11] =
    [57.84, 31.06, 29.61, 160.92, 93.34, 38.11, 43.53, 65.87, 90.81, 111.84, 62.11];
const N: [usize; 11] =
    [20_000, 100_000, 20_000, 20_000, 20_000, 20_000, 20_000, 20_000, 20_000, 20_000, 20_000];
const L: [usize; 11] = [8, 9, 8, 5, 5, 9, 7, 4, 6, 4, 7];
const TABLE2: [f64; 11] =
    [0.0669, 0.0260, 0.0595, 0.0853, 0.0761, 0.0588, 0.0615, 0.0663, 0.0692, 0.0728, 0.0634];
const TABLE3: [f64; 11] =
    [0.1784, 0.0582, 0.1279, 0.2967, 0.2261, 0.1450, 0.1547, 0.1899, 0.2230, 0.2472, 0.1846];

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn shankel(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_shankel")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Rows of a CSV without its comment header, split into fields.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn value(row: &[String]) -> f64 {
    row.last().unwrap().parse().unwrap()
}

#[test]
fn bounds_reproduce_published_tables() {
    for i in 0..11 {
        let (s2, n) = (S2[i].to_string(), N[i].to_string());
        let r = shankel(&["bounds", "--s2", &s2, "--n", &n]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert!((value(&rows(&r.stdout)[0]) - TABLE2[i]).abs() <= 0.001);

        let (s3, l) = (S3[i].to_string(), L[i].to_string());
        let r = shankel(&[
            "bounds", "--mode", "prefix", "--eta", "1", "--s1", &s2, "--s2", &s3, "--n", &n, "--l",
            &l,
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert!((value(&rows(&r.stdout)[0]) - TABLE3[i]).abs() <= 0.001);
    }
}

#[test]
fn bounds_from_crafted_model() {
    // ⟨[1], [m], [1-m]⟩ has S^(2) = 1/(1-m)
    let dir = TempDir::new().unwrap();
    let m = 1.0 - 1.0 / 8.23;
    let model = format!("wfa v1\nalphabet a\ndim 1\ninitial 1\nfinal {}\nmatrix a\n{m}\n", 1.0 - m);
    let path = write(&dir, "p3.wfa", &model);
    let r = shankel(&["bounds", "--model", s(&path), "--n", "20000", "--l", "8"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = rows(&r.stdout);
    assert_eq!(rows[0][0], "dim_free");
    assert!((value(&rows[0]) - 0.0669).abs() <= 0.0005);
    assert_eq!(rows[1][0], "opt_uv");
    assert!(value(&rows[1]) <= value(&rows[0]));
}

#[test]
fn prefix_at_eta_zero_matches_standard() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "two.wfa", TWO_STATE);
    let standard = shankel(&["bounds", "--model", s(&path), "--l", "3"]);
    let prefix =
        shankel(&["bounds", "--model", s(&path), "--l", "3", "--mode", "prefix", "--eta", "0"]);
    let (a, b) = (rows(&standard.stdout), rows(&prefix.stdout));
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x[0], y[0]);
        assert_eq!(x[6..], y[6..], "t, sigma2, b and value agree");
    }
}

#[test]
fn opt_row_never_exceeds_dim_free() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "two.wfa", TWO_STATE);
    for (mode, eta) in [("standard", "0"), ("prefix", "0.5"), ("prefix", "1"), ("factor", "0.3")] {
        for l in ["0", "2", "5"] {
            let r =
                shankel(&["bounds", "--model", s(&path), "--mode", mode, "--eta", eta, "--l", l]);
            assert_eq!(r.code, 0, "{}", r.stderr);
            let rows = rows(&r.stdout);
            assert!(value(&rows[1]) <= value(&rows[0]), "{mode} {eta} {l}");
        }
    }
}

#[test]
fn baseline_row_uses_given_dimension() {
    let r = shankel(&[
        "bounds",
        "--s2",
        "2",
        "--n",
        "36",
        "--delta",
        "0.36787944117144233",
        "--baseline-m",
        "1",
        "--baseline-d",
        "2.718281828459045",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = rows(&r.stdout);
    assert_eq!(rows[1][0], "baseline");
    assert!((value(&rows[1]) - 2.0).abs() < 1e-5);
}

#[test]
fn experiment_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "two.wfa", TWO_STATE);
    let args = [
        "experiment",
        "--model",
        s(&path),
        "--trials",
        "1",
        "--seed",
        "17",
        "--n",
        "2000",
        "--l",
        "3",
    ];
    let a = shankel(&args);
    let b = shankel(&args);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.starts_with("# shankel "));
    assert!(a.stdout.contains("seed=17"));
}

#[test]
fn experiment_coverage_on_two_state_model() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "two.wfa", TWO_STATE);
    let r =
        shankel(&["experiment", "--model", s(&path), "--trials", "50", "--n", "20000", "--l", "4"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = rows(&r.stdout);
    assert_eq!(rows.len(), 51);
    let summary = rows.last().unwrap();
    assert_eq!(summary[0], "summary");
    assert_eq!(value(summary), 1.0);
}

#[test]
fn experiment_prefix_at_eta_one_uses_length_cap() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "p1.wfa", P1);
    let r = shankel(&[
        "experiment",
        "--model",
        s(&path),
        "--mode",
        "prefix",
        "--eta",
        "1",
        "--l",
        "3",
        "--n",
        "1000",
        "--trials",
        "2",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    // S̄₁^(1) = S^(2) = 2 and S̄₁^(2) = S^(3) = 4 for p(a^n) = 0.5^(n+1)
    let expected =
        spectral_hankel::bounds::bound_prefix(2.0, 4.0, 1.0, 1000, 0.05, Some(3)).unwrap();
    let summary = rows(&r.stdout).pop().unwrap();
    let dim_free: f64 = summary[5].parse().unwrap();
    assert!((dim_free - expected.value).abs() <= 1e-5 * expected.value);
}

#[test]
fn learn_requires_rank() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "p1.wfa", P1);
    let r = shankel(&["learn", "--model", s(&path)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("--rank"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(shankel(&["bounds"]).code, 2);
    assert_eq!(shankel(&["bounds", "--s2", "2", "--mode", "sideways"]).code, 2);
    assert_eq!(shankel(&["frobnicate"]).code, 2);
}

#[test]
fn runtime_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let broken = write(&dir, "broken.wfa", "wfa v1\nalphabet a\ndim 1\ninitial 1\n");
    let r = shankel(&["moments", "--model", s(&broken)]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("line"));
    let missing = dir.path().join("absent.wfa");
    assert_eq!(shankel(&["moments", "--model", s(&missing)]).code, 1);
}

#[test]
fn learn_from_exact_hankel() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "two.wfa", TWO_STATE);
    let saved = dir.path().join("learned.wfa");
    let r = shankel(&[
        "learn",
        "--model",
        s(&path),
        "--exact",
        "--rank",
        "2",
        "--l",
        "3",
        "--save-model",
        s(&saved),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let row = &rows(&r.stdout)[0];
    let l1: f64 = row[4].parse().unwrap();
    assert!(l1 <= 1e-8, "{l1}");
    let learned = std::fs::read_to_string(&saved).unwrap();
    assert!(learned.starts_with("wfa v1\nalphabet a b\ndim 2\n"));
}

#[test]
fn learn_p1_from_sample() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "p1.wfa", P1);
    let r = shankel(&[
        "learn",
        "--model",
        s(&path),
        "--rank",
        "1",
        "--n",
        "50000",
        "--l",
        "3",
        "--eval-len",
        "3",
        "--seed",
        "5",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let l1: f64 = rows(&r.stdout)[0][4].parse().unwrap();
    assert!(l1 <= 0.05, "{l1}");
}

#[test]
fn sample_then_hankel_export() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "p1.wfa", P1);
    let sample_path = dir.path().join("p1.txt");
    let r = shankel(&[
        "sample",
        "--model",
        s(&model),
        "--n",
        "100",
        "--seed",
        "3",
        "--out",
        s(&sample_path),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = std::fs::read_to_string(&sample_path).unwrap();
    assert!(text.starts_with("# sample model=p1 seed=3 n=100\n"));
    assert_eq!(text.lines().count(), 101);

    let r = shankel(&["hankel", "--model", s(&model), "--sample", s(&sample_path), "--l", "2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let mut lines = r.stdout.lines();
    assert_eq!(lines.next().unwrap(), "hankel standard 0 3 3 100");
    let total: f64 =
        lines.filter_map(|l| l.split(' ').nth(2)).map(|v| v.parse::<f64>().unwrap()).sum();
    assert!(total > 0.0);
}

#[test]
fn moments_of_p1() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "p1.wfa", P1);
    let r = shankel(&["moments", "--model", s(&model), "--k", "2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = rows(&r.stdout);
    assert_eq!(value(&rows[0]), 1.0);
    assert_eq!(value(&rows[1]), 2.0);
}

#[test]
fn divergent_model_warns() {
    let dir = TempDir::new().unwrap();
    let model =
        write(&dir, "div.wfa", "wfa v1\nalphabet a\ndim 1\ninitial 1\nfinal 0\nmatrix a\n1\n");
    let r = shankel(&["moments", "--model", s(&model)]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("warning") || r.stderr.contains("diverges"));
}
