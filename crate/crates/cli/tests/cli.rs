use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sfwta_cli::common_noise_running_means;
use sfwta_core::cost_model::{social_cost, CostParams};
use sfwta_core::stochastic_env::GeneratorState;

const FIG1: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../examples/paper_fig1.net");

fn sfwta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfwta"))
        .args(args)
        .output()
        .unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    let o = sfwta(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn column(path: &Path, col: usize) -> Vec<f64> {
    rows(path).iter().map(|r| r[col].parse().unwrap()).collect()
}

fn write_net(dir: &Path, text: &str) -> String {
    let p = dir.join("net.txt");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_prints_rounded_flows_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "solve",
            "--network",
            FIG1,
            "--method",
            "expected",
            "--beta",
            "1",
        ],
    );
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(
        stdout.starts_with("flows 0.4206 0.4206 0.5794 0.5794\n"),
        "{stdout}"
    );
    for f in [
        "flows.csv",
        "flows.svg",
        "trace.csv",
        "trace.svg",
        "report.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let header = fs::read_to_string(dir.path().join("flows.csv")).unwrap();
    assert!(
        header.starts_with("edge_id (index),tail (node),head (node),flow (demand units)\n0,A,B,")
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    for key in ["csv", "svg"] {
        for p in report[key].as_array().unwrap() {
            assert!(Path::new(p.as_str().unwrap()).exists());
        }
    }
    assert_eq!(report["config"]["method"], "expected");
}

#[test]
fn noiseless_sfwta_matches_deterministic_optimum() {
    let dir = tempfile::tempdir().unwrap();
    run_in(
        dir.path(),
        &[
            "solve",
            "--network",
            FIG1,
            "--method",
            "sfwta",
            "--beta",
            "0",
            "--iters",
            "10000",
            "--seed",
            "1",
        ],
    );
    let x = column(&dir.path().join("flows.csv"), 3);
    let want = [0.523739, 0.523739, 0.476261, 0.476261];
    assert!(
        x.iter().zip(want).all(|(a, b)| (a - b).abs() <= 5e-3),
        "{x:?}"
    );
    assert_eq!(rows(&dir.path().join("trace.csv")).len(), 10_000);
}

#[test]
fn compare_without_noise_favors_deterministic_strategy() {
    let dir = tempfile::tempdir().unwrap();
    run_in(
        dir.path(),
        &[
            "compare",
            "--network",
            FIG1,
            "--beta",
            "0",
            "--iters",
            "2000",
            "--seed",
            "7",
        ],
    );
    let path = dir.path().join("compare.csv");
    let s = column(&path, 1);
    let d = column(&path, 2);
    assert_eq!(s.len(), 2000);
    assert!(d.last().unwrap() < s.last().unwrap());
}

#[test]
fn single_step_running_mean_is_the_sample() {
    let p = CostParams::new(vec![0.3, 0.3, 0.5, 0.5], vec![0.6, 0.6, 0.1, 0.1]).unwrap();
    let xs = [0.42, 0.42, 0.58, 0.58];
    let xd = [0.52, 0.52, 0.48, 0.48];
    let (s, d) =
        common_noise_running_means(&xs, &xd, &p, 1.0, 1, &mut GeneratorState::new(5)).unwrap();
    let mut gen = GeneratorState::new(5);
    let u: Vec<f64> = (0..4).map(|_| gen.uniform_pm1()).collect();
    let fs_: Vec<f64> = xs.iter().zip(&u).map(|(x, u)| x * (1.0 + u)).collect();
    let fd: Vec<f64> = xd.iter().zip(&u).map(|(x, u)| x * (1.0 + u)).collect();
    assert_eq!(s, vec![social_cost(&fs_, &p).unwrap()]);
    assert_eq!(d, vec![social_cost(&fd, &p).unwrap()]);
}

#[test]
fn trace_decays_faster_without_noise() {
    let late = |beta: &str| {
        let dir = tempfile::tempdir().unwrap();
        run_in(
            dir.path(),
            &[
                "trace",
                "--network",
                FIG1,
                "--beta",
                beta,
                "--iters",
                "20000",
                "--seed",
                "4",
            ],
        );
        let rel = column(&dir.path().join("trace.csv"), 1);
        rel[rel.len() - 1000..].iter().sum::<f64>()
    };
    assert!(late("0") < late("1"));
}

#[test]
fn single_path_network_has_no_relative_change() {
    let dir = tempfile::tempdir().unwrap();
    let net = write_net(dir.path(), "NODES A B\nEDGE A B 1 1\nDEMAND A B 2\n");
    let out = dir.path().join("out");
    run_in(&out, &["trace", "--network", &net, "--iters", "50"]);
    let rel = column(&out.join("trace.csv"), 1);
    assert_eq!(rel.len(), 50);
    assert!(rel.iter().all(|&r| r == 0.0));
}

#[test]
fn sweep_accepts_custom_betas() {
    let dir = tempfile::tempdir().unwrap();
    run_in(
        dir.path(),
        &["beta-sweep", "--network", FIG1, "--betas", "0,0.5,1"],
    );
    let path = dir.path().join("sweep.csv");
    assert_eq!(column(&path, 0), vec![0.0, 0.5, 1.0]);
    let (s, d) = (column(&path, 1), column(&path, 2));
    assert_eq!(s[0], d[0]);
    assert!(dir.path().join("sweep.svg").exists());
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    let bad_parse = write_net(dir.path(), "NODES A B\nEDGE A B x 1\nDEMAND A B 1\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["solve", "--network", "/nonexistent/net.txt", "--out", out],
        vec!["solve", "--network", &bad_parse, "--out", out],
        vec!["solve", "--network", FIG1, "--beta", "1.5", "--out", out],
        vec![
            "solve",
            "--network",
            FIG1,
            "--method",
            "sfwta",
            "--prho",
            "0.3333",
            "--out",
            out,
        ],
        vec!["solve", "--network", FIG1, "--bogus"],
        vec![
            "compare",
            "--network",
            FIG1,
            "--replications",
            "0",
            "--out",
            out,
        ],
    ];
    for args in cases {
        let o = sfwta(&args);
        assert_eq!(
            o.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
    let o = sfwta(&[
        "solve",
        "--network",
        FIG1,
        "--method",
        "sfwta",
        "--prho",
        "0.3333",
        "--out",
        out,
    ]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("(ii)"));
}

#[test]
fn unreachable_demand_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let net = write_net(dir.path(), "NODES A B C\nEDGE A B 1 1\nDEMAND A C 1\n");
    let out = dir.path().join("o");
    let o = sfwta(&["solve", "--network", &net, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no connecting path"));
}

#[test]
fn replications_change_noise_not_row_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "compare",
        "--network",
        FIG1,
        "--method",
        "expected",
        "--iters",
        "500",
    ];
    run_in(a.path(), &args);
    run_in(b.path(), &[&args[..], &["--replications", "4"]].concat());
    let ra = fs::read_to_string(a.path().join("compare.csv")).unwrap();
    let rb = fs::read_to_string(b.path().join("compare.csv")).unwrap();
    assert_eq!(ra.lines().count(), rb.lines().count());
    assert_ne!(ra, rb);
}
