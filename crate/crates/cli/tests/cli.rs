use propinq::io;
use propinq::sampling::{random_chain, random_mixed_state, random_space, rng, ChainShape};
use propinq_cli::{run, EXIT_CONVERGENCE, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use tempfile::TempDir;

const CHAIN: &str =
    r#"{"blocks": [[1], [2]], "mult": [[[2]]], "trace_weights": [0.5], "beta": [1, 0.5]}"#;
const SPACE: &str = r#"{"labels": ["x", "y"], "distances": [[0, 1.5], [1.5, 0]]}"#;
const AT_X: &str = r#"{"densities": [[[[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]], [[[[0, 0], [0, 0]], [[0, 0], [0, 0]]]]]}"#;
const AT_Y: &str = r#"{"densities": [[[[[0, 0], [0, 0]], [[0, 0], [0, 0]]]], [[[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]]]}"#;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn propinq(args: &[&str]) -> Run {
    let argv: Vec<String> = std::iter::once("propinq")
        .chain(args.iter().copied())
        .map(String::from)
        .collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(&argv, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn fixture() -> (TempDir, Vec<PathBuf>) {
    let dir = TempDir::new().unwrap();
    let files = [
        ("chain.json", CHAIN),
        ("space.json", SPACE),
        ("x.json", AT_X),
        ("y.json", AT_Y),
    ]
    .iter()
    .map(|(name, text)| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    })
    .collect();
    (dir, files)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_accepts_valid_files() {
    let (_d, f) = fixture();
    let r = propinq(&["check", s(&f[0]), s(&f[1]), s(&f[2])]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.out.trim_end().ends_with("OK"));
}

#[test]
fn check_reports_broken_triangle() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(
        &p,
        r#"{"labels": ["a","b","c"], "distances": [[0,1,3],[1,0,1],[3,1,0]]}"#,
    )
    .unwrap();
    let r = propinq(&["check", s(&p)]);
    assert_eq!(r.code, EXIT_VALIDATION);
    assert!(r.err.starts_with("error[validation]:"), "{}", r.err);
    assert!(r.err.contains("(a, b, c)"));
}

#[test]
fn check_reports_syntax_position() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("chain.json");
    std::fs::write(&p, "{\"blocks\": [[1]],\n \"beta\": [1,,]}").unwrap();
    let r = propinq(&["check", s(&p)]);
    assert_eq!(r.code, EXIT_VALIDATION);
    assert!(
        r.err.starts_with("error[parse]:") && r.err.contains("line 2"),
        "{}",
        r.err
    );
}

#[test]
fn mk_on_point_states_prints_distance() {
    let (d, f) = fixture();
    let csv = d.path().join("mk.csv");
    let wit = d.path().join("w.json");
    let r = propinq(&[
        "mk",
        "--tol",
        "1e-6",
        s(&f[0]),
        s(&f[1]),
        s(&f[2]),
        s(&f[3]),
        "--csv",
        s(&csv),
        "--witness",
        s(&wit),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let v: f64 = r.out.trim().parse().unwrap();
    assert!((v - 1.5).abs() < 1e-6);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("value,cuts_used,tol\n"));
    let lip = propinq(&["lip", s(&f[0]), s(&f[1]), s(&wit)]);
    assert_eq!(lip.code, EXIT_OK, "{}", lip.err);
    let total: f64 = lip
        .out
        .lines()
        .last()
        .unwrap()
        .trim_start_matches("total ")
        .parse()
        .unwrap();
    assert!(total <= 1.0 + 1e-9);
}

#[test]
fn mk_failure_to_converge_exits_2() {
    let dir = TempDir::new().unwrap();
    let mut r = rng(5);
    let space = Arc::new(random_space(&mut r, 3).unwrap());
    let shape = ChainShape {
        max_depth: 2,
        max_blocks: 1,
        max_block_size: 3,
        commutative: false,
    };
    let chain = loop {
        let c = random_chain(&mut r, shape).unwrap();
        if c.top().block_sizes()[0] >= 2 {
            break Arc::new(c);
        }
    };
    let a = random_mixed_state(&mut r, &space, &chain).unwrap();
    let b = random_mixed_state(&mut r, &space, &chain).unwrap();
    let paths: Vec<PathBuf> = ["c.json", "s.json", "a.json", "b.json"]
        .iter()
        .map(|n| dir.path().join(n))
        .collect();
    std::fs::write(&paths[0], io::chain_to_string(&chain)).unwrap();
    std::fs::write(&paths[1], io::space_to_string(&space)).unwrap();
    std::fs::write(&paths[2], io::state_to_string(&a)).unwrap();
    std::fs::write(&paths[3], io::state_to_string(&b)).unwrap();
    let args = [s(&paths[0]), s(&paths[1]), s(&paths[2]), s(&paths[3])];
    let res = propinq(&[&["mk", "--tol", "1e-9", "--max-cuts", "1"][..], &args].concat());
    assert_eq!(res.code, EXIT_CONVERGENCE, "{} {}", res.out, res.err);
    assert!(res.err.starts_with("error[convergence]:"));
}

#[test]
fn uhf_example_table() {
    let r = propinq(&["uhf", "--depth", "3", "1,1,1", "1,1,2"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.out.contains("baire 0.25\n"));
    assert!(r.out.contains("bound 0.5\n"));
}

#[test]
fn uhf_check_runs_isometry() {
    let r = propinq(&[
        "uhf",
        "--depth",
        "2",
        "1,2,1",
        "1,2,2",
        "--check",
        "--samples",
        "4",
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let gap: f64 = r
        .out
        .split("isometry_gap ")
        .nth(1)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(gap <= 1e-9);
}

#[test]
fn bound_gh_and_net() {
    let (_d, f) = fixture();
    let r = propinq(&["bound", s(&f[0]), s(&f[1]), "--compare", s(&f[1])]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.out.contains("1  0.5  0.5\n"));
    assert!(r.out.contains("to_commutative 1\n") && r.out.contains("between_tensors 2\n"));
    let g = propinq(&["gh", s(&f[1]), s(&f[1])]);
    assert_eq!(g.out, "gh 0\n");
    let n = propinq(&["net", s(&f[1]), "--eps", "2"]);
    assert_eq!(n.out, "0 x\nhausdorff 1.5\n");
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        &["mk", "--bogus"][..],
        &["frobnicate"][..],
        &["uhf", "--depth", "1", "1,0"][..],
    ] {
        let r = propinq(args);
        assert_eq!(r.code, EXIT_USAGE, "{args:?}: {}", r.err);
        assert!(r.err.starts_with("error[usage]:"));
    }
}

#[test]
fn diam_tables_are_deterministic() {
    let (d, f) = fixture();
    let table = |name: &str| {
        let p = d.path().join(name);
        let r = propinq(&[
            "diam",
            s(&f[0]),
            s(&f[1]),
            "--samples",
            "4",
            "--seed",
            "9",
            "--csv",
            s(&p),
        ]);
        assert_eq!(r.code, EXIT_OK, "{}", r.err);
        std::fs::read(p).unwrap()
    };
    assert_eq!(table("a.csv"), table("b.csv"));
}

#[test]
fn seed_environment_overrides_flag() {
    let (d, f) = fixture();
    let bin = env!("CARGO_BIN_EXE_propinq");
    let out = |seed_env: Option<&str>, seed_flag: &str| {
        let mut cmd = Command::new(bin);
        cmd.args([
            "diam",
            s(&f[0]),
            s(&f[1]),
            "--samples",
            "2",
            "--seed",
            seed_flag,
        ]);
        cmd.env_remove("PROPINQ_SEED");
        if let Some(v) = seed_env {
            cmd.env("PROPINQ_SEED", v);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success());
        o.stdout
    };
    let _ = d;
    assert_eq!(out(Some("4"), "1"), out(None, "4"));
    assert_ne!(out(None, "1"), out(None, "4"));
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_propinq");
    let o = Command::new(bin).arg("--nope").output().unwrap();
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
    let o = Command::new(bin)
        .args(["check", "/nonexistent/file.json"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_VALIDATION));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[io]:"));
}
