use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cpmdd(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpmdd"))
        .args(args)
        .arg("--output")
        .arg(out)
        .output()
        .expect("failed to launch cpmdd")
}

fn residual_column(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,residual_2norm,elapsed_seconds"));
    lines.map(|l| l.split(',').take(2).collect::<Vec<_>>().join(",")).collect()
}

const SMALL: &[&str] = &["--surface", "circle", "--h", "1/20", "--n-sub", "3", "--n-overlap", "2"];

#[test]
fn mesh_writes_stats_and_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let o = cpmdd(dir.path(), &["mesh", "--surface", "sphere", "--h", "0.1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stats = fs::read_to_string(dir.path().join("mesh_stats.csv")).unwrap();
    assert!(stats.starts_with("h,d,p,mode,n_active,n_ghost"));
    let nodes = fs::read_to_string(dir.path().join("mesh_nodes.csv")).unwrap();
    assert!(nodes.lines().count() > 100);
}

#[test]
fn solve_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut args = vec!["solve", "--method", "oras", "--alpha", "2", "--alpha-cross", "20"];
    args.extend_from_slice(SMALL);
    for d in [&a, &b] {
        let o = cpmdd(d.path(), &args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["solution.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(
        residual_column(&a.path().join("iterations.csv")),
        residual_column(&b.path().join("iterations.csv"))
    );
    let timings = fs::read_to_string(a.path().join("timings.csv")).unwrap();
    let phases: Vec<&str> = timings.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(phases, ["meshing", "global_matrix", "local_operators", "solver"]);
    let sol = fs::read_to_string(a.path().join("solution.csv")).unwrap();
    assert_eq!(sol.lines().next(), Some("x,y,z,u"));
}

#[test]
fn single_subdomain_logs_two_entries() {
    let dir = tempfile::tempdir().unwrap();
    let o = cpmdd(dir.path(), &["solve", "--surface", "circle", "--h", "0.05", "--n-sub", "1"]);
    assert!(o.status.success());
    assert_eq!(residual_column(&dir.path().join("iterations.csv")).len(), 2);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\nsurface = circle\nh = 1/20\nn_sub = 2\nmethod = ras\nmode = gmres\n").unwrap();
    let out = dir.path().join("out");
    let o = cpmdd(&out, &["solve", "--config", cfg.to_str().unwrap(), "--set", "n_overlap=3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let timings = fs::read_to_string(out.join("timings.csv")).unwrap();
    assert!(timings.contains("preconditioned_solve"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| cpmdd(dir.path(), args).status.code();
    assert_eq!(code(&["solve", "--surface", "circle", "--alpha", "0"]), Some(2));
    assert_eq!(code(&["solve", "--surface", "circle", "--alpha", "2", "--alpha-cross", "1"]), Some(2));
    assert_eq!(code(&["solve", "--surface", "klein"]), Some(2));
    assert_eq!(code(&["solve", "--set", "bogus=1"]), Some(2));
    assert_eq!(code(&["study", "no-such-study"]), Some(2));
    assert_eq!(code(&["mesh", "--surface", "mesh", "--mesh", "/nonexistent/x.obj"]), Some(4));
    assert_eq!(code(&["solve", "--surface", "circle", "--rhs", "file:/nonexistent/f.csv"]), Some(4));
    // running out of iterations is reported, not an error
    let o = cpmdd(dir.path(), &["solve", "--surface", "circle", "--h", "1/20", "--n-sub", "4", "--max-iter", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(residual_column(&dir.path().join("iterations.csv")).len(), 3);
}

#[test]
fn study_marks_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let o = cpmdd(
        dir.path(),
        &[
            "study", "overlap-sweep", "--surface", "circle", "--h", "1/20", "--max-iter", "3", "--set",
            "sweep_overlap=1,2", "--set", "sweep_nsub=4",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.path().join("study_overlap-sweep.csv")).unwrap();
    assert!(table.contains("DNC"), "{table}");
}
