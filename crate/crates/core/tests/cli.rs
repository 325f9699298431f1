use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elemtrip")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("elemtrip-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn close_example_one() {
    let out = stdout(&["close", "--in", &data("five_seeds.model"), "--axioms", "semigraphoid"]);
    assert!(out.contains("elementary: 82\n"), "{out}");
    assert!(out.contains("canonical: 41\n"));
}

#[test]
fn close_writes_a_reloadable_file() {
    let path = scratch("closed.model");
    let p = path.to_str().unwrap();
    stdout(&["close", "--in", &data("two_seeds.model"), "--out", p]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("closed: true"));
    let again = stdout(&["close", "--in", p]);
    assert!(again.contains("elementary: 112\n"), "{again}");
}

#[test]
fn dominant_example_two() {
    let out = stdout(&["dominant", "--in", &data("two_seeds.model")]);
    assert_eq!(out, "count: 2\ndominant: 12 ⟂ 456 | ∅\ndominant: 123 ⟂ 4 | ∅\n");
    let grids = stdout(&["grids", "--in", &data("two_seeds.model")]);
    assert!(grids.starts_with("count: 18\n"));
}

#[test]
fn identify_back_door() {
    let out = stdout(&["identify", "--dag", &data("back_door.dag"), "--x", "x", "--y", "y"]);
    assert_eq!(
        out.lines().next().unwrap(),
        "estimand: p(y|do(x)) = sum{z1,z4}( p(y|x,z1,z4) * p(z1,z4) )"
    );
    let none = stdout(&["--format", "kv", "identify", "--dag", &data("bow.dag"), "--latent", "u", "--x", "x", "--y", "y"]);
    assert_eq!(none, "estimand=none\n");
}

#[test]
fn plan_two_steps() {
    let out = stdout(&[
        "plan", "--dag", &data("two_step.dag"), "--latent", "u1,u2", "--step", "x1", "--step", "x2 ; z", "--y", "y",
    ]);
    assert!(out.starts_with("estimand: p(y|do(x1,x2)) = sum{z}( p(y|x1,x2,z) * p(z|x1) )\n"), "{out}");
}

#[test]
fn member_and_maps() {
    assert_eq!(stdout(&["member", "--in", &data("five_seeds.model"), "1 ; 3 | 5"]), "member: true\n");
    assert_eq!(stdout(&["member", "--in", &data("five_seeds.model"), "1 ; 3"]), "member: false\n");
    let mim = stdout(&["mim", "--in", &data("two_seeds.model"), "--ordering", "1 2 3 4 5 6"]);
    assert!(mim.lines().all(|l| l.starts_with("edge: ")), "{mim}");
}

#[test]
fn table_round_trip() {
    let out = stdout(&["from-table", "--table", &data("chain.csv")]);
    assert!(out.contains("elem: a ; c | b"), "{out}");
    let table = scratch("front.csv");
    let t = table.to_str().unwrap();
    stdout(&["random-table", "--dag", &data("front_door.dag"), "--latent", "u", "--seed", "3", "--out", t]);
    let eval = stdout(&[
        "eval-estimand",
        "--table",
        t,
        "p(z2|do(x)) = sum{z1}( p(z1|x) * sum{x}( p(z2|x,z1) * p(x) ) )",
    ]);
    assert_eq!(eval.lines().count(), 4);
    let total: f64 = eval
        .lines()
        .filter(|l| l.contains("|x=0)"))
        .map(|l| l.rsplit(": ").next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn errors_exit_nonzero() {
    let missing = run(&["close", "--in", "/nonexistent/model"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: "));
    let unknown = run(&["member", "--in", &data("five_seeds.model"), "1 ; 9"]);
    assert_eq!(unknown.status.code(), Some(1));
    let usage = run(&["no-such-command"]);
    assert!(!usage.status.success());
}
