use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const FREE_PAIR: &str = "dimension = 1\n\n[[particles]]\nmass = 1.0\nspecies = 0\ncount = 2\n";

const BOUND_PAIR: &str = r#"dimension = 1

[[particles]]
mass = 1.0
species = 0
count = 2

[[potentials]]
species = [0, 0]
kind = "gaussian-well"
strength = -2.0
range = 1.0
"#;

fn hvz(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvz"))
        .current_dir(dir)
        .args(args)
        .env_remove("HVZ_ALPHA")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn table(dir: &Path) -> Vec<Vec<i64>> {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("out/chartab.json")).unwrap()).unwrap();
    let types: Vec<String> = serde_json::from_value(v["types"].clone()).unwrap();
    let classes: Vec<String> = serde_json::from_value(v["classes"].clone()).unwrap();
    types
        .iter()
        .map(|t| classes.iter().map(|c| v["table"][t][c].as_i64().unwrap()).collect())
        .collect()
}

#[test]
fn character_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = hvz(dir.path(), &["chartab", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(table(dir.path()), vec![vec![1]]);

    let o = hvz(dir.path(), &["chartab", "2"]);
    assert!(o.status.success());
    assert_eq!(table(dir.path()), vec![vec![1, 1], vec![1, -1]]);
    assert!(dir.path().join("out/chartab.txt").exists());

    let o = hvz(dir.path(), &["chartab", "3"]);
    assert!(o.status.success());
    let rows = table(dir.path());
    assert_eq!(rows.len(), 3);
    assert!(rows.contains(&vec![2, 0, -1]));
    assert!(stdout(&o).contains("[2,1]"));

    let o = hvz(dir.path(), &["chartab", "13"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn free_pair_threshold_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("free.toml"), FREE_PAIR).unwrap();
    let args = ["threshold", "--system", "free.toml", "--alpha", "[2]", "--grid-n", "32", "--box-l", "20"];
    let o = hvz(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("mu = 0.000000000000"), "{}", stdout(&o));
    for f in ["threshold.json", "threshold.manifest.json", "curve_0_1.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }

    let o = hvz(dir.path(), &["spectrum", "--system", "free.toml", "--alpha", "[2]", "--grid-n", "32", "--box-l", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("discrete eigenvalues below mu: 0"));

    let o = hvz(dir.path(), &["lemma1", "--system", "free.toml", "--alpha", "[2]", "--grid-n", "32", "--box-l", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("hypothesis (i) discrete: false"));
}

#[test]
fn bound_pair_has_one_eigenvalue_below_threshold() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("pair.toml"), BOUND_PAIR).unwrap();
    let base = ["--system", "pair.toml", "--alpha", "[2]", "--grid-n", "128", "--box-l", "40"];
    let o = hvz(dir.path(), &[&["spectrum"], &base[..]].concat());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run the `threshold` command"));

    assert!(hvz(dir.path(), &[&["threshold"], &base[..]].concat()).status.success());
    let o = hvz(dir.path(), &[&["spectrum"], &base[..]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("discrete eigenvalues below mu: 1"), "{text}");
    let csv = fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
    let value: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((value + 1.0422452).abs() < 1e-5, "{value}");
}

#[test]
fn invalid_input_exits_with_configuration_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("free.toml"), FREE_PAIR).unwrap();
    // [3] is not a type of S2
    let o = hvz(dir.path(), &["threshold", "--system", "free.toml", "--alpha", "[3]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[3]"), "{}", stderr(&o));
    let o = hvz(dir.path(), &["threshold", "--system", "missing.toml", "--alpha", "[2]"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hvz(dir.path(), &["threshold", "--system", "free.toml", "--alpha", "[2]", "--tol", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn impossible_type_fails_numerically_naming_alpha() {
    let dir = tempfile::tempdir().unwrap();
    // seven identical fermions cannot be placed on a four-point lattice in any split
    let sys = format!("{}\n[[potentials]]\nspecies = [0, 0]\nkind = \"gaussian-well\"\nstrength = -1.0\n", "dimension = 1\n\n[[particles]]\nmass = 1.0\nspecies = 0\ncount = 7\n");
    fs::write(dir.path().join("seven.toml"), sys).unwrap();
    let o = hvz(dir.path(), &["threshold", "--system", "seven.toml", "--alpha", "[1^7]", "--grid-n", "4"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("[1,1,1,1,1,1,1]"), "{}", stderr(&o));
    let manifest = fs::read_to_string(dir.path().join("out/threshold.manifest.json")).unwrap();
    assert!(manifest.contains("\"status\": \"failed"));
}

#[test]
fn environment_overrides_and_manifest_rerun() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("pair.toml"), BOUND_PAIR).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hvz"))
        .current_dir(dir.path())
        .args(["threshold", "--system", "pair.toml"])
        .env("HVZ_ALPHA", "[2]")
        .env("HVZ_GRID_N", "64")
        .env("HVZ_BOX_L", "20")
        .env("HVZ_OUT", "first")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = dir.path().join("first/threshold.manifest.json");
    let o = hvz(dir.path(), &["threshold", "--config", manifest.to_str().unwrap(), "--out", "second"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let read = |d: &str| -> serde_json::Value {
        serde_json::from_str(&fs::read_to_string(dir.path().join(d).join("threshold.json")).unwrap()).unwrap()
    };
    let (a, b) = (read("first"), read("second"));
    assert_eq!(a["mu"], b["mu"]);
    assert_eq!(a["config"]["grid"]["points"], 64);
    assert_eq!(a, b);
}
