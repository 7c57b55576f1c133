use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn uqbench(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_uqbench"));
    cmd.args(args).env_remove("UQBENCH_OUTPUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const SMALL: &str = r#"
datasets = ["A"]
algorithms = ["NNE", "DPMM"]
train_sizes = [100]
spatial_lattice = 5

[splits]
train = 200
validation = 100
test = 150

[neural]
size = "small"
max_epochs = 5

[ensemble]
members = 2

[dpmm]
chains = 1
burn_in = 10
samples = 10

[grid]
train_sizes = [100]
sizes = ["small"]
learning_rates = [0.001]
weight_decays = [0.01]
betas = [0.1]
members = 2
"#;

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_evaluate_report_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let cfg = root.join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let data = root.join("data");
    ok(&uqbench(
        &["datagen", "--dataset", "a", "--seed", "4", "--out", path_str(&data), "--train", "200", "--validation", "100", "--test", "150"],
        &[],
    ));
    for f in ["train.csv", "validation.csv", "test.csv", "ood_grid.csv", "manifest.json"] {
        assert!(data.join(f).exists(), "{f}");
    }

    let ckpt = root.join("ckpt");
    ok(&uqbench(
        &["train", "--data", path_str(&data), "--algorithm", "dpmm", "--n-train", "100", "--config", path_str(&cfg), "--out", path_str(&ckpt)],
        &[],
    ));
    assert!(ckpt.join("model.json").exists());

    let eval1 = root.join("eval1");
    let eval2 = root.join("eval2");
    for e in [&eval1, &eval2] {
        ok(&uqbench(
            &["evaluate", "--checkpoint", path_str(&ckpt), "--data", path_str(&data), "--config", path_str(&cfg), "--out", path_str(e)],
            &[],
        ));
    }
    for f in ["records.csv", "profiles.csv", "spatial.csv", "evaluation.json"] {
        assert_eq!(fs::read(eval1.join(f)).unwrap(), fs::read(eval2.join(f)).unwrap(), "{f} differs between runs");
    }

    let bundle = root.join("bundle");
    ok(&uqbench(&["report", "--input", path_str(&eval1), "--out", path_str(&bundle)], &[]));
    let metrics = fs::read_to_string(bundle.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 2);
    assert!(metrics.lines().nth(1).unwrap().starts_with("A,DPMM,100,ok,"));
}

#[test]
fn study_and_grid_honour_output_override() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let cfg = root.join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let env_out = root.join("from_env");
    ok(&uqbench(&["study", "--config", path_str(&cfg)], &[("UQBENCH_OUTPUT_DIR", &env_out)]));
    let records = fs::read_to_string(env_out.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 3);
    assert!(records.lines().next().unwrap().ends_with("wall_time_s"));

    let grid_out = root.join("grid");
    ok(&uqbench(
        &["grid", "--algorithm", "CL", "--config", path_str(&cfg), "--out", path_str(&grid_out)],
        &[],
    ));
    let grid = fs::read_to_string(grid_out.join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 2);

    let bundle = root.join("bundle");
    ok(&uqbench(
        &["report", "--input", path_str(&env_out), "--input", path_str(&grid_out), "--out", path_str(&bundle)],
        &[],
    ));
    for f in ["metrics.csv", "ood.csv", "profiles.csv", "spatial.csv", "grid.csv", "bundle.json"] {
        assert!(bundle.join(f).exists(), "{f}");
    }
}

#[test]
fn exit_codes_distinguish_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let missing = root.join("nope");

    let out = uqbench(&["evaluate", "--checkpoint", path_str(&missing), "--data", path_str(&missing), "--out", path_str(root)], &[]);
    assert_eq!(out.status.code(), Some(3));

    let bad_cfg = root.join("bad.toml");
    fs::write(&bad_cfg, "train_sizes = \"many\"").unwrap();
    let out = uqbench(&["study", "--config", path_str(&bad_cfg)], &[]);
    assert_eq!(out.status.code(), Some(4));

    // a checkpoint evaluated against a different dataset
    let cfg = root.join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let (d1, d2) = (root.join("d1"), root.join("d2"));
    for (d, seed) in [(&d1, "1"), (&d2, "2")] {
        ok(&uqbench(
            &["datagen", "--dataset", "B", "--seed", seed, "--out", path_str(d), "--train", "120", "--validation", "50", "--test", "50"],
            &[],
        ));
    }
    let ckpt = root.join("ckpt");
    ok(&uqbench(
        &["train", "--data", path_str(&d1), "--algorithm", "NNE", "--n-train", "100", "--config", path_str(&cfg), "--out", path_str(&ckpt)],
        &[],
    ));
    let out = uqbench(
        &["evaluate", "--checkpoint", path_str(&ckpt), "--data", path_str(&d2), "--out", path_str(&root.join("e"))],
        &[],
    );
    assert_eq!(out.status.code(), Some(5));

    // a tampered dataset manifest
    let manifest = d2.join("manifest.json");
    let text = fs::read_to_string(&manifest).unwrap().replacen("\"seed\": 2", "\"seed\": 3", 1);
    fs::write(&manifest, text).unwrap();
    let out = uqbench(
        &["train", "--data", path_str(&d2), "--algorithm", "NNE", "--n-train", "100", "--out", path_str(&root.join("c2"))],
        &[],
    );
    assert_eq!(out.status.code(), Some(5));

    // diverging training: a huge learning rate overflows the logits
    let wild = root.join("wild.toml");
    fs::write(&wild, "[neural]\nsize = \"small\"\nlearning_rate = 1e300\nmax_epochs = 3\n[ensemble]\nmembers = 2\n").unwrap();
    let out = uqbench(
        &["train", "--data", path_str(&d1), "--algorithm", "NNE", "--n-train", "100", "--config", path_str(&wild), "--out", path_str(&root.join("c3"))],
        &[],
    );
    assert_eq!(out.status.code(), Some(6), "{}", String::from_utf8_lossy(&out.stderr));

    let out = uqbench(&["train", "--algorithm", "NNE"], &[]);
    assert_eq!(out.status.code(), Some(2));
}
