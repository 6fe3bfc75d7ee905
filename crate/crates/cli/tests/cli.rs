use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adaptprune"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn retained(report: &Value) -> Vec<u64> {
    report["retained"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect()
}

fn synth(dir: &Path, preset: &str, count: u32, seed: u32) -> PathBuf {
    let out = dir.join(preset);
    let status = bin()
        .args([
            "synth",
            "--preset",
            preset,
            "--count",
            &count.to_string(),
            "--seed",
            &seed.to_string(),
            "--outdir",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    out
}

#[test]
fn hand_fixtures_through_prune() {
    let same = fixture("hand_identical_keys.json");
    let r = json_stdout(&run(&[
        "prune",
        "--input",
        same.to_str().unwrap(),
        "--keep",
        "0.667",
        "--sigma-d",
        "1",
        "--no-gaussian",
    ]));
    assert_eq!(retained(&r), vec![0, 2]);
    assert_eq!(r["config"]["keep_count"], 2);
    assert_eq!(r["config"]["correction_applied"], false);

    let ortho = fixture("hand_orthogonal_keys.json");
    let r = json_stdout(&run(&[
        "prune",
        "--input",
        ortho.to_str().unwrap(),
        "--keep",
        "0.667",
        "--sigma-d",
        "1",
        "--no-gaussian",
    ]));
    assert_eq!(retained(&r), vec![0, 1]);
}

#[test]
fn keep_all_lists_every_token() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "uniform", 1, 4);
    let input = corpus.join("uniform_0000.atpk");
    let r = json_stdout(
        &bin()
            .args(["prune", "--keep", "1.0", "--input"])
            .arg(&input)
            .output()
            .unwrap(),
    );
    let mut got = retained(&r);
    got.sort_unstable();
    assert_eq!(got, (0..576).collect::<Vec<u64>>());
}

#[test]
fn prune_is_byte_reproducible_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "clustered", 1, 8);
    let input = corpus.join("clustered_0000.atpk");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let status = bin()
            .arg("prune")
            .arg("--input")
            .arg(&input)
            .arg("--output")
            .arg(out)
            .arg("--trace")
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let r: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(r["trace"].as_array().unwrap().len(), 58);
    assert!(r.get("wall_time_ms").is_none());
    assert_eq!(r["config"]["resolved_gaussian_sigmas"][0], 8.0);

    let timed = json_stdout(
        &bin()
            .args(["prune", "--timing", "--input"])
            .arg(&input)
            .output()
            .unwrap(),
    );
    assert!(timed["wall_time_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn fastv_is_less_dispersed_on_clustered_input() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "clustered", 1, 0);
    let input = corpus.join("clustered_0000.atpk");
    let dispersion = |strategy: &str| {
        let r = json_stdout(
            &bin()
                .args(["prune", "--keep", "0.1", "--strategy", strategy, "--input"])
                .arg(&input)
                .output()
                .unwrap(),
        );
        r["metrics"]["dispersion"].as_f64().unwrap()
    };
    assert!(dispersion("fastv") < dispersion("adaptprune"));
}

#[test]
fn compare_runs_each_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "clustered", 2, 3);
    let json = dir.path().join("cmp.json");
    let out = bin()
        .args([
            "compare",
            "--strategies",
            "random,adaptprune,fastv",
            "--seed",
            "5",
            "--input",
        ])
        .arg(corpus.join("clustered_0001.atpk"))
        .arg("--input")
        .arg(corpus.join("clustered_0000.atpk"))
        .arg("--output")
        .arg(&json)
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 7);
    let v: Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    let inputs = v["inputs"].as_array().unwrap();
    assert!(inputs[0]["input"]
        .as_str()
        .unwrap()
        .ends_with("clustered_0000.atpk"));
    for entry in inputs {
        let reports = entry["reports"].as_array().unwrap();
        let names: Vec<&str> = reports
            .iter()
            .map(|r| r["strategy"].as_str().unwrap())
            .collect();
        assert_eq!(names, ["adaptprune", "fastv_topk", "random"]);
        assert!(reports
            .iter()
            .all(|r| r["retained"].as_array().unwrap().len() == 58));
    }
}

#[test]
fn compare_rejects_bad_strategy_lists() {
    let input = fixture("hand_identical_keys.json");
    let out = run(&[
        "compare",
        "--input",
        input.to_str().unwrap(),
        "--strategies",
        "adaptprune,random",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "compare",
        "--input",
        input.to_str().unwrap(),
        "--strategies",
        "adaptprune,nms",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("last_fraction") && err.lines().count() == 1);
}

#[test]
fn verify_agrees_and_detects_divergence() {
    let out = run(&["verify", "--random", "100", "--seed", "7"]);
    let v = json_stdout(&out);
    assert_eq!(v["matched"], 100);

    let out = run(&[
        "verify",
        "--random",
        "20",
        "--seed",
        "7",
        "--sigma-d",
        "1e-9",
        "--cutoff-multiplier",
        "3",
    ]);
    assert!(out.status.success());

    let out = run(&[
        "verify",
        "--random",
        "20",
        "--seed",
        "7",
        "--cutoff-multiplier",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!v["mismatches"].as_array().unwrap().is_empty());

    let input = fixture("hand_orthogonal_keys.json");
    assert!(
        run(&["verify", "--input", input.to_str().unwrap(), "--keep", "1"])
            .status
            .success()
    );
}

#[test]
fn flops_output() {
    let out = run(&[
        "flops",
        "--hidden",
        "4096",
        "--ffn",
        "11008",
        "--layers",
        "32",
        "--visual-tokens",
        "576",
        "--text-tokens",
        "0",
        "--prune-layer",
        "3",
        "--keep",
        "0.10",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("2986076012544") && text.contains("545299529728"));
    assert!(text.contains("reduction:       81.74%"));
    let keep_all = String::from_utf8(run(&["flops", "--keep", "1.0"]).stdout).unwrap();
    assert!(keep_all.contains("0.00%"));
    let late = String::from_utf8(run(&["flops", "--prune-layer", "32"]).stdout).unwrap();
    assert!(late.contains("0.00%"));
    assert_eq!(
        run(&["flops", "--prune-layer", "40"]).status.code(),
        Some(2)
    );
}

#[test]
fn stats_aggregates_and_renders() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "biased", 1000, 12);
    let pattern = format!("{}/*.atpk", corpus.display());
    let heat = dir.path().join("mean.ppm");
    let out = bin()
        .args([
            "stats",
            "--inputs",
            &pattern,
            "--cell-size",
            "1",
            "--render",
        ])
        .arg(&heat)
        .output()
        .unwrap();
    let agg = json_stdout(&out);
    assert_eq!(agg["sample_count"], 1000);

    let ppm = std::fs::read(&heat).unwrap();
    let header = b"P6\n24 24\n255\n";
    assert_eq!(&ppm[..header.len()], header);
    let pixels = &ppm[header.len()..];
    assert_eq!(pixels.len(), 3 * 576);
    // viridis is brightest at the top end; the planted peak sits at (20, 18)
    let luminance = |k: usize| {
        pixels[3 * k..3 * k + 3]
            .iter()
            .map(|&b| u32::from(b))
            .sum::<u32>()
    };
    let brightest = (0..576)
        .max_by_key(|&k| (luminance(k), std::cmp::Reverse(k)))
        .unwrap();
    assert_eq!(brightest, 20 * 24 + 18);

    let one = bin()
        .args(["stats", "--inputs"])
        .arg(corpus.join("biased_0000.atpk"))
        .output()
        .unwrap();
    let one = json_stdout(&one);
    let grid: adaptprune::TokenGrid = adaptprune::io::read_dump(
        corpus.join("biased_0000.atpk"),
        adaptprune::io::DumpFormat::Binary,
    )
    .unwrap();
    let means: Vec<f64> = one["mean_scores"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(means, grid.scores());
}

#[test]
fn stats_rejects_mismatched_dims() {
    let dir = tempfile::tempdir().unwrap();
    let mixed = dir.path().join("mixed");
    std::fs::create_dir(&mixed).unwrap();
    std::fs::copy(fixture("hand_identical_keys.json"), mixed.join("a.json")).unwrap();
    std::fs::copy(fixture("hand_orthogonal_keys.json"), mixed.join("b.json")).unwrap();
    let ok = bin()
        .args(["stats", "--inputs", &format!("{}/*.json", mixed.display())])
        .output()
        .unwrap();
    assert!(ok.status.success());
    let corpus = synth(dir.path(), "uniform", 1, 0);
    std::fs::copy(corpus.join("uniform_0000.atpk"), mixed.join("c.atpk")).unwrap();
    let bad = bin()
        .args(["stats", "--inputs", &format!("{}/*", mixed.display())])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn synth_is_deterministic_and_valid() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for preset in ["clustered", "uniform", "biased"] {
        let da = synth(a.path(), preset, 3, 21);
        let db = synth(b.path(), preset, 3, 21);
        for i in 0..3 {
            let name = format!("{preset}_{i:04}.atpk");
            let bytes = std::fs::read(da.join(&name)).unwrap();
            assert_eq!(bytes, std::fs::read(db.join(&name)).unwrap());
            let grid: adaptprune::TokenGrid = adaptprune::io::decode_binary(&bytes).unwrap();
            assert_eq!(grid.n_tokens(), 576);
        }
    }
    let bad = run(&[
        "synth",
        "--preset",
        "stripes",
        "--outdir",
        a.path().to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn input_errors_exit_two_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.atpk");
    std::fs::write(&junk, b"ATPX\x01\x00\x00\x00").unwrap();
    for args in [
        vec!["prune", "--input", junk.to_str().unwrap()],
        vec!["prune", "--input", "/nonexistent/x.atpk"],
        vec![
            "prune",
            "--input",
            fixture("hand_identical_keys.json").to_str().unwrap(),
            "--keep",
            "1.5",
        ],
        vec![
            "prune",
            "--input",
            fixture("hand_identical_keys.json").to_str().unwrap(),
            "--strategy",
            "fitprune",
        ],
        vec![
            "prune",
            "--input",
            fixture("hand_identical_keys.json").to_str().unwrap(),
            "--sigma-d",
            "0",
        ],
        vec!["prune", "--bogus-flag"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"));
    }
}

#[test]
fn thread_cap_is_validated() {
    let input = fixture("hand_identical_keys.json");
    let out = bin()
        .env("ADAPTPRUNE_THREADS", "zero")
        .args(["compare", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .env("ADAPTPRUNE_THREADS", "1")
        .args(["compare", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert!(out.status.success());
}
