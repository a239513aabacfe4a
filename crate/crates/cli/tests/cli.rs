use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_corpus-affinity");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("CORPUS_AFFINITY_THREADS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let source = dir.join("source.txt");
    let target = dir.join("target.txt");
    std::fs::write(
        &source,
        "the cat sat on the mat\nthe dog ran in the park\na cat and a dog\nbirds sing at dawn\n".repeat(20),
    )
    .unwrap();
    std::fs::write(&target, "the cat ran\nthe dog sat on a mat\nfish swim\n".repeat(10)).unwrap();
    (source, target)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["profile", "--source", "s.txt", "--target", "t.txt", "--samples", "0", "--out-dir", "x"]).status.code(), Some(2));
    assert_eq!(run(&["count", "--input", "x", "--order", "4", "-o", "y"]).status.code(), Some(2));
    assert_eq!(run(&["count", "--input", "x", "--bogus-flag", "-o", "y"]).status.code(), Some(2));
    assert_eq!(run(&["lm-build", "--input", "x", "--discounts", "fixed:abc", "-o", "y"]).status.code(), Some(2));
    let err = run(&["bogus"]);
    assert!(String::from_utf8_lossy(&err.stderr).contains("bogus"));
}

#[test]
fn missing_input_exits_one_without_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("counts.tsv");
    let r = run(&["count", "--input", s(&dir.path().join("missing.txt")), "-o", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn normalize_writes_placeholders_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tweets.txt");
    std::fs::write(&input, "Thanks @Alice!! see https://t.co/x\n\nWWW.Site.org rocks\n").unwrap();
    let out = dir.path().join("norm.txt");
    ok(&["normalize", "--mode", "twitter", "--input", s(&input), "-o", s(&out)]);
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "Thanks [TwitterUser] see [URL]\n[URL] rocks\n"
    );
    let manifest = json(&dir.path().join("norm.txt.manifest.json"));
    assert_eq!(manifest["subcommand"], "normalize");
    assert_eq!(manifest["flags"]["mode"], "twitter");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn count_output_is_sorted_and_thread_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let (source, _) = fixture(dir.path());
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    ok(&["--threads", "1", "count", "--input", s(&source), "--boundary", "markers", "-o", s(&a)]);
    ok(&["--threads", "3", "count", "--input", s(&source), "--boundary", "markers", "-o", s(&b)]);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("corpus-affinity-counts v1 max_order=3 boundary=markers\n"));
    assert!(text.contains("1\t80\tthe\n"));
}

#[test]
fn lm_round_trip_and_tokenizer_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let (source, target) = fixture(dir.path());
    let model = dir.path().join("m.arpa");
    ok(&["lm-build", "--input", s(&source), "--discounts", "fixed:0.75", "-o", s(&model)]);
    assert!(dir.path().join("m.arpa.meta.json").exists());
    assert!(dir.path().join("m.arpa.manifest.json").exists());

    let ppl = dir.path().join("ppl.json");
    ok(&["lm-ppl", "--model", s(&model), "--input", s(&target), "-o", s(&ppl)]);
    let v = json(&ppl);
    assert!(v["perplexity"].as_f64().unwrap() > 1.0);
    assert_eq!(v["scored_token_count"], 30 * 1 + 10 * (3 + 6 + 2));

    let bad = dir.path().join("bad.json");
    let r = run(&["lm-ppl", "--model", s(&model), "--input", s(&target), "--no-lowercase", "-o", s(&bad)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("fingerprint"));
    assert!(!bad.exists());
}

#[test]
fn sim_measures() {
    let dir = tempfile::tempdir().unwrap();
    let (source, target) = fixture(dir.path());
    let value = |args: &[&str]| -> f64 {
        let out = dir.path().join("sim.json");
        let mut full = vec!["sim"];
        full.extend_from_slice(args);
        full.extend_from_slice(&["-o", s(&out)]);
        ok(&full);
        json(&out)["value"].as_f64().unwrap()
    };
    let self_jsd = value(&["jsd", "--source", s(&source), "--target", s(&source)]);
    assert_eq!(self_jsd, 0.0);
    let j = value(&["jsd", "--source", s(&source), "--target", s(&target), "--pooling", "1"]);
    assert!(j > 0.0 && j < 1.0);
    let t = value(&["tvc", "--source", s(&source), "--target", s(&target)]);
    assert!(t > 0.0 && t < 1.0);
    let r = value(&["ttr", "--source", s(&source)]);
    assert!((r - 15.0 / 420.0).abs() < 1e-12);
    assert_eq!(run(&["sim", "jsd", "--source", s(&source), "-o", "x.json"]).status.code(), Some(2));
}

#[test]
fn tvc_with_pos_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("s.txt");
    let target = dir.path().join("t.txt");
    std::fs::write(&source, "dogs run\n").unwrap();
    std::fs::write(&target, "dogs run fast\n").unwrap();
    let pos = dir.path().join("t.pos");
    std::fs::write(&pos, "dogs\tNNS\nrun\tVBP\nfast\tRB\n").unwrap();
    let out = dir.path().join("tvc.json");
    ok(&["sim", "tvc", "--source", s(&source), "--target", s(&target), "--target-pos", s(&pos), "-o", s(&out)]);
    assert_eq!(json(&out)["value"], 1.0);
    std::fs::write(&pos, "dogs\tNNS\nwalk\tVBP\n").unwrap();
    let r = run(&["sim", "tvc", "--source", s(&source), "--target", s(&target), "--target-pos", s(&pos), "-o", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn profile_rank_and_correlate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (source, target) = fixture(dir.path());
    let other = dir.path().join("other.txt");
    std::fs::write(&other, "quantum flux capacitor\nzeta beta gamma rays\n".repeat(30)).unwrap();
    let out = dir.path().join("prof");
    let src = format!("near={}", s(&source));
    let far = format!("far={}", s(&other));
    let tgt = format!("tgt={}", s(&target));
    ok(&[
        "profile", "--source", &src, "--source", &far, "--target", &tgt, "--samples", "2", "--sample-tokens", "100",
        "--seed", "3", "--out-dir", s(&out),
    ]);
    for f in ["near__tgt.profile.json", "near__tgt.profile.csv", "far__tgt.profile.json", "means.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(json(&out.join("manifest.json"))["seed"], 3);
    let prof = json(&out.join("near__tgt.profile.json"));
    assert_eq!(prof["measures"]["ppl"]["values"].as_array().unwrap().len(), 2);

    let ranking = dir.path().join("rank.json");
    ok(&[
        "rank", "--key", "composite", "--profiles", s(&out.join("far__tgt.profile.json")),
        s(&out.join("near__tgt.profile.json")), "-o", s(&ranking),
    ]);
    assert_eq!(json(&ranking)["ranking"][0]["source"], "near");

    let results = dir.path().join("results.csv");
    std::fs::write(
        &results,
        "task,model,repeat,score\ntgt,base,0,70\ntgt,near,0,75\ntgt,far,0,68\ntgt,base,1,72\ntgt,near,1,74\ntgt,far,1,69\n",
    )
    .unwrap();
    let cor = dir.path().join("cor");
    ok(&[
        "correlate", "--results", s(&results), "--baseline", "base", "--similarity", s(&out.join("means.csv")),
        "--out-dir", s(&cor),
    ]);
    let report = json(&cor.join("correlation.json"));
    assert_eq!(report["variables"], serde_json::json!(["delta", "ppl_sim", "jsd_sim", "tvc", "ttr"]));
    assert_eq!(report["n_points"], 4);
    assert!(report["matrix"][0][1].as_f64().unwrap() > 0.0);
    let long = std::fs::read_to_string(cor.join("correlation.csv")).unwrap();
    assert!(long.starts_with("var_a,var_b,r,n\n"));
    assert_eq!(long.lines().count(), 1 + 25);

    let r = run(&["correlate", "--results", s(&results), "--baseline", "nobody", "--out-dir", s(&cor)]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (source, target) = fixture(dir.path());
    let go = |name: &str, threads: &str| -> Vec<u8> {
        let out = dir.path().join(name);
        ok(&[
            "--threads", threads, "profile", "--source", s(&source), "--target", s(&target), "--samples", "3",
            "--sample-tokens", "50", "--mode", "independent", "--seed", "8", "--out-dir", s(&out),
        ]);
        let mut bytes = std::fs::read(out.join("source__target.profile.json")).unwrap();
        bytes.extend(std::fs::read(out.join("means.csv")).unwrap());
        bytes
    };
    assert_eq!(go("one", "1"), go("two", "2"));
}

#[test]
fn threads_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let (source, _) = fixture(dir.path());
    let out = dir.path().join("c.tsv");
    let r = Command::new(BIN)
        .args(["count", "--input", s(&source), "-o", s(&out)])
        .env("CORPUS_AFFINITY_THREADS", "2")
        .output()
        .unwrap();
    assert!(r.status.success());
    assert_eq!(json(&dir.path().join("c.tsv.manifest.json"))["threads"], 2);
    let r = Command::new(BIN)
        .args(["count", "--input", s(&source), "-o", s(&out)])
        .env("CORPUS_AFFINITY_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(2));
}
