use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const KEY: &str = "8f2c5e7a91d04b36c7e1a2f9b05d6e38";

fn semstego(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semstego"))
        .current_dir(dir)
        .args(args)
        .env("SEMSTEGO_KEY", KEY)
        .env_remove("SEMSTEGO_NONCE")
        .env("RUST_LOG", "trace")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn setup(message: &[u8]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("msg.bin"), message).unwrap();
    dir
}

const TOY_TREE: &str = r#"{"version": 1, "nodes": [
  {"path": "Animal/Pet/cat", "surfaces": ["cat"]},
  {"path": "Food/Fruit/apple", "surfaces": ["apple"]}
]}"#;

#[test]
fn encode_decode_round_trip() {
    let dir = setup(b"meet me by the old mill at noon");
    let p = dir.path();
    let enc = semstego(p, &["encode", "--input", "msg.bin", "--out", "stego.txt", "--trace", "trace.json"]);
    assert_eq!(code(&enc), 0, "{}", String::from_utf8_lossy(&enc.stderr));
    assert!(String::from_utf8_lossy(&enc.stdout).contains("bits/sentence"));
    let dec = semstego(p, &["decode", "--input", "stego.txt", "--out", "back.bin"]);
    assert_eq!(code(&dec), 0, "{}", String::from_utf8_lossy(&dec.stderr));
    assert!(String::from_utf8_lossy(&dec.stdout).contains("bits/sentence"));
    assert_eq!(fs::read(p.join("back.bin")).unwrap(), fs::read(p.join("msg.bin")).unwrap());
}

#[test]
fn mock_mode_is_deterministic() {
    let dir = setup(b"same input twice");
    let p = dir.path();
    assert_eq!(code(&semstego(p, &["--seed", "9", "encode", "--input", "msg.bin", "--out", "a.txt"])), 0);
    assert_eq!(code(&semstego(p, &["--seed", "9", "encode", "--input", "msg.bin", "--out", "b.txt"])), 0);
    assert_eq!(fs::read(p.join("a.txt")).unwrap(), fs::read(p.join("b.txt")).unwrap());
    assert_eq!(code(&semstego(p, &["--seed", "10", "encode", "--input", "msg.bin", "--out", "c.txt"])), 0);
    assert_ne!(fs::read(p.join("a.txt")).unwrap(), fs::read(p.join("c.txt")).unwrap());
}

#[test]
fn wrong_key_is_reported_as_corruption() {
    let dir = setup(b"attack at dawn");
    let p = dir.path();
    assert_eq!(code(&semstego(p, &["encode", "--input", "msg.bin", "--out", "stego.txt"])), 0);
    fs::write(p.join("other.json"), r#"{"key_hex": "ffeeddccbbaa99887766554433221100"}"#).unwrap();
    let dec = semstego(p, &["--config", "other.json", "decode", "--input", "stego.txt", "--out", "back.bin"]);
    assert_eq!(code(&dec), 5, "{}", String::from_utf8_lossy(&dec.stderr));
    assert!(!p.join("back.bin").exists());
}

#[test]
fn live_mode_without_api_key_fails_before_any_request() {
    let dir = setup(b"x");
    let p = dir.path();
    fs::write(
        p.join("live.json"),
        r#"{"mode": "live", "endpoint": {"endpoint_url": "http://127.0.0.1:9/v1/chat/completions",
            "model_name": "m", "api_key_env": "SEMSTEGO_TEST_UNSET_API_KEY", "max_retries": 0}}"#,
    )
    .unwrap();
    let out = semstego(p, &["--config", "live.json", "encode", "--input", "msg.bin", "--out", "s.txt"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("SEMSTEGO_TEST_UNSET_API_KEY"));
    fs::write(p.join("bare.json"), r#"{"mode": "live"}"#).unwrap();
    let out = semstego(p, &["--config", "bare.json", "encode", "--input", "msg.bin", "--out", "s.txt"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn build_dist_counts_types() {
    let dir = setup(b"");
    let p = dir.path();
    fs::write(p.join("tree.json"), TOY_TREE).unwrap();
    fs::write(p.join("corpus.txt"), "The cat sat.\nAn apple and a cat.\nNothing here.\n\nThe cat ate.\n").unwrap();
    let out = semstego(p, &["build-dist", "--corpus", "corpus.txt", "--tree", "tree.json", "--out", "dist.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("4 sentences (1 without entities), 3 types"), "{stdout}");
    let dist: Value = serde_json::from_str(&fs::read_to_string(p.join("dist.json")).unwrap()).unwrap();
    assert_eq!(dist["total"], 4);
    let mut entries: Vec<(String, u64)> = dist["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["type"].to_string(), e["count"].as_u64().unwrap()))
        .collect();
    entries.sort();
    assert_eq!(
        entries,
        vec![
            (r#"{"Animal/Pet/cat":1,"Food/Fruit/apple":1}"#.to_string(), 1),
            (r#"{"Animal/Pet/cat":1}"#.to_string(), 2),
            ("{}".to_string(), 1),
        ]
    );
}

#[test]
fn build_dist_rejects_bad_corpora() {
    let dir = setup(b"");
    let p = dir.path();
    fs::write(p.join("tree.json"), TOY_TREE).unwrap();
    fs::write(p.join("empty.txt"), "\n\n").unwrap();
    let out = semstego(p, &["build-dist", "--corpus", "empty.txt", "--tree", "tree.json", "--out", "d.json"]);
    assert_eq!(code(&out), 2);
    fs::write(p.join("bad.txt"), b"The cat.\n\xff\xfe apple\n").unwrap();
    let out = semstego(p, &["build-dist", "--corpus", "bad.txt", "--tree", "tree.json", "--out", "d.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.txt:2"));
    let out = semstego(p, &["build-dist", "--corpus", "missing.txt", "--tree", "tree.json", "--out", "d.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn single_type_distribution_has_no_capacity() {
    let dir = setup(b"hi");
    let p = dir.path();
    fs::write(p.join("tree.json"), TOY_TREE).unwrap();
    fs::write(p.join("corpus.txt"), "The cat.\nA cat.\n").unwrap();
    let out = semstego(p, &["build-dist", "--corpus", "corpus.txt", "--tree", "tree.json", "--out", "dist.json"]);
    assert_eq!(code(&out), 0);
    fs::write(p.join("cfg.json"), r#"{"tree_path": "tree.json", "distribution_path": "dist.json"}"#).unwrap();
    let out = semstego(p, &["--config", "cfg.json", "encode", "--input", "msg.bin", "--out", "s.txt"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn attacks_are_reproducible() {
    let dir = setup(b"some payload");
    let p = dir.path();
    assert_eq!(code(&semstego(p, &["encode", "--input", "msg.bin", "--out", "stego.txt"])), 0);
    for out in ["a.txt", "b.txt"] {
        let o = semstego(p, &["--seed", "4", "attack", "--input", "stego.txt", "--out", out, "--kind", "insert"]);
        assert_eq!(code(&o), 0);
    }
    let a = fs::read_to_string(p.join("a.txt")).unwrap();
    assert_eq!(a, fs::read_to_string(p.join("b.txt")).unwrap());
    assert_ne!(a, fs::read_to_string(p.join("stego.txt")).unwrap());
    let o = semstego(p, &["attack", "--input", "stego.txt", "--out", "c.txt", "--kind", "shuffle"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn eval_reports_buckets() {
    let dir = setup(&[7u8; 64]);
    let p = dir.path();
    let enc = semstego(p, &["encode", "--input", "msg.bin", "--out", "stego.txt", "--trace", "trace.json"]);
    assert_eq!(code(&enc), 0);
    let out = semstego(p, &["eval", "--run-dir", "."]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(p.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["overall_dsr"], 1.0);
    let lens: Vec<u64> = report["decoding_success"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["type_len"].as_u64().unwrap())
        .collect();
    for k in 1..=4 {
        assert!(lens.contains(&k));
    }
    assert!(fs::read_to_string(p.join("report.txt")).unwrap().contains("3+"));

    let out = semstego(p, &["eval", "--run-dir", ".", "--kind", "delete", "--preserve-entities"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(p.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["overall_dsr"], 1.0);
    assert_eq!(report["attack"]["kind"], "delete");

    fs::remove_file(p.join("trace.json")).unwrap();
    let out = semstego(p, &["eval", "--run-dir", "."]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing ground truth"));
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = setup(b"x");
    let p = dir.path();
    fs::write(p.join("cfg.json"), r#"{"sede": 1}"#).unwrap();
    assert_eq!(code(&semstego(p, &["--config", "cfg.json", "encode", "--input", "msg.bin", "--out", "s"])), 2);
    fs::write(p.join("stego.txt"), "not a stego file\n").unwrap();
    assert_eq!(code(&semstego(p, &["decode", "--input", "stego.txt", "--out", "b"])), 2);
    assert_eq!(code(&semstego(p, &["frobnicate"])), 2);
}

#[test]
fn key_never_leaks() {
    let dir = setup(b"the key must stay secret");
    let p = dir.path();
    fs::write(p.join("cfg.json"), format!(r#"{{"key_hex": "{KEY}"}}"#)).unwrap();
    let runs = [
        semstego(p, &["encode", "--input", "msg.bin", "--out", "stego.txt", "--trace", "trace.json"]),
        semstego(p, &["decode", "--input", "stego.txt", "--out", "back.bin"]),
        semstego(p, &["eval", "--run-dir", ".", "--kind", "swap"]),
        semstego(p, &["--config", "cfg.json", "decode", "--input", "stego.txt", "--out", "back2.bin"]),
        semstego(p, &["--config", "cfg.json", "attack", "--input", "stego.txt", "--out", "att.txt"]),
    ];
    let needles = [KEY.to_string(), KEY.to_uppercase()];
    for o in &runs {
        assert_eq!(code(o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        for stream in [&o.stdout, &o.stderr] {
            let s = String::from_utf8_lossy(stream);
            assert!(needles.iter().all(|n| !s.contains(n.as_str())));
        }
    }
    for entry in fs::read_dir(p).unwrap() {
        let path = entry.unwrap().path();
        if path.file_name().unwrap() == "cfg.json" {
            continue;
        }
        let s = String::from_utf8_lossy(&fs::read(&path).unwrap()).to_string();
        assert!(needles.iter().all(|n| !s.contains(n.as_str())), "{}", path.display());
    }
}
