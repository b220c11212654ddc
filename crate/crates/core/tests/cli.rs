use std::path::Path;
use std::process::{Command, Output};

fn docsift(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_docsift"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn synth_train_recommend_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = docsift(d, &["--seed", "3", "synth", "--n", "400", "--out", "c.jsonl", "--embeddings", "e.txt"]);
    assert!(out.status.success());
    assert!(d.join("e.txt").exists());

    let train = json(&docsift(d, &["--seed", "3", "train", "--corpus", "c.jsonl", "--archive", "m.dsa", "--out", "out"]));
    assert_eq!(train["representation"], "tfidf");
    assert_eq!(train["index_rows"], 400);

    let first: serde_json::Value =
        serde_json::from_str(std::fs::read_to_string(d.join("c.jsonl")).unwrap().lines().next().unwrap()).unwrap();
    let id = first["id"].as_str().unwrap();
    let rec = json(&docsift(d, &["recommend", "--archive", "m.dsa", "--id", id]));
    assert_eq!(rec["k"], 20);
    assert_eq!(rec["results"].as_array().unwrap().len(), 20);
    assert!(rec["results"].as_array().unwrap().iter().all(|r| r["id"] != id));

    let text = first["abstract"].as_str().unwrap();
    let rec = json(&docsift(d, &["recommend", "--archive", "m.dsa", "--text", text, "--k", "3"]));
    assert_eq!(rec["results"][0]["id"], id);

    let filtered = json(&docsift(d, &["recommend", "--archive", "m.dsa", "--id", id, "--from", "2020-01-01", "--k", "50"]));
    for r in filtered["results"].as_array().unwrap() {
        assert!(r["date"].as_str().unwrap() >= "2020-01-01");
    }

    let info = json(&docsift(d, &["inspect", "--archive", "m.dsa"]));
    assert_eq!(info["manifest"]["schema_version"], 1);

    // Same seed, same archive contents.
    json(&docsift(d, &["--seed", "3", "train", "--corpus", "c.jsonl", "--archive", "m2.dsa", "--out", "out"]));
    let info2 = json(&docsift(d, &["inspect", "--archive", "m2.dsa"]));
    let hashes = |v: &serde_json::Value| {
        v["manifest"]["sections"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|s| s["name"] != "provenance" && s["name"] != "config")
            .map(|s| s["sha256"].clone())
            .collect::<Vec<_>>()
    };
    assert_eq!(hashes(&info), hashes(&info2));
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(docsift(d, &["synth", "--n", "300", "--out", "c.jsonl"]).status.success());
    std::fs::write(
        d.join("run.toml"),
        "seed = 5\n[paths]\ncorpus = \"c.jsonl\"\narchive = \"m.dsa\"\noutput_dir = \"reports\"\n[model]\nalgorithm = \"mnb\"\n",
    )
    .unwrap();
    let train = json(&docsift(d, &["--config", "run.toml", "train"]));
    assert_eq!(train["algorithm"], "mnb");
    let topics = json(&docsift(d, &["--config", "run.toml", "topics", "--k", "4"]));
    assert_eq!(topics["k"], 4);
    assert!(d.join("reports/topics.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(docsift(d, &["--help"]).status.code(), Some(0));
    assert_eq!(docsift(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(docsift(d, &["recommend", "--archive", "nope.dsa", "--id", "x"]).status.code(), Some(1));
    assert_eq!(docsift(d, &["ingest"]).status.code(), Some(1));
    std::fs::write(d.join("bad.toml"), "seed = 1\nbogus = true\n").unwrap();
    let out = docsift(d, &["--config", "bad.toml", "ingest"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    // A damaged archive is bad input, not a crash.
    std::fs::write(d.join("junk.dsa"), b"DOCSIFT-ARCHIVE\nxx").unwrap();
    assert_eq!(docsift(d, &["inspect", "--archive", "junk.dsa"]).status.code(), Some(1));
    std::fs::write(d.join("text.dsa"), b"hello").unwrap();
    assert_eq!(docsift(d, &["inspect", "--archive", "text.dsa"]).status.code(), Some(1));

    // Runtime failure: one record cannot be split into train and test.
    std::fs::write(d.join("one.jsonl"), "{\"id\":\"1\",\"title\":\"t\",\"abstract\":\"a b c\",\"categories\":\"cs.AI\"}\n").unwrap();
    let out = docsift(d, &["train", "--corpus", "one.jsonl", "--archive", "o.dsa"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
