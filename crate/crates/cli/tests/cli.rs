#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::{Command, Output};

use coldrec::Dataset;

const LIKES: &str = "player_id,game_id
ana,tetris
ana,portal
ben,tetris
ben,mario-kart
cal,portal
cal,civ
cal,tetris
dee,mario-kart
dee,forza
eve,civ
eve,portal
fay,tetris
fay,civ
gus,forza
gus,mario-kart
gus,portal
hal,portal
";

const TAGS: &str = "game_id,tag
tetris,puzzle
tetris,tile-matching
portal,puzzle
portal,shooter
mario-kart,racing
forza,racing
civ,strategy
civ,turn-based
";

const QUESTIONS: &str = "player_id,question_id,answer
ana,q1,5
ana,q2,1
ana,q3,4
ben,q1,2
ben,q2,4
ben,q4,5
cal,q1,5
cal,q3,5
cal,q4,1
dee,q2,5
dee,q4,4
eve,q1,4
eve,q3,5
fay,q1,3
fay,q2,2
fay,q3,3
gus,q2,5
gus,q4,5
hal,q1,4
";

fn toy(dir: &Path) -> std::path::PathBuf {
    let data = dir.join("toy");
    std::fs::create_dir_all(&data).unwrap();
    std::fs::write(data.join("likes.csv"), LIKES).unwrap();
    std::fs::write(data.join("tags.csv"), TAGS).unwrap();
    std::fs::write(data.join("questions.csv"), QUESTIONS).unwrap();
    data
}

fn coldrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coldrec"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = coldrec(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn text(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn recommend_skips_liked_games() {
    let dir = tempfile::tempdir().unwrap();
    let data = toy(dir.path());
    let out = ok(&["recommend", "--model", "mvn", "--data", text(&data), "--player", "hal", "--top", "5"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("rank\tgame_id\tscore"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 4, "hal likes one of five games");
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0], (k + 1).to_string());
        assert_ne!(row[1], "portal");
    }
    let scores: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));

    let top3 = ok(&["recommend", "--model", "knn", "--data", text(&data), "--player", "ana", "--top", "3"]);
    assert_eq!(top3.lines().count(), 4);
    assert!(!top3.contains("tetris") && !top3.contains("portal"));
}

#[test]
fn interaction_report_matches_sorted_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let data = toy(dir.path());
    let out = ok(&[
        "interpret", "--model", "interactions", "--data", text(&data), "--lambda", "2", "--tag", "puzzle", "--top", "4",
        "--json",
    ]);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    let names: Vec<&str> = report["entries"].as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();

    let dataset = Dataset::load_dir(&data).unwrap();
    let a = common::kron_oracle(&dataset.likes.to_dense(), &dataset.questions.to_dense(), &dataset.tags.to_dense(), 2.0);
    let puzzle = dataset.tags.tag_names().iter().position(|t| t == "puzzle").unwrap();
    let mut order: Vec<usize> = (0..a.ncols()).collect();
    order.sort_by(|&x, &y| a[(puzzle, y)].total_cmp(&a[(puzzle, x)]));
    let expected: Vec<&str> = order[..4].iter().map(|&q| dataset.questions.question_ids()[q].as_str()).collect();
    assert_eq!(names, expected);
}

#[test]
fn saved_models_reproduce_on_the_fly_fits() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synth");
    ok(&["generate", "--out", text(&data), "--set", "n=120,m=60,r=12,s=6,density=0.1", "--seed", "4"]);
    let split = dir.path().join("split");
    ok(&["split", "--data", text(&data), "--out", text(&split), "--seed", "2"]);
    for (model, setting, extra) in [
        ("mvn", "1", vec![]),
        ("svd", "1", vec!["--k", "4", "--iters", "20"]),
        ("tags", "2", vec![]),
        ("questions", "3", vec![]),
        ("interactions", "4", vec!["--lambda", "16"]),
    ] {
        let file = dir.path().join(format!("{model}.json"));
        let mut fit = vec!["fit", "--model", model, "--data", text(&data), "--split", text(&split), "--out", text(&file)];
        fit.extend(&extra);
        ok(&fit);
        let base = ["evaluate", "--model", model, "--data", text(&data), "--split", text(&split), "--setting", setting];
        let mut fresh = base.to_vec();
        fresh.extend(&extra);
        let mut saved = base.to_vec();
        saved.extend(["--model-file", text(&file)]);
        let (fresh, saved) = (ok(&fresh), ok(&saved));
        assert_eq!(fresh, saved, "{model}");
        let report: serde_json::Value = serde_json::from_str(&saved).unwrap();
        assert!(report["counted_players"].as_u64().unwrap() > 0, "{model}");
    }
}

#[test]
fn benchmark_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let stdout = ok(&[
        "benchmark", "--synthetic", "n=150,m=60,r=10,s=6,density=0.1", "--seed", "3", "--k-grid", "2,4",
        "--lambda-grid", "4,32", "--out", text(&out),
    ]);
    let markdown = std::fs::read_to_string(out.join("results.md")).unwrap();
    assert_eq!(stdout, markdown);
    assert!(markdown.contains("nDCG@m") && markdown.contains("Precision@20"));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("results.json")).unwrap()).unwrap();
    let names: Vec<&str> = json["models"].as_array().unwrap().iter().map(|m| m["name"].as_str().unwrap()).collect();
    assert_eq!(
        names,
        ["Random", "MVN", "kNN (cos)", "kNN (phi)", "PureSVD", "SVD", "Tags", "Questions", "Tags X Questions"]
    );
}

#[test]
fn exit_codes_follow_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let data = toy(dir.path());
    let code = |args: &[&str]| coldrec(args).status.code().unwrap();

    assert_eq!(code(&["--help"]), 0);
    for sub in ["generate", "split", "fit", "evaluate", "benchmark", "recommend", "interpret"] {
        assert_eq!(code(&[sub, "--help"]), 0, "{sub}");
    }
    assert_eq!(code(&["recommend", "--no-such-flag"]), 1);
    assert_eq!(code(&["recommend", "--model", "svd", "--data", text(&data), "--player", "nobody"]), 1);
    assert_eq!(code(&["interpret", "--model", "tags", "--data", text(&data)]), 1);

    let missing = dir.path().join("missing");
    assert_eq!(code(&["recommend", "--model", "mvn", "--data", text(&missing), "--player", "ana"]), 2);
    let broken = dir.path().join("broken");
    std::fs::create_dir_all(&broken).unwrap();
    std::fs::write(broken.join("likes.csv"), "player_id,game_id\nana\n").unwrap();
    std::fs::write(broken.join("tags.csv"), TAGS).unwrap();
    std::fs::write(broken.join("questions.csv"), QUESTIONS).unwrap();
    let out = coldrec(&["recommend", "--model", "mvn", "--data", text(&broken), "--player", "ana"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    let model = dir.path().join("mvn.json");
    ok(&["fit", "--model", "mvn", "--data", text(&data), "--out", text(&model)]);
    let saved = std::fs::read_to_string(&model).unwrap();
    let bumped = saved.replacen("\"format_version\":1", "\"format_version\":99", 1);
    assert_ne!(saved, bumped);
    std::fs::write(&model, bumped).unwrap();
    assert_eq!(code(&["interpret", "--model", "mvn", "--model-file", text(&model), "--game", "civ"]), 2);

    let huge = dir.path().join("huge");
    assert_eq!(code(&["generate", "--out", text(&huge), "--set", "n=3,m=3,density=0.01"]), 3);
}

#[test]
fn threads_come_from_flag_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let data = toy(dir.path());
    let args = ["recommend", "--model", "mvn", "--data", text(&data), "--player", "ana", "--top", "2"];
    let flag = ok(&[&["--threads", "1"][..], &args].concat());
    let env = Command::new(env!("CARGO_BIN_EXE_coldrec")).args(args).env("COLDREC_THREADS", "2").output().unwrap();
    assert!(env.status.success());
    assert_eq!(String::from_utf8(env.stdout).unwrap(), flag);
}
