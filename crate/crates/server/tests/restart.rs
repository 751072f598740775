mod common;

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::Duration;

use alqa::active::LoopState;
use alqa_server::run::STATE_FILE;
use common::{human_score, small_config, tiny_database, Client, TOKEN};
use serde_json::json;

fn launch(db: &Path, config: &Path) -> (Child, Client) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_alqa"))
        .args(["serve", "--db"])
        .arg(db)
        .arg("--config")
        .arg(config)
        .env("ALQA_BIND", "127.0.0.1:0")
        .env("ALQA_TOKEN", TOKEN)
        .env("RUST_LOG", "warn")
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected banner {line:?}"));
    (child, Client::new(addr, TOKEN))
}

#[test]
fn kill_mid_query_loses_no_labels() {
    let dir = tempfile::tempdir().unwrap();
    tiny_database(dir.path(), 40);
    let cfg = small_config();
    let config = dir.path().join("run.json");
    std::fs::write(&config, serde_json::to_vec(&cfg).unwrap()).unwrap();

    let (mut child, c) = launch(dir.path(), &config);
    let mut before = Vec::new();
    for _ in 0..3 {
        let item = c.next_item(Duration::from_secs(60)).unwrap();
        let id = item["dataset_id"].as_str().unwrap().to_string();
        assert_eq!(c.label(&id, human_score(&id)).0, 200);
        before.push(id);
    }
    let pending = c.next_item(Duration::from_secs(5)).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();

    let (mut child, c) = launch(dir.path(), &config);
    let history = c.get("/api/history").1;
    let kept: Vec<&str> = history.as_array().unwrap().iter().map(|r| r["dataset_id"].as_str().unwrap()).collect();
    assert_eq!(kept, before.iter().map(String::as_str).collect::<Vec<_>>());
    // the resumed set continues where the rater stopped
    let resumed = c.next_item(Duration::from_secs(60)).unwrap();
    assert_eq!(resumed["dataset_id"], pending["dataset_id"]);
    assert_eq!(resumed["position"], 4);

    let mut served = before.clone();
    while let Some(item) = c.next_item(Duration::from_secs(120)) {
        let id = item["dataset_id"].as_str().unwrap().to_string();
        let (status, ack) = c.label(&id, human_score(&id));
        assert_eq!(status, 200);
        served.push(id);
        if ack["query_complete"] == json!(true) {
            // a kill right after completion must not lose the finished set
            child.kill().unwrap();
            child.wait().unwrap();
            let relaunched = launch(dir.path(), &config);
            child = relaunched.0;
            return finish(child, relaunched.1, served, dir.path(), &cfg);
        }
    }
    panic!("run ended before the first query set completed");
}

fn finish(mut child: Child, c: Client, mut served: Vec<String>, db: &Path, cfg: &alqa::active::ActiveLearningConfig) {
    while let Some(item) = c.next_item(Duration::from_secs(120)) {
        let id = item["dataset_id"].as_str().unwrap().to_string();
        assert_eq!(c.label(&id, human_score(&id)).0, 200);
        served.push(id);
    }
    let state = LoopState::load(&db.join("serve").join(STATE_FILE)).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(state.finished);
    assert_eq!(state.labeled.len(), cfg.n_initial + 2 * cfg.query_size);
    let consumed: Vec<&str> = state.labeled.iter().map(|(id, _)| id.as_str()).collect();
    assert_eq!(consumed, served.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(state.labeled.iter().all(|(id, class)| i64::from(class.value()) == human_score(id)));
}
