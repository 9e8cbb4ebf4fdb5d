// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use pixie_core::compiler::{compile, PruneConfig};
use pixie_core::WalkConfig;
use pixie_eval::{generate_synthetic_graph, SynthConfig};
use pixie_server::actions::{ActionType, UserAction};
use pixie_server::api::{handle_recommend, resolve_query, Overrides, QueryEntry, RecommendRequest, RecommendResponse};
use pixie_server::graph::ServedGraph;
use pixie_server::{serve, AppState, Health, ServerConfig, ServerError, Watcher};

fn synth(seed: u64) -> pixie_eval::SynthGraph {
    generate_synthetic_graph(&SynthConfig {
        communities: 4,
        pins_per_community: 100,
        boards_per_community: 10,
        edges_per_board: 40,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
}

/// Compiles a synthetic graph into `dir/<version>.pixg`.
fn write_graph(dir: &Path, version: &str, seed: u64) {
    let s = synth(seed);
    let (e, t) = (
        dir.join(format!("{version}.edges")),
        dir.join(format!("{version}.topics")),
    );
    s.write_edges(&e).unwrap();
    s.write_topics(&t).unwrap();
    compile(&e, &t, &PruneConfig::default(), dir.join(format!("{version}.pixg"))).unwrap();
}

fn config(dir: &Path) -> ServerConfig {
    ServerConfig {
        graph_dir: dir.to_path_buf(),
        workers: 2,
        walk: WalkConfig {
            total_steps: 20_000,
            ..WalkConfig::default()
        },
        poll_interval: Duration::from_millis(100),
        ..ServerConfig::default()
    }
}

fn query(keys: &[&str]) -> RecommendRequest {
    RecommendRequest {
        query: keys
            .iter()
            .map(|k| QueryEntry {
                pin_key: k.to_string(),
                weight: 1.0,
            })
            .collect(),
        ..RecommendRequest::default()
    }
}

fn served(dir: &Path) -> ServedGraph {
    write_graph(dir, "0001", 1);
    ServedGraph::load(&dir.join("0001.pixg")).unwrap()
}

#[test]
fn pinned_seed_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let g = served(dir.path());
    let cfg = config(dir.path());
    let req = RecommendRequest {
        seed: Some(7),
        ..query(&["p1", "p2"])
    };
    let a = handle_recommend(&g, &cfg, req.clone(), 1).unwrap();
    let b = handle_recommend(&g, &cfg, req, 2).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.stats.latency_micros.is_none());
    // Unpinned requests follow the derived seed and report latency.
    let c = handle_recommend(&g, &cfg, query(&["p1", "p2"]), 1).unwrap();
    assert!(c.stats.latency_micros.is_some());
    assert_eq!(a.stats.graph_version, "0001");
}

#[test]
fn results_sorted_and_exclude_query() {
    let dir = tempfile::tempdir().unwrap();
    let g = served(dir.path());
    let r = handle_recommend(&g, &config(dir.path()), query(&["p3"]), 0).unwrap();
    assert!(!r.results.is_empty());
    assert!(r.results.iter().all(|s| s.pin_key != "p3"));
    for w in r.results.windows(2) {
        assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].pin_key < w[1].pin_key));
    }
}

#[test]
fn top_k_bounds_results() {
    let dir = tempfile::tempdir().unwrap();
    let g = served(dir.path());
    let req = RecommendRequest {
        top_k: Some(5),
        ..query(&["p3"])
    };
    assert!(handle_recommend(&g, &config(dir.path()), req, 0).unwrap().results.len() <= 5);
    let req = RecommendRequest {
        top_k: Some(0),
        ..query(&["p3"])
    };
    assert!(matches!(
        handle_recommend(&g, &config(dir.path()), req, 0),
        Err(ServerError::BadRequest(_))
    ));
}

#[test]
fn unknown_pins_dropped_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let g = served(dir.path());
    let r = handle_recommend(&g, &config(dir.path()), query(&["p3", "nope"]), 0).unwrap();
    assert_eq!(r.dropped_pins, vec!["nope"]);
    assert!(r.warnings[0].contains("nope"));
    match handle_recommend(&g, &config(dir.path()), query(&["nope", "nada"]), 0) {
        Err(ServerError::EmptyQuery { unknown }) => assert_eq!(unknown, vec!["nope", "nada"]),
        other => panic!("expected empty query, got {other:?}"),
    }
}

#[test]
fn overrides_validated() {
    let dir = tempfile::tempdir().unwrap();
    let g = served(dir.path());
    let cfg = config(dir.path());
    let with = |o: Overrides| RecommendRequest {
        overrides: Some(o),
        ..query(&["p3"])
    };
    for o in [
        Overrides {
            alpha: Some(1.5),
            ..Overrides::default()
        },
        Overrides {
            beta: Some(-0.1),
            ..Overrides::default()
        },
        Overrides {
            steps: Some(10_000_000),
            ..Overrides::default()
        },
    ] {
        assert!(matches!(
            handle_recommend(&g, &cfg, with(o), 0),
            Err(ServerError::BadRequest(_))
        ));
    }
    let ok = handle_recommend(
        &g,
        &cfg,
        with(Overrides {
            steps: Some(1_000),
            nv: Some(u64::MAX),
            ..Overrides::default()
        }),
        0,
    )
    .unwrap();
    assert!(ok.stats.steps_used >= 1_000 && ok.stats.steps_used < 1_100);
}

#[test]
fn actions_become_normalized_query() {
    let dir = tempfile::tempdir().unwrap();
    let g = served(dir.path());
    let (q, dropped) = resolve_query(&g, vec![("p1".into(), 3.0)], Default::default()).unwrap();
    assert!(dropped.is_empty());
    assert_eq!(q.entries()[0].1, 1.0);
    let (q, _) = resolve_query(&g, vec![("p1".into(), 0.5), ("p2".into(), 0.5)], Default::default()).unwrap();
    assert_eq!(q.entries().iter().map(|e| e.1).collect::<Vec<_>>(), vec![0.5, 0.5]);

    let req = RecommendRequest {
        actions: vec![
            UserAction {
                pin_key: "p1".into(),
                action_type: ActionType::Save,
                age_seconds: 0.0,
            },
            UserAction {
                pin_key: "p2".into(),
                action_type: ActionType::Click,
                age_seconds: 10.0,
            },
        ],
        seed: Some(1),
        ..RecommendRequest::default()
    };
    let r = handle_recommend(&g, &config(dir.path()), req, 0).unwrap();
    assert!(!r.results.is_empty());
    let both = RecommendRequest {
        actions: vec![UserAction {
            pin_key: "p1".into(),
            action_type: ActionType::Like,
            age_seconds: 0.0,
        }],
        ..query(&["p2"])
    };
    assert!(handle_recommend(&g, &config(dir.path()), both, 0).is_err());
}

#[test]
fn user_features_must_be_attribute_ids() {
    let dir = tempfile::tempdir().unwrap();
    let g = served(dir.path());
    let req = RecommendRequest {
        user_features: vec!["english".into()],
        ..query(&["p1"])
    };
    assert!(matches!(
        handle_recommend(&g, &config(dir.path()), req, 0),
        Err(ServerError::BadRequest(_))
    ));
    // p1 is in community 0 (attribute 1); community 1 (p100..p199) carries attribute 2.
    let target_share = |beta: f64| {
        let req = RecommendRequest {
            user_features: vec!["2".into()],
            overrides: Some(Overrides {
                beta: Some(beta),
                ..Overrides::default()
            }),
            top_k: Some(50),
            seed: Some(3),
            ..query(&["p1"])
        };
        let r = handle_recommend(&g, &config(dir.path()), req, 0).unwrap();
        r.results
            .iter()
            .filter(|s| (100..200).contains(&s.pin_key[1..].parse::<u32>().unwrap()))
            .count()
    };
    let (plain, biased) = (target_share(0.0), target_share(1.0));
    assert!(biased > plain, "biased {biased} vs plain {plain}");
}

#[test]
fn watcher_swaps_valid_and_ignores_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    write_graph(dir.path(), "0001", 1);
    let state = AppState::from_dir(config(dir.path())).unwrap();
    let pinned = state.current();
    let mut w = Watcher::default();
    assert_eq!(state.poll(&mut w), None);

    // Corrupt newer graph: no swap.
    std::fs::write(dir.path().join("0002.pixg"), b"PIXG garbage").unwrap();
    std::fs::copy(dir.path().join("0001.ids"), dir.path().join("0002.ids")).unwrap();
    assert_eq!(state.poll(&mut w), None);
    assert_eq!(state.current().version, "0001");

    // Valid newer graph: swapped; the old handle stays usable.
    write_graph(dir.path(), "0003", 2);
    assert_eq!(state.poll(&mut w).as_deref(), Some("0003"));
    assert_eq!(state.current().version, "0003");
    let r = handle_recommend(&pinned, state.config(), query(&["p1"]), 0).unwrap();
    assert_eq!(r.stats.graph_version, "0001");
}

async fn start(dir: &Path) -> (String, tokio::sync::oneshot::Sender<()>) {
    let state = AppState::from_dir(config(dir)).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    tokio::spawn(serve(listener, state, async {
        let _ = rx.await;
    }));
    (url, tx)
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn http_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    write_graph(dir.path(), "0001", 1);
    let (url, stop) = start(dir.path()).await;
    let client = reqwest::Client::new();

    let h: Health = client
        .get(format!("{url}/v1/health"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(h.status, "ok");
    assert_eq!(h.graph_version, "0001");
    assert!(h.nodes > 0 && h.edges > 0);

    let req = RecommendRequest {
        seed: Some(42),
        top_k: Some(50),
        ..query(&["p1", "p7"])
    };
    let post = || client.post(format!("{url}/v1/recommend")).json(&req).send();
    let a = post().await.unwrap();
    assert_eq!(a.status(), 200);
    assert!(a.headers().contains_key("x-latency-micros"));
    let a = a.bytes().await.unwrap();
    let b = post().await.unwrap().bytes().await.unwrap();
    assert_eq!(a, b);
    let parsed: RecommendResponse = serde_json::from_slice(&a).unwrap();
    assert_eq!(parsed.results.len(), 50);

    let bad = client
        .post(format!("{url}/v1/recommend"))
        .json(&query(&["zzz"]))
        .send()
        .await
        .unwrap();
    assert_eq!(bad.status(), 400);
    let body: serde_json::Value = bad.json().await.unwrap();
    assert_eq!(body["unknownPins"][0], "zzz");

    let malformed = client
        .post(format!("{url}/v1/recommend"))
        .header("content-type", "application/json")
        .body("{\"query\": 3}")
        .send()
        .await
        .unwrap();
    assert_eq!(malformed.status(), 400);
    let _ = stop.send(());
}

/// Pin keys that can start a walk in every given graph.
fn shared_pins(graphs: &[&ServedGraph]) -> Vec<String> {
    (0..400)
        .map(|i| format!("p{i}"))
        .filter(|k| graphs.iter().all(|g| g.pin(k).is_some()))
        .collect()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn hot_swap_under_traffic() {
    let dir = tempfile::tempdir().unwrap();
    let staging = tempfile::tempdir().unwrap();
    write_graph(dir.path(), "0001", 1);
    write_graph(staging.path(), "0002", 2);
    let pins = Arc::new(shared_pins(&[
        &ServedGraph::load(&dir.path().join("0001.pixg")).unwrap(),
        &ServedGraph::load(&staging.path().join("0002.pixg")).unwrap(),
    ]));
    let (url, stop) = start(dir.path()).await;
    let client = reqwest::Client::new();
    let done = Arc::new(AtomicBool::new(false));
    let (ok, failed) = (Arc::new(AtomicU64::new(0)), Arc::new(AtomicU64::new(0)));
    let mut tasks = Vec::new();
    for t in 0..3 {
        let (client, url, done, ok, failed, pins) = (
            client.clone(),
            url.clone(),
            done.clone(),
            ok.clone(),
            failed.clone(),
            pins.clone(),
        );
        tasks.push(tokio::spawn(async move {
            let mut i = 0usize;
            while !done.load(Ordering::Relaxed) {
                let req = RecommendRequest {
                    top_k: Some(20),
                    ..query(&[&pins[(t * 37 + i) % pins.len()]])
                };
                let r = client.post(format!("{url}/v1/recommend")).json(&req).send().await;
                match r {
                    Ok(r) if r.status() == 200 => ok.fetch_add(1, Ordering::Relaxed),
                    _ => failed.fetch_add(1, Ordering::Relaxed),
                };
                i += 1;
            }
        }));
    }
    let start = Instant::now();
    tokio::time::sleep(Duration::from_millis(500)).await;
    // Companion first, then the graph file by rename, as the compiler does.
    std::fs::copy(staging.path().join("0002.ids"), dir.path().join("0002.ids")).unwrap();
    std::fs::copy(staging.path().join("0002.pixg"), dir.path().join("0002.pixg.tmp")).unwrap();
    std::fs::rename(dir.path().join("0002.pixg.tmp"), dir.path().join("0002.pixg")).unwrap();
    let mut swapped = false;
    while start.elapsed() < Duration::from_secs(4) {
        let h: Health = client
            .get(format!("{url}/v1/health"))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        swapped |= h.graph_version == "0002";
        tokio::time::sleep(Duration::from_millis(100)).await;
    }
    done.store(true, Ordering::Relaxed);
    for t in tasks {
        t.await.unwrap();
    }
    assert!(swapped);
    assert_eq!(failed.load(Ordering::Relaxed), 0);
    assert!(ok.load(Ordering::Relaxed) > 10);
    let _ = stop.send(());
}
