// SPDX-License-Identifier: Apache-2.0

use pixie_core::compiler::PruneConfig;
use pixie_core::graph::GraphBuilder;
use pixie_core::{AttributeId, NodeId, WalkConfig};
use pixie_eval::bias::{bias_eval, biased_fraction, BiasConfig};
use pixie_eval::earlystop::{early_stop_eval, EarlyStopConfig};
use pixie_eval::linkpred::{link_prediction_eval, LinkPredConfig};
use pixie_eval::recovery::community_recovery;
use pixie_eval::runtime::{runtime_bench, RuntimeConfig};
use pixie_eval::stability::{stability_counts, stability_eval, StabilityConfig};
use pixie_eval::{generate_synthetic_graph, sample_query_pins, SynthConfig};

fn small_synth(noise: f64) -> SynthConfig {
    SynthConfig {
        communities: 6,
        pins_per_community: 120,
        boards_per_community: 20,
        edges_per_board: 40,
        noise,
        ..SynthConfig::default()
    }
}

#[test]
fn community_recovery_on_default_graph() {
    let synth = generate_synthetic_graph(&SynthConfig::default()).unwrap();
    let c = synth.compile(&PruneConfig::noop()).unwrap();
    let qs = sample_query_pins(&c.graph, 100, 3, |_| true);
    let walk = WalkConfig {
        total_steps: 20_000,
        ..WalkConfig::default()
    };
    let f = community_recovery(&synth, &c.graph, &c.ids, &qs, 20, &walk, 0).unwrap();
    assert!(f >= 0.9, "intra-community fraction {f}");
}

#[test]
fn stability_degenerate_control_and_monotone_in_k() {
    let synth = generate_synthetic_graph(&small_synth(0.05)).unwrap();
    let g = synth.compile(&PruneConfig::noop()).unwrap().graph;
    let q = sample_query_pins(&g, 1, 0, |_| true)[0];
    let cfg = StabilityConfig {
        repeats: 10,
        top: 50,
        thresholds: (1..=10).collect(),
        reuse_seed: true,
        ..StabilityConfig::default()
    };
    let counts = stability_counts(&g, q, 5_000, &cfg, 0).unwrap();
    assert!(counts.iter().all(|&c| c == 50), "{counts:?}");

    let cfg = StabilityConfig {
        reuse_seed: false,
        ..cfg
    };
    let counts = stability_counts(&g, q, 5_000, &cfg, 0).unwrap();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{counts:?}");
    assert!(counts.iter().all(|&c| c <= 50 * 10));
}

#[test]
fn stability_report_shape() {
    let synth = generate_synthetic_graph(&small_synth(0.05)).unwrap();
    let g = synth.compile(&PruneConfig::noop()).unwrap().graph;
    let qs = sample_query_pins(&g, 3, 0, |_| true);
    let cfg = StabilityConfig {
        repeats: 5,
        top: 50,
        thresholds: vec![3, 5],
        steps: vec![1_000, 4_000],
        ..StabilityConfig::default()
    };
    let r = stability_eval(&g, &qs, &cfg).unwrap();
    assert_eq!(r.rows.len(), 4);
    assert!(r.get("all_responses_at_1000").is_some());
    assert!(r.rows.iter().all(|row| row[2] >= 0.0 && row[2] <= 50.0));
}

#[test]
fn early_stop_unreachable_threshold_is_gold() {
    let synth = generate_synthetic_graph(&small_synth(0.05)).unwrap();
    let g = synth.compile(&PruneConfig::noop()).unwrap().graph;
    let qs = sample_query_pins(&g, 5, 0, |_| true);
    let cfg = EarlyStopConfig {
        gold_steps: 10_000,
        top: 100,
        grid: vec![(50, u64::MAX), (50, 1), (50, 2), (50, 4), (50, 8)],
        ..EarlyStopConfig::default()
    };
    let r = early_stop_eval(&g, &qs, &cfg).unwrap();
    let overlap = r.column("mean_overlap").unwrap();
    let steps = r.column("mean_steps").unwrap();
    assert_eq!(overlap[0], 1.0);
    assert!(steps[0] >= 10_000.0 && steps[0] < 10_100.0);
    assert!(overlap.iter().all(|&o| (0.0..=1.0).contains(&o)));
    // More visits required before stopping means more steps and no less overlap.
    for w in 1..4 {
        assert!(overlap[w] <= overlap[w + 1] + 1e-9, "{overlap:?}");
        assert!(steps[w] <= steps[w + 1], "{steps:?}");
    }
}

#[test]
fn beta_one_inside_target_only_component() {
    // Component A (attr 1): pins 0-2, board 0. Component B (attr 2): pins 3-5, board 1.
    let mut b = GraphBuilder::new(6, 2);
    for p in 0..3 {
        b.add_edge(p, 0);
        b.set_pin_attr(p, AttributeId(1));
    }
    for p in 3..6 {
        b.add_edge(p, 1);
        b.set_pin_attr(p, AttributeId(2));
    }
    b.set_board_attr(0, AttributeId(1));
    b.set_board_attr(1, AttributeId(2));
    let g = b.build();
    let cfg = BiasConfig {
        top: 10,
        ..BiasConfig::default()
    };
    assert_eq!(biased_fraction(&g, NodeId(4), 1.0, &cfg, &[1]).unwrap(), 1.0);
}

#[test]
fn unbiased_fraction_matches_basic_walk() {
    let cfg = SynthConfig {
        community_attrs: (0..6).map(|c| 1 + (c % 2)).collect(),
        noise: 0.2,
        ..small_synth(0.2)
    };
    let synth = generate_synthetic_graph(&cfg).unwrap();
    let g = synth.compile(&PruneConfig::noop()).unwrap().graph;
    let qs = sample_query_pins(&g, 30, 0, |p| g.attr(p).unwrap() == AttributeId(1));
    let bc = BiasConfig {
        betas: vec![0.0, 0.9],
        top: 50,
        walk: WalkConfig {
            total_steps: 5_000,
            ..WalkConfig::default()
        },
        ..BiasConfig::default()
    };
    let r = bias_eval(&g, &qs, &bc).unwrap();
    let (base, basic) = (
        r.get("baseline_fraction").unwrap(),
        r.get("basic_walk_fraction").unwrap(),
    );
    assert!((base - basic).abs() < 0.05, "beta 0 {base} vs basic {basic}");
    assert!(r.get("treatment_fraction").unwrap() > base);
    assert!(r.get("p_value").unwrap() < 0.01);
    for row in &r.rows {
        assert!((0.0..=1.0).contains(&row[1]));
    }
}

#[test]
fn link_prediction_is_reproducible_and_in_range() {
    let synth = generate_synthetic_graph(&small_synth(0.3)).unwrap();
    let cfg = LinkPredConfig {
        boards: 40,
        deltas: vec![0.3, 0.6, 1.0],
        walk: WalkConfig {
            total_steps: 3_000,
            ..LinkPredConfig::default().walk
        },
        ..LinkPredConfig::default()
    };
    let a = link_prediction_eval(&synth.raw, &synth.topics, &cfg).unwrap();
    let b = link_prediction_eval(&synth.raw, &synth.topics, &cfg).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.get("edges_monotone"), Some(1.0));
    for row in &a.rows {
        for &m in &row[2..] {
            assert!((0.0..=1.0).contains(&m));
        }
    }
    assert!(a.get("f1_at_delta_1").is_some());
}

#[test]
fn runtime_report_fields() {
    let synth = generate_synthetic_graph(&small_synth(0.05)).unwrap();
    let g = synth.compile(&PruneConfig::noop()).unwrap().graph;
    let cfg = RuntimeConfig {
        steps: vec![1_000, 2_000, 4_000],
        queries_per_point: 5,
        query_sizes: vec![1, 2],
        size_steps: 1_000,
        size_queries: 3,
        ..RuntimeConfig::default()
    };
    let r = runtime_bench(&g, &cfg).unwrap();
    assert_eq!(r.rows.len(), 5);
    let r2 = r.get("r_squared").unwrap();
    assert!((0.0..=1.0).contains(&r2));
    assert!(r.rows.iter().all(|row| row[2] > 0.0));
}

#[test]
fn reports_write_csv_and_json() {
    let synth = generate_synthetic_graph(&small_synth(0.05)).unwrap();
    let g = synth.compile(&PruneConfig::noop()).unwrap().graph;
    let qs = sample_query_pins(&g, 2, 0, |_| true);
    let cfg = EarlyStopConfig {
        gold_steps: 2_000,
        top: 20,
        grid: vec![(10, 2)],
        ..EarlyStopConfig::default()
    };
    let r = early_stop_eval(&g, &qs, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    r.save_csv(dir.path().join("es.csv")).unwrap();
    r.save_json(dir.path().join("es.json")).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("es.csv")).unwrap();
    assert!(csv.starts_with("np,nv,mean_overlap,mean_steps,reduction\n"));
    assert_eq!(csv.lines().count(), 2);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("es.json")).unwrap()).unwrap();
    assert_eq!(json["experiment"], "earlystop");
}

#[test]
fn synthetic_files_compile_like_memory() {
    let synth = generate_synthetic_graph(&small_synth(0.1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (e, t, out) = (
        dir.path().join("e.tsv"),
        dir.path().join("t.tsv"),
        dir.path().join("g.pixg"),
    );
    synth.write_edges(&e).unwrap();
    synth.write_topics(&t).unwrap();
    let report = pixie_core::compiler::compile(&e, &t, &PruneConfig::default(), &out).unwrap();
    let mem = synth.compile(&PruneConfig::default()).unwrap();
    assert_eq!(report, mem.report);
    assert_eq!(std::fs::read(&out).unwrap(), mem.graph.to_bytes());
}
