use hetraf::harness::{
    compare_engines, run_experiment, run_on_graph, write_reports, CacheConfig, ExperimentConfig, GraphSource,
    Partitioner, RandomGraphLimits, SyntheticSpec, EQUIVALENCE_TOLERANCE, BUNDLED_SPECS,
};
use hetraf::harness::random_spec;
use hetraf::raf_exec::Engine;

fn small(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        name: format!("{name}-small"),
        graph: GraphSource::Bundled { name: name.into() },
        fanouts: vec![5, 4],
        hidden: 8,
        batch_size: 64,
        max_batches: Some(2),
        ..Default::default()
    }
}

#[test]
fn config_json_round_trips() {
    let mut cfg = small("mag-mini");
    cfg.cache = Some(CacheConfig::default());
    cfg.graph = GraphSource::Synthetic {
        spec: random_spec(4, RandomGraphLimits::default()),
    };
    let json = cfg.to_json().unwrap();
    let back = ExperimentConfig::from_json(&json).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.to_json().unwrap(), json);
}

#[test]
fn partial_config_takes_defaults() {
    let cfg = ExperimentConfig::from_json(r#"{"parts": 3, "fanouts": [10]}"#).unwrap();
    assert_eq!(cfg.parts, 3);
    assert_eq!(cfg.k(), 1);
    assert_eq!(cfg.batch_size, ExperimentConfig::default().batch_size);
}

#[test]
fn mismatched_engine_and_partitioner_are_rejected() {
    let bad = [
        (Engine::Raf, Partitioner::RandomNode),
        (Engine::Vanilla, Partitioner::Meta),
        (Engine::Vanilla, Partitioner::RandomRelation),
    ];
    for (engine, partitioner) in bad {
        let cfg = ExperimentConfig {
            engine,
            partitioner,
            ..small("mag-mini")
        };
        assert!(cfg.validate().is_err());
        assert!(run_experiment(&cfg).is_err());
    }
    let cfg = ExperimentConfig {
        elem_width: 3,
        ..small("mag-mini")
    };
    assert!(cfg.validate().is_err());
}

#[test]
fn single_worker_moves_no_bytes() {
    let cfg = ExperimentConfig {
        parts: 1,
        ..small("mag-mini")
    };
    let s = run_experiment(&cfg).unwrap();
    assert_eq!(s.total_cross_bytes(), 0);
    assert!(s.verdicts.passed);
}

#[test]
fn meta_plan_on_mag_mini_confines_boundary_to_papers() {
    let s = run_experiment(&small("mag-mini")).unwrap();
    assert_eq!(s.plan.boundary_types, vec!["paper".to_string()]);
    assert_eq!(s.verdicts.confinement, Some(true));
    assert!(s.verdicts.passed);
}

#[test]
fn equivalence_field_is_within_tolerance() {
    for engine in [Engine::Raf, Engine::Vanilla] {
        let cfg = ExperimentConfig {
            engine,
            partitioner: if engine == Engine::Raf { Partitioner::Meta } else { Partitioner::RandomNode },
            check_equivalence: true,
            ..small("mag-mini")
        };
        let s = run_experiment(&cfg).unwrap();
        let eq = s.equivalence.unwrap();
        assert!(eq.max_diff() <= EQUIVALENCE_TOLERANCE, "{eq:?}");
        assert_eq!(s.verdicts.equivalence, Some(true));
    }
}

#[test]
fn identical_configs_give_identical_stats() {
    let mut cfg = small("donor-mini");
    cfg.cache = Some(CacheConfig {
        budget_bytes: 64 << 10,
        ..Default::default()
    });
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.digest().unwrap(), b.digest().unwrap());
    cfg.seed += 1;
    assert_ne!(run_experiment(&cfg).unwrap().digest().unwrap(), a.digest().unwrap());
}

#[test]
fn reports_are_written() {
    let s = run_experiment(&small("igb-mini")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (json, csv) = write_reports(&s, dir.path()).unwrap();
    let back: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(back["schema_version"], 1);
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("name,graph,engine"));
}

#[test]
fn engines_order_by_bytes_on_mag_mini() {
    let c = compare_engines(&ExperimentConfig {
        max_batches: Some(2),
        ..Default::default()
    })
    .unwrap();
    assert!(c.monotone, "{:?}", c.rows);
    assert_eq!(c.rows.len(), 3);
    assert!(c.rows.iter().all(|r| r.per_batch.len() == 2));
}

#[test]
fn one_worker_one_hop_is_degenerate() {
    let c = compare_engines(&ExperimentConfig {
        fanouts: vec![1],
        parts: 1,
        ..small("mag-mini")
    })
    .unwrap();
    assert!(c.rows.iter().all(|r| r.total == 0));
    assert!(c.monotone);
}

#[test]
fn partition_aware_cache_never_loses_to_whole_graph_cache() {
    for name in BUNDLED_SPECS {
        let cfg = ExperimentConfig {
            cache: Some(CacheConfig {
                budget_bytes: 32 << 10,
                ..Default::default()
            }),
            ..small(name)
        };
        let s = run_experiment(&cfg).unwrap();
        for w in &s.cache.unwrap().workers {
            for t in &w.stats.types {
                let whole = w.whole_graph.types.iter().find(|x| x.ntype == t.ntype).unwrap();
                assert!(t.hit_rate >= whole.hit_rate, "{name} worker {} type {:?}", w.worker, t.ntype);
            }
        }
    }
}

#[test]
fn synthetic_and_file_sources_agree() {
    let spec: SyntheticSpec = random_spec(8, RandomGraphLimits::default());
    let g = hetraf::harness::gen_synthetic(&spec, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.hgc");
    hetraf::hetgraph::save_graph(&path, &g, None).unwrap();
    let base = ExperimentConfig {
        fanouts: vec![3, 3],
        hidden: 4,
        batch_size: 8,
        max_batches: Some(2),
        ..Default::default()
    };
    let from_spec = run_experiment(&ExperimentConfig {
        graph: GraphSource::Synthetic { spec },
        ..base.clone()
    })
    .unwrap();
    let from_file = run_on_graph(
        &ExperimentConfig {
            graph: GraphSource::File { path: path.clone() },
            ..base.clone()
        },
        &hetraf::hetgraph::load_graph(&path).unwrap().0,
    )
    .unwrap();
    assert_eq!(from_spec.batches, from_file.batches);
}
