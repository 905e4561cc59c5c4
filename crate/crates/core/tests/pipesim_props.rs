mod common;

use common::{bits, engine_m1, port_violations, random_setup, run, samples};
use sparsepipe::clashfree::CfType;
use sparsepipe::datasets::synthetic_dataset;
use sparsepipe::engine::{evaluate, init_model, OptimizerKind};
use sparsepipe::pipesim::*;
use sparsepipe::topology::NetworkConfig;
use sparsepipe::TrainConfig;

#[test]
fn random_configs_never_clash() {
    for seed in 0..500u64 {
        let mode = if seed % 3 == 0 {
            Mode::SingleInput
        } else {
            Mode::Pipelined
        };
        let (mut cfg, model) = random_setup(seed, mode);
        cfg.record_accesses = true;
        let width = cfg.network().layer_sizes()[0];
        let classes = *cfg.network().layer_sizes().last().unwrap();
        let n = 1 + (seed as usize % 5);
        let (xs, ys) = samples(n, width, classes, seed);
        let out = run(&model, &cfg, &TrainConfig::default(), &xs, &ys);
        assert!(!out.trace.accesses.is_empty());
        let bad = port_violations(&out.trace);
        assert!(
            bad.is_empty(),
            "seed {seed}: {:?}",
            &bad[..bad.len().min(3)]
        );
        assert!(out.model.is_finite());
    }
}

#[test]
fn single_input_mode_is_the_engine_bitwise() {
    for seed in 0..20u64 {
        let (cfg, model) = random_setup(1000 + seed, Mode::SingleInput);
        let l = cfg.num_junctions();
        let train = TrainConfig {
            learning_rate: 0.03,
            optimizer: if seed % 2 == 0 {
                OptimizerKind::Sgd
            } else {
                OptimizerKind::adam_default()
            },
            l2: 1e-3,
            l1: vec![2e-4; l],
            ..TrainConfig::default()
        };
        let width = cfg.network().layer_sizes()[0];
        let classes = *cfg.network().layer_sizes().last().unwrap();
        let (xs, ys) = samples(6, width, classes, seed);
        let out = run(&model, &cfg, &train, &xs, &ys);
        assert_eq!(
            bits(&out.model),
            bits(&engine_m1(&model, &train, &xs, &ys)),
            "config {seed}"
        );
        for (x, o) in xs.iter().zip(&out.outputs).take(1) {
            assert_eq!(model.forward(x).unwrap().output(), o.as_slice());
        }
    }
}

#[test]
fn bank_queues_are_exactly_deep_enough() {
    for seed in 0..40u64 {
        let (cfg, model) = random_setup(2000 + seed, Mode::Pipelined);
        let l = cfg.num_junctions();
        let width = cfg.network().layer_sizes()[0];
        let classes = *cfg.network().layer_sizes().last().unwrap();
        let (xs, ys) = samples(2 * l + 3, width, classes, seed);
        let out = run(&model, &cfg, &TrainConfig::default(), &xs, &ys);
        for i in 0..l {
            assert_eq!(out.trace.max_live[&(BankKind::Act, i)], 2 * (l - i) + 1);
        }
        for i in 1..l {
            assert_eq!(
                out.trace.max_live[&(BankKind::ActDeriv, i)],
                2 * (l - i) + 1
            );
        }
        for i in 1..=l {
            assert_eq!(out.trace.max_live[&(BankKind::Delta, i)], 2);
        }
    }
}

#[test]
fn pipelined_training_learns_a_separable_task() {
    let train_set = synthetic_dataset(400, 8, 2, 6.0, 11).unwrap();
    let test = synthetic_dataset(1000, 8, 2, 6.0, 12).unwrap();
    let net = NetworkConfig::new(vec![8, 8, 2], vec![4, 2])
        .unwrap()
        .with_parallelism(vec![4, 2])
        .unwrap();
    let (cfg, pats) =
        PipelineConfig::generate(net, CfType::Type2, true, vec![], Mode::Pipelined, 5).unwrap();
    let mut model = init_model(pats, vec![8, 8, 2], 5, 0.1).unwrap();
    let train = TrainConfig {
        learning_rate: 0.02,
        optimizer: OptimizerKind::Sgd,
        ..TrainConfig::default()
    };
    let xs: Vec<&[f64]> = (0..train_set.len()).map(|i| train_set.sample(i)).collect();
    let single = {
        let (scfg, _) = PipelineConfig::generate(
            cfg.network().clone(),
            CfType::Type2,
            true,
            vec![],
            Mode::SingleInput,
            5,
        )
        .unwrap();
        simulate(&model, &scfg, &train, &xs, train_set.labels())
            .unwrap()
            .model
    };
    for epoch in 0..5 {
        model = simulate(&model, &cfg, &train, &xs, train_set.labels())
            .unwrap()
            .model;
        if epoch == 0 {
            // same data, same start: only the stale reads differ
            assert_ne!(bits(&model), bits(&single));
        }
    }
    let acc = evaluate(&model, &test, 1).unwrap();
    assert!(acc >= 0.99, "pipelined accuracy {acc}");
}
