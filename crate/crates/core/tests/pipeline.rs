use gaac::actor_critic::{NetConfig, RoundConfig};
use gaac::dataset;
use gaac::mlp::Activation;
use gaac::pfm::{PfmConfig, TrainSetting};
use gaac::pipeline::*;

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        rounds: 3,
        episodes: 2,
        eval_episodes: 6,
        round: RoundConfig {
            nets: NetConfig {
                actor_hidden: vec![8, 8],
                critic_hidden: vec![16, 16],
                hidden_activation: Activation::Tanh,
                scale_inputs: true,
            },
            max_steps: 120,
            ..Default::default()
        },
        pfm: PfmConfig {
            hidden: vec![8, 8],
            default_setting: TrainSetting { lr: 1e-3, epochs: 5 },
            ..Default::default()
        },
        ..Default::default()
    };
    cfg.policy.epochs = 20;
    cfg.ga.max_generations = 5;
    cfg
}

#[test]
fn stage1_accounts_for_every_episode() {
    let cfg = small();
    let s1 = stage1_collect(&cfg).unwrap();
    assert_eq!(s1.rounds.len(), 3);
    assert!(s1.rounds.iter().all(|r| r.len() == 2));
    assert_eq!(s1.best.episodes.len(), 3);
    let lengths: usize = s1.rounds.iter().flatten().map(|e| e.len()).sum();
    assert_eq!(s1.d_o.len(), lengths);
    assert_eq!(s1.env_steps, lengths);
    assert_eq!(s1.discarded_steps, 0);
    assert_eq!(s1.rounds_drawn, 3);
    let best: usize = s1.best.episodes.iter().map(|e| e.len()).sum();
    assert_eq!(s1.d1().len(), best);
    for (k, round) in s1.rounds.iter().enumerate() {
        assert!(round.iter().flat_map(|e| &e.samples).all(|s| s.round_id == k + 1));
    }
}

#[test]
fn stage1_is_a_function_of_the_config() {
    let cfg = small();
    let a = stage1_collect(&cfg).unwrap();
    let b = stage1_collect(&cfg).unwrap();
    assert_eq!(a, b);
    let c = stage1_collect(&ExperimentConfig { seed: 7, ..cfg }).unwrap();
    assert_ne!(a.d_o, c.d_o);
}

#[test]
fn mixture_target_keeps_only_matching_rounds() {
    // 120-step episodes never reach the goal, so only failed rounds exist.
    let cfg = ExperimentConfig {
        target_successes: Some(0),
        ..small()
    };
    let s1 = stage1_collect(&cfg).unwrap();
    assert_eq!(s1.successes(), 0);
    let impossible = ExperimentConfig {
        target_successes: Some(1),
        max_rounds: 4,
        ..small()
    };
    assert!(stage1_collect(&impossible).is_err());
}

#[test]
fn single_round_modes_use_one_round_of_all_episodes() {
    let cfg = ExperimentConfig {
        mode: Mode::AcGa,
        ..small()
    };
    let s1 = collect_for(&cfg).unwrap();
    assert_eq!(s1.rounds.len(), 1);
    assert_eq!(s1.rounds[0].len(), cfg.total_episodes());
    assert_eq!(training_data(&cfg, &s1).len(), s1.d_o.len());
}

#[test]
fn stage2_never_lowers_predicted_fitness() {
    let cfg = small();
    let s1 = stage1_collect(&cfg).unwrap();
    let s2 = stage2_optimize(s1.d1(), &cfg).unwrap();
    assert_eq!(s2.subset.len(), dataset::subset_size(cfg.eta, s1.d1().len()));
    assert_eq!(s2.w2.len(), s1.d1().len());
    for &(i, seed_fit, best_fit) in &s2.fitness {
        assert!(best_fit >= seed_fit);
        let recomputed = s2.pfm.predict(&s1.d1()[i].s, &s2.w2[i].theta_bar).unwrap();
        assert_eq!(recomputed, best_fit);
        assert!(s2.bounds.contains(&s2.w2[i].theta_bar));
    }
    let in_subset: std::collections::BTreeSet<usize> = s2.subset.iter().copied().collect();
    for (i, pair) in s2.w2.iter().enumerate() {
        assert_eq!(pair.was_ga_updated, in_subset.contains(&i));
        if !pair.was_ga_updated {
            assert_eq!(pair.theta_bar, s1.d1()[i].theta);
        }
    }
}

#[test]
fn gaac_with_zero_eta_is_ac_beo() {
    let cfg = small();
    let s1 = stage1_collect(&cfg).unwrap();
    let beo = finish_run(&ExperimentConfig { mode: Mode::AcBeo, ..cfg.clone() }, s1.clone()).unwrap();
    let gaac = finish_run(&ExperimentConfig { eta: 0.0, ..cfg }, s1).unwrap();
    assert!(gaac.stage2.is_none());
    assert_eq!(beo.w, gaac.w);
    assert_eq!(beo.eval, gaac.eval);
}

#[test]
fn constant_target_policy_reproduces_the_target() {
    let cfg = ExperimentConfig {
        policy: PolicyTraining {
            lr: 0.05,
            epochs: 300,
            batch_size: 16,
        },
        ..small()
    };
    let target = vec![0.3, 0.4];
    let w: Vec<dataset::OptimizedPair> = (0..200)
        .map(|k| {
            let x = -1.2 + 1.8 * (k as f64 / 199.0);
            let y = 0.07 * ((k * 37 % 200) as f64 / 100.0 - 1.0);
            dataset::OptimizedPair {
                s: vec![x, y],
                theta_bar: target.clone(),
                was_ga_updated: false,
            }
        })
        .collect();
    let (policy, loss) = stage3_train_policy(&w, &cfg).unwrap();
    assert!(loss.last().unwrap() < loss.first().unwrap());
    for s in [[-1.1, -0.06], [-0.5, 0.0], [0.0, 0.03], [0.55, 0.069]] {
        let p = policy.params(&s).unwrap();
        assert!((p.mu[0] - 0.3).abs() < 0.05, "mu {} at {s:?}", p.mu[0]);
        assert!((p.sigma[0] - 0.4).abs() < 0.05, "sigma {} at {s:?}", p.sigma[0]);
    }
}

#[test]
fn stage3_rejects_empty_data() {
    assert!(stage3_train_policy(&[], &small()).is_err());
}

#[test]
fn evaluation_report_statistics() {
    let r = EvaluationReport::from_rewards(vec![1.0, 2.0, 3.0, 6.0], &[true, false, true, true], vec![1, 2, 3, 4]).unwrap();
    assert_eq!(r.mean, 3.0);
    assert!((r.std - 3.5f64.sqrt()).abs() < 1e-12);
    assert_eq!(r.failures, 1);
    assert!(EvaluationReport::from_rewards(vec![], &[], vec![]).is_err());
}

#[test]
fn four_modes_report_comparably() {
    let cfg = small();
    let runs = ablation(&cfg).unwrap();
    assert_eq!(runs.iter().map(|r| r.config.mode).collect::<Vec<_>>(), Mode::ALL.to_vec());
    for run in &runs {
        assert_eq!(run.eval.rewards.len(), cfg.eval_episodes);
        let mean = run.eval.rewards.iter().sum::<f64>() / cfg.eval_episodes as f64;
        assert!((run.eval.mean - mean).abs() < 1e-12);
        assert_eq!(run.eval.failures, run.eval.steps.iter().filter(|&&s| s == cfg.round.max_steps).count());
    }
    // AC_BEO and GAAC share stage 1, AC and AC_GA share their round.
    assert_eq!(runs[2].stage1, runs[3].stage1);
    assert_eq!(runs[0].stage1, runs[1].stage1);
    assert!(runs[1].stage2.is_some() && runs[3].stage2.is_some());
}

#[test]
fn eta_sweep_shape_and_reuse() {
    let cfg = small();
    let etas = [0.0, 0.15, 0.25, 0.5];
    let res = eta_sweep(&cfg, &etas, 2).unwrap();
    assert_eq!(res.len(), 8);
    for rep in 0..2 {
        let seeds: Vec<u64> = res.iter().filter(|r| r.repeat == rep).map(|r| r.seed).collect();
        assert_eq!(seeds.len(), 4);
        assert!(seeds.iter().all(|&s| s == seeds[0]));
    }
    let zero = res.iter().find(|r| r.eta == 0.0 && r.repeat == 0).unwrap();
    let beo = run_mode(&ExperimentConfig {
        mode: Mode::AcBeo,
        seed: zero.seed,
        ..cfg.clone()
    })
    .unwrap();
    assert_eq!(zero.eval, beo.eval);
    assert!(eta_sweep(&cfg, &[], 1).is_err());
}

#[test]
fn ac_curve_resamples_stuck_runs() {
    let round = RoundConfig {
        max_steps: 20,
        ..small().round
    };
    // Twenty steps can never reach the goal: every attempt is stuck.
    assert!(ac_curve(&round, 10, 1, 5, 3).is_err());
    let c = ac_curve(&round, 4, 1, 5, 3).unwrap();
    assert_eq!(c.rewards.len(), 4);
    assert_eq!(c.resampled, 0);
    assert!((c.trailing_mean(2) - (c.rewards[2] + c.rewards[3]) / 2.0).abs() < 1e-12);
}

#[test]
fn derived_seeds_are_distinct() {
    let mut seen = std::collections::BTreeSet::new();
    for stream in 0..8 {
        for index in 0..100 {
            assert!(seen.insert(derive_seed(42, stream, index)));
        }
    }
    assert_eq!(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        ExperimentConfig { rounds: 0, ..small() },
        ExperimentConfig { eta: 1.5, ..small() },
        ExperimentConfig { eval_episodes: 0, ..small() },
        ExperimentConfig { target_successes: Some(9), ..small() },
    ] {
        assert!(cfg.validate().is_err());
        assert!(stage1_collect(&cfg).is_err());
    }
}
