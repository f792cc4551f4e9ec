mod common;

use dvdn::algo::{
    gradient_tracking_update, run_dvdn_gt_round, run_dvdn_round, run_iql_round, AgentLearnerState, RoundConfig,
    StepRule,
};
use dvdn::comms::{consensus_step, metropolis_weights, CommGraph, GraphSampler};
use dvdn::harness::config::parse_pairs;
use dvdn::harness::{load_config, train, train_seed, RawConfig};
use dvdn::neural::{forward, init_params, NetworkSpec, ParamVector};
use dvdn::qcore::{
    greedy_action, sample_synchronized_batch, td_vector, AgentBatch, Episode, EpsilonSchedule, IndexStream, ReplayBuffer,
    RewardStandardizer, Transition,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn sampled_graph(seed: u64, n: usize, p: f64) -> CommGraph {
    GraphSampler::new(ChaCha8Rng::seed_from_u64(seed), n, p).unwrap().sample()
}

fn bits(p: &ParamVector) -> Vec<u64> {
    p.iter().map(|x| x.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn metropolis_is_symmetric_and_stochastic(seed in any::<u64>(), n in 1usize..10, p in 0.0f64..1.0) {
        let g = sampled_graph(seed, n, p);
        prop_assert!(bfs_connected(n, g.edges()));
        let w = metropolis_weights(&g);
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                prop_assert_eq!(w.get(i, j).to_bits(), w.get(j, i).to_bits());
                prop_assert!(w.get(i, j) >= 0.0);
                prop_assert_eq!(w.get(i, j) > 0.0, i == j || g.has_edge(i, j));
                row += w.get(i, j);
            }
            prop_assert!((row - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn consensus_conserves_and_contracts(seed in any::<u64>(), n in 1usize..9, p in 0.0f64..1.0) {
        let g = sampled_graph(seed, n, p);
        let w = metropolis_weights(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let x = random_vec(&mut rng, n, 100.0);
        let y = consensus_step(&w, &x).unwrap();
        let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        prop_assert!((y.iter().sum::<f64>() - x.iter().sum::<f64>()).abs() <= 1e-10);
        prop_assert!(y.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
        if n == 1 {
            prop_assert_eq!(y[0].to_bits(), x[0].to_bits());
        }
    }

    #[test]
    fn complete_graph_weights_are_exactly_one_over_n(n in 1usize..12) {
        let w = metropolis_weights(&CommGraph::complete(n));
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(w.get(i, j), 1.0 / n as f64);
            }
        }
    }

    #[test]
    fn td_rows_follow_batch_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spec(&mut rng);
        let params = random_vec(&mut rng, spec.param_count(), 1.0);
        let target = random_vec(&mut rng, spec.param_count(), 1.0);
        let tr: Vec<Transition> = (0..6)
            .map(|_| Transition {
                obs: random_vec(&mut rng, spec.input_dim, 1.0),
                action: rng.random_range(0..spec.output_dim),
                reward: rng.random_range(-1.0..1.0),
                next_obs: random_vec(&mut rng, spec.input_dim, 1.0),
                done: rng.random_bool(0.5),
            })
            .collect();
        let rev: Vec<Transition> = tr.iter().rev().cloned().collect();
        let a = td_vector(&spec, &params, &target, &AgentBatch::from_transitions(spec.input_dim, &tr).unwrap(), 0.9).unwrap();
        let mut b = td_vector(&spec, &params, &target, &AgentBatch::from_transitions(spec.input_dim, &rev).unwrap(), 0.9).unwrap();
        b.reverse();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn epsilon_decays_linearly_then_holds(start in 0.5f64..1.0, end in 0.0f64..0.5, anneal in 1u64..10_000, s in 0u64..20_000) {
        let e = EpsilonSchedule { start, end, anneal_steps: anneal, eval_epsilon: 0.0 };
        prop_assert_eq!(e.value(0), start);
        prop_assert!(e.value(s) >= e.value(s + 1));
        prop_assert!(e.value(s) >= end && e.value(s) <= start);
        if s >= anneal {
            prop_assert_eq!(e.value(s), end);
        }
    }

    #[test]
    fn standardizer_matches_two_pass_statistics(rewards in prop::collection::vec(-50.0f64..50.0, 1..200), probe in -50.0f64..50.0) {
        let mut s = RewardStandardizer::new(true);
        for &r in &rewards {
            s.observe(r);
        }
        let n = rewards.len() as f64;
        let mean = rewards.iter().sum::<f64>() / n;
        let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        prop_assert!((s.mean() - mean).abs() <= 1e-9);
        prop_assert!((s.variance() - var).abs() <= 1e-7 * var.max(1.0));
        let expect = (probe - mean) / var.sqrt().max(1e-6);
        prop_assert!((s.standardize(probe) - expect).abs() <= 1e-6 * expect.abs().max(1.0));
        prop_assert_eq!(RewardStandardizer::new(false).standardize(probe), probe);
    }

    #[test]
    fn synchronized_sampling_aligns_agents(seed in any::<u64>(), n in 1usize..5, episodes in 1usize..30, cap in 1usize..20, batch in 1usize..6) {
        let mut buffers: Vec<ReplayBuffer> =
            (0..n).map(|_| ReplayBuffer::new(cap, IndexStream::new(ChaCha8Rng::seed_from_u64(seed)))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        for id in 0..episodes as u64 {
            let len = rng.random_range(1..5);
            for (agent, b) in buffers.iter_mut().enumerate() {
                let transitions = (0..len)
                    .map(|t| Transition {
                        obs: vec![agent as f64],
                        action: 0,
                        reward: id as f64 + t as f64 / 10.0,
                        next_obs: vec![agent as f64],
                        done: t + 1 == len,
                    })
                    .collect();
                b.push(Episode { id, transitions });
            }
        }
        match sample_synchronized_batch(&mut buffers, batch).unwrap() {
            None => prop_assert!(episodes.min(cap) < batch),
            Some(s) => {
                prop_assert_eq!(s.batches.len(), n);
                for b in &s.batches {
                    prop_assert_eq!(&b.rewards, &s.batches[0].rewards);
                    prop_assert_eq!(b.len(), s.slots.len());
                }
                for (k, &(id, t)) in s.slots.iter().enumerate() {
                    prop_assert_eq!(s.batches[0].rewards[k], id as f64 + t as f64 / 10.0);
                }
                prop_assert!(buffers.iter().all(|b| b.stream_position() == batch as u64));
            }
        }
    }

    #[test]
    fn tracking_sum_follows_gradient_sum(seed in any::<u64>(), n in 1usize..7, rounds in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = NetworkSpec::new(2, vec![3], 2).unwrap();
        let dim = spec.param_count();
        let mut states: Vec<AgentLearnerState> = (0..n)
            .map(|_| AgentLearnerState::new(spec.clone(), ParamVector::from(random_vec(&mut rng, dim, 1.0)), 1e-2))
            .collect();
        let mut sampler = GraphSampler::new(ChaCha8Rng::seed_from_u64(seed ^ 3), n, 0.4).unwrap();
        for _ in 0..rounds {
            let grads: Vec<ParamVector> = (0..n).map(|_| ParamVector::from(random_vec(&mut rng, dim, 3.0))).collect();
            gradient_tracking_update(&metropolis_weights(&sampler.sample()), &mut states, &grads, StepRule::Adam, None).unwrap();
            for k in 0..dim {
                let z: f64 = states.iter().map(|s| s.tracker[k]).sum();
                let g: f64 = grads.iter().map(|g| g[k]).sum();
                prop_assert!((z - g).abs() <= 1e-9);
            }
        }
    }
}

fn single_agent(seed: u64) -> (AgentLearnerState, Vec<AgentBatch>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = NetworkSpec::new(1, vec![8], 3).unwrap();
    let state = AgentLearnerState::new(spec.clone(), init_params(&spec, &mut rng), 1e-2);
    let batches = (0..40).map(|_| climb_batches(&mut rng, 12).swap_remove(0)).collect();
    (state, batches)
}

#[test]
fn single_agent_dvdn_and_dvdn_gt_reduce_to_iql() {
    let cfg = RoundConfig::default();
    let graph = CommGraph::complete(1);
    for seed in 0..5 {
        let (s, batches) = single_agent(seed);
        let (mut iql, mut dvdn, mut gt) = (vec![s.clone()], vec![s.clone()], vec![s]);
        for b in &batches {
            let b = std::slice::from_ref(b);
            run_iql_round(&mut iql, b, &cfg).unwrap();
            run_dvdn_round(&mut dvdn, b, &graph, &cfg).unwrap();
            run_dvdn_gt_round(&mut gt, b, &graph, &cfg, true).unwrap();
            assert_eq!(bits(&iql[0].params), bits(&dvdn[0].params));
            assert_eq!(bits(&iql[0].params), bits(&gt[0].params));
            assert_eq!(bits(&iql[0].target_params), bits(&gt[0].target_params));
        }
    }
}

fn small_climb(overrides: &[(&str, &str)]) -> dvdn::harness::ExperimentConfig {
    let mut ov: Vec<(String, String)> = vec![
        ("total_steps".into(), "600".into()),
        ("eval_interval".into(), "200".into()),
        ("eval_episodes".into(), "5".into()),
        ("seeds".into(), "3".into()),
    ];
    ov.extend(overrides.iter().map(|(k, v)| (k.to_string(), v.to_string())));
    load_config(&config_path("climb_dvdn.cfg"), &ov).unwrap().1
}

#[test]
fn training_is_deterministic() {
    for algo in ["IQL", "VDN", "VDN_PS", "DVDN", "DVDN-GT", "GT"] {
        let cfg = small_climb(&[("algorithm", algo)]);
        let a = train_seed(&cfg, 3).unwrap();
        let b = train_seed(&cfg, 3).unwrap();
        assert_eq!(a.checkpoints, b.checkpoints, "{algo}");
        for (x, y) in a.learners.iter().zip(&b.learners) {
            assert_eq!(bits(&x.params), bits(&y.params), "{algo}");
        }
    }
}

#[test]
fn evaluation_leaves_learning_untouched() {
    let sparse = train_seed(&small_climb(&[("eval_interval", "600")]), 3).unwrap();
    let dense = train_seed(&small_climb(&[("eval_interval", "50")]), 3).unwrap();
    assert_eq!(sparse.checkpoints.len(), 2);
    assert_eq!(dense.checkpoints.len(), 13);
    for (x, y) in sparse.learners.iter().zip(&dense.learners) {
        assert_eq!(bits(&x.params), bits(&y.params));
        assert_eq!(x.updates, y.updates);
    }
}

#[test]
fn checkpoint_count_is_steps_over_interval_plus_one() {
    for (steps, interval) in [(600u64, 200u64), (600, 250), (100, 100), (50, 200)] {
        let cfg = small_climb(&[("total_steps", &steps.to_string()), ("eval_interval", &interval.to_string())]);
        let r = train_seed(&cfg, 3).unwrap();
        assert_eq!(r.checkpoints.len() as u64, steps / interval + 1, "{steps}/{interval}");
        let at: Vec<u64> = r.checkpoints.iter().map(|c| c.step).collect();
        let expect: Vec<u64> = (0..=steps / interval).map(|k| k * interval).collect();
        assert_eq!(at, expect);
        assert!(r.checkpoints.iter().all(|c| c.returns.len() == 5));
    }
}

#[test]
fn resolved_config_round_trips_through_text() {
    for file in ["climb_dvdn.cfg", "foraging_dvdn.cfg"] {
        let (raw, cfg) = load_config(&config_path(file), &[("train.grad_clip".into(), "none".into())]).unwrap();
        let again = RawConfig::resolve(&parse_pairs(&raw.to_text()).unwrap(), &[]).unwrap();
        assert_eq!(again, raw);
        assert_eq!(again.build().unwrap(), cfg);
    }
}

#[test]
fn complete_graph_dvdn_acts_like_vdn_on_climb() {
    let (mut agree, mut total) = (0, 0);
    for steps in ["4000", "10000"] {
        let base = [("total_steps", steps), ("eval_interval", steps), ("graph.mode", "complete")];
        let vdn = small_climb(&[base[0], base[1], base[2], ("algorithm", "VDN")]);
        let dvdn = small_climb(&[base[0], base[1], base[2], ("algorithm", "DVDN")]);
        for seed in 0..5 {
            let a = train_seed(&vdn, seed).unwrap();
            let b = train_seed(&dvdn, seed).unwrap();
            for (x, y) in a.learners.iter().zip(&b.learners) {
                let greedy = |s: &AgentLearnerState| {
                    greedy_action(&forward(&s.spec, s.params.as_slice(), &[1.0]).unwrap())
                };
                total += 1;
                agree += usize::from(greedy(x) == greedy(y));
            }
        }
    }
    assert!(agree as f64 >= 0.99 * total as f64, "{agree}/{total}");
}

#[test]
fn zero_steps_give_empty_metrics() {
    let cfg = small_climb(&[("total_steps", "0")]);
    let run = train(&cfg, 1).unwrap();
    assert!(run.records.is_empty());
    assert!(run.seeds.iter().all(|s| s.checkpoints.is_empty()));
}
