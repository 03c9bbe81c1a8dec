use std::sync::OnceLock;

use proptest::prelude::*;
use rand::SeedableRng;

use webrl_core::critic::{advantages_from_values, critic_loss, CriticParams, ValueSample};
use webrl_core::curriculum::{evolve, mutate, MutationKind, MutationWeights};
use webrl_core::learner::{webrl_loss, ItemSource, UpdateBatch, UpdateItem};
use webrl_core::model::{Decision, Featurizer, PolicyParams};
use webrl_core::orm::{judge_features, OrmParams};
use webrl_core::replay::{draw_capped, in_band, ReplayBuffer, DEFAULT_BAND, REPLAY_RATIO};
use webrl_core::rng::{stream, StreamRng};
use webrl_core::rollout::{rollout, Sampling};
use webrl_core::synthweb::{
    feasible_actions, ground_truth_reward, oracle_solve, reset, step, Origin, RewardSource, SynthWeb, TaskInstance,
};

fn web() -> &'static SynthWeb {
    static WEB: OnceLock<SynthWeb> = OnceLock::new();
    WEB.get_or_init(|| SynthWeb::default_site(11))
}

fn instance(template: usize, seed: u64) -> TaskInstance {
    let w = web();
    let t = &w.templates.templates[template % w.templates.len()];
    let mut rng = stream(seed, &[]);
    t.instantiate(&w.graph, t.sample_params(&mut rng), Origin::Seed)
}

fn sparse_features(dim: u16) -> impl Strategy<Value = Vec<(u16, f64)>> {
    prop::collection::vec((0..dim, -3.0f64..3.0), 0..12)
}

fn decision(slots: u16, dim: u16) -> impl Strategy<Value = Decision> {
    (sparse_features(dim), prop::collection::btree_set(0..slots, 1..6usize)).prop_flat_map(|(features, set)| {
        let slots: Vec<u16> = set.into_iter().collect();
        let n = slots.len();
        (Just(features), Just(slots), 0..n).prop_map(|(features, slots, chosen)| Decision {
            features,
            slots,
            chosen,
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn critic_value_is_a_probability(
        weights in prop::collection::vec(-50.0f64..50.0, 16),
        bias in -50.0f64..50.0,
        x in sparse_features(16),
    ) {
        let c = CriticParams { weights, bias, version: 0 };
        let v = c.value_of(&x);
        prop_assert!(v >= 0.0 && v <= 1.0);
        let loss = critic_loss(&c, &[ValueSample { features: x, outcome: 1 }]);
        prop_assert!(loss.is_finite() && loss >= 0.0);
    }

    #[test]
    fn advantage_endpoints(
        values in prop::collection::vec(0.0f64..1.0, 1..16),
        reward in 0u8..2,
        gamma in 0.05f64..1.0,
    ) {
        let r = f64::from(reward);
        let n = values.len();
        let td = advantages_from_values(&values, r, 1.0, gamma);
        let mc = advantages_from_values(&values, r, 0.0, gamma);
        for t in 0..n - 1 {
            prop_assert!((td[t] - (gamma * values[t + 1] - values[t])).abs() <= 1e-12);
            let expect = gamma.powi((n - 1 - t) as i32) * r - values[t];
            prop_assert!((mc[t] - expect).abs() <= 1e-12);
        }
        // The last step ignores lambda.
        for lambda in [0.0, 0.3, 1.0] {
            let a = advantages_from_values(&values, r, lambda, gamma);
            prop_assert_eq!(a[n - 1], r - values[n - 1]);
        }
    }

    #[test]
    fn advantage_is_linear_in_lambda(
        values in prop::collection::vec(0.0f64..1.0, 2..12),
        lambda in 0.0f64..1.0,
    ) {
        let a0 = advantages_from_values(&values, 1.0, 0.0, 0.9);
        let a1 = advantages_from_values(&values, 1.0, 1.0, 0.9);
        let a = advantages_from_values(&values, 1.0, lambda, 0.9);
        for t in 0..values.len() {
            prop_assert!((a[t] - (lambda * a1[t] + (1.0 - lambda) * a0[t])).abs() <= 1e-12);
        }
    }

    #[test]
    fn band_is_the_probability_window(p in 1e-6f64..1.0) {
        prop_assume!((p - 0.95).abs() > 1e-12 && (p - 0.5).abs() > 1e-12);
        let inside = in_band(1.0 / p, DEFAULT_BAND.0, DEFAULT_BAND.1);
        prop_assert_eq!(inside, (0.5..=0.95).contains(&p));
    }

    #[test]
    fn capped_draw_is_an_ordered_subset(n in 0usize..300, fresh in 0usize..100, seed in any::<u64>()) {
        let items: Vec<usize> = (0..n).collect();
        let mut rng = StreamRng::seed_from_u64(seed);
        let drawn = draw_capped(&items, fresh, &mut rng);
        prop_assert_eq!(drawn.len(), n.min(REPLAY_RATIO * fresh));
        prop_assert!(drawn.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn probabilities_normalize(d in decision(8, 32), temperature in 0.1f64..5.0, seed in any::<u64>()) {
        let mut rng = stream(seed, &[]);
        let policy = PolicyParams::random(8, 32, 1.0, &mut rng);
        let probs = policy.probs(&d, temperature).unwrap();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(probs.iter().all(|&p| p > 0.0 && p <= 1.0));
        let lp = policy.log_prob_of(&d).unwrap();
        prop_assert!(lp <= 0.0);
    }

    #[test]
    fn webrl_loss_vanishes_at_the_target_ratio(
        ds in prop::collection::vec(decision(8, 32), 1..8),
        beta in 0.01f64..5.0,
        offsets in prop::collection::vec(-2.0f64..2.0, 8),
        seed in any::<u64>(),
    ) {
        let mut rng = stream(seed, &[]);
        let policy = PolicyParams::random(8, 32, 0.5, &mut rng);
        let items: Vec<UpdateItem> = ds
            .into_iter()
            .zip(&offsets)
            .map(|(decision, &off)| {
                let lp = policy.log_prob_of(&decision).unwrap();
                // advantage chosen so that beta * (lp - ref) == advantage
                UpdateItem { advantage: beta * off, ref_log_prob: lp - off, decision, source: ItemSource::Rollout }
            })
            .collect();
        let batch = UpdateBatch { items, beta };
        prop_assert!(webrl_loss(&policy, &batch).unwrap() < 1e-20);
    }

    #[test]
    fn orm_threshold(weights in prop::collection::vec(-5.0f64..5.0, 4), bias in -5.0f64..5.0, x in prop::collection::vec(-1.0f64..1.0, 4)) {
        let params = OrmParams { weights, bias };
        let s = params.score(&x);
        prop_assert_eq!(judge_features(&params, &x), u8::from(s > 0.5));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn buffer_default_mode_is_success_only_and_bounded(
        rewards in prop::collection::vec(0u8..2, 1..40),
        capacity in 1usize..12,
        seed in any::<u64>(),
    ) {
        let w = web();
        let policy = PolicyParams::zeros(64, 256);
        let mut rng = stream(seed, &[]);
        let mut buffer = ReplayBuffer::new(capacity);
        let mut stored = Vec::new();
        for (i, &r) in rewards.iter().enumerate() {
            let inst = instance(i, seed ^ i as u64);
            let ep = rollout(w, &policy, &inst, Sampling::Sample { temperature: 1.0 }, &mut rng).unwrap();
            let traj = ep.label(r, RewardSource::Orm);
            let kept = buffer.insert(traj.clone(), i as u32).unwrap();
            prop_assert_eq!(kept, r == 1);
            if kept {
                stored.push(traj);
            }
            prop_assert!(buffer.len() <= capacity);
            prop_assert!(buffer.iter().all(|e| e.trajectory.reward == 1));
        }
        // FIFO: the newest `capacity` successes survive, oldest first.
        let tail = &stored[stored.len().saturating_sub(capacity)..];
        let kept: Vec<_> = buffer.iter().map(|e| e.trajectory.clone()).collect();
        prop_assert_eq!(kept.as_slice(), tail);
    }

    #[test]
    fn sampled_rollouts_respect_the_horizon(template in 0usize..64, seed in any::<u64>(), temperature in 0.2f64..3.0) {
        let w = web();
        let mut rng = stream(seed, &[1]);
        let policy = PolicyParams::random(64, 256, 0.5, &mut rng);
        let inst = instance(template, seed);
        let ep = rollout(w, &policy, &inst, Sampling::Sample { temperature }, &mut rng).unwrap();
        prop_assert!(ep.terminal);
        prop_assert!(!ep.steps.is_empty() && ep.steps.len() <= w.horizon);
        for s in &ep.steps {
            prop_assert!(feasible_actions(w, &s.state).contains(&s.action));
        }
        let r = ground_truth_reward(w, &ep.steps, &inst, ep.terminal).unwrap();
        prop_assert!(r <= 1);
        prop_assert!(r == 0 || ep.steps.last().unwrap().action.is_exit());
    }

    #[test]
    fn oracle_plans_are_feasible_and_succeed(template in 0usize..64, seed in any::<u64>()) {
        let w = web();
        let inst = instance(template, seed);
        if let Some(plan) = oracle_solve(w, &inst) {
            prop_assert!(plan.len() <= w.horizon);
            let mut state = reset(w, &inst).unwrap();
            for (i, &a) in plan.iter().enumerate() {
                prop_assert!(feasible_actions(w, &state).contains(&a));
                let (next, terminal) = step(w, &state, a).unwrap();
                prop_assert_eq!(terminal, i + 1 == plan.len());
                state = next;
            }
        }
    }

    #[test]
    fn mutations_stay_valid(template in 0usize..64, seed in any::<u64>(), kind in 0usize..4) {
        let w = web();
        let kind = [MutationKind::ParamSwap, MutationKind::SiblingShift, MutationKind::Compose, MutationKind::Simplify][kind];
        let base = instance(template, seed);
        let mut rng = stream(seed, &[2]);
        if let Some(child) = mutate(w, &base, kind, 3, &mut rng) {
            prop_assert!(child.validate(&w.templates).is_ok());
            prop_assert_eq!(child.origin, Origin::Evolved { phase: 3 });
            let n = |t: &TaskInstance| w.template(t.template).unwrap().requirement_count() as i64;
            let delta = n(&child) - n(&base);
            let expect = match kind {
                MutationKind::Compose => 1,
                MutationKind::Simplify => -1,
                _ => 0,
            };
            prop_assert_eq!(delta, expect);
        }
    }

    #[test]
    fn evolve_emits_fresh_distinct_keys(seed in any::<u64>(), n in 1usize..40) {
        let w = web();
        let failures: Vec<TaskInstance> = (0..6).map(|i| instance(i * 3, seed.wrapping_add(i as u64))).collect();
        let mut rng = stream(seed, &[3]);
        let seen = failures.iter().map(|f| f.key(w.template(f.template).unwrap())).collect();
        let out = evolve(&failures, w, n, &seen, &MutationWeights::default(), 1, &mut rng);
        prop_assert!(out.len() <= n);
        let keys: std::collections::BTreeSet<_> = out.iter().map(|t| t.key(w.template(t.template).unwrap())).collect();
        prop_assert_eq!(keys.len(), out.len());
        prop_assert!(keys.is_disjoint(&seen));
    }

    #[test]
    fn featurizer_is_deterministic(template in 0usize..64, seed in any::<u64>()) {
        let w = web();
        let f = Featurizer::new(256, 64);
        let inst = instance(template, seed);
        let s = reset(w, &inst).unwrap();
        prop_assert_eq!(f.sparse(w, &s, &inst), f.sparse(w, &s, &inst));
        for &(i, _) in &f.sparse(w, &s, &inst) {
            prop_assert!((i as usize) < 256);
        }
    }
}
