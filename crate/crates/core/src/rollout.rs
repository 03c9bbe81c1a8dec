//! Running a policy in the environment.

use alloc::vec::Vec;

use rand::Rng;

use crate::math;
use crate::model::{sample_index, PolicyParams};
use crate::synthweb::{feasible_actions, reset, step, Action, Episode, Step, SynthWeb, TaskInstance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// Highest-probability action, first in canonical order on ties.
    Greedy,
    /// Draw from the softmax at this temperature.
    Sample { temperature: f64 },
}

/// Runs `policy` on `instance` until exit or the horizon. Each step records
/// the log-probability of the taken action under the sampling distribution.
pub fn rollout<R: Rng + ?Sized>(
    web: &SynthWeb,
    policy: &PolicyParams,
    instance: &TaskInstance,
    sampling: Sampling,
    rng: &mut R,
) -> Result<Episode> {
    let featurizer = policy.featurizer();
    let mut state = reset(web, instance)?;
    let mut steps = Vec::new();
    loop {
        let feasible = feasible_actions(web, &state);
        let d = featurizer.decision_over(web, &state, instance, &feasible, 0);
        let (index, probs) = match sampling {
            Sampling::Greedy => {
                let probs = policy.probs(&d, 1.0)?;
                let mut best = 0;
                for (i, &p) in probs.iter().enumerate() {
                    if p > probs[best] {
                        best = i;
                    }
                }
                (best, probs)
            }
            Sampling::Sample { temperature } => {
                let probs = policy.probs(&d, temperature)?;
                let i = sample_index(&probs, rng).ok_or(Error::ZeroProbability)?;
                (i, probs)
            }
        };
        let action = feasible[index];
        let (next, terminal) = step(web, &state, action)?;
        steps.push(Step {
            state,
            action,
            behavior_log_prob: math::ln(probs[index]),
        });
        state = next;
        if terminal {
            break;
        }
    }
    Ok(Episode {
        instance: instance.clone(),
        steps,
        terminal: true,
    })
}

/// Replays a fixed action sequence (an oracle plan, say). Recorded
/// log-probabilities are 0.
pub fn replay_actions(web: &SynthWeb, instance: &TaskInstance, actions: &[Action]) -> Result<Episode> {
    let mut state = reset(web, instance)?;
    let mut steps = Vec::with_capacity(actions.len());
    let mut terminal = false;
    for &action in actions {
        if terminal {
            return Err(Error::Terminated);
        }
        let (next, t) = step(web, &state, action)?;
        steps.push(Step {
            state,
            action,
            behavior_log_prob: 0.0,
        });
        state = next;
        terminal = t;
    }
    Ok(Episode {
        instance: instance.clone(),
        steps,
        terminal,
    })
}

/// Follows `plan`, replacing each planned action with a uniformly random
/// feasible one with probability `noise`. Planned actions that are no
/// longer feasible are skipped; once the plan runs out the episode exits.
/// Recorded log-probabilities are 0.
pub fn perturbed_plan<R: Rng + ?Sized>(
    web: &SynthWeb,
    instance: &TaskInstance,
    plan: &[Action],
    noise: f64,
    rng: &mut R,
) -> Result<Episode> {
    let mut state = reset(web, instance)?;
    let mut steps = Vec::new();
    let mut planned = plan.iter().copied();
    loop {
        let feasible = feasible_actions(web, &state);
        let action = if rng.gen_bool(noise.clamp(0.0, 1.0)) {
            let _ = planned.next();
            feasible[rng.gen_range(0..feasible.len())]
        } else {
            match planned.by_ref().find(|a| feasible.contains(a)) {
                Some(a) => a,
                None => Action::EXIT,
            }
        };
        let (next, terminal) = step(web, &state, action)?;
        steps.push(Step {
            state,
            action,
            behavior_log_prob: 0.0,
        });
        state = next;
        if terminal {
            break;
        }
    }
    Ok(Episode {
        instance: instance.clone(),
        steps,
        terminal: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DEFAULT_DIM, DEFAULT_SLOTS};
    use crate::synthweb::{ground_truth_reward, oracle_solve, Origin};

    fn setup() -> (SynthWeb, Vec<TaskInstance>) {
        let web = SynthWeb::default_site(4);
        let mut rng = crate::rng::stream(4, &[1]);
        let tasks = web
            .templates
            .iter()
            .map(|t| t.instantiate(&web.graph, t.sample_params(&mut rng), Origin::Seed))
            .collect();
        (web, tasks)
    }

    #[test]
    fn rollouts_terminate_within_horizon() {
        let (web, tasks) = setup();
        let policy = PolicyParams::zeros(DEFAULT_SLOTS, DEFAULT_DIM);
        let mut rng = crate::rng::stream(5, &[]);
        for task in &tasks {
            let ep = rollout(&web, &policy, task, Sampling::Sample { temperature: 1.0 }, &mut rng).unwrap();
            assert!(ep.terminal);
            assert!(!ep.steps.is_empty() && ep.steps.len() <= web.horizon);
            for s in &ep.steps {
                assert!(s.behavior_log_prob <= 0.0);
            }
        }
    }

    #[test]
    fn sampled_rollouts_are_reproducible() {
        let (web, tasks) = setup();
        let mut init = crate::rng::stream(6, &[]);
        let policy = PolicyParams::random(DEFAULT_SLOTS, DEFAULT_DIM, 0.3, &mut init);
        let run = |seed| {
            let mut rng = crate::rng::stream(seed, &[]);
            rollout(&web, &policy, &tasks[3], Sampling::Sample { temperature: 1.0 }, &mut rng).unwrap()
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn zero_policy_greedy_takes_first_action() {
        let (web, tasks) = setup();
        let policy = PolicyParams::zeros(DEFAULT_SLOTS, DEFAULT_DIM);
        let mut rng = crate::rng::stream(0, &[]);
        let ep = rollout(&web, &policy, &tasks[0], Sampling::Greedy, &mut rng).unwrap();
        let first = feasible_actions(&web, &ep.steps[0].state)[0];
        assert_eq!(ep.steps[0].action, first);
    }

    #[test]
    fn noiseless_perturbed_plan_is_the_plan() {
        let (web, tasks) = setup();
        let mut rng = crate::rng::stream(1, &[]);
        for task in &tasks {
            if let Some(plan) = oracle_solve(&web, task) {
                let ep = perturbed_plan(&web, task, &plan, 0.0, &mut rng).unwrap();
                assert_eq!(ep.history(), plan);
                let noisy = perturbed_plan(&web, task, &plan, 0.5, &mut rng).unwrap();
                assert!(noisy.terminal && noisy.steps.len() <= web.horizon);
            }
        }
    }

    #[test]
    fn oracle_replay_succeeds() {
        let (web, tasks) = setup();
        for task in &tasks {
            if let Some(plan) = oracle_solve(&web, task) {
                let ep = replay_actions(&web, task, &plan).unwrap();
                assert!(ep.terminal);
                assert_eq!(ground_truth_reward(&web, &ep.steps, task, ep.terminal).unwrap(), 1);
            }
        }
    }
}
