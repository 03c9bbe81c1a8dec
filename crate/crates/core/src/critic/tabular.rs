//! Tiny enumerable MDPs and their exact soft-optimal values. Used as a
//! reference when checking the learners and the critic.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math;
use crate::model::{Decision, PolicyParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabularAction {
    /// `None` ends the episode after this action.
    pub next: Option<usize>,
    pub reward: f64,
}

/// Layered MDP over states `0..n`; every transition goes to a strictly
/// larger index, so backward induction in index order is exact. State 0 is
/// the start state.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    pub states: Vec<Vec<TabularAction>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftValues {
    pub v: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    /// `Q - beta ln pi_ref - V`, which equals `beta ln(pi* / pi_ref)`.
    pub advantage: Vec<Vec<f64>>,
    pub policy: Vec<Vec<f64>>,
}

fn go(next: usize) -> TabularAction {
    TabularAction {
        next: Some(next),
        reward: 0.0,
    }
}

fn stop(reward: f64) -> TabularAction {
    TabularAction { next: None, reward }
}

impl TabularMdp {
    pub fn new(states: Vec<Vec<TabularAction>>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidArgument("tabular MDP needs at least one state"));
        }
        for (s, actions) in states.iter().enumerate() {
            if actions.is_empty() {
                return Err(Error::InvalidArgument("every state needs an action"));
            }
            for a in actions {
                if let Some(n) = a.next {
                    if n <= s || n >= states.len() {
                        return Err(Error::InvalidArgument("transitions must go to a later state"));
                    }
                }
            }
        }
        Ok(Self { states })
    }

    /// Six states, three actions each, episodes of at most four steps.
    /// Reward 1 is reachable only through `0 -> 1 -> 3 -> (stop | 5 -> stop)`
    /// or the mirrored path through state 2.
    pub fn six_state() -> Self {
        Self {
            states: vec![
                vec![go(1), go(2), stop(0.0)],
                vec![go(3), go(4), stop(0.0)],
                vec![go(4), go(3), stop(0.0)],
                vec![go(5), stop(0.0), stop(1.0)],
                vec![go(5), stop(0.0), stop(0.0)],
                vec![stop(1.0), stop(0.0), stop(0.0)],
            ],
        }
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn max_actions(&self) -> usize {
        self.states.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// One-hot state features, one weight row per action index.
    pub fn decision(&self, state: usize, action: usize) -> Decision {
        Decision {
            features: vec![(state as u16, 1.0)],
            slots: (0..self.states[state].len() as u16).collect(),
            chosen: action,
        }
    }

    pub fn policy_table(&self, params: &PolicyParams) -> Result<Vec<Vec<f64>>> {
        (0..self.n_states())
            .map(|s| params.probs(&self.decision(s, 0), 1.0))
            .collect()
    }

    pub fn uniform_policy(&self) -> Vec<Vec<f64>> {
        self.states
            .iter()
            .map(|a| vec![1.0 / a.len() as f64; a.len()])
            .collect()
    }

    /// Expected undiscounted return of `policy` from every state.
    pub fn policy_values(&self, policy: &[Vec<f64>]) -> Vec<f64> {
        let mut v = vec![0.0; self.n_states()];
        for s in (0..self.n_states()).rev() {
            v[s] = self.states[s]
                .iter()
                .zip(&policy[s])
                .map(|(a, p)| p * (a.reward + a.next.map_or(0.0, |n| v[n])))
                .sum();
        }
        v
    }

    /// Best achievable return from every state.
    pub fn hard_values(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_states()];
        for s in (0..self.n_states()).rev() {
            v[s] = self.states[s]
                .iter()
                .map(|a| a.reward + a.next.map_or(0.0, |n| v[n]))
                .fold(f64::NEG_INFINITY, f64::max);
        }
        v
    }

    /// Samples one episode from state 0: the visited `(state, action)` pairs
    /// and the accumulated reward.
    pub fn sample_episode<R: Rng + ?Sized>(&self, policy: &[Vec<f64>], rng: &mut R) -> (Vec<(usize, usize)>, f64) {
        let mut s = 0;
        let mut path = Vec::new();
        let mut total = 0.0;
        loop {
            let u: f64 = rng.gen();
            let probs = &policy[s];
            let mut acc = 0.0;
            let mut a = probs.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    a = i;
                    break;
                }
            }
            path.push((s, a));
            let act = self.states[s][a];
            total += act.reward;
            match act.next {
                Some(n) => s = n,
                None => return (path, total),
            }
        }
    }
}

/// Backward induction for the KL-regularized objective:
/// `Q(s,a) = r + beta ln pi_ref(a|s) + V(s')` (no `V` term when the action
/// ends the episode) and `V(s) = beta ln sum_a exp(Q(s,a) / beta)`.
pub fn exact_soft_values(mdp: &TabularMdp, pi_ref: &[Vec<f64>], beta: f64) -> SoftValues {
    let n = mdp.n_states();
    let mut v = vec![0.0; n];
    let mut q = vec![Vec::new(); n];
    let mut advantage = vec![Vec::new(); n];
    let mut policy = vec![Vec::new(); n];
    for s in (0..n).rev() {
        let qs: Vec<f64> = mdp.states[s]
            .iter()
            .zip(&pi_ref[s])
            .map(|(a, &p)| a.reward + beta * math::ln(p) + a.next.map_or(0.0, |m| v[m]))
            .collect();
        let scaled: Vec<f64> = qs.iter().map(|x| x / beta).collect();
        v[s] = beta * math::log_sum_exp(&scaled);
        policy[s] = qs.iter().map(|x| math::exp((x - v[s]) / beta)).collect();
        advantage[s] = qs
            .iter()
            .zip(&pi_ref[s])
            .map(|(x, &p)| x - beta * math::ln(p) - v[s])
            .collect();
        q[s] = qs;
    }
    SoftValues {
        v,
        q,
        advantage,
        policy,
    }
}
