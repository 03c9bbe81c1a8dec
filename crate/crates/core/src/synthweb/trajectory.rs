use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{reset, step, Action, ActionArg, EnvState, SynthWeb, TaskInstance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardSource {
    GroundTruth,
    Orm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    /// State before `action`.
    pub state: EnvState,
    pub action: Action,
    /// Log-probability of `action` under the sampling distribution; `<= 0`.
    pub behavior_log_prob: f64,
}

/// A finished rollout that has not been scored yet.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub instance: TaskInstance,
    pub steps: Vec<Step>,
    pub terminal: bool,
}

impl Episode {
    pub fn label(self, reward: u8, source: RewardSource) -> Trajectory {
        Trajectory {
            instance: self.instance,
            steps: self.steps,
            terminal: self.terminal,
            reward: reward.min(1),
            reward_source: source,
        }
    }

    pub fn final_state(&self, web: &SynthWeb) -> EnvState {
        final_state(web, &self.steps)
    }

    pub fn history(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub instance: TaskInstance,
    pub steps: Vec<Step>,
    pub terminal: bool,
    /// 0 or 1.
    pub reward: u8,
    pub reward_source: RewardSource,
}

fn final_state(web: &SynthWeb, steps: &[Step]) -> EnvState {
    match steps.last() {
        None => EnvState::initial(web.graph.home),
        Some(last) => step(web, &last.state, last.action)
            .map(|(s, _)| s)
            .unwrap_or_else(|_| last.state.clone()),
    }
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_state(&self, web: &SynthWeb) -> EnvState {
        final_state(web, &self.steps)
    }

    pub fn history(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action).collect()
    }

    pub fn ended_with_exit(&self) -> bool {
        self.steps.last().is_some_and(|s| s.action.is_exit())
    }
}

/// Success requires an explicit `Exit` with every requirement holding in the
/// final state. Pure in (final state, history, parameters).
pub fn ground_truth_reward(web: &SynthWeb, steps: &[Step], instance: &TaskInstance, terminal: bool) -> Result<u8> {
    if !terminal {
        return Err(Error::InvalidArgument("reward requested for a non-terminal trajectory"));
    }
    let template = web.template(instance.template)?;
    let exited = steps.last().is_some_and(|s| s.action.is_exit());
    let state = final_state(web, steps);
    Ok(u8::from(exited && template.satisfied(&state, &instance.params)))
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0100_0000_01b3;

struct Fnv(u64);

impl Fnv {
    fn feed(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    fn u16(&mut self, v: u16) {
        self.feed(&v.to_le_bytes());
    }

    fn action(&mut self, a: &Action) {
        self.feed(&[a.kind as u8]);
        let tag = match a.arg {
            ActionArg::None => 0u8,
            ActionArg::Element(_) => 1,
            ActionArg::Page(_) => 2,
            ActionArg::Token(_) => 3,
        };
        self.feed(&[tag]);
        self.u16(a.arg.raw());
    }
}

/// FNV-1a digest of a state, as 16 lowercase hex digits.
pub fn state_digest(state: &EnvState) -> String {
    let mut h = Fnv(FNV_OFFSET);
    h.u16(state.page.0);
    h.feed(&(state.step_index as u64).to_le_bytes());
    for a in &state.history {
        h.action(a);
    }
    let s = &state.scratch;
    h.feed(&[u8::from(s.scrolled), 0xfe]);
    match s.query {
        Some(q) => h.u16(q.0),
        None => h.feed(&[0xff, 0xff]),
    }
    h.feed(&[0xfd]);
    for p in &s.cart {
        h.u16(p.0);
    }
    h.feed(&[0xfc]);
    for p in &s.orders {
        h.u16(p.0);
    }
    h.feed(&[0xfb]);
    for (k, v) in &s.settings {
        h.u16(k.0);
        h.u16(v.0);
    }
    format!("{:016x}", h.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub state: String,
    pub action: Action,
    pub behavior_log_prob: f64,
}

/// Line format of trajectory files: states are stored as digests and
/// rebuilt by replaying the actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub instance: TaskInstance,
    pub steps: Vec<StepRecord>,
    pub terminal: bool,
    pub reward: u8,
    pub reward_source: RewardSource,
}

impl From<&Trajectory> for TrajectoryRecord {
    fn from(t: &Trajectory) -> Self {
        Self {
            instance: t.instance.clone(),
            steps: t
                .steps
                .iter()
                .map(|s| StepRecord {
                    state: state_digest(&s.state),
                    action: s.action,
                    behavior_log_prob: s.behavior_log_prob,
                })
                .collect(),
            terminal: t.terminal,
            reward: t.reward,
            reward_source: t.reward_source,
        }
    }
}

impl TrajectoryRecord {
    /// Replays the recorded actions and checks every state digest.
    pub fn restore(&self, web: &SynthWeb) -> Result<Trajectory> {
        let mut state = reset(web, &self.instance)?;
        let mut steps = Vec::with_capacity(self.steps.len());
        for (i, rec) in self.steps.iter().enumerate() {
            if state_digest(&state) != rec.state {
                return Err(Error::DigestMismatch { step: i });
            }
            let (next, _) = step(web, &state, rec.action)?;
            steps.push(Step {
                state,
                action: rec.action,
                behavior_log_prob: rec.behavior_log_prob,
            });
            state = next;
        }
        Ok(Trajectory {
            instance: self.instance.clone(),
            steps,
            terminal: self.terminal,
            reward: self.reward,
            reward_source: self.reward_source,
        })
    }
}
