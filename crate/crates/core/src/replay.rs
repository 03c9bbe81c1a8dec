//! Success-only experience replay with per-action confidence filtering.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;

use crate::model::{perplexity, PolicyParams};
use crate::synthweb::{Action, EnvState, SynthWeb, TaskInstance, Trajectory};
use crate::{Error, Result};

pub const DEFAULT_CAPACITY: usize = 100_000;

/// Perplexity band `[1/0.95, 1/0.5]`: actions the actor gives probability
/// between 0.5 and 0.95.
pub const DEFAULT_BAND: (f64, f64) = (1.0 / 0.95, 1.0 / 0.5);

/// Replay items per fresh rollout transition.
pub const REPLAY_RATIO: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayEntry {
    pub trajectory: Trajectory,
    pub phase_added: u32,
}

/// One stored decision that passed the confidence filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplaySample {
    pub instance: TaskInstance,
    pub state: EnvState,
    pub action: Action,
    pub phase_added: u32,
    /// Position of the source trajectory in the buffer, oldest first.
    pub entry: usize,
    /// Step index within that trajectory.
    pub step: usize,
}

/// FIFO buffer of successful trajectories. `store_failed` admits reward-0
/// trajectories as well; it exists only for the ablation that measures what
/// failed replay does.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    entries: VecDeque<ReplayEntry>,
    capacity: usize,
    store_failed: bool,
    watermark: u32,
}

impl Default for ReplayBuffer {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY)
    }
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: VecDeque::new(),
            capacity: capacity.max(1),
            store_failed: false,
            watermark: 0,
        }
    }

    pub fn storing_failures(mut self, store_failed: bool) -> Self {
        self.store_failed = store_failed;
        self
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn stores_failures(&self) -> bool {
        self.store_failed
    }

    /// Highest phase any entry was added in.
    pub fn watermark(&self) -> u32 {
        self.watermark
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ReplayEntry> {
        self.entries.iter()
    }

    pub fn get(&self, index: usize) -> Option<&ReplayEntry> {
        self.entries.get(index)
    }

    /// Stores `traj` if it succeeded (or if failures are admitted), evicting
    /// the oldest entry at capacity. Returns whether it was stored.
    pub fn insert(&mut self, traj: Trajectory, phase: u32) -> Result<bool> {
        if !traj.terminal {
            return Err(Error::InvalidArgument("only terminal trajectories enter the buffer"));
        }
        if traj.reward != 1 && !self.store_failed {
            return Ok(false);
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.watermark = self.watermark.max(phase);
        self.entries.push_back(ReplayEntry {
            trajectory: traj,
            phase_added: phase,
        });
        Ok(true)
    }

    /// Rebuilds a buffer from persisted entries, oldest first.
    pub fn from_entries(
        entries: impl IntoIterator<Item = ReplayEntry>,
        capacity: usize,
        store_failed: bool,
    ) -> Result<Self> {
        let mut buf = Self::new(capacity).storing_failures(store_failed);
        for e in entries {
            buf.insert(e.trajectory, e.phase_added)?;
        }
        Ok(buf)
    }
}

/// Inclusive band test on a perplexity value.
pub fn in_band(perplexity: f64, low: f64, high: f64) -> bool {
    perplexity >= low && perplexity <= high
}

/// Every stored `(state, action)` whose perplexity under `actor` lies in
/// `[low, high]`. Filtering is per action: one trajectory can contribute
/// some of its steps and not others.
pub fn filter_by_confidence(
    buffer: &ReplayBuffer,
    web: &SynthWeb,
    actor: &PolicyParams,
    low: f64,
    high: f64,
) -> Result<Vec<ReplaySample>> {
    if !(low >= 1.0 && low < high) {
        return Err(Error::InvalidArgument("perplexity band must satisfy 1 <= low < high"));
    }
    let featurizer = actor.featurizer();
    let mut out = Vec::new();
    for (entry_index, entry) in buffer.iter().enumerate() {
        let traj = &entry.trajectory;
        for (step_index, s) in traj.steps.iter().enumerate() {
            let d = featurizer.decision(web, &s.state, &traj.instance, s.action)?;
            let ppl = perplexity(actor.log_prob_of(&d)?);
            if in_band(ppl, low, high) {
                out.push(ReplaySample {
                    instance: traj.instance.clone(),
                    state: s.state.clone(),
                    action: s.action,
                    phase_added: entry.phase_added,
                    entry: entry_index,
                    step: step_index,
                });
            }
        }
    }
    Ok(out)
}

/// Uniform draw without replacement of `min(len, 2 * fresh_count)` items,
/// returned in their original order.
pub fn draw_capped<T: Clone, R: Rng + ?Sized>(filtered: &[T], fresh_count: usize, rng: &mut R) -> Vec<T> {
    let cap = REPLAY_RATIO.saturating_mul(fresh_count);
    if filtered.len() <= cap {
        return filtered.to_vec();
    }
    let mut picked = rand::seq::index::sample(rng, filtered.len(), cap).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| filtered[i].clone()).collect()
}
