//! Self-evolving task curriculum: breed new instances from failed ones,
//! keep those the oracle can solve and the critic rates as neither hopeless
//! nor trivial.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::critic::CriticParams;
use crate::model::Featurizer;
use crate::synthweb::{oracle_solve, reset, Origin, ParamValue, SynthWeb, TaskInstance, TaskKey, TaskTemplate};
use crate::Result;

/// Critic band for newly generated tasks, inclusive.
pub const DEFAULT_CRITIC_BAND: (f64, f64) = (0.05, 0.75);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    /// Same template, one parameter rebound.
    ParamSwap,
    /// A sibling template with the same number of requirements.
    SiblingShift,
    /// A template with one more requirement.
    Compose,
    /// A template with one fewer requirement.
    Simplify,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationWeights {
    pub param_swap: f64,
    pub sibling_shift: f64,
    pub compose: f64,
    pub simplify: f64,
}

impl Default for MutationWeights {
    fn default() -> Self {
        Self {
            param_swap: 0.4,
            sibling_shift: 0.3,
            compose: 0.15,
            simplify: 0.15,
        }
    }
}

impl MutationWeights {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MutationKind {
        let ws = [self.param_swap, self.sibling_shift, self.compose, self.simplify];
        let total: f64 = ws.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        for (w, kind) in ws.iter().zip([
            MutationKind::ParamSwap,
            MutationKind::SiblingShift,
            MutationKind::Compose,
            MutationKind::Simplify,
        ]) {
            if u < *w {
                return kind;
            }
            u -= w;
        }
        MutationKind::Simplify
    }
}

/// Failed instances, deduplicated by task key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FailureSet {
    entries: Vec<(TaskInstance, u32)>,
    keys: BTreeSet<TaskKey>,
}

impl FailureSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `instance` unless an equal task is already present.
    pub fn insert(&mut self, web: &SynthWeb, instance: TaskInstance, phase_failed: u32) -> Result<bool> {
        let key = instance.key(web.template(instance.template)?);
        if !self.keys.insert(key) {
            return Ok(false);
        }
        self.entries.push((instance, phase_failed));
        Ok(true)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(TaskInstance, u32)> {
        self.entries.iter()
    }

    pub fn keys(&self) -> &BTreeSet<TaskKey> {
        &self.keys
    }
}

/// Binds `target`'s slots, reusing the seed's values wherever the
/// requirement matches and drawing fresh distinct values elsewhere.
fn rebind<R: Rng + ?Sized>(seed_t: &TaskTemplate, seed: &TaskInstance, target: &TaskTemplate, rng: &mut R) -> Vec<ParamValue> {
    let mut unused: Vec<(crate::synthweb::Requirement, ParamValue)> =
        seed_t.requirements.iter().copied().zip(seed.params.iter().copied()).collect();
    let mut out: Vec<ParamValue> = Vec::with_capacity(target.slots.len());
    for (i, req) in target.requirements.iter().enumerate() {
        let allowed = &target.slots[i].allowed;
        if let Some(pos) = unused.iter().position(|(r, v)| r == req && allowed.contains(v)) {
            out.push(unused.swap_remove(pos).1);
            continue;
        }
        let taken: Vec<ParamValue> = (0..i)
            .filter(|&j| target.requirements[j] == *req)
            .map(|j| out[j])
            .chain(unused.iter().filter(|(r, _)| r == req).map(|(_, v)| *v))
            .collect();
        let free: Vec<ParamValue> = allowed.iter().copied().filter(|v| !taken.contains(v)).collect();
        out.push(*free.choose(rng).or_else(|| allowed.choose(rng)).expect("empty slot domain"));
    }
    out
}

/// Applies one mutation to `seed`. `None` when the operator has no valid
/// target (no sibling of the needed size, or a single-valued slot).
pub fn mutate<R: Rng + ?Sized>(
    web: &SynthWeb,
    seed: &TaskInstance,
    kind: MutationKind,
    phase: u32,
    rng: &mut R,
) -> Option<TaskInstance> {
    let seed_t = web.template(seed.template).ok()?;
    let n = seed_t.requirement_count();
    let origin = Origin::Evolved { phase };
    let (target, params) = match kind {
        MutationKind::ParamSwap => {
            let candidates: Vec<usize> = (0..seed_t.slots.len())
                .filter(|&i| seed_t.slots[i].allowed.len() > 1)
                .collect();
            let &i = candidates.choose(rng)?;
            let req = seed_t.requirements[i];
            let taken: Vec<ParamValue> = (0..seed_t.slots.len())
                .filter(|&j| seed_t.requirements[j] == req)
                .map(|j| seed.params[j])
                .collect();
            let free: Vec<ParamValue> = seed_t.slots[i]
                .allowed
                .iter()
                .copied()
                .filter(|v| !taken.contains(v))
                .collect();
            let mut params = seed.params.clone();
            params[i] = *free.choose(rng)?;
            (seed_t, params)
        }
        MutationKind::SiblingShift | MutationKind::Compose | MutationKind::Simplify => {
            let want = match kind {
                MutationKind::SiblingShift => n,
                MutationKind::Compose => n + 1,
                _ if n <= 1 => return None,
                _ => n - 1,
            };
            let options: Vec<&TaskTemplate> = seed_t
                .siblings
                .iter()
                .filter_map(|&id| web.template(id).ok())
                .filter(|t| t.requirement_count() == want)
                .collect();
            let target = *options.choose(rng)?;
            let params = rebind(seed_t, seed, target, rng);
            (target, params)
        }
    };
    Some(target.instantiate(&web.graph, params, origin))
}

fn key_of(web: &SynthWeb, inst: &TaskInstance) -> Option<TaskKey> {
    web.template(inst.template).ok().map(|t| inst.key(t))
}

/// Up to `n` new instances bred from uniformly drawn failures. Anything
/// whose key is in `seen` or already among the failures is discarded, as
/// are duplicates within the batch. Gives up after `8 n` draws.
pub fn evolve<R: Rng + ?Sized>(
    failures: &[TaskInstance],
    web: &SynthWeb,
    n: usize,
    seen: &BTreeSet<TaskKey>,
    weights: &MutationWeights,
    phase: u32,
    rng: &mut R,
) -> Vec<TaskInstance> {
    let mut out = Vec::new();
    if failures.is_empty() || n == 0 {
        return out;
    }
    let mut taken: BTreeSet<TaskKey> = failures.iter().filter_map(|f| key_of(web, f)).collect();
    for _ in 0..8 * n {
        if out.len() == n {
            break;
        }
        let seed = &failures[rng.gen_range(0..failures.len())];
        let kind = weights.sample(rng);
        let Some(child) = mutate(web, seed, kind, phase, rng) else {
            continue;
        };
        let Some(key) = key_of(web, &child) else {
            continue;
        };
        if seen.contains(&key) || !taken.insert(key) {
            continue;
        }
        out.push(child);
    }
    out
}

/// Candidates the oracle can solve within the horizon, in input order.
pub fn feasibility_filter(candidates: Vec<TaskInstance>, web: &SynthWeb) -> Vec<TaskInstance> {
    candidates
        .into_iter()
        .filter(|c| oracle_solve(web, c).is_some())
        .collect()
}

/// Critic value of the task's initial state.
pub fn initial_value(web: &SynthWeb, critic: &CriticParams, featurizer: &Featurizer, inst: &TaskInstance) -> Result<f64> {
    let s0 = reset(web, inst)?;
    Ok(critic.value(featurizer, web, &s0, inst))
}

/// Candidates whose initial-state value lies in `[low, high]`.
pub fn difficulty_filter(
    candidates: Vec<TaskInstance>,
    web: &SynthWeb,
    critic: &CriticParams,
    featurizer: &Featurizer,
    low: f64,
    high: f64,
) -> Vec<TaskInstance> {
    candidates
        .into_iter()
        .filter(|c| {
            initial_value(web, critic, featurizer, c).is_ok_and(|v| v >= low && v <= high)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillConfig {
    /// Target instance count.
    pub k: usize,
    pub max_rounds: usize,
    pub band: (f64, f64),
    pub weights: MutationWeights,
    /// Candidates bred per round, as a multiple of the remaining need.
    pub oversample: usize,
}

impl Default for FillConfig {
    fn default() -> Self {
        Self {
            k: 64,
            max_rounds: 20,
            band: DEFAULT_CRITIC_BAND,
            weights: MutationWeights::default(),
            oversample: 4,
        }
    }
}

/// Breeds and filters until `k` instances accumulate or `max_rounds` pass.
/// `filter` applies both filters to a round's candidates and must preserve
/// order; the driver passes a parallel version of [`standard_filter`].
/// An empty failure set falls back to `pool`. Emitted keys are added to
/// `seen`.
#[allow(clippy::too_many_arguments)]
pub fn fill_phase_with<R, F>(
    failures: &FailureSet,
    pool: &[TaskInstance],
    web: &SynthWeb,
    config: &FillConfig,
    seen: &mut BTreeSet<TaskKey>,
    phase: u32,
    rng: &mut R,
    mut filter: F,
) -> Vec<TaskInstance>
where
    R: Rng + ?Sized,
    F: FnMut(Vec<TaskInstance>) -> Vec<TaskInstance>,
{
    let seeds: Vec<TaskInstance> = if failures.is_empty() {
        pool.to_vec()
    } else {
        failures.iter().map(|(t, _)| t.clone()).collect()
    };
    let mut out: Vec<TaskInstance> = Vec::new();
    for _ in 0..config.max_rounds {
        if out.len() >= config.k {
            break;
        }
        let need = config.k - out.len();
        let mut blocked = seen.clone();
        blocked.extend(failures.keys().iter().cloned());
        let candidates = evolve(&seeds, web, need * config.oversample.max(1), &blocked, &config.weights, phase, rng);
        if candidates.is_empty() {
            continue;
        }
        for c in filter(candidates) {
            if out.len() == config.k {
                break;
            }
            if let Some(key) = key_of(web, &c) {
                if seen.insert(key) {
                    out.push(c);
                }
            }
        }
    }
    if out.len() * 2 < config.k {
        log::warn!(
            "curriculum phase {phase}: only {} of {} instances passed the filters",
            out.len(),
            config.k
        );
    }
    out
}

/// Feasibility, then difficulty.
pub fn standard_filter(
    candidates: Vec<TaskInstance>,
    web: &SynthWeb,
    critic: &CriticParams,
    featurizer: &Featurizer,
    band: (f64, f64),
) -> Vec<TaskInstance> {
    difficulty_filter(feasibility_filter(candidates, web), web, critic, featurizer, band.0, band.1)
}

#[allow(clippy::too_many_arguments)]
pub fn fill_phase<R: Rng + ?Sized>(
    failures: &FailureSet,
    pool: &[TaskInstance],
    web: &SynthWeb,
    critic: &CriticParams,
    featurizer: &Featurizer,
    config: &FillConfig,
    seen: &mut BTreeSet<TaskKey>,
    phase: u32,
    rng: &mut R,
) -> Vec<TaskInstance> {
    fill_phase_with(failures, pool, web, config, seen, phase, rng, |c| {
        standard_filter(c, web, critic, featurizer, config.band)
    })
}
