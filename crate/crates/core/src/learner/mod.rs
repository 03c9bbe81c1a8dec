//! Policy updates: the KL-regularized squared-residual loss and the
//! baselines it is compared against (behavior cloning, filtered BC, AWR,
//! REINFORCE with a value baseline, and the reverse-KL projection).
//!
//! All updates are full-batch gradient steps over resolved [`Decision`]s, so
//! the same code trains the web policy and the tabular test policies.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::model::{Decision, Featurizer, PolicyParams};
use crate::synthweb::{SynthWeb, Trajectory};
use crate::{Error, Result};

/// Exponentiated-advantage weights are clipped here.
pub const WEIGHT_CLIP: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemSource {
    Rollout,
    Replay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateItem {
    pub decision: Decision,
    pub advantage: f64,
    /// `log pi_ref(action | state)` under the frozen reference actor.
    pub ref_log_prob: f64,
    pub source: ItemSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateBatch {
    pub items: Vec<UpdateItem>,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub loss_before: f64,
    pub loss_after: f64,
    pub grad_norm: f64,
    pub items_rollout: usize,
    pub items_replay: usize,
}

impl UpdateBatch {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument("beta must be positive"));
        }
        if self
            .items
            .iter()
            .any(|i| !i.advantage.is_finite() || !i.ref_log_prob.is_finite())
        {
            return Err(Error::InvalidArgument("advantages and reference log-probs must be finite"));
        }
        Ok(())
    }

    pub fn counts(&self) -> (usize, usize) {
        let replay = self
            .items
            .iter()
            .filter(|i| i.source == ItemSource::Replay)
            .count();
        (self.items.len() - replay, replay)
    }
}

fn check_lr(learning_rate: f64) -> Result<()> {
    if learning_rate > 0.0 && learning_rate.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("learning rate must be positive"))
    }
}

/// Resolves every step of a trajectory into a decision for `featurizer`.
pub fn trajectory_decisions(featurizer: &Featurizer, web: &SynthWeb, traj: &Trajectory) -> Result<Vec<Decision>> {
    traj.steps
        .iter()
        .map(|s| featurizer.decision(web, &s.state, &traj.instance, s.action))
        .collect()
}

/// Mean over items of `(beta (log pi - log pi_ref) - A)^2`.
pub fn webrl_loss(policy: &PolicyParams, batch: &UpdateBatch) -> Result<f64> {
    if batch.items.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for item in &batch.items {
        let r = batch.beta * (policy.log_prob_of(&item.decision)? - item.ref_log_prob) - item.advantage;
        total += r * r;
    }
    Ok(total / batch.items.len() as f64)
}

/// `-2 beta mean (A - beta log(pi / pi_ref)) grad log pi`.
pub fn webrl_gradient(policy: &PolicyParams, batch: &UpdateBatch) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; policy.weights.len()];
    if batch.items.is_empty() {
        return Ok(grad);
    }
    let n = batch.items.len() as f64;
    for item in &batch.items {
        let probs = policy.probs(&item.decision, 1.0)?;
        let log_ratio = math::ln(probs[item.decision.chosen]) - item.ref_log_prob;
        let scale = -2.0 * batch.beta * (item.advantage - batch.beta * log_ratio) / n;
        policy.accumulate_grad_log_prob(&item.decision, &probs, scale, &mut grad);
    }
    Ok(grad)
}

/// `epochs` full-batch descent steps on [`webrl_loss`].
pub fn webrl_update(
    policy: &PolicyParams,
    batch: &UpdateBatch,
    learning_rate: f64,
    epochs: usize,
) -> Result<(PolicyParams, TrainReport)> {
    check_lr(learning_rate)?;
    batch.validate()?;
    let (items_rollout, items_replay) = batch.counts();
    let loss_before = webrl_loss(policy, batch)?;
    let mut next = policy.clone();
    let mut grad_norm = 0.0;
    for _ in 0..epochs {
        let grad = webrl_gradient(&next, batch)?;
        grad_norm = math::l2_norm(&grad);
        next.descend(&grad, learning_rate);
        if !next.is_finite() {
            return Err(Error::Divergence(f64::NAN));
        }
    }
    let loss_after = webrl_loss(&next, batch).map_err(|_| Error::Divergence(f64::NAN))?;
    if !loss_after.is_finite() {
        return Err(Error::Divergence(loss_after));
    }
    Ok((
        next,
        TrainReport {
            loss_before,
            loss_after,
            grad_norm,
            items_rollout,
            items_replay,
        },
    ))
}

/// Weighted log-likelihood `mean w_i log pi(a_i | s_i)`.
fn weighted_log_likelihood(policy: &PolicyParams, decisions: &[&Decision], weights: &[f64]) -> Result<f64> {
    if decisions.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (d, w) in decisions.iter().zip(weights) {
        total += w * policy.log_prob_of(d)?;
    }
    Ok(total / decisions.len() as f64)
}

/// Gradient of `-weighted_log_likelihood`, ready for descent.
fn weighted_nll_gradient(policy: &PolicyParams, decisions: &[&Decision], weights: &[f64]) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; policy.weights.len()];
    if decisions.is_empty() {
        return Ok(grad);
    }
    let n = decisions.len() as f64;
    for (d, w) in decisions.iter().zip(weights) {
        let probs = policy.probs(d, 1.0)?;
        policy.accumulate_grad_log_prob(d, &probs, -w / n, &mut grad);
    }
    Ok(grad)
}

fn weighted_bc_update(
    policy: &PolicyParams,
    decisions: &[&Decision],
    weights: &[f64],
    learning_rate: f64,
    epochs: usize,
) -> Result<PolicyParams> {
    let mut next = policy.clone();
    for _ in 0..epochs {
        let grad = weighted_nll_gradient(&next, decisions, weights)?;
        next.descend(&grad, learning_rate);
        if !next.is_finite() {
            return Err(Error::Divergence(f64::NAN));
        }
    }
    Ok(next)
}

/// Behavior-cloning objective: mean log-likelihood of the demo actions.
pub fn sft_objective(policy: &PolicyParams, demos: &[Decision]) -> Result<f64> {
    let refs: Vec<&Decision> = demos.iter().collect();
    weighted_log_likelihood(policy, &refs, &vec![1.0; demos.len()])
}

/// Gradient of the mean log-likelihood (ascent direction).
pub fn sft_gradient(policy: &PolicyParams, demos: &[Decision]) -> Result<Vec<f64>> {
    let refs: Vec<&Decision> = demos.iter().collect();
    let mut g = weighted_nll_gradient(policy, &refs, &vec![1.0; demos.len()])?;
    g.iter_mut().for_each(|x| *x = -*x);
    Ok(g)
}

pub fn sft_update(policy: &PolicyParams, demos: &[Decision], learning_rate: f64, epochs: usize) -> Result<PolicyParams> {
    check_lr(learning_rate)?;
    if demos.is_empty() {
        return Err(Error::InvalidArgument("no demonstrations"));
    }
    let refs: Vec<&Decision> = demos.iter().collect();
    weighted_bc_update(policy, &refs, &vec![1.0; demos.len()], learning_rate, epochs)
}

/// Behavior cloning on the reward-1 trajectories only. With no successes
/// the policy comes back unchanged.
pub fn filtered_bc_update(
    policy: &PolicyParams,
    web: &SynthWeb,
    trajs: &[Trajectory],
    learning_rate: f64,
    epochs: usize,
) -> Result<PolicyParams> {
    check_lr(learning_rate)?;
    let featurizer = policy.featurizer();
    let mut demos = Vec::new();
    for t in trajs.iter().filter(|t| t.reward == 1) {
        demos.extend(trajectory_decisions(&featurizer, web, t)?);
    }
    if demos.is_empty() {
        log::warn!("filtered BC: no successful trajectories, skipping update");
        return Ok(policy.clone());
    }
    sft_update(policy, &demos, learning_rate, epochs)
}

/// `min(exp(A / beta), WEIGHT_CLIP)`.
pub fn advantage_weight(advantage: f64, beta: f64) -> f64 {
    math::exp(advantage / beta).min(WEIGHT_CLIP)
}

fn awr_parts(batch: &UpdateBatch, beta: f64) -> (Vec<&Decision>, Vec<f64>) {
    batch
        .items
        .iter()
        .map(|i| (&i.decision, advantage_weight(i.advantage, beta)))
        .unzip()
}

/// `mean min(exp(A/beta), 20) log pi(a|s)`.
pub fn awr_objective(policy: &PolicyParams, batch: &UpdateBatch, beta: f64) -> Result<f64> {
    let (d, w) = awr_parts(batch, beta);
    weighted_log_likelihood(policy, &d, &w)
}

/// Ascent direction of [`awr_objective`].
pub fn awr_gradient(policy: &PolicyParams, batch: &UpdateBatch, beta: f64) -> Result<Vec<f64>> {
    let (d, w) = awr_parts(batch, beta);
    let mut g = weighted_nll_gradient(policy, &d, &w)?;
    g.iter_mut().for_each(|x| *x = -*x);
    Ok(g)
}

/// Advantage-weighted regression: weighted behavior cloning with
/// clipped `exp(A / beta)` weights.
pub fn awr_update(
    policy: &PolicyParams,
    batch: &UpdateBatch,
    learning_rate: f64,
    beta: f64,
    epochs: usize,
) -> Result<PolicyParams> {
    check_lr(learning_rate)?;
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument("beta must be positive"));
    }
    let (d, w) = awr_parts(batch, beta);
    weighted_bc_update(policy, &d, &w, learning_rate, epochs)
}

/// Reverse-KL projection onto the soft-optimal policy: ascend
/// `E_{pi_ref}[log pi * exp(A / beta)]` over samples drawn from `pi_ref`.
/// Same estimator as AWR; kept separate because its samples must come from
/// the reference policy rather than the replay mix.
pub fn kl_direction_update(
    policy: &PolicyParams,
    ref_samples: &UpdateBatch,
    learning_rate: f64,
    beta: f64,
    epochs: usize,
) -> Result<PolicyParams> {
    if ref_samples.items.iter().any(|i| i.source == ItemSource::Replay) {
        return Err(Error::InvalidArgument("reverse-KL update takes reference-policy samples only"));
    }
    awr_update(policy, ref_samples, learning_rate, beta, epochs)
}

pub fn kl_direction_objective(policy: &PolicyParams, ref_samples: &UpdateBatch, beta: f64) -> Result<f64> {
    awr_objective(policy, ref_samples, beta)
}

/// `mean A log pi(a|s)`; no KL term, no reference policy.
pub fn reinforce_objective(policy: &PolicyParams, batch: &UpdateBatch) -> Result<f64> {
    let (d, w): (Vec<&Decision>, Vec<f64>) = batch.items.iter().map(|i| (&i.decision, i.advantage)).unzip();
    weighted_log_likelihood(policy, &d, &w)
}

pub fn reinforce_gradient(policy: &PolicyParams, batch: &UpdateBatch) -> Result<Vec<f64>> {
    let (d, w): (Vec<&Decision>, Vec<f64>) = batch.items.iter().map(|i| (&i.decision, i.advantage)).unzip();
    let mut g = weighted_nll_gradient(policy, &d, &w)?;
    g.iter_mut().for_each(|x| *x = -*x);
    Ok(g)
}

pub fn reinforce_baseline_update(
    policy: &PolicyParams,
    batch: &UpdateBatch,
    learning_rate: f64,
    epochs: usize,
) -> Result<PolicyParams> {
    check_lr(learning_rate)?;
    let (d, w): (Vec<&Decision>, Vec<f64>) = batch.items.iter().map(|i| (&i.decision, i.advantage)).unzip();
    weighted_bc_update(policy, &d, &w, learning_rate, epochs)
}
