use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Decision, Featurizer};
use crate::math;
use crate::synthweb::{Action, EnvState, SynthWeb, TaskInstance};
use crate::{Error, Result};

/// Row-major `slots x dim` weight matrix of the linear softmax policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub slots: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
    /// Bumped by every update.
    pub version: u64,
}

/// Distribution over the feasible set, in canonical action order.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    pub support: Vec<Action>,
    pub probs: Vec<f64>,
}

impl ActionDistribution {
    /// Most probable action; ties go to the earliest in canonical order.
    pub fn greedy(&self) -> Action {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        self.support[best]
    }

    pub fn prob_of(&self, action: Action) -> f64 {
        self.support
            .iter()
            .position(|&a| a == action)
            .map_or(0.0, |i| self.probs[i])
    }

    pub fn entropy(&self) -> f64 {
        math::entropy(&self.probs)
    }
}

/// Inverse-CDF draw in support order.
pub fn sample<R: Rng + ?Sized>(dist: &ActionDistribution, rng: &mut R) -> Action {
    sample_index(&dist.probs, rng)
        .map(|i| dist.support[i])
        .unwrap_or(Action::EXIT)
}

pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Option<usize> {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = Some(i);
        }
        acc += p;
        if u < acc && p > 0.0 {
            return Some(i);
        }
    }
    last_positive
}

impl PolicyParams {
    pub fn zeros(slots: usize, dim: usize) -> Self {
        Self {
            slots,
            dim,
            weights: vec![0.0; slots * dim],
            version: 0,
        }
    }

    /// Weights drawn uniformly from `[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(slots: usize, dim: usize, scale: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(slots, dim);
        for w in &mut p.weights {
            *w = rng.gen_range(-scale..=scale);
        }
        p
    }

    pub fn featurizer(&self) -> Featurizer {
        Featurizer::new(self.dim, self.slots)
    }

    pub fn check_shape(&self, slots: usize, dim: usize) -> Result<()> {
        if self.slots != slots || self.dim != dim || self.weights.len() != slots * dim {
            return Err(Error::Shape {
                expected: (slots, dim),
                found: (self.slots, self.dim),
            });
        }
        Ok(())
    }

    pub fn row(&self, slot: u16) -> &[f64] {
        let s = slot as usize * self.dim;
        &self.weights[s..s + self.dim]
    }

    pub fn scores(&self, d: &Decision) -> Vec<f64> {
        d.slots
            .iter()
            .map(|&s| math::dot_sparse(self.row(s), &d.features))
            .collect()
    }

    /// Softmax of `scores / temperature` over the decision's candidates.
    pub fn probs(&self, d: &Decision, temperature: f64) -> Result<Vec<f64>> {
        if temperature <= 0.0 || !temperature.is_finite() {
            return Err(Error::InvalidArgument("temperature must be positive"));
        }
        let mut s = self.scores(d);
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteScore);
        }
        for x in &mut s {
            *x /= temperature;
        }
        math::softmax_in_place(&mut s);
        Ok(s)
    }

    /// Log-softmax at temperature 1.
    pub fn log_probs(&self, d: &Decision) -> Result<Vec<f64>> {
        let mut s = self.scores(d);
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteScore);
        }
        let lse = math::log_sum_exp(&s);
        for x in &mut s {
            *x -= lse;
        }
        Ok(s)
    }

    /// `log pi(chosen)` at temperature 1.
    pub fn log_prob_of(&self, d: &Decision) -> Result<f64> {
        self.log_probs(d)?
            .get(d.chosen)
            .copied()
            .ok_or(Error::ZeroProbability)
    }

    /// Adds `scale * grad log pi(chosen)` into `grad` (dense, `slots x dim`),
    /// given the candidate probabilities at temperature 1.
    pub fn accumulate_grad_log_prob(&self, d: &Decision, probs: &[f64], scale: f64, grad: &mut [f64]) {
        let chosen_slot = d.slots[d.chosen];
        for (&slot, &p) in d.slots.iter().zip(probs) {
            let row = &mut grad[slot as usize * self.dim..(slot as usize + 1) * self.dim];
            for &(j, x) in &d.features {
                row[j as usize] -= scale * p * x;
            }
        }
        let row = &mut grad[chosen_slot as usize * self.dim..(chosen_slot as usize + 1) * self.dim];
        for &(j, x) in &d.features {
            row[j as usize] += scale * x;
        }
    }

    /// Dense gradient of `log pi(chosen)` with respect to the weights.
    pub fn grad_log_prob(&self, d: &Decision) -> Result<Vec<f64>> {
        let probs = self.probs(d, 1.0)?;
        let mut g = vec![0.0; self.weights.len()];
        self.accumulate_grad_log_prob(d, &probs, 1.0, &mut g);
        Ok(g)
    }

    /// `weights -= lr * grad`; bumps the version.
    pub fn descend(&mut self, grad: &[f64], lr: f64) {
        for (w, g) in self.weights.iter_mut().zip(grad) {
            *w -= lr * g;
        }
        self.version += 1;
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }

    pub fn action_probs(
        &self,
        web: &SynthWeb,
        state: &EnvState,
        instance: &TaskInstance,
        feasible: &[Action],
        temperature: f64,
    ) -> Result<ActionDistribution> {
        if feasible.is_empty() {
            return Err(Error::InvalidArgument("empty feasible set"));
        }
        let d = self
            .featurizer()
            .decision_over(web, state, instance, feasible, 0);
        Ok(ActionDistribution {
            support: feasible.to_vec(),
            probs: self.probs(&d, temperature)?,
        })
    }

    /// `log pi(action | state, instance)` at temperature 1; `<= 0`.
    pub fn log_prob(&self, web: &SynthWeb, state: &EnvState, instance: &TaskInstance, action: Action) -> Result<f64> {
        let d = self.featurizer().decision(web, state, instance, action)?;
        self.log_prob_of(&d)
    }

    /// `exp(-log pi)`, i.e. `1 / pi(action)`; at least 1.
    pub fn action_perplexity(
        &self,
        web: &SynthWeb,
        state: &EnvState,
        instance: &TaskInstance,
        action: Action,
    ) -> Result<f64> {
        let d = self
            .featurizer()
            .decision(web, state, instance, action)
            .map_err(|_| Error::ZeroProbability)?;
        Ok(perplexity(self.log_prob_of(&d)?))
    }

    /// Dense `slots x dim` gradient of `log pi(action | state, instance)`.
    pub fn policy_grad_log_prob(
        &self,
        web: &SynthWeb,
        state: &EnvState,
        instance: &TaskInstance,
        action: Action,
    ) -> Result<Vec<f64>> {
        let d = self.featurizer().decision(web, state, instance, action)?;
        self.grad_log_prob(&d)
    }
}

/// `exp(-log_prob)`, shared by every perplexity computation.
#[inline]
pub(crate) fn perplexity(log_prob: f64) -> f64 {
    math::exp(-log_prob)
}
