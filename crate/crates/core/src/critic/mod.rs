//! Logistic value model trained with cross-entropy against terminal
//! outcomes, and the lambda-mixed next-step / final-step advantage.

mod tabular;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use tabular::{exact_soft_values, SoftValues, TabularAction, TabularMdp};

use crate::math;
use crate::model::Featurizer;
use crate::synthweb::{EnvState, SynthWeb, TaskInstance, Trajectory};
use crate::{Error, Result};

/// Values are clamped to `[V_EPS, 1 - V_EPS]` inside the logarithms.
pub const V_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticParams {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub version: u64,
}

/// One critic training example: state features and the terminal outcome of
/// the trajectory the state came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSample {
    pub features: Vec<(u16, f64)>,
    pub outcome: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageEstimate {
    pub per_step: Vec<f64>,
    pub lambda: f64,
    pub gamma: f64,
}

impl CriticParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            version: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn logit(&self, features: &[(u16, f64)]) -> f64 {
        math::dot_sparse(&self.weights, features) + self.bias
    }

    /// `logistic(w . x + b)`, in `(0, 1)`.
    pub fn value_of(&self, features: &[(u16, f64)]) -> f64 {
        math::logistic(self.logit(features))
    }

    pub fn value(&self, featurizer: &Featurizer, web: &SynthWeb, state: &EnvState, instance: &TaskInstance) -> f64 {
        self.value_of(&featurizer.sparse(web, state, instance))
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }
}

/// Mean binary cross-entropy of the batch.
pub fn critic_loss(params: &CriticParams, batch: &[ValueSample]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let total: f64 = batch
        .iter()
        .map(|s| {
            let v = params.value_of(&s.features).clamp(V_EPS, 1.0 - V_EPS);
            if s.outcome == 1 {
                -math::ln(v)
            } else {
                -math::ln(1.0 - v)
            }
        })
        .sum();
    total / batch.len() as f64
}

/// Gradient of [`critic_loss`]: `(d/dw, d/db)`. Zero wherever the clamp is
/// active, matching the flat loss there.
pub fn critic_gradient(params: &CriticParams, batch: &[ValueSample]) -> (Vec<f64>, f64) {
    let mut gw = vec![0.0; params.dim()];
    let mut gb = 0.0;
    if batch.is_empty() {
        return (gw, gb);
    }
    let scale = 1.0 / batch.len() as f64;
    for s in batch {
        let v = params.value_of(&s.features);
        if !(V_EPS..=1.0 - V_EPS).contains(&v) {
            continue;
        }
        let dz = (v - f64::from(s.outcome)) * scale;
        for &(j, x) in &s.features {
            gw[j as usize] += dz * x;
        }
        gb += dz;
    }
    (gw, gb)
}

/// One full-batch gradient step on [`critic_loss`].
pub fn critic_update(params: &CriticParams, batch: &[ValueSample], learning_rate: f64) -> Result<CriticParams> {
    if learning_rate <= 0.0 {
        return Err(Error::InvalidArgument("learning rate must be positive"));
    }
    let (gw, gb) = critic_gradient(params, batch);
    let mut next = params.clone();
    for (w, g) in next.weights.iter_mut().zip(&gw) {
        *w -= learning_rate * g;
    }
    next.bias -= learning_rate * gb;
    next.version += 1;
    if !next.is_finite() {
        return Err(Error::Divergence(critic_loss(&next, batch)));
    }
    Ok(next)
}

/// Every state of the trajectory paired with its terminal reward.
pub fn value_samples(featurizer: &Featurizer, web: &SynthWeb, traj: &Trajectory) -> Vec<ValueSample> {
    traj.steps
        .iter()
        .map(|s| ValueSample {
            features: featurizer.sparse(web, &s.state, &traj.instance),
            outcome: traj.reward,
        })
        .collect()
}

/// Advantage of each step from the critic values `values[t] = V(s_t)` of
/// a terminal trajectory with outcome `reward`.
///
/// For `t < T`: `lambda (gamma V(s_{t+1}) - V(s_t)) + (1 - lambda)(gamma^(T-t) r - V(s_t))`,
/// the intermediate reward being 0. The last step has no successor:
/// `A_T = r - V(s_T)` whatever `lambda`.
pub fn advantages_from_values(values: &[f64], reward: f64, lambda: f64, gamma: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let v = values[t];
        if t + 1 == n {
            out.push(reward - v);
            continue;
        }
        let remaining = (n - 1 - t) as i32;
        let td = 0.0 + gamma * values[t + 1] - v;
        let mc = math::pow(gamma, f64::from(remaining)) * reward - v;
        out.push(lambda * td + (1.0 - lambda) * mc);
    }
    out
}

pub fn advantage(
    params: &CriticParams,
    featurizer: &Featurizer,
    web: &SynthWeb,
    traj: &Trajectory,
    lambda: f64,
    gamma: f64,
) -> Result<AdvantageEstimate> {
    if !traj.terminal {
        return Err(Error::InvalidArgument("advantage of a non-terminal trajectory"));
    }
    if !(0.0..=1.0).contains(&lambda) || !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument("lambda must lie in [0,1] and gamma in (0,1]"));
    }
    let values: Vec<f64> = traj
        .steps
        .iter()
        .map(|s| params.value(featurizer, web, &s.state, &traj.instance))
        .collect();
    Ok(AdvantageEstimate {
        per_step: advantages_from_values(&values, f64::from(traj.reward), lambda, gamma),
        lambda,
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn sample(features: &[(u16, f64)], outcome: u8) -> ValueSample {
        ValueSample {
            features: features.to_vec(),
            outcome,
        }
    }

    #[test]
    fn zero_params_value_half() {
        let p = CriticParams::zeros(4);
        assert_eq!(p.value_of(&[(0, 1.0), (3, 2.0)]), 0.5);
    }

    #[test]
    fn value_in_open_unit_interval_and_monotone_in_bias() {
        let mut rng = crate::rng::stream(11, &[]);
        for _ in 0..10_000 {
            let mut p = CriticParams::zeros(8);
            for w in &mut p.weights {
                *w = rng.gen_range(-5.0..5.0);
            }
            p.bias = rng.gen_range(-5.0..5.0);
            let f: Vec<(u16, f64)> = (0..8).map(|j| (j, rng.gen_range(-1.0..1.0))).collect();
            let v = p.value_of(&f);
            assert!(v > 0.0 && v < 1.0);
            let mut q = p.clone();
            q.bias += 0.5;
            assert!(q.value_of(&f) > v);
        }
    }

    #[test]
    fn loss_at_half_is_ln2() {
        let p = CriticParams::zeros(2);
        let l = critic_loss(&p, &[sample(&[(0, 1.0)], 1)]);
        assert!((l - math::ln(2.0)).abs() < 1e-12);
    }

    #[test]
    fn loss_vanishes_for_confident_correct_predictions() {
        let mut p = CriticParams::zeros(1);
        p.weights[0] = 30.0;
        let l = critic_loss(&p, &[sample(&[(0, 1.0)], 1)]);
        assert!(l < 1e-5);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = crate::rng::stream(12, &[]);
        for _ in 0..50 {
            let mut p = CriticParams::zeros(6);
            for w in &mut p.weights {
                *w = rng.gen_range(-1.0..1.0);
            }
            p.bias = rng.gen_range(-1.0..1.0);
            let batch: Vec<ValueSample> = (0..8)
                .map(|_| {
                    let f: Vec<(u16, f64)> = (0..6).map(|j| (j, rng.gen_range(-1.0..1.0))).collect();
                    sample(&f, rng.gen_range(0..=1))
                })
                .collect();
            let (gw, gb) = critic_gradient(&p, &batch);
            let h = 1e-5;
            for j in 0..6 {
                let mut a = p.clone();
                a.weights[j] += h;
                let mut b = p.clone();
                b.weights[j] -= h;
                let fd = (critic_loss(&a, &batch) - critic_loss(&b, &batch)) / (2.0 * h);
                assert!((fd - gw[j]).abs() <= 1e-5 * fd.abs().max(1e-3), "{fd} vs {}", gw[j]);
            }
            let mut a = p.clone();
            a.bias += h;
            let mut b = p.clone();
            b.bias -= h;
            let fd = (critic_loss(&a, &batch) - critic_loss(&b, &batch)) / (2.0 * h);
            assert!((fd - gb).abs() <= 1e-5 * fd.abs().max(1e-3));
        }
    }

    fn separable(n: usize, seed: u64) -> Vec<ValueSample> {
        let mut rng = crate::rng::stream(seed, &[]);
        (0..n)
            .map(|_| {
                let x: f64 = rng.gen_range(-1.0..1.0);
                let y: f64 = rng.gen_range(-1.0..1.0);
                let label = u8::from(x + 0.5 * y > 0.0);
                // Keep a margin so 500 steps suffice.
                let x = if label == 1 { x.max(0.0) + 0.2 } else { x.min(0.0) - 0.2 };
                sample(&[(0, x), (1, y)], label)
            })
            .collect()
    }

    #[test]
    fn one_step_decreases_loss() {
        let batch = separable(100, 1);
        let p = CriticParams::zeros(2);
        let q = critic_update(&p, &batch, 1e-2).unwrap();
        assert!(critic_loss(&q, &batch) < critic_loss(&p, &batch));
        assert_eq!(q.version, 1);
    }

    #[test]
    fn fixed_point_when_predictions_match() {
        let mut p = CriticParams::zeros(1);
        p.weights[0] = 40.0;
        let batch = [sample(&[(0, 1.0)], 1), sample(&[(0, -1.0)], 0)];
        let q = critic_update(&p, &batch, 1e-2).unwrap();
        assert!((q.weights[0] - p.weights[0]).abs() < 1e-12);
        assert!((q.bias - p.bias).abs() < 1e-12);
    }

    #[test]
    fn separable_set_reaches_full_accuracy() {
        let batch = separable(100, 2);
        let mut p = CriticParams::zeros(2);
        for _ in 0..500 {
            p = critic_update(&p, &batch, 1.0).unwrap();
        }
        let correct = batch
            .iter()
            .filter(|s| u8::from(p.value_of(&s.features) > 0.5) == s.outcome)
            .count();
        assert_eq!(correct, batch.len());
    }

    #[test]
    fn worked_advantage_example() {
        // t has two steps to go: values [V(s_t), V(s_{t+1}), V(s_T)].
        let a = advantages_from_values(&[0.5, 0.8, 0.3], 1.0, 0.5, 0.9);
        assert!((a[0] - 0.265).abs() <= 1e-12, "{}", a[0]);
    }

    #[test]
    fn lambda_endpoints_and_terminal_collapse() {
        let values = [0.2, 0.7, 0.4, 0.9];
        for r in [0.0, 1.0] {
            let td = advantages_from_values(&values, r, 1.0, 0.9);
            let mc = advantages_from_values(&values, r, 0.0, 0.9);
            for t in 0..3 {
                assert!((td[t] - (0.9 * values[t + 1] - values[t])).abs() <= 1e-12);
                let k = (3 - t) as i32;
                assert!((mc[t] - (0.9f64.powi(k) * r - values[t])).abs() <= 1e-12);
            }
            for lambda in [0.0, 0.5, 1.0] {
                let a = advantages_from_values(&values, r, lambda, 0.9);
                assert_eq!(a[3], r - values[3]);
            }
        }
        assert_eq!(advantages_from_values(&[0.0; 5], 0.0, 0.5, 0.9), alloc::vec![0.0; 5]);
    }
}
