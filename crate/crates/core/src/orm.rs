//! Outcome reward model: a logistic classifier that judges a finished
//! trajectory from the instruction, the action history and the final state
//! alone. Intermediate states are never looked at.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::synthweb::{Action, ActionKind, EnvState, SynthWeb, TaskInstance, Trajectory};
use crate::{Error, Result};

const TEMPLATE_BLOCK: usize = 24;
const PAGE_BLOCK: usize = 32;
const KIND_BLOCK: usize = ActionKind::ALL.len();
const MAX_REQUIREMENTS: usize = 3;
const PREDICATE_BLOCK: usize = MAX_REQUIREMENTS + 6;

/// Length of [`orm_featurize`] output.
pub const D_ORM: usize = TEMPLATE_BLOCK + PAGE_BLOCK + KIND_BLOCK + PREDICATE_BLOCK;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrmParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrmExample {
    pub instance: TaskInstance,
    pub history: Vec<Action>,
    pub final_state: EnvState,
    pub label: u8,
}

impl OrmExample {
    pub fn from_trajectory(web: &SynthWeb, traj: &Trajectory, label: u8) -> Self {
        Self {
            instance: traj.instance.clone(),
            history: traj.history(),
            final_state: traj.final_state(web),
            label,
        }
    }
}

/// Template one-hot, final-page one-hot, normalized bag of action kinds,
/// then predicate bits: whether each bound requirement holds in the final
/// state, whether the history ends with `Exit`, and a few scratch flags.
pub fn orm_featurize(web: &SynthWeb, instance: &TaskInstance, history: &[Action], final_state: &EnvState) -> Vec<f64> {
    let mut x = vec![0.0; D_ORM];
    x[instance.template.0 as usize % TEMPLATE_BLOCK] = 1.0;
    let mut o = TEMPLATE_BLOCK;
    x[o + final_state.page.0 as usize % PAGE_BLOCK] = 1.0;
    o += PAGE_BLOCK;
    let norm = web.horizon.max(1) as f64;
    for a in history {
        x[o + a.kind.index()] += 1.0 / norm;
    }
    o += KIND_BLOCK;
    if let Ok(t) = web.template(instance.template) {
        for (i, (r, &v)) in t.requirements.iter().zip(&instance.params).take(MAX_REQUIREMENTS).enumerate() {
            x[o + i] = f64::from(u8::from(r.satisfied(final_state, v)));
        }
    }
    o += MAX_REQUIREMENTS;
    let s = &final_state.scratch;
    let flags = [
        history.last().is_some_and(|a| a.is_exit()),
        !s.cart.is_empty(),
        !s.orders.is_empty(),
        s.query.is_some(),
        !s.settings.is_empty(),
        s.scrolled,
    ];
    for (i, f) in flags.into_iter().enumerate() {
        x[o + i] = f64::from(u8::from(f));
    }
    x
}

impl OrmParams {
    pub fn zeros() -> Self {
        Self {
            weights: vec![0.0; D_ORM],
            bias: 0.0,
        }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        math::logistic(self.logit(x))
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }
}

/// 1 iff the predicted success probability is strictly above 0.5.
pub fn judge_features(params: &OrmParams, x: &[f64]) -> u8 {
    u8::from(params.score(x) > 0.5)
}

pub fn judge(params: &OrmParams, web: &SynthWeb, instance: &TaskInstance, history: &[Action], final_state: &EnvState) -> u8 {
    judge_features(params, &orm_featurize(web, instance, history, final_state))
}

pub fn judge_trajectory(params: &OrmParams, web: &SynthWeb, traj: &Trajectory) -> u8 {
    judge(params, web, &traj.instance, &traj.history(), &traj.final_state(web))
}

/// Mean binary cross-entropy over pre-featurized examples.
pub fn orm_loss(params: &OrmParams, xs: &[Vec<f64>], labels: &[u8]) -> f64 {
    let total: f64 = xs
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let z = params.logit(x);
            // log(1 + exp(-z)) for y = 1, log(1 + exp(z)) for y = 0, stably.
            let m = if y == 1 { -z } else { z };
            m.max(0.0) + math::ln(1.0 + math::exp(-m.abs()))
        })
        .sum();
    total / xs.len().max(1) as f64
}

/// Full-batch gradient descent on [`orm_loss`] from zero weights.
pub fn train_orm_features(xs: &[Vec<f64>], labels: &[u8], lr: f64, epochs: usize) -> Result<OrmParams> {
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::SingleClass);
    }
    if !(lr > 0.0) {
        return Err(Error::InvalidArgument("learning rate must be positive"));
    }
    let dim = xs.first().map_or(0, Vec::len);
    let mut p = OrmParams {
        weights: vec![0.0; dim],
        bias: 0.0,
    };
    let n = xs.len() as f64;
    for _ in 0..epochs {
        let mut gw = vec![0.0; dim];
        let mut gb = 0.0;
        for (x, &y) in xs.iter().zip(labels) {
            let e = (p.score(x) - f64::from(y)) / n;
            for (g, v) in gw.iter_mut().zip(x) {
                *g += e * v;
            }
            gb += e;
        }
        for (w, g) in p.weights.iter_mut().zip(&gw) {
            *w -= lr * g;
        }
        p.bias -= lr * gb;
    }
    if !p.is_finite() {
        return Err(Error::Divergence(f64::NAN));
    }
    Ok(p)
}

pub fn train_orm(web: &SynthWeb, dataset: &[OrmExample], lr: f64, epochs: usize) -> Result<OrmParams> {
    let xs: Vec<Vec<f64>> = dataset
        .iter()
        .map(|e| orm_featurize(web, &e.instance, &e.history, &e.final_state))
        .collect();
    let labels: Vec<u8> = dataset.iter().map(|e| e.label).collect();
    train_orm_features(&xs, &labels, lr, epochs)
}

/// Fraction of examples whose judgement equals the label.
pub fn evaluate_orm(params: &OrmParams, web: &SynthWeb, labeled: &[OrmExample]) -> Result<f64> {
    if labeled.is_empty() {
        return Err(Error::InvalidArgument("no labeled examples"));
    }
    let correct = labeled
        .iter()
        .filter(|e| judge(params, web, &e.instance, &e.history, &e.final_state) == e.label)
        .count();
    Ok(correct as f64 / labeled.len() as f64)
}
