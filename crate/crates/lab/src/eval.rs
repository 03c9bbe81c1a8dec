//! Greedy held-out evaluation with ground-truth scoring.

use serde::{Deserialize, Serialize};

use webrl_core::model::PolicyParams;
use webrl_core::rng::stream;
use webrl_core::rollout::{rollout, Sampling};
use webrl_core::synthweb::{ground_truth_reward, SynthWeb, TaskInstance};

use crate::par::par_map;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalTask {
    pub instance: TaskInstance,
    pub oracle_len: usize,
    pub requirements: usize,
}

/// Successes and totals for one bucket.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub success: usize,
    pub total: usize,
}

impl Bucket {
    pub fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.success as f64 / self.total as f64)
    }
}

pub const LENGTH_BUCKETS: [&str; 4] = ["1-3", "4-6", "7-9", "10+"];
pub const REQUIREMENT_BUCKETS: [&str; 3] = ["1", "2", "3+"];

pub fn length_bucket(len: usize) -> usize {
    match len {
        0..=3 => 0,
        4..=6 => 1,
        7..=9 => 2,
        _ => 3,
    }
}

pub fn requirement_bucket(n: usize) -> usize {
    n.clamp(1, 3) - 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub overall: f64,
    pub by_length: [Bucket; 4],
    pub by_requirements: [Bucket; 3],
    pub outcomes: Vec<u8>,
}

/// Rolls `policy` out greedily on every task. Panics on an empty set.
pub fn evaluate(web: &SynthWeb, policy: &PolicyParams, tasks: &[EvalTask], threads: usize) -> EvalResult {
    assert!(!tasks.is_empty(), "evaluation needs at least one task");
    let outcomes: Vec<u8> = par_map(threads, tasks, |t| {
        // Greedy rollouts never draw from the stream.
        let mut rng = stream(0, &[]);
        rollout(web, policy, &t.instance, Sampling::Greedy, &mut rng)
            .and_then(|ep| ground_truth_reward(web, &ep.steps, &ep.instance, ep.terminal))
            .unwrap_or(0)
    });
    score(tasks, outcomes)
}

pub fn score(tasks: &[EvalTask], outcomes: Vec<u8>) -> EvalResult {
    let mut by_length = [Bucket::default(); 4];
    let mut by_requirements = [Bucket::default(); 3];
    for (t, &o) in tasks.iter().zip(&outcomes) {
        let s = usize::from(o);
        let b = &mut by_length[length_bucket(t.oracle_len)];
        b.success += s;
        b.total += 1;
        let b = &mut by_requirements[requirement_bucket(t.requirements)];
        b.success += s;
        b.total += 1;
    }
    let wins: usize = outcomes.iter().map(|&o| usize::from(o)).sum();
    EvalResult {
        overall: wins as f64 / tasks.len() as f64,
        by_length,
        by_requirements,
        outcomes,
    }
}
