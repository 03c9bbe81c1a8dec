//! Run configuration and its flat `key = value` file format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Webrl,
    Sft,
    FilteredBc,
    Awr,
    ReinforceBaseline,
    KlDirection,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Webrl,
        Method::Sft,
        Method::FilteredBc,
        Method::Awr,
        Method::ReinforceBaseline,
        Method::KlDirection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Webrl => "webrl",
            Method::Sft => "sft",
            Method::FilteredBc => "filtered_bc",
            Method::Awr => "awr",
            Method::ReinforceBaseline => "reinforce_baseline",
            Method::KlDirection => "kl_direction",
        }
    }

    /// Offline baselines train once, on the first phase's interaction data.
    pub fn is_offline(self) -> bool {
        matches!(self, Method::FilteredBc | Method::Awr)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ConfigError::BadValue {
                key: "method".into(),
                value: s.into(),
            })
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("invalid config: {0}")]
    Invalid(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub phases: usize,
    pub tasks_per_phase: usize,
    pub rollouts_per_task: usize,
    pub beta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub perplexity_band: (f64, f64),
    pub critic_band: (f64, f64),
    pub temperature: f64,
    pub horizon: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub lr_sft: f64,
    pub actor_epochs: usize,
    pub critic_epochs: usize,
    pub sft_epochs: usize,
    /// Epochs of the one-off update made by the offline baselines.
    pub offline_epochs: usize,
    pub awr_beta: f64,
    /// Accepted for compatibility; filtered BC keeps reward-1 trajectories.
    pub filtered_bc_percentile: f64,
    pub method: Method,
    pub use_replay: bool,
    pub critic_uses_replay: bool,
    pub store_failed_in_replay: bool,
    pub use_curriculum: bool,
    pub replay_capacity: usize,
    pub sft_tasks: usize,
    /// Fraction of the seed pool that gets an oracle demonstration.
    pub sft_demo_fraction: f64,
    pub eval_tasks: usize,
    pub orm_examples: usize,
    pub orm_lr: f64,
    pub orm_epochs: usize,
    pub curriculum_rounds: usize,
    pub mutation_weights: (f64, f64, f64, f64),
    pub feature_dim: usize,
    pub action_slots: usize,
    /// 1 runs rollouts on the calling thread; anything else uses rayon.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            phases: 8,
            tasks_per_phase: 64,
            rollouts_per_task: 1,
            beta: 0.1,
            lambda: 0.5,
            gamma: 1.0,
            perplexity_band: webrl_core::replay::DEFAULT_BAND,
            critic_band: webrl_core::curriculum::DEFAULT_CRITIC_BAND,
            temperature: 1.0,
            horizon: webrl_core::synthweb::DEFAULT_HORIZON,
            lr_actor: 6.0,
            lr_critic: 1.0,
            lr_sft: 2.0,
            actor_epochs: 50,
            critic_epochs: 20,
            sft_epochs: 200,
            offline_epochs: 3,
            awr_beta: 0.2,
            filtered_bc_percentile: 70.0,
            method: Method::Webrl,
            use_replay: true,
            critic_uses_replay: true,
            store_failed_in_replay: false,
            use_curriculum: true,
            replay_capacity: webrl_core::replay::DEFAULT_CAPACITY,
            sft_tasks: 200,
            sft_demo_fraction: 0.15,
            eval_tasks: 100,
            orm_examples: 2000,
            orm_lr: 1.0,
            orm_epochs: 300,
            curriculum_rounds: 20,
            mutation_weights: (0.4, 0.3, 0.15, 0.15),
            feature_dim: webrl_core::model::DEFAULT_DIM,
            action_slots: webrl_core::model::DEFAULT_SLOTS,
            threads: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
    })
}

fn parse_list(key: &str, value: &str, n: usize) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<f64> = value
        .split(',')
        .map(|p| parse::<f64>(key, p.trim()))
        .collect::<Result<_, _>>()?;
    if parts.len() != n {
        return Err(ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
        });
    }
    Ok(parts)
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
        }),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "seed" => self.seed = parse(key, v)?,
            "phases" => self.phases = parse(key, v)?,
            "tasks_per_phase" => self.tasks_per_phase = parse(key, v)?,
            "rollouts_per_task" => self.rollouts_per_task = parse(key, v)?,
            "beta" => self.beta = parse(key, v)?,
            "lambda" => self.lambda = parse(key, v)?,
            "gamma" => self.gamma = parse(key, v)?,
            "perplexity_band" => {
                let p = parse_list(key, v, 2)?;
                self.perplexity_band = (p[0], p[1]);
            }
            "perplexity_low" => self.perplexity_band.0 = parse(key, v)?,
            "perplexity_high" => self.perplexity_band.1 = parse(key, v)?,
            "critic_band" => {
                let p = parse_list(key, v, 2)?;
                self.critic_band = (p[0], p[1]);
            }
            "critic_low" => self.critic_band.0 = parse(key, v)?,
            "critic_high" => self.critic_band.1 = parse(key, v)?,
            "temperature" => self.temperature = parse(key, v)?,
            "horizon" => self.horizon = parse(key, v)?,
            "lr_actor" => self.lr_actor = parse(key, v)?,
            "lr_critic" => self.lr_critic = parse(key, v)?,
            "lr_sft" => self.lr_sft = parse(key, v)?,
            "actor_epochs" => self.actor_epochs = parse(key, v)?,
            "critic_epochs" => self.critic_epochs = parse(key, v)?,
            "sft_epochs" => self.sft_epochs = parse(key, v)?,
            "offline_epochs" => self.offline_epochs = parse(key, v)?,
            "awr_beta" => self.awr_beta = parse(key, v)?,
            "filtered_bc_percentile" => self.filtered_bc_percentile = parse(key, v)?,
            "method" => self.method = v.parse()?,
            "use_replay" => self.use_replay = parse_bool(key, v)?,
            "critic_uses_replay" => self.critic_uses_replay = parse_bool(key, v)?,
            "store_failed_in_replay" => self.store_failed_in_replay = parse_bool(key, v)?,
            "use_curriculum" => self.use_curriculum = parse_bool(key, v)?,
            "replay_capacity" => self.replay_capacity = parse(key, v)?,
            "sft_tasks" => self.sft_tasks = parse(key, v)?,
            "sft_demo_fraction" => self.sft_demo_fraction = parse(key, v)?,
            "eval_tasks" => self.eval_tasks = parse(key, v)?,
            "orm_examples" => self.orm_examples = parse(key, v)?,
            "orm_lr" => self.orm_lr = parse(key, v)?,
            "orm_epochs" => self.orm_epochs = parse(key, v)?,
            "curriculum_rounds" => self.curriculum_rounds = parse(key, v)?,
            "mutation_weights" => {
                let p = parse_list(key, v, 4)?;
                self.mutation_weights = (p[0], p[1], p[2], p[3]);
            }
            "feature_dim" => self.feature_dim = parse(key, v)?,
            "action_slots" => self.action_slots = parse(key, v)?,
            "threads" => self.threads = parse(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// Renders every field; `from_text(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let (m0, m1, m2, m3) = self.mutation_weights;
        let lines = [
            format!("seed = {}", self.seed),
            format!("phases = {}", self.phases),
            format!("tasks_per_phase = {}", self.tasks_per_phase),
            format!("rollouts_per_task = {}", self.rollouts_per_task),
            format!("beta = {:?}", self.beta),
            format!("lambda = {:?}", self.lambda),
            format!("gamma = {:?}", self.gamma),
            format!("perplexity_band = {:?}, {:?}", self.perplexity_band.0, self.perplexity_band.1),
            format!("critic_band = {:?}, {:?}", self.critic_band.0, self.critic_band.1),
            format!("temperature = {:?}", self.temperature),
            format!("horizon = {}", self.horizon),
            format!("lr_actor = {:?}", self.lr_actor),
            format!("lr_critic = {:?}", self.lr_critic),
            format!("lr_sft = {:?}", self.lr_sft),
            format!("actor_epochs = {}", self.actor_epochs),
            format!("critic_epochs = {}", self.critic_epochs),
            format!("sft_epochs = {}", self.sft_epochs),
            format!("offline_epochs = {}", self.offline_epochs),
            format!("awr_beta = {:?}", self.awr_beta),
            format!("filtered_bc_percentile = {:?}", self.filtered_bc_percentile),
            format!("method = {}", self.method),
            format!("use_replay = {}", self.use_replay),
            format!("critic_uses_replay = {}", self.critic_uses_replay),
            format!("store_failed_in_replay = {}", self.store_failed_in_replay),
            format!("use_curriculum = {}", self.use_curriculum),
            format!("replay_capacity = {}", self.replay_capacity),
            format!("sft_tasks = {}", self.sft_tasks),
            format!("sft_demo_fraction = {:?}", self.sft_demo_fraction),
            format!("eval_tasks = {}", self.eval_tasks),
            format!("orm_examples = {}", self.orm_examples),
            format!("orm_lr = {:?}", self.orm_lr),
            format!("orm_epochs = {}", self.orm_epochs),
            format!("curriculum_rounds = {}", self.curriculum_rounds),
            format!("mutation_weights = {m0:?}, {m1:?}, {m2:?}, {m3:?}"),
            format!("feature_dim = {}", self.feature_dim),
            format!("action_slots = {}", self.action_slots),
            format!("threads = {}", self.threads),
        ];
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let (pl, ph) = self.perplexity_band;
        let (cl, ch) = self.critic_band;
        if self.phases < 1 || self.tasks_per_phase < 1 || self.rollouts_per_task < 1 {
            return Err(ConfigError::Invalid("phases, tasks_per_phase and rollouts_per_task must be at least 1"));
        }
        if !(pl >= 1.0 && pl < ph) {
            return Err(ConfigError::Invalid("perplexity band must satisfy 1 <= low < high"));
        }
        if !(0.0..=1.0).contains(&cl) || !(0.0..=1.0).contains(&ch) || cl >= ch {
            return Err(ConfigError::Invalid("critic band must satisfy 0 <= low < high <= 1"));
        }
        if !(self.beta > 0.0 && self.awr_beta > 0.0 && self.temperature > 0.0) {
            return Err(ConfigError::Invalid("beta, awr_beta and temperature must be positive"));
        }
        if !(0.0..=1.0).contains(&self.lambda) || !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(ConfigError::Invalid("lambda must lie in [0,1] and gamma in (0,1]"));
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0 && self.lr_sft > 0.0 && self.orm_lr > 0.0) {
            return Err(ConfigError::Invalid("learning rates must be positive"));
        }
        if self.horizon < 1 || self.sft_tasks < 1 || self.eval_tasks < 1 {
            return Err(ConfigError::Invalid("horizon, sft_tasks and eval_tasks must be at least 1"));
        }
        if self.action_slots < 1 || self.feature_dim < 64 {
            return Err(ConfigError::Invalid("feature_dim must be at least 64 and action_slots at least 1"));
        }
        if !(0.0..=1.0).contains(&self.sft_demo_fraction) {
            return Err(ConfigError::Invalid("sft_demo_fraction must lie in [0,1]"));
        }
        Ok(())
    }

    pub fn mutation_weights(&self) -> webrl_core::curriculum::MutationWeights {
        let (param_swap, sibling_shift, compose, simplify) = self.mutation_weights;
        webrl_core::curriculum::MutationWeights {
            param_swap,
            sibling_shift,
            compose,
            simplify,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!((c.phases, c.tasks_per_phase, c.horizon), (8, 64, 15));
        assert_eq!(c.beta, 0.1);
        assert_eq!((c.lambda, c.gamma), (0.5, 1.0));
    }

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.seed = 17;
        c.method = Method::KlDirection;
        c.perplexity_band = (2.0, f64::INFINITY);
        c.use_curriculum = false;
        let back = RunConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn comments_blank_lines_and_errors() {
        let c = RunConfig::from_text("# run\n\nseed = 3  # trailing\nmethod = awr\n").unwrap();
        assert_eq!((c.seed, c.method), (3, Method::Awr));
        assert!(matches!(RunConfig::from_text("nope = 1"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(RunConfig::from_text("seed 3"), Err(ConfigError::Syntax { line: 1 })));
        assert!(matches!(RunConfig::from_text("phases = 0"), Err(ConfigError::Invalid(_))));
        assert!(RunConfig::from_text("critic_band = 0.8, 0.2").is_err());
        assert!(RunConfig::from_text("method = ppo").is_err());
    }
}
