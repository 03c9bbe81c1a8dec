//! The training loop: SFT bootstrap, ORM fit, then curriculum phases of
//! rollout, labeling, critic and actor updates, and bookkeeping.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

use webrl_core::critic::{self, CriticParams, ValueSample};
use webrl_core::curriculum::{self, FailureSet, FillConfig};
use webrl_core::learner::{self, ItemSource, TrainReport, UpdateBatch, UpdateItem};
use webrl_core::model::{Featurizer, PolicyParams};
use webrl_core::orm::{self, OrmExample, OrmParams};
use webrl_core::replay::{self, ReplayBuffer};
use webrl_core::rng::stream;
use webrl_core::rollout::{perturbed_plan, replay_actions, rollout, Sampling};
use webrl_core::synthweb::{
    ground_truth_reward, oracle_solve, Episode, Origin, RewardSource, SynthWeb, TaskInstance, TaskKey,
    Trajectory,
};

use crate::config::{Method, RunConfig};
use crate::eval::{evaluate, EvalResult, EvalTask};
use crate::par::par_map;
use crate::persist;

// Stream tags; every random draw in a run is keyed by one of these.
const TAG_POOL: u64 = 1;
const TAG_EVAL: u64 = 2;
const TAG_SFT_ROLLOUT: u64 = 3;
const TAG_ORM: u64 = 4;
const TAG_CURRICULUM: u64 = 5;
const TAG_ROLLOUT: u64 = 6;
const TAG_REPLAY: u64 = 7;

/// Substitution rate for the perturbed-oracle behavior in ORM data.
const ORM_PLAN_NOISE: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    pub phase: u32,
    /// Greedy success rate on the held-out evaluation set, ground truth.
    pub success_rate_gt: f64,
    /// Fraction of this phase's rollouts the ORM judged successful.
    pub success_rate_orm: f64,
    pub n_success: usize,
    pub n_fail: usize,
    pub buffer_size: usize,
    pub train_report: TrainReport,
    pub n_tasks: usize,
    pub mean_requirements: f64,
    pub policy_version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrmReport {
    pub n_train: usize,
    pub n_heldout: usize,
    pub train_accuracy: f64,
    pub heldout_accuracy: f64,
    /// Accuracy of always predicting the held-out majority label.
    pub majority_baseline: f64,
}

/// Tasks emitted for one phase with their initial-state critic values at
/// emission time.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTasks {
    pub phase: u32,
    pub tasks: Vec<TaskInstance>,
    pub initial_values: Vec<f64>,
    pub from_curriculum: bool,
}

/// Everything a run carries from phase to phase.
pub struct Lab {
    pub config: RunConfig,
    pub web: SynthWeb,
    pub featurizer: Featurizer,
    pub actor: PolicyParams,
    pub critic: CriticParams,
    pub orm: OrmParams,
    pub buffer: ReplayBuffer,
    pub failures: FailureSet,
    /// Keys of every seed or emitted instance.
    pub seen: BTreeSet<TaskKey>,
    pub seed_pool: Vec<TaskInstance>,
    pub eval_set: Vec<EvalTask>,
    pub phase_tasks: Vec<PhaseTasks>,
    pub results: Vec<PhaseResult>,
    pub sft_eval: Option<EvalResult>,
    pub orm_report: Option<OrmReport>,
    /// Labeled rollouts of the latest phase.
    pub last_rollouts: Vec<Trajectory>,
    feasible_cache: HashMap<TaskKey, bool>,
}

fn key_of(web: &SynthWeb, t: &TaskInstance) -> Result<TaskKey> {
    Ok(t.key(web.template(t.template)?))
}

fn mean_requirements(web: &SynthWeb, tasks: &[TaskInstance]) -> f64 {
    if tasks.is_empty() {
        return 0.0;
    }
    let total: usize = tasks
        .iter()
        .filter_map(|t| web.template(t.template).ok())
        .map(|t| t.requirement_count())
        .sum();
    total as f64 / tasks.len() as f64
}

impl Lab {
    /// Builds the site, the seed pool and the held-out evaluation set.
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let mut web = SynthWeb::default_site(config.seed);
        web.horizon = config.horizon;
        let featurizer = Featurizer::new(config.feature_dim, config.action_slots);
        let mut lab = Self {
            actor: PolicyParams::zeros(config.action_slots, config.feature_dim),
            critic: CriticParams::zeros(config.feature_dim),
            orm: OrmParams::zeros(),
            buffer: ReplayBuffer::new(config.replay_capacity).storing_failures(config.store_failed_in_replay),
            failures: FailureSet::new(),
            seen: BTreeSet::new(),
            seed_pool: Vec::new(),
            eval_set: Vec::new(),
            phase_tasks: Vec::new(),
            results: Vec::new(),
            sft_eval: None,
            orm_report: None,
            last_rollouts: Vec::new(),
            feasible_cache: HashMap::new(),
            config,
            web,
            featurizer,
        };
        lab.build_task_sets()?;
        Ok(lab)
    }

    fn build_task_sets(&mut self) -> Result<()> {
        let web = &self.web;
        let n_templates = web.templates.len();
        let mut rng = stream(self.config.seed, &[TAG_POOL]);
        let mut attempts = 0;
        while self.seed_pool.len() < self.config.sft_tasks && attempts < 100 * self.config.sft_tasks {
            attempts += 1;
            let t = &web.templates.templates[rng.gen_range(0..n_templates)];
            let inst = t.instantiate(&web.graph, t.sample_params(&mut rng), Origin::Seed);
            if self.seen.insert(inst.key(t)) {
                self.seed_pool.push(inst);
            }
        }
        // Held-out set: feasible, unseen, templates visited round-robin.
        let mut rng = stream(self.config.seed, &[TAG_EVAL]);
        let mut eval_keys = BTreeSet::new();
        let mut attempts = 0;
        while self.eval_set.len() < self.config.eval_tasks && attempts < 200 * self.config.eval_tasks {
            let t = &web.templates.templates[attempts % n_templates];
            attempts += 1;
            let inst = t.instantiate(&web.graph, t.sample_params(&mut rng), Origin::Seed);
            let key = inst.key(t);
            if self.seen.contains(&key) || eval_keys.contains(&key) {
                continue;
            }
            if let Some(plan) = oracle_solve(web, &inst) {
                eval_keys.insert(key);
                self.eval_set.push(EvalTask {
                    oracle_len: plan.len(),
                    requirements: t.requirement_count(),
                    instance: inst,
                });
            }
        }
        // Evaluation tasks are never bred or trained on.
        self.seen.extend(eval_keys);
        if self.seed_pool.is_empty() || self.eval_set.is_empty() {
            bail!("could not build the seed pool or the evaluation set");
        }
        Ok(())
    }

    fn sampling(&self) -> Sampling {
        Sampling::Sample {
            temperature: self.config.temperature,
        }
    }

    /// One sampled rollout per (task, repeat), each on its own stream.
    fn rollouts(&self, policy: &PolicyParams, tasks: &[TaskInstance], tag: u64, phase: u32) -> Result<Vec<Episode>> {
        let jobs: Vec<(usize, usize)> = (0..tasks.len())
            .flat_map(|i| (0..self.config.rollouts_per_task).map(move |j| (i, j)))
            .collect();
        let sampling = self.sampling();
        let seed = self.config.seed;
        par_map(self.config.threads, &jobs, |&(i, j)| {
            let mut rng = stream(seed, &[tag, u64::from(phase), i as u64, j as u64]);
            rollout(&self.web, policy, &tasks[i], sampling, &mut rng)
        })
        .into_iter()
        .collect::<webrl_core::Result<Vec<_>>>()
        .map_err(Into::into)
    }

    fn ground_truth(&self, ep: Episode) -> Result<Trajectory> {
        let r = ground_truth_reward(&self.web, &ep.steps, &ep.instance, ep.terminal)?;
        Ok(ep.label(r, RewardSource::GroundTruth))
    }

    pub fn evaluate(&self) -> EvalResult {
        evaluate(&self.web, &self.actor, &self.eval_set, self.config.threads)
    }

    fn value_samples(&self, trajs: &[Trajectory]) -> Vec<ValueSample> {
        trajs
            .iter()
            .flat_map(|t| critic::value_samples(&self.featurizer, &self.web, t))
            .collect()
    }

    fn fit_critic(&mut self, samples: &[ValueSample], epochs: usize) -> Result<()> {
        if samples.is_empty() {
            return Ok(());
        }
        for _ in 0..epochs {
            self.critic = critic::critic_update(&self.critic, samples, self.config.lr_critic)?;
        }
        Ok(())
    }

    /// Oracle demonstrations, behavior cloning, SFT rollouts on the seed
    /// pool, then buffer, failure set and critic initialization.
    pub fn run_sft_stage(&mut self) -> Result<f64> {
        let cfg = self.config.clone();
        let n_demo = ((self.seed_pool.len() as f64) * cfg.sft_demo_fraction).round() as usize;
        let plans = par_map(cfg.threads, &self.seed_pool[..n_demo], |t| oracle_solve(&self.web, t));
        let mut demo_trajs = Vec::new();
        let mut demos = Vec::new();
        for (task, plan) in self.seed_pool.iter().zip(plans) {
            let Some(plan) = plan else { continue };
            let ep = replay_actions(&self.web, task, &plan)?;
            let traj = ep.label(1, RewardSource::GroundTruth);
            demos.extend(learner::trajectory_decisions(&self.featurizer, &self.web, &traj)?);
            demo_trajs.push(traj);
        }
        if demo_trajs.is_empty() && n_demo > 0 {
            bail!("no oracle-solvable seed task; check the configuration");
        }
        if !demos.is_empty() {
            self.actor = learner::sft_update(&self.actor, &demos, cfg.lr_sft, cfg.sft_epochs)?;
        }
        let pool = self.seed_pool.clone();
        let episodes = self.rollouts(&self.actor.clone(), &pool, TAG_SFT_ROLLOUT, 0)?;
        let mut rollouts = Vec::with_capacity(episodes.len());
        for ep in episodes {
            rollouts.push(self.ground_truth(ep)?);
        }
        let successes = rollouts.iter().filter(|t| t.reward == 1).count();
        for t in demo_trajs {
            self.buffer.insert(t, 0)?;
        }
        for t in &rollouts {
            if t.reward == 1 {
                self.buffer.insert(t.clone(), 0)?;
            } else {
                self.failures.insert(&self.web, t.instance.clone(), 0)?;
            }
        }
        let samples = self.value_samples(&rollouts);
        self.fit_critic(&samples, cfg.critic_epochs * 10)?;
        self.last_rollouts = rollouts;
        let eval = self.evaluate();
        let sr = eval.overall;
        self.results.push(PhaseResult {
            phase: 0,
            success_rate_gt: sr,
            success_rate_orm: successes as f64 / pool.len() as f64,
            n_success: successes,
            n_fail: pool.len() - successes,
            buffer_size: self.buffer.len(),
            train_report: TrainReport::default(),
            n_tasks: pool.len(),
            mean_requirements: mean_requirements(&self.web, &pool),
            policy_version: self.actor.version,
        });
        self.sft_eval = Some(eval);
        Ok(sr)
    }

    /// Ground-truth-labeled rollouts of mixed policies on seed tasks and
    /// their parameter variants; a 70/30 split, trained on the 70.
    pub fn build_orm_dataset(&self) -> Result<Vec<OrmExample>> {
        let cfg = &self.config;
        let mut rng = stream(cfg.seed, &[TAG_ORM]);
        let mut tasks: Vec<TaskInstance> = Vec::new();
        while tasks.len() < cfg.orm_examples {
            let seed = &self.seed_pool[rng.gen_range(0..self.seed_pool.len())];
            if rng.gen_bool(0.5) {
                tasks.push(seed.clone());
            } else if let Some(v) = curriculum::mutate(&self.web, seed, curriculum::MutationKind::ParamSwap, 0, &mut rng) {
                tasks.push(v);
            }
        }
        let zero = PolicyParams::zeros(cfg.action_slots, cfg.feature_dim);
        let jobs: Vec<usize> = (0..tasks.len()).collect();
        let seed = cfg.seed;
        let examples = par_map(cfg.threads, &jobs, |&i| -> webrl_core::Result<OrmExample> {
            let mut rng = stream(seed, &[TAG_ORM, 1, i as u64]);
            // Behaviors: the SFT policy at two temperatures, a uniform
            // policy, and the oracle plan with random substitutions.
            let sampled = |policy: &PolicyParams, temperature: f64, rng: &mut _| {
                rollout(&self.web, policy, &tasks[i], Sampling::Sample { temperature }, rng)
            };
            let ep = match i % 4 {
                0 => sampled(&self.actor, 1.0, &mut rng)?,
                1 => sampled(&self.actor, 0.5, &mut rng)?,
                2 => sampled(&zero, 1.0, &mut rng)?,
                _ => match oracle_solve(&self.web, &tasks[i]) {
                    Some(plan) => perturbed_plan(&self.web, &tasks[i], &plan, ORM_PLAN_NOISE, &mut rng)?,
                    None => sampled(&self.actor, 1.0, &mut rng)?,
                },
            };
            let r = ground_truth_reward(&self.web, &ep.steps, &ep.instance, ep.terminal)?;
            let traj = ep.label(r, RewardSource::GroundTruth);
            Ok(OrmExample::from_trajectory(&self.web, &traj, r))
        });
        examples.into_iter().collect::<webrl_core::Result<_>>().map_err(Into::into)
    }

    pub fn train_orm(&mut self) -> Result<OrmReport> {
        let data = self.build_orm_dataset()?;
        let n_train = data.len() * 7 / 10;
        let (train, heldout) = data.split_at(n_train);
        self.orm = orm::train_orm(&self.web, train, self.config.orm_lr, self.config.orm_epochs)?;
        let ones = heldout.iter().filter(|e| e.label == 1).count() as f64;
        let report = OrmReport {
            n_train,
            n_heldout: heldout.len(),
            train_accuracy: orm::evaluate_orm(&self.orm, &self.web, train)?,
            heldout_accuracy: orm::evaluate_orm(&self.orm, &self.web, heldout)?,
            majority_baseline: (ones / heldout.len() as f64).max(1.0 - ones / heldout.len() as f64),
        };
        self.orm_report = Some(report.clone());
        Ok(report)
    }

    /// Both curriculum filters. The critic band is cheap and runs first;
    /// oracle verdicts are cached by task key and computed in parallel.
    fn filter_candidates(&mut self, candidates: Vec<TaskInstance>) -> Vec<TaskInstance> {
        let (lo, hi) = self.config.critic_band;
        let in_band = curriculum::difficulty_filter(candidates, &self.web, &self.critic, &self.featurizer, lo, hi);
        let keyed: Vec<(TaskInstance, Option<TaskKey>)> = in_band
            .into_iter()
            .map(|c| {
                let k = key_of(&self.web, &c).ok();
                (c, k)
            })
            .collect();
        let unknown: Vec<&TaskInstance> = keyed
            .iter()
            .filter(|(_, k)| k.as_ref().is_some_and(|k| !self.feasible_cache.contains_key(k)))
            .map(|(c, _)| c)
            .collect();
        let verdicts = par_map(self.config.threads, &unknown, |c| oracle_solve(&self.web, c).is_some());
        for (c, ok) in unknown.iter().zip(verdicts) {
            if let Ok(k) = key_of(&self.web, c) {
                self.feasible_cache.insert(k, ok);
            }
        }
        keyed
            .into_iter()
            .filter(|(_, k)| k.as_ref().is_some_and(|k| self.feasible_cache.get(k) == Some(&true)))
            .map(|(c, _)| c)
            .collect()
    }

    fn next_tasks(&mut self, phase: u32) -> Result<PhaseTasks> {
        let reuse = !self.config.use_curriculum && phase > 1;
        if reuse {
            if let Some(first) = self.phase_tasks.first() {
                return Ok(PhaseTasks {
                    phase,
                    tasks: first.tasks.clone(),
                    initial_values: first.initial_values.clone(),
                    from_curriculum: false,
                });
            }
        }
        let fill = FillConfig {
            k: self.config.tasks_per_phase,
            max_rounds: self.config.curriculum_rounds,
            band: self.config.critic_band,
            weights: self.config.mutation_weights(),
            oversample: 4,
        };
        let mut rng = stream(self.config.seed, &[TAG_CURRICULUM, u64::from(phase)]);
        let failures = std::mem::take(&mut self.failures);
        let pool = self.seed_pool.clone();
        let web = self.web.clone();
        let mut seen = std::mem::take(&mut self.seen);
        let tasks = curriculum::fill_phase_with(&failures, &pool, &web, &fill, &mut seen, phase, &mut rng, |c| {
            self.filter_candidates(c)
        });
        self.failures = failures;
        self.seen = seen;
        let mut tasks = tasks;
        let mut from_curriculum = true;
        if tasks.is_empty() {
            // Nothing passed the filters: rerun the previous phase's tasks.
            log::warn!("phase {phase}: curriculum produced no tasks, reusing the previous set");
            from_curriculum = false;
            tasks = match self.phase_tasks.last() {
                Some(p) => p.tasks.clone(),
                None => self.seed_pool.iter().take(self.config.tasks_per_phase).cloned().collect(),
            };
        }
        let initial_values = tasks
            .iter()
            .map(|t| curriculum::initial_value(&self.web, &self.critic, &self.featurizer, t))
            .collect::<webrl_core::Result<_>>()?;
        Ok(PhaseTasks {
            phase,
            tasks,
            initial_values,
            from_curriculum,
        })
    }

    fn trajectory_items(
        &self,
        traj: &Trajectory,
        reference: &PolicyParams,
        steps: Option<&[usize]>,
        source: ItemSource,
    ) -> Result<Vec<UpdateItem>> {
        let adv = critic::advantage(&self.critic, &self.featurizer, &self.web, traj, self.config.lambda, self.config.gamma)?;
        let all: Vec<usize> = (0..traj.steps.len()).collect();
        let mut out = Vec::new();
        for &i in steps.unwrap_or(&all) {
            let s = &traj.steps[i];
            let decision = self.featurizer.decision(&self.web, &s.state, &traj.instance, s.action)?;
            out.push(UpdateItem {
                ref_log_prob: reference.log_prob_of(&decision)?,
                decision,
                advantage: adv.per_step[i],
                source,
            });
        }
        Ok(out)
    }

    /// Confidence-filtered, capped replay items with advantages under the
    /// current critic.
    fn replay_items(&self, reference: &PolicyParams, fresh: usize, phase: u32) -> Result<Vec<UpdateItem>> {
        let (lo, hi) = self.config.perplexity_band;
        let kept = replay::filter_by_confidence(&self.buffer, &self.web, reference, lo, hi)?;
        let mut rng = stream(self.config.seed, &[TAG_REPLAY, u64::from(phase)]);
        let drawn = replay::draw_capped(&kept, fresh, &mut rng);
        let mut by_entry: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for s in &drawn {
            by_entry.entry(s.entry).or_default().push(s.step);
        }
        let mut items = Vec::with_capacity(drawn.len());
        for (entry, steps) in by_entry {
            let traj = &self.buffer.get(entry).expect("filtered entry exists").trajectory;
            items.extend(self.trajectory_items(traj, reference, Some(&steps), ItemSource::Replay)?);
        }
        Ok(items)
    }

    fn replay_value_samples(items: &[UpdateItem]) -> Vec<ValueSample> {
        items
            .iter()
            .filter(|i| i.source == ItemSource::Replay)
            .map(|i| ValueSample {
                features: i.decision.features.clone(),
                outcome: 1,
            })
            .collect()
    }

    fn idle_phase(&mut self, phase: u32) -> PhaseResult {
        let eval = self.evaluate();
        let r = PhaseResult {
            phase,
            success_rate_gt: eval.overall,
            success_rate_orm: 0.0,
            n_success: 0,
            n_fail: 0,
            buffer_size: self.buffer.len(),
            train_report: TrainReport::default(),
            n_tasks: 0,
            mean_requirements: 0.0,
            policy_version: self.actor.version,
        };
        self.results.push(r);
        r
    }

    /// One curriculum phase. Methods without online updates only
    /// re-evaluate.
    pub fn run_phase(&mut self, phase: u32) -> Result<PhaseResult> {
        if phase == 0 {
            bail!("phases are numbered from 1");
        }
        let cfg = self.config.clone();
        if cfg.method == Method::Sft || (cfg.method.is_offline() && phase > 1) {
            return Ok(self.idle_phase(phase));
        }
        let tasks = self.next_tasks(phase)?;
        let reference = self.actor.clone();
        let episodes = self.rollouts(&reference, &tasks.tasks, TAG_ROLLOUT, phase)?;
        let trajs: Vec<Trajectory> = episodes
            .into_iter()
            .map(|ep| {
                let r = orm::judge(&self.orm, &self.web, &ep.instance, &ep.history(), &ep.final_state(&self.web));
                ep.label(r, RewardSource::Orm)
            })
            .collect();
        let n_success = trajs.iter().filter(|t| t.reward == 1).count();

        let mut items = Vec::new();
        for t in &trajs {
            items.extend(self.trajectory_items(t, &reference, None, ItemSource::Rollout)?);
        }
        let fresh = items.len();
        let uses_replay = cfg.use_replay && matches!(cfg.method, Method::Webrl | Method::ReinforceBaseline);
        if uses_replay {
            items.extend(self.replay_items(&reference, fresh, phase)?);
        }
        let batch = UpdateBatch { items, beta: cfg.beta };
        let (items_rollout, items_replay) = batch.counts();
        debug_assert!(items_replay <= 2 * items_rollout);

        let mut samples = self.value_samples(&trajs);
        if cfg.critic_uses_replay {
            samples.extend(Self::replay_value_samples(&batch.items));
        }
        self.fit_critic(&samples, cfg.critic_epochs)
            .with_context(|| format!("critic update in phase {phase}"))?;

        let loss_before = learner::webrl_loss(&self.actor, &batch)?;
        let grad_norm = webrl_core::math::l2_norm(&learner::webrl_gradient(&self.actor, &batch)?);
        self.actor = match cfg.method {
            Method::Webrl => learner::webrl_update(&self.actor, &batch, cfg.lr_actor, cfg.actor_epochs)?.0,
            Method::ReinforceBaseline => {
                learner::reinforce_baseline_update(&self.actor, &batch, cfg.lr_actor, cfg.actor_epochs)?
            }
            Method::KlDirection => {
                learner::kl_direction_update(&self.actor, &batch, cfg.lr_actor, cfg.beta, cfg.actor_epochs)?
            }
            Method::Awr => learner::awr_update(&self.actor, &batch, cfg.lr_actor, cfg.awr_beta, cfg.offline_epochs)?,
            Method::FilteredBc => {
                learner::filtered_bc_update(&self.actor, &self.web, &trajs, cfg.lr_actor, cfg.offline_epochs)?
            }
            Method::Sft => unreachable!("handled above"),
        };
        let loss_after = learner::webrl_loss(&self.actor, &batch)?;
        if !loss_after.is_finite() {
            bail!("phase {phase}: actor update diverged");
        }

        for t in &trajs {
            if t.reward == 1 {
                self.buffer.insert(t.clone(), phase)?;
            } else {
                self.failures.insert(&self.web, t.instance.clone(), phase)?;
                if self.buffer.stores_failures() {
                    self.buffer.insert(t.clone(), phase)?;
                }
            }
        }

        let eval = self.evaluate();
        let result = PhaseResult {
            phase,
            success_rate_gt: eval.overall,
            success_rate_orm: n_success as f64 / trajs.len().max(1) as f64,
            n_success,
            n_fail: trajs.len() - n_success,
            buffer_size: self.buffer.len(),
            train_report: TrainReport {
                loss_before,
                loss_after,
                grad_norm,
                items_rollout,
                items_replay,
            },
            n_tasks: tasks.tasks.len(),
            mean_requirements: mean_requirements(&self.web, &tasks.tasks),
            policy_version: self.actor.version,
        };
        self.phase_tasks.push(tasks);
        self.last_rollouts = trajs;
        self.results.push(result);
        Ok(result)
    }

    pub fn metrics_csv(&self) -> String {
        crate::persist::metrics_csv(&self.results)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub config: RunConfig,
    pub results: Vec<PhaseResult>,
    pub orm: OrmReport,
    pub metrics_csv: String,
    pub final_eval: EvalResult,
    pub mean_requirements_by_phase: Vec<f64>,
}

impl RunSummary {
    pub fn final_success_rate(&self) -> f64 {
        self.results.last().map_or(0.0, |r| r.success_rate_gt)
    }

    pub fn success_curve(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.success_rate_gt).collect()
    }
}

/// SFT stage, ORM fit, then `phases` curriculum phases. With `out`, every
/// artifact is written under that directory.
pub fn run_training(config: &RunConfig, out: Option<&Path>) -> Result<(Lab, RunSummary)> {
    let mut lab = Lab::new(config.clone())?;
    if let Some(dir) = out {
        persist::prepare_out_dir(dir)?;
        persist::write_site(dir, &lab.web)?;
        std::fs::write(dir.join("config.txt"), config.to_text())?;
    }
    lab.run_sft_stage()?;
    let orm = lab.train_orm()?;
    if let Some(dir) = out {
        persist::write_checkpoint(dir, "actor", 0, config.seed, &lab.actor, [lab.actor.slots, lab.actor.dim])?;
        persist::write_checkpoint(dir, "critic", 0, config.seed, &lab.critic, [1, lab.critic.dim()])?;
        persist::write_checkpoint(dir, "orm", 0, config.seed, &lab.orm, [1, lab.orm.weights.len()])?;
    }
    for phase in 1..=config.phases as u32 {
        lab.run_phase(phase).with_context(|| format!("phase {phase}"))?;
        if let Some(dir) = out {
            if let Some(tasks) = lab.phase_tasks.iter().find(|p| p.phase == phase) {
                persist::write_phase_tasks(dir, phase, &tasks.tasks)?;
            }
            persist::write_trajectories(dir, phase, &lab.last_rollouts)?;
            persist::write_checkpoint(dir, "actor", phase, config.seed, &lab.actor, [lab.actor.slots, lab.actor.dim])?;
            persist::write_checkpoint(dir, "critic", phase, config.seed, &lab.critic, [1, lab.critic.dim()])?;
        }
    }
    let metrics_csv = lab.metrics_csv();
    let final_eval = lab.evaluate();
    if let Some(dir) = out {
        std::fs::write(dir.join("metrics.csv"), &metrics_csv)?;
        persist::write_buffer(dir, &lab.buffer)?;
        persist::write_eval(dir, &final_eval)?;
        std::fs::write(dir.join("orm.json"), serde_json::to_string_pretty(&orm)?)?;
    }
    let summary = RunSummary {
        config: config.clone(),
        results: lab.results.clone(),
        orm,
        metrics_csv,
        final_eval,
        mean_requirements_by_phase: lab
            .phase_tasks
            .iter()
            .filter(|p| p.from_curriculum)
            .map(|p| mean_requirements(&lab.web, &p.tasks))
            .collect(),
    };
    Ok((lab, summary))
}
