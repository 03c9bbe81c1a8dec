//! Matched config grids for the ablation suites, run over several seeds.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Result};
use rayon::prelude::*;

use webrl_core::replay::DEFAULT_BAND;

use crate::config::{Method, RunConfig};
use crate::driver::run_training;
use crate::persist::sig6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Components,
    PerplexityBands,
    BetaSweep,
    CriticData,
    FailedReplay,
    ObjectiveCompare,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Components,
        Suite::PerplexityBands,
        Suite::BetaSweep,
        Suite::CriticData,
        Suite::FailedReplay,
        Suite::ObjectiveCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Components => "components",
            Suite::PerplexityBands => "perplexity_bands",
            Suite::BetaSweep => "beta_sweep",
            Suite::CriticData => "critic_data",
            Suite::FailedReplay => "failed_replay",
            Suite::ObjectiveCompare => "objective_compare",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match Suite::ALL.iter().find(|x| x.name() == s) {
            Some(x) => Ok(*x),
            None => {
                let names: Vec<_> = Suite::ALL.iter().map(|x| x.name()).collect();
                bail!("unknown suite `{s}`; expected one of {}", names.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Variant {
    pub name: String,
    pub config: RunConfig,
}

fn variant(name: impl Into<String>, base: &RunConfig, edit: impl FnOnce(&mut RunConfig)) -> Variant {
    let mut config = base.clone();
    edit(&mut config);
    Variant {
        name: name.into(),
        config,
    }
}

pub fn variants(suite: Suite, base: &RunConfig) -> Vec<Variant> {
    let b = base;
    match suite {
        Suite::Components => vec![
            variant("full", b, |c| c.method = Method::Webrl),
            variant("no_replay", b, |c| {
                c.method = Method::Webrl;
                c.use_replay = false;
            }),
            variant("no_kl", b, |c| c.method = Method::ReinforceBaseline),
            variant("no_kl_no_replay", b, |c| {
                c.method = Method::ReinforceBaseline;
                c.use_replay = false;
            }),
            variant("no_curriculum", b, |c| {
                c.method = Method::Webrl;
                c.use_curriculum = false;
            }),
        ],
        Suite::PerplexityBands => [
            ("1_inf", (1.0, f64::INFINITY)),
            ("1_1.053", (1.0, DEFAULT_BAND.0)),
            ("1.053_2", DEFAULT_BAND),
            ("2_inf", (DEFAULT_BAND.1, f64::INFINITY)),
        ]
        .into_iter()
        .map(|(name, band)| {
            variant(name, b, |c| {
                c.method = Method::Webrl;
                c.perplexity_band = band;
            })
        })
        .collect(),
        Suite::BetaSweep => {
            let mut out = Vec::new();
            for replay in [true, false] {
                for beta in [0.01, 0.1, 0.5, 1.0, 5.0] {
                    let tag = if replay { "replay" } else { "no_replay" };
                    out.push(variant(format!("beta={beta}/{tag}"), b, |c| {
                        c.method = Method::Webrl;
                        c.beta = beta;
                        c.use_replay = replay;
                    }));
                }
            }
            out
        }
        Suite::CriticData => vec![
            variant("critic_rollout_and_replay", b, |c| {
                c.method = Method::Webrl;
                c.critic_uses_replay = true;
            }),
            variant("critic_rollout_only", b, |c| {
                c.method = Method::Webrl;
                c.critic_uses_replay = false;
            }),
        ],
        Suite::FailedReplay => vec![
            variant("success_only", b, |c| {
                c.method = Method::Webrl;
                c.store_failed_in_replay = false;
            }),
            variant("with_failures", b, |c| {
                c.method = Method::Webrl;
                c.store_failed_in_replay = true;
            }),
        ],
        Suite::ObjectiveCompare => vec![
            variant("mse_with_replay", b, |c| {
                c.method = Method::Webrl;
                c.use_replay = true;
            }),
            variant("reverse_kl_on_policy", b, |c| c.method = Method::KlDirection),
        ],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub suite: Suite,
    pub variant: String,
    pub phase: u32,
    pub mean_sr: f64,
    pub stderr: f64,
    pub seeds: usize,
}

/// Per-seed success curves of one variant, phase 0 first.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantRuns {
    pub variant: String,
    pub curves: Vec<Vec<f64>>,
}

impl VariantRuns {
    pub fn final_srs(&self) -> Vec<f64> {
        self.curves.iter().map(|c| c.last().copied().unwrap_or(0.0)).collect()
    }
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Every (variant, seed) run; seeds are taken as given.
pub fn run_variants(variants: &[Variant], seeds: &[u64]) -> Result<Vec<VariantRuns>> {
    let jobs: Vec<(usize, u64)> = (0..variants.len())
        .flat_map(|v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let curves: Vec<Result<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(v, seed)| {
            let mut cfg = variants[v].config.clone();
            cfg.seed = seed;
            let (_, summary) = run_training(&cfg, None)?;
            Ok(summary.success_curve())
        })
        .collect();
    let mut out: Vec<VariantRuns> = variants
        .iter()
        .map(|v| VariantRuns {
            variant: v.name.clone(),
            curves: Vec::new(),
        })
        .collect();
    for (&(v, _), c) in jobs.iter().zip(curves) {
        out[v].curves.push(c?);
    }
    Ok(out)
}

pub fn rows(suite: Suite, runs: &[VariantRuns]) -> Vec<AblationRow> {
    let mut out = Vec::new();
    for r in runs {
        let phases = r.curves.iter().map(Vec::len).min().unwrap_or(0);
        for p in 0..phases {
            let xs: Vec<f64> = r.curves.iter().map(|c| c[p]).collect();
            let (mean_sr, stderr) = mean_stderr(&xs);
            out.push(AblationRow {
                suite,
                variant: r.variant.clone(),
                phase: p as u32,
                mean_sr,
                stderr,
                seeds: xs.len(),
            });
        }
    }
    out
}

pub const ABLATION_HEADER: &str = "suite,variant,phase,mean_sr,stderr,seeds";

pub fn rows_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from(ABLATION_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.suite,
            r.variant,
            r.phase,
            sig6(r.mean_sr),
            sig6(r.stderr),
            r.seeds
        ));
    }
    s
}

pub fn run_ablation(suite: Suite, base: &RunConfig, seeds: &[u64]) -> Result<Vec<AblationRow>> {
    if seeds.len() < 5 {
        log::warn!("ablation over {} seeds; at least 5 are expected", seeds.len());
    }
    let runs = run_variants(&variants(suite, base), seeds)?;
    Ok(rows(suite, &runs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_has_five_variants() {
        let v = variants(Suite::Components, &RunConfig::default());
        let names: Vec<_> = v.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["full", "no_replay", "no_kl", "no_kl_no_replay", "no_curriculum"]);
    }

    #[test]
    fn every_suite_validates() {
        for s in Suite::ALL {
            for v in variants(s, &RunConfig::default()) {
                v.config.validate().unwrap_or_else(|e| panic!("{s}/{}: {e}", v.name));
            }
        }
        assert_eq!(variants(Suite::BetaSweep, &RunConfig::default()).len(), 10);
        assert_eq!(variants(Suite::PerplexityBands, &RunConfig::default()).len(), 4);
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!("bogus".parse::<Suite>().is_err());
        assert_eq!("beta_sweep".parse::<Suite>().unwrap(), Suite::BetaSweep);
    }

    #[test]
    fn stderr_matches_hand_computation() {
        // 1,2,3,4: mean 2.5, sample var 5/3, stderr sqrt(5/12).
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rows_have_schema_columns() {
        let runs = vec![VariantRuns {
            variant: "a".into(),
            curves: vec![vec![0.0, 0.5]; 5],
        }];
        let csv = rows_csv(&rows(Suite::Components, &runs));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(ABLATION_HEADER));
        assert_eq!(lines.next(), Some("components,a,0,0,0,5"));
        assert_eq!(lines.next(), Some("components,a,1,0.5,0,5"));
    }
}
