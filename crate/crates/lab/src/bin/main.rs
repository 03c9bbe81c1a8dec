use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use webrl_core::model::PolicyParams;
use webrl_lab::ablation::{self, Suite};
use webrl_lab::eval::{LENGTH_BUCKETS, REQUIREMENT_BUCKETS};
use webrl_lab::persist::{self, sig6};
use webrl_lab::{report, run_training, Lab, Method, RunConfig};

#[derive(Parser)]
#[command(name = "webrl-lab", about = "Curriculum RL web agents on a synthetic site")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long, env = "WEBRL_LAB_OUT", default_value = "out")]
    out: PathBuf,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// SFT stage and ORM fit only.
    Sft(Common),
    /// SFT stage, ORM fit and every curriculum phase.
    Train(Common),
    /// Greedy evaluation of the latest actor checkpoint in --out.
    Eval(Common),
    /// Run an ablation suite over several seeds.
    Ablate {
        suite: Suite,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Per-phase success curves from metrics.csv files under --out.
    Report {
        #[command(flatten)]
        common: Common,
        /// Also print a sparkline table.
        #[arg(long)]
        sparkline: bool,
    },
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(m) = c.method {
        cfg.method = m;
    }
    for kv in &c.set {
        let (k, v) = kv.split_once('=').with_context(|| format!("`{kv}` is not KEY=VALUE"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_eval(eval: &webrl_lab::eval::EvalResult) {
    println!("success rate {}", sig6(eval.overall));
    for (name, b) in LENGTH_BUCKETS.iter().zip(&eval.by_length) {
        println!("  steps {name:>4}: {}/{}", b.success, b.total);
    }
    for (name, b) in REQUIREMENT_BUCKETS.iter().zip(&eval.by_requirements) {
        println!("  reqs  {name:>4}: {}/{}", b.success, b.total);
    }
}

fn sft(cfg: &RunConfig, out: &Path) -> Result<()> {
    persist::prepare_out_dir(out)?;
    let mut lab = Lab::new(cfg.clone())?;
    persist::write_site(out, &lab.web)?;
    std::fs::write(out.join("config.txt"), cfg.to_text())?;
    let sr = lab.run_sft_stage()?;
    let orm = lab.train_orm()?;
    persist::write_checkpoint(out, "actor", 0, cfg.seed, &lab.actor, [lab.actor.slots, lab.actor.dim])?;
    persist::write_checkpoint(out, "critic", 0, cfg.seed, &lab.critic, [1, lab.critic.dim()])?;
    persist::write_checkpoint(out, "orm", 0, cfg.seed, &lab.orm, [1, lab.orm.weights.len()])?;
    persist::write_buffer(out, &lab.buffer)?;
    std::fs::write(out.join("metrics.csv"), lab.metrics_csv())?;
    println!("sft success rate {}", sig6(sr));
    println!(
        "orm held-out accuracy {} (majority {})",
        sig6(orm.heldout_accuracy),
        sig6(orm.majority_baseline)
    );
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Sft(c) => sft(&load_config(&c)?, &c.out),
        Command::Train(c) => {
            let cfg = load_config(&c)?;
            let (_, summary) = run_training(&cfg, Some(&c.out))?;
            print!("{}", summary.metrics_csv);
            print_eval(&summary.final_eval);
            Ok(())
        }
        Command::Eval(c) => {
            let cfg = load_config(&c)?;
            let path = persist::latest_checkpoint(&c.out, "actor")?
                .with_context(|| format!("no actor checkpoint under {}", c.out.display()))?;
            let ckpt = persist::read_checkpoint::<PolicyParams>(&path, "actor")?;
            let mut lab = Lab::new(cfg)?;
            ckpt.params.check_shape(lab.actor.slots, lab.actor.dim)?;
            lab.actor = ckpt.params;
            println!("{} (phase {})", path.display(), ckpt.phase);
            print_eval(&lab.evaluate());
            Ok(())
        }
        Command::Ablate { suite, seeds, common } => {
            let cfg = load_config(&common)?;
            let seeds: Vec<u64> = (0..seeds).map(|i| cfg.seed + i).collect();
            let rows = ablation::run_ablation(suite, &cfg, &seeds)?;
            let csv = ablation::rows_csv(&rows);
            std::fs::create_dir_all(&common.out)?;
            std::fs::write(common.out.join(format!("ablation_{suite}.csv")), &csv)?;
            print!("{csv}");
            Ok(())
        }
        Command::Report { common, sparkline } => {
            let curves = report::collect_curves(&common.out)?;
            if curves.is_empty() {
                anyhow::bail!("no metrics.csv under {}", common.out.display());
            }
            let csv = report::curves_csv(&curves);
            std::fs::write(common.out.join("report.csv"), &csv)?;
            print!("{csv}");
            if sparkline {
                print!("{}", report::sparkline_table(&curves));
            }
            Ok(())
        }
    }
}
