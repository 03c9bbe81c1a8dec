//! Mean success curve per config variant over several seeds.
//!
//!     cargo run --release -p webrl-lab --example sweep -- seeds=5 \
//!         "method=webrl|awr" lr_actor=6
//!
//! `key=a|b` expands into one variant per alternative.

use std::time::Instant;
use webrl_lab::{run_training, RunConfig};

fn main() -> anyhow::Result<()> {
    let mut cfg = RunConfig::default();
    let mut seeds = 5u64;
    let mut variants: Vec<Vec<(String, String)>> = vec![vec![]];
    for kv in std::env::args().skip(1) {
        let (k, v) = kv.split_once('=').unwrap();
        match k {
            "seeds" => seeds = v.parse()?,
            // v|... alternatives: "method=webrl|awr" -> variants
            _ if v.contains('|') => {
                let mut next = Vec::new();
                for base in &variants {
                    for alt in v.split('|') {
                        let mut b = base.clone();
                        b.push((k.to_string(), alt.to_string()));
                        next.push(b);
                    }
                }
                variants = next;
            }
            _ => cfg.set(k, v)?,
        }
    }
    for var in variants {
        let t = Instant::now();
        let mut curves = Vec::new();
        for s in 0..seeds {
            let mut c = cfg.clone();
            for (k, v) in &var {
                c.set(k, v)?;
            }
            c.seed = s;
            let (_, sum) = run_training(&c, None)?;
            curves.push(sum.success_curve());
        }
        let n = curves[0].len();
        let mean: Vec<String> = (0..n)
            .map(|p| format!("{:.3}", curves.iter().map(|c| c[p]).sum::<f64>() / seeds as f64))
            .collect();
        let finals: Vec<String> = curves.iter().map(|c| format!("{:.2}", c[n - 1])).collect();
        println!("{:?} [{}] finals {} ({:?})", var, mean.join(" "), finals.join(","), t.elapsed());
    }
    Ok(())
}
