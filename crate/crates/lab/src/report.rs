//! Per-phase success curves as CSV and a plain-text sparkline table.

use std::path::Path;

use anyhow::{Context, Result};

use crate::persist::{read_metrics_sr, sig6};

const TICKS: [char; 8] = ['▁', '▂', '▃', '▄', '▅', '▆', '▇', '█'];

/// One glyph per value on a fixed [0, 1] scale.
pub fn sparkline(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| {
            let i = (v.clamp(0.0, 1.0) * (TICKS.len() - 1) as f64).round() as usize;
            TICKS[i]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub run: String,
    pub points: Vec<(u32, f64)>,
}

/// `metrics.csv` of the run in `dir` and of every immediate subdirectory
/// that has one.
pub fn collect_curves(dir: &Path) -> Result<Vec<Curve>> {
    let mut out = Vec::new();
    let mut push = |name: String, path: &Path| -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        out.push(Curve {
            run: name,
            points: read_metrics_sr(&text).with_context(|| path.display().to_string())?,
        });
        Ok(())
    };
    let own = dir.join("metrics.csv");
    if own.exists() {
        push(".".to_string(), &own)?;
    }
    let mut subdirs: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("metrics.csv").exists())
        .collect();
    subdirs.sort();
    for d in subdirs {
        let name = d.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        push(name, &d.join("metrics.csv"))?;
    }
    Ok(out)
}

pub fn curves_csv(curves: &[Curve]) -> String {
    let mut s = String::from("run,phase,success_rate_gt\n");
    for c in curves {
        for (p, sr) in &c.points {
            s.push_str(&format!("{},{},{}\n", c.run, p, sig6(*sr)));
        }
    }
    s
}

pub fn sparkline_table(curves: &[Curve]) -> String {
    let width = curves.iter().map(|c| c.run.chars().count()).max().unwrap_or(0).max(3);
    let mut s = String::new();
    for c in curves {
        let ys: Vec<f64> = c.points.iter().map(|p| p.1).collect();
        let last = ys.last().copied().unwrap_or(0.0);
        s.push_str(&format!("{:<width$}  {}  {}\n", c.run, sparkline(&ys), sig6(last)));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparkline_ends() {
        assert_eq!(sparkline(&[0.0, 1.0, 2.0, -1.0]), "▁██▁");
    }
}
