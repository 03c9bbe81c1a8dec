//! On-disk artifacts: checkpoints, site description, phase task files,
//! trajectory and buffer JSONL, metrics CSV.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use webrl_core::replay::{ReplayBuffer, ReplayEntry};
use webrl_core::synthweb::{SynthWeb, TaskInstance, Trajectory, TrajectoryRecord};

use crate::driver::PhaseResult;
use crate::eval::EvalResult;

pub const FORMAT_VERSION: u32 = 1;

/// Formats a real with 6 significant digits, trailing zeros dropped.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

pub const METRICS_HEADER: &str = "phase,success_rate_gt,success_rate_orm,n_success,n_fail,buffer_size,\
loss_before,loss_after,grad_norm,items_rollout,items_replay,n_tasks,mean_requirements,policy_version";

pub fn metrics_csv(rows: &[PhaseResult]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let t = &r.train_report;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.phase,
            sig6(r.success_rate_gt),
            sig6(r.success_rate_orm),
            r.n_success,
            r.n_fail,
            r.buffer_size,
            sig6(t.loss_before),
            sig6(t.loss_after),
            sig6(t.grad_norm),
            t.items_rollout,
            t.items_replay,
            r.n_tasks,
            sig6(r.mean_requirements),
            r.policy_version,
        ));
    }
    out
}

/// Success rate per phase read back from a metrics file.
pub fn read_metrics_sr(text: &str) -> Result<Vec<(u32, f64)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        _ => bail!("metrics file has an unexpected header"),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut cols = l.split(',');
            let phase = cols.next().unwrap_or_default().parse()?;
            let sr = cols.next().unwrap_or_default().parse()?;
            Ok((phase, sr))
        })
        .collect()
}

pub fn prepare_out_dir(dir: &Path) -> Result<()> {
    for sub in ["checkpoints", "phases"] {
        fs::create_dir_all(dir.join(sub)).with_context(|| format!("creating {}", dir.join(sub).display()))?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
// Nested rather than flattened: flattening loses integer map keys.
struct Versioned<T> {
    format_version: u32,
    body: T,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_site(dir: &Path, web: &SynthWeb) -> Result<()> {
    write_json(
        &dir.join("site.json"),
        &Versioned {
            format_version: FORMAT_VERSION,
            body: web,
        },
    )
}

pub fn read_site(dir: &Path) -> Result<SynthWeb> {
    let v: Versioned<SynthWeb> = read_json(&dir.join("site.json"))?;
    if v.format_version != FORMAT_VERSION {
        bail!("site.json has format version {}", v.format_version);
    }
    Ok(v.body)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub format_version: u32,
    pub role: String,
    pub seed: u64,
    pub phase: u32,
    pub shape: [usize; 2],
    pub params: T,
}

pub fn checkpoint_path(dir: &Path, role: &str, phase: u32) -> PathBuf {
    dir.join("checkpoints").join(format!("{role}_phase{phase}.json"))
}

pub fn write_checkpoint<T: Serialize>(
    dir: &Path,
    role: &str,
    phase: u32,
    seed: u64,
    params: &T,
    shape: [usize; 2],
) -> Result<()> {
    write_json(
        &checkpoint_path(dir, role, phase),
        &Checkpoint {
            format_version: FORMAT_VERSION,
            role: role.to_string(),
            seed,
            phase,
            shape,
            params,
        },
    )
}

pub fn read_checkpoint<T: DeserializeOwned>(path: &Path, role: &str) -> Result<Checkpoint<T>> {
    let c: Checkpoint<T> = read_json(path)?;
    if c.format_version != FORMAT_VERSION {
        bail!("{}: format version {}", path.display(), c.format_version);
    }
    if c.role != role {
        bail!("{}: expected a {role} checkpoint, found {}", path.display(), c.role);
    }
    Ok(c)
}

/// Latest phase for which `role` has a checkpoint.
pub fn latest_checkpoint(dir: &Path, role: &str) -> Result<Option<PathBuf>> {
    let mut best: Option<(u32, PathBuf)> = None;
    let prefix = format!("{role}_phase");
    for entry in fs::read_dir(dir.join("checkpoints"))? {
        let path = entry?.path();
        let Some(name) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        if let Some(n) = name.strip_prefix(&prefix).and_then(|n| n.parse::<u32>().ok()) {
            if best.as_ref().is_none_or(|(b, _)| n > *b) {
                best = Some((n, path));
            }
        }
    }
    Ok(best.map(|(_, p)| p))
}

pub fn write_phase_tasks(dir: &Path, phase: u32, tasks: &[TaskInstance]) -> Result<()> {
    write_json(&dir.join("phases").join(format!("phase_{phase}_tasks.json")), &tasks)
}

pub fn read_phase_tasks(dir: &Path, phase: u32) -> Result<Vec<TaskInstance>> {
    read_json(&dir.join("phases").join(format!("phase_{phase}_tasks.json")))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let r = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

pub fn write_trajectories(dir: &Path, phase: u32, trajs: &[Trajectory]) -> Result<()> {
    write_jsonl(
        &dir.join("phases").join(format!("phase_{phase}_trajectories.jsonl")),
        trajs.iter().map(TrajectoryRecord::from),
    )
}

pub fn read_trajectories(dir: &Path, phase: u32, web: &SynthWeb) -> Result<Vec<Trajectory>> {
    let recs: Vec<TrajectoryRecord> = read_jsonl(&dir.join("phases").join(format!("phase_{phase}_trajectories.jsonl")))?;
    recs.iter().map(|r| r.restore(web).map_err(Into::into)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferHeader {
    pub format_version: u32,
    pub capacity: usize,
    pub watermark: u32,
    pub store_failed: bool,
    pub len: usize,
}

#[derive(Serialize, Deserialize)]
struct BufferLine {
    phase_added: u32,
    #[serde(flatten)]
    trajectory: TrajectoryRecord,
}

pub fn write_buffer(dir: &Path, buffer: &ReplayBuffer) -> Result<()> {
    write_json(
        &dir.join("buffer.header.json"),
        &BufferHeader {
            format_version: FORMAT_VERSION,
            capacity: buffer.capacity(),
            watermark: buffer.watermark(),
            store_failed: buffer.stores_failures(),
            len: buffer.len(),
        },
    )?;
    write_jsonl(
        &dir.join("buffer.jsonl"),
        buffer.iter().map(|e| BufferLine {
            phase_added: e.phase_added,
            trajectory: TrajectoryRecord::from(&e.trajectory),
        }),
    )
}

pub fn read_buffer(dir: &Path, web: &SynthWeb) -> Result<ReplayBuffer> {
    let header: BufferHeader = read_json(&dir.join("buffer.header.json"))?;
    if header.format_version != FORMAT_VERSION {
        bail!("buffer header has format version {}", header.format_version);
    }
    let lines: Vec<BufferLine> = read_jsonl(&dir.join("buffer.jsonl"))?;
    if lines.len() != header.len {
        bail!("buffer.jsonl has {} entries, header says {}", lines.len(), header.len);
    }
    let entries = lines
        .iter()
        .map(|l| {
            Ok(ReplayEntry {
                trajectory: l.trajectory.restore(web)?,
                phase_added: l.phase_added,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let buffer = ReplayBuffer::from_entries(entries, header.capacity, header.store_failed)?;
    if buffer.watermark() != header.watermark {
        bail!("buffer watermark {} does not match header {}", buffer.watermark(), header.watermark);
    }
    Ok(buffer)
}

pub fn write_eval(dir: &Path, eval: &EvalResult) -> Result<()> {
    write_json(&dir.join("eval.json"), eval)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.123456789), "0.123457");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(0.5), "0.5");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(-2.5e-3), "-0.0025");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.234567e-9), "1.23457e-9");
        assert_eq!(sig6(f64::INFINITY), "inf");
    }

    #[test]
    fn metrics_round_trip_success_rates() {
        let rows: Vec<PhaseResult> = (0..3)
            .map(|p| PhaseResult {
                phase: p,
                success_rate_gt: 0.1 * f64::from(p),
                success_rate_orm: 0.0,
                n_success: 0,
                n_fail: 0,
                buffer_size: 0,
                train_report: Default::default(),
                n_tasks: 0,
                mean_requirements: 0.0,
                policy_version: 0,
            })
            .collect();
        let back = read_metrics_sr(&metrics_csv(&rows)).unwrap();
        assert_eq!(back, vec![(0, 0.0), (1, 0.1), (2, 0.2)]);
    }
}
