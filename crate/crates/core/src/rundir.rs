//! Run directories and the CSV bundles derived from them.
//!
//! Files are only ever created, never rewritten: writing an artifact that
//! already exists is an error.

use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{config_to_text, parse_config_str};
use crate::dataset::EpisodeRecord;
use crate::error::{GaacError, Result};
use crate::ga;
use crate::pipeline::{EtaResult, EvaluationReport, ExperimentConfig, Mode, RunArtifacts};

pub const CONFIG: &str = "config.txt";
pub const D_O: &str = "d_o.csv";
pub const D1: &str = "d1.csv";
pub const EPISODES: &str = "episodes.csv";
pub const PFM: &str = "pfm.txt";
pub const W: &str = "w.csv";
pub const GA_LOG: &str = "ga_log.csv";
pub const POLICY: &str = "policy.txt";
pub const REWARDS: &str = "rewards.csv";
pub const TRAJECTORY: &str = "trajectory.csv";
pub const REPORT: &str = "report.txt";
pub const ETA_RAW: &str = "eta_sweep_raw.csv";

/// Creates `dir/name`; fails if it already exists.
pub fn write_new(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AlreadyExists {
            GaacError::InvalidArgument(format!("{} already exists; run directories are append-only", path.display()))
        } else {
            e.into()
        }
    })?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Reads `dir/name`, reporting a missing file as a missing artifact.
pub fn read_artifact(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(GaacError::MissingArtifact(path.display().to_string()));
    }
    Ok(fs::read_to_string(path)?)
}

pub fn load_config(dir: &Path) -> Result<ExperimentConfig> {
    parse_config_str(&read_artifact(dir, CONFIG)?)
}

/// `round,episode,reward,reached_goal,steps` for every training episode.
pub fn episodes_csv(rounds: &[Vec<EpisodeRecord>]) -> String {
    let mut out = String::from("round,episode,reward,reached_goal,steps\n");
    for (r, round) in rounds.iter().enumerate() {
        for (e, ep) in round.iter().enumerate() {
            writeln!(
                out,
                "{},{},{:?},{},{}",
                r + 1,
                e + 1,
                ep.cumulative_reward,
                u8::from(ep.reached_goal),
                ep.len()
            )
            .unwrap();
        }
    }
    out
}

/// Training rewards from an `episodes.csv`, in file order.
pub fn train_rewards_from_csv(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let reward = line.split(',').nth(2).ok_or_else(|| GaacError::Parse {
            line: n + 1,
            msg: "missing reward column".into(),
        })?;
        out.push(reward.parse().map_err(|_| GaacError::Parse {
            line: n + 1,
            msg: format!("bad reward `{reward}`"),
        })?);
    }
    Ok(out)
}

/// `episode,reward,phase`: training episodes first, then evaluation, with
/// one running episode counter.
pub fn rewards_csv(train: &[f64], eval: &[f64]) -> String {
    let mut out = String::from("episode,reward,phase\n");
    let rows = train.iter().map(|r| (r, "train")).chain(eval.iter().map(|r| (r, "eval")));
    for (k, (r, phase)) in rows.enumerate() {
        writeln!(out, "{},{:?},{}", k + 1, r, phase).unwrap();
    }
    out
}

/// Plain `key: value` summary.
pub fn report_text(fields: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in fields {
        writeln!(out, "{k}: {v}").unwrap();
    }
    out
}

pub fn eval_fields(eval: &EvaluationReport) -> Vec<(&'static str, String)> {
    vec![
        ("eval_episodes", eval.rewards.len().to_string()),
        ("eval_mean", format!("{:?}", eval.mean)),
        ("eval_std", format!("{:?}", eval.std)),
        ("eval_failures", eval.failures.to_string()),
        ("eval_min", format!("{:?}", eval.rewards.iter().cloned().fold(f64::INFINITY, f64::min))),
        ("eval_max", format!("{:?}", eval.rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max))),
    ]
}

/// Parses a `key: value` report.
pub fn parse_report(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Writes every artifact of a finished run into a fresh `dir`.
pub fn write_run(dir: &Path, run: &RunArtifacts) -> Result<()> {
    let cfg = &run.config;
    write_new(dir, CONFIG, &config_to_text(cfg))?;
    write_new(dir, D_O, &crate::dataset::samples_to_csv(&run.stage1.d_o))?;
    write_new(dir, D1, &crate::dataset::samples_to_csv(run.stage1.d1()))?;
    write_new(dir, EPISODES, &episodes_csv(&run.stage1.rounds))?;
    if let Some(s2) = &run.stage2 {
        write_new(dir, PFM, &s2.pfm.to_text())?;
        let logs: Vec<(usize, &[ga::GenerationLog])> = s2.logs.iter().map(|(i, l)| (*i, l.as_slice())).collect();
        write_new(dir, GA_LOG, &ga::generation_log_csv(&logs))?;
    }
    write_new(dir, W, &crate::dataset::pairs_to_csv(&run.w))?;
    write_new(dir, POLICY, &run.policy.net.to_text())?;
    write_new(dir, TRAJECTORY, &run.best_trajectory.to_csv())?;
    write_new(dir, REWARDS, &rewards_csv(&run.train_rewards(), &run.eval.rewards))?;
    let s1 = &run.stage1;
    let mut fields = vec![
        ("mode", cfg.mode.tag().to_string()),
        ("seed", cfg.seed.to_string()),
        ("rounds", s1.rounds.len().to_string()),
        ("train_episodes", run.train_rewards().len().to_string()),
        ("successful_best_episodes", s1.successes().to_string()),
        ("rounds_drawn", s1.rounds_drawn.to_string()),
        ("env_steps", s1.env_steps.to_string()),
        ("discarded_env_steps", s1.discarded_steps.to_string()),
        ("d_o_size", s1.d_o.len().to_string()),
        ("d1_size", s1.d1().len().to_string()),
        ("w_size", run.w.len().to_string()),
    ];
    if let Some(s2) = &run.stage2 {
        fields.push(("optimized_tuples", s2.subset.len().to_string()));
        fields.push(("improved_tuples", s2.improved().to_string()));
        fields.push(("improved_fraction", format!("{:?}", s2.improved_fraction())));
        fields.push(("pfm_final_mse", format!("{:?}", s2.pfm.final_mse)));
    }
    if let (Some(first), Some(last)) = (run.policy_loss.first(), run.policy_loss.last()) {
        fields.push(("policy_loss_first", format!("{first:?}")));
        fields.push(("policy_loss_last", format!("{last:?}")));
    }
    fields.extend(eval_fields(&run.eval));
    write_new(dir, REPORT, &report_text(&fields))
}

/// `eta,repeat,seed,episode,reward,reached_goal`.
pub fn eta_raw_csv(results: &[EtaResult]) -> String {
    let mut out = String::from("eta,repeat,seed,episode,reward,improved_fraction\n");
    for r in results {
        for (k, reward) in r.eval.rewards.iter().enumerate() {
            writeln!(
                out,
                "{:?},{},{},{},{:?},{:?}",
                r.eta,
                r.repeat,
                r.seed,
                k + 1,
                reward,
                r.improved_fraction
            )
            .unwrap();
        }
    }
    out
}

/// `eta,mean,std,failures,repeats` aggregated over repeats.
pub fn eta_summary(results: &[EtaResult]) -> String {
    let mut etas: Vec<f64> = results.iter().map(|r| r.eta).collect();
    etas.sort_by(|a, b| a.total_cmp(b));
    etas.dedup();
    let mut out = String::from("eta,mean,std,failures,repeats\n");
    for eta in etas {
        let group: Vec<&EtaResult> = results.iter().filter(|r| r.eta == eta).collect();
        let pooled: Vec<f64> = group.iter().flat_map(|r| r.eval.rewards.iter().cloned()).collect();
        let (mean, std) = crate::pipeline::mean_std(&pooled);
        let failures: usize = group.iter().map(|r| r.eval.failures).sum();
        writeln!(out, "{eta:?},{mean:?},{std:?},{failures},{}", group.len()).unwrap();
    }
    out
}

fn run_dirs(root: &Path) -> Result<Vec<(String, PathBuf)>> {
    if root.join(REWARDS).is_file() {
        let name = load_config(root).map(|c| c.mode.tag().to_string()).unwrap_or_else(|_| "run".into());
        return Ok(vec![(name, root.to_path_buf())]);
    }
    let mut out = Vec::new();
    for mode in Mode::ALL {
        let d = root.join(mode.tag());
        if d.is_dir() {
            out.push((mode.tag().to_string(), d));
        }
    }
    Ok(out)
}

fn parse_rewards_csv(text: &str) -> Result<Vec<(usize, f64, String)>> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || GaacError::Parse {
            line: n + 1,
            msg: format!("malformed rewards row `{line}`"),
        };
        if cols.len() != 3 {
            return Err(bad());
        }
        rows.push((
            cols[0].parse().map_err(|_| bad())?,
            cols[1].parse().map_err(|_| bad())?,
            cols[2].to_string(),
        ));
    }
    Ok(rows)
}

/// Bundle paths written by [`emit_plot_data`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub rewards: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub eta: Option<PathBuf>,
}

/// Writes `plot_rewards.csv` (`series,episode,reward,phase`),
/// `plot_trajectory.csv` (`t,x,y`) and `plot_eta.csv`
/// (`eta,episode,mean,variance`) into `out` from the runs under `root`.
///
/// `root` is a single run, an ablation directory with one subdirectory per
/// mode, or an eta-sweep directory.
pub fn emit_plot_data(root: &Path, out: &Path) -> Result<PlotData> {
    if !root.is_dir() {
        return Err(GaacError::MissingArtifact(root.display().to_string()));
    }
    let runs = run_dirs(root)?;
    let has_eta = root.join(ETA_RAW).is_file();
    if runs.is_empty() && !has_eta {
        return Err(GaacError::MissingArtifact(format!(
            "{} (no {REWARDS} or {ETA_RAW} found)",
            root.display()
        )));
    }
    let mut result = PlotData {
        rewards: None,
        trajectory: None,
        eta: None,
    };
    if !runs.is_empty() {
        let mut csv = String::from("series,episode,reward,phase\n");
        for (name, dir) in &runs {
            read_artifact(dir, REPORT)?;
            for (ep, r, phase) in parse_rewards_csv(&read_artifact(dir, REWARDS)?)? {
                writeln!(csv, "{name},{ep},{r:?},{phase}").unwrap();
            }
        }
        write_new(out, "plot_rewards.csv", &csv)?;
        result.rewards = Some(out.join("plot_rewards.csv"));
        let traj_dir = runs
            .iter()
            .find(|(n, _)| n == Mode::Gaac.tag())
            .unwrap_or(&runs[0])
            .1
            .clone();
        let text = read_artifact(&traj_dir, TRAJECTORY)?;
        let mut csv = String::from("t,x,y\n");
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() < 3 {
                return Err(GaacError::Parse {
                    line: 0,
                    msg: format!("malformed trajectory row `{line}`"),
                });
            }
            writeln!(csv, "{},{},{}", cols[0], cols[1], cols[2]).unwrap();
        }
        write_new(out, "plot_trajectory.csv", &csv)?;
        result.trajectory = Some(out.join("plot_trajectory.csv"));
    }
    if has_eta {
        let text = read_artifact(root, ETA_RAW)?;
        let mut cells: std::collections::BTreeMap<(u64, usize), Vec<f64>> = Default::default();
        let mut order: Vec<(u64, f64)> = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let bad = || GaacError::Parse {
                line: n + 1,
                msg: format!("malformed eta row `{line}`"),
            };
            if cols.len() != 6 {
                return Err(bad());
            }
            let eta: f64 = cols[0].parse().map_err(|_| bad())?;
            let ep: usize = cols[3].parse().map_err(|_| bad())?;
            let reward: f64 = cols[4].parse().map_err(|_| bad())?;
            if !order.iter().any(|(b, _)| *b == eta.to_bits()) {
                order.push((eta.to_bits(), eta));
            }
            cells.entry((eta.to_bits(), ep)).or_default().push(reward);
        }
        let mut csv = String::from("eta,episode,mean,variance\n");
        order.sort_by(|a, b| a.1.total_cmp(&b.1));
        for (bits, eta) in order {
            for ((b, ep), rewards) in cells.range((bits, 0)..=(bits, usize::MAX)) {
                debug_assert_eq!(*b, bits);
                let (mean, std) = crate::pipeline::mean_std(rewards);
                writeln!(csv, "{eta:?},{ep},{mean:?},{:?}", std * std).unwrap();
            }
        }
        write_new(out, "plot_eta.csv", &csv)?;
        result.eta = Some(out.join("plot_eta.csv"));
    }
    Ok(result)
}
