//! Samples, episodes and the datasets built from them.
//!
//! A [`Sample`] is one `(s, theta, delta)` observation. Raw collection keeps
//! every episode; best-episode selection keeps one episode per round; the
//! optimized dataset replaces a random fraction of `theta` values with the
//! GA output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{GaacError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub s: Vec<f64>,
    /// Flattened `[mu; sigma]` the actor emitted at `s`, before its update.
    pub theta: Vec<f64>,
    pub delta: f64,
    pub round_id: usize,
    pub episode_id: usize,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub samples: Vec<Sample>,
    pub cumulative_reward: f64,
    pub reached_goal: bool,
}

impl EpisodeRecord {
    pub fn new(samples: Vec<Sample>, rewards: &[f64], reached_goal: bool) -> Self {
        Self {
            samples,
            cumulative_reward: rewards.iter().sum(),
            reached_goal,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedPair {
    pub s: Vec<f64>,
    pub theta_bar: Vec<f64>,
    pub was_ga_updated: bool,
}

/// Result of best-episode-only selection.
#[derive(Debug, Clone, PartialEq)]
pub struct BestEpisodes {
    /// Zero-based index of the chosen episode inside each round.
    pub selected: Vec<usize>,
    pub episodes: Vec<EpisodeRecord>,
    pub samples: Vec<Sample>,
}

impl BestEpisodes {
    pub fn successes(&self) -> usize {
        self.episodes.iter().filter(|e| e.reached_goal).count()
    }
}

/// Picks the highest-reward episode of every round; ties go to the earliest.
pub fn best_episode_per_round(rounds: &[Vec<EpisodeRecord>]) -> Result<BestEpisodes> {
    if rounds.is_empty() {
        return Err(GaacError::Empty("rounds"));
    }
    let mut selected = Vec::with_capacity(rounds.len());
    let mut episodes = Vec::with_capacity(rounds.len());
    for round in rounds {
        let best = best_index(round.iter().map(|e| e.cumulative_reward))
            .ok_or(GaacError::Empty("round without episodes"))?;
        selected.push(best);
        episodes.push(round[best].clone());
    }
    let samples = episodes.iter().flat_map(|e| e.samples.iter().cloned()).collect();
    Ok(BestEpisodes {
        selected,
        episodes,
        samples,
    })
}

fn best_index(rewards: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in rewards.enumerate() {
        match best {
            Some((_, b)) if r <= b => {}
            _ => best = Some((i, r)),
        }
    }
    best.map(|(i, _)| i)
}

/// Projects samples onto `(s, theta)` pairs, preserving order.
pub fn extract_w(d: &[Sample]) -> Vec<(Vec<f64>, Vec<f64>)> {
    d.iter().map(|x| (x.s.clone(), x.theta.clone())).collect()
}

pub fn subset_size(eta: f64, n: usize) -> usize {
    // Tolerance keeps e.g. 0.15 * 20 from flooring to 2.
    (((eta * n as f64) + 1e-9).floor() as usize).min(n)
}

/// Uniform draw without replacement of `floor(eta * n)` sample indices.
///
/// Both returned index lists are sorted ascending.
pub fn select_eta_subset(n: usize, eta: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(GaacError::InvalidArgument(format!("eta must lie in [0, 1], got {eta}")));
    }
    let k = subset_size(eta, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = rand::seq::index::sample(&mut rng, n, k).into_vec();
    chosen.sort_unstable();
    let mut mask = vec![false; n];
    chosen.iter().for_each(|&i| mask[i] = true);
    let rest = (0..n).filter(|&i| !mask[i]).collect();
    Ok((chosen, rest))
}

/// Builds the optimized dataset: GA output for the chosen subset, the
/// original `theta` everywhere else.
pub fn merge_optimized(
    d1: &[Sample],
    subset: &[usize],
    updates: &BTreeMap<usize, Vec<f64>>,
) -> Result<Vec<OptimizedPair>> {
    let mut in_subset = vec![false; d1.len()];
    for &i in subset {
        if i >= d1.len() {
            return Err(GaacError::InvalidArgument(format!("subset index {i} out of range")));
        }
        in_subset[i] = true;
    }
    for (&i, theta) in updates {
        if i >= d1.len() || !in_subset[i] {
            return Err(GaacError::InvalidArgument(format!(
                "update for sample {i}, which is not in the optimized subset"
            )));
        }
        if theta.len() != d1[i].theta.len() {
            return Err(GaacError::Shape(format!("update for sample {i} has wrong width")));
        }
    }
    Ok(d1
        .iter()
        .enumerate()
        .map(|(i, smp)| match updates.get(&i) {
            Some(theta) => OptimizedPair {
                s: smp.s.clone(),
                theta_bar: theta.clone(),
                was_ga_updated: true,
            },
            None => OptimizedPair {
                s: smp.s.clone(),
                theta_bar: smp.theta.clone(),
                was_ga_updated: false,
            },
        })
        .collect())
}

/// Element-wise bounds of every `theta` in the dataset.
pub fn theta_bounds(d: &[Sample]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = d.first().ok_or(GaacError::Empty("dataset"))?;
    let mut lo = first.theta.clone();
    let mut hi = first.theta.clone();
    for smp in &d[1..] {
        for (h, &v) in smp.theta.iter().enumerate() {
            lo[h] = lo[h].min(v);
            hi[h] = hi[h].max(v);
        }
    }
    Ok((lo, hi))
}

/// Standardizes `delta` within each round (zero mean, unit variance).
pub fn normalize_deltas_per_round(d: &mut [Sample]) {
    let mut stats: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
    for smp in d.iter() {
        let e = stats.entry(smp.round_id).or_insert((0.0, 0.0, 0));
        e.0 += smp.delta;
        e.1 += smp.delta * smp.delta;
        e.2 += 1;
    }
    for smp in d.iter_mut() {
        let (sum, sq, n) = stats[&smp.round_id];
        let mean = sum / n as f64;
        let var = (sq / n as f64 - mean * mean).max(0.0);
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        smp.delta = (smp.delta - mean) / std;
    }
}

fn header(prefix: &[&str], groups: &[(&str, usize)], suffix: &[&str]) -> String {
    let mut cols: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    for (name, n) in groups {
        cols.extend((1..=*n).map(|i| format!("{name}{i}")));
    }
    cols.extend(suffix.iter().map(|s| s.to_string()));
    cols.join(",")
}

/// `round,episode,t,s...,theta...,delta`.
pub fn samples_to_csv(d: &[Sample]) -> String {
    let (ds, dt) = d
        .first()
        .map(|x| (x.s.len(), x.theta.len()))
        .unwrap_or((crate::env::STATE_DIM, 2));
    let mut out = header(&["round", "episode", "t"], &[("s", ds), ("theta", dt)], &["delta"]);
    out.push('\n');
    for x in d {
        write!(out, "{},{},{}", x.round_id, x.episode_id, x.t).unwrap();
        for v in x.s.iter().chain(&x.theta) {
            write!(out, ",{v:?}").unwrap();
        }
        writeln!(out, ",{:?}", x.delta).unwrap();
    }
    out
}

fn count_prefixed(cols: &[&str], prefix: &str) -> usize {
    cols.iter()
        .filter(|c| {
            c.strip_prefix(prefix)
                .is_some_and(|rest| !rest.is_empty() && rest.chars().all(|ch| ch.is_ascii_digit()))
        })
        .count()
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.trim().parse::<f64>().map_err(|_| GaacError::Parse {
        line,
        msg: format!("bad number `{tok}`"),
    })
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.trim().parse::<usize>().map_err(|_| GaacError::Parse {
        line,
        msg: format!("bad index `{tok}`"),
    })
}

pub fn samples_from_csv(text: &str) -> Result<Vec<Sample>> {
    let mut lines = text.lines();
    let head = lines.next().ok_or(GaacError::Empty("dataset file"))?;
    let cols: Vec<&str> = head.split(',').collect();
    let ds = count_prefixed(&cols, "s");
    let dt = count_prefixed(&cols, "theta");
    if cols.len() != 4 + ds + dt || cols[..3] != ["round", "episode", "t"] {
        return Err(GaacError::Parse {
            line: 1,
            msg: "unexpected dataset header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let ln = i + 2;
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != cols.len() {
            return Err(GaacError::Parse {
                line: ln,
                msg: format!("expected {} columns, found {}", cols.len(), toks.len()),
            });
        }
        let nums = toks[3..]
            .iter()
            .map(|t| parse_f64(t, ln))
            .collect::<Result<Vec<f64>>>()?;
        out.push(Sample {
            round_id: parse_usize(toks[0], ln)?,
            episode_id: parse_usize(toks[1], ln)?,
            t: parse_usize(toks[2], ln)?,
            s: nums[..ds].to_vec(),
            theta: nums[ds..ds + dt].to_vec(),
            delta: nums[ds + dt],
        });
    }
    Ok(out)
}

/// `s...,theta_bar...,updated`.
pub fn pairs_to_csv(w: &[OptimizedPair]) -> String {
    let (ds, dt) = w
        .first()
        .map(|x| (x.s.len(), x.theta_bar.len()))
        .unwrap_or((crate::env::STATE_DIM, 2));
    let mut out = header(&[], &[("s", ds), ("theta_bar", dt)], &["updated"]);
    out.push('\n');
    for p in w {
        let mut first = true;
        for v in p.s.iter().chain(&p.theta_bar) {
            if !first {
                out.push(',');
            }
            first = false;
            write!(out, "{v:?}").unwrap();
        }
        writeln!(out, ",{}", u8::from(p.was_ga_updated)).unwrap();
    }
    out
}

pub fn pairs_from_csv(text: &str) -> Result<Vec<OptimizedPair>> {
    let mut lines = text.lines();
    let head = lines.next().ok_or(GaacError::Empty("pair file"))?;
    let cols: Vec<&str> = head.split(',').collect();
    let ds = count_prefixed(&cols, "s");
    let dt = count_prefixed(&cols, "theta_bar");
    if cols.len() != ds + dt + 1 || cols.last() != Some(&"updated") {
        return Err(GaacError::Parse {
            line: 1,
            msg: "unexpected pair header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let ln = i + 2;
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != cols.len() {
            return Err(GaacError::Parse {
                line: ln,
                msg: "wrong column count".into(),
            });
        }
        let nums = toks[..ds + dt]
            .iter()
            .map(|t| parse_f64(t, ln))
            .collect::<Result<Vec<f64>>>()?;
        let was_ga_updated = match toks[ds + dt].trim() {
            "1" => true,
            "0" => false,
            other => {
                return Err(GaacError::Parse {
                    line: ln,
                    msg: format!("bad flag `{other}`"),
                })
            }
        };
        out.push(OptimizedPair {
            s: nums[..ds].to_vec(),
            theta_bar: nums[ds..].to_vec(),
            was_ga_updated,
        });
    }
    Ok(out)
}

pub fn save_samples(path: &Path, d: &[Sample]) -> Result<()> {
    Ok(std::fs::write(path, samples_to_csv(d))?)
}

pub fn load_samples(path: &Path) -> Result<Vec<Sample>> {
    samples_from_csv(&std::fs::read_to_string(path)?)
}

pub fn save_pairs(path: &Path, w: &[OptimizedPair]) -> Result<()> {
    Ok(std::fs::write(path, pairs_to_csv(w))?)
}

pub fn load_pairs(path: &Path) -> Result<Vec<OptimizedPair>> {
    pairs_from_csv(&std::fs::read_to_string(path)?)
}
