//! The three training stages, evaluation, and the four training modes.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::actor_critic::{
    self, run_ac_round, sigma_head, sigma_head_derivative, GaussianPolicy, RoundConfig,
};
use crate::dataset::{self, BestEpisodes, EpisodeRecord, OptimizedPair, Sample};
use crate::env::{self, Trajectory};
use crate::error::{GaacError, Result};
use crate::ga::{self, Bounds, GaConfig, GenerationLog};
use crate::mlp::{self, FitConfig, Mlp};
use crate::pfm::{self, PfmConfig, PfmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Ac,
    AcGa,
    AcBeo,
    Gaac,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Ac, Mode::AcGa, Mode::AcBeo, Mode::Gaac];

    pub fn tag(self) -> &'static str {
        match self {
            Mode::Ac => "ac",
            Mode::AcGa => "ac_ga",
            Mode::AcBeo => "ac_beo",
            Mode::Gaac => "gaac",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag.to_ascii_lowercase().replace('-', "_").as_str() {
            "ac" => Some(Mode::Ac),
            "ac_ga" | "acga" => Some(Mode::AcGa),
            "ac_beo" | "acbeo" => Some(Mode::AcBeo),
            "gaac" => Some(Mode::Gaac),
            _ => None,
        }
    }

    /// Modes that train on one continuous round of `M * N` episodes.
    pub fn single_round(self) -> bool {
        matches!(self, Mode::Ac | Mode::AcGa)
    }

    pub fn uses_ga(self) -> bool {
        matches!(self, Mode::AcGa | Mode::Gaac)
    }
}

/// Which single-round outcomes are acceptable for the single-round modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundOutcome {
    Any,
    Failed,
    Succeeded,
}

impl RoundOutcome {
    pub fn tag(self) -> &'static str {
        match self {
            RoundOutcome::Any => "any",
            RoundOutcome::Failed => "failed",
            RoundOutcome::Succeeded => "succeeded",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "any" => Some(RoundOutcome::Any),
            "failed" => Some(RoundOutcome::Failed),
            "succeeded" => Some(RoundOutcome::Succeeded),
            _ => None,
        }
    }

    fn accepts(self, success: bool) -> bool {
        match self {
            RoundOutcome::Any => true,
            RoundOutcome::Failed => !success,
            RoundOutcome::Succeeded => success,
        }
    }
}

/// Regression of the final policy network onto `(s, theta_bar)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyTraining {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for PolicyTraining {
    fn default() -> Self {
        Self {
            lr: 1e-2,
            epochs: 500,
            batch_size: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Rounds `M`.
    pub rounds: usize,
    /// Episodes per round `N`.
    pub episodes: usize,
    pub eta: f64,
    pub ga: GaConfig,
    pub round: RoundConfig,
    pub pfm: PfmConfig,
    pub policy: PolicyTraining,
    pub eval_episodes: usize,
    pub seed: u64,
    /// Required number of successful best episodes among the `M` rounds.
    pub target_successes: Option<usize>,
    /// Upper bound on rounds drawn while looking for the target mixture or
    /// an acceptable single round.
    pub max_rounds: usize,
    pub single_round_outcome: RoundOutcome,
    /// Standardize `delta` within each round before fitting the PFM.
    pub normalize_delta: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Gaac,
            rounds: 10,
            episodes: 3,
            eta: 0.25,
            ga: GaConfig::default(),
            round: RoundConfig::default(),
            pfm: PfmConfig::default(),
            policy: PolicyTraining::default(),
            eval_episodes: 80,
            seed: 42,
            target_successes: None,
            max_rounds: 200,
            single_round_outcome: RoundOutcome::Any,
            normalize_delta: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GaacError::InvalidArgument(m));
        if self.rounds == 0 || self.episodes == 0 {
            return bad("rounds and episodes must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        if self.eval_episodes == 0 {
            return bad("eval_episodes must be at least 1".into());
        }
        if let Some(k) = self.target_successes {
            if k > self.rounds {
                return bad(format!("target_successes {k} exceeds rounds {}", self.rounds));
            }
        }
        if self.max_rounds < self.rounds {
            return bad("max_rounds must be at least rounds".into());
        }
        if self.policy.batch_size == 0 || !(self.policy.lr.is_finite() && self.policy.lr > 0.0) {
            return bad("policy training needs a positive batch size and learning rate".into());
        }
        if self.round.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        let r = self.round.rates;
        if !(r.alpha_a >= 0.0 && r.alpha_c >= 0.0 && r.gamma > 0.0 && r.gamma <= 1.0) {
            return bad("learning rates must be >= 0 and gamma in (0, 1]".into());
        }
        self.ga.validate()
    }

    /// Total training episodes `E = M * N`.
    pub fn total_episodes(&self) -> usize {
        self.rounds * self.episodes
    }
}

/// Independent sub-seed for `(stream, index)` under `master`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ stream) ^ index)
}

const STREAM_ROUND: u64 = 1;
const STREAM_SINGLE: u64 = 2;
const STREAM_PFM: u64 = 3;
const STREAM_SUBSET: u64 = 4;
const STREAM_GA: u64 = 5;
const STREAM_POLICY: u64 = 6;
const STREAM_EVAL: u64 = 7;

/// Stage-1 output.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage1 {
    /// The `M` rounds used for training, relabelled `1..=M`.
    pub rounds: Vec<Vec<EpisodeRecord>>,
    /// Position of every kept round in the seeded round stream.
    pub stream_index: Vec<usize>,
    pub d_o: Vec<Sample>,
    pub best: BestEpisodes,
    /// Rounds drawn from the stream, kept or not.
    pub rounds_drawn: usize,
    /// Environment steps of the kept episodes.
    pub env_steps: usize,
    /// Environment steps spent on rounds that were drawn and discarded.
    pub discarded_steps: usize,
}

impl Stage1 {
    pub fn d1(&self) -> &[Sample] {
        &self.best.samples
    }

    pub fn successes(&self) -> usize {
        self.best.successes()
    }
}

fn round_succeeded(round: &[EpisodeRecord]) -> bool {
    round.iter().any(|e| e.reached_goal)
}

fn relabel(round: &mut [EpisodeRecord], id: usize) {
    for ep in round.iter_mut() {
        for smp in ep.samples.iter_mut() {
            smp.round_id = id;
        }
    }
}

fn round_steps(round: &[EpisodeRecord]) -> usize {
    round.iter().map(|e| e.len()).sum()
}

/// Draws rounds from a seeded stream, in stream order, keeping those `accept`
/// approves until `needed` are kept. Rounds are computed in parallel batches
/// but the outcome only depends on stream order.
fn draw_rounds<F>(
    master: u64,
    stream: u64,
    episodes: usize,
    cfg: &RoundConfig,
    max_rounds: usize,
    needed: usize,
    mut accept: F,
) -> Result<Stage1>
where
    F: FnMut(&[EpisodeRecord]) -> bool,
{
    let batch = rayon::current_num_threads().max(1);
    let mut kept = Vec::with_capacity(needed);
    let mut discarded_steps = 0;
    let mut next = 0;
    while next < max_rounds {
        let end = (next + batch).min(max_rounds);
        let computed: Vec<Result<Vec<EpisodeRecord>>> = (next..end)
            .into_par_iter()
            .map(|r| run_ac_round(derive_seed(master, stream, r as u64), r + 1, episodes, cfg))
            .collect();
        for (offset, round) in computed.into_iter().enumerate() {
            let round = round?;
            if accept(&round) {
                kept.push((next + offset, round));
                if kept.len() == needed {
                    return assemble_stage1(kept, next + offset + 1, discarded_steps);
                }
            } else {
                discarded_steps += round_steps(&round);
            }
        }
        next = end;
    }
    Err(GaacError::InvalidArgument(format!(
        "only {} acceptable rounds within {max_rounds} draws",
        kept.len()
    )))
}

/// Runs `M` independent rounds of `N` episodes. With a target mixture the
/// round stream is consumed in order, keeping the first `k` successful and
/// the first `M - k` unsuccessful rounds.
pub fn stage1_collect(cfg: &ExperimentConfig) -> Result<Stage1> {
    cfg.validate()?;
    let m = cfg.rounds;
    let target = cfg.target_successes;
    let (mut ok, mut fail) = (0, 0);
    draw_rounds(cfg.seed, STREAM_ROUND, cfg.episodes, &cfg.round, cfg.max_rounds, m, |round| {
        let Some(k) = target else { return true };
        if round_succeeded(round) {
            ok += 1;
            ok <= k
        } else {
            fail += 1;
            fail <= m - k
        }
    })
}

/// One continuous round of `M * N` episodes for the single-round modes.
pub fn single_round_collect(cfg: &ExperimentConfig) -> Result<Stage1> {
    cfg.validate()?;
    let outcome = cfg.single_round_outcome;
    draw_rounds(
        cfg.seed,
        STREAM_SINGLE,
        cfg.total_episodes(),
        &cfg.round,
        cfg.max_rounds,
        1,
        |round| outcome.accepts(round_succeeded(round)),
    )
}

fn assemble_stage1(
    kept: Vec<(usize, Vec<EpisodeRecord>)>,
    drawn: usize,
    discarded_steps: usize,
) -> Result<Stage1> {
    let mut rounds = Vec::with_capacity(kept.len());
    let mut stream_index = Vec::with_capacity(kept.len());
    for (id, (r, mut round)) in kept.into_iter().enumerate() {
        relabel(&mut round, id + 1);
        stream_index.push(r);
        rounds.push(round);
    }
    let d_o: Vec<Sample> = rounds
        .iter()
        .flat_map(|round| round.iter().flat_map(|e| e.samples.iter().cloned()))
        .collect();
    let env_steps = d_o.len();
    let best = dataset::best_episode_per_round(&rounds)?;
    Ok(Stage1 {
        rounds,
        stream_index,
        d_o,
        best,
        rounds_drawn: drawn,
        env_steps,
        discarded_steps,
    })
}

/// Stage-2 output.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage2 {
    pub pfm: PfmModel,
    pub bounds: Bounds,
    /// Indices into the training dataset that went through the GA.
    pub subset: Vec<usize>,
    pub w2: Vec<OptimizedPair>,
    /// `(index, seed fitness, best fitness)` for every optimized tuple.
    pub fitness: Vec<(usize, f64, f64)>,
    pub logs: Vec<(usize, Vec<GenerationLog>)>,
}

impl Stage2 {
    /// Tuples whose GA output scores strictly above the original `theta`.
    pub fn improved(&self) -> usize {
        self.fitness.iter().filter(|(_, a, b)| b > a).count()
    }

    pub fn improved_fraction(&self) -> f64 {
        if self.fitness.is_empty() {
            0.0
        } else {
            self.improved() as f64 / self.fitness.len() as f64
        }
    }
}

/// Fits the PFM on `data` and optimizes the `eta`-subset with the GA.
pub fn stage2_optimize(data: &[Sample], cfg: &ExperimentConfig) -> Result<Stage2> {
    let pfm = fit_pfm(data, cfg)?;
    stage2_with_pfm(data, pfm, cfg.eta, cfg)
}

/// Trains the PFM on `data`, standardizing `delta` per round if configured.
pub fn fit_pfm(data: &[Sample], cfg: &ExperimentConfig) -> Result<PfmModel> {
    if cfg.normalize_delta {
        let mut train = data.to_vec();
        dataset::normalize_deltas_per_round(&mut train);
        pfm::train_pfm(&train, &cfg.pfm, derive_seed(cfg.seed, STREAM_PFM, 0))
    } else {
        pfm::train_pfm(data, &cfg.pfm, derive_seed(cfg.seed, STREAM_PFM, 0))
    }
}

/// GA pass over the `eta`-subset with an already trained PFM.
pub fn stage2_with_pfm(data: &[Sample], pfm: PfmModel, eta: f64, cfg: &ExperimentConfig) -> Result<Stage2> {
    cfg.ga.validate()?;
    let (lo, hi) = dataset::theta_bounds(data)?;
    let bounds = Bounds::new(lo, hi)?;
    let (subset, _) = dataset::select_eta_subset(data.len(), eta, derive_seed(cfg.seed, STREAM_SUBSET, 0))?;
    let results: Vec<Result<(usize, ga::EvolveResult)>> = subset
        .par_iter()
        .map(|&i| {
            let smp = &data[i];
            let fitness = pfm.fitness_at(&smp.s);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_GA, i as u64));
            ga::evolve(&smp.theta, &bounds, &cfg.ga, &fitness, &mut rng).map(|r| (i, r))
        })
        .collect();
    let mut updates = BTreeMap::new();
    let mut fitness = Vec::with_capacity(subset.len());
    let mut logs = Vec::with_capacity(subset.len());
    for r in results {
        let (i, res) = r?;
        fitness.push((i, res.seed_fitness, res.best_fitness));
        updates.insert(i, res.theta_bar);
        logs.push((i, res.log));
    }
    let w2 = dataset::merge_optimized(data, &subset, &updates)?;
    Ok(Stage2 {
        pfm,
        bounds,
        subset,
        w2,
        fitness,
        logs,
    })
}

/// Pairs `(s, theta)` of a dataset without any GA update.
pub fn unoptimized_pairs(data: &[Sample]) -> Vec<OptimizedPair> {
    data.iter()
        .map(|smp| OptimizedPair {
            s: smp.s.clone(),
            theta_bar: smp.theta.clone(),
            was_ga_updated: false,
        })
        .collect()
}

/// Half squared error on `[mu; sigma]` measured after the sigma head.
fn head_loss(raw: &[f64], target: &[f64], d_raw: &mut [f64]) -> f64 {
    let d = raw.len() / 2;
    let mut loss = 0.0;
    for h in 0..d {
        let e_mu = raw[h] - target[h];
        let e_sigma = sigma_head(raw[d + h]) - target[d + h];
        loss += 0.5 * (e_mu * e_mu + e_sigma * e_sigma);
        d_raw[h] = e_mu;
        d_raw[d + h] = e_sigma * sigma_head_derivative(raw[d + h]);
    }
    loss
}

/// Stage 3: regresses a fresh policy network onto `s -> theta_bar`.
pub fn stage3_train_policy(
    w: &[OptimizedPair],
    cfg: &ExperimentConfig,
) -> Result<(GaussianPolicy, Vec<f64>)> {
    if w.is_empty() {
        return Err(GaacError::Empty("optimized dataset"));
    }
    let nets = &cfg.round.nets;
    let scaler = nets.scaler();
    let seed = derive_seed(cfg.seed, STREAM_POLICY, 0);
    let mut net = Mlp::init_xavier(&nets.actor_spec(), seed)?;
    let inputs: Vec<Vec<f64>> = w.iter().map(|p| scaler.apply(&p.s)).collect();
    let targets: Vec<Vec<f64>> = w.iter().map(|p| p.theta_bar.clone()).collect();
    let fit = FitConfig {
        lr: cfg.policy.lr,
        epochs: cfg.policy.epochs,
        batch_size: cfg.policy.batch_size,
        seed,
    };
    let history = mlp::fit_with_loss(&mut net, &inputs, &targets, &fit, head_loss)?;
    Ok((GaussianPolicy::new(net, scaler)?, history))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub rewards: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of `rewards`.
    pub std: f64,
    /// Episodes that ended without reaching the goal.
    pub failures: usize,
    pub steps: Vec<usize>,
}

impl EvaluationReport {
    pub fn from_rewards(rewards: Vec<f64>, reached: &[bool], steps: Vec<usize>) -> Result<Self> {
        if rewards.is_empty() {
            return Err(GaacError::Empty("evaluation rewards"));
        }
        let (mean, std) = mean_std(&rewards);
        Ok(Self {
            failures: reached.iter().filter(|r| !**r).count(),
            rewards,
            mean,
            std,
            steps,
        })
    }
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs `episodes` test episodes with sampled actions. Returns the report and
/// the highest-reward trajectory.
pub fn evaluate(
    policy: &GaussianPolicy,
    episodes: usize,
    max_steps: usize,
    seed: u64,
) -> Result<(EvaluationReport, Trajectory)> {
    if episodes == 0 {
        return Err(GaacError::InvalidArgument("evaluation needs at least one episode".into()));
    }
    let trajectories: Vec<Result<Trajectory>> = (0..episodes)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_EVAL, k as u64));
            env::run_episode(actor_critic::policy_fn(policy), &mut rng, max_steps)
        })
        .collect();
    let trajectories: Vec<Trajectory> = trajectories.into_iter().collect::<Result<_>>()?;
    let rewards: Vec<f64> = trajectories.iter().map(|t| t.cumulative_reward()).collect();
    let reached: Vec<bool> = trajectories.iter().map(|t| t.reached_goal).collect();
    let steps = trajectories.iter().map(|t| t.len()).collect();
    let mut best = 0;
    for (k, r) in rewards.iter().enumerate() {
        if *r > rewards[best] {
            best = k;
        }
    }
    let best_traj = trajectories[best].clone();
    Ok((EvaluationReport::from_rewards(rewards, &reached, steps)?, best_traj))
}

/// Everything a mode run produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config: ExperimentConfig,
    pub stage1: Stage1,
    pub stage2: Option<Stage2>,
    /// Dataset the final policy was regressed on.
    pub w: Vec<OptimizedPair>,
    pub policy: GaussianPolicy,
    pub policy_loss: Vec<f64>,
    pub eval: EvaluationReport,
    pub best_trajectory: Trajectory,
}

impl RunArtifacts {
    /// Cumulative reward of every training episode, in training order.
    pub fn train_rewards(&self) -> Vec<f64> {
        self.stage1
            .rounds
            .iter()
            .flat_map(|r| r.iter().map(|e| e.cumulative_reward))
            .collect()
    }
}

/// Stage-1 data for `cfg.mode`.
pub fn collect_for(cfg: &ExperimentConfig) -> Result<Stage1> {
    if cfg.mode.single_round() {
        single_round_collect(cfg)
    } else {
        stage1_collect(cfg)
    }
}

/// Stages 2 and 3 and the evaluation on top of existing stage-1 data.
pub fn finish_run(cfg: &ExperimentConfig, stage1: Stage1) -> Result<RunArtifacts> {
    cfg.validate()?;
    let data = training_data(cfg, &stage1);
    let stage2 = if runs_stage2(cfg) {
        Some(stage2_optimize(data, cfg)?)
    } else {
        None
    };
    let w = match &stage2 {
        Some(s2) => s2.w2.clone(),
        None => unoptimized_pairs(data),
    };
    let (policy, policy_loss) = stage3_train_policy(&w, cfg)?;
    let (eval, best_trajectory) = evaluate(&policy, cfg.eval_episodes, cfg.round.max_steps, cfg.seed)?;
    Ok(RunArtifacts {
        config: cfg.clone(),
        stage1,
        stage2,
        w,
        policy,
        policy_loss,
        eval,
        best_trajectory,
    })
}

/// Dataset stages 2 and 3 start from: `D_o` for the single-round modes,
/// `D_1` otherwise.
pub fn training_data<'a>(cfg: &ExperimentConfig, stage1: &'a Stage1) -> &'a [Sample] {
    if cfg.mode.single_round() {
        &stage1.d_o
    } else {
        stage1.d1()
    }
}

/// Whether `cfg` runs the PFM and the GA at all.
pub fn runs_stage2(cfg: &ExperimentConfig) -> bool {
    cfg.mode.uses_ga() && cfg.eta > 0.0
}

/// Full run of `cfg.mode`.
pub fn run_mode(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    let stage1 = collect_for(cfg)?;
    finish_run(cfg, stage1)
}

/// All four modes with shared seeds; the multi-round modes share stage 1 and
/// the single-round modes share their round.
pub fn ablation(cfg: &ExperimentConfig) -> Result<Vec<RunArtifacts>> {
    let multi = stage1_collect(cfg)?;
    let single = single_round_collect(cfg)?;
    Mode::ALL
        .iter()
        .map(|&mode| {
            let c = ExperimentConfig { mode, ..cfg.clone() };
            let s1 = if mode.single_round() { single.clone() } else { multi.clone() };
            finish_run(&c, s1)
        })
        .collect()
}

/// Per-`eta` results of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaResult {
    pub eta: f64,
    pub repeat: usize,
    pub seed: u64,
    pub eval: EvaluationReport,
    pub improved_fraction: f64,
}

/// GAAC for every `eta`, `repeats` times. Each repeat draws its own stage-1
/// dataset and PFM, both shared across all `eta` values.
pub fn eta_sweep(cfg: &ExperimentConfig, etas: &[f64], repeats: usize) -> Result<Vec<EtaResult>> {
    if etas.is_empty() || repeats == 0 {
        return Err(GaacError::InvalidArgument("eta sweep needs etas and repeats".into()));
    }
    let mut out = Vec::with_capacity(etas.len() * repeats);
    for rep in 0..repeats {
        let seed = derive_seed(cfg.seed, 0xe7a, rep as u64);
        let base = ExperimentConfig { mode: Mode::Gaac, seed, ..cfg.clone() };
        let stage1 = stage1_collect(&base)?;
        let pfm = fit_pfm(stage1.d1(), &base)?;
        for &eta in etas {
            let c = ExperimentConfig { eta, ..base.clone() };
            c.validate()?;
            let (w, improved_fraction) = if eta > 0.0 {
                let s2 = stage2_with_pfm(stage1.d1(), pfm.clone(), eta, &c)?;
                let f = s2.improved_fraction();
                (s2.w2, f)
            } else {
                (unoptimized_pairs(stage1.d1()), 0.0)
            };
            let (policy, _) = stage3_train_policy(&w, &c)?;
            let (eval, _) = evaluate(&policy, c.eval_episodes, c.round.max_steps, seed)?;
            out.push(EtaResult {
                eta,
                repeat: rep,
                seed,
                eval,
                improved_fraction,
            });
        }
    }
    Ok(out)
}

/// Long online actor-critic run for baseline curves.
#[derive(Debug, Clone, PartialEq)]
pub struct AcCurve {
    pub rewards: Vec<f64>,
    pub reached: Vec<bool>,
    /// Earlier attempts discarded as stuck.
    pub resampled: usize,
}

impl AcCurve {
    /// Mean of the last `n` episode rewards.
    pub fn trailing_mean(&self, n: usize) -> f64 {
        let n = n.min(self.rewards.len()).max(1);
        let tail = &self.rewards[self.rewards.len() - n..];
        tail.iter().sum::<f64>() / n as f64
    }
}

/// Runs `episodes` online episodes. An attempt with no goal in its first
/// `stuck_window` episodes is abandoned and a fresh seed is drawn, up to
/// `max_attempts` attempts.
pub fn ac_curve(
    round: &RoundConfig,
    episodes: usize,
    seed: u64,
    stuck_window: usize,
    max_attempts: usize,
) -> Result<AcCurve> {
    use crate::actor_critic::AcState;
    for attempt in 0..max_attempts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_SINGLE ^ 0xac, attempt as u64));
        let mut ac = AcState::fresh(&round.nets, round.rates, &mut rng)?;
        let mut rewards = Vec::with_capacity(episodes);
        let mut reached = Vec::with_capacity(episodes);
        let mut stuck = false;
        for e in 1..=episodes {
            let ep = ac.run_episode(&mut rng, 1, e, round.max_steps)?;
            rewards.push(ep.cumulative_reward);
            reached.push(ep.reached_goal);
            if e == stuck_window && !reached.iter().any(|r| *r) {
                stuck = true;
                break;
            }
        }
        if !stuck {
            return Ok(AcCurve {
                rewards,
                reached,
                resampled: attempt,
            });
        }
    }
    Err(GaacError::InvalidArgument(format!(
        "every one of {max_attempts} attempts was stuck"
    )))
}
