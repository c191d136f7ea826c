//! Genetic search for the policy parameters with the highest predicted TD
//! error at a fixed state.
//!
//! One call to [`evolve`] optimizes one tuple. The initial population mixes
//! lattice draws from the dataset-wide `theta` box with Gaussian draws around
//! the tuple's own `theta`. Every generation keeps the `J - L` members that
//! were not chosen as parents and replaces the `L` parents with mutated
//! children of softmax-weighted uniform crossover.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{GaacError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    /// Population size `J`, even.
    pub population: usize,
    /// Number of parent pairs `L`, at most `J / 2`.
    pub parent_pairs: usize,
    pub max_generations: usize,
    /// Base mutation rate `alpha_m`.
    pub mutation_rate: f64,
    /// Evolution stops once the population fitness sum moves by at most this.
    pub stop_threshold: f64,
    /// Lattice resolution `epsilon` of the uniform half of the initial population.
    pub resolution: f64,
    /// Standard deviation of the Gaussian half of the initial population.
    pub gaussian_spread: f64,
    /// Draw mutated genes from `[0, 1]` instead of the `theta` box.
    pub mutation_unit_interval: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            parent_pairs: 25,
            max_generations: 20,
            mutation_rate: 0.01,
            stop_threshold: 0.1,
            resolution: 0.05,
            gaussian_spread: 0.1,
            mutation_unit_interval: false,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GaacError::InvalidArgument(m));
        if self.population < 2 || !self.population.is_multiple_of(2) {
            return bad(format!("population must be even and >= 2, got {}", self.population));
        }
        if self.parent_pairs < 2 || self.parent_pairs > self.population / 2 {
            return bad(format!(
                "parent pairs must lie in [2, {}], got {}",
                self.population / 2,
                self.parent_pairs
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad(format!("mutation rate must lie in [0, 1], got {}", self.mutation_rate));
        }
        if !(self.stop_threshold > 0.0) {
            return bad("stop threshold must be positive".into());
        }
        if !(self.resolution > 0.0) {
            return bad("resolution must be positive".into());
        }
        if !(self.gaussian_spread >= 0.0) {
            return bad("gaussian spread must be non-negative".into());
        }
        Ok(())
    }
}

/// Element-wise search box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(GaacError::Shape("bounds must be non-empty and equally long".into()));
        }
        if let Some(h) = (0..lo.len()).find(|&h| !(lo[h] <= hi[h])) {
            return Err(GaacError::InvalidArgument(format!(
                "lower bound {} exceeds upper bound {} in dimension {h}",
                lo[h], hi[h]
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .enumerate()
                .all(|(h, &v)| v >= self.lo[h] && v <= self.hi[h])
    }

    /// Lattice `{lo, lo + eps', ..., hi}` in dimension `h`, where `eps'` is
    /// the closest step to `resolution` that divides the range evenly.
    pub fn lattice(&self, h: usize, resolution: f64) -> Vec<f64> {
        let range = self.hi[h] - self.lo[h];
        if range == 0.0 {
            return vec![self.lo[h]];
        }
        let steps = ((range / resolution).round() as usize).max(1);
        (0..=steps)
            .map(|k| {
                if k == steps {
                    self.hi[h]
                } else {
                    self.lo[h] + range * k as f64 / steps as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub generation: usize,
}

impl Population {
    pub fn fitness_sum(&self) -> f64 {
        self.fitness.iter().sum()
    }

    pub fn best(&self) -> (usize, f64) {
        let mut best = (0, self.fitness[0]);
        for (i, &f) in self.fitness.iter().enumerate().skip(1) {
            if f > best.1 {
                best = (i, f);
            }
        }
        best
    }
}

pub fn init_population<R, F>(
    theta_seed: &[f64],
    bounds: &Bounds,
    cfg: &GaConfig,
    fitness: &F,
    rng: &mut R,
) -> Result<Population>
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    if theta_seed.len() != bounds.dim() {
        return Err(GaacError::Shape("seed and bounds differ in width".into()));
    }
    let half = cfg.population / 2;
    let lattices: Vec<Vec<f64>> = (0..bounds.dim())
        .map(|h| bounds.lattice(h, cfg.resolution))
        .collect();
    let mut members: Vec<Vec<f64>> = Vec::with_capacity(cfg.population);
    for _ in 0..half {
        members.push(
            lattices
                .iter()
                .map(|l| l[rng.random_range(0..l.len())])
                .collect(),
        );
    }
    for _ in half..cfg.population {
        members.push(
            (0..bounds.dim())
                .map(|h| {
                    let n = Normal::new(theta_seed[h], cfg.gaussian_spread)
                        .expect("finite spread")
                        .sample(rng);
                    n.clamp(bounds.lo[h], bounds.hi[h])
                })
                .collect(),
        );
    }
    let fitness = members.iter().map(|m| fitness(m)).collect();
    Ok(Population {
        members,
        fitness,
        generation: 0,
    })
}

/// Softmax of the fitness values, shifted by the maximum.
pub fn selection_probs(fitness: &[f64]) -> Vec<f64> {
    let max = fitness.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = fitness.iter().map(|&f| (f - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Indices of the `l` most probable members, ties broken by lower index.
pub fn top_members(probs: &[f64], l: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..probs.len()).collect();
    idx.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    idx.truncate(l);
    idx
}

/// Pairs every top member with a different top member through a random
/// fixed-point-free reordering. Returns `(i_q, j_q)` index pairs.
pub fn pick_parents<R: Rng + ?Sized>(
    probs: &[f64],
    l: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if l < 2 {
        return Err(GaacError::InvalidArgument(
            "at least two parents are needed for distinct pairs".into(),
        ));
    }
    if l > probs.len() / 2 {
        return Err(GaacError::InvalidArgument(format!(
            "{l} parent pairs exceed half the population of {}",
            probs.len()
        )));
    }
    let first = top_members(probs, l);
    let mut order: Vec<usize> = (0..l).collect();
    loop {
        order.shuffle(rng);
        if order.iter().enumerate().all(|(q, &k)| q != k) {
            break;
        }
    }
    Ok(first
        .iter()
        .zip(&order)
        .map(|(&i, &k)| (i, first[k]))
        .collect())
}

/// Uniform crossover weighted by the parents' relative selection probability.
pub fn crossover<R: Rng + ?Sized>(
    theta_i: &[f64],
    theta_j: &[f64],
    p_i: f64,
    p_j: f64,
    rng: &mut R,
) -> Vec<f64> {
    let rel = if p_i + p_j > 0.0 { p_i / (p_i + p_j) } else { 0.5 };
    theta_i
        .iter()
        .zip(theta_j)
        .map(|(&a, &b)| {
            let u: f64 = rng.random();
            if u <= rel {
                a
            } else {
                b
            }
        })
        .collect()
}

pub fn mutation_probability(p_i: f64, p_j: f64, base_rate: f64) -> f64 {
    (base_rate * (1.0 - p_i - p_j)).max(0.0)
}

/// Replaces each gene with probability `alpha_m (1 - p_i - p_j)` by a
/// uniform draw from the box (or from `[0, 1]` when `unit_interval`).
pub fn mutate<R: Rng + ?Sized>(
    child: &[f64],
    p_i: f64,
    p_j: f64,
    base_rate: f64,
    bounds: &Bounds,
    unit_interval: bool,
    rng: &mut R,
) -> Vec<f64> {
    let rate = mutation_probability(p_i, p_j, base_rate);
    child
        .iter()
        .enumerate()
        .map(|(h, &v)| {
            let u: f64 = rng.random();
            if u < rate {
                if unit_interval {
                    rng.random::<f64>()
                } else if bounds.lo[h] < bounds.hi[h] {
                    rng.random_range(bounds.lo[h]..=bounds.hi[h])
                } else {
                    bounds.lo[h]
                }
            } else {
                v
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationLog {
    pub generation: usize,
    pub best_fitness: f64,
    pub sum_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveResult {
    pub theta_bar: Vec<f64>,
    pub best_fitness: f64,
    pub seed_fitness: f64,
    /// Generations produced after the initial population.
    pub generations: usize,
    pub log: Vec<GenerationLog>,
}

impl EvolveResult {
    pub fn improved(&self) -> bool {
        self.best_fitness > self.seed_fitness
    }
}

/// Produces generation `u + 1` from generation `u`.
pub fn next_generation<R, F>(
    pop: &Population,
    bounds: &Bounds,
    cfg: &GaConfig,
    fitness: &F,
    rng: &mut R,
) -> Result<Population>
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    let probs = selection_probs(&pop.fitness);
    let pairs = pick_parents(&probs, cfg.parent_pairs, rng)?;
    let mut is_parent = vec![false; pop.members.len()];
    pairs.iter().for_each(|&(i, _)| is_parent[i] = true);

    let mut members = Vec::with_capacity(pop.members.len());
    let mut scores = Vec::with_capacity(pop.members.len());
    for &(i, j) in &pairs {
        let child = crossover(&pop.members[i], &pop.members[j], probs[i], probs[j], rng);
        let child = mutate(
            &child,
            probs[i],
            probs[j],
            cfg.mutation_rate,
            bounds,
            cfg.mutation_unit_interval,
            rng,
        );
        scores.push(fitness(&child));
        members.push(child);
    }
    for (k, m) in pop.members.iter().enumerate() {
        if !is_parent[k] {
            members.push(m.clone());
            scores.push(pop.fitness[k]);
        }
    }
    Ok(Population {
        members,
        fitness: scores,
        generation: pop.generation + 1,
    })
}

/// Runs the GA for one tuple and returns the best individual ever seen,
/// `theta_seed` included, so the result never scores below the seed.
pub fn evolve<R, F>(
    theta_seed: &[f64],
    bounds: &Bounds,
    cfg: &GaConfig,
    fitness: &F,
    rng: &mut R,
) -> Result<EvolveResult>
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    let seed_fitness = fitness(theta_seed);
    let mut best = (theta_seed.to_vec(), seed_fitness);
    let mut pop = init_population(theta_seed, bounds, cfg, fitness, rng)?;
    let mut log = Vec::with_capacity(cfg.max_generations + 1);
    let track = |pop: &Population, best: &mut (Vec<f64>, f64), log: &mut Vec<GenerationLog>| {
        let (i, f) = pop.best();
        if f > best.1 {
            *best = (pop.members[i].clone(), f);
        }
        log.push(GenerationLog {
            generation: pop.generation,
            best_fitness: best.1,
            sum_fitness: pop.fitness_sum(),
        });
    };
    track(&pop, &mut best, &mut log);
    for _ in 0..cfg.max_generations {
        let next = next_generation(&pop, bounds, cfg, fitness, rng)?;
        let change = (next.fitness_sum() - pop.fitness_sum()).abs();
        pop = next;
        track(&pop, &mut best, &mut log);
        if change <= cfg.stop_threshold {
            break;
        }
    }
    Ok(EvolveResult {
        theta_bar: best.0,
        best_fitness: best.1,
        seed_fitness,
        generations: pop.generation,
        log,
    })
}

/// `sample_id,generation,best_fitness,sum_fitness`.
pub fn generation_log_csv(entries: &[(usize, &[GenerationLog])]) -> String {
    let mut out = String::from("sample_id,generation,best_fitness,sum_fitness\n");
    for (id, log) in entries {
        for g in log.iter() {
            writeln!(out, "{id},{},{:?},{:?}", g.generation, g.best_fitness, g.sum_fitness).unwrap();
        }
    }
    out
}
