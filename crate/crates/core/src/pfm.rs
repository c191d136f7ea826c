//! Parameter-fitness model: regression `(s, theta) -> delta`.
//!
//! Inputs are standardized with per-column statistics of the training set;
//! the statistics travel with the model so [`PfmModel::predict`] needs
//! nothing else. Targets are used as recorded.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Sample;
use crate::error::{GaacError, Result};
use crate::mlp::{self, Activation, FitConfig, LayerSpec, Mlp};

#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().ok_or(GaacError::Empty("standardizer rows"))?.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; width];
        for r in rows {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for r in rows {
            var.iter_mut()
                .zip(r.iter().zip(&mean))
                .for_each(|(s, (v, m))| *s += (v - m) * (v - m));
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn identity(width: usize) -> Self {
        Self {
            mean: vec![0.0; width],
            std: vec![1.0; width],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// One `(learning rate, epochs)` candidate for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSetting {
    pub lr: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfmConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub batch_size: usize,
    /// Setting used when cross-validation is off.
    pub default_setting: TrainSetting,
    pub grid: Vec<TrainSetting>,
    /// `0` disables cross-validation.
    pub cv_folds: usize,
    pub cv_repeats: usize,
    pub standardize_inputs: bool,
}

impl Default for PfmConfig {
    fn default() -> Self {
        Self {
            hidden: vec![40, 40],
            activation: Activation::Elu,
            batch_size: 64,
            default_setting: TrainSetting {
                lr: 1e-3,
                epochs: 200,
            },
            grid: vec![
                TrainSetting { lr: 1e-3, epochs: 200 },
                TrainSetting { lr: 1e-3, epochs: 500 },
                TrainSetting { lr: 3e-4, epochs: 200 },
                TrainSetting { lr: 3e-4, epochs: 500 },
            ],
            cv_folds: 0,
            cv_repeats: 1,
            standardize_inputs: true,
        }
    }
}

impl PfmConfig {
    pub fn spec(&self, input_width: usize) -> Vec<LayerSpec> {
        LayerSpec::chain(input_width, &self.hidden, 1, self.activation, Activation::Linear)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub settings: Vec<TrainSetting>,
    /// `scores[k]` holds `folds * repeats` validation MSEs for `settings[k]`.
    pub scores: Vec<Vec<f64>>,
    pub best: usize,
}

impl CvReport {
    pub fn mean_score(&self, k: usize) -> f64 {
        self.scores[k].iter().sum::<f64>() / self.scores[k].len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfmModel {
    pub net: Mlp,
    pub standardizer: Standardizer,
    pub state_dim: usize,
    pub theta_dim: usize,
    pub setting: TrainSetting,
    pub loss_history: Vec<f64>,
    pub final_mse: f64,
    pub cv: Option<CvReport>,
    /// Identical inputs carry different targets somewhere in the training set.
    pub degenerate: bool,
}

impl PfmModel {
    pub fn input_width(&self) -> usize {
        self.state_dim + self.theta_dim
    }

    pub fn predict(&self, s: &[f64], theta: &[f64]) -> Result<f64> {
        if s.len() != self.state_dim || theta.len() != self.theta_dim {
            return Err(GaacError::Shape(format!(
                "PFM expects state {} and theta {}, got {} and {}",
                self.state_dim,
                self.theta_dim,
                s.len(),
                theta.len()
            )));
        }
        let mut x = Vec::with_capacity(self.input_width());
        x.extend_from_slice(s);
        x.extend_from_slice(theta);
        Ok(self.net.forward(&self.standardizer.apply(&x))?[0])
    }

    /// Fitness closure over `theta` for a fixed state; no shape checks.
    pub fn fitness_at<'a>(&'a self, s: &'a [f64]) -> impl Fn(&[f64]) -> f64 + 'a {
        move |theta| self.predict(s, theta).expect("theta width matches model")
    }

    /// Network text followed by a `standardize` block.
    pub fn to_text(&self) -> String {
        let mut out = self.net.to_text();
        writeln!(out, "standardize {} {}", self.state_dim, self.theta_dim).unwrap();
        out.push_str("mean");
        self.standardizer.mean.iter().for_each(|v| write!(out, " {v:?}").unwrap());
        out.push_str("\nstd");
        self.standardizer.std.iter().for_each(|v| write!(out, " {v:?}").unwrap());
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let split = text.find("standardize ").ok_or_else(|| GaacError::Parse {
            line: 0,
            msg: "missing standardize block".into(),
        })?;
        let net = Mlp::from_text(&text[..split])?;
        let block: Vec<&str> = text[split..].lines().collect();
        let bad = |msg: &str| GaacError::Parse {
            line: 0,
            msg: msg.to_string(),
        };
        if block.len() < 3 {
            return Err(bad("truncated standardize block"));
        }
        let dims: Vec<usize> = block[0]
            .split_whitespace()
            .skip(1)
            .map(|t| t.parse().map_err(|_| bad("bad dimension")))
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(bad("standardize needs two dimensions"));
        }
        let row = |line: &str, tag: &str| -> Result<Vec<f64>> {
            let mut it = line.split_whitespace();
            if it.next() != Some(tag) {
                return Err(bad("unexpected row tag"));
            }
            it.map(|t| t.parse::<f64>().map_err(|_| bad("bad number"))).collect()
        };
        let mean = row(block[1], "mean")?;
        let std = row(block[2], "std")?;
        if mean.len() != dims[0] + dims[1] || std.len() != mean.len() || net.input_width() != mean.len() {
            return Err(bad("standardize block does not match network"));
        }
        Ok(Self {
            net,
            standardizer: Standardizer { mean, std },
            state_dim: dims[0],
            theta_dim: dims[1],
            setting: TrainSetting { lr: 0.0, epochs: 0 },
            loss_history: Vec::new(),
            final_mse: f64::NAN,
            cv: None,
            degenerate: false,
        })
    }
}

fn design(d: &[Sample]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let inputs = d
        .iter()
        .map(|x| {
            let mut v = x.s.clone();
            v.extend_from_slice(&x.theta);
            v
        })
        .collect();
    let targets = d.iter().map(|x| vec![x.delta]).collect();
    (inputs, targets)
}

fn has_conflicting_duplicates(inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> bool {
    let mut keyed: Vec<(Vec<u64>, u64)> = inputs
        .iter()
        .zip(targets)
        .map(|(x, t)| (x.iter().map(|v| v.to_bits()).collect(), t[0].to_bits()))
        .collect();
    keyed.sort();
    keyed.windows(2).any(|w| w[0].0 == w[1].0 && w[0].1 != w[1].1)
}

fn fit_setting(
    d: &[Sample],
    cfg: &PfmConfig,
    setting: TrainSetting,
    seed: u64,
) -> Result<(Mlp, Standardizer, Vec<f64>)> {
    let (inputs, targets) = design(d);
    let standardizer = if cfg.standardize_inputs {
        Standardizer::fit(&inputs)?
    } else {
        Standardizer::identity(inputs[0].len())
    };
    let scaled: Vec<Vec<f64>> = inputs.iter().map(|x| standardizer.apply(x)).collect();
    let mut net = Mlp::init_xavier(&cfg.spec(inputs[0].len()), seed)?;
    let fit = FitConfig {
        lr: setting.lr,
        epochs: setting.epochs,
        batch_size: cfg.batch_size,
        seed: seed ^ 0x9e37_79b9_7f4a_7c15,
    };
    let history = mlp::mse_fit(&mut net, &scaled, &targets, &fit)?;
    if !net.is_finite() {
        return Err(GaacError::NonFinite("PFM weights"));
    }
    Ok((net, standardizer, history))
}

fn check_dataset(d: &[Sample]) -> Result<(usize, usize)> {
    if d.len() < 10 {
        return Err(GaacError::InvalidArgument(format!(
            "PFM training needs at least 10 samples, got {}",
            d.len()
        )));
    }
    let (ds, dt) = (d[0].s.len(), d[0].theta.len());
    if d.iter().any(|x| x.s.len() != ds || x.theta.len() != dt) {
        return Err(GaacError::Shape("samples differ in width".into()));
    }
    Ok((ds, dt))
}

/// Trains with one fixed setting.
pub fn train_pfm_with(d1: &[Sample], cfg: &PfmConfig, setting: TrainSetting, seed: u64) -> Result<PfmModel> {
    let (state_dim, theta_dim) = check_dataset(d1)?;
    let (net, standardizer, loss_history) = fit_setting(d1, cfg, setting, seed)?;
    let (inputs, targets) = design(d1);
    let scaled: Vec<Vec<f64>> = inputs.iter().map(|x| standardizer.apply(x)).collect();
    let final_mse = mlp::mse_eval(&net, &scaled, &targets)?;
    Ok(PfmModel {
        net,
        standardizer,
        state_dim,
        theta_dim,
        setting,
        loss_history,
        final_mse,
        cv: None,
        degenerate: has_conflicting_duplicates(&inputs, &targets),
    })
}

/// Trains the PFM; with `cv_folds > 0` the grid is cross-validated first and
/// the winning setting is retrained on the whole dataset.
pub fn train_pfm(d1: &[Sample], cfg: &PfmConfig, seed: u64) -> Result<PfmModel> {
    if cfg.cv_folds == 0 {
        return train_pfm_with(d1, cfg, cfg.default_setting, seed);
    }
    let report = cross_validate(d1, cfg, cfg.cv_folds, cfg.cv_repeats, seed)?;
    let mut model = train_pfm_with(d1, cfg, report.settings[report.best], seed)?;
    model.cv = Some(report);
    Ok(model)
}

/// Seeded k-fold partition of `0..n`; folds are disjoint and cover every index.
pub fn kfold_splits(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(GaacError::InvalidArgument("cross-validation needs at least 2 folds".into()));
    }
    if folds > n {
        return Err(GaacError::InvalidArgument(format!("{folds} folds exceed {n} samples")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Vec::with_capacity(n / folds + 1); folds];
    for (k, i) in idx.into_iter().enumerate() {
        out[k % folds].push(i);
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}

/// Validation MSE of every grid setting on every fold of every repeat.
pub fn cross_validate(
    d1: &[Sample],
    cfg: &PfmConfig,
    folds: usize,
    repeats: usize,
    seed: u64,
) -> Result<CvReport> {
    check_dataset(d1)?;
    if cfg.grid.is_empty() {
        return Err(GaacError::Empty("cross-validation grid"));
    }
    let splits: Vec<Vec<Vec<usize>>> = (0..repeats.max(1))
        .map(|r| kfold_splits(d1.len(), folds, seed.wrapping_add(r as u64)))
        .collect::<Result<_>>()?;
    let mut scores = vec![Vec::with_capacity(folds * repeats); cfg.grid.len()];
    for (k, &setting) in cfg.grid.iter().enumerate() {
        for (r, split) in splits.iter().enumerate() {
            for (f, held) in split.iter().enumerate() {
                let mut mask = vec![false; d1.len()];
                held.iter().for_each(|&i| mask[i] = true);
                let train: Vec<Sample> =
                    (0..d1.len()).filter(|&i| !mask[i]).map(|i| d1[i].clone()).collect();
                let valid: Vec<Sample> = held.iter().map(|&i| d1[i].clone()).collect();
                let fold_seed = seed ^ ((r * 1000 + f) as u64).wrapping_mul(0x2545_f491_4f6c_dd1d);
                let (net, st, _) = fit_setting(&train, cfg, setting, fold_seed)?;
                let (vi, vt) = design(&valid);
                let vi: Vec<Vec<f64>> = vi.iter().map(|x| st.apply(x)).collect();
                scores[k].push(mlp::mse_eval(&net, &vi, &vt)?);
            }
        }
    }
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let best = (0..scores.len())
        .min_by(|&a, &b| mean(&scores[a]).total_cmp(&mean(&scores[b])).then(a.cmp(&b)))
        .expect("non-empty grid");
    Ok(CvReport {
        settings: cfg.grid.clone(),
        scores,
        best,
    })
}
