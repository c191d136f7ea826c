//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Missing
//! keys keep their defaults; unknown keys are rejected.

use std::path::Path;

use crate::error::{GaacError, Result};
use crate::mlp::Activation;
use crate::pipeline::{ExperimentConfig, Mode, RoundOutcome};

fn err(key: &str, msg: impl Into<String>) -> GaacError {
    GaacError::Config {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| err(key, format!("cannot parse `{v}`")))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = parse_num(key, v)?;
    if !x.is_finite() {
        return Err(err(key, "must be finite"));
    }
    Ok(x)
}

/// Accepts `0.25` as well as `25%`.
fn parse_fraction(key: &str, v: &str) -> Result<f64> {
    match v.strip_suffix('%') {
        Some(p) => Ok(parse_f64(key, p.trim())? / 100.0),
        None => parse_f64(key, v),
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(err(key, format!("expected a boolean, got `{v}`"))),
    }
}

fn parse_widths(key: &str, v: &str) -> Result<Vec<usize>> {
    let widths = v
        .split(',')
        .map(|w| parse_num::<usize>(key, w.trim()))
        .collect::<Result<Vec<_>>>()?;
    if widths.contains(&0) {
        return Err(err(key, "layer widths must be positive"));
    }
    Ok(widths)
}

fn parse_activation(key: &str, v: &str) -> Result<Activation> {
    Activation::from_tag(&v.to_ascii_lowercase()).ok_or_else(|| err(key, format!("unknown activation `{v}`")))
}

fn join(w: &[usize]) -> String {
    w.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Canonical key for a possibly aliased name.
fn canonical(key: &str) -> &str {
    match key {
        "m" | "M" => "rounds",
        "n" | "N" => "episodes",
        "J" => "population",
        "L" | "K" => "parent_pairs",
        "alpha_m" => "mutation_rate",
        "alpha_s" => "stop_threshold",
        "epsilon" => "resolution",
        other => other,
    }
}

fn apply(cfg: &mut ExperimentConfig, key: &str, v: &str) -> Result<()> {
    match key {
        "mode" => cfg.mode = Mode::from_tag(v).ok_or_else(|| err(key, format!("unknown mode `{v}`")))?,
        "rounds" => cfg.rounds = parse_num(key, v)?,
        "episodes" => cfg.episodes = parse_num(key, v)?,
        "eta" => cfg.eta = parse_fraction(key, v)?,
        "seed" => cfg.seed = parse_num(key, v)?,
        "eval_episodes" => cfg.eval_episodes = parse_num(key, v)?,
        "target_successes" => {
            cfg.target_successes = match v {
                "none" | "" => None,
                _ => Some(parse_num(key, v)?),
            }
        }
        "max_rounds" => cfg.max_rounds = parse_num(key, v)?,
        "single_round" => {
            cfg.single_round_outcome =
                RoundOutcome::from_tag(v).ok_or_else(|| err(key, format!("expected any, failed or succeeded, got `{v}`")))?
        }
        "normalize_delta" => cfg.normalize_delta = parse_bool(key, v)?,
        "gamma" => cfg.round.rates.gamma = parse_f64(key, v)?,
        "alpha_a" => cfg.round.rates.alpha_a = parse_f64(key, v)?,
        "alpha_c" => cfg.round.rates.alpha_c = parse_f64(key, v)?,
        "max_steps" => cfg.round.max_steps = parse_num(key, v)?,
        "actor_hidden" => cfg.round.nets.actor_hidden = parse_widths(key, v)?,
        "critic_hidden" => cfg.round.nets.critic_hidden = parse_widths(key, v)?,
        "hidden_activation" => cfg.round.nets.hidden_activation = parse_activation(key, v)?,
        "scale_inputs" => cfg.round.nets.scale_inputs = parse_bool(key, v)?,
        "population" => cfg.ga.population = parse_num(key, v)?,
        "parent_pairs" => cfg.ga.parent_pairs = parse_num(key, v)?,
        "max_generations" => cfg.ga.max_generations = parse_num(key, v)?,
        "mutation_rate" => cfg.ga.mutation_rate = parse_f64(key, v)?,
        "stop_threshold" => cfg.ga.stop_threshold = parse_f64(key, v)?,
        "resolution" => cfg.ga.resolution = parse_f64(key, v)?,
        "gaussian_spread" => cfg.ga.gaussian_spread = parse_f64(key, v)?,
        "mutation_unit_interval" => cfg.ga.mutation_unit_interval = parse_bool(key, v)?,
        "pfm_hidden" => cfg.pfm.hidden = parse_widths(key, v)?,
        "pfm_activation" => cfg.pfm.activation = parse_activation(key, v)?,
        "pfm_batch_size" => cfg.pfm.batch_size = parse_num(key, v)?,
        "pfm_lr" => cfg.pfm.default_setting.lr = parse_f64(key, v)?,
        "pfm_epochs" => cfg.pfm.default_setting.epochs = parse_num(key, v)?,
        "pfm_cv_folds" => cfg.pfm.cv_folds = parse_num(key, v)?,
        "pfm_cv_repeats" => cfg.pfm.cv_repeats = parse_num(key, v)?,
        "pfm_standardize" => cfg.pfm.standardize_inputs = parse_bool(key, v)?,
        "policy_lr" => cfg.policy.lr = parse_f64(key, v)?,
        "policy_epochs" => cfg.policy.epochs = parse_num(key, v)?,
        "policy_batch_size" => cfg.policy.batch_size = parse_num(key, v)?,
        _ => return Err(err(key, "unknown key")),
    }
    Ok(())
}

/// Per-key range checks, so a violation names the offending key.
fn check(cfg: &ExperimentConfig) -> Result<()> {
    let r = cfg.round.rates;
    if !(r.gamma > 0.0 && r.gamma <= 1.0) {
        return Err(err("gamma", format!("must lie in (0, 1], got {}", r.gamma)));
    }
    if r.alpha_a < 0.0 {
        return Err(err("alpha_a", "must be >= 0"));
    }
    if r.alpha_c < 0.0 {
        return Err(err("alpha_c", "must be >= 0"));
    }
    if !(0.0..=1.0).contains(&cfg.eta) {
        return Err(err("eta", format!("must lie in [0, 1], got {}", cfg.eta)));
    }
    for (key, v) in [
        ("rounds", cfg.rounds),
        ("episodes", cfg.episodes),
        ("eval_episodes", cfg.eval_episodes),
        ("max_steps", cfg.round.max_steps),
        ("pfm_batch_size", cfg.pfm.batch_size),
        ("policy_batch_size", cfg.policy.batch_size),
    ] {
        if v == 0 {
            return Err(err(key, "must be at least 1"));
        }
    }
    if cfg.ga.population < 2 || !cfg.ga.population.is_multiple_of(2) {
        return Err(err("population", "must be even and at least 2"));
    }
    if cfg.ga.parent_pairs < 2 || cfg.ga.parent_pairs > cfg.ga.population / 2 {
        return Err(err("parent_pairs", "must lie in [2, population / 2]"));
    }
    if cfg.pfm.cv_folds == 1 {
        return Err(err("pfm_cv_folds", "use 0 to disable or at least 2"));
    }
    if let Some(k) = cfg.target_successes {
        if k > cfg.rounds {
            return Err(err("target_successes", "cannot exceed rounds"));
        }
    }
    cfg.validate().map_err(|e| err("config", e.to_string()))
}

/// Parses configuration text on top of the defaults.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen = std::collections::BTreeSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| GaacError::Parse {
            line: n + 1,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = canonical(key.trim());
        if !seen.insert(key.to_string()) {
            return Err(err(key, format!("set twice (line {})", n + 1)));
        }
        apply(&mut cfg, key, value.trim())?;
    }
    check(&cfg)?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

/// Every key with its current value; parses back to the same config.
pub fn config_to_text(cfg: &ExperimentConfig) -> String {
    let target = cfg.target_successes.map_or("none".to_string(), |k| k.to_string());
    let lines = [
        ("mode", cfg.mode.tag().to_string()),
        ("rounds", cfg.rounds.to_string()),
        ("episodes", cfg.episodes.to_string()),
        ("eta", format!("{:?}", cfg.eta)),
        ("seed", cfg.seed.to_string()),
        ("eval_episodes", cfg.eval_episodes.to_string()),
        ("target_successes", target),
        ("max_rounds", cfg.max_rounds.to_string()),
        ("single_round", cfg.single_round_outcome.tag().to_string()),
        ("normalize_delta", cfg.normalize_delta.to_string()),
        ("gamma", format!("{:?}", cfg.round.rates.gamma)),
        ("alpha_a", format!("{:?}", cfg.round.rates.alpha_a)),
        ("alpha_c", format!("{:?}", cfg.round.rates.alpha_c)),
        ("max_steps", cfg.round.max_steps.to_string()),
        ("actor_hidden", join(&cfg.round.nets.actor_hidden)),
        ("critic_hidden", join(&cfg.round.nets.critic_hidden)),
        ("hidden_activation", cfg.round.nets.hidden_activation.tag().to_string()),
        ("scale_inputs", cfg.round.nets.scale_inputs.to_string()),
        ("population", cfg.ga.population.to_string()),
        ("parent_pairs", cfg.ga.parent_pairs.to_string()),
        ("max_generations", cfg.ga.max_generations.to_string()),
        ("mutation_rate", format!("{:?}", cfg.ga.mutation_rate)),
        ("stop_threshold", format!("{:?}", cfg.ga.stop_threshold)),
        ("resolution", format!("{:?}", cfg.ga.resolution)),
        ("gaussian_spread", format!("{:?}", cfg.ga.gaussian_spread)),
        ("mutation_unit_interval", cfg.ga.mutation_unit_interval.to_string()),
        ("pfm_hidden", join(&cfg.pfm.hidden)),
        ("pfm_activation", cfg.pfm.activation.tag().to_string()),
        ("pfm_batch_size", cfg.pfm.batch_size.to_string()),
        ("pfm_lr", format!("{:?}", cfg.pfm.default_setting.lr)),
        ("pfm_epochs", cfg.pfm.default_setting.epochs.to_string()),
        ("pfm_cv_folds", cfg.pfm.cv_folds.to_string()),
        ("pfm_cv_repeats", cfg.pfm.cv_repeats.to_string()),
        ("pfm_standardize", cfg.pfm.standardize_inputs.to_string()),
        ("policy_lr", format!("{:?}", cfg.policy.lr)),
        ("policy_epochs", cfg.policy.epochs.to_string()),
        ("policy_batch_size", cfg.policy.batch_size.to_string()),
    ];
    let mut out = String::new();
    for (k, v) in lines {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg.rounds, 10);
        assert_eq!(cfg.episodes, 3);
        assert_eq!(cfg.round.rates.gamma, 0.99);
        assert_eq!(cfg.round.rates.alpha_a, 1e-5);
        assert_eq!(cfg.round.rates.alpha_c, 5.6e-4);
        assert_eq!(cfg.eta, 0.25);
        assert_eq!(cfg.ga.population, 50);
        assert_eq!(cfg.ga.parent_pairs, 25);
        assert_eq!(cfg.ga.max_generations, 20);
        assert_eq!(cfg.ga.mutation_rate, 0.01);
        assert_eq!(cfg.ga.stop_threshold, 0.1);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.eval_episodes, 80);
        assert_eq!(cfg.mode, Mode::Gaac);
    }

    #[test]
    fn gamma_above_one_is_rejected() {
        match parse_config_str("gamma = 1.5") {
            Err(GaacError::Config { key, .. }) => assert_eq!(key, "gamma"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn eta_percent_and_fraction_agree() {
        let a = parse_config_str("eta = 25%").unwrap();
        let b = parse_config_str("eta=0.25").unwrap();
        assert_eq!(a.eta, 0.25);
        assert_eq!(b.eta, 0.25);
    }

    #[test]
    fn unknown_key_is_named() {
        match parse_config_str("# comment\nfoo = 3\n") {
            Err(GaacError::Config { key, msg }) => {
                assert_eq!(key, "foo");
                assert!(msg.contains("unknown"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_its_number() {
        match parse_config_str("rounds = 3\nnot a pair\n") {
            Err(GaacError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_and_aliases() {
        let cfg = parse_config_str("M = 4   # rounds\nN=2\nJ = 20\nL = 10\nalpha_m = 0.05\nmode = ac-beo\n").unwrap();
        assert_eq!((cfg.rounds, cfg.episodes), (4, 2));
        assert_eq!((cfg.ga.population, cfg.ga.parent_pairs), (20, 10));
        assert_eq!(cfg.ga.mutation_rate, 0.05);
        assert_eq!(cfg.mode, Mode::AcBeo);
    }

    #[test]
    fn duplicate_key_is_rejected() {
        assert!(matches!(parse_config_str("rounds = 3\nM = 4"), Err(GaacError::Config { .. })));
    }

    #[test]
    fn range_violations_name_the_key() {
        for (text, key) in [
            ("eta = 1.5", "eta"),
            ("rounds = 0", "rounds"),
            ("population = 7", "population"),
            ("parent_pairs = 30", "parent_pairs"),
            ("alpha_c = -1", "alpha_c"),
            ("target_successes = 11", "target_successes"),
            ("hidden_activation = relu", "hidden_activation"),
        ] {
            match parse_config_str(text) {
                Err(GaacError::Config { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.mode = Mode::AcGa;
        cfg.eta = 0.15;
        cfg.target_successes = Some(2);
        cfg.single_round_outcome = RoundOutcome::Failed;
        cfg.round.nets.critic_hidden = vec![64, 32];
        cfg.pfm.cv_folds = 3;
        cfg.policy.lr = 3e-3;
        let back = parse_config_str(&config_to_text(&cfg)).unwrap();
        assert_eq!(back, cfg);
    }
}
