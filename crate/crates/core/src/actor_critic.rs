//! Online actor-critic with a Gaussian policy head and a TD(0) critic.
//!
//! The actor network emits raw outputs `[z_mu; z_sigma]`. The mean is taken
//! as is; the standard deviation goes through `max(softplus(z_sigma), 1e-3)`.
//! The same head is used by the final policy trained on the optimized data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{EpisodeRecord, Sample};
use crate::env::{self, McState};
use crate::error::{GaacError, Result};
use crate::mlp::{self, Activation, GradientBundle, LayerSpec, Mlp};

pub const SIGMA_FLOOR: f64 = 1e-3;
pub const ACTION_DIM: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl PolicyParams {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mu.len() != sigma.len() {
            return Err(GaacError::Shape("mu and sigma lengths differ".into()));
        }
        if mu.iter().chain(&sigma).any(|v| !v.is_finite()) {
            return Err(GaacError::NonFinite("policy parameters"));
        }
        if sigma.iter().any(|&s| s <= 0.0) {
            return Err(GaacError::InvalidArgument("sigma must be positive".into()));
        }
        Ok(Self { mu, sigma })
    }

    /// `[mu; sigma]`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.mu.clone();
        v.extend_from_slice(&self.sigma);
        v
    }

    pub fn from_flat(theta: &[f64]) -> Result<Self> {
        if !theta.len().is_multiple_of(2) || theta.is_empty() {
            return Err(GaacError::Shape(format!(
                "flattened policy parameters must have even length, got {}",
                theta.len()
            )));
        }
        let d = theta.len() / 2;
        // Optimized targets may sit on the floor or slightly below after
        // regression; clamp rather than reject.
        let sigma = theta[d..].iter().map(|s| s.max(SIGMA_FLOOR)).collect();
        Self::new(theta[..d].to_vec(), sigma)
    }

    pub fn action_dim(&self) -> usize {
        self.mu.len()
    }

    /// Gaussian log density of `a`.
    pub fn log_prob(&self, a: &[f64]) -> f64 {
        a.iter()
            .zip(self.mu.iter().zip(&self.sigma))
            .map(|(&a, (&m, &s))| {
                let z = (a - m) / s;
                -0.5 * z * z - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            })
            .sum()
    }
}

pub fn sample_action<R: Rng + ?Sized>(p: &PolicyParams, rng: &mut R) -> Vec<f64> {
    p.mu.iter()
        .zip(&p.sigma)
        .map(|(&m, &s)| {
            let n: f64 = StandardNormal.sample(rng);
            m + s * n
        })
        .collect()
}

/// Affine map from the track box onto `[-1, 1]^2` applied before networks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateScaler {
    pub offset: [f64; 2],
    pub scale: [f64; 2],
}

impl StateScaler {
    pub fn identity() -> Self {
        Self {
            offset: [0.0, 0.0],
            scale: [1.0, 1.0],
        }
    }

    pub fn mountain_car() -> Self {
        let mid = 0.5 * (env::MIN_POSITION + env::MAX_POSITION);
        let half = 0.5 * (env::MAX_POSITION - env::MIN_POSITION);
        Self {
            offset: [mid, 0.0],
            scale: [1.0 / half, 1.0 / env::MAX_SPEED],
        }
    }

    pub fn apply(&self, s: &[f64]) -> Vec<f64> {
        s.iter()
            .enumerate()
            .map(|(i, &v)| {
                let i = i.min(1);
                (v - self.offset[i]) * self.scale[i]
            })
            .collect()
    }
}

/// A network plus the Gaussian head: state -> `N(mu(s), sigma(s))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub net: Mlp,
    pub scaler: StateScaler,
}

impl GaussianPolicy {
    pub fn new(net: Mlp, scaler: StateScaler) -> Result<Self> {
        if !net.output_width().is_multiple_of(2) {
            return Err(GaacError::Shape("policy network must output [mu; sigma]".into()));
        }
        Ok(Self { net, scaler })
    }

    pub fn action_dim(&self) -> usize {
        self.net.output_width() / 2
    }

    pub fn params(&self, s: &[f64]) -> Result<PolicyParams> {
        let raw = self.net.forward(&self.scaler.apply(s))?;
        Ok(head(&raw))
    }

    /// `d log pi(a | s) / d z` for the raw network outputs, chained through
    /// the sigma head.
    pub fn log_prob_output_grad(&self, raw: &[f64], a: &[f64]) -> Vec<f64> {
        let d = raw.len() / 2;
        let p = head(raw);
        let mut g = vec![0.0; raw.len()];
        for h in 0..d {
            let (m, s) = (p.mu[h], p.sigma[h]);
            let diff = a[h] - m;
            g[h] = diff / (s * s);
            let d_sigma = (diff * diff - s * s) / (s * s * s);
            g[d + h] = d_sigma * sigma_head_derivative(raw[d + h]);
        }
        g
    }

    /// Gradient of `log pi(a | s)` with respect to every network weight.
    pub fn log_prob_grad(&self, s: &[f64], a: &[f64]) -> Result<GradientBundle> {
        let x = self.scaler.apply(s);
        let trace = self.net.forward_trace(&x)?;
        let upstream = self.log_prob_output_grad(trace.output(), a);
        let mut grads = GradientBundle::zeros_like(&self.net);
        self.net.accumulate_backward(&trace, &upstream, &mut grads)?;
        Ok(grads)
    }

    pub fn sample<R: Rng + ?Sized>(&self, s: &[f64], rng: &mut R) -> Result<f64> {
        let p = self.params(s)?;
        Ok(sample_action(&p, rng)[0])
    }
}

fn head(raw: &[f64]) -> PolicyParams {
    let d = raw.len() / 2;
    PolicyParams {
        mu: raw[..d].to_vec(),
        sigma: raw[d..].iter().map(|&z| sigma_head(z)).collect(),
    }
}

#[inline]
pub fn sigma_head(z: f64) -> f64 {
    mlp::softplus(z).max(SIGMA_FLOOR)
}

#[inline]
pub fn sigma_head_derivative(z: f64) -> f64 {
    if mlp::softplus(z) > SIGMA_FLOOR {
        mlp::sigmoid(z)
    } else {
        0.0
    }
}

/// Architecture of the actor and critic networks.
#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub scale_inputs: bool,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            actor_hidden: vec![40, 40],
            critic_hidden: vec![400, 400],
            hidden_activation: Activation::Tanh,
            scale_inputs: true,
        }
    }
}

impl NetConfig {
    pub fn scaler(&self) -> StateScaler {
        if self.scale_inputs {
            StateScaler::mountain_car()
        } else {
            StateScaler::identity()
        }
    }

    pub fn actor_spec(&self) -> Vec<LayerSpec> {
        LayerSpec::chain(
            env::STATE_DIM,
            &self.actor_hidden,
            2 * ACTION_DIM,
            self.hidden_activation,
            Activation::Linear,
        )
    }

    pub fn critic_spec(&self) -> Vec<LayerSpec> {
        LayerSpec::chain(
            env::STATE_DIM,
            &self.critic_hidden,
            1,
            self.hidden_activation,
            Activation::Linear,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningRates {
    pub alpha_a: f64,
    pub alpha_c: f64,
    pub gamma: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        Self {
            alpha_a: 1e-5,
            alpha_c: 5.6e-4,
            gamma: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcState {
    pub actor: GaussianPolicy,
    pub critic: Mlp,
    pub alpha_a: f64,
    pub alpha_c: f64,
    pub gamma: f64,
}

impl AcState {
    pub fn new(actor: GaussianPolicy, critic: Mlp, rates: LearningRates) -> Result<Self> {
        if !(rates.alpha_a >= 0.0 && rates.alpha_c >= 0.0) {
            return Err(GaacError::InvalidArgument("learning rates must be non-negative".into()));
        }
        if !(rates.gamma > 0.0 && rates.gamma <= 1.0) {
            return Err(GaacError::InvalidArgument(format!(
                "gamma must lie in (0, 1], got {}",
                rates.gamma
            )));
        }
        if critic.output_width() != 1 {
            return Err(GaacError::Shape("critic must output a scalar".into()));
        }
        Ok(Self {
            actor,
            critic,
            alpha_a: rates.alpha_a,
            alpha_c: rates.alpha_c,
            gamma: rates.gamma,
        })
    }

    /// Fresh Xavier-initialized actor and critic.
    pub fn fresh<R: Rng + ?Sized>(cfg: &NetConfig, rates: LearningRates, rng: &mut R) -> Result<Self> {
        let actor = Mlp::init_xavier_with_rng(&cfg.actor_spec(), rng)?;
        let critic = Mlp::init_xavier_with_rng(&cfg.critic_spec(), rng)?;
        Self::new(GaussianPolicy::new(actor, cfg.scaler())?, critic, rates)
    }

    pub fn policy_params(&self, s: &[f64]) -> Result<PolicyParams> {
        self.actor.params(s)
    }

    pub fn value(&self, s: &[f64]) -> Result<f64> {
        Ok(self.critic.forward(&self.actor.scaler.apply(s))?[0])
    }

    /// `r + gamma V(s') - V(s)`, with `V(s')` masked at terminal steps.
    pub fn td_error(&self, s: &[f64], r: f64, s_next: &[f64], terminal: bool) -> Result<f64> {
        let v = self.value(s)?;
        let bootstrap = if terminal { 0.0 } else { self.gamma * self.value(s_next)? };
        let delta = r + bootstrap - v;
        if !delta.is_finite() {
            return Err(GaacError::NonFinite("TD error"));
        }
        Ok(delta)
    }

    /// Semi-gradient step `psi <- psi + alpha_c * delta * dV(s)/dpsi`.
    pub fn critic_update(&mut self, s: &[f64], delta: f64) -> Result<()> {
        if !delta.is_finite() {
            return Err(GaacError::NonFinite("TD error"));
        }
        if delta == 0.0 {
            return Ok(());
        }
        let x = self.actor.scaler.apply(s);
        let grads = self.critic.backward(&x, &[-delta])?;
        self.critic.sgd_step(&grads, self.alpha_c)
    }

    /// `phi <- phi + alpha_a * delta * grad log pi(a | s)`.
    pub fn actor_update(&mut self, s: &[f64], a: &[f64], delta: f64) -> Result<()> {
        if !delta.is_finite() || a.iter().any(|v| !v.is_finite()) {
            return Err(GaacError::NonFinite("actor update inputs"));
        }
        if delta == 0.0 {
            return Ok(());
        }
        let x = self.actor.scaler.apply(s);
        let trace = self.actor.net.forward_trace(&x)?;
        let upstream: Vec<f64> = self
            .actor
            .log_prob_output_grad(trace.output(), a)
            .into_iter()
            .map(|g| -delta * g)
            .collect();
        let mut grads = GradientBundle::zeros_like(&self.actor.net);
        self.actor.net.accumulate_backward(&trace, &upstream, &mut grads)?;
        self.actor.net.sgd_step(&grads, self.alpha_a)
    }

    /// One online episode. Every sample stores the pre-update `theta`.
    pub fn run_episode<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        round_id: usize,
        episode_id: usize,
        max_steps: usize,
    ) -> Result<EpisodeRecord> {
        let mut s = env::reset(rng);
        let mut samples = Vec::with_capacity(max_steps);
        let mut rewards = Vec::with_capacity(max_steps);
        let mut reached_goal = false;
        for t in 1..=max_steps {
            let sv = s.to_vec();
            let theta = self.policy_params(&sv)?;
            let a = sample_action(&theta, rng);
            let res = env::step(s, a[0])?;
            let next = res.next_state.to_vec();
            let delta = self.td_error(&sv, res.reward, &next, res.done)?;
            samples.push(Sample {
                s: sv.clone(),
                theta: theta.flatten(),
                delta,
                round_id,
                episode_id,
                t,
            });
            rewards.push(res.reward);
            self.critic_update(&sv, delta)?;
            self.actor_update(&sv, &a, delta)?;
            s = res.next_state;
            if res.done {
                reached_goal = true;
                break;
            }
        }
        Ok(EpisodeRecord::new(samples, &rewards, reached_goal))
    }
}

/// Configuration of one actor-critic training round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundConfig {
    pub nets: NetConfig,
    pub rates: LearningRates,
    pub max_steps: usize,
}

impl Default for RoundConfig {
    fn default() -> Self {
        Self {
            nets: NetConfig::default(),
            rates: LearningRates::default(),
            max_steps: env::MAX_EPISODE_STEPS,
        }
    }
}

/// Freshly initialized actor and critic trained online for `episodes` episodes.
pub fn run_ac_round(
    round_seed: u64,
    round_id: usize,
    episodes: usize,
    cfg: &RoundConfig,
) -> Result<Vec<EpisodeRecord>> {
    Ok(run_ac_round_with_state(round_seed, round_id, episodes, cfg)?.0)
}

pub fn run_ac_round_with_state(
    round_seed: u64,
    round_id: usize,
    episodes: usize,
    cfg: &RoundConfig,
) -> Result<(Vec<EpisodeRecord>, AcState)> {
    if episodes == 0 {
        return Err(GaacError::InvalidArgument("a round needs at least one episode".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(round_seed);
    let mut ac = AcState::fresh(&cfg.nets, cfg.rates, &mut rng)?;
    let mut out = Vec::with_capacity(episodes);
    for e in 1..=episodes {
        out.push(ac.run_episode(&mut rng, round_id, e, cfg.max_steps)?);
    }
    Ok((out, ac))
}

/// `McState` convenience wrapper for the environment's policy closures.
pub fn policy_fn<'a, R: Rng + ?Sized>(
    policy: &'a GaussianPolicy,
) -> impl FnMut(&McState, &mut R) -> f64 + 'a {
    move |s, rng| {
        let p = policy.params(&s.to_vec()).expect("state width matches policy");
        sample_action(&p, rng)[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> NetConfig {
        NetConfig {
            actor_hidden: vec![6],
            critic_hidden: vec![8],
            hidden_activation: Activation::Tanh,
            scale_inputs: true,
        }
    }

    fn ac(seed: u64, rates: LearningRates) -> AcState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AcState::fresh(&small_cfg(), rates, &mut rng).unwrap()
    }

    fn zero_value_critic(state: &mut AcState, bias: f64) {
        for l in state.critic.layers_mut() {
            l.weights_mut().iter_mut().for_each(|w| *w = 0.0);
            l.biases_mut().iter_mut().for_each(|b| *b = 0.0);
        }
        let last = state.critic.layers_mut().len() - 1;
        state.critic.layers_mut()[last].biases_mut()[0] = bias;
    }

    #[test]
    fn zero_actor_gives_ln2_sigma() {
        let net = Mlp::zeros(&small_cfg().actor_spec()).unwrap();
        let policy = GaussianPolicy::new(net, StateScaler::mountain_car()).unwrap();
        let p = policy.params(&[-0.5, 0.01]).unwrap();
        assert_eq!(p.mu, vec![0.0]);
        assert!((p.sigma[0] - 2f64.ln()).abs() < 1e-15);
        assert_eq!(p.flatten().len(), 2);
    }

    #[test]
    fn sigma_floor_holds() {
        assert_eq!(sigma_head(-50.0), SIGMA_FLOOR);
        assert_eq!(sigma_head_derivative(-50.0), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let policy = ac(8, LearningRates::default()).actor;
        for _ in 0..200 {
            let s = [rng.random_range(-1.2..0.6), rng.random_range(-0.07..0.07)];
            assert!(policy.params(&s).unwrap().sigma[0] >= SIGMA_FLOOR);
        }
    }

    #[test]
    fn sampling_tight_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tight = PolicyParams::new(vec![0.7], vec![1e-3]).unwrap();
        for _ in 0..10_000 {
            assert!((sample_action(&tight, &mut rng)[0] - 0.7).abs() < 0.01);
        }
        let p = PolicyParams::new(vec![0.2], vec![0.5]).unwrap();
        let mean: f64 = (0..100_000).map(|_| sample_action(&p, &mut rng)[0]).sum::<f64>() / 1e5;
        assert!((mean - 0.2).abs() < 0.01, "{mean}");
        let a = sample_action(&p, &mut ChaCha8Rng::seed_from_u64(1));
        let b = sample_action(&p, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
    }

    #[test]
    fn td_error_arithmetic() {
        let rates = LearningRates::default();
        let mut st = ac(1, rates);
        zero_value_critic(&mut st, 0.0);
        assert_eq!(st.td_error(&[-0.5, 0.0], 1.0, &[-0.49, 0.01], false).unwrap(), 1.0);
        zero_value_critic(&mut st, 50.0);
        let d = st.td_error(&[0.4, 0.05], 100.0, &[0.46, 0.05], true).unwrap();
        assert!((d - 50.0).abs() < 1e-12);
    }

    #[test]
    fn td_error_with_distinct_values() {
        // Linear critic V(x) = w * x_scaled[0] + b chosen so V(s) = 1, V(s') = 2.
        let mut st = ac(1, LearningRates::default());
        let cfg = NetConfig {
            critic_hidden: vec![],
            ..small_cfg()
        };
        st.critic = Mlp::zeros(&cfg.critic_spec()).unwrap();
        let scaler = st.actor.scaler;
        let (s, s_next) = ([-0.5, 0.0], [-0.3, 0.0]);
        let (u, v) = (scaler.apply(&s)[0], scaler.apply(&s_next)[0]);
        let w = 1.0 / (v - u);
        st.critic.layers_mut()[0].weights_mut()[0] = w;
        st.critic.layers_mut()[0].biases_mut()[0] = 1.0 - w * u;
        let d = st.td_error(&s, -0.025, &s_next, false).unwrap();
        assert!((d - 0.955).abs() < 1e-12, "{d}");
    }

    #[test]
    fn zero_delta_leaves_networks_unchanged() {
        let mut st = ac(4, LearningRates::default());
        let before = st.clone();
        st.critic_update(&[-0.5, 0.0], 0.0).unwrap();
        st.actor_update(&[-0.5, 0.0], &[0.3], 0.0).unwrap();
        assert_eq!(st, before);
        assert!(st.critic_update(&[-0.5, 0.0], f64::NAN).is_err());
        assert!(st.actor_update(&[-0.5, 0.0], &[f64::INFINITY], 1.0).is_err());
    }

    #[test]
    fn positive_delta_raises_value() {
        let mut st = ac(5, LearningRates {
            alpha_c: 1e-3,
            ..LearningRates::default()
        });
        let s = [-0.45, 0.01];
        let v0 = st.value(&s).unwrap();
        st.critic_update(&s, 1.0).unwrap();
        assert!(st.value(&s).unwrap() > v0);
    }

    #[test]
    fn repeated_critic_updates_shrink_td_error() {
        let mut st = ac(6, LearningRates {
            alpha_c: 1e-3,
            ..LearningRates::default()
        });
        let (s, s_next, r) = ([-0.5, 0.0], [-0.49, 0.002], -0.05);
        let mut prev = st.td_error(&s, r, &s_next, false).unwrap().abs();
        for _ in 0..300 {
            let d = st.td_error(&s, r, &s_next, false).unwrap();
            st.critic_update(&s, d).unwrap();
            let now = st.td_error(&s, r, &s_next, false).unwrap().abs();
            assert!(now <= prev + 1e-15, "{now} > {prev}");
            prev = now;
        }
    }

    #[test]
    fn mean_gradient_vanishes_at_mean_action() {
        let st = ac(7, LearningRates::default());
        let s = [-0.3, 0.02];
        let x = st.actor.scaler.apply(&s);
        let raw = st.actor.net.forward(&x).unwrap();
        let mu = raw[0];
        let g = st.actor.log_prob_output_grad(&raw, &[mu]);
        assert_eq!(g[0], 0.0);
        assert!(g[1] != 0.0);
    }

    #[test]
    fn log_prob_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for seed in 0..10 {
            let st = ac(100 + seed, LearningRates::default());
            let s = [rng.random_range(-1.2..0.6), rng.random_range(-0.07..0.07)];
            let a = [rng.random_range(-1.5..1.5)];
            let analytic = st.actor.log_prob_grad(&s, &a).unwrap();
            let h = 1e-5;
            let mut probe = st.actor.clone();
            for li in 0..probe.net.layers().len() {
                for k in 0..probe.net.layers()[li].weights().len() {
                    let orig = probe.net.layers()[li].weights()[k];
                    probe.net.layers_mut()[li].weights_mut()[k] = orig + h;
                    let up = probe.params(&s).unwrap().log_prob(&a);
                    probe.net.layers_mut()[li].weights_mut()[k] = orig - h;
                    let down = probe.params(&s).unwrap().log_prob(&a);
                    probe.net.layers_mut()[li].weights_mut()[k] = orig;
                    let num = (up - down) / (2.0 * h);
                    let an = analytic.weights[li][k];
                    let rel = (an - num).abs() / an.abs().max(num.abs()).max(1e-6);
                    assert!(rel < 1e-4, "layer {li} w{k}: {an} vs {num}");
                }
            }
        }
    }

    #[test]
    fn frozen_actor_keeps_policy_constant() {
        let cfg = RoundConfig {
            nets: small_cfg(),
            rates: LearningRates {
                alpha_a: 0.0,
                ..LearningRates::default()
            },
            max_steps: 200,
        };
        let (episodes, state) = run_ac_round_with_state(3, 1, 1, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let initial = AcState::fresh(&cfg.nets, cfg.rates, &mut rng).unwrap();
        assert_eq!(initial.actor, state.actor);
        for smp in &episodes[0].samples {
            let p = initial.policy_params(&smp.s).unwrap().flatten();
            assert_eq!(p, smp.theta);
        }
    }

    #[test]
    fn round_is_deterministic_and_bounded() {
        let cfg = RoundConfig {
            nets: small_cfg(),
            ..RoundConfig::default()
        };
        let a = run_ac_round(17, 1, 3, &cfg).unwrap();
        let b = run_ac_round(17, 1, 3, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        let total: usize = a.iter().map(|e| e.samples.len()).sum();
        assert!(total <= 3000);
        for (i, e) in a.iter().enumerate() {
            assert_eq!(e.samples[0].episode_id, i + 1);
            assert_eq!(e.samples[0].t, 1);
        }
        assert!(run_ac_round(1, 1, 0, &cfg).is_err());
    }

    #[test]
    fn stored_delta_is_the_td_error() {
        // Replay the first step by hand.
        let cfg = RoundConfig {
            nets: small_cfg(),
            ..RoundConfig::default()
        };
        let eps = run_ac_round(23, 1, 1, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let st = AcState::fresh(&cfg.nets, cfg.rates, &mut rng).unwrap();
        let s = env::reset(&mut rng);
        let theta = st.policy_params(&s.to_vec()).unwrap();
        let a = sample_action(&theta, &mut rng);
        let res = env::step(s, a[0]).unwrap();
        let d = st
            .td_error(&s.to_vec(), res.reward, &res.next_state.to_vec(), res.done)
            .unwrap();
        assert_eq!(eps[0].samples[0].delta, d);
        assert_eq!(eps[0].samples[0].theta, theta.flatten());
        assert_eq!(eps[0].samples[1].s, res.next_state.to_vec());
    }
}
