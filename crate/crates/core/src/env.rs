//! Mountain Car Continuous.
//!
//! An underpowered car in a valley must rock back and forth to reach the flag
//! at `x = 0.45`. Dynamics follow the classic-control reference environment.
//! The goal step pays exactly `+100`; every other step costs `-0.1 a^2` with
//! `a` clipped to `[-1, 1]`.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{GaacError, Result};

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.45;
pub const POWER: f64 = 0.0015;
pub const GRAVITY: f64 = 0.0025;
pub const GOAL_REWARD: f64 = 100.0;
pub const ACTION_COST: f64 = 0.1;
pub const MAX_EPISODE_STEPS: usize = 1000;
pub const STATE_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McState {
    /// Position on the track.
    pub x: f64,
    /// Velocity, position units per step.
    pub y: f64,
}

impl McState {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.x, self.y]
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub next_state: McState,
    pub reward: f64,
    pub done: bool,
}

pub fn reset<R: Rng + ?Sized>(rng: &mut R) -> McState {
    McState {
        x: rng.random_range(-0.6..=-0.4),
        y: 0.0,
    }
}

pub fn step(s: McState, action: f64) -> Result<StepResult> {
    if !action.is_finite() {
        return Err(GaacError::NonFinite("action"));
    }
    let a = action.clamp(-1.0, 1.0);
    let y = (s.y + POWER * a - GRAVITY * (3.0 * s.x).cos()).clamp(-MAX_SPEED, MAX_SPEED);
    let x = (s.x + y).clamp(MIN_POSITION, MAX_POSITION);
    let y = if x == MIN_POSITION && y < 0.0 { 0.0 } else { y };
    let done = x >= GOAL_POSITION;
    let reward = if done { GOAL_REWARD } else { -ACTION_COST * a * a };
    Ok(StepResult {
        next_state: McState { x, y },
        reward,
        done,
    })
}

/// One rollout: `states[t]` is the state the action `actions[t]` was taken in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub states: Vec<McState>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub final_state: Option<McState>,
    pub reached_goal: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// `t,x,y,a,r,done`, one line per step; `x,y` is the post-step state.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,a,r,done\n");
        let n = self.len();
        for t in 0..n {
            let next = if t + 1 < n {
                self.states[t + 1]
            } else {
                self.final_state.unwrap_or(self.states[t])
            };
            let done = t + 1 == n && self.reached_goal;
            writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{}",
                t + 1,
                next.x,
                next.y,
                self.actions[t],
                self.rewards[t],
                u8::from(done)
            )
            .unwrap();
        }
        out
    }
}

/// Runs one episode from a fresh reset until the goal or `max_steps`.
pub fn run_episode<R, P>(mut policy: P, rng: &mut R, max_steps: usize) -> Result<Trajectory>
where
    R: Rng + ?Sized,
    P: FnMut(&McState, &mut R) -> f64,
{
    let start = reset(rng);
    run_episode_from(start, &mut policy, rng, max_steps)
}

pub fn run_episode_from<R, P>(
    start: McState,
    policy: &mut P,
    rng: &mut R,
    max_steps: usize,
) -> Result<Trajectory>
where
    R: Rng + ?Sized,
    P: FnMut(&McState, &mut R) -> f64,
{
    let mut traj = Trajectory::default();
    let mut s = start;
    for _ in 0..max_steps {
        let a = policy(&s, rng);
        let res = step(s, a)?;
        traj.states.push(s);
        traj.actions.push(a);
        traj.rewards.push(res.reward);
        s = res.next_state;
        if res.done {
            traj.reached_goal = true;
            break;
        }
    }
    traj.final_state = Some(s);
    Ok(traj)
}

/// Energy-pumping controller: push along the current velocity.
pub fn bang_bang(s: &McState) -> f64 {
    if s.y >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reset_range_and_zero_speed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let s = reset(&mut rng);
            assert_eq!(s.y, 0.0);
            assert!((-0.6..=-0.4).contains(&s.x));
        }
        let a = reset(&mut ChaCha8Rng::seed_from_u64(5));
        let b = reset(&mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn goal_step_pays_exactly_one_hundred() {
        let r = step(McState::new(0.44, 0.02), 0.7).unwrap();
        assert!(r.next_state.x >= GOAL_POSITION);
        assert!(r.done);
        assert_eq!(r.reward, 100.0);
    }

    #[test]
    fn action_cost_and_clipping() {
        let s = McState::new(-0.5, 0.0);
        let r = step(s, 0.5).unwrap();
        assert!(!r.done);
        assert!((r.reward - -0.025).abs() < 1e-15);
        assert_eq!(step(s, 2.0).unwrap(), step(s, 1.0).unwrap());
        assert_eq!(step(s, -7.0).unwrap(), step(s, -1.0).unwrap());
        assert!(step(s, f64::NAN).is_err());
        assert!(step(s, f64::INFINITY).is_err());
    }

    #[test]
    fn left_wall_zeroes_velocity() {
        let r = step(McState::new(-1.19, -0.05), -0.8).unwrap();
        assert_eq!(r.next_state.x, MIN_POSITION);
        assert_eq!(r.next_state.y, 0.0);
    }

    /// Transitions produced by the reference implementation (float32 state
    /// output, hence the 1e-6 tolerance on states).
    #[test]
    fn matches_reference_transitions() {
        let table = [
            // x, y, a, x', y', r
            (
                -0.17484343476834607,
                0.055609932135740586,
                0.551371380490387,
                -0.1205703467130661,
                0.0542730912566185,
                -0.030401039922387515,
            ),
            (
                -0.8306602084154293,
                -0.027976720112428445,
                0.7471068907925238,
                -0.8555254936218262,
                -0.02486526407301426,
                -0.05581687062696721,
            ),
            (
                -1.1913649005124574,
                0.044971978573587285,
                0.5941388575040925,
                -1.1432318687438965,
                0.04813298583030701,
                -0.03530009819962683,
            ),
            (
                -0.43258667733629796,
                -0.027575460245296106,
                -0.44314877579845335,
                -0.46150100231170654,
                -0.028914324939250946,
                -0.019638083749166788,
            ),
            (
                -0.7820138762472356,
                -0.007689317176429483,
                0.009096517915906599,
                -0.7879398465156555,
                -0.005925944074988365,
                -8.274663819440974e-06,
            ),
        ];
        for (x, y, a, nx, ny, r) in table {
            let res = step(McState::new(x, y), a).unwrap();
            assert!((res.next_state.x - nx).abs() < 1e-6);
            assert!((res.next_state.y - ny).abs() < 1e-6);
            assert!((res.reward - r).abs() < 1e-12);
            assert!(!res.done);
        }
    }

    #[test]
    fn zero_action_never_reaches_goal() {
        let mut policy = |_: &McState, _: &mut ChaCha8Rng| 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let traj =
            run_episode_from(McState::new(-0.5, 0.0), &mut policy, &mut rng, MAX_EPISODE_STEPS)
                .unwrap();
        assert_eq!(traj.len(), 1000);
        assert!(!traj.reached_goal);
        assert_eq!(traj.cumulative_reward(), 0.0);
    }

    #[test]
    fn bang_bang_reaches_goal_from_every_start() {
        for i in 0..=200 {
            let x0 = -0.6 + 0.2 * i as f64 / 200.0;
            let mut policy = |s: &McState, _: &mut ChaCha8Rng| bang_bang(s);
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let traj =
                run_episode_from(McState::new(x0, 0.0), &mut policy, &mut rng, MAX_EPISODE_STEPS)
                    .unwrap();
            assert!(traj.reached_goal, "start {x0}");
            assert!(traj.len() < 1000);
            assert_eq!(*traj.rewards.last().unwrap(), 100.0);
        }
    }

    #[test]
    fn trajectory_csv_ends_at_goal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let traj = run_episode(|s: &McState, _: &mut ChaCha8Rng| bang_bang(s), &mut rng, 1000).unwrap();
        let csv = traj.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x,y,a,r,done");
        assert_eq!(lines.len(), traj.len() + 1);
        let last: Vec<&str> = lines.last().unwrap().split(',').collect();
        assert!(last[1].parse::<f64>().unwrap() >= GOAL_POSITION);
        assert_eq!(last[5], "1");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn step_keeps_state_in_the_box(
                x in MIN_POSITION..MAX_POSITION,
                y in -MAX_SPEED..MAX_SPEED,
                a in -5.0f64..5.0,
            ) {
                let r = step(McState::new(x, y), a).unwrap();
                let s = r.next_state;
                prop_assert!((MIN_POSITION..=MAX_POSITION).contains(&s.x));
                prop_assert!((-MAX_SPEED..=MAX_SPEED).contains(&s.y));
                prop_assert_eq!(r.done, s.x >= GOAL_POSITION);
                if r.done {
                    prop_assert_eq!(r.reward, GOAL_REWARD);
                } else {
                    let c = a.clamp(-1.0, 1.0);
                    prop_assert_eq!(r.reward, -ACTION_COST * c * c);
                }
            }
        }
    }
}
