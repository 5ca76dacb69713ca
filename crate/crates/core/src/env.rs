//! Discrete-time simulator of the scalar controlled diffusion.
//!
//! The state evolves as `s' = s + B_d a` where the sampled action already
//! carries the diffusion noise: `a = ā(s) + η / B_d` with `η ~ N(0, W_d)`.
//! Given the realized action the transition is deterministic.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

pub type DiffusionTrajectory = Trajectory<f64, f64>;

/// Physical and discretization constants of the diffusion model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqgParams {
    /// Control gain `B`.
    pub b: f64,
    /// Diffusion intensity `W`.
    pub w: f64,
    /// State cost weight `C_s`.
    pub c_s: f64,
    /// Action cost weight `C_a`.
    pub c_a: f64,
    /// Time step `Δ`.
    pub delta: f64,
    /// Final step index `N`; a rollout has `N + 1` steps.
    pub horizon: usize,
    pub gamma: f64,
}

impl LqgParams {
    pub fn new(b: f64, w: f64, c_s: f64, c_a: f64, delta: f64, horizon: usize) -> Result<Self> {
        let params = Self {
            b,
            w,
            c_s,
            c_a,
            delta,
            horizon,
            gamma: 1.0,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters for a fixed continuous horizon `T`, with `Δ = T / (N + 1)`.
    pub fn with_total_time(
        b: f64,
        w: f64,
        c_s: f64,
        c_a: f64,
        total_time: f64,
        horizon: usize,
    ) -> Result<Self> {
        if !(total_time > 0.0) {
            return Err(invalid("T", format!("must be positive, got {total_time}")));
        }
        Self::new(b, w, c_s, c_a, total_time / (horizon as f64 + 1.0), horizon)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(invalid("delta", format!("must be positive, got {}", self.delta)));
        }
        if self.b == 0.0 || !self.b.is_finite() {
            return Err(invalid("B", format!("must be finite and nonzero, got {}", self.b)));
        }
        for (name, value) in [("W", self.w), ("C_s", self.c_s), ("C_a", self.c_a)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(invalid(name, format!("must be finite and >= 0, got {value}")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(invalid("gamma", format!("must lie in (0, 1], got {}", self.gamma)));
        }
        Ok(())
    }

    /// Continuous horizon `T = (N + 1) Δ`.
    pub fn total_time(&self) -> f64 {
        (self.horizon as f64 + 1.0) * self.delta
    }

    pub fn steps(&self) -> usize {
        self.horizon + 1
    }

    pub fn b_d(&self) -> f64 {
        self.delta * self.b
    }

    pub fn w_d(&self) -> f64 {
        self.delta * self.w
    }

    pub fn c_s_d(&self) -> f64 {
        self.delta * self.c_s
    }

    pub fn c_a_d(&self) -> f64 {
        self.delta * self.c_a
    }

    /// Variance of the action noise, `W / (Δ B²)`.
    pub fn action_variance(&self) -> f64 {
        self.w / (self.delta * self.b * self.b)
    }

    /// Step size `Δ_c = 2 / (B K)` at which the discrete closed loop loses stability.
    pub fn critical_delta(&self, policy: &PolicyParams) -> f64 {
        2.0 / (self.b * policy.k)
    }

    /// Advisory flag: the discrete closed loop is not contracting.
    pub fn is_unstable(&self, policy: &PolicyParams) -> bool {
        let bk = self.b * policy.k;
        bk <= 0.0 || self.delta >= 2.0 / bk
    }
}

fn invalid(name: &'static str, reason: String) -> Error {
    Error::InvalidParameter { name, reason }
}

/// Linear-Gaussian controller `a ~ N(-K (s - μ∞), W / (Δ B²))`.
///
/// The only differentiable parameter is `mu_inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams {
    pub k: f64,
    pub mu_inf: f64,
}

impl PolicyParams {
    pub fn new(k: f64, mu_inf: f64) -> Self {
        Self { k, mu_inf }
    }
}

pub fn reward(s: f64, a: f64, params: &LqgParams) -> f64 {
    -params.c_s_d() * s * s - params.c_a_d() * a * a
}

pub fn policy_mean(s: f64, policy: &PolicyParams) -> f64 {
    -policy.k * (s - policy.mu_inf)
}

pub fn sample_action<R: Rng + ?Sized>(
    s: f64,
    policy: &PolicyParams,
    params: &LqgParams,
    rng: &mut R,
) -> f64 {
    let mean = policy_mean(s, policy);
    if params.w == 0.0 {
        return mean;
    }
    let z: f64 = rng.sample(StandardNormal);
    mean + params.action_variance().sqrt() * z
}

/// `∂ ln π(a | s) / ∂μ∞ = K Δ B² (a - ā(s)) / W`.
pub fn score(s: f64, a: f64, policy: &PolicyParams, params: &LqgParams) -> Result<f64> {
    if params.w <= 0.0 {
        return Err(Error::DeterministicPolicy);
    }
    Ok(policy.k * (a - policy_mean(s, policy)) / params.action_variance())
}

/// Log-density of the Gaussian policy.
pub fn log_density(s: f64, a: f64, policy: &PolicyParams, params: &LqgParams) -> Result<f64> {
    if params.w <= 0.0 {
        return Err(Error::DeterministicPolicy);
    }
    let var = params.action_variance();
    let d = a - policy_mean(s, policy);
    Ok(-0.5 * d * d / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub action: f64,
    pub reward: f64,
    pub next_state: f64,
}

pub fn next_state(s: f64, a: f64, params: &LqgParams) -> f64 {
    s + params.b_d() * a
}

pub fn step<R: Rng + ?Sized>(
    s: f64,
    policy: &PolicyParams,
    params: &LqgParams,
    rng: &mut R,
) -> Transition {
    let action = sample_action(s, policy, params, rng);
    Transition {
        action,
        reward: reward(s, action, params),
        next_state: next_state(s, action, params),
    }
}

pub fn rollout<R: Rng + ?Sized>(
    s0: f64,
    policy: &PolicyParams,
    params: &LqgParams,
    rng: &mut R,
) -> DiffusionTrajectory {
    let mut traj = Trajectory::with_capacity(params.steps());
    rollout_into(&mut traj, s0, policy, params, rng);
    traj
}

/// Like [`rollout`], reusing the buffers of `traj`.
pub fn rollout_into<R: Rng + ?Sized>(
    traj: &mut DiffusionTrajectory,
    s0: f64,
    policy: &PolicyParams,
    params: &LqgParams,
    rng: &mut R,
) {
    traj.clear();
    let mut s = s0;
    for _ in 0..params.steps() {
        let tr = step(s, policy, params, rng);
        traj.push(s, tr.action, tr.reward);
        s = tr.next_state;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(delta: f64, horizon: usize) -> LqgParams {
        LqgParams::new(1.0, 1.0, 1.0, 1.0, delta, horizon).unwrap()
    }

    #[test]
    fn reward_values() {
        let p = unit(0.01, 10);
        assert_eq!(reward(0.0, 0.0, &p), 0.0);
        assert_eq!(reward(0.0, 3.0, &p), -p.c_a_d() * 9.0);
        assert!((reward(1.0, 1.0, &p) + 0.02).abs() < 1e-15);
    }

    #[test]
    fn policy_mean_values() {
        let pol = PolicyParams::new(1.0, 1.0);
        assert_eq!(policy_mean(1.0, &pol), 0.0);
        assert_eq!(policy_mean(0.0, &pol), 1.0);
        assert_eq!(policy_mean(7.0, &PolicyParams::new(0.0, 1.0)), 0.0);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(LqgParams::new(0.0, 1.0, 1.0, 1.0, 0.1, 3).is_err());
        assert!(LqgParams::new(1.0, -1.0, 1.0, 1.0, 0.1, 3).is_err());
        assert!(LqgParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 3).is_err());
        assert!(unit(0.1, 3).with_gamma(0.0).is_err());
        assert!(unit(0.1, 3).with_gamma(1.5).is_err());
    }

    #[test]
    fn derived_quantities() {
        let p = LqgParams::with_total_time(2.0, 3.0, 1.0, 1.0, 3.0, 299).unwrap();
        assert!((p.delta - 0.01).abs() < 1e-15);
        assert!((p.total_time() - 3.0).abs() < 1e-12);
        assert!((p.b_d() - 0.02).abs() < 1e-15);
        assert!((p.w_d() - 0.03).abs() < 1e-15);
        assert!((p.action_variance() - 3.0 / (0.01 * 4.0)).abs() < 1e-9);
    }

    #[test]
    fn stability_flag() {
        let pol = PolicyParams::new(1.0, 1.0);
        assert!(!unit(1.5, 1).is_unstable(&pol));
        assert!(unit(2.0, 1).is_unstable(&pol));
        assert_eq!(unit(0.5, 1).critical_delta(&pol), 2.0);
    }

    #[test]
    fn deterministic_action_without_noise() {
        let p = LqgParams::new(1.0, 0.0, 1.0, 1.0, 1.0, 1).unwrap();
        let pol = PolicyParams::new(1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_action(2.5, &pol, &p, &mut rng), -2.5);
        assert_eq!(score(0.0, 0.0, &pol, &p), Err(Error::DeterministicPolicy));
    }

    #[test]
    fn score_values() {
        let p = unit(1.0, 0);
        let pol = PolicyParams::new(1.0, 0.3);
        let s = 0.7;
        let mean = policy_mean(s, &pol);
        assert_eq!(score(s, mean, &pol, &p).unwrap(), 0.0);
        assert!((score(s, mean + 0.5, &pol, &p).unwrap() - 0.5).abs() < 1e-15);
        let eps = 0.123;
        let one = score(s, mean + eps, &pol, &p).unwrap();
        let two = score(s, mean + 2.0 * eps, &pol, &p).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-14);
    }

    #[test]
    fn score_matches_finite_difference() {
        let p = LqgParams::new(1.3, 0.7, 1.0, 2.0, 0.05, 0).unwrap();
        for &(s, a, k, mu) in &[(0.2, 1.1, 1.0, 1.0), (-1.5, 0.4, 2.5, -0.3), (3.0, -7.0, 0.6, 2.0)] {
            let h = 1e-6;
            let up = log_density(s, a, &PolicyParams::new(k, mu + h), &p).unwrap();
            let down = log_density(s, a, &PolicyParams::new(k, mu - h), &p).unwrap();
            let fd = (up - down) / (2.0 * h);
            let exact = score(s, a, &PolicyParams::new(k, mu), &p).unwrap();
            assert!(((fd - exact) / exact).abs() < 1e-6, "{fd} vs {exact}");
        }
    }

    #[test]
    fn deadbeat_step() {
        let p = LqgParams::new(1.0, 0.0, 1.0, 1.0, 1.0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tr = step(1.0, &PolicyParams::new(1.0, 0.0), &p, &mut rng);
        assert_eq!((tr.action, tr.next_state), (-1.0, 0.0));

        let tr = step(0.0, &PolicyParams::new(1.0, 1.0), &p, &mut rng);
        assert_eq!(tr.action, 1.0);
        assert_eq!(tr.reward, -p.c_a_d());
        assert_eq!(tr.next_state, 1.0);
    }

    #[test]
    fn single_step_rollout() {
        let p = unit(0.5, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let traj = rollout(0.2, &PolicyParams::new(1.0, 1.0), &p, &mut rng);
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states[0], 0.2);
        assert_eq!(traj.rewards[0], reward(0.2, traj.actions[0], &p));
    }

    #[test]
    fn noiseless_rollout_contracts() {
        let p = LqgParams::new(1.0, 0.0, 1.0, 1.0, 0.3, 40).unwrap();
        let pol = PolicyParams::new(1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let traj = rollout(-2.0, &pol, &p, &mut rng);
        let gaps: Vec<f64> = traj.states.iter().map(|s| (s - pol.mu_inf).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
    }
}
