//! Continuous-limit closed forms for the controlled diffusion, and an exact
//! discrete-time oracle built from quadratic-form algebra.
//!
//! Time enters the closed forms only through the remaining time `T - t`.
//! Step-indexed helpers compute it as `(N + 1 - i) Δ` so that long horizons do
//! not accumulate rounding in `t`.

mod oracle;
mod quadform;

pub use oracle::{exact_discrete_gradient, exact_discrete_q, ExactDiscreteSuite};
pub use quadform::QuadForm;

use crate::env::{LqgParams, PolicyParams};
use crate::error::{Error, Result};

/// Model and policy parameters with the closed-form derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticContext {
    pub params: LqgParams,
    pub policy: PolicyParams,
}

/// The time-dependent factors of `v(t, μ, Σ)` for one remaining time `T - t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueSlice {
    pub g1: f64,
    pub g2: f64,
    pub remaining: f64,
}

impl AnalyticContext {
    pub fn new(params: LqgParams, policy: PolicyParams) -> Result<Self> {
        params.validate()?;
        let bk = params.b * policy.k;
        if !(bk > 0.0) {
            return Err(Error::NonPositiveMixingRate(bk));
        }
        Ok(Self { params, policy })
    }

    pub fn bk(&self) -> f64 {
        self.params.b * self.policy.k
    }

    /// Stationary state variance `Σ∞ = W / (2 B K)`.
    pub fn sigma_inf(&self) -> f64 {
        self.params.w / (2.0 * self.bk())
    }

    pub fn total_time(&self) -> f64 {
        self.params.total_time()
    }

    /// `g_n(τ) = 1 - exp(-n B K τ)`.
    pub fn g(&self, n: u32, tau: f64) -> f64 {
        -(-(n as f64) * self.bk() * tau).exp_m1()
    }

    /// Continuous-limit mean and variance of the state at time `t` given
    /// `s_0 ~ N(mu0, sigma0)`.
    pub fn state_moments(&self, t: f64, mu0: f64, sigma0: f64) -> (f64, f64) {
        let mu_inf = self.policy.mu_inf;
        let sigma_inf = self.sigma_inf();
        let decay = (-self.bk() * t).exp();
        (
            (mu0 - mu_inf) * decay + mu_inf,
            (sigma0 - sigma_inf) * decay * decay + sigma_inf,
        )
    }

    /// Exact moments of the state after one discrete step from `N(mu, sigma)`.
    pub fn one_step_moments(&self, mu: f64, sigma: f64) -> (f64, f64) {
        let contraction = 1.0 - self.params.b_d() * self.policy.k;
        (
            contraction * mu + (1.0 - contraction) * self.policy.mu_inf,
            contraction * contraction * sigma + self.params.w_d(),
        )
    }

    /// Expected one-step reward for `s ~ N(mu_t, sigma_t)` and `a ~ π(·|s)`.
    pub fn expected_local_reward(&self, mu_t: f64, sigma_t: f64) -> f64 {
        let p = &self.params;
        let k = self.policy.k;
        let mu_inf = self.policy.mu_inf;
        let offset = mu_t - mu_inf;
        -(p.c_s_d() + p.c_a_d() * k * k) * (offset * offset + sigma_t)
            - 2.0 * p.c_s_d() * mu_inf * offset
            - p.c_s_d() * mu_inf * mu_inf
            - p.c_a_d() * p.w_d() / (p.b_d() * p.b_d())
    }

    pub fn value_slice(&self, remaining: f64) -> ValueSlice {
        ValueSlice {
            g1: self.g(1, remaining),
            g2: self.g(2, remaining),
            remaining,
        }
    }

    /// Slice for the time `t = step Δ`; `step` may be `N + 1` (the horizon).
    pub fn slice_at_step(&self, step: usize) -> ValueSlice {
        let steps_left = self.params.steps() as f64 - step as f64;
        self.value_slice(steps_left * self.params.delta)
    }

    /// `v(t, μ, Σ)` evaluated on a precomputed time slice.
    pub fn v_avg_slice(&self, slice: &ValueSlice, mu: f64, sigma: f64) -> f64 {
        let p = &self.params;
        let k = self.policy.k;
        let mu_inf = self.policy.mu_inf;
        let bk = self.bk();
        let cost = p.c_s + p.c_a * k * k;
        let sigma_inf = self.sigma_inf();
        let offset = mu - mu_inf;
        -cost / (2.0 * bk) * (offset * offset + sigma - sigma_inf) * slice.g2
            - 2.0 * p.c_s / bk * mu_inf * offset * slice.g1
            - (p.c_s * mu_inf * mu_inf
                + cost * sigma_inf
                + p.c_a * p.w / (p.delta * p.b * p.b))
                * slice.remaining
    }

    /// Averaged value function `v(t, μ, Σ) = E_{s ~ N(μ, Σ)}[V(s)]`.
    pub fn v_avg(&self, t: f64, mu: f64, sigma: f64) -> Result<f64> {
        let horizon = self.total_time();
        if t > horizon * (1.0 + 1e-12) {
            return Err(Error::BeyondHorizon { t, horizon });
        }
        let slice = self.value_slice((horizon - t).max(0.0));
        Ok(self.v_avg_slice(&slice, mu, sigma))
    }

    pub fn v_avg_at_step(&self, step: usize, mu: f64, sigma: f64) -> f64 {
        self.v_avg_slice(&self.slice_at_step(step), mu, sigma)
    }

    /// `∂v(0, μ₀, 0) / ∂μ∞`: the continuous-limit policy gradient.
    pub fn theoretical_gradient(&self, mu0: f64) -> f64 {
        let p = &self.params;
        let k = self.policy.k;
        let mu_inf = self.policy.mu_inf;
        let bk = self.bk();
        let horizon = self.total_time();
        (p.c_s + p.c_a * k * k) / bk * (mu0 - mu_inf) * self.g(2, horizon)
            - 2.0 * p.c_s / bk * (mu0 - 2.0 * mu_inf) * self.g(1, horizon)
            - 2.0 * p.c_s * mu_inf * horizon
    }

    /// `Q̃(s_t, a_t) = r(s_t, a_t) + v(t + Δ, s_t + Δ B a_t, 0)`.
    pub fn q_tilde(&self, step: usize, s: f64, a: f64) -> f64 {
        self.q_tilde_slice(&self.slice_at_step(step + 1), s, a)
    }

    pub fn q_tilde_slice(&self, next: &ValueSlice, s: f64, a: f64) -> f64 {
        crate::env::reward(s, a, &self.params)
            + self.v_avg_slice(next, crate::env::next_state(s, a, &self.params), 0.0)
    }

    /// Exact policy average of [`q_tilde`](Self::q_tilde) at state `s`.
    pub fn v_bar(&self, step: usize, s: f64) -> f64 {
        self.v_bar_slice(&self.slice_at_step(step + 1), s)
    }

    pub fn v_bar_slice(&self, next: &ValueSlice, s: f64) -> f64 {
        let p = &self.params;
        let k = self.policy.k;
        let offset = s - self.policy.mu_inf;
        -p.delta * (p.c_s * s * s + p.c_a * k * k * offset * offset) - p.c_a * p.w / (p.b * p.b)
            + self.v_avg_slice(next, s - p.delta * self.bk() * offset, p.delta * p.w)
    }

    /// Gradient of [`v_bar`](Self::v_bar) with respect to `μ∞`, differentiating
    /// only the policy and holding the value-function coefficients fixed.
    pub fn grad_v_bar(&self, step: usize, s: f64) -> f64 {
        self.grad_v_bar_slice(&self.slice_at_step(step + 1), s)
    }

    pub fn grad_v_bar_slice(&self, next: &ValueSlice, s: f64) -> f64 {
        let p = &self.params;
        let k = self.policy.k;
        let mu_inf = self.policy.mu_inf;
        let cost = p.c_s + p.c_a * k * k;
        -p.delta
            * ((s - mu_inf) * (cost * (1.0 - p.delta * self.bk()) * next.g2 - 2.0 * p.c_a * k * k)
                + 2.0 * p.c_s * mu_inf * next.g1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(delta: f64, horizon: usize, mu_inf: f64) -> AnalyticContext {
        AnalyticContext::new(
            LqgParams::new(1.0, 1.0, 1.0, 1.0, delta, horizon).unwrap(),
            PolicyParams::new(1.0, mu_inf),
        )
        .unwrap()
    }

    #[test]
    fn rejects_non_positive_mixing() {
        let params = LqgParams::new(1.0, 1.0, 1.0, 1.0, 0.1, 3).unwrap();
        assert!(AnalyticContext::new(params, PolicyParams::new(0.0, 1.0)).is_err());
        assert!(AnalyticContext::new(params, PolicyParams::new(-1.0, 1.0)).is_err());
    }

    #[test]
    fn stationary_variance() {
        assert_eq!(unit(0.01, 299, 1.0).sigma_inf(), 0.5);
    }

    #[test]
    fn g_values() {
        let ctx = unit(0.01, 299, 1.0);
        assert_eq!(ctx.g(3, 0.0), 0.0);
        assert!((ctx.g(1, 3.0) - 0.950213).abs() < 5e-7);
        assert!((ctx.g(2, 3.0) - 0.997521).abs() < 5e-7);
    }

    #[test]
    fn state_moment_values() {
        let ctx = unit(0.01, 299, 1.0);
        let (mu, sigma) = ctx.state_moments(1.7, 1.0, 0.5);
        assert!((mu - 1.0).abs() < 1e-15 && (sigma - 0.5).abs() < 1e-15);
        let (mu, sigma) = ctx.state_moments(1.0, 0.0, 0.0);
        assert!((mu - 0.632121).abs() < 5e-7);
        assert!((sigma - 0.432332).abs() < 5e-7);
    }

    #[test]
    fn v_avg_values() {
        let ctx = unit(0.01, 299, 1.0);
        assert_eq!(ctx.v_avg(3.0, 0.4, 0.9).unwrap(), 0.0);
        assert_eq!(ctx.v_avg_at_step(300, -2.0, 1.0), 0.0);
        assert!((ctx.v_avg(0.0, 0.0, 0.0).unwrap() + 304.598).abs() < 5e-4);
        assert!(ctx.v_avg(3.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn theoretical_gradient_values() {
        assert_eq!(unit(0.01, 299, 0.0).theoretical_gradient(0.0), 0.0);
        let g = unit(0.01, 299, 1.0).theoretical_gradient(0.0);
        assert!((g + 4.19419).abs() < 5e-6, "{g}");
    }

    #[test]
    fn q_tilde_terminal_step_is_reward() {
        let ctx = unit(0.1, 9, 1.0);
        let r = crate::env::reward(0.3, -1.2, &ctx.params);
        assert_eq!(ctx.q_tilde(9, 0.3, -1.2), r);
    }

    #[test]
    fn q_tilde_composes_reward_and_successor_value() {
        let ctx = unit(0.01, 299, 1.0);
        let expected = crate::env::reward(0.0, 1.0, &ctx.params) + ctx.v_avg(0.01, 0.01, 0.0).unwrap();
        assert!((ctx.q_tilde(0, 0.0, 1.0) - expected).abs() < 1e-10);
    }

    #[test]
    fn v_bar_terminal_step() {
        let ctx = AnalyticContext::new(
            LqgParams::new(1.5, 0.8, 2.0, 0.5, 0.2, 4).unwrap(),
            PolicyParams::new(1.3, 0.7),
        )
        .unwrap();
        let s = -0.4;
        let p = ctx.params;
        let expected = -p.delta * (p.c_s * s * s + p.c_a * 1.69 * (s - 0.7f64).powi(2)) - p.c_a * p.w / (p.b * p.b);
        assert!((ctx.v_bar(4, s) - expected).abs() < 1e-14);
    }

    #[test]
    fn v_bar_is_quadratic_in_state() {
        let ctx = unit(0.1, 29, 1.0);
        let xs = [-1.0, 0.5, 2.0];
        let ys: Vec<f64> = xs.iter().map(|&x| ctx.v_bar(7, x)).collect();
        let x = 3.7;
        let lagrange: f64 = (0..3)
            .map(|i| {
                let basis: f64 = (0..3)
                    .filter(|&j| j != i)
                    .map(|j| (x - xs[j]) / (xs[i] - xs[j]))
                    .product();
                ys[i] * basis
            })
            .sum();
        assert!((lagrange - ctx.v_bar(7, x)).abs() < 1e-10 * lagrange.abs());
    }

    #[test]
    fn grad_v_bar_terminal_and_zero() {
        let ctx = AnalyticContext::new(
            LqgParams::new(1.5, 0.8, 2.0, 0.5, 0.2, 4).unwrap(),
            PolicyParams::new(1.3, 0.7),
        )
        .unwrap();
        let s = 1.9;
        let expected = 2.0 * 0.2 * 0.5 * 1.69 * (s - 0.7);
        assert!((ctx.grad_v_bar(4, s) - expected).abs() < 1e-14);
        assert_eq!(unit(0.1, 9, 0.0).grad_v_bar(3, 0.0), 0.0);
    }

    #[test]
    fn one_step_moments_match_definition() {
        let ctx = unit(0.1, 9, 1.0);
        let (mu, sigma) = ctx.one_step_moments(0.0, 0.2);
        assert!((mu - 0.1).abs() < 1e-15);
        assert!((sigma - (0.81 * 0.2 + 0.1)).abs() < 1e-15);
    }
}
