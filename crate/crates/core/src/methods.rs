//! The five policy-gradient estimators compared on the diffusion model.
//!
//! Each maps one trajectory to one scalar estimate of `∂J/∂μ∞`:
//!
//! * `nb`: `Σ_t ψ_t G_t`, no baseline.
//! * `vb`: `Σ_t ψ_t (G_t - v(t, μ(t), Σ(t)))`, a time-only baseline.
//! * `sb`: `Σ_t ψ_t (G_t - v(t, s_t, 0))`, a state baseline.
//! * `ab`: `Σ_t [ψ_t (G_t - Q̃_t) + ∇V̄_t]`, a state-action control variate.
//! * `ve`: `Σ_t [ψ_t (Q̂_t - Q̃_t) + ∇V̄_t]` with `Q̂` from the backward recursion.
//!
//! where `ψ_t` is the score and `G_t` the reward-to-go.

use std::fmt;
use std::str::FromStr;

use nalgebra::SVector;

use crate::analytic::{AnalyticContext, ValueSlice};
use crate::env::{policy_mean, DiffusionTrajectory, LqgParams, PolicyParams};
use crate::error::{Error, Result};
use crate::ve::{q_hat_backward, ModelFreeSuite, PolicyGradientSuite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Nb,
    Vb,
    Sb,
    Ab,
    Ve,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Nb, Method::Vb, Method::Sb, Method::Ab, Method::Ve];

    pub fn name(self) -> &'static str {
        match self {
            Method::Nb => "nb",
            Method::Vb => "vb",
            Method::Sb => "sb",
            Method::Ab => "ab",
            Method::Ve => "ve",
        }
    }

    /// Parses a comma-separated list; an empty string selects no methods.
    pub fn parse_list(list: &str) -> Result<Vec<Method>> {
        list.split(',')
            .map(str::trim)
            .filter(|item| !item.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Which time-only baseline `vb` subtracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VanillaBaseline {
    /// `v(t, μ(t), Σ(t))` propagated from the initial distribution.
    #[default]
    Propagated,
    /// The steady-state `v(t, μ∞, Σ∞)`.
    SteadyState,
}

/// Analytic approximators for one `(params, policy)` pair, tabulated per step.
#[derive(Debug, Clone)]
pub struct DiffusionApprox {
    ctx: AnalyticContext,
    /// `slices[i]` describes time `i Δ`, for `i = 0 ..= N + 1`.
    slices: Vec<ValueSlice>,
}

impl DiffusionApprox {
    pub fn new(ctx: AnalyticContext) -> Self {
        let slices = (0..=ctx.params.steps()).map(|i| ctx.slice_at_step(i)).collect();
        Self { ctx, slices }
    }

    pub fn context(&self) -> &AnalyticContext {
        &self.ctx
    }

    /// `v(t, s, 0)`, the state baseline.
    pub fn state_value(&self, t: usize, s: f64) -> f64 {
        self.ctx.v_avg_slice(&self.slices[t], s, 0.0)
    }

    pub fn grad_v_bar_at(&self, t: usize, s: f64) -> f64 {
        self.ctx.grad_v_bar_slice(&self.slices[t + 1], s)
    }
}

impl ModelFreeSuite<f64, f64> for DiffusionApprox {
    fn gamma(&self) -> f64 {
        self.ctx.params.gamma
    }

    fn q_tilde(&self, t: usize, s: &f64, a: &f64) -> f64 {
        self.ctx.q_tilde_slice(&self.slices[t + 1], *s, *a)
    }

    fn v_bar(&self, t: usize, s: &f64) -> f64 {
        self.ctx.v_bar_slice(&self.slices[t + 1], *s)
    }
}

impl PolicyGradientSuite<f64, f64, 1> for DiffusionApprox {
    fn grad_v_bar(&self, t: usize, s: &f64) -> SVector<f64, 1> {
        SVector::from([self.grad_v_bar_at(t, *s)])
    }
}

/// Everything the five methods need for one model, precomputed per step.
#[derive(Debug, Clone)]
pub struct MethodContext {
    pub approx: DiffusionApprox,
    pub mu0: f64,
    pub sigma0: f64,
    pub vanilla: VanillaBaseline,
    vb_baseline: Vec<f64>,
}

impl MethodContext {
    pub fn new(params: LqgParams, policy: PolicyParams, mu0: f64, sigma0: f64) -> Result<Self> {
        Self::with_baseline(params, policy, mu0, sigma0, VanillaBaseline::Propagated)
    }

    pub fn with_baseline(
        params: LqgParams,
        policy: PolicyParams,
        mu0: f64,
        sigma0: f64,
        vanilla: VanillaBaseline,
    ) -> Result<Self> {
        if !(params.w > 0.0) {
            return Err(Error::DeterministicPolicy);
        }
        if !(sigma0 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma0",
                reason: format!("must be >= 0, got {sigma0}"),
            });
        }
        let ctx = AnalyticContext::new(params, policy)?;
        let approx = DiffusionApprox::new(ctx);
        let vb_baseline = (0..params.steps())
            .map(|i| {
                let slice = &approx.slices[i];
                match vanilla {
                    VanillaBaseline::Propagated => {
                        let (mu, sigma) = ctx.state_moments(i as f64 * params.delta, mu0, sigma0);
                        ctx.v_avg_slice(slice, mu, sigma)
                    }
                    VanillaBaseline::SteadyState => {
                        ctx.v_avg_slice(slice, policy.mu_inf, ctx.sigma_inf())
                    }
                }
            })
            .collect();
        Ok(Self {
            approx,
            mu0,
            sigma0,
            vanilla,
            vb_baseline,
        })
    }

    pub fn params(&self) -> &LqgParams {
        &self.approx.ctx.params
    }

    pub fn policy(&self) -> &PolicyParams {
        &self.approx.ctx.policy
    }

    pub fn analytic(&self) -> &AnalyticContext {
        &self.approx.ctx
    }

    /// The time-only baseline subtracted by `vb` at step `t`.
    pub fn vanilla_baseline(&self, t: usize) -> f64 {
        self.vb_baseline[t]
    }

    pub fn score(&self, s: f64, a: f64) -> f64 {
        self.policy().k * (a - policy_mean(s, self.policy())) / self.params().action_variance()
    }
}

/// Reward-to-go `G_t = Σ_{i≥t} γ^{i-t} r_i` in one backward pass.
pub fn gradient_suffix_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = Vec::new();
    suffix_returns_into(rewards, gamma, &mut out);
    out
}

fn suffix_returns_into(rewards: &[f64], gamma: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize(rewards.len(), 0.0);
    let mut acc = 0.0;
    for (t, &r) in rewards.iter().enumerate().rev() {
        acc = r + gamma * acc;
        out[t] = acc;
    }
}

/// Evaluates several methods on one trajectory, sharing the per-step work.
///
/// Holds scratch buffers, so one evaluator should be reused across the
/// trajectories handled by a worker.
#[derive(Debug, Default, Clone)]
pub struct Evaluator {
    returns: Vec<f64>,
    scores: Vec<f64>,
    q_tilde: Vec<f64>,
    v_bar: Vec<f64>,
    grad_v_bar: Vec<f64>,
    q_hat: Vec<f64>,
}

impl Evaluator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Writes the estimate of `methods[i]` into `out[i]`.
    pub fn evaluate(
        &mut self,
        traj: &DiffusionTrajectory,
        methods: &[Method],
        ctx: &MethodContext,
        out: &mut [f64],
    ) -> Result<()> {
        let steps = ctx.params().steps();
        if traj.len() != steps || traj.states.len() != steps || traj.actions.len() != steps {
            return Err(Error::TrajectoryLength {
                expected: steps,
                got: traj.len(),
            });
        }
        assert_eq!(methods.len(), out.len(), "one output slot per method");
        let gamma = ctx.params().gamma;
        let needs_control_variate = methods.iter().any(|m| matches!(m, Method::Ab | Method::Ve));

        suffix_returns_into(&traj.rewards, gamma, &mut self.returns);
        self.scores.clear();
        self.scores
            .extend(traj.states.iter().zip(&traj.actions).map(|(&s, &a)| ctx.score(s, a)));

        if needs_control_variate {
            let approx = &ctx.approx;
            self.q_tilde.clear();
            self.grad_v_bar.clear();
            for t in 0..steps {
                let (s, a) = (traj.states[t], traj.actions[t]);
                self.q_tilde.push(approx.q_tilde(t, &s, &a));
                self.grad_v_bar.push(approx.grad_v_bar_at(t, s));
            }
        }
        if methods.contains(&Method::Ve) {
            let approx = &ctx.approx;
            self.v_bar.clear();
            self.v_bar
                .extend(traj.states.iter().enumerate().map(|(t, s)| approx.v_bar(t, s)));
            q_hat_backward(&traj.rewards, &self.v_bar, &self.q_tilde, gamma, &mut self.q_hat);
        }

        for (slot, &method) in out.iter_mut().zip(methods) {
            *slot = self.combine(method, traj, ctx, gamma);
        }
        Ok(())
    }

    fn combine(&self, method: Method, traj: &DiffusionTrajectory, ctx: &MethodContext, gamma: f64) -> f64 {
        let steps = traj.len();
        let mut weight = 1.0;
        let mut total = 0.0;
        for t in 0..steps {
            let score = self.scores[t];
            let g = self.returns[t];
            let term = match method {
                Method::Nb => score * g,
                Method::Vb => score * (g - ctx.vanilla_baseline(t)),
                Method::Sb => score * (g - ctx.approx.state_value(t, traj.states[t])),
                Method::Ab => score * (g - self.q_tilde[t]) + self.grad_v_bar[t],
                Method::Ve => score * (self.q_hat[t] - self.q_tilde[t]) + self.grad_v_bar[t],
            };
            total += weight * term;
            weight *= gamma;
        }
        total
    }
}

/// Single-trajectory, single-method convenience wrapper around [`Evaluator`].
pub fn gradient_estimate(traj: &DiffusionTrajectory, method: Method, ctx: &MethodContext) -> Result<f64> {
    let mut out = [0.0];
    Evaluator::new().evaluate(traj, &[method], ctx, &mut out)?;
    Ok(out[0])
}
