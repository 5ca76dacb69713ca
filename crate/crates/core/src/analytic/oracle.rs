//! Exact finite-Δ action-value functions by backward recursion.
//!
//! For linear dynamics, quadratic reward and a linear-Gaussian policy every
//! `Q_t` is a quadratic form, so the recursion is closed-form coefficient
//! arithmetic with no sampling.

use nalgebra::SVector;

use super::{AnalyticContext, QuadForm};
use crate::env::policy_mean;
use crate::ve::{ModelFreeSuite, PolicyGradientSuite};

/// `Q_0 .. Q_N` of the discrete model under the context's policy.
pub fn exact_discrete_q(ctx: &AnalyticContext) -> Vec<QuadForm> {
    let p = &ctx.params;
    let k = ctx.policy.k;
    let reward = QuadForm {
        ss: -2.0 * p.c_s_d(),
        aa: -2.0 * p.c_a_d(),
        ..QuadForm::ZERO
    };
    let offset = k * ctx.policy.mu_inf;
    let variance = p.action_variance();

    let mut forms = vec![QuadForm::ZERO; p.steps()];
    forms[p.horizon] = reward;
    for t in (0..p.horizon).rev() {
        let next_value = forms[t + 1].action_average(offset, -k, variance);
        forms[t] = reward + p.gamma * next_value.through_linear_step(p.b_d());
    }
    forms
}

/// Exact gradient of the discrete expected return `E[Σ γ^t r_t]` with
/// respect to `μ∞`, for a deterministic initial state `s0`.
pub fn exact_discrete_gradient(ctx: &AnalyticContext, s0: f64) -> f64 {
    let p = &ctx.params;
    let k = ctx.policy.k;
    let mu_inf = ctx.policy.mu_inf;
    let contraction = 1.0 - p.b_d() * k;
    let mut mean = s0;
    let mut weight = 1.0;
    let mut total = 0.0;
    for q in exact_discrete_q(ctx) {
        // The sensitivity is affine in s, so its average needs only the mean.
        total += weight * k * q.mean_sensitivity(mean, policy_mean(mean, &ctx.policy));
        mean = contraction * mean + (1.0 - contraction) * mu_inf;
        weight *= p.gamma;
    }
    total
}

/// Model-free approximator suite backed by the exact discrete `Q_t`.
#[derive(Debug, Clone)]
pub struct ExactDiscreteSuite {
    ctx: AnalyticContext,
    q: Vec<QuadForm>,
    v: Vec<QuadForm>,
}

impl ExactDiscreteSuite {
    pub fn new(ctx: AnalyticContext) -> Self {
        let q = exact_discrete_q(&ctx);
        let offset = ctx.policy.k * ctx.policy.mu_inf;
        let variance = ctx.params.action_variance();
        let v = q
            .iter()
            .map(|form| form.action_average(offset, -ctx.policy.k, variance))
            .collect();
        Self { ctx, q, v }
    }

    pub fn q_forms(&self) -> &[QuadForm] {
        &self.q
    }

    pub fn context(&self) -> &AnalyticContext {
        &self.ctx
    }
}

impl ModelFreeSuite<f64, f64> for ExactDiscreteSuite {
    fn gamma(&self) -> f64 {
        self.ctx.params.gamma
    }

    fn q_tilde(&self, t: usize, s: &f64, a: &f64) -> f64 {
        self.q[t].eval(*s, *a)
    }

    fn v_bar(&self, t: usize, s: &f64) -> f64 {
        self.v[t].eval_state(*s)
    }
}

impl PolicyGradientSuite<f64, f64, 1> for ExactDiscreteSuite {
    fn grad_v_bar(&self, t: usize, s: &f64) -> SVector<f64, 1> {
        let mean = policy_mean(*s, &self.ctx.policy);
        SVector::from([self.ctx.policy.k * self.q[t].mean_sensitivity(*s, mean)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{LqgParams, PolicyParams};

    fn ctx(delta: f64, horizon: usize, mu_inf: f64) -> AnalyticContext {
        AnalyticContext::new(
            LqgParams::new(1.0, 1.0, 1.0, 1.0, delta, horizon).unwrap(),
            PolicyParams::new(1.0, mu_inf),
        )
        .unwrap()
    }

    #[test]
    fn terminal_form_is_reward() {
        let c = ctx(0.25, 0, 1.0);
        let q = exact_discrete_q(&c);
        assert_eq!(q.len(), 1);
        for &(s, a) in &[(0.3, -1.0), (2.0, 0.5)] {
            assert_eq!(q[0].eval(s, a), crate::env::reward(s, a, &c.params));
        }
    }

    #[test]
    fn terminal_value_is_gaussian_second_moment() {
        let suite = ExactDiscreteSuite::new(ctx(1.0, 0, 1.0));
        assert!((suite.v_bar(0, &0.0) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_difference_of_return() {
        let c = ctx(0.1, 29, 1.0);
        let h = 1e-5;
        let value = |mu: f64| {
            ExactDiscreteSuite::new(ctx(0.1, 29, mu)).v_bar(0, &0.0)
        };
        let fd = (value(1.0 + h) - value(1.0 - h)) / (2.0 * h);
        let exact = exact_discrete_gradient(&c, 0.0);
        assert!(((fd - exact) / exact).abs() < 1e-7, "{fd} vs {exact}");
    }
}
