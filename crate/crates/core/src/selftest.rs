//! Fast deterministic checks of the estimator identities, the exact oracle
//! and the analytic derivatives. Used by the `selftest` subcommand.

use nalgebra::SVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::{AnalyticContext, ExactDiscreteSuite, QuadForm};
use crate::env::{log_density, rollout, score, LqgParams, PolicyParams};
use crate::methods::{Evaluator, Method, MethodContext};
use crate::quadrature::GaussHermite;
use crate::trajectory::Trajectory;
use crate::ve::{
    mb_value_estimate_det, mf_q_estimate, mf_q_recursive, mf_value_estimate, ve_gradient_term,
    DeterministicModel, InducedModelFree, ModelBasedSuite, ModelFreeSuite, PolicyGradientSuite,
    StochasticModel,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// `∇V̄(t, s)` as a function of the context; swapped out by negative controls.
pub type GradVBar = dyn Fn(&AnalyticContext, usize, f64) -> f64;

/// Runs every check with the shipped `∇V̄`.
pub fn run() -> Vec<CheckResult> {
    run_with(&|ctx, t, s| ctx.grad_v_bar(t, s))
}

pub fn run_with(grad_v_bar: &GradVBar) -> Vec<CheckResult> {
    vec![
        theoretical_gradient_value(),
        theoretical_gradient_fd(),
        grad_v_bar_fd(grad_v_bar),
        v_bar_quadrature(),
        gaussian_averaging_identity(),
        score_fd(),
        quadform_average(),
        q_estimate_recursion(),
        model_based_bridge(),
        oracle_zero_variance(),
        ab_ve_merge(),
        ab_from_ve(),
    ]
}

fn check(name: &'static str, worst: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name,
        passed: worst <= tolerance && worst.is_finite(),
        detail: format!("worst error {worst:.3e} (tolerance {tolerance:.0e})"),
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

/// Relative error with an absolute floor of one.
fn scaled_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

fn unit_context(delta: f64, horizon: usize, mu_inf: f64) -> AnalyticContext {
    AnalyticContext::new(
        LqgParams::new(1.0, 1.0, 1.0, 1.0, delta, horizon).expect("unit parameters are valid"),
        PolicyParams::new(1.0, mu_inf),
    )
    .expect("unit context is valid")
}

fn sample_contexts() -> Vec<AnalyticContext> {
    let mut contexts = vec![unit_context(0.01, 299, 1.0), unit_context(0.3, 9, 1.0)];
    let params = LqgParams::with_total_time(1.4, 0.6, 2.0, 0.7, 2.5, 13).expect("valid");
    contexts.push(AnalyticContext::new(params, PolicyParams::new(0.9, -0.4)).expect("valid"));
    contexts
}

/// `v_bar` with separate `μ∞` for the policy mean and for the value
/// function coefficients.
pub fn v_bar_split(ctx: &AnalyticContext, step: usize, s: f64, mu_policy: f64, mu_value: f64) -> f64 {
    let p = &ctx.params;
    let k = ctx.policy.k;
    let value_ctx = AnalyticContext {
        policy: PolicyParams::new(k, mu_value),
        ..*ctx
    };
    let offset = s - mu_policy;
    -p.delta * (p.c_s * s * s + p.c_a * k * k * offset * offset) - p.c_a * p.w / (p.b * p.b)
        + value_ctx.v_avg_at_step(step + 1, s - p.delta * ctx.bk() * offset, p.delta * p.w)
}

fn theoretical_gradient_value() -> CheckResult {
    let got = unit_context(0.01, 299, 1.0).theoretical_gradient(0.0);
    check("theoretical gradient value", (got + 4.19419).abs(), 5e-6)
}

fn theoretical_gradient_fd() -> CheckResult {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for ctx in sample_contexts() {
        for &mu0 in &[0.0, 0.8, -1.3] {
            let at = |mu: f64| {
                let c = AnalyticContext {
                    policy: PolicyParams::new(ctx.policy.k, mu),
                    ..ctx
                };
                c.v_avg(0.0, mu0, 0.0).expect("t = 0 is inside the horizon")
            };
            let fd = (at(ctx.policy.mu_inf + h) - at(ctx.policy.mu_inf - h)) / (2.0 * h);
            worst = worst.max(rel_err(ctx.theoretical_gradient(mu0), fd));
        }
    }
    check("theoretical gradient finite-difference", worst, 1e-6)
}

fn grad_v_bar_fd(grad_v_bar: &GradVBar) -> CheckResult {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for ctx in sample_contexts() {
        let mu = ctx.policy.mu_inf;
        let last = ctx.params.horizon;
        for &step in &[0, last / 2, last] {
            for &s in &[-0.7, 0.2, 1.9] {
                let fd = (v_bar_split(&ctx, step, s, mu + h, mu) - v_bar_split(&ctx, step, s, mu - h, mu))
                    / (2.0 * h);
                worst = worst.max(rel_err(grad_v_bar(&ctx, step, s), fd));
            }
        }
    }
    check("grad_v_bar finite-difference", worst, 1e-6)
}

fn v_bar_quadrature() -> CheckResult {
    let rule = GaussHermite::new(40);
    let mut worst: f64 = 0.0;
    for ctx in sample_contexts() {
        let var = ctx.params.action_variance();
        for &step in &[0, ctx.params.horizon / 3, ctx.params.horizon] {
            for &s in &[-1.1, 0.0, 0.6, 2.4] {
                let mean = crate::env::policy_mean(s, &ctx.policy);
                let quad = rule.expectation(mean, var, |a| ctx.q_tilde(step, s, a));
                worst = worst.max(rel_err(ctx.v_bar(step, s), quad));
            }
        }
    }
    check("v_bar quadrature of q_tilde", worst, 1e-8)
}

fn gaussian_averaging_identity() -> CheckResult {
    let rule = GaussHermite::new(40);
    let mut worst: f64 = 0.0;
    for ctx in sample_contexts() {
        let horizon = ctx.total_time();
        for &t in &[0.0, 0.37 * horizon, 0.9 * horizon] {
            for &mu in &[-0.5, 0.4, 1.7] {
                for &(sigma, extra) in &[(0.0, 0.3), (0.5, 0.1), (1.2, 2.0)] {
                    let quad = rule.expectation(mu, extra, |s| ctx.v_avg(t, s, sigma).expect("in range"));
                    let closed = ctx.v_avg(t, mu, sigma + extra).expect("in range");
                    worst = worst.max(rel_err(quad, closed));
                }
            }
        }
    }
    check("gaussian averaging identity", worst, 1e-8)
}

fn score_fd() -> CheckResult {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let params = LqgParams::new(1.3, 0.7, 1.0, 2.0, 0.05, 0).expect("valid");
    for &(s, a, k, mu) in &[(0.2, 1.1, 1.0, 1.0), (-1.5, 0.4, 2.5, -0.3), (3.0, -7.0, 0.6, 2.0)] {
        let lp = |m: f64| log_density(s, a, &PolicyParams::new(k, m), &params).expect("W > 0");
        let fd = (lp(mu + h) - lp(mu - h)) / (2.0 * h);
        let exact = score(s, a, &PolicyParams::new(k, mu), &params).expect("W > 0");
        worst = worst.max(rel_err(exact, fd));
    }
    check("score finite-difference", worst, 1e-6)
}

fn quadform_average() -> CheckResult {
    let rule = GaussHermite::new(40);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let q = random_form(&mut rng);
        let (offset, slope, var, s) = (
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(0.0..3.0),
            rng.random_range(-2.0..2.0),
        );
        let quad = rule.expectation(offset + slope * s, var, |a| q.eval(s, a));
        worst = worst.max(scaled_err(q.action_average(offset, slope, var).eval_state(s), quad));
    }
    check("quadform action average", worst, 1e-10)
}

fn q_estimate_recursion() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let horizon = rng.random_range(0..12);
        let suite = RandomSuite::new(&mut rng, horizon);
        let traj = random_trajectory(&mut rng, horizon);
        let recursive = mf_q_recursive(&traj, &suite);
        for (t, &q) in recursive.iter().enumerate() {
            worst = worst.max(scaled_err(q, mf_q_estimate(&traj, t, &suite)));
        }
    }
    check("q estimate recursion", worst, 1e-12)
}

fn model_based_bridge() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let horizon = rng.random_range(0..12);
        let suite = RandomSuite::new(&mut rng, horizon);
        let traj = random_trajectory(&mut rng, horizon);
        let induced = InducedModelFree::new(&suite, horizon);
        for t in 0..=horizon {
            worst = worst.max(scaled_err(
                mb_value_estimate_det(&traj, t, &suite),
                mf_value_estimate(&traj, t, &induced),
            ));
        }
    }
    check("model-based/model-free bridge", worst, 1e-12)
}

fn oracle_zero_variance() -> CheckResult {
    let ctx = unit_context(3.0 / 21.0, 20, 1.0);
    let suite = ExactDiscreteSuite::new(ctx);
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let traj = rollout(0.0, &ctx.policy, &ctx.params, &mut ChaCha8Rng::seed_from_u64(seed));
        let q_hat = mf_q_recursive(&traj, &suite);
        let score_fn = |_: usize, s: &f64, a: &f64| {
            SVector::from([score(*s, *a, &ctx.policy, &ctx.params).expect("W > 0")])
        };
        for t in 0..traj.len() {
            let (s, a) = (traj.states[t], traj.actions[t]);
            worst = worst.max(scaled_err(q_hat[t], suite.q_tilde(t, &s, &a)));
            let term = ve_gradient_term(&traj, t, &q_hat, &suite, score_fn)[0];
            worst = worst.max(scaled_err(term, suite.grad_v_bar(t, &s)[0]));
        }
    }
    check("oracle conditional zero variance", worst, 1e-9)
}

fn ab_ve_merge() -> CheckResult {
    let params = LqgParams::with_total_time(1.0, 1.0, 1.0, 1.0, 3.0, 0).expect("valid");
    let ctx = MethodContext::new(params, PolicyParams::new(1.0, 1.0), 0.0, 0.0).expect("valid");
    let mut evaluator = Evaluator::new();
    let mut out = [0.0; 2];
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let traj = rollout(0.0, ctx.policy(), ctx.params(), &mut ChaCha8Rng::seed_from_u64(seed));
        evaluator
            .evaluate(&traj, &[Method::Ab, Method::Ve], &ctx, &mut out)
            .expect("matching length");
        worst = worst.max(scaled_err(out[1], out[0]));
    }
    check("AB/VE merge at N = 0", worst, 1e-12)
}

fn ab_from_ve() -> CheckResult {
    let params = LqgParams::with_total_time(1.0, 1.0, 1.0, 1.0, 3.0, 9).expect("valid");
    let ctx = MethodContext::new(params, PolicyParams::new(1.0, 1.0), 0.0, 0.0).expect("valid");
    let score_fn = |_: usize, s: &f64, a: &f64| SVector::from([ctx.score(*s, *a)]);
    let mut evaluator = Evaluator::new();
    let mut out = [0.0];
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let traj = rollout(0.0, ctx.policy(), ctx.params(), &mut ChaCha8Rng::seed_from_u64(seed));
        evaluator.evaluate(&traj, &[Method::Ab], &ctx, &mut out).expect("matching length");
        let returns = crate::methods::gradient_suffix_returns(&traj.rewards, 1.0);
        let with_returns: f64 = (0..traj.len())
            .map(|t| ve_gradient_term(&traj, t, &returns, &ctx.approx, score_fn)[0])
            .sum();
        worst = worst.max(scaled_err(with_returns, out[0]));
    }
    check("AB from VE with reward-to-go", worst, 1e-12)
}

pub fn random_form<R: Rng>(rng: &mut R) -> QuadForm {
    let mut c = || rng.random_range(-2.0..2.0);
    QuadForm {
        c0: c(),
        s: c(),
        a: c(),
        ss: c(),
        sa: c(),
        aa: c(),
    }
}

/// Scalar trajectory with arbitrary states, actions and rewards.
pub fn random_trajectory<R: Rng>(rng: &mut R, horizon: usize) -> Trajectory<f64, f64> {
    let mut traj = Trajectory::with_capacity(horizon + 1);
    for _ in 0..=horizon {
        traj.push(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-3.0..1.0),
        );
    }
    traj
}

/// Arbitrary, mutually inconsistent scalar approximators for exercising the
/// algebraic identities between estimators.
#[derive(Debug, Clone)]
pub struct RandomSuite {
    pub gamma: f64,
    /// Per step: `Q̃` (model-free) and `r̃` (model-based).
    pub q: Vec<QuadForm>,
    pub r: Vec<QuadForm>,
    /// Per step, state-only: `V̄` and `Ṽ`.
    pub v_bar: Vec<QuadForm>,
    pub v_tilde: Vec<QuadForm>,
    /// Per step `f̃(s, a) = f.0 + f.1 s + f.2 a`.
    pub f: Vec<(f64, f64, f64)>,
    /// Per step, additive offset of the stochastic model's expected next value.
    pub noise_value: Vec<f64>,
    pub grad: Vec<(f64, f64)>,
}

impl RandomSuite {
    pub fn new<R: Rng>(rng: &mut R, horizon: usize) -> Self {
        let steps = horizon + 1;
        let state_form = |rng: &mut R| QuadForm::state_only(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        Self {
            gamma: rng.random_range(0.3..1.0),
            q: (0..steps).map(|_| random_form(rng)).collect(),
            r: (0..steps).map(|_| random_form(rng)).collect(),
            v_bar: (0..steps).map(|_| state_form(rng)).collect(),
            v_tilde: (0..=steps).map(|_| state_form(rng)).collect(),
            f: (0..steps)
                .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.5..1.5), rng.random_range(-1.0..1.0)))
                .collect(),
            noise_value: (0..steps).map(|_| rng.random_range(-0.5..0.5)).collect(),
            grad: (0..steps).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
        }
    }
}

impl ModelFreeSuite<f64, f64> for RandomSuite {
    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn q_tilde(&self, t: usize, s: &f64, a: &f64) -> f64 {
        self.q[t].eval(*s, *a)
    }

    fn v_bar(&self, t: usize, s: &f64) -> f64 {
        self.v_bar[t].eval_state(*s)
    }
}

impl PolicyGradientSuite<f64, f64, 1> for RandomSuite {
    fn grad_v_bar(&self, t: usize, s: &f64) -> SVector<f64, 1> {
        SVector::from([self.grad[t].0 + self.grad[t].1 * s])
    }
}

impl ModelBasedSuite<f64, f64> for RandomSuite {
    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn r_tilde(&self, t: usize, s: &f64, a: &f64) -> f64 {
        self.r[t].eval(*s, *a)
    }

    fn v_tilde(&self, t: usize, s: &f64) -> f64 {
        self.v_tilde[t].eval_state(*s)
    }

    fn v_bar(&self, t: usize, s: &f64) -> f64 {
        self.v_bar[t].eval_state(*s)
    }
}

impl DeterministicModel<f64, f64> for RandomSuite {
    fn f_tilde(&self, t: usize, s: &f64, a: &f64) -> f64 {
        let (c, ks, ka) = self.f[t];
        c + ks * s + ka * a
    }
}

impl StochasticModel<f64, f64> for RandomSuite {
    fn expected_next_value(&self, t: usize, s: &f64, a: &f64) -> f64 {
        let next = self.f_tilde(t, s, a);
        self.v_tilde(t + 1, &next) + self.noise_value[t]
    }
}
