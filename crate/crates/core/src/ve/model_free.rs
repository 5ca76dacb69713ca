use nalgebra::SVector;

use super::{DeterministicModel, ModelBasedSuite, ModelFreeSuite, PolicyGradientSuite};
use crate::trajectory::Trajectory;

/// `Σ_{i=t}^{N-1} γ^{i-t} (r_i + γ V̄(s_{i+1}) - Q̃(s_i, a_i)) + γ^{N-t} (r_N - Q̃(s_N, a_N))`.
fn temporal_differences<S, A, M: ModelFreeSuite<S, A> + ?Sized>(
    traj: &Trajectory<S, A>,
    t: usize,
    suite: &M,
) -> f64 {
    let gamma = suite.gamma();
    let last = traj.horizon();
    let mut weight = 1.0;
    let mut total = 0.0;
    for i in t..last {
        let td = traj.rewards[i] + gamma * suite.v_bar(i + 1, &traj.states[i + 1])
            - suite.q_tilde(i, &traj.states[i], &traj.actions[i]);
        total += weight * td;
        weight *= gamma;
    }
    total + weight * (traj.rewards[last] - suite.q_tilde(last, &traj.states[last], &traj.actions[last]))
}

/// Model-free estimate of `V(s_t)`.
pub fn mf_value_estimate<S, A, M: ModelFreeSuite<S, A> + ?Sized>(
    traj: &Trajectory<S, A>,
    t: usize,
    suite: &M,
) -> f64 {
    suite.v_bar(t, &traj.states[t]) + temporal_differences(traj, t, suite)
}

/// Model-free estimate of `Q(s_t, a_t)`.
pub fn mf_q_estimate<S, A, M: ModelFreeSuite<S, A> + ?Sized>(
    traj: &Trajectory<S, A>,
    t: usize,
    suite: &M,
) -> f64 {
    suite.q_tilde(t, &traj.states[t], &traj.actions[t]) + temporal_differences(traj, t, suite)
}

/// Backward recursion `Q̂_{t-1} = r_{t-1} + γ V̄_t + γ (Q̂_t - Q̃_t)`, `Q̂_N = r_N`,
/// over per-step arrays `v_bar[t] = V̄(t, s_t)` and `q_tilde[t] = Q̃(t, s_t, a_t)`.
///
/// `out` is overwritten with `Q̂_0 .. Q̂_N`.
pub fn q_hat_backward(rewards: &[f64], v_bar: &[f64], q_tilde: &[f64], gamma: f64, out: &mut Vec<f64>) {
    let steps = rewards.len();
    assert!(steps > 0, "empty trajectory");
    assert!(v_bar.len() == steps && q_tilde.len() == steps, "per-step arrays must align");
    out.clear();
    out.resize(steps, 0.0);
    let mut q_hat = rewards[steps - 1];
    out[steps - 1] = q_hat;
    for t in (1..steps).rev() {
        q_hat = rewards[t - 1] + gamma * v_bar[t] + gamma * (q_hat - q_tilde[t]);
        out[t - 1] = q_hat;
    }
}

/// `Q̂_0 .. Q̂_N` by the backward recursion.
pub fn mf_q_recursive<S, A, M: ModelFreeSuite<S, A> + ?Sized>(
    traj: &Trajectory<S, A>,
    suite: &M,
) -> Vec<f64> {
    let v_bar: Vec<f64> = (0..traj.len()).map(|t| suite.v_bar(t, &traj.states[t])).collect();
    let q_tilde: Vec<f64> = (0..traj.len())
        .map(|t| suite.q_tilde(t, &traj.states[t], &traj.actions[t]))
        .collect();
    let mut out = Vec::new();
    q_hat_backward(&traj.rewards, &v_bar, &q_tilde, suite.gamma(), &mut out);
    out
}

/// Per-step gradient `∇ln π(a_t|s_t) (Q̂_t - Q̃(t, s_t, a_t)) + ∇V̄(t, s_t)`.
pub fn ve_gradient_term<S, A, M, F, const P: usize>(
    traj: &Trajectory<S, A>,
    t: usize,
    q_hat: &[f64],
    suite: &M,
    score: F,
) -> SVector<f64, P>
where
    M: PolicyGradientSuite<S, A, P> + ?Sized,
    F: Fn(usize, &S, &A) -> SVector<f64, P>,
{
    let (s, a) = (&traj.states[t], &traj.actions[t]);
    score(t, s, a) * (q_hat[t] - suite.q_tilde(t, s, a)) + suite.grad_v_bar(t, s)
}

/// Full-trajectory gradient estimate: per-step terms weighted by `γ^t`.
pub fn ve_gradient<S, A, M, F, const P: usize>(traj: &Trajectory<S, A>, suite: &M, score: F) -> SVector<f64, P>
where
    M: PolicyGradientSuite<S, A, P> + ?Sized,
    F: Fn(usize, &S, &A) -> SVector<f64, P>,
{
    let q_hat = mf_q_recursive(traj, suite);
    let gamma = suite.gamma();
    let mut weight = 1.0;
    let mut total = SVector::<f64, P>::zeros();
    for t in 0..traj.len() {
        total += ve_gradient_term(traj, t, &q_hat, suite, &score) * weight;
        weight *= gamma;
    }
    total
}

/// Model-free view of a deterministic model-based suite:
/// `Q̃(t, s, a) = r̃(t, s, a) + γ Ṽ(t + 1, f̃(s, a))`, with no value term at the final step.
#[derive(Debug, Clone, Copy)]
pub struct InducedModelFree<'a, M> {
    pub model: &'a M,
    pub horizon: usize,
}

impl<'a, M> InducedModelFree<'a, M> {
    pub fn new(model: &'a M, horizon: usize) -> Self {
        Self { model, horizon }
    }
}

impl<S, A, M: DeterministicModel<S, A>> ModelFreeSuite<S, A> for InducedModelFree<'_, M> {
    fn gamma(&self) -> f64 {
        ModelBasedSuite::gamma(self.model)
    }

    fn q_tilde(&self, t: usize, s: &S, a: &A) -> f64 {
        let reward = self.model.r_tilde(t, s, a);
        if t >= self.horizon {
            return reward;
        }
        let next = self.model.f_tilde(t, s, a);
        reward + ModelBasedSuite::gamma(self.model) * self.model.v_tilde(t + 1, &next)
    }

    fn v_bar(&self, t: usize, s: &S) -> f64 {
        ModelBasedSuite::v_bar(self.model, t, s)
    }
}
