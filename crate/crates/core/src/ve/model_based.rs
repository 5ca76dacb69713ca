use super::{DeterministicModel, ModelBasedSuite, StochasticModel};
use crate::trajectory::Trajectory;

/// `R̄(s, a, s') = r̃(s, a) + γ Ṽ(s')` for a transition taken at step `t`.
pub fn r_bar<S, A, M: ModelBasedSuite<S, A> + ?Sized>(
    t: usize,
    s: &S,
    a: &A,
    s_prime: &S,
    suite: &M,
) -> f64 {
    suite.r_tilde(t, s, a) + suite.gamma() * suite.v_tilde(t + 1, s_prime)
}

/// `V̄(s_t) + Σ_{i≥t} γ^{i-t} (r_i - r̃_i)`, the part shared by every
/// model-based estimator.
fn reward_residuals<S, A, M: ModelBasedSuite<S, A> + ?Sized>(
    traj: &Trajectory<S, A>,
    t: usize,
    suite: &M,
) -> f64 {
    let gamma = suite.gamma();
    let mut weight = 1.0;
    let mut total = suite.v_bar(t, &traj.states[t]);
    for i in t..traj.len() {
        total += weight * (traj.rewards[i] - suite.r_tilde(i, &traj.states[i], &traj.actions[i]));
        weight *= gamma;
    }
    total
}

/// Adds `Σ_{i>t} γ^{i-t} (V̄(s_i) - baseline(i))`.
fn value_residuals<S, A, M, F>(traj: &Trajectory<S, A>, t: usize, suite: &M, mut baseline: F) -> f64
where
    M: ModelBasedSuite<S, A> + ?Sized,
    F: FnMut(usize) -> f64,
{
    let gamma = suite.gamma();
    let mut weight = 1.0;
    let mut total = 0.0;
    for i in t + 1..traj.len() {
        weight *= gamma;
        total += weight * (suite.v_bar(i, &traj.states[i]) - baseline(i));
    }
    total
}

/// Value estimator when the model kernel equals the true dynamics: the
/// sampled `(a_i, s_{i+1})` serve as draws for every control variate.
pub fn mb_value_estimate_matched<S, A, M: ModelBasedSuite<S, A> + ?Sized>(
    traj: &Trajectory<S, A>,
    t: usize,
    suite: &M,
) -> f64 {
    reward_residuals(traj, t, suite)
        + value_residuals(traj, t, suite, |i| suite.v_tilde(i, &traj.states[i]))
}

/// Value estimator for a stochastic model kernel different from the dynamics.
pub fn mb_value_estimate_stoch<S, A, M: StochasticModel<S, A> + ?Sized>(
    traj: &Trajectory<S, A>,
    t: usize,
    suite: &M,
) -> f64 {
    reward_residuals(traj, t, suite)
        + value_residuals(traj, t, suite, |i| {
            suite.expected_next_value(i - 1, &traj.states[i - 1], &traj.actions[i - 1])
        })
}

/// Value estimator for a deterministic model, `s̃_i = f̃(s_{i-1}, a_{i-1})`.
pub fn mb_value_estimate_det<S, A, M: DeterministicModel<S, A> + ?Sized>(
    traj: &Trajectory<S, A>,
    t: usize,
    suite: &M,
) -> f64 {
    reward_residuals(traj, t, suite)
        + value_residuals(traj, t, suite, |i| {
            let predicted = suite.f_tilde(i - 1, &traj.states[i - 1], &traj.actions[i - 1]);
            suite.v_tilde(i, &predicted)
        })
}
