//! Control-variate value and policy-gradient estimators.
//!
//! Approximators are supplied through the suite traits below and are indexed
//! by step, since finite-horizon value functions depend on time. States and
//! actions are generic; gradients are fixed-size parameter vectors.

mod model_based;
mod model_free;
mod quad;

pub use model_based::{
    mb_value_estimate_det, mb_value_estimate_matched, mb_value_estimate_stoch, r_bar,
};
pub use model_free::{
    mf_q_estimate, mf_q_recursive, mf_value_estimate, q_hat_backward,
    ve_gradient, ve_gradient_term, InducedModelFree,
};
pub use quad::{
    quad_eval, quad_v_bar_model_based, quad_v_bar_model_free, QuadApprox, QuadModelApprox,
};

use nalgebra::SVector;

/// Model-free approximators: `Q̃(t, s, a)` and its policy average `V̄(t, s)`.
///
/// Implementations that claim exact variance elimination must keep
/// `v_bar(t, s) = E_{a ~ π(·|s)}[q_tilde(t, s, a)]` exactly.
pub trait ModelFreeSuite<S, A> {
    fn gamma(&self) -> f64;
    fn q_tilde(&self, t: usize, s: &S, a: &A) -> f64;
    fn v_bar(&self, t: usize, s: &S) -> f64;
}

/// Adds `∇V̄(t, s) = E_{a ~ π}[∇ ln π(a|s) Q̃(t, s, a)]` over `P` policy parameters.
pub trait PolicyGradientSuite<S, A, const P: usize>: ModelFreeSuite<S, A> {
    fn grad_v_bar(&self, t: usize, s: &S) -> SVector<f64, P>;
}

/// Model-based approximators `r̃`, `Ṽ` and the averaged `V̄`.
///
/// `v_tilde(t, s)` approximates the value of being in `s` at step `t`; the
/// estimators never evaluate it past the final step. `v_bar(N, s)` must
/// treat `Ṽ(N + 1, ·)` as zero for the estimators to stay unbiased.
pub trait ModelBasedSuite<S, A> {
    fn gamma(&self) -> f64;
    fn r_tilde(&self, t: usize, s: &S, a: &A) -> f64;
    fn v_tilde(&self, t: usize, s: &S) -> f64;
    /// `E_{a ~ π, s' ~ p̃}[r̃(t, s, a) + γ Ṽ(t + 1, s')]`.
    fn v_bar(&self, t: usize, s: &S) -> f64;
}

/// Deterministic model `s̃' = f̃(s, a)`.
pub trait DeterministicModel<S, A>: ModelBasedSuite<S, A> {
    fn f_tilde(&self, t: usize, s: &S, a: &A) -> S;
}

/// Stochastic model exposing `E_{s' ~ p̃(·|s, a)}[Ṽ(t + 1, s')]`.
pub trait StochasticModel<S, A>: ModelBasedSuite<S, A> {
    fn expected_next_value(&self, t: usize, s: &S, a: &A) -> f64;
}
