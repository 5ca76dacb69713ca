//! Second-order approximators around the policy mean `ā` of a Gaussian
//! policy `a ~ N(ā, W)`, with their closed-form policy averages.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Model-free expansion `Q̃(a) = Q⁰ + Q¹·(a - ā) + ½ (a - ā)ᵀ Q² (a - ā)` at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadApprox {
    pub a_bar: DVector<f64>,
    /// Policy covariance `W`.
    pub w: DMatrix<f64>,
    pub q0: f64,
    pub q1: DVector<f64>,
    pub q2: DMatrix<f64>,
}

/// Model-based expansion at one state: `f̃` linear in the action, `r̃`
/// quadratic in the action, `Ṽ` quadratic in the state around `s̄ = f⁰`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadModelApprox {
    pub a_bar: DVector<f64>,
    pub w: DMatrix<f64>,
    pub r0: f64,
    pub r1: DVector<f64>,
    pub r2: DMatrix<f64>,
    pub f0: DVector<f64>,
    /// Jacobian `∂f/∂a`, state-dim × action-dim.
    pub f1: DMatrix<f64>,
    pub v0: f64,
    pub v1: DVector<f64>,
    pub v2: DMatrix<f64>,
}

fn check_symmetric(name: &'static str, m: &DMatrix<f64>) -> Result<()> {
    let scale = m.amax().max(1.0);
    if !m.is_square() || (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::NotSymmetric(name));
    }
    Ok(())
}

fn check_shape(name: &'static str, got: (usize, usize), expected: (usize, usize)) -> Result<()> {
    if got != expected {
        return Err(Error::Shape {
            name,
            expected: format!("{}x{}", expected.0, expected.1),
            got: format!("{}x{}", got.0, got.1),
        });
    }
    Ok(())
}

impl QuadApprox {
    pub fn action_dim(&self) -> usize {
        self.a_bar.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.action_dim();
        check_shape("W", self.w.shape(), (n, n))?;
        check_shape("Q1", self.q1.shape(), (n, 1))?;
        check_shape("Q2", self.q2.shape(), (n, n))?;
        check_symmetric("Q2", &self.q2)?;
        check_symmetric("W", &self.w)
    }

    /// `Q̃(a)`; the state is fixed by the expansion point.
    pub fn eval(&self, a: &DVector<f64>) -> f64 {
        let d = a - &self.a_bar;
        self.q0 + self.q1.dot(&d) + 0.5 * d.dot(&(&self.q2 * &d))
    }

    /// `V̄ = Q⁰ + ½ Tr(Q² W)`.
    pub fn v_bar(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.q0 + 0.5 * (&self.q2 * &self.w).trace())
    }
}

impl QuadModelApprox {
    pub fn action_dim(&self) -> usize {
        self.a_bar.len()
    }

    pub fn state_dim(&self) -> usize {
        self.f0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.action_dim(), self.state_dim());
        check_shape("W", self.w.shape(), (n, n))?;
        check_shape("r1", self.r1.shape(), (n, 1))?;
        check_shape("r2", self.r2.shape(), (n, n))?;
        check_shape("f1", self.f1.shape(), (m, n))?;
        check_shape("V1", self.v1.shape(), (m, 1))?;
        check_shape("V2", self.v2.shape(), (m, m))?;
        check_symmetric("r2", &self.r2)?;
        check_symmetric("V2", &self.v2)?;
        check_symmetric("W", &self.w)
    }

    pub fn f_tilde(&self, a: &DVector<f64>) -> DVector<f64> {
        &self.f0 + &self.f1 * (a - &self.a_bar)
    }

    pub fn r_tilde(&self, a: &DVector<f64>) -> f64 {
        let d = a - &self.a_bar;
        self.r0 + self.r1.dot(&d) + 0.5 * d.dot(&(&self.r2 * &d))
    }

    pub fn v_tilde(&self, s: &DVector<f64>) -> f64 {
        let d = s - &self.f0;
        self.v0 + self.v1.dot(&d) + 0.5 * d.dot(&(&self.v2 * &d))
    }

    /// `V̄ = r⁰ + γ V⁰ + ½ Tr((r² + γ f¹ᵀ V² f¹) W)`.
    pub fn v_bar(&self, gamma: f64) -> Result<f64> {
        self.validate()?;
        let curvature = &self.r2 + (self.f1.transpose() * &self.v2 * &self.f1) * gamma;
        Ok(self.r0 + gamma * self.v0 + 0.5 * (curvature * &self.w).trace())
    }

    /// The model-free expansion of `r̃(a) + γ Ṽ(f̃(a))`.
    pub fn induced_q(&self, gamma: f64) -> Result<QuadApprox> {
        self.validate()?;
        let f1t = self.f1.transpose();
        Ok(QuadApprox {
            a_bar: self.a_bar.clone(),
            w: self.w.clone(),
            q0: self.r0 + gamma * self.v0,
            q1: &self.r1 + (&f1t * &self.v1) * gamma,
            q2: &self.r2 + (&f1t * &self.v2 * &self.f1) * gamma,
        })
    }
}

pub fn quad_v_bar_model_free(qa: &QuadApprox) -> Result<f64> {
    qa.v_bar()
}

pub fn quad_v_bar_model_based(qa: &QuadModelApprox, gamma: f64) -> Result<f64> {
    qa.v_bar(gamma)
}

pub fn quad_eval(qa: &QuadApprox, a: &DVector<f64>) -> f64 {
    qa.eval(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_q(q0: f64, q1: f64, q2: f64, w: f64) -> QuadApprox {
        QuadApprox {
            a_bar: DVector::from_element(1, 0.3),
            w: DMatrix::from_element(1, 1, w),
            q0,
            q1: DVector::from_element(1, q1),
            q2: DMatrix::from_element(1, 1, q2),
        }
    }

    fn scalar_model(r0: f64, v0: f64, r2: f64, v2: f64, f1: f64, w: f64) -> QuadModelApprox {
        QuadModelApprox {
            a_bar: DVector::from_element(1, 0.0),
            w: DMatrix::from_element(1, 1, w),
            r0,
            r1: DVector::from_element(1, 0.0),
            r2: DMatrix::from_element(1, 1, r2),
            f0: DVector::from_element(1, 0.0),
            f1: DMatrix::from_element(1, 1, f1),
            v0,
            v1: DVector::from_element(1, 0.0),
            v2: DMatrix::from_element(1, 1, v2),
        }
    }

    #[test]
    fn deterministic_policy_returns_expansion_value() {
        assert_eq!(scalar_q(1.25, 3.0, -6.0, 0.0).v_bar().unwrap(), 1.25);
        assert_eq!(scalar_model(2.0, 5.0, -2.0, -4.0, 1.0, 0.0).v_bar(0.9).unwrap(), 2.0 + 4.5);
    }

    #[test]
    fn hand_evaluated_traces() {
        assert!((quad_v_bar_model_free(&scalar_q(1.0, 0.0, -6.0, 0.5)).unwrap() + 0.5).abs() < 1e-15);
        let model = scalar_model(0.0, 5.0, -2.0, -4.0, 1.0, 0.5);
        assert!((quad_v_bar_model_based(&model, 1.0).unwrap() - 3.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric_blocks() {
        let mut qa = scalar_q(0.0, 0.0, 0.0, 0.0);
        qa.a_bar = DVector::zeros(2);
        qa.q1 = DVector::zeros(2);
        qa.w = DMatrix::identity(2, 2);
        qa.q2 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert_eq!(qa.v_bar(), Err(Error::NotSymmetric("Q2")));
        qa.q2 = DMatrix::identity(2, 2);
        qa.w = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert_eq!(qa.v_bar(), Err(Error::NotSymmetric("W")));
    }

    #[test]
    fn rejects_nonconforming_jacobian() {
        let mut model = scalar_model(0.0, 0.0, 0.0, 0.0, 1.0, 1.0);
        model.f1 = DMatrix::zeros(2, 1);
        assert!(matches!(model.v_bar(1.0), Err(Error::Shape { name: "f1", .. })));
    }

    #[test]
    fn eval_at_expansion_point_and_linear_part() {
        let qa = scalar_q(2.0, -1.5, 0.0, 0.1);
        assert_eq!(qa.eval(&qa.a_bar), 2.0);
        let delta = 0.25;
        let moved = qa.eval(&(qa.a_bar.clone() + DVector::from_element(1, delta)));
        assert!((moved - 2.0 - (-1.5 * delta)).abs() < 1e-15);
    }
}
