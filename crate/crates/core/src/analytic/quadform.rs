use std::ops::{Add, Mul};

/// `q(s, a) = c0 + s_coef s + a_coef a + ½ ss s² + sa s a + ½ aa a²`.
///
/// A state-only form has `a_coef = sa = aa = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QuadForm {
    pub c0: f64,
    pub s: f64,
    pub a: f64,
    pub ss: f64,
    pub sa: f64,
    pub aa: f64,
}

impl QuadForm {
    pub const ZERO: QuadForm = QuadForm {
        c0: 0.0,
        s: 0.0,
        a: 0.0,
        ss: 0.0,
        sa: 0.0,
        aa: 0.0,
    };

    pub fn state_only(c0: f64, s: f64, ss: f64) -> Self {
        Self {
            c0,
            s,
            ss,
            ..Self::ZERO
        }
    }

    pub fn eval(&self, s: f64, a: f64) -> f64 {
        self.c0
            + self.s * s
            + self.a * a
            + 0.5 * self.ss * s * s
            + self.sa * s * a
            + 0.5 * self.aa * a * a
    }

    pub fn eval_state(&self, s: f64) -> f64 {
        self.eval(s, 0.0)
    }

    pub fn is_state_only(&self) -> bool {
        self.a == 0.0 && self.sa == 0.0 && self.aa == 0.0
    }

    /// Averages over `a ~ N(offset + slope s, variance)`, giving a state-only form.
    pub fn action_average(&self, offset: f64, slope: f64, variance: f64) -> Self {
        Self::state_only(
            self.c0 + self.a * offset + 0.5 * self.aa * (offset * offset + variance),
            self.s + self.a * slope + self.sa * offset + self.aa * offset * slope,
            self.ss + 2.0 * self.sa * slope + self.aa * slope * slope,
        )
    }

    /// Derivative of the action average with respect to the action mean,
    /// evaluated at state `s` with mean `a_mean`. Independent of the variance.
    pub fn mean_sensitivity(&self, s: f64, a_mean: f64) -> f64 {
        self.a + self.sa * s + self.aa * a_mean
    }

    /// Rewrites the state-only form `v(s')` as a form in `(s, a)` through
    /// `s' = s + gain a`.
    pub fn through_linear_step(&self, gain: f64) -> Self {
        debug_assert!(self.is_state_only());
        Self {
            c0: self.c0,
            s: self.s,
            a: self.s * gain,
            ss: self.ss,
            sa: self.ss * gain,
            aa: self.ss * gain * gain,
        }
    }
}

impl Add for QuadForm {
    type Output = QuadForm;

    fn add(self, rhs: QuadForm) -> QuadForm {
        QuadForm {
            c0: self.c0 + rhs.c0,
            s: self.s + rhs.s,
            a: self.a + rhs.a,
            ss: self.ss + rhs.ss,
            sa: self.sa + rhs.sa,
            aa: self.aa + rhs.aa,
        }
    }
}

impl Mul<QuadForm> for f64 {
    type Output = QuadForm;

    fn mul(self, q: QuadForm) -> QuadForm {
        QuadForm {
            c0: self * q.c0,
            s: self * q.s,
            a: self * q.a,
            ss: self * q.ss,
            sa: self * q.sa,
            aa: self * q.aa,
        }
    }
}
