//! Gauss–Hermite rules for Gaussian expectations.

use std::f64::consts::PI;

/// Nodes `x_i` and weights `w_i` with `∫ e^{-x²} f(x) dx ≈ Σ w_i f(x_i)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds an `n`-point rule by Newton iteration on the orthonormal
    /// Hermite recurrence.
    ///
    /// Panics if `n == 0`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "a quadrature rule needs at least one node");
        let pim4 = PI.powf(-0.25);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut derivative = 0.0;
            for _ in 0..100 {
                let (p, pp) = orthonormal_hermite(n, z, pim4);
                derivative = pp;
                let step = p / pp;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            let (_, pp) = orthonormal_hermite(n, z, pim4);
            if pp != 0.0 {
                derivative = pp;
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (derivative * derivative);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(x)]` for `x ~ N(mean, variance)`.
    pub fn expectation<F: FnMut(f64) -> f64>(&self, mean: f64, variance: f64, mut f: F) -> f64 {
        let scale = (2.0 * variance).sqrt();
        let norm = PI.sqrt().recip();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mean + scale * x))
            .sum::<f64>()
            * norm
    }

    /// `E[f(x)]` for `x ~ N(mean, L Lᵀ)` over a tensor-product grid, where
    /// `chol` is the lower-triangular factor `L` stored row-major.
    pub fn expectation_nd<F: FnMut(&[f64]) -> f64>(
        &self,
        mean: &[f64],
        chol: &[f64],
        mut f: F,
    ) -> f64 {
        let dim = mean.len();
        assert_eq!(chol.len(), dim * dim, "Cholesky factor must be dim x dim");
        let n = self.len();
        let mut index = vec![0usize; dim];
        let mut z = vec![0.0; dim];
        let mut x = vec![0.0; dim];
        let norm = PI.powf(-(dim as f64) / 2.0);
        let mut total = 0.0;
        loop {
            let mut weight = 1.0;
            for (d, &i) in index.iter().enumerate() {
                z[d] = std::f64::consts::SQRT_2 * self.nodes[i];
                weight *= self.weights[i];
            }
            for r in 0..dim {
                x[r] = mean[r] + (0..=r).map(|c| chol[r * dim + c] * z[c]).sum::<f64>();
            }
            total += weight * f(&x);

            let mut d = 0;
            loop {
                if d == dim {
                    return total * norm;
                }
                index[d] += 1;
                if index[d] < n {
                    break;
                }
                index[d] = 0;
                d += 1;
            }
        }
    }
}

/// Value and derivative of the normalized Hermite function of degree `n` at `z`.
fn orthonormal_hermite(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for n in [1, 2, 5, 20, 40, 64] {
            let rule = GaussHermite::new(n);
            let total: f64 = rule.weights().iter().sum();
            assert!((total - PI.sqrt()).abs() < 1e-13, "n = {n}: {total}");
        }
    }

    #[test]
    fn gaussian_moments() {
        let rule = GaussHermite::new(40);
        let (m, v) = (0.7, 2.3);
        assert!((rule.expectation(m, v, |x| x) - m).abs() < 1e-13);
        assert!((rule.expectation(m, v, |x| (x - m).powi(2)) - v).abs() < 1e-12);
        assert!((rule.expectation(m, v, |x| (x - m).powi(4)) - 3.0 * v * v).abs() < 1e-11);
        assert!((rule.expectation(0.0, 1.0, |x| x.cos()) - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn nodes_are_sorted_and_symmetric() {
        let rule = GaussHermite::new(9);
        assert!(rule.nodes().windows(2).all(|w| w[0] > w[1]));
        assert_eq!(rule.nodes()[4], 0.0);
    }

    #[test]
    fn bivariate_second_moment() {
        let rule = GaussHermite::new(10);
        // covariance [[4, 2], [2, 5]]: L = [[2, 0], [1, 2]]
        let chol = [2.0, 0.0, 1.0, 2.0];
        let cross = rule.expectation_nd(&[1.0, -1.0], &chol, |x| (x[0] - 1.0) * (x[1] + 1.0));
        assert!((cross - 2.0).abs() < 1e-12);
        let second = rule.expectation_nd(&[1.0, -1.0], &chol, |x| x[1] * x[1]);
        assert!((second - 6.0).abs() < 1e-12);
    }
}
