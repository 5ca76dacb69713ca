//! Seeded Monte Carlo runs of the gradient methods over grids of horizons.
//!
//! Trajectory `i` of a point draws from its own ChaCha8 stream seeded with
//! [`trajectory_seed`]`(base_seed, i)`. Trajectories are grouped into
//! fixed-size chunks that are accumulated sequentially and merged in index
//! order, so results do not depend on the number of workers.

mod moments;

pub use moments::Moments;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::env::{rollout_into, LqgParams, PolicyParams};
use crate::error::{Error, Result};
use crate::methods::{Evaluator, Method, MethodContext, VanillaBaseline};
use crate::trajectory::Trajectory;

/// Trajectories per sequential accumulation chunk.
pub const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub b: f64,
    pub w: f64,
    pub c_s: f64,
    pub c_a: f64,
    pub k: f64,
    pub mu_inf: f64,
    pub s0: f64,
    /// Continuous horizon `T`, held fixed across the grid.
    pub total_time: f64,
    pub n_grid: Vec<usize>,
    /// Trajectories per point, `M`.
    pub samples: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Worker threads; 0 lets the thread pool decide.
    pub workers: usize,
    pub vanilla: VanillaBaseline,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            b: 1.0,
            w: 1.0,
            c_s: 1.0,
            c_a: 1.0,
            k: 1.0,
            mu_inf: 1.0,
            s0: 0.0,
            total_time: 3.0,
            n_grid: vec![3, 10, 30, 100, 300],
            samples: 100_000,
            seed: 1,
            methods: Method::ALL.to_vec(),
            workers: 0,
            vanilla: VanillaBaseline::Propagated,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::InvalidValue {
                key: "samples".into(),
                reason: format!("need at least 2 trajectories, got {}", self.samples),
            });
        }
        if !(self.total_time > 0.0) || !self.total_time.is_finite() {
            return Err(Error::InvalidValue {
                key: "T".into(),
                reason: format!("must be positive, got {}", self.total_time),
            });
        }
        // Model constraints are checked on a representative point.
        self.method_context(self.n_grid.first().copied().unwrap_or(0))
            .map(|_| ())
    }

    pub fn params(&self, horizon: usize) -> Result<LqgParams> {
        LqgParams::with_total_time(self.b, self.w, self.c_s, self.c_a, self.total_time, horizon)
    }

    pub fn policy(&self) -> PolicyParams {
        PolicyParams::new(self.k, self.mu_inf)
    }

    pub fn method_context(&self, horizon: usize) -> Result<MethodContext> {
        MethodContext::with_baseline(self.params(horizon)?, self.policy(), self.s0, 0.0, self.vanilla)
    }
}

/// Monte Carlo summary of one method at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct GradStats {
    pub method: Method,
    pub horizon: usize,
    pub delta: f64,
    pub samples: usize,
    pub mean: f64,
    /// Population variance of the per-trajectory estimate.
    pub variance: f64,
    pub stderr_mean: f64,
    pub stderr_variance: f64,
    pub seed: u64,
    /// `Δ ≥ 2 / (B K)`: the discrete closed loop does not contract.
    pub unstable: bool,
}

impl GradStats {
    pub fn from_moments(
        method: Method,
        horizon: usize,
        delta: f64,
        seed: u64,
        unstable: bool,
        m: &Moments,
    ) -> Self {
        Self {
            method,
            horizon,
            delta,
            samples: m.count as usize,
            mean: m.mean,
            variance: m.variance(),
            stderr_mean: m.stderr_mean(),
            stderr_variance: m.stderr_variance(),
            seed,
            unstable,
        }
    }
}

/// Outcome of one `(method, N)` grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub method: Method,
    pub horizon: usize,
    pub outcome: Result<GradStats>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `index`: `splitmix64(splitmix64(base) ^ index)`.
pub fn trajectory_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base) ^ index)
}

pub fn trajectory_rng(base: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trajectory_seed(base, index))
}

fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// Per-method moments over `samples` trajectories at one horizon, evaluating
/// every method on the same trajectories.
pub fn simulate(
    ctx: &MethodContext,
    s0: f64,
    methods: &[Method],
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<Moments>> {
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<Result<Vec<Moments>>> = with_pool(workers, || {
        (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut evaluator = Evaluator::new();
                let mut traj = Trajectory::with_capacity(ctx.params().steps());
                let mut values = vec![0.0; methods.len()];
                let mut acc = vec![Moments::new(); methods.len()];
                let end = ((chunk + 1) * CHUNK).min(samples);
                for index in chunk * CHUNK..end {
                    let mut rng = trajectory_rng(seed, index as u64);
                    rollout_into(&mut traj, s0, ctx.policy(), ctx.params(), &mut rng);
                    evaluator.evaluate(&traj, methods, ctx, &mut values)?;
                    acc.iter_mut().zip(&values).for_each(|(m, &v)| m.push(v));
                }
                Ok(acc)
            })
            .collect()
    });

    let mut total = vec![Moments::new(); methods.len()];
    for partial in partials {
        for (t, p) in total.iter_mut().zip(partial?) {
            *t = t.merge(&p);
        }
    }
    Ok(total)
}

/// All configured methods at horizon `N`, on common random numbers.
pub fn run_methods(config: &ExperimentConfig, horizon: usize, methods: &[Method]) -> Result<Vec<GradStats>> {
    config.validate()?;
    let ctx = config.method_context(horizon)?;
    let moments = simulate(&ctx, config.s0, methods, config.samples, config.seed, config.workers)?;
    let unstable = ctx.params().is_unstable(ctx.policy());
    Ok(methods
        .iter()
        .zip(&moments)
        .map(|(&method, m)| {
            GradStats::from_moments(method, horizon, ctx.params().delta, config.seed, unstable, m)
        })
        .collect())
}

pub fn run_point(config: &ExperimentConfig, horizon: usize, method: Method) -> Result<GradStats> {
    Ok(run_methods(config, horizon, &[method])?.remove(0))
}

/// Every `(method, N)` point of the configuration, ordered by `N` then by
/// method. A failing horizon is reported for each of its methods and the
/// remaining horizons still run.
pub fn run_grid(config: &ExperimentConfig) -> Vec<PointResult> {
    let mut results = Vec::with_capacity(config.n_grid.len() * config.methods.len());
    for &horizon in &config.n_grid {
        match run_methods(config, horizon, &config.methods) {
            Ok(stats) => results.extend(stats.into_iter().map(|s| PointResult {
                method: s.method,
                horizon,
                outcome: Ok(s),
            })),
            Err(err) => results.extend(config.methods.iter().map(|&method| PointResult {
                method,
                horizon,
                outcome: Err(err.clone()),
            })),
        }
    }
    results
}

/// Least-squares slope of `ln(variance)` against `ln(N)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if let Some(&(n, value)) = points.iter().find(|(n, v)| !(*n > 0.0 && *v > 0.0)) {
        return Err(Error::NonPositive { n, value });
    }
    if points.len() < 2 {
        return Err(Error::TooFewPoints);
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, v)| (n.ln(), v.ln())).collect();
    let count = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::TooFewPoints);
    }
    Ok(sxy / sxx)
}
