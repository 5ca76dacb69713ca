use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use velab::analytic::exact_discrete_gradient;
use velab::env::{rollout, score, LqgParams, PolicyParams};
use velab::harness::{simulate, Moments};
use velab::methods::{gradient_estimate, Evaluator, Method, MethodContext};
use velab::Error;

fn unit_context(horizon: usize) -> MethodContext {
    let params = LqgParams::with_total_time(1.0, 1.0, 1.0, 1.0, 3.0, horizon).unwrap();
    MethodContext::new(params, PolicyParams::new(1.0, 1.0), 0.0, 0.0).unwrap()
}

fn combined(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// Pairwise agreement of every method, and agreement with the exact gradient
/// of the discrete model, at `delta`.
fn check_agreement(delta: f64, horizon: usize, samples: usize, seed: u64) {
    let params = LqgParams::new(1.0, 1.0, 1.0, 1.0, delta, horizon).unwrap();
    let ctx = MethodContext::new(params, PolicyParams::new(1.0, 1.0), 0.0, 0.0).unwrap();
    let moments = simulate(&ctx, 0.0, &Method::ALL, samples, seed, 0).unwrap();
    let exact = exact_discrete_gradient(ctx.analytic(), 0.0);
    for (i, a) in moments.iter().enumerate() {
        assert!(
            (a.mean - exact).abs() < 4.0 * a.stderr_mean(),
            "{} at delta {delta}: {} vs exact {exact} (stderr {})",
            Method::ALL[i],
            a.mean,
            a.stderr_mean()
        );
        for (j, b) in moments.iter().enumerate().skip(i + 1) {
            let tolerance = 4.0 * combined(a.stderr_mean(), b.stderr_mean());
            assert!(
                (a.mean - b.mean).abs() < tolerance,
                "{} vs {} at delta {delta}: {} vs {}",
                Method::ALL[i],
                Method::ALL[j],
                a.mean,
                b.mean
            );
        }
    }
}

#[test]
fn methods_agree_at_coarse_step() {
    check_agreement(0.1, 29, 1_000_000, 101);
}

#[test]
fn methods_agree_at_fine_step() {
    check_agreement(0.01, 299, 1_000_000, 102);
}

#[test]
fn variance_ordering_at_fine_step() {
    let ctx = unit_context(299);
    let m = simulate(&ctx, 0.0, &Method::ALL, 100_000, 103, 0).unwrap();
    let [nb, vb, sb, ab, ve] = [&m[0], &m[1], &m[2], &m[3], &m[4]];
    let strictly_above = |hi: &Moments, lo: &Moments| {
        hi.variance() - lo.variance() > combined(hi.stderr_variance(), lo.stderr_variance())
    };
    assert!(strictly_above(nb, vb), "nb {} vb {}", nb.variance(), vb.variance());
    assert!(vb.variance() >= sb.variance(), "vb {} sb {}", vb.variance(), sb.variance());
    assert!(sb.variance() >= ab.variance(), "sb {} ab {}", sb.variance(), ab.variance());
    assert!(strictly_above(ab, ve), "ab {} ve {}", ab.variance(), ve.variance());
}

#[test]
fn constant_baseline_shift_leaves_vb_mean_unchanged() {
    let ctx = unit_context(29);
    let shift = 50.0;
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut plain = Moments::new();
    let mut shifted = Moments::new();
    for _ in 0..100_000 {
        let traj = rollout(0.0, ctx.policy(), ctx.params(), &mut rng);
        let vb = gradient_estimate(&traj, Method::Vb, &ctx).unwrap();
        let score_sum: f64 = traj
            .states
            .iter()
            .zip(&traj.actions)
            .map(|(&s, &a)| score(s, a, ctx.policy(), ctx.params()).unwrap())
            .sum();
        plain.push(vb);
        shifted.push(vb - shift * score_sum);
    }
    let tolerance = 4.0 * combined(plain.stderr_mean(), shifted.stderr_mean());
    assert!((plain.mean - shifted.mean).abs() < tolerance, "{} vs {}", plain.mean, shifted.mean);
    assert!(shifted.variance() > plain.variance());
}

#[test]
fn ab_and_ve_merge_at_zero_horizon() {
    let ctx = unit_context(0);
    let mut evaluator = Evaluator::new();
    let mut out = [0.0; 2];
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for _ in 0..1000 {
        let traj = rollout(0.0, ctx.policy(), ctx.params(), &mut rng);
        evaluator.evaluate(&traj, &[Method::Ab, Method::Ve], &ctx, &mut out).unwrap();
        assert!((out[0] - out[1]).abs() <= 1e-12 * out[0].abs().max(1e-300));
    }
}

#[test]
fn rejects_trajectories_of_the_wrong_length() {
    let short = unit_context(4);
    let ctx = unit_context(9);
    let traj = rollout(0.0, short.policy(), short.params(), &mut ChaCha8Rng::seed_from_u64(106));
    assert_eq!(
        gradient_estimate(&traj, Method::Ve, &ctx),
        Err(Error::TrajectoryLength { expected: 10, got: 5 })
    );
}
