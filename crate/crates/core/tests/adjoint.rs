use std::sync::Arc;

use dpsbp_wave::adjoint::{
    apply_adjoint_global, apply_forward_global, assemble_adjoint, lagrangian_dot, solve_adjoint, AdjointSystem,
};
use dpsbp_wave::forward::{assemble_forward, constant, PenaltyConfig, SpaceFn, WaveProblem};
use dpsbp_wave::inverse::{InverseProblem, ObjectiveWeighting};
use dpsbp_wave::operators::{build_space_triplet, build_time_ops, Flavor, SbpTriplet, TimeOps};
use dpsbp_wave::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(dim: usize, order: usize, delta: f64, blocks: usize, flavor: Flavor) -> (Vec<SbpTriplet>, TimeOps) {
    let n = (2.0 / delta).round() as usize + 1;
    let m = (2.0 / delta / blocks as f64).round() as usize + 1;
    let sp = (0..dim).map(|_| build_space_triplet(order, n, delta).unwrap()).collect();
    (sp, build_time_ops(order, m, delta, flavor, flavor).unwrap())
}

fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn weighted_transpose_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (dim, delta, order) in [(1, 0.1, 4), (2, 0.25, 2), (2, 0.25, 4)] {
        for blocks in [1, 2] {
            if 2.0 / delta / blocks as f64 + 1.0 < 9.0 && order == 4 {
                continue;
            }
            let speed: SpaceFn = Arc::new(|x: &[f64]| 1.0 + 0.25 * x[0]);
            let prob = WaveProblem::new(dim).with_damping(constant(1.0)).with_wave_speed(speed);
            let (sp, tm) = grid(dim, order, delta, blocks, Flavor::Minus);
            let fwd = assemble_forward(&prob, &sp, &tm, &PenaltyConfig::default()).unwrap();
            let adj = AdjointSystem::from_forward(&fwd).unwrap();
            let n = fwd.unknowns() * blocks;
            let u = random(&mut rng, n);
            let l = random(&mut rng, n);
            let lhs = lagrangian_dot(&fwd.space, &tm, &apply_forward_global(&fwd, blocks, &u).unwrap(), &l);
            let rhs = lagrangian_dot(&fwd.space, &tm, &u, &apply_adjoint_global(&adj, blocks, &l).unwrap());
            assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs().max(rhs.abs()), "dim {dim} blocks {blocks}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn zero_forcing_gives_zero_multiplier() {
    let prob = WaveProblem::new(1);
    let (sp, tm) = grid(1, 4, 0.1, 1, Flavor::Minus);
    let adj = assemble_adjoint(&prob, &sp, &tm, &PenaltyConfig::default()).unwrap();
    let l = solve_adjoint(&adj, &vec![0.0; adj.unknowns()]).unwrap();
    assert!(l.iter().all(|v| *v == 0.0));
}

#[test]
fn non_default_penalty_is_unsupported() {
    let prob = WaveProblem::new(1);
    let (sp, tm) = grid(1, 2, 0.1, 1, Flavor::Minus);
    let err = assemble_adjoint(&prob, &sp, &tm, &PenaltyConfig::with_mu(-0.6, -2.0)).unwrap_err();
    assert!(matches!(err, Error::UnsupportedPenalty(_)));
}

#[test]
fn final_time_forcing_is_causal_in_tau() {
    let prob = WaveProblem::new(1);
    let (sp, tm) = grid(1, 4, 0.1, 1, Flavor::Minus);
    let adj = assemble_adjoint(&prob, &sp, &tm, &PenaltyConfig::default()).unwrap();
    let ns = adj.spatial_points();
    let mut g = vec![0.0; adj.unknowns()];
    g[(tm.m - 1) * ns + ns / 2] = 1.0;
    let l = solve_adjoint(&adj, &g).unwrap();
    assert!(l[..ns].iter().any(|v| v.abs() > 1e-8));
}

fn fd_check(dim: usize, order: usize, delta: f64, sigma: f64, blocks: usize) {
    let f: SpaceFn = Arc::new(|x: &[f64]| x.iter().map(|xi| (-4.0 * xi * xi).exp()).product());
    let prob = WaveProblem::new(dim).with_damping(constant(sigma)).with_initial(f, constant(0.0));
    let (sp, tm) = grid(dim, order, delta, blocks, Flavor::Minus);
    let inv =
        InverseProblem::new(&prob, &sp, &tm, &PenaltyConfig::default(), blocks, ObjectiveWeighting::Printed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ns = inv.spatial_points();
    let f0: Vec<f64> = random(&mut rng, ns).iter().map(|v| 0.5 + 0.2 * v).collect();
    let ev = inv.evaluate_f(&f0).unwrap();
    for _ in 0..3 {
        let dir = random(&mut rng, ns);
        let exact: f64 = ev.gradient.iter().zip(&dir).zip(&inv.forward.space.h).map(|((g, d), h)| g * d * h).sum();
        let eps = 1e-5;
        let plus: Vec<f64> = f0.iter().zip(&dir).map(|(a, d)| a + eps * d).collect();
        let minus: Vec<f64> = f0.iter().zip(&dir).map(|(a, d)| a - eps * d).collect();
        let fd = (inv.misfit(&plus).unwrap() - inv.misfit(&minus).unwrap()) / (2.0 * eps);
        assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "dim {dim} sigma {sigma} blocks {blocks}: {fd} vs {exact}");
    }
}

#[test]
fn gradient_matches_finite_differences_1d() {
    fd_check(1, 4, 0.1, 0.0, 1);
    fd_check(1, 4, 0.1, 1.0, 2);
}

#[test]
fn gradient_matches_finite_differences_2d() {
    fd_check(2, 4, 0.25, 0.0, 1);
    fd_check(2, 2, 0.25, 1.0, 2);
}
