use std::sync::Arc;

use dpsbp_wave::diagnostics::{convergence_rate, energy_trace, exact_solution, l2_error};
use dpsbp_wave::forward::{
    assemble_forward, constant, constant_in_time, march_multiblock, sample_source, Face, PenaltyConfig, SolutionField,
    SpaceFn, WaveProblem,
};
use dpsbp_wave::operators::{build_space_triplet, build_time_ops, Flavor};

fn cosine_problem(dim: usize, sigma: f64) -> WaveProblem {
    let f: SpaceFn = Arc::new(|x: &[f64]| x.iter().map(|xi| (std::f64::consts::PI * xi).cos()).product());
    WaveProblem::new(dim).with_damping(constant(sigma)).with_initial(f, constant(0.0))
}

fn solve_1d(prob: &WaveProblem, order: usize, delta: f64, flavors: (Flavor, Flavor), blocks: usize) -> SolutionField {
    let n = (2.0 / delta).round() as usize + 1;
    let m = (prob.final_time / delta / blocks as f64).round() as usize + 1;
    let sp: Vec<_> = (0..prob.dim()).map(|_| build_space_triplet(order, n, delta).unwrap()).collect();
    let tm = build_time_ops(order, m, delta, flavors.0, flavors.1).unwrap();
    march_multiblock(prob, &sp, &tm, &PenaltyConfig::default(), blocks).unwrap()
}

#[test]
fn zero_data_gives_zero_solution() {
    let prob = WaveProblem::new(1);
    let u = solve_1d(&prob, 4, 0.1, (Flavor::Minus, Flavor::Minus), 1);
    assert!(u.blocks[0].iter().all(|v| *v == 0.0));
}

#[test]
fn constant_state_is_preserved() {
    for sigma in [0.0, 1.0] {
        let prob = WaveProblem::new(1).with_damping(constant(sigma)).with_initial(constant(1.0), constant(0.0));
        let u = solve_1d(&prob, 4, 0.1, (Flavor::Center, Flavor::Minus), 2);
        for b in &u.blocks {
            assert!(b.iter().all(|v| (v - 1.0).abs() < 1e-9), "sigma {sigma}");
        }
    }
}

#[test]
fn order_four_rate_matches_reference() {
    let prob = cosine_problem(1, 0.0);
    let ex = exact_solution(1, 1.0, 0.0);
    let mut errs = Vec::new();
    for delta in [0.1_f64, 0.05, 0.025, 0.0125] {
        let n = (2.0 / delta).round() as usize + 1;
        let sp = build_space_triplet(4, n, delta).unwrap();
        let u = solve_1d(&prob, 4, delta, (Flavor::Minus, Flavor::Minus), 1);
        let sys = assemble_forward(
            &prob,
            &[sp],
            &build_time_ops(4, u.m, delta, Flavor::Minus, Flavor::Minus).unwrap(),
            &PenaltyConfig::default(),
        )
        .unwrap();
        errs.push((delta, l2_error(&u, &ex, &sys.space).unwrap()));
    }
    let rate = convergence_rate(&errs).unwrap();
    assert!((rate - 4.4994).abs() < 0.35, "rate {rate}, errors {errs:?}");
}

#[test]
fn stationary_boundary_data() {
    // u = x solves the Neumann problem with unit outward flux data on both faces.
    let face = |sign: f64| Face::neumann().with_data(constant_in_time(sign));
    let prob =
        WaveProblem::new(1).with_initial(Arc::new(|x: &[f64]| x[0]), constant(0.0)).with_faces(0, face(1.0), face(1.0));
    let u = solve_1d(&prob, 4, 0.1, (Flavor::Minus, Flavor::Minus), 1);
    let sp = build_space_triplet(4, 21, 0.1).unwrap();
    let sys = assemble_forward(
        &prob,
        &[sp],
        &build_time_ops(4, u.m, 0.1, Flavor::Minus, Flavor::Minus).unwrap(),
        &PenaltyConfig::default(),
    )
    .unwrap();
    let src = sample_source(&prob, &sys.space, &sys.time, 0.0);
    assert!(src.iter().any(|v| *v != 0.0));
    for (i, v) in u.final_state().iter().enumerate() {
        assert!((v - sys.space.coords[0][i]).abs() < 1e-9, "node {i}: {v}");
    }
}

#[test]
fn energy_does_not_grow() {
    let prob = cosine_problem(1, 0.0);
    let u = solve_1d(&prob, 4, 0.05, (Flavor::Minus, Flavor::Minus), 2);
    let sp = build_space_triplet(4, 41, 0.05).unwrap();
    let tm = build_time_ops(4, u.m, 0.05, Flavor::Minus, Flavor::Minus).unwrap();
    let sys = assemble_forward(&prob, &[sp], &tm, &PenaltyConfig::default()).unwrap();
    let tr = energy_trace(&u, &sys.space, &tm, &PenaltyConfig::default()).unwrap();
    assert!(tr.final_energy() <= tr.initial() * (1.0 + 1e-10), "{} > {}", tr.final_energy(), tr.initial());
    assert!(tr.min_entry() >= -1e-12);
}
