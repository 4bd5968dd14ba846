use std::sync::Arc;

use dpsbp_wave::forward::{constant, PenaltyConfig, SpaceFn, WaveProblem};
use dpsbp_wave::inverse::{
    gradient_wrt_initial, objective, objective_gradient_wrt_state, optimize, BfgsOptions, InverseProblem,
    ObjectiveWeighting, Outcome,
};
use dpsbp_wave::operators::{build_space_triplet, build_time_ops, Flavor};
use dpsbp_wave::Error;

fn gaussian_problem(sigma: f64, delta: f64, weighting: ObjectiveWeighting) -> InverseProblem {
    let f: SpaceFn = Arc::new(|x: &[f64]| (-100.0 * x[0] * x[0]).exp());
    let prob = WaveProblem::new(1).with_damping(constant(sigma)).with_initial(f, constant(0.0));
    let n = (2.0 / delta).round() as usize + 1;
    let sp = build_space_triplet(4, n, delta).unwrap();
    let tm = build_time_ops(4, n, delta, Flavor::Minus, Flavor::Minus).unwrap();
    InverseProblem::new(&prob, &[sp], &tm, &PenaltyConfig::default(), 1, weighting).unwrap()
}

#[test]
fn true_guess_converges_immediately() {
    let inv = gaussian_problem(0.0, 0.1, ObjectiveWeighting::Printed);
    let truth = inv.true_f.clone().unwrap();
    let st = optimize(&inv, &truth, &BfgsOptions::default()).unwrap();
    assert_eq!(st.iterations, 0);
    assert_eq!(st.outcome, Outcome::GradientTolerance);
    assert!(st.misfit_history[0] < 1e-20);
}

#[test]
fn matching_field_has_zero_misfit_and_gradient() {
    let inv = gaussian_problem(1.0, 0.1, ObjectiveWeighting::Printed);
    let truth = inv.true_f.clone().unwrap();
    let field = inv.solve_forward(&truth).unwrap();
    let tm = &inv.forward.time;
    assert_eq!(objective(&field, &inv.observations, tm).unwrap(), 0.0);
    let g = objective_gradient_wrt_state(&field, &inv.observations, tm, &inv.forward.space).unwrap();
    assert!(g.iter().flatten().all(|v| *v == 0.0));
    let lambda = vec![0.0; inv.forward.unknowns()];
    assert!(gradient_wrt_initial(&lambda, &inv.forward).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn unit_boundary_mismatch_costs_the_time_span() {
    let inv = gaussian_problem(0.0, 0.1, ObjectiveWeighting::Symmetric);
    let mut field = inv.solve_forward(&inv.true_f.clone().unwrap()).unwrap();
    let ns = field.spatial_points;
    for k in 0..field.m {
        for p in [0, ns - 1] {
            field.blocks[0][k * ns + p] += 1.0;
        }
    }
    let j = objective(&field, &inv.observations, &inv.forward.time).unwrap();
    assert!((j - 2.0).abs() < 1e-12, "{j}");
}

#[test]
fn observations_round_trip_through_csv() {
    let inv = gaussian_problem(0.0, 0.1, ObjectiveWeighting::Printed);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("obs.csv");
    inv.observations.write_csv(&path).unwrap();
    let back = inv.observations.read_csv(&path, 1).unwrap();
    assert_eq!(back, inv.observations);

    let text = std::fs::read_to_string(&path).unwrap().replacen("\n0.0", "\nzero", 1);
    std::fs::write(&path, text).unwrap();
    let err = inv.observations.read_csv(&path, 1).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
}
