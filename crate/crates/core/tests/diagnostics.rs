use std::f64::consts::PI;

use dpsbp_wave::diagnostics::{auxiliary_field, convergence_rate, energy_trace, exact_solution, l2_error};
use dpsbp_wave::forward::{assemble_forward, march_multiblock, PenaltyConfig, WaveProblem};
use dpsbp_wave::operators::{build_space_triplet, build_time_ops, Flavor};
use dpsbp_wave::Error;

#[test]
fn phi_starts_at_one() {
    for (c, sigma) in [(1.0, 0.0), (1.0, 1.0), (0.1, 3.0), (2.0, 0.5)] {
        for dim in [1, 2] {
            assert!((exact_solution(dim, c, sigma).phi(0.0) - 1.0).abs() < 1e-15);
        }
    }
}

#[test]
fn undamped_solution_is_a_standing_wave() {
    let ex = exact_solution(1, 1.0, 0.0);
    for &(x, t) in &[(0.3, 0.4), (-0.7, 1.9), (1.0, 2.0)] {
        let want = (PI * x).cos() * (PI * t).cos();
        assert!((ex.eval(&[x], t) - want).abs() < 1e-14);
    }
}

#[test]
fn critical_branch_is_linear() {
    let sigma = 2.0_f64;
    let c = sigma * sigma / (2.0 * PI);
    let ex = exact_solution(1, c, sigma);
    assert!(ex.omega.abs() < 1e-12);
    for t in [0.5, 1.0, 2.0] {
        assert!((ex.phi(t) - (1.0 + 0.5 * sigma * sigma * t)).abs() < 1e-12);
    }
}

#[test]
fn overdamped_branch_stays_finite() {
    let ex = exact_solution(2, 0.1, 3.0);
    assert!(ex.omega < 0.0);
    assert!(ex.eval(&[0.1, 0.2], 2.0).is_finite());
}

#[test]
fn rate_fits() {
    let quad: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|d| (*d, 3.0 * d * d)).collect();
    assert!((convergence_rate(&quad).unwrap() - 2.0).abs() < 1e-12);
    let flat: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|d| (*d, 0.4)).collect();
    assert!(convergence_rate(&flat).unwrap().abs() < 1e-12);
    assert!(matches!(convergence_rate(&[(0.1, 1.0)]), Err(Error::DegenerateInput(_))));
    assert!(matches!(convergence_rate(&[(0.1, 1.0), (0.1, 0.5)]), Err(Error::DegenerateInput(_))));
    assert!(matches!(convergence_rate(&[(0.1, 0.0), (0.05, 0.5)]), Err(Error::DegenerateInput(_))));
}

#[test]
fn auxiliary_field_of_constant_state_vanishes() {
    let tm = build_time_ops(4, 21, 0.1, Flavor::Minus, Flavor::Minus).unwrap();
    let f = vec![0.5, -1.0, 2.0];
    let u: Vec<f64> = (0..21).flat_map(|_| f.clone()).collect();
    let v = auxiliary_field(&u, &f, &tm, -1.0).unwrap();
    assert!(v.iter().all(|x| x.abs() < 1e-11));
}

#[test]
fn auxiliary_field_recovers_velocity() {
    let m = 21;
    let step = 0.05;
    let g = [1.0, -0.5];
    for flavor in Flavor::ALL {
        let tm = build_time_ops(4, m, step, flavor, flavor).unwrap();
        let u: Vec<f64> = (0..m).flat_map(|k| g.iter().map(move |gi| k as f64 * step * gi)).collect();
        let v = auxiliary_field(&u, &[0.0, 0.0], &tm, -1.0).unwrap();
        for k in 1..m - 1 {
            for i in 0..2 {
                assert!((v[k * 2 + i] - g[i]).abs() < 1e-10, "{flavor:?} k {k}");
            }
        }
    }
}

#[test]
fn zero_solution_has_zero_energy() {
    let prob = WaveProblem::new(1);
    let sp = build_space_triplet(4, 21, 0.1).unwrap();
    let tm = build_time_ops(4, 21, 0.1, Flavor::Minus, Flavor::Minus).unwrap();
    let pen = PenaltyConfig::default();
    let u = march_multiblock(&prob, std::slice::from_ref(&sp), &tm, &pen, 1).unwrap();
    let sys = assemble_forward(&prob, &[sp], &tm, &pen).unwrap();
    let tr = energy_trace(&u, &sys.space, &tm, &pen).unwrap();
    assert!(tr.e_k.iter().chain(&tr.bt_k).chain(&tr.damping_k).all(|v| v.abs() < 1e-20));
}

#[test]
fn exact_field_has_zero_error() {
    let prob = WaveProblem::new(2);
    let sp = build_space_triplet(2, 9, 0.25).unwrap();
    let tm = build_time_ops(2, 9, 0.25, Flavor::Minus, Flavor::Minus).unwrap();
    let pen = PenaltyConfig::default();
    let mut u = march_multiblock(&prob, &[sp.clone(), sp.clone()], &tm, &pen, 1).unwrap();
    let sys = assemble_forward(&prob, &[sp.clone(), sp], &tm, &pen).unwrap();
    let ex = exact_solution(2, 1.0, 0.0);
    let ns = u.spatial_points;
    let t = u.final_time();
    let last = u.blocks.len() - 1;
    for p in 0..ns {
        u.blocks[last][(u.m - 1) * ns + p] = ex.eval(&sys.space.point(p), t);
    }
    assert!(l2_error(&u, &ex, &sys.space).unwrap() < 1e-15);
}
