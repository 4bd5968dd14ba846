use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig, FlavorPair, Initial};
use crate::diagnostics::{convergence_rate, energy_trace, exact_solution, l2_error};
use crate::error::{Error, Result};
use crate::forward::{assemble_forward, constant, march_multiblock, SpaceDiscretization, SpaceFn, WaveProblem};
use crate::inverse::{optimize, BfgsOptions, InverseProblem, Outcome};
use crate::operators::{
    build_space_triplet, build_time_ops, verify_space, verify_time, AssumptionReport, Flavor, SbpTriplet, TimeOps,
};

/// Grid sizes used by operator certification.
pub const CERTIFY_SIZES: [usize; 3] = [21, 41, 81];

/// Files written by a run and the headline numbers.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    /// `(flavor label, fitted rate)` of a convergence study.
    pub rates: Vec<(String, f64)>,
    pub certification_passed: Option<bool>,
    pub final_error: Option<f64>,
}

/// Floats go to CSV with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    match cfg.experiment {
        Experiment::Convergence1d | Experiment::Convergence2d => run_convergence(cfg, out),
        Experiment::Forward1d | Experiment::Forward2d => run_forward(cfg, out),
        Experiment::Inverse1d | Experiment::Inverse2d => run_inverse(cfg, out),
        Experiment::CertifyOps => {
            let (reports, path) = certify(cfg.order, out)?;
            let passed = reports.iter().all(|r| r.all_passed());
            Ok(RunSummary { files: vec![path], certification_passed: Some(passed), ..Default::default() })
        }
    }
}

/// Builds the continuous problem a configuration describes.
pub fn build_problem(cfg: &ExperimentConfig) -> WaveProblem {
    let dim = cfg.experiment.dim();
    let f: SpaceFn = match cfg.initial_condition() {
        Initial::Cosine => Arc::new(|x: &[f64]| x.iter().map(|xi| (std::f64::consts::PI * xi).cos()).product()),
        Initial::Gaussian { width } => Arc::new(move |x: &[f64]| (-width * x.iter().map(|v| v * v).sum::<f64>()).exp()),
        Initial::Zero => constant(0.0),
    };
    let mut prob = WaveProblem::new(dim)
        .with_final_time(cfg.final_time)
        .with_wave_speed(constant(cfg.c))
        .with_damping(constant(cfg.sigma))
        .with_initial(f, constant(0.0));
    if let Some(faces) = &cfg.faces {
        for (a, fc) in faces.iter().enumerate() {
            let (l, r) = fc.faces();
            prob = prob.with_faces(a, l, r);
        }
    }
    prob
}

/// Space and time operators for spacing `delta` with `n_blocks` blocks.
pub fn grid_operators(
    prob: &WaveProblem,
    order: usize,
    delta: f64,
    n_blocks: usize,
    flavors: FlavorPair,
) -> Result<(Vec<SbpTriplet>, TimeOps)> {
    let sp = prob
        .axes
        .iter()
        .map(|ax| build_space_triplet(order, (ax.length() / delta).round() as usize + 1, delta))
        .collect::<Result<Vec<_>>>()?;
    let m = (prob.final_time / delta).round() as usize / n_blocks + 1;
    let tm = build_time_ops(order, m, delta, flavors.0, flavors.1)?;
    Ok((sp, tm))
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(())
}

fn run_convergence(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    if cfg.initial_condition() != Initial::Cosine || cfg.faces.is_some() {
        return Err(Error::InvalidConfig(vec![
            "convergence studies need the cosine initial state on Neumann faces".into()
        ]));
    }
    let prob = build_problem(cfg);
    let ex = exact_solution(prob.dim(), cfg.c, cfg.sigma);
    let pairs = cfg.flavor_pairs();
    let jobs: Vec<(usize, usize)> = (0..pairs.len()).flat_map(|p| (0..cfg.grids.len()).map(move |g| (p, g))).collect();
    let pen = cfg.penalty_config();
    let errors = jobs
        .par_iter()
        .map(|&(p, g)| {
            let delta = cfg.grids[g];
            let nb = cfg.blocks.for_grid(g);
            let (sp, tm) = grid_operators(&prob, cfg.order, delta, nb, pairs[p])?;
            let u = march_multiblock(&prob, &sp, &tm, &pen, nb)?;
            let space = SpaceDiscretization::new(&prob, &sp)?;
            log::info!("{} delta {delta}: done", pairs[p].label());
            l2_error(&u, &ex, &space)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut summary = RunSummary::default();
    let mut e_csv = String::from("flavor,delta,blocks,error\n");
    let mut r_csv = String::from("flavor,rate\n");
    for (p, pair) in pairs.iter().enumerate() {
        let mut pts = Vec::new();
        for (g, &delta) in cfg.grids.iter().enumerate() {
            let e = errors[p * cfg.grids.len() + g];
            let _ = writeln!(e_csv, "{},{},{},{}", pair.label(), fmt17(delta), cfg.blocks.for_grid(g), fmt17(e));
            pts.push((delta, e));
        }
        let rate = convergence_rate(&pts)?;
        let _ = writeln!(r_csv, "{},{}", pair.label(), fmt17(rate));
        summary.rates.push((pair.label(), rate));
    }
    write(out.join("errors.csv"), &e_csv, &mut summary.files)?;
    write(out.join("rates.csv"), &r_csv, &mut summary.files)?;
    Ok(summary)
}

fn coordinate_header(dim: usize) -> &'static str {
    if dim == 2 {
        "x,y"
    } else {
        "x"
    }
}

fn nodal_csv(space: &SpaceDiscretization, values: &[f64], column: &str) -> String {
    let mut s = format!("{},{column}\n", coordinate_header(space.dim()));
    for (p, v) in values.iter().enumerate() {
        let coords: Vec<String> = space.point(p).into_iter().map(fmt17).collect();
        let _ = writeln!(s, "{},{}", coords.join(","), fmt17(*v));
    }
    s
}

fn run_forward(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    let prob = build_problem(cfg);
    let pen = cfg.penalty_config();
    let nb = cfg.blocks.for_grid(0);
    let (sp, tm) = grid_operators(&prob, cfg.order, cfg.grids[0], nb, cfg.flavor_pairs()[0])?;
    let sys = assemble_forward(&prob, &sp, &tm, &pen)?.with_solver(cfg.solver);
    let f = sys.space.sample(&prob.initial_displacement);
    let g = sys.space.sample(&prob.initial_velocity);
    let span = prob.final_time / nb as f64;
    let sources: Vec<Vec<f64>> =
        (0..nb).map(|b| crate::forward::sample_source(&prob, &sys.space, &tm, b as f64 * span)).collect();
    let u = sys.march(&f, &g, &sources, 0.0)?;

    let mut summary = RunSummary::default();
    let trace = energy_trace(&u, &sys.space, &tm, &pen)?;
    let mut e_csv = String::from("k,t,energy,boundary_term,damping\n");
    for k in 0..trace.e_k.len() {
        let t = if k == 0 { 0.0 } else { u.time((k - 1) / tm.m, (k - 1) % tm.m) };
        let _ = writeln!(
            e_csv,
            "{k},{},{},{},{}",
            fmt17(t),
            fmt17(trace.e_k[k]),
            fmt17(trace.bt_k[k]),
            fmt17(trace.damping_k[k])
        );
    }
    write(out.join("energy.csv"), &e_csv, &mut summary.files)?;

    // Global time index skips the repeated interface node of later blocks.
    let total = nb * (tm.m - 1) + 1;
    let count = cfg.snapshots.min(total);
    let mut picked: Vec<usize> = match count {
        0 => Vec::new(),
        1 => vec![total - 1],
        c => (0..c).map(|s| (s * (total - 1) + (c - 1) / 2) / (c - 1)).collect(),
    };
    picked.dedup();
    for k in picked {
        let (b, local) = if k == 0 { (0, 0) } else { ((k - 1) / (tm.m - 1), (k - 1) % (tm.m - 1) + 1) };
        write(
            out.join(format!("snapshot_t{k}.csv")),
            &nodal_csv(&sys.space, u.slice(b, local), "u"),
            &mut summary.files,
        )?;
    }
    if cfg.initial_condition() == Initial::Cosine && cfg.faces.is_none() {
        summary.final_error = Some(l2_error(&u, &exact_solution(prob.dim(), cfg.c, cfg.sigma), &sys.space)?);
    }
    Ok(summary)
}

fn run_inverse(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    let prob = build_problem(cfg);
    let nb = cfg.blocks.for_grid(0);
    let pair = cfg.flavor_pairs()[0];
    if pair.0 != pair.1 {
        log::warn!("inversion with mixed time flavors: adjoint stability is unproven");
    }
    let (sp, tm) = grid_operators(&prob, cfg.order, cfg.grids[0], nb, pair)?;
    let inv = InverseProblem::new(&prob, &sp, &tm, &cfg.penalty_config(), nb, cfg.weighting)?;
    let mut summary = RunSummary::default();
    let obs_path = out.join("observations.csv");
    inv.observations.write_csv(&obs_path)?;
    summary.files.push(obs_path);

    let guess = vec![1.0; inv.spatial_points()];
    let opts = BfgsOptions { max_iter: cfg.max_iter, ..Default::default() };
    let state = optimize(&inv, &guess, &opts)?;

    let mut m_csv = String::from("iteration,misfit,error,gradient_norm\n");
    for i in 0..state.misfit_history.len() {
        let _ = writeln!(
            m_csv,
            "{i},{},{},{}",
            fmt17(state.misfit_history[i]),
            fmt17(state.error_history[i]),
            fmt17(state.gradient_norm_history[i])
        );
        let space = &inv.forward.space;
        write(
            out.join(format!("iterate_{i}.csv")),
            &nodal_csv(space, &state.f_history[i], "f_value"),
            &mut summary.files,
        )?;
    }
    write(out.join("misfit.csv"), &m_csv, &mut summary.files)?;
    summary.final_error = state.error_history.last().copied();
    if let Outcome::LineSearchFailure { .. } = state.outcome {
        state.into_result()?;
    }
    Ok(summary)
}

/// Certifies space and time operators of one order on every size in
/// [`CERTIFY_SIZES`] and writes `certify.csv`.
pub fn certify(order: usize, out: &Path) -> Result<(Vec<AssumptionReport>, PathBuf)> {
    let reports = certify_reports(order)?;
    let mut s = String::from("order,kind,n,check,residual,tolerance,passed\n");
    for (i, r) in reports.iter().enumerate() {
        let kind = if i % 2 == 0 { "space" } else { "time" };
        for (name, c) in report_rows(r) {
            let _ =
                writeln!(s, "{order},{kind},{},{name},{},{},{}", r.n, fmt17(c.residual), fmt17(c.tolerance), c.passed);
        }
    }
    let path = out.join("certify.csv");
    std::fs::write(&path, s).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok((reports, path))
}

/// Space and time reports, alternating, for each size in [`CERTIFY_SIZES`].
pub fn certify_reports(order: usize) -> Result<Vec<AssumptionReport>> {
    let mut reports = Vec::new();
    for n in CERTIFY_SIZES {
        let step = 2.0 / (n - 1) as f64;
        reports.push(verify_space(&build_space_triplet(order, n, step)?));
        let tm = build_time_ops(order, n, step, Flavor::Minus, Flavor::Center)?;
        reports.push(verify_time(&tm));
    }
    Ok(reports)
}

fn report_rows(r: &AssumptionReport) -> Vec<(String, crate::operators::Check)> {
    let mut rows = vec![
        ("positive_norm".to_string(), r.positive_norm),
        ("interior_accuracy".to_string(), r.interior_accuracy),
        ("sbp_identity".to_string(), r.sbp_identity),
        ("dissipation".to_string(), r.dissipation),
    ];
    for (f, c) in &r.time_positivity {
        rows.push((format!("time_positivity_{}", f.label()), *c));
    }
    if let Some(c) = r.center_neutrality {
        rows.push(("center_neutrality".to_string(), c));
    }
    rows
}
