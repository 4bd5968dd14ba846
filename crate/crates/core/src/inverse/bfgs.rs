//! Dense BFGS with a strong-Wolfe line search, run in `η = Hₓ^{1/2} f`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::InverseProblem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BfgsOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub c1: f64,
    pub c2: f64,
    /// Function evaluations allowed per line search.
    pub max_evaluations: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions { max_iter: 10, grad_tol: 1e-10, c1: 1e-4, c2: 0.9, max_evaluations: 30 }
    }
}

/// Why the loop stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    MaxIterations,
    GradientTolerance,
    LineSearchFailure { reason: String },
}

/// Iterate and per-iteration history. Index 0 of every history is the
/// initial guess.
#[derive(Debug, Clone)]
pub struct InverseState {
    pub f_iter: Vec<f64>,
    pub eta: Vec<f64>,
    pub misfit_history: Vec<f64>,
    /// `Hₓ`-norm error against the true displacement, `NaN` when unknown.
    pub error_history: Vec<f64>,
    pub gradient_norm_history: Vec<f64>,
    pub f_history: Vec<Vec<f64>>,
    pub iterations: usize,
    pub outcome: Outcome,
}

impl InverseState {
    /// Converts a line-search failure into an error, keeping the history otherwise.
    pub fn into_result(self) -> Result<InverseState> {
        match &self.outcome {
            Outcome::LineSearchFailure { reason } => {
                Err(Error::LineSearchFailure { iterations: self.iterations, reason: reason.clone() })
            }
            _ => Ok(self),
        }
    }

    fn push(&mut self, problem: &InverseProblem, misfit: f64, grad: &[f64]) {
        self.misfit_history.push(misfit);
        self.error_history.push(problem.error(&self.f_iter).unwrap_or(f64::NAN));
        self.gradient_norm_history.push(norm(grad));
        self.f_history.push(self.f_iter.clone());
    }
}

struct Trial {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

/// Minimizes the misfit starting from `init_guess` (a displacement, not `η`).
pub fn optimize(problem: &InverseProblem, init_guess: &[f64], opts: &BfgsOptions) -> Result<InverseState> {
    if init_guess.len() != problem.spatial_points() {
        return Err(Error::DimensionMismatch { expected: problem.spatial_points(), got: init_guess.len() });
    }
    let n = init_guess.len();
    let mut x = problem.to_eta(init_guess);
    let (mut fx, mut gx) = problem.evaluate(&x)?;
    let mut state = InverseState {
        f_iter: init_guess.to_vec(),
        eta: x.clone(),
        misfit_history: Vec::new(),
        error_history: Vec::new(),
        gradient_norm_history: Vec::new(),
        f_history: Vec::new(),
        iterations: 0,
        outcome: Outcome::MaxIterations,
    };
    state.push(problem, fx, &gx);

    let mut hinv = DMatrix::<f64>::identity(n, n);
    for it in 0..opts.max_iter {
        let gnorm = norm(&gx);
        if gnorm < opts.grad_tol {
            state.outcome = Outcome::GradientTolerance;
            return Ok(state);
        }
        let gv = DVector::from_column_slice(&gx);
        let mut p: Vec<f64> = (-(&hinv * &gv)).as_slice().to_vec();
        if dot(&p, &gx) >= 0.0 {
            log::debug!("BFGS direction lost descent; resetting the inverse Hessian");
            hinv.fill_with_identity();
            p = gx.iter().map(|g| -g).collect();
        }
        let alpha0 = if it == 0 { (1.0 / gnorm).min(1.0) } else { 1.0 };
        let trial = match line_search(problem, &x, fx, &gx, &p, alpha0, opts) {
            Ok(t) => t,
            Err(reason) => {
                log::warn!("line search failed at iteration {}: {reason}", it + 1);
                state.outcome = Outcome::LineSearchFailure { reason };
                return Ok(state);
            }
        };
        let s: Vec<f64> = p.iter().map(|pi| trial.alpha * pi).collect();
        let y: Vec<f64> = trial.g.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * norm(&s) * norm(&y) {
            if it == 0 {
                hinv = DMatrix::identity(n, n) * (sy / dot(&y, &y));
            }
            let rho = 1.0 / sy;
            let sv = DVector::from_vec(s.clone());
            let yv = DVector::from_vec(y);
            let hy = &hinv * &yv;
            let yhy = yv.dot(&hy);
            // H⁺ = H - ρ(s yᵀH + H y sᵀ) + (ρ² yᵀHy + ρ) s sᵀ
            hinv -= (&sv * hy.transpose() + &hy * sv.transpose()) * rho;
            hinv += (&sv * sv.transpose()) * (rho * rho * yhy + rho);
        } else {
            log::debug!("skipping BFGS update with curvature {sy:e}");
        }
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        fx = trial.f;
        gx = trial.g;
        state.eta = x.clone();
        state.f_iter = problem.to_f(&x);
        state.iterations = it + 1;
        state.push(problem, fx, &gx);
        log::info!("iteration {}: misfit {fx:.6e}, |grad| {:.3e}", it + 1, norm(&gx));
    }
    if norm(&gx) < opts.grad_tol {
        state.outcome = Outcome::GradientTolerance;
    }
    Ok(state)
}

/// Strong-Wolfe bracketing and zoom along `p`.
fn line_search(
    problem: &InverseProblem,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    p: &[f64],
    alpha0: f64,
    opts: &BfgsOptions,
) -> std::result::Result<Trial, String> {
    let slope0 = dot(g0, p);
    let mut evals = 0;
    let mut eval = |alpha: f64| -> std::result::Result<Trial, String> {
        evals += 1;
        if evals > opts.max_evaluations {
            return Err(format!("no acceptable step after {} evaluations", opts.max_evaluations));
        }
        let xt: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi + alpha * pi).collect();
        let (f, g) = problem.evaluate(&xt).map_err(|e| e.to_string())?;
        let slope = dot(&g, p);
        Ok(Trial { alpha, f, g, slope })
    };
    let armijo = |t: &Trial| t.f <= f0 + opts.c1 * t.alpha * slope0;
    let curvature = |t: &Trial| t.slope.abs() <= -opts.c2 * slope0;

    let mut prev = Trial { alpha: 0.0, f: f0, g: g0.to_vec(), slope: slope0 };
    let mut alpha = alpha0;
    let mut first = true;
    loop {
        let cur = eval(alpha)?;
        if !cur.f.is_finite() {
            alpha = 0.5 * (prev.alpha + alpha);
            continue;
        }
        if !armijo(&cur) || (!first && cur.f >= prev.f) {
            return zoom(prev, cur, &mut eval, &armijo, &curvature);
        }
        if curvature(&cur) {
            return Ok(cur);
        }
        if cur.slope >= 0.0 {
            return zoom(cur, prev, &mut eval, &armijo, &curvature);
        }
        alpha = 2.0 * cur.alpha;
        prev = cur;
        first = false;
    }
}

fn zoom<E, A, C>(
    mut lo: Trial,
    mut hi: Trial,
    eval: &mut E,
    armijo: &A,
    curvature: &C,
) -> std::result::Result<Trial, String>
where
    E: FnMut(f64) -> std::result::Result<Trial, String>,
    A: Fn(&Trial) -> bool,
    C: Fn(&Trial) -> bool,
{
    loop {
        let alpha = interpolate(&lo, &hi);
        let cur = eval(alpha)?;
        if !armijo(&cur) || cur.f >= lo.f {
            hi = cur;
        } else {
            if curvature(&cur) {
                return Ok(cur);
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = std::mem::replace(&mut lo, cur);
            } else {
                lo = cur;
            }
        }
        if (hi.alpha - lo.alpha).abs() < 1e-14 * lo.alpha.abs().max(1e-300) {
            return Err("bracket collapsed".into());
        }
    }
}

/// Cubic minimizer of the bracket, kept inside its middle 80 %; bisection otherwise.
fn interpolate(lo: &Trial, hi: &Trial) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    let mid = 0.5 * (a + b);
    if !(disc >= 0.0) {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
    let (left, right) = (a.min(b), a.max(b));
    let w = right - left;
    if t.is_finite() && t > left + 0.1 * w && t < right - 0.1 * w {
        t
    } else {
        mid
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
