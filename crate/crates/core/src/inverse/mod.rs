//! Recovery of the initial displacement from boundary traces: discrete
//! misfit, adjoint-state gradient and a BFGS loop in the variable
//! `η = Hₓ^{1/2} f`, where Euclidean steps in `η` are `Hₓ`-metric steps in `f`.

mod bfgs;
mod objective;

pub use bfgs::{optimize, BfgsOptions, InverseState, Outcome};
pub use objective::{gradient_wrt_initial, objective, objective_gradient_wrt_state, ObjectiveWeighting, Observations};

use crate::adjoint::{reverse_time, solve_adjoint_multiblock, AdjointSystem};
use crate::error::{Error, Result};
use crate::forward::{assemble_forward, sample_source, DiscreteSystem, PenaltyConfig, SolutionField, WaveProblem};
use crate::linalg::weighted_norm;
use crate::operators::{SbpTriplet, TimeOps};

/// Misfit and gradient at one initial displacement.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub misfit: f64,
    /// `Hₓ`-inner-product gradient `∇_f J̃`.
    pub gradient: Vec<f64>,
    pub field: SolutionField,
}

/// Forward and adjoint machinery plus observations for one inversion.
#[derive(Debug)]
pub struct InverseProblem {
    pub forward: DiscreteSystem,
    pub adjoint: AdjointSystem,
    pub n_blocks: usize,
    pub observations: Observations,
    /// Displacement that generated the observations, when known.
    pub true_f: Option<Vec<f64>>,
    initial_velocity: Vec<f64>,
    sources: Vec<Vec<f64>>,
    sqrt_h: Vec<f64>,
}

impl InverseProblem {
    /// Builds the systems and synthesizes observations from the problem's own
    /// initial displacement on the same grid.
    pub fn new(
        prob: &WaveProblem,
        sp: &[SbpTriplet],
        tm: &TimeOps,
        pen: &PenaltyConfig,
        n_blocks: usize,
        weighting: ObjectiveWeighting,
    ) -> Result<Self> {
        if n_blocks == 0 {
            return Err(Error::InvalidProblem("at least one time block is required".into()));
        }
        let span = tm.step * (tm.m - 1) as f64 * n_blocks as f64;
        if (span - prob.final_time).abs() > 1e-10 * prob.final_time.max(1.0) {
            return Err(Error::InvalidProblem(format!(
                "{n_blocks} blocks of {} points with step {} cover {span}, not the final time {}",
                tm.m, tm.step, prob.final_time
            )));
        }
        let forward = assemble_forward(prob, sp, tm, pen)?;
        let adjoint = AdjointSystem::from_forward(&forward)?;
        let space = forward.space.clone();
        let block_span = prob.final_time / n_blocks as f64;
        let sources = (0..n_blocks).map(|b| sample_source(prob, &space, tm, b as f64 * block_span)).collect();
        let initial_velocity = space.sample(&prob.initial_velocity);
        let true_f = space.sample(&prob.initial_displacement);
        let sqrt_h = space.h.iter().map(|h| h.sqrt()).collect();
        let layout = Observations::boundary(&space, tm, weighting)?;
        let mut out = InverseProblem {
            forward,
            adjoint,
            n_blocks,
            observations: layout,
            true_f: None,
            initial_velocity,
            sources,
            sqrt_h,
        };
        let field = out.solve_forward(&true_f)?;
        out.observations = out.observations.record(&field)?;
        out.true_f = Some(true_f);
        Ok(out)
    }

    /// Replaces the synthetic observations, e.g. with traces read from disk.
    pub fn with_observations(mut self, obs: Observations) -> Result<Self> {
        let o = &self.observations;
        if obs.nodes != o.nodes || obs.m != o.m || obs.traces.len() != self.n_blocks {
            return Err(Error::InvalidProblem("observations do not match the inversion grid".into()));
        }
        self.observations = obs;
        Ok(self)
    }

    pub fn spatial_points(&self) -> usize {
        self.forward.spatial_points()
    }

    pub fn solve_forward(&self, f: &[f64]) -> Result<SolutionField> {
        self.forward.march(f, &self.initial_velocity, &self.sources, 0.0)
    }

    pub fn misfit(&self, f: &[f64]) -> Result<f64> {
        objective(&self.solve_forward(f)?, &self.observations, &self.forward.time)
    }

    /// One forward solve, one adjoint solve, and the resulting gradient.
    pub fn evaluate_f(&self, f: &[f64]) -> Result<Evaluation> {
        let field = self.solve_forward(f)?;
        let tm = &self.forward.time;
        let misfit = objective(&field, &self.observations, tm)?;
        let grads = objective_gradient_wrt_state(&field, &self.observations, tm, &self.forward.space)?;
        let lambda_bar = solve_adjoint_multiblock(&self.adjoint, &grads)?;
        let lambda = reverse_time(&lambda_bar[0], tm.m, self.spatial_points());
        let gradient = gradient_wrt_initial(&lambda, &self.forward)?;
        Ok(Evaluation { misfit, gradient, field })
    }

    /// Misfit and its Euclidean gradient `Hₓ^{1/2} ∇_f J̃` in `η`.
    pub fn evaluate(&self, eta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let ev = self.evaluate_f(&self.to_f(eta))?;
        let g = ev.gradient.iter().zip(&self.sqrt_h).map(|(g, s)| g * s).collect();
        Ok((ev.misfit, g))
    }

    pub fn to_eta(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.sqrt_h).map(|(v, s)| v * s).collect()
    }

    pub fn to_f(&self, eta: &[f64]) -> Vec<f64> {
        eta.iter().zip(&self.sqrt_h).map(|(v, s)| v / s).collect()
    }

    /// `‖f - f_true‖_{Hₓ}`, if the truth is known.
    pub fn error(&self, f: &[f64]) -> Option<f64> {
        let t = self.true_f.as_ref()?;
        let d: Vec<f64> = f.iter().zip(t).map(|(a, b)| a - b).collect();
        weighted_norm(&self.forward.space.h, &d).ok()
    }
}
