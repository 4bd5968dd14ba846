use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use super::problem::{PenaltyConfig, WaveProblem};
use super::space::SpaceDiscretization;
use super::tensor::TensorPreconditioner;
use crate::error::{Error, Result};
use crate::linalg::{kron, GmresOptions, LinearSolver, SolveReport, SparseMatrix, DEFAULT_TOLERANCE, DIRECT_LIMIT};
use crate::operators::{Flavor, SbpTriplet, TimeOps};

/// How the block systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    /// Preconditioned GMRES for separable or very large blocks, sparse LU otherwise.
    #[default]
    Automatic,
    Direct,
    Iterative,
}

/// Space-time operator of one time block, `A = T₁ ⊗ I + T₂ ⊗ (σ² + B) - Iₜ ⊗ L`.
///
/// With `P = Hₜ⁻¹ e₁ e₁ᵀ` the time factors are
/// `T₁ = DᵢDⱼ - μ2 DᵢP - μ3 PDⱼ - μ4 P²` and `T₂ = Dⱼ - μ1 P`, which for
/// `μ = -1` collapse to `D̃ᵢD̃ⱼ` and `D̃ⱼ`.
pub struct DiscreteSystem {
    pub matrix: SparseMatrix,
    pub space: Arc<SpaceDiscretization>,
    pub time: TimeOps,
    pub penalty: PenaltyConfig,
    pub(crate) t1: DMatrix<f64>,
    pub(crate) t2: DMatrix<f64>,
    pub(crate) d_i: DMatrix<f64>,
    pub(crate) d_j: DMatrix<f64>,
    pub(crate) sigma_b: Vec<f64>,
    pub solver_choice: SolverChoice,
    solver: OnceLock<std::result::Result<LinearSolver, Error>>,
}

impl std::fmt::Debug for DiscreteSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteSystem")
            .field("m", &self.time.m)
            .field("shape", &self.space.shape())
            .field("flavors", &(self.time.flavor_i, self.time.flavor_j))
            .finish_non_exhaustive()
    }
}

/// Assembles the forward space-time system of one block.
pub fn assemble_forward(
    prob: &WaveProblem,
    sp: &[SbpTriplet],
    tm: &TimeOps,
    pen: &PenaltyConfig,
) -> Result<DiscreteSystem> {
    let space = Arc::new(SpaceDiscretization::new(prob, sp)?);
    DiscreteSystem::new(space, tm.clone(), *pen)
}

impl DiscreteSystem {
    pub fn new(space: Arc<SpaceDiscretization>, time: TimeOps, penalty: PenaltyConfig) -> Result<Self> {
        penalty.validate()?;
        let m = time.m;
        let p = time.initial_penalty();
        let d_i = time.derivative(time.flavor_i);
        let d_j = time.derivative(time.flavor_j);
        let t1 = &d_i * &d_j - (&d_i * &p) * penalty.mu2 - (&p * &d_j) * penalty.mu3 - (&p * &p) * penalty.mu4;
        let t2 = &d_j - &p * penalty.mu1;
        let sigma_b = space.damping_diagonal();
        let ns = space.points();

        let a = kron(&SparseMatrix::from_dense(&t1), &SparseMatrix::identity(ns))?;
        let b = kron(&SparseMatrix::from_dense(&t2), &SparseMatrix::diagonal(&sigma_b))?;
        let c = kron(&SparseMatrix::identity(m), &space.laplacian)?;
        let matrix = a.add_scaled(&b, 1.0)?.add_scaled(&c, -1.0)?;

        Ok(DiscreteSystem {
            matrix,
            space,
            time,
            penalty,
            t1,
            t2,
            d_i,
            d_j,
            sigma_b,
            solver_choice: SolverChoice::Automatic,
            solver: OnceLock::new(),
        })
    }

    pub fn with_solver(mut self, choice: SolverChoice) -> Self {
        self.solver_choice = choice;
        self.solver = OnceLock::new();
        self
    }

    pub fn m(&self) -> usize {
        self.time.m
    }

    pub fn spatial_points(&self) -> usize {
        self.space.points()
    }

    pub fn unknowns(&self) -> usize {
        self.matrix.rows()
    }

    pub fn flavors(&self) -> (Flavor, Flavor) {
        (self.time.flavor_i, self.time.flavor_j)
    }

    /// Right-hand side `S̄ - μ1(P⊗Σ)F - μ2(DᵢP⊗I)F - μ3(P⊗I)G - μ4(P²⊗I)F`
    /// for initial (or interface) data `f`, `g`.
    pub fn rhs(&self, f: &[f64], g: &[f64], source: &[f64]) -> Result<Vec<f64>> {
        let ns = self.spatial_points();
        for v in [f, g] {
            if v.len() != ns {
                return Err(Error::DimensionMismatch { expected: ns, got: v.len() });
            }
        }
        if source.len() != self.unknowns() {
            return Err(Error::DimensionMismatch { expected: self.unknowns(), got: source.len() });
        }
        let pen = &self.penalty;
        let h0 = self.time.h[0];
        let mut out = source.to_vec();
        for k in 0..self.m() {
            let w = pen.mu2 * self.d_i[(k, 0)] / h0;
            if w != 0.0 {
                for (o, fi) in out[k * ns..(k + 1) * ns].iter_mut().zip(f) {
                    *o -= w * fi;
                }
            }
        }
        for i in 0..ns {
            out[i] -= (pen.mu1 * self.sigma_b[i] * f[i] + pen.mu3 * g[i] + pen.mu4 * f[i] / h0) / h0;
        }
        Ok(out)
    }

    /// Initial data handed to the next block: the final trace and its time derivative `(Dⱼ U)_M`.
    pub fn transfer(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ns = self.spatial_points();
        let m = self.m();
        let f = u[(m - 1) * ns..].to_vec();
        let mut g = vec![0.0; ns];
        for k in 0..m {
            let w = self.d_j[(m - 1, k)];
            if w != 0.0 {
                for (gi, ui) in g.iter_mut().zip(&u[k * ns..(k + 1) * ns]) {
                    *gi += w * ui;
                }
            }
        }
        (f, g)
    }

    fn solver(&self) -> Result<&LinearSolver> {
        self.solver
            .get_or_init(|| {
                build_solver(&self.matrix, self.solver_choice, self.space.is_separable(), || self.preconditioner())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn preconditioner(&self) -> Result<Arc<TensorPreconditioner>> {
        Ok(Arc::new(TensorPreconditioner::new(&self.space, &self.t1, &self.t2, &self.sigma_b)?))
    }

    /// Solves `A x = rhs` with the cached factorization or preconditioner.
    pub fn solve(&self, rhs: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        self.solver()?.solve(rhs, DEFAULT_TOLERANCE)
    }

    /// Marches `n_blocks` consecutive blocks from initial data `f`, `g`.
    /// `sources[b]` is the sampled forcing of block `b`.
    pub fn march(&self, f: &[f64], g: &[f64], sources: &[Vec<f64>], t0: f64) -> Result<SolutionField> {
        let mut blocks = Vec::with_capacity(sources.len());
        let mut reports = Vec::with_capacity(sources.len());
        let (mut fb, mut gb) = (f.to_vec(), g.to_vec());
        for src in sources {
            let rhs = self.rhs(&fb, &gb, src)?;
            let (u, rep) = self.solve(&rhs)?;
            (fb, gb) = self.transfer(&u);
            blocks.push(u);
            reports.push(rep);
        }
        let block_span = self.time.step * (self.m() - 1) as f64;
        Ok(SolutionField {
            offsets: (0..blocks.len()).map(|b| t0 + b as f64 * block_span).collect(),
            blocks,
            m: self.m(),
            spatial_points: self.spatial_points(),
            step: self.time.step,
            initial_displacement: f.to_vec(),
            initial_velocity: g.to_vec(),
            reports,
        })
    }
}

/// Picks the solver. `Automatic` factors blocks up to [`DIRECT_LIMIT`]
/// unless the tensor preconditioner is an exact inverse (`separable`), in
/// which case GMRES converges in one or two iterations at a fraction of the cost.
pub(crate) fn build_solver<F>(
    matrix: &SparseMatrix,
    choice: SolverChoice,
    separable: bool,
    precond: F,
) -> Result<LinearSolver>
where
    F: FnOnce() -> Result<Arc<TensorPreconditioner>>,
{
    let direct = match choice {
        SolverChoice::Direct => true,
        SolverChoice::Iterative => false,
        SolverChoice::Automatic => !separable && matrix.rows() <= DIRECT_LIMIT,
    };
    if direct {
        LinearSolver::direct(matrix)
    } else {
        log::info!("using preconditioned GMRES for {} unknowns", matrix.rows());
        LinearSolver::iterative(matrix, precond()?, GmresOptions::default())
    }
}

/// Space-time solution of consecutive blocks.
#[derive(Debug, Clone)]
pub struct SolutionField {
    pub blocks: Vec<Vec<f64>>,
    /// Start time of each block.
    pub offsets: Vec<f64>,
    pub m: usize,
    pub spatial_points: usize,
    pub step: f64,
    pub initial_displacement: Vec<f64>,
    pub initial_velocity: Vec<f64>,
    pub reports: Vec<SolveReport>,
}

impl SolutionField {
    /// Spatial slice at local time index `k` of block `b`.
    pub fn slice(&self, b: usize, k: usize) -> &[f64] {
        let ns = self.spatial_points;
        &self.blocks[b][k * ns..(k + 1) * ns]
    }

    pub fn final_state(&self) -> &[f64] {
        self.slice(self.blocks.len() - 1, self.m - 1)
    }

    pub fn time(&self, b: usize, k: usize) -> f64 {
        self.offsets[b] + k as f64 * self.step
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.blocks.len() - 1, self.m - 1)
    }
}

/// Samples `S̃ = S + boundary forcing` at every node of one block starting at `t0`.
pub fn sample_source(prob: &WaveProblem, space: &SpaceDiscretization, time: &TimeOps, t0: f64) -> Vec<f64> {
    let ns = space.points();
    let pts: Vec<Vec<f64>> = (0..ns).map(|p| space.point(p)).collect();
    let mut out = Vec::with_capacity(ns * time.m);
    for k in 0..time.m {
        let t = t0 + k as f64 * time.step;
        let forcing = space.boundary_forcing(prob, t);
        out.extend(pts.iter().zip(&forcing).map(|(x, b)| (prob.source)(x, t) + b));
    }
    out
}

/// Splits `[0, T]` into `n_blocks` equal blocks sharing `total_points` nodes
/// (interfaces counted once) and returns the block size.
pub fn block_points(total_points: usize, n_blocks: usize) -> Result<usize> {
    if n_blocks == 0 || total_points < 2 || !(total_points - 1).is_multiple_of(n_blocks) {
        return Err(Error::InvalidProblem(format!(
            "{total_points} time points cannot be split into {n_blocks} equal blocks"
        )));
    }
    Ok((total_points - 1) / n_blocks + 1)
}

/// Solves the forward problem over `n_blocks` equal time blocks. `tm` is the
/// operator family of a single block.
pub fn march_multiblock(
    prob: &WaveProblem,
    sp: &[SbpTriplet],
    tm: &TimeOps,
    pen: &PenaltyConfig,
    n_blocks: usize,
) -> Result<SolutionField> {
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
    let sys = assemble_forward(prob, sp, tm, pen)?;
    let f = sys.space.sample(&prob.initial_displacement);
    let g = sys.space.sample(&prob.initial_velocity);
    let block_span = prob.final_time / n_blocks as f64;
    let sources: Vec<Vec<f64>> =
        (0..n_blocks).map(|b| sample_source(prob, &sys.space, tm, b as f64 * block_span)).collect();
    sys.march(&f, &g, &sources, 0.0)
}
