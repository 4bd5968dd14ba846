//! Fully discrete adjoint of the space-time scheme, solved forward in the
//! reversed time `τ = T - t`.
//!
//! With `W = Hₜ ⊗ Hₓc⁻²` the multiplier satisfies `W⁻¹AᵀW Λ = -(I ⊗ c²)∇J̃`.
//! Reversing time, `Λ̄ = (R ⊗ I)Λ`, turns this into
//! `(D̃ⱼτ D̃ᵢτ ⊗ I + D̃ⱼτ ⊗ (σ² + B) - I ⊗ L) Λ̄ = -(R ⊗ c²)∇J̃`, which has the
//! same structure as the forward block and is solved the same way.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::forward::{
    build_solver, DiscreteSystem, PenaltyConfig, SolverChoice, SpaceDiscretization, TensorPreconditioner, WaveProblem,
};
use crate::linalg::{kron, LinearSolver, SparseMatrix, DEFAULT_TOLERANCE};
use crate::operators::{reversal, reversed_time_op, SbpTriplet, TimeOps};

/// Left-hand side of the reversed-time adjoint block plus the interface
/// coupling that hands `Λ̄` of a later block to the one before it.
pub struct AdjointSystem {
    pub matrix: SparseMatrix,
    pub space: Arc<SpaceDiscretization>,
    pub time: TimeOps,
    pub penalty: PenaltyConfig,
    /// Set when `flavor_i ≠ flavor_j`; the scheme is still the exact adjoint
    /// but its energy stability is not established.
    pub stability_unproven: bool,
    t1: DMatrix<f64>,
    t2: DMatrix<f64>,
    sigma_b: Vec<f64>,
    /// `C_τ = Σ T_a ⊗ diag(s_a)`.
    coupling: Vec<(DMatrix<f64>, Vec<f64>)>,
    pub solver_choice: SolverChoice,
    solver: OnceLock<std::result::Result<LinearSolver, Error>>,
}

impl std::fmt::Debug for AdjointSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdjointSystem")
            .field("m", &self.time.m)
            .field("shape", &self.space.shape())
            .field("stability_unproven", &self.stability_unproven)
            .finish_non_exhaustive()
    }
}

/// Assembles the adjoint block for `μ1 = μ3 = -1`.
pub fn assemble_adjoint(
    prob: &WaveProblem,
    sp: &[SbpTriplet],
    tm: &TimeOps,
    pen: &PenaltyConfig,
) -> Result<AdjointSystem> {
    let space = Arc::new(SpaceDiscretization::new(prob, sp)?);
    AdjointSystem::new(space, tm.clone(), *pen)
}

impl AdjointSystem {
    pub fn new(space: Arc<SpaceDiscretization>, time: TimeOps, penalty: PenaltyConfig) -> Result<Self> {
        penalty.validate()?;
        if !penalty.is_default_initial() {
            return Err(Error::UnsupportedPenalty(format!(
                "the adjoint scheme requires mu1 = mu3 = -1, got mu1 = {}, mu3 = {}",
                penalty.mu1, penalty.mu3
            )));
        }
        let stability_unproven = time.flavor_i != time.flavor_j;
        if stability_unproven {
            log::warn!("adjoint with mixed time flavors: energy stability is unproven");
        }
        let m = time.m;
        let ns = space.points();
        let di_tau = reversed_time_op(&time, time.flavor_i);
        let dj_tau = reversed_time_op(&time, time.flavor_j);
        let t1 = &dj_tau * &di_tau;
        let t2 = dj_tau;
        let sigma_b = space.damping_diagonal();

        let a = kron(&SparseMatrix::from_dense(&t1), &SparseMatrix::identity(ns))?;
        let b = kron(&SparseMatrix::from_dense(&t2), &SparseMatrix::diagonal(&sigma_b))?;
        let c = kron(&SparseMatrix::identity(m), &space.laplacian)?;
        let matrix = a.add_scaled(&b, 1.0)?.add_scaled(&c, -1.0)?;

        let coupling = forward_coupling(&time, &penalty, &sigma_b)
            .into_iter()
            .map(|(t, s)| (reverse_adjoint(&time, &t), s))
            .collect();

        Ok(AdjointSystem {
            matrix,
            space,
            time,
            penalty,
            stability_unproven,
            t1,
            t2,
            sigma_b,
            coupling,
            solver_choice: SolverChoice::Automatic,
            solver: OnceLock::new(),
        })
    }

    /// Adjoint of an already assembled forward system, sharing its grid.
    pub fn from_forward(fwd: &DiscreteSystem) -> Result<Self> {
        Ok(Self::new(fwd.space.clone(), fwd.time.clone(), fwd.penalty)?.with_solver(fwd.solver_choice))
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

    /// Forcing `-(R ⊗ c²)∇J̃` for a t-ordered `∇J̃`.
    pub fn forcing(&self, grad_j: &[f64]) -> Result<Vec<f64>> {
        if grad_j.len() != self.unknowns() {
            return Err(Error::DimensionMismatch { expected: self.unknowns(), got: grad_j.len() });
        }
        let mut out = reverse_time(grad_j, self.m(), self.spatial_points());
        for chunk in out.chunks_mut(self.spatial_points()) {
            for (o, c2) in chunk.iter_mut().zip(&self.space.c2) {
                *o *= -c2;
            }
        }
        Ok(out)
    }

    /// Interface term `C_τ Λ̄` passed from a later block to the previous one.
    pub fn couple(&self, lambda_bar_next: &[f64]) -> Result<Vec<f64>> {
        apply_time_space(&self.coupling, lambda_bar_next, self.m(), self.spatial_points())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let solver = self
            .solver
            .get_or_init(|| {
                build_solver(&self.matrix, self.solver_choice, self.space.is_separable(), || {
                    Ok(Arc::new(TensorPreconditioner::new(&self.space, &self.t1, &self.t2, &self.sigma_b)?))
                })
            })
            .as_ref()
            .map_err(Clone::clone)?;
        Ok(solver.solve(rhs, DEFAULT_TOLERANCE)?.0)
    }
}

/// Solves one adjoint block and returns the τ-ordered `Λ̄`.
pub fn solve_adjoint(sys: &AdjointSystem, grad_j: &[f64]) -> Result<Vec<f64>> {
    sys.solve(&sys.forcing(grad_j)?)
}

/// Solves the adjoint over consecutive blocks. `grads[b]` is the t-ordered
/// `∇J̃` of physical block `b`; blocks are visited last to first and the
/// returned `Λ̄` stays indexed by physical block.
pub fn solve_adjoint_multiblock(sys: &AdjointSystem, grads: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new(); grads.len()];
    for b in (0..grads.len()).rev() {
        let mut rhs = sys.forcing(&grads[b])?;
        if b + 1 < grads.len() {
            for (r, c) in rhs.iter_mut().zip(sys.couple(&out[b + 1])?) {
                *r += c;
            }
        }
        out[b] = sys.solve(&rhs)?;
    }
    Ok(out)
}

/// Applies `R ⊗ I` to a space-time vector.
pub fn reverse_time(v: &[f64], m: usize, ns: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    for k in (0..m).rev() {
        out.extend_from_slice(&v[k * ns..(k + 1) * ns]);
    }
    out
}

/// Factors of the forward interface map `U_{b-1} ↦ (rhs of block b)`:
/// `C = -μ1 P' ⊗ Σ - (μ2 DᵢP' + μ3 P'Dⱼ + μ4 PP') ⊗ I` with `P' = Hₜ⁻¹e₁e_Mᵀ`.
fn forward_coupling(tm: &TimeOps, pen: &PenaltyConfig, sigma_b: &[f64]) -> Vec<(DMatrix<f64>, Vec<f64>)> {
    let p = tm.initial_penalty();
    let pi = tm.interface_penalty();
    let d_i = tm.derivative(tm.flavor_i);
    let d_j = tm.derivative(tm.flavor_j);
    let plain = -((&d_i * &pi) * pen.mu2 + (&pi * &d_j) * pen.mu3 + (&p * &pi) * pen.mu4);
    vec![(-(&pi * pen.mu1), sigma_b.to_vec()), (plain, vec![1.0; sigma_b.len()])]
}

/// `R Hₜ⁻¹ Tᵀ Hₜ R`.
fn reverse_adjoint(tm: &TimeOps, t: &DMatrix<f64>) -> DMatrix<f64> {
    let m = tm.m;
    let r = reversal(m);
    let adj = DMatrix::from_fn(m, m, |i, j| t[(j, i)] * tm.h[j] / tm.h[i]);
    &r * adj * &r
}

fn apply_time_space(terms: &[(DMatrix<f64>, Vec<f64>)], v: &[f64], m: usize, ns: usize) -> Result<Vec<f64>> {
    if v.len() != m * ns {
        return Err(Error::DimensionMismatch { expected: m * ns, got: v.len() });
    }
    let mut out = vec![0.0; m * ns];
    for (t, s) in terms {
        for k in 0..m {
            for l in 0..m {
                let w = t[(k, l)];
                if w != 0.0 {
                    for i in 0..ns {
                        out[k * ns + i] += w * s[i] * v[l * ns + i];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Applies the coupled forward operator of `n_blocks` blocks to the
/// concatenated t-ordered vector `u`: block `b` maps to `A U_b - C U_{b-1}`.
pub fn apply_forward_global(fwd: &DiscreteSystem, n_blocks: usize, u: &[f64]) -> Result<Vec<f64>> {
    let (m, ns) = (fwd.m(), fwd.spatial_points());
    let n = m * ns;
    if u.len() != n * n_blocks {
        return Err(Error::DimensionMismatch { expected: n * n_blocks, got: u.len() });
    }
    let coupling = forward_coupling(&fwd.time, &fwd.penalty, &fwd.space.damping_diagonal());
    let mut out = Vec::with_capacity(u.len());
    for b in 0..n_blocks {
        let mut y = fwd.matrix.matvec(&u[b * n..(b + 1) * n])?;
        if b > 0 {
            let c = apply_time_space(&coupling, &u[(b - 1) * n..b * n], m, ns)?;
            for (yi, ci) in y.iter_mut().zip(c) {
                *yi -= ci;
            }
        }
        out.extend(y);
    }
    Ok(out)
}

/// Applies the `W`-adjoint of [`apply_forward_global`] using only the
/// reversed-time adjoint blocks: `A* = (R ⊗ I) A_adj (R ⊗ I)` on the
/// diagonal and `-(R ⊗ I) C_τ (R ⊗ I)` above it.
pub fn apply_adjoint_global(adj: &AdjointSystem, n_blocks: usize, lambda: &[f64]) -> Result<Vec<f64>> {
    let (m, ns) = (adj.m(), adj.spatial_points());
    let n = m * ns;
    if lambda.len() != n * n_blocks {
        return Err(Error::DimensionMismatch { expected: n * n_blocks, got: lambda.len() });
    }
    let mut out = Vec::with_capacity(lambda.len());
    for b in 0..n_blocks {
        let lb = reverse_time(&lambda[b * n..(b + 1) * n], m, ns);
        let mut y = adj.matrix.matvec(&lb)?;
        if b + 1 < n_blocks {
            let next = reverse_time(&lambda[(b + 1) * n..(b + 2) * n], m, ns);
            for (yi, ci) in y.iter_mut().zip(adj.couple(&next)?) {
                *yi -= ci;
            }
        }
        out.extend(reverse_time(&y, m, ns));
    }
    Ok(out)
}

/// Space-time inner product `⟨u, v⟩_W` with `W = Hₜ ⊗ Hₓc⁻²`, summed over blocks.
pub fn lagrangian_dot(space: &SpaceDiscretization, tm: &TimeOps, u: &[f64], v: &[f64]) -> f64 {
    let ns = space.points();
    let mut acc = 0.0;
    for (idx, (a, b)) in u.iter().zip(v).enumerate() {
        let k = (idx / ns) % tm.m;
        let i = idx % ns;
        acc += tm.h[k] * space.h[i] / space.c2[i] * a * b;
    }
    acc
}
