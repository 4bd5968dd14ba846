use std::sync::Arc;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::{gmres, norm2, GmresOptions, SparseMatrix, DEFAULT_TOLERANCE, DIRECT_LIMIT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SolveMethod {
    DirectLU,
    GMRES,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolveReport {
    pub method: SolveMethod,
    /// Refinement sweeps for the direct path, Krylov steps for GMRES.
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Approximate inverse used on the right of GMRES.
pub trait Preconditioner: Send + Sync {
    fn apply(&self, r: &[f64]) -> Vec<f64>;
}

/// Inverse of the matrix diagonal.
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(a: &SparseMatrix) -> Self {
        let inv_diag = a.diagonal_entries().into_iter().map(|d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
        JacobiPreconditioner { inv_diag }
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.iter().zip(&self.inv_diag).map(|(a, b)| a * b).collect()
    }
}

/// A matrix prepared for repeated solves: factored once, or wrapped with a
/// preconditioner for GMRES.
pub struct LinearSolver {
    matrix: SparseMatrix,
    kind: Kind,
}

enum Kind {
    Direct(Box<faer::sparse::linalg::solvers::Lu<usize, f64>>),
    Iterative { precond: Arc<dyn Preconditioner>, options: GmresOptions },
}

impl std::fmt::Debug for LinearSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            Kind::Direct(_) => "direct",
            Kind::Iterative { .. } => "gmres",
        };
        f.debug_struct("LinearSolver").field("n", &self.matrix.rows()).field("kind", &kind).finish()
    }
}

const REFINEMENT_SWEEPS: usize = 3;

impl LinearSolver {
    /// Sparse LU with partial pivoting and a fill-reducing ordering.
    pub fn direct(a: &SparseMatrix) -> Result<Self> {
        check_square(a)?;
        let trips: Vec<_> = a.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        let csc = SparseColMat::<usize, f64>::try_new_from_triplets(a.rows(), a.cols(), &trips)
            .map_err(|e| Error::DimensionOverflow(format!("{e:?}")))?;
        let lu = csc.sp_lu().map_err(|_| Error::SingularMatrix)?;
        Ok(LinearSolver { matrix: a.clone(), kind: Kind::Direct(Box::new(lu)) })
    }

    /// Restarted GMRES with the given right preconditioner.
    pub fn iterative(a: &SparseMatrix, precond: Arc<dyn Preconditioner>, options: GmresOptions) -> Result<Self> {
        check_square(a)?;
        Ok(LinearSolver { matrix: a.clone(), kind: Kind::Iterative { precond, options } })
    }

    /// Direct below the size limit, Jacobi-preconditioned GMRES(50) above.
    pub fn automatic(a: &SparseMatrix) -> Result<Self> {
        if a.rows() <= DIRECT_LIMIT {
            Self::direct(a)
        } else {
            Self::iterative(a, Arc::new(JacobiPreconditioner::new(a)), GmresOptions::default())
        }
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn method(&self) -> SolveMethod {
        match self.kind {
            Kind::Direct(_) => SolveMethod::DirectLU,
            Kind::Iterative { .. } => SolveMethod::GMRES,
        }
    }

    /// Solves `A x = rhs` to the relative residual `tol`, or reports failure.
    pub fn solve(&self, rhs: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
        let n = self.matrix.rows();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rhs.len() });
        }
        let bnorm = norm2(rhs);
        if bnorm == 0.0 {
            let report = SolveReport { method: self.method(), iterations: 0, relative_residual: 0.0 };
            return Ok((vec![0.0; n], report));
        }
        match &self.kind {
            Kind::Direct(lu) => {
                let mut x = lu_apply(lu, rhs);
                let mut rel = self.residual(&x, rhs) / bnorm;
                let mut sweeps = 0;
                while !(rel <= tol) && sweeps < REFINEMENT_SWEEPS && rel.is_finite() {
                    let r = self.residual_vector(&x, rhs);
                    let dx = lu_apply(lu, &r);
                    for (xi, di) in x.iter_mut().zip(&dx) {
                        *xi += di;
                    }
                    rel = self.residual(&x, rhs) / bnorm;
                    sweeps += 1;
                }
                if !rel.is_finite() {
                    return Err(Error::SingularMatrix);
                }
                if rel > tol {
                    return Err(Error::NoConvergence { iterations: sweeps, residual: rel });
                }
                Ok((x, SolveReport { method: SolveMethod::DirectLU, iterations: sweeps, relative_residual: rel }))
            }
            Kind::Iterative { precond, options } => {
                let opts = GmresOptions { tolerance: tol, ..*options };
                let (x, iterations, rel) = gmres(&self.matrix, rhs, None, precond.as_ref(), opts);
                if !(rel <= tol) {
                    return Err(Error::NoConvergence { iterations, residual: rel });
                }
                Ok((x, SolveReport { method: SolveMethod::GMRES, iterations, relative_residual: rel }))
            }
        }
    }

    fn residual_vector(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let mut ax = vec![0.0; b.len()];
        self.matrix.matvec_into(x, &mut ax);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        norm2(&self.residual_vector(x, b))
    }
}

fn lu_apply(lu: &faer::sparse::linalg::solvers::Lu<usize, f64>, rhs: &[f64]) -> Vec<f64> {
    let b = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    (0..rhs.len()).map(|i| x[(i, 0)]).collect()
}

fn check_square(a: &SparseMatrix) -> Result<()> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch { expected: a.rows(), got: a.cols() });
    }
    Ok(())
}

/// One-shot solve with the default strategy.
pub fn solve(a: &SparseMatrix, rhs: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    if !(tol > 0.0) {
        return Err(Error::DegenerateInput(format!("tolerance must be positive, got {tol}")));
    }
    LinearSolver::automatic(a)?.solve(rhs, tol)
}

/// One-shot solve at the default tolerance.
pub fn solve_with(a: &SparseMatrix, rhs: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    solve(a, rhs, DEFAULT_TOLERANCE)
}
