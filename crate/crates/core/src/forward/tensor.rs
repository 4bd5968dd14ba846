//! Exact solver for the separable part of the space-time operator, used as a
//! GMRES preconditioner for blocks too large to factor.
//!
//! Each axis operator `D̃` is similar to a symmetric matrix through `H^{1/2}`,
//! so the spatial Laplacian with averaged coefficients diagonalizes as
//! `V Λ V⁻¹` with `V = V_x ⊗ V_y`. In that basis the block system splits into
//! one `m × m` system `T₁ + s̄ T₂ - λ I` per spatial mode. For constant speed,
//! constant damping and Neumann faces the preconditioner is the exact inverse.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::space::SpaceDiscretization;
use crate::error::{Error, Result};
use crate::linalg::Preconditioner;

pub struct TensorPreconditioner {
    m: usize,
    shape: Vec<usize>,
    to_modes: Vec<DMatrix<f64>>,
    from_modes: Vec<DMatrix<f64>>,
    systems: Vec<LU<f64, Dyn, Dyn>>,
}

impl TensorPreconditioner {
    pub fn new(space: &SpaceDiscretization, t1: &DMatrix<f64>, t2: &DMatrix<f64>, sigma_b: &[f64]) -> Result<Self> {
        let np = space.points() as f64;
        let c2 = space.c2.iter().sum::<f64>() / np;
        let s = sigma_b.iter().sum::<f64>() / np;

        let mut to_modes = Vec::new();
        let mut from_modes = Vec::new();
        let mut eigs: Vec<Vec<f64>> = Vec::new();
        for t in &space.triplets {
            let sq: Vec<f64> = t.h.iter().map(|h| h.sqrt()).collect();
            // G = H^{1/2} D⁻ H^{-1/2}; H^{1/2} D̃ H^{-1/2} = -GᵀG.
            let g = DMatrix::from_fn(t.n, t.n, |i, j| sq[i] * t.d_minus[(i, j)] / sq[j]);
            let sym = -(g.transpose() * &g);
            let eig = sym.symmetric_eigen();
            let q = eig.eigenvectors;
            to_modes.push(DMatrix::from_fn(t.n, t.n, |i, j| q[(j, i)] * sq[j]));
            from_modes.push(DMatrix::from_fn(t.n, t.n, |i, j| q[(i, j)] / sq[i]));
            eigs.push(eig.eigenvalues.iter().copied().collect());
        }

        let shape = space.shape();
        let lambdas: Vec<f64> = match eigs.len() {
            1 => eigs[0].iter().map(|l| c2 * l).collect(),
            2 => eigs[0].iter().flat_map(|lx| eigs[1].iter().map(move |ly| c2 * (lx + ly))).collect(),
            d => return Err(Error::InvalidProblem(format!("unsupported dimension {d}"))),
        };
        let m = t1.nrows();
        let base = t1 + t2 * s;
        let systems = lambdas
            .iter()
            .map(|&l| {
                let mut a = base.clone();
                for k in 0..m {
                    a[(k, k)] -= l;
                }
                a.lu()
            })
            .collect();
        Ok(TensorPreconditioner { m, shape, to_modes, from_modes, systems })
    }

    fn transform(&self, v: &[f64], mats: &[DMatrix<f64>]) -> Vec<f64> {
        match mats.len() {
            1 => (&mats[0] * DVector::from_column_slice(v)).as_slice().to_vec(),
            _ => {
                let (nx, ny) = (self.shape[0], self.shape[1]);
                let x = DMatrix::from_row_slice(nx, ny, v);
                let y = &mats[0] * x * mats[1].transpose();
                let mut out = Vec::with_capacity(nx * ny);
                for i in 0..nx {
                    out.extend(y.row(i).iter());
                }
                out
            }
        }
    }
}

impl Preconditioner for TensorPreconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let ns: usize = self.shape.iter().product();
        let mut modal: Vec<f64> = Vec::with_capacity(r.len());
        for k in 0..self.m {
            modal.extend(self.transform(&r[k * ns..(k + 1) * ns], &self.to_modes));
        }
        let mut z = DVector::zeros(self.m);
        for (l, lu) in self.systems.iter().enumerate() {
            for k in 0..self.m {
                z[k] = modal[k * ns + l];
            }
            if let Some(sol) = lu.solve(&z) {
                for k in 0..self.m {
                    modal[k * ns + l] = sol[k];
                }
            }
        }
        let mut out = Vec::with_capacity(r.len());
        for k in 0..self.m {
            out.extend(self.transform(&modal[k * ns..(k + 1) * ns], &self.from_modes));
        }
        out
    }
}
