use nalgebra::DMatrix;

use super::problem::{SpaceFn, WaveProblem};
use crate::error::{Error, Result};
use crate::linalg::{kron, SparseMatrix};
use crate::operators::SbpTriplet;

/// Self-adjoint second derivative `D̃ₓₓ = -Hₓ⁻¹ (D⁻ₓ)ᵀ Hₓ D⁻ₓ`.
pub fn assemble_dxx(sp: &SbpTriplet) -> DMatrix<f64> {
    let hd = DMatrix::from_fn(sp.n, sp.n, |i, j| sp.h[i] * sp.d_minus[(i, j)]);
    let mut out = -(sp.d_minus.transpose() * hd);
    for i in 0..sp.n {
        out.row_mut(i).scale_mut(1.0 / sp.h[i]);
    }
    out
}

/// One-dimensional boundary damping matrix
/// `B = Hₓ⁻¹ c² (βR/αR e_N e_Nᵀ - βL/αL e_1 e_1ᵀ)`.
pub fn assemble_boundary_matrix(sp: &SbpTriplet, prob: &WaveProblem) -> Result<DMatrix<f64>> {
    let ax = prob.axes.first().ok_or_else(|| Error::InvalidProblem("problem has no axes".into()))?;
    if ax.left.alpha == 0.0 || ax.right.alpha == 0.0 {
        return Err(Error::ZeroAlpha);
    }
    let n = sp.n;
    let c2 = |x: f64| (prob.wave_speed)(&[x]).powi(2);
    let mut b = DMatrix::zeros(n, n);
    b[(0, 0)] = -c2(ax.lower) * ax.left.beta / ax.left.alpha / sp.h[0];
    b[(n - 1, n - 1)] = c2(ax.upper) * ax.right.beta / ax.right.alpha / sp.h[n - 1];
    Ok(b)
}

/// Tensor-product spatial grid with every sampled coefficient the scheme needs.
///
/// Spatial index is `ix` in 1D and `ix * ny + iy` in 2D.
#[derive(Debug, Clone)]
pub struct SpaceDiscretization {
    pub triplets: Vec<SbpTriplet>,
    pub coords: Vec<Vec<f64>>,
    /// Tensor quadrature weights.
    pub h: Vec<f64>,
    pub c2: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// Diagonal of the boundary damping `B`.
    pub boundary: Vec<f64>,
    /// `D̃ₓₓ` per axis, without the wave speed.
    pub dxx: Vec<DMatrix<f64>>,
    /// `c² (D̃ₓₓ ⊗ I + I ⊗ D̃ᵧᵧ)`.
    pub laplacian: SparseMatrix,
}

impl SpaceDiscretization {
    pub fn new(prob: &WaveProblem, triplets: &[SbpTriplet]) -> Result<Self> {
        prob.validate()?;
        if triplets.len() != prob.dim() {
            return Err(Error::DimensionMismatch { expected: prob.dim(), got: triplets.len() });
        }
        for (ax, t) in prob.axes.iter().zip(triplets) {
            let expected = ax.length() / (t.n - 1) as f64;
            if (expected - t.spacing).abs() > 1e-12 * expected.max(1.0) {
                return Err(Error::InvalidProblem(format!(
                    "operator spacing {} does not match axis spacing {}",
                    t.spacing, expected
                )));
            }
        }
        let coords: Vec<Vec<f64>> = prob
            .axes
            .iter()
            .zip(triplets)
            .map(|(ax, t)| (0..t.n).map(|i| ax.lower + i as f64 * t.spacing).collect())
            .collect();
        let shape: Vec<usize> = triplets.iter().map(|t| t.n).collect();
        let points: usize = shape.iter().product();

        let mut h = vec![1.0; points];
        let mut c2 = vec![0.0; points];
        let mut sigma2 = vec![0.0; points];
        let mut boundary = vec![0.0; points];
        let mut x = vec![0.0; shape.len()];
        for p in 0..points {
            let idx = unravel(p, &shape);
            for (a, &i) in idx.iter().enumerate() {
                x[a] = coords[a][i];
                h[p] *= triplets[a].h[i];
            }
            let c = (prob.wave_speed)(&x);
            if !(c != 0.0 && c.is_finite()) {
                return Err(Error::InvalidProblem(format!("wave speed must be nonzero, got {c} at {x:?}")));
            }
            c2[p] = c * c;
            sigma2[p] = (prob.damping)(&x).powi(2);
            for (a, &i) in idx.iter().enumerate() {
                let ax = &prob.axes[a];
                let t = &triplets[a];
                if i == 0 {
                    boundary[p] -= c2[p] * ax.left.beta / ax.left.alpha / t.h[0];
                }
                if i == t.n - 1 {
                    boundary[p] += c2[p] * ax.right.beta / ax.right.alpha / t.h[t.n - 1];
                }
            }
        }

        let dxx: Vec<DMatrix<f64>> = triplets.iter().map(assemble_dxx).collect();
        let mut lap = SparseMatrix::zeros(points, points);
        for a in 0..dxx.len() {
            let mut term = SparseMatrix::identity(1);
            for (b, d) in dxx.iter().enumerate() {
                let factor = if a == b { SparseMatrix::from_dense(d) } else { SparseMatrix::identity(d.nrows()) };
                term = kron(&term, &factor)?;
            }
            lap = lap.add_scaled(&term, 1.0)?;
        }
        let laplacian = lap.scale_rows_cols(&c2, &vec![1.0; points]);

        Ok(SpaceDiscretization { triplets: triplets.to_vec(), coords, h, c2, sigma2, boundary, dxx, laplacian })
    }

    pub fn dim(&self) -> usize {
        self.triplets.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.triplets.iter().map(|t| t.n).collect()
    }

    pub fn points(&self) -> usize {
        self.h.len()
    }

    /// Coordinates of spatial node `p`.
    pub fn point(&self, p: usize) -> Vec<f64> {
        unravel(p, &self.shape()).iter().enumerate().map(|(a, &i)| self.coords[a][i]).collect()
    }

    /// Per-axis indices of spatial node `p`.
    pub fn index(&self, p: usize) -> Vec<usize> {
        unravel(p, &self.shape())
    }

    pub fn sample(&self, f: &SpaceFn) -> Vec<f64> {
        (0..self.points()).map(|p| f(&self.point(p))).collect()
    }

    /// Uniform speed and damping with no boundary damping: the case where
    /// the space-time block diagonalizes exactly in the spatial eigenbasis.
    pub fn is_separable(&self) -> bool {
        let uniform = |v: &[f64]| v.iter().all(|x| *x == v[0]);
        uniform(&self.c2) && uniform(&self.sigma2) && self.boundary.iter().all(|b| *b == 0.0)
    }

    /// Diagonal of `σ² + B`.
    pub fn damping_diagonal(&self) -> Vec<f64> {
        self.sigma2.iter().zip(&self.boundary).map(|(s, b)| s + b).collect()
    }

    /// Boundary-data forcing `Hₓ⁻¹ c² (e_N b_R/α_R - e_1 b_L/α_L)` at time `t`,
    /// summed over faces in 2D.
    pub fn boundary_forcing(&self, prob: &WaveProblem, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.points()];
        let shape = self.shape();
        for (p, o) in out.iter_mut().enumerate() {
            let idx = unravel(p, &shape);
            let mut x = None;
            for (a, &i) in idx.iter().enumerate() {
                let ax = &prob.axes[a];
                let tr = &self.triplets[a];
                if i == 0 || i == tr.n - 1 {
                    let pt = x.get_or_insert_with(|| self.point(p));
                    if i == 0 {
                        *o -= self.c2[p] * (ax.left.data)(pt, t) / ax.left.alpha / tr.h[0];
                    }
                    if i == tr.n - 1 {
                        *o += self.c2[p] * (ax.right.data)(pt, t) / ax.right.alpha / tr.h[tr.n - 1];
                    }
                }
            }
        }
        out
    }

    /// `‖D⁻ u‖²` summed over axes in the tensor norm.
    pub fn gradient_energy(&self, u: &[f64]) -> f64 {
        let shape = self.shape();
        let mut total = 0.0;
        for (a, t) in self.triplets.iter().enumerate() {
            let n = shape[a];
            let stride: usize = shape[a + 1..].iter().product();
            let outer: usize = shape[..a].iter().product();
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for i in 0..n {
                        let mut d = 0.0;
                        for j in 0..n {
                            let w = t.d_minus[(i, j)];
                            if w != 0.0 {
                                d += w * u[base + j * stride];
                            }
                        }
                        total += self.h[base + i * stride] * d * d;
                    }
                }
            }
        }
        total
    }
}

fn unravel(mut p: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        idx[a] = p % shape[a];
        p /= shape[a];
    }
    idx
}
