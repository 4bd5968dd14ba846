//! Discrete energies, exact reference solutions, error norms and rate fits.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::forward::{PenaltyConfig, SolutionField, SpaceDiscretization};
use crate::linalg::weighted_norm;
use crate::operators::TimeOps;

/// Penalized time derivative `V = (Dⱼ ⊗ I)U - μ1 (Hₜ⁻¹e₁e₁ᵀ ⊗ I)(U - F)` of one block.
pub fn auxiliary_field(u_block: &[f64], f: &[f64], tm: &TimeOps, mu1: f64) -> Result<Vec<f64>> {
    let ns = f.len();
    let m = tm.m;
    if ns == 0 || u_block.len() != m * ns {
        return Err(Error::DimensionMismatch { expected: m * ns, got: u_block.len() });
    }
    let d = tm.derivative(tm.flavor_j);
    let mut v = vec![0.0; m * ns];
    for k in 0..m {
        for l in 0..m {
            let w = d[(k, l)];
            if w != 0.0 {
                for i in 0..ns {
                    v[k * ns + i] += w * u_block[l * ns + i];
                }
            }
        }
    }
    let p = mu1 / tm.h[0];
    for i in 0..ns {
        v[i] -= p * (u_block[i] - f[i]);
    }
    Ok(v)
}

/// Energy history over all blocks. Index 0 holds the energy of the initial
/// data; every later index is one time node of one block, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyTrace {
    pub e_k: Vec<f64>,
    pub bt_k: Vec<f64>,
    pub damping_k: Vec<f64>,
    /// Quadrature weights `h_k Δt = (Hₜ)_kk` (zero at index 0).
    pub weights: Vec<f64>,
    /// Index into `e_k` of the last node of each block.
    pub block_ends: Vec<usize>,
}

impl EnergyTrace {
    pub fn initial(&self) -> f64 {
        self.e_k[0]
    }

    pub fn final_energy(&self) -> f64 {
        *self.e_k.last().expect("trace is never empty")
    }

    /// Left side of the fully discrete energy inequality,
    /// `E_M + Σ h_k (‖c⁻¹σV_k‖² + BT_k) Δt`.
    pub fn dissipated_total(&self) -> f64 {
        let sum: f64 =
            self.weights.iter().zip(self.damping_k.iter().zip(&self.bt_k)).map(|(w, (d, b))| w * (d + b)).sum();
        self.final_energy() + sum
    }

    /// Smallest entry across all recorded quantities.
    pub fn min_entry(&self) -> f64 {
        self.e_k.iter().chain(&self.bt_k).chain(&self.damping_k).cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates the fully discrete energy `E_k = ½(‖c⁻¹V_k‖² + ‖D⁻U_k‖²)` at
/// every time node, together with the damping and boundary terms.
pub fn energy_trace(
    u: &SolutionField,
    space: &SpaceDiscretization,
    tm: &TimeOps,
    pen: &PenaltyConfig,
) -> Result<EnergyTrace> {
    let ns = space.points();
    if u.spatial_points != ns || u.m != tm.m {
        return Err(Error::DimensionMismatch { expected: ns * tm.m, got: u.spatial_points * u.m });
    }
    let inv_c2: Vec<f64> = space.c2.iter().map(|c| 1.0 / c).collect();
    let kinetic = |v: &[f64]| -> f64 { v.iter().zip(&space.h).zip(&inv_c2).map(|((x, h), ic)| h * ic * x * x).sum() };

    let mut trace = EnergyTrace::default();
    let e0 = 0.5 * (kinetic(&u.initial_velocity) + space.gradient_energy(&u.initial_displacement));
    trace.e_k.push(e0);
    trace.bt_k.push(0.0);
    trace.damping_k.push(0.0);
    trace.weights.push(0.0);

    let mut f = u.initial_displacement.clone();
    for block in &u.blocks {
        let v = auxiliary_field(block, &f, tm, pen.mu1)?;
        for k in 0..tm.m {
            let vk = &v[k * ns..(k + 1) * ns];
            let uk = &block[k * ns..(k + 1) * ns];
            trace.e_k.push(0.5 * (kinetic(vk) + space.gradient_energy(uk)));
            let mut damp = 0.0;
            let mut bt = 0.0;
            for i in 0..ns {
                let w = space.h[i] * inv_c2[i] * vk[i] * vk[i];
                damp += w * space.sigma2[i];
                bt += w * space.boundary[i];
            }
            trace.damping_k.push(damp);
            trace.bt_k.push(bt);
            trace.weights.push(tm.h[k]);
        }
        trace.block_ends.push(trace.e_k.len() - 1);
        f = block[(tm.m - 1) * ns..].to_vec();
    }
    Ok(trace)
}

/// Closed-form solution of the damped wave equation with `f = Π cos(π x_a)`,
/// `g = 0`, homogeneous Neumann faces on `[-1, 1]^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    pub dim: usize,
    pub c: f64,
    pub sigma: f64,
    pub omega: f64,
}

/// Builds the reference solution for constant `c > 0`, `σ ≥ 0`.
pub fn exact_solution(dim: usize, c: f64, sigma: f64) -> ExactSolution {
    let k = if dim == 2 { 8.0 } else { 4.0 };
    ExactSolution { dim, c, sigma, omega: k * c * c * PI * PI - sigma.powi(4) }
}

impl ExactSolution {
    /// The three-branch temporal factor.
    pub fn phi(&self, t: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let w = self.omega;
        let floor = if self.sigma == 0.0 { 1e-12 } else { 1e-10 * s2 * s2 };
        if w.abs() < floor {
            1.0 + 0.5 * s2 * t
        } else if w > 0.0 {
            let r = w.sqrt();
            (0.5 * t * r).cos() + s2 / r * (0.5 * t * r).sin()
        } else {
            let r = (-w).sqrt();
            (0.5 * t * r).cosh() + s2 / r * (0.5 * t * r).sinh()
        }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        let spatial: f64 = x.iter().map(|xi| (PI * xi).cos()).product();
        (-0.5 * self.sigma * self.sigma * t).exp() * self.phi(t) * spatial
    }
}

/// Quadrature-weighted error of the final time slice against `ex`.
pub fn l2_error(u: &SolutionField, ex: &ExactSolution, space: &SpaceDiscretization) -> Result<f64> {
    let t = u.final_time();
    let last = u.final_state();
    if last.len() != space.points() {
        return Err(Error::DimensionMismatch { expected: space.points(), got: last.len() });
    }
    let diff: Vec<f64> = last.iter().enumerate().map(|(p, v)| v - ex.eval(&space.point(p), t)).collect();
    weighted_norm(&space.h, &diff)
}

/// Least-squares slope of `log(error)` against `log(Δ)`.
pub fn convergence_rate(errors: &[(f64, f64)]) -> Result<f64> {
    if errors.len() < 2 {
        return Err(Error::DegenerateInput("at least two (spacing, error) pairs are required".into()));
    }
    if errors.iter().any(|&(d, e)| !(d > 0.0 && e > 0.0)) {
        return Err(Error::DegenerateInput("spacings and errors must be positive".into()));
    }
    let n = errors.len() as f64;
    let xs: Vec<f64> = errors.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("spacings must not all be equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
