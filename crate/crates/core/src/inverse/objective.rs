use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{DiscreteSystem, SolutionField, SpaceDiscretization};
use crate::operators::TimeOps;

/// How the two 1D endpoint traces are weighted in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveWeighting {
    /// `Hₜ ⊗ e_N e_Nᵀ + I ⊗ e₁e₁ᵀ`: the left trace is not time-weighted.
    #[default]
    Printed,
    /// `Hₜ ⊗ (e_N e_Nᵀ + e₁e₁ᵀ)`.
    Symmetric,
}

/// Boundary traces of the observed field at every time node of every block.
///
/// The misfit weight of node `nodes[q]` at local time index `k` is
/// `Hₜ[k]·time_weights[q] + plain_weights[q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub nodes: Vec<usize>,
    pub time_weights: Vec<f64>,
    pub plain_weights: Vec<f64>,
    pub m: usize,
    pub step: f64,
    pub spatial_points: usize,
    /// `traces[b][k * nodes.len() + q]`.
    pub traces: Vec<Vec<f64>>,
}

impl Observations {
    /// Observation layout on the boundary of `space` with empty traces.
    ///
    /// 1D observes both endpoints. 2D observes the ring of boundary nodes,
    /// each face weighted by the transverse quadrature; corners collect the
    /// weight of both faces they belong to.
    pub fn boundary(space: &SpaceDiscretization, tm: &TimeOps, weighting: ObjectiveWeighting) -> Result<Self> {
        let shape = space.shape();
        let mut nodes = Vec::new();
        let mut time_weights = Vec::new();
        let mut plain_weights = Vec::new();
        match shape.len() {
            1 => {
                let n = shape[0];
                nodes.extend([0, n - 1]);
                match weighting {
                    ObjectiveWeighting::Printed => {
                        time_weights.extend([0.0, 1.0]);
                        plain_weights.extend([1.0, 0.0]);
                    }
                    ObjectiveWeighting::Symmetric => {
                        time_weights.extend([1.0, 1.0]);
                        plain_weights.extend([0.0, 0.0]);
                    }
                }
            }
            2 => {
                let (nx, ny) = (shape[0], shape[1]);
                let (hx, hy) = (&space.triplets[0].h, &space.triplets[1].h);
                for ix in 0..nx {
                    for iy in 0..ny {
                        let mut w = 0.0;
                        if ix == 0 || ix == nx - 1 {
                            w += hy[iy];
                        }
                        if iy == 0 || iy == ny - 1 {
                            w += hx[ix];
                        }
                        if w > 0.0 {
                            nodes.push(ix * ny + iy);
                            time_weights.push(w);
                            plain_weights.push(0.0);
                        }
                    }
                }
            }
            d => return Err(Error::InvalidProblem(format!("unsupported dimension {d}"))),
        }
        Ok(Observations {
            nodes,
            time_weights,
            plain_weights,
            m: tm.m,
            step: tm.step,
            spatial_points: space.points(),
            traces: Vec::new(),
        })
    }

    /// Same layout with traces recorded from `u`.
    pub fn record(&self, u: &SolutionField) -> Result<Self> {
        self.check_field(u, false)?;
        let traces = u
            .blocks
            .iter()
            .map(|blk| {
                (0..self.m).flat_map(|k| self.nodes.iter().map(move |&p| blk[k * self.spatial_points + p])).collect()
            })
            .collect();
        Ok(Observations { traces, ..self.clone() })
    }

    pub fn weight(&self, tm: &TimeOps, k: usize, q: usize) -> f64 {
        tm.h[k] * self.time_weights[q] + self.plain_weights[q]
    }

    fn check_field(&self, u: &SolutionField, with_traces: bool) -> Result<()> {
        if u.spatial_points != self.spatial_points || u.m != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m * self.spatial_points,
                got: u.m * u.spatial_points,
            });
        }
        if with_traces && u.blocks.len() != self.traces.len() {
            return Err(Error::DimensionMismatch { expected: self.traces.len(), got: u.blocks.len() });
        }
        Ok(())
    }

    /// Writes `t,node_id,value` rows, block by block.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("t,node_id,value\n");
        let span = self.step * (self.m - 1) as f64;
        for (b, tr) in self.traces.iter().enumerate() {
            for k in 0..self.m {
                let t = b as f64 * span + k as f64 * self.step;
                for (q, &p) in self.nodes.iter().enumerate() {
                    let _ = writeln!(s, "{t:.17e},{p},{:.17e}", tr[k * self.nodes.len() + q]);
                }
            }
        }
        std::fs::write(path, s)?;
        Ok(())
    }

    /// Reads traces written by [`Observations::write_csv`] into this layout.
    pub fn read_csv(&self, path: &Path, n_blocks: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "t,node_id,value" => {}
            _ => return Err(Error::Parse { line: 1, column: 1, message: "expected header t,node_id,value".into() }),
        }
        let nq = self.nodes.len();
        let per_block = self.m * nq;
        let span = self.step * (self.m - 1) as f64;
        let mut values = Vec::with_capacity(n_blocks * per_block);
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = |column: usize, message: String| Error::Parse { line: i + 1, column, message };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(err(1, format!("expected 3 fields, found {}", fields.len())));
            }
            let t: f64 = fields[0].trim().parse().map_err(|e| err(1, format!("bad time: {e}")))?;
            let node: usize = fields[1].trim().parse().map_err(|e| err(2, format!("bad node id: {e}")))?;
            let v: f64 = fields[2].trim().parse().map_err(|e| err(3, format!("bad value: {e}")))?;
            let idx = values.len();
            if idx >= n_blocks * per_block {
                return Err(err(1, "more rows than the observation layout holds".into()));
            }
            let (b, r) = (idx / per_block, idx % per_block);
            let (k, q) = (r / nq, r % nq);
            let expected_t = b as f64 * span + k as f64 * self.step;
            if node != self.nodes[q] || (t - expected_t).abs() > 1e-9 * expected_t.abs().max(1.0) {
                return Err(err(1, format!("expected t = {expected_t}, node {}", self.nodes[q])));
            }
            values.push(v);
        }
        if values.len() != n_blocks * per_block {
            return Err(Error::DimensionMismatch { expected: n_blocks * per_block, got: values.len() });
        }
        let traces = values.chunks(per_block).map(|c| c.to_vec()).collect();
        Ok(Observations { traces, ..self.clone() })
    }
}

/// Boundary misfit `½ Σ_b (U_b - U_obs)ᵀ W_obs (U_b - U_obs)`.
pub fn objective(u: &SolutionField, obs: &Observations, tm: &TimeOps) -> Result<f64> {
    obs.check_field(u, true)?;
    let nq = obs.nodes.len();
    let mut j = 0.0;
    for (blk, tr) in u.blocks.iter().zip(&obs.traces) {
        for k in 0..obs.m {
            for (q, &p) in obs.nodes.iter().enumerate() {
                let r = blk[k * obs.spatial_points + p] - tr[k * nq + q];
                j += obs.weight(tm, k, q) * r * r;
            }
        }
    }
    Ok(0.5 * j)
}

/// `∇J̃ = (Hₜ ⊗ Hₓ)⁻¹ W_obs (U - U_obs)` per block: the state gradient in the
/// weighted inner product that enters the adjoint forcing.
pub fn objective_gradient_wrt_state(
    u: &SolutionField,
    obs: &Observations,
    tm: &TimeOps,
    space: &SpaceDiscretization,
) -> Result<Vec<Vec<f64>>> {
    obs.check_field(u, true)?;
    let ns = obs.spatial_points;
    let nq = obs.nodes.len();
    Ok(u.blocks
        .iter()
        .zip(&obs.traces)
        .map(|(blk, tr)| {
            let mut g = vec![0.0; blk.len()];
            for k in 0..obs.m {
                for (q, &p) in obs.nodes.iter().enumerate() {
                    let idx = k * ns + p;
                    g[idx] += obs.weight(tm, k, q) * (blk[idx] - tr[k * nq + q]) / (tm.h[k] * space.h[p]);
                }
            }
            g
        })
        .collect())
}

/// Gradient of the misfit with respect to the initial displacement in the
/// `Hₓ` inner product, from the t-ordered multiplier `Λ` of the first block.
///
/// The Euclidean derivative is `Hₓ` times the returned vector.
pub fn gradient_wrt_initial(lambda: &[f64], fwd: &DiscreteSystem) -> Result<Vec<f64>> {
    let ns = fwd.spatial_points();
    let m = fwd.m();
    if lambda.len() != m * ns {
        return Err(Error::DimensionMismatch { expected: m * ns, got: lambda.len() });
    }
    let pen = &fwd.penalty;
    let ht = &fwd.time.h;
    let h0 = ht[0];
    let sigma_b = fwd.space.damping_diagonal();
    let mut g: Vec<f64> = (0..ns).map(|i| (pen.mu1 * sigma_b[i] + pen.mu4 / h0) * lambda[i]).collect();
    for k in 0..m {
        let w = pen.mu2 / h0 * ht[k] * fwd.d_i[(k, 0)];
        if w != 0.0 {
            for (gi, li) in g.iter_mut().zip(&lambda[k * ns..(k + 1) * ns]) {
                *gi += w * li;
            }
        }
    }
    for (gi, c2) in g.iter_mut().zip(&fwd.space.c2) {
        *gi /= c2;
    }
    Ok(g)
}
