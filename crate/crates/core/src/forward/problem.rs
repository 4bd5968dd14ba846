use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Function of position.
pub type SpaceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Function of position and time.
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

pub fn constant(v: f64) -> SpaceFn {
    Arc::new(move |_| v)
}

pub fn constant_in_time(v: f64) -> SpaceTimeFn {
    Arc::new(move |_, _| v)
}

/// Robin-type face condition `α ∂ₙu + β ∂ₜu = b` (with `∂ₙ` the coordinate
/// derivative, not the outward normal).
#[derive(Clone)]
pub struct Face {
    pub alpha: f64,
    pub beta: f64,
    pub data: SpaceTimeFn,
}

impl Face {
    /// Homogeneous Neumann face.
    pub fn neumann() -> Self {
        Face { alpha: 1.0, beta: 0.0, data: constant_in_time(0.0) }
    }

    pub fn robin(alpha: f64, beta: f64) -> Self {
        Face { alpha, beta, data: constant_in_time(0.0) }
    }

    pub fn with_data(mut self, data: SpaceTimeFn) -> Self {
        self.data = data;
        self
    }
}

impl fmt::Debug for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Face").field("alpha", &self.alpha).field("beta", &self.beta).finish_non_exhaustive()
    }
}

/// One coordinate direction of the domain.
#[derive(Clone, Debug)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub left: Face,
    pub right: Face,
}

impl Axis {
    pub fn new(lower: f64, upper: f64) -> Self {
        Axis { lower, upper, left: Face::neumann(), right: Face::neumann() }
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Damped wave equation `u_tt + σ² u_t = c² Δu + S` with face conditions and
/// initial data `u = f`, `u_t = g`.
#[derive(Clone)]
pub struct WaveProblem {
    pub axes: Vec<Axis>,
    pub final_time: f64,
    pub wave_speed: SpaceFn,
    pub damping: SpaceFn,
    pub source: SpaceTimeFn,
    pub initial_displacement: SpaceFn,
    pub initial_velocity: SpaceFn,
}

impl fmt::Debug for WaveProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveProblem")
            .field("axes", &self.axes)
            .field("final_time", &self.final_time)
            .finish_non_exhaustive()
    }
}

impl WaveProblem {
    /// Unit speed, no damping, homogeneous Neumann faces on `[-1, 1]^dim`,
    /// final time 2 and zero data.
    pub fn new(dim: usize) -> Self {
        WaveProblem {
            axes: (0..dim).map(|_| Axis::new(-1.0, 1.0)).collect(),
            final_time: 2.0,
            wave_speed: constant(1.0),
            damping: constant(0.0),
            source: constant_in_time(0.0),
            initial_displacement: constant(0.0),
            initial_velocity: constant(0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn with_final_time(mut self, t: f64) -> Self {
        self.final_time = t;
        self
    }

    pub fn with_wave_speed(mut self, c: SpaceFn) -> Self {
        self.wave_speed = c;
        self
    }

    pub fn with_damping(mut self, sigma: SpaceFn) -> Self {
        self.damping = sigma;
        self
    }

    pub fn with_source(mut self, s: SpaceTimeFn) -> Self {
        self.source = s;
        self
    }

    pub fn with_initial(mut self, f: SpaceFn, g: SpaceFn) -> Self {
        self.initial_displacement = f;
        self.initial_velocity = g;
        self
    }

    pub fn with_faces(mut self, axis: usize, left: Face, right: Face) -> Self {
        self.axes[axis].left = left;
        self.axes[axis].right = right;
        self
    }

    /// Every violated condition, in a stable order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(1..=2).contains(&self.dim()) {
            out.push(format!("dimension must be 1 or 2, got {}", self.dim()));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            out.push(format!("final time must be positive, got {}", self.final_time));
        }
        let names = ["x", "y"];
        for (k, ax) in self.axes.iter().enumerate() {
            let name = names.get(k).copied().unwrap_or("axis");
            if !(ax.upper > ax.lower) {
                out.push(format!("{name}: upper bound must exceed lower bound"));
            }
            for (side, face, sign) in [("left", &ax.left, -1.0), ("right", &ax.right, 1.0)] {
                if face.alpha == 0.0 && face.beta == 0.0 {
                    out.push(format!("{name} {side}: alpha^2 + beta^2 must be nonzero"));
                }
                if face.alpha == 0.0 {
                    out.push(format!("{name} {side}: alpha must be nonzero"));
                }
                if sign * face.alpha * face.beta < 0.0 {
                    let rel = if sign < 0.0 { "<= 0" } else { ">= 0" };
                    out.push(format!("{name} {side}: requires alpha*beta {rel}"));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidProblem(v.join("; ")))
        }
    }
}

/// Boundary and initial penalty parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PenaltyConfig {
    pub tau_l: f64,
    pub tau_r: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self::with_mu(-1.0, -1.0)
    }
}

impl PenaltyConfig {
    /// Initial penalties from `(μ1, μ3)` with the coupled `μ2 = μ1`, `μ4 = -μ1 μ3`.
    pub fn with_mu(mu1: f64, mu3: f64) -> Self {
        PenaltyConfig { tau_l: 1.0, tau_r: -1.0, mu1, mu2: mu1, mu3, mu4: -mu1 * mu3 }
    }

    /// Constant of the fully discrete energy bound.
    pub fn stability_constant(&self) -> f64 {
        let f = |m: f64| -m * m / (2.0 * m + 1.0);
        f(self.mu1).max(f(self.mu3))
    }

    pub fn is_default_initial(&self) -> bool {
        self.mu1 == -1.0 && self.mu3 == -1.0 && self.mu2 == -1.0 && self.mu4 == -1.0
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.mu1 < -0.5) {
            out.push(format!("mu1 < -1/2 required, got {}", self.mu1));
        }
        if !(self.mu3 < -0.5) {
            out.push(format!("mu3 < -1/2 required, got {}", self.mu3));
        }
        if self.mu2 != self.mu1 {
            out.push(format!("mu2 = mu1 required, got mu2 = {} and mu1 = {}", self.mu2, self.mu1));
        }
        if self.mu4 != -self.mu1 * self.mu3 {
            out.push(format!("mu4 = -mu1*mu3 required, got {}", self.mu4));
        }
        if self.tau_l != 1.0 || self.tau_r != -1.0 {
            out.push(format!(
                "boundary penalties must be tau_l = 1, tau_r = -1, got {} and {}",
                self.tau_l, self.tau_r
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InadmissiblePenalty(v.join("; ")))
        }
    }
}
