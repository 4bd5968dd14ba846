//! Fully discrete forward problem: assembly of the implicit space-time block
//! system with weak initial, interface and boundary conditions, and the
//! block-by-block march.

mod problem;
mod space;
mod system;
mod tensor;

pub use problem::{constant, constant_in_time, Axis, Face, PenaltyConfig, SpaceFn, SpaceTimeFn, WaveProblem};
pub use space::{assemble_boundary_matrix, assemble_dxx, SpaceDiscretization};
pub(crate) use system::build_solver;
pub use system::{
    assemble_forward, block_points, march_multiblock, sample_source, DiscreteSystem, SolutionField, SolverChoice,
};
pub use tensor::TensorPreconditioner;
