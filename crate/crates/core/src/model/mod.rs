//! Problem, machine, permutation and tile types with their JSON formats.

mod dims;
mod json;
mod machine;
mod permutation;
mod problem;
mod report;
mod tiles;

pub use dims::{Dim, DimVec};
pub use machine::{MachineSpec, MemLevel, Microkernel};
pub(crate) use permutation::next_permutation;
pub use permutation::Permutation;
pub use problem::{ProblemKind, ProblemSpec, Strides};
pub use report::{CostReport, DvBreakdown, LevelCost};
pub use tiles::{chunk_count, TileConfig};
