//! Exact enumeration, numerical constants and uniform random generation of
//! unlabelled k-trees, together with brute-force oracles and a statistics
//! harness for their large-scale geometry.

pub mod constants;
pub mod gfsystem;
pub mod ktrees;
pub mod metrics;
pub mod oracle;
pub mod partitions;
pub mod powerseries;
pub mod sampler;

pub use ktrees::{CodingTree, Colouring, Front, KTree};
pub use partitions::{partitions_of, CycleType, Permutation};
pub use powerseries::{Real, Series};
pub use gfsystem::{SeriesTable, GfError};
pub use constants::Constants;
