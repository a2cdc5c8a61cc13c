//! Boundary-length processes of loop-ensemble explorations on random
//! surfaces, the growth-fragmentation trees they encode, and Monte Carlo
//! estimators for the Malthusian exponent and the natural carpet measure.

pub mod carpet;
pub mod error;
pub mod explore;
pub mod quad;
pub mod relations;
pub mod rng;
pub mod series;
pub mod stable;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
pub use explore::{DiskPath, DiskRates, PolicyOptions, RatesMode};
pub use relations::{derive_relations, intensity_split, AsymmetrySplit, KappaRelations};
pub use rng::{StreamKey, StreamRng};
pub use stable::{JumpEvent, JumpKind, Side, Sign, SmallJumps, StableJumpLaw};
pub use tree::{BranchPolicy, FragTree, StopRule, TreeConfig, Variant};
