//! Benchmarks live in `benches/`; this crate exports the shared fixtures.

use frag_core::{derive_relations, BranchPolicy, DiskRates, StopRule, TreeConfig, Variant};

/// Policy rates at κ.
pub fn rates(kappa: f64) -> DiskRates {
    let r = derive_relations(kappa).expect("kappa in range");
    DiskRates::policy(r.alpha, r.u)
}

/// A follow-largest tree from mass 1 down to `floor`.
pub fn floor_tree(variant: Variant, floor: f64) -> TreeConfig {
    TreeConfig::new(variant, BranchPolicy::FollowLargest, 1.0, StopRule::MassFloor { floor })
}
