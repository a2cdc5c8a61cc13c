//! The half-plane pair: two independent stable processes L and R whose
//! jumps are tagged as cuts or loops on either side of the trunk.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::relations::AsymmetrySplit;
use crate::rng::StreamRng;
use crate::stable::{sample_path, JumpEvent, JumpKind, Side, Sign, SkeletonPath, StableJumpLaw};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneConfig {
    pub split: AsymmetrySplit,
    pub law_l: StableJumpLaw,
    pub law_r: StableJumpLaw,
}

impl HalfPlaneConfig {
    pub fn new(split: AsymmetrySplit, alpha: f64) -> Result<Self> {
        Ok(Self {
            split,
            law_l: StableJumpLaw::new(alpha, split.a_lp, split.a_lm)?,
            law_r: StableJumpLaw::new(alpha, split.a_rp, split.a_rm)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneSample {
    pub left: SkeletonPath,
    pub right: SkeletonPath,
    /// Jumps of both sides, tagged and in time order.
    pub events: Vec<JumpEvent>,
}

fn tag(events: &mut [JumpEvent], side: Side) {
    for e in events {
        e.side = side;
        e.kind = match e.sign {
            Sign::Plus => JumpKind::Loop,
            Sign::Minus => JumpKind::Split,
        };
    }
}

/// Samples L and R on [0, horizon] from two sub-streams of `rng`.
pub fn sample_halfplane<R: Rng + ?Sized>(
    config: &HalfPlaneConfig,
    horizon: f64,
    delta_cut: f64,
    rng: &mut R,
) -> Result<HalfPlaneSample> {
    let mut rng_l = StreamRng::seed_from_u64(rng.random());
    let mut rng_r = StreamRng::seed_from_u64(rng.random());
    let mut left = sample_path(&config.law_l, horizon, delta_cut, 0.0, &mut rng_l)?;
    let mut right = sample_path(&config.law_r, horizon, delta_cut, 0.0, &mut rng_r)?;
    tag(&mut left.jumps, Side::Left);
    tag(&mut right.jumps, Side::Right);
    let mut events: Vec<JumpEvent> = left.jumps.iter().chain(&right.jumps).copied().collect();
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(HalfPlaneSample {
        left,
        right,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::{derive_relations, intensity_split};

    #[test]
    fn beta_one_has_no_left_loops() {
        let rel = derive_relations(3.0).unwrap();
        let split = intensity_split(1.0, 1.0, &rel).unwrap();
        let cfg = HalfPlaneConfig::new(split, rel.alpha).unwrap();
        let mut rng = StreamRng::seed_from_u64(1);
        for _ in 0..50 {
            let s = sample_halfplane(&cfg, 1.0, 0.01, &mut rng).unwrap();
            assert!(!s
                .events
                .iter()
                .any(|e| e.side == Side::Left && e.kind == JumpKind::Loop));
        }
    }
}
