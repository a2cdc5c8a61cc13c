//! Structural invariants of grown trees.

use frag_core::tree::{count_jumps, grow_tree, stopping_line, CountScope, LabelSet, Origin, Provenance, Status};
use frag_core::{derive_relations, BranchPolicy, DiskRates, JumpKind, Sign, StopRule, StreamKey, TreeConfig, Variant};
use proptest::prelude::*;

fn rates(kappa: f64) -> DiskRates {
    let r = derive_relations(kappa).unwrap();
    DiskRates::policy(r.alpha, r.u)
}

fn exit_cfg(variant: Variant) -> TreeConfig {
    TreeConfig::new(
        variant,
        BranchPolicy::FollowLargest,
        1.0,
        StopRule::ExitInterval { lower: 0.5, upper: 2.0 },
    )
}

fn floor_cfg(variant: Variant, floor: f64) -> TreeConfig {
    TreeConfig::new(variant, BranchPolicy::FollowLargest, 1.0, StopRule::MassFloor { floor })
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exit_line_shape(seed in 0u64..10_000, kappa in 2.7f64..3.99) {
        let t = grow_tree(&rates(kappa), &exit_cfg(Variant::T), seed, StreamKey::replicate(0)).unwrap();
        let line = t.line_labels.as_ref().unwrap();
        // One label per particle; only the root's can reach 1.
        prop_assert_eq!(line.labels.len(), t.particles.len());
        for l in &line.labels {
            if l.particle == 0 {
                prop_assert_eq!(l.provenance, Provenance::TerminalLabel);
                prop_assert!(l.mass <= 0.5 || l.mass >= 2.0);
            } else {
                prop_assert_eq!(l.provenance, Provenance::DiscardedSplitPiece);
                prop_assert!(l.mass < 1.0);
            }
        }
        prop_assert!(line.labels.windows(2).all(|w| w[0].mass >= w[1].mass));
        prop_assert!(t.particles.iter().all(|p| p.status == Status::StoppedAtLine));
    }

    #[test]
    fn jumps_conserve_mass(seed in 0u64..10_000) {
        let t = grow_tree(&rates(3.0), &floor_cfg(Variant::TTilde, 1.0 / 16.0), seed, StreamKey::replicate(1)).unwrap();
        for e in &t.events {
            let (pre, post, size) = (e.pre, e.post, e.event.size);
            match e.event.sign {
                Sign::Plus => prop_assert!((post - pre - size).abs() <= 1e-12 * post),
                Sign::Minus => {
                    // Follow-largest keeps the larger piece.
                    prop_assert!((pre - post - size).abs() <= 1e-12 * pre);
                    prop_assert!(size <= pre / 2.0);
                }
            }
            if let Some(c) = e.child {
                let child = &t.particles[c];
                prop_assert_eq!(child.birth_mass, size);
                prop_assert_eq!(child.parent, Some(e.particle));
                let origin = if e.event.kind == JumpKind::Loop { Origin::LoopOffspring } else { Origin::SplitOffspring };
                prop_assert_eq!(child.origin, origin);
            }
        }
    }

    #[test]
    fn t_is_the_non_loop_part_of_t_tilde(seed in 0u64..10_000, floor_exp in 2i32..6) {
        let floor = 2f64.powi(-floor_exp);
        let r = rates(3.2);
        let key = StreamKey::replicate(7).sub("pair");
        let t = grow_tree(&r, &floor_cfg(Variant::T, floor), seed, key).unwrap();
        let tt = grow_tree(&r, &floor_cfg(Variant::TTilde, floor), seed, key).unwrap();
        let base: Vec<(f64, f64)> = t.particles.iter().map(|p| (p.birth_mass, p.end_mass)).collect();
        let shared: Vec<(f64, f64)> = tt
            .particles
            .iter()
            .filter(|p| !p.loop_descended)
            .map(|p| (p.birth_mass, p.end_mass))
            .collect();
        let key_of = |v: &[(f64, f64)]| sorted(v.iter().map(|p| p.0 * 1e3 + p.1).collect());
        prop_assert_eq!(key_of(&base), key_of(&shared));
        let lt = t.line_labels.as_ref().unwrap().masses(LabelSet::T);
        let ltt = tt.line_labels.as_ref().unwrap().masses(LabelSet::T);
        prop_assert_eq!(sorted(lt), sorted(ltt));
    }

    #[test]
    fn floor_lines_lie_below_their_level(seed in 0u64..10_000, level in 0u32..4) {
        let floor = 1.0 / 64.0;
        let t = grow_tree(&rates(3.5), &floor_cfg(Variant::TTilde, floor), seed, StreamKey::replicate(2)).unwrap();
        let y = floor * 2f64.powi(level as i32);
        let line = stopping_line(&t, y).unwrap();
        prop_assert!(line.labels.iter().all(|l| l.mass <= y && l.mass > 0.0));
        let mut ids: Vec<usize> = line.labels.iter().map(|l| l.particle).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), line.labels.len());
        for l in &line.labels {
            prop_assert_eq!(l.in_t(), !t.particles[l.particle].loop_descended && l.provenance != Provenance::LoopJump);
        }
    }

    #[test]
    fn replicate_streams_are_isolated(seed in 0u64..1000, i in 0u64..1000) {
        let r = rates(3.0);
        let cfg = exit_cfg(Variant::TTilde);
        let a = grow_tree(&r, &cfg, seed, StreamKey::replicate(i)).unwrap();
        // Growing other replicates in between changes nothing.
        let _ = grow_tree(&r, &cfg, seed, StreamKey::replicate(i + 1)).unwrap();
        let b = grow_tree(&r, &cfg, seed, StreamKey::replicate(i)).unwrap();
        prop_assert_eq!(&a, &b);
        let c = grow_tree(&r, &cfg, seed, StreamKey::replicate(i + 1)).unwrap();
        prop_assert_ne!(&a.events, &c.events);
    }
}

#[test]
fn budget_truncation_is_reported() {
    let mut cfg = floor_cfg(Variant::T, 1.0 / 256.0);
    cfg.budget = 2;
    let t = (0..50)
        .map(|i| grow_tree(&rates(3.0), &cfg, 1, StreamKey::replicate(i)).unwrap())
        .find(|t| t.particles.len() > 2)
        .expect("a tree with more than two particles");
    assert!(t.truncated_fraction > 0.0);
    assert!(t.particles.iter().any(|p| p.status == Status::TruncatedByBudget));
}

#[test]
fn resolution_and_floor_errors() {
    let t = grow_tree(&rates(3.0), &floor_cfg(Variant::T, 0.25), 1, StreamKey::replicate(0)).unwrap();
    assert!(stopping_line(&t, 0.1).is_err());
    assert!(count_jumps(&t, (t.resolution / 2.0, 1.0), Sign::Plus, CountScope::WholeTree).is_err());
    assert!(count_jumps(&t, (t.resolution, 1.0), Sign::Plus, CountScope::WholeTree).is_ok());
    let e = grow_tree(&rates(3.0), &exit_cfg(Variant::T), 1, StreamKey::replicate(0)).unwrap();
    assert!(stopping_line(&e, 0.5).is_err());
    let mut bad = exit_cfg(Variant::T);
    bad.root_mass = 3.0;
    assert!(grow_tree(&rates(3.0), &bad, 1, StreamKey::replicate(0)).is_err());
}

#[test]
fn single_branch_without_splits() {
    let r = DiskRates {
        a_minus: 0.0,
        ..rates(3.0)
    };
    let t = grow_tree(&r, &exit_cfg(Variant::T), 3, StreamKey::replicate(0)).unwrap();
    assert_eq!(t.particles.len(), 1);
    assert!(t.particles[0].origin == Origin::Root);
}
