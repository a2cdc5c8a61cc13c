//! Boundary-length processes of explorations: the half-plane pair, the
//! chordal disk pair and the disk process Y under a branch policy.

mod chordal;
mod engine;
mod halfplane;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::{integrate_log, integrate_to_inf, Tolerance};
use crate::stable::{JumpEvent, Sign, SkeletonPath};

pub use chordal::{chordal_side_rate, rn_weight, sample_disk_chordal, ChordalOptions};
pub use engine::{
    sample_disk_policy, sample_disk_policy_with, Bounds, EndReason, EngineEvent, Outcome,
    PathObserver, Piece, PolicyEngine, PolicyOptions, DEFAULT_ETA,
};
pub use halfplane::{sample_halfplane, HalfPlaneConfig, HalfPlaneSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatesMode {
    ChordalLeft,
    ChordalRight,
    Policy,
}

/// Jump rates of the disk exploration. In the chordal modes `a_plus` and
/// `a_minus` are the intensities of the side in question.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskRates {
    pub alpha: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub mode: RatesMode,
}

impl DiskRates {
    /// Policy-mode rates with a_− = 1 and a_+ = u.
    pub fn policy(alpha: f64, u: f64) -> Self {
        Self {
            alpha,
            a_plus: u,
            a_minus: 1.0,
            mode: RatesMode::Policy,
        }
    }
}

pub fn disk_jump_rate(rates: &DiskRates, y: f64, l: f64, sign: Sign) -> f64 {
    let e = rates.alpha + 1.0;
    match (sign, rates.mode) {
        (Sign::Plus, _) => rates.a_plus * (y / (l * (y + l))).powf(e),
        (Sign::Minus, RatesMode::Policy) if l < y / 2.0 => {
            rates.a_minus * (y / (l * (y - l))).powf(e)
        }
        (Sign::Minus, RatesMode::ChordalLeft | RatesMode::ChordalRight) if l < y => {
            rates.a_minus * (y / (l * (y - l))).powf(e)
        }
        (Sign::Minus, _) => 0.0,
    }
}

/// Total rate of jumps of size ≥ delta at state y, both signs. Chordal
/// rates depend on the side lengths; see [`chordal_side_rate`].
pub fn total_jump_rate(rates: &DiskRates, y: f64, delta: f64) -> Result<f64> {
    if rates.mode != RatesMode::Policy {
        return Err(Error::Invalid(
            "total_jump_rate needs policy-mode rates".into(),
        ));
    }
    if !(delta > 0.0 && delta < y / 2.0) {
        return Err(domain("delta", delta, "(0, y/2)"));
    }
    let tol = Tolerance {
        rel: 1e-8,
        abs: 0.0,
    };
    let mut total = 0.0;
    if rates.a_plus > 0.0 {
        total += integrate_log(|l| disk_jump_rate(rates, y, l, Sign::Plus), delta, y, tol)?;
        total += integrate_to_inf(|l| disk_jump_rate(rates, y, l, Sign::Plus), y, tol)?;
    }
    if rates.a_minus > 0.0 {
        let f = |l: f64| disk_jump_rate(rates, y, l, Sign::Minus);
        total += integrate_log(f, delta, y / 2.0, tol)?;
    }
    Ok(total)
}

/// Weight (x₀/X_T)^{α+1} of a stable path on the event that it stays above
/// `floor` and never jumps down by half its value or more; zero elsewhere.
/// Between jumps the Brownian part is checked through a bridge minimum.
pub fn stable_path_weight<R: Rng + ?Sized>(
    path: &SkeletonPath,
    alpha: f64,
    floor: f64,
    rng: &mut R,
) -> f64 {
    for (i, &(t0, t1, x0, x1)) in path.stretches().iter().enumerate() {
        let low = if path.diffusion > 0.0 && t1 > t0 {
            let spread = (x1 - x0).powi(2);
            let u: f64 = rng.random();
            0.5 * (x0 + x1 - (spread - 2.0 * path.diffusion * (t1 - t0) * (1.0 - u).ln()).sqrt())
        } else {
            x0.min(x1)
        };
        if low <= floor {
            return 0.0;
        }
        if let Some(j) = path.jumps.get(i) {
            if j.sign == Sign::Minus && j.size >= x1 / 2.0 {
                return 0.0;
            }
        }
    }
    (path.start_value / path.terminal()).powf(alpha + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskEvent {
    pub event: JumpEvent,
    pub pre_state: f64,
    pub post_state: f64,
    /// (L, R) before the jump, chordal mode only.
    pub pre_pair: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiskStart {
    Single(f64),
    Pair(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Absorption {
    Running,
    Floor,
    Horizon,
    TargetSwallowed,
    Exit,
    FirstPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskPath {
    pub start: DiskStart,
    pub events: Vec<DiskEvent>,
    pub floor: f64,
    pub absorbed: bool,
    pub reason: Absorption,
    pub end_time: f64,
    pub end_state: f64,
    /// Lowest state visited by the continuous part of the path.
    pub running_min: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_examples() {
        let r = DiskRates {
            alpha: 4.0 / 3.0,
            a_plus: 1.0,
            a_minus: 1.0,
            mode: RatesMode::Policy,
        };
        assert!((disk_jump_rate(&r, 1.0, 1.0, Sign::Plus) - 2f64.powf(-7.0 / 3.0)).abs() < 1e-12);
        assert_eq!(disk_jump_rate(&r, 1.0, 0.6, Sign::Minus), 0.0);
        let v = disk_jump_rate(&r, 1.0, 0.25, Sign::Minus);
        assert!((v - (16.0f64 / 3.0).powf(7.0 / 3.0)).abs() < 1e-10);
    }

    fn one_jump(size: f64, sign: Sign, diffusion: f64) -> SkeletonPath {
        SkeletonPath {
            horizon: 1.0,
            cutoff: 0.1,
            jumps: vec![JumpEvent {
                time: 0.5,
                size,
                sign,
                side: crate::stable::Side::None,
                kind: crate::stable::JumpKind::Plain,
            }],
            drift_rate: 0.0,
            start_value: 1.0,
            diffusion,
            brownian_knots: if diffusion > 0.0 { vec![0.0, 0.0] } else { Vec::new() },
        }
    }

    #[test]
    fn path_weights() {
        let mut rng = crate::StreamKey::replicate(0).rng(1);
        let a = 4.0 / 3.0;
        let w = stable_path_weight(&one_jump(1.0, Sign::Plus, 0.0), a, 0.5, &mut rng);
        assert!((w - 0.5f64.powf(a + 1.0)).abs() < 1e-14);
        // A downward jump of half the value or more kills the path.
        assert_eq!(stable_path_weight(&one_jump(0.5, Sign::Minus, 0.0), a, 0.1, &mut rng), 0.0);
        let w = stable_path_weight(&one_jump(0.4, Sign::Minus, 0.0), a, 0.5, &mut rng);
        assert!((w - (1.0f64 / 0.6).powf(a + 1.0)).abs() < 1e-12);
        assert_eq!(stable_path_weight(&one_jump(0.4, Sign::Minus, 0.0), a, 0.6, &mut rng), 0.0);
        // Flat knots with a Brownian part: the bridge dips below the knots.
        let mut hits = 0;
        for _ in 0..2000 {
            hits += (stable_path_weight(&one_jump(0.4, Sign::Minus, 0.01), a, 0.55, &mut rng) == 0.0) as u32;
        }
        assert!(hits > 0 && hits < 2000);
    }
}
