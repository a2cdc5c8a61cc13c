//! The pair (L, R) of side lengths of a chordal exploration of a disk.
//!
//! Its law is the half-plane pair reweighted by (Δ₀/Δ_t)^{α+1}, Δ = L + R,
//! which turns into per-side jump rates multiplied by (Δ/Δ_after)^{α+1}.
//! A downward jump of a side larger than that side would swallow the target
//! and has rate zero under the reweighting.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::{Absorption, DiskEvent, DiskPath, DiskStart};
use crate::error::{domain, Error, Result};
use crate::relations::AsymmetrySplit;
use crate::series::KernelSeries;
use crate::stable::{JumpEvent, JumpKind, Side, Sign};

/// Margin on the thinning bounds; the state drifts between proposals.
const MARGIN: f64 = 1.2;
/// Relative move of either side allowed per drift step.
const MAX_REL_MOVE: f64 = 0.01;
const MAX_BANDS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordalOptions {
    pub horizon: f64,
    /// Absolute jump cutoff; each side uses min(delta_cut, side/4).
    pub delta_cut: f64,
    /// Absorb when either side falls to this length.
    pub floor: f64,
}

/// Radon–Nikodym weight (Δ₀/Δ_t)^{α+1}.
pub fn rn_weight(alpha: f64, delta0: f64, delta_t: f64) -> f64 {
    (delta0 / delta_t).powf(alpha + 1.0)
}

/// Rate of a jump of size l of one side when the sides are (left, right).
pub fn chordal_side_rate(
    split: &AsymmetrySplit,
    alpha: f64,
    left: f64,
    right: f64,
    l: f64,
    sign: Sign,
    side: Side,
) -> f64 {
    let total = left + right;
    let (own, a_up, a_down) = match side {
        Side::Left => (left, split.a_lp, split.a_lm),
        Side::Right => (right, split.a_rp, split.a_rm),
        Side::None => return 0.0,
    };
    let e = alpha + 1.0;
    match sign {
        Sign::Plus => a_up * l.powf(-e) * (total / (total + l)).powf(e),
        Sign::Minus if l < own => a_down * l.powf(-e) * (total / (total - l)).powf(e),
        Sign::Minus => 0.0,
    }
}

#[derive(Debug, Clone, Copy)]
struct Band {
    side: Side,
    sign: Sign,
    lo: f64,
    hi: f64,
    /// Bound on the reweighting factor over the band.
    bound: f64,
    mass: f64,
}

fn power_band(alpha: f64, intensity: f64, lo: f64, hi: f64) -> f64 {
    let upper = if hi.is_finite() { hi.powf(-alpha) } else { 0.0 };
    intensity * (lo.powf(-alpha) - upper) / alpha
}

struct Side1 {
    side: Side,
    a_up: f64,
    a_down: f64,
    series: KernelSeries,
}

impl Side1 {
    fn cutoff(&self, own: f64, delta_cut: f64) -> f64 {
        delta_cut.min(own / 4.0)
    }

    fn drift(&self, own: f64, total: f64, delta_cut: f64) -> f64 {
        let a = self.series.alpha;
        let c = self.cutoff(own, delta_cut);
        total.powf(1.0 - a) * self.series.drift(c / total)
    }

    fn bands(&self, own: f64, other: f64, delta_cut: f64, out: &mut Vec<Band>) {
        let a = self.series.alpha;
        let e = a + 1.0;
        let total = own + other;
        let c = self.cutoff(own, delta_cut);
        if self.a_up > 0.0 {
            out.push(Band {
                side: self.side,
                sign: Sign::Plus,
                lo: c,
                hi: f64::INFINITY,
                bound: MARGIN,
                mass: MARGIN * power_band(a, self.a_up, c, f64::INFINITY),
            });
        }
        if self.a_down > 0.0 {
            let mut lo = c;
            for k in 0..MAX_BANDS {
                let gap = own * 0.5f64.powi(k as i32 + 1);
                let hi = own - gap;
                if hi <= lo {
                    continue;
                }
                let bound = MARGIN * (total / (other + gap)).powf(e);
                out.push(Band {
                    side: self.side,
                    sign: Sign::Minus,
                    lo,
                    hi,
                    bound,
                    mass: bound * power_band(a, self.a_down, lo, hi),
                });
                lo = hi;
            }
        }
    }
}

/// Simulates the chordal pair from (l0, r0) until the horizon, a side
/// reaching the floor, or real-time underflow.
pub fn sample_disk_chordal<R: Rng + ?Sized>(
    split: &AsymmetrySplit,
    alpha: f64,
    l0: f64,
    r0: f64,
    opts: &ChordalOptions,
    rng: &mut R,
) -> Result<DiskPath> {
    if !(l0 > 0.0 && r0 > 0.0) {
        return Err(domain("L0/R0", l0.min(r0), "(0, inf)"));
    }
    if !(opts.horizon > 0.0 && opts.delta_cut > 0.0 && opts.floor >= 0.0) {
        return Err(Error::Invalid("chordal options out of range".into()));
    }
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(domain("alpha", alpha, "(1, 2)"));
    }
    let sides = [
        Side1 {
            side: Side::Left,
            a_up: split.a_lp,
            a_down: split.a_lm,
            series: KernelSeries::new(alpha, split.a_lp, split.a_lm),
        },
        Side1 {
            side: Side::Right,
            a_up: split.a_rp,
            a_down: split.a_rm,
            series: KernelSeries::new(alpha, split.a_rp, split.a_rm),
        },
    ];
    let (mut left, mut right) = (l0, r0);
    let mut t = 0.0;
    let mut events = Vec::new();
    let mut bands = Vec::new();
    let mut running_min = l0 + r0;
    let finish = |events, t, left: f64, right: f64, reason, running_min| DiskPath {
        start: DiskStart::Pair(l0, r0),
        events,
        floor: opts.floor,
        absorbed: true,
        reason,
        end_time: t,
        end_state: left + right,
        running_min,
    };
    loop {
        if left <= opts.floor || right <= opts.floor {
            return Ok(finish(events, t, left, right, Absorption::Floor, running_min));
        }
        let total = left + right;
        let bl = sides[0].drift(left, total, opts.delta_cut);
        let br = sides[1].drift(right, total, opts.delta_cut);
        bands.clear();
        sides[0].bands(left, right, opts.delta_cut, &mut bands);
        sides[1].bands(right, left, opts.delta_cut, &mut bands);
        let lam: f64 = bands.iter().map(|b| b.mass).sum();
        let mut hmax = opts.horizon - t;
        if bl != 0.0 {
            hmax = hmax.min(MAX_REL_MOVE * left / bl.abs());
        }
        if br != 0.0 {
            hmax = hmax.min(MAX_REL_MOVE * right / br.abs());
        }
        if !(hmax > 1e-15 * (1.0 + t)) && t < opts.horizon {
            return Err(Error::StepUnderflow { state: left.min(right) });
        }
        let wait = if lam > 0.0 {
            <Exp1 as Distribution<f64>>::sample(&Exp1, rng) / lam
        } else {
            f64::INFINITY
        };
        let h = wait.min(hmax);
        left += bl * h;
        right += br * h;
        t += h;
        running_min = running_min.min(left + right);
        if wait >= hmax {
            if t >= opts.horizon {
                return Ok(finish(events, opts.horizon, left, right, Absorption::Horizon, running_min));
            }
            continue;
        }
        if left <= opts.floor || right <= opts.floor {
            continue;
        }
        let mut pick = rng.random::<f64>() * lam;
        let mut band = bands[bands.len() - 1];
        for b in &bands {
            if pick < b.mass {
                band = *b;
                break;
            }
            pick -= b.mass;
        }
        let u: f64 = rng.random();
        let lo_pow = band.lo.powf(-alpha);
        let hi_pow = if band.hi.is_finite() { band.hi.powf(-alpha) } else { 0.0 };
        let l = (lo_pow - u * (lo_pow - hi_pow)).powf(-1.0 / alpha);
        let exact = chordal_side_rate(split, alpha, left, right, l, band.sign, band.side);
        let intensity = match (band.side, band.sign) {
            (Side::Left, Sign::Plus) => split.a_lp,
            (Side::Left, Sign::Minus) => split.a_lm,
            (_, Sign::Plus) => split.a_rp,
            (_, Sign::Minus) => split.a_rm,
        };
        let ratio = exact / (intensity * l.powf(-alpha - 1.0) * band.bound);
        assert!(
            (0.0..=1.0).contains(&ratio),
            "chordal thinning ratio {ratio} out of range"
        );
        if rng.random::<f64>() >= ratio {
            continue;
        }
        let pre = (left, right);
        let own = match band.side {
            Side::Left => &mut left,
            _ => &mut right,
        };
        *own += band.sign.factor() * l;
        events.push(DiskEvent {
            event: JumpEvent {
                time: t,
                size: l,
                sign: band.sign,
                side: band.side,
                kind: match band.sign {
                    Sign::Plus => JumpKind::Loop,
                    Sign::Minus => JumpKind::Split,
                },
            },
            pre_state: pre.0 + pre.1,
            post_state: left + right,
            pre_pair: Some(pre),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::{derive_relations, intensity_split};
    use rand::SeedableRng;

    #[test]
    fn rn_examples() {
        assert!((rn_weight(4.0 / 3.0, 1.0, 2.0) - 2f64.powf(-7.0 / 3.0)).abs() < 1e-12);
        assert_eq!(rn_weight(4.0 / 3.0, 1.7, 1.7), 1.0);
    }

    #[test]
    fn swallowing_jumps_have_zero_rate() {
        let rel = derive_relations(3.0).unwrap();
        let split = intensity_split(0.2, 1.0, &rel).unwrap();
        let r = chordal_side_rate(&split, rel.alpha, 0.3, 0.7, 0.35, Sign::Minus, Side::Left);
        assert_eq!(r, 0.0);
        let r = chordal_side_rate(&split, rel.alpha, 0.3, 0.7, 0.35, Sign::Minus, Side::Right);
        assert!(r > 0.0);
    }

    #[test]
    fn paths_stay_positive() {
        let rel = derive_relations(3.0).unwrap();
        let split = intensity_split(0.0, 1.0, &rel).unwrap();
        let opts = ChordalOptions {
            horizon: 0.2,
            delta_cut: 1e-3,
            floor: 1e-3,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = sample_disk_chordal(&split, rel.alpha, 0.5, 0.5, &opts, &mut rng).unwrap();
            for e in &p.events {
                let (l, r) = e.pre_pair.unwrap();
                assert!(l > 0.0 && r > 0.0 && e.post_state > 0.0);
                if e.event.sign == Sign::Minus {
                    let own = if e.event.side == Side::Left { l } else { r };
                    assert!(e.event.size < own);
                }
            }
        }
    }
}
