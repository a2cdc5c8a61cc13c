//! Asymmetric α-stable Lévy processes built from compensated Poisson
//! point processes of jumps.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    None,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JumpKind {
    Loop,
    Split,
    Plain,
}

impl JumpKind {
    pub fn name(self) -> &'static str {
        match self {
            JumpKind::Loop => "loop",
            JumpKind::Split => "split",
            JumpKind::Plain => "plain",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub size: f64,
    pub sign: Sign,
    pub side: Side,
    pub kind: JumpKind,
}

impl JumpEvent {
    pub fn signed_size(&self) -> f64 {
        self.sign.factor() * self.size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableJumpLaw {
    pub alpha: f64,
    pub a_plus: f64,
    pub a_minus: f64,
}

impl StableJumpLaw {
    pub fn new(alpha: f64, a_plus: f64, a_minus: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(domain("alpha", alpha, "(1, 2)"));
        }
        if !(a_plus >= 0.0 && a_minus >= 0.0 && a_plus.is_finite() && a_minus.is_finite()) {
            return Err(domain("a_plus/a_minus", a_plus.min(a_minus), "[0, inf)"));
        }
        Ok(Self {
            alpha,
            a_plus,
            a_minus,
        })
    }

    fn intensity(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.a_plus,
            Sign::Minus => self.a_minus,
        }
    }

    /// Expected number of jumps of the given sign with size in [lo, hi) per unit time.
    pub fn band_mass(&self, sign: Sign, lo: f64, hi: f64) -> f64 {
        let a = self.alpha;
        let upper = if hi.is_finite() { hi.powf(-a) } else { 0.0 };
        self.intensity(sign) / a * (lo.powf(-a) - upper)
    }

    /// Variance per unit time of the jumps below `delta_cut`.
    pub fn small_jump_variance(&self, delta_cut: f64) -> f64 {
        let a = self.alpha;
        (self.a_plus + self.a_minus) * delta_cut.powf(2.0 - a) / (2.0 - a)
    }
}

/// How jumps below the cutoff are represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallJumps {
    /// Removed; only their compensator remains in the drift.
    #[default]
    Drop,
    /// Replaced by a Brownian motion with the same variance.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonPath {
    pub horizon: f64,
    pub cutoff: f64,
    pub jumps: Vec<JumpEvent>,
    pub drift_rate: f64,
    pub start_value: f64,
    /// Variance rate of the Brownian part (zero when small jumps are dropped).
    pub diffusion: f64,
    /// Brownian part at each jump time, then at the horizon.
    pub brownian_knots: Vec<f64>,
}

impl SkeletonPath {
    /// Value at time t. With a Brownian part, values between knots are the
    /// conditional mean given the knots.
    pub fn value_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.horizon);
        let k = self.jumps.partition_point(|j| j.time <= t);
        let jumps: f64 = self.jumps[..k].iter().map(JumpEvent::signed_size).sum();
        self.start_value + self.drift_rate * t + jumps + self.brownian_at(t, k)
    }

    fn brownian_at(&self, t: f64, k: usize) -> f64 {
        if self.brownian_knots.is_empty() {
            return 0.0;
        }
        let (t0, w0) = if k == 0 {
            (0.0, 0.0)
        } else {
            (self.jumps[k - 1].time, self.brownian_knots[k - 1])
        };
        let (t1, w1) = if k < self.jumps.len() {
            (self.jumps[k].time, self.brownian_knots[k])
        } else {
            (self.horizon, *self.brownian_knots.last().unwrap())
        };
        if t1 > t0 {
            w0 + (w1 - w0) * (t - t0) / (t1 - t0)
        } else {
            w0
        }
    }

    pub fn terminal(&self) -> f64 {
        let jumps: f64 = self.jumps.iter().map(JumpEvent::signed_size).sum();
        let w = self.brownian_knots.last().copied().unwrap_or(0.0);
        self.start_value + self.drift_rate * self.horizon + jumps + w
    }

    /// Continuous stretches between jumps: (t0, t1, value after the jump at
    /// t0, value just before the jump at t1).
    pub fn stretches(&self) -> Vec<(f64, f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.jumps.len() + 1);
        let mut t0 = 0.0;
        let mut x0 = self.start_value;
        let mut w0 = 0.0;
        for (i, j) in self.jumps.iter().enumerate() {
            let w1 = self.brownian_knots.get(i).copied().unwrap_or(0.0);
            let x1 = x0 + self.drift_rate * (j.time - t0) + (w1 - w0);
            out.push((t0, j.time, x0, x1));
            t0 = j.time;
            x0 = x1 + j.signed_size();
            w0 = w1;
        }
        let w1 = self.brownian_knots.last().copied().unwrap_or(0.0);
        let x1 = x0 + self.drift_rate * (self.horizon - t0) + (w1 - w0);
        out.push((t0, self.horizon, x0, x1));
        out
    }
}

fn event_order(a: &JumpEvent, b: &JumpEvent) -> Ordering {
    a.time
        .total_cmp(&b.time)
        .then(a.sign.cmp(&b.sign))
        .then(a.size.total_cmp(&b.size))
}

pub fn sample_jump_ppp<R: Rng + ?Sized>(
    law: &StableJumpLaw,
    horizon: f64,
    delta_cut: f64,
    cap: f64,
    rng: &mut R,
) -> Result<Vec<JumpEvent>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(domain("horizon", horizon, "(0, inf)"));
    }
    if !(delta_cut > 0.0 && delta_cut < cap) {
        return Err(domain("delta_cut", delta_cut, "(0, cap)"));
    }
    let a = law.alpha;
    let lo = delta_cut.powf(-a);
    let hi = if cap.is_finite() { cap.powf(-a) } else { 0.0 };
    let mut events = Vec::new();
    for sign in [Sign::Plus, Sign::Minus] {
        let mean = law.band_mass(sign, delta_cut, cap) * horizon;
        if mean <= 0.0 {
            continue;
        }
        let count = Poisson::new(mean).expect("positive finite mean").sample(rng) as usize;
        events.reserve(count);
        for _ in 0..count {
            let u: f64 = rng.random();
            let size = (lo - u * (lo - hi)).powf(-1.0 / a);
            let time = horizon * (1.0 - rng.random::<f64>());
            events.push(JumpEvent {
                time,
                size,
                sign,
                side: Side::None,
                kind: JumpKind::Plain,
            });
        }
    }
    events.sort_by(event_order);
    Ok(events)
}

/// Drift that makes the process with jumps ≥ `delta_cut` a martingale.
pub fn compensator_drift(law: &StableJumpLaw, delta_cut: f64) -> f64 {
    capped_compensator_drift(law, delta_cut, f64::INFINITY)
}

fn capped_compensator_drift(law: &StableJumpLaw, delta_cut: f64, cap: f64) -> f64 {
    let a = law.alpha;
    let upper = if cap.is_finite() { cap.powf(1.0 - a) } else { 0.0 };
    -(law.a_plus - law.a_minus) * (delta_cut.powf(1.0 - a) - upper) / (a - 1.0)
}

pub fn sample_path<R: Rng + ?Sized>(
    law: &StableJumpLaw,
    horizon: f64,
    delta_cut: f64,
    start: f64,
    rng: &mut R,
) -> Result<SkeletonPath> {
    sample_path_with(law, horizon, delta_cut, start, SmallJumps::Drop, rng)
}

pub fn sample_path_with<R: Rng + ?Sized>(
    law: &StableJumpLaw,
    horizon: f64,
    delta_cut: f64,
    start: f64,
    small: SmallJumps,
    rng: &mut R,
) -> Result<SkeletonPath> {
    let jumps = sample_jump_ppp(law, horizon, delta_cut, f64::INFINITY, rng)?;
    let drift_rate = compensator_drift(law, delta_cut);
    let (diffusion, brownian_knots) = match small {
        SmallJumps::Drop => (0.0, Vec::new()),
        SmallJumps::Gaussian => {
            let var = law.small_jump_variance(delta_cut);
            let mut w = 0.0;
            let mut t0 = 0.0;
            let mut knots = Vec::with_capacity(jumps.len() + 1);
            for t in jumps.iter().map(|j| j.time).chain(std::iter::once(horizon)) {
                let z: f64 = StandardNormal.sample(rng);
                w += (var * (t - t0)).sqrt() * z;
                knots.push(w);
                t0 = t;
            }
            (var, knots)
        }
    };
    Ok(SkeletonPath {
        horizon,
        cutoff: delta_cut,
        jumps,
        drift_rate,
        start_value: start,
        diffusion,
        brownian_knots,
    })
}

/// The P ∈ [1 − 1/α, 1/α] with u = sin(πα(1−P)) / sin(παP).
pub fn positivity_parameter(u: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(domain("alpha", alpha, "(1, 2)"));
    }
    if u.is_nan() || u < 0.0 {
        return Err(domain("u", u, "[0, inf]"));
    }
    let (mut lo, mut hi) = (1.0 - 1.0 / alpha, 1.0 / alpha);
    if u == 0.0 {
        return Ok(lo);
    }
    if u.is_infinite() {
        return Ok(hi);
    }
    let ratio = |p: f64| (PI * alpha * (1.0 - p)).sin() / (PI * alpha * p).sin();
    for _ in 0..200 {
        if hi - lo <= 1e-14 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if ratio(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    #[test]
    fn compensator_examples() {
        let one_sided = StableJumpLaw::new(4.0 / 3.0, 1.0, 0.0).unwrap();
        assert!((compensator_drift(&one_sided, 0.01) + 3.0 * 100f64.powf(1.0 / 3.0)).abs() < 1e-10);
        let down = StableJumpLaw::new(1.5, 0.0, 2.0).unwrap();
        assert!((compensator_drift(&down, 0.04) - 20.0).abs() < 1e-10);
        let sym = StableJumpLaw::new(1.25, 0.7, 0.7).unwrap();
        assert_eq!(compensator_drift(&sym, 0.1), 0.0);
    }

    #[test]
    fn zero_intensity_is_a_line() {
        let law = StableJumpLaw::new(1.3, 0.0, 0.0).unwrap();
        let mut rng = StreamKey(0).rng(1);
        let p = sample_path(&law, 2.0, 0.1, 0.5, &mut rng).unwrap();
        assert!(p.jumps.is_empty());
        assert_eq!(p.terminal(), 0.5);
    }

    #[test]
    fn positivity_examples() {
        assert_eq!(positivity_parameter(0.0, 4.0 / 3.0).unwrap(), 0.25);
        assert!((positivity_parameter(1.0, 1.4).unwrap() - 0.5).abs() < 1e-12);
        assert!(positivity_parameter(-1.0, 1.4).is_err());
        assert_eq!(positivity_parameter(f64::INFINITY, 1.25).unwrap(), 0.8);
    }
}
