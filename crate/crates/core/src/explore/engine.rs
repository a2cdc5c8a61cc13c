//! Simulation of the disk process Y on its intrinsic clock.
//!
//! With z = ln y and dτ = y^{−α} dt the process is a Lévy process in z as
//! long as the jump cutoff is a fixed fraction of the state. The cutoff is
//! c(y) = min(η·y, abs_cut); in relative units r = c/y, rounded down onto a
//! geometric grid (CUT_GRID steps per unit of ln y) and frozen at the start
//! of every piece. Jumps of relative size ≥ r are sampled by thinning, the
//! rest is replaced by its compensated drift and, optionally, a Brownian
//! part of matching variance.

use std::f64::consts::LN_2;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    Absorption, DiskEvent, DiskPath, DiskRates, DiskStart, RatesMode,
};
use crate::error::{domain, Error, Result};
use crate::series::KernelSeries;
use crate::stable::{JumpEvent, JumpKind, Side, Sign, SmallJumps};
use crate::tree::{choose_branch, BranchChoice, BranchPolicy};

pub const DEFAULT_ETA: f64 = 0.125;
const BAND_EDGES: [f64; 5] = [1.0 / 32.0, 1.0 / 16.0, 0.125, 0.25, 0.5];
/// Steps of the capped cutoff per unit of ln y.
pub const CUT_GRID: f64 = 16.0;
/// Capped cutoffs with a grid index up to this are cached.
const CACHED_CUTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyOptions {
    /// Relative cutoff η ∈ (0, 1/4].
    pub eta: f64,
    /// Absolute cap on the cutoff; infinite for a purely relative cutoff.
    pub abs_cut: f64,
    pub small: SmallJumps,
    pub policy: BranchPolicy,
    /// Bound on the drift or diffusion displacement of ln y per piece.
    pub max_dz: f64,
}

impl Default for PolicyOptions {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            abs_cut: f64::INFINITY,
            small: SmallJumps::Gaussian,
            policy: BranchPolicy::FollowLargest,
            max_dz: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// Stop at the first passage to or below this state (0 for none).
    pub lower: f64,
    /// Stop at the first passage to or above this state.
    pub upper: f64,
    /// Stop at this real time.
    pub horizon: f64,
    /// Stop right after the first upward jump at least this large.
    pub first_positive: Option<f64>,
}

impl Bounds {
    pub fn floor(lower: f64) -> Self {
        Self {
            lower,
            upper: f64::INFINITY,
            horizon: f64::INFINITY,
            first_positive: None,
        }
    }

    pub fn interval(lower: f64, upper: f64) -> Self {
        Self {
            upper,
            ..Self::floor(lower)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndReason {
    Lower,
    Upper,
    Horizon,
    FirstPositive,
}

/// A stretch without sampled jumps. `zmin`/`zmax` are the extremes of ln y
/// over the stretch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub tau: f64,
    pub dtau: f64,
    pub t0: f64,
    pub dt: f64,
    pub z0: f64,
    pub z1: f64,
    pub zmin: f64,
    pub zmax: f64,
    /// Relative cutoff in force.
    pub r: f64,
    /// Grid index of r: 0 for r = η, k for r = η·exp(−k/CUT_GRID).
    pub cut_index: u32,
    /// Variance rate of ln y per unit clock.
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineEvent {
    pub time: f64,
    pub tau: f64,
    pub pre: f64,
    pub post: f64,
    pub size: f64,
    pub sign: Sign,
    pub kind: JumpKind,
    /// Mass handed to the offspring: the loop for upward jumps, the
    /// unfollowed piece for splits.
    pub offspring: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub reason: EndReason,
    pub end_state: f64,
    pub end_time: f64,
    pub end_tau: f64,
    pub running_min: f64,
}

pub trait PathObserver {
    fn piece(&mut self, _piece: &Piece) {}
    fn event(&mut self, _event: &EngineEvent) {}
}

impl PathObserver for () {}

#[derive(Debug, Clone, Copy)]
struct Band {
    lo: f64,
    hi: f64,
    bound: f64,
    mass: f64,
}

/// Everything that depends only on the relative cutoff.
#[derive(Debug, Clone, Copy)]
struct Frozen {
    r: f64,
    mu: f64,
    sigma2: f64,
    lam_plus: f64,
    bands: [Band; 6],
    n_bands: usize,
    lam_minus: f64,
    lam_total: f64,
}

#[derive(Debug, Clone)]
pub struct PolicyEngine {
    alpha: f64,
    a_plus: f64,
    a_minus: f64,
    series: KernelSeries,
    opts: PolicyOptions,
    switch_q: Option<f64>,
    homogeneous: Frozen,
    z_cap: f64,
    capped: Vec<OnceLock<Frozen>>,
}

impl PolicyEngine {
    pub fn new(rates: &DiskRates, opts: PolicyOptions) -> Result<Self> {
        if rates.mode != RatesMode::Policy {
            return Err(Error::Invalid("policy engine needs policy-mode rates".into()));
        }
        if !(opts.eta > 0.0 && opts.eta <= 0.25) {
            return Err(domain("eta", opts.eta, "(0, 1/4]"));
        }
        if !(opts.abs_cut > 0.0) {
            return Err(domain("abs_cut", opts.abs_cut, "(0, inf]"));
        }
        if !(opts.max_dz > 0.0) {
            return Err(domain("max_dz", opts.max_dz, "(0, inf)"));
        }
        let switch_q = match opts.policy {
            BranchPolicy::FollowLargest => None,
            BranchPolicy::QWeighted(q) if q > rates.alpha => Some(q),
            BranchPolicy::QWeighted(q) => return Err(domain("q", q, "(alpha, inf)")),
            BranchPolicy::ChordalNone => {
                return Err(Error::Invalid("chordal-none policy cannot drive Y".into()))
            }
        };
        let series = KernelSeries::new(rates.alpha, rates.a_plus, rates.a_minus);
        let mut engine = Self {
            alpha: rates.alpha,
            a_plus: rates.a_plus,
            a_minus: rates.a_minus,
            series,
            opts,
            switch_q,
            homogeneous: Frozen::placeholder(),
            z_cap: (opts.abs_cut / opts.eta).ln(),
            capped: Vec::new(),
        };
        if opts.abs_cut.is_finite() {
            engine.capped = (0..=CACHED_CUTS).map(|_| OnceLock::new()).collect();
        }
        engine.homogeneous = engine.freeze(opts.eta);
        Ok(engine)
    }

    pub fn options(&self) -> &PolicyOptions {
        &self.opts
    }

    pub fn series(&self) -> &KernelSeries {
        &self.series
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Grid index of the cutoff at state e^z.
    pub fn cut_index(&self, z: f64) -> u32 {
        if z <= self.z_cap {
            0
        } else {
            ((z - self.z_cap) * CUT_GRID).ceil().min(u32::MAX as f64) as u32
        }
    }

    /// Relative cutoff for a grid index; at most abs_cut·e^{−z} at the
    /// states mapped to it.
    pub fn cut_for_index(&self, k: u32) -> f64 {
        self.opts.eta * (-(k as f64) / CUT_GRID).exp()
    }

    /// Relative cutoff at state e^z.
    pub fn relative_cutoff(&self, z: f64) -> f64 {
        self.cut_for_index(self.cut_index(z))
    }

    fn freeze(&self, r: f64) -> Frozen {
        let a = self.alpha;
        let gaussian = self.opts.small == SmallJumps::Gaussian;
        let drift = self.series.drift(r);
        let sigma2 = if gaussian { self.series.variance(r) } else { 0.0 };
        let lam_plus = self.a_plus * r.powf(-a) / a;
        let mut bands = [Band {
            lo: 0.0,
            hi: 0.0,
            bound: 0.0,
            mass: 0.0,
        }; 6];
        let mut n = 0;
        let mut lo = r;
        let mut lo_pow = r.powf(-a);
        let mut lam_minus = 0.0;
        for &hi in &BAND_EDGES {
            if hi <= lo {
                continue;
            }
            let hi_pow = hi.powf(-a);
            let bound = (1.0 - hi).powf(-a - 1.0);
            let mass = self.a_minus * bound * (lo_pow - hi_pow) / a;
            bands[n] = Band {
                lo,
                hi,
                bound,
                mass,
            };
            lam_minus += mass;
            n += 1;
            lo = hi;
            lo_pow = hi_pow;
        }
        let lam_switch = match self.switch_q {
            Some(q) => self.a_minus * ((a + 1.0 + q) * LN_2).exp() * r.powf(q - a) / (q - a),
            None => 0.0,
        };
        Frozen {
            r,
            mu: drift - sigma2 / 2.0,
            sigma2,
            lam_plus,
            bands,
            n_bands: n,
            lam_minus,
            lam_total: lam_plus + lam_minus + lam_switch,
        }
    }

    /// Real time spent while ln y moves linearly from z0 to z1 over dtau.
    fn real_time(&self, z0: f64, z1: f64, dtau: f64) -> f64 {
        let ad = self.alpha * (z1 - z0);
        let base = (self.alpha * z0).exp() * dtau;
        if ad.abs() < 1e-9 {
            base
        } else {
            base * ad.exp_m1() / ad
        }
    }

    /// Runs one path from y0 at real time t0 until a bound is met.
    pub fn run<R: Rng + ?Sized, O: PathObserver + ?Sized>(
        &self,
        y0: f64,
        t0: f64,
        bounds: &Bounds,
        rng: &mut R,
        obs: &mut O,
    ) -> Result<Outcome> {
        if !(y0 > 0.0 && y0.is_finite()) {
            return Err(domain("y0", y0, "(0, inf)"));
        }
        let a = self.alpha;
        let zl = if bounds.lower > 0.0 {
            bounds.lower.ln()
        } else {
            f64::NEG_INFINITY
        };
        let zu = bounds.upper.ln();
        let mut z = y0.ln();
        let mut t = t0;
        let mut tau = 0.0;
        let mut running_min = z;
        let end = |reason, z: f64, t, tau, running_min: f64| Outcome {
            reason,
            end_state: z.exp(),
            end_time: t,
            end_tau: tau,
            running_min: running_min.exp(),
        };
        if z <= zl {
            return Ok(end(EndReason::Lower, z, t, tau, running_min));
        }
        if z >= zu {
            return Ok(end(EndReason::Upper, z, t, tau, running_min));
        }
        let mut scratch;
        loop {
            let k = self.cut_index(z);
            let fr = if k == 0 {
                &self.homogeneous
            } else if let Some(cell) = self.capped.get(k as usize) {
                cell.get_or_init(|| self.freeze(self.cut_for_index(k)))
            } else {
                scratch = self.freeze(self.cut_for_index(k));
                &scratch
            };
            if fr.lam_total == 0.0 && fr.mu == 0.0 && fr.sigma2 == 0.0 {
                if !bounds.horizon.is_finite() {
                    return Err(Error::Invalid("constant path never meets a bound".into()));
                }
                let dt = bounds.horizon - t;
                let dtau = dt * (-a * z).exp();
                obs.piece(&Piece {
                    tau,
                    dtau,
                    t0: t,
                    dt,
                    z0: z,
                    z1: z,
                    zmin: z,
                    zmax: z,
                    r: fr.r,
                    cut_index: k,
                    sigma2: 0.0,
                });
                return Ok(end(EndReason::Horizon, z, bounds.horizon, tau + dtau, running_min));
            }
            let wait: f64 = Exp1.sample(rng);
            let wait = wait / fr.lam_total;
            let mut hmax = self.opts.max_dz / fr.mu.abs().max(1e-12);
            if fr.sigma2 > 0.0 {
                hmax = hmax.min(self.opts.max_dz * self.opts.max_dz / fr.sigma2);
            }
            let (mut h, mut proposal) = if wait < hmax {
                (wait, true)
            } else {
                (hmax, false)
            };
            if !(h > 0.0) {
                return Err(Error::StepUnderflow { state: z.exp() });
            }
            let mut z1 = z + fr.mu * h;
            if fr.sigma2 > 0.0 {
                let n: f64 = StandardNormal.sample(rng);
                z1 += (fr.sigma2 * h).sqrt() * n;
            }
            let gauss_factor = 1.0 + a * a * fr.sigma2 * h / 12.0;
            let mut dt = self.real_time(z, z1, h) * gauss_factor;
            let mut horizon_hit = false;
            if t + dt > bounds.horizon {
                let remaining = (bounds.horizon - t).max(0.0);
                let k = (z1 - z) / h;
                let target = remaining / gauss_factor * (-a * z).exp();
                let s = if (a * k * target).abs() < 1e-12 {
                    target
                } else {
                    (a * k * target).ln_1p() / (a * k)
                };
                let s = s.clamp(0.0, h);
                let mut zs = z + k * s;
                if fr.sigma2 > 0.0 {
                    let n: f64 = StandardNormal.sample(rng);
                    zs += (fr.sigma2 * s * (h - s) / h).sqrt() * n;
                }
                h = s;
                z1 = zs;
                dt = remaining;
                proposal = false;
                horizon_hit = true;
            }
            let (zmin, zmax) = if fr.sigma2 > 0.0 && h > 0.0 {
                let spread = (z1 - z).powi(2);
                let u1: f64 = rng.random();
                let lo = 0.5 * (z + z1 - (spread - 2.0 * fr.sigma2 * h * (1.0 - u1).ln()).sqrt());
                let hi = if zu.is_finite() {
                    let u2: f64 = rng.random();
                    0.5 * (z + z1 + (spread - 2.0 * fr.sigma2 * h * (1.0 - u2).ln()).sqrt())
                } else {
                    z.max(z1)
                };
                (lo, hi)
            } else {
                (z.min(z1), z.max(z1))
            };
            let crossed = if zmin <= zl {
                Some((EndReason::Lower, zl, (z - zl) / ((z - zmin) + (z1 - zmin))))
            } else if zmax >= zu {
                Some((EndReason::Upper, zu, (zu - z) / ((zmax - z) + (zmax - z1))))
            } else {
                None
            };
            if let Some((reason, level, frac)) = crossed {
                let frac = if frac.is_finite() { frac.clamp(0.0, 1.0) } else { 0.0 };
                let hc = h * frac;
                let dtc = self.real_time(z, level, hc);
                obs.piece(&Piece {
                    tau,
                    dtau: hc,
                    t0: t,
                    dt: dtc,
                    z0: z,
                    z1: level,
                    zmin: zmin.max(zl),
                    zmax: zmax.min(zu),
                    r: fr.r,
                    cut_index: k,
                    sigma2: fr.sigma2,
                });
                running_min = running_min.min(zmin.max(zl));
                // Report the bound itself rather than exp(ln bound).
                let mut out = end(reason, level, t + dtc, tau + hc, running_min);
                if reason == EndReason::Lower {
                    out.end_state = bounds.lower;
                    out.running_min = out.running_min.min(bounds.lower);
                } else {
                    out.end_state = bounds.upper;
                }
                return Ok(out);
            }
            obs.piece(&Piece {
                tau,
                dtau: h,
                t0: t,
                dt,
                z0: z,
                z1,
                zmin,
                zmax,
                r: fr.r,
                cut_index: k,
                sigma2: fr.sigma2,
            });
            running_min = running_min.min(zmin);
            z = z1;
            t += dt;
            tau += h;
            if horizon_hit {
                return Ok(end(EndReason::Horizon, z, t, tau, running_min));
            }
            if !proposal {
                continue;
            }
            let Some(ev) = self.propose(fr, z, t, tau, rng) else {
                continue;
            };
            obs.event(&ev);
            z = ev.post.ln();
            if ev.sign == Sign::Plus {
                if let Some(min) = bounds.first_positive {
                    if ev.size >= min {
                        return Ok(end(EndReason::FirstPositive, z, t, tau, running_min));
                    }
                }
                if z >= zu {
                    return Ok(end(EndReason::Upper, z, t, tau, running_min));
                }
            } else {
                running_min = running_min.min(z);
                if z <= zl {
                    return Ok(end(EndReason::Lower, z, t, tau, running_min));
                }
            }
        }
    }

    fn propose<R: Rng + ?Sized>(
        &self,
        fr: &Frozen,
        z: f64,
        t: f64,
        tau: f64,
        rng: &mut R,
    ) -> Option<EngineEvent> {
        let a = self.alpha;
        let y = z.exp();
        let pick = rng.random::<f64>() * fr.lam_total;
        let u: f64 = rng.random();
        let accept: f64 = rng.random();
        if pick < fr.lam_plus {
            let x = fr.r * (1.0 - u).powf(-1.0 / a);
            let ratio = (1.0 + x).powf(-a - 1.0);
            debug_assert!((0.0..=1.0).contains(&ratio));
            if accept >= ratio {
                return None;
            }
            let l = x * y;
            return Some(EngineEvent {
                time: t,
                tau,
                pre: y,
                post: y + l,
                size: l,
                sign: Sign::Plus,
                kind: JumpKind::Loop,
                offspring: l,
            });
        }
        let mut rest = pick - fr.lam_plus;
        if rest < fr.lam_minus {
            let mut band = &fr.bands[fr.n_bands - 1];
            for b in &fr.bands[..fr.n_bands] {
                if rest < b.mass {
                    band = b;
                    break;
                }
                rest -= b.mass;
            }
            let lo_pow = band.lo.powf(-a);
            let hi_pow = band.hi.powf(-a);
            let x = (lo_pow - u * (lo_pow - hi_pow)).powf(-1.0 / a);
            let ratio = (1.0 - x).powf(-a - 1.0) / band.bound;
            assert!(
                (0.0..=1.0 + 1e-12).contains(&ratio),
                "thinning ratio {ratio} out of range"
            );
            if accept >= ratio {
                return None;
            }
            let l = x * y;
            let keep = y - l;
            let choice = choose_branch(&self.opts.policy, l, y, rng);
            let (post, offspring) = match choice {
                BranchChoice::FollowOther => (keep, l),
                BranchChoice::FollowL => (l, keep),
            };
            return Some(EngineEvent {
                time: t,
                tau,
                pre: y,
                post,
                size: offspring,
                sign: Sign::Minus,
                kind: JumpKind::Split,
                offspring,
            });
        }
        // Split below the cutoff whose small piece is followed.
        let q = self.switch_q.expect("switch rate is zero without a q policy");
        let x = fr.r * (1.0 - u).powf(1.0 / (q - a));
        let xq = x.powf(q);
        let p = xq / (xq + (1.0 - x).powf(q));
        let ratio = (1.0 - x).powf(-a - 1.0) * p / (((a + 1.0 + q) * LN_2).exp() * xq);
        assert!(
            (0.0..=1.0 + 1e-12).contains(&ratio),
            "thinning ratio {ratio} out of range"
        );
        if accept >= ratio {
            return None;
        }
        let l = x * y;
        let offspring = y - l;
        Some(EngineEvent {
            time: t,
            tau,
            pre: y,
            post: l,
            size: offspring,
            sign: Sign::Minus,
            kind: JumpKind::Split,
            offspring,
        })
    }
}

impl Frozen {
    fn placeholder() -> Self {
        Self {
            r: 0.0,
            mu: 0.0,
            sigma2: 0.0,
            lam_plus: 0.0,
            bands: [Band {
                lo: 0.0,
                hi: 0.0,
                bound: 0.0,
                mass: 0.0,
            }; 6],
            n_bands: 0,
            lam_minus: 0.0,
            lam_total: 0.0,
        }
    }
}

struct Recorder {
    events: Vec<DiskEvent>,
}

impl PathObserver for Recorder {
    fn event(&mut self, e: &EngineEvent) {
        self.events.push(DiskEvent {
            event: JumpEvent {
                time: e.time,
                size: e.size,
                sign: e.sign,
                side: Side::None,
                kind: e.kind,
            },
            pre_state: e.pre,
            post_state: e.post,
            pre_pair: None,
        });
    }
}

/// Samples Y from y0 until the horizon or the first passage below `floor`,
/// with jumps below min(η·y, delta_cut) removed and compensated.
pub fn sample_disk_policy<R: Rng + ?Sized>(
    rates: &DiskRates,
    y0: f64,
    horizon: f64,
    floor: f64,
    delta_cut: f64,
    rng: &mut R,
) -> Result<DiskPath> {
    let opts = PolicyOptions {
        abs_cut: delta_cut,
        small: SmallJumps::Drop,
        ..PolicyOptions::default()
    };
    let bounds = Bounds {
        horizon,
        ..Bounds::floor(floor)
    };
    sample_disk_policy_with(rates, y0, &bounds, opts, rng)
}

pub fn sample_disk_policy_with<R: Rng + ?Sized>(
    rates: &DiskRates,
    y0: f64,
    bounds: &Bounds,
    opts: PolicyOptions,
    rng: &mut R,
) -> Result<DiskPath> {
    if !(y0 > bounds.lower) {
        return Err(domain("y0", y0, "(floor, inf)"));
    }
    if !(bounds.horizon > 0.0) {
        return Err(domain("horizon", bounds.horizon, "(0, inf]"));
    }
    let engine = PolicyEngine::new(rates, opts)?;
    let mut rec = Recorder { events: Vec::new() };
    let out = engine.run(y0, 0.0, bounds, rng, &mut rec)?;
    let reason = match out.reason {
        EndReason::Lower => Absorption::Floor,
        EndReason::Upper => Absorption::Exit,
        EndReason::Horizon => Absorption::Horizon,
        EndReason::FirstPositive => Absorption::FirstPositive,
    };
    Ok(DiskPath {
        start: DiskStart::Single(y0),
        events: rec.events,
        floor: bounds.lower,
        absorbed: true,
        reason,
        end_time: out.end_time,
        end_state: out.end_state,
        running_min: out.running_min,
    })
}
