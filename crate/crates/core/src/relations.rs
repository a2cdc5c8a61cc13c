//! Exponent algebra in κ, the β ↔ ρ′ correspondence, ladder-height
//! quantities and the left/right split of jump intensities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub const KAPPA_MIN: f64 = 8.0 / 3.0;
pub const KAPPA_MAX: f64 = 4.0;

const BISECTION_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaRelations {
    pub kappa: f64,
    pub gamma: f64,
    pub kappa_prime: f64,
    pub alpha: f64,
    /// Ratio of upward to downward jump intensity, −cos(πα).
    pub u: f64,
    pub malthus_delta: f64,
}

impl KappaRelations {
    /// κ′ − 6, the lower end of the ρ′ range.
    pub fn rho_min(&self) -> f64 {
        self.kappa_prime - 6.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetrySplit {
    pub beta: f64,
    pub p: f64,
    pub rho_prime: f64,
    pub a_lm: f64,
    pub a_rm: f64,
    pub a_lp: f64,
    pub a_rp: f64,
    pub a_plus: f64,
    pub a_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct LadderQuantities {
    pub P_L: f64,
    pub P_R: f64,
    pub u_L: f64,
    pub u_R: f64,
    pub delta_L: f64,
    pub delta_R: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WedgeKind {
    Thick,
    Thin,
}

pub fn derive_relations(kappa: f64) -> Result<KappaRelations> {
    if !(kappa > KAPPA_MIN && kappa < KAPPA_MAX) {
        return Err(domain("kappa", kappa, "(8/3, 4)"));
    }
    let alpha = 4.0 / kappa;
    Ok(KappaRelations {
        kappa,
        gamma: kappa.sqrt(),
        kappa_prime: 16.0 / kappa,
        alpha,
        u: -(PI * alpha).cos(),
        malthus_delta: alpha + 0.5,
    })
}

/// The two sines whose ratio is (1−β)/(1+β); both are ≥ 0 on [κ′−6, 0].
fn sine_pair(rho_prime: f64, rel: &KappaRelations) -> (f64, f64) {
    let left = (-PI * rho_prime / 2.0).sin();
    let right = (-PI * (rel.rho_min() - rho_prime) / 2.0).sin();
    (left, right)
}

pub fn rho_prime_from_beta(beta: f64, rel: &KappaRelations) -> Result<f64> {
    if !(-1.0..=1.0).contains(&beta) {
        return Err(domain("beta", beta, "[-1, 1]"));
    }
    if beta == 1.0 {
        return Ok(0.0);
    }
    if beta == -1.0 {
        return Ok(rel.rho_min());
    }
    // g is strictly decreasing in ρ′: positive at κ′−6, negative at 0.
    let g = |rho: f64| {
        let (left, right) = sine_pair(rho, rel);
        (1.0 + beta) * left - (1.0 - beta) * right
    };
    // Bisect to full precision: near β = ±1 the ratio u_L/u_R amplifies
    // any error in ρ′.
    let (mut lo, mut hi) = (rel.rho_min(), 0.0);
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn beta_from_rho_prime(rho_prime: f64, rel: &KappaRelations) -> Result<f64> {
    if !(rho_prime >= rel.rho_min() && rho_prime <= 0.0) {
        return Err(domain("rho_prime", rho_prime, "[kappa' - 6, 0]"));
    }
    let (left, right) = sine_pair(rho_prime, rel);
    Ok((right - left) / (right + left))
}

pub fn ladder_quantities(rho_prime: f64, rel: &KappaRelations) -> Result<LadderQuantities> {
    if !(rho_prime >= rel.rho_min() && rho_prime <= 0.0) {
        return Err(domain("rho_prime", rho_prime, "[kappa' - 6, 0]"));
    }
    let alpha = rel.alpha;
    let rho_r = rel.rho_min() - rho_prime;
    let p_l = (alpha - rho_prime / 2.0 - 1.0) / alpha;
    let p_r = (alpha - rho_r / 2.0 - 1.0) / alpha;
    // sin(πα(1−P)) = sin(−πρ/2) and sin(παP) = sin(π(ρ/2 − α)) exactly,
    // which keeps u = 0 exact at the endpoints.
    let ratio = |rho: f64| (-PI * rho / 2.0).sin() / (PI * (rho / 2.0 - alpha)).sin();
    Ok(LadderQuantities {
        P_L: p_l,
        P_R: p_r,
        u_L: ratio(rho_prime),
        u_R: ratio(rho_r),
        delta_L: 3.0 - alpha + rho_prime / 2.0,
        delta_R: alpha - rho_prime / 2.0,
    })
}

pub fn intensity_split(beta: f64, a_lm: f64, rel: &KappaRelations) -> Result<AsymmetrySplit> {
    if !(a_lm > 0.0 && a_lm.is_finite()) {
        return Err(domain("a_lm", a_lm, "(0, inf)"));
    }
    let rho_prime = rho_prime_from_beta(beta, rel)?;
    let a_plus = -2.0 * a_lm * (PI * rel.alpha).cos();
    Ok(AsymmetrySplit {
        beta,
        p: (1.0 + beta) / 2.0,
        rho_prime,
        a_lm,
        a_rm: a_lm,
        a_lp: (1.0 - beta) / 2.0 * a_plus,
        a_rp: (1.0 + beta) / 2.0 * a_plus,
        a_plus,
        a_minus: 2.0 * a_lm,
    })
}

pub fn wedge_bessel_dimension(weight: f64, rel: &KappaRelations) -> Result<(f64, WedgeKind)> {
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(domain("W", weight, "(0, inf)"));
    }
    let dim = 1.0 + 2.0 * weight / (rel.gamma * rel.gamma);
    let kind = if dim >= 2.0 {
        WedgeKind::Thick
    } else {
        WedgeKind::Thin
    };
    Ok((dim, kind))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_three() {
        let r = derive_relations(3.0).unwrap();
        assert!((r.gamma - 1.7320508075688772).abs() < 1e-15);
        assert!((r.kappa_prime - 16.0 / 3.0).abs() < 1e-15);
        assert!((r.alpha - 4.0 / 3.0).abs() < 1e-15);
        assert!((r.u - 0.5).abs() < 1e-15);
        assert!((r.malthus_delta - 11.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn kappa_boundaries_rejected() {
        assert!(derive_relations(4.0).is_err());
        assert!(derive_relations(8.0 / 3.0).is_err());
        assert!(derive_relations(f64::NAN).is_err());
    }

    #[test]
    fn symmetric_beta_gives_midpoint() {
        let r = derive_relations(3.2).unwrap();
        let rho = rho_prime_from_beta(0.0, &r).unwrap();
        assert!((rho + 0.5).abs() < 1e-11);
    }
}
