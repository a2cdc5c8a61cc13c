//! β sweep of the ladder exponents.

use frag_core::relations::{ladder_quantities, rho_prime_from_beta};
use serde::Serialize;

use super::Output;
use crate::config::ExperimentConfig;
use crate::manifest::CheckItem;

pub const GRID: usize = 201;
const IDENTITY_TOL: f64 = 1e-9;
const ENDPOINT_TOL: f64 = 1e-10;

#[derive(Serialize)]
struct Row {
    beta: f64,
    rho_prime: f64,
    p_l: f64,
    p_r: f64,
    u_l: f64,
    u_r: f64,
    mean_ratio: f64,
    ratio: f64,
    ratio_target: f64,
}

pub fn run(cfg: &ExperimentConfig, out: &mut Output) -> anyhow::Result<Vec<CheckItem>> {
    let rel = cfg.relations();
    let mut rows = Vec::with_capacity(GRID);
    for i in 0..GRID {
        let beta = -1.0 + 2.0 * i as f64 / (GRID - 1) as f64;
        let rho = rho_prime_from_beta(beta, &rel)?;
        let lq = ladder_quantities(rho, &rel)?;
        rows.push(Row {
            beta,
            rho_prime: rho,
            p_l: lq.P_L,
            p_r: lq.P_R,
            u_l: lq.u_L,
            u_r: lq.u_R,
            mean_ratio: (lq.u_L + lq.u_R) / 2.0,
            ratio: lq.u_L / lq.u_R,
            ratio_target: (1.0 - beta) / (1.0 + beta),
        });
    }
    let identity = rows.iter().map(|r| (r.mean_ratio - rel.u).abs()).fold(0.0, f64::max);
    let ratio = rows[1..GRID - 1]
        .iter()
        .map(|r| (r.ratio - r.ratio_target).abs())
        .fold(0.0, f64::max);
    let monotone = rows.windows(2).all(|w| w[1].rho_prime > w[0].rho_prime);
    let at = |b: f64| rho_prime_from_beta(b, &rel);
    let items = vec![
        CheckItem::at_most(1, "max |(u_L+u_R)/2 + cos(pi alpha)|", identity, IDENTITY_TOL),
        CheckItem::at_most(1, "max |u_L/u_R - (1-beta)/(1+beta)| on (-1,1)", ratio, IDENTITY_TOL),
        CheckItem::within(2, "rho'(1)", at(1.0)?, 0.0, ENDPOINT_TOL),
        CheckItem::within(2, "rho'(-1)", at(-1.0)?, rel.rho_min(), ENDPOINT_TOL),
        CheckItem::within(2, "rho'(0)", at(0.0)?, rel.rho_min() / 2.0, ENDPOINT_TOL),
        CheckItem::holds(2, "rho' strictly increasing in beta", monotone),
    ];
    out.csv("relations.csv", rows)?;
    Ok(items)
}
