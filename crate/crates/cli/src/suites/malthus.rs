//! The Malthusian exponent: analytic cumulant root and Monte Carlo root.

use frag_core::carpet::{cumulant_limit, cumulant_root, malthus_root_mc, Ensemble, LineSpec};
use frag_core::tree::grow_tree;
use frag_core::{DiskRates, StopRule, StreamKey, TreeConfig, Variant};
use serde::Serialize;

use super::{par_map, Output};
use crate::config::ExperimentConfig;
use crate::manifest::CheckItem;

const RESIDUAL_TOL: f64 = 1e-3;
const ROOT_TOL: f64 = 5e-3;
const MC_TOL: f64 = 0.03;

#[derive(Serialize)]
struct Analytic {
    kappa: f64,
    delta: f64,
    residual_at_delta: f64,
    extrapolation_spread: f64,
    root: f64,
}

pub fn run(cfg: &ExperimentConfig, out: &mut Output) -> anyhow::Result<Vec<CheckItem>> {
    let rel = cfg.relations();
    let delta = rel.malthus_delta;
    let mut items = Vec::new();

    let lim = cumulant_limit(delta, &rel)?;
    let root = cumulant_root(&rel)?;
    items.push(CheckItem::within(7, "cumulant residual at alpha + 1/2", lim.value, 0.0, RESIDUAL_TOL));
    items.push(CheckItem::within(7, "cumulant root", root, delta, ROOT_TOL));
    out.json(
        "cumulant.json",
        &Analytic {
            kappa: cfg.kappa,
            delta,
            residual_at_delta: lim.value,
            extrapolation_spread: lim.spread,
            root,
        },
    )?;

    if cfg.replicates > 0 {
        let rates = DiskRates::policy(rel.alpha, rel.u);
        let mut tc = TreeConfig::new(
            Variant::T,
            cfg.branch_policy(),
            1.0,
            StopRule::ExitInterval {
                lower: 0.5,
                upper: 2.0,
            },
        );
        tc.engine.eta = cfg.eta;
        tc.record_pieces = true;
        let seed = cfg.master_seed;
        let trees = par_map(cfg.replicates, |i| {
            grow_tree(&rates, &tc, seed, StreamKey::replicate(i).sub("malthus"))
        })?;
        let ens = Ensemble {
            rates,
            engine: tc.engine,
            seed,
            trees,
        };
        let report = malthus_root_mc(&ens, &rel, LineSpec::Rule)?;
        items.push(CheckItem::within(6, "Monte Carlo root of E sum l^q = 1", report.mc_root, delta, MC_TOL));
        out.json("malthus.json", &report)?;
    }
    Ok(items)
}
