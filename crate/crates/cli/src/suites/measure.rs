//! Rescaled loop counts against M̂_∞, and the stopping-line measure at two
//! levels.

use frag_core::carpet::{bin_counts, binned_line_measure, intrinsic_area, loop_count_estimate, uniform_bins, BinnedSample};
use frag_core::stats::{coefficient_of_variation, pearson};
use frag_core::tree::{grow_tree, LabelSet};
use frag_core::{DiskRates, StopRule, StreamKey, TreeConfig, Variant};
use serde::Serialize;

use super::{par_map, Output};
use crate::config::ExperimentConfig;
use crate::manifest::CheckItem;

/// Jump cutoff as a fraction of the floor.
const CUT_FRACTION: f64 = 0.25;
/// The coarse level, in floors.
const COARSE: f64 = 4.0;
const BINS: usize = 10;
const CORR_MIN: f64 = 0.9;
const Z_BIN: f64 = 3.0;

#[derive(Serialize)]
struct TreeRow {
    tree_id: u64,
    #[serde(rename = "M_inf_hat")]
    m_inf_hat: f64,
    eps: f64,
    rescaled_count: f64,
}

#[derive(Serialize)]
struct BinRow {
    bin_lo: f64,
    bin_hi: f64,
    nu_coarse: f64,
    se_coarse: f64,
    nu_fine: f64,
    se_fine: f64,
    z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSummary {
    pub trees: u64,
    pub floor: f64,
    pub m_inf_mean: f64,
    /// (ε, corr(ε^δ N_ε, M̂_∞), CV of the ratio)
    pub eps: Vec<(f64, f64, f64)>,
    pub nu_total_coarse: f64,
    pub nu_total_fine: f64,
}

struct Fine {
    m: f64,
    counts: Vec<(f64, f64)>,
    bins: Vec<usize>,
}

fn config(cfg: &ExperimentConfig, floor: f64, delta: f64) -> TreeConfig {
    let mut tc = TreeConfig::new(Variant::T, cfg.branch_policy(), 1.0, StopRule::MassFloor { floor });
    tc.engine.eta = cfg.eta;
    tc.engine.abs_cut = CUT_FRACTION * floor;
    tc.observe.qs = vec![delta];
    tc.observe.levels = vec![floor];
    tc
}

pub fn run(cfg: &ExperimentConfig, out: &mut Output) -> anyhow::Result<Vec<CheckItem>> {
    let rel = cfg.relations();
    let delta = rel.malthus_delta;
    let rates = DiskRates::policy(rel.alpha, rel.u);
    let seed = cfg.master_seed;
    let n = cfg.replicates;
    let fine_y = cfg.floor;
    let coarse_y = COARSE * cfg.floor;
    let eps = [4.0 * fine_y, 2.0 * fine_y, fine_y];
    let bins = uniform_bins(0.0, BINS);
    let mut items = Vec::new();

    let tc = config(cfg, fine_y, delta);
    let fine = par_map(n, |i| {
        let t = grow_tree(&rates, &tc, seed, StreamKey::replicate(i).sub("measure-fine"))?;
        let m = intrinsic_area(&t, delta, &[fine_y])?.m_inf;
        let labels = t.line_labels.as_ref().map(|l| l.masses(LabelSet::T)).unwrap_or_default();
        Ok(Fine {
            m,
            counts: loop_count_estimate(&t, &eps, delta)?,
            bins: bin_counts(&labels, fine_y, &bins),
        })
    })?;
    let tc = config(cfg, coarse_y, delta);
    let coarse = par_map(n, |i| {
        let t = grow_tree(&rates, &tc, seed, StreamKey::replicate(i).sub("measure-coarse"))?;
        let m = intrinsic_area(&t, delta, &[coarse_y])?.m_inf;
        let labels = t.line_labels.as_ref().map(|l| l.masses(LabelSet::T)).unwrap_or_default();
        Ok(BinnedSample {
            counts: bin_counts(&labels, coarse_y, &bins),
            m_inf: m,
        })
    })?;

    let m: Vec<f64> = fine.iter().map(|f| f.m).collect();
    let mut eps_stats = Vec::new();
    for (k, &e) in eps.iter().enumerate() {
        let c: Vec<f64> = fine.iter().map(|f| f.counts[k].1).collect();
        let ratio: Vec<f64> = c.iter().zip(&m).filter(|p| *p.1 > 0.0).map(|(c, m)| c / m).collect();
        eps_stats.push((e, pearson(&c, &m), coefficient_of_variation(&ratio)));
    }
    let (e_fine, corr, _) = eps_stats[2];
    items.push(CheckItem::at_least(8, format!("corr(eps^delta N, M_inf) at eps = {e_fine}"), corr, CORR_MIN));
    for w in eps_stats.windows(2) {
        items.push(CheckItem::below(
            8,
            format!("CV of ratio at eps = {} below eps = {}", w[1].0, w[0].0),
            w[1].2,
            w[0].2,
        ));
    }

    let fine_binned: Vec<BinnedSample> = fine
        .iter()
        .map(|f| BinnedSample {
            counts: f.bins.clone(),
            m_inf: f.m,
        })
        .collect();
    let nu_f = binned_line_measure(&fine_binned, fine_y, delta, &bins)?;
    let nu_c = binned_line_measure(&coarse, coarse_y, delta, &bins)?;
    let mut bin_rows = Vec::new();
    let mut worst: f64 = 0.0;
    for b in 0..BINS {
        let pooled = (nu_c.se[b].powi(2) + nu_f.se[b].powi(2)).sqrt();
        let z = if pooled > 0.0 { (nu_c.nu[b] - nu_f.nu[b]) / pooled } else { 0.0 };
        worst = worst.max(z.abs());
        bin_rows.push(BinRow {
            bin_lo: bins[b].0,
            bin_hi: bins[b].1,
            nu_coarse: nu_c.nu[b],
            se_coarse: nu_c.se[b],
            nu_fine: nu_f.nu[b],
            se_fine: nu_f.se[b],
            z,
        });
    }
    items.push(CheckItem::at_most(
        9,
        format!("max |z| of line measure, y = {coarse_y} vs {fine_y}"),
        worst,
        Z_BIN,
    ));

    let rows = fine.iter().enumerate().flat_map(|(i, f)| {
        f.counts.iter().map(move |&(e, c)| TreeRow {
            tree_id: i as u64,
            m_inf_hat: f.m,
            eps: e,
            rescaled_count: c,
        })
    });
    out.csv("measure.csv", rows)?;
    out.csv("line_measure.csv", bin_rows)?;
    out.json(
        "measure_summary.json",
        &MeasureSummary {
            trees: n,
            floor: fine_y,
            m_inf_mean: m.iter().sum::<f64>() / n as f64,
            eps: eps_stats,
            nu_total_coarse: nu_c.total,
            nu_total_fine: nu_f.total,
        },
    )?;
    Ok(items)
}
