//! Jump-band counts, self-similarity and the compensated mean of the
//! stable sampler.

use frag_core::stable::{sample_path, StableJumpLaw};
use frag_core::stats::{ks_two_sample, mean_se};
use frag_core::{Sign, StreamKey};
use serde::Serialize;

use super::{par_map, Output};
use crate::config::ExperimentConfig;
use crate::manifest::CheckItem;

/// Band edges in units of the cutoff.
const BAND_EDGES: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, f64::INFINITY];
/// Paths for the band counts, as a fraction of the replicates.
const BAND_FRACTION: u64 = 20;
const Z_BAND: f64 = 4.0;
const KS_LEVEL: f64 = 0.01;

#[derive(Serialize)]
struct BandRow {
    sign: &'static str,
    lo: f64,
    hi: f64,
    mean_count: f64,
    expected: f64,
    se: f64,
    z: f64,
}

#[derive(Serialize)]
struct Summary {
    band_paths: u64,
    ks_paths: u64,
    cutoff: f64,
    ks_statistic: f64,
    ks_p_value: f64,
    terminal_mean: f64,
    terminal_se: f64,
}

pub fn run(cfg: &ExperimentConfig, out: &mut Output) -> anyhow::Result<Vec<CheckItem>> {
    let rel = cfg.relations();
    let a = rel.alpha;
    let law = StableJumpLaw::new(a, rel.u, 1.0)?;
    let cut = cfg.cutoff;
    let seed = cfg.master_seed;
    let mut items = Vec::new();

    let nb = (cfg.replicates / BAND_FRACTION).max(2);
    let bands: Vec<(Sign, f64, f64)> = [Sign::Plus, Sign::Minus]
        .into_iter()
        .flat_map(|s| BAND_EDGES.windows(2).map(move |w| (s, w[0] * cut, w[1] * cut)))
        .collect();
    let counts = par_map(nb, |i| {
        let mut rng = StreamKey::replicate(i).sub("bands").rng(seed);
        let p = sample_path(&law, 1.0, cut, 0.0, &mut rng)?;
        Ok(bands
            .iter()
            .map(|&(s, lo, hi)| p.jumps.iter().filter(|j| j.sign == s && j.size >= lo && j.size < hi).count() as f64)
            .collect::<Vec<_>>())
    })?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (b, &(sign, lo, hi)) in bands.iter().enumerate() {
        let col: Vec<f64> = counts.iter().map(|c| c[b]).collect();
        let ms = mean_se(&col);
        let expected = law.band_mass(sign, lo, hi);
        let z = (ms.mean - expected) / ms.se;
        worst = worst.max(z.abs());
        rows.push(BandRow {
            sign: sign.symbol(),
            lo,
            hi,
            mean_count: ms.mean,
            expected,
            se: ms.se,
            z,
        });
    }
    items.push(CheckItem::at_most(3, "max |z| of band counts", worst, Z_BAND));
    out.csv("stable_bands.csv", rows)?;

    // X_1 against 2^{-1/α} X_2, the latter cut at the scaled cutoff so that
    // both laws agree exactly.
    let nk = cfg.replicates;
    let scale = 2f64.powf(1.0 / a);
    let pairs = par_map(nk, |i| {
        let key = StreamKey::replicate(i);
        let x1 = sample_path(&law, 1.0, cut, 0.0, &mut key.sub("ks-1").rng(seed))?.terminal();
        let x2 = sample_path(&law, 2.0, cut * scale, 0.0, &mut key.sub("ks-2").rng(seed))?.terminal();
        Ok((x1, x2 / scale))
    })?;
    let (x1, x2): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let ks = ks_two_sample(&x1, &x2);
    items.push(CheckItem::at_least(3, "KS p-value, X_1 vs 2^(-1/alpha) X_2", ks.p_value, KS_LEVEL));
    let m = mean_se(&x1);
    items.push(CheckItem::within(3, "terminal mean of X_1", m.mean, 0.0, Z_BAND * m.se));
    out.json(
        "stable_summary.json",
        &Summary {
            band_paths: nb,
            ks_paths: nk,
            cutoff: cut,
            ks_statistic: ks.statistic,
            ks_p_value: ks.p_value,
            terminal_mean: m.mean,
            terminal_se: m.se,
        },
    )?;
    Ok(items)
}
