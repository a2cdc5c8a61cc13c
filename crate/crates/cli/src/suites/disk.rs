//! The disk process Y: binned jump intensities against the rate formula,
//! and direct estimates against reweighted stable paths.

use frag_core::explore::{
    disk_jump_rate, sample_disk_policy_with, stable_path_weight, Absorption, Bounds, EngineEvent, PathObserver, Piece,
    PolicyEngine, PolicyOptions,
};
use frag_core::quad::{integrate, Tolerance};
use frag_core::stable::sample_path_with;
use frag_core::stats::mean_se;
use frag_core::{DiskRates, Sign, SmallJumps, StableJumpLaw, StreamKey};
use serde::Serialize;

use super::{par_map, Output};
use crate::config::ExperimentConfig;
use crate::manifest::CheckItem;

/// State bins: 8 log-spaced bins on [1/4, 4].
const STATE_LO: f64 = 0.25;
const STATE_HI: f64 = 4.0;
const STATE_BINS: usize = 8;
/// Size bins per sign: 4 log-spaced bins on [2, 12] cutoffs.
const SIZE_LO: f64 = 2.0;
const SIZE_HI: f64 = 12.0;
const SIZE_BINS: usize = 4;
/// Paths for the intensity grid, as a fraction of the replicates.
const GRID_FRACTION: u64 = 10;
const Z_GRID: f64 = 3.0;
/// Largest step in ln y of the occupation integral.
const STEP: f64 = 0.02;
const TABLE_POINTS: usize = 801;

const IS_HORIZON: f64 = 0.3;
const IS_FLOOR: f64 = 0.4;
const Z_IS: f64 = 3.0;

fn log_edges(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect()
}

fn bin_of(edges: &[f64], x: f64) -> Option<usize> {
    if !(x >= edges[0] && x < edges[edges.len() - 1]) {
        return None;
    }
    Some(edges.partition_point(|&e| e <= x) - 1)
}

/// Cells are (state bin, size cell) with size cells 0..4 downward and
/// 4..8 upward.
struct Grid {
    state_edges: Vec<f64>,
    size_edges: Vec<f64>,
    /// Λ_cell(y) on a uniform grid in ln y.
    table: Vec<[f64; 2 * SIZE_BINS]>,
    z_lo: f64,
    dz: f64,
    alpha: f64,
}

impl Grid {
    fn new(rates: &DiskRates, cutoff: f64) -> anyhow::Result<Self> {
        let size_edges = log_edges(SIZE_LO * cutoff, SIZE_HI * cutoff, SIZE_BINS);
        let (z_lo, z_hi) = (STATE_LO.ln(), STATE_HI.ln());
        let dz = (z_hi - z_lo) / (TABLE_POINTS - 1) as f64;
        let tol = Tolerance::rel(1e-10);
        let mut table = Vec::with_capacity(TABLE_POINTS);
        for k in 0..TABLE_POINTS {
            let y = (z_lo + dz * k as f64).exp();
            let mut row = [0.0; 2 * SIZE_BINS];
            for (c, v) in row.iter_mut().enumerate() {
                let sign = if c < SIZE_BINS { Sign::Minus } else { Sign::Plus };
                let j = c % SIZE_BINS;
                *v = integrate(|l| disk_jump_rate(rates, y, l, sign), size_edges[j], size_edges[j + 1], tol)?;
            }
            table.push(row);
        }
        Ok(Self {
            state_edges: log_edges(STATE_LO, STATE_HI, STATE_BINS),
            size_edges,
            table,
            z_lo,
            dz,
            alpha: rates.alpha,
        })
    }

    fn rates_at(&self, z: f64) -> [f64; 2 * SIZE_BINS] {
        let x = ((z - self.z_lo) / self.dz).clamp(0.0, (TABLE_POINTS - 1) as f64);
        let k = (x.floor() as usize).min(TABLE_POINTS - 2);
        let w = x - k as f64;
        let mut out = [0.0; 2 * SIZE_BINS];
        for (c, o) in out.iter_mut().enumerate() {
            *o = (1.0 - w) * self.table[k][c] + w * self.table[k + 1][c];
        }
        out
    }

    fn cell(&self, state_bin: usize, c: usize) -> usize {
        state_bin * 2 * SIZE_BINS + c
    }
}

/// Observed counts minus the occupation-integral expectation, per cell.
struct Occupation<'a> {
    grid: &'a Grid,
    observed: Vec<f64>,
    expected: Vec<f64>,
}

impl Occupation<'_> {
    fn add_segment(&mut self, za: f64, zb: f64, dtau: f64) {
        let d = self.grid.alpha * (zb - za);
        let phi = if d.abs() < 1e-12 { 1.0 } else { d.exp_m1() / d };
        let dt = (self.grid.alpha * za).exp() * dtau * phi;
        let zm = 0.5 * (za + zb);
        if let Some(s) = bin_of(&self.grid.state_edges, zm.exp()) {
            let lam = self.grid.rates_at(zm);
            for (c, l) in lam.iter().enumerate() {
                self.expected[self.grid.cell(s, c)] += l * dt;
            }
        }
    }
}

impl PathObserver for Occupation<'_> {
    fn piece(&mut self, p: &Piece) {
        let n = ((p.z1 - p.z0).abs() / STEP).ceil().max(1.0) as usize;
        let span = p.z1 - p.z0;
        for k in 0..n {
            let za = p.z0 + span * k as f64 / n as f64;
            let zb = p.z0 + span * (k + 1) as f64 / n as f64;
            let dtau = p.dtau / n as f64;
            let (lo, hi) = (za.min(zb), za.max(zb));
            let mut cuts: Vec<f64> = self
                .grid
                .state_edges
                .iter()
                .map(|e| e.ln())
                .filter(|&e| e > lo && e < hi)
                .collect();
            if zb < za {
                cuts.reverse();
            }
            let mut prev = za;
            for z in cuts.into_iter().chain(std::iter::once(zb)) {
                let frac = if zb != za { (z - prev) / (zb - za) } else { 1.0 };
                self.add_segment(prev, z, dtau * frac);
                prev = z;
            }
        }
    }

    fn event(&mut self, e: &EngineEvent) {
        let Some(s) = bin_of(&self.grid.state_edges, e.pre) else { return };
        let Some(j) = bin_of(&self.grid.size_edges, e.size) else { return };
        let c = if e.sign == Sign::Minus { j } else { SIZE_BINS + j };
        self.observed[self.grid.cell(s, c)] += 1.0;
    }
}

#[derive(Serialize)]
struct CellRow {
    state_lo: f64,
    state_hi: f64,
    sign: &'static str,
    size_lo: f64,
    size_hi: f64,
    observed: f64,
    expected: f64,
    se: f64,
    z: f64,
}

#[derive(Serialize)]
struct IsRow {
    functional: &'static str,
    direct: f64,
    direct_se: f64,
    reweighted: f64,
    reweighted_se: f64,
    z: f64,
}

const FUNCTIONALS: [&str; 3] = ["1{Y_T < 1}", "1{1 <= Y_T < 1.5}", "1{T < zeta}"];

fn functionals(y: f64) -> [f64; 3] {
    [(y < 1.0) as u8 as f64, (1.0..1.5).contains(&y) as u8 as f64, 1.0]
}

pub fn run(cfg: &ExperimentConfig, out: &mut Output) -> anyhow::Result<Vec<CheckItem>> {
    let rel = cfg.relations();
    let rates = DiskRates::policy(rel.alpha, rel.u);
    let seed = cfg.master_seed;
    let mut items = Vec::new();

    // Intensity grid.
    let grid = Grid::new(&rates, cfg.cutoff)?;
    let engine = PolicyEngine::new(
        &rates,
        PolicyOptions {
            abs_cut: cfg.cutoff,
            eta: cfg.eta,
            small: SmallJumps::Drop,
            ..PolicyOptions::default()
        },
    )?;
    let bounds = Bounds {
        horizon: cfg.horizon,
        ..Bounds::interval(STATE_LO, STATE_HI)
    };
    let cells = STATE_BINS * 2 * SIZE_BINS;
    let n = (cfg.replicates / GRID_FRACTION).max(2);
    let per_path = par_map(n, |i| {
        let mut rng = StreamKey::replicate(i).sub("intensity").rng(seed);
        let mut occ = Occupation {
            grid: &grid,
            observed: vec![0.0; cells],
            expected: vec![0.0; cells],
        };
        engine.run(1.0, 0.0, &bounds, &mut rng, &mut occ)?;
        Ok((occ.observed, occ.expected))
    })?;
    let mut rows = Vec::with_capacity(cells);
    let mut worst: f64 = 0.0;
    for s in 0..STATE_BINS {
        for c in 0..2 * SIZE_BINS {
            let k = grid.cell(s, c);
            let diff: Vec<f64> = per_path.iter().map(|(o, e)| o[k] - e[k]).collect();
            let d = mean_se(&diff);
            let obs = per_path.iter().map(|(o, _)| o[k]).sum::<f64>() / n as f64;
            let exp = per_path.iter().map(|(_, e)| e[k]).sum::<f64>() / n as f64;
            let z = if d.se > 0.0 { d.mean / d.se } else { 0.0 };
            worst = worst.max(z.abs());
            let j = c % SIZE_BINS;
            rows.push(CellRow {
                state_lo: grid.state_edges[s],
                state_hi: grid.state_edges[s + 1],
                sign: if c < SIZE_BINS { "-" } else { "+" },
                size_lo: grid.size_edges[j],
                size_hi: grid.size_edges[j + 1],
                observed: obs,
                expected: exp,
                se: d.se,
                z,
            });
        }
    }
    items.push(CheckItem::at_most(4, "max |z| over the 8x8 intensity grid", worst, Z_GRID));
    out.csv("disk_intensity.csv", rows)?;

    // Direct Y against stable paths reweighted by (Y_0/Y_T)^{α+1}.
    let n = cfg.replicates;
    let opts = PolicyOptions {
        abs_cut: cfg.cutoff,
        eta: cfg.eta,
        small: SmallJumps::Gaussian,
        ..PolicyOptions::default()
    };
    let is_bounds = Bounds {
        horizon: IS_HORIZON,
        ..Bounds::floor(IS_FLOOR)
    };
    let law = StableJumpLaw::new(rel.alpha, rel.u, 1.0)?;
    let pairs = par_map(n, |i| {
        let key = StreamKey::replicate(i);
        let p = sample_disk_policy_with(&rates, 1.0, &is_bounds, opts, &mut key.sub("direct").rng(seed))?;
        let alive = (p.reason == Absorption::Horizon) as u8 as f64;
        let direct = functionals(p.end_state).map(|v| v * alive);
        let mut rng = key.sub("reweighted").rng(seed);
        let s = sample_path_with(&law, IS_HORIZON, cfg.cutoff, 1.0, SmallJumps::Gaussian, &mut rng)?;
        let w = stable_path_weight(&s, rel.alpha, IS_FLOOR, &mut rng);
        let rew = functionals(s.terminal()).map(|v| v * w);
        Ok((direct, rew))
    })?;
    let mut is_rows = Vec::new();
    for (f, name) in FUNCTIONALS.iter().enumerate() {
        let d = mean_se(&pairs.iter().map(|p| p.0[f]).collect::<Vec<_>>());
        let r = mean_se(&pairs.iter().map(|p| p.1[f]).collect::<Vec<_>>());
        let pooled = (d.se * d.se + r.se * r.se).sqrt();
        items.push(CheckItem::within(4, format!("direct vs reweighted {name}"), d.mean, r.mean, Z_IS * pooled));
        is_rows.push(IsRow {
            functional: name,
            direct: d.mean,
            direct_se: d.se,
            reweighted: r.mean,
            reweighted_se: r.se,
            z: (d.mean - r.mean) / pooled,
        });
    }
    out.csv("disk_reweighting.csv", is_rows)?;
    Ok(items)
}
