//! Σ L² on stopping lines of 𝒯̃, and the tail of the largest exit label.

use frag_core::carpet::loop_tail_mle;
use frag_core::explore::disk_jump_rate;
use frag_core::quad::{integrate_to_inf, Tolerance};
use frag_core::stats::{hill, mean_se};
use frag_core::tree::{count_jumps, grow_tree, CountScope, LabelSet, PieceRecord};
use frag_core::{DiskRates, Sign, StopRule, StreamKey, TreeConfig, Variant};
use serde::Serialize;

use super::{par_fold, par_map, Output};
use crate::config::ExperimentConfig;
use crate::manifest::CheckItem;

const EXIT: (f64, f64) = (0.5, 2.0);
const COARSE_LEVEL: f64 = 1.0 / 16.0;
const Z_MEAN: f64 = 3.0;
const SE_MAX: f64 = 0.02;

/// Exit trees for the tail, per replicate.
const TAIL_FACTOR: u64 = 1000;
const TAIL_CHUNK: u64 = 100_000;
const TAIL_X0: f64 = 2.0;
const TAIL_GRID: usize = 11;
const TAIL_TOL: f64 = 0.15;
/// Compensator table: points in ln y over the exit interval, and the
/// largest step in ln y when integrating along a piece.
const TABLE_POINTS: usize = 401;
const STEP: f64 = 0.02;
const COUNT_FLOOR: f64 = 1.0 / 16.0;
const COUNT_CUT: f64 = 0.5;
const COUNT_XS: [f64; 3] = [1.0, 2.0, 4.0];

#[derive(Serialize)]
struct LineRow {
    line: String,
    labels: &'static str,
    estimate: f64,
    se: f64,
    n: usize,
}

#[derive(Serialize)]
struct TailRow {
    x: f64,
    empirical: f64,
    estimate: f64,
    se: f64,
    scaled: f64,
}

#[derive(Serialize)]
struct CountRow {
    x: f64,
    mean: f64,
    se: f64,
    bound: f64,
}

#[derive(Serialize)]
struct TailSummary {
    trees: u64,
    loops_above_x0: usize,
    mle_index: f64,
    mle_se: f64,
    hill_index: f64,
    hill_se: f64,
    hill_k: usize,
    target: f64,
    c_low: f64,
    c_high: f64,
}

#[derive(Default)]
struct TailAcc {
    n: u64,
    /// Largest labels of at least 1.
    big: Vec<f64>,
    /// (size, pre-jump state) of upward jumps of at least TAIL_X0.
    loops: Vec<(f64, f64)>,
    /// Sums and sums of squares of the compensator per grid point.
    comp: Vec<(f64, f64)>,
}

/// Rate of upward jumps from y landing at x or above, tabulated on a
/// uniform grid in ln y for each x above the exit level. Before the exit
/// only the followed branch moves, so P[l0 >= x] = E ∫_0^T rate(Y_t, x) dt.
struct Compensator {
    xs: Vec<f64>,
    table: Vec<Vec<f64>>,
    z_lo: f64,
    dz: f64,
    alpha: f64,
}

impl Compensator {
    fn new(rates: &DiskRates, xs: &[f64]) -> anyhow::Result<Self> {
        let (z_lo, z_hi) = (EXIT.0.ln(), EXIT.1.ln());
        let dz = (z_hi - z_lo) / (TABLE_POINTS - 1) as f64;
        let tol = Tolerance::rel(1e-10);
        let mut table = Vec::with_capacity(TABLE_POINTS);
        for k in 0..TABLE_POINTS {
            let y = (z_lo + dz * k as f64).exp();
            let row = xs
                .iter()
                .map(|&x| integrate_to_inf(|l| disk_jump_rate(rates, y, l, Sign::Plus), x - y, tol))
                .collect::<frag_core::Result<Vec<_>>>()?;
            table.push(row);
        }
        Ok(Self {
            xs: xs.to_vec(),
            table,
            z_lo,
            dz,
            alpha: rates.alpha,
        })
    }

    fn add(&self, z: f64, dt: f64, out: &mut [f64]) {
        let x = ((z - self.z_lo) / self.dz).clamp(0.0, (TABLE_POINTS - 1) as f64);
        let k = (x.floor() as usize).min(TABLE_POINTS - 2);
        let w = x - k as f64;
        for (j, o) in out.iter_mut().enumerate() {
            *o += ((1.0 - w) * self.table[k][j] + w * self.table[k + 1][j]) * dt;
        }
    }

    fn integrate(&self, pieces: &[PieceRecord]) -> Vec<f64> {
        let mut out = vec![0.0; self.xs.len()];
        for p in pieces.iter().filter(|p| p.particle == 0) {
            let n = ((p.z1 - p.z0).abs() / STEP).ceil().max(1.0) as usize;
            let span = p.z1 - p.z0;
            for k in 0..n {
                let za = p.z0 + span * k as f64 / n as f64;
                let zb = p.z0 + span * (k + 1) as f64 / n as f64;
                let d = self.alpha * (zb - za);
                let phi = if d.abs() < 1e-12 { 1.0 } else { d.exp_m1() / d };
                let dt = (self.alpha * za).exp() * (p.dtau / n as f64) * phi;
                self.add(0.5 * (za + zb), dt, &mut out);
            }
        }
        out
    }
}

pub fn run(cfg: &ExperimentConfig, out: &mut Output) -> anyhow::Result<Vec<CheckItem>> {
    let rel = cfg.relations();
    let rates = DiskRates::policy(rel.alpha, rel.u);
    let policy = cfg.branch_policy();
    let seed = cfg.master_seed;
    let n = cfg.replicates;
    let mut items = Vec::new();
    let mut rows = Vec::new();

    // Exit line of 𝒯̃.
    let mut exit = TreeConfig::new(
        Variant::TTilde,
        policy,
        1.0,
        StopRule::ExitInterval {
            lower: EXIT.0,
            upper: EXIT.1,
        },
    );
    exit.engine.eta = cfg.eta;
    exit.observe.qs = vec![2.0];
    let sums = par_map(n, |i| {
        let t = grow_tree(&rates, &exit, seed, StreamKey::replicate(i).sub("area-exit"))?;
        let o = t.observed_line(None).expect("observed exit line");
        Ok([o.total(LabelSet::TTilde, 0), o.total(LabelSet::T, 0)])
    })?;
    let exit_name = format!("exit ({}, {})", EXIT.0, EXIT.1);
    line_items(&mut items, &mut rows, &exit_name, &sums);

    // Mass-floor lines.
    let mut levels = vec![cfg.floor];
    if COARSE_LEVEL > cfg.floor {
        levels.insert(0, COARSE_LEVEL);
    }
    let mut floor = TreeConfig::new(Variant::TTilde, policy, 1.0, StopRule::MassFloor { floor: cfg.floor });
    floor.engine.eta = cfg.eta;
    floor.observe.qs = vec![2.0];
    floor.observe.levels = levels.clone();
    let sums = par_map(n, |i| {
        let t = grow_tree(&rates, &floor, seed, StreamKey::replicate(i).sub("area-floor"))?;
        Ok(levels
            .iter()
            .map(|&y| {
                let o = t.observed_line(Some(y)).expect("observed level");
                [o.total(LabelSet::TTilde, 0), o.total(LabelSet::T, 0)]
            })
            .collect::<Vec<_>>())
    })?;
    for (li, y) in levels.iter().enumerate() {
        let col: Vec<[f64; 2]> = sums.iter().map(|s| s[li]).collect();
        line_items(&mut items, &mut rows, &format!("mass floor {y}"), &col);
    }
    out.csv("area_martingale.csv", rows)?;

    // Largest label on the exit line of 𝒯, and loops above TAIL_X0.
    let target = 2.0 * rel.alpha + 1.0;
    let mut tail_cfg = TreeConfig::new(
        Variant::T,
        policy,
        1.0,
        StopRule::ExitInterval {
            lower: EXIT.0,
            upper: EXIT.1,
        },
    );
    tail_cfg.engine.eta = cfg.eta;
    tail_cfg.record_pieces = true;
    let xs: Vec<f64> = (0..TAIL_GRID)
        .map(|k| TAIL_X0 * 10f64.powf(k as f64 / (TAIL_GRID - 1) as f64))
        .collect();
    let comp = Compensator::new(&rates, &xs[1..])?;
    let total = n * TAIL_FACTOR;
    let acc = par_fold(
        total,
        TAIL_CHUNK,
        |i| {
            let t = grow_tree(&rates, &tail_cfg, seed, StreamKey::replicate(i).sub("tail"))?;
            let l0 = t
                .line_labels
                .as_ref()
                .map(|l| l.masses(LabelSet::T).into_iter().fold(0.0, f64::max))
                .unwrap_or(0.0);
            let loops: Vec<(f64, f64)> = t
                .events
                .iter()
                .filter(|e| e.event.sign == Sign::Plus && e.event.size >= TAIL_X0)
                .map(|e| (e.event.size, e.pre))
                .collect();
            Ok((l0, loops, comp.integrate(&t.pieces)))
        },
        TailAcc {
            comp: vec![(0.0, 0.0); TAIL_GRID - 1],
            ..TailAcc::default()
        },
        |acc, (l0, loops, c)| {
            acc.n += 1;
            if l0 >= 1.0 {
                acc.big.push(l0);
            }
            acc.loops.extend(loops);
            for (a, v) in acc.comp.iter_mut().zip(c) {
                a.0 += v;
                a.1 += v * v;
            }
        },
    )?;
    let nf = acc.n as f64;
    let tail_rows: Vec<TailRow> = xs
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let hits = acc.big.iter().filter(|&&v| v >= x).count() as f64;
            let empirical = hits / nf;
            // At the exit level itself use the indicator; above it the
            // compensator.
            let (estimate, se) = if j == 0 {
                (empirical, (empirical * (1.0 - empirical) / nf).sqrt())
            } else {
                let (s, s2) = acc.comp[j - 1];
                let m = s / nf;
                (m, ((s2 / nf - m * m).max(0.0) / nf).sqrt())
            };
            TailRow {
                x,
                empirical,
                estimate,
                se,
                scaled: estimate * x.powf(target),
            }
        })
        .collect();
    let c_low = tail_rows.iter().map(|r| r.scaled).fold(f64::INFINITY, f64::min);
    let c_high = tail_rows.iter().map(|r| r.scaled).fold(0.0, f64::max);
    items.push(CheckItem::above(10, "c in c x^(-2alpha-1) <= P[l0 >= x] on [2, 20]", c_low, 0.0));
    items.push(CheckItem::below(10, "C in P[l0 >= x] <= C x^(-2alpha-1) on [2, 20]", c_high, f64::MAX));
    let fit = loop_tail_mle(&acc.loops, TAIL_X0)?;
    items.push(CheckItem::within(10, "fitted tail exponent (MLE, loops >= 2)", fit.index, target, TAIL_TOL));
    let h = hill(&acc.big, TAIL_X0);
    out.csv("tail_exceedance.csv", tail_rows)?;

    // Expected number of loops of size at least x.
    let mut count_cfg = TreeConfig::new(Variant::T, policy, 1.0, StopRule::MassFloor { floor: COUNT_FLOOR });
    count_cfg.engine.eta = cfg.eta;
    count_cfg.engine.abs_cut = COUNT_CUT;
    let counts = par_map(n, |i| {
        let t = grow_tree(&rates, &count_cfg, seed, StreamKey::replicate(i).sub("counts"))?;
        COUNT_XS
            .iter()
            .map(|&x| count_jumps(&t, (x, f64::INFINITY), Sign::Plus, CountScope::WholeTree).map(|c| c as f64))
            .collect::<frag_core::Result<Vec<_>>>()
    })?;
    let mut count_rows = Vec::new();
    for (j, &x) in COUNT_XS.iter().enumerate() {
        let m = mean_se(&counts.iter().map(|c| c[j]).collect::<Vec<_>>());
        items.push(CheckItem::at_most(10, format!("E N[{x}, inf)"), m.mean, 1.0 / (x * x)));
        count_rows.push(CountRow {
            x,
            mean: m.mean,
            se: m.se,
            bound: 1.0 / (x * x),
        });
    }
    out.csv("loop_counts.csv", count_rows)?;
    out.json(
        "tail_summary.json",
        &TailSummary {
            trees: acc.n,
            loops_above_x0: fit.k,
            mle_index: fit.index,
            mle_se: fit.se,
            hill_index: h.index,
            hill_se: h.se,
            hill_k: h.k,
            target,
            c_low,
            c_high,
        },
    )?;
    Ok(items)
}

fn line_items(items: &mut Vec<CheckItem>, rows: &mut Vec<LineRow>, line: &str, sums: &[[f64; 2]]) {
    let full = mean_se(&sums.iter().map(|s| s[0]).collect::<Vec<_>>());
    let t = mean_se(&sums.iter().map(|s| s[1]).collect::<Vec<_>>());
    items.push(CheckItem::within(5, format!("E sum L^2, {line}"), full.mean, 1.0, Z_MEAN * full.se));
    items.push(CheckItem::at_most(5, format!("s.e. of E sum L^2, {line}"), full.se, SE_MAX));
    items.push(CheckItem::above(5, format!("(1 - E sum l^2) / s.e., {line}"), (1.0 - t.mean) / t.se, Z_MEAN));
    rows.push(LineRow {
        line: line.to_string(),
        labels: "Ttilde",
        estimate: full.mean,
        se: full.se,
        n: full.n,
    });
    rows.push(LineRow {
        line: line.to_string(),
        labels: "T",
        estimate: t.mean,
        se: t.se,
        n: t.n,
    });
}
