//! Malthusian exponent, cascade martingales and the estimators of the
//! natural measure on the carpet.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::explore::{DiskRates, PolicyOptions};
use crate::quad::{integrate, integrate_to_inf, Tolerance};
use crate::relations::KappaRelations;
use crate::rng::StreamKey;
use crate::series::{Compensation, KernelSeries};
use crate::stable::{Sign, SmallJumps};
use crate::stats::{bootstrap_se, mean_se};
use crate::tree::{
    count_jumps, grow_tree, stopping_line, CountScope, FragTree, LabelSet, StopRule, TreeConfig,
};

/// Estimators refuse ensembles losing more than this fraction of mass to
/// the particle budget.
pub const TRUNCATION_THRESHOLD: f64 = 1e-3;
/// Cutoffs used for the extrapolated cumulant.
pub const RICHARDSON_EPS: [f64; 3] = [1e-3, 1e-4, 1e-5];
const QUAD_TOL: Tolerance = Tolerance {
    rel: 1e-9,
    abs: 1e-13,
};

fn check_cumulant_args(q: f64, rel: &KappaRelations) -> Result<()> {
    let a = rel.alpha;
    if !(q > a && q < 2.0 * a + 1.0) {
        return Err(domain("q", q, "(alpha, 2 alpha + 1)"));
    }
    Ok(())
}

/// The cumulant of the T labels with the jumps below eps removed:
///   I₊(ε) + I₋(ε) + q(1−u)·ε^{1−α}/(α−1)
/// with
///   I₊ = u ∫_ε^∞ ((1+l)^q − 1) l^{−α−1}(1+l)^{−α−1} dl,
///   I₋ = ∫_ε^{1/2} (l^q + (1−l)^q − 1) l^{−α−1}(1−l)^{−α−1} dl.
/// The last term cancels the ε^{1−α} divergence of I₊ + I₋.
pub fn cumulant_residual(q: f64, rel: &KappaRelations, eps: f64) -> Result<f64> {
    check_cumulant_args(q, rel)?;
    if !(eps > 0.0 && eps < 0.25) {
        return Err(domain("eps", eps, "(0, 1/4)"));
    }
    let a = rel.alpha;
    let u = rel.u;
    // The q·l parts are integrated in closed form on [ε, 1/2].
    let smooth = |l: f64| {
        let up = u * (l.ln_1p() * q).exp_m1() * (-(a + 1.0) * l.ln_1p()).exp() - u * q * l;
        let down = ((-l).ln_1p() * q).exp_m1() * (-(a + 1.0) * (-l).ln_1p()).exp() + q * l;
        let piece = (q * l.ln() - (a + 1.0) * (-l).ln_1p()).exp();
        (up + down) * l.powf(-a - 1.0) + piece * l.powf(-a - 1.0)
    };
    let body = integrate_log_stable(smooth, eps, 0.5)?;
    let linear = (u - 1.0) * q * (eps.powf(1.0 - a) - 0.5f64.powf(1.0 - a)) / (a - 1.0);
    let up_tail = u * integrate_to_inf(
        |l: f64| ((1.0 + l).powf(q) - 1.0) * l.powf(-a - 1.0) * (1.0 + l).powf(-a - 1.0),
        0.5,
        QUAD_TOL,
    )?;
    Ok(body + linear + up_tail + q * (1.0 - u) * eps.powf(1.0 - a) / (a - 1.0))
}

fn integrate_log_stable<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    integrate(|s: f64| {
        let l = s.exp();
        f(l) * l
    }, a.ln(), b.ln(), QUAD_TOL)
}

/// Leading part of the cumulant carried by jumps below eps.
fn cumulant_tail(q: f64, rel: &KappaRelations, eps: f64) -> f64 {
    let a = rel.alpha;
    let c2 = q * (q - 1.0) / 2.0 - q * (a + 1.0);
    (rel.u + 1.0) * c2 * eps.powf(2.0 - a) / (2.0 - a) + eps.powf(q - a) / (q - a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantLimit {
    pub value: f64,
    /// Difference between the three- and two-point extrapolants.
    pub spread: f64,
}

/// ε → 0 limit of [`cumulant_residual`] by Richardson extrapolation over
/// [`RICHARDSON_EPS`], after adding the leading small-jump terms.
pub fn cumulant_limit(q: f64, rel: &KappaRelations) -> Result<CumulantLimit> {
    check_cumulant_args(q, rel)?;
    let a = rel.alpha;
    let mut v = [0.0; 3];
    for (slot, &e) in v.iter_mut().zip(&RICHARDSON_EPS) {
        *slot = cumulant_residual(q, rel, e)? + cumulant_tail(q, rel, e);
    }
    // Remaining error: A ε^{q−α+1} + B ε^{3−α}.
    let (p1, p2) = (q - a + 1.0, 3.0 - a);
    let e = RICHARDSON_EPS;
    let two = |i: usize, j: usize, p: f64| {
        let (ri, rj) = (e[i].powf(p), e[j].powf(p));
        (v[j] * ri - v[i] * rj) / (ri - rj)
    };
    let (pa, pb) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
    let e01 = two(0, 1, pa);
    let e12 = two(1, 2, pa);
    let ratio = (e[0] / e[1]).powf(pb);
    let three = (e12 * ratio - e01) / (ratio - 1.0);
    let spread = (three - e12).abs();
    if spread > 1e-5 {
        return Err(Error::Extrapolation { spread });
    }
    Ok(CumulantLimit {
        value: three,
        spread,
    })
}

/// The cumulant of the T̃ labels: T plus the loops as offspring.
pub fn cumulant_tilde(q: f64, rel: &KappaRelations) -> Result<f64> {
    let base = cumulant_limit(q, rel)?.value;
    let a = rel.alpha;
    // ∫_0^1 l^{q−α−1}(1+l)^{−α−1} dl after l = s^{1/(q−α)}.
    let k = 1.0 / (q - a);
    let near = integrate(|s: f64| (1.0 + s.powf(k)).powf(-a - 1.0), 0.0, 1.0, QUAD_TOL)? * k;
    let far = integrate_to_inf(|l: f64| l.powf(q - a - 1.0) * (1.0 + l).powf(-a - 1.0), 1.0, QUAD_TOL)?;
    let loops = rel.u * (near + far);
    Ok(base + loops)
}

/// Bisection of the extrapolated cumulant on [α + 0.3, α + 0.7].
pub fn cumulant_root(rel: &KappaRelations) -> Result<f64> {
    let (mut lo, mut hi) = (rel.alpha + 0.3, rel.alpha + 0.7);
    let f = |q: f64| cumulant_limit(q, rel).map(|c| c.value);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracket(format!("cumulant has one sign on [{lo}, {hi}]")));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (f(mid)? > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeState {
    pub depth: usize,
    pub m: f64,
    pub exponent: f64,
    pub line_rule: StopRule,
}

/// Iterates the exit-interval line generation by generation: every T label
/// ℓ of depth j starts a tree stopped on leaving (ℓ·lower, ℓ·upper).
/// Removed small pieces enter through their compensation.
pub fn cascade(
    rates: &DiskRates,
    engine: PolicyOptions,
    exponent: f64,
    (lower, upper): (f64, f64),
    depth: usize,
    max_population: usize,
    seed: u64,
    key: StreamKey,
) -> Result<Vec<CascadeState>> {
    let rule = StopRule::ExitInterval { lower, upper };
    let mut states = vec![CascadeState {
        depth: 0,
        m: 1.0,
        exponent,
        line_rule: rule,
    }];
    let mut population = vec![(1.0f64, key)];
    let mut carried = 0.0;
    for j in 1..=depth {
        let mut next = Vec::new();
        for (mass, k) in &population {
            let mut cfg = TreeConfig::new(
                crate::tree::Variant::T,
                engine.policy,
                *mass,
                StopRule::ExitInterval {
                    lower: lower * mass,
                    upper: upper * mass,
                },
            );
            cfg.engine = PolicyOptions {
                abs_cut: f64::INFINITY,
                ..engine
            };
            cfg.observe.qs = vec![exponent];
            let tree = grow_tree(rates, &cfg, seed, *k)?;
            carried += tree.observed[0].t_comp[0];
            let line = tree.line_labels.as_ref().expect("grown trees carry their line");
            for (i, l) in line.labels.iter().filter(|l| l.in_t()).enumerate() {
                next.push((l.mass, k.child(1_000_000 + i as u64)));
            }
            if next.len() > max_population {
                return Err(Error::Invalid(format!(
                    "cascade population exceeds {max_population} at depth {j}"
                )));
            }
        }
        population = next;
        let m = population.iter().map(|(l, _)| l.powf(exponent)).sum::<f64>() + carried;
        states.push(CascadeState {
            depth: j,
            m,
            exponent,
            line_rule: rule,
        });
    }
    Ok(states)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
    pub truncated_fraction: f64,
}

/// Trees grown with one configuration and master seed.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub rates: DiskRates,
    pub engine: PolicyOptions,
    pub seed: u64,
    pub trees: Vec<FragTree>,
}

impl Ensemble {
    /// Grows trees for replicate indices `first..first + n`.
    pub fn grow(rates: &DiskRates, cfg: &TreeConfig, seed: u64, first: u64, n: usize) -> Result<Self> {
        let trees = (first..first + n as u64)
            .map(|i| grow_tree(rates, cfg, seed, StreamKey::replicate(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rates: *rates,
            engine: cfg.engine,
            seed,
            trees,
        })
    }

    fn compensation(&self, q: f64) -> Compensation {
        KernelSeries::new(self.rates.alpha, self.rates.a_plus, self.rates.a_minus)
            .compensation(q, self.engine.small == SmallJumps::Gaussian)
    }

    pub fn truncated_fraction(&self) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        self.trees.iter().map(|t| t.truncated_fraction).sum::<f64>() / self.trees.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "line", content = "y")]
pub enum LineSpec {
    /// The line of the trees' own stop rule.
    Rule,
    /// The mass-floor line at y.
    Level(f64),
}

/// Per-tree Σ label^q on a line. Uses the compensated sums recorded during
/// growth when available, or the recorded root pieces; otherwise the raw
/// labels.
pub fn tree_moment(ens: &Ensemble, tree: &FragTree, q: f64, line: LineSpec, set: LabelSet) -> Result<f64> {
    tree_moment_with(tree, q, line, set, &ens.compensation(q), ens.engine.eta)
}

fn tree_moment_with(
    tree: &FragTree,
    q: f64,
    line: LineSpec,
    set: LabelSet,
    comp: &Compensation,
    eta: f64,
) -> Result<f64> {
    let qi = tree.qs.iter().position(|&x| x == q);
    let level = match line {
        LineSpec::Rule => None,
        LineSpec::Level(y) => Some(y),
    };
    if let (Some(i), Some(obs)) = (qi, tree.observed_line(level)) {
        return Ok(obs.total(set, i));
    }
    match line {
        LineSpec::Rule => {
            let labels = tree
                .line_labels
                .as_ref()
                .ok_or_else(|| Error::Invalid("tree has no line".into()))?;
            let raw = labels.moment(q, set);
            let iota = if set == LabelSet::TTilde && tree.variant == crate::tree::Variant::TTilde {
                1.0
            } else {
                0.0
            };
            let (hb, hl) = (comp.base(eta), comp.loops(eta));
            let extra: f64 = tree
                .pieces
                .iter()
                .filter(|p| set == LabelSet::TTilde || !tree.particles[p.particle].loop_descended)
                .map(|p| {
                    let (b, l) = if p.r == eta { (hb, hl) } else { (comp.base(p.r), comp.loops(p.r)) };
                    p.integral(q) * (b + iota * l)
                })
                .sum();
            Ok(raw + extra)
        }
        LineSpec::Level(y) => Ok(stopping_line(tree, y)?.moment(q, set)),
    }
}

/// Ê[Σ label^q] over the ensemble with its standard error.
pub fn moment_sum(ens: &Ensemble, q: f64, line: LineSpec, set: LabelSet) -> Result<EstimatorReport> {
    if ens.trees.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if !(q > ens.rates.alpha) {
        return Err(domain("q", q, "(alpha, inf)"));
    }
    let truncated_fraction = ens.truncated_fraction();
    if truncated_fraction > TRUNCATION_THRESHOLD {
        return Err(Error::Invalid(format!(
            "truncated mass fraction {truncated_fraction:e} exceeds {TRUNCATION_THRESHOLD:e}"
        )));
    }
    let comp = ens.compensation(q);
    let values = ens
        .trees
        .iter()
        .map(|t| tree_moment_with(t, q, line, set, &comp, ens.engine.eta))
        .collect::<Result<Vec<_>>>()?;
    let ms = mean_se(&values);
    Ok(EstimatorReport {
        estimate: ms.mean,
        std_error: ms.se,
        n: ms.n,
        seed: ens.seed,
        truncated_fraction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MalthusReport {
    pub analytic_delta: f64,
    pub mc_root: f64,
    pub mc_se: f64,
    /// False when the ensemble is too small for the standard error.
    pub se_usable: bool,
    pub cumulant_residual_at_delta: f64,
    /// (q, Ê[Σ l^q], s.e.)
    pub grid: Vec<(f64, f64, f64)>,
    pub n: usize,
}

const GRID_POINTS: usize = 401;
const MIN_TREES_FOR_SE: usize = 30;

/// Root in q of Ê[Σ l_n^q] = 1 over the T labels of the trees' own line.
/// Every q uses the same trees.
pub fn malthus_root_mc(ens: &Ensemble, rel: &KappaRelations, line: LineSpec) -> Result<MalthusReport> {
    if ens.trees.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let a = ens.rates.alpha;
    let q_lo = a + 0.05;
    let q_hi = (2.0 * a + 1.0 - 0.05).min(2.6);
    let eval = |q: f64| -> Result<Vec<f64>> {
        let comp = ens.compensation(q);
        ens.trees
            .iter()
            .map(|t| tree_moment_with(t, q, line, LabelSet::T, &comp, ens.engine.eta))
            .collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let m_lo = mean(&eval(q_lo)?);
    if m_lo < 1.0 {
        return Err(Error::Bracket(format!(
            "moment sum at q = {q_lo} is {m_lo} < 1"
        )));
    }
    let m_hi = mean(&eval(q_hi)?);
    if m_hi > 1.0 {
        return Err(Error::Bracket(format!(
            "moment sum at q = {q_hi} is {m_hi} > 1"
        )));
    }
    let (mut lo, mut hi) = (q_lo, q_hi);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if mean(&eval(mid)?) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mc_root = 0.5 * (lo + hi);

    // Bootstrap over trees on a grid of exponents around the root.
    let n = ens.trees.len();
    let se_usable = n >= MIN_TREES_FOR_SE;
    let mc_se = if se_usable {
        let g_lo = (mc_root - 0.3).max(q_lo);
        let g_hi = (mc_root + 0.3).min(q_hi);
        let qs: Vec<f64> = (0..GRID_POINTS)
            .map(|i| g_lo + (g_hi - g_lo) * i as f64 / (GRID_POINTS - 1) as f64)
            .collect();
        let table = qs.iter().map(|&q| eval(q)).collect::<Result<Vec<_>>>()?;
        let mut rng = StreamKey::replicate(0).sub("malthus-bootstrap").rng(ens.seed);
        bootstrap_se(n, 200, &mut rng, |idx| {
            let means: Vec<f64> = table
                .iter()
                .map(|col| idx.iter().map(|&i| col[i]).sum::<f64>() / n as f64)
                .collect();
            grid_root(&qs, &means)
        })
    } else {
        f64::NAN
    };

    let analytic_delta = a + 0.5;
    let residual = cumulant_limit(analytic_delta, rel)?.value;
    let mut grid = Vec::new();
    for i in 0..8 {
        let q = a + 0.1 + (2.0 - a - 0.1) * i as f64 / 7.0;
        let ms = mean_se(&eval(q)?);
        grid.push((q, ms.mean, ms.se));
    }
    Ok(MalthusReport {
        analytic_delta,
        mc_root,
        mc_se,
        se_usable,
        cumulant_residual_at_delta: residual,
        grid,
        n,
    })
}

/// First crossing of 1 by a tabulated decreasing function, by linear
/// interpolation.
fn grid_root(qs: &[f64], means: &[f64]) -> f64 {
    for i in 1..qs.len() {
        let (a, b) = (means[i - 1] - 1.0, means[i] - 1.0);
        if a >= 0.0 && b < 0.0 {
            return qs[i - 1] + (qs[i] - qs[i - 1]) * a / (a - b);
        }
    }
    f64::NAN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaTrajectory {
    /// (floor y, M(y)) in the order of the requested floors.
    pub points: Vec<(f64, f64)>,
    /// M at the finest floor.
    pub m_inf: f64,
}

/// M(y) = Σ over the T labels of the mass-floor line at y of label^delta,
/// compensated when the tree recorded (delta, y) during growth.
pub fn intrinsic_area(tree: &FragTree, delta: f64, floors: &[f64]) -> Result<AreaTrajectory> {
    let floor = tree
        .floor()
        .ok_or_else(|| Error::Resolution("intrinsic area needs a mass-floor tree".into()))?;
    if floors.is_empty() {
        return Err(Error::Invalid("no floors".into()));
    }
    let qi = tree.qs.iter().position(|&x| x == delta);
    let mut points = Vec::with_capacity(floors.len());
    for &y in floors {
        if y < floor {
            return Err(Error::Resolution(format!("floor {y} below tree floor {floor}")));
        }
        let m = match (qi, tree.observed_line(Some(y))) {
            (Some(i), Some(obs)) => obs.total(LabelSet::T, i),
            _ => stopping_line(tree, y)?.moment(delta, LabelSet::T),
        };
        points.push((y, m));
    }
    let finest = floors.iter().copied().fold(f64::INFINITY, f64::min);
    let m_inf = points.iter().find(|p| p.0 == finest).map(|p| p.1).unwrap_or(f64::NAN);
    Ok(AreaTrajectory { points, m_inf })
}

/// Per-tree ε^{delta}·N_{[ε,2ε)} with N the number of loops (upward jumps
/// of the T tree) of size in [ε, 2ε).
pub fn loop_count_estimate(tree: &FragTree, eps_list: &[f64], delta: f64) -> Result<Vec<(f64, f64)>> {
    eps_list
        .iter()
        .map(|&eps| {
            let n = count_jumps(tree, (eps, 2.0 * eps), Sign::Plus, CountScope::WholeTree)?;
            Ok((eps, eps.powf(delta) * n as f64))
        })
        .collect()
}

/// Labels of one tree on the line at y, with its M̂_∞.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSample {
    pub labels: Vec<f64>,
    pub m_inf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineMeasure {
    pub y: f64,
    pub bins: Vec<(f64, f64)>,
    pub nu: Vec<f64>,
    pub se: Vec<f64>,
    pub total: f64,
    pub total_se: f64,
    pub n: usize,
}

/// Equal-width bins on [lo, 1].
pub fn uniform_bins(lo: f64, count: usize) -> Vec<(f64, f64)> {
    (0..count)
        .map(|i| {
            let w = (1.0 - lo) / count as f64;
            (lo + w * i as f64, lo + w * (i + 1) as f64)
        })
        .collect()
}

/// Label counts of one tree per bin of label / y, with its M̂_∞.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedSample {
    pub counts: Vec<usize>,
    pub m_inf: f64,
}

/// Counts of label / y per bin. Bins are half open, except that the last
/// one includes its right end.
pub fn bin_counts(labels: &[f64], y: f64, bins: &[(f64, f64)]) -> Vec<usize> {
    let last = bins.len().saturating_sub(1);
    let mut counts = vec![0usize; bins.len()];
    for &l in labels {
        let x = l / y;
        if let Some(b) = bins
            .iter()
            .enumerate()
            .position(|(i, &(lo, hi))| x >= lo && (x < hi || (i == last && x <= hi)))
        {
            counts[b] += 1;
        }
    }
    counts
}

/// ν̂(bin) = Ê[y^delta Σ_n 1{Y_n/y ∈ bin} / M̂_∞] over trees with M̂_∞ > 0.
pub fn empirical_line_measure(
    samples: &[LineSample],
    y: f64,
    delta: f64,
    bins: &[(f64, f64)],
) -> Result<LineMeasure> {
    let binned: Vec<BinnedSample> = samples
        .iter()
        .map(|s| BinnedSample {
            counts: bin_counts(&s.labels, y, bins),
            m_inf: s.m_inf,
        })
        .collect();
    binned_line_measure(&binned, y, delta, bins)
}

/// As [`empirical_line_measure`], from counts made with [`bin_counts`].
pub fn binned_line_measure(
    samples: &[BinnedSample],
    y: f64,
    delta: f64,
    bins: &[(f64, f64)],
) -> Result<LineMeasure> {
    let used: Vec<&BinnedSample> = samples.iter().filter(|s| s.m_inf > 0.0).collect();
    if used.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if let Some(s) = used.iter().find(|s| s.counts.len() != bins.len()) {
        return Err(Error::Invalid(format!(
            "{} counts for {} bins",
            s.counts.len(),
            bins.len()
        )));
    }
    let scale = y.powf(delta);
    let mut per_bin = vec![Vec::with_capacity(used.len()); bins.len()];
    let mut totals = Vec::with_capacity(used.len());
    for s in &used {
        let mut total = 0.0;
        for (b, &c) in s.counts.iter().enumerate() {
            let v = scale * c as f64 / s.m_inf;
            per_bin[b].push(v);
            total += v;
        }
        totals.push(total);
    }
    let stats: Vec<_> = per_bin.iter().map(|v| mean_se(v)).collect();
    let tot = mean_se(&totals);
    Ok(LineMeasure {
        y,
        bins: bins.to_vec(),
        nu: stats.iter().map(|m| m.mean).collect(),
        se: stats.iter().map(|m| m.se).collect(),
        total: tot.mean,
        total_se: tot.se,
        n: used.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopTailFit {
    /// Fitted tail index of P[l ≥ x], i.e. 2θ − 1.
    pub index: f64,
    pub se: f64,
    pub k: usize,
}

/// Maximum likelihood fit of the loop-size law above x0. A loop seen at
/// pre-jump state y has density ∝ l^{−θ}(y+l)^{−θ} on [x0, ∞); the fitted
/// tail index is 2θ − 1 (2α + 1 for θ = α + 1).
pub fn loop_tail_mle(samples: &[(f64, f64)], x0: f64) -> Result<LoopTailFit> {
    let data: Vec<(f64, f64)> = samples.iter().copied().filter(|&(l, _)| l >= x0).collect();
    if data.len() < 5 {
        return Err(Error::Invalid(format!("only {} loops above {x0}", data.len())));
    }
    let tol = Tolerance::rel(1e-10);
    let nll = |theta: f64| -> Result<f64> {
        let mut s = 0.0;
        for &(l, y) in &data {
            let z = integrate_to_inf(|t: f64| (-theta * (t.ln() + (y + t).ln())).exp(), x0, tol)?;
            s += theta * (l.ln() + (y + l).ln()) + z.ln();
        }
        Ok(s)
    };
    // Golden section on θ.
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1.05, 5.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (nll(c)?, nll(d)?);
    while b - a > 1e-6 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = nll(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = nll(d)?;
        }
    }
    let theta = 0.5 * (a + b);
    let h = 1e-3;
    let curv = (nll(theta + h)? - 2.0 * nll(theta)? + nll(theta - h)?) / (h * h);
    let se_theta = if curv > 0.0 { 1.0 / curv.sqrt() } else { f64::NAN };
    Ok(LoopTailFit {
        index: 2.0 * theta - 1.0,
        se: 2.0 * se_theta,
        k: data.len(),
    })
}

/// Fraction of M̂_∞ values above `x` for a grid of x; used to look at the
/// tail of the intrinsic area.
pub fn exceedance(values: &[f64], xs: &[f64]) -> Vec<(f64, f64)> {
    let n = values.len() as f64;
    xs.iter()
        .map(|&x| (x, values.iter().filter(|&&v| v >= x).count() as f64 / n))
        .collect()
}
