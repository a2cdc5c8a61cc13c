//! Growth-fragmentation trees grown from the disk process.
//!
//! Variant T only spawns the unfollowed pieces of splits; variant T̃ also
//! spawns a particle for every loop (upward jump), which then evolves as an
//! independent root. Particles are grown depth first. Each one draws from
//! a stream keyed by its lineage, so a T tree and the T̃ tree grown from the
//! same key agree on every particle they share.

use std::cell::RefCell;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::explore::{Bounds, DiskRates, EngineEvent, PathObserver, Piece, PolicyEngine, PolicyOptions};
use crate::rng::StreamKey;
use crate::series::Compensation;
use crate::stable::{JumpEvent, JumpKind, Side, Sign};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "q")]
pub enum BranchPolicy {
    FollowLargest,
    QWeighted(f64),
    ChordalNone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchChoice {
    FollowL,
    FollowOther,
}

/// Which piece of a split of `total` into (l, total − l) is followed.
pub fn choose_branch<R: Rng + ?Sized>(
    policy: &BranchPolicy,
    l: f64,
    total: f64,
    rng: &mut R,
) -> BranchChoice {
    match *policy {
        BranchPolicy::FollowLargest => {
            if l > total - l {
                BranchChoice::FollowL
            } else {
                BranchChoice::FollowOther
            }
        }
        BranchPolicy::QWeighted(q) => {
            let lq = l.powf(q);
            let p = lq / (lq + (total - l).powf(q));
            if rng.random::<f64>() < p {
                BranchChoice::FollowL
            } else {
                BranchChoice::FollowOther
            }
        }
        BranchPolicy::ChordalNone => BranchChoice::FollowOther,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "T")]
    T,
    #[serde(rename = "Ttilde")]
    TTilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Root,
    SplitOffspring,
    LoopOffspring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Active,
    StoppedAtLine,
    TruncatedByBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum StopRule {
    /// The root branch runs until it leaves (lower, upper); offspring are
    /// frozen at birth.
    ExitInterval { lower: f64, upper: f64 },
    /// Every particle runs until its first passage to or below the floor.
    MassFloor { floor: f64 },
    /// The root branch runs until its first upward jump of at least
    /// `min_size`; offspring are frozen at birth.
    FirstPositiveJump { min_size: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub id: usize,
    pub parent: Option<usize>,
    pub origin: Origin,
    pub birth_mass: f64,
    pub birth_depth: u32,
    pub birth_time: f64,
    pub status: Status,
    /// Descends from a loop (T̃ only); such particles are absent from T.
    pub loop_descended: bool,
    /// Running minimum of the parent just before this particle was born.
    pub parent_min_at_birth: f64,
    /// State and running minimum when the particle stopped.
    pub end_mass: f64,
    pub end_min: f64,
    #[serde(skip)]
    pub key: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeEvent {
    pub particle: usize,
    pub event: JumpEvent,
    pub pre: f64,
    pub post: f64,
    /// Running minimum of the particle before the event.
    pub min_before: f64,
    pub child: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    DiscardedSplitPiece,
    LoopJump,
    TerminalLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub mass: f64,
    pub provenance: Provenance,
    pub particle: usize,
    pub loop_descended: bool,
}

impl Label {
    /// Whether the label belongs to the T tree.
    pub fn in_t(&self) -> bool {
        self.provenance != Provenance::LoopJump && !self.loop_descended
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelSet {
    #[serde(rename = "T")]
    T,
    #[serde(rename = "Ttilde")]
    TTilde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingLineResult {
    pub rule: StopRule,
    /// Sorted by decreasing mass.
    pub labels: Vec<Label>,
}

impl StoppingLineResult {
    pub fn masses(&self, set: LabelSet) -> Vec<f64> {
        self.labels
            .iter()
            .filter(|l| set == LabelSet::TTilde || l.in_t())
            .map(|l| l.mass)
            .collect()
    }

    pub fn moment(&self, q: f64, set: LabelSet) -> f64 {
        self.masses(set).iter().map(|m| m.powf(q)).sum()
    }
}

/// Sums Σ label^q for the declared exponents, with the compensation of the
/// removed small jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedLine {
    /// None for the line of the stop rule itself (exit or first jump).
    pub level: Option<f64>,
    pub all: Vec<f64>,
    pub all_comp: Vec<f64>,
    pub t: Vec<f64>,
    pub t_comp: Vec<f64>,
}

impl ObservedLine {
    fn new(level: Option<f64>, nq: usize) -> Self {
        Self {
            level,
            all: vec![0.0; nq],
            all_comp: vec![0.0; nq],
            t: vec![0.0; nq],
            t_comp: vec![0.0; nq],
        }
    }

    /// Compensated moment sum for the i-th declared exponent.
    pub fn total(&self, set: LabelSet, i: usize) -> f64 {
        match set {
            LabelSet::TTilde => self.all[i] + self.all_comp[i],
            LabelSet::T => self.t[i] + self.t_comp[i],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub qs: Vec<f64>,
    /// Mass-floor lines to accumulate, between the floor and the root mass.
    pub levels: Vec<f64>,
}

/// One stretch of the root's path, kept for exponents chosen after growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PieceRecord {
    pub particle: usize,
    pub dtau: f64,
    pub z0: f64,
    pub z1: f64,
    pub r: f64,
}

impl PieceRecord {
    /// ∫ y^q dτ over the piece, with ln y linear in τ.
    pub fn integral(&self, q: f64) -> f64 {
        power_integral(self.dtau, self.z0, self.z1, q)
    }
}

fn power_integral(dtau: f64, z0: f64, z1: f64, q: f64) -> f64 {
    let d = q * (z1 - z0);
    let phi = if d.abs() < 1e-9 { 1.0 } else { d.exp_m1() / d };
    dtau * (q * z0).exp() * phi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub variant: Variant,
    pub root_mass: f64,
    pub stop_rule: StopRule,
    /// Maximum number of particles.
    pub budget: usize,
    /// Maximum number of jump events over the whole tree.
    pub max_events: usize,
    pub engine: PolicyOptions,
    pub record_pieces: bool,
    pub observe: Observation,
}

pub const DEFAULT_BUDGET: usize = 1_000_000;

impl TreeConfig {
    /// Defaults: a particle budget of 10⁶ and, under a mass floor, a jump
    /// cutoff capped at half the floor.
    pub fn new(variant: Variant, policy: BranchPolicy, root_mass: f64, stop_rule: StopRule) -> Self {
        let abs_cut = match stop_rule {
            StopRule::MassFloor { floor } => floor / 2.0,
            _ => f64::INFINITY,
        };
        Self {
            variant,
            root_mass,
            stop_rule,
            budget: DEFAULT_BUDGET,
            max_events: 50_000_000,
            engine: PolicyOptions {
                policy,
                abs_cut,
                ..PolicyOptions::default()
            },
            record_pieces: false,
            observe: Observation::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragTree {
    pub variant: Variant,
    pub stop_rule: StopRule,
    pub root_mass: f64,
    /// Smallest jump size resolved everywhere in the tree.
    pub resolution: f64,
    pub particles: Vec<Particle>,
    pub events: Vec<TreeEvent>,
    pub line_labels: Option<StoppingLineResult>,
    pub observed: Vec<ObservedLine>,
    pub qs: Vec<f64>,
    #[serde(skip)]
    pub pieces: Vec<PieceRecord>,
    /// Birth mass of the particles cut by the budget, over the root mass.
    pub truncated_fraction: f64,
}

impl FragTree {
    pub fn floor(&self) -> Option<f64> {
        match self.stop_rule {
            StopRule::MassFloor { floor } => Some(floor),
            _ => None,
        }
    }

    /// Events of a particle, in time order.
    pub fn events_of(&self, particle: usize) -> impl Iterator<Item = &TreeEvent> {
        self.events.iter().filter(move |e| e.particle == particle)
    }

    /// The observed line at `level`, or the rule's own line for None.
    pub fn observed_line(&self, level: Option<f64>) -> Option<&ObservedLine> {
        self.observed.iter().find(|l| l.level == level)
    }
}

struct Pending {
    id: usize,
    level_start: usize,
}

struct Shared<'a> {
    cfg: &'a TreeConfig,
    levels: Vec<f64>,
    zlevels: Vec<f64>,
    comps: Vec<Compensation>,
    /// Per cutoff grid index, per exponent: (base, loops); filled lazily.
    cut_comps: RefCell<Vec<Vec<(f64, f64)>>>,
    engine: &'a PolicyEngine,
    frozen_children: bool,
}

struct Runner<'s, 't> {
    shared: &'s Shared<'s>,
    tree: &'t mut FragTree,
    pending: &'t mut Vec<Pending>,
    id: usize,
    key: StreamKey,
    depth: u32,
    loop_descended: bool,
    n_split: u64,
    n_loop: u64,
    running_min: f64,
    max_state: f64,
    crossed: usize,
    acc_full: Vec<f64>,
    acc_base: Vec<f64>,
    events_left: usize,
}

impl Runner<'_, '_> {
    fn piece_comp(&self, p: &Piece, out_full: &mut [f64], out_base: &mut [f64]) {
        let iota = if self.shared.cfg.variant == Variant::TTilde { 1.0 } else { 0.0 };
        let k = p.cut_index as usize;
        let mut cache = self.shared.cut_comps.borrow_mut();
        if cache.len() <= k {
            cache.resize(k + 1, Vec::new());
        }
        if cache[k].is_empty() {
            let r = self.shared.engine.cut_for_index(p.cut_index);
            cache[k] = self.shared.comps.iter().map(|c| (c.base(r), c.loops(r))).collect();
        }
        for (i, comp) in self.shared.comps.iter().enumerate() {
            let integral = power_integral(p.dtau, p.z0, p.z1, comp.q);
            let (base, loops) = cache[k][i];
            out_base[i] = integral * base;
            out_full[i] = integral * (base + iota * loops);
        }
    }

    fn add_label(&mut self, line: usize, mass: f64, in_t: bool) {
        let qs = &self.shared.cfg.observe.qs;
        let obs = &mut self.tree.observed[line];
        for (i, &q) in qs.iter().enumerate() {
            let v = mass.powf(q);
            obs.all[i] += v;
            if in_t {
                obs.t[i] += v;
            }
        }
    }

    fn snapshot(&mut self, line: usize, extra: Option<(&[f64], &[f64], f64)>) {
        let in_t = !self.loop_descended;
        let obs = &mut self.tree.observed[line];
        for i in 0..self.acc_full.len() {
            let (ef, eb) = match extra {
                Some((f, b, frac)) => (frac * f[i], frac * b[i]),
                None => (0.0, 0.0),
            };
            obs.all_comp[i] += self.acc_full[i] + ef;
            if in_t {
                obs.t_comp[i] += self.acc_base[i] + eb;
            }
        }
    }

    fn spawn(&mut self, origin: Origin, mass: f64, time: f64) -> usize {
        let id = self.tree.particles.len();
        let loop_descended = self.loop_descended || origin == Origin::LoopOffspring;
        let key = match origin {
            Origin::LoopOffspring => {
                self.n_loop += 1;
                self.key.child(2 * self.n_loop + 1)
            }
            _ => {
                self.n_split += 1;
                self.key.child(2 * self.n_split)
            }
        };
        let cfg = self.shared.cfg;
        let truncated = !self.shared.frozen_children && id >= cfg.budget;
        let status = if self.shared.frozen_children {
            Status::StoppedAtLine
        } else if truncated {
            Status::TruncatedByBudget
        } else {
            Status::Active
        };
        self.tree.particles.push(Particle {
            id,
            parent: Some(self.id),
            origin,
            birth_mass: mass,
            birth_depth: self.depth + 1,
            birth_time: time,
            status,
            loop_descended,
            parent_min_at_birth: self.running_min,
            end_mass: mass,
            end_min: mass,
            key: key.0,
        });
        let in_t = !loop_descended;
        if self.shared.frozen_children {
            self.add_label(0, mass, in_t);
            return id;
        }
        // Lines at or above the birth mass get the child as a label.
        let j = self.shared.levels.iter().take_while(|&&y| y >= mass).count();
        for line in self.crossed..j.max(self.crossed) {
            self.add_label(line, mass, in_t);
        }
        if truncated {
            self.tree.truncated_fraction += mass / cfg.root_mass;
        } else {
            self.pending.push(Pending {
                id,
                level_start: j.max(self.crossed),
            });
        }
        id
    }
}

impl PathObserver for Runner<'_, '_> {
    fn piece(&mut self, p: &Piece) {
        let nq = self.acc_full.len();
        let mut full = [0.0; 16];
        let mut base = [0.0; 16];
        self.piece_comp(p, &mut full[..nq], &mut base[..nq]);
        if !self.shared.frozen_children {
            while self.crossed < self.shared.levels.len() && p.zmin <= self.shared.zlevels[self.crossed] {
                let zk = self.shared.zlevels[self.crossed];
                let denom = (p.z0 - p.zmin) + (p.z1 - p.zmin);
                let frac = if denom > 0.0 {
                    ((p.z0 - zk) / denom).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let line = self.crossed;
                let level = self.shared.levels[line];
                self.add_label(line, level, !self.loop_descended);
                self.snapshot(line, Some((&full[..nq], &base[..nq], frac)));
                self.crossed += 1;
            }
        }
        for i in 0..nq {
            self.acc_full[i] += full[i];
            self.acc_base[i] += base[i];
        }
        self.running_min = self.running_min.min(p.zmin.exp());
        self.max_state = self.max_state.max(p.zmax.exp());
        if self.shared.cfg.record_pieces {
            self.tree.pieces.push(PieceRecord {
                particle: self.id,
                dtau: p.dtau,
                z0: p.z0,
                z1: p.z1,
                r: p.r,
            });
        }
    }

    fn event(&mut self, e: &EngineEvent) {
        self.events_left = self.events_left.saturating_sub(1);
        let min_before = self.running_min;
        let child = match (e.kind, self.shared.cfg.variant) {
            (JumpKind::Split, _) => Some(self.spawn(Origin::SplitOffspring, e.offspring, e.time)),
            (JumpKind::Loop, Variant::TTilde) => {
                Some(self.spawn(Origin::LoopOffspring, e.offspring, e.time))
            }
            _ => None,
        };
        self.tree.events.push(TreeEvent {
            particle: self.id,
            event: JumpEvent {
                time: e.time,
                size: e.size,
                sign: e.sign,
                side: Side::None,
                kind: e.kind,
            },
            pre: e.pre,
            post: e.post,
            min_before,
            child,
        });
        self.max_state = self.max_state.max(e.post);
        if e.sign == Sign::Minus {
            if !self.shared.frozen_children {
                while self.crossed < self.shared.levels.len()
                    && e.post <= self.shared.levels[self.crossed]
                {
                    let line = self.crossed;
                    self.add_label(line, e.post, !self.loop_descended);
                    self.snapshot(line, None);
                    self.crossed += 1;
                }
            }
            self.running_min = self.running_min.min(e.post);
        }
    }
}

/// Grows one tree. Particle streams derive from (`seed`, `key`).
pub fn grow_tree(rates: &DiskRates, cfg: &TreeConfig, seed: u64, key: StreamKey) -> Result<FragTree> {
    if !(cfg.root_mass > 0.0 && cfg.root_mass.is_finite()) {
        return Err(domain("root_mass", cfg.root_mass, "(0, inf)"));
    }
    if cfg.budget == 0 {
        return Err(Error::Invalid("budget must be positive".into()));
    }
    if cfg.observe.qs.len() > 16 {
        return Err(Error::Invalid("at most 16 observed exponents".into()));
    }
    let engine = PolicyEngine::new(rates, cfg.engine)?;
    let (bounds, frozen_children) = match cfg.stop_rule {
        StopRule::ExitInterval { lower, upper } => {
            if !(lower < cfg.root_mass && cfg.root_mass < upper) {
                return Err(Error::Invalid("root mass must lie inside the exit interval".into()));
            }
            (Bounds::interval(lower, upper), true)
        }
        StopRule::MassFloor { floor } => {
            if !(floor > 0.0) {
                return Err(domain("floor", floor, "(0, inf)"));
            }
            (Bounds::floor(floor), false)
        }
        StopRule::FirstPositiveJump { min_size } => (
            Bounds {
                first_positive: Some(min_size),
                ..Bounds::floor(0.0)
            },
            true,
        ),
    };
    let mut levels = if frozen_children {
        Vec::new()
    } else {
        cfg.observe.levels.clone()
    };
    levels.sort_by(|a, b| b.total_cmp(a));
    if let (Some(&lowest), StopRule::MassFloor { floor }) = (levels.last(), cfg.stop_rule) {
        if lowest < floor {
            return Err(Error::Resolution(format!(
                "observed level {lowest} is below the floor {floor}"
            )));
        }
    }
    let gaussian = cfg.engine.small == crate::stable::SmallJumps::Gaussian;
    let comps: Vec<Compensation> = cfg
        .observe
        .qs
        .iter()
        .map(|&q| engine.series().compensation(q, gaussian))
        .collect();
    let shared = Shared {
        cfg,
        zlevels: levels.iter().map(|y| y.ln()).collect(),
        levels: levels.clone(),
        comps,
        cut_comps: RefCell::new(Vec::new()),
        engine: &engine,
        frozen_children,
    };
    let nq = cfg.observe.qs.len();
    let observed = if frozen_children {
        vec![ObservedLine::new(None, nq)]
    } else {
        levels.iter().map(|&y| ObservedLine::new(Some(y), nq)).collect()
    };
    let mut tree = FragTree {
        variant: cfg.variant,
        stop_rule: cfg.stop_rule,
        root_mass: cfg.root_mass,
        resolution: 0.0,
        particles: vec![Particle {
            id: 0,
            parent: None,
            origin: Origin::Root,
            birth_mass: cfg.root_mass,
            birth_depth: 0,
            birth_time: 0.0,
            status: Status::Active,
            loop_descended: false,
            parent_min_at_birth: f64::INFINITY,
            end_mass: cfg.root_mass,
            end_min: cfg.root_mass,
            key: key.0,
        }],
        events: Vec::new(),
        line_labels: None,
        observed,
        qs: cfg.observe.qs.clone(),
        pieces: Vec::new(),
        truncated_fraction: 0.0,
    };
    let root_start = levels.iter().take_while(|&&y| y >= cfg.root_mass).count();
    for obs in &mut tree.observed[..root_start] {
        for (i, &q) in cfg.observe.qs.iter().enumerate() {
            obs.all[i] += cfg.root_mass.powf(q);
            obs.t[i] += cfg.root_mass.powf(q);
        }
    }
    let mut stack = vec![Pending {
        id: 0,
        level_start: root_start,
    }];
    let mut events_left = cfg.max_events;
    let mut max_state = cfg.root_mass;
    while let Some(job) = stack.pop() {
        let p = tree.particles[job.id];
        if events_left == 0 {
            tree.particles[job.id].status = Status::TruncatedByBudget;
            tree.truncated_fraction += p.birth_mass / cfg.root_mass;
            continue;
        }
        if !frozen_children && p.birth_mass <= bounds.lower {
            tree.particles[job.id].status = Status::StoppedAtLine;
            continue;
        }
        let mut pending = Vec::new();
        let mut rng = StreamKey(p.key).rng(seed);
        let mut runner = Runner {
            shared: &shared,
            tree: &mut tree,
            pending: &mut pending,
            id: job.id,
            key: StreamKey(p.key),
            depth: p.birth_depth,
            loop_descended: p.loop_descended,
            n_split: 0,
            n_loop: 0,
            running_min: p.birth_mass,
            max_state: p.birth_mass,
            crossed: job.level_start,
            acc_full: vec![0.0; nq],
            acc_base: vec![0.0; nq],
            events_left,
        };
        let out = engine.run(p.birth_mass, p.birth_time, &bounds, &mut rng, &mut runner)?;
        if frozen_children {
            runner.add_label(0, out.end_state, !p.loop_descended);
            runner.snapshot(0, None);
        }
        events_left = runner.events_left;
        max_state = max_state.max(runner.max_state);
        let end_min = runner.running_min.min(out.running_min);
        let particle = &mut tree.particles[job.id];
        particle.status = Status::StoppedAtLine;
        particle.end_mass = out.end_state;
        particle.end_min = end_min;
        // Depth first: the first-born child is grown next.
        stack.extend(pending.into_iter().rev());
    }
    tree.resolution = cfg.engine.abs_cut.min(cfg.engine.eta * max_state);
    tree.line_labels = Some(match cfg.stop_rule {
        StopRule::MassFloor { floor } => stopping_line(&tree, floor)?,
        rule => frozen_line(&tree, rule),
    });
    Ok(tree)
}

fn provenance_of(origin: Origin) -> Provenance {
    match origin {
        Origin::Root => Provenance::TerminalLabel,
        Origin::SplitOffspring => Provenance::DiscardedSplitPiece,
        Origin::LoopOffspring => Provenance::LoopJump,
    }
}

fn sort_labels(labels: &mut [Label]) {
    labels.sort_unstable_by(|a, b| b.mass.total_cmp(&a.mass).then(a.particle.cmp(&b.particle)));
}

fn frozen_line(tree: &FragTree, rule: StopRule) -> StoppingLineResult {
    let mut labels: Vec<Label> = tree
        .particles
        .iter()
        .map(|p| Label {
            mass: if p.id == 0 { p.end_mass } else { p.birth_mass },
            provenance: provenance_of(p.origin),
            particle: p.id,
            loop_descended: p.loop_descended,
        })
        .collect();
    sort_labels(&mut labels);
    StoppingLineResult { rule, labels }
}

/// Whether each particle lives strictly above level y before the line:
/// its birth mass exceeds y and it was born before its parent crossed y.
pub fn alive_above(tree: &FragTree, y: f64) -> Vec<bool> {
    let mut alive = vec![false; tree.particles.len()];
    for p in &tree.particles {
        let reached = match p.parent {
            None => true,
            Some(parent) => alive[parent] && p.parent_min_at_birth > y,
        };
        alive[p.id] = reached && p.birth_mass > y && p.status != Status::TruncatedByBudget;
    }
    alive
}

/// Labels of the line where every branch first drops to or below y.
pub fn stopping_line(tree: &FragTree, y: f64) -> Result<StoppingLineResult> {
    let floor = tree.floor().ok_or_else(|| {
        Error::Resolution("mass-floor lines need a tree grown with a mass floor".into())
    })?;
    if !(y >= floor) {
        return Err(Error::Resolution(format!(
            "line at {y} is below the tree floor {floor}"
        )));
    }
    let alive = alive_above(tree, y);
    let mut first_cross: Vec<Option<f64>> = vec![None; tree.particles.len()];
    for e in &tree.events {
        let slot = &mut first_cross[e.particle];
        if slot.is_some() || !alive[e.particle] {
            continue;
        }
        if e.min_before <= y {
            *slot = Some(y);
        } else if e.post <= y {
            *slot = Some(e.post);
        }
    }
    let mut labels = Vec::new();
    for p in &tree.particles {
        if p.status == Status::TruncatedByBudget {
            continue;
        }
        let reached = match p.parent {
            None => true,
            Some(parent) => alive[parent] && p.parent_min_at_birth > y,
        };
        if !reached {
            continue;
        }
        let (mass, provenance) = if alive[p.id] {
            let mass = first_cross[p.id].unwrap_or(if p.end_min <= y { y } else { p.end_mass });
            (mass, Provenance::TerminalLabel)
        } else {
            (p.birth_mass, provenance_of(p.origin))
        };
        labels.push(Label {
            mass,
            provenance,
            particle: p.id,
            loop_descended: p.loop_descended,
        });
    }
    sort_labels(&mut labels);
    Ok(StoppingLineResult {
        rule: StopRule::MassFloor { floor: y },
        labels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "scope", content = "y")]
pub enum CountScope {
    WholeTree,
    BeforeLine(f64),
}

/// Number of jumps with size in [lo, hi) made by particles of the T tree
/// (loop-descended particles are skipped).
pub fn count_jumps(tree: &FragTree, band: (f64, f64), sign: Sign, scope: CountScope) -> Result<usize> {
    let (lo, hi) = band;
    if !(lo > 0.0 && hi > lo) {
        return Err(domain("band", lo, "0 < lo < hi"));
    }
    if lo < tree.resolution {
        return Err(Error::Resolution(format!(
            "band starts at {lo}, below the resolved size {}",
            tree.resolution
        )));
    }
    let alive = match scope {
        CountScope::WholeTree => None,
        CountScope::BeforeLine(y) => {
            if let Some(floor) = tree.floor() {
                if y < floor {
                    return Err(Error::Resolution(format!("line {y} below floor {floor}")));
                }
            }
            Some((y, alive_above(tree, y)))
        }
    };
    let count = tree
        .events
        .iter()
        .filter(|e| {
            e.event.sign == sign
                && e.event.size >= lo
                && e.event.size < hi
                && !tree.particles[e.particle].loop_descended
                && match &alive {
                    None => true,
                    Some((y, alive)) => alive[e.particle] && e.min_before > *y,
                }
        })
        .count();
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn follow_largest_examples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let p = BranchPolicy::FollowLargest;
        assert_eq!(choose_branch(&p, 0.3, 1.0, &mut rng), BranchChoice::FollowOther);
        assert_eq!(choose_branch(&p, 0.7, 1.0, &mut rng), BranchChoice::FollowL);
    }

    #[test]
    fn no_negative_jumps_gives_single_branch() {
        let rates = DiskRates {
            a_minus: 0.0,
            ..DiskRates::policy(4.0 / 3.0, 0.5)
        };
        let cfg = TreeConfig::new(
            Variant::T,
            BranchPolicy::FollowLargest,
            1.0,
            StopRule::MassFloor { floor: 0.25 },
        );
        let tree = grow_tree(&rates, &cfg, 1, StreamKey(0)).unwrap();
        assert_eq!(tree.particles.len(), 1);
        let line = tree.line_labels.unwrap();
        assert_eq!(line.labels.len(), 1);
        assert_eq!(line.labels[0].provenance, Provenance::TerminalLabel);
    }
}
