use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use frag_cli::config::{ExperimentConfig, ModeChoice, Suite, VariantChoice};
use frag_cli::report::{self, Format, EXIT_CONFIG, EXIT_FAIL, EXIT_INTERNAL, EXIT_PASS};
use frag_cli::run::{run_check, run_experiment, RunError};
use frag_cli::ConfigError;
use frag_core::explore::{sample_disk_chordal, sample_disk_policy_with, Bounds, ChordalOptions, PolicyOptions};
use frag_core::relations::ladder_quantities;
use frag_core::stable::sample_path_with;
use frag_core::tree::grow_tree;
use frag_core::{
    derive_relations, intensity_split, DiskRates, SmallJumps, StableJumpLaw, StopRule, StreamKey, TreeConfig,
};

const SEED_ENV: &str = "FRAG_EXPLORE_SEED";

#[derive(Parser)]
#[command(name = "frag-explore", version, about = "Stable processes, disk explorations and growth-fragmentation trees")]
struct Cli {
    /// Master seed; FRAG_EXPLORE_SEED overrides it when set.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all hardware threads).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// TOML experiment config; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    replicates: Option<u64>,
    #[arg(long)]
    floor: Option<f64>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Exponents at κ and the asymmetry split at β.
    Relations {
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        a_lm: Option<f64>,
    },
    /// One stable path; writes its jumps as CSV.
    SampleStable {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        /// Replace jumps below the cutoff by a Brownian motion.
        #[arg(long)]
        gaussian: bool,
    },
    /// One path of the disk process; writes its jumps as CSV.
    SampleDisk {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        y0: f64,
        #[arg(long, value_enum)]
        mode: Option<ModeChoice>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// One growth-fragmentation tree as JSON.
    GrowTree {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        variant: Option<VariantChoice>,
        /// Stop at the exit of (1/2, 2) instead of the mass floor.
        #[arg(long)]
        exit: bool,
        /// Replicate index of the tree.
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Malthusian exponent, analytic and Monte Carlo; prints the report.
    Malthus {
        #[command(flatten)]
        common: Common,
    },
    /// Loop counts against the intrinsic area and the line measure.
    Measure {
        #[command(flatten)]
        common: Common,
    },
    /// Runs the full acceptance battery.
    Check {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Runs the suite named in --config.
    Run {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

enum Failure {
    Config(String),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => c.into(),
            RunError::Internal(i) => Failure::Internal(i),
        }
    }
}

impl From<frag_core::Error> for Failure {
    fn from(e: frag_core::Error) -> Self {
        Failure::Internal(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INTERNAL as u8)
        }
    }
}

fn seed(cli: &Cli) -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Config(format!("{SEED_ENV}: cannot parse {v:?} as a seed"))),
        Err(_) => Ok(cli.seed),
    }
}

/// Config from --config (or defaults for `suite`), then global flags.
fn base_config(cli: &Cli, suite: Suite) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("reading {}: {e}", path.display())))?;
            let mut c: ExperimentConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
            c.suite = suite;
            c
        }
        None => ExperimentConfig::new(suite),
    };
    if let Some(s) = seed(cli)? {
        cfg.master_seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    Ok(cfg)
}

fn apply(cfg: &mut ExperimentConfig, c: &Common) -> Result<(), Failure> {
    if let Some(v) = c.kappa {
        cfg.kappa = v;
    }
    if let Some(v) = c.replicates {
        cfg.replicates = v;
    }
    if let Some(v) = c.floor {
        cfg.floor = v;
    }
    if let Some(v) = c.cutoff {
        cfg.cutoff = v;
    }
    if let Some(v) = c.horizon {
        cfg.horizon = v;
    }
    cfg.validate()?;
    Ok(())
}

fn out_dir(cfg: &ExperimentConfig) -> Result<&Path, Failure> {
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    Ok(&cfg.out_dir)
}

fn execute(cli: Cli) -> Result<i32, Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("building the worker pool")?;
    }
    match &cli.command {
        Command::Relations { kappa, beta, a_lm } => {
            let mut cfg = base_config(&cli, Suite::RelationsSweep)?;
            cfg.kappa = kappa.unwrap_or(cfg.kappa);
            cfg.beta = beta.unwrap_or(cfg.beta);
            cfg.a_lm = a_lm.unwrap_or(cfg.a_lm);
            cfg.validate()?;
            let rel = derive_relations(cfg.kappa)?;
            let split = intensity_split(cfg.beta, cfg.a_lm, &rel)?;
            let ladder = ladder_quantities(split.rho_prime, &rel)?;
            #[derive(Serialize)]
            struct Out<T, U, V> {
                relations: T,
                split: U,
                ladder: V,
            }
            let out = Out {
                relations: rel,
                split,
                ladder,
            };
            println!("{}", serde_json::to_string_pretty(&out).context("serializing")?);
            Ok(EXIT_PASS)
        }
        Command::SampleStable { common, start, gaussian } => {
            let mut cfg = base_config(&cli, Suite::StableChecks)?;
            apply(&mut cfg, common)?;
            let rel = cfg.relations();
            let law = StableJumpLaw::new(rel.alpha, rel.u, 1.0)?;
            let small = if *gaussian { SmallJumps::Gaussian } else { SmallJumps::Drop };
            let mut rng = StreamKey::replicate(0).sub("sample-stable").rng(cfg.master_seed);
            let path = sample_path_with(&law, cfg.horizon, cfg.cutoff, *start, small, &mut rng)?;
            #[derive(Serialize)]
            struct Row {
                time: f64,
                size: f64,
                sign: &'static str,
                value_after: f64,
            }
            let file = out_dir(&cfg)?.join("stable_path.csv");
            let mut w = csv::Writer::from_path(&file).context("creating CSV")?;
            for j in &path.jumps {
                w.serialize(Row {
                    time: j.time,
                    size: j.size,
                    sign: j.sign.symbol(),
                    value_after: path.value_at(j.time),
                })
                .context("writing CSV")?;
            }
            w.flush().context("writing CSV")?;
            println!("{} jumps, X_T = {}, written to {}", path.jumps.len(), path.terminal(), file.display());
            Ok(EXIT_PASS)
        }
        Command::SampleDisk { common, y0, mode, beta } => {
            let mut cfg = base_config(&cli, Suite::DiskChecks)?;
            cfg.mode = mode.unwrap_or(cfg.mode);
            cfg.beta = beta.unwrap_or(cfg.beta);
            if cfg.mode != ModeChoice::Policy {
                // Only the tree suites are restricted to policy mode.
                cfg.suite = Suite::StableChecks;
            }
            apply(&mut cfg, common)?;
            let rel = cfg.relations();
            let mut rng = StreamKey::replicate(0).sub("sample-disk").rng(cfg.master_seed);
            let path = match cfg.mode {
                ModeChoice::Policy => {
                    let rates = DiskRates::policy(rel.alpha, rel.u);
                    let opts = PolicyOptions {
                        abs_cut: cfg.cutoff,
                        eta: cfg.eta,
                        policy: cfg.branch_policy(),
                        ..PolicyOptions::default()
                    };
                    let bounds = Bounds {
                        horizon: cfg.horizon,
                        ..Bounds::floor(cfg.floor)
                    };
                    sample_disk_policy_with(&rates, *y0, &bounds, opts, &mut rng)?
                }
                ModeChoice::ChordalLeft | ModeChoice::ChordalRight => {
                    let split = intensity_split(cfg.beta, cfg.a_lm, &rel)?;
                    let opts = ChordalOptions {
                        horizon: cfg.horizon,
                        delta_cut: cfg.cutoff,
                        floor: cfg.floor,
                    };
                    sample_disk_chordal(&split, rel.alpha, y0 / 2.0, y0 / 2.0, &opts, &mut rng)?
                }
            };
            #[derive(Serialize)]
            struct Row {
                time: f64,
                pre_state: f64,
                size: f64,
                sign: &'static str,
                side: &'static str,
                kind: &'static str,
                post_state: f64,
            }
            let file = out_dir(&cfg)?.join("disk_path.csv");
            let mut w = csv::Writer::from_path(&file).context("creating CSV")?;
            for e in &path.events {
                w.serialize(Row {
                    time: e.event.time,
                    pre_state: e.pre_state,
                    size: e.event.size,
                    sign: e.event.sign.symbol(),
                    side: e.event.side.name(),
                    kind: e.event.kind.name(),
                    post_state: e.post_state,
                })
                .context("writing CSV")?;
            }
            w.flush().context("writing CSV")?;
            println!(
                "{} jumps, ended {:?} at time {} in state {}, written to {}",
                path.events.len(),
                path.reason,
                path.end_time,
                path.end_state,
                file.display()
            );
            Ok(EXIT_PASS)
        }
        Command::GrowTree {
            common,
            variant,
            exit,
            index,
        } => {
            let mut cfg = base_config(&cli, Suite::TreeMartingales)?;
            cfg.variant = variant.unwrap_or(cfg.variant);
            apply(&mut cfg, common)?;
            let rel = cfg.relations();
            let rates = DiskRates::policy(rel.alpha, rel.u);
            let rule = if *exit {
                StopRule::ExitInterval { lower: 0.5, upper: 2.0 }
            } else {
                StopRule::MassFloor { floor: cfg.floor }
            };
            let mut tc = TreeConfig::new(cfg.variant.into(), cfg.branch_policy(), 1.0, rule);
            tc.engine.eta = cfg.eta;
            if !*exit {
                tc.engine.abs_cut = cfg.cutoff.min(cfg.floor / 2.0);
            }
            let tree = grow_tree(&rates, &tc, cfg.master_seed, StreamKey::replicate(*index).sub("grow-tree"))?;
            let file = out_dir(&cfg)?.join("tree.json");
            fs::write(&file, serde_json::to_string_pretty(&tree).context("serializing")? + "\n")
                .context("writing tree")?;
            println!(
                "{} particles, {} events, written to {}",
                tree.particles.len(),
                tree.events.len(),
                file.display()
            );
            Ok(EXIT_PASS)
        }
        Command::Malthus { common } => {
            let mut cfg = base_config(&cli, Suite::Malthus)?;
            apply(&mut cfg, common)?;
            let m = run_experiment(&cfg)?;
            let report = cfg.out_dir.join("malthus.json");
            if report.exists() {
                print!("{}", fs::read_to_string(&report).context("reading report")?);
            } else {
                print!("{}", fs::read_to_string(cfg.out_dir.join("cumulant.json")).context("reading report")?);
            }
            Ok(report::exit_code(&m))
        }
        Command::Measure { common } => {
            let mut cfg = base_config(&cli, Suite::Measure)?;
            if common.floor.is_none() && cli.config.is_none() {
                cfg.floor = 2f64.powi(-8);
            }
            apply(&mut cfg, common)?;
            let m = run_experiment(&cfg)?;
            print!("{}", fs::read_to_string(cfg.out_dir.join("measure_summary.json")).context("reading summary")?);
            Ok(report::exit_code(&m))
        }
        Command::Check { format } => {
            let seed = seed(&cli)?.unwrap_or(42);
            let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("check"));
            let (summary, manifest) = run_check(seed, &dir, |cfg, secs| {
                eprintln!("{} (kappa = {}) done in {secs:.1} s", cfg.suite, cfg.kappa);
            })?;
            print!("{}", report::emit_report(&manifest, *format));
            if *format == Format::Text {
                for c in &summary.criteria {
                    println!("criterion {:>2}: {}", c.criterion, if c.pass { "PASS" } else { "FAIL" });
                }
            }
            Ok(if summary.pass() { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Run { format } => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| Failure::Config("run needs --config FILE".into()))?;
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("reading {}: {e}", path.display())))?;
            let mut cfg = ExperimentConfig::from_toml(&text)?;
            if let Some(s) = seed(&cli)? {
                cfg.master_seed = s;
            }
            if let Some(d) = &cli.out_dir {
                cfg.out_dir = d.clone();
            }
            let m = run_experiment(&cfg)?;
            print!("{}", report::emit_report(&m, *format));
            Ok(report::exit_code(&m))
        }
    }
}
