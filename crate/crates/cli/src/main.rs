//! Scenario-driven front end: builds interference graphs, synthesizes
//! priorities and decompositions, computes delay exponents, and runs the
//! slotted simulator, all from one flat config file.
//!
//! Exit codes: 0 success, 2 typed infeasibility, 1 any other error.

mod scenario;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use priosched::delay;
use priosched::engine::{self, Priority, PrioritySpec};
use priosched::graph::{self, DeltaMode, InterferenceGraph, BRUTE_DELTA_CAP};
use priosched::synth::{self, StablePriorityOutcome};
use priosched::traffic::ArrivalModel;

use scenario::{build_graph, Scenario, SchedulerKind};

#[derive(Parser)]
#[command(name = "priosched", version, about = "Prioritized maximal scheduling toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory prefix for relative output paths.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppresses progress notes on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Goal {
    Stability,
    Delay,
    Randomized,
}

#[derive(Subcommand)]
enum Command {
    /// Report graph parameters, region memberships, and the greedy stable
    /// priority for the configured rates.
    Analyze,
    /// Synthesize a priority (stability/delay goals) or a randomized
    /// priority distribution (randomized goal) and write it out.
    Synth {
        #[arg(long, value_enum)]
        goal: Goal,
        /// Use the approximate decomposition scheme for the randomized goal.
        #[arg(long)]
        approx: bool,
    },
    /// Run the slotted simulator and write summary (and optional trace) CSVs.
    Simulate,
    /// Compute per-link overflow exponents and write the report CSV.
    DelayExponent {
        /// Also estimate empirical overflow slopes by simulation.
        #[arg(long)]
        empirical: bool,
    },
    /// Decompose the configured rates over maximal independent sets.
    Decompose {
        #[arg(long)]
        approx: bool,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
}

enum AppError {
    /// Config, I/O, or input errors; exit 1.
    Error(String),
    /// Typed infeasibility; exit 2.
    Infeasible(String),
}

impl<E: std::fmt::Display> From<E> for AppError {
    fn from(e: E) -> Self {
        AppError::Error(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Error(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

struct Ctx {
    scenario: Scenario,
    out_dir: PathBuf,
    seed: Option<u64>,
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    fn graph(&self) -> Result<InterferenceGraph, AppError> {
        let topo = self
            .scenario
            .topology
            .as_ref()
            .ok_or(AppError::Error("scenario has no [topology] section".into()))?;
        build_graph(topo, self.seed).map_err(AppError::Error)
    }

    fn require_seed(&self, why: &str) -> Result<u64, AppError> {
        self.seed
            .ok_or_else(|| AppError::Error(format!("{why} needs a seed (config `[sim] seed` or --seed)")))
    }

    fn out_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }

    fn write_out(&self, p: &Path, contents: &str) -> Result<PathBuf, AppError> {
        let full = self.out_path(p);
        if let Some(dir) = full.parent() {
            std::fs::create_dir_all(dir).map_err(|e| AppError::Error(e.to_string()))?;
        }
        std::fs::write(&full, contents).map_err(|e| AppError::Error(format!("{}: {e}", full.display())))?;
        Ok(full)
    }
}

fn dispatch(cli: &Cli) -> Result<(), AppError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or(AppError::Error("--config <path> is required".into()))?;
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| AppError::Error(format!("{}: {e}", config_path.display())))?;
    let scenario = Scenario::parse(&text)?;
    let ctx = Ctx {
        seed: cli.seed.or(scenario.sim.seed),
        out_dir: cli.out.clone().unwrap_or_else(|| PathBuf::from(".")),
        scenario,
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::Analyze => cmd_analyze(&ctx),
        Command::Synth { goal, approx } => cmd_synth(&ctx, *goal, *approx),
        Command::Simulate => cmd_simulate(&ctx),
        Command::DelayExponent { empirical } => cmd_delay_exponent(&ctx, *empirical),
        Command::Decompose { approx, eps, tol } => cmd_decompose(&ctx, *approx, *eps, *tol),
    }
}

/// Default decomposition slack: half the best achievable uniform slack,
/// floored at 1e-4.
fn default_eps(g: &InterferenceGraph, a: &[f64]) -> Result<f64, AppError> {
    let report = synth::a_max_report(g, a)?;
    Ok((report.slack / 2.0).max(1e-4))
}

fn resolve_priority(ctx: &Ctx, g: &InterferenceGraph) -> Result<Option<Priority>, AppError> {
    match &ctx.scenario.scheduler.kind {
        Some(SchedulerKind::Fixed { ranks }) => Ok(Some(Priority::from_ranks(ranks.clone())?)),
        Some(SchedulerKind::FixedFile { path }) => {
            let text = std::fs::read_to_string(ctx.out_path(path))
                .map_err(|e| AppError::Error(format!("{}: {e}", path.display())))?;
            Ok(Some(Priority::from_text(&text)?))
        }
        _ => {
            let _ = g;
            Ok(None)
        }
    }
}

fn resolve_spec(ctx: &Ctx, g: &InterferenceGraph) -> Result<PrioritySpec, AppError> {
    let kind = ctx
        .scenario
        .scheduler
        .kind
        .as_ref()
        .ok_or(AppError::Error("scenario has no scheduler".into()))?;
    Ok(match kind {
        SchedulerKind::Fixed { .. } | SchedulerKind::FixedFile { .. } => {
            PrioritySpec::Fixed(resolve_priority(ctx, g)?.expect("fixed kinds yield a priority"))
        }
        SchedulerKind::Lqf => PrioritySpec::Lqf,
        SchedulerKind::MaxWeight => PrioritySpec::MaxWeight,
        SchedulerKind::Distribution { entries } => {
            let entries = entries
                .iter()
                .map(|(ranks, w)| Ok((Priority::from_ranks(ranks.clone())?, *w)))
                .collect::<Result<Vec<_>, engine::EngineError>>()?;
            PrioritySpec::Distribution(engine::PriorityDistribution::new(entries)?)
        }
        SchedulerKind::DecompositionFile { path } => {
            let text = std::fs::read_to_string(ctx.out_path(path))
                .map_err(|e| AppError::Error(format!("{}: {e}", path.display())))?;
            let d = synth::Decomposition::from_text(&text).map_err(AppError::Error)?;
            PrioritySpec::Distribution(synth::decomposition_to_distribution(g.link_count(), &d)?)
        }
    })
}

fn cmd_analyze(ctx: &Ctx) -> Result<(), AppError> {
    let g = ctx.graph()?;
    let n = g.link_count();
    let mut out = String::new();
    let _ = writeln!(out, "links {n}");
    let _ = writeln!(out, "edges {}", g.edges().len());
    let _ = writeln!(out, "delta_max {}", graph::max_interference_degree(&g)?);
    let (gd, _) = graph::compute_delta(&g, DeltaMode::Greedy)?;
    let _ = writeln!(out, "delta_greedy {gd}");
    if n <= BRUTE_DELTA_CAP {
        let (bd, _) = graph::compute_delta(&g, DeltaMode::Brute)?;
        let _ = writeln!(out, "delta_brute {bd}");
    }
    let floor = synth::efficiency_floor(&g)?;
    let _ = writeln!(out, "efficiency_floor {}", floor.floor);
    if !ctx.scenario.traffic.is_empty() {
        let rates = ctx.scenario.rates(n)?;
        let show = |b: bool| if b { "inside" } else { "outside" };
        let _ = writeln!(out, "region_a_min {}", show(synth::in_a_min(&g, &rates)?));
        let _ = writeln!(out, "region_a {}", show(synth::in_a(&g, &rates)?));
        let _ = writeln!(out, "region_a_max {}", show(synth::in_a_max(&g, &rates)?));
        match synth::stable_priority(&g, &rates)? {
            StablePriorityOutcome::Feasible { priority } => {
                let ranks: Vec<String> =
                    priority.ranks().iter().map(|r| r.to_string()).collect();
                let _ = writeln!(out, "stable_priority {}", ranks.join(" "));
            }
            StablePriorityOutcome::Infeasible { violations, .. } => {
                let v: Vec<String> = violations.iter().map(|i| (i + 1).to_string()).collect();
                let _ = writeln!(out, "stable_priority infeasible violated_links {}", v.join(" "));
            }
        }
    }
    print!("{out}");
    Ok(())
}

fn cmd_synth(ctx: &Ctx, goal: Goal, approx: bool) -> Result<(), AppError> {
    let g = ctx.graph()?;
    let n = g.link_count();
    match goal {
        Goal::Stability => {
            let rates = ctx.scenario.rates(n)?;
            match synth::stable_priority(&g, &rates)? {
                StablePriorityOutcome::Feasible { priority } => {
                    let path = ctx
                        .scenario
                        .out
                        .priority
                        .clone()
                        .unwrap_or_else(|| PathBuf::from("priority.txt"));
                    let full = ctx.write_out(&path, &priority.to_text())?;
                    ctx.note(&format!("wrote {}", full.display()));
                    Ok(())
                }
                StablePriorityOutcome::Infeasible { violations, .. } => {
                    let v: Vec<String> = violations.iter().map(|i| (i + 1).to_string()).collect();
                    Err(AppError::Infeasible(format!(
                        "rates lie outside the fixed-priority union region; \
                         links {} violate the per-link condition under the greedy assignment",
                        v.join(" ")
                    )))
                }
            }
        }
        Goal::Delay => {
            let models = ctx.scenario.models(n)?;
            let targets = ctx
                .scenario
                .scheduler
                .targets
                .clone()
                .ok_or(AppError::Error("delay goal needs `targets` in [scheduler]".into()))?;
            match delay::delay_priority(&g, &models, &targets)? {
                delay::DelayPriorityOutcome::Feasible { priority } => {
                    let path = ctx
                        .scenario
                        .out
                        .priority
                        .clone()
                        .unwrap_or_else(|| PathBuf::from("priority.txt"));
                    let full = ctx.write_out(&path, &priority.to_text())?;
                    ctx.note(&format!("wrote {}", full.display()));
                    Ok(())
                }
                delay::DelayPriorityOutcome::Infeasible { reason } => {
                    Err(AppError::Infeasible(reason))
                }
            }
        }
        Goal::Randomized => write_decomposition(ctx, &g, approx, None, None),
    }
}

fn write_decomposition(
    ctx: &Ctx,
    g: &InterferenceGraph,
    approx: bool,
    eps_flag: Option<f64>,
    tol_flag: Option<f64>,
) -> Result<(), AppError> {
    let n = g.link_count();
    let rates = ctx.scenario.rates(n)?;
    let eps = match eps_flag.or(ctx.scenario.scheduler.eps) {
        Some(e) => e,
        None => {
            let e = default_eps(g, &rates)?;
            ctx.note(&format!("using default eps {e}"));
            e
        }
    };
    let decomposition = if approx {
        let tol = tol_flag.or(ctx.scenario.scheduler.tol).unwrap_or(0.05);
        let mut oracle = synth::exact_mwis_oracle(g)?;
        match synth::decompose_approx(g, &rates, eps, tol, &mut oracle) {
            Ok(report) => {
                ctx.note(&format!(
                    "approximate decomposition used {} oracle calls at budget {:.6}",
                    report.oracle_calls, report.budget
                ));
                report.decomposition
            }
            Err(e @ synth::DecomposeError::Infeasible { .. }) => {
                return Err(AppError::Infeasible(e.to_string()))
            }
            Err(e @ synth::DecomposeError::NonConvergence { .. }) => {
                return Err(AppError::Infeasible(e.to_string()))
            }
            Err(synth::DecomposeError::Synth(e)) => return Err(e.into()),
        }
    } else {
        match synth::decompose_exact(g, &rates, eps) {
            Ok(d) => d,
            Err(e @ synth::DecomposeError::Infeasible { .. }) => {
                return Err(AppError::Infeasible(e.to_string()))
            }
            Err(synth::DecomposeError::Synth(e)) => return Err(e.into()),
            Err(e) => return Err(AppError::Error(e.to_string())),
        }
    };
    let path = ctx
        .scenario
        .out
        .decomposition
        .clone()
        .unwrap_or_else(|| PathBuf::from("decomposition.txt"));
    let full = ctx.write_out(&path, &decomposition.to_text(&rates))?;
    ctx.note(&format!("wrote {}", full.display()));
    Ok(())
}

fn cmd_decompose(
    ctx: &Ctx,
    approx: bool,
    eps: Option<f64>,
    tol: Option<f64>,
) -> Result<(), AppError> {
    let g = ctx.graph()?;
    write_decomposition(ctx, &g, approx, eps, tol)
}

fn cmd_simulate(ctx: &Ctx) -> Result<(), AppError> {
    let g = ctx.graph()?;
    let n = g.link_count();
    let models: Vec<ArrivalModel> = ctx.scenario.models(n)?;
    let spec = resolve_spec(ctx, &g)?;
    let slots = ctx
        .scenario
        .sim
        .slots
        .ok_or(AppError::Error("simulate needs `[sim] slots`".into()))?;
    let seed = ctx.require_seed("simulate")?;
    let thresholds = ctx.scenario.sim.thresholds.clone();
    let reps = ctx.scenario.sim.reps.max(1);

    let mut runs = Vec::with_capacity(reps as usize);
    let mut trace = if ctx.scenario.sim.trace {
        Some(String::from("slot,link,queue,scheduled\n"))
    } else {
        None
    };
    for rep in 0..reps {
        let rep_seed = engine::replication_seed(seed, rep);
        let keys: Vec<u64> = (0..n as u64).collect();
        let stats = if rep == 0 && trace.is_some() {
            let buf = trace.as_mut().expect("trace buffer exists");
            engine::run_observed(
                &g,
                &spec,
                &models,
                slots,
                rep_seed,
                &thresholds,
                &keys,
                |slot, record, state| {
                    for i in 0..n {
                        let _ = writeln!(
                            buf,
                            "{slot},{},{},{}",
                            i + 1,
                            state.queues[i],
                            u8::from(record.schedule.contains(i))
                        );
                    }
                },
            )?
        } else {
            engine::run(&g, &spec, &models, slots, rep_seed, &thresholds)?
        };
        runs.push(stats);
    }
    let merged = engine::merge_runs(&runs).expect("at least one replication");
    let path = ctx
        .scenario
        .out
        .summary
        .clone()
        .unwrap_or_else(|| PathBuf::from("summary.csv"));
    let full = ctx.write_out(&path, &engine::summary_csv(&merged))?;
    ctx.note(&format!("wrote {}", full.display()));
    if let Some(t) = trace {
        let path = ctx
            .scenario
            .out
            .trace
            .clone()
            .unwrap_or_else(|| PathBuf::from("trace.csv"));
        let full = ctx.write_out(&path, &t)?;
        ctx.note(&format!("wrote {}", full.display()));
    }
    Ok(())
}

fn cmd_delay_exponent(ctx: &Ctx, empirical: bool) -> Result<(), AppError> {
    let g = ctx.graph()?;
    let n = g.link_count();
    let models = ctx.scenario.models(n)?;
    // With a fixed priority the competing sets come from it; otherwise the
    // worst case (whole neighborhoods) is reported.
    let rows = match resolve_priority(ctx, &g)? {
        Some(p) => {
            let targets = ctx
                .scenario
                .scheduler
                .targets
                .clone()
                .unwrap_or_else(|| vec![0.0; n]);
            delay::delay_region_check(&g, &models, &targets, &p)?.rows
        }
        None => delay::worst_case_exponents(&g, &models)?,
    };
    let estimates: Vec<Option<delay::OverflowEstimate>> = if empirical {
        let seed = ctx.require_seed("delay-exponent --empirical")?;
        let slots = ctx
            .scenario
            .sim
            .slots
            .ok_or(AppError::Error("--empirical needs `[sim] slots`".into()))?;
        let thresholds = if ctx.scenario.sim.thresholds.is_empty() {
            vec![1, 2, 3, 4, 5]
        } else {
            ctx.scenario.sim.thresholds.clone()
        };
        let spec = resolve_spec(ctx, &g)?;
        let mut ests = Vec::with_capacity(n);
        for i in 0..n {
            ests.push(Some(delay::estimate_overflow(
                &g,
                &spec,
                &models,
                i,
                &thresholds,
                slots,
                ctx.scenario.sim.reps.max(1),
                seed,
            )?));
        }
        ests
    } else {
        vec![None; n]
    };
    let refs: Vec<Option<&delay::OverflowEstimate>> =
        estimates.iter().map(|e| e.as_ref()).collect();
    let csv = delay::exponent_report_csv(&rows, &refs);
    let path = ctx
        .scenario
        .out
        .report
        .clone()
        .unwrap_or_else(|| PathBuf::from("exponents.csv"));
    let full = ctx.write_out(&path, &csv)?;
    ctx.note(&format!("wrote {}", full.display()));
    Ok(())
}
