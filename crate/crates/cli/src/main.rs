//! Command-line front end: instance generation, solving, the segmented loop,
//! oracle labels, trace export and the evaluation runs.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fsta_core::backbone::{MoveBudget, SolveMode};
use fsta_core::driver::{
    eval_segmenter, export_traces, measure_redundancy, run_fsta_loop, run_plain_loop, LoopConfig, RedundancyConfig,
    RunStats, TraceConfig,
};
use fsta_core::fsta::{verify_theorem, AggregationOptions};
use fsta_core::gen_io::{
    generate, initial_solution_sweep, parse_cvrplib, read_instance_doc, read_solution_doc, write_cvrplib,
    write_instance_doc, write_prediction_doc, write_solution_doc, write_trace_record, GenSpec, SweepParams,
};
use fsta_core::model::{check_feasibility, evaluate_objective, Instance, Solution, Variant};
use fsta_core::segmenter::{detect, oracle_edges, Backbone, SegmenterPolicy};
use fsta_core::mix_seed;

#[derive(Parser, Debug)]
#[command(name = "fsta", version, about = "Segment-then-aggregate re-optimization for vehicle routing")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Draw a random instance.
    Generate {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the plain backbone loop from the sweep solution.
    Solve {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the segment-then-aggregate loop.
    FstaRun {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "oracle:1000")]
        segmenter: String,
        #[arg(long)]
        oracle_free_time: bool,
    },
    /// Write the lookahead oracle's unstable edges as a prediction document.
    OracleLabel {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Solution document; defaults to the sweep solution.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long, default_value = "lns")]
        backbone: String,
        #[arg(long, default_value_t = 1000)]
        moves_per_iter: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export NAR/AR supervision traces over generated instances.
    ExportTraces {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Number of instances, seeded consecutively from --seed.
        #[arg(long, default_value_t = 1)]
        instances: usize,
        #[arg(long, default_value = "lns")]
        backbone: String,
        #[arg(long, default_value_t = 1000)]
        moves_per_iter: u64,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long, default_value_t = 0.0)]
        eta_improv: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha_ac: f64,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score a segmenter against the lookahead oracle inside the loop.
    EvalSegmenter {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "geometric:10:0.8")]
        segmenter: String,
        #[arg(long, default_value_t = 1)]
        instances: usize,
    },
    /// Changed-edge fraction of each backbone step.
    Redundancy {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, default_value = "lns")]
        backbone: String,
        #[arg(long, default_value_t = 1000)]
        moves_per_iter: u64,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check feasibility transfer and order preservation on a random reduction.
    VerifyTheorem {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Share of non-depot edges marked unstable.
        #[arg(long, default_value_t = 0.4)]
        fraction: f64,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long)]
        force_pair: bool,
    },
    /// Parse a CVRPLib file or an instance document and write it back out.
    Parse {
        file: PathBuf,
        /// Output format: `cvrplib` or `doc`.
        #[arg(long, default_value = "doc")]
        to: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct InstanceArgs {
    /// Instance document to load instead of generating one.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value = "cvrp")]
    variant: String,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 50.0)]
    capacity: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[arg(long, default_value = "lns")]
    backbone: String,
    #[arg(long, default_value_t = 1000)]
    moves_per_iter: u64,
    #[arg(long)]
    time_limit_ms: Option<u64>,
    #[arg(long)]
    iters: Option<usize>,
    /// Solution document output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-iteration stats, one JSON object per line.
    #[arg(long)]
    stats: Option<PathBuf>,
}

fn mode(s: &str) -> Result<SolveMode> {
    match s {
        "ls" => Ok(SolveMode::PlainLs),
        "lns" => Ok(SolveMode::Lns),
        other => bail!("unknown backbone `{other}` (expected ls or lns)"),
    }
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_instance(args: &InstanceArgs, seed_offset: u64) -> Result<Instance> {
    if let Some(path) = &args.instance {
        let text = read(path)?;
        let parsed = if text.trim_start().starts_with("instance ") {
            read_instance_doc(&text)
        } else {
            parse_cvrplib(&text)
        };
        return parsed.with_context(|| format!("cannot parse {}", path.display()));
    }
    let variant: Variant = args.variant.parse()?;
    Ok(generate(&GenSpec::new(variant, args.n, args.capacity, args.seed + seed_offset))?)
}

fn sweep(instance: &Instance, moves: u64, seed: u64) -> Result<Solution> {
    Ok(initial_solution_sweep(instance, &SweepParams::default(), &MoveBudget::moves(moves, seed))?)
}

fn loop_config(run: &RunArgs, seed: u64, policy: SegmenterPolicy) -> Result<LoopConfig> {
    let mut cfg = LoopConfig::new(policy, mode(&run.backbone)?, MoveBudget::moves(run.moves_per_iter, seed));
    cfg.seed = seed;
    cfg.time_limit_ms = run.time_limit_ms;
    cfg.max_iters = run.iters;
    if cfg.max_iters.is_none() && cfg.time_limit_ms.is_none() {
        cfg.max_iters = Some(10);
    }
    Ok(cfg)
}

fn finish(instance: &Instance, run: &RunArgs, solution: &Solution, stats: &RunStats) -> Result<()> {
    if let Some(path) = &run.stats {
        stats.write_jsonl(BufWriter::new(File::create(path)?))?;
    }
    let objective = evaluate_objective(instance, solution)?;
    let mut w = sink(&run.out)?;
    w.write_all(write_solution_doc(solution, objective).as_bytes())?;
    w.flush()?;
    eprintln!(
        "objective {:.6} -> {:.6} in {} iterations ({:.0} ms charged)",
        stats.initial_objective, objective, stats.iterations_run, stats.elapsed_ms
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Cmd::Generate { inst, out } => {
            let instance = load_instance(&inst, 0)?;
            let mut w = sink(&out)?;
            w.write_all(write_instance_doc(&instance).as_bytes())?;
            w.flush()?;
        }
        Cmd::Solve { inst, run } => {
            let instance = load_instance(&inst, 0)?;
            let init = sweep(&instance, run.moves_per_iter, inst.seed)?;
            let cfg = loop_config(&run, inst.seed, SegmenterPolicy::Random { fraction: 1.0, seed: 0 })?;
            let (sol, stats) = run_plain_loop(&instance, &init, &cfg)?;
            finish(&instance, &run, &sol, &stats)?;
        }
        Cmd::FstaRun { inst, run, segmenter, oracle_free_time } => {
            let instance = load_instance(&inst, 0)?;
            let init = sweep(&instance, run.moves_per_iter, inst.seed)?;
            let mut cfg = loop_config(&run, inst.seed, segmenter.parse()?)?;
            cfg.oracle_free_time = oracle_free_time;
            let (sol, stats) = run_fsta_loop(&instance, &init, &cfg)?;
            finish(&instance, &run, &sol, &stats)?;
        }
        Cmd::OracleLabel { inst, solution, backbone, moves_per_iter, out } => {
            let instance = load_instance(&inst, 0)?;
            let start = match &solution {
                Some(p) => read_solution_doc(&read(p)?)?.0,
                None => sweep(&instance, moves_per_iter, inst.seed)?,
            };
            if !check_feasibility(&instance, &start).feasible {
                bail!("the starting solution is infeasible");
            }
            let budget = MoveBudget::moves(moves_per_iter, inst.seed);
            let (set, _) = oracle_edges(&instance, &start, &budget, &Backbone::new(mode(&backbone)?))?;
            let mut w = sink(&out)?;
            w.write_all(write_prediction_doc(instance.id(), &set).as_bytes())?;
            w.flush()?;
        }
        Cmd::ExportTraces { inst, instances, backbone, moves_per_iter, iters, eta_improv, alpha_ac, trace } => {
            let cfg = TraceConfig {
                n_problems: instances,
                iterations: iters,
                eta_improv,
                alpha_ac,
                seed: inst.seed,
                backbone: Backbone::new(mode(&backbone)?),
                per_iter: MoveBudget::moves(moves_per_iter, inst.seed),
            };
            let stream = (0..instances as u64).map(|k| {
                let instance = load_instance(&inst, k).map_err(|e| fsta_core::Error::InvalidSpec(e.to_string()))?;
                let init = initial_solution_sweep(&instance, &SweepParams::default(), &MoveBudget::moves(0, k))?;
                Ok((instance, init))
            });
            let mut w = sink(&trace)?;
            let summary = export_traces(stream, &cfg, |rec| write_trace_record(&mut w, &rec))?;
            w.flush()?;
            eprintln!("{}", serde_json::to_string(&summary)?);
        }
        Cmd::EvalSegmenter { inst, run, segmenter, instances } => {
            let policy: SegmenterPolicy = segmenter.parse()?;
            let cfg = loop_config(&run, inst.seed, policy.clone())?;
            let set = (0..instances as u64)
                .map(|k| {
                    let instance = load_instance(&inst, k)?;
                    let init = sweep(&instance, 0, k)?;
                    Ok((instance, init))
                })
                .collect::<Result<Vec<_>>>()?;
            let oracle = MoveBudget::moves(run.moves_per_iter, inst.seed);
            let report = eval_segmenter(&set, &policy, &cfg, oracle)?;
            if let Some(path) = &run.stats {
                let mut w = BufWriter::new(File::create(path)?);
                for r in &report.runs {
                    r.write_jsonl(&mut w)?;
                }
            }
            let mut w = sink(&run.out)?;
            writeln!(
                w,
                "{}",
                serde_json::json!({
                    "policy": report.policy,
                    "recall": report.recall,
                    "tnr": report.tnr,
                    "mean_size_ratio": report.mean_size_ratio,
                    "counts": report.counts,
                })
            )?;
            w.flush()?;
        }
        Cmd::Redundancy { inst, backbone, moves_per_iter, iters, out } => {
            let instance = load_instance(&inst, 0)?;
            let init = sweep(&instance, 0, inst.seed)?;
            let cfg = RedundancyConfig {
                backbone: Backbone::new(mode(&backbone)?),
                per_step: MoveBudget::moves(moves_per_iter, inst.seed),
                seed: inst.seed,
            };
            let fractions = measure_redundancy(&instance, &init, &cfg, iters)?;
            let mut w = sink(&out)?;
            for (t, f) in fractions.iter().enumerate() {
                writeln!(w, "{}", serde_json::json!({ "step": t + 1, "changed_frac": f }))?;
            }
            w.flush()?;
        }
        Cmd::VerifyTheorem { inst, fraction, trials, force_pair } => {
            let instance = load_instance(&inst, 0)?;
            let solution = sweep(&instance, 0, inst.seed)?;
            let policy = SegmenterPolicy::Random { fraction, seed: mix_seed(inst.seed, 1) };
            let unstable = detect(&policy, &instance, &solution, None)?;
            let opts = AggregationOptions {
                vrptw_force_pair: force_pair,
                ..AggregationOptions::default()
            };
            let report = verify_theorem(&instance, &solution, &unstable, trials, inst.seed, &opts)?;
            println!("{}", serde_json::to_string(&report)?);
            if !report.passed() {
                bail!("violations found");
            }
        }
        Cmd::Parse { file, to, out } => {
            let text = read(&file)?;
            let instance = if text.trim_start().starts_with("instance ") {
                read_instance_doc(&text)?
            } else {
                parse_cvrplib(&text)?
            };
            let body = match to.as_str() {
                "doc" => write_instance_doc(&instance),
                "cvrplib" => write_cvrplib(&instance),
                other => bail!("unknown output format `{other}`"),
            };
            let mut w = sink(&out)?;
            w.write_all(body.as_bytes())?;
            w.flush()?;
        }
    }
    Ok(())
}
