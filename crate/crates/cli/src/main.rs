use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hetraf::harness::{
    bundled_spec, compare_engines, gen_synthetic, run_experiment, write_reports, CacheConfig, ExperimentConfig,
    GraphSource, Partitioner, SyntheticSpec,
};
use hetraf::hetgraph::{build_metagraph, load_graph, save_graph};
use hetraf::metapartition::{
    boundary_nodes, materialize_partitions, meta_partition, parse_metapaths, save_plan,
    MetatreeMode, WeightPolicy,
};
use hetraf::raf_exec::Engine;

#[derive(Parser)]
#[command(name = "hetraf", version, about = "Meta-partitioning and relation-aggregation-first HGNN training simulator")]
struct Cli {
    /// Directory for reports.
    #[arg(long, env = "HETRAF_OUT_DIR", default_value = "out", global = true)]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph container.
    Gen {
        /// Bundled spec name or path to a spec JSON file.
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Meta-partition a graph and write one container per partition.
    Partition {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        parts: usize,
        #[arg(long)]
        hops: usize,
        /// JSON list of metapaths, each a list of [src, etype, dst] triples.
        #[arg(long)]
        metapaths: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Policy::Unique)]
        weight_policy: Policy,
        #[arg(long)]
        out: PathBuf,
        /// Print per-partition counts as JSON.
        #[arg(long)]
        stats: bool,
    },
    /// Train and write stats JSON plus a CSV summary row.
    Train(RunArgs),
    /// Compare bytes moved by vanilla-random, raf-random and raf-meta.
    Compare(RunArgs),
    /// Simulate per-worker feature caches over a training schedule.
    CacheSim {
        #[command(flatten)]
        run: RunArgs,
        /// Per-worker budget in bytes.
        #[arg(long, default_value_t = 1 << 20)]
        budget: u64,
        /// Split by visit count only.
        #[arg(long)]
        hotness_only: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Unique,
    Multiset,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Raf,
    Vanilla,
}

#[derive(Clone, Copy, ValueEnum)]
enum PartitionerArg {
    Meta,
    RandomNode,
    RandomRelation,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config JSON; replaces every other run flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Graph container file.
    #[arg(long, conflicts_with = "bundled")]
    graph: Option<PathBuf>,
    /// Bundled spec name.
    #[arg(long, default_value = "mag-mini")]
    bundled: String,
    /// Saved plan directory from `partition`.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EngineArg::Raf)]
    engine: EngineArg,
    #[arg(long, value_enum)]
    partitioner: Option<PartitionerArg>,
    #[arg(long, default_value_t = 2)]
    parts: usize,
    #[arg(long, value_delimiter = ',', default_value = "25,20")]
    fanouts: Vec<usize>,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 256)]
    batch: usize,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[arg(long)]
    max_batches: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    elem_width: u64,
    /// Also compare both engines on the first batch.
    #[arg(long)]
    check_equivalence: bool,
    /// Stats JSON path; defaults to `<out-dir>/stats.json`.
    #[arg(long)]
    stats: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            return ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()));
        }
        let engine = match self.engine {
            EngineArg::Raf => Engine::Raf,
            EngineArg::Vanilla => Engine::Vanilla,
        };
        let partitioner = match (self.partitioner, engine) {
            (Some(PartitionerArg::Meta), _) => Partitioner::Meta,
            (Some(PartitionerArg::RandomNode), _) => Partitioner::RandomNode,
            (Some(PartitionerArg::RandomRelation), _) => Partitioner::RandomRelation,
            (None, Engine::Raf) => Partitioner::Meta,
            (None, Engine::Vanilla) => Partitioner::RandomNode,
        };
        let graph = match &self.graph {
            Some(path) => GraphSource::File { path: path.clone() },
            None => GraphSource::Bundled {
                name: self.bundled.clone(),
            },
        };
        let cfg = ExperimentConfig {
            name: graph.label(),
            graph,
            partitioner,
            parts: self.parts,
            engine,
            fanouts: self.fanouts.clone(),
            hidden: self.hidden,
            batch_size: self.batch,
            epochs: self.epochs,
            max_batches: self.max_batches,
            seed: self.seed,
            elem_width: self.elem_width,
            check_equivalence: self.check_equivalence,
            plan_dir: self.plan.clone(),
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_spec(spec: &str) -> Result<SyntheticSpec> {
    if let Some(s) = bundled_spec(spec) {
        return Ok(s);
    }
    let text = std::fs::read_to_string(spec).with_context(|| format!("`{spec}` is neither a bundled spec nor a readable file"))?;
    Ok(serde_json::from_str(&text)?)
}

fn partition(
    graph: &Path,
    parts: usize,
    hops: usize,
    metapaths: Option<&Path>,
    policy: Policy,
    out: &Path,
    stats: bool,
) -> Result<()> {
    let (g, _) = load_graph(graph).with_context(|| format!("loading {}", graph.display()))?;
    let m = build_metagraph(&g);
    let mode = match metapaths {
        Some(p) => MetatreeMode::Metapaths(parse_metapaths(&std::fs::read_to_string(p)?, &m)?),
        None => MetatreeMode::Bfs(hops),
    };
    let policy = match policy {
        Policy::Unique => WeightPolicy::Unique,
        Policy::Multiset => WeightPolicy::Multiset,
    };
    let plan = meta_partition(&m, g.target, mode, parts, policy)?;
    let mats = materialize_partitions(&g, &plan)?;
    save_plan(out, &plan, &mats)?;
    if stats {
        let rows: Vec<serde_json::Value> = mats
            .iter()
            .map(|p| {
                serde_json::json!({
                    "id": p.id,
                    "nodes": p.graph.num_nodes(),
                    "edges": p.graph.num_edges(),
                    "relations": p.relation_ids.iter().map(|&r| g.relation_label(r)).collect::<Vec<_>>(),
                    "weight": plan.partitions[p.id].weight,
                    "boundary": boundary_nodes(p, &plan).len(),
                    "replica_group": plan.partitions[p.id].replica.group,
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&rows)?);
    }
    Ok(())
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen { spec, seed, out } => {
            let g = gen_synthetic(&load_spec(&spec)?, seed)?;
            if let Some(dir) = out.parent() {
                std::fs::create_dir_all(dir)?;
            }
            save_graph(&out, &g, None)?;
            eprintln!("wrote {} ({} nodes, {} edges)", out.display(), g.num_nodes(), g.num_edges());
        }
        Command::Partition {
            graph,
            parts,
            hops,
            metapaths,
            weight_policy,
            out,
            stats,
        } => partition(&graph, parts, hops, metapaths.as_deref(), weight_policy, &out, stats)?,
        Command::Train(args) => {
            let cfg = args.config()?;
            let stats = run_experiment(&cfg)?;
            let (json, csv) = write_reports(&stats, &cli.out_dir)?;
            if let Some(path) = &args.stats {
                std::fs::copy(&json, path)?;
            }
            eprintln!("wrote {} and {}", json.display(), csv.display());
            for v in &stats.verdicts.violations {
                eprintln!("violation: {v}");
            }
            if !stats.verdicts.passed {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Compare(args) => {
            let cfg = args.config()?;
            let c = compare_engines(&cfg)?;
            std::fs::create_dir_all(&cli.out_dir)?;
            let path = cli.out_dir.join("comparison.json");
            std::fs::write(&path, serde_json::to_string_pretty(&c)?)?;
            for r in &c.rows {
                println!("{:<16} {:>14} bytes", r.label, r.total);
            }
            if !c.monotone {
                eprintln!("byte totals are not ordered raf-meta <= raf-random <= vanilla-random");
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::CacheSim {
            run,
            budget,
            hotness_only,
        } => {
            let mut cfg = run.config()?;
            if cfg.cache.is_none() || run.config.is_none() {
                cfg.cache = Some(CacheConfig {
                    budget_bytes: budget,
                    penalty_aware: !hotness_only,
                    ..Default::default()
                });
            }
            cfg.epochs = cfg.epochs.max(1);
            let stats = run_experiment(&cfg)?;
            let Some(report) = stats.cache else {
                bail!("cache simulation produced no report");
            };
            std::fs::create_dir_all(&cli.out_dir)?;
            let path = cli.out_dir.join("cache.json");
            std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
            println!("hit rate {:.4}, penalty {:.0} ns", report.hit_rate(), report.penalty_ns());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
