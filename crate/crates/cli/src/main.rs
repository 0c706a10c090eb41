use std::fs;
use std::path::{Path, PathBuf};

use adjbai::algorithms::{Algorithm, Plan};
use adjbai::complexity::complexity_report;
use adjbai::design::{
    adjacent_optimal, g_optimal, round_design, xy_optimal, Design, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use adjbai::geometry::{compute_adjacent_pairs, hull_oracle_2d, ArmSet};
use adjbai::harness::acceptance::{acceptance_suite, AcceptanceConfig};
use adjbai::harness::{sweep_with_jobs, trial_rng, ExperimentSpec};
use adjbai::instances::construct_hard_pair;
use adjbai::io::{
    load_arms, load_instance, load_weights, save_instance, write_allocation_csv, write_json, AdjacencyJson,
    ArmFormat, DesignJson, PairManifest,
};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "adjbai", version, about = "Fixed-budget best-arm identification for non-stationary linear bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    G,
    Xy,
    Adjacent,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Adjacent,
    G,
}

#[derive(Subcommand)]
enum Command {
    /// Extreme points, hull edges and edge witnesses.
    Adjacency {
        #[arg(long)]
        arms: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Compare against the planar hull (d = 2 only); exits non-zero on mismatch.
        #[arg(long)]
        oracle_check: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal design for arm, pair or adjacent-pair directions.
    Design {
        #[arg(long)]
        arms: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Round the design to this many plays.
        #[arg(long = "round", value_name = "T_BUDGET")]
        round: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Allocation CSV written when rounding.
        #[arg(long, default_value = "allocation.csv")]
        alloc_out: PathBuf,
    },
    /// Complexity measures and error bounds.
    Complexity {
        #[arg(long)]
        arms: PathBuf,
        #[arg(long)]
        gap: f64,
        #[arg(long = "T")]
        horizon: Option<usize>,
        /// JSON array giving a parameter whose best arm sets the degree.
        #[arg(long)]
        theta: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two instances that are hard to tell apart for a given design.
    Hardpair {
        #[arg(long)]
        arms: PathBuf,
        /// Adjacent pair `i,j`; instance A has best arm i, instance B best arm j.
        #[arg(long, value_parser = parse_pair)]
        pair: (usize, usize),
        #[arg(long)]
        gap: f64,
        #[arg(long = "T")]
        horizon: usize,
        /// Design weights (design JSON or array); defaults to the adjacent-optimal design.
        #[arg(long)]
        lambda: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// One run of an algorithm on an instance.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long)]
        seed: u64,
        /// Full record of the run.
        #[arg(long)]
        audit: Option<PathBuf>,
    },
    /// Monte Carlo sweep over instances, algorithms and budgets.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Acceptance suite; writes acceptance.json into the work directory.
    Accept {
        #[arg(long)]
        workdir: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected i,j, got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn emit<S: Serialize>(value: &S, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_json(p, value).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn arms(path: &Path, format: Option<Format>) -> Result<ArmSet<f64>> {
    let format = format.map(|f| match f {
        Format::Csv => ArmFormat::Csv,
        Format::Json => ArmFormat::Json,
    });
    load_arms(path, format).with_context(|| format!("loading arms from {}", path.display()))
}

fn solve(x: &ArmSet<f64>, kind: Kind, tol: f64) -> Result<Design<f64>> {
    Ok(match kind {
        Kind::G => g_optimal(x, tol, DEFAULT_MAX_ITER)?,
        Kind::Xy => xy_optimal(x, &compute_adjacent_pairs(x)?, tol, DEFAULT_MAX_ITER)?,
        Kind::Adjacent => adjacent_optimal(x, &compute_adjacent_pairs(x)?, tol, DEFAULT_MAX_ITER)?,
    })
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Adjacency { arms: path, format, oracle_check, out } => {
            let x = arms(&path, format)?;
            let adj = compute_adjacent_pairs(&x)?;
            emit(&AdjacencyJson::from_structure(&adj), out.as_deref())?;
            if oracle_check {
                let oracle = hull_oracle_2d(&x)?;
                if !adj.same_combinatorics(&oracle) {
                    bail!(
                        "oracle mismatch: edges {:?} vs hull {:?}",
                        adj.adjacent_pairs,
                        oracle.adjacent_pairs
                    );
                }
                eprintln!("oracle check: match ({} edges)", adj.adjacent_pairs.len());
            }
        }
        Command::Design { arms: path, kind, tol, round, out, alloc_out } => {
            let x = arms(&path, None)?;
            let des = solve(&x, kind, tol)?;
            emit(&DesignJson::from_design(&des), out.as_deref())?;
            if let Some(t) = round {
                let alloc = round_design(&x, &des, t)?;
                write_allocation_csv(&alloc_out, &alloc)?;
                eprintln!("allocation of {t} plays written to {} (factor {:.4})", alloc_out.display(), alloc.variance_factor);
            }
        }
        Command::Complexity { arms: path, gap, horizon, theta, out } => {
            let x = arms(&path, None)?;
            let adj = compute_adjacent_pairs(&x)?;
            let theta: Option<Vec<f64>> = theta
                .map(|p| -> Result<Vec<f64>> {
                    let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    Ok(serde_json::from_str(&text)?)
                })
                .transpose()?;
            let report = complexity_report(&x, &adj, gap, theta.as_deref(), horizon)?;
            emit(&report, out.as_deref())?;
        }
        Command::Hardpair { arms: path, pair, gap, horizon, lambda, out_dir } => {
            let x = arms(&path, None)?;
            let adj = compute_adjacent_pairs(&x)?;
            let weights = match lambda {
                Some(p) => load_weights(&p)?,
                None => adjacent_optimal(&x, &adj, DEFAULT_TOL, DEFAULT_MAX_ITER)?.weights,
            };
            let hp = construct_hard_pair(&x, &adj, pair, &weights, gap, horizon)?;
            fs::create_dir_all(&out_dir)?;
            save_instance(&out_dir.join("instance_a.json"), &hp.instance_a)?;
            save_instance(&out_dir.join("instance_b.json"), &hp.instance_b)?;
            let manifest = PairManifest::new(&hp, "instance_a.json".into(), "instance_b.json".into());
            write_json(&out_dir.join("pair.json"), &manifest)?;
            emit(&manifest, None)?;
        }
        Command::Run { instance, algo, seed, audit } => {
            let inst = load_instance(&instance).with_context(|| format!("loading {}", instance.display()))?;
            let algorithm = match algo {
                Algo::Adjacent => Algorithm::Adjacent,
                Algo::G => Algorithm::G,
            };
            let budget = Plan::new(inst.arms(), algorithm)?.budget(inst.horizon())?;
            let run = budget.run(&inst, &mut trial_rng(seed, 0, 0))?;
            let best = inst.best_arm();
            emit(&json!({"algo": algorithm.name(), "chosen": run.chosen_arm, "best": best, "correct": run.chosen_arm == best}), None)?;
            if let Some(p) = audit {
                let record = json!({
                    "algo": algorithm.name(),
                    "seed": seed,
                    "T": inst.horizon(),
                    "counts": run.allocation.counts,
                    "variance_factor": run.allocation.variance_factor,
                    "permutation": run.permutation,
                    "schedule": run.schedule,
                    "rewards": run.rewards,
                    "gram": run.gram.to_rows(),
                    "estimator": run.estimator,
                    "chosen": run.chosen_arm,
                    "best": best,
                    "correct": run.chosen_arm == best,
                });
                write_json(&p, &record)?;
            }
        }
        Command::Simulate { spec, out, csv, jobs } => {
            let spec = ExperimentSpec::load(&spec).with_context(|| format!("loading {}", spec.display()))?;
            let report = sweep_with_jobs(&spec, jobs)?;
            report.write_json(&out)?;
            if let Some(p) = csv {
                report.write_csv(&p)?;
            }
            eprintln!("{} cells, {} failed", report.cells.len(), report.failed_cells);
            if report.failed_cells > 0 {
                for c in report.cells.iter().filter(|c| c.failure.is_some()) {
                    eprintln!("  {} {} T={}: {}", c.instance, c.algo, c.horizon, c.failure.as_deref().unwrap_or(""));
                }
            }
        }
        Command::Accept { workdir, trials, seed } => {
            let mut cfg = AcceptanceConfig::default();
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let manifest = acceptance_suite(&workdir, &cfg)?;
            for c in &manifest.criteria {
                println!("criterion {:>2} {:<26} {}  {}", c.id, c.name, if c.passed { "PASS" } else { "FAIL" }, c.summary);
            }
            println!("manifest: {}", workdir.join("acceptance.json").display());
            if !manifest.passed {
                std::process::exit(1);
            }
        }
    }
    Ok(())
}
