use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fouriercsp_core::benchmarks::{
    expression_family, gen_coloring, gen_scheduling, par2_term, relative_score, summarize,
    ColoringSpec, SchedulingSpec, ScoreRow, COLOR_GRID, NODE_GRID, RATIO_GRID, WORKER_GRID,
};
use fouriercsp_core::cop::cop_gradient;
use fouriercsp_core::mdd::{build_atomic, read_mdd_file, write_mdd_file, EdgeTable};
use fouriercsp_core::model::format::{read_instance_file, write_instance};
use fouriercsp_core::optimizer::cls_solve;
use fouriercsp_core::{Instance, Mdd, RoundingMode, RowMatrix, SolverConfig, StepSize, VariableOrder};

const EXIT_SATISFIED: u8 = 10;
const EXIT_BEST_EFFORT: u8 = 20;
const EXIT_ERROR: u8 = 1;

#[derive(Parser)]
#[command(name = "fouriercsp", version, about = "Gradient-based constraint solver")]
struct Cli {
    /// Worker threads for restarts and constraint evaluation.
    #[arg(long, global = true, env = "FOURIERCSP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance; prints one JSON report line.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate benchmark instances.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Compile, evaluate and validate decision diagrams.
    #[command(subcommand)]
    Mdd(MddCommand),
    /// Solve every instance in a directory and score the results as CSV.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// CSV with columns `instance,best` (best-known soft cost).
        #[arg(long)]
        best_known: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 1000.0)]
    timeout: f64,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// `auto`, `backtracking` or a positive number.
    #[arg(long, default_value = "auto")]
    step_size: StepSize,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// `randomized` or `argmax`.
    #[arg(long, default_value = "randomized")]
    rounding: RoundingMode,
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluate diagrams with the batched engine.
    #[arg(long)]
    batch: bool,
    /// Omit timing fields so output is reproducible byte for byte.
    #[arg(long)]
    deterministic: bool,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig> {
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            bail!("--timeout must be a positive number of seconds");
        }
        let config = SolverConfig {
            step_size: self.step_size,
            max_iter: self.max_iter,
            restarts: self.restarts,
            eps: self.eps,
            rounding: self.rounding,
            samples: self.samples,
            seed: self.seed,
            time_budget: Duration::from_secs_f64(self.timeout),
            deterministic: self.deterministic,
            batch: self.batch,
            order: VariableOrder::Instance,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum GenCommand {
    /// Precedence-constrained scheduling: `ratio * workers` jobs.
    Scheduling {
        #[arg(long)]
        workers: u32,
        #[arg(long)]
        ratio: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Accept values outside the standard grid.
        #[arg(long)]
        off_grid: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Graph coloring with parity soft constraints.
    Coloring {
        #[arg(long)]
        nodes: u32,
        #[arg(long)]
        colors: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        off_grid: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The 36 single-expression test cases, one file each.
    Family {
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum MddCommand {
    /// Write one `.mdd` per constraint of an instance.
    Build {
        instance: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Pad every table with all-zero rows up to this many rows.
        #[arg(long, default_value_t = 0)]
        pad_to: usize,
    },
    /// Print the probability of satisfaction and its gradient.
    Eval {
        file: PathBuf,
        /// `uniform` or a CSV file with one row of probabilities per variable.
        #[arg(long, default_value = "uniform")]
        point: String,
    },
    /// Validate a `.mdd` file.
    Check { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Solve {
            instance,
            solver,
            out,
        } => cmd_solve(&instance, &solver, out.as_deref()),
        Command::Gen(g) => cmd_gen(g).map(|_| 0),
        Command::Mdd(m) => cmd_mdd(m).map(|_| 0),
        Command::Bench {
            dir,
            solver,
            best_known,
            out,
        } => cmd_bench(&dir, &solver, best_known.as_deref(), out.as_deref()).map(|_| 0),
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    read_instance_file(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_solve(path: &Path, args: &SolverArgs, out: Option<&Path>) -> Result<u8> {
    let config = args.config()?;
    let instance = load_instance(path)?;
    let report = cls_solve(&instance, &config)?;
    eprintln!(
        "{}: {} hard {}/{}, soft cost {}, {} restart(s)",
        path.display(),
        if report.satisfied { "SATISFIED" } else { "BEST-EFFORT" },
        report.hard_satisfied,
        report.hard_total,
        report.soft_cost,
        report.restarts.len()
    );
    emit(out, &format!("{}\n", report.to_json()))?;
    Ok(if report.satisfied {
        EXIT_SATISFIED
    } else {
        EXIT_BEST_EFFORT
    })
}

fn check_grid(name: &str, value: u32, grid: &[u32], off_grid: bool) -> Result<()> {
    if !off_grid && !grid.contains(&value) {
        bail!("{name} {value} is not on the standard grid {grid:?} (pass --off-grid to allow it)");
    }
    Ok(())
}

fn cmd_gen(cmd: GenCommand) -> Result<()> {
    match cmd {
        GenCommand::Scheduling {
            workers,
            ratio,
            seed,
            off_grid,
            out,
        } => {
            check_grid("--workers", workers, &WORKER_GRID, off_grid)?;
            check_grid("--ratio", ratio, &RATIO_GRID, off_grid)?;
            let spec = SchedulingSpec::from_grid(workers, ratio, seed);
            let g = gen_scheduling(&spec)?;
            eprintln!(
                "{} jobs, {} dependencies, {} constraints",
                spec.tasks(),
                g.edges.len(),
                g.instance.constraints().len()
            );
            emit(out.as_deref(), &write_instance(&g.instance))
        }
        GenCommand::Coloring {
            nodes,
            colors,
            seed,
            off_grid,
            out,
        } => {
            check_grid("--nodes", nodes, &NODE_GRID, off_grid)?;
            check_grid("--colors", colors, &COLOR_GRID, off_grid)?;
            let g = gen_coloring(&ColoringSpec {
                nodes,
                colors,
                seed,
            })?;
            eprintln!(
                "{} nodes, {} edges, {} parity constraints",
                nodes,
                g.edges.len(),
                g.instance.constraints().iter().filter(|c| c.soft).count()
            );
            emit(out.as_deref(), &write_instance(&g.instance))
        }
        GenCommand::Family { out_dir } => {
            fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            for case in expression_family() {
                let path = out_dir.join(format!("c{}.csp", case.index));
                fs::write(&path, write_instance(&case.instance()?))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
    }
}

fn cmd_mdd(cmd: MddCommand) -> Result<()> {
    match cmd {
        MddCommand::Build {
            instance,
            out_dir,
            pad_to,
        } => {
            let inst = load_instance(&instance)?;
            fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let stem = instance
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("constraint");
            let single = inst.constraints().len() == 1;
            for (k, c) in inst.constraints().iter().enumerate() {
                let mdd = build_atomic(c, inst.variables(), &VariableOrder::Instance)
                    .with_context(|| format!("compiling constraint {}", k + 1))?;
                let name = if single {
                    format!("{stem}.mdd")
                } else {
                    format!("{stem}-{}.mdd", k + 1)
                };
                let path = out_dir.join(name);
                write_mdd_file(&path, &mdd, pad_to)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        MddCommand::Eval { file, point } => {
            let mdd = read_mdd_file(&file).with_context(|| format!("reading {}", file.display()))?;
            let p = if point == "uniform" {
                RowMatrix::uniform(&mdd_shape(&mdd))
            } else {
                read_point(Path::new(&point))?
            };
            let (cop, grad) = cop_gradient(&mdd, &p)?;
            #[derive(Serialize)]
            struct Eval {
                cop: f64,
                gradient: Vec<Vec<f64>>,
            }
            let out = Eval {
                cop,
                gradient: grad.to_rows(),
            };
            println!("{}", serde_json::to_string(&out)?);
            Ok(())
        }
        MddCommand::Check { file } => {
            let text =
                fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let mdd = EdgeTable::parse(&text)
                .and_then(|t| t.to_mdd())
                .with_context(|| format!("checking {}", file.display()))?;
            eprintln!(
                "{}: ok, {} nodes, {} edges",
                file.display(),
                mdd.node_count(),
                mdd.edge_count()
            );
            Ok(())
        }
    }
}

/// Rows up to the largest variable in the diagram; variables it does not
/// mention get a single-entry row.
fn mdd_shape(mdd: &Mdd) -> Vec<usize> {
    let rows = mdd.levels().iter().map(|l| l.var.row() + 1).max().unwrap_or(0);
    let mut shape = vec![1; rows];
    for l in mdd.levels() {
        shape[l.var.row()] = l.size as usize;
    }
    shape
}

fn read_point(path: &Path) -> Result<RowMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        rows.push(row);
    }
    Ok(RowMatrix::from_rows(rows)?)
}

fn read_best_known(path: &Path) -> Result<HashMap<String, f64>> {
    #[derive(serde::Deserialize)]
    struct Row {
        instance: String,
        best: f64,
    }
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = HashMap::new();
    for rec in reader.deserialize() {
        let r: Row = rec.with_context(|| format!("parsing {}", path.display()))?;
        out.insert(r.instance, r.best);
    }
    Ok(out)
}

fn cmd_bench(
    dir: &Path,
    args: &SolverArgs,
    best_known: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let config = args.config()?;
    let best = best_known.map(read_best_known).transpose()?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csp"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no instances (*.csp) in {}", dir.display());
    }
    let limit = args.timeout;
    let mut rows = Vec::with_capacity(files.len());
    for path in &files {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let started = Instant::now();
        let result = load_instance(path).and_then(|inst| Ok(cls_solve(&inst, &config)?));
        let elapsed = started.elapsed().as_secs_f64();
        let row = match result {
            Ok(report) => {
                let time_s = if config.deterministic { 0.0 } else { elapsed };
                let solved = report.satisfied && elapsed <= limit;
                ScoreRow {
                    relative_score: best
                        .as_ref()
                        .and_then(|b| b.get(&name))
                        .map(|&b| relative_score(report.soft_cost, b)),
                    instance: name,
                    seed: config.seed,
                    solved,
                    time_s,
                    hard_violations: report.hard_total - report.hard_satisfied,
                    soft_cost: report.soft_cost,
                    par2_contrib: par2_term(time_s, solved, limit),
                }
            }
            Err(e) => {
                eprintln!("{}: {e:#}", path.display());
                ScoreRow {
                    instance: name,
                    seed: config.seed,
                    solved: false,
                    time_s: elapsed,
                    hard_violations: 0,
                    soft_cost: f64::NAN,
                    par2_contrib: 2.0 * limit,
                    relative_score: None,
                }
            }
        };
        rows.push(row);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let csv_text = String::from_utf8(w.into_inner()?)?;
    emit(out, &csv_text)?;
    let s = summarize(&rows, limit)?;
    eprintln!(
        "instances {} solved {} par2 {:.3} mean relative score {} wins {}",
        s.instances,
        s.solved,
        s.par2,
        s.mean_relative_score
            .map_or("n/a".to_string(), |v| format!("{v:.4}")),
        s.wins
    );
    Ok(())
}
