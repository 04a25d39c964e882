//! Command-line front end: instance generation, solving, multi-seed
//! benchmarks and independent solution verification.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use trsp::bench::{run_benchmark, trace_data, BestKnownTable, Report};
use trsp::io::format::{read_trsp, write_trsp};
use trsp::io::generator::{derive_trsp, GeneratorConfig};
use trsp::io::solomon::{parse_solomon, synth_solomon};
use trsp::io::solution_io::{read_solution, write_solution};
use trsp::meta::{eils, Params};
use trsp::model::Instance;

#[derive(Parser)]
#[command(name = "trsp", version, about = "Technician routing and scheduling solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Derive a TRSP instance from a Solomon-style layout.
    Generate(GenerateArgs),
    /// Solve one instance file.
    Solve(SolveArgs),
    /// Multi-seed benchmark over a directory of instance files.
    Bench(BenchArgs),
    /// Re-audit a solution file from scratch.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Solomon layout file; use --synth to build one instead.
    #[arg(long, conflicts_with = "synth")]
    solomon: Option<PathBuf>,
    /// Synthesize a seeded layout for this instance name (e.g. C101).
    #[arg(long)]
    synth: Option<String>,
    /// Customer count of the synthetic layout.
    #[arg(long, default_value_t = 100)]
    customers: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 25)]
    depots: usize,
    #[arg(long, default_value_t = 5)]
    skills: usize,
    #[arg(long, default_value_t = 5)]
    tools: usize,
    #[arg(long, default_value_t = 5)]
    parts: usize,
    /// Output TRSP file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long)]
    seed: u64,
    /// Outer iterations.
    #[arg(long, default_value_t = Params::default().n_ils)]
    n_ils: usize,
    /// Elite pool capacity.
    #[arg(long, default_value_t = Params::default().n_pop)]
    n_pop: usize,
    /// Initial perturbation ceiling.
    #[arg(long, default_value_t = Params::default().d0)]
    d0: usize,
    /// Ceiling of the intensifying removal/repair rounds.
    #[arg(long, default_value_t = Params::default().d_max_intensify)]
    d_max_intensify: usize,
    /// Non-improving iterations before leaving the first variant.
    #[arg(long, default_value_t = Params::default().cv1)]
    cv1: usize,
    /// Iterations granted to each later variant in turn.
    #[arg(long, default_value_t = Params::default().cv2)]
    cv2: usize,
    /// Nearest-predecessor list length.
    #[arg(long, default_value_t = Params::default().chi)]
    chi: usize,
}

impl SolverArgs {
    fn params(&self) -> Params {
        Params {
            n_ils: self.n_ils,
            n_pop: self.n_pop,
            d0: self.d0,
            d_max_intensify: self.d_max_intensify,
            cv1: self.cv1,
            cv2: self.cv2,
            chi: self.chi,
            ..Params::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// TRSP instance file.
    instance: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Solution output file (defaults to stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the best-so-far trace here (gnuplot-compatible).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of .trsp instance files.
    instance_dir: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Runs per instance.
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Parallel runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Reference-objective table overriding the bundled one.
    #[arg(long)]
    best_known: Option<PathBuf>,
    /// Report CSV output file (defaults to stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    instance: PathBuf,
    solution: PathBuf,
}

fn load_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(read_trsp(&text)?)
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let layout = match (&a.solomon, &a.synth) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_solomon(&text)?
        }
        (None, Some(name)) => synth_solomon(name, a.customers, a.seed)?,
        _ => bail!("pass exactly one of --solomon or --synth"),
    };
    let cfg = GeneratorConfig {
        seed: a.seed,
        n_depots: a.depots,
        n_skills: a.skills,
        n_tools: a.tools,
        n_parts: a.parts,
        ..GeneratorConfig::default()
    };
    let inst = derive_trsp(&layout, &cfg)?;
    emit(Some(&a.output), &write_trsp(&inst))?;
    eprintln!(
        "wrote {} ({} tasks, {} technicians)",
        a.output.display(),
        inst.n_tasks(),
        inst.n_techs()
    );
    Ok(())
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let params = a.solver.params();
    let t = Instant::now();
    let res = eils(&inst, &params, a.solver.seed);
    let secs = t.elapsed().as_secs_f64();
    emit(a.output.as_deref(), &write_solution(&res.best, &inst))?;
    if let Some(path) = &a.trace {
        fs::write(path, trace_data(&res.trace))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!(
        "fitness {:.6} ({} of {} tasks scheduled) in {:.2}s, {} iterations, seed {}",
        res.best.fitness(),
        res.best.n_scheduled(),
        inst.n_tasks(),
        secs,
        res.trace.iterations,
        a.solver.seed
    );
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let mut files: Vec<PathBuf> = fs::read_dir(&a.instance_dir)
        .with_context(|| format!("reading {}", a.instance_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "trsp"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no instances in {}", a.instance_dir.display());
    }
    let mut instances = Vec::with_capacity(files.len());
    for path in &files {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        instances.push((name, load_instance(path)?));
    }
    let table = match &a.best_known {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            BestKnownTable::parse(&text)?
        }
        None => BestKnownTable::bundled(),
    };
    let report: Report = run_benchmark(
        &instances,
        a.runs,
        &a.solver.params(),
        a.solver.seed,
        a.jobs,
        &table,
    )?;
    emit(a.output.as_deref(), &report.to_csv())?;
    if let Some(g) = report.mean_gap {
        eprintln!("mean gap {g:.4}%, mean dev {:.4}%, mean cpu {:.2}s", report.mean_dev, report.mean_cpu);
    } else {
        eprintln!("mean dev {:.4}%, mean cpu {:.2}s", report.mean_dev, report.mean_cpu);
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let text = fs::read_to_string(&a.solution)
        .with_context(|| format!("reading {}", a.solution.display()))?;
    // read_solution re-audits every route from raw instance data and
    // checks the recomputed fitness against the file's recorded value.
    let (sol, recorded) = read_solution(&text, &inst)?;
    println!(
        "ok: fitness {:.6} (recorded {:.6}), {} of {} tasks scheduled",
        sol.fitness(),
        recorded,
        sol.n_scheduled(),
        inst.n_tasks()
    );
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Verify(a) => cmd_verify(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
