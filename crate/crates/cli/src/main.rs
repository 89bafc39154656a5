//! Command-line front end: generate reference graphs, permute them, inspect
//! spectra, run isomorphism checks with traces, and render iterate snapshots.
//!
//! Exit codes for `check`: 0 isomorphic, 1 not isomorphic, 2 inconclusive,
//! 3 I/O or usage errors, 4 internal errors. Other subcommands use 0/3/4.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use isofw_core::graph::{
    self, generate, GraphName, Permutation, SquareVariant, WeightedGraph,
};
use isofw_core::relaxation::rank_of_h;
use isofw_core::solver::{check_with_stats, CheckError, IsoVerdict, SolverConfig};
use isofw_core::spectral::{compare_spectra, decompose};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "isofw",
    about = "Graph isomorphism testing via spectral analysis and Frank-Wolfe",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether two graphs are isomorphic.
    Check(CheckArgs),
    /// Generate a named graph.
    Gen(GenArgs),
    /// Apply a seeded random permutation to a graph.
    Permute(PermuteArgs),
    /// Print the grouped spectrum of one or two graphs.
    Spectrum(SpectrumArgs),
    /// Render iterate snapshots as PGM images and CSV grids.
    Heatmap(HeatmapArgs),
    /// Run checks for a batch file of graph pairs.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolverFlags {
    /// Relative tolerance for grouping repeated eigenvalues.
    #[arg(long, default_value_t = 1e-8)]
    tol_group: f64,
    /// Rounding tolerance for binary entries.
    #[arg(long, default_value_t = 1e-6)]
    tol_bin: f64,
    /// Frank-Wolfe iterations per restart.
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Perturbation restarts after stagnation.
    #[arg(long, default_value_t = 20)]
    max_restarts: usize,
    /// Seed for all solver randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverFlags {
    fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig {
            tol_group: self.tol_group,
            tol_bin: self.tol_bin,
            max_iters: self.max_iters,
            max_restarts: self.max_restarts,
            seed: self.seed,
            ..SolverConfig::default()
        };
        if let Ok(cap) = std::env::var("ISOFW_SIZE_CAP") {
            if let Ok(cap) = cap.parse::<usize>() {
                cfg.size_cap = cap;
            }
        }
        cfg
    }
}

#[derive(Args)]
struct CheckArgs {
    path_a: PathBuf,
    path_b: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    /// Write a per-iteration CSV trace to this path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write every iterate X as a CSV snapshot into this directory.
    #[arg(long)]
    snapshots: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// petersen | fig1b | frucht | paley | biggs-smith | square | cycle |
    /// complete | star
    name: String,
    /// Prime modulus for paley (must be 1 mod 4).
    #[arg(long)]
    q: Option<u64>,
    /// Vertex count for cycle, complete, star.
    #[arg(long)]
    n: Option<usize>,
    /// Variant a, b, c, or d for square.
    #[arg(long)]
    variant: Option<String>,
    /// Output file.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct PermuteArgs {
    input: PathBuf,
    /// Seed for the random permutation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file for the permuted graph.
    #[arg(short, long)]
    out: PathBuf,
    /// Sidecar file recording the permutation (default: OUT.perm).
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    path_a: PathBuf,
    path_b: Option<PathBuf>,
    /// With two graphs: print rank(H) from the shared multiplicities.
    #[arg(long)]
    rank_h: bool,
    /// Also write the table(s) as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    tol_group: f64,
}

#[derive(Args)]
struct HeatmapArgs {
    /// Directory containing x_r###_k###.csv snapshots from `check --snapshots`.
    snapshots: PathBuf,
    /// Output directory for PGM images and CSV grids.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// File with one "path_a path_b" pair per line.
    pairs: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    solver: SolverFlags,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are not errors
            use clap::error::ErrorKind::*;
            let _ = err.print();
            return match err.kind() {
                DisplayHelp | DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    let result = match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Gen(args) => cmd_gen(args).map(|_| 0),
        Command::Permute(args) => cmd_permute(args).map(|_| 0),
        Command::Spectrum(args) => cmd_spectrum(args).map(|_| 0),
        Command::Heatmap(args) => cmd_heatmap(args).map(|_| 0),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = if err.downcast_ref::<CheckError>().is_some() {
                4
            } else {
                3
            };
            ExitCode::from(code)
        }
    }
}

fn load(path: &Path) -> Result<WeightedGraph> {
    graph::read_graph(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_check(args: CheckArgs) -> Result<u8> {
    let a = load(&args.path_a)?;
    let b = load(&args.path_b)?;
    let mut cfg = args.solver.config();
    cfg.trace_path = args.trace.clone();
    cfg.snapshot_dir = args.snapshots.clone();

    println!(
        "graphs: {} (n={}, m={}) vs {} (n={}, m={})",
        args.path_a.display(),
        a.n(),
        a.edge_count(),
        args.path_b.display(),
        b.n(),
        b.edge_count()
    );
    let (verdict, stats) = check_with_stats(&a, &b, &cfg)?;
    if !stats.lambda.is_empty() {
        println!(
            "spectrum: lambda = [{}], mu = {:?}",
            stats
                .lambda
                .iter()
                .map(|v| format!("{v:.6}"))
                .collect::<Vec<_>>()
                .join(", "),
            stats.mu
        );
    }
    if let Some(rank) = stats.rank_h {
        println!("rank(H) = {rank}");
    }
    if let Some(dim) = stats.free_dimension {
        println!("free dimension = {dim}");
    }
    println!(
        "fw iterations = {}, restarts = {}, lp solves = {}, seed = {}",
        stats.fw_iters, stats.restarts, stats.lp_solves, stats.seed
    );
    let code = verdict.exit_code() as u8;
    match verdict {
        IsoVerdict::Isomorphic { certificate } => {
            println!("verdict: ISOMORPHIC");
            println!("pi = {certificate}");
        }
        IsoVerdict::NotIsomorphic { reason, detail } => {
            println!("verdict: NOT ISOMORPHIC (reason: {reason})");
            println!("proof: {detail}");
        }
        IsoVerdict::Inconclusive { best_f, .. } => {
            println!("verdict: INCONCLUSIVE");
            println!("best objective reached: {best_f:.6} (target {})", -(a.n() as f64));
        }
    }
    Ok(code)
}

fn parse_name(args: &GenArgs) -> Result<GraphName> {
    let need_n = || {
        args.n
            .ok_or_else(|| anyhow!("{} requires --n", args.name))
    };
    match args.name.as_str() {
        "petersen" => Ok(GraphName::Petersen),
        "fig1b" => Ok(GraphName::Fig1b),
        "frucht" => Ok(GraphName::Frucht),
        "biggs-smith" | "biggs_smith" => Ok(GraphName::BiggsSmith),
        "paley" => {
            let q = args.q.ok_or_else(|| anyhow!("paley requires --q"))?;
            Ok(GraphName::Paley(q))
        }
        "square" => {
            let v = args
                .variant
                .as_deref()
                .ok_or_else(|| anyhow!("square requires --variant a|b|c|d"))?;
            let variant = match v {
                "a" => SquareVariant::A,
                "b" => SquareVariant::B,
                "c" => SquareVariant::C,
                "d" => SquareVariant::D,
                other => bail!("unknown square variant {other:?}"),
            };
            Ok(GraphName::Square(variant))
        }
        "cycle" => Ok(GraphName::Cycle(need_n()?)),
        "complete" => Ok(GraphName::Complete(need_n()?)),
        "star" => Ok(GraphName::Star(need_n()?)),
        other => bail!("unknown graph name {other:?}"),
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let name = parse_name(&args)?;
    let g = generate(&name)?;
    graph::write_graph(&g, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} (n={}, m={})",
        args.out.display(),
        g.n(),
        g.edge_count()
    );
    Ok(())
}

fn cmd_permute(args: PermuteArgs) -> Result<()> {
    let g = load(&args.input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let p = Permutation::random(g.n(), &mut rng);
    let permuted = g.apply_permutation(&p)?;
    graph::write_graph(&permuted, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let sidecar = args
        .sidecar
        .unwrap_or_else(|| PathBuf::from(format!("{}.perm", args.out.display())));
    let mut text = String::from("# permutation (1-based images, vertex i maps to entry i)\n");
    text.push_str(
        &p.one_based()
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    );
    text.push('\n');
    std::fs::write(&sidecar, text)
        .with_context(|| format!("writing {}", sidecar.display()))?;
    println!(
        "wrote {} and sidecar {}",
        args.out.display(),
        sidecar.display()
    );
    Ok(())
}

fn cmd_spectrum(args: SpectrumArgs) -> Result<()> {
    let a = load(&args.path_a)?;
    let sa = decompose(&a, args.tol_group)?;
    let mut csv = String::from("graph,block,lambda,mu,unfriendly,ambiguous\n");

    let print_spectrum = |label: &str, s: &isofw_core::spectral::GroupedSpectrum,
                          csv: &mut String| {
        println!("{label}: n = {}", s.n());
        println!("{:>4}  {:>14}  {:>4}  {:>10}  {:>9}", "k", "lambda", "mu", "unfriendly", "ambiguous");
        for (k, b) in s.blocks().iter().enumerate() {
            let unf = b.friendly.iter().filter(|&&f| !f).count();
            let amb = b.ambiguous.iter().filter(|&&a| a).count();
            println!(
                "{:>4}  {:>14.8}  {:>4}  {:>10}  {:>9}",
                k + 1,
                b.value,
                b.multiplicity(),
                unf,
                amb
            );
            csv.push_str(&format!(
                "{label},{},{},{},{unf},{amb}\n",
                k + 1,
                b.value,
                b.multiplicity()
            ));
        }
        println!(
            "totals: {} unfriendly, {} ambiguous of {} eigenvectors\n",
            s.unfriendly_count(),
            s.ambiguous_count(),
            s.n()
        );
    };

    print_spectrum(&args.path_a.display().to_string(), &sa, &mut csv);

    if let Some(path_b) = &args.path_b {
        let b = load(path_b)?;
        let sb = decompose(&b, args.tol_group)?;
        print_spectrum(&path_b.display().to_string(), &sb, &mut csv);
        let cmp = compare_spectra(&sa, &sb, args.tol_group);
        println!(
            "isospectral: {} (max eigenvalue gap {:.3e})",
            if cmp.isospectral { "yes" } else { "no" },
            cmp.max_eigenvalue_gap
        );
        if args.rank_h {
            if cmp.isospectral {
                let rank = rank_of_h(&sa.mu(), sa.n())?;
                println!("rank(H) = {rank} (n^2 = {})", sa.n() * sa.n());
            } else {
                println!("rank(H): not defined, graphs are not isospectral");
            }
        }
    } else if args.rank_h {
        bail!("--rank-h needs two graphs");
    }

    if let Some(path) = &args.csv {
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_heatmap(args: HeatmapArgs) -> Result<()> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(&args.snapshots)
        .with_context(|| format!("reading {}", args.snapshots.display()))?
    {
        let path = entry?.path();
        let name = path
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        if name.starts_with("x_r") && name.ends_with(".csv") {
            found.push(path);
        }
    }
    if found.is_empty() {
        bail!(
            "no snapshots found in {} (run check --snapshots first)",
            args.snapshots.display()
        );
    }
    found.sort();
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    for path in &found {
        let text = std::fs::read_to_string(path)?;
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|c| c.trim().parse::<f64>().map_err(|e| anyhow!("{e}")))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            bail!("{}: snapshot is not a square CSV grid", path.display());
        }
        let max = rows
            .iter()
            .flatten()
            .cloned()
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let stem = path.file_stem().unwrap().to_string_lossy().to_string();
        // PGM (binary P5), plus a CSV copy next to it
        let mut pgm = format!("P5\n{n} {n}\n255\n").into_bytes();
        for row in &rows {
            for &v in row {
                let gray = (255.0 * (v / max).clamp(0.0, 1.0)).round() as u8;
                pgm.push(gray);
            }
        }
        std::fs::write(args.out.join(format!("{stem}.pgm")), pgm)?;
        std::fs::copy(path, args.out.join(format!("{stem}.csv")))?;
    }
    println!("wrote {} heatmaps to {}", found.len(), args.out.display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<u8> {
    let text = std::fs::read_to_string(&args.pairs)
        .with_context(|| format!("reading {}", args.pairs.display()))?;
    let pairs: Vec<(PathBuf, PathBuf)> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace();
            match (it.next(), it.next()) {
                (Some(a), Some(b)) => Ok((PathBuf::from(a), PathBuf::from(b))),
                _ => bail!("bad pair line: {l:?}"),
            }
        })
        .collect::<Result<_>>()?;
    if pairs.is_empty() {
        bail!("no pairs in {}", args.pairs.display());
    }
    let cfg = args.solver.config();
    let jobs = args.jobs.max(1);

    let results: Vec<Result<(String, i32, usize, f64)>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for chunk in pairs.chunks(pairs.len().div_ceil(jobs)) {
            let cfg = cfg.clone();
            handles.push(scope.spawn(move || {
                chunk
                    .iter()
                    .map(|(pa, pb)| {
                        let a = load(pa)?;
                        let b = load(pb)?;
                        let start = std::time::Instant::now();
                        let (verdict, stats) = check_with_stats(&a, &b, &cfg)?;
                        let label = match &verdict {
                            IsoVerdict::Isomorphic { .. } => "ISO",
                            IsoVerdict::NotIsomorphic { .. } => "NOT-ISO",
                            IsoVerdict::Inconclusive { .. } => "INCONCLUSIVE",
                        };
                        Ok((
                            format!("{} {}", pa.display(), pb.display()),
                            verdict.exit_code(),
                            stats.fw_iters,
                            start.elapsed().as_secs_f64(),
                        ))
                        .map(|(p, c, i, t)| (format!("{p}: {label}"), c, i, t))
                    })
                    .collect::<Vec<_>>()
            }));
        }
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("bench worker panicked"))
            .collect()
    });

    let mut worst = 0u8;
    for res in results {
        let (line, code, iters, secs) = res?;
        println!("{line} (exit {code}, fw_iters {iters}, {secs:.3}s)");
        worst = worst.max(code as u8);
    }
    Ok(worst)
}
