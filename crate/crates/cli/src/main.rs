//! `appraise`: scenario generation, evaluation against a riskless replicating
//! portfolio, Omega ranking and RADR comparison from the command line.

mod project;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use appraise_core::report::{
    project_summaries, write_evaluations, write_json, write_omega_curve, write_ranking_csv,
    write_scenarios, write_summary,
};
use appraise_core::{
    equivalence_check, linear_grid, omega_vs_hurdle, radr_valuation, rank, AppraiseError,
    EmpiricalDistribution, EquivalenceReport, EvaluatedProject, HurdleSpec, Metric, RadrInput,
    RadrMode, RadrResult, YieldCurve,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use project::{missing, read_generator, Overrides, Project};

#[derive(Parser)]
#[command(name = "appraise", version, about)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores). Output does
    /// not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario CSV from a generator spec.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-scenario metrics and NPV / μ summaries.
    Evaluate {
        #[arg(long)]
        project: PathBuf,
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Rank projects by Ω at a hurdle. Also writes a CSV next to `--out`.
    Rank {
        #[arg(long, num_args = 1.., required = true)]
        projects: Vec<PathBuf>,
        #[arg(long)]
        curve: PathBuf,
        #[command(flatten)]
        hurdle: HurdleArgs,
        #[arg(long, default_value = "mu")]
        metric: Metric,
        /// `lo:hi:step` grid of μ* on which pairwise Ω crossings are located.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Ω as a function of the hurdle μ*.
    OmegaCurve {
        #[arg(long)]
        project: PathBuf,
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, default_value = "mu")]
        metric: Metric,
        /// `lo:hi:step` grid of μ*.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Risk-adjusted discount rate valuation of the averaged cash flows.
    RadrCompare {
        #[arg(long)]
        project: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        r: f64,
        #[arg(long, allow_hyphen_values = true)]
        k: f64,
        #[arg(long, default_value = "canonical-strict")]
        mode: RadrMode,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        gen: GenArgs,
    },
}

/// Overrides for projects defined by a generator block.
#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl GenArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct HurdleArgs {
    #[arg(long, allow_hyphen_values = true)]
    delta_mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu_star: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    npv_star: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    profit_star: Option<f64>,
}

impl HurdleArgs {
    fn spec(&self) -> HurdleSpec {
        match (self.delta_mu, self.mu_star, self.npv_star, self.profit_star) {
            (Some(v), ..) => HurdleSpec::DeltaMu(v),
            (_, Some(v), ..) => HurdleSpec::MuStar(v),
            (_, _, Some(v), _) => HurdleSpec::NpvStar(v),
            (.., Some(v)) => HurdleSpec::ProfitStar(v),
            _ => unreachable!("clap enforces one hurdle"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(anyhow::Error::from)
            .and_then(|pool| pool.install(|| run(cli.command))),
        None => run(cli.command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_status(&err))
        }
    }
}

/// 1 for computation-domain failures, 2 for configuration and I/O.
fn exit_status(err: &anyhow::Error) -> u8 {
    let domain = err
        .chain()
        .find_map(|e| e.downcast_ref::<AppraiseError>())
        .is_some_and(AppraiseError::is_domain);
    if domain {
        1
    } else {
        2
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate { spec, n, seed, out } => simulate(&spec, Overrides { n, seed }, &out),
        Command::Evaluate {
            project,
            curve,
            out_dir,
            gen,
        } => evaluate(&project, &curve, &out_dir, gen.overrides()),
        Command::Rank {
            projects,
            curve,
            hurdle,
            metric,
            grid,
            out,
            gen,
        } => rank_projects(
            &projects,
            &curve,
            hurdle.spec(),
            metric,
            grid.as_deref(),
            &out,
            gen.overrides(),
        ),
        Command::OmegaCurve {
            project,
            curve,
            metric,
            grid,
            out,
            gen,
        } => omega_curve(&project, &curve, metric, &grid, &out, gen.overrides()),
        Command::RadrCompare {
            project,
            r,
            k,
            mode,
            out,
            gen,
        } => radr_compare(&project, r, k, mode, &out, gen.overrides()),
    }
}

fn require_files(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            return Err(missing(p).into());
        }
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn load_curve(path: &Path) -> Result<YieldCurve> {
    YieldCurve::from_csv_path(path).with_context(|| format!("loading curve {}", path.display()))
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || AppraiseError::InvalidSpec {
        field: "grid".into(),
        message: format!("expected lo:hi:step, got `{text}`"),
    };
    if parts.len() != 3 {
        return Err(bad().into());
    }
    let mut nums = [0.0; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| bad())?;
    }
    Ok(linear_grid(nums[0], nums[1], nums[2])?)
}

fn money(x: f64) -> String {
    format!("{x:.0}")
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn simulate(spec: &Path, overrides: Overrides, out: &Path) -> Result<()> {
    require_files(&[spec])?;
    let spec = read_generator(spec, overrides)?;
    let set = appraise_core::generate(&spec)?;
    let mut w = create(out)?;
    write_scenarios(&set, &mut w)?;
    std::io::Write::flush(&mut w)?;

    let slot = spec.stochastic_slot()?;
    let draws: Vec<f64> = set.scenarios().iter().map(|s| s.flows()[slot]).collect();
    let s = EmpiricalDistribution::uniform(draws)?.summarize();
    println!(
        "{} scenarios, F_{slot}: mean {}, std {}, skewness {}",
        set.len(),
        money(s.mean),
        money(s.std_dev),
        s.skewness.map_or("undefined".into(), |k| format!("{k:.2}")),
    );
    Ok(())
}

fn open_project(path: &Path, curve: &Path) -> Result<Project> {
    require_files(&[path, curve])?;
    Project::open(path)
}

fn evaluate_project(project: &Project, curve: &YieldCurve, overrides: Overrides) -> Result<EvaluatedProject> {
    let set = project.scenarios(overrides)?;
    EvaluatedProject::new(&set, curve).with_context(|| format!("evaluating project {}", project.id))
}

fn evaluate(project: &Path, curve: &Path, out_dir: &Path, overrides: Overrides) -> Result<()> {
    let project = open_project(project, curve)?;
    let curve = load_curve(curve)?;
    let evaluated = evaluate_project(&project, &curve, overrides)?;

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let summaries = project_summaries(&evaluated);
    let mut w = create(&out_dir.join("evaluation.csv"))?;
    write_evaluations(&evaluated, &mut w)?;
    std::io::Write::flush(&mut w)?;
    let mut w = create(&out_dir.join("summary.csv"))?;
    write_summary(&summaries, &mut w)?;
    std::io::Write::flush(&mut w)?;

    println!(
        "{} ({} scenarios)",
        project.name.as_deref().unwrap_or(&project.id),
        evaluated.evaluations().len()
    );
    for (name, s) in &summaries {
        let fmt: fn(f64) -> String = if *name == "mu" { pct } else { money };
        println!(
            "  {name:>3}: mean {}, median {}, std {}, skewness {}",
            fmt(s.mean),
            fmt(s.median),
            fmt(s.std_dev),
            s.skewness.map_or("undefined".into(), |k| format!("{k:.2}")),
        );
    }
    Ok(())
}

fn rank_projects(
    paths: &[PathBuf],
    curve_path: &Path,
    hurdle: HurdleSpec,
    metric: Metric,
    grid: Option<&str>,
    out: &Path,
    overrides: Overrides,
) -> Result<()> {
    let mut inputs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
    inputs.push(curve_path);
    require_files(&inputs)?;
    let grid = grid.map(parse_grid).transpose()?;
    let projects = paths
        .iter()
        .map(|p| Project::open(p))
        .collect::<Result<Vec<_>>>()?;
    let curve = load_curve(curve_path)?;
    let evaluated = projects
        .iter()
        .map(|p| evaluate_project(p, &curve, overrides))
        .collect::<Result<Vec<_>>>()?;

    let report = rank(&evaluated, &curve, hurdle, metric, grid.as_deref())?;
    let mut w = create(out)?;
    write_json(&report, &mut w)?;
    std::io::Write::flush(&mut w)?;
    let mut w = create(&out.with_extension("csv"))?;
    write_ranking_csv(&report, &mut w)?;
    std::io::Write::flush(&mut w)?;

    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    let fmt: fn(f64) -> String = match metric {
        Metric::Npv => money,
        Metric::Mu => pct,
    };
    for e in &report.entries {
        let omega = match e.omega.as_f64() {
            v if v.is_infinite() => "inf".to_string(),
            v => format!("{v:.2}"),
        };
        println!(
            "{}. {}  Ω {} at {} {}{}",
            e.rank,
            e.project_id,
            omega,
            metric.as_str(),
            fmt(e.threshold),
            if e.accept { "  accept" } else { "" },
        );
    }
    for c in &report.crossings {
        for iv in &c.intervals {
            println!(
                "{} / {} ranking flips near μ* = {}",
                c.project_a,
                c.project_b,
                pct(0.5 * (iv.lower + iv.upper))
            );
        }
    }
    Ok(())
}

fn omega_curve(
    project: &Path,
    curve: &Path,
    metric: Metric,
    grid: &str,
    out: &Path,
    overrides: Overrides,
) -> Result<()> {
    let project = open_project(project, curve)?;
    let grid = parse_grid(grid)?;
    let curve = load_curve(curve)?;
    let evaluated = evaluate_project(&project, &curve, overrides)?;
    let points = omega_vs_hurdle(&evaluated, metric, &curve, &grid)?;
    let mut w = create(out)?;
    write_omega_curve(&points, &mut w)?;
    std::io::Write::flush(&mut w)?;
    println!("{} points written to {}", points.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct RadrReport {
    project: String,
    r: f64,
    k: f64,
    #[serde(flatten)]
    result: RadrResult,
    /// Present for canonical flows only.
    equivalence: Option<EquivalenceReport>,
}

fn radr_compare(
    project: &Path,
    r: f64,
    k: f64,
    mode: RadrMode,
    out: &Path,
    overrides: Overrides,
) -> Result<()> {
    require_files(&[project])?;
    let project = Project::open(project)?;
    let set = project.scenarios(overrides)?;
    let input = RadrInput {
        scenario_set: &set,
        riskless_rate: r,
        radr_rate: k,
        mode,
    };
    let result = radr_valuation(&input)?;
    let equivalence = match equivalence_check(&input) {
        Ok(eq) => Some(eq),
        Err(AppraiseError::NonCanonical { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    println!(
        "NPV {}, MIRR {}, mean NPV at r {}, Λ {}, {}",
        money(result.npv_at_k),
        pct(result.mirr_at_k),
        money(result.mean_npv_at_r),
        money(result.lambda_radr),
        if result.accept { "accept" } else { "reject" },
    );
    let report = RadrReport {
        project: project.id,
        r,
        k,
        result,
        equivalence,
    };
    let mut w = create(out)?;
    write_json(&report, &mut w)?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}
