//! `fairshare`: solve and check fair allocations from the command line.
//!
//! Exit codes: 0 success, 1 the checked property is false, 2 bad input,
//! 3 solver failure.

mod document;
mod output;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use fairshare::checks::{self, PropertyReport};
use fairshare::grf::{grf_allocate_with, GrfOptions};
use fairshare::market::{bbf_allocate_with, DualOptions};
use fairshare::{Allocation, Instance, Norm};

use document::{AllocationDocument, AllocationFile, VirtualGoodEntry};

/// Recorded residuals above this make a BBF run fail.
const RESIDUAL_LIMIT: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "fairshare", version, about = "Fair allocation of complementary resources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an allocation.
    #[command(subcommand)]
    Solve(Solve),
    /// Check a property of an allocation: parsimonious, non-wasteful,
    /// pareto, bbf or norm-fair:<norm>.
    Check {
        property: String,
        instance: PathBuf,
        allocation: PathBuf,
    },
    /// Brute-force reference solutions.
    #[command(subcommand)]
    Oracle(Oracle),
}

#[derive(Subcommand)]
enum Solve {
    /// The norm-fair allocation under entitlements.
    Grf {
        /// l1, l2, linf or lp:<p> with p >= 1.
        #[arg(long)]
        norm: Norm,
        instance: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        /// Bar chart of per-agent shares.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Include every water-filling round in the output.
        #[arg(long)]
        trace: bool,
    },
    /// A bottleneck-based fair allocation from market equilibrium.
    Bbf {
        instance: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(clap::Args)]
struct OutputArgs {
    /// Write the allocation document here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Goods-by-agents share table.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Oracle {
    /// Leximin over entitlement-scaled norms on a grid of utility levels.
    Leximin {
        #[arg(long)]
        norm: Norm,
        #[arg(long)]
        grid: usize,
        instance: PathBuf,
    },
}

/// An error paired with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure {
        code: 2,
        error: e.into(),
    }
}

fn solver<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure {
        code: 3,
        error: e.into(),
    }
}

type CliResult<T = u8> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let tolerance = tolerance()?;
    match cli.command {
        Command::Solve(Solve::Grf {
            norm,
            instance,
            out,
            svg,
            trace,
        }) => solve_grf(&instance, &norm, &out, svg.as_deref(), trace, tolerance),
        Command::Solve(Solve::Bbf { instance, out }) => solve_bbf(&instance, &out, tolerance),
        Command::Check {
            property,
            instance,
            allocation,
        } => check(&property, &instance, &allocation),
        Command::Oracle(Oracle::Leximin { norm, grid, instance }) => oracle(&instance, &norm, grid, tolerance),
    }
}

fn tolerance() -> CliResult<f64> {
    match std::env::var("FAIRSHARE_TOL") {
        Err(_) => Ok(fairshare::model::TOL),
        Ok(raw) => match raw.trim().parse::<f64>() {
            Ok(t) if t.is_finite() && t > 0.0 => Ok(t),
            _ => Err(input(anyhow!("FAIRSHARE_TOL must be a positive number, got `{raw}`"))),
        },
    }
}

fn read_instance(path: &Path) -> CliResult<Instance> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read instance {}", path.display()))
        .map_err(input)?;
    serde_json::from_str(&text)
        .with_context(|| format!("invalid instance {}", path.display()))
        .map_err(input)
}

fn read_allocation(path: &Path) -> CliResult<Allocation> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read allocation {}", path.display()))
        .map_err(input)?;
    serde_json::from_str::<AllocationFile>(&text)
        .map(AllocationFile::into_allocation)
        .with_context(|| format!("invalid allocation {}", path.display()))
        .map_err(input)
}

fn emit(doc: &AllocationDocument, instance: &Instance, out: &OutputArgs) -> CliResult<()> {
    let json = output::to_json(doc).map_err(solver)?;
    match &out.output {
        Some(path) => output::write(path, &json).map_err(input)?,
        None => print!("{json}"),
    }
    if let Some(path) = &out.csv {
        let mut buf = Vec::new();
        document::write_csv(instance, &doc.allocation, &mut buf).map_err(solver)?;
        output::write(path, &String::from_utf8(buf).expect("csv output is UTF-8")).map_err(input)?;
    }
    Ok(())
}

fn solve_grf(
    path: &Path,
    norm: &Norm,
    out: &OutputArgs,
    svg: Option<&Path>,
    trace: bool,
    tolerance: f64,
) -> CliResult {
    let instance = read_instance(path)?;
    let options = GrfOptions {
        tolerance,
        ..Default::default()
    };
    let solution = grf_allocate_with(&instance, norm, &options).map_err(solver)?;
    let mut doc = AllocationDocument::new("grf", &instance, solution.allocation, solution.levels, tolerance)
        .with_norm(norm);
    doc.metadata.iterations = Some(solution.trace.len());
    if trace {
        doc.trace = Some(solution.trace);
    }
    emit(&doc, &instance, out)?;
    if let Some(path) = svg {
        output::write(path, &svg::share_chart(&instance, &doc.allocation)).map_err(input)?;
    }
    Ok(0)
}

fn solve_bbf(path: &Path, out: &OutputArgs, tolerance: f64) -> CliResult {
    let instance = read_instance(path)?;
    let options = DualOptions {
        tolerance,
        ..Default::default()
    };
    let solution = bbf_allocate_with(&instance, &options).map_err(solver)?;
    let eq = &solution.equilibrium;
    let worst = eq
        .residuals
        .budget_gap
        .max(eq.residuals.clearing_gap)
        .max(eq.residuals.dual_gradient_norm);
    if worst > RESIDUAL_LIMIT {
        return Err(solver(anyhow!(
            "equilibrium residual {worst:e} exceeds {RESIDUAL_LIMIT:e}"
        )));
    }
    let extended = &solution.extension.extended;
    let virtual_goods = solution
        .extension
        .virtual_goods
        .iter()
        .map(|v| VirtualGoodEntry {
            good: extended.goods()[v.good].name.clone(),
            index: v.good,
            agent: instance.agents()[v.agent].name.clone(),
        })
        .collect();
    let mut doc = AllocationDocument::new("bbf", &instance, solution.allocation, solution.levels, tolerance);
    doc.prices = Some(eq.prices.clone());
    doc.residuals = Some(eq.residuals);
    doc.virtual_goods = Some(virtual_goods);
    doc.metadata.iterations = Some(eq.iterations);
    emit(&doc, &instance, out)?;
    Ok(0)
}

fn check(property: &str, instance_path: &Path, allocation_path: &Path) -> CliResult {
    let instance = read_instance(instance_path)?;
    let x = read_allocation(allocation_path)?;
    instance.check_feasible(&x).map_err(input)?;
    let report: PropertyReport = match property {
        "parsimonious" => checks::is_parsimonious_allocation(&instance, &x),
        "non-wasteful" => checks::is_non_wasteful(&instance, &x),
        "pareto" => checks::is_pareto_efficient(&instance, &x),
        "bbf" => checks::is_bbf(&instance, &x),
        other => match other.strip_prefix("norm-fair:") {
            Some(norm) => {
                let norm: Norm = norm.parse().map_err(input)?;
                checks::is_norm_fair(&instance, &x, &norm)
            }
            None => {
                return Err(input(anyhow!(
                    "unknown property `{other}`; expected parsimonious, non-wasteful, pareto, bbf or norm-fair:<norm>"
                )))
            }
        },
    }
    .map_err(input)?;
    print!("{}", output::to_json(&report).map_err(solver)?);
    Ok(if report.verdict { 0 } else { 1 })
}

fn oracle(path: &Path, norm: &Norm, grid: usize, tolerance: f64) -> CliResult {
    let instance = read_instance(path)?;
    let solution = checks::brute_force_fairness_oracle(&instance, norm, grid).map_err(input)?;
    let mut doc = AllocationDocument::new("oracle-leximin", &instance, solution.allocation, solution.levels, tolerance)
        .with_norm(norm);
    doc.metadata.grid = Some(grid);
    print!("{}", output::to_json(&doc).map_err(solver)?);
    Ok(0)
}
