use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use whiter::cli_io::{
    self, finish, load_config, parse_complex, ComplexVal, OutputFormat, ProblemSpec, RunConfig,
    RunError, SplitKind, SplitRequest,
};
use whiter_core::families::registry;

/// Iterative solver for pairs of half-line functional equations coupled
/// through exponential factors.
#[derive(Parser)]
#[command(name = "whiter", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a problem described by a JSON config file
    Solve(SolveArgs),
    /// Strip problem with an even rational kernel and matched forcing
    Example1(FamilyArgs),
    /// Coupled half-line pair with a decaying off-diagonal term
    Example2(FamilyArgs),
    /// Split one expression into its one-sided parts
    Split(SplitArgs),
    /// List the registered problem families
    Families,
}

#[derive(Args)]
struct SolveArgs {
    /// path to the JSON run description
    #[arg(long)]
    config: PathBuf,
    /// output directory (beats the config and WHITER_OUT)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct FamilyArgs {
    /// coupling parameter, e.g. "3" or "0.7+10i"
    #[arg(long)]
    lambda: String,
    /// carrier length of the exponential coupling
    #[arg(long = "L", default_value_t = 1.0)]
    len: f64,
    /// cycle budget (stops early at --tol)
    #[arg(long)]
    iters: Option<usize>,
    /// relative increment below which the run counts as converged
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    grid_n: Option<usize>,
    /// map scale of the sampling grids
    #[arg(long)]
    grid_x: Option<f64>,
    /// lower working line (defaults are family-specific)
    #[arg(long)]
    line_a: Option<f64>,
    /// upper working line
    #[arg(long)]
    line_b: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct SplitArgs {
    /// expression in alpha, e.g. "(alpha^2+1)/(alpha^2+4)"
    #[arg(long)]
    expr: String,
    /// additive split F = F+ + F-, or multiplicative K = K+ K-
    #[arg(long, value_enum, default_value = "add")]
    kind: SplitKind,
    /// value for lam if the expression mentions it
    #[arg(long)]
    lambda: Option<String>,
    /// value for L if the expression mentions it
    #[arg(long = "L")]
    len: Option<f64>,
    /// height of the sampling line
    #[arg(long, default_value_t = 0.0)]
    line: f64,
    #[arg(long, default_value_t = 2048)]
    grid_n: usize,
    #[arg(long, default_value_t = 2.0)]
    grid_x: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {}", e);
        std::process::exit(e.exit_code());
    }
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    match cli.cmd {
        Cmd::Solve(a) => {
            let cfg = load_config(&a.config)?;
            family_run(cfg, a.out, a.format)
        }
        Cmd::Example1(a) => {
            let (cfg, out, fmt) = flags_to_config("example1", a)?;
            family_run(cfg, out, fmt)
        }
        Cmd::Example2(a) => {
            let (cfg, out, fmt) = flags_to_config("example2", a)?;
            family_run(cfg, out, fmt)
        }
        Cmd::Split(a) => split_run(a),
        Cmd::Families => {
            for f in registry() {
                println!("{:<10} {}", f.name(), f.summary());
            }
            Ok(())
        }
    }
}

fn flags_to_config(
    name: &str,
    a: FamilyArgs,
) -> Result<(RunConfig, Option<PathBuf>, Option<OutputFormat>), RunError> {
    let lambda = parse_complex(&a.lambda).map_err(RunError::Config)?;
    let cfg = RunConfig {
        problem: ProblemSpec::Builtin(name.to_string()),
        lambda: ComplexVal(lambda),
        len: a.len,
        grid_n: a.grid_n,
        grid_x: a.grid_x,
        line_a: a.line_a,
        line_b: a.line_b,
        stop_tol: a.tol,
        max_iter: a.iters,
        out_dir: None,
        format: None,
    };
    Ok((cfg, a.out, a.format))
}

fn family_run(
    cfg: RunConfig,
    out: Option<PathBuf>,
    fmt: Option<OutputFormat>,
) -> Result<(), RunError> {
    let art = cli_io::run_and_write(&cfg, out, fmt)?;
    let o = &art.output;
    println!("{}: {} cycle(s), converged: {}", art.family, o.iterations, o.converged);
    if let Some((r1, r2, scale)) = o.residuals {
        println!(
            "residual rows: {:.3e} / {:.3e} (forcing scale {:.3e})",
            r1, r2, scale
        );
        if r1 > 1e-3 * scale || r2 > 1e-3 * scale {
            eprintln!(
                "warning: the rows are badly violated even though the iteration settled; \
                 the working lines probably cross a pole or zero of the problem data"
            );
        }
    }
    for oe in &o.oracle_errors {
        if let Some(last) = oe.max_abs.last() {
            println!("{} vs reference: {:.3e}", oe.unknown, last);
        }
    }
    println!("estimated cycle rate q = {:.4e}", o.estimate.q);
    println!("wrote {} file(s) to {}", art.files.len(), art.out_dir.display());
    finish(&art)
}

fn split_run(a: SplitArgs) -> Result<(), RunError> {
    let lambda = match &a.lambda {
        Some(s) => Some(parse_complex(s).map_err(RunError::Config)?),
        None => None,
    };
    let req = SplitRequest {
        expr_src: a.expr,
        kind: a.kind,
        lambda,
        len: a.len,
        line: a.line,
        grid_n: a.grid_n,
        grid_x: a.grid_x,
    };
    let report = cli_io::split_and_write(&req, a.out, a.format)?;
    if let Some(w) = report.winding {
        println!("winding index: {}", w);
    }
    println!("reconstruction error: {:.3e}", report.reconstruction_error);
    println!(
        "wrote {} file(s) to {}",
        report.files.len(),
        report.out_dir.display()
    );
    Ok(())
}
