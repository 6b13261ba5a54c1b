use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cdyn::harness::{
    emit_figure_data, load_scenario, run_convergence_sweep, run_indistinguishability_audit, run_subordination_check,
    simulate, FigureId, Level, Scenario,
};
use cdyn::Error;

/// Opinion dynamics with time-varying weights: microscopic, graph-limit and
/// mean-field solvers with their convergence experiments.
#[derive(Parser)]
#[command(name = "cdyn", version)]
struct Cli {
    /// Override the scenario time step.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Override the agent / cell count of single runs (PDE cells for `--level pde`).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Assert that no random number generator is consulted. Every run is
    /// deterministic, so this only documents intent.
    #[arg(long, global = true)]
    seedless: bool,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one model level and write its samples.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value = "micro")]
        level: Level,
    },
    /// Microscopic runs against a fine graph-limit reference.
    Sweep {
        scenario: PathBuf,
        /// Comma-separated agent counts; defaults to the scenario's list.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
    },
    /// Pushforward residual, empirical distances and PDE comparison.
    Subordinate { scenario: PathBuf },
    /// Indistinguishability comparisons over a fixed trial family.
    Audit {
        scenario: PathBuf,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Data series behind one figure.
    Figure {
        scenario: PathBuf,
        #[arg(long)]
        id: FigureId,
    },
}

enum Outcome {
    Pass,
    Fail,
}

fn load(path: &Path, cli: &Cli, level: Option<Level>) -> Result<Scenario, Error> {
    let mut sc = load_scenario(path)?;
    if let Some(dt) = cli.dt {
        sc.dt = dt;
    }
    if let Some(g) = cli.grid {
        if level == Some(Level::Pde) {
            sc.pde.cells = g;
        } else {
            sc.agents = Some(g);
        }
    }
    sc.validate()?;
    Ok(sc)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, bytes)?;
    Ok(path)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let mut out = std::io::stdout().lock();
    match &cli.command {
        Command::Simulate { scenario, level } => {
            let sc = load(scenario, cli, Some(*level))?;
            let sim = simulate(&sc, *level)?;
            let path = write_file(&cli.out, &sim.file_name, &sim.csv)?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(Outcome::Pass)
        }
        Command::Sweep { scenario, n } => {
            let sc = load(scenario, cli, None)?;
            let report = run_convergence_sweep(&sc, n.as_deref())?;
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            let path = write_file(&cli.out, &format!("{}_sweep.csv", sc.name), &buf)?;
            writeln!(
                out,
                "reference: {} cells, dt {:e}, {} samples",
                report.reference_cells, report.reference_dt, report.samples
            )?;
            for r in &report.rows {
                writeln!(
                    out,
                    "N = {:>4}  x error {:.3e} (projection {:.3e})  m error {:.3e} (projection {:.3e})",
                    r.n, r.x_error, r.x_projection, r.m_error, r.m_projection
                )?;
                eprintln!("N = {:>4}  wall {:.2?}", r.n, r.wall);
            }
            writeln!(out, "x monotone: {}", verdict(report.x_monotone()))?;
            writeln!(out, "m monotone: {}", verdict(report.m_monotone()))?;
            writeln!(out, "final within projection bound: {}", verdict(report.final_within_projection()))?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Subordinate { scenario } => {
            let sc = load(scenario, cli, None)?;
            let report = run_subordination_check(&sc)?;
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            let path = write_file(&cli.out, &format!("{}_subordination.csv", sc.name), &buf)?;
            for r in &report.residual {
                writeln!(out, "weak residual N = {:>4} dt = {:e}: {:.3e}", r.n, r.dt, r.residual)?;
            }
            writeln!(
                out,
                "residual drop {:.1}% (required {:.0}%): {}",
                100.0 * report.residual_drop(),
                100.0 * report.residual_drop_required,
                verdict(report.residual_ok())
            )?;
            for r in &report.micro_vs_pushforward {
                writeln!(out, "W1(micro, pushforward) N = {:>4} at T: {:.3e}", r.n, r.at_horizon)?;
            }
            writeln!(out, "decreasing in N: {}", verdict(report.distances_ok()))?;
            for r in &report.pde {
                writeln!(
                    out,
                    "flat distance(binned pushforward, PDE) t = {:.4}: {:.3e} (PDE negative mass {:.3e})",
                    r.time, r.distance, r.negative_mass
                )?;
            }
            writeln!(out, "below {}: {}", report.pde_threshold, verdict(report.pde_ok()))?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Audit { scenario, trials } => {
            let sc = load(scenario, cli, None)?;
            let report = run_indistinguishability_audit(&sc, *trials)?;
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            let path = write_file(&cli.out, &format!("{}_audit.csv", sc.name), &buf)?;
            writeln!(
                out,
                "{} agents, {} trials: {} preserved, {} violated (expected {}), equal-position drift {:.3e}",
                report.agents,
                report.trials.len(),
                report.preserved(),
                report.violations(),
                if report.expect_preserved { "none" } else { "at least one" },
                report.max_drift()
            )?;
            writeln!(out, "audit: {}", verdict(report.passed()))?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Figure { scenario, id } => {
            let sc = load(scenario, cli, None)?;
            let bundle = emit_figure_data(&sc, *id)?;
            for path in bundle.write_to(&cli.out)? {
                writeln!(out, "wrote {}", path.display())?;
            }
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            let runtime = e.is_runtime_failure()
                || matches!(e, Error::NonFinite { .. } | Error::Kernel { .. } | Error::Measure(_));
            ExitCode::from(if runtime { 2 } else { 1 })
        }
    }
}
