//! Scenarios and experiments: loading scenario files, the convergence sweep,
//! the subordination check, the indistinguishability audit, figure data and
//! single runs.

mod audit;
mod figures;
mod profiles;
mod scenario;
mod subordination;
mod sweep;

use std::fmt;
use std::str::FromStr;

pub use audit::{run_indistinguishability_audit, trial_design, AuditReport, AuditTrial, Split};
pub use figures::{emit_figure_data, FigureBundle, FigureId, FigureSeries};
pub use profiles::{Builtin, Profile, ProfileSpec};
pub use scenario::{
    load_scenario, InitialSpec, KernelSpec, LawSpec, PdeSpec, Scenario, ScenarioTolerances, SourceSpec,
};
pub use subordination::{
    pde_times, pushforward_residual, run_subordination_check, DistanceRow, PdeRow, ResidualRow,
    SubordinationReport,
};
pub use sweep::{micro_run, reference_run, run_convergence_sweep, SweepReport, SweepRow, SAMPLES};

use crate::error::{Error, Result};
use crate::graph::{integrate_graph, GraphOptions};
use crate::mean_field::{solve_pde, PdeOptions};
use crate::ode::Sampling;

/// Model level of a single run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Micro,
    Graph,
    Pde,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::Micro => "micro",
            Level::Graph => "graph",
            Level::Pde => "pde",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(Level::Micro),
            "graph" => Ok(Level::Graph),
            "pde" => Ok(Level::Pde),
            _ => Err(Error::config(format!("unknown level `{s}`, expected micro, graph or pde"))),
        }
    }
}

/// Output of [`simulate`]: a CSV named `<scenario>_<level>.csv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simulation {
    pub file_name: String,
    pub csv: Vec<u8>,
}

/// Runs one level of the model on the scenario's default grid (agents and
/// index cells) or its PDE grid, sampled at [`SAMPLES`] instants.
pub fn simulate(sc: &Scenario, level: Level) -> Result<Simulation> {
    let mut csv = Vec::new();
    let sampling = Sampling::Uniform(SAMPLES);
    match level {
        Level::Micro => {
            micro_run(sc, sc.default_agents(), sampling)?.write_csv(&mut csv)?;
        }
        Level::Graph => {
            let opts = GraphOptions::new(sc.horizon, sc.dt)
                .sampling(sampling)
                .tolerances(sc.tolerances());
            integrate_graph(&sc.fields(sc.default_agents())?, &sc.kernel(), &sc.law()?, &opts)?.write_csv(&mut csv)?;
        }
        Level::Pde => {
            let law = sc.law()?;
            let source = law.source_kernel().ok_or_else(|| {
                Error::Refused(format!(
                    "mass law `{}` does not preserve indistinguishability and has no mean-field form",
                    law.name()
                ))
            })?;
            let mut opts = PdeOptions::new(sc.horizon, sc.dt).sampling(sampling);
            opts.cfl = sc.pde.cfl;
            opts.tolerances = sc.tolerances();
            let sol = solve_pde(&sc.initial_density(sc.pde.cells)?, &sc.kernel(), &source, &opts)?;
            crate::csv::write_row(&mut csv, ["t", "x_center", "density"].map(String::from))?;
            for g in &sol.frames {
                for (j, r) in g.density.iter().enumerate() {
                    crate::csv::write_row(
                        &mut csv,
                        [crate::csv::float(g.time), crate::csv::float(g.center(j)), crate::csv::float(*r)],
                    )?;
                }
            }
        }
    }
    Ok(Simulation {
        file_name: format!("{}_{}.csv", sc.name, level),
        csv,
    })
}
