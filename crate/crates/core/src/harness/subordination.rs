//! Checks that the mean-field equation is recovered from the graph limit:
//! the pushforward of the graph-limit solution solves the transport
//! equation weakly, the empirical measures approach it, and it agrees with a
//! direct PDE solve.

use std::io::Write;

use rayon::prelude::*;

use crate::csv;
use crate::error::{Error, Result};
use crate::graph::{integrate_graph, GraphOptions, SpaceQuadrature};
use crate::mean_field::{
    bin_density, empirical_measure, flat_distance, pushforward_weighted, solve_pde, test_bank, wasserstein1, weak_residual,
    PdeOptions, ParticleMeasure,
};
use crate::ode::Sampling;

use super::scenario::Scenario;
use super::sweep::{context, micro_run, reference_run, SAMPLES};

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub n: usize,
    pub dt: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRow {
    pub n: usize,
    /// Distance at the final time.
    pub at_horizon: f64,
    /// Largest distance over the sample instants.
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeRow {
    pub time: f64,
    /// [`flat_distance`], which is W1 when the PDE density stays non-negative.
    pub distance: f64,
    /// Mass of the PDE density below zero, from the scheme's undershoot.
    pub negative_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubordinationReport {
    pub scenario: String,
    /// Coarse and refined runs; the second halves both `dt` and `1/N`.
    pub residual: Vec<ResidualRow>,
    pub micro_vs_pushforward: Vec<DistanceRow>,
    pub pde: Vec<PdeRow>,
    pub pde_agents: usize,
    pub pde_cells: usize,
    pub residual_drop_required: f64,
    pub pde_threshold: f64,
}

impl SubordinationReport {
    /// `1 − residual(refined) / residual(coarse)`.
    pub fn residual_drop(&self) -> f64 {
        match self.residual.as_slice() {
            [a, b] if a.residual > 0.0 => 1.0 - b.residual / a.residual,
            [a, b] if a.residual == 0.0 && b.residual == 0.0 => 1.0,
            _ => 0.0,
        }
    }

    pub fn residual_ok(&self) -> bool {
        self.residual_drop() >= self.residual_drop_required
            || self.residual.iter().all(|r| r.residual <= 1e-14)
    }

    /// Distances at the horizon decrease along the grid sizes.
    pub fn distances_ok(&self) -> bool {
        self.micro_vs_pushforward
            .windows(2)
            .all(|w| w[1].at_horizon < w[0].at_horizon || w[1].at_horizon <= 1e-14)
    }

    pub fn pde_ok(&self) -> bool {
        self.pde.iter().all(|r| r.distance < self.pde_threshold)
    }

    pub fn passed(&self) -> bool {
        self.residual_ok() && self.distances_ok() && self.pde_ok()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        csv::write_row(w, ["check", "N", "t", "value"].map(String::from))?;
        for r in &self.residual {
            csv::write_row(w, ["weak_residual".into(), r.n.to_string(), csv::float(r.dt), csv::float(r.residual)])?;
        }
        for r in &self.micro_vs_pushforward {
            csv::write_row(w, ["w1_micro_pushforward".into(), r.n.to_string(), "T".into(), csv::float(r.at_horizon)])?;
            csv::write_row(w, ["w1_micro_pushforward_sup".into(), r.n.to_string(), "sup".into(), csv::float(r.sup)])?;
        }
        for r in &self.pde {
            let n = self.pde_agents.to_string();
            csv::write_row(w, ["w1_pushforward_pde".into(), n.clone(), csv::float(r.time), csv::float(r.distance)])?;
            csv::write_row(w, ["pde_negative_mass".into(), n, csv::float(r.time), csv::float(r.negative_mass)])?;
        }
        Ok(())
    }
}

/// Grid-aligned graph run on `n` cells with step `dt`.
fn graph_run(sc: &Scenario, n: usize, dt: f64, sampling: Sampling) -> Result<crate::graph::FieldSeries> {
    let opts = GraphOptions::new(sc.horizon, dt)
        .quadrature(SpaceQuadrature::GridAligned)
        .sampling(sampling)
        .tolerances(sc.tolerances());
    integrate_graph(&sc.fields(n)?, &sc.kernel(), &sc.law()?, &opts)
        .map_err(|e| context(e, &format!("graph run on {n} cells")))
}

/// Weak residual of the pushforward of a graph run sampled every step.
pub fn pushforward_residual(sc: &Scenario, n: usize, dt: f64) -> Result<f64> {
    let series = graph_run(sc, n, dt, Sampling::EveryStep)?;
    let source = sc
        .law()?
        .source_kernel()
        .ok_or_else(|| Error::Refused("the mass law has no mean-field source term".into()))?;
    let measures = series
        .frames
        .iter()
        .map(|f| pushforward_weighted(f, SpaceQuadrature::GridAligned))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = sc.pde_domain()?;
    weak_residual(&series.times(), &measures, &sc.kernel(), &source, &test_bank(lo, hi))
}

/// Times at which the pushforward is compared with the PDE solution.
pub fn pde_times(horizon: f64) -> Vec<f64> {
    let mut t = vec![0.3 * horizon, horizon];
    t.dedup();
    t
}

/// Runs all three checks. Refuses laws that do not preserve
/// indistinguishability, since the mean-field reading needs it.
pub fn run_subordination_check(sc: &Scenario) -> Result<SubordinationReport> {
    let law = sc.law()?;
    if !law.preserves_indistinguishability() {
        return Err(Error::Refused(format!(
            "mass law `{}` does not preserve indistinguishability, so its empirical measures do not \
             determine the dynamics and no mean-field equation exists to compare with",
            law.name()
        )));
    }
    if sc.dimension != 1 {
        return Err(Error::config("the subordination check is implemented in one dimension"));
    }
    let n_max = *sc.n_list.last().expect("validated");
    if n_max % 2 != 0 {
        return Err(Error::config("the residual refinement needs an even largest N"));
    }
    let source = law.source_kernel().expect("indistinguishable laws carry a source");

    // Residual under joint refinement of space and time.
    let pairs = [(n_max / 2, sc.dt), (n_max, sc.dt / 2.0)];
    let residual = pairs
        .par_iter()
        .map(|&(n, dt)| {
            Ok(ResidualRow {
                n,
                dt,
                residual: pushforward_residual(sc, n, dt)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Empirical measures against the fine pushforward.
    let (reference, micro) = rayon::join(
        || reference_run(sc),
        || {
            sc.n_list
                .par_iter()
                .map(|&n| micro_run(sc, n, Sampling::Uniform(SAMPLES)).map(|t| (n, t)))
                .collect::<Result<Vec<_>>>()
        },
    );
    let reference = reference?;
    let ref_measures = reference
        .frames
        .iter()
        .map(|f| pushforward_weighted(f, SpaceQuadrature::GridAligned))
        .collect::<Result<Vec<_>>>()?;
    let mut micro_vs_pushforward = Vec::new();
    for (n, traj) in micro? {
        let mut sup = 0.0_f64;
        let mut at_horizon = 0.0;
        for (state, mu) in traj.states.iter().zip(&ref_measures) {
            let d = wasserstein1(&empirical_measure(state)?, mu)?;
            sup = sup.max(d);
            at_horizon = d;
        }
        micro_vs_pushforward.push(DistanceRow { n, at_horizon, sup });
    }

    // Binned pushforward against the PDE.
    let times = pde_times(sc.horizon);
    let cells = sc.pde.cells;
    let (lo, hi) = sc.pde_domain()?;
    let (graph, pde) = rayon::join(
        || graph_run(sc, n_max, sc.dt, Sampling::Times(times.clone())),
        || {
            let mut opts = PdeOptions::new(sc.horizon, sc.dt).sampling(Sampling::Times(times.clone()));
            opts.cfl = sc.pde.cfl;
            opts.tolerances = sc.tolerances();
            solve_pde(&sc.initial_density(cells)?, &sc.kernel(), &source, &opts)
        },
    );
    let (graph, pde) = (graph?, pde?);
    let mut pde_rows = Vec::new();
    for &t in &times {
        let mu: ParticleMeasure = pushforward_weighted(graph.at(t), SpaceQuadrature::GridAligned)?;
        let binned = bin_density(&mu, lo, hi, cells)?;
        let rho = pde.at(t);
        pde_rows.push(PdeRow {
            time: t,
            distance: flat_distance(&binned, rho)?,
            negative_mass: rho.negative_mass(),
        });
    }

    Ok(SubordinationReport {
        scenario: sc.name.clone(),
        residual,
        micro_vs_pushforward,
        pde: pde_rows,
        pde_agents: n_max,
        pde_cells: cells,
        residual_drop_required: sc.tolerances.residual_drop,
        pde_threshold: sc.tolerances.pde_distance,
    })
}
