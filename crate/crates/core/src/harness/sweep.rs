//! Convergence of the microscopic system to the graph limit as `N` grows.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::csv;
use crate::error::{Error, Result};
use crate::graph::{integrate_graph, FieldSeries, GraphOptions, SpaceQuadrature};
use crate::grid::{l2_distance, projection_error, Quadrature};
use crate::micro::{integrate, MicroOptions, Trajectory};
use crate::ode::Sampling;

use super::scenario::Scenario;

/// Number of uniform sample instants of every comparison.
pub const SAMPLES: usize = 51;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    /// `sup_t ‖x_N(t) − x_ref(t)‖_{L²}`.
    pub x_error: f64,
    pub m_error: f64,
    /// `‖P_c P_d x₀ − x₀‖_{L²}` at this `N`.
    pub x_projection: f64,
    pub m_projection: f64,
    pub wall: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub scenario: String,
    pub reference_cells: usize,
    pub reference_dt: f64,
    pub samples: usize,
    /// Sorted by `N`.
    pub rows: Vec<SweepRow>,
    pub slack: f64,
    pub projection_factor: f64,
}

impl SweepReport {
    fn monotone(&self, col: impl Fn(&SweepRow) -> f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| col(&w[1]) <= (1.0 + self.slack) * col(&w[0]))
    }

    pub fn x_monotone(&self) -> bool {
        self.monotone(|r| r.x_error)
    }

    pub fn m_monotone(&self) -> bool {
        self.monotone(|r| r.m_error)
    }

    /// Final errors within `projection_factor` times the projection errors.
    /// A column whose projection error vanishes is held to the same bound
    /// with a floor of `1e-12`.
    pub fn final_within_projection(&self) -> bool {
        self.rows.last().is_none_or(|r| {
            r.x_error <= self.projection_factor * r.x_projection.max(1e-12)
                && r.m_error <= self.projection_factor * r.m_projection.max(1e-12)
        })
    }

    pub fn passed(&self) -> bool {
        self.x_monotone() && self.m_monotone() && self.final_within_projection()
    }

    /// Ratios `error(N_{k+1}) / error(N_k)` for x and m.
    pub fn ratios(&self) -> Vec<(f64, f64)> {
        self.rows
            .windows(2)
            .map(|w| (w[1].x_error / w[0].x_error, w[1].m_error / w[0].m_error))
            .collect()
    }

    /// One row per `N`; wall time is left out so the file is reproducible.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        csv::write_row(
            w,
            ["N", "x_error", "m_error", "x_projection", "m_projection"].map(String::from),
        )?;
        for r in &self.rows {
            csv::write_row(
                w,
                [
                    r.n.to_string(),
                    csv::float(r.x_error),
                    csv::float(r.m_error),
                    csv::float(r.x_projection),
                    csv::float(r.m_projection),
                ],
            )?;
        }
        Ok(())
    }
}

/// Fine-grid graph-limit run used as the limit proxy: grid-aligned
/// quadrature on `4 max N` cells with a quarter of the scenario step.
pub fn reference_run(sc: &Scenario) -> Result<FieldSeries> {
    let cells = sc.reference_cells();
    let opts = GraphOptions::new(sc.horizon, sc.dt / 4.0)
        .quadrature(SpaceQuadrature::GridAligned)
        .sampling(Sampling::Uniform(SAMPLES))
        .tolerances(sc.tolerances());
    integrate_graph(&sc.fields(cells)?, &sc.kernel(), &sc.law()?, &opts)
        .map_err(|e| context(e, &format!("reference run on {cells} cells")))
}

/// Microscopic RK4 run on `n` agents sampled at the shared instants.
pub fn micro_run(sc: &Scenario, n: usize, sampling: Sampling) -> Result<Trajectory> {
    let opts = MicroOptions::new(sc.horizon, sc.dt)
        .sampling(sampling)
        .tolerances(sc.tolerances());
    integrate(&sc.ensemble(n)?, &sc.kernel(), &sc.law()?, &opts)
        .map_err(|e| context(e, &format!("micro run with N = {n}")))
}

pub(crate) fn context(e: Error, what: &str) -> Error {
    match e {
        Error::Monitor { monitor, time, detail } => Error::Monitor {
            monitor,
            time,
            detail: format!("{detail} ({what})"),
        },
        Error::Instability { time, detail } => Error::Instability {
            time,
            detail: format!("{detail} ({what})"),
        },
        other => other,
    }
}

/// Runs the sweep over `n_list` (the scenario's list when `None`).
pub fn run_convergence_sweep(sc: &Scenario, n_list: Option<&[usize]>) -> Result<SweepReport> {
    let list = n_list.unwrap_or(&sc.n_list).to_vec();
    if list.is_empty() || list.contains(&0) {
        return Err(Error::config("the sweep needs positive grid sizes"));
    }
    let mut sweep_sc = sc.clone();
    sweep_sc.n_list = list.clone();
    sweep_sc.n_list.sort_unstable();
    sweep_sc.n_list.dedup();
    let cells = sweep_sc.reference_cells();
    let law = sc.law()?;
    for &n in &sweep_sc.n_list {
        if cells % n != 0 {
            return Err(Error::config(format!(
                "N = {n} does not divide the reference grid of {cells} cells"
            )));
        }
        law.validate_grid(n)?;
    }
    law.validate_grid(cells)?;

    let x0 = sc.x0()?;
    let m0 = sc.m0()?;
    let quad = Quadrature::default();

    let (reference, runs) = rayon::join(
        || reference_run(&sweep_sc),
        || {
            sweep_sc
                .n_list
                .par_iter()
                .map(|&n| {
                    let start = Instant::now();
                    let traj = micro_run(&sweep_sc, n, Sampling::Uniform(SAMPLES))?;
                    Ok((n, traj, start.elapsed()))
                })
                .collect::<Result<Vec<_>>>()
        },
    );
    let reference = reference?;
    let runs = runs?;

    let mut rows = Vec::with_capacity(runs.len());
    for (n, traj, wall) in runs {
        let mut x_error = 0.0_f64;
        let mut m_error = 0.0_f64;
        for (state, frame) in traj.states.iter().zip(&reference.frames) {
            debug_assert!((state.time - frame.time).abs() <= 1e-12 * sc.horizon.max(1.0));
            x_error = x_error.max(l2_distance(&state.position_field(), &frame.x)?);
            m_error = m_error.max(l2_distance(&state.weight_field(), &frame.m)?);
        }
        rows.push(SweepRow {
            n,
            x_error,
            m_error,
            x_projection: projection_error(&x0, n, quad)?,
            m_projection: projection_error(&m0, n, quad)?,
            wall,
        });
    }
    Ok(SweepReport {
        scenario: sc.name.clone(),
        reference_cells: cells,
        reference_dt: sc.dt / 4.0,
        samples: SAMPLES,
        rows,
        slack: sc.tolerances.sweep_slack,
        projection_factor: sc.tolerances.projection_factor,
    })
}
