//! Data series behind the published figures: leader/follower trajectories
//! and profiles, clustering profiles, and the measure overlay.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::csv;
use crate::error::{Error, Result};
use crate::graph::{integrate_graph, FieldPair, GraphOptions, SpaceQuadrature};
use crate::mass::MassLaw;
use crate::mean_field::{bin_density, empirical_measure, pushforward_weighted, solve_pde, DensityGrid, PdeOptions};
use crate::micro::{integrate, MicroOptions};
use crate::ode::Sampling;

use super::scenario::Scenario;
use super::subordination::pde_times;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl FigureId {
    pub const ALL: [FigureId; 6] = [
        FigureId::Fig3,
        FigureId::Fig4,
        FigureId::Fig5,
        FigureId::Fig6,
        FigureId::Fig7,
        FigureId::Fig8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
            FigureId::Fig8 => "fig8",
        }
    }

    /// Whether the figure can be produced from `sc`.
    pub fn accepts(self, sc: &Scenario) -> Result<()> {
        let law = sc.law()?;
        let groups = match &law {
            MassLaw::LeaderFollower(lf) => Some(lf.groups),
            _ => None,
        };
        let ok = match self {
            FigureId::Fig3 | FigureId::Fig4 => groups == Some(1),
            FigureId::Fig5 | FigureId::Fig6 => groups == Some(2),
            FigureId::Fig7 | FigureId::Fig8 => law.preserves_indistinguishability() && sc.dimension == 1,
        };
        if ok {
            Ok(())
        } else {
            let want = match self {
                FigureId::Fig3 | FigureId::Fig4 => "a leader/follower law with one group",
                FigureId::Fig5 | FigureId::Fig6 => "a leader/follower law with two groups",
                _ => "a one-dimensional scenario whose law preserves indistinguishability",
            };
            let has = match groups {
                Some(k) => format!("a leader/follower law with {k} group(s)"),
                None => format!("the `{}` law", law.name()),
            };
            Err(Error::Refused(format!("{} needs {want}; scenario `{}` has {has}", self.name(), sc.name)))
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(format!("unknown figure `{s}`, expected fig3..fig8")))
    }
}

/// One CSV file of a figure bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FigureSeries {
    pub series: String,
    pub csv: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FigureBundle {
    pub scenario: String,
    pub figure: FigureId,
    pub series: Vec<FigureSeries>,
}

impl FigureBundle {
    pub fn file_name(&self, series: &FigureSeries) -> String {
        format!("{}_{}_{}.csv", self.scenario, self.figure, series.series)
    }

    /// Writes every series into `dir`, returning the paths.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for s in &self.series {
            let path = dir.join(self.file_name(s));
            std::fs::write(&path, &s.csv)?;
            out.push(path);
        }
        Ok(out)
    }
}

// Agents and index cells of each figure.
const LEADER_TRAJECTORY_AGENTS: usize = 20;
const LEADER_PROFILE_AGENTS: usize = 100;
const CLUSTER_AGENTS: usize = 50;
const PROFILE_CELLS: usize = 100;
const OVERLAY_BINS: usize = 25;
const TRAJECTORY_SAMPLES: usize = 501;

fn write_profiles<W: Write>(w: &mut W, frames: &[FieldPair]) -> Result<()> {
    let d = frames.first().map_or(1, |f| f.dim());
    let mut header = vec!["t".to_string(), "s".to_string()];
    if d == 1 {
        header.push("x".into());
    } else {
        header.extend((1..=d).map(|c| format!("x_{c}")));
    }
    header.push("m".into());
    csv::write_row(w, header)?;
    for f in frames {
        let n = f.cells();
        for i in 0..n {
            let row = [csv::float(f.time), csv::float((i as f64 + 0.5) / n as f64)]
                .into_iter()
                .chain(f.x.cell(i).iter().map(|v| csv::float(*v)))
                .chain(std::iter::once(csv::float(f.m.values()[i])));
            csv::write_row(w, row)?;
        }
    }
    Ok(())
}

fn write_densities<W: Write>(w: &mut W, grids: &[DensityGrid]) -> Result<()> {
    csv::write_row(w, ["t", "x_center", "density"].map(String::from))?;
    for g in grids {
        for (j, r) in g.density.iter().enumerate() {
            csv::write_row(w, [csv::float(g.time), csv::float(g.center(j)), csv::float(*r)])?;
        }
    }
    Ok(())
}

/// Caption times rescaled to the scenario horizon.
fn caption_times(caption: &[f64], caption_horizon: f64, horizon: f64) -> Vec<f64> {
    caption.iter().map(|t| (t * horizon / caption_horizon).min(horizon)).collect()
}

fn micro_opts(sc: &Scenario, sampling: Sampling) -> MicroOptions {
    MicroOptions::new(sc.horizon, sc.dt)
        .sampling(sampling)
        .tolerances(sc.tolerances())
}

fn graph_opts(sc: &Scenario, sampling: Sampling) -> GraphOptions {
    GraphOptions::new(sc.horizon, sc.dt)
        .quadrature(SpaceQuadrature::Simpson)
        .sampling(sampling)
        .tolerances(sc.tolerances())
}

/// Micro profiles on `n` agents and Simpson graph profiles on
/// [`PROFILE_CELLS`] cells at `times`.
fn profile_pair(sc: &Scenario, n: usize, times: &[f64]) -> Result<Vec<FigureSeries>> {
    let sampling = Sampling::Times(times.to_vec());
    let kernel = sc.kernel();
    let law = sc.law()?;
    let (traj, series) = rayon::join(
        || integrate(&sc.ensemble(n)?, &kernel, &law, &micro_opts(sc, sampling.clone())),
        || integrate_graph(&sc.fields(PROFILE_CELLS)?, &kernel, &law, &graph_opts(sc, sampling.clone())),
    );
    let (traj, series) = (traj?, series?);
    let pick = |t: f64| -> FieldPair { FieldPair::from_ensemble(traj.at(t)) };
    let micro: Vec<FieldPair> = times.iter().map(|&t| pick(t)).collect();
    let graph: Vec<FieldPair> = times.iter().map(|&t| series.at(t).clone()).collect();
    let mut a = Vec::new();
    write_profiles(&mut a, &micro)?;
    let mut b = Vec::new();
    write_profiles(&mut b, &graph)?;
    Ok(vec![
        FigureSeries { series: "micro".into(), csv: a },
        FigureSeries { series: "graph".into(), csv: b },
    ])
}

/// Produces the data of `figure` from `sc`.
pub fn emit_figure_data(sc: &Scenario, figure: FigureId) -> Result<FigureBundle> {
    figure.accepts(sc)?;
    let kernel = sc.kernel();
    let law = sc.law()?;
    let series = match figure {
        FigureId::Fig3 | FigureId::Fig5 => {
            let traj = integrate(
                &sc.ensemble(LEADER_TRAJECTORY_AGENTS)?,
                &kernel,
                &law,
                &micro_opts(sc, Sampling::Uniform(TRAJECTORY_SAMPLES)),
            )?;
            let mut buf = Vec::new();
            traj.write_csv(&mut buf)?;
            vec![FigureSeries { series: "trajectory".into(), csv: buf }]
        }
        FigureId::Fig4 | FigureId::Fig6 => profile_pair(
            sc,
            LEADER_PROFILE_AGENTS,
            &caption_times(&[0.05, 1.4, 5.0], 5.0, sc.horizon),
        )?,
        FigureId::Fig7 => profile_pair(sc, CLUSTER_AGENTS, &caption_times(&[0.0, 0.45, 1.5], 1.5, sc.horizon))?,
        FigureId::Fig8 => overlay(sc)?,
    };
    Ok(FigureBundle {
        scenario: sc.name.clone(),
        figure,
        series,
    })
}

// Binned empirical measure, pushforward atoms and PDE density at the
// caption times.
fn overlay(sc: &Scenario) -> Result<Vec<FigureSeries>> {
    let kernel = sc.kernel();
    let law = sc.law()?;
    let source = law.source_kernel().expect("checked by accepts");
    let mut times = vec![0.0];
    times.extend(pde_times(sc.horizon));
    times.dedup();
    let sampling = Sampling::Times(times.clone());
    let (lo, hi) = sc.x0()?.range(4096);

    let (traj, rest) = rayon::join(
        || integrate(&sc.ensemble(CLUSTER_AGENTS)?, &kernel, &law, &micro_opts(sc, sampling.clone())),
        || {
            rayon::join(
                || integrate_graph(&sc.fields(PROFILE_CELLS)?, &kernel, &law, &graph_opts(sc, sampling.clone())),
                || {
                    let mut opts = PdeOptions::new(sc.horizon, sc.dt).sampling(sampling.clone());
                    opts.cfl = sc.pde.cfl;
                    opts.tolerances = sc.tolerances();
                    solve_pde(&sc.initial_density(sc.pde.cells)?, &kernel, &source, &opts)
                },
            )
        },
    );
    let (traj, (graph, pde)) = (traj?, (rest.0?, rest.1?));

    let mut binned = Vec::new();
    for &t in &times {
        let mut g = bin_density(&empirical_measure(traj.at(t))?, lo, hi, OVERLAY_BINS)?;
        g.time = t;
        binned.push(g);
    }
    let mut a = Vec::new();
    write_densities(&mut a, &binned)?;

    let mut b = Vec::new();
    csv::write_row(&mut b, ["t", "location", "mass"].map(String::from))?;
    for &t in &times {
        let mu = pushforward_weighted(graph.at(t), SpaceQuadrature::Simpson)?;
        for i in 0..mu.len() {
            csv::write_row(&mut b, [csv::float(t), csv::float(mu.location(i)[0]), csv::float(mu.mass(i))])?;
        }
    }

    let mut c = Vec::new();
    let frames: Vec<DensityGrid> = times.iter().map(|&t| pde.at(t).clone()).collect();
    write_densities(&mut c, &frames)?;

    Ok(vec![
        FigureSeries { series: "binned".into(), csv: a },
        FigureSeries { series: "pushforward".into(), csv: b },
        FigureSeries { series: "pde".into(), csv: c },
    ])
}
