//! Scenario files: the full description of one experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AgentEnsemble, IndexFunction, Quadrature};
use crate::graph::FieldPair;
use crate::kernels::InteractionKernel;
use crate::mass::{MassLaw, SourceKernel};
use crate::mean_field::{initial_density, DensityGrid};
use crate::ode::Tolerances;

use super::profiles::{Profile, ProfileSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Zero,
    Linear,
    RationalRadial,
    CompactSine { radius: f64 },
}

/// Source kernel of a `psi_sk` law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    /// `‖φ(y₁ − y₂)‖ − ‖φ(y₀ − y₂)‖` with the scenario kernel.
    GroupInfluence,
    /// `tanh(gain (y₁ − y₀))`, first component.
    PairTanh { gain: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    Zero,
    /// The group-influence law in its factorized form, bound to the scenario kernel.
    GroupInfluence,
    PsiSk { source: SourceSpec },
    LeaderFollower { groups: usize, leader_fraction: f64, gain: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub x: ProfileSpec,
    pub m: ProfileSpec,
}

/// Opinion-space grid of the mean-field solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSpec {
    /// Margin added on both sides of the initial opinion range.
    pub padding: f64,
    pub cells: usize,
    pub cfl: f64,
}

impl Default for PdeSpec {
    fn default() -> Self {
        PdeSpec {
            padding: 0.25,
            cells: 200,
            cfl: 0.9,
        }
    }
}

/// Solver monitor overrides and experiment pass thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioTolerances {
    pub mass_per_agent: f64,
    pub mass_field: f64,
    pub growth_slack_micro: f64,
    pub growth_slack_graph: f64,
    pub indistinguishability: f64,
    pub equal_position: f64,
    pub blowup: f64,
    pub step_budget: u64,
    /// Relative increase tolerated between consecutive errors of a sweep.
    pub sweep_slack: f64,
    /// Final sweep error must stay below this multiple of the projection error.
    pub projection_factor: f64,
    /// Required relative drop of the weak residual under refinement.
    pub residual_drop: f64,
    /// Bound on the distance between the binned pushforward and the PDE.
    pub pde_distance: f64,
}

impl Default for ScenarioTolerances {
    fn default() -> Self {
        let t = Tolerances::default();
        ScenarioTolerances {
            mass_per_agent: t.mass_per_agent,
            mass_field: t.mass_field,
            growth_slack_micro: t.growth_slack_micro,
            growth_slack_graph: t.growth_slack_graph,
            indistinguishability: t.indistinguishability,
            equal_position: t.equal_position,
            blowup: t.blowup,
            step_budget: t.step_budget,
            sweep_slack: 0.1,
            projection_factor: 2.0,
            residual_drop: 0.4,
            pde_distance: 0.05,
        }
    }
}

impl ScenarioTolerances {
    pub fn solver(&self) -> Tolerances {
        Tolerances {
            mass_per_agent: self.mass_per_agent,
            mass_field: self.mass_field,
            growth_slack_micro: self.growth_slack_micro,
            growth_slack_graph: self.growth_slack_graph,
            indistinguishability: self.indistinguishability,
            equal_position: self.equal_position,
            blowup: self.blowup,
            step_budget: self.step_budget,
        }
    }
}

/// One experiment, as stored in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub dimension: usize,
    pub kernel: KernelSpec,
    pub mass_law: LawSpec,
    pub initial: InitialSpec,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    #[serde(rename = "N_list")]
    pub n_list: Vec<usize>,
    /// Agent count for single runs; defaults to the first entry of `N_list`.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<usize>,
    #[serde(default)]
    pub pde: PdeSpec,
    #[serde(default)]
    pub tolerances: ScenarioTolerances,
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read scenario {}: {e}", path.display())))?;
    Scenario::from_json(&text)
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| Error::config(format!("scenario: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks every field constraint, and that the mass law can be laid out on
    /// every grid the harness will use.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::config("name must be a non-empty identifier of [A-Za-z0-9_-]"));
        }
        if self.dimension == 0 {
            return Err(Error::config("dimension must be at least 1"));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::config("T must be finite and non-negative"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("dt must be positive"));
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::config("N_list must hold positive counts"));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("N_list must be strictly increasing"));
        }
        if self.agents == Some(0) {
            return Err(Error::config("N must be positive"));
        }
        if let KernelSpec::CompactSine { radius } = self.kernel {
            if !(radius.is_finite() && radius > 0.0) {
                return Err(Error::config("kernel.radius must be positive"));
            }
        }
        if !(self.pde.padding.is_finite() && self.pde.padding >= 0.0) {
            return Err(Error::config("pde.padding must be non-negative"));
        }
        if self.pde.cells < 2 {
            return Err(Error::config("pde.cells must be at least 2"));
        }
        if !(self.pde.cfl > 0.0 && self.pde.cfl <= 1.0) {
            return Err(Error::config("pde.cfl must lie in (0, 1]"));
        }
        let x0 = self.x0()?;
        let m0 = self.m0()?;
        if m0.dim() != 1 {
            return Err(Error::config("initial.m must be scalar"));
        }
        if x0.dim() != self.dimension {
            return Err(Error::config("initial.x does not match the dimension"));
        }
        let law = self.law()?;
        let mut sizes = self.n_list.clone();
        sizes.push(self.reference_cells());
        sizes.push(self.default_agents());
        for n in sizes {
            law.validate_grid(n).map_err(|e| Error::config(format!("mass_law on N = {n}: {e}")))?;
        }
        Ok(())
    }

    pub fn kernel(&self) -> InteractionKernel {
        match self.kernel {
            KernelSpec::Zero => InteractionKernel::Zero,
            KernelSpec::Linear => InteractionKernel::Linear,
            KernelSpec::RationalRadial => InteractionKernel::RationalRadial,
            KernelSpec::CompactSine { radius } => InteractionKernel::CompactSine { radius },
        }
    }

    pub fn law(&self) -> Result<MassLaw> {
        Ok(match &self.mass_law {
            LawSpec::Zero => MassLaw::Zero,
            LawSpec::GroupInfluence => MassLaw::group_influence(self.kernel()),
            LawSpec::PsiSk { source } => MassLaw::psi_sk(match source {
                SourceSpec::GroupInfluence => SourceKernel::GroupInfluence(self.kernel()),
                SourceSpec::PairTanh { gain } => SourceKernel::PairTanh { gain: *gain },
            }),
            LawSpec::LeaderFollower {
                groups,
                leader_fraction,
                gain,
            } => MassLaw::leader_follower(*groups, *leader_fraction, *gain)?,
        })
    }

    pub fn x0(&self) -> Result<Profile> {
        Profile::resolve(&self.initial.x, self.dimension)
    }

    pub fn m0(&self) -> Result<Profile> {
        Profile::resolve(&self.initial.m, 1)
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.solver()
    }

    /// Agent count for single runs.
    pub fn default_agents(&self) -> usize {
        self.agents.unwrap_or(self.n_list[0])
    }

    /// Cell count of the fine reference grid: four times the largest `N`.
    pub fn reference_cells(&self) -> usize {
        4 * self.n_list.iter().copied().max().unwrap_or(1)
    }

    /// Projected initial data on `n` agents.
    pub fn ensemble(&self, n: usize) -> Result<AgentEnsemble> {
        AgentEnsemble::from_initial_data(&self.x0()?, &self.m0()?, n, Quadrature::default())
    }

    /// Projected initial data as piecewise-constant fields on `n` cells.
    pub fn fields(&self, n: usize) -> Result<FieldPair> {
        Ok(FieldPair::from_ensemble(&self.ensemble(n)?))
    }

    /// Opinion interval of the mean-field grid.
    pub fn pde_domain(&self) -> Result<(f64, f64)> {
        let (lo, hi) = self.x0()?.range(4096);
        Ok((lo - self.pde.padding, hi + self.pde.padding))
    }

    /// Initial density on the mean-field grid with `cells` cells.
    pub fn initial_density(&self, cells: usize) -> Result<DensityGrid> {
        if self.dimension != 1 {
            return Err(Error::config("the mean-field solver is one-dimensional"));
        }
        let (lo, hi) = self.pde_domain()?;
        initial_density(&self.x0()?, &self.m0()?, lo, hi, cells, 10_000)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEADERS: &str = r#"{
        "name": "t", "dimension": 1,
        "kernel": {"kind": "rational_radial"},
        "mass_law": {"kind": "leader_follower", "groups": 1, "leader_fraction": 0.1, "gain": 5.0},
        "initial": {"x": {"builtin": "sin2_4s"}, "m": {"builtin": "s_cos2_5s_normalized"}},
        "T": 5.0, "dt": 0.001, "N_list": [10, 20, 40, 80]
    }"#;

    #[test]
    fn parses_and_validates() {
        let sc = Scenario::from_json(LEADERS).unwrap();
        assert_eq!(sc.reference_cells(), 320);
        assert_eq!(sc.default_agents(), 10);
        assert_eq!(sc.pde, PdeSpec::default());
        let back = Scenario::from_json(&sc.to_json().unwrap()).unwrap();
        assert_eq!(back, sc);
    }

    #[test]
    fn rejects_bad_files() {
        let missing_kernel = LEADERS.replace(r#""kernel": {"kind": "rational_radial"},"#, "");
        let e = Scenario::from_json(&missing_kernel).unwrap_err();
        assert!(e.to_string().contains("kernel"), "{e}");
        let unknown = LEADERS.replace(r#""dimension": 1,"#, r#""dimension": 1, "colour": 3,"#);
        assert!(Scenario::from_json(&unknown).is_err());
        // 0.1 of 25 cells is not a whole number of leaders.
        let bad_grid = LEADERS.replace("[10, 20, 40, 80]", "[25, 50]");
        let e = Scenario::from_json(&bad_grid).unwrap_err();
        assert!(e.to_string().contains("N = 25"), "{e}");
        let bad_kernel = LEADERS.replace("rational_radial\"}", "compact_sine\", \"radius\": -1}");
        assert!(Scenario::from_json(&bad_kernel).is_err());
        let unsorted = LEADERS.replace("[10, 20, 40, 80]", "[20, 10]");
        assert!(Scenario::from_json(&unsorted).is_err());
    }
}
