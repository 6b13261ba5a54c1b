//! Fixed-step time integration shared by the microscopic and graph solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

/// Instants at which a run records its state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// `n ≥ 2` uniform instants on `[0, T]`, both ends included.
    Uniform(usize),
    /// After every step.
    EveryStep,
    /// Explicit instants in `[0, T]`; `0` and `T` are always added.
    Times(Vec<f64>),
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::Uniform(51)
    }
}

/// Monitor thresholds. Defaults follow the solver contracts; scenarios may
/// override any entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Microscopic mass drift allowed per agent: `|Σm(t) − Σm(0)| ≤ mass_per_agent · N`.
    pub mass_per_agent: f64,
    /// Graph and PDE mass drift `|∫m(t) − ∫m(0)|`.
    pub mass_field: f64,
    /// Relative slack on the exponential growth bound, microscopic level.
    pub growth_slack_micro: f64,
    /// Relative slack on the exponential growth bound, graph level.
    pub growth_slack_graph: f64,
    /// Indistinguishability comparison tolerance.
    pub indistinguishability: f64,
    /// Persistence of initially equal positions.
    pub equal_position: f64,
    /// Field magnitude regarded as blow-up.
    pub blowup: f64,
    /// Maximum number of time steps in one run.
    pub step_budget: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mass_per_agent: 1e-8,
            mass_field: 1e-6,
            growth_slack_micro: 1e-6,
            growth_slack_graph: 1e-4,
            indistinguishability: 1e-7,
            equal_position: 1e-10,
            blowup: 1e6,
            step_budget: 10_000_000,
        }
    }
}

/// Sample instants and the number of equal steps between consecutive ones.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPlan {
    pub times: Vec<f64>,
    pub steps: Vec<usize>,
}

impl StepPlan {
    /// Each segment between samples is split into `ceil(Δ/dt)` equal steps,
    /// so the effective step never exceeds `dt` and every sample is hit
    /// exactly.
    pub fn new(horizon: f64, dt: f64, sampling: &Sampling, budget: u64) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::invalid(format!("horizon must be finite and non-negative, got {horizon}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        if horizon == 0.0 {
            return Ok(StepPlan {
                times: vec![0.0],
                steps: vec![],
            });
        }
        let times = match sampling {
            Sampling::Uniform(n) => {
                if *n < 2 {
                    return Err(Error::invalid("uniform sampling needs at least two instants"));
                }
                let segs = (*n - 1) as f64;
                let mut t: Vec<f64> = (0..*n).map(|k| horizon * k as f64 / segs).collect();
                t[*n - 1] = horizon;
                t
            }
            Sampling::EveryStep => {
                let steps = segment_steps(horizon, dt);
                check_budget(steps as u64, budget)?;
                let mut t: Vec<f64> = (0..=steps).map(|k| horizon * k as f64 / steps as f64).collect();
                t[steps] = horizon;
                t
            }
            Sampling::Times(list) => {
                let mut t = Vec::with_capacity(list.len() + 2);
                t.push(0.0);
                for &v in list {
                    if !(v.is_finite() && (0.0..=horizon).contains(&v)) {
                        return Err(Error::invalid(format!("sample time {v} outside [0, {horizon}]")));
                    }
                    t.push(v);
                }
                t.push(horizon);
                t.sort_by(f64::total_cmp);
                t.dedup();
                t
            }
        };
        let steps: Vec<usize> = times.windows(2).map(|w| segment_steps(w[1] - w[0], dt)).collect();
        check_budget(steps.iter().map(|&s| s as u64).sum(), budget)?;
        Ok(StepPlan { times, steps })
    }

    pub fn total_steps(&self) -> usize {
        self.steps.iter().sum()
    }
}

fn segment_steps(span: f64, dt: f64) -> usize {
    // Absorb the rounding in e.g. 0.1 / 1e-3 = 100.00000000000001.
    ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

fn check_budget(steps: u64, budget: u64) -> Result<()> {
    if steps > budget {
        return Err(Error::Budget(format!("{steps} time steps exceed the budget of {budget}")));
    }
    Ok(())
}

/// Right-hand side of an autonomous system `y' = f(y)`.
pub(crate) trait Rhs {
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

/// Scratch buffers for one-step methods.
pub(crate) struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(len: usize) -> Self {
        Workspace {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            tmp: vec![0.0; len],
        }
    }
}

/// Advances `y` by one step of size `h` from time `t`.
pub(crate) fn step(method: Method, f: &impl Rhs, t: f64, h: f64, y: &mut [f64], ws: &mut Workspace) -> Result<()> {
    match method {
        Method::Euler => {
            f.eval(t, y, &mut ws.k1)?;
            for (yi, k) in y.iter_mut().zip(&ws.k1) {
                *yi += h * k;
            }
        }
        Method::Rk4 => {
            let half = 0.5 * h;
            f.eval(t, y, &mut ws.k1)?;
            for i in 0..y.len() {
                ws.tmp[i] = y[i] + half * ws.k1[i];
            }
            f.eval(t + half, &ws.tmp, &mut ws.k2)?;
            for i in 0..y.len() {
                ws.tmp[i] = y[i] + half * ws.k2[i];
            }
            f.eval(t + half, &ws.tmp, &mut ws.k3)?;
            for i in 0..y.len() {
                ws.tmp[i] = y[i] + h * ws.k3[i];
            }
            f.eval(t + h, &ws.tmp, &mut ws.k4)?;
            let sixth = h / 6.0;
            for i in 0..y.len() {
                y[i] += sixth * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
            }
        }
    }
    Ok(())
}

/// Runs `plan`, calling `check(t, y)` after every step and `record(t, y)` at
/// every sample instant (including `t = 0`).
pub(crate) fn run(
    method: Method,
    f: &impl Rhs,
    plan: &StepPlan,
    y: &mut [f64],
    mut check: impl FnMut(f64, &[f64]) -> Result<()>,
    mut record: impl FnMut(f64, &[f64]),
) -> Result<()> {
    let mut ws = Workspace::new(y.len());
    record(plan.times[0], y);
    for (seg, &n) in plan.steps.iter().enumerate() {
        let (t0, t1) = (plan.times[seg], plan.times[seg + 1]);
        let h = (t1 - t0) / n as f64;
        for j in 0..n {
            let t = t0 + j as f64 * h;
            step(method, f, t, h, y, &mut ws)?;
            let t_after = if j + 1 == n { t1 } else { t0 + (j + 1) as f64 * h };
            check(t_after, y)?;
        }
        record(t1, y);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;
    impl Rhs for Decay {
        fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = -y[0];
            Ok(())
        }
    }

    #[test]
    fn plan_hits_samples() {
        let p = StepPlan::new(5.0, 1e-3, &Sampling::Uniform(51), 10_000_000).unwrap();
        assert_eq!(p.times.len(), 51);
        assert_eq!(p.times[50], 5.0);
        assert_eq!(p.total_steps(), 5000);
        let p = StepPlan::new(1.5, 1e-3, &Sampling::Times(vec![0.45]), 100_000).unwrap();
        assert_eq!(p.times, vec![0.0, 0.45, 1.5]);
        assert_eq!(p.steps, vec![450, 1050]);
        let p = StepPlan::new(0.0, 1e-3, &Sampling::Uniform(51), 1).unwrap();
        assert_eq!(p.times, vec![0.0]);
    }

    #[test]
    fn plan_budget_and_validation() {
        assert!(matches!(
            StepPlan::new(10.0, 1e-3, &Sampling::EveryStep, 100),
            Err(Error::Budget(_))
        ));
        assert!(StepPlan::new(1.0, 0.0, &Sampling::EveryStep, 100).is_err());
        assert!(StepPlan::new(1.0, 0.1, &Sampling::Times(vec![2.0]), 100).is_err());
    }

    #[test]
    fn orders_of_accuracy() {
        let exact = (-1.0f64).exp();
        let err = |method, dt| {
            let plan = StepPlan::new(1.0, dt, &Sampling::Uniform(2), 1_000_000).unwrap();
            let mut y = [1.0];
            run(method, &Decay, &plan, &mut y, |_, _| Ok(()), |_, _| {}).unwrap();
            (y[0] - exact).abs()
        };
        let r_euler = err(Method::Euler, 0.01) / err(Method::Euler, 0.005);
        let r_rk4 = err(Method::Rk4, 0.1) / err(Method::Rk4, 0.05);
        assert!((r_euler - 2.0).abs() < 0.1, "{r_euler}");
        assert!((r_rk4 - 16.0).abs() < 1.0, "{r_rk4}");
    }
}
