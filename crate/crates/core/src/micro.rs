//! The microscopic system
//!
//! ```text
//! dx_i/dt = (1/N) Σ_j m_j φ(x_j − x_i),    dm_i/dt = ψ_i^(N)(x, m),
//! ```
//!
//! its runtime monitors, and the indistinguishability and empirical-measure
//! checks.

use std::io::Write;

use crate::csv;
use crate::error::{Error, Result};
use crate::grid::AgentEnsemble;
use crate::kernels::InteractionKernel;
use crate::mass::MassLaw;
use crate::mean_field::{self, ParticleMeasure};
use crate::ode::{self, Method, Rhs, Sampling, StepPlan, Tolerances};
use crate::par;

/// `out_i = scale · Σ_j coef_j φ(x_j − x_i)`, summed in index order.
pub(crate) fn interaction_sum(
    kernel: &InteractionKernel,
    dim: usize,
    x: &[f64],
    coef: &[f64],
    scale: f64,
    out: &mut [f64],
) {
    let n = coef.len();
    if dim == 1 {
        par::fill(out, |i| {
            let xi = x[i];
            let mut acc = 0.0;
            for j in 0..n {
                acc += coef[j] * kernel.phi_scalar(x[j] - xi);
            }
            scale * acc
        });
    } else {
        par::fill_chunks(out, dim, |i, o| {
            let xi = &x[i * dim..(i + 1) * dim];
            let mut y = vec![0.0; dim];
            let mut v = vec![0.0; dim];
            o.iter_mut().for_each(|c| *c = 0.0);
            for j in 0..n {
                for c in 0..dim {
                    y[c] = x[j * dim + c] - xi[c];
                }
                kernel.eval_into(&y, &mut v);
                for c in 0..dim {
                    o[c] += coef[j] * v[c];
                }
            }
            o.iter_mut().for_each(|c| *c *= scale);
        });
    }
}

pub(crate) fn first_non_finite(v: &[f64]) -> Option<usize> {
    v.iter().position(|x| !x.is_finite())
}

/// Position and weight rates of the microscopic system.
pub fn rhs_micro(
    ensemble: &AgentEnsemble,
    kernel: &InteractionKernel,
    law: &MassLaw,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = ensemble.len();
    let d = ensemble.dim;
    law.validate_grid(n)?;
    let sys = MicroSystem::new(d, n, kernel, law);
    let mut y = ensemble.positions.clone();
    y.extend_from_slice(&ensemble.weights);
    let mut dy = vec![0.0; y.len()];
    sys.eval(0.0, &y, &mut dy)?;
    let dm = dy.split_off(n * d);
    Ok((dy, dm))
}

struct MicroSystem<'a> {
    dim: usize,
    n: usize,
    kernel: &'a InteractionKernel,
    law: &'a MassLaw,
    uniform: Vec<f64>,
}

impl<'a> MicroSystem<'a> {
    fn new(dim: usize, n: usize, kernel: &'a InteractionKernel, law: &'a MassLaw) -> Self {
        MicroSystem {
            dim,
            n,
            kernel,
            law,
            uniform: vec![1.0 / n as f64; n],
        }
    }
}

impl Rhs for MicroSystem<'_> {
    fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let split = self.n * self.dim;
        let (x, m) = y.split_at(split);
        let (dx, dm) = dy.split_at_mut(split);
        interaction_sum(self.kernel, self.dim, x, m, 1.0 / self.n as f64, dx);
        if let Some(i) = first_non_finite(dx) {
            return Err(Error::NonFinite {
                what: "opinion rate of agent",
                index: i / self.dim,
            });
        }
        self.law.rates(self.dim, x, m, &self.uniform, dm)?;
        Ok(())
    }
}

/// Settings of a microscopic run.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroOptions {
    pub horizon: f64,
    pub dt: f64,
    pub method: Method,
    pub sampling: Sampling,
    pub tolerances: Tolerances,
    /// Evaluate the conservation, positivity and growth monitors.
    pub monitors: bool,
}

impl MicroOptions {
    pub fn new(horizon: f64, dt: f64) -> Self {
        MicroOptions {
            horizon,
            dt,
            method: Method::Rk4,
            sampling: Sampling::default(),
            tolerances: Tolerances::default(),
            monitors: true,
        }
    }

    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }
}

/// Sampled microscopic solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<AgentEnsemble>,
    /// Largest `|x_i|` seen over all steps.
    pub max_opinion: f64,
    /// Largest `|m_i|` seen over all steps.
    pub max_weight: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &AgentEnsemble {
        self.states.last().expect("trajectory is never empty")
    }

    /// Sample closest to `t`.
    pub fn at(&self, t: f64) -> &AgentEnsemble {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        &self.states[k]
    }

    /// CSV with header `t,x_1..x_N,m_1..m_N`, one row per sample.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let first = &self.states[0];
        let mut header = vec!["t".to_string()];
        header.extend(csv::opinion_headers("x", first.len(), first.dim));
        header.extend((1..=first.len()).map(|i| format!("m_{i}")));
        csv::write_row(w, header)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let row = std::iter::once(csv::float(*t))
                .chain(s.positions.iter().map(|v| csv::float(*v)))
                .chain(s.weights.iter().map(|v| csv::float(*v)));
            csv::write_row(w, row)?;
        }
        Ok(())
    }
}

/// Integrates the microscopic system from `initial`.
pub fn integrate(
    initial: &AgentEnsemble,
    kernel: &InteractionKernel,
    law: &MassLaw,
    opts: &MicroOptions,
) -> Result<Trajectory> {
    let n = initial.len();
    let d = initial.dim;
    law.validate_grid(n)?;
    let plan = StepPlan::new(opts.horizon, opts.dt, &opts.sampling, opts.tolerances.step_budget)?;
    let sys = MicroSystem::new(d, n, kernel, law);
    let tol = opts.tolerances;

    let m0 = initial.weights.clone();
    let total0: f64 = m0.iter().sum();
    let mean0 = total0 / n as f64;
    let conserve = opts.monitors && law.conserves_at(mean0);
    let positive = opts.monitors && law.is_psi_sk_class() && m0.iter().all(|&v| v > 0.0);
    let growth = if opts.monitors && law.conserves_at(mean0) {
        law.growth_rate(mean0)
    } else {
        None
    };

    let mut y = initial.positions.clone();
    y.extend_from_slice(&initial.weights);
    let mut times = Vec::with_capacity(plan.times.len());
    let mut states = Vec::with_capacity(plan.times.len());
    let mut max_opinion = initial.positions.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut max_weight = m0.iter().fold(0.0_f64, |a, v| a.max(v.abs()));

    ode::run(
        opts.method,
        &sys,
        &plan,
        &mut y,
        |t, y| {
            let (x, m) = y.split_at(n * d);
            for v in x {
                max_opinion = max_opinion.max(v.abs());
            }
            for v in m {
                max_weight = max_weight.max(v.abs());
            }
            if let Some(i) = first_non_finite(y) {
                return Err(Error::Instability {
                    time: t,
                    detail: format!("non-finite state component {i}"),
                });
            }
            if conserve {
                let drift = (m.iter().sum::<f64>() - total0).abs();
                if drift > tol.mass_per_agent * n as f64 {
                    return Err(Error::Monitor {
                        monitor: "mass",
                        time: t,
                        detail: format!("total weight drifted by {drift:e}"),
                    });
                }
            }
            if positive {
                if let Some(i) = m.iter().position(|&v| v <= 0.0) {
                    return Err(Error::Monitor {
                        monitor: "positivity",
                        time: t,
                        detail: format!("weight of agent {i} is {}", m[i]),
                    });
                }
            }
            if let Some(c) = growth {
                let factor = (c * t).exp() * (1.0 + tol.growth_slack_micro);
                if let Some(i) = (0..n).find(|&i| m[i] > m0[i] * factor) {
                    return Err(Error::Monitor {
                        monitor: "growth",
                        time: t,
                        detail: format!("weight of agent {i} is {} > {}", m[i], m0[i] * factor),
                    });
                }
            }
            Ok(())
        },
        |t, y| {
            times.push(t);
            let mut e = AgentEnsemble {
                dim: d,
                positions: y[..n * d].to_vec(),
                weights: y[n * d..].to_vec(),
                time: t,
            };
            e.time = t;
            states.push(e);
        },
    )?;

    Ok(Trajectory {
        times,
        states,
        max_opinion,
        max_weight,
        steps: plan.total_steps(),
    })
}

/// Outcome of an indistinguishability comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Indistinguishability {
    /// All four conditions held; the largest deviation seen.
    Preserved { max_deviation: f64 },
    Violated {
        time: f64,
        index: usize,
        condition: &'static str,
        deviation: f64,
    },
}

impl Indistinguishability {
    pub fn is_preserved(&self) -> bool {
        matches!(self, Indistinguishability::Preserved { .. })
    }
}

/// Builds two initial states that agree except for how the weight is split
/// over `subset` (whose agents are first moved onto the position of
/// `subset[0]`), integrates both, and compares them at every sample.
///
/// The first state keeps the weights of `base`; the second redistributes the
/// total weight on `subset` in proportion to `split`.
pub fn indistinguishability_check(
    base: &AgentEnsemble,
    kernel: &InteractionKernel,
    law: &MassLaw,
    subset: &[usize],
    split: &[f64],
    opts: &MicroOptions,
) -> Result<Indistinguishability> {
    indistinguishability_runs(base, kernel, law, subset, split, opts).map(|r| r.verdict)
}

/// Verdict of [`indistinguishability_check`] together with both runs.
#[derive(Debug, Clone)]
pub struct IndistinguishabilityRuns {
    pub verdict: Indistinguishability,
    pub runs: [Trajectory; 2],
}

impl IndistinguishabilityRuns {
    /// Worst [`equal_position_drift`] of the two runs.
    pub fn equal_position_drift(&self) -> f64 {
        equal_position_drift(&self.runs[0]).max(equal_position_drift(&self.runs[1]))
    }
}

/// Same as [`indistinguishability_check`] but keeps the trajectories.
pub fn indistinguishability_runs(
    base: &AgentEnsemble,
    kernel: &InteractionKernel,
    law: &MassLaw,
    subset: &[usize],
    split: &[f64],
    opts: &MicroOptions,
) -> Result<IndistinguishabilityRuns> {
    let n = base.len();
    let d = base.dim;
    if subset.len() < 2 {
        return Err(Error::invalid("the index subset needs at least two agents"));
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= n) {
        return Err(Error::invalid(format!("index {bad} out of range for {n} agents")));
    }
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != subset.len() {
        return Err(Error::invalid("the index subset has repeated entries"));
    }
    if split.len() != subset.len() || split.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("split must give one non-negative share per subset index"));
    }
    let share: f64 = split.iter().sum();
    if share <= 0.0 {
        return Err(Error::invalid("split shares sum to zero"));
    }

    let mut a = base.clone();
    let anchor = base.position(subset[0]).to_vec();
    for &i in subset {
        a.positions[i * d..(i + 1) * d].copy_from_slice(&anchor);
    }
    let mut b = a.clone();
    let total: f64 = subset.iter().map(|&i| a.weights[i]).sum();
    for (&i, s) in subset.iter().zip(split) {
        b.weights[i] = total * s / share;
    }

    let (ta, tb) = rayon::join(
        || integrate(&a, kernel, law, opts),
        || integrate(&b, kernel, law, opts),
    );
    let (ta, tb) = (ta?, tb?);
    let tol = opts.tolerances.indistinguishability;
    let mut in_subset = vec![false; n];
    for &i in subset {
        in_subset[i] = true;
    }

    let verdict = compare(&ta, &tb, subset, &in_subset, tol);
    Ok(IndistinguishabilityRuns { verdict, runs: [ta, tb] })
}

fn compare(ta: &Trajectory, tb: &Trajectory, subset: &[usize], in_subset: &[bool], tol: f64) -> Indistinguishability {
    let n = in_subset.len();
    let mut worst = 0.0_f64;
    for ((t, sa), sb) in ta.times.iter().zip(&ta.states).zip(&tb.states) {
        let mut check = |dev: f64, index: usize, condition: &'static str| -> Option<Indistinguishability> {
            worst = worst.max(dev);
            (dev > tol).then_some(Indistinguishability::Violated {
                time: *t,
                index,
                condition,
                deviation: dev,
            })
        };
        for i in 0..n {
            let dev = max_diff(sa.position(i), sb.position(i));
            if let Some(v) = check(dev, i, "equal opinions") {
                return v;
            }
        }
        for &i in &subset[1..] {
            let dev = max_diff(sa.position(i), sa.position(subset[0]))
                .max(max_diff(sb.position(i), sb.position(subset[0])));
            if let Some(v) = check(dev, i, "subset stays together") {
                return v;
            }
        }
        for i in (0..n).filter(|&i| !in_subset[i]) {
            let dev = (sa.weights[i] - sb.weights[i]).abs();
            if let Some(v) = check(dev, i, "equal weights off the subset") {
                return v;
            }
        }
        let sum_a: f64 = subset.iter().map(|&i| sa.weights[i]).sum();
        let sum_b: f64 = subset.iter().map(|&i| sb.weights[i]).sum();
        if let Some(v) = check((sum_a - sum_b).abs(), subset[0], "equal subset weight") {
            return v;
        }
    }
    Indistinguishability::Preserved { max_deviation: worst }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Largest separation, over all samples, between agents that start at the
/// same position.
pub fn equal_position_drift(traj: &Trajectory) -> f64 {
    let first = &traj.states[0];
    let n = first.len();
    let mut pairs = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        first
            .position(i)
            .partial_cmp(first.position(j))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for w in order.windows(2) {
        if first.position(w[0]) == first.position(w[1]) {
            pairs.push((w[0], w[1]));
        }
    }
    let mut worst = 0.0_f64;
    for s in &traj.states {
        for &(i, j) in &pairs {
            worst = worst.max(max_diff(s.position(i), s.position(j)));
        }
    }
    worst
}

/// Relabeling or regrouping of an ensemble that must leave its empirical
/// measure unchanged.
#[derive(Debug, Clone, PartialEq)]
pub enum Relabeling {
    /// Agent `i` of the result is agent `perm[i]` of the input.
    Permutation(Vec<usize>),
    /// Each group of co-located agents hands its total weight to its first
    /// member; the others keep their position with zero weight.
    Grouping(Vec<Vec<usize>>),
}

/// Result of [`empirical_invariance_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceVerdict {
    pub transformed: AgentEnsemble,
    pub distance: f64,
}

impl InvarianceVerdict {
    pub fn is_invariant(&self) -> bool {
        self.distance == 0.0
    }
}

/// Applies `spec` and measures the W1 distance between the two empirical
/// measures.
pub fn empirical_invariance_check(ensemble: &AgentEnsemble, spec: &Relabeling) -> Result<InvarianceVerdict> {
    let transformed = relabel(ensemble, spec)?;
    let a = mean_field::empirical_measure(ensemble)?;
    let b = mean_field::empirical_measure(&transformed)?;
    let distance = mean_field::wasserstein1(&a, &b)?;
    Ok(InvarianceVerdict { transformed, distance })
}

/// Applies a relabeling or grouping to `ensemble`.
pub fn relabel(ensemble: &AgentEnsemble, spec: &Relabeling) -> Result<AgentEnsemble> {
    let n = ensemble.len();
    let d = ensemble.dim;
    match spec {
        Relabeling::Permutation(perm) => {
            let mut seen = vec![false; n];
            if perm.len() != n {
                return Err(Error::invalid(format!("permutation of length {} for {n} agents", perm.len())));
            }
            for &p in perm {
                if p >= n || std::mem::replace(&mut seen[p], true) {
                    return Err(Error::invalid("not a permutation"));
                }
            }
            let mut out = ensemble.clone();
            for (i, &p) in perm.iter().enumerate() {
                out.positions[i * d..(i + 1) * d].copy_from_slice(ensemble.position(p));
                out.weights[i] = ensemble.weights[p];
            }
            Ok(out)
        }
        Relabeling::Grouping(groups) => {
            let mut used = vec![false; n];
            let mut out = ensemble.clone();
            for g in groups {
                let Some(&head) = g.first() else {
                    return Err(Error::invalid("empty group"));
                };
                for &i in g {
                    if i >= n || std::mem::replace(&mut used[i], true) {
                        return Err(Error::invalid(format!("group member {i} out of range or repeated")));
                    }
                    if ensemble.position(i) != ensemble.position(head) {
                        return Err(Error::invalid(format!(
                            "agents {head} and {i} are not co-located and cannot be grouped"
                        )));
                    }
                }
                let mut masses: Vec<f64> = g.iter().map(|&i| ensemble.weights[i]).collect();
                let total = ParticleMeasure::canonical_sum(&mut masses);
                for &i in g {
                    out.weights[i] = 0.0;
                }
                out.weights[head] = total;
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mass::{LeaderFollower, SourceKernel};
    use approx::assert_abs_diff_eq;

    fn ens(x: &[f64], m: &[f64]) -> AgentEnsemble {
        AgentEnsemble::new(1, x.to_vec(), m.to_vec()).unwrap()
    }

    #[test]
    fn rhs_hand_cases() {
        let (dx, dm) = rhs_micro(&ens(&[0.0, 1.0], &[1.0, 1.0]), &InteractionKernel::Linear, &MassLaw::Zero).unwrap();
        assert_eq!(dx, vec![0.5, -0.5]);
        assert_eq!(dm, vec![0.0, 0.0]);

        let (dx, _) = rhs_micro(
            &ens(&[0.3; 4], &[1.0, 2.0, 0.1, 4.0]),
            &InteractionKernel::RationalRadial,
            &MassLaw::Zero,
        )
        .unwrap();
        assert!(dx.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn reduces_to_unweighted_model() {
        let x = [0.0, 0.2, 0.7, 1.5];
        let (dx, _) = rhs_micro(&ens(&x, &[1.0; 4]), &InteractionKernel::RationalRadial, &MassLaw::Zero).unwrap();
        for i in 0..4 {
            let expect: f64 = x.iter().map(|xj| {
                let y = xj - x[i];
                y / (1.0 + y * y)
            }).sum::<f64>() / 4.0;
            assert_abs_diff_eq!(dx[i], expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn non_finite_rate_names_agent() {
        let k = InteractionKernel::custom("bad", 1, None, |y, o| o[0] = if y[0] > 0.5 { f64::NAN } else { 0.0 }).unwrap();
        let err = rhs_micro(&ens(&[0.0, 0.1, 1.0], &[1.0; 3]), &k, &MassLaw::Zero).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 0, .. }), "{err}");
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let e = ens(&[0.0, 1.0], &[1.0, 1.0]);
        let t = integrate(&e, &InteractionKernel::Linear, &MassLaw::Zero, &MicroOptions::new(0.0, 1e-3)).unwrap();
        assert_eq!(t.times, vec![0.0]);
        assert_eq!(t.states[0].positions, e.positions);
        assert_eq!(t.states[0].weights, e.weights);
    }

    #[test]
    fn linear_consensus_matches_closed_form() {
        // φ(y) = y, unit weights: x_i − x̄ decays like e^{−t}.
        let e = ens(&[0.0, 1.0, 2.0], &[1.0; 3]);
        let t = integrate(&e, &InteractionKernel::Linear, &MassLaw::Zero, &MicroOptions::new(1.0, 1e-3)).unwrap();
        let last = t.last();
        assert_abs_diff_eq!(last.positions[0], 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
        assert_eq!(t.times.len(), 51);
    }

    #[test]
    fn budget_error() {
        let e = ens(&[0.0, 1.0], &[1.0, 1.0]);
        let mut opts = MicroOptions::new(1.0, 1e-3);
        opts.tolerances.step_budget = 10;
        assert!(matches!(
            integrate(&e, &InteractionKernel::Linear, &MassLaw::Zero, &opts),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn mass_monitor_aborts_on_leaky_law() {
        let leak = MassLaw::Custom(crate::mass::CustomLaw::new("leak", true, true, |_, _, m, _, o| {
            for (o, m) in o.iter_mut().zip(m) {
                *o = -0.1 * m;
            }
        }));
        let e = ens(&[0.0, 1.0], &[1.0, 1.0]);
        let err = integrate(&e, &InteractionKernel::Linear, &leak, &MicroOptions::new(1.0, 1e-3)).unwrap_err();
        assert!(matches!(err, Error::Monitor { monitor: "mass", .. }), "{err}");
        assert!(err.is_runtime_failure());
    }

    #[test]
    fn leader_follower_breaks_indistinguishability() {
        let x: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin().powi(2)).collect();
        let e = ens(&x, &[1.0; 10]);
        let law = MassLaw::LeaderFollower(LeaderFollower::new(1, 0.2, 5.0).unwrap());
        let opts = MicroOptions::new(1.0, 1e-3);
        let v = indistinguishability_check(&e, &InteractionKernel::RationalRadial, &law, &[0, 5], &[1.0, 0.0], &opts).unwrap();
        assert!(!v.is_preserved(), "{v:?}");

        let law = MassLaw::psi_sk(SourceKernel::GroupInfluence(InteractionKernel::RationalRadial));
        let v = indistinguishability_check(&e, &InteractionKernel::RationalRadial, &law, &[0, 5], &[1.0, 0.0], &opts).unwrap();
        assert!(v.is_preserved(), "{v:?}");
    }

    #[test]
    fn subset_validation() {
        let e = ens(&[0.0, 1.0], &[1.0, 1.0]);
        let opts = MicroOptions::new(0.1, 1e-2);
        let k = InteractionKernel::Linear;
        assert!(indistinguishability_check(&e, &k, &MassLaw::Zero, &[0], &[1.0], &opts).is_err());
        assert!(indistinguishability_check(&e, &k, &MassLaw::Zero, &[0, 2], &[1.0, 1.0], &opts).is_err());
        assert!(indistinguishability_check(&e, &k, &MassLaw::Zero, &[0, 0], &[1.0, 1.0], &opts).is_err());
    }

    #[test]
    fn figure_one_measures_coincide() {
        let a = ens(&[0.5, 0.5, 1.5, 2.5, 3.0], &[1.5, 0.5, 1.25, 0.75, 1.0]);
        let b = ens(&[0.5, 0.5, 3.0, 2.5, 1.5], &[1.25, 0.75, 1.0, 0.75, 1.25]);
        let ma = mean_field::empirical_measure(&a).unwrap();
        let mb = mean_field::empirical_measure(&b).unwrap();
        assert_eq!(mean_field::wasserstein1(&ma, &mb).unwrap(), 0.0);
        let g = empirical_invariance_check(&a, &Relabeling::Grouping(vec![vec![0, 1]])).unwrap();
        assert!(g.is_invariant());
        assert_eq!(g.transformed.weights[0], 2.0);
        let p = empirical_invariance_check(&a, &Relabeling::Permutation(vec![4, 2, 3, 1, 0])).unwrap();
        assert!(p.is_invariant());
        assert!(empirical_invariance_check(&a, &Relabeling::Grouping(vec![vec![0, 2]])).is_err());
    }

    #[test]
    fn csv_layout() {
        let e = ens(&[0.0, 1.0], &[1.0, 1.0]);
        let t = integrate(&e, &InteractionKernel::Linear, &MassLaw::Zero, &MicroOptions::new(0.1, 1e-2).sampling(Sampling::Uniform(2))).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x_1,x_2,m_1,m_2");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.0000000000000000e0,"));
    }
}
