//! Weight dynamics `ψ`.
//!
//! All laws are evaluated on a grid of cells `(x_i, m_i)` together with
//! quadrature weights `w_i` for the index interval (`w_i = 1/N` for the
//! microscopic system and the grid-aligned graph solver). With uniform weights
//! the cell value is exactly the discretised rate `ψ_i^(N)`, since every
//! shipped law is constant on each cell of a piecewise-constant state.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernels::{halton, probe_pair, BoundingBox, InteractionKernel};
use crate::par;

/// Direct k-fold sums cost `N^(k+1)` kernel evaluations; refuse beyond this.
pub const DEFAULT_COST_CAP: u64 = 200_000_000;

type SourceFn = dyn Fn(&[&[f64]]) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct CustomSource {
    pub name: String,
    pub order: usize,
    /// Declared argument pair `(i, j)` under which `S` is antisymmetric.
    pub skew_pair: Option<(usize, usize)>,
    /// Declared `S̄ = sup |S|`.
    pub bound: Option<f64>,
    f: Arc<SourceFn>,
}

impl CustomSource {
    pub fn new(
        name: impl Into<String>,
        order: usize,
        skew_pair: Option<(usize, usize)>,
        bound: Option<f64>,
        f: impl Fn(&[&[f64]]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("source kernel order must be at least 1"));
        }
        if let Some((i, j)) = skew_pair {
            if i == j || i > order || j > order {
                return Err(Error::invalid(format!(
                    "skew pair ({i}, {j}) invalid for order {order}"
                )));
            }
        }
        Ok(CustomSource {
            name: name.into(),
            order,
            skew_pair,
            bound,
            f: Arc::new(f),
        })
    }
}

impl fmt::Debug for CustomSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSource")
            .field("name", &self.name)
            .field("order", &self.order)
            .field("skew_pair", &self.skew_pair)
            .finish()
    }
}

/// Kernel `S : (R^d)^(k+1) → R` of the indistinguishability-preserving
/// weight dynamics `ψ(s) = m(s) ∫ m(s_1)…m(s_k) S(x(s), x(s_1), …, x(s_k))`.
#[derive(Debug, Clone)]
pub enum SourceKernel {
    Zero { order: usize },
    /// Order 2: `S(y0, y1, y2) = ‖φ(y1 − y2)‖ − ‖φ(y0 − y2)‖`, antisymmetric
    /// in `(y0, y1)`.
    GroupInfluence(InteractionKernel),
    /// Order 1: `S(y0, y1) = gain · tanh(Σ_c (y1_c − y0_c))`.
    PairTanh { gain: f64 },
    Custom(CustomSource),
}

impl SourceKernel {
    pub fn order(&self) -> usize {
        match self {
            SourceKernel::Zero { order } => *order,
            SourceKernel::GroupInfluence(_) => 2,
            SourceKernel::PairTanh { .. } => 1,
            SourceKernel::Custom(c) => c.order,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            SourceKernel::Zero { .. } => "zero",
            SourceKernel::GroupInfluence(_) => "group_influence",
            SourceKernel::PairTanh { .. } => "pair_tanh",
            SourceKernel::Custom(c) => &c.name,
        }
    }

    pub fn skew_pair(&self) -> Option<(usize, usize)> {
        match self {
            SourceKernel::Zero { .. } => Some((0, 1)),
            SourceKernel::GroupInfluence(_) | SourceKernel::PairTanh { .. } => Some((0, 1)),
            SourceKernel::Custom(c) => c.skew_pair,
        }
    }

    /// `S̄`, when known.
    pub fn bound(&self) -> Option<f64> {
        match self {
            SourceKernel::Zero { .. } => Some(0.0),
            SourceKernel::GroupInfluence(phi) => phi.sup_norm(),
            SourceKernel::PairTanh { gain } => Some(gain.abs()),
            SourceKernel::Custom(c) => c.bound,
        }
    }

    /// `S(points[0], …, points[k])`.
    pub fn eval(&self, points: &[&[f64]]) -> f64 {
        match self {
            SourceKernel::Zero { .. } => 0.0,
            SourceKernel::GroupInfluence(phi) => {
                let d = points[0].len();
                let mut buf = [0.0; 8];
                if d <= 8 {
                    let y = &mut buf[..d];
                    for c in 0..d {
                        y[c] = points[1][c] - points[2][c];
                    }
                    let a = phi.phi_norm(y);
                    for c in 0..d {
                        y[c] = points[0][c] - points[2][c];
                    }
                    a - phi.phi_norm(y)
                } else {
                    let y1: Vec<f64> = (0..d).map(|c| points[1][c] - points[2][c]).collect();
                    let y0: Vec<f64> = (0..d).map(|c| points[0][c] - points[2][c]).collect();
                    phi.phi_norm(&y1) - phi.phi_norm(&y0)
                }
            }
            SourceKernel::PairTanh { gain } => {
                let s: f64 = points[1].iter().zip(points[0]).map(|(a, b)| a - b).sum();
                gain * s.tanh()
            }
            SourceKernel::Custom(c) => (c.f)(points),
        }
    }

    /// `σ(x) = ∫ S(x, y_1, …, y_k) dν(y_1)…dν(y_k)` for the discrete measure
    /// `ν = Σ_j c_j δ_{y_j}`, by direct k-fold summation.
    pub fn integrate_direct(&self, dim: usize, x: &[f64], locs: &[f64], coef: &[f64]) -> f64 {
        let k = self.order();
        let n = coef.len();
        if n == 0 {
            return 0.0;
        }
        let mut idx = vec![0usize; k];
        let mut pts: Vec<&[f64]> = vec![x; k + 1];
        let mut total = 0.0;
        loop {
            let mut c = 1.0;
            for (slot, &j) in idx.iter().enumerate() {
                c *= coef[j];
                pts[slot + 1] = &locs[j * dim..(j + 1) * dim];
            }
            if c != 0.0 {
                total += c * self.eval(&pts);
            }
            // Odometer increment, last index fastest.
            let mut pos = k;
            loop {
                if pos == 0 {
                    return total;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < n {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    /// `σ` at every support point of `ν`. Uses the `O(n²)` factorisation
    /// `σ(x) = E − M e(x)` for the group-influence kernel and direct
    /// summation (subject to `cost_cap`) otherwise.
    pub fn integrate_at_support(&self, dim: usize, locs: &[f64], coef: &[f64], cost_cap: u64) -> Result<Vec<f64>> {
        let n = coef.len();
        let mut out = vec![0.0; n];
        match self {
            SourceKernel::Zero { .. } => {}
            SourceKernel::GroupInfluence(phi) => {
                let e = influence_sums(phi, dim, locs, coef);
                let mass: f64 = coef.iter().sum();
                let total: f64 = coef.iter().zip(&e).map(|(c, e)| c * e).sum();
                for (o, ei) in out.iter_mut().zip(&e) {
                    *o = total - mass * ei;
                }
            }
            _ => {
                let cost = (n as u64).saturating_pow(self.order() as u32 + 1);
                if cost > cost_cap {
                    return Err(Error::Budget(format!(
                        "direct {}-fold source sum over {n} points needs {cost} evaluations (cap {cost_cap})",
                        self.order()
                    )));
                }
                par::fill(&mut out, |i| {
                    self.integrate_direct(dim, &locs[i * dim..(i + 1) * dim], locs, coef)
                });
            }
        }
        Ok(out)
    }
}

/// `e_i = Σ_j c_j ‖φ(x_i − x_j)‖`.
pub(crate) fn influence_sums(phi: &InteractionKernel, dim: usize, locs: &[f64], coef: &[f64]) -> Vec<f64> {
    let n = coef.len();
    let mut e = vec![0.0; n];
    if dim == 1 {
        par::fill(&mut e, |i| {
            let xi = locs[i];
            let mut acc = 0.0;
            for j in 0..n {
                acc += coef[j] * phi.phi_scalar(xi - locs[j]).abs();
            }
            acc
        });
    } else {
        par::fill(&mut e, |i| {
            let xi = &locs[i * dim..(i + 1) * dim];
            let mut y = vec![0.0; dim];
            let mut acc = 0.0;
            for j in 0..n {
                for c in 0..dim {
                    y[c] = xi[c] - locs[j * dim + c];
                }
                acc += coef[j] * phi.phi_norm(&y);
            }
            acc
        });
    }
    e
}

/// Leader/follower exchange inside `groups` equal blocks of the index
/// interval; the first `leader_fraction` of each block are leaders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderFollower {
    pub groups: usize,
    pub leader_fraction: f64,
    pub gain: f64,
}

impl LeaderFollower {
    pub fn new(groups: usize, leader_fraction: f64, gain: f64) -> Result<Self> {
        if groups == 0 {
            return Err(Error::config("leader_follower needs at least one group"));
        }
        if !(leader_fraction > 0.0 && leader_fraction < 1.0) {
            return Err(Error::config(format!(
                "leader fraction must lie in (0, 1), got {leader_fraction}"
            )));
        }
        if !(gain.is_finite() && gain > 0.0) {
            return Err(Error::config(format!("gain must be positive, got {gain}")));
        }
        Ok(LeaderFollower {
            groups,
            leader_fraction,
            gain,
        })
    }

    /// `(cells per group, leaders per group)`, if `cells` is compatible.
    pub fn partition(&self, cells: usize) -> Result<(usize, usize)> {
        if cells % self.groups != 0 {
            return Err(Error::config(format!(
                "{cells} cells do not split into {} groups",
                self.groups
            )));
        }
        let per_group = cells / self.groups;
        let leaders = self.leader_fraction * per_group as f64;
        let rounded = leaders.round();
        if (leaders - rounded).abs() > 1e-9 || rounded < 1.0 || rounded as usize >= per_group {
            return Err(Error::config(format!(
                "leader fraction {} of {per_group} cells per group is not a whole number of leaders",
                self.leader_fraction
            )));
        }
        Ok((per_group, rounded as usize))
    }

    pub fn is_leader(&self, cell: usize, cells: usize) -> Result<bool> {
        let (per_group, leaders) = self.partition(cells)?;
        Ok(cell % per_group < leaders)
    }
}

type LawFn = dyn Fn(usize, &[f64], &[f64], &[f64], &mut [f64]) + Send + Sync;

/// Weight dynamics supplied as a closure `(dim, x, m, w, out)`.
#[derive(Clone)]
pub struct CustomLaw {
    pub name: String,
    pub conservative: bool,
    pub preserves_indistinguishability: bool,
    f: Arc<LawFn>,
}

impl CustomLaw {
    pub fn new(
        name: impl Into<String>,
        conservative: bool,
        preserves_indistinguishability: bool,
        f: impl Fn(usize, &[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        CustomLaw {
            name: name.into(),
            conservative,
            preserves_indistinguishability,
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for CustomLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLaw").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum MassLaw {
    /// Constant weights; with unit weights this is the Hegselmann–Krause model.
    Zero,
    /// `ψ_{S,k}` evaluated by direct k-fold summation.
    PsiSk { kernel: SourceKernel, cost_cap: u64 },
    /// Less-influenced agents gain weight:
    /// `ψ_i = m_i (ē − e_i)`, `e_i = Σ_j w_j m_j ‖φ(x_i − x_j)‖`,
    /// `ē = Σ_k w_k m_k e_k`.
    GroupInfluence { kernel: InteractionKernel },
    LeaderFollower(LeaderFollower),
    Custom(CustomLaw),
}

impl MassLaw {
    pub fn psi_sk(kernel: SourceKernel) -> Self {
        MassLaw::PsiSk {
            kernel,
            cost_cap: DEFAULT_COST_CAP,
        }
    }

    pub fn group_influence(kernel: InteractionKernel) -> Self {
        MassLaw::GroupInfluence { kernel }
    }

    pub fn leader_follower(groups: usize, leader_fraction: f64, gain: f64) -> Result<Self> {
        Ok(MassLaw::LeaderFollower(LeaderFollower::new(
            groups,
            leader_fraction,
            gain,
        )?))
    }

    pub fn name(&self) -> &str {
        match self {
            MassLaw::Zero => "zero",
            MassLaw::PsiSk { .. } => "psi_sk",
            MassLaw::GroupInfluence { .. } => "group_influence",
            MassLaw::LeaderFollower(_) => "leader_follower",
            MassLaw::Custom(c) => &c.name,
        }
    }

    /// Total weight is invariant under the dynamics for every state.
    pub fn is_conservative(&self) -> bool {
        match self {
            MassLaw::Zero | MassLaw::LeaderFollower(_) => true,
            MassLaw::GroupInfluence { .. } => false,
            MassLaw::PsiSk { kernel, .. } => kernel.skew_pair().is_some(),
            MassLaw::Custom(c) => c.conservative,
        }
    }

    /// Whether total weight is invariant starting from mean weight
    /// `mean_weight`. The group-influence law moves total weight by
    /// `ē (M − 1)` and is conservative only at unit mean weight.
    pub fn conserves_at(&self, mean_weight: f64) -> bool {
        match self {
            MassLaw::GroupInfluence { .. } => (mean_weight - 1.0).abs() <= 1e-8,
            other => other.is_conservative(),
        }
    }

    /// The `ψ_{S,k}` family (and the trivial law): positivity, growth bounds
    /// and indistinguishability hold.
    pub fn is_psi_sk_class(&self) -> bool {
        matches!(
            self,
            MassLaw::Zero | MassLaw::PsiSk { .. } | MassLaw::GroupInfluence { .. }
        )
    }

    pub fn preserves_indistinguishability(&self) -> bool {
        match self {
            MassLaw::Custom(c) => c.preserves_indistinguishability,
            other => other.is_psi_sk_class(),
        }
    }

    /// The kernel `S` whose mean-field source term matches this law.
    pub fn source_kernel(&self) -> Option<SourceKernel> {
        match self {
            MassLaw::Zero => Some(SourceKernel::Zero { order: 1 }),
            MassLaw::PsiSk { kernel, .. } => Some(kernel.clone()),
            MassLaw::GroupInfluence { kernel } => Some(SourceKernel::GroupInfluence(kernel.clone())),
            _ => None,
        }
    }

    /// Rate constant `c` in `m(t) ≤ m(0) e^{c t}`, given the mean weight
    /// `M₀ = ∫ m₀`.
    pub fn growth_rate(&self, mean_weight: f64) -> Option<f64> {
        match self {
            MassLaw::Zero => Some(0.0),
            MassLaw::PsiSk { kernel, .. } => kernel
                .bound()
                .map(|b| mean_weight.abs().powi(kernel.order() as i32) * b),
            MassLaw::GroupInfluence { kernel } => kernel
                .sup_norm()
                .map(|b| b * mean_weight.abs().max(mean_weight * mean_weight)),
            _ => None,
        }
    }

    /// Bound on `|ψ(s)| / m(s)`, used by the explicit stability guard.
    pub fn rate_bound(&self, mean_weight: f64) -> Option<f64> {
        match self {
            MassLaw::LeaderFollower(lf) => Some(lf.gain * mean_weight.abs()),
            MassLaw::Custom(_) => None,
            other => other.growth_rate(mean_weight),
        }
    }

    /// Pre-flight check that the law can be discretised on `cells` cells.
    pub fn validate_grid(&self, cells: usize) -> Result<()> {
        match self {
            MassLaw::LeaderFollower(lf) => lf.partition(cells).map(|_| ()),
            MassLaw::PsiSk { kernel, cost_cap } => {
                let cost = (cells as u64).saturating_pow(kernel.order() as u32 + 1);
                if cost > *cost_cap && !matches!(kernel, SourceKernel::Zero { .. }) {
                    return Err(Error::Budget(format!(
                        "psi_sk of order {} on {cells} cells needs {cost} evaluations per step (cap {cost_cap})",
                        kernel.order()
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Writes `ψ` at every cell into `out`.
    ///
    /// `x` is cell-major with `dim` components, `m` and `w` hold one entry per
    /// cell, `w` being the quadrature weights of the index interval.
    pub fn rates(&self, dim: usize, x: &[f64], m: &[f64], w: &[f64], out: &mut [f64]) -> Result<()> {
        let n = m.len();
        debug_assert!(x.len() == n * dim && w.len() == n && out.len() == n);
        match self {
            MassLaw::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            MassLaw::PsiSk { kernel, cost_cap } => {
                let coef: Vec<f64> = w.iter().zip(m).map(|(w, m)| w * m).collect();
                let cost = (n as u64).saturating_pow(kernel.order() as u32 + 1);
                if cost > *cost_cap && !matches!(kernel, SourceKernel::Zero { .. }) {
                    return Err(Error::Budget(format!(
                        "direct {}-fold sum over {n} cells needs {cost} evaluations (cap {cost_cap})",
                        kernel.order()
                    )));
                }
                par::fill(out, |i| {
                    if m[i] == 0.0 {
                        return 0.0;
                    }
                    m[i] * kernel.integrate_direct(dim, &x[i * dim..(i + 1) * dim], x, &coef)
                });
            }
            MassLaw::GroupInfluence { kernel } => {
                let coef: Vec<f64> = w.iter().zip(m).map(|(w, m)| w * m).collect();
                let e = influence_sums(kernel, dim, x, &coef);
                let mean: f64 = coef.iter().zip(&e).map(|(c, e)| c * e).sum();
                for i in 0..n {
                    out[i] = m[i] * (mean - e[i]);
                }
            }
            MassLaw::LeaderFollower(lf) => {
                let (per_group, leaders) = lf.partition(n)?;
                for g in 0..lf.groups {
                    let block = g * per_group..(g + 1) * per_group;
                    let split = block.start + leaders;
                    let lead: f64 = (block.start..split).map(|j| w[j] * m[j]).sum();
                    let follow: f64 = (split..block.end).map(|j| w[j] * m[j]).sum();
                    for i in block.start..split {
                        out[i] = lf.gain * m[i] * follow;
                    }
                    for i in split..block.end {
                        out[i] = -lf.gain * m[i] * lead;
                    }
                }
            }
            MassLaw::Custom(c) => (c.f)(dim, x, m, w, out),
        }
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "weight rate",
                index: i,
            });
        }
        Ok(())
    }
}

fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check_pair(x: &GridFunction, m: &GridFunction) -> Result<()> {
    if m.dim() != 1 {
        return Err(Error::invalid("weight field must be scalar"));
    }
    if x.cells() != m.cells() {
        return Err(Error::invalid(format!(
            "opinion and weight fields on different grids ({} vs {} cells)",
            x.cells(),
            m.cells()
        )));
    }
    Ok(())
}

/// `ψ_{S,k}(s, x, m)` at the cell containing `s`, for piecewise-constant
/// `x`, `m` (the k-fold integral is exactly a k-fold sum with weights `1/N`).
pub fn eval_psi_sk(kernel: &SourceKernel, s: f64, x: &GridFunction, m: &GridFunction) -> Result<f64> {
    check_pair(x, m)?;
    let n = m.cells();
    let cost = (n as u64).saturating_pow(kernel.order() as u32 + 1);
    if cost > DEFAULT_COST_CAP {
        return Err(Error::Budget(format!(
            "direct {}-fold sum over {n} cells exceeds the evaluation cap",
            kernel.order()
        )));
    }
    let i = m.cell_of(s);
    let mi = m.values()[i];
    if mi == 0.0 {
        return Ok(0.0);
    }
    let coef: Vec<f64> = m.values().iter().map(|v| v / n as f64).collect();
    Ok(mi * kernel.integrate_direct(x.dim(), x.cell(i), x.values(), &coef))
}

/// Group-influence rates on a uniform grid.
pub fn eval_group_influence(phi: &InteractionKernel, x: &GridFunction, m: &GridFunction) -> Result<Vec<f64>> {
    discretize_mass_law(&MassLaw::group_influence(phi.clone()), x, m)
}

/// Leader/follower rates on a uniform grid.
pub fn eval_leader_follower(lf: &LeaderFollower, x: &GridFunction, m: &GridFunction) -> Result<Vec<f64>> {
    discretize_mass_law(&MassLaw::LeaderFollower(*lf), x, m)
}

/// `ψ_i^(N) = N ∫_{cell i} ψ(s, x_N, m_N) ds` for piecewise-constant fields.
pub fn discretize_mass_law(law: &MassLaw, x: &GridFunction, m: &GridFunction) -> Result<Vec<f64>> {
    check_pair(x, m)?;
    let n = m.cells();
    law.validate_grid(n)?;
    let mut out = vec![0.0; n];
    law.rates(x.dim(), x.values(), m.values(), &uniform_weights(n), &mut out)?;
    Ok(out)
}

/// Sampling-based estimates of the constants in the weight-dynamics
/// hypotheses. Estimates, not certificates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HypothesisReport {
    /// Declared antisymmetry of `S` held on every sample (vacuous for laws
    /// without a kernel `S`).
    pub skew_ok: bool,
    /// Arguments `(y_0, …, y_k)` flattened, where antisymmetry failed.
    pub skew_witness: Option<Vec<f64>>,
    /// Largest `|S|` seen.
    pub bound_estimate: f64,
    /// Largest `|S(y) − S(z)| / Σ ‖y_i − z_i‖` seen.
    pub lipschitz_estimate: f64,
    /// Largest `|ψ_i| / (1 + max m)` over sampled grid states.
    pub sublinearity_estimate: f64,
    pub violations: Vec<String>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.skew_ok && self.violations.is_empty()
    }
}

/// Probes `law` with `samples` deterministic samples in `bbox`.
pub fn probe_hypotheses(law: &MassLaw, bbox: &BoundingBox, samples: usize) -> Result<HypothesisReport> {
    if samples < 2 {
        return Err(Error::invalid("hypothesis probe needs at least two samples"));
    }
    let d = bbox.dim();
    let mut report = HypothesisReport {
        skew_ok: true,
        ..Default::default()
    };

    if let Some(kernel) = law.source_kernel() {
        let k = kernel.order();
        let arity = k + 1;
        // Product box (R^d)^(k+1).
        let lo: Vec<f64> = (0..arity).flat_map(|_| bbox.lo.iter().copied()).collect();
        let hi: Vec<f64> = (0..arity).flat_map(|_| bbox.hi.iter().copied()).collect();
        let product = BoundingBox::new(lo, hi)?;
        let (mut y, mut z) = (vec![0.0; arity * d], vec![0.0; arity * d]);
        let pair = kernel.skew_pair();
        if pair.is_none() {
            report.skew_ok = false;
            report
                .violations
                .push(format!("kernel `{}` declares no antisymmetric pair", kernel.name()));
        }
        for i in 0..samples as u64 {
            probe_pair(&product, i, &mut y, &mut z);
            let sy = eval_flat(&kernel, &y, d);
            let sz = eval_flat(&kernel, &z, d);
            report.bound_estimate = report.bound_estimate.max(sy.abs());
            let dist: f64 = y
                .chunks(d)
                .zip(z.chunks(d))
                .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
                .sum();
            if dist > 0.0 {
                report.lipschitz_estimate = report.lipschitz_estimate.max((sy - sz).abs() / dist);
            }
            if let Some((a, b)) = pair {
                let mut swapped = y.clone();
                for c in 0..d {
                    swapped.swap(a * d + c, b * d + c);
                }
                let residual = sy + eval_flat(&kernel, &swapped, d);
                if residual.abs() > 1e-12 && report.skew_ok {
                    report.skew_ok = false;
                    report.skew_witness = Some(y.clone());
                    report.violations.push(format!(
                        "S not antisymmetric in arguments ({a}, {b}): residual {residual:e}"
                    ));
                }
            }
        }
        if let Some(declared) = kernel.bound() {
            if report.bound_estimate > declared * (1.0 + 1e-12) + 1e-15 {
                report.violations.push(format!(
                    "|S| reached {} above the declared bound {declared}",
                    report.bound_estimate
                ));
            }
        }
    }

    // Sublinear growth on small grid states.
    const CELLS: usize = 8;
    let w = uniform_weights(CELLS);
    let mut x = vec![0.0; CELLS * d];
    let mut m = vec![0.0; CELLS];
    let mut out = vec![0.0; CELLS];
    let mut unit = vec![0.0; d + 1];
    let states = samples.div_ceil(CELLS).max(1);
    for st in 0..states {
        for c in 0..CELLS {
            halton((st * CELLS + c) as u64, 2 * d + 8, &mut unit);
            bbox.place(&unit[..d], &mut x[c * d..(c + 1) * d]);
            m[c] = 2.0 * unit[d];
        }
        if law.validate_grid(CELLS).is_err() {
            break;
        }
        law.rates(d, &x, &m, &w, &mut out)?;
        let mmax = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let rmax = out.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        report.sublinearity_estimate = report.sublinearity_estimate.max(rmax / (1.0 + mmax));
    }
    Ok(report)
}

fn eval_flat(kernel: &SourceKernel, flat: &[f64], d: usize) -> f64 {
    let pts: Vec<&[f64]> = flat.chunks(d).collect();
    kernel.eval(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(v: &[f64]) -> GridFunction {
        GridFunction::scalar(v.to_vec()).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_rate() {
        let x = grid(&[0.0, 0.3, 0.9]);
        let m = grid(&[0.0, 0.0, 0.0]);
        let k = SourceKernel::GroupInfluence(InteractionKernel::Linear);
        for s in [0.1, 0.5, 0.9] {
            assert_eq!(eval_psi_sk(&k, s, &x, &m).unwrap(), 0.0);
        }
    }

    #[test]
    fn group_influence_hand_cases() {
        let phi = InteractionKernel::Linear;
        let r = eval_group_influence(&phi, &grid(&[0.0, 1.0]), &grid(&[1.0, 1.0])).unwrap();
        assert_eq!(r, vec![0.0, 0.0]);

        let r = eval_group_influence(&phi, &grid(&[0.0, 0.0, 1.0]), &grid(&[1.0, 1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(r[0], 1.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], 1.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r[2], -2.0 / 9.0, epsilon = 1e-15);
        assert!(r.iter().sum::<f64>().abs() < 1e-15);

        let same = eval_group_influence(&phi, &grid(&[0.4; 5]), &grid(&[1.0, 2.0, 0.5, 1.0, 0.5])).unwrap();
        assert!(same.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn leader_follower_hand_cases() {
        let lf = LeaderFollower::new(1, 0.5, 5.0).unwrap();
        let r = eval_leader_follower(&lf, &grid(&[0.0, 1.0]), &grid(&[1.0, 1.0])).unwrap();
        assert_eq!(r, vec![2.5, -2.5]);

        // Leaders with zero weight: followers frozen, leaders non-negative.
        let lf = LeaderFollower::new(2, 0.25, 3.0).unwrap();
        let m = grid(&[0.0, 1.0, 2.0, 0.5, 0.0, 0.3, 0.2, 0.1]);
        let r = eval_leader_follower(&lf, &grid(&[0.0; 8]), &m).unwrap();
        assert_eq!(r[0], 0.0);
        assert_eq!(&r[1..4], &[0.0, 0.0, 0.0]);
        assert_eq!(r[4], 0.0);
        assert!(r[5..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn leader_follower_partition_must_be_whole() {
        let lf = LeaderFollower::new(1, 0.1, 5.0).unwrap();
        assert!(lf.partition(20).is_ok());
        assert!(matches!(lf.partition(15), Err(Error::Config(_))));
        let lf2 = LeaderFollower::new(2, 0.1, 5.0).unwrap();
        assert!(lf2.partition(21).is_err());
        assert_eq!(lf2.partition(20).unwrap(), (10, 1));
        assert!(lf2.is_leader(10, 20).unwrap());
        assert!(!lf2.is_leader(11, 20).unwrap());
    }

    #[test]
    fn constant_kernel_is_not_skew() {
        let s = CustomSource::new("one", 1, Some((0, 1)), Some(1.0), |_| 1.0).unwrap();
        let law = MassLaw::psi_sk(SourceKernel::Custom(s));
        let report = probe_hypotheses(&law, &BoundingBox::interval(0.0, 1.0).unwrap(), 16).unwrap();
        assert!(!report.skew_ok);
        assert!(report.skew_witness.is_some());
    }

    #[test]
    fn zero_law_probes_clean() {
        let r = probe_hypotheses(&MassLaw::Zero, &BoundingBox::interval(-1.0, 1.0).unwrap(), 64).unwrap();
        assert!(r.passed());
        assert_eq!(r.bound_estimate, 0.0);
        assert_eq!(r.lipschitz_estimate, 0.0);
        assert_eq!(r.sublinearity_estimate, 0.0);
    }

    #[test]
    fn group_influence_bound_estimate() {
        let phi = InteractionKernel::compact_sine(0.2).unwrap();
        let bbox = BoundingBox::interval(0.0, 1.0).unwrap();
        let r = probe_hypotheses(&MassLaw::group_influence(phi.clone()), &bbox, 2000).unwrap();
        assert!(r.passed(), "{r:?}");
        // Triangle-inequality oracle: |S| ≤ 2 max ‖φ‖ over the sampled box.
        let max_phi = (0..=10_000)
            .map(|i| phi.phi_scalar(-1.0 + 2.0 * i as f64 / 10_000.0).abs())
            .fold(0.0, f64::max);
        assert!(r.bound_estimate <= 2.0 * max_phi);
        assert!(r.bound_estimate > 0.5);
    }

    #[test]
    fn pair_kernel_matches_example_display() {
        // k = 1: ψ_i = (1/N) m_i Σ_j m_j S(x_i, x_j).
        let s = SourceKernel::PairTanh { gain: 0.7 };
        let x = grid(&[0.1, 0.5, -0.3, 0.8]);
        let m = grid(&[1.0, 0.5, 2.0, 0.5]);
        let law = MassLaw::psi_sk(s.clone());
        let rates = discretize_mass_law(&law, &x, &m).unwrap();
        for i in 0..4 {
            let mut acc = 0.0;
            for j in 0..4 {
                acc += m.values()[j] * s.eval(&[x.cell(i), x.cell(j)]);
            }
            let expect = m.values()[i] * acc / 4.0;
            assert_abs_diff_eq!(rates[i], expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn budget_error_instead_of_truncation() {
        let law = MassLaw::PsiSk {
            kernel: SourceKernel::GroupInfluence(InteractionKernel::Linear),
            cost_cap: 1_000,
        };
        let x = GridFunction::constant(20, &[0.0]).unwrap();
        let m = GridFunction::constant(20, &[1.0]).unwrap();
        assert!(matches!(discretize_mass_law(&law, &x, &m), Err(Error::Budget(_))));
    }

    fn small_state() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..10).prop_flat_map(|n| {
            (
                proptest::collection::vec(-1.0f64..1.0, n),
                proptest::collection::vec(0.01f64..3.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn skew_laws_are_rate_neutral((x, m) in small_state()) {
            let n = m.len();
            let xg = grid(&x);
            let mg = grid(&m);
            for law in [
                MassLaw::psi_sk(SourceKernel::GroupInfluence(InteractionKernel::RationalRadial)),
                MassLaw::psi_sk(SourceKernel::PairTanh { gain: 1.3 }),
            ] {
                let r = discretize_mass_law(&law, &xg, &mg).unwrap();
                prop_assert!(r.iter().sum::<f64>().abs() <= 1e-12 * n as f64);
            }
            let s = eval_psi_sk(&SourceKernel::PairTanh { gain: 1.0 }, 0.3, &xg, &mg).unwrap();
            prop_assert!(s.is_finite());
        }

        #[test]
        fn group_influence_equals_psi_sk_at_unit_mass((x, m) in small_state()) {
            let n = m.len();
            let total: f64 = m.iter().sum();
            let m: Vec<f64> = m.iter().map(|v| v * n as f64 / total).collect();
            let phi = InteractionKernel::compact_sine(0.5).unwrap();
            let xg = grid(&x);
            let mg = grid(&m);
            let fast = eval_group_influence(&phi, &xg, &mg).unwrap();
            let s = SourceKernel::GroupInfluence(phi);
            for (i, f) in fast.iter().enumerate() {
                let s_mid = (i as f64 + 0.5) / n as f64;
                let direct = eval_psi_sk(&s, s_mid, &xg, &mg).unwrap();
                prop_assert!((direct - f).abs() <= 1e-12, "{} vs {}", direct, f);
            }
        }

        #[test]
        fn leader_follower_conserves_per_group(m in proptest::collection::vec(0.0f64..3.0, 20)) {
            let lf = LeaderFollower::new(2, 0.1, 5.0).unwrap();
            let r = eval_leader_follower(&lf, &GridFunction::constant(20, &[0.0]).unwrap(), &grid(&m)).unwrap();
            prop_assert!(r[..10].iter().sum::<f64>().abs() <= 1e-12 * 20.0);
            prop_assert!(r[10..].iter().sum::<f64>().abs() <= 1e-12 * 20.0);
        }

        #[test]
        fn zero_mass_cells_are_fixed((x, mut m) in small_state(), k in 0usize..10) {
            let k = k % m.len();
            m[k] = 0.0;
            let xg = grid(&x);
            let mg = grid(&m);
            for law in [
                MassLaw::Zero,
                MassLaw::group_influence(InteractionKernel::Linear),
                MassLaw::psi_sk(SourceKernel::PairTanh { gain: 2.0 }),
            ] {
                prop_assert_eq!(discretize_mass_law(&law, &xg, &mg).unwrap()[k], 0.0);
            }
        }
    }
}
