//! The graph-limit system on a uniform index grid
//!
//! ```text
//! ∂_t x(t,s) = ∫_I m(t,s*) φ(x(t,s*) − x(t,s)) ds*,   ∂_t m(t,s) = ψ(s, x, m),
//! ```
//!
//! stepped with explicit Euler, the index integral taken either by Simpson's
//! rule on the cell centres or by the grid-aligned rectangle rule.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::csv;
use crate::error::{Error, Result};
use crate::grid::{AgentEnsemble, GridFunction};
use crate::kernels::InteractionKernel;
use crate::mass::MassLaw;
use crate::micro::{self, first_non_finite, interaction_sum, MicroOptions};
use crate::ode::{Method, Sampling, StepPlan, Tolerances};

/// Quadrature in the index variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceQuadrature {
    /// Composite Simpson through the cell centres; the two half cells at the
    /// ends of `I` use the end values.
    #[default]
    Simpson,
    /// Weight `1/N` per cell: exact for piecewise-constant fields.
    GridAligned,
}

/// Quadrature weights of the `cells` cell centres; they sum to 1.
pub fn quadrature_weights(cells: usize, quad: SpaceQuadrature) -> Vec<f64> {
    let n = cells;
    let h = 1.0 / n as f64;
    match quad {
        SpaceQuadrature::GridAligned => vec![h; n],
        SpaceQuadrature::Simpson => {
            let mut w = vec![0.0; n];
            if n == 1 {
                w[0] = 1.0;
                return w;
            }
            let intervals = n - 1;
            if intervals == 1 {
                w[0] += 0.5 * h;
                w[1] += 0.5 * h;
            } else {
                // Simpson 1/3 on an even count of intervals, 3/8 on the last
                // three if the count is odd.
                let simpson_end = if intervals % 2 == 0 { intervals } else { intervals - 3 };
                let mut k = 0;
                while k < simpson_end {
                    w[k] += h / 3.0;
                    w[k + 1] += 4.0 * h / 3.0;
                    w[k + 2] += h / 3.0;
                    k += 2;
                }
                if simpson_end < intervals {
                    let a = 3.0 * h / 8.0;
                    w[k] += a;
                    w[k + 1] += 3.0 * a;
                    w[k + 2] += 3.0 * a;
                    w[k + 3] += a;
                }
            }
            w[0] += 0.5 * h;
            w[n - 1] += 0.5 * h;
            w
        }
    }
}

/// Opinion and weight fields at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub x: GridFunction,
    pub m: GridFunction,
    pub time: f64,
}

impl FieldPair {
    pub fn new(x: GridFunction, m: GridFunction) -> Result<Self> {
        if m.dim() != 1 {
            return Err(Error::invalid("weight field must be scalar"));
        }
        if x.cells() != m.cells() {
            return Err(Error::invalid(format!(
                "opinion field has {} cells, weight field {}",
                x.cells(),
                m.cells()
            )));
        }
        Ok(FieldPair { x, m, time: 0.0 })
    }

    /// `P_c^N` of an ensemble.
    pub fn from_ensemble(e: &AgentEnsemble) -> Self {
        FieldPair {
            x: e.position_field(),
            m: e.weight_field(),
            time: e.time,
        }
    }

    pub fn cells(&self) -> usize {
        self.m.cells()
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// `∫_I m` under `quad`.
    pub fn total_weight(&self, quad: SpaceQuadrature) -> f64 {
        let w = quadrature_weights(self.cells(), quad);
        w.iter().zip(self.m.values()).map(|(w, m)| w * m).sum()
    }

    /// Exact refinement onto `factor` times as many cells.
    pub fn refine(&self, factor: usize) -> FieldPair {
        FieldPair {
            x: self.x.refine(factor),
            m: self.m.refine(factor),
            time: self.time,
        }
    }
}

/// Settings of a graph-limit run.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphOptions {
    pub horizon: f64,
    pub dt: f64,
    pub quadrature: SpaceQuadrature,
    pub sampling: Sampling,
    pub tolerances: Tolerances,
    pub monitors: bool,
}

impl GraphOptions {
    pub fn new(horizon: f64, dt: f64) -> Self {
        GraphOptions {
            horizon,
            dt,
            quadrature: SpaceQuadrature::Simpson,
            sampling: Sampling::default(),
            tolerances: Tolerances::default(),
            monitors: true,
        }
    }

    pub fn quadrature(mut self, quadrature: SpaceQuadrature) -> Self {
        self.quadrature = quadrature;
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

/// Sampled graph-limit solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSeries {
    pub frames: Vec<FieldPair>,
    pub quadrature: SpaceQuadrature,
    pub max_opinion: f64,
    pub max_weight: f64,
    pub steps: usize,
}

impl FieldSeries {
    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.time).collect()
    }

    pub fn last(&self) -> &FieldPair {
        self.frames.last().expect("series is never empty")
    }

    /// Frame closest to `t`.
    pub fn at(&self, t: f64) -> &FieldPair {
        self.frames
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("series is never empty")
    }

    /// CSV rows `t,s,x,m` (cell centres `s`), one block per sample time.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let d = self.frames[0].dim();
        let mut header = vec!["t".to_string(), "s".to_string()];
        if d == 1 {
            header.push("x".into());
        } else {
            header.extend((1..=d).map(|c| format!("x_{c}")));
        }
        header.push("m".into());
        csv::write_row(w, header)?;
        for f in &self.frames {
            let n = f.cells();
            for i in 0..n {
                let s = (i as f64 + 0.5) / n as f64;
                let row = [csv::float(f.time), csv::float(s)]
                    .into_iter()
                    .chain(f.x.cell(i).iter().map(|v| csv::float(*v)))
                    .chain(std::iter::once(csv::float(f.m.values()[i])));
                csv::write_row(w, row)?;
            }
        }
        Ok(())
    }
}

/// Rates of the graph-limit system at `fp`.
pub fn rhs_graph(
    fp: &FieldPair,
    kernel: &InteractionKernel,
    law: &MassLaw,
    quad: SpaceQuadrature,
) -> Result<FieldPair> {
    let n = fp.cells();
    law.validate_grid(n)?;
    let w = quadrature_weights(n, quad);
    let mut dx = vec![0.0; n * fp.dim()];
    let mut dm = vec![0.0; n];
    eval_rates(fp.dim(), fp.x.values(), fp.m.values(), &w, kernel, law, &mut dx, &mut dm)?;
    Ok(FieldPair {
        x: GridFunction::from_raw(fp.dim(), dx),
        m: GridFunction::from_raw(1, dm),
        time: fp.time,
    })
}

#[allow(clippy::too_many_arguments)]
fn eval_rates(
    dim: usize,
    x: &[f64],
    m: &[f64],
    w: &[f64],
    kernel: &InteractionKernel,
    law: &MassLaw,
    dx: &mut [f64],
    dm: &mut [f64],
) -> Result<()> {
    let coef: Vec<f64> = w.iter().zip(m).map(|(w, m)| w * m).collect();
    interaction_sum(kernel, dim, x, &coef, 1.0, dx);
    if let Some(i) = first_non_finite(dx) {
        return Err(Error::NonFinite {
            what: "opinion rate of cell",
            index: i / dim,
        });
    }
    law.rates(dim, x, m, w, dm)
}

/// Rates with the weight rate averaged over the cells of an `n`-cell grid:
/// `∂_t m(s) = n ∫_{cell of s} ψ(s*, x, m) ds*`.
pub fn rhs_graph_averaged(fp: &FieldPair, kernel: &InteractionKernel, law: &MassLaw, n: usize) -> Result<FieldPair> {
    let fine = fp.cells();
    if n == 0 || fine % n != 0 {
        return Err(Error::invalid(format!(
            "field grid of {fine} cells is not a refinement of {n} cells"
        )));
    }
    let mut rates = rhs_graph(fp, kernel, law, SpaceQuadrature::GridAligned)?;
    let block = fine / n;
    let dm = rates.m.values();
    let mut averaged = Vec::with_capacity(fine);
    for b in 0..n {
        let mean = dm[b * block..(b + 1) * block].iter().sum::<f64>() / block as f64;
        averaged.extend(std::iter::repeat_n(mean, block));
    }
    rates.m = GridFunction::from_raw(1, averaged);
    Ok(rates)
}

/// Explicit Euler integration of the graph-limit system.
pub fn integrate_graph(
    fp0: &FieldPair,
    kernel: &InteractionKernel,
    law: &MassLaw,
    opts: &GraphOptions,
) -> Result<FieldSeries> {
    let n = fp0.cells();
    let d = fp0.dim();
    law.validate_grid(n)?;
    let plan = StepPlan::new(opts.horizon, opts.dt, &opts.sampling, opts.tolerances.step_budget)?;
    let tol = opts.tolerances;
    let w = quadrature_weights(n, opts.quadrature);

    let mut x = fp0.x.values().to_vec();
    let mut m = fp0.m.values().to_vec();
    let m0 = m.clone();
    let total0: f64 = w.iter().zip(&m).map(|(w, m)| w * m).sum();
    let conserve = opts.monitors && law.conserves_at(total0);
    let positive = opts.monitors && law.is_psi_sk_class() && m0.iter().all(|&v| v > 0.0);
    let growth = if conserve { law.growth_rate(total0) } else { None };
    let lipschitz = kernel.lipschitz_bound();

    let mut frames = Vec::with_capacity(plan.times.len());
    let mut max_opinion = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut max_weight = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut dx = vec![0.0; n * d];
    let mut dm = vec![0.0; n];

    let frame = |x: &[f64], m: &[f64], t: f64| FieldPair {
        x: GridFunction::from_raw(d, x.to_vec()),
        m: GridFunction::from_raw(1, m.to_vec()),
        time: t,
    };
    frames.push(frame(&x, &m, 0.0));

    for (seg, &steps) in plan.steps.iter().enumerate() {
        let (t0, t1) = (plan.times[seg], plan.times[seg + 1]);
        let h = (t1 - t0) / steps as f64;
        for j in 0..steps {
            let t = t0 + j as f64 * h;
            let t_next = if j + 1 == steps { t1 } else { t0 + (j + 1) as f64 * h };
            if opts.monitors {
                let weight: f64 = w.iter().zip(&m).map(|(w, m)| w * m.abs()).sum();
                let mut limit = f64::INFINITY;
                if let Some(l) = lipschitz {
                    if l * weight > 0.0 {
                        limit = limit.min(0.5 / (weight * l));
                    }
                }
                if let Some(c) = law.rate_bound(weight) {
                    if c > 0.0 {
                        limit = limit.min(0.5 / c);
                    }
                }
                if h > limit {
                    return Err(Error::Monitor {
                        monitor: "step size",
                        time: t,
                        detail: format!("dt = {h:e} exceeds the explicit stability bound {limit:e}"),
                    });
                }
            }
            eval_rates(d, &x, &m, &w, kernel, law, &mut dx, &mut dm)?;
            for (xi, r) in x.iter_mut().zip(&dx) {
                *xi += h * r;
            }
            for i in 0..n {
                let next = m[i] + h * dm[i];
                if positive && next <= 0.0 {
                    return Err(Error::Monitor {
                        monitor: "positivity",
                        time: t_next,
                        detail: format!("Euler step drives the weight of cell {i} to {next:e}"),
                    });
                }
                m[i] = next;
            }
            let mut peak = 0.0_f64;
            for v in &x {
                max_opinion = max_opinion.max(v.abs());
                peak = peak.max(v.abs());
            }
            for v in &m {
                max_weight = max_weight.max(v.abs());
                peak = peak.max(v.abs());
            }
            if !peak.is_finite() || peak > tol.blowup {
                return Err(Error::Instability {
                    time: t_next,
                    detail: format!("field magnitude {peak:e} exceeds {:e}", tol.blowup),
                });
            }
            if conserve {
                let total: f64 = w.iter().zip(&m).map(|(w, m)| w * m).sum();
                let drift = (total - total0).abs();
                if drift > tol.mass_field {
                    return Err(Error::Monitor {
                        monitor: "mass",
                        time: t_next,
                        detail: format!("index-space weight drifted by {drift:e}"),
                    });
                }
            }
            if let Some(c) = growth {
                let factor = (c * t_next).exp() * (1.0 + tol.growth_slack_graph);
                if let Some(i) = (0..n).find(|&i| m[i] > m0[i] * factor) {
                    return Err(Error::Monitor {
                        monitor: "growth",
                        time: t_next,
                        detail: format!("weight of cell {i} is {} > {}", m[i], m0[i] * factor),
                    });
                }
            }
        }
        frames.push(frame(&x, &m, t1));
    }

    Ok(FieldSeries {
        frames,
        quadrature: opts.quadrature,
        max_opinion,
        max_weight,
        steps: plan.total_steps(),
    })
}

/// Integrates the microscopic system and the grid-aligned graph system with
/// explicit Euler from matched data and returns
/// `max_t max_i (|x_N − P_c x^N| + |m_N − P_c m^N|)`.
pub fn equivalence_check(
    initial: &AgentEnsemble,
    kernel: &InteractionKernel,
    law: &MassLaw,
    horizon: f64,
    dt: f64,
) -> Result<f64> {
    let sampling = Sampling::EveryStep;
    let micro_opts = MicroOptions::new(horizon, dt)
        .method(Method::Euler)
        .sampling(sampling.clone());
    let graph_opts = GraphOptions::new(horizon, dt)
        .quadrature(SpaceQuadrature::GridAligned)
        .sampling(sampling);
    let fp0 = FieldPair::from_ensemble(initial);
    let (traj, series) = rayon::join(
        || micro::integrate(initial, kernel, law, &micro_opts),
        || integrate_graph(&fp0, kernel, law, &graph_opts),
    );
    let (traj, series) = (traj?, series?);
    let mut worst = 0.0_f64;
    for (state, frame) in traj.states.iter().zip(&series.frames) {
        for i in 0..initial.len() {
            let dx = state
                .position(i)
                .iter()
                .zip(frame.x.cell(i))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let dm = (state.weights[i] - frame.m.values()[i]).abs();
            worst = worst.max(dx + dm);
        }
    }
    Ok(worst)
}
