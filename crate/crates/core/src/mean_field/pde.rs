//! Lax–Wendroff solver for `∂_t μ + ∂_x(V[μ] μ) = h[μ]` in one dimension.

use crate::error::{Error, Result};
use crate::grid::{project_discrete, IndexFunction, Quadrature};
use crate::kernels::InteractionKernel;
use crate::mass::{SourceKernel, DEFAULT_COST_CAP};
use crate::micro::interaction_sum;
use crate::ode::{Sampling, StepPlan, Tolerances};

use super::measure::{bin_density, DensityGrid, ParticleMeasure};

/// Settings of a PDE run.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeOptions {
    pub horizon: f64,
    pub dt: f64,
    /// Courant number bound `dt max|V| / Δx`.
    pub cfl: f64,
    pub sampling: Sampling,
    /// Largest number of step halvings before giving up.
    pub max_halvings: u32,
    pub tolerances: Tolerances,
}

impl PdeOptions {
    pub fn new(horizon: f64, dt: f64) -> Self {
        PdeOptions {
            horizon,
            dt,
            cfl: 0.9,
            sampling: Sampling::default(),
            max_halvings: 20,
            tolerances: Tolerances::default(),
        }
    }

    pub fn sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }
}

/// Sampled PDE solution with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeSolution {
    pub frames: Vec<DensityGrid>,
    /// Largest `|∫ρ(t) − ∫ρ(0)|` over all steps.
    pub mass_drift: f64,
    pub initial_variation: f64,
    /// Largest total variation seen.
    pub max_variation: f64,
    /// Largest number of sub-steps one step needed for the CFL bound.
    pub max_substeps: usize,
    pub steps: usize,
}

impl PdeSolution {
    pub fn last(&self) -> &DensityGrid {
        self.frames.last().expect("solution is never empty")
    }

    /// Frame closest to `t`.
    pub fn at(&self, t: f64) -> &DensityGrid {
        self.frames
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("solution is never empty")
    }

    /// `max TV / initial TV`.
    pub fn variation_growth(&self) -> f64 {
        if self.initial_variation > 0.0 {
            self.max_variation / self.initial_variation
        } else {
            0.0
        }
    }
}

struct Stepper<'a> {
    kernel: &'a InteractionKernel,
    source: &'a SourceKernel,
    centers: Vec<f64>,
    dx: f64,
    velocity: Vec<f64>,
    cell_mass: Vec<f64>,
    flux: Vec<f64>,
    stage: Vec<f64>,
    rate0: Vec<f64>,
    rate1: Vec<f64>,
}

impl Stepper<'_> {
    fn velocity(&mut self, rho: &[f64]) {
        for (c, r) in self.cell_mass.iter_mut().zip(rho) {
            *c = r * self.dx;
        }
        interaction_sum(self.kernel, 1, &self.centers, &self.cell_mass, 1.0, &mut self.velocity);
    }

    fn source_rate(&mut self, rho: &[f64], out_first: bool) -> Result<()> {
        let masses: Vec<f64> = rho.iter().map(|r| r * self.dx).collect();
        let sigma = self
            .source
            .integrate_at_support(1, &self.centers, &masses, DEFAULT_COST_CAP)?;
        let out = if out_first { &mut self.rate0 } else { &mut self.rate1 };
        for ((o, r), s) in out.iter_mut().zip(rho).zip(&sigma) {
            *o = r * s;
        }
        Ok(())
    }

    /// Heun's method for `ρ' = ρ σ[ρ]` over `tau`.
    fn source_step(&mut self, rho: &mut [f64], tau: f64) -> Result<()> {
        if matches!(self.source, SourceKernel::Zero { .. }) {
            return Ok(());
        }
        self.source_rate(rho, true)?;
        self.stage.clear();
        self.stage.extend(rho.iter().zip(&self.rate0).map(|(r, k)| r + tau * k));
        let stage = std::mem::take(&mut self.stage);
        self.source_rate(&stage, false)?;
        self.stage = stage;
        for ((r, a), b) in rho.iter_mut().zip(&self.rate0).zip(&self.rate1) {
            *r += 0.5 * tau * (a + b);
        }
        Ok(())
    }

    /// One Lax–Wendroff step of size `tau` with the velocity frozen at its
    /// value in `self.velocity`; zero-gradient ghost cells at both ends.
    fn transport_step(&mut self, rho: &mut [f64], tau: f64) {
        let n = rho.len();
        let v = &self.velocity;
        let f = |j: usize| v[j] * rho[j];
        let lambda = tau / self.dx;
        // Faces -1/2 .. n-1/2; ghost cells copy their neighbour, so the
        // boundary faces carry the upwind-free central value.
        self.flux.clear();
        self.flux.push(f(0));
        for j in 0..n - 1 {
            let (fl, fr) = (f(j), f(j + 1));
            let a = 0.5 * (v[j] + v[j + 1]);
            self.flux.push(0.5 * (fl + fr) - 0.5 * lambda * a * (fr - fl));
        }
        self.flux.push(f(n - 1));
        for j in 0..n {
            rho[j] -= lambda * (self.flux[j + 1] - self.flux[j]);
        }
    }
}

/// Solves the transport equation with source from `initial`, by Strang
/// splitting: half a source step, a Lax–Wendroff transport step, half a
/// source step.
pub fn solve_pde(
    initial: &DensityGrid,
    kernel: &InteractionKernel,
    source: &SourceKernel,
    opts: &PdeOptions,
) -> Result<PdeSolution> {
    if !(opts.cfl > 0.0 && opts.cfl <= 1.0) {
        return Err(Error::invalid(format!("CFL number must lie in (0, 1], got {}", opts.cfl)));
    }
    let plan = StepPlan::new(opts.horizon, opts.dt, &opts.sampling, opts.tolerances.step_budget)?;
    let n = initial.cells();
    let mut st = Stepper {
        kernel,
        source,
        centers: initial.centers(),
        dx: initial.dx(),
        velocity: vec![0.0; n],
        cell_mass: vec![0.0; n],
        flux: Vec::with_capacity(n + 1),
        stage: Vec::with_capacity(n),
        rate0: vec![0.0; n],
        rate1: vec![0.0; n],
    };
    let conserve = source.skew_pair().is_some();
    let mut rho = initial.density.clone();
    let mass0 = initial.total_mass();
    let tv0 = initial.total_variation();
    let mut out = PdeSolution {
        frames: vec![DensityGrid {
            time: 0.0,
            ..initial.clone()
        }],
        mass_drift: 0.0,
        initial_variation: tv0,
        max_variation: tv0,
        max_substeps: 1,
        steps: plan.total_steps(),
    };
    let frame = |rho: &[f64], t: f64| DensityGrid {
        lo: initial.lo,
        hi: initial.hi,
        density: rho.to_vec(),
        time: t,
    };

    for (seg, &steps) in plan.steps.iter().enumerate() {
        let (t0, t1) = (plan.times[seg], plan.times[seg + 1]);
        let h = (t1 - t0) / steps as f64;
        for j in 0..steps {
            let t = t0 + j as f64 * h;
            let mut sub = 1usize;
            let mut halvings = 0;
            st.source_step(&mut rho, 0.5 * h)?;
            st.velocity(&rho);
            let vmax = st.velocity.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            while vmax * h / sub as f64 > opts.cfl * st.dx {
                halvings += 1;
                if halvings > opts.max_halvings {
                    return Err(Error::Instability {
                        time: t,
                        detail: format!("CFL bound needs more than {} halvings (max |V| = {vmax:e})", opts.max_halvings),
                    });
                }
                sub *= 2;
            }
            let tau = h / sub as f64;
            for k in 0..sub {
                if k > 0 {
                    st.velocity(&rho);
                }
                st.transport_step(&mut rho, tau);
            }
            st.source_step(&mut rho, 0.5 * h)?;
            out.max_substeps = out.max_substeps.max(sub);

            let t_next = if j + 1 == steps { t1 } else { t0 + (j + 1) as f64 * h };
            if let Some(i) = rho.iter().position(|v| !v.is_finite() || v.abs() > opts.tolerances.blowup) {
                return Err(Error::Instability {
                    time: t_next,
                    detail: format!("density {:e} in cell {i}", rho[i]),
                });
            }
            let mass = rho.iter().sum::<f64>() * st.dx;
            let drift = (mass - mass0).abs();
            out.mass_drift = out.mass_drift.max(drift);
            if conserve && drift > opts.tolerances.mass_field {
                return Err(Error::Monitor {
                    monitor: "mass",
                    time: t_next,
                    detail: format!("density mass drifted by {drift:e}"),
                });
            }
            let tv: f64 = rho.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
            out.max_variation = out.max_variation.max(tv);
        }
        out.frames.push(frame(&rho, t1));
    }
    Ok(out)
}

/// Bins the pushforward of the initial profiles `(x0, m0)`, projected on
/// `fine_cells` index cells, onto `n` cells of `[lo, hi]`.
pub fn initial_density(
    x0: &dyn IndexFunction,
    m0: &dyn IndexFunction,
    lo: f64,
    hi: f64,
    n: usize,
    fine_cells: usize,
) -> Result<DensityGrid> {
    if x0.dim() != 1 {
        return Err(Error::invalid("the PDE solver is one-dimensional"));
    }
    let quad = Quadrature::new(4);
    let x = project_discrete(x0, fine_cells, quad)?;
    let m = project_discrete(m0, fine_cells, quad)?;
    let pm = ParticleMeasure::with_scale(1, x, m, 1.0 / fine_cells as f64)?;
    bin_density(&pm, lo, hi, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bump(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> DensityGrid {
        let dx = (hi - lo) / n as f64;
        let rho = (0..n).map(|j| f(lo + (j as f64 + 0.5) * dx)).collect();
        let mut g = DensityGrid::new(lo, hi, rho).unwrap();
        let m = g.total_mass();
        g.density.iter_mut().for_each(|r| *r /= m);
        g
    }

    #[test]
    fn static_without_dynamics() {
        let g = bump(0.0, 1.0, 50, |x| (-(x - 0.5f64).powi(2) * 40.0).exp());
        let s = solve_pde(&g, &InteractionKernel::Zero, &SourceKernel::Zero { order: 1 }, &PdeOptions::new(0.5, 1e-2)).unwrap();
        assert_eq!(s.last().density, g.density);
    }

    #[test]
    fn symmetric_double_bump_keeps_centre_of_mass() {
        let g = bump(-1.0, 1.0, 200, |x| {
            (-(x - 0.4f64).powi(2) * 80.0).exp() + (-(x + 0.4f64).powi(2) * 80.0).exp()
        });
        let s = solve_pde(
            &g,
            &InteractionKernel::RationalRadial,
            &SourceKernel::Zero { order: 1 },
            &PdeOptions::new(1.0, 2e-3),
        )
        .unwrap();
        for f in &s.frames {
            assert!(f.first_moment().abs() < 1e-6);
        }
        assert!(s.mass_drift < 1e-12);
    }

    #[test]
    fn source_conserves_mass() {
        let g = bump(-0.5, 1.5, 120, |x| if (0.0..1.0).contains(&x) { 1.0 + 0.5 * (6.0 * x).sin() } else { 0.0 });
        let phi = InteractionKernel::compact_sine(0.2).unwrap();
        let s = solve_pde(&g, &phi, &SourceKernel::GroupInfluence(phi.clone()), &PdeOptions::new(0.5, 2e-3)).unwrap();
        assert!(s.mass_drift < 1e-10, "{}", s.mass_drift);
        assert_abs_diff_eq!(s.last().total_mass(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn cfl_substeps() {
        let g = bump(0.0, 1.0, 400, |x| (-(x - 0.5f64).powi(2) * 400.0).exp());
        let s = solve_pde(&g, &InteractionKernel::Linear, &SourceKernel::Zero { order: 1 }, &PdeOptions::new(0.05, 0.05).sampling(Sampling::Uniform(2))).unwrap();
        assert!(s.max_substeps > 1);
    }
}
