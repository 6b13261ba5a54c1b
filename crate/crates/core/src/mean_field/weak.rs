//! Weak-form residual of the transport equation with source along a sampled
//! measure trajectory.

use crate::error::{Error, Result};
use crate::kernels::InteractionKernel;
use crate::mass::SourceKernel;

use super::measure::{source_term, velocity_at_atoms, ParticleMeasure};

/// Cubic B-spline bump `B((x − center)/width)`, supported on
/// `[center − 2 width, center + 2 width]` and twice continuously
/// differentiable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub center: f64,
    pub width: f64,
}

impl TestFunction {
    pub fn value(&self, x: f64) -> f64 {
        let u = ((x - self.center) / self.width).abs();
        if u < 1.0 {
            2.0 / 3.0 - u * u + 0.5 * u * u * u
        } else if u < 2.0 {
            let v = 2.0 - u;
            v * v * v / 6.0
        } else {
            0.0
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.width;
        let a = u.abs();
        let d = if a < 1.0 {
            -2.0 * u + 1.5 * u * a
        } else if a < 2.0 {
            let v = 2.0 - a;
            -0.5 * v * v * u.signum()
        } else {
            0.0
        };
        d / self.width
    }
}

/// Bumps of widths `{span/20, span/10, span/5}` with centres spaced one
/// width apart across `[lo, hi]`.
pub fn test_bank(lo: f64, hi: f64) -> Vec<TestFunction> {
    let span = hi - lo;
    let mut bank = Vec::new();
    for div in [20.0, 10.0, 5.0] {
        let width = span / div;
        let count = div as usize;
        for k in 0..=count {
            bank.push(TestFunction {
                center: lo + k as f64 * width,
                width,
            });
        }
    }
    bank
}

/// Largest residual of
/// `d/dt ⟨μ_t, ϕ⟩ = ∫ V[μ_t] ϕ' dμ_t + ∫ ϕ dh[μ_t]`
/// over interior samples and test functions, the time derivative taken by
/// central differences. `times` must be uniformly spaced.
pub fn weak_residual(
    times: &[f64],
    measures: &[ParticleMeasure],
    kernel: &InteractionKernel,
    source: &SourceKernel,
    tests: &[TestFunction],
) -> Result<f64> {
    if times.len() != measures.len() {
        return Err(Error::invalid("one measure per sample time is required"));
    }
    if times.len() < 3 {
        return Err(Error::invalid("the weak residual needs at least three samples"));
    }
    if measures.iter().any(|m| m.dim() != 1) {
        return Err(Error::invalid("the weak residual is implemented in one dimension"));
    }
    let tau = times[1] - times[0];
    if !(tau > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - tau).abs() > 1e-9 * tau.max(1.0)) {
        return Err(Error::invalid("sample times must be uniformly spaced"));
    }
    let pairing = |m: &ParticleMeasure, f: &TestFunction| m.integrate(|x| f.value(x[0]));
    let mut worst = 0.0_f64;
    for k in 1..times.len() - 1 {
        let mu = &measures[k];
        let v = velocity_at_atoms(mu, kernel);
        let h = source_term(mu, source)?;
        for f in tests {
            let lhs = (pairing(&measures[k + 1], f) - pairing(&measures[k - 1], f)) / (2.0 * tau);
            let mut rhs = 0.0;
            for i in 0..mu.len() {
                let x = mu.location(i)[0];
                rhs += mu.mass(i) * v[i] * f.derivative(x) + h[i] * f.value(x);
            }
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}
