//! Interaction functions `φ` acting on opinion differences.
//!
//! Every built-in kernel is radial, `φ(y) = a(‖y‖) y` (or its `y/‖y‖` form for
//! the compactly supported profile), hence odd and zero at the origin.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type KernelFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// User-supplied kernel. Checked for `φ(0) = 0` on construction.
#[derive(Clone)]
pub struct CustomKernel {
    name: String,
    dim: usize,
    sup_norm: Option<f64>,
    f: Arc<KernelFn>,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum InteractionKernel {
    Zero,
    /// `φ(y) = y`.
    Linear,
    /// `φ(y) = y / (1 + ‖y‖²)`.
    RationalRadial,
    /// `φ(y) = (y/‖y‖) sin²(π‖y‖/R)` for `0 < ‖y‖ < R`, zero otherwise.
    CompactSine { radius: f64 },
    Custom(CustomKernel),
}

impl InteractionKernel {
    pub fn compact_sine(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!(
                "compact_sine radius must be positive, got {radius}"
            )));
        }
        Ok(InteractionKernel::CompactSine { radius })
    }

    /// Wraps a closure `(y, out)` for opinions of dimension `dim`.
    ///
    /// `sup_norm` is the declared bound of `‖φ‖`, if any; it feeds the
    /// growth-bound monitors of the weight dynamics.
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        sup_norm: Option<f64>,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        let name = name.into();
        let zero = vec![0.0; dim];
        let mut out = vec![0.0; dim];
        f(&zero, &mut out);
        if out.iter().any(|v| *v != 0.0) {
            return Err(Error::invalid(format!(
                "custom kernel `{name}` does not vanish at the origin: {out:?}"
            )));
        }
        Ok(InteractionKernel::Custom(CustomKernel {
            name,
            dim,
            sup_norm,
            f: Arc::new(f),
        }))
    }

    pub fn name(&self) -> &str {
        match self {
            InteractionKernel::Zero => "zero",
            InteractionKernel::Linear => "linear",
            InteractionKernel::RationalRadial => "rational_radial",
            InteractionKernel::CompactSine { .. } => "compact_sine",
            InteractionKernel::Custom(c) => &c.name,
        }
    }

    /// One-dimensional evaluation; the hot path of every solver.
    #[inline]
    pub fn phi_scalar(&self, y: f64) -> f64 {
        match self {
            InteractionKernel::Zero => 0.0,
            InteractionKernel::Linear => y,
            InteractionKernel::RationalRadial => y / (1.0 + y * y),
            InteractionKernel::CompactSine { radius } => {
                let r = y.abs();
                if r == 0.0 || r >= *radius {
                    0.0
                } else {
                    let s = (PI * r / radius).sin();
                    (s * s).copysign(y)
                }
            }
            InteractionKernel::Custom(c) => {
                let mut out = [0.0];
                (c.f)(&[y], &mut out);
                out[0]
            }
        }
    }

    /// Evaluates `φ(y)` into `out`, without checking finiteness.
    #[inline]
    pub fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        if y.len() == 1 {
            out[0] = self.phi_scalar(y[0]);
            return;
        }
        match self {
            InteractionKernel::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            InteractionKernel::Linear => out.copy_from_slice(y),
            InteractionKernel::RationalRadial => {
                let r2: f64 = y.iter().map(|v| v * v).sum();
                let a = 1.0 / (1.0 + r2);
                for (o, v) in out.iter_mut().zip(y) {
                    *o = a * v;
                }
            }
            InteractionKernel::CompactSine { radius } => {
                let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r == 0.0 || r >= *radius {
                    out.iter_mut().for_each(|o| *o = 0.0);
                } else {
                    let s = (PI * r / radius).sin();
                    let a = s * s / r;
                    for (o, v) in out.iter_mut().zip(y) {
                        *o = a * v;
                    }
                }
            }
            InteractionKernel::Custom(c) => (c.f)(y, out),
        }
    }

    /// Checked evaluation of `φ(y)`.
    pub fn eval_phi(&self, y: &[f64]) -> Result<Vec<f64>> {
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "kernel argument",
                index: i,
            });
        }
        if let InteractionKernel::Custom(c) = self {
            if c.dim != y.len() {
                return Err(Error::invalid(format!(
                    "kernel `{}` expects dimension {}, got {}",
                    c.name,
                    c.dim,
                    y.len()
                )));
            }
        }
        let mut out = vec![0.0; y.len()];
        self.eval_into(y, &mut out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Kernel {
                kernel: self.name().to_string(),
            });
        }
        Ok(out)
    }

    /// `‖φ(y)‖`.
    #[inline]
    pub fn phi_norm(&self, y: &[f64]) -> f64 {
        if y.len() == 1 {
            return self.phi_scalar(y[0]).abs();
        }
        let mut out = vec![0.0; y.len()];
        self.eval_into(y, &mut out);
        out.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `sup_y ‖φ(y)‖`, when finite and known.
    pub fn sup_norm(&self) -> Option<f64> {
        match self {
            InteractionKernel::Zero => Some(0.0),
            InteractionKernel::Linear => None,
            InteractionKernel::RationalRadial => Some(0.5),
            InteractionKernel::CompactSine { .. } => Some(1.0),
            InteractionKernel::Custom(c) => c.sup_norm,
        }
    }

    /// Analytic Lipschitz constant of the built-ins.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match self {
            InteractionKernel::Zero => Some(0.0),
            InteractionKernel::Linear | InteractionKernel::RationalRadial => Some(1.0),
            InteractionKernel::CompactSine { radius } => Some(PI / radius),
            InteractionKernel::Custom(_) => None,
        }
    }

    /// Interaction radius beyond which `φ` vanishes, if any.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            InteractionKernel::CompactSine { radius } => Some(*radius),
            InteractionKernel::Zero => Some(0.0),
            _ => None,
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self, InteractionKernel::Custom(_))
    }
}

/// Axis-aligned box in opinion space.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::invalid("bounding box corners must share a dimension"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::invalid(format!(
                "degenerate bounding box [{lo:?}, {hi:?}]"
            )));
        }
        Ok(BoundingBox { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Maps a point of the unit cube into the box.
    pub(crate) fn place(&self, unit: &[f64], out: &mut [f64]) {
        for k in 0..self.dim() {
            out[k] = self.lo[k] + unit[k] * (self.hi[k] - self.lo[k]);
        }
    }
}

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// Radical inverse of `i` in `base`: the Halton coordinate.
pub(crate) fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Point `i` of the Halton sequence in `dims` dimensions, starting at `offset`.
pub(crate) fn halton(i: u64, offset: usize, out: &mut [f64]) {
    for (k, o) in out.iter_mut().enumerate() {
        *o = radical_inverse(i + 1, PRIMES[(offset + k) % PRIMES.len()]);
    }
}

/// Deterministic pair sampler shared by the hypothesis probes: pair `i`
/// consists of a Halton point `u` of the box and a neighbour `v = u + δ`
/// whose scale shrinks geometrically with `i mod 16`, so that both global and
/// local difference quotients are seen. Prefixes of the sequence are nested.
pub(crate) fn probe_pair(bbox: &BoundingBox, i: u64, u: &mut [f64], v: &mut [f64]) {
    let d = bbox.dim();
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    halton(i, 0, &mut a);
    halton(i, d, &mut b);
    bbox.place(&a, u);
    let scale = 0.5_f64.powi((i % 16) as i32);
    for k in 0..d {
        let width = bbox.hi[k] - bbox.lo[k];
        let step = (2.0 * b[k] - 1.0) * width * scale;
        v[k] = (u[k] + step).clamp(bbox.lo[k], bbox.hi[k]);
    }
}

/// Largest observed `‖φ(u) − φ(v)‖ / ‖u − v‖` over `samples` deterministic
/// pairs in `bbox`. Non-decreasing in `samples`.
pub fn lipschitz_probe(kernel: &InteractionKernel, bbox: &BoundingBox, samples: usize) -> Result<f64> {
    if samples < 2 {
        return Err(Error::invalid("lipschitz probe needs at least two samples"));
    }
    let d = bbox.dim();
    let (mut u, mut v) = (vec![0.0; d], vec![0.0; d]);
    let mut best = 0.0_f64;
    for i in 0..samples as u64 {
        probe_pair(bbox, i, &mut u, &mut v);
        let dist = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dist == 0.0 {
            continue;
        }
        let fu = kernel.eval_phi(&u)?;
        let fv = kernel.eval_phi(&v)?;
        let num = fu.iter().zip(&fv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        best = best.max(num / dist);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn builtins() -> Vec<InteractionKernel> {
        vec![
            InteractionKernel::Zero,
            InteractionKernel::Linear,
            InteractionKernel::RationalRadial,
            InteractionKernel::compact_sine(0.2).unwrap(),
        ]
    }

    #[test]
    fn compact_sine_values() {
        let k = InteractionKernel::compact_sine(0.2).unwrap();
        assert_eq!(k.eval_phi(&[0.3]).unwrap(), vec![0.0]);
        assert_abs_diff_eq!(k.eval_phi(&[0.1]).unwrap()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.eval_phi(&[-0.1]).unwrap()[0], -1.0, epsilon = 1e-15);
        assert_eq!(k.eval_phi(&[0.2]).unwrap(), vec![0.0]);
        // Inside the radius the value is sin²(πε/R), about 2.5e-10 for R = 0.2.
        let eps: f64 = 1e-6;
        let inner = (PI * eps / 0.2).sin().powi(2);
        assert_abs_diff_eq!(k.eval_phi(&[0.2 - eps]).unwrap()[0], inner, epsilon = 1e-18);
        assert_eq!(k.eval_phi(&[0.2 + eps]).unwrap()[0], 0.0);
        let unit = InteractionKernel::compact_sine(1.0).unwrap();
        for y in [1.0 - eps, 1.0 + eps, -1.0 + eps, -1.0 - eps] {
            assert!(unit.eval_phi(&[y]).unwrap()[0].abs() <= 1e-10);
        }
    }

    #[test]
    fn every_kernel_vanishes_at_origin() {
        for k in builtins() {
            for d in 1..4 {
                assert!(k.eval_phi(&vec![0.0; d]).unwrap().iter().all(|v| *v == 0.0));
            }
        }
        assert!(InteractionKernel::custom("shifted", 1, None, |y, o| o[0] = y[0] + 1.0).is_err());
    }

    #[test]
    fn rational_radial_matches_profile() {
        let k = InteractionKernel::RationalRadial;
        assert_abs_diff_eq!(k.eval_phi(&[2.0]).unwrap()[0], 2.0 / 5.0, epsilon = 1e-15);
        let v = k.eval_phi(&[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(v[0], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn custom_non_finite_is_an_error() {
        let k = InteractionKernel::custom("blowup", 1, None, |y, o| {
            o[0] = if y[0] > 1.0 { f64::NAN } else { 0.0 }
        })
        .unwrap();
        assert!(matches!(k.eval_phi(&[2.0]), Err(Error::Kernel { .. })));
    }

    #[test]
    fn lipschitz_probe_identity_and_zero() {
        let bbox = BoundingBox::interval(-1.0, 1.0).unwrap();
        let l = lipschitz_probe(&InteractionKernel::Linear, &bbox, 64).unwrap();
        assert_abs_diff_eq!(l, 1.0, epsilon = 1e-12);
        assert_eq!(lipschitz_probe(&InteractionKernel::Zero, &bbox, 64).unwrap(), 0.0);
        assert!(lipschitz_probe(&InteractionKernel::Linear, &bbox, 1).is_err());
        assert!(BoundingBox::interval(1.0, 1.0).is_err());
    }

    #[test]
    fn lipschitz_probe_compact_sine_is_stable() {
        let k = InteractionKernel::compact_sine(0.2).unwrap();
        let bbox = BoundingBox::interval(-1.0, 1.0).unwrap();
        // Dense difference-quotient oracle on a uniform mesh.
        let h = 1e-5;
        let mut oracle = 0.0_f64;
        let mut y = -1.0;
        while y < 1.0 {
            let q = (k.phi_scalar(y + h) - k.phi_scalar(y)).abs() / h;
            oracle = oracle.max(q);
            y += h;
        }
        let a = lipschitz_probe(&k, &bbox, 4000).unwrap();
        let b = lipschitz_probe(&k, &bbox, 8000).unwrap();
        assert!(a.is_finite() && a > 0.0);
        assert!(b >= a);
        assert!((b - a) / b <= 0.05, "{a} vs {b}");
        assert!(b <= oracle * 1.0001 && b >= 0.9 * oracle, "{b} vs oracle {oracle}");
    }

    proptest! {
        #[test]
        fn builtins_are_odd(y in -3.0f64..3.0, z in -3.0f64..3.0) {
            for k in builtins() {
                let a = k.eval_phi(&[y, z]).unwrap();
                let b = k.eval_phi(&[-y, -z]).unwrap();
                prop_assert_eq!(a[0], -b[0]);
                prop_assert_eq!(a[1], -b[1]);
                prop_assert_eq!(k.phi_scalar(y), -k.phi_scalar(-y));
            }
        }

        #[test]
        fn compact_sine_vanishes_outside_radius(y in 0.2f64..10.0) {
            let k = InteractionKernel::compact_sine(0.2).unwrap();
            prop_assert_eq!(k.phi_scalar(y), 0.0);
            prop_assert_eq!(k.phi_scalar(-y), 0.0);
        }

        #[test]
        fn probe_is_monotone_in_samples(n in 2usize..200) {
            let k = InteractionKernel::RationalRadial;
            let bbox = BoundingBox::interval(-2.0, 2.0).unwrap();
            let a = lipschitz_probe(&k, &bbox, n).unwrap();
            let b = lipschitz_probe(&k, &bbox, n + 17).unwrap();
            prop_assert!(b >= a);
        }
    }
}
