//! Named initial profiles on the index interval and inline tables.
//!
//! Cell averages of the built-ins come from closed-form antiderivatives where
//! one exists, so that normalized weights sum to `N` to rounding.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{simpson, GridFunction, IndexFunction, Quadrature};

/// Built-in profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    /// `sin²(4s)`.
    #[serde(rename = "sin2_4s")]
    Sin2_4s,
    /// `s cos²(5s)` divided by its integral.
    #[serde(rename = "s_cos2_5s_normalized")]
    SCos2_5sNormalized,
    /// `arccos(2s − 1)/π`, decreasing from 1 to 0.
    Arccos,
    /// `s^{1/4} cos²(5s) + 0.2 s² + 0.5` divided by its integral.
    QuarterCosBump,
    /// Constant one.
    Uniform,
}

// Panels of the substituted Simpson rule used for the quarter-power term.
const ROOT_PANELS: usize = 256;
const ROOT_PANELS_TOTAL: usize = 20_000;

fn s_cos2_antiderivative(s: f64) -> f64 {
    s * s / 4.0 + s * (10.0 * s).sin() / 20.0 + (10.0 * s).cos() / 200.0
}

fn s_cos2_total() -> f64 {
    s_cos2_antiderivative(1.0) - s_cos2_antiderivative(0.0)
}

// ∫_a^b s^{1/4} cos²(5s) ds with s = u⁴, which removes the root singularity.
fn root_term(a: f64, b: f64, panels: usize) -> f64 {
    let f = |u: f64| {
        let u4 = u * u * u * u;
        let c = (5.0 * u4).cos();
        4.0 * u4 * c * c
    };
    simpson(f, a.max(0.0).powf(0.25), b.powf(0.25), panels)
}

fn bump_total() -> f64 {
    static TOTAL: OnceLock<f64> = OnceLock::new();
    *TOTAL.get_or_init(|| root_term(0.0, 1.0, ROOT_PANELS_TOTAL) + 0.2 / 3.0 + 0.5)
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Sin2_4s => "sin2_4s",
            Builtin::SCos2_5sNormalized => "s_cos2_5s_normalized",
            Builtin::Arccos => "arccos",
            Builtin::QuarterCosBump => "quarter_cos_bump",
            Builtin::Uniform => "uniform",
        }
    }

    /// Whether the profile is a weight density with unit integral.
    pub fn is_normalized(self) -> bool {
        matches!(
            self,
            Builtin::SCos2_5sNormalized | Builtin::QuarterCosBump | Builtin::Uniform
        )
    }

    pub fn value(self, s: f64) -> f64 {
        match self {
            Builtin::Sin2_4s => (4.0 * s).sin().powi(2),
            Builtin::SCos2_5sNormalized => s * (5.0 * s).cos().powi(2) / s_cos2_total(),
            Builtin::Arccos => (2.0 * s - 1.0).clamp(-1.0, 1.0).acos() / PI,
            Builtin::QuarterCosBump => {
                (s.max(0.0).powf(0.25) * (5.0 * s).cos().powi(2) + 0.2 * s * s + 0.5) / bump_total()
            }
            Builtin::Uniform => 1.0,
        }
    }

    /// `∫_a^b` of the profile.
    pub fn integral(self, a: f64, b: f64) -> f64 {
        match self {
            Builtin::Sin2_4s => {
                let f = |s: f64| s / 2.0 - (8.0 * s).sin() / 16.0;
                f(b) - f(a)
            }
            Builtin::SCos2_5sNormalized => {
                (s_cos2_antiderivative(b) - s_cos2_antiderivative(a)) / s_cos2_total()
            }
            Builtin::Arccos => {
                let f = |s: f64| {
                    let u = (2.0 * s - 1.0).clamp(-1.0, 1.0);
                    (u * u.acos() - (1.0 - u * u).max(0.0).sqrt()) / (2.0 * PI)
                };
                f(b) - f(a)
            }
            Builtin::QuarterCosBump => {
                let poly = |s: f64| 0.2 * s * s * s / 3.0 + 0.5 * s;
                (root_term(a, b, ROOT_PANELS) + poly(b) - poly(a)) / bump_total()
            }
            Builtin::Uniform => b - a,
        }
    }
}

/// Scenario-level description of one initial profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Builtin(Builtin),
    /// Cell values of a piecewise-constant profile, cell-major.
    Table(Vec<f64>),
    /// As `table`, rescaled to unit integral.
    NormalizedTable(Vec<f64>),
}

/// Resolved initial profile.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Builtin(Builtin),
    Table(GridFunction),
}

impl Profile {
    pub fn resolve(spec: &ProfileSpec, dim: usize) -> Result<Profile> {
        let table = |v: &[f64]| -> Result<GridFunction> {
            if v.is_empty() || v.len() % dim != 0 {
                return Err(Error::config(format!(
                    "table of length {} does not hold whole points of dimension {dim}",
                    v.len()
                )));
            }
            GridFunction::new(dim, v.to_vec())
        };
        match spec {
            ProfileSpec::Builtin(b) => {
                if dim != 1 {
                    return Err(Error::config(format!(
                        "built-in profile {} is scalar but the scenario has dimension {dim}",
                        b.name()
                    )));
                }
                Ok(Profile::Builtin(*b))
            }
            ProfileSpec::Table(v) => table(v).map(Profile::Table),
            ProfileSpec::NormalizedTable(v) => {
                if dim != 1 {
                    return Err(Error::config("normalized tables are scalar weight profiles"));
                }
                let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
                if !(mean.is_finite() && mean > 0.0) {
                    return Err(Error::config("normalized table must have positive total"));
                }
                table(&v.iter().map(|x| x / mean).collect::<Vec<_>>()).map(Profile::Table)
            }
        }
    }

    /// Smallest and largest sampled value of the first component.
    pub fn range(&self, samples: usize) -> (f64, f64) {
        let d = self.dim();
        let mut buf = vec![0.0; d];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..=samples {
            self.eval(k as f64 / samples as f64, &mut buf);
            for v in &buf {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        (lo, hi)
    }
}

impl IndexFunction for Profile {
    fn dim(&self) -> usize {
        match self {
            Profile::Builtin(_) => 1,
            Profile::Table(g) => g.dim(),
        }
    }

    fn eval(&self, s: f64, out: &mut [f64]) {
        match self {
            Profile::Builtin(b) => out[0] = b.value(s),
            Profile::Table(g) => out.copy_from_slice(g.eval(s)),
        }
    }

    fn cell_average(&self, a: f64, b: f64, quad: Quadrature, out: &mut [f64]) {
        match self {
            Profile::Builtin(f) => out[0] = f.integral(a, b) / (b - a),
            Profile::Table(g) => g.cell_average(a, b, quad, out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::project_discrete;
    use approx::assert_abs_diff_eq;

    const ALL: [Builtin; 5] = [
        Builtin::Sin2_4s,
        Builtin::SCos2_5sNormalized,
        Builtin::Arccos,
        Builtin::QuarterCosBump,
        Builtin::Uniform,
    ];

    #[test]
    fn antiderivatives_match_quadrature() {
        for b in ALL {
            for (lo, hi) in [(0.0, 0.1), (0.3, 0.35), (0.9, 1.0), (0.0, 1.0)] {
                // Oracle: brute-force midpoint sum, independent of the closed forms.
                let n = 200_000;
                let h = (hi - lo) / n as f64;
                let brute: f64 = (0..n).map(|k| b.value(lo + (k as f64 + 0.5) * h)).sum::<f64>() * h;
                assert_abs_diff_eq!(b.integral(lo, hi), brute, epsilon = 2e-7 * (hi - lo).max(1e-3));
            }
        }
    }

    #[test]
    fn normalized_profiles_sum_to_n() {
        for b in ALL.into_iter().filter(|b| b.is_normalized()) {
            let p = Profile::Builtin(b);
            for n in [10, 20, 25, 50, 80, 100, 320, 400] {
                let v = project_discrete(&p, n, Quadrature::default()).unwrap();
                assert!((v.iter().sum::<f64>() - n as f64).abs() < 1e-8, "{} at N={n}", b.name());
            }
        }
    }

    #[test]
    fn known_values() {
        assert_abs_diff_eq!(Builtin::Arccos.value(0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(Builtin::Arccos.value(0.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(Builtin::Arccos.value(1.0), 0.0, epsilon = 1e-15);
        assert_eq!(Builtin::Sin2_4s.value(0.0), 0.0);
        assert_eq!(Builtin::SCos2_5sNormalized.value(0.0), 0.0);
    }

    #[test]
    fn tables() {
        let p = Profile::resolve(&ProfileSpec::NormalizedTable(vec![1.0, 3.0]), 1).unwrap();
        let v = project_discrete(&p, 4, Quadrature::default()).unwrap();
        assert_eq!(v, vec![0.5, 0.5, 1.5, 1.5]);
        assert!(Profile::resolve(&ProfileSpec::Table(vec![1.0, 2.0, 3.0]), 2).is_err());
        assert!(Profile::resolve(&ProfileSpec::Builtin(Builtin::Arccos), 2).is_err());
        let spec: ProfileSpec = serde_json::from_str(r#"{"builtin":"sin2_4s"}"#).unwrap();
        assert_eq!(spec, ProfileSpec::Builtin(Builtin::Sin2_4s));
        assert!(serde_json::from_str::<ProfileSpec>(r#"{"builtin":"sin3"}"#).is_err());
    }
}
