//! Piecewise-constant functions on the index interval `I = [0, 1]`, the
//! cell-average projection and piecewise-constant embedding between vectors
//! and functions, and the norms used by every convergence statement.
//!
//! Cell `i` (zero-based) covers `[i/N, (i+1)/N)`; the point `s = 1` belongs to
//! the last cell so that evaluation is total on `[0, 1]`.

use crate::error::{Error, Result};

/// Composite Simpson rule applied inside each cell when averaging a function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quadrature {
    /// Number of Simpson sub-intervals per cell. Rounded up to an even count.
    pub subintervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { subintervals: 32 }
    }
}

impl Quadrature {
    pub fn new(subintervals: usize) -> Self {
        Quadrature { subintervals }
    }

    fn panels(&self) -> usize {
        let q = self.subintervals.max(2);
        q + q % 2
    }
}

/// Composite Simpson integral of `f` on `[a, b]` with `n` (even) sub-intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(2) + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// A function on the index interval with values in `R^d`.
///
/// `cell_average` defaults to composite Simpson; implementors with a known
/// antiderivative or an endpoint singularity override it.
pub trait IndexFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, s: f64, out: &mut [f64]);

    /// Average of the function over `[a, b]`, written to `out`.
    fn cell_average(&self, a: f64, b: f64, quad: Quadrature, out: &mut [f64]) {
        let d = self.dim();
        let n = quad.panels();
        let h = (b - a) / n as f64;
        let mut buf = vec![0.0; d];
        out.iter_mut().for_each(|o| *o = 0.0);
        for k in 0..=n {
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            self.eval(a + k as f64 * h, &mut buf);
            for (o, v) in out.iter_mut().zip(&buf) {
                *o += w * v;
            }
        }
        let norm = 3.0 * n as f64;
        out.iter_mut().for_each(|o| *o /= norm);
    }
}

/// Adapter turning a scalar closure into an [`IndexFunction`].
pub struct ScalarFn<F>(pub F);

impl<F: Fn(f64) -> f64 + Send + Sync> IndexFunction for ScalarFn<F> {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, s: f64, out: &mut [f64]) {
        out[0] = (self.0)(s);
    }
}

/// Piecewise-constant function on a uniform grid of `I`, valued in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    dim: usize,
    values: Vec<f64>,
}

impl GridFunction {
    /// `values` is laid out cell-major: cell `i` owns `values[i*dim..(i+1)*dim]`.
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("grid function dimension must be at least 1"));
        }
        if values.is_empty() {
            return Err(Error::invalid("grid function needs at least one cell"));
        }
        if values.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "{} values do not split into cells of dimension {dim}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "grid value",
                index: i / dim,
            });
        }
        Ok(GridFunction { dim, values })
    }

    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn constant(cells: usize, value: &[f64]) -> Result<Self> {
        let values = (0..cells).flat_map(|_| value.iter().copied()).collect();
        Self::new(value.len(), values)
    }

    pub(crate) fn from_raw(dim: usize, values: Vec<f64>) -> Self {
        debug_assert!(dim > 0 && !values.is_empty() && values.len() % dim == 0);
        GridFunction { dim, values }
    }

    pub fn cells(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn cell(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Index of the cell containing `s`, clamped to `[0, 1]`.
    pub fn cell_of(&self, s: f64) -> usize {
        let n = self.cells();
        let i = (s.clamp(0.0, 1.0) * n as f64).floor() as usize;
        i.min(n - 1)
    }

    pub fn eval(&self, s: f64) -> &[f64] {
        self.cell(self.cell_of(s))
    }

    /// Exact refinement: every cell is split into `factor` equal cells.
    pub fn refine(&self, factor: usize) -> GridFunction {
        let factor = factor.max(1);
        let mut values = Vec::with_capacity(self.values.len() * factor);
        for i in 0..self.cells() {
            for _ in 0..factor {
                values.extend_from_slice(self.cell(i));
            }
        }
        GridFunction::from_raw(self.dim, values)
    }

    /// `∫_I f ds`, one entry per component.
    pub fn integral(&self) -> Vec<f64> {
        let n = self.cells() as f64;
        let mut out = vec![0.0; self.dim];
        for i in 0..self.cells() {
            for (o, v) in out.iter_mut().zip(self.cell(i)) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o /= n);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

impl IndexFunction for GridFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, s: f64, out: &mut [f64]) {
        out.copy_from_slice(GridFunction::eval(self, s));
    }

    /// Exact average of the piecewise-constant function.
    fn cell_average(&self, a: f64, b: f64, _quad: Quadrature, out: &mut [f64]) {
        let n = self.cells() as f64;
        let lo = ((a * n + 1e-9).floor().max(0.0) as usize).min(self.cells() - 1);
        let hi = (((b * n - 1e-9).ceil() as usize).max(1) - 1).min(self.cells() - 1);
        if lo >= hi {
            out.copy_from_slice(self.cell(lo));
            return;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in lo..=hi {
            let cl = (i as f64 / n).max(a);
            let ch = ((i + 1) as f64 / n).min(b);
            let len = (ch - cl).max(0.0);
            for (o, v) in out.iter_mut().zip(self.cell(i)) {
                *o += v * len;
            }
        }
        let width = b - a;
        out.iter_mut().for_each(|o| *o /= width);
    }
}

/// Cell averages `N ∫_{cell i} f` for `i = 0..N`, laid out cell-major.
pub fn project_discrete(f: &dyn IndexFunction, cells: usize, quad: Quadrature) -> Result<Vec<f64>> {
    if cells == 0 {
        return Err(Error::invalid("projection needs at least one cell"));
    }
    let d = f.dim();
    let n = cells as f64;
    let mut out = vec![0.0; cells * d];
    for (i, chunk) in out.chunks_mut(d).enumerate() {
        let a = i as f64 / n;
        let b = (i + 1) as f64 / n;
        f.cell_average(a, b, quad, chunk);
        for v in chunk.iter_mut() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "projected function sample",
                    index: i,
                });
            }
        }
    }
    Ok(out)
}

/// Piecewise-constant embedding of a cell-major vector.
pub fn embed_piecewise(values: &[f64], dim: usize) -> Result<GridFunction> {
    GridFunction::new(dim, values.to_vec())
}

/// `‖P_c P_d f − f‖_{L²(I)}`, integrated with Simpson inside each cell.
pub fn projection_error(f: &dyn IndexFunction, cells: usize, quad: Quadrature) -> Result<f64> {
    let proj = project_discrete(f, cells, quad)?;
    let d = f.dim();
    let n = cells as f64;
    let panels = quad.panels();
    let mut buf = vec![0.0; d];
    let mut total = 0.0;
    for (i, v) in proj.chunks(d).enumerate() {
        let a = i as f64 / n;
        let h = 1.0 / (n * panels as f64);
        let mut acc = 0.0;
        for k in 0..=panels {
            let w = if k == 0 || k == panels {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            f.eval(a + k as f64 * h, &mut buf);
            let sq: f64 = buf.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum();
            acc += w * sq;
        }
        total += acc * h / 3.0;
    }
    Ok(total.max(0.0).sqrt())
}

fn check_same_dim(f: &GridFunction, g: &GridFunction) -> Result<()> {
    if f.dim != g.dim {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            f.dim, g.dim
        )));
    }
    Ok(())
}

/// Walks the common refinement of two uniform grids, yielding
/// `(cell of f, cell of g, length)` for every piece.
fn common_refinement(nf: usize, ng: usize, mut visit: impl FnMut(usize, usize, f64)) {
    // Boundaries i/nf and j/ng compared as integers over nf*ng.
    let (nf64, ng64) = (nf as u128, ng as u128);
    let denom = (nf64 * ng64) as f64;
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev: u128 = 0;
    while i < nf && j < ng {
        let bf = (i as u128 + 1) * ng64;
        let bg = (j as u128 + 1) * nf64;
        let next = bf.min(bg);
        visit(i, j, (next - prev) as f64 / denom);
        prev = next;
        if bf == next {
            i += 1;
        }
        if bg == next {
            j += 1;
        }
    }
}

/// `(∫_I ‖f − g‖² ds)^{1/2}`, exact on the common refinement of both grids.
pub fn l2_distance(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    check_same_dim(f, g)?;
    let mut total = 0.0;
    common_refinement(f.cells(), g.cells(), |i, j, len| {
        let sq: f64 = f
            .cell(i)
            .iter()
            .zip(g.cell(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        total += sq * len;
    });
    Ok(total.sqrt())
}

/// Essential supremum of `‖f − g‖` (max over the pieces of the refinement).
pub fn linf_distance(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    check_same_dim(f, g)?;
    let mut worst = 0.0_f64;
    common_refinement(f.cells(), g.cells(), |i, j, _| {
        let sq: f64 = f
            .cell(i)
            .iter()
            .zip(g.cell(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        worst = worst.max(sq.sqrt());
    });
    Ok(worst)
}

/// Distances between two time series of grid functions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormReport {
    /// `L²(I)` distance at the final sampled time.
    pub l2_index: f64,
    /// Supremum over sampled times of the `L²(I)` distance.
    pub sup_time_l2: f64,
    /// Supremum over sampled times of the cell-wise maximum distance.
    pub linf_index: f64,
}

impl NormReport {
    pub fn from_series<'a>(
        pairs: impl IntoIterator<Item = (&'a GridFunction, &'a GridFunction)>,
    ) -> Result<Self> {
        let mut report = NormReport::default();
        for (f, g) in pairs {
            let l2 = l2_distance(f, g)?;
            report.l2_index = l2;
            report.sup_time_l2 = report.sup_time_l2.max(l2);
            report.linf_index = report.linf_index.max(linf_distance(f, g)?);
        }
        Ok(report)
    }
}

/// Opinions and weights of `N` agents at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentEnsemble {
    pub dim: usize,
    /// Agent-major: agent `i` owns `positions[i*dim..(i+1)*dim]`.
    pub positions: Vec<f64>,
    pub weights: Vec<f64>,
    pub time: f64,
}

impl AgentEnsemble {
    pub fn new(dim: usize, positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("opinion dimension must be at least 1"));
        }
        if weights.is_empty() {
            return Err(Error::invalid("ensemble needs at least one agent"));
        }
        if positions.len() != weights.len() * dim {
            return Err(Error::invalid(format!(
                "{} position values for {} agents of dimension {dim}",
                positions.len(),
                weights.len()
            )));
        }
        if let Some(i) = positions.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "opinion",
                index: i / dim,
            });
        }
        if let Some(i) = weights.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "weight",
                index: i,
            });
        }
        Ok(AgentEnsemble {
            dim,
            positions,
            weights,
            time: 0.0,
        })
    }

    /// Projects `x0`, `m0` onto `n` agents with [`project_discrete`].
    pub fn from_initial_data(
        x0: &dyn IndexFunction,
        m0: &dyn IndexFunction,
        n: usize,
        quad: Quadrature,
    ) -> Result<Self> {
        if m0.dim() != 1 {
            return Err(Error::invalid("weight profile must be scalar"));
        }
        let positions = project_discrete(x0, n, quad)?;
        let weights = project_discrete(m0, n, quad)?;
        Self::new(x0.dim(), positions, weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `P_c^N` of the opinions.
    pub fn position_field(&self) -> GridFunction {
        GridFunction::from_raw(self.dim, self.positions.clone())
    }

    /// `P_c^N` of the weights.
    pub fn weight_field(&self) -> GridFunction {
        GridFunction::from_raw(1, self.weights.clone())
    }
}
