use std::cmp::Ordering;
use std::io::Write;

use crate::csv;
use crate::error::{Error, Result};
use crate::graph::{quadrature_weights, FieldPair, SpaceQuadrature};
use crate::grid::AgentEnsemble;
use crate::kernels::InteractionKernel;
use crate::mass::{SourceKernel, DEFAULT_COST_CAP};
use crate::micro::interaction_sum;

/// Finite sum of weighted Dirac masses in `R^d`.
///
/// Atom masses are stored as raw values times a common `scale` (`1/N` for an
/// empirical measure), and atoms are kept sorted with co-located atoms
/// merged. Two measures built from relabelled or regrouped ensembles
/// therefore have bit-identical representations.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleMeasure {
    dim: usize,
    locations: Vec<f64>,
    raw: Vec<f64>,
    scale: f64,
}

fn cmp_loc(a: &[f64], b: &[f64]) -> Ordering {
    for (p, q) in a.iter().zip(b) {
        match p.total_cmp(q) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

impl ParticleMeasure {
    /// `Σ_i masses[i] δ_{locations[i]}`.
    pub fn new(dim: usize, locations: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        Self::with_scale(dim, locations, masses, 1.0)
    }

    /// `scale · Σ_i raw[i] δ_{locations[i]}`.
    pub fn with_scale(dim: usize, locations: Vec<f64>, raw: Vec<f64>, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("measure dimension must be at least 1"));
        }
        if locations.len() != raw.len() * dim {
            return Err(Error::invalid(format!(
                "{} coordinates for {} atoms of dimension {dim}",
                locations.len(),
                raw.len()
            )));
        }
        if let Some(i) = locations.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "atom location",
                index: i / dim,
            });
        }
        if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "atom mass",
                index: i,
            });
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid(format!("mass scale must be positive, got {scale}")));
        }
        let n = raw.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| cmp_loc(&locations[i * dim..(i + 1) * dim], &locations[j * dim..(j + 1) * dim]));
        let mut locs = Vec::with_capacity(n * dim);
        let mut masses = Vec::with_capacity(n);
        let mut k = 0;
        let mut group = Vec::new();
        while k < n {
            let head = &locations[order[k] * dim..(order[k] + 1) * dim];
            group.clear();
            let mut end = k;
            while end < n && &locations[order[end] * dim..(order[end] + 1) * dim] == head {
                group.push(raw[order[end]]);
                end += 1;
            }
            locs.extend_from_slice(head);
            masses.push(Self::canonical_sum(&mut group));
            k = end;
        }
        Ok(ParticleMeasure {
            dim,
            locations: locs,
            raw: masses,
            scale,
        })
    }

    /// Sum in ascending order, so the result does not depend on the order
    /// of the input.
    pub fn canonical_sum(values: &mut [f64]) -> f64 {
        values.sort_by(f64::total_cmp);
        values.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of distinct atom locations.
    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn location(&self, i: usize) -> &[f64] {
        &self.locations[i * self.dim..(i + 1) * self.dim]
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.raw[i] * self.scale
    }

    pub fn masses(&self) -> Vec<f64> {
        self.raw.iter().map(|r| r * self.scale).collect()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn total_mass(&self) -> f64 {
        let mut r = self.raw.clone();
        Self::canonical_sum(&mut r) * self.scale
    }

    /// Some atom carries negative mass.
    pub fn is_signed(&self) -> bool {
        self.raw.iter().any(|&r| r < 0.0)
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.len()).map(|i| self.mass(i) * f(self.location(i))).sum()
    }

    /// CSV `location,mass`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut header = if self.dim == 1 {
            vec!["location".to_string()]
        } else {
            (1..=self.dim).map(|c| format!("location_{c}")).collect()
        };
        header.push("mass".into());
        csv::write_row(w, header)?;
        for i in 0..self.len() {
            let row = self
                .location(i)
                .iter()
                .map(|v| csv::float(*v))
                .chain(std::iter::once(csv::float(self.mass(i))));
            csv::write_row(w, row)?;
        }
        Ok(())
    }
}

/// Cell-averaged density on a bounded interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub lo: f64,
    pub hi: f64,
    pub density: Vec<f64>,
    pub time: f64,
}

impl DensityGrid {
    pub fn new(lo: f64, hi: f64, density: Vec<f64>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("invalid density domain [{lo}, {hi}]")));
        }
        if density.is_empty() {
            return Err(Error::invalid("density grid needs at least one cell"));
        }
        if let Some(i) = density.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "density cell",
                index: i,
            });
        }
        Ok(DensityGrid {
            lo,
            hi,
            density,
            time: 0.0,
        })
    }

    pub fn cells(&self) -> usize {
        self.density.len()
    }

    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / self.cells() as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        self.lo + (j as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells()).map(|j| self.center(j)).collect()
    }

    /// Mass per cell, `ρ_j Δx`.
    pub fn cell_masses(&self) -> Vec<f64> {
        let dx = self.dx();
        self.density.iter().map(|r| r * dx).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.dx()
    }

    /// `∫ max(−ρ, 0)`, the mass of the undershoot below zero.
    pub fn negative_mass(&self) -> f64 {
        self.density.iter().map(|r| (-r).max(0.0)).sum::<f64>() * self.dx()
    }

    pub fn total_variation(&self) -> f64 {
        self.density.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// `∫ x ρ dx` by the midpoint rule.
    pub fn first_moment(&self) -> f64 {
        self.density
            .iter()
            .enumerate()
            .map(|(j, r)| r * self.center(j))
            .sum::<f64>()
            * self.dx()
    }

    /// Atoms of mass `ρ_j Δx` at the cell centres.
    pub fn to_atoms(&self) -> Result<ParticleMeasure> {
        ParticleMeasure::new(1, self.centers(), self.cell_masses())
    }

    /// CSV `x_center,density`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        csv::write_row(w, ["x_center".to_string(), "density".to_string()])?;
        for (j, r) in self.density.iter().enumerate() {
            csv::write_row(w, [csv::float(self.center(j)), csv::float(*r)])?;
        }
        Ok(())
    }
}

/// Either kind of measure, for the operations defined on both.
#[derive(Debug, Clone, Copy)]
pub enum MeasureRef<'a> {
    Atoms(&'a ParticleMeasure),
    Density(&'a DensityGrid),
}

impl<'a> From<&'a ParticleMeasure> for MeasureRef<'a> {
    fn from(p: &'a ParticleMeasure) -> Self {
        MeasureRef::Atoms(p)
    }
}

impl<'a> From<&'a DensityGrid> for MeasureRef<'a> {
    fn from(d: &'a DensityGrid) -> Self {
        MeasureRef::Density(d)
    }
}

/// `μ^N = (1/N) Σ_i m_i δ_{x_i}`.
pub fn empirical_measure(e: &AgentEnsemble) -> Result<ParticleMeasure> {
    ParticleMeasure::with_scale(e.dim, e.positions.clone(), e.weights.clone(), 1.0 / e.len() as f64)
}

/// `μ̃ = ∫_I m(s) δ_{x(s)} ds` for piecewise-constant fields: atoms
/// `(x_i, m_i / N)`.
pub fn pushforward_measure(fp: &FieldPair) -> Result<ParticleMeasure> {
    ParticleMeasure::with_scale(fp.dim(), fp.x.values().to_vec(), fp.m.values().to_vec(), 1.0 / fp.cells() as f64)
}

/// Pushforward with the index integral taken by `quad`: atoms
/// `(x_i, w_i m_i)`.
pub fn pushforward_weighted(fp: &FieldPair, quad: SpaceQuadrature) -> Result<ParticleMeasure> {
    match quad {
        SpaceQuadrature::GridAligned => pushforward_measure(fp),
        SpaceQuadrature::Simpson => {
            let w = quadrature_weights(fp.cells(), quad);
            let raw = w.iter().zip(fp.m.values()).map(|(w, m)| w * m).collect();
            ParticleMeasure::new(fp.dim(), fp.x.values().to_vec(), raw)
        }
    }
}

/// Step-function density of `pm` on `n` equal cells of `[lo, hi]`; the
/// right end point belongs to the last cell.
pub fn bin_density(pm: &ParticleMeasure, lo: f64, hi: f64, n: usize) -> Result<DensityGrid> {
    if pm.dim() != 1 {
        return Err(Error::Measure("binning is defined for one-dimensional measures".into()));
    }
    if n == 0 {
        return Err(Error::invalid("binning needs at least one cell"));
    }
    let mut grid = DensityGrid::new(lo, hi, vec![0.0; n])?;
    let dx = grid.dx();
    let mut mass = vec![0.0; n];
    for i in 0..pm.len() {
        let x = pm.location(i)[0];
        if !(lo..=hi).contains(&x) {
            return Err(Error::Measure(format!("atom at {x} lies outside [{lo}, {hi}]")));
        }
        let j = (((x - lo) / dx).floor() as usize).min(n - 1);
        mass[j] += pm.mass(i);
    }
    for (r, m) in grid.density.iter_mut().zip(mass) {
        *r = m / dx;
    }
    Ok(grid)
}

/// `V[μ](x) = ∫ φ(y − x) dμ(y)`; cells of a density use the midpoint rule.
pub fn velocity_field<'a>(mu: impl Into<MeasureRef<'a>>, kernel: &InteractionKernel, x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut out = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut v = vec![0.0; d];
    let mut add = |loc: &[f64], mass: f64| {
        for c in 0..d {
            y[c] = loc[c] - x[c];
        }
        kernel.eval_into(&y, &mut v);
        for c in 0..d {
            out[c] += mass * v[c];
        }
    };
    match mu.into() {
        MeasureRef::Atoms(p) => {
            for i in 0..p.len() {
                add(p.location(i), p.mass(i));
            }
        }
        MeasureRef::Density(g) => {
            let dx = g.dx();
            for (j, r) in g.density.iter().enumerate() {
                add(&[g.center(j)], r * dx);
            }
        }
    }
    out
}

/// `V[μ]` at every atom of `pm`, in atom order.
pub fn velocity_at_atoms(pm: &ParticleMeasure, kernel: &InteractionKernel) -> Vec<f64> {
    let mut out = vec![0.0; pm.locations().len()];
    interaction_sum(kernel, pm.dim(), pm.locations(), &pm.masses(), 1.0, &mut out);
    out
}

/// `h[μ] = σ μ` with `σ(x) = ∫ S(x, y_1, …, y_k) dμ(y_1)…dμ(y_k)`.
///
/// For atoms the result is the rate of each atom's mass; for a density it
/// is the rate density in each cell.
pub fn source_term<'a>(mu: impl Into<MeasureRef<'a>>, source: &SourceKernel) -> Result<Vec<f64>> {
    match mu.into() {
        MeasureRef::Atoms(p) => {
            let masses = p.masses();
            let sigma = source.integrate_at_support(p.dim(), p.locations(), &masses, DEFAULT_COST_CAP)?;
            Ok(masses.iter().zip(&sigma).map(|(m, s)| m * s).collect())
        }
        MeasureRef::Density(g) => {
            let sigma = source.integrate_at_support(1, &g.centers(), &g.cell_masses(), DEFAULT_COST_CAP)?;
            Ok(g.density.iter().zip(&sigma).map(|(r, s)| r * s).collect())
        }
    }
}

/// Piecewise description of a one-dimensional cumulative distribution:
/// jumps at `points`, constant density on `[points[k], points[k+1])`.
struct Profile {
    points: Vec<f64>,
    jumps: Vec<f64>,
    density: Vec<f64>,
    /// Distribution function just left of each point.
    left: Vec<f64>,
}

impl Profile {
    fn of(mu: MeasureRef<'_>, signed_ok: bool) -> Result<(Profile, f64)> {
        let (points, jumps, density, scale) = match mu {
            MeasureRef::Atoms(p) => {
                if p.dim() != 1 {
                    return Err(Error::Refused("W1 is implemented for one-dimensional measures only".into()));
                }
                if p.is_signed() && !signed_ok {
                    return Err(Error::Refused("W1 of a signed measure".into()));
                }
                (p.locations().to_vec(), p.raw.clone(), vec![0.0; p.len()], p.scale)
            }
            MeasureRef::Density(g) => {
                if let Some(j) = g.density.iter().position(|&r| r < 0.0).filter(|_| !signed_ok) {
                    return Err(Error::Refused(format!(
                        "W1 of a signed density (cell {j} holds {:e})",
                        g.density[j]
                    )));
                }
                let n = g.cells();
                let dx = g.dx();
                let mut pts: Vec<f64> = (0..n).map(|j| g.lo + j as f64 * dx).collect();
                pts.push(g.hi);
                let mut dens = g.density.clone();
                dens.push(0.0);
                (pts, vec![0.0; n + 1], dens, 1.0)
            }
        };
        let mut left = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for k in 0..points.len() {
            left.push(acc);
            acc += jumps[k];
            if k + 1 < points.len() {
                acc += density[k] * (points[k + 1] - points[k]);
            }
        }
        Ok((
            Profile {
                points,
                jumps,
                density,
                left,
            },
            scale,
        ))
    }

    fn total(&self) -> f64 {
        let k = self.points.len() - 1;
        self.left[k] + self.jumps[k]
    }
}

/// `∫ |a + (b − a) u| du` over `[0, 1]`, times `h`.
fn abs_linear_integral(a: f64, b: f64, h: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        0.0
    } else if (a >= 0.0) == (b >= 0.0) || a == 0.0 || b == 0.0 {
        0.5 * (a.abs() + b.abs()) * h
    } else {
        0.5 * (a * a + b * b) / (a.abs() + b.abs()) * h
    }
}

/// Exact Wasserstein-1 distance `∫ |F_a − F_b|` of two non-negative
/// one-dimensional measures of equal mass.
pub fn wasserstein1<'a, 'b>(a: impl Into<MeasureRef<'a>>, b: impl Into<MeasureRef<'b>>) -> Result<f64> {
    cdf_distance(a.into(), b.into(), false)
}

/// Kantorovich–Rubinstein distance `sup_{Lip f ≤ 1} ∫ f d(a − b) = ∫ |F_a − F_b|`
/// of two one-dimensional measures of equal mass, which may be signed.
/// Agrees with [`wasserstein1`] on non-negative inputs; meant for comparing
/// with solutions of schemes that undershoot below zero.
pub fn flat_distance<'a, 'b>(a: impl Into<MeasureRef<'a>>, b: impl Into<MeasureRef<'b>>) -> Result<f64> {
    cdf_distance(a.into(), b.into(), true)
}

fn cdf_distance(a: MeasureRef<'_>, b: MeasureRef<'_>, signed_ok: bool) -> Result<f64> {
    let (pa, sa) = Profile::of(a, signed_ok)?;
    let (pb, sb) = Profile::of(b, signed_ok)?;
    // Shared scale: compare raw masses and rescale once, so that identical
    // atom sets give exactly zero.
    let (pa, pb, scale) = if sa == sb {
        (pa, pb, sa)
    } else {
        (rescale(pa, sa), rescale(pb, sb), 1.0)
    };
    let (ma, mb) = (pa.total() * scale, pb.total() * scale);
    if (ma - mb).abs() > 1e-8 * ma.abs().max(mb.abs()).max(1.0) {
        return Err(Error::Refused(format!(
            "W1 needs equal total masses, got {ma} and {mb}"
        )));
    }

    let mut points: Vec<f64> = pa.points.iter().chain(&pb.points).copied().collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    let (mut ia, mut ib) = (0usize, 0usize);
    let (mut fa, mut fb) = (0.0, 0.0);
    let (mut da, mut db) = (0.0, 0.0);
    let mut total = 0.0;
    for k in 0..points.len() {
        let p = points[k];
        if ia < pa.points.len() && pa.points[ia] == p {
            fa = pa.left[ia] + pa.jumps[ia];
            da = pa.density[ia];
            ia += 1;
        }
        if ib < pb.points.len() && pb.points[ib] == p {
            fb = pb.left[ib] + pb.jumps[ib];
            db = pb.density[ib];
            ib += 1;
        }
        if k + 1 < points.len() {
            let h = points[k + 1] - p;
            let d0 = fa - fb;
            let d1 = d0 + (da - db) * h;
            total += abs_linear_integral(d0, d1, h);
            fa += da * h;
            fb += db * h;
        }
    }
    Ok(total * scale)
}

fn rescale(mut p: Profile, s: f64) -> Profile {
    for v in p.jumps.iter_mut().chain(p.density.iter_mut()).chain(p.left.iter_mut()) {
        *v *= s;
    }
    p
}
