//! Solving dη = ω on a surface: a bump partition of unity subordinate to a
//! cover by chart boxes, the Poincaré lemma with compact supports on one box,
//! and the induction along a chain of overlapping cells.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use alloc::collections::BTreeMap;

use crate::atlas::{box_contains, position_env, Atlas, Interval};
use crate::expr::{EvalError, Expression};
use crate::globalize::{Construction, GlobalizeError};
use crate::jet::{JetPoint, Lagrangian};
use crate::lagrange::{euler_lagrange, euler_lagrange_numeric, LagrangeError};
use crate::num::{abs, exp};
use crate::quad;
use crate::sample::JetSampler;
use crate::varcheck::{CheckOptions, SourceForm};

/// Scalar coefficient of a 2-form (or any function) on a chart box.
pub type Density = Arc<dyn Fn([f64; 2]) -> Result<f64, EvalError> + Send + Sync>;

/// Why the last cell kept a nonzero mass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagnosis {
    /// Enlarging the last cell changed its mass: part of supp ω lies outside
    /// the cover.
    CoverTruncation,
    /// The mass is insensitive to the last cell: ∫ω ≠ 0 over a closed
    /// orientable surface, so ω is not exact.
    NonzeroCohomology,
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Diagnosis::CoverTruncation => "cover truncation",
            Diagnosis::NonzeroCohomology => "nonzero de Rham class",
        })
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CohomologyError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Globalize(#[from] GlobalizeError),
    #[error(transparent)]
    Lagrange(#[from] LagrangeError),
    #[error("cover has no cells")]
    EmptyCover,
    #[error("cell {cell}: unknown chart index {chart}")]
    UnknownChart { cell: usize, chart: usize },
    #[error("cell {cell}: box must be finite, nonempty and compactly inside its chart")]
    CellOutsideChart { cell: usize },
    #[error("cell {cell}: bump scale must lie in (0, 1]")]
    BumpScale { cell: usize },
    #[error("cell {cell}: successor must be a later cell")]
    BadSuccessor { cell: usize },
    #[error("cells {from} and {to} do not overlap")]
    NoOverlap { from: usize, to: usize },
    #[error("overlap of cells {from} and {to} is not a coordinate box in the chart of {from}")]
    IrregularOverlap { from: usize, to: usize },
    #[error("one ω coefficient per chart expected: got {given}, atlas has {expected}")]
    ChartCount { given: usize, expected: usize },
    #[error("density does not vanish on the box boundary (|ρ| = {value:e} at {point:?})")]
    SupportViolation { value: f64, point: [f64; 2] },
    #[error("compactly supported primitive needs zero total mass, got {mass:e}")]
    NonzeroMass { mass: f64 },
    #[error("ω is not exact on the cover: last cell keeps mass {c_last:e} ({diagnosis})")]
    Obstruction { c_last: f64, masses: Vec<f64>, diagnosis: Diagnosis },
}

/// ∫₋₁¹ exp(−1/(1 − u²)) du.
pub const BUMP_MASS: f64 = 0.443_993_816_168_079_4;

/// exp(−1/(1 − u²)) on (−1, 1), zero elsewhere.
pub fn bump(u: f64) -> f64 {
    if abs(u) < 1.0 {
        exp(-1.0 / (1.0 - u * u))
    } else {
        0.0
    }
}

/// Unit-mass bump supported in an interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitBump {
    pub center: f64,
    pub half: f64,
}

impl UnitBump {
    pub fn on(i: Interval) -> UnitBump {
        UnitBump { center: i.center(), half: 0.5 * i.width() }
    }

    pub fn density(&self, x: f64) -> f64 {
        bump((x - self.center) / self.half) / (self.half * BUMP_MASS)
    }

    /// ∫ from the left end to x.
    pub fn cumulative(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.half;
        if u <= -1.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else {
            let v: Result<f64, core::convert::Infallible> = quad::composite(|s| Ok(bump(s)), -1.0, u, 16);
            v.unwrap_or(0.0) / BUMP_MASS
        }
    }
}

/// Quadrature resolution and tolerances of the compact Poincaré lemma.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoincareOptions {
    /// 16-point panels across the box in each direction, before refinement.
    pub panels: usize,
    /// Panels across each dense feature.
    pub dense_panels: usize,
    pub mass_tol: f64,
    pub boundary_tol: f64,
}

impl Default for PoincareOptions {
    fn default() -> Self {
        PoincareOptions { panels: 16, dense_panels: 16, mass_tol: 1e-8, boundary_tol: 1e-10 }
    }
}

/// A box whose edges are breakpoints of the quadrature; a dense feature
/// also gets at least `dense_panels` panels across it. Bump supports must
/// be features for the integrals to converge quickly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Feature {
    pub region: [Interval; 2],
    pub dense: bool,
}

/// Composite rule on an interval, split at breakpoints.
#[derive(Clone, Debug)]
struct Panels {
    bounds: Vec<(f64, f64)>,
}

impl Panels {
    fn new(span: Interval, features: &[(Interval, bool)], opts: &PoincareOptions) -> Panels {
        let tiny = 1e-12 * span.width();
        let mut cuts = vec![span.lo, span.hi];
        for (i, _) in features {
            for c in [i.lo, i.hi] {
                if c > span.lo + tiny && c < span.hi - tiny {
                    cuts.push(c);
                }
            }
        }
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup_by(|a, b| (*a - *b).abs() <= tiny);
        let mut bounds = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut n = libm::ceil(opts.panels as f64 * (b - a) / span.width()) as usize;
            let mid = 0.5 * (a + b);
            for (i, dense) in features {
                if *dense && i.contains(mid) {
                    n = n.max(libm::ceil(opts.dense_panels as f64 * (b - a) / i.width()) as usize);
                }
            }
            let n = n.max(1);
            let h = (b - a) / n as f64;
            for k in 0..n {
                let lo = a + k as f64 * h;
                bounds.push((lo, if k + 1 == n { b } else { lo + h }));
            }
        }
        Panels { bounds }
    }

    /// ∫ over the whole interval.
    fn integrate(&self, mut f: impl FnMut(f64) -> Result<f64, EvalError>) -> Result<f64, EvalError> {
        let mut total = 0.0;
        for &(a, b) in &self.bounds {
            total += quad::composite(&mut f, a, b, 1)?;
        }
        Ok(total)
    }

    /// (∫ from the left end to `upto`, ∫ over the whole interval).
    fn integrate_split(&self, mut f: impl FnMut(f64) -> Result<f64, EvalError>, upto: f64) -> Result<(f64, f64), EvalError> {
        let (mut partial, mut total) = (0.0, 0.0);
        for &(a, b) in &self.bounds {
            let v = quad::composite(&mut f, a, b, 1)?;
            if b <= upto {
                partial += v;
            } else if a < upto {
                partial += quad::composite(&mut f, a, upto, 1)?;
            }
            total += v;
        }
        Ok((partial, total))
    }
}

/// Row integrals F(y) = ∫ρ(u, y)du at the quadrature nodes of each y panel,
/// with the running primitive at each panel start.
#[derive(Clone, Debug)]
struct RowTable {
    panels: Vec<(f64, f64)>,
    values: Vec<[f64; 16]>,
    starts: Vec<f64>,
    total: f64,
}

struct Nodes {
    unit: [(f64, f64); 16],
    bary: [f64; 16],
}

fn nodes() -> Nodes {
    let rule = quad::rule(-1.0, 1.0, 1);
    let mut unit = [(0.0, 0.0); 16];
    unit.copy_from_slice(&rule);
    let mut bary = [0.0; 16];
    for i in 0..16 {
        let mut prod = 1.0;
        for j in 0..16 {
            if i != j {
                prod *= unit[i].0 - unit[j].0;
            }
        }
        bary[i] = 1.0 / prod;
    }
    Nodes { unit, bary }
}

impl RowTable {
    fn build(f: &dyn Fn([f64; 2]) -> Result<f64, EvalError>, xs: &Panels, ys: &Panels) -> Result<RowTable, EvalError> {
        let n = nodes();
        let mut values = Vec::with_capacity(ys.bounds.len());
        let mut starts = Vec::with_capacity(ys.bounds.len());
        let mut total = 0.0;
        for &(lo, hi) in &ys.bounds {
            let half = 0.5 * (hi - lo);
            let mut row = [0.0; 16];
            let mut sum = 0.0;
            for (i, &(u, w)) in n.unit.iter().enumerate() {
                let y = lo + half * (u + 1.0);
                row[i] = xs.integrate(|x| f([x, y]))?;
                sum += w * row[i];
            }
            starts.push(total);
            values.push(row);
            total += half * sum;
        }
        Ok(RowTable { panels: ys.bounds.clone(), values, starts, total })
    }

    fn combine(&self, other: &RowTable, k: f64) -> RowTable {
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            for (x, y) in a.iter_mut().zip(b) {
                *x -= k * y;
            }
        }
        for (a, b) in out.starts.iter_mut().zip(&other.starts) {
            *a -= k * b;
        }
        out.total -= k * other.total;
        out
    }

    /// g(y) = ∫ from the bottom edge to y of F, using the degree-15
    /// interpolant of F on the panel containing y.
    fn primitive(&self, n: &Nodes, y: f64) -> f64 {
        let k = self.panels.partition_point(|p| p.1 <= y);
        if k >= self.panels.len() {
            return self.total;
        }
        let (lo, hi) = self.panels[k];
        if y <= lo {
            return self.starts[k];
        }
        // Interpolant in the panel variable t ∈ [−1, 1], integrated over
        // [−1, top].
        let top = 2.0 * (y - lo) / (hi - lo) - 1.0;
        let half = 0.5 * (top + 1.0);
        let mut acc = 0.0;
        for &(u, w) in &n.unit {
            acc += w * interpolate(n, &self.values[k], -1.0 + half * (u + 1.0));
        }
        self.starts[k] + 0.5 * (hi - lo) * half * acc
    }
}

fn interpolate(n: &Nodes, values: &[f64; 16], t: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..16 {
        let d = t - n.unit[i].0;
        if d == 0.0 {
            return values[i];
        }
        let c = n.bary[i] / d;
        num += c * values[i];
        den += c;
    }
    num / den
}

fn panels_for(rect: &[Interval; 2], features: &[Feature], opts: &PoincareOptions) -> [Panels; 2] {
    [0, 1].map(|k| {
        let f: Vec<(Interval, bool)> = features.iter().map(|f| (f.region[k], f.dense)).collect();
        Panels::new(rect[k], &f, opts)
    })
}

/// Compactly supported primitive of ρ dx∧dy on a box, for ρ vanishing near
/// the boundary with ∫ρ = 0:
/// η = (∫_{x₀}^x ρ(u, y)du − E(x)F(y)) dy − e(x)g(y) dx, with e a unit bump
/// in x, E its primitive, F(y) = ∫ρ(u, y)du and g(y) = ∫^y F.
pub struct CompactPoincare {
    f: Density,
    rect: [Interval; 2],
    xs: Panels,
    e: UnitBump,
    table: RowTable,
    nodes: Nodes,
}

impl fmt::Debug for CompactPoincare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompactPoincare").field("rect", &self.rect).field("mass", &self.table.total).finish()
    }
}

impl CompactPoincare {
    pub fn new(f: Density, rect: [Interval; 2], opts: &PoincareOptions) -> Result<CompactPoincare, CohomologyError> {
        CompactPoincare::with_features(f, rect, &[], opts)
    }

    pub fn with_features(
        f: Density,
        rect: [Interval; 2],
        features: &[Feature],
        opts: &PoincareOptions,
    ) -> Result<CompactPoincare, CohomologyError> {
        let [xs, ys] = panels_for(&rect, features, opts);
        let table = RowTable::build(&*f, &xs, &ys)?;
        CompactPoincare::from_table(f, rect, xs, table, opts)
    }

    fn from_table(
        f: Density,
        rect: [Interval; 2],
        xs: Panels,
        table: RowTable,
        opts: &PoincareOptions,
    ) -> Result<CompactPoincare, CohomologyError> {
        check_boundary(&*f, &rect, opts.boundary_tol)?;
        if !(abs(table.total) < opts.mass_tol) {
            return Err(CohomologyError::NonzeroMass { mass: table.total });
        }
        Ok(CompactPoincare { f, rect, xs, e: UnitBump::on(rect[0]), table, nodes: nodes() })
    }

    pub fn rect(&self) -> [Interval; 2] {
        self.rect
    }

    /// Numerical ∫ρ over the box.
    pub fn mass(&self) -> f64 {
        self.table.total
    }

    /// (η_x, η_y) at `pos`; zero outside the closed box.
    pub fn eta(&self, pos: [f64; 2]) -> Result<[f64; 2], EvalError> {
        let [ix, iy] = self.rect;
        let [x, y] = pos;
        if x < ix.lo || x > ix.hi || y < iy.lo || y > iy.hi {
            return Ok([0.0, 0.0]);
        }
        self.formula(pos)
    }

    /// The defining formula, evaluated without clipping to the box.
    pub fn formula(&self, pos: [f64; 2]) -> Result<[f64; 2], EvalError> {
        let [x, y] = pos;
        let g = self.table.primitive(&self.nodes, y);
        let (partial, full) = self.xs.integrate_split(|u| (self.f)([u, y]), x)?;
        Ok([-self.e.density(x) * g, partial - self.e.cumulative(x) * full])
    }
}

fn check_boundary(f: &dyn Fn([f64; 2]) -> Result<f64, EvalError>, rect: &[Interval; 2], tol: f64) -> Result<(), CohomologyError> {
    let [ix, iy] = *rect;
    const N: usize = 64;
    for k in 0..=N {
        let s = k as f64 / N as f64;
        let (x, y) = (ix.lo + s * ix.width(), iy.lo + s * iy.width());
        for point in [[x, iy.lo], [x, iy.hi], [ix.lo, y], [ix.hi, y]] {
            let value = f(point)?;
            if !(abs(value) <= tol) {
                return Err(CohomologyError::SupportViolation { value, point });
            }
        }
    }
    Ok(())
}

/// A box in one chart. The partition-of-unity bump of the cell is supported
/// in the box scaled by `bump_scale` about its center.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub chart: usize,
    pub rect: [Interval; 2],
    pub bump_scale: f64,
}

impl Cell {
    pub fn new(chart: usize, rect: [Interval; 2]) -> Cell {
        Cell { chart, rect, bump_scale: 1.0 }
    }

    fn bump(&self, pos: [f64; 2]) -> f64 {
        let mut v = 1.0;
        for k in 0..2 {
            let i = self.rect[k];
            v *= bump((pos[k] - i.center()) / (0.5 * i.width() * self.bump_scale));
            if v == 0.0 {
                break;
            }
        }
        v
    }
}

/// Unit-mass product bump 2-form on a box.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Theta {
    x: UnitBump,
    y: UnitBump,
}

impl Theta {
    fn on(rect: [Interval; 2]) -> Theta {
        Theta { x: UnitBump::on(rect[0]), y: UnitBump::on(rect[1]) }
    }

    fn value(&self, pos: [f64; 2]) -> f64 {
        let a = self.x.density(pos[0]);
        if a == 0.0 {
            0.0
        } else {
            a * self.y.density(pos[1])
        }
    }
}

/// A surface with a finite cover by cells, each cell linked to a later
/// successor K(j) it overlaps; the last cell has none.
#[derive(Clone, Debug)]
pub struct CoveredSurface {
    pub atlas: Atlas,
    pub cells: Vec<Cell>,
    pub successor: Vec<Option<usize>>,
    /// Box in each chart outside which a cell's image cannot lie.
    reach: Vec<Vec<Option<[Interval; 2]>>>,
    /// Support box of θ_j, in the chart of cell j.
    theta: Vec<Theta>,
}

const GRID: usize = 64;

impl CoveredSurface {
    /// Chain cover with K(j) = j + 1 unless `successor` is given.
    pub fn new(atlas: Atlas, cells: Vec<Cell>, successor: Option<Vec<Option<usize>>>) -> Result<CoveredSurface, CohomologyError> {
        let n = cells.len();
        if n == 0 {
            return Err(CohomologyError::EmptyCover);
        }
        let successor = successor.unwrap_or_else(|| (0..n).map(|j| (j + 1 < n).then_some(j + 1)).collect());
        if successor.len() != n {
            return Err(CohomologyError::BadSuccessor { cell: n.min(successor.len()) });
        }
        for (j, c) in cells.iter().enumerate() {
            let chart = atlas.charts.get(c.chart).ok_or(CohomologyError::UnknownChart { cell: j, chart: c.chart })?;
            let inside = (0..2).all(|k| {
                let (r, d) = (c.rect[k], chart.domain[k]);
                r.lo.is_finite() && r.hi.is_finite() && r.lo < r.hi && d.lo < r.lo && r.hi < d.hi
            });
            if !inside {
                return Err(CohomologyError::CellOutsideChart { cell: j });
            }
            if !(c.bump_scale > 0.0 && c.bump_scale <= 1.0) {
                return Err(CohomologyError::BumpScale { cell: j });
            }
            match successor[j] {
                Some(k) if k <= j || k >= n => return Err(CohomologyError::BadSuccessor { cell: j }),
                None if j + 1 != n => return Err(CohomologyError::BadSuccessor { cell: j }),
                _ => {}
            }
        }
        let reach = cells.iter().map(|c| (0..atlas.charts.len()).map(|t| reach(&atlas, c, t)).collect()).collect();
        let mut surface = CoveredSurface { atlas, cells, successor, reach, theta: Vec::new() };
        for j in 0..n {
            let rect = match surface.successor[j] {
                Some(k) => surface.overlap_box(j, k)?,
                None => {
                    let r = surface.cells[j].rect;
                    r.map(|i| Interval::new(i.center() - 0.25 * i.width(), i.center() + 0.25 * i.width()))
                }
            };
            surface.theta.push(Theta::on(rect));
        }
        Ok(surface)
    }

    /// Box inside V_j ∩ V_k in the chart of cell j, one grid step inside the
    /// sampled overlap.
    fn overlap_box(&self, j: usize, k: usize) -> Result<[Interval; 2], CohomologyError> {
        let cj = &self.cells[j];
        let step = cj.rect.map(|i| i.width() / GRID as f64);
        let at = |a: usize, b: usize| [cj.rect[0].lo + (a as f64 + 0.5) * step[0], cj.rect[1].lo + (b as f64 + 0.5) * step[1]];
        let inside = |p: [f64; 2]| {
            self.atlas.map_position(cj.chart, self.cells[k].chart, p).is_some_and(|q| box_contains(&self.cells[k].rect, q))
        };
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for a in 0..GRID {
            for b in 0..GRID {
                let p = at(a, b);
                if inside(p) {
                    for m in 0..2 {
                        lo[m] = lo[m].min(p[m]);
                        hi[m] = hi[m].max(p[m]);
                    }
                }
            }
        }
        let rect = [Interval::new(lo[0] + step[0], hi[0] - step[0]), Interval::new(lo[1] + step[1], hi[1] - step[1])];
        if rect.iter().any(|i| !(i.lo < i.hi)) {
            return Err(CohomologyError::NoOverlap { from: j, to: k });
        }
        for a in 0..GRID {
            for b in 0..GRID {
                let p = at(a, b);
                let near = (0..2).all(|m| p[m] >= rect[m].lo - step[m] && p[m] <= rect[m].hi + step[m]);
                if near && !inside(p) {
                    return Err(CohomologyError::IrregularOverlap { from: j, to: k });
                }
            }
        }
        Ok(rect)
    }

    /// Quadrature features of cell j in its chart: θ supports (dense) and
    /// the bump supports of the other cells.
    pub fn features(&self, j: usize) -> Vec<Feature> {
        let chart = self.cells[j].chart;
        let mut out = vec![Feature { region: self.theta_box(j), dense: true }];
        for (i, cell) in self.cells.iter().enumerate() {
            if self.successor[i] == Some(j) {
                if let Some(region) = map_box(&self.atlas, cell.chart, chart, self.theta_box(i)) {
                    out.push(Feature { region, dense: true });
                }
            }
            if i != j {
                let support = cell.rect.map(|r| {
                    let h = 0.5 * r.width() * cell.bump_scale;
                    Interval::new(r.center() - h, r.center() + h)
                });
                if let Some(region) = map_box(&self.atlas, cell.chart, chart, support) {
                    out.push(Feature { region, dense: false });
                }
            }
        }
        out
    }

    /// Support box of θ_j in the chart of cell j.
    pub fn theta_box(&self, j: usize) -> [Interval; 2] {
        let t = self.theta[j];
        [t.x, t.y].map(|b| Interval::new(b.center - b.half, b.center + b.half))
    }

    /// Image of `pos` (chart `chart`) in the chart of cell j, with Jacobian,
    /// when it lies in the cell.
    fn locate(&self, j: usize, chart: usize, pos: [f64; 2]) -> Option<([f64; 2], [[f64; 2]; 2])> {
        let cell = &self.cells[j];
        if !self.reach[j][chart].is_some_and(|r| pos[0] >= r[0].lo && pos[0] <= r[0].hi && pos[1] >= r[1].lo && pos[1] <= r[1].hi) {
            return None;
        }
        let (q, jac) = self.atlas.map_with_jacobian(chart, cell.chart, pos)?;
        box_contains(&cell.rect, q).then_some((q, jac))
    }

    fn raw_bump(&self, j: usize, chart: usize, pos: [f64; 2]) -> f64 {
        if chart == self.cells[j].chart {
            return self.cells[j].bump(pos);
        }
        let cell = &self.cells[j];
        if !self.reach[j][chart].is_some_and(|r| pos[0] >= r[0].lo && pos[0] <= r[0].hi && pos[1] >= r[1].lo && pos[1] <= r[1].hi) {
            return 0.0;
        }
        self.atlas.map_position(chart, cell.chart, pos).map_or(0.0, |q| cell.bump(q))
    }

    fn bump_sum(&self, chart: usize, pos: [f64; 2]) -> f64 {
        (0..self.cells.len()).map(|i| self.raw_bump(i, chart, pos)).sum()
    }

    /// ψ_j at `pos` in chart `chart`.
    pub fn psi(&self, j: usize, chart: usize, pos: [f64; 2]) -> f64 {
        let b = self.raw_bump(j, chart, pos);
        if b == 0.0 {
            0.0
        } else {
            b / self.bump_sum(chart, pos)
        }
    }

    /// Σ_j ψ_j: 1 on the covered set, 0 off it.
    pub fn partition_sum(&self, chart: usize, pos: [f64; 2]) -> f64 {
        let total = self.bump_sum(chart, pos);
        if total == 0.0 {
            return 0.0;
        }
        (0..self.cells.len()).map(|j| self.raw_bump(j, chart, pos) / total).sum()
    }

    /// θ_i expressed in chart `chart` (coefficient of dx∧dy there).
    fn theta_in(&self, i: usize, chart: usize, pos: [f64; 2]) -> f64 {
        if chart == self.cells[i].chart {
            return self.theta[i].value(pos);
        }
        match self.locate(i, chart, pos) {
            Some((q, j)) => {
                let v = self.theta[i].value(q);
                if v == 0.0 {
                    0.0
                } else {
                    v * (j[0][0] * j[1][1] - j[0][1] * j[1][0])
                }
            }
            None => 0.0,
        }
    }

    /// Same surface with the last cell enlarged by `factor` about its
    /// center, kept inside its chart.
    pub fn with_enlarged_last(&self, factor: f64) -> Result<CoveredSurface, CohomologyError> {
        let mut cells = self.cells.clone();
        let last = cells.last_mut().expect("nonempty cover");
        let domain = self.atlas.charts[last.chart].domain;
        for k in 0..2 {
            let (c, h) = (last.rect[k].center(), 0.5 * factor * last.rect[k].width());
            let d = domain[k];
            let margin = 1e-3 * (2.0 * h);
            let lo = if d.lo.is_finite() { (c - h).max(d.lo + margin) } else { c - h };
            let hi = if d.hi.is_finite() { (c + h).min(d.hi - margin) } else { c + h };
            last.rect[k] = Interval::new(lo, hi);
        }
        CoveredSurface::new(self.atlas.clone(), cells, Some(self.successor.clone()))
    }
}

/// Bounding box of the image of a box, when its corners, edge midpoints
/// and center all map.
fn map_box(atlas: &Atlas, from: usize, to: usize, b: [Interval; 2]) -> Option<[Interval; 2]> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for sx in [0.0, 0.5, 1.0] {
        for sy in [0.0, 0.5, 1.0] {
            let p = [b[0].lo + sx * b[0].width(), b[1].lo + sy * b[1].width()];
            let q = if from == to { p } else { atlas.map_position(from, to, p)? };
            for m in 0..2 {
                lo[m] = lo[m].min(q[m]);
                hi[m] = hi[m].max(q[m]);
            }
        }
    }
    Some([Interval::new(lo[0], hi[0]), Interval::new(lo[1], hi[1])])
}

/// Bounding box in chart `target` of the image of a cell, padded by two
/// image grid steps; `None` when no sampled point of the cell maps there.
fn reach(atlas: &Atlas, cell: &Cell, target: usize) -> Option<[Interval; 2]> {
    const N: usize = 32;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut stretch: f64 = 0.0;
    let step = cell.rect.map(|i| i.width() / N as f64);
    for a in 0..=N {
        for b in 0..=N {
            let p = [cell.rect[0].lo + a as f64 * step[0], cell.rect[1].lo + b as f64 * step[1]];
            if let Some((q, j)) = atlas.map_with_jacobian(cell.chart, target, p) {
                for m in 0..2 {
                    lo[m] = lo[m].min(q[m]);
                    hi[m] = hi[m].max(q[m]);
                }
                stretch = stretch.max(abs(j[0][0]) + abs(j[0][1])).max(abs(j[1][0]) + abs(j[1][1]));
            }
        }
    }
    if lo[0] > hi[0] {
        return None;
    }
    let pad = 2.0 * stretch * step[0].max(step[1]) + 1e-9;
    Some([Interval::new(lo[0] - pad, hi[0] + pad), Interval::new(lo[1] - pad, hi[1] + pad)])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub poincare: PoincareOptions,
    /// Largest |c_last| accepted as exact.
    pub obstruction_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { poincare: PoincareOptions::default(), obstruction_tol: 1e-6 }
    }
}

/// η with dη = ω on the covered set, as a sum of compactly supported
/// pieces η_j living in the charts of their cells.
pub struct EtaSolution {
    cover: Arc<CoveredSurface>,
    pieces: Vec<CompactPoincare>,
    /// c_j = ∫(ω_j + Σ_{K(i)=j} c_i θ_i).
    pub masses: Vec<f64>,
}

impl fmt::Debug for EtaSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EtaSolution").field("cells", &self.pieces.len()).field("masses", &self.masses).finish()
    }
}

struct Chain {
    masses: Vec<f64>,
    pieces: Vec<CompactPoincare>,
}

/// ω_j + Σ_{K(i)=j} k_i θ_i − k_j θ_j in the chart of cell j, where k_i are
/// the θ multipliers fixed so far.
fn cell_density(cover: &Arc<CoveredSurface>, omega: &Arc<[Expression]>, j: usize, incoming: Vec<(usize, f64)>, own: f64) -> Density {
    let (cover, omega) = (cover.clone(), omega.clone());
    Arc::new(move |pos| {
        let chart = cover.cells[j].chart;
        let mut v = 0.0;
        let psi = cover.psi(j, chart, pos);
        if psi != 0.0 {
            v += psi * omega[chart].evaluate(&position_env(pos))?;
        }
        for &(i, k) in &incoming {
            v += k * cover.theta_in(i, chart, pos);
        }
        if own != 0.0 {
            v -= own * cover.theta[j].value(pos);
        }
        Ok(v)
    })
}

fn run_chain(cover: &Arc<CoveredSurface>, omega: &Arc<[Expression]>, opts: &SolverOptions, build: bool) -> Result<Chain, CohomologyError> {
    let n = cover.cells.len();
    let mut multiplier = vec![0.0; n];
    let mut masses = Vec::with_capacity(n);
    let mut pieces = Vec::with_capacity(n);
    for j in 0..n {
        let rect = cover.cells[j].rect;
        let incoming: Vec<(usize, f64)> =
            (0..j).filter(|&i| cover.successor[i] == Some(j)).map(|i| (i, multiplier[i])).collect();
        let rho = cell_density(cover, omega, j, incoming.clone(), 0.0);
        let [xs, ys] = panels_for(&rect, &cover.features(j), &opts.poincare);
        let table = RowTable::build(&*rho, &xs, &ys)?;
        let c = table.total;
        masses.push(c);
        if cover.successor[j].is_none() && !(abs(c) < opts.obstruction_tol) {
            break;
        }
        let theta = cover.theta[j];
        let theta_table = RowTable::build(&move |p: [f64; 2]| Ok(theta.value(p)), &xs, &ys)?;
        multiplier[j] = c / theta_table.total;
        let density = cell_density(cover, omega, j, incoming, multiplier[j]);
        if !build {
            continue;
        }
        let combined = table.combine(&theta_table, multiplier[j]);
        pieces.push(CompactPoincare::from_table(density, rect, xs, combined, &opts.poincare)?);
    }
    Ok(Chain { masses, pieces })
}

/// Solve dη = ω, with ω given by its dx∧dy coefficient in each chart (as an
/// expression in x, y), by induction along the cover's chain.
pub fn solve_exactness(omega: &[Expression], cover: &Arc<CoveredSurface>, opts: &SolverOptions) -> Result<EtaSolution, CohomologyError> {
    if omega.len() != cover.atlas.charts.len() {
        return Err(CohomologyError::ChartCount { given: omega.len(), expected: cover.atlas.charts.len() });
    }
    let omega: Arc<[Expression]> = omega.into();
    let chain = run_chain(cover, &omega, opts, true)?;
    let c_last = *chain.masses.last().expect("nonempty cover");
    if chain.pieces.len() < cover.cells.len() {
        let enlarged = Arc::new(cover.with_enlarged_last(1.25)?);
        let again = run_chain(&enlarged, &omega, opts, false)?;
        let c2 = *again.masses.last().expect("nonempty cover");
        let shift = abs(c2 - c_last);
        let diagnosis = if shift > opts.obstruction_tol.max(1e-6 * abs(c_last)) {
            Diagnosis::CoverTruncation
        } else {
            Diagnosis::NonzeroCohomology
        };
        return Err(CohomologyError::Obstruction { c_last, masses: chain.masses, diagnosis });
    }
    Ok(EtaSolution { cover: cover.clone(), pieces: chain.pieces, masses: chain.masses })
}

/// Five-point central difference step used for dη.
pub const DIFF_STEP: f64 = 1e-3;

impl EtaSolution {
    pub fn cover(&self) -> &CoveredSurface {
        &self.cover
    }

    /// Last cell mass (zero up to the obstruction tolerance).
    pub fn c_last(&self) -> f64 {
        *self.masses.last().expect("nonempty cover")
    }

    /// η_j in the chart of cell j.
    pub fn piece(&self, j: usize) -> &CompactPoincare {
        &self.pieces[j]
    }

    /// (η_x, η_y) at `pos` in chart `chart`.
    pub fn eta(&self, chart: usize, pos: [f64; 2]) -> Result<[f64; 2], EvalError> {
        let mut out = [0.0; 2];
        for j in 0..self.pieces.len() {
            if let Some((q, jac)) = self.cover.locate(j, chart, pos) {
                let e = self.pieces[j].eta(q)?;
                for a in 0..2 {
                    out[a] += jac[0][a] * e[0] + jac[1][a] * e[1];
                }
            }
        }
        Ok(out)
    }

    /// Coefficient of dη = (∂_xη_y − ∂_yη_x) dx∧dy, by five-point differences.
    pub fn d_eta(&self, chart: usize, pos: [f64; 2]) -> Result<f64, EvalError> {
        let h = DIFF_STEP;
        let d = |axis: usize, comp: usize| -> Result<f64, EvalError> {
            let at = |s: f64| {
                let mut p = pos;
                p[axis] += s;
                self.eta(chart, p).map(|e| e[comp])
            };
            Ok((-at(2.0 * h)? + 8.0 * at(h)? - 8.0 * at(-h)? + at(-2.0 * h)?) / (12.0 * h))
        };
        Ok(d(0, 1)? - d(1, 0)?)
    }

    /// Largest |dη − ω| at `samples` points per chart, sampled in the chart
    /// box shrunk by 1% and kept to covered points.
    pub fn residual(&self, omega: &[Expression], samples: usize, seed: u64) -> Result<(f64, Option<(usize, [f64; 2])>), EvalError> {
        let mut worst = 0.0;
        let mut at = None;
        for (c, chart) in self.cover.atlas.charts.iter().enumerate() {
            let domain = chart.domain.map(|i| {
                let i = i.clipped(crate::sample::DEFAULT_RADIUS);
                let m = 0.01 * i.width();
                Interval::new(i.lo + m, i.hi - m)
            });
            let mut sampler = JetSampler::new(seed.wrapping_add(c as u64)).in_box(domain);
            let mut taken = 0;
            let mut tries = 0;
            while taken < samples && tries < 20 * samples {
                tries += 1;
                let pos = sampler.position();
                if self.cover.partition_sum(c, pos) == 0.0 {
                    continue;
                }
                taken += 1;
                let r = abs(self.d_eta(c, pos)? - omega[c].evaluate(&position_env(pos))?);
                if r.is_nan() || r > worst {
                    worst = r;
                    at = Some((c, pos));
                }
            }
        }
        Ok((worst, at))
    }
}

/// Tolerance for E(λ) = ε on the cohomological path.
pub const GLOBAL_EL_TOL: f64 = 1e-4;

/// λ = h(μ₀ + κ + η), chart by chart: the symbolic part h(μ₀ + κ) and an
/// optional numerical η.
#[derive(Debug)]
pub struct GlobalLagrangian {
    pub charts: Vec<Lagrangian>,
    pub eta: Option<EtaSolution>,
}

impl GlobalLagrangian {
    /// 𝓛 at a first-order point of chart `chart`.
    pub fn density(&self, chart: usize, p: &JetPoint) -> Result<f64, EvalError> {
        let mut v = self.charts[chart].density().evaluate(p)?;
        if let Some(eta) = &self.eta {
            let [ex, ey] = eta.eta(chart, p.position())?;
            let [xd, yd] = p.velocity();
            v += ex * xd + ey * yd;
        }
        Ok(v)
    }

    /// Largest |E(λ) − ε| at `samples` second-order points per chart; the
    /// η part is differentiated numerically.
    pub fn euler_lagrange_residual(&self, eps: &[SourceForm], opts: &CheckOptions) -> Result<f64, CohomologyError> {
        let mut worst: f64 = 0.0;
        for (c, chart) in self.charts.iter().enumerate() {
            let e = euler_lagrange(chart, opts)?;
            let domain = self.sample_box(c);
            let mut sampler = JetSampler::new(opts.seed.wrapping_add(c as u64)).in_box(domain);
            let cache: RefCell<BTreeMap<[u64; 2], [f64; 2]>> = RefCell::new(BTreeMap::new());
            let eta_density = |q: &JetPoint| -> Result<f64, EvalError> {
                let eta = self.eta.as_ref().expect("checked");
                let pos = q.position();
                let key = [pos[0].to_bits(), pos[1].to_bits()];
                let cached = cache.borrow().get(&key).copied();
                let value = match cached {
                    Some(v) => v,
                    None => {
                        let v = eta.eta(c, pos)?;
                        cache.borrow_mut().insert(key, v);
                        v
                    }
                };
                let [xd, yd] = q.velocity();
                Ok(value[0] * xd + value[1] * yd)
            };
            for p in sampler.points(2, opts.samples) {
                if let Some(eta) = &self.eta {
                    if eta.cover.partition_sum(c, p.position()) == 0.0 {
                        continue;
                    }
                }
                let mut got = [e.eps[0].evaluate(&p)?, e.eps[1].evaluate(&p)?];
                if self.eta.is_some() {
                    let num = euler_lagrange_numeric(&eta_density, &p, DIFF_STEP)?;
                    got[0] += num[0];
                    got[1] += num[1];
                    cache.borrow_mut().clear();
                }
                for k in 0..2 {
                    worst = crate::num::max_nan(worst, abs(got[k] - eps[c].eps[k].evaluate(&p)?));
                }
            }
        }
        Ok(worst)
    }

    fn sample_box(&self, chart: usize) -> [Interval; 2] {
        match &self.eta {
            Some(eta) => eta.cover.atlas.charts[chart].domain.map(|i| {
                let i = i.clipped(crate::sample::DEFAULT_RADIUS);
                let m = 0.01 * i.width();
                Interval::new(i.lo + m, i.hi - m)
            }),
            None => [Interval::new(-2.0, 2.0); 2],
        }
    }
}

/// Global Lagrangian from per-chart constructions: h(μ₀ + κ) when ω
/// vanishes in every chart, otherwise h(μ₀ + κ + η) with η from
/// [`solve_exactness`] on `cover`.
pub fn global_lagrangian(
    constructions: &[Construction],
    cover: Option<&Arc<CoveredSurface>>,
    check: &CheckOptions,
    opts: &SolverOptions,
) -> Result<GlobalLagrangian, CohomologyError> {
    let mut charts = Vec::with_capacity(constructions.len());
    let mut exact = true;
    for c in constructions {
        charts.push(c.lagrangian(None).map_err(GlobalizeError::from)?);
        let (magnitude, _) = c.omega_magnitude(check)?;
        exact &= magnitude < crate::globalize::OMEGA_TOL;
    }
    if exact {
        return Ok(GlobalLagrangian { charts, eta: None });
    }
    let cover = cover.ok_or(CohomologyError::EmptyCover)?;
    let omega: Vec<Expression> = constructions.iter().map(|c| c.omega_coefficient()).collect();
    let eta = solve_exactness(&omega, cover, opts)?;
    Ok(GlobalLagrangian { charts, eta: Some(eta) })
}
