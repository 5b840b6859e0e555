//! Charts with box domains, piecewise transition maps, their jet
//! prolongations, and sampled checks that per-chart data glue.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::expr::{EvalError, Expression};
use crate::jet::{jet_order, DifferentialForm, FormValue, JetError, JetPoint};
use crate::sample::JetSampler;

/// Open interval, possibly unbounded on either side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo < v && v < self.hi
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.max(other.lo), hi: self.hi.min(other.hi) }
    }

    /// Finite sub-interval: an infinite end is replaced by ±radius, or by
    /// the finite end ∓ 2·radius when that side alone is bounded.
    pub fn clipped(&self, radius: f64) -> Interval {
        let lo = if self.lo.is_finite() {
            self.lo
        } else if self.hi.is_finite() {
            (-radius).min(self.hi - 2.0 * radius)
        } else {
            -radius
        };
        let hi = if self.hi.is_finite() {
            self.hi
        } else if self.lo.is_finite() {
            radius.max(self.lo + 2.0 * radius)
        } else {
            radius
        };
        Interval { lo, hi }
    }
}

pub fn box_contains(b: &[Interval; 2], pos: [f64; 2]) -> bool {
    b[0].contains(pos[0]) && b[1].contains(pos[1])
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AtlasError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("chart `{0}`: coordinate names must be distinct")]
    DuplicateCoordinates(String),
    #[error("chart `{0}`: empty domain interval")]
    EmptyDomain(String),
    #[error("chart `{0}` declared twice")]
    DuplicateChart(String),
    #[error("unknown chart `{0}`")]
    UnknownChart(String),
    #[error("no transition from `{from}` to `{to}`")]
    MissingTransition { from: String, to: String },
    #[error("transition {from} -> {to}: no piece is active at ({}, {})", .point[0], .point[1])]
    NoPiece { from: String, to: String, point: [f64; 2] },
    #[error("transition {from} -> {to}: several pieces are active at ({}, {})", .point[0], .point[1])]
    AmbiguousPiece { from: String, to: String, point: [f64; 2] },
    #[error("transition {from} -> {to}: singular Jacobian at ({}, {})", .point[0], .point[1])]
    SingularJacobian { from: String, to: String, point: [f64; 2] },
    #[error("transition {from} -> {to} maps ({}, {}) outside the target chart", .point[0], .point[1])]
    OutsideTarget { from: String, to: String, point: [f64; 2] },
    #[error("transitions {from} -> {to} -> {from} miss the identity by {residual:e}")]
    RoundTrip { from: String, to: String, residual: f64 },
    #[error("jets of order {0} cannot be prolonged (at most 2)")]
    Order(u8),
    #[error("family has {found} members for {expected} charts")]
    FamilySize { expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub name: String,
    /// User-facing coordinate names; all expressions use the canonical x, y.
    pub coords: [String; 2],
    pub domain: [Interval; 2],
}

impl Chart {
    pub fn new(name: &str, coords: [&str; 2], domain: [Interval; 2]) -> Result<Chart, AtlasError> {
        if coords[0] == coords[1] {
            return Err(AtlasError::DuplicateCoordinates(name.to_string()));
        }
        if domain.iter().any(Interval::is_empty) {
            return Err(AtlasError::EmptyDomain(name.to_string()));
        }
        Ok(Chart { name: name.to_string(), coords: coords.map(String::from), domain })
    }
}

pub(crate) fn position_env(pos: [f64; 2]) -> JetPoint {
    JetPoint::new(0, &[0.0, pos[0], pos[1]]).expect("finite position")
}

/// One smooth branch of a transition, active where all guards are > 0.
#[derive(Clone, Debug)]
pub struct Piece {
    pub guards: Vec<Expression>,
    pub map: [Expression; 2],
    /// jacobian[i][j] = ∂map_i/∂q_j.
    jacobian: [[Expression; 2]; 2],
    /// hessian[i][j][k] = ∂²map_i/∂q_j∂q_k.
    hessian: [[[Expression; 2]; 2]; 2],
    /// Constant-coefficient form of the guards and map, when they are
    /// affine: rows (c, ∂x, ∂y).
    affine: Option<(Vec<[f64; 3]>, [[f64; 3]; 2])>,
}

const Q: [&str; 2] = ["x", "y"];

fn affine_row(e: &Expression) -> Option<[f64; 3]> {
    let (a, b) = (e.differentiate("x").as_const()?, e.differentiate("y").as_const()?);
    let c = e.evaluate(&position_env([0.0, 0.0])).ok()?;
    Some([c, a, b])
}

#[inline]
fn affine_eval(r: &[f64; 3], pos: [f64; 2]) -> f64 {
    r[0] + r[1] * pos[0] + r[2] * pos[1]
}

impl Piece {
    pub fn new(guards: Vec<Expression>, map: [Expression; 2]) -> Piece {
        let jacobian = [0, 1].map(|i| [0, 1].map(|j| map[i].differentiate(Q[j])));
        let hessian = [0, 1].map(|i| [0, 1].map(|j| [0, 1].map(|k| jacobian[i][j].differentiate(Q[k]))));
        let affine = (|| {
            let g = guards.iter().map(affine_row).collect::<Option<Vec<_>>>()?;
            Some((g, [affine_row(&map[0])?, affine_row(&map[1])?]))
        })();
        Piece { guards, map, jacobian, hessian, affine }
    }

    pub fn is_active(&self, pos: [f64; 2]) -> Result<bool, EvalError> {
        if let Some((guards, _)) = &self.affine {
            return Ok(guards.iter().all(|g| affine_eval(g, pos) > 0.0));
        }
        let env = position_env(pos);
        for g in &self.guards {
            if !(g.evaluate(&env)? > 0.0) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn apply(&self, pos: [f64; 2]) -> Result<[f64; 2], EvalError> {
        if let Some((_, m)) = &self.affine {
            return Ok([affine_eval(&m[0], pos), affine_eval(&m[1], pos)]);
        }
        let env = position_env(pos);
        Ok([self.map[0].evaluate(&env)?, self.map[1].evaluate(&env)?])
    }

    pub fn jacobian(&self, pos: [f64; 2]) -> Result<[[f64; 2]; 2], EvalError> {
        if let Some((_, m)) = &self.affine {
            return Ok([[m[0][1], m[0][2]], [m[1][1], m[1][2]]]);
        }
        let env = position_env(pos);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.jacobian[i][j].evaluate(&env)?;
            }
        }
        Ok(out)
    }

    pub fn hessian(&self, pos: [f64; 2]) -> Result<[[[f64; 2]; 2]; 2], EvalError> {
        let env = position_env(pos);
        let mut out = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out[i][j][k] = self.hessian[i][j][k].evaluate(&env)?;
                }
            }
        }
        Ok(out)
    }

    /// `self ∘ first`, active where `first` is active and `self` is active
    /// at the image.
    pub fn compose(&self, first: &Piece) -> Piece {
        let image: BTreeMap<String, Expression> =
            [(String::from("x"), first.map[0].clone()), (String::from("y"), first.map[1].clone())].into();
        let mut guards = first.guards.clone();
        guards.extend(self.guards.iter().map(|g| g.substitute_all(&image)));
        Piece::new(guards, [self.map[0].substitute_all(&image), self.map[1].substitute_all(&image)])
    }
}

/// Piecewise map from `from`-chart coordinates to `to`-chart coordinates,
/// defined on the overlap box.
#[derive(Clone, Debug)]
pub struct TransitionMap {
    pub from: String,
    pub to: String,
    pub pieces: Vec<Piece>,
    pub overlap: [Interval; 2],
}

impl TransitionMap {
    pub fn new(from: &str, to: &str, pieces: Vec<Piece>, overlap: [Interval; 2]) -> TransitionMap {
        TransitionMap { from: from.to_string(), to: to.to_string(), pieces, overlap }
    }

    pub fn identity(chart: &str, overlap: [Interval; 2]) -> TransitionMap {
        let piece = Piece::new(Vec::new(), [Expression::var("x"), Expression::var("y")]);
        TransitionMap::new(chart, chart, alloc::vec![piece], overlap)
    }

    /// The unique active piece at `pos`.
    pub fn piece_at(&self, pos: [f64; 2]) -> Result<&Piece, AtlasError> {
        let mut found = None;
        for piece in &self.pieces {
            if piece.is_active(pos)? {
                if found.is_some() {
                    return Err(AtlasError::AmbiguousPiece { from: self.from.clone(), to: self.to.clone(), point: pos });
                }
                found = Some(piece);
            }
        }
        found.ok_or_else(|| AtlasError::NoPiece { from: self.from.clone(), to: self.to.clone(), point: pos })
    }

    /// Whether `pos` lies in the overlap box with exactly one active piece.
    pub fn covers(&self, pos: [f64; 2]) -> bool {
        box_contains(&self.overlap, pos) && self.piece_at(pos).is_ok()
    }

    pub fn apply(&self, pos: [f64; 2]) -> Result<[f64; 2], AtlasError> {
        Ok(self.piece_at(pos)?.apply(pos)?)
    }

    /// Jet-level image: velocities by the Jacobian and, at order 2,
    /// accelerations by the chain rule. Time is unchanged.
    pub fn prolong(&self, p: &JetPoint) -> Result<JetPoint, AtlasError> {
        let order = p.order();
        if order > 2 {
            return Err(AtlasError::Order(order));
        }
        let pos = p.position();
        let piece = self.piece_at(pos)?;
        let mut coords = Vec::with_capacity(7);
        coords.push(p.t());
        coords.extend(piece.apply(pos)?);
        if order >= 1 {
            let j = piece.jacobian(pos)?;
            let v = p.velocity();
            coords.extend([0, 1].map(|i| j[i][0] * v[0] + j[i][1] * v[1]));
            if order == 2 {
                let h = piece.hessian(pos)?;
                let a = p.acceleration();
                coords.extend([0, 1].map(|i| {
                    j[i][0] * a[0]
                        + j[i][1] * a[1]
                        + h[i][0][0] * v[0] * v[0]
                        + 2.0 * h[i][0][1] * v[0] * v[1]
                        + h[i][1][1] * v[1] * v[1]
                }));
            }
        }
        Ok(JetPoint::new(order, &coords)?)
    }

    /// ∂(t̄, x̄, ȳ, ẋ̄, ẏ̄)/∂(t, x, y, ẋ, ẏ) at a first-jet point.
    pub fn jet_jacobian(&self, p: &JetPoint) -> Result<[[f64; 5]; 5], AtlasError> {
        let pos = p.position();
        let piece = self.piece_at(pos)?;
        let j = piece.jacobian(pos)?;
        let h = piece.hessian(pos)?;
        let v = p.velocity();
        let mut m = [[0.0; 5]; 5];
        m[0][0] = 1.0;
        for i in 0..2 {
            for k in 0..2 {
                m[1 + i][1 + k] = j[i][k];
                m[3 + i][3 + k] = j[i][k];
                m[3 + i][1 + k] = h[i][k][0] * v[0] + h[i][k][1] * v[1];
            }
        }
        Ok(m)
    }

    /// Coefficients at `p` of the pullback of `form` (given in target
    /// coordinates) by the prolonged map.
    pub fn pullback(&self, form: &DifferentialForm, p: &JetPoint) -> Result<FormValue, AtlasError> {
        let image = self.prolong(p)?;
        let value = form.evaluate(&image)?;
        let m = self.jet_jacobian(p)?;
        Ok(pull_value(&value, form.degree(), &m))
    }

    /// `self ∘ first` as a transition from `first.from` to `self.to` on the
    /// overlap box of `first`.
    pub fn compose(&self, first: &TransitionMap) -> TransitionMap {
        let mut pieces = Vec::new();
        for a in &first.pieces {
            for b in &self.pieces {
                pieces.push(b.compose(a));
            }
        }
        TransitionMap::new(&first.from, &self.to, pieces, first.overlap)
    }
}

fn bits(mask: u8) -> Vec<usize> {
    (0..5).filter(|k| mask & (1 << k) != 0).collect()
}

/// Pullback of form values by a linear map with matrix `m` (rows: target
/// differentials, columns: source differentials), via minors.
pub fn pull_value(value: &FormValue, degree: u8, m: &[[f64; 5]; 5]) -> FormValue {
    let mut out = FormValue::zero(degree);
    if degree == 0 {
        out.coeffs[0] = value.coeffs[0];
        return out;
    }
    for src in 0u8..32 {
        if src.count_ones() != u32::from(degree) {
            continue;
        }
        let cols = bits(src);
        let mut total = 0.0;
        for tgt in 0u8..32 {
            let c = value.coeffs[usize::from(tgt)];
            if c == 0.0 || tgt.count_ones() != u32::from(degree) {
                continue;
            }
            let rows = bits(tgt);
            let minor = match degree {
                1 => m[rows[0]][cols[0]],
                2 => m[rows[0]][cols[0]] * m[rows[1]][cols[1]] - m[rows[0]][cols[1]] * m[rows[1]][cols[0]],
                _ => determinant(&rows, &cols, m),
            };
            total += c * minor;
        }
        out.coeffs[usize::from(src)] = total;
    }
    out
}

fn determinant(rows: &[usize], cols: &[usize], m: &[[f64; 5]; 5]) -> f64 {
    if rows.len() == 1 {
        return m[rows[0]][cols[0]];
    }
    let mut total = 0.0;
    for (k, &c) in cols.iter().enumerate() {
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * m[rows[0]][c] * determinant(&rows[1..], &rest, m);
    }
    total
}

#[derive(Clone, Debug)]
pub struct Atlas {
    pub charts: Vec<Chart>,
    pub transitions: Vec<TransitionMap>,
    pub orientable: bool,
    pub compact: bool,
    /// Transition index for each ordered pair of charts.
    lookup: Vec<Option<usize>>,
}

/// Largest mismatch on one overlap.
#[derive(Clone, Debug)]
pub struct OverlapMismatch {
    pub from: String,
    pub to: String,
    pub samples: usize,
    pub max_mismatch: f64,
    pub worst_point: Option<JetPoint>,
}

#[derive(Clone, Debug)]
pub struct GlobalityReport {
    pub overlaps: Vec<OverlapMismatch>,
}

impl GlobalityReport {
    pub fn max_mismatch(&self) -> f64 {
        self.overlaps.iter().map(|o| o.max_mismatch).fold(0.0, crate::num::max_nan)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_mismatch() < tol
    }
}

/// Sampled structural checks of an atlas.
#[derive(Clone, Debug)]
pub struct AtlasReport {
    /// Largest |T⁻¹(T(p)) − p| over all transitions.
    pub round_trip: f64,
    /// Smallest |det J| seen.
    pub min_jacobian: f64,
    /// Largest |(B→C)∘(A→B) − (A→C)| on triple overlaps, with the number of
    /// triple-overlap samples found.
    pub composition: f64,
    pub triple_samples: usize,
}

/// Tolerance of the round-trip identity.
pub const ROUND_TRIP_TOL: f64 = 1e-9;

impl Atlas {
    pub fn new(
        charts: Vec<Chart>,
        transitions: Vec<TransitionMap>,
        orientable: bool,
        compact: bool,
    ) -> Result<Atlas, AtlasError> {
        for (i, c) in charts.iter().enumerate() {
            if charts[..i].iter().any(|d| d.name == c.name) {
                return Err(AtlasError::DuplicateChart(c.name.clone()));
            }
        }
        let n = charts.len();
        let mut atlas = Atlas { charts, transitions, orientable, compact, lookup: alloc::vec![None; n * n] };
        for (k, t) in atlas.transitions.iter().enumerate() {
            let (a, b) = (atlas.chart_index(&t.from)?, atlas.chart_index(&t.to)?);
            atlas.transition(&t.to, &t.from)?;
            atlas.lookup[a * n + b] = Some(k);
        }
        Ok(atlas)
    }

    pub fn chart_index(&self, name: &str) -> Result<usize, AtlasError> {
        self.charts.iter().position(|c| c.name == name).ok_or_else(|| AtlasError::UnknownChart(name.to_string()))
    }

    pub fn transition(&self, from: &str, to: &str) -> Result<&TransitionMap, AtlasError> {
        self.transitions
            .iter()
            .find(|t| t.from == from && t.to == to)
            .ok_or_else(|| AtlasError::MissingTransition { from: from.to_string(), to: to.to_string() })
    }

    /// Position of `pos` (in chart `from`) in chart `to`, if it lies in
    /// their overlap.
    pub fn map_position(&self, from: usize, to: usize, pos: [f64; 2]) -> Option<[f64; 2]> {
        if from == to {
            return box_contains(&self.charts[from].domain, pos).then_some(pos);
        }
        let t = &self.transitions[self.lookup[from * self.charts.len() + to]?];
        if !box_contains(&t.overlap, pos) {
            return None;
        }
        t.apply(pos).ok()
    }

    /// [`Atlas::map_position`] together with the Jacobian ∂(to)/∂(from).
    pub fn map_with_jacobian(&self, from: usize, to: usize, pos: [f64; 2]) -> Option<([f64; 2], [[f64; 2]; 2])> {
        if from == to {
            return box_contains(&self.charts[from].domain, pos).then_some((pos, [[1.0, 0.0], [0.0, 1.0]]));
        }
        let t = &self.transitions[self.lookup[from * self.charts.len() + to]?];
        if !box_contains(&t.overlap, pos) {
            return None;
        }
        let piece = t.piece_at(pos).ok()?;
        Some((piece.apply(pos).ok()?, piece.jacobian(pos).ok()?))
    }

    /// Guard partition, Jacobian, target containment and round trip at
    /// `samples` points per transition, then composition on triple overlaps.
    pub fn validate(&self, samples: usize, seed: u64) -> Result<AtlasReport, AtlasError> {
        let mut round_trip: f64 = 0.0;
        let mut min_jacobian = f64::INFINITY;
        for (k, t) in self.transitions.iter().enumerate() {
            let back = self.transition(&t.to, &t.from)?;
            let target = &self.charts[self.chart_index(&t.to)?];
            let mut sampler = JetSampler::new(seed.wrapping_add(k as u64)).in_box(t.overlap);
            for _ in 0..samples {
                let pos = sampler.position();
                let piece = t.piece_at(pos)?;
                let j = piece.jacobian(pos)?;
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                if !(crate::num::abs(det) > 1e-12) {
                    return Err(AtlasError::SingularJacobian { from: t.from.clone(), to: t.to.clone(), point: pos });
                }
                min_jacobian = min_jacobian.min(crate::num::abs(det));
                let image = piece.apply(pos)?;
                if !box_contains(&target.domain, image) {
                    return Err(AtlasError::OutsideTarget { from: t.from.clone(), to: t.to.clone(), point: pos });
                }
                let again = back.apply(image)?;
                let err = crate::num::abs(again[0] - pos[0]).max(crate::num::abs(again[1] - pos[1]));
                round_trip = crate::num::max_nan(round_trip, err);
            }
            if !(round_trip < ROUND_TRIP_TOL) {
                return Err(AtlasError::RoundTrip { from: t.from.clone(), to: t.to.clone(), residual: round_trip });
            }
        }
        let (composition, triple_samples) = self.composition_residual(samples, seed)?;
        Ok(AtlasReport { round_trip, min_jacobian, composition, triple_samples })
    }

    fn composition_residual(&self, samples: usize, seed: u64) -> Result<(f64, usize), AtlasError> {
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for ab in &self.transitions {
            for bc in self.transitions.iter().filter(|t| t.from == ab.to && t.to != ab.from) {
                let Ok(ac) = self.transition(&ab.from, &bc.to) else { continue };
                let mut sampler = JetSampler::new(seed).in_box(ab.overlap);
                for _ in 0..samples {
                    let p = sampler.position();
                    if !ac.covers(p) {
                        continue;
                    }
                    let q = ab.apply(p)?;
                    if !bc.covers(q) {
                        continue;
                    }
                    let (r1, r2) = (bc.apply(q)?, ac.apply(p)?);
                    worst = crate::num::max_nan(worst, crate::num::abs(r1[0] - r2[0]).max(crate::num::abs(r1[1] - r2[1])));
                    count += 1;
                }
            }
        }
        Ok((worst, count))
    }

    /// Compares, on every overlap A → B, the pullback of the B-member of
    /// `family` with the A-member at `samples` seeded jet points.
    pub fn check_global(
        &self,
        family: &[DifferentialForm],
        samples: usize,
        seed: u64,
    ) -> Result<GlobalityReport, AtlasError> {
        if family.len() != self.charts.len() {
            return Err(AtlasError::FamilySize { expected: self.charts.len(), found: family.len() });
        }
        let order = family
            .iter()
            .flat_map(|f| f.terms().map(|(_, e)| jet_order(e)).collect::<Vec<_>>())
            .max()
            .unwrap_or(1)
            .clamp(1, 2);
        let mut overlaps = Vec::new();
        for t in &self.transitions {
            let (a, b) = (self.chart_index(&t.from)?, self.chart_index(&t.to)?);
            let mut sampler = JetSampler::new(seed).in_box(t.overlap);
            let mut max_mismatch: f64 = 0.0;
            let mut worst_point = None;
            for _ in 0..samples {
                let p = sampler.point(order);
                let pulled = t.pullback(&family[b], &p)?;
                let local = family[a].evaluate(&p)?;
                let d = pulled.distance(&local);
                if d.is_nan() || d > max_mismatch {
                    max_mismatch = d;
                    worst_point = Some(p);
                }
            }
            overlaps.push(OverlapMismatch { from: t.from.clone(), to: t.to.clone(), samples, max_mismatch, worst_point });
        }
        Ok(GlobalityReport { overlaps })
    }
}

#[cfg(test)]
mod tests;
