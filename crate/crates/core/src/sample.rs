//! Seeded sampling of jet points and random test polynomials.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::atlas::Interval;
use crate::expr::{EvalError, Expression};
use crate::jet::JetPoint;

/// Half-width of the default box for unbounded position intervals, and for
/// velocities, accelerations and time.
pub const DEFAULT_RADIUS: f64 = 2.0;

/// Draws jet points with positions in a box and derivatives in
/// [−radius, radius].
#[derive(Clone, Debug)]
pub struct JetSampler {
    rng: ChaCha8Rng,
    position: [Interval; 2],
    radius: f64,
}

impl JetSampler {
    pub fn new(seed: u64) -> JetSampler {
        let unit = Interval::new(-DEFAULT_RADIUS, DEFAULT_RADIUS);
        JetSampler { rng: ChaCha8Rng::seed_from_u64(seed), position: [unit, unit], radius: DEFAULT_RADIUS }
    }

    /// Restrict positions to `domain` (unbounded sides are clipped).
    pub fn in_box(mut self, domain: [Interval; 2]) -> JetSampler {
        self.position = domain.map(|i| i.clipped(DEFAULT_RADIUS));
        self
    }

    pub fn with_radius(mut self, radius: f64) -> JetSampler {
        self.radius = radius;
        self
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Uniform in the open interval, kept a relative 1e-6 away from its ends.
    pub fn uniform(&mut self, i: Interval) -> f64 {
        let margin = 1e-6 * (i.hi - i.lo);
        self.rng.random_range(i.lo + margin..i.hi - margin)
    }

    pub fn position(&mut self) -> [f64; 2] {
        let [a, b] = self.position;
        [self.uniform(a), self.uniform(b)]
    }

    /// Point of the given order; all coordinates above `order` are zero.
    pub fn point(&mut self, order: u8) -> JetPoint {
        let r = self.radius;
        let [x, y] = self.position();
        let mut coords = Vec::with_capacity(11);
        coords.push(self.rng.random_range(-r..r));
        coords.push(x);
        coords.push(y);
        for _ in 0..2 * usize::from(order.min(4)) {
            coords.push(self.rng.random_range(-r..r));
        }
        JetPoint::new(order, &coords).expect("sampled coordinates are finite")
    }

    pub fn points(&mut self, order: u8, n: usize) -> Vec<JetPoint> {
        (0..n).map(|_| self.point(order)).collect()
    }
}

/// Random polynomial in `vars` with `terms` monomials of total degree at most
/// `max_degree` and coefficients in [−1, 1].
pub fn random_polynomial(rng: &mut ChaCha8Rng, vars: &[&str], max_degree: u32, terms: usize) -> Expression {
    let mut sum = Expression::zero();
    for _ in 0..terms {
        let mut mono = Expression::constant(rng.random_range(-1.0..1.0));
        let degree = rng.random_range(0..=max_degree);
        for _ in 0..degree {
            let v = vars[rng.random_range(0..vars.len())];
            mono = mono.mul(&Expression::var(v));
        }
        sum = sum.add(&mono);
    }
    sum
}

/// Largest |e(p)| over the expressions and points, with the point where it
/// occurs. NaN counts as the worst value.
pub fn worst_case(exprs: &[Expression], points: &[JetPoint]) -> Result<(f64, Option<JetPoint>), EvalError> {
    let mut worst = 0.0;
    let mut at = None;
    for p in points {
        for e in exprs {
            let v = crate::num::abs(e.evaluate(p)?);
            if v.is_nan() || v > worst {
                worst = v;
                at = Some(*p);
                if v.is_nan() {
                    return Ok((worst, at));
                }
            }
        }
    }
    Ok((worst, at))
}

/// [`worst_case`] over all coefficients of a form.
pub fn form_worst_case(
    form: &crate::jet::DifferentialForm,
    points: &[JetPoint],
) -> Result<(f64, Option<JetPoint>), EvalError> {
    let coeffs: Vec<Expression> = form.terms().map(|(_, e)| e.clone()).collect();
    worst_case(&coeffs, points)
}
