use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::expr::parse;
use crate::sample::{random_polynomial, JetSampler};

fn lag(text: &str) -> Lagrangian {
    Lagrangian::new(parse(text).unwrap()).unwrap()
}

fn opts() -> CheckOptions {
    CheckOptions::default()
}

fn assert_same(a: &Expression, b: &Expression, tol: f64) {
    let mut s = JetSampler::new(11);
    for p in s.points(2, 100) {
        let (va, vb) = (a.evaluate(&p).unwrap(), b.evaluate(&p).unwrap());
        assert!((va - vb).abs() < tol, "{a} = {va} vs {b} = {vb} at {p:?}");
    }
}

fn random_first_order(rng: &mut ChaCha8Rng, with_time: bool) -> Lagrangian {
    let vars: &[&str] = if with_time { &["t", "x", "y", "xd", "yd"] } else { &["x", "y", "xd", "yd"] };
    Lagrangian::new(random_polynomial(rng, vars, 3, 6)).unwrap()
}

#[test]
fn free_particle_euler_lagrange() {
    let e = euler_lagrange(&lag("(xd^2 + yd^2)/2"), &opts()).unwrap();
    assert_same(&e.eps[0], &parse("-xdd").unwrap(), 1e-15);
    assert_same(&e.eps[1], &parse("-ydd").unwrap(), 1e-15);
}

#[test]
fn second_order_lagrangian_reduces_to_second_order_equations() {
    let l = lag("-t*xd*xdd - t*yd*ydd - xd^2 - yd^2");
    assert_eq!(l.order(), 2);
    let e = euler_lagrange(&l, &opts()).unwrap();
    assert_same(&e.eps[0], &parse("xdd").unwrap(), 1e-13);
    assert_same(&e.eps[1], &parse("ydd").unwrap(), 1e-13);
    assert!(e.time_independent);
}

#[test]
fn genuinely_higher_order_lagrangian_is_rejected() {
    let err = euler_lagrange(&lag("xdd^2"), &opts()).unwrap_err();
    assert!(matches!(err, LagrangeError::HigherOrderResidue { .. }));
}

#[test]
fn cartan_examples() {
    let theta = cartan(&lag("(xd^2 + yd^2)/2")).unwrap();
    use crate::jet::Coord;
    assert_same(&theta.coefficient(&[Coord::T]), &parse("-(xd^2 + yd^2)/2").unwrap(), 1e-14);
    assert_same(&theta.coefficient(&[Coord::X]), &parse("xd").unwrap(), 0.0 + 1e-15);
    assert_same(&theta.coefficient(&[Coord::Y]), &parse("yd").unwrap(), 0.0 + 1e-15);
    let one = cartan(&lag("1")).unwrap();
    assert_eq!(one.terms().count(), 1);
    assert!(one.coefficient(&[Coord::T]).is_one());
    let split = theta.contact_split().unwrap();
    assert_same(&split.contact[0], &parse("xd").unwrap(), 1e-15);
    assert_same(&split.horizontal, &parse("(xd^2 + yd^2)/2").unwrap(), 1e-14);
    assert!(matches!(cartan(&lag("xdd")), Err(LagrangeError::NotFirstOrder)));
}

#[test]
fn p1_of_d_cartan_is_euler_lagrange() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut s = JetSampler::new(42);
    for _ in 0..50 {
        let l = random_first_order(&mut rng, true);
        let [px, py] = cartan(&l).unwrap().exterior_derivative().unwrap().p1().unwrap();
        let [ex, ey] = euler_lagrange_formal(&l).unwrap();
        for p in s.points(2, 10) {
            assert!((px.evaluate(&p).unwrap() - ex.evaluate(&p).unwrap()).abs() < 1e-10);
            assert!((py.evaluate(&p).unwrap() - ey.evaluate(&p).unwrap()).abs() < 1e-10);
        }
    }
}

#[test]
fn gauge_terms_do_not_change_euler_lagrange() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let l = random_first_order(&mut rng, true);
        let f = random_polynomial(&mut rng, &["t", "x", "y"], 3, 5);
        let gauged = Lagrangian::new(l.density().add(&total_derivative(&f).unwrap())).unwrap();
        let a = euler_lagrange(&l, &opts()).unwrap();
        let b = euler_lagrange(&gauged, &opts()).unwrap();
        assert_same(&a.eps[0], &b.eps[0], 1e-10);
        assert_same(&a.eps[1], &b.eps[1], 1e-10);
    }
}

#[test]
fn vainberg_tonti_value_for_free_particle() {
    let eps = SourceForm::new(parse("xdd").unwrap(), parse("ydd").unwrap(), true).unwrap();
    let vt = vainberg_tonti(&eps, &opts()).unwrap();
    let p = JetPoint::second(0.0, 1.0, 0.0, 0.0, 0.0, 2.0, 0.0);
    assert!((vt.full.density().evaluate(&p).unwrap() - 1.0).abs() < 1e-14);
    assert_eq!(vt.reduced.order(), 1);
    let eq = equivalent(&vt.reduced, &lag("-(xd^2 + yd^2)/2"), &opts()).unwrap();
    assert!(eq.passed, "{}", eq.max_residual);
}

#[test]
fn vainberg_tonti_harmonic_oscillator() {
    let eps = SourceForm::new(parse("xdd + x").unwrap(), parse("ydd + y").unwrap(), true).unwrap();
    let vt = vainberg_tonti(&eps, &opts()).unwrap();
    let o = CheckOptions { samples: 100, ..opts() };
    let e = euler_lagrange(&vt.reduced, &o).unwrap();
    assert_same(&e.eps[0], &eps.eps[0], 1e-7);
    assert_same(&e.eps[1], &eps.eps[1], 1e-7);
    let p = JetPoint::second(0.0, 0.4, -0.3, 1.1, 0.2, 0.7, -1.5);
    // 𝓛_T = ½(x(ẍ + x) + y(ÿ + y))
    let expected = 0.5 * (0.4 * (0.7 + 0.4) + -0.3 * (-1.5 - 0.3));
    assert!((vt.full.density().evaluate(&p).unwrap() - expected).abs() < 1e-14);
    let target = lag("-(xd^2 + yd^2)/2 + (x^2 + y^2)/2");
    assert!(equivalent(&vt.reduced, &target, &o).unwrap().passed);
}

#[test]
fn vainberg_tonti_round_trip_on_random_lagrangians() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let o = CheckOptions { samples: 50, ..opts() };
    for _ in 0..20 {
        let l = random_first_order(&mut rng, false);
        let eps = euler_lagrange(&l, &o).unwrap();
        let vt = vainberg_tonti(&eps, &o).unwrap();
        let eq = equivalent(&vt.reduced, &l, &CheckOptions { tol: 1e-7, ..o.clone() }).unwrap();
        assert!(eq.passed, "{} residual {}", l.density(), eq.max_residual);
    }
}

#[test]
fn vainberg_tonti_preconditions() {
    let eps = SourceForm::new(parse("xdd").unwrap(), parse("ydd").unwrap(), true).unwrap();
    let shifted = CheckOptions { domain: [crate::atlas::Interval::new(0.5, 2.0), opts().domain[1]], ..opts() };
    assert!(matches!(vainberg_tonti(&eps, &shifted), Err(LagrangeError::NotStarShaped("x"))));
    let bad = SourceForm::new(parse("yd").unwrap(), parse("0").unwrap(), true).unwrap();
    assert!(matches!(vainberg_tonti(&bad, &opts()), Err(LagrangeError::NotVariational)));
}

#[test]
fn equivalence_examples() {
    let o = opts();
    let gauge = lag("xd^2/2 + xd*y + x*yd");
    assert!(equivalent(&lag("xd^2/2"), &gauge, &o).unwrap().passed);
    let eq = equivalent(&lag("xd^2/2"), &lag("xd^2"), &o).unwrap();
    assert!(!eq.passed);
    let p = eq.worst_point.unwrap();
    assert!((eq.max_residual - p.acceleration()[0].abs()).abs() < 1e-12);
}

#[test]
fn numeric_euler_lagrange_matches_symbolic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut s = JetSampler::new(8);
    for _ in 0..10 {
        let l = random_first_order(&mut rng, true);
        let [ex, ey] = euler_lagrange_formal(&l).unwrap();
        let f = |p: &JetPoint| l.density().evaluate(p);
        for p in s.points(2, 5) {
            let [nx, ny] = euler_lagrange_numeric(&f, &p, 1e-3).unwrap();
            assert!((nx - ex.evaluate(&p).unwrap()).abs() < 1e-7);
            assert!((ny - ey.evaluate(&p).unwrap()).abs() < 1e-7);
        }
    }
}
