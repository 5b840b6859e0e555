use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::expr::{parse, Scope};
use crate::jet::Lagrangian;
use crate::lagrange::euler_lagrange;
use crate::sample::random_polynomial;
use crate::testdata::*;

fn passes(eps: &SourceForm, domain: [Interval; 2]) -> HelmholtzReport {
    let r = helmholtz(eps, &CheckOptions { domain, ..CheckOptions::default() }).unwrap();
    for c in r.conditions.iter().chain(&r.raw_conditions) {
        assert!(c.max_residual < 1e-9, "{}: {}", c.name, c.max_residual);
    }
    assert!(r.passed && r.higher_order_dependence < 1e-9);
    r
}

#[test]
fn variational_fixtures_pass() {
    let unit = CheckOptions::default().domain;
    let r = passes(&free_particle(), unit);
    assert!(r.conditions.iter().all(|c| c.max_residual == 0.0));
    passes(&harmonic(), unit);
    passes(&mobius(), mobius_box());
    passes(&torus_constant(), torus_box());
    passes(&torus_trig(), torus_box());
}

#[test]
fn ydot_source_fails_the_symmetric_velocity_condition() {
    let eps = SourceForm::new(parse("yd").unwrap(), Expression::zero(), true).unwrap();
    let r = helmholtz(&eps, &CheckOptions::default()).unwrap();
    assert!(!r.passed);
    let failed: Vec<_> = r.failed().map(|c| c.name).collect();
    assert_eq!(failed, [AB_CONDITIONS[6], RAW_CONDITIONS[3]]);
    for c in r.failed() {
        assert!((c.max_residual - 1.0).abs() < 1e-15);
    }
}

#[test]
fn quadratic_acceleration_is_not_affine() {
    let eps = SourceForm::new(parse("xdd^2").unwrap(), parse("ydd").unwrap(), true).unwrap();
    let r = helmholtz(&eps, &CheckOptions::default()).unwrap();
    assert!(!r.passed);
    assert!(!r.conditions[0].passed && r.conditions[0].name == "affine in accelerations");
    assert!(matches!(decompose(&eps, &CheckOptions::default()), Err(VarError::NotAffine { .. })));
}

#[test]
fn asymmetric_acceleration_coefficients_are_reported() {
    let eps = SourceForm::new(parse("xdd + ydd").unwrap(), parse("ydd").unwrap(), true).unwrap();
    assert!(matches!(decompose(&eps, &CheckOptions::default()), Err(VarError::AsymmetricB { .. })));
    let r = helmholtz(&eps, &CheckOptions::default()).unwrap();
    assert_eq!(r.failed().next().unwrap().name, "B_xy = B_yx");
}

#[test]
fn decomposition_examples() {
    let o = CheckOptions::default();
    let d = decompose(&free_particle(), &o).unwrap();
    assert!(d.a[0].is_zero() && d.a[1].is_zero());
    assert!(d.b_xx.is_one() && d.b_yy.is_one() && d.b_xy.is_zero());

    let o = CheckOptions { domain: mobius_box(), ..o };
    let eps = mobius();
    let d = decompose(&eps, &o).unwrap();
    let s = mobius_scope();
    let mut sampler = o.sampler();
    let [rx, ry] = d.reconstruct();
    for pt in sampler.points(2, 50) {
        let close = |a: &Expression, b: &Expression| (a.evaluate(&pt).unwrap() - b.evaluate(&pt).unwrap()).abs();
        assert!(close(&d.b_xx, &p(MOBIUS_B_PHIPHI, &s)) < 1e-14);
        assert!(close(&d.b_yy, &Expression::constant(-1.0)) < 1e-15);
        assert!(close(&d.b_xy, &Expression::zero()) < 1e-15);
        assert!(close(&d.a[0], &p(MOBIUS_A_PHI, &s)) < 1e-14);
        assert!(close(&d.a[1], &p(MOBIUS_A_TAU, &s)) < 1e-14);
        assert!(close(&rx, &eps.eps[0]) < 1e-12);
        assert!(close(&ry, &eps.eps[1]) < 1e-12);
    }
}

#[test]
fn euler_lagrange_images_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let o = CheckOptions::default();
    for _ in 0..20 {
        let l = Lagrangian::new(random_polynomial(&mut rng, &["x", "y", "xd", "yd"], 4, 6)).unwrap();
        let eps = euler_lagrange(&l, &o).unwrap();
        let r = helmholtz(&eps, &o).unwrap();
        let worst = r.conditions.iter().chain(&r.raw_conditions).map(|c| c.max_residual).fold(0.0, f64::max);
        assert!(r.passed && worst < 1e-10, "{} {worst}", l.density());
    }
}

#[test]
fn scaling_by_a_nonconstant_factor_breaks_variationality() {
    let eps = SourceForm::new(parse("x*xdd").unwrap(), parse("x*ydd").unwrap(), true).unwrap();
    assert!(!helmholtz(&eps, &CheckOptions::default()).unwrap().passed);
}

#[test]
fn time_dependence_is_refused_unless_allowed() {
    assert!(matches!(
        SourceForm::new(parse("xdd + t").unwrap(), parse("ydd").unwrap(), true),
        Err(VarError::TimeDependent)
    ));
    let eps = SourceForm::new(parse("xdd + t").unwrap(), parse("ydd").unwrap(), false).unwrap();
    assert!(matches!(helmholtz(&eps, &CheckOptions::default()), Err(VarError::TimeDependent)));
    let r = helmholtz(&eps, &CheckOptions { allow_time_dependence: true, ..CheckOptions::default() }).unwrap();
    assert!(r.passed && r.warnings.len() == 1);
    let _ = Scope::default();
}

#[test]
fn higher_order_sources_are_rejected() {
    assert!(matches!(
        SourceForm::new(parse("xddd").unwrap(), parse("0").unwrap(), true),
        Err(VarError::OrderTooHigh("xddd"))
    ));
}
