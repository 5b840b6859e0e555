use super::*;
use crate::atlas::Interval;
use crate::expr::parse;
use crate::jet::JetPoint;
use crate::testdata::*;

fn fixtures() -> alloc::vec::Vec<(&'static str, SourceForm, [Interval; 2])> {
    let unit = CheckOptions::default().domain;
    alloc::vec![
        ("free", free_particle(), unit),
        ("harmonic", harmonic(), unit),
        ("mobius", mobius(), mobius_box()),
        ("torus", torus_constant(), torus_box()),
        ("torus-trig", torus_trig(), torus_box()),
    ]
}

fn opts(domain: [Interval; 2]) -> CheckOptions {
    CheckOptions { domain, ..CheckOptions::default() }
}

fn sampled(form: &DifferentialForm, domain: [Interval; 2], order: u8, n: usize) -> f64 {
    let points = opts(domain).sampler().points(order, n);
    form_worst_case(form, &points).unwrap().0
}

#[test]
fn free_particle_alpha_in_coordinates() {
    let le = lepage_equivalent(&free_particle(), &CheckOptions::default()).unwrap();
    let p = JetPoint::first(0.3, 0.1, -0.4, 0.7, -1.2);
    let v = le.alpha.evaluate(&p).unwrap();
    use Coord::*;
    assert_eq!(v.get(&[X, Xd]), 1.0);
    assert_eq!(v.get(&[Y, Yd]), 1.0);
    assert_eq!(v.get(&[Xd, T]), 0.7);
    assert_eq!(v.get(&[Yd, T]), -1.2);
    assert_eq!(v.get(&[X, T]), 0.0);
    assert_eq!(v.get(&[X, Y]), 0.0);
    let split = decompose_alpha(&le, &CheckOptions::default()).unwrap();
    let a0 = split.alpha0.evaluate(&p).unwrap();
    assert_eq!((a0.get(&[X]), a0.get(&[Y]), a0.get(&[Xd]), a0.get(&[Yd])), (0.0, 0.0, 0.7, -1.2));
    let ap = split.alpha_prime.evaluate(&p).unwrap();
    assert_eq!((ap.get(&[X, Xd]), ap.get(&[Y, Yd]), ap.get(&[X, Y])), (1.0, 1.0, 0.0));
}

#[test]
fn p1_recovers_the_source_form() {
    for (name, eps, domain) in fixtures() {
        let le = lepage_equivalent(&eps, &opts(domain)).unwrap();
        let [px, py] = le.alpha.p1().unwrap();
        let diff = [px.sub(&eps.eps[0]), py.sub(&eps.eps[1])];
        let points = opts(domain).sampler().points(2, 200);
        let (r, _) = worst_case(&diff, &points).unwrap();
        assert!(r < 1e-12, "{name}: {r}");
    }
}

#[test]
fn alpha_and_its_parts_are_closed() {
    for (name, eps, domain) in fixtures() {
        let o = opts(domain);
        let le = lepage_equivalent(&eps, &o).unwrap();
        let split = decompose_alpha(&le, &o).unwrap();
        for (part, f) in [("alpha", &le.alpha), ("alpha0", &split.alpha0), ("alpha'", &split.alpha_prime)] {
            let r = sampled(&f.exterior_derivative().unwrap(), domain, 1, 200);
            assert!(r < 1e-10, "{name} d{part}: {r}");
        }
        let r = sampled(&split.reassemble().sub(&le.alpha), domain, 1, 200);
        assert!(r < 1e-12, "{name}: reconstruction {r}");
    }
}

#[test]
fn contact_xy_coefficient_is_the_gyroscopic_term() {
    for (name, eps, domain) in fixtures() {
        let le = lepage_equivalent(&eps, &opts(domain)).unwrap();
        let coef = le.alpha.to_contact_basis().coefficient(&[Coord::X, Coord::Y]);
        let ab = decompose(&eps, &opts(domain)).unwrap();
        let f = ab.a[0].differentiate("yd").sub(&ab.a[1].differentiate("xd")).mul(&Expression::constant(0.5));
        let points = opts(domain).sampler().points(2, 100);
        assert!(worst_case(&[coef.sub(&f)], &points).unwrap().0 < 1e-12, "{name}");
    }
}

#[test]
fn mobius_alpha_prime_matches_closed_form() {
    let s = mobius_scope();
    let o = opts(mobius_box());
    let le = lepage_equivalent(&mobius(), &o).unwrap();
    let split = decompose_alpha(&le, &o).unwrap();
    use Coord::*;
    let expected = DifferentialForm::from_terms(
        2,
        &[
            (&[X, Y], p("-phid*(4*cos(phi/2)*(r + tau*cos(phi/2)) + tau)/2", &s)),
            (&[X, Xd], p(MOBIUS_B_PHIPHI, &s)),
            (&[Y, Yd], p("-1", &s)),
        ],
    );
    assert!(sampled(&split.alpha_prime.sub(&expected), mobius_box(), 1, 100) < 1e-12);
    // α′ is the dt-free part of α_ε.
    let dt_free = le.alpha.sub(&le.alpha.contract(T).wedge(&DifferentialForm::dt()).neg());
    assert!(sampled(&dt_free.sub(&expected), mobius_box(), 1, 100) < 1e-12);
}

#[test]
fn errors() {
    let bad = SourceForm::new(parse("yd").unwrap(), parse("0").unwrap(), true).unwrap();
    assert!(matches!(lepage_equivalent(&bad, &CheckOptions::default()), Err(LepageError::NotVariational(_))));
    let timed = SourceForm::new(parse("xdd - t").unwrap(), parse("ydd").unwrap(), false).unwrap();
    let o = CheckOptions { allow_time_dependence: true, ..CheckOptions::default() };
    let le = lepage_equivalent(&timed, &o).unwrap();
    assert!(matches!(decompose_alpha(&le, &o), Err(LepageError::TimeDependent)));
}
