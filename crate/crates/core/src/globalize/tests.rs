use super::*;
use crate::atlas::Interval;
use crate::expr::parse;
use crate::lagrange::equivalent;
use crate::testdata::*;

fn opts(domain: [Interval; 2]) -> CheckOptions {
    CheckOptions { domain, ..CheckOptions::default() }
}

fn unit() -> [Interval; 2] {
    CheckOptions::default().domain
}

fn fixtures() -> Vec<(&'static str, SourceForm, [Interval; 2])> {
    alloc::vec![
        ("free", free_particle(), unit()),
        ("harmonic", harmonic(), unit()),
        ("mobius", mobius(), mobius_box()),
        ("torus", torus_constant(), torus_box()),
        ("torus-trig", torus_trig(), torus_box()),
    ]
}

fn form_gap(a: &DifferentialForm, b: &DifferentialForm, domain: [Interval; 2], n: usize) -> f64 {
    form_worst_case(&a.sub(b), &opts(domain).sampler().points(1, n)).unwrap().0
}

const MOBIUS_G: &str = "((r + tau*cos(phi/2))^2 + tau^2/4)";
const MOBIUS_K: &str = "(4*cos(phi/2)*(r + tau*cos(phi/2)) + tau)";

#[test]
fn free_particle_forms() {
    let c = Construction::new(&free_particle(), &opts(unit())).unwrap();
    use Coord::*;
    let mu = DifferentialForm::from_terms(1, &[(&[Xd], parse("-xd*t").unwrap()), (&[Yd], parse("-yd*t").unwrap())]);
    assert!(form_gap(&c.mu0, &mu, unit(), 50) == 0.0);
    let h = c.mu0.horizontalize().unwrap();
    let expected = parse("-(xdd*xd + ydd*yd)*t").unwrap();
    let points = opts(unit()).sampler().points(2, 50);
    assert!(worst_case(&[h.density().sub(&expected)], &points).unwrap().0 < 1e-15);
    let k = DifferentialForm::from_terms(1, &[(&[X], parse("-xd").unwrap()), (&[Y], parse("-yd").unwrap())]);
    assert!(form_gap(&c.kappa, &k, unit(), 50) < 1e-15);
    assert!(c.omega.is_zero());
}

#[test]
fn fiber_operators() {
    use Coord::*;
    let k = fiber_integrate(&DifferentialForm::term(&[X, Xd], &Expression::one()), Fiber::K1).unwrap();
    assert!(form_gap(&k, &DifferentialForm::term(&[X], &parse("-xd").unwrap()), unit(), 20) < 1e-15);
    let split = Construction::new(&mobius(), &opts(mobius_box())).unwrap().split;
    let k1 = fiber_integrate(&split.alpha_prime, Fiber::K1).unwrap();
    let p = JetPoint::first(0.0, 0.3, 0.4, 0.0, 0.8);
    assert_eq!(k1.evaluate(&p).unwrap().max_abs(), 0.0);
    assert!(matches!(
        fiber_integrate(&DifferentialForm::term(&[T, X], &Expression::one()), Fiber::K1),
        Err(GlobalizeError::FiberBase { coord: "t", .. })
    ));
    assert!(matches!(
        fiber_integrate(&DifferentialForm::term(&[X, Xd], &Expression::one()), Fiber::K2),
        Err(GlobalizeError::FiberBase { coord: "xd", .. })
    ));
    // K₁ identity: ρ − s*ρ = d(K₁ρ) for closed ρ.
    let back = on_xdot_zero(&split.alpha_prime);
    let lhs = split.alpha_prime.sub(&back);
    assert!(form_gap(&lhs, &k1.exterior_derivative().unwrap(), mobius_box(), 100) < 1e-9);
}

#[test]
fn mobius_forms_match_closed_forms() {
    let s = mobius_scope();
    let o = opts(mobius_box());
    let c = Construction::new(&mobius(), &o).unwrap();
    use Coord::*;
    let mu = DifferentialForm::from_terms(
        1,
        &[
            (&[X], p(&alloc::format!("-({MOBIUS_A_PHI} + phid*taud*{MOBIUS_K}/2)*t"), &s)),
            (&[Y], p(&alloc::format!("-({MOBIUS_A_TAU} - phid^2*{MOBIUS_K}/2)*t"), &s)),
            (&[Xd], p(&alloc::format!("-({MOBIUS_B_PHIPHI})*phid*t"), &s)),
            (&[Yd], p("taud*t", &s)),
        ],
    );
    assert!(form_gap(&c.mu0, &mu, mobius_box(), 50) < 1e-10);
    let kappa = DifferentialForm::from_terms(1, &[(&[X], p(&alloc::format!("{MOBIUS_G}*phid"), &s)), (&[Y], p("taud", &s))]);
    assert!(form_gap(&c.kappa, &kappa, mobius_box(), 50) < 1e-10);
    let at = JetPoint::first(0.0, 0.0, 0.5, 0.3, 0.2);
    assert!((c.kappa.evaluate(&at).unwrap().get(&[X]) - 1.89375).abs() < 1e-10);
    assert!(c.omega.is_zero());
}

#[test]
fn torus_forms_match_closed_forms() {
    let (s, _) = torus_scope("1", "1", "1");
    let c = Construction::new(&torus_constant(), &opts(torus_box())).unwrap();
    use Coord::*;
    let mu = DifferentialForm::from_terms(
        1,
        &[
            (&[Y], p("r*(R + r*cos(theta))*phid^2*sin(theta)*t", &s)),
            (&[Xd], p("-phid*t*(R + r*cos(theta))^2", &s)),
            (&[Yd], p("-thetad*t*r^2", &s)),
        ],
    );
    assert!(form_gap(&c.mu0, &mu, torus_box(), 50) < 1e-10);
    let kappa =
        DifferentialForm::from_terms(1, &[(&[X], p("-phid*(R + r*cos(theta))^2", &s)), (&[Y], p("-thetad*r^2", &s))]);
    assert!(form_gap(&c.kappa, &kappa, torus_box(), 50) < 1e-10);
    let w = c.omega_coefficient().evaluate(&JetPoint::first(0.0, 0.0, core::f64::consts::FRAC_PI_2, 0.0, 0.0)).unwrap();
    assert!((w + 2.0).abs() < 1e-12);

    let trig = Construction::new(&torus_trig(), &opts(torus_box())).unwrap();
    let o = CheckOptions { samples: 200, ..opts(torus_box()) };
    assert!(trig.omega_magnitude(&o).unwrap().0 < 1e-12);
}

#[test]
fn kappa_matches_the_explicit_integrals() {
    for (name, eps, domain) in fixtures() {
        let c = Construction::new(&eps, &opts(domain)).unwrap();
        let ab = &c.lepage.ab;
        let nu = |e: &Expression| Expression::integrate(e, "xd", &Expression::zero(), &Expression::var("xd"));
        let sigma = |e: &Expression| {
            let e = e.substitute("xd", &Expression::zero());
            Expression::integrate(&e, "yd", &Expression::zero(), &Expression::var("yd"))
        };
        let kx = nu(&ab.b_xx).add(&sigma(&ab.b_xy)).neg();
        let ky = nu(&ab.b_xy).add(&sigma(&ab.b_yy)).neg();
        let explicit = DifferentialForm::from_terms(1, &[(&[Coord::X], kx), (&[Coord::Y], ky)]);
        assert!(form_gap(&c.kappa, &explicit, domain, 50) < 1e-12, "{name}");
        let zero_section: Vec<JetPoint> =
            opts(domain).sampler().points(1, 20).iter().map(|p| JetPoint::first(p.t(), p.position()[0], p.position()[1], 0.0, 0.0)).collect();
        assert_eq!(form_worst_case(&c.kappa, &zero_section).unwrap().0, 0.0, "{name}");
    }
}

#[test]
fn construction_identities_hold() {
    for (name, eps, domain) in fixtures() {
        let o = opts(domain);
        let c = Construction::new(&eps, &o).unwrap();
        let r = c.identities(&o).unwrap();
        assert!(r[0].1 < 1e-10, "{name}: {} {}", r[0].0, r[0].1);
        assert!(r[1].1 < 1e-12, "{name}: {} {}", r[1].0, r[1].1);
        assert!(r[2].1 < 1e-8, "{name}: {} {}", r[2].0, r[2].1);
    }
}

#[test]
fn simple_lagrangians() {
    let o = opts(unit());
    let l = simple_global_lagrangian(&free_particle(), &o).unwrap();
    let expected = parse("-t*(xd*xdd + yd*ydd) - xd^2 - yd^2").unwrap();
    let points = o.sampler().points(2, 50);
    assert!(worst_case(&[l.density().sub(&expected)], &points).unwrap().0 < 1e-13);

    let s = mobius_scope();
    let o = opts(mobius_box());
    let l = simple_global_lagrangian(&mobius(), &o).unwrap();
    let printed = p(
        &alloc::format!(
            "-tau*phid^2*sin(phi/2)*(r + tau*cos(phi/2))*phid*t/2 + phid^2*{MOBIUS_K}*taud*t/4 \
             + {MOBIUS_G}*phid*phidd*t + taud*taudd*t + {MOBIUS_G}*phid^2 + taud^2"
        ),
        &s,
    );
    assert!(worst_case(&[l.density().sub(&printed)], &o.sampler().points(2, 100)).unwrap().0 < 1e-8);
    let kinetic = Lagrangian::new(p(&alloc::format!("(taud^2 + {MOBIUS_G}*phid^2)/2"), &s)).unwrap();
    assert!(equivalent(&l, &kinetic, &o).unwrap().passed);

    let t = opts(torus_box());
    assert!(matches!(simple_global_lagrangian(&torus_constant(), &t), Err(GlobalizeError::NotSimple { .. })));
    let l = simple_global_lagrangian(&torus_trig(), &t).unwrap();
    assert!(euler_lagrange_residual(&l, &torus_trig(), &t).unwrap().0 < 1e-9);
}

