use super::*;
use crate::expr::parse;
use crate::globalize::Construction;
use crate::jet::Coord;
use crate::testdata::*;
use crate::varcheck::{CheckOptions, SourceForm};

fn map(x: &str, y: &str) -> TransitionMap {
    let unit = Interval::new(-2.0, 2.0);
    TransitionMap::new("A", "B", alloc::vec![Piece::new(Vec::new(), [parse(x).unwrap(), parse(y).unwrap()])], [unit, unit])
}

#[test]
fn prolongation_examples() {
    let p = JetPoint::second(0.1, 0.3, -0.2, 0.5, 0.7, -1.1, 0.4);
    let id = map("x", "y");
    assert_eq!(id.prolong(&p).unwrap(), p);
    let rot = map("-y", "x").prolong(&p).unwrap();
    assert_eq!(rot.values()[..7], [0.1, 0.2, 0.3, -0.7, 0.5, -0.4, -1.1]);

    let atlas = mobius_atlas();
    let t = atlas.transition("Vbar", "V").unwrap();
    let q = JetPoint::first(0.0, 4.0, 0.3, 0.8, -0.6);
    let image = t.prolong(&q).unwrap();
    let two_pi = 2.0 * core::f64::consts::PI;
    assert_eq!(image.values()[..5], [0.0, 4.0 - two_pi, -0.3, 0.8, 0.6]);
    assert!(matches!(t.prolong(&JetPoint::first(0.0, core::f64::consts::PI, 0.0, 0.0, 0.0)), Err(AtlasError::NoPiece { .. })));
}

#[test]
fn chain_rule_for_accelerations() {
    let t = map("x*y + sin(x)", "exp(y) - x^2");
    let p = JetPoint::second(0.0, 0.4, -0.3, 1.2, -0.7, 0.5, 0.9);
    let image = t.prolong(&p).unwrap();
    // Oracle: differentiate the image of the curve c(s) = p + ṗ s + p̈ s²/2.
    let curve = |s: f64| {
        let x = 0.4 + 1.2 * s + 0.25 * s * s;
        let y = -0.3 - 0.7 * s + 0.45 * s * s;
        [x * y + x.sin(), y.exp() - x * x]
    };
    let h = 1e-4;
    for i in 0..2 {
        let (a, b, c) = (curve(-h)[i], curve(0.0)[i], curve(h)[i]);
        assert!(((c - a) / (2.0 * h) - image.values()[3 + i]).abs() < 1e-7);
        assert!(((c - 2.0 * b + a) / (h * h) - image.values()[5 + i]).abs() < 1e-5);
    }
}

#[test]
fn pullback_examples() {
    let rho = DifferentialForm::from_terms(
        2,
        &[(&[Coord::X, Coord::Y], parse("x*yd").unwrap()), (&[Coord::T, Coord::Xd], parse("y").unwrap())],
    );
    let p = JetPoint::first(0.0, 0.3, 0.2, -0.5, 1.0);
    assert_eq!(map("x", "y").pullback(&rho, &p).unwrap(), rho.evaluate(&p).unwrap());
    let area = DifferentialForm::term(&[Coord::X, Coord::Y], &Expression::one());
    let pulled = map("-y", "x").pullback(&area, &p).unwrap();
    assert_eq!(pulled.get(&[Coord::X, Coord::Y]), 1.0);
    assert_eq!(pulled.max_abs(), 1.0);
    // d(x̄) for x̄ = x² picks up 2x, and dẋ̄ = 2ẋ dx + 2x dẋ.
    let sq = map("x^2", "y");
    let dxd = sq.pullback(&DifferentialForm::dq(Coord::Xd), &p).unwrap();
    assert!((dxd.get(&[Coord::X]) + 1.0).abs() < 1e-15 && (dxd.get(&[Coord::Xd]) - 0.6).abs() < 1e-15);
}

#[test]
fn functoriality_of_prolongation() {
    let unit = Interval::new(-1.0, 1.0);
    let t2 = TransitionMap::new(
        "A",
        "B",
        alloc::vec![Piece::new(Vec::new(), [parse("x + sin(y)/3").unwrap(), parse("y + x^2/5").unwrap()])],
        [unit, unit],
    );
    let t1 = TransitionMap::new(
        "B",
        "C",
        alloc::vec![Piece::new(Vec::new(), [parse("exp(x/2)*cos(y)").unwrap(), parse("x*y^3 + y").unwrap()])],
        [unit, unit],
    );
    let composed = t1.compose(&t2);
    let mut s = JetSampler::new(3).in_box([unit, unit]);
    for p in s.points(2, 100) {
        let a = composed.prolong(&p).unwrap();
        let b = t1.prolong(&t2.prolong(&p).unwrap()).unwrap();
        let d = a.values().iter().zip(b.values()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        assert!(d < 1e-8, "{d}");
    }
}

#[test]
fn example_atlases_are_consistent() {
    let m = mobius_atlas().validate(200, 1).unwrap();
    assert!(m.round_trip < 1e-12 && m.min_jacobian > 0.5);
    let t = torus_atlas(false).validate(200, 1).unwrap();
    assert!(t.round_trip < 1e-12);
    assert!(t.triple_samples > 100 && t.composition < 1e-8, "{t:?}");
}

#[test]
fn atlas_errors() {
    let unit = Interval::new(-1.0, 1.0);
    let a = Chart::new("A", ["u", "v"], [unit, unit]).unwrap();
    let b = Chart::new("B", ["u", "v"], [unit, unit]).unwrap();
    let one_way = TransitionMap::identity("A", [unit, unit]);
    let one_way = TransitionMap { to: String::from("B"), ..one_way };
    assert!(matches!(
        Atlas::new(alloc::vec![a.clone(), b.clone()], alloc::vec![one_way.clone()], true, false),
        Err(AtlasError::MissingTransition { .. })
    ));
    assert!(matches!(Chart::new("C", ["u", "u"], [unit, unit]), Err(AtlasError::DuplicateCoordinates(_))));
    let overlapping = TransitionMap::new(
        "A",
        "B",
        alloc::vec![
            Piece::new(alloc::vec![parse("x + 0.5").unwrap()], [parse("x").unwrap(), parse("y").unwrap()]),
            Piece::new(alloc::vec![parse("0.5 - x").unwrap()], [parse("x").unwrap(), parse("y").unwrap()]),
        ],
        [unit, unit],
    );
    let back = TransitionMap { from: String::from("B"), to: String::from("A"), ..one_way.clone() };
    let atlas = Atlas::new(alloc::vec![a, b], alloc::vec![overlapping, back], true, false).unwrap();
    assert!(matches!(atlas.validate(50, 0), Err(AtlasError::AmbiguousPiece { .. })));
}

fn family(atlas: &Atlas, eps: &SourceForm, domain_of: impl Fn(usize) -> [Interval; 2]) -> [Vec<DifferentialForm>; 4] {
    let mut out: [Vec<DifferentialForm>; 4] = Default::default();
    for k in 0..atlas.charts.len() {
        let c = Construction::new(eps, &CheckOptions { domain: domain_of(k), ..CheckOptions::default() }).unwrap();
        out[0].push(eps.to_form());
        out[1].push(c.split.alpha_prime.clone());
        out[2].push(c.kappa.clone());
        out[3].push(c.omega.clone());
    }
    out
}

#[test]
fn example_data_glue_globally() {
    let m = mobius_atlas();
    let domains = |a: &Atlas| {
        let d: Vec<[Interval; 2]> = a.charts.iter().map(|c| c.domain).collect();
        move |k: usize| d[k]
    };
    for (name, atlas, eps) in [
        ("mobius", m.clone(), mobius()),
        ("torus", torus_atlas(false), torus_constant()),
        ("torus-trig", torus_atlas(false), torus_trig()),
    ] {
        let fam = family(&atlas, &eps, domains(&atlas));
        for (label, members) in ["epsilon", "alpha'", "kappa", "omega"].iter().zip(&fam) {
            let r = atlas.check_global(members, 100, 9).unwrap();
            assert!(r.passed(1e-8), "{name} {label}: {}", r.max_mismatch());
        }
    }
}

#[test]
fn broken_family_is_reported() {
    let atlas = mobius_atlas();
    let eps = mobius();
    let flipped = SourceForm::new(eps.eps[0].neg(), eps.eps[1].clone(), true).unwrap();
    let r = atlas.check_global(&[eps.to_form(), flipped.to_form()], 100, 9).unwrap();
    assert!(r.max_mismatch() > 0.1);
}
