//! Source forms of the worked examples, shared by unit tests.

use crate::atlas::Interval;
use crate::expr::{parse_with, Expression, Scope};
use crate::varcheck::SourceForm;

/// Scope renaming chart coordinates `u`, `v` (and their dotted names) to
/// canonical jet names.
pub fn chart_scope(u: &str, v: &str, constants: &[(&str, f64)]) -> Scope {
    let mut s = Scope::standard();
    for (suffix, (cx, cy)) in [("", ("x", "y")), ("d", ("xd", "yd")), ("dd", ("xdd", "ydd"))] {
        s = s.with_rename(&alloc::format!("{u}{suffix}"), cx).with_rename(&alloc::format!("{v}{suffix}"), cy);
    }
    for (k, val) in constants {
        s = s.with_constant(k, *val);
    }
    s
}

pub fn p(text: &str, scope: &Scope) -> Expression {
    parse_with(text, scope).unwrap()
}

pub fn source(ex: &str, ey: &str, scope: &Scope) -> SourceForm {
    SourceForm::new(p(ex, scope), p(ey, scope), true).unwrap()
}

pub const MOBIUS_B_PHIPHI: &str = "-((r + tau*cos(phi/2))^2 + tau^2/4)";
pub const MOBIUS_A_PHI: &str =
    "phid^2*tau*sin(phi/2)*(r + tau*cos(phi/2))/2 - phid*taud*(4*cos(phi/2)*(r + tau*cos(phi/2)) + tau)/2";
pub const MOBIUS_A_TAU: &str = "phid^2*(4*cos(phi/2)*(r + tau*cos(phi/2)) + tau)/4";

pub fn mobius_scope() -> Scope {
    chart_scope("phi", "tau", &[("r", 2.0)])
}

pub fn mobius() -> SourceForm {
    let s = mobius_scope();
    source(
        &alloc::format!("{MOBIUS_A_PHI} + ({MOBIUS_B_PHIPHI})*phidd"),
        &alloc::format!("{MOBIUS_A_TAU} - taudd"),
        &s,
    )
}

pub fn mobius_box() -> [Interval; 2] {
    [Interval::new(-core::f64::consts::PI, core::f64::consts::PI), Interval::new(-1.0, 1.0)]
}

pub fn torus_scope(a: &str, b: &str, c: &str) -> (Scope, alloc::string::String) {
    let s = chart_scope("phi", "theta", &[("R", 2.0), ("r", 1.0)]);
    let g = alloc::format!("(({a})*sin(theta) - ({b})*sin(phi)*cos(theta) + ({c})*cos(phi)*cos(theta))");
    (s, g)
}

pub fn torus(a: &str, b: &str, c: &str) -> SourceForm {
    let (s, g) = torus_scope(a, b, c);
    source(
        &alloc::format!("-r*(R + r*cos(theta))*(2*phid*sin(theta) + {g})*thetad + (R + r*cos(theta))^2*phidd"),
        &alloc::format!("r*(R + r*cos(theta))*(phid*sin(theta) + {g})*phid + r^2*thetadd"),
        &s,
    )
}

pub fn torus_constant() -> SourceForm {
    torus("1", "1", "1")
}

pub fn torus_trig() -> SourceForm {
    torus("cos(theta)*sin(phi)", "sin(theta) + cos(phi)", "sin(phi)")
}

pub fn torus_box() -> [Interval; 2] {
    let pi = core::f64::consts::PI;
    [Interval::new(-pi, pi), Interval::new(-pi, pi)]
}

pub fn free_particle() -> SourceForm {
    source("xdd", "ydd", &Scope::default())
}

pub fn harmonic() -> SourceForm {
    source("xdd + x", "ydd + y", &Scope::default())
}

use crate::atlas::{Atlas, Chart, Piece, TransitionMap};
use alloc::vec::Vec;

fn e(text: &str) -> Expression {
    parse_with(text, &Scope::standard()).unwrap()
}

fn piece(guards: &[&str], map: [&str; 2]) -> Piece {
    Piece::new(guards.iter().map(|g| e(g)).collect(), map.map(e))
}

pub fn mobius_atlas() -> Atlas {
    let pi = core::f64::consts::PI;
    let width = Interval::new(-1.0, 1.0);
    let v = [Interval::new(-pi, pi), width];
    let vbar = [Interval::new(0.0, 2.0 * pi), width];
    Atlas::new(
        alloc::vec![Chart::new("V", ["phi", "tau"], v).unwrap(), Chart::new("Vbar", ["phibar", "taubar"], vbar).unwrap()],
        alloc::vec![
            TransitionMap::new("V", "Vbar", alloc::vec![piece(&["x"], ["x", "y"]), piece(&["-x"], ["x + 2*pi", "-y"])], v),
            TransitionMap::new(
                "Vbar",
                "V",
                alloc::vec![piece(&["pi - x"], ["x", "y"]), piece(&["x - pi"], ["x - 2*pi", "-y"])],
                vbar
            ),
        ],
        false,
        false,
    )
    .unwrap()
}

/// Per-coordinate branches between the angle ranges (−π, π) ("p") and
/// (0, 2π) ("0").
fn angle_branches(from: char, to: char, var: &'static str) -> Vec<(Option<alloc::string::String>, alloc::string::String)> {
    use alloc::format;
    match (from, to) {
        ('p', '0') => alloc::vec![(Some(var.into()), var.into()), (Some(format!("-{var}")), format!("{var} + 2*pi"))],
        ('0', 'p') => alloc::vec![(Some(format!("pi - {var}")), var.into()), (Some(format!("{var} - pi")), format!("{var} - 2*pi"))],
        _ => alloc::vec![(None, var.into())],
    }
}

pub fn angle_range(kind: char) -> Interval {
    let pi = core::f64::consts::PI;
    if kind == 'p' {
        Interval::new(-pi, pi)
    } else {
        Interval::new(0.0, 2.0 * pi)
    }
}

/// The four rectangle charts pp, 00, p0, 0p of the torus (p: angle in
/// (−π, π), 0: angle in (0, 2π)).
pub fn torus_atlas(compact: bool) -> Atlas {
    let kinds = ["pp", "00", "p0", "0p"];
    let charts = kinds
        .iter()
        .map(|k| {
            let c: Vec<char> = k.chars().collect();
            Chart::new(k, ["phi", "theta"], [angle_range(c[0]), angle_range(c[1])]).unwrap()
        })
        .collect();
    let mut transitions = Vec::new();
    for a in kinds {
        for b in kinds {
            if a == b {
                continue;
            }
            let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
            let mut pieces = Vec::new();
            for (gx, mx) in angle_branches(ac[0], bc[0], "x") {
                for (gy, my) in angle_branches(ac[1], bc[1], "y") {
                    let guards: Vec<Expression> = gx.iter().chain(gy.iter()).map(|g| e(g)).collect();
                    pieces.push(Piece::new(guards, [e(&mx), e(&my)]));
                }
            }
            transitions.push(TransitionMap::new(a, b, pieces, [angle_range(ac[0]), angle_range(ac[1])]));
        }
    }
    Atlas::new(charts, transitions, true, compact).unwrap()
}

/// Cells of side π/2 + 0.5 centred on the (π/2)-grid of the torus, in
/// boustrophedon order ending at the cell around (0, 0) in chart pp.
pub fn torus_cells() -> Vec<crate::cohomology::Cell> {
    let pi = core::f64::consts::PI;
    let half = pi / 4.0 + 0.25;
    let kind = |i: usize| if i < 2 { 'p' } else { '0' };
    let mut order = Vec::new();
    for (row, k) in [3usize, 2, 1, 0].into_iter().enumerate() {
        let cols: Vec<usize> = if row % 2 == 0 { (0..4).collect() } else { (0..4).rev().collect() };
        for i in cols {
            order.push((i, k));
        }
    }
    order
        .into_iter()
        .map(|(i, k)| {
            let name: alloc::string::String = [kind(i), kind(k)].iter().collect();
            let chart = ["pp", "00", "p0", "0p"].iter().position(|c| *c == name).unwrap();
            let (cx, cy) = (i as f64 * pi / 2.0, k as f64 * pi / 2.0);
            crate::cohomology::Cell::new(
                chart,
                [Interval::new(cx - half, cx + half), Interval::new(cy - half, cy + half)],
            )
        })
        .collect()
}

pub fn torus_cover() -> alloc::sync::Arc<crate::cohomology::CoveredSurface> {
    alloc::sync::Arc::new(crate::cohomology::CoveredSurface::new(torus_atlas(true), torus_cells(), None).unwrap())
}
