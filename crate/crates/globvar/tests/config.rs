use globvar::config::{Bound, ConfigError, Numerics};
use globvar::{Problem, ProblemConfig};

fn problem(text: &str) -> Result<Problem, ConfigError> {
    Problem::from_config(&ProblemConfig::from_toml(text)?)
}

#[test]
fn defaults() {
    let c = ProblemConfig::from_toml("[[charts]]\nname = \"a\"\neps = [\"xdd\", \"ydd\"]\n").unwrap();
    assert_eq!(c.numerics, Numerics::default());
    assert_eq!(c.numerics.tol_symbolic, 1e-9);
    assert_eq!(c.numerics.tol_quadrature, 1e-6);
    assert_eq!(c.numerics.tol_cohomology, 1e-4);
    assert_eq!((c.numerics.samples, c.numerics.seed), (200, 42));
    assert!(c.flags.time_independent);
    assert_eq!(c.charts[0].coords, ["x".to_string(), "y".to_string()]);
    let p = Problem::from_config(&c).unwrap();
    assert!(p.charts[0].domain[0].lo.is_infinite() && p.charts[0].domain[0].hi.is_infinite());
    assert!(p.cover.is_none());
}

#[test]
fn bounds_are_constant_expressions() {
    let p = problem(
        "[constants]\nw = 0.5\n[[charts]]\nname = \"a\"\ndomain = [[\"-pi\", \"2*pi\"], [\"-w\", 3]]\neps = [\"xdd\", \"ydd\"]\n",
    )
    .unwrap();
    let d = p.charts[0].domain;
    assert_eq!((d[0].lo, d[0].hi), (-std::f64::consts::PI, 2.0 * std::f64::consts::PI));
    assert_eq!((d[1].lo, d[1].hi), (-0.5, 3.0));
    let err = problem("[[charts]]\nname = \"a\"\ndomain = [[\"x\", 1], [0, 1]]\neps = [\"xdd\", \"ydd\"]\n").unwrap_err();
    assert!(matches!(err, ConfigError::Bound { .. }), "{err}");
    let c: ProblemConfig =
        ProblemConfig::from_toml("[[charts]]\nname = \"a\"\ndomain = [[0, \"inf\"], [0, 1.5]]\neps = [\"0\", \"0\"]\n").unwrap();
    assert_eq!(c.charts[0].domain[1][1], Bound::Number(1.5));
}

#[test]
fn chart_names_map_to_jet_names() {
    let p = problem(
        "[constants]\nk = 3.0\n[[charts]]\nname = \"a\"\ncoords = [\"u\", \"v\"]\neps = [\"udd + k*u\", \"vdd - ud\"]\n",
    )
    .unwrap();
    let eps = &p.charts[0].source.eps;
    assert_eq!(eps[0].to_string(), "xdd + 3*x");
    assert_eq!(p.charts[0].display(&eps[1]), "vdd - ud");
}

#[test]
fn cover_successors_default_to_the_next_cell() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/torus_constant.toml")).unwrap();
    let p = problem(&text).unwrap();
    let cover = p.cover.unwrap();
    assert_eq!(cover.cells.len(), 16);
    assert_eq!(cover.successor[0], Some(1));
    assert_eq!(cover.successor[15], None);
}

#[test]
fn rejected_configurations() {
    let base = "[[charts]]\nname = \"a\"\neps = [\"xdd\", \"ydd\"]\n";
    let cases = [
        format!("{base}[[charts]]\nname = \"a\"\neps = [\"xdd\", \"ydd\"]\n"),
        format!("{base}[[transitions]]\nfrom = \"a\"\nto = \"a\"\npieces = [{{ map = [\"x\", \"xd\"] }}]\n"),
        format!("{base}[cover]\ncells = [{{ chart = \"b\", x = [0, 1], y = [0, 1] }}]\n"),
        format!("{base}[verify]\nlagrangian = [\"1\", \"2\"]\n"),
        format!("{base}[numerics]\nsamples = 0\n"),
        "[[charts]]\nname = \"a\"\neps = [\"xdd + t\", \"ydd\"]\n".to_string(),
    ];
    for text in &cases {
        assert!(problem(text).is_err(), "{text}");
    }
    // time dependence is allowed when declared
    let timed = "[[charts]]\nname = \"a\"\neps = [\"xdd + t\", \"ydd\"]\n[flags]\ntime_independent = false\n";
    assert!(problem(timed).is_ok());
}
