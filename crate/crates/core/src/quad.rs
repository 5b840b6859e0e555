//! Composite Gauss–Legendre quadrature.

use alloc::vec::Vec;

/// Positive nodes and weights of the 16-point Gauss–Legendre rule on [−1, 1].
const GL16: [(f64, f64); 8] = [
    (0.095_012_509_837_637_440_19, 0.189_450_610_455_068_496_29),
    (0.281_603_550_779_258_913_23, 0.182_603_415_044_923_588_87),
    (0.458_016_777_657_227_386_34, 0.169_156_519_395_002_538_19),
    (0.617_876_244_402_643_748_45, 0.149_595_988_816_576_732_08),
    (0.755_404_408_355_003_033_90, 0.124_628_971_255_533_872_05),
    (0.865_631_202_387_831_743_88, 0.095_158_511_682_492_784_81),
    (0.944_575_023_073_232_576_08, 0.062_253_523_938_647_892_86),
    (0.989_400_934_991_649_932_60, 0.027_152_459_411_754_094_85),
];

/// Quadrature failed to reach its tolerance within the panel cap.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("quadrature on [{lo}, {hi}] did not converge")]
pub struct NonConvergence {
    pub lo: f64,
    pub hi: f64,
}

/// Panel-doubling controls: stop when two successive estimates differ by
/// less than `tol · max(1, |I|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adaptive {
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive { tol: 1e-10, max_panels: 1 << 10 }
    }
}

/// Composite 16-point rule with `panels` equal panels.
pub fn composite<E>(mut f: impl FnMut(f64) -> Result<f64, E>, a: f64, b: f64, panels: usize) -> Result<f64, E> {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for &(x, w) in &GL16 {
            s += w * (f(mid - half * x)? + f(mid + half * x)?);
        }
        total += s * half;
    }
    Ok(total)
}

/// Adaptive composite Gauss–Legendre integral of `f` over `[a, b]`.
pub fn integrate<E: From<NonConvergence>>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    opts: &Adaptive,
) -> Result<f64, E> {
    let mut prev = composite(&mut f, a, b, 1)?;
    let mut panels = 2;
    while panels <= opts.max_panels {
        let next = composite(&mut f, a, b, panels)?;
        let scale = if crate::num::abs(next) > 1.0 { crate::num::abs(next) } else { 1.0 };
        if crate::num::abs(next - prev) <= opts.tol * scale {
            return Ok(next);
        }
        prev = next;
        panels *= 2;
    }
    Err(NonConvergence { lo: a, hi: b }.into())
}

/// Nodes and weights of the composite rule, in increasing node order.
pub fn rule(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let half = 0.5 * h;
    let mut out = Vec::with_capacity(16 * panels);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(x, w) in GL16.iter().rev() {
            out.push((mid - half * x, w * half));
        }
        for &(x, w) in &GL16 {
            out.push((mid + half * x, w * half));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::convert::Infallible;

    fn ok(v: f64) -> Result<f64, NonConvergence> {
        Ok(v)
    }

    #[test]
    fn polynomials_up_to_degree_31_are_exact_on_one_panel() {
        let v = composite(|x: f64| Ok::<_, Infallible>(crate::num::powi(x, 31) + crate::num::powi(x, 30)), 0.0, 1.0, 1)
            .unwrap();
        assert!((v - (1.0 / 32.0 + 1.0 / 31.0)).abs() < 1e-15);
    }

    #[test]
    fn smooth_integrand_converges() {
        let v = integrate(|x| ok(crate::num::exp(x) * crate::num::sin(3.0 * x)), 0.0, 2.0, &Adaptive::default()).unwrap();
        // ∫ e^x sin 3x = e^x (sin 3x − 3 cos 3x)/10
        let f = |x: f64| crate::num::exp(x) * (crate::num::sin(3.0 * x) - 3.0 * crate::num::cos(3.0 * x)) / 10.0;
        assert!((v - (f(2.0) - f(0.0))).abs() < 1e-13);
    }

    #[test]
    fn reversed_interval_flips_sign() {
        let a = integrate(|x| ok(x * x), 0.0, 1.5, &Adaptive::default()).unwrap();
        let b = integrate(|x| ok(x * x), 1.5, 0.0, &Adaptive::default()).unwrap();
        assert!((a + b).abs() < 1e-15);
    }

    #[test]
    fn oscillatory_integrand_hits_the_cap() {
        let opts = Adaptive { tol: 1e-14, max_panels: 4 };
        let r = integrate(|x| ok(crate::num::sin(1e4 * x)), 0.0, 1.0, &opts);
        assert_eq!(r, Err(NonConvergence { lo: 0.0, hi: 1.0 }));
    }

    #[test]
    fn rule_weights_sum_to_length() {
        let r = rule(-1.0, 2.0, 3);
        assert_eq!(r.len(), 48);
        let total: f64 = r.iter().map(|p| p.1).sum();
        assert!((total - 3.0).abs() < 1e-14);
        assert!(r.windows(2).all(|w| w[0].0 < w[1].0));
    }
}
