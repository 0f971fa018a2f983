//! Endomorphism interfaces and Goodey–Weil probes.

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::func::{ConvexFunction, Perturbed};
use crate::pwl::{PwlFunction, Tail};
use crate::sample::{is_convex_sampled, linspace};
use crate::tol;

/// An additive map between spaces of convex functions on ℝⁿ, evaluated
/// pointwise.
pub trait EndoMap: Send + Sync {
    /// Ambient dimension of inputs and outputs.
    fn dim(&self) -> usize;

    /// `Ψ(f)[x]`.
    fn apply(&self, f: &dyn ConvexFunction, x: &[f64]) -> Result<ExtReal>;
}

/// An endomorphism of convex functions on ℝ acting on exact piecewise-linear
/// inputs.
pub trait Endo1D: Send + Sync {
    /// `Ψ(f)[x]`.
    fn apply_1d(&self, f: &PwlFunction, x: f64) -> Result<ExtReal>;
}

/// Checks that `x` has dimension `n`.
pub(crate) fn check_point(n: usize, x: &[f64]) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    Ok(())
}

/// Checks that `f`, if it fixes a dimension, has dimension `n`.
pub(crate) fn check_function(n: usize, f: &dyn ConvexFunction) -> Result<()> {
    match f.dim() {
        Some(d) if d != n => Err(Error::DimensionMismatch { expected: n, got: d }),
        _ => Ok(()),
    }
}

/// The zero map.
#[derive(Clone, Copy, Debug)]
pub struct ZeroEndo {
    pub n: usize,
}

impl EndoMap for ZeroEndo {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, _f: &dyn ConvexFunction, x: &[f64]) -> Result<ExtReal> {
        check_point(self.n, x)?;
        Ok(ExtReal::ZERO)
    }
}

impl Endo1D for ZeroEndo {
    fn apply_1d(&self, _f: &PwlFunction, _x: f64) -> Result<ExtReal> {
        Ok(ExtReal::ZERO)
    }
}

/// Views a one-dimensional [`EndoMap`] as an [`Endo1D`].
pub struct LineEndo<'a>(pub &'a dyn EndoMap);

impl Endo1D for LineEndo<'_> {
    fn apply_1d(&self, f: &PwlFunction, x: f64) -> Result<ExtReal> {
        self.0.apply(f, &[x])
    }
}

/// Result of a Goodey–Weil probe.
#[derive(Clone, Debug, PartialEq)]
pub struct GwReport {
    /// `Ψ(f₁ + φ)[x] - Ψ(f₁)[x]`.
    pub value: f64,
    /// The same difference computed from the second base.
    pub value_alt: f64,
    /// `|value - value_alt| <= tol (1 + |value|)`.
    pub consistent: bool,
}

/// Sampling used to validate that `f_i + φ` is convex.
#[derive(Clone, Debug)]
pub struct ProbeCheck {
    pub half_width: f64,
    pub samples: usize,
    pub tol: f64,
}

impl Default for ProbeCheck {
    fn default() -> ProbeCheck {
        ProbeCheck {
            half_width: 6.0,
            samples: 49,
            tol: tol::CONVEXITY,
        }
    }
}

fn finite_difference(a: ExtReal, b: ExtReal, what: &str) -> Result<f64> {
    match (a, b) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => Ok(a - b),
        _ => Err(Error::InfiniteValue(what.to_string())),
    }
}

fn report(value: f64, value_alt: f64, tol: f64) -> GwReport {
    GwReport {
        value,
        value_alt,
        consistent: (value - value_alt).abs() <= tol * (1.0 + value.abs()),
    }
}

/// Goodey–Weil value `Ψ(f₁ + φ)[x] - Ψ(f₁)[x]` for `φ = φ₊ - φ₋`, with a
/// consistency check against a second base `f₂`.
///
/// `f_i + φ` is checked for convexity by sampling along the coordinate axes,
/// the diagonal and the line through `x`, all through the origin.
pub fn gw_probe(
    endo: &dyn EndoMap,
    x: &[f64],
    phi_plus: &dyn ConvexFunction,
    phi_minus: &dyn ConvexFunction,
    bases: [&dyn ConvexFunction; 2],
    check: &ProbeCheck,
    tol: f64,
) -> Result<GwReport> {
    let n = endo.dim();
    check_point(n, x)?;
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    dirs.push(vec![1.0 / (n as f64).sqrt(); n]);
    let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if xn > 0.0 {
        dirs.push(x.iter().map(|v| v / xn).collect());
    }
    let grid = linspace(-check.half_width, check.half_width, check.samples);
    let origin = vec![0.0; n];

    let mut diffs = [0.0; 2];
    for (i, base) in bases.iter().enumerate() {
        let pert = Perturbed {
            base: *base,
            plus: phi_plus,
            minus: phi_minus,
        };
        for d in &dirs {
            let line = crate::sample::along_line(&pert, &origin, d);
            if !is_convex_sampled(line, &grid, check.tol) {
                return Err(Error::PerturbationNotConvex { base: i });
            }
        }
        let with = endo.apply(&pert, x)?;
        let without = endo.apply(*base, x)?;
        diffs[i] = finite_difference(with, without, "Goodey-Weil probe")?;
    }
    Ok(report(diffs[0], diffs[1], tol))
}

fn tails_agree(a: &PwlFunction, b: &PwlFunction) -> bool {
    let (da, db) = (a.breakpoints(), b.breakpoints());
    let lo = da[0].min(db[0]) - 1.0;
    let hi = da[da.len() - 1].max(db[db.len() - 1]) + 1.0;
    let close = |x: f64| {
        let (u, v) = (a.eval_in_domain(x), b.eval_in_domain(x));
        (u - v).abs() <= tol::EXACT * (1.0 + u.abs())
    };
    matches!((a.left_tail(), b.left_tail()), (Tail::Slope(p), Tail::Slope(q)) if p == q)
        && matches!((a.right_tail(), b.right_tail()), (Tail::Slope(p), Tail::Slope(q)) if p == q)
        && close(lo)
        && close(hi)
}

/// One-dimensional probe on exact piecewise-linear data. Convexity of
/// `f_i + φ` is decided exactly; `φ₊` and `φ₋` must agree outside a bounded
/// set.
pub fn gw_probe_1d(
    endo: &dyn Endo1D,
    x: f64,
    phi_plus: &PwlFunction,
    phi_minus: &PwlFunction,
    bases: [&PwlFunction; 2],
    tol: f64,
) -> Result<GwReport> {
    if !tails_agree(phi_plus, phi_minus) {
        return Err(Error::InvalidParameter(
            "perturbation is not compactly supported".into(),
        ));
    }
    let mut diffs = [0.0; 2];
    for (i, base) in bases.iter().enumerate() {
        let pert = base
            .add_difference(phi_plus, phi_minus)
            .map_err(|_| Error::PerturbationNotConvex { base: i })?;
        let with = endo.apply_1d(&pert, x)?;
        let without = endo.apply_1d(base, x)?;
        diffs[i] = finite_difference(with, without, "Goodey-Weil probe")?;
    }
    Ok(report(diffs[0], diffs[1], tol))
}

/// The hat `(y+1)_+ - 2 y_+ + (y-1)_+` as the pair `(φ₊, φ₋)`.
pub fn hat_perturbation(center: f64, half_width: f64, height: f64) -> (PwlFunction, PwlFunction) {
    let k = height / half_width;
    let plus = PwlFunction::hinge_right(center - half_width)
        .add(&PwlFunction::hinge_right(center + half_width))
        .expect("finite hinges")
        .scale(k)
        .expect("non-negative scale");
    let minus = PwlFunction::hinge_right(center).scale(2.0 * k).expect("non-negative scale");
    (plus, minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ConvexExpr;

    struct Diff;

    impl Endo1D for Diff {
        fn apply_1d(&self, f: &PwlFunction, x: f64) -> Result<ExtReal> {
            Ok(ExtReal::Finite(f.eval_in_domain(x) - f.eval_in_domain(0.0)))
        }
    }

    fn bases() -> (PwlFunction, PwlFunction) {
        (
            PwlFunction::abs_at(0.0, 3.0),
            PwlFunction::abs_at(0.0, 2.5)
                .add(&PwlFunction::abs_at(0.5, 0.5))
                .unwrap()
                .add(&PwlFunction::affine(0.3, 1.0))
                .unwrap(),
        )
    }

    #[test]
    fn hat_probe_values() {
        let (plus, minus) = hat_perturbation(0.0, 1.0, 1.0);
        let (f1, f2) = bases();
        let r = gw_probe_1d(&Diff, 0.5, &plus, &minus, [&f1, &f2], 1e-12).unwrap();
        assert!((r.value + 0.5).abs() < 1e-12);
        assert!(r.consistent);
        let r = gw_probe_1d(&Diff, 5.0, &plus, &minus, [&f1, &f2], 1e-12).unwrap();
        assert!((r.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_map_probe() {
        let (plus, minus) = hat_perturbation(0.0, 1.0, 1.0);
        let (f1, f2) = bases();
        let r = gw_probe_1d(&ZeroEndo { n: 1 }, 0.3, &plus, &minus, [&f1, &f2], 1e-12).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.consistent);
    }

    #[test]
    fn non_convex_perturbation_rejected() {
        let (plus, minus) = hat_perturbation(0.0, 1.0, 1.0);
        let f = PwlFunction::abs_at(0.0, 0.5);
        let g = PwlFunction::abs_at(0.0, 3.0);
        let err = gw_probe_1d(&Diff, 0.5, &plus, &minus, [&f, &g], 1e-12).unwrap_err();
        assert_eq!(err, Error::PerturbationNotConvex { base: 0 });
    }

    #[test]
    fn non_compact_perturbation_rejected() {
        let plus = PwlFunction::hinge_right(0.0);
        let minus = PwlFunction::zero();
        let f = PwlFunction::abs_at(0.0, 3.0);
        assert!(matches!(
            gw_probe_1d(&Diff, 0.5, &plus, &minus, [&f, &f], 1e-12),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn nd_probe_on_zero_map() {
        let (plus, minus) = hat_perturbation(0.0, 1.0, 1.0);
        let plus = ConvexExpr::pwl1d(plus, vec![1.0, 0.0]);
        let minus = ConvexExpr::pwl1d(minus, vec![1.0, 0.0]);
        let f1 = ConvexExpr::norm(3.0);
        let f2 = ConvexExpr::Sum(vec![ConvexExpr::norm(2.5), ConvexExpr::quad(1.0)]);
        let r = gw_probe(
            &ZeroEndo { n: 2 },
            &[0.2, 0.1],
            &plus,
            &minus,
            [&f1, &f2],
            &ProbeCheck::default(),
            1e-9,
        )
        .unwrap();
        assert!(r.consistent);
    }
}
