//! The evaluator interface shared by every operator.

use std::fmt;
use std::sync::Arc;

use crate::expr::{pwl_ray_domain, ConvexExpr};
use crate::ext::{ExtReal, Interval};
use crate::pwl::PwlFunction;

const BISECTION_STEPS: usize = 80;
const BISECTION_REACH: f64 = 1_099_511_627_776.0; // 2^40

/// A convex function `ℝⁿ -> (-inf, +inf]`.
pub trait ConvexFunction: Send + Sync {
    /// Ambient dimension, or `None` when the function adapts to any.
    fn dim(&self) -> Option<usize>;

    /// Value at `x`; `x` must have the declared dimension.
    fn eval(&self, x: &[f64]) -> ExtReal;

    /// Interior of `{s : f(s x) < inf}`.
    ///
    /// The default locates both ends by bisection on `[-2^40, 2^40]`,
    /// assuming `f(0) < inf`.
    fn ray_domain(&self, x: &[f64]) -> Interval {
        bisect_ray_domain(|s| self.eval(&x.iter().map(|v| s * v).collect::<Vec<_>>()))
    }
}

/// Ray domain of a 1D slice `s -> g(s)` by bisection from `s = 0`.
pub fn bisect_ray_domain<G: Fn(f64) -> ExtReal>(g: G) -> Interval {
    if !g(0.0).is_finite() {
        return Interval::EMPTY;
    }
    let edge = |sign: f64| {
        if g(sign * BISECTION_REACH).is_finite() {
            return sign * f64::INFINITY;
        }
        let (mut inside, mut outside) = (0.0, BISECTION_REACH);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (inside + outside);
            if g(sign * mid).is_finite() {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        sign * 0.5 * (inside + outside)
    };
    Interval::new(edge(-1.0), edge(1.0))
}

impl ConvexFunction for ConvexExpr {
    fn dim(&self) -> Option<usize> {
        ConvexExpr::dim(self)
    }

    fn eval(&self, x: &[f64]) -> ExtReal {
        ConvexExpr::eval(self, x)
    }

    fn ray_domain(&self, x: &[f64]) -> Interval {
        ConvexExpr::ray_domain(self, x)
    }
}

impl ConvexFunction for PwlFunction {
    fn dim(&self) -> Option<usize> {
        Some(1)
    }

    fn eval(&self, x: &[f64]) -> ExtReal {
        PwlFunction::eval(self, x[0])
    }

    fn ray_domain(&self, x: &[f64]) -> Interval {
        pwl_ray_domain(self, x[0])
    }
}

type EvalFn = dyn Fn(&[f64]) -> ExtReal + Send + Sync;

/// A convex function given by a closure. Convexity is the caller's promise.
#[derive(Clone)]
pub struct FnConvex {
    dim: usize,
    f: Arc<EvalFn>,
}

impl FnConvex {
    pub fn new<F>(dim: usize, f: F) -> FnConvex
    where
        F: Fn(&[f64]) -> ExtReal + Send + Sync + 'static,
    {
        FnConvex { dim, f: Arc::new(f) }
    }
}

impl fmt::Debug for FnConvex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnConvex(dim = {})", self.dim)
    }
}

impl ConvexFunction for FnConvex {
    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn eval(&self, x: &[f64]) -> ExtReal {
        (self.f)(x)
    }
}

/// `base + plus - minus` for finite `plus`, `minus`.
pub struct Perturbed<'a> {
    pub base: &'a dyn ConvexFunction,
    pub plus: &'a dyn ConvexFunction,
    pub minus: &'a dyn ConvexFunction,
}

impl ConvexFunction for Perturbed<'_> {
    fn dim(&self) -> Option<usize> {
        self.base.dim().or(self.plus.dim()).or(self.minus.dim())
    }

    fn eval(&self, x: &[f64]) -> ExtReal {
        match self.base.eval(x) {
            ExtReal::PosInf => ExtReal::PosInf,
            ExtReal::Finite(b) => {
                let p = self.plus.eval(x).to_f64();
                let m = self.minus.eval(x).to_f64();
                ExtReal::from_f64(b + p - m)
            }
        }
    }

    fn ray_domain(&self, x: &[f64]) -> Interval {
        self.base.ray_domain(x)
    }
}

/// `x -> f(x) + g(x)` for two borrowed evaluators.
pub struct SumOf<'a>(pub &'a dyn ConvexFunction, pub &'a dyn ConvexFunction);

impl ConvexFunction for SumOf<'_> {
    fn dim(&self) -> Option<usize> {
        self.0.dim().or(self.1.dim())
    }

    fn eval(&self, x: &[f64]) -> ExtReal {
        self.0.eval(x) + self.1.eval(x)
    }

    fn ray_domain(&self, x: &[f64]) -> Interval {
        self.0.ray_domain(x).intersect(&self.1.ray_domain(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_ball_radius() {
        let f = FnConvex::new(2, |x: &[f64]| ConvexExpr::ball(1.5).eval(x));
        let d = f.ray_domain(&[1.0, 0.0]);
        assert!((d.lo + 1.5).abs() < 1e-9 && (d.hi - 1.5).abs() < 1e-9);
    }

    #[test]
    fn bisection_reports_unbounded() {
        let f = FnConvex::new(1, |x: &[f64]| ExtReal::Finite(x[0].abs()));
        assert_eq!(f.ray_domain(&[1.0]), Interval::REAL_LINE);
    }

    #[test]
    fn perturbed_adds_difference() {
        let base = ConvexExpr::quad(1.0);
        let plus = ConvexExpr::norm(2.0);
        let minus = ConvexExpr::norm(1.0);
        let p = Perturbed {
            base: &base,
            plus: &plus,
            minus: &minus,
        };
        assert_eq!(p.eval(&[2.0]), ExtReal::Finite(6.0));
    }
}
