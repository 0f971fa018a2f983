//! n-dimensional convex functions as expression trees.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ext::{ExtReal, Interval};
use crate::pwl::PwlFunction;

/// A convex, lower semi-continuous function on ℝⁿ built from closed-form
/// leaves. Leaves without a vector parameter (`Quad`, `Norm`,
/// `BallIndicator`) adapt to the dimension of their argument.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexExpr {
    /// `x -> <a, x> + b`.
    Affine { a: Vec<f64>, b: f64 },
    /// `x -> c |x|^2`, `c >= 0`.
    Quad { c: f64 },
    /// `x -> c |x|`, `c >= 0`.
    Norm { c: f64 },
    /// `0` on the closed ball of radius `r > 0`, `+inf` outside.
    BallIndicator { r: f64 },
    /// `x -> p(<direction, x>)` for a unit `direction`.
    Pwl1d { p: PwlFunction, direction: Vec<f64> },
    Sum(Vec<ConvexExpr>),
    Max(Vec<ConvexExpr>),
    /// `lambda * child`, `lambda >= 0`, with `0 * inf = inf`.
    Scale { lambda: f64, child: Box<ConvexExpr> },
    /// `x -> child(M x)` for invertible square `M`.
    Precompose { m: DMatrix<f64>, child: Box<ConvexExpr> },
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}

impl ConvexExpr {
    pub fn affine(a: Vec<f64>, b: f64) -> ConvexExpr {
        ConvexExpr::Affine { a, b }
    }

    pub fn quad(c: f64) -> ConvexExpr {
        ConvexExpr::Quad { c }
    }

    pub fn norm(c: f64) -> ConvexExpr {
        ConvexExpr::Norm { c }
    }

    pub fn ball(r: f64) -> ConvexExpr {
        ConvexExpr::BallIndicator { r }
    }

    pub fn pwl1d(p: PwlFunction, direction: Vec<f64>) -> ConvexExpr {
        ConvexExpr::Pwl1d { p, direction }
    }

    /// A 1D piecewise-linear function viewed as an expression on ℝ.
    pub fn line(p: PwlFunction) -> ConvexExpr {
        ConvexExpr::Pwl1d {
            p,
            direction: vec![1.0],
        }
    }

    pub fn scale(lambda: f64, child: ConvexExpr) -> ConvexExpr {
        ConvexExpr::Scale {
            lambda,
            child: Box::new(child),
        }
    }

    pub fn precompose(m: DMatrix<f64>, child: ConvexExpr) -> ConvexExpr {
        ConvexExpr::Precompose {
            m,
            child: Box::new(child),
        }
    }

    /// The dimension fixed by vector or matrix parameters, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConvexExpr::Affine { a, .. } => Some(a.len()),
            ConvexExpr::Pwl1d { direction, .. } => Some(direction.len()),
            ConvexExpr::Quad { .. } | ConvexExpr::Norm { .. } | ConvexExpr::BallIndicator { .. } => {
                None
            }
            ConvexExpr::Sum(ts) | ConvexExpr::Max(ts) => ts.iter().find_map(|t| t.dim()),
            ConvexExpr::Scale { child, .. } => child.dim(),
            ConvexExpr::Precompose { m, .. } => Some(m.ncols()),
        }
    }

    /// Checks parameter ranges and dimensional consistency.
    pub fn validate(&self) -> Result<()> {
        self.validate_dim(self.dim())
    }

    fn validate_dim(&self, n: Option<usize>) -> Result<()> {
        let check_dim = |d: usize| match n {
            Some(n) if n != d => Err(Error::DimensionMismatch { expected: n, got: d }),
            _ => Ok(()),
        };
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidExpr(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        match self {
            ConvexExpr::Affine { a, b } => {
                check_dim(a.len())?;
                if a.is_empty() || !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidExpr("affine needs finite, non-empty data".into()));
                }
                Ok(())
            }
            ConvexExpr::Quad { c } => nonneg("quad coefficient", *c),
            ConvexExpr::Norm { c } => nonneg("norm coefficient", *c),
            ConvexExpr::BallIndicator { r } => {
                if *r > 0.0 && r.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidExpr(format!("ball radius must be > 0, got {r}")))
                }
            }
            ConvexExpr::Pwl1d { direction, .. } => {
                check_dim(direction.len())?;
                let l = norm(direction);
                if direction.is_empty() || (l - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidExpr(format!(
                        "pwl1d direction must be a unit vector (norm {l})"
                    )));
                }
                Ok(())
            }
            ConvexExpr::Sum(ts) => ts.iter().try_for_each(|t| t.validate_dim(n)),
            ConvexExpr::Max(ts) => {
                if ts.is_empty() {
                    return Err(Error::InvalidExpr("max of no terms".into()));
                }
                ts.iter().try_for_each(|t| t.validate_dim(n))
            }
            ConvexExpr::Scale { lambda, child } => {
                nonneg("scale factor", *lambda)?;
                child.validate_dim(n)
            }
            ConvexExpr::Precompose { m, child } => {
                if m.nrows() != m.ncols() || m.nrows() == 0 {
                    return Err(Error::InvalidExpr("precompose matrix must be square".into()));
                }
                check_dim(m.ncols())?;
                let det = m.determinant();
                if !det.is_finite() || det.abs() < 1e-12 {
                    return Err(Error::InvalidExpr(format!("precompose matrix is singular (det {det})")));
                }
                child.validate_dim(Some(m.nrows()))
            }
        }
    }

    /// Evaluation with a dimension check.
    pub fn try_eval(&self, x: &[f64]) -> Result<ExtReal> {
        if let Some(n) = self.dim() {
            if n != x.len() {
                return Err(Error::DimensionMismatch { expected: n, got: x.len() });
            }
        }
        Ok(self.eval(x))
    }

    /// Evaluation by tree recursion; `x` must match [`ConvexExpr::dim`].
    pub fn eval(&self, x: &[f64]) -> ExtReal {
        match self {
            ConvexExpr::Affine { a, b } => ExtReal::Finite(dot(a, x) + b),
            ConvexExpr::Quad { c } => ExtReal::Finite(c * dot(x, x)),
            ConvexExpr::Norm { c } => ExtReal::Finite(c * norm(x)),
            ConvexExpr::BallIndicator { r } => {
                if norm(x) <= *r {
                    ExtReal::ZERO
                } else {
                    ExtReal::PosInf
                }
            }
            ConvexExpr::Pwl1d { p, direction } => p.eval(dot(direction, x)),
            ConvexExpr::Sum(ts) => ts.iter().map(|t| t.eval(x)).sum(),
            ConvexExpr::Max(ts) => ts
                .iter()
                .map(|t| t.eval(x))
                .fold(None, |acc: Option<ExtReal>, v| Some(acc.map_or(v, |a| a.max(v))))
                .expect("max of no terms"),
            ConvexExpr::Scale { lambda, child } => child.eval(x).scale(*lambda),
            ConvexExpr::Precompose { m, child } => child.eval(&mat_vec(m, x)),
        }
    }

    /// Interior of `{s : f(s x) < inf}`, computed leaf by leaf.
    pub fn ray_domain(&self, x: &[f64]) -> Interval {
        match self {
            ConvexExpr::Affine { .. } | ConvexExpr::Quad { .. } | ConvexExpr::Norm { .. } => {
                Interval::REAL_LINE
            }
            ConvexExpr::BallIndicator { r } => {
                let l = norm(x);
                if l == 0.0 {
                    Interval::REAL_LINE
                } else {
                    Interval::new(-r / l, r / l)
                }
            }
            ConvexExpr::Pwl1d { p, direction } => pwl_ray_domain(p, dot(direction, x)),
            ConvexExpr::Sum(ts) | ConvexExpr::Max(ts) => ts
                .iter()
                .fold(Interval::REAL_LINE, |acc, t| acc.intersect(&t.ray_domain(x))),
            ConvexExpr::Scale { child, .. } => child.ray_domain(x),
            ConvexExpr::Precompose { m, child } => child.ray_domain(&mat_vec(m, x)),
        }
    }

    /// True when every leaf is an affine function or an affine map composed
    /// with them through `Max`/`Sum`/`Scale`/`Precompose` with zero offsets,
    /// i.e. the expression is positively 1-homogeneous by construction.
    pub fn is_sublinear_polyhedral(&self) -> bool {
        match self {
            ConvexExpr::Affine { b, .. } => *b == 0.0,
            ConvexExpr::Max(ts) | ConvexExpr::Sum(ts) => ts.iter().all(|t| t.is_sublinear_polyhedral()),
            ConvexExpr::Scale { child, .. } | ConvexExpr::Precompose { child, .. } => {
                child.is_sublinear_polyhedral()
            }
            _ => false,
        }
    }
}

/// Interior of `{s : p(s t) < inf}`.
pub(crate) fn pwl_ray_domain(p: &PwlFunction, t: f64) -> Interval {
    let dom = p.domain();
    if t == 0.0 {
        return if dom.contains_closed(0.0) {
            Interval::REAL_LINE
        } else {
            Interval::EMPTY
        };
    }
    let (lo, hi) = if t > 0.0 {
        (dom.lo / t, dom.hi / t)
    } else {
        (dom.hi / t, dom.lo / t)
    };
    Interval::new(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::Tail;

    #[test]
    fn eval_examples() {
        let f = ConvexExpr::Sum(vec![ConvexExpr::quad(1.0), ConvexExpr::affine(vec![1.0, 0.0], 0.0)]);
        assert_eq!(f.try_eval(&[2.0, 0.0]).unwrap(), ExtReal::Finite(6.0));
        assert_eq!(ConvexExpr::ball(1.0).eval(&[2.0, 0.0]), ExtReal::PosInf);
        let g = ConvexExpr::precompose(DMatrix::identity(2, 2) * 2.0, ConvexExpr::norm(1.0));
        assert_eq!(g.try_eval(&[1.0, 0.0]).unwrap(), ExtReal::Finite(2.0));
    }

    #[test]
    fn eval_dimension_mismatch() {
        let f = ConvexExpr::affine(vec![1.0, 0.0], 0.0);
        assert_eq!(
            f.try_eval(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        );
    }

    #[test]
    fn zero_scale_keeps_domain() {
        let f = ConvexExpr::scale(0.0, ConvexExpr::ball(1.0));
        assert_eq!(f.eval(&[0.5]), ExtReal::ZERO);
        assert_eq!(f.eval(&[1.5]), ExtReal::PosInf);
    }

    #[test]
    fn ray_domain_examples() {
        assert_eq!(ConvexExpr::ball(1.0).ray_domain(&[2.0, 0.0]), Interval::new(-0.5, 0.5));
        assert_eq!(ConvexExpr::quad(1.0).ray_domain(&[3.0, 1.0]), Interval::REAL_LINE);
        let f = ConvexExpr::Sum(vec![ConvexExpr::quad(1.0), ConvexExpr::ball(2.0)]);
        assert_eq!(f.ray_domain(&[1.0, 0.0]), Interval::new(-2.0, 2.0));
    }

    #[test]
    fn ray_domain_of_truncated_line() {
        let p = PwlFunction::new(vec![-0.1, 1.0], vec![0.0, 0.0], Tail::Closed, Tail::Closed).unwrap();
        let f = ConvexExpr::line(p);
        assert_eq!(f.ray_domain(&[0.5]), Interval::new(-0.2, 2.0));
        assert_eq!(f.ray_domain(&[-2.0]), Interval::new(-0.5, 0.05));
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(ConvexExpr::quad(-1.0).validate().is_err());
        assert!(ConvexExpr::ball(0.0).validate().is_err());
        assert!(ConvexExpr::Max(vec![]).validate().is_err());
        let sing = ConvexExpr::precompose(DMatrix::zeros(2, 2), ConvexExpr::quad(1.0));
        assert!(sing.validate().is_err());
        let mixed = ConvexExpr::Sum(vec![
            ConvexExpr::affine(vec![1.0], 0.0),
            ConvexExpr::affine(vec![1.0, 2.0], 0.0),
        ]);
        assert!(matches!(mixed.validate(), Err(Error::DimensionMismatch { .. })));
    }
}
