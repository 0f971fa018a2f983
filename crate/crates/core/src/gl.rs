//! GL(n)-equivariant endomorphisms
//! `Ψ(f)[x] = c f(0) + Σ w_i (f(s_i x) - f(0)) / s_i²` and the whole-space
//! maps `f -> λ f(μ ·)`.

use rand::Rng;

use crate::endo::{check_function, check_point, Endo1D, EndoMap};
use crate::error::{Error, Result};
use crate::expr::ConvexExpr;
use crate::ext::ExtReal;
use crate::func::ConvexFunction;
use crate::measure::LineMeasure;
use crate::pwl::PwlFunction;
use crate::random;
use crate::tol;

/// Number of radial steps `λ_k = 1 - 2^-k` used for boundary points.
pub const BOUNDARY_STEPS: i32 = 40;

/// `(c, ν)` acting on convex functions on ℝⁿ that are finite near 0.
#[derive(Clone, Debug, PartialEq)]
pub struct GlEndo {
    c: f64,
    nu: LineMeasure,
    n: usize,
}

/// Which branch of the evaluation produced a value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GlCase {
    /// `x = 0`, or `ν = 0`: the value is `c f(0)`.
    Origin,
    /// `[a, b] x` lies in the interior of `dom f`: direct atom sum.
    Interior,
    /// `[a, b] x` touches the boundary: radial limit along `λ_k x`.
    /// `monotone_approach` reports whether the approach values were monotone
    /// in `k`, as convexity predicts.
    Boundary { monotone_approach: bool },
    /// `[a, b] x` leaves the closure of `dom f`.
    Exterior,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlReport {
    pub value: ExtReal,
    pub case: GlCase,
}

impl GlEndo {
    pub fn new(c: f64, nu: LineMeasure, n: usize) -> Result<GlEndo> {
        if !c.is_finite() {
            return Err(Error::InvalidParameter(format!("c must be finite, got {c}")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        nu.moment_abs(-1)?;
        Ok(GlEndo { c, nu, n })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn nu(&self) -> &LineMeasure {
        &self.nu
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `∫ |s|^-2 dν <= c`.
    pub fn is_monotone(&self) -> bool {
        self.nu.moment_abs(-2).expect("validated at construction") <= self.c + 1e-12
    }

    /// `∫ s^-1 dν = 0`.
    pub fn is_dually_translation_invariant(&self) -> bool {
        self.nu.moment_signed(-1).expect("validated at construction").abs() <= 1e-12
    }

    fn atom_sum(&self, f: &dyn ConvexFunction, x: &[f64], f0: f64) -> ExtReal {
        let mut acc = self.c * f0;
        let mut y = vec![0.0; x.len()];
        for &(s, w) in self.nu.atoms() {
            if w == 0.0 {
                continue;
            }
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = s * xi;
            }
            match f.eval(&y) {
                ExtReal::PosInf => return ExtReal::PosInf,
                ExtReal::Finite(v) => acc += w * (v - f0) / (s * s),
            }
        }
        ExtReal::Finite(acc)
    }

    /// Evaluation with the case that produced the value.
    pub fn eval_report(&self, f: &dyn ConvexFunction, x: &[f64]) -> Result<GlReport> {
        check_point(self.n, x)?;
        check_function(self.n, f)?;
        let origin = vec![0.0; self.n];
        let f0 = f.eval(&origin).finite().ok_or(Error::OriginNotInDomain)?;
        if x.iter().all(|&v| v == 0.0) || self.nu.is_empty() {
            return Ok(GlReport {
                value: ExtReal::Finite(self.c * f0),
                case: GlCase::Origin,
            });
        }
        let (a, b) = self.nu.support_bounds()?;
        let dom = f.ray_domain(x);
        let edge = tol::SUPPORT_EDGE;
        if dom.lo + edge < a && b < dom.hi - edge {
            return Ok(GlReport {
                value: self.atom_sum(f, x, f0),
                case: GlCase::Interior,
            });
        }
        if a < dom.lo - edge || b > dom.hi + edge {
            return Ok(GlReport {
                value: ExtReal::PosInf,
                case: GlCase::Exterior,
            });
        }
        let values: Vec<ExtReal> = (1..=BOUNDARY_STEPS)
            .map(|k| {
                let lambda = 1.0 - 0.5f64.powi(k);
                let xl: Vec<f64> = x.iter().map(|v| lambda * v).collect();
                self.atom_sum(f, &xl, f0)
            })
            .collect();
        let last = *values.last().unwrap();
        let finite: Vec<f64> = values.iter().filter_map(|v| v.finite()).collect();
        let slack = |u: f64, v: f64| 1e-9 * (1.0 + u.abs().max(v.abs()));
        let up = finite.windows(2).all(|w| w[1] >= w[0] - slack(w[0], w[1]));
        let down = finite.windows(2).all(|w| w[1] <= w[0] + slack(w[0], w[1]));
        Ok(GlReport {
            value: last,
            case: GlCase::Boundary {
                monotone_approach: finite.len() == values.len() && (up || down),
            },
        })
    }
}

impl EndoMap for GlEndo {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, f: &dyn ConvexFunction, x: &[f64]) -> Result<ExtReal> {
        Ok(self.eval_report(f, x)?.value)
    }
}

impl Endo1D for GlEndo {
    fn apply_1d(&self, f: &PwlFunction, x: f64) -> Result<ExtReal> {
        self.apply(f, &[x])
    }
}

/// `Ψ(f)[x] = λ f(μ x)` for `λ > 0`, `μ != 0`; defined on all convex
/// functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleComposeMap {
    lambda: f64,
    mu: f64,
    n: usize,
}

impl ScaleComposeMap {
    pub fn new(lambda: f64, mu: f64, n: usize) -> Result<ScaleComposeMap> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
        }
        if mu == 0.0 || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be non-zero, got {mu}")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        Ok(ScaleComposeMap { lambda, mu, n })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl EndoMap for ScaleComposeMap {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, f: &dyn ConvexFunction, x: &[f64]) -> Result<ExtReal> {
        check_point(self.n, x)?;
        check_function(self.n, f)?;
        let y: Vec<f64> = x.iter().map(|v| self.mu * v).collect();
        Ok(f.eval(&y).scale(self.lambda))
    }
}

impl Endo1D for ScaleComposeMap {
    fn apply_1d(&self, f: &PwlFunction, x: f64) -> Result<ExtReal> {
        self.apply(f, &[x])
    }
}

/// An ordered pair `f <= g` and a point where `Ψ(f)[x] > Ψ(g)[x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneWitness {
    pub f: ConvexExpr,
    pub g: ConvexExpr,
    pub x: Vec<f64>,
    /// `Ψ(f)[x] - Ψ(g)[x] > 0`.
    pub gap: f64,
}

/// The deterministic pair `f = |y| - 1 <= g = max(0, |y| - 1)`.
pub fn witness_pair(n: usize) -> (ConvexExpr, ConvexExpr) {
    let f = ConvexExpr::Sum(vec![ConvexExpr::norm(1.0), ConvexExpr::affine(vec![0.0; n], -1.0)]);
    let g = ConvexExpr::Max(vec![ConvexExpr::affine(vec![0.0; n], 0.0), f.clone()]);
    (f, g)
}

/// Searches for a violation of monotonicity.
///
/// The witness pair of [`witness_pair`] is scanned along `r e1`, including
/// `r = 1 / |s_i|` where its gap `-c + Σ w min(1, |s| r) / s²` peaks. Then
/// `trials` random pairs `f <= f + h` with `h >= 0` are tried at random points.
pub fn gl_empirical_monotone_search(
    e: &GlEndo,
    trials: usize,
    seed: u64,
) -> Result<Option<MonotoneWitness>> {
    let n = e.n();
    let gap_tol = |v: f64| 1e-9 * (1.0 + v.abs());

    let (fw, gw) = witness_pair(n);
    let mut radii: Vec<f64> = e
        .nu()
        .atoms()
        .iter()
        .filter(|a| a.1 > 0.0)
        .map(|a| 1.0 / a.0.abs())
        .collect();
    radii.extend((-6..=6).map(|k| 2f64.powi(k)));
    for r in radii {
        let mut x = vec![0.0; n];
        x[0] = r;
        let (vf, vg) = (e.apply(&fw, &x)?, e.apply(&gw, &x)?);
        if let (Some(a), Some(b)) = (vf.finite(), vg.finite()) {
            if a - b > gap_tol(b) {
                return Ok(Some(MonotoneWitness {
                    f: fw,
                    g: gw,
                    x,
                    gap: a - b,
                }));
            }
        }
    }

    let mut rng = random::rng(seed);
    for _ in 0..trials {
        let f = random::finite_expr(&mut rng, n, 2);
        let h = random::nonneg_expr(&mut rng, n);
        let g = ConvexExpr::Sum(vec![f.clone(), h]);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (vf, vg) = (e.apply(&f, &x)?, e.apply(&g, &x)?);
        if let (Some(a), Some(b)) = (vf.finite(), vg.finite()) {
            if a - b > gap_tol(b) {
                return Ok(Some(MonotoneWitness { f, g, x, gap: a - b }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::Tail;

    fn two_atom() -> LineMeasure {
        LineMeasure::new(vec![(1.0, 1.0), (-1.0, 1.0)]).unwrap()
    }

    #[test]
    fn single_atom_reduces_to_difference() {
        let e = GlEndo::new(0.0, LineMeasure::dirac(1.0), 1).unwrap();
        assert_eq!(e.apply(&ConvexExpr::quad(1.0), &[2.0]).unwrap(), ExtReal::Finite(4.0));
    }

    #[test]
    fn two_atom_sum_on_hinge() {
        let e = GlEndo::new(0.0, two_atom(), 1).unwrap();
        let hinge = ConvexExpr::line(PwlFunction::hinge_right(0.0));
        assert_eq!(e.apply(&hinge, &[-3.0]).unwrap(), ExtReal::Finite(3.0));
    }

    #[test]
    fn domain_blow_up() {
        let e = GlEndo::new(0.0, two_atom(), 1).unwrap();
        let ind = PwlFunction::new(vec![-0.1, 1.0], vec![0.0, 0.0], Tail::Closed, Tail::Closed).unwrap();
        let f = ConvexExpr::Sum(vec![ConvexExpr::affine(vec![0.0], 0.0), ConvexExpr::line(ind)]);
        assert_eq!(e.apply(&f, &[0.5]).unwrap(), ExtReal::PosInf);
        let r = e.eval_report(&f, &[0.05]).unwrap();
        assert_eq!(r.value, ExtReal::ZERO);
        assert_eq!(r.case, GlCase::Interior);
        let r = e.eval_report(&f, &[0.1]).unwrap();
        assert_eq!(r.value, ExtReal::ZERO);
        assert!(matches!(r.case, GlCase::Boundary { monotone_approach: true }));
    }

    #[test]
    fn scaled_atom_on_norm() {
        let e = GlEndo::new(1.0, LineMeasure::dirac(2.0), 2).unwrap();
        let v = e.apply(&ConvexExpr::norm(1.0), &[0.6, 0.8]).unwrap().to_f64();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn origin_gives_c_f0() {
        let e = GlEndo::new(2.5, two_atom(), 1).unwrap();
        let f = ConvexExpr::Sum(vec![ConvexExpr::quad(1.0), ConvexExpr::affine(vec![0.0], 3.0)]);
        assert_eq!(e.apply(&f, &[0.0]).unwrap(), ExtReal::Finite(7.5));
    }

    #[test]
    fn origin_outside_domain() {
        let e = GlEndo::new(1.0, two_atom(), 1).unwrap();
        let p = PwlFunction::indicator(1.0, 2.0).unwrap();
        assert_eq!(e.apply(&p, &[1.0]), Err(Error::OriginNotInDomain));
    }

    #[test]
    fn atom_at_zero_rejected() {
        assert_eq!(GlEndo::new(1.0, LineMeasure::dirac(0.0), 1), Err(Error::AtomAtZero));
    }

    #[test]
    fn monotone_predicate_flips_at_four() {
        let nu = LineMeasure::dirac(0.5);
        assert!(GlEndo::new(4.0, nu.clone(), 1).unwrap().is_monotone());
        assert!(!GlEndo::new(3.9, nu, 1).unwrap().is_monotone());
        assert!(GlEndo::new(0.0, LineMeasure::empty(), 1).unwrap().is_monotone());
    }

    #[test]
    fn translation_invariance_predicate() {
        assert!(GlEndo::new(0.0, two_atom(), 1).unwrap().is_dually_translation_invariant());
        assert!(!GlEndo::new(0.0, LineMeasure::dirac(1.0), 1)
            .unwrap()
            .is_dually_translation_invariant());
        let nu = LineMeasure::new(vec![(2.0, 4.0), (-0.5, 1.0)]).unwrap();
        let e = GlEndo::new(0.0, nu, 1).unwrap();
        assert!(e.is_dually_translation_invariant());
        let lin = ConvexExpr::affine(vec![1.0], 0.0);
        for x in [-2.0, -0.3, 0.7, 3.0] {
            assert_eq!(e.apply(&lin, &[x]).unwrap(), ExtReal::ZERO);
        }
    }

    #[test]
    fn scale_compose_examples() {
        let m = ScaleComposeMap::new(2.0, -1.0, 1).unwrap();
        let seg = PwlFunction::indicator(0.0, 1.0).unwrap();
        assert_eq!(m.apply(&seg, &[-0.5]).unwrap(), ExtReal::ZERO);
        assert_eq!(m.apply(&seg, &[0.5]).unwrap(), ExtReal::PosInf);
        let m = ScaleComposeMap::new(3.0, 2.0, 1).unwrap();
        assert_eq!(m.apply(&ConvexExpr::quad(1.0), &[1.0]).unwrap(), ExtReal::Finite(12.0));
        let id = ScaleComposeMap::new(1.0, 1.0, 2).unwrap();
        let f = ConvexExpr::norm(1.5);
        assert_eq!(id.apply(&f, &[3.0, 4.0]).unwrap(), ExtReal::Finite(7.5));
    }

    #[test]
    fn witness_found_below_threshold() {
        let e = GlEndo::new(3.9, LineMeasure::dirac(0.5), 2).unwrap();
        let w = gl_empirical_monotone_search(&e, 0, 1).unwrap().expect("witness");
        assert!((w.gap - 0.1).abs() < 1e-9);
        assert!((w.x[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn no_witness_for_monotone_members() {
        let e = GlEndo::new(4.0, LineMeasure::dirac(0.5), 1).unwrap();
        assert!(gl_empirical_monotone_search(&e, 500, 7).unwrap().is_none());
        let e = GlEndo::new(1.0, LineMeasure::dirac(1.0), 2).unwrap();
        assert!(gl_empirical_monotone_search(&e, 500, 7).unwrap().is_none());
    }
}
