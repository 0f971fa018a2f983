//! Monotone, radially and SO(n)-equivariant endomorphisms
//! `Ψ(f)[x] = ∫ f(|x| ϑ_x y) dμ(y)` for orbit measures `μ`.

use nalgebra::{DMatrix, DVector};

use crate::endo::{check_function, check_point, EndoMap};
use crate::error::{Error, Result};
use crate::expr::ConvexExpr;
use crate::ext::ExtReal;
use crate::func::ConvexFunction;
use crate::measure::{orbit_quadrature, OrbitMeasure, DEFAULT_ORBIT_POINTS};

/// A rotation `R` with `R e1 = x / |x|`.
///
/// With `u = x / |x|`: if `u_1 >= 0`, `R = H(e1 + u) diag(-1, 1, ..., 1)`;
/// otherwise `R = H(e1 - u) diag(1, ..., 1, -1)`, where `H(v)` is the
/// Householder reflection along `v`. Both products of two reflections have
/// determinant 1; `u = e1` gives the identity.
pub fn canonical_rotation(x: &[f64]) -> Result<DMatrix<f64>> {
    let n = x.len();
    let l = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if l == 0.0 || !l.is_finite() {
        return Err(Error::ZeroVector);
    }
    let u = DVector::from_iterator(n, x.iter().map(|v| v / l));
    let mut e = DVector::zeros(n);
    e[0] = 1.0;
    if n == 1 {
        // SO(1) is trivial; only u = e1 is reachable.
        return Ok(DMatrix::identity(1, 1));
    }
    let flip_first = u[0] >= 0.0;
    let v = if flip_first { &e + &u } else { &e - &u };
    let h = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / v.norm_squared());
    let mut d = DMatrix::identity(n, n);
    if flip_first {
        d[(0, 0)] = -1.0;
    } else {
        d[(n - 1, n - 1)] = -1.0;
    }
    Ok(h * d)
}

/// How `ϑ_x` is chosen. Only the Householder construction exists; a fixed
/// twist fixing `e1` may be composed on the right to test independence of the
/// choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotationRule {
    Householder,
}

#[derive(Clone, Debug)]
pub struct RadialEndo {
    mu: OrbitMeasure,
    m: usize,
    rule: RotationRule,
    twist: Option<DMatrix<f64>>,
    /// Quadrature points per atom.
    orbits: Vec<Vec<(Vec<f64>, f64)>>,
}

/// Value and a flag raised when some orbit was only partly inside `dom f`
/// (the value is then `+inf` at sample resolution).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialReport {
    pub value: ExtReal,
    pub partial_exit: bool,
}

impl RadialEndo {
    pub fn new(mu: OrbitMeasure, m: usize) -> Result<RadialEndo> {
        let orbits = mu
            .atoms()
            .iter()
            .map(|a| orbit_quadrature(*a, mu.n(), m))
            .collect::<Result<Vec<_>>>()?;
        Ok(RadialEndo {
            mu,
            m,
            rule: RotationRule::Householder,
            twist: None,
            orbits,
        })
    }

    pub fn with_default_points(mu: OrbitMeasure) -> Result<RadialEndo> {
        RadialEndo::new(mu, DEFAULT_ORBIT_POINTS)
    }

    /// Uses `ϑ_x q` instead of `ϑ_x`; `q` must be a rotation fixing `e1`.
    pub fn with_twist(mut self, q: DMatrix<f64>) -> Result<RadialEndo> {
        let n = self.mu.n();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: q.nrows(),
            });
        }
        let orth = (q.transpose() * &q - DMatrix::identity(n, n)).norm();
        let fixes = (q.column(0) - DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 })).norm();
        if orth > 1e-10 || fixes > 1e-10 || (q.determinant() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter("twist must be a rotation fixing e1".into()));
        }
        self.twist = Some(q);
        Ok(self)
    }

    pub fn measure(&self) -> &OrbitMeasure {
        &self.mu
    }

    pub fn points(&self) -> usize {
        self.m
    }

    pub fn rule(&self) -> RotationRule {
        self.rule
    }

    pub fn eval_report(&self, f: &dyn ConvexFunction, x: &[f64]) -> Result<RadialReport> {
        let n = self.mu.n();
        check_point(n, x)?;
        check_function(n, f)?;
        let f0 = f.eval(&vec![0.0; n]).finite().ok_or(Error::OriginNotInDomain)?;
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return Ok(RadialReport {
                value: ExtReal::Finite(f0 * self.mu.total_mass()),
                partial_exit: false,
            });
        }
        let mut rot = canonical_rotation(x)?;
        if let Some(q) = &self.twist {
            rot *= q;
        }
        let mut total = 0.0;
        let mut infinite = false;
        let mut partial = false;
        let mut y = vec![0.0; n];
        for orbit in &self.orbits {
            let mut outside = 0usize;
            let mut charged = 0usize;
            for (p, w) in orbit {
                if *w == 0.0 {
                    continue;
                }
                charged += 1;
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = r * (0..n).map(|j| rot[(i, j)] * p[j]).sum::<f64>();
                }
                match f.eval(&y) {
                    ExtReal::Finite(v) => total += w * v,
                    ExtReal::PosInf => outside += 1,
                }
            }
            if outside > 0 {
                infinite = true;
                partial |= outside < charged;
            }
        }
        Ok(RadialReport {
            value: if infinite {
                ExtReal::PosInf
            } else {
                ExtReal::Finite(total)
            },
            partial_exit: partial,
        })
    }

    /// `∫ y dμ = 0`.
    pub fn is_dually_translation_invariant(&self) -> bool {
        self.mu.center().iter().all(|c| c.abs() <= 1e-12)
    }

    /// `Some(μ(ℝⁿ))` when every charged orbit lies on the unit sphere, in which
    /// case `Ψ(f) = μ(ℝⁿ) f` for radial `f`.
    pub fn scalar_on_radial(&self) -> Option<f64> {
        self.mu
            .atoms()
            .iter()
            .all(|a| a.w == 0.0 || (a.t - 1.0).abs() <= 1e-12)
            .then(|| self.mu.total_mass())
    }

    /// True iff [`RadialEndo::scalar_on_radial`] is `Some`.
    pub fn acts_as_scalar_on_radial(&self) -> bool {
        self.scalar_on_radial().is_some()
    }
}

impl EndoMap for RadialEndo {
    fn dim(&self) -> usize {
        self.mu.n()
    }

    fn apply(&self, f: &dyn ConvexFunction, x: &[f64]) -> Result<ExtReal> {
        Ok(self.eval_report(f, x)?.value)
    }
}

/// Samples of `Ψ(h_K)` at the given directions.
#[derive(Clone, Debug, PartialEq)]
pub struct MinkowskiSample {
    pub values: Vec<f64>,
    /// `max |Ψ(h)[2u] - 2 Ψ(h)[u]|` over the directions.
    pub homogeneity_defect: f64,
    /// Whether the operator is dually translation-invariant, the condition
    /// under which the samples are the support function of a convex body
    /// depending only on `K` up to translation.
    pub dually_invariant: bool,
}

/// Applies `e` to the support function `h` of a polytope given as a `Max` of
/// linear functions, sampling at `directions`.
pub fn minkowski_restrict(
    e: &RadialEndo,
    h: &ConvexExpr,
    directions: &[Vec<f64>],
) -> Result<MinkowskiSample> {
    h.validate()?;
    if !h.is_sublinear_polyhedral() {
        return Err(Error::NotHomogeneous(
            "support data must be built from linear functions (b = 0)".into(),
        ));
    }
    let mut values = Vec::with_capacity(directions.len());
    let mut defect: f64 = 0.0;
    for u in directions {
        let v = e.apply(h, u)?.finite().ok_or_else(|| Error::InfiniteValue("support function".into()))?;
        let u2: Vec<f64> = u.iter().map(|a| 2.0 * a).collect();
        let v2 = e.apply(h, &u2)?.to_f64();
        defect = defect.max((v2 - 2.0 * v).abs());
        values.push(v);
    }
    let scale = 1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if defect > 1e-9 * scale {
        return Err(Error::NotHomogeneous(format!("defect {defect:e}")));
    }
    Ok(MinkowskiSample {
        values,
        homogeneity_defect: defect,
        dually_invariant: e.is_dually_translation_invariant(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::OrbitAtom;
    use std::f64::consts::PI;

    fn atom(t: f64, theta: f64, w: f64) -> OrbitAtom {
        OrbitAtom { t, theta, w }
    }

    #[test]
    fn rotation_examples() {
        let id = canonical_rotation(&[1.0, 0.0, 0.0]).unwrap();
        assert!((id - DMatrix::identity(3, 3)).norm() < 1e-15);
        let r = canonical_rotation(&[-1.0, 0.0]).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        assert!((r - expect).norm() < 1e-15);
        assert_eq!(canonical_rotation(&[0.0, 0.0]), Err(Error::ZeroVector));
    }

    #[test]
    fn rotation_defining_property() {
        for x in [[0.3, -2.0, 0.5], [-1.0, 1e-9, 0.0], [-0.2, 0.1, -3.0], [5.0, 1.0, 1.0]] {
            let r = canonical_rotation(&x).unwrap();
            let l = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            for i in 0..3 {
                assert!((r[(i, 0)] - x[i] / l).abs() <= 1e-14);
            }
            assert!((r.determinant() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn pole_atom_is_identity() {
        let e = RadialEndo::new(OrbitMeasure::new(3, vec![atom(1.0, 0.0, 1.0)]).unwrap(), 64).unwrap();
        let f = ConvexExpr::Sum(vec![ConvexExpr::norm(1.0), ConvexExpr::affine(vec![0.5, -1.0, 2.0], 0.3)]);
        for x in [[0.2, 0.4, -1.0], [0.0, 0.0, 0.0], [-3.0, 1.0, 0.5]] {
            let a = e.apply(&f, &x).unwrap().to_f64();
            let b = f.eval(&x).to_f64();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn symmetric_pair_on_norm() {
        let mu = OrbitMeasure::new(3, vec![atom(1.0, 0.0, 1.0), atom(1.0, PI, 1.0)]).unwrap();
        let e = RadialEndo::new(mu, 64).unwrap();
        let v = e.apply(&ConvexExpr::norm(1.0), &[1.0, 2.0, 2.0]).unwrap().to_f64();
        assert!((v - 6.0).abs() < 1e-12);
        assert!(e.is_dually_translation_invariant());
    }

    #[test]
    fn outer_atom_on_quad() {
        let e = RadialEndo::new(OrbitMeasure::new(3, vec![atom(2.0, 0.0, 1.0)]).unwrap(), 64).unwrap();
        let v = e.apply(&ConvexExpr::quad(1.0), &[0.0, 0.6, 0.8]).unwrap().to_f64();
        assert!((v - 4.0).abs() < 1e-12);
        assert!(!e.is_dually_translation_invariant());
    }

    #[test]
    fn equatorial_orbit_kills_axis_functional() {
        let e = RadialEndo::new(OrbitMeasure::new(3, vec![atom(1.0, PI / 2.0, 1.0)]).unwrap(), 64).unwrap();
        let f = ConvexExpr::affine(vec![1.0, 0.0, 0.0], 0.0);
        for x in [[1.0, 0.0, 0.0], [0.3, -0.4, 2.0], [-1.0, 0.5, 0.5]] {
            assert!(e.apply(&f, &x).unwrap().to_f64().abs() <= 1e-12);
        }
    }

    #[test]
    fn empty_measure_is_zero_map() {
        let e = RadialEndo::new(OrbitMeasure::new(3, vec![]).unwrap(), 64).unwrap();
        assert!(e.is_dually_translation_invariant());
        assert_eq!(e.scalar_on_radial(), Some(0.0));
        assert_eq!(e.apply(&ConvexExpr::quad(1.0), &[1.0, 2.0, 3.0]).unwrap(), ExtReal::ZERO);
    }

    #[test]
    fn scalar_on_radial_examples() {
        let e = RadialEndo::new(OrbitMeasure::new(3, vec![atom(1.0, PI / 3.0, 2.0)]).unwrap(), 64).unwrap();
        assert_eq!(e.scalar_on_radial(), Some(2.0));
        let e = RadialEndo::new(OrbitMeasure::new(3, vec![atom(1.5, 0.0, 1.0)]).unwrap(), 64).unwrap();
        assert!(!e.acts_as_scalar_on_radial());
        let v = e.apply(&ConvexExpr::quad(1.0), &[0.0, 1.0, 0.0]).unwrap().to_f64();
        assert!((v - 2.25).abs() < 1e-12);
    }

    #[test]
    fn partial_exit_reported() {
        let e = RadialEndo::new(OrbitMeasure::new(3, vec![atom(1.0, PI / 2.0, 1.0)]).unwrap(), 64).unwrap();
        let f = ConvexExpr::Sum(vec![
            ConvexExpr::quad(1.0),
            ConvexExpr::precompose(
                DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 4.0])),
                ConvexExpr::ball(2.0),
            ),
        ]);
        let r = e.eval_report(&f, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.value, ExtReal::PosInf);
        assert!(r.partial_exit);
    }

    #[test]
    fn segment_support_doubles() {
        let mu = OrbitMeasure::new(3, vec![atom(1.0, 0.0, 1.0), atom(1.0, PI, 1.0)]).unwrap();
        let e = RadialEndo::new(mu, 64).unwrap();
        let v = [0.6, 0.0, 0.8];
        let h = ConvexExpr::Max(vec![
            ConvexExpr::affine(v.to_vec(), 0.0),
            ConvexExpr::affine(v.iter().map(|a| -a).collect(), 0.0),
        ]);
        let dirs = vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.6, -0.8], vec![-0.48, 0.6, 0.64]];
        let s = minkowski_restrict(&e, &h, &dirs).unwrap();
        for (u, val) in dirs.iter().zip(&s.values) {
            let expect = 2.0 * (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]).abs();
            assert!((val - expect).abs() < 1e-12);
        }
        assert!(s.dually_invariant);
    }

    #[test]
    fn affine_offset_is_not_homogeneous() {
        let e = RadialEndo::new(OrbitMeasure::new(2, vec![atom(1.0, 0.0, 1.0)]).unwrap(), 1).unwrap();
        let h = ConvexExpr::Max(vec![ConvexExpr::affine(vec![1.0, 0.0], 1.0)]);
        assert!(matches!(
            minkowski_restrict(&e, &h, &[vec![1.0, 0.0]]),
            Err(Error::NotHomogeneous(_))
        ));
    }
}
