//! Two worked families: `Ψ_φ(f)[t] = ∫_{-φ(t)}^{φ(t)} (f(s) - f(0)) ds` and
//! `f ↦ g(x) ∫ ζ(|y|) dMA(f)(y)`.

use crate::endo::Endo1D;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::pwl::{PwlError, PwlFunction, Tail};
use crate::tol;

use super::monge_ampere;

/// `Ψ_φ` for an even, non-negative convex `φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiEndo {
    phi: PwlFunction,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= tol::EXACT * (1.0 + a.abs().max(b.abs()))
}

impl PhiEndo {
    /// Evenness is checked at every breakpoint mirror and on the tails,
    /// which is exact for PWL input.
    pub fn new(phi: PwlFunction) -> Result<PhiEndo> {
        let dom = phi.domain();
        if !(dom.lo == -dom.hi || close(dom.lo, -dom.hi)) {
            return Err(Error::PhiNotEven { t: dom.hi });
        }
        match (phi.left_tail(), phi.right_tail()) {
            (Tail::Slope(l), Tail::Slope(r)) if !close(l, -r) => {
                return Err(Error::PhiNotEven { t: f64::INFINITY });
            }
            (Tail::Slope(_), Tail::Closed) | (Tail::Closed, Tail::Slope(_)) => {
                return Err(Error::PhiNotEven { t: f64::INFINITY });
            }
            _ => {}
        }
        for &b in phi.breakpoints() {
            if !close(phi.eval_in_domain(b), phi.eval_in_domain(-b)) {
                return Err(Error::PhiNotEven { t: b });
            }
        }
        // An even convex function is smallest at 0.
        if phi.eval_in_domain(0.0) < 0.0 {
            return Err(Error::PhiNegative { t: 0.0 });
        }
        Ok(PhiEndo { phi })
    }

    pub fn phi(&self) -> &PwlFunction {
        &self.phi
    }
}

impl Endo1D for PhiEndo {
    fn apply_1d(&self, f: &PwlFunction, t: f64) -> Result<ExtReal> {
        if !f.is_finite_everywhere() {
            return Err(PwlError::InfiniteSlope.into());
        }
        // φ is continuous on its closed domain, so the boundary value is the
        // radial limit.
        Ok(match self.phi.eval(t) {
            ExtReal::PosInf => ExtReal::PosInf,
            ExtReal::Finite(a) => ExtReal::Finite(f.integrate(-a, a) - 2.0 * a * f.eval_in_domain(0.0)),
        })
    }
}

/// Compactly supported radial profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Zeta {
    /// `max(0, 1 - |r| / radius)`.
    Hat { radius: f64 },
}

impl Zeta {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Zeta::Hat { radius } => (1.0 - r.abs() / radius).max(0.0),
        }
    }

    pub fn support_radius(&self) -> f64 {
        match *self {
            Zeta::Hat { radius } => radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaEndo {
    pub g: PwlFunction,
    pub zeta: Zeta,
}

impl MaEndo {
    pub fn new(g: PwlFunction, zeta: Zeta) -> Result<MaEndo> {
        let Zeta::Hat { radius } = zeta;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("hat radius must be > 0, got {radius}")));
        }
        Ok(MaEndo { g, zeta })
    }
}

impl Endo1D for MaEndo {
    fn apply_1d(&self, f: &PwlFunction, x: f64) -> Result<ExtReal> {
        let ma = monge_ampere(f)?;
        let mass: f64 = ma.atoms().iter().map(|&(y, w)| self.zeta.eval(y.abs()) * w).sum();
        Ok(self.g.eval(x).scale(mass))
    }
}

/// Smallest values of the two summands of `(Ψ_φ f)''` over a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateReport {
    pub min_first: f64,
    pub min_second: f64,
    pub points: usize,
    pub pass: bool,
}

/// Checks `φ''(t) (f(φ) + f(-φ) - 2 f(0)) >= -tol` and
/// `φ'(t)² (f'(φ) - f'(-φ)) >= -tol` at interior grid points, with
/// finite differences of `φ` and one-sided slopes of `f`.
pub fn example_phi_convexity_certificate(
    phi: &PwlFunction,
    f: &PwlFunction,
    grid: &[f64],
    tol: f64,
) -> CertificateReport {
    let mut min_first = f64::INFINITY;
    let mut min_second = f64::INFINITY;
    let mut points = 0;
    for w in grid.windows(3) {
        let (Some(p0), Some(p1), Some(p2)) = (phi.eval(w[0]).finite(), phi.eval(w[1]).finite(), phi.eval(w[2]).finite())
        else {
            continue;
        };
        let (hm, hp) = (w[1] - w[0], w[2] - w[1]);
        let d1 = (p2 - p0) / (hm + hp);
        let d2 = 2.0 * ((p2 - p1) / hp - (p1 - p0) / hm) / (hm + hp);
        let a = p1;
        let first = d2 * (f.eval_in_domain(a) + f.eval_in_domain(-a) - 2.0 * f.eval_in_domain(0.0));
        let second = d1 * d1 * (f.right_derivative(a) - f.left_derivative(-a));
        min_first = min_first.min(first);
        min_second = min_second.min(second);
        points += 1;
    }
    CertificateReport {
        min_first,
        min_second,
        points,
        pass: points > 0 && min_first >= -tol && min_second >= -tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::linspace;

    fn one_plus_abs() -> PwlFunction {
        PwlFunction::abs_at(0.0, 1.0).add(&PwlFunction::affine(0.0, 1.0)).unwrap()
    }

    #[test]
    fn square_proxy_integral() {
        let e = PhiEndo::new(one_plus_abs()).unwrap();
        let f = PwlFunction::interpolate(|y| y * y, -5.0, 5.0, 4000).unwrap();
        let v = e.apply_1d(&f, 1.0).unwrap().to_f64();
        assert!((v - 16.0 / 3.0).abs() < 1e-4, "{v}");
    }

    #[test]
    fn affine_input_gives_zero() {
        let e = PhiEndo::new(one_plus_abs()).unwrap();
        let f = PwlFunction::affine(3.0, 7.0);
        for t in [-2.0, 0.0, 0.7, 3.0] {
            assert!(e.apply_1d(&f, t).unwrap().to_f64().abs() < 1e-12);
        }
    }

    #[test]
    fn indicator_phi() {
        let e = PhiEndo::new(PwlFunction::indicator(-1.0, 1.0).unwrap()).unwrap();
        let f = PwlFunction::abs_at(0.2, 1.0);
        for t in [-0.9, 0.0, 0.5, 1.0] {
            assert_eq!(e.apply_1d(&f, t).unwrap(), ExtReal::Finite(0.0));
        }
        assert_eq!(e.apply_1d(&f, 1.5).unwrap(), ExtReal::PosInf);
    }

    #[test]
    fn phi_validation() {
        let skew = PwlFunction::abs_at(0.5, 1.0);
        assert!(matches!(PhiEndo::new(skew), Err(Error::PhiNotEven { .. })));
        let neg = PwlFunction::abs_at(0.0, 1.0).add(&PwlFunction::affine(0.0, -1.0)).unwrap();
        assert!(matches!(PhiEndo::new(neg), Err(Error::PhiNegative { .. })));
        let half = PwlFunction::indicator(-1.0, 2.0).unwrap();
        assert!(matches!(PhiEndo::new(half), Err(Error::PhiNotEven { .. })));
    }

    #[test]
    fn certificate_signs() {
        let grid = linspace(-2.0, 2.0, 41);
        let phi = PwlFunction::interpolate(|t| 1.0 + t * t, -3.0, 3.0, 600).unwrap();
        let f = PwlFunction::interpolate(|y| y * y, -20.0, 20.0, 4000).unwrap();
        let r = example_phi_convexity_certificate(&phi, &f, &grid, 1e-9);
        assert!(r.pass && r.points == 39);
        assert!(r.min_first > 0.0);

        let aff = PwlFunction::affine(2.0, -1.0);
        let r = example_phi_convexity_certificate(&phi, &aff, &grid, 1e-9);
        assert!(r.pass && r.min_first.abs() < 1e-9 && r.min_second.abs() < 1e-9);

        let r = example_phi_convexity_certificate(&one_plus_abs(), &f, &linspace(0.5, 2.0, 7), 1e-9);
        assert!(r.min_first.abs() < 1e-9);
    }

    #[test]
    fn ma_examples() {
        let g = PwlFunction::interpolate(|x| x * x, -2.0, 2.0, 400).unwrap();
        let e = MaEndo::new(g.clone(), Zeta::Hat { radius: 1.0 }).unwrap();
        for x in [-1.0, 0.3, 1.7] {
            let v = e.apply_1d(&PwlFunction::abs_at(0.0, 1.0), x).unwrap().to_f64();
            assert!((v - 2.0 * g.eval_in_domain(x)).abs() < 1e-14);
            assert_eq!(e.apply_1d(&PwlFunction::affine(1.0, 2.0), x).unwrap(), ExtReal::Finite(0.0));
            assert_eq!(e.apply_1d(&PwlFunction::abs_at(5.0, 1.0), x).unwrap(), ExtReal::Finite(0.0));
        }
    }
}
