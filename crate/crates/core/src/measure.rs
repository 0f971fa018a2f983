//! Atomic measures on the line and SO(n-1)-invariant orbit measures on ℝⁿ.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default number of quadrature points per orbit.
pub const DEFAULT_ORBIT_POINTS: usize = 64;

/// A finite non-negative atomic measure on ℝ.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LineMeasure {
    atoms: Vec<(f64, f64)>,
}

impl LineMeasure {
    /// Atoms `(position, weight)`; weights must be finite and `>= 0`.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<LineMeasure> {
        for &(s, w) in &atoms {
            if !s.is_finite() || !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidParameter(format!("bad atom (s = {s}, w = {w})")));
            }
        }
        Ok(LineMeasure { atoms })
    }

    pub fn empty() -> LineMeasure {
        LineMeasure::default()
    }

    pub fn dirac(s: f64) -> LineMeasure {
        LineMeasure { atoms: vec![(s, 1.0)] }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.iter().all(|&(_, w)| w == 0.0)
    }

    fn check_no_zero_atom(&self) -> Result<()> {
        if self.atoms.iter().any(|&(s, w)| s == 0.0 && w > 0.0) {
            Err(Error::AtomAtZero)
        } else {
            Ok(())
        }
    }

    /// `sum w |s|^k`.
    pub fn moment_abs(&self, k: i32) -> Result<f64> {
        if k < 0 {
            self.check_no_zero_atom()?;
        }
        Ok(self
            .atoms
            .iter()
            .filter(|a| a.1 > 0.0)
            .map(|&(s, w)| w * s.abs().powi(k))
            .sum())
    }

    /// `sum w s^k`.
    pub fn moment_signed(&self, k: i32) -> Result<f64> {
        if k < 0 {
            self.check_no_zero_atom()?;
        }
        Ok(self
            .atoms
            .iter()
            .filter(|a| a.1 > 0.0)
            .map(|&(s, w)| w * s.powi(k))
            .sum())
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Smallest and largest atom position carrying positive weight.
    pub fn support_bounds(&self) -> Result<(f64, f64)> {
        self.atoms
            .iter()
            .filter(|a| a.1 > 0.0)
            .fold(None, |acc: Option<(f64, f64)>, &(s, _)| {
                Some(acc.map_or((s, s), |(a, b)| (a.min(s), b.max(s))))
            })
            .ok_or(Error::EmptyMeasure)
    }

    pub fn concat(&self, other: &LineMeasure) -> LineMeasure {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        LineMeasure { atoms }
    }

    /// Sorted by position, atoms closer than `merge_eps` combined, zero
    /// weights dropped.
    pub fn canonical(&self, merge_eps: f64) -> LineMeasure {
        let mut sorted: Vec<(f64, f64)> = self.atoms.iter().copied().filter(|a| a.1 > 0.0).collect();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (s, w) in sorted {
            match out.last_mut() {
                Some(last) if s - last.0 <= merge_eps => last.1 += w,
                _ => out.push((s, w)),
            }
        }
        LineMeasure { atoms: out }
    }
}

/// One weighted orbit: radius `t`, polar angle `theta` from the pole, total
/// weight `w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitAtom {
    pub t: f64,
    pub theta: f64,
    pub w: f64,
}

/// An SO(n-1)-invariant atomic measure on ℝⁿ, pole `e1`.
///
/// For `n = 2` each atom is the single point `t (cos theta, sin theta)`. For
/// `n >= 3` it is `w` times the uniform probability measure on the sphere
/// `{t (cos theta e1 + sin theta u) : u ⊥ e1, |u| = 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitMeasure {
    n: usize,
    atoms: Vec<OrbitAtom>,
}

fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

impl OrbitMeasure {
    pub fn new(n: usize, atoms: Vec<OrbitAtom>) -> Result<OrbitMeasure> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("orbit measures need n >= 2, got {n}")));
        }
        let mut out = Vec::with_capacity(atoms.len());
        for a in atoms {
            if !(a.t >= 0.0 && a.t.is_finite()) || !(a.w >= 0.0 && a.w.is_finite()) || !a.theta.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "bad orbit atom (t = {}, theta = {}, w = {})",
                    a.t, a.theta, a.w
                )));
            }
            let theta = if n == 2 {
                wrap_angle(a.theta)
            } else if (0.0..=PI).contains(&a.theta) {
                a.theta
            } else {
                return Err(Error::InvalidParameter(format!(
                    "polar angle {} outside [0, pi] for n = {n}",
                    a.theta
                )));
            };
            out.push(OrbitAtom { theta, ..a });
        }
        Ok(OrbitMeasure { n, atoms: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[OrbitAtom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }

    /// `∫ y dμ(y)`; only the pole component can be non-zero for `n >= 3`.
    pub fn center(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n];
        for a in &self.atoms {
            c[0] += a.w * a.t * a.theta.cos();
            if self.n == 2 {
                c[1] += a.w * a.t * a.theta.sin();
            }
        }
        c
    }

    /// Pole component of [`OrbitMeasure::center`].
    pub fn center_component(&self) -> f64 {
        self.center()[0]
    }

    pub fn concat(&self, other: &OrbitMeasure) -> Result<OrbitMeasure> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        Ok(OrbitMeasure { n: self.n, atoms })
    }

    /// Quadrature points of every atom, concatenated.
    pub fn quadrature(&self, m: usize) -> Result<Vec<(Vec<f64>, f64)>> {
        let mut out = Vec::new();
        for a in &self.atoms {
            out.extend(orbit_quadrature(*a, self.n, m)?);
        }
        Ok(out)
    }
}

/// Points and weights realising one orbit atom.
///
/// `n = 2`: the atom itself. `n = 3`: `m` equally spaced points on the
/// circle. `n = 4`: Gauss–Legendre in the height of `u ∈ S²` (`ceil(m/2)`
/// nodes) times `m` equally spaced azimuths. Weights sum to `w`.
pub fn orbit_quadrature(atom: OrbitAtom, n: usize, m: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    if m == 0 {
        return Err(Error::InvalidParameter("orbit quadrature needs at least one point".into()));
    }
    let OrbitAtom { t, theta, w } = atom;
    let (ct, st) = (theta.cos(), theta.sin());
    match n {
        2 => Ok(vec![(vec![t * ct, t * st], w)]),
        3 => Ok((0..m)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / m as f64;
                (vec![t * ct, t * st * phi.cos(), t * st * phi.sin()], w / m as f64)
            })
            .collect()),
        4 => {
            let (zs, zw) = gauss_legendre(m.div_ceil(2));
            let mut out = Vec::with_capacity(zs.len() * m);
            for (z, gw) in zs.iter().zip(&zw) {
                let rho = (1.0 - z * z).max(0.0).sqrt();
                for k in 0..m {
                    let phi = 2.0 * PI * k as f64 / m as f64;
                    let u = [*z, rho * phi.cos(), rho * phi.sin()];
                    out.push((
                        vec![t * ct, t * st * u[0], t * st * u[1], t * st * u[2]],
                        w * 0.5 * gw / m as f64,
                    ));
                }
            }
            Ok(out)
        }
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// Chebyshev initial guesses.
fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for i in 0..k {
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        assert_eq!(LineMeasure::dirac(0.5).moment_abs(-2).unwrap(), 4.0);
        let sym = LineMeasure::new(vec![(1.0, 1.0), (-1.0, 1.0)]).unwrap();
        assert_eq!(sym.moment_signed(-1).unwrap(), 0.0);
        assert_eq!(LineMeasure::dirac(1.0).moment_signed(-1).unwrap(), 1.0);
        assert_eq!(LineMeasure::dirac(0.0).moment_abs(-2), Err(Error::AtomAtZero));
        assert_eq!(LineMeasure::dirac(0.0).moment_abs(0).unwrap(), 1.0);
    }

    #[test]
    fn support_bounds_examples() {
        assert_eq!(LineMeasure::dirac(2.0).support_bounds().unwrap(), (2.0, 2.0));
        let sym = LineMeasure::new(vec![(1.0, 1.0), (-1.0, 1.0)]).unwrap();
        assert_eq!(sym.support_bounds().unwrap(), (-1.0, 1.0));
        let dup = LineMeasure::new(vec![(0.5, 3.0), (0.5, 1.0)]).unwrap();
        assert_eq!(dup.support_bounds().unwrap(), (0.5, 0.5));
        assert_eq!(LineMeasure::empty().support_bounds(), Err(Error::EmptyMeasure));
    }

    #[test]
    fn negative_weight_rejected() {
        assert!(LineMeasure::new(vec![(1.0, -1.0)]).is_err());
    }

    #[test]
    fn orbit_mass_and_center() {
        let sym = OrbitMeasure::new(
            3,
            vec![
                OrbitAtom { t: 1.0, theta: 0.0, w: 1.0 },
                OrbitAtom { t: 1.0, theta: PI, w: 1.0 },
            ],
        )
        .unwrap();
        assert_eq!(sym.total_mass(), 2.0);
        assert!(sym.center_component().abs() < 1e-15);
        let one = OrbitMeasure::new(3, vec![OrbitAtom { t: 2.0, theta: 0.0, w: 1.0 }]).unwrap();
        assert_eq!(one.total_mass(), 1.0);
        assert_eq!(one.center_component(), 2.0);
        assert_eq!(OrbitMeasure::new(3, vec![]).unwrap().total_mass(), 0.0);
    }

    #[test]
    fn planar_angles_are_wrapped() {
        let m = OrbitMeasure::new(2, vec![OrbitAtom { t: 1.0, theta: 3.0 * PI / 2.0, w: 1.0 }]).unwrap();
        assert!((m.atoms()[0].theta + PI / 2.0).abs() < 1e-15);
        assert!(OrbitMeasure::new(3, vec![OrbitAtom { t: 1.0, theta: -0.1, w: 1.0 }]).is_err());
    }

    #[test]
    fn quadrature_examples() {
        let pole = orbit_quadrature(OrbitAtom { t: 1.0, theta: 0.0, w: 1.0 }, 3, 8).unwrap();
        assert_eq!(pole.len(), 8);
        for (p, w) in &pole {
            assert_eq!(p, &vec![1.0, 0.0, 0.0]);
            assert_eq!(*w, 0.125);
        }
        let eq = orbit_quadrature(OrbitAtom { t: 1.0, theta: PI / 2.0, w: 1.0 }, 3, 4).unwrap();
        assert_eq!(eq.len(), 4);
        for (p, w) in &eq {
            assert!(p[0].abs() < 1e-15);
            assert!((p[1].hypot(p[2]) - 1.0).abs() < 1e-15);
            assert_eq!(*w, 0.25);
        }
        let planar = orbit_quadrature(OrbitAtom { t: 2.0, theta: PI / 4.0, w: 3.0 }, 2, 64).unwrap();
        assert_eq!(planar.len(), 1);
        assert!((planar[0].0[0] - 2.0 * (PI / 4.0).cos()).abs() < 1e-15);
        assert_eq!(planar[0].1, 3.0);
    }

    #[test]
    fn quadrature_weights_sum_to_mass() {
        for n in [2, 3, 4] {
            for m in [1, 2, 7, 64] {
                let q = orbit_quadrature(OrbitAtom { t: 1.3, theta: 0.7, w: 2.5 }, n, m).unwrap();
                let s: f64 = q.iter().map(|p| p.1).sum();
                assert!((s - 2.5).abs() <= 1e-13, "n={n} m={m} sum={s}");
                assert!(q.iter().all(|p| p.1 >= 0.0));
            }
        }
    }

    #[test]
    fn n4_quadrature_integrates_quadratics() {
        // Mean of u_1^2 over S^2 is 1/3.
        let q = orbit_quadrature(OrbitAtom { t: 1.0, theta: PI / 2.0, w: 1.0 }, 4, 8).unwrap();
        let mean: f64 = q.iter().map(|(p, w)| w * p[1] * p[1]).sum();
        assert!((mean - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn five_dimensions_unsupported() {
        let r = orbit_quadrature(OrbitAtom { t: 1.0, theta: 0.0, w: 1.0 }, 5, 8);
        assert_eq!(r, Err(Error::UnsupportedDimension(5)));
    }
}
