//! Seeded generators for test inputs. All randomness goes through
//! [`ChaCha8Rng`] seeded from a 64-bit integer.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::ConvexExpr;
use crate::measure::{LineMeasure, OrbitAtom, OrbitMeasure};
use crate::pwl::{PwlFunction, Tail};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` sorted values in `[lo, hi]` with consecutive gaps `>= gap`.
pub fn spaced_sorted(rng: &mut TestRng, count: usize, lo: f64, hi: f64, gap: f64) -> Vec<f64> {
    let slack = (hi - lo) - gap * count.saturating_sub(1) as f64;
    assert!(slack >= 0.0, "interval too short for {count} values with gap {gap}");
    let mut u: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..=slack)).collect();
    u.sort_by(|a, b| a.partial_cmp(b).unwrap());
    u.iter().enumerate().map(|(i, v)| lo + v + gap * i as f64).collect()
}

/// Shape parameters for random convex piecewise-linear functions.
#[derive(Clone, Debug)]
pub struct PwlGen {
    pub max_breakpoints: usize,
    /// Breakpoints lie in `[-span, span]`.
    pub span: f64,
    /// Slopes lie in `[-slope_span, slope_span]`.
    pub slope_span: f64,
    pub min_gap: f64,
    pub min_slope_gap: f64,
    /// Probability that a tail is closed (domain truncated on that side).
    pub closed_tail_prob: f64,
}

impl Default for PwlGen {
    fn default() -> PwlGen {
        PwlGen {
            max_breakpoints: 8,
            span: 3.0,
            slope_span: 3.0,
            min_gap: 0.05,
            min_slope_gap: 0.05,
            closed_tail_prob: 0.0,
        }
    }
}

impl PwlGen {
    pub fn sample(&self, rng: &mut TestRng) -> PwlFunction {
        let m = rng.random_range(1..=self.max_breakpoints);
        let bp = spaced_sorted(rng, m, -self.span, self.span, self.min_gap);
        let slopes = spaced_sorted(rng, m + 1, -self.slope_span, self.slope_span, self.min_slope_gap);
        let mut vals = Vec::with_capacity(m);
        vals.push(rng.random_range(-2.0..2.0));
        for i in 1..m {
            let v = vals[i - 1] + slopes[i] * (bp[i] - bp[i - 1]);
            vals.push(v);
        }
        let mut tail = |s: f64| {
            if rng.random_bool(self.closed_tail_prob) {
                Tail::Closed
            } else {
                Tail::Slope(s)
            }
        };
        let left = tail(slopes[0]);
        let right = tail(slopes[m]);
        PwlFunction::new(bp, vals, left, right).expect("generated data is convex")
    }
}

/// A finite convex PWL function with at most `max_breakpoints` kinks.
pub fn finite_pwl(rng: &mut TestRng, max_breakpoints: usize) -> PwlFunction {
    PwlGen {
        max_breakpoints,
        ..PwlGen::default()
    }
    .sample(rng)
}

pub fn unit_vector(rng: &mut TestRng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let l = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if l > 0.1 {
            return v.iter().map(|a| a / l).collect();
        }
    }
}

/// Matrix with entries in `[-2, 2]` and `|det| >= 0.25`.
pub fn invertible(rng: &mut TestRng, n: usize) -> DMatrix<f64> {
    loop {
        let m: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
        if m.determinant().abs() >= 0.25 {
            return m;
        }
    }
}

/// A rotation (orthogonal, determinant 1) from the QR factorisation of a
/// random matrix.
pub fn rotation(rng: &mut TestRng, n: usize) -> DMatrix<f64> {
    let a = invertible(rng, n);
    let mut q = a.qr().q();
    if q.determinant() < 0.0 {
        for i in 0..n {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

/// A rotation fixing `e1`.
pub fn rotation_fixing_pole(rng: &mut TestRng, n: usize) -> DMatrix<f64> {
    let mut r = DMatrix::identity(n, n);
    if n >= 3 {
        let q = rotation(rng, n - 1);
        r.view_mut((1, 1), (n - 1, n - 1)).copy_from(&q);
    }
    r
}

fn leaf(rng: &mut TestRng, n: usize) -> ConvexExpr {
    match rng.random_range(0..4) {
        0 => ConvexExpr::affine(
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            rng.random_range(-1.0..1.0),
        ),
        1 => ConvexExpr::quad(rng.random_range(0.0..1.0)),
        2 => ConvexExpr::norm(rng.random_range(0.0..2.0)),
        _ => {
            let p = PwlGen {
                max_breakpoints: 4,
                span: 2.0,
                slope_span: 2.0,
                ..PwlGen::default()
            }
            .sample(rng);
            ConvexExpr::pwl1d(p, unit_vector(rng, n))
        }
    }
}

/// A random finite-valued expression of depth at most `depth`.
pub fn finite_expr(rng: &mut TestRng, n: usize, depth: usize) -> ConvexExpr {
    if depth == 0 || rng.random_bool(0.3) {
        return leaf(rng, n);
    }
    match rng.random_range(0..4) {
        0 => {
            let k = rng.random_range(2..=3);
            ConvexExpr::Sum((0..k).map(|_| finite_expr(rng, n, depth - 1)).collect())
        }
        1 => {
            let k = rng.random_range(2..=3);
            ConvexExpr::Max((0..k).map(|_| finite_expr(rng, n, depth - 1)).collect())
        }
        2 => ConvexExpr::scale(rng.random_range(0.0..2.0), finite_expr(rng, n, depth - 1)),
        _ => {
            let m = invertible(rng, n) * 0.5;
            ConvexExpr::precompose(m, finite_expr(rng, n, depth - 1))
        }
    }
}

/// A random non-negative finite convex function.
pub fn nonneg_expr(rng: &mut TestRng, n: usize) -> ConvexExpr {
    match rng.random_range(0..3) {
        0 => ConvexExpr::Max(vec![ConvexExpr::affine(vec![0.0; n], 0.0), finite_expr(rng, n, 1)]),
        1 => ConvexExpr::norm(rng.random_range(0.0..2.0)),
        _ => ConvexExpr::Sum(vec![
            ConvexExpr::quad(rng.random_range(0.0..1.0)),
            ConvexExpr::affine(vec![0.0; n], rng.random_range(0.0..1.0)),
        ]),
    }
}

/// A random convex quadratic `<x, A x> + <a, x> + b`, built from
/// `Quad`, `Precompose(_, Quad)` and `Affine` leaves. Its restriction to any
/// circle is a trigonometric polynomial of degree at most 2.
pub fn quadratic_expr(rng: &mut TestRng, n: usize) -> ConvexExpr {
    ConvexExpr::Sum(vec![
        ConvexExpr::quad(rng.random_range(0.0..1.0)),
        ConvexExpr::precompose(invertible(rng, n) * 0.5, ConvexExpr::quad(rng.random_range(0.0..1.0))),
        ConvexExpr::affine(
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            rng.random_range(-1.0..1.0),
        ),
    ])
}

/// Atoms `±s` with `|s|` in `[0.25, 2]` and weights in `[0.1, 2]`.
pub fn line_measure(rng: &mut TestRng, max_atoms: usize) -> LineMeasure {
    let k = rng.random_range(1..=max_atoms);
    let atoms = (0..k)
        .map(|_| {
            let s: f64 = rng.random_range(0.25..2.0);
            let s = if rng.random_bool(0.5) { s } else { -s };
            (s, rng.random_range(0.1..2.0))
        })
        .collect();
    LineMeasure::new(atoms).expect("valid atoms")
}

/// Atoms at non-zero multiples of 1/4 in `[-2, 2]`.
pub fn dyadic_line_measure(rng: &mut TestRng, max_atoms: usize) -> LineMeasure {
    let k = rng.random_range(1..=max_atoms);
    let atoms = (0..k)
        .map(|_| {
            let q = rng.random_range(1..=8) as f64 / 4.0;
            let s = if rng.random_bool(0.5) { q } else { -q };
            (s, rng.random_range(0.1..2.0))
        })
        .collect();
    LineMeasure::new(atoms).expect("valid atoms")
}

/// Orbit atoms with `t` in `[0, 2]`.
pub fn orbit_measure(rng: &mut TestRng, n: usize, max_atoms: usize) -> OrbitMeasure {
    let k = rng.random_range(1..=max_atoms);
    let atoms = (0..k)
        .map(|_| OrbitAtom {
            t: rng.random_range(0.0..2.0),
            theta: if n == 2 {
                rng.random_range(-PI..PI)
            } else {
                rng.random_range(0.0..PI)
            },
            w: rng.random_range(0.1..2.0),
        })
        .collect();
    OrbitMeasure::new(n, atoms).expect("valid atoms")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spaced_values_respect_gap() {
        let mut r = rng(3);
        for _ in 0..100 {
            let v = spaced_sorted(&mut r, 20, -1.0, 1.0, 0.05);
            assert!(v.windows(2).all(|w| w[1] - w[0] >= 0.05 - 1e-15));
            assert!(v[0] >= -1.0 && v[19] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn rotations_are_special_orthogonal() {
        let mut r = rng(5);
        for n in 2..=4 {
            let q = rotation(&mut r, n);
            let id = q.transpose() * &q;
            assert!((id - DMatrix::identity(n, n)).norm() < 1e-12);
            assert!((q.determinant() - 1.0).abs() < 1e-12);
            let p = rotation_fixing_pole(&mut r, n);
            assert!((p.column(0)[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a = finite_expr(&mut rng(11), 3, 2);
        let b = finite_expr(&mut rng(11), 3, 2);
        assert_eq!(a, b);
        a.validate().unwrap();
    }
}
