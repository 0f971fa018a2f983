//! Sampled convexity certificates and epi-convergence diagnostics.

use crate::ext::{ExtReal, Interval};
use crate::func::ConvexFunction;

/// Worst midpoint violation found by [`convexity_defect`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityReport {
    /// `max (f(m) - (f(a) + f(b)) / 2) / (1 + max(|f(a)|, |f(b)|))` over pairs
    /// with finite endpoint values; `+inf` if some midpoint is `+inf`.
    pub max_defect: f64,
    /// The pair `(a, b)` attaining it.
    pub worst: Option<(f64, f64)>,
}

impl ConvexityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_defect <= tol
    }
}

/// Midpoint test over all grid pairs, relative to the value scale.
pub fn convexity_defect<F: Fn(f64) -> ExtReal>(f: F, grid: &[f64]) -> ConvexityReport {
    let vals: Vec<ExtReal> = grid.iter().map(|&t| f(t)).collect();
    let mut report = ConvexityReport {
        max_defect: f64::NEG_INFINITY,
        worst: None,
    };
    for i in 0..grid.len() {
        let Some(fa) = vals[i].finite() else { continue };
        for j in i + 2..grid.len() {
            let Some(fb) = vals[j].finite() else { continue };
            let mid = 0.5 * (grid[i] + grid[j]);
            let defect = match f(mid) {
                ExtReal::PosInf => f64::INFINITY,
                ExtReal::Finite(fm) => (fm - 0.5 * (fa + fb)) / (1.0 + fa.abs().max(fb.abs())),
            };
            if defect > report.max_defect {
                report.max_defect = defect;
                report.worst = Some((grid[i], grid[j]));
            }
        }
    }
    if report.worst.is_none() {
        report.max_defect = 0.0;
    }
    report
}

/// True iff `f((a+b)/2) <= (f(a)+f(b))/2 + tol * scale` for every grid pair
/// with finite values. Vacuously true when no such pair exists.
pub fn is_convex_sampled<F: Fn(f64) -> ExtReal>(f: F, grid: &[f64], tol: f64) -> bool {
    convexity_defect(f, grid).passes(tol)
}

/// `count` equally spaced points covering `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|k| {
                if k == count - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

/// Restriction `t -> f(base + t dir)`.
pub fn along_line<'a>(
    f: &'a dyn ConvexFunction,
    base: &'a [f64],
    dir: &'a [f64],
) -> impl Fn(f64) -> ExtReal + 'a {
    move |t| {
        let p: Vec<f64> = base.iter().zip(dir).map(|(b, d)| b + t * d).collect();
        f.eval(&p)
    }
}

/// An axis-aligned box `prod [lo_i, hi_i]`.
pub type Compact = Vec<Interval>;

/// Sup-distances `sup |f_j - f|` per compact and index.
#[derive(Clone, Debug)]
pub struct EpiReport {
    /// `sup_dist[c][j - 1]` for compact `c` and index `j`.
    pub sup_dist: Vec<Vec<f64>>,
    pub pass: bool,
}

/// Uniform-on-compacts criterion for epi-convergence of `f_j -> f`.
///
/// Each compact is sampled on a tensor grid with `per_axis` points per
/// coordinate; points where `f` is infinite are skipped. The probe passes when
/// the distance at `j_max` is below `tol` on every compact.
pub fn epi_converges_probe(
    seq: &dyn Fn(usize, &[f64]) -> ExtReal,
    f: &dyn Fn(&[f64]) -> ExtReal,
    compacts: &[Compact],
    tol: f64,
    j_max: usize,
    per_axis: usize,
) -> EpiReport {
    let mut sup_dist = Vec::with_capacity(compacts.len());
    for boxed in compacts {
        let points = tensor_grid(boxed, per_axis);
        let targets: Vec<(Vec<f64>, f64)> = points
            .into_iter()
            .filter_map(|p| f(&p).finite().map(|v| (p, v)))
            .collect();
        let dists = (1..=j_max)
            .map(|j| {
                targets
                    .iter()
                    .map(|(p, v)| (seq(j, p).to_f64() - v).abs())
                    .fold(0.0, f64::max)
            })
            .collect::<Vec<f64>>();
        sup_dist.push(dists);
    }
    let pass = sup_dist
        .iter()
        .all(|d| d.last().is_some_and(|&last| last <= tol));
    EpiReport { sup_dist, pass }
}

fn tensor_grid(boxed: &[Interval], per_axis: usize) -> Vec<Vec<f64>> {
    let mut points = vec![vec![]];
    for iv in boxed {
        let axis = linspace(iv.lo, iv.hi, per_axis);
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect();
    }
    points
}
