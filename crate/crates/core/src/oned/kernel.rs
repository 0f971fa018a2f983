//! Kernels `ψ(x, y)` of one-dimensional endomorphisms and their evaluation
//! form `(R, c₁..c₄, ψ̃)`.

use std::fmt;
use std::sync::Arc;

use crate::endo::Endo1D;
use crate::error::{Error, Result};
use crate::ext::{ExtReal, Interval};
use crate::par::{map_slice, Exec};
use crate::pwl::PwlFunction;
use crate::sample::{is_convex_sampled, linspace};

use super::monge_ampere;

const BOX_SLACK: f64 = 1e-12;
const AFFINE_TOL: f64 = 1e-8;

pub type KernelFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Tabulated kernel values `values[i][j] = ψ(xs[i], ys[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<Vec<f64>>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    !v.is_empty() && v.iter().all(|t| t.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

/// Cell index and fraction of `t` in the sorted axis `v`.
fn locate(v: &[f64], t: f64) -> (usize, f64) {
    if v.len() == 1 {
        return (0, 0.0);
    }
    let i = v.partition_point(|&u| u <= t).saturating_sub(1).min(v.len() - 2);
    (i, (t - v[i]) / (v[i + 1] - v[i]))
}

impl KernelGrid {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<Vec<f64>>) -> Result<KernelGrid> {
        if !strictly_increasing(&xs) || !strictly_increasing(&ys) {
            return Err(Error::InvalidParameter(
                "kernel grid axes must be finite and strictly increasing".into(),
            ));
        }
        if values.len() != xs.len() || values.iter().any(|r| r.len() != ys.len()) {
            return Err(Error::InvalidParameter(format!(
                "kernel grid values must be {} rows of {} entries",
                xs.len(),
                ys.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("kernel grid values must be finite".into()));
        }
        Ok(KernelGrid { xs, ys, values })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Bilinear interpolation; exact at grid nodes.
    fn interpolate(&self, x: f64, y: f64) -> f64 {
        let (i, fx) = locate(&self.xs, x);
        let (j, fy) = locate(&self.ys, y);
        let row = |r: &Vec<f64>| {
            if self.ys.len() == 1 {
                r[0]
            } else {
                (1.0 - fy) * r[j] + fy * r[j + 1]
            }
        };
        if self.xs.len() == 1 {
            return row(&self.values[0]);
        }
        (1.0 - fx) * row(&self.values[i]) + fx * row(&self.values[i + 1])
    }
}

#[derive(Clone)]
pub enum KernelSource {
    Closed(Arc<KernelFn>),
    Grid(KernelGrid),
}

/// A continuous kernel on a validity box.
#[derive(Clone)]
pub struct Kernel1D {
    source: KernelSource,
    x_box: Interval,
    y_box: Interval,
}

impl fmt::Debug for Kernel1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.source {
            KernelSource::Closed(_) => "closed-form".to_string(),
            KernelSource::Grid(g) => format!("grid {}x{}", g.xs.len(), g.ys.len()),
        };
        write!(f, "Kernel1D({kind}, x in {}, y in {})", self.x_box, self.y_box)
    }
}

impl Kernel1D {
    pub fn closed_form<F>(psi: F, x_box: Interval, y_box: Interval) -> Kernel1D
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Kernel1D {
            source: KernelSource::Closed(Arc::new(psi)),
            x_box,
            y_box,
        }
    }

    /// Valid on the rectangle spanned by the grid.
    pub fn from_grid(grid: KernelGrid) -> Kernel1D {
        let x_box = Interval::new(grid.xs[0], *grid.xs.last().unwrap());
        let y_box = Interval::new(grid.ys[0], *grid.ys.last().unwrap());
        Kernel1D {
            source: KernelSource::Grid(grid),
            x_box,
            y_box,
        }
    }

    pub fn source(&self) -> &KernelSource {
        &self.source
    }

    pub fn grid(&self) -> Option<&KernelGrid> {
        match &self.source {
            KernelSource::Grid(g) => Some(g),
            KernelSource::Closed(_) => None,
        }
    }

    pub fn x_box(&self) -> Interval {
        self.x_box
    }

    pub fn y_box(&self) -> Interval {
        self.y_box
    }

    fn inside(&self, x: f64, y: f64) -> bool {
        x >= self.x_box.lo - BOX_SLACK
            && x <= self.x_box.hi + BOX_SLACK
            && y >= self.y_box.lo - BOX_SLACK
            && y <= self.y_box.hi + BOX_SLACK
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !self.inside(x, y) {
            return Err(Error::OutsideValidity { x, y });
        }
        Ok(match &self.source {
            KernelSource::Closed(f) => f(x, y),
            KernelSource::Grid(g) => g.interpolate(x, y),
        })
    }

    /// `ψ(x, y) + α(x) + β(x) y`, which induces the same endomorphism.
    pub fn with_gauge<A, B>(&self, alpha: A, beta: B) -> Kernel1D
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let inner = self.clone();
        Kernel1D::closed_form(
            move |x, y| inner.eval(x, y).unwrap_or(f64::NAN) + alpha(x) + beta(x) * y,
            self.x_box,
            self.y_box,
        )
    }
}

/// `ψ` on `A` split into tail coefficients and a compactly supported part:
/// `ψ(x, y) = c₁ y₊ + c₂ (y+1)₊ + c₃ (-y)₊ + c₄ (-y-1)₊ + ψ̃(x, y)`, with
/// `ψ̃(x, ·)` vanishing outside `[-R, R]`.
#[derive(Clone, Debug)]
pub struct KernelDecomposition {
    kernel: Kernel1D,
    a: Interval,
    r: f64,
}

impl KernelDecomposition {
    pub fn kernel(&self) -> &Kernel1D {
        &self.kernel
    }

    pub fn a(&self) -> Interval {
        self.a
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `[c₁, c₂, c₃, c₄]` at `x`.
    ///
    /// `c₁, c₂` solve `ψ(x, y) = c₁ y + c₂ (y+1)` at `y = R, R+1`; `c₃, c₄`
    /// solve `ψ(x, y) = c₃ (-y) + c₄ (-y-1)` at `y = -R, -R-1`.
    pub fn coefficients(&self, x: f64) -> Result<[f64; 4]> {
        let r = self.r;
        let p_hi = self.kernel.eval(x, r)?;
        let q_hi = self.kernel.eval(x, r + 1.0)?;
        let p_lo = self.kernel.eval(x, -r)?;
        let q_lo = self.kernel.eval(x, -r - 1.0)?;
        Ok([
            (r + 1.0) * q_hi - (r + 2.0) * p_hi,
            (r + 1.0) * p_hi - r * q_hi,
            r * p_lo - (r - 1.0) * q_lo,
            r * q_lo - (r + 1.0) * p_lo,
        ])
    }

    fn tail_part(c: &[f64; 4], y: f64) -> f64 {
        c[0] * y.max(0.0) + c[1] * (y + 1.0).max(0.0) + c[2] * (-y).max(0.0) + c[3] * (-y - 1.0).max(0.0)
    }

    /// `ψ̃(x, y)`; zero for `|y| > R`.
    pub fn psi_tilde(&self, x: f64, y: f64) -> Result<f64> {
        if y.abs() > self.r {
            return Ok(0.0);
        }
        let c = self.coefficients(x)?;
        Ok(self.kernel.eval(x, y)? - Self::tail_part(&c, y))
    }

    /// `(c₁ + c₃) f(0) + (c₂ + c₄) f(-1) + ∫ ψ̃(x, y) dMA(f)(y)`.
    pub fn eval(&self, f: &PwlFunction, x: f64) -> Result<f64> {
        if x < self.a.lo - BOX_SLACK || x > self.a.hi + BOX_SLACK {
            return Err(Error::OutsideA(x));
        }
        let ma = monge_ampere(f)?;
        let c = self.coefficients(x)?;
        let mut acc = (c[0] + c[2]) * f.eval_in_domain(0.0) + (c[1] + c[3]) * f.eval_in_domain(-1.0);
        for &(y, w) in ma.atoms() {
            if y.abs() > self.r {
                continue;
            }
            acc += w * (self.kernel.eval(x, y)? - Self::tail_part(&c, y));
        }
        Ok(acc)
    }
}

/// The endomorphism defined by a decomposed kernel.
#[derive(Clone, Debug)]
pub struct KernelEndo(pub KernelDecomposition);

impl Endo1D for KernelEndo {
    fn apply_1d(&self, f: &PwlFunction, x: f64) -> Result<ExtReal> {
        Ok(ExtReal::Finite(self.0.eval(f, x)?))
    }
}

/// Sample abscissae for the validation checks: the grid nodes in `[lo, hi]`
/// when the kernel is tabulated, an even sampling otherwise, plus both ends.
fn check_points(nodes: Option<&[f64]>, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = match nodes {
        Some(v) => v.iter().copied().filter(|&t| t > lo && t < hi).collect(),
        None => linspace(lo, hi, 17),
    };
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

fn affine_defect(ts: &[f64], vals: &[f64], t0: f64, v0: f64, t1: f64, v1: f64) -> Option<(usize, f64)> {
    let scale = 1.0 + vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ts.iter()
        .zip(vals)
        .enumerate()
        .map(|(k, (&t, &v))| (k, (v - (v0 + (v1 - v0) * (t - t0) / (t1 - t0))).abs()))
        .find(|&(_, d)| d > AFFINE_TOL * scale)
}

/// Validates tail affineness beyond `±R` and affineness in `x` for `|y| > R`,
/// then returns the decomposition on `A`.
pub fn kernel_decompose(psi: &Kernel1D, a: Interval, r: f64) -> Result<KernelDecomposition> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("R must be > 0, got {r}")));
    }
    if !(a.lo.is_finite() && a.hi.is_finite() && a.lo <= a.hi) {
        return Err(Error::InvalidParameter(format!("A must be a compact interval, got {a}")));
    }
    for (x, y) in [(a.lo, -r - 1.0), (a.hi, r + 1.0)] {
        if !psi.inside(x, y) {
            return Err(Error::OutsideValidity { x, y });
        }
    }
    let grid = psi.grid();
    let xs = check_points(grid.map(|g| g.xs()), a.lo, a.hi);
    let top = if psi.y_box.hi.is_finite() { psi.y_box.hi } else { r + 4.0 };
    let bottom = if psi.y_box.lo.is_finite() { psi.y_box.lo } else { -r - 4.0 };
    let right = check_points(grid.map(|g| g.ys()), r, top);
    let left = check_points(grid.map(|g| g.ys()), bottom, -r);

    for &x in &xs {
        for (tail, y0, y1) in [(&right, r, r + 1.0), (&left, -r, -r - 1.0)] {
            let vals = tail.iter().map(|&y| psi.eval(x, y)).collect::<Result<Vec<_>>>()?;
            let (v0, v1) = (psi.eval(x, y0)?, psi.eval(x, y1)?);
            if let Some((k, defect)) = affine_defect(tail, &vals, y0, v0, y1, v1) {
                return Err(Error::TailNotAffine { x, y: tail[k], defect });
            }
        }
    }
    for &y in right.iter().chain(&left) {
        if y.abs() <= r {
            continue;
        }
        let vals = xs.iter().map(|&x| psi.eval(x, y)).collect::<Result<Vec<_>>>()?;
        if a.lo < a.hi {
            let (v0, v1) = (psi.eval(a.lo, y)?, psi.eval(a.hi, y)?);
            if let Some((k, defect)) = affine_defect(&xs, &vals, a.lo, v0, a.hi, v1) {
                return Err(Error::XSliceNotAffine { x: xs[k], y, defect });
            }
        }
    }
    Ok(KernelDecomposition {
        kernel: psi.clone(),
        a,
        r,
    })
}

/// Smallest `R = r0 2^k` for which `ψ` decomposes on `A` with the tail checks
/// covering `[R, 2^8 R]` (clipped to the validity box). `None` if the box is
/// exhausted first.
pub fn detect_r(psi: &Kernel1D, a: Interval, r0: f64) -> Option<f64> {
    let mut r = r0;
    for _ in 0..40 {
        if r + 1.0 > psi.y_box.hi || -r - 1.0 < psi.y_box.lo {
            return None;
        }
        let window = Kernel1D {
            source: psi.source.clone(),
            x_box: psi.x_box,
            y_box: Interval::new(psi.y_box.lo.max(-256.0 * r), psi.y_box.hi.min(256.0 * r)),
        };
        if kernel_decompose(&window, a, r).is_ok() {
            return Some(r);
        }
        r *= 2.0;
    }
    None
}

/// `ψ(x, y) = Ψ((y - ·)_+)[x]` on the grid `xs × ys`.
pub fn kernel_extract(endo: &dyn Endo1D, xs: &[f64], ys: &[f64], exec: Exec) -> Result<Kernel1D> {
    let hinges: Vec<PwlFunction> = ys.iter().map(|&y| PwlFunction::hinge_left(y)).collect();
    let rows = map_slice(exec, xs, |&x| {
        hinges
            .iter()
            .map(|h| {
                endo.apply_1d(h, x)?
                    .finite()
                    .ok_or_else(|| Error::InfiniteValue(format!("kernel value at x = {x}")))
            })
            .collect::<Result<Vec<f64>>>()
    });
    let values = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(Kernel1D::from_grid(KernelGrid::new(xs.to_vec(), ys.to_vec(), values)?))
}

/// Whether `ψ(x, ·)` passes the midpoint test on `ys` for every `x` in `xs`.
pub fn kernel_is_monotone(psi: &Kernel1D, xs: &[f64], ys: &[f64], tol: f64) -> Result<bool> {
    for &x in xs {
        for &y in ys {
            psi.eval(x, y)?;
        }
    }
    Ok(xs.iter().all(|&x| {
        is_convex_sampled(|y| ExtReal::Finite(psi.eval(x, y).unwrap_or(f64::NAN)), ys, tol)
    }))
}
