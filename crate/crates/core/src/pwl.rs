//! Exact convex piecewise-linear functions on the real line.
//!
//! A [`PwlFunction`] is stored as its values at a strictly increasing list of
//! breakpoints plus one [`Tail`] on each side. A tail is either a finite slope
//! (the function continues linearly to infinity) or [`Tail::Closed`], which
//! truncates the domain at the outermost breakpoint. Outside the domain the
//! function is `+inf`; at a closed endpoint it takes the stored value, so every
//! instance is lower semi-continuous.
//!
//! The operations here (sum, max, scaling, Legendre transform,
//! inf-convolution) are closed on this representation and exact up to float
//! rounding. The Moreau envelope leaves the class and is exposed as an
//! evaluator only.

use thiserror::Error;

use crate::ext::{ExtReal, Interval};
use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PwlError {
    #[error("slope sequence decreases at slope #{index}: {before} > {after}")]
    NonConvex { index: usize, before: f64, after: f64 },
    #[error("malformed piecewise-linear data: {0}")]
    BadShape(String),
    #[error("domains have disjoint interiors")]
    EmptyDomain,
    #[error("negative scale factor {0}")]
    NegativeScale(f64),
    #[error("function has a truncated domain (infinite tail slope)")]
    InfiniteSlope,
}

/// Behaviour beyond the outermost breakpoint on one side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail {
    /// Linear continuation with the given slope.
    Slope(f64),
    /// Domain ends at the outermost breakpoint (slope `-inf` on the left,
    /// `+inf` on the right).
    Closed,
}

impl Tail {
    pub fn slope(self) -> Option<f64> {
        match self {
            Tail::Slope(s) => Some(s),
            Tail::Closed => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PwlFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    left: Tail,
    right: Tail,
}

impl PwlFunction {
    /// Validating constructor.
    ///
    /// Breakpoints must be non-decreasing; entries closer than
    /// [`tol::MERGE_EPS`] are merged keeping the larger value. The slope
    /// sequence (left tail, secants, right tail) must be non-decreasing.
    pub fn new(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        left: Tail,
        right: Tail,
    ) -> Result<PwlFunction, PwlError> {
        if breakpoints.is_empty() {
            return Err(PwlError::BadShape("at least one breakpoint is required".into()));
        }
        if breakpoints.len() != values.len() {
            return Err(PwlError::BadShape(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if let Some(bad) = breakpoints.iter().chain(values.iter()).find(|v| !v.is_finite()) {
            return Err(PwlError::BadShape(format!("non-finite entry {bad}")));
        }
        for tail in [left, right] {
            if let Tail::Slope(s) = tail {
                if !s.is_finite() {
                    return Err(PwlError::BadShape(format!("non-finite tail slope {s}")));
                }
            }
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[1] < w[0]) {
            return Err(PwlError::BadShape(format!(
                "breakpoints not increasing at index {}: {} then {}",
                i + 1,
                breakpoints[i],
                breakpoints[i + 1]
            )));
        }

        let mut bp: Vec<f64> = Vec::with_capacity(breakpoints.len());
        let mut vals: Vec<f64> = Vec::with_capacity(values.len());
        for (b, v) in breakpoints.into_iter().zip(values) {
            match bp.last() {
                Some(&last) if b - last < tol::MERGE_EPS => {
                    let lv = vals.last_mut().unwrap();
                    *lv = lv.max(v);
                }
                _ => {
                    bp.push(b);
                    vals.push(v);
                }
            }
        }

        let f = PwlFunction {
            breakpoints: bp,
            values: vals,
            left,
            right,
        };
        f.check_convex()?;
        Ok(f)
    }

    fn check_convex(&self) -> Result<(), PwlError> {
        let slopes = self.slope_sequence();
        for (i, w) in slopes.windows(2).enumerate() {
            let slack = tol::SLOPE_SLACK * (1.0 + w[0].abs() + w[1].abs());
            if w[1] < w[0] - slack {
                return Err(PwlError::NonConvex {
                    index: i,
                    before: w[0],
                    after: w[1],
                });
            }
        }
        Ok(())
    }

    /// Left tail slope (if any), secant slopes, right tail slope (if any).
    fn slope_sequence(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.breakpoints.len() + 1);
        if let Tail::Slope(l) = self.left {
            s.push(l);
        }
        s.extend(self.segment_slopes());
        if let Tail::Slope(r) = self.right {
            s.push(r);
        }
        s
    }

    /// `x -> a x + b`.
    pub fn affine(a: f64, b: f64) -> PwlFunction {
        PwlFunction {
            breakpoints: vec![0.0],
            values: vec![b],
            left: Tail::Slope(a),
            right: Tail::Slope(a),
        }
    }

    pub fn zero() -> PwlFunction {
        PwlFunction::affine(0.0, 0.0)
    }

    /// `x -> c |x - center|` for `c >= 0`.
    pub fn abs_at(center: f64, c: f64) -> PwlFunction {
        assert!(c >= 0.0);
        PwlFunction {
            breakpoints: vec![center],
            values: vec![0.0],
            left: Tail::Slope(-c),
            right: Tail::Slope(c),
        }
    }

    /// `x -> (y - x)_+`, the hinge used for kernel extraction.
    pub fn hinge_left(y: f64) -> PwlFunction {
        PwlFunction {
            breakpoints: vec![y],
            values: vec![0.0],
            left: Tail::Slope(-1.0),
            right: Tail::Slope(0.0),
        }
    }

    /// `x -> (x - y)_+`.
    pub fn hinge_right(y: f64) -> PwlFunction {
        PwlFunction {
            breakpoints: vec![y],
            values: vec![0.0],
            left: Tail::Slope(0.0),
            right: Tail::Slope(1.0),
        }
    }

    /// Convex indicator of `[lo, hi]` (`lo == hi` gives the indicator of a point).
    pub fn indicator(lo: f64, hi: f64) -> Result<PwlFunction, PwlError> {
        if lo > hi {
            return Err(PwlError::BadShape(format!("empty interval [{lo}, {hi}]")));
        }
        PwlFunction::new(vec![lo, hi], vec![0.0, 0.0], Tail::Closed, Tail::Closed)
    }

    /// Dense interpolant of a convex `g` on `[lo, hi]` with `pieces` equal
    /// pieces, continued linearly with the outermost secant slopes.
    pub fn interpolate<G: Fn(f64) -> f64>(
        g: G,
        lo: f64,
        hi: f64,
        pieces: usize,
    ) -> Result<PwlFunction, PwlError> {
        if pieces == 0 || !(lo < hi) {
            return Err(PwlError::BadShape("interpolation needs lo < hi and pieces >= 1".into()));
        }
        let h = (hi - lo) / pieces as f64;
        let bp: Vec<f64> = (0..=pieces)
            .map(|k| if k == pieces { hi } else { lo + h * k as f64 })
            .collect();
        let vals: Vec<f64> = bp.iter().map(|&x| g(x)).collect();
        let sl = (vals[1] - vals[0]) / (bp[1] - bp[0]);
        let sr = (vals[pieces] - vals[pieces - 1]) / (bp[pieces] - bp[pieces - 1]);
        PwlFunction::new(bp, vals, Tail::Slope(sl), Tail::Slope(sr))
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left_tail(&self) -> Tail {
        self.left
    }

    pub fn right_tail(&self) -> Tail {
        self.right
    }

    /// Secant slopes between consecutive breakpoints.
    pub fn segment_slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(b, v)| (v[1] - v[0]) / (b[1] - b[0]))
            .collect()
    }

    /// Closed domain `[lo, hi]`, possibly unbounded.
    pub fn domain(&self) -> Interval {
        let lo = match self.left {
            Tail::Slope(_) => f64::NEG_INFINITY,
            Tail::Closed => self.breakpoints[0],
        };
        let hi = match self.right {
            Tail::Slope(_) => f64::INFINITY,
            Tail::Closed => *self.breakpoints.last().unwrap(),
        };
        Interval::new(lo, hi)
    }

    /// True when both tails are finite slopes, i.e. the function is finite on ℝ.
    pub fn is_finite_everywhere(&self) -> bool {
        matches!((self.left, self.right), (Tail::Slope(_), Tail::Slope(_)))
    }

    pub fn eval(&self, x: f64) -> ExtReal {
        let dom = self.domain();
        if !dom.contains_closed(x) {
            return ExtReal::PosInf;
        }
        ExtReal::Finite(self.eval_in_domain(x))
    }

    /// Evaluation assuming `x` lies in the domain; linear extrapolation otherwise.
    pub fn eval_in_domain(&self, x: f64) -> f64 {
        let bp = &self.breakpoints;
        let vals = &self.values;
        let last = bp.len() - 1;
        if x <= bp[0] {
            return match self.left {
                Tail::Slope(s) => vals[0] + s * (x - bp[0]),
                Tail::Closed => vals[0],
            };
        }
        if x >= bp[last] {
            return match self.right {
                Tail::Slope(s) => vals[last] + s * (x - bp[last]),
                Tail::Closed => vals[last],
            };
        }
        let i = bp.partition_point(|&b| b <= x) - 1;
        let t = (x - bp[i]) / (bp[i + 1] - bp[i]);
        vals[i] + t * (vals[i + 1] - vals[i])
    }

    /// Right derivative at `x` (`+inf` at or beyond a closed right end,
    /// `-inf` left of a closed left end).
    pub fn right_derivative(&self, x: f64) -> f64 {
        let dom = self.domain();
        if x < dom.lo {
            return f64::NEG_INFINITY;
        }
        if x >= dom.hi {
            return f64::INFINITY;
        }
        let bp = &self.breakpoints;
        let last = bp.len() - 1;
        if x < bp[0] {
            return self.left.slope().unwrap();
        }
        if x >= bp[last] {
            return self.right.slope().unwrap();
        }
        let i = bp.partition_point(|&b| b <= x) - 1;
        (self.values[i + 1] - self.values[i]) / (bp[i + 1] - bp[i])
    }

    /// Left derivative at `x`, mirroring [`PwlFunction::right_derivative`].
    pub fn left_derivative(&self, x: f64) -> f64 {
        let dom = self.domain();
        if x > dom.hi {
            return f64::INFINITY;
        }
        if x <= dom.lo {
            return f64::NEG_INFINITY;
        }
        let bp = &self.breakpoints;
        let last = bp.len() - 1;
        if x <= bp[0] {
            return self.left.slope().unwrap();
        }
        if x > bp[last] {
            return self.right.slope().unwrap();
        }
        let i = bp.partition_point(|&b| b < x) - 1;
        (self.values[i + 1] - self.values[i]) / (bp[i + 1] - bp[i])
    }

    /// Exact integral over `[a, b]`; both endpoints must lie in the domain.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut xs = vec![lo];
        xs.extend(self.breakpoints.iter().copied().filter(|&p| p > lo && p < hi));
        xs.push(hi);
        let total: f64 = xs
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (self.eval_in_domain(w[0]) + self.eval_in_domain(w[1])))
            .sum();
        sign * total
    }

    /// Merged breakpoints of `self` and `other` that fall in `dom`.
    fn merged_points(&self, other: &PwlFunction, dom: Interval) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .copied()
            .filter(|&p| dom.contains_closed(p))
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }

    fn common_domain(&self, other: &PwlFunction) -> Result<Interval, PwlError> {
        let dom = self.domain().intersect(&other.domain());
        if dom.is_empty() {
            return Err(PwlError::EmptyDomain);
        }
        Ok(dom)
    }

    /// Pointwise sum; the domain is the intersection of the two domains.
    pub fn add(&self, other: &PwlFunction) -> Result<PwlFunction, PwlError> {
        let dom = self.common_domain(other)?;
        let pts = self.merged_points(other, dom);
        let vals = pts
            .iter()
            .map(|&x| self.eval_in_domain(x) + other.eval_in_domain(x))
            .collect();
        let left = match (self.left, other.left) {
            (Tail::Slope(a), Tail::Slope(b)) if dom.lo == f64::NEG_INFINITY => Tail::Slope(a + b),
            _ => Tail::Closed,
        };
        let right = match (self.right, other.right) {
            (Tail::Slope(a), Tail::Slope(b)) if dom.hi == f64::INFINITY => Tail::Slope(a + b),
            _ => Tail::Closed,
        };
        PwlFunction::new(pts, vals, left, right)
    }

    /// `lambda * self` for `lambda >= 0`; `0 * f` is the indicator of `dom f`.
    pub fn scale(&self, lambda: f64) -> Result<PwlFunction, PwlError> {
        if lambda < 0.0 || lambda.is_nan() {
            return Err(PwlError::NegativeScale(lambda));
        }
        let scale_tail = |t: Tail| match t {
            Tail::Slope(s) => Tail::Slope(lambda * s),
            Tail::Closed => Tail::Closed,
        };
        Ok(PwlFunction {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| lambda * v).collect(),
            left: scale_tail(self.left),
            right: scale_tail(self.right),
        })
    }

    /// Pointwise maximum, with breakpoints added where the two graphs cross.
    pub fn max(&self, other: &PwlFunction) -> Result<PwlFunction, PwlError> {
        let dom = self.common_domain(other)?;
        let base = self.merged_points(other, dom);
        let diff = |x: f64| self.eval_in_domain(x) - other.eval_in_domain(x);

        let mut pts = Vec::with_capacity(2 * base.len() + 2);
        let first = base[0];
        let last = *base.last().unwrap();
        if dom.lo == f64::NEG_INFINITY {
            let ds = self.left.slope().unwrap() - other.left.slope().unwrap();
            let d0 = diff(first);
            if ds != 0.0 && d0 / ds > 0.0 {
                pts.push(first - d0 / ds);
            }
        }
        for w in base.windows(2) {
            pts.push(w[0]);
            let (d0, d1) = (diff(w[0]), diff(w[1]));
            if d0 * d1 < 0.0 {
                pts.push(w[0] + (w[1] - w[0]) * d0 / (d0 - d1));
            }
        }
        pts.push(last);
        if dom.hi == f64::INFINITY {
            let ds = self.right.slope().unwrap() - other.right.slope().unwrap();
            let d1 = diff(last);
            if ds != 0.0 && d1 / ds < 0.0 {
                pts.push(last - d1 / ds);
            }
        }

        let vals = pts
            .iter()
            .map(|&x| self.eval_in_domain(x).max(other.eval_in_domain(x)))
            .collect();
        let left = if dom.lo == f64::NEG_INFINITY {
            let probe = pts[0] - 1.0;
            if diff(probe) >= 0.0 {
                self.left
            } else {
                other.left
            }
        } else {
            Tail::Closed
        };
        let right = if dom.hi == f64::INFINITY {
            let probe = *pts.last().unwrap() + 1.0;
            if diff(probe) >= 0.0 {
                self.right
            } else {
                other.right
            }
        } else {
            Tail::Closed
        };
        PwlFunction::new(pts, vals, left, right)
    }

    /// `self + plus - minus` for finite `plus`, `minus`; fails with
    /// [`PwlError::NonConvex`] when the result is not convex.
    pub fn add_difference(
        &self,
        plus: &PwlFunction,
        minus: &PwlFunction,
    ) -> Result<PwlFunction, PwlError> {
        if !plus.is_finite_everywhere() || !minus.is_finite_everywhere() {
            return Err(PwlError::InfiniteSlope);
        }
        let dom = self.domain();
        let mut pts: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(plus.breakpoints.iter())
            .chain(minus.breakpoints.iter())
            .copied()
            .filter(|&p| dom.contains_closed(p))
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        if pts.is_empty() {
            pts.push(self.breakpoints[0]);
        }
        let vals = pts
            .iter()
            .map(|&x| {
                self.eval_in_domain(x) + plus.eval_in_domain(x) - minus.eval_in_domain(x)
            })
            .collect();
        let tail = |t: Tail, p: Tail, m: Tail| match t {
            Tail::Slope(s) => Tail::Slope(s + p.slope().unwrap() - m.slope().unwrap()),
            Tail::Closed => Tail::Closed,
        };
        PwlFunction::new(
            pts,
            vals,
            tail(self.left, plus.left, minus.left),
            tail(self.right, plus.right, minus.right),
        )
    }

    /// Legendre–Fenchel conjugate `y -> sup_x (x y - f(x))`.
    ///
    /// Breakpoints of the result are the slopes of `self` and its slopes are
    /// the breakpoints of `self`; the result's domain is the closed slope range.
    pub fn legendre(&self) -> PwlFunction {
        let bp = &self.breakpoints;
        let vals = &self.values;
        let last = bp.len() - 1;
        let mut ybp = Vec::with_capacity(bp.len() + 1);
        let mut yv = Vec::with_capacity(bp.len() + 1);
        if let Tail::Slope(s) = self.left {
            ybp.push(s);
            yv.push(s * bp[0] - vals[0]);
        }
        for (i, s) in self.segment_slopes().into_iter().enumerate() {
            ybp.push(s);
            yv.push(s * bp[i] - vals[i]);
        }
        if let Tail::Slope(s) = self.right {
            ybp.push(s);
            yv.push(s * bp[last] - vals[last]);
        }
        let left = match self.left {
            Tail::Slope(_) => Tail::Closed,
            Tail::Closed => Tail::Slope(bp[0]),
        };
        let right = match self.right {
            Tail::Slope(_) => Tail::Closed,
            Tail::Closed => Tail::Slope(bp[last]),
        };
        if ybp.is_empty() {
            // Single point domain: the conjugate is the affine y -> b0 y - v0.
            return PwlFunction::affine(bp[0], -vals[0]);
        }
        // Secant slopes can undershoot a tail slope by rounding.
        for i in 1..ybp.len() {
            ybp[i] = ybp[i].max(ybp[i - 1]);
        }
        PwlFunction::new(ybp, yv, left, right)
            .expect("conjugate of a convex piecewise-linear function is convex")
    }

    /// Infimal convolution `x -> inf_{y} f(y) + g(x - y)`, computed through
    /// the conjugates.
    pub fn inf_convolve(&self, other: &PwlFunction) -> Result<PwlFunction, PwlError> {
        Ok(self.legendre().add(&other.legendre())?.legendre())
    }

    /// Moreau envelope with parameter `t > 0`.
    pub fn moreau_envelope(&self, t: f64) -> MoreauEnvelope {
        assert!(t > 0.0, "Moreau parameter must be positive");
        MoreauEnvelope { f: self.clone(), t }
    }
}

/// `x -> inf_y f(y) + (x - y)^2 / (2t)`, evaluated exactly per query by
/// minimising the quadratic over each linear piece of `f`.
#[derive(Clone, Debug)]
pub struct MoreauEnvelope {
    f: PwlFunction,
    t: f64,
}

impl MoreauEnvelope {
    pub fn parameter(&self) -> f64 {
        self.t
    }

    pub fn eval(&self, x: f64) -> f64 {
        let f = &self.f;
        let t = self.t;
        let bp = &f.breakpoints;
        let vals = &f.values;
        let last = bp.len() - 1;
        // Piece on [lo, hi] given by anchor (p, v) and slope s.
        let piece = |lo: f64, hi: f64, p: f64, v: f64, s: f64| {
            let y = (x - t * s).clamp(lo, hi);
            v + s * (y - p) + (x - y) * (x - y) / (2.0 * t)
        };
        let mut best = f64::INFINITY;
        if let Tail::Slope(s) = f.left {
            best = best.min(piece(f64::NEG_INFINITY, bp[0], bp[0], vals[0], s));
        }
        if let Tail::Slope(s) = f.right {
            best = best.min(piece(bp[last], f64::INFINITY, bp[last], vals[last], s));
        }
        for (i, s) in f.segment_slopes().into_iter().enumerate() {
            best = best.min(piece(bp[i], bp[i + 1], bp[i], vals[i], s));
        }
        if last == 0 {
            best = best.min(vals[0] + (x - bp[0]) * (x - bp[0]) / (2.0 * t));
        }
        best
    }

    /// Dense piecewise-linear interpolant on `[lo, hi]`.
    pub fn to_pwl(&self, lo: f64, hi: f64, pieces: usize) -> Result<PwlFunction, PwlError> {
        PwlFunction::interpolate(|x| self.eval(x), lo, hi, pieces)
    }
}
