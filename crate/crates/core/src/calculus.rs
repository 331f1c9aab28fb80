//! One-dimensional calculus on scalar and operator-valued data: quadrature,
//! derivatives of piecewise-C¹ paths, total variation, arc length and the
//! change-of-variables check `∫_s^t f'(y∘f) = ∫_{f(s)}^{f(t)} y`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operators::{Operator, Space, Vector};
use crate::quadrature::{integrate_scalar, integrate_vec, QuadOptions};

pub use crate::quadrature::DEFAULT_TOL;

/// Relative change between dyadic refinements at which the partition-sum
/// total variation is considered stable.
pub const TV_REFINEMENT_RTOL: f64 = 1e-4;
const TV_MAX_LEVEL: u32 = 20;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type OperatorFn = Arc<dyn Fn(f64) -> Operator + Send + Sync>;
pub type OperatorFn2 = Arc<dyn Fn(f64, f64) -> Operator + Send + Sync>;

/// Step for central differences at `t`.
pub fn fd_step(t: f64) -> f64 {
    1e-6 * t.abs().max(1.0)
}

/// Closed interval with possibly infinite ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    /// Panics on `lo > hi`; meant for literals.
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval::new(lo, hi).expect("lo must not exceed hi")
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub(crate) fn require_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidInterval { lo: self.lo, hi: self.hi })
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Strictly increasing `a_0 < ... < a_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    points: Vec<f64>,
}

impl Partition {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Construction("a partition needs at least one point".into()));
        }
        if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Construction("partition points must be finite and strictly increasing".into()));
        }
        Ok(Partition { points })
    }

    /// `n` equal segments of `interval`.
    pub fn uniform(interval: Interval, n: usize) -> Result<Self> {
        interval.require_finite()?;
        if n == 0 {
            return Partition::new(vec![interval.lo()]);
        }
        let h = interval.length() / n as f64;
        let mut points: Vec<f64> = (0..n).map(|i| interval.lo() + i as f64 * h).collect();
        points.push(interval.hi());
        Partition::new(points)
    }

    /// Uniform partition whose mesh does not exceed `mesh`.
    pub fn with_max_mesh(interval: Interval, mesh: f64) -> Result<Self> {
        let n = (interval.length() / mesh).ceil().max(1.0) as usize;
        Partition::uniform(interval, n)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    pub fn mesh(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index `i` with `t ∈ [a_i, a_{i+1})`; the last point belongs to the last
    /// segment. Points outside are clamped to the first/last segment.
    pub fn segment_of(&self, t: f64) -> usize {
        let n = self.segments();
        if n == 0 {
            return 0;
        }
        let idx = self.points.partition_point(|&p| p <= t);
        idx.saturating_sub(1).min(n - 1)
    }
}

/// Scalar path `f: I -> R`, piecewise C¹ between its breakpoints.
#[derive(Clone)]
pub struct ScalarPath {
    eval: ScalarFn,
    deriv: Option<ScalarFn>,
    breakpoints: Vec<f64>,
    domain: Interval,
}

impl fmt::Debug for ScalarPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarPath")
            .field("analytic_derivative", &self.deriv.is_some())
            .field("breakpoints", &self.breakpoints)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ScalarPath {
    pub fn new(domain: Interval, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarPath { eval: Arc::new(eval), deriv: None, breakpoints: Vec::new(), domain }
    }

    pub fn with_derivative(mut self, deriv: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.deriv = Some(Arc::new(deriv));
        self
    }

    pub fn with_breakpoints(mut self, mut breakpoints: Vec<f64>) -> Self {
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        self.breakpoints = breakpoints;
        self
    }

    pub fn constant(domain: Interval, c: f64) -> Self {
        ScalarPath::new(domain, move |_| c).with_derivative(|_| 0.0)
    }

    pub fn identity(domain: Interval) -> Self {
        ScalarPath::new(domain, |t| t).with_derivative(|_| 1.0)
    }

    /// Straight line from `(a, p)` to `(b, q)`, parametrised over `[a, b]`.
    pub fn linear(a: f64, b: f64, p: f64, q: f64) -> Self {
        let slope = if b > a { (q - p) / (b - a) } else { 0.0 };
        ScalarPath::new(Interval::closed(a.min(b), a.max(b)), move |t| p + slope * (t - a))
            .with_derivative(move |_| slope)
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn has_derivative(&self) -> bool {
        self.deriv.is_some()
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    /// `f'(t)`, taken to be `0` at declared breakpoints. Falls back to finite
    /// differences when no analytic derivative was supplied.
    pub fn derivative(&self, t: f64) -> f64 {
        if self.breakpoints.binary_search_by(|b| b.total_cmp(&t)).is_ok() {
            return 0.0;
        }
        match &self.deriv {
            Some(d) => d(t),
            None => self.fd_derivative(t),
        }
    }

    pub(crate) fn fd_derivative(&self, t: f64) -> f64 {
        let h = fd_step(t);
        let blocked = |x: f64, y: f64| {
            let (l, r) = (x.min(y), x.max(y));
            self.breakpoints.iter().any(|&b| b > l && b < r)
                || (self.domain.lo() > l && self.domain.lo() < r)
                || (self.domain.hi() > l && self.domain.hi() < r)
        };
        let f = |x| (self.eval)(x);
        if !blocked(t - h, t + h) && self.domain.contains(t - h) && self.domain.contains(t + h) {
            (f(t + h) - f(t - h)) / (2.0 * h)
        } else if !blocked(t, t + 2.0 * h) && self.domain.contains(t + 2.0 * h) {
            (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h)
        } else {
            (3.0 * f(t) - 4.0 * f(t - h) + f(t - 2.0 * h)) / (2.0 * h)
        }
    }

    /// Largest gap between the supplied derivative and a central difference
    /// at the given points. `None` when no derivative was supplied.
    pub fn derivative_consistency(&self, points: &[f64]) -> Option<f64> {
        let d = self.deriv.as_ref()?;
        Some(points.iter().fold(0.0f64, |m, &t| m.max((d(t) - self.fd_derivative(t)).abs())))
    }

    /// Breakpoints inside `(lo, hi)`.
    pub fn breakpoints_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let (l, h) = (lo.min(hi), lo.max(hi));
        self.breakpoints.iter().copied().filter(|&b| b > l && b < h).collect()
    }
}

/// Operator-valued path `t ↦ G(t)` with an optional derivative.
#[derive(Clone)]
pub struct OperatorPath {
    space: Space,
    eval: OperatorFn,
    deriv: Option<OperatorFn>,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for OperatorPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorPath")
            .field("space", &self.space)
            .field("analytic_derivative", &self.deriv.is_some())
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl OperatorPath {
    pub fn new(space: Space, eval: impl Fn(f64) -> Operator + Send + Sync + 'static) -> Self {
        OperatorPath { space, eval: Arc::new(eval), deriv: None, breakpoints: Vec::new() }
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> Operator + Send + Sync + 'static) -> Self {
        self.deriv = Some(Arc::new(d));
        self
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn value(&self, t: f64) -> Operator {
        (self.eval)(t)
    }

    pub fn has_derivative(&self) -> bool {
        self.deriv.is_some()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `G'(t)`; analytic if available, central difference otherwise.
    pub fn derivative(&self, t: f64) -> Operator {
        match &self.deriv {
            Some(d) => d(t),
            None => {
                let h = fd_step(t);
                (&(self.eval)(t + h) - &(self.eval)(t - h)).scale(0.5 / h)
            }
        }
    }
}

/// Binary operator field `(t, u) ↦ G̃(t, u)`.
#[derive(Clone)]
pub struct OperatorField {
    space: Space,
    eval: OperatorFn2,
    partial_t: Option<OperatorFn2>,
    t_breakpoints: Vec<f64>,
    u_independent: bool,
}

impl fmt::Debug for OperatorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorField")
            .field("space", &self.space)
            .field("analytic_partial_t", &self.partial_t.is_some())
            .field("t_breakpoints", &self.t_breakpoints)
            .field("u_independent", &self.u_independent)
            .finish()
    }
}

impl OperatorField {
    pub fn new(space: Space, eval: impl Fn(f64, f64) -> Operator + Send + Sync + 'static) -> Self {
        OperatorField {
            space,
            eval: Arc::new(eval),
            partial_t: None,
            t_breakpoints: Vec::new(),
            u_independent: false,
        }
    }

    /// A field that ignores `u`, i.e. `G̃(t, u) = g(t)`.
    pub fn time_only(space: Space, g: impl Fn(f64) -> Operator + Send + Sync + 'static) -> Self {
        let mut field = OperatorField::new(space, move |t, _| g(t));
        field.u_independent = true;
        field
    }

    /// A field that ignores `t`.
    pub fn state_only(space: Space, g: impl Fn(f64) -> Operator + Send + Sync + 'static) -> Self {
        let zero = Operator::zeros(space);
        OperatorField::new(space, move |_, u| g(u)).with_partial_t(move |_, _| zero.clone())
    }

    pub fn constant(op: Operator) -> Self {
        let space = op.space();
        let zero = Operator::zeros(space);
        let mut field = OperatorField::new(space, move |_, _| op.clone()).with_partial_t(move |_, _| zero.clone());
        field.u_independent = true;
        field
    }

    pub fn with_partial_t(mut self, d: impl Fn(f64, f64) -> Operator + Send + Sync + 'static) -> Self {
        self.partial_t = Some(Arc::new(d));
        self
    }

    pub fn with_t_breakpoints(mut self, mut breakpoints: Vec<f64>) -> Self {
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        self.t_breakpoints = breakpoints;
        self
    }

    /// Declares that the field does not depend on `u`.
    pub fn mark_u_independent(mut self) -> Self {
        self.u_independent = true;
        self
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn is_u_independent(&self) -> bool {
        self.u_independent
    }

    pub fn has_partial_t(&self) -> bool {
        self.partial_t.is_some()
    }

    pub fn t_breakpoints(&self) -> &[f64] {
        &self.t_breakpoints
    }

    pub fn value(&self, t: f64, u: f64) -> Operator {
        (self.eval)(t, u)
    }

    /// `D₁G̃(t, u)`; central difference with step `1e-6·max(1,|t|)` if no
    /// analytic partial was supplied, zero at declared breakpoints.
    pub fn partial_t(&self, t: f64, u: f64) -> Operator {
        if self.t_breakpoints.binary_search_by(|b| b.total_cmp(&t)).is_ok() {
            return Operator::zeros(self.space);
        }
        match &self.partial_t {
            Some(d) => d(t, u),
            None => {
                let h = fd_step(t);
                (&(self.eval)(t + h, u) - &(self.eval)(t - h, u)).scale(0.5 / h)
            }
        }
    }

    /// The path `t ↦ G̃(t, u0)` for a u-independent field.
    pub fn as_time_path(&self, u0: f64) -> OperatorPath {
        let eval = Arc::clone(&self.eval);
        let mut path = OperatorPath::new(self.space, move |t| eval(t, u0))
            .with_breakpoints(self.t_breakpoints.clone());
        if let Some(d) = &self.partial_t {
            let d = Arc::clone(d);
            path = path.with_derivative(move |t| d(t, u0));
        }
        path
    }
}

/// Adaptive quadrature of a scalar function over a finite interval,
/// pre-split at `breakpoints`.
pub fn integrate(g: impl Fn(f64) -> f64, k: Interval, breakpoints: &[f64], tol: f64) -> Result<f64> {
    k.require_finite()?;
    integrate_scalar(g, k.lo(), k.hi(), breakpoints, QuadOptions::with_tol(tol))
}

/// `‖G(t)‖_{L¹(J)} = ∫_J ‖G̃(t, u)‖ du`.
pub fn l1_norm_in_u(g: &OperatorField, t: f64, j: Interval, tol: f64) -> Result<f64> {
    j.require_finite()?;
    if g.is_u_independent() {
        return Ok(j.length() * g.value(t, j.midpoint()).norm());
    }
    integrate(|u| g.value(t, u).norm(), j, &[], tol)
}

/// `∫_J ‖G̃(t₁, u) − G̃(t₀, u)‖ du`, the L¹ distance between two frozen slices.
pub fn l1_distance_in_u(g: &OperatorField, t0: f64, t1: f64, j: Interval, tol: f64) -> Result<f64> {
    j.require_finite()?;
    if g.is_u_independent() {
        let u = j.midpoint();
        return Ok(j.length() * (&g.value(t1, u) - &g.value(t0, u)).norm());
    }
    integrate(|u| (&g.value(t1, u) - &g.value(t0, u)).norm(), j, &[], tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvMode {
    /// `∫ ‖G'‖` by quadrature; exact up to the quadrature tolerance.
    Derivative,
    /// Partition sums on nested dyadic partitions; a lower estimate.
    Refinement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvEstimate {
    pub value: f64,
    pub mode: TvMode,
    pub converged: bool,
    /// Iterate preceding `value` in refinement mode.
    pub previous: Option<f64>,
    /// Number of partition segments at the final level.
    pub segments: usize,
}

/// Total variation of an operator path over `i`.
///
/// With a derivative available the variation is `∫_I ‖G'‖`; otherwise it
/// falls back to [`total_variation_refine`].
pub fn total_variation_path(g: &OperatorPath, i: Interval, tol: f64) -> Result<TvEstimate> {
    i.require_finite()?;
    if g.has_derivative() {
        let value = integrate(|t| g.derivative(t).norm(), i, g.breakpoints(), tol)?;
        Ok(TvEstimate { value, mode: TvMode::Derivative, converged: true, previous: None, segments: 0 })
    } else {
        total_variation_refine(|t| g.value(t), i, g.breakpoints())
    }
}

/// `Σ ‖G(a_{k+1}) − G(a_k)‖` on a partition.
pub fn partition_sum(g: impl Fn(f64) -> Operator, points: &[f64]) -> f64 {
    let mut prev = match points.first() {
        Some(&p) => g(p),
        None => return 0.0,
    };
    let mut sum = 0.0;
    for &p in &points[1..] {
        let cur = g(p);
        sum += (&cur - &prev).norm();
        prev = cur;
    }
    sum
}

/// Uniform partition with `2^level` segments plus the breakpoints.
pub fn dyadic_points(i: Interval, level: u32, breakpoints: &[f64]) -> Vec<f64> {
    let n = 1usize << level;
    let h = i.length() / n as f64;
    let mut pts: Vec<f64> = (0..n).map(|k| i.lo() + k as f64 * h).collect();
    pts.push(i.hi());
    pts.extend(breakpoints.iter().copied().filter(|&b| b > i.lo() && b < i.hi()));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Partition-sum total variation on nested dyadic partitions, refined until
/// the relative change drops below [`TV_REFINEMENT_RTOL`].
pub fn total_variation_refine(g: impl Fn(f64) -> Operator, i: Interval, breakpoints: &[f64]) -> Result<TvEstimate> {
    i.require_finite()?;
    let mut previous = partition_sum(&g, &dyadic_points(i, 4, breakpoints));
    for level in 5..=TV_MAX_LEVEL {
        let pts = dyadic_points(i, level, breakpoints);
        let value = partition_sum(&g, &pts);
        let change = (value - previous).abs();
        if change <= TV_REFINEMENT_RTOL * value.abs() || value == 0.0 {
            return Ok(TvEstimate {
                value,
                mode: TvMode::Refinement,
                converged: true,
                previous: Some(previous),
                segments: pts.len() - 1,
            });
        }
        if level == TV_MAX_LEVEL {
            return Ok(TvEstimate {
                value,
                mode: TvMode::Refinement,
                converged: false,
                previous: Some(previous),
                segments: pts.len() - 1,
            });
        }
        previous = value;
    }
    unreachable!("loop returns at the last level")
}

/// `∫_{I×J} ‖D₁G̃‖ dλ²`, an upper bound for the variation of `t ↦ G̃(t, ·)`
/// in `L¹(J)`, by iterated adaptive quadrature.
pub fn tv_l1_upper_bound(g: &OperatorField, i: Interval, j: Interval, tol: f64) -> Result<f64> {
    i.require_finite()?;
    j.require_finite()?;
    if i.length() == 0.0 || j.length() == 0.0 {
        return Ok(0.0);
    }
    let inner_tol = 0.5 * tol / i.length();
    let inner_error: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
    let outer = integrate(
        |t| {
            let r = if g.is_u_independent() {
                Ok(j.length() * g.partial_t(t, j.midpoint()).norm())
            } else {
                integrate(|u| g.partial_t(t, u).norm(), j, &[], inner_tol)
            };
            match r {
                Ok(v) => v,
                Err(e) => {
                    inner_error.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        },
        i,
        g.t_breakpoints(),
        0.5 * tol,
    );
    if let Some(e) = inner_error.into_inner() {
        return Err(e);
    }
    outer
}

/// Partition-sum estimate of the `L¹(J)` variation on `n_segments` uniform
/// segments (plus the field's breakpoints). A lower bound for the true value.
pub fn tv_l1_partition_sum(g: &OperatorField, i: Interval, j: Interval, n_segments: usize, tol: f64) -> Result<f64> {
    i.require_finite()?;
    let mut pts: Vec<f64> = Partition::uniform(i, n_segments)?.points().to_vec();
    pts.extend(g.t_breakpoints().iter().copied().filter(|&b| b > i.lo() && b < i.hi()));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut sum = 0.0;
    for w in pts.windows(2) {
        sum += l1_distance_in_u(g, w[0], w[1], j, tol)?;
    }
    Ok(sum)
}

/// Arc length `∫_a^b |γ'|` of a scalar path.
pub fn arc_length(gamma: &ScalarPath, a: f64, b: f64, tol: f64) -> Result<f64> {
    let k = Interval::new(a.min(b), a.max(b))?;
    integrate(|t| gamma.derivative(t).abs(), k, &gamma.breakpoints_in(a, b), tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovCheck {
    pub lhs: Vector,
    pub rhs: Vector,
    pub defect: f64,
    /// `defect ≤ 10·tol`
    pub passed: bool,
}

/// Evaluates both sides of `∫_s^t f'(τ) y(f(τ)) dτ = ∫_{f(s)}^{f(t)} y(u) du`.
pub fn cov_check(
    space: Space,
    y: impl Fn(f64) -> Vector,
    y_breakpoints: &[f64],
    f: &ScalarPath,
    s: f64,
    t: f64,
    tol: f64,
) -> Result<CovCheck> {
    let r = space.dim();
    let opts = QuadOptions::with_tol(tol);
    // breakpoints of the composite: those of f and the preimages of y's are
    // not known in general, so only f's are declared
    let lhs = integrate_vec(
        |tau, buf: &mut [f64]| {
            let d = f.derivative(tau);
            if d == 0.0 {
                buf.iter_mut().for_each(|b| *b = 0.0);
                return;
            }
            let v = y(f.value(tau));
            for (b, x) in buf.iter_mut().zip(v.entries()) {
                *b = d * x;
            }
        },
        r,
        s,
        t,
        &f.breakpoints_in(s, t),
        opts,
    )?;
    let (fs, ft) = (f.value(s), f.value(t));
    let rhs = integrate_vec(
        |u, buf: &mut [f64]| buf.copy_from_slice(y(u).entries()),
        r,
        fs,
        ft,
        y_breakpoints,
        opts,
    )?;
    let lhs = Vector::new(space, lhs.value)?;
    let rhs = Vector::new(space, rhs.value)?;
    let defect = lhs.distance(&rhs);
    Ok(CovCheck { lhs, rhs, defect, passed: defect <= 10.0 * tol })
}
