//! Evolution operators `X(t, s)` of `x' = A(t)x`.
//!
//! The operator equation `Y' = A(t)Y` is integrated column-wise as an
//! `r²`-dimensional system with [`dopri`]'s embedded 5(4) pair. Backward
//! propagation reverses time instead of inverting.

pub mod dopri;

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::calculus::{integrate, Interval, OperatorFn};
use crate::error::{Error, Result};
use crate::operators::{matmul, Operator, Space, Vector};

pub use dopri::{SolverOptions, StepStats, DEFAULT_SOLVER_TOL};

/// Coefficient `A: I -> End(E)`, piecewise continuous between breakpoints.
#[derive(Clone)]
pub struct CoefficientPath {
    space: Space,
    domain: Interval,
    eval: OperatorFn,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for CoefficientPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientPath")
            .field("space", &self.space)
            .field("domain", &self.domain)
            .field("breakpoints", &self.breakpoints.len())
            .finish()
    }
}

impl CoefficientPath {
    pub fn new(space: Space, domain: Interval, eval: impl Fn(f64) -> Operator + Send + Sync + 'static) -> Self {
        CoefficientPath { space, domain, eval: Arc::new(eval), breakpoints: Vec::new() }
    }

    pub fn with_breakpoints(mut self, mut breakpoints: Vec<f64>) -> Self {
        breakpoints.retain(|b| b.is_finite());
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        self.breakpoints = breakpoints;
        self
    }

    pub fn zero(space: Space, domain: Interval) -> Self {
        let z = Operator::zeros(space);
        CoefficientPath::new(space, domain, move |_| z.clone())
    }

    pub fn constant(op: Operator, domain: Interval) -> Self {
        CoefficientPath::new(op.space(), domain, move |_| op.clone())
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn value(&self, t: f64) -> Operator {
        (self.eval)(t)
    }

    /// Same coefficient measured in a different norm.
    pub fn in_space(&self, space: Space) -> Self {
        assert_eq!(space.dim(), self.space.dim());
        let eval = Arc::clone(&self.eval);
        CoefficientPath {
            space,
            domain: self.domain,
            eval: Arc::new(move |t| eval(t).in_space(space)),
            breakpoints: self.breakpoints.clone(),
        }
    }

    /// `A₂ − A₁` on the common domain.
    pub fn difference(&self, other: &CoefficientPath) -> CoefficientPath {
        let (a, b) = (Arc::clone(&self.eval), Arc::clone(&other.eval));
        let lo = self.domain.lo().max(other.domain.lo());
        let hi = self.domain.hi().min(other.domain.hi());
        let mut bps = self.breakpoints.clone();
        bps.extend_from_slice(&other.breakpoints);
        CoefficientPath::new(self.space, Interval::closed(lo, hi.max(lo)), move |t| &a(t) - &b(t)).with_breakpoints(bps)
    }

    /// `∫_s^t ‖A‖ dλ` (oriented).
    pub fn norm_integral(&self, s: f64, t: f64, tol: f64) -> Result<f64> {
        let k = Interval::new(s.min(t), s.max(t))?;
        let v = integrate(|x| self.value(x).norm(), k, &self.breakpoints, tol)?;
        Ok(if t >= s { v } else { -v })
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if self.domain.contains(t) {
            Ok(())
        } else {
            Err(Error::DomainViolation { t, value: t, lo: self.domain.lo(), hi: self.domain.hi() })
        }
    }

    fn operator_rhs(&self) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
        let r = self.space.dim();
        move |t, y, dy| {
            let a = (self.eval)(t);
            matmul(r, a.entries(), y, dy);
        }
    }
}

/// `X(t, s)` with the default tolerance.
pub fn evolve(a: &CoefficientPath, s: f64, t: f64) -> Result<Operator> {
    evolve_with(a, s, t, &SolverOptions::default()).map(|(x, _)| x)
}

pub fn evolve_with(a: &CoefficientPath, s: f64, t: f64, opts: &SolverOptions) -> Result<(Operator, StepStats)> {
    a.check_time(s)?;
    a.check_time(t)?;
    let mut y = Operator::identity(a.space).into_entries();
    let mut stats = StepStats::default();
    if s != t {
        let mut hint = None;
        let mut rhs = a.operator_rhs();
        dopri::integrate(&mut rhs, &mut y, s, t, &a.breakpoints, opts, &mut hint, &mut stats)?;
    }
    Ok((Operator::new(a.space, y)?, stats))
}

/// `X(t, s)·v` by integrating the vector equation directly.
pub fn propagate_vector(a: &CoefficientPath, s: f64, t: f64, v: &Vector) -> Result<Vector> {
    propagate_vector_with(a, s, t, v, &SolverOptions::default())
}

pub fn propagate_vector_with(a: &CoefficientPath, s: f64, t: f64, v: &Vector, opts: &SolverOptions) -> Result<Vector> {
    a.check_time(s)?;
    a.check_time(t)?;
    let r = a.space.dim();
    let mut y = v.entries().to_vec();
    let mut stats = StepStats::default();
    let mut hint = None;
    let mut rhs = |tau: f64, y: &[f64], dy: &mut [f64]| {
        let m = a.value(tau);
        let e = m.entries();
        for i in 0..r {
            dy[i] = (0..r).map(|j| e[i * r + j] * y[j]).sum();
        }
    };
    dopri::integrate(&mut rhs, &mut y, s, t, &a.breakpoints, opts, &mut hint, &mut stats)?;
    Vector::new(a.space, y)
}

/// `X(t,s)x_s + ∫_s^t X(t,τ)g(τ) dτ`, via the inhomogeneous equation
/// `x' = A x + g`.
pub fn variation_of_parameters(
    a: &CoefficientPath,
    g: impl Fn(f64) -> Vector,
    g_breakpoints: &[f64],
    s: f64,
    t: f64,
    x_s: &Vector,
    opts: &SolverOptions,
) -> Result<Vector> {
    a.check_time(s)?;
    a.check_time(t)?;
    let r = a.space.dim();
    let mut y = x_s.entries().to_vec();
    let mut bps = a.breakpoints.clone();
    bps.extend_from_slice(g_breakpoints);
    let mut stats = StepStats::default();
    let mut hint = None;
    let mut rhs = |tau: f64, y: &[f64], dy: &mut [f64]| {
        let m = a.value(tau);
        let e = m.entries();
        let gv = g(tau);
        for i in 0..r {
            dy[i] = (0..r).map(|j| e[i * r + j] * y[j]).sum::<f64>() + gv.entries()[i];
        }
    };
    dopri::integrate(&mut rhs, &mut y, s, t, &bps, opts, &mut hint, &mut stats)?;
    Vector::new(a.space, y)
}

/// Inputs of the comparison estimate. The hypothesis
/// `‖X₁(t,s)^ε‖ ≤ N e^{−ν₁(t−s)}` is asserted by the caller.
#[derive(Debug, Clone)]
pub struct ComparisonInput {
    pub a1: CoefficientPath,
    pub a2: CoefficientPath,
    pub n: f64,
    pub nu1: f64,
    /// `+1` or `-1`.
    pub epsilon: i8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonBounds {
    /// Bound on `‖X₂(t,s)^ε‖`.
    pub growth_bound: f64,
    /// Bound on `‖X₂(t,s)^ε − X₁(t,s)^ε‖`.
    pub difference_bound: f64,
    /// `∫_s^t ‖A₂ − A₁‖`.
    pub integral: f64,
}

pub fn comparison_bounds(c: &ComparisonInput, s: f64, t: f64, tol: f64) -> Result<ComparisonBounds> {
    if s > t {
        return Err(Error::InvalidInterval { lo: s, hi: t });
    }
    if c.n < 1.0 || !(c.epsilon == 1 || c.epsilon == -1) {
        return Err(Error::Construction("comparison needs N >= 1 and epsilon = ±1".into()));
    }
    let integral = c.a2.difference(&c.a1).norm_integral(s, t, tol)?;
    let base = c.n * (-c.nu1 * (t - s)).exp();
    let growth = (c.n * integral).exp();
    Ok(ComparisonBounds {
        growth_bound: base * growth,
        difference_bound: base * (c.n * integral).exp_m1(),
        integral,
    })
}

/// Solution family `X(x, v)` of `D₂X = A(x, v) X`, `X(x, v₀) = id`, sampled on
/// a grid.
#[derive(Debug, Clone)]
pub struct ParamEvolution {
    pub x_grid: Vec<f64>,
    pub v_targets: Vec<f64>,
    /// `values[i][j] = X(x_grid[i], v_targets[j])`.
    pub values: Vec<Vec<Operator>>,
    /// `max_{i,j} ‖X(x_{i+1}, v_j) − X(x_i, v_j)‖`.
    pub max_column_discrepancy: f64,
}

pub fn param_evolution<F>(
    space: Space,
    a: F,
    x_grid: &[f64],
    v0: f64,
    v_targets: &[f64],
    opts: &SolverOptions,
) -> Result<ParamEvolution>
where
    F: Fn(f64, f64) -> Operator + Send + Sync,
{
    let values: Vec<Vec<Operator>> = x_grid
        .par_iter()
        .map(|&x| evolve_column(space, |v| a(x, v), v0, v_targets, opts))
        .collect::<Result<_>>()?;
    let mut max_column_discrepancy = 0.0f64;
    for w in values.windows(2) {
        for (p, q) in w[0].iter().zip(&w[1]) {
            max_column_discrepancy = max_column_discrepancy.max((q - p).norm());
        }
    }
    Ok(ParamEvolution { x_grid: x_grid.to_vec(), v_targets: v_targets.to_vec(), values, max_column_discrepancy })
}

/// `X(v_j, v₀)` for every target, integrating outward from `v₀` once in each
/// direction and stopping at the targets on the way.
pub(crate) fn evolve_column(
    space: Space,
    a: impl Fn(f64) -> Operator,
    v0: f64,
    targets: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<Operator>> {
    let r = space.dim();
    let mut out: Vec<Option<Operator>> = vec![None; targets.len()];
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&i, &j| targets[i].total_cmp(&targets[j]));
    let (below, above): (Vec<usize>, Vec<usize>) = order.iter().partition(|&&i| targets[i] < v0);
    let mut rhs = |v: f64, y: &[f64], dy: &mut [f64]| {
        let m = a(v);
        matmul(r, m.entries(), y, dy);
    };
    for (side, ids) in [(1.0, above), (-1.0, below.into_iter().rev().collect::<Vec<_>>())] {
        let _ = side;
        let mut y = Operator::identity(space).into_entries();
        let mut cur = v0;
        let mut hint = None;
        let mut stats = StepStats::default();
        for i in ids {
            let target = targets[i];
            dopri::integrate(&mut rhs, &mut y, cur, target, &[], opts, &mut hint, &mut stats)?;
            cur = target;
            out[i] = Some(Operator::new(space, y.clone())?);
        }
    }
    Ok(out.into_iter().map(|o| o.expect("every target visited")).collect())
}

/// Two-parameter propagator over a finite window with memoised checkpoint
/// segments, so repeated queries cost at most two partial segments plus a
/// product of cached ones.
pub struct EvolutionOperator {
    source: CoefficientPath,
    window: Interval,
    opts: SolverOptions,
    nodes: Vec<f64>,
    forward: Vec<OnceLock<Operator>>,
    backward: Vec<OnceLock<Operator>>,
    accepted: AtomicUsize,
    rejected: AtomicUsize,
}

impl fmt::Debug for EvolutionOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvolutionOperator")
            .field("window", &self.window)
            .field("nodes", &self.nodes.len())
            .field("stats", &self.stats())
            .finish()
    }
}

pub const DEFAULT_CHECKPOINT_SPACING: f64 = 1.0;

impl EvolutionOperator {
    pub fn new(source: CoefficientPath, window: Interval, opts: SolverOptions) -> Result<Self> {
        EvolutionOperator::with_spacing(source, window, opts, DEFAULT_CHECKPOINT_SPACING)
    }

    /// `spacing` is the distance between uniform checkpoints; breakpoints of
    /// the source inside the window are always checkpoints.
    pub fn with_spacing(source: CoefficientPath, window: Interval, opts: SolverOptions, spacing: f64) -> Result<Self> {
        window.require_finite()?;
        if !source.domain.contains_interval(&window) {
            return Err(Error::DomainViolation {
                t: window.lo(),
                value: window.hi(),
                lo: source.domain.lo(),
                hi: source.domain.hi(),
            });
        }
        let n = (window.length() / spacing).ceil().max(1.0) as usize;
        let h = window.length() / n as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| window.lo() + i as f64 * h).collect();
        nodes.push(window.hi());
        nodes.extend(source.breakpoints.iter().copied().filter(|&b| b > window.lo() && b < window.hi()));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let segs = nodes.len() - 1;
        Ok(EvolutionOperator {
            source,
            window,
            opts,
            nodes,
            forward: (0..segs).map(|_| OnceLock::new()).collect(),
            backward: (0..segs).map(|_| OnceLock::new()).collect(),
            accepted: AtomicUsize::new(0),
            rejected: AtomicUsize::new(0),
        })
    }

    pub fn source(&self) -> &CoefficientPath {
        &self.source
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn tol(&self) -> f64 {
        self.opts.tol()
    }

    pub fn stats(&self) -> StepStats {
        StepStats {
            accepted: self.accepted.load(Ordering::Relaxed),
            rejected: self.rejected.load(Ordering::Relaxed),
            evaluations: 0,
        }
    }

    fn direct(&self, s: f64, t: f64) -> Result<Operator> {
        let (x, st) = evolve_with(&self.source, s, t, &self.opts)?;
        self.accepted.fetch_add(st.accepted, Ordering::Relaxed);
        self.rejected.fetch_add(st.rejected, Ordering::Relaxed);
        Ok(x)
    }

    fn cached(&self, k: usize, forward: bool) -> Result<Operator> {
        let cell = if forward { &self.forward[k] } else { &self.backward[k] };
        if let Some(x) = cell.get() {
            return Ok(x.clone());
        }
        let (a, b) = (self.nodes[k], self.nodes[k + 1]);
        let x = if forward { self.direct(a, b)? } else { self.direct(b, a)? };
        // a concurrent writer computed the identical value
        let _ = cell.set(x.clone());
        Ok(x)
    }

    /// `X(t, s)` for `s, t` in the window.
    pub fn query(&self, t: f64, s: f64) -> Result<Operator> {
        for x in [s, t] {
            if !self.window.contains(x) {
                return Err(Error::DomainViolation { t: x, value: x, lo: self.window.lo(), hi: self.window.hi() });
            }
        }
        if s == t {
            return Ok(Operator::identity(self.source.space));
        }
        let (lo, hi) = (s.min(t), s.max(t));
        // nodes inside [lo, hi]
        let first = self.nodes.partition_point(|&p| p < lo);
        let last = self.nodes.partition_point(|&p| p <= hi);
        if last <= first + 1 {
            return self.direct(s, t);
        }
        let (n_lo, n_hi) = (first, last - 1);
        if s < t {
            // X(t,s) = X(t, τ_hi) F[n_hi-1] ... F[n_lo] X(τ_lo, s)
            let mut acc = self.direct(s, self.nodes[n_lo])?;
            for k in n_lo..n_hi {
                acc = self.cached(k, true)?.compose(&acc);
            }
            Ok(self.direct(self.nodes[n_hi], t)?.compose(&acc))
        } else {
            // X(t,s) = X(t, τ_lo) B[n_lo] ... B[n_hi-1] X(τ_hi, s)
            let mut acc = self.direct(s, self.nodes[n_hi])?;
            for k in (n_lo..n_hi).rev() {
                acc = self.cached(k, false)?.compose(&acc);
            }
            Ok(self.direct(self.nodes[n_lo], t)?.compose(&acc))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::NormKind;
    use std::f64::consts::PI;

    fn scalar_path(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> CoefficientPath {
        let sp = Space::euclidean(1);
        CoefficientPath::new(sp, Interval::closed(-100.0, 100.0), move |t| Operator::scalar(sp, f(t)))
    }

    #[test]
    fn zero_coefficient_gives_identity() {
        let sp = Space::euclidean(3);
        let a = CoefficientPath::zero(sp, Interval::closed(0.0, 10.0));
        for (s, t) in [(0.0, 3.0), (7.0, 1.5), (2.0, 2.0)] {
            assert_eq!(evolve(&a, s, t).unwrap(), Operator::identity(sp));
        }
    }

    #[test]
    fn identity_law_is_exact() {
        let a = scalar_path(|t| t.sin() * 3.0);
        assert_eq!(evolve(&a, 1.234, 1.234).unwrap(), Operator::identity(Space::euclidean(1)));
    }

    #[test]
    fn intro_cos_closed_form() {
        let a = scalar_path(f64::cos);
        for (s, t) in [(0.0, PI / 2.0), (1.0, 17.0), (12.0, -3.0)] {
            let x = evolve(&a, s, t).unwrap();
            let exact = (t.sin() - s.sin()).exp();
            assert!((x.get(0, 0) - exact).abs() < 1e-9, "{s} {t}");
        }
    }

    #[test]
    fn rotation_generator_gives_rotations() {
        let sp = Space::euclidean(2);
        let a = CoefficientPath::constant(Operator::rotation_generator(sp), Interval::closed(0.0, 10.0));
        for t in [0.5, 2.0, 7.3] {
            let x = evolve(&a, 0.0, t).unwrap();
            assert!(x.max_abs_diff(&Operator::rotation(sp, t)) < 1e-9);
        }
    }

    #[test]
    fn outside_domain_is_rejected() {
        let sp = Space::euclidean(1);
        let a = CoefficientPath::zero(sp, Interval::closed(0.0, 1.0));
        assert!(matches!(evolve(&a, 0.0, 2.0), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn propagate_vector_examples() {
        let a = scalar_path(f64::cos);
        let sp = Space::euclidean(1);
        let zero = Vector::zeros(sp);
        assert_eq!(propagate_vector(&a, 0.0, 3.0, &zero).unwrap(), zero);
        let one = Vector::new(sp, vec![1.0]).unwrap();
        let e = propagate_vector(&a, 0.0, PI / 2.0, &one).unwrap();
        assert!((e.entries()[0] - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn comparison_bound_examples() {
        let sp = Space::euclidean(1);
        let dom = Interval::closed(0.0, 1.0);
        let zero = CoefficientPath::zero(sp, dom);
        let one = CoefficientPath::constant(Operator::identity(sp), dom);
        let same = ComparisonInput { a1: one.clone(), a2: one.clone(), n: 2.0, nu1: 0.5, epsilon: 1 };
        let b = comparison_bounds(&same, 0.0, 1.0, 1e-12).unwrap();
        assert_eq!(b.difference_bound, 0.0);
        assert!((b.growth_bound - 2.0 * (-0.5f64).exp()).abs() < 1e-15);

        let c = ComparisonInput { a1: zero, a2: one.clone(), n: 1.0, nu1: 0.0, epsilon: 1 };
        let b = comparison_bounds(&c, 0.0, 1.0, 1e-12).unwrap();
        let e = 1f64.exp();
        assert!((b.growth_bound - e).abs() < 1e-12);
        assert!((b.difference_bound - (e - 1.0)).abs() < 1e-12);
        let x2 = evolve(&one, 0.0, 1.0).unwrap().get(0, 0);
        assert!(x2 <= b.growth_bound + 1e-9);
        assert!((x2 - 1.0).abs() <= b.difference_bound + 1e-9);
        assert!(comparison_bounds(&c, 1.0, 0.0, 1e-12).is_err());
    }

    #[test]
    fn variation_of_parameters_examples() {
        let sp = Space::euclidean(1);
        let dom = Interval::closed(0.0, 2.0);
        let opts = SolverOptions::default();
        let one = CoefficientPath::constant(Operator::identity(sp), dom);
        let x0 = Vector::zeros(sp);
        let g = |_| Vector::new(Space::euclidean(1), vec![1.0]).unwrap();
        let x = variation_of_parameters(&one, g, &[], 0.0, 1.0, &x0, &opts).unwrap();
        assert!((x.entries()[0] - (1f64.exp() - 1.0)).abs() < 1e-9);

        let zero = CoefficientPath::zero(sp, dom);
        let xs = Vector::new(sp, vec![0.3]).unwrap();
        let x = variation_of_parameters(&zero, |_| Vector::new(Space::euclidean(1), vec![2.0]).unwrap(), &[], 0.5, 1.5, &xs, &opts)
            .unwrap();
        assert!((x.entries()[0] - 2.3).abs() < 1e-12);
    }

    #[test]
    fn param_evolution_examples() {
        let sp = Space::euclidean(1);
        let opts = SolverOptions::default();
        let xs = [-1.0, 0.0, 0.5, 2.0];
        let vs = [-1.0, 0.0, 0.3, 1.0];
        let p = param_evolution(sp, |x, _| Operator::scalar(Space::euclidean(1), x), &xs, 0.3, &vs, &opts).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            for (j, &v) in vs.iter().enumerate() {
                let exact = (x * (v - 0.3)).exp();
                assert!((p.values[i][j].get(0, 0) - exact).abs() < 1e-9 * exact.max(1.0));
            }
        }
        let zero = param_evolution(sp, |_, _| Operator::zeros(Space::euclidean(1)), &xs, 0.3, &vs, &opts).unwrap();
        assert_eq!(zero.max_column_discrepancy, 0.0);

        let sp2 = Space::euclidean(2);
        let rot = param_evolution(sp2, |_, v| Operator::rotation_generator(Space::euclidean(2)).scale(v), &[0.0], 0.5, &[-1.0, 2.0], &opts)
            .unwrap();
        for (j, v) in [-1.0f64, 2.0].iter().enumerate() {
            let exact = Operator::rotation(sp2, 0.5 * (v * v - 0.25));
            assert!(rot.values[0][j].max_abs_diff(&exact) < 1e-9);
        }
    }

    #[test]
    fn memoised_queries_match_direct_evolution() {
        let sp = Space::with_norm(2, NormKind::One);
        let a = CoefficientPath::new(sp, Interval::closed(0.0, 20.0), move |t| {
            Operator::new(sp, vec![0.3 * t.cos(), 1.0, -1.0, 0.2 * (0.5 * t).sin()]).unwrap()
        })
        .with_breakpoints(vec![3.3]);
        let op = EvolutionOperator::new(a.clone(), Interval::closed(0.0, 20.0), SolverOptions::default()).unwrap();
        for (t, s) in [(17.5, 0.25), (0.25, 17.5), (4.1, 3.9), (12.0, 12.0), (20.0, 0.0)] {
            let q = op.query(t, s).unwrap();
            let d = evolve(&a, s, t).unwrap();
            assert!((&q - &d).norm() < 1e-8 * d.norm().max(1.0), "{t} {s}");
        }
        assert!(op.stats().accepted > 0);
        assert!(op.query(21.0, 0.0).is_err());
    }

    #[test]
    fn concurrent_queries_are_deterministic() {
        let sp = Space::euclidean(2);
        let a = CoefficientPath::new(sp, Interval::closed(0.0, 30.0), move |t| {
            Operator::new(sp, vec![t.sin(), 0.5, -0.5, t.cos()]).unwrap()
        });
        let pairs: Vec<(f64, f64)> = (0..64).map(|k| (k as f64 * 0.37 % 30.0, (k as f64 * 1.91) % 30.0)).collect();
        let op = EvolutionOperator::new(a.clone(), Interval::closed(0.0, 30.0), SolverOptions::default()).unwrap();
        let par: Vec<Operator> = pairs.par_iter().map(|&(s, t)| op.query(t, s).unwrap()).collect();
        let fresh = EvolutionOperator::new(a, Interval::closed(0.0, 30.0), SolverOptions::default()).unwrap();
        let seq: Vec<Operator> = pairs.iter().map(|&(s, t)| fresh.query(t, s).unwrap()).collect();
        assert_eq!(par, seq);
    }
}
