//! Parallel transport on the trivial bundle over a rectangle `M×J`, and the
//! bound `‖P_γ‖ ≤ β(L(γ₁))` that only sees the length of the first
//! component of the curve.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::calculus::{arc_length, fd_step, Interval, OperatorFn2, ScalarPath};
use crate::error::{Error, Result};
use crate::evolution::{evolve_with, CoefficientPath, SolverOptions};
use crate::operators::{Operator, Space, Vector};

/// Connection form `ω = (ω₁, ω₂)` on `M×J`.
#[derive(Clone)]
pub struct ConnectionForm {
    space: Space,
    m: Interval,
    j: Interval,
    omega1: OperatorFn2,
    omega2: OperatorFn2,
    d1_omega2: Option<OperatorFn2>,
}

impl fmt::Debug for ConnectionForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionForm")
            .field("space", &self.space)
            .field("m", &self.m)
            .field("j", &self.j)
            .field("analytic_d1_omega2", &self.d1_omega2.is_some())
            .finish()
    }
}

impl ConnectionForm {
    pub fn new(
        space: Space,
        m: Interval,
        j: Interval,
        omega1: impl Fn(f64, f64) -> Operator + Send + Sync + 'static,
        omega2: impl Fn(f64, f64) -> Operator + Send + Sync + 'static,
    ) -> Self {
        ConnectionForm { space, m, j, omega1: Arc::new(omega1), omega2: Arc::new(omega2), d1_omega2: None }
    }

    pub fn with_d1_omega2(mut self, d: impl Fn(f64, f64) -> Operator + Send + Sync + 'static) -> Self {
        self.d1_omega2 = Some(Arc::new(d));
        self
    }

    pub fn zero(space: Space, m: Interval, j: Interval) -> Self {
        let z = Operator::zeros(space);
        let (z1, z2) = (z.clone(), z.clone());
        ConnectionForm::new(space, m, j, move |_, _| z1.clone(), move |_, _| z2.clone()).with_d1_omega2(move |_, _| z.clone())
    }

    /// `ω = −(Dg)·g⁻¹` for an invertible gauge `g`, flat by construction.
    /// `dg1`, `dg2` are the partials of `g`; `d1_omega2` is left to finite
    /// differences.
    pub fn gauge(
        space: Space,
        m: Interval,
        j: Interval,
        g: impl Fn(f64, f64) -> Operator + Send + Sync + 'static,
        dg1: impl Fn(f64, f64) -> Operator + Send + Sync + 'static,
        dg2: impl Fn(f64, f64) -> Operator + Send + Sync + 'static,
    ) -> Self {
        let g = Arc::new(g);
        let g2 = Arc::clone(&g);
        let inv = move |g: &Operator| g.invert().expect("gauge must be invertible on the rectangle");
        ConnectionForm::new(
            space,
            m,
            j,
            move |x, u| -&dg1(x, u).compose(&inv(&g(x, u))),
            move |x, u| -&dg2(x, u).compose(&inv(&g2(x, u))),
        )
    }

    /// Gauge `g(x, u) = R(k·x·u)` with `R` the plane rotation: `ω₁ = −k·u·J`,
    /// `ω₂ = −k·x·J`, `D₁ω₂ = −k·J` for the rotation generator `J`.
    pub fn rotation_gauge(space: Space, m: Interval, j: Interval, k: f64) -> Self {
        assert_eq!(space.dim(), 2, "rotation gauge lives on R²");
        let gen = Operator::rotation_generator(space);
        let (g1, g2, g3) = (gen.clone(), gen.clone(), gen);
        ConnectionForm::new(space, m, j, move |_, u| g1.scale(-k * u), move |x, _| g2.scale(-k * x))
            .with_d1_omega2(move |_, _| g3.scale(-k))
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn m(&self) -> Interval {
        self.m
    }

    pub fn j(&self) -> Interval {
        self.j
    }

    pub fn omega1(&self, x: f64, u: f64) -> Operator {
        (self.omega1)(x, u)
    }

    pub fn omega2(&self, x: f64, u: f64) -> Operator {
        (self.omega2)(x, u)
    }

    pub fn has_d1_omega2(&self) -> bool {
        self.d1_omega2.is_some()
    }

    /// `D₁ω₂`, analytic if supplied, else a difference quotient that turns
    /// one-sided at the edges of `M`.
    pub fn d1_omega2(&self, x: f64, u: f64) -> Operator {
        match &self.d1_omega2 {
            Some(d) => d(x, u),
            None => self.d1_omega2_fd(x, u),
        }
    }

    fn d1_omega2_fd(&self, x: f64, u: f64) -> Operator {
        let h = fd_step(x);
        let (lo, hi) = (x - h, x + h);
        if lo >= self.m.lo() && hi <= self.m.hi() {
            (&self.omega2(hi, u) - &self.omega2(lo, u)).scale(0.5 / h)
        } else if lo < self.m.lo() {
            (&self.omega2(x + h, u) - &self.omega2(x, u)).scale(1.0 / h)
        } else {
            (&self.omega2(x, u) - &self.omega2(x - h, u)).scale(1.0 / h)
        }
    }

    /// Largest gap between the supplied `D₁ω₂` and finite differences at
    /// `points`; `None` without an analytic derivative.
    pub fn d1_consistency(&self, points: &[(f64, f64)]) -> Option<f64> {
        self.d1_omega2.as_ref()?;
        Some(points.iter().map(|&(x, u)| self.d1_omega2(x, u).max_abs_diff(&self.d1_omega2_fd(x, u))).fold(0.0, f64::max))
    }

    pub fn contains(&self, x: f64, u: f64) -> bool {
        self.m.contains(x) && self.j.contains(u)
    }

    /// Same connection in a different norm.
    pub fn in_space(&self, space: Space) -> ConnectionForm {
        assert_eq!(space.dim(), self.space.dim());
        let (o1, o2) = (Arc::clone(&self.omega1), Arc::clone(&self.omega2));
        let mut out =
            ConnectionForm::new(space, self.m, self.j, move |x, u| o1(x, u).in_space(space), move |x, u| o2(x, u).in_space(space));
        if let Some(d) = &self.d1_omega2 {
            let d = Arc::clone(d);
            out = out.with_d1_omega2(move |x, u| d(x, u).in_space(space));
        }
        out
    }
}

/// Piecewise C¹ curve `γ = (γ₁, γ₂): [a, b] -> M×J`.
#[derive(Debug, Clone)]
pub struct Curve {
    gamma1: ScalarPath,
    gamma2: ScalarPath,
    a: f64,
    b: f64,
}

/// Points used to check that a curve stays in the rectangle.
const IMAGE_CHECK_POINTS: usize = 4096;

impl Curve {
    pub fn new(gamma1: ScalarPath, gamma2: ScalarPath, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a > b {
            return Err(Error::InvalidInterval { lo: a, hi: b });
        }
        Ok(Curve { gamma1, gamma2, a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn gamma1(&self) -> &ScalarPath {
        &self.gamma1
    }

    pub fn gamma2(&self) -> &ScalarPath {
        &self.gamma2
    }

    pub fn point(&self, t: f64) -> (f64, f64) {
        (self.gamma1.value(t), self.gamma2.value(t))
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut bps = self.gamma1.breakpoints_in(self.a, self.b);
        bps.extend(self.gamma2.breakpoints_in(self.a, self.b));
        bps
    }

    /// The same curve restricted to `[s, t] ⊂ [a, b]`.
    pub fn restrict(&self, s: f64, t: f64) -> Result<Curve> {
        if s < self.a || t > self.b {
            return Err(Error::DomainViolation { t: s, value: t, lo: self.a, hi: self.b });
        }
        Curve::new(self.gamma1.clone(), self.gamma2.clone(), s, t)
    }

    /// `γ⁻¹(t) = γ(a + b − t)`.
    pub fn reversed(&self) -> Curve {
        let (a, b) = (self.a, self.b);
        let rev = |p: &ScalarPath| {
            let (v, d) = (p.clone(), p.clone());
            let bps = p.breakpoints_in(a, b).into_iter().map(|x| a + b - x).collect();
            ScalarPath::new(Interval::closed(a, b), move |t| v.value(a + b - t))
                .with_derivative(move |t| -d.derivative(a + b - t))
                .with_breakpoints(bps)
        };
        Curve { gamma1: rev(&self.gamma1), gamma2: rev(&self.gamma2), a, b }
    }

    /// `L(γ₁) = ∫|γ₁'|`.
    pub fn projected_length(&self, tol: f64) -> Result<f64> {
        arc_length(&self.gamma1, self.a, self.b, tol)
    }
}

/// `A(t) = −(ω₁(γ(t))·γ₁'(t) + ω₂(γ(t))·γ₂'(t))` after checking the image of
/// `γ` on a grid.
pub fn transport_coefficient(w: &ConnectionForm, c: &Curve) -> Result<CoefficientPath> {
    let n = IMAGE_CHECK_POINTS;
    for k in 0..=n {
        let t = c.a + (c.b - c.a) * k as f64 / n as f64;
        let (x, u) = c.point(t);
        if !w.contains(x, u) {
            let (lo, hi) = if w.m.contains(x) { (w.j.lo(), w.j.hi()) } else { (w.m.lo(), w.m.hi()) };
            return Err(Error::DomainViolation { t, value: if w.m.contains(x) { u } else { x }, lo, hi });
        }
    }
    let (w, c2) = (w.clone(), c.clone());
    Ok(CoefficientPath::new(w.space, Interval::new(c.a, c.b)?, move |t| {
        let (x, u) = c2.point(t);
        let a1 = w.omega1(x, u).scale(c2.gamma1.derivative(t));
        let a2 = w.omega2(x, u).scale(c2.gamma2.derivative(t));
        -&(&a1 + &a2)
    })
    .with_breakpoints(c.breakpoints()))
}

/// `P_γ = X(b, a)` for the transport coefficient.
pub fn parallel_transport(w: &ConnectionForm, c: &Curve, tol: f64) -> Result<Operator> {
    let a = transport_coefficient(w, c)?;
    evolve_with(&a, c.a, c.b, &SolverOptions::with_tol(tol)).map(|(x, _)| x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundsProvenance {
    UserSupplied,
    GridSampled { resolution: usize, converged: bool },
}

impl fmt::Display for BoundsProvenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundsProvenance::UserSupplied => f.write_str("user-supplied"),
            BoundsProvenance::GridSampled { resolution, converged } => {
                write!(f, "grid-sampled({resolution}{})", if *converged { "" } else { ", not converged" })
            }
        }
    }
}

/// `B₁ ≥ sup‖ω₁‖`, `B₂ ≥ sup‖ω₂‖`, `B₁₂ ≥ sup‖D₁ω₂‖` and `λ(J)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionBounds {
    pub b1: f64,
    pub b2: f64,
    pub b12: f64,
    pub lambda_j: f64,
    pub provenance: BoundsProvenance,
}

impl ConnectionBounds {
    pub fn user(b1: f64, b2: f64, b12: f64, lambda_j: f64) -> Result<Self> {
        for (name, v) in [("B1", b1), ("B2", b2), ("B12", b12)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Construction(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if !(lambda_j.is_finite() && lambda_j > 0.0) {
            return Err(Error::Construction(format!("lambda_J must be finite and positive, got {lambda_j}")));
        }
        Ok(ConnectionBounds { b1, b2, b12, lambda_j, provenance: BoundsProvenance::UserSupplied })
    }
}

/// `β(L)` together with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta {
    pub n: f64,
    /// `C(L)`.
    pub c: f64,
    pub beta: f64,
    pub ln_beta: f64,
    /// Set when `β` no longer fits in `f64` and was saturated to `+∞`.
    pub saturated: bool,
}

/// `N = e^{λ(J)B₂}`, `C(L) = N²e^{N^{3+2N}λ(J)B₁₂L}`, `β(L) = C(L)e^{C(L)B₁L}`.
pub fn beta_bound(b: &ConnectionBounds, l: f64) -> Result<Beta> {
    for v in [b.b1, b.b2, b.b12, b.lambda_j, l] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Construction(format!("beta_bound needs finite nonnegative inputs, got {v}")));
        }
    }
    let ln_n = b.lambda_j * b.b2;
    let n = ln_n.exp();
    let c = n * n * (n.powf(3.0 + 2.0 * n) * b.lambda_j * b.b12 * l).exp();
    let beta = c * (c * b.b1 * l).exp();
    let ln_c = if b.b12 * l == 0.0 {
        2.0 * ln_n
    } else {
        2.0 * ln_n + ((3.0 + 2.0 * n) * ln_n + (b.lambda_j * b.b12 * l).ln()).exp()
    };
    let ln_beta = if b.b1 * l == 0.0 { ln_c } else { ln_c + c * b.b1 * l };
    let saturated = !beta.is_finite() || !n.is_finite();
    Ok(Beta { n, c, beta: if saturated { f64::INFINITY } else { beta }, ln_beta, saturated })
}

pub const BOUNDS_REFINEMENT_RTOL: f64 = 1e-2;
pub const BOUNDS_INFLATION: f64 = 1.05;
const MAX_SAMPLING_RESOLUTION: usize = 1024;

fn sample_sups(w: &ConnectionForm, res: usize) -> [f64; 3] {
    let at = |k: usize, iv: Interval| iv.lo() + iv.length() * k as f64 / res as f64;
    (0..=res)
        .into_par_iter()
        .map(|ix| {
            let x = at(ix, w.m);
            let mut m = [0.0f64; 3];
            for iu in 0..=res {
                let u = at(iu, w.j);
                m[0] = m[0].max(w.omega1(x, u).norm());
                m[1] = m[1].max(w.omega2(x, u).norm());
                m[2] = m[2].max(w.d1_omega2(x, u).norm());
            }
            m
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold([0.0; 3], |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])])
}

/// Grid sups of `‖ω₁‖`, `‖ω₂‖`, `‖D₁ω₂‖` on `(resolution+1)²` points of the
/// closed rectangle, doubled until every sup changes by less than 1%, then
/// inflated by 5%.
pub fn sample_connection_bounds(w: &ConnectionForm, resolution: usize) -> Result<ConnectionBounds> {
    w.m.require_finite()?;
    w.j.require_finite()?;
    let mut res = resolution.max(2);
    let mut prev = sample_sups(w, res);
    let mut converged = false;
    while res < MAX_SAMPLING_RESOLUTION {
        res *= 2;
        let cur = sample_sups(w, res);
        let settled = cur.iter().zip(&prev).all(|(c, p)| (c - p).abs() <= BOUNDS_REFINEMENT_RTOL * c.abs());
        prev = cur;
        if settled {
            converged = true;
            break;
        }
    }
    Ok(ConnectionBounds {
        b1: BOUNDS_INFLATION * prev[0],
        b2: BOUNDS_INFLATION * prev[1],
        b12: BOUNDS_INFLATION * prev[2],
        lambda_j: w.j.length(),
        provenance: BoundsProvenance::GridSampled { resolution: res, converged },
    })
}

/// `t ↦ (t, sin(1/t))` on `[a, b]`, `a < b < 0`.
pub fn sine_curve(a: f64, b: f64) -> Result<Curve> {
    if !(a < b && b < 0.0) {
        return Err(Error::InvalidInterval { lo: a, hi: b });
    }
    let dom = Interval::new(a, b)?;
    Curve::new(
        ScalarPath::identity(dom),
        ScalarPath::new(dom, |t| (1.0 / t).sin()).with_derivative(|t| -(1.0 / t).cos() / (t * t)),
        a,
        b,
    )
}

/// Closest `b` to zero that the scenario integrates to by default.
pub const DEFAULT_SINE_FLOOR: f64 = -1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SineCurveRow {
    pub b: f64,
    pub norm_p: f64,
    /// `β(b − a)` for this truncation.
    pub beta: f64,
    /// `‖P_{γ_b⁻¹}‖`.
    pub norm_reverse: f64,
    /// `‖P_{γ_b⁻¹}∘P_{γ_b} − id‖`.
    pub round_trip: f64,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SineCurveReport {
    pub a: f64,
    /// `β(−a)`, the constant for every truncation.
    pub c: f64,
    pub norm_v: f64,
    pub rows: Vec<SineCurveRow>,
    pub passed: bool,
}

/// Transports `v` along `γ(t) = (t, sin(1/t))` on `[a, b]` for each `b` and
/// checks `‖v‖/C ≤ ‖P_{γ_b} v‖ ≤ C‖v‖` with `C = β(−a)`; the lower side comes
/// from the reverse path.
pub fn sine_curve_scenario(
    w: &ConnectionForm,
    bounds: &ConnectionBounds,
    a: f64,
    b_list: &[f64],
    v: &Vector,
    floor: f64,
    tol: f64,
) -> Result<SineCurveReport> {
    if !(a < 0.0) {
        return Err(Error::Construction(format!("a must be negative, got {a}")));
    }
    let c = beta_bound(bounds, -a)?.beta;
    let norm_v = v.norm();
    let slack = 1.0 + 1e-6;
    let rows: Vec<SineCurveRow> = b_list
        .par_iter()
        .map(|&b| {
            let beta = beta_bound(bounds, (b - a).max(0.0)).map(|x| x.beta).unwrap_or(f64::NAN);
            let fail = |msg: String| SineCurveRow {
                b,
                norm_p: f64::NAN,
                beta,
                norm_reverse: f64::NAN,
                round_trip: f64::NAN,
                pass: false,
                error: Some(msg),
            };
            if !(b > a && b < 0.0) {
                return fail(format!("b = {b} outside (a, 0)"));
            }
            if b > floor {
                return fail(format!("b = {b} is closer to 0 than the floor {floor}"));
            }
            let run = || -> Result<(Operator, Operator)> {
                let curve = sine_curve(a, b)?;
                Ok((parallel_transport(w, &curve, tol)?, parallel_transport(w, &curve.reversed(), tol)?))
            };
            match run() {
                Ok((p, rev)) => {
                    let norm_p = p.apply(v).norm();
                    let norm_reverse = rev.norm();
                    let round_trip = (&rev.compose(&p) - &Operator::identity(w.space)).norm();
                    let upper = norm_p <= c * slack * norm_v;
                    let lower = norm_v <= c * slack * norm_p;
                    let pass = upper && lower && norm_reverse <= c * slack;
                    SineCurveRow { b, norm_p, beta, norm_reverse, round_trip, pass, error: None }
                }
                Err(e) => fail(e.to_string()),
            }
        })
        .collect();
    let passed = rows.iter().all(|r| r.pass);
    Ok(SineCurveReport { a, c, norm_v, rows, passed })
}
