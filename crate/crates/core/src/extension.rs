//! Extending a parallel section across the graph of a function.
//!
//! On the rectangle `M×J`, a parallel section `σ` is known off the closed
//! graph of `f: (a, ·] -> (v₀, v₁)`. Two candidates are built from the
//! levels `v = v₀` and `v = v₁`,
//!
//! `ξ_j(x, v) = Y_j(x, v)·σ(x, v_j)` with `D₂Y_j + ω₂Y_j = 0`, `Y_j(x, v_j) = id`,
//!
//! and the extension is accepted when the two agree on the grid.

use rayon::prelude::*;

use crate::calculus::{Interval, ScalarPath};
use crate::error::{Error, Result};
use crate::evolution::{evolve_column, param_evolution, SolverOptions};
use crate::operators::Vector;
use crate::transport::ConnectionForm;

/// Default gap between `a` and the first grid column to its right.
pub const DEFAULT_X_FLOOR: f64 = 1e-3;
/// Residual grids coarser than this get a warning.
pub const COARSE_SPACING: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct ExtensionProblem {
    pub omega: ConnectionForm,
    /// Defined for `x > a`, with values in `(v₀, v₁)`.
    pub f: ScalarPath,
    pub a: f64,
    pub v0: f64,
    pub v1: f64,
    /// Reference point `(x_ref, v₀)` with `x_ref < a` where `σ = seed`.
    pub x_ref: f64,
    pub sigma_seed: Vector,
}

impl ExtensionProblem {
    pub fn validate(&self) -> Result<()> {
        let (m, j) = (self.omega.m(), self.omega.j());
        if !(self.v0 < self.v1) || !j.contains(self.v0) || !j.contains(self.v1) {
            return Err(Error::Construction(format!("need v0 < v1 inside J = {j}, got {} and {}", self.v0, self.v1)));
        }
        if !(self.x_ref < self.a) || !m.contains(self.x_ref) || !m.contains(self.a) {
            return Err(Error::Construction(format!("need x_ref < a inside M = {m}, got {} and {}", self.x_ref, self.a)));
        }
        if self.sigma_seed.dim() != self.omega.space().dim() {
            return Err(Error::DimensionMismatch { expected: self.omega.space().dim(), got: self.sigma_seed.dim() });
        }
        Ok(())
    }

    /// `f(x)` for `x > a`, `None` to the left where there is no graph.
    pub fn graph(&self, x: f64) -> Option<f64> {
        (x > self.a).then(|| self.f.value(x))
    }
}

/// Tensor grid; `vs` must start at `v₀` and end at `v₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionGrid {
    pub xs: Vec<f64>,
    pub vs: Vec<f64>,
}

impl ExtensionGrid {
    pub fn new(xs: Vec<f64>, vs: Vec<f64>) -> Result<Self> {
        for g in [&xs, &vs] {
            if g.len() < 2 || g.iter().any(|p| !p.is_finite()) || g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Construction("grid axes need at least two finite, strictly increasing points".into()));
            }
        }
        Ok(ExtensionGrid { xs, vs })
    }

    /// `nx + 1` uniform columns on `[x_lo, x_hi]` minus those in
    /// `(a, a + floor)`, and `nv + 1` uniform rows on `[v₀, v₁]`.
    pub fn uniform(x_lo: f64, x_hi: f64, nx: usize, a: f64, floor: f64, v0: f64, v1: f64, nv: usize) -> Result<Self> {
        let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            let mut p: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
            p.push(hi);
            p
        };
        let xs = axis(x_lo, x_hi, nx.max(1)).into_iter().filter(|&x| !(x > a && x < a + floor)).collect();
        ExtensionGrid::new(xs, axis(v0, v1, nv.max(1)))
    }

    /// Largest gap between neighbouring grid lines.
    pub fn spacing(&self) -> f64 {
        self.xs.windows(2).chain(self.vs.windows(2)).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Vector values on an [`ExtensionGrid`], indexed `[ix][iv]`; `None` marks
/// points where the section is undefined (on the graph).
#[derive(Debug, Clone, PartialEq)]
pub struct SectionGrid {
    pub xs: Vec<f64>,
    pub vs: Vec<f64>,
    pub values: Vec<Vec<Option<Vector>>>,
}

impl SectionGrid {
    pub fn get(&self, ix: usize, iv: usize) -> Option<&Vector> {
        self.values[ix][iv].as_ref()
    }

    /// `max ‖self − other‖` over points where both are defined and `keep`
    /// holds.
    pub fn max_distance(&self, other: &SectionGrid, keep: impl Fn(usize, usize) -> bool) -> f64 {
        let mut m = 0.0f64;
        for (ix, (ca, cb)) in self.values.iter().zip(&other.values).enumerate() {
            for (iv, (p, q)) in ca.iter().zip(cb).enumerate() {
                if let (Some(p), Some(q)) = (p, q) {
                    if keep(ix, iv) {
                        m = m.max(p.distance(q));
                    }
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaBuild {
    pub sigma: SectionGrid,
    /// Largest disagreement between the two axis paths on `x ≤ a`.
    pub loop_defect: f64,
}

/// Transports the seed within `U` along axis-parallel paths: up the column
/// `x = x_ref`, then horizontally. Right of `a`, points below the graph are
/// reached along `v = v₀` and points above along `v = v₁`, so no path meets
/// the graph.
pub fn build_sigma(p: &ExtensionProblem, grid: &ExtensionGrid, tol: f64) -> Result<SigmaBuild> {
    p.validate()?;
    check_rows(p, grid)?;
    let opts = SolverOptions::with_tol(tol);
    let space = p.omega.space();
    let w = &p.omega;
    for &x in &grid.xs {
        if let Some(fx) = p.graph(x) {
            if !(fx > p.v0 && fx < p.v1) {
                return Err(Error::Construction(format!(
                    "graph value f({x}) = {fx} leaves (v0, v1); a grid path would cross the graph"
                )));
            }
        }
    }
    let vertical = |x: f64, from: f64, targets: &[f64]| evolve_column(space, |v| -&w.omega2(x, v), from, targets, &opts);
    let horizontal = |v: f64, from: f64, targets: &[f64]| evolve_column(space, |x| -&w.omega1(x, v), from, targets, &opts);

    // σ on the reference column
    let at_ref: Vec<Vector> =
        vertical(p.x_ref, p.v0, &grid.vs)?.iter().map(|y| y.apply(&p.sigma_seed)).collect();
    // rows: σ(x, v) for every x reached horizontally from x_ref
    let left: Vec<usize> = (0..grid.xs.len()).filter(|&i| grid.xs[i] <= p.a).collect();
    let left_x: Vec<f64> = left.iter().map(|&i| grid.xs[i]).collect();
    let nv = grid.vs.len();
    let rows: Vec<Vec<Vector>> = (0..nv)
        .into_par_iter()
        .map(|iv| {
            let targets: &[f64] = if iv == 0 || iv == nv - 1 { &grid.xs } else { &left_x };
            Ok(horizontal(grid.vs[iv], p.x_ref, targets)?.iter().map(|h| h.apply(&at_ref[iv])).collect())
        })
        .collect::<Result<_>>()?;

    let columns: Vec<Vec<Option<Vector>>> = grid
        .xs
        .par_iter()
        .enumerate()
        .map(|(ix, &x)| -> Result<Vec<Option<Vector>>> {
            let mut col: Vec<Option<Vector>> = vec![None; nv];
            match p.graph(x) {
                None => {
                    let k = left.iter().position(|&i| i == ix).expect("left column");
                    for iv in 0..nv {
                        let row = &rows[iv];
                        col[iv] = Some(row[if iv == 0 || iv == nv - 1 { ix } else { k }].clone());
                    }
                }
                Some(fx) => {
                    let base0 = rows[0][ix].clone();
                    let base1 = rows[nv - 1][ix].clone();
                    let below: Vec<usize> = (0..nv).filter(|&iv| grid.vs[iv] < fx).collect();
                    let above: Vec<usize> = (0..nv).filter(|&iv| grid.vs[iv] > fx).collect();
                    let tb: Vec<f64> = below.iter().map(|&i| grid.vs[i]).collect();
                    let ta: Vec<f64> = above.iter().map(|&i| grid.vs[i]).collect();
                    for (iv, y) in below.iter().zip(vertical(x, p.v0, &tb)?) {
                        col[*iv] = Some(y.apply(&base0));
                    }
                    for (iv, y) in above.iter().zip(vertical(x, p.v1, &ta)?) {
                        col[*iv] = Some(y.apply(&base1));
                    }
                }
            }
            Ok(col)
        })
        .collect::<Result<_>>()?;

    // second route on x ≤ a: along v = v₀ first, then up the column
    let loop_defect = left
        .par_iter()
        .map(|&ix| -> Result<f64> {
            let x = grid.xs[ix];
            let start = &rows[0][ix];
            let col = vertical(x, p.v0, &grid.vs)?;
            Ok(col
                .iter()
                .enumerate()
                .map(|(iv, y)| y.apply(start).distance(columns[ix][iv].as_ref().expect("defined left of a")))
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    Ok(SigmaBuild { sigma: SectionGrid { xs: grid.xs.clone(), vs: grid.vs.clone(), values: columns }, loop_defect })
}

fn check_rows(p: &ExtensionProblem, grid: &ExtensionGrid) -> Result<()> {
    if grid.vs.first() != Some(&p.v0) || grid.vs.last() != Some(&p.v1) {
        return Err(Error::Construction("grid rows must start at v0 and end at v1".into()));
    }
    let (m, j) = (p.omega.m(), p.omega.j());
    if !m.contains(grid.xs[0]) || !m.contains(*grid.xs.last().expect("non-empty")) || !j.contains(grid.vs[0]) {
        return Err(Error::Construction(format!("grid leaves the rectangle {m} × {j}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    pub xi0: SectionGrid,
    pub xi1: SectionGrid,
    /// `‖ξ₁ − ξ₀‖` per grid point.
    pub gap: Vec<Vec<f64>>,
    pub max_gap: f64,
    /// `max ‖ξ₀ − σ‖` on `x ≤ a` and below the graph.
    pub max_dev0: f64,
    /// `max ‖ξ₁ − σ‖` on `x ≤ a` and above the graph.
    pub max_dev1: f64,
    pub threshold: f64,
    /// `max_gap ≤ threshold`; the accepted section is `ξ₀`.
    pub accepted: bool,
}

/// Builds `ξ₀`, `ξ₁` from `σ` on the rows `v₀`, `v₁` and compares them; the
/// extension is accepted when `max_gap ≤ 100·tol`.
pub fn extend_section(p: &ExtensionProblem, sigma: &SectionGrid, tol: f64) -> Result<Extension> {
    p.validate()?;
    let grid = ExtensionGrid::new(sigma.xs.clone(), sigma.vs.clone())?;
    check_rows(p, &grid)?;
    let opts = SolverOptions::with_tol(tol);
    let w = p.omega.clone();
    let nv = grid.vs.len();
    let xi = |j: usize, v_j: f64| -> Result<SectionGrid> {
        let ys = param_evolution(w.space(), |x, v| -&w.omega2(x, v), &grid.xs, v_j, &grid.vs, &opts)?;
        let values = ys
            .values
            .iter()
            .enumerate()
            .map(|(ix, col)| {
                let base = sigma.get(ix, if j == 0 { 0 } else { nv - 1 }).ok_or_else(|| {
                    Error::Construction(format!("sigma undefined on the boundary row at x = {}", grid.xs[ix]))
                })?;
                Ok(col.iter().map(|y| Some(y.apply(base))).collect())
            })
            .collect::<Result<_>>()?;
        Ok(SectionGrid { xs: grid.xs.clone(), vs: grid.vs.clone(), values })
    };
    let xi0 = xi(0, p.v0)?;
    let xi1 = xi(1, p.v1)?;
    let gap: Vec<Vec<f64>> = xi0
        .values
        .iter()
        .zip(&xi1.values)
        .map(|(c0, c1)| c0.iter().zip(c1).map(|(a, b)| a.as_ref().expect("total").distance(b.as_ref().expect("total"))).collect())
        .collect();
    let max_gap = gap.iter().flatten().copied().fold(0.0, f64::max);
    let side = |ix: usize, iv: usize| -> i8 {
        match p.graph(grid.xs[ix]) {
            None => 0,
            Some(fx) if grid.vs[iv] < fx => -1,
            Some(fx) if grid.vs[iv] > fx => 1,
            Some(_) => 2,
        }
    };
    let max_dev0 = xi0.max_distance(sigma, |ix, iv| matches!(side(ix, iv), 0 | -1));
    let max_dev1 = xi1.max_distance(sigma, |ix, iv| matches!(side(ix, iv), 0 | 1));
    let threshold = 100.0 * tol;
    Ok(Extension { xi0, xi1, gap, max_gap, max_dev0, max_dev1, threshold, accepted: max_gap <= threshold })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    /// `‖D_iξ + ω_iξ‖` per grid point; `None` where a stencil value is missing.
    pub values: Vec<Vec<Option<f64>>>,
    pub spacing: f64,
    pub warning: Option<String>,
}

impl Residual {
    /// Largest residual over points where `keep` holds.
    pub fn max_where(&self, keep: impl Fn(usize, usize) -> bool) -> f64 {
        let mut m = 0.0f64;
        for (ix, col) in self.values.iter().enumerate() {
            for (iv, r) in col.iter().enumerate() {
                if let Some(r) = r {
                    if keep(ix, iv) {
                        m = m.max(*r);
                    }
                }
            }
        }
        m
    }
}

/// Derivative weights at `x[k]` from the Lagrange interpolant through five
/// neighbouring grid lines (centred where possible), fourth-order accurate on
/// non-uniform grids.
fn fd_weights(x: &[f64], k: usize) -> (Vec<usize>, Vec<f64>) {
    let n = x.len();
    let width = n.min(5);
    let start = k.saturating_sub(width / 2).min(n - width);
    let idx: Vec<usize> = (start..start + width).collect();
    let t = x[k];
    let wts = idx
        .iter()
        .map(|&i| {
            let denom: f64 = idx.iter().filter(|&&l| l != i).map(|&l| x[i] - x[l]).product();
            let num: f64 = idx
                .iter()
                .filter(|&&m| m != i)
                .map(|&m| idx.iter().filter(|&&l| l != i && l != m).map(|&l| t - x[l]).product::<f64>())
                .sum();
            num / denom
        })
        .collect();
    (idx, wts)
}

/// `‖D_iξ + ω_iξ‖` with `D_i` by central differences along the grid axis
/// `direction` (1 for `x`, 2 for `v`).
pub fn parallel_residual(w: &ConnectionForm, xi: &SectionGrid, direction: u8) -> Result<Residual> {
    if direction != 1 && direction != 2 {
        return Err(Error::Construction(format!("direction must be 1 or 2, got {direction}")));
    }
    let axis = if direction == 1 { &xi.xs } else { &xi.vs };
    if axis.len() < 3 {
        return Err(Error::Construction("finite differences need three grid lines per axis".into()));
    }
    let spacing = ExtensionGrid::new(xi.xs.clone(), xi.vs.clone())?.spacing();
    let values = (0..xi.xs.len())
        .into_par_iter()
        .map(|ix| {
            (0..xi.vs.len())
                .map(|iv| {
                    let k = if direction == 1 { ix } else { iv };
                    let (idx, wts) = fd_weights(axis, k);
                    let here = xi.get(ix, iv)?;
                    let mut d = vec![0.0; here.dim()];
                    for (&j, &c) in idx.iter().zip(&wts) {
                        let s = if direction == 1 { xi.get(j, iv)? } else { xi.get(ix, j)? };
                        for (di, si) in d.iter_mut().zip(s.entries()) {
                            *di += c * si;
                        }
                    }
                    let (x, v) = (xi.xs[ix], xi.vs[iv]);
                    let om = if direction == 1 { w.omega1(x, v) } else { w.omega2(x, v) };
                    let wx = om.apply(here);
                    let r: Vec<f64> = d.iter().zip(wx.entries()).map(|(a, b)| a + b).collect();
                    Some(w.space().norm_kind().vector_norm(&r))
                })
                .collect()
        })
        .collect();
    let warning = (spacing > COARSE_SPACING)
        .then(|| format!("grid spacing {spacing} exceeds {COARSE_SPACING}; finite differences are unreliable"));
    Ok(Residual { values, spacing, warning })
}

/// `|v − f(x)| < 2·spacing` for grid points right of `a`.
pub fn near_graph(p: &ExtensionProblem, x: f64, v: f64, spacing: f64) -> bool {
    p.graph(x).is_some_and(|fx| (v - fx).abs() < 2.0 * spacing)
}

/// `g = p + (f(b) − p(b))` with `p` a Bernstein polynomial of `f` on
/// `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphApprox {
    pub lo: f64,
    pub hi: f64,
    pub degree: usize,
    /// Bernstein coefficients of `g`, i.e. `f(lo + k(hi−lo)/n) + shift`.
    pub coefficients: Vec<f64>,
    pub shift: f64,
    /// `sup|p − f|` on the selection grid.
    pub achieved: f64,
    base: Vec<f64>,
}

pub const MAX_BERNSTEIN_DEGREE: usize = 1 << 14;
/// Points of the grid on which `sup|p − f|` decides the degree.
pub const SELECTION_POINTS: usize = 10_000;

impl GraphApprox {
    pub fn eval(&self, x: f64) -> f64 {
        bernstein_eval(&self.base, &ln_factorials(self.degree), (x - self.lo) / (self.hi - self.lo)) + self.shift
    }

    /// Evaluates at many points, sharing the factorial table.
    pub fn eval_many(&self, xs: &[f64]) -> Vec<f64> {
        let lf = ln_factorials(self.degree);
        xs.par_iter().map(|&x| bernstein_eval(&self.base, &lf, (x - self.lo) / (self.hi - self.lo)) + self.shift).collect()
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(n + 1);
    t.push(0.0);
    for k in 1..=n {
        t.push(t[k - 1] + (k as f64).ln());
    }
    t
}

/// `Σ c_k·C(n,k)·s^k(1−s)^{n−k}`, summing binomial weights outward from the
/// mode until they drop below `1e-18` of the peak.
fn bernstein_eval(c: &[f64], lf: &[f64], s: f64) -> f64 {
    let n = c.len() - 1;
    if n == 0 {
        return c[0];
    }
    if s <= 0.0 {
        return c[0];
    }
    if s >= 1.0 {
        return c[n];
    }
    let m = (((n + 1) as f64 * s).floor() as usize).min(n);
    let (ls, lq) = (s.ln(), (-s).ln_1p());
    let wm = (lf[n] - lf[m] - lf[n - m] + m as f64 * ls + (n - m) as f64 * lq).exp();
    let ratio = s / (1.0 - s);
    let cutoff = 1e-18 * wm;
    let (mut num, mut den) = (wm * c[m], wm);
    let mut w = wm;
    for k in m..n {
        w *= (n - k) as f64 / (k + 1) as f64 * ratio;
        if w < cutoff {
            break;
        }
        num += w * c[k + 1];
        den += w;
    }
    w = wm;
    for k in (1..=m).rev() {
        w *= k as f64 / (n - k + 1) as f64 / ratio;
        if w < cutoff {
            break;
        }
        num += w * c[k - 1];
        den += w;
    }
    num / den
}

/// Least degree in `{0, 1, 2, 4, …, 2¹⁴}` whose Bernstein polynomial is within
/// `tube/2` of `f` on a `10⁴`-point grid, shifted to interpolate at `b`.
pub fn polynomial_graph_approx(f: &ScalarPath, lo: f64, hi: f64, b: f64, tube: f64) -> Result<GraphApprox> {
    let span = Interval::new(lo, hi)?;
    span.require_finite()?;
    if !(lo < hi) || !span.contains(b) || !(tube > 0.0) {
        return Err(Error::Construction(format!("need lo < hi, b in [lo, hi] and tube > 0; got [{lo}, {hi}], {b}, {tube}")));
    }
    let grid: Vec<f64> = (0..SELECTION_POINTS).map(|k| lo + (hi - lo) * k as f64 / (SELECTION_POINTS - 1) as f64).collect();
    let fg: Vec<f64> = grid.iter().map(|&x| f.value(x)).collect();
    let mut degree = 0usize;
    let mut achieved = f64::INFINITY;
    loop {
        let base: Vec<f64> = if degree == 0 {
            vec![f.value(0.5 * (lo + hi))]
        } else {
            (0..=degree).map(|k| f.value(lo + (hi - lo) * k as f64 / degree as f64)).collect()
        };
        let probe = GraphApprox { lo, hi, degree, coefficients: Vec::new(), shift: 0.0, achieved: 0.0, base };
        let err = probe.eval_many(&grid).iter().zip(&fg).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        achieved = achieved.min(err);
        if err < 0.5 * tube {
            let shift = f.value(b) - probe.eval(b);
            let coefficients = probe.base.iter().map(|c| c + shift).collect();
            return Ok(GraphApprox { lo, hi, degree, coefficients, shift, achieved: err, base: probe.base });
        }
        if degree >= MAX_BERNSTEIN_DEGREE {
            return Err(Error::ApproximationFailure { degree, achieved });
        }
        degree = if degree == 0 { 1 } else { 2 * degree };
    }
}
