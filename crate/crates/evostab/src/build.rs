//! Turns validated specs into library objects.

use std::sync::Arc;

use evostab_core::calculus::{Interval, OperatorField, ScalarPath};
use evostab_core::evolution::CoefficientPath;
use evostab_core::expr::Expr;
use evostab_core::operators::{NormKind, Operator, Space};
use evostab_core::stability::{assemble_a, monotone_entries_field, standard_f_family, SeparableSystem};
use evostab_core::transport::ConnectionForm;
use evostab_core::{Error, Result};

use crate::config::{ConnectionKind, ConnectionSpec, FieldSpec, MatrixExpr, PathSpec, SystemSpec};

/// Points per axis at which expression matrices are checked for finiteness.
const FINITENESS_SAMPLES: usize = 257;

fn operator(space: Space, m: &MatrixExpr, vars: &[f64]) -> Operator {
    Operator::new(space, m.eval(vars)).unwrap_or_else(|e| panic!("expression matrix at {vars:?}: {e}"))
}

fn grid(iv: Interval, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |k| iv.lo() + iv.length() * k as f64 / n as f64)
}

/// Rejects expression matrices that are not finite on a sample grid, so that
/// evaluation inside the solvers cannot hit a non-finite entry at a sampled
/// point.
fn check_finite(what: &str, m: &MatrixExpr, axes: &[Interval]) -> Result<()> {
    let n = if axes.len() == 1 { FINITENESS_SAMPLES * 16 } else { FINITENESS_SAMPLES };
    let bad = match axes {
        [a] => grid(*a, n).find(|&x| m.eval(&[x]).iter().any(|v| !v.is_finite())).map(|x| vec![x]),
        [a, b] => grid(*a, n)
            .flat_map(|x| grid(*b, n).map(move |y| (x, y)))
            .find(|&(x, y)| m.eval(&[x, y]).iter().any(|v| !v.is_finite()))
            .map(|(x, y)| vec![x, y]),
        _ => None,
    };
    match bad {
        Some(at) => Err(Error::Construction(format!("{what} is not finite at {at:?}"))),
        None => Ok(()),
    }
}

pub fn space(norm: NormKind, dim: usize) -> Space {
    Space::with_norm(dim, norm)
}

fn expr_path(expr: &Expr, domain: Interval, breakpoints: &[f64]) -> ScalarPath {
    let e = expr.clone();
    let path = ScalarPath::new(domain, move |t| e.eval(&[t])).with_breakpoints(breakpoints.to_vec());
    match expr.derivative(0) {
        Some(d) => path.with_derivative(move |t| d.eval(&[t])),
        None => path,
    }
}

/// `j` is needed by the built-ins that are mapped onto `J`.
pub fn path(spec: &PathSpec, domain: Interval, j: Option<Interval>) -> Result<ScalarPath> {
    match spec {
        PathSpec::Expr { expr, breakpoints } => Ok(expr_path(expr, domain, breakpoints)),
        PathSpec::Builtin(name) => match name.as_str() {
            "abs" => Ok(ScalarPath::new(domain, f64::abs).with_derivative(f64::signum).with_breakpoints(vec![0.0])),
            "identity" => Ok(ScalarPath::identity(domain)),
            other => {
                let j = j.ok_or_else(|| Error::Construction(format!("path {other:?} needs an interval J to map onto")))?;
                standard_f_family(domain, j)
                    .into_iter()
                    .find(|(n, _)| n == other)
                    .map(|(_, p)| p)
                    .ok_or_else(|| Error::Construction(format!("unknown path {other:?}")))
            }
        },
    }
}

pub fn field(spec: &FieldSpec, norm: NormKind, i: Interval, j: Interval) -> Result<OperatorField> {
    Ok(match spec {
        FieldSpec::Example39 => monotone_entries_field(space(norm, 2)),
        FieldSpec::Identity(r) => OperatorField::constant(Operator::identity(space(norm, *r))),
        FieldSpec::Constant(m) => OperatorField::constant(operator(space(norm, m.dim), m, &[])),
        FieldSpec::Rotation(k) => OperatorField::constant(Operator::rotation_generator(space(norm, 2)).scale(*k)),
        FieldSpec::Matrix { m, t_breakpoints } => {
            check_finite("system.field.matrix", m, &[i, j])?;
            let sp = space(norm, m.dim);
            let mm = Arc::new(m.clone());
            let mut f = OperatorField::new(sp, move |t, u| operator(sp, &mm, &[t, u]));
            if !m.entries.iter().any(|e| e.depends_on(1)) {
                f = f.mark_u_independent();
            }
            if let Some(d) = m.derivative(0) {
                f = f.with_partial_t(move |t, u| operator(sp, &d, &[t, u]));
            }
            f.with_t_breakpoints(t_breakpoints.clone())
        }
    })
}

pub enum System {
    Coefficient(CoefficientPath),
    Separable(SeparableSystem),
}

impl System {
    pub fn coefficient(&self) -> Result<CoefficientPath> {
        match self {
            System::Coefficient(a) => Ok(a.clone()),
            System::Separable(s) => assemble_a(s),
        }
    }

    pub fn separable(&self) -> Option<&SeparableSystem> {
        match self {
            System::Separable(s) => Some(s),
            System::Coefficient(_) => None,
        }
    }
}

pub fn system(spec: &SystemSpec, norm: NormKind) -> Result<System> {
    match spec {
        SystemSpec::Coefficient { m, domain, breakpoints } => {
            check_finite("system.coefficient", m, &[*domain])?;
            let sp = space(norm, m.dim);
            let mm = m.clone();
            Ok(System::Coefficient(
                CoefficientPath::new(sp, *domain, move |t| operator(sp, &mm, &[t])).with_breakpoints(breakpoints.clone()),
            ))
        }
        SystemSpec::Separable { field: fs, f, i, j } => {
            let g = field(fs, norm, *i, *j)?;
            let f = path(f, *i, Some(*j))?;
            Ok(System::Separable(SeparableSystem::new(g, f, *i, *j)?))
        }
    }
}

/// Matrix of expressions in one variable as a coefficient path.
pub fn matrix_path(m: &MatrixExpr, norm: NormKind, domain: Interval) -> Result<CoefficientPath> {
    check_finite("b", m, &[domain])?;
    let sp = space(norm, m.dim);
    let mm = m.clone();
    Ok(CoefficientPath::new(sp, domain, move |u| operator(sp, &mm, &[u])))
}

/// Upper triangular gauge
/// `g(x, u) = [[e^{0.3εxu}, 0.4ε·sin(x+2u)], [0, e^{ε(0.5u² − 0.2x)}]]`,
/// invertible everywhere and not orthogonal for `ε ≠ 0`.
pub fn shear_gauge(eps: f64) -> impl Fn(f64, f64) -> [f64; 4] + Clone + Send + Sync + 'static {
    move |x, u| [(0.3 * eps * x * u).exp(), 0.4 * eps * (x + 2.0 * u).sin(), 0.0, (eps * (0.5 * u * u - 0.2 * x)).exp()]
}

pub fn shear_gauge_connection(space: Space, m: Interval, j: Interval, eps: f64) -> ConnectionForm {
    let g = shear_gauge(eps);
    let dg1 = move |x: f64, u: f64| {
        [
            0.3 * eps * u * (0.3 * eps * x * u).exp(),
            0.4 * eps * (x + 2.0 * u).cos(),
            0.0,
            -0.2 * eps * (eps * (0.5 * u * u - 0.2 * x)).exp(),
        ]
    };
    let dg2 = move |x: f64, u: f64| {
        [
            0.3 * eps * x * (0.3 * eps * x * u).exp(),
            0.8 * eps * (x + 2.0 * u).cos(),
            0.0,
            eps * u * (eps * (0.5 * u * u - 0.2 * x)).exp(),
        ]
    };
    let op = move |e: [f64; 4]| Operator::new(space, e.to_vec()).expect("finite gauge entries");
    ConnectionForm::gauge(space, m, j, move |x, u| op(g(x, u)), move |x, u| op(dg1(x, u)), move |x, u| op(dg2(x, u)))
}

pub fn connection(spec: &ConnectionSpec, norm: NormKind) -> Result<ConnectionForm> {
    let sp = space(norm, spec.dim());
    Ok(match &spec.kind {
        ConnectionKind::Zero(_) => ConnectionForm::zero(sp, spec.m, spec.j),
        ConnectionKind::RotationGauge(k) => ConnectionForm::rotation_gauge(sp, spec.m, spec.j, *k),
        ConnectionKind::ShearGauge(eps) => shear_gauge_connection(sp, spec.m, spec.j, *eps),
        ConnectionKind::Forms { omega1, omega2 } => {
            check_finite("connection.omega1", omega1, &[spec.m, spec.j])?;
            check_finite("connection.omega2", omega2, &[spec.m, spec.j])?;
            let (o1, o2) = (omega1.clone(), omega2.clone());
            let w = ConnectionForm::new(sp, spec.m, spec.j, move |x, u| operator(sp, &o1, &[x, u]), move |x, u| {
                operator(sp, &o2, &[x, u])
            });
            match omega2.derivative(0) {
                Some(d) => w.with_d1_omega2(move |x, u| operator(sp, &d, &[x, u])),
                None => w,
            }
        }
    })
}
