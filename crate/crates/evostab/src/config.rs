//! Scenario configuration: JSON in, validated typed parameters out.
//!
//! Validation walks the whole document and collects every problem before
//! anything is computed.

use std::fmt;
use std::str::FromStr;

use evostab_core::calculus::Interval;
use evostab_core::expr::Expr;
use evostab_core::operators::NormKind;
use serde_json::{Map, Value};

use crate::builtins;
use crate::HarnessError;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    Evolve,
    Certify,
    Verify,
    Substitution,
    Transport,
    SineCurve,
    Extend,
    CovCheck,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Evolve,
        Kind::Certify,
        Kind::Verify,
        Kind::Substitution,
        Kind::Transport,
        Kind::SineCurve,
        Kind::Extend,
        Kind::CovCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Evolve => "evolve",
            Kind::Certify => "certify",
            Kind::Verify => "verify",
            Kind::Substitution => "substitution",
            Kind::Transport => "transport",
            Kind::SineCurve => "sine-curve",
            Kind::Extend => "extend",
            Kind::CovCheck => "cov-check",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Kind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown scenario kind {s:?}"))
    }
}

/// Square matrix of expressions over the given variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixExpr {
    pub dim: usize,
    /// Row-major.
    pub entries: Vec<Expr>,
}

impl MatrixExpr {
    pub fn eval(&self, vars: &[f64]) -> Vec<f64> {
        self.entries.iter().map(|e| e.eval(vars)).collect()
    }

    /// Entrywise partial derivative, if every entry has one.
    pub fn derivative(&self, var: usize) -> Option<MatrixExpr> {
        let entries = self.entries.iter().map(|e| e.derivative(var)).collect::<Option<Vec<_>>>()?;
        Some(MatrixExpr { dim: self.dim, entries })
    }
}

/// Inner path `f` or a curve component.
#[derive(Debug, Clone, PartialEq)]
pub enum PathSpec {
    Expr { expr: Expr, breakpoints: Vec<f64> },
    /// `sin`, `sin2`, `sin_sq`, `sawtooth`, `constant` (mapped onto `J`),
    /// `abs`, `identity`.
    Builtin(String),
}

pub const PATH_BUILTINS: [&str; 7] = ["sin", "sin2", "sin_sq", "sawtooth", "constant", "abs", "identity"];

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    /// The 2×2 field with monotone entries `2·atan t`, `√(t+1) − √t`,
    /// `−1/(1+t²)`, `1 + e^{−t}`.
    Example39,
    Identity(usize),
    Constant(MatrixExpr),
    /// `k` times the plane rotation generator.
    Rotation(f64),
    Matrix { m: MatrixExpr, t_breakpoints: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Coefficient { m: MatrixExpr, domain: Interval, breakpoints: Vec<f64> },
    Separable { field: FieldSpec, f: PathSpec, i: Interval, j: Interval },
}

impl SystemSpec {
    pub fn dim(&self) -> usize {
        match self {
            SystemSpec::Coefficient { m, .. } => m.dim,
            SystemSpec::Separable { field, .. } => match field {
                FieldSpec::Example39 | FieldSpec::Rotation(_) => 2,
                FieldSpec::Identity(r) => *r,
                FieldSpec::Constant(m) | FieldSpec::Matrix { m, .. } => m.dim,
            },
        }
    }

    /// Time domain of the assembled coefficient.
    pub fn domain(&self) -> Interval {
        match self {
            SystemSpec::Coefficient { domain, .. } => *domain,
            SystemSpec::Separable { i, .. } => *i,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConnectionKind {
    Zero(usize),
    /// `g(x, u) = R(k·x·u)`.
    RotationGauge(f64),
    /// Upper triangular gauge scaled by `eps`; not orthogonal.
    ShearGauge(f64),
    Forms { omega1: MatrixExpr, omega2: MatrixExpr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionSpec {
    pub kind: ConnectionKind,
    pub m: Interval,
    pub j: Interval,
}

impl ConnectionSpec {
    pub fn dim(&self) -> usize {
        match &self.kind {
            ConnectionKind::Zero(r) => *r,
            ConnectionKind::RotationGauge(_) | ConnectionKind::ShearGauge(_) => 2,
            ConnectionKind::Forms { omega1, .. } => omega1.dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsSpec {
    pub b1: f64,
    pub b2: f64,
    pub b12: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pairs {
    Explicit(Vec<(f64, f64)>),
    Random(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub gamma1: PathSpec,
    pub gamma2: PathSpec,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    pub nv: usize,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Evolve {
        system: SystemSpec,
        window: Option<Interval>,
        pairs: Pairs,
        /// Scalar closed form in `(s, t)` for one-dimensional systems.
        exact: Option<Expr>,
        /// Threshold for `max_{s≤t} ‖X(t,s)‖`.
        max_norm_bound: Option<f64>,
    },
    Certify {
        system: SystemSpec,
        window: Option<Interval>,
        analytic_sup: Option<f64>,
        horizons: Vec<f64>,
    },
    Verify {
        system: SystemSpec,
        window: Option<Interval>,
        analytic_sup: Option<f64>,
        pairs: Pairs,
        f_family: bool,
        horizons: Vec<f64>,
    },
    Substitution {
        b: MatrixExpr,
        b_domain: Interval,
        f: PathSpec,
        f_domain: Interval,
        pairs: Pairs,
    },
    Transport {
        connection: ConnectionSpec,
        bounds: Option<BoundsSpec>,
        resolution: usize,
        curves: Vec<CurveSpec>,
    },
    SineCurve {
        connection: ConnectionSpec,
        bounds: Option<BoundsSpec>,
        resolution: usize,
        a: f64,
        b_list: Vec<f64>,
        v: Vec<f64>,
        floor: f64,
    },
    Extend {
        connection: ConnectionSpec,
        f: Expr,
        a: f64,
        v0: f64,
        v1: f64,
        x_ref: f64,
        seed_vector: Vec<f64>,
        grid: GridSpec,
    },
    CovCheck {
        y: Vec<Expr>,
        y_breakpoints: Vec<f64>,
        f: PathSpec,
        f_domain: Interval,
        j: Option<Interval>,
        pairs: Pairs,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: Kind,
    pub seed: u64,
    pub tol: f64,
    pub norm: NormKind,
    pub builtin: Option<String>,
    pub params: Params,
    /// The effective document after built-in expansion and overrides.
    pub document: Value,
}

/// Command-line overrides applied on top of the document.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

const COMMON_KEYS: [&str; 5] = ["kind", "builtin", "seed", "tol", "norm"];

fn kind_keys(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Evolve => &["system", "window", "pairs", "random_pairs", "exact", "max_norm_bound"],
        Kind::Certify => &["system", "window", "analytic_sup", "horizons"],
        Kind::Verify => &["system", "window", "analytic_sup", "pairs", "random_pairs", "f_family", "horizons"],
        Kind::Substitution => &["b", "b_domain", "f", "f_domain", "pairs", "random_pairs"],
        Kind::Transport => &["connection", "bounds", "resolution", "curves"],
        Kind::SineCurve => &["connection", "bounds", "resolution", "a", "b_list", "v", "floor"],
        Kind::Extend => &["connection", "f", "a", "v0", "v1", "x_ref", "seed_vector", "grid"],
        Kind::CovCheck => &["y", "y_breakpoints", "f", "f_domain", "j", "pairs", "random_pairs"],
    }
}

/// Parses and validates a scenario document for `kind`.
pub fn parse_scenario(kind: Kind, text: &str, overrides: Overrides) -> Result<Scenario, HarnessError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| HarnessError::Validation(vec![format!("config: {e}")]))?;
    scenario_from_value(kind, doc, overrides)
}

pub fn scenario_from_value(kind: Kind, doc: Value, overrides: Overrides) -> Result<Scenario, HarnessError> {
    let mut v = Validator::default();
    let Value::Object(user) = doc else {
        return Err(HarnessError::Validation(vec!["config: top level must be a JSON object".into()]));
    };
    if let Some(k) = user.get("kind") {
        match k.as_str().map(Kind::from_str) {
            Some(Ok(k)) if k == kind => {}
            Some(Ok(k)) => v.err("kind", format!("config is for {k}, but {kind} was requested")),
            _ => v.err("kind", "expected one of the scenario kind names"),
        }
    }
    // built-in defaults, then the user's keys on top
    let mut merged = Map::new();
    let builtin = match user.get("builtin") {
        None => None,
        Some(Value::String(name)) => match builtins::scenario_defaults(kind, name) {
            Some(Value::Object(defaults)) => {
                merged = defaults;
                Some(name.clone())
            }
            _ => {
                v.err("builtin", format!("no built-in {name:?} for {kind}; available: {}", builtins::names_for(kind).join(", ")));
                None
            }
        },
        Some(_) => {
            v.err("builtin", "expected a string");
            None
        }
    };
    for (k, val) in user {
        merged.insert(k, val);
    }
    merged.insert("kind".into(), Value::String(kind.name().into()));
    if let Some(seed) = overrides.seed {
        merged.insert("seed".into(), Value::from(seed));
    }
    if let Some(tol) = overrides.tol {
        merged.insert("tol".into(), Value::from(tol));
    }
    for key in merged.keys() {
        if !COMMON_KEYS.contains(&key.as_str()) && !kind_keys(kind).contains(&key.as_str()) {
            v.err(key, format!("unknown field for {kind}"));
        }
    }
    let obj = Value::Object(merged);
    let seed = match obj.get("seed") {
        None => 0,
        Some(s) => s.as_u64().unwrap_or_else(|| {
            v.err("seed", "expected a nonnegative integer");
            0
        }),
    };
    let tol = v.opt_num(&obj, "tol", "tol").unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol < 1.0) {
        v.err("tol", format!("must lie in (0, 1), got {tol}"));
    }
    let norm = match obj.get("norm") {
        None => NormKind::Euclidean,
        Some(Value::String(s)) => NormKind::parse(s).unwrap_or_else(|| {
            v.err("norm", format!("unknown norm {s:?}; expected euclidean, one or inf"));
            NormKind::Euclidean
        }),
        Some(_) => {
            v.err("norm", "expected a string");
            NormKind::Euclidean
        }
    };
    let params = v.params(kind, &obj);
    match params {
        Some(params) if v.issues.is_empty() => {
            Ok(Scenario { kind, seed, tol, norm, builtin, params, document: obj })
        }
        _ => Err(HarnessError::Validation(v.issues)),
    }
}

#[derive(Default)]
struct Validator {
    issues: Vec<String>,
}

const T: &[&str] = &["t"];
const TU: &[&str] = &["t", "u"];
const U: &[&str] = &["u"];
const XU: &[&str] = &["x", "u"];
const X: &[&str] = &["x"];
const ST: &[&str] = &["s", "t"];

impl Validator {
    fn err(&mut self, path: &str, msg: impl fmt::Display) {
        self.issues.push(format!("{path}: {msg}"));
    }

    fn get<'v>(&mut self, obj: &'v Value, key: &str, path: &str) -> Option<&'v Value> {
        let got = obj.get(key);
        if got.is_none() {
            self.err(path, "missing");
        }
        got
    }

    fn num_value(&mut self, val: &Value, path: &str) -> Option<f64> {
        match val {
            Value::Number(n) => n.as_f64(),
            // constant expressions such as "exp(2)" or "-1e-4"
            Value::String(s) => match Expr::parse(s, &[]) {
                Ok(e) => {
                    let x = e.eval(&[]);
                    if x.is_finite() {
                        Some(x)
                    } else {
                        self.err(path, format!("{s:?} is not finite"));
                        None
                    }
                }
                Err(e) => {
                    self.err(path, e);
                    None
                }
            },
            _ => {
                self.err(path, "expected a number");
                None
            }
        }
    }

    fn num(&mut self, obj: &Value, key: &str, path: &str) -> Option<f64> {
        let val = self.get(obj, key, path)?;
        self.num_value(val, path)
    }

    fn opt_num(&mut self, obj: &Value, key: &str, path: &str) -> Option<f64> {
        obj.get(key).and_then(|val| self.num_value(val, path))
    }

    fn count(&mut self, obj: &Value, key: &str, path: &str, default: usize) -> Option<usize> {
        match obj.get(key) {
            None => Some(default),
            Some(val) => match val.as_u64() {
                Some(n) if n > 0 => Some(n as usize),
                _ => {
                    self.err(path, "expected a positive integer");
                    None
                }
            },
        }
    }

    fn flag(&mut self, obj: &Value, key: &str, path: &str) -> bool {
        match obj.get(key) {
            None => false,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                self.err(path, "expected true or false");
                false
            }
        }
    }

    fn num_list(&mut self, val: &Value, path: &str) -> Option<Vec<f64>> {
        let Value::Array(items) = val else {
            self.err(path, "expected an array of numbers");
            return None;
        };
        let out: Vec<Option<f64>> = items.iter().enumerate().map(|(k, x)| self.num_value(x, &format!("{path}[{k}]"))).collect();
        out.into_iter().collect()
    }

    fn opt_num_list(&mut self, obj: &Value, key: &str, path: &str) -> Vec<f64> {
        obj.get(key).and_then(|val| self.num_list(val, path)).unwrap_or_default()
    }

    fn interval_value(&mut self, val: &Value, path: &str) -> Option<Interval> {
        let xs = self.num_list(val, path)?;
        match xs[..] {
            [lo, hi] => match Interval::new(lo, hi) {
                Ok(iv) if iv.is_finite() => Some(iv),
                _ => {
                    self.err(path, format!("need finite lo ≤ hi, got [{lo}, {hi}]"));
                    None
                }
            },
            _ => {
                self.err(path, "expected [lo, hi]");
                None
            }
        }
    }

    fn interval(&mut self, obj: &Value, key: &str, path: &str) -> Option<Interval> {
        let val = self.get(obj, key, path)?;
        self.interval_value(val, path)
    }

    fn opt_interval(&mut self, obj: &Value, key: &str, path: &str) -> Option<Option<Interval>> {
        match obj.get(key) {
            None => Some(None),
            Some(val) => self.interval_value(val, path).map(Some),
        }
    }

    fn expr_value(&mut self, val: &Value, path: &str, vars: &[&str]) -> Option<Expr> {
        match val {
            Value::Number(n) => n.as_f64().map(Expr::Num),
            Value::String(s) => match Expr::parse(s, vars) {
                Ok(e) => Some(e),
                Err(e) => {
                    self.err(path, format!("{e} (variables: {})", vars.join(", ")));
                    None
                }
            },
            _ => {
                self.err(path, "expected an expression string or a number");
                None
            }
        }
    }

    fn matrix(&mut self, val: &Value, path: &str, vars: &[&str]) -> Option<MatrixExpr> {
        let Value::Array(rows) = val else {
            self.err(path, "expected an array of rows");
            return None;
        };
        let r = rows.len();
        if r == 0 {
            self.err(path, "matrix must have at least one row");
            return None;
        }
        let mut entries = Vec::with_capacity(r * r);
        let mut ok = true;
        for (i, row) in rows.iter().enumerate() {
            match row {
                Value::Array(cells) if cells.len() == r => {
                    for (k, cell) in cells.iter().enumerate() {
                        match self.expr_value(cell, &format!("{path}[{i}][{k}]"), vars) {
                            Some(e) => entries.push(e),
                            None => ok = false,
                        }
                    }
                }
                _ => {
                    self.err(&format!("{path}[{i}]"), format!("expected a row of {r} entries"));
                    ok = false;
                }
            }
        }
        ok.then_some(MatrixExpr { dim: r, entries })
    }

    fn path_spec(&mut self, val: &Value, path: &str, vars: &[&str]) -> Option<PathSpec> {
        match val {
            Value::Object(o) => {
                if let Some(name) = o.get("builtin") {
                    return match name.as_str() {
                        Some(n) if PATH_BUILTINS.contains(&n) => Some(PathSpec::Builtin(n.to_string())),
                        _ => {
                            self.err(&format!("{path}.builtin"), format!("expected one of {}", PATH_BUILTINS.join(", ")));
                            None
                        }
                    };
                }
                let expr = self.get(val, "expr", &format!("{path}.expr"))?;
                let expr = self.expr_value(expr, &format!("{path}.expr"), vars)?;
                let breakpoints = self.opt_num_list(val, "breakpoints", &format!("{path}.breakpoints"));
                Some(PathSpec::Expr { expr, breakpoints })
            }
            _ => self.expr_value(val, path, vars).map(|expr| PathSpec::Expr { expr, breakpoints: Vec::new() }),
        }
    }

    fn field(&mut self, val: &Value, path: &str) -> Option<FieldSpec> {
        match val {
            Value::String(s) if s == "example39" => Some(FieldSpec::Example39),
            Value::Object(o) => match o.get("builtin").and_then(Value::as_str) {
                Some("example39") => Some(FieldSpec::Example39),
                Some("identity") => self.count(val, "dim", &format!("{path}.dim"), 1).map(FieldSpec::Identity),
                Some("constant") => {
                    let m = self.get(val, "matrix", &format!("{path}.matrix"))?;
                    self.matrix(m, &format!("{path}.matrix"), &[]).map(FieldSpec::Constant)
                }
                Some("rotation") => {
                    let k = self.opt_num(val, "rate", &format!("{path}.rate")).unwrap_or(1.0);
                    Some(FieldSpec::Rotation(k))
                }
                Some(other) => {
                    self.err(&format!("{path}.builtin"), format!("unknown field {other:?}; expected example39, identity, constant or rotation"));
                    None
                }
                None => {
                    let m = self.get(val, "matrix", &format!("{path}.matrix"))?;
                    let m = self.matrix(m, &format!("{path}.matrix"), TU)?;
                    let t_breakpoints = self.opt_num_list(val, "t_breakpoints", &format!("{path}.t_breakpoints"));
                    Some(FieldSpec::Matrix { m, t_breakpoints })
                }
            },
            Value::String(s) if s == "identity" => Some(FieldSpec::Identity(1)),
            _ => {
                self.err(path, "expected \"example39\", \"identity\" or an object");
                None
            }
        }
    }

    fn system(&mut self, obj: &Value, path: &str) -> Option<SystemSpec> {
        let sys = self.get(obj, "system", path)?;
        if sys.get("coefficient").is_some() {
            let m = self.matrix(&sys["coefficient"], &format!("{path}.coefficient"), T);
            let domain = self.interval(sys, "domain", &format!("{path}.domain"));
            let breakpoints = self.opt_num_list(sys, "breakpoints", &format!("{path}.breakpoints"));
            return Some(SystemSpec::Coefficient { m: m?, domain: domain?, breakpoints });
        }
        let field = self.get(sys, "field", &format!("{path}.field")).and_then(|f| self.field(f, &format!("{path}.field")));
        let f = self.get(sys, "f", &format!("{path}.f")).and_then(|f| self.path_spec(f, &format!("{path}.f"), T));
        let i = self.interval(sys, "i", &format!("{path}.i"));
        let j = self.interval(sys, "j", &format!("{path}.j"));
        Some(SystemSpec::Separable { field: field?, f: f?, i: i?, j: j? })
    }

    fn pairs(&mut self, obj: &Value, default_random: Option<usize>) -> Option<Pairs> {
        match (obj.get("pairs"), obj.get("random_pairs")) {
            (Some(_), Some(_)) => {
                self.err("pairs", "give either pairs or random_pairs, not both");
                None
            }
            (Some(Value::Array(items)), None) => {
                let mut out = Vec::new();
                for (k, item) in items.iter().enumerate() {
                    let p = format!("pairs[{k}]");
                    match self.num_list(item, &p).as_deref() {
                        Some(&[s, t]) => out.push((s, t)),
                        Some(_) => self.err(&p, "expected [s, t]"),
                        None => {}
                    }
                }
                Some(Pairs::Explicit(out))
            }
            (Some(_), None) => {
                self.err("pairs", "expected an array of [s, t]");
                None
            }
            (None, Some(n)) => match n.as_u64() {
                Some(n) => Some(Pairs::Random(n as usize)),
                None => {
                    self.err("random_pairs", "expected a nonnegative integer");
                    None
                }
            },
            (None, None) => match default_random {
                Some(n) => Some(Pairs::Random(n)),
                None => {
                    self.err("pairs", "missing (or give random_pairs)");
                    None
                }
            },
        }
    }

    fn connection(&mut self, obj: &Value) -> Option<ConnectionSpec> {
        let c = self.get(obj, "connection", "connection")?;
        let m = self.interval(c, "m", "connection.m");
        let j = self.interval(c, "j", "connection.j");
        let kind = match c.get("builtin").map(|b| b.as_str()) {
            Some(Some("zero")) => self.count(c, "dim", "connection.dim", 2).map(ConnectionKind::Zero),
            Some(Some("rotation-gauge")) => Some(ConnectionKind::RotationGauge(self.opt_num(c, "k", "connection.k").unwrap_or(1.0))),
            Some(Some("shear-gauge")) => Some(ConnectionKind::ShearGauge(self.opt_num(c, "eps", "connection.eps").unwrap_or(1.0))),
            Some(_) => {
                self.err("connection.builtin", "expected zero, rotation-gauge or shear-gauge");
                None
            }
            None => {
                let o1 = self.get(c, "omega1", "connection.omega1").and_then(|m| self.matrix(m, "connection.omega1", XU));
                let o2 = self.get(c, "omega2", "connection.omega2").and_then(|m| self.matrix(m, "connection.omega2", XU));
                match (o1, o2) {
                    (Some(omega1), Some(omega2)) if omega1.dim == omega2.dim => Some(ConnectionKind::Forms { omega1, omega2 }),
                    (Some(_), Some(_)) => {
                        self.err("connection.omega2", "must have the same size as omega1");
                        None
                    }
                    _ => None,
                }
            }
        };
        Some(ConnectionSpec { kind: kind?, m: m?, j: j? })
    }

    fn bounds(&mut self, obj: &Value) -> Option<Option<BoundsSpec>> {
        let Some(b) = obj.get("bounds") else { return Some(None) };
        let b1 = self.num(b, "b1", "bounds.b1");
        let b2 = self.num(b, "b2", "bounds.b2");
        let b12 = self.num(b, "b12", "bounds.b12");
        let spec = BoundsSpec { b1: b1?, b2: b2?, b12: b12? };
        for (name, x) in [("b1", spec.b1), ("b2", spec.b2), ("b12", spec.b12)] {
            if x < 0.0 {
                self.err(&format!("bounds.{name}"), "must be nonnegative");
            }
        }
        Some(Some(spec))
    }

    fn params(&mut self, kind: Kind, obj: &Value) -> Option<Params> {
        match kind {
            Kind::Evolve => {
                let system = self.system(obj, "system");
                let window = self.opt_interval(obj, "window", "window");
                let pairs = self.pairs(obj, Some(20));
                let exact = obj.get("exact").and_then(|e| self.expr_value(e, "exact", ST));
                let max_norm_bound = self.opt_num(obj, "max_norm_bound", "max_norm_bound");
                if let (Some(sys), Some(_)) = (&system, &exact) {
                    if sys.dim() != 1 {
                        self.err("exact", "a scalar closed form needs a one-dimensional system");
                    }
                }
                Some(Params::Evolve { system: system?, window: window?, pairs: pairs?, exact, max_norm_bound })
            }
            Kind::Certify => {
                let system = self.system(obj, "system");
                let window = self.opt_interval(obj, "window", "window");
                let analytic_sup = self.opt_num(obj, "analytic_sup", "analytic_sup");
                let horizons = self.opt_num_list(obj, "horizons", "horizons");
                let system = system?;
                self.require_separable(&system);
                Some(Params::Certify { system, window: window?, analytic_sup, horizons })
            }
            Kind::Verify => {
                let system = self.system(obj, "system");
                let window = self.opt_interval(obj, "window", "window");
                let analytic_sup = self.opt_num(obj, "analytic_sup", "analytic_sup");
                let pairs = self.pairs(obj, Some(100));
                let f_family = self.flag(obj, "f_family", "f_family");
                let horizons = self.opt_num_list(obj, "horizons", "horizons");
                let system = system?;
                self.require_separable(&system);
                Some(Params::Verify { system, window: window?, analytic_sup, pairs: pairs?, f_family, horizons })
            }
            Kind::Substitution => {
                let b = self.get(obj, "b", "b").and_then(|m| self.matrix(m, "b", U));
                let b_domain = self.interval(obj, "b_domain", "b_domain");
                let f = self.get(obj, "f", "f").and_then(|f| self.path_spec(f, "f", T));
                let f_domain = self.interval(obj, "f_domain", "f_domain");
                let pairs = self.pairs(obj, Some(10));
                Some(Params::Substitution { b: b?, b_domain: b_domain?, f: f?, f_domain: f_domain?, pairs: pairs? })
            }
            Kind::Transport => {
                let connection = self.connection(obj);
                let bounds = self.bounds(obj);
                let resolution = self.count(obj, "resolution", "resolution", 32);
                let curves = self.get(obj, "curves", "curves").and_then(|c| self.curves(c));
                Some(Params::Transport { connection: connection?, bounds: bounds?, resolution: resolution?, curves: curves? })
            }
            Kind::SineCurve => {
                let connection = self.connection(obj);
                let bounds = self.bounds(obj);
                let resolution = self.count(obj, "resolution", "resolution", 32);
                let a = self.opt_num(obj, "a", "a").unwrap_or(-1.0);
                let b_list = self.get(obj, "b_list", "b_list").and_then(|b| self.num_list(b, "b_list"));
                let v = self.get(obj, "v", "v").and_then(|b| self.num_list(b, "v"));
                let floor = self.opt_num(obj, "floor", "floor").unwrap_or(evostab_core::transport::DEFAULT_SINE_FLOOR);
                if let (Some(c), Some(v)) = (&connection, &v) {
                    if c.dim() != v.len() {
                        self.err("v", format!("expected {} entries to match the connection", c.dim()));
                    }
                }
                if !(a < 0.0) {
                    self.err("a", format!("must be negative, got {a}"));
                }
                // the curve (t, sin(1/t)) on [a, b] must stay inside M×J
                if let Some(c) = &connection {
                    if !c.j.contains_interval(&Interval::closed(-1.0, 1.0)) {
                        self.err("connection.j", "must contain [-1, 1], the range of sin(1/t)");
                    }
                    if !c.m.contains(a) {
                        self.err("connection.m", format!("must contain a = {a}"));
                    }
                    if let Some(bs) = &b_list {
                        if let Some(b) = bs.iter().copied().find(|&b| !(b > a && b < 0.0 && c.m.contains(b))) {
                            self.err("b_list", format!("{b} must lie in (a, 0) inside connection.m"));
                        }
                    }
                }
                Some(Params::SineCurve {
                    connection: connection?,
                    bounds: bounds?,
                    resolution: resolution?,
                    a,
                    b_list: b_list?,
                    v: v?,
                    floor,
                })
            }
            Kind::Extend => {
                let connection = self.connection(obj);
                let f = self.get(obj, "f", "f").and_then(|f| self.expr_value(f, "f", X));
                let a = self.num(obj, "a", "a");
                let v0 = self.num(obj, "v0", "v0");
                let v1 = self.num(obj, "v1", "v1");
                let x_ref = self.num(obj, "x_ref", "x_ref");
                let seed_vector = self.get(obj, "seed_vector", "seed_vector").and_then(|b| self.num_list(b, "seed_vector"));
                let grid = self.get(obj, "grid", "grid").and_then(|g| self.grid(g));
                if let (Some(c), Some(s)) = (&connection, &seed_vector) {
                    if c.dim() != s.len() {
                        self.err("seed_vector", format!("expected {} entries to match the connection", c.dim()));
                    }
                }
                Some(Params::Extend {
                    connection: connection?,
                    f: f?,
                    a: a?,
                    v0: v0?,
                    v1: v1?,
                    x_ref: x_ref?,
                    seed_vector: seed_vector?,
                    grid: grid?,
                })
            }
            Kind::CovCheck => {
                let y = match self.get(obj, "y", "y") {
                    Some(Value::Array(items)) if !items.is_empty() => {
                        let es: Vec<Option<Expr>> =
                            items.iter().enumerate().map(|(k, e)| self.expr_value(e, &format!("y[{k}]"), U)).collect();
                        es.into_iter().collect::<Option<Vec<_>>>()
                    }
                    Some(_) => {
                        self.err("y", "expected a nonempty array of expressions in u");
                        None
                    }
                    None => None,
                };
                let y_breakpoints = self.opt_num_list(obj, "y_breakpoints", "y_breakpoints");
                let f = self.get(obj, "f", "f").and_then(|f| self.path_spec(f, "f", T));
                let f_domain = self.interval(obj, "f_domain", "f_domain");
                let j = self.opt_interval(obj, "j", "j");
                let pairs = self.pairs(obj, Some(10));
                Some(Params::CovCheck { y: y?, y_breakpoints, f: f?, f_domain: f_domain?, j: j?, pairs: pairs? })
            }
        }
    }

    fn require_separable(&mut self, sys: &SystemSpec) {
        if matches!(sys, SystemSpec::Coefficient { .. }) {
            self.err("system", "certificates need a separable system {field, f, i, j}");
        }
    }

    fn curves(&mut self, val: &Value) -> Option<Vec<CurveSpec>> {
        let Value::Array(items) = val else {
            self.err("curves", "expected an array of curves");
            return None;
        };
        let out: Vec<Option<CurveSpec>> = items
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let p = format!("curves[{k}]");
                let g1 = self.get(c, "gamma1", &format!("{p}.gamma1")).and_then(|g| self.path_spec(g, &format!("{p}.gamma1"), T));
                let g2 = self.get(c, "gamma2", &format!("{p}.gamma2")).and_then(|g| self.path_spec(g, &format!("{p}.gamma2"), T));
                let a = self.num(c, "a", &format!("{p}.a"));
                let b = self.num(c, "b", &format!("{p}.b"));
                if let (Some(a), Some(b)) = (a, b) {
                    if a > b {
                        self.err(&p, format!("need a ≤ b, got {a} > {b}"));
                    }
                }
                Some(CurveSpec { gamma1: g1?, gamma2: g2?, a: a?, b: b? })
            })
            .collect();
        out.into_iter().collect()
    }

    fn grid(&mut self, g: &Value) -> Option<GridSpec> {
        let x_lo = self.num(g, "x_lo", "grid.x_lo");
        let x_hi = self.num(g, "x_hi", "grid.x_hi");
        let nx = self.count(g, "nx", "grid.nx", 60);
        let nv = self.count(g, "nv", "grid.nv", 40);
        let floor = self.opt_num(g, "floor", "grid.floor").unwrap_or(evostab_core::extension::DEFAULT_X_FLOOR);
        Some(GridSpec { x_lo: x_lo?, x_hi: x_hi?, nx: nx?, nv: nv?, floor })
    }
}
