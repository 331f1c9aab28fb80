//! Named scenarios shipped with the harness. Each expands to a parameter
//! document that user keys may override.

use serde_json::{json, Value};

use crate::config::Kind;

fn example39_system(hi: f64) -> Value {
    json!({"field": "example39", "f": "sin(t)", "i": [0.0, hi], "j": [-1.0, 1.0]})
}

fn intro_cos_system() -> Value {
    json!({"field": {"builtin": "identity", "dim": 1}, "f": "sin(t)", "i": [0.0, 20.0], "j": [-1.0, 1.0]})
}

fn mild_system() -> Value {
    json!({
        "field": {
            "matrix": [
                ["0.1*atan(t)", "0.05*(sqrt(t+1)-sqrt(t))"],
                ["-0.05/(1+t^2)", "0.05*(1+exp(-t))"]
            ],
            "t_breakpoints": [0.0]
        },
        "f": "sin(t)",
        "i": [0.0, 30.0],
        "j": [-1.0, 1.0]
    })
}

fn wiggle(x0: f64, x1: f64, amp: f64, k: f64) -> Value {
    json!({
        "gamma1": format!("{x0} + ({x1} - ({x0}))*t"),
        "gamma2": format!("{amp}*sin({k}*t)"),
        "a": 0.0,
        "b": 1.0
    })
}

fn transport_curves() -> Value {
    Value::Array(vec![
        wiggle(-1.5, 1.5, 0.5, 3.0),
        wiggle(-1.5, 1.5, 0.5, 30.0),
        wiggle(1.0, -2.0, 1.2, 7.0),
        wiggle(1.0, -2.0, 1.2, 70.0),
        wiggle(0.0, 0.0, 1.4, 50.0),
    ])
}

/// Parameter document of a built-in scenario.
pub fn scenario_defaults(kind: Kind, name: &str) -> Option<Value> {
    Some(match (kind, name) {
        (Kind::Evolve, "intro-cos") => json!({
            "system": {"coefficient": [["cos(t)"]], "domain": [0.0, 20.0]},
            "random_pairs": 100,
            "exact": "exp(sin(t) - sin(s))",
            "max_norm_bound": "exp(2) + 1e-6"
        }),
        // spans of up to 100 accumulate about 1e3·tol of round trip error
        (Kind::Evolve, "example39") => json!({"system": example39_system(100.0), "random_pairs": 20, "tol": 1e-11}),
        (Kind::Evolve, "constant") => json!({
            "system": {"coefficient": [[0.0, 1.0], [-2.0, -0.3]], "domain": [0.0, 10.0]},
            "random_pairs": 20
        }),
        (Kind::Evolve, "rotation") => json!({
            "system": {"coefficient": [[0.0, 2.0], [-2.0, 0.0]], "domain": [0.0, 10.0]},
            "random_pairs": 20,
            "max_norm_bound": 1.000001
        }),
        (Kind::Certify, "intro-cos") => json!({"system": intro_cos_system()}),
        (Kind::Certify, "example39") => json!({"system": example39_system(100.0), "horizons": [25.0, 50.0, 100.0]}),
        (Kind::Certify, "mild-monotone") => json!({"system": mild_system()}),
        (Kind::Verify, "intro-cos") => json!({"system": intro_cos_system(), "random_pairs": 100}),
        (Kind::Verify, "example39") => json!({
            "system": example39_system(100.0),
            "random_pairs": 1000,
            "horizons": [25.0, 50.0, 100.0]
        }),
        (Kind::Verify, "mild-monotone") => json!({"system": mild_system(), "random_pairs": 100, "f_family": true}),
        (Kind::Substitution, "rotation") => json!({
            "b": [[0.0, "u"], ["-u", 0.0]],
            "b_domain": [-10.0, 10.0],
            "f": "t^2",
            "f_domain": [-3.0, 3.0],
            "random_pairs": 10
        }),
        (Kind::Substitution, "oscillating") => json!({
            "b": [["0.3 + 0.2*u", "cos(u)"], ["-0.5*u^2", "0.1 - sin(u)"]],
            "b_domain": [-1.0, 1.0],
            "f": "sin(t)",
            "f_domain": [0.0, 12.0],
            "random_pairs": 10
        }),
        (Kind::Transport, "shear-gauge") => json!({
            "connection": {"builtin": "shear-gauge", "eps": 0.1, "m": [-2.0, 2.0], "j": [-1.5, 1.5]},
            "curves": transport_curves()
        }),
        (Kind::Transport, "rotation") => json!({
            "connection": {"builtin": "rotation-gauge", "k": 0.2, "m": [-2.0, 2.0], "j": [-1.5, 1.5]},
            "curves": transport_curves()
        }),
        (Kind::SineCurve, "sine-curve") => json!({
            "connection": {"builtin": "shear-gauge", "eps": 0.05, "m": [-1.0, 0.0], "j": [-1.0, 1.0]},
            "a": -1.0,
            "b_list": [-0.1, -0.01, -0.001, -0.0001],
            "v": [1.0, 0.5]
        }),
        (Kind::SineCurve, "zero") => json!({
            "connection": {"builtin": "zero", "dim": 2, "m": [-1.0, 0.0], "j": [-1.0, 1.0]},
            "a": -1.0,
            "b_list": [-0.1, -0.01, -0.001, -0.0001],
            "v": [1.0, 0.5]
        }),
        (Kind::Extend, "extension-gauge") => json!({
            "connection": {"builtin": "shear-gauge", "eps": 1.0, "m": [-0.5, 1.0], "j": [-1.0, 1.0]},
            "f": "0.5*sin(1/x)",
            "a": 0.0,
            "v0": -1.0,
            "v1": 1.0,
            "x_ref": -0.5,
            "seed_vector": [1.0, 0.5],
            "grid": {"x_lo": -0.5, "x_hi": 1.0, "nx": 60, "nv": 40}
        }),
        (Kind::Extend, "rotation-gauge") => json!({
            "connection": {"builtin": "rotation-gauge", "k": 1.0, "m": [-0.5, 1.0], "j": [-1.0, 1.0]},
            "f": "0.5*sin(1/x)",
            "a": 0.0,
            "v0": -1.0,
            "v1": 1.0,
            "x_ref": -0.5,
            "seed_vector": [1.0, 0.5],
            "grid": {"x_lo": -0.5, "x_hi": 1.0, "nx": 60, "nv": 40}
        }),
        (Kind::CovCheck, "kinks") => json!({
            "y": ["cos(u)", "u^2 - u"],
            "f": {"builtin": "abs"},
            "f_domain": [-3.0, 3.0],
            "random_pairs": 10
        }),
        (Kind::CovCheck, "oscillating") => json!({
            "y": ["exp(u)", "atan(3*u)"],
            "f": "sin(t)",
            "f_domain": [0.0, 12.0],
            "random_pairs": 10
        }),
        _ => return None,
    })
}

const NAMES: [&str; 12] = [
    "intro-cos",
    "example39",
    "constant",
    "rotation",
    "mild-monotone",
    "oscillating",
    "shear-gauge",
    "sine-curve",
    "zero",
    "extension-gauge",
    "rotation-gauge",
    "kinks",
];

/// Built-in scenario names available for `kind`.
pub fn names_for(kind: Kind) -> Vec<&'static str> {
    NAMES.into_iter().filter(|n| scenario_defaults(kind, n).is_some()).collect()
}

/// Every `(kind, name)` pair with a built-in scenario.
pub fn all() -> Vec<(Kind, &'static str)> {
    Kind::ALL.into_iter().flat_map(|k| names_for(k).into_iter().map(move |n| (k, n))).collect()
}
