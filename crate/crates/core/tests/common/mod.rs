#![allow(dead_code)]

use evostab_core::calculus::Interval;
use evostab_core::evolution::CoefficientPath;
use evostab_core::operators::{Operator, Space};
use rand::Rng;

/// `A(t) = M₀ + M₁ sin(ω t) + M₂ cos(ω t) + M₃/(1+t²)` with entries in
/// `[−s, s]`.
pub fn random_smooth(rng: &mut impl Rng, space: Space, domain: Interval, s: f64) -> CoefficientPath {
    let r = space.dim();
    let mut mats: Vec<Vec<f64>> = (0..4).map(|_| (0..r * r).map(|_| rng.gen_range(-s..s)).collect()).collect();
    mats[0].iter_mut().for_each(|x| *x *= 0.5);
    let w = rng.gen_range(0.3..2.0);
    CoefficientPath::new(space, domain, move |t| {
        let (a, b, c) = ((w * t).sin(), (w * t).cos(), 1.0 / (1.0 + t * t));
        let e = (0..r * r).map(|k| mats[0][k] + a * mats[1][k] + b * mats[2][k] + c * mats[3][k]).collect();
        Operator::new(space, e).unwrap()
    })
}

/// Classical fixed-step RK4 on `Y' = A Y`, written independently of the
/// library integrator.
pub fn rk4_operator(a: &CoefficientPath, s: f64, t: f64, h: f64) -> Vec<f64> {
    let r = a.space().dim();
    let n = ((t - s).abs() / h).ceil().max(1.0) as usize;
    let dt = (t - s) / n as f64;
    let mut y: Vec<f64> = (0..r * r).map(|k| if k / r == k % r { 1.0 } else { 0.0 }).collect();
    let f = |tau: f64, y: &[f64]| -> Vec<f64> {
        let m = a.value(tau);
        let e = m.entries();
        let mut out = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                out[i * r + j] = (0..r).map(|k| e[i * r + k] * y[k * r + j]).sum();
            }
        }
        out
    };
    let axpy = |y: &[f64], c: f64, k: &[f64]| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    for step in 0..n {
        let tau = s + step as f64 * dt;
        let k1 = f(tau, &y);
        let k2 = f(tau + 0.5 * dt, &axpy(&y, 0.5 * dt, &k1));
        let k3 = f(tau + 0.5 * dt, &axpy(&y, 0.5 * dt, &k2));
        let k4 = f(tau + dt, &axpy(&y, dt, &k3));
        for i in 0..y.len() {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

use evostab_core::calculus::ScalarPath;
use evostab_core::transport::{ConnectionForm, Curve};

/// `ω₁ = P₀ + P₁ sin(x u)`, `ω₂ = M₀ + M₁ sin x + M₂ u cos x`, entries in
/// `[−s, s]`, with the analytic `D₁ω₂`.
pub fn random_connection(rng: &mut impl Rng, space: Space, m: Interval, j: Interval, s: f64) -> ConnectionForm {
    let r = space.dim();
    let mut draw = || -> Vec<f64> { (0..r * r).map(|_| rng.gen_range(-s..s)).collect() };
    let (p0, p1, m0, m1, m2) = (draw(), draw(), draw(), draw(), draw());
    let op = move |e: Vec<f64>| Operator::new(space, e).unwrap();
    let (m1b, m2b) = (m1.clone(), m2.clone());
    ConnectionForm::new(
        space,
        m,
        j,
        move |x, u| op(p0.iter().zip(&p1).map(|(a, b)| a + b * (x * u).sin()).collect()),
        move |x, u| op((0..r * r).map(|k| m0[k] + m1[k] * x.sin() + m2[k] * u * x.cos()).collect()),
    )
    .with_d1_omega2(move |x, u| op((0..r * r).map(|k| m1b[k] * x.cos() - m2b[k] * u * x.sin()).collect()))
}

/// `t ↦ (x0 + (x1−x0)·t, u0 + amp·sin(k t + φ))` on `[0, 1]`.
pub fn wiggle_curve(x0: f64, x1: f64, u0: f64, amp: f64, k: f64, phase: f64) -> Curve {
    let d = Interval::closed(0.0, 1.0);
    Curve::new(
        ScalarPath::linear(0.0, 1.0, x0, x1),
        ScalarPath::new(d, move |t| u0 + amp * (k * t + phase).sin()).with_derivative(move |t| amp * k * (k * t + phase).cos()),
        0.0,
        1.0,
    )
    .unwrap()
}
