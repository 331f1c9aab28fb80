//! Seeded random systems, connections and curves for corpus runs.

use evostab_core::calculus::{Interval, ScalarPath};
use evostab_core::evolution::CoefficientPath;
use evostab_core::operators::{NormKind, Operator, Space};
use evostab_core::transport::{ConnectionForm, Curve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Entry scale of [`smooth_system`] in [`system_corpus`]; keeps `‖X‖` in the
/// tens over the default domain, so defects of `1e-8` stay within reach of
/// the default solver tolerance.
pub const SYSTEM_SCALE: f64 = 0.3;
pub const SYSTEM_DOMAIN: (f64, f64) = (-5.0, 5.0);

/// `A(t) = ½M₀ + M₁ sin(ωt) + M₂ cos(ωt) + M₃/(1+t²)` with entries of `Mₖ`
/// uniform in `[−scale, scale]` and `ω ∈ [0.3, 2)`.
pub fn smooth_system(rng: &mut impl Rng, space: Space, domain: Interval, scale: f64) -> CoefficientPath {
    let r = space.dim();
    let mut mats: Vec<Vec<f64>> = (0..4).map(|_| (0..r * r).map(|_| rng.gen_range(-scale..scale)).collect()).collect();
    mats[0].iter_mut().for_each(|x| *x *= 0.5);
    let w = rng.gen_range(0.3..2.0);
    CoefficientPath::new(space, domain, move |t| {
        let (a, b, c) = ((w * t).sin(), (w * t).cos(), 1.0 / (1.0 + t * t));
        let e = (0..r * r).map(|k| mats[0][k] + a * mats[1][k] + b * mats[2][k] + c * mats[3][k]).collect();
        Operator::new(space, e).expect("finite entries")
    })
}

/// `n` systems with dimensions cycling through 1..=4.
pub fn system_corpus(seed: u64, n: usize, norm: NormKind) -> Vec<CoefficientPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = Interval::closed(SYSTEM_DOMAIN.0, SYSTEM_DOMAIN.1);
    (0..n).map(|k| smooth_system(&mut rng, Space::with_norm(1 + k % 4, norm), domain, SYSTEM_SCALE)).collect()
}

/// `ω₁ = P₀ + P₁ sin(xu)`, `ω₂ = M₀ + M₁ sin x + M₂ u cos x` with entries in
/// `[−scale, scale]` and the analytic `D₁ω₂`. Generic draws are neither flat
/// nor orthogonal.
pub fn random_connection(rng: &mut impl Rng, space: Space, m: Interval, j: Interval, scale: f64) -> ConnectionForm {
    let r = space.dim();
    let mut draw = || -> Vec<f64> { (0..r * r).map(|_| rng.gen_range(-scale..scale)).collect() };
    let (p0, p1, m0, m1, m2) = (draw(), draw(), draw(), draw(), draw());
    let op = move |e: Vec<f64>| Operator::new(space, e).expect("finite entries");
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

/// `n` connections of dimension 1..=3 with scales spread over
/// `[0.01, 0.045]`. The transport bound is doubly exponential in the sampled
/// sups: on `[−2,2]×[−1.5,1.5]` it overflows for unit-length curves from a
/// scale of about 0.06, so the range stops short of that.
pub fn connection_corpus(seed: u64, n: usize, m: Interval, j: Interval) -> Vec<ConnectionForm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let scale = 0.01 + 0.035 * k as f64 / (n.max(2) - 1) as f64;
            random_connection(&mut rng, Space::euclidean(1 + k % 3), m, j, scale)
        })
        .collect()
}

/// `t ↦ (x₀ + (x₁−x₀)t, u₀ + amp·sin(kt + φ))` on `[0, 1]`.
pub fn wiggle_curve(x0: f64, x1: f64, u0: f64, amp: f64, k: f64, phase: f64) -> Curve {
    let d = Interval::closed(0.0, 1.0);
    Curve::new(
        ScalarPath::linear(0.0, 1.0, x0, x1),
        ScalarPath::new(d, move |t| u0 + amp * (k * t + phase).sin()).with_derivative(move |t| amp * k * (k * t + phase).cos()),
        0.0,
        1.0,
    )
    .expect("unit parameter interval")
}

/// Parameters of a wiggle curve inside `M×J`, kept so that the oscillation
/// count can be scaled afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wiggle {
    pub x0: f64,
    pub x1: f64,
    pub u0: f64,
    pub amp: f64,
    pub k: f64,
    pub phase: f64,
}

impl Wiggle {
    pub fn curve(&self) -> Curve {
        wiggle_curve(self.x0, self.x1, self.u0, self.amp, self.k, self.phase)
    }

    /// The same curve with `factor` times as many oscillations in `γ₂`.
    pub fn faster(&self, factor: f64) -> Wiggle {
        Wiggle { k: self.k * factor, ..*self }
    }
}

/// `n` wiggles inside `M×J` with `|x₁ − x₀| ≤ 1`.
pub fn wiggle_corpus(seed: u64, n: usize, m: Interval, j: Interval) -> Vec<Wiggle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x0 = rng.gen_range(m.lo()..m.hi());
            let x1 = (x0 + rng.gen_range(-1.0..1.0)).clamp(m.lo(), m.hi());
            let half = 0.5 * j.length();
            let u0 = j.midpoint() + rng.gen_range(-0.3..0.3) * half;
            let amp = (half - (u0 - j.midpoint()).abs()) * rng.gen_range(0.2..0.95);
            Wiggle { x0, x1, u0, amp, k: rng.gen_range(1.0..20.0), phase: rng.gen_range(0.0..6.2) }
        })
        .collect()
}
