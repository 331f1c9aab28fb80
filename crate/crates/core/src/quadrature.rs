//! Globally adaptive Gauss–Kronrod (7/15) quadrature for scalar and
//! vector-valued integrands.
//!
//! The integration range is always pre-split at the caller's breakpoints; the
//! segment with the largest error estimate is bisected until the summed
//! estimate drops below the absolute tolerance, or below the rounding floor
//! [`ROUNDOFF_REL`]·‖value‖ when the tolerance asks for more digits than a
//! double holds.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 20_000;
/// Relative accuracy below which further bisection only chases rounding.
pub const ROUNDOFF_REL: f64 = 1e-13;

fn magnitude(heap: &BinaryHeap<Segment>, dim: usize) -> f64 {
    (0..dim).map(|k| heap.iter().map(|s| s.value[k]).sum::<f64>().abs()).fold(0.0, f64::max)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Absolute error target for the whole integral.
    pub tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { tol: DEFAULT_TOL, max_subdivisions: DEFAULT_MAX_SUBDIVISIONS }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadOptions { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadOutcome {
    pub value: Vec<f64>,
    pub error: f64,
    pub evaluations: usize,
    pub segments: usize,
}

struct Segment {
    lo: f64,
    hi: f64,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F>(f: &F, dim: usize, lo: f64, hi: f64, buf: &mut [f64]) -> (Vec<f64>, f64)
where
    F: Fn(f64, &mut [f64]),
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    let mut abs_k = vec![0.0; dim];
    let mut samples = vec![0.0; 15 * dim];

    f(center, buf);
    samples[..dim].copy_from_slice(buf);
    for (i, x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        f(center - dx, buf);
        samples[(1 + 2 * i) * dim..(2 + 2 * i) * dim].copy_from_slice(buf);
        f(center + dx, buf);
        samples[(2 + 2 * i) * dim..(3 + 2 * i) * dim].copy_from_slice(buf);
    }

    for c in 0..dim {
        let fc = samples[c];
        let mut k = WGK[7] * fc;
        let mut g = WG[3] * fc;
        let mut ak = WGK[7] * fc.abs();
        for i in 0..7 {
            let f1 = samples[(1 + 2 * i) * dim + c];
            let f2 = samples[(2 + 2 * i) * dim + c];
            k += WGK[i] * (f1 + f2);
            ak += WGK[i] * (f1.abs() + f2.abs());
            if i % 2 == 1 {
                g += WG[i / 2] * (f1 + f2);
            }
        }
        kron[c] = k;
        gauss[c] = g;
        abs_k[c] = ak;
    }

    // QUADPACK style error scaling, worst component wins.
    let mut err = 0.0f64;
    for c in 0..dim {
        let mean = 0.5 * kron[c];
        let mut asc = WGK[7] * (samples[c] - mean).abs();
        for i in 0..7 {
            asc += WGK[i]
                * ((samples[(1 + 2 * i) * dim + c] - mean).abs()
                    + (samples[(2 + 2 * i) * dim + c] - mean).abs());
        }
        let asc = asc * half.abs();
        let resabs = abs_k[c] * half.abs();
        let mut e = ((kron[c] - gauss[c]) * half).abs();
        if asc != 0.0 && e != 0.0 {
            e = asc * (200.0 * e / asc).powf(1.5).min(1.0);
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            e = e.max(50.0 * f64::EPSILON * resabs);
        }
        err = err.max(e);
    }
    for k in kron.iter_mut() {
        *k *= half;
    }
    (kron, err)
}

/// Integrates a vector-valued `f` over `[lo, hi]` (either orientation). The
/// integrand writes its `dim` components into the provided buffer.
pub fn integrate_vec<F>(
    f: F,
    dim: usize,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<QuadOutcome>
where
    F: Fn(f64, &mut [f64]),
{
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInterval { lo, hi });
    }
    if lo == hi {
        return Ok(QuadOutcome { value: vec![0.0; dim], error: 0.0, evaluations: 0, segments: 0 });
    }
    if hi < lo {
        let mut out = integrate_vec(f, dim, hi, lo, breakpoints, opts)?;
        for v in out.value.iter_mut() {
            *v = -*v;
        }
        return Ok(out);
    }

    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > lo && b < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(lo);
    nodes.extend(cuts);
    nodes.push(hi);

    let mut buf = vec![0.0; dim];
    let mut heap = BinaryHeap::with_capacity(nodes.len() * 2);
    let mut evaluations = 0usize;
    for w in nodes.windows(2) {
        let (value, error) = gk15(&f, dim, w[0], w[1], &mut buf);
        evaluations += 15;
        heap.push(Segment { lo: w[0], hi: w[1], value, error });
    }

    let initial = heap.len();
    let mut total_err: f64 = heap.iter().map(|s| s.error).sum();
    let mut splits = 0usize;
    let mut target = opts.tol.max(ROUNDOFF_REL * magnitude(&heap, dim));
    while total_err > target {
        if splits >= opts.max_subdivisions {
            return Err(failure(&heap, total_err));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // cannot bisect further in floating point
            heap.push(worst);
            return Err(failure(&heap, total_err));
        }
        let (v1, e1) = gk15(&f, dim, worst.lo, mid, &mut buf);
        let (v2, e2) = gk15(&f, dim, mid, worst.hi, &mut buf);
        evaluations += 30;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { lo: worst.lo, hi: mid, value: v1, error: e1 });
        heap.push(Segment { lo: mid, hi: worst.hi, value: v2, error: e2 });
        splits += 1;
        // refresh the running sum now and then to shed cancellation drift
        if splits % 512 == 0 {
            total_err = heap.iter().map(|s| s.error).sum();
            target = opts.tol.max(ROUNDOFF_REL * magnitude(&heap, dim));
        }
    }

    let segments = heap.len();
    let mut segs = heap.into_vec();
    // summation order fixed by position for reproducibility
    segs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut value = vec![0.0; dim];
    let mut error = 0.0;
    for s in &segs {
        for (acc, v) in value.iter_mut().zip(&s.value) {
            *acc += v;
        }
        error += s.error;
    }
    debug_assert!(segments >= initial);
    Ok(QuadOutcome { value, error, evaluations, segments })
}

fn failure(heap: &BinaryHeap<Segment>, total_err: f64) -> Error {
    let estimate = heap.iter().map(|s| s.value.first().copied().unwrap_or(0.0)).sum();
    Error::QuadratureFailure { estimate, error_bound: total_err }
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate_scalar<F>(f: F, lo: f64, hi: f64, breakpoints: &[f64], opts: QuadOptions) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let out = integrate_vec(|t, buf: &mut [f64]| buf[0] = f(t), 1, lo, hi, breakpoints, opts)?;
    Ok(out.value[0])
}
