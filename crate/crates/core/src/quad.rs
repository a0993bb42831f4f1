//! Quadrature and series-acceleration primitives shared by every route.

use std::collections::BinaryHeap;
use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Values a quadrature rule can accumulate: reals and complex numbers.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

// Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of a single quadrature call.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    /// Integral of `|f|` over the interval.
    pub l1: f64,
}

/// One Gauss-Kronrod 15-point application on `[a, b]`.
pub fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> Estimate<T> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = fc.magnitude() * WGK[7];
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kron = kron + (f1 + f2) * WGK[j];
        res_abs += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kron * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).magnitude();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).magnitude() + (fv2[j] - mean).magnitude());
    }
    let habs = h.abs();
    res_abs *= habs;
    res_asc *= habs;
    let mut err = ((kron - gauss) * h).magnitude();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Estimate { value: kron * h, error: err, l1: res_abs }
}

struct Segment<T> {
    a: f64,
    b: f64,
    est: Estimate<T>,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.partial_cmp(&other.est.error).unwrap_or(Ordering::Equal)
    }
}

/// Outcome of an adaptive integration; `converged` is false when the
/// subdivision budget ran out before the tolerance was met.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive<T> {
    pub value: T,
    pub error: f64,
    /// Integral of `|f|`; `64 eps l1` is the rounding floor of the result.
    pub l1: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Globally adaptive Gauss-Kronrod integration on a finite interval.
///
/// Bisects the segment with the largest error estimate until the summed
/// error drops below `max(abs_tol, rel_tol * |I|)` or `max_segments` is hit.
/// The target never goes below the rounding floor `64 eps int |f|`.
pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Adaptive<T> {
    if a == b {
        return Adaptive { value: T::zero(), error: 0.0, l1: 0.0, converged: true, evaluations: 0 };
    }
    let first = gk15(&mut f, a, b);
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    let mut total = first.value;
    let mut total_err = first.error;
    let mut l1 = first.l1;
    heap.push(Segment { a, b, est: first });
    let mut segments = 1;
    loop {
        let target = abs_tol.max(rel_tol * total.magnitude()).max(64.0 * f64::EPSILON * l1);
        if total_err <= target {
            break;
        }
        if segments >= max_segments {
            return Adaptive { value: sum_heap(&heap), error: total_err, l1, converged: false, evaluations: evals };
        }
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // interval at floating-point resolution; cannot refine further
            heap.push(worst);
            return Adaptive { value: sum_heap(&heap), error: total_err, l1, converged: false, evaluations: evals };
        }
        let left = gk15(&mut f, worst.a, m);
        let right = gk15(&mut f, m, worst.b);
        evals += 30;
        total = total - worst.est.value + left.value + right.value;
        total_err = total_err - worst.est.error + left.error + right.error;
        l1 = l1 - worst.est.l1 + left.l1 + right.l1;
        heap.push(Segment { a: worst.a, b: m, est: left });
        heap.push(Segment { a: m, b: worst.b, est: right });
        segments += 1;
    }
    // re-sum to shed accumulated cancellation from the running updates
    let value = sum_heap(&heap);
    let error: f64 = heap.iter().map(|s| s.est.error).sum();
    let l1: f64 = heap.iter().map(|s| s.est.l1).sum();
    Adaptive { value, error, l1, converged: true, evaluations: evals }
}

fn sum_heap<T: QuadValue>(heap: &BinaryHeap<Segment<T>>) -> T {
    let mut segs: Vec<&Segment<T>> = heap.iter().collect();
    segs.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(Ordering::Equal));
    segs.iter().fold(T::zero(), |acc, s| acc + s.est.value)
}

/// Euler transform of an alternating-type series given its terms.
///
/// Uses repeated averaging of partial sums (the van Wijngaarden form of the
/// Euler transformation). Returns the accelerated sum and an error estimate
/// taken from the last two averaging levels.
pub fn euler_sum(terms: &[f64]) -> (f64, f64) {
    if terms.is_empty() {
        return (0.0, 0.0);
    }
    let mut row: Vec<f64> = Vec::with_capacity(terms.len());
    let mut s = 0.0;
    for t in terms {
        s += t;
        row.push(s);
    }
    if row.len() == 1 {
        return (row[0], terms[0].abs());
    }
    // last entry of every averaging level; keep the level where successive
    // levels agree best
    let mut best = row[row.len() - 1];
    let mut err = (row[row.len() - 1] - row[row.len() - 2]).abs();
    let mut last = best;
    while row.len() > 1 {
        let next: Vec<f64> = row.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let cand = next[next.len() - 1];
        let delta = (cand - last).abs();
        if delta <= err {
            err = delta;
            best = cand;
        }
        last = cand;
        row = next;
    }
    (best, err)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}
