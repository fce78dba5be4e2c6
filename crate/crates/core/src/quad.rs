//! Globally adaptive Gauss–Kronrod (7/15) quadrature for scalar and
//! vector-valued integrands.
//!
//! Vector integrands share one adaptive partition: the interval with the
//! largest summed error is bisected first. The final sum runs over the
//! partition in left-to-right order so results do not depend on the order in
//! which intervals were refined.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

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
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_intervals: 4096,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_intervals(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct VecQuadResult {
    pub values: Vec<f64>,
    /// Summed absolute error estimate over all components.
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Segment {
    a: f64,
    b: f64,
    values: Vec<f64>,
    error: f64,
}

struct Worst(f64, usize);

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Worst {}
impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .total_cmp(&other.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

/// Scalar convenience wrapper over [`integrate_vec`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult
where
    F: FnMut(f64) -> f64,
{
    let r = integrate_vec(|x, out: &mut [f64]| out[0] = f(x), 1, &[a, b], opts);
    QuadResult {
        value: r.values[0],
        error: r.error,
        evaluations: r.evaluations,
        converged: r.converged,
    }
}

/// Integrates a vector-valued function over the union of the intervals
/// delimited by `breakpoints` (which must be sorted).
pub fn integrate_vec<F>(mut f: F, dim: usize, breakpoints: &[f64], opts: QuadOptions) -> VecQuadResult
where
    F: FnMut(f64, &mut [f64]),
{
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let mut scratch = vec![0.0; 15 * dim];
    let mut segments: Vec<Segment> = Vec::with_capacity(breakpoints.len() * 2);
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;

    for w in breakpoints.windows(2) {
        let seg = gk15(&mut f, w[0], w[1], dim, &mut scratch);
        evaluations += 15;
        heap.push(Worst(seg.error, segments.len()));
        segments.push(seg);
    }

    let (mut sum, mut err_total) = totals(&segments, dim);
    let mut converged = false;
    let mut since_refresh = 0usize;
    loop {
        if since_refresh >= 256 {
            (sum, err_total) = totals(&segments, dim);
            since_refresh = 0;
        }
        let norm: f64 = sum.iter().map(|v| v.abs()).sum();
        if err_total <= opts.abs_tol.max(opts.rel_tol * norm) {
            converged = true;
            break;
        }
        if segments.len() >= opts.max_intervals {
            break;
        }
        let Some(Worst(_, idx)) = heap.pop() else {
            break;
        };
        let (a, b) = (segments[idx].a, segments[idx].b);
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) || (b - a) <= 4.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) {
            // interval cannot be split any further; drop it from the queue
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = gk15(&mut f, a, mid, dim, &mut scratch);
        let right = gk15(&mut f, mid, b, dim, &mut scratch);
        evaluations += 30;
        let old = &segments[idx];
        err_total += left.error + right.error - old.error;
        for c in 0..dim {
            sum[c] += left.values[c] + right.values[c] - old.values[c];
        }
        heap.push(Worst(left.error, idx));
        segments[idx] = left;
        heap.push(Worst(right.error, segments.len()));
        segments.push(right);
        since_refresh += 1;
    }

    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut values = vec![0.0; dim];
    let mut error = 0.0;
    for s in &segments {
        for (v, sv) in values.iter_mut().zip(&s.values) {
            *v += sv;
        }
        error += s.error;
    }
    VecQuadResult {
        values,
        error,
        evaluations,
        converged,
    }
}

fn totals(segments: &[Segment], dim: usize) -> (Vec<f64>, f64) {
    let mut err = 0.0;
    let mut sum = vec![0.0; dim];
    for s in segments {
        err += s.error;
        for (acc, v) in sum.iter_mut().zip(&s.values) {
            *acc += v;
        }
    }
    (sum, err)
}

fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize, fx: &mut [f64]) -> Segment
where
    F: FnMut(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    // layout: node k (0..7) at center - half*XGK[k], node 7 at center, node 8+k at center + half*XGK[k]
    for k in 0..7 {
        let dx = half * XGK[k];
        f(center - dx, &mut fx[k * dim..(k + 1) * dim]);
        f(center + dx, &mut fx[(8 + k) * dim..(9 + k) * dim]);
    }
    f(center, &mut fx[7 * dim..8 * dim]);

    let mut values = vec![0.0; dim];
    let mut error = 0.0;
    for c in 0..dim {
        let at = |node: usize| fx[node * dim + c];
        let fc = at(7);
        let mut kron = WGK[7] * fc;
        let mut gauss = WG[3] * fc;
        let mut resabs = WGK[7] * fc.abs();
        for k in 0..7 {
            let pair = at(k) + at(8 + k);
            kron += WGK[k] * pair;
            resabs += WGK[k] * (at(k).abs() + at(8 + k).abs());
            if k % 2 == 1 {
                gauss += WG[k / 2] * pair;
            }
        }
        let mean = 0.5 * kron;
        let mut resasc = WGK[7] * (fc - mean).abs();
        for k in 0..7 {
            resasc += WGK[k] * ((at(k) - mean).abs() + (at(8 + k) - mean).abs());
        }
        let result = kron * half;
        let resabs = resabs * half.abs();
        let resasc = resasc * half.abs();
        let mut err = ((kron - gauss) * half).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * resabs);
        }
        if !result.is_finite() || !err.is_finite() {
            err = f64::INFINITY;
        }
        values[c] = result;
        error += err;
    }
    Segment { a, b, values, error }
}

/// Geometric partition of `[lo, hi]` (both positive) into `cells` pieces.
pub fn geometric_edges(lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && cells > 0);
    let (la, lb) = (lo.ln(), hi.ln());
    let mut edges: Vec<f64> = (0..=cells)
        .map(|k| (la + (lb - la) * k as f64 / cells as f64).exp())
        .collect();
    edges[0] = lo;
    edges[cells] = hi;
    edges
}

/// Uniform partition of `[lo, hi]` into `cells` pieces.
pub fn uniform_edges(lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    assert!(hi > lo && cells > 0);
    let mut edges: Vec<f64> = (0..=cells)
        .map(|k| lo + (hi - lo) * k as f64 / cells as f64)
        .collect();
    edges[cells] = hi;
    edges
}

/// Sum in pairwise-tree order; fixed for a given slice length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}
