//! Globally adaptive 7/15-point Gauss-Kronrod integration of two-component integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::QuadratureError;

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
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: [f64; 2],
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

/// Returns the segment and whether its error sits at the rounding floor.
fn gk15<F: Fn(f64) -> [f64; 2]>(f: &F, a: f64, b: f64) -> (Segment, bool) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [fc[0] * WGK[7], fc[1] * WGK[7]];
    let mut g = [fc[0] * WG[3], fc[1] * WG[3]];
    let mut abs = fc[0].abs().max(fc[1].abs()) * WGK[7];
    for i in 0..7 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for q in 0..2 {
            k[q] += WGK[i] * (f1[q] + f2[q]);
            if i % 2 == 1 {
                g[q] += WG[i / 2] * (f1[q] + f2[q]);
            }
        }
        abs += WGK[i] * (f1[0].abs().max(f1[1].abs()) + f2[0].abs().max(f2[1].abs()));
    }
    let value = [k[0] * h, k[1] * h];
    let diff = ((k[0] - g[0]) * h).hypot((k[1] - g[1]) * h);
    let floor = 50.0 * f64::EPSILON * abs * h.abs();
    let seg = Segment {
        a,
        b,
        value,
        error: diff.max(floor),
    };
    (seg, diff <= floor)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Adaptive {
    pub value: [f64; 2],
    pub error: f64,
    pub evaluations: usize,
    /// Integral of the larger component modulus, from the initial partition.
    pub l1: f64,
}

/// Integrate over the partition given by `breaks` until the summed error drops below `tol`.
pub(crate) fn integrate<F: Fn(f64) -> [f64; 2]>(
    f: &F,
    breaks: &[f64],
    tol: f64,
    budget: usize,
) -> Result<Adaptive, QuadratureError> {
    let mut heap = BinaryHeap::new();
    let mut done = Vec::new();
    let mut evaluations = 0usize;
    let mut total_err = 0.0;
    let mut l1 = 0.0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (seg, floor) = gk15(f, w[0], w[1]);
        evaluations += 15;
        total_err += seg.error;
        l1 += seg.value[0].abs().max(seg.value[1].abs());
        if floor {
            done.push(seg);
        } else {
            heap.push(seg);
        }
    }
    let mut passes = 0usize;
    while total_err > tol {
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            done.push(seg);
            continue;
        }
        if evaluations + 30 > budget {
            return Err(QuadratureError::Budget {
                evaluations,
                error: total_err,
            });
        }
        let (left, lf) = gk15(f, seg.a, mid);
        let (right, rf) = gk15(f, mid, seg.b);
        evaluations += 30;
        total_err += left.error + right.error - seg.error;
        for (s, floor) in [(left, lf), (right, rf)] {
            if floor {
                done.push(s);
            } else {
                heap.push(s);
            }
        }
        passes += 1;
        if passes % 1024 == 0 {
            total_err = heap.iter().chain(done.iter()).map(|s| s.error).sum();
        }
    }
    let mut all: Vec<Segment> = heap.into_vec();
    all.extend(done);
    all.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = [0.0, 0.0];
    let mut error = 0.0;
    for s in &all {
        value[0] += s.value[0];
        value[1] += s.value[1];
        error += s.error;
    }
    Ok(Adaptive {
        value,
        error,
        evaluations,
        l1,
    })
}
