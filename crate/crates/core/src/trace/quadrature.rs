//! Trace integration: trapezoid on the samples, or adaptive Gauss–Kronrod
//! (7/15 points) on a monotone piecewise-cubic interpolant.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{ForceTrace, MIN_SAMPLES};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrationMethod {
    Trapezoid,
    #[default]
    GaussKronrod,
}

/// Absolute tolerance of the adaptive rule, N·s.
pub const GK_TOLERANCE: f64 = 1e-9;

/// Bisections allowed beyond the initial partition.
pub const GK_MAX_SPLITS: usize = 1_000_000;

pub fn integrate_trace(trace: &ForceTrace, method: IntegrationMethod) -> Result<f64> {
    trace.require_samples(MIN_SAMPLES)?;
    Ok(match method {
        IntegrationMethod::Trapezoid => trapezoid(trace),
        IntegrationMethod::GaussKronrod => {
            let interp = Pchip::new(trace.times(), trace.forces());
            gauss_kronrod(|x| interp.eval(x), trace.times(), GK_TOLERANCE, GK_MAX_SPLITS).value
        }
    })
}

/// Integral of the piecewise-linear interpolant over the whole trace.
pub fn trapezoid(trace: &ForceTrace) -> f64 {
    let (t, f) = (trace.times(), trace.forces());
    t.windows(2)
        .zip(f.windows(2))
        .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1]))
        .sum()
}

fn lerp_at(t: &[f64], f: &[f64], x: f64) -> f64 {
    let k = t.partition_point(|&v| v <= x).clamp(1, t.len() - 1) - 1;
    let w = (x - t[k]) / (t[k + 1] - t[k]);
    f[k] + w * (f[k + 1] - f[k])
}

/// Trapezoid integral of the linear interpolant over `[a, b]`, clipped to the
/// sample range. Partitions of `[a, b]` add up.
pub fn trapezoid_between(t: &[f64], f: &[f64], a: f64, b: f64) -> f64 {
    let n = t.len();
    if n < 2 {
        return 0.0;
    }
    let a = a.max(t[0]);
    let b = b.min(t[n - 1]);
    if b <= a {
        return 0.0;
    }
    let fa = lerp_at(t, f, a);
    let fb = lerp_at(t, f, b);
    let ia = t.partition_point(|&v| v <= a);
    let ib = t.partition_point(|&v| v < b);
    if ia >= ib {
        return 0.5 * (b - a) * (fa + fb);
    }
    let mut sum = 0.5 * (t[ia] - a) * (fa + f[ia]);
    for k in ia..ib - 1 {
        sum += 0.5 * (t[k + 1] - t[k]) * (f[k] + f[k + 1]);
    }
    sum + 0.5 * (b - t[ib - 1]) * (f[ib - 1] + fb)
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
pub struct Pchip<'a> {
    x: &'a [f64],
    y: &'a [f64],
    d: Vec<f64>,
}

impl<'a> Pchip<'a> {
    /// `x` strictly increasing, at least two points.
    pub fn new(x: &'a [f64], y: &'a [f64]) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
            return Self { x, y, d };
        }
        for k in 1..n - 1 {
            let (d0, d1) = (delta[k - 1], delta[k]);
            if d0 * d1 > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Self { x, y, d }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let k = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[k + 1] - self.x[k];
        let delta = (self.y[k + 1] - self.y[k]) / h;
        let (d0, d1) = (self.d[k], self.d[k + 1]);
        let c2 = (3.0 * delta - 2.0 * d0 - d1) / h;
        let c3 = (d0 + d1 - 2.0 * delta) / (h * h);
        let s = t - self.x[k];
        self.y[k] + s * (d0 + s * (c2 + s * c3))
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d * del0 <= 0.0 {
        0.0
    } else if del0 * del1 <= 0.0 && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

// QUADPACK tables, kept at their published precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
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

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = r * XGK[i];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * r,
        error: ((kronrod - gauss) * r).abs(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Sum of |K15 − G7| over the final partition.
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

/// Adaptive Gauss–Kronrod over the partition given by `breakpoints`
/// (sorted, at least two). The interval with the largest error estimate is
/// bisected until the summed estimate is below `tolerance` or `max_splits`
/// bisections have been spent.
pub fn gauss_kronrod(
    f: impl Fn(f64) -> f64,
    breakpoints: &[f64],
    tolerance: f64,
    max_splits: usize,
) -> QuadResult {
    assert!(breakpoints.len() >= 2);
    let mut heap: BinaryHeap<Segment> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    let mut frozen = Vec::new();
    let mut error: f64 = heap.iter().map(|s| s.error).sum();
    let mut splits = 0;
    while error > tolerance && splits < max_splits {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            frozen.push(worst);
            continue;
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        splits += 1;
    }
    let mut segments: Vec<Segment> = heap.into_vec();
    segments.extend(frozen);
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let error: f64 = segments.iter().map(|s| s.error).sum();
    QuadResult {
        value: segments.iter().map(|s| s.value).sum(),
        error,
        intervals: segments.len(),
        converged: error <= tolerance,
    }
}
