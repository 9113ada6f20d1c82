//! Phase boundaries of a recorded collision: contact, detection peak and release.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{ForceTrace, MIN_SAMPLES};
use crate::error::{Error, Result};

/// Samples above the noise floor needed for a sustained rise.
pub const MIN_RUN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub t_contact: f64,
    /// Peak of the ramp after the contact spike.
    pub t1: f64,
    /// Return to the noise floor after `t1`.
    pub t2: f64,
    /// End of the contact spike, when one precedes the ramp.
    pub spike_end: Option<f64>,
    pub noise_mean: f64,
    pub noise_sigma: f64,
    pub threshold: f64,
    /// Force at `t1` from the local fit, N.
    pub peak: f64,
    /// Ramp slope before `t1`, N/s.
    pub ramp_slope: f64,
    /// `c` in `F = peak - c·(t - t1)²` after `t1`, N/s².
    pub decay_curvature: f64,
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Runs of consecutive samples above `threshold`, at least `MIN_RUN` long,
/// with gaps up to `max_gap` samples merged.
fn episodes(f: &[f64], threshold: f64, max_gap: usize) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, &v) in f.iter().enumerate() {
        match (v > threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= MIN_RUN {
                    runs.push((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if f.len() - s >= MIN_RUN {
            runs.push((s, f.len() - 1));
        }
    }
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for run in runs {
        match merged.last_mut() {
            Some(last) if run.0 - last.1 - 1 <= max_gap => last.1 = run.1,
            _ => merged.push(run),
        }
    }
    merged
}

struct Kink {
    t1: f64,
    peak: f64,
    slope: f64,
    curvature: f64,
    rss: f64,
}

/// Least-squares fit of a line up to `tau` joined to a downward parabola with
/// its apex at `tau`.
fn kink_at(t: &[f64], f: &[f64], tau: f64) -> Option<Kink> {
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for (&ti, &fi) in t.iter().zip(f) {
        let d = ti - tau;
        let row = if d < 0.0 {
            Vector3::new(1.0, d, 0.0)
        } else {
            Vector3::new(1.0, 0.0, -d * d)
        };
        ata += row * row.transpose();
        atb += row * fi;
    }
    let x = ata.cholesky()?.solve(&atb);
    let rss = t
        .iter()
        .zip(f)
        .map(|(&ti, &fi)| {
            let d = ti - tau;
            let m = if d < 0.0 { x[0] + x[1] * d } else { x[0] - x[2] * d * d };
            (m - fi).powi(2)
        })
        .sum();
    Some(Kink {
        t1: tau,
        peak: x[0],
        slope: x[1],
        curvature: x[2],
        rss,
    })
}

fn fit_kink(t: &[f64], f: &[f64]) -> Option<Kink> {
    let n = t.len();
    if n < 6 {
        return None;
    }
    let (lo, hi) = (t[1], t[n - 2]);
    let eval = |tau: f64| kink_at(t, f, tau).map_or(f64::INFINITY, |k| k.rss);

    const GRID: usize = 64;
    let step = (hi - lo) / GRID as f64;
    let best = (0..=GRID)
        .map(|i| lo + step * i as f64)
        .map(|tau| (tau, eval(tau)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;

    // golden section inside the neighbouring grid cells
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d);
        }
        if b - a <= 1e-12 * (t[n - 1] - t[0]) {
            break;
        }
    }
    kink_at(t, f, 0.5 * (a + b))
}

/// Splits a single-collision trace into contact, detection and release.
///
/// The noise floor comes from the first 5 % of samples; contact is the first
/// sustained run above `mean + 3σ`. A leading impact spike is skipped, and the
/// ramp peak and the return to the floor are refined by a line/parabola fit
/// around the raw maximum.
pub fn segment_trace(trace: &ForceTrace) -> Result<Segmentation> {
    trace.require_samples(MIN_SAMPLES)?;
    let (t, f) = (trace.times(), trace.forces());
    let n = t.len();

    let window = (n.div_ceil(20)).max(3).min(n);
    let (mu, sigma) = mean_std(&f[..window]);
    let excess_peak = f.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) - mu;
    let floor = (3.0 * sigma).max(1e-6 * excess_peak.max(0.0));
    if excess_peak <= floor || excess_peak <= 0.0 {
        return Err(Error::NoContact);
    }
    let threshold = mu + floor;

    let eps = episodes(f, threshold, (n / 20).max(10));
    let (s, e) = match eps.as_slice() {
        [] => return Err(Error::NoContact),
        [one] => *one,
        many => return Err(Error::AmbiguousContact { episodes: many.len() }),
    };

    let argmax = |from: usize, to: usize| -> usize {
        (from..=to).fold(from, |best, i| if f[i] > f[best] { i } else { best })
    };

    // A spike is a maximum followed, after its decay, by a clear renewed rise.
    let i_max = argmax(s, e);
    let margin = (12.0 * sigma).max(1e-6 * (f[i_max] - mu));
    let mut spike_end = None;
    let mut min_i = i_max;
    for i in i_max + 1..=e {
        if f[i] < f[min_i] {
            min_i = i;
        } else if f[i] > f[min_i] + margin {
            spike_end = Some(min_i);
            break;
        }
    }
    let ramp_start = spike_end.unwrap_or(s);
    let i_pk = argmax(ramp_start, e);

    let i_release = (i_pk + 1..n).find(|&i| f[i] <= threshold).unwrap_or(n - 1);
    let half = mu + 0.5 * (f[i_pk] - mu);
    let i_left = (ramp_start..=i_pk).find(|&i| f[i] >= half).unwrap_or(ramp_start);

    let raw = Segmentation {
        t_contact: t[s],
        t1: t[i_pk],
        t2: t[i_release],
        spike_end: spike_end.map(|i| t[i]),
        noise_mean: mu,
        noise_sigma: sigma,
        threshold,
        peak: f[i_pk],
        ramp_slope: if i_pk > i_left {
            (f[i_pk] - f[i_left]) / (t[i_pk] - t[i_left])
        } else {
            0.0
        },
        decay_curvature: 0.0,
    };

    let Some(kink) = fit_kink(&t[i_left..i_release], &f[i_left..i_release]) else {
        return Ok(raw);
    };
    if !(kink.curvature > 0.0 && kink.peak > mu && kink.slope > 0.0) {
        return Ok(raw);
    }
    let t2 = kink.t1 + ((kink.peak - mu) / kink.curvature).sqrt();
    let mut t_contact = t[s];
    if spike_end.is_none() {
        let t_zero = kink.t1 - (kink.peak - mu) / kink.slope;
        if t_zero.is_finite() && t_zero >= t[0] {
            t_contact = t_contact.min(t_zero);
        }
    }
    if !(t_contact < kink.t1 && kink.t1 < t2) {
        return Ok(raw);
    }
    Ok(Segmentation {
        t_contact,
        t1: kink.t1,
        t2,
        peak: kink.peak,
        ramp_slope: kink.slope,
        decay_curvature: kink.curvature,
        ..raw
    })
}
